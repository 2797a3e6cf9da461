//! The factorization recursion: grouping the full symbol equation
//! `Σ_J ((-i)^|J|/J!) ∂_ξ^J q ∂_x^J q - Σ_J ((-i)^|J|/J!) ∂_ξ^J b ∂_x^J q
//!  - ∂q/∂x_n + c = 0`
//! by homogeneity degree, solving one Sylvester equation per degree, and
//! assembling the boundary symbol table `p_1, p_0, ..., p_{1-M}` from the
//! interior one via `p_1 = A q_1 - d_1`, `p_0 = A q_0 - d_0`,
//! `p_{-m} = A q_{-m}`.

use num_complex::Complex64;

use crate::error::{AlgebraError, SymbolError};
use crate::linalg::CMat;
use crate::operator_symbols::{
    matrix_a, matrix_a_inverse, matrix_d, symbol_b, symbol_c, Frame, SymbolMatrix,
    TangentialBoundarySymbols,
};
use crate::scalar::Scalar;
use crate::symbol_calculus::{compose_terms, structure_matrices, sylvester_solve};

/// Relative tolerance on the principal-symbol verification
/// `q1² - b1 q1 + c2 = 0`.
const Q1_TOLERANCE: f64 = 1e-11;

/// All fixed symbol data of one factorization problem, ready to run the
/// degree recursion.
pub struct Assembler<S: Scalar> {
    pub frame: Frame<S>,
    pub a: SymbolMatrix<S>,
    pub a_inv: SymbolMatrix<S>,
    pub d: TangentialBoundarySymbols<S>,
    pub b1: SymbolMatrix<S>,
    pub b0: SymbolMatrix<S>,
    pub c2: SymbolMatrix<S>,
    pub c1: SymbolMatrix<S>,
    pub c0: SymbolMatrix<S>,
    pub f1: SymbolMatrix<S>,
    pub f2: SymbolMatrix<S>,
}

/// The sequence of interior symbols `q_1 .. q_{1-M}` and boundary symbols
/// `p_1 .. p_{1-M}` produced by one run; `q[l]` and `p[l]` have degree `1-l`.
#[derive(Debug)]
pub struct SymbolTable<S: Scalar> {
    pub q: Vec<SymbolMatrix<S>>,
    pub p: Vec<SymbolMatrix<S>>,
    pub provenance: TableProvenance,
}

/// What a table was computed from.
#[derive(Clone, Debug)]
pub struct TableProvenance {
    pub dimension: usize,
    pub depth: usize,
    pub xi: Vec<Complex64>,
    pub x_order_material: usize,
    pub x_order_metric: usize,
    pub xi_order: usize,
}

impl<S: Scalar> SymbolTable<S> {
    pub fn depth(&self) -> usize {
        self.q.len() - 1
    }

    /// Interior symbol of the given degree (`1` down to `1 - depth`).
    pub fn q_of_degree(&self, degree: i32) -> Option<&SymbolMatrix<S>> {
        let idx = 1 - degree;
        if (0..self.q.len() as i32).contains(&idx) {
            Some(&self.q[idx as usize])
        } else {
            None
        }
    }

    pub fn p_of_degree(&self, degree: i32) -> Option<&SymbolMatrix<S>> {
        let idx = 1 - degree;
        if (0..self.p.len() as i32).contains(&idx) {
            Some(&self.p[idx as usize])
        } else {
            None
        }
    }

    /// Value matrices of the boundary symbols, highest degree first.
    pub fn p_values(&self) -> Vec<(i32, CMat)> {
        self.p
            .iter()
            .enumerate()
            .map(|(l, m)| (1 - l as i32, m.value_matrix()))
            .collect()
    }

    pub fn q_values(&self) -> Vec<(i32, CMat)> {
        self.q
            .iter()
            .enumerate()
            .map(|(l, m)| (1 - l as i32, m.value_matrix()))
            .collect()
    }
}

impl<S: Scalar> Assembler<S> {
    pub fn new(frame: Frame<S>) -> Result<Self, SymbolError> {
        let a = matrix_a(&frame);
        let a_inv = matrix_a_inverse(&frame);
        let d = matrix_d(&frame);
        let (b1, b0) = symbol_b(&frame)?;
        let (c2, c1, c0) = symbol_c(&frame)?;
        let (f1, f2) = structure_matrices(&frame)?;
        Ok(Self {
            frame,
            a,
            a_inv,
            d,
            b1,
            b0,
            c2,
            c1,
            c0,
            f1,
            f2,
        })
    }

    /// Principal interior symbol `q1 = |ξ| I + κ F1`, verified against the
    /// degree-two grouping `q1² - b1 q1 + c2 = 0`.
    pub fn principal_symbol(&self) -> Result<SymbolMatrix<S>, SymbolError> {
        let f = &self.frame;
        let mut q1 = self.f1.mul_jet(&f.kappa);
        let norm = f.xi.norm();
        for i in 0..f.sys_dim() {
            q1.add_to(i, i, norm);
        }
        let sq = q1.matmul(&q1);
        let bq = self.b1.matmul(&q1).with_degree(2);
        let residual = sq.sub(&bq).add(&self.c2);
        // Gate at value level: transcription bugs show up at O(1) there,
        // while the all-orders jet residual is covered by the grouped
        // degree-2 residual check with its own tolerance.
        let rv = residual.value_matrix().frobenius();
        let scale = sq
            .value_matrix()
            .frobenius()
            .max(bq.value_matrix().frobenius())
            .max(self.c2.value_matrix().frobenius());
        let rel = rv / scale.max(1e-300);
        let tolerance = if S::EXACT { 0.0 } else { Q1_TOLERANCE };
        if rel > tolerance {
            return Err(SymbolError::ResidualTooLarge {
                what: "principal symbol verification",
                residual: rel,
                tolerance: Q1_TOLERANCE,
            });
        }
        Ok(q1)
    }

    /// Degree-`d` grouping of the full symbol equation over the symbols in
    /// `qs` (where `qs[l]` has degree `1-l`). Returns the grouped sum and the
    /// magnitude of the largest contributing term, for relative residuals.
    ///
    /// With all symbols through `q_{d-1}` present this is the equation
    /// residual at degree `d`; with `q_{d-1}` absent its negative is the
    /// Sylvester right-hand side for `q_{d-1}`.
    fn grouped_terms(
        &self,
        qs: &[SymbolMatrix<S>],
        degree: i32,
    ) -> Result<(SymbolMatrix<S>, f64), SymbolError> {
        let mut acc = self.frame.zero_matrix(degree);
        let mut scale = 0.0f64;
        let mut push = |acc: &mut SymbolMatrix<S>, t: SymbolMatrix<S>| {
            scale = scale.max(t.max_abs());
            *acc = acc.add_inhomogeneous(&t);
        };

        // [q ∘ q] at this degree.
        for qj in qs {
            for qk in qs {
                if qj.degree() + qk.degree() < degree {
                    continue;
                }
                push(&mut acc, compose_terms(qj, qk, degree)?.with_degree(degree));
            }
        }
        // -[b ∘ q]: b1 is linear and b0 constant in ξ, so only |J| <= 1 and
        // |J| = 0 terms survive.
        for qk in qs {
            let j1 = 1 + qk.degree() - degree;
            if (0..=1).contains(&j1) {
                push(
                    &mut acc,
                    compose_terms(&self.b1, qk, degree)?.neg().with_degree(degree),
                );
            }
            if qk.degree() == degree {
                push(
                    &mut acc,
                    self.b0.matmul(qk).neg().with_degree(degree),
                );
            }
        }
        // -∂q_d/∂x_n.
        let idx = 1 - degree;
        if (0..qs.len() as i32).contains(&idx) {
            push(
                &mut acc,
                qs[idx as usize].dx(self.frame.n - 1)?.neg(),
            );
        }
        // + c_d.
        match degree {
            2 => push(&mut acc, self.c2.clone()),
            1 => push(&mut acc, self.c1.clone()),
            0 => push(&mut acc, self.c0.clone()),
            _ => {}
        }
        Ok((acc, scale))
    }

    /// Right-hand side `E_d` of the Sylvester equation
    /// `(q1 - b1) q_{d-1} + q_{d-1} q1 = E_d`, assembled from the symbols
    /// known so far (`qs` must contain exactly `q_1 .. q_d`).
    pub fn transport_rhs(
        &self,
        qs: &[SymbolMatrix<S>],
        degree: i32,
    ) -> Result<SymbolMatrix<S>, SymbolError> {
        assert_eq!(
            qs.len() as i32,
            2 - degree,
            "need q_1 .. q_{} to assemble E_{}",
            degree,
            degree
        );
        let (sum, _) = self.grouped_terms(qs, degree)?;
        Ok(sum.neg())
    }

    /// Relative residual of the full symbol equation at the given degree,
    /// with all symbols known: the grouped terms must cancel.
    pub fn degree_residual(
        &self,
        table: &SymbolTable<S>,
        degree: i32,
    ) -> Result<f64, SymbolError> {
        assert!(
            degree >= 2 - table.q.len() as i32,
            "table too shallow for degree {degree}"
        );
        let (sum, scale) = self.grouped_terms(&table.q, degree)?;
        Ok(sum.max_abs() / scale.max(1e-300))
    }

    /// Run the recursion to the requested depth and assemble the boundary
    /// table. `depth = M` produces `q_1 .. q_{1-M}` and `p_1 .. p_{1-M}`.
    pub fn build_table(&self, depth: usize) -> Result<SymbolTable<S>, SymbolError> {
        let f = &self.frame;
        let need_mat = depth + 1;
        let need_met = depth + 2;
        let need_xi = depth + 2;
        if f.material.order() < need_mat || f.metric.order() < need_met || f.lxi < need_xi {
            return Err(SymbolError::Algebra(AlgebraError::InsufficientJetOrder {
                need_x: need_mat.max(need_met),
                need_xi,
                have_x: f.material.order().min(f.metric.order()),
                have_xi: f.lxi,
            }));
        }
        let mut qs = vec![self.principal_symbol()?];
        for level in 1..=depth {
            let degree = 2 - level as i32;
            let e = self.transport_rhs(&qs, degree)?;
            let q_next = sylvester_solve(f, &self.f1, &self.f2, &e)?;
            qs.push(q_next);
        }
        let mut ps = Vec::with_capacity(qs.len());
        for (l, q) in qs.iter().enumerate() {
            let mut p = self.a.matmul(q);
            if l == 0 {
                p = p.sub(&self.d.d1);
            } else if l == 1 {
                p = p.sub(&self.d.d0);
            }
            ps.push(p);
        }
        Ok(SymbolTable {
            q: qs,
            p: ps,
            provenance: TableProvenance {
                dimension: f.n,
                depth,
                xi: f.base().iter().map(|s| s.to_c64()).collect(),
                x_order_material: f.material.order(),
                x_order_metric: f.metric.order(),
                xi_order: f.lxi,
            },
        })
    }
}

/// The closed-form principal boundary symbol, transcribed independently of
/// the recursion; the assembled `p_1` must match it entrywise.
pub fn p1_closed_form<S: Scalar>(f: &Frame<S>) -> Result<SymbolMatrix<S>, SymbolError> {
    let nn = f.n - 1;
    let norm_i = f.n - 1;
    let th = f.n;
    let norm = f.xi.norm();
    let inv_norm = f.xi.recip_norm().map_err(SymbolError::Algebra)?;
    let two = S::from_i64(2);
    let mut p1 = f.zero_matrix(1);
    let mu_kappa_over_norm = &(&f.mu * &f.kappa) * &inv_norm;
    let two_mu2_over_l3m = (&(&f.mu * &f.mu) * &f.inv_lam_p_3mu).mul_scalar(&two);
    for a in 0..nn {
        for b in 0..nn {
            let mut e = &(&mu_kappa_over_norm * f.xi.up(a)) * f.xi.down(b);
            if a == b {
                e = &e + &(&f.mu * norm);
            }
            p1.set(a, b, e);
        }
        p1.set(a, norm_i, -&(&two_mu2_over_l3m * f.xi.up(a)).mul_i());
        p1.set(norm_i, a, (&two_mu2_over_l3m * f.xi.down(a)).mul_i());
    }
    p1.set(
        norm_i,
        norm_i,
        &(&(&f.mu.mul_scalar(&two) * &f.lam_p_2mu) * &f.inv_lam_p_3mu) * norm,
    );
    p1.set(th, th, &f.alpha * norm);
    Ok(p1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::TaylorJet;
    use crate::geometry::MetricJet;
    use crate::material::MaterialJet;
    use crate::symbol_calculus::hermitian_part_positive;

    type A = Assembler<Complex64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn canonical(beta: f64, omega: f64, orders: usize, lxi: usize) -> A {
        let g = MetricJet::euclidean(2, orders + 1);
        let m = MaterialJet::constants(2, orders, 0.0, 1.0, 1.0, beta)
            .unwrap()
            .with_constants(1.0, omega, 1.0, 1.0);
        Assembler::new(Frame::new(&g, &m, &[c(1.0, 0.0)], lxi).unwrap()).unwrap()
    }

    #[test]
    fn principal_symbol_canonical_values() {
        let asm = canonical(0.0, 0.0, 3, 3);
        let q1 = asm.principal_symbol().unwrap();
        let v = q1.value_matrix();
        let exp = [
            [c(4.0 / 3.0, 0.0), c(0.0, 1.0 / 3.0), c(0.0, 0.0)],
            [c(0.0, 1.0 / 3.0), c(2.0 / 3.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((v[(i, j)] - exp[i][j]).norm() < 1e-13, "q1 ({i},{j})");
            }
        }
    }

    #[test]
    fn principal_symbol_degenerate_lame_sum() {
        // λ + μ = 0 collapses q1 to |ξ| I.
        let g = MetricJet::euclidean(2, 3);
        let m = MaterialJet::constants(2, 3, -1.0, 1.0, 1.0, 0.0).unwrap();
        let asm = Assembler::new(Frame::new(&g, &m, &[c(2.0, 0.0)], 3).unwrap()).unwrap();
        let q1 = asm.principal_symbol().unwrap();
        let v = q1.value_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let exp = if i == j { c(2.0, 0.0) } else { c(0.0, 0.0) };
                assert!((v[(i, j)] - exp).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn principal_symbol_homogeneity() {
        let asm1 = canonical(0.5, 0.0, 3, 3);
        let g = MetricJet::euclidean(2, 4);
        let m = MaterialJet::constants(2, 3, 0.0, 1.0, 1.0, 0.5).unwrap();
        let asm2 = Assembler::new(Frame::new(&g, &m, &[c(2.0, 0.0)], 3).unwrap()).unwrap();
        let v1 = asm1.principal_symbol().unwrap().value_matrix();
        let v2 = asm2.principal_symbol().unwrap().value_matrix();
        assert!(v2.sub(&v1.scale(c(2.0, 0.0))).max_abs() < 1e-12);
    }

    #[test]
    fn transport_rhs_degree_one_closed_form() {
        // Flat constants, ω = 0: E1 = b0 q1 - c1 lands entirely in the
        // thermal column.
        let beta = 1.7;
        let asm = canonical(beta, 0.0, 4, 4);
        let q1 = asm.principal_symbol().unwrap();
        let e1 = asm.transport_rhs(&[q1], 1).unwrap();
        let v = e1.value_matrix();
        let exp = [
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, beta)],
            [c(0.0, 0.0), c(0.0, 0.0), c(-beta / 2.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (v[(i, j)] - exp[i][j]).norm() < 1e-13,
                    "E1 ({i},{j}) = {}",
                    v[(i, j)]
                );
            }
        }
    }

    #[test]
    fn table_thermal_structure_and_p0_entry() {
        // q0 thermal column from the closed form; p0's (n, n+1) entry is
        // βμ/(λ+3μ).
        let beta = 1.7;
        let asm = canonical(beta, 0.0, 4, 4);
        let table = asm.build_table(2).unwrap();
        let q0 = table.q_of_degree(0).unwrap().value_matrix();
        assert!((q0[(0, 2)] - c(0.0, beta / 3.0)).norm() < 1e-13);
        assert!((q0[(1, 2)] - c(-beta / 3.0, 0.0)).norm() < 1e-13);
        let p0 = table.p_of_degree(0).unwrap().value_matrix();
        assert!((p0[(1, 2)] - c(beta / 3.0, 0.0)).norm() < 1e-13);
        // Elastic, flat, constant, ω = 0: everything else in q0 vanishes.
        for i in 0..3 {
            for j in 0..2 {
                assert!(q0[(i, j)].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn assembled_p1_matches_closed_form() {
        let asm = canonical(0.9, 0.3, 4, 4);
        let table = asm.build_table(1).unwrap();
        let p1 = table.p_of_degree(1).unwrap();
        let closed = p1_closed_form(&asm.frame).unwrap();
        let v = p1.value_matrix();
        let exp = [
            [c(4.0 / 3.0, 0.0), c(0.0, -2.0 / 3.0), c(0.0, 0.0)],
            [c(0.0, 2.0 / 3.0), c(4.0 / 3.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((v[(i, j)] - exp[i][j]).norm() < 1e-13, "p1 ({i},{j})");
            }
        }
        // Entrywise through all carried jet orders, not just values.
        let d = p1.sub(&closed);
        assert!(d.max_abs() < 1e-12 * closed.max_abs());
        assert!(hermitian_part_positive(&p1.value_matrix()));
    }

    #[test]
    fn full_symbol_residuals_flat_constants() {
        let asm = canonical(1.2, 0.3, 6, 6);
        let table = asm.build_table(4).unwrap();
        for degree in [2, 1, 0, -1, -2] {
            let r = asm.degree_residual(&table, degree).unwrap();
            assert!(r < 1e-11, "degree {degree} residual {r}");
        }
    }

    #[test]
    fn full_symbol_residuals_warped_metric() {
        let one = TaylorJet::constant(2, 7, c(1.0, 0.0));
        let xn = TaylorJet::x_var(2, 7, 1);
        let w = &one + &xn.mul_scalar(&c(0.4, 0.0));
        let g = MetricJet::warped_product(2, 7, &w).unwrap();
        let lam = TaylorJet::poly_xn(2, 6, &[c(0.4, 0.0), c(0.3, 0.0), c(-0.2, 0.0)]);
        let mu = TaylorJet::poly_xn(2, 6, &[c(1.1, 0.0), c(-0.25, 0.0), c(0.1, 0.0)]);
        let alpha = TaylorJet::poly_xn(2, 6, &[c(0.8, 0.0), c(0.5, 0.0)]);
        let beta = TaylorJet::poly_xn(2, 6, &[c(0.9, 0.0), c(-0.3, 0.0)]);
        let m = MaterialJet::new(lam, mu, alpha, beta, 1.0, 0.3, 1.0, 1.0).unwrap();
        let asm = Assembler::new(Frame::new(&g, &m, &[c(1.3, 0.0)], 6).unwrap()).unwrap();
        let table = asm.build_table(4).unwrap();
        for degree in [2, 1, 0, -1, -2] {
            let r = asm.degree_residual(&table, degree).unwrap();
            assert!(r < 1e-9, "degree {degree} residual {r}");
        }
    }

    #[test]
    fn principal_symbol_normal_derivative_matches_finite_difference() {
        // Warped metric: ∂q1/∂x_n from the jet against a centred difference
        // of q1 built on shifted metrics.
        let build = |x0: f64| -> CMat {
            let one = TaylorJet::constant(2, 4, c(1.0, 0.0));
            let xn = TaylorJet::x_var(2, 4, 1);
            // w(x_n) = 1 + 0.4 (x0 + x_n): re-centred warp factor.
            let shifted = one.mul_scalar(&c(1.0 + 0.4 * x0, 0.0));
            let w = &shifted + &xn.mul_scalar(&c(0.4, 0.0));
            let g = MetricJet::warped_product(2, 4, &w).unwrap();
            let m = MaterialJet::constants(2, 4, 0.6, 1.1, 1.0, 0.4).unwrap();
            let asm =
                Assembler::new(Frame::new(&g, &m, &[c(1.0, 0.0)], 2).unwrap()).unwrap();
            asm.principal_symbol().unwrap().value_matrix()
        };
        let h = 1e-5;
        let fd = build(h).sub(&build(-h)).scale(c(1.0 / (2.0 * h), 0.0));

        let one = TaylorJet::constant(2, 4, c(1.0, 0.0));
        let xn = TaylorJet::x_var(2, 4, 1);
        let w = &one + &xn.mul_scalar(&c(0.4, 0.0));
        let g = MetricJet::warped_product(2, 4, &w).unwrap();
        let m = MaterialJet::constants(2, 4, 0.6, 1.1, 1.0, 0.4).unwrap();
        let asm = Assembler::new(Frame::new(&g, &m, &[c(1.0, 0.0)], 2).unwrap()).unwrap();
        let dq = asm
            .principal_symbol()
            .unwrap()
            .dx(1)
            .unwrap()
            .value_matrix();
        assert!(dq.sub(&fd).max_abs() < 1e-8, "{}", dq.sub(&fd).max_abs());
    }

    #[test]
    fn transport_rhs_matches_literal_enumerator() {
        // Independent enumeration of the degree -1 right-hand side: the
        // b-terms plus the pair sum over -1 <= j,k <= 1 with |J| = j+k+1,
        // written with its own loops rather than the grouped-terms engine.
        let one = TaylorJet::constant(2, 6, c(1.0, 0.0));
        let xn = TaylorJet::x_var(2, 6, 1);
        let w = &one + &xn.mul_scalar(&c(0.35, 0.0));
        let g = MetricJet::warped_product(2, 6, &w).unwrap();
        let lam = TaylorJet::poly_xn(2, 5, &[c(0.5, 0.0), c(0.2, 0.0)]);
        let mu = TaylorJet::poly_xn(2, 5, &[c(1.0, 0.0), c(-0.1, 0.0)]);
        let alpha = TaylorJet::poly_xn(2, 5, &[c(1.2, 0.0), c(0.3, 0.0)]);
        let beta = TaylorJet::poly_xn(2, 5, &[c(0.7, 0.0), c(0.1, 0.0)]);
        let m = MaterialJet::new(lam, mu, alpha, beta, 1.0, 0.2, 1.0, 1.0).unwrap();
        let asm = Assembler::new(Frame::new(&g, &m, &[c(1.0, 0.0)], 5).unwrap()).unwrap();
        let table = asm.build_table(2).unwrap();
        let qs = &table.q;

        let engine = asm.transport_rhs(&qs[..3], -1).unwrap();

        // Literal form: E_{-1} = b0 q_{-1} + ∂q_{-1}/∂x_n
        //   - i Σ_α ∂b1/∂ξ_α ∂q_{-1}/∂x_α
        //   - Σ_{-1<=j,k<=1, |J|=j+k+1} ((-i)^|J|/J!) ∂_ξ^J q_j ∂_x^J q_k.
        let m_dim = 1; // tangential directions for n = 2
        let qm = &qs[2];
        let mut lit = asm.b0.matmul(qm).with_degree(-1);
        lit = lit.add_inhomogeneous(&qm.dx(1).unwrap());
        for a in 0..m_dim {
            let t = asm
                .b1
                .dxi(a)
                .unwrap()
                .matmul(&qm.dx(a).unwrap())
                .mul_scalar(&c(0.0, 1.0));
            lit = lit.add_inhomogeneous(&t.neg().with_degree(-1));
        }
        for (lj, qj) in qs.iter().enumerate() {
            for (lk, qk) in qs.iter().enumerate() {
                let j = 1 - lj as i32;
                let k = 1 - lk as i32;
                let order = j + k + 1;
                if order < 0 {
                    continue;
                }
                for j_idx in crate::algebra::indices_of_degree(m_dim, order as usize) {
                    let mut da = qj.clone();
                    let mut db = qk.clone();
                    let mut fact = 1i64;
                    for (dir, &cnt) in j_idx.iter().enumerate() {
                        for t in 0..cnt {
                            da = da.dxi(dir).unwrap();
                            db = db.dx(dir).unwrap();
                            fact *= (t + 1) as i64;
                        }
                    }
                    let phase = match order % 4 {
                        0 => c(1.0, 0.0),
                        1 => c(0.0, -1.0),
                        2 => c(-1.0, 0.0),
                        _ => c(0.0, 1.0),
                    };
                    let weight = phase / fact as f64;
                    let term = da.matmul(&db).mul_scalar(&weight);
                    lit = lit.add_inhomogeneous(&term.neg().with_degree(-1));
                }
            }
        }
        let d = engine.sub(&lit);
        assert!(
            d.max_abs() < 1e-11 * engine.max_abs().max(1.0),
            "enumerator mismatch {}",
            d.max_abs()
        );
    }

    #[test]
    fn exact_mode_residuals_are_identically_zero() {
        // Rational scalars on a flat metric with a Pythagorean base covector:
        // every grouped residual vanishes exactly, and the canonical Sylvester
        // spot values come out as exact rationals.
        use crate::scalar::ExactComplex;
        type E = ExactComplex;
        let g = MetricJet::<E>::euclidean(3, 6);
        let r = |num: i64, den: i64| E::from_ratio(num, den);
        let lam = TaylorJet::poly_xn(3, 5, &[r(1, 2), r(1, 4)]);
        let mu = TaylorJet::poly_xn(3, 5, &[r(1, 1), r(-1, 8)]);
        let alpha = TaylorJet::poly_xn(3, 5, &[r(5, 4), r(1, 2)]);
        let beta = TaylorJet::poly_xn(3, 5, &[r(3, 4), r(1, 8)]);
        let m = MaterialJet::new(lam, mu, alpha, beta, 1.0, 0.5, 1.0, 1.0).unwrap();
        let f = Frame::new(&g, &m, &[r(3, 1), r(4, 1)], 5).unwrap();
        let asm = Assembler::new(f).unwrap();
        let table = asm.build_table(3).unwrap();
        for degree in [2, 1, 0, -1] {
            let (sum, _) = asm.grouped_terms(&table.q, degree).unwrap();
            assert!(sum.is_all_zero(), "degree {degree} not exactly zero");
        }
        // Structure identities, exactly.
        assert!(asm.f1.matmul(&asm.f1).is_all_zero());
        assert!(asm.f2.matmul(&asm.f2).is_all_zero());
        let q1 = asm.principal_symbol().unwrap();
        let norm = asm.frame.xi.norm();
        let mut expect = asm.f2.mul_jet(&asm.frame.kappa);
        for i in 0..4 {
            expect.add_to(i, i, norm);
        }
        let diff = q1.sub(&asm.b1.with_degree(1)).sub(&expect);
        assert!(diff.is_all_zero(), "q1 - b1 = |xi| I + kappa F2 exactly");
    }

    #[test]
    fn order_budget_fails_fast() {
        let asm = canonical(0.0, 0.0, 3, 3);
        let err = asm.build_table(3).unwrap_err();
        assert!(matches!(
            err,
            SymbolError::Algebra(AlgebraError::InsufficientJetOrder { .. })
        ));
    }
}
