//! Every matrix the conjugated thermoelastic operator contributes, built from
//! geometry and material data over the bivariate jet algebra: the boundary
//! coefficient `A`, the tangential boundary operator split `d = d1 + d0`, and
//! the interior symbol families `b = b1 + b0`, `c = c2 + c1 + c0` of
//! `A^{-1} T_g = ∂_n² + B ∂_n + C`.
//!
//! The long first-order and zeroth-order matrices are transcribed literally;
//! their defense against transcription drift is the operator-level
//! consistency check in the oracle module, which applies `A(∂_n² + B∂_n + C)`
//! and the thermoelastic operator itself to the same plane-wave fields and
//! compares jets.

use crate::algebra::{BaseCovector, BiJet};
use crate::error::SymbolError;
use crate::geometry::{Christoffels, Covector, MetricJet};
use crate::linalg::CMat;
use crate::material::MaterialJet;
use crate::scalar::Scalar;

/// Square matrix of bivariate jets with a declared homogeneity degree in the
/// tangential covector.
///
/// Rows and columns `0..n-1` are tangential, `n-1` is normal, `n` is thermal.
#[derive(Clone, Debug)]
pub struct SymbolMatrix<S: Scalar> {
    degree: i32,
    dim: usize,
    entries: Vec<BiJet<S>>,
}

impl<S: Scalar> SymbolMatrix<S> {
    pub fn zero(degree: i32, dim: usize, n: usize, kx: usize, lxi: usize) -> Self {
        Self {
            degree,
            dim,
            entries: vec![BiJet::zero(n, kx, lxi); dim * dim],
        }
    }

    pub fn from_entries(degree: i32, dim: usize, entries: Vec<BiJet<S>>) -> Self {
        assert_eq!(entries.len(), dim * dim);
        Self {
            degree,
            dim,
            entries,
        }
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn with_degree(mut self, degree: i32) -> Self {
        self.degree = degree;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &BiJet<S> {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BiJet<S>) {
        self.entries[i * self.dim + j] = v;
    }

    /// Add into an entry.
    pub fn add_to(&mut self, i: usize, j: usize, v: &BiJet<S>) {
        self.entries[i * self.dim + j] = &self.entries[i * self.dim + j] + v;
    }

    pub fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.degree, rhs.degree, "adding mixed-degree symbols");
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.degree, rhs.degree, "subtracting mixed-degree symbols");
        self.zip(rhs, |a, b| a - b)
    }

    /// Sum without the degree bookkeeping check, for assembling full
    /// (inhomogeneous) symbols; keeps the left degree.
    pub fn add_inhomogeneous(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }

    fn zip<F: Fn(&BiJet<S>, &BiJet<S>) -> BiJet<S>>(&self, rhs: &Self, f: F) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self {
            degree: self.degree,
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(rhs.entries.iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            degree: self.degree,
            dim: self.dim,
            entries: self.entries.iter().map(|e| -e).collect(),
        }
    }

    /// Plain matrix product; degrees add.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut acc: Option<BiJet<S>> = None;
                for k in 0..d {
                    let a = self.get(i, k);
                    if a.is_all_zero() {
                        continue;
                    }
                    let b = rhs.get(k, j);
                    if b.is_all_zero() {
                        continue;
                    }
                    let term = a * b;
                    acc = Some(match acc {
                        None => term,
                        Some(s) => &s + &term,
                    });
                }
                entries.push(acc.unwrap_or_else(|| {
                    let probe = self.get(i, 0);
                    BiJet::zero(probe.dim(), probe.x_order(), probe.xi_order())
                }));
            }
        }
        Self {
            degree: self.degree + rhs.degree,
            dim: d,
            entries,
        }
    }

    pub fn mul_jet(&self, j: &BiJet<S>) -> Self {
        Self {
            degree: self.degree,
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * j).collect(),
        }
    }

    pub fn mul_scalar(&self, s: &S) -> Self {
        Self {
            degree: self.degree,
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.mul_scalar(s)).collect(),
        }
    }

    /// Entrywise space derivative; degree unchanged.
    pub fn dx(&self, v: usize) -> Result<Self, SymbolError> {
        Ok(Self {
            degree: self.degree,
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|e| e.dx(v))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Entrywise covector derivative; lowers the degree by one.
    pub fn dxi(&self, a: usize) -> Result<Self, SymbolError> {
        Ok(Self {
            degree: self.degree - 1,
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|e| e.dxi(a))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Value matrix at the base point and base covector.
    pub fn value_matrix(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.get(i, j).value().to_c64();
            }
        }
        m
    }

    /// Largest coefficient modulus over all entries and carried orders.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_all_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_all_zero())
    }

    /// Minimum carried orders over the entries.
    pub fn orders(&self) -> (usize, usize) {
        self.entries
            .iter()
            .fold((usize::MAX, usize::MAX), |acc, e| {
                (acc.0.min(e.x_order()), acc.1.min(e.xi_order()))
            })
    }

    /// Truncate all entries to common orders.
    pub fn truncate(&self, kx: usize, lxi: usize) -> Self {
        Self {
            degree: self.degree,
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.truncate(kx, lxi)).collect(),
        }
    }
}

/// Largest value-level deviation `max |a_ij - b_ij|` between a symbol matrix
/// and a reference complex matrix.
pub fn value_distance<S: Scalar>(a: &SymbolMatrix<S>, b: &CMat) -> f64 {
    let va = a.value_matrix();
    let mut worst = 0.0f64;
    for i in 0..va.rows() {
        for j in 0..va.cols() {
            worst = worst.max((va[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// Precomputed, lifted geometric and material data at one base point and
/// base covector: everything the symbol builders and the factorization
/// recursion consume.
pub struct Frame<S: Scalar> {
    pub n: usize,
    pub kx: usize,
    pub lxi: usize,
    pub metric: MetricJet<S>,
    pub material: MaterialJet<S>,
    pub gamma: Christoffels<S>,
    pub xi: Covector<S>,
    ginv: Vec<BiJet<S>>,
    gamma_l: Vec<BiJet<S>>,
    pub lam: BiJet<S>,
    pub mu: BiJet<S>,
    pub alpha: BiJet<S>,
    pub beta: BiJet<S>,
    pub lam_p_mu: BiJet<S>,
    pub lam_p_2mu: BiJet<S>,
    pub lam_p_3mu: BiJet<S>,
    pub inv_mu: BiJet<S>,
    pub inv_lam_p_2mu: BiJet<S>,
    pub inv_lam_p_3mu: BiJet<S>,
    pub inv_alpha: BiJet<S>,
    /// `(λ+μ)/(λ+3μ)`, the structure-matrix weight.
    pub kappa: BiJet<S>,
    pub rho: S,
    pub omega: S,
    pub theta0: S,
    pub c_heat: S,
}

impl<S: Scalar> Frame<S> {
    /// Assemble a frame; `xi` is the base covector (length n-1), `lxi` the
    /// covector expansion order carried through the computation.
    pub fn new(
        metric: &MetricJet<S>,
        material: &MaterialJet<S>,
        xi: &[S],
        lxi: usize,
    ) -> Result<Self, SymbolError> {
        material.validate()?;
        let n = metric.dim();
        assert_eq!(material.dim(), n, "metric and material dimension");
        let gamma = metric.christoffel()?;
        let cov = metric.covector_package(xi, lxi)?;
        let ginv_t = metric.inverse_metric()?;
        let ginv: Vec<BiJet<S>> = ginv_t.iter().map(|j| j.lift(lxi)).collect();
        let mut gamma_l = Vec::with_capacity(n * n * n);
        for mm in 0..n {
            for j in 0..n {
                for k in 0..n {
                    gamma_l.push(gamma.get(mm, j, k).lift(lxi));
                }
            }
        }
        let lam = material.lambda.lift(lxi);
        let mu = material.mu.lift(lxi);
        let alpha = material.alpha.lift(lxi);
        let beta = material.beta.lift(lxi);
        let lam_p_mu = &lam + &mu;
        let lam_p_2mu = &lam + &mu.mul_scalar(&S::from_i64(2));
        let lam_p_3mu = &lam + &mu.mul_scalar(&S::from_i64(3));
        let inv_mu = mu.recip().map_err(SymbolError::Algebra)?;
        let inv_lam_p_2mu = lam_p_2mu.recip().map_err(SymbolError::Algebra)?;
        let inv_lam_p_3mu = lam_p_3mu.recip().map_err(SymbolError::Algebra)?;
        let inv_alpha = alpha.recip().map_err(SymbolError::Algebra)?;
        let kappa = &lam_p_mu * &inv_lam_p_3mu;
        let kx = metric.order().min(material.order());
        Ok(Self {
            n,
            kx,
            lxi,
            metric: metric.clone(),
            material: material.clone(),
            gamma,
            xi: cov,
            ginv,
            gamma_l,
            lam,
            mu,
            alpha,
            beta,
            lam_p_mu,
            lam_p_2mu,
            lam_p_3mu,
            inv_mu,
            inv_lam_p_2mu,
            inv_lam_p_3mu,
            inv_alpha,
            kappa,
            rho: S::from_f64(material.rho),
            omega: S::from_f64(material.omega),
            theta0: S::from_f64(material.theta0),
            c_heat: S::from_f64(material.c_heat),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Matrix dimension of the system, `n + 1`.
    pub fn sys_dim(&self) -> usize {
        self.n + 1
    }

    pub fn base(&self) -> &BaseCovector<S> {
        self.xi.base()
    }

    pub fn zero_matrix(&self, degree: i32) -> SymbolMatrix<S> {
        SymbolMatrix::zero(
            degree,
            self.sys_dim(),
            self.n,
            self.metric.order(),
            self.lxi,
        )
    }

    fn zero_jet(&self) -> BiJet<S> {
        BiJet::zero(self.n, self.metric.order(), self.lxi)
    }

    /// Lifted `g^{αβ}`.
    pub fn ginv(&self, a: usize, b: usize) -> &BiJet<S> {
        &self.ginv[a * (self.n - 1) + b]
    }

    /// Lifted `Γ^m_{jk}` (index n-1 is the normal direction).
    pub fn gam(&self, m: usize, j: usize, k: usize) -> &BiJet<S> {
        &self.gamma_l[(m * self.n + j) * self.n + k]
    }

    /// Lifted tangential trace `Γ^γ_{γk}`.
    pub fn gam_trace(&self, k: usize) -> BiJet<S> {
        let mut acc = BiJet::zero(self.n, self.gamma.order(), self.lxi);
        for g in 0..self.n - 1 {
            acc = &acc + self.gam(g, g, k);
        }
        acc
    }

    /// Full metric component `g_{jk}` lifted into the bivariate algebra.
    pub fn g_full(&self, j: usize, k: usize) -> BiJet<S> {
        self.metric.full_component(j, k).lift(self.lxi)
    }

    /// Full inverse metric component `g^{jk}` lifted (normal form).
    pub fn ginv_full(&self, j: usize, k: usize) -> BiJet<S> {
        let m = self.n - 1;
        if j < m && k < m {
            self.ginv(j, k).clone()
        } else if j == k {
            BiJet::constant(self.n, self.metric.order(), self.lxi, S::one())
        } else {
            BiJet::zero(self.n, self.metric.order(), self.lxi)
        }
    }

    /// Raised tangential gradient `∇^α f = g^{αβ} ∂_β f` of a lifted jet.
    pub fn raised_gradient(&self, f: &BiJet<S>, a: usize) -> Result<BiJet<S>, SymbolError> {
        let m = self.n - 1;
        let mut acc: Option<BiJet<S>> = None;
        for b in 0..m {
            let term = self.ginv(a, b) * &f.dx(b)?;
            acc = Some(match acc {
                None => term,
                Some(s) => &s + &term,
            });
        }
        Ok(acc.expect("n >= 2"))
    }

    /// `iω` as a scalar.
    pub fn i_omega(&self) -> S {
        S::i() * self.omega.clone()
    }

    /// `ρω²` as a scalar.
    pub fn rho_omega_sq(&self) -> S {
        self.rho.clone() * self.omega.clone() * self.omega.clone()
    }
}

/// Boundary coefficient `A = diag(μ I_{n-1}, λ+2μ, α)`.
pub fn matrix_a<S: Scalar>(f: &Frame<S>) -> SymbolMatrix<S> {
    let mut a = f.zero_matrix(0);
    for t in 0..f.n - 1 {
        a.set(t, t, f.mu.clone());
    }
    a.set(f.n - 1, f.n - 1, f.lam_p_2mu.clone());
    a.set(f.n, f.n, f.alpha.clone());
    a
}

/// `A^{-1} = diag(1/μ, ..., 1/(λ+2μ), 1/α)`.
pub fn matrix_a_inverse<S: Scalar>(f: &Frame<S>) -> SymbolMatrix<S> {
    let mut a = f.zero_matrix(0);
    for t in 0..f.n - 1 {
        a.set(t, t, f.inv_mu.clone());
    }
    a.set(f.n - 1, f.n - 1, f.inv_lam_p_2mu.clone());
    a.set(f.n, f.n, f.inv_alpha.clone());
    a
}

/// Symbol split of the first-order tangential boundary operator `D`:
/// the DtN map reads `A(-∂_n) - D` in boundary normal coordinates.
pub struct TangentialBoundarySymbols<S: Scalar> {
    pub d1: SymbolMatrix<S>,
    pub d0: SymbolMatrix<S>,
}

impl<S: Scalar> TangentialBoundarySymbols<S> {
    /// Full (inhomogeneous) symbol `d1 + d0`.
    pub fn full(&self) -> SymbolMatrix<S> {
        self.d1.add_inhomogeneous(&self.d0)
    }
}

/// Build the boundary operator symbols `d1` (degree 1) and `d0` (degree 0).
pub fn matrix_d<S: Scalar>(f: &Frame<S>) -> TangentialBoundarySymbols<S> {
    let nn = f.n - 1;
    let norm = f.n - 1;
    let th = f.n;
    let mut d1 = f.zero_matrix(1);
    for a in 0..nn {
        d1.set(a, norm, (&f.mu * f.xi.up(a)).mul_i());
        d1.set(norm, a, (&f.lam * f.xi.down(a)).mul_i());
    }
    let mut d0 = f.zero_matrix(0);
    for b in 0..nn {
        d0.set(norm, b, &f.lam * &f.gam_trace(b));
    }
    d0.set(norm, norm, &f.lam * &f.gam_trace(f.n - 1));
    d0.set(norm, th, -&f.beta);
    TangentialBoundarySymbols { d1, d0 }
}

/// Symbols `(b1, b0)` of the first-order factor coefficient `B = B1 + B0`.
pub fn symbol_b<S: Scalar>(
    f: &Frame<S>,
) -> Result<(SymbolMatrix<S>, SymbolMatrix<S>), SymbolError> {
    let nn = f.n - 1;
    let norm = f.n - 1;
    let th = f.n;

    let mut b1 = f.zero_matrix(1);
    for a in 0..nn {
        b1.set(a, norm, (&(&f.lam_p_mu * &f.inv_mu) * f.xi.up(a)).mul_i());
        b1.set(
            norm,
            a,
            (&(&f.lam_p_mu * &f.inv_lam_p_2mu) * f.xi.down(a)).mul_i(),
        );
    }

    let mut b0 = f.zero_matrix(0);
    let trace_n = f.gam_trace(f.n - 1);
    let dmu_n = f.mu.dx(f.n - 1)?;
    for a in 0..nn {
        for b in 0..nn {
            let mut e = f.gam(a, norm, b).mul_scalar(&S::from_i64(2));
            if a == b {
                e = &e + &trace_n;
                e = &e + &(&dmu_n * &f.inv_mu);
            }
            b0.set(a, b, e);
        }
        b0.set(a, norm, &f.raised_gradient(&f.lam, a)? * &f.inv_mu);
        let e = &(&(&f.lam_p_mu * &f.gam_trace(a)) + &f.mu.dx(a)?) * &f.inv_lam_p_2mu;
        b0.set(norm, a, e);
    }
    let dl2m_n = f.lam_p_2mu.dx(f.n - 1)?;
    b0.set(norm, norm, &trace_n + &(&dl2m_n * &f.inv_lam_p_2mu));
    b0.set(norm, th, -&(&f.beta * &f.inv_lam_p_2mu));
    b0.set(
        th,
        norm,
        (&f.beta * &f.inv_alpha).mul_scalar(&(f.i_omega() * f.theta0.clone())),
    );
    b0.set(th, th, trace_n);
    Ok((b1, b0))
}

/// Symbols `(c2, c1, c0)` of the zeroth-order factor coefficient
/// `C = C2 + C1 + C0`.
pub fn symbol_c<S: Scalar>(
    f: &Frame<S>,
) -> Result<(SymbolMatrix<S>, SymbolMatrix<S>, SymbolMatrix<S>), SymbolError> {
    let nn = f.n - 1;
    let norm = f.n - 1;
    let th = f.n;
    let norm_sq = f.xi.norm_sq();
    let lpm_over_mu = &f.lam_p_mu * &f.inv_mu;
    let mu_over_l2m = &f.mu * &f.inv_lam_p_2mu;
    let trace_n = f.gam_trace(f.n - 1);

    // c2 = -diag(|ξ|² I + ((λ+μ)/μ)[ξ^α ξ_β], (μ/(λ+2μ))|ξ|², |ξ|²).
    let mut c2 = f.zero_matrix(2);
    for a in 0..nn {
        for b in 0..nn {
            let mut e = &(&lpm_over_mu * f.xi.up(a)) * f.xi.down(b);
            if a == b {
                e = &e + norm_sq;
            }
            c2.set(a, b, -&e);
        }
    }
    c2.set(norm, norm, -&(&mu_over_l2m * norm_sq));
    c2.set(th, th, -norm_sq);

    let mut c1 = f.zero_matrix(1);

    // Tangential first-order part of the Laplace-Beltrami symbol, times i:
    // s = ξ^α Γ^β_{αβ} + ∂ξ^α/∂x_α.
    let mut s = f.zero_jet();
    for a in 0..nn {
        s = &s + &(f.xi.up(a) * &f.gam_trace(a));
        s = &s + &f.xi.up(a).dx(a)?;
    }
    let is = s.mul_i();
    for a in 0..nn {
        c1.add_to(a, a, &is);
    }
    c1.add_to(norm, norm, &(&mu_over_l2m * &is));
    c1.add_to(th, th, &is);

    // (i(λ+μ)/μ) [ξ^α Γ^γ_{γβ}] and (i(λ+μ)/μ) Γ^β_{βn} [ξ^α].
    for a in 0..nn {
        for b in 0..nn {
            c1.add_to(a, b, &(&(&lpm_over_mu * f.xi.up(a)) * &f.gam_trace(b)).mul_i());
        }
        c1.add_to(a, norm, &(&(&lpm_over_mu * f.xi.up(a)) * &trace_n).mul_i());
    }

    // Christoffel couplings and the thermo-mechanical entries.
    let two = S::from_i64(2);
    for a in 0..nn {
        for b in 0..nn {
            let mut acc = f.zero_jet();
            for g in 0..nn {
                acc = &acc + &(f.xi.up(g) * f.gam(a, g, b));
            }
            c1.add_to(a, b, &acc.mul_scalar(&two).mul_i());
        }
        let mut acc = f.zero_jet();
        for g in 0..nn {
            acc = &acc + &(f.xi.up(g) * f.gam(a, g, f.n - 1));
        }
        c1.add_to(a, norm, &acc.mul_scalar(&two).mul_i());

        c1.set(a, th, -&(&(&f.beta * &f.inv_mu) * f.xi.up(a)).mul_i());
        let coup = (&(&f.beta * &f.inv_alpha) * f.xi.down(a))
            .mul_scalar(&(f.omega.clone() * f.theta0.clone()));
        c1.set(th, a, -&coup);
    }
    for b in 0..nn {
        let mut accn = f.zero_jet();
        for g in 0..nn {
            accn = &accn + &(f.xi.up(g) * f.gam(norm, g, b));
        }
        c1.add_to(norm, b, &(&accn.mul_scalar(&two).mul_i() * &mu_over_l2m));
    }

    // Coefficient-gradient couplings.
    let mut xi_grad_mu = f.zero_jet();
    for g in 0..nn {
        xi_grad_mu = &xi_grad_mu + &(f.xi.down(g) * &f.raised_gradient(&f.mu, g)?);
    }
    let dmu_n = f.mu.dx(f.n - 1)?;
    let dlam_n = f.lam.dx(f.n - 1)?;
    for a in 0..nn {
        let grad_a_lam = f.raised_gradient(&f.lam, a)?;
        for b in 0..nn {
            let mut add = &(f.xi.down(b) * &grad_a_lam) + &(f.xi.up(a) * &f.mu.dx(b)?);
            if a == b {
                add = &add + &xi_grad_mu;
            }
            c1.add_to(a, b, &(&add * &f.inv_mu).mul_i());
        }
        c1.add_to(a, norm, &(&(&dmu_n * &f.inv_mu) * f.xi.up(a)).mul_i());
        c1.add_to(
            norm,
            a,
            &(&(&dlam_n * &f.inv_lam_p_2mu) * f.xi.down(a)).mul_i(),
        );
    }
    c1.add_to(norm, norm, &(&xi_grad_mu * &f.inv_lam_p_2mu).mul_i());

    let mut c0 = f.zero_matrix(0);

    // (λ+μ)-weighted second derivatives of the Christoffel traces.
    let lpm_over_l2m = &f.lam_p_mu * &f.inv_lam_p_2mu;
    for a in 0..nn {
        for b in 0..nn {
            let mut acc = f.zero_jet();
            for g in 0..nn {
                acc = &acc + &(f.ginv(a, g) * &f.gam_trace(b).dx(g)?);
            }
            c0.set(a, b, &lpm_over_mu * &acc);
        }
        let mut acc = f.zero_jet();
        for g in 0..nn {
            acc = &acc + &(f.ginv(a, g) * &trace_n.dx(g)?);
        }
        c0.set(a, norm, &lpm_over_mu * &acc);
        c0.set(norm, a, &lpm_over_l2m * &f.gam_trace(a).dx(f.n - 1)?);
    }
    c0.set(norm, norm, &lpm_over_l2m * &trace_n.dx(f.n - 1)?);

    // g^{ml} ∂Γ^j_{ml}/∂x over all interior indices (normal-form inverse).
    let contracted_dgamma = |upper: usize, deriv: usize| -> Result<BiJet<S>, SymbolError> {
        let mut acc = f.zero_jet();
        for mi in 0..f.n {
            for li in 0..f.n {
                if mi < nn && li < nn {
                    acc = &acc + &(f.ginv(mi, li) * &f.gam(upper, mi, li).dx(deriv)?);
                } else if mi == li {
                    acc = &acc + &f.gam(upper, mi, li).dx(deriv)?;
                }
            }
        }
        Ok(acc)
    };
    for a in 0..nn {
        for b in 0..nn {
            c0.add_to(a, b, &contracted_dgamma(a, b)?);
        }
        c0.add_to(a, norm, &contracted_dgamma(a, f.n - 1)?);
        c0.add_to(norm, a, &(&mu_over_l2m * &contracted_dgamma(norm, a)?));
    }
    c0.add_to(
        norm,
        norm,
        &(&mu_over_l2m * &contracted_dgamma(norm, f.n - 1)?),
    );

    // Frequency block.
    let rho_om2 = f.rho_omega_sq();
    for a in 0..nn {
        c0.add_to(a, a, &f.inv_mu.mul_scalar(&rho_om2));
    }
    c0.add_to(norm, norm, &f.inv_lam_p_2mu.mul_scalar(&rho_om2));
    let coup = (&f.beta * &f.inv_alpha).mul_scalar(&(f.i_omega() * f.theta0.clone()));
    for b in 0..nn {
        c0.set(th, b, &coup * &f.gam_trace(b));
    }
    c0.set(th, norm, &coup * &trace_n);
    c0.set(
        th,
        th,
        f.inv_alpha.mul_scalar(&(f.i_omega() * f.c_heat.clone())),
    );

    // Coefficient-gradient block.
    for a in 0..nn {
        let grad_a_lam = f.raised_gradient(&f.lam, a)?;
        for b in 0..nn {
            let mut e = &grad_a_lam * &f.gam_trace(b);
            for g in 0..nn {
                e = &e - &(&f.mu.dx(g)? * &f.ginv(a, g).dx(b)?);
            }
            c0.add_to(a, b, &(&e * &f.inv_mu));
        }
        let mut e = &grad_a_lam * &trace_n;
        for b in 0..nn {
            e = &e - &(&f.mu.dx(b)? * &f.ginv(a, b).dx(f.n - 1)?);
        }
        c0.add_to(a, norm, &(&e * &f.inv_mu));
        c0.add_to(norm, a, &(&(&dlam_n * &f.inv_lam_p_2mu) * &f.gam_trace(a)));
    }
    c0.add_to(norm, norm, &(&(&dlam_n * &f.inv_lam_p_2mu) * &trace_n));

    Ok((c2, c1, c0))
}
