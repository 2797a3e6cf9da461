//! Metric data in boundary normal coordinates and the derived geometric
//! quantities: inverse metric, Christoffel symbols, covector norms and index
//! raising.
//!
//! Only normal-form metrics `g = g_{αβ} dx_α dx_β + dx_n²` are representable;
//! the boundary is `x_n = 0` and the base point is the origin.

use std::sync::Arc;

use crate::algebra::{BaseCovector, BiJet, TaylorJet};
use crate::error::{AlgebraError, GeometryError};
use crate::scalar::Scalar;

/// Tangential metric block `g_{αβ}` as space jets, with the normal-form
/// structure (`g_{αn} = 0`, `g_{nn} = 1`) built in.
#[derive(Clone, Debug)]
pub struct MetricJet<S: Scalar> {
    n: usize,
    order: usize,
    /// Upper-triangular tangential components, row-major over `α <= β`.
    comps: Vec<TaylorJet<S>>,
}

fn tri_index(a: usize, b: usize, m: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * m - a * (a + 1) / 2 + b
}

impl<S: Scalar> MetricJet<S> {
    /// Build from tangential components `g_{αβ}` for `α <= β` (row-major
    /// upper triangle, indices `0..n-1`).
    pub fn new(n: usize, order: usize, upper: Vec<TaylorJet<S>>) -> Result<Self, GeometryError> {
        assert!(n >= 2);
        let m = n - 1;
        assert_eq!(upper.len(), m * (m + 1) / 2, "upper triangle size");
        let g = Self {
            n,
            order,
            comps: upper.iter().map(|j| j.extend_exact(order).truncate(order)).collect(),
        };
        // Positive definiteness of the constant term, by Cholesky.
        let mut a = vec![0.0f64; m * m];
        for al in 0..m {
            for be in 0..m {
                let v = g.component(al, be).value().to_c64();
                if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                    return Err(GeometryError::SingularMetric);
                }
                a[al * m + be] = v.re;
            }
        }
        for al in 0..m {
            for be in 0..al {
                if (a[al * m + be] - a[be * m + al]).abs() > 1e-12 {
                    return Err(GeometryError::SingularMetric);
                }
            }
        }
        let mut l = vec![0.0f64; m * m];
        for i in 0..m {
            for j in 0..=i {
                let mut s = a[i * m + j];
                for k in 0..j {
                    s -= l[i * m + k] * l[j * m + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(GeometryError::SingularMetric);
                    }
                    l[i * m + i] = s.sqrt();
                } else {
                    l[i * m + j] = s / l[j * m + j];
                }
            }
        }
        Ok(g)
    }

    /// Euclidean preset: `g_{αβ} = δ_{αβ}`.
    pub fn euclidean(n: usize, order: usize) -> Self {
        let m = n - 1;
        let mut comps = Vec::new();
        for a in 0..m {
            for b in a..m {
                comps.push(if a == b {
                    TaylorJet::constant(n, order, S::one())
                } else {
                    TaylorJet::zero(n, order)
                });
            }
        }
        Self::new(n, order, comps).expect("euclidean metric is SPD")
    }

    /// Warped-product preset: `g_{αβ} = w(x_n)² δ_{αβ}`.
    pub fn warped_product(n: usize, order: usize, w: &TaylorJet<S>) -> Result<Self, GeometryError> {
        let m = n - 1;
        let w = w.extend_exact(order).truncate(order);
        let w2 = &w * &w;
        let mut comps = Vec::new();
        for a in 0..m {
            for b in a..m {
                comps.push(if a == b {
                    w2.clone()
                } else {
                    TaylorJet::zero(n, order)
                });
            }
        }
        Self::new(n, order, comps)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Tangential component `g_{αβ}`, indices `0..n-1`.
    pub fn component(&self, a: usize, b: usize) -> &TaylorJet<S> {
        &self.comps[tri_index(a, b, self.n - 1)]
    }

    /// Full metric `g_{jk}` with the normal-form entries filled in.
    pub fn full_component(&self, j: usize, k: usize) -> TaylorJet<S> {
        let m = self.n - 1;
        if j < m && k < m {
            self.component(j, k).clone()
        } else if j == k {
            TaylorJet::constant(self.n, self.order, S::one())
        } else {
            TaylorJet::zero(self.n, self.order)
        }
    }

    /// Inverse tangential metric `g^{αβ}`, a full `(n-1)×(n-1)` matrix of
    /// jets satisfying `g^{αγ} g_{γβ} = δ^α_β` through the carried order.
    pub fn inverse_metric(&self) -> Result<Vec<TaylorJet<S>>, GeometryError> {
        let m = self.n - 1;
        // Gauss-Jordan over the jet ring; pivots are the diagonal entries,
        // whose constant terms are nonzero for an SPD constant matrix under
        // symmetric elimination without pivot search.
        let mut a: Vec<BiJet<S>> = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                a.push(self.component(i, j).lift(0));
            }
        }
        let mut inv: Vec<BiJet<S>> = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                inv.push(if i == j {
                    BiJet::constant(self.n, self.order, 0, S::one())
                } else {
                    BiJet::zero(self.n, self.order, 0)
                });
            }
        }
        for p in 0..m {
            let piv = a[p * m + p].clone();
            let piv_inv = piv.recip().map_err(|_| GeometryError::SingularMetric)?;
            for j in 0..m {
                a[p * m + j] = &a[p * m + j] * &piv_inv;
                inv[p * m + j] = &inv[p * m + j] * &piv_inv;
            }
            for i in 0..m {
                if i == p {
                    continue;
                }
                let f = a[i * m + p].clone();
                if f.is_all_zero() {
                    continue;
                }
                for j in 0..m {
                    a[i * m + j] = &a[i * m + j] - &(&f * &a[p * m + j]);
                    inv[i * m + j] = &inv[i * m + j] - &(&f * &inv[p * m + j]);
                }
            }
        }
        Ok(inv.into_iter().map(TaylorJet::from_inner).collect())
    }

    /// Christoffel symbols `Γ^m_{jk}` for all index combinations, with the
    /// normal-form zeros filled in. Output jets are truncated to order-1 less
    /// than the metric order.
    pub fn christoffel(&self) -> Result<Christoffels<S>, GeometryError> {
        assert!(self.order >= 1, "christoffel needs jet order >= 1");
        let n = self.n;
        let m = n - 1;
        let ko = self.order - 1;
        let ginv = self.inverse_metric()?;
        // Full inverse: g^{jn} = δ_{jn}.
        let ginv_full = |j: usize, k: usize| -> TaylorJet<S> {
            if j < m && k < m {
                ginv[j * m + k].clone()
            } else if j == k {
                TaylorJet::constant(n, self.order, S::one())
            } else {
                TaylorJet::zero(n, self.order)
            }
        };
        let half = S::from_ratio(1, 2);
        let mut gamma = vec![TaylorJet::zero(n, ko); n * n * n];
        for mm in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut acc = TaylorJet::zero(n, ko);
                    for l in 0..n {
                        let gml = ginv_full(mm, l);
                        if gml.max_abs() == 0.0 {
                            continue;
                        }
                        let t1 = self.full_component(j, l).dx(k)?;
                        let t2 = self.full_component(k, l).dx(j)?;
                        let t3 = self.full_component(j, k).dx(l)?;
                        let sum = &(&t1 + &t2) - &t3;
                        acc = &acc + &(&gml.truncate(ko) * &sum);
                    }
                    let g = acc.mul_scalar(&half);
                    gamma[(mm * n + j) * n + k] = g.clone();
                    gamma[(mm * n + k) * n + j] = g;
                }
            }
        }
        Ok(Christoffels { n, order: ko, gamma })
    }

    /// Package a tangential covector with its raised components and norm,
    /// expanded to covector order `lxi`.
    pub fn covector_package(
        &self,
        xi: &[S],
        lxi: usize,
    ) -> Result<Covector<S>, GeometryError> {
        let m = self.n - 1;
        assert_eq!(xi.len(), m);
        if xi.iter().all(|c| c.is_zero()) {
            return Err(GeometryError::ZeroCovector);
        }
        let base: BaseCovector<S> = Arc::new(xi.to_vec());
        let ginv = self.inverse_metric()?;
        let down: Vec<BiJet<S>> = (0..m)
            .map(|a| BiJet::xi_var(self.n, self.order, lxi, a, base.clone()))
            .collect();
        let mut up = Vec::with_capacity(m);
        for a in 0..m {
            let mut acc = BiJet::zero(self.n, self.order, lxi).with_base(Some(base.clone()));
            for b in 0..m {
                acc = &acc + &(&ginv[a * m + b].lift(lxi) * &down[b]);
            }
            up.push(acc);
        }
        let mut norm_sq = BiJet::zero(self.n, self.order, lxi).with_base(Some(base.clone()));
        for a in 0..m {
            norm_sq = &norm_sq + &(&up[a] * &down[a]);
        }
        let norm = norm_sq.sqrt().map_err(GeometryError::Algebra)?;
        Ok(Covector {
            base,
            down,
            up,
            norm,
            norm_sq,
        })
    }
}

/// All Christoffel symbols of a normal-form metric, as space jets.
#[derive(Clone, Debug)]
pub struct Christoffels<S: Scalar> {
    n: usize,
    order: usize,
    /// `gamma[(m*n + j)*n + k]` is `Γ^m_{jk}`, indices `0..n`.
    gamma: Vec<TaylorJet<S>>,
}

impl<S: Scalar> Christoffels<S> {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `Γ^m_{jk}`, all indices `0..n` (index `n-1` is the normal direction).
    pub fn get(&self, m: usize, j: usize, k: usize) -> &TaylorJet<S> {
        &self.gamma[(m * self.n + j) * self.n + k]
    }

    /// Tangential trace `Γ^γ_{γk} = Σ_γ Γ^γ_{γk}` (sum over `γ < n-1`).
    pub fn tangential_trace(&self, k: usize) -> TaylorJet<S> {
        let mut acc = TaylorJet::zero(self.n, self.order);
        for g in 0..self.n - 1 {
            acc = &acc + self.get(g, g, k);
        }
        acc
    }
}

/// A tangential covector with raised components and norm over the bivariate
/// jet algebra: `ξ_α` is space-constant, `ξ^α = g^{αβ}(x) ξ_β` is not.
#[derive(Clone, Debug)]
pub struct Covector<S: Scalar> {
    base: BaseCovector<S>,
    down: Vec<BiJet<S>>,
    up: Vec<BiJet<S>>,
    norm: BiJet<S>,
    norm_sq: BiJet<S>,
}

impl<S: Scalar> Covector<S> {
    pub fn base(&self) -> &BaseCovector<S> {
        &self.base
    }

    pub fn down(&self, a: usize) -> &BiJet<S> {
        &self.down[a]
    }

    pub fn up(&self, a: usize) -> &BiJet<S> {
        &self.up[a]
    }

    /// `|ξ'| = sqrt(ξ^α ξ_α)`.
    pub fn norm(&self) -> &BiJet<S> {
        &self.norm
    }

    pub fn norm_sq(&self) -> &BiJet<S> {
        &self.norm_sq
    }

    pub fn recip_norm(&self) -> Result<BiJet<S>, AlgebraError> {
        self.norm.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type T = TaylorJet<Complex64>;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn warped_2d(order: usize) -> MetricJet<Complex64> {
        // g_11 = (1 + x_n)^2 in dimension 2.
        let one = T::constant(2, order, c(1.0));
        let xn = T::x_var(2, order, 1);
        let w = &one + &xn;
        MetricJet::new(2, order, vec![&w * &w]).unwrap()
    }

    #[test]
    fn inverse_of_constant_diagonal() {
        let g = MetricJet::new(
            3,
            2,
            vec![
                T::constant(3, 2, c(4.0)),
                T::zero(3, 2),
                T::constant(3, 2, c(9.0)),
            ],
        )
        .unwrap();
        let inv = g.inverse_metric().unwrap();
        assert!((inv[0].value() - c(0.25)).norm() < 1e-14);
        assert!((inv[3].value() - c(1.0 / 9.0)).norm() < 1e-14);
        assert!(inv[1].max_abs() < 1e-14);
    }

    #[test]
    fn inverse_of_warped_metric_jet() {
        // g_11 = (1+x_n)^2 in n = 2: g^11 = (1+x_n)^{-2}, so value 1 and
        // ∂/∂x_n = -2 at the boundary.
        let g = warped_2d(3);
        let inv = g.inverse_metric().unwrap();
        assert!((inv[0].value() - c(1.0)).norm() < 1e-13);
        assert!((inv[0].normal_partial(1).unwrap() - c(-2.0)).norm() < 1e-13);
        // g^{αγ} g_{γβ} = δ through the jet order.
        let prod = &inv[0] * g.component(0, 0);
        assert!((prod.value() - c(1.0)).norm() < 1e-13);
        for d in 1..=3 {
            assert!(prod.normal_partial(d).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn identity_metric_inverse_is_identity() {
        let g = MetricJet::<Complex64>::euclidean(3, 2);
        let inv = g.inverse_metric().unwrap();
        assert!((inv[0].value() - c(1.0)).norm() < 1e-14);
        assert!((inv[3].value() - c(1.0)).norm() < 1e-14);
        assert!(inv[1].max_abs() < 1e-14 && inv[2].max_abs() < 1e-14);
    }

    #[test]
    fn flat_christoffels_vanish() {
        let g = MetricJet::<Complex64>::euclidean(3, 3);
        let ch = g.christoffel().unwrap();
        for m in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(ch.get(m, j, k).max_abs(), 0.0);
                }
            }
        }
    }

    #[test]
    fn warped_christoffels() {
        // n = 2, g_11 = (1+x_n)^2: Γ^1_{1n} = 1 and Γ^n_{11} = -1 at x_n = 0.
        let g = warped_2d(3);
        let ch = g.christoffel().unwrap();
        assert!((ch.get(0, 0, 1).value() - c(1.0)).norm() < 1e-13);
        assert!((ch.get(1, 0, 0).value() - c(-1.0)).norm() < 1e-13);
        assert_eq!(ch.get(1, 0, 1).max_abs(), 0.0);
        assert_eq!(ch.get(1, 1, 1).max_abs(), 0.0);
        assert_eq!(ch.get(0, 1, 1).max_abs(), 0.0);
    }

    #[test]
    fn christoffel_scale_invariance() {
        // The Christoffel formula is degree-0 homogeneous in the metric. In
        // normal form only the tangential block can scale (g_nn stays 1), so
        // the invariant pieces are the Γ with a tangential upper index, while
        // Γ^n_{αβ} = -½ ∂_n g_{αβ} picks up the factor.
        let g = warped_2d(3);
        let scaled = MetricJet::new(
            2,
            3,
            vec![g.component(0, 0).mul_scalar(&c(7.0))],
        )
        .unwrap();
        let a = g.christoffel().unwrap();
        let b = scaled.christoffel().unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let va = a.get(0, j, k).value();
                let vb = b.get(0, j, k).value();
                assert!((va - vb).norm() < 1e-12);
            }
        }
        let va = a.get(1, 0, 0).value();
        let vb = b.get(1, 0, 0).value();
        assert!((vb - va * 7.0).norm() < 1e-12);
    }

    #[test]
    fn metric_compatibility_randomized() {
        // ∂_k g_{jl} - Γ^m_{kj} g_{ml} - Γ^m_{kl} g_{jm} = 0 through order K-1.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let n = 3;
            let order = 3;
            let mut comps = Vec::new();
            for a in 0..n - 1 {
                for b in a..n - 1 {
                    let mut j = T::zero(n, order);
                    let v0 = if a == b {
                        1.5 + rng.gen_range(0.0..0.5)
                    } else {
                        rng.gen_range(-0.2..0.2)
                    };
                    j.set_partial(&[0, 0, 0], c(v0)).unwrap();
                    for idx in [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [0, 0, 2]] {
                        j.set_partial(&idx, c(rng.gen_range(-0.3..0.3))).unwrap();
                    }
                    comps.push(j);
                }
            }
            let g = MetricJet::new(n, order, comps).unwrap();
            let ch = g.christoffel().unwrap();
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let mut r = g.full_component(j, l).dx(k).unwrap();
                        for m in 0..n {
                            r = &r - &(&ch.get(m, k, j).truncate(order - 1)
                                * &g.full_component(m, l).truncate(order - 1));
                            r = &r - &(&ch.get(m, k, l).truncate(order - 1)
                                * &g.full_component(j, m).truncate(order - 1));
                        }
                        assert!(r.max_abs() < 1e-11, "compatibility residual {}", r.max_abs());
                    }
                }
            }
        }
    }

    #[test]
    fn normal_trace_is_log_det_derivative() {
        // Γ^α_{αn} = ½ ∂_n log det[g_{αβ}]: check on the warped metric where
        // det = (1+x_n)^2 and the trace is 1/(1+x_n), so value 1, ∂_n = -1.
        let g = warped_2d(4);
        let ch = g.christoffel().unwrap();
        let tr = ch.tangential_trace(1);
        assert!((tr.value() - c(1.0)).norm() < 1e-13);
        assert!((tr.normal_partial(1).unwrap() - c(-1.0)).norm() < 1e-12);
        assert!((tr.normal_partial(2).unwrap() - c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn covector_norms() {
        // Flat, ξ = (3,4): |ξ| = 5.
        let g = MetricJet::<Complex64>::euclidean(3, 2);
        let cov = g.covector_package(&[c(3.0), c(4.0)], 2).unwrap();
        assert!((cov.norm().value() - c(5.0)).norm() < 1e-13);

        // g^{11} = 1/4 (g_11 = 4), ξ = 2: |ξ| = 1, ξ^1 = 1/2.
        let g = MetricJet::new(2, 2, vec![T::constant(2, 2, c(4.0))]).unwrap();
        let cov = g.covector_package(&[c(2.0)], 1).unwrap();
        assert!((cov.norm().value() - c(1.0)).norm() < 1e-13);
        assert!((cov.up(0).value() - c(0.5)).norm() < 1e-13);

        // Warped g_11 = (1+x_n)^2, ξ = 1: |ξ| = (1+x_n)^{-1}, ∂_n|ξ| = -1.
        let g = warped_2d(3);
        let cov = g.covector_package(&[c(1.0)], 1).unwrap();
        assert!((cov.norm().value() - c(1.0)).norm() < 1e-13);
        assert!(
            (cov.norm().partial(&[0, 1], &[0]).unwrap() - c(-1.0)).norm() < 1e-12
        );

        assert!(matches!(
            g.covector_package(&[c(0.0)], 1),
            Err(GeometryError::ZeroCovector)
        ));
    }

    #[test]
    fn covector_norm_homogeneity() {
        let g = warped_2d(3);
        let cov1 = g.covector_package(&[c(1.3)], 2).unwrap();
        let cov3 = g.covector_package(&[c(3.9)], 2).unwrap();
        let r = cov3.norm().value() / cov1.norm().value();
        assert!((r - c(3.0)).norm() < 1e-12);
    }

    #[test]
    fn non_spd_rejected() {
        let bad = MetricJet::new(2, 2, vec![T::constant(2, 2, c(-1.0))]);
        assert!(matches!(bad, Err(GeometryError::SingularMetric)));
    }
}
