//! Coefficient jets and physical constants with the admissibility
//! constraints `μ > 0`, `λ + μ >= 0`, `α > 0` at the base point.

use crate::algebra::TaylorJet;
use crate::error::MaterialError;
use crate::scalar::Scalar;

/// Jets of the two Lamé moduli, the heat-conduction coefficient and the
/// thermo-mechanical coupling, plus the scalar constants of the model.
///
/// The constants are never reconstruction targets: the density `rho`, the
/// angular frequency `omega`, the reference temperature `theta0` and the
/// specific heat per unit volume `c_heat` are assumed known.
#[derive(Clone, Debug)]
pub struct MaterialJet<S: Scalar> {
    pub lambda: TaylorJet<S>,
    pub mu: TaylorJet<S>,
    pub alpha: TaylorJet<S>,
    pub beta: TaylorJet<S>,
    pub rho: f64,
    pub omega: f64,
    pub theta0: f64,
    pub c_heat: f64,
}

fn real_constant<S: Scalar>(j: &TaylorJet<S>) -> Result<f64, MaterialError> {
    let v = j.value().to_c64();
    if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
        return Err(MaterialError::NonRealCoefficient);
    }
    Ok(v.re)
}

impl<S: Scalar> MaterialJet<S> {
    /// Validating constructor; no inadmissible value ever escapes.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lambda: TaylorJet<S>,
        mu: TaylorJet<S>,
        alpha: TaylorJet<S>,
        beta: TaylorJet<S>,
        rho: f64,
        omega: f64,
        theta0: f64,
        c_heat: f64,
    ) -> Result<Self, MaterialError> {
        let m = Self {
            lambda,
            mu,
            alpha,
            beta,
            rho,
            omega,
            theta0,
            c_heat,
        };
        m.validate()?;
        Ok(m)
    }

    /// Constant-coefficient convenience constructor.
    pub fn constants(
        n: usize,
        order: usize,
        lambda: f64,
        mu: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self, MaterialError> {
        Self::new(
            TaylorJet::constant(n, order, S::from_f64(lambda)),
            TaylorJet::constant(n, order, S::from_f64(mu)),
            TaylorJet::constant(n, order, S::from_f64(alpha)),
            TaylorJet::constant(n, order, S::from_f64(beta)),
            1.0,
            0.0,
            1.0,
            1.0,
        )
    }

    pub fn with_constants(mut self, rho: f64, omega: f64, theta0: f64, c_heat: f64) -> Self {
        self.rho = rho;
        self.omega = omega;
        self.theta0 = theta0;
        self.c_heat = c_heat;
        self
    }

    /// Re-checks the admissibility inequalities; idempotent.
    pub fn validate(&self) -> Result<&Self, MaterialError> {
        let mu = real_constant(&self.mu)?;
        let lambda = real_constant(&self.lambda)?;
        let alpha = real_constant(&self.alpha)?;
        real_constant(&self.beta)?;
        if mu <= 0.0 {
            return Err(MaterialError::Inadmissible {
                violated: "μ > 0",
                value: mu,
            });
        }
        if lambda + mu < 0.0 {
            return Err(MaterialError::Inadmissible {
                violated: "λ + μ ≥ 0",
                value: lambda + mu,
            });
        }
        if alpha <= 0.0 {
            return Err(MaterialError::Inadmissible {
                violated: "α > 0",
                value: alpha,
            });
        }
        // Implied by the above but used as denominators throughout; checked
        // so a violation is named rather than surfacing as a division error.
        if lambda + 2.0 * mu <= 0.0 {
            return Err(MaterialError::Inadmissible {
                violated: "λ + 2μ > 0",
                value: lambda + 2.0 * mu,
            });
        }
        if lambda + 3.0 * mu <= 0.0 {
            return Err(MaterialError::Inadmissible {
                violated: "λ + 3μ > 0",
                value: lambda + 3.0 * mu,
            });
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }

    pub fn order(&self) -> usize {
        self.lambda
            .order()
            .min(self.mu.order())
            .min(self.alpha.order())
            .min(self.beta.order())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type M = MaterialJet<Complex64>;

    #[test]
    fn admissible_accepted() {
        let m = M::constants(2, 2, 0.0, 1.0, 1.0, 3.0).unwrap();
        assert!(m.validate().is_ok());
        // Idempotent.
        assert!(m.validate().and_then(|m| m.validate()).is_ok());
    }

    #[test]
    fn zero_mu_rejected() {
        let e = M::constants(2, 2, 0.0, 0.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(
            e,
            MaterialError::Inadmissible {
                violated: "μ > 0",
                ..
            }
        ));
    }

    #[test]
    fn lame_sum_boundary_case() {
        // λ + μ = 0 is admitted; λ + μ < 0 is not.
        assert!(M::constants(2, 2, -1.0, 1.0, 1.0, 0.0).is_ok());
        let e = M::constants(2, 2, -1.5, 1.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(
            e,
            MaterialError::Inadmissible {
                violated: "λ + μ ≥ 0",
                ..
            }
        ));
    }

    #[test]
    fn nonpositive_alpha_rejected() {
        let e = M::constants(2, 2, 0.0, 1.0, 0.0, 0.0).unwrap_err();
        assert!(matches!(
            e,
            MaterialError::Inadmissible {
                violated: "α > 0",
                ..
            }
        ));
    }
}
