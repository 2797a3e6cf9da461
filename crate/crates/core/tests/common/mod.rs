//! Randomized admissible cases shared by the integration suites.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thermodtn::algebra::{indices_of_degree, TaylorJet};
use thermodtn::geometry::MetricJet;
use thermodtn::material::MaterialJet;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Random jet with a pinned constant term and bounded higher coefficients in
/// all space directions.
pub fn random_jet(
    rng: &mut ChaCha8Rng,
    n: usize,
    order: usize,
    value: f64,
    spread: f64,
    through: usize,
) -> TaylorJet<C> {
    let mut j = TaylorJet::zero(n, order);
    j.set_partial(&vec![0; n], c(value)).unwrap();
    for deg in 1..=through.min(order) {
        for idx in indices_of_degree(n, deg) {
            j.set_partial(&idx, c(rng.gen_range(-spread..spread))).unwrap();
        }
    }
    j
}

/// Random admissible material with full space dependence.
pub fn random_material(
    rng: &mut ChaCha8Rng,
    n: usize,
    order: usize,
    omega: f64,
    jet_through: usize,
) -> MaterialJet<C> {
    let mu0 = rng.gen_range(0.7..1.6);
    let lam0 = rng.gen_range(-0.5 * mu0..1.5);
    let al0 = rng.gen_range(0.6..1.8);
    let be0 = rng.gen_range(0.2..1.2);
    MaterialJet::new(
        random_jet(rng, n, order, lam0, 0.25, jet_through),
        random_jet(rng, n, order, mu0, 0.2, jet_through),
        random_jet(rng, n, order, al0, 0.25, jet_through),
        random_jet(rng, n, order, be0, 0.2, jet_through),
        1.0,
        omega,
        1.0,
        1.0,
    )
    .expect("constructed admissible")
}

/// Random normal-form metric: identity plus bounded full-jet perturbations
/// of the tangential block, kept SPD at the base point.
pub fn random_metric(
    rng: &mut ChaCha8Rng,
    n: usize,
    order: usize,
    flat: bool,
    jet_through: usize,
) -> MetricJet<C> {
    if flat {
        return MetricJet::euclidean(n, order);
    }
    let m = n - 1;
    let mut comps = Vec::new();
    for a in 0..m {
        for b in a..m {
            let value = if a == b {
                1.0 + rng.gen_range(0.0..0.6)
            } else {
                rng.gen_range(-0.15..0.15)
            };
            comps.push(random_jet(rng, n, order, value, 0.2, jet_through));
        }
    }
    MetricJet::new(n, order, comps).expect("diagonally dominant constant term")
}

/// Random covector with metric norm bounded away from zero.
pub fn random_covector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    loop {
        let xi: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.5..1.5)).collect();
        if xi.iter().map(|v| v * v).sum::<f64>() > 0.25 {
            return xi.into_iter().map(c).collect();
        }
    }
}
