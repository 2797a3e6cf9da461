//! Manifest-driven configuration: one JSON file holds everything a run
//! needs — geometry, material, covectors, depth, mode and tolerances — so
//! identical manifests produce byte-identical outputs.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::TaylorJet;
use crate::dtn_assembly::SymbolTable;
use crate::geometry::MetricJet;
use crate::linalg::CMat;
use crate::material::MaterialJet;
use crate::scalar::Scalar;

/// Jet literal: multi-index strings `"k1,...,kn"` mapped to `[re, im]`
/// coefficient pairs in the derivative convention.
pub type JetLiteral = BTreeMap<String, [f64; 2]>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w_poly_xn: Option<Vec<f64>>,
    },
    Components { components: BTreeMap<String, JetLiteral> },
}

impl MetricSpec {
    pub fn build<S: Scalar>(&self, n: usize, order: usize) -> Result<MetricJet<S>, ManifestError> {
        Ok(match self {
            MetricSpec::Preset { preset, w_poly_xn } => match preset.as_str() {
                "euclidean" => MetricJet::euclidean(n, order),
                "warped-product" | "warped" => {
                    let coeffs = w_poly_xn.clone().ok_or_else(|| {
                        ManifestError::Invalid("warped preset needs w_poly_xn".into())
                    })?;
                    let w = TaylorJet::poly_xn(
                        n,
                        order,
                        &coeffs.iter().map(|&v| S::from_f64(v)).collect::<Vec<_>>(),
                    );
                    MetricJet::warped_product(n, order, &w)?
                }
                other => {
                    return Err(ManifestError::Invalid(format!(
                        "unknown metric preset '{other}'"
                    )))
                }
            },
            MetricSpec::Components { components } => {
                let m = n - 1;
                let mut upper = Vec::new();
                for a in 0..m {
                    for b in a..m {
                        let key = format!("{},{}", a + 1, b + 1);
                        let jet = match components.get(&key) {
                            Some(lit) => jet_from_literal(lit, n, order)?,
                            None if a == b => TaylorJet::constant(n, order, S::one()),
                            None => TaylorJet::zero(n, order),
                        };
                        upper.push(jet);
                    }
                }
                MetricJet::new(n, order, upper)?
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffSpec {
    Constant { constant: f64 },
    LinearInXn { linear_in_xn: [f64; 2] },
    PolyXn { poly_xn: Vec<f64> },
    Jet { jet: JetLiteral },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub lambda: CoeffSpec,
    pub mu: CoeffSpec,
    pub alpha: CoeffSpec,
    pub beta: CoeffSpec,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default = "one")]
    pub theta0: f64,
    #[serde(default = "one")]
    pub c_heat: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovectorSpec {
    Ladder {
        direction: Vec<f64>,
        magnitudes: Vec<f64>,
    },
    Explicit(Vec<Vec<f64>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Float,
    Rational,
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Float
    }
}

/// Tolerances for exit-code decisions; every one of these is printed in the
/// report header of the command that uses it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    /// Per-degree full-symbol-equation residual bound.
    #[serde(default = "tol_residual")]
    pub residual: f64,
    /// Sylvester post-solve residual bound.
    #[serde(default = "tol_sylvester")]
    pub sylvester: f64,
    /// Round-trip relative error bound per recovered order.
    #[serde(default = "tol_roundtrip")]
    pub roundtrip: f64,
    /// Allowed deviation of the oracle-comparison log-log slope from -M.
    #[serde(default = "tol_slope")]
    pub slope: f64,
}

fn tol_residual() -> f64 {
    1e-9
}
fn tol_sylvester() -> f64 {
    1e-10
}
fn tol_roundtrip() -> f64 {
    1e-6
}
fn tol_slope() -> f64 {
    0.3
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: tol_residual(),
            sylvester: tol_sylvester(),
            roundtrip: tol_roundtrip(),
            slope: tol_slope(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SlabSpec {
    pub length: f64,
    pub grid: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Orders {
    pub x: usize,
    pub xi: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub dimension: usize,
    pub orders: Orders,
    pub metric: MetricSpec,
    pub material: MaterialSpec,
    pub covectors: CovectorSpec,
    pub depth: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slab: Option<SlabSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("manifest field invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Material(#[from] crate::error::MaterialError),
    #[error(transparent)]
    Geometry(#[from] crate::error::GeometryError),
    #[error(transparent)]
    Algebra(#[from] crate::error::AlgebraError),
}

fn parse_multi_index(key: &str, dim: usize) -> Result<Vec<usize>, ManifestError> {
    let parts: Vec<usize> = key
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| ManifestError::Invalid(format!("multi-index '{key}'")))?;
    if parts.len() != dim {
        return Err(ManifestError::Invalid(format!(
            "multi-index '{key}' has {} entries, expected {dim}",
            parts.len()
        )));
    }
    Ok(parts)
}

fn jet_from_literal<S: Scalar>(
    lit: &JetLiteral,
    n: usize,
    order: usize,
) -> Result<TaylorJet<S>, ManifestError> {
    let mut j = TaylorJet::zero(n, order);
    for (key, [re, im]) in lit {
        let idx = parse_multi_index(key, n)?;
        j.set_partial(&idx, S::from_re_im(*re, *im))?;
    }
    Ok(j)
}

impl CoeffSpec {
    pub fn to_jet<S: Scalar>(&self, n: usize, order: usize) -> Result<TaylorJet<S>, ManifestError> {
        Ok(match self {
            CoeffSpec::Constant { constant } => {
                TaylorJet::constant(n, order, S::from_f64(*constant))
            }
            CoeffSpec::LinearInXn { linear_in_xn } => TaylorJet::poly_xn(
                n,
                order,
                &[
                    S::from_f64(linear_in_xn[0]),
                    S::from_f64(linear_in_xn[1]),
                ],
            ),
            CoeffSpec::PolyXn { poly_xn } => {
                let coeffs: Vec<S> = poly_xn.iter().map(|&v| S::from_f64(v)).collect();
                TaylorJet::poly_xn(n, order, &coeffs)
            }
            CoeffSpec::Jet { jet } => jet_from_literal(jet, n, order)?,
        })
    }
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let m: Manifest =
            serde_json::from_str(text).map_err(|e| ManifestError::Invalid(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.dimension < 2 {
            return Err(ManifestError::Invalid("dimension must be at least 2".into()));
        }
        if self.depth == 0 {
            return Err(ManifestError::Invalid("depth must be at least 1".into()));
        }
        for xi in self.covector_list() {
            if xi.len() != self.dimension - 1 {
                return Err(ManifestError::Invalid(format!(
                    "covector {:?} has {} components, expected {}",
                    xi,
                    xi.len(),
                    self.dimension - 1
                )));
            }
            if xi.iter().all(|v| *v == 0.0) {
                return Err(ManifestError::Invalid("zero covector".into()));
            }
        }
        // Admissibility via construction.
        let _ = self.material::<Complex64>()?;
        let _ = self.metric::<Complex64>()?;
        Ok(())
    }

    pub fn covector_list(&self) -> Vec<Vec<f64>> {
        match &self.covectors {
            CovectorSpec::Explicit(v) => v.clone(),
            CovectorSpec::Ladder {
                direction,
                magnitudes,
            } => magnitudes
                .iter()
                .map(|&t| direction.iter().map(|&d| d * t).collect())
                .collect(),
        }
    }

    /// The ladder view of the covectors: unit direction plus magnitudes.
    /// Explicit lists must share a direction to be usable as a ladder.
    pub fn ladder(&self) -> Result<(Vec<f64>, Vec<f64>), ManifestError> {
        match &self.covectors {
            CovectorSpec::Ladder {
                direction,
                magnitudes,
            } => {
                let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
                Ok((
                    direction.iter().map(|v| v / norm).collect(),
                    magnitudes.iter().map(|&t| t * norm).collect(),
                ))
            }
            CovectorSpec::Explicit(list) => {
                let mut mags = Vec::new();
                let first = &list[0];
                let n0 = first.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dir: Vec<f64> = first.iter().map(|v| v / n0).collect();
                for xi in list {
                    let t = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for (a, b) in xi.iter().zip(dir.iter()) {
                        if (a / t - b).abs() > 1e-12 {
                            return Err(ManifestError::Invalid(
                                "covectors do not lie on one ray; a ladder needs a fixed direction"
                                    .into(),
                            ));
                        }
                    }
                    mags.push(t);
                }
                Ok((dir, mags))
            }
        }
    }

    pub fn metric<S: Scalar>(&self) -> Result<MetricJet<S>, ManifestError> {
        self.metric.build(self.dimension, self.orders.x + 1)
    }

    pub fn material<S: Scalar>(&self) -> Result<MaterialJet<S>, ManifestError> {
        let n = self.dimension;
        let order = self.orders.x;
        Ok(MaterialJet::new(
            self.material.lambda.to_jet(n, order)?,
            self.material.mu.to_jet(n, order)?,
            self.material.alpha.to_jet(n, order)?,
            self.material.beta.to_jet(n, order)?,
            self.material.rho,
            self.material.omega,
            self.material.theta0,
            self.material.c_heat,
        )?)
    }

    /// Normal-derivative coefficient arrays of the material, for round-trip
    /// comparisons (coefficients through the requested order).
    pub fn material_normal_coefficients(
        &self,
        through_order: usize,
    ) -> Result<[Vec<f64>; 4], ManifestError> {
        let mat = self.material::<Complex64>()?;
        let grab = |j: &TaylorJet<Complex64>| -> Vec<f64> {
            (0..=through_order)
                .map(|k| {
                    if k > j.order() {
                        0.0
                    } else {
                        j.normal_partial(k).expect("within order").re
                    }
                })
                .collect()
        };
        Ok([
            grab(&mat.lambda),
            grab(&mat.mu),
            grab(&mat.alpha),
            grab(&mat.beta),
        ])
    }
}

// ---------------------------------------------------------------------------
// Symbol table serialization.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

impl MatrixJson {
    pub fn from_cmat(m: &CMat) -> Self {
        MatrixJson(
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }

    pub fn to_cmat(&self) -> CMat {
        let rows = self.0.len();
        let cols = self.0[0].len();
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = Complex64::new(self.0[i][j][0], self.0[i][j][1]);
            }
        }
        m
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableEntryJson {
    pub xi: Vec<f64>,
    /// Boundary symbols by degree, `1` down to `1 - depth`.
    pub p: Vec<DegreeMatrixJson>,
    pub q: Vec<DegreeMatrixJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeMatrixJson {
    pub degree: i32,
    pub matrix: MatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableFileJson {
    pub provenance: TableFileProvenance,
    pub entries: Vec<TableEntryJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableFileProvenance {
    pub dimension: usize,
    pub depth: usize,
    pub orders: Orders,
    pub mode: Mode,
    pub base_point: Vec<f64>,
    pub metric: MetricSpec,
    pub constants: ConstantsJson,
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantsJson {
    pub rho: f64,
    pub omega: f64,
    pub theta0: f64,
    pub c_heat: f64,
}

impl TableFileJson {
    pub fn new(manifest: &Manifest, tables: &[(Vec<f64>, &SymbolTable<impl Scalar>)]) -> Self {
        let mut entries: Vec<TableEntryJson> = tables
            .iter()
            .map(|(xi, t)| TableEntryJson {
                xi: xi.clone(),
                p: t
                    .p_values()
                    .into_iter()
                    .map(|(degree, m)| DegreeMatrixJson {
                        degree,
                        matrix: MatrixJson::from_cmat(&m),
                    })
                    .collect(),
                q: t
                    .q_values()
                    .into_iter()
                    .map(|(degree, m)| DegreeMatrixJson {
                        degree,
                        matrix: MatrixJson::from_cmat(&m),
                    })
                    .collect(),
            })
            .collect();
        entries.sort_by(|a, b| a.xi.partial_cmp(&b.xi).expect("finite covectors"));
        TableFileJson {
            provenance: TableFileProvenance {
                dimension: manifest.dimension,
                depth: manifest.depth,
                orders: manifest.orders,
                mode: manifest.mode,
                base_point: vec![0.0; manifest.dimension],
                metric: manifest.metric.clone(),
                constants: ConstantsJson {
                    rho: manifest.material.rho,
                    omega: manifest.material.omega,
                    theta0: manifest.material.theta0,
                    c_heat: manifest.material.c_heat,
                },
                tolerances: manifest.tolerances.clone(),
            },
            entries,
        }
    }
}
