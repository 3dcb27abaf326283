//! Gaussian beliefs over profile weights and the data they are fit to.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalue slack allowed when validating positive semidefiniteness.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// A Gaussian distribution over profile weights: prior, posterior, or
/// mass-preference prior, depending on where it sits in the pipeline.
///
/// Wire format: `{"mean": [...], "cov": [[...], ...]}` with the covariance
/// stored row by row. JSON round-trips are bit-exact (floats are written in
/// shortest round-trip form, which never exceeds 17 significant digits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BeliefWire", into = "BeliefWire")]
pub struct GaussianBelief {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct BeliefWire {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl GaussianBelief {
    /// Builds a belief, validating that the covariance is square, symmetric
    /// and positive semidefinite within [`PSD_TOLERANCE`] on its eigenvalues.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() {
            return Err(Error::dimension("covariance columns", cov.nrows(), cov.ncols()));
        }
        if cov.nrows() != mean.len() {
            return Err(Error::dimension("covariance", mean.len(), cov.nrows()));
        }
        if mean.iter().any(|v| !v.is_finite()) || cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("belief has non-finite entries"));
        }
        for i in 0..cov.nrows() {
            for j in (i + 1)..cov.ncols() {
                if (cov[(i, j)] - cov[(j, i)]).abs() > PSD_TOLERANCE {
                    return Err(Error::numeric(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if linalg::min_eigenvalue(&cov) < -PSD_TOLERANCE {
            return Err(Error::numeric(
                "covariance is not positive semidefinite within tolerance",
            ));
        }
        Ok(GaussianBelief { mean, cov })
    }

    /// Builds a belief from parts known to satisfy the invariants (used by
    /// the inference code, which symmetrizes and floors its own outputs).
    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        debug_assert_eq!(mean.len(), cov.nrows());
        GaussianBelief { mean, cov }
    }

    /// The standard prior `N(0, I)`.
    pub fn standard(dim: usize) -> Self {
        GaussianBelief {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Copy of this belief with covariance eigenvalues floored at `floor`.
    pub fn with_floored_cov(&self, floor: f64) -> Self {
        GaussianBelief {
            mean: self.mean.clone(),
            cov: linalg::eigen_floor(&self.cov, floor),
        }
    }
}

impl TryFrom<BeliefWire> for GaussianBelief {
    type Error = Error;

    fn try_from(wire: BeliefWire) -> Result<Self> {
        let dim = wire.mean.len();
        for (i, row) in wire.cov.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::dimension(format!("covariance row {i}"), dim, row.len()));
            }
        }
        if wire.cov.len() != dim {
            return Err(Error::dimension("covariance rows", dim, wire.cov.len()));
        }
        let cov = DMatrix::from_fn(dim, dim, |i, j| wire.cov[i][j]);
        GaussianBelief::new(DVector::from_vec(wire.mean), cov)
    }
}

impl From<GaussianBelief> for BeliefWire {
    fn from(belief: GaussianBelief) -> BeliefWire {
        let dim = belief.dim();
        BeliefWire {
            mean: belief.mean.iter().copied().collect(),
            cov: (0..dim)
                .map(|i| (0..dim).map(|j| belief.cov[(i, j)]).collect())
                .collect(),
        }
    }
}

/// Componentwise box constraints on profile weights. Entries may be
/// infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dimension("box upper bounds", lower.len(), upper.len()));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() {
                return Err(Error::config(format!("bound {i} is NaN")));
            }
            if lo > hi {
                return Err(Error::config(format!(
                    "infeasible bounds at component {i}: {lo} > {hi}"
                )));
            }
        }
        Ok(BoxBounds { lower, upper })
    }

    /// No constraints in any component.
    pub fn unbounded(dim: usize) -> Self {
        BoxBounds {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, w: &DVector<f64>) -> bool {
        w.len() == self.dim()
            && w.iter()
                .enumerate()
                .all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }

    /// Componentwise projection onto the box.
    pub fn clamp(&self, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            w.len(),
            w.iter()
                .enumerate()
                .map(|(i, &v)| v.clamp(self.lower[i], self.upper[i])),
        )
    }
}

/// Where a comparison example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub user: usize,
    pub scenario: usize,
    pub pair: usize,
}

impl Provenance {
    pub fn new(user: usize, scenario: usize, pair: usize) -> Self {
        Provenance { user, scenario, pair }
    }
}

/// One observed pairwise preference, stored as the feature difference
/// `d = u(preferred) - u(rejected)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonExample {
    d: DVector<f64>,
    pub provenance: Provenance,
}

impl ComparisonExample {
    pub fn new(d: DVector<f64>, provenance: Provenance) -> Result<Self> {
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("comparison difference has non-finite entries"));
        }
        Ok(ComparisonExample { d, provenance })
    }

    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }
}

/// A set of comparison examples with a common dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    examples: Vec<ComparisonExample>,
}

impl TrainingSet {
    pub fn new(examples: Vec<ComparisonExample>) -> Result<Self> {
        if let Some(first) = examples.first() {
            let dim = first.dim();
            for (i, example) in examples.iter().enumerate() {
                if example.dim() != dim {
                    return Err(Error::dimension(format!("comparison {i}"), dim, example.dim()));
                }
            }
        }
        Ok(TrainingSet { examples })
    }

    pub fn empty() -> Self {
        TrainingSet { examples: Vec::new() }
    }

    /// Convenience constructor for raw difference vectors (default
    /// provenance), used by tests and synthetic experiments.
    pub fn from_differences(diffs: Vec<DVector<f64>>) -> Result<Self> {
        TrainingSet::new(
            diffs
                .into_iter()
                .map(|d| ComparisonExample::new(d, Provenance::default()))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn examples(&self) -> &[ComparisonExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Dimension of the examples, or `None` when empty.
    pub fn dim(&self) -> Option<usize> {
        self.examples.first().map(|e| e.dim())
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComparisonExample> {
        self.examples.iter()
    }
}
