//! Finite, discrete-time path-space decoherence functional.
//!
//! Configuration space is a finite set {0, …, Q−1}; a path is a sequence of
//! n+1 configurations over the time grid t₀…tₙ. History propositions are
//! subsets of the Q^{n+1} paths, and the decoherence functional is the
//! double path sum
//!
//! ```text
//! d(α,β) = Σ_{q∈α, q'∈β} w[q] · conj(w[q']) · δ(qₙ, q'ₙ) · ρ(q₀, q'₀)
//! ```
//!
//! with the final-time coincidence constraint δ and the initial state ρ on
//! the configuration basis. Path weights come either from an explicit action
//! table (w = e^{−iS[q]}, unit counting measure) or from a transfer matrix
//! (w = ∏ₖ T[q_{k+1}, q_k], the step amplitude product; for equal-modulus
//! unitary transfers this is the pure-phase action weight times Q^{−n/2},
//! with S[q] = −Σₖ arg T[q_{k+1}, q_k]).
//!
//! Everything is an exact finite sum; additivity in each slot and the
//! complement identity hold to rearrangement roundoff, and for unitary
//! transfer models single-time coarse-grainings reproduce the operator-form
//! functional exactly.

use crate::matrix::{CMatrix, Complex64, LinalgError};
use crate::operators::DensityMatrix;
use crate::report::AxiomReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Default cap on enumerated paths and on surviving path pairs.
pub const DEFAULT_PATH_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("path enumeration requires budget {required}, limit is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },
    #[error("transfer matrix is not unitary: ‖T†T − I‖_max = {error:.3e}")]
    NotUnitary { error: f64 },
    #[error("transfer entry ({row},{col}) is zero; pure-phase correspondence needs all moduli equal")]
    ZeroEntry { row: usize, col: usize },
    #[error("transfer entry ({row},{col}) has modulus {modulus:.6}, expected Q^(-1/2) = {expected:.6}")]
    UnequalModulus {
        row: usize,
        col: usize,
        modulus: f64,
        expected: f64,
    },
    #[error("subsets overlap on {overlap} path(s); disjoint union is undefined")]
    OverlappingSubsets { overlap: usize },
    #[error("path {index} has length {found}, expected steps+1 = {expected}")]
    BadPathLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("configuration {value} out of range 0..{config_size}")]
    BadConfiguration { value: usize, config_size: usize },
    #[error("cylinder time {time} outside the grid 0..={steps}")]
    BadCylinderTime { time: usize, steps: usize },
    #[error("action table has {found} entries, expected Q^(n+1) = {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("model must specify exactly one of transfer, action_table")]
    AmbiguousAction,
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Where path weights come from.
#[derive(Debug, Clone)]
pub enum ActionSpec {
    /// Real action per path, indexed by lexicographic path rank; the path
    /// weight is the pure phase e^{−iS[q]} with unit counting measure.
    Table(Vec<f64>),
    /// Step amplitudes from a Q×Q matrix: w[q] = ∏ₖ T[q_{k+1}, q_k].
    /// Zero-amplitude transitions give the path zero weight.
    Transfer(CMatrix),
}

/// A finite path-integral model: configuration set size, time steps, path
/// weights, and the initial density matrix on the configuration basis.
#[derive(Debug, Clone)]
pub struct PathSpaceModel {
    config_size: usize,
    steps: usize,
    action: ActionSpec,
    rho0: DensityMatrix,
}

impl PathSpaceModel {
    pub fn new(
        config_size: usize,
        steps: usize,
        action: ActionSpec,
        rho0: DensityMatrix,
    ) -> Result<Self, PathError> {
        if config_size == 0 || steps == 0 {
            return Err(PathError::DimensionMismatch {
                context: "config_size and steps must be positive",
                expected: 1,
                found: 0,
            });
        }
        if rho0.dim() != config_size {
            return Err(PathError::DimensionMismatch {
                context: "rho0 on the configuration basis",
                expected: config_size,
                found: rho0.dim(),
            });
        }
        match &action {
            ActionSpec::Table(t) => {
                let expected = config_size.pow(steps as u32 + 1);
                if t.len() != expected {
                    return Err(PathError::TableLength {
                        expected,
                        found: t.len(),
                    });
                }
            }
            ActionSpec::Transfer(m) => {
                if m.rows() != config_size || m.cols() != config_size {
                    return Err(PathError::DimensionMismatch {
                        context: "transfer matrix",
                        expected: config_size,
                        found: m.rows().max(m.cols()),
                    });
                }
            }
        }
        Ok(Self {
            config_size,
            steps,
            action,
            rho0,
        })
    }

    pub fn config_size(&self) -> usize {
        self.config_size
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn action(&self) -> &ActionSpec {
        &self.action
    }

    pub fn rho0(&self) -> &DensityMatrix {
        &self.rho0
    }

    /// Total number of paths Q^{n+1}.
    pub fn path_count(&self) -> u64 {
        (self.config_size as u64).pow(self.steps as u32 + 1)
    }

    /// Lexicographic rank of a path (first configuration most significant).
    pub fn rank(&self, path: &[usize]) -> u64 {
        let mut r = 0u64;
        for &q in path {
            r = r * self.config_size as u64 + q as u64;
        }
        r
    }

    /// Inverse of [`rank`].
    pub fn unrank(&self, mut rank: u64) -> Vec<usize> {
        let q = self.config_size as u64;
        let mut path = vec![0usize; self.steps + 1];
        for k in (0..=self.steps).rev() {
            path[k] = (rank % q) as usize;
            rank /= q;
        }
        path
    }

    /// Complex weight of one path.
    pub fn weight(&self, path: &[usize]) -> Complex64 {
        match &self.action {
            ActionSpec::Table(t) => {
                Complex64::from_polar(1.0, -t[self.rank(path) as usize])
            }
            ActionSpec::Transfer(m) => {
                let mut w = Complex64::new(1.0, 0.0);
                for k in 0..self.steps {
                    w *= m[(path[k + 1], path[k])];
                }
                w
            }
        }
    }

    /// The action S[q] with the phase convention weight = |w| e^{−iS[q]};
    /// `None` for zero-amplitude transfer paths.
    pub fn action_value(&self, path: &[usize]) -> Option<f64> {
        match &self.action {
            ActionSpec::Table(t) => Some(t[self.rank(path) as usize]),
            ActionSpec::Transfer(_) => {
                let w = self.weight(path);
                (w.norm() > 0.0).then(|| -w.arg())
            }
        }
    }
}

/// Wire form of a path model:
/// `{"config_size": Q, "steps": n, "transfer"?: matrix,
///   "action_table"?: [...], "rho0": matrix}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSpaceModelRepr {
    pub config_size: usize,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_table: Option<Vec<f64>>,
    pub rho0: CMatrix,
}

impl PathSpaceModelRepr {
    pub fn into_model(self) -> Result<PathSpaceModel, PathError> {
        let action = match (self.transfer, self.action_table) {
            (Some(t), None) => ActionSpec::Transfer(t),
            (None, Some(a)) => ActionSpec::Table(a),
            _ => return Err(PathError::AmbiguousAction),
        };
        let rho0 = DensityMatrix::new(self.rho0)?;
        PathSpaceModel::new(self.config_size, self.steps, action, rho0)
    }
}

impl From<&PathSpaceModel> for PathSpaceModelRepr {
    fn from(m: &PathSpaceModel) -> Self {
        let (transfer, action_table) = match &m.action {
            ActionSpec::Transfer(t) => (Some(t.clone()), None),
            ActionSpec::Table(a) => (None, Some(a.clone())),
        };
        Self {
            config_size: m.config_size,
            steps: m.steps,
            transfer,
            action_table,
            rho0: m.rho0.matrix().clone(),
        }
    }
}

/// One cylinder constraint: the configuration at `time` lies in `cell`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CylinderConstraint {
    pub time: usize,
    pub cell: Vec<usize>,
}

/// A subset of path space: everything, an explicit path list, or a cylinder
/// set constrained at chosen times.
///
/// Serializes as the string `"all"`, `{"paths": [[q₀,…,qₙ], …]}`, or
/// `{"cylinder": [{"time": k, "cell": [..]}, …]}`.
#[derive(Debug, Clone)]
pub enum PathSubset {
    All,
    Paths { paths: Vec<Vec<usize>> },
    Cylinder { cylinder: Vec<CylinderConstraint> },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SubsetRepr {
    Token(String),
    Paths { paths: Vec<Vec<usize>> },
    Cylinder { cylinder: Vec<CylinderConstraint> },
}

impl Serialize for PathSubset {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            PathSubset::All => SubsetRepr::Token("all".into()),
            PathSubset::Paths { paths } => SubsetRepr::Paths {
                paths: paths.clone(),
            },
            PathSubset::Cylinder { cylinder } => SubsetRepr::Cylinder {
                cylinder: cylinder.clone(),
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PathSubset {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match SubsetRepr::deserialize(deserializer)? {
            SubsetRepr::Token(t) if t == "all" => Ok(PathSubset::All),
            SubsetRepr::Token(t) => Err(serde::de::Error::custom(format!(
                "unknown subset token {t:?}, expected \"all\""
            ))),
            SubsetRepr::Paths { paths } => Ok(PathSubset::Paths { paths }),
            SubsetRepr::Cylinder { cylinder } => Ok(PathSubset::Cylinder { cylinder }),
        }
    }
}

impl PathSubset {
    pub fn singleton(path: Vec<usize>) -> Self {
        PathSubset::Paths { paths: vec![path] }
    }

    fn validate(&self, m: &PathSpaceModel) -> Result<(), PathError> {
        match self {
            PathSubset::All => Ok(()),
            PathSubset::Paths { paths } => {
                for (index, p) in paths.iter().enumerate() {
                    if p.len() != m.steps + 1 {
                        return Err(PathError::BadPathLength {
                            index,
                            expected: m.steps + 1,
                            found: p.len(),
                        });
                    }
                    for &q in p {
                        if q >= m.config_size {
                            return Err(PathError::BadConfiguration {
                                value: q,
                                config_size: m.config_size,
                            });
                        }
                    }
                }
                Ok(())
            }
            PathSubset::Cylinder { cylinder } => {
                for c in cylinder {
                    if c.time > m.steps {
                        return Err(PathError::BadCylinderTime {
                            time: c.time,
                            steps: m.steps,
                        });
                    }
                    for &q in &c.cell {
                        if q >= m.config_size {
                            return Err(PathError::BadConfiguration {
                                value: q,
                                config_size: m.config_size,
                            });
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, path: &[usize]) -> bool {
        match self {
            PathSubset::All => true,
            PathSubset::Paths { paths } => paths.iter().any(|p| p == path),
            PathSubset::Cylinder { cylinder } => cylinder
                .iter()
                .all(|c| c.cell.contains(&path[c.time])),
        }
    }

    /// Ranks of all member paths, in lexicographic order.
    pub fn materialize(
        &self,
        m: &PathSpaceModel,
        budget: u64,
    ) -> Result<BTreeSet<u64>, PathError> {
        self.validate(m)?;
        let total = m.path_count();
        if total > budget {
            return Err(PathError::BudgetExceeded {
                required: total,
                budget,
            });
        }
        if let PathSubset::Paths { paths } = self {
            return Ok(paths.iter().map(|p| m.rank(p)).collect());
        }
        let mut out = BTreeSet::new();
        for rank in 0..total {
            if self.contains(&m.unrank(rank)) {
                out.insert(rank);
            }
        }
        Ok(out)
    }

    /// The complement within the model's full path space.
    pub fn complement(&self, m: &PathSpaceModel, budget: u64) -> Result<PathSubset, PathError> {
        let mine = self.materialize(m, budget)?;
        let paths = (0..m.path_count())
            .filter(|r| !mine.contains(r))
            .map(|r| m.unrank(r))
            .collect();
        Ok(PathSubset::Paths { paths })
    }

    /// Disjoint union; rejects overlapping inputs before any evaluation.
    pub fn union_disjoint(
        &self,
        other: &PathSubset,
        m: &PathSpaceModel,
        budget: u64,
    ) -> Result<PathSubset, PathError> {
        let a = self.materialize(m, budget)?;
        let b = other.materialize(m, budget)?;
        let overlap = a.intersection(&b).count();
        if overlap > 0 {
            return Err(PathError::OverlappingSubsets { overlap });
        }
        let paths = a.union(&b).map(|&r| m.unrank(r)).collect();
        Ok(PathSubset::Paths { paths })
    }
}

/// Amplitude sums grouped by (initial, final) configuration; the grouped
/// form of the double path sum.
struct GroupedAmplitudes {
    /// sums[x0 * Q + xn] = Σ weights of member paths with q₀=x0, qₙ=xn
    sums: Vec<Complex64>,
    counts: Vec<u64>,
}

fn group_amplitudes(
    subset: &PathSubset,
    m: &PathSpaceModel,
    budget: u64,
) -> Result<GroupedAmplitudes, PathError> {
    let q = m.config_size;
    let mut sums = vec![Complex64::new(0.0, 0.0); q * q];
    let mut counts = vec![0u64; q * q];
    for rank in subset.materialize(m, budget)? {
        let path = m.unrank(rank);
        let slot = path[0] * q + path[m.steps];
        sums[slot] += m.weight(&path);
        counts[slot] += 1;
    }
    Ok(GroupedAmplitudes { sums, counts })
}

/// The double path sum d(a,b) with the default budget.
pub fn d_path(a: &PathSubset, b: &PathSubset, m: &PathSpaceModel) -> Result<Complex64, PathError> {
    d_path_with_budget(a, b, m, DEFAULT_PATH_BUDGET)
}

/// The double path sum
/// d(a,b) = Σ_{q∈a, q'∈b, qₙ=q'ₙ} w[q] conj(w[q']) ρ(q₀,q'₀),
/// evaluated by grouping each subset's amplitudes over (q₀, qₙ). The budget
/// bounds both the enumeration Q^{n+1} and the number of path pairs that
/// survive the δ and ρ constraints.
pub fn d_path_with_budget(
    a: &PathSubset,
    b: &PathSubset,
    m: &PathSpaceModel,
    budget: u64,
) -> Result<Complex64, PathError> {
    let ga = group_amplitudes(a, m, budget)?;
    let gb = group_amplitudes(b, m, budget)?;
    let q = m.config_size;
    let rho = m.rho0.matrix();

    let mut pairs: u64 = 0;
    for x0 in 0..q {
        for x0p in 0..q {
            if rho[(x0, x0p)].norm() == 0.0 {
                continue;
            }
            for xn in 0..q {
                pairs = pairs.saturating_add(ga.counts[x0 * q + xn] * gb.counts[x0p * q + xn]);
            }
        }
    }
    if pairs > budget {
        return Err(PathError::BudgetExceeded {
            required: pairs,
            budget,
        });
    }

    let mut total = Complex64::new(0.0, 0.0);
    for x0 in 0..q {
        for x0p in 0..q {
            let r = rho[(x0, x0p)];
            if r.norm() == 0.0 {
                continue;
            }
            for xn in 0..q {
                total += ga.sums[x0 * q + xn] * gb.sums[x0p * q + xn].conj() * r;
            }
        }
    }
    Ok(total)
}

/// Check the finite-sum identities of the path functional over a sample of
/// subsets: additivity d(α⊎β, γ) = d(α,γ) + d(β,γ) on disjoint pairs, and
/// the complement identity d(¬α, γ) = d(1,γ) − d(α,γ). Both are exact
/// rearrangements, checked to 1e−12.
pub fn verify_path_axioms(
    m: &PathSpaceModel,
    samples: &[PathSubset],
) -> Result<AxiomReport, PathError> {
    verify_path_axioms_with_budget(m, samples, DEFAULT_PATH_BUDGET)
}

pub fn verify_path_axioms_with_budget(
    m: &PathSpaceModel,
    samples: &[PathSubset],
    budget: u64,
) -> Result<AxiomReport, PathError> {
    const IDENTITY_TOL: f64 = 1e-12;
    let mut report = AxiomReport::default();
    let materialized: Vec<BTreeSet<u64>> = samples
        .iter()
        .map(|s| s.materialize(m, budget))
        .collect::<Result<_, _>>()?;

    for (i, a) in samples.iter().enumerate() {
        for (j, b) in samples.iter().enumerate() {
            if j <= i {
                continue;
            }
            if materialized[i].intersection(&materialized[j]).count() > 0 {
                continue; // ⊕ undefined on overlapping subsets
            }
            let joined = a.union_disjoint(b, m, budget)?;
            for (k, g) in samples.iter().enumerate() {
                report.check();
                let lhs = d_path_with_budget(&joined, g, m, budget)?;
                let rhs = d_path_with_budget(a, g, m, budget)?
                    + d_path_with_budget(b, g, m, budget)?;
                let gap = (lhs - rhs).norm();
                if gap > IDENTITY_TOL {
                    report.violation(
                        "additivity",
                        &[i, j, k],
                        gap,
                        "d(α⊎β,γ) differs from d(α,γ)+d(β,γ)",
                    );
                }
            }
        }
    }

    for (i, a) in samples.iter().enumerate() {
        let not_a = a.complement(m, budget)?;
        for (k, g) in samples.iter().enumerate() {
            report.check();
            let lhs = d_path_with_budget(&not_a, g, m, budget)?;
            let rhs = d_path_with_budget(&PathSubset::All, g, m, budget)?
                - d_path_with_budget(a, g, m, budget)?;
            let gap = (lhs - rhs).norm();
            if gap > IDENTITY_TOL {
                report.violation(
                    "complement",
                    &[i, k],
                    gap,
                    "d(¬α,γ) differs from d(1,γ) − d(α,γ)",
                );
            }
        }
    }

    Ok(report)
}

/// Validate a transfer matrix for the pure-phase correspondence: unitary,
/// no zero entries, all moduli Q^{−1/2}.
fn check_pure_phase_transfer(t: &CMatrix, q: usize) -> Result<(), PathError> {
    let unit_err = t.unitarity_error();
    if unit_err > 1e-10 {
        return Err(PathError::NotUnitary { error: unit_err });
    }
    let expected = (q as f64).powf(-0.5);
    for i in 0..q {
        for j in 0..q {
            let modulus = t[(i, j)].norm();
            if modulus == 0.0 {
                return Err(PathError::ZeroEntry { row: i, col: j });
            }
            if (modulus - expected).abs() > 1e-10 {
                return Err(PathError::UnequalModulus {
                    row: i,
                    col: j,
                    modulus,
                    expected,
                });
            }
        }
    }
    Ok(())
}

/// Cross-validate the path sum against the unitary operator formalism: for
/// every pair of fully-constrained cylinders (a singleton cell at each time
/// 1..=n) compare d_path with tr(Ĉ_α ρ Ĉ_β†), where Ĉ chains the transfer
/// matrix with configuration-basis projectors. Returns the maximum
/// discrepancy over all Q^{2n} pairs.
///
/// Only transfer matrices with all moduli equal to Q^{−1/2} are accepted:
/// those are exactly the models whose step amplitudes are pure action
/// phases under a constant measure factor.
pub fn path_vs_operator_crosscheck(
    m: &PathSpaceModel,
    transfer: &CMatrix,
) -> Result<f64, PathError> {
    let q = m.config_size;
    if transfer.rows() != q || transfer.cols() != q {
        return Err(PathError::DimensionMismatch {
            context: "crosscheck transfer matrix",
            expected: q,
            found: transfer.rows().max(transfer.cols()),
        });
    }
    check_pure_phase_transfer(transfer, q)?;

    let n = m.steps;
    let cylinders: u64 = (q as u64).pow(n as u32);
    let rho = m.rho0.matrix();

    // Ĉ for the assignment (c₁,…,cₙ): Pₙ T … P₁ T, acting on the
    // configuration basis.
    let chain = |assignment: &[usize]| -> CMatrix {
        let mut c = transfer.clone();
        for (k, &cell) in assignment.iter().enumerate() {
            let proj = CMatrix::from_fn(q, q, |i, j| {
                if i == j && i == cell {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            c = &proj * &c;
            if k + 1 < n {
                c = transfer * &c;
            }
        }
        c
    };

    let decode = |mut idx: u64| -> Vec<usize> {
        let mut a = vec![0usize; n];
        for k in (0..n).rev() {
            a[k] = (idx % q as u64) as usize;
            idx /= q as u64;
        }
        a
    };

    let as_cylinder = |assignment: &[usize]| PathSubset::Cylinder {
        cylinder: assignment
            .iter()
            .enumerate()
            .map(|(k, &cell)| CylinderConstraint {
                time: k + 1,
                cell: vec![cell],
            })
            .collect(),
    };

    let mut max_gap: f64 = 0.0;
    for ia in 0..cylinders {
        let assign_a = decode(ia);
        let c_a = chain(&assign_a);
        let subset_a = as_cylinder(&assign_a);
        for ib in 0..cylinders {
            let assign_b = decode(ib);
            let c_b = chain(&assign_b);
            let subset_b = as_cylinder(&assign_b);

            let operator_side = (&(&c_a * rho) * &c_b.adjoint()).trace();
            let path_side = d_path(&subset_a, &subset_b, m)?;
            max_gap = max_gap.max((operator_side - path_side).norm());
        }
    }
    Ok(max_gap)
}
