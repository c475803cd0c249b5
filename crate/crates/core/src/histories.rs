//! The orthoalgebra of history propositions.
//!
//! A homogeneous history is a time-ordered sequence of single-time
//! projectors, "α at t₁ and then β at t₂ and then …". It is represented on
//! the tensor product of one copy of the single-time Hilbert space per time
//! in the temporal support, where the sequential conjunction becomes
//! α ⊗ β ⊗ …, which is always a projector even when the single-time factors
//! do not commute.
//!
//! On these history projectors the module provides the partial-sum `⊕` of
//! disjoint propositions, the negation `¬P = 1 − P`, the coarse-graining
//! order `≤`, partitions of unity (exclusive, exhaustive sets), and a
//! harness that verifies the orthoalgebra axioms over a sample set.

use crate::matrix::{CMatrix, LinalgError};
use crate::operators::{check_projector, default_tol, Projector};
use crate::report::AxiomReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error("invalid temporal support: {0}")]
    InvalidSupport(String),
    #[error("temporal supports differ")]
    SupportMismatch,
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("propositions are not disjoint: max |PQ| = {overlap:.3e} exceeds tol {tol:.3e}")]
    NotDisjoint { overlap: f64, tol: f64 },
    #[error("first history is not a fine-graining of the second: residual {residual:.3e}")]
    NotCoarseGraining { residual: f64 },
    #[error("partition is empty")]
    EmptyPartition,
    #[error("partition members {i} and {j} are not exclusive: max |PᵢPⱼ| = {overlap:.3e}")]
    PartitionNotExclusive {
        i: usize,
        j: usize,
        overlap: f64,
        tol: f64,
    },
    #[error("partition is not exhaustive: max |ΣPᵢ − 1| = {deficit:.3e}")]
    PartitionNotExhaustive { deficit: f64, tol: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The ordered times at which a history makes assertions, together with the
/// fiducial time t₀ at which the initial state is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SupportRepr", into = "SupportRepr")]
pub struct TemporalSupport {
    t0: f64,
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SupportRepr {
    t0: f64,
    times: Vec<f64>,
}

impl From<TemporalSupport> for SupportRepr {
    fn from(s: TemporalSupport) -> Self {
        SupportRepr {
            t0: s.t0,
            times: s.times,
        }
    }
}

impl TryFrom<SupportRepr> for TemporalSupport {
    type Error = HistoryError;
    fn try_from(r: SupportRepr) -> Result<Self, HistoryError> {
        TemporalSupport::new(r.t0, r.times)
    }
}

impl TemporalSupport {
    pub fn new(t0: f64, times: Vec<f64>) -> Result<Self, HistoryError> {
        if times.is_empty() {
            return Err(HistoryError::InvalidSupport("no times given".into()));
        }
        if !t0.is_finite() || times.iter().any(|t| !t.is_finite()) {
            return Err(HistoryError::InvalidSupport("non-finite time".into()));
        }
        if t0 >= times[0] {
            return Err(HistoryError::InvalidSupport(format!(
                "t0 = {} must precede the first time {}",
                t0, times[0]
            )));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HistoryError::InvalidSupport(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(Self { t0, times })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one time
    }

    /// True if every time of `self` occurs in `other` and t₀ matches.
    pub fn is_sub_support_of(&self, other: &TemporalSupport) -> bool {
        self.t0 == other.t0 && self.times.iter().all(|t| other.times.contains(t))
    }
}

/// A homogeneous history: one single-time projector per support time, all on
/// the same single-time space.
#[derive(Debug, Clone)]
pub struct HomogeneousHistory {
    support: TemporalSupport,
    props: Vec<Projector>,
}

impl HomogeneousHistory {
    pub fn new(support: TemporalSupport, props: Vec<Projector>) -> Result<Self, HistoryError> {
        if props.len() != support.len() {
            return Err(HistoryError::DimensionMismatch {
                context: "one projector per support time",
                expected: support.len(),
                found: props.len(),
            });
        }
        let d = props[0].dim();
        for p in &props {
            if p.dim() != d {
                return Err(HistoryError::DimensionMismatch {
                    context: "single-time projector dimension",
                    expected: d,
                    found: p.dim(),
                });
            }
        }
        Ok(Self { support, props })
    }

    pub fn support(&self) -> &TemporalSupport {
        &self.support
    }

    pub fn props(&self) -> &[Projector] {
        &self.props
    }

    /// Dimension of the single-time space.
    pub fn site_dim(&self) -> usize {
        self.props[0].dim()
    }

    /// Extend to a finer support by inserting identity factors at the times
    /// `target` has and `self` lacks. `target` must contain every time of
    /// `self` and share its t₀.
    pub fn extend_support(&self, target: &TemporalSupport) -> Result<Self, HistoryError> {
        if !self.support.is_sub_support_of(target) {
            return Err(HistoryError::SupportMismatch);
        }
        let d = self.site_dim();
        let identity = Projector::new(CMatrix::identity(d)).expect("identity is a projector");
        let props = target
            .times()
            .iter()
            .map(|t| {
                match self.support.times().iter().position(|s| s == t) {
                    Some(k) => self.props[k].clone(),
                    None => identity.clone(),
                }
            })
            .collect();
        Self::new(target.clone(), props)
    }
}

/// Best-effort classification of a history projector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryKind {
    Homogeneous,
    Inhomogeneous,
    Unit,
    Null,
    Other,
}

/// A history proposition realized as a projector on the tensor space over
/// its temporal support.
#[derive(Debug, Clone)]
pub struct HistoryProjector {
    support: TemporalSupport,
    site_dim: usize,
    proj: Projector,
    kind: HistoryKind,
}

impl HistoryProjector {
    /// Wrap an arbitrary projector on the tensor space of the support.
    pub fn new(
        support: TemporalSupport,
        site_dim: usize,
        proj: Projector,
        kind: HistoryKind,
    ) -> Result<Self, HistoryError> {
        let expected = site_dim.pow(support.len() as u32);
        if proj.dim() != expected {
            return Err(HistoryError::DimensionMismatch {
                context: "history projector on tensor space",
                expected,
                found: proj.dim(),
            });
        }
        Ok(Self {
            support,
            site_dim,
            proj,
            kind,
        })
    }

    /// The always-true proposition on this support.
    pub fn unit(support: TemporalSupport, site_dim: usize) -> Self {
        let dim = site_dim.pow(support.len() as u32);
        Self {
            support,
            site_dim,
            proj: Projector::new_unchecked(CMatrix::identity(dim), default_tol(dim)),
            kind: HistoryKind::Unit,
        }
    }

    /// The always-false proposition on this support.
    pub fn null(support: TemporalSupport, site_dim: usize) -> Self {
        let dim = site_dim.pow(support.len() as u32);
        Self {
            support,
            site_dim,
            proj: Projector::new_unchecked(CMatrix::zeros(dim, dim), default_tol(dim)),
            kind: HistoryKind::Null,
        }
    }

    pub fn support(&self) -> &TemporalSupport {
        &self.support
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn projector(&self) -> &Projector {
        &self.proj
    }

    pub fn matrix(&self) -> &CMatrix {
        self.proj.matrix()
    }

    pub fn dim(&self) -> usize {
        self.proj.dim()
    }

    pub fn kind(&self) -> HistoryKind {
        self.kind
    }

    fn classify_boundary(matrix: &CMatrix, tol: f64) -> Option<HistoryKind> {
        if matrix.max_abs() <= tol {
            Some(HistoryKind::Null)
        } else if matrix.max_abs_diff(&CMatrix::identity(matrix.rows())) <= tol {
            Some(HistoryKind::Unit)
        } else {
            None
        }
    }

    fn same_arena(&self, other: &Self) -> Result<(), HistoryError> {
        if self.support != other.support {
            return Err(HistoryError::SupportMismatch);
        }
        if self.dim() != other.dim() || self.site_dim != other.site_dim {
            return Err(HistoryError::DimensionMismatch {
                context: "history projectors on a shared tensor space",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

/// Represent a homogeneous history as the tensor product of its single-time
/// projectors: (α_{t₁}, …, α_{tₙ}) becomes α_{t₁} ⊗ … ⊗ α_{tₙ}.
pub fn homogeneous_projector(h: &HomogeneousHistory) -> HistoryProjector {
    let product = h
        .props
        .iter()
        .skip(1)
        .fold(h.props[0].matrix().clone(), |acc, p| acc.kron(p.matrix()));
    let dim = product.rows();
    let tol = default_tol(dim);
    let kind = HistoryProjector::classify_boundary(&product, tol).unwrap_or(HistoryKind::Homogeneous);
    HistoryProjector {
        support: h.support.clone(),
        site_dim: h.site_dim(),
        proj: Projector::new_unchecked(product, tol),
        kind,
    }
}

/// ¬a = 1 − P on the same support.
///
/// The negation of a homogeneous history is tagged inhomogeneous: expanding
/// 1⊗1 − P⊗Q = ¬P⊗Q + P⊗¬Q + ¬P⊗¬Q writes it as a sum of pairwise-disjoint
/// homogeneous pieces, and the same expansion works for any factor count.
pub fn negation(a: &HistoryProjector) -> HistoryProjector {
    let matrix = &CMatrix::identity(a.dim()) - a.matrix();
    let tol = a.proj.tol();
    let kind = HistoryProjector::classify_boundary(&matrix, tol).unwrap_or(match a.kind {
        HistoryKind::Homogeneous | HistoryKind::Unit | HistoryKind::Null => {
            HistoryKind::Inhomogeneous
        }
        HistoryKind::Inhomogeneous | HistoryKind::Other => HistoryKind::Other,
    });
    HistoryProjector {
        support: a.support.clone(),
        site_dim: a.site_dim,
        proj: Projector::new_unchecked(matrix, tol),
        kind,
    }
}

/// a ⊥ b: true iff ‖P_a P_b‖_max ≤ tol. For hermitian idempotents PQ = 0
/// iff QP = 0, so one product suffices; the symmetry is asserted in tests.
pub fn disjoint(a: &HistoryProjector, b: &HistoryProjector, tol: f64) -> Result<bool, HistoryError> {
    a.same_arena(b)?;
    Ok((a.matrix() * b.matrix()).max_abs() <= tol)
}

/// The partial disjoint-sum a ⊕ b = P_a + P_b, defined only when a ⊥ b.
pub fn osum(a: &HistoryProjector, b: &HistoryProjector) -> Result<HistoryProjector, HistoryError> {
    a.same_arena(b)?;
    let tol = a.proj.tol().max(b.proj.tol());
    let overlap = (a.matrix() * b.matrix()).max_abs();
    if overlap > tol {
        return Err(HistoryError::NotDisjoint { overlap, tol });
    }
    if a.kind == HistoryKind::Null {
        return Ok(b.clone());
    }
    if b.kind == HistoryKind::Null {
        return Ok(a.clone());
    }
    let matrix = a.matrix() + b.matrix();
    let kind = HistoryProjector::classify_boundary(&matrix, tol).unwrap_or(
        match (a.kind, b.kind) {
            (HistoryKind::Other, _) | (_, HistoryKind::Other) => HistoryKind::Other,
            _ => HistoryKind::Inhomogeneous,
        },
    );
    Ok(HistoryProjector {
        support: a.support.clone(),
        site_dim: a.site_dim,
        proj: Projector::new_unchecked(matrix, tol),
        kind,
    })
}

/// The coarse-graining order: a ≤ b iff P_b P_a = P_a, i.e. a projects into
/// the range of b.
pub fn leq(a: &HistoryProjector, b: &HistoryProjector, tol: f64) -> Result<bool, HistoryError> {
    a.same_arena(b)?;
    Ok((&(b.matrix() * a.matrix()) - a.matrix()).max_abs() <= tol)
}

/// The witness γ with b = a ⊕ γ when a ≤ b, namely γ = P_b − P_a.
pub fn coarse_graining_witness(
    a: &HistoryProjector,
    b: &HistoryProjector,
) -> Result<HistoryProjector, HistoryError> {
    let tol = a.proj.tol().max(b.proj.tol());
    let residual = (&(b.matrix() * a.matrix()) - a.matrix()).max_abs();
    if !leq(a, b, tol)? {
        return Err(HistoryError::NotCoarseGraining { residual });
    }
    let matrix = b.matrix() - a.matrix();
    let kind = HistoryProjector::classify_boundary(&matrix, tol).unwrap_or(HistoryKind::Other);
    Ok(HistoryProjector {
        support: a.support.clone(),
        site_dim: a.site_dim,
        proj: Projector::new_unchecked(matrix, tol),
        kind,
    })
}

/// An exclusive, exhaustive set of history propositions: pairwise disjoint
/// projectors summing to the identity on a shared support.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    members: Vec<HistoryProjector>,
    tol: f64,
}

/// Check the partition invariants over a candidate member list.
pub fn validate_partition(members: &[HistoryProjector], tol: f64) -> Result<(), HistoryError> {
    let first = members.first().ok_or(HistoryError::EmptyPartition)?;
    for m in &members[1..] {
        first.same_arena(m)?;
    }
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            let overlap = (members[i].matrix() * members[j].matrix()).max_abs();
            if overlap > tol {
                return Err(HistoryError::PartitionNotExclusive { i, j, overlap, tol });
            }
        }
    }
    let sum = members
        .iter()
        .skip(1)
        .fold(members[0].matrix().clone(), |acc, m| &acc + m.matrix());
    let deficit = sum.max_abs_diff(&CMatrix::identity(first.dim()));
    if deficit > tol {
        return Err(HistoryError::PartitionNotExhaustive { deficit, tol });
    }
    Ok(())
}

impl PartitionOfUnity {
    pub fn new(members: Vec<HistoryProjector>, tol: f64) -> Result<Self, HistoryError> {
        validate_partition(&members, tol)?;
        Ok(Self { members, tol })
    }

    pub fn members(&self) -> &[HistoryProjector] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn support(&self) -> &TemporalSupport {
        self.members[0].support()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn site_dim(&self) -> usize {
        self.members[0].site_dim()
    }
}

/// Verify the orthoalgebra axioms over a sample set of history projectors:
/// double negation, complement law and its within-sample uniqueness,
/// commutativity and associativity of ⊕ where defined, the equivalence
/// a ⊥ b ⇔ a ≤ ¬b, and the coarse-graining witness property.
///
/// Samples that fail the projector invariants are reported per item and
/// excluded from the pairwise checks.
pub fn verify_orthoalgebra(samples: &[HistoryProjector], tol: f64) -> AxiomReport {
    let mut report = AxiomReport::default();
    let mut valid: Vec<usize> = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        report.check();
        match check_projector(s.matrix(), tol.max(s.proj.tol())) {
            Ok(()) => valid.push(i),
            Err(e) => report.violation("projector-invariants", &[i], f64::NAN, e.to_string()),
        }
    }
    for &i in &valid {
        for &j in &valid {
            if samples[i].same_arena(&samples[j]).is_err() {
                report.violation(
                    "shared-arena",
                    &[i, j],
                    f64::NAN,
                    "samples do not share support/dimension",
                );
            }
        }
    }

    // Unary axioms.
    for &i in &valid {
        let a = &samples[i];
        let not_a = negation(a);

        report.check();
        let dneg = negation(&not_a).matrix().max_abs_diff(a.matrix());
        if dneg > tol {
            report.violation("double-negation", &[i], dneg, "¬¬a differs from a");
        }

        report.check();
        match osum(a, &not_a) {
            Ok(u) => {
                let gap = u.matrix().max_abs_diff(&CMatrix::identity(a.dim()));
                if gap > tol {
                    report.violation("complement-sum", &[i], gap, "a ⊕ ¬a differs from 1");
                }
            }
            Err(e) => report.violation("complement-sum", &[i], f64::NAN, e.to_string()),
        }

        // Within-sample uniqueness of the complement: any sample disjoint
        // from a that sums with it to 1 must be ¬a.
        for &j in &valid {
            if i == j {
                continue;
            }
            let b = &samples[j];
            if let Ok(true) = disjoint(a, b, tol) {
                let sums_to_unit = (a.matrix() + b.matrix())
                    .max_abs_diff(&CMatrix::identity(a.dim()))
                    <= tol;
                if sums_to_unit {
                    report.check();
                    let gap = b.matrix().max_abs_diff(not_a.matrix());
                    if gap > 2.0 * tol {
                        report.violation(
                            "complement-uniqueness",
                            &[i, j],
                            gap,
                            "a second complement of a differs from ¬a",
                        );
                    }
                }
            }
        }
    }

    // Binary axioms.
    for (pi, &i) in valid.iter().enumerate() {
        for &j in valid.iter().skip(pi + 1) {
            let (a, b) = (&samples[i], &samples[j]);

            report.check();
            let ab = disjoint(a, b, tol).unwrap_or(false);
            let ba = disjoint(b, a, tol).unwrap_or(false);
            if ab != ba {
                report.violation("disjoint-symmetry", &[i, j], f64::NAN, "PQ=0 but QP≠0");
            }

            // a ⊥ b ⇔ a ≤ ¬b, both directions.
            report.check();
            let below_complement = leq(a, &negation(b), tol).unwrap_or(false);
            if ab != below_complement {
                report.violation(
                    "perp-iff-leq-complement",
                    &[i, j],
                    f64::NAN,
                    format!("a⊥b = {ab} but a≤¬b = {below_complement}"),
                );
            }

            if ab {
                report.check();
                match (osum(a, b), osum(b, a)) {
                    (Ok(s1), Ok(s2)) => {
                        let gap = s1.matrix().max_abs_diff(s2.matrix());
                        if gap > tol {
                            report.violation("osum-commutativity", &[i, j], gap, "a⊕b ≠ b⊕a");
                        }
                    }
                    _ => report.violation(
                        "osum-commutativity",
                        &[i, j],
                        f64::NAN,
                        "⊕ defined in one order only",
                    ),
                }
            }

            // Coarse-graining witness: a ≤ b ⇒ b = a ⊕ (b − a) with the
            // witness a genuine projector disjoint from a.
            if leq(a, b, tol).unwrap_or(false) {
                report.check();
                match coarse_graining_witness(a, b) {
                    Ok(gamma) => {
                        let idem = gamma.matrix().idempotency_error();
                        if idem > 4.0 * tol {
                            report.violation(
                                "witness-projector",
                                &[i, j],
                                idem,
                                "witness b − a is not a projector",
                            );
                        } else if !disjoint(a, &gamma, 4.0 * tol).unwrap_or(false) {
                            report.violation(
                                "witness-disjoint",
                                &[i, j],
                                f64::NAN,
                                "witness b − a is not disjoint from a",
                            );
                        }
                    }
                    Err(e) => {
                        report.violation("witness-projector", &[i, j], f64::NAN, e.to_string())
                    }
                }
            }
        }
    }

    // Ternary: associativity of ⊕ where both groupings are defined.
    for (pi, &i) in valid.iter().enumerate() {
        for (pj, &j) in valid.iter().enumerate().skip(pi + 1) {
            for &k in valid.iter().skip(pj + 1) {
                let (a, b, c) = (&samples[i], &samples[j], &samples[k]);
                let left = osum(a, b).and_then(|ab| osum(&ab, c));
                let right = osum(b, c).and_then(|bc| osum(a, &bc));
                if let (Ok(l), Ok(r)) = (left, right) {
                    report.check();
                    let gap = l.matrix().max_abs_diff(r.matrix());
                    if gap > tol {
                        report.violation(
                            "osum-associativity",
                            &[i, j, k],
                            gap,
                            "(a⊕b)⊕c ≠ a⊕(b⊕c)",
                        );
                    }
                }
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{tensor, Complex64};
    use crate::sampling::{random_projector_random_rank, random_rank1_partition, rng_from_seed};

    fn support2() -> TemporalSupport {
        TemporalSupport::new(0.0, vec![1.0, 2.0]).unwrap()
    }

    fn qubit_proj(diag: [f64; 2]) -> Projector {
        Projector::new(CMatrix::from_real_diag(&diag)).unwrap()
    }

    #[test]
    fn support_validation() {
        assert!(TemporalSupport::new(0.0, vec![]).is_err());
        assert!(TemporalSupport::new(1.0, vec![1.0]).is_err());
        assert!(TemporalSupport::new(0.0, vec![2.0, 1.0]).is_err());
        assert!(TemporalSupport::new(0.0, vec![1.0, 1.0]).is_err());
        assert!(TemporalSupport::new(0.0, vec![1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn homogeneous_projector_examples() {
        // (I, I) on qubits is the unit history.
        let id = Projector::new(CMatrix::identity(2)).unwrap();
        let h = HomogeneousHistory::new(support2(), vec![id.clone(), id]).unwrap();
        let hp = homogeneous_projector(&h);
        assert_eq!(hp.kind(), HistoryKind::Unit);
        assert_eq!(hp.matrix(), &CMatrix::identity(4));

        // (diag(1,0), diag(0,1)) → diag(0,1,0,0), by hand.
        let h = HomogeneousHistory::new(
            support2(),
            vec![qubit_proj([1.0, 0.0]), qubit_proj([0.0, 1.0])],
        )
        .unwrap();
        let hp = homogeneous_projector(&h);
        assert_eq!(hp.kind(), HistoryKind::Homogeneous);
        assert_eq!(hp.matrix(), &CMatrix::from_real_diag(&[0.0, 1.0, 0.0, 0.0]));

        // Single-time history is the projector itself.
        let s1 = TemporalSupport::new(0.0, vec![1.0]).unwrap();
        let p = qubit_proj([1.0, 0.0]);
        let hp = homogeneous_projector(&HomogeneousHistory::new(s1, vec![p.clone()]).unwrap());
        assert_eq!(hp.matrix(), p.matrix());
    }

    #[test]
    fn mixed_dimension_props_rejected() {
        let p2 = qubit_proj([1.0, 0.0]);
        let p3 = Projector::new(CMatrix::from_real_diag(&[1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(
            HomogeneousHistory::new(support2(), vec![p2, p3]),
            Err(HistoryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn negation_examples() {
        let s = support2();
        let unit = HistoryProjector::unit(s.clone(), 2);
        assert_eq!(negation(&unit).kind(), HistoryKind::Null);

        let h = HomogeneousHistory::new(
            s,
            vec![qubit_proj([1.0, 0.0]), qubit_proj([0.0, 1.0])],
        )
        .unwrap();
        let hp = homogeneous_projector(&h);
        let neg = negation(&hp);
        assert_eq!(neg.matrix(), &CMatrix::from_real_diag(&[1.0, 0.0, 1.0, 1.0]));
        assert_eq!(neg.kind(), HistoryKind::Inhomogeneous);
        // ¬¬a = a exactly.
        assert_eq!(negation(&neg).matrix(), hp.matrix());
    }

    #[test]
    fn negation_expansion_of_two_time_products() {
        // ¬(P⊗Q) = ¬P⊗Q + P⊗¬Q + ¬P⊗¬Q, entrywise within 1e-12, on 50
        // random projector pairs of dims 2..4.
        let mut rng = rng_from_seed(5);
        for trial in 0..50 {
            let d = 2 + trial % 3;
            let p = random_projector_random_rank(d, &mut rng);
            let q = random_projector_random_rank(d, &mut rng);
            let np = p.complement();
            let nq = q.complement();
            let lhs = &CMatrix::identity(d * d) - &tensor(p.matrix(), q.matrix());
            let rhs = &(&tensor(np.matrix(), q.matrix()) + &tensor(p.matrix(), nq.matrix()))
                + &tensor(np.matrix(), nq.matrix());
            assert!(lhs.max_abs_diff(&rhs) <= 1e-12, "trial {trial}");
        }
    }

    #[test]
    fn disjointness_examples() {
        let s = support2();
        let h1 = homogeneous_projector(
            &HomogeneousHistory::new(
                s.clone(),
                vec![qubit_proj([1.0, 0.0]), qubit_proj([1.0, 0.0])],
            )
            .unwrap(),
        );
        let not_h1 = negation(&h1);
        assert!(disjoint(&h1, &not_h1, 1e-12).unwrap());
        assert!(disjoint(&not_h1, &h1, 1e-12).unwrap());
        assert!(!disjoint(&h1, &h1, 1e-12).unwrap());

        let e0 = HistoryProjector::new(
            s.clone(),
            2,
            Projector::new(CMatrix::from_real_diag(&[1.0, 0.0, 0.0, 0.0])).unwrap(),
            HistoryKind::Other,
        )
        .unwrap();
        let e1 = HistoryProjector::new(
            s,
            2,
            Projector::new(CMatrix::from_real_diag(&[0.0, 1.0, 0.0, 0.0])).unwrap(),
            HistoryKind::Other,
        )
        .unwrap();
        assert!(disjoint(&e0, &e1, 1e-12).unwrap());
    }

    #[test]
    fn osum_examples() {
        let s = support2();
        let h = homogeneous_projector(
            &HomogeneousHistory::new(
                s.clone(),
                vec![qubit_proj([1.0, 0.0]), qubit_proj([0.0, 1.0])],
            )
            .unwrap(),
        );
        let not_h = negation(&h);

        // a ⊕ ¬a = 1.
        let unit = osum(&h, &not_h).unwrap();
        assert_eq!(unit.kind(), HistoryKind::Unit);

        // null ⊕ a = a.
        let null = HistoryProjector::null(s.clone(), 2);
        let same = osum(&null, &h).unwrap();
        assert_eq!(same.matrix(), h.matrix());
        assert_eq!(same.kind(), HistoryKind::Homogeneous);

        // Disjoint rank-1 ⊗ rank-1 sums to a rank-2 inhomogeneous "or".
        let a = homogeneous_projector(
            &HomogeneousHistory::new(
                s.clone(),
                vec![qubit_proj([1.0, 0.0]), qubit_proj([1.0, 0.0])],
            )
            .unwrap(),
        );
        let b = homogeneous_projector(
            &HomogeneousHistory::new(
                s.clone(),
                vec![qubit_proj([0.0, 1.0]), qubit_proj([0.0, 1.0])],
            )
            .unwrap(),
        );
        let or = osum(&a, &b).unwrap();
        assert_eq!(or.kind(), HistoryKind::Inhomogeneous);
        assert!((or.matrix().trace() - Complex64::new(2.0, 0.0)).norm() <= 1e-12);

        // Non-disjoint pairs are rejected.
        assert!(matches!(
            osum(&h, &h),
            Err(HistoryError::NotDisjoint { .. })
        ));
    }

    #[test]
    fn leq_examples_and_witness() {
        let s = support2();
        let a = HistoryProjector::new(
            s.clone(),
            2,
            Projector::new(CMatrix::from_real_diag(&[1.0, 0.0, 0.0, 0.0])).unwrap(),
            HistoryKind::Other,
        )
        .unwrap();
        let b = HistoryProjector::new(
            s.clone(),
            2,
            Projector::new(CMatrix::from_real_diag(&[1.0, 1.0, 0.0, 0.0])).unwrap(),
            HistoryKind::Other,
        )
        .unwrap();
        assert!(leq(&a, &b, 1e-12).unwrap());
        assert!(!leq(&b, &a, 1e-12).unwrap());
        let w = coarse_graining_witness(&a, &b).unwrap();
        assert_eq!(w.matrix(), &CMatrix::from_real_diag(&[0.0, 1.0, 0.0, 0.0]));

        // 0 ≤ x ≤ 1 for every x.
        let null = HistoryProjector::null(s.clone(), 2);
        let unit = HistoryProjector::unit(s, 2);
        for x in [&a, &b, &null, &unit] {
            assert!(leq(&null, x, 1e-12).unwrap());
            assert!(leq(x, &unit, 1e-12).unwrap());
        }
        assert!(matches!(
            coarse_graining_witness(&b, &a),
            Err(HistoryError::NotCoarseGraining { .. })
        ));
    }

    #[test]
    fn leq_fails_both_ways_for_noncommuting_rank1() {
        // P = |0⟩⟨0|, Q = |+⟩⟨+| on a single-time qubit.
        let s = TemporalSupport::new(0.0, vec![1.0]).unwrap();
        let p = HistoryProjector::new(
            s.clone(),
            2,
            qubit_proj([1.0, 0.0]),
            HistoryKind::Homogeneous,
        )
        .unwrap();
        let half = Complex64::new(0.5, 0.0);
        let plus = CMatrix::new(2, 2, vec![half, half, half, half]).unwrap();
        let q = HistoryProjector::new(
            s,
            2,
            Projector::new(plus).unwrap(),
            HistoryKind::Homogeneous,
        )
        .unwrap();
        assert!(!leq(&p, &q, 1e-10).unwrap());
        assert!(!leq(&q, &p, 1e-10).unwrap());
    }

    #[test]
    fn partition_validation_examples() {
        let s = TemporalSupport::new(0.0, vec![1.0]).unwrap();
        let mk = |diag: [f64; 2]| {
            HistoryProjector::new(s.clone(), 2, qubit_proj(diag), HistoryKind::Homogeneous)
                .unwrap()
        };
        // {diag(1,0), diag(0,1)} is a partition.
        assert!(PartitionOfUnity::new(vec![mk([1.0, 0.0]), mk([0.0, 1.0])], 1e-10).is_ok());

        // {P, ¬P} is a partition for any projector P.
        let p = mk([1.0, 0.0]);
        let np = negation(&p);
        assert!(PartitionOfUnity::new(vec![p.clone(), np], 1e-10).is_ok());

        // {P, P} is neither exclusive nor exhaustive; exclusivity reported first.
        let err = validate_partition(&[p.clone(), p], 1e-10).unwrap_err();
        assert!(matches!(
            err,
            HistoryError::PartitionNotExclusive { i: 0, j: 1, .. }
        ));
    }

    #[test]
    fn orthoalgebra_four_element_sample_passes() {
        let s = support2();
        let a = homogeneous_projector(
            &HomogeneousHistory::new(
                s.clone(),
                vec![qubit_proj([1.0, 0.0]), qubit_proj([0.0, 1.0])],
            )
            .unwrap(),
        );
        let samples = vec![
            HistoryProjector::null(s.clone(), 2),
            a.clone(),
            negation(&a),
            HistoryProjector::unit(s, 2),
        ];
        let report = verify_orthoalgebra(&samples, 1e-10);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn orthoalgebra_partition_closure_passes() {
        // A rank-1 partition of the single-time space plus all its partial
        // sums generates a Boolean subalgebra; the axioms must hold on it.
        let mut rng = rng_from_seed(9);
        let s = TemporalSupport::new(0.0, vec![1.0]).unwrap();
        let parts = random_rank1_partition(4, &mut rng);
        let base: Vec<HistoryProjector> = parts
            .into_iter()
            .map(|p| HistoryProjector::new(s.clone(), 4, p, HistoryKind::Homogeneous).unwrap())
            .collect();
        let mut samples = vec![
            HistoryProjector::null(s.clone(), 4),
            HistoryProjector::unit(s.clone(), 4),
        ];
        // All 2^4 partial sums (null/unit included as empty/full sums).
        for mask in 1..15u32 {
            let chosen: Vec<&HistoryProjector> = base
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, p)| p)
                .collect();
            let mut acc = chosen[0].clone();
            for p in &chosen[1..] {
                acc = osum(&acc, p).unwrap();
            }
            samples.push(acc);
        }
        let report = verify_orthoalgebra(&samples, 1e-9);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn orthoalgebra_flags_invalid_member() {
        let s = TemporalSupport::new(0.0, vec![1.0]).unwrap();
        let bad = HistoryProjector::new(
            s.clone(),
            2,
            Projector::new_unchecked(CMatrix::from_real_diag(&[0.5, 0.5]), 1e-10),
            HistoryKind::Other,
        )
        .unwrap();
        let good = HistoryProjector::unit(s, 2);
        let report = verify_orthoalgebra(&[bad, good], 1e-10);
        assert!(!report.passed());
        assert!(report
            .violations
            .iter()
            .any(|v| v.rule == "projector-invariants" && v.items == vec![0]));
    }

    #[test]
    fn boolean_distributivity_on_partition_sums() {
        // For commuting (partition-generated) projectors the induced ∧ and ∨
        // distribute: a ∧ (b ∨ c) = (a∧b) ∨ (a∧c) with ∧ = product and
        // ∨ = disjoint sum on the generated Boolean algebra.
        let mut rng = rng_from_seed(13);
        let parts = random_rank1_partition(4, &mut rng);
        let p: Vec<&CMatrix> = parts.iter().map(|p| p.matrix()).collect();
        // a = P0+P1, b = P1+P2, c = P3
        let a = &(p[0] + p[1]);
        let b = &(p[1] + p[2]);
        let c = p[3];
        let meet = |x: &CMatrix, y: &CMatrix| x * y;
        let join = |x: &CMatrix, y: &CMatrix| &(x + y) - &(x * y);
        let lhs = meet(a, &join(b, c));
        let rhs = join(&meet(a, b), &meet(a, c));
        assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn extend_support_pads_with_identity() {
        let short = TemporalSupport::new(0.0, vec![2.0]).unwrap();
        let long = TemporalSupport::new(0.0, vec![1.0, 2.0]).unwrap();
        let h = HomogeneousHistory::new(short, vec![qubit_proj([1.0, 0.0])]).unwrap();
        let padded = h.extend_support(&long).unwrap();
        assert_eq!(padded.props().len(), 2);
        assert_eq!(padded.props()[0].matrix(), &CMatrix::identity(2));
        assert_eq!(padded.props()[1].matrix(), &CMatrix::from_real_diag(&[1.0, 0.0]));

        let alien = TemporalSupport::new(0.5, vec![1.0, 2.0]).unwrap();
        assert!(h.extend_support(&alien).is_err());
    }

    #[test]
    fn history_serde_round_trip() {
        let s = support2();
        let h = homogeneous_projector(
            &HomogeneousHistory::new(
                s,
                vec![qubit_proj([1.0, 0.0]), qubit_proj([0.0, 1.0])],
            )
            .unwrap(),
        );
        let json = serde_json::to_string(&SerializableHistoryProjector::from(&h)).unwrap();
        assert!(json.contains("\"kind\":\"homogeneous\""));
        let back: SerializableHistoryProjector = serde_json::from_str(&json).unwrap();
        let restored = back.into_history_projector().unwrap();
        assert_eq!(restored.matrix(), h.matrix());
        assert_eq!(restored.kind(), h.kind());
    }
}

/// Wire form of a general history projector:
/// `{"support": …, "proj": matrix, "kind": "..."}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SerializableHistoryProjector {
    pub support: TemporalSupport,
    pub proj: CMatrix,
    pub kind: HistoryKind,
}

impl SerializableHistoryProjector {
    pub fn into_history_projector(self) -> Result<HistoryProjector, HistoryError> {
        let n = self.support.len();
        let dim = self.proj.dim()?;
        // Recover the site dimension as the integer n-th root of dim.
        let site_dim = (1..=dim)
            .find(|d| d.pow(n as u32) == dim)
            .ok_or(HistoryError::DimensionMismatch {
                context: "tensor dimension must be a perfect n-th power",
                expected: n,
                found: dim,
            })?;
        let proj = Projector::new(self.proj)?;
        HistoryProjector::new(self.support, site_dim, proj, self.kind)
    }
}

impl From<&HistoryProjector> for SerializableHistoryProjector {
    fn from(h: &HistoryProjector) -> Self {
        Self {
            support: h.support.clone(),
            proj: h.matrix().clone(),
            kind: h.kind(),
        }
    }
}

/// Wire form of a homogeneous history:
/// `{"support": …, "props": [matrix, …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SerializableHomogeneousHistory {
    pub support: TemporalSupport,
    pub props: Vec<CMatrix>,
}

impl SerializableHomogeneousHistory {
    pub fn into_homogeneous_history(self) -> Result<HomogeneousHistory, HistoryError> {
        let props = self
            .props
            .into_iter()
            .map(Projector::new)
            .collect::<Result<Vec<_>, _>>()?;
        HomogeneousHistory::new(self.support, props)
    }
}

impl From<&HomogeneousHistory> for SerializableHomogeneousHistory {
    fn from(h: &HomogeneousHistory) -> Self {
        Self {
            support: h.support().clone(),
            props: h.props().iter().map(|p| p.matrix().clone()).collect(),
        }
    }
}
