//! Decoherence functionals and consistency certification.
//!
//! Two representations are supported and cross-validated:
//!
//! - **Operator form** `d(α,β) = tr(C_α ρ C_β†)` where the class operator
//!   C_α alternates unitary evolution with the history's single-time
//!   projectors. Both the Schrödinger-picture product and the
//!   Heisenberg-picture product are provided; they agree identically because
//!   U(tᵢ,t₀)U(t₀,tᵢ₋₁) telescopes to U(tᵢ,tᵢ₋₁).
//! - **X-operator form** `d_X(α,β) = tr((α ⊗ β) X)` for an operator X on
//!   V⊗V. Any operator-form functional on fixed supports can be converted to
//!   this form; [`build_x_from_operator_form`] does it analytically via the
//!   cyclic-shift trace identity, and [`build_x_from_operator_form_probed`]
//!   independently via matrix-unit probing of the bilinear extension.
//!
//! A decoherence functional on the projectors of V is classified by three
//! conditions on X (hermiticity under the slot swap, positivity of the
//! hermitian part on α⊗α, unit trace of the hermitian part); `validate_x`
//! checks the first and third exactly and the second by Monte Carlo over
//! Haar-random projectors.

use crate::histories::{
    homogeneous_projector, osum, HistoryError, HistoryProjector, HomogeneousHistory,
    PartitionOfUnity, TemporalSupport,
};
use crate::matrix::{CMatrix, Complex64, LinalgError};
use crate::operators::{
    cyclic_shift, evolution_operator, slot_rearrangement, swap, DensityMatrix, HermitianMatrix,
    Projector,
};
use crate::sampling::{random_matrix, random_projector_random_rank, rng_from_seed};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Tolerance for the imaginary residue of quantities that must be real.
pub const DEFAULT_INTEGRITY_TOL: f64 = 1e-8;
/// Tolerance for weight sums and partition validation.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Default consistency tolerance on |d(αⁱ,αʲ)| with d(1,1) normalized to 1.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("fiducial time mismatch: support has t0 = {support_t0}, functional has t0 = {functional_t0}")]
    FiducialMismatch { support_t0: f64, functional_t0: f64 },
    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(f64),
    #[error("imaginary residue {value:.3e} exceeds tol {tol:.3e} on a real quantity")]
    ImaginaryResidual { value: f64, tol: f64 },
    #[error("probability {value} outside [-tol, 1+tol] with tol {tol:.3e}")]
    ProbabilityRange { value: f64, tol: f64 },
    #[error("weights must sum to 1: got {sum} (tol {tol:.3e})")]
    WeightSum { sum: f64, tol: f64 },
    #[error("weight {index} is not positive: {value}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("expected {expected} weights, got {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("functional is not bilinear: probe residual {residual:.3e} exceeds {tol:.3e}")]
    NotBilinear { residual: f64, tol: f64 },
    #[error("X operator must act on V⊗V with equal slot dimensions, got {dim_left}x{dim_right}")]
    NotSquareSlots { dim_left: usize, dim_right: usize },
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Operator-form decoherence functional: Hamiltonian dynamics plus an
/// initial state at the fiducial time.
#[derive(Debug, Clone)]
pub struct OperatorFormFunctional {
    h: HermitianMatrix,
    rho0: DensityMatrix,
    t0: f64,
    hbar: f64,
}

impl OperatorFormFunctional {
    pub fn new(
        h: HermitianMatrix,
        rho0: DensityMatrix,
        t0: f64,
        hbar: f64,
    ) -> Result<Self, EngineError> {
        if rho0.dim() != h.dim() {
            return Err(EngineError::DimensionMismatch {
                context: "Hamiltonian vs initial state",
                expected: h.dim(),
                found: rho0.dim(),
            });
        }
        if !(hbar > 0.0) {
            return Err(EngineError::NonPositiveHbar(hbar));
        }
        Ok(Self { h, rho0, t0, hbar })
    }

    pub fn hamiltonian(&self) -> &HermitianMatrix {
        &self.h
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.rho0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// U(t_to, t_from) in the two-argument convention used throughout:
    /// evolution *from* the first argument *to* the second.
    fn u(&self, t_from: f64, t_to: f64) -> Result<CMatrix, EngineError> {
        Ok(evolution_operator(&self.h, t_from, t_to, self.hbar)?)
    }

    fn check_support(&self, s: &TemporalSupport) -> Result<(), EngineError> {
        if s.t0() != self.t0 {
            return Err(EngineError::FiducialMismatch {
                support_t0: s.t0(),
                functional_t0: self.t0,
            });
        }
        Ok(())
    }

    fn check_history(&self, h: &HomogeneousHistory) -> Result<(), EngineError> {
        self.check_support(h.support())?;
        if h.site_dim() != self.dim() {
            return Err(EngineError::DimensionMismatch {
                context: "history vs functional dimension",
                expected: self.dim(),
                found: h.site_dim(),
            });
        }
        Ok(())
    }
}

/// X-operator form: d(a,b) = tr((P_a ⊗ P_b) X). The left and right slots may
/// have different dimensions when the two temporal supports differ; the
/// classification conditions only apply to the square V⊗V case.
#[derive(Debug, Clone, PartialEq)]
pub struct XOperatorFunctional {
    dim_left: usize,
    dim_right: usize,
    x: CMatrix,
}

impl XOperatorFunctional {
    pub fn new(dim_left: usize, dim_right: usize, x: CMatrix) -> Result<Self, EngineError> {
        let dim = x.dim()?;
        if dim != dim_left * dim_right {
            return Err(EngineError::DimensionMismatch {
                context: "X operator on the doubled space",
                expected: dim_left * dim_right,
                found: dim,
            });
        }
        Ok(Self {
            dim_left,
            dim_right,
            x,
        })
    }

    pub fn square(dim_v: usize, x: CMatrix) -> Result<Self, EngineError> {
        Self::new(dim_v, dim_v, x)
    }

    pub fn dim_left(&self) -> usize {
        self.dim_left
    }

    pub fn dim_right(&self) -> usize {
        self.dim_right
    }

    /// The history-space dimension D when both slots agree.
    pub fn dim_v(&self) -> Option<usize> {
        (self.dim_left == self.dim_right).then_some(self.dim_left)
    }

    pub fn x(&self) -> &CMatrix {
        &self.x
    }

    /// Hermitian part X₁ of X = X₁ + iX₂.
    pub fn hermitian_part(&self) -> CMatrix {
        (&self.x + &self.x.adjoint()).scale(Complex64::new(0.5, 0.0))
    }

    /// Antihermitian part X₂ of X = X₁ + iX₂.
    pub fn antihermitian_part(&self) -> CMatrix {
        (&self.x - &self.x.adjoint()).scale(Complex64::new(0.0, -0.5))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum XRepr {
    Square {
        #[serde(rename = "dimV")]
        dim_v: usize,
        x: CMatrix,
    },
    Rect {
        dim_left: usize,
        dim_right: usize,
        x: CMatrix,
    },
}

impl Serialize for XOperatorFunctional {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = if self.dim_left == self.dim_right {
            XRepr::Square {
                dim_v: self.dim_left,
                x: self.x.clone(),
            }
        } else {
            XRepr::Rect {
                dim_left: self.dim_left,
                dim_right: self.dim_right,
                x: self.x.clone(),
            }
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for XOperatorFunctional {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = XRepr::deserialize(deserializer)?;
        let (l, r, x) = match repr {
            XRepr::Square { dim_v, x } => (dim_v, dim_v, x),
            XRepr::Rect {
                dim_left,
                dim_right,
                x,
            } => (dim_left, dim_right, x),
        };
        Self::new(l, r, x).map_err(serde::de::Error::custom)
    }
}

/// Either representation of a decoherence functional.
#[derive(Debug, Clone)]
pub enum FunctionalForm {
    Operator(OperatorFormFunctional),
    X(XOperatorFunctional),
}

/// A state in the sense of the single-time classification: σ(P) = tr(Pρ).
#[derive(Debug, Clone)]
pub struct GleasonState {
    rho: DensityMatrix,
}

impl GleasonState {
    pub fn new(rho: DensityMatrix) -> Self {
        Self { rho }
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }
}

/// σ(P) = tr(Pρ); real for hermitian inputs, positive, additive on disjoint
/// projectors, and normalized to σ(1) = 1.
pub fn gleason_state_eval(s: &GleasonState, p: &Projector) -> Result<f64, EngineError> {
    if p.dim() != s.rho.dim() {
        return Err(EngineError::DimensionMismatch {
            context: "projector vs state",
            expected: s.rho.dim(),
            found: p.dim(),
        });
    }
    Ok((p.matrix() * s.rho.matrix()).trace().re)
}

/// Pre-computed evolution operators over one temporal support.
struct Propagators {
    /// U(t₁, t₀)
    first: CMatrix,
    /// steps[k] = U(t_{k+1}, t_k)
    steps: Vec<CMatrix>,
    /// U(t₀, tₙ)
    back: CMatrix,
}

impl Propagators {
    fn new(f: &OperatorFormFunctional, s: &TemporalSupport) -> Result<Self, EngineError> {
        let times = s.times();
        let first = f.u(s.t0(), times[0])?;
        let steps = times
            .windows(2)
            .map(|w| f.u(w[0], w[1]))
            .collect::<Result<Vec<_>, _>>()?;
        let back = f.u(times[times.len() - 1], s.t0())?;
        Ok(Self { first, steps, back })
    }

    /// C(A₁,…,Aₙ) = U(t₀,tₙ) Aₙ U(tₙ,tₙ₋₁) … A₁ U(t₁,t₀), linear in every
    /// slot; on projector tuples this is the class operator.
    fn class_product(&self, factors: &[&CMatrix]) -> CMatrix {
        let mut m = factors[0] * &self.first;
        for (k, a) in factors.iter().enumerate().skip(1) {
            m = &(*a * &self.steps[k - 1]) * &m;
        }
        &self.back * &m
    }

    /// G(B₁,…,Bₘ) = U(t₀,t₁) B₁ U(t₁,t₂) B₂ … Bₘ U(tₘ,t₀), linear in every
    /// slot; on projector tuples G(β) = C_β†.
    fn conjugate_product(&self, factors: &[&CMatrix]) -> CMatrix {
        let mut m = &self.first.adjoint() * factors[0];
        for (k, b) in factors.iter().enumerate().skip(1) {
            m = &(&m * &self.steps[k - 1].adjoint()) * *b;
        }
        &m * &self.back.adjoint()
    }
}

/// The Schrödinger-picture class operator
/// C_α = U(t₀,tₙ) α_{tₙ} U(tₙ,tₙ₋₁) … α_{t₁} U(t₁,t₀).
pub fn class_operator(
    h: &HomogeneousHistory,
    f: &OperatorFormFunctional,
) -> Result<CMatrix, EngineError> {
    f.check_history(h)?;
    let props = Propagators::new(f, h.support())?;
    let factors: Vec<&CMatrix> = h.props().iter().map(|p| p.matrix()).collect();
    Ok(props.class_product(&factors))
}

/// The Heisenberg-picture class operator
/// C_α = α_{tₙ}(tₙ) … α_{t₁}(t₁) with α(t) = U(t,t₀)† α U(t,t₀).
pub fn class_operator_heisenberg(
    h: &HomogeneousHistory,
    f: &OperatorFormFunctional,
) -> Result<CMatrix, EngineError> {
    f.check_history(h)?;
    let s = h.support();
    let mut c = CMatrix::identity(f.dim());
    for (k, p) in h.props().iter().enumerate() {
        let u = f.u(s.t0(), s.times()[k])?; // U(t_k, t_0)
        let heis = &(&u.adjoint() * p.matrix()) * &u;
        c = &heis * &c;
    }
    Ok(c)
}

/// d(a, b) = tr(C_a ρ C_b†). The temporal supports of `a` and `b` may
/// differ; both must share the functional's fiducial time and dimension.
pub fn d_operator_form(
    a: &HomogeneousHistory,
    b: &HomogeneousHistory,
    f: &OperatorFormFunctional,
) -> Result<Complex64, EngineError> {
    let ca = class_operator(a, f)?;
    let cb = class_operator(b, f)?;
    Ok((&(&ca * f.rho0.matrix()) * &cb.adjoint()).trace())
}

/// Bilinear extension of the operator form to inhomogeneous histories given
/// as lists of pairwise-disjoint homogeneous components: d(Σaᵢ, Σbⱼ) =
/// ΣᵢΣⱼ d(aᵢ, bⱼ). Disjointness of the components is the caller's contract.
pub fn d_operator_form_components(
    a_components: &[HomogeneousHistory],
    b_components: &[HomogeneousHistory],
    f: &OperatorFormFunctional,
) -> Result<Complex64, EngineError> {
    let mut total = Complex64::new(0.0, 0.0);
    for a in a_components {
        for b in b_components {
            total += d_operator_form(a, b, f)?;
        }
    }
    Ok(total)
}

/// Probability of a homogeneous history: the diagonal value d(a,a), checked
/// real within `DEFAULT_INTEGRITY_TOL` and inside [-tol, 1+tol].
pub fn probability(a: &HomogeneousHistory, f: &OperatorFormFunctional) -> Result<f64, EngineError> {
    probability_with_tol(a, f, DEFAULT_INTEGRITY_TOL)
}

pub fn probability_with_tol(
    a: &HomogeneousHistory,
    f: &OperatorFormFunctional,
    tol: f64,
) -> Result<f64, EngineError> {
    let d = d_operator_form(a, a, f)?;
    if d.im.abs() > tol {
        return Err(EngineError::ImaginaryResidual {
            value: d.im.abs(),
            tol,
        });
    }
    if d.re < -tol || d.re > 1.0 + tol {
        return Err(EngineError::ProbabilityRange { value: d.re, tol });
    }
    Ok(d.re)
}

/// tr(A ⊗ B · X) without materializing the Kronecker product.
fn trace_pair_against(a: &CMatrix, b: &CMatrix, x: &CMatrix) -> Complex64 {
    let (dl, dr) = (a.rows(), b.rows());
    let mut total = Complex64::new(0.0, 0.0);
    for i1 in 0..dl {
        for j1 in 0..dl {
            let av = a[(i1, j1)];
            if av.re == 0.0 && av.im == 0.0 {
                continue;
            }
            for i2 in 0..dr {
                for j2 in 0..dr {
                    let bv = b[(i2, j2)];
                    if bv.re == 0.0 && bv.im == 0.0 {
                        continue;
                    }
                    total += av * bv * x[(j1 * dr + j2, i1 * dr + i2)];
                }
            }
        }
    }
    total
}

/// d_X(a, b) = tr((P_a ⊗ P_b) X).
pub fn d_x_form(
    a: &HistoryProjector,
    b: &HistoryProjector,
    f: &XOperatorFunctional,
) -> Result<Complex64, EngineError> {
    if a.dim() != f.dim_left {
        return Err(EngineError::DimensionMismatch {
            context: "left history slot vs X",
            expected: f.dim_left,
            found: a.dim(),
        });
    }
    if b.dim() != f.dim_right {
        return Err(EngineError::DimensionMismatch {
            context: "right history slot vs X",
            expected: f.dim_right,
            found: b.dim(),
        });
    }
    Ok(trace_pair_against(a.matrix(), b.matrix(), &f.x))
}

fn check_support_pair(
    f: &OperatorFormFunctional,
    support_a: &TemporalSupport,
    support_b: &TemporalSupport,
) -> Result<(), EngineError> {
    f.check_support(support_a)?;
    f.check_support(support_b)
}

/// Build the X operator reproducing the operator-form functional on a fixed
/// support pair, analytically: the pair value tr(C_α ρ C_β†) is one cyclic
/// operator product, so the cyclic-shift trace identity turns it into
/// tr((β₁⊗…⊗βₘ⊗αₙ⊗…⊗α₁) · (M₁⊗…⊗M_N) S), and a slot permutation brings the
/// factors into the (α₁…αₙ β₁…βₘ) order of the X form.
pub fn build_x_from_operator_form(
    f: &OperatorFormFunctional,
    support_a: &TemporalSupport,
    support_b: &TemporalSupport,
) -> Result<XOperatorFunctional, EngineError> {
    check_support_pair(f, support_a, support_b)?;
    let d = f.dim();
    let n = support_a.len();
    let m = support_b.len();
    let total_slots = n + m;
    let ta = support_a.times();
    let tb = support_b.times();

    // Inter-factor operators in the cyclic order (β₁,…,βₘ,αₙ,…,α₁).
    let mut between: Vec<CMatrix> = Vec::with_capacity(total_slots);
    for k in 0..m - 1 {
        between.push(f.u(tb[k + 1], tb[k])?); // U(t'_k, t'_{k+1})
    }
    between.push(f.u(ta[n - 1], tb[m - 1])?); // bridge U(t'_m, t_n)
    for j in 0..n - 1 {
        // U(t_{n-j}, t_{n-j-1})
        between.push(f.u(ta[n - 2 - j], ta[n - 1 - j])?);
    }
    // Closing factor U(t₁,t₀) ρ U(t₀,t'₁).
    let closing = &(&f.u(f.t0, ta[0])? * f.rho0.matrix()) * &f.u(tb[0], f.t0)?;
    between.push(closing);

    let kron_between = between
        .iter()
        .skip(1)
        .fold(between[0].clone(), |acc, mtx| acc.kron(mtx));
    let y = &kron_between * &cyclic_shift(total_slots, d);

    // Slot k of the cyclic order holds target slot source[k]:
    // (β₁,…,βₘ) are targets n..n+m-1, (αₙ,…,α₁) are targets n-1..0.
    let mut source: Vec<usize> = (n..n + m).collect();
    source.extend((0..n).rev());
    let v = slot_rearrangement(&source, d);
    let x = &(&v.adjoint() * &y) * &v;

    XOperatorFunctional::new(d.pow(n as u32), d.pow(m as u32), x)
}

/// Independent construction of the same X by probing the bilinear extension
/// of the operator form on matrix units: X[J,I] is the functional evaluated
/// with the unit E_{i_k j_k} in every slot.
pub fn build_x_from_operator_form_probed(
    f: &OperatorFormFunctional,
    support_a: &TemporalSupport,
    support_b: &TemporalSupport,
) -> Result<XOperatorFunctional, EngineError> {
    check_support_pair(f, support_a, support_b)?;
    let d = f.dim();
    let n = support_a.len();
    let m = support_b.len();
    let prop_a = Propagators::new(f, support_a)?;
    let prop_b = Propagators::new(f, support_b)?;

    let units: Vec<Vec<CMatrix>> = (0..d)
        .map(|i| (0..d).map(|j| CMatrix::unit(d, i, j)).collect())
        .collect();

    let dim_left = d.pow(n as u32);
    let dim_right = d.pow(m as u32);
    let total = dim_left * dim_right;
    let slots = n + m;

    let digits = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0usize; slots];
        for k in (0..slots).rev() {
            out[k] = idx % d;
            idx /= d;
        }
        out
    };

    let mut x = vec![Complex64::new(0.0, 0.0); total * total];
    for i_flat in 0..total {
        let di = digits(i_flat);
        for j_flat in 0..total {
            let dj = digits(j_flat);
            let a_factors: Vec<&CMatrix> = (0..n).map(|k| &units[di[k]][dj[k]]).collect();
            let b_factors: Vec<&CMatrix> =
                (0..m).map(|k| &units[di[n + k]][dj[n + k]]).collect();
            let c = prop_a.class_product(&a_factors);
            let g = prop_b.conjugate_product(&b_factors);
            let val = (&(&c * f.rho0.matrix()) * &g).trace();
            x[j_flat * total + i_flat] = val;
        }
    }
    XOperatorFunctional::new(dim_left, dim_right, CMatrix::new(total, total, x)?)
}

/// Recover the unique X with tr((A⊗B)X) = d_eval(A,B) by probing matrix
/// units, then verify bilinearity of `d_eval` on random linear combinations.
pub fn build_x_from_bilinear(
    d_eval: impl Fn(&CMatrix, &CMatrix) -> Complex64,
    dim_v: usize,
) -> Result<XOperatorFunctional, EngineError> {
    let total = dim_v * dim_v;
    let mut x = vec![Complex64::new(0.0, 0.0); total * total];
    for a in 0..dim_v {
        for b in 0..dim_v {
            let e_ab = CMatrix::unit(dim_v, a, b);
            for c in 0..dim_v {
                for e in 0..dim_v {
                    let e_ce = CMatrix::unit(dim_v, c, e);
                    let val = d_eval(&e_ab, &e_ce);
                    x[(b * dim_v + e) * total + (a * dim_v + c)] = val;
                }
            }
        }
    }
    let xf = XOperatorFunctional::square(dim_v, CMatrix::new(total, total, x)?)?;

    // Residual check: on random full matrices the probe reconstruction must
    // reproduce d_eval, otherwise the input was not bilinear.
    let mut rng = rng_from_seed(0);
    for _ in 0..4 {
        let a = random_matrix(dim_v, dim_v, &mut rng);
        let b = random_matrix(dim_v, dim_v, &mut rng);
        let expected = trace_pair_against(&a, &b, &xf.x);
        let got = d_eval(&a, &b);
        let scale = 1.0 + expected.norm().max(got.norm());
        let residual = (expected - got).norm();
        if residual > 1e-6 * scale {
            return Err(EngineError::NotBilinear {
                residual,
                tol: 1e-6 * scale,
            });
        }
    }
    Ok(xf)
}

/// Schreckenberg construction: X = Σᵢ wᵢ Pᵢ⊗Pᵢ over a partition of unity
/// with positive weights summing to one. The partition is then consistent
/// with respect to d_X with probabilities wᵢ·tr(Pᵢ)².
///
/// For partitions with members of rank > 1 the construction yields
/// tr(X₁) = Σwᵢ(tr Pᵢ)² ≠ 1; this is reported by `validate_x`, never
/// silently renormalized.
pub fn schreckenberg_x(
    p: &PartitionOfUnity,
    weights: &[f64],
) -> Result<XOperatorFunctional, EngineError> {
    if weights.len() != p.len() {
        return Err(EngineError::WeightCount {
            expected: p.len(),
            found: weights.len(),
        });
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(w > 0.0) {
            return Err(EngineError::NonPositiveWeight { index: i, value: w });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > STRUCTURE_TOL {
        return Err(EngineError::WeightSum {
            sum,
            tol: STRUCTURE_TOL,
        });
    }
    let dim_v = p.dim();
    let mut x = CMatrix::zeros(dim_v * dim_v, dim_v * dim_v);
    for (member, &w) in p.members().iter().zip(weights) {
        let mm = member.matrix();
        x = &x + &mm.kron(mm).scale(Complex64::new(w, 0.0));
    }
    XOperatorFunctional::square(dim_v, x)
}

/// Result of checking the three classification conditions on an X operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XValidationReport {
    /// Condition 1 margin: ‖X† − M X M‖_max with M the slot swap.
    pub swap_error: f64,
    pub cond1_ok: bool,
    /// Condition 2 margin: min over sampled projectors of tr((α⊗α)X₁).
    pub positivity_min: f64,
    pub cond2_ok: bool,
    /// Condition 3: tr(X₁) and its distance from 1.
    pub trace_x1: f64,
    pub trace_error: f64,
    pub cond3_ok: bool,
    pub samples: usize,
    pub tol: f64,
    pub ok: bool,
}

impl fmt::Display for XValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "condition 1 (X† = MXM):        error {:.3e}  [{}]",
            self.swap_error,
            if self.cond1_ok { "ok" } else { "FAIL" }
        )?;
        writeln!(
            f,
            "condition 2 (tr((α⊗α)X₁) ≥ 0): min {:.3e} over {} samples  [{}]",
            self.positivity_min,
            self.samples,
            if self.cond2_ok { "ok" } else { "FAIL" }
        )?;
        write!(
            f,
            "condition 3 (tr X₁ = 1):       tr X₁ = {:.12}  [{}]",
            self.trace_x1,
            if self.cond3_ok { "ok" } else { "FAIL" }
        )
    }
}

/// Check the decoherence-functional classification conditions on X:
/// (1) X† = MXM exactly within tol, (2) tr((α⊗α)X₁) ≥ −tol on `n_samples`
/// Haar-random projectors of uniformly random rank, (3) |tr X₁ − 1| ≤ tol.
pub fn validate_x(
    f: &XOperatorFunctional,
    n_samples: usize,
    tol: f64,
    rng: &mut impl Rng,
) -> Result<XValidationReport, EngineError> {
    let dim_v = f.dim_v().ok_or(EngineError::NotSquareSlots {
        dim_left: f.dim_left,
        dim_right: f.dim_right,
    })?;
    let m = swap(dim_v);
    let swap_error = f.x.adjoint().max_abs_diff(&(&(&m * &f.x) * &m));
    let x1 = f.hermitian_part();

    let mut positivity_min = f64::INFINITY;
    for _ in 0..n_samples {
        let alpha = random_projector_random_rank(dim_v, rng);
        let val = trace_pair_against(alpha.matrix(), alpha.matrix(), &x1).re;
        positivity_min = positivity_min.min(val);
    }

    let trace_x1 = x1.trace().re;
    let trace_error = (trace_x1 - 1.0).abs();

    let cond1_ok = swap_error <= tol;
    let cond2_ok = positivity_min >= -tol;
    let cond3_ok = trace_error <= tol;
    Ok(XValidationReport {
        swap_error,
        cond1_ok,
        positivity_min,
        cond2_ok,
        trace_x1,
        trace_error,
        cond3_ok,
        samples: n_samples,
        tol,
        ok: cond1_ok && cond2_ok && cond3_ok,
    })
}

/// Verdict on a complete set of histories: the full pair matrix of d values,
/// the consistency verdict at the given tolerance, and the extracted
/// probabilities with their Kolmogorov checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// d(αⁱ, αʲ) as an N×N complex matrix.
    pub pair_values: CMatrix,
    pub max_offdiag: f64,
    pub consistent: bool,
    /// Re d(αⁱ, αⁱ) per member.
    pub probabilities: Vec<f64>,
    pub prob_sum: f64,
    pub kolmogorov_ok: bool,
    pub tol: f64,
    /// Which functional representation produced the values.
    pub functional_form: String,
}

fn assemble_report(
    n: usize,
    tol: f64,
    functional_form: &str,
    pair: CMatrix,
    d_unit: Complex64,
    additivity_residual: f64,
) -> ConsistencyReport {
    let mut max_offdiag: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_offdiag = max_offdiag.max(pair[(i, j)].norm());
            }
        }
    }
    let probabilities: Vec<f64> = (0..n).map(|i| pair[(i, i)].re).collect();
    let prob_sum: f64 = probabilities.iter().sum();
    let kol_tol = (n * n) as f64 * tol;
    let range_ok = probabilities.iter().all(|&p| p >= -tol && p <= 1.0 + tol);
    let sum_ok = (prob_sum - d_unit.re).abs() <= kol_tol;
    let additivity_ok = additivity_residual <= kol_tol;
    ConsistencyReport {
        pair_values: pair,
        max_offdiag,
        consistent: max_offdiag <= tol,
        probabilities,
        prob_sum,
        kolmogorov_ok: range_ok && sum_ok && additivity_ok,
        tol,
        functional_form: functional_form.to_string(),
    }
}

/// Certify a partition of unity against a decoherence functional.
///
/// For the X form each pair value is tr((Pᵢ⊗Pⱼ)X) directly; for the operator
/// form the X operator is first built on the partition's support pair, which
/// also covers inhomogeneous members (the engine never decomposes an
/// arbitrary projector into homogeneous pieces).
pub fn consistency_check(
    p: &PartitionOfUnity,
    form: &FunctionalForm,
    tol: f64,
) -> Result<ConsistencyReport, EngineError> {
    let (xf, provenance) = match form {
        FunctionalForm::X(xf) => {
            if xf.dim_left != p.dim() || xf.dim_right != p.dim() {
                return Err(EngineError::DimensionMismatch {
                    context: "partition members vs X slots",
                    expected: p.dim(),
                    found: xf.dim_left.max(xf.dim_right),
                });
            }
            (xf.clone(), "x")
        }
        FunctionalForm::Operator(f) => {
            if f.dim() != p.site_dim() {
                return Err(EngineError::DimensionMismatch {
                    context: "partition site dimension vs functional",
                    expected: f.dim(),
                    found: p.site_dim(),
                });
            }
            (
                build_x_from_operator_form(f, p.support(), p.support())?,
                "operator-via-x",
            )
        }
    };

    let n = p.len();
    let members = p.members();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = d_x_form(&members[i], &members[j], &xf)?;
        }
    }
    let pair = CMatrix::new(n, n, entries)?;

    let identity = CMatrix::identity(p.dim());
    let d_unit = trace_pair_against(&identity, &identity, &xf.x);

    // Additivity under ⊕ on all disjoint pairs, evaluated independently.
    let mut additivity_residual: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let joined = osum(&members[i], &members[j])?;
            let p_joined = d_x_form(&joined, &joined, &xf)?.re;
            additivity_residual = additivity_residual
                .max((p_joined - pair[(i, i)].re - pair[(j, j)].re).abs());
        }
    }

    Ok(assemble_report(
        n,
        tol,
        provenance,
        pair,
        d_unit,
        additivity_residual,
    ))
}

/// Certify a set of homogeneous histories directly through class operators,
/// without the X detour. The members must share one support and form a
/// partition of unity on its tensor space.
pub fn consistency_check_homogeneous(
    members: &[HomogeneousHistory],
    f: &OperatorFormFunctional,
    tol: f64,
) -> Result<ConsistencyReport, EngineError> {
    let tensor_members: Vec<HistoryProjector> =
        members.iter().map(homogeneous_projector).collect();
    crate::histories::validate_partition(&tensor_members, STRUCTURE_TOL)?;

    let n = members.len();
    let class_ops = members
        .iter()
        .map(|h| class_operator(h, f))
        .collect::<Result<Vec<_>, _>>()?;
    let rho = f.rho0.matrix();

    let d_pair = |ca: &CMatrix, cb: &CMatrix| (&(ca * rho) * &cb.adjoint()).trace();

    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = d_pair(&class_ops[i], &class_ops[j]);
        }
    }
    let pair = CMatrix::new(n, n, entries)?;

    // d(1,1) through the unit history on the same support (telescopes to I).
    let identity = Projector::new(CMatrix::identity(f.dim()))?;
    let unit_history = HomogeneousHistory::new(
        members[0].support().clone(),
        vec![identity; members[0].support().len()],
    )?;
    let c_unit = class_operator(&unit_history, f)?;
    let d_unit = d_pair(&c_unit, &c_unit);

    // Additivity: class operators add under the disjoint "or", so
    // p(αⁱ⊕αʲ) = tr((Cᵢ+Cⱼ)ρ(Cᵢ+Cⱼ)†), evaluated directly.
    let mut additivity_residual: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let c_sum = &class_ops[i] + &class_ops[j];
            let p_joined = d_pair(&c_sum, &c_sum).re;
            additivity_residual = additivity_residual
                .max((p_joined - pair[(i, i)].re - pair[(j, j)].re).abs());
        }
    }

    Ok(assemble_report(
        n,
        tol,
        "operator",
        pair,
        d_unit,
        additivity_residual,
    ))
}
