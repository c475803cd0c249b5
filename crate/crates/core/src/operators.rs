//! Validated operator types and the structural operators of the workbench:
//! unitary time evolution from a Hamiltonian, and permutation operators on
//! tensor-product spaces (swap, cyclic shift, general slot rearrangement).

use crate::matrix::{CMatrix, Complex64, LinalgError, C_ONE, C_ZERO};
use nalgebra::{Complex, DMatrix};

/// Default validation tolerance for a matrix of side `dim`.
pub fn default_tol(dim: usize) -> f64 {
    1e-10 * dim as f64
}

fn to_na(m: &CMatrix) -> DMatrix<Complex<f64>> {
    let n = m.rows();
    DMatrix::from_fn(n, m.cols(), |i, j| m[(i, j)])
}

fn from_na(m: &DMatrix<Complex<f64>>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Real eigenvalues and a unitary eigenbasis of a hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    let dim = m.dim()?;
    let max_abs = m.max_abs();
    let eig = to_na(m)
        .try_symmetric_eigen(f64::EPSILON, 200 * dim.max(8))
        .ok_or(LinalgError::EigenFailure { dim, max_abs })?;
    let values = eig.eigenvalues.iter().copied().collect();
    Ok((values, from_na(&eig.eigenvectors)))
}

fn min_eigenvalue(m: &CMatrix) -> Result<f64, LinalgError> {
    let (values, _) = hermitian_eigen(m)?;
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

/// Check the projector invariants: hermitian and idempotent within `tol`.
pub fn check_projector(m: &CMatrix, tol: f64) -> Result<(), LinalgError> {
    let _ = m.dim()?;
    let herm = m.hermiticity_error();
    if herm > tol {
        return Err(LinalgError::NotHermitian { error: herm, tol });
    }
    let idem = m.idempotency_error();
    if idem > tol {
        return Err(LinalgError::NotIdempotent { error: idem, tol });
    }
    Ok(())
}

pub fn is_projector(m: &CMatrix, tol: f64) -> bool {
    check_projector(m, tol).is_ok()
}

/// Check the density-matrix invariants: hermitian, positive semidefinite
/// within `tol`, unit trace within `tol`.
pub fn check_density(m: &CMatrix, tol: f64) -> Result<(), LinalgError> {
    let _ = m.dim()?;
    let herm = m.hermiticity_error();
    if herm > tol {
        return Err(LinalgError::NotHermitian { error: herm, tol });
    }
    let tr = m.trace();
    if (tr - C_ONE).norm() > tol {
        return Err(LinalgError::TraceNotOne { trace: tr.re, tol });
    }
    let min_eig = min_eigenvalue(m)?;
    if min_eig < -tol {
        return Err(LinalgError::NotPositive {
            min_eigenvalue: min_eig,
            tol,
        });
    }
    Ok(())
}

pub fn is_density(m: &CMatrix, tol: f64) -> bool {
    check_density(m, tol).is_ok()
}

/// A hermitian idempotent with its validation tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: CMatrix,
    tol: f64,
}

impl Projector {
    pub fn new(matrix: CMatrix) -> Result<Self, LinalgError> {
        let tol = default_tol(matrix.rows());
        Self::with_tol(matrix, tol)
    }

    pub fn with_tol(matrix: CMatrix, tol: f64) -> Result<Self, LinalgError> {
        check_projector(&matrix, tol)?;
        Ok(Self { matrix, tol })
    }

    /// Wrap without validating. For matrices already known to be projectors
    /// (algebraic combinations of validated ones) and for building invalid
    /// inputs in tests.
    pub fn new_unchecked(matrix: CMatrix, tol: f64) -> Self {
        Self { matrix, tol }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// The orthocomplement 1 − P.
    pub fn complement(&self) -> Self {
        Self {
            matrix: &CMatrix::identity(self.dim()) - &self.matrix,
            tol: self.tol,
        }
    }

    /// Estimated rank: round(tr P).
    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round().max(0.0) as usize
    }
}

/// A hermitian, positive, trace-one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    tol: f64,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self, LinalgError> {
        let tol = default_tol(matrix.rows());
        Self::with_tol(matrix, tol)
    }

    pub fn with_tol(matrix: CMatrix, tol: f64) -> Result<Self, LinalgError> {
        check_density(&matrix, tol)?;
        Ok(Self { matrix, tol })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// A hermitian matrix (Hamiltonians, the hermitian parts of X operators).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    matrix: CMatrix,
    tol: f64,
}

impl HermitianMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self, LinalgError> {
        let tol = default_tol(matrix.rows());
        Self::with_tol(matrix, tol)
    }

    pub fn with_tol(matrix: CMatrix, tol: f64) -> Result<Self, LinalgError> {
        let _ = matrix.dim()?;
        let err = matrix.hermiticity_error();
        if err > tol {
            return Err(LinalgError::NotHermitian { error: err, tol });
        }
        Ok(Self { matrix, tol })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// The unitary exp(−i (t_to − t_from) H / ħ), computed by hermitian
/// eigendecomposition so that unitarity is exact up to roundoff.
pub fn evolution_operator(
    h: &HermitianMatrix,
    t_from: f64,
    t_to: f64,
    hbar: f64,
) -> Result<CMatrix, LinalgError> {
    let theta = (t_to - t_from) / hbar;
    let (values, vectors) = hermitian_eigen(h.matrix())?;
    let phases: Vec<Complex64> = values
        .iter()
        .map(|&lambda| Complex64::from_polar(1.0, -theta * lambda))
        .collect();
    // U = V diag(e^{-iθλ}) V†
    let d = CMatrix::from_diag(&phases);
    Ok(&(&vectors * &d) * &vectors.adjoint())
}

/// Permutation operator P on (ℂ^d)^{⊗n} with
/// P (A_1 ⊗ … ⊗ A_n) P† = A_{source[0]+1} ⊗ … ⊗ A_{source[n-1]+1},
/// i.e. output slot k holds the operator from input slot `source[k]`.
///
/// `source` must be a permutation of 0..n.
pub fn slot_rearrangement(source: &[usize], d: usize) -> CMatrix {
    let n = source.len();
    assert!(n >= 1, "slot_rearrangement needs at least one slot");
    {
        let mut seen = vec![false; n];
        for &s in source {
            assert!(s < n && !seen[s], "source must be a permutation of 0..n");
            seen[s] = true;
        }
    }
    let dim = d.pow(n as u32);
    let mut data = vec![C_ZERO; dim * dim];
    let mut digits = vec![0usize; n];
    for col in 0..dim {
        // Decode col as a big-endian base-d tuple.
        let mut rem = col;
        for k in (0..n).rev() {
            digits[k] = rem % d;
            rem /= d;
        }
        let mut row = 0usize;
        for k in 0..n {
            row = row * d + digits[source[k]];
        }
        data[row * dim + col] = C_ONE;
    }
    CMatrix::new(dim, dim, data).expect("permutation matrix construction")
}

/// The cyclic shift S on (ℂ^d)^{⊗n} satisfying
/// tr(A₁A₂…Aₙ) = tr((A₁⊗A₂⊗…⊗Aₙ) S) for all d×d matrices Aᵢ.
///
/// On basis labels S sends |j₁ j₂ … jₙ⟩ to |j₂ … jₙ j₁⟩; the orientation is
/// pinned by the n=2 swap identity tr(AB) = tr((A⊗B)S) and brute-forced at
/// n=3 in the tests.
pub fn cyclic_shift(n: usize, d: usize) -> CMatrix {
    assert!(n >= 2, "cyclic_shift needs n >= 2");
    let source: Vec<usize> = (0..n).map(|k| (k + 1) % n).collect();
    slot_rearrangement(&source, d)
}

/// The swap operator M on V⊗V, M(u⊗v) = v⊗u.
pub fn swap(d: usize) -> CMatrix {
    cyclic_shift(2, d)
}

pub use crate::matrix::tensor;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::tensor_all;
    use crate::sampling::{random_matrix, rng_from_seed};

    fn sigma_z() -> HermitianMatrix {
        HermitianMatrix::new(CMatrix::from_real_diag(&[1.0, -1.0])).unwrap()
    }

    fn sigma_x() -> HermitianMatrix {
        HermitianMatrix::new(
            CMatrix::new(
                2,
                2,
                vec![C_ZERO, C_ONE, C_ONE, C_ZERO],
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn projector_predicate_examples() {
        let tol = 1e-12;
        assert!(is_projector(&CMatrix::from_real_diag(&[1.0, 0.0]), tol));
        // Not idempotent:
        assert!(!is_projector(&CMatrix::from_real_diag(&[0.5, 0.5]), tol));
        assert!(matches!(
            check_projector(&CMatrix::from_real_diag(&[0.5, 0.5]), tol),
            Err(LinalgError::NotIdempotent { .. })
        ));
        // ... but a perfectly good maximally mixed qubit state:
        assert!(is_density(&CMatrix::from_real_diag(&[0.5, 0.5]), tol));
        assert!(!is_density(&CMatrix::from_real_diag(&[1.0, 0.5]), tol));
        assert!(!is_density(&CMatrix::from_real_diag(&[1.5, -0.5]), tol));
    }

    #[test]
    fn zero_hamiltonian_evolves_trivially() {
        let h = HermitianMatrix::new(CMatrix::zeros(3, 3)).unwrap();
        let u = evolution_operator(&h, 0.0, 2.75, 1.0).unwrap();
        assert!(u.max_abs_diff(&CMatrix::identity(3)) <= 1e-14);
    }

    #[test]
    fn sigma_z_evolution_closed_form() {
        // Δt = π, ħ = 1: U = diag(e^{-iπ}, e^{iπ}) = -I.
        let u = evolution_operator(&sigma_z(), 0.0, std::f64::consts::PI, 1.0).unwrap();
        let minus_i2 = CMatrix::identity(2).scale(Complex64::new(-1.0, 0.0));
        assert!(u.max_abs_diff(&minus_i2) <= 1e-12);
    }

    #[test]
    fn evolution_is_unitary_and_composes() {
        let mut rng = rng_from_seed(7);
        for dim in [2usize, 3, 4] {
            let g = random_matrix(dim, dim, &mut rng);
            let h = HermitianMatrix::new(&g + &g.adjoint()).unwrap();
            let u10 = evolution_operator(&h, 0.0, 0.7, 1.0).unwrap();
            assert!(u10.unitarity_error() <= 1e-12);
            let u21 = evolution_operator(&h, 0.7, 1.9, 1.0).unwrap();
            let u20 = evolution_operator(&h, 0.0, 1.9, 1.0).unwrap();
            assert!((&u21 * &u10).max_abs_diff(&u20) <= 1e-11);
            // U(t,t) = I
            let utt = evolution_operator(&h, 0.4, 0.4, 1.0).unwrap();
            assert!(utt.max_abs_diff(&CMatrix::identity(dim)) <= 1e-12);
        }
    }

    #[test]
    fn evolution_respects_hbar() {
        // Scaling ħ by 2 halves the phase angle.
        let u1 = evolution_operator(&sigma_x(), 0.0, 1.0, 2.0).unwrap();
        let u2 = evolution_operator(&sigma_x(), 0.0, 0.5, 1.0).unwrap();
        assert!(u1.max_abs_diff(&u2) <= 1e-13);
    }

    #[test]
    fn swap_matches_two_factor_trace() {
        let mut rng = rng_from_seed(11);
        let a = random_matrix(2, 2, &mut rng);
        let b = random_matrix(2, 2, &mut rng);
        let s = cyclic_shift(2, 2);
        let lhs = (&a * &b).trace();
        let rhs = (&tensor(&a, &b) * &s).trace();
        assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn cyclic_shift_identity_trace_counts_fixed_points() {
        // tr((I⊗I⊗I) S) = tr of the permutation = #{(j,j,j)} = d.
        let s = cyclic_shift(3, 2);
        assert!((s.trace() - Complex64::new(2.0, 0.0)).norm() <= 1e-14);
    }

    #[test]
    fn rank_one_projector_product_trace() {
        let p = CMatrix::from_real_diag(&[1.0, 0.0]);
        let s = cyclic_shift(2, 2);
        let val = (&tensor(&p, &p) * &s).trace();
        assert!((val - C_ONE).norm() <= 1e-14);
    }

    #[test]
    fn trace_identity_random_tuples() {
        // |tr(∏Aᵢ) − tr((⊗Aᵢ)S)| ≤ 1e−10 · ∏‖Aᵢ‖ over 100 random tuples.
        let mut rng = rng_from_seed(23);
        for trial in 0..100 {
            let n = 2 + trial % 3;
            let d = 2 + trial % 2;
            let mats: Vec<CMatrix> = (0..n).map(|_| random_matrix(d, d, &mut rng)).collect();
            let product = mats
                .iter()
                .skip(1)
                .fold(mats[0].clone(), |acc, m| &acc * m);
            let s = cyclic_shift(n, d);
            let direct = product.trace();
            let via_tensor = (&tensor_all(mats.iter()) * &s).trace();
            let bound: f64 = 1e-10 * mats.iter().map(|m| m.norm_fro()).product::<f64>();
            assert!(
                (direct - via_tensor).norm() <= bound,
                "n={n} d={d}: {direct} vs {via_tensor}"
            );
        }
    }

    #[test]
    fn slot_rearrangement_moves_factors() {
        let mut rng = rng_from_seed(31);
        let a = random_matrix(2, 2, &mut rng);
        let b = random_matrix(2, 2, &mut rng);
        let c = random_matrix(2, 2, &mut rng);
        // source = [2,0,1]: output slots hold (C, A, B).
        let p = slot_rearrangement(&[2, 0, 1], 2);
        let lhs = &(&p * &tensor_all([&a, &b, &c])) * &p.adjoint();
        let rhs = tensor_all([&c, &a, &b]);
        assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn projector_complement_and_rank() {
        let p = Projector::new(CMatrix::from_real_diag(&[1.0, 1.0, 0.0])).unwrap();
        assert_eq!(p.rank(), 2);
        let not_p = p.complement();
        assert_eq!(not_p.rank(), 1);
        assert!((not_p.matrix() + p.matrix()).max_abs_diff(&CMatrix::identity(3)) == 0.0);
    }

    #[test]
    fn hermitian_rejects_non_hermitian() {
        let m = CMatrix::new(
            2,
            2,
            vec![C_ONE, C_ONE, C_ZERO, C_ONE],
        )
        .unwrap();
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(LinalgError::NotHermitian { .. })
        ));
    }
}
