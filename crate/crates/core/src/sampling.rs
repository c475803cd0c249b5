//! Seeded random generation of matrices, unitaries, projectors, and states.
//!
//! Used both by tests and by the Monte Carlo positivity check of
//! [`crate::decoherence::validate_x`]; everything is deterministic given the
//! seed so reports are reproducible.

use crate::matrix::{CMatrix, Complex64};
use crate::operators::{DensityMatrix, HermitianMatrix, Projector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Orthonormalize `count` Gaussian vectors of length `dim` by modified
/// Gram-Schmidt; returns a dim×count matrix with orthonormal columns.
fn random_isometry(dim: usize, count: usize, rng: &mut impl Rng) -> CMatrix {
    assert!(count <= dim);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(count);
    while cols.len() < count {
        let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        for u in &cols {
            let overlap: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= overlap * ui;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // numerically degenerate draw; resample
        }
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    CMatrix::from_fn(dim, count, |i, j| cols[j][i])
}

/// Haar-distributed random unitary.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    random_isometry(dim, dim, rng)
}

/// Haar-random projector of the given rank (columns of a random isometry).
pub fn random_projector(dim: usize, rank: usize, rng: &mut impl Rng) -> Projector {
    assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
    let v = random_isometry(dim, rank, rng);
    Projector::new(&v * &v.adjoint()).expect("isometry columns give a projector")
}

/// Haar-random projector with rank drawn uniformly from 1..=dim−1
/// (1 when dim == 1).
pub fn random_projector_random_rank(dim: usize, rng: &mut impl Rng) -> Projector {
    let rank = if dim <= 2 {
        1
    } else {
        rng.random_range(1..dim)
    };
    random_projector(dim, rank, rng)
}

/// Random Hamiltonian: hermitian part of a Gaussian matrix.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianMatrix {
    let g = random_matrix(dim, dim, rng);
    HermitianMatrix::new((&g + &g.adjoint()).scale(Complex64::new(0.5, 0.0)))
        .expect("symmetrized matrix is hermitian")
}

/// Random full-rank density matrix GG†/tr(GG†).
pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = random_matrix(dim, dim, rng);
    let pos = &g * &g.adjoint();
    let tr = pos.trace().re; // tr(GG†) is real and positive
    DensityMatrix::new(pos.scale(Complex64::new(1.0 / tr, 0.0)))
        .expect("normalized Gram matrix is a state")
}

/// Rank-1 partition of unity from the columns of a Haar unitary.
pub fn random_rank1_partition(dim: usize, rng: &mut impl Rng) -> Vec<Projector> {
    let u = random_unitary(dim, rng);
    (0..dim)
        .map(|j| {
            let col: Vec<Complex64> = (0..dim).map(|i| u[(i, j)]).collect();
            Projector::new(CMatrix::outer_normalized(&col).expect("unit column"))
                .expect("outer product of a unit vector is a projector")
        })
        .collect()
}

/// Homogeneous history with independent Haar-random projectors of random
/// rank at each support time.
pub fn random_homogeneous_history(
    support: &crate::histories::TemporalSupport,
    dim: usize,
    rng: &mut impl Rng,
) -> crate::histories::HomogeneousHistory {
    let props = support
        .times()
        .iter()
        .map(|_| random_projector_random_rank(dim, rng))
        .collect();
    crate::histories::HomogeneousHistory::new(support.clone(), props)
        .expect("projector dimensions match by construction")
}

/// Random path subset: each path joins independently with probability
/// `density`.
pub fn random_path_subset(
    model: &crate::pathspace::PathSpaceModel,
    density: f64,
    rng: &mut impl Rng,
) -> crate::pathspace::PathSubset {
    let paths = (0..model.path_count())
        .filter(|_| rng.random::<f64>() < density)
        .map(|r| model.unrank(r))
        .collect();
    crate::pathspace::PathSubset::Paths { paths }
}

/// Partition of unity with the given ranks (summing to dim), obtained by
/// grouping the columns of one Haar unitary.
pub fn random_partition(dim: usize, ranks: &[usize], rng: &mut impl Rng) -> Vec<Projector> {
    assert_eq!(ranks.iter().sum::<usize>(), dim, "ranks must sum to dim");
    let u = random_unitary(dim, rng);
    let mut start = 0;
    ranks
        .iter()
        .map(|&r| {
            let v = CMatrix::from_fn(dim, r, |i, j| u[(i, start + j)]);
            start += r;
            Projector::new(&v * &v.adjoint()).expect("grouped isometry columns")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C_ONE;

    #[test]
    fn unitary_and_projector_sampling() {
        let mut rng = rng_from_seed(0);
        for dim in [2usize, 3, 5] {
            let u = random_unitary(dim, &mut rng);
            assert!(u.unitarity_error() <= 1e-12);
            let p = random_projector(dim, 1, &mut rng);
            assert!((p.matrix().trace() - C_ONE).norm() <= 1e-12);
        }
    }

    #[test]
    fn density_sampling_is_valid() {
        let mut rng = rng_from_seed(1);
        let rho = random_density(4, &mut rng);
        assert_eq!(rho.dim(), 4);
    }

    #[test]
    fn partitions_sum_to_identity() {
        let mut rng = rng_from_seed(2);
        let parts = random_rank1_partition(4, &mut rng);
        let sum = parts
            .iter()
            .skip(1)
            .fold(parts[0].matrix().clone(), |acc, p| &acc + p.matrix());
        assert!(sum.max_abs_diff(&CMatrix::identity(4)) <= 1e-12);

        let grouped = random_partition(5, &[2, 3], &mut rng);
        let sum2 = &grouped[0].matrix().clone() + grouped[1].matrix();
        assert!(sum2.max_abs_diff(&CMatrix::identity(5)) <= 1e-12);
        assert!((grouped[0].matrix() * grouped[1].matrix()).max_abs() <= 1e-12);
    }

    #[test]
    fn seeding_is_deterministic() {
        let a = random_matrix(3, 3, &mut rng_from_seed(42));
        let b = random_matrix(3, 3, &mut rng_from_seed(42));
        assert_eq!(a, b);
    }
}
