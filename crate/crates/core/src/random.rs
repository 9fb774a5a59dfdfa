//! Seeding and random test objects.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::quantum::{Povm, PureState};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for trial `index` of a run seeded with `master`. Streams are
/// disjoint, so results do not depend on how trials are scheduled.
pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    CVector::from_iterator(
        dim,
        (0..dim).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))),
    )
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    PureState::normalized(vec![dim], gaussian_vector(dim, rng)).expect("gaussian vector is nonzero")
}

/// Real-amplitude random state (useful for phase-free embeddings).
pub fn random_real_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    PureState::from_real(&v.iter().map(|x| x / n).collect::<Vec<_>>()).expect("normalized")
}

/// Random PSD matrix `G G^dagger` with `rank` Gaussian columns.
pub fn random_psd<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(dim, rank, rng);
    &g * g.adjoint()
}

/// Random POVM from a PSD splitting of identity. Element ranks are drawn in
/// `1..=dim`; the last one is raised if needed so the ranks add up to `dim`.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Povm {
    let mut total_rank = 0;
    let parts: Vec<CMatrix> = (0..outcomes)
        .map(|k| {
            let mut rank = rng.gen_range(1..=dim);
            if k + 1 == outcomes {
                rank = rank.max(dim.saturating_sub(total_rank));
            }
            total_rank += rank;
            random_psd(dim, rank, rng)
        })
        .collect();
    povm_from_parts(dim, &parts).expect("PSD splitting of identity is a POVM")
}

/// `E_k = S^{-1/2} A_k S^{-1/2}` with `S = Σ A_k`. Fails when `S` is singular.
pub fn povm_from_parts(dim: usize, parts: &[CMatrix]) -> Result<Povm> {
    let sum = parts.iter().fold(CMatrix::zeros(dim, dim), |acc, a| acc + a);
    if linalg::hermitian_eigenvalues(&sum)[0] < 1e-12 {
        return Err(Error::InvalidPovm("parts do not span the space".into()));
    }
    let inv = linalg::psd_inv_sqrt(&sum, 1e-14);
    let mut elements: Vec<CMatrix> = parts
        .iter()
        .map(|a| linalg::hermitian_part(&(&inv * a * &inv)))
        .collect();
    // Absorb rounding so the elements sum to identity to machine precision.
    let total = elements.iter().fold(CMatrix::zeros(dim, dim), |acc, e| acc + e);
    let defect = linalg::identity(dim) - total;
    let last = elements.len() - 1;
    elements[last] = linalg::clip_psd(&(&elements[last] + defect));
    Povm::unlabeled(vec![dim], elements)
}
