//! Seeded random instances for property checks.
//!
//! A trial's generator is ChaCha20 keyed by `seed_from_u64(seed)` with the
//! stream id set to the trial index, so trial `k` draws the same numbers
//! regardless of how many other trials run or in which order.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::belavkin::{ItoMatrix, Slh};
use crate::opmatrix::{CMat, C64};

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Entries `(g1 + i g2) / √2` with `g1, g2` standard normal.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of
/// `diag(R)` divided out.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMat {
    let qr = gaussian_matrix(rng, m, m).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..m {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    let g = gaussian_matrix(rng, d, d);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// `U diag(s) W` with singular values drawn from `[lo, hi]`; invertible
/// and, for `hi < 1`, a strict contraction.
pub fn random_contraction<R: Rng + ?Sized>(rng: &mut R, m: usize, lo: f64, hi: f64) -> CMat {
    let u = random_unitary(rng, m);
    let w = random_unitary(rng, m);
    let s = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            C64::new(rng.random_range(lo..=hi), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    u * s * w
}

/// A random valid `(S, L, H)` on channels `1..=n`.
pub fn random_slh<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Slh {
    let s = random_unitary(rng, n * d);
    let l = gaussian_matrix(rng, n * d, d);
    let h = random_hermitian(rng, d);
    Slh::from_scalar(n, d, s, l, h).expect("sampled triple is valid")
}

pub fn random_ito<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> ItoMatrix {
    let k = (1 + n) * d;
    ItoMatrix::from_scalar(n, d, gaussian_matrix(rng, k, k)).expect("sampled Itô matrix is valid")
}
