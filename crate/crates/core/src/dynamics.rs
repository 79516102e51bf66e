//! Master-equation generator of an `(S, L, H)` model and a fixed-step RK4
//! propagator, used to witness that two models are physically equivalent.
//!
//! Density matrices are vectorised by stacking columns, so
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

use nalgebra::{DVector, SymmetricEigen};

use crate::belavkin::Slh;
use crate::error::{mismatch, QfnError, Result};
use crate::opmatrix::{max_abs, CMat, C64};

/// Matrix of a linear map on column-stacked `d x d` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    matrix: CMat,
    d: usize,
}

impl Superoperator {
    pub fn new(matrix: CMat, d: usize) -> Result<Self> {
        if matrix.nrows() != d * d || matrix.ncols() != d * d {
            return Err(mismatch(format!("superoperator must be {0}x{0}", d * d)));
        }
        Ok(Superoperator { matrix, d })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        unvec(&(&self.matrix * vec(rho)), self.d)
    }

    /// `‖vec(1)ᵀ 𝓛‖∞`; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let id = vec(&CMat::identity(self.d, self.d));
        (id.transpose() * &self.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn vec(m: &CMat) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<C64>, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// `𝓛ρ = -i[H, ρ] + Σ_j (L_j ρ L_j† - ½{L_j†L_j, ρ})`; `S` plays no role.
pub fn lindblad_generator(g: &Slh) -> Superoperator {
    let d = g.d();
    let id = CMat::identity(d, d);
    let h = g.h().matrix();
    let mut gen = (id.kronecker(h) - h.transpose().kronecker(&id)) * -C64::i();
    for j in 0..g.n() {
        let l = g.coupling(j).into_matrix();
        let ldl = l.adjoint() * &l;
        gen += l.conjugate().kronecker(&l);
        gen -= (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
    }
    Superoperator { matrix: gen, d }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evolution {
    pub rho: CMat,
    /// Largest `|tr ρ - 1|` seen at any step.
    pub max_trace_drift: f64,
    /// Smallest eigenvalue of the Hermitian part of the final state.
    pub min_eigenvalue: f64,
    pub steps: usize,
}

/// Checks that `rho` is a density matrix within `tol`.
pub fn check_state(rho: &CMat, tol: f64) -> Result<()> {
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return Err(QfnError::InvalidState("state must be a non-empty square matrix".into()));
    }
    let herm = max_abs(&(rho - rho.adjoint()));
    if herm > tol {
        return Err(QfnError::InvalidState(format!("not Hermitian (defect {herm:.3e})")));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > tol {
        return Err(QfnError::InvalidState(format!("trace {tr} differs from 1")));
    }
    let min = min_eigenvalue(rho);
    if min < -tol {
        return Err(QfnError::InvalidState(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

fn min_eigenvalue(rho: &CMat) -> f64 {
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Classical RK4 with step `dt`; the final step is shortened to land on `t`.
pub fn evolve(rho0: &CMat, gen: &Superoperator, t: f64, dt: f64) -> Result<Evolution> {
    if !dt.is_finite() || dt <= 0.0 || !t.is_finite() || t < 0.0 {
        return Err(QfnError::InvalidState(format!("need t >= 0 and dt > 0, got t={t}, dt={dt}")));
    }
    if rho0.nrows() != gen.d {
        return Err(mismatch(format!("state is {}x{}, generator acts on d={}", rho0.nrows(), rho0.ncols(), gen.d)));
    }
    check_state(rho0, 1e-10)?;
    let steps = ((t / dt) - 1e-9).ceil().max(0.0) as usize;
    let l = &gen.matrix;
    let mut x = vec(rho0);
    let mut max_trace_drift = 0.0f64;
    let mut elapsed = 0.0;
    for k in 0..steps {
        let h = if k + 1 == steps { t - elapsed } else { dt };
        let k1 = l * &x;
        let k2 = l * (&x + &k1 * C64::new(h / 2.0, 0.0));
        let k3 = l * (&x + &k2 * C64::new(h / 2.0, 0.0));
        let k4 = l * (&x + &k3 * C64::new(h, 0.0));
        x += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        elapsed += h;
        let tr: C64 = (0..gen.d).map(|i| x[i * gen.d + i]).sum();
        max_trace_drift = max_trace_drift.max((tr - C64::new(1.0, 0.0)).norm());
    }
    let rho = unvec(&x, gen.d);
    let min_eigenvalue = min_eigenvalue(&rho);
    Ok(Evolution { rho, max_trace_drift, min_eigenvalue, steps })
}

/// `‖𝓛(G₁) - 𝓛(G₂)‖∞`.
pub fn generator_equivalence(g1: &Slh, g2: &Slh) -> Result<f64> {
    if g1.d() != g2.d() {
        return Err(mismatch("models act on different initial spaces"));
    }
    let a = lindblad_generator(g1);
    let b = lindblad_generator(g2);
    Ok(max_abs(&(a.matrix - b.matrix)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_level(h: CMat, lower: bool) -> Slh {
        let l = if lower {
            CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
        } else {
            CMat::zeros(2, 2)
        };
        Slh::from_scalar(1, 2, CMat::identity(2, 2), l, h).unwrap()
    }

    fn excited() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
    }

    #[test]
    fn vacuum_generator_is_zero() {
        assert_eq!(lindblad_generator(&Slh::vacuum(2, 3)).matrix(), &CMat::zeros(9, 9));
    }

    #[test]
    fn sigma_z_spectrum() {
        let sz = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let gen = lindblad_generator(&two_level(sz, false));
        // Pure commutator with a diagonal H: the generator is diagonal.
        let m = gen.matrix();
        assert_eq!(max_abs(&(m - CMat::from_diagonal(&m.diagonal()))), 0.0);
        let mut eig: Vec<C64> = m.diagonal().iter().copied().collect();
        eig.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        let expect = [c(0.0, -2.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 2.0)];
        for (a, b) in eig.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn decay_stationary_state_and_coherence_rate() {
        let gen = lindblad_generator(&two_level(CMat::zeros(2, 2), true));
        assert!(gen.trace_defect() < 1e-15);
        let ground = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(max_abs(&gen.apply(&ground)) < 1e-15);
        let sv = gen.matrix().clone().singular_values();
        assert_eq!(sv.iter().filter(|&&s| s < 1e-12).count(), 1);
        let coh = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(max_abs(&(gen.apply(&coh) + &coh * c(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn zero_generator_keeps_state() {
        let gen = lindblad_generator(&Slh::vacuum(1, 2));
        let out = evolve(&excited(), &gen, 0.7, 0.1).unwrap();
        assert_eq!(out.rho, excited());
        assert_eq!(out.steps, 7);
    }

    #[test]
    fn decay_matches_exponential() {
        let gen = lindblad_generator(&two_level(CMat::zeros(2, 2), true));
        let out = evolve(&excited(), &gen, 1.0, 1e-3).unwrap();
        assert!((out.rho[(1, 1)].re - (-1.0f64).exp()).abs() < 1e-6);
        assert!(out.max_trace_drift < 1e-8);
    }

    #[test]
    fn rejects_bad_states() {
        let gen = lindblad_generator(&Slh::vacuum(1, 2));
        let not_unit = CMat::identity(2, 2);
        assert!(matches!(evolve(&not_unit, &gen, 1.0, 0.1), Err(QfnError::InvalidState(_))));
        let negative = CMat::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(evolve(&negative, &gen, 1.0, 0.1), Err(QfnError::InvalidState(_))));
        assert!(matches!(evolve(&excited(), &gen, 1.0, 0.0), Err(QfnError::InvalidState(_))));
    }

    #[test]
    fn generator_ignores_scattering() {
        let l = CMat::from_row_slice(2, 1, &[c(0.3, 0.1), c(-0.2, 0.4)]);
        let h = CMat::from_element(1, 1, c(0.8, 0.0));
        let swap = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let a = Slh::from_scalar(2, 1, CMat::identity(2, 2), l.clone(), h.clone()).unwrap();
        let b = Slh::from_scalar(2, 1, swap, l, h).unwrap();
        assert_eq!(generator_equivalence(&a, &b).unwrap(), 0.0);
        assert_eq!(generator_equivalence(&a, &a).unwrap(), 0.0);
    }
}
