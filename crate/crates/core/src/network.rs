//! Network assembly and reduction.
//!
//! Components are concatenated into one open-loop model, cascaded with the
//! series product, and closed by eliminating internal edges through the
//! Möbius map
//!
//! ```text
//! F(𝕍, X)_{ab} = V_{ab} + V_{a,in} X (1 - V_{out,in} X)^{-1} V_{out,b}
//! ```
//!
//! where `a` runs over `0`, the external outputs and `0'`, `b` over `0`, the
//! external inputs and `0'`. `X` maps internal outputs onto internal inputs:
//! its rows follow `internal_in`, its columns `internal_out`.

use crate::belavkin::{
    border_labels, from_slh, is_star_unitary, star_block, to_slh, BelavkinMatrix, Slh,
    StarUnitarity,
};
use crate::error::{mismatch, QfnError, Result};
use crate::opmatrix::{
    max_abs, max_abs_diff, norm_1, BlockMatrix, CMat, Label, Op, C64, DEFAULT_TOL,
    RCOND_THRESHOLD,
};

/// A named component of an open-loop network.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub name: String,
    pub slh: Slh,
}

impl Component {
    pub fn new(name: impl Into<String>, slh: Slh) -> Self {
        Component { name: name.into(), slh }
    }

    /// Label of local channel `k` (1-based) once concatenated.
    pub fn channel(&self, k: usize) -> Label {
        channel_label(&self.name, k)
    }
}

pub fn channel_label(component: &str, k: usize) -> Label {
    Label::Channel(format!("{component}.{k}"))
}

/// Side-by-side assembly: block-diagonal `S`, stacked `L`, summed `H`.
/// Channel `k` of component `c` becomes `c.k`.
pub fn concatenate(components: &[Component]) -> Result<Slh> {
    let first = components
        .first()
        .ok_or_else(|| mismatch("concatenation of zero components"))?;
    let d = first.slh.d();
    if components.iter().any(|c| c.slh.d() != d) {
        return Err(mismatch("components disagree on d"));
    }
    let n: usize = components.iter().map(|c| c.slh.n()).sum();
    let mut s = CMat::zeros(n * d, n * d);
    let mut l = CMat::zeros(n * d, d);
    let mut h = CMat::zeros(d, d);
    let mut labels = Vec::with_capacity(n);
    let mut off = 0;
    for c in components {
        let k = c.slh.n() * d;
        s.view_mut((off, off), (k, k)).copy_from(c.slh.s().scalar());
        l.view_mut((off, 0), (k, d)).copy_from(c.slh.l().scalar());
        h += c.slh.h().matrix();
        labels.extend((1..=c.slh.n()).map(|j| c.channel(j)));
        off += k;
    }
    Slh::new(
        BlockMatrix::from_scalar(labels.clone(), labels.clone(), d, s)?,
        BlockMatrix::from_scalar(labels, vec![Label::ZeroPrime], d, l)?,
        Op::new(h)?,
    )
}

/// `𝕍₂𝕍₁`: the output of `v1` feeds the input of `v2`, channels paired by
/// position.
pub fn series(v2: &BelavkinMatrix, v1: &BelavkinMatrix) -> Result<BelavkinMatrix> {
    if v2.n() != v1.n() || v2.d() != v1.d() || !v1.is_square() || !v2.is_square() {
        return Err(mismatch("series needs equal channel counts and d"));
    }
    for v in [v1, v2] {
        let su = is_star_unitary(v, DEFAULT_TOL);
        if !su.pass {
            return Err(QfnError::NotStarUnitary { left: su.left_defect, right: su.right_defect });
        }
    }
    let v1 = v1.relabeled(v2.in_channels(), v1.in_channels())?;
    v2.mul(&v1)
}

/// `S = S₂S₁`, `L = L₂ + S₂L₁`, `H = H₁ + H₂ + Im{L₂†S₂L₁}`.
pub fn series_slh(g2: &Slh, g1: &Slh) -> Result<Slh> {
    if g2.n() != g1.n() || g2.d() != g1.d() {
        return Err(mismatch("series needs equal channel counts and d"));
    }
    let d = g1.d();
    let (s1, l1) = (g1.s().scalar(), g1.l().scalar());
    let (s2, l2) = (g2.s().scalar(), g2.l().scalar());
    let s = s2 * s1;
    let l = l2 + s2 * l1;
    let m = l2.adjoint() * s2 * l1;
    let im = (&m - m.adjoint()) / C64::new(0.0, 2.0);
    let h = g1.h().matrix() + g2.h().matrix() + im;
    let outs = g2.out_channels().to_vec();
    Slh::new(
        BlockMatrix::from_scalar(outs.clone(), g1.in_channels().to_vec(), d, s)?,
        BlockMatrix::from_scalar(outs, vec![Label::ZeroPrime], d, l)?,
        Op::new(h)?,
    )
}

/// Which internal outputs feed which internal inputs, and with what gain.
#[derive(Clone, Debug, PartialEq)]
pub struct Wiring {
    internal_out: Vec<Label>,
    internal_in: Vec<Label>,
    gain: CMat,
    gain_unitary: bool,
}

impl Wiring {
    /// `gain[(r, c)]` is the amplitude carried from `internal_out[c]` into
    /// `internal_in[r]`.
    pub fn new(internal_out: Vec<Label>, internal_in: Vec<Label>, gain: CMat) -> Result<Self> {
        let ni = internal_out.len();
        if ni == 0 {
            return Err(QfnError::InvalidPartition("no internal edges".into()));
        }
        if internal_in.len() != ni {
            return Err(QfnError::InvalidPartition(format!(
                "{ni} internal outputs but {} internal inputs",
                internal_in.len()
            )));
        }
        for set in [&internal_out, &internal_in] {
            for (i, l) in set.iter().enumerate() {
                if !l.is_channel() {
                    return Err(QfnError::InvalidPartition(format!("{l} is not a channel")));
                }
                if set[..i].contains(l) {
                    return Err(QfnError::InvalidPartition(format!("{l} listed twice")));
                }
            }
        }
        if gain.nrows() != ni || gain.ncols() != ni {
            return Err(mismatch(format!(
                "gain is {}x{}, expected {ni}x{ni}",
                gain.nrows(),
                gain.ncols()
            )));
        }
        if gain.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(mismatch("non-finite gain"));
        }
        let gain_unitary = max_abs(&(gain.adjoint() * &gain - CMat::identity(ni, ni))) <= 1e-10;
        Ok(Wiring { internal_out, internal_in, gain, gain_unitary })
    }

    /// The same labels eliminated on the output and the input side.
    pub fn symmetric(internal: Vec<Label>, gain: CMat) -> Result<Self> {
        Self::new(internal.clone(), internal, gain)
    }

    pub fn internal_out(&self) -> &[Label] {
        &self.internal_out
    }

    pub fn internal_in(&self) -> &[Label] {
        &self.internal_in
    }

    pub fn gain(&self) -> &CMat {
        &self.gain
    }

    pub fn gain_is_unitary(&self) -> bool {
        self.gain_unitary
    }

    pub fn is_symmetric(&self) -> bool {
        self.internal_out == self.internal_in
    }

    pub fn n_internal(&self) -> usize {
        self.internal_out.len()
    }

    pub fn with_gain(&self, gain: CMat) -> Result<Wiring> {
        Self::new(self.internal_out.clone(), self.internal_in.clone(), gain)
    }

    /// The wiring that acts on `𝕍^⋆`: sides swapped, gain `X†`.
    pub fn adjoint(&self) -> Wiring {
        Self::new(self.internal_in.clone(), self.internal_out.clone(), self.gain.adjoint())
            .expect("adjoint of a valid wiring")
    }

    fn lifted(&self, d: usize) -> BlockMatrix {
        BlockMatrix::embed_scalar_labeled(
            &self.gain,
            d,
            self.internal_in.clone(),
            self.internal_out.clone(),
        )
        .expect("valid gain")
    }
}

struct Split {
    /// `{0} ∪ external outputs ∪ {0'}`
    rows: Vec<Label>,
    /// `{0} ∪ external inputs ∪ {0'}`
    cols: Vec<Label>,
}

fn split(v: &BelavkinMatrix, w: &Wiring) -> Result<Split> {
    let n = v.n();
    if v.in_channels().len() != n {
        return Err(mismatch("feedback reduction of a non-square Belavkin matrix"));
    }
    if w.n_internal() >= n {
        return Err(QfnError::InvalidPartition(format!(
            "{} internal edges leave no external channel out of {n}",
            w.n_internal()
        )));
    }
    for l in &w.internal_out {
        if !v.out_channels().contains(l) {
            return Err(QfnError::InvalidPartition(format!("unknown output channel {l}")));
        }
    }
    for l in &w.internal_in {
        if !v.in_channels().contains(l) {
            return Err(QfnError::InvalidPartition(format!("unknown input channel {l}")));
        }
    }
    let ext_out: Vec<Label> =
        v.out_channels().iter().filter(|l| !w.internal_out.contains(l)).cloned().collect();
    let ext_in: Vec<Label> =
        v.in_channels().iter().filter(|l| !w.internal_in.contains(l)).cloned().collect();
    Ok(Split { rows: border_labels(&ext_out), cols: border_labels(&ext_in) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainReport {
    pub rcond: f64,
    pub in_domain: bool,
}

/// Loop operator `1 - V_{out,in} X̂`, its inverse, and the reciprocal
/// condition measured against the size of the two terms:
/// `1 / (‖M⁻¹‖₁ (1 + ‖V_{out,in} X̂‖₁))`.
fn loop_inverse(v: &BelavkinMatrix, w: &Wiring) -> Result<(Option<BlockMatrix>, f64)> {
    let d = v.d();
    let v_ii = v.matrix().select(&w.internal_out, &w.internal_in)?;
    let feedback = v_ii.mul(&w.lifted(d))?;
    let id = BlockMatrix::identity(w.internal_out.clone(), d)?;
    let m = id.sub(&feedback)?;
    let (inv, _) = crate::opmatrix::inverse_with_rcond(m.scalar());
    let Some(inv) = inv else {
        return Ok((None, 0.0));
    };
    let rcond = 1.0 / (norm_1(&inv) * (1.0 + norm_1(feedback.scalar())));
    let labels = w.internal_out.clone();
    Ok((Some(BlockMatrix::from_scalar(labels.clone(), labels, d, inv)?), rcond))
}

/// Whether `X` lies in the Möbius domain of `𝕍`, i.e. `1 - V_ii X` is
/// invertible with reciprocal condition at least `1e-12`. Only partition
/// errors are reported as `Err`.
pub fn domain_check(v: &BelavkinMatrix, w: &Wiring) -> Result<DomainReport> {
    split(v, w)?;
    let (_, rcond) = loop_inverse(v, w)?;
    Ok(DomainReport { rcond, in_domain: rcond >= RCOND_THRESHOLD })
}

/// The Möbius map `F(𝕍, X)` with no unitarity requirements on either side.
pub fn mobius(v: &BelavkinMatrix, w: &Wiring) -> Result<BelavkinMatrix> {
    let sp = split(v, w)?;
    let (inv, rcond) = loop_inverse(v, w)?;
    let inv = match inv {
        Some(inv) if rcond >= RCOND_THRESHOLD => inv,
        _ => return Err(QfnError::AlgebraicLoop { rcond }),
    };
    let m = v.matrix();
    let v_ee = m.select(&sp.rows, &sp.cols)?;
    let v_ei = m.select(&sp.rows, &w.internal_in)?;
    let v_ie = m.select(&w.internal_out, &sp.cols)?;
    let correction = v_ei.mul(&w.lifted(v.d()))?.mul(&inv)?.mul(&v_ie)?;
    BelavkinMatrix::new(v_ee.add(&correction)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionDiagnostics {
    pub star_unitarity: StarUnitarity,
    /// `‖F(𝕍,X)^⋆ - F(𝕍^⋆,X†)‖∞`, absent when `X†` falls outside the
    /// domain of `𝕍^⋆`.
    pub involution_defect: Option<f64>,
    pub rcond: f64,
    pub gain_unitary: bool,
    /// Reduced channel `k` = (k-th external output, k-th external input).
    pub channel_pairing: Vec<(Label, Label)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedModel {
    pub v_red: BelavkinMatrix,
    /// `None` when the reduced matrix is not ⋆-unitary (non-unitary gain).
    pub slh_red: Option<Slh>,
    pub diagnostics: ReductionDiagnostics,
}

pub fn feedback_reduce(v: &BelavkinMatrix, w: &Wiring) -> Result<ReducedModel> {
    feedback_reduce_with_tol(v, w, DEFAULT_TOL)
}

pub fn feedback_reduce_with_tol(v: &BelavkinMatrix, w: &Wiring, tol: f64) -> Result<ReducedModel> {
    let su = is_star_unitary(v, tol);
    if !su.pass {
        return Err(QfnError::NotStarUnitary { left: su.left_defect, right: su.right_defect });
    }
    let rcond = domain_check(v, w)?.rcond;
    let v_red = mobius(v, w)?;
    let star_unitarity = is_star_unitary(&v_red, tol);
    let slh_red = if star_unitarity.pass { Some(to_slh(&v_red, tol)?) } else { None };
    let involution_defect = involution_identity_defect(v, w).ok();
    let channel_pairing = v_red
        .out_channels()
        .iter()
        .cloned()
        .zip(v_red.in_channels().iter().cloned())
        .collect();
    Ok(ReducedModel {
        v_red,
        slh_red,
        diagnostics: ReductionDiagnostics {
            star_unitarity,
            involution_defect,
            rcond,
            gain_unitary: w.gain_is_unitary(),
            channel_pairing,
        },
    })
}

/// `(S, L, H)` of the closed-loop model.
pub fn reduced_slh(v: &BelavkinMatrix, w: &Wiring) -> Result<Slh> {
    let model = feedback_reduce(v, w)?;
    let su = model.diagnostics.star_unitarity;
    model
        .slh_red
        .ok_or(QfnError::NotStarUnitary { left: su.left_defect, right: su.right_defect })
}

/// Cascade realised as a one-edge-per-channel network: every output of `g1`
/// is wired to the matching input of `g2` with unit gain.
pub fn cascade_via_feedback(g1: &Slh, g2: &Slh) -> Result<Slh> {
    if g1.n() != g2.n() || g1.d() != g2.d() {
        return Err(mismatch("cascade needs equal channel counts and d"));
    }
    let c1 = Component::new("g1", g1.clone());
    let c2 = Component::new("g2", g2.clone());
    let m = g1.n();
    let internal_out = (1..=m).map(|k| c1.channel(k)).collect();
    let internal_in = (1..=m).map(|k| c2.channel(k)).collect();
    let open = concatenate(&[c1, c2])?;
    let w = Wiring::new(internal_out, internal_in, CMat::identity(m, m))?;
    reduced_slh(&from_slh(&open), &w)
}

/// `‖F(𝕍,X)^⋆ - F(𝕍^⋆,X†)‖∞`.
pub fn involution_identity_defect(v: &BelavkinMatrix, w: &Wiring) -> Result<f64> {
    let lhs = mobius(v, w)?.star();
    let rhs = mobius(&v.star(), &w.adjoint())?;
    max_abs_diff(lhs.matrix(), rhs.matrix())
}

/// Residuals of the two Siegel factorizations for `Φ = F(𝕍, ·)` at the
/// wiring's gain `X` and a second gain `Y`:
///
/// ```text
/// Φ(X)^⋆Φ(Y) - 𝕀 = R^⋆ (1 - X†V_ii†)^{-1} (X†Y - 1) (1 - V_ii Y)^{-1} R
/// Φ(X)Φ(Y)^⋆ - 𝕀 = C (1 - X V_ii)^{-1} (X Y† - 1) (1 - V_ii† Y†)^{-1} C^⋆
/// ```
///
/// with `R = V_{internal, external}` and `C = V_{external, internal}`.
pub fn siegel_defects(v: &BelavkinMatrix, w: &Wiring, y: &CMat) -> Result<(f64, f64)> {
    let sp = split(v, w)?;
    let wy = w.with_gain(y.clone())?;
    let phi_x = mobius(v, w)?;
    let phi_y = mobius(v, &wy)?;
    let d = v.d();
    let m = v.matrix();
    let xh = w.lifted(d);
    let yh = wy.lifted(d);
    let v_ii = m.select(&w.internal_out, &w.internal_in)?;
    let r = m.select(&w.internal_out, &sp.cols)?;
    let c = m.select(&sp.rows, &w.internal_in)?;
    let id_out = BlockMatrix::identity(w.internal_out.clone(), d)?;
    let id_in = BlockMatrix::identity(w.internal_in.clone(), d)?;

    let lhs = phi_x.star().matrix().mul(phi_y.matrix())?;
    let a = id_out.sub(&xh.adjoint().mul(&v_ii.adjoint())?)?.inv()?.0;
    let mid = xh.adjoint().mul(&yh)?.sub(&id_out)?;
    let b = id_out.sub(&v_ii.mul(&yh)?)?.inv()?.0;
    let rhs = star_block(&r)?.mul(&a)?.mul(&mid)?.mul(&b)?.mul(&r)?;
    let id = BlockMatrix::identity(lhs.row_labels().to_vec(), d)?;
    let left = max_abs_diff(&lhs.sub(&id)?, &rhs)?;

    let lhs = phi_x.matrix().mul(phi_y.star().matrix())?;
    let a = id_in.sub(&xh.mul(&v_ii)?)?.inv()?.0;
    let mid = xh.mul(&yh.adjoint())?.sub(&id_in)?;
    let b = id_in.sub(&v_ii.adjoint().mul(&yh.adjoint())?)?.inv()?.0;
    let rhs = c.mul(&a)?.mul(&mid)?.mul(&b)?.mul(&star_block(&c)?)?;
    let id = BlockMatrix::identity(lhs.row_labels().to_vec(), d)?;
    let right = max_abs_diff(&lhs.sub(&id)?, &rhs)?;

    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar(z: C64) -> CMat {
        CMat::from_element(1, 1, z)
    }

    fn slh1(s: C64, l: C64, h: f64) -> Slh {
        Slh::from_scalar(1, 1, scalar(s), scalar(l), scalar(c(h, 0.0))).unwrap()
    }

    fn beamsplitter_loop() -> (BelavkinMatrix, Wiring) {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = CMat::from_row_slice(2, 2, &[c(r, 0.0), c(r, 0.0), c(-r, 0.0), c(r, 0.0)]);
        let g = Slh::from_scalar(2, 1, s, CMat::zeros(2, 1), CMat::zeros(1, 1)).unwrap();
        let w = Wiring::symmetric(vec![Label::channel(2)], scalar(c(1.0, 0.0))).unwrap();
        (from_slh(&g), w)
    }

    #[test]
    fn beamsplitter_loop_is_all_pass() {
        let (v, w) = beamsplitter_loop();
        let g = reduced_slh(&v, &w).unwrap();
        assert!((g.s().scalar()[(0, 0)] - c(-1.0, 0.0)).norm() <= 1e-12);
        assert!(max_abs(g.l().scalar()) <= 1e-12);
        assert!(max_abs(g.h().matrix()) <= 1e-12);
        let dom = domain_check(&v, &w).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((dom.rcond - (1.0 - r) / (1.0 + r)).abs() < 1e-12);
        assert!((dom.rcond - 0.17).abs() < 0.01);
        assert!(dom.in_domain);
    }

    #[test]
    fn identity_loop_is_algebraic() {
        let g = Slh::vacuum(2, 1);
        let v = from_slh(&g);
        let w = Wiring::symmetric(vec![Label::channel(2)], scalar(c(1.0, 0.0))).unwrap();
        let dom = domain_check(&v, &w).unwrap();
        assert_eq!(dom.rcond, 0.0);
        assert!(!dom.in_domain);
        assert_eq!(feedback_reduce(&v, &w).unwrap_err(), QfnError::AlgebraicLoop { rcond: 0.0 });
    }

    #[test]
    fn zero_gain_has_unit_rcond() {
        let (v, _) = beamsplitter_loop();
        let w = Wiring::symmetric(vec![Label::channel(2)], scalar(c(0.0, 0.0))).unwrap();
        assert_eq!(domain_check(&v, &w).unwrap().rcond, 1.0);
    }

    #[test]
    fn swap_route_cascade() {
        let (l1, l2) = (c(0.3, -0.7), c(1.1, 0.4));
        let s = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let l = CMat::from_row_slice(2, 1, &[l1, l2]);
        let g = Slh::from_scalar(2, 1, s, l, CMat::zeros(1, 1)).unwrap();
        let w = Wiring::symmetric(vec![Label::channel(2)], scalar(c(1.0, 0.0))).unwrap();
        let red = reduced_slh(&from_slh(&g), &w).unwrap();
        assert!((red.s().scalar()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((red.l().scalar()[(0, 0)] - (l1 + l2)).norm() < 1e-12);
        let im = (l1.conj() * l2).im;
        assert!((red.h().matrix()[(0, 0)] - c(im, 0.0)).norm() < 1e-12);
        let series = series_slh(&slh1(c(1.0, 0.0), l1, 0.0), &slh1(c(1.0, 0.0), l2, 0.0)).unwrap();
        assert!(red.max_abs_diff(&series).unwrap() < 1e-12);
    }

    #[test]
    fn decoupled_loop_keeps_external_part() {
        let s = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let l = CMat::from_row_slice(2, 1, &[c(0.5, 0.5), c(0.0, 0.0)]);
        let g = Slh::from_scalar(2, 1, s, l, scalar(c(0.25, 0.0))).unwrap();
        let w = Wiring::symmetric(vec![Label::channel(2)], scalar(c(0.0, 1.0))).unwrap();
        let v = from_slh(&g);
        let red = reduced_slh(&v, &w).unwrap();
        let expect = slh1(c(0.0, 1.0), c(0.5, 0.5), 0.25);
        assert!(red.max_abs_diff(&expect).unwrap() < 1e-15);
        assert_eq!(involution_identity_defect(&v, &w).unwrap(), 0.0);
    }

    #[test]
    fn series_hand_example() {
        let g1 = slh1(c(1.0, 0.0), c(1.0, 0.0), 0.0);
        let g2 = slh1(c(1.0, 0.0), c(0.0, 1.0), 0.0);
        let g = series_slh(&g2, &g1).unwrap();
        let expect = slh1(c(1.0, 0.0), c(1.0, 1.0), -1.0);
        assert!(g.max_abs_diff(&expect).unwrap() < 1e-12);
        let v = series(&from_slh(&g2), &from_slh(&g1)).unwrap();
        assert!(max_abs_diff(v.matrix(), from_slh(&expect).matrix()).unwrap() < 1e-12);
        let via = cascade_via_feedback(&g1, &g2).unwrap();
        assert!(via.max_abs_diff(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn vacuum_stages_are_neutral() {
        let g = slh1(c(0.0, 1.0), c(0.3, 0.2), 0.7);
        let vac = Slh::vacuum(1, 1);
        assert!(series_slh(&g, &vac).unwrap().max_abs_diff(&g).unwrap() < 1e-15);
        let v = series(&from_slh(&vac), &from_slh(&g)).unwrap();
        assert_eq!(v.matrix().scalar(), from_slh(&g).matrix().scalar());
        assert!(cascade_via_feedback(&vac, &g).unwrap().max_abs_diff(&g).unwrap() < 1e-15);
    }

    #[test]
    fn concatenate_cases() {
        let g = slh1(c(0.0, 1.0), c(0.3, 0.2), 0.7);
        let single = concatenate(&[Component::new("a", g.clone())]).unwrap();
        assert_eq!(single.max_abs_diff(&g).unwrap(), 0.0);
        assert_eq!(single.out_channels(), &[Label::channel("a.1")]);

        let padded = concatenate(&[
            Component::new("vac", Slh::vacuum(1, 1)),
            Component::new("g", g.clone()),
        ])
        .unwrap();
        assert_eq!(padded.s().scalar()[(0, 0)], c(1.0, 0.0));
        assert_eq!(padded.s().scalar()[(1, 1)], c(0.0, 1.0));
        assert_eq!(padded.h(), g.h());

        let (a, b) = (c(0.1, 0.2), c(-0.4, 0.0));
        let both = concatenate(&[
            Component::new("x", slh1(c(1.0, 0.0), a, 1.5)),
            Component::new("y", slh1(c(1.0, 0.0), b, -0.5)),
        ])
        .unwrap();
        assert_eq!(both.s().scalar(), &CMat::identity(2, 2));
        assert_eq!(both.l().scalar(), &CMat::from_row_slice(2, 1, &[a, b]));
        assert_eq!(both.h().matrix()[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn concatenate_rejects_mixed_d() {
        let a = Component::new("a", Slh::vacuum(1, 1));
        let b = Component::new("b", Slh::vacuum(1, 2));
        assert!(matches!(concatenate(&[a, b]), Err(QfnError::DimensionMismatch(_))));
    }

    #[test]
    fn partition_errors() {
        let v = from_slh(&Slh::vacuum(2, 1));
        let all = Wiring::symmetric(Label::channels(2), CMat::identity(2, 2)).unwrap();
        assert!(matches!(mobius(&v, &all), Err(QfnError::InvalidPartition(_))));
        let unknown = Wiring::symmetric(vec![Label::channel(7)], scalar(c(1.0, 0.0))).unwrap();
        assert!(matches!(mobius(&v, &unknown), Err(QfnError::InvalidPartition(_))));
        assert!(matches!(
            Wiring::symmetric(vec![], CMat::zeros(0, 0)),
            Err(QfnError::InvalidPartition(_))
        ));
        assert!(matches!(
            Wiring::symmetric(vec![Label::channel(1), Label::channel(1)], CMat::identity(2, 2)),
            Err(QfnError::InvalidPartition(_))
        ));
        assert!(matches!(
            Wiring::symmetric(vec![Label::Zero], scalar(c(1.0, 0.0))),
            Err(QfnError::InvalidPartition(_))
        ));
    }

    #[test]
    fn reduction_requires_star_unitary_input() {
        let (v, w) = beamsplitter_loop();
        let doubled = v.scale(c(2.0, 0.0));
        assert!(matches!(feedback_reduce(&doubled, &w), Err(QfnError::NotStarUnitary { .. })));
    }

    #[test]
    fn scalar_siegel_closed_form() {
        // n = 2, one internal edge, d = 1: every block is a number.
        let (v, w) = beamsplitter_loop();
        let w = w.with_gain(scalar(c(0.6, 0.3))).unwrap();
        let y = scalar(c(-0.2, 0.5));
        let (left, right) = siegel_defects(&v, &w, &y).unwrap();
        assert!(left <= 1e-12 && right <= 1e-12, "{left} {right}");

        // Φ(X)^⋆Φ(Y) - 𝕀 at the (1,1) block, by hand:
        // S_red(X) = r - r² x / (1 - r x), with r = 1/√2.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sred = |x: C64| r - r * r * x / (1.0 - r * x);
        let (x, yy) = (c(0.6, 0.3), c(-0.2, 0.5));
        let lhs = sred(x).conj() * sred(yy) - 1.0;
        let rhs = (r * r) * (x.conj() * yy - 1.0) / ((1.0 - x.conj() * r) * (1.0 - r * yy));
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
