//! Itô matrices, their bordered Belavkin embedding, the ⋆-involution and the
//! dictionary between ⋆-unitary Belavkin matrices and `(S, L, H)` triples.
//!
//! Label layout of a Belavkin matrix (rows and columns alike):
//!
//! ```text
//!            0        channels     0'
//!   0     [  .      x_{0•}       x_{00} ]
//!   chans [  0      x_{••}       x_{•0} ]
//!   0'    [  0        0            .    ]
//! ```
//!
//! Column `0` and row `0'` are zero apart from the two corner blocks. Read
//! against the fundamental differentials, `x_{00}` multiplies `dt`, the row
//! `x_{0•}` multiplies the annihilators, the column `x_{•0}` the creators and
//! `x_{••}` the scattering processes.

use crate::error::{mismatch, QfnError, Result};
use crate::opmatrix::{
    max_abs, max_abs_diff, scale_of, BlockMatrix, CMat, Label, Op, C64, DEFAULT_TOL,
};

/// A `(1+n) x (1+n)` coefficient matrix with labels `{0, channels}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ItoMatrix(BlockMatrix);

impl ItoMatrix {
    pub fn new(m: BlockMatrix) -> Result<Self> {
        let labels = m.row_labels();
        if m.col_labels() != labels {
            return Err(mismatch("Itô matrix must have identical row and column labels"));
        }
        if labels.first() != Some(&Label::Zero) || !labels[1..].iter().all(Label::is_channel) {
            return Err(mismatch("Itô matrix labels must be 0 followed by channels"));
        }
        Ok(ItoMatrix(m))
    }

    /// Channels labeled `1..=n`, `data` of size `(1+n)d x (1+n)d`.
    pub fn from_scalar(n: usize, d: usize, data: CMat) -> Result<Self> {
        let labels = ito_labels(&Label::channels(n));
        Self::new(BlockMatrix::from_scalar(labels.clone(), labels, d, data)?)
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        let k = (1 + n) * d;
        Self::from_scalar(n, d, CMat::zeros(k, k)).expect("zero Itô matrix")
    }

    /// The projector with zero `(0,0)` block and identity on the channels.
    pub fn projector(channels: &[Label], d: usize) -> Result<Self> {
        let labels = ito_labels(channels);
        let mut p = BlockMatrix::identity(labels, d)?;
        p.set_block(&Label::Zero, &Label::Zero, &Op::zeros(d))?;
        Self::new(p)
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.0
    }

    pub fn channels(&self) -> &[Label] {
        &self.0.row_labels()[1..]
    }

    pub fn n(&self) -> usize {
        self.channels().len()
    }

    pub fn d(&self) -> usize {
        self.0.d()
    }

    pub fn adjoint(&self) -> ItoMatrix {
        ItoMatrix(self.0.adjoint())
    }

    pub fn add(&self, rhs: &ItoMatrix) -> Result<ItoMatrix> {
        Ok(ItoMatrix(self.0.add(&rhs.0)?))
    }

    /// Plain array product `XY`.
    pub fn product(&self, rhs: &ItoMatrix) -> Result<ItoMatrix> {
        Ok(ItoMatrix(self.0.mul(&rhs.0)?))
    }

    /// Itô correction `X P Y`.
    pub fn ito_product(&self, rhs: &ItoMatrix) -> Result<ItoMatrix> {
        let p = Self::projector(self.channels(), self.d())?;
        Ok(ItoMatrix(self.0.mul(&p.0)?.mul(&rhs.0)?))
    }
}

fn ito_labels(channels: &[Label]) -> Vec<Label> {
    std::iter::once(Label::Zero).chain(channels.iter().cloned()).collect()
}

pub(crate) fn border_labels(channels: &[Label]) -> Vec<Label> {
    std::iter::once(Label::Zero)
        .chain(channels.iter().cloned())
        .chain(std::iter::once(Label::ZeroPrime))
        .collect()
}

/// A `(1+n+1) x (1+m+1)` block matrix with the bordered zero pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct BelavkinMatrix(BlockMatrix);

impl BelavkinMatrix {
    pub fn new(m: BlockMatrix) -> Result<Self> {
        check_border(m.row_labels())?;
        check_border(m.col_labels())?;
        let d = m.d();
        let (r, c) = (m.block_rows(), m.block_cols());
        let data = m.scalar();
        let col0 = data.view((d, 0), ((r - 1) * d, d));
        let last = data.view(((r - 1) * d, 0), (d, (c - 1) * d));
        if col0.iter().chain(last.iter()).any(|z| *z != C64::new(0.0, 0.0)) {
            return Err(QfnError::MalformedStructure(
                "column 0 and row 0' must vanish off the corner blocks".into(),
            ));
        }
        Ok(BelavkinMatrix(m))
    }

    /// `𝕀`: identity on `{0, channels, 0'}`.
    pub fn identity(channels: &[Label], d: usize) -> Result<Self> {
        Self::new(BlockMatrix::identity(border_labels(channels), d)?)
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> BlockMatrix {
        self.0
    }

    pub fn out_channels(&self) -> &[Label] {
        let rows = self.0.row_labels();
        &rows[1..rows.len() - 1]
    }

    pub fn in_channels(&self) -> &[Label] {
        let cols = self.0.col_labels();
        &cols[1..cols.len() - 1]
    }

    pub fn n(&self) -> usize {
        self.out_channels().len()
    }

    pub fn d(&self) -> usize {
        self.0.d()
    }

    pub fn is_square(&self) -> bool {
        self.out_channels().len() == self.in_channels().len()
    }

    pub fn mul(&self, rhs: &BelavkinMatrix) -> Result<BelavkinMatrix> {
        Self::new(self.0.mul(&rhs.0)?)
    }

    pub fn scale(&self, c: C64) -> BelavkinMatrix {
        BelavkinMatrix(self.0.scale(c))
    }

    pub fn relabeled(&self, outs: &[Label], ins: &[Label]) -> Result<BelavkinMatrix> {
        Self::new(self.0.relabeled(border_labels(outs), border_labels(ins))?)
    }

    /// `𝕏^⋆ = 𝕁 𝕏† 𝕁`.
    pub fn star(&self) -> BelavkinMatrix {
        BelavkinMatrix(star_block(&self.0).expect("border labels are closed under bar"))
    }
}

fn check_border(labels: &[Label]) -> Result<()> {
    let ok = labels.len() >= 2
        && labels[0] == Label::Zero
        && labels[labels.len() - 1] == Label::ZeroPrime
        && labels[1..labels.len() - 1].iter().all(Label::is_channel);
    if ok {
        Ok(())
    } else {
        Err(mismatch("Belavkin labels must read 0, channels..., 0'"))
    }
}

/// The ⋆-involution on any block matrix whose label sets are closed under
/// `0 <-> 0'`: `(𝕏^⋆)_{ab} = (𝕏_{b̄ ā})†`. Row and column families swap.
pub fn star_block(m: &BlockMatrix) -> Result<BlockMatrix> {
    let d = m.d();
    let rows = m.col_labels().to_vec();
    let cols = m.row_labels().to_vec();
    let mut data = CMat::zeros(rows.len() * d, cols.len() * d);
    for (i, a) in rows.iter().enumerate() {
        let src_col = m
            .col_pos(&a.bar())
            .ok_or_else(|| mismatch(format!("column labels lack {}", a.bar())))?;
        for (j, b) in cols.iter().enumerate() {
            let src_row = m
                .row_pos(&b.bar())
                .ok_or_else(|| mismatch(format!("row labels lack {}", b.bar())))?;
            let blk = m.scalar().view((src_row * d, src_col * d), (d, d)).adjoint();
            data.view_mut((i * d, j * d), (d, d)).copy_from(&blk);
        }
    }
    BlockMatrix::from_scalar(rows, cols, d, data)
}

/// `𝕁`: swaps the border indices, identity on the channels.
pub fn j_matrix(channels: &[Label], d: usize) -> Result<BlockMatrix> {
    let labels = border_labels(channels);
    let mut j = BlockMatrix::identity(labels, d)?;
    j.set_block(&Label::Zero, &Label::Zero, &Op::zeros(d))?;
    j.set_block(&Label::ZeroPrime, &Label::ZeroPrime, &Op::zeros(d))?;
    j.set_block(&Label::Zero, &Label::ZeroPrime, &Op::identity(d))?;
    j.set_block(&Label::ZeroPrime, &Label::Zero, &Op::identity(d))?;
    Ok(j)
}

pub fn belavkin_embed(x: &ItoMatrix) -> BelavkinMatrix {
    let m = x.matrix();
    let d = m.d();
    let n = x.n();
    let src = m.scalar();
    let k = (n + 2) * d;
    let mut data = CMat::zeros(k, k);
    // x_{0•} and x_{••} keep their column position; x_{00}, x_{•0} move to 0'.
    data.view_mut((0, d), ((n + 1) * d, n * d))
        .copy_from(&src.view((0, d), ((n + 1) * d, n * d)));
    data.view_mut((0, (n + 1) * d), ((n + 1) * d, d))
        .copy_from(&src.view((0, 0), ((n + 1) * d, d)));
    let labels = border_labels(x.channels());
    BelavkinMatrix(BlockMatrix::from_scalar(labels.clone(), labels, d, data).expect("embed shape"))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarUnitarity {
    /// `‖𝕍𝕍^⋆ - 𝕀‖∞`
    pub left_defect: f64,
    /// `‖𝕍^⋆𝕍 - 𝕀‖∞`
    pub right_defect: f64,
    pub pass: bool,
}

pub fn is_star_unitary(v: &BelavkinMatrix, tol: f64) -> StarUnitarity {
    let vs = v.star();
    let left = v.matrix().mul(vs.matrix()).expect("V V* labels");
    let right = vs.matrix().mul(v.matrix()).expect("V* V labels");
    let left_id = BlockMatrix::identity(left.row_labels().to_vec(), v.d()).expect("identity");
    let right_id = BlockMatrix::identity(right.row_labels().to_vec(), v.d()).expect("identity");
    let left_defect = max_abs_diff(&left, &left_id).expect("square");
    let right_defect = max_abs_diff(&right, &right_id).expect("square");
    let bound = tol * scale_of(&[v.matrix()]);
    StarUnitarity {
        left_defect,
        right_defect,
        pass: left_defect <= bound && right_defect <= bound,
    }
}

/// Hudson-Parthasarathy parameters. `S` has output channels as rows and
/// input channels as columns; `L` is a column over the output channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Slh {
    s: BlockMatrix,
    l: BlockMatrix,
    h: Op,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlhDiagnostics {
    /// `‖S†S - 1‖∞`
    pub unitary_left: f64,
    /// `‖SS† - 1‖∞`
    pub unitary_right: f64,
    /// `‖H - H†‖∞`
    pub hermitian: f64,
    pub pass: bool,
}

pub fn validate_slh(s: &BlockMatrix, l: &BlockMatrix, h: &Op, tol: f64) -> Result<SlhDiagnostics> {
    let d = s.d();
    if s.block_rows() != s.block_cols() {
        return Err(mismatch("S must be square"));
    }
    if l.d() != d || h.dim() != d {
        return Err(mismatch("S, L and H disagree on d"));
    }
    if l.row_labels() != s.row_labels() || l.col_labels() != [Label::ZeroPrime] {
        return Err(mismatch("L must be a single column over the output channels of S"));
    }
    let sm = s.scalar();
    let id = CMat::identity(sm.nrows(), sm.nrows());
    let unitary_left = max_abs(&(sm.adjoint() * sm - &id));
    let unitary_right = max_abs(&(sm * sm.adjoint() - &id));
    let hermitian = h.hermitian_defect();
    let pass = unitary_left <= tol
        && unitary_right <= tol
        && hermitian <= tol * max_abs(h.matrix()).max(1.0);
    Ok(SlhDiagnostics { unitary_left, unitary_right, hermitian, pass })
}

impl Slh {
    pub fn new(s: BlockMatrix, l: BlockMatrix, h: Op) -> Result<Self> {
        Self::with_tol(s, l, h, DEFAULT_TOL)
    }

    pub fn with_tol(s: BlockMatrix, l: BlockMatrix, h: Op, tol: f64) -> Result<Self> {
        let diag = validate_slh(&s, &l, &h, tol)?;
        if !diag.pass {
            let unitary = diag.unitary_left.max(diag.unitary_right);
            if unitary > tol {
                return Err(QfnError::NotUnitaryScattering { defect: unitary });
            }
            return Err(QfnError::NotHermitian { defect: diag.hermitian });
        }
        Ok(Slh { s, l, h })
    }

    /// Channels labeled `1..=n`; `s` is `nd x nd`, `l` is `nd x d`, `h` is `d x d`.
    pub fn from_scalar(n: usize, d: usize, s: CMat, l: CMat, h: CMat) -> Result<Self> {
        let labels = Label::channels(n);
        Self::new(
            BlockMatrix::from_scalar(labels.clone(), labels.clone(), d, s)?,
            BlockMatrix::from_scalar(labels, vec![Label::ZeroPrime], d, l)?,
            Op::new(h)?,
        )
    }

    /// `(1, 0, 0)` on `n` channels.
    pub fn vacuum(n: usize, d: usize) -> Self {
        let k = n * d;
        Self::from_scalar(n, d, CMat::identity(k, k), CMat::zeros(k, d), CMat::zeros(d, d))
            .expect("vacuum triple")
    }

    pub fn s(&self) -> &BlockMatrix {
        &self.s
    }

    pub fn l(&self) -> &BlockMatrix {
        &self.l
    }

    pub fn h(&self) -> &Op {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.s.block_rows()
    }

    pub fn d(&self) -> usize {
        self.s.d()
    }

    pub fn out_channels(&self) -> &[Label] {
        self.s.row_labels()
    }

    pub fn in_channels(&self) -> &[Label] {
        self.s.col_labels()
    }

    /// Coupling operator `L_j` of output channel `j`.
    pub fn coupling(&self, j: usize) -> Op {
        self.l.block_at(j, 0)
    }

    pub fn relabeled(&self, outs: Vec<Label>, ins: Vec<Label>) -> Result<Slh> {
        Ok(Slh {
            s: self.s.relabeled(outs.clone(), ins)?,
            l: self.l.relabeled(outs, vec![Label::ZeroPrime])?,
            h: self.h.clone(),
        })
    }

    /// Largest absolute difference over `S`, `L` and `H`; labels ignored.
    pub fn max_abs_diff(&self, other: &Slh) -> Result<f64> {
        let ds = max_abs_diff(&self.s, &other.s)?;
        let dl = max_abs_diff(&self.l, &other.l)?;
        if self.h.dim() != other.h.dim() {
            return Err(mismatch("H dimensions differ"));
        }
        let dh = max_abs(&(self.h.matrix() - other.h.matrix()));
        Ok(ds.max(dl).max(dh))
    }
}

/// `𝕍` with `(0,•) = -L†S`, `(0,0') = -½L†L - iH`, `(•,•) = S`, `(•,0') = L`
/// and identity corners.
pub fn from_slh(g: &Slh) -> BelavkinMatrix {
    let d = g.d();
    let n = g.n();
    let s = g.s.scalar();
    let l = g.l.scalar();
    let ldag = l.adjoint();
    let k = (n + 2) * d;
    let mut data = CMat::zeros(k, k);
    let id = CMat::identity(d, d);
    data.view_mut((0, 0), (d, d)).copy_from(&id);
    data.view_mut(((n + 1) * d, (n + 1) * d), (d, d)).copy_from(&id);
    data.view_mut((0, d), (d, n * d)).copy_from(&(-(&ldag * s)));
    let corner = &ldag * l * C64::new(-0.5, 0.0) - g.h.matrix() * C64::i();
    data.view_mut((0, (n + 1) * d), (d, d)).copy_from(&corner);
    data.view_mut((d, d), (n * d, n * d)).copy_from(s);
    data.view_mut((d, (n + 1) * d), (n * d, d)).copy_from(l);
    let m = BlockMatrix::from_scalar(
        border_labels(g.out_channels()),
        border_labels(g.in_channels()),
        d,
        data,
    )
    .expect("from_slh shape");
    BelavkinMatrix(m)
}

/// Reads `(S, L, H)` back out of a ⋆-unitary `𝕍`. The returned `H` is
/// exactly Hermitian.
pub fn to_slh(v: &BelavkinMatrix, tol: f64) -> Result<Slh> {
    if !v.is_square() {
        return Err(mismatch("to_slh needs as many input as output channels"));
    }
    let su = is_star_unitary(v, tol);
    if !su.pass {
        return Err(QfnError::NotStarUnitary { left: su.left_defect, right: su.right_defect });
    }
    let m = v.matrix();
    let d = v.d();
    let n = v.n();
    let scale = scale_of(&[m]);
    let data = m.scalar();
    let id = CMat::identity(d, d);
    let c00 = data.view((0, 0), (d, d)).into_owned();
    let c11 = data.view(((n + 1) * d, (n + 1) * d), (d, d)).into_owned();
    if max_abs(&(c00 - &id)) > tol * scale || max_abs(&(c11 - &id)) > tol * scale {
        return Err(QfnError::MalformedStructure("corner blocks must be the identity".into()));
    }
    let s = data.view((d, d), (n * d, n * d)).into_owned();
    let l = data.view((d, (n + 1) * d), (n * d, d)).into_owned();
    let row0 = data.view((0, d), (d, n * d)).into_owned();
    if max_abs(&(&row0 + l.adjoint() * &s)) > tol * scale {
        return Err(QfnError::MalformedStructure("(0, channels) block must equal -L†S".into()));
    }
    let corner = data.view((0, (n + 1) * d), (d, d)).into_owned();
    let h = (corner + l.adjoint() * &l * C64::new(0.5, 0.0)) * C64::i();
    let defect = max_abs(&(&h - h.adjoint()));
    if defect > tol * scale {
        return Err(QfnError::NotHermitian { defect });
    }
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let outs = v.out_channels().to_vec();
    let ins = v.in_channels().to_vec();
    Slh::with_tol(
        BlockMatrix::from_scalar(outs.clone(), ins, d, s)?,
        BlockMatrix::from_scalar(outs, vec![Label::ZeroPrime], d, l)?,
        Op::new(h)?,
        tol * scale,
    )
}

/// Defects of the three identifications
/// `X P Y <-> 𝕏𝕐`, `XY <-> 𝕏𝕁𝕐`, `X† <-> 𝕏^⋆`.
pub fn ito_correspondence_defects(x: &ItoMatrix, y: &ItoMatrix) -> Result<(f64, f64, f64)> {
    if x.channels() != y.channels() || x.d() != y.d() {
        return Err(mismatch("Itô matrices must share channels and d"));
    }
    let bx = belavkin_embed(x);
    let by = belavkin_embed(y);
    let j = j_matrix(x.channels(), x.d())?;

    let d1 = max_abs_diff(
        belavkin_embed(&x.ito_product(y)?).matrix(),
        &bx.matrix().mul(by.matrix())?,
    )?;
    let d2 = max_abs_diff(
        belavkin_embed(&x.product(y)?).matrix(),
        &bx.matrix().mul(&j)?.mul(by.matrix())?,
    )?;
    let d3 = max_abs_diff(belavkin_embed(&x.adjoint()).matrix(), bx.star().matrix())?;
    Ok((d1, d2, d3))
}

/// `f(X0 𝕀 + 𝕏) - f(X0) 𝕀` for `f(x) = Σ_k coeffs[k] x^k`, where `X0 𝕀`
/// carries `X0` in every diagonal block.
pub fn polynomial_ito_matrix(x0: &Op, v: &BelavkinMatrix, coeffs: &[C64]) -> Result<BelavkinMatrix> {
    let d = v.d();
    if x0.dim() != d {
        return Err(mismatch("X0 and the Belavkin matrix disagree on d"));
    }
    if !v.is_square() {
        return Err(mismatch("polynomial of a non-square Belavkin matrix"));
    }
    let blocks = v.n() + 2;
    let shift = CMat::identity(blocks, blocks).kronecker(x0.matrix());
    let a = &shift + v.matrix().scalar();
    let fa = horner(coeffs, &a);
    let fx0 = horner(coeffs, x0.matrix());
    let out = fa - CMat::identity(blocks, blocks).kronecker(&fx0);
    let m = v.matrix();
    BelavkinMatrix::new(BlockMatrix::from_scalar(
        m.row_labels().to_vec(),
        m.col_labels().to_vec(),
        d,
        out,
    )?)
}

fn horner(coeffs: &[C64], a: &CMat) -> CMat {
    let k = a.nrows();
    let mut acc = CMat::zeros(k, k);
    for c in coeffs.iter().rev() {
        acc = &acc * a + CMat::identity(k, k) * *c;
    }
    acc
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

    fn rows(r: usize, cols: usize, v: &[C64]) -> CMat {
        CMat::from_row_slice(r, cols, v)
    }

    #[test]
    fn embed_places_blocks() {
        let (a, b, cc, dd) = (c(1.0, 0.5), c(2.0, 0.0), c(0.0, 3.0), c(4.0, -1.0));
        let x = ItoMatrix::from_scalar(1, 1, rows(2, 2, &[a, b, cc, dd])).unwrap();
        let z = c(0.0, 0.0);
        let expect = rows(3, 3, &[z, b, a, z, dd, cc, z, z, z]);
        assert_eq!(belavkin_embed(&x).matrix().scalar(), &expect);
        let zero = belavkin_embed(&ItoMatrix::zeros(2, 2));
        assert_eq!(zero.matrix().norm_inf(), 0.0);
    }

    #[test]
    fn hand_star() {
        let (a, b, cc, dd) = (c(1.0, 0.5), c(2.0, 0.7), c(0.2, 3.0), c(4.0, -1.0));
        let z = c(0.0, 0.0);
        let x = ItoMatrix::from_scalar(1, 1, rows(2, 2, &[a, b, cc, dd])).unwrap();
        let s = belavkin_embed(&x).star();
        let expect = rows(3, 3, &[z, cc.conj(), a.conj(), z, dd.conj(), b.conj(), z, z, z]);
        assert_eq!(s.matrix().scalar(), &expect);
        assert_eq!(s, belavkin_embed(&x.adjoint()));
    }

    #[test]
    fn star_matches_j_conjugation() {
        let x = ItoMatrix::from_scalar(
            2,
            2,
            CMat::from_fn(6, 6, |i, j| c(i as f64 - 0.5 * j as f64, (i * j) as f64 * 0.1)),
        )
        .unwrap();
        let bx = belavkin_embed(&x);
        let j = j_matrix(x.channels(), 2).unwrap();
        let direct = j.mul(&bx.matrix().adjoint()).unwrap().mul(&j).unwrap();
        assert_eq!(max_abs_diff(&direct, bx.star().matrix()).unwrap(), 0.0);
        assert_eq!(bx.star().star(), bx);
    }

    #[test]
    fn identity_is_star_unitary() {
        let id = BelavkinMatrix::identity(&Label::channels(3), 2).unwrap();
        assert_eq!(id.star(), id);
        let r = is_star_unitary(&id, DEFAULT_TOL);
        assert!(r.pass);
        assert_eq!((r.left_defect, r.right_defect), (0.0, 0.0));
        assert!(!is_star_unitary(&id.scale(c(2.0, 0.0)), DEFAULT_TOL).pass);
    }

    #[test]
    fn from_slh_hand_values() {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let g = Slh::from_scalar(1, 1, scalar(one), scalar(c(2.0, 0.0)), scalar(z)).unwrap();
        let expect = rows(3, 3, &[one, c(-2.0, 0.0), c(-2.0, 0.0), z, one, c(2.0, 0.0), z, z, one]);
        assert_eq!(from_slh(&g).matrix().scalar(), &expect);

        let g = Slh::from_scalar(1, 1, scalar(c(0.0, 1.0)), scalar(one), scalar(one)).unwrap();
        let expect = rows(3, 3, &[one, c(0.0, -1.0), c(-0.5, -1.0), z, c(0.0, 1.0), one, z, z, one]);
        assert!(max_abs(&(from_slh(&g).matrix().scalar() - expect)) < 1e-15);
        assert!(is_star_unitary(&from_slh(&g), 1e-12).pass);
    }

    #[test]
    fn vacuum_maps_to_identity() {
        let v = from_slh(&Slh::vacuum(3, 2));
        assert_eq!(v, BelavkinMatrix::identity(&Label::channels(3), 2).unwrap());
        let back = to_slh(&v, DEFAULT_TOL).unwrap();
        assert_eq!(back, Slh::vacuum(3, 2));
    }

    #[test]
    fn to_slh_rejects() {
        let id = BelavkinMatrix::identity(&Label::channels(1), 1).unwrap();
        assert!(matches!(to_slh(&id.scale(c(2.0, 0.0)), DEFAULT_TOL), Err(QfnError::NotStarUnitary { .. })));

        // A phase on the 0 corner keeps ⋆-unitarity but breaks the pattern.
        let mut m = id.matrix().clone();
        m.set_block(&Label::Zero, &Label::Zero, &Op::scalar(c(0.0, 1.0), 1)).unwrap();
        m.set_block(&Label::ZeroPrime, &Label::ZeroPrime, &Op::scalar(c(0.0, 1.0), 1)).unwrap();
        let phased = BelavkinMatrix::new(m).unwrap();
        assert!(is_star_unitary(&phased, DEFAULT_TOL).pass);
        assert!(matches!(to_slh(&phased, DEFAULT_TOL), Err(QfnError::MalformedStructure(_))));
    }

    #[test]
    fn belavkin_pattern_enforced() {
        let labels = border_labels(&Label::channels(1));
        let mut m = BlockMatrix::zeros(labels.clone(), labels, 1).unwrap();
        m.set_block(&Label::channel(1), &Label::Zero, &Op::scalar(c(1.0, 0.0), 1)).unwrap();
        assert!(matches!(BelavkinMatrix::new(m), Err(QfnError::MalformedStructure(_))));
    }

    #[test]
    fn validation_defects() {
        let d = validate_slh(
            Slh::vacuum(2, 1).s(),
            Slh::vacuum(2, 1).l(),
            &Op::zeros(1),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!((d.unitary_left, d.unitary_right, d.hermitian), (0.0, 0.0, 0.0));
        assert!(d.pass);

        let labels = Label::channels(2);
        let s = BlockMatrix::from_scalar(
            labels.clone(),
            labels.clone(),
            1,
            rows(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]),
        )
        .unwrap();
        let l = BlockMatrix::zeros(labels.clone(), vec![Label::ZeroPrime], 1).unwrap();
        let d = validate_slh(&s, &l, &Op::zeros(1), DEFAULT_TOL).unwrap();
        assert_eq!(d.unitary_left, 3.0);
        assert!(!d.pass);
        assert!(matches!(
            Slh::new(s, l.clone(), Op::zeros(1)),
            Err(QfnError::NotUnitaryScattering { defect }) if defect == 3.0
        ));

        let h = Op::new(rows(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)])).unwrap();
        let s2 = BlockMatrix::identity(Label::channels(1), 2).unwrap();
        let l2 = BlockMatrix::zeros(Label::channels(1), vec![Label::ZeroPrime], 2).unwrap();
        let d = validate_slh(&s2, &l2, &h, DEFAULT_TOL).unwrap();
        assert_eq!(d.hermitian, 2.0);
        assert!(matches!(Slh::new(s2, l2, h), Err(QfnError::NotHermitian { .. })));

        let wrong_d = Op::zeros(2);
        assert!(matches!(
            validate_slh(Slh::vacuum(2, 1).s(), &l, &wrong_d, DEFAULT_TOL),
            Err(QfnError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn pure_scattering_identification() {
        let z = c(0.0, 0.0);
        let x = ItoMatrix::from_scalar(1, 1, rows(2, 2, &[z, z, z, c(1.0, 0.0)])).unwrap();
        assert_eq!(x.ito_product(&x).unwrap(), x);
        let (d1, d2, d3) = ito_correspondence_defects(&x, &x).unwrap();
        assert_eq!((d1, d2, d3), (0.0, 0.0, 0.0));
        let zero = ItoMatrix::zeros(2, 2);
        assert_eq!(ito_correspondence_defects(&zero, &zero).unwrap(), (0.0, 0.0, 0.0));
        assert!(ito_correspondence_defects(&zero, &ItoMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn polynomial_cases() {
        let x = ItoMatrix::from_scalar(
            2,
            2,
            CMat::from_fn(6, 6, |i, j| c((i + j) as f64 * 0.1, i as f64 - j as f64)),
        )
        .unwrap();
        let bx = belavkin_embed(&x);
        let x0 = Op::new(rows(2, 2, &[c(0.3, 0.0), c(0.1, 0.2), c(-0.4, 0.0), c(0.0, 1.0)])).unwrap();
        let (zero, one) = (c(0.0, 0.0), c(1.0, 0.0));

        let linear = polynomial_ito_matrix(&x0, &bx, &[c(5.0, 0.0), one]).unwrap();
        assert!(max_abs_diff(linear.matrix(), bx.matrix()).unwrap() < 1e-15);

        let constant = polynomial_ito_matrix(&x0, &bx, &[c(2.0, -1.0)]).unwrap();
        assert_eq!(constant.matrix().norm_inf(), 0.0);

        let square = polynomial_ito_matrix(&x0, &bx, &[zero, zero, one]).unwrap();
        let shift = CMat::identity(4, 4).kronecker(x0.matrix());
        let b = bx.matrix().scalar();
        let expect = &shift * b + b * &shift + b * b;
        assert!(max_abs(&(square.matrix().scalar() - expect)) < 1e-12);
    }
}
