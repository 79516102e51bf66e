//! Dense complex block matrices with labeled row and column index sets.
//!
//! Every block is a `d x d` operator on the initial space. Storage is a
//! single dense scalar matrix; blocks are addressed through their labels.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{mismatch, QfnError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Reciprocal condition below which an inverse is treated as nonexistent.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Default relative tolerance for pass/fail decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Index label of a block row or column.
///
/// `Zero` and `ZeroPrime` are the two border indices of a Belavkin matrix;
/// everything in between is a named field channel.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Zero,
    Channel(String),
    ZeroPrime,
}

impl Label {
    pub fn channel(name: impl fmt::Display) -> Self {
        Label::Channel(name.to_string())
    }

    /// Channels `1..=n`.
    pub fn channels(n: usize) -> Vec<Label> {
        (1..=n).map(Label::channel).collect()
    }

    /// Swaps the two border labels and fixes channels.
    pub fn bar(&self) -> Label {
        match self {
            Label::Zero => Label::ZeroPrime,
            Label::ZeroPrime => Label::Zero,
            c => c.clone(),
        }
    }

    pub fn is_channel(&self) -> bool {
        matches!(self, Label::Channel(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Zero => write!(f, "0"),
            Label::ZeroPrime => write!(f, "0'"),
            Label::Channel(name) => write!(f, "{name}"),
        }
    }
}

/// An operator on the initial space, stored as a `d x d` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Op(CMat);

impl Op {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(mismatch(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        ensure_finite(&m)?;
        Ok(Op(m))
    }

    pub fn identity(d: usize) -> Self {
        Op(CMat::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Op(CMat::zeros(d, d))
    }

    pub fn scalar(c: C64, d: usize) -> Self {
        Op(CMat::identity(d, d) * c)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn adjoint(&self) -> Op {
        Op(self.0.adjoint())
    }

    /// `‖H - H†‖∞`.
    pub fn hermitian_defect(&self) -> f64 {
        max_abs(&(&self.0 - self.0.adjoint()))
    }
}

/// A rectangular array of `d x d` blocks indexed by labels.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    rows: Vec<Label>,
    cols: Vec<Label>,
    d: usize,
    data: CMat,
}

impl BlockMatrix {
    pub fn from_scalar(rows: Vec<Label>, cols: Vec<Label>, d: usize, data: CMat) -> Result<Self> {
        if d == 0 {
            return Err(mismatch("initial dimension must be positive"));
        }
        ensure_distinct(&rows)?;
        ensure_distinct(&cols)?;
        if data.nrows() != rows.len() * d || data.ncols() != cols.len() * d {
            return Err(mismatch(format!(
                "scalar data is {}x{}, labels need {}x{}",
                data.nrows(),
                data.ncols(),
                rows.len() * d,
                cols.len() * d
            )));
        }
        ensure_finite(&data)?;
        Ok(BlockMatrix { rows, cols, d, data })
    }

    pub fn zeros(rows: Vec<Label>, cols: Vec<Label>, d: usize) -> Result<Self> {
        let data = CMat::zeros(rows.len() * d, cols.len() * d);
        Self::from_scalar(rows, cols, d, data)
    }

    pub fn identity(labels: Vec<Label>, d: usize) -> Result<Self> {
        let k = labels.len() * d;
        Self::from_scalar(labels.clone(), labels, d, CMat::identity(k, k))
    }

    pub fn row_labels(&self) -> &[Label] {
        &self.rows
    }

    pub fn col_labels(&self) -> &[Label] {
        &self.cols
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn scalar(&self) -> &CMat {
        &self.data
    }

    pub fn into_scalar(self) -> CMat {
        self.data
    }

    pub fn block_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn block_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn row_pos(&self, label: &Label) -> Option<usize> {
        self.rows.iter().position(|l| l == label)
    }

    pub fn col_pos(&self, label: &Label) -> Option<usize> {
        self.cols.iter().position(|l| l == label)
    }

    fn positions(&self, r: &Label, c: &Label) -> Result<(usize, usize)> {
        let i = self
            .row_pos(r)
            .ok_or_else(|| mismatch(format!("no row label {r}")))?;
        let j = self
            .col_pos(c)
            .ok_or_else(|| mismatch(format!("no column label {c}")))?;
        Ok((i, j))
    }

    pub fn block(&self, r: &Label, c: &Label) -> Result<Op> {
        let (i, j) = self.positions(r, c)?;
        Ok(self.block_at(i, j))
    }

    pub fn block_at(&self, i: usize, j: usize) -> Op {
        let d = self.d;
        Op(self.data.view((i * d, j * d), (d, d)).into_owned())
    }

    pub fn set_block(&mut self, r: &Label, c: &Label, op: &Op) -> Result<()> {
        if op.dim() != self.d {
            return Err(mismatch(format!(
                "block has dimension {}, matrix uses {}",
                op.dim(),
                self.d
            )));
        }
        let (i, j) = self.positions(r, c)?;
        let d = self.d;
        self.data.view_mut((i * d, j * d), (d, d)).copy_from(op.matrix());
        Ok(())
    }

    /// Sub-matrix made of the given row and column labels, in the given order.
    pub fn select(&self, rows: &[Label], cols: &[Label]) -> Result<BlockMatrix> {
        let d = self.d;
        let ri = rows
            .iter()
            .map(|l| self.row_pos(l).ok_or_else(|| mismatch(format!("no row label {l}"))))
            .collect::<Result<Vec<_>>>()?;
        let ci = cols
            .iter()
            .map(|l| self.col_pos(l).ok_or_else(|| mismatch(format!("no column label {l}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut data = CMat::zeros(rows.len() * d, cols.len() * d);
        for (a, &i) in ri.iter().enumerate() {
            for (b, &j) in ci.iter().enumerate() {
                data.view_mut((a * d, b * d), (d, d))
                    .copy_from(&self.data.view((i * d, j * d), (d, d)));
            }
        }
        Self::from_scalar(rows.to_vec(), cols.to_vec(), d, data)
    }

    /// Replaces the labels, keeping the scalar data.
    pub fn relabeled(&self, rows: Vec<Label>, cols: Vec<Label>) -> Result<BlockMatrix> {
        if rows.len() != self.rows.len() || cols.len() != self.cols.len() {
            return Err(mismatch("relabel must keep the block shape"));
        }
        Self::from_scalar(rows, cols, self.d, self.data.clone())
    }

    pub fn mul(&self, rhs: &BlockMatrix) -> Result<BlockMatrix> {
        if self.d != rhs.d {
            return Err(mismatch(format!("d = {} vs d = {}", self.d, rhs.d)));
        }
        if self.cols != rhs.rows {
            return Err(mismatch(format!(
                "column labels [{}] do not match row labels [{}]",
                join(&self.cols),
                join(&rhs.rows)
            )));
        }
        Ok(BlockMatrix {
            rows: self.rows.clone(),
            cols: rhs.cols.clone(),
            d: self.d,
            data: &self.data * &rhs.data,
        })
    }

    fn same_shape(&self, rhs: &BlockMatrix) -> Result<()> {
        if self.d != rhs.d || self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(mismatch("operands have different labels or d"));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &BlockMatrix) -> Result<BlockMatrix> {
        self.same_shape(rhs)?;
        Ok(BlockMatrix { data: &self.data + &rhs.data, ..self.clone() })
    }

    pub fn sub(&self, rhs: &BlockMatrix) -> Result<BlockMatrix> {
        self.same_shape(rhs)?;
        Ok(BlockMatrix { data: &self.data - &rhs.data, ..self.clone() })
    }

    pub fn scale(&self, c: C64) -> BlockMatrix {
        BlockMatrix { data: &self.data * c, ..self.clone() }
    }

    /// Scalar-level conjugate transpose; row and column labels swap.
    pub fn adjoint(&self) -> BlockMatrix {
        BlockMatrix {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            d: self.d,
            data: self.data.adjoint(),
        }
    }

    /// Scalar-level inverse together with its 1-norm reciprocal condition.
    pub fn inv(&self) -> Result<(BlockMatrix, f64)> {
        if self.data.nrows() != self.data.ncols() {
            return Err(mismatch("inverse of a non-square matrix"));
        }
        let (inv, rcond) = inverse_with_rcond(&self.data);
        match inv {
            Some(inv) if rcond >= RCOND_THRESHOLD => Ok((
                BlockMatrix {
                    rows: self.cols.clone(),
                    cols: self.rows.clone(),
                    d: self.d,
                    data: inv,
                },
                rcond,
            )),
            _ => Err(QfnError::AlgebraicLoop { rcond }),
        }
    }

    /// Max absolute scalar entry.
    pub fn norm_inf(&self) -> f64 {
        max_abs(&self.data)
    }

    /// Stacks blocks at the scalar level: `X ⊗ 1_d`, channels labeled `1..=m`.
    pub fn embed_scalar(x: &CMat, d: usize) -> Result<BlockMatrix> {
        Self::embed_scalar_labeled(x, d, Label::channels(x.nrows()), Label::channels(x.ncols()))
    }

    pub fn embed_scalar_labeled(
        x: &CMat,
        d: usize,
        rows: Vec<Label>,
        cols: Vec<Label>,
    ) -> Result<BlockMatrix> {
        ensure_finite(x)?;
        Self::from_scalar(rows, cols, d, kron_identity(x, d))
    }
}

/// `‖A - B‖∞` comparing scalar data only; labels are ignored.
pub fn max_abs_diff(a: &BlockMatrix, b: &BlockMatrix) -> Result<f64> {
    if a.data.shape() != b.data.shape() {
        return Err(mismatch(format!(
            "shapes {:?} and {:?} differ",
            a.data.shape(),
            b.data.shape()
        )));
    }
    Ok(max_abs(&(&a.data - &b.data)))
}

/// `‖A - B‖∞ ≤ tol · max(1, ‖A‖∞, ‖B‖∞)`.
pub fn approx_eq(a: &BlockMatrix, b: &BlockMatrix, tol: f64) -> bool {
    match max_abs_diff(a, b) {
        Ok(diff) => diff <= tol * scale_of(&[a, b]),
        Err(_) => false,
    }
}

/// `max(1, ‖·‖∞ of every input)`.
pub fn scale_of(mats: &[&BlockMatrix]) -> f64 {
    mats.iter().map(|m| m.norm_inf()).fold(1.0, f64::max)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn norm_1(m: &CMat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU inverse and `1 / (‖A‖₁ ‖A⁻¹‖₁)`; `(None, 0)` when a pivot vanishes.
pub fn inverse_with_rcond(m: &CMat) -> (Option<CMat>, f64) {
    let anorm = norm_1(m);
    if anorm == 0.0 {
        return (None, 0.0);
    }
    match m.clone().lu().try_inverse() {
        Some(inv) => {
            let inorm = norm_1(&inv);
            if !inorm.is_finite() || inorm == 0.0 {
                return (None, 0.0);
            }
            (Some(inv), 1.0 / (anorm * inorm))
        }
        None => (None, 0.0),
    }
}

/// `X ⊗ 1_d` with the block structure of `X` on the outside.
pub fn kron_identity(x: &CMat, d: usize) -> CMat {
    x.kronecker(&CMat::identity(d, d))
}

fn ensure_finite(m: &CMat) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(mismatch("non-finite entry"))
    }
}

fn ensure_distinct(labels: &[Label]) -> Result<()> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(mismatch(format!("duplicate label {l}")));
        }
    }
    Ok(())
}

pub(crate) fn join(labels: &[Label]) -> String {
    labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
}
