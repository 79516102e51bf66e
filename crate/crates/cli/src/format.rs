//! JSON network description.
//!
//! ```json
//! {
//!   "initial_dim": 1,
//!   "components": [
//!     { "name": "bs", "S": [[[0.7, 0], [0.7, 0]], [[-0.7, 0], [0.7, 0]]],
//!       "L": [[[0, 0]], [[0, 0]]], "H": [[[0, 0]]] }
//!   ],
//!   "connections": [ { "from": "bs.out[2]", "to": "bs.in[2]", "gain": [1, 0] } ],
//!   "options": { "tol": 1e-9, "seed": 42 }
//! }
//! ```
//!
//! Complex numbers are `[re, im]`, matrices are row-major. For `n` channels
//! on a `d`-dimensional initial space `S` is `nd x nd`, `L` is `nd x d` and
//! `H` is `d x d`. Ports are 1-based. Channel `k` of component `c` carries
//! the label `c.k` inside the library.
//!
//! Each connection is one internal edge. Edge `k` takes `from` as the k-th
//! internal output and `to` as the k-th internal input, so the gain matrix is
//! diagonal in connection order.

use std::path::Path;

use nalgebra::DVector;
use qfn_core::network::{channel_label, Component, Wiring};
use qfn_core::{CMat, Label, Slh, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub type RawComplex = [f64; 2];
pub type RawMatrix = Vec<Vec<RawComplex>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub initial_dim: usize,
    pub components: Vec<ComponentSpec>,
    #[serde(default)]
    pub connections: Vec<ConnectionSpec>,
    #[serde(default, skip_serializing_if = "Options::is_empty")]
    pub options: Options,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub name: String,
    #[serde(rename = "S")]
    pub s: RawMatrix,
    #[serde(rename = "L")]
    pub l: RawMatrix,
    #[serde(rename = "H")]
    pub h: RawMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSpec {
    pub from: String,
    pub to: String,
    #[serde(default = "unit_gain")]
    pub gain: RawComplex,
}

fn unit_gain() -> RawComplex {
    [1.0, 0.0]
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Options {
    fn is_empty(&self) -> bool {
        self.tol.is_none() && self.seed.is_none()
    }
}

/// A shape-checked component. Unitarity and Hermiticity are not enforced
/// here so that `validate` can report them.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedComponent {
    pub name: String,
    pub n: usize,
    pub s: CMat,
    pub l: CMat,
    pub h: CMat,
}

impl ParsedComponent {
    pub fn labels(&self) -> Vec<Label> {
        (1..=self.n).map(|k| channel_label(&self.name, k)).collect()
    }

    /// The triple on local channel labels `1..=n`.
    pub fn to_slh(&self, d: usize, tol: f64) -> qfn_core::Result<Slh> {
        use qfn_core::{BlockMatrix, Op};
        let labels = Label::channels(self.n);
        Slh::with_tol(
            BlockMatrix::from_scalar(labels.clone(), labels.clone(), d, self.s.clone())?,
            BlockMatrix::from_scalar(labels, vec![Label::ZeroPrime], d, self.l.clone())?,
            Op::new(self.h.clone())?,
            tol,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub raw: NetworkFile,
    pub d: usize,
    pub components: Vec<ParsedComponent>,
    /// `None` when the file has no connections.
    pub wiring: Option<Wiring>,
}

impl NetworkSpec {
    pub fn n(&self) -> usize {
        self.components.iter().map(|c| c.n).sum()
    }

    pub fn tol(&self) -> Option<f64> {
        self.raw.options.tol
    }

    /// Valid triples for every component, ready for concatenation.
    pub fn slh_components(&self, tol: f64) -> qfn_core::Result<Vec<Component>> {
        self.components
            .iter()
            .map(|c| Ok(Component::new(c.name.clone(), c.to_slh(self.d, tol)?)))
            .collect()
    }
}

pub fn parse(path: &Path) -> Result<NetworkSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<NetworkSpec, CliError> {
    let raw: NetworkFile = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    from_file(raw)
}

pub fn write(spec: &NetworkSpec) -> String {
    write_file(&spec.raw)
}

pub fn write_file(raw: &NetworkFile) -> String {
    serde_json::to_string_pretty(raw).expect("network files always serialise")
}

fn from_file(raw: NetworkFile) -> Result<NetworkSpec, CliError> {
    let d = raw.initial_dim;
    if d == 0 {
        return Err(CliError::Parse("initial_dim: must be positive".into()));
    }
    if raw.components.is_empty() {
        return Err(CliError::Parse("components: at least one component is required".into()));
    }
    let mut components = Vec::with_capacity(raw.components.len());
    for (i, c) in raw.components.iter().enumerate() {
        let ctx = format!("components[{i}] ({})", c.name);
        if c.name.is_empty() {
            return Err(CliError::Parse(format!("{ctx}.name: must not be empty")));
        }
        if raw.components[..i].iter().any(|o| o.name == c.name) {
            return Err(CliError::Parse(format!("{ctx}.name: duplicate component name")));
        }
        let s = matrix(&c.s, &format!("{ctx}.S"))?;
        let l = matrix(&c.l, &format!("{ctx}.L"))?;
        let h = matrix(&c.h, &format!("{ctx}.H"))?;
        if s.nrows() != s.ncols() || s.nrows() % d != 0 {
            return Err(CliError::Parse(format!(
                "{ctx}.S: must be square with size a multiple of d={d}, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let n = s.nrows() / d;
        if l.nrows() != n * d || l.ncols() != d {
            return Err(CliError::Parse(format!(
                "{ctx}.L: expected {}x{d}, got {}x{}",
                n * d,
                l.nrows(),
                l.ncols()
            )));
        }
        if h.nrows() != d || h.ncols() != d {
            return Err(CliError::Parse(format!(
                "{ctx}.H: expected {d}x{d}, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        components.push(ParsedComponent { name: c.name.clone(), n, s, l, h });
    }

    let wiring = if raw.connections.is_empty() {
        None
    } else {
        let mut outs = Vec::new();
        let mut ins = Vec::new();
        let mut gains = Vec::new();
        for (i, conn) in raw.connections.iter().enumerate() {
            let ctx = format!("connections[{i}]");
            let from = port(&conn.from, "out", &components, &format!("{ctx}.from"))?;
            let to = port(&conn.to, "in", &components, &format!("{ctx}.to"))?;
            if outs.contains(&from) {
                return Err(CliError::Parse(format!("{ctx}.from: port {} already connected", conn.from)));
            }
            if ins.contains(&to) {
                return Err(CliError::Parse(format!("{ctx}.to: port {} already connected", conn.to)));
            }
            let gain = complex(conn.gain, &format!("{ctx}.gain"))?;
            outs.push(from);
            ins.push(to);
            gains.push(gain);
        }
        let x = CMat::from_diagonal(&DVector::from_vec(gains));
        Some(Wiring::new(outs, ins, x).map_err(|e| CliError::Parse(format!("connections: {e}")))?)
    };

    Ok(NetworkSpec { raw, d, components, wiring })
}

/// `"name.out[k]"` / `"name.in[k]"` with `k` 1-based.
fn port(text: &str, side: &str, components: &[ParsedComponent], ctx: &str) -> Result<Label, CliError> {
    let bad = || CliError::Parse(format!("{ctx}: expected \"<component>.{side}[<k>]\", got \"{text}\""));
    let (name, rest) = text.rsplit_once('.').ok_or_else(bad)?;
    let idx = rest
        .strip_prefix(side)
        .and_then(|r| r.strip_prefix('['))
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(bad)?;
    let k: usize = idx.trim().parse().map_err(|_| bad())?;
    let comp = components
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| CliError::Parse(format!("{ctx}: unknown component \"{name}\"")))?;
    if k == 0 || k > comp.n {
        return Err(CliError::Parse(format!(
            "{ctx}: port index {k} out of range 1..={} for \"{name}\"",
            comp.n
        )));
    }
    Ok(channel_label(name, k))
}

fn complex(z: RawComplex, ctx: &str) -> Result<C64, CliError> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(C64::new(z[0], z[1]))
    } else {
        Err(CliError::Parse(format!("{ctx}: non-finite number")))
    }
}

pub fn matrix(raw: &RawMatrix, ctx: &str) -> Result<CMat, CliError> {
    let rows = raw.len();
    if rows == 0 {
        return Err(CliError::Parse(format!("{ctx}: empty matrix")));
    }
    let cols = raw[0].len();
    let mut m = CMat::zeros(rows, cols);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Parse(format!(
                "{ctx}: row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
        for (j, &z) in row.iter().enumerate() {
            m[(i, j)] = complex(z, &format!("{ctx}[{i}][{j}]"))?;
        }
    }
    Ok(m)
}

pub fn raw_matrix(m: &CMat) -> RawMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// A single-component file holding `g`, with no connections.
pub fn model_file(name: &str, g: &Slh, options: Options) -> NetworkFile {
    NetworkFile {
        initial_dim: g.d(),
        components: vec![ComponentSpec {
            name: name.to_string(),
            s: raw_matrix(g.s().scalar()),
            l: raw_matrix(g.l().scalar()),
            h: raw_matrix(g.h().matrix()),
        }],
        connections: Vec::new(),
        options,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "initial_dim": 1,
        "components": [{"name": "a", "S": [[[1, 0]]], "L": [[[0, 0]]], "H": [[[0, 0]]]}]
    }"#;

    #[test]
    fn minimal_file() {
        let spec = parse_str(MINIMAL).unwrap();
        assert_eq!(spec.n(), 1);
        assert!(spec.wiring.is_none());
    }

    #[test]
    fn self_loop_wiring() {
        let text = r#"{
            "initial_dim": 1,
            "components": [{"name": "bs",
                "S": [[[0.5, 0], [0.5, 0]], [[-0.5, 0], [0.5, 0]]],
                "L": [[[0, 0]], [[0, 0]]], "H": [[[0, 0]]]}],
            "connections": [{"from": "bs.out[2]", "to": "bs.in[2]"}]
        }"#;
        let spec = parse_str(text).unwrap();
        let w = spec.wiring.unwrap();
        assert_eq!(w.n_internal(), 1);
        assert_eq!(w.gain(), &CMat::identity(1, 1));
        assert_eq!(w.internal_out(), &[Label::channel("bs.2")]);
    }

    fn expect_parse_error(text: &str, needle: &str) {
        match parse_str(text) {
            Err(CliError::Parse(msg)) => assert!(msg.contains(needle), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        let two = r#""components": [{"name": "a", "S": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
                      "L": [[[0, 0]], [[0, 0]]], "H": [[[0, 0]]]}]"#;
        expect_parse_error(
            &format!(r#"{{"initial_dim": 1, {two}, "connections": [
                {{"from": "a.out[1]", "to": "a.in[2]"}}, {{"from": "a.out[1]", "to": "a.in[1]"}}]}}"#),
            "already connected",
        );
        expect_parse_error(
            &format!(r#"{{"initial_dim": 1, {two}, "connections": [{{"from": "a.out[3]", "to": "a.in[1]"}}]}}"#),
            "out of range",
        );
        expect_parse_error(
            &format!(r#"{{"initial_dim": 1, {two}, "connections": [{{"from": "b.out[1]", "to": "a.in[1]"}}]}}"#),
            "unknown component",
        );
        expect_parse_error(
            &format!(r#"{{"initial_dim": 1, {two}, "connections": [{{"from": "a.in[1]", "to": "a.in[2]"}}]}}"#),
            "expected",
        );
        expect_parse_error(&format!(r#"{{"initial_dim": 2, {two}}}"#), "L: expected");
        expect_parse_error(r#"{"initial_dim": 1, "components": []}"#, "at least one");
        expect_parse_error("{\n  \"initial_dim\": 1,\n  \"components\": [\n}", "line 4");
        expect_parse_error(
            r#"{"initial_dim": 1, "components": [{"name": "a", "S": [[[1, 0]], [[1, 0], [2, 0]]], "L": [], "H": []}]}"#,
            "row 1 has 2 entries",
        );
    }

    #[test]
    fn duplicate_names_rejected() {
        let c = r#"{"name": "a", "S": [[[1, 0]]], "L": [[[0, 0]]], "H": [[[0, 0]]]}"#;
        expect_parse_error(&format!(r#"{{"initial_dim": 1, "components": [{c}, {c}]}}"#), "duplicate");
    }

    #[test]
    fn non_unitary_s_parses() {
        let text = r#"{"initial_dim": 1, "components": [{"name": "a", "S": [[[2, 0]]], "L": [[[0, 0]]], "H": [[[0, 0]]]}]}"#;
        let spec = parse_str(text).unwrap();
        assert!(spec.components[0].to_slh(1, 1e-9).is_err());
    }
}
