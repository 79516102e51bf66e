use std::path::Path;

use qfn_core::belavkin::{from_slh, is_star_unitary, validate_slh, BelavkinMatrix};
use qfn_core::dynamics::{evolve, lindblad_generator};
use qfn_core::network::{concatenate, domain_check, feedback_reduce_with_tol, Wiring};
use qfn_core::opmatrix::DEFAULT_TOL;
use qfn_core::verify::{run_check, CheckConfig, CheckSource};
use qfn_core::{BlockMatrix, Label, Op, QfnError, Slh};
use serde_json::{json, Map, Value};

use crate::format::{self, NetworkSpec, RawMatrix};
use crate::{
    CheckArgs, CliError, Outcome, ReduceArgs, SimulateArgs, ValidateArgs, EXIT_INVALID, EXIT_LOOP,
    EXIT_PASS,
};

type Result<T> = std::result::Result<T, CliError>;

fn pass_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_INVALID
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn resolve_tol(flag: Option<f64>, spec: Option<&NetworkSpec>) -> Result<f64> {
    let tol = flag.or_else(|| spec.and_then(NetworkSpec::tol)).unwrap_or(DEFAULT_TOL);
    if !tol.is_finite() || tol <= 0.0 {
        return Err(CliError::Parse(format!("tol: must be a positive number, got {tol}")));
    }
    Ok(tol)
}

fn open_loop(spec: &NetworkSpec, tol: f64) -> Result<BelavkinMatrix> {
    Ok(from_slh(&concatenate(&spec.slh_components(tol)?)?))
}

fn require_wiring(spec: &NetworkSpec) -> Result<&Wiring> {
    spec.wiring
        .as_ref()
        .ok_or_else(|| QfnError::InvalidPartition("the network has no connections".into()).into())
}

pub fn validate(args: &ValidateArgs) -> Result<Outcome> {
    let spec = format::parse(&args.file)?;
    let tol = resolve_tol(args.tol, Some(&spec))?;
    let mut components = Vec::new();
    let mut all_pass = true;
    for c in &spec.components {
        let labels = Label::channels(c.n);
        let s = BlockMatrix::from_scalar(labels.clone(), labels.clone(), spec.d, c.s.clone())?;
        let l = BlockMatrix::from_scalar(labels, vec![Label::ZeroPrime], spec.d, c.l.clone())?;
        let diag = validate_slh(&s, &l, &Op::new(c.h.clone())?, tol)?;
        all_pass &= diag.pass;
        components.push(json!({
            "name": c.name,
            "channels": c.n,
            "defects": {
                "unitary_left": diag.unitary_left,
                "unitary_right": diag.unitary_right,
                "hermitian": diag.hermitian,
            },
            "pass": diag.pass,
        }));
    }

    let mut defects = Map::new();
    let mut rcond = Value::Null;
    let mut code = pass_code(all_pass);
    if all_pass {
        let v = open_loop(&spec, tol)?;
        let su = is_star_unitary(&v, tol);
        defects.insert("open_loop_star_left".into(), json!(su.left_defect));
        defects.insert("open_loop_star_right".into(), json!(su.right_defect));
        all_pass &= su.pass;
        code = pass_code(all_pass);
        if let Some(w) = &spec.wiring {
            let dom = domain_check(&v, w)?;
            rcond = json!(dom.rcond);
            if all_pass && !dom.in_domain {
                all_pass = false;
                code = EXIT_LOOP;
            }
        }
    }

    let report = json!({
        "command": "validate",
        "inputs": { "file": path_str(&args.file), "tol": tol },
        "components": components,
        "defects": defects,
        "rcond": rcond,
        "pass": all_pass,
    });
    Ok(Outcome { report, code })
}

pub fn reduce(args: &ReduceArgs) -> Result<Outcome> {
    let spec = format::parse(&args.file)?;
    let tol = resolve_tol(args.tol, Some(&spec))?;
    let wiring = require_wiring(&spec)?;
    let v = open_loop(&spec, tol)?;
    let open = is_star_unitary(&v, tol);
    let model = feedback_reduce_with_tol(&v, wiring, tol)?;
    let diag = &model.diagnostics;

    let involution_ok = diag.involution_defect.is_none_or(|d| d <= tol);
    let pass = diag.star_unitarity.pass && involution_ok && model.slh_red.is_some();
    let pairing: Vec<Value> = diag
        .channel_pairing
        .iter()
        .enumerate()
        .map(|(k, (out, inp))| json!({ "port": k + 1, "out": out.to_string(), "in": inp.to_string() }))
        .collect();

    let mut report = json!({
        "command": "reduce",
        "inputs": {
            "file": path_str(&args.file),
            "output": args.output.as_deref().map(path_str),
            "tol": tol,
        },
        "defects": {
            "open_loop_star_left": open.left_defect,
            "open_loop_star_right": open.right_defect,
            "reduced_star_left": diag.star_unitarity.left_defect,
            "reduced_star_right": diag.star_unitarity.right_defect,
            "involution": diag.involution_defect,
        },
        "gain_unitary": diag.gain_unitary,
        "channel_pairing": pairing,
        "rcond": diag.rcond,
        "pass": pass,
    });

    if let Some(g) = &model.slh_red {
        let file = format::model_file("reduced", g, spec.raw.options.clone());
        match &args.output {
            Some(path) => std::fs::write(path, format::write_file(&file) + "\n")
                .map_err(|e| CliError::Io { path: path_str(path), message: e.to_string() })?,
            None => {
                report["model"] = serde_json::to_value(&file).expect("network files always serialise");
            }
        }
    }
    Ok(Outcome { report, code: pass_code(pass) })
}

pub fn check(args: &CheckArgs) -> Result<Outcome> {
    let (source, spec) = match &args.file {
        Some(path) => {
            let spec = format::parse(path)?;
            (path_str(path), Some(spec))
        }
        None => ("builtin".to_string(), None),
    };
    let tol = resolve_tol(args.tol, spec.as_ref())?;
    let seed = args.seed.or_else(|| spec.as_ref().and_then(|s| s.raw.options.seed)).unwrap_or(0);

    let mut rcond = Value::Null;
    let check_source = match &spec {
        None => CheckSource::Builtin,
        Some(spec) => {
            let wiring = require_wiring(spec)?.clone();
            let v = open_loop(spec, tol)?;
            rcond = json!(domain_check(&v, &wiring)?.rcond);
            CheckSource::Network { v, wiring }
        }
    };
    let config = CheckConfig { source: check_source, seed, trials: args.trials, tol };
    let summary = run_check(&config)?;

    let report = json!({
        "command": "check",
        "inputs": { "source": source, "seed": seed, "trials": args.trials, "tol": tol },
        "defects": summary.max_defects,
        "trials": summary.trials,
        "skipped": summary.skipped,
        "rcond": rcond,
        "pass": summary.pass,
    });
    Ok(Outcome { report, code: pass_code(summary.pass) })
}

/// The model a file describes: its reduction when it has connections,
/// otherwise the plain concatenation of its components.
pub fn closed_model(spec: &NetworkSpec, tol: f64) -> Result<Slh> {
    let open = concatenate(&spec.slh_components(tol)?)?;
    match &spec.wiring {
        None => Ok(open),
        Some(w) => {
            let model = feedback_reduce_with_tol(&from_slh(&open), w, tol)?;
            let su = model.diagnostics.star_unitarity;
            model
                .slh_red
                .ok_or_else(|| QfnError::NotStarUnitary { left: su.left_defect, right: su.right_defect }.into())
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome> {
    let spec = format::parse(&args.model)?;
    let tol = resolve_tol(args.tol, Some(&spec))?;
    let text = std::fs::read_to_string(&args.rho0)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.rho0.display())))?;
    let raw: RawMatrix = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.rho0.display())))?;
    let rho0 = format::matrix(&raw, "rho0")?;

    let g = closed_model(&spec, tol)?;
    let gen = lindblad_generator(&g);
    let out = evolve(&rho0, &gen, args.t, args.dt)?;
    let pass = out.max_trace_drift <= tol && out.min_eigenvalue >= -tol;

    let report = json!({
        "command": "simulate",
        "inputs": {
            "model": path_str(&args.model),
            "rho0": path_str(&args.rho0),
            "t": args.t,
            "dt": args.dt,
            "tol": tol,
        },
        "defects": {
            "max_trace_drift": out.max_trace_drift,
            "negative_eigenvalue": (-out.min_eigenvalue).max(0.0),
        },
        "min_eigenvalue": out.min_eigenvalue,
        "steps": out.steps,
        "rho": format::raw_matrix(&out.rho),
        "rcond": Value::Null,
        "pass": pass,
    });
    Ok(Outcome { report, code: pass_code(pass) })
}
