//! Seeded random-instance verification of the algebraic identities.
//!
//! Every trial owns an independent generator (see [`crate::sample`]), so the
//! trials are embarrassingly parallel. With the `parallel` feature they run
//! on the rayon pool; the summary is identical either way.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::belavkin::{
    belavkin_embed, from_slh, is_star_unitary, ito_correspondence_defects, polynomial_ito_matrix,
    to_slh, BelavkinMatrix,
};
use crate::dynamics::generator_equivalence;
use crate::error::Result;
use crate::network::{
    cascade_via_feedback, domain_check, involution_identity_defect, mobius, series, series_slh,
    siegel_defects, Wiring,
};
use crate::opmatrix::{max_abs_diff, CMat, Op, C64, DEFAULT_TOL};
use crate::sample::{
    gaussian_matrix, random_contraction, random_ito, random_slh, random_unitary, trial_rng,
};

/// Gains are redrawn until the loop operator's reciprocal condition reaches
/// this floor, keeping trials away from the edge of the Möbius domain.
pub const CONDITION_FLOOR: f64 = 1e-6;
const MAX_DRAWS: usize = 32;

pub const ITO_IDENTIFICATION: &str = "ito_identification";
pub const POLYNOMIAL_SQUARE: &str = "polynomial_square";
pub const OPEN_LOOP_STAR_UNITARITY: &str = "open_loop_star_unitarity";
pub const SLH_ROUNDTRIP: &str = "slh_roundtrip";
pub const REDUCED_STAR_UNITARITY: &str = "reduced_star_unitarity";
pub const INVOLUTION_UNITARY_GAIN: &str = "involution_unitary_gain";
pub const INVOLUTION_GENERAL_GAIN: &str = "involution_general_gain";
pub const SIEGEL_LEFT: &str = "siegel_left";
pub const SIEGEL_RIGHT: &str = "siegel_right";
pub const SIEGEL_UNITARY_DIAGONAL: &str = "siegel_unitary_diagonal";
pub const SERIES_AGREEMENT: &str = "series_agreement";
pub const SERIES_ASSOCIATIVITY: &str = "series_associativity";
pub const CASCADE_VS_SERIES: &str = "cascade_vs_series";
pub const CASCADE_GENERATOR: &str = "cascade_generator";

/// Where the trial networks come from.
#[derive(Clone, Debug)]
pub enum CheckSource {
    /// Fresh random network per trial: `2 <= n <= 5`, `1 <= d <= 3`, random
    /// symmetric partition.
    Builtin,
    /// A fixed open-loop matrix and wiring; only the gains are random.
    Network { v: BelavkinMatrix, wiring: Wiring },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential without the `parallel` feature.
    Parallel,
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub source: CheckSource,
    pub seed: u64,
    pub trials: u64,
    pub tol: f64,
}

impl CheckConfig {
    pub fn builtin(seed: u64, trials: u64) -> Self {
        CheckConfig { source: CheckSource::Builtin, seed, trials, tol: DEFAULT_TOL }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckSummary {
    pub trials: u64,
    /// Trials in which no gain met [`CONDITION_FLOOR`]; their reduction
    /// checks are absent.
    pub skipped: u64,
    pub max_defects: BTreeMap<String, f64>,
    pub tol: f64,
    pub pass: bool,
}

type TrialDefects = Vec<(&'static str, f64)>;

pub fn run_check(config: &CheckConfig) -> Result<CheckSummary> {
    run_check_with(config, Execution::Parallel)
}

pub fn run_check_with(config: &CheckConfig, mode: Execution) -> Result<CheckSummary> {
    let results = map_trials(config.trials, mode, |k| run_trial(config, k));
    let mut max_defects: BTreeMap<String, f64> = BTreeMap::new();
    let mut skipped = 0;
    for r in results {
        let (defects, skip) = r?;
        skipped += u64::from(skip);
        for (name, value) in defects {
            let slot = max_defects.entry(name.to_string()).or_insert(0.0);
            // NaN must never compare as passing.
            if value.is_nan() || value > *slot {
                *slot = value;
            }
        }
    }
    let pass = max_defects.values().all(|&v| v <= config.tol);
    Ok(CheckSummary { trials: config.trials, skipped, max_defects, tol: config.tol, pass })
}

fn map_trials<T, F>(trials: u64, mode: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..trials).into_par_iter().map(f).collect(),
        _ => (0..trials).map(f).collect(),
    }
}

fn run_trial(config: &CheckConfig, k: u64) -> Result<(TrialDefects, bool)> {
    let mut rng = trial_rng(config.seed, k);
    let (v, wiring) = match &config.source {
        CheckSource::Builtin => {
            let n = rng.random_range(2..=5);
            let d = rng.random_range(1..=3);
            let g = random_slh(&mut rng, n, d);
            let v = from_slh(&g);
            let ni = rng.random_range(1..n);
            let mut chans = v.out_channels().to_vec();
            chans.shuffle(&mut rng);
            chans.truncate(ni);
            let w = Wiring::symmetric(chans, CMat::identity(ni, ni))?;
            (v, w)
        }
        CheckSource::Network { v, wiring } => (v.clone(), wiring.clone()),
    };
    let (n, d) = (v.n(), v.d());
    let mut out: TrialDefects = Vec::new();

    let x = random_ito(&mut rng, n, d);
    let y = random_ito(&mut rng, n, d);
    let (d1, d2, d3) = ito_correspondence_defects(&x, &y)?;
    out.push((ITO_IDENTIFICATION, d1.max(d2).max(d3)));

    let x0 = Op::new(gaussian_matrix(&mut rng, d, d))?;
    let bx = belavkin_embed(&x);
    let poly = polynomial_ito_matrix(&x0, &bx, &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)])?;
    let shift = CMat::identity(n + 2, n + 2).kronecker(x0.matrix());
    let b = bx.matrix().scalar();
    let direct = &shift * b + b * &shift + b * b;
    out.push((POLYNOMIAL_SQUARE, crate::opmatrix::max_abs(&(poly.matrix().scalar() - direct))));

    let su = is_star_unitary(&v, DEFAULT_TOL);
    out.push((OPEN_LOOP_STAR_UNITARITY, su.left_defect.max(su.right_defect)));
    let back = to_slh(&v, DEFAULT_TOL)?;
    out.push((SLH_ROUNDTRIP, max_abs_diff(from_slh(&back).matrix(), v.matrix())?));

    let ni = wiring.n_internal();
    let mut skipped = false;
    let unitary = draw_in_domain(&v, &wiring, || random_unitary(&mut rng, ni))?;
    let general = draw_in_domain(&v, &wiring, || random_contraction(&mut rng, ni, 0.3, 1.5))?;
    let cx = draw_in_domain(&v, &wiring, || random_contraction(&mut rng, ni, 0.2, 0.9))?;
    let cy = random_contraction(&mut rng, ni, 0.2, 0.9);
    match (unitary, general, cx) {
        (Some(wu), Some(wg), Some(wc)) => {
            let f = mobius(&v, &wu)?;
            let su = is_star_unitary(&f, DEFAULT_TOL);
            out.push((REDUCED_STAR_UNITARITY, su.left_defect.max(su.right_defect)));
            out.push((INVOLUTION_UNITARY_GAIN, involution_identity_defect(&v, &wu)?));
            if domain_check(&v.star(), &wg.adjoint())?.rcond >= CONDITION_FLOOR {
                out.push((INVOLUTION_GENERAL_GAIN, involution_identity_defect(&v, &wg)?));
            }
            let (left, right) = siegel_defects(&v, &wc, &cy)?;
            out.push((SIEGEL_LEFT, left));
            out.push((SIEGEL_RIGHT, right));
            let (diag, _) = siegel_defects(&v, &wu, wu.gain())?;
            out.push((SIEGEL_UNITARY_DIAGONAL, diag.max(su.right_defect)));
        }
        _ => skipped = true,
    }

    let g1 = random_slh(&mut rng, n, d);
    let g2 = random_slh(&mut rng, n, d);
    let g3 = random_slh(&mut rng, n, d);
    let (v1, v2, v3) = (from_slh(&g1), from_slh(&g2), from_slh(&g3));
    let via_matrix = series(&v2, &v1)?;
    let via_slh = from_slh(&series_slh(&g2, &g1)?);
    out.push((SERIES_AGREEMENT, max_abs_diff(via_matrix.matrix(), via_slh.matrix())?));
    let left = series(&series(&v3, &v2)?, &v1)?;
    let right = series(&v3, &series(&v2, &v1)?)?;
    out.push((SERIES_ASSOCIATIVITY, max_abs_diff(left.matrix(), right.matrix())?));

    let m = rng.random_range(1..=2);
    let c1 = random_slh(&mut rng, m, d);
    let c2 = random_slh(&mut rng, m, d);
    let cascade = cascade_via_feedback(&c1, &c2)?;
    let direct = series_slh(&c2, &c1)?;
    out.push((CASCADE_VS_SERIES, cascade.max_abs_diff(&direct)?));
    out.push((CASCADE_GENERATOR, generator_equivalence(&cascade, &direct)?));

    Ok((out, skipped))
}

fn draw_in_domain(
    v: &BelavkinMatrix,
    wiring: &Wiring,
    mut draw: impl FnMut() -> CMat,
) -> Result<Option<Wiring>> {
    for _ in 0..MAX_DRAWS {
        let w = wiring.with_gain(draw())?;
        if domain_check(v, &w)?.rcond >= CONDITION_FLOOR {
            return Ok(Some(w));
        }
    }
    Ok(None)
}
