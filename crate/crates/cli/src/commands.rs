use anyhow::{ensure, Result};
use serde::Serialize;
use serde_json::{json, Value};

use driftlab::entropy_shadows::{
    asymptotic_entropy, covering_number_check, entropy_continuity_sweep, sample_directions, shadow_measure_check,
    ShadowMeasureConfig,
};
use driftlab::experiments::{
    continuity_sweep, dihedral_drift, drift_equality_crosscheck, ns_degeneration, zero_drift_sweep, MeasureFamily,
    SweepReport,
};
use driftlab::horoboundary::{comparison_diagnostic, condition_seq_diagnostic};
use driftlab::walk::{boundary_sample, integral_drift, kingman_drift_oriented, sample_path_trial, DriftEstimate};
use rayon::prelude::*;

use crate::config::*;

/// What a subcommand produced: CSV tables keyed by file suffix, a JSON
/// result and the overall verdict.
pub struct Outcome {
    pub tables: Vec<(String, Vec<u8>)>,
    pub result: Value,
    pub pass: bool,
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

fn single(suffix: &str, bytes: Vec<u8>) -> Vec<(String, Vec<u8>)> {
    vec![(suffix.to_string(), bytes)]
}

#[derive(Serialize)]
struct EstimateRow<'a> {
    label: &'a str,
    mean: f64,
    stderr: f64,
    trials: usize,
    steps: usize,
    truncation_bound: f64,
}

impl<'a> EstimateRow<'a> {
    fn new(label: &'a str, e: &DriftEstimate) -> Self {
        EstimateRow {
            label,
            mean: e.mean,
            stderr: e.stderr,
            trials: e.trials,
            steps: e.steps,
            truncation_bound: e.truncation_bound,
        }
    }
}

fn sweep_outcome(rep: SweepReport) -> Result<Outcome> {
    Ok(Outcome { tables: single("", csv_bytes(&rep.rows)?), pass: rep.passed(), result: serde_json::to_value(&rep)? })
}

pub fn drift(c: &DriftConfig) -> Result<Outcome> {
    let model = c.model.build()?;
    let e = kingman_drift_oriented(&model, &c.measure, c.steps, c.trials, c.seed, &c.search, c.orientation)?;
    Ok(Outcome {
        tables: single("", csv_bytes(&[EstimateRow::new("kingman", &e)])?),
        result: serde_json::to_value(e)?,
        pass: true,
    })
}

pub fn busemann_drift(c: &BusemannConfig) -> Result<Outcome> {
    let model = c.model.build()?;
    let nu = boundary_sample(&c.measure.reflect(), c.boundary_steps, c.boundary_samples, c.seed)?;
    let e = integral_drift(&model, &c.measure, &nu, &c.search)?;
    Ok(Outcome {
        tables: single("", csv_bytes(&[EstimateRow::new("integral", &e)])?),
        result: json!({ "estimate": e, "boundary": nu.provenance }),
        pass: true,
    })
}

#[derive(Serialize)]
struct PairRow {
    pair: usize,
    max_gap: f64,
    growing: bool,
    upper_bound_holds: bool,
    condition_min: f64,
}

pub fn compare_horo(c: &CompareConfig) -> Result<Outcome> {
    ensure!(c.pairs > 0, "pairs must be positive");
    let model = c.model.build()?;
    let nu = boundary_sample(&c.measure.reflect(), c.boundary_steps, c.pairs, c.seed)?;
    let rows = (0..c.pairs)
        .into_par_iter()
        .map(|t| {
            let path = sample_path_trial(&c.measure, c.steps, c.seed, t as u64)?;
            let xi = &nu.points[t];
            let rep = comparison_diagnostic(&model, &path, xi, &c.search)?;
            let cond = condition_seq_diagnostic(&model, &path, xi, &c.search)?;
            Ok(PairRow {
                pair: t,
                max_gap: rep.max_gap,
                growing: rep.growing,
                upper_bound_holds: rep.upper_bound_holds,
                condition_min: cond,
            })
        })
        .collect::<driftlab::Result<Vec<_>>>()?;
    let upper = rows.iter().all(|r| r.upper_bound_holds);
    let bounded = rows.iter().filter(|r| !r.growing).count();
    let fraction = bounded as f64 / rows.len() as f64;
    let pass = upper && fraction >= 0.95;
    Ok(Outcome {
        tables: single("", csv_bytes(&rows)?),
        result: json!({
            "pairs": rows.len(),
            "upper_bound_all_steps": upper,
            "bounded_fraction": fraction,
            "max_gap": rows.iter().map(|r| r.max_gap).fold(f64::NEG_INFINITY, f64::max),
            "min_condition": rows.iter().map(|r| r.condition_min).fold(f64::INFINITY, f64::min),
        }),
        pass,
    })
}

pub fn continuity(c: &ContinuityConfig) -> Result<Outcome> {
    let model = c.model.build()?;
    let fam = MeasureFamily::convex(c.a.clone(), c.b.clone(), c.params.clone());
    sweep_outcome(continuity_sweep(&model, &fam, &c.walk, c.lipschitz)?)
}

pub fn ns_sweep(c: &NsConfig) -> Result<Outcome> {
    let model = c.model.build()?;
    sweep_outcome(ns_degeneration(&model, &c.g, &c.h, &c.grid, &c.walk, c.delta)?)
}

pub fn zero_drift(c: &ZeroDriftConfig) -> Result<Outcome> {
    let model = c.model.build()?;
    sweep_outcome(zero_drift_sweep(&model, &c.a, &c.g, &c.grid, &c.walk)?)
}

pub fn dihedral(c: &DihedralConfig) -> Result<Outcome> {
    sweep_outcome(dihedral_drift(&c.grid, c.steps, c.trials, c.seed)?)
}

pub fn drift_equality(c: &EqualityConfig) -> Result<Outcome> {
    let r = drift_equality_crosscheck(&c.measure, &c.walk)?;
    let rows = [EstimateRow::new("flat", &r.flat), EstimateRow::new("fricke", &r.fricke)];
    Ok(Outcome { tables: single("", csv_bytes(&rows)?), pass: r.pass, result: serde_json::to_value(&r)? })
}

#[derive(Serialize)]
struct EntropyRow {
    n: usize,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "H/n")]
    h_over_n: f64,
    diff: Option<f64>,
}

pub fn entropy(c: &EntropyConfig) -> Result<Outcome> {
    let e = asymptotic_entropy(&c.measure, c.n_max)?;
    let rows: Vec<EntropyRow> = e
        .sequence
        .iter()
        .enumerate()
        .map(|(i, &h)| EntropyRow {
            n: i + 1,
            h,
            h_over_n: h / (i + 1) as f64,
            diff: (i > 0).then(|| h - e.sequence[i - 1]),
        })
        .collect();
    Ok(Outcome { tables: single("", csv_bytes(&rows)?), result: serde_json::to_value(&e)?, pass: true })
}

pub fn entropy_sweep(c: &EntropySweepConfig) -> Result<Outcome> {
    let fam = MeasureFamily::convex(c.a.clone(), c.b.clone(), c.params.clone());
    sweep_outcome(entropy_continuity_sweep(&fam, c.n_max, c.lipschitz)?)
}

#[derive(Serialize)]
struct CoveringRow {
    k: u32,
    sphere_size: usize,
    max_count: usize,
}

pub fn shadows(c: &ShadowsConfig) -> Result<Outcome> {
    let dirs = sample_directions(c.directions, c.seed);
    let cov = covering_number_check(c.k_max, c.radius, &dirs)?;
    let sm = shadow_measure_check(
        &c.measure,
        &ShadowMeasureConfig {
            radii: c.radii.clone(),
            centres: c.centres,
            walk_length: c.walk_length,
            boundary_samples: c.boundary_samples,
            boundary_steps: c.boundary_steps,
            epsilon: c.epsilon,
            seed: c.seed,
        },
    )?;
    let cov_rows: Vec<CoveringRow> =
        cov.levels.iter().map(|l| CoveringRow { k: l.k, sphere_size: l.sphere_size, max_count: l.max_count }).collect();
    Ok(Outcome {
        tables: vec![("".into(), csv_bytes(&sm.levels)?), ("_covering".into(), csv_bytes(&cov_rows)?)],
        pass: cov.pass && sm.pass,
        result: json!({ "covering": cov, "shadow_measure": sm }),
    })
}
