//! The ten acceptance criteria. Each test prints one PASS/FAIL line to
//! stderr (bypassing the test harness capture) and then asserts.

mod common;

use std::io::Write;
use std::time::Instant;

use driftlab::entropy_shadows::{
    asymptotic_entropy, covering_number_check, entropy_continuity_sweep, entropy_sequence, sample_directions,
    shadow_measure_check, ShadowMeasureConfig,
};
use driftlab::experiments::{dihedral_drift, drift_equality_crosscheck, ns_degeneration, MeasureFamily, WalkConfig};
use driftlab::horoboundary::comparison_diagnostic;
use driftlab::models::{distance, hyperbolic_oracle, FlatTorusPoint, Model, Point, SearchConfig};
use driftlab::walk::{boundary_sample, integral_drift, kingman_drift, sample_path_trial, Measure};
use driftlab::GroupElement;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_261_016;

fn report(n: u32, name: &str, pass: bool, detail: String, start: Instant) {
    let line = format!(
        "AC{n:<2} {} {name}: {detail} [{:.1}s]\n",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn g(a: i64, b: i64, c: i64, d: i64) -> GroupElement {
    GroupElement::new(a, b, c, d).unwrap()
}

/// Three fixed non-elementary measures.
fn measures() -> Vec<(&'static str, Measure)> {
    let t = g(1, 1, 0, 1);
    let u = g(1, 0, 1, 1);
    vec![
        ("uniform{T,U}", Measure::uniform(&[t, u]).unwrap()),
        ("uniform{T,T^-1,U,U^-1}", Measure::uniform(&[t, t.inverse(), u, u.inverse()]).unwrap()),
        ("0.3 S + 0.4 A + 0.3 T", Measure::new(vec![(g(0, -1, 1, 0), 0.3), (g(2, 1, 1, 1), 0.4), (t, 0.3)]).unwrap()),
    ]
}

#[test]
fn ac01_kerckhoff_oracle() {
    let start = Instant::now();
    let cfg = SearchConfig::new(512, 4, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut pt = || FlatTorusPoint::at(Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0))).unwrap();
        let (x, y) = (pt(), pt());
        let d = distance(&Point::Flat(x), &Point::Flat(y), &cfg).unwrap().log_sup;
        worst = worst.max((d - hyperbolic_oracle(&x, &y)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-3 && secs <= 60.0;
    report(1, "Kerckhoff oracle", pass, format!("max |d_T − d_H/2| = {worst:.3e} over 100 pairs"), start);
    assert!(pass);
}

#[test]
fn ac02_two_estimator_identity() {
    let start = Instant::now();
    let cfg = SearchConfig::default();
    let mut details = Vec::new();
    let mut pass = true;
    for model in [Model::flat(), Model::fricke()] {
        for (name, mu) in measures() {
            let k = kingman_drift(&model, &mu, 200, 500, SEED, &cfg).unwrap();
            let nu = boundary_sample(&mu.reflect(), 64, 300, SEED).unwrap();
            let i = integral_drift(&model, &mu, &nu, &cfg).unwrap();
            let z = (k.mean - i.mean).abs() / k.stderr.hypot(i.stderr);
            pass &= z <= 3.0;
            details.push(format!("{:?} {name}: {:.4} vs {:.4} ({z:.2}σ)", model.kind(), k.mean, i.mean));
        }
    }
    pass &= start.elapsed().as_secs_f64() <= 600.0;
    report(2, "kingman = integral drift", pass, details.join("; "), start);
    assert!(pass);
}

#[test]
fn ac03_dirac_translation_length() {
    let start = Instant::now();
    let cfg = SearchConfig::default();
    let mut worst = 0.0f64;
    for h in [g(2, 1, 1, 1), g(1, 1, 1, 2), g(5, 2, 2, 1), g(2, 3, 3, 5), g(13, 5, 5, 2)] {
        let e = kingman_drift(&Model::flat(), &Measure::dirac(h), 64, 1, SEED, &cfg).unwrap();
        worst = worst.max((e.mean - h.spectral_radius().ln()).abs());
    }
    let pass = worst <= 1e-6;
    report(3, "Dirac drift = log λ", pass, format!("max error {worst:.3e} over 5 elements"), start);
    assert!(pass);
}

#[test]
fn ac04_dihedral() {
    let start = Instant::now();
    let grid: Vec<u32> = (2..=64).collect();
    let rep = dihedral_drift(&grid, 1000, 2000, SEED).unwrap();
    let finite = &rep.rows[..rep.rows.len() - 1];
    let ok = finite.iter().filter(|r| r.verdict).count();
    let worst = finite.iter().map(|r| r.mean.abs() / r.stderr).fold(0.0, f64::max);
    let last = rep.rows.last().unwrap();
    let pass = rep.passed();
    report(
        4,
        "dihedral counterexample",
        pass,
        format!("{ok}/{} rows within 3σ (worst {worst:.2}σ), δ_(1,0) drift = {}", finite.len(), last.mean),
        start,
    );
    assert!(pass);
}

#[test]
fn ac05_ns_degeneration() {
    let start = Instant::now();
    let mut walk = WalkConfig::new(200, 500, SEED);
    walk.boundary_samples = 300;
    let rep = ns_degeneration(&Model::flat(), &g(2, 1, 1, 1), &g(1, 2, 0, 1), &[2, 4, 8, 16, 32, 64], &walk, 0.1).unwrap();
    let pass = ["drift increasing", "limit drift", "concentration"]
        .iter()
        .all(|n| rep.verdicts.iter().any(|v| v.name == *n && v.pass));
    let detail: Vec<String> = rep.verdicts.iter().map(|v| format!("{} {} ({})", v.name, v.pass, v.detail)).collect();
    report(5, "NS degeneration", pass, detail.join("; "), start);
    assert!(pass);
}

#[test]
fn ac06_drift_equality() {
    let start = Instant::now();
    let walk = WalkConfig::new(200, 500, SEED);
    let mut pass = true;
    let mut details = Vec::new();
    for (name, mu) in measures() {
        let r = drift_equality_crosscheck(&mu, &walk).unwrap();
        pass &= r.pass;
        details.push(format!(
            "{name}: T {:.4} Th {:.4} ({:.2}σ)",
            r.flat.mean,
            r.fricke.mean,
            r.difference.abs() / r.combined_stderr
        ));
    }
    report(6, "Teichmüller = Thurston drift", pass, details.join("; "), start);
    assert!(pass);
}

fn binary_entropy(t: f64) -> f64 {
    -t * t.ln() - (1.0 - t) * (1.0 - t).ln()
}

#[test]
fn ac07_entropy() {
    let start = Instant::now();
    let (a, b) = (g(1, 2, 0, 1), g(1, 0, 2, 1));
    let params: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let mut worst = 0.0f64;
    for &t in &params {
        let e = asymptotic_entropy(&Measure::new(vec![(a, t), (b, 1.0 - t)]).unwrap(), 10).unwrap();
        let hb = binary_entropy(t);
        worst = worst.max((e.difference - hb).abs()).max((e.plain - hb).abs());
    }
    let fam = MeasureFamily::convex(Measure::dirac(a), Measure::dirac(b), params);
    let sweep = entropy_continuity_sweep(&fam, 10, None).unwrap();
    let mut sub_ok = 0;
    let mut sub_total = 0;
    let mut subject: Vec<Measure> = measures().into_iter().map(|m| m.1).collect();
    subject.push(Measure::new(vec![(a, 0.3), (b, 0.7)]).unwrap());
    for mu in &subject {
        let h = entropy_sequence(mu, 8).unwrap();
        for m in 1..=8 {
            for n in 1..=8 - m {
                sub_total += 1;
                if h[m + n - 1] <= h[m - 1] + h[n - 1] + 1e-12 {
                    sub_ok += 1;
                }
            }
        }
    }
    let pass = worst <= 1e-9 && sweep.passed() && sub_ok == sub_total;
    report(
        7,
        "entropy exactness",
        pass,
        format!("max |h − H_b| = {worst:.2e}, sweep {}, subadditivity {sub_ok}/{sub_total}", sweep.passed()),
        start,
    );
    assert!(pass);
}

#[test]
fn ac08_comparison_lemma() {
    let start = Instant::now();
    let cfg = SearchConfig::default();
    let model = Model::flat();
    let (_, mu) = measures().remove(1);
    let nu = boundary_sample(&mu.reflect(), 64, 100, SEED).unwrap();
    let reports: Vec<_> = (0..100u64)
        .map(|t| {
            let path = sample_path_trial(&mu, 200, SEED, t).unwrap();
            comparison_diagnostic(&model, &path, &nu.points[t as usize], &cfg).unwrap()
        })
        .collect();
    let upper = reports.iter().all(|r| r.upper_bound_holds);
    let bounded = reports.iter().filter(|r| !r.growing).count();
    let pass = upper && bounded >= 95;
    report(
        8,
        "comparison lemma",
        pass,
        format!("upper bound in all steps: {upper}; bounded gap in {bounded}/100 pairs"),
        start,
    );
    assert!(pass);
}

#[test]
fn ac09_shadows() {
    let start = Instant::now();
    let dirs = sample_directions(2000, SEED);
    let cov = covering_number_check(4, 0.5, &dirs).unwrap();
    let (_, mu) = measures().remove(1);
    let cfg = ShadowMeasureConfig {
        radii: vec![0.25, 0.5, 1.0, 2.0],
        centres: 50,
        walk_length: 10,
        boundary_samples: 300,
        boundary_steps: 64,
        epsilon: 0.1,
        seed: SEED,
    };
    let sm = shadow_measure_check(&mu, &cfg).unwrap();
    let maxes: Vec<usize> = cov.levels.iter().map(|l| l.max_count).collect();
    let fr: Vec<String> = sm.levels.iter().map(|l| format!("{:.3}", l.min_fraction)).collect();
    let pass = cov.pass && sm.pass;
    report(
        9,
        "shadow lemmas",
        pass,
        format!("covering maxima by k {maxes:?}; min shadow fractions {}", fr.join(", ")),
        start,
    );
    assert!(pass);
}

#[test]
fn ac10_property_suites() {
    let start = Instant::now();
    let results = common::run_all_suites();
    let failed: Vec<String> =
        results.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    let pass = failed.is_empty();
    let detail = if pass {
        format!("{} suites × {} cases green", results.len(), common::CASES)
    } else {
        failed.join("; ")
    };
    report(10, "property suites", pass, detail, start);
    assert!(pass);
}
