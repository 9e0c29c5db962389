//! Strategies and invariant checks shared by the property suite and the
//! acceptance run.

#![allow(dead_code)]

use driftlab::horoboundary::{busemann_cocycle, horofunction, horofunction_equivariance_check};
use driftlab::models::{distance, sweep_max, FlatTorusPoint, FrickePoint, FrickeTraces, Model, Point, SearchConfig};
use driftlab::walk::{kingman_drift, Measure};
use driftlab::{GroupElement, ProjectiveDirection, Slope};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 200;
pub const TOL: f64 = 1e-9;

pub fn letters() -> [GroupElement; 5] {
    [
        GroupElement::new(1, 1, 0, 1).unwrap(),
        GroupElement::new(1, -1, 0, 1).unwrap(),
        GroupElement::new(1, 0, 1, 1).unwrap(),
        GroupElement::new(1, 0, -1, 1).unwrap(),
        GroupElement::new(0, -1, 1, 0).unwrap(),
    ]
}

/// Words of length ≤ 5 in T^±1, U^±1 and S.
pub fn element() -> impl Strategy<Value = GroupElement> {
    prop::collection::vec(0usize..5, 0..6).prop_map(|w| {
        let l = letters();
        w.iter().fold(GroupElement::IDENTITY, |acc, &i| acc.mul(&l[i]).unwrap())
    })
}

pub fn direction() -> impl Strategy<Value = ProjectiveDirection> {
    (0.001f64..std::f64::consts::PI - 0.001).prop_map(ProjectiveDirection::from_angle)
}

pub fn model() -> impl Strategy<Value = Model> {
    prop_oneof![Just(Model::flat()), Just(Model::fricke())]
}

fn flat_point() -> impl Strategy<Value = Point> {
    (-1.0f64..1.0, 0.3f64..3.0, element()).prop_map(|(x, y, g)| {
        Point::Flat(FlatTorusPoint::at(Complex64::new(x, y)).unwrap()).act(&g)
    })
}

fn fricke_point() -> impl Strategy<Value = Point> {
    (2.2f64..5.0, 2.2f64..5.0, any::<bool>(), element()).prop_filter_map("real Fricke triple", |(x, y, l, g)| {
        FrickeTraces::from_xy(x, y, l).ok().map(|t| Point::Fricke(FrickePoint::at(t)).act(&g))
    })
}

/// A model together with two points of the same kind.
pub fn model_and_points() -> impl Strategy<Value = (Model, Point, Point)> {
    prop_oneof![
        (flat_point(), flat_point()).prop_map(|(x, y)| (Model::flat(), x, y)),
        (fricke_point(), fricke_point()).prop_map(|(x, y)| (Model::fricke(), x, y)),
    ]
}

fn check(cond: bool, msg: String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg))
    }
}

pub fn cocycle_identity(m: &Model, a: &GroupElement, b: &GroupElement, xi: &ProjectiveDirection) -> Result<(), TestCaseError> {
    let cfg = SearchConfig::default();
    let lhs = busemann_cocycle(m, &a.mul(b).unwrap(), xi, &cfg).unwrap();
    let rhs = busemann_cocycle(m, a, &xi.act(b), &cfg).unwrap() + busemann_cocycle(m, b, xi, &cfg).unwrap();
    check((lhs - rhs).abs() <= TOL, format!("cocycle {lhs} vs {rhs} for {a}, {b}"))
}

pub fn equivariance(m: &Model, g: &GroupElement, xi: &ProjectiveDirection, x: &GroupElement) -> Result<(), TestCaseError> {
    let cfg = SearchConfig::default();
    let e = horofunction_equivariance_check(m, g, xi, &m.orbit_point_group(x), &cfg).unwrap();
    check(e <= TOL, format!("equivariance defect {e}"))
}

pub fn one_lipschitz(m: &Model, x: &Point, y: &Point, xi: &ProjectiveDirection) -> Result<(), TestCaseError> {
    let cfg = SearchConfig::default();
    let px = horofunction(m, xi, x, &cfg).unwrap();
    let py = horofunction(m, xi, y, &cfg).unwrap();
    let d = distance(x, y, &cfg).unwrap();
    check(px - py <= d.log_sup + TOL, format!("ψ(x) − ψ(y) = {} > d(x, y) = {}", px - py, d.log_sup))
}

pub fn vanishes_at_base(m: &Model, xi: &ProjectiveDirection) -> Result<(), TestCaseError> {
    let v = horofunction(m, xi, m.base(), &SearchConfig::default()).unwrap();
    check(v == 0.0, format!("ψ(b) = {v}"))
}

pub fn isometry_invariance(x: &Point, y: &Point, g: &GroupElement) -> Result<(), TestCaseError> {
    let cfg = SearchConfig::default();
    let a = distance(x, y, &cfg).unwrap().log_sup;
    let b = distance(&x.act(g), &y.act(g), &cfg).unwrap().log_sup;
    check((a - b).abs() <= TOL, format!("d(x, y) = {a}, d(gx, gy) = {b}"))
}

/// Sweeps at growing heights never decrease, and the refined search never
/// falls below the sweep it starts from.
pub fn sup_monotonicity(x: &Point, y: &Point) -> Result<(), TestCaseError> {
    let f = |t: Slope| Ok(y.log_i(t)? - x.log_i(t)?);
    let mut prev = f64::NEG_INFINITY;
    for h in [1u32, 2, 4, 8, 16, 32] {
        let (v, _) = sweep_max(h, f).unwrap();
        check(v >= prev, format!("sweep decreased at height {h}: {v} < {prev}"))?;
        prev = v;
    }
    let d = distance(x, y, &SearchConfig::new(32, 4, 12).unwrap()).unwrap();
    check(d.log_sup >= prev - 1e-12, format!("refined {} below sweep {prev}", d.log_sup))
}

/// Same seed, same numbers, whatever the worker count.
pub fn determinism(seed: u64, g: &GroupElement, h: &GroupElement) -> Result<(), TestCaseError> {
    let mu = Measure::uniform(&[*g, *h]).unwrap();
    let cfg = SearchConfig::default();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| kingman_drift(&Model::flat(), &mu, 12, 16, seed, &cfg).unwrap())
    };
    let (a, b, c) = (run(1), run(3), run(3));
    check(a == b && b == c, format!("runs differ: {a:?} {b:?} {c:?}"))
}

pub fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

fn fmt<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| format!("{e}"))
}

/// Every invariant suite at CASES random cases; one (name, outcome) per suite.
pub fn run_all_suites() -> Vec<(&'static str, Result<(), String>)> {
    let mut out = Vec::new();
    out.push((
        "cocycle identity",
        fmt(runner().run(&(model(), element(), element(), direction()), |(m, a, b, xi)| {
            cocycle_identity(&m, &a, &b, &xi)
        })),
    ));
    out.push((
        "equivariance",
        fmt(runner().run(&(model(), element(), direction(), element()), |(m, g, xi, x)| {
            equivariance(&m, &g, &xi, &x)
        })),
    ));
    out.push((
        "1-Lipschitz",
        fmt(runner().run(&(model_and_points(), direction()), |((m, x, y), xi)| one_lipschitz(&m, &x, &y, &xi))),
    ));
    out.push(("psi(b) = 0", fmt(runner().run(&(model(), direction()), |(m, xi)| vanishes_at_base(&m, &xi)))));
    out.push((
        "isometry invariance",
        fmt(runner().run(&(model_and_points(), element()), |((_, x, y), g)| isometry_invariance(&x, &y, &g))),
    ));
    out.push(("sup monotonicity", fmt(runner().run(&model_and_points(), |(_, x, y)| sup_monotonicity(&x, &y)))));
    out.push((
        "determinism",
        fmt(runner().run(&(any::<u64>(), element(), element()), |(s, g, h)| determinism(s, &g, &h))),
    ));
    out
}
