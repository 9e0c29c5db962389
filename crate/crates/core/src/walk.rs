//! Finitely supported measures on SL(2,Z), sample paths, Kingman drift
//! estimates, empirical boundary measures and the integral drift formula.
//!
//! Randomness: every trial owns a ChaCha8 stream keyed by (seed, purpose,
//! trial). Trials run in parallel, results are reduced in trial order, so
//! outputs do not depend on the worker count.

use std::collections::HashMap;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, Marking};
use crate::horoboundary::log_pairing_sup;
use crate::models::{distance, Model, SearchConfig};
use crate::slopes::ProjectiveDirection;
use crate::stats::{median, OnlineStats};

pub const MEASURE_TOL: f64 = 1e-9;

pub(crate) const PURPOSE_PATH: u64 = 0x5041_5448;
pub(crate) const PURPOSE_BOUNDARY: u64 = 0x424e_4459;
pub(crate) const PURPOSE_DIHEDRAL: u64 = 0x4448_4544;

pub(crate) fn stream_rng(seed: u64, purpose: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(stream);
    rng
}

/// Uniform on [0, 1) with 53 random bits.
pub(crate) fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AtomRepr {
    g: GroupElement,
    p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<AtomRepr>,
}

/// A validated probability measure with finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct Measure {
    atoms: Vec<(GroupElement, f64)>,
    cumulative: Vec<f64>,
}

impl TryFrom<MeasureRepr> for Measure {
    type Error = Error;
    fn try_from(r: MeasureRepr) -> Result<Measure> {
        Measure::new(r.atoms.into_iter().map(|a| (a.g, a.p)).collect())
    }
}

impl From<Measure> for MeasureRepr {
    fn from(m: Measure) -> MeasureRepr {
        MeasureRepr { atoms: m.atoms.into_iter().map(|(g, p)| AtomRepr { g, p }).collect() }
    }
}

impl Measure {
    /// Merges duplicate atoms (g and −g coincide), drops zero atoms and
    /// renormalizes once the total is within 1e-9 of one.
    pub fn new(raw: Vec<(GroupElement, f64)>) -> Result<Measure> {
        let mut order: Vec<GroupElement> = Vec::new();
        let mut mass: HashMap<GroupElement, f64> = HashMap::new();
        for (g, p) in raw {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidMeasure(format!("bad probability {p} at {g}")));
            }
            match mass.get_mut(&g) {
                Some(m) => *m += p,
                None => {
                    order.push(g);
                    mass.insert(g, p);
                }
            }
        }
        let total: f64 = order.iter().map(|g| mass[g]).sum();
        if (total - 1.0).abs() > MEASURE_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total}")));
        }
        let atoms: Vec<(GroupElement, f64)> = order
            .into_iter()
            .filter(|g| mass[g] > 0.0)
            .map(|g| (g, mass[&g] / total))
            .collect();
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for (_, p) in &atoms {
            acc += p;
            cumulative.push(acc);
        }
        Ok(Measure { atoms, cumulative })
    }

    pub fn dirac(g: GroupElement) -> Measure {
        Measure::new(vec![(g, 1.0)]).expect("dirac mass is valid")
    }

    pub fn uniform(support: &[GroupElement]) -> Result<Measure> {
        let p = 1.0 / support.len() as f64;
        Measure::new(support.iter().map(|g| (*g, p)).collect())
    }

    /// t·a + (1 − t)·b.
    pub fn mixture(t: f64, a: &Measure, b: &Measure) -> Result<Measure> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("mixture weight {t} outside [0, 1]")));
        }
        let mut raw: Vec<(GroupElement, f64)> = a.atoms.iter().map(|(g, p)| (*g, t * p)).collect();
        raw.extend(b.atoms.iter().map(|(g, p)| (*g, (1.0 - t) * p)));
        Measure::new(raw)
    }

    pub fn atoms(&self) -> &[(GroupElement, f64)] {
        &self.atoms
    }

    pub fn support(&self) -> Vec<GroupElement> {
        self.atoms.iter().map(|(g, _)| *g).collect()
    }

    pub fn probability(&self, g: &GroupElement) -> f64 {
        self.atoms.iter().find(|(h, _)| h == g).map_or(0.0, |(_, p)| *p)
    }

    /// The pushforward under g ↦ g⁻¹.
    pub fn reflect(&self) -> Measure {
        Measure::new(self.atoms.iter().map(|(g, p)| (g.inverse(), *p)).collect()).expect("reflection of a valid measure")
    }

    /// Order-independent FNV-1a digest of the atoms.
    pub fn fingerprint(&self) -> u64 {
        let mut atoms = self.atoms.clone();
        atoms.sort_by_key(|a| a.0);
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for (g, p) in atoms {
            for row in g.entries() {
                for e in row {
                    eat(e as u64);
                }
            }
            eat(p.to_bits());
        }
        h
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng) -> &GroupElement {
        let u = uniform(rng);
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        &self.atoms[i].0
    }
}

/// One trajectory ω_0 = e, ω_n = ω_{n−1}·g_n.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    seed: u64,
    trial: u64,
    increments: Vec<GroupElement>,
    products: Vec<Marking>,
}

impl SamplePath {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trial(&self) -> u64 {
        self.trial
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn increments(&self) -> &[GroupElement] {
        &self.increments
    }

    /// ω_0, …, ω_n.
    pub fn products(&self) -> &[Marking] {
        &self.products
    }

    pub fn product(&self, n: usize) -> &Marking {
        &self.products[n]
    }

    /// ω_n as an integer matrix; errors once entries no longer fit in i64.
    pub fn exact_product(&self, n: usize) -> Result<GroupElement> {
        self.products[n].exact().copied().ok_or(Error::Overflow("sample path product"))
    }
}

pub fn sample_path(mu: &Measure, steps: usize, seed: u64) -> Result<SamplePath> {
    sample_path_trial(mu, steps, seed, 0)
}

pub fn sample_path_trial(mu: &Measure, steps: usize, seed: u64, trial: u64) -> Result<SamplePath> {
    let mut rng = stream_rng(seed, PURPOSE_PATH, trial);
    let mut increments = Vec::with_capacity(steps);
    let mut products = Vec::with_capacity(steps + 1);
    let mut w = Marking::IDENTITY;
    products.push(w);
    for _ in 0..steps {
        let g = *mu.draw(&mut rng);
        w = w.mul_group(&g);
        increments.push(g);
        products.push(w);
    }
    Ok(SamplePath { seed, trial, increments, products })
}

/// Runs a trial's walk, calling `visit(n, ω_n)` for n = 1..=steps.
fn walk_visit(mu: &Measure, steps: usize, rng: &mut ChaCha8Rng, mut visit: impl FnMut(usize, &Marking)) {
    let mut w = Marking::IDENTITY;
    for n in 1..=steps {
        w = w.mul_group(mu.draw(rng));
        visit(n, &w);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// d(ω_n b, b)
    #[default]
    Forward,
    /// d(b, ω_n b)
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub steps: usize,
    pub orientation: Orientation,
    /// Largest per-trial truncation bound, already divided by the step count.
    pub truncation_bound: f64,
}

impl DriftEstimate {
    fn from_samples(values: &[(f64, f64)], steps: usize, orientation: Orientation) -> DriftEstimate {
        let stats: OnlineStats = values.iter().map(|v| v.0).collect();
        DriftEstimate {
            mean: stats.mean(),
            stderr: stats.stderr(),
            trials: values.len(),
            steps,
            orientation,
            truncation_bound: values.iter().map(|v| v.1).fold(0.0, f64::max),
        }
    }
}

fn check_sizes(steps: usize, trials: usize) -> Result<()> {
    if steps == 0 || trials == 0 {
        return Err(Error::InvalidArgument("steps and trials must be positive".into()));
    }
    Ok(())
}

/// Mean of d(ω_n b, b)/n over independent trials.
pub fn kingman_drift(
    model: &Model,
    mu: &Measure,
    steps: usize,
    trials: usize,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<DriftEstimate> {
    kingman_drift_oriented(model, mu, steps, trials, seed, cfg, Orientation::Forward)
}

pub fn kingman_drift_oriented(
    model: &Model,
    mu: &Measure,
    steps: usize,
    trials: usize,
    seed: u64,
    cfg: &SearchConfig,
    orientation: Orientation,
) -> Result<DriftEstimate> {
    check_sizes(steps, trials)?;
    let b = model.base();
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, PURPOSE_PATH, t);
            let mut end = Marking::IDENTITY;
            walk_visit(mu, steps, &mut rng, |_, w| end = *w);
            let x = model.orbit_point(&end);
            let d = match orientation {
                Orientation::Forward => distance(&x, b, cfg)?,
                Orientation::Reverse => distance(b, &x, cfg)?,
            };
            Ok((d.log_sup / steps as f64, d.truncation_bound / steps as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftEstimate::from_samples(&values, steps, orientation))
}

/// Mean of [d(ω_N b, b) − d(ω_{N/2} b, b)]/(N − N/2). The additive O(1)
/// term of d(ω_n b, b) cancels, so the bias is smaller than Kingman's.
pub fn increment_drift(
    model: &Model,
    mu: &Measure,
    steps: usize,
    trials: usize,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<DriftEstimate> {
    check_sizes(steps, trials)?;
    if steps < 2 {
        return Err(Error::InvalidArgument("increment estimator needs at least two steps".into()));
    }
    let b = model.base();
    let half = steps / 2;
    let span = (steps - half) as f64;
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, PURPOSE_PATH, t);
            let mut mid = Marking::IDENTITY;
            let mut end = Marking::IDENTITY;
            walk_visit(mu, steps, &mut rng, |n, w| {
                if n == half {
                    mid = *w;
                }
                end = *w;
            });
            let d1 = distance(&model.orbit_point(&mid), b, cfg)?;
            let d2 = distance(&model.orbit_point(&end), b, cfg)?;
            Ok(((d2.log_sup - d1.log_sup) / span, (d1.truncation_bound + d2.truncation_bound) / span))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftEstimate::from_samples(&values, steps, Orientation::Forward))
}

/// Σ μ(g)·d(g b, b).
pub fn first_moment(model: &Model, mu: &Measure, cfg: &SearchConfig) -> Result<f64> {
    let mut acc = 0.0;
    for (g, p) in mu.atoms() {
        acc += p * distance(&model.orbit_point_group(g), model.base(), cfg)?.log_sup;
    }
    Ok(acc)
}

/// max(d(b, g b), d(g b, b)).
pub fn symmetric_displacement(model: &Model, g: &GroupElement, cfg: &SearchConfig) -> Result<f64> {
    let x = model.orbit_point_group(g);
    let b = model.base();
    Ok(distance(&x, b, cfg)?.log_sup.max(distance(b, &x, cfg)?.log_sup))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProvenance {
    pub measure_fingerprint: u64,
    pub steps: usize,
    pub seed: u64,
    /// Median angle between the dominant directions at n/2 and n.
    pub median_diagnostic: f64,
    pub max_diagnostic: f64,
}

/// Samples from the stationary measure of the walk that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBoundaryMeasure {
    pub points: Vec<ProjectiveDirection>,
    pub diagnostics: Vec<f64>,
    pub provenance: BoundaryProvenance,
}

pub const BOUNDARY_CONVERGENCE_TOL: f64 = 1e-3;

/// Limit directions of ω_n for independent walks of `steps` steps, read off
/// as the top left-singular vector of ω_n.
pub fn boundary_sample(mu: &Measure, steps: usize, samples: usize, seed: u64) -> Result<EmpiricalBoundaryMeasure> {
    check_sizes(steps, samples)?;
    if steps < 2 {
        return Err(Error::InvalidArgument("boundary sampling needs at least two steps".into()));
    }
    let half = steps / 2;
    let pairs: Vec<(ProjectiveDirection, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, PURPOSE_BOUNDARY, s);
            let mut mid = Marking::IDENTITY;
            let mut end = Marking::IDENTITY;
            walk_visit(mu, steps, &mut rng, |n, w| {
                if n == half {
                    mid = *w;
                }
                end = *w;
            });
            let a = mid.dominant_image_direction();
            let z = end.dominant_image_direction();
            (z, a.angle_to(&z))
        })
        .collect();
    let (points, diagnostics): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let med = median(&diagnostics);
    if med > BOUNDARY_CONVERGENCE_TOL {
        return Err(Error::NotConverged { median: med });
    }
    let max = diagnostics.iter().copied().fold(0.0, f64::max);
    Ok(EmpiricalBoundaryMeasure {
        points,
        diagnostics,
        provenance: BoundaryProvenance {
            measure_fingerprint: mu.fingerprint(),
            steps,
            seed,
            median_diagnostic: med,
            max_diagnostic: max,
        },
    })
}

/// ∫∫ c_B(g, ξ) dμ̆(g) dν̆(ξ), with ν̆ sampled from the reflected walk.
/// c_B(g⁻¹, ξ) = ψ_ξ(g b), so the integrand is Σ μ(g)·ψ_ξ(g b).
pub fn integral_drift(
    model: &Model,
    mu: &Measure,
    boundary: &EmpiricalBoundaryMeasure,
    cfg: &SearchConfig,
) -> Result<DriftEstimate> {
    if boundary.provenance.measure_fingerprint != mu.reflect().fingerprint() {
        return Err(Error::ProvenanceMismatch);
    }
    let orbit: Vec<_> = mu.atoms().iter().map(|(g, p)| (model.orbit_point_group(g), *p)).collect();
    let values = boundary
        .points
        .par_iter()
        .map(|xi| {
            let den = log_pairing_sup(model.base(), xi, cfg)?;
            let mut acc = 0.0;
            let mut tb = 0.0f64;
            for (x, p) in &orbit {
                let num = log_pairing_sup(x, xi, cfg)?;
                acc += p * (num.log_sup - den.log_sup);
                tb = tb.max(num.truncation_bound + den.truncation_bound);
            }
            Ok((acc, tb))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftEstimate::from_samples(&values, boundary.provenance.steps, Orientation::Forward))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(a: i64, b: i64, c: i64, d: i64) -> GroupElement {
        GroupElement::new(a, b, c, d).unwrap()
    }

    #[test]
    fn validation() {
        let a = g(2, 1, 1, 1);
        assert!(Measure::new(vec![(a, 0.5)]).is_err());
        assert!(Measure::new(vec![(a, -0.1), (GroupElement::IDENTITY, 1.1)]).is_err());
        assert!(Measure::new(vec![(a, f64::NAN)]).is_err());
        assert!(Measure::new(vec![]).is_err());
        let m = Measure::new(vec![(a, 0.5), (g(-2, -1, -1, -1), 0.5 + 5e-10)]).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert_eq!(m.atoms()[0].1, 1.0);
        let m = Measure::new(vec![(a, 1.0), (GroupElement::IDENTITY, 0.0)]).unwrap();
        assert_eq!(m.support(), vec![a]);
    }

    #[test]
    fn serde_roundtrip_and_rejection() {
        let m = Measure::uniform(&[g(1, 1, 0, 1), g(1, 0, 1, 1)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: Measure = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        assert!(serde_json::from_str::<Measure>(r#"{"atoms":[{"g":[[1,1],[0,1]],"p":0.4}]}"#).is_err());
        assert!(serde_json::from_str::<Measure>(r#"{"atoms":[{"g":[[2,1],[0,1]],"p":1.0}]}"#).is_err());
    }

    #[test]
    fn reflection_and_fingerprint() {
        let m = Measure::new(vec![(g(1, 1, 0, 1), 0.3), (g(1, 0, 1, 1), 0.7)]).unwrap();
        let r = m.reflect();
        assert_eq!(r.probability(&g(1, -1, 0, 1)), 0.3);
        assert_eq!(r.reflect(), m);
        assert_ne!(m.fingerprint(), r.fingerprint());
        let swapped = Measure::new(vec![(g(1, 0, 1, 1), 0.7), (g(1, 1, 0, 1), 0.3)]).unwrap();
        assert_eq!(m.fingerprint(), swapped.fingerprint());
    }

    #[test]
    fn sampling_frequencies() {
        let m = Measure::new(vec![(g(1, 1, 0, 1), 0.25), (g(1, 0, 1, 1), 0.75)]).unwrap();
        let p = sample_path(&m, 20000, 11).unwrap();
        let k = p.increments().iter().filter(|h| **h == g(1, 1, 0, 1)).count() as f64 / 20000.0;
        assert!((k - 0.25).abs() < 0.015, "{k}");
    }

    #[test]
    fn paths_are_reproducible_and_consistent() {
        let m = Measure::uniform(&[g(1, 1, 0, 1), g(1, 0, 1, 1), g(0, -1, 1, 0)]).unwrap();
        let a = sample_path_trial(&m, 30, 5, 2).unwrap();
        let b = sample_path_trial(&m, 30, 5, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_path_trial(&m, 30, 5, 3).unwrap());
        let mut acc = GroupElement::IDENTITY;
        for (n, h) in a.increments().iter().enumerate() {
            acc = acc.mul(h).unwrap();
            assert_eq!(a.exact_product(n + 1).unwrap(), acc);
        }
    }

    #[test]
    fn exact_product_overflow() {
        let p = sample_path(&Measure::dirac(g(2, 1, 1, 1)), 60, 0).unwrap();
        assert!(p.exact_product(10).is_ok());
        assert!(matches!(p.exact_product(60), Err(Error::Overflow(_))));
    }

    #[test]
    fn dirac_drift_is_translation_length() {
        let h = g(2, 1, 1, 1);
        let cfg = SearchConfig::default();
        let want = h.spectral_radius().ln();
        let est = kingman_drift(&Model::flat(), &Measure::dirac(h), 200, 3, 1, &cfg).unwrap();
        assert!((est.mean - want).abs() < 1e-10);
        assert_eq!(est.stderr, 0.0);
        let inc = increment_drift(&Model::fricke(), &Measure::dirac(h), 200, 2, 1, &cfg).unwrap();
        assert!((inc.mean - want).abs() < 1e-9, "{}", inc.mean);
    }

    #[test]
    fn identity_walk_has_zero_drift() {
        let cfg = SearchConfig::default();
        for m in [Model::flat(), Model::fricke()] {
            let est = kingman_drift(&m, &Measure::dirac(GroupElement::IDENTITY), 10, 4, 0, &cfg).unwrap();
            assert_eq!(est.mean, 0.0);
        }
    }

    #[test]
    fn drift_is_reproducible() {
        let cfg = SearchConfig::default();
        let m = Measure::uniform(&[g(1, 1, 0, 1), g(1, 0, 1, 1)]).unwrap();
        let a = kingman_drift(&Model::flat(), &m, 40, 16, 9, &cfg).unwrap();
        let b = kingman_drift(&Model::flat(), &m, 40, 16, 9, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(kingman_drift(&Model::flat(), &m, 0, 16, 9, &cfg).is_err());
    }

    #[test]
    fn boundary_for_dirac_and_integral_formula() {
        let h = g(2, 1, 1, 1);
        let mu = Measure::dirac(h);
        let cfg = SearchConfig::default();
        let nu = boundary_sample(&mu.reflect(), 40, 4, 3).unwrap();
        let (_, minus) = h.fixed_directions().unwrap();
        for p in &nu.points {
            assert!(p.angle_to(&minus) < 1e-12);
        }
        for m in [Model::flat(), Model::fricke()] {
            let est = integral_drift(&m, &mu, &nu, &cfg).unwrap();
            assert!((est.mean - h.spectral_radius().ln()).abs() < 1e-10, "{}", est.mean);
        }
        let wrong = boundary_sample(&mu, 40, 4, 3).unwrap();
        assert!(matches!(integral_drift(&Model::flat(), &mu, &wrong, &cfg), Err(Error::ProvenanceMismatch)));
    }

    #[test]
    fn parabolic_walk_converges_too_slowly() {
        let mu = Measure::dirac(g(1, 1, 0, 1));
        assert!(matches!(boundary_sample(&mu, 64, 9, 0), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn first_moment_bounds_drift() {
        let cfg = SearchConfig::default();
        let mu = Measure::uniform(&[g(1, 1, 0, 1), g(1, 0, 1, 1), g(1, -1, 0, 1), g(1, 0, -1, 1)]).unwrap();
        let m = Model::flat();
        let fm = first_moment(&m, &mu, &cfg).unwrap();
        let est = kingman_drift(&m, &mu, 100, 64, 2, &cfg).unwrap();
        assert!(est.mean <= fm + 1e-12);
        assert!(est.mean > 0.0);
    }
}
