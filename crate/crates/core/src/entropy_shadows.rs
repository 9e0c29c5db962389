//! Convolution powers and their entropy; shadows, thickened spheres and the
//! covering and shadow-measure checks in the flat model at τ = i.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{MeasureFamily, SweepReport, SweepRow, Verdict};
use crate::group::GroupElement;
use crate::slopes::ProjectiveDirection;
use crate::stats::compensated_sum;
use crate::walk::{boundary_sample, stream_rng, uniform, Measure};

pub const DEFAULT_TABLE_CAP: usize = 1_000_000;

/// μ^{*n} as a map from canonical group elements to probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionTable {
    entries: BTreeMap<GroupElement, f64>,
    n: usize,
}

impl ConvolutionTable {
    pub fn identity() -> ConvolutionTable {
        ConvolutionTable { entries: BTreeMap::from([(GroupElement::IDENTITY, 1.0)]), n: 0 }
    }

    pub fn from_measure(mu: &Measure) -> ConvolutionTable {
        ConvolutionTable { entries: mu.atoms().iter().copied().collect(), n: 1 }
    }

    pub fn power(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability(&self, g: &GroupElement) -> f64 {
        self.entries.get(g).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, &f64)> {
        self.entries.iter()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.entries.values().copied())
    }
}

/// a * μ with the default cap.
pub fn convolve(a: &ConvolutionTable, mu: &Measure) -> Result<ConvolutionTable> {
    convolve_capped(a, mu, DEFAULT_TABLE_CAP)
}

/// Products are formed in parallel, then merged in table order with
/// compensated sums so the result does not depend on the thread count.
pub fn convolve_capped(a: &ConvolutionTable, mu: &Measure, cap: usize) -> Result<ConvolutionTable> {
    let bound = a.len().saturating_mul(mu.atoms().len());
    if bound > cap.saturating_mul(64) {
        return Err(Error::CapExceeded { size: bound, cap });
    }
    let src: Vec<(&GroupElement, &f64)> = a.entries.iter().collect();
    let parts: Vec<Vec<(GroupElement, f64)>> = src
        .par_iter()
        .map(|(g, p)| {
            mu.atoms()
                .iter()
                .map(|(h, q)| Ok((g.mul(h)?, *p * q)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc: BTreeMap<GroupElement, (f64, f64)> = BTreeMap::new();
    for (g, p) in parts.into_iter().flatten() {
        let e = acc.entry(g).or_insert((0.0, 0.0));
        let t = e.0 + p;
        if e.0.abs() >= p.abs() {
            e.1 += (e.0 - t) + p;
        } else {
            e.1 += (p - t) + e.0;
        }
        e.0 = t;
        if acc.len() > cap {
            return Err(Error::CapExceeded { size: acc.len(), cap });
        }
    }
    Ok(ConvolutionTable { entries: acc.into_iter().map(|(g, (s, c))| (g, s + c)).collect(), n: a.n + 1 })
}

/// Shannon entropy in nats.
pub fn entropy(t: &ConvolutionTable) -> f64 {
    compensated_sum(t.entries.values().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()))
}

/// H(μ^{*n}) for n = 1..=n_max.
pub fn entropy_sequence(mu: &Measure, n_max: usize) -> Result<Vec<f64>> {
    let mut t = ConvolutionTable::from_measure(mu);
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            t = convolve(&t, mu)?;
        }
        out.push(entropy(&t));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// H(μ^{*n})/n at n_max.
    pub plain: f64,
    /// H(μ^{*n_max}) − H(μ^{*(n_max−1)}).
    pub difference: f64,
    /// H(μ^{*n}) for n = 1..=n_max.
    pub sequence: Vec<f64>,
}

pub fn asymptotic_entropy(mu: &Measure, n_max: usize) -> Result<EntropyEstimate> {
    if n_max < 3 {
        return Err(Error::InvalidArgument("n_max must be at least 3".into()));
    }
    let sequence = entropy_sequence(mu, n_max)?;
    let h = sequence[n_max - 1];
    Ok(EntropyEstimate { plain: h / n_max as f64, difference: h - sequence[n_max - 2], sequence })
}

pub const DEFAULT_ENTROPY_LIPSCHITZ: f64 = 4.0;

/// Difference-estimator curve over the family; neighbouring values may
/// differ by at most `lipschitz`·|Δt| + 1e-9.
pub fn entropy_continuity_sweep(family: &MeasureFamily, n_max: usize, lipschitz: Option<f64>) -> Result<SweepReport> {
    let members = family.members()?;
    if members.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    let support0: BTreeSet<GroupElement> = members[0].1.support().into_iter().collect();
    for (t, mu) in &members {
        if mu.support().into_iter().collect::<BTreeSet<_>>() != support0 {
            return Err(Error::SupportMismatch(*t));
        }
    }
    let lip = lipschitz.unwrap_or(DEFAULT_ENTROPY_LIPSCHITZ);
    let ests = members.iter().map(|(_, mu)| asymptotic_entropy(mu, n_max)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(ests.len());
    for (i, ((t, _), e)) in members.iter().zip(&ests).enumerate() {
        let ok = i == 0 || {
            let (pt, pe) = (members[i - 1].0, &ests[i - 1]);
            (e.difference - pe.difference).abs() <= lip * (t - pt).abs() + 1e-9
        };
        rows.push(SweepRow {
            parameter: *t,
            mean: e.difference,
            stderr: 0.0,
            reference: None,
            extra: Some(e.plain),
            extra_stderr: None,
            verdict: ok,
        });
    }
    let pass = rows.iter().all(|r| r.verdict);
    Ok(SweepReport {
        experiment: "entropy-continuity".into(),
        model: None,
        extra_name: Some("entropy_over_n".into()),
        rows,
        verdicts: vec![Verdict::new("continuity", pass, format!("lipschitz {lip}, n_max {n_max}"))],
        notes: vec![format!("family {}", family.name)],
    })
}

/// O(g, C): directions whose geodesic ray from i passes within
/// Teichmüller distance C of g·i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shadow {
    center: GroupElement,
    radius: f64,
}

impl Shadow {
    pub fn new(center: GroupElement, radius: f64) -> Result<Shadow> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("shadow radius {radius} must be positive")));
        }
        Ok(Shadow { center, radius })
    }

    pub fn center(&self) -> &GroupElement {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Hyperbolic distance from w to the ray from i to the boundary point of ξ.
pub fn distance_to_ray(w: Complex64, xi: &ProjectiveDirection) -> f64 {
    // The rotation z ↦ (u z + v)/(−v z + u) fixes i and sends u/v to ∞.
    let (u, v) = (xi.u(), xi.v());
    let z = (w * u + v) / (w * (-v) + u);
    if z.norm_sqr() >= 1.0 {
        (z.re.abs() / z.im).asinh()
    } else {
        let i = Complex64::new(0.0, 1.0);
        (1.0 + (z - i).norm_sqr() / (2.0 * z.im)).acosh()
    }
}

pub fn shadow_contains(s: &Shadow, xi: &ProjectiveDirection) -> bool {
    let w = s.center.mobius(Complex64::new(0.0, 1.0));
    distance_to_ray(w, xi) <= 2.0 * s.radius
}

/// d_T(b, g b) = ½·arccosh(‖g‖²_F/2) at b = i.
pub fn orbit_distance(g: &GroupElement) -> f64 {
    0.5 * (g.frobenius_sq() / 2.0).max(1.0).acosh()
}

pub const DEFAULT_MAX_SPHERE: u32 = 4;

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.signum() * a, a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Canonical elements with ‖g‖²_F ≤ bound: every coprime first column
/// (a, c) with its one-parameter family of second columns.
fn elements_with_frobenius_at_most(bound: i64) -> Vec<GroupElement> {
    let mut out = BTreeSet::new();
    let r = (bound as f64).sqrt() as i64 + 1;
    for a in -r..=r {
        for c in -r..=r {
            let col = a * a + c * c;
            if col == 0 || col > bound {
                continue;
            }
            let (g, x, y) = ext_gcd(a, c);
            if g != 1 {
                continue;
            }
            // a·x + c·y = 1, so (b, d) = (−y, x) solves a·d − b·c = 1.
            let (b0, d0) = (-y, x);
            let t0 = -((a * b0 + c * d0) as f64) / col as f64;
            let centre = t0.round() as i64;
            for dir in [1i64, -1] {
                let mut t = if dir == 1 { centre } else { centre - 1 };
                loop {
                    let (b, d) = (b0 + t * a, d0 + t * c);
                    let n = col + b * b + d * d;
                    if n > bound {
                        if (dir == 1 && (t as f64) > t0) || (dir == -1 && (t as f64) < t0) {
                            break;
                        }
                    } else {
                        out.insert(GroupElement::new(a, b, c, d).expect("determinant one by construction"));
                    }
                    t += dir;
                }
            }
        }
    }
    out.into_iter().collect()
}

fn frobenius_bound(radius: f64) -> i64 {
    (2.0 * (2.0 * radius).cosh()).floor() as i64
}

/// All canonical g with d_T(b, g b) ≤ radius.
pub fn ball_enumerate(radius: u32) -> Result<Vec<GroupElement>> {
    if radius > DEFAULT_MAX_SPHERE + 2 {
        return Err(Error::InvalidArgument(format!("ball radius {radius} too large")));
    }
    Ok(elements_with_frobenius_at_most(frobenius_bound(radius as f64))
        .into_iter()
        .filter(|g| orbit_distance(g) <= radius as f64)
        .collect())
}

/// S^k = {g : d_T(b, g b) ∈ (k − 1, k]}.
pub fn sphere_enumerate(k: u32) -> Result<Vec<GroupElement>> {
    sphere_enumerate_capped(k, DEFAULT_MAX_SPHERE)
}

pub fn sphere_enumerate_capped(k: u32, max_k: u32) -> Result<Vec<GroupElement>> {
    if k > max_k {
        return Err(Error::InvalidArgument(format!("sphere index {k} exceeds maximum {max_k}")));
    }
    let lo = k as f64 - 1.0;
    Ok(elements_with_frobenius_at_most(frobenius_bound(k as f64))
        .into_iter()
        .filter(|g| {
            let d = orbit_distance(g);
            d > lo && d <= k as f64
        })
        .collect())
}

/// Uniformly distributed boundary directions, reproducible from the seed.
pub fn sample_directions(n: usize, seed: u64) -> Vec<ProjectiveDirection> {
    let mut rng = stream_rng(seed, 0x5348_4457, 0);
    (0..n).map(|_| ProjectiveDirection::from_angle(std::f64::consts::PI * uniform(&mut rng))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringLevel {
    pub k: u32,
    pub sphere_size: usize,
    pub max_count: usize,
    /// histogram[c] = number of sampled directions covered by exactly c shadows.
    pub histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringReport {
    pub radius: f64,
    pub samples: usize,
    pub levels: Vec<CoveringLevel>,
    pub max_count: usize,
    pub pass: bool,
}

/// Counts, per sphere, how many shadows O(g, C) contain each sampled
/// direction. Passes when the running maximum no longer grows after k = 2.
pub fn covering_number_check(k_max: u32, radius: f64, directions: &[ProjectiveDirection]) -> Result<CoveringReport> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("shadow radius {radius} must be positive")));
    }
    let mut levels = Vec::new();
    for k in 1..=k_max {
        let sphere = sphere_enumerate_capped(k, k_max.max(DEFAULT_MAX_SPHERE))?;
        let centres: Vec<Complex64> = sphere.iter().map(|g| g.mobius(Complex64::new(0.0, 1.0))).collect();
        let counts: Vec<usize> = directions
            .par_iter()
            .map(|xi| centres.iter().filter(|w| distance_to_ray(**w, xi) <= 2.0 * radius).count())
            .collect();
        let max_count = counts.iter().copied().max().unwrap_or(0);
        let mut histogram = vec![0usize; max_count + 1];
        for c in counts {
            histogram[c] += 1;
        }
        levels.push(CoveringLevel { k, sphere_size: sphere.len(), max_count, histogram });
    }
    let max_count = levels.iter().map(|l| l.max_count).max().unwrap_or(0);
    let upto2 = levels.iter().filter(|l| l.k <= 2).map(|l| l.max_count).max().unwrap_or(0);
    let pass = levels.iter().filter(|l| l.k > 2).all(|l| l.max_count <= upto2);
    Ok(CoveringReport { radius, samples: directions.len(), levels, max_count, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowMeasureLevel {
    pub radius: f64,
    pub min_fraction: f64,
    pub mean_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowMeasureReport {
    pub levels: Vec<ShadowMeasureLevel>,
    pub centres: usize,
    pub boundary_samples: usize,
    pub walk_length: usize,
    pub epsilon: f64,
    pub monotone: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowMeasureConfig {
    pub radii: Vec<f64>,
    pub centres: usize,
    pub walk_length: usize,
    pub boundary_samples: usize,
    pub boundary_steps: usize,
    pub epsilon: f64,
    pub seed: u64,
}

/// Fraction of ν̂-samples ξ with g·ξ ∈ O(g, C), minimized over centres g
/// drawn from μ^{*m}.
pub fn shadow_measure_check(mu: &Measure, cfg: &ShadowMeasureConfig) -> Result<ShadowMeasureReport> {
    if cfg.radii.is_empty() || cfg.radii.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::InvalidArgument("radius grid must be non-empty and positive".into()));
    }
    let nu = boundary_sample(mu, cfg.boundary_steps, cfg.boundary_samples, cfg.seed)?;
    let centres: Vec<GroupElement> = (0..cfg.centres as u64)
        .map(|t| {
            let p = crate::walk::sample_path_trial(mu, cfg.walk_length, cfg.seed, t)?;
            p.exact_product(cfg.walk_length)
        })
        .collect::<Result<_>>()?;
    // For each centre, the distance from g·i to the ray towards g·ξ.
    let dists: Vec<Vec<f64>> = centres
        .par_iter()
        .map(|g| {
            let w = g.mobius(Complex64::new(0.0, 1.0));
            nu.points.iter().map(|xi| distance_to_ray(w, &xi.act(g))).collect()
        })
        .collect();
    let n = nu.points.len() as f64;
    let levels: Vec<ShadowMeasureLevel> = cfg
        .radii
        .iter()
        .map(|&c| {
            let fr: Vec<f64> = dists.iter().map(|d| d.iter().filter(|&&x| x <= 2.0 * c).count() as f64 / n).collect();
            ShadowMeasureLevel {
                radius: c,
                min_fraction: fr.iter().copied().fold(1.0, f64::min),
                mean_fraction: fr.iter().sum::<f64>() / fr.len().max(1) as f64,
            }
        })
        .collect();
    let mut order: Vec<&ShadowMeasureLevel> = levels.iter().collect();
    order.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    let monotone = order.windows(2).all(|w| w[1].min_fraction >= w[0].min_fraction);
    let top = order.last().expect("non-empty").min_fraction;
    Ok(ShadowMeasureReport {
        pass: monotone && top >= 1.0 - cfg.epsilon,
        levels,
        centres: centres.len(),
        boundary_samples: nu.points.len(),
        walk_length: cfg.walk_length,
        epsilon: cfg.epsilon,
        monotone,
    })
}
