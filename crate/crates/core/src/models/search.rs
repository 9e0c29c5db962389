//! Truncated sup over slopes: an exhaustive Farey sweep followed by a
//! best-first Stern–Brocot refinement with beam pruning.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slopes::{canonicalize, farey_enumerate, Slope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub max_height: u32,
    pub beam_width: usize,
    pub stabilization_window: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { max_height: 16, beam_width: 4, stabilization_window: 12 }
    }
}

impl SearchConfig {
    pub fn new(max_height: u32, beam_width: usize, stabilization_window: usize) -> Result<Self> {
        let cfg = SearchConfig { max_height, beam_width, stabilization_window };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_height == 0 || self.beam_width == 0 || self.stabilization_window == 0 {
            return Err(Error::InvalidArgument(
                "search max_height, beam_width and stabilization_window must be positive".into(),
            ));
        }
        Ok(())
    }

    fn max_expansions(&self) -> usize {
        64 * self.stabilization_window + 64
    }
}

/// Result of maximizing a function over slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome {
    pub value: f64,
    pub witness: Slope,
    /// Size of the last significant improvement made by the refinement.
    pub last_improvement: f64,
    pub expansions: usize,
    pub evaluations: usize,
    pub stabilized: bool,
}

impl SearchOutcome {
    /// Honest estimate of how far `value` may sit below the true sup.
    pub fn truncation_bound(&self) -> f64 {
        self.last_improvement + 1e-12 * (1.0 + self.value.abs())
    }
}

thread_local! {
    static FAREY: RefCell<HashMap<u32, Rc<Vec<Slope>>>> = RefCell::new(HashMap::new());
}

fn farey_cached(q: u32) -> Result<Rc<Vec<Slope>>> {
    if let Some(v) = FAREY.with(|c| c.borrow().get(&q).cloned()) {
        return Ok(v);
    }
    let v = Rc::new(farey_enumerate(q)?);
    FAREY.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > 16 {
            c.clear();
        }
        c.insert(q, v.clone());
    });
    Ok(v)
}

fn clean(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

/// Exhaustive maximum over farey_enumerate(max_height). Ties keep the first
/// slope in enumeration order.
pub fn sweep_max<F>(max_height: u32, mut f: F) -> Result<(f64, Slope)>
where
    F: FnMut(Slope) -> Result<f64>,
{
    let slopes = farey_cached(max_height)?;
    let mut best = (f64::NEG_INFINITY, slopes[0]);
    for &s in slopes.iter() {
        let v = clean(f(s)?);
        if v > best.0 {
            best = (v, s);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    a: [i64; 2],
    b: [i64; 2],
    fa: f64,
    fb: f64,
}

impl Interval {
    fn score(&self) -> f64 {
        self.fa.max(self.fb)
    }

    fn size(&self) -> i128 {
        let h = |v: [i64; 2]| v[0].unsigned_abs().max(v[1].unsigned_abs()) as i128;
        h(self.a) * h(self.b)
    }
}

const MAX_ENTRY: i64 = 1 << 50;
const DEEP_K: i64 = 1 << 10;

struct Evaluator<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(Slope) -> Result<f64>> Evaluator<F> {
    fn eval(&mut self, v: [i64; 2]) -> Result<f64> {
        self.evaluations += 1;
        Ok(clean((self.f)(canonicalize(v[0], v[1])?)?))
    }
}

fn comb(k: i64, p: [i64; 2], q: [i64; 2]) -> [i64; 2] {
    [k * p[0] + q[0], k * p[1] + q[1]]
}

/// Refine one Farey interval: walk the family X_k = k·P + Q from the mediant
/// towards the better endpoint P, galloping then bisecting on k.
fn expand<F: FnMut(Slope) -> Result<f64>>(
    iv: &Interval,
    ev: &mut Evaluator<F>,
) -> Result<(Vec<Interval>, f64, [i64; 2])> {
    let (p, q, fq) = if iv.fa >= iv.fb { (iv.a, iv.b, iv.fb) } else { (iv.b, iv.a, iv.fa) };
    let hp = p[0].abs().max(p[1].abs()).max(1);
    let hq = q[0].abs().max(q[1].abs());
    if hp >= MAX_ENTRY || hq >= MAX_ENTRY {
        return Ok((Vec::new(), f64::NEG_INFINITY, p));
    }
    let kmax = ((MAX_ENTRY - hq) / hp).clamp(1, 1 << 30);
    let mut cache: Vec<(i64, f64)> = vec![(0, fq)];
    let value = |k: i64, ev: &mut Evaluator<F>, cache: &mut Vec<(i64, f64)>| -> Result<f64> {
        if let Some(&(_, v)) = cache.iter().find(|(j, _)| *j == k) {
            return Ok(v);
        }
        let v = ev.eval(comb(k, p, q))?;
        cache.push((k, v));
        Ok(v)
    };
    // Gallop while the family keeps increasing.
    let mut lo = 0i64;
    let mut cur = 1i64;
    let mut fcur = value(1, ev, &mut cache)?;
    let mut hi = cur;
    loop {
        let next = cur * 2;
        if next > kmax {
            break;
        }
        let fnext = value(next, ev, &mut cache)?;
        if fnext > fcur {
            lo = cur;
            cur = next;
            fcur = fnext;
            hi = cur;
        } else {
            hi = next;
            break;
        }
    }
    // Ternary search on integers in [lo, hi] around the peak at cur.
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        let (v1, v2) = (value(m1, ev, &mut cache)?, value(m2, ev, &mut cache)?);
        if v1 < v2 {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let mut best_k = cur;
    let mut best_v = fcur;
    for k in lo.max(1)..=hi {
        let v = value(k, ev, &mut cache)?;
        if v > best_v {
            best_k = k;
            best_v = v;
        }
    }
    let xk = comb(best_k, p, q);
    // Still climbing at the cap, or a deep peak that never clears f(P): the
    // family approaches its sup at P, which is already scored. Children would
    // only carry rounding noise above f(P) and crowd real intervals out of
    // the beam.
    let fp = iv.score();
    let flat_at_p = best_k >= DEEP_K && best_v <= fp + 1e-14 * (1.0 + fp.abs());
    if best_k == kmax || flat_at_p {
        return Ok((Vec::new(), best_v, xk));
    }
    let mut children = Vec::with_capacity(2);
    let up = comb(best_k + 1, p, q);
    children.push(Interval { a: up, b: xk, fa: value(best_k + 1, ev, &mut cache)?, fb: best_v });
    let down = comb(best_k - 1, p, q);
    children.push(Interval { a: xk, b: down, fa: best_v, fb: value(best_k - 1, ev, &mut cache)? });
    Ok((children, best_v, xk))
}

/// Sup of `f` over slopes: Farey sweep to `max_height`, then best-first
/// refinement from the `beam_width` best sweep slopes until the running max
/// has not improved for `stabilization_window` expansions.
pub fn maximize<F>(cfg: &SearchConfig, f: F) -> Result<SearchOutcome>
where
    F: FnMut(Slope) -> Result<f64>,
{
    cfg.validate()?;
    let slopes = farey_cached(cfg.max_height)?;
    let mut ev = Evaluator { f, evaluations: 0 };
    let n = slopes.len();
    let mut values = Vec::with_capacity(n);
    for &s in slopes.iter() {
        values.push(ev.eval([s.p(), s.q()])?);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let mut best = values[order[0]];
    let mut witness = slopes[order[0]];

    let vec_at = |i: usize| -> [i64; 2] {
        let s = slopes[i % n];
        [s.p(), s.q()]
    };
    let mut frontier: Vec<Interval> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for &i in order.iter().take(cfg.beam_width) {
        for k in [(i + n - 1) % n, i] {
            if !seen.insert(k) {
                continue;
            }
            let a = vec_at(k);
            // The last slope wraps around to (1,0), taken as (−1,0).
            let b = if k + 1 == n { [-1, 0] } else { vec_at(k + 1) };
            frontier.push(Interval { a, b, fa: values[k], fb: values[(k + 1) % n] });
        }
    }

    let sort = |fr: &mut Vec<Interval>| {
        fr.sort_by(|x, y| y.score().total_cmp(&x.score()).then(x.size().cmp(&y.size())));
    };
    sort(&mut frontier);
    let mut last_improvement = 0.0;
    let mut since = 0usize;
    let mut expansions = 0usize;
    let mut stabilized = false;
    while !frontier.is_empty() {
        let iv = frontier.remove(0);
        let (children, v, at) = expand(&iv, &mut ev)?;
        expansions += 1;
        let tol = 1e-13 * (1.0 + best.abs());
        if v > best + tol {
            last_improvement = v - best;
            since = 0;
        } else {
            since += 1;
        }
        if v > best {
            best = v;
            witness = canonicalize(at[0], at[1])?;
        }
        frontier.extend(children);
        sort(&mut frontier);
        frontier.truncate(cfg.beam_width);
        if since >= cfg.stabilization_window {
            stabilized = true;
            break;
        }
        if expansions >= cfg.max_expansions() {
            break;
        }
    }
    if frontier.is_empty() {
        stabilized = true;
    }
    Ok(SearchOutcome {
        value: best,
        witness,
        last_improvement,
        expansions,
        evaluations: ev.evaluations,
        stabilized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_form_over_euclidean_norm() {
        // sup |w × t|/|t| = |w| for every unit w, attained off the rationals.
        let cfg = SearchConfig::default();
        let mut worst = 0.0f64;
        for i in 0..400 {
            let th = 0.0123 + i as f64 * (std::f64::consts::PI / 400.0);
            let w = [th.cos(), th.sin()];
            let out = maximize(&cfg, |t: Slope| {
                let (p, q) = (t.p() as f64, t.q() as f64);
                Ok(((w[0] * q - w[1] * p).abs() / p.hypot(q)).ln())
            })
            .unwrap();
            assert!(out.stabilized);
            worst = worst.max(-out.value);
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn finds_interior_peak_near_irrational() {
        let theta = 0.7368;
        let f = |s: Slope| -> Result<f64> {
            let a = (s.q() as f64).atan2(s.p() as f64);
            let d = (a - theta).sin();
            Ok(-(d * d))
        };
        let out = maximize(&SearchConfig::default(), f).unwrap();
        assert!(out.value > -1e-14, "{out:?}");
        assert!(out.stabilized);
    }

    #[test]
    fn peak_close_to_low_height_rational() {
        // Peak 1e-7 rad away from (1,0): needs a long run towards (1,0).
        let theta = 1e-7;
        let f = |s: Slope| -> Result<f64> {
            let a = (s.q() as f64).atan2(s.p() as f64);
            let d = (a - theta).sin();
            Ok(1.0 - d * d)
        };
        let out = maximize(&SearchConfig::default(), f).unwrap();
        assert!(1.0 - out.value < 1e-15, "{out:?}");
        assert!(out.evaluations < 5000);
    }

    #[test]
    fn exact_rational_peak_stabilizes() {
        let f = |s: Slope| -> Result<f64> { Ok(-((s.p() - 2 * s.q()) as f64).abs() / (s.p() as f64).hypot(s.q() as f64)) };
        let out = maximize(&SearchConfig::default(), f).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.witness, canonicalize(2, 1).unwrap());
        assert_eq!(out.last_improvement, 0.0);
    }

    #[test]
    fn sweep_is_monotone_in_height() {
        let f = |s: Slope| -> Result<f64> { Ok(((s.p() as f64) * 0.37 + (s.q() as f64) * 1.1).sin()) };
        let mut prev = f64::NEG_INFINITY;
        for q in 1..30 {
            let (v, _) = sweep_max(q, f).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::new(0, 1, 1).is_err());
        assert!(SearchConfig::new(4, 0, 1).is_err());
        assert!(SearchConfig::new(4, 1, 0).is_err());
        assert!(SearchConfig::new(4, 1, 1).is_ok());
    }
}
