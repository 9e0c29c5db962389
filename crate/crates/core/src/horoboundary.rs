//! Horofunctions ψ_ξ for boundary directions ξ, the Busemann cocycle, and
//! diagnostics for the comparison lemma and the sequence condition.
//!
//! ψ_ξ(x) = log S(ξ, x) − log S(ξ, b) with S(ξ, x) = sup_α i(ξ, α)/i(x, α)
//! and i(ξ, α) = |ξ.u·α.q − ξ.v·α.p|. Each sup runs in the frame of its own
//! point: S(ξ, x) = sup_t |ω(M_x⁻¹ξ, t)|/N_x(t).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::models::fricke::cross_exact;
use crate::models::{distance, maximize, Model, Point, SearchConfig};
use crate::slopes::{ProjectiveDirection, Slope};
use crate::walk::SamplePath;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingSup {
    pub log_sup: f64,
    pub witness: Slope,
    pub truncation_bound: f64,
}

/// log sup_α i(ξ, α)/i(x, α).
pub fn log_pairing_sup(x: &Point, xi: &ProjectiveDirection, cfg: &SearchConfig) -> Result<PairingSup> {
    let (w, ls) = x.marking().inverse().apply(xi.as_array());
    let out = maximize(cfg, |t: Slope| {
        let c = cross_exact([t.p(), t.q()], w).abs();
        Ok(ls + c.ln() - x.log_norm_slope(t)?)
    })?;
    if !out.stabilized {
        return Err(Error::SearchUnstable {
            expansions: out.expansions,
            last_improvement: out.last_improvement,
            value: out.value,
        });
    }
    Ok(PairingSup { log_sup: out.value, witness: out.witness, truncation_bound: out.truncation_bound() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoroValue {
    pub value: f64,
    pub truncation_bound: f64,
}

/// Horofunction value together with its truncation bound.
pub fn horofunction_value(
    model: &Model,
    xi: &ProjectiveDirection,
    x: &Point,
    cfg: &SearchConfig,
) -> Result<HoroValue> {
    let num = log_pairing_sup(x, xi, cfg)?;
    let den = log_pairing_sup(model.base(), xi, cfg)?;
    Ok(HoroValue {
        value: num.log_sup - den.log_sup,
        truncation_bound: num.truncation_bound + den.truncation_bound,
    })
}

pub fn horofunction(model: &Model, xi: &ProjectiveDirection, x: &Point, cfg: &SearchConfig) -> Result<f64> {
    Ok(horofunction_value(model, xi, x, cfg)?.value)
}

/// c_B(g, ξ) = ψ_ξ(g⁻¹·b).
pub fn busemann_cocycle(model: &Model, g: &GroupElement, xi: &ProjectiveDirection, cfg: &SearchConfig) -> Result<f64> {
    let x = model.orbit_point_group(&g.inverse());
    horofunction(model, xi, &x, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub n: usize,
    pub distance: f64,
    pub horofunction: f64,
    pub gap: f64,
    pub truncation_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub records: Vec<ComparisonRecord>,
    pub max_gap: f64,
    pub growing: bool,
    /// ψ ≤ d + 2·truncation_bound held at every step.
    pub upper_bound_holds: bool,
}

/// Per-step gaps d(ω_n b, b) − ψ_ξ(ω_n b) along a path.
pub fn comparison_diagnostic(
    model: &Model,
    path: &SamplePath,
    xi: &ProjectiveDirection,
    cfg: &SearchConfig,
) -> Result<ComparisonReport> {
    let den = log_pairing_sup(model.base(), xi, cfg)?;
    let mut records = Vec::with_capacity(path.products().len());
    for (n, w) in path.products().iter().enumerate() {
        let x = model.orbit_point(w);
        let d = distance(&x, model.base(), cfg)?;
        let num = log_pairing_sup(&x, xi, cfg)?;
        let psi = num.log_sup - den.log_sup;
        records.push(ComparisonRecord {
            n,
            distance: d.log_sup,
            horofunction: psi,
            gap: d.log_sup - psi,
            truncation_bound: d.truncation_bound + num.truncation_bound + den.truncation_bound,
        });
    }
    Ok(summarize(records))
}

fn summarize(records: Vec<ComparisonRecord>) -> ComparisonReport {
    let max_gap = records.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
    let upper_bound_holds = records.iter().all(|r| r.horofunction <= r.distance + 2.0 * r.truncation_bound);
    let half = records.len() / 2;
    let first = records[..=half.min(records.len() - 1)].iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
    let second = records[half + 1..].iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
    let slack = 4.0 * records.iter().map(|r| r.truncation_bound).fold(0.0, f64::max);
    let growing = second > 1.1 * first.max(0.0) + slack;
    ComparisonReport { records, max_gap, growing, upper_bound_holds }
}

/// min over the path of i(ξ, α_n)/i(b, α_n), α_n the maximizing direction of
/// d(ω_n b, b), with ξ the unit representative.
pub fn condition_seq_diagnostic(
    model: &Model,
    path: &SamplePath,
    xi: &ProjectiveDirection,
    cfg: &SearchConfig,
) -> Result<f64> {
    let b = model.base();
    let mut min = f64::INFINITY;
    for w in path.products() {
        let x = model.orbit_point(w);
        let d = distance(&x, b, cfg)?;
        let a = d.argmax_direction;
        let num = (xi.u() * a.v() - xi.v() * a.u()).abs();
        let ratio = num.ln() - b.log_i_real(a.as_array());
        min = min.min(ratio.exp());
    }
    Ok(min)
}

/// |ψ_{g·ξ}(x) − (ψ_ξ(g⁻¹x) − ψ_ξ(g⁻¹b))|.
pub fn horofunction_equivariance_check(
    model: &Model,
    g: &GroupElement,
    xi: &ProjectiveDirection,
    x: &Point,
    cfg: &SearchConfig,
) -> Result<f64> {
    let gxi = xi.act(g);
    let gi = g.inverse();
    let lhs = horofunction(model, &gxi, x, cfg)?;
    let a = horofunction(model, xi, &x.act(&gi), cfg)?;
    let c = horofunction(model, xi, &model.orbit_point_group(&gi), cfg)?;
    Ok((lhs - (a - c)).abs())
}
