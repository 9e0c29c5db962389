//! Marked points of the two ratio-metric models and the distance sup.
//!
//! A point is a base structure together with a marking M; its length function
//! is i(x, α) = N(M⁻¹α) where N is the base structure's length norm. For the
//! flat torus N(p,q) = |p − qτ|/√Im τ (square root of extremal length); for
//! the punctured torus N is hyperbolic length computed from Fricke traces.

pub mod fricke;
pub mod search;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, Marking};
use crate::slopes::{act, ProjectiveDirection, Slope};

pub use fricke::FrickeTraces;
pub use search::{maximize, sweep_max, SearchConfig, SearchOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Flat,
    Fricke,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Flat => write!(f, "flat"),
            ModelKind::Fricke => write!(f, "fricke"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatTorusPoint {
    tau: Complex64,
    marking: Marking,
}

impl FlatTorusPoint {
    pub fn new(tau: Complex64, marking: Marking) -> Result<FlatTorusPoint> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::InvalidPoint(format!("tau = {tau} must lie in the upper half-plane")));
        }
        Ok(FlatTorusPoint { tau, marking })
    }

    pub fn at(tau: Complex64) -> Result<FlatTorusPoint> {
        FlatTorusPoint::new(tau, Marking::IDENTITY)
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    /// log N_τ(v) = log|v₀ − v₁τ| − ½·log Im τ, for any real vector.
    pub fn log_norm(&self, v: [f64; 2]) -> f64 {
        (v[0] - v[1] * self.tau.re).hypot(v[1] * self.tau.im).ln() - 0.5 * self.tau.im.ln()
    }

    /// The point M·τ of the upper half-plane as (Re, log Im).
    pub fn resolved_log(&self) -> (f64, f64) {
        match self.marking.exact() {
            Some(g) => {
                let w = g.mobius(self.tau);
                (w.re, w.im.ln())
            }
            None => self.marking.mobius_log(self.tau),
        }
    }

    pub fn resolved(&self) -> Complex64 {
        let (re, lim) = self.resolved_log();
        Complex64::new(re, lim.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrickePoint {
    traces: FrickeTraces,
    marking: Marking,
}

impl FrickePoint {
    pub fn new(traces: FrickeTraces, marking: Marking) -> FrickePoint {
        FrickePoint { traces, marking }
    }

    pub fn at(traces: FrickeTraces) -> FrickePoint {
        FrickePoint::new(traces, Marking::IDENTITY)
    }

    pub fn traces(&self) -> &FrickeTraces {
        &self.traces
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Flat(FlatTorusPoint),
    Fricke(FrickePoint),
}

impl From<FlatTorusPoint> for Point {
    fn from(p: FlatTorusPoint) -> Point {
        Point::Flat(p)
    }
}

impl From<FrickePoint> for Point {
    fn from(p: FrickePoint) -> Point {
        Point::Fricke(p)
    }
}

impl Point {
    pub fn kind(&self) -> ModelKind {
        match self {
            Point::Flat(_) => ModelKind::Flat,
            Point::Fricke(_) => ModelKind::Fricke,
        }
    }

    pub fn marking(&self) -> &Marking {
        match self {
            Point::Flat(p) => &p.marking,
            Point::Fricke(p) => &p.marking,
        }
    }

    pub fn with_marking(&self, marking: Marking) -> Point {
        match *self {
            Point::Flat(p) => Point::Flat(FlatTorusPoint { marking, ..p }),
            Point::Fricke(p) => Point::Fricke(FrickePoint { marking, ..p }),
        }
    }

    /// g·x: the marking becomes g·M.
    pub fn act(&self, g: &GroupElement) -> Point {
        self.act_marking(&Marking::from_group(g))
    }

    pub fn act_marking(&self, g: &Marking) -> Point {
        self.with_marking(g.mul(self.marking()))
    }

    /// log of the base structure's length norm at a real vector (no marking).
    pub fn log_norm(&self, v: [f64; 2]) -> f64 {
        match self {
            Point::Flat(p) => p.log_norm(v),
            Point::Fricke(p) => p.traces.log_length_vec(v),
        }
    }

    /// log of the base structure's length at an exact slope (no marking).
    pub fn log_norm_slope(&self, s: Slope) -> Result<f64> {
        match self {
            Point::Flat(p) => Ok(p.log_norm(s.as_f64())),
            Point::Fricke(p) => p.traces.log_length(s),
        }
    }

    /// log i(x, s), pulling s back through the marking.
    pub fn log_i(&self, s: Slope) -> Result<f64> {
        let inv = self.marking().inverse();
        if let Some(g) = inv.exact() {
            if let Ok(t) = act(g, s) {
                return self.log_norm_slope(t);
            }
        }
        let (w, ls) = inv.apply(s.as_f64());
        Ok(ls + self.log_norm(w))
    }

    /// log i(x, v) for a real vector v.
    pub fn log_i_real(&self, v: [f64; 2]) -> f64 {
        let (w, ls) = self.marking().inverse().apply(v);
        ls + self.log_norm(w)
    }
}

pub fn flat_log_i(x: &FlatTorusPoint, s: Slope) -> f64 {
    Point::Flat(*x).log_i(s).expect("flat evaluation never fails")
}

pub fn fricke_log_i(x: &FrickePoint, s: Slope) -> Result<f64> {
    Point::Fricke(*x).log_i(s)
}

/// Resolved action: the returned point is g·(M·τ) with identity marking.
pub fn mobius_apply(g: &GroupElement, x: &FlatTorusPoint) -> FlatTorusPoint {
    let z = g.mobius(x.resolved());
    FlatTorusPoint { tau: z, marking: Marking::IDENTITY }
}

/// A model is its base point b; orbit points are g·b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    base: Point,
}

impl Model {
    pub fn flat() -> Model {
        Model { base: Point::Flat(FlatTorusPoint::at(Complex64::new(0.0, 1.0)).expect("i is valid")) }
    }

    pub fn fricke() -> Model {
        Model { base: Point::Fricke(FrickePoint::at(FrickeTraces::hexagonal())) }
    }

    pub fn with_base(base: Point) -> Model {
        Model { base }
    }

    pub fn kind(&self) -> ModelKind {
        self.base.kind()
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn orbit_point(&self, g: &Marking) -> Point {
        self.base.act_marking(g)
    }

    pub fn orbit_point_group(&self, g: &GroupElement) -> Point {
        self.base.act(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupResult {
    pub log_sup: f64,
    /// Maximizing slope, when it is representable as an exact slope.
    pub argmax: Option<Slope>,
    /// Maximizing direction in the original frame.
    pub argmax_direction: ProjectiveDirection,
    /// Maximizing slope in the source point's frame (α = M_x·witness).
    pub witness: Slope,
    pub truncation_bound: f64,
    pub stabilized: bool,
}

fn check_same_model(x: &Point, y: &Point) -> Result<()> {
    if x.kind() != y.kind() {
        return Err(Error::ModelMismatch);
    }
    Ok(())
}

/// d(x, y) = log sup_α i(y, α)/i(x, α), searched in x's frame.
pub fn distance(x: &Point, y: &Point, cfg: &SearchConfig) -> Result<SupResult> {
    check_same_model(x, y)?;
    let k = y.marking().inverse().mul(x.marking());
    let km = k.normalized();
    let ks = k.log_scale();
    let kx = k.exact().copied();
    let out = maximize(cfg, |t: Slope| {
        if let Some(ke) = &kx {
            if let Ok(u) = act(ke, t) {
                return Ok(y.log_norm_slope(u)? - x.log_norm_slope(t)?);
            }
        }
        let (p, q) = (t.p() as f64, t.q() as f64);
        let w = [km[0][0] * p + km[0][1] * q, km[1][0] * p + km[1][1] * q];
        Ok(ks + y.log_norm(w) - x.log_norm_slope(t)?)
    })?;
    let mx = x.marking();
    let argmax = mx.exact().and_then(|g| act(g, out.witness).ok());
    let argmax_direction = mx.apply_direction(&ProjectiveDirection::from_slope(out.witness));
    let mut tb = out.truncation_bound();
    if let (Point::Flat(a), Point::Flat(b)) = (x, y) {
        tb += (hyperbolic_oracle(a, b) - out.value).abs();
    }
    Ok(SupResult {
        log_sup: out.value,
        argmax,
        argmax_direction,
        witness: out.witness,
        truncation_bound: tb,
        stabilized: out.stabilized,
    })
}

/// arccosh(1 + e^{lx}), stable for large and tiny arguments.
fn acosh_one_plus_exp(lx: f64) -> f64 {
    if lx > 30.0 {
        lx + std::f64::consts::LN_2
    } else {
        let x = lx.exp();
        (x + (x * x + 2.0 * x).sqrt()).ln_1p()
    }
}

/// Half the hyperbolic distance between the resolved points M_x·τ_x and
/// M_y·τ_y, computed as d_H(τ_x, M_x⁻¹M_y·τ_y).
pub fn hyperbolic_oracle(x: &FlatTorusPoint, y: &FlatTorusPoint) -> f64 {
    let rel = x.marking.inverse().mul(&y.marking);
    let moved = FlatTorusPoint { tau: y.tau, marking: rel };
    let (wr, wli) = moved.resolved_log();
    let z = x.tau;
    let dx = z.re - wr;
    let dy = z.im - wli.exp();
    let num = dx * dx + dy * dy;
    if num == 0.0 {
        return 0.0;
    }
    let lx = num.ln() - std::f64::consts::LN_2 - z.im.ln() - wli;
    0.5 * acosh_one_plus_exp(lx)
}

/// log λ(g) for |trace| > 2, else 0. The same in both models.
pub fn translation_length(g: &GroupElement) -> f64 {
    g.spectral_radius().ln()
}
