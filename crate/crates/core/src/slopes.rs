//! Slopes of simple closed curves on the torus, Farey enumeration and the
//! linear action of SL(2,Z).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::GroupElement;

/// Primitive integer pair with q > 0, or (1, 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slope {
    p: i64,
    q: i64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn canonicalize(p: i64, q: i64) -> Result<Slope> {
    if p == 0 && q == 0 {
        return Err(Error::NotADirection);
    }
    let g = gcd(p.unsigned_abs(), q.unsigned_abs());
    // i64::MIN / 1 would overflow on negation below, so work in i128.
    let (mut p, mut q) = (p as i128 / g as i128, q as i128 / g as i128);
    if q < 0 || (q == 0 && p < 0) {
        p = -p;
        q = -q;
    }
    let p = i64::try_from(p).map_err(|_| Error::Overflow("canonicalize"))?;
    let q = i64::try_from(q).map_err(|_| Error::Overflow("canonicalize"))?;
    Ok(Slope { p, q })
}

impl Slope {
    pub const HORIZONTAL: Slope = Slope { p: 1, q: 0 };
    pub const VERTICAL: Slope = Slope { p: 0, q: 1 };

    pub fn new(p: i64, q: i64) -> Result<Slope> {
        canonicalize(p, q)
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn height(&self) -> u64 {
        self.p.unsigned_abs().max(self.q as u64)
    }

    pub fn as_f64(&self) -> [f64; 2] {
        [self.p as f64, self.q as f64]
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Slope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Slope> {
        let bad = || Error::InvalidArgument(format!("slope must look like \"p/q\", got {s:?}"));
        let (p, q) = s.split_once('/').ok_or_else(bad)?;
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        canonicalize(p, q)
    }
}

impl Serialize for Slope {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Slope, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn intersection_number(a: Slope, b: Slope) -> u64 {
    let det = a.p as i128 * b.q as i128 - a.q as i128 * b.p as i128;
    // Both factors are bounded by 2^63, so |det| < 2^127 and fits u128; the
    // caller only ever sees values produced from i64 slopes.
    u64::try_from(det.unsigned_abs()).unwrap_or(u64::MAX)
}

pub fn act(g: &GroupElement, s: Slope) -> Result<Slope> {
    let [[a, b], [c, d]] = g.entries();
    let p = a as i128 * s.p as i128 + b as i128 * s.q as i128;
    let q = c as i128 * s.p as i128 + d as i128 * s.q as i128;
    let p = i64::try_from(p).map_err(|_| Error::Overflow("act"))?;
    let q = i64::try_from(q).map_err(|_| Error::Overflow("act"))?;
    canonicalize(p, q)
}

/// Point of the projective line, stored as a unit vector whose first nonzero
/// coordinate is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct ProjectiveDirection {
    u: f64,
    v: f64,
}

pub const NORMALIZATION_TOL: f64 = 1e-12;

impl ProjectiveDirection {
    pub fn new(u: f64, v: f64) -> Result<ProjectiveDirection> {
        if !(u.is_finite() && v.is_finite()) || (u == 0.0 && v == 0.0) {
            return Err(Error::NotADirection);
        }
        let n = u.hypot(v);
        let (mut u, mut v) = (u / n, v / n);
        if u < 0.0 || (u == 0.0 && v < 0.0) {
            u = -u;
            v = -v;
        }
        // Avoid a signed zero so equal directions compare equal.
        Ok(ProjectiveDirection { u: u + 0.0, v: v + 0.0 })
    }

    pub fn from_slope(s: Slope) -> ProjectiveDirection {
        ProjectiveDirection::new(s.p as f64, s.q as f64).expect("slopes are nonzero")
    }

    /// Direction with angle `theta` (radians) from the positive u-axis.
    pub fn from_angle(theta: f64) -> ProjectiveDirection {
        ProjectiveDirection::new(theta.cos(), theta.sin()).expect("unit vector")
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.u, self.v]
    }

    /// Endpoint u/v on the boundary of the upper half-plane (infinite for v = 0).
    pub fn boundary_point(&self) -> f64 {
        self.u / self.v
    }

    /// |u·q − v·p|: the intersection pairing with a slope.
    pub fn pairing(&self, s: Slope) -> f64 {
        (self.u * s.q as f64 - self.v * s.p as f64).abs()
    }

    /// Angle in [0, π/2] between the two projective classes.
    pub fn angle_to(&self, other: &ProjectiveDirection) -> f64 {
        let cross = self.u * other.v - self.v * other.u;
        let dot = self.u * other.u + self.v * other.v;
        cross.abs().atan2(dot.abs())
    }

    /// Linear action of a real 2×2 matrix.
    pub fn transform(&self, m: [[f64; 2]; 2]) -> Result<ProjectiveDirection> {
        ProjectiveDirection::new(
            m[0][0] * self.u + m[0][1] * self.v,
            m[1][0] * self.u + m[1][1] * self.v,
        )
    }

    pub fn act(&self, g: &GroupElement) -> ProjectiveDirection {
        self.transform(g.to_f64()).expect("invertible action keeps directions nonzero")
    }
}

impl TryFrom<[f64; 2]> for ProjectiveDirection {
    type Error = Error;

    fn try_from(a: [f64; 2]) -> Result<Self> {
        ProjectiveDirection::new(a[0], a[1])
    }
}

impl From<ProjectiveDirection> for [f64; 2] {
    fn from(d: ProjectiveDirection) -> [f64; 2] {
        [d.u, d.v]
    }
}

/// Farey triangle: two neighbouring slopes and their mediant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FareyTriangle {
    pub left: Slope,
    pub right: Slope,
    pub mediant: Slope,
}

impl FareyTriangle {
    pub fn new(left: Slope, right: Slope) -> Result<FareyTriangle> {
        if intersection_number(left, right) != 1 {
            return Err(Error::InvalidArgument(format!(
                "{left} and {right} are not Farey neighbours"
            )));
        }
        let p = left.p.checked_add(right.p).ok_or(Error::Overflow("mediant"))?;
        let q = left.q.checked_add(right.q).ok_or(Error::Overflow("mediant"))?;
        Ok(FareyTriangle { left, right, mediant: canonicalize(p, q)? })
    }

    pub fn children(&self) -> Result<[FareyTriangle; 2]> {
        Ok([
            FareyTriangle::new(self.left, self.mediant)?,
            FareyTriangle::new(self.mediant, self.right)?,
        ])
    }
}

/// Farey sequence of order n on [0, 1] as (numerator, denominator) pairs.
fn farey_unit(n: i64) -> Vec<(i64, i64)> {
    let mut out = vec![(0, 1)];
    let (mut a, mut b, mut c, mut d) = (0i64, 1i64, 1i64, n);
    while c <= n {
        out.push((c, d));
        let k = (n + b) / d;
        let (nc, nd) = (k * c - a, k * d - b);
        a = c;
        b = d;
        c = nc;
        d = nd;
    }
    out
}

/// All canonical slopes of height at most `max_height`, ordered by angle of
/// the vector (p, q) in [0, π). Consecutive entries (cyclically) are Farey
/// neighbours.
pub fn farey_enumerate(max_height: u32) -> Result<Vec<Slope>> {
    if max_height == 0 {
        return Err(Error::InvalidArgument("max_height must be at least 1".into()));
    }
    let unit = farey_unit(max_height as i64);
    let inner = &unit[1..unit.len() - 1];
    let mut out = Vec::with_capacity(4 * unit.len());
    let s = |p, q| Slope { p, q };
    out.push(s(1, 0));
    out.extend(inner.iter().map(|&(a, b)| s(b, a)));
    out.push(s(1, 1));
    out.extend(inner.iter().rev().map(|&(a, b)| s(a, b)));
    out.push(s(0, 1));
    out.extend(inner.iter().map(|&(a, b)| s(-a, b)));
    out.push(s(-1, 1));
    out.extend(inner.iter().rev().map(|&(a, b)| s(-b, a)));
    Ok(out)
}

/// Continued-fraction convergents of `d`, at most `depth` of them. For a
/// rational direction (up to the normalization tolerance) the list stops at
/// that slope.
pub fn convergents(d: &ProjectiveDirection, depth: usize) -> Result<Vec<Slope>> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let (u, v) = (d.u, d.v);
    let close = |s: Slope| {
        let (p, q) = (s.p as f64, s.q as f64);
        (u * q - v * p).abs() <= NORMALIZATION_TOL * p.hypot(q)
    };
    if v.abs() <= NORMALIZATION_TOL {
        return Ok(vec![Slope::HORIZONTAL]);
    }
    let sign: i64 = if u * v < 0.0 { -1 } else { 1 };
    let mut x = (u / v).abs();
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, 0i64, 1i64);
    let mut out = Vec::new();
    while out.len() < depth {
        let a = x.floor();
        if a > (i64::MAX / 4) as f64 {
            break;
        }
        let a = a as i64;
        let p = a
            .checked_mul(p0)
            .and_then(|t| t.checked_add(p1))
            .ok_or(Error::Overflow("convergents"))?;
        let q = a
            .checked_mul(q0)
            .and_then(|t| t.checked_add(q1))
            .ok_or(Error::Overflow("convergents"))?;
        let s = canonicalize(sign * p, q)?;
        out.push(s);
        if close(s) {
            break;
        }
        p1 = p0;
        q1 = q0;
        p0 = p;
        q0 = q;
        let frac = x - a as f64;
        if frac <= 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    Ok(out)
}
