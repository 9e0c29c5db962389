//! PSL(2,Z) elements with exact checked arithmetic, and log-scaled real
//! matrices for products that outgrow 64-bit integers.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::slopes::ProjectiveDirection;

/// Integer matrix of determinant 1, identified with its negative; the first
/// nonzero entry is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    e: [i64; 4],
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { e: [1, 0, 0, 1] };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<GroupElement> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det != 1 {
            return Err(Error::Determinant(det));
        }
        Self::from_raw([a, b, c, d])
    }

    pub fn from_rows(m: [[i64; 2]; 2]) -> Result<GroupElement> {
        GroupElement::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    fn from_raw(e: [i64; 4]) -> Result<GroupElement> {
        let first = e.iter().copied().find(|&x| x != 0).unwrap_or(1);
        if first < 0 {
            let mut n = [0i64; 4];
            for (dst, src) in n.iter_mut().zip(e) {
                *dst = src.checked_neg().ok_or(Error::Overflow("sign canonicalization"))?;
            }
            Ok(GroupElement { e: n })
        } else {
            Ok(GroupElement { e })
        }
    }

    pub fn entries(&self) -> [[i64; 2]; 2] {
        [[self.e[0], self.e[1]], [self.e[2], self.e[3]]]
    }

    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        [
            [self.e[0] as f64, self.e[1] as f64],
            [self.e[2] as f64, self.e[3] as f64],
        ]
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        let [a, b, c, d] = self.e.map(i128::from);
        let [e, f, g, h] = other.e.map(i128::from);
        let fit = |x: i128| i64::try_from(x).map_err(|_| Error::Overflow("matrix product"));
        Self::from_raw([
            fit(a * e + b * g)?,
            fit(a * f + b * h)?,
            fit(c * e + d * g)?,
            fit(c * f + d * h)?,
        ])
    }

    pub fn inverse(&self) -> GroupElement {
        let [a, b, c, d] = self.e;
        // Entries of a canonical element are never i64::MIN after negation
        // succeeded once, except through from_raw; guard anyway.
        Self::from_raw([d, b.wrapping_neg(), c.wrapping_neg(), a]).expect("inverse of a valid element")
    }

    pub fn pow(&self, n: u32) -> Result<GroupElement> {
        let mut acc = GroupElement::IDENTITY;
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// |trace|, well defined on PSL(2,Z).
    pub fn abs_trace(&self) -> i64 {
        (self.e[0] + self.e[3]).abs()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.abs_trace() > 2
    }

    pub fn is_elliptic(&self) -> bool {
        self.abs_trace() < 2
    }

    /// Squared Frobenius norm a² + b² + c² + d².
    pub fn frobenius_sq(&self) -> f64 {
        self.e.iter().map(|&x| (x as f64) * (x as f64)).sum()
    }

    /// Larger eigenvalue modulus; 1 for non-hyperbolic elements.
    pub fn spectral_radius(&self) -> f64 {
        let t = self.abs_trace() as f64;
        if t <= 2.0 {
            1.0
        } else {
            (t + (t * t - 4.0).sqrt()) / 2.0
        }
    }

    /// Attracting and repelling eigendirections of a hyperbolic element.
    pub fn fixed_directions(&self) -> Result<(ProjectiveDirection, ProjectiveDirection)> {
        if !self.is_hyperbolic() {
            return Err(Error::NotHyperbolic(self.abs_trace()));
        }
        let [[a, b], [c, d]] = self.to_f64();
        let tr = a + d;
        let s = (tr * tr - 4.0).sqrt();
        // Eigenvalues (tr ± s)/2; the one with larger modulus attracts.
        let big = if tr > 0.0 { (tr + s) / 2.0 } else { (tr - s) / 2.0 };
        let small = 1.0 / big;
        let eig = |lam: f64| {
            let v1 = [b, lam - a];
            let v2 = [lam - d, c];
            let n1 = v1[0].hypot(v1[1]);
            let n2 = v2[0].hypot(v2[1]);
            let v = if n1 >= n2 { v1 } else { v2 };
            ProjectiveDirection::new(v[0], v[1]).expect("eigenvector of a hyperbolic matrix")
        };
        Ok((eig(big), eig(small)))
    }

    /// Möbius action on the upper half-plane.
    pub fn mobius(&self, z: Complex64) -> Complex64 {
        let [[a, b], [c, d]] = self.to_f64();
        (z * a + b) / (z * c + d)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.e[0], self.e[1], self.e[2], self.e[3])
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<GroupElement, D::Error> {
        let m = <[[i64; 2]; 2]>::deserialize(d)?;
        GroupElement::from_rows(m).map_err(serde::de::Error::custom)
    }
}

/// e^{log_scale}·m with m normalized to max-abs entry 1 and determinant
/// e^{−2·log_scale}. Keeps the exact element while it fits in i64.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marking {
    m: [[f64; 2]; 2],
    log_scale: f64,
    exact: Option<GroupElement>,
}

fn normalize(m: [[f64; 2]; 2]) -> ([[f64; 2]; 2], f64) {
    let s = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let k = 1.0 / s;
    ([[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]], s.ln())
}

impl Marking {
    pub const IDENTITY: Marking = Marking {
        m: [[1.0, 0.0], [0.0, 1.0]],
        log_scale: 0.0,
        exact: Some(GroupElement::IDENTITY),
    };

    pub fn from_group(g: &GroupElement) -> Marking {
        let (m, log_scale) = normalize(g.to_f64());
        Marking { m, log_scale, exact: Some(*g) }
    }

    pub fn exact(&self) -> Option<&GroupElement> {
        self.exact.as_ref()
    }

    pub fn normalized(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn mul(&self, other: &Marking) -> Marking {
        if let (Some(a), Some(b)) = (self.exact, other.exact) {
            if let Ok(p) = a.mul(&b) {
                return Marking::from_group(&p);
            }
        }
        let (a, b) = (self.m, other.m);
        let prod = [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ];
        let (m, s) = normalize(prod);
        Marking { m, log_scale: s + self.log_scale + other.log_scale, exact: None }
    }

    pub fn mul_group(&self, g: &GroupElement) -> Marking {
        self.mul(&Marking::from_group(g))
    }

    /// Inverse via the adjugate, so no determinant is ever formed.
    pub fn inverse(&self) -> Marking {
        if let Some(g) = self.exact {
            return Marking::from_group(&g.inverse());
        }
        let m = self.m;
        Marking {
            m: [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]],
            log_scale: self.log_scale,
            exact: None,
        }
    }

    /// Returns (w, s) with self·v = e^s·w.
    pub fn apply(&self, v: [f64; 2]) -> ([f64; 2], f64) {
        let m = self.m;
        (
            [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]],
            self.log_scale,
        )
    }

    pub fn apply_direction(&self, d: &ProjectiveDirection) -> ProjectiveDirection {
        d.transform(self.m).expect("invertible action keeps directions nonzero")
    }

    /// Log of the operator 2-norm (largest singular value).
    pub fn log_operator_norm(&self) -> f64 {
        let m = self.m;
        let f2: f64 = m.iter().flatten().map(|x| x * x).sum();
        let det = (-2.0 * self.log_scale).exp();
        // σ₁² = (‖m‖² + sqrt(‖m‖⁴ − 4 det²))/2, det of the normalized matrix.
        let disc = (f2 * f2 - 4.0 * det * det).max(0.0);
        0.5 * ((f2 + disc.sqrt()) / 2.0).ln() + self.log_scale
    }

    /// Top left-singular vector: the direction the matrix expands into.
    pub fn dominant_image_direction(&self) -> ProjectiveDirection {
        let m = self.m;
        let p = m[0][0] * m[0][0] + m[0][1] * m[0][1];
        let q = m[1][0] * m[1][0] + m[1][1] * m[1][1];
        let r = m[0][0] * m[1][0] + m[0][1] * m[1][1];
        let theta = 0.5 * (2.0 * r).atan2(p - q);
        ProjectiveDirection::from_angle(theta)
    }

    /// log|trace| of the represented matrix.
    pub fn log_abs_trace(&self) -> f64 {
        (self.m[0][0] + self.m[1][1]).abs().ln() + self.log_scale
    }

    /// Möbius action on the upper half-plane, returned as (Re, log Im) so that
    /// points extremely close to the real axis keep their imaginary part.
    pub fn mobius_log(&self, z: Complex64) -> (f64, f64) {
        let m = self.m;
        let den = z * m[1][0] + m[1][1];
        let num = z * m[0][0] + m[0][1];
        let w = num / den;
        let log_im = z.im.ln() - 2.0 * self.log_scale - 2.0 * den.norm().ln();
        (w.re, log_im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(a: i64, b: i64, c: i64, d: i64) -> GroupElement {
        GroupElement::new(a, b, c, d).unwrap()
    }

    #[test]
    fn sign_canonical() {
        let x = g(-2, -1, -1, -1);
        assert_eq!(x, g(2, 1, 1, 1));
        assert_eq!(g(0, -1, 1, 0).entries(), [[0, 1], [-1, 0]]);
        assert!(GroupElement::new(2, 0, 0, 2).is_err());
    }

    #[test]
    fn multiply_and_invert() {
        let a = g(2, 1, 1, 1);
        let b = g(1, 2, 0, 1);
        assert_eq!(a.mul(&a.inverse()).unwrap(), GroupElement::IDENTITY);
        assert_eq!(a.mul(&b).unwrap(), g(2, 5, 1, 3));
        assert_eq!(a.pow(3).unwrap(), g(13, 8, 8, 5));
    }

    #[test]
    fn overflow_is_reported() {
        let a = g(2, 1, 1, 1);
        let mut acc = GroupElement::IDENTITY;
        let mut failed = false;
        for _ in 0..200 {
            match acc.mul(&a) {
                Ok(x) => acc = x,
                Err(Error::Overflow(_)) => {
                    failed = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(failed);
    }

    #[test]
    fn eigendirections() {
        let (plus, minus) = g(2, 1, 1, 1).fixed_directions().unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let want = ProjectiveDirection::new(phi, 1.0).unwrap();
        assert!(plus.angle_to(&want) < 1e-12);
        let want = ProjectiveDirection::new(-1.0 / phi, 1.0).unwrap();
        assert!(minus.angle_to(&want) < 1e-12);
        assert!(g(1, 1, 0, 1).fixed_directions().is_err());
    }

    #[test]
    fn scaled_products_track_exact_ones() {
        let a = g(3, 1, 2, 1);
        let b = g(1, 0, 1, 1);
        let mut exact = GroupElement::IDENTITY;
        let mut scaled = Marking::IDENTITY;
        let mut float_only = Marking { exact: None, ..Marking::IDENTITY };
        for i in 0..12 {
            let s = if i % 3 == 0 { b } else { a };
            exact = exact.mul(&s).unwrap();
            scaled = scaled.mul_group(&s);
            float_only = float_only.mul(&Marking { exact: None, ..Marking::from_group(&s) });
        }
        assert_eq!(scaled.exact(), Some(&exact));
        let want = Marking::from_group(&exact);
        assert!((float_only.log_scale - want.log_scale).abs() < 1e-12);
        for r in 0..2 {
            for c in 0..2 {
                assert!((float_only.m[r][c] - want.m[r][c]).abs() < 1e-12);
            }
        }
        let inv = float_only.inverse().mul(&float_only);
        let (w, s) = inv.apply([1.0, 0.0]);
        assert!(((w[0] * s.exp()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn operator_norm_and_image_direction() {
        let a = g(2, 1, 1, 1);
        let m = Marking::from_group(&a);
        let lam = a.spectral_radius();
        assert!((m.log_operator_norm() - lam.ln()).abs() < 1e-12);
        let (plus, _) = a.fixed_directions().unwrap();
        assert!(m.dominant_image_direction().angle_to(&plus) < 1e-12);
    }

    #[test]
    fn json_shape() {
        let a = g(2, 1, 1, 1);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[[2,1],[1,1]]");
        let b: GroupElement = serde_json::from_str("[[-2,-1],[-1,-1]]").unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<GroupElement>("[[1,1],[1,1]]").is_err());
    }
}
