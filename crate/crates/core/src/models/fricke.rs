//! Hyperbolic lengths on the once-punctured torus from Fricke trace
//! coordinates, by Farey-tree descent in log-trace space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slopes::Slope;

/// Traces of the slopes (1,0), (0,1), (1,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrickeTraces {
    x: f64,
    y: f64,
    z: f64,
    #[serde(skip, default = "default_max_depth")]
    max_depth: u64,
}

fn default_max_depth() -> u64 {
    1 << 62
}

/// Height at which real directions stop descending and interpolate.
const REAL_STOP_HEIGHT: i64 = 1 << 20;
/// Run lengths up to this are iterated; longer runs use the closed form.
const ITERATE_RUN: u64 = 64;

impl FrickeTraces {
    pub fn new(x: f64, y: f64, z: f64) -> Result<FrickeTraces> {
        if !(x > 2.0 && y > 2.0 && z > 2.0) || !(x * y * z).is_finite() {
            return Err(Error::InvalidPoint(format!("traces ({x}, {y}, {z}) must all exceed 2")));
        }
        let lhs = x * x + y * y + z * z;
        let rhs = x * y * z;
        if (lhs - rhs).abs() > 1e-9 * rhs {
            return Err(Error::InvalidPoint(format!(
                "traces ({x}, {y}, {z}) violate x²+y²+z² = xyz (residual {:e})",
                lhs - rhs
            )));
        }
        Ok(FrickeTraces { x, y, z, max_depth: default_max_depth() })
    }

    /// The symmetric point (3,3,3), fixed by the order-three element [[0,-1],[1,-1]].
    pub fn hexagonal() -> FrickeTraces {
        FrickeTraces::new(3.0, 3.0, 3.0).expect("valid")
    }

    /// The square point (2√2, 2√2, 4), fixed by [[0,-1],[1,0]].
    pub fn square() -> FrickeTraces {
        let r = 8f64.sqrt();
        FrickeTraces::new(r, r, 4.0).expect("valid")
    }

    /// Solve the relation for z; `larger` picks the root with z > xy/2.
    pub fn from_xy(x: f64, y: f64, larger: bool) -> Result<FrickeTraces> {
        let disc = x * x * y * y - 4.0 * (x * x + y * y);
        if disc < 0.0 {
            return Err(Error::InvalidPoint(format!("no real z for x={x}, y={y}")));
        }
        let s = disc.sqrt();
        let z = if larger { (x * y + s) / 2.0 } else { (x * y - s) / 2.0 };
        FrickeTraces::new(x, y, z)
    }

    pub fn with_max_depth(mut self, max_depth: u64) -> FrickeTraces {
        self.max_depth = max_depth;
        self
    }

    pub fn traces(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Starting edge for a direction strictly inside the open cone of
    /// positive (sign > 0) or negative (sign < 0) slopes: (l, r, log traces of
    /// l, r and the opposite vertex l − r).
    fn start(&self, positive: bool) -> ([i64; 2], [i64; 2], f64, f64, f64) {
        let (lx, ly) = (self.x.ln(), self.y.ln());
        let lw = (self.x * self.y - self.z).ln();
        if positive {
            ([1, 0], [0, 1], lx, ly, lw)
        } else {
            ([0, 1], [-1, 0], ly, lx, self.z.ln())
        }
    }

    /// log of the trace of a slope.
    pub fn log_trace(&self, s: Slope) -> Result<f64> {
        let (p, q) = (s.p() as i128, s.q() as i128);
        if q == 0 {
            return Ok(self.x.ln());
        }
        if p == 0 {
            return Ok(self.y.ln());
        }
        if p == q {
            return Ok(self.z.ln());
        }
        if p == -q {
            return Ok((self.x * self.y - self.z).ln());
        }
        let (l, r, mut lt_l, mut lt_r, mut lt_o) = self.start(p > 0);
        // a = cross(l, v), b = −cross(r, v); both stay positive until a hit.
        let cross = |w: [i64; 2]| w[0] as i128 * q - w[1] as i128 * p;
        let (mut a, mut b) = (cross(l), -cross(r));
        let mut depth: u64 = 0;
        loop {
            if a == b {
                return Ok(markoff(lt_l, lt_r, lt_o));
            }
            if a > b {
                let j = ((a - 1) / b) as u64;
                depth = depth.saturating_add(j);
                if depth > self.max_depth {
                    return Err(Error::SlopeTooDeep { max_depth: self.max_depth });
                }
                let (new, prev) = run(lt_l, lt_o, lt_r, j);
                lt_l = new;
                lt_o = prev;
                a -= j as i128 * b;
            } else {
                let j = ((b - 1) / a) as u64;
                depth = depth.saturating_add(j);
                if depth > self.max_depth {
                    return Err(Error::SlopeTooDeep { max_depth: self.max_depth });
                }
                let (new, prev) = run(lt_r, lt_o, lt_l, j);
                lt_r = new;
                lt_o = prev;
                b -= j as i128 * a;
            }
        }
    }

    /// Hyperbolic length 2·arccosh(t/2) of the geodesic in slope `s`.
    pub fn length(&self, s: Slope) -> Result<f64> {
        Ok(length_from_log_trace(self.log_trace(s)?))
    }

    pub fn log_length(&self, s: Slope) -> Result<f64> {
        Ok(self.length(s)?.ln())
    }

    /// log of the length norm at a real vector: the homogeneous extension of
    /// slope lengths to measured laminations.
    pub fn log_length_vec(&self, v: [f64; 2]) -> f64 {
        let (mut vx, mut vy) = (v[0], v[1]);
        if vy < 0.0 || (vy == 0.0 && vx < 0.0) {
            vx = -vx;
            vy = -vy;
        }
        if vy == 0.0 {
            return vx.ln() + length_from_log_trace(self.x.ln()).ln();
        }
        if vx == 0.0 {
            return vy.ln() + length_from_log_trace(self.y.ln()).ln();
        }
        let (mut l, mut r, mut lt_l, mut lt_r, mut lt_o) = self.start(vx > 0.0);
        let w = [vx, vy];
        loop {
            let a = cross_exact(l, w);
            let b = -cross_exact(r, w);
            if a <= 0.0 || b <= 0.0 || l_inf(l).max(l_inf(r)) >= REAL_STOP_HEIGHT {
                let len_l = length_from_log_trace(lt_l);
                let len_r = length_from_log_trace(lt_r);
                return (b.max(0.0) * len_l + a.max(0.0) * len_r).ln();
            }
            if a == b {
                return a.ln() + length_from_log_trace(markoff(lt_l, lt_r, lt_o)).ln();
            }
            if a > b {
                let cap = (REAL_STOP_HEIGHT / l_inf(r)).max(1) as f64;
                let j = ((a / b).ceil() - 1.0).clamp(1.0, cap) as i64;
                let (new, prev) = run(lt_l, lt_o, lt_r, j as u64);
                lt_l = new;
                lt_o = prev;
                l = [l[0] + j * r[0], l[1] + j * r[1]];
            } else {
                let cap = (REAL_STOP_HEIGHT / l_inf(l)).max(1) as f64;
                let j = ((b / a).ceil() - 1.0).clamp(1.0, cap) as i64;
                let (new, prev) = run(lt_r, lt_o, lt_l, j as u64);
                lt_r = new;
                lt_o = prev;
                r = [r[0] + j * l[0], r[1] + j * l[1]];
            }
        }
    }
}

fn l_inf(v: [i64; 2]) -> i64 {
    v[0].abs().max(v[1].abs())
}

/// cross(m, w) = m.x·w.y − m.y·w.x for an integer m of moderate size,
/// using error-free products so cancellation does not lose accuracy.
pub(crate) fn cross_exact(m: [i64; 2], w: [f64; 2]) -> f64 {
    let (a, b) = (m[0] as f64, m[1] as f64);
    let p = a * w[1];
    let pe = a.mul_add(w[1], -p);
    let q = b * w[0];
    let qe = b.mul_add(w[0], -q);
    (p - q) + (pe - qe)
}

/// Markoff move in log space: log(t_a·t_b − t_o).
fn markoff(lt_a: f64, lt_b: f64, lt_o: f64) -> f64 {
    lt_a + lt_b + (-(lt_o - lt_a - lt_b).exp()).ln_1p()
}

/// log arccosh-parameter λ with λ + 1/λ = t, from lt = log t.
fn log_lambda(lt: f64) -> f64 {
    if lt > 20.0 {
        lt + ((1.0 + (1.0 - 4.0 * (-2.0 * lt).exp()).sqrt()) / 2.0).ln()
    } else {
        (lt.exp() / 2.0).acosh()
    }
}

/// Walk j steps along s_{k+1} = t·s_k − s_{k−1} from (s_0, s_{−1}), all in
/// log space; returns (log s_j, log s_{j−1}).
fn run(lt0: f64, lt_prev: f64, lt_step: f64, j: u64) -> (f64, f64) {
    if j <= ITERATE_RUN {
        return iterate(lt0, lt_prev, lt_step, j);
    }
    let ll = log_lambda(lt_step);
    let x = (lt_prev - lt0 - ll).exp();
    if x >= 1.0 || ll <= 0.0 {
        return iterate(lt0, lt_prev, lt_step, j);
    }
    let y = (-2.0 * ll).exp();
    let log_a = lt0 + (-x).ln_1p() - (-y).ln_1p();
    let b_over_a = (x - y) / (1.0 - x);
    let at = |k: f64| log_a + k * ll + (b_over_a * (-2.0 * k * ll).exp()).ln_1p();
    (at(j as f64), at((j - 1) as f64))
}

fn iterate(lt0: f64, lt_prev: f64, lt_step: f64, j: u64) -> (f64, f64) {
    let (mut prev, mut cur) = (lt_prev, lt0);
    for _ in 0..j {
        let next = markoff(cur, lt_step, prev);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// 2·arccosh(t/2) from log t.
pub fn length_from_log_trace(lt: f64) -> f64 {
    if lt > 20.0 {
        2.0 * log_lambda(lt)
    } else {
        2.0 * (lt.exp() / 2.0).acosh()
    }
}
