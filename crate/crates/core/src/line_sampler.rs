//! Sampling the one-dimensional chord density of a hit-and-run step.
//!
//! Gaussian restrictions are sampled exactly as truncated normals, constant
//! restrictions as uniforms, and everything else by derivative-free adaptive
//! rejection sampling with a piecewise-exponential secant envelope.

use std::fmt;

use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::geometry::Interval;
use crate::rng::RandomStream;

/// Known closed-form shape of a line restriction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LineFamily {
    Gaussian1d { mean: f64, sd: f64 },
    Uniform,
    Generic,
}

/// Non-normalized log-concave density on an interval.
pub struct LineDensity<'a> {
    pub domain: Interval,
    pub family: LineFamily,
    log_eval: Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>,
}

impl fmt::Debug for LineDensity<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LineDensity")
            .field("domain", &self.domain)
            .field("family", &self.family)
            .finish_non_exhaustive()
    }
}

impl<'a> LineDensity<'a> {
    pub fn new(domain: Interval, family: LineFamily, log_eval: impl Fn(f64) -> f64 + Send + Sync + 'a) -> Self {
        Self { domain, family, log_eval: Box::new(log_eval) }
    }

    pub fn log_eval(&self, s: f64) -> f64 {
        (self.log_eval)(s)
    }

    /// Same density with the family tag dropped, forcing the generic path.
    pub fn into_generic(self) -> Self {
        Self { family: LineFamily::Generic, ..self }
    }
}

/// Draws one point from the normalized line density.
pub fn sample_line(ld: &LineDensity<'_>, rng: &mut RandomStream) -> Result<f64> {
    let Interval { lo, hi } = ld.domain;
    if lo == hi {
        return Ok(lo);
    }
    match ld.family {
        LineFamily::Gaussian1d { mean, sd } => Ok(truncated_normal(mean, sd, lo, hi, rng)),
        LineFamily::Uniform => {
            if !ld.domain.is_bounded() {
                return Err(Error::InvalidDensity("uniform line density on an unbounded chord".into()));
            }
            Ok((lo + (hi - lo) * rng.uniform()).clamp(lo, hi))
        }
        LineFamily::Generic => AdaptiveRejection::new(ld)?.sample(rng),
    }
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const TAIL_SWITCH: f64 = 6.0;

/// Upper tail `Q(z) = P(Z > z)`.
fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// `Q⁻¹(p)` for `p ∈ (0, 1)`.
fn upper_tail_inv(p: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * p)
}

/// Draw from N(mean, sd²) restricted to `[lo, hi]`.
pub fn truncated_normal(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut RandomStream) -> f64 {
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let z = standard_truncated_normal(a, b, rng);
    (mean + sd * z).clamp(lo, hi)
}

fn standard_truncated_normal(a: f64, b: f64, rng: &mut RandomStream) -> f64 {
    if a >= TAIL_SWITCH {
        return right_tail_rejection(a, b, rng);
    }
    if b <= -TAIL_SWITCH {
        return -right_tail_rejection(-b, -a, rng);
    }
    let u = rng.uniform_open();
    let z = if a >= 0.0 {
        // right of the mode: work with upper tails, which do not cancel
        let (qa, qb) = (upper_tail(a), upper_tail(b));
        upper_tail_inv(qa - u * (qa - qb))
    } else if b <= 0.0 {
        let (qa, qb) = (upper_tail(-b), upper_tail(-a));
        -upper_tail_inv(qa - u * (qa - qb))
    } else {
        // Φ(x) = Q(−x)
        let (pa, pb) = (upper_tail(-a), upper_tail(-b));
        -upper_tail_inv(pa + u * (pb - pa))
    };
    z.clamp(a, b)
}

/// Exponential-proposal rejection for `[a, b]` with `a` far in the right
/// tail.
fn right_tail_rejection(a: f64, b: f64, rng: &mut RandomStream) -> f64 {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    if b - a < 1.0 / rate {
        // narrow interval: uniform proposal under the bound e^{-(z²-a²)/2}
        loop {
            let z = a + (b - a) * rng.uniform();
            if rng.uniform_open().ln() <= -0.5 * (z * z - a * a) {
                return z;
            }
        }
    }
    loop {
        let z = a - rng.uniform_open().ln() / rate;
        if z > b {
            continue;
        }
        let t = z - rate;
        if rng.uniform_open().ln() <= -0.5 * t * t {
            return z;
        }
    }
}

/// Maximum number of envelope support points.
pub const MAX_HULL_POINTS: usize = 64;

#[derive(Clone, Copy, Debug)]
struct Piece {
    start: f64,
    end: f64,
    anchor: f64,
    value: f64,
    slope: f64,
    log_mass: f64,
}

impl Piece {
    fn line(&self, s: f64) -> f64 {
        self.value + self.slope * (s - self.anchor)
    }

    fn new(start: f64, end: f64, anchor: f64, value: f64, slope: f64) -> Self {
        let mut p = Piece { start, end, anchor, value, slope, log_mass: 0.0 };
        p.log_mass = p.compute_log_mass();
        p
    }

    fn compute_log_mass(&self) -> f64 {
        let len = self.end - self.start;
        if len <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let m = self.slope;
        if len.is_infinite() {
            // m points into the finite end by construction
            return if self.start.is_infinite() {
                self.line(self.end) - m.ln()
            } else {
                self.line(self.start) - (-m).ln()
            };
        }
        let t = m * len;
        if t.abs() < 1e-10 {
            return self.line(self.start) + len.ln() + 0.5 * t;
        }
        if t > 0.0 {
            self.line(self.end) + (-(-t).exp_m1()).ln() - m.ln()
        } else {
            self.line(self.start) + (-t.exp_m1()).ln() - (-m).ln()
        }
    }

    /// Inverse-CDF draw from `exp(line)` on the piece.
    fn draw(&self, v: f64) -> f64 {
        let m = self.slope;
        let len = self.end - self.start;
        let s = if m == 0.0 || (len.is_finite() && (m * len).abs() < 1e-10) {
            self.start + v * len
        } else if m > 0.0 {
            let e = if len.is_infinite() { 0.0 } else { (-m * len).exp() };
            self.end + (e + v * (1.0 - e)).ln() / m
        } else {
            let g = if len.is_infinite() { -1.0 } else { (m * len).exp_m1() };
            self.start + (v * g).ln_1p() / m
        };
        s.clamp(self.start, self.end)
    }
}

/// Derivative-free adaptive rejection sampler for a concave log-density.
///
/// The envelope on each inter-point segment is the minimum of the
/// neighbouring secants extended; outside the outermost points the outer
/// secants are extended to the domain ends.
pub struct AdaptiveRejection<'l, 'a> {
    ld: &'l LineDensity<'a>,
    xs: Vec<f64>,
    hs: Vec<f64>,
    pieces: Vec<Piece>,
    proposals: u64,
    accepted: u64,
}

impl<'l, 'a> AdaptiveRejection<'l, 'a> {
    pub fn new(ld: &'l LineDensity<'a>) -> Result<Self> {
        let Interval { lo, hi } = ld.domain;
        let h = |s: f64| ld.log_eval(s);
        let mut xs: Vec<f64>;
        if lo.is_finite() && hi.is_finite() {
            let mid = 0.5 * (lo + hi);
            let w = hi - lo;
            xs = vec![mid - 0.25 * w, mid, mid + 0.25 * w];
        } else {
            let c = if lo.is_finite() {
                lo + 1.0
            } else if hi.is_finite() {
                hi - 1.0
            } else {
                0.0
            };
            let left = if lo.is_finite() { 0.5 * (lo + c) } else { c - 1.0 };
            let right = if hi.is_finite() { 0.5 * (c + hi) } else { c + 1.0 };
            xs = vec![left, c, right];
        }
        let mut hs: Vec<f64> = xs.iter().map(|&s| h(s)).collect();
        if hs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDensity("log-density not finite at initial abscissae".into()));
        }

        if hi.is_infinite() {
            let mut tries = 0;
            while secant(&xs, &hs, xs.len() - 2) >= 0.0 {
                let n = xs.len();
                let step = 2.0 * (xs[n - 1] - xs[n - 2]);
                let next = xs[n - 1] + step;
                let hv = h(next);
                tries += 1;
                if !hv.is_finite() || tries > 60 {
                    return Err(Error::InvalidDensity("log-density not decreasing in the right tail".into()));
                }
                xs.push(next);
                hs.push(hv);
            }
        }
        if lo.is_infinite() {
            let mut tries = 0;
            while secant(&xs, &hs, 0) <= 0.0 {
                let step = 2.0 * (xs[1] - xs[0]);
                let next = xs[0] - step;
                let hv = h(next);
                tries += 1;
                if !hv.is_finite() || tries > 60 {
                    return Err(Error::InvalidDensity("log-density not decreasing in the left tail".into()));
                }
                xs.insert(0, next);
                hs.insert(0, hv);
            }
        }
        let mut ars = Self { ld, xs, hs, pieces: Vec::new(), proposals: 0, accepted: 0 };
        ars.rebuild()?;
        Ok(ars)
    }

    fn rebuild(&mut self) -> Result<()> {
        let (xs, hs) = (&self.xs, &self.hs);
        let k = xs.len();
        let Interval { lo, hi } = self.ld.domain;
        let mut pieces = Vec::with_capacity(2 * k + 2);
        let line = |i: usize| (xs[i], hs[i], secant(xs, hs, i));
        for i in 0..k - 2 {
            let (m0, m1) = (secant(xs, hs, i), secant(xs, hs, i + 1));
            if m1 > m0 + 1e-8 * (1.0 + m0.abs() + m1.abs()) {
                return Err(Error::NotLogConcave(xs[i + 1]));
            }
        }

        // left tail
        let (a, v, m) = line(0);
        pieces.push(Piece::new(lo, xs[0], a, v, m));
        for i in 0..k - 1 {
            let left = (i >= 1).then(|| line(i - 1));
            let right = (i + 2 < k).then(|| line(i + 1));
            match (left, right) {
                (Some(l), Some(r)) => {
                    // min of two lines: split at their intersection
                    let (la, lv, lm) = l;
                    let (ra, rv, rm) = r;
                    let z = if lm != rm {
                        ((rv - rm * ra) - (lv - lm * la)) / (lm - rm)
                    } else {
                        f64::NAN
                    };
                    if z.is_finite() && z > xs[i] && z < xs[i + 1] {
                        pieces.push(Piece::new(xs[i], z, la, lv, lm));
                        pieces.push(Piece::new(z, xs[i + 1], ra, rv, rm));
                    } else {
                        let mid = 0.5 * (xs[i] + xs[i + 1]);
                        let use_left = lv + lm * (mid - la) <= rv + rm * (mid - ra);
                        let (pa, pv, pm) = if use_left { l } else { r };
                        pieces.push(Piece::new(xs[i], xs[i + 1], pa, pv, pm));
                    }
                }
                (Some((pa, pv, pm)), None) | (None, Some((pa, pv, pm))) => {
                    pieces.push(Piece::new(xs[i], xs[i + 1], pa, pv, pm));
                }
                (None, None) => unreachable!("hull always has at least three points"),
            }
        }
        let (a, v, m) = line(k - 2);
        pieces.push(Piece::new(xs[k - 1], hi, a, v, m));
        if pieces.iter().any(|p| p.log_mass.is_nan() || p.log_mass == f64::INFINITY) {
            return Err(Error::InvalidDensity("envelope has infinite mass".into()));
        }
        self.pieces = pieces;
        Ok(())
    }

    fn envelope(&self, s: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| s >= p.start && s <= p.end)
            .map(|p| p.line(s))
            .unwrap_or(f64::INFINITY)
    }

    fn propose(&self, rng: &mut RandomStream) -> f64 {
        let max = self.pieces.iter().map(|p| p.log_mass).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = self.pieces.iter().map(|p| (p.log_mass - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.uniform() * total;
        let mut idx = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if target < *w {
                idx = i;
                break;
            }
            target -= w;
        }
        self.pieces[idx].draw(rng.uniform_open())
    }

    /// One exact draw; refines the envelope on rejection.
    pub fn sample(&mut self, rng: &mut RandomStream) -> Result<f64> {
        loop {
            let s = self.propose(rng);
            let env = self.envelope(s);
            let hv = self.ld.log_eval(s);
            self.proposals += 1;
            if hv > env + 1e-9 * (1.0 + hv.abs()) {
                return Err(Error::NotLogConcave(s));
            }
            if rng.uniform_open().ln() <= hv - env {
                self.accepted += 1;
                return Ok(s);
            }
            if self.xs.len() < MAX_HULL_POINTS && hv.is_finite() {
                let pos = self.xs.partition_point(|&x| x < s);
                if (pos < self.xs.len() && self.xs[pos] == s) || (pos > 0 && self.xs[pos - 1] == s) {
                    continue;
                }
                self.xs.insert(pos, s);
                self.hs.insert(pos, hv);
                self.rebuild()?;
            }
        }
    }

    pub fn hull_size(&self) -> usize {
        self.xs.len()
    }

    /// `(proposals, accepted)` since construction.
    pub fn counts(&self) -> (u64, u64) {
        (self.proposals, self.accepted)
    }

    pub fn reset_counts(&mut self) {
        self.proposals = 0;
        self.accepted = 0;
    }
}

fn secant(xs: &[f64], hs: &[f64], i: usize) -> f64 {
    (hs[i + 1] - hs[i]) / (xs[i + 1] - xs[i])
}
