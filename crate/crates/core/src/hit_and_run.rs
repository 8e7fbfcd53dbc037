//! The hit-and-run Markov chain.
//!
//! One step from `x`: draw a direction `u` uniformly on the unit sphere,
//! restrict ρ to the chord `{x + s u} ∩ K`, and move to a point drawn from
//! that one-dimensional density.

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::geometry::unit_sphere_log_area;
use crate::line_sampler::{sample_line, LineFamily};
use crate::linalg::norm;
use crate::quadrature::integrate;
use crate::rng::RandomStream;

/// Relative inward offset applied when a step lands on the chord ends.
const BOUNDARY_NUDGE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub step_index: u64,
}

/// Uniform direction on the unit sphere in ℝ^d (normalized Gaussian vector).
pub fn sample_direction(d: usize, rng: &mut RandomStream) -> Vec<f64> {
    assert!(d >= 1, "dimension must be positive");
    loop {
        let mut u: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let n = norm(&u);
        if n > 1e-150 && n.is_finite() {
            u.iter_mut().for_each(|v| *v /= n);
            return u;
        }
    }
}

/// One hit-and-run transition.
pub fn har_step(rho: &Density, x: &[f64], rng: &mut RandomStream) -> Result<Vec<f64>> {
    let u = sample_direction(rho.dim(), rng);
    let ld = rho.restrict_to_line(x, &u)?;
    let mut alpha = sample_line(&ld, rng)?;
    if ld.domain.is_bounded() {
        let margin = BOUNDARY_NUDGE * ld.domain.length();
        let (lo, hi) = (ld.domain.lo + margin, ld.domain.hi - margin);
        if lo < hi {
            alpha = alpha.clamp(lo, hi);
        }
    }
    Ok(x.iter().zip(&u).map(|(xi, ui)| xi + alpha * ui).collect())
}

/// Applies `n0` transitions starting from `x0`.
pub fn run_chain(rho: &Density, x0: &[f64], n0: u64, rng: &mut RandomStream) -> Result<ChainState> {
    if !rho.support().contains(x0)? {
        return Err(Error::OutsideBody);
    }
    let mut x = x0.to_vec();
    for _ in 0..n0 {
        x = har_step(rho, &x, rng)?;
    }
    Ok(ChainState { x, step_index: n0 })
}

/// Iterator over successive chain states (excluding the start).
pub struct Trajectory<'a> {
    rho: &'a Density,
    x: Vec<f64>,
    rng: &'a mut RandomStream,
}

impl<'a> Trajectory<'a> {
    pub fn new(rho: &'a Density, x0: Vec<f64>, rng: &'a mut RandomStream) -> Self {
        Self { rho, x: x0, rng }
    }
}

impl Iterator for Trajectory<'_> {
    type Item = Result<Vec<f64>>;

    fn next(&mut self) -> Option<Self::Item> {
        match har_step(self.rho, &self.x, self.rng) {
            Ok(y) => {
                self.x.clone_from(&y);
                Some(Ok(y))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

/// Log of the transition density of the kernel at `(x, y)`:
///
/// `h(x, y) = 2 ρ(y) / (vol_{d−1}(∂B_d) · ℓ(x, y) · |x − y|^{d−1})`
///
/// where `ℓ(x, y)` is the integral of ρ over the chord through x and y with
/// respect to arc length. ℓ is computed by adaptive quadrature, so this is
/// for validation only and far too slow for sampling.
pub fn transition_log_density(rho: &Density, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = rho.dim();
    let support = rho.support();
    if !support.contains(x)? || !support.contains(y)? {
        return Err(Error::OutsideBody);
    }
    let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let dist = norm(&diff);
    if dist == 0.0 {
        return Err(Error::InvalidArgument("transition density is singular at x = y".into()));
    }
    let u: Vec<f64> = diff.iter().map(|v| v / dist).collect();
    let ld = rho.restrict_to_line(x, &u)?;
    let (center, scale) = match ld.family {
        LineFamily::Gaussian1d { mean, sd } => (mean, sd),
        _ => (0.0, 1.0),
    };
    let h_ref = ld.log_eval(center.clamp(ld.domain.lo, ld.domain.hi)).max(ld.log_eval(0.0));
    let f = |s: f64| {
        let v = ld.log_eval(s) - h_ref;
        if v.is_nan() { 0.0 } else { v.exp() }
    };
    let chord_mass = integrate(&f, ld.domain.lo, ld.domain.hi, center, scale, 1e-10, 0.0)?;
    if !(chord_mass > 0.0) {
        return Err(Error::NoConvergence("chord integral vanished".into()));
    }
    let log_ell = h_ref + chord_mass.ln();
    Ok(std::f64::consts::LN_2 - unit_sphere_log_area(d) + rho.log_density(y)?
        - log_ell
        - (d as f64 - 1.0) * dist.ln())
}
