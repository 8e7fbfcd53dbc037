//! Tensor Gauss–Legendre cubature of `∫ f ρ` and `∫ ρ` over a body of
//! dimension at most 3.
//!
//! Balls are integrated in polar or spherical coordinates, boxes directly,
//! polytopes on their bounding box with an indicator mask. A Gaussian on
//! the full space is integrated over its ±8 sd box.

use rayon::prelude::*;

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::quadrature::{gauss_legendre, CompensatedSum};

/// Gauss–Legendre points per panel.
const PANEL_ORDER: usize = 16;
/// Refinement levels; level k uses 2^(k−1) panels per axis.
pub const MAX_LEVELS: u32 = 12;
/// Node budget per level.
const MAX_NODES: usize = 1 << 25;
/// Half-width of the Gaussian integration box in standard deviations.
const GAUSSIAN_BOX_SDS: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubatureResult {
    /// `∫ f ρ / ∫ ρ`.
    pub expectation: f64,
    /// `ln ∫ ρ`.
    pub log_mass: f64,
    /// Refinement level at which both quantities settled.
    pub level: u32,
}

#[derive(Clone, Debug)]
enum Chart {
    Cartesian,
    Polar { center: Vec<f64>, radius: f64 },
}

impl Chart {
    fn place(&self, t: &[f64]) -> (Vec<f64>, f64) {
        match self {
            Chart::Cartesian => (t.to_vec(), 1.0),
            Chart::Polar { center, radius: _ } => match t.len() {
                1 => (vec![center[0] + t[0]], 1.0),
                2 => {
                    let (s, c) = t[1].sin_cos();
                    (vec![center[0] + t[0] * c, center[1] + t[0] * s], t[0])
                }
                _ => {
                    let (sp, cp) = t[1].sin_cos();
                    let (st, ct) = t[2].sin_cos();
                    (
                        vec![
                            center[0] + t[0] * sp * ct,
                            center[1] + t[0] * sp * st,
                            center[2] + t[0] * cp,
                        ],
                        t[0] * t[0] * sp,
                    )
                }
            },
        }
    }

    fn ranges(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Chart::Cartesian => unreachable!(),
            Chart::Polar { center, radius } => match center.len() {
                1 => (vec![-radius], vec![*radius]),
                2 => (vec![0.0, 0.0], vec![*radius, std::f64::consts::TAU]),
                _ => (vec![0.0, 0.0, 0.0], vec![*radius, std::f64::consts::PI, std::f64::consts::TAU]),
            },
        }
    }
}

fn region(rho: &Density, body: &ConvexBody) -> Result<(Chart, Vec<f64>, Vec<f64>)> {
    let d = body.dim();
    if d == 0 || d > 3 {
        return Err(Error::InvalidArgument(format!("cubature needs 1 ≤ d ≤ 3, got {d}")));
    }
    if rho.dim() != d {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: d });
    }
    match body {
        ConvexBody::Ball { center, radius } => {
            let chart = Chart::Polar { center: center.clone(), radius: *radius };
            let (lo, hi) = chart.ranges();
            Ok((chart, lo, hi))
        }
        ConvexBody::Box { lo, hi } => Ok((Chart::Cartesian, lo.clone(), hi.clone())),
        ConvexBody::Polytope(_) => {
            let (lo, hi) = body
                .bounding_box()
                .ok_or_else(|| Error::InvalidBody("polytope has no bounding box".into()))?;
            Ok((Chart::Cartesian, lo, hi))
        }
        ConvexBody::FullSpace { .. } => match rho {
            Density::Gaussian { factor, .. } => {
                let sigma = factor.covariance();
                let half: Vec<f64> = (0..d).map(|i| GAUSSIAN_BOX_SDS * sigma[i][i].sqrt()).collect();
                Ok((Chart::Cartesian, half.iter().map(|h| -h).collect(), half))
            }
            _ => Err(Error::InvalidArgument("cubature over fullspace needs a Gaussian density".into())),
        },
    }
}

fn axis_rule(lo: f64, hi: f64, panels: usize, base: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    let h = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (x, w) in base.0.iter().zip(&base.1) {
            out.push((a + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

struct Level {
    weighted_f: f64,
    weighted: f64,
}

fn evaluate(
    rho: &Density,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    body: &ConvexBody,
    chart: &Chart,
    axes: &[Vec<(f64, f64)>],
    log_ref: f64,
) -> Result<Level> {
    let d = axes.len();
    let inner: usize = axes[1..].iter().map(Vec::len).product();
    let slices: Vec<(f64, f64)> = axes[0]
        .par_iter()
        .map(|&(t0, w0)| {
            let mut num = CompensatedSum::new();
            let mut den = CompensatedSum::new();
            let mut t = vec![t0; d];
            for k in 0..inner {
                let mut rest = k;
                let mut w = w0;
                for a in (1..d).rev() {
                    let (ta, wa) = axes[a][rest % axes[a].len()];
                    rest /= axes[a].len();
                    t[a] = ta;
                    w *= wa;
                }
                let (x, jac) = chart.place(&t);
                if !body.contains(&x)? {
                    continue;
                }
                let lr = rho.log_density(&x)?;
                if lr == f64::NEG_INFINITY {
                    continue;
                }
                let m = w * jac * (lr - log_ref).exp();
                den.add(m);
                num.add(m * f(&x));
            }
            Ok((num.value(), den.value()))
        })
        .collect::<Result<_>>()?;
    Ok(Level {
        weighted_f: slices.iter().map(|s| s.0).collect::<CompensatedSum>().value(),
        weighted: slices.iter().map(|s| s.1).collect::<CompensatedSum>().value(),
    })
}

/// Refines until successive levels agree: the expectation to
/// `tol·max(1, |A|)` and the mass to `tol` relative.
pub fn cubature(
    rho: &Density,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    body: &ConvexBody,
    tol: f64,
) -> Result<CubatureResult> {
    let (chart, lo, hi) = region(rho, body)?;
    let d = lo.len();
    let base = gauss_legendre(PANEL_ORDER);

    // reference log-density from the coarsest grid, to keep exp() in range
    let coarse: Vec<Vec<(f64, f64)>> = (0..d).map(|i| axis_rule(lo[i], hi[i], 1, &base)).collect();
    let mut log_ref = f64::NEG_INFINITY;
    for k in 0..PANEL_ORDER.pow(d as u32) {
        let t: Vec<f64> = (0..d).map(|a| coarse[a][(k / PANEL_ORDER.pow(a as u32)) % PANEL_ORDER].0).collect();
        let (x, _) = chart.place(&t);
        if body.contains(&x)? {
            log_ref = log_ref.max(rho.log_density(&x)?);
        }
    }
    if !log_ref.is_finite() {
        log_ref = 0.0;
    }

    let mut prev: Option<(f64, f64)> = None;
    for level in 1..=MAX_LEVELS {
        let panels = 1usize << (level - 1);
        if (panels * PANEL_ORDER).pow(d as u32) > MAX_NODES {
            break;
        }
        let axes: Vec<Vec<(f64, f64)>> = (0..d).map(|i| axis_rule(lo[i], hi[i], panels, &base)).collect();
        let lv = evaluate(rho, f, body, &chart, &axes, log_ref)?;
        if !(lv.weighted > 0.0) {
            prev = None;
            continue;
        }
        let a = lv.weighted_f / lv.weighted;
        let mass = lv.weighted;
        if let Some((pa, pm)) = prev {
            if (a - pa).abs() <= tol * a.abs().max(1.0) && (mass - pm).abs() <= tol * mass {
                return Ok(CubatureResult { expectation: a, log_mass: log_ref + mass.ln(), level });
            }
        }
        prev = Some((a, mass));
    }
    Err(Error::NoConvergence(format!("cubature did not settle within {MAX_LEVELS} levels")))
}
