//! Independent oracles for the sampler and the class conditions at d ≤ 3.

mod cubature;
mod suite;

pub use cubature::{cubature, CubatureResult, MAX_LEVELS};
pub use suite::{detailed_balance_gap, kernel_mass_2d, mixing_tv, normal_cdf, run_suite, stationarity_statistic};

use serde::Serialize;

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{symmetric_eigenvalues, LowerTriangular};
use crate::rng::RandomStream;
use crate::special::r_star;

/// Default histogram resolution per axis for [`empirical_tv`].
pub const DEFAULT_TV_BINS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
            detail: detail.into(),
        }
    }
}

/// `∫ f ρ / ∫ ρ` over `body` by refined tensor Gauss–Legendre cubature.
pub fn quadrature_expectation(
    rho: &Density,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    body: &ConvexBody,
) -> Result<f64> {
    Ok(cubature(rho, f, body, 1e-6)?.expectation)
}

/// Candidate minimizers of a log-concave density over G: the extreme
/// points of G (a sphere grid for balls, vertices otherwise), pulled
/// inward by a relative 1e-12.
fn extreme_points(g: &ConvexBody) -> Result<Vec<Vec<f64>>> {
    let shrink = |p: Vec<f64>, c: &[f64]| -> Vec<f64> {
        p.iter().zip(c).map(|(x, ci)| ci + (x - ci) * (1.0 - 1e-12)).collect()
    };
    Ok(match g {
        ConvexBody::Ball { center, radius } => sphere_grid(center.len())
            .into_iter()
            .map(|u| shrink(center.iter().zip(&u).map(|(c, ui)| c + radius * ui).collect(), center))
            .collect(),
        ConvexBody::Box { lo, hi } => {
            let d = lo.len();
            let c: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
            (0..1usize << d)
                .map(|m| shrink((0..d).map(|i| if m >> i & 1 == 1 { hi[i] } else { lo[i] }).collect(), &c))
                .collect()
        }
        ConvexBody::Polytope(p) => {
            let c = p.interior_point().to_vec();
            p.vertices()?.into_iter().map(|v| shrink(v, &c)).collect()
        }
        ConvexBody::FullSpace { .. } => return Err(Error::InvalidBody("G must be bounded".into())),
    })
}

fn sphere_point(angles: &[f64]) -> Vec<f64> {
    match angles.len() {
        0 => vec![1.0],
        1 => vec![angles[0].cos(), angles[0].sin()],
        _ => {
            let (sp, cp) = angles[0].sin_cos();
            let (st, ct) = angles[1].sin_cos();
            vec![sp * ct, sp * st, cp]
        }
    }
}

fn sphere_grid(d: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::{PI, TAU};
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..3600).map(|k| sphere_point(&[TAU * k as f64 / 3600.0])).collect(),
        _ => {
            let mut out = Vec::new();
            for i in 0..=90 {
                for j in 0..180 {
                    out.push(sphere_point(&[PI * i as f64 / 90.0, TAU * j as f64 / 180.0]));
                }
            }
            out
        }
    }
}

/// `min_G log ρ` by grid search over the extreme points of G, refined by
/// compass search in angle space for balls.
fn log_inf_over(rho: &Density, g: &ConvexBody) -> Result<f64> {
    let pts = extreme_points(g)?;
    let mut best = f64::INFINITY;
    let mut best_pt = pts[0].clone();
    for p in &pts {
        let v = rho.log_density(p)?;
        if v < best {
            best = v;
            best_pt = p.clone();
        }
    }
    if let ConvexBody::Ball { center, radius } = g {
        let d = center.len();
        if d >= 2 {
            let r = radius * (1.0 - 1e-12);
            let at = |ang: &[f64]| -> Result<f64> {
                let u = sphere_point(ang);
                let x: Vec<f64> = center.iter().zip(&u).map(|(c, ui)| c + r * ui).collect();
                rho.log_density(&x)
            };
            let u: Vec<f64> = best_pt.iter().zip(center).map(|(x, c)| (x - c) / r).collect();
            let mut ang = if d == 2 {
                vec![u[1].atan2(u[0])]
            } else {
                vec![u[2].clamp(-1.0, 1.0).acos(), u[1].atan2(u[0])]
            };
            let mut step = 0.05;
            while step > 1e-12 {
                let mut moved = false;
                for a in 0..ang.len() {
                    for s in [-step, step] {
                        let mut trial = ang.clone();
                        trial[a] += s;
                        let v = at(&trial)?;
                        if v < best {
                            best = v;
                            ang = trial;
                            moved = true;
                        }
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
        }
    }
    Ok(best)
}

fn uniform_in(g: &ConvexBody, rng: &mut RandomStream) -> Result<Vec<f64>> {
    let (lo, hi) = g.bounding_box().ok_or_else(|| Error::InvalidBody("G must be bounded".into()))?;
    for _ in 0..1_000_000 {
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.uniform()).collect();
        if g.contains(&x)? {
            return Ok(x);
        }
    }
    Err(Error::InvalidBody("G has negligible volume in its bounding box".into()))
}

/// Checks the start condition `∫ρ / (vol(G) · inf_G ρ) ≤ κ`.
///
/// The statistic is the larger of that ratio and the maximum of
/// `dν/dπ_ρ` over 10³ uniform points of G; the threshold is
/// `κ·(1 + 10⁻⁴)`.
pub fn check_kappa_condition(rho: &Density, g: &ConvexBody, claimed_kappa: f64) -> Result<OracleReport> {
    let k = rho.support();
    if g.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: g.dim() });
    }
    for p in extreme_points(g)? {
        if !k.contains(&p)? {
            return Err(Error::ClassViolation(format!("G is not contained in K: {p:?} lies outside")));
        }
    }
    let log_mass = cubature(rho, &|_| 0.0, k, 1e-9)?.log_mass;
    let log_vol_g = match g.volume() {
        Some(v) => v.ln(),
        None => cubature(&Density::uniform(g.clone()), &|_| 0.0, g, 1e-9)?.log_mass,
    };
    let log_inf = log_inf_over(rho, g)?;
    let ratio = (log_mass - log_vol_g - log_inf).exp();

    let mut rng = RandomStream::new(0x6b61_7070_61);
    let mut spot: f64 = 0.0;
    for _ in 0..1_000 {
        let x = uniform_in(g, &mut rng)?;
        spot = spot.max((log_mass - log_vol_g - rho.log_density(&x)?).exp());
    }
    let statistic = ratio.max(spot);
    Ok(OracleReport::new(
        "kappa_condition",
        statistic,
        claimed_kappa * (1.0 + 1e-4),
        format!("ratio = {ratio:.12}, max spot dnu/dpi = {spot:.12}, claimed kappa = {claimed_kappa:.12}"),
    ))
}

/// Checks that the ball of radius `r = √(λ_min r*(d))` lies in the level set
/// `{x : xᵀΣ⁻¹x ≤ 2 r*(d)}`.
///
/// `max_{|x|=r} xᵀΣ⁻¹x` is computed as `r²·λ_max(Σ⁻¹)` from an independent
/// eigen-decomposition of the precision matrix and compared to the closed
/// form `r²/λ_min = r*(d)`. The statistic is the worse of the identity
/// residual (relative) and the containment violation; the slack
/// `2r* − r²/λ_min` is reported in the detail.
pub fn check_level_set_ball(factor: &LowerTriangular) -> Result<OracleReport> {
    let d = factor.dim();
    let sigma = factor.covariance();
    let lambda_min = symmetric_eigenvalues(&sigma)?[0];
    let precision: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            factor.precision_mul(&e)
        })
        .collect();
    let sym: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| 0.5 * (precision[i][j] + precision[j][i])).collect())
        .collect();
    let lambda_max_prec = *symmetric_eigenvalues(&sym)?.last().unwrap();
    let rs = r_star(d)?.r_star;
    let r2 = lambda_min * rs;
    let max_quad = r2 * lambda_max_prec;
    let closed = r2 / lambda_min;
    let identity = (max_quad - closed).abs() / closed;
    let violation = (max_quad - 2.0 * rs).max(0.0) / rs;

    // random points of the sphere of radius r, as an independent sanity check
    let mut rng = RandomStream::new(0x6c65_7665_6c);
    let mut sampled: f64 = 0.0;
    for _ in 0..1_000 {
        let mut u: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let n = crate::linalg::norm(&u);
        u.iter_mut().for_each(|v| *v *= r2.sqrt() / n);
        sampled = sampled.max(factor.mahalanobis_sq(&u));
    }
    let sampled_violation = (sampled - max_quad).max(0.0) / closed;
    let statistic = identity.max(violation).max(sampled_violation);
    Ok(OracleReport::new(
        "level_set_ball",
        statistic,
        1e-9,
        format!(
            "d = {d}, r = {:.12}, max x'S^-1x = {max_quad:.12}, 2 r* = {:.12}, slack = {:.12}",
            r2.sqrt(),
            2.0 * rs,
            2.0 * rs - max_quad
        ),
    ))
}

/// Histogram total variation `½ Σ |p̂_a − p̂_b|` with `bins` cells per axis
/// over the joint bounding box.
pub fn empirical_tv(a: &[Vec<f64>], b: &[Vec<f64>], bins: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empirical TV needs nonempty samples".into()));
    }
    let d = a[0].len();
    for p in a.iter().chain(b) {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
    }
    let cells = (bins as u128).checked_pow(d as u32).filter(|&c| c <= 1 << 24).ok_or_else(|| {
        Error::InvalidArgument(format!("{bins}^{d} histogram cells is too many"))
    })? as usize;
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in a.iter().chain(b) {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let cell = |p: &[f64]| -> usize {
        let mut idx = 0;
        for i in 0..d {
            let w = hi[i] - lo[i];
            let k = if w > 0.0 { (((p[i] - lo[i]) / w) * bins as f64) as usize } else { 0 };
            idx = idx * bins + k.min(bins - 1);
        }
        idx
    };
    let mut ca = vec![0u64; cells];
    let mut cb = vec![0u64; cells];
    a.iter().for_each(|p| ca[cell(p)] += 1);
    b.iter().for_each(|p| cb[cell(p)] += 1);
    let (na, nb) = (a.len() as u128, b.len() as u128);
    let total: u128 = ca.iter().zip(&cb).map(|(&x, &y)| (x as u128 * nb).abs_diff(y as u128 * na)).sum();
    Ok(0.5 * (total as f64 / (na * nb) as f64))
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F̂_n − F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample critical value `√(−ln(α/2)/2) · √((n+m)/(nm))`.
pub fn ks_two_sample_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::gaussian_class_params;

    #[test]
    fn report_pass_flag() {
        assert!(OracleReport::new("a", 1.0, 1.0, "").pass);
        assert!(!OracleReport::new("a", 1.1, 1.0, "").pass);
        assert!(!OracleReport::new("a", f64::NAN, 1.0, "").pass);
    }

    #[test]
    fn quadrature_uniform_disk_halfspace() {
        let rho = Density::uniform(ConvexBody::unit_ball(2));
        let v = quadrature_expectation(&rho, &|x| (x[0] > 0.0) as u8 as f64, rho.support()).unwrap();
        assert!((v - 0.5).abs() < 1e-9);
    }

    #[test]
    fn quadrature_gaussian_second_moment() {
        let rho = Density::standard_gaussian(2);
        let v = quadrature_expectation(&rho, &|x| (x[0] * x[0]).min(100.0), rho.support()).unwrap();
        assert!((v - 1.0).abs() < 1e-5, "{v}");
    }

    #[test]
    fn quadrature_constant_and_scaling() {
        let body = ConvexBody::new_box(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 0.5]).unwrap();
        let tilt = Density::linear_tilt(vec![1.0, -0.5, 2.0], body.clone()).unwrap();
        assert!((quadrature_expectation(&tilt, &|_| 0.3, &body).unwrap() - 0.3).abs() < 1e-15);
        let f = |x: &[f64]| x[0] + x[2];
        let base = quadrature_expectation(&tilt, &f, &body).unwrap();
        for c in [1e-6, 1.0, 1e6] {
            let lc: f64 = f64::ln(c);
            let scaled = Density::black_box(
                std::sync::Arc::new(move |x: &[f64]| lc - x[0] + 0.5 * x[1] - 2.0 * x[2]),
                body.clone(),
            )
            .unwrap();
            let v = quadrature_expectation(&scaled, &f, &body).unwrap();
            assert!((v / base - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn kappa_gaussian_unit_disk_is_tight() {
        let rho = Density::standard_gaussian(2);
        let p = gaussian_class_params(&LowerTriangular::identity(2)).unwrap();
        let rep = check_kappa_condition(&rho, &ConvexBody::unit_ball(2), p.kappa()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.statistic / p.kappa() - 1.0).abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn kappa_uniform_ball_is_one() {
        let g = ConvexBody::unit_ball(3);
        let rep = check_kappa_condition(&Density::uniform(g.clone()), &g, 3.0).unwrap();
        assert!(rep.pass);
        assert!((rep.statistic - 1.0).abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn kappa_half_ball_recomputed() {
        let rho = Density::standard_gaussian(2);
        let g = ConvexBody::ball(vec![0.0, 0.0], 0.5).unwrap();
        // 2π / (π/4 · e^{−1/8})
        let kappa = 8.0 * (0.125f64).exp();
        let rep = check_kappa_condition(&rho, &g, kappa).unwrap();
        assert!(rep.pass && (rep.statistic / kappa - 1.0).abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn kappa_rejects_g_outside_k() {
        let rho = Density::uniform(ConvexBody::unit_ball(2));
        let g = ConvexBody::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(check_kappa_condition(&rho, &g, 10.0).is_err());
    }

    #[test]
    fn level_set_identity() {
        let rep = check_level_set_ball(&LowerTriangular::identity(2)).unwrap();
        assert!(rep.pass, "{rep:?}");
        let f = LowerTriangular::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(check_level_set_ball(&f).unwrap().pass);
        let f = crate::linalg::cholesky(&[vec![2.0, 0.3, 0.1], vec![0.3, 1.0, 0.2], vec![0.1, 0.2, 0.5]]).unwrap();
        assert!(check_level_set_ball(&f).unwrap().pass);
        assert!(check_level_set_ball(&LowerTriangular::identity(100)).unwrap().pass);
    }

    #[test]
    fn tv_trivial_cases() {
        let a: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        assert_eq!(empirical_tv(&a, &a, DEFAULT_TV_BINS).unwrap(), 0.0);
        let b: Vec<Vec<f64>> = a.iter().map(|p| vec![p[0] + 1000.0, p[1]]).collect();
        assert_eq!(empirical_tv(&a, &b, DEFAULT_TV_BINS).unwrap(), 1.0);
        assert!(empirical_tv(&a, &[vec![1.0]], 16).is_err());
    }

    #[test]
    fn tv_same_distribution() {
        let mut r1 = RandomStream::new(1);
        let mut r2 = RandomStream::new(2);
        let a: Vec<Vec<f64>> = (0..100_000).map(|_| vec![r1.standard_normal(), r1.standard_normal()]).collect();
        let b: Vec<Vec<f64>> = (0..100_000).map(|_| vec![r2.standard_normal(), r2.standard_normal()]).collect();
        assert!(empirical_tv(&a, &b, 16).unwrap() < 0.03);
    }

    #[test]
    fn ks_trivial_cases() {
        assert_eq!(ks_statistic(&[0.5], |x| x), 0.5);
        assert!(ks_statistic(&[0.3; 50], |x| x.clamp(0.0, 1.0)) >= 0.5);
        let mut rng = RandomStream::new(3);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.uniform()).collect();
        assert!(ks_statistic(&xs, |x| x) < 0.006);
    }

    #[test]
    fn ks_two_sample_basic() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        let c = ks_two_sample_critical(100_000, 100_000, 1e-3);
        assert!((c - 1.9495 * (2.0f64 / 100_000.0).sqrt()).abs() < 1e-5);
    }
}
