//! The oracle suite behind `hitrun validate`.

use rayon::prelude::*;

use super::{
    check_kappa_condition, check_level_set_ball, empirical_tv, ks_statistic, ks_two_sample,
    ks_two_sample_critical, quadrature_expectation, OracleReport, DEFAULT_TV_BINS,
};
use crate::densities::{gaussian_class_params, ClassParams, ClassVariant, Density};
use crate::error::Result;
use crate::estimators::multi_run;
use crate::geometry::ConvexBody;
use crate::hit_and_run::{har_step, run_chain, transition_log_density};
use crate::integrand::Integrand;
use crate::linalg::LowerTriangular;
use crate::quadrature::gauss_legendre;
use crate::rng::RandomStream;
use crate::schedules::schedule_bounded;
use crate::special::{level_set_mass, r_star, regularized_lower_gamma};

/// Standard normal CDF through the incomplete gamma function, avoiding the
/// erfc path used by the samplers.
pub fn normal_cdf(x: f64) -> f64 {
    let p = regularized_lower_gamma(0.5, 0.5 * x * x).unwrap_or(1.0);
    if x >= 0.0 {
        0.5 + 0.5 * p
    } else {
        0.5 - 0.5 * p
    }
}

fn rstar_reports() -> Result<Vec<OracleReport>> {
    let mut worst: f64 = 0.0;
    for d in 1..=500 {
        let rs = r_star(d)?;
        worst = worst.max((regularized_lower_gamma(d as f64 / 2.0, rs.r_star)? - 0.125).abs());
    }
    let r2 = r_star(2)?.r_star;
    let mut mass: f64 = 0.0;
    for d in [1, 2, 10, 100] {
        mass = mass.max((level_set_mass(r_star(d)?.s_star(), d)? - 0.125).abs());
    }
    Ok(vec![
        OracleReport::new("rstar_identity_d1_500", worst, 1e-10, "max |P(d/2, r*) - 1/8|"),
        OracleReport::new("rstar_d2_closed_form", (r2 - (8.0f64 / 7.0).ln()).abs(), 1e-9, format!("r*(2) = {r2}")),
        OracleReport::new("level_set_mass_at_s_star", mass, 1e-10, "max |pi(K(s*)) - 1/8| over d in {1,2,10,100}"),
    ])
}

fn gaussian_reports() -> Result<Vec<OracleReport>> {
    let p = gaussian_class_params(&LowerTriangular::identity(2))?;
    let r = (8.0f64 / 7.0).ln().sqrt();
    let big_r = 0.5 * 2f64.sqrt();
    let kappa = 2.0 * 0.5f64.exp();
    let err = (p.r - r).abs().max((p.big_r - big_r).abs()).max((p.kappa() - kappa).abs());
    let diag = LowerTriangular::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]])?;
    let mut level = check_level_set_ball(&diag)?;
    level.name = "level_set_ball_diag_4_1".into();
    let mut level_i = check_level_set_ball(&LowerTriangular::identity(2))?;
    level_i.name = "level_set_ball_identity_d2".into();
    let mut kappa_g = check_kappa_condition(&Density::standard_gaussian(2), &ConvexBody::unit_ball(2), p.kappa())?;
    kappa_g.name = "kappa_condition_gaussian_d2".into();
    let ball = ConvexBody::unit_ball(2);
    let mut kappa_u = check_kappa_condition(&Density::uniform(ball.clone()), &ball, 3.0)?;
    kappa_u.name = "kappa_condition_uniform_disk".into();
    Ok(vec![
        OracleReport::new(
            "gaussian_params_identity_d2",
            err,
            1e-9,
            format!("r = {}, R = {}, kappa = {}", p.r, p.big_r, p.kappa()),
        ),
        level_i,
        level,
        kappa_g,
        kappa_u,
    ])
}

fn quadrature_report() -> Result<OracleReport> {
    let rho = Density::uniform(ConvexBody::unit_ball(2));
    let v = quadrature_expectation(&rho, &|x| if x[0] > 0.0 { 1.0 } else { 0.0 }, rho.support())?;
    Ok(OracleReport::new("quadrature_halfspace_disk", (v - 0.5).abs(), 1e-6, format!("A = {v}")))
}

fn one_step_draws(rho: &Density, x0: &[f64], n: usize, rng: &RandomStream) -> Result<Vec<Vec<f64>>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| har_step(rho, x0, &mut rng.substream(i)))
        .collect()
}

fn ks_one_step_reports(rng: &RandomStream) -> Result<Vec<OracleReport>> {
    let n = 100_000;
    let crit = 1.95 / (n as f64).sqrt();
    let uniform = Density::uniform(ConvexBody::new_box(vec![-1.0], vec![1.0])?);
    let xs: Vec<f64> = one_step_draws(&uniform, &[0.3], n, &rng.substream(0))?.into_iter().map(|p| p[0]).collect();
    let ks_u = ks_statistic(&xs, |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0));

    let truncated = Density::Gaussian {
        factor: LowerTriangular::identity(1),
        support: ConvexBody::new_box(vec![-1.0], vec![2.0])?,
    };
    let (fa, fb) = (normal_cdf(-1.0), normal_cdf(2.0));
    let xs: Vec<f64> = one_step_draws(&truncated, &[0.5], n, &rng.substream(1))?.into_iter().map(|p| p[0]).collect();
    let ks_g = ks_statistic(&xs, |x| ((normal_cdf(x) - fa) / (fb - fa)).clamp(0.0, 1.0));
    Ok(vec![
        OracleReport::new("one_step_ks_uniform_1d", ks_u, crit, format!("n = {n}")),
        OracleReport::new("one_step_ks_truncated_gaussian_1d", ks_g, crit, format!("n = {n}")),
    ])
}

/// Two-sample KS on both coordinates between one kernel step from exact
/// stationary draws and fresh exact draws.
pub fn stationarity_statistic(rho: &Density, n: usize, rng: &RandomStream) -> Result<f64> {
    let moved: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.substream(i);
            let x = rho.exact_sample(&mut r).expect("exact sampler");
            har_step(rho, &x, &mut r)
        })
        .collect::<Result<_>>()?;
    let fresh: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| rho.exact_sample(&mut rng.substream(n as u64 + i)).expect("exact sampler"))
        .collect();
    let mut worst: f64 = 0.0;
    for axis in 0..rho.dim() {
        let a: Vec<f64> = moved.iter().map(|p| p[axis]).collect();
        let b: Vec<f64> = fresh.iter().map(|p| p[axis]).collect();
        worst = worst.max(ks_two_sample(&a, &b));
    }
    Ok(worst)
}

fn stationarity_reports(rng: &RandomStream) -> Result<Vec<OracleReport>> {
    let n = 100_000;
    let crit = ks_two_sample_critical(n, n, 1e-3);
    let g = stationarity_statistic(&Density::standard_gaussian(2), n, &rng.substream(2))?;
    let u = stationarity_statistic(&Density::uniform(ConvexBody::unit_ball(2)), n, &rng.substream(3))?;
    Ok(vec![
        OracleReport::new("one_step_invariance_gaussian_d2", g, crit, format!("two-sample KS, n = m = {n}, alpha = 1e-3")),
        OracleReport::new("one_step_invariance_uniform_disk", u, crit, format!("two-sample KS, n = m = {n}, alpha = 1e-3")),
    ])
}

/// Largest `|log ρ(x) + log h(x,y) − log ρ(y) − log h(y,x)|` over random
/// pairs of exact draws.
pub fn detailed_balance_gap(rho: &Density, pairs: usize, rng: &mut RandomStream) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x = rho.exact_sample(rng).expect("exact sampler");
        let y = rho.exact_sample(rng).expect("exact sampler");
        let lhs = rho.log_density(&x)? + transition_log_density(rho, &x, &y)?;
        let rhs = rho.log_density(&y)? + transition_log_density(rho, &y, &x)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `∫ H(x, y) dy` at d = 2 in polar coordinates around x, truncated at
/// distance `reach` when the support is unbounded.
pub fn kernel_mass_2d(rho: &Density, x: &[f64], reach: f64) -> Result<f64> {
    let (tn, tw) = gauss_legendre(64);
    let (rn, rw) = gauss_legendre(48);
    let panels = 4;
    let mut total = 0.0;
    for (t, wt) in tn.iter().zip(&tw) {
        let theta = std::f64::consts::PI * (t + 1.0);
        let u = [theta.cos(), theta.sin()];
        let hi = rho.support().chord(x, &u)?.hi.min(reach);
        let h = hi / panels as f64;
        for p in 0..panels {
            for (s, ws) in rn.iter().zip(&rw) {
                let dist = h * (p as f64 + 0.5 * (s + 1.0));
                let y = [x[0] + dist * u[0], x[1] + dist * u[1]];
                if !rho.support().contains(&y)? {
                    continue;
                }
                let v = transition_log_density(rho, x, &y)?.exp();
                total += std::f64::consts::PI * wt * 0.5 * h * ws * v * dist;
            }
        }
    }
    Ok(total)
}

fn kernel_reports(rng: &RandomStream) -> Result<Vec<OracleReport>> {
    let mut r = rng.substream(4);
    let disk = Density::uniform(ConvexBody::unit_ball(2));
    let gauss = Density::gaussian_from_covariance(&[vec![1.0, 0.4], vec![0.4, 0.5]])?;
    let db = detailed_balance_gap(&disk, 50, &mut r)?.max(detailed_balance_gap(&gauss, 50, &mut r)?);
    let m1 = kernel_mass_2d(&disk, &[0.3, 0.2], f64::INFINITY)?;
    let m2 = kernel_mass_2d(&gauss, &[0.5, -0.2], 12.0)?;
    Ok(vec![
        OracleReport::new("detailed_balance", db, 1e-6, "100 random pairs, uniform disk and correlated Gaussian"),
        OracleReport::new(
            "kernel_normalization_d2",
            (m1 - 1.0).abs().max((m2 - 1.0).abs()),
            1e-3,
            format!("disk: {m1}, gaussian: {m2}"),
        ),
    ])
}

/// Histogram TV between `chains` hit-and-run chains of length `n0` from
/// `x0` and the same number of exact draws.
pub fn mixing_tv(rho: &Density, x0: &[f64], n0: u64, chains: usize, rng: &RandomStream) -> Result<f64> {
    let ends: Vec<Vec<f64>> = (0..chains as u64)
        .into_par_iter()
        .map(|i| run_chain(rho, x0, n0, &mut rng.substream(i)).map(|s| s.x))
        .collect::<Result<_>>()?;
    let exact: Vec<Vec<f64>> = (0..chains as u64)
        .into_par_iter()
        .map(|i| rho.exact_sample(&mut rng.substream(chains as u64 + i)).expect("exact sampler"))
        .collect();
    empirical_tv(&ends, &exact, DEFAULT_TV_BINS)
}

fn mixing_report(rng: &RandomStream) -> Result<OracleReport> {
    let rho = Density::uniform(ConvexBody::unit_ball(2));
    let tv = mixing_tv(&rho, &[0.99, 0.0], 200, 100_000, &rng.substream(5))?;
    Ok(OracleReport::new("mixing_tv_disk_from_edge", tv, 0.05, "x0 = (0.99, 0), n0 = 200, 1e5 chains, 16x16 bins"))
}

fn estimator_report(rng: &RandomStream) -> Result<OracleReport> {
    let g = ConvexBody::unit_ball(2);
    let rho = Density::uniform(g.clone());
    let f = Integrand::Halfspace { a: vec![1.0, 0.0], b: 0.0 };
    let n = 10_000;
    let res = multi_run(&rho, &f, &g, n, 50, &rng.substream(6))?;
    let sigma = 0.5 / (n as f64).sqrt();
    Ok(OracleReport::new(
        "multi_run_halfspace_disk",
        (res.value - 0.5).abs() / sigma,
        3.0,
        format!("estimate = {}, n = {n}, n0 = 50, statistic in units of sigma", res.value),
    ))
}

fn schedule_report() -> Result<OracleReport> {
    let p = ClassParams::new(3, 1.0, 2.0, 100f64.ln(), ClassVariant::Bounded, ConvexBody::unit_ball(3))?;
    let s = schedule_bounded(0.1, &p)?;
    let rel = (s.n0.value / 6.528_122_630_598_571_5e31 - 1.0).abs();
    let stat = if s.n == 100 { rel } else { f64::INFINITY };
    Ok(OracleReport::new(
        "schedule_bounded_worked_example",
        stat,
        1e-6,
        format!("n = {}, n0 = {:.6e}", s.n, s.n0.value),
    ))
}

/// Runs every oracle. Sampling checks draw from substreams of `seed`.
pub fn run_suite(seed: u64) -> Result<Vec<OracleReport>> {
    let rng = RandomStream::new(seed);
    let mut out = rstar_reports()?;
    out.extend(gaussian_reports()?);
    out.push(quadrature_report()?);
    out.extend(ks_one_step_reports(&rng)?);
    out.extend(stationarity_reports(&rng)?);
    out.extend(kernel_reports(&rng)?);
    out.push(mixing_report(&rng)?);
    out.push(estimator_report(&rng)?);
    out.push(schedule_report()?);
    Ok(out)
}
