//! Calculators for the explicit error, mixing and schedule bounds of the
//! hit-and-run multi-run estimator.
//!
//! All logarithms are natural. The constants (10²⁷, 4·10³⁰, 10⁻⁹, 10⁻¹³,
//! 10⁻²⁶) make every theorem schedule astronomically long; step counts
//! beyond `i64::MAX` are reported in floating point and flagged
//! `impractical` rather than overflowing.

use serde::Serialize;

use crate::densities::{ClassParams, ClassVariant};
use crate::error::{Error, Result};
use crate::estimators::Mode;

/// Leading constant of the burn-in bound for bounded-support densities.
pub const BOUNDED_N0_CONSTANT: f64 = 1e27;
/// Leading constant of the burn-in bound for densities with bounded second
/// moment.
pub const AVERAGE_N0_CONSTANT: f64 = 4e30;
/// Exponent constant of the explicit total-variation bound.
pub const EXPLICIT_TV_RATE: f64 = 1e-9;
/// Numerator of the s-conductance lower bound.
pub const CONDUCTANCE_CONSTANT: f64 = 1e-13;
/// Exponent constant of the mixed total-variation bound (the square of the
/// conductance constant).
pub const MIXED_TV_RATE: f64 = 1e-26;

const PRACTICAL_LIMIT: f64 = i64::MAX as f64;

/// A step count that may exceed the integer range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepCount {
    pub value: f64,
    pub impractical: bool,
}

impl StepCount {
    pub fn from_f64(value: f64) -> Self {
        let value = value.ceil();
        Self { value, impractical: !(value <= PRACTICAL_LIMIT) }
    }

    pub fn exact(value: u64) -> Self {
        Self::from_f64(value as f64)
    }

    pub fn as_u64(&self) -> Option<u64> {
        (!self.impractical).then_some(self.value as u64)
    }
}

/// A `(n, n0)` plan for the multi-run estimator together with its cost.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub n: u64,
    pub n0: StepCount,
    pub cost: StepCount,
    pub mode: Mode,
    pub epsilon: f64,
    pub params: ClassParams,
    /// Human-readable derivation of `n` and `n0`.
    pub trace: Vec<String>,
}

impl Schedule {
    /// A hand-picked plan, checked against the invariants `n ≥ ⌈ε⁻²⌉` and
    /// `cost = n·n0` (multi) or `n + n0` (single).
    pub fn with_steps(n: u64, n0: u64, mode: Mode, epsilon: f64, params: ClassParams) -> Result<Self> {
        check_epsilon(epsilon)?;
        let min_n = min_chain_count(epsilon);
        if n < min_n {
            return Err(Error::InvalidArgument(format!("n = {n} is below ceil(eps^-2) = {min_n}")));
        }
        let cost = match mode {
            Mode::Multi => n as f64 * n0 as f64,
            Mode::Single => n as f64 + n0 as f64,
        };
        Ok(Self {
            n,
            n0: StepCount::exact(n0),
            cost: StepCount::from_f64(cost),
            mode,
            epsilon,
            params,
            trace: vec![format!("explicit plan: n = {n}, n0 = {n0}")],
        })
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1/2), got {eps}")))
    }
}

fn check_geometry(d: usize, r: f64, big_r: f64) -> Result<f64> {
    if d == 0 || !(r > 0.0) || !(big_r > 0.0) {
        return Err(Error::InvalidArgument("need d ≥ 1, r > 0, R > 0".into()));
    }
    let x = d as f64 * big_r / r;
    if x < 3.0 - 1e-12 {
        return Err(Error::ClassViolation(format!("d·R/r must be at least 3, got {x}")));
    }
    Ok(x)
}

fn check_warmness(big_d: f64) -> Result<()> {
    if big_d >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("D must be at least 1, got {big_d}")))
    }
}

fn min_chain_count(eps: f64) -> u64 {
    (1.0 / (eps * eps)).ceil() as u64
}

/// Mean squared error bound of the multi-run estimator for a start whose
/// n0-step law is `tv` away from stationarity: `‖f‖∞²/n + 2‖f‖∞²·tv`.
pub fn mse_bound(n: u64, tv: f64, f_inf: f64) -> Result<f64> {
    if n == 0 || !(0.0..=1.0).contains(&tv) || !(f_inf >= 0.0) {
        return Err(Error::InvalidArgument("need n ≥ 1, tv ∈ [0, 1], ‖f‖∞ ≥ 0".into()));
    }
    let f2 = f_inf * f_inf;
    Ok(f2 / n as f64 + 2.0 * f2 * tv)
}

/// Theorem schedule for the bounded-support class: `n = ⌈ε⁻²⌉` and
/// `n0 = ⌈10²⁷ (dR/r)² ln²(8 (dR/r) κ ε⁻²) ln(4 κ ε⁻²)⌉`, giving root mean
/// squared error at most 3ε.
pub fn schedule_bounded(eps: f64, params: &ClassParams) -> Result<Schedule> {
    if params.variant != ClassVariant::Bounded {
        return Err(Error::ClassViolation("schedule_bounded needs a bounded-class parameter set".into()));
    }
    check_epsilon(eps)?;
    let x = check_geometry(params.d, params.r, params.big_r)?;
    let two_log_inv_eps = -2.0 * eps.ln();
    let l1 = (8.0 * x).ln() + params.log_kappa + two_log_inv_eps;
    let l2 = 4f64.ln() + params.log_kappa + two_log_inv_eps;
    let n0 = BOUNDED_N0_CONSTANT * x * x * l1 * l1 * l2;
    Ok(build(eps, params, n0, vec![
        "class U(r, R, kappa): bounded support, multi-run error <= 3 eps".to_string(),
        format!("d R / r = {x:.6e}, ln kappa = {:.6e}", params.log_kappa),
        format!("ln(8 d R/r kappa eps^-2) = {l1:.6e}, ln(4 kappa eps^-2) = {l2:.6e}"),
        format!("n0 >= 1e27 (dR/r)^2 ln^2(8 dR/r kappa eps^-2) ln(4 kappa eps^-2) = {n0:.6e}"),
    ]))
}

/// Theorem schedule for the bounded-second-moment class: `n = ⌈ε⁻²⌉` and
/// `n0 = ⌈4·10³⁰ (dR/r)² ln²(2 (dR/r) κ ε⁻²) ln³(κ ε⁻²)⌉`.
pub fn schedule_average(eps: f64, params: &ClassParams) -> Result<Schedule> {
    if params.variant != ClassVariant::Average {
        return Err(Error::ClassViolation("schedule_average needs an average-class parameter set".into()));
    }
    check_epsilon(eps)?;
    let x = check_geometry(params.d, params.r, params.big_r)?;
    let two_log_inv_eps = -2.0 * eps.ln();
    let l1 = (2.0 * x).ln() + params.log_kappa + two_log_inv_eps;
    let l2 = params.log_kappa + two_log_inv_eps;
    let n0 = AVERAGE_N0_CONSTANT * x * x * l1 * l1 * l2 * l2 * l2;
    Ok(build(eps, params, n0, vec![
        "class V(r, R, kappa): bounded second moment, multi-run error <= 3 eps".to_string(),
        format!("d R / r = {x:.6e}, ln kappa = {:.6e}", params.log_kappa),
        format!("ln(2 d R/r kappa eps^-2) = {l1:.6e}, ln(kappa eps^-2) = {l2:.6e}"),
        format!("n0 >= 4e30 (dR/r)^2 ln^2(2 dR/r kappa eps^-2) ln^3(kappa eps^-2) = {n0:.6e}"),
    ]))
}

/// Dispatches on `params.variant`.
pub fn schedule_for(eps: f64, params: &ClassParams) -> Result<Schedule> {
    match params.variant {
        ClassVariant::Bounded => schedule_bounded(eps, params),
        ClassVariant::Average => schedule_average(eps, params),
    }
}

fn build(eps: f64, params: &ClassParams, n0: f64, mut trace: Vec<String>) -> Schedule {
    let n = min_chain_count(eps);
    let n0 = StepCount::from_f64(n0);
    let cost = StepCount::from_f64(n as f64 * n0.value);
    trace.insert(1, format!("n = ceil(eps^-2) = {n}"));
    trace.push(format!(
        "cost = n * n0 = {:.6e}{}",
        cost.value,
        if cost.impractical { " (impractical: exceeds 2^63 - 1 steps)" } else { "" }
    ));
    Schedule { n, n0, cost, mode: Mode::Multi, epsilon: eps, params: params.clone(), trace }
}

/// A total-variation bound clamped to [0, 1], with the unclamped value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TvBound {
    pub value: f64,
    pub raw: f64,
}

impl TvBound {
    fn new(raw: f64) -> Self {
        Self { value: raw.min(1.0), raw }
    }
}

/// `C β^{n0^{1/3}}` with `C = 12 (dR/r) D` and `β = exp(−10⁻⁹ / (dR/r)^{2/3})`.
///
/// `n0` is a float since the bound drops below 1 only past about 10²⁷.
pub fn tv_bound_explicit(n0: f64, d: usize, r: f64, big_r: f64, big_d: f64) -> Result<TvBound> {
    let x = check_geometry(d, r, big_r)?;
    check_warmness(big_d)?;
    if !(n0 >= 0.0) {
        return Err(Error::InvalidArgument("step count must be nonnegative".into()));
    }
    let c = 12.0 * x * big_d;
    let log_beta = -EXPLICIT_TV_RATE / x.powf(2.0 / 3.0);
    Ok(TvBound::new(c * (log_beta * n0.cbrt()).exp()))
}

/// `3ε/2 + 2D exp(−10⁻²⁶ n / (8 (dR/r)² ln²(8 (dR/r) D / ε)))`.
///
/// `n` is a float because the bound only becomes informative near 10³⁰.
pub fn tv_bound_mixed(n: f64, d: usize, r: f64, big_r: f64, big_d: f64, eps: f64) -> Result<TvBound> {
    let x = check_geometry(d, r, big_r)?;
    check_warmness(big_d)?;
    check_epsilon(eps)?;
    if !(n >= 0.0) {
        return Err(Error::InvalidArgument("step count must be nonnegative".into()));
    }
    let l = (8.0 * x * big_d / eps).ln();
    let rate = MIXED_TV_RATE / (8.0 * x * x * l * l);
    Ok(TvBound::new(1.5 * eps + 2.0 * big_d * (-rate * n).exp()))
}

/// Lower bound on the (ε/2D)-conductance:
/// `10⁻¹³ / (2 (dR/r) ln(4 (dR/r) D / ε))`.
pub fn conductance_lower_bound(d: usize, r: f64, big_r: f64, big_d: f64, eps: f64) -> Result<f64> {
    let x = check_geometry(d, r, big_r)?;
    check_warmness(big_d)?;
    check_epsilon(eps)?;
    Ok(CONDUCTANCE_CONSTANT / (2.0 * x * (4.0 * x * big_d / eps).ln()))
}

/// Single-run bound from a user-supplied spectral gap:
/// `e(S)² ≤ 4‖f‖₄ / (n·gap)` once `n0 ≥ ln(64 ‖dν/dπ − 1‖₂) / gap`.
///
/// Returns the MSE bound and the minimal burn-in (0 when the logarithm is
/// negative).
pub fn gap_error_bound(n: u64, gap: f64, f4_norm: f64, nu_l2_dist: f64) -> Result<(f64, u64)> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::InvalidArgument(format!("spectral gap must lie in (0, 1], got {gap}")));
    }
    if n == 0 || !(f4_norm >= 0.0) || !(nu_l2_dist > 0.0) {
        return Err(Error::InvalidArgument("need n ≥ 1, ‖f‖₄ ≥ 0, ‖dν/dπ − 1‖₂ > 0".into()));
    }
    let mse = 4.0 * f4_norm / (n as f64 * gap);
    let n0 = ((64.0 * nu_l2_dist).ln() / gap).ceil().max(0.0);
    Ok((mse, n0 as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexBody;

    fn params(d: usize, r: f64, big_r: f64, kappa: f64, variant: ClassVariant) -> ClassParams {
        ClassParams::new(d, r, big_r, kappa.ln(), variant, ConvexBody::unit_ball(d)).unwrap()
    }

    #[test]
    fn mse_bound_examples() {
        assert!((mse_bound(100, 0.0, 1.0).unwrap() - 0.01).abs() < 1e-16);
        assert!((mse_bound(100, 0.02, 1.0).unwrap() - 0.05).abs() < 1e-16);
        assert_eq!(mse_bound(100, 0.3, 0.0).unwrap(), 0.0);
        assert!(mse_bound(0, 0.0, 1.0).is_err());
        assert!(mse_bound(1, 1.5, 1.0).is_err());
    }

    #[test]
    fn bounded_schedule_worked_example() {
        let s = schedule_bounded(0.1, &params(3, 1.0, 2.0, 100.0, ClassVariant::Bounded)).unwrap();
        assert_eq!(s.n, 100);
        // 50-digit reference: 6.5281226305985714608e31
        assert!((s.n0.value / 6.528_122_630_598_571e31 - 1.0).abs() < 1e-12);
        assert!(s.n0.impractical && s.cost.impractical);
        assert_eq!(s.cost.value, s.n0.value * 100.0);
        assert!(schedule_bounded(0.7, &params(3, 1.0, 2.0, 100.0, ClassVariant::Bounded)).is_err());
        assert!(schedule_bounded(0.1, &params(3, 1.0, 2.0, 100.0, ClassVariant::Average)).is_err());
    }

    #[test]
    fn average_schedule_worked_example() {
        let s = schedule_average(0.1, &params(3, 1.0, 2.0, 100.0, ClassVariant::Average)).unwrap();
        assert_eq!(s.n, 100);
        assert!((s.n0.value / 1.538_892_668_475_167_3e37 - 1.0).abs() < 1e-12);
        // domain edge
        let s = schedule_average(0.25, &params(3, 1.0, 1.0, 3.0, ClassVariant::Average)).unwrap();
        assert!(s.n0.value.is_finite() && s.n0.value > 0.0);
    }

    #[test]
    fn schedule_monotone_in_epsilon_and_r() {
        let p = params(3, 1.0, 2.0, 100.0, ClassVariant::Bounded);
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let eps = k as f64 / 100.0;
            let n0 = schedule_bounded(eps, &p).unwrap().n0.value;
            assert!(n0 <= prev);
            prev = n0;
        }
        let a = schedule_bounded(0.1, &params(3, 1.0, 2.0, 100.0, ClassVariant::Bounded)).unwrap();
        let b = schedule_bounded(0.1, &params(3, 1.0, 4.0, 100.0, ClassVariant::Bounded)).unwrap();
        let ratio = b.n0.value / a.n0.value;
        // ×4 from (dR/r)², times the growth of ln²(8 dR/r κ ε⁻²)
        let l = |x: f64| (8.0 * x * 100.0 / 0.01f64).ln();
        assert!((ratio - 4.0 * (l(12.0) / l(6.0)).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn explicit_tv_examples() {
        for (d, r, big_r) in [(3, 1.0, 1.0), (3, 1.0, 2.0), (10, 0.5, 3.0)] {
            assert_eq!(tv_bound_explicit(0.0, d, r, big_r, 1.0).unwrap().value, 1.0);
        }
        let a = tv_bound_explicit(1e3, 3, 1.0, 2.0, 1.0).unwrap();
        let b = tv_bound_explicit(1e6, 3, 1.0, 2.0, 1.0).unwrap();
        assert!(b.raw < a.raw);
        assert_eq!(a.value, 1.0);
        // 1 − β^90 from a 50-digit evaluation
        assert!(((1.0 - b.raw / a.raw) / 2.725_680_852_101_528e-8 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mixed_tv_examples() {
        assert_eq!(tv_bound_mixed(0.0, 3, 1.0, 2.0, 1.0, 0.1).unwrap().value, 1.0);
        let far = tv_bound_mixed(1e40, 3, 1.0, 2.0, 1.0, 0.1).unwrap();
        assert!((far.value - 0.15).abs() < 1e-15);
        let v = tv_bound_mixed(1e32, 3, 1.0, 2.0, 100.0, 0.01).unwrap();
        assert!((v.value / 0.015_000_308_347_347_95 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conductance_examples() {
        let v = conductance_lower_bound(3, 1.0, 2.0, 1.0, 0.1).unwrap();
        assert!((v / 1.520_503_986_832_948e-15 - 1.0).abs() < 1e-12);
        let w = conductance_lower_bound(3, 1.0, 3.0, 1.0, 0.1).unwrap();
        assert!(w < v);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap_error_bound(4, 1.0, 1.0, 1.0).unwrap().0, 1.0);
        let (a, _) = gap_error_bound(10, 0.3, 1.0, 2.0).unwrap();
        let (b, _) = gap_error_bound(20, 0.3, 1.0, 2.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
        assert_eq!(gap_error_bound(10, 0.01, 1.0, 10.0).unwrap().1, 647);
        assert!(gap_error_bound(10, 0.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn with_steps_checks_invariants() {
        let p = params(3, 1.0, 2.0, 100.0, ClassVariant::Bounded);
        let s = Schedule::with_steps(100, 7, Mode::Multi, 0.1, p.clone()).unwrap();
        assert_eq!(s.cost.as_u64(), Some(700));
        let s = Schedule::with_steps(100, 7, Mode::Single, 0.1, p.clone()).unwrap();
        assert_eq!(s.cost.as_u64(), Some(107));
        assert!(Schedule::with_steps(99, 7, Mode::Multi, 0.1, p).is_err());
    }
}
