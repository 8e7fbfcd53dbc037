//! Gamma-family special functions and the level-set radius r*(d) of the
//! Gaussian example.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln(x^a e^{-x} / Γ(a))`, the common prefactor of the series and the
/// continued fraction.
fn log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

fn lower_series(a: f64, x: f64) -> f64 {
    // P(a,x) = x^a e^{-x}/Γ(a+1) Σ x^n / ((a+1)...(a+n))
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    (log_prefactor(a, x) + sum.ln()).exp()
}

fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    // Modified Lentz evaluation of the Legendre continued fraction for Q(a,x).
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (log_prefactor(a, x) + h.ln()).exp()
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / Γ(a)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("shape a must be positive, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("x must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let p = if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_continued_fraction(a, x)
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Solution of `P(d/2, r) = 1/8` together with its residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RStarResult {
    pub d: usize,
    pub r_star: f64,
    pub residual: f64,
}

impl RStarResult {
    /// `s*(d) = exp(−r*(d))`, the density level whose super-level set has
    /// mass 1/8.
    pub fn s_star(&self) -> f64 {
        (-self.r_star).exp()
    }
}

const LEVEL_MASS: f64 = 0.125;

/// Smallest `r` with `P(d/2, r) ≥ 1/8`, by bracketing plus safeguarded Newton.
pub fn r_star(d: usize) -> Result<RStarResult> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let a = d as f64 / 2.0;
    let f = |r: f64| regularized_lower_gamma(a, r).map(|p| p - LEVEL_MASS);

    let mut lo = 0.0;
    let mut hi = a.max(1.0);
    while f(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
    }

    // Wilson–Hilferty start, z = Φ⁻¹(1/8).
    let z = -1.150_349_380_376_008_f64;
    let wh = a * (1.0 - 1.0 / (9.0 * a) + z * (1.0 / (9.0 * a)).sqrt()).powi(3);
    let mut r = if wh > lo && wh < hi { wh } else { 0.5 * (lo + hi) };

    let ln_gamma_a = ln_gamma(a);
    for _ in 0..100 {
        let fr = f(r)?;
        if fr == 0.0 {
            break;
        }
        if fr < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let density = ((a - 1.0) * r.ln() - r - ln_gamma_a).exp();
        let newton = r - fr / density;
        let next = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - r).abs();
        r = next;
        if step <= 1e-15 * r.max(1e-300) || hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let residual = f(r)?;
    Ok(RStarResult { d, r_star: r, residual })
}

/// Mass of the super-level set `{ρ ≥ s}` of a d-dimensional Gaussian
/// `exp(−½ xᵀΣ⁻¹x)` under its normalized law: `P(d/2, ln(1/s))`.
pub fn level_set_mass(s: f64, d: usize) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidArgument(format!("level s must lie in (0, 1], got {s}")));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    regularized_lower_gamma(d as f64 / 2.0, -s.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from a 50-digit mpmath evaluation.
    const P_REFERENCE: [(f64, f64, f64); 5] = [
        (0.5, 0.5, 0.682_689_492_137_085_9),
        (3.0, 2.0, 0.323_323_583_816_936_54),
        (10.0, 15.0, 0.930_146_339_300_590_2),
        (100.0, 90.0, 0.158_220_989_186_430_17),
        (2.5, 1e-3, 9.508_534_598_607_949e-9),
    ];

    const R_STAR_REFERENCE: [(usize, f64); 6] = [
        (1, 0.012_373_325_746_260_298),
        (2, 0.133_531_392_624_522_62),
        (3, 0.346_178_863_691_842),
        (10, 2.617_058_501_770_668_4),
        (100, 41.999_265_007_548_72),
        (500, 231.930_627_424_549_48),
    ];

    #[test]
    fn ln_gamma_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
        let oracle = statrs::function::gamma::ln_gamma(123.4);
        assert!((ln_gamma(123.4) - oracle).abs() < 1e-10 * oracle);
    }

    #[test]
    fn lower_gamma_reference_values() {
        for (a, x, p) in P_REFERENCE {
            let got = regularized_lower_gamma(a, x).unwrap();
            assert!((got - p).abs() < 1e-12, "P({a},{x}) = {got}, want {p}");
        }
    }

    #[test]
    fn lower_gamma_examples() {
        assert_eq!(regularized_lower_gamma(3.3, 0.0).unwrap(), 0.0);
        let x = (8.0f64 / 7.0).ln();
        assert!((regularized_lower_gamma(1.0, x).unwrap() - 0.125).abs() < 1e-15);
        assert!((regularized_lower_gamma(0.5, 100.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(regularized_lower_gamma(0.0, 1.0).is_err());
        assert!(regularized_lower_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn lower_gamma_agrees_with_statrs_and_is_monotone() {
        for &a in &[0.5f64, 1.0, 1.5, 2.0, 7.5, 25.0, 60.0, 250.0] {
            let mut prev = 0.0;
            for k in 1..400 {
                let x = k as f64 * (a + 10.0 * a.sqrt() + 5.0) / 400.0;
                let p = regularized_lower_gamma(a, x).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert!(p >= prev - 1e-15, "not monotone at a={a} x={x}");
                prev = p;
                let oracle = statrs::function::gamma::gamma_lr(a, x);
                assert!((p - oracle).abs() < 1e-12, "a={a} x={x}: {p} vs {oracle}");
            }
        }
    }

    #[test]
    fn r_star_reference_values() {
        for (d, r) in R_STAR_REFERENCE {
            let got = r_star(d).unwrap();
            assert!((got.r_star - r).abs() < 1e-9 * r.max(1.0), "d={d}: {} vs {r}", got.r_star);
        }
        let two = r_star(2).unwrap();
        assert!((two.r_star - (8.0f64 / 7.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn r_star_residual_and_monotonicity() {
        let mut prev = 0.0;
        for d in 1..=500 {
            let res = r_star(d).unwrap();
            assert!(res.residual.abs() <= 1e-10, "d={d} residual {}", res.residual);
            assert!(res.r_star > prev);
            prev = res.r_star;
        }
        assert!(r_star(0).is_err());
    }

    #[test]
    fn r_star_clt_scaling() {
        // CLT oracle: Gamma(a,1) quantile ≈ a + z·√a with z = Φ⁻¹(1/8).
        let d = 400.0;
        let clt = d / 2.0 - 1.1503 * (d / 2.0f64).sqrt();
        let got = r_star(400).unwrap().r_star;
        assert!((got - clt).abs() / clt < 0.01);
        assert!((0.40..=0.50).contains(&(got / d)));
    }

    #[test]
    fn level_set_mass_examples() {
        assert_eq!(level_set_mass(1.0, 5).unwrap(), 0.0);
        for s in [0.01, 0.3, 0.5, 0.99] {
            assert!((level_set_mass(s, 2).unwrap() - (1.0 - s)).abs() < 1e-14);
        }
        for d in 1..=100 {
            let rs = r_star(d).unwrap();
            assert!((level_set_mass(rs.s_star(), d).unwrap() - 0.125).abs() < 1e-10);
        }
        assert!(level_set_mass(0.0, 2).is_err());
        assert!(level_set_mass(1.5, 2).is_err());
    }
}
