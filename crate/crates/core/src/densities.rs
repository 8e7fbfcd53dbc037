//! Non-normalized log-concave densities with their support bodies.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::line_sampler::{LineDensity, LineFamily};
use crate::linalg::{cholesky, dot, symmetric_eigenvalues, LowerTriangular};
use crate::rng::RandomStream;
use crate::special::{ln_gamma, r_star};

/// Log-density evaluator for user-supplied densities. Must be concave on the
/// support; this is checked by sampling, not proven.
pub type LogDensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A non-normalized log-concave density ρ on its support K.
#[derive(Clone)]
pub enum Density {
    /// `exp(−½ xᵀΣ⁻¹x)` on ℝ^d with `Σ = L Lᵀ`.
    Gaussian { factor: LowerTriangular, support: ConvexBody },
    /// Constant on the body.
    Uniform { body: ConvexBody },
    /// `exp(−a·x)` on the body.
    LinearTilt { a: Vec<f64>, body: ConvexBody },
    BlackBox { log_rho: LogDensityFn, body: ConvexBody },
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Gaussian { factor, .. } => f.debug_struct("Gaussian").field("factor", factor).finish(),
            Density::Uniform { body } => f.debug_struct("Uniform").field("body", body).finish(),
            Density::LinearTilt { a, body } => {
                f.debug_struct("LinearTilt").field("a", a).field("body", body).finish()
            }
            Density::BlackBox { body, .. } => f.debug_struct("BlackBox").field("body", body).finish(),
        }
    }
}

impl Density {
    pub fn gaussian(factor: LowerTriangular) -> Self {
        let dim = factor.dim();
        Density::Gaussian { factor, support: ConvexBody::FullSpace { dim } }
    }

    /// Gaussian from a covariance matrix, factored on construction.
    pub fn gaussian_from_covariance(sigma: &[Vec<f64>]) -> Result<Self> {
        let factor = cholesky(sigma).map_err(|e| Error::InvalidDensity(e.to_string()))?;
        Ok(Self::gaussian(factor))
    }

    pub fn standard_gaussian(dim: usize) -> Self {
        Self::gaussian(LowerTriangular::identity(dim))
    }

    pub fn uniform(body: ConvexBody) -> Self {
        Density::Uniform { body }
    }

    pub fn linear_tilt(a: Vec<f64>, body: ConvexBody) -> Result<Self> {
        if a.len() != body.dim() {
            return Err(Error::DimensionMismatch { expected: body.dim(), got: a.len() });
        }
        if !body.is_bounded() && a.iter().any(|v| *v != 0.0) {
            return Err(Error::InvalidDensity("linear tilt needs a bounded body".into()));
        }
        Ok(Density::LinearTilt { a, body })
    }

    /// A user-supplied log-concave density. The body must be bounded.
    pub fn black_box(log_rho: LogDensityFn, body: ConvexBody) -> Result<Self> {
        if !body.is_bounded() {
            return Err(Error::InvalidDensity("black-box densities need a bounded body".into()));
        }
        Ok(Density::BlackBox { log_rho, body })
    }

    pub fn support(&self) -> &ConvexBody {
        match self {
            Density::Gaussian { support, .. } => support,
            Density::Uniform { body } | Density::LinearTilt { body, .. } | Density::BlackBox { body, .. } => body,
        }
    }

    pub fn dim(&self) -> usize {
        self.support().dim()
    }

    /// `log ρ(x)`; `−∞` outside the support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let support = self.support();
        if !support.contains(x)? {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.log_density_inside(x))
    }

    /// `log ρ(x)` for a point already known to lie in the support.
    pub(crate) fn log_density_inside(&self, x: &[f64]) -> f64 {
        match self {
            Density::Gaussian { factor, .. } => -0.5 * factor.mahalanobis_sq(x),
            Density::Uniform { .. } => 0.0,
            Density::LinearTilt { a, .. } => -dot(a, x),
            Density::BlackBox { log_rho, .. } => log_rho(x),
        }
    }

    /// Restriction `s ↦ ρ(x + s u)` to the chord through `x` along `u`.
    pub fn restrict_to_line<'a>(&'a self, x: &[f64], u: &[f64]) -> Result<LineDensity<'a>> {
        let domain = self.support().chord(x, u)?;
        Ok(match self {
            Density::Gaussian { factor, .. } => {
                let y = factor.solve_lower(x);
                let w = factor.solve_lower(u);
                let ww = dot(&w, &w);
                let wy = dot(&w, &y);
                let yy = dot(&y, &y);
                let family = LineFamily::Gaussian1d { mean: -wy / ww, sd: 1.0 / ww.sqrt() };
                LineDensity::new(domain, family, move |s| -0.5 * (yy + 2.0 * s * wy + s * s * ww))
            }
            Density::Uniform { .. } => LineDensity::new(domain, LineFamily::Uniform, |_| 0.0),
            Density::LinearTilt { a, .. } => {
                let base = -dot(a, x);
                let slope = -dot(a, u);
                LineDensity::new(domain, LineFamily::Generic, move |s| base + slope * s)
            }
            Density::BlackBox { log_rho, .. } => {
                let x = x.to_vec();
                let u = u.to_vec();
                let f = log_rho.clone();
                LineDensity::new(domain, LineFamily::Generic, move |s| {
                    let p: Vec<f64> = x.iter().zip(&u).map(|(xi, ui)| xi + s * ui).collect();
                    f(&p)
                })
            }
        })
    }

    /// Exact draw from the normalized density, where one is available
    /// (Gaussian; uniform on a ball or box).
    pub fn exact_sample(&self, rng: &mut RandomStream) -> Option<Vec<f64>> {
        match self {
            Density::Gaussian { factor, .. } => {
                let z: Vec<f64> = (0..factor.dim()).map(|_| rng.standard_normal()).collect();
                Some(factor.mul_vec(&z))
            }
            Density::Uniform { body } => match body {
                ConvexBody::Ball { .. } | ConvexBody::Box { .. } => {
                    crate::estimators::sample_initial(body, rng).ok()
                }
                _ => None,
            },
            _ => None,
        }
    }
}

/// JSON form of a [`Density`]. Gaussians accept either a covariance matrix
/// (`"sigma"`, row-major) or its lower-triangular factor (`"factor"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityDescriptor {
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factor: Option<Vec<Vec<f64>>>,
    },
    Uniform {
        body: ConvexBody,
    },
    LinearTilt {
        a: Vec<f64>,
        body: ConvexBody,
    },
}

impl TryFrom<DensityDescriptor> for Density {
    type Error = Error;

    fn try_from(d: DensityDescriptor) -> Result<Self> {
        match d {
            DensityDescriptor::Gaussian { sigma: Some(s), factor: None } => Density::gaussian_from_covariance(&s),
            DensityDescriptor::Gaussian { sigma: None, factor: Some(l) } => Ok(Density::gaussian(
                LowerTriangular::from_rows(&l).map_err(|e| Error::InvalidDensity(e.to_string()))?,
            )),
            DensityDescriptor::Gaussian { .. } => Err(Error::InvalidDensity(
                "gaussian needs exactly one of \"sigma\" or \"factor\"".into(),
            )),
            DensityDescriptor::Uniform { body } => Ok(Density::uniform(body)),
            DensityDescriptor::LinearTilt { a, body } => Density::linear_tilt(a, body),
        }
    }
}

impl TryFrom<&Density> for DensityDescriptor {
    type Error = Error;

    fn try_from(d: &Density) -> Result<Self> {
        match d {
            Density::Gaussian { factor, .. } => {
                Ok(DensityDescriptor::Gaussian { sigma: None, factor: Some(factor.rows()) })
            }
            Density::Uniform { body } => Ok(DensityDescriptor::Uniform { body: body.clone() }),
            Density::LinearTilt { a, body } => {
                Ok(DensityDescriptor::LinearTilt { a: a.clone(), body: body.clone() })
            }
            Density::BlackBox { .. } => {
                Err(Error::InvalidDensity("black-box densities cannot be serialized".into()))
            }
        }
    }
}

impl Serialize for Density {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityDescriptor::try_from(self)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Density {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = DensityDescriptor::deserialize(d)?;
        Density::try_from(desc).map_err(serde::de::Error::custom)
    }
}

/// Which density class the parameters certify: bounded support (`U`) or
/// bounded second moment about the centroid (`V`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassVariant {
    Bounded,
    Average,
}

impl std::str::FromStr for ClassVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounded" | "U" => Ok(ClassVariant::Bounded),
            "average" | "V" => Ok(ClassVariant::Average),
            _ => Err(Error::InvalidArgument(format!("unknown class variant {s:?}"))),
        }
    }
}

/// Parameters `(d, r, R, κ)` of the density classes, with the start set G.
///
/// κ is held in log space because it grows like Γ(d/2 + 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClassParamsDescriptor", into = "ClassParamsDescriptor")]
pub struct ClassParams {
    pub d: usize,
    pub r: f64,
    pub big_r: f64,
    pub log_kappa: f64,
    pub variant: ClassVariant,
    pub g: ConvexBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassParamsDescriptor {
    pub d: usize,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_kappa: Option<f64>,
    pub variant: ClassVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<ConvexBody>,
}

impl TryFrom<ClassParamsDescriptor> for ClassParams {
    type Error = Error;

    fn try_from(c: ClassParamsDescriptor) -> Result<Self> {
        let log_kappa = match (c.kappa, c.log_kappa) {
            (Some(k), None) => {
                if !(k > 0.0) {
                    return Err(Error::ClassViolation(format!("kappa must be positive, got {k}")));
                }
                k.ln()
            }
            (None, Some(lk)) => lk,
            _ => {
                return Err(Error::ClassViolation(
                    "class params need exactly one of \"kappa\" or \"log_kappa\"".into(),
                ))
            }
        };
        let g = c.g.unwrap_or_else(|| ConvexBody::unit_ball(c.d));
        ClassParams::new(c.d, c.r, c.big_r, log_kappa, c.variant, g)
    }
}

impl From<ClassParams> for ClassParamsDescriptor {
    fn from(p: ClassParams) -> Self {
        ClassParamsDescriptor {
            d: p.d,
            r: p.r,
            big_r: p.big_r,
            kappa: None,
            log_kappa: Some(p.log_kappa),
            variant: p.variant,
            g: Some(p.g),
        }
    }
}

impl ClassParams {
    pub fn new(d: usize, r: f64, big_r: f64, log_kappa: f64, variant: ClassVariant, g: ConvexBody) -> Result<Self> {
        if d == 0 {
            return Err(Error::ClassViolation("d must be at least 1".into()));
        }
        if !(r > 0.0 && r.is_finite()) || !(big_r > 0.0 && big_r.is_finite()) {
            return Err(Error::ClassViolation(format!("r and R must be positive, got r={r}, R={big_r}")));
        }
        if r > big_r {
            return Err(Error::ClassViolation(format!("r = {r} exceeds R = {big_r}")));
        }
        if !(log_kappa >= 3f64.ln() - 1e-12) || log_kappa.is_nan() {
            return Err(Error::ClassViolation(format!("kappa must be at least 3, got exp({log_kappa})")));
        }
        let ratio = d as f64 * big_r / r;
        if ratio < 3.0 - 1e-12 {
            return Err(Error::ClassViolation(format!("d·R/r must be at least 3, got {ratio}")));
        }
        if g.dim() != d || !g.is_bounded() {
            return Err(Error::ClassViolation("G must be a bounded body of dimension d".into()));
        }
        Ok(Self { d, r, big_r, log_kappa, variant, g })
    }

    pub fn kappa(&self) -> f64 {
        self.log_kappa.exp()
    }

    /// `d·R/r`, the quantity every bound is polynomial in.
    pub fn condition(&self) -> f64 {
        self.d as f64 * self.big_r / self.r
    }
}

/// Class parameters of `exp(−½ xᵀΣ⁻¹x)` with G the unit ball:
/// `R = ½√tr Σ`, `r = √(λ_min r*(d))` and
/// `κ = exp(1/(2λ_min)) Γ(d/2+1) 2^{d/2} √det Σ`.
///
/// A κ below 3 is raised to 3 (any larger κ also satisfies the start
/// condition). For d ≥ 10 these formulas give r > R; the bounds only use
/// `d·R/r`, so that ordering is not enforced here.
pub fn gaussian_class_params(factor: &LowerTriangular) -> Result<ClassParams> {
    let d = factor.dim();
    let sigma = factor.covariance();
    let eig = symmetric_eigenvalues(&sigma)?;
    let lambda_min = eig[0];
    if !(lambda_min > 0.0) {
        return Err(Error::InvalidDensity("covariance is not positive definite".into()));
    }
    let raw = raw_gaussian_log_kappa(factor, lambda_min);
    let rs = r_star(d)?;
    let r = (lambda_min * rs.r_star).sqrt();
    let big_r = 0.5 * factor.trace_covariance().sqrt();
    let params = ClassParams::new(d, r, r.max(big_r), raw.max(3f64.ln()), ClassVariant::Average, ConvexBody::unit_ball(d))?;
    Ok(ClassParams { big_r, ..params })
}

/// Unclamped `ln κ` of the Gaussian example.
pub fn raw_gaussian_log_kappa(factor: &LowerTriangular, lambda_min: f64) -> f64 {
    let h = factor.dim() as f64 / 2.0;
    0.5 / lambda_min + ln_gamma(h + 1.0) + h * std::f64::consts::LN_2 + 0.5 * factor.log_det_covariance()
}

/// Smallest eigenvalue of Σ.
pub fn lambda_min(factor: &LowerTriangular) -> Result<f64> {
    Ok(symmetric_eigenvalues(&factor.covariance())?[0])
}
