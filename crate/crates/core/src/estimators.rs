//! Multi-run and single-run Markov chain estimators of `A(f, ρ) = ∫fρ / ∫ρ`.
//!
//! Every chain starts from an independent uniform draw on the start set G.
//! Chain `j` of an estimate seeded with stream `s` draws only from
//! `s.substream(j)`, so results are identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::hit_and_run::{run_chain, sample_direction, Trajectory};
use crate::integrand::Integrand;
use crate::quadrature::CompensatedSum;
use crate::rng::RandomStream;

/// Proposal budget of the polytope rejection sampler.
pub const MAX_POLYTOPE_PROPOSALS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Multi,
    Single,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi" => Ok(Mode::Multi),
            "single" => Ok(Mode::Single),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub value: f64,
    pub n: u64,
    pub n0: u64,
    pub per_sample_values: Vec<f64>,
    pub mode: Mode,
    pub seed: u64,
    /// Number of hit-and-run transitions performed.
    pub kernel_steps: u64,
    /// Number of integrand evaluations clamped into [−1, 1].
    pub clamped: u64,
}

impl EstimateResult {
    /// Standard error of `value`: i.i.d. formula for the multi-run
    /// estimator, batch means for the single-run estimator.
    pub fn standard_error(&self) -> f64 {
        match self.mode {
            Mode::Multi => sample_sd(&self.per_sample_values) / (self.per_sample_values.len() as f64).sqrt(),
            Mode::Single => batch_means_se(&self.per_sample_values),
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().copied().collect::<CompensatedSum>().value() / v.len() as f64
}

fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let ss: CompensatedSum = v.iter().map(|x| (x - m) * (x - m)).collect();
    (ss.value() / (v.len() - 1) as f64).sqrt()
}

/// Batch-means standard error of the mean of a correlated series
/// (⌊√n⌋ batches).
pub fn batch_means_se(v: &[f64]) -> f64 {
    let n = v.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return sample_sd(v) / (n as f64).sqrt();
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&v[b * size..(b + 1) * size])).collect();
    sample_sd(&means) / (batches as f64).sqrt()
}

/// Uniform draw on a bounded body.
pub fn sample_initial(g: &ConvexBody, rng: &mut RandomStream) -> Result<Vec<f64>> {
    match g {
        ConvexBody::Ball { center, radius } => {
            let d = center.len();
            let u = sample_direction(d, rng);
            let rad = radius * rng.uniform().powf(1.0 / d as f64);
            Ok(center.iter().zip(&u).map(|(c, ui)| c + rad * ui).collect())
        }
        ConvexBody::Box { lo, hi } => Ok(lo.iter().zip(hi).map(|(l, h)| l + (h - l) * rng.uniform()).collect()),
        ConvexBody::Polytope(_) => {
            let (lo, hi) = g
                .bounding_box()
                .ok_or_else(|| Error::InvalidBody("polytope has no bounding box".into()))?;
            for _ in 0..MAX_POLYTOPE_PROPOSALS {
                let x: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.uniform()).collect();
                if g.contains(&x)? {
                    return Ok(x);
                }
            }
            Err(Error::InvalidBody(format!(
                "rejection sampling on G exceeded {MAX_POLYTOPE_PROPOSALS} proposals; G is ill-conditioned"
            )))
        }
        ConvexBody::FullSpace { .. } => Err(Error::InvalidBody("cannot sample uniformly on fullspace".into())),
    }
}

fn check_inputs(rho: &Density, f: &Integrand, g: &ConvexBody, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if g.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: g.dim() });
    }
    if !g.is_bounded() {
        return Err(Error::InvalidBody("start set G must be bounded".into()));
    }
    f.check_dim(rho.dim())
}

/// `f(x)` clamped to [−1, 1]; the flag reports whether clamping happened.
fn clamped_eval(f: &Integrand, x: &[f64]) -> Result<(f64, bool)> {
    let v = f.eval(x);
    if v.is_nan() {
        return Err(Error::InvalidArgument("integrand evaluated to NaN".into()));
    }
    let c = v.clamp(-1.0, 1.0);
    Ok((c, c != v))
}

/// Multi-run estimator: the mean of f over the n0-th states of n
/// independent chains, each started uniformly on G.
pub fn multi_run(
    rho: &Density,
    f: &Integrand,
    g: &ConvexBody,
    n: u64,
    n0: u64,
    rng: &RandomStream,
) -> Result<EstimateResult> {
    check_inputs(rho, f, g, n)?;
    let outcomes: Vec<(f64, bool, u64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut chain_rng = rng.substream(j);
            let x0 = sample_initial(g, &mut chain_rng)?;
            let state = run_chain(rho, &x0, n0, &mut chain_rng)?;
            let (v, c) = clamped_eval(f, &state.x)?;
            Ok((v, c, state.step_index))
        })
        .collect::<Result<_>>()?;
    let per_sample_values: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    Ok(EstimateResult {
        value: mean(&per_sample_values),
        n,
        n0,
        mode: Mode::Multi,
        seed: rng.seed(),
        kernel_steps: outcomes.iter().map(|o| o.2).sum(),
        clamped: outcomes.iter().filter(|o| o.1).count() as u64,
        per_sample_values,
    })
}

/// Single-run estimator: one chain, burn-in n0, then the time average of f
/// over the next n states.
pub fn single_run(
    rho: &Density,
    f: &Integrand,
    g: &ConvexBody,
    n: u64,
    n0: u64,
    rng: &RandomStream,
) -> Result<EstimateResult> {
    check_inputs(rho, f, g, n)?;
    let mut chain_rng = rng.substream(0);
    let x0 = sample_initial(g, &mut chain_rng)?;
    let start = run_chain(rho, &x0, n0, &mut chain_rng)?;
    let mut values = Vec::with_capacity(n as usize);
    let mut clamped = 0;
    for state in Trajectory::new(rho, start.x, &mut chain_rng).take(n as usize) {
        let (v, c) = clamped_eval(f, &state?)?;
        clamped += c as u64;
        values.push(v);
    }
    Ok(EstimateResult {
        value: mean(&values),
        n,
        n0,
        mode: Mode::Single,
        seed: rng.seed(),
        kernel_steps: n0 + n,
        clamped,
        per_sample_values: values,
    })
}

/// Everything needed to rerun an estimator.
#[derive(Clone, Debug)]
pub struct EstimatorSpec<'a> {
    pub density: &'a Density,
    pub integrand: &'a Integrand,
    pub g: &'a ConvexBody,
    pub n: u64,
    pub n0: u64,
    pub mode: Mode,
}

impl EstimatorSpec<'_> {
    pub fn run(&self, rng: &RandomStream) -> Result<EstimateResult> {
        match self.mode {
            Mode::Multi => multi_run(self.density, self.integrand, self.g, self.n, self.n0, rng),
            Mode::Single => single_run(self.density, self.integrand, self.g, self.n, self.n0, rng),
        }
    }
}

/// Empirical mean squared error over independent repetitions.
#[derive(Clone, Debug, PartialEq)]
pub struct MseReport {
    pub mse: f64,
    /// Jackknife standard error of `mse`.
    pub jackknife_se: f64,
    pub estimates: Vec<f64>,
}

/// Runs `reps` independent estimates (repetition `i` uses
/// `rng.substream(i)`) and reports their mean squared deviation from
/// `reference`.
pub fn empirical_mse(spec: &EstimatorSpec<'_>, reference: f64, reps: u64, rng: &RandomStream) -> Result<MseReport> {
    if reps < 2 {
        return Err(Error::InvalidArgument("empirical MSE needs at least 2 repetitions".into()));
    }
    let estimates: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|i| spec.run(&rng.substream(i)).map(|r| r.value))
        .collect::<Result<_>>()?;
    let (mse, jackknife_se) = mse_with_jackknife(&estimates, reference);
    Ok(MseReport { mse, jackknife_se, estimates })
}

/// Mean squared deviation from `reference` and its jackknife standard
/// error.
pub fn mse_with_jackknife(estimates: &[f64], reference: f64) -> (f64, f64) {
    let r = estimates.len() as f64;
    let sq: Vec<f64> = estimates.iter().map(|e| (e - reference).powi(2)).collect();
    let total = sq.iter().copied().collect::<CompensatedSum>().value();
    let mse = total / r;
    let loo: Vec<f64> = sq.iter().map(|s| (total - s) / (r - 1.0)).collect();
    let loo_mean = mean(&loo);
    let var: f64 = loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>() * (r - 1.0) / r;
    (mse, var.sqrt())
}
