//! Exact distribution evolution, total-variation and separation
//! distances, mixing times, and distribution-level structural checks.
//!
//! Continuous time uses uniformization: H_t = e^{−t} Σ t^k/k! · K^k,
//! truncated once the accumulated Poisson mass exceeds 1 − tol/2, which
//! certifies a total-variation error below tol. Poisson weights are
//! formed in log space so arbitrary horizons are safe.

use crate::chain::{Chain, TimeParameter};
use crate::hitting::{self, HittingError};
use crate::spectral::SpectralError;
use crate::util::CompensatedSum;
use crate::Clock;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

/// Steps between renormalizations of an evolving vector.
const RENORM_EVERY: u64 = 64;
/// Default cap on uniformization terms.
pub const TRUNCATION_CAP: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("distribution lengths differ: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("separation undefined: pi[{index}] = 0")]
    ZeroPi { index: usize },
    #[error("epsilon = {0} must lie in (0, 1)")]
    EpsOutOfRange(f64),
    #[error("uniformization tolerance {0} must lie in (0, 1e-3]")]
    InvalidTol(f64),
    #[error("uniformization exceeded {cap} terms")]
    TruncationHorizon { cap: u64 },
    #[error("discrete distance did not reach epsilon within {cap} steps")]
    StepCap { cap: u64 },
    #[error("continuous distance did not reach epsilon before t = {cap}")]
    TimeCap { cap: f64 },
    #[error("precondition unmet: {0}")]
    Precondition(String),
    #[error(transparent)]
    Hitting(#[from] HittingError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// One multiplication by K from the right of a row distribution.
fn step_into(chain: &Chain, src: &[f64], dst: &mut [f64]) {
    let n = src.len() - 1;
    if n == 0 {
        dst[0] = src[0];
        return;
    }
    dst[0] = src[0] * chain.hold(0) + src[1] * chain.death(1);
    for i in 1..n {
        dst[i] = src[i - 1] * chain.birth(i - 1)
            + src[i] * chain.hold(i)
            + src[i + 1] * chain.death(i + 1);
    }
    dst[n] = src[n - 1] * chain.birth(n - 1) + src[n] * chain.hold(n);
}

fn renormalize(v: &mut [f64]) {
    let total = crate::util::sum(v);
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    }
}

/// Row distribution of K^m started from a point mass.
pub fn evolve_discrete(chain: &Chain, start: usize, m: u64) -> Vec<f64> {
    let mut v = vec![0.0; chain.len()];
    v[start] = 1.0;
    let mut buf = vec![0.0; chain.len()];
    for k in 0..m {
        step_into(chain, &v, &mut buf);
        std::mem::swap(&mut v, &mut buf);
        if (k + 1) % RENORM_EVERY == 0 {
            renormalize(&mut v);
        }
    }
    v
}

/// Row distribution of H_t = e^{−t(I−K)} started from a point mass,
/// accurate to `tol` in total variation.
pub fn evolve_continuous(
    chain: &Chain,
    start: usize,
    t: f64,
    tol: f64,
) -> Result<Vec<f64>, EvolveError> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(EvolveError::InvalidTol(tol));
    }
    let len = chain.len();
    let mut v = vec![0.0; len];
    v[start] = 1.0;
    if t == 0.0 {
        return Ok(v);
    }
    let mut out = vec![0.0; len];
    let mut buf = vec![0.0; len];
    let mut cum = CompensatedSum::new();
    let target = 1.0 - tol / 2.0;
    let log_t = t.ln();
    // log of the Poisson weight, accumulated with compensation so the
    // weights stay accurate over long horizons.
    let mut log_w = CompensatedSum::new();
    log_w.add(-t);
    let mut k: u64 = 0;
    loop {
        let w = log_w.value().exp();
        if w > 0.0 {
            cum.add(w);
            for (o, &x) in out.iter_mut().zip(v.iter()) {
                *o += w * x;
            }
        } else if k as f64 > t {
            // Past the mode with an underflowed weight: the true
            // remaining tail is below the underflow threshold.
            break;
        }
        if cum.value() >= target {
            break;
        }
        if k >= TRUNCATION_CAP {
            return Err(EvolveError::TruncationHorizon {
                cap: TRUNCATION_CAP,
            });
        }
        k += 1;
        log_w.add(log_t - (k as f64).ln());
        step_into(chain, &v, &mut buf);
        std::mem::swap(&mut v, &mut buf);
        if k % RENORM_EVERY == 0 {
            renormalize(&mut v);
        }
    }
    renormalize(&mut out);
    Ok(out)
}

/// Total variation distance (1/2) Σ |μ − ν|, clamped to [0, 1].
pub fn tv_distance(dist: &[f64], pi: &[f64]) -> Result<f64, EvolveError> {
    if dist.len() != pi.len() {
        return Err(EvolveError::DimensionMismatch {
            a: dist.len(),
            b: pi.len(),
        });
    }
    let mut acc = CompensatedSum::new();
    for (&m, &p) in dist.iter().zip(pi) {
        acc.add((m - p).abs());
    }
    Ok((0.5 * acc.value()).clamp(0.0, 1.0))
}

/// Separation max_x (1 − μ(x)/π(x)), clamped to [0, 1]. Requires π > 0.
pub fn separation(dist: &[f64], pi: &[f64]) -> Result<f64, EvolveError> {
    if dist.len() != pi.len() {
        return Err(EvolveError::DimensionMismatch {
            a: dist.len(),
            b: pi.len(),
        });
    }
    let mut min_ratio = f64::INFINITY;
    for (i, (&m, &p)) in dist.iter().zip(pi).enumerate() {
        if p <= 0.0 {
            return Err(EvolveError::ZeroPi { index: i });
        }
        min_ratio = min_ratio.min(m / p);
    }
    Ok((1.0 - min_ratio).clamp(0.0, 1.0))
}

/// Which distance a mixing-time query targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Tv,
    Separation,
}

/// Initial state of a mixing-time query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    State(usize),
    /// Maximum over all initial states; every start is scanned because
    /// the maximizer need not be a boundary state.
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixingTime {
    Steps(u64),
    Time(f64),
}

impl MixingTime {
    pub fn as_f64(&self) -> f64 {
        match *self {
            MixingTime::Steps(m) => m as f64,
            MixingTime::Time(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MixingOptions {
    /// Uniformization tolerance used inside distance evaluations.
    pub tol: f64,
    /// Cap for discrete searches (periodic chains never converge).
    pub step_cap: u64,
    /// Cap for continuous bracketing.
    pub time_cap: f64,
    /// Bisection stops when the bracket width is below
    /// rel_precision · max(1, t).
    pub rel_precision: f64,
}

impl Default for MixingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            step_cap: 10_000_000,
            time_cap: 1e15,
            rel_precision: 1e-9,
        }
    }
}

fn distance_at(
    chain: &Chain,
    start: usize,
    time: TimeParameter,
    dist: Distance,
    tol: f64,
) -> Result<f64, EvolveError> {
    let v = match time {
        TimeParameter::Discrete(m) => evolve_discrete(chain, start, m),
        TimeParameter::Continuous(t) => evolve_continuous(chain, start, t, tol)?,
    };
    match dist {
        Distance::Tv => tv_distance(&v, chain.stationary()),
        Distance::Separation => separation(&v, chain.stationary()),
    }
}

/// T(start, ε): first time the chosen distance drops to ε.
///
/// Discrete searches double then binary-search on the step count;
/// continuous searches bracket by doubling and bisect to the configured
/// relative precision. Both rely on the distances being non-increasing
/// in time.
pub fn mixing_time(
    chain: &Chain,
    start: Start,
    eps: f64,
    clock: Clock,
    dist: Distance,
    opts: &MixingOptions,
) -> Result<MixingTime, EvolveError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(EvolveError::EpsOutOfRange(eps));
    }
    match start {
        Start::State(x) => mixing_time_from(chain, x, eps, clock, dist, opts, None),
        Start::Max => mixing_time_max(chain, eps, clock, dist, opts),
    }
}

fn mixing_time_from(
    chain: &Chain,
    start: usize,
    eps: f64,
    clock: Clock,
    dist: Distance,
    opts: &MixingOptions,
    known_above: Option<f64>,
) -> Result<MixingTime, EvolveError> {
    match clock {
        Clock::Discrete => {
            let at = |m: u64| distance_at(chain, start, TimeParameter::Discrete(m), dist, opts.tol);
            if at(0)? <= eps {
                return Ok(MixingTime::Steps(0));
            }
            // Doubling pass keeps the vector alive; snapshot the last
            // sub-threshold point for the binary search.
            let mut v = vec![0.0; chain.len()];
            v[start] = 1.0;
            let mut buf = vec![0.0; chain.len()];
            let mut m: u64 = 0;
            let mut next_check: u64 = 1;
            let mut lo: u64 = 0;
            let mut snapshot = v.clone();
            let hi: u64;
            loop {
                while m < next_check {
                    step_into(chain, &v, &mut buf);
                    std::mem::swap(&mut v, &mut buf);
                    m += 1;
                    if m % RENORM_EVERY == 0 {
                        renormalize(&mut v);
                    }
                }
                let d = match dist {
                    Distance::Tv => tv_distance(&v, chain.stationary())?,
                    Distance::Separation => separation(&v, chain.stationary())?,
                };
                if d <= eps {
                    hi = m;
                    break;
                }
                lo = m;
                snapshot = v.clone();
                if m >= opts.step_cap {
                    return Err(EvolveError::StepCap { cap: opts.step_cap });
                }
                next_check = (m * 2).max(1);
            }
            // Smallest k in (lo, hi] with d(k) ≤ eps.
            let mut lo_m = lo;
            let mut hi_m = hi;
            while hi_m - lo_m > 1 {
                let mid = lo_m + (hi_m - lo_m) / 2;
                let mut w = snapshot.clone();
                for k in lo..mid {
                    step_into(chain, &w, &mut buf);
                    std::mem::swap(&mut w, &mut buf);
                    if (k + 1) % RENORM_EVERY == 0 {
                        renormalize(&mut w);
                    }
                }
                let d = match dist {
                    Distance::Tv => tv_distance(&w, chain.stationary())?,
                    Distance::Separation => separation(&w, chain.stationary())?,
                };
                if d <= eps {
                    hi_m = mid;
                } else {
                    lo_m = mid;
                }
            }
            Ok(MixingTime::Steps(hi_m))
        }
        Clock::Continuous => {
            let at =
                |t: f64| distance_at(chain, start, TimeParameter::Continuous(t), dist, opts.tol);
            if at(0.0)? <= eps {
                return Ok(MixingTime::Time(0.0));
            }
            let mut lo = known_above.unwrap_or(0.0);
            let mut hi = if lo > 0.0 { 2.0 * lo } else { 1.0 };
            loop {
                if at(hi)? <= eps {
                    break;
                }
                lo = hi;
                hi *= 2.0;
                if hi > opts.time_cap {
                    return Err(EvolveError::TimeCap { cap: opts.time_cap });
                }
            }
            while hi - lo > opts.rel_precision * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if at(mid)? <= eps {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(MixingTime::Time(0.5 * (lo + hi)))
        }
    }
}

/// Max-over-start mixing time. Starts whose distance at the current
/// best time is already below ε are settled with a single evolution;
/// the rest get a full search above that time.
fn mixing_time_max(
    chain: &Chain,
    eps: f64,
    clock: Clock,
    dist: Distance,
    opts: &MixingOptions,
) -> Result<MixingTime, EvolveError> {
    let first = mixing_time_from(chain, 0, eps, clock, dist, opts, None)?;
    let best_bits = AtomicU64::new(first.as_f64().to_bits());
    let results: Result<Vec<f64>, EvolveError> = (1..=chain.n())
        .into_par_iter()
        .map(|x| {
            let best = f64::from_bits(best_bits.load(Ordering::Relaxed));
            let time = match clock {
                Clock::Discrete => TimeParameter::Discrete(best as u64),
                Clock::Continuous => TimeParameter::Continuous(best),
            };
            if distance_at(chain, x, time, dist, opts.tol)? <= eps {
                return Ok(0.0);
            }
            let t = mixing_time_from(chain, x, eps, clock, dist, opts, Some(best))?.as_f64();
            best_bits.fetch_max(t.to_bits(), Ordering::Relaxed);
            Ok(t)
        })
        .collect();
    let max_rest = results?
        .into_iter()
        .fold(first.as_f64(), f64::max);
    Ok(match clock {
        Clock::Discrete => MixingTime::Steps(max_rest as u64),
        Clock::Continuous => MixingTime::Time(max_rest),
    })
}

/// TV and separation sampled over a time grid from one start.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    pub start: usize,
    pub clock: Clock,
    pub grid: Vec<f64>,
    pub tv: Vec<f64>,
    pub sep: Vec<f64>,
}

/// Geometric grid t0, t0·ratio, … capped at t1 (t1 always included).
pub fn geometric_grid(t0: f64, t1: f64, ratio: f64) -> Vec<f64> {
    assert!(t0 > 0.0 && t1 >= t0 && ratio > 1.0);
    let mut grid = Vec::new();
    let mut t = t0;
    while t < t1 {
        grid.push(t);
        t *= ratio;
    }
    grid.push(t1);
    grid
}

/// Continuous-clock profile over an ascending grid.
pub fn profile_continuous(
    chain: &Chain,
    start: usize,
    grid: &[f64],
    tol: f64,
) -> Result<DistanceProfile, EvolveError> {
    let mut tv = Vec::with_capacity(grid.len());
    let mut sep = Vec::with_capacity(grid.len());
    for &t in grid {
        let v = evolve_continuous(chain, start, t, tol)?;
        tv.push(tv_distance(&v, chain.stationary())?);
        sep.push(separation(&v, chain.stationary())?);
    }
    Ok(DistanceProfile {
        start,
        clock: Clock::Continuous,
        grid: grid.to_vec(),
        tv,
        sep,
    })
}

/// Discrete-clock profile over ascending step counts.
pub fn profile_discrete(
    chain: &Chain,
    start: usize,
    steps: &[u64],
) -> Result<DistanceProfile, EvolveError> {
    let mut tv = Vec::with_capacity(steps.len());
    let mut sep = Vec::with_capacity(steps.len());
    let mut v = vec![0.0; chain.len()];
    v[start] = 1.0;
    let mut buf = vec![0.0; chain.len()];
    let mut m: u64 = 0;
    for &target in steps {
        assert!(target >= m, "steps must be ascending");
        while m < target {
            step_into(chain, &v, &mut buf);
            std::mem::swap(&mut v, &mut buf);
            m += 1;
            if m % RENORM_EVERY == 0 {
                renormalize(&mut v);
            }
        }
        tv.push(tv_distance(&v, chain.stationary())?);
        sep.push(separation(&v, chain.stationary())?);
    }
    Ok(DistanceProfile {
        start,
        clock: Clock::Discrete,
        grid: steps.iter().map(|&s| s as f64).collect(),
        tv,
        sep,
    })
}

/// Hitting-moment brackets on the maximum TV mixing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingBrackets {
    /// T(ε1) ≤ upper with ε1 = 1 − π([j,k]) + δ.
    pub upper: f64,
    pub eps1: f64,
    /// T(ε2) ≥ lower with ε2 = min{π([j,n]), π([0,k])} − δ.
    pub lower: f64,
    pub eps2: f64,
    /// Set when ε2 ≤ 0, which makes the lower bound an empty statement.
    pub vacuous: bool,
}

pub fn tv_mixing_brackets(
    chain: &Chain,
    j: usize,
    k: usize,
    delta: f64,
) -> Result<MixingBrackets, EvolveError> {
    if j > k || k > chain.n() || !(delta > 0.0 && delta < 1.0) {
        return Err(EvolveError::Precondition(format!(
            "need j <= k <= n and delta in (0,1); got j={j}, k={k}, delta={delta}"
        )));
    }
    let n = chain.n();
    let tables = hitting::HittingTables::new(chain);
    let theta_j = tables.mean(0, j).max(tables.mean(n, j));
    let alpha = |i: usize| {
        tables
            .var(0, i, Clock::Continuous)
            .max(tables.var(n, i, Clock::Continuous))
            .sqrt()
    };
    let alpha_max = alpha(j).max(alpha(k));
    let upper =
        theta_j + tables.mean(j, k) + tables.mean(k, j) + (2.0 / delta - 1.0).sqrt() * alpha_max;
    let lower = theta_j - tables.mean(k, j) - (1.0 / delta - 1.0).sqrt() * alpha_max;
    let eps1 = 1.0 - chain.interval_mass(j, k) + delta;
    let eps2 = chain.tail_mass(j).min(chain.head_mass(k)) - delta;
    Ok(MixingBrackets {
        upper,
        eps1,
        lower,
        eps2,
        vacuous: eps2 <= 0.0,
    })
}

/// Single-start version: bounds on T(0, ·) from the moments of τ̃_i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMixingBracket {
    pub upper: f64,
    pub upper_eps: f64,
    pub lower: f64,
    pub lower_eps: f64,
}

pub fn boundary_mixing_bracket(
    chain: &Chain,
    i: usize,
    delta: f64,
) -> Result<BoundaryMixingBracket, EvolveError> {
    if i > chain.n() || !(delta > 0.0 && delta < 1.0) {
        return Err(EvolveError::Precondition(format!(
            "need i <= n and delta in (0,1); got i={i}, delta={delta}"
        )));
    }
    let mean = hitting::mean_hit(chain, 0, i);
    let var = hitting::var_hit(chain, 0, i, Clock::Continuous);
    let upper_eps = if i < chain.n() {
        delta + chain.tail_mass(i + 1)
    } else {
        delta
    };
    let lower_eps = if i > 0 {
        delta - chain.head_mass(i - 1)
    } else {
        delta
    };
    Ok(BoundaryMixingBracket {
        upper: mean + ((1.0 - delta) / delta * var).sqrt(),
        upper_eps,
        lower: mean - (delta / (1.0 - delta) * var).sqrt(),
        lower_eps,
    })
}

/// Whether H_t(0, ·)/π (or K^m(0, ·)/π) is non-increasing across states.
///
/// The discrete check requires min_i r_i ≥ 1/2 and reports a
/// precondition error otherwise.
pub fn unimodality_check(chain: &Chain, time: TimeParameter) -> Result<bool, EvolveError> {
    let v = match time {
        TimeParameter::Continuous(t) => evolve_continuous(chain, 0, t, 1e-12)?,
        TimeParameter::Discrete(m) => {
            if chain.min_hold() < 0.5 {
                return Err(EvolveError::Precondition(format!(
                    "discrete unimodality needs min holding rate >= 1/2, found {}",
                    chain.min_hold()
                )));
            }
            evolve_discrete(chain, 0, m)
        }
    };
    let pi = chain.stationary();
    let mut prev = f64::INFINITY;
    for (i, (&m, &p)) in v.iter().zip(pi).enumerate() {
        if p <= 0.0 {
            return Err(EvolveError::ZeroPi { index: i });
        }
        let ratio = m / p;
        if ratio > prev + 1e-12 * prev.max(1.0) {
            return Ok(false);
        }
        prev = prev.min(ratio);
    }
    Ok(true)
}

/// Comparison of simulated first-passage times against the sum of
/// independent exponentials with the leading-submatrix rates.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownShaoReport {
    pub theory_mean: f64,
    pub theory_var: f64,
    pub sample_mean: f64,
    pub sample_var: f64,
    /// (sample mean − theory mean) / standard error.
    pub mean_z: f64,
    /// (sample variance − theory variance) / standard error.
    pub var_z: f64,
    /// Kolmogorov–Smirnov statistic against the hypoexponential CDF;
    /// absent when the rates are too close for the closed form.
    pub ks: Option<f64>,
    /// 1% critical value for the KS statistic at this sample size.
    pub ks_critical_1pct: Option<f64>,
}

pub fn brown_shao_check(
    chain: &Chain,
    i: usize,
    samples: u64,
    seed: u64,
) -> Result<BrownShaoReport, EvolveError> {
    let rates = crate::spectral::leading_spectrum(chain, i)?;
    let rates = rates.values().to_vec();
    let theory_mean: f64 = rates.iter().map(|b| 1.0 / b).sum();
    let theory_var: f64 = rates.iter().map(|b| 1.0 / (b * b)).sum();

    let mut values = Vec::with_capacity(samples as usize);
    for k in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        values.push(sample_continuous_passage(chain, 0, i, &mut rng));
    }
    let nf = samples as f64;
    let sample_mean = crate::util::sum(&values) / nf;
    let mut m2 = CompensatedSum::new();
    let mut m4 = CompensatedSum::new();
    for &v in &values {
        let d = v - sample_mean;
        m2.add(d * d);
        m4.add(d * d * d * d);
    }
    let sample_var = m2.value() / (nf - 1.0);
    let fourth = m4.value() / nf;
    let mean_se = (sample_var / nf).sqrt();
    let var_se = ((fourth - sample_var * sample_var).max(0.0) / nf).sqrt();
    let mean_z = (sample_mean - theory_mean) / mean_se;
    let var_z = (sample_var - theory_var) / var_se.max(f64::MIN_POSITIVE);

    let ks = hypoexponential_weights(&rates).map(|weights| {
        values.sort_by(f64::total_cmp);
        let mut d_stat = 0.0_f64;
        for (idx, &x) in values.iter().enumerate() {
            let mut cdf = 1.0;
            for (w, b) in weights.iter().zip(&rates) {
                cdf -= w * (-b * x).exp();
            }
            let cdf = cdf.clamp(0.0, 1.0);
            let lo = idx as f64 / nf;
            let hi = (idx + 1) as f64 / nf;
            d_stat = d_stat.max((cdf - lo).abs()).max((hi - cdf).abs());
        }
        d_stat
    });
    let ks_critical_1pct = ks.as_ref().map(|_| 1.62762 / nf.sqrt());

    Ok(BrownShaoReport {
        theory_mean,
        theory_var,
        sample_mean,
        sample_var,
        mean_z,
        var_z,
        ks,
        ks_critical_1pct,
    })
}

fn sample_continuous_passage(chain: &Chain, from: usize, to: usize, rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    let mut state = from;
    let mut time = 0.0;
    while state != to {
        let u: f64 = rng.gen();
        if u < chain.birth(state) {
            state += 1;
        } else if u < chain.birth(state) + chain.death(state) {
            state -= 1;
        }
        let e: f64 = rng.gen();
        time -= (1.0 - e).ln();
    }
    time
}

/// Partial-fraction weights of the hypoexponential density; None when
/// rates are nearly repeated or the weights are too ill-conditioned.
fn hypoexponential_weights(rates: &[f64]) -> Option<Vec<f64>> {
    let k = rates.len();
    for a in 0..k {
        for b in a + 1..k {
            if (rates[a] - rates[b]).abs() <= 1e-6 * rates[a].max(rates[b]) {
                return None;
            }
        }
    }
    let mut weights = Vec::with_capacity(k);
    for j in 0..k {
        let mut w = 1.0;
        for l in 0..k {
            if l != j {
                w *= rates[l] / (rates[l] - rates[j]);
            }
        }
        if !w.is_finite() || w.abs() > 1e12 {
            return None;
        }
        weights.push(w);
    }
    Some(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Chain;

    fn two_state() -> Chain {
        Chain::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]).unwrap()
    }

    fn lazy_walk(n: usize) -> Chain {
        let mut p = vec![0.25; n + 1];
        let mut q = vec![0.25; n + 1];
        p[n] = 0.0;
        q[0] = 0.0;
        let r: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 1.0 - a - b).collect();
        Chain::new(p, q, r).unwrap()
    }

    #[test]
    fn discrete_evolution_point_mass_and_period_two() {
        let c = two_state();
        let v0 = evolve_discrete(&c, 0, 0);
        assert_eq!(v0, vec![1.0, 0.0]);
        let v3 = evolve_discrete(&c, 0, 3);
        assert_eq!(v3[1], 1.0);
    }

    #[test]
    fn continuous_two_state_analytic() {
        // H_t(0,0) = 1/2 + e^{−2t}/2; at t = ln2/2 it equals 3/4.
        let c = two_state();
        let t = 0.5 * 2.0_f64.ln();
        let v = evolve_continuous(&c, 0, t, 1e-12).unwrap();
        assert!((v[0] - 0.75).abs() < 1e-10, "{}", v[0]);
        let v0 = evolve_continuous(&c, 0, 0.0, 1e-9).unwrap();
        assert_eq!(v0, vec![1.0, 0.0]);
        assert!(evolve_continuous(&c, 0, 1.0, 0.5).is_err());
    }

    #[test]
    fn distance_values() {
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert!((tv_distance(&[0.5, 0.5], &[0.25, 0.75]).unwrap() - 0.25).abs() < 1e-15);
        assert!((tv_distance(&[1.0, 0.0], &[0.3, 0.7]).unwrap() - 0.7).abs() < 1e-15);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
        assert_eq!(separation(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(separation(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 1.0);
        assert!(separation(&[0.5, 0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn two_state_separation_is_twice_tv() {
        let c = two_state();
        for t in [0.3, 0.7, 1.5] {
            let v = evolve_continuous(&c, 0, t, 1e-12).unwrap();
            let tv = tv_distance(&v, c.stationary()).unwrap();
            let sep = separation(&v, c.stationary()).unwrap();
            assert!((sep - 2.0 * tv).abs() < 1e-10);
            assert!((sep - (-2.0 * t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn continuous_mixing_matches_two_state_closed_form() {
        let c = two_state();
        let opts = MixingOptions::default();
        for eps in [0.05, 0.25, 0.45] {
            let got = mixing_time(&c, Start::State(0), eps, Clock::Continuous, Distance::Tv, &opts)
                .unwrap()
                .as_f64();
            let want = (1.0 / (2.0 * eps)).ln() / 2.0;
            assert!((got - want).abs() < 1e-8, "eps={eps}: {got} vs {want}");
        }
        // Epsilon above 1 − π_min mixes instantly.
        let got = mixing_time(&c, Start::State(0), 0.6, Clock::Continuous, Distance::Tv, &opts)
            .unwrap()
            .as_f64();
        assert_eq!(got, 0.0);
    }

    #[test]
    fn discrete_mixing_on_lazy_walk() {
        let c = lazy_walk(6);
        let opts = MixingOptions::default();
        let m = match mixing_time(&c, Start::State(0), 0.25, Clock::Discrete, Distance::Tv, &opts)
            .unwrap()
        {
            MixingTime::Steps(m) => m,
            _ => unreachable!(),
        };
        assert!(m > 0);
        let before = tv_distance(&evolve_discrete(&c, 0, m - 1), c.stationary()).unwrap();
        let after = tv_distance(&evolve_discrete(&c, 0, m), c.stationary()).unwrap();
        assert!(before > 0.25 && after <= 0.25);
        // Max over starts is at least the boundary value.
        let mx = mixing_time(&c, Start::Max, 0.25, Clock::Discrete, Distance::Tv, &opts)
            .unwrap()
            .as_f64();
        assert!(mx >= m as f64);
    }

    #[test]
    fn periodic_chain_hits_step_cap() {
        let c = two_state();
        let opts = MixingOptions {
            step_cap: 64,
            ..Default::default()
        };
        let err =
            mixing_time(&c, Start::State(0), 0.25, Clock::Discrete, Distance::Tv, &opts)
                .unwrap_err();
        assert!(matches!(err, EvolveError::StepCap { .. }));
    }

    #[test]
    fn profiles_are_monotone_and_sandwiched() {
        let c = lazy_walk(8);
        let grid = geometric_grid(0.5, 200.0, 1.2);
        let prof = profile_continuous(&c, 0, &grid, 1e-12).unwrap();
        for w in prof.tv.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        for w in prof.sep.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        for (&tv, &sep) in prof.tv.iter().zip(&prof.sep) {
            assert!(tv <= sep + 1e-12);
            if tv <= 0.5 {
                assert!(sep <= 1.0 - (1.0 - 2.0 * tv) * (1.0 - 2.0 * tv) + 1e-12);
            }
        }
    }

    #[test]
    fn unimodality_examples() {
        let c = lazy_walk(8);
        assert!(unimodality_check(&c, TimeParameter::Continuous(0.0)).unwrap());
        assert!(unimodality_check(&c, TimeParameter::Continuous(3.7)).unwrap());
        assert!(unimodality_check(&c, TimeParameter::Discrete(11)).unwrap());
        let fast = two_state();
        assert!(matches!(
            unimodality_check(&fast, TimeParameter::Discrete(2)),
            Err(EvolveError::Precondition(_))
        ));
    }

    #[test]
    fn mixing_brackets_hold_on_small_chain() {
        let c = lazy_walk(10);
        let opts = MixingOptions::default();
        let m = c.quantile_state(0.5);
        let br = tv_mixing_brackets(&c, m.saturating_sub(2), (m + 2).min(c.n()), 0.1).unwrap();
        if !br.vacuous {
            let t_up = mixing_time(
                &c,
                Start::Max,
                br.eps1.min(0.999),
                Clock::Continuous,
                Distance::Tv,
                &opts,
            )
            .unwrap()
            .as_f64();
            assert!(t_up <= br.upper + 1e-6);
            let t_lo = mixing_time(&c, Start::Max, br.eps2, Clock::Continuous, Distance::Tv, &opts)
                .unwrap()
                .as_f64();
            assert!(t_lo >= br.lower - 1e-6);
        }
    }

    #[test]
    fn brown_shao_single_exponential() {
        let c = lazy_walk(4);
        let rep = brown_shao_check(&c, 1, 4000, 11).unwrap();
        assert!(rep.mean_z.abs() < 4.0, "mean z = {}", rep.mean_z);
        assert!(rep.var_z.abs() < 4.0, "var z = {}", rep.var_z);
        let ks = rep.ks.expect("single rate has exact cdf");
        assert!(ks < rep.ks_critical_1pct.unwrap(), "ks = {ks}");
    }
}
