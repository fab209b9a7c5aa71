//! Parameterized generators for the chain families under study, plus
//! the seeded random-slowdown construction.
//!
//! Weight functions are handled in log space throughout: a generator
//! stores log f and produces both the death rates (from exponentiated
//! log differences) and the stationary log-weights (passed straight to
//! the chain constructor), so the two are consistent to rounding even
//! when f spans thousands of orders of magnitude.

use crate::chain::{Chain, ChainError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("invalid family parameter: {0}")]
    InvalidParam(String),
    #[error("family config: {0}")]
    Config(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// A scalar rule evaluated per size, e.g. ξ_n = coeff · n^a · (log n)^b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeRule {
    Const(f64),
    PowerLog {
        coeff: f64,
        n_exp: f64,
        #[serde(default)]
        log_exp: f64,
    },
}

impl SizeRule {
    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            SizeRule::Const(c) => c,
            SizeRule::PowerLog {
                coeff,
                n_exp,
                log_exp,
            } => {
                let nf = n as f64;
                coeff * nf.powf(n_exp) * nf.ln().powf(log_exp)
            }
        }
    }
}

/// Placement rule for a bottleneck edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexRule {
    /// i_n = n − k.
    NMinus { k: usize },
    /// i_n = ⌊f·n⌋, clamped into [0, n−1].
    Fraction { f: f64 },
}

impl IndexRule {
    pub fn eval(&self, n: usize) -> Result<usize, FamilyError> {
        let i = match *self {
            IndexRule::NMinus { k } => {
                if k == 0 || k > n {
                    return Err(FamilyError::InvalidParam(format!(
                        "n_minus k = {k} out of range for n = {n}"
                    )));
                }
                n - k
            }
            IndexRule::Fraction { f } => {
                if !(0.0..1.0).contains(&f) {
                    return Err(FamilyError::InvalidParam(format!("fraction {f} not in [0,1)")));
                }
                ((f * n as f64).floor() as usize).min(n.saturating_sub(1))
            }
        };
        Ok(i)
    }
}

/// Monotone weight function for Metropolis chains, kept as log f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneFn {
    /// f(x) = exp(α x^β)
    ExpPower { alpha: f64, beta: f64 },
    /// f(x) = exp(α (log(x+1))^β)
    LogPower { alpha: f64, beta: f64 },
    /// f ≡ 1: plain walk with uniform π.
    Const,
}

impl MonotoneFn {
    pub fn log_f(&self, x: usize) -> f64 {
        match *self {
            MonotoneFn::ExpPower { alpha, beta } => alpha * (x as f64).powf(beta),
            MonotoneFn::LogPower { alpha, beta } => alpha * ((x as f64) + 1.0).ln().powf(beta),
            MonotoneFn::Const => 0.0,
        }
    }

    fn validate(&self) -> Result<(), FamilyError> {
        match *self {
            MonotoneFn::ExpPower { alpha, beta } | MonotoneFn::LogPower { alpha, beta } => {
                if alpha <= 0.0 || beta <= 0.0 {
                    return Err(FamilyError::InvalidParam(format!(
                        "monotone weight needs alpha > 0 and beta > 0, got {alpha}, {beta}"
                    )));
                }
            }
            MonotoneFn::Const => {}
        }
        Ok(())
    }
}

/// Uniform slowdown distribution on (lo, hi) ⊆ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowdownDist {
    pub lo: f64,
    pub hi: f64,
}

impl SlowdownDist {
    pub fn validate(&self) -> Result<(), FamilyError> {
        if !(self.lo >= 0.0 && self.lo < self.hi && self.hi <= 1.0) {
            return Err(FamilyError::InvalidParam(format!(
                "slowdown interval ({}, {}) must satisfy 0 <= lo < hi <= 1",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// E[1/C]; None when the first moment diverges (lo = 0).
    pub fn mu(&self) -> Option<f64> {
        (self.lo > 0.0).then(|| (self.hi.ln() - self.lo.ln()) / (self.hi - self.lo))
    }

    /// Var(1/C); None when it diverges.
    pub fn nu2(&self) -> Option<f64> {
        if self.lo <= 0.0 {
            return None;
        }
        let second = (1.0 / self.lo - 1.0 / self.hi) / (self.hi - self.lo);
        let mu = self.mu().unwrap();
        Some(second - mu * mu)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let u: f64 = rng.gen();
            let c = self.lo + (self.hi - self.lo) * u;
            if c >= 1e-15 {
                return c;
            }
        }
    }
}

/// A reproducible chain family: `generate(n)` is deterministic given
/// the parameters (and the seed, for random families).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// Biased random walk with upward rate p ∈ (1/2, 1).
    BiasedRw { p: f64 },
    /// Metropolis chain for π ∝ f with a monotone weight f.
    Metropolis { f: MonotoneFn },
    /// Metropolis chain for the binomial distribution.
    MetropolisBinomial,
    /// Ehrenfest chain with a bottleneck of strength c at the split
    /// quantile (default a = 1/4).
    EhrenfestModified {
        c: SizeRule,
        #[serde(default = "default_split")]
        split: f64,
    },
    /// Collapsed Ehrenfest chain with a bottleneck of strength c at the
    /// edge selected by the index rule.
    CollapsedEhrenfest { bottleneck: IndexRule, c: SizeRule },
    /// Simple random walk with a weak edge between states 0 and 1.
    BottleneckSrw { xi: SizeRule },
    /// Per-edge i.i.d. slowdown of a base family; preserves π.
    Slowdown {
        base: Box<Family>,
        dist: SlowdownDist,
        seed: u64,
    },
}

fn default_split() -> f64 {
    0.25
}

/// Constructor mirror of the generator set, with parameter validation.
impl Family {
    pub fn biased_rw(p: f64) -> Result<Self, FamilyError> {
        if !(p > 0.5 && p < 1.0) {
            return Err(FamilyError::InvalidParam(format!(
                "biased walk needs p in (1/2, 1), got {p}"
            )));
        }
        Ok(Family::BiasedRw { p })
    }

    pub fn metropolis_monotone(f: MonotoneFn) -> Result<Self, FamilyError> {
        f.validate()?;
        Ok(Family::Metropolis { f })
    }

    pub fn metropolis_binomial() -> Self {
        Family::MetropolisBinomial
    }

    pub fn ehrenfest_modified(c: SizeRule, split: f64) -> Result<Self, FamilyError> {
        if !(split > 0.0 && split < 1.0) {
            return Err(FamilyError::InvalidParam(format!("split {split} not in (0,1)")));
        }
        Ok(Family::EhrenfestModified { c, split })
    }

    pub fn collapsed_ehrenfest(bottleneck: IndexRule, c: SizeRule) -> Self {
        Family::CollapsedEhrenfest { bottleneck, c }
    }

    pub fn bottleneck_srw(xi: SizeRule) -> Self {
        Family::BottleneckSrw { xi }
    }

    pub fn random_slowdown(base: Family, dist: SlowdownDist, seed: u64) -> Result<Self, FamilyError> {
        dist.validate()?;
        Ok(Family::Slowdown {
            base: Box::new(base),
            dist,
            seed,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::BiasedRw { .. } => "biased_rw",
            Family::Metropolis { .. } => "metropolis",
            Family::MetropolisBinomial => "metropolis_binomial",
            Family::EhrenfestModified { .. } => "ehrenfest_modified",
            Family::CollapsedEhrenfest { .. } => "collapsed_ehrenfest",
            Family::BottleneckSrw { .. } => "bottleneck_srw",
            Family::Slowdown { .. } => "slowdown",
        }
    }

    /// Compact parameter record for reports.
    pub fn describe(&self) -> String {
        serde_json::to_string(self).expect("family serialization cannot fail")
    }

    /// Parse the TOML family config: a `[family]` table with `name`,
    /// plus a `[params]` table. Unknown keys are errors.
    pub fn from_toml(text: &str) -> Result<Self, FamilyError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct FamilyFile {
            family: Header,
            #[serde(default)]
            params: Option<toml::Value>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Header {
            name: String,
        }
        let file: FamilyFile =
            toml::from_str(text).map_err(|e| FamilyError::Config(e.to_string()))?;
        let params = file.params.unwrap_or(toml::Value::Table(Default::default()));
        let tagged = toml::Value::Table({
            let mut t = toml::map::Map::new();
            t.insert("name".into(), toml::Value::String(file.family.name));
            t.insert("params".into(), params);
            t
        });
        tagged
            .try_into()
            .map_err(|e: toml::de::Error| FamilyError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        let value = toml::Value::try_from(self).expect("family serialization cannot fail");
        let mut out = String::new();
        out.push_str("[family]\n");
        if let toml::Value::Table(t) = &value {
            out.push_str(&format!("name = {}\n", t["name"]));
            if let Some(params) = t.get("params") {
                out.push_str("\n[params]\n");
                out.push_str(&toml::to_string(params).expect("params serialize"));
            }
        }
        out
    }

    /// Build the chain of size n.
    pub fn generate(&self, n: usize) -> Result<Chain, FamilyError> {
        match self {
            Family::BiasedRw { p } => biased_rw_chain(n, *p),
            Family::Metropolis { f } => {
                f.validate()?;
                metropolis_chain(n, |x| f.log_f(x))
            }
            Family::MetropolisBinomial => binomial_metropolis_chain(n),
            Family::EhrenfestModified { c, split } => {
                let cn = c.eval(n);
                ehrenfest_modified_chain(n, cn, *split)
            }
            Family::CollapsedEhrenfest { bottleneck, c } => {
                let i = bottleneck.eval(n)?;
                collapsed_ehrenfest_chain(n, i, c.eval(n))
            }
            Family::BottleneckSrw { xi } => bottleneck_srw_chain(n, xi.eval(n)),
            Family::Slowdown { base, dist, seed } => {
                dist.validate()?;
                let base_chain = base.generate(n)?;
                Ok(apply_slowdown(&base_chain, dist, *seed, n)?)
            }
        }
    }
}

fn rows_from_pq(p: &[f64], q: &[f64]) -> Vec<f64> {
    p.iter().zip(q).map(|(&a, &b)| 1.0 - a - b).collect()
}

fn biased_rw_chain(n: usize, p: f64) -> Result<Chain, FamilyError> {
    if !(p > 0.5 && p < 1.0) {
        return Err(FamilyError::InvalidParam(format!(
            "biased walk needs p in (1/2, 1), got {p}"
        )));
    }
    let q = 1.0 - p;
    let mut pv = vec![p; n + 1];
    let mut qv = vec![q; n + 1];
    pv[n] = 0.0;
    qv[0] = 0.0;
    let rv = rows_from_pq(&pv, &qv);
    Ok(Chain::new(pv, qv, rv)?)
}

/// Metropolis chain for π ∝ f on top of the simple walk with holding
/// 1/2 at the boundaries: p_i = 1/2, q_{i+1} = f(i)/(2 f(i+1)).
pub fn metropolis_chain(
    n: usize,
    log_f: impl Fn(usize) -> f64,
) -> Result<Chain, FamilyError> {
    let log_w: Vec<f64> = (0..=n).map(&log_f).collect();
    for i in 0..n {
        if log_w[i + 1] < log_w[i] {
            return Err(FamilyError::InvalidParam(format!(
                "weight function decreases between {} and {}",
                i,
                i + 1
            )));
        }
    }
    let mut p = vec![0.5; n + 1];
    p[n] = 0.0;
    let mut q = vec![0.0; n + 1];
    for i in 0..n {
        q[i + 1] = 0.5 * (log_w[i] - log_w[i + 1]).exp();
    }
    let r = rows_from_pq(&p, &q);
    Ok(Chain::with_log_weights(p, q, r, log_w)?)
}

fn binomial_metropolis_chain(n: usize) -> Result<Chain, FamilyError> {
    let mut p = vec![0.0; n + 1];
    let mut q = vec![0.0; n + 1];
    for i in 0..n {
        let up = (n - i) as f64 / (i + 1) as f64;
        p[i] = 0.5 * up.min(1.0);
        q[i + 1] = 0.5 * (1.0 / up).min(1.0);
    }
    let r = rows_from_pq(&p, &q);
    let mut log_w = Vec::with_capacity(n + 1);
    let mut acc = crate::util::CompensatedSum::new();
    log_w.push(0.0);
    for i in 0..n {
        acc.add(((n - i) as f64 / (i + 1) as f64).ln());
        log_w.push(acc.value());
    }
    Ok(Chain::with_log_weights(p, q, r, log_w)?)
}

/// Plain Ehrenfest rates p_i = 1 − i/n, q_i = i/n with an optional
/// bottleneck of strength c applied to both directions of one edge; the
/// removed mass goes to holding, so π stays binomial.
fn ehrenfest_modified_chain(n: usize, c: f64, split: f64) -> Result<Chain, FamilyError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(FamilyError::InvalidParam(format!(
            "bottleneck strength c = {c} must lie in (0, 1]"
        )));
    }
    if n == 0 {
        return Err(FamilyError::InvalidParam("ehrenfest needs n >= 1".into()));
    }
    let nf = n as f64;
    let mut p: Vec<f64> = (0..=n).map(|i| 1.0 - i as f64 / nf).collect();
    let mut q: Vec<f64> = (0..=n).map(|i| i as f64 / nf).collect();
    p[n] = 0.0;
    q[0] = 0.0;
    let base = Chain::new(p.clone(), q.clone(), rows_from_pq(&p, &q))?;
    if c == 1.0 {
        return Ok(base);
    }
    let m = base.quantile_state(split);
    debug_assert!(m < n);
    p[m] *= c;
    q[m + 1] *= c;
    let r = rows_from_pq(&p, &q);
    Ok(Chain::with_log_weights(
        p,
        q,
        r,
        base.log_stationary().to_vec(),
    )?)
}

/// Collapsed Ehrenfest chain on {0,…,n} (states i and 2n−i of the
/// Ehrenfest chain on {0,…,2n} merged), with a bottleneck of strength c
/// on the edge (i, i+1).
fn collapsed_ehrenfest_chain(n: usize, i: usize, c: f64) -> Result<Chain, FamilyError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(FamilyError::InvalidParam(format!(
            "bottleneck strength c = {c} must lie in (0, 1]"
        )));
    }
    if n == 0 || i >= n {
        return Err(FamilyError::InvalidParam(format!(
            "collapsed ehrenfest needs 0 <= i < n, got i = {i}, n = {n}"
        )));
    }
    let two_n = (2 * n) as f64;
    let mut p: Vec<f64> = (0..=n).map(|j| 1.0 - j as f64 / two_n).collect();
    let mut q: Vec<f64> = (0..=n).map(|j| j as f64 / two_n).collect();
    p[n] = 0.0;
    q[0] = 0.0;
    q[n] = 1.0;
    let base = Chain::new(p.clone(), q.clone(), rows_from_pq(&p, &q))?;
    if c == 1.0 {
        return Ok(base);
    }
    p[i] *= c;
    q[i + 1] *= c;
    let r = rows_from_pq(&p, &q);
    Ok(Chain::with_log_weights(
        p,
        q,
        r,
        base.log_stationary().to_vec(),
    )?)
}

/// Simple walk with holding 1/2 at the right boundary and a weak edge
/// K(0,1) = K(1,0) = ξ; π is uniform.
fn bottleneck_srw_chain(n: usize, xi: f64) -> Result<Chain, FamilyError> {
    if !(xi > 0.0 && xi < 0.5) {
        return Err(FamilyError::InvalidParam(format!(
            "bottleneck rate xi = {xi} must lie in (0, 1/2)"
        )));
    }
    if n == 0 {
        return Err(FamilyError::InvalidParam("bottleneck srw needs n >= 1".into()));
    }
    let mut p = vec![0.5; n + 1];
    let mut q = vec![0.5; n + 1];
    p[0] = xi;
    q[1] = xi;
    p[n] = 0.0;
    q[0] = 0.0;
    let r = rows_from_pq(&p, &q);
    Ok(Chain::new(p, q, r)?)
}

/// Multiply both directions of every edge (i−1, i) by an i.i.d. factor
/// C_i drawn from `dist`; detailed balance is untouched, so π is the
/// base chain's. The draw for size n uses substream n of the seed, so
/// adding sizes never perturbs existing draws.
pub fn apply_slowdown(
    base: &Chain,
    dist: &SlowdownDist,
    seed: u64,
    n: usize,
) -> Result<Chain, ChainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    let factors: Vec<f64> = (0..base.n()).map(|_| dist.draw(&mut rng)).collect();
    scaled_edges(base, &factors)
}

/// Rescale edge (i, i+1) by factors[i], recomputing holding rates.
pub fn scaled_edges(base: &Chain, factors: &[f64]) -> Result<Chain, ChainError> {
    assert_eq!(factors.len(), base.n());
    let mut p = base.births().to_vec();
    let mut q = base.deaths().to_vec();
    for (i, &c) in factors.iter().enumerate() {
        p[i] *= c;
        q[i + 1] *= c;
    }
    let r = rows_from_pq(&p, &q);
    let log_w: Vec<f64> = base.log_stationary().to_vec();
    Chain::with_log_weights(p, q, r, log_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util;

    #[test]
    fn biased_rw_matches_handbuilt_chain() {
        let fam = Family::biased_rw(2.0 / 3.0).unwrap();
        let c = fam.generate(2).unwrap();
        let q = 1.0 - 2.0 / 3.0;
        assert_eq!(c.births(), &[2.0 / 3.0, 2.0 / 3.0, 0.0]);
        assert_eq!(c.deaths(), &[0.0, q, q]);
        for (got, want) in c.stationary().iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(Family::biased_rw(0.5).is_err());
        assert!(Family::biased_rw(1.0).is_err());
    }

    #[test]
    fn biased_rw_right_mass_approaches_limit() {
        let p = 0.7;
        let fam = Family::biased_rw(p).unwrap();
        let c = fam.generate(200).unwrap();
        let want = 1.0 - (1.0 - p) / p;
        assert!((c.stationary()[200] - want).abs() < 1e-12);
    }

    #[test]
    fn binomial_metropolis_small_cases() {
        let c = Family::metropolis_binomial().generate(2).unwrap();
        assert_eq!(c.births(), &[0.5, 0.25, 0.0]);
        assert_eq!(c.deaths(), &[0.0, 0.25, 0.5]);
        assert_eq!(c.holds(), &[0.5, 0.5, 0.5]);
        for (got, want) in c.stationary().iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-14);
        }
        // Flip invariance is exact.
        let c = Family::metropolis_binomial().generate(9).unwrap();
        let f = c.flip();
        assert_eq!(c.births(), f.births());
        assert_eq!(c.deaths(), f.deaths());
    }

    #[test]
    fn metropolis_rates_are_monotone_rows() {
        let fam = Family::metropolis_monotone(MonotoneFn::ExpPower {
            alpha: 1.0,
            beta: 1.0,
        })
        .unwrap();
        let c = fam.generate(12).unwrap();
        for i in 0..12 {
            assert!(c.birth(i) + c.death(i + 1) <= 1.0 + 1e-15);
        }
        // π(i) ∝ e^i.
        let z: f64 = (0..=12).map(|i| (i as f64).exp()).sum();
        for i in 0..=12 {
            assert!((c.stationary()[i] - (i as f64).exp() / z).abs() < 1e-12);
        }
    }

    #[test]
    fn metropolis_extreme_weights_stay_valid() {
        let fam = Family::metropolis_monotone(MonotoneFn::ExpPower {
            alpha: 1.0,
            beta: 2.0,
        })
        .unwrap();
        let c = fam.generate(1024).unwrap();
        assert!(!c.validity().underflowed_edges.is_empty());
        assert!((util::sum(c.stationary()) - 1.0).abs() < 1e-12);
        assert_eq!(c.quantile_state(0.5), 1024);
    }

    #[test]
    fn constant_weight_gives_uniform_pi() {
        let fam = Family::metropolis_monotone(MonotoneFn::Const).unwrap();
        let c = fam.generate(7).unwrap();
        for &x in c.stationary() {
            assert!((x - 1.0 / 8.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ehrenfest_bottleneck_keeps_binomial_pi() {
        let plain = Family::ehrenfest_modified(SizeRule::Const(1.0), 0.25)
            .unwrap()
            .generate(16)
            .unwrap();
        let slowed = Family::ehrenfest_modified(SizeRule::Const(0.05), 0.25)
            .unwrap()
            .generate(16)
            .unwrap();
        for i in 0..=16 {
            assert!((plain.stationary()[i] - slowed.stationary()[i]).abs() < 1e-13);
        }
        assert!(plain.validity().periodic);
        assert!(!slowed.validity().periodic);
    }

    #[test]
    fn collapsed_ehrenfest_right_mass() {
        // π(n) = 2^{-2n} C(2n, n).
        let c = Family::collapsed_ehrenfest(IndexRule::NMinus { k: 1 }, SizeRule::Const(1.0))
            .generate(8)
            .unwrap();
        let want = {
            let mut b = 1.0f64;
            for k in 0..8 {
                b *= (16 - k) as f64 / (k + 1) as f64;
            }
            b * 0.25f64.powi(8) * 2.0f64.powi(0)
        };
        assert!((c.stationary()[8] - want / 1.0).abs() < 1e-12);
    }

    #[test]
    fn bottleneck_srw_rates_and_uniform_pi() {
        let fam = Family::bottleneck_srw(SizeRule::PowerLog {
            coeff: 1.0,
            n_exp: -3.0,
            log_exp: 0.0,
        });
        let c = fam.generate(10).unwrap();
        assert!((c.birth(0) - 1e-3).abs() < 1e-18);
        for &x in c.stationary() {
            assert!((x - 1.0 / 11.0).abs() < 1e-14);
        }
        assert!(Family::bottleneck_srw(SizeRule::Const(0.5)).generate(4).is_err());
    }

    #[test]
    fn slowdown_preserves_pi_and_is_reproducible() {
        let base = Family::metropolis_binomial();
        let fam = Family::random_slowdown(base, SlowdownDist { lo: 0.5, hi: 1.0 }, 99).unwrap();
        let a = fam.generate(32).unwrap();
        let b = fam.generate(32).unwrap();
        assert_eq!(a.births(), b.births());
        let plain = Family::metropolis_binomial().generate(32).unwrap();
        for i in 0..=32 {
            assert!((a.stationary()[i] - plain.stationary()[i]).abs() < 1e-13);
        }
        assert!(Family::random_slowdown(
            Family::metropolis_binomial(),
            SlowdownDist { lo: 0.5, hi: 0.4 },
            1
        )
        .is_err());
    }

    #[test]
    fn slowdown_moments_closed_form() {
        let d = SlowdownDist { lo: 0.5, hi: 1.0 };
        let mu = d.mu().unwrap();
        assert!((mu - 2.0 * 2.0f64.ln()).abs() < 1e-14);
        let nu2 = d.nu2().unwrap();
        assert!((nu2 - (2.0 - mu * mu)).abs() < 1e-14);
        assert_eq!(SlowdownDist { lo: 0.0, hi: 1.0 }.mu(), None);
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let fam = Family::biased_rw(0.7).unwrap();
        let text = fam.to_toml();
        let back = Family::from_toml(&text).unwrap();
        assert_eq!(back, fam);

        let explicit = r#"
[family]
name = "biased_rw"

[params]
p = 0.7
"#;
        assert_eq!(Family::from_toml(explicit).unwrap(), fam);

        let unknown = r#"
[family]
name = "biased_rw"

[params]
p = 0.7
extra = 1
"#;
        assert!(Family::from_toml(unknown).is_err());

        let nested = r#"
[family]
name = "slowdown"

[params]
seed = 7
dist = { lo = 0.5, hi = 1.0 }

[params.base]
name = "metropolis_binomial"
"#;
        let f = Family::from_toml(nested).unwrap();
        assert_eq!(f.name(), "slowdown");
    }
}
