//! Construction, validation, and canonical transforms of finite
//! birth-and-death chains on `{0, …, n}`.
//!
//! A chain is stored as its transition rates `p` (up), `q` (down), `r`
//! (hold) together with the stationary distribution, which is kept both
//! in linear and in log form. The log form is what keeps hitting-time
//! and quantile computations meaningful for sharply peaked stationary
//! distributions whose linear probabilities underflow.

use crate::util::{self, CompensatedSum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for row sums and stationary normalization.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Relative tolerance for the detailed-balance check.
pub const DETAILED_BALANCE_RTOL: f64 = 1e-12;
/// Both sides of a detailed-balance pair below this are treated as a
/// consistent underflow rather than a violation.
const UNDERFLOW_FLOOR: f64 = 1e-280;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("rate sequences have mismatched lengths: p={p}, q={q}, r={r}")]
    DimensionMismatch { p: usize, q: usize, r: usize },
    #[error("empty rate sequences")]
    Empty,
    #[error("{name}[{index}] = {value} is outside [0, 1]")]
    RateOutOfRange {
        name: &'static str,
        index: usize,
        value: f64,
    },
    #[error("boundary rate {name} must be zero, found {value}")]
    NonzeroBoundary { name: &'static str, value: f64 },
    #[error("row {index} sums to {sum}, which is farther than {tol} from 1")]
    RowSum { index: usize, sum: f64, tol: f64 },
    #[error("stationary distribution sums to {sum} after normalization")]
    StationaryNormalization { sum: f64 },
    #[error("chain is reducible: {name}[{index}] = 0")]
    Reducible { name: &'static str, index: usize },
    #[error("detailed balance fails at edge ({index}, {next}): {lhs} vs {rhs}", next = index + 1)]
    DetailedBalance { index: usize, lhs: f64, rhs: f64 },
    #[error("lazy parameter {delta} exceeds the minimum holding rate {min_hold}")]
    LazyDelta { delta: f64, min_hold: f64 },
    #[error("invalid chain file: {0}")]
    File(String),
}

/// Structural observations recorded at construction time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// All holding rates are zero with n ≥ 1, so the discrete chain has
    /// period two and discrete distances need not reach small epsilon.
    pub periodic: bool,
    /// Edges (i, i+1) whose stored rate underflowed to zero although the
    /// construction asserts irreducibility through supplied log weights.
    pub underflowed_edges: Vec<usize>,
}

/// An irreducible birth-and-death chain with cached stationary data.
#[derive(Debug, Clone)]
pub struct Chain {
    p: Vec<f64>,
    q: Vec<f64>,
    r: Vec<f64>,
    pi: Vec<f64>,
    log_pi: Vec<f64>,
    /// cum_head[i] = π([0, i]), compensated prefix sums.
    cum_head: Vec<f64>,
    /// cum_tail[i] = π([i, n]), compensated suffix sums.
    cum_tail: Vec<f64>,
    validity: ValidityReport,
}

/// Discrete step count or continuous time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeParameter {
    Discrete(u64),
    Continuous(f64),
}

/// On-disk JSON description: `r` may be omitted, then `r_i = 1 - p_i - q_i`.
#[derive(Debug, Serialize, Deserialize)]
struct ChainFile {
    n: usize,
    p: Vec<f64>,
    q: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<Vec<f64>>,
}

impl Chain {
    /// Build and validate a chain from its transition rates.
    ///
    /// The stationary distribution is computed from the product formula
    /// in log space and re-normalized.
    pub fn new(p: Vec<f64>, q: Vec<f64>, r: Vec<f64>) -> Result<Self, ChainError> {
        validate_rates(&p, &q, &r)?;
        let n = p.len() - 1;
        for i in 0..n {
            if p[i] == 0.0 {
                return Err(ChainError::Reducible { name: "p", index: i });
            }
            if q[i + 1] == 0.0 {
                return Err(ChainError::Reducible {
                    name: "q",
                    index: i + 1,
                });
            }
        }
        // log π(i) ∝ Σ_{k<i} log(p_k / q_{k+1})
        let mut log_w = Vec::with_capacity(n + 1);
        let mut acc = CompensatedSum::new();
        log_w.push(0.0);
        for i in 0..n {
            acc.add(p[i].ln() - q[i + 1].ln());
            log_w.push(acc.value());
        }
        Self::assemble(p, q, r, log_w, Vec::new())
    }

    /// Build a chain whose stationary log-weights are supplied directly.
    ///
    /// Family generators use this when the defining weights (e.g. log f)
    /// are available in closed form; it stays accurate where the rate
    /// ratios themselves underflow. Edges whose stored rate is exactly
    /// zero are accepted only if the corresponding stationary flow is
    /// negligible, and are recorded in the validity report.
    pub fn with_log_weights(
        p: Vec<f64>,
        q: Vec<f64>,
        r: Vec<f64>,
        log_w: Vec<f64>,
    ) -> Result<Self, ChainError> {
        validate_rates(&p, &q, &r)?;
        if log_w.len() != p.len() {
            return Err(ChainError::DimensionMismatch {
                p: p.len(),
                q: log_w.len(),
                r: r.len(),
            });
        }
        let n = p.len() - 1;
        let log_z = util::log_sum_exp(&log_w);
        let mut underflowed = Vec::new();
        for i in 0..n {
            if p[i] == 0.0 || q[i + 1] == 0.0 {
                // The exact stationary flow through the edge is at most
                // min(π(i), π(i+1)); a zero stored rate is tolerable
                // only when that flow is negligible.
                let mass = (log_w[i] - log_z).exp().min((log_w[i + 1] - log_z).exp());
                if mass > UNDERFLOW_FLOOR {
                    let name = if p[i] == 0.0 { "p" } else { "q" };
                    let index = if p[i] == 0.0 { i } else { i + 1 };
                    return Err(ChainError::Reducible { name, index });
                }
                underflowed.push(i);
            }
        }
        Self::assemble(p, q, r, log_w, underflowed)
    }

    fn assemble(
        p: Vec<f64>,
        q: Vec<f64>,
        r: Vec<f64>,
        log_w: Vec<f64>,
        underflowed_edges: Vec<usize>,
    ) -> Result<Self, ChainError> {
        let n = p.len() - 1;
        let log_z = util::log_sum_exp(&log_w);
        let log_pi: Vec<f64> = log_w.iter().map(|&w| w - log_z).collect();
        let mut pi: Vec<f64> = log_pi.iter().map(|&l| l.exp()).collect();
        // Re-normalize in linear space so Σπ = 1 to working precision.
        let z = util::sum(&pi);
        for x in pi.iter_mut() {
            *x /= z;
        }

        // Detailed balance: π(i) p_i = π(i+1) q_{i+1}, with an absolute
        // floor so consistently underflowed edges pass.
        for i in 0..n {
            let lhs = pi[i] * p[i];
            let rhs = pi[i + 1] * q[i + 1];
            if !util::close_rel(lhs, rhs, DETAILED_BALANCE_RTOL, UNDERFLOW_FLOOR) {
                return Err(ChainError::DetailedBalance { index: i, lhs, rhs });
            }
        }

        let mut cum_head = Vec::with_capacity(n + 1);
        let mut acc = CompensatedSum::new();
        for &x in &pi {
            acc.add(x);
            cum_head.push(acc.value());
        }
        let mut cum_tail = vec![0.0; n + 1];
        let mut acc = CompensatedSum::new();
        for i in (0..=n).rev() {
            acc.add(pi[i]);
            cum_tail[i] = acc.value();
        }
        let total = cum_head[n];
        if (total - 1.0).abs() > ROW_SUM_TOL {
            return Err(ChainError::StationaryNormalization { sum: total });
        }

        let periodic = n >= 1 && r.iter().all(|&x| x == 0.0);
        Ok(Self {
            p,
            q,
            r,
            pi,
            log_pi,
            cum_head,
            cum_tail,
            validity: ValidityReport {
                periodic,
                underflowed_edges,
            },
        })
    }

    /// Parse the chain JSON format `{"n":…, "p":[…], "q":[…], "r":[…]}`.
    pub fn from_json(text: &str) -> Result<Self, ChainError> {
        let file: ChainFile =
            serde_json::from_str(text).map_err(|e| ChainError::File(e.to_string()))?;
        if file.p.len() != file.n + 1 || file.q.len() != file.n + 1 {
            return Err(ChainError::File(format!(
                "n = {} but p has {} and q has {} entries",
                file.n,
                file.p.len(),
                file.q.len()
            )));
        }
        let r = match file.r {
            Some(r) => r,
            None => file
                .p
                .iter()
                .zip(&file.q)
                .map(|(&pi, &qi)| 1.0 - pi - qi)
                .collect(),
        };
        Self::new(file.p, file.q, r)
    }

    /// Serialize to the chain JSON format.
    pub fn to_json(&self) -> String {
        let file = ChainFile {
            n: self.n(),
            p: self.p.clone(),
            q: self.q.clone(),
            r: Some(self.r.clone()),
        };
        serde_json::to_string(&file).expect("chain serialization cannot fail")
    }

    pub fn n(&self) -> usize {
        self.p.len() - 1
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn birth(&self, i: usize) -> f64 {
        self.p[i]
    }

    pub fn death(&self, i: usize) -> f64 {
        self.q[i]
    }

    pub fn hold(&self, i: usize) -> f64 {
        self.r[i]
    }

    pub fn births(&self) -> &[f64] {
        &self.p
    }

    pub fn deaths(&self) -> &[f64] {
        &self.q
    }

    pub fn holds(&self) -> &[f64] {
        &self.r
    }

    /// The stationary distribution π.
    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// log π, exact even where π underflows.
    pub fn log_stationary(&self) -> &[f64] {
        &self.log_pi
    }

    pub fn validity(&self) -> &ValidityReport {
        &self.validity
    }

    /// π([0, i]).
    pub fn head_mass(&self, i: usize) -> f64 {
        self.cum_head[i].min(1.0)
    }

    /// π([i, n]).
    pub fn tail_mass(&self, i: usize) -> f64 {
        self.cum_tail[i].min(1.0)
    }

    /// π([i, j]) for i ≤ j.
    pub fn interval_mass(&self, i: usize, j: usize) -> f64 {
        let mut acc = CompensatedSum::new();
        for k in i..=j {
            acc.add(self.pi[k]);
        }
        acc.value().min(1.0)
    }

    /// min{π([0, i]), π([i, n])}, the split mass a(i).
    pub fn split_mass(&self, i: usize) -> f64 {
        self.head_mass(i).min(self.tail_mass(i))
    }

    /// Minimum holding rate over all states.
    pub fn min_hold(&self) -> f64 {
        self.r.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// De-lazying transform (K − δI)/(1 − δ). Preserves π and scales the
    /// spectrum of I − K by 1/(1 − δ).
    pub fn lazy_transform(&self, delta: f64) -> Result<Self, ChainError> {
        let min_hold = self.min_hold();
        if !(0.0..1.0).contains(&delta) || delta > min_hold {
            return Err(ChainError::LazyDelta { delta, min_hold });
        }
        if delta == 0.0 {
            return Ok(self.clone());
        }
        let scale = 1.0 - delta;
        let p: Vec<f64> = self.p.iter().map(|&x| x / scale).collect();
        let q: Vec<f64> = self.q.iter().map(|&x| x / scale).collect();
        let r: Vec<f64> = self.r.iter().map(|&x| ((x - delta) / scale).max(0.0)).collect();
        let log_w: Vec<f64> = {
            let l0 = self.log_pi[0];
            self.log_pi.iter().map(|&l| l - l0).collect()
        };
        Self::with_log_weights(p, q, r, log_w)
    }

    /// State-reversed chain: rates and the cached stationary
    /// distribution are reversed exactly, so `flip(flip(c)) == c`.
    pub fn flip(&self) -> Self {
        let n = self.n();
        let rev = |v: &[f64]| -> Vec<f64> { v.iter().rev().cloned().collect() };
        let mut cum_head = vec![0.0; n + 1];
        let mut cum_tail = vec![0.0; n + 1];
        for i in 0..=n {
            cum_head[i] = self.cum_tail[n - i];
            cum_tail[i] = self.cum_head[n - i];
        }
        Self {
            p: rev(&self.q),
            q: rev(&self.p),
            r: rev(&self.r),
            pi: rev(&self.pi),
            log_pi: rev(&self.log_pi),
            cum_head,
            cum_tail,
            validity: ValidityReport {
                periodic: self.validity.periodic,
                underflowed_edges: self
                    .validity
                    .underflowed_edges
                    .iter()
                    .rev()
                    .map(|&e| n - 1 - e)
                    .collect(),
            },
        }
    }

    /// Smallest M with π([0, M]) ≥ a. Automatically π([M, n]) ≥ 1 − a.
    pub fn quantile_state(&self, a: f64) -> usize {
        assert!(a > 0.0 && a < 1.0, "quantile must lie in (0, 1)");
        match self
            .cum_head
            .iter()
            .position(|&c| c >= a)
        {
            Some(m) => m,
            None => self.n(),
        }
    }
}

fn validate_rates(p: &[f64], q: &[f64], r: &[f64]) -> Result<(), ChainError> {
    if p.len() != q.len() || p.len() != r.len() {
        return Err(ChainError::DimensionMismatch {
            p: p.len(),
            q: q.len(),
            r: r.len(),
        });
    }
    if p.is_empty() {
        return Err(ChainError::Empty);
    }
    let n = p.len() - 1;
    for (name, v) in [("p", p), ("q", q), ("r", r)] {
        for (i, &x) in v.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) || !x.is_finite() {
                return Err(ChainError::RateOutOfRange {
                    name,
                    index: i,
                    value: x,
                });
            }
        }
    }
    if p[n] != 0.0 {
        return Err(ChainError::NonzeroBoundary {
            name: "p_n",
            value: p[n],
        });
    }
    if q[0] != 0.0 {
        return Err(ChainError::NonzeroBoundary {
            name: "q_0",
            value: q[0],
        });
    }
    for i in 0..=n {
        let sum = p[i] + q[i] + r[i];
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(ChainError::RowSum {
                index: i,
                sum,
                tol: ROW_SUM_TOL,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> Chain {
        Chain::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn two_state_stationary_is_symmetric() {
        let c = two_state();
        assert!((c.stationary()[0] - 0.5).abs() < 1e-15);
        assert!((c.stationary()[1] - 0.5).abs() < 1e-15);
        assert!(c.validity().periodic);
    }

    #[test]
    fn biased_walk_stationary_matches_product_formula() {
        // p = 2/3 biased walk on {0,1,2}: π ∝ (1, 2, 4).
        let c = Chain::new(
            vec![2.0 / 3.0, 2.0 / 3.0, 0.0],
            vec![0.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![1.0 / 3.0, 0.0, 2.0 / 3.0],
        )
        .unwrap();
        let pi = c.stationary();
        for (got, want) in pi.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn single_state_chain_is_legal() {
        let c = Chain::new(vec![0.0], vec![0.0], vec![1.0]).unwrap();
        assert_eq!(c.stationary(), &[1.0]);
    }

    #[test]
    fn reducible_chain_reports_offending_index() {
        let err = Chain::new(
            vec![0.5, 0.0, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.5, 0.5],
        )
        .unwrap_err();
        assert_eq!(err, ChainError::Reducible { name: "p", index: 1 });
    }

    #[test]
    fn row_sum_violation_is_rejected() {
        let err = Chain::new(vec![0.6, 0.0], vec![0.0, 0.5], vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, ChainError::RowSum { index: 0, .. }));
    }

    #[test]
    fn lazy_transform_identity_and_arithmetic() {
        let c = Chain::new(vec![0.5, 0.0], vec![0.0, 0.5], vec![0.5, 0.5]).unwrap();
        let same = c.lazy_transform(0.0).unwrap();
        assert_eq!(same.births(), c.births());
        let fast = c.lazy_transform(0.5).unwrap();
        assert!((fast.birth(0) - 1.0).abs() < 1e-15);
        assert!((fast.death(1) - 1.0).abs() < 1e-15);
        assert_eq!(fast.hold(0), 0.0);
        // π is unchanged.
        for i in 0..=1 {
            assert!((fast.stationary()[i] - c.stationary()[i]).abs() < 1e-15);
        }
        assert!(matches!(
            c.lazy_transform(0.6),
            Err(ChainError::LazyDelta { .. })
        ));
    }

    #[test]
    fn flip_is_an_involution_and_reverses_pi() {
        let c = Chain::new(
            vec![2.0 / 3.0, 2.0 / 3.0, 0.0],
            vec![0.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![1.0 / 3.0, 0.0, 2.0 / 3.0],
        )
        .unwrap();
        let f = c.flip();
        assert_eq!(f.birth(0), c.death(2));
        let ff = f.flip();
        assert_eq!(ff.births(), c.births());
        assert_eq!(ff.stationary(), c.stationary());
        for i in 0..=2 {
            assert_eq!(f.stationary()[i], c.stationary()[2 - i]);
        }
    }

    #[test]
    fn quantile_state_examples() {
        // Uniform π on {0,…,9} via the symmetric lazy walk.
        let n = 9;
        let mut p = vec![0.25; n + 1];
        let mut q = vec![0.25; n + 1];
        p[n] = 0.0;
        q[0] = 0.0;
        let r: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 1.0 - a - b).collect();
        let c = Chain::new(p, q, r).unwrap();
        assert_eq!(c.quantile_state(0.5), 4);
        assert_eq!(c.quantile_state(1e-12), 0);
        // Quantile is non-decreasing in a.
        let mut prev = 0;
        for k in 1..20 {
            let m = c.quantile_state(k as f64 / 20.0);
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn json_round_trip_and_default_holding() {
        let c = two_state();
        let text = c.to_json();
        let c2 = Chain::from_json(&text).unwrap();
        assert_eq!(c2.births(), c.births());
        let implied = Chain::from_json(r#"{"n":1,"p":[1.0,0.0],"q":[0.0,1.0]}"#).unwrap();
        assert_eq!(implied.holds(), &[0.0, 0.0]);
        assert!(Chain::from_json("{").is_err());
        assert!(Chain::from_json(r#"{"n":2,"p":[1.0,0.0],"q":[0.0,1.0]}"#).is_err());
    }

    #[test]
    fn log_weight_construction_handles_extreme_ratios() {
        // π(i) ∝ exp(i²) on {0,…,60}: linear weights overflow f64, the
        // log-weight path must still normalize and validate.
        let n = 60;
        let log_w: Vec<f64> = (0..=n).map(|i| (i as f64) * (i as f64)).collect();
        let mut p = vec![0.5; n + 1];
        let mut q = vec![0.0; n + 1];
        p[n] = 0.0;
        for i in 0..n {
            q[i + 1] = 0.5 * (log_w[i] - log_w[i + 1]).exp();
        }
        let r: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 1.0 - a - b).collect();
        let c = Chain::with_log_weights(p, q, r, log_w).unwrap();
        assert!((util::sum(c.stationary()) - 1.0).abs() < 1e-12);
        assert!(c.stationary()[0] == 0.0); // underflowed linearly
        assert!(c.log_stationary()[0].is_finite());
        assert_eq!(c.quantile_state(0.5), n);
    }
}
