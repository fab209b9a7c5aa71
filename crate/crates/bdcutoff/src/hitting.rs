//! Exact first-passage moments, interval-exit expectations, and the
//! associated bounds, plus a seeded Monte Carlo oracle.
//!
//! Rightward passage moments come from the stationary-measure formulas
//!   E_i τ_{i+1} = π([0,i]) / (π(i) p_i)
//!   Var_i(τ̃_{i+1}) = h_i² + 2 h_i Σ_{m<i} h_m π([0,m])/π([0,i])
//! evaluated with log-space ratio recurrences so they stay finite when
//! π itself underflows. Leftward passages reuse the same code on the
//! flipped chain. Moments across several states add over adjacent
//! passages, which are independent by the strong Markov property.

use crate::chain::Chain;
use crate::spectral::{self, SpectralError};
use crate::util::CompensatedSum;
use crate::Clock;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Per-trajectory step cap for the Monte Carlo sampler.
pub const SIMULATION_STEP_CAP: u64 = 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HittingError {
    #[error("rightward passage needs i < n, got i = {i} with n = {n}")]
    BoundaryRight { i: usize, n: usize },
    #[error("interval exit needs i < j < k, got ({i}, {j}, {k})")]
    Ordering { i: usize, j: usize, k: usize },
    #[error("tail bound parameter a = {0} must lie in (0, 1)")]
    TailParameter(f64),
    #[error("simulation needs at least one sample")]
    NoSamples,
    #[error("trajectory exceeded the step cap {cap}")]
    StepCap { cap: u64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Mean and variance of a first-passage time under both clocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitMoments {
    pub mean: f64,
    pub var_continuous: f64,
    pub var_discrete: f64,
    pub from: usize,
    pub to: usize,
}

/// Per-edge rightward passage moments for one chain direction.
///
/// `h[i]`, `var_c[i]`, `var_d[i]` are the mean and variances of the
/// passage i → i+1; the `*_pre` vectors carry compensated prefix sums
/// with an extra leading zero so that sums over [a, b) are two lookups.
#[derive(Debug, Clone)]
pub struct PassageTable {
    h: Vec<f64>,
    var_c: Vec<f64>,
    var_d: Vec<f64>,
    h_pre: Vec<f64>,
    var_c_pre: Vec<f64>,
    var_d_pre: Vec<f64>,
}

impl PassageTable {
    /// Build the rightward table for `chain`.
    pub fn rightward(chain: &Chain) -> Self {
        let n = chain.n();
        let log_pi = chain.log_stationary();
        let mut h = Vec::with_capacity(n);
        let mut var_c = Vec::with_capacity(n);
        let mut var_d = Vec::with_capacity(n);

        // R_i = π([0,i])/π(i), S_i = Σ_{m<i} h_m π([0,m])/π([0,i]),
        // lc = log π([0,i]); all updated by exponentiated log differences.
        let mut ratio = 1.0_f64;
        let mut s = 0.0_f64;
        let mut lc = log_pi[0];
        for i in 0..n {
            let hi = ratio / chain.birth(i);
            let vc = hi * hi + 2.0 * hi * s;
            h.push(hi);
            var_c.push(vc);
            var_d.push(vc - hi);
            let lc_next = crate::util::log_add_exp(lc, log_pi[i + 1]);
            s = (s + hi) * (lc - lc_next).exp();
            ratio = 1.0 + ratio * (log_pi[i] - log_pi[i + 1]).exp();
            lc = lc_next;
        }

        let prefix = |v: &[f64]| {
            let mut out = Vec::with_capacity(v.len() + 1);
            let mut acc = CompensatedSum::new();
            out.push(0.0);
            for &x in v {
                acc.add(x);
                out.push(acc.value());
            }
            out
        };
        let h_pre = prefix(&h);
        let var_c_pre = prefix(&var_c);
        let var_d_pre = prefix(&var_d);
        Self {
            h,
            var_c,
            var_d,
            h_pre,
            var_c_pre,
            var_d_pre,
        }
    }

    /// E_i τ_{i+1}.
    pub fn step_mean(&self, i: usize) -> f64 {
        self.h[i]
    }

    /// Var_i(τ̃_{i+1}) or Var_i(τ_{i+1}).
    pub fn step_var(&self, i: usize, clock: Clock) -> f64 {
        match clock {
            Clock::Continuous => self.var_c[i],
            Clock::Discrete => self.var_d[i],
        }
    }

    /// E_from τ_to for from ≤ to.
    pub fn mean(&self, from: usize, to: usize) -> f64 {
        self.h_pre[to] - self.h_pre[from]
    }

    /// Var_from(τ_to) for from ≤ to.
    pub fn var(&self, from: usize, to: usize, clock: Clock) -> f64 {
        let pre = match clock {
            Clock::Continuous => &self.var_c_pre,
            Clock::Discrete => &self.var_d_pre,
        };
        pre[to] - pre[from]
    }
}

/// Rightward and leftward passage tables for one chain.
#[derive(Debug, Clone)]
pub struct HittingTables {
    n: usize,
    right: PassageTable,
    left: PassageTable,
}

impl HittingTables {
    pub fn new(chain: &Chain) -> Self {
        Self {
            n: chain.n(),
            right: PassageTable::rightward(chain),
            left: PassageTable::rightward(&chain.flip()),
        }
    }

    pub fn mean(&self, from: usize, to: usize) -> f64 {
        use std::cmp::Ordering::*;
        match from.cmp(&to) {
            Equal => 0.0,
            Less => self.right.mean(from, to),
            Greater => self.left.mean(self.n - from, self.n - to),
        }
    }

    pub fn var(&self, from: usize, to: usize, clock: Clock) -> f64 {
        use std::cmp::Ordering::*;
        match from.cmp(&to) {
            Equal => 0.0,
            Less => self.right.var(from, to, clock),
            Greater => self.left.var(self.n - from, self.n - to, clock),
        }
    }

    pub fn moments(&self, from: usize, to: usize) -> HitMoments {
        HitMoments {
            mean: self.mean(from, to),
            var_continuous: self.var(from, to, Clock::Continuous),
            var_discrete: self.var(from, to, Clock::Discrete),
            from,
            to,
        }
    }
}

/// E_i τ_{i+1} = π([0,i]) / (π(i) p_i).
pub fn mean_hit_right(chain: &Chain, i: usize) -> Result<f64, HittingError> {
    let n = chain.n();
    if i >= n {
        return Err(HittingError::BoundaryRight { i, n });
    }
    Ok(PassageTable::rightward(chain).step_mean(i))
}

/// E_from τ_to, identical under both clocks. Zero when from = to.
pub fn mean_hit(chain: &Chain, from: usize, to: usize) -> f64 {
    HittingTables::new(chain).mean(from, to)
}

/// Var_from(τ_to) under the requested clock.
pub fn var_hit(chain: &Chain, from: usize, to: usize, clock: Clock) -> f64 {
    HittingTables::new(chain).var(from, to, clock)
}

/// Moments of τ_i from state 0 through the eigenvalues of the leading
/// submatrix of I − K indexed by {0,…,i−1}.
pub fn moments_via_spectrum(chain: &Chain, i: usize) -> Result<HitMoments, HittingError> {
    let spec = spectral::leading_spectrum(chain, i)?;
    let mut mean = CompensatedSum::new();
    let mut var_c = CompensatedSum::new();
    let mut var_d = CompensatedSum::new();
    for &b in spec.values() {
        mean.add(1.0 / b);
        var_c.add(1.0 / (b * b));
        var_d.add((1.0 - b) / (b * b));
    }
    Ok(HitMoments {
        mean: mean.value(),
        var_continuous: var_c.value(),
        var_discrete: var_d.value(),
        from: 0,
        to: i,
    })
}

/// E_j min{τ_i, τ_k} = A/B for i < j < k.
pub fn mean_exit_interval(
    chain: &Chain,
    i: usize,
    j: usize,
    k: usize,
) -> Result<f64, HittingError> {
    if !(i < j && j < k && k <= chain.n()) {
        return Err(HittingError::Ordering { i, j, k });
    }
    let pi = chain.stationary();
    let mut a = CompensatedSum::new();
    for l1 in i + 1..=j {
        for l2 in j..=k - 1 {
            let mass = chain.interval_mass(l1, l2);
            a.add(mass / (pi[l1] * chain.death(l1) * pi[l2] * chain.birth(l2)));
        }
    }
    let mut b = CompensatedSum::new();
    for l in i..=k - 1 {
        b.add(1.0 / (pi[l] * chain.birth(l)));
    }
    Ok(a.value() / b.value())
}

/// Variance and mean bounds for the passage i → j (i < j) in terms of
/// the smallest leading-submatrix eigenvalue λ_j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitBounds {
    /// Lower bound on Var_i(τ̃_j).
    pub var_lower: f64,
    /// Lower bound on the discrete Var_i(τ_j): δ · var_lower.
    pub var_lower_discrete: f64,
    /// Upper bound on Var under either clock: (2/λ_j) E_i τ̃_j.
    pub var_upper: f64,
    /// Upper bound on E_i τ_j: 4π([0,j−1])/(π([0,i]) λ_j).
    pub mean_upper: f64,
}

pub fn hit_bounds(chain: &Chain, i: usize, j: usize) -> Result<HitBounds, HittingError> {
    if i >= j || j > chain.n() {
        return Err(HittingError::Ordering { i, j, k: j });
    }
    let lambda_j = spectral::leading_spectrum(chain, j)?.min();
    let mean = mean_hit(chain, i, j);
    let head_ratio = chain.head_mass(i) / chain.head_mass(j - 1);
    let var_lower = 0.5 * head_ratio * mean * mean;
    Ok(HitBounds {
        var_lower,
        var_lower_discrete: chain.min_hold() * var_lower,
        var_upper: 2.0 / lambda_j * mean,
        mean_upper: 4.0 / (head_ratio * lambda_j),
    })
}

/// Universal lower bound for P_0(τ̃_i > a·E_0τ̃_i):
/// min{e^{−√a}, (1−a)²/(√a + (1−a)²)}.
pub fn tail_lower_bound(a: f64) -> Result<f64, HittingError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(HittingError::TailParameter(a));
    }
    let sq = a.sqrt();
    let omb = (1.0 - a) * (1.0 - a);
    Ok((-sq).exp().min(omb / (sq + omb)))
}

/// Boundary-start hitting statistics to a split state M.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffHitStats {
    /// s = E_0τ̃_M + E_nτ̃_M.
    pub s: f64,
    /// b² = Var_0τ̃_M + Var_nτ̃_M (continuous clock).
    pub b2: f64,
    /// c² = Var_0τ_M + Var_nτ_M (discrete clock).
    pub c2: f64,
    /// θ = max of the two boundary means.
    pub theta: f64,
    /// α² = max of the two continuous variances.
    pub alpha2: f64,
    /// β² = max of the two discrete variances.
    pub beta2: f64,
    /// E_0τ̃_M and E_nτ̃_M individually.
    pub mean_from_0: f64,
    pub mean_from_n: f64,
    pub m: usize,
}

pub fn cutoff_hit_stats(chain: &Chain, m: usize) -> CutoffHitStats {
    let tables = HittingTables::new(chain);
    cutoff_hit_stats_from_tables(&tables, chain.n(), m)
}

pub fn cutoff_hit_stats_from_tables(
    tables: &HittingTables,
    n: usize,
    m: usize,
) -> CutoffHitStats {
    debug_assert_eq!(tables.n, n);
    let e0 = tables.mean(0, m);
    let en = tables.mean(n, m);
    let v0c = tables.var(0, m, Clock::Continuous);
    let vnc = tables.var(n, m, Clock::Continuous);
    let v0d = tables.var(0, m, Clock::Discrete);
    let vnd = tables.var(n, m, Clock::Discrete);
    CutoffHitStats {
        s: e0 + en,
        b2: v0c + vnc,
        c2: v0d + vnd,
        theta: e0.max(en),
        alpha2: v0c.max(vnc),
        beta2: v0d.max(vnd),
        mean_from_0: e0,
        mean_from_n: en,
        m,
    }
}

/// Sample mean and (unbiased) sample variance of simulated passages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimMoments {
    pub mean: f64,
    pub var: f64,
    pub samples: u64,
}

/// Monte Carlo first-passage sampler. Trajectory k uses an independent
/// substream of the seeded generator, so results do not depend on the
/// number of worker threads.
pub fn simulate_hit(
    chain: &Chain,
    from: usize,
    to: usize,
    clock: Clock,
    samples: u64,
    seed: u64,
) -> Result<SimMoments, HittingError> {
    if samples == 0 {
        return Err(HittingError::NoSamples);
    }
    let values: Result<Vec<f64>, HittingError> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            sample_passage(chain, from, to, clock, &mut rng)
        })
        .collect();
    let values = values?;
    let mut acc = CompensatedSum::new();
    for &v in &values {
        acc.add(v);
    }
    let mean = acc.value() / samples as f64;
    let mut sq = CompensatedSum::new();
    for &v in &values {
        sq.add((v - mean) * (v - mean));
    }
    let var = if samples > 1 {
        sq.value() / (samples - 1) as f64
    } else {
        0.0
    };
    Ok(SimMoments {
        mean,
        var,
        samples,
    })
}

fn sample_passage(
    chain: &Chain,
    from: usize,
    to: usize,
    clock: Clock,
    rng: &mut ChaCha8Rng,
) -> Result<f64, HittingError> {
    let mut state = from;
    let mut steps: u64 = 0;
    let mut time = 0.0_f64;
    while state != to {
        if steps >= SIMULATION_STEP_CAP {
            return Err(HittingError::StepCap {
                cap: SIMULATION_STEP_CAP,
            });
        }
        let u: f64 = rng.gen();
        if u < chain.birth(state) {
            state += 1;
        } else if u < chain.birth(state) + chain.death(state) {
            state -= 1;
        }
        steps += 1;
        if let Clock::Continuous = clock {
            let e: f64 = rng.gen();
            time -= (1.0 - e).ln();
        }
    }
    Ok(match clock {
        Clock::Discrete => steps as f64,
        Clock::Continuous => time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Chain;

    fn two_state() -> Chain {
        Chain::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]).unwrap()
    }

    fn binomial_metropolis_n2() -> Chain {
        Chain::new(
            vec![0.5, 0.25, 0.0],
            vec![0.0, 0.25, 0.5],
            vec![0.5, 0.5, 0.5],
        )
        .unwrap()
    }

    fn biased_walk(n: usize, p: f64) -> Chain {
        let q = 1.0 - p;
        let mut pv = vec![p; n + 1];
        let mut qv = vec![q; n + 1];
        pv[n] = 0.0;
        qv[0] = 0.0;
        let rv: Vec<f64> = pv.iter().zip(&qv).map(|(a, b)| 1.0 - a - b).collect();
        Chain::new(pv, qv, rv).unwrap()
    }

    #[test]
    fn single_step_mean_examples() {
        assert!((mean_hit_right(&two_state(), 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((mean_hit_right(&binomial_metropolis_n2(), 0).unwrap() - 2.0).abs() < 1e-14);
        assert!(mean_hit_right(&two_state(), 1).is_err());
    }

    #[test]
    fn biased_walk_passage_ratio_matches_closed_form() {
        let p = 2.0 / 3.0;
        let q = 1.0 - p;
        let rho = p / q;
        let c = biased_walk(6, p);
        let table = PassageTable::rightward(&c);
        for i in 0..6 {
            let want = (rho - rho.powi(-(i as i32))) / (rho - 1.0) / p;
            assert!(
                (table.step_mean(i) - want).abs() < 1e-12 * want,
                "i={i}: {} vs {want}",
                table.step_mean(i)
            );
        }
        // E_0 τ_2 on n=2: 3/2 + 9/4 = 15/4.
        let c2 = biased_walk(2, p);
        assert!((mean_hit(&c2, 0, 2) - 15.0 / 4.0).abs() < 1e-13);
        assert_eq!(mean_hit(&c2, 1, 1), 0.0);
    }

    #[test]
    fn mean_is_additive_along_the_path() {
        let c = biased_walk(8, 0.6);
        let direct = mean_hit(&c, 1, 7);
        let split = mean_hit(&c, 1, 4) + mean_hit(&c, 4, 7);
        assert!((direct - split).abs() < 1e-12 * direct);
        let left = mean_hit(&c, 7, 2);
        let left_split = mean_hit(&c, 7, 5) + mean_hit(&c, 5, 2);
        assert!((left - left_split).abs() < 1e-12 * left);
    }

    #[test]
    fn two_state_variances() {
        let c = two_state();
        assert!((var_hit(&c, 0, 1, Clock::Continuous) - 1.0).abs() < 1e-15);
        assert_eq!(var_hit(&c, 0, 1, Clock::Discrete), 0.0);
    }

    #[test]
    fn spectrum_route_matches_measure_route() {
        let c = binomial_metropolis_n2();
        let m = moments_via_spectrum(&c, 1).unwrap();
        assert!((m.mean - 2.0).abs() < 1e-13);
        assert!((m.var_continuous - 4.0).abs() < 1e-12);
        assert!((m.var_discrete - 2.0).abs() < 1e-12);

        let c = biased_walk(15, 0.62);
        for i in 1..=15 {
            let via_spec = moments_via_spectrum(&c, i).unwrap();
            let mean = mean_hit(&c, 0, i);
            let vc = var_hit(&c, 0, i, Clock::Continuous);
            let vd = var_hit(&c, 0, i, Clock::Discrete);
            assert!((via_spec.mean - mean).abs() < 1e-9 * mean.max(1.0));
            assert!((via_spec.var_continuous - vc).abs() < 1e-9 * vc.max(1.0));
            assert!((via_spec.var_discrete - vd).abs() < 1e-9 * vd.max(1.0));
        }
    }

    #[test]
    fn interval_exit_on_simple_walk() {
        // Simple walk with boundary holding: E_j min exit of (i,k) is (j−i)(k−j).
        let n = 6;
        let mut p = vec![0.5; n + 1];
        let mut q = vec![0.5; n + 1];
        p[n] = 0.0;
        q[0] = 0.0;
        let r: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 1.0 - a - b).collect();
        let c = Chain::new(p, q, r).unwrap();
        for (i, j, k) in [(0, 1, 2), (0, 3, 6), (1, 2, 5), (2, 4, 5)] {
            let got = mean_exit_interval(&c, i, j, k).unwrap();
            let want = ((j - i) * (k - j)) as f64;
            assert!((got - want).abs() < 1e-12 * want, "({i},{j},{k}): {got}");
        }
        assert!(mean_exit_interval(&c, 3, 3, 5).is_err());
    }

    #[test]
    fn tail_lower_bound_values() {
        let b = tail_lower_bound(0.25).unwrap();
        let want = (9.0 / 16.0) / (0.5 + 9.0 / 16.0);
        assert!((b - want).abs() < 1e-15);
        assert!(tail_lower_bound(1e-6).unwrap() >= 0.998);
        assert!(tail_lower_bound(0.0).is_err());
        assert!(tail_lower_bound(1.0).is_err());
        // 2-state chain: P(τ̃_1 > 1/4·1) = e^{-1/4} dominates the bound.
        assert!((-0.25_f64).exp() >= b);
    }

    #[test]
    fn hit_bounds_bracket_two_state() {
        let c = two_state();
        let b = hit_bounds(&c, 0, 1).unwrap();
        let var = var_hit(&c, 0, 1, Clock::Continuous);
        assert!(b.var_lower <= var + 1e-15 && var <= b.var_upper + 1e-15);
        assert!(mean_hit(&c, 0, 1) <= b.mean_upper + 1e-15);
    }

    #[test]
    fn symmetric_chain_has_s_equal_two_theta() {
        let n = 8;
        let mut p = vec![0.25; n + 1];
        let mut q = vec![0.25; n + 1];
        p[n] = 0.0;
        q[0] = 0.0;
        let r: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 1.0 - a - b).collect();
        let c = Chain::new(p, q, r).unwrap();
        let stats = cutoff_hit_stats(&c, n / 2);
        assert!((stats.s - 2.0 * stats.theta).abs() < 1e-10 * stats.s);
        assert!(stats.s >= stats.theta);
        assert!(stats.b2 >= stats.alpha2);
    }

    #[test]
    fn simulation_is_deterministic_and_matches_trivial_case() {
        let c = two_state();
        let a = simulate_hit(&c, 0, 1, Clock::Discrete, 200, 7).unwrap();
        assert_eq!(a.mean, 1.0);
        assert_eq!(a.var, 0.0);
        let b = simulate_hit(&c, 0, 1, Clock::Continuous, 500, 7).unwrap();
        let b2 = simulate_hit(&c, 0, 1, Clock::Continuous, 500, 7).unwrap();
        assert_eq!(b.mean, b2.mean);
        assert!((b.mean - 1.0).abs() < 4.0 * (1.0f64 / 500.0).sqrt());
        assert!(simulate_hit(&c, 0, 1, Clock::Discrete, 0, 1).is_err());
    }

    #[test]
    fn simulated_mean_tracks_formula_on_binomial_chain() {
        let c = binomial_metropolis_n2();
        let sim = simulate_hit(&c, 0, 1, Clock::Discrete, 20_000, 42).unwrap();
        let exact = mean_hit(&c, 0, 1);
        let sd = (sim.var / sim.samples as f64).sqrt();
        assert!((sim.mean - exact).abs() < 3.0 * sd, "{} vs {exact}", sim.mean);
    }
}
