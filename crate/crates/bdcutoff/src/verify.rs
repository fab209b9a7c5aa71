//! Batch cross-module invariant checks on seeded random chains, plus
//! the independent linear-system oracle they compare against.
//!
//! The oracle solves the absorbing-chain first-step equations
//! (I − Q)m = 1 and (I − Q)s = 2m − 1 on the tridiagonal sub-block, a
//! route that shares nothing with the stationary-measure formulas it
//! cross-checks.

use crate::chain::{Chain, TimeParameter};
use crate::evolve::{self, Distance, MixingOptions, Start};
use crate::hitting;
use crate::spectral;
use crate::Clock;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one named invariant check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    /// Chain JSON of the first failing instance, for replay.
    pub replay: Option<String>,
}

impl CheckResult {
    fn from_run(name: &'static str, cases: usize, failure: Option<(String, String)>) -> Self {
        match failure {
            None => CheckResult {
                name,
                pass: true,
                detail: format!("{cases} cases"),
                replay: None,
            },
            Some((detail, replay)) => CheckResult {
                name,
                pass: false,
                detail,
                replay: Some(replay),
            },
        }
    }
}

/// Seeded random irreducible chain with rates bounded away from zero;
/// `min_hold` lifts every holding rate to at least that value.
pub fn random_chain(seed: u64, n: usize, min_hold: f64) -> Chain {
    assert!(min_hold < 0.85);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free = 1.0 - min_hold;
    let mut p = vec![0.0; n + 1];
    let mut q = vec![0.0; n + 1];
    for i in 0..=n {
        let mut up = 0.0;
        let mut down = 0.0;
        if i < n {
            up = rng.gen_range(0.05..free - 0.06);
        }
        if i > 0 {
            down = rng.gen_range(0.05..(free - up - 0.01).max(0.0501));
        }
        p[i] = up;
        q[i] = down;
    }
    let r: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 1.0 - a - b).collect();
    Chain::new(p, q, r).expect("random rates are valid by construction")
}

/// Double-double scalar for the oracle solves. The Schur complements of
/// near-absorbing blocks cancel badly in plain f64 (condition numbers
/// reach the size of the means), so the oracle carries ~31 digits and
/// stays trustworthy at the 1e-9 comparison level regardless.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let v = s - a;
        (s, (a - (s - v)) + (b - v))
    }

    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    fn add(self, other: Dd) -> Dd {
        let (s, e) = Dd::two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = Dd::two_sum(s, e);
        Dd { hi, lo }
    }

    fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    fn mul(self, other: Dd) -> Dd {
        let (p, e) = Dd::two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = Dd::two_sum(p, e);
        Dd { hi, lo }
    }

    fn div(self, other: Dd) -> Dd {
        let q0 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from(q0)));
        let q1 = r.hi / other.hi;
        let r2 = r.sub(other.mul(Dd::from(q1)));
        let q2 = r2.hi / other.hi;
        let (hi, lo) = Dd::two_sum(q0, q1);
        Dd { hi, lo: lo + q2 }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Tridiagonal solve of (I − Q)x = rhs on the states `lo..=hi` of the
/// chain with absorption outside, by the Thomas algorithm in
/// double-double arithmetic. The diagonal 1 − r is formed as p + q,
/// which is its exact value for a stochastic row; using the stored r
/// would inject a half-ulp mass leak that ill-conditioned blocks
/// amplify to visible error.
fn absorbing_solve(chain: &Chain, lo: usize, hi: usize, rhs: &[Dd]) -> Vec<Dd> {
    let k = hi - lo + 1;
    let mut diag: Vec<Dd> = (lo..=hi)
        .map(|i| Dd::from(chain.birth(i)).add(Dd::from(chain.death(i))))
        .collect();
    let mut x = rhs.to_vec();
    for i in 1..k {
        let m = Dd::from(-chain.death(lo + i)).div(diag[i - 1]);
        diag[i] = diag[i].sub(m.mul(Dd::from(-chain.birth(lo + i - 1))));
        x[i] = x[i].sub(m.mul(x[i - 1]));
    }
    x[k - 1] = x[k - 1].div(diag[k - 1]);
    for i in (0..k - 1).rev() {
        x[i] = x[i]
            .add(Dd::from(chain.birth(lo + i)).mul(x[i + 1]))
            .div(diag[i]);
    }
    x
}

/// Moments of the passage `from → to` (either direction) by the
/// fundamental-matrix identities. Returns (mean, var_discrete,
/// var_continuous).
pub fn oracle_hit_moments(chain: &Chain, from: usize, to: usize) -> (f64, f64, f64) {
    if from == to {
        return (0.0, 0.0, 0.0);
    }
    let (lo, hi) = if from < to {
        (0usize, to - 1)
    } else {
        (to + 1, chain.n())
    };
    let k = hi - lo + 1;
    let ones = vec![Dd::from(1.0); k];
    let m = absorbing_solve(chain, lo, hi, &ones);
    let rhs2: Vec<Dd> = m
        .iter()
        .map(|&mi| mi.add(mi).sub(Dd::from(1.0)))
        .collect();
    let s = absorbing_solve(chain, lo, hi, &rhs2);
    let idx = from - lo;
    let mean = m[idx];
    let var_d = s[idx].sub(mean.mul(mean));
    (mean.value(), var_d.value(), var_d.add(mean).value())
}

/// Expected exit time of the open interval (i, k) started from j, by
/// the same linear-system route with absorption at both ends.
pub fn oracle_exit_interval(chain: &Chain, i: usize, j: usize, k: usize) -> f64 {
    let ones = vec![Dd::from(1.0); k - i - 1];
    let m = absorbing_solve(chain, i + 1, k - 1, &ones);
    m[j - i - 1].value()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

macro_rules! ensure {
    ($failure:ident, $chain:expr, $cond:expr, $($msg:tt)*) => {
        if $failure.is_none() && !($cond) {
            $failure = Some((format!($($msg)*), $chain.to_json()));
        }
    };
}

/// Run every invariant check with the given master seed.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        check_construction(seed),
        check_lazy_spectrum(seed),
        check_moment_oracle(seed),
        check_spectral_moments(seed),
        check_interlacing(seed),
        check_gap_bounds(seed),
        check_hit_monotonicity(seed),
        check_hit_brackets(seed),
        check_interval_exit(seed),
        check_distance_sandwich(seed),
        check_separation_boundary(seed),
        check_unimodality(seed),
        check_mixing_brackets(seed),
        check_simulation(seed),
        check_brown_shao(seed),
    ]
}

fn check_construction(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..40u64 {
        let n = 1 + (k as usize % 25);
        let c = random_chain(seed ^ (k + 1), n, 0.0);
        cases += 1;
        let total: f64 = crate::util::sum(c.stationary());
        ensure!(failure, c, (total - 1.0).abs() <= 1e-12, "pi sums to {total}");
        for i in 0..n {
            let lhs = c.stationary()[i] * c.birth(i);
            let rhs = c.stationary()[i + 1] * c.death(i + 1);
            ensure!(
                failure,
                c,
                rel_err(lhs, rhs) <= 1e-12,
                "detailed balance off at {i}: {lhs} vs {rhs}"
            );
        }
        let f = c.flip();
        let ff = f.flip();
        ensure!(failure, c, ff.births() == c.births(), "flip not involutive");
        for i in 0..=n {
            ensure!(
                failure,
                c,
                f.stationary()[i] == c.stationary()[n - i],
                "flip does not reverse pi exactly at {i}"
            );
        }
        // Quantile monotone in a.
        let mut prev = 0usize;
        for j in 1..10 {
            let m = c.quantile_state(j as f64 / 10.0);
            ensure!(failure, c, m >= prev, "quantile not monotone");
            prev = m;
        }
    }
    CheckResult::from_run("construction", cases, failure)
}

fn check_lazy_spectrum(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..10u64 {
        let n = 2 + (k as usize % 14);
        let c = random_chain(seed ^ (0x10 + k), n, 0.3);
        let delta = 0.5 * c.min_hold();
        let lazy = c.lazy_transform(delta).expect("delta below min hold");
        cases += 1;
        for i in 0..=n {
            ensure!(
                failure,
                c,
                (lazy.stationary()[i] - c.stationary()[i]).abs() <= 1e-12,
                "lazy transform moved pi at {i}"
            );
        }
        let base = spectral::full_spectrum(&c).unwrap();
        let fast = spectral::full_spectrum(&lazy).unwrap();
        for (a, b) in base.values().iter().zip(fast.values()) {
            ensure!(
                failure,
                c,
                rel_err(a / (1.0 - delta), *b) <= 1e-10,
                "lazy spectrum not scaled by 1/(1-delta): {a} vs {b}"
            );
        }
    }
    CheckResult::from_run("lazy_spectrum_scaling", cases, failure)
}

fn check_moment_oracle(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..60u64 {
        let n = 2 + (k as usize % 40);
        let c = random_chain(seed ^ (0x100 + k), n, 0.0);
        let tables = hitting::HittingTables::new(&c);
        let pairs = [(0, n), (n, 0), (0, n / 2), (n, n / 2), (n / 3, n), (2 * n / 3, 0)];
        for (from, to) in pairs {
            if from == to {
                continue;
            }
            cases += 1;
            let (mean_o, var_d_o, var_c_o) = oracle_hit_moments(&c, from, to);
            let mean = tables.mean(from, to);
            let var_d = tables.var(from, to, Clock::Discrete);
            let var_c = tables.var(from, to, Clock::Continuous);
            ensure!(
                failure,
                c,
                rel_err(mean, mean_o) <= 1e-9,
                "mean {from}->{to}: {mean} vs oracle {mean_o}"
            );
            ensure!(
                failure,
                c,
                rel_err(var_d, var_d_o) <= 1e-9,
                "discrete var {from}->{to}: {var_d} vs oracle {var_d_o}"
            );
            ensure!(
                failure,
                c,
                rel_err(var_c, var_c_o) <= 1e-9,
                "continuous var {from}->{to}: {var_c} vs oracle {var_c_o}"
            );
        }
    }
    CheckResult::from_run("moment_oracle", cases, failure)
}

fn check_spectral_moments(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..20u64 {
        let n = 2 + (k as usize % 20);
        let c = random_chain(seed ^ (0x200 + k), n, 0.0);
        let tables = hitting::HittingTables::new(&c);
        for i in 1..=n {
            cases += 1;
            let spec = hitting::moments_via_spectrum(&c, i).unwrap();
            ensure!(
                failure,
                c,
                rel_err(spec.mean, tables.mean(0, i)) <= 1e-9,
                "spectral mean mismatch at i={i}"
            );
            ensure!(
                failure,
                c,
                rel_err(spec.var_continuous, tables.var(0, i, Clock::Continuous)) <= 1e-9,
                "spectral continuous variance mismatch at i={i}"
            );
            ensure!(
                failure,
                c,
                rel_err(spec.var_discrete, tables.var(0, i, Clock::Discrete)) <= 1e-9,
                "spectral discrete variance mismatch at i={i}"
            );
        }
    }
    CheckResult::from_run("spectral_moments", cases, failure)
}

fn check_interlacing(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..100u64 {
        let n = 2 + (k as usize % 39);
        let c = random_chain(seed ^ (0x300 + k), n, 0.0);
        let full = spectral::full_spectrum(&c).unwrap();
        let lam = full.values();
        for i in [0, n / 2, n] {
            cases += 1;
            let punct = spectral::punctured_spectrum(&c, i).unwrap();
            let mu = punct.values();
            for j in 0..n {
                ensure!(
                    failure,
                    c,
                    mu[j] <= lam[j] + 1e-10,
                    "interlacing lower fails at i={i}, j={j}"
                );
                if j + 1 < n {
                    ensure!(
                        failure,
                        c,
                        lam[j] <= mu[j + 1] + 1e-10,
                        "interlacing upper fails at i={i}, j={j}"
                    );
                }
            }
        }
    }
    CheckResult::from_run("interlacing", cases, failure)
}

fn check_gap_bounds(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..60u64 {
        let n = 2 + (k as usize % 30);
        let c = random_chain(seed ^ (0x400 + k), n, 0.0);
        let gap = spectral::full_spectrum(&c).unwrap().min();
        let m = c.quantile_state(0.5);
        let median_gap = spectral::punctured_spectrum(&c, m).unwrap().min();
        cases += 1;
        ensure!(
            failure,
            c,
            gap / 8.0 <= median_gap && median_gap <= gap + 1e-10,
            "median puncture gap bound fails: gap={gap}, punctured={median_gap}"
        );
        for i in [0, n / 3, n] {
            let punct = spectral::punctured_spectrum(&c, i).unwrap().min();
            ensure!(
                failure,
                c,
                c.split_mass(i) / 4.0 * gap <= punct && punct <= gap + 1e-10,
                "general puncture bound fails at i={i}"
            );
        }
        let (lo, hi) = spectral::gap_order_bound(&c, m);
        ensure!(
            failure,
            c,
            lo <= 1.0 / gap * (1.0 + 1e-12) && 1.0 / gap <= hi * (1.0 + 1e-12),
            "hardy bracket [{lo}, {hi}] misses 1/gap = {}",
            1.0 / gap
        );
    }
    CheckResult::from_run("gap_bounds", cases, failure)
}

fn check_hit_monotonicity(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..40u64 {
        let n = 3 + (k as usize % 30);
        let c = random_chain(seed ^ (0x500 + k), n, 0.0);
        let m = c.quantile_state(0.5);
        let tables = hitting::HittingTables::new(&c);
        let s = |i: usize| tables.mean(0, i) + tables.mean(n, i);
        for i in 0..m {
            for j in (i + 1..=m).take(4) {
                cases += 1;
                let mut formula = crate::util::CompensatedSum::new();
                for l in i..j {
                    formula
                        .add((1.0 - 2.0 * c.head_mass(l)) / (c.birth(l) * c.stationary()[l]));
                }
                let diff = s(i) - s(j);
                ensure!(failure, c, diff >= -1e-10, "s not non-increasing below median");
                ensure!(
                    failure,
                    c,
                    (diff - formula.value()).abs() <= 1e-10 * diff.abs().max(1.0),
                    "hitting-sum difference formula off: {diff} vs {}",
                    formula.value()
                );
            }
        }
    }
    CheckResult::from_run("hit_monotonicity", cases, failure)
}

fn check_hit_brackets(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..100u64 {
        let n = 2 + (k as usize % 30);
        let c = random_chain(seed ^ (0x600 + k), n, if k % 2 == 0 { 0.2 } else { 0.0 });
        let i = (k as usize) % (n / 2 + 1);
        let j = n.min(i + 1 + (k as usize % n.max(1)));
        if i >= j {
            continue;
        }
        cases += 1;
        let b = hitting::hit_bounds(&c, i, j).unwrap();
        let var_c = hitting::var_hit(&c, i, j, Clock::Continuous);
        let var_d = hitting::var_hit(&c, i, j, Clock::Discrete);
        let mean = hitting::mean_hit(&c, i, j);
        ensure!(
            failure,
            c,
            b.var_lower <= var_c * (1.0 + 1e-10) && var_c <= b.var_upper * (1.0 + 1e-10),
            "continuous variance bracket fails at ({i},{j})"
        );
        ensure!(
            failure,
            c,
            b.var_lower_discrete <= var_d * (1.0 + 1e-10) + 1e-12
                && var_d <= b.var_upper * (1.0 + 1e-10),
            "discrete variance bracket fails at ({i},{j})"
        );
        ensure!(
            failure,
            c,
            mean <= b.mean_upper * (1.0 + 1e-10),
            "mean upper bound fails at ({i},{j})"
        );
    }
    CheckResult::from_run("hit_brackets", cases, failure)
}

fn check_interval_exit(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..40u64 {
        let n = 4 + (k as usize % 30);
        let c = random_chain(seed ^ (0x700 + k), n, 0.0);
        let i = (k as usize) % (n - 3);
        let k_hi = i + 3 + (k as usize) % (n - i - 2);
        let k_hi = k_hi.min(n);
        for j in [i + 1, (i + k_hi) / 2, k_hi - 1] {
            cases += 1;
            let got = hitting::mean_exit_interval(&c, i, j, k_hi).unwrap();
            let want = oracle_exit_interval(&c, i, j, k_hi);
            ensure!(
                failure,
                c,
                rel_err(got, want) <= 1e-10,
                "interval exit ({i},{j},{k_hi}): {got} vs oracle {want}"
            );
            let one_sided = hitting::mean_hit(&c, j, i).min(hitting::mean_hit(&c, j, k_hi));
            ensure!(
                failure,
                c,
                got <= one_sided * (1.0 + 1e-10),
                "interval exit exceeds one-sided mean at ({i},{j},{k_hi})"
            );
        }
    }
    CheckResult::from_run("interval_exit", cases, failure)
}

fn check_distance_sandwich(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..20u64 {
        let n = 2 + (k as usize % 12);
        let c = random_chain(seed ^ (0x800 + k), n, 0.0);
        let grid = evolve::geometric_grid(0.1, 50.0 * (n * n) as f64, 1.6);
        // Max-over-start profile values at each grid time.
        let mut prev_tv = f64::INFINITY;
        let mut prev_sep = f64::INFINITY;
        for &t in &grid {
            cases += 1;
            let mut tv_max: f64 = 0.0;
            let mut sep_max: f64 = 0.0;
            for x in 0..=n {
                let v = evolve::evolve_continuous(&c, x, t, 1e-12).unwrap();
                tv_max = tv_max.max(evolve::tv_distance(&v, c.stationary()).unwrap());
                sep_max = sep_max.max(evolve::separation(&v, c.stationary()).unwrap());
            }
            ensure!(failure, c, tv_max <= prev_tv + 1e-12, "max tv not monotone");
            ensure!(failure, c, sep_max <= prev_sep + 1e-12, "max sep not monotone");
            ensure!(failure, c, tv_max <= sep_max + 1e-12, "tv exceeds sep");
            if tv_max <= 0.5 {
                let cap = 1.0 - (1.0 - 2.0 * tv_max) * (1.0 - 2.0 * tv_max);
                ensure!(failure, c, sep_max <= cap + 1e-12, "sep above sandwich cap");
            }
            prev_tv = tv_max;
            prev_sep = sep_max;
        }
    }
    CheckResult::from_run("distance_sandwich", cases, failure)
}

fn check_separation_boundary(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..30u64 {
        let n = 2 + (k as usize % 20);
        let c = random_chain(seed ^ (0x900 + k), n, 0.0);
        let scale = (n * n) as f64;
        for t in [0.05 * scale, 0.2 * scale, 0.5 * scale, scale, 2.0 * scale] {
            cases += 1;
            let sep_at = |x: usize| {
                let v = evolve::evolve_continuous(&c, x, t, 1e-12).unwrap();
                evolve::separation(&v, c.stationary()).unwrap()
            };
            let boundary = sep_at(0).max(sep_at(n));
            for x in 1..n {
                ensure!(
                    failure,
                    c,
                    sep_at(x) <= boundary + 1e-12,
                    "interior start {x} beats boundary separation at t={t}"
                );
            }
        }
    }
    CheckResult::from_run("separation_boundary", cases, failure)
}

fn check_unimodality(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..50u64 {
        let n = 2 + (k as usize % 16);
        let c = random_chain(seed ^ (0xa00 + k), n, 0.0);
        let t = 0.3 * (1 + k % 7) as f64 * n as f64;
        cases += 1;
        ensure!(
            failure,
            c,
            evolve::unimodality_check(&c, TimeParameter::Continuous(t)).unwrap(),
            "continuous unimodality fails at t={t}"
        );
        let lazy = random_chain(seed ^ (0xa80 + k), n, 0.5);
        let m = 1 + (k % 40);
        ensure!(
            failure,
            lazy,
            evolve::unimodality_check(&lazy, TimeParameter::Discrete(m)).unwrap(),
            "discrete unimodality fails at m={m}"
        );
    }
    CheckResult::from_run("unimodality", cases, failure)
}

fn check_mixing_brackets(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    let opts = MixingOptions::default();
    for k in 0..12u64 {
        let n = 3 + (k as usize % 10);
        let c = random_chain(seed ^ (0xb00 + k), n, 0.0);
        let m = c.quantile_state(0.5);
        let j = m.saturating_sub(1);
        let k_hi = (m + 1).min(n);
        let br = evolve::tv_mixing_brackets(&c, j, k_hi, 0.15).unwrap();
        if br.eps1 < 1.0 {
            cases += 1;
            let t = evolve::mixing_time(
                &c,
                Start::Max,
                br.eps1,
                Clock::Continuous,
                Distance::Tv,
                &opts,
            )
            .unwrap()
            .as_f64();
            ensure!(
                failure,
                c,
                t <= br.upper * (1.0 + 1e-9) + 1e-9,
                "upper mixing bracket fails: T({}) = {t} > {}",
                br.eps1,
                br.upper
            );
        }
        if !br.vacuous {
            cases += 1;
            let t = evolve::mixing_time(
                &c,
                Start::Max,
                br.eps2,
                Clock::Continuous,
                Distance::Tv,
                &opts,
            )
            .unwrap()
            .as_f64();
            ensure!(
                failure,
                c,
                t >= br.lower - 1e-9,
                "lower mixing bracket fails: T({}) = {t} < {}",
                br.eps2,
                br.lower
            );
        }
        // Single-start version around the median.
        if m > 0 && m < n {
            let sb = evolve::boundary_mixing_bracket(&c, m, 0.25).unwrap();
            if sb.upper_eps < 1.0 {
                cases += 1;
                let t = evolve::mixing_time(
                    &c,
                    Start::State(0),
                    sb.upper_eps,
                    Clock::Continuous,
                    Distance::Tv,
                    &opts,
                )
                .unwrap()
                .as_f64();
                ensure!(failure, c, t <= sb.upper + 1e-9, "single-start upper fails");
            }
            if sb.lower_eps > 0.0 {
                cases += 1;
                let t = evolve::mixing_time(
                    &c,
                    Start::State(0),
                    sb.lower_eps,
                    Clock::Continuous,
                    Distance::Tv,
                    &opts,
                )
                .unwrap()
                .as_f64();
                ensure!(failure, c, t >= sb.lower - 1e-9, "single-start lower fails");
            }
        }
    }
    CheckResult::from_run("mixing_brackets", cases, failure)
}

fn check_simulation(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..8u64 {
        let n = 2 + (k as usize % 8);
        let c = random_chain(seed ^ (0xc00 + k), n, 0.0);
        let to = n.min(1 + k as usize % n.max(1));
        for clock in [Clock::Discrete, Clock::Continuous] {
            cases += 1;
            let sim = hitting::simulate_hit(&c, 0, to, clock, 4000, seed ^ k).unwrap();
            let exact = hitting::mean_hit(&c, 0, to);
            let se = (sim.var / sim.samples as f64).sqrt();
            ensure!(
                failure,
                c,
                (sim.mean - exact).abs() <= 4.0 * se,
                "simulated mean {} vs exact {exact} (se {se})",
                sim.mean
            );
        }
    }
    CheckResult::from_run("simulation", cases, failure)
}

fn check_brown_shao(seed: u64) -> CheckResult {
    let mut failure = None;
    let mut cases = 0;
    for k in 0..6u64 {
        let n = 2 + (k as usize % 8);
        let c = random_chain(seed ^ (0xd00 + k), n, 0.0);
        let i = 1 + (k as usize) % n;
        cases += 1;
        let rep = evolve::brown_shao_check(&c, i, 4000, seed ^ (0xd80 + k)).unwrap();
        ensure!(
            failure,
            c,
            rep.mean_z.abs() <= 4.0,
            "first cumulant off by {} se at i={i}",
            rep.mean_z
        );
        ensure!(
            failure,
            c,
            rep.var_z.abs() <= 4.0,
            "second cumulant off by {} se at i={i}",
            rep.var_z
        );
    }
    CheckResult::from_run("brown_shao", cases, failure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_two_state_closed_form() {
        let c = Chain::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let (mean, var_d, var_c) = oracle_hit_moments(&c, 0, 1);
        assert!((mean - 1.0).abs() < 1e-15);
        assert!(var_d.abs() < 1e-15);
        assert!((var_c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_verify_suite_passes_on_default_seed() {
        for result in run_all(0xBD5EED) {
            assert!(result.pass, "{}: {}", result.name, result.detail);
        }
    }
}
