//! Family-level cutoff analysis: per-size statistics, criterion
//! products, verdicts, cutoff time/window selection, and the seeded
//! slowdown experiments.
//!
//! The underlying criteria are asymptotic ("the product tends to
//! infinity"); at finite scale the tool fits a log-log slope across the
//! swept sizes and reports a verdict labelled *indicated*, never a
//! theorem. Thresholds are configuration and are recorded in the
//! report, so any verdict can be re-derived from the serialized rows.

use crate::chain::Chain;
use crate::evolve::{self, Distance, MixingOptions, Start};
use crate::families::{Family, SlowdownDist};
use crate::hitting::{self, HittingTables};
use crate::spectral;
use crate::util;
use crate::Clock;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutoffError {
    #[error("a verdict needs at least 3 sizes, got {0}")]
    TooFewSizes(usize),
    #[error("verdict needs {0} statistics, which the report does not carry")]
    MissingStatistic(&'static str),
    #[error("sizes must be ascending and non-empty")]
    BadSizes,
    #[error("no seeds supplied")]
    NoSeeds,
}

/// A mixing-time column request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingSpec {
    pub start: StartSpec,
    pub eps: f64,
    pub clock: Clock,
    pub distance: DistanceSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    Left,
    Right,
    Max,
}

impl StartSpec {
    fn to_start(self, n: usize) -> Start {
        match self {
            StartSpec::Left => Start::State(0),
            StartSpec::Right => Start::State(n),
            StartSpec::Max => Start::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceSpec {
    Tv,
    Sep,
}

impl DistanceSpec {
    fn to_distance(self) -> Distance {
        match self {
            DistanceSpec::Tv => Distance::Tv,
            DistanceSpec::Sep => Distance::Separation,
        }
    }
}

/// Verdict thresholds; defaults follow the tool's finite-size surrogate
/// for the asymptotic criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictThresholds {
    /// Slope above this (with a large last product) indicates cutoff.
    pub slope_growth: f64,
    /// Last product must exceed this for a cutoff verdict.
    pub last_product_min: f64,
    /// |slope| below this indicates a bounded product (no cutoff).
    pub slope_flat: f64,
    /// Boundary-TV assumption check: u at the largest size should
    /// exceed this floor.
    pub u_floor: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            slope_growth: 0.1,
            last_product_min: 10.0,
            slope_flat: 0.02,
            u_floor: 1.0,
        }
    }
}

/// Sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Quantiles for the boundary statistics.
    pub quantiles: Vec<f64>,
    /// Split-state rule: M_n = quantile_state(·, split_a).
    pub split_a: f64,
    /// Rows where min{π([0,M]), π([M,n])} falls below this are flagged.
    pub pin_floor: f64,
    /// Compute full-spectrum statistics (t, gap, σ, ρ).
    pub spectral: bool,
    /// Requested exact mixing-time columns.
    pub mixing: Vec<MixingSpec>,
    /// Mixing columns are computed only for n up to these limits.
    pub exact_mixing_limit_continuous: usize,
    pub exact_mixing_limit_discrete: usize,
    pub thresholds: VerdictThresholds,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            quantiles: vec![0.25, 0.5, 0.75],
            split_a: 0.5,
            pin_floor: 0.05,
            spectral: true,
            mixing: Vec::new(),
            exact_mixing_limit_continuous: 4096,
            exact_mixing_limit_discrete: 2048,
            thresholds: VerdictThresholds::default(),
        }
    }
}

/// Boundary-start statistics at one quantile, for one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStats {
    pub a: f64,
    /// The split state M(a) (for the right side, measured on the
    /// flipped chain).
    pub m: usize,
    /// u(a): expected hitting time from the boundary to M(a).
    #[serde(with = "crate::util::nan_serde")]
    pub u: f64,
    /// v²(a): continuous-clock variance.
    #[serde(with = "crate::util::nan_serde")]
    pub v2: f64,
    /// w²(a): discrete-clock variance.
    #[serde(with = "crate::util::nan_serde")]
    pub w2: f64,
    /// Smallest eigenvalue of the leading submatrix below M(a);
    /// NaN when M(a) = 0 or the solve failed.
    #[serde(with = "crate::util::nan_serde")]
    pub lambda: f64,
}

/// Outcome of one requested mixing-time column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingResult {
    pub spec: MixingSpec,
    pub value: Option<f64>,
    pub note: Option<String>,
}

/// Everything recorded for one family size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub n: usize,
    pub gap: Option<f64>,
    pub t: Option<f64>,
    pub sigma2: Option<f64>,
    pub rho2: Option<f64>,
    pub rho2_floored: bool,
    pub m_half: usize,
    #[serde(with = "crate::util::nan_serde")]
    pub s: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub b2: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub c2: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub theta: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub alpha2: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub beta2: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub mean_from_0: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub mean_from_n: f64,
    pub boundary_left: Vec<BoundaryStats>,
    pub boundary_right: Vec<BoundaryStats>,
    /// eq-pin floor satisfied by the split rule at this size.
    pub pin_ok: bool,
    /// Spectral/hitting sandwich checks (need spectral statistics).
    pub csep_ok: Option<bool>,
    pub comp_ok: Option<bool>,
    /// δ v² ≤ w² ≤ v² across quantiles (when min hold δ > 0).
    pub wcomp_ok: Option<bool>,
    #[serde(with = "crate::util::nan_serde")]
    pub min_hold: f64,
    pub mixing: Vec<MixingResult>,
    pub error: Option<String>,
}

impl FamilyRow {
    fn failed(n: usize, error: String) -> Self {
        FamilyRow {
            n,
            gap: None,
            t: None,
            sigma2: None,
            rho2: None,
            rho2_floored: false,
            m_half: 0,
            s: f64::NAN,
            b2: f64::NAN,
            c2: f64::NAN,
            theta: f64::NAN,
            alpha2: f64::NAN,
            beta2: f64::NAN,
            mean_from_0: f64::NAN,
            mean_from_n: f64::NAN,
            boundary_left: Vec::new(),
            boundary_right: Vec::new(),
            pin_ok: false,
            csep_ok: None,
            comp_ok: None,
            wcomp_ok: None,
            min_hold: f64::NAN,
            mixing: Vec::new(),
            error: Some(error),
        }
    }

    pub fn product_t_gap(&self) -> Option<f64> {
        Some(self.t? * self.gap?)
    }

    pub fn product_s_gap(&self) -> Option<f64> {
        self.gap.map(|g| self.s * g)
    }

    pub fn product_theta_gap(&self) -> Option<f64> {
        self.gap.map(|g| self.theta * g)
    }

    pub fn ratio_s_b(&self) -> f64 {
        self.s / self.b2.sqrt()
    }

    pub fn ratio_theta_alpha(&self) -> f64 {
        self.theta / self.alpha2.sqrt()
    }

    pub fn ratio_theta_beta(&self) -> f64 {
        self.theta / self.beta2.sqrt()
    }
}

/// Per-size rows of cutoff statistics for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub schema_version: u32,
    pub family: Family,
    pub options: SweepOptions,
    pub rows: Vec<FamilyRow>,
}

/// Analyze one already-built chain into a row.
pub fn analyze_chain(chain: &Chain, n: usize, opts: &SweepOptions) -> FamilyRow {
    let tables = HittingTables::new(chain);
    let m_half = chain.quantile_state(opts.split_a);
    let hit = hitting::cutoff_hit_stats_from_tables(&tables, chain.n(), m_half);
    let pin_ok = chain.split_mass(m_half) >= opts.pin_floor;

    let spectral_stats = if opts.spectral && chain.n() >= 1 {
        spectral::full_spectrum(chain)
            .and_then(|s| spectral::cutoff_spectral_stats(&s))
            .ok()
    } else {
        None
    };

    let flipped = chain.flip();
    let side = |c: &Chain, t: &HittingTables, right: bool| -> Vec<BoundaryStats> {
        opts.quantiles
            .iter()
            .map(|&a| {
                let m = c.quantile_state(a);
                let (u, v2, w2) = if right {
                    // Right-side stats come from the flipped chain but
                    // reuse the same tables through index reflection.
                    let nn = c.n();
                    (
                        t.mean(nn, nn - m),
                        t.var(nn, nn - m, Clock::Continuous),
                        t.var(nn, nn - m, Clock::Discrete),
                    )
                } else {
                    (
                        t.mean(0, m),
                        t.var(0, m, Clock::Continuous),
                        t.var(0, m, Clock::Discrete),
                    )
                };
                let lambda = if m == 0 {
                    f64::NAN
                } else {
                    let base = if right { &flipped } else { chain };
                    spectral::leading_spectrum(base, m)
                        .map(|s| s.min())
                        .unwrap_or(f64::NAN)
                };
                BoundaryStats {
                    a,
                    m,
                    u,
                    v2,
                    w2,
                    lambda,
                }
            })
            .collect()
    };
    let boundary_left = side(chain, &tables, false);
    let boundary_right = side(&flipped, &tables, true);

    let min_hold = chain.min_hold();
    let (csep_ok, comp_ok) = match &spectral_stats {
        Some(st) => {
            let a = chain.split_mass(m_half);
            let slack = 1e-9;
            let csep = {
                let s_hi = st.t + 4.0 / (a * st.gap);
                let b2_hi = 17.0 * st.sigma2 / (a * a);
                let c2_hi = st.rho2 + 17.0 / (a * st.gap) / (a * st.gap);
                within(st.t, hit.s, s_hi, slack)
                    && within(st.sigma2, hit.b2, b2_hi, slack)
                    && within(st.rho2, hit.c2, c2_hi, slack)
            };
            let comp = {
                let sigma = st.sigma2.sqrt();
                let mid = st.t / sigma;
                let mid2 = st.t / st.rho2.sqrt().max(1.0 / st.gap);
                let lo = (st.t * st.gap).sqrt();
                let hi = st.t * st.gap;
                lo <= mid * (1.0 + 1e-9)
                    && mid <= mid2 * (1.0 + 1e-9)
                    && mid2 <= hi * (1.0 + 1e-9)
            };
            (Some(csep), Some(comp))
        }
        None => (None, None),
    };
    let wcomp_ok = if min_hold > 0.0 {
        Some(boundary_left.iter().chain(&boundary_right).all(|b| {
            b.w2 <= b.v2 * (1.0 + 1e-9) && min_hold * b.v2 <= b.w2 * (1.0 + 1e-9) + 1e-12
        }))
    } else {
        None
    };

    let mixing = opts
        .mixing
        .iter()
        .map(|spec| {
            let limit = match spec.clock {
                Clock::Continuous => opts.exact_mixing_limit_continuous,
                Clock::Discrete => opts.exact_mixing_limit_discrete,
            };
            if n > limit {
                return MixingResult {
                    spec: *spec,
                    value: None,
                    note: Some(format!("skipped: n > exact limit {limit}")),
                };
            }
            match evolve::mixing_time(
                chain,
                spec.start.to_start(chain.n()),
                spec.eps,
                spec.clock,
                spec.distance.to_distance(),
                &MixingOptions::default(),
            ) {
                Ok(v) => MixingResult {
                    spec: *spec,
                    value: Some(v.as_f64()),
                    note: None,
                },
                Err(e) => MixingResult {
                    spec: *spec,
                    value: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();

    FamilyRow {
        n,
        gap: spectral_stats.as_ref().map(|s| s.gap),
        t: spectral_stats.as_ref().map(|s| s.t),
        sigma2: spectral_stats.as_ref().map(|s| s.sigma2),
        rho2: spectral_stats.as_ref().map(|s| s.rho2),
        rho2_floored: spectral_stats.as_ref().map_or(false, |s| s.rho2_floored),
        m_half,
        s: hit.s,
        b2: hit.b2,
        c2: hit.c2,
        theta: hit.theta,
        alpha2: hit.alpha2,
        beta2: hit.beta2,
        mean_from_0: hit.mean_from_0,
        mean_from_n: hit.mean_from_n,
        boundary_left,
        boundary_right,
        pin_ok,
        csep_ok,
        comp_ok,
        wcomp_ok,
        min_hold,
        mixing,
        error: None,
    }
}

fn within(lo: f64, x: f64, hi: f64, slack: f64) -> bool {
    let scale = lo.abs().max(x.abs()).max(hi.abs()).max(1.0);
    lo <= x + slack * scale && x <= hi + slack * scale
}

/// One FamilyRow per size, in parallel; generator failures are recorded
/// per row rather than aborting the sweep.
pub fn analyze_family(
    family: &Family,
    sizes: &[usize],
    opts: &SweepOptions,
) -> Result<FamilyReport, CutoffError> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CutoffError::BadSizes);
    }
    let rows: Vec<FamilyRow> = sizes
        .par_iter()
        .map(|&n| match family.generate(n) {
            Ok(chain) => analyze_chain(&chain, n, opts),
            Err(e) => FamilyRow::failed(n, e.to_string()),
        })
        .collect();
    Ok(FamilyReport {
        schema_version: SCHEMA_VERSION,
        family: family.clone(),
        options: opts.clone(),
        rows,
    })
}

/// Which cutoff criterion a verdict evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictMode {
    MaxSep,
    MaxTv,
    BoundaryTvLeft,
    BoundaryTvRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    CutoffIndicated,
    NoCutoffIndicated,
    Inconclusive,
}

/// Per-size value of one criterion product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductPoint {
    pub n: usize,
    #[serde(with = "crate::util::nan_serde")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTrend {
    /// Label, e.g. "theta*gap" or "u(0.25)*lambda(0.25)".
    pub label: String,
    pub points: Vec<ProductPoint>,
    #[serde(with = "crate::util::nan_serde")]
    pub slope: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub last: f64,
    pub kind: VerdictKind,
}

/// Profile-width evidence W(ε) = T(ε) − T(1−ε) assembled from any
/// matching mixing columns present in the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthPoint {
    pub n: usize,
    pub eps: f64,
    pub width: f64,
    pub mid_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffVerdict {
    pub mode: VerdictMode,
    pub clock: Clock,
    pub trends: Vec<ProductTrend>,
    pub verdict: VerdictKind,
    pub thresholds: VerdictThresholds,
    pub width_evidence: Vec<WidthPoint>,
    pub flags: Vec<String>,
}

fn classify(points: &[ProductPoint], th: &VerdictThresholds) -> (f64, f64, VerdictKind) {
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.value.max(1e-300).ln()).collect();
    let slope = util::ls_slope(&xs, &ys);
    let last = points.last().map(|p| p.value).unwrap_or(f64::NAN);
    let kind = if slope > th.slope_growth && last > th.last_product_min {
        VerdictKind::CutoffIndicated
    } else if slope.abs() < th.slope_flat {
        VerdictKind::NoCutoffIndicated
    } else {
        VerdictKind::Inconclusive
    };
    (slope, last, kind)
}

/// Evaluate the criterion product for `mode` across the report's rows,
/// fit the log-log slope, and classify.
pub fn verdict(
    report: &FamilyReport,
    mode: VerdictMode,
    clock: Clock,
) -> Result<CutoffVerdict, CutoffError> {
    let rows: Vec<&FamilyRow> = report.rows.iter().filter(|r| r.error.is_none()).collect();
    if rows.len() < 3 {
        return Err(CutoffError::TooFewSizes(rows.len()));
    }
    let th = report.options.thresholds;
    let mut flags = Vec::new();
    let mut trends = Vec::new();
    match mode {
        VerdictMode::MaxSep | VerdictMode::MaxTv => {
            let mut points = Vec::new();
            for r in &rows {
                let value = match mode {
                    VerdictMode::MaxSep => r.product_t_gap(),
                    _ => r.product_theta_gap(),
                }
                .ok_or(CutoffError::MissingStatistic("spectral gap"))?;
                points.push(ProductPoint { n: r.n, value });
            }
            let (slope, last, kind) = classify(&points, &th);
            trends.push(ProductTrend {
                label: match mode {
                    VerdictMode::MaxSep => "t*gap".into(),
                    _ => "theta*gap".into(),
                },
                points,
                slope,
                last,
                kind,
            });
        }
        VerdictMode::BoundaryTvLeft | VerdictMode::BoundaryTvRight => {
            fn side<'a>(r: &'a FamilyRow, mode: VerdictMode) -> &'a [BoundaryStats] {
                if mode == VerdictMode::BoundaryTvLeft {
                    &r.boundary_left
                } else {
                    &r.boundary_right
                }
            }
            let quantiles = report.options.quantiles.clone();
            for (qi, &a) in quantiles.iter().enumerate() {
                let mut points = Vec::new();
                for r in &rows {
                    let b = side(r, mode)
                        .get(qi)
                        .ok_or(CutoffError::MissingStatistic("boundary stats"))?;
                    let value = if b.m == 0 { 0.0 } else { b.u * b.lambda };
                    points.push(ProductPoint { n: r.n, value });
                }
                let (slope, last, kind) = classify(&points, &th);
                trends.push(ProductTrend {
                    label: format!("u({a})*lambda({a})"),
                    points,
                    slope,
                    last,
                    kind,
                });
            }
            // Standing assumption u_n(a) → ∞ for the discrete theorem.
            if let Some(last_row) = rows.last() {
                let u_last = side(last_row, mode).iter().map(|b| b.u).fold(f64::NAN, f64::max);
                if !(u_last > th.u_floor) {
                    flags.push(format!(
                        "u at largest size is {u_last}, below the floor {}",
                        th.u_floor
                    ));
                }
            }
        }
    }

    let verdict = if trends.iter().all(|t| t.kind == VerdictKind::CutoffIndicated) {
        VerdictKind::CutoffIndicated
    } else if trends
        .iter()
        .all(|t| t.kind == VerdictKind::NoCutoffIndicated)
    {
        VerdictKind::NoCutoffIndicated
    } else {
        VerdictKind::Inconclusive
    };

    // Width evidence from any (max, ε)/(max, 1−ε) mixing pairs.
    let mut width_evidence = Vec::new();
    for r in &rows {
        let find = |eps: f64| -> Option<f64> {
            r.mixing.iter().find_map(|m| {
                (m.spec.start == StartSpec::Max
                    && m.spec.clock == clock
                    && m.spec.distance == DistanceSpec::Tv
                    && (m.spec.eps - eps).abs() < 1e-12)
                    .then_some(m.value)
                    .flatten()
            })
        };
        let eps_list: Vec<f64> = r
            .mixing
            .iter()
            .filter(|m| m.spec.eps < 0.5)
            .map(|m| m.spec.eps)
            .collect();
        for eps in eps_list {
            if let (Some(t_lo), Some(t_hi)) = (find(eps), find(1.0 - eps)) {
                width_evidence.push(WidthPoint {
                    n: r.n,
                    eps,
                    width: t_lo - t_hi,
                    mid_time: find(0.5),
                });
            }
        }
    }

    Ok(CutoffVerdict {
        mode,
        clock,
        trends,
        verdict,
        thresholds: th,
        width_evidence,
        flags,
    })
}

/// The (cutoff time, window) pair for one size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub n: usize,
    pub time: f64,
    pub window: f64,
}

/// Emit the paper-style (time, window) pair per size for the requested
/// mode and clock. Boundary modes use u(a) at the quantile closest to
/// one half with the window maximized over all requested quantiles.
pub fn cutoff_time_window(
    report: &FamilyReport,
    mode: VerdictMode,
    clock: Clock,
) -> Result<Vec<TimeWindow>, CutoffError> {
    let mut out = Vec::new();
    for r in report.rows.iter().filter(|r| r.error.is_none()) {
        let gap = r.gap;
        let tw = match (mode, clock) {
            (VerdictMode::MaxSep, Clock::Continuous) => TimeWindow {
                n: r.n,
                time: r.s,
                window: r.b2.sqrt(),
            },
            (VerdictMode::MaxSep, Clock::Discrete) => {
                let g = gap.ok_or(CutoffError::MissingStatistic("spectral gap"))?;
                TimeWindow {
                    n: r.n,
                    time: r.s,
                    window: r.c2.sqrt().max(1.0 / g),
                }
            }
            (VerdictMode::MaxTv, Clock::Continuous) => TimeWindow {
                n: r.n,
                time: r.theta,
                window: r.alpha2.sqrt(),
            },
            (VerdictMode::MaxTv, Clock::Discrete) => TimeWindow {
                n: r.n,
                time: r.theta,
                window: r.beta2.sqrt(),
            },
            (VerdictMode::BoundaryTvLeft, _) | (VerdictMode::BoundaryTvRight, _) => {
                let stats = if mode == VerdictMode::BoundaryTvLeft {
                    &r.boundary_left
                } else {
                    &r.boundary_right
                };
                if stats.is_empty() {
                    return Err(CutoffError::MissingStatistic("boundary stats"));
                }
                let central = stats
                    .iter()
                    .min_by(|x, y| (x.a - 0.5).abs().total_cmp(&(y.a - 0.5).abs()))
                    .unwrap();
                let window = match clock {
                    Clock::Continuous => stats
                        .iter()
                        .map(|b| b.v2.sqrt())
                        .fold(f64::NEG_INFINITY, f64::max),
                    Clock::Discrete => stats
                        .iter()
                        .map(|b| b.w2.sqrt())
                        .fold(f64::NEG_INFINITY, f64::max)
                        .max(1.0),
                };
                TimeWindow {
                    n: r.n,
                    time: central.u,
                    window,
                }
            }
        };
        out.push(tw);
    }
    Ok(out)
}

/// Left/right boundary comparison per size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryComparisonRow {
    pub n: usize,
    #[serde(with = "crate::util::nan_serde")]
    pub mean_from_0: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub mean_from_n: f64,
    /// E_nτ̃_M / E_0τ̃_M: the statistic whose vanishing makes the left
    /// cutoff time the maximum cutoff time.
    pub right_over_left: f64,
    pub dominant_left: bool,
    /// Both boundary statistics agree to 1e−10, as for flip-symmetric
    /// chains.
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryComparison {
    pub rows: Vec<BoundaryComparisonRow>,
    /// All rows symmetric: the left-start and maximum cutoff times
    /// coincide exactly.
    pub all_symmetric: bool,
}

pub fn boundary_vs_max_comparison(report: &FamilyReport) -> BoundaryComparison {
    let rows: Vec<BoundaryComparisonRow> = report
        .rows
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| {
            let rel = (r.mean_from_0 - r.mean_from_n).abs()
                / r.mean_from_0.abs().max(r.mean_from_n.abs()).max(1.0);
            BoundaryComparisonRow {
                n: r.n,
                mean_from_0: r.mean_from_0,
                mean_from_n: r.mean_from_n,
                right_over_left: r.mean_from_n / r.mean_from_0,
                dominant_left: r.mean_from_0 >= r.mean_from_n,
                symmetric: rel <= 1e-10,
            }
        })
        .collect();
    let all_symmetric = !rows.is_empty() && rows.iter().all(|r| r.symmetric);
    BoundaryComparison {
        rows,
        all_symmetric,
    }
}

/// Per-seed slowdown statistics at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSizeStats {
    pub n: usize,
    #[serde(with = "crate::util::nan_serde")]
    pub theta_base: f64,
    #[serde(with = "crate::util::nan_serde")]
    pub alpha_base: f64,
    /// θ per seed for the slowed chain.
    #[serde(with = "crate::util::nan_vec_serde")]
    pub theta: Vec<f64>,
    #[serde(with = "crate::util::nan_vec_serde")]
    pub alpha: Vec<f64>,
    /// θ / (μ θ_base) per seed; empty when μ diverges.
    #[serde(with = "crate::util::nan_vec_serde")]
    pub theta_ratio: Vec<f64>,
    /// θ · gap per seed (criterion product).
    #[serde(with = "crate::util::nan_vec_serde")]
    pub product: Vec<f64>,
    /// Predicted concentration scale ν α_base / (μ θ_base).
    pub concentration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomReport {
    pub schema_version: u32,
    pub base: Family,
    pub dist: SlowdownDist,
    pub seeds: Vec<u64>,
    /// E[1/C]; absent when the first moment diverges, in which case the
    /// analytic prediction is reported as not applicable and only the
    /// empirical statistics are meaningful.
    pub mu: Option<f64>,
    pub nu2: Option<f64>,
    pub per_size: Vec<RandomSizeStats>,
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Seeded slowdown experiment: for each (size, seed) the slowed chain's
/// θ and α are computed exactly, and compared against μ·θ_base when
/// E[1/C] is finite.
pub fn random_family_experiment(
    base: &Family,
    dist: SlowdownDist,
    sizes: &[usize],
    seeds: &[u64],
    opts: &SweepOptions,
) -> Result<RandomReport, CutoffError> {
    if seeds.is_empty() {
        return Err(CutoffError::NoSeeds);
    }
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CutoffError::BadSizes);
    }
    let mu = dist.mu();
    let nu2 = dist.nu2();
    let per_size: Vec<RandomSizeStats> = sizes
        .par_iter()
        .map(|&n| {
            let base_chain = base.generate(n).expect("base family must generate");
            let m = base_chain.quantile_state(opts.split_a);
            let base_stats = hitting::cutoff_hit_stats(&base_chain, m);
            let mut theta = Vec::with_capacity(seeds.len());
            let mut alpha = Vec::with_capacity(seeds.len());
            let mut product = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let slowed = crate::families::apply_slowdown(&base_chain, &dist, seed, n)
                    .expect("slowdown preserves validity");
                let st = hitting::cutoff_hit_stats(&slowed, slowed.quantile_state(opts.split_a));
                let gap = spectral::full_spectrum(&slowed)
                    .and_then(|s| spectral::cutoff_spectral_stats(&s))
                    .map(|s| s.gap)
                    .unwrap_or(f64::NAN);
                theta.push(st.theta);
                alpha.push(st.alpha2.sqrt());
                product.push(st.theta * gap);
            }
            let theta_ratio = match mu {
                Some(mu) => theta.iter().map(|&t| t / (mu * base_stats.theta)).collect(),
                None => Vec::new(),
            };
            let concentration = match (mu, nu2) {
                (Some(mu), Some(nu2)) => {
                    Some(nu2.sqrt() * base_stats.alpha2.sqrt() / (mu * base_stats.theta))
                }
                _ => None,
            };
            RandomSizeStats {
                n,
                theta_base: base_stats.theta,
                alpha_base: base_stats.alpha2.sqrt(),
                theta,
                alpha,
                theta_ratio,
                product,
                concentration,
            }
        })
        .collect();
    Ok(RandomReport {
        schema_version: SCHEMA_VERSION,
        base: base.clone(),
        dist,
        seeds: seeds.to_vec(),
        mu,
        nu2,
        per_size,
    })
}

/// Stable CSV rendering of a family report: one row per size, columns
/// fixed by the schema version and the requested quantiles/mixing
/// columns. Numbers use the shortest round-trip decimal form.
pub fn report_to_csv(report: &FamilyReport) -> String {
    let mut header: Vec<String> = vec![
        "n", "gap", "t", "sigma", "rho", "m_half", "s", "b", "c", "theta", "alpha", "beta",
        "e0", "en", "t_gap", "s_gap", "theta_gap", "s_over_b", "theta_over_alpha",
        "theta_over_beta", "pin_ok", "csep_ok", "comp_ok", "wcomp_ok",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    for &a in &report.options.quantiles {
        for side in ["l", "r"] {
            header.push(format!("u_{side}({a})"));
            header.push(format!("v_{side}({a})"));
            header.push(format!("w_{side}({a})"));
            header.push(format!("lambda_{side}({a})"));
            header.push(format!("u_lambda_{side}({a})"));
            header.push(format!("u_over_v_{side}({a})"));
        }
    }
    for m in &report.options.mixing {
        header.push(format!(
            "T_{}_{}_{}_{}",
            match m.distance {
                DistanceSpec::Tv => "tv",
                DistanceSpec::Sep => "sep",
            },
            match m.clock {
                Clock::Continuous => "c",
                Clock::Discrete => "d",
            },
            match m.start {
                StartSpec::Left => "left".into(),
                StartSpec::Right => "right".into(),
                StartSpec::Max => "max".to_string(),
            },
            m.eps
        ));
    }
    header.push("error".into());

    let mut out = header.join(",");
    out.push('\n');
    let fmt = |x: f64| {
        if x.is_nan() {
            "nan".to_string()
        } else {
            format!("{x}")
        }
    };
    let fmt_opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    let fmt_bool = |x: Option<bool>| match x {
        Some(true) => "1".to_string(),
        Some(false) => "0".to_string(),
        None => String::new(),
    };
    for r in &report.rows {
        let mut cells: Vec<String> = vec![
            r.n.to_string(),
            fmt_opt(r.gap),
            fmt_opt(r.t),
            fmt_opt(r.sigma2.map(f64::sqrt)),
            fmt_opt(r.rho2.map(f64::sqrt)),
            r.m_half.to_string(),
            fmt(r.s),
            fmt(r.b2.sqrt()),
            fmt(r.c2.sqrt()),
            fmt(r.theta),
            fmt(r.alpha2.sqrt()),
            fmt(r.beta2.sqrt()),
            fmt(r.mean_from_0),
            fmt(r.mean_from_n),
            fmt_opt(r.product_t_gap()),
            fmt_opt(r.product_s_gap()),
            fmt_opt(r.product_theta_gap()),
            fmt(r.ratio_s_b()),
            fmt(r.ratio_theta_alpha()),
            fmt(r.ratio_theta_beta()),
            fmt_bool(Some(r.pin_ok)),
            fmt_bool(r.csep_ok),
            fmt_bool(r.comp_ok),
            fmt_bool(r.wcomp_ok),
        ];
        for qi in 0..report.options.quantiles.len() {
            for stats in [&r.boundary_left, &r.boundary_right] {
                match stats.get(qi) {
                    Some(b) => {
                        cells.push(fmt(b.u));
                        cells.push(fmt(b.v2.sqrt()));
                        cells.push(fmt(b.w2.sqrt()));
                        cells.push(fmt(b.lambda));
                        cells.push(fmt(b.u * b.lambda));
                        cells.push(fmt(b.u / b.v2.sqrt()));
                    }
                    None => {
                        for _ in 0..6 {
                            cells.push(String::new());
                        }
                    }
                }
            }
        }
        for mi in 0..report.options.mixing.len() {
            cells.push(
                r.mixing
                    .get(mi)
                    .and_then(|m| m.value)
                    .map(fmt)
                    .unwrap_or_default(),
            );
        }
        cells.push(r.error.clone().unwrap_or_default());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Family, MonotoneFn, SizeRule};

    fn small_opts() -> SweepOptions {
        SweepOptions::default()
    }

    #[test]
    fn biased_walk_sweep_indicates_cutoff() {
        let fam = Family::biased_rw(0.7).unwrap();
        let report = analyze_family(&fam, &[32, 64, 128, 256], &small_opts()).unwrap();
        for r in &report.rows {
            assert!(r.error.is_none());
            assert_eq!(r.csep_ok, Some(true));
            assert_eq!(r.comp_ok, Some(true));
            // Zero interior holding: the w/v comparison needs δ > 0.
            assert_eq!(r.wcomp_ok, None);
        }
        let v = verdict(&report, VerdictMode::MaxTv, Clock::Continuous).unwrap();
        assert_eq!(v.verdict, VerdictKind::CutoffIndicated, "{v:?}");
        // θ grows like n/(p−q).
        let last = report.rows.last().unwrap();
        assert!((last.theta / (256.0 / 0.4) - 1.0).abs() < 0.1);
    }

    #[test]
    fn lazy_simple_walk_shows_no_cutoff() {
        let fam = Family::metropolis_monotone(MonotoneFn::Const).unwrap();
        let report = analyze_family(&fam, &[32, 64, 128, 256], &small_opts()).unwrap();
        let v = verdict(&report, VerdictMode::MaxTv, Clock::Continuous).unwrap();
        assert_eq!(v.verdict, VerdictKind::NoCutoffIndicated, "{v:?}");
    }

    #[test]
    fn bottleneck_family_shows_no_cutoff() {
        let fam = Family::bottleneck_srw(SizeRule::PowerLog {
            coeff: 1.0,
            n_exp: -3.0,
            log_exp: 0.0,
        });
        let report = analyze_family(&fam, &[64, 128, 256], &small_opts()).unwrap();
        let v = verdict(&report, VerdictMode::MaxSep, Clock::Continuous).unwrap();
        assert_eq!(v.verdict, VerdictKind::NoCutoffIndicated, "{v:?}");
        // s_n ≈ 1/ξ_n once the bottleneck dominates.
        let last = report.rows.last().unwrap();
        let xi_inv = 256.0_f64.powi(3);
        assert!(last.s / xi_inv > 0.9 && last.s / xi_inv < 1.3);
    }

    #[test]
    fn verdict_is_reproducible_from_serialized_report() {
        let fam = Family::biased_rw(0.6).unwrap();
        let report = analyze_family(&fam, &[16, 32, 64], &small_opts()).unwrap();
        let v1 = verdict(&report, VerdictMode::MaxTv, Clock::Continuous).unwrap();
        let text = serde_json::to_string(&report).unwrap();
        let back: FamilyReport = serde_json::from_str(&text).unwrap();
        let v2 = verdict(&back, VerdictMode::MaxTv, Clock::Continuous).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn symmetric_family_left_right_agree() {
        let fam = Family::metropolis_binomial();
        let report = analyze_family(&fam, &[8, 16, 32], &small_opts()).unwrap();
        let cmp = boundary_vs_max_comparison(&report);
        assert!(cmp.all_symmetric);
        for r in cmp.rows {
            assert!((r.right_over_left - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn time_window_pairs_for_binomial_metropolis() {
        let fam = Family::metropolis_binomial();
        let report = analyze_family(&fam, &[64, 128, 256], &small_opts()).unwrap();
        // θ = (1/4)n ln n + c·n with a stable constant c; window = O(n).
        let tw = cutoff_time_window(&report, VerdictMode::MaxTv, Clock::Continuous).unwrap();
        let consts: Vec<f64> = tw
            .iter()
            .map(|w| (w.time - 0.25 * w.n as f64 * (w.n as f64).ln()) / w.n as f64)
            .collect();
        for c in &consts {
            assert!((c - consts[0]).abs() < 0.2 * consts[0].abs(), "{consts:?}");
        }
        for w in &tw {
            assert!(w.window / w.time < 0.5);
        }
        // Max-sep time s = 2θ for this symmetric family.
        let sep = cutoff_time_window(&report, VerdictMode::MaxSep, Clock::Continuous).unwrap();
        for (sw, tvw) in sep.iter().zip(&tw) {
            assert!((sw.time / (2.0 * tvw.time) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_slowdown_scales_theta_exactly() {
        let base = Family::metropolis_binomial();
        let chain = base.generate(24).unwrap();
        let factors = vec![0.5; 24];
        let slowed = crate::families::scaled_edges(&chain, &factors).unwrap();
        let m = chain.quantile_state(0.5);
        let a = hitting::cutoff_hit_stats(&chain, m);
        let b = hitting::cutoff_hit_stats(&slowed, slowed.quantile_state(0.5));
        assert!((b.theta - 2.0 * a.theta).abs() < 1e-9 * b.theta);
    }

    #[test]
    fn csv_has_stable_shape() {
        let fam = Family::biased_rw(0.7).unwrap();
        let report = analyze_family(&fam, &[8, 16, 32], &small_opts()).unwrap();
        let csv = report_to_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        let cols = lines[0].split(',').count();
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), cols);
        }
    }
}
