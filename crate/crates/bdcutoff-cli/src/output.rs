//! Report rendering helpers. Numbers are written with the shortest
//! round-trip decimal form so identical runs produce identical bytes.

use bdcutoff::cutoff::{FamilyRow, RandomReport, SweepOptions};
use bdcutoff::evolve::DistanceProfile;
use bdcutoff::Clock;

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x}")
    }
}

pub fn analyze_json(
    row: &FamilyRow,
    opts: &SweepOptions,
    profile: Option<&DistanceProfile>,
) -> String {
    let mut doc = serde_json::json!({
        "schema_version": bdcutoff::cutoff::SCHEMA_VERSION,
        "options": opts,
        "row": row,
    });
    if let Some(p) = profile {
        doc["profile"] = profile_json(p);
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("row serializes");
    s.push('\n');
    s
}

pub fn analyze_csv(
    row: &FamilyRow,
    opts: &SweepOptions,
    profile: Option<&DistanceProfile>,
) -> String {
    let report = bdcutoff::cutoff::FamilyReport {
        schema_version: bdcutoff::cutoff::SCHEMA_VERSION,
        family: bdcutoff::Family::metropolis_binomial(),
        options: opts.clone(),
        rows: vec![row.clone()],
    };
    // Reuse the sweep table; the family tag is not part of the CSV.
    let mut text = bdcutoff::cutoff::report_to_csv(&report);
    if let Some(p) = profile {
        text.push('\n');
        text.push_str(&profiles_csv(std::slice::from_ref(p)));
    }
    text
}

pub fn profile_json(p: &DistanceProfile) -> serde_json::Value {
    serde_json::json!({
        "start": p.start,
        "clock": match p.clock { Clock::Continuous => "continuous", Clock::Discrete => "discrete" },
        "time": p.grid,
        "tv": p.tv,
        "sep": p.sep,
    })
}

/// Profiles share a grid: columns are time, then tv/sep per start.
pub fn profiles_csv(profiles: &[DistanceProfile]) -> String {
    let mut header = vec!["time".to_string()];
    for p in profiles {
        header.push(format!("tv_{}", p.start));
        header.push(format!("sep_{}", p.start));
    }
    let mut out = header.join(",");
    out.push('\n');
    let rows = profiles.first().map(|p| p.grid.len()).unwrap_or(0);
    for k in 0..rows {
        let mut cells = vec![fmt(profiles[0].grid[k])];
        for p in profiles {
            cells.push(fmt(p.tv[k]));
            cells.push(fmt(p.sep[k]));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn random_csv(report: &RandomReport) -> String {
    let mut out = String::from(
        "n,theta_base,alpha_base,mu,nu,concentration,theta_median,ratio_median,ratio_min,ratio_max,product_median,theta_alpha_ratio_median\n",
    );
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    for s in &report.per_size {
        let ratio_med = bdcutoff::cutoff::median(&s.theta_ratio);
        let (rmin, rmax) = s
            .theta_ratio
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        let ta: Vec<f64> = s
            .theta
            .iter()
            .zip(&s.alpha)
            .map(|(&t, &a)| t / a)
            .collect();
        let cells = vec![
            s.n.to_string(),
            fmt(s.theta_base),
            fmt(s.alpha_base),
            opt(report.mu),
            opt(report.nu2.map(f64::sqrt)),
            opt(s.concentration),
            fmt(bdcutoff::cutoff::median(&s.theta)),
            if s.theta_ratio.is_empty() {
                String::new()
            } else {
                fmt(ratio_med)
            },
            if s.theta_ratio.is_empty() {
                String::new()
            } else {
                fmt(rmin)
            },
            if s.theta_ratio.is_empty() {
                String::new()
            } else {
                fmt(rmax)
            },
            fmt(bdcutoff::cutoff::median(&s.product)),
            fmt(bdcutoff::cutoff::median(&ta)),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
