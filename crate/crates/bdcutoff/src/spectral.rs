//! Eigenvalues of I − K and of its principal submatrices.
//!
//! All spectra are computed on the symmetric tridiagonal form
//! D(I − K)D⁻¹ with D = diag(√π), whose entries are 1 − r_i on the
//! diagonal and −√(p_i q_{i+1}) off the diagonal. Eigenvalues come from
//! bisection with Sturm counts, one value at a time, so submatrix
//! spectra are independent of the full spectrum.

use crate::chain::Chain;
use crate::util::CompensatedSum;
use thiserror::Error;

/// Threshold below which an eigenvalue of I − K is identified as the
/// stationary zero eigenvalue.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-10;
/// Leading-submatrix eigenvalues below this are reported as a
/// conditioning failure rather than accepted as a spectrum.
pub const CONDITIONING_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("spectrum requested for an empty index range")]
    EmptyRange,
    #[error("index {index} out of range for a chain on {{0,…,{n}}}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("zero eigenvalue of I−K has multiplicity {count}; chain is numerically reducible")]
    ZeroMultiplicity { count: usize },
    #[error("no eigenvalue within {tol} of zero; expected one for an irreducible chain")]
    MissingZero { tol: f64 },
    #[error("submatrix eigenvalue {value} is below the conditioning floor {floor}")]
    IllConditioned { value: f64, floor: f64 },
}

/// Which operator a spectrum belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Non-zero eigenvalues λ_1 ≤ … ≤ λ_n of I − K.
    Full,
    /// Eigenvalues of the submatrix of I − K indexed by {0,…,i−1}.
    Leading(usize),
    /// Eigenvalues of I − K with row and column i removed.
    Punctured(usize),
}

/// Ascending real eigenvalues plus their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    kind: SpectrumKind,
}

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    /// Smallest eigenvalue.
    pub fn min(&self) -> f64 {
        self.values[0]
    }
}

/// Statistics of Theorem-style spectral sums over a full spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpectralStats {
    /// t = Σ 1/λ_i
    pub t: f64,
    /// gap = min λ_i
    pub gap: f64,
    /// σ² = Σ 1/λ_i²
    pub sigma2: f64,
    /// ρ² = Σ (1−λ_i)/λ_i², floored at zero when accumulation makes it
    /// negative.
    pub rho2: f64,
    /// Set when ρ² was negative before flooring.
    pub rho2_floored: bool,
}

/// Symmetric tridiagonal form of I − K restricted to `states`.
fn sym_tridiagonal(chain: &Chain, states: std::ops::RangeInclusive<usize>) -> (Vec<f64>, Vec<f64>) {
    let lo = *states.start();
    let hi = *states.end();
    let mut diag = Vec::with_capacity(hi - lo + 1);
    let mut off = Vec::with_capacity(hi - lo);
    for i in lo..=hi {
        diag.push(1.0 - chain.hold(i));
        if i < hi {
            off.push(-(chain.birth(i) * chain.death(i + 1)).sqrt());
        }
    }
    (diag, off)
}

/// Number of eigenvalues of the symmetric tridiagonal (diag, off)
/// strictly less than `x`, by counting negative pivots of the shifted
/// LDLᵀ factorization.
fn sturm_count(diag: &[f64], off2: &[f64], x: f64) -> usize {
    const PIVMIN: f64 = 1e-300;
    let mut count = 0usize;
    let mut d = diag[0] - x;
    if d.abs() < PIVMIN {
        d = -PIVMIN;
    }
    if d < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        d = (diag[i] - x) - off2[i - 1] / d;
        if d.abs() < PIVMIN {
            d = -PIVMIN;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending, by
/// per-index bisection inside the Gershgorin interval.
pub(crate) fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![diag[0]];
    }
    let off2: Vec<f64> = off.iter().map(|&e| e * e).collect();
    let mut glo = f64::INFINITY;
    let mut ghi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i == 0 {
            off[0].abs()
        } else if i == n - 1 {
            off[n - 2].abs()
        } else {
            off[i - 1].abs() + off[i].abs()
        };
        glo = glo.min(diag[i] - radius);
        ghi = ghi.max(diag[i] + radius);
    }
    let scale = glo.abs().max(ghi.abs()).max(1.0);
    glo -= scale * 1e-14;
    ghi += scale * 1e-14;

    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let mut lo = if k == 0 { glo } else { values[k - 1] };
        let mut hi = ghi;
        // k-th eigenvalue: smallest x with count(x) ≥ k+1.
        while hi - lo > 1e-15 * scale + f64::EPSILON * lo.abs().max(hi.abs()) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(diag, &off2, mid) >= k + 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        values.push(0.5 * (lo + hi));
    }
    values
}

/// Non-zero eigenvalues of I − K, ascending.
pub fn full_spectrum(chain: &Chain) -> Result<Spectrum, SpectralError> {
    let n = chain.n();
    if n == 0 {
        return Err(SpectralError::EmptyRange);
    }
    let (diag, off) = sym_tridiagonal(chain, 0..=n);
    let mut values = tridiagonal_eigenvalues(&diag, &off);
    let near_zero = values
        .iter()
        .filter(|v| v.abs() < ZERO_EIGENVALUE_TOL)
        .count();
    if near_zero == 0 {
        return Err(SpectralError::MissingZero {
            tol: ZERO_EIGENVALUE_TOL,
        });
    }
    if near_zero > 1 {
        return Err(SpectralError::ZeroMultiplicity { count: near_zero });
    }
    let zero_at = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap();
    values.remove(zero_at);
    let smallest_positive = values
        .iter()
        .cloned()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    for v in values.iter_mut() {
        *v = v.max(smallest_positive);
    }
    Ok(Spectrum {
        values,
        kind: SpectrumKind::Full,
    })
}

/// Eigenvalues β of the leading principal submatrix of I − K indexed by
/// {0,…,i−1}. All lie in (0, 2).
pub fn leading_spectrum(chain: &Chain, i: usize) -> Result<Spectrum, SpectralError> {
    let n = chain.n();
    if i == 0 {
        return Err(SpectralError::EmptyRange);
    }
    if i > n {
        return Err(SpectralError::IndexOutOfRange { index: i, n });
    }
    let (diag, off) = sym_tridiagonal(chain, 0..=i - 1);
    let values = tridiagonal_eigenvalues(&diag, &off);
    if values[0] < CONDITIONING_TOL {
        return Err(SpectralError::IllConditioned {
            value: values[0],
            floor: CONDITIONING_TOL,
        });
    }
    Ok(Spectrum {
        values,
        kind: SpectrumKind::Leading(i),
    })
}

/// Eigenvalues of I − K with row and column `i` removed. Deleting state
/// i disconnects the tridiagonal matrix, so the spectrum is the sorted
/// union of the two principal blocks on {0,…,i−1} and {i+1,…,n}.
pub fn punctured_spectrum(chain: &Chain, i: usize) -> Result<Spectrum, SpectralError> {
    let n = chain.n();
    if n == 0 {
        return Err(SpectralError::EmptyRange);
    }
    if i > n {
        return Err(SpectralError::IndexOutOfRange { index: i, n });
    }
    let mut values = Vec::with_capacity(n);
    if i > 0 {
        let (diag, off) = sym_tridiagonal(chain, 0..=i - 1);
        values.extend(tridiagonal_eigenvalues(&diag, &off));
    }
    if i < n {
        let (diag, off) = sym_tridiagonal(chain, i + 1..=n);
        values.extend(tridiagonal_eigenvalues(&diag, &off));
    }
    values.sort_by(f64::total_cmp);
    Ok(Spectrum {
        values,
        kind: SpectrumKind::Punctured(i),
    })
}

/// t, gap, σ², ρ² of Theorem-style spectral sums.
pub fn cutoff_spectral_stats(spectrum: &Spectrum) -> Result<CutoffSpectralStats, SpectralError> {
    if spectrum.values.is_empty() {
        return Err(SpectralError::EmptyRange);
    }
    let mut t = CompensatedSum::new();
    let mut sigma2 = CompensatedSum::new();
    let mut rho2 = CompensatedSum::new();
    let mut gap = f64::INFINITY;
    for &l in &spectrum.values {
        t.add(1.0 / l);
        sigma2.add(1.0 / (l * l));
        rho2.add((1.0 - l) / (l * l));
        gap = gap.min(l);
    }
    let raw_rho2 = rho2.value();
    Ok(CutoffSpectralStats {
        t: t.value(),
        gap,
        sigma2: sigma2.value(),
        rho2: raw_rho2.max(0.0),
        rho2_floored: raw_rho2 < 0.0,
    })
}

/// Weighted-sum constant C(M) of the Hardy-type gap bounds:
/// the larger of max_{j<M} Σ_{ℓ=j}^{M−1} π([0,j])/(π(ℓ)p_ℓ) and
/// max_{j>M} Σ_{ℓ=M+1}^{j} π([j,n])/(π(ℓ)q_ℓ).
pub fn hardy_constant(chain: &Chain, m: usize) -> f64 {
    let n = chain.n();
    let mut best: f64 = 0.0;
    // Left side: running suffix sums of 1/(π(ℓ)p_ℓ) for ℓ in [j, M−1].
    let mut tail = 0.0;
    for j in (0..m).rev() {
        tail += 1.0 / (chain.stationary()[j] * chain.birth(j));
        best = best.max(chain.head_mass(j) * tail);
    }
    // Right side: running prefix sums of 1/(π(ℓ)q_ℓ) for ℓ in [M+1, j].
    let mut head = 0.0;
    for j in m + 1..=n {
        head += 1.0 / (chain.stationary()[j] * chain.death(j));
        best = best.max(chain.tail_mass(j) * head);
    }
    best
}

/// Two-sided bracket for the relaxation time 1/λ from the Hardy-type
/// constant: [C/2, 4C]. The bracket is guaranteed to contain the exact
/// 1/λ when `m` is a median of π.
pub fn gap_order_bound(chain: &Chain, m: usize) -> (f64, f64) {
    let c = hardy_constant(chain, m);
    (0.5 * c, 4.0 * c)
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

    #[test]
    fn two_state_full_spectrum_is_two() {
        let s = full_spectrum(&two_state()).unwrap();
        assert_eq!(s.values().len(), 1);
        assert!((s.values()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn leading_one_by_one_block() {
        let c = binomial_metropolis_n2();
        let s = leading_spectrum(&c, 1).unwrap();
        assert_eq!(s.values().len(), 1);
        assert!((s.values()[0] - 0.5).abs() < 1e-14);
        assert!(leading_spectrum(&c, 0).is_err());
        assert!(leading_spectrum(&c, 3).is_err());
    }

    #[test]
    fn punctured_boundary_matches_trailing_block() {
        let c = two_state();
        let s = punctured_spectrum(&c, 0).unwrap();
        assert_eq!(s.values().len(), 1);
        assert!((s.values()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_stats_arithmetic() {
        let spec = Spectrum {
            values: vec![0.5, 1.0, 1.5, 2.0],
            kind: SpectrumKind::Full,
        };
        let st = cutoff_spectral_stats(&spec).unwrap();
        assert!((st.t - 25.0 / 6.0).abs() < 1e-12);
        assert!((st.gap - 0.5).abs() < 1e-15);
        assert!(!st.rho2_floored);
        assert!((st.sigma2 - (st.rho2 + st.t)).abs() < 1e-12);

        let single = Spectrum {
            values: vec![2.0],
            kind: SpectrumKind::Full,
        };
        let st = cutoff_spectral_stats(&single).unwrap();
        assert!((st.t - 0.5).abs() < 1e-15);
        assert!((st.sigma2 - 0.25).abs() < 1e-15);
        assert_eq!(st.rho2, 0.0);
        assert!(st.rho2_floored);
    }

    #[test]
    fn two_state_gap_bracket_contains_exact() {
        // General 2-state chain: exact gap is p_0 + q_1.
        let c = Chain::new(vec![0.3, 0.0], vec![0.0, 0.2], vec![0.7, 0.8]).unwrap();
        let gap = full_spectrum(&c).unwrap().min();
        assert!((gap - 0.5).abs() < 1e-12);
        let m = c.quantile_state(0.5);
        let (lo, hi) = gap_order_bound(&c, m);
        assert!(lo <= 1.0 / gap + 1e-12 && 1.0 / gap <= hi + 1e-12);
    }
}
