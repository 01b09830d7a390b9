//! Binomial analysis of vote-exposure risk under booth sharding: how likely a
//! randomly filled booth is unanimous, how many such booths to expect across
//! an electorate, and the smallest booth size meeting an exposure budget.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoothPrivacyError {
    #[error("no booth size up to the electorate meets the exposure bound")]
    Unsatisfiable,
    #[error("invalid query: {0}")]
    InvalidQuery(&'static str),
}

/// Which unanimity events count as exposing a booth. The default counts only
/// the winning-candidate case `p^n`; the conservative mode also adds the
/// all-other-side case `(1-p)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnanimityMode {
    #[default]
    WinningChoice,
    EitherChoice,
}

/// Booth-sizing question: electorate `N` split into booths of `n`, winning
/// probability `p`, and a tolerance on the expected number of exposed booths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoothPrivacyQuery {
    pub booth_size: u64,
    pub winning_probability: f64,
    pub electorate: u64,
    pub max_expected_exposed: f64,
}

impl BoothPrivacyQuery {
    pub fn validate(&self) -> Result<(), BoothPrivacyError> {
        if self.booth_size == 0 {
            return Err(BoothPrivacyError::InvalidQuery("booth size must be >= 1"));
        }
        if self.electorate < self.booth_size {
            return Err(BoothPrivacyError::InvalidQuery("electorate must be >= booth size"));
        }
        if !(0.0..=1.0).contains(&self.winning_probability) {
            return Err(BoothPrivacyError::InvalidQuery("probability must be in [0, 1]"));
        }
        Ok(())
    }
}

/// `C(n, x) p^x (1-p)^(n-x)`, evaluated in log space so it stays finite for
/// booth sizes up to 10^4.
pub fn binom_pmf(n: u64, x: u64, p: f64) -> f64 {
    assert!(x <= n, "pmf requires 0 <= x <= n");
    assert!((0.0..=1.0).contains(&p), "probability must be in [0, 1]");
    if p == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    let (n_f, x_f) = (n as f64, x as f64);
    let ln_choose = ln_gamma(n_f + 1.0) - ln_gamma(x_f + 1.0) - ln_gamma(n_f - x_f + 1.0);
    (ln_choose + x_f * p.ln() + (n_f - x_f) * (1.0 - p).ln()).exp()
}

/// Probability a booth of `n` is unanimous: `p^n`, or `p^n + (1-p)^n` in the
/// conservative mode.
pub fn all_same_prob(n: u64, p: f64, mode: UnanimityMode) -> f64 {
    let winning = p.powi(n as i32);
    match mode {
        UnanimityMode::WinningChoice => winning,
        UnanimityMode::EitherChoice => winning + (1.0 - p).powi(n as i32),
    }
}

/// Expected count of unanimous booths: `ceil(N/n) * all_same_prob(n, p)`.
pub fn expected_exposed_booths(electorate: u64, booth_size: u64, p: f64, mode: UnanimityMode) -> f64 {
    assert!(booth_size >= 1);
    let booths = electorate.div_ceil(booth_size);
    booths as f64 * all_same_prob(booth_size, p, mode)
}

/// Smallest booth size whose expected exposure stays within the bound. The
/// expectation is non-increasing in the booth size, so a doubling search
/// brackets the answer and bisection pins it down.
pub fn recommend_booth_size(
    electorate: u64,
    p: f64,
    max_expected_exposed: f64,
    mode: UnanimityMode,
) -> Result<u64, BoothPrivacyError> {
    if max_expected_exposed <= 0.0 {
        return Err(BoothPrivacyError::InvalidQuery("exposure bound must be > 0"));
    }
    if electorate == 0 {
        return Err(BoothPrivacyError::InvalidQuery("electorate must be >= 1"));
    }
    let fits = |n: u64| expected_exposed_booths(electorate, n, p, mode) <= max_expected_exposed;
    if fits(1) {
        return Ok(1);
    }
    let mut hi = 1u64;
    while !fits(hi) {
        if hi >= electorate {
            return Err(BoothPrivacyError::Unsatisfiable);
        }
        hi = (hi * 2).min(electorate);
    }
    let mut lo = hi / 2; // known to fail
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The full distribution `(x, pmf)` for `x = 0..=n`, for plotting.
pub fn pmf_curve(n: u64, p: f64) -> Vec<(u64, f64)> {
    (0..=n).map(|x| (x, binom_pmf(n, x, p))).collect()
}

/// Compensated sum of a PMF curve, for normalization checks.
pub fn curve_mass(curve: &[(u64, f64)]) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for &(_, v) in curve {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
