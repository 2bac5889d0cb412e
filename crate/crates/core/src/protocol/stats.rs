//! Student t-tests over per-run accuracies.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Significance level used throughout the comparison tables.
pub const DEFAULT_ALPHA: f64 = 0.10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tails {
    #[default]
    Two,
    /// Tests in the direction of the observed mean difference.
    One,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Differences of matched runs, `n - 1` degrees of freedom.
    #[default]
    Paired,
    /// Welch's unequal-variance test on the two samples.
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TTestConfig {
    pub alpha: f64,
    pub tails: Tails,
    pub pairing: Pairing,
}

impl Default for TTestConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            tails: Tails::Two,
            pairing: Pairing::Paired,
        }
    }
}

impl TTestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Outcome of comparing a candidate against a baseline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Significance {
    Better,
    Worse,
    #[default]
    None,
}

impl Significance {
    /// Suffix used in text tables.
    pub fn suffix(self) -> &'static str {
        match self {
            Significance::Better => "+",
            Significance::Worse => "-",
            Significance::None => "",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Significance::Better => "better",
            Significance::Worse => "worse",
            Significance::None => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTestResult {
    /// `+inf`/`-inf` on the degenerate path.
    pub t_stat: f64,
    pub df: f64,
    pub p_value: f64,
    pub significant: bool,
    /// Sign of `mean(a) - mean(b)`: `Better` means `a` is higher.
    pub direction: Significance,
    /// Zero spread with a nonzero mean difference: significant by convention.
    pub degenerate: bool,
}

impl TTestResult {
    /// `direction` if significant, otherwise `None`.
    pub fn significance(&self) -> Significance {
        if self.significant {
            self.direction
        } else {
            Significance::None
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Paired two-tailed t-test of `a` against `b` at level `alpha`.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTestResult> {
    t_test(a, b, &TTestConfig { alpha, ..Default::default() })
}

pub fn t_test(a: &[f64], b: &[f64], cfg: &TTestConfig) -> Result<TTestResult> {
    cfg.validate()?;
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Argument(format!(
            "a t-test needs at least 2 values per side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Argument("t-test inputs must be finite".into()));
    }
    let (diff, se2, df) = match cfg.pairing {
        Pairing::Paired => {
            if a.len() != b.len() {
                return Err(Error::shape(
                    format!("{} paired values", a.len()),
                    format!("{} paired values", b.len()),
                ));
            }
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let m = mean(&d);
            let n = d.len() as f64;
            (m, variance(&d, m) / n, n - 1.0)
        }
        Pairing::Independent => {
            let (ma, mb) = (mean(a), mean(b));
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let (qa, qb) = (variance(a, ma) / na, variance(b, mb) / nb);
            let se2 = qa + qb;
            let df = if se2 > 0.0 {
                se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
            } else {
                na + nb - 2.0
            };
            (ma - mb, se2, df)
        }
    };
    let direction = if diff > 0.0 {
        Significance::Better
    } else if diff < 0.0 {
        Significance::Worse
    } else {
        Significance::None
    };

    // Differences at the level of float round-off count as zero spread.
    let scale = a.iter().chain(b).fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    if se2.sqrt() <= 1e-12 * scale {
        let degenerate = diff.abs() > 1e-12 * scale;
        return Ok(TTestResult {
            t_stat: if degenerate { diff.signum() * f64::INFINITY } else { 0.0 },
            df,
            p_value: if degenerate { 0.0 } else { 1.0 },
            significant: degenerate,
            direction: if degenerate { direction } else { Significance::None },
            degenerate,
        });
    }
    let t = diff / se2.sqrt();
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Argument(format!("t distribution with {df} degrees of freedom: {e}")))?;
    let upper = dist.sf(t.abs());
    let p_value = match cfg.tails {
        Tails::Two => (2.0 * upper).min(1.0),
        Tails::One => upper,
    };
    Ok(TTestResult {
        t_stat: t,
        df,
        p_value,
        significant: p_value < cfg.alpha,
        direction,
        degenerate: false,
    })
}
