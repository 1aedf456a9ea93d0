use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance used when deciding whether `H * K` sits exactly on the critical value 1/2.
const CRITICAL_TOL: f64 = 1e-12;

/// Centered Gaussian process families with `X_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GaussianSpec {
    Brownian,
    Fbm { hurst: f64 },
    /// Bifractional Brownian motion `B^{H,K}`.
    Bifractional { hurst: f64, k: f64 },
    /// `c` times a draw of `base`.
    Scaled { base: Box<GaussianSpec>, c: f64 },
    /// Sum of independent component draws.
    Mixed { components: Vec<GaussianSpec> },
}

impl GaussianSpec {
    pub fn fbm(hurst: f64) -> Self {
        GaussianSpec::Fbm { hurst }
    }

    pub fn bifractional(hurst: f64, k: f64) -> Self {
        GaussianSpec::Bifractional { hurst, k }
    }

    pub fn scaled(base: GaussianSpec, c: f64) -> Self {
        GaussianSpec::Scaled { base: Box::new(base), c }
    }

    pub fn mixed(components: Vec<GaussianSpec>) -> Self {
        GaussianSpec::Mixed { components }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GaussianSpec::Brownian => Ok(()),
            GaussianSpec::Fbm { hurst } => check_hurst(*hurst),
            GaussianSpec::Bifractional { hurst, k } => {
                check_hurst(*hurst)?;
                if !(k.is_finite() && *k > 0.0 && *k <= 1.0) {
                    return Err(invalid(format!("bifractional K must lie in (0,1], got {k}")));
                }
                Ok(())
            }
            GaussianSpec::Scaled { base, c } => {
                if !c.is_finite() {
                    return Err(invalid("scale must be finite"));
                }
                base.validate()
            }
            GaussianSpec::Mixed { components } => {
                if components.is_empty() {
                    return Err(invalid("mixed spec needs at least one component"));
                }
                components.iter().try_for_each(GaussianSpec::validate)
            }
        }
    }

    /// Covariance `E[X_s X_t]` for `s, t >= 0`.
    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        match self {
            GaussianSpec::Brownian => s.min(t),
            GaussianSpec::Fbm { hurst } => {
                let h2 = 2.0 * hurst;
                0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
            }
            GaussianSpec::Bifractional { hurst, k } => {
                let h2 = 2.0 * hurst;
                2f64.powf(-k) * ((s.powf(h2) + t.powf(h2)).powf(*k) - (t - s).abs().powf(h2 * k))
            }
            GaussianSpec::Scaled { base, c } => c * c * base.covariance(s, t),
            GaussianSpec::Mixed { components } => components.iter().map(|c| c.covariance(s, t)).sum(),
        }
    }

    /// Rate `c` such that `[X]_t = c t`, when the family has finite quadratic variation.
    ///
    /// Independent components have zero mutual brackets, so rates of a mixture add.
    pub fn known_qv_rate(&self) -> Option<f64> {
        match self {
            GaussianSpec::Brownian => Some(1.0),
            GaussianSpec::Fbm { hurst } => {
                if (hurst - 0.5).abs() < CRITICAL_TOL {
                    Some(1.0)
                } else if *hurst > 0.5 {
                    Some(0.0)
                } else {
                    None
                }
            }
            GaussianSpec::Bifractional { hurst, k } => {
                let hk = hurst * k;
                if (hk - 0.5).abs() < CRITICAL_TOL {
                    Some(2f64.powf(1.0 - k))
                } else if hk > 0.5 {
                    Some(0.0)
                } else {
                    None
                }
            }
            GaussianSpec::Scaled { base, c } => base.known_qv_rate().map(|r| c * c * r),
            GaussianSpec::Mixed { components } => components.iter().map(GaussianSpec::known_qv_rate).sum(),
        }
    }

    pub(crate) fn is_atomic(&self) -> bool {
        matches!(
            self,
            GaussianSpec::Brownian | GaussianSpec::Fbm { .. } | GaussianSpec::Bifractional { .. }
        )
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("Hurst parameter must lie in (0,1), got {h}")))
    }
}

impl fmt::Display for GaussianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaussianSpec::Brownian => write!(f, "brownian"),
            GaussianSpec::Fbm { hurst } => write!(f, "fbm:{hurst}"),
            GaussianSpec::Bifractional { hurst, k } => write!(f, "bifractional:{hurst}:{k}"),
            GaussianSpec::Scaled { base, c } => write!(f, "scaled:{c}:{base}"),
            GaussianSpec::Mixed { components } => {
                write!(f, "mixed:")?;
                for (i, c) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses the textual form used by [`Display`]: `brownian`, `fbm:H`,
/// `bifractional:H:K`, `scaled:C:<spec>`, `mixed:<spec>,<spec>,...`.
impl FromStr for GaussianSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |v: &str| -> Result<f64> {
            parse_number(v).ok_or_else(|| invalid(format!("bad number '{v}' in process spec '{s}'")))
        };
        let spec = if s == "brownian" {
            GaussianSpec::Brownian
        } else if let Some(rest) = s.strip_prefix("mixed:") {
            let components = rest.split(',').map(str::parse).collect::<Result<Vec<_>>>()?;
            GaussianSpec::Mixed { components }
        } else if let Some(rest) = s.strip_prefix("scaled:") {
            let (c, base) = rest
                .split_once(':')
                .ok_or_else(|| invalid(format!("expected scaled:C:<spec>, got '{s}'")))?;
            GaussianSpec::scaled(base.parse()?, num(c)?)
        } else if let Some(rest) = s.strip_prefix("fbm:") {
            GaussianSpec::fbm(num(rest)?)
        } else if let Some(rest) = s.strip_prefix("bifractional:") {
            let (h, k) = rest
                .split_once(':')
                .ok_or_else(|| invalid(format!("expected bifractional:H:K, got '{s}'")))?;
            GaussianSpec::bifractional(num(h)?, num(k)?)
        } else {
            return Err(invalid(format!("unknown process family '{s}'")));
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Accepts plain decimals and simple fractions such as `5/6`.
pub(crate) fn parse_number(v: &str) -> Option<f64> {
    let v = v.trim();
    match v.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().ok()?;
            let b: f64 = b.trim().parse().ok()?;
            (b != 0.0).then(|| a / b)
        }
        None => v.parse().ok(),
    }
}
