use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthPattern {
    Equal,
    Higher,
    Lower,
    Explicit,
}

impl FromStr for GrowthPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "equal" => Ok(GrowthPattern::Equal),
            "higher" => Ok(GrowthPattern::Higher),
            "lower" => Ok(GrowthPattern::Lower),
            "explicit" => Ok(GrowthPattern::Explicit),
            _ => Err(Error::Schedule(format!(
                "unknown growth pattern `{s}` (expected equal, higher, lower or explicit)"
            ))),
        }
    }
}

impl fmt::Display for GrowthPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthPattern::Equal => "equal",
            GrowthPattern::Higher => "higher",
            GrowthPattern::Lower => "lower",
            GrowthPattern::Explicit => "explicit",
        })
    }
}

/// Per-time increment sizes.
///
/// `Higher` doubles a unit size each step and puts what is left in the last
/// step; the unit is `n / (2^steps - 1)` truncated to two significant digits,
/// so 310,116 triples give 10k, 20k, 40k, 80k, 160,116. `Lower` uses the same
/// unit in reverse order, again with the remainder last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthSchedule {
    pub pattern: GrowthPattern,
    pub steps: usize,
    /// Only used by `Explicit`.
    pub sizes: Vec<usize>,
}

impl GrowthSchedule {
    pub fn new(pattern: GrowthPattern, steps: usize) -> Self {
        GrowthSchedule {
            pattern,
            steps,
            sizes: Vec::new(),
        }
    }

    pub fn explicit(sizes: Vec<usize>) -> Self {
        GrowthSchedule {
            pattern: GrowthPattern::Explicit,
            steps: sizes.len(),
            sizes,
        }
    }

    /// Sizes for a base KG of `total` triples.
    pub fn sizes(&self, total: usize) -> Result<Vec<usize>> {
        let s = self.steps;
        if s == 0 {
            return Err(Error::Schedule("schedule needs at least one step".into()));
        }
        if total < s {
            return Err(Error::Schedule(format!("{total} triples cannot fill {s} steps")));
        }
        let sizes = match self.pattern {
            GrowthPattern::Equal => {
                let unit = total / s;
                let mut v = vec![unit; s];
                v[s - 1] += total - unit * s;
                v
            }
            GrowthPattern::Higher | GrowthPattern::Lower => {
                if s > 40 {
                    return Err(Error::Schedule(format!("{s} doubling steps is too many")));
                }
                let unit = two_significant_digits(total / ((1usize << s) - 1));
                if unit == 0 {
                    return Err(Error::Schedule(format!(
                        "{total} triples are too few for a {s}-step doubling schedule"
                    )));
                }
                let mut v: Vec<usize> = (0..s - 1).map(|i| unit << i).collect();
                if self.pattern == GrowthPattern::Lower {
                    v = (0..s - 1).map(|i| unit << (s - 1 - i)).collect();
                }
                let used: usize = v.iter().sum();
                if used >= total {
                    return Err(Error::Schedule(format!(
                        "{total} triples leave nothing for the last step"
                    )));
                }
                v.push(total - used);
                v
            }
            GrowthPattern::Explicit => {
                if self.sizes.len() != s {
                    return Err(Error::Schedule(format!(
                        "explicit schedule lists {} sizes for {s} steps",
                        self.sizes.len()
                    )));
                }
                let sum: usize = self.sizes.iter().sum();
                if sum != total {
                    return Err(Error::Schedule(format!(
                        "explicit sizes sum to {sum}, base KG has {total} triples"
                    )));
                }
                self.sizes.clone()
            }
        };
        if sizes.contains(&0) {
            return Err(Error::Schedule(format!("schedule {sizes:?} has an empty step")));
        }
        Ok(sizes)
    }
}

fn two_significant_digits(n: usize) -> usize {
    let mut scale = 1;
    while n / scale >= 100 {
        scale *= 10;
    }
    n / scale * scale
}
