use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Size of each initial tri-training sample relative to `x = |D|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleSize {
    /// `x`
    Full,
    /// `2x`
    Double,
    /// `⌊x/2⌋`
    Half,
    /// `⌊x/3⌋`, the three samples being disjoint slices of one permutation.
    ThirdDisjoint,
}

/// How the three tri-training models draw their initial training samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SamplingStrategy {
    size: SampleSize,
    with_replacement: bool,
}

impl Default for SamplingStrategy {
    /// `x` without replacement: every model starts from all of D.
    fn default() -> Self {
        Self {
            size: SampleSize::Full,
            with_replacement: false,
        }
    }
}

impl SamplingStrategy {
    pub fn new(size: SampleSize, with_replacement: bool) -> Result<Self> {
        match (size, with_replacement) {
            (SampleSize::Double, false) => Err(Error::Config(
                "cannot draw 2x samples from x items without replacement".into(),
            )),
            (SampleSize::ThirdDisjoint, true) => Err(Error::Config(
                "disjoint thirds are drawn without replacement".into(),
            )),
            _ => Ok(Self {
                size,
                with_replacement,
            }),
        }
    }

    pub fn size(&self) -> SampleSize {
        self.size
    }

    pub fn with_replacement(&self) -> bool {
        self.with_replacement
    }

    /// The five strategies compared for tri-training, in table order.
    pub fn table_rows() -> [SamplingStrategy; 5] {
        [
            Self { size: SampleSize::Full, with_replacement: false },
            Self { size: SampleSize::Double, with_replacement: true },
            Self { size: SampleSize::Full, with_replacement: true },
            Self { size: SampleSize::Half, with_replacement: true },
            Self { size: SampleSize::ThirdDisjoint, with_replacement: false },
        ]
    }

    pub fn sample_len(&self, x: usize) -> usize {
        match self.size {
            SampleSize::Full => x,
            SampleSize::Double => 2 * x,
            SampleSize::Half => x / 2,
            SampleSize::ThirdDisjoint => x / 3,
        }
    }
}

impl fmt::Display for SamplingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let size = match self.size {
            SampleSize::Full => "x",
            SampleSize::Double => "2x",
            SampleSize::Half => "x/2",
            SampleSize::ThirdDisjoint => return f.write_str("x/3-disjoint"),
        };
        let repl = if self.with_replacement { "rep" } else { "norep" };
        write!(f, "{size}-{repl}")
    }
}

impl FromStr for SamplingStrategy {
    type Err = Error;

    /// Accepts `x-norep`, `2x-rep`, `x-rep`, `x/2-rep`, `x/2-norep`, `x/3-disjoint`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "x/3-disjoint" {
            return Self::new(SampleSize::ThirdDisjoint, false);
        }
        let (size, repl) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::Config(format!("unknown sampling strategy `{s}`")))?;
        let size = match size {
            "x" => SampleSize::Full,
            "2x" => SampleSize::Double,
            "x/2" => SampleSize::Half,
            _ => return Err(Error::Config(format!("unknown sample size in `{s}`"))),
        };
        let with_replacement = match repl {
            "rep" => true,
            "norep" => false,
            _ => return Err(Error::Config(format!("expected `rep` or `norep` in `{s}`"))),
        };
        Self::new(size, with_replacement)
    }
}

impl TryFrom<String> for SamplingStrategy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SamplingStrategy> for String {
    fn from(s: SamplingStrategy) -> String {
        s.to_string()
    }
}

/// Initial training sample for tri-training model `slot` (0, 1 or 2).
///
/// All three slots must be drawn from the same `rng`: disjoint thirds slice
/// one shared permutation of D, and the other modes use a per-slot child
/// stream. The result is sorted (it is a multiset when drawing with
/// replacement).
pub fn bootstrap_sample(
    labeled_idx: &[usize],
    strategy: SamplingStrategy,
    slot: usize,
    rng: &Rng,
) -> Result<Vec<usize>> {
    let x = labeled_idx.len();
    if slot > 2 {
        return Err(Error::Argument(format!("model slot must be 0..=2, got {slot}")));
    }
    if x < 3 {
        return Err(Error::Argument(format!(
            "bootstrap sampling needs at least 3 labeled samples, got {x}"
        )));
    }
    if matches!(strategy.size, SampleSize::Half | SampleSize::ThirdDisjoint) && x < 6 {
        return Err(Error::Argument(format!(
            "{strategy} sampling of {x} labeled samples gives degenerate subsets (need at least 6)"
        )));
    }
    let len = strategy.sample_len(x);
    let mut out = match strategy.size {
        SampleSize::ThirdDisjoint => {
            let perm = rng.child(0).permutation(x);
            perm[slot * len..(slot + 1) * len]
                .iter()
                .map(|&p| labeled_idx[p])
                .collect()
        }
        _ => {
            let mut r = rng.child(1 + slot as u64);
            if strategy.with_replacement {
                (0..len).map(|_| labeled_idx[r.below(x)]).collect()
            } else {
                let perm = r.permutation(x);
                perm[..len].iter().map(|&p| labeled_idx[p]).collect::<Vec<_>>()
            }
        }
    };
    out.sort_unstable();
    Ok(out)
}
