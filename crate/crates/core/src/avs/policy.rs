//! Redundancy-filter and aggregation policies with their flag grammar:
//! `small:0.1 | disable | top32:32 | single:5` and `product | last | diff:5`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_TOP_COUNT: usize = 32;
pub const DEFAULT_MIN_SEP_DEG: f64 = 5.0;
pub const DEFAULT_DIFF_RADIUS_DEG: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FilterPolicy {
    /// Kill a candidate whose interpolated value fell below `threshold` at
    /// any step.
    SmallThreshold { threshold: f64 },
    Disable,
    /// Kill a candidate ranked among the `count` lowest at any step.
    Top32 { count: usize },
    /// Kill a candidate closer than `min_sep_deg` to any selected view.
    SingleAngular { min_sep_deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AggregatePolicy {
    ProductAll,
    LastOnly,
    /// Current value minus the mean of the current map on a ring of
    /// `radius_deg` around the candidate.
    NeighborDiff { radius_deg: f64 },
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy::SmallThreshold { threshold: DEFAULT_THRESHOLD }
    }
}

impl Default for AggregatePolicy {
    fn default() -> Self {
        AggregatePolicy::ProductAll
    }
}

impl FilterPolicy {
    /// Every ablation variant at its default parameter.
    pub const GRID: [FilterPolicy; 4] = [
        FilterPolicy::SmallThreshold { threshold: DEFAULT_THRESHOLD },
        FilterPolicy::Disable,
        FilterPolicy::Top32 { count: DEFAULT_TOP_COUNT },
        FilterPolicy::SingleAngular { min_sep_deg: DEFAULT_MIN_SEP_DEG },
    ];

    pub fn validate(self) -> Result<Self> {
        let ok = match self {
            FilterPolicy::SmallThreshold { threshold } => threshold > 0.0 && threshold < 1.0,
            FilterPolicy::Disable => true,
            FilterPolicy::Top32 { count } => count >= 1,
            FilterPolicy::SingleAngular { min_sep_deg } => min_sep_deg > 0.0 && min_sep_deg.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidArgument(format!("filter parameter out of range in `{self}`")))
        }
    }
}

impl AggregatePolicy {
    pub const GRID: [AggregatePolicy; 3] = [
        AggregatePolicy::ProductAll,
        AggregatePolicy::LastOnly,
        AggregatePolicy::NeighborDiff { radius_deg: DEFAULT_DIFF_RADIUS_DEG },
    ];

    pub fn validate(self) -> Result<Self> {
        match self {
            AggregatePolicy::NeighborDiff { radius_deg } if !(radius_deg > 0.0 && radius_deg < 180.0) => {
                Err(Error::InvalidArgument(format!("diff radius must be in (0, 180) degrees, got {radius_deg}")))
            }
            _ => Ok(self),
        }
    }
}

fn split_param(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((name, p)) => (name.trim(), Some(p.trim())),
        None => (s.trim(), None),
    }
}

fn parse_param<T: FromStr>(p: Option<&str>, default: T, spec: &str) -> Result<T> {
    match p {
        None => Ok(default),
        Some(p) => p
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad parameter `{p}` in `{spec}`"))),
    }
}

impl FromStr for FilterPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = split_param(s);
        let policy = match name {
            "small" => FilterPolicy::SmallThreshold { threshold: parse_param(p, DEFAULT_THRESHOLD, s)? },
            "disable" if p.is_none() => FilterPolicy::Disable,
            "top32" => FilterPolicy::Top32 { count: parse_param(p, DEFAULT_TOP_COUNT, s)? },
            "single" => FilterPolicy::SingleAngular { min_sep_deg: parse_param(p, DEFAULT_MIN_SEP_DEG, s)? },
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown filter `{s}` (expected small[:t], disable, top32[:n] or single[:deg])"
                )))
            }
        };
        policy.validate()
    }
}

impl FromStr for AggregatePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = split_param(s);
        let policy = match (name, p) {
            ("product", None) => AggregatePolicy::ProductAll,
            ("last", None) => AggregatePolicy::LastOnly,
            ("diff", p) => AggregatePolicy::NeighborDiff { radius_deg: parse_param(p, DEFAULT_DIFF_RADIUS_DEG, s)? },
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown aggregation `{s}` (expected product, last or diff[:deg])"
                )))
            }
        };
        policy.validate()
    }
}

impl fmt::Display for FilterPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterPolicy::SmallThreshold { threshold } => write!(f, "small:{threshold}"),
            FilterPolicy::Disable => f.write_str("disable"),
            FilterPolicy::Top32 { count } => write!(f, "top32:{count}"),
            FilterPolicy::SingleAngular { min_sep_deg } => write!(f, "single:{min_sep_deg}"),
        }
    }
}

impl fmt::Display for AggregatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregatePolicy::ProductAll => f.write_str("product"),
            AggregatePolicy::LastOnly => f.write_str("last"),
            AggregatePolicy::NeighborDiff { radius_deg } => write!(f, "diff:{radius_deg}"),
        }
    }
}

macro_rules! string_conversions {
    ($t:ty) => {
        impl TryFrom<String> for $t {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }

        impl From<$t> for String {
            fn from(p: $t) -> String {
                p.to_string()
            }
        }
    };
}

string_conversions!(FilterPolicy);
string_conversions!(AggregatePolicy);
