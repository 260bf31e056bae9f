//! Sensor-defined behavioral contexts and the split of a participant's days
//! into social-isolation and sociability pools.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ingest::{ParticipantDataset, SensorDay};

/// A daily sensor count that defines a context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    #[serde(rename = "locations")]
    LocationsVisited,
    #[serde(rename = "calls_made")]
    CallsMade,
    #[serde(rename = "calls_received")]
    CallsReceived,
    #[serde(rename = "sms_sent")]
    SmsSent,
    #[serde(rename = "sms_received")]
    SmsReceived,
    #[serde(rename = "conversations")]
    ConversationsDetected,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::LocationsVisited,
        Feature::CallsMade,
        Feature::CallsReceived,
        Feature::SmsSent,
        Feature::SmsReceived,
        Feature::ConversationsDetected,
    ];

    /// Command-line flag value.
    pub fn flag(self) -> &'static str {
        match self {
            Feature::LocationsVisited => "locations",
            Feature::CallsMade => "calls_made",
            Feature::CallsReceived => "calls_received",
            Feature::SmsSent => "sms_sent",
            Feature::SmsReceived => "sms_received",
            Feature::ConversationsDetected => "conversations",
        }
    }

    /// Column heading used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Feature::LocationsVisited => "Daily Number of Locations Visited",
            Feature::CallsMade => "Daily Number of Calls Made",
            Feature::CallsReceived => "Daily Number of Calls Received",
            Feature::SmsSent => "Daily Number of SMS Sent",
            Feature::SmsReceived => "Daily Number of SMS Received",
            Feature::ConversationsDetected => "Daily Number of Conversations",
        }
    }

    pub fn count(self, sensors: &SensorDay) -> Option<u32> {
        match self {
            Feature::LocationsVisited => sensors.locations_visited,
            Feature::CallsMade => sensors.calls_made,
            Feature::CallsReceived => sensors.calls_received,
            Feature::SmsSent => sensors.sms_sent,
            Feature::SmsReceived => sensors.sms_received,
            Feature::ConversationsDetected => sensors.conversations_detected,
        }
    }
}

/// Either a sensor-filtered context or the random unfiltered baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Context {
    Baseline,
    Feature(Feature),
}

impl Context {
    pub const ALL_FEATURES: [Context; 6] = [
        Context::Feature(Feature::LocationsVisited),
        Context::Feature(Feature::CallsMade),
        Context::Feature(Feature::CallsReceived),
        Context::Feature(Feature::SmsSent),
        Context::Feature(Feature::SmsReceived),
        Context::Feature(Feature::ConversationsDetected),
    ];

    pub fn flag(self) -> &'static str {
        match self {
            Context::Baseline => "baseline",
            Context::Feature(f) => f.flag(),
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Context::Baseline => "Baseline",
            Context::Feature(f) => f.title(),
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag())
    }
}

impl FromStr for Context {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "baseline" {
            return Ok(Context::Baseline);
        }
        Feature::ALL
            .iter()
            .find(|f| f.flag() == s)
            .map(|f| Context::Feature(*f))
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown context `{s}` (expected locations|calls_made|calls_received|sms_sent|sms_received|conversations|baseline)"
                ))
            })
    }
}

impl Serialize for Context {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.flag())
    }
}

pub(crate) fn serialize_display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Isolation,
    Sociability,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Isolation => "isolation",
            Category::Sociability => "sociability",
        })
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isolation" => Ok(Category::Isolation),
            "sociability" => Ok(Category::Sociability),
            _ => Err(Error::InvalidConfig(format!("unknown category `{s}` (expected isolation|sociability)"))),
        }
    }
}

/// Inclusive count interval; `max = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: u32,
    pub max: Option<u32>,
}

impl CountRange {
    pub const fn exactly(n: u32) -> Self {
        CountRange { min: n, max: Some(n) }
    }

    pub const fn at_least(n: u32) -> Self {
        CountRange { min: n, max: None }
    }

    pub fn contains(&self, count: u32) -> bool {
        count >= self.min && self.max.is_none_or(|m| count <= m)
    }
}

/// A feature plus the count predicates of its two categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContextSpec {
    pub feature: Feature,
    pub isolation: CountRange,
    pub sociability: CountRange,
}

impl ContextSpec {
    /// Zero counts are isolation, one or more sociability.
    pub fn standard(feature: Feature) -> Self {
        ContextSpec { feature, isolation: CountRange::exactly(0), sociability: CountRange::at_least(1) }
    }

    /// Custom cutoffs. The two ranges must partition the non-negative counts.
    pub fn with_ranges(feature: Feature, isolation: CountRange, sociability: CountRange) -> Result<Self> {
        let (low, high) =
            if isolation.min <= sociability.min { (isolation, sociability) } else { (sociability, isolation) };
        let partitions =
            low.min == 0 && high.max.is_none() && low.max.is_some_and(|m| m.checked_add(1) == Some(high.min));
        if !partitions {
            return Err(Error::InvalidConfig(format!(
                "count ranges {isolation:?} and {sociability:?} do not partition the counts"
            )));
        }
        Ok(ContextSpec { feature, isolation, sociability })
    }

    pub fn category_of(&self, count: u32) -> Category {
        if self.isolation.contains(count) {
            Category::Isolation
        } else {
            debug_assert!(self.sociability.contains(count));
            Category::Sociability
        }
    }
}

/// Dates of a dataset split by category. Excluded days either lack an EMA or
/// lack a measurement of the feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryPools {
    pub feature: Feature,
    pub isolation: Vec<NaiveDate>,
    pub sociability: Vec<NaiveDate>,
    pub excluded: Vec<NaiveDate>,
}

impl CategoryPools {
    pub fn get(&self, category: Category) -> &[NaiveDate] {
        match category {
            Category::Isolation => &self.isolation,
            Category::Sociability => &self.sociability,
        }
    }
}

pub fn categorize(ds: &ParticipantDataset, spec: &ContextSpec) -> CategoryPools {
    let mut pools =
        CategoryPools { feature: spec.feature, isolation: Vec::new(), sociability: Vec::new(), excluded: Vec::new() };
    for rec in ds.records() {
        let count = spec.feature.count(&rec.sensors);
        match (rec.ema.is_some(), count) {
            (true, Some(c)) => match spec.category_of(c) {
                Category::Isolation => pools.isolation.push(rec.date),
                Category::Sociability => pools.sociability.push(rec.date),
            },
            _ => pools.excluded.push(rec.date),
        }
    }
    pools
}

/// Every EMA-bearing day, regardless of sensor data.
pub fn baseline_pool(ds: &ParticipantDataset) -> Vec<NaiveDate> {
    ds.records().iter().filter(|r| r.ema.is_some()).map(|r| r.date).collect()
}
