//! Synthetic participants with a known, planted context effect.
//!
//! Each day draws a category per feature (sociable with probability
//! `context_mix[feature]`), a sensor count consistent with that category, and
//! a latent 10-dimensional normal vector from the correlation model of the
//! planted feature's category. Latent values are cut at the standard-normal
//! quartiles into scores `0..=3`. EMAs are emitted only on report days.
//!
//! # Config file
//!
//! `ctxnet synth --config FILE` reads TOML with these keys (all optional
//! except the two latent models):
//!
//! ```toml
//! participant_id = "p01"
//! n_days = 300
//! start_date = "2024-01-01"
//! report_cadence = 3          # one EMA every 3rd day
//! planted_feature = "locations"
//! missing_sensor_rate = 0.0   # per feature-day
//! positive_count_p = 0.5      # sociable counts are 1 + Geometric(p)
//! seed = 7
//!
//! [context_mix]               # P(sociable) per feature, default 0.5
//! locations = 0.5
//! calls_made = 0.0
//!
//! [isolation]
//! means = [0, 0, 0, 0, 0, 0, 0, 0, 0, 0]    # latent shift, default 0
//! correlation = [[1, 0.6, ...], ...]        # 10x10, PSD, unit diagonal
//!
//! [sociability]
//! correlation = [[1, 0, ...], ...]
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::contexts::{Category, Feature};
use crate::error::{Error, Result};
use crate::ingest::{DailyRecord, EmaResponse, EmaSource, EmaVector, ParticipantDataset, SensorDay, EMA_ITEM_COUNT};
use crate::network::ItemSubset;

/// Standard-normal quartile boundaries; scores 0..=3 are equiprobable at zero mean.
pub const LIKERT_CUTS: [f64; 3] = [-0.674_489_750_196_081_7, 0.0, 0.674_489_750_196_081_7];

pub const DEFAULT_ORACLE_DRAWS: usize = 1_000_000;

const MAX_EXTRA_COUNT: u64 = 1_000;
const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModel {
    #[serde(default = "zero_means")]
    pub means: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
}

fn zero_means() -> Vec<f64> {
    vec![0.0; EMA_ITEM_COUNT]
}

impl LatentModel {
    pub fn independent() -> Self {
        Self::blocks(0.0, 0.0, 0.0)
    }

    /// Constant correlation within the positive items, within the negative
    /// items, and across the two groups.
    pub fn blocks(positive: f64, negative: f64, cross: f64) -> Self {
        let correlation = (0..EMA_ITEM_COUNT)
            .map(|i| {
                (0..EMA_ITEM_COUNT)
                    .map(|j| match (i == j, i < 5, j < 5) {
                        (true, _, _) => 1.0,
                        (false, true, true) => positive,
                        (false, false, false) => negative,
                        _ => cross,
                    })
                    .collect()
            })
            .collect();
        LatentModel { means: zero_means(), correlation }
    }

    /// Sets one symmetric pair.
    pub fn with_pair(mut self, i: usize, j: usize, r: f64) -> Self {
        self.correlation[i][j] = r;
        self.correlation[j][i] = r;
        self
    }

    /// Lower Cholesky factor, allowing semidefinite matrices.
    fn factor(&self) -> Result<Vec<[f64; EMA_ITEM_COUNT]>> {
        let n = EMA_ITEM_COUNT;
        let a = &self.correlation;
        if self.means.len() != n || a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig(format!("latent model needs {n} means and a {n}x{n} correlation matrix")));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidConfig("latent means must be finite".into()));
        }
        for i in 0..n {
            if a[i][i] != 1.0 {
                return Err(Error::InvalidConfig(format!("correlation diagonal ({i},{i}) must be 1")));
            }
            for j in 0..i {
                if (a[i][j] - a[j][i]).abs() > 1e-12 || !a[i][j].is_finite() {
                    return Err(Error::InvalidConfig(format!("correlation not symmetric at ({i},{j})")));
                }
            }
        }
        let mut l = vec![[0.0f64; EMA_ITEM_COUNT]; n];
        for j in 0..n {
            let d = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
            if d < -PSD_TOLERANCE {
                return Err(Error::InvalidConfig("correlation matrix is not positive semidefinite".into()));
            }
            let pivot = d.max(0.0).sqrt();
            l[j][j] = pivot;
            for i in j + 1..n {
                let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if pivot <= PSD_TOLERANCE {
                    if s.abs() > 1e-8 {
                        return Err(Error::InvalidConfig("correlation matrix is not positive semidefinite".into()));
                    }
                    l[i][j] = 0.0;
                } else {
                    l[i][j] = s / pivot;
                }
            }
        }
        Ok(l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default = "default_participant")]
    pub participant_id: String,
    pub n_days: usize,
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
    #[serde(default = "default_cadence")]
    pub report_cadence: usize,
    #[serde(default = "default_planted")]
    pub planted_feature: Feature,
    /// Probability a day is sociable, per feature; missing features use 0.5.
    #[serde(default)]
    pub context_mix: BTreeMap<Feature, f64>,
    #[serde(default)]
    pub missing_sensor_rate: f64,
    #[serde(default = "default_count_p")]
    pub positive_count_p: f64,
    pub isolation: LatentModel,
    pub sociability: LatentModel,
    #[serde(default)]
    pub seed: u64,
}

fn default_participant() -> String {
    "synthetic".into()
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date")
}

fn default_cadence() -> usize {
    3
}

fn default_planted() -> Feature {
    Feature::LocationsVisited
}

fn default_count_p() -> f64 {
    0.5
}

impl SynthConfig {
    /// Positive items intercorrelate at latent r = 0.6 on isolation days of
    /// the locations feature and are independent on sociable days.
    pub fn planted(n_days: usize, seed: u64) -> Self {
        SynthConfig {
            participant_id: default_participant(),
            n_days,
            start_date: default_start(),
            report_cadence: default_cadence(),
            planted_feature: Feature::LocationsVisited,
            context_mix: BTreeMap::new(),
            missing_sensor_rate: 0.0,
            positive_count_p: default_count_p(),
            isolation: LatentModel::blocks(0.6, 0.0, 0.0),
            sociability: LatentModel::independent(),
            seed,
        }
    }

    /// Same latent model in both categories: positive and negative items
    /// intercorrelate within their groups and anticorrelate across.
    pub fn null(n_days: usize, seed: u64) -> Self {
        let model = LatentModel::blocks(0.3, 0.3, -0.2);
        SynthConfig { isolation: model.clone(), sociability: model, ..Self::planted(n_days, seed) }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SynthConfig = toml::from_str(s).map_err(|e| Error::InvalidConfig(format!("synth config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("synth config serializes")
    }

    pub fn mix(&self, feature: Feature) -> f64 {
        self.context_mix.get(&feature).copied().unwrap_or(0.5)
    }

    pub fn model(&self, category: Category) -> &LatentModel {
        match category {
            Category::Isolation => &self.isolation,
            Category::Sociability => &self.sociability,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} = {p} is not a probability")))
            }
        };
        for f in Feature::ALL {
            prob(&format!("context_mix.{}", f.flag()), self.mix(f))?;
        }
        prob("missing_sensor_rate", self.missing_sensor_rate)?;
        if !(self.positive_count_p > 0.0 && self.positive_count_p <= 1.0) {
            return Err(Error::InvalidConfig("positive_count_p must be in (0, 1]".into()));
        }
        if self.report_cadence == 0 {
            return Err(Error::InvalidConfig("report_cadence must be at least 1".into()));
        }
        self.isolation.factor()?;
        self.sociability.factor()?;
        Ok(())
    }
}

fn discretize(z: f64) -> u8 {
    LIKERT_CUTS.iter().filter(|&&c| z > c).count() as u8
}

/// Draws one participant. Deterministic in `cfg.seed`.
pub fn generate(cfg: &SynthConfig) -> Result<ParticipantDataset> {
    cfg.validate()?;
    let factors = [cfg.isolation.factor()?, cfg.sociability.factor()?];
    let geometric =
        Geometric::new(cfg.positive_count_p).map_err(|e| Error::InvalidConfig(format!("positive_count_p: {e}")))?;
    let planted =
        Feature::ALL.iter().position(|f| *f == cfg.planted_feature).expect("planted feature is one of Feature::ALL");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut records = Vec::with_capacity(cfg.n_days);
    for day in 0..cfg.n_days {
        // Every draw happens every day, so the stream layout does not depend
        // on earlier outcomes.
        let mut counts = [None; 6];
        let mut sociable = [false; 6];
        for (k, feature) in Feature::ALL.iter().enumerate() {
            sociable[k] = rng.random_bool(cfg.mix(*feature));
            let extra = geometric.sample(&mut rng).min(MAX_EXTRA_COUNT) as u32;
            let missing = rng.random_bool(cfg.missing_sensor_rate);
            if !missing {
                counts[k] = Some(if sociable[k] { 1 + extra } else { 0 });
            }
        }
        let category = if sociable[planted] { Category::Sociability } else { Category::Isolation };
        let ci = category as usize;
        let model = cfg.model(category);
        let eps: [f64; EMA_ITEM_COUNT] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let scores: [u8; EMA_ITEM_COUNT] = std::array::from_fn(|i| {
            let z = model.means[i] + (0..=i).map(|k| factors[ci][i][k] * eps[k]).sum::<f64>();
            discretize(z)
        });

        let reported = (day + 1) % cfg.report_cadence == 0;
        records.push(DailyRecord {
            date: cfg
                .start_date
                .checked_add_days(Days::new(day as u64))
                .ok_or_else(|| Error::InvalidConfig("date range overflows".into()))?,
            ema: reported.then(|| EmaResponse {
                scores: EmaVector::new(scores).expect("discretized scores are in range"),
                source: EmaSource::Reported,
            }),
            sensors: SensorDay {
                locations_visited: counts[0],
                calls_made: counts[1],
                calls_received: counts[2],
                sms_sent: counts[3],
                sms_received: counts[4],
                conversations_detected: counts[5],
            },
        });
    }
    ParticipantDataset::new(cfg.participant_id.clone(), records)
}

/// Item correlations on the discretized scale, per category, estimated by
/// simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub isolation: Vec<Vec<f64>>,
    pub sociability: Vec<Vec<f64>>,
    pub draws: usize,
    pub oracle_seed: u64,
}

impl GroundTruth {
    pub fn matrix(&self, category: Category) -> &[Vec<f64>] {
        match category {
            Category::Isolation => &self.isolation,
            Category::Sociability => &self.sociability,
        }
    }

    /// Expected `connectivity(isolation) - connectivity(sociability)` for
    /// the subset, in the large-sample limit.
    pub fn connectivity_difference(&self, subset: ItemSubset) -> f64 {
        let idx: Vec<usize> = subset.items().iter().map(|i| i.index()).collect();
        let mut total = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                total += self.isolation[i][j] - self.sociability[i][j];
            }
        }
        total
    }
}

/// [`ground_truth_with`] using [`DEFAULT_ORACLE_DRAWS`] and a seed derived
/// from `cfg.seed`.
pub fn ground_truth(cfg: &SynthConfig) -> Result<GroundTruth> {
    ground_truth_with(cfg, DEFAULT_ORACLE_DRAWS, cfg.seed ^ 0x6f72_6163_6c65)
}

/// Simulates the latent-then-discretize pipeline for every item pair.
///
/// A pair's discretized correlation depends only on its bivariate latent
/// marginal, so each pair is simulated from two normals. All pairs share the
/// same random stream: pairs with identical parameters get identical
/// estimates, which makes unchanged pairs cancel exactly in differences.
pub fn ground_truth_with(cfg: &SynthConfig, draws: usize, oracle_seed: u64) -> Result<GroundTruth> {
    cfg.validate()?;
    if draws < 2 {
        return Err(Error::InvalidConfig("oracle needs at least 2 draws".into()));
    }
    let mut cache: HashMap<[u64; 3], f64> = HashMap::new();
    let mut estimate = |model: &LatentModel| -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; EMA_ITEM_COUNT]; EMA_ITEM_COUNT];
        for i in 0..EMA_ITEM_COUNT {
            m[i][i] = 1.0;
            for j in i + 1..EMA_ITEM_COUNT {
                let (r, mi, mj) = (model.correlation[i][j], model.means[i], model.means[j]);
                let key = [r.to_bits(), mi.to_bits(), mj.to_bits()];
                let v =
                    *cache.entry(key).or_insert_with(|| discretized_pair_correlation(r, mi, mj, draws, oracle_seed));
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    };
    let isolation = estimate(&cfg.isolation);
    let sociability = estimate(&cfg.sociability);
    Ok(GroundTruth { isolation, sociability, draws, oracle_seed })
}

fn discretized_pair_correlation(r: f64, mean_i: f64, mean_j: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tail = (1.0 - r * r).max(0.0).sqrt();
    let mut table = [[0u64; 4]; 4];
    for _ in 0..draws {
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let a = discretize(mean_i + e1);
        let b = discretize(mean_j + r * e1 + tail * e2);
        table[a as usize][b as usize] += 1;
    }
    let n = draws as f64;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, row) in table.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            let (c, a, b) = (c as f64, a as f64, b as f64);
            sa += c * a;
            sb += c * b;
            saa += c * a * a;
            sbb += c * b * b;
            sab += c * a * b;
        }
    }
    let cov = sab / n - (sa / n) * (sb / n);
    let va = saa / n - (sa / n).powi(2);
    let vb = sbb / n - (sb / n).powi(2);
    if va <= 0.0 || vb <= 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}
