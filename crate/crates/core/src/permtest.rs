//! Permutation engine: repeated fixed-size sampling of category pools,
//! connectivity differences, the random-sampling baseline, and the paired
//! t-test that compares a context distribution against the baseline.
//!
//! # Reproducibility
//!
//! Runs are keyed by a [`StreamSeed`] derived from the master seed and the
//! context label (`"baseline"`, `"locations"`, ...). Iteration `i` draws from
//! a ChaCha8 generator seeded with the run seed and switched to stream `i`,
//! so iterations can execute in any order or in parallel and still produce
//! the same list of differences.

use chrono::NaiveDate;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::contexts::{Category, CategoryPools, Context};
use crate::error::{Error, PoolKind, Result};
use crate::ingest::{EmaVector, ParticipantDataset};
use crate::network::{connectivity_difference, pearson_network, ItemSubset};
use crate::stats::{mean, sample_std, t_sf};

pub const DEFAULT_PERMUTATIONS: usize = 2000;
pub const DEFAULT_SAMPLE_SIZE: usize = 25;
/// Smallest p-value kept in output; anything below is written as 0.
pub const P_VALUE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sampling {
    /// Days within one sample are distinct; each iteration draws afresh.
    #[serde(rename = "without-replacement-within-permutation")]
    WithoutReplacementWithinPermutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PermutationConfig {
    pub n_permutations: usize,
    pub sample_size: usize,
    pub subset: ItemSubset,
    pub seed: u64,
    pub sampling: Sampling,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig {
            n_permutations: DEFAULT_PERMUTATIONS,
            sample_size: DEFAULT_SAMPLE_SIZE,
            subset: ItemSubset::All,
            seed: 0,
            sampling: Sampling::WithoutReplacementWithinPermutation,
        }
    }
}

impl PermutationConfig {
    pub fn new(n_permutations: usize, sample_size: usize, subset: ItemSubset, seed: u64) -> Result<Self> {
        let cfg = PermutationConfig {
            n_permutations,
            sample_size,
            subset,
            seed,
            sampling: Sampling::WithoutReplacementWithinPermutation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_permutations < 1 {
            return Err(Error::InvalidConfig("n_permutations must be at least 1".into()));
        }
        if self.sample_size < 2 {
            return Err(Error::InvalidConfig("sample_size must be at least 2".into()));
        }
        Ok(())
    }
}

/// Seed of one permutation run, split into one ChaCha stream per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct StreamSeed(u64);

impl StreamSeed {
    pub fn new(seed: u64) -> Self {
        StreamSeed(seed)
    }

    /// Child seed for a context run: SplitMix64 finalizer applied to
    /// `master XOR fnv1a64(label)`.
    pub fn derive(master: u64, label: &str) -> Self {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        StreamSeed(splitmix64(master ^ h))
    }

    /// Seed for `ctx` under the run's master seed.
    pub fn for_context(master: u64, ctx: Context) -> Self {
        Self::derive(master, ctx.flag())
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn iteration_rng(self, iteration: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(iteration);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub std: f64,
}

impl SummaryStats {
    pub fn of(xs: &[f64]) -> Self {
        SummaryStats { mean: mean(xs), std: sample_std(xs) }
    }
}

/// Days drawn in one iteration: `first` feeds the minuend network
/// (isolation, or the first baseline half), `second` the subtrahend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IterationSample {
    pub first: Vec<NaiveDate>,
    pub second: Vec<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermutationRun {
    pub context: Context,
    pub config: PermutationConfig,
    pub stream_seed: StreamSeed,
    pub differences: Vec<f64>,
    pub stats: SummaryStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<IterationSample>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep the dates drawn in every iteration.
    pub record_samples: bool,
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { record_samples: false, parallel: true }
    }
}

/// Pool of days resolved to their EMA vectors once, up front.
struct ResolvedPool<'a> {
    dates: &'a [NaiveDate],
    emas: Vec<EmaVector>,
}

impl<'a> ResolvedPool<'a> {
    fn new(ds: &ParticipantDataset, dates: &'a [NaiveDate]) -> Result<Self> {
        Ok(ResolvedPool { dates, emas: ds.ema_for(dates)? })
    }

    fn pick(&self, idx: &[usize]) -> Vec<EmaVector> {
        idx.iter().map(|&i| self.emas[i]).collect()
    }

    fn dates_of(&self, idx: &[usize]) -> Vec<NaiveDate> {
        let mut d: Vec<NaiveDate> = idx.iter().map(|&i| self.dates[i]).collect();
        d.sort_unstable();
        d
    }
}

/// `k` distinct indices below `len`, ascending. Networks are then a function
/// of the drawn set alone, bit for bit.
fn draw_sorted(rng: &mut ChaCha8Rng, len: usize, k: usize) -> Vec<usize> {
    let mut idx = index::sample(rng, len, k).into_vec();
    idx.sort_unstable();
    idx
}

fn run_iterations<F>(n: usize, parallel: bool, f: F) -> Result<Vec<(f64, Option<IterationSample>)>>
where
    F: Fn(u64) -> Result<(f64, Option<IterationSample>)> + Sync,
{
    if parallel {
        (0..n as u64).into_par_iter().map(&f).collect()
    } else {
        (0..n as u64).map(&f).collect()
    }
}

fn assemble(
    context: Context,
    cfg: &PermutationConfig,
    stream_seed: StreamSeed,
    results: Vec<(f64, Option<IterationSample>)>,
    record: bool,
) -> PermutationRun {
    let (differences, samples): (Vec<f64>, Vec<Option<IterationSample>>) = results.into_iter().unzip();
    PermutationRun {
        context,
        config: *cfg,
        stream_seed,
        stats: SummaryStats::of(&differences),
        differences,
        samples: record.then(|| samples.into_iter().flatten().collect()),
    }
}

/// Per iteration: `sample_size` distinct days from each category pool, one
/// network per sample, and `connectivity(isolation) - connectivity(sociability)`.
pub fn run_context_permutation(
    ds: &ParticipantDataset,
    pools: &CategoryPools,
    cfg: &PermutationConfig,
    seed: StreamSeed,
    opts: RunOptions,
) -> Result<PermutationRun> {
    cfg.validate()?;
    let k = cfg.sample_size;
    for cat in [Category::Isolation, Category::Sociability] {
        let have = pools.get(cat).len();
        if have < k {
            return Err(Error::InsufficientPool { category: PoolKind::Category(cat), have, need: k });
        }
    }
    let iso = ResolvedPool::new(ds, &pools.isolation)?;
    let soc = ResolvedPool::new(ds, &pools.sociability)?;

    let results = run_iterations(cfg.n_permutations, opts.parallel, |i| {
        let mut rng = seed.iteration_rng(i);
        let a = draw_sorted(&mut rng, iso.emas.len(), k);
        let b = draw_sorted(&mut rng, soc.emas.len(), k);
        let net_a = pearson_network(&iso.pick(&a), cfg.subset)?;
        let net_b = pearson_network(&soc.pick(&b), cfg.subset)?;
        let diff = connectivity_difference(&net_a, &net_b)?;
        let sample = opts.record_samples.then(|| IterationSample { first: iso.dates_of(&a), second: soc.dates_of(&b) });
        Ok((diff, sample))
    })?;
    Ok(assemble(Context::Feature(pools.feature), cfg, seed, results, opts.record_samples))
}

/// Per iteration: `2 * sample_size` distinct days from the unfiltered pool,
/// split into halves, and `connectivity(first) - connectivity(second)`.
pub fn run_baseline_permutation(
    ds: &ParticipantDataset,
    pool: &[NaiveDate],
    cfg: &PermutationConfig,
    seed: StreamSeed,
    opts: RunOptions,
) -> Result<PermutationRun> {
    cfg.validate()?;
    let k = cfg.sample_size;
    if pool.len() < 2 * k {
        return Err(Error::InsufficientPool { category: PoolKind::Baseline, have: pool.len(), need: 2 * k });
    }
    let resolved = ResolvedPool::new(ds, pool)?;

    let results = run_iterations(cfg.n_permutations, opts.parallel, |i| {
        let mut rng = seed.iteration_rng(i);
        let mut b = index::sample(&mut rng, resolved.emas.len(), 2 * k).into_vec();
        let mut a: Vec<usize> = b.drain(..k).collect();
        a.sort_unstable();
        b.sort_unstable();
        let net_a = pearson_network(&resolved.pick(&a), cfg.subset)?;
        let net_b = pearson_network(&resolved.pick(&b), cfg.subset)?;
        let diff = connectivity_difference(&net_a, &net_b)?;
        let sample = opts
            .record_samples
            .then(|| IterationSample { first: resolved.dates_of(&a), second: resolved.dates_of(&b) });
        Ok((diff, sample))
    })?;
    Ok(assemble(Context::Baseline, cfg, seed, results, opts.record_samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_diff: f64,
    pub std_diff: f64,
    pub t: f64,
    pub df: usize,
    #[serde(serialize_with = "serialize_p")]
    pub p_value: f64,
}

fn serialize_p<S: Serializer>(p: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(if *p < P_VALUE_FLOOR { 0.0 } else { *p })
}

/// Paired-sample t-test on `d_i = xs_i - ys_i`, two-sided.
///
/// A zero standard deviation of the differences gives `t = 0, p = 1` when the
/// mean difference is also zero, and `t = ±inf, p = 0` otherwise.
pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<PairedTTest> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData { have: n, need: 2 });
    }
    let d: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    let mean_diff = mean(&d);
    let std_diff = sample_std(&d);
    let df = n - 1;
    let (t, p_value) = if std_diff == 0.0 {
        if mean_diff == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean_diff), 0.0)
        }
    } else {
        let t = mean_diff / (std_diff / (n as f64).sqrt());
        (t, t_sf(t, df as u64).value())
    };
    Ok(PairedTTest { n, mean_diff, std_diff, t, df, p_value })
}

/// Context-versus-baseline comparison in report layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub context: Context,
    pub subset: ItemSubset,
    pub baseline: SummaryStats,
    pub context_stats: SummaryStats,
    pub test: PairedTTest,
}

/// `paired_t_test(baseline, context)`, pairing by iteration index. A context
/// mean above the baseline mean gives a negative t.
pub fn compare_to_baseline(context_run: &PermutationRun, baseline_run: &PermutationRun) -> Result<Comparison> {
    let (c, b) = (&context_run.config, &baseline_run.config);
    if c.n_permutations != b.n_permutations {
        return Err(Error::ConfigMismatch(format!("n_permutations {} vs {}", c.n_permutations, b.n_permutations)));
    }
    if c.subset != b.subset {
        return Err(Error::ConfigMismatch(format!("subset {} vs {}", c.subset.flag(), b.subset.flag())));
    }
    if c.sample_size != b.sample_size {
        return Err(Error::ConfigMismatch(format!("sample_size {} vs {}", c.sample_size, b.sample_size)));
    }
    Ok(Comparison {
        context: context_run.context,
        subset: c.subset,
        baseline: baseline_run.stats,
        context_stats: context_run.stats,
        test: paired_t_test(&baseline_run.differences, &context_run.differences)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::{categorize, ContextSpec, Feature};
    use crate::ingest::{DailyRecord, EmaResponse, EmaSource, SensorDay};
    use chrono::Days;
    use rand::Rng;

    /// `n_iso` isolation days then `n_soc` sociability days (locations),
    /// EMA scores drawn uniformly.
    fn dataset(n_iso: usize, n_soc: usize, seed: u64) -> ParticipantDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();
        let records = (0..n_iso + n_soc)
            .map(|i| {
                let mut s = [0u8; 10];
                s.iter_mut().for_each(|v| *v = rng.random_range(0..=3));
                DailyRecord {
                    date: start + Days::new(i as u64),
                    ema: Some(EmaResponse { scores: EmaVector::new(s).unwrap(), source: EmaSource::Reported }),
                    sensors: SensorDay {
                        locations_visited: Some(if i < n_iso { 0 } else { 2 }),
                        ..SensorDay::default()
                    },
                }
            })
            .collect();
        ParticipantDataset::new("t", records).unwrap()
    }

    fn cfg(n: usize) -> PermutationConfig {
        PermutationConfig::new(n, 25, ItemSubset::All, 11).unwrap()
    }

    #[test]
    fn exact_pools_give_constant_differences() {
        let ds = dataset(25, 25, 1);
        let pools = categorize(&ds, &ContextSpec::standard(Feature::LocationsVisited));
        let run = run_context_permutation(&ds, &pools, &cfg(2000), StreamSeed::new(3), RunOptions::default()).unwrap();
        assert_eq!(run.differences.len(), 2000);
        // Every iteration draws every day, in sorted order.
        assert!(run.differences.iter().all(|d| *d == run.differences[0]));
        assert_eq!(run.stats.std, 0.0);
    }

    #[test]
    fn short_pool_is_reported() {
        let ds = dataset(24, 40, 2);
        let pools = categorize(&ds, &ContextSpec::standard(Feature::LocationsVisited));
        let err =
            run_context_permutation(&ds, &pools, &cfg(10), StreamSeed::new(0), RunOptions::default()).unwrap_err();
        match err {
            Error::InsufficientPool { category, have, need } => {
                assert_eq!(category, PoolKind::Category(Category::Isolation));
                assert_eq!((have, need), (24, 25));
            }
            e => panic!("{e:?}"),
        }
        let pool = crate::contexts::baseline_pool(&dataset(30, 19, 2));
        let err =
            run_baseline_permutation(&dataset(30, 19, 2), &pool, &cfg(10), StreamSeed::new(0), RunOptions::default())
                .unwrap_err();
        assert!(matches!(err, Error::InsufficientPool { category: PoolKind::Baseline, have: 49, need: 50 }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn baseline_of_exactly_fifty_days_partitions_them() {
        let ds = dataset(20, 30, 3);
        let pool = crate::contexts::baseline_pool(&ds);
        let opts = RunOptions { record_samples: true, parallel: false };
        let run = run_baseline_permutation(&ds, &pool, &cfg(50), StreamSeed::new(9), opts).unwrap();
        for s in run.samples.as_ref().unwrap() {
            let mut all: Vec<NaiveDate> = s.first.iter().chain(&s.second).copied().collect();
            all.sort();
            assert_eq!(all, pool);
        }
        assert!(run.stats.std > 0.0);
    }

    #[test]
    fn parallel_matches_sequential() {
        let ds = dataset(60, 80, 4);
        let pools = categorize(&ds, &ContextSpec::standard(Feature::LocationsVisited));
        let seq = RunOptions { record_samples: true, parallel: false };
        let par = RunOptions { record_samples: true, parallel: true };
        let a = run_context_permutation(&ds, &pools, &cfg(300), StreamSeed::new(5), seq).unwrap();
        let b = run_context_permutation(&ds, &pools, &cfg(300), StreamSeed::new(5), par).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn paired_t_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let same = paired_t_test(&xs, &xs).unwrap();
        assert_eq!((same.t, same.p_value), (0.0, 1.0));

        let ys = [0.0, 1.0, 2.0, 3.0, 4.0];
        let shifted = paired_t_test(&xs, &ys).unwrap();
        assert_eq!(shifted.t, f64::INFINITY);
        assert_eq!(shifted.p_value, 0.0);
        assert_eq!(paired_t_test(&ys, &xs).unwrap().t, f64::NEG_INFINITY);

        assert!(matches!(paired_t_test(&xs, &ys[..4]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(paired_t_test(&[1.0], &[2.0]), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn compare_checks_configs() {
        let ds = dataset(40, 40, 6);
        let pools = categorize(&ds, &ContextSpec::standard(Feature::LocationsVisited));
        let pool = crate::contexts::baseline_pool(&ds);
        let opts = RunOptions::default();
        let ctx = run_context_permutation(&ds, &pools, &cfg(100), StreamSeed::new(1), opts).unwrap();
        let base = run_baseline_permutation(&ds, &pool, &cfg(100), StreamSeed::new(2), opts).unwrap();
        let c = compare_to_baseline(&ctx, &base).unwrap();
        assert_eq!(c.test.df, 99);
        assert_eq!(c.baseline, base.stats);

        let self_cmp = compare_to_baseline(&ctx, &ctx).unwrap();
        assert_eq!((self_cmp.test.t, self_cmp.test.p_value), (0.0, 1.0));

        let other = run_baseline_permutation(&ds, &pool, &cfg(99), StreamSeed::new(2), opts).unwrap();
        assert!(matches!(compare_to_baseline(&ctx, &other), Err(Error::ConfigMismatch(_))));
        let mut pos = cfg(100);
        pos.subset = ItemSubset::Positive;
        let other = run_baseline_permutation(&ds, &pool, &pos, StreamSeed::new(2), opts).unwrap();
        assert!(matches!(compare_to_baseline(&ctx, &other), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn config_validation() {
        assert!(PermutationConfig::new(0, 25, ItemSubset::All, 0).is_err());
        assert!(PermutationConfig::new(10, 1, ItemSubset::All, 0).is_err());
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        let a = StreamSeed::derive(42, "baseline");
        let b = StreamSeed::derive(42, "locations");
        assert_ne!(a, b);
        assert_eq!(a, StreamSeed::for_context(42, Context::Baseline));
        assert_ne!(StreamSeed::derive(43, "baseline"), a);
    }

    #[test]
    fn tiny_p_values_serialize_as_zero() {
        let mut t = paired_t_test(&[1.0, 2.0, 3.5], &[0.0, 0.5, 1.0]).unwrap();
        t.p_value = 1e-310;
        assert_eq!(serde_json::to_value(t).unwrap()["p_value"], 0.0);
        t.p_value = 2e-300;
        assert_eq!(serde_json::to_value(t).unwrap()["p_value"], 2e-300);
    }
}
