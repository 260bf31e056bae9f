//! Participant data model, CSV ingestion and EMA backfill.
//!
//! A participant file holds one row per calendar day. EMA responses arrive
//! every few days while sensor aggregates are daily; [`backfill_emas`] copies
//! each response onto the (up to) two preceding days it also describes.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::contexts::{baseline_pool, categorize, Category, Context, ContextSpec};
use crate::error::{Error, PoolKind, Result};

pub const EMA_ITEM_COUNT: usize = 10;
pub const MAX_EMA_SCORE: u8 = 3;

/// Days before a report that the report also describes.
pub const BACKFILL_WINDOW: u64 = 2;

/// Header of the participant CSV, in order.
pub const CSV_HEADER: [&str; 17] = [
    "date",
    "ema_calm",
    "ema_social",
    "ema_sleeping",
    "ema_think",
    "ema_hopeful",
    "ema_depressed",
    "ema_stressed",
    "ema_voices",
    "ema_seeing",
    "ema_harm",
    "locations_visited",
    "calls_made",
    "calls_received",
    "sms_sent",
    "sms_received",
    "conversations_detected",
];

const DATE_FORMAT: &str = "%Y-%m-%d";

/// The ten questionnaire items, in storage order. The first five are the
/// positive items, the last five the negative ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EmaItem {
    Calm,
    Social,
    Sleeping,
    Think,
    Hopeful,
    Depressed,
    Stressed,
    Voices,
    Seeing,
    Harm,
}

impl EmaItem {
    pub const ALL: [EmaItem; EMA_ITEM_COUNT] = [
        EmaItem::Calm,
        EmaItem::Social,
        EmaItem::Sleeping,
        EmaItem::Think,
        EmaItem::Hopeful,
        EmaItem::Depressed,
        EmaItem::Stressed,
        EmaItem::Voices,
        EmaItem::Seeing,
        EmaItem::Harm,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_positive(self) -> bool {
        self.index() < 5
    }

    pub fn name(self) -> &'static str {
        match self {
            EmaItem::Calm => "CALM",
            EmaItem::Social => "SOCIAL",
            EmaItem::Sleeping => "SLEEPING",
            EmaItem::Think => "THINK",
            EmaItem::Hopeful => "HOPEFUL",
            EmaItem::Depressed => "DEPRESSED",
            EmaItem::Stressed => "STRESSED",
            EmaItem::Voices => "VOICES",
            EmaItem::Seeing => "SEEING",
            EmaItem::Harm => "HARM",
        }
    }

    /// Three-letter node label used in network drawings.
    pub fn code(self) -> &'static str {
        match self {
            EmaItem::Calm => "CAL",
            EmaItem::Social => "SOC",
            EmaItem::Sleeping => "SLE",
            EmaItem::Think => "THI",
            EmaItem::Hopeful => "HOP",
            EmaItem::Depressed => "DEP",
            EmaItem::Stressed => "STR",
            EmaItem::Voices => "VOI",
            EmaItem::Seeing => "SEE",
            EmaItem::Harm => "HAR",
        }
    }

    pub fn column(self) -> &'static str {
        CSV_HEADER[1 + self.index()]
    }
}

impl fmt::Display for EmaItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One complete questionnaire response: ten scores in `0..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EmaVector([u8; EMA_ITEM_COUNT]);

impl EmaVector {
    pub fn new(scores: [u8; EMA_ITEM_COUNT]) -> Result<Self> {
        if let Some(i) = scores.iter().position(|&s| s > MAX_EMA_SCORE) {
            return Err(Error::InvalidConfig(format!(
                "EMA score {} for {} is outside 0..=3",
                scores[i],
                EmaItem::ALL[i]
            )));
        }
        Ok(EmaVector(scores))
    }

    pub fn scores(&self) -> &[u8; EMA_ITEM_COUNT] {
        &self.0
    }

    pub fn get(&self, item: EmaItem) -> u8 {
        self.0[item.index()]
    }
}

/// Where a day's EMA came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmaSource {
    Reported,
    /// Copied from the report one day later.
    #[serde(rename = "backfilled-1")]
    Backfilled1,
    /// Copied from the report two days later.
    #[serde(rename = "backfilled-2")]
    Backfilled2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EmaResponse {
    pub scores: EmaVector,
    pub source: EmaSource,
}

/// Daily sensor aggregates; `None` means the feature was not measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SensorDay {
    pub locations_visited: Option<u32>,
    pub calls_made: Option<u32>,
    pub calls_received: Option<u32>,
    pub sms_sent: Option<u32>,
    pub sms_received: Option<u32>,
    pub conversations_detected: Option<u32>,
}

impl SensorDay {
    fn counts(&self) -> [Option<u32>; 6] {
        [
            self.locations_visited,
            self.calls_made,
            self.calls_received,
            self.sms_sent,
            self.sms_received,
            self.conversations_detected,
        ]
    }

    fn from_counts(c: [Option<u32>; 6]) -> Self {
        SensorDay {
            locations_visited: c[0],
            calls_made: c[1],
            calls_received: c[2],
            sms_sent: c[3],
            sms_received: c[4],
            conversations_detected: c[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub ema: Option<EmaResponse>,
    pub sensors: SensorDay,
}

impl DailyRecord {
    pub fn ema_source(&self) -> Option<EmaSource> {
        self.ema.map(|e| e.source)
    }

    pub fn is_reported(&self) -> bool {
        self.ema_source() == Some(EmaSource::Reported)
    }
}

/// One participant's days, strictly increasing by date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantDataset {
    participant_id: String,
    records: Vec<DailyRecord>,
}

impl ParticipantDataset {
    /// Builds a dataset from records that are already in strictly increasing
    /// date order.
    pub fn new(participant_id: impl Into<String>, records: Vec<DailyRecord>) -> Result<Self> {
        for (i, pair) in records.windows(2).enumerate() {
            if pair[0].date >= pair[1].date {
                return Err(Error::schema(
                    i + 2,
                    "date",
                    format!("dates not strictly increasing ({} then {})", pair[0].date, pair[1].date),
                ));
            }
        }
        Ok(ParticipantDataset { participant_id: participant_id.into(), records })
    }

    pub fn participant_id(&self) -> &str {
        &self.participant_id
    }

    pub fn records(&self) -> &[DailyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Days carrying an EMA, reported or backfilled.
    pub fn usable_days(&self) -> usize {
        self.records.iter().filter(|r| r.ema.is_some()).count()
    }

    pub fn get(&self, date: NaiveDate) -> Option<&DailyRecord> {
        self.records.binary_search_by_key(&date, |r| r.date).ok().map(|i| &self.records[i])
    }

    /// EMA vectors for the given dates; dates without an EMA are an error.
    pub fn ema_for(&self, dates: &[NaiveDate]) -> Result<Vec<EmaVector>> {
        dates
            .iter()
            .map(|d| {
                self.get(*d)
                    .and_then(|r| r.ema)
                    .map(|e| e.scores)
                    .ok_or_else(|| Error::InvalidConfig(format!("no EMA recorded for {d}")))
            })
            .collect()
    }

    /// Writes the participant CSV. Only reported EMAs are written; backfilled
    /// copies are derived data and are recomputed on load.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        let mut row: Vec<String> = Vec::with_capacity(CSV_HEADER.len());
        for rec in &self.records {
            row.clear();
            row.push(rec.date.format(DATE_FORMAT).to_string());
            match rec.ema {
                Some(e) if e.source == EmaSource::Reported => {
                    row.extend(e.scores.scores().iter().map(|s| s.to_string()));
                }
                _ => row.extend(std::iter::repeat_n(String::new(), EMA_ITEM_COUNT)),
            }
            row.extend(rec.sensors.counts().iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Parses a participant file. The participant id is the file stem.
pub fn parse_participant(path: impl AsRef<Path>) -> Result<ParticipantDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_participant_reader(id, file)
}

/// Parses participant CSV from any reader. Rows may appear in any order; the
/// result is sorted by date.
pub fn parse_participant_reader<R: Read>(participant_id: impl Into<String>, reader: R) -> Result<ParticipantDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);

    let header = rdr.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != CSV_HEADER {
        let column = CSV_HEADER
            .iter()
            .zip(found.iter().chain(std::iter::repeat(&"")))
            .find(|(want, got)| want != got)
            .map(|(want, _)| *want)
            .unwrap_or("*");
        return Err(Error::schema(0, column, format!("header must be `{}`", CSV_HEADER.join(","))));
    }

    let mut rows: Vec<(usize, DailyRecord)> = Vec::new();
    for (i, result) in rdr.records().enumerate() {
        let row = i + 1;
        let record = result.map_err(|e| Error::schema(row, "*", e.to_string()))?;
        if record.len() != CSV_HEADER.len() {
            return Err(Error::schema(
                row,
                "*",
                format!("expected {} fields, found {}", CSV_HEADER.len(), record.len()),
            ));
        }
        rows.push((row, parse_row(row, &record)?));
    }

    rows.sort_by_key(|(_, r)| r.date);
    for pair in rows.windows(2) {
        if pair[0].1.date == pair[1].1.date {
            let later = pair[0].0.max(pair[1].0);
            return Err(Error::schema(later, "date", format!("duplicate date {}", pair[1].1.date)));
        }
    }
    ParticipantDataset::new(participant_id, rows.into_iter().map(|(_, r)| r).collect())
}

fn parse_row(row: usize, record: &csv::StringRecord) -> Result<DailyRecord> {
    let date = NaiveDate::parse_from_str(&record[0], DATE_FORMAT)
        .map_err(|e| Error::schema(row, "date", format!("unparseable date `{}`: {e}", &record[0])))?;

    let ema_cells: Vec<&str> = (1..=EMA_ITEM_COUNT).map(|c| &record[c]).collect();
    let present = ema_cells.iter().filter(|c| !c.is_empty()).count();
    let ema = match present {
        0 => None,
        EMA_ITEM_COUNT => {
            let mut scores = [0u8; EMA_ITEM_COUNT];
            for (i, cell) in ema_cells.iter().enumerate() {
                let column = CSV_HEADER[1 + i];
                let v = i64::from_str(cell)
                    .map_err(|_| Error::schema(row, column, format!("EMA score `{cell}` is not an integer")))?;
                if !(0..=MAX_EMA_SCORE as i64).contains(&v) {
                    return Err(Error::schema(row, column, format!("EMA score {v} outside 0..=3")));
                }
                scores[i] = v as u8;
            }
            Some(EmaResponse { scores: EmaVector(scores), source: EmaSource::Reported })
        }
        _ => {
            let column = CSV_HEADER[1 + ema_cells.iter().position(|c| c.is_empty()).unwrap_or(0)];
            return Err(Error::schema(row, column, "EMA cells must be all present or all empty"));
        }
    };

    let mut counts = [None; 6];
    for (k, slot) in counts.iter_mut().enumerate() {
        let c = 1 + EMA_ITEM_COUNT + k;
        let cell = &record[c];
        if cell.is_empty() {
            continue;
        }
        let v = i64::from_str(cell)
            .map_err(|_| Error::schema(row, CSV_HEADER[c], format!("count `{cell}` is not an integer")))?;
        if v < 0 {
            return Err(Error::schema(row, CSV_HEADER[c], format!("negative count {v}")));
        }
        *slot = Some(u32::try_from(v).map_err(|_| Error::schema(row, CSV_HEADER[c], format!("count {v} too large")))?);
    }

    Ok(DailyRecord { date, ema, sensors: SensorDay::from_counts(counts) })
}

/// Copies each reported EMA onto the two preceding calendar days.
///
/// A day without its own report takes the report one day later if there is
/// one, otherwise the report two days later, otherwise it stays without an
/// EMA. Existing backfilled entries are discarded and recomputed, so the
/// operation is idempotent.
pub fn backfill_emas(ds: &ParticipantDataset) -> ParticipantDataset {
    let reported_on = |date: NaiveDate| -> Option<EmaVector> {
        ds.get(date).and_then(|r| r.ema).filter(|e| e.source == EmaSource::Reported).map(|e| e.scores)
    };

    let records = ds
        .records
        .iter()
        .map(|rec| {
            let ema = if rec.is_reported() {
                rec.ema
            } else {
                (1..=BACKFILL_WINDOW).find_map(|lag| {
                    let later = rec.date.checked_add_days(Days::new(lag))?;
                    reported_on(later).map(|scores| EmaResponse {
                        scores,
                        source: if lag == 1 { EmaSource::Backfilled1 } else { EmaSource::Backfilled2 },
                    })
                })
            };
            DailyRecord { ema, ..rec.clone() }
        })
        .collect();

    ParticipantDataset { participant_id: ds.participant_id.clone(), records }
}

/// Available versus required days for one pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PoolCount {
    #[serde(serialize_with = "crate::contexts::serialize_display")]
    pub pool: PoolKind,
    pub have: usize,
    pub need: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EligibilityReport {
    #[serde(serialize_with = "crate::contexts::serialize_display")]
    pub context: Context,
    pub pools: Vec<PoolCount>,
}

impl EligibilityReport {
    pub fn eligible(&self) -> bool {
        self.pools.iter().all(|p| p.have >= p.need)
    }

    /// The pool with the largest relative shortfall, if any pool is short.
    pub fn limiting(&self) -> Option<PoolKind> {
        self.pools
            .iter()
            .filter(|p| p.have < p.need)
            .min_by(|a, b| {
                let fa = a.have as f64 / a.need as f64;
                let fb = b.have as f64 / b.need as f64;
                fa.total_cmp(&fb)
            })
            .map(|p| p.pool)
    }
}

/// Counts EMA-bearing days per category of `ctx` on a backfilled dataset.
/// Feature contexts need `min_days` in each category; the baseline needs
/// `2 * min_days` because every iteration draws two disjoint samples.
pub fn eligibility(ds: &ParticipantDataset, ctx: Context, min_days: usize) -> EligibilityReport {
    let pools = match ctx {
        Context::Baseline => {
            vec![PoolCount { pool: PoolKind::Baseline, have: baseline_pool(ds).len(), need: 2 * min_days }]
        }
        Context::Feature(feature) => {
            let pools = categorize(ds, &ContextSpec::standard(feature));
            vec![
                PoolCount {
                    pool: PoolKind::Category(Category::Isolation),
                    have: pools.isolation.len(),
                    need: min_days,
                },
                PoolCount {
                    pool: PoolKind::Category(Category::Sociability),
                    have: pools.sociability.len(),
                    need: min_days,
                },
            ]
        }
    };
    EligibilityReport { context: ctx, pools }
}
