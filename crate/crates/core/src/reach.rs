//! Reach-count data model: per-interest audience counts indexed by ideology
//! bucket and demographic subgroup, with the preprocessing steps applied to
//! raw tables before any alignment math (ideology binarization, White-count
//! estimation, political filtering, censoring flags).

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diag::Warning;
use crate::error::{Error, Result};

/// Default reach floor below which the collection API censors counts.
pub const CENSOR_FLOOR_DEFAULT: u64 = 20;

/// Default multiracial down-weighting applied to Black and Hispanic counts
/// when estimating White reach.
pub const MULTIRACIAL_RATE_DEFAULT: f64 = 0.12;

/// Ideology bucket of a reach count. `Any` is the marginal,
/// ideology-unconditioned count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdeologyBucket {
    VeryLiberal,
    SomewhatLiberal,
    Moderate,
    SomewhatConservative,
    VeryConservative,
    Any,
}

impl IdeologyBucket {
    pub const ALL: [IdeologyBucket; 6] = [
        IdeologyBucket::VeryLiberal,
        IdeologyBucket::SomewhatLiberal,
        IdeologyBucket::Moderate,
        IdeologyBucket::SomewhatConservative,
        IdeologyBucket::VeryConservative,
        IdeologyBucket::Any,
    ];

    pub fn label(self) -> &'static str {
        match self {
            IdeologyBucket::VeryLiberal => "very_liberal",
            IdeologyBucket::SomewhatLiberal => "somewhat_liberal",
            IdeologyBucket::Moderate => "moderate",
            IdeologyBucket::SomewhatConservative => "somewhat_conservative",
            IdeologyBucket::VeryConservative => "very_conservative",
            IdeologyBucket::Any => "any",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        IdeologyBucket::ALL.into_iter().find(|b| b.label() == s)
    }

    fn idx(self) -> usize {
        match self {
            IdeologyBucket::VeryLiberal => 0,
            IdeologyBucket::SomewhatLiberal => 1,
            IdeologyBucket::Moderate => 2,
            IdeologyBucket::SomewhatConservative => 3,
            IdeologyBucket::VeryConservative => 4,
            IdeologyBucket::Any => 5,
        }
    }
}

impl fmt::Display for IdeologyBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Demographic category. `Marginal` (CSV label `none`) carries the single
/// subgroup `all`, the demographic-unconditioned count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemographicCategory {
    RaceEthnicity,
    Education,
    Age,
    Gender,
    Income,
    #[serde(rename = "none")]
    Marginal,
}

impl DemographicCategory {
    /// The five categories used for deconfounding analysis.
    pub const ANALYSIS: [DemographicCategory; 5] = [
        DemographicCategory::RaceEthnicity,
        DemographicCategory::Education,
        DemographicCategory::Age,
        DemographicCategory::Gender,
        DemographicCategory::Income,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DemographicCategory::RaceEthnicity => "race_ethnicity",
            DemographicCategory::Education => "education",
            DemographicCategory::Age => "age",
            DemographicCategory::Gender => "gender",
            DemographicCategory::Income => "income",
            DemographicCategory::Marginal => "none",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "race_ethnicity" => Some(DemographicCategory::RaceEthnicity),
            "education" => Some(DemographicCategory::Education),
            "age" => Some(DemographicCategory::Age),
            "gender" => Some(DemographicCategory::Gender),
            "income" => Some(DemographicCategory::Income),
            "none" => Some(DemographicCategory::Marginal),
            _ => None,
        }
    }

    pub fn canonical_labels(self) -> &'static [&'static str] {
        match self {
            DemographicCategory::RaceEthnicity => &["asian", "black", "hispanic", "white"],
            DemographicCategory::Education => &["college", "no-college"],
            // The published age bins overlap at 57; the last bin is
            // canonicalized here as 58-100.
            DemographicCategory::Age => &["13-21", "22-37", "38-57", "58-100"],
            DemographicCategory::Gender => &["male", "female"],
            DemographicCategory::Income => &["30-40k", "40-50k", "50-75k", "75k+"],
            DemographicCategory::Marginal => &["all"],
        }
    }
}

impl fmt::Display for DemographicCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// (category, label) pairs for every subgroup slot, marginal first.
const SLOT_TABLE: [(DemographicCategory, &str); SUBGROUP_SLOTS] = [
    (DemographicCategory::Marginal, "all"),
    (DemographicCategory::RaceEthnicity, "asian"),
    (DemographicCategory::RaceEthnicity, "black"),
    (DemographicCategory::RaceEthnicity, "hispanic"),
    (DemographicCategory::RaceEthnicity, "white"),
    (DemographicCategory::Education, "college"),
    (DemographicCategory::Education, "no-college"),
    (DemographicCategory::Age, "13-21"),
    (DemographicCategory::Age, "22-37"),
    (DemographicCategory::Age, "38-57"),
    (DemographicCategory::Age, "58-100"),
    (DemographicCategory::Gender, "male"),
    (DemographicCategory::Gender, "female"),
    (DemographicCategory::Income, "30-40k"),
    (DemographicCategory::Income, "40-50k"),
    (DemographicCategory::Income, "50-75k"),
    (DemographicCategory::Income, "75k+"),
];

/// Total number of subgroup slots across all categories (marginal included).
pub const SUBGROUP_SLOTS: usize = 17;

const SLOT_MARGINAL: usize = 0;
const SLOT_ASIAN: usize = 1;
const SLOT_BLACK: usize = 2;
const SLOT_HISPANIC: usize = 3;
const SLOT_WHITE: usize = 4;

/// A demographic subgroup, one of the canonical (category, label) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DemographicSubgroup {
    slot: u8,
}

impl DemographicSubgroup {
    pub fn new(category: DemographicCategory, label: &str) -> Result<Self> {
        SLOT_TABLE
            .iter()
            .position(|&(c, l)| c == category && l == label)
            .map(|slot| DemographicSubgroup { slot: slot as u8 })
            .ok_or_else(|| {
                Error::InvalidParam(format!(
                    "unknown subgroup label {label:?} for category {category}"
                ))
            })
    }

    /// The demographic-unconditioned subgroup (`none`/`all`).
    pub fn marginal() -> Self {
        DemographicSubgroup {
            slot: SLOT_MARGINAL as u8,
        }
    }

    pub fn category(self) -> DemographicCategory {
        SLOT_TABLE[self.slot as usize].0
    }

    pub fn label(self) -> &'static str {
        SLOT_TABLE[self.slot as usize].1
    }

    pub fn is_marginal(self) -> bool {
        self.slot as usize == SLOT_MARGINAL
    }

    /// All subgroups, marginal first, in canonical order.
    pub fn all() -> impl Iterator<Item = DemographicSubgroup> {
        (0..SUBGROUP_SLOTS as u8).map(|slot| DemographicSubgroup { slot })
    }

    /// The subgroups of one category, in canonical order.
    pub fn in_category(category: DemographicCategory) -> Vec<DemographicSubgroup> {
        Self::all().filter(|s| s.category() == category).collect()
    }

    fn slot(self) -> usize {
        self.slot as usize
    }

    fn from_slot(slot: usize) -> Self {
        DemographicSubgroup { slot: slot as u8 }
    }
}

impl fmt::Display for DemographicSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.category(), self.label())
    }
}

/// One raw reach observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachRecord {
    pub interest_id: String,
    pub interest_name: String,
    pub ideology: IdeologyBucket,
    pub subgroup: DemographicSubgroup,
    pub count: u64,
}

const CELLS: usize = SUBGROUP_SLOTS * 6;

#[derive(Clone)]
struct Interest {
    id: String,
    name: String,
    counts: [u64; CELLS],
    /// Presence bit per (slot, bucket) cell.
    present: u128,
    /// Censoring flag per (slot, bucket) cell.
    censored: u128,
    /// Binarized liberal/conservative counts per slot.
    lc: [[u64; 2]; SUBGROUP_SLOTS],
    /// Slots with at least one observed cell.
    slice_present: u32,
}

impl Interest {
    fn new(id: String, name: String) -> Self {
        Interest {
            id,
            name,
            counts: [0; CELLS],
            present: 0,
            censored: 0,
            lc: [[0; 2]; SUBGROUP_SLOTS],
            slice_present: 0,
        }
    }

    fn cell(slot: usize, bucket: usize) -> usize {
        slot * 6 + bucket
    }

    fn get(&self, slot: usize, bucket: usize) -> Option<u64> {
        let c = Self::cell(slot, bucket);
        (self.present >> c & 1 == 1).then(|| self.counts[c])
    }

    fn set(&mut self, slot: usize, bucket: usize, count: u64) -> bool {
        let c = Self::cell(slot, bucket);
        let fresh = self.present >> c & 1 == 0;
        self.counts[c] = count;
        self.present |= 1 << c;
        self.slice_present |= 1 << slot;
        fresh
    }
}

/// The expected reach.csv header.
pub const REACH_HEADER: &str = "interest_id,interest_name,ideology,demo_category,demo_subgroup,count";

/// Per-interest reach counts, indexed by ideology bucket × demographic
/// subgroup. The artifact's central store: built once by ingestion and the
/// preprocessing passes, then treated as immutable by all downstream
/// computations.
#[derive(Clone)]
pub struct ReachTable {
    interests: Vec<Interest>,
    index: HashMap<String, usize>,
    censor_floor: u64,
    record_count: usize,
    binarized: bool,
    warnings: Vec<Warning>,
}

impl Default for ReachTable {
    fn default() -> Self {
        Self::new()
    }
}

impl ReachTable {
    pub fn new() -> Self {
        ReachTable {
            interests: Vec::new(),
            index: HashMap::new(),
            censor_floor: CENSOR_FLOOR_DEFAULT,
            record_count: 0,
            binarized: false,
            warnings: Vec::new(),
        }
    }

    /// Parse a reach.csv file. Duplicate (interest, ideology, subgroup) keys
    /// are hard errors: silent aggregation would mask collection bugs.
    pub fn ingest_reach(path: &Path) -> Result<ReachTable> {
        let display = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(&display, io),
                other => Error::MalformedRow {
                    line: 1,
                    message: format!("{other:?}"),
                },
            })?;

        {
            let headers = reader.headers().map_err(|e| Error::MalformedRow {
                line: 1,
                message: e.to_string(),
            })?;
            let found = headers.iter().collect::<Vec<_>>().join(",");
            if found != REACH_HEADER {
                return Err(Error::SchemaMismatch {
                    path: display,
                    expected: REACH_HEADER.to_string(),
                    found,
                });
            }
        }

        let mut table = ReachTable::new();
        let mut record = csv::StringRecord::new();
        loop {
            match reader.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {}
                Err(e) => {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    return Err(Error::MalformedRow {
                        line,
                        message: e.to_string(),
                    });
                }
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != 6 {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("expected 6 fields, found {}", record.len()),
                });
            }
            let ideology =
                IdeologyBucket::from_label(&record[2]).ok_or_else(|| Error::UnknownLabel {
                    line,
                    kind: "ideology",
                    label: record[2].to_string(),
                })?;
            let category =
                DemographicCategory::from_label(&record[3]).ok_or_else(|| Error::UnknownLabel {
                    line,
                    kind: "demo_category",
                    label: record[3].to_string(),
                })?;
            let subgroup =
                DemographicSubgroup::new(category, &record[4]).map_err(|_| Error::UnknownLabel {
                    line,
                    kind: "demo_subgroup",
                    label: format!("{}/{}", &record[3], &record[4]),
                })?;
            let count: u64 = record[5].parse().map_err(|_| Error::MalformedRow {
                line,
                message: format!("count {:?} is not a non-negative integer", &record[5]),
            })?;
            table.push_record(
                ReachRecord {
                    interest_id: record[0].to_string(),
                    interest_name: record[1].to_string(),
                    ideology,
                    subgroup,
                    count,
                },
                line,
            )?;
        }
        Ok(table)
    }

    /// Build a table from in-memory records (line numbers in duplicate-key
    /// errors count records from 1).
    pub fn from_records(records: impl IntoIterator<Item = ReachRecord>) -> Result<ReachTable> {
        let mut table = ReachTable::new();
        for (i, rec) in records.into_iter().enumerate() {
            table.push_record(rec, i as u64 + 1)?;
        }
        Ok(table)
    }

    fn push_record(&mut self, rec: ReachRecord, line: u64) -> Result<()> {
        let idx = match self.index.get(&rec.interest_id) {
            Some(&i) => i,
            None => {
                let i = self.interests.len();
                self.index.insert(rec.interest_id.clone(), i);
                self.interests
                    .push(Interest::new(rec.interest_id.clone(), rec.interest_name.clone()));
                i
            }
        };
        let interest = &mut self.interests[idx];
        if !interest.set(rec.subgroup.slot(), rec.ideology.idx(), rec.count) {
            return Err(Error::DuplicateKey {
                line,
                interest: rec.interest_id,
                ideology: rec.ideology.label().to_string(),
                subgroup: rec.subgroup.to_string(),
            });
        }
        self.record_count += 1;
        self.binarized = false;
        Ok(())
    }

    pub fn interest_count(&self) -> usize {
        self.interests.len()
    }

    pub fn record_count(&self) -> usize {
        self.record_count
    }

    pub fn is_binarized(&self) -> bool {
        self.binarized
    }

    pub fn censor_floor(&self) -> u64 {
        self.censor_floor
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn contains(&self, interest_id: &str) -> bool {
        self.index.contains_key(interest_id)
    }

    /// Interest ids in ingestion order.
    pub fn interest_ids(&self) -> impl Iterator<Item = &str> {
        self.interests.iter().map(|i| i.id.as_str())
    }

    pub fn interest_name(&self, interest_id: &str) -> Option<&str> {
        self.index
            .get(interest_id)
            .map(|&i| self.interests[i].name.as_str())
    }

    /// Raw count for one (interest, ideology, subgroup) cell, if observed.
    pub fn count(
        &self,
        interest_id: &str,
        ideology: IdeologyBucket,
        subgroup: DemographicSubgroup,
    ) -> Option<u64> {
        let &i = self.index.get(interest_id)?;
        self.interests[i].get(subgroup.slot(), ideology.idx())
    }

    /// Binarized (liberal, conservative) counts for one (interest, subgroup)
    /// slice. `None` if the table is not binarized or the slice was never
    /// observed.
    pub fn lc(&self, interest_id: &str, subgroup: DemographicSubgroup) -> Option<(u64, u64)> {
        if !self.binarized {
            return None;
        }
        let &i = self.index.get(interest_id)?;
        let interest = &self.interests[i];
        (interest.slice_present >> subgroup.slot() & 1 == 1)
            .then(|| (interest.lc[subgroup.slot()][0], interest.lc[subgroup.slot()][1]))
    }

    /// Whether a cell is flagged as potentially censored.
    pub fn is_censored(
        &self,
        interest_id: &str,
        ideology: IdeologyBucket,
        subgroup: DemographicSubgroup,
    ) -> bool {
        match self.index.get(interest_id) {
            Some(&i) => {
                let cell = Interest::cell(subgroup.slot(), ideology.idx());
                self.interests[i].censored >> cell & 1 == 1
            }
            None => false,
        }
    }

    /// Subgroups of `category` with at least one observed cell for the
    /// interest, in canonical order.
    pub fn subgroups_present(
        &self,
        interest_id: &str,
        category: DemographicCategory,
    ) -> Vec<DemographicSubgroup> {
        match self.index.get(interest_id) {
            Some(&i) => {
                let interest = &self.interests[i];
                DemographicSubgroup::in_category(category)
                    .into_iter()
                    .filter(|s| interest.slice_present >> s.slot() & 1 == 1)
                    .collect()
            }
            None => Vec::new(),
        }
    }

    /// Derive liberal/conservative counts for every observed slice:
    /// L = very_liberal + somewhat_liberal, C = very_conservative +
    /// somewhat_conservative. Idempotent; absent buckets contribute zero.
    pub fn binarize_ideology(&mut self) {
        for interest in &mut self.interests {
            for slot in 0..SUBGROUP_SLOTS {
                if interest.slice_present >> slot & 1 == 0 {
                    continue;
                }
                let get = |bucket: usize| interest.get(slot, bucket).unwrap_or(0);
                let l = get(IdeologyBucket::VeryLiberal.idx())
                    + get(IdeologyBucket::SomewhatLiberal.idx());
                let c = get(IdeologyBucket::VeryConservative.idx())
                    + get(IdeologyBucket::SomewhatConservative.idx());
                interest.lc[slot] = [l, c];
            }
        }
        self.binarized = true;
    }

    /// Estimate White reach per (interest, ideology) slice as
    /// total − asian − (1−rate)·black − (1−rate)·hispanic, rounded to nearest
    /// (ties away from zero), clamped at zero with a warning when negative.
    ///
    /// Slices lacking a marginal count are reported and skipped, as are
    /// slices where a White count already exists (pre-resolved tables) and
    /// interests with no race/ethnicity data at all. Returns the number of
    /// cells derived.
    pub fn estimate_white(&mut self, multiracial_rate: f64) -> usize {
        let keep = 1.0 - multiracial_rate;
        let mut derived = 0usize;
        let mut warnings = Vec::new();
        for interest in &mut self.interests {
            for bucket in 0..6 {
                let asian = interest.get(SLOT_ASIAN, bucket);
                let black = interest.get(SLOT_BLACK, bucket);
                let hispanic = interest.get(SLOT_HISPANIC, bucket);
                if asian.is_none() && black.is_none() && hispanic.is_none() {
                    continue;
                }
                if interest.get(SLOT_WHITE, bucket).is_some() {
                    warnings.push(Warning::new(
                        "white_already_present",
                        format!(
                            "interest {} bucket {}: white count already present, not re-derived",
                            interest.id,
                            IdeologyBucket::ALL[bucket].label()
                        ),
                    ));
                    continue;
                }
                let total = match interest.get(SLOT_MARGINAL, bucket) {
                    Some(t) => t as f64,
                    None => {
                        warnings.push(Warning::new(
                            "white_missing_marginal",
                            format!(
                                "interest {} bucket {}: no marginal count, white not derived",
                                interest.id,
                                IdeologyBucket::ALL[bucket].label()
                            ),
                        ));
                        continue;
                    }
                };
                let raw = total
                    - asian.unwrap_or(0) as f64
                    - keep * black.unwrap_or(0) as f64
                    - keep * hispanic.unwrap_or(0) as f64;
                let white = if raw < 0.0 {
                    warnings.push(Warning::new(
                        "white_clamped",
                        format!(
                            "interest {} bucket {}: estimated white count {:.1} clamped to 0",
                            interest.id,
                            IdeologyBucket::ALL[bucket].label(),
                            raw
                        ),
                    ));
                    0
                } else {
                    raw.round() as u64
                };
                interest.set(SLOT_WHITE, bucket, white);
                derived += 1;
                self.record_count += 1;
            }
        }
        self.warnings.extend(warnings);
        if derived > 0 {
            self.binarized = false;
        }
        derived
    }

    /// Drop interests with no partisan audience: marginal-slice L + C == 0.
    /// Binarizes first if needed. Returns the number of interests removed.
    pub fn filter_political(&mut self) -> usize {
        if !self.binarized {
            self.binarize_ideology();
        }
        let before = self.interests.len();
        let mut kept = Vec::with_capacity(before);
        for interest in self.interests.drain(..) {
            let [l, c] = interest.lc[SLOT_MARGINAL];
            // An interest with no marginal slice at all has no ideological
            // data either.
            let has_marginal = interest.slice_present >> SLOT_MARGINAL & 1 == 1;
            if has_marginal && l + c > 0 {
                kept.push(interest);
            } else {
                self.record_count -= (interest.present.count_ones()) as usize;
            }
        }
        self.interests = kept;
        self.index = self
            .interests
            .iter()
            .enumerate()
            .map(|(i, interest)| (interest.id.clone(), i))
            .collect();
        before - self.interests.len()
    }

    /// Flag potentially-censored cells: count == floor is flagged; nonzero
    /// counts below the documented API floor are flagged and warned about
    /// (the collection API caps them at the floor, so they should be
    /// impossible). Zero counts are plausible empty cells. Counts are never
    /// modified. Returns the number of flags set.
    pub fn flag_censored(&mut self, floor: u64) -> usize {
        self.censor_floor = floor;
        let mut flags = 0usize;
        let mut warnings = Vec::new();
        for interest in &mut self.interests {
            for slot in 0..SUBGROUP_SLOTS {
                for bucket in 0..6 {
                    let Some(count) = interest.get(slot, bucket) else {
                        continue;
                    };
                    let cell = Interest::cell(slot, bucket);
                    if count == floor {
                        interest.censored |= 1 << cell;
                        flags += 1;
                    } else if count < floor && count > 0 {
                        interest.censored |= 1 << cell;
                        flags += 1;
                        warnings.push(Warning::new(
                            "below_censor_floor",
                            format!(
                                "interest {} {} {}: count {} below the documented floor {}",
                                interest.id,
                                IdeologyBucket::ALL[bucket].label(),
                                DemographicSubgroup::from_slot(slot),
                                count,
                                floor
                            ),
                        ));
                    } else {
                        interest.censored &= !(1 << cell);
                    }
                }
            }
        }
        self.warnings.extend(warnings);
        flags
    }

    /// All records in canonical order: interests sorted by id, subgroups and
    /// buckets in canonical order.
    pub fn records(&self) -> Vec<ReachRecord> {
        let mut order: Vec<usize> = (0..self.interests.len()).collect();
        order.sort_by(|&a, &b| self.interests[a].id.cmp(&self.interests[b].id));
        let mut out = Vec::with_capacity(self.record_count);
        for i in order {
            let interest = &self.interests[i];
            for slot in 0..SUBGROUP_SLOTS {
                for bucket in 0..6 {
                    if let Some(count) = interest.get(slot, bucket) {
                        out.push(ReachRecord {
                            interest_id: interest.id.clone(),
                            interest_name: interest.name.clone(),
                            ideology: IdeologyBucket::ALL[bucket],
                            subgroup: DemographicSubgroup::from_slot(slot),
                            count,
                        });
                    }
                }
            }
        }
        out
    }

    /// Serialize to reach.csv in canonical order. Re-ingesting the output
    /// reproduces the same serialization byte for byte.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(writer);
        let io_err = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io("<writer>", io),
            other => Error::InvalidParam(format!("csv write failed: {other:?}")),
        };
        w.write_record([
            "interest_id",
            "interest_name",
            "ideology",
            "demo_category",
            "demo_subgroup",
            "count",
        ])
        .map_err(io_err)?;
        for rec in self.records() {
            w.write_record([
                rec.interest_id.as_str(),
                rec.interest_name.as_str(),
                rec.ideology.label(),
                rec.subgroup.category().label(),
                rec.subgroup.label(),
                &rec.count.to_string(),
            ])
            .map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::io("<writer>", e))?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(
        id: &str,
        ideology: IdeologyBucket,
        category: DemographicCategory,
        label: &str,
        count: u64,
    ) -> ReachRecord {
        ReachRecord {
            interest_id: id.to_string(),
            interest_name: format!("Interest {id}"),
            ideology: ideology,
            subgroup: DemographicSubgroup::new(category, label).unwrap(),
            count,
        }
    }

    fn marginal_rec(id: &str, ideology: IdeologyBucket, count: u64) -> ReachRecord {
        rec(id, ideology, DemographicCategory::Marginal, "all", count)
    }

    #[test]
    fn ingest_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reach.csv");
        std::fs::write(
            &path,
            "interest_id,interest_name,ideology,demo_category,demo_subgroup,count\n\
             i1,\"Jazz, modern\",very_liberal,none,all,10\n\
             i1,\"Jazz, modern\",very_conservative,none,all,4\n\
             i2,Chess,any,none,all,100\n",
        )
        .unwrap();
        let table = ReachTable::ingest_reach(&path).unwrap();
        assert_eq!(table.record_count(), 3);
        assert_eq!(table.interest_count(), 2);
        assert_eq!(
            table.count("i1", IdeologyBucket::VeryLiberal, DemographicSubgroup::marginal()),
            Some(10)
        );
        assert_eq!(table.interest_name("i1"), Some("Jazz, modern"));
    }

    #[test]
    fn ingest_rejects_unknown_ideology() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reach.csv");
        std::fs::write(
            &path,
            "interest_id,interest_name,ideology,demo_category,demo_subgroup,count\n\
             i1,X,centrist,none,all,10\n",
        )
        .unwrap();
        let err = ReachTable::ingest_reach(&path).unwrap_err();
        match err {
            Error::UnknownLabel { kind, label, line } => {
                assert_eq!(kind, "ideology");
                assert_eq!(label, "centrist");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_duplicate_key() {
        let result = ReachTable::from_records([
            marginal_rec("i1", IdeologyBucket::Any, 5),
            marginal_rec("i1", IdeologyBucket::Any, 7),
        ]);
        assert!(matches!(result, Err(Error::DuplicateKey { .. })));
    }

    #[test]
    fn ingest_rejects_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reach.csv");
        std::fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        assert!(matches!(
            ReachTable::ingest_reach(&path),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn binarize_sums_somewhat_and_very() {
        let mut table = ReachTable::from_records([
            marginal_rec("i1", IdeologyBucket::VeryLiberal, 10),
            marginal_rec("i1", IdeologyBucket::SomewhatLiberal, 20),
            marginal_rec("i1", IdeologyBucket::Moderate, 5),
            marginal_rec("i1", IdeologyBucket::SomewhatConservative, 3),
            marginal_rec("i1", IdeologyBucket::VeryConservative, 7),
        ])
        .unwrap();
        table.binarize_ideology();
        assert_eq!(table.lc("i1", DemographicSubgroup::marginal()), Some((30, 10)));
        // Moderate count preserved, unused by L/C.
        assert_eq!(
            table.count("i1", IdeologyBucket::Moderate, DemographicSubgroup::marginal()),
            Some(5)
        );
    }

    #[test]
    fn binarize_zero_and_single_bucket_cases() {
        let mut table = ReachTable::from_records([
            marginal_rec("z", IdeologyBucket::VeryLiberal, 0),
            marginal_rec("z", IdeologyBucket::SomewhatLiberal, 0),
            marginal_rec("z", IdeologyBucket::Moderate, 0),
            marginal_rec("z", IdeologyBucket::SomewhatConservative, 0),
            marginal_rec("z", IdeologyBucket::VeryConservative, 0),
            marginal_rec("s", IdeologyBucket::SomewhatConservative, 1),
        ])
        .unwrap();
        table.binarize_ideology();
        assert_eq!(table.lc("z", DemographicSubgroup::marginal()), Some((0, 0)));
        assert_eq!(table.lc("s", DemographicSubgroup::marginal()), Some((0, 1)));
    }

    #[test]
    fn binarize_is_idempotent() {
        let mut table = ReachTable::from_records([
            marginal_rec("i1", IdeologyBucket::VeryLiberal, 13),
            marginal_rec("i1", IdeologyBucket::VeryConservative, 8),
        ])
        .unwrap();
        table.binarize_ideology();
        let first = table.lc("i1", DemographicSubgroup::marginal());
        table.binarize_ideology();
        assert_eq!(first, table.lc("i1", DemographicSubgroup::marginal()));
    }

    #[test]
    fn estimate_white_hand_case() {
        let race = DemographicCategory::RaceEthnicity;
        let mut table = ReachTable::from_records([
            marginal_rec("i1", IdeologyBucket::Any, 1000),
            rec("i1", IdeologyBucket::Any, race, "asian", 100),
            rec("i1", IdeologyBucket::Any, race, "black", 200),
            rec("i1", IdeologyBucket::Any, race, "hispanic", 100),
        ])
        .unwrap();
        let derived = table.estimate_white(0.12);
        assert_eq!(derived, 1);
        let white = DemographicSubgroup::new(race, "white").unwrap();
        // 1000 - 100 - 0.88*200 - 0.88*100 = 636
        assert_eq!(table.count("i1", IdeologyBucket::Any, white), Some(636));
    }

    #[test]
    fn estimate_white_clamps_negative() {
        let race = DemographicCategory::RaceEthnicity;
        let mut table = ReachTable::from_records([
            marginal_rec("i1", IdeologyBucket::Any, 100),
            rec("i1", IdeologyBucket::Any, race, "asian", 0),
            rec("i1", IdeologyBucket::Any, race, "black", 150),
            rec("i1", IdeologyBucket::Any, race, "hispanic", 0),
        ])
        .unwrap();
        table.estimate_white(0.12);
        let white = DemographicSubgroup::new(race, "white").unwrap();
        // raw = 100 - 132 = -32, clamped
        assert_eq!(table.count("i1", IdeologyBucket::Any, white), Some(0));
        assert!(table.warnings().iter().any(|w| w.code == "white_clamped"));
    }

    #[test]
    fn estimate_white_rate_zero_is_plain_subtraction() {
        let race = DemographicCategory::RaceEthnicity;
        let mut table = ReachTable::from_records([
            marginal_rec("i1", IdeologyBucket::Any, 500),
            rec("i1", IdeologyBucket::Any, race, "asian", 50),
            rec("i1", IdeologyBucket::Any, race, "black", 150),
            rec("i1", IdeologyBucket::Any, race, "hispanic", 100),
        ])
        .unwrap();
        table.estimate_white(0.0);
        let white = DemographicSubgroup::new(race, "white").unwrap();
        assert_eq!(table.count("i1", IdeologyBucket::Any, white), Some(200));
    }

    #[test]
    fn estimate_white_reports_missing_marginal() {
        let race = DemographicCategory::RaceEthnicity;
        let mut table = ReachTable::from_records([rec(
            "i1",
            IdeologyBucket::Any,
            race,
            "black",
            50,
        )])
        .unwrap();
        let derived = table.estimate_white(0.12);
        assert_eq!(derived, 0);
        assert!(table
            .warnings()
            .iter()
            .any(|w| w.code == "white_missing_marginal"));
    }

    #[test]
    fn filter_political_drops_apolitical_interests() {
        let mut table = ReachTable::from_records([
            marginal_rec("keep", IdeologyBucket::VeryLiberal, 1),
            marginal_rec("keep", IdeologyBucket::Any, 10),
            marginal_rec("drop", IdeologyBucket::Moderate, 9),
            marginal_rec("drop", IdeologyBucket::Any, 10),
        ])
        .unwrap();
        let removed = table.filter_political();
        assert_eq!(removed, 1);
        assert!(table.contains("keep"));
        assert!(!table.contains("drop"));
    }

    #[test]
    fn filter_political_mixed_table() {
        let mut records = Vec::new();
        for (id, l, c) in [("a", 3, 1), ("b", 0, 0), ("c", 1, 0), ("d", 0, 0), ("e", 2, 2)] {
            records.push(marginal_rec(id, IdeologyBucket::VeryLiberal, l));
            records.push(marginal_rec(id, IdeologyBucket::VeryConservative, c));
        }
        let mut table = ReachTable::from_records(records).unwrap();
        assert_eq!(table.filter_political(), 2);
        assert_eq!(table.interest_count(), 3);
    }

    #[test]
    fn flag_censored_equality_and_boundaries() {
        let mut table = ReachTable::from_records([
            marginal_rec("a", IdeologyBucket::Any, 20),
            marginal_rec("b", IdeologyBucket::Any, 21),
            marginal_rec("c", IdeologyBucket::Any, 19),
        ])
        .unwrap();
        let flags = table.flag_censored(20);
        assert_eq!(flags, 2);
        let m = DemographicSubgroup::marginal();
        assert!(table.is_censored("a", IdeologyBucket::Any, m));
        assert!(!table.is_censored("b", IdeologyBucket::Any, m));
        assert!(table.is_censored("c", IdeologyBucket::Any, m));
        assert!(table.warnings().iter().any(|w| w.code == "below_censor_floor"));
        // counts not modified
        assert_eq!(table.count("a", IdeologyBucket::Any, m), Some(20));
        assert_eq!(table.count("c", IdeologyBucket::Any, m), Some(19));
    }

    #[test]
    fn l_plus_c_bounded_by_bucket_total() {
        let mut table = ReachTable::from_records([
            marginal_rec("i", IdeologyBucket::VeryLiberal, 7),
            marginal_rec("i", IdeologyBucket::SomewhatLiberal, 3),
            marginal_rec("i", IdeologyBucket::Moderate, 2),
            marginal_rec("i", IdeologyBucket::SomewhatConservative, 1),
            marginal_rec("i", IdeologyBucket::VeryConservative, 4),
        ])
        .unwrap();
        table.binarize_ideology();
        let (l, c) = table.lc("i", DemographicSubgroup::marginal()).unwrap();
        let total: u64 = [
            IdeologyBucket::VeryLiberal,
            IdeologyBucket::SomewhatLiberal,
            IdeologyBucket::Moderate,
            IdeologyBucket::SomewhatConservative,
            IdeologyBucket::VeryConservative,
        ]
        .iter()
        .map(|&b| table.count("i", b, DemographicSubgroup::marginal()).unwrap())
        .sum();
        assert!(l + c <= total);
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let mut table = ReachTable::from_records([
            marginal_rec("i2", IdeologyBucket::Any, 50),
            marginal_rec("i1", IdeologyBucket::VeryLiberal, 10),
            rec(
                "i1",
                IdeologyBucket::Any,
                DemographicCategory::Gender,
                "female",
                30,
            ),
            marginal_rec("i1", IdeologyBucket::Any, 60),
        ])
        .unwrap();
        table.binarize_ideology();
        let mut first = Vec::new();
        table.write_csv(&mut first).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reach.csv");
        std::fs::write(&path, &first).unwrap();
        let reloaded = ReachTable::ingest_reach(&path).unwrap();
        let mut second = Vec::new();
        reloaded.write_csv(&mut second).unwrap();
        assert_eq!(first, second);
        assert_eq!(reloaded.record_count(), table.record_count());
    }

    #[test]
    fn subgroup_canonical_sets() {
        assert!(DemographicSubgroup::new(DemographicCategory::Age, "58-100").is_ok());
        assert!(DemographicSubgroup::new(DemographicCategory::Age, "57-100").is_err());
        assert_eq!(DemographicSubgroup::all().count(), SUBGROUP_SLOTS);
        assert_eq!(
            DemographicSubgroup::in_category(DemographicCategory::Income).len(),
            4
        );
    }
}
