//! Interview/code data model, file parsers and descriptive statistics.
//!
//! Three CSV layouts are accepted (UTF-8, comma separated, header row
//! mandatory, unknown columns rejected):
//!
//! * wide: `interview_id,seq,<code>,<code>,...` with one 0/1 cell per code;
//! * long: a manifest `interview_id,seq` listing every interview (including
//!   ones that elicited nothing) plus an elicitation list `seq,code_id`;
//! * grouped: `start_seq,end_seq,codes_count`, one row per block of
//!   consecutive interviews.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("no interviews")]
    NoInterviews,
    #[error("no groups")]
    NoGroups,
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}: unknown column \"{column}\" (expected {expected})")]
    UnknownColumn {
        line: u64,
        column: String,
        expected: &'static str,
    },
    #[error("line {line}: missing column \"{column}\"")]
    MissingColumn { line: u64, column: &'static str },
    #[error("line {line}, column \"{column}\": duplicate code id \"{code}\"")]
    DuplicateCode {
        line: u64,
        column: String,
        code: String,
    },
    #[error("line {line}, column \"{column}\": non-binary cell \"{value}\"")]
    NonBinaryCell {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}, column \"{column}\": invalid integer \"{value}\"")]
    InvalidInteger {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("duplicate seq {seq}")]
    DuplicateSeq { seq: usize },
    #[error("non-contiguous seq: expected {expected}, found {found}")]
    NonContiguousSeq { expected: usize, found: usize },
    #[error("code \"{code}\" is never elicited")]
    PhantomCode { code: String },
    #[error("elicitation matrix has {got} cells in row {row}, expected {expected}")]
    RowWidth {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("line {line}, column \"seq\": unknown seq {seq}")]
    UnknownSeq { line: u64, seq: usize },
    #[error("line {line}: duplicate elicitation of code \"{code}\" at seq {seq}")]
    DuplicateElicitation { line: u64, seq: usize, code: String },
    #[error("line {line}, column \"codes_count\": negative count {value}")]
    NegativeCount { line: u64, value: i64 },
    #[error("line {line}: end_seq {end} precedes start_seq {start}")]
    InvertedGroup { line: u64, start: usize, end: usize },
    #[error("gap at seq {seq}")]
    GroupGap { seq: usize },
    #[error("overlap at seq {seq}")]
    GroupOverlap { seq: usize },
    #[error("interview sequence is empty")]
    EmptySequence,
}

/// One row of the interview manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interview {
    pub id: String,
    pub seq: usize,
}

/// Interview-by-code elicitation indicators.
///
/// Rows are stored in chronological order (`seq` = 1..J). The recapture
/// indicator for a cell is set iff the code is elicited there and was
/// elicited at some earlier interview; it is derived at construction and
/// cannot be set independently.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElicitationMatrix {
    interviews: Vec<Interview>,
    codes: Vec<String>,
    elicited: Vec<Vec<bool>>,
    recaptured: Vec<Vec<bool>>,
}

impl ElicitationMatrix {
    /// Builds a matrix from rows in any order. Rows are sorted by `seq`,
    /// which must then read exactly 1..J.
    pub fn new(
        interviews: Vec<Interview>,
        codes: Vec<String>,
        elicited: Vec<Vec<bool>>,
    ) -> Result<Self, DatasetError> {
        if interviews.is_empty() {
            return Err(DatasetError::NoInterviews);
        }
        if interviews.len() != elicited.len() {
            return Err(DatasetError::RowWidth {
                row: elicited.len(),
                got: elicited.len(),
                expected: interviews.len(),
            });
        }
        let mut seen = HashSet::new();
        for code in &codes {
            if !seen.insert(code.as_str()) {
                return Err(DatasetError::DuplicateCode {
                    line: 1,
                    column: code.clone(),
                    code: code.clone(),
                });
            }
        }
        for (row, cells) in elicited.iter().enumerate() {
            if cells.len() != codes.len() {
                return Err(DatasetError::RowWidth {
                    row: row + 1,
                    got: cells.len(),
                    expected: codes.len(),
                });
            }
        }

        let mut rows: Vec<(Interview, Vec<bool>)> = interviews.into_iter().zip(elicited).collect();
        rows.sort_by_key(|(interview, _)| interview.seq);
        check_contiguous(rows.iter().map(|(interview, _)| interview.seq))?;

        let (interviews, elicited): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        for (k, code) in codes.iter().enumerate() {
            if !elicited.iter().any(|row| row[k]) {
                return Err(DatasetError::PhantomCode { code: code.clone() });
            }
        }
        let recaptured = derive_recaptured(&elicited, codes.len());
        Ok(Self {
            interviews,
            codes,
            elicited,
            recaptured,
        })
    }

    /// Builds a matrix from chronologically ordered `(interview_id, codes)`
    /// entries. Codes are ordered by first elicitation; repeated ids within
    /// one entry are counted once.
    pub fn from_entries<I, S, C>(entries: I) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = (S, C)>,
        S: Into<String>,
        C: IntoIterator,
        C::Item: AsRef<str>,
    {
        let mut codes: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut interviews = Vec::new();
        let mut sets: Vec<Vec<usize>> = Vec::new();
        for (j, (id, elicited)) in entries.into_iter().enumerate() {
            interviews.push(Interview {
                id: id.into(),
                seq: j + 1,
            });
            let mut row = Vec::new();
            for code in elicited {
                let code = code.as_ref();
                let k = *index.entry(code.to_owned()).or_insert_with(|| {
                    codes.push(code.to_owned());
                    codes.len() - 1
                });
                row.push(k);
            }
            sets.push(row);
        }
        let elicited = sets
            .into_iter()
            .map(|row| {
                let mut cells = vec![false; codes.len()];
                for k in row {
                    cells[k] = true;
                }
                cells
            })
            .collect();
        Self::new(interviews, codes, elicited)
    }

    pub fn interviews(&self) -> &[Interview] {
        &self.interviews
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    /// Number of interviews, J.
    pub fn interview_count(&self) -> usize {
        self.interviews.len()
    }

    /// Number of distinct codes, K.
    pub fn code_count(&self) -> usize {
        self.codes.len()
    }

    /// Elicitation rows in seq order.
    pub fn elicited(&self) -> &[Vec<bool>] {
        &self.elicited
    }

    /// Recapture rows in seq order.
    pub fn recaptured(&self) -> &[Vec<bool>] {
        &self.recaptured
    }

    pub fn code_index(&self, code: &str) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }

    /// `(E, R)` for the interview at `seq` (1-based) and the named code.
    pub fn cell(&self, seq: usize, code: &str) -> Option<(bool, bool)> {
        let k = self.code_index(code)?;
        let row = seq.checked_sub(1)?;
        Some((*self.elicited.get(row)?.get(k)?, self.recaptured[row][k]))
    }

    /// Code ids elicited at the interview at 0-based row `row`.
    pub fn row_codes(&self, row: usize) -> impl Iterator<Item = &str> + '_ {
        self.elicited[row]
            .iter()
            .zip(&self.codes)
            .filter(|(e, _)| **e)
            .map(|(_, c)| c.as_str())
    }

    /// Recomputes recapture indicators from the elicitation indicators.
    pub fn derive_recaptured(&self) -> Vec<Vec<bool>> {
        derive_recaptured(&self.elicited, self.codes.len())
    }
}

fn derive_recaptured(elicited: &[Vec<bool>], width: usize) -> Vec<Vec<bool>> {
    let mut seen = vec![false; width];
    elicited
        .iter()
        .map(|row| {
            let recap: Vec<bool> = row.iter().zip(&seen).map(|(e, s)| *e && *s).collect();
            for (s, e) in seen.iter_mut().zip(row) {
                *s |= *e;
            }
            recap
        })
        .collect()
}

fn check_contiguous(seqs: impl Iterator<Item = usize>) -> Result<(), DatasetError> {
    for (expected, seq) in (1..).zip(seqs) {
        if seq + 1 == expected {
            return Err(DatasetError::DuplicateSeq { seq });
        }
        if seq != expected {
            return Err(DatasetError::NonContiguousSeq {
                expected,
                found: seq,
            });
        }
    }
    Ok(())
}

/// New-code counts per interview in chronological order; the KM input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct InterviewSequence {
    new_codes: Vec<u32>,
}

impl InterviewSequence {
    pub fn new(new_codes: Vec<u32>) -> Result<Self, DatasetError> {
        if new_codes.is_empty() {
            return Err(DatasetError::EmptySequence);
        }
        Ok(Self { new_codes })
    }

    /// A sequence from a 0/1 pattern (`true` = at least one new code).
    pub fn from_pattern(pattern: &[bool]) -> Result<Self, DatasetError> {
        Self::new(pattern.iter().map(|&b| u32::from(b)).collect())
    }

    pub fn new_codes(&self) -> &[u32] {
        &self.new_codes
    }

    /// J.
    pub fn len(&self) -> usize {
        self.new_codes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `true` for interviews with at least one new code.
    pub fn pattern(&self) -> Vec<bool> {
        self.new_codes.iter().map(|&n| n > 0).collect()
    }

    pub fn total_new_codes(&self) -> u64 {
        self.new_codes.iter().map(|&n| u64::from(n)).sum()
    }
}

impl TryFrom<Vec<u32>> for InterviewSequence {
    type Error = DatasetError;

    fn try_from(value: Vec<u32>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<InterviewSequence> for Vec<u32> {
    fn from(value: InterviewSequence) -> Self {
        value.new_codes
    }
}

/// N_j = number of codes first elicited at interview j.
pub fn derive_sequence(matrix: &ElicitationMatrix) -> InterviewSequence {
    let new_codes = (0..matrix.interview_count())
        .map(|row| {
            matrix.elicited[row]
                .iter()
                .zip(&matrix.recaptured[row])
                .filter(|(e, r)| **e && !**r)
                .count() as u32
        })
        .collect();
    InterviewSequence { new_codes }
}

impl From<&ElicitationMatrix> for InterviewSequence {
    fn from(matrix: &ElicitationMatrix) -> Self {
        derive_sequence(matrix)
    }
}

/// Per-code elicitation totals M_k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeFrequencyTable {
    counts: Vec<(String, u32)>,
}

impl CodeFrequencyTable {
    pub fn new(counts: Vec<(String, u32)>) -> Self {
        Self { counts }
    }

    /// Totals over the whole matrix.
    pub fn from_matrix(matrix: &ElicitationMatrix) -> Self {
        Self::through(matrix, matrix.interview_count())
    }

    /// Totals over interviews 1..=`seq`.
    pub fn through(matrix: &ElicitationMatrix, seq: usize) -> Self {
        let rows = &matrix.elicited[..seq.min(matrix.interview_count())];
        let counts = matrix
            .codes
            .iter()
            .enumerate()
            .map(|(k, code)| {
                (
                    code.clone(),
                    rows.iter().filter(|row| row[k]).count() as u32,
                )
            })
            .collect();
        Self { counts }
    }

    pub fn counts(&self) -> &[(String, u32)] {
        &self.counts
    }

    /// D: codes observed at least once.
    pub fn distinct(&self) -> u64 {
        self.counts.iter().filter(|(_, m)| *m >= 1).count() as u64
    }

    /// n: elicitation events with multiplicity.
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|(_, m)| u64::from(*m)).sum()
    }

    /// f1: codes observed exactly once.
    pub fn singletons(&self) -> u64 {
        self.counts.iter().filter(|(_, m)| *m == 1).count() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; absent below two observations.
    pub std_dev: Option<f64>,
}

impl Summary {
    pub fn of(values: &[u32]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n,
                mean: 0.0,
                median: 0.0,
                std_dev: None,
            };
        }
        let xs: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let std_dev = (n > 1).then(|| {
            let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Self {
            n,
            mean,
            median,
            std_dev,
        }
    }
}

/// Marked/recapture summaries of a matrix.
///
/// * marked: per interview, codes elicited there for the first time;
/// * total: per interview, all codes elicited there;
/// * recaptures: per code, elicitations after the first (M_k − 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub marked_per_interview: Vec<u32>,
    pub total_per_interview: Vec<u32>,
    pub recaptures_per_code: Vec<(String, u32)>,
    pub marked: Summary,
    pub recaptures: Summary,
    /// recapture count -> number of codes with that count
    pub recapture_frequency: BTreeMap<u32, u32>,
}

pub fn descriptive_stats(matrix: &ElicitationMatrix) -> DescriptiveStats {
    let marked_per_interview = derive_sequence(matrix).new_codes;
    let total_per_interview: Vec<u32> = matrix
        .elicited
        .iter()
        .map(|row| row.iter().filter(|e| **e).count() as u32)
        .collect();
    let recaptures_per_code: Vec<(String, u32)> = matrix
        .codes
        .iter()
        .enumerate()
        .map(|(k, code)| {
            let r = matrix.recaptured.iter().filter(|row| row[k]).count() as u32;
            (code.clone(), r)
        })
        .collect();
    let recap_counts: Vec<u32> = recaptures_per_code.iter().map(|(_, r)| *r).collect();
    let mut recapture_frequency = BTreeMap::new();
    for r in &recap_counts {
        *recapture_frequency.entry(*r).or_insert(0) += 1;
    }
    DescriptiveStats {
        marked: Summary::of(&marked_per_interview),
        recaptures: Summary::of(&recap_counts),
        marked_per_interview,
        total_per_interview,
        recaptures_per_code,
        recapture_frequency,
    }
}

/// A block of consecutive interviews with a published code count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub start_seq: usize,
    pub end_seq: usize,
    pub codes_count: u32,
}

impl Group {
    pub fn width(&self) -> usize {
        self.end_seq - self.start_seq + 1
    }
}

/// Groups tiling 1..J contiguously.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupedCounts {
    groups: Vec<Group>,
}

impl GroupedCounts {
    pub fn new(mut groups: Vec<Group>) -> Result<Self, DatasetError> {
        if groups.is_empty() {
            return Err(DatasetError::NoGroups);
        }
        groups.sort_by_key(|g| (g.start_seq, g.end_seq));
        let mut next = 1;
        for g in &groups {
            if g.end_seq < g.start_seq {
                return Err(DatasetError::InvertedGroup {
                    line: 0,
                    start: g.start_seq,
                    end: g.end_seq,
                });
            }
            if g.start_seq > next {
                return Err(DatasetError::GroupGap { seq: next });
            }
            if g.start_seq < next {
                return Err(DatasetError::GroupOverlap { seq: g.start_seq });
            }
            next = g.end_seq + 1;
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    /// Total interviews covered, J.
    pub fn interview_count(&self) -> usize {
        self.groups.last().map_or(0, |g| g.end_seq)
    }
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

fn csv_error(err: csv::Error) -> DatasetError {
    let line = err.position().map_or(0, |p| p.line());
    DatasetError::Csv {
        line,
        message: err.to_string(),
    }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads the header row and checks it starts with `expected` (in order).
/// Returns the header and the remaining records.
fn read_table(
    bytes: &[u8],
    expected: &'static [&'static str],
    expected_desc: &'static str,
    open_ended: bool,
) -> Result<Option<(csv::StringRecord, Vec<csv::StringRecord>)>, DatasetError> {
    let mut rdr = reader(bytes);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Ok(None),
        Some(rec) => rec.map_err(csv_error)?,
    };
    for (i, name) in expected.iter().enumerate() {
        match header.get(i) {
            None => {
                return Err(DatasetError::MissingColumn {
                    line: 1,
                    column: name,
                })
            }
            Some(col) if col != *name => {
                return Err(DatasetError::UnknownColumn {
                    line: 1,
                    column: col.to_owned(),
                    expected: expected_desc,
                })
            }
            Some(_) => {}
        }
    }
    if !open_ended && header.len() > expected.len() {
        return Err(DatasetError::UnknownColumn {
            line: 1,
            column: header[expected.len()].to_owned(),
            expected: expected_desc,
        });
    }
    let body = records
        .filter(|rec| !matches!(rec, Ok(r) if r.len() == 1 && r[0].is_empty()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(csv_error)?;
    Ok(Some((header, body)))
}

fn parse_index(
    record: &csv::StringRecord,
    i: usize,
    column: &'static str,
) -> Result<usize, DatasetError> {
    let raw = record.get(i).unwrap_or("");
    raw.parse::<usize>()
        .map_err(|_| DatasetError::InvalidInteger {
            line: line_of(record),
            column,
            value: raw.to_owned(),
        })
}

fn parse_seq(record: &csv::StringRecord, i: usize) -> Result<usize, DatasetError> {
    let seq = parse_index(record, i, "seq")?;
    if seq == 0 {
        return Err(DatasetError::InvalidInteger {
            line: line_of(record),
            column: "seq",
            value: "0".into(),
        });
    }
    Ok(seq)
}

/// Parses the wide layout `interview_id,seq,<code>...`.
pub fn parse_wide(bytes: &[u8]) -> Result<ElicitationMatrix, DatasetError> {
    let Some((header, body)) = read_table(
        bytes,
        &["interview_id", "seq"],
        "interview_id,seq,<code ids>",
        true,
    )?
    else {
        return Err(DatasetError::NoInterviews);
    };
    let codes: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for code in &codes {
        if !seen.insert(code.as_str()) {
            return Err(DatasetError::DuplicateCode {
                line: 1,
                column: code.clone(),
                code: code.clone(),
            });
        }
    }
    if body.is_empty() {
        return Err(DatasetError::NoInterviews);
    }

    let mut interviews = Vec::with_capacity(body.len());
    let mut elicited = Vec::with_capacity(body.len());
    for record in &body {
        let line = line_of(record);
        if record.len() != header.len() {
            return Err(DatasetError::Csv {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let seq = parse_seq(record, 1)?;
        let cells = record
            .iter()
            .skip(2)
            .zip(&codes)
            .map(|(cell, code)| match cell {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(DatasetError::NonBinaryCell {
                    line,
                    column: code.clone(),
                    value: other.to_owned(),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        interviews.push(Interview {
            id: record[0].to_owned(),
            seq,
        });
        elicited.push(cells);
    }
    ElicitationMatrix::new(interviews, codes, elicited)
}

/// Parses the long layout: manifest `interview_id,seq` and elicitations
/// `seq,code_id`. Codes are ordered by first elicitation.
pub fn parse_long(
    interviews: &[u8],
    elicitations: &[u8],
) -> Result<ElicitationMatrix, DatasetError> {
    let Some((_, manifest)) = read_table(
        interviews,
        &["interview_id", "seq"],
        "interview_id,seq",
        false,
    )?
    else {
        return Err(DatasetError::NoInterviews);
    };
    if manifest.is_empty() {
        return Err(DatasetError::NoInterviews);
    }
    let mut rows = Vec::with_capacity(manifest.len());
    for record in &manifest {
        rows.push(Interview {
            id: record.get(0).unwrap_or("").to_owned(),
            seq: parse_seq(record, 1)?,
        });
    }
    rows.sort_by_key(|i| i.seq);
    check_contiguous(rows.iter().map(|i| i.seq))?;
    let j_max = rows.len();

    let pairs = match read_table(elicitations, &["seq", "code_id"], "seq,code_id", false)? {
        Some((_, body)) => body,
        None => Vec::new(),
    };
    let mut seen_pairs = HashSet::new();
    let mut by_seq: Vec<Vec<(u64, String)>> = vec![Vec::new(); j_max];
    for record in &pairs {
        let line = line_of(record);
        let seq = parse_seq(record, 0)?;
        let code = record.get(1).unwrap_or("").to_owned();
        if seq > j_max {
            return Err(DatasetError::UnknownSeq { line, seq });
        }
        if !seen_pairs.insert((seq, code.clone())) {
            return Err(DatasetError::DuplicateElicitation { line, seq, code });
        }
        by_seq[seq - 1].push((line, code));
    }

    let entries = rows
        .into_iter()
        .zip(by_seq)
        .map(|(interview, codes)| (interview.id, codes.into_iter().map(|(_, c)| c)));
    ElicitationMatrix::from_entries(entries)
}

/// Parses `start_seq,end_seq,codes_count` rows.
pub fn parse_grouped(bytes: &[u8]) -> Result<GroupedCounts, DatasetError> {
    let Some((_, body)) = read_table(
        bytes,
        &["start_seq", "end_seq", "codes_count"],
        "start_seq,end_seq,codes_count",
        false,
    )?
    else {
        return Err(DatasetError::NoGroups);
    };
    let mut groups = Vec::with_capacity(body.len());
    for record in &body {
        let line = line_of(record);
        let start = parse_index(record, 0, "start_seq")?;
        let end = parse_index(record, 1, "end_seq")?;
        let raw = record.get(2).unwrap_or("");
        let count: i64 = raw.parse().map_err(|_| DatasetError::InvalidInteger {
            line,
            column: "codes_count",
            value: raw.to_owned(),
        })?;
        if count < 0 {
            return Err(DatasetError::NegativeCount { line, value: count });
        }
        if end < start || start == 0 {
            return Err(DatasetError::InvertedGroup { line, start, end });
        }
        groups.push(Group {
            start_seq: start,
            end_seq: end,
            codes_count: u32::try_from(count).map_err(|_| DatasetError::InvalidInteger {
                line,
                column: "codes_count",
                value: raw.to_owned(),
            })?,
        });
    }
    GroupedCounts::new(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Five-interview fragment, elicitation indicators only. Reference (E,R) pairs:
    // A: (1,0) (0,0) (1,1) (1,1) (1,1)
    // B: (0,0) (0,0) (1,0) (1,1) (1,1)
    // C: (0,0) (1,0) (0,0) (0,0) (0,0)
    // K: (0,0) (1,1) (0,0) (0,0) (1,1)
    const FRAGMENT: &str = "interview_id,seq,A,B,C,K
aaaa,1,1,0,0,0
bbbb,2,0,0,1,1
cccc,3,1,1,0,0
dddd,4,1,1,0,0
eeee,5,1,1,0,1
";

    #[test]
    fn wide_two_rows_derives_recapture() {
        let m = parse_wide(b"interview_id,seq,A,B\naaaa,1,1,0\nbbbb,2,1,1\n").unwrap();
        assert_eq!(m.cell(2, "A"), Some((true, true)));
        assert_eq!(m.cell(2, "B"), Some((true, false)));
    }

    #[test]
    fn wide_rejects_gap_in_seq() {
        let err = parse_wide(b"interview_id,seq,A\naaaa,1,1\ncccc,3,1\n").unwrap_err();
        assert_eq!(
            err,
            DatasetError::NonContiguousSeq {
                expected: 2,
                found: 3
            }
        );
        assert!(err.to_string().contains("non-contiguous seq"));
    }

    #[test]
    fn wide_rejects_duplicate_seq_and_code() {
        let err = parse_wide(b"interview_id,seq,A\na,1,1\nb,1,1\n").unwrap_err();
        assert_eq!(err, DatasetError::DuplicateSeq { seq: 1 });
        let err = parse_wide(b"interview_id,seq,A,A\na,1,1,0\n").unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateCode { .. }));
    }

    #[test]
    fn wide_non_binary_cell_names_row_and_column() {
        let err = parse_wide(b"interview_id,seq,A,B\na,1,1,2\n").unwrap_err();
        assert_eq!(
            err,
            DatasetError::NonBinaryCell {
                line: 2,
                column: "B".into(),
                value: "2".into()
            }
        );
    }

    #[test]
    fn wide_rejects_unknown_leading_column() {
        let err = parse_wide(b"id,seq,A\na,1,1\n").unwrap_err();
        assert!(matches!(err, DatasetError::UnknownColumn { .. }));
    }

    #[test]
    fn empty_inputs_report_no_interviews() {
        assert_eq!(parse_wide(b"").unwrap_err(), DatasetError::NoInterviews);
        assert_eq!(
            parse_wide(b"interview_id,seq,A\n").unwrap_err(),
            DatasetError::NoInterviews
        );
    }

    #[test]
    fn rows_are_sorted_by_seq() {
        let m = parse_wide(b"interview_id,seq,A,B\nsecond,2,1,1\nfirst,1,1,0\n").unwrap();
        assert_eq!(m.interviews()[0].id, "first");
        assert_eq!(m.cell(2, "A"), Some((true, true)));
    }

    #[test]
    fn fragment_recaptures_match_reference_pairs() {
        let m = parse_wide(FRAGMENT.as_bytes()).unwrap();
        let code_a: Vec<_> = (1..=5).map(|j| m.cell(j, "A").unwrap()).collect();
        assert_eq!(
            code_a,
            vec![
                (true, false),
                (false, false),
                (true, true),
                (true, true),
                (true, true)
            ]
        );
        let code_b: Vec<_> = (1..=5).map(|j| m.cell(j, "B").unwrap()).collect();
        assert_eq!(
            code_b,
            vec![
                (false, false),
                (false, false),
                (true, false),
                (true, true),
                (true, true)
            ]
        );
        assert_eq!(m.cell(2, "C"), Some((true, false)));
        assert_eq!(m.cell(5, "K"), Some((true, true)));
        // The reference pair (1,1) for K at interview 2 is its first elicitation, so
        // the derived recapture flag is 0 there.
        assert_eq!(m.cell(2, "K"), Some((true, false)));
    }

    #[test]
    fn fragment_new_codes() {
        let m = parse_wide(FRAGMENT.as_bytes()).unwrap();
        let seq = derive_sequence(&m);
        assert_eq!(seq.new_codes(), &[1, 2, 1, 0, 0]);
        assert_eq!(m.row_codes(1).collect::<Vec<_>>(), vec!["C", "K"]);
    }

    #[test]
    fn fragment_code_a_recaptured_three_times() {
        let m = parse_wide(FRAGMENT.as_bytes()).unwrap();
        let stats = descriptive_stats(&m);
        assert_eq!(stats.recaptures_per_code[0], ("A".to_string(), 3));
    }

    #[test]
    fn phantom_code_rejected() {
        let err = parse_wide(b"interview_id,seq,A,Z\na,1,1,0\n").unwrap_err();
        assert_eq!(err, DatasetError::PhantomCode { code: "Z".into() });
    }

    #[test]
    fn long_basic() {
        let m = parse_long(
            b"interview_id,seq\ni1,1\ni2,2\n",
            b"seq,code_id\n1,A\n2,A\n2,B\n",
        )
        .unwrap();
        assert_eq!(m.row_codes(0).collect::<Vec<_>>(), vec!["A"]);
        assert_eq!(m.row_codes(1).collect::<Vec<_>>(), vec!["A", "B"]);
        assert_eq!(m.cell(2, "A"), Some((true, true)));
    }

    #[test]
    fn long_unknown_seq() {
        let err = parse_long(b"interview_id,seq\ni1,1\ni2,2\n", b"seq,code_id\n3,A\n").unwrap_err();
        assert_eq!(err, DatasetError::UnknownSeq { line: 2, seq: 3 });
        assert!(err.to_string().contains("unknown seq 3"));
    }

    #[test]
    fn long_duplicate_pair() {
        let err = parse_long(b"interview_id,seq\ni1,1\n", b"seq,code_id\n1,A\n1,A\n").unwrap_err();
        assert!(matches!(
            err,
            DatasetError::DuplicateElicitation { seq: 1, .. }
        ));
    }

    #[test]
    fn long_zero_code_interviews_are_all_zero_rows() {
        let m = parse_long(b"interview_id,seq\na,1\nb,2\nc,3\n", b"seq,code_id\n1,A\n").unwrap();
        assert_eq!(m.interview_count(), 3);
        assert_eq!(m.elicited()[1], vec![false]);
        assert_eq!(m.elicited()[2], vec![false]);
        assert_eq!(derive_sequence(&m).new_codes(), &[1, 0, 0]);
    }

    #[test]
    fn long_rejects_extra_columns() {
        let err = parse_long(b"interview_id,seq,site\na,1,x\n", b"seq,code_id\n").unwrap_err();
        assert!(matches!(err, DatasetError::UnknownColumn { .. }));
    }

    #[test]
    fn grouped_valid() {
        let g = parse_grouped(b"start_seq,end_seq,codes_count\n1,6,14\n7,12,8\n13,18,5\n").unwrap();
        assert_eq!(g.groups().len(), 3);
        assert_eq!(g.interview_count(), 18);
    }

    #[test]
    fn grouped_gap_overlap_negative() {
        let err = parse_grouped(b"start_seq,end_seq,codes_count\n1,6,3\n8,13,2\n").unwrap_err();
        assert_eq!(err.to_string(), "gap at seq 7");
        let err = parse_grouped(b"start_seq,end_seq,codes_count\n1,6,3\n6,13,2\n").unwrap_err();
        assert_eq!(err, DatasetError::GroupOverlap { seq: 6 });
        let err = parse_grouped(b"start_seq,end_seq,codes_count\n1,6,-1\n").unwrap_err();
        assert!(matches!(err, DatasetError::NegativeCount { value: -1, .. }));
    }

    #[test]
    fn grouped_degenerate_zero_count() {
        let g = parse_grouped(b"start_seq,end_seq,codes_count\n1,6,0\n").unwrap();
        assert_eq!(g.groups()[0].codes_count, 0);
        assert_eq!(g.groups()[0].width(), 6);
    }

    #[test]
    fn derive_sequence_examples() {
        let m = ElicitationMatrix::from_entries([
            ("i1", vec!["A", "B"]),
            ("i2", vec!["A", "C"]),
            ("i3", vec!["A"]),
        ])
        .unwrap();
        assert_eq!(derive_sequence(&m).new_codes(), &[2, 1, 0]);
        let m =
            ElicitationMatrix::from_entries((0..4).map(|i| (format!("i{i}"), vec!["A"]))).unwrap();
        assert_eq!(derive_sequence(&m).new_codes(), &[1, 0, 0, 0]);
    }

    #[test]
    fn descriptive_two_interviews() {
        let m = ElicitationMatrix::from_entries([("i1", vec!["A", "B"]), ("i2", vec!["A", "C"])])
            .unwrap();
        let s = descriptive_stats(&m);
        assert_eq!(s.marked_per_interview, vec![2, 1]);
        assert_eq!(s.total_per_interview, vec![2, 2]);
        assert_eq!(
            s.recaptures_per_code,
            vec![("A".into(), 1), ("B".into(), 0), ("C".into(), 0)]
        );
        assert_eq!(s.recapture_frequency, BTreeMap::from([(0, 2), (1, 1)]));
        assert_eq!(s.marked.mean, 1.5);
        assert_eq!(s.marked.median, 1.5);
    }

    #[test]
    fn descriptive_single_interview() {
        let m = ElicitationMatrix::from_entries([("i1", vec!["A"])]).unwrap();
        let s = descriptive_stats(&m);
        assert_eq!(s.marked_per_interview, vec![1]);
        assert!(s.recaptures_per_code.iter().all(|(_, r)| *r == 0));
        assert_eq!(s.marked.std_dev, None);
    }

    #[test]
    fn frequency_table_counts() {
        let t = CodeFrequencyTable::new(vec![
            ("A".into(), 2),
            ("B".into(), 1),
            ("C".into(), 1),
            ("Z".into(), 0),
        ]);
        assert_eq!((t.distinct(), t.total(), t.singletons()), (3, 4, 2));
    }

    #[test]
    fn empty_sequence_rejected() {
        assert_eq!(
            InterviewSequence::new(vec![]).unwrap_err(),
            DatasetError::EmptySequence
        );
    }
}
