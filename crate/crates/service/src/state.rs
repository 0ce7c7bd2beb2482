//! Session state derived from a log. Holds no statistics of its own: every
//! number comes from the `saturation` crate.

use serde::{Deserialize, Serialize};

use saturation::crc::per_interview_series;
use saturation::dataset::derive_sequence;
use saturation::export::matrix_csv;
use saturation::planner::{apply_rule, scenario_eval};
use saturation::survival::{km_estimate, saturation_summary};
use saturation::{
    ConfidenceInterval, CrcEstimate, ElicitationMatrix, InterviewSequence, KmCurve, KmOptions,
    ProjectionMethod, SaturationSummary, ScenarioRow, StoppingRule,
};

use crate::log::{Entry, SessionMeta};
use crate::StoreError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Latest {
    pub seq: usize,
    pub new_codes: u32,
    pub survival: f64,
    pub ci: Option<ConfidenceInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleStatus {
    pub rule: StoppingRule,
    pub stopped: bool,
    pub stop_seq: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub name: String,
    pub alpha: f64,
    pub created: String,
    /// J
    pub interviews: usize,
    pub entries: Vec<Entry>,
    pub new_codes: Vec<u32>,
    pub latest: Option<Latest>,
    pub curve: Option<KmCurve>,
    pub summary: Option<SaturationSummary>,
    pub crc: Vec<CrcEstimate>,
    /// Some entries gave only a count, so code identities are synthetic.
    pub crc_degraded: bool,
    pub rules: Vec<RuleStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub scenario: ScenarioRow,
    pub curve: KmCurve,
}

pub fn matrix(entries: &[Entry]) -> Result<Option<ElicitationMatrix>, StoreError> {
    if entries.is_empty() {
        return Ok(None);
    }
    ElicitationMatrix::from_entries(
        entries
            .iter()
            .map(|e| (e.interview_id.clone(), e.code_ids())),
    )
    .map(Some)
    .map_err(|e| StoreError::Invalid(e.to_string()))
}

pub fn derive(meta: &SessionMeta, entries: &[Entry]) -> Result<SessionState, StoreError> {
    let options = KmOptions::with_alpha(meta.alpha);
    let mut state = SessionState {
        session_id: meta.session_id.clone(),
        name: meta.name.clone(),
        alpha: meta.alpha,
        created: meta.created.clone(),
        interviews: entries.len(),
        entries: entries.to_vec(),
        new_codes: Vec::new(),
        latest: None,
        curve: None,
        summary: None,
        crc: Vec::new(),
        crc_degraded: entries.iter().any(Entry::is_count_only),
        rules: StoppingRule::standard()
            .into_iter()
            .map(|rule| RuleStatus {
                rule,
                stopped: false,
                stop_seq: None,
            })
            .collect(),
    };
    let Some(matrix) = matrix(entries)? else {
        return Ok(state);
    };

    let sequence = derive_sequence(&matrix);
    let curve = km_estimate(&sequence, &options).map_err(|e| StoreError::Invalid(e.to_string()))?;
    let last = curve.last();
    state.latest = Some(Latest {
        seq: last.seq,
        new_codes: *sequence.new_codes().last().expect("non-empty"),
        survival: last.survival,
        ci: last.ci,
    });
    state.summary = Some(saturation_summary(&curve));
    state.crc = per_interview_series(&matrix);
    state.rules = StoppingRule::standard()
        .into_iter()
        .map(|rule| {
            let decision = apply_rule(&sequence, rule);
            RuleStatus {
                rule,
                stopped: decision.stopped(),
                stop_seq: decision.stop_seq,
            }
        })
        .collect();
    state.new_codes = sequence.new_codes().to_vec();
    state.curve = Some(curve);
    Ok(state)
}

/// Evaluates the realized sequence followed by a hypothetical pattern.
pub fn what_if(
    meta: &SessionMeta,
    entries: &[Entry],
    pattern: &[bool],
    methods: &[ProjectionMethod],
) -> Result<WhatIf, StoreError> {
    let mut full: Vec<bool> = match matrix(entries)? {
        Some(m) => derive_sequence(&m).pattern(),
        None => Vec::new(),
    };
    full.extend_from_slice(pattern);
    if full.is_empty() {
        return Err(StoreError::Invalid(
            "no interviews and an empty pattern".into(),
        ));
    }
    let options = KmOptions::with_alpha(meta.alpha);
    let scenario =
        scenario_eval(&full, &options, methods).map_err(|e| StoreError::Invalid(e.to_string()))?;
    let sequence =
        InterviewSequence::from_pattern(&full).map_err(|e| StoreError::Invalid(e.to_string()))?;
    let curve = km_estimate(&sequence, &options).map_err(|e| StoreError::Invalid(e.to_string()))?;
    Ok(WhatIf { scenario, curve })
}

/// Wide CSV of the session's matrix, readable by the batch tools.
pub fn wide_csv(entries: &[Entry]) -> Result<String, StoreError> {
    Ok(match matrix(entries)? {
        Some(m) => matrix_csv(&m),
        None => "interview_id,seq\n".to_owned(),
    })
}
