//! Stopping rules, Type I error, grouped-count imputation and scenario
//! projections.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dataset::{DatasetError, GroupedCounts, InterviewSequence};
use crate::survival::{km_estimate, saturation_summary, ConfidenceInterval, KmError, KmOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("consecutive_zero needs k >= 1")]
    ZeroRun,
    #[error("unrecognised {kind} \"{value}\"")]
    Unrecognised { kind: &'static str, value: String },
    #[error("non-binary token \"{token}\" at line {line}")]
    NonBinaryToken { line: usize, token: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Km(#[from] KmError),
}

/// Deterministic rules for declaring saturation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoppingRule {
    /// Stop at the first zero-new-code interview.
    FirstZero,
    /// Stop at the k-th consecutive zero-new-code interview.
    ConsecutiveZero(u32),
    /// At least 10 interviews, the last 3 of them with zero new codes.
    TenPlusThree,
}

impl StoppingRule {
    pub fn consecutive_zero(k: u32) -> Result<Self, PlanError> {
        if k == 0 {
            return Err(PlanError::ZeroRun);
        }
        Ok(Self::ConsecutiveZero(k))
    }

    /// The rules reported alongside live session state.
    pub fn standard() -> [StoppingRule; 3] {
        [
            Self::FirstZero,
            Self::ConsecutiveZero(3),
            Self::TenPlusThree,
        ]
    }
}

impl fmt::Display for StoppingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FirstZero => f.write_str("first_zero"),
            Self::ConsecutiveZero(k) => write!(f, "consecutive_zero({k})"),
            Self::TenPlusThree => f.write_str("ten_plus_three"),
        }
    }
}

impl FromStr for StoppingRule {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "first_zero" => return Ok(Self::FirstZero),
            "ten_plus_three" | "10+3" => return Ok(Self::TenPlusThree),
            _ => {}
        }
        parameter(s, "consecutive_zero")
            .ok_or_else(|| PlanError::Unrecognised {
                kind: "stopping rule",
                value: s.to_owned(),
            })
            .and_then(Self::consecutive_zero)
    }
}

/// Parses `name(k)` or `name:k`.
fn parameter(s: &str, name: &str) -> Option<u32> {
    let rest = s.strip_prefix(name)?;
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .or_else(|| rest.strip_prefix(':'))?;
    inner.trim().parse().ok()
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(StoppingRule);
string_serde!(ProjectionMethod);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopDecision {
    /// First interview at which the rule fires.
    pub stop_seq: Option<usize>,
}

impl StopDecision {
    pub fn stopped(&self) -> bool {
        self.stop_seq.is_some()
    }
}

pub fn apply_rule(sequence: &InterviewSequence, rule: StoppingRule) -> StopDecision {
    let (run_needed, min_seq) = match rule {
        StoppingRule::FirstZero => (1, 1),
        StoppingRule::ConsecutiveZero(k) => (k, 1),
        StoppingRule::TenPlusThree => (3, 10),
    };
    let mut run = 0;
    let stop_seq = sequence.new_codes().iter().enumerate().find_map(|(i, &n)| {
        run = if n == 0 { run + 1 } else { 0 };
        let seq = i + 1;
        (run >= run_needed && seq >= min_seq).then_some(seq)
    });
    StopDecision { stop_seq }
}

/// How a stopping rule fares against the full observed sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Type1Report {
    pub rule: StoppingRule,
    pub decision: StopDecision,
    /// Stopped, yet a later interview elicited new codes.
    pub is_type1: bool,
    /// New codes elicited after the stop.
    pub missed_codes: u64,
    /// J - stop_seq; zero when the rule never fires.
    pub extra_interviews_needed: usize,
}

pub fn type1_assess(sequence: &InterviewSequence, rule: StoppingRule) -> Type1Report {
    let decision = apply_rule(sequence, rule);
    let (missed_codes, extra_interviews_needed) = match decision.stop_seq {
        Some(stop) => {
            let after = &sequence.new_codes()[stop..];
            (after.iter().map(|&n| u64::from(n)).sum(), after.len())
        }
        None => (0, 0),
    };
    Type1Report {
        rule,
        decision,
        is_type1: missed_codes > 0,
        missed_codes,
        extra_interviews_needed,
    }
}

/// Seed for randomised procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

/// Expands per-group counts into a per-interview sequence.
///
/// A group of width `w` with at least `w` codes gives every interview one
/// code and the surplus to the first interview. With fewer than `w` codes,
/// that many interviews are drawn uniformly without replacement to get one
/// code each; the rest get none.
pub fn impute_grouped(groups: &GroupedCounts, seed: Seed) -> InterviewSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let mut new_codes = Vec::with_capacity(groups.interview_count());
    for group in groups.groups() {
        let width = group.width();
        let count = group.codes_count as usize;
        let mut block = vec![0u32; width];
        if count >= width {
            block.fill(1);
            block[0] += (count - width) as u32;
        } else {
            for i in index::sample(&mut rng, width, count) {
                block[i] = 1;
            }
        }
        new_codes.extend(block);
    }
    InterviewSequence::new(new_codes).expect("groups are non-empty")
}

/// Ways of projecting how many more interviews bring S to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjectionMethod {
    /// `ceil(x) - J` where `x` is the upper-limit extrapolated zero.
    Extrapolation,
    /// Zero-new-code interviews still needed for a trailing run of `k`.
    RuleCompletion(u32),
}

impl ProjectionMethod {
    pub fn defaults() -> [ProjectionMethod; 2] {
        [Self::Extrapolation, Self::RuleCompletion(3)]
    }
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Extrapolation => f.write_str("extrapolation"),
            Self::RuleCompletion(k) => write!(f, "rule_completion({k})"),
        }
    }
}

impl FromStr for ProjectionMethod {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "extrapolation" {
            return Ok(Self::Extrapolation);
        }
        match parameter(s, "rule_completion") {
            Some(0) => Err(PlanError::ZeroRun),
            Some(k) => Ok(Self::RuleCompletion(k)),
            None => Err(PlanError::Unrecognised {
                kind: "projection method",
                value: s.to_owned(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub method: ProjectionMethod,
    /// Absent when the method has nothing to extrapolate from.
    pub additional_interviews: Option<u32>,
}

/// One row of a pragmatic sample-size table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub pattern: Vec<bool>,
    pub km_final: f64,
    pub ci: Option<ConfidenceInterval>,
    pub upper_ci_extrapolated_zero: Option<f64>,
    pub projections: Vec<Projection>,
}

pub fn scenario_eval(
    pattern: &[bool],
    options: &KmOptions,
    methods: &[ProjectionMethod],
) -> Result<ScenarioRow, PlanError> {
    let sequence = InterviewSequence::from_pattern(pattern)?;
    let curve = km_estimate(&sequence, options)?;
    let summary = saturation_summary(&curve);
    let last = curve.last();
    let j = pattern.len();
    let saturated = last.survival == 0.0;
    let trailing_zeros = pattern.iter().rev().take_while(|b| !**b).count();

    let projections = methods
        .iter()
        .map(|&method| {
            let additional_interviews = match method {
                _ if saturated => Some(0),
                ProjectionMethod::Extrapolation => summary
                    .upper_ci_extrapolated_zero
                    .map(|x| (x.ceil() - j as f64).max(0.0) as u32),
                ProjectionMethod::RuleCompletion(k) => {
                    Some((k as usize).saturating_sub(trailing_zeros) as u32)
                }
            };
            Projection {
                method,
                additional_interviews,
            }
        })
        .collect();

    Ok(ScenarioRow {
        pattern: pattern.to_vec(),
        km_final: last.survival,
        ci: last.ci,
        upper_ci_extrapolated_zero: summary.upper_ci_extrapolated_zero,
        projections,
    })
}

/// Parses one comma-separated 0/1 pattern. `line` is used in errors.
pub fn parse_pattern(text: &str, line: usize) -> Result<Vec<bool>, PlanError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|token| match token.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(PlanError::NonBinaryToken {
                line,
                token: other.to_owned(),
            }),
        })
        .collect()
}

/// Parses a scenario batch: one pattern per line, blank lines ignored.
pub fn parse_scenarios(text: &str) -> Result<Vec<Vec<bool>>, PlanError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_pattern(l, i + 1))
        .collect()
}

/// Published interview-count recommendations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Preset {
    pub methodology: &'static str,
    pub min_interviews: u32,
    pub max_interviews: Option<u32>,
}

pub fn presets() -> Vec<Preset> {
    let p = |methodology, min_interviews, max_interviews| Preset {
        methodology,
        min_interviews,
        max_interviews,
    };
    vec![
        p("ethnography", 30, Some(60)),
        p("grounded_theory", 30, Some(50)),
        p("phenomenology", 5, Some(25)),
        p("all_qualitative", 15, None),
        p("funded_research", 1, Some(95)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_grouped, Group};

    fn seq(bits: &[u32]) -> InterviewSequence {
        InterviewSequence::new(bits.to_vec()).unwrap()
    }

    fn bits(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&b| b == 1).collect()
    }

    const SCENARIO_1: [u8; 10] = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
    const SCENARIO_2: [u8; 10] = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
    const SCENARIO_3: [u8; 10] = [1, 0, 1, 0, 0, 1, 1, 0, 1, 0];

    #[test]
    fn first_zero_on_scenario_three() {
        let s = seq(&[1, 0, 1, 0, 0, 1, 1, 0, 1, 0]);
        assert_eq!(apply_rule(&s, StoppingRule::FirstZero).stop_seq, Some(2));
    }

    #[test]
    fn three_zeros_on_scenario_one() {
        let s = seq(&[1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
        assert_eq!(
            apply_rule(&s, StoppingRule::ConsecutiveZero(3)).stop_seq,
            Some(8)
        );
    }

    #[test]
    fn no_zeros_never_stops() {
        let s = seq(&[1, 1, 1]);
        for rule in StoppingRule::standard() {
            assert!(!apply_rule(&s, rule).stopped());
        }
    }

    #[test]
    fn ten_plus_three_needs_ten() {
        let s = seq(&[1, 0, 0, 0, 1, 1, 1, 0, 0, 0, 1]);
        assert_eq!(
            apply_rule(&s, StoppingRule::TenPlusThree).stop_seq,
            Some(10)
        );
        let s = seq(&[1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0]);
        assert_eq!(apply_rule(&s, StoppingRule::TenPlusThree).stop_seq, None);
    }

    #[test]
    fn type1_on_scenario_three() {
        let r = type1_assess(
            &seq(&[1, 0, 1, 0, 0, 1, 1, 0, 1, 0]),
            StoppingRule::FirstZero,
        );
        assert_eq!(r.decision.stop_seq, Some(2));
        assert!(r.is_type1);
        // new codes at seqs 3, 6, 7, 9
        assert_eq!(r.missed_codes, 4);
        assert_eq!(r.extra_interviews_needed, 8);
    }

    #[test]
    fn no_type1_when_nothing_follows() {
        let r = type1_assess(&seq(&[1, 1, 0]), StoppingRule::FirstZero);
        assert_eq!(r.decision.stop_seq, Some(3));
        assert!(!r.is_type1);
        assert_eq!(r.missed_codes, 0);
    }

    #[test]
    fn rule_parsing() {
        assert_eq!(
            "first_zero".parse::<StoppingRule>().unwrap(),
            StoppingRule::FirstZero
        );
        assert_eq!(
            "consecutive_zero(3)".parse::<StoppingRule>().unwrap(),
            StoppingRule::ConsecutiveZero(3)
        );
        assert_eq!(
            "consecutive_zero:2".parse::<StoppingRule>().unwrap(),
            StoppingRule::ConsecutiveZero(2)
        );
        assert_eq!(
            "10+3".parse::<StoppingRule>().unwrap(),
            StoppingRule::TenPlusThree
        );
        assert_eq!(
            "consecutive_zero(0)".parse::<StoppingRule>(),
            Err(PlanError::ZeroRun)
        );
        assert!("bogus".parse::<StoppingRule>().is_err());
    }

    #[test]
    fn impute_short_group_has_one_zero() {
        let g = GroupedCounts::new(vec![Group {
            start_seq: 1,
            end_seq: 6,
            codes_count: 5,
        }])
        .unwrap();
        for s in 0..50 {
            let out = impute_grouped(&g, Seed(s));
            assert_eq!(out.new_codes().iter().filter(|&&n| n == 0).count(), 1);
            assert_eq!(out.total_new_codes(), 5);
        }
    }

    #[test]
    fn impute_surplus_goes_to_first_interview() {
        let g = parse_grouped(b"start_seq,end_seq,codes_count\n1,6,14\n").unwrap();
        let out = impute_grouped(&g, Seed(7));
        assert_eq!(out.new_codes(), &[9, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn impute_zero_group() {
        let g = parse_grouped(b"start_seq,end_seq,codes_count\n1,6,0\n").unwrap();
        for s in [0, 1, u64::MAX] {
            assert_eq!(impute_grouped(&g, Seed(s)).new_codes(), &[0; 6]);
        }
    }

    #[test]
    fn impute_is_seeded() {
        let g = parse_grouped(b"start_seq,end_seq,codes_count\n1,6,2\n7,12,3\n13,18,1\n").unwrap();
        assert_eq!(impute_grouped(&g, Seed(42)), impute_grouped(&g, Seed(42)));
        let distinct: std::collections::HashSet<Vec<u32>> = (0..20)
            .map(|s| impute_grouped(&g, Seed(s)).new_codes().to_vec())
            .collect();
        assert!(distinct.len() > 1);
    }

    #[test]
    fn scenario_two_needs_nothing() {
        let row = scenario_eval(
            &bits(&SCENARIO_2),
            &KmOptions::default(),
            &ProjectionMethod::defaults(),
        )
        .unwrap();
        assert_eq!(row.km_final, 0.0);
        assert_eq!(row.ci, None);
        assert!(row
            .projections
            .iter()
            .all(|p| p.additional_interviews == Some(0)));
    }

    #[test]
    fn scenario_one_projections() {
        let row = scenario_eval(
            &bits(&SCENARIO_1),
            &KmOptions::default(),
            &ProjectionMethod::defaults(),
        )
        .unwrap();
        assert_eq!(row.km_final, 0.5);
        // upper-limit line crosses zero at 70.3638... (independent least-squares oracle)
        assert_eq!(row.projections[0].additional_interviews, Some(61));
        assert_eq!(row.projections[1].additional_interviews, Some(0));
    }

    #[test]
    fn scenario_three_projections() {
        let row = scenario_eval(
            &bits(&SCENARIO_3),
            &KmOptions::default(),
            &ProjectionMethod::defaults(),
        )
        .unwrap();
        assert!((row.km_final - 0.23625).abs() < 1e-12);
        // every upper limit at an event is clipped to 1: flat line
        assert_eq!(row.projections[0].additional_interviews, None);
        assert_eq!(row.projections[1].additional_interviews, Some(2));
    }

    #[test]
    fn rule_completion_without_trailing_zeros() {
        let row = scenario_eval(
            &[true, true, true],
            &KmOptions::default(),
            &[ProjectionMethod::RuleCompletion(3)],
        );
        // last interview is an event, so S(J) = 0 and nothing more is needed
        assert_eq!(row.unwrap().projections[0].additional_interviews, Some(0));
        let row = scenario_eval(
            &[true, true, true, false],
            &KmOptions::default(),
            &[ProjectionMethod::RuleCompletion(3)],
        )
        .unwrap();
        assert_eq!(row.projections[0].additional_interviews, Some(2));
    }

    #[test]
    fn scenario_batch_parsing() {
        let rows = parse_scenarios("1,1,0\n\n0, 1\n").unwrap();
        assert_eq!(rows, vec![vec![true, true, false], vec![false, true]]);
        assert_eq!(parse_scenarios("").unwrap(), Vec::<Vec<bool>>::new());
        let err = parse_scenarios("2,1\n").unwrap_err();
        assert_eq!(err.to_string(), "non-binary token \"2\" at line 1");
    }

    #[test]
    fn method_parsing_round_trips() {
        for m in [
            ProjectionMethod::Extrapolation,
            ProjectionMethod::RuleCompletion(4),
        ] {
            assert_eq!(m.to_string().parse::<ProjectionMethod>().unwrap(), m);
        }
        assert!("rule_completion(0)".parse::<ProjectionMethod>().is_err());
    }

    #[test]
    fn preset_values() {
        let all = presets();
        let find = |name: &str| all.iter().find(|p| p.methodology == name).unwrap();
        assert_eq!(
            (
                find("grounded_theory").min_interviews,
                find("grounded_theory").max_interviews
            ),
            (30, Some(50))
        );
        assert_eq!(
            (
                find("phenomenology").min_interviews,
                find("phenomenology").max_interviews
            ),
            (5, Some(25))
        );
        assert_eq!(
            (
                find("all_qualitative").min_interviews,
                find("all_qualitative").max_interviews
            ),
            (15, None)
        );
        assert_eq!(find("ethnography").max_interviews, Some(60));
    }
}
