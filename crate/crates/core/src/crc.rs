//! Capture-recapture estimates of the total number of codes.
//!
//! At interview `j` the two sources are the history (interviews 1..j-1,
//! whose distinct codes are "marked") and interview `j` itself (its codes
//! are "captured"; those already marked are "recaptured").

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CodeFrequencyTable, ElicitationMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrcError {
    #[error("recaptured {recaptured} exceeds min(marked {marked}, captured {captured})")]
    RecaptureExceeds {
        marked: u64,
        captured: u64,
        recaptured: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureCounts {
    marked: u64,
    captured: u64,
    recaptured: u64,
}

impl CaptureCounts {
    pub fn new(marked: u64, captured: u64, recaptured: u64) -> Result<Self, CrcError> {
        if recaptured > marked.min(captured) {
            return Err(CrcError::RecaptureExceeds {
                marked,
                captured,
                recaptured,
            });
        }
        Ok(Self {
            marked,
            captured,
            recaptured,
        })
    }

    pub fn marked(&self) -> u64 {
        self.marked
    }

    pub fn captured(&self) -> u64 {
        self.captured
    }

    pub fn recaptured(&self) -> u64 {
        self.recaptured
    }
}

/// `M * C / R`; not estimable when nothing is recaptured.
pub fn lincoln_petersen(counts: CaptureCounts) -> Option<f64> {
    (counts.recaptured > 0)
        .then(|| counts.marked as f64 * counts.captured as f64 / counts.recaptured as f64)
}

/// `(M + 1)(C + 1)/(R + 1) - 1`.
pub fn chapman(counts: CaptureCounts) -> f64 {
    let (m, c, r) = (
        counts.marked as f64,
        counts.captured as f64,
        counts.recaptured as f64,
    );
    (m + 1.0) * (c + 1.0) / (r + 1.0) - 1.0
}

/// `D / (1 - f1/n)`; not estimable when every observation is a singleton
/// (zero coverage) or nothing has been observed.
pub fn good_turing(freq: &CodeFrequencyTable) -> Option<f64> {
    let n = freq.total();
    let f1 = freq.singletons();
    if n == 0 || f1 >= n {
        return None;
    }
    let coverage = 1.0 - f1 as f64 / n as f64;
    Some(freq.distinct() as f64 / coverage)
}

/// Estimates after one interview.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrcEstimate {
    pub seq: usize,
    pub marked: u64,
    pub captured: u64,
    pub recaptured: u64,
    /// Distinct codes through this interview.
    pub distinct: u64,
    pub lincoln_petersen: Option<f64>,
    pub chapman: Option<f64>,
    pub good_turing: Option<f64>,
    pub remaining_lincoln_petersen: Option<f64>,
    pub remaining_chapman: Option<f64>,
    pub remaining_good_turing: Option<f64>,
}

/// One estimate per interview. The first interview has no history, so its
/// row carries no estimates.
pub fn per_interview_series(matrix: &ElicitationMatrix) -> Vec<CrcEstimate> {
    let mut marked_set: HashSet<usize> = HashSet::new();
    let mut series = Vec::with_capacity(matrix.interview_count());

    for (row, cells) in matrix.elicited().iter().enumerate() {
        let seq = row + 1;
        let captured_set: Vec<usize> = cells
            .iter()
            .enumerate()
            .filter_map(|(k, e)| e.then_some(k))
            .collect();
        let marked = marked_set.len() as u64;
        let captured = captured_set.len() as u64;
        let recaptured = captured_set
            .iter()
            .filter(|k| marked_set.contains(k))
            .count() as u64;
        marked_set.extend(&captured_set);
        let distinct = marked_set.len() as u64;

        let (lp, ch, gt) = if seq == 1 {
            (None, None, None)
        } else {
            let counts = CaptureCounts::new(marked, captured, recaptured)
                .expect("recaptured codes are a subset of both sources");
            (
                lincoln_petersen(counts),
                Some(chapman(counts)),
                good_turing(&CodeFrequencyTable::through(matrix, seq)),
            )
        };
        let remaining = |est: Option<f64>| est.map(|n| (n - distinct as f64).max(0.0));
        series.push(CrcEstimate {
            seq,
            marked,
            captured,
            recaptured,
            distinct,
            lincoln_petersen: lp,
            chapman: ch,
            good_turing: gt,
            remaining_lincoln_petersen: remaining(lp),
            remaining_chapman: remaining(ch),
            remaining_good_turing: remaining(gt),
        });
    }
    series
}
