use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::DetectorParams;
use crate::data::CaseId;
use crate::numfmt::format_sig;

/// Per-case anomaly scores from one detector, in dataset row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub detector_id: String,
    pub case_ids: Vec<CaseId>,
    pub scores: Vec<f64>,
    /// Absent for external score files; threshold metrics are then skipped.
    pub flags: Option<Vec<bool>>,
    /// Detector-specific per-case count: flagged attributes for the
    /// univariate detectors, anomaly order for the mixed local detector
    /// (0 when not flagged).
    pub detail: Option<Vec<u32>>,
    pub params: Option<DetectorParams>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("case id {0} appears more than once in the score file")]
    Duplicate(CaseId),
    #[error("case id {0} is missing from the score file")]
    Missing(CaseId),
    #[error("case id {0} in the score file is not part of the dataset")]
    Unknown(CaseId),
    #[error("row {row}: {token:?} is not a valid {what}")]
    Invalid { row: usize, what: &'static str, token: String },
    #[error("score file needs columns case_id and score, found {0:?}")]
    Header(Vec<String>),
    #[error("csv: {0}")]
    Csv(String),
}

/// JSON sidecar written next to a score CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSidecar {
    pub detector_id: String,
    pub params: Option<DetectorParams>,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn lookup(&self) -> HashMap<CaseId, usize> {
        self.case_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect()
    }

    pub fn score_of(&self, id: CaseId) -> Option<f64> {
        self.case_ids.iter().position(|c| *c == id).map(|i| self.scores[i])
    }

    pub fn flag_of(&self, id: CaseId) -> Option<bool> {
        let flags = self.flags.as_ref()?;
        self.case_ids.iter().position(|c| *c == id).map(|i| flags[i])
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.as_ref().map_or(0, |f| f.iter().filter(|&&b| b).count())
    }

    pub fn sidecar(&self) -> ScoreSidecar {
        ScoreSidecar { detector_id: self.detector_id.clone(), params: self.params.clone() }
    }

    /// CSV with columns `case_id,score[,flag]`; scores carry 12 significant digits.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), ScoreError> {
        let mut w = csv::Writer::from_writer(sink);
        let err = |e: csv::Error| ScoreError::Csv(e.to_string());
        match &self.flags {
            Some(_) => w.write_record(["case_id", "score", "flag"]).map_err(err)?,
            None => w.write_record(["case_id", "score"]).map_err(err)?,
        }
        for (i, (id, score)) in self.case_ids.iter().zip(&self.scores).enumerate() {
            let id = id.to_string();
            let score = format_sig(*score);
            match &self.flags {
                Some(flags) => {
                    let flag = if flags[i] { "1" } else { "0" };
                    w.write_record([id.as_str(), score.as_str(), flag]).map_err(err)?
                }
                None => w.write_record([id.as_str(), score.as_str()]).map_err(err)?,
            }
        }
        w.flush().map_err(|e| ScoreError::Csv(e.to_string()))
    }

    /// Reads a score CSV (`case_id,score` and optionally `flag`) and checks
    /// that it covers exactly `expected` case ids.
    ///
    /// A first line of the form `# detector: <id>` names the detector;
    /// otherwise `default_id` is used.
    pub fn read_csv<R: Read>(
        mut source: R,
        default_id: &str,
        expected: &[CaseId],
    ) -> Result<ScoreVector, ScoreError> {
        let mut text = String::new();
        source.read_to_string(&mut text).map_err(|e| ScoreError::Csv(e.to_string()))?;
        let mut detector_id = default_id.to_string();
        let mut body = text.as_str();
        if let Some(rest) = body.strip_prefix('#') {
            let (meta, tail) = rest.split_once('\n').unwrap_or((rest, ""));
            if let Some(id) = meta.trim().strip_prefix("detector") {
                let id = id.trim_start_matches([':', '=', ' ']).trim();
                if !id.is_empty() {
                    detector_id = id.to_string();
                }
            }
            body = tail;
        }

        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| ScoreError::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (Some(id_col), Some(score_col)) = (col("case_id"), col("score")) else {
            return Err(ScoreError::Header(header));
        };
        let flag_col = col("flag");

        let known: HashSet<CaseId> = expected.iter().copied().collect();
        let mut seen: HashMap<CaseId, (f64, Option<bool>)> = HashMap::new();
        for (r, record) in reader.records().enumerate() {
            let row = r + 1;
            let record = record.map_err(|e| ScoreError::Csv(format!("row {row}: {e}")))?;
            let field = |i: usize| record.get(i).unwrap_or("");
            let id_token = field(id_col);
            let id = id_token.parse::<u64>().map(CaseId).map_err(|_| ScoreError::Invalid {
                row,
                what: "case id",
                token: id_token.to_string(),
            })?;
            let score_token = field(score_col);
            let score = score_token
                .parse::<f64>()
                .ok()
                .filter(|s| s.is_finite())
                .ok_or_else(|| ScoreError::Invalid { row, what: "score", token: score_token.to_string() })?;
            let flag = match flag_col {
                None => None,
                Some(i) => Some(parse_flag(field(i)).ok_or_else(|| ScoreError::Invalid {
                    row,
                    what: "flag",
                    token: field(i).to_string(),
                })?),
            };
            if !known.contains(&id) {
                return Err(ScoreError::Unknown(id));
            }
            if seen.insert(id, (score, flag)).is_some() {
                return Err(ScoreError::Duplicate(id));
            }
        }

        let mut scores = Vec::with_capacity(expected.len());
        let mut flags = Vec::with_capacity(expected.len());
        for id in expected {
            let (score, flag) = seen.get(id).ok_or(ScoreError::Missing(*id))?;
            scores.push(*score);
            flags.push(*flag);
        }
        let flags = if flag_col.is_some() { Some(flags.into_iter().map(|f| f.unwrap_or(false)).collect()) } else { None };
        Ok(ScoreVector {
            detector_id,
            case_ids: expected.to_vec(),
            scores,
            flags,
            detail: None,
            params: None,
        })
    }
}

fn parse_flag(token: &str) -> Option<bool> {
    match token.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}
