//! JSON-lines score files: `{"id": ..., "score": ..., "label": "id"|"ood"}`.

use std::fmt::Write as _;
use std::path::Path;

use cornercase_core::{LabeledScores, ScoreRecord};
use serde::{Deserialize, Serialize};

use crate::error::{read_file, write_file, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Id,
    Ood,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub id: String,
    pub score: f64,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
}

impl ScoreLine {
    pub fn from_record(r: &ScoreRecord, label: Label) -> Self {
        Self { id: r.id.clone(), score: r.score, label, method: Some(r.method.as_str().to_string()) }
    }
}

pub fn encode_scores(lines: &[ScoreLine]) -> String {
    let mut out = String::new();
    for l in lines {
        writeln!(out, "{}", serde_json::to_string(l).expect("plain struct")).unwrap();
    }
    out
}

pub fn decode_scores(text: &str, path: &Path) -> Result<Vec<ScoreLine>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn write_scores(path: &Path, lines: &[ScoreLine]) -> Result<()> {
    write_file(path, encode_scores(lines).as_bytes())
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreLine>> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::format(path, "score file is not UTF-8"))?;
    decode_scores(&text, path)
}

/// Splits score lines by label.
pub fn labeled_scores(lines: &[ScoreLine]) -> Result<LabeledScores> {
    let pick = |want: Label| lines.iter().filter(|l| l.label == want).map(|l| l.score).collect::<Vec<_>>();
    LabeledScores::new(pick(Label::Id), pick(Label::Ood)).map_err(|e| Error::Data(e.to_string()))
}
