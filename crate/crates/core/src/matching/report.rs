//! `ARSRG-MATCH` JSON report.

use serde::{Deserialize, Serialize};

use super::MatchReport;
use crate::error::{Error, Result};

const FORMAT: &str = "ARSRG-MATCH";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    #[serde(flatten)]
    report: MatchReport,
}

pub fn write_match_report(report: &MatchReport) -> Vec<u8> {
    let doc = Document {
        format: FORMAT.into(),
        version: VERSION,
        report: report.clone(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("match report is always serializable");
    out.push(b'\n');
    out
}

pub fn parse_match_report(bytes: &[u8]) -> Result<MatchReport> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::field(path, e.into_inner().to_string())
    })?;
    if doc.format != FORMAT {
        return Err(Error::field("format", format!("expected `{FORMAT}`, got `{}`", doc.format)));
    }
    if doc.version != VERSION {
        return Err(Error::field("version", format!("unsupported version {}", doc.version)));
    }
    Ok(doc.report)
}
