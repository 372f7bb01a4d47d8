//! Dataset manifest: CSV with header `path,id,label,role`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Query,
    Database,
    Train,
    Test,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "query" => Ok(Role::Query),
            "database" => Ok(Role::Database),
            "train" => Ok(Role::Train),
            "test" => Ok(Role::Test),
            other => Err(format!("unknown role `{other}` (expected query, database, train or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// Resolved against the manifest's directory.
    pub path: PathBuf,
    pub id: String,
    pub label: String,
    pub role: Role,
}

#[derive(Deserialize)]
struct Row {
    path: String,
    id: String,
    label: String,
    role: String,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub entries: Vec<Entry>,
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Manifest::parse(&text, base).map_err(|e| e.context(path.display()))
    }

    /// An id may appear once per role, so one image can be both a query and a
    /// database entry.
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| CliError::Data(format!("line 1: {e}")))?
            .clone();
        if header.iter().collect::<Vec<_>>() != ["path", "id", "label", "role"] {
            return Err(CliError::Data("line 1: expected header `path,id,label,role`".into()));
        }
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                CliError::Data(format!("line {line}: {e}"))
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let row: Row = record
                .deserialize(Some(&header))
                .map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
            if row.path.is_empty() {
                return Err(CliError::Data(format!("line {line}: empty path")));
            }
            if row.id.is_empty() {
                return Err(CliError::Data(format!("line {line}: empty id")));
            }
            let role: Role = row.role.parse().map_err(|m| CliError::Data(format!("line {line}: {m}")))?;
            if !seen.insert((row.id.clone(), role)) {
                return Err(CliError::Data(format!("line {line}: duplicate id `{}` for this role", row.id)));
            }
            entries.push(Entry {
                path: base.join(&row.path),
                id: row.id,
                label: row.label,
                role,
            });
        }
        Ok(Manifest { entries })
    }

    pub fn with_role(&self, role: Role) -> Vec<&Entry> {
        self.entries.iter().filter(|e| e.role == role).collect()
    }
}
