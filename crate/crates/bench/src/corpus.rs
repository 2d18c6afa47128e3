//! Corpus ingestion: a directory of `.c` files plus a manifest giving the
//! expected verdict of each.
//!
//! The manifest is `manifest.toml`:
//!
//! ```toml
//! [benchmarks]
//! "listing4.c" = "positive"
//! "sub/bug.c" = "negative"
//! ```
//!
//! or `manifest.json` with the same shape,
//! `{"benchmarks": {"listing4.c": "positive"}}`. Keys are paths relative to
//! the corpus directory. Files missing from the manifest are `unknown`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use loopy_core::lang::{parse_program, Program};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::categorize::{categorize, Category};
use crate::normalize::normalize;
use crate::BenchError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Positive,
    Negative,
    #[default]
    Unknown,
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expected::Positive => "positive",
            Expected::Negative => "negative",
            Expected::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub benchmarks: BTreeMap<String, Expected>,
}

impl Manifest {
    pub const TOML: &'static str = "manifest.toml";
    pub const JSON: &'static str = "manifest.json";

    /// The manifest in `dir`, or an empty one if there is none.
    pub fn load(dir: &Path) -> Result<Self, BenchError> {
        let toml_path = dir.join(Self::TOML);
        let json_path = dir.join(Self::JSON);
        if toml_path.exists() {
            let text = read(&toml_path)?;
            toml::from_str(&text).map_err(|e| BenchError::Manifest(format!("{}: {e}", toml_path.display())))
        } else if json_path.exists() {
            let text = read(&json_path)?;
            serde_json::from_str(&text).map_err(|e| BenchError::Manifest(format!("{}: {e}", json_path.display())))
        } else {
            Ok(Manifest::default())
        }
    }

    pub fn expected(&self, relative: &str) -> Expected {
        self.benchmarks.get(relative).copied().unwrap_or_default()
    }
}

pub(crate) fn read(path: &Path) -> Result<String, BenchError> {
    std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub id: String,
    /// Relative to the corpus directory, with `/` separators.
    pub path: String,
    pub normalized: String,
    pub category: Category,
    /// In the single-loop slice and accepted by the parser.
    pub supported: bool,
    pub parse_error: Option<String>,
    pub expected: Expected,
}

impl BenchmarkEntry {
    pub fn from_source(relative: &str, source: &str, expected: Expected) -> Self {
        let normalized = normalize(source);
        let category = categorize(source);
        let parse_error =
            if category.in_slice() { parse_program(&normalized).err().map(|e| e.to_string()) } else { None };
        BenchmarkEntry {
            id: benchmark_id(relative),
            path: relative.to_string(),
            supported: category.in_slice() && parse_error.is_none(),
            normalized,
            category,
            parse_error,
            expected,
        }
    }

    pub fn program(&self) -> Option<Program> {
        if self.supported {
            parse_program(&self.normalized).ok()
        } else {
            None
        }
    }
}

/// `sub/foo.c` becomes `sub__foo`.
pub fn benchmark_id(relative: &str) -> String {
    relative.strip_suffix(".c").unwrap_or(relative).replace(['/', '\\'], "__")
}

/// Every `.c` file under `dir`, sorted by path.
pub fn ingest(dir: &Path) -> Result<Vec<BenchmarkEntry>, BenchError> {
    if !dir.is_dir() {
        return Err(BenchError::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory")));
    }
    let manifest = Manifest::load(dir)?;
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| BenchError::io(dir, e.into()))?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "c") {
            files.push(entry.into_path());
        }
    }
    let mut files: Vec<(String, PathBuf)> = files
        .into_iter()
        .map(|path| {
            let relative = path
                .strip_prefix(dir)
                .expect("walked under dir")
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            (relative, path)
        })
        .collect();
    files.sort();
    let mut entries = Vec::with_capacity(files.len());
    for (relative, path) in files {
        let source = read(&path)?;
        entries.push(BenchmarkEntry::from_source(&relative, &source, manifest.expected(&relative)));
    }
    for key in manifest.benchmarks.keys() {
        if !entries.iter().any(|e| &e.path == key) {
            log::warn!("manifest names {key}, which is not in the corpus");
        }
    }
    Ok(entries)
}
