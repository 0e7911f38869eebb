//! Discovery of chart specs under a directory.

use std::path::{Path, PathBuf};

use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::spec::{parse_spec, Mark};
use super::table::Column;
use super::{LoadError, LoadedChart};

pub const SPEC_SUFFIX: &str = ".vl.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogueEntry {
    /// Path of the spec relative to the root, without the `.vl.json` suffix.
    pub name: String,
    pub title: Option<String>,
    pub mark: Mark,
    /// SHA-256 of the spec bytes, hex encoded.
    pub digest: String,
    /// Columns after transforms.
    pub schema: Vec<Column>,
    pub row_count: usize,
    /// Sibling `<name>.png`, passed through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_base64")]
    pub preview: Option<Vec<u8>>,
    #[serde(skip)]
    pub path: PathBuf,
}

mod opt_base64 {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(bytes) => s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| {
            base64::engine::general_purpose::STANDARD
                .decode(s)
                .map_err(serde::de::Error::custom)
        })
        .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChartCatalogue {
    pub entries: Vec<CatalogueEntry>,
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogueError {
    #[error("cannot read catalogue root {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no chart named {0:?} in the catalogue")]
    NotFound(String),
    #[error("loading {name}: {source}")]
    Load {
        name: String,
        #[source]
        source: LoadError,
    },
}

/// Hex SHA-256 of spec bytes.
pub fn spec_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Scan `root` recursively for `*.vl.json` specs. Files that fail to parse
/// or load are reported in `skipped`; entries are sorted by name.
pub fn scan_catalogue(root: &Path) -> Result<ChartCatalogue, CatalogueError> {
    std::fs::read_dir(root).map_err(|source| CatalogueError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut cat = ChartCatalogue::default();
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .follow_links(true)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| p.to_string_lossy().ends_with(SPEC_SUFFIX))
        .collect();
    files.sort();
    for path in files {
        match read_entry(root, &path) {
            Ok(entry) => cat.entries.push(entry),
            Err(reason) => cat.skipped.push(SkippedFile { path, reason }),
        }
    }
    cat.entries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(cat)
}

fn read_entry(root: &Path, path: &Path) -> Result<CatalogueEntry, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    let spec = parse_spec(&bytes).map_err(|e| e.to_string())?;
    let dir = path.parent().unwrap_or(root);
    let title = spec.title.clone();
    let mark = spec.mark;
    let chart = LoadedChart::load(spec, dir).map_err(|e| e.to_string())?;
    let rel = path
        .strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/");
    let name = rel.strip_suffix(SPEC_SUFFIX).unwrap_or(&rel).to_string();
    let preview_path = PathBuf::from(format!("{}.png", path.to_string_lossy().trim_end_matches(SPEC_SUFFIX)));
    Ok(CatalogueEntry {
        name,
        title,
        mark,
        digest: spec_digest(&bytes),
        schema: chart.table.columns().to_vec(),
        row_count: chart.table.row_count(),
        preview: std::fs::read(preview_path).ok(),
        path: path.to_path_buf(),
    })
}

fn normalize(s: &str) -> String {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty() && *w != "chart" && *w != "the")
        .collect::<Vec<_>>()
        .join(" ")
}

impl ChartCatalogue {
    /// Resolve a spoken or typed chart name: exact name or title first, then
    /// containment either way, ignoring case, punctuation, "the" and "chart".
    pub fn find(&self, query: &str) -> Option<&CatalogueEntry> {
        let q = normalize(query);
        if q.is_empty() {
            return None;
        }
        let keys = |e: &CatalogueEntry| {
            let mut k = vec![normalize(&e.name)];
            if let Some(t) = &e.title {
                k.push(normalize(t));
            }
            k
        };
        self.entries.iter().find(|e| keys(e).contains(&q)).or_else(|| {
            self.entries.iter().find(|e| {
                keys(e)
                    .iter()
                    .any(|k| !k.is_empty() && (k.contains(&q) || q.contains(k.as_str())))
            })
        })
    }

    pub fn load(&self, query: &str) -> Result<LoadedChart, CatalogueError> {
        let entry = self
            .find(query)
            .ok_or_else(|| CatalogueError::NotFound(query.to_string()))?;
        LoadedChart::from_path(&entry.path).map_err(|source| CatalogueError::Load {
            name: entry.name.clone(),
            source,
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"{"title": "T", "mark": "bar", "data": {"values": [{"a": "x", "b": 1}]},
        "encoding": {"x": {"field": "a", "type": "nominal"}, "y": {"field": "b", "type": "quantitative"}}}"#;

    #[test]
    fn three_valid_one_malformed() {
        let dir = tempfile::tempdir().unwrap();
        for n in ["a", "b", "c"] {
            std::fs::write(dir.path().join(format!("{n}.vl.json")), SPEC).unwrap();
        }
        std::fs::write(dir.path().join("broken.vl.json"), "{ nope").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let cat = scan_catalogue(dir.path()).unwrap();
        assert_eq!(cat.names(), ["a", "b", "c"]);
        assert_eq!(cat.skipped.len(), 1);
        assert!(cat.skipped[0].path.ends_with("broken.vl.json"));
    }

    #[test]
    fn empty_directory_gives_empty_catalogue() {
        let dir = tempfile::tempdir().unwrap();
        let cat = scan_catalogue(dir.path()).unwrap();
        assert!(cat.entries.is_empty() && cat.skipped.is_empty());
    }

    #[test]
    fn identical_specs_have_identical_digests() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("one.vl.json"), SPEC).unwrap();
        std::fs::write(dir.path().join("two.vl.json"), SPEC).unwrap();
        let cat = scan_catalogue(dir.path()).unwrap();
        assert_eq!(cat.entries.len(), 2);
        assert_ne!(cat.entries[0].name, cat.entries[1].name);
        assert_eq!(cat.entries[0].digest, cat.entries[1].digest);
    }

    #[test]
    fn unreadable_root_is_io_error() {
        assert!(matches!(
            scan_catalogue(Path::new("/definitely/not/here")),
            Err(CatalogueError::Io { .. })
        ));
    }

    #[test]
    fn preview_bytes_pass_through() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("p.vl.json"), SPEC).unwrap();
        std::fs::write(dir.path().join("p.png"), [0x89, b'P', b'N', b'G']).unwrap();
        let cat = scan_catalogue(dir.path()).unwrap();
        assert_eq!(cat.entries[0].preview.as_deref(), Some(&[0x89, b'P', b'N', b'G'][..]));
        let json = serde_json::to_string(&cat.entries[0]).unwrap();
        let back: CatalogueEntry = serde_json::from_str(&json).unwrap();
        assert_eq!(back.preview, cat.entries[0].preview);
    }

    #[test]
    fn find_by_spoken_name() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("interest_rates.vl.json"),
            SPEC.replace("\"T\"", "\"Interest Rates\""),
        )
        .unwrap();
        let cat = scan_catalogue(dir.path()).unwrap();
        assert_eq!(cat.find("the interest rates chart").unwrap().name, "interest_rates");
        assert_eq!(cat.find("Interest Rates").unwrap().name, "interest_rates");
        assert!(cat.find("stock prices").is_none());
    }
}
