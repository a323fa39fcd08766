use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::series::{format_timestamp, ingest_csv, parse_timestamp, BasinSeries};
use crate::data::split::SplitSpec;
use crate::error::{Error, Result};

/// Basin list plus split dates. Text form:
///
/// ```text
/// train_end = 2009-12-31T18:00:00
/// val_end = 2011-12-31T18:00:00
/// test_end = 2013-12-31T18:00:00
/// basin = b01 b01.csv
/// ```
///
/// Relative CSV paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub basins: Vec<(String, PathBuf)>,
    pub split: SplitSpec,
}

impl DatasetManifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut basins = Vec::new();
        let (mut train_start, mut train_end, mut val_end, mut test_end) = (None, None, None, None);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::InvalidConfig(format!("manifest line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let date = || parse_timestamp(value).ok_or_else(|| err(format!("bad timestamp `{value}`")));
            match key {
                "train_start" => train_start = Some(date()?),
                "train_end" => train_end = Some(date()?),
                "val_end" => val_end = Some(date()?),
                "test_end" => test_end = Some(date()?),
                "basin" => {
                    let (id, path) = value.split_once(char::is_whitespace).ok_or_else(|| err("expected `basin = id path`".into()))?;
                    let path = PathBuf::from(path.trim());
                    let path = if path.is_relative() { base.join(path) } else { path };
                    basins.push((id.to_string(), path));
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::InvalidConfig(format!("manifest missing `{k}`"));
        let split = SplitSpec {
            train_start,
            train_end: train_end.ok_or_else(|| missing("train_end"))?,
            val_end: val_end.ok_or_else(|| missing("val_end"))?,
            test_end: test_end.ok_or_else(|| missing("test_end"))?,
        };
        split.validate()?;
        if basins.is_empty() {
            return Err(missing("basin"));
        }
        Ok(DatasetManifest { basins, split })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        DatasetManifest::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Text form with paths written relative to `base` where possible.
    pub fn render(&self, base: &Path) -> String {
        let mut out = String::new();
        if let Some(s) = self.split.train_start {
            let _ = writeln!(out, "train_start = {}", format_timestamp(s));
        }
        let _ = writeln!(out, "train_end = {}", format_timestamp(self.split.train_end));
        let _ = writeln!(out, "val_end = {}", format_timestamp(self.split.val_end));
        let _ = writeln!(out, "test_end = {}", format_timestamp(self.split.test_end));
        for (id, path) in &self.basins {
            let p = path.strip_prefix(base).unwrap_or(path);
            let _ = writeln!(out, "basin = {id} {}", p.display());
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or(Path::new("."));
        std::fs::write(path, self.render(base))?;
        Ok(())
    }

    /// Reads every basin CSV, labelling each series with its manifest id.
    pub fn load_series(&self) -> Result<Vec<BasinSeries>> {
        self.basins
            .iter()
            .map(|(id, path)| {
                let mut s = ingest_csv(path)?;
                s.basin_id = id.clone();
                Ok(s)
            })
            .collect()
    }
}
