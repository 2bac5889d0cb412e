//! Text format for pre-embedded datasets.
//!
//! ```text
//! # name=<string> d=<count>
//! id,label,f0,f1,...,f{d-1}
//! ```
//!
//! One sample per line, UTF-8, LF line endings. Empty lines are ignored.
//! A companion `<stem>.manifest.toml` may describe the dataset (name, n, d,
//! n_classes, task).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn parse_header(path: &str, line: &str) -> Result<(String, usize)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, 1, "expected header `# name=<string> d=<count>`"))?
        .trim();
    let (name_part, d_part) = body
        .rsplit_once(" d=")
        .ok_or_else(|| parse_err(path, 1, "header lacks `d=<count>`"))?;
    let name = name_part
        .trim()
        .strip_prefix("name=")
        .ok_or_else(|| parse_err(path, 1, "header lacks `name=<string>`"))?;
    let d: usize = d_part
        .trim()
        .parse()
        .map_err(|_| parse_err(path, 1, format!("invalid feature count `{}`", d_part.trim())))?;
    if d == 0 {
        return Err(parse_err(path, 1, "feature count must be at least 1"));
    }
    Ok((name.to_owned(), d))
}

/// Parses dataset text; `origin` is used in error messages.
pub fn parse_csv(text: &str, origin: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{origin}: no samples")))?;
    let (name, d) = parse_header(origin, header)?;

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 2 {
            return Err(parse_err(
                origin,
                lineno,
                format!("expected {} fields (id, label, {d} features), found {}", d + 2, fields.len()),
            ));
        }
        let id: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(origin, lineno, format!("invalid id `{}`", fields[0])))?;
        let label: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(origin, lineno, format!("invalid label `{}`", fields[1])))?;
        for f in &fields[2..] {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| parse_err(origin, lineno, format!("invalid feature `{f}`")))?;
            if !v.is_finite() {
                return Err(parse_err(origin, lineno, format!("non-finite feature `{f}`")));
            }
            values.push(v);
        }
        ids.push(id);
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::Data(format!("{origin}: no samples")));
    }
    let features = Matrix::from_vec(labels.len(), d, values)?;
    Dataset::new(name, ids, features, labels).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{origin}: {msg}")),
        other => other,
    })
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, &path.display().to_string())
}

/// Serialises with shortest round-trip float formatting, so
/// `parse_csv(to_csv_string(ds))` reproduces `ds` exactly.
pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# name={} d={}", ds.name(), ds.dim());
    for i in 0..ds.n_samples() {
        let _ = write!(out, "{},{}", ds.ids()[i], ds.labels()[i]);
        for v in ds.features().row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))
}

/// Companion description of a dataset file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub n_classes: usize,
    pub task: String,
}

impl Manifest {
    pub fn describe(ds: &Dataset, task: impl Into<String>) -> Self {
        Self {
            name: ds.name().to_owned(),
            n: ds.n_samples(),
            d: ds.dim(),
            n_classes: ds.n_classes(),
            task: task.into(),
        }
    }

    /// `data/news.csv` -> `data/news.manifest.toml`.
    pub fn companion_path(data_path: &Path) -> PathBuf {
        data_path.with_extension("manifest.toml")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(1);
            parse_err(&path.display().to_string(), line, e.message().to_owned())
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Errors if the manifest disagrees with the loaded data.
    pub fn check(&self, ds: &Dataset) -> Result<()> {
        let pairs = [
            ("n", self.n, ds.n_samples()),
            ("d", self.d, ds.dim()),
            ("n_classes", self.n_classes, ds.n_classes()),
        ];
        for (field, declared, actual) in pairs {
            if declared != actual {
                return Err(Error::Data(format!(
                    "manifest declares {field}={declared} but the data has {actual}"
                )));
            }
        }
        if self.name != ds.name() {
            return Err(Error::Data(format!(
                "manifest names `{}` but the data header names `{}`",
                self.name,
                ds.name()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::{any, prop_assert_eq, proptest};

    #[test]
    fn parses_small_file() {
        let ds = parse_csv("# name=tiny d=2\n0,0,1.5,2\n1,1,-3,4e-2\n2,1,0,0\n", "mem").unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.name(), "tiny");
        assert_eq!(ds.features().row(1), &[-3.0, 0.04]);
    }

    #[test]
    fn names_may_contain_spaces() {
        let ds = parse_csv("# name=1150 news d=1\n0,0,1\n1,1,2\n", "mem").unwrap();
        assert_eq!(ds.name(), "1150 news");
    }

    #[test]
    fn missing_class_is_a_data_error() {
        let err = parse_csv("# name=t d=1\n0,0,1\n1,5,2\n", "mem").unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
        assert!(err.to_string().contains("class 1"));
    }

    #[test]
    fn truncated_row_reports_line() {
        let err = parse_csv("# name=t d=3\n0,0,1,2,3\n1,1,2,3\n", "f.csv").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn empty_input() {
        assert!(parse_csv("", "f").unwrap_err().to_string().contains("no samples"));
        assert!(parse_csv("# name=t d=3\n", "f").unwrap_err().to_string().contains("no samples"));
    }

    #[test]
    fn bad_header() {
        assert!(matches!(parse_csv("0,0,1\n", "f"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_csv("# name=t d=x\n0,0,1\n", "f"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = parse_csv("# name=t d=1\n0,0,1\n1,1,2\n", "mem").unwrap();
        let m = Manifest::describe(&ds, "Sentiment Analysis");
        let path = dir.path().join("t.manifest.toml");
        m.save(&path).unwrap();
        let back = Manifest::load(&path).unwrap();
        assert_eq!(back, m);
        back.check(&ds).unwrap();
        assert_eq!(
            Manifest::companion_path(Path::new("data/news.csv")),
            PathBuf::from("data/news.manifest.toml")
        );
        let wrong = Manifest { n: 3, ..m };
        assert!(wrong.check(&ds).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(seed in any::<u64>(), n in 2usize..30, d in 1usize..6) {
            let mut rng = Rng::new(seed);
            let x = Matrix::from_vec(n, d, rng.uniform(-1e3, 1e3, n * d).unwrap()).unwrap();
            let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let ds = Dataset::from_parts("rt", x, labels).unwrap();
            let back = parse_csv(&to_csv_string(&ds), "mem").unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
