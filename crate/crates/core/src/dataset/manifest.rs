use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::vocab::{LabelVocabulary, NO_FINDING};
use crate::error::{Error, Result};

pub const IMAGE_COLUMN: &str = "Image Index";
pub const LABELS_COLUMN: &str = "Finding Labels";

/// One manifest row before encoding against a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub image_id: String,
    pub path: PathBuf,
    pub labels: BTreeSet<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedManifest {
    pub rows: Vec<ManifestRow>,
    /// Image ids whose file is absent under the image root. Their rows are kept.
    pub missing_files: Vec<String>,
}

/// One image with its labels and multi-hot target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub image_id: String,
    pub path: PathBuf,
    pub labels: BTreeSet<String>,
    pub target: Vec<u8>,
}

/// Splits a `Finding Labels` cell. `No Finding` contributes nothing.
pub fn split_labels(cell: &str) -> BTreeSet<String> {
    cell.split('|')
        .map(str::trim)
        .filter(|l| !l.is_empty() && *l != NO_FINDING)
        .map(String::from)
        .collect()
}

/// Reads an NIH-style CSV manifest. Extra columns are ignored.
pub fn parse_label_manifest(
    manifest_path: impl AsRef<Path>,
    image_root: impl AsRef<Path>,
) -> Result<ParsedManifest> {
    let manifest_path = manifest_path.as_ref();
    let image_root = image_root.as_ref();
    let csv_err = |source| Error::Csv {
        path: manifest_path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(manifest_path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                path: manifest_path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let (id_col, label_col) = (column(IMAGE_COLUMN)?, column(LABELS_COLUMN)?);

    let mut out = ParsedManifest::default();
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        let image_id = row.get(id_col).unwrap_or_default().trim().to_string();
        if image_id.is_empty() {
            continue;
        }
        let path = image_root.join(&image_id);
        if !path.is_file() {
            out.missing_files.push(image_id.clone());
        }
        out.rows.push(ManifestRow {
            labels: split_labels(row.get(label_col).unwrap_or_default()),
            image_id,
            path,
        });
    }
    Ok(out)
}

pub fn encode_rows(rows: Vec<ManifestRow>, vocab: &LabelVocabulary) -> Result<Vec<SampleRecord>> {
    rows.into_iter()
        .map(|r| {
            Ok(SampleRecord {
                target: vocab.encode(&r.labels)?,
                image_id: r.image_id,
                path: r.path,
                labels: r.labels,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn parses_rows_and_sentinel() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "00000001_000.png", "");
        let csv = write(
            dir.path(),
            "Data_Entry.csv",
            "Image Index,Finding Labels,Follow-up #\n\
             00000001_000.png,Cardiomegaly|Effusion,0\n\
             x.png,No Finding,0\n\
             y.png,Atelectasis,1\n",
        );
        let parsed = parse_label_manifest(&csv, dir.path()).unwrap();
        assert_eq!(parsed.rows.len(), 3);
        let labels: Vec<Vec<&str>> = parsed
            .rows
            .iter()
            .map(|r| r.labels.iter().map(String::as_str).collect())
            .collect();
        assert_eq!(labels, vec![vec!["Cardiomegaly", "Effusion"], vec![], vec!["Atelectasis"]]);
        assert_eq!(parsed.rows[0].path, dir.path().join("00000001_000.png"));
        assert_eq!(parsed.missing_files, vec!["x.png", "y.png"]);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write(dir.path(), "m.csv", "Image Index,Labels\na.png,Mass\n");
        match parse_label_manifest(&csv, dir.path()) {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, LABELS_COLUMN),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn encoding_rejects_unknown_labels() {
        let vocab = LabelVocabulary::nih();
        let row = ManifestRow {
            image_id: "a.png".into(),
            path: "a.png".into(),
            labels: split_labels("Mass|Nodules"),
        };
        assert!(matches!(
            encode_rows(vec![row], &vocab),
            Err(Error::UnknownLabel { .. })
        ));
    }
}
