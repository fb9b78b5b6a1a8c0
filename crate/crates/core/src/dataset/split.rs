use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::SampleRecord;
use super::vocab::LabelVocabulary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Test => "test",
        })
    }
}

/// An immutable set of encoded records. Serializes as the normalized JSON
/// manifest consumed by training, evaluation and explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub vocabulary: LabelVocabulary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_list: Option<PathBuf>,
    pub records: Vec<SampleRecord>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Positive count per class, in vocabulary order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.vocabulary.len()];
        for r in &self.records {
            for (c, t) in counts.iter_mut().zip(&r.target) {
                *c += *t as usize;
            }
        }
        counts
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let split: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        for r in &split.records {
            if r.target.len() != split.vocabulary.len() || r.target.iter().any(|t| *t > 1) {
                return Err(Error::InvalidArgument(format!(
                    "{}: record {} has a malformed target",
                    path.display(),
                    r.image_id
                )));
            }
        }
        Ok(split)
    }
}

/// Bookkeeping from [`build_splits`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SplitReport {
    pub train: usize,
    pub test: usize,
    /// Records named by neither list.
    pub unlisted: usize,
    /// List entries with no matching record.
    pub unmatched: usize,
    pub warnings: Vec<String>,
}

/// Reads a split list: one image id per line, blank lines ignored.
pub fn read_id_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// Partitions records by list membership, in manifest order.
pub fn build_splits(
    records: Vec<SampleRecord>,
    vocabulary: &LabelVocabulary,
    train_list: impl AsRef<Path>,
    test_list: impl AsRef<Path>,
) -> Result<(DatasetSplit, DatasetSplit, SplitReport)> {
    let (train_list, test_list) = (train_list.as_ref(), test_list.as_ref());
    let train_ids: HashSet<String> = read_id_list(train_list)?.into_iter().collect();
    let test_ids: HashSet<String> = read_id_list(test_list)?.into_iter().collect();
    let mut overlap: Vec<String> = train_ids.intersection(&test_ids).cloned().collect();
    if !overlap.is_empty() {
        overlap.sort();
        return Err(Error::SplitOverlap(overlap));
    }

    let mut report = SplitReport::default();
    let seen: HashSet<&str> = records.iter().map(|r| r.image_id.as_str()).collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for r in &records {
        if train_ids.contains(&r.image_id) {
            train.push(r.clone());
        } else if test_ids.contains(&r.image_id) {
            test.push(r.clone());
        } else {
            report.unlisted += 1;
        }
    }
    report.unmatched = train_ids
        .iter()
        .chain(&test_ids)
        .filter(|id| !seen.contains(id.as_str()))
        .count();
    report.train = train.len();
    report.test = test.len();
    if report.unlisted > 0 {
        report
            .warnings
            .push(format!("{} record(s) appear in neither split list", report.unlisted));
    }
    if report.unmatched > 0 {
        report
            .warnings
            .push(format!("{} listed id(s) have no manifest row", report.unmatched));
    }
    for (name, n) in [("train", report.train), ("test", report.test)] {
        if n == 0 {
            report.warnings.push(format!("{name} split is empty"));
        }
    }
    let make = |name, records, list: &Path| DatasetSplit {
        name,
        vocabulary: vocabulary.clone(),
        source_list: Some(list.to_path_buf()),
        records,
    };
    Ok((
        make(SplitName::Train, train, train_list),
        make(SplitName::Test, test, test_list),
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(n: usize, vocab: &LabelVocabulary) -> Vec<SampleRecord> {
        (0..n)
            .map(|i| {
                let labels: std::collections::BTreeSet<String> =
                    [vocab.classes()[i % vocab.len()].clone()].into();
                SampleRecord {
                    image_id: format!("{i:03}.png"),
                    path: format!("img/{i:03}.png").into(),
                    target: vocab.encode(&labels).unwrap(),
                    labels,
                }
            })
            .collect()
    }

    fn list(dir: &Path, name: &str, ids: impl IntoIterator<Item = usize>) -> PathBuf {
        let p = dir.join(name);
        let body: String = ids.into_iter().map(|i| format!("{i:03}.png\n")).collect();
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn partitions_by_list() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = LabelVocabulary::nih();
        let (tr, te) = (list(dir.path(), "tr", 0..8), list(dir.path(), "te", 8..10));
        let (train, test, report) = build_splits(records(10, &vocab), &vocab, &tr, &te).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(train.source_list.as_deref(), Some(tr.as_path()));
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn empty_test_list_warns() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = LabelVocabulary::nih();
        let (tr, te) = (list(dir.path(), "tr", 0..10), list(dir.path(), "te", 0..0));
        let (_, test, report) = build_splits(records(10, &vocab), &vocab, &tr, &te).unwrap();
        assert!(test.is_empty());
        assert_eq!(report.warnings, vec!["test split is empty"]);
    }

    #[test]
    fn overlap_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = LabelVocabulary::nih();
        let (tr, te) = (list(dir.path(), "tr", 0..6), list(dir.path(), "te", 5..10));
        match build_splits(records(10, &vocab), &vocab, &tr, &te) {
            Err(Error::SplitOverlap(ids)) => assert_eq!(ids, vec!["005.png"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unlisted_and_unmatched_are_counted() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = LabelVocabulary::nih();
        let (tr, te) = (list(dir.path(), "tr", 0..5), list(dir.path(), "te", [7, 99]));
        let (_, _, report) = build_splits(records(10, &vocab), &vocab, &tr, &te).unwrap();
        assert_eq!((report.train, report.test, report.unlisted, report.unmatched), (5, 1, 4, 1));
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = LabelVocabulary::nih();
        let split = DatasetSplit {
            name: SplitName::Test,
            vocabulary: vocab.clone(),
            source_list: None,
            records: records(3, &vocab),
        };
        let p = dir.path().join("test.json");
        split.save(&p).unwrap();
        assert_eq!(DatasetSplit::load(&p).unwrap(), split);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"vocabulary\"") && text.contains("\"image_id\""));
    }
}
