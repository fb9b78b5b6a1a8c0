use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Manifest label meaning "no disease present". Never a class; encodes as zeros.
pub const NO_FINDING: &str = "No Finding";

const NIH_CLASSES: &str = include_str!("../../assets/nih_chestxray14.txt");

/// Ordered set of class names; a class's position is its one-hot index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelVocabulary {
    classes: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelVocabulary {
    pub fn new<S: Into<String>>(classes: impl IntoIterator<Item = S>) -> Result<Self> {
        let classes: Vec<String> = classes.into_iter().map(Into::into).collect();
        if classes.is_empty() {
            return Err(Error::Vocabulary("no classes given".into()));
        }
        let mut index = HashMap::with_capacity(classes.len());
        for (i, c) in classes.iter().enumerate() {
            if c.trim().is_empty() || c.trim() != c {
                return Err(Error::Vocabulary(format!("malformed class name `{c}`")));
            }
            if c == NO_FINDING {
                return Err(Error::Vocabulary(format!("`{NO_FINDING}` cannot be a class")));
            }
            if index.insert(c.clone(), i).is_some() {
                return Err(Error::Vocabulary(format!("duplicate class `{c}`")));
            }
        }
        Ok(Self { classes, index })
    }

    /// The 14 NIH ChestX-ray14 finding classes.
    pub fn nih() -> Self {
        Self::parse(NIH_CLASSES).expect("bundled vocabulary is valid")
    }

    /// One class per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, class: &str) -> Option<usize> {
        self.index.get(class).copied()
    }

    /// Class name closest to `label` by edit similarity, ignoring case.
    pub fn nearest(&self, label: &str) -> &str {
        let needle = label.to_lowercase();
        self.classes
            .iter()
            .map(|c| (strsim::jaro_winkler(&needle, &c.to_lowercase()), c))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, c)| c.as_str())
            .expect("vocabulary is non-empty")
    }

    pub fn class_index(&self, class: &str) -> Result<usize> {
        self.index_of(class).ok_or_else(|| Error::UnknownClass {
            class: class.to_string(),
            vocabulary: self.classes.clone(),
        })
    }

    /// Multi-hot target for a label set. Unknown labels are rejected.
    pub fn encode<S: AsRef<str>>(&self, labels: impl IntoIterator<Item = S>) -> Result<Vec<u8>> {
        let mut target = vec![0u8; self.len()];
        for label in labels {
            let label = label.as_ref();
            match self.index_of(label) {
                Some(i) => target[i] = 1,
                None => {
                    return Err(Error::UnknownLabel {
                        label: label.to_string(),
                        nearest: self.nearest(label).to_string(),
                    })
                }
            }
        }
        Ok(target)
    }

    pub fn decode(&self, target: &[u8]) -> BTreeSet<String> {
        target
            .iter()
            .zip(&self.classes)
            .filter(|(t, _)| **t != 0)
            .map(|(_, c)| c.clone())
            .collect()
    }
}

impl TryFrom<Vec<String>> for LabelVocabulary {
    type Error = Error;

    fn try_from(classes: Vec<String>) -> Result<Self> {
        Self::new(classes)
    }
}

impl From<LabelVocabulary> for Vec<String> {
    fn from(v: LabelVocabulary) -> Self {
        v.classes
    }
}
