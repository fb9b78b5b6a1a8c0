//! Manifest parsing, label encoding, splits and subsets.

mod manifest;
mod split;
mod subset;
mod vocab;

pub use manifest::{
    encode_rows, parse_label_manifest, split_labels, ManifestRow, ParsedManifest, SampleRecord,
    IMAGE_COLUMN, LABELS_COLUMN,
};
pub use split::{build_splits, read_id_list, DatasetSplit, SplitName, SplitReport};
pub use subset::{make_subset, subset_size};
pub use vocab::{LabelVocabulary, NO_FINDING};
