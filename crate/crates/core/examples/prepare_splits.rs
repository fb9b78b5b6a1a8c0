//! Generates a small NIH-style corpus, parses it into train/test splits and
//! draws a stratified 10% subset.
//!
//!     cargo run --example prepare_splits

use cxrlens::cli::class_frequency_table;
use cxrlens::dataset::{build_splits, encode_rows, make_subset, parse_label_manifest, LabelVocabulary};
use cxrlens::synthetic::write_nih_fixture;

fn main() -> cxrlens::Result<()> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let fx = write_nih_fixture(dir.path(), 120, 64, 1)?;
    let vocab = LabelVocabulary::nih();

    let parsed = parse_label_manifest(&fx.manifest, &fx.image_root)?;
    let records = encode_rows(parsed.rows, &vocab)?;
    let (train, test, report) = build_splits(records, &vocab, &fx.train_list, &fx.test_list)?;
    println!("train {} / test {}, {} unlisted", report.train, report.test, report.unlisted);

    let mini = make_subset(&train, 0.1, 7)?;
    println!("10% subset keeps {} of {} training records\n", mini.len(), train.len());
    print!("{}", class_frequency_table(&[&train, &test]));

    let first = &train.records[0];
    println!("\n{} -> {:?} -> {:?}", first.image_id, first.target, vocab.decode(&first.target));
    Ok(())
}
