use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::split::DatasetSplit;
use crate::error::{Error, Result};

/// Number of records a subset of `fraction` keeps out of `n`.
pub fn subset_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64).round() as usize
}

/// Deterministic stratified subset of a split.
///
/// Records are drawn in a seeded random order, except that classes with at
/// least `ceil(1 / fraction)` positives are first given one positive each
/// (greedily, preferring records that cover several such classes). The
/// result keeps the parent's record order and vocabulary.
pub fn make_subset(split: &DatasetSplit, fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subset fraction must be in (0, 1], got {fraction}"
        )));
    }
    let total = split.len();
    let size = subset_size(total, fraction);
    if fraction * (total as f64) < 1.0 || size == 0 {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} of {total} records selects nothing"
        )));
    }
    if size >= total {
        return Ok(split.clone());
    }

    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    // classes that must keep a positive
    let min_support = (1.0 / fraction - 1e-9).ceil() as usize;
    let mut uncovered: Vec<bool> = split
        .class_counts()
        .iter()
        .map(|&c| c > 0 && c >= min_support)
        .collect();
    let mut chosen = vec![false; total];
    let mut picked = 0;
    while picked < size && uncovered.iter().any(|u| *u) {
        let gain = |i: usize| {
            split.records[i]
                .target
                .iter()
                .zip(&uncovered)
                .filter(|(t, u)| **t == 1 && **u)
                .count()
        };
        // first maximum in shuffled order
        let best = order
            .iter()
            .copied()
            .filter(|&i| !chosen[i])
            .map(|i| (gain(i), i))
            .fold(None, |acc: Option<(usize, usize)>, (g, i)| match acc {
                Some((bg, _)) if bg >= g => acc,
                _ => Some((g, i)),
            });
        let Some((g, i)) = best.filter(|(g, _)| *g > 0) else {
            break;
        };
        debug_assert!(g > 0);
        chosen[i] = true;
        picked += 1;
        for (u, t) in uncovered.iter_mut().zip(&split.records[i].target) {
            if *t == 1 {
                *u = false;
            }
        }
    }
    for &i in &order {
        if picked == size {
            break;
        }
        if !chosen[i] {
            chosen[i] = true;
            picked += 1;
        }
    }

    let records = split
        .records
        .iter()
        .zip(&chosen)
        .filter(|(_, c)| **c)
        .map(|(r, _)| r.clone())
        .collect();
    Ok(DatasetSplit {
        records,
        ..split.clone()
    })
}
