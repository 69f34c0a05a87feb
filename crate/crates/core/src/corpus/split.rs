use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{write_corpus, CorpusEntry, CorpusError};

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("cannot split {n} entries into {k} folds (need 2 <= k <= n)")]
    InvalidFolds { k: usize, n: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// One fold: `(train, test)`.
pub type Fold<T> = (Vec<T>, Vec<T>);

/// `(train, test)` index lists for each fold. Test sets partition
/// `0..n` after a seeded shuffle; the first `n % k` folds get one extra
/// entry. Indices inside each list are ascending.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Fold<usize>>, SplitError> {
    if k < 2 || n < k {
        return Err(SplitError::InvalidFolds { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        start += size;
        let mut in_test = vec![false; n];
        for &i in &test {
            in_test[i] = true;
        }
        let train = (0..n).filter(|&i| !in_test[i]).collect();
        folds.push((train, test));
    }
    Ok(folds)
}

pub fn kfold_split<T: Clone>(entries: &[T], k: usize, seed: u64) -> Result<Vec<Fold<T>>, SplitError> {
    let pick = |idx: &[usize]| idx.iter().map(|&i| entries[i].clone()).collect::<Vec<T>>();
    Ok(kfold_indices(entries.len(), k, seed)?.iter().map(|(tr, te)| (pick(tr), pick(te))).collect())
}

/// Writes `fold_{i}_train.amr` and `fold_{i}_test.amr` for each fold into
/// `dir` and returns the written paths.
pub fn write_folds(entries: &[CorpusEntry], k: usize, seed: u64, dir: &Path) -> Result<Vec<PathBuf>, SplitError> {
    let folds = kfold_split(entries, k, seed)?;
    std::fs::create_dir_all(dir).map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for (i, (train, test)) in folds.iter().enumerate() {
        for (name, part) in [("train", train), ("test", test)] {
            let path = dir.join(format!("fold_{i}_{name}.amr"));
            write_corpus(part, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}
