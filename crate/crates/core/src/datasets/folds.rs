use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use super::io::write_atomic;
use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

pub const FOLD_HEADER: [&str; 2] = ["match_index", "fold"];

/// Assignment of every match to one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldSplit {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldSplit {
    pub fn new(k: usize, assignment: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("a split needs at least one fold".into()));
        }
        let mut sizes = vec![0usize; k];
        for &f in &assignment {
            if f >= k {
                return Err(Error::Config(format!("fold index {f} out of range for k = {k}")));
            }
            sizes[f] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Config(format!("fold {empty} is empty")));
        }
        Ok(FoldSplit { k, assignment })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Match indices held out in `fold`.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&m| self.assignment[m] == fold).collect()
    }

    /// Match indices used for training when `fold` is held out.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&m| self.assignment[m] != fold).collect()
    }
}

/// Seeded balanced split: fold sizes differ by at most one.
pub fn make_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Config(format!("cross-validation needs k >= 2, got {k}")));
    }
    if k > dataset.len() {
        return Err(Error::Config(format!("k = {k} exceeds the {} available matches", dataset.len())));
    }
    let mut assignment: Vec<usize> = (0..dataset.len()).map(|m| m % k).collect();
    assignment.shuffle(&mut seeded(seed));
    FoldSplit::new(k, assignment)
}

pub fn save_folds(split: &FoldSplit, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::with_capacity(split.len() * 8);
    writeln!(buf, "{}", FOLD_HEADER.join(",")).expect("in-memory write");
    for (m, f) in split.assignment.iter().enumerate() {
        writeln!(buf, "{m},{f}").expect("in-memory write");
    }
    write_atomic(path.as_ref(), &buf)
}

/// Reads a fold file; `k` is one more than the largest fold index and every
/// match index `0..n` must occur exactly once.
pub fn load_folds(path: impl AsRef<Path>, n_matches: usize) -> Result<FoldSplit> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().ne(FOLD_HEADER.iter().copied()) {
        return Err(parse_err(1, format!("expected header {:?}", FOLD_HEADER.join(","))));
    }
    let mut slots: Vec<Option<usize>> = vec![None; n_matches];
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
        }
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| parse_err(line, format!("{s:?} is not a non-negative integer")));
        let (m, f) = (parse(&record[0])?, parse(&record[1])?);
        let validation = |message: String| Error::Validation {
            path: path.to_path_buf(),
            line,
            message,
        };
        let slot = slots
            .get_mut(m)
            .ok_or_else(|| validation(format!("match index {m} out of range for {n_matches} matches")))?;
        if slot.replace(f).is_some() {
            return Err(validation(format!("match index {m} assigned twice")));
        }
    }
    let assignment = slots
        .into_iter()
        .enumerate()
        .map(|(m, f)| {
            f.ok_or_else(|| Error::Validation {
                path: path.to_path_buf(),
                line: 0,
                message: format!("match index {m} has no fold"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = assignment.iter().max().map_or(0, |&f| f + 1);
    FoldSplit::new(k, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_rps;

    #[test]
    fn balanced_and_deterministic() {
        let d = gen_rps(10, 0).unwrap();
        let split = make_folds(&d, 5, 3).unwrap();
        assert_eq!(split.fold_sizes(), vec![2; 5]);
        assert_eq!(split, make_folds(&d, 5, 3).unwrap());

        let d = gen_rps(103, 0).unwrap();
        let sizes = make_folds(&d, 5, 1).unwrap().fold_sizes();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(sizes.iter().sum::<usize>(), 103);
    }

    #[test]
    fn rejects_bad_k() {
        let d = gen_rps(4, 0).unwrap();
        assert!(matches!(make_folds(&d, 5, 0), Err(Error::Config(_))));
        assert!(matches!(make_folds(&d, 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = gen_rps(57, 2).unwrap();
        let split = make_folds(&d, 5, 9).unwrap();
        let p = dir.path().join("folds.csv");
        save_folds(&split, &p).unwrap();
        assert_eq!(load_folds(&p, 57).unwrap(), split);
        assert!(load_folds(&p, 58).is_err());
        assert!(load_folds(&p, 50).is_err());
    }

    #[test]
    fn train_and_test_partition() {
        let d = gen_rps(100, 2).unwrap();
        let split = make_folds(&d, 5, 9).unwrap();
        for f in 0..5 {
            let (train, test) = (split.train_indices(f), split.test_indices(f));
            assert_eq!(train.len(), 80);
            assert_eq!(test.len(), 20);
        }
    }
}
