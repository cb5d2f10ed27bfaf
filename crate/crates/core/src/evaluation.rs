//! Strength-relation accuracy.
//!
//! Empirical win rates are thresholded into relations: a rate inside the
//! closed band `[0.499, 0.501]` means equal strength, anything above is
//! stronger and anything below weaker. A model's accuracy is the share of
//! ordered pairs `i != j` with a known empirical relation for which the
//! relation implied by the model's predicted win probability agrees.
//!
//! [`run_cv`] trains a fresh model per fold for a number of epochs over the
//! training matches (reshuffled every epoch), then scores it against the
//! relations observed in the training matches and in the held-out fold.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{Dataset, FoldSplit};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::rating::{MatchRecord, PlayerId};
use crate::rng::derived;

pub const EQUAL_BAND: (f64, f64) = (0.499, 0.501);

const MODEL_STREAM: u64 = 0x006d_6f64_656c;
const SHUFFLE_STREAM: u64 = 0x7368_7566;

/// Accumulated pairwise scores; ties count half a win to each side.
#[derive(Clone, Debug, PartialEq)]
pub struct WinRateTable {
    n: usize,
    wins: Vec<f64>,
    counts: Vec<u32>,
}

impl WinRateTable {
    pub fn n_players(&self) -> usize {
        self.n
    }

    pub fn wins(&self, i: usize, j: usize) -> f64 {
        self.wins[i * self.n + j]
    }

    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n + j]
    }

    /// Empirical rate of `i` against `j`, or `None` without observations.
    pub fn win_rate(&self, i: usize, j: usize) -> Option<f64> {
        match self.count(i, j) {
            0 => None,
            c => Some(self.wins(i, j) / c as f64),
        }
    }
}

pub fn empirical_win_rates<'a>(matches: impl IntoIterator<Item = &'a MatchRecord>, n_players: usize) -> Result<WinRateTable> {
    let n = n_players;
    let mut wins = vec![0.0; n * n];
    let mut counts = vec![0u32; n * n];
    for m in matches {
        let (i, j) = (m.i.0, m.j.0);
        if i >= n || j >= n {
            return Err(Error::UnknownPlayer { id: i.max(j), n_players: n });
        }
        let o = m.outcome.value();
        wins[i * n + j] += o;
        wins[j * n + i] += 1.0 - o;
        counts[i * n + j] += 1;
        counts[j * n + i] += 1;
    }
    Ok(WinRateTable { n, wins, counts })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Stronger,
    Weaker,
    Equal,
    Unknown,
}

impl Relation {
    pub fn flipped(self) -> Self {
        match self {
            Relation::Stronger => Relation::Weaker,
            Relation::Weaker => Relation::Stronger,
            r => r,
        }
    }
}

pub fn relation_from_winrate(w: f64) -> Relation {
    if w > EQUAL_BAND.1 {
        Relation::Stronger
    } else if w < EQUAL_BAND.0 {
        Relation::Weaker
    } else {
        Relation::Equal
    }
}

/// Pairwise relations; the diagonal is always `Equal`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationMatrix {
    n: usize,
    rel: Vec<Relation>,
}

impl RelationMatrix {
    /// Builds a matrix from the upper triangle: `upper(i, j)` is consulted for
    /// `i < j` and the lower triangle is its mirror image.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> Relation) -> Self {
        let mut rel = vec![Relation::Equal; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let r = upper(i, j);
                rel[i * n + j] = r;
                rel[j * n + i] = r.flipped();
            }
        }
        RelationMatrix { n, rel }
    }

    pub fn n_players(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Relation {
        self.rel[i * self.n + j]
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.get(i, i) == Relation::Equal && (0..self.n).all(|j| self.get(i, j) == self.get(j, i).flipped())
        })
    }
}

/// Relations observed in `matches`; pairs that never met are `Unknown`.
pub fn ground_truth_relations<'a>(matches: impl IntoIterator<Item = &'a MatchRecord>, n_players: usize) -> Result<RelationMatrix> {
    let table = empirical_win_rates(matches, n_players)?;
    Ok(RelationMatrix::from_upper(n_players, |i, j| {
        table.win_rate(i, j).map_or(Relation::Unknown, relation_from_winrate)
    }))
}

/// Relations implied by a win-probability predictor. The predictor is
/// evaluated on `i < j`; the mirrored pair gets the flipped relation.
pub fn predicted_relations(n_players: usize, predictor: impl Fn(PlayerId, PlayerId) -> f64) -> RelationMatrix {
    RelationMatrix::from_upper(n_players, |i, j| relation_from_winrate(predictor(PlayerId(i), PlayerId(j))))
}

/// Percentage of known ordered pairs `i != j` on which `predicted` agrees
/// with `truth`.
pub fn relation_accuracy(truth: &RelationMatrix, predicted: &RelationMatrix) -> Result<f64> {
    if truth.n != predicted.n {
        return Err(Error::Domain(format!(
            "relation matrices differ in size ({} vs {})",
            truth.n, predicted.n
        )));
    }
    let n = truth.n;
    let (mut hits, mut total) = (0u64, 0u64);
    for i in 0..n {
        let row_t = &truth.rel[i * n..(i + 1) * n];
        let row_p = &predicted.rel[i * n..(i + 1) * n];
        for (j, (&t, &p)) in row_t.iter().zip(row_p).enumerate() {
            if i != j && t != Relation::Unknown {
                total += 1;
                hits += u64::from(t == p);
            }
        }
    }
    if total == 0 {
        return Err(Error::NoComparablePairs);
    }
    Ok(100.0 * hits as f64 / total as f64)
}

/// Per-fold accuracies (percent) with their mean and population standard
/// deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub per_fold_train: Vec<f64>,
    pub per_fold_test: Vec<f64>,
    pub mean_train: f64,
    pub std_train: f64,
    pub mean_test: f64,
    pub std_test: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl AccuracyReport {
    pub fn from_folds(per_fold_train: Vec<f64>, per_fold_test: Vec<f64>) -> Self {
        let (mean_train, std_train) = mean_std(&per_fold_train);
        let (mean_test, std_test) = mean_std(&per_fold_test);
        AccuracyReport {
            per_fold_train,
            per_fold_test,
            mean_train,
            std_train,
            mean_test,
            std_test,
        }
    }
}

/// Header of the one-line report CSV.
pub const REPORT_CSV_HEADER: [&str; 7] = ["dataset", "model", "M/K", "train_mean", "train_std", "test_mean", "test_std"];

/// One table cell: which dataset and model produced a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub model: String,
    pub param: String,
    pub report: AccuracyReport,
}

impl ReportRow {
    pub fn csv_fields(&self) -> [String; 7] {
        let r = &self.report;
        [
            self.dataset.clone(),
            self.model.clone(),
            self.param.clone(),
            r.mean_train.to_string(),
            r.std_train.to_string(),
            r.mean_test.to_string(),
            r.std_test.to_string(),
        ]
    }
}

/// Cross-validated accuracy of `spec` on `dataset`.
///
/// Folds run in parallel; each draws from streams derived only from
/// `(seed, fold)` and `(seed, fold, epoch)`, so the result does not depend on
/// the thread count.
pub fn run_cv(dataset: &Dataset, folds: &FoldSplit, spec: &ModelSpec, epochs: usize, seed: u64) -> Result<AccuracyReport> {
    spec.validate()?;
    if folds.len() != dataset.len() {
        return Err(Error::Config(format!(
            "split covers {} matches, dataset has {}",
            folds.len(),
            dataset.len()
        )));
    }
    if epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    let results = (0..folds.k())
        .into_par_iter()
        .map(|fold| run_fold(dataset, folds, spec, epochs, seed, fold))
        .collect::<Result<Vec<_>>>()?;
    let (train, test) = results.into_iter().unzip();
    Ok(AccuracyReport::from_folds(train, test))
}

fn run_fold(dataset: &Dataset, folds: &FoldSplit, spec: &ModelSpec, epochs: usize, seed: u64, fold: usize) -> Result<(f64, f64)> {
    let train: Vec<MatchRecord> = folds.train_indices(fold).into_iter().map(|m| dataset.matches[m]).collect();
    let test: Vec<MatchRecord> = folds.test_indices(fold).into_iter().map(|m| dataset.matches[m]).collect();
    if train.is_empty() {
        return Err(Error::Config(format!("fold {fold} leaves no training matches")));
    }
    let n = dataset.n_players();
    let fold_tag = fold as u64;
    let mut model_rng = derived(seed, &[fold_tag, MODEL_STREAM]);
    let mut model = spec.build(n, &mut model_rng)?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..epochs {
        for (k, slot) in order.iter_mut().enumerate() {
            *slot = k;
        }
        order.shuffle(&mut derived(seed, &[fold_tag, SHUFFLE_STREAM, epoch as u64]));
        for &k in &order {
            model.observe(&train[k], &mut model_rng)?;
        }
    }
    let predicted = model.predicted_relations();
    let train_acc = relation_accuracy(&ground_truth_relations(&train, n)?, &predicted)?;
    let test_acc = relation_accuracy(&ground_truth_relations(&test, n)?, &predicted)?;
    Ok((train_acc, test_acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_rps, make_folds};
    use crate::rating::{expected_score, EloConfig, Outcome};
    use crate::rcc::RccConfig;
    use proptest::prelude::*;

    fn rel_strategy() -> impl Strategy<Value = Relation> {
        prop_oneof![
            Just(Relation::Stronger),
            Just(Relation::Weaker),
            Just(Relation::Equal),
            Just(Relation::Unknown)
        ]
    }

    #[test]
    fn win_rate_examples() {
        let t = empirical_win_rates(&[MatchRecord::new(0, 1, Outcome::Win)], 2).unwrap();
        assert_eq!(t.win_rate(0, 1), Some(1.0));
        assert_eq!(t.win_rate(1, 0), Some(0.0));
        let two = [MatchRecord::new(0, 1, Outcome::Win), MatchRecord::new(0, 1, Outcome::Loss)];
        assert_eq!(empirical_win_rates(&two, 2).unwrap().win_rate(0, 1), Some(0.5));
        let tie = [MatchRecord::new(0, 1, Outcome::Draw)];
        let t = empirical_win_rates(&tie, 3).unwrap();
        assert_eq!(t.win_rate(0, 1), Some(0.5));
        assert_eq!(t.win_rate(0, 2), None);
        assert!(empirical_win_rates(&tie, 1).is_err());
    }

    #[test]
    fn win_rate_table_is_consistent() {
        let d = gen_rps(2000, 5).unwrap();
        let t = empirical_win_rates(&d.matches, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.count(i, j), t.count(j, i));
                assert_eq!(t.wins(i, j) + t.wins(j, i), t.count(i, j) as f64);
            }
        }
    }

    #[test]
    fn threshold_band() {
        assert_eq!(relation_from_winrate(0.5), Relation::Equal);
        assert_eq!(relation_from_winrate(0.501), Relation::Equal);
        assert_eq!(relation_from_winrate(0.499), Relation::Equal);
        assert_eq!(relation_from_winrate(0.502), Relation::Stronger);
        assert_eq!(relation_from_winrate(0.4985), Relation::Weaker);
        assert_eq!(relation_from_winrate(501.0 / 1000.0), Relation::Equal);
    }

    #[test]
    fn rps_ground_truth() {
        let d = gen_rps(10_000, 1).unwrap();
        let truth = ground_truth_relations(&d.matches, 3).unwrap();
        let (rock, paper, scissors) = (0, 1, 2);
        assert_eq!(truth.get(rock, paper), Relation::Weaker);
        assert_eq!(truth.get(rock, scissors), Relation::Stronger);
        assert_eq!(truth.get(rock, rock), Relation::Equal);
        assert!(truth.is_antisymmetric());

        let empty = ground_truth_relations(&[], 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { Relation::Equal } else { Relation::Unknown };
                assert_eq!(empty.get(i, j), expected);
            }
        }
    }

    #[test]
    fn accuracy_examples() {
        let d = gen_rps(1000, 1).unwrap();
        let truth = ground_truth_relations(&d.matches, 3).unwrap();
        assert_eq!(relation_accuracy(&truth, &truth).unwrap(), 100.0);
        let all_equal = predicted_relations(3, |_, _| 0.5);
        assert!((0..3).all(|i| (0..3).all(|j| all_equal.get(i, j) == Relation::Equal)));
        assert_eq!(relation_accuracy(&truth, &all_equal).unwrap(), 0.0);

        // Pair (0, 2) unknown: the remaining four ordered pairs count.
        let partial = RelationMatrix::from_upper(3, |i, j| match (i, j) {
            (0, 2) => Relation::Unknown,
            _ => Relation::Stronger,
        });
        let pred = RelationMatrix::from_upper(3, |i, j| if (i, j) == (0, 1) { Relation::Stronger } else { Relation::Weaker });
        assert_eq!(relation_accuracy(&partial, &pred).unwrap(), 50.0);

        let unknown = ground_truth_relations(&[], 3).unwrap();
        assert!(matches!(relation_accuracy(&unknown, &pred), Err(Error::NoComparablePairs)));
        let small = ground_truth_relations(&[], 2).unwrap();
        assert!(relation_accuracy(&small, &pred).is_err());
    }

    #[test]
    fn std_is_population() {
        let r = AccuracyReport::from_folds(vec![1.0, 3.0], vec![100.0; 5]);
        assert_eq!(r.mean_train, 2.0);
        assert_eq!(r.std_train, 1.0);
        assert_eq!(r.std_test, 0.0);
    }

    #[test]
    fn cv_split_sizes_and_determinism() {
        let d = gen_rps(500, 2).unwrap();
        let folds = make_folds(&d, 5, 2).unwrap();
        let spec = ModelSpec::EloRcc(RccConfig::with_m(3));
        let a = run_cv(&d, &folds, &spec, 3, 11).unwrap();
        let b = run_cv(&d, &folds, &spec, 3, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_fold_test.len(), 5);
        assert!(run_cv(&d, &folds, &spec, 0, 11).is_err());
        let other = gen_rps(400, 2).unwrap();
        assert!(run_cv(&other, &folds, &spec, 1, 11).is_err());
    }

    proptest! {
        #[test]
        fn accuracy_matches_double_loop(
            t in proptest::collection::vec(rel_strategy(), 100),
            p in proptest::collection::vec(rel_strategy(), 100),
        ) {
            let truth = RelationMatrix::from_upper(10, |i, j| t[i * 10 + j]);
            let pred = RelationMatrix::from_upper(10, |i, j| p[i * 10 + j]);
            let (mut hits, mut total) = (0, 0);
            for i in 0..10 {
                for j in 0..10 {
                    if i == j || truth.get(i, j) == Relation::Unknown {
                        continue;
                    }
                    total += 1;
                    if truth.get(i, j) == pred.get(i, j) {
                        hits += 1;
                    }
                }
            }
            match relation_accuracy(&truth, &pred) {
                Ok(acc) => prop_assert_eq!(acc, 100.0 * hits as f64 / total as f64),
                Err(_) => prop_assert_eq!(total, 0),
            }
            prop_assert!(truth.is_antisymmetric());
            if total > 0 {
                prop_assert_eq!(relation_accuracy(&truth, &truth).unwrap(), 100.0);
            }
        }

        #[test]
        fn elo_relations_are_antisymmetric(ratings in proptest::collection::vec(500.0f64..1500.0, 2..12)) {
            let n = ratings.len();
            let rel = predicted_relations(n, |i, j| expected_score(ratings[i.0], ratings[j.0]));
            prop_assert!(rel.is_antisymmetric());
            for i in 0..n {
                for j in 0..n {
                    if i != j && (ratings[i] - ratings[j]).abs() > 1.0 {
                        prop_assert_ne!(rel.get(i, j), Relation::Equal);
                    }
                }
            }
        }
    }

    #[test]
    fn elo_spec_runs() {
        let d = gen_rps(300, 3).unwrap();
        let folds = make_folds(&d, 3, 1).unwrap();
        let r = run_cv(&d, &folds, &ModelSpec::Elo(EloConfig::with_k(16.0)), 2, 0).unwrap();
        assert!(r.per_fold_train.iter().all(|a| (0.0..=100.0).contains(a)));
    }
}
