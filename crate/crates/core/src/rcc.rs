//! Elo Residual Counter Category (Elo-RCC).
//!
//! An online learner that pairs plain Elo ratings with an `M x M`
//! antisymmetric counter table of residual win values. Every player carries
//! a categorical distribution over the `M` counter categories; categories are
//! sampled during training to explore assignments, and the most probable
//! category is used for prediction.
//!
//! Each match runs four steps:
//!
//! 1. Elo update of both ratings with `K = eta_r`.
//! 2. Sample `c_i`, `c_j`; regress `T[c_i][c_j]` toward the residual
//!    `W = O_i - P_i` with rate `eta_t` and mirror it into `T[c_j][c_i]`.
//! 3. Regress the expected residuals `E_i[c_j]` toward `W` and `E_j[c_i]`
//!    toward `-W`.
//! 4. For each player, pick `c* = argmin_c sum_c' |T[c][c'] - E_p[c']|` and
//!    move the player's distribution toward the one-hot vector at `c*` with
//!    rate `eta_c`.
//!
//! The move in step 4 comes in two flavours selected by [`CategoryUpdate`].
//! The default keeps a vector of logits per player and takes a
//! cross-entropy gradient step `l[c] += eta_c (delta(c, c*) - softmax(l)[c])`;
//! the distribution is `softmax(l)`. [`CategoryUpdate::Convex`] applies the
//! same expression directly to the probabilities, which concentrates mass
//! geometrically fast and commits players to categories much earlier.
//!
//! Step 4 needs the discrepancy of every category for the two players. The
//! state keeps those sums cached for all players and patches them whenever a
//! table or residual entry changes, which costs `O(N + M)` per match instead of
//! `O(M^2)`. [`category_discrepancies`] is the direct definition; the cache is
//! rebuilt from it whenever a state is constructed from parts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rating::{expected_score, MatchRecord, PlayerId, RatingTable};

/// How step 4 moves a player's category distribution toward its target.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CategoryUpdate {
    /// Gradient step on per-player logits; the distribution is their softmax.
    #[default]
    Softmax,
    /// Convex combination of the probability vector and the one-hot target.
    Convex,
}

impl CategoryUpdate {
    pub fn name(self) -> &'static str {
        match self {
            CategoryUpdate::Softmax => "softmax",
            CategoryUpdate::Convex => "convex",
        }
    }
}

impl std::str::FromStr for CategoryUpdate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(CategoryUpdate::Softmax),
            "convex" => Ok(CategoryUpdate::Convex),
            other => Err(Error::Config(format!("unknown category update {other:?} (expected softmax or convex)"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RccConfig {
    /// Number of counter categories.
    pub m: usize,
    /// Rating rate, used as the Elo K-factor.
    pub eta_r: f64,
    /// Counter table and expected residual rate.
    pub eta_t: f64,
    /// Category distribution rate.
    pub eta_c: f64,
    pub initial_rating: f64,
    #[serde(default)]
    pub category_update: CategoryUpdate,
}

impl Default for RccConfig {
    fn default() -> Self {
        RccConfig {
            m: 81,
            eta_r: 0.1,
            eta_t: 0.00025,
            eta_c: 0.01,
            initial_rating: 1000.0,
            category_update: CategoryUpdate::Softmax,
        }
    }
}

impl RccConfig {
    pub fn with_m(m: usize) -> Self {
        RccConfig {
            m,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("number of categories m must be at least 1".into()));
        }
        if !(self.eta_r > 0.0 && self.eta_r.is_finite()) {
            return Err(Error::Config(format!("eta_r must be positive, got {}", self.eta_r)));
        }
        // Table entries stay in [-1, 1] only while each step is a convex combination.
        if !(self.eta_t > 0.0 && self.eta_t <= 1.0) {
            return Err(Error::Config(format!("eta_t must lie in (0, 1], got {}", self.eta_t)));
        }
        if !(self.eta_c > 0.0 && self.eta_c <= 1.0) {
            return Err(Error::Config(format!("eta_c must lie in (0, 1], got {}", self.eta_c)));
        }
        if !self.initial_rating.is_finite() {
            return Err(Error::Config("initial_rating must be finite".into()));
        }
        Ok(())
    }
}

/// Antisymmetric `M x M` table of residual win values between categories.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterTable {
    m: usize,
    cells: Vec<f64>,
}

impl CounterTable {
    pub fn zeros(m: usize) -> Self {
        CounterTable {
            m,
            cells: vec![0.0; m * m],
        }
    }

    /// Builds a table from rows, checking shape, antisymmetry and bounds.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let mut cells = Vec::with_capacity(m * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::Format(format!(
                    "counter table row has {} entries, expected {m}",
                    row.len()
                )));
            }
            cells.extend_from_slice(row);
        }
        let table = CounterTable { m, cells };
        for a in 0..m {
            for b in 0..m {
                let v = table.get(a, b);
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::Format(format!("counter table entry ({a}, {b}) = {v} out of [-1, 1]")));
                }
                if v != -table.get(b, a) {
                    return Err(Error::Format(format!("counter table is not antisymmetric at ({a}, {b})")));
                }
            }
        }
        Ok(table)
    }

    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.cells[a * self.m + b]
    }

    #[inline]
    pub fn row(&self, a: usize) -> &[f64] {
        &self.cells[a * self.m..(a + 1) * self.m]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.m).map(|a| self.row(a).to_vec()).collect()
    }

    fn set_pair(&mut self, a: usize, b: usize, value: f64) {
        self.cells[a * self.m + b] = value;
        self.cells[b * self.m + a] = -value;
    }
}

/// `D[c] = sum_c' |T[c][c'] - residuals[c']|` for every category `c`.
pub fn category_discrepancies(table: &CounterTable, residuals: &[f64]) -> Vec<f64> {
    assert_eq!(residuals.len(), table.size());
    (0..table.size())
        .map(|c| {
            table
                .row(c)
                .iter()
                .zip(residuals)
                .map(|(t, e)| (t - e).abs())
                .sum()
        })
        .collect()
}

/// Index of the smallest value, lowest index on ties.
pub fn argmin(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (c, v) in values.into_iter().enumerate() {
        if v < best_value {
            best = c;
            best_value = v;
        }
    }
    best
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (c, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = c;
            best_value = v;
        }
    }
    best
}

/// What one call to [`RccState::process_match`] computed.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RccStep {
    pub expected: f64,
    pub residual: f64,
    /// Sampled categories `(c_i, c_j)`.
    pub sampled: (usize, usize),
    /// Refinement targets `(c*_i, c*_j)`.
    pub refined: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct RccState {
    config: RccConfig,
    n: usize,
    ratings: RatingTable,
    table: CounterTable,
    /// Category-major: `residuals[c * n + p]`.
    residuals: Vec<f64>,
    /// Player-major: `dists[p * m + c]`.
    dists: Vec<f64>,
    /// Player-major logits behind `dists`; empty for the convex update.
    logits: Vec<f64>,
    /// Category-major cache of `D_p[c]`.
    discrepancy: Vec<f64>,
}

impl PartialEq for RccState {
    fn eq(&self, other: &Self) -> bool {
        // The cache is derived data.
        self.config == other.config
            && self.ratings == other.ratings
            && self.table == other.table
            && self.residuals == other.residuals
            && self.dists == other.dists
            && self.logits == other.logits
    }
}

impl RccState {
    pub fn new(n_players: usize, config: RccConfig) -> Result<Self> {
        config.validate()?;
        if n_players == 0 {
            return Err(Error::Config("at least one player is required".into()));
        }
        let m = config.m;
        Ok(RccState {
            config,
            n: n_players,
            ratings: RatingTable::new(n_players, config.initial_rating),
            table: CounterTable::zeros(m),
            residuals: vec![0.0; m * n_players],
            dists: vec![1.0 / m as f64; m * n_players],
            logits: match config.category_update {
                CategoryUpdate::Softmax => vec![0.0; m * n_players],
                CategoryUpdate::Convex => Vec::new(),
            },
            discrepancy: vec![0.0; m * n_players],
        })
    }

    /// Reassembles a state from its player-major parts, validating every
    /// invariant.
    ///
    /// `category_rows` holds one row per player in the form the configured
    /// update works on: logits for [`CategoryUpdate::Softmax`], probabilities
    /// for [`CategoryUpdate::Convex`] (see [`RccState::category_rows`]).
    pub fn from_parts(
        config: RccConfig,
        ratings: RatingTable,
        table: CounterTable,
        residual_rows: &[Vec<f64>],
        category_rows: &[Vec<f64>],
    ) -> Result<Self> {
        config.validate()?;
        let n = ratings.len();
        let m = config.m;
        if n == 0 {
            return Err(Error::Format("state has no players".into()));
        }
        if table.size() != m {
            return Err(Error::Format(format!("counter table is {0}x{0}, config says m = {m}", table.size())));
        }
        if residual_rows.len() != n || category_rows.len() != n {
            return Err(Error::Format("residual and category tables need one row per player".into()));
        }
        let softmax = config.category_update == CategoryUpdate::Softmax;
        let mut residuals = vec![0.0; m * n];
        let mut dists = Vec::with_capacity(m * n);
        let mut logits = Vec::new();
        for (p, (e_row, c_row)) in residual_rows.iter().zip(category_rows).enumerate() {
            if e_row.len() != m || c_row.len() != m {
                return Err(Error::Format(format!("row {p} does not have {m} categories")));
            }
            for (c, &e) in e_row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&e) {
                    return Err(Error::Format(format!("expected residual ({p}, {c}) = {e} out of [-1, 1]")));
                }
                residuals[c * n + p] = e;
            }
            if softmax {
                if c_row.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Format(format!("category logits of player {p} are not finite")));
                }
                logits.extend_from_slice(c_row);
                dists.resize(dists.len() + m, 0.0);
                softmax_into(c_row, &mut dists[p * m..]);
            } else {
                if c_row.iter().any(|&x| !(x >= 0.0)) || (c_row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::Format(format!("category distribution of player {p} is not on the simplex")));
                }
                dists.extend_from_slice(c_row);
            }
        }
        let mut state = RccState {
            config,
            n,
            ratings,
            table,
            residuals,
            dists,
            logits,
            discrepancy: vec![0.0; m * n],
        };
        state.rebuild_discrepancies();
        Ok(state)
    }

    fn rebuild_discrepancies(&mut self) {
        for p in 0..self.n {
            let d = category_discrepancies(&self.table, &self.residual_row(PlayerId(p)));
            for (c, v) in d.into_iter().enumerate() {
                self.discrepancy[c * self.n + p] = v;
            }
        }
    }

    pub fn config(&self) -> &RccConfig {
        &self.config
    }

    pub fn n_players(&self) -> usize {
        self.n
    }

    pub fn n_categories(&self) -> usize {
        self.config.m
    }

    pub fn ratings(&self) -> &RatingTable {
        &self.ratings
    }

    pub fn table(&self) -> &CounterTable {
        &self.table
    }

    pub fn check_player(&self, p: PlayerId) -> Result<()> {
        self.ratings.check(p)
    }

    #[inline]
    pub fn residual(&self, p: PlayerId, c: usize) -> f64 {
        self.residuals[c * self.n + p.0]
    }

    pub fn residual_row(&self, p: PlayerId) -> Vec<f64> {
        (0..self.config.m).map(|c| self.residual(p, c)).collect()
    }

    pub fn residual_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|p| self.residual_row(PlayerId(p))).collect()
    }

    #[inline]
    pub fn distribution(&self, p: PlayerId) -> &[f64] {
        let m = self.config.m;
        &self.dists[p.0 * m..(p.0 + 1) * m]
    }

    pub fn distribution_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|p| self.distribution(PlayerId(p)).to_vec()).collect()
    }

    /// Logits of `p`, or `None` under the convex update.
    pub fn logits(&self, p: PlayerId) -> Option<&[f64]> {
        let m = self.config.m;
        (!self.logits.is_empty()).then(|| &self.logits[p.0 * m..(p.0 + 1) * m])
    }

    /// Per-player rows of the parameters the category update works on, as
    /// accepted by [`RccState::from_parts`].
    pub fn category_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|p| self.logits(PlayerId(p)).unwrap_or(self.distribution(PlayerId(p))).to_vec())
            .collect()
    }

    /// Cached discrepancies `D_p[c]` for every category.
    pub fn discrepancies(&self, p: PlayerId) -> Vec<f64> {
        (0..self.config.m)
            .map(|c| self.discrepancy[c * self.n + p.0])
            .collect()
    }

    pub fn sample_category<R: Rng + ?Sized>(&self, p: PlayerId, rng: &mut R) -> Result<usize> {
        self.check_player(p)?;
        Ok(sample_from(self.distribution(p), rng))
    }

    /// Most probable category of `p`, lowest index on ties.
    pub fn best_category(&self, p: PlayerId) -> usize {
        argmax(self.distribution(p).iter().copied())
    }

    /// Combined win probability: Elo expectation plus the counter-table
    /// residual between the two players' best categories, clamped to `[0, 1]`.
    pub fn predict_win_prob(&self, i: PlayerId, j: PlayerId) -> f64 {
        let elo = expected_score(self.ratings.rating(i), self.ratings.rating(j));
        let residual = self.table.get(self.best_category(i), self.best_category(j));
        (elo + residual).clamp(0.0, 1.0)
    }

    /// Snapshot with every player's best category resolved up front.
    pub fn predictor(&self) -> RccPredictor<'_> {
        RccPredictor {
            state: self,
            best: (0..self.n).map(|p| self.best_category(PlayerId(p))).collect(),
        }
    }

    /// Runs the four update steps for one match.
    pub fn process_match<R: Rng + ?Sized>(&mut self, m: &MatchRecord, rng: &mut R) -> Result<RccStep> {
        self.check_player(m.i)?;
        self.check_player(m.j)?;
        let (i, j) = (m.i, m.j);

        // Step 1
        let step = self.ratings.apply(m, self.config.eta_r)?;
        let w = step.residual;

        // Step 2
        let ci = sample_from(self.distribution(i), rng);
        let cj = sample_from(self.distribution(j), rng);
        if ci != cj {
            let old = self.table.get(ci, cj);
            let new = old + self.config.eta_t * (w - old);
            self.table.set_pair(ci, cj, new);
            self.patch_table_pair(ci, cj, old, new);
        }

        // Step 3
        let e_i = self.residual(i, cj);
        self.set_residual(i, cj, e_i + self.config.eta_t * (w - e_i));
        let e_j = self.residual(j, ci);
        self.set_residual(j, ci, e_j + self.config.eta_t * (-w - e_j));

        // Step 4
        let best_i = self.refinement_target(i);
        let best_j = self.refinement_target(j);
        self.nudge_distribution(i, best_i);
        self.nudge_distribution(j, best_j);

        Ok(RccStep {
            expected: step.expected,
            residual: w,
            sampled: (ci, cj),
            refined: (best_i, best_j),
        })
    }

    /// Patches the discrepancy cache of rows `a` and `b` after
    /// `T[a][b]` went from `old` to `new` (and `T[b][a]` from `-old` to `-new`).
    fn patch_table_pair(&mut self, a: usize, b: usize, old: f64, new: f64) {
        let n = self.n;
        let e_a = &self.residuals[a * n..(a + 1) * n];
        let e_b = &self.residuals[b * n..(b + 1) * n];
        let (row_a, row_b) = two_rows_mut(&mut self.discrepancy, n, a, b);
        for p in 0..n {
            row_a[p] += (new - e_b[p]).abs() - (old - e_b[p]).abs();
            row_b[p] += (-new - e_a[p]).abs() - (-old - e_a[p]).abs();
        }
    }

    fn set_residual(&mut self, p: PlayerId, c: usize, new: f64) {
        let n = self.n;
        let slot = c * n + p.0;
        let old = self.residuals[slot];
        self.residuals[slot] = new;
        for row in 0..self.config.m {
            let t = self.table.get(row, c);
            self.discrepancy[row * n + p.0] += (t - new).abs() - (t - old).abs();
        }
    }

    fn refinement_target(&self, p: PlayerId) -> usize {
        argmin((0..self.config.m).map(|c| self.discrepancy[c * self.n + p.0]))
    }

    fn nudge_distribution(&mut self, p: PlayerId, target: usize) {
        let m = self.config.m;
        let eta = self.config.eta_c;
        let probs = &mut self.dists[p.0 * m..(p.0 + 1) * m];
        match self.config.category_update {
            CategoryUpdate::Convex => {
                for (c, x) in probs.iter_mut().enumerate() {
                    let delta = if c == target { 1.0 } else { 0.0 };
                    *x += eta * (delta - *x);
                }
            }
            CategoryUpdate::Softmax => {
                let logits = &mut self.logits[p.0 * m..(p.0 + 1) * m];
                for (c, (l, &x)) in logits.iter_mut().zip(probs.iter()).enumerate() {
                    let delta = if c == target { 1.0 } else { 0.0 };
                    *l += eta * (delta - x);
                }
                softmax_into(logits, probs);
            }
        }
    }
}

/// Pure form of [`RccState::process_match`].
pub fn process_match<R: Rng + ?Sized>(state: &RccState, m: &MatchRecord, rng: &mut R) -> Result<(RccState, RccStep)> {
    let mut next = state.clone();
    let step = next.process_match(m, rng)?;
    Ok((next, step))
}

/// Residual win value of an outcome against its expectation.
#[inline]
pub fn residual_win_value(outcome: f64, expected: f64) -> f64 {
    outcome - expected
}

pub struct RccPredictor<'a> {
    state: &'a RccState,
    best: Vec<usize>,
}

impl RccPredictor<'_> {
    pub fn best_category(&self, p: PlayerId) -> usize {
        self.best[p.0]
    }

    pub fn predict(&self, i: PlayerId, j: PlayerId) -> f64 {
        let s = self.state;
        let elo = expected_score(s.ratings.rating(i), s.ratings.rating(j));
        (elo + s.table.get(self.best[i.0], self.best[j.0])).clamp(0.0, 1.0)
    }
}

fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        total += *o;
    }
    for o in out.iter_mut().take(logits.len()) {
        *o /= total;
    }
}

fn sample_from<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (c, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = c;
            if u < acc {
                return c;
            }
        }
    }
    // Rounding left the cumulative sum just below u.
    last_positive
}

fn two_rows_mut(data: &mut [f64], width: usize, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = data.split_at_mut(b * width);
        (&mut lo[a * width..(a + 1) * width], &mut hi[..width])
    } else {
        let (lo, hi) = data.split_at_mut(a * width);
        let row_b = &mut lo[b * width..(b + 1) * width];
        (&mut hi[..width], row_b)
    }
}
