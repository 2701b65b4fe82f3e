//! Income circulation matrices, wealth states and trajectories.
//!
//! A matrix is stored column-sparse: column `j` lists the agents paid by
//! agent `j` together with the fraction of `j`'s wealth each receives.
//! Construction goes through [`IncomeCirculationMatrix::validate`] or
//! [`IncomeCirculationMatrix::savings_diagonal`], after which every column
//! sums to exactly 1 (renormalized) and every stored entry lies in `(0, 1]`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default relative tolerance for column sums and other validation slack.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Magnitudes below this are structural zeros: the entry is absent from the
/// circulation pattern rather than a small payment.
pub const STRUCTURAL_ZERO: f64 = 1e-15;

/// Largest `n` for which dense `n × n` intermediates may be materialized.
pub const DEFAULT_DENSE_CAP: usize = 5000;

/// Index of an agent, zero-based everywhere in machine-readable formats.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Column-stochastic matrix of income fractions.
///
/// Entry `(i, j)` is the fraction of agent `j`'s wealth paid to agent `i`
/// per step; the diagonal holds savings fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct IncomeCirculationMatrix {
    n: usize,
    /// `cols[j]` holds `(row, value)` pairs sorted by row, values in `(0, 1]`.
    cols: Vec<Vec<(usize, f64)>>,
    tolerance: f64,
}

impl IncomeCirculationMatrix {
    /// Builds a matrix from sparse triplets `(row, col, value)`.
    ///
    /// Duplicate `(row, col)` pairs are summed.  Values within `tolerance`
    /// of zero from below are clamped away; magnitudes below
    /// [`STRUCTURAL_ZERO`] are dropped.  Each column must sum to 1 within
    /// `tolerance` and is renormalized to sum to exactly 1.
    pub fn validate(n: usize, entries: &[(usize, usize, f64)], tolerance: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(Error::NonFinite {
                context: "tolerance",
            });
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(row, col, value) in entries {
            if row >= n || col >= n {
                return Err(Error::IndexOutOfBounds { row, col, n });
            }
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    context: "matrix entry",
                });
            }
            cols[col].push((row, value));
        }
        for (j, col) in cols.iter_mut().enumerate() {
            col.sort_by_key(|&(row, _)| row);
            // Merge duplicates before sign checks so split payments between
            // the same pair are judged by their total.
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(row, value) in col.iter() {
                match merged.last_mut() {
                    Some((last_row, last_value)) if *last_row == row => *last_value += value,
                    _ => merged.push((row, value)),
                }
            }
            let mut kept: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
            for (row, value) in merged {
                if value < -tolerance {
                    return Err(Error::NegativeEntry { row, col: j, value });
                }
                if value.abs() < STRUCTURAL_ZERO {
                    continue;
                }
                if value > 0.0 {
                    kept.push((row, value));
                }
            }
            let sum: f64 = kept.iter().map(|&(_, v)| v).sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::ColumnSumViolation {
                    col: j,
                    sum,
                    tolerance,
                });
            }
            if sum != 1.0 {
                for (_, v) in kept.iter_mut() {
                    *v /= sum;
                }
            }
            *col = kept;
        }
        Ok(Self { n, cols, tolerance })
    }

    /// Builds a matrix from off-diagonal spending only, completing each
    /// column with the implied savings fraction on the diagonal.
    ///
    /// A column spending more than 1 (within `tolerance`) is rejected as
    /// [`Error::OverSpending`]; diagonal input entries are rejected because
    /// the diagonal is derived.
    pub fn savings_diagonal(
        n: usize,
        off_diagonal: &[(usize, usize, f64)],
        tolerance: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut spent = vec![0.0f64; n];
        for &(row, col, value) in off_diagonal {
            if row >= n || col >= n {
                return Err(Error::IndexOutOfBounds { row, col, n });
            }
            if row == col {
                return Err(Error::UnexpectedDiagonal { agent: row });
            }
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    context: "matrix entry",
                });
            }
            if value < -tolerance {
                return Err(Error::NegativeEntry { row, col, value });
            }
            spent[col] += value.max(0.0);
        }
        let mut entries: Vec<(usize, usize, f64)> = off_diagonal.to_vec();
        for (j, &s) in spent.iter().enumerate() {
            if s > 1.0 + tolerance {
                return Err(Error::OverSpending { col: j, sum: s });
            }
            let savings = (1.0 - s).max(0.0);
            if savings >= STRUCTURAL_ZERO {
                entries.push((j, j, savings));
            }
        }
        Self::validate(n, &entries, tolerance)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Number of stored (structurally nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// Entry `(i, j)`; zero when absent from the pattern.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        match self.cols[col].binary_search_by_key(&row, |&(r, _)| r) {
            Ok(pos) => self.cols[col][pos].1,
            Err(_) => 0.0,
        }
    }

    /// Sparse column `j` as `(row, value)` pairs sorted by row.
    pub fn column(&self, col: usize) -> &[(usize, f64)] {
        &self.cols[col]
    }

    /// Savings fraction of agent `j`.
    pub fn diagonal(&self, j: usize) -> f64 {
        self.get(j, j)
    }

    /// Number of agents with a nonzero savings fraction.
    pub fn nonzero_diagonal_count(&self) -> usize {
        (0..self.n).filter(|&j| self.diagonal(j) > 0.0).count()
    }

    /// Iterates stored entries as `(row, col, value)`, ordered by column
    /// then row.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |&(i, v)| (i, j, v)))
    }

    /// True when both matrices store exactly the same entries.
    pub fn entries_equal(&self, other: &Self) -> bool {
        self.n == other.n && self.cols == other.cols
    }

    /// True when both matrices have the same nonzero pattern.
    pub fn same_pattern(&self, other: &Self) -> bool {
        self.n == other.n
            && self
                .cols
                .iter()
                .zip(&other.cols)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0))
    }

    /// One evolution step `F x`.
    ///
    /// Output coordinates are nonnegative and their sum equals the input
    /// monetary base up to rounding.
    pub fn step(&self, x: &WealthVector) -> Result<WealthVector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        let out = self.apply(x.values());
        let base_in = x.monetary_base();
        let base_out: f64 = out.iter().sum();
        assert!(
            (base_out - base_in).abs() <= 1e-12 * base_in.max(1.0),
            "monetary base drifted in one step: {base_in} -> {base_out}"
        );
        Ok(WealthVector {
            values: out,
            time_index: x.time_index + 1,
        })
    }

    /// Matrix-vector product on a raw slice.  The slice may carry signed
    /// values (wealth differences), unlike [`WealthVector`].
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (j, col) in self.cols.iter().enumerate() {
            let xj = x[j];
            if xj != 0.0 {
                for &(i, v) in col {
                    out[i] += v * xj;
                }
            }
        }
        out
    }

    /// Dense copy of the matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n);
        for (i, j, v) in self.entries() {
            m.set(i, j, v);
        }
        m
    }

    /// `F^k` by repeated squaring on a dense copy.
    ///
    /// Refuses to densify economies larger than [`DEFAULT_DENSE_CAP`]; use
    /// [`IncomeCirculationMatrix::step`] repeatedly for those.
    pub fn matrix_power(&self, k: usize) -> Result<DenseMatrix> {
        self.matrix_power_capped(k, DEFAULT_DENSE_CAP)
    }

    /// `F^k` with an explicit dense size cap.
    pub fn matrix_power_capped(&self, k: usize, cap: usize) -> Result<DenseMatrix> {
        if self.n > cap {
            return Err(Error::SizeCapExceeded { n: self.n, cap });
        }
        let mut result = DenseMatrix::identity(self.n);
        if k == 0 {
            return Ok(result);
        }
        let mut base = self.to_dense();
        let mut e = k;
        loop {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base);
        }
        Ok(result)
    }

    /// Rebuilds the matrix under a relabelling of agents.
    ///
    /// `perm[new] = old`: new agent `p` is old agent `perm[p]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: perm.len(),
            });
        }
        let mut inverse = vec![usize::MAX; self.n];
        for (new, &old) in perm.iter().enumerate() {
            assert!(
                old < self.n && inverse[old] == usize::MAX,
                "not a permutation"
            );
            inverse[old] = new;
        }
        // Relabeling keeps every column's multiset of values, so the result
        // is valid as-is and revalidation would only smudge low bits.
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.n);
        for &old_col in perm {
            let mut col: Vec<(usize, f64)> = self.cols[old_col]
                .iter()
                .map(|&(i, v)| (inverse[i], v))
                .collect();
            col.sort_by_key(|&(i, _)| i);
            cols.push(col);
        }
        Ok(Self {
            n: self.n,
            cols,
            tolerance: self.tolerance,
        })
    }
}

/// Nonnegative wealth state at a discrete time.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthVector {
    values: Vec<f64>,
    time_index: usize,
}

impl WealthVector {
    pub fn new(values: Vec<f64>, time_index: usize) -> Result<Self> {
        for (agent, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { context: "wealth" });
            }
            if v < 0.0 {
                return Err(Error::NegativeWealth { agent, value: v });
            }
        }
        Ok(Self { values, time_index })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, agent: AgentId) -> f64 {
        self.values[agent.0]
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    /// Total amount of money in play.
    pub fn monetary_base(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Agents sorted by descending wealth, ties broken by ascending index.
    pub fn ranked_agents(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| {
            self.values[b]
                .partial_cmp(&self.values[a])
                .expect("wealth is finite")
                .then(a.cmp(&b))
        });
        order
    }

    /// Relabels agents; `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.values.len());
        Self {
            values: perm.iter().map(|&old| self.values[old]).collect(),
            time_index: self.time_index,
        }
    }
}

/// Wealth states `x(t0), …, x(t0 + k)` produced by `k` evolution steps,
/// together with the identifier of the matrix applied at each step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    states: Vec<WealthVector>,
    matrix_ids: Vec<usize>,
}

impl Trajectory {
    pub(crate) fn from_parts(states: Vec<WealthVector>, matrix_ids: Vec<usize>) -> Self {
        assert_eq!(states.len(), matrix_ids.len() + 1);
        let base = states[0].monetary_base();
        for s in &states {
            assert!(
                (s.monetary_base() - base).abs() <= 1e-9 * base.max(1.0),
                "monetary base drifted along trajectory"
            );
        }
        Self { states, matrix_ids }
    }

    /// Number of evolution steps (states minus one).
    pub fn steps(&self) -> usize {
        self.matrix_ids.len()
    }

    pub fn states(&self) -> &[WealthVector] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &WealthVector {
        &self.states[k]
    }

    pub fn final_state(&self) -> &WealthVector {
        self.states.last().expect("trajectory has an initial state")
    }

    /// Identifier of the matrix applied at step `k`; an index into the
    /// schedule that produced the trajectory.
    pub fn matrix_ids(&self) -> &[usize] {
        &self.matrix_ids
    }
}

/// Applies `schedule[k]` at step `k`, recording every intermediate state.
pub fn evolve(schedule: &[&IncomeCirculationMatrix], x0: &WealthVector) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(schedule.len() + 1);
    let mut ids = Vec::with_capacity(schedule.len());
    states.push(x0.clone());
    for (k, f) in schedule.iter().enumerate() {
        let next = f.step(states.last().expect("non-empty"))?;
        states.push(next);
        ids.push(k);
    }
    Ok(Trajectory::from_parts(states, ids))
}

/// Applies the same matrix for `steps` steps.
pub fn evolve_constant(
    f: &IncomeCirculationMatrix,
    x0: &WealthVector,
    steps: usize,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.clone());
    for _ in 0..steps {
        let next = f.step(states.last().expect("non-empty"))?;
        states.push(next);
    }
    Ok(Trajectory::from_parts(states, vec![0; steps]))
}

/// Sum of absolute values.
pub fn l1_norm(xs: &[f64]) -> f64 {
    xs.iter().map(|v| v.abs()).sum()
}

/// `l1_norm(a - b)` without materializing the difference.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Small dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "rows must form a square matrix");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    /// `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let a_row = &self.data[i * n..(i + 1) * n];
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in a_row.iter().enumerate() {
                if a != 0.0 {
                    let b_row = &other.data[k * n..(k + 1) * n];
                    for (o, &b) in out_row.iter_mut().zip(b_row) {
                        *o += a * b;
                    }
                }
            }
        }
        out
    }

    /// `self · x` for a raw vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, &v) in self.row(i).iter().enumerate() {
                sums[j] += v;
            }
        }
        sums
    }

    /// Largest absolute difference against another matrix.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True when every column sums to 1 within `tol` and no entry is below
    /// `-tol`.
    pub fn is_column_stochastic(&self, tol: f64) -> bool {
        self.data.iter().all(|&v| v >= -tol)
            && self.column_sums().iter().all(|&s| (s - 1.0).abs() <= tol)
    }

    /// Smallest entry of row `i`.
    pub fn row_min(&self, i: usize) -> f64 {
        self.row(i).iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Three-agent cycle: agent 0 pays 1, 1 pays 2, 2 pays 0.
    pub(crate) fn ring3() -> IncomeCirculationMatrix {
        IncomeCirculationMatrix::validate(
            3,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
            DEFAULT_TOLERANCE,
        )
        .expect("ring is valid")
    }

    /// Random valid economy used by property tests.  Every agent pays its
    /// cyclic successor so the matrix never has an empty column.
    pub(crate) fn random_icm(n: usize, seed: u64, density: f64) -> IncomeCirculationMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for j in 0..n {
            let mut rows = vec![(j + 1) % n];
            for i in 0..n {
                if i != rows[0] && rng.random::<f64>() < density {
                    rows.push(i);
                }
            }
            let weights: Vec<f64> = rows.iter().map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for (&i, w) in rows.iter().zip(&weights) {
                entries.push((i, j, w / total));
            }
        }
        IncomeCirculationMatrix::validate(n, &entries, DEFAULT_TOLERANCE)
            .expect("generated columns sum to 1")
    }

    /// Like [`random_icm`] but with every savings fraction positive, which
    /// forces a cohesive society (strongly connected and aperiodic).
    pub(crate) fn random_cohesive_icm(
        n: usize,
        seed: u64,
        density: f64,
    ) -> IncomeCirculationMatrix {
        let base = random_icm(n, seed, density);
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in base.entries() {
            if i == j {
                entries.push((i, j, 0.7 * v + 0.3));
            } else {
                entries.push((i, j, 0.7 * v));
            }
        }
        for j in 0..n {
            if base.diagonal(j) == 0.0 {
                entries.push((j, j, 0.3));
            }
        }
        IncomeCirculationMatrix::validate(n, &entries, DEFAULT_TOLERANCE)
            .expect("columns still sum to 1")
    }

    pub(crate) fn random_wealth(n: usize, seed: u64) -> WealthVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x57ea_17f0);
        WealthVector::new((0..n).map(|_| rng.random_range(0.0..10.0)).collect(), 0)
            .expect("nonnegative")
    }

    #[test]
    fn validates_ring() {
        let f = ring3();
        assert_eq!(f.n(), 3);
        assert_eq!(f.nnz(), 3);
        assert_eq!(f.get(0, 1), 1.0);
        assert_eq!(f.get(1, 0), 0.0);
        assert_eq!(f.nonzero_diagonal_count(), 0);
    }

    #[test]
    fn rejects_short_column() {
        // First column sums to 0.9.
        let err = IncomeCirculationMatrix::validate(
            2,
            &[(0, 0, 0.5), (1, 0, 0.4), (1, 1, 1.0)],
            DEFAULT_TOLERANCE,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ColumnSumViolation { col: 0, .. }));
    }

    #[test]
    fn rejects_negative_entry() {
        let err = IncomeCirculationMatrix::validate(
            2,
            &[(0, 0, 1.2), (1, 0, -0.2), (1, 1, 1.0)],
            DEFAULT_TOLERANCE,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NegativeEntry { row: 1, col: 0, .. }));
    }

    #[test]
    fn rejects_non_finite() {
        let err = IncomeCirculationMatrix::validate(1, &[(0, 0, f64::NAN)], DEFAULT_TOLERANCE)
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn rejects_out_of_bounds() {
        let err =
            IncomeCirculationMatrix::validate(2, &[(2, 0, 1.0)], DEFAULT_TOLERANCE).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfBounds { row: 2, .. }));
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(
            IncomeCirculationMatrix::validate(0, &[], DEFAULT_TOLERANCE),
            Err(Error::EmptyMatrix)
        ));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let f = IncomeCirculationMatrix::validate(1, &[(0, 0, 1.0 + 5e-10)], DEFAULT_TOLERANCE)
            .expect("within tolerance");
        assert_eq!(f.get(0, 0), 1.0);
    }

    #[test]
    fn clamps_tiny_negative_and_drops_structural_zero() {
        let f = IncomeCirculationMatrix::validate(
            2,
            &[(0, 0, 1.0), (1, 0, -1e-12), (0, 1, 1e-16), (1, 1, 1.0)],
            DEFAULT_TOLERANCE,
        )
        .expect("tiny values are noise");
        assert_eq!(f.nnz(), 2);
        assert_eq!(f.get(1, 0), 0.0);
        assert_eq!(f.get(0, 1), 0.0);
    }

    #[test]
    fn merges_duplicate_entries() {
        let f = IncomeCirculationMatrix::validate(
            2,
            &[(0, 0, 0.25), (0, 0, 0.75), (1, 1, 1.0)],
            DEFAULT_TOLERANCE,
        )
        .expect("duplicates are summed");
        assert_eq!(f.get(0, 0), 1.0);
        assert_eq!(f.nnz(), 2);
    }

    #[test]
    fn savings_diagonal_completes_columns() {
        // Agent 0 spends 0.3 on agent 1, saves 0.7; agent 1 spends nothing.
        let f = IncomeCirculationMatrix::savings_diagonal(2, &[(1, 0, 0.3)], DEFAULT_TOLERANCE)
            .expect("valid");
        assert!((f.get(0, 0) - 0.7).abs() < 1e-15);
        assert_eq!(f.get(1, 1), 1.0);
        assert_eq!(f.nonzero_diagonal_count(), 2);
    }

    #[test]
    fn savings_diagonal_rejects_over_spending() {
        let err = IncomeCirculationMatrix::savings_diagonal(
            2,
            &[(1, 0, 0.8), (1, 0, 0.3)],
            DEFAULT_TOLERANCE,
        )
        .unwrap_err();
        assert!(matches!(err, Error::OverSpending { col: 0, .. }));
    }

    #[test]
    fn savings_diagonal_rejects_diagonal_input() {
        let err = IncomeCirculationMatrix::savings_diagonal(2, &[(0, 0, 0.5)], DEFAULT_TOLERANCE)
            .unwrap_err();
        assert!(matches!(err, Error::UnexpectedDiagonal { agent: 0 }));
    }

    #[test]
    fn savings_diagonal_exact_spender_has_no_diagonal() {
        let f = IncomeCirculationMatrix::savings_diagonal(2, &[(1, 0, 1.0), (0, 1, 1.0)], 1e-9)
            .expect("valid");
        assert_eq!(f.nonzero_diagonal_count(), 0);
    }

    #[test]
    fn step_rotates_ring_wealth() {
        let f = ring3();
        let x = WealthVector::new(vec![1.0, 2.0, 3.0], 0).unwrap();
        let y = f.step(&x).unwrap();
        // Each agent hands everything to its payee: 0 receives from 1, etc.
        assert_eq!(y.values(), &[2.0, 3.0, 1.0]);
        assert_eq!(y.time_index(), 1);
    }

    #[test]
    fn step_rejects_dimension_mismatch() {
        let f = ring3();
        let x = WealthVector::new(vec![1.0, 2.0], 0).unwrap();
        assert!(matches!(
            f.step(&x),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn wealth_rejects_negative() {
        assert!(matches!(
            WealthVector::new(vec![1.0, -0.5], 0),
            Err(Error::NegativeWealth { agent: 1, .. })
        ));
    }

    #[test]
    fn ranked_agents_is_stable_on_ties() {
        let x = WealthVector::new(vec![2.0, 5.0, 2.0, 7.0], 0).unwrap();
        assert_eq!(x.ranked_agents(), vec![3, 1, 0, 2]);
    }

    #[test]
    fn evolve_records_all_states() {
        let f = ring3();
        let x0 = WealthVector::new(vec![1.0, 2.0, 3.0], 5).unwrap();
        let traj = evolve_constant(&f, &x0, 3).unwrap();
        assert_eq!(traj.steps(), 3);
        assert_eq!(traj.state(0).values(), &[1.0, 2.0, 3.0]);
        assert_eq!(traj.state(1).values(), &[2.0, 3.0, 1.0]);
        // Period three: back to the start.
        assert_eq!(traj.final_state().values(), &[1.0, 2.0, 3.0]);
        assert_eq!(traj.final_state().time_index(), 8);
    }

    #[test]
    fn ring_cubed_is_identity_exactly() {
        let f = ring3();
        let p = f.matrix_power(3).unwrap();
        assert_eq!(p, DenseMatrix::identity(3));
    }

    #[test]
    fn power_zero_and_one() {
        let f = random_icm(5, 7, 0.4);
        assert_eq!(f.matrix_power(0).unwrap(), DenseMatrix::identity(5));
        assert_eq!(f.matrix_power(1).unwrap().max_abs_diff(&f.to_dense()), 0.0);
    }

    #[test]
    fn power_respects_size_cap() {
        let f = random_icm(10, 3, 0.3);
        assert!(matches!(
            f.matrix_power_capped(2, 9),
            Err(Error::SizeCapExceeded { n: 10, cap: 9 })
        ));
    }

    #[test]
    fn permuted_relabels_entries() {
        let f = ring3();
        // New order: agents (2, 0, 1).
        let p = f.permuted(&[2, 0, 1]).unwrap();
        // Old edge 0 -> 1 (entry (0,1)) becomes new (1, 2).
        assert_eq!(p.get(1, 2), 1.0);
        assert_eq!(p.nnz(), 3);
    }

    #[test]
    fn dense_mul_matches_manual() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let c = a.mul(&b);
        assert_eq!(c, DenseMatrix::from_rows(&[&[19.0, 22.0], &[43.0, 50.0]]));
    }

    proptest! {
        /// Column sums stay at exactly 1 after validation and each stored
        /// entry lies in (0, 1].
        #[test]
        fn validated_columns_are_stochastic(n in 1usize..12, seed in 0u64..500) {
            let f = random_icm(n, seed, 0.5);
            for j in 0..n {
                let s: f64 = f.column(j).iter().map(|&(_, v)| v).sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
                for &(_, v) in f.column(j) {
                    prop_assert!(v > 0.0 && v <= 1.0);
                }
            }
        }

        /// One step preserves the monetary base and nonnegativity.
        #[test]
        fn step_preserves_base(n in 1usize..12, seed in 0u64..500) {
            let f = random_icm(n, seed, 0.5);
            let x = random_wealth(n, seed);
            let y = f.step(&x).unwrap();
            prop_assert!((y.monetary_base() - x.monetary_base()).abs()
                <= 1e-12 * x.monetary_base().max(1.0));
            prop_assert!(y.values().iter().all(|&v| v >= 0.0));
        }

        /// The product of two circulation matrices is again one: its dense
        /// entries revalidate.
        #[test]
        fn product_closure(n in 1usize..10, seed in 0u64..1000) {
            let a = random_icm(n, seed, 0.5);
            let b = random_icm(n, seed.wrapping_add(1), 0.5);
            let prod = a.to_dense().mul(&b.to_dense());
            let mut entries = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let v = prod.get(i, j);
                    if v != 0.0 {
                        entries.push((i, j, v));
                    }
                }
            }
            let c = IncomeCirculationMatrix::validate(n, &entries, DEFAULT_TOLERANCE);
            prop_assert!(c.is_ok());
        }

        /// Repeated stepping agrees with the dense matrix power.
        #[test]
        fn steps_match_power(n in 1usize..20, seed in 0u64..200, k in 0usize..64) {
            let f = random_icm(n, seed, 0.3);
            let x = random_wealth(n, seed);
            let mut s = x.clone();
            for _ in 0..k {
                s = f.step(&s).unwrap();
            }
            let direct = f.matrix_power(k).unwrap().apply(x.values());
            let scale = x.monetary_base().max(1.0);
            for (a, b) in s.values().iter().zip(&direct) {
                prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
        }

        /// Powers of a circulation matrix stay column-stochastic.
        #[test]
        fn powers_stay_stochastic(n in 1usize..10, seed in 0u64..200, k in 1usize..40) {
            let f = random_icm(n, seed, 0.5);
            let p = f.matrix_power(k).unwrap();
            prop_assert!(p.is_column_stochastic(1e-9 * k as f64));
        }
    }
}
