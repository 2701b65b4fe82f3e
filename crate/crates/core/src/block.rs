//! Block views of an economy: wealth orderings, class partitions, and the
//! exact asymptotics of economies containing a pure cash hoarder.
//!
//! With agents ordered so a hoarder sits last, the matrix splits into the
//! circulation among everyone else, the hoarder's income row, its spending
//! column and its savings fraction.  A pure cash hoarder spends nothing and
//! keeps everything, which makes every power of the matrix available in
//! closed form and the limit an explicit rank-structure: all money ends up
//! at the hoarder.

use crate::error::{Error, Result};
use crate::graph::CirculationGraph;
use crate::matrix::{AgentId, DenseMatrix, IncomeCirculationMatrix, WealthVector, STRUCTURAL_ZERO};

/// Matrix blocks around the last agent (the hoarder candidate).
#[derive(Debug, Clone)]
pub struct HoarderDecomposition {
    /// Total number of agents including the hoarder.
    pub n: usize,
    /// Circulation among the first `n - 1` agents.
    pub sub_economy: DenseMatrix,
    /// Fractions of the hoarder's wealth paid to each other agent.
    pub hoarder_spending: Vec<f64>,
    /// Fractions of each other agent's wealth paid to the hoarder.
    pub hoarder_income: Vec<f64>,
    /// The hoarder's savings fraction.
    pub hoarder_savings: f64,
}

impl HoarderDecomposition {
    /// True when the hoarder keeps everything, spends nothing, and receives
    /// something.
    pub fn is_pure_cash_hoarder(&self) -> bool {
        self.hoarder_savings == 1.0
            && self.hoarder_spending.iter().all(|&v| v == 0.0)
            && self.hoarder_income.iter().any(|&v| v > 0.0)
    }

    fn require_pure(&self) -> Result<()> {
        if self.hoarder_savings != 1.0 || self.hoarder_spending.iter().any(|&v| v != 0.0) {
            return Err(Error::NotPureHoarder {
                reason: "the last agent spends part of its wealth",
            });
        }
        if self.hoarder_income.iter().all(|&v| v == 0.0) {
            return Err(Error::NotPureHoarder {
                reason: "the last agent receives nothing",
            });
        }
        Ok(())
    }

    fn require_sub_economy_whole(&self) -> Result<()> {
        let m = self.n - 1;
        let mut edges = Vec::new();
        for u in 0..m {
            for v in 0..m {
                if self.sub_economy.get(u, v) > STRUCTURAL_ZERO {
                    edges.push((u, v));
                }
            }
        }
        let g = CirculationGraph::from_edges(m, &edges);
        if !g.is_strongly_connected() {
            return Err(Error::SubEconomyNotWhole);
        }
        Ok(())
    }
}

/// Splits `f` into blocks around the last agent.  Needs `n >= 2`.
pub fn hoarder_decompose(f: &IncomeCirculationMatrix) -> Result<HoarderDecomposition> {
    let n = f.n();
    if n < 2 {
        return Err(Error::TooFewAgents { n, min: 2 });
    }
    let h = n - 1;
    let mut sub_economy = DenseMatrix::zeros(h);
    let mut hoarder_spending = vec![0.0; h];
    let mut hoarder_income = vec![0.0; h];
    let mut hoarder_savings = 0.0;
    for (i, j, v) in f.entries() {
        match (i == h, j == h) {
            (false, false) => sub_economy.set(i, j, v),
            (false, true) => hoarder_spending[i] = v,
            (true, false) => hoarder_income[j] = v,
            (true, true) => hoarder_savings = v,
        }
    }
    Ok(HoarderDecomposition {
        n,
        sub_economy,
        hoarder_spending,
        hoarder_income,
        hoarder_savings,
    })
}

/// `F^k` for a pure-cash-hoarder economy, assembled blockwise without
/// multiplying full-size matrices.
///
/// The top-left block is the k-th power of the sub-economy; the hoarder row
/// accumulates the geometric sums of what everyone paid in along the way;
/// the hoarder column stays zero above an exact 1.
pub fn hoarder_power_closed_form(dec: &HoarderDecomposition, k: usize) -> Result<DenseMatrix> {
    dec.require_pure()?;
    dec.require_sub_economy_whole()?;
    let m = dec.n - 1;
    // Pair (A^k, S_k) with S_k = I + A + ... + A^(k-1), composed by
    // (A^a, S_a) * (A^b, S_b) = (A^(a+b), S_a + A^a S_b).
    let mut result_pow = DenseMatrix::identity(m);
    let mut result_sum = DenseMatrix::zeros(m);
    let mut base_pow = dec.sub_economy.clone();
    let mut base_sum = DenseMatrix::identity(m);
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result_sum = add(&result_sum, &result_pow.mul(&base_sum));
            result_pow = result_pow.mul(&base_pow);
        }
        e >>= 1;
        if e > 0 {
            base_sum = add(&base_sum, &base_pow.mul(&base_sum));
            base_pow = base_pow.mul(&base_pow);
        }
    }
    let mut out = DenseMatrix::zeros(dec.n);
    for i in 0..m {
        for j in 0..m {
            out.set(i, j, result_pow.get(i, j));
        }
    }
    for j in 0..m {
        let mut acc = 0.0;
        for (i, &c) in dec.hoarder_income.iter().enumerate() {
            acc += c * result_sum.get(i, j);
        }
        out.set(m, j, acc);
    }
    out.set(m, m, 1.0);
    Ok(out)
}

/// Limit of `F^k` for a pure-cash-hoarder economy: zero everywhere except a
/// bottom row of ones.  Solved from the geometric series of the
/// sub-economy rather than iterated.
pub fn hoarder_limit(dec: &HoarderDecomposition) -> Result<DenseMatrix> {
    dec.require_pure()?;
    dec.require_sub_economy_whole()?;
    let m = dec.n - 1;
    // Bottom row solves (I - A)^T y = c; by column stochasticity of the
    // full matrix the unique answer is the all-ones vector, but solving
    // keeps the computation honest about conditioning.
    let mut system = DenseMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            let v = if i == j { 1.0 } else { 0.0 } - dec.sub_economy.get(j, i);
            system.set(i, j, v);
        }
    }
    let y = lu_solve(system, dec.hoarder_income.clone())?;
    let mut out = DenseMatrix::zeros(dec.n);
    for (j, &v) in y.iter().enumerate() {
        out.set(m, j, v);
    }
    out.set(m, m, 1.0);
    Ok(out)
}

fn add(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = a.n();
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, a.get(i, j) + b.get(i, j));
        }
    }
    out
}

/// Gaussian elimination with partial pivoting; `a` is consumed.
pub(crate) fn lu_solve(mut a: DenseMatrix, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.n();
    assert_eq!(b.len(), n);
    let scale = (0..n)
        .flat_map(|i| a.row(i).iter().map(|v| v.abs()).collect::<Vec<_>>())
        .fold(1.0f64, f64::max);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| {
                a.get(p, col)
                    .abs()
                    .partial_cmp(&a.get(q, col).abs())
                    .expect("finite")
            })
            .expect("non-empty range");
        let pivot = a.get(pivot_row, col);
        if pivot.abs() <= 1e-12 * scale {
            return Err(Error::SingularSystem { pivot });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a.get(col, j);
                a.set(col, j, a.get(pivot_row, j));
                a.set(pivot_row, j, tmp);
            }
            b.swap(col, pivot_row);
        }
        for r in col + 1..n {
            let factor = a.get(r, col) / pivot;
            if factor != 0.0 {
                for j in col..n {
                    a.set(r, j, a.get(r, j) - factor * a.get(col, j));
                }
                b[r] -= factor * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut v = b[col];
        for (j, &bj) in b.iter().enumerate().skip(col + 1) {
            v -= a.get(col, j) * bj;
        }
        b[col] = v / a.get(col, col);
    }
    Ok(b)
}

/// Relabels agents by descending wealth (ties keep original order).
///
/// Returns the permuted matrix, the matching permuted wealth state, and
/// `perm` with `perm[new] = old`.
pub fn order_by_wealth(
    f: &IncomeCirculationMatrix,
    x: &WealthVector,
) -> Result<(IncomeCirculationMatrix, WealthVector, Vec<usize>)> {
    if x.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            found: x.len(),
        });
    }
    let perm = x.ranked_agents();
    let pf = f.permuted(&perm)?;
    let px = x.permuted(&perm);
    Ok((pf, px, perm))
}

/// Agents split into a wealthy top, a marginalized bottom and the middle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPartition {
    top: Vec<AgentId>,
    middle: Vec<AgentId>,
    bottom: Vec<AgentId>,
    n: usize,
}

impl ClassPartition {
    /// Splits by wealth rank: the `max(1, floor(h_frac * n))` richest
    /// agents are the top, the poorest `floor(l_frac * n)` (at least 1
    /// when room remains) the bottom.
    pub fn by_wealth_fractions(x: &WealthVector, h_frac: f64, l_frac: f64) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        for frac in [h_frac, l_frac] {
            if !(frac.is_finite() && (0.0..=1.0).contains(&frac)) {
                return Err(Error::NonFinite {
                    context: "class fraction",
                });
            }
        }
        let ranked = x.ranked_agents();
        // Fractional class sizes round up so a nominal 10% is never empty.
        let h_count = ((h_frac * n as f64).ceil() as usize).clamp(1, n);
        let l_count = ((l_frac * n as f64).ceil() as usize)
            .max(1)
            .min(n - h_count);
        let mut top: Vec<AgentId> = ranked[..h_count].iter().map(|&i| AgentId(i)).collect();
        let mut bottom: Vec<AgentId> = ranked[n - l_count..].iter().map(|&i| AgentId(i)).collect();
        let mut middle: Vec<AgentId> = ranked[h_count..n - l_count]
            .iter()
            .map(|&i| AgentId(i))
            .collect();
        top.sort_unstable();
        middle.sort_unstable();
        bottom.sort_unstable();
        Ok(Self {
            top,
            middle,
            bottom,
            n,
        })
    }

    /// Explicit top and bottom sets; everyone else is the middle.
    pub fn from_sets(n: usize, top: Vec<AgentId>, bottom: Vec<AgentId>) -> Result<Self> {
        let mut seen = vec![0u8; n];
        for &a in &top {
            if a.0 >= n {
                return Err(Error::IndexOutOfBounds {
                    row: a.0,
                    col: a.0,
                    n,
                });
            }
            seen[a.0] |= 1;
        }
        for &a in &bottom {
            if a.0 >= n {
                return Err(Error::IndexOutOfBounds {
                    row: a.0,
                    col: a.0,
                    n,
                });
            }
            if seen[a.0] & 1 != 0 {
                return Err(Error::OverlappingClasses { agent: a.0 });
            }
            seen[a.0] |= 2;
        }
        let mut top = top;
        let mut bottom = bottom;
        top.sort_unstable();
        top.dedup();
        bottom.sort_unstable();
        bottom.dedup();
        let middle = (0..n).filter(|&i| seen[i] == 0).map(AgentId).collect();
        Ok(Self {
            top,
            middle,
            bottom,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn top(&self) -> &[AgentId] {
        &self.top
    }

    pub fn middle(&self) -> &[AgentId] {
        &self.middle
    }

    pub fn bottom(&self) -> &[AgentId] {
        &self.bottom
    }

    /// Two-way block view: top and middle together form the wealthy side,
    /// the bottom is the marginalized side.
    pub fn blocks(&self, f: &IncomeCirculationMatrix) -> Result<ClassBlocks> {
        if f.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: f.n(),
            });
        }
        let mut wealthy: Vec<usize> = self
            .top
            .iter()
            .chain(self.middle.iter())
            .map(|a| a.0)
            .collect();
        wealthy.sort_unstable();
        let marginalized: Vec<usize> = self.bottom.iter().map(|a| a.0).collect();
        let mut local = vec![(false, usize::MAX); self.n];
        for (pos, &a) in wealthy.iter().enumerate() {
            local[a] = (false, pos);
        }
        for (pos, &a) in marginalized.iter().enumerate() {
            local[a] = (true, pos);
        }
        let mut blocks = ClassBlocks {
            wealthy: wealthy.into_iter().map(AgentId).collect(),
            marginalized: marginalized.into_iter().map(AgentId).collect(),
            within_wealthy: Vec::new(),
            wealthy_from_marginalized: Vec::new(),
            marginalized_from_wealthy: Vec::new(),
            within_marginalized: Vec::new(),
        };
        for (i, j, v) in f.entries() {
            let (row_marg, li) = local[i];
            let (col_marg, lj) = local[j];
            match (row_marg, col_marg) {
                (false, false) => blocks.within_wealthy.push((li, lj, v)),
                (false, true) => blocks.wealthy_from_marginalized.push((li, lj, v)),
                (true, false) => blocks.marginalized_from_wealthy.push((li, lj, v)),
                (true, true) => blocks.within_marginalized.push((li, lj, v)),
            }
        }
        Ok(blocks)
    }
}

/// Sparse blocks of a two-way class split, local indices per side.
#[derive(Debug, Clone)]
pub struct ClassBlocks {
    pub wealthy: Vec<AgentId>,
    pub marginalized: Vec<AgentId>,
    pub within_wealthy: Vec<(usize, usize, f64)>,
    /// Payments from marginalized agents to wealthy agents.
    pub wealthy_from_marginalized: Vec<(usize, usize, f64)>,
    /// Payments from wealthy agents to marginalized agents.
    pub marginalized_from_wealthy: Vec<(usize, usize, f64)>,
    pub within_marginalized: Vec<(usize, usize, f64)>,
}

impl ClassBlocks {
    /// Total fraction mass marginalized agents pay the wealthy side.
    pub fn mass_paid_by_marginalized(&self) -> f64 {
        self.wealthy_from_marginalized
            .iter()
            .map(|&(_, _, v)| v)
            .sum()
    }

    /// Total fraction mass wealthy agents pay the marginalized side.
    pub fn mass_paid_by_wealthy(&self) -> f64 {
        self.marginalized_from_wealthy
            .iter()
            .map(|&(_, _, v)| v)
            .sum()
    }

    /// Global `(row, col, value)` triplets, for checking the blocks carry
    /// exactly the source matrix.
    pub fn reassemble(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        let w = &self.wealthy;
        let m = &self.marginalized;
        for &(i, j, v) in &self.within_wealthy {
            out.push((w[i].0, w[j].0, v));
        }
        for &(i, j, v) in &self.wealthy_from_marginalized {
            out.push((w[i].0, m[j].0, v));
        }
        for &(i, j, v) in &self.marginalized_from_wealthy {
            out.push((m[i].0, w[j].0, v));
        }
        for &(i, j, v) in &self.within_marginalized {
            out.push((m[i].0, m[j].0, v));
        }
        out.sort_by_key(|&(i, j, _)| (j, i));
        out
    }
}

/// Where money ends up across a two-way class split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsorptionVerdict {
    /// The marginalized side receives but never pays: it absorbs.
    PoorAbsorb,
    /// The wealthy side receives but never pays: it absorbs.
    WealthyAbsorb,
    /// No money crosses between the sides.
    Disconnected,
    /// Money flows both ways; neither side structurally traps it.
    Coupled,
}

impl AbsorptionVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            AbsorptionVerdict::PoorAbsorb => "PoorAbsorb",
            AbsorptionVerdict::WealthyAbsorb => "WealthyAbsorb",
            AbsorptionVerdict::Disconnected => "Disconnected",
            AbsorptionVerdict::Coupled => "Coupled",
        }
    }
}

/// Structural verdict plus simulated long-run mass shares.
#[derive(Debug, Clone)]
pub struct FragmentationDiagnosis {
    pub verdict: AbsorptionVerdict,
    /// Fraction mass crossing into the wealthy side per unit of
    /// marginalized wealth.
    pub inflow_to_wealthy: f64,
    /// Fraction mass crossing into the marginalized side per unit of
    /// wealthy wealth.
    pub inflow_to_marginalized: f64,
    /// Share of the monetary base on the wealthy side when the run stopped.
    pub wealthy_share: f64,
    pub marginalized_share: f64,
    pub steps_run: usize,
}

/// Diagnoses a two-way split: which side (if any) structurally absorbs all
/// money, corroborated by simulating up to `horizon` steps.
///
/// The simulation stops early once the absorbing side holds all but
/// `1e-12` of the monetary base.
pub fn fragmented_asymptotics(
    f: &IncomeCirculationMatrix,
    x0: &WealthVector,
    partition: &ClassPartition,
    horizon: usize,
) -> Result<FragmentationDiagnosis> {
    if x0.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            found: x0.len(),
        });
    }
    let blocks = partition.blocks(f)?;
    let into_wealthy = blocks.mass_paid_by_marginalized();
    let into_marginalized = blocks.mass_paid_by_wealthy();
    let verdict = match (into_wealthy > 0.0, into_marginalized > 0.0) {
        (false, false) => AbsorptionVerdict::Disconnected,
        (false, true) => AbsorptionVerdict::PoorAbsorb,
        (true, false) => AbsorptionVerdict::WealthyAbsorb,
        (true, true) => AbsorptionVerdict::Coupled,
    };
    let base = x0.monetary_base();
    let marginalized_sum =
        |x: &WealthVector| -> f64 { blocks.marginalized.iter().map(|&a| x.get(a)).sum() };
    let mut state = x0.clone();
    let mut steps_run = 0;
    for _ in 0..horizon {
        if base > 0.0 {
            let marg = marginalized_sum(&state) / base;
            let absorbed = match verdict {
                AbsorptionVerdict::PoorAbsorb => marg,
                AbsorptionVerdict::WealthyAbsorb => 1.0 - marg,
                _ => 0.0,
            };
            if absorbed >= 1.0 - 1e-12 {
                break;
            }
        }
        state = f.step(&state)?;
        steps_run += 1;
    }
    let marginalized_share = if base > 0.0 {
        marginalized_sum(&state) / base
    } else {
        0.0
    };
    Ok(FragmentationDiagnosis {
        verdict,
        inflow_to_wealthy: into_wealthy,
        inflow_to_marginalized: into_marginalized,
        wealthy_share: 1.0 - marginalized_share,
        marginalized_share,
        steps_run,
    })
}
