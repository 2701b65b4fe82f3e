//! Building circulation matrices from data and generating synthetic ones.
//!
//! Estimation divides each payment by the payer's wealth at the start of
//! the step, so the estimated matrix reproduces the observed flows exactly;
//! savings fractions fill the remainder of every column.  Averaging a
//! window of per-step matrices gives a stationary summary.  The synthetic
//! profiles cover the qualitative regimes: periodic rings, cohesive random
//! economies, stratified two-class societies and hoarder economies.

use crate::block::hoarder_decompose;
use crate::error::{Error, Result};
use crate::graph::{classify, Verdict};
use crate::matrix::{AgentId, IncomeCirculationMatrix, WealthVector, DEFAULT_TOLERANCE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::ops::Range;

/// One payment: at time step `time`, `payer` sent `amount` to `payee`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransactionRecord {
    pub time: usize,
    pub payer: AgentId,
    pub payee: AgentId,
    pub amount: f64,
}

impl TransactionRecord {
    pub fn validate(&self) -> Result<()> {
        if self.payer == self.payee {
            return Err(Error::SelfPayment {
                agent: self.payer.0,
                time: self.time,
            });
        }
        if !self.amount.is_finite() {
            return Err(Error::NonFinite {
                context: "transaction amount",
            });
        }
        if self.amount <= 0.0 {
            return Err(Error::NonPositiveAmount {
                time: self.time,
                payer: self.payer.0,
                payee: self.payee.0,
                amount: self.amount,
            });
        }
        Ok(())
    }
}

/// Estimates the circulation matrix of one step from the payments made
/// during it.
///
/// `wealth` holds each agent's money at the start of the step.  Every
/// record must carry `time == step`.  Payments from an agent with zero
/// wealth cannot be expressed as a fraction and are rejected; an agent
/// whose payments exceed its wealth overspends.  Agents without payments
/// save everything, so an empty step estimates the identity.
pub fn estimate_icm(
    transactions: &[TransactionRecord],
    wealth: &WealthVector,
    step: usize,
) -> Result<IncomeCirculationMatrix> {
    let n = wealth.len();
    let mut fractions: HashMap<(usize, usize), f64> = HashMap::new();
    for tx in transactions {
        tx.validate()?;
        if tx.time != step {
            return Err(Error::RecordOutsideStep {
                time: tx.time,
                step,
            });
        }
        if tx.payer.0 >= n || tx.payee.0 >= n {
            return Err(Error::IndexOutOfBounds {
                row: tx.payee.0,
                col: tx.payer.0,
                n,
            });
        }
        let payer_wealth = wealth.get(tx.payer);
        if payer_wealth <= 0.0 {
            return Err(Error::ZeroWealthPayer {
                payer: tx.payer.0,
                time: tx.time,
            });
        }
        *fractions.entry((tx.payee.0, tx.payer.0)).or_insert(0.0) += tx.amount / payer_wealth;
    }
    let mut entries: Vec<(usize, usize, f64)> =
        fractions.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    entries.sort_by_key(|&(i, j, _)| (j, i));
    IncomeCirculationMatrix::savings_diagonal(n, &entries, DEFAULT_TOLERANCE)
}

/// Contiguous run of time steps `[t_start, t_end]` whose per-step matrices
/// are summarized by one average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimationWindow {
    t_start: usize,
    t_end: usize,
}

impl EstimationWindow {
    pub fn new(t_start: usize, t_end: usize) -> Result<Self> {
        if t_start > t_end {
            return Err(Error::EmptyWindow);
        }
        Ok(Self { t_start, t_end })
    }

    pub fn t_start(&self) -> usize {
        self.t_start
    }

    pub fn t_end(&self) -> usize {
        self.t_end
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.t_start..=self.t_end
    }

    pub fn step_count(&self) -> usize {
        self.t_end - self.t_start + 1
    }

    pub fn contains(&self, step: usize) -> bool {
        (self.t_start..=self.t_end).contains(&step)
    }
}

/// Entrywise arithmetic mean of the window's per-step matrices, one matrix
/// per step in order.
pub fn average_icm(
    matrices: &[IncomeCirculationMatrix],
    window: &EstimationWindow,
) -> Result<IncomeCirculationMatrix> {
    if matrices.len() != window.step_count() {
        return Err(Error::DimensionMismatch {
            expected: window.step_count(),
            found: matrices.len(),
        });
    }
    let first = &matrices[0];
    let n = first.n();
    for m in matrices {
        if m.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.n(),
            });
        }
    }
    let count = matrices.len() as f64;
    let mut sums: HashMap<(usize, usize), f64> = HashMap::new();
    for m in matrices {
        for (i, j, v) in m.entries() {
            *sums.entry((i, j)).or_insert(0.0) += v;
        }
    }
    let mut entries: Vec<(usize, usize, f64)> = sums
        .into_iter()
        .map(|((i, j), v)| (i, j, v / count))
        .collect();
    entries.sort_by_key(|&(i, j, _)| (j, i));
    IncomeCirculationMatrix::validate(n, &entries, first.tolerance())
}

/// Shape of a synthetic demo economy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EconomyProfile {
    /// Every agent pays everything to its cyclic successor: strongly
    /// connected, periodic for `n >= 2`.
    Ring,
    /// Ring plus random extra payments and positive savings everywhere:
    /// always cohesive.
    CohesiveRandom { density: f64 },
    /// Rich and poor blocks, each internally cohesive, with one-way flows
    /// chosen by the flags.  Both flags off (or one on) leaves the society
    /// fragmented; both on makes it cohesive.
    TwoClass {
        marginalized_frac: f64,
        poor_pay_rich: bool,
        rich_pay_poor: bool,
    },
    /// Cohesive sub-economy whose members all tithe a pure cash hoarder
    /// sitting at the last index.
    Hoarder,
}

impl std::str::FromStr for EconomyProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Self::Ring),
            "cohesive-random" => Ok(Self::CohesiveRandom { density: 0.4 }),
            "two-class" => Ok(Self::TwoClass {
                marginalized_frac: 0.3,
                poor_pay_rich: true,
                rich_pay_poor: false,
            }),
            "hoarder" => Ok(Self::Hoarder),
            other => Err(Error::UnknownProfile {
                name: other.to_string(),
            }),
        }
    }
}

/// Deterministically generates an economy with the requested shape plus a
/// matching initial wealth state.
pub fn synthesize_economy(
    n: usize,
    profile: EconomyProfile,
    seed: u64,
) -> Result<(IncomeCirculationMatrix, WealthVector)> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if n < 2 {
        return Err(Error::TooFewAgents { n, min: 2 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match profile {
        EconomyProfile::Ring => {
            let entries: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
            let f = IncomeCirculationMatrix::validate(n, &entries, DEFAULT_TOLERANCE)?;
            let x = uniform_wealth(n, 0.5..10.0, &mut rng);
            let class = classify(&f);
            assert_eq!(class.period, Some(n), "a ring cycles with period n");
            Ok((f, x))
        }
        EconomyProfile::CohesiveRandom { density } => {
            let f = cohesive_block(n, density, &mut rng)?;
            let x = uniform_wealth(n, 0.5..10.0, &mut rng);
            assert!(
                classify(&f).is_cohesive(),
                "savings everywhere force cohesion"
            );
            Ok((f, x))
        }
        EconomyProfile::TwoClass {
            marginalized_frac,
            poor_pay_rich,
            rich_pay_poor,
        } => {
            if !(marginalized_frac.is_finite()
                && 0.0 < marginalized_frac
                && marginalized_frac < 1.0)
            {
                return Err(Error::NonFinite {
                    context: "marginalized fraction",
                });
            }
            let m = (((marginalized_frac * n as f64).floor() as usize).max(1)).min(n - 1);
            let w = n - m;
            let rich = cohesive_block(w, 0.4, &mut rng)?;
            let poor = cohesive_block(m, 0.4, &mut rng)?;
            let mut entries: Vec<(usize, usize, f64)> = Vec::new();
            // Wealthy agents occupy 0..w, marginalized w..n.
            push_block(
                &mut entries,
                &rich,
                0,
                0,
                &mut rng,
                rich_pay_poor.then_some(w..n),
            );
            push_block(
                &mut entries,
                &poor,
                w,
                w,
                &mut rng,
                poor_pay_rich.then_some(0..w),
            );
            let f = IncomeCirculationMatrix::validate(n, &entries, DEFAULT_TOLERANCE)?;
            let mut values = Vec::with_capacity(n);
            for _ in 0..w {
                values.push(rng.random_range(50.0..150.0));
            }
            for _ in 0..m {
                values.push(rng.random_range(0.5..1.5));
            }
            let x = WealthVector::new(values, 0)?;
            let class = classify(&f);
            if poor_pay_rich && rich_pay_poor {
                assert_eq!(class.verdict, Verdict::Cohesive);
            } else {
                assert_eq!(class.verdict, Verdict::Fragmented);
            }
            Ok((f, x))
        }
        EconomyProfile::Hoarder => {
            if n < 3 {
                return Err(Error::TooFewAgents { n, min: 3 });
            }
            let m = n - 1;
            let sub = cohesive_block(m, 0.4, &mut rng)?;
            let mut entries: Vec<(usize, usize, f64)> = Vec::new();
            for j in 0..m {
                let drain = rng.random_range(0.02..0.1);
                for &(i, v) in sub.column(j) {
                    entries.push((i, j, v * (1.0 - drain)));
                }
                entries.push((m, j, drain));
            }
            entries.push((m, m, 1.0));
            let f = IncomeCirculationMatrix::validate(n, &entries, DEFAULT_TOLERANCE)?;
            let mut values: Vec<f64> = (0..m).map(|_| rng.random_range(1.0..10.0)).collect();
            values.push(1.0);
            let x = WealthVector::new(values, 0)?;
            let dec = hoarder_decompose(&f)?;
            assert!(dec.is_pure_cash_hoarder());
            assert_eq!(classify(&f).verdict, Verdict::Fragmented);
            Ok((f, x))
        }
    }
}

fn uniform_wealth(n: usize, range: std::ops::Range<f64>, rng: &mut ChaCha8Rng) -> WealthVector {
    let values = (0..n).map(|_| rng.random_range(range.clone())).collect();
    WealthVector::new(values, 0).expect("positive finite draws form a valid state")
}

/// Ring plus density extras plus savings on every diagonal; the block is
/// always cohesive on its own.
fn cohesive_block(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Result<IncomeCirculationMatrix> {
    if !(density.is_finite() && (0.0..=1.0).contains(&density)) {
        return Err(Error::NonFinite { context: "density" });
    }
    let mut entries = Vec::new();
    for j in 0..n {
        let successor = (j + 1) % n;
        let mut rows = vec![j];
        if successor != j {
            // The ring edge j -> j+1 means j receives from j+1, so the
            // column of agent j pays its predecessor.
            rows.push(if j == 0 { n - 1 } else { j - 1 });
        }
        for i in 0..n {
            if !rows.contains(&i) && rng.random::<f64>() < density {
                rows.push(i);
            }
        }
        let weights: Vec<f64> = rows.iter().map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for (&i, wgt) in rows.iter().zip(&weights) {
            entries.push((i, j, wgt / total));
        }
    }
    IncomeCirculationMatrix::validate(n, &entries, DEFAULT_TOLERANCE)
}

/// Copies a block at `(row_off, col_off)`, optionally leaking a few percent
/// of every column to random rows in `leak_rows` (global indices).
fn push_block(
    entries: &mut Vec<(usize, usize, f64)>,
    block: &IncomeCirculationMatrix,
    row_off: usize,
    col_off: usize,
    rng: &mut ChaCha8Rng,
    leak_rows: Option<Range<usize>>,
) {
    for j in 0..block.n() {
        let leak_frac = if leak_rows.is_some() {
            rng.random_range(0.03..0.08)
        } else {
            0.0
        };
        for &(i, v) in block.column(j) {
            entries.push((i + row_off, j + col_off, v * (1.0 - leak_frac)));
        }
        if let Some(rows) = &leak_rows {
            let target = rng.random_range(rows.clone());
            entries.push((target, j + col_off, leak_frac));
        }
    }
}
