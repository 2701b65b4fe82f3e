//! Generosity of a cohesive economy and the convergence rate it certifies.
//!
//! After one full mixing window of `k0` steps (the primitivity exponent),
//! the matrix `G = F^k0` is entrywise positive: everyone has received a
//! share of everyone's wealth.  The generosity `g` sums the guaranteed
//! shares `alpha[i] = min_j G[i][j]`, and every zero-sum difference vector
//! contracts by at least `1 - g` per window.  Chaining windows turns this
//! into an explicit geometric envelope for the decay of wealth-difference
//! curves.

use crate::error::{Error, Result};
use crate::graph::SocietyClassification;
use crate::matrix::{l1_norm, AgentId, DenseMatrix, IncomeCirculationMatrix};

/// Guaranteed-share profile of a cohesive economy.
#[derive(Debug, Clone)]
pub struct GenerosityProfile {
    /// Mixing window length (primitivity exponent of the circulation graph).
    pub k0: usize,
    /// `F^k0`, entrywise positive.
    pub matrix: DenseMatrix,
    /// `alpha[i]`: share of anyone's wealth agent `i` is guaranteed to
    /// receive across one window.
    pub alpha: Vec<f64>,
    /// Total guaranteed circulation `sum(alpha)`, in `(0, 1]`.
    pub g: f64,
    /// Per-window contraction factor `1 - g` for zero-sum differences.
    pub contraction_factor: f64,
}

/// Computes the generosity profile of `f`, whose classification must be
/// cohesive.
pub fn generosity_profile(
    f: &IncomeCirculationMatrix,
    class: &SocietyClassification,
) -> Result<GenerosityProfile> {
    debug_assert_eq!(f.n(), class.n);
    let Some(k0) = class.exponent else {
        return Err(Error::NotCohesive {
            verdict: class.verdict.as_str(),
        });
    };
    let matrix = f.matrix_power(k0)?;
    let n = f.n();
    let mut alpha = Vec::with_capacity(n);
    for i in 0..n {
        let m = matrix.row_min(i);
        assert!(
            m > 0.0,
            "power at the exponent must be entrywise positive, row {i} has min {m}"
        );
        alpha.push(m);
    }
    let g: f64 = alpha.iter().sum();
    debug_assert!(g > 0.0 && g <= 1.0 + 1e-12);
    Ok(GenerosityProfile {
        k0,
        matrix,
        alpha,
        g: g.min(1.0),
        contraction_factor: (1.0 - g).max(0.0),
    })
}

/// Outcome of a single contraction test `|G u|_1 <= (1 - g) |u|_1`.
#[derive(Debug, Clone, Copy)]
pub struct ContractionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub g: f64,
    pub holds: bool,
}

/// Verifies the window contraction inequality on one zero-sum vector.
///
/// `g_mat` must be entrywise positive and column-stochastic; `u` must sum
/// to zero (within `1e-12` relative to its norm).  `holds` allows `1e-12`
/// relative slack for rounding.
pub fn contraction_check(g_mat: &DenseMatrix, u: &[f64]) -> Result<ContractionCheck> {
    let n = g_mat.n();
    if u.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.len(),
        });
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "difference vector",
        });
    }
    for i in 0..n {
        for j in 0..n {
            if g_mat.get(i, j) <= 0.0 {
                return Err(Error::NotPositive { row: i, col: j });
            }
        }
    }
    for (j, s) in g_mat.column_sums().into_iter().enumerate() {
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::ColumnSumViolation {
                col: j,
                sum: s,
                tolerance: 1e-9,
            });
        }
    }
    let norm = l1_norm(u);
    let sum: f64 = u.iter().sum();
    if sum.abs() > 1e-12 * norm.max(1.0) {
        return Err(Error::NotZeroSum { sum });
    }
    let alpha: Vec<f64> = (0..n).map(|i| g_mat.row_min(i)).collect();
    let g: f64 = alpha.iter().sum();
    let lhs = l1_norm(&g_mat.apply(u));
    let rhs = (1.0 - g) * norm;
    Ok(ContractionCheck {
        lhs,
        rhs,
        g,
        holds: lhs <= rhs + 1e-12 * norm.max(1.0),
    })
}

/// Geometric envelope `bound(k) = gamma0 * ((1 - g)^(1/k0))^k` for the
/// deviation curve of a support experiment of size `epsilon` moved from
/// donor `h0` to recipient `l0`.
#[derive(Debug, Clone)]
pub struct ConvergenceBound {
    pub k0: usize,
    pub g: f64,
    /// Worst single-window amplification `max_{r < k0} |F^r (e_l - e_h)|_1`;
    /// at most 2, and exactly 2 at `r = 0`.
    pub beta: f64,
    pub gamma0: f64,
    pub epsilon: f64,
    /// `ln((1 - g)^(1/k0))`; `-inf` when `g = 1`.
    ln_decay: f64,
}

impl ConvergenceBound {
    pub fn new(
        f: &IncomeCirculationMatrix,
        profile: &GenerosityProfile,
        donor: AgentId,
        recipient: AgentId,
        epsilon: f64,
    ) -> Result<Self> {
        let n = f.n();
        for agent in [donor, recipient] {
            if agent.0 >= n {
                return Err(Error::IndexOutOfBounds {
                    row: agent.0,
                    col: agent.0,
                    n,
                });
            }
        }
        if donor == recipient {
            return Err(Error::SameAgent { agent: donor.0 });
        }
        if !epsilon.is_finite() {
            return Err(Error::NonFinite { context: "epsilon" });
        }
        if epsilon <= 0.0 {
            return Err(Error::NonPositiveEpsilon { value: epsilon });
        }
        let mut u = vec![0.0; n];
        u[recipient.0] = 1.0;
        u[donor.0] = -1.0;
        let mut beta = l1_norm(&u);
        for _ in 1..profile.k0 {
            u = f.apply(&u);
            beta = beta.max(l1_norm(&u));
        }
        let k0 = profile.k0;
        let c = 1.0 / k0 as f64;
        let gamma0 = if profile.contraction_factor == 0.0 {
            // Total generosity: one window evens everything out, so the
            // flat pre-window bound is all that is needed.
            epsilon * beta
        } else {
            epsilon * beta / profile.contraction_factor.powf(1.0 - c)
        };
        Ok(Self {
            k0,
            g: profile.g,
            beta,
            gamma0,
            epsilon,
            ln_decay: profile.contraction_factor.ln() / k0 as f64,
        })
    }

    /// Envelope value after `k` steps.
    pub fn at(&self, k: usize) -> f64 {
        if self.ln_decay == f64::NEG_INFINITY {
            return if k >= self.k0 { 0.0 } else { self.gamma0 };
        }
        self.gamma0 * (k as f64 * self.ln_decay).exp()
    }

    /// Envelope values for `k = 0..=horizon`.
    pub fn curve(&self, horizon: usize) -> Vec<f64> {
        (0..=horizon).map(|k| self.at(k)).collect()
    }

    /// Smallest `k` with `at(k) <= target`; `target` must be positive.
    pub fn horizon_for(&self, target: f64) -> usize {
        assert!(target > 0.0, "target must be positive");
        if self.gamma0 <= target {
            return 0;
        }
        if self.ln_decay == f64::NEG_INFINITY {
            return self.k0;
        }
        let k = ((target / self.gamma0).ln() / self.ln_decay).ceil();
        debug_assert!(k >= 0.0);
        k as usize
    }
}

/// One-shot envelope value at step `k` for a transfer of `epsilon` from
/// `h0` to `l0`.  Builds the full [`ConvergenceBound`] internally; callers
/// evaluating many steps should construct that once and reuse it.
pub fn convergence_bound(
    profile: &GenerosityProfile,
    f: &IncomeCirculationMatrix,
    h0: AgentId,
    l0: AgentId,
    epsilon: f64,
    k: usize,
) -> Result<f64> {
    Ok(ConvergenceBound::new(f, profile, h0, l0, epsilon)?.at(k))
}
