//! Support experiments: move a small amount of wealth from a rich donor to
//! a poor recipient and watch the economy wash the intervention out.
//!
//! The supported state starts at l1 distance `2 * epsilon` from the
//! baseline.  Because every step is column-stochastic, that deviation never
//! grows; in a cohesive economy it decays inside the geometric envelope of
//! [`crate::generosity::ConvergenceBound`].  A perturbed variant replays
//! the same experiment under multiplicative noise on the matrix entries,
//! using one shared noise stream so both trajectories see identical
//! economies.

use crate::error::{Error, Result};
use crate::generosity::{generosity_profile, ConvergenceBound};
use crate::graph::classify;
use crate::matrix::{
    evolve_constant, l1_distance, AgentId, IncomeCirculationMatrix, Trajectory, WealthVector,
    STRUCTURAL_ZERO,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Support sizes above this fraction of the donor's wealth set the
/// smallness warning.
pub const DEFAULT_SMALLNESS_RATIO: f64 = 0.1;

/// Deviation below `threshold * epsilon` counts as recovered.
pub const DEFAULT_RECOVERY_THRESHOLD: f64 = 0.01;

/// Default relative noise level for perturbed runs.
pub const DEFAULT_SIGMA: f64 = 0.01;

/// How often perturbed runs re-verify primitivity.
pub const DEFAULT_CHECK_EVERY: usize = 16;

/// Largest horizon the automatic bound-based choice may pick; longer runs
/// must be requested explicitly.
pub const MAX_AUTO_HORIZON: usize = 1_000_000;

/// A one-off transfer of `epsilon` from `donor` to `recipient` at time `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEvent {
    pub t0: usize,
    pub donor: AgentId,
    pub recipient: AgentId,
    pub epsilon: f64,
}

impl SupportEvent {
    pub fn new(t0: usize, donor: AgentId, recipient: AgentId, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::NonFinite { context: "epsilon" });
        }
        if epsilon <= 0.0 {
            return Err(Error::NonPositiveEpsilon { value: epsilon });
        }
        if donor == recipient {
            return Err(Error::SameAgent { agent: donor.0 });
        }
        Ok(Self {
            t0,
            donor,
            recipient,
            epsilon,
        })
    }

    fn check_against(&self, x: &WealthVector) -> Result<()> {
        let n = x.len();
        for agent in [self.donor, self.recipient] {
            if agent.0 >= n {
                return Err(Error::IndexOutOfBounds {
                    row: agent.0,
                    col: agent.0,
                    n,
                });
            }
        }
        if x.time_index() != self.t0 {
            return Err(Error::TimeMismatch {
                event_time: self.t0,
                state_time: x.time_index(),
            });
        }
        if x.get(self.donor) < self.epsilon {
            return Err(Error::InsufficientDonorWealth {
                donor: self.donor.0,
                wealth: x.get(self.donor),
                epsilon: self.epsilon,
            });
        }
        Ok(())
    }

    /// True when the transfer is small against the donor's holdings.
    pub fn is_small_relative_to(&self, x: &WealthVector, ratio: f64) -> bool {
        self.epsilon <= ratio * x.get(self.donor)
    }
}

/// Applies the transfer, keeping the time index and the monetary base.
pub fn apply_support(x: &WealthVector, ev: &SupportEvent) -> Result<WealthVector> {
    ev.check_against(x)?;
    let mut values = x.values().to_vec();
    values[ev.donor.0] -= ev.epsilon;
    values[ev.recipient.0] += ev.epsilon;
    WealthVector::new(values, x.time_index())
}

/// Knobs for [`support_experiment`] and [`perturbed_evolve`].
#[derive(Debug, Clone, Copy)]
pub struct SupportOptions {
    /// Steps to run; `None` derives one from the convergence bound (only
    /// possible for cohesive economies).
    pub horizon: Option<usize>,
    pub recovery_threshold: f64,
    pub smallness_ratio: f64,
}

impl Default for SupportOptions {
    fn default() -> Self {
        Self {
            horizon: None,
            recovery_threshold: DEFAULT_RECOVERY_THRESHOLD,
            smallness_ratio: DEFAULT_SMALLNESS_RATIO,
        }
    }
}

/// Side-by-side run of an economy with and without one support event.
#[derive(Debug, Clone)]
pub struct SupportExperimentResult {
    pub event: SupportEvent,
    pub baseline: Trajectory,
    pub supported: Trajectory,
    /// l1 distance between the trajectories at each step, starting at
    /// exactly `2 * epsilon`.
    pub deviation: Vec<f64>,
    /// Geometric envelope per step; present only for cohesive economies.
    pub bound: Option<Vec<f64>>,
    /// The envelope parameters behind `bound`.
    pub bound_info: Option<ConvergenceBound>,
    /// First step with deviation at or below `recovery_threshold * epsilon`.
    pub recovery_step: Option<usize>,
    pub recovery_threshold: f64,
    /// Set when epsilon is large against the donor's wealth, where the
    /// linear small-support reading stops being meaningful.
    pub smallness_warning: bool,
}

/// Runs the support experiment with a constant matrix.
pub fn support_experiment(
    f: &IncomeCirculationMatrix,
    x0: &WealthVector,
    event: &SupportEvent,
    options: &SupportOptions,
) -> Result<SupportExperimentResult> {
    event.check_against(x0)?;
    if x0.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            found: x0.len(),
        });
    }
    let class = classify(f);
    let bound_info = if class.is_cohesive() {
        let profile = generosity_profile(f, &class)?;
        Some(ConvergenceBound::new(
            f,
            &profile,
            event.donor,
            event.recipient,
            event.epsilon,
        )?)
    } else {
        None
    };
    let horizon = resolve_horizon(options, bound_info.as_ref(), event)?;
    let supported0 = apply_support(x0, event)?;
    let baseline = evolve_constant(f, x0, horizon)?;
    let supported = evolve_constant(f, &supported0, horizon)?;
    let deviation = deviation_curve(&baseline, &supported, event, x0);
    let bound = bound_info.as_ref().map(|b| b.curve(horizon));
    if let Some(curve) = &bound {
        for (k, (d, b)) in deviation.iter().zip(curve).enumerate() {
            assert!(
                d <= &(b + 1e-9 * (1.0 + deviation[0])),
                "deviation {d} exceeded its envelope {b} at step {k}"
            );
        }
    }
    let recovery_step = find_recovery(&deviation, options.recovery_threshold * event.epsilon);
    Ok(SupportExperimentResult {
        event: *event,
        baseline,
        supported,
        deviation,
        bound,
        bound_info,
        recovery_step,
        recovery_threshold: options.recovery_threshold,
        smallness_warning: !event.is_small_relative_to(x0, options.smallness_ratio),
    })
}

/// Per-step aggregate wealth surplus of `group` in the supported run.
/// Starts at `+epsilon` for the recipient alone and `-epsilon` for the
/// donor alone, always sums to 0 over the full agent set, and drifts to 0
/// as the economy forgets the event.
pub fn recovery_rate(result: &SupportExperimentResult, group: &[AgentId]) -> Vec<f64> {
    group_rate(&result.baseline, &result.supported, group)
}

fn group_rate(baseline: &Trajectory, supported: &Trajectory, group: &[AgentId]) -> Vec<f64> {
    baseline
        .states()
        .iter()
        .zip(supported.states())
        .map(|(b, s)| group.iter().map(|&a| s.get(a) - b.get(a)).sum::<f64>())
        .collect()
}

/// Noise model for [`perturbed_evolve`]: every nonzero entry is scaled by
/// `1 + sigma * z` with standard normal `z`, then columns renormalize.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationSpec {
    pub sigma: f64,
    pub seed: u64,
    /// Primitivity is re-verified every this many steps.
    pub check_every: usize,
}

impl PerturbationSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !sigma.is_finite() {
            return Err(Error::NonFinite { context: "sigma" });
        }
        if sigma < 0.0 {
            return Err(Error::InvalidSigma { value: sigma });
        }
        Ok(Self {
            sigma,
            seed,
            check_every: DEFAULT_CHECK_EVERY,
        })
    }

    pub fn with_check_every(mut self, check_every: usize) -> Self {
        self.check_every = check_every.max(1);
        self
    }
}

/// Support experiment under entry noise with common random numbers.
#[derive(Debug, Clone)]
pub struct PerturbedExperimentResult {
    pub event: SupportEvent,
    pub baseline: Trajectory,
    pub supported: Trajectory,
    pub deviation: Vec<f64>,
    pub recovery_step: Option<usize>,
    pub recovery_threshold: f64,
    pub smallness_warning: bool,
    /// How many times primitivity was re-verified along the run.
    pub primitivity_checks: usize,
}

impl PerturbedExperimentResult {
    /// See [`recovery_rate`].
    pub fn recovery_rate(&self, group: &[AgentId]) -> Vec<f64> {
        group_rate(&self.baseline, &self.supported, group)
    }
}

/// Runs the support experiment with a fresh noisy matrix each step, the
/// same one applied to both trajectories.
///
/// Errors with [`Error::PatternBroken`] when noise pushes an entry below
/// the structural-zero threshold, so the circulation pattern never changes
/// silently.
pub fn perturbed_evolve(
    f: &IncomeCirculationMatrix,
    x0: &WealthVector,
    event: &SupportEvent,
    noise: &PerturbationSpec,
    options: &SupportOptions,
) -> Result<PerturbedExperimentResult> {
    event.check_against(x0)?;
    if x0.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            found: x0.len(),
        });
    }
    let class = classify(f);
    let bound_info = if class.is_cohesive() {
        let profile = generosity_profile(f, &class)?;
        Some(ConvergenceBound::new(
            f,
            &profile,
            event.donor,
            event.recipient,
            event.epsilon,
        )?)
    } else {
        None
    };
    let horizon = resolve_horizon(options, bound_info.as_ref(), event)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut base_states = Vec::with_capacity(horizon + 1);
    let mut sup_states = Vec::with_capacity(horizon + 1);
    base_states.push(x0.clone());
    sup_states.push(apply_support(x0, event)?);
    let mut primitivity_checks = 0;
    for step in 0..horizon {
        let noisy = perturb_matrix(f, noise.sigma, step, &mut rng)?;
        if (step + 1) % noise.check_every == 0 {
            primitivity_checks += 1;
            if class.is_cohesive() && !classify(&noisy).is_cohesive() {
                return Err(Error::PrimitivityLost { step });
            }
        }
        base_states.push(noisy.step(base_states.last().expect("non-empty"))?);
        sup_states.push(noisy.step(sup_states.last().expect("non-empty"))?);
    }
    let baseline = Trajectory::from_parts(base_states, (0..horizon).collect());
    let supported = Trajectory::from_parts(sup_states, (0..horizon).collect());
    let deviation = deviation_curve(&baseline, &supported, event, x0);
    let recovery_step = find_recovery(&deviation, options.recovery_threshold * event.epsilon);
    Ok(PerturbedExperimentResult {
        event: *event,
        baseline,
        supported,
        deviation,
        recovery_step,
        recovery_threshold: options.recovery_threshold,
        smallness_warning: !event.is_small_relative_to(x0, options.smallness_ratio),
        primitivity_checks,
    })
}

fn resolve_horizon(
    options: &SupportOptions,
    bound: Option<&ConvergenceBound>,
    event: &SupportEvent,
) -> Result<usize> {
    if let Some(h) = options.horizon {
        return Ok(h);
    }
    let Some(bound) = bound else {
        return Err(Error::HorizonRequired);
    };
    let target = options.recovery_threshold * event.epsilon;
    let h = bound.horizon_for(target);
    if h > MAX_AUTO_HORIZON {
        // The envelope decays too slowly for an implicit choice to be a
        // sane default; make the caller own a run this long.
        return Err(Error::HorizonRequired);
    }
    Ok(h)
}

fn deviation_curve(
    baseline: &Trajectory,
    supported: &Trajectory,
    event: &SupportEvent,
    x0: &WealthVector,
) -> Vec<f64> {
    let deviation: Vec<f64> = baseline
        .states()
        .iter()
        .zip(supported.states())
        .map(|(b, s)| l1_distance(b.values(), s.values()))
        .collect();
    let scale = x0.monetary_base().max(1.0);
    assert!(
        (deviation[0] - 2.0 * event.epsilon).abs() <= 1e-12 * scale,
        "initial deviation {} is not twice epsilon {}",
        deviation[0],
        event.epsilon
    );
    let slack = (1e-12f64).max(1e-15 * x0.len() as f64 * scale);
    for (k, pair) in deviation.windows(2).enumerate() {
        assert!(
            pair[1] <= pair[0] + slack,
            "deviation grew from {} to {} at step {}",
            pair[0],
            pair[1],
            k + 1
        );
    }
    for (b, s) in baseline.states().iter().zip(supported.states()) {
        assert!(
            (b.monetary_base() - s.monetary_base()).abs() <= 1e-12 * scale,
            "baseline and supported monetary bases diverged"
        );
    }
    deviation
}

fn find_recovery(deviation: &[f64], target: f64) -> Option<usize> {
    deviation.iter().position(|&d| d <= target)
}

fn perturb_matrix(
    f: &IncomeCirculationMatrix,
    sigma: f64,
    step: usize,
    rng: &mut ChaCha8Rng,
) -> Result<IncomeCirculationMatrix> {
    let n = f.n();
    let mut entries = Vec::with_capacity(f.nnz());
    for j in 0..n {
        let col = f.column(j);
        let mut noisy = Vec::with_capacity(col.len());
        let mut sum = 0.0;
        for &(i, v) in col {
            let z: f64 = StandardNormal.sample(rng);
            let scaled = v * (1.0 + sigma * z);
            if scaled < STRUCTURAL_ZERO {
                return Err(Error::PatternBroken {
                    step,
                    row: i,
                    col: j,
                });
            }
            sum += scaled;
            noisy.push((i, scaled));
        }
        for (i, v) in noisy {
            let renormalized = v / sum;
            if renormalized < STRUCTURAL_ZERO {
                return Err(Error::PatternBroken {
                    step,
                    row: i,
                    col: j,
                });
            }
            entries.push((i, j, renormalized));
        }
    }
    let noisy = IncomeCirculationMatrix::validate(n, &entries, f.tolerance())?;
    debug_assert!(noisy.same_pattern(f));
    Ok(noisy)
}
