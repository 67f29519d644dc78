//! The select, observe, update contract every policy follows.

use crate::error::Result;
use crate::log::PolicyDecision;
use crate::rng::RngStream;
use crate::stats::ArmId;

/// Information available to a policy at step `t` before it chooses.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    /// 1-based step index.
    pub t: u64,
    /// World context vector for contextual problems.
    pub context: Option<&'a [f64]>,
}

impl<'a> StepContext<'a> {
    pub fn at(t: u64) -> Self {
        Self { t, context: None }
    }

    pub fn with_context(t: u64, context: &'a [f64]) -> Self {
        Self {
            t,
            context: Some(context),
        }
    }
}

/// A discrete-armed bandit policy.
///
/// The harness calls [`Policy::select`] then [`Policy::observe`] once per
/// step, with the same `StepContext`. Instances are single-threaded state
/// machines but may move between threads between steps.
pub trait Policy: Send {
    fn name(&self) -> &'static str;

    fn num_arms(&self) -> usize;

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision>;

    /// Feed back the rewards of the arms chosen by the preceding `select`.
    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()>;
}

/// A policy over the continuum `[0, 1]`.
pub trait ContinuumPolicy: Send {
    fn name(&self) -> &'static str;

    fn select_point(&mut self, t: u64, rng: &mut RngStream) -> Result<f64>;

    fn observe_point(&mut self, x: f64, reward: f64) -> Result<()>;

    /// The point the policy would report if stopped now.
    fn recommend(&self) -> f64;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn num_arms(&self) -> usize {
        (**self).num_arms()
    }

    fn select(&mut self, step: &StepContext<'_>, rng: &mut RngStream) -> Result<PolicyDecision> {
        (**self).select(step, rng)
    }

    fn observe(&mut self, step: &StepContext<'_>, arms: &[ArmId], rewards: &[f64]) -> Result<()> {
        (**self).observe(step, arms, rewards)
    }
}
