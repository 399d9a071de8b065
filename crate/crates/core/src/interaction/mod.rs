//! Local interactions: Lagrangians, regions, cutoff schedules and
//! reweighted Monte Carlo estimates.

mod action;
mod epsilon;
mod estimator;
mod lagrangian;
mod region;
mod schedule;

pub use action::{action_integral, ActionPlan};
pub use epsilon::{select_epsilon, DiscrepancyEnsemble, EpsilonConfig, EpsilonSelection};
pub use estimator::{
    ball_plan, estimate_ratio, extract_limit, plan_for_entry, Ensemble, EstimatorResult, LimitResult, LimitStatus,
};
pub use lagrangian::{bound_lagrangian, ConstraintForm, Features, Lagrangian, Monomial};
pub use region::Region;
pub use schedule::{check_schedule, CutoffSchedule, GrowthLaw, ScheduleCheck, ScheduleEntry, SCAN_HORIZON};
