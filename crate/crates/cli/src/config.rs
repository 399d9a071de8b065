//! Run configuration: one JSON document holding the lattice, the catalogs
//! of test functions and functionals, the interaction, the schedule and one
//! optional section per command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rpfield::constraints::SolverConfig;
use rpfield::interaction::{check_schedule, EpsilonConfig};
use rpfield::spectral::{CylindricalFunction, OuterFunction};
use rpfield::verifiers::{EuclideanTransform, PrecisionSymbol, Probes, MARKOV_MAX_SITES};
use rpfield::{
    ConstraintSet, CutoffSchedule, Lagrangian, LatticeSpec, Mollifier, QuadratureConfig, TestFunction,
};

use crate::error::CliError;

pub const CONFIG_SCHEMA: &str = "rpfield-config/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Covariance,
    Sample,
    Estimate,
    ConstrainSweep,
    VerifyRp,
    VerifyInvariance,
    VerifyMarkov,
    ScheduleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Covariance => "covariance",
            Command::Sample => "sample",
            Command::Estimate => "estimate",
            Command::ConstrainSweep => "constrain-sweep",
            Command::VerifyRp => "verify-rp",
            Command::VerifyInvariance => "verify-invariance",
            Command::VerifyMarkov => "verify-markov",
            Command::ScheduleCheck => "schedule-check",
        }
    }

    /// First element of every seed derivation path issued by this command.
    pub fn tag(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
}

/// `outer(<inner[0], phi>, ...)` with inner test functions named from the
/// catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub outer: OuterFunction,
    pub inner: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceJob {
    /// Pairs of test-function names.
    pub pairs: Vec<(String, String)>,
    /// Also report the exact momentum sum on the run lattice.
    #[serde(default)]
    pub lattice_sum: bool,
    /// Penalized covariance at this `(a, Lambda)`.
    #[serde(default)]
    pub penalty: Option<PenaltyPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyPoint {
    pub a: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleJob {
    pub count: usize,
    /// Pairings `<g, phi>` reported per sample.
    #[serde(default)]
    pub pairings: Vec<String>,
    #[serde(default = "yes")]
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateJob {
    pub functionals: Vec<String>,
    pub first: u64,
    pub last: u64,
    /// Overrides the top-level sample count.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Absolute tolerance of the limit diagnostic.
    #[serde(default = "estimate_tolerance")]
    pub tolerance: f64,
    /// Turns the limit diagnostic into a verdict.
    #[serde(default)]
    pub require_convergence: bool,
    /// Replace `L` by its bounded transform with `eps_n` chosen per index.
    #[serde(default)]
    pub bounded: Option<EpsilonConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepJob {
    pub f: String,
    pub g: String,
    pub first: u64,
    pub last: u64,
    #[serde(default = "sweep_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpJob {
    pub functionals: Vec<String>,
    pub n: u64,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default = "four")]
    pub z: f64,
    /// Also estimate with the interaction split across the band and report
    /// the difference.
    #[serde(default)]
    pub split_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceJob {
    pub functional: String,
    pub transforms: Vec<EuclideanTransform>,
    pub first: u64,
    pub last: u64,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Calibrated on the first transform at `first` when absent.
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default = "four")]
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovJob {
    pub width: usize,
    #[serde(default = "boundary")]
    pub probes: Probes,
    #[serde(default = "laplacian")]
    pub symbol: PrecisionSymbol,
    #[serde(default = "markov_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub seed: u64,
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub tests: BTreeMap<String, TestFunction>,
    #[serde(default)]
    pub functionals: BTreeMap<String, FunctionalSpec>,
    #[serde(default = "Lagrangian::zero")]
    pub lagrangian: Lagrangian,
    #[serde(default)]
    pub constraints: Option<ConstraintSet>,
    #[serde(default)]
    pub schedule: Option<CutoffSchedule>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub covariance: Option<CovarianceJob>,
    #[serde(default)]
    pub sample: Option<SampleJob>,
    #[serde(default)]
    pub estimate: Option<EstimateJob>,
    #[serde(default)]
    pub constrain_sweep: Option<SweepJob>,
    #[serde(default)]
    pub verify_rp: Option<RpJob>,
    #[serde(default)]
    pub verify_invariance: Option<InvarianceJob>,
    #[serde(default)]
    pub verify_markov: Option<MarkovJob>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn yes() -> bool {
    true
}
fn four() -> f64 {
    4.0
}
fn estimate_tolerance() -> f64 {
    1e-2
}
fn sweep_tolerance() -> f64 {
    1e-3
}
fn markov_threshold() -> f64 {
    1e-10
}
fn default_samples() -> usize {
    1000
}
fn boundary() -> Probes {
    Probes::Boundary
}
fn laplacian() -> PrecisionSymbol {
    PrecisionSymbol::DiscreteLaplacian
}

fn invalid(field: impl Into<String>, reason: impl ToString) -> CliError {
    CliError::Config {
        field: field.into(),
        reason: reason.to_string(),
    }
}

fn require<'a, T>(section: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
    section
        .as_ref()
        .ok_or_else(|| invalid(field, "section is required by this command"))
}

fn check_range(field: &str, first: u64, last: u64) -> Result<(), CliError> {
    if first == 0 || last < first {
        return Err(invalid(field, format!("index range {first}..={last} is empty or starts at 0")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn constraint_set(&self) -> ConstraintSet {
        self.constraints.clone().unwrap_or_else(ConstraintSet::empty)
    }

    pub fn test(&self, field: &str, name: &str) -> Result<&TestFunction, CliError> {
        self.tests
            .get(name)
            .ok_or_else(|| invalid(field, format!("unknown test function `{name}`")))
    }

    pub fn functional(&self, field: &str, name: &str) -> Result<CylindricalFunction, CliError> {
        let spec = self
            .functionals
            .get(name)
            .ok_or_else(|| invalid(field, format!("unknown functional `{name}`")))?;
        let inner = spec
            .inner
            .iter()
            .enumerate()
            .map(|(i, g)| self.test(&format!("functionals.{name}.inner[{i}]"), g).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        CylindricalFunction::new(spec.outer.clone(), inner).map_err(|e| invalid(format!("functionals.{name}"), e))
    }

    pub fn schedule(&self) -> Result<&CutoffSchedule, CliError> {
        require(&self.schedule, "schedule")
    }

    /// Checks everything `command` touches before any compute: lattice,
    /// catalogs, guard margins and, except for `schedule-check` itself,
    /// the schedule condition.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if self.schema != CONFIG_SCHEMA {
            return Err(invalid("schema", format!("expected `{CONFIG_SCHEMA}`, got `{}`", self.schema)));
        }
        let spec = &self.lattice;
        spec.validate().map_err(|e| invalid("lattice", e))?;
        self.quadrature.validate().map_err(|e| invalid("quadrature", e))?;
        if self.samples < 2 {
            return Err(invalid("samples", "at least two samples are required"));
        }
        for (name, tf) in &self.tests {
            let field = format!("tests.{name}");
            tf.validate(spec.dim, spec.components).map_err(|e| invalid(&field, e))?;
            tf.check_fits(spec, 0.0).map_err(|e| invalid(&field, e))?;
        }
        for name in self.functionals.keys() {
            self.functional(&format!("functionals.{name}"), name)?;
        }
        self.lagrangian.validate().map_err(|e| invalid("lagrangian", e))?;
        if let Some(cs) = &self.constraints {
            cs.validate().map_err(|e| invalid("constraints", e))?;
            cs.check_shape(spec.dim, spec.components).map_err(|e| invalid("constraints", e))?;
        }
        if let Some(s) = &self.schedule {
            if s.dim != spec.dim {
                return Err(invalid("schedule.dim", format!("{} differs from lattice dimension {}", s.dim, spec.dim)));
            }
            if command != Command::ScheduleCheck {
                let check = check_schedule(s);
                if !check.pass {
                    return Err(invalid("schedule", check.reasons.join("; ")));
                }
            }
        }
        match command {
            Command::Covariance => {
                let job = require(&self.covariance, "covariance")?;
                for (i, (f, g)) in job.pairs.iter().enumerate() {
                    let field = format!("covariance.pairs[{i}]");
                    self.test(&field, f)?;
                    self.test(&field, g)?;
                }
                if let Some(p) = job.penalty {
                    if !(p.a.is_finite() && p.a >= 0.0) {
                        return Err(invalid("covariance.penalty.a", "must be finite and non-negative"));
                    }
                    Mollifier::new(spec.dim, p.lambda).map_err(|e| invalid("covariance.penalty.lambda", e))?;
                }
            }
            Command::Sample => {
                let job = require(&self.sample, "sample")?;
                if job.count == 0 {
                    return Err(invalid("sample.count", "must be positive"));
                }
                for (i, g) in job.pairings.iter().enumerate() {
                    self.test(&format!("sample.pairings[{i}]"), g)?;
                }
            }
            Command::Estimate => {
                let job = require(&self.estimate, "estimate")?;
                self.schedule()?;
                check_range("estimate", job.first, job.last)?;
                if job.functionals.is_empty() {
                    return Err(invalid("estimate.functionals", "at least one functional is required"));
                }
                for (i, f) in job.functionals.iter().enumerate() {
                    self.functional(&format!("estimate.functionals[{i}]"), f)?;
                }
                if let Some(eps) = &job.bounded {
                    eps.validate().map_err(|e| invalid("estimate.bounded", e))?;
                    if job.first < 2 {
                        return Err(invalid("estimate.first", "the bounded transform needs n >= 2"));
                    }
                }
                // The bounded transform's sup depends on eps_n, checked at run time.
                let action = job.bounded.is_none().then_some(&self.lagrangian);
                self.check_entries("estimate", job.first, job.last, action)?;
            }
            Command::ConstrainSweep => {
                let job = require(&self.constrain_sweep, "constrain_sweep")?;
                check_range("constrain_sweep", job.first, job.last)?;
                self.test("constrain_sweep.f", &job.f)?;
                self.test("constrain_sweep.g", &job.g)?;
                if self.schedule()?.penalty.is_none() {
                    return Err(invalid("schedule.penalty", "the sweep needs a penalty law"));
                }
                self.check_entries("constrain_sweep", job.first, job.last, None)?;
            }
            Command::VerifyRp => {
                let job = require(&self.verify_rp, "verify_rp")?;
                check_range("verify_rp", job.n, job.n)?;
                if job.functionals.is_empty() {
                    return Err(invalid("verify_rp.functionals", "at least one functional is required"));
                }
                for (i, f) in job.functionals.iter().enumerate() {
                    self.functional(&format!("verify_rp.functionals[{i}]"), f)?;
                }
                self.check_entries("verify_rp", job.n, job.n, Some(&self.lagrangian))?;
            }
            Command::VerifyInvariance => {
                let job = require(&self.verify_invariance, "verify_invariance")?;
                check_range("verify_invariance", job.first, job.last)?;
                let f = self.functional("verify_invariance.functional", &job.functional)?;
                if job.transforms.is_empty() {
                    return Err(invalid("verify_invariance.transforms", "at least one transform is required"));
                }
                for (i, t) in job.transforms.iter().enumerate() {
                    let field = format!("verify_invariance.transforms[{i}]");
                    t.validate(spec.dim).map_err(|e| invalid(&field, e))?;
                    rpfield::verifiers::apply_transform(&f, t, spec).map_err(|e| invalid(&field, e))?;
                }
                self.check_entries("verify_invariance", job.first, job.last, Some(&self.lagrangian))?;
            }
            Command::VerifyMarkov => {
                require(&self.verify_markov, "verify_markov")?;
                if spec.num_sites() > MARKOV_MAX_SITES || spec.components != 1 {
                    return Err(invalid(
                        "lattice",
                        format!("the Markov check needs a scalar field on at most {MARKOV_MAX_SITES} sites"),
                    ));
                }
            }
            Command::ScheduleCheck => {
                self.schedule()?;
            }
        }
        Ok(())
    }

    /// Guard margins of every schedule entry in `first..=last`: the ball
    /// and mollifier fit the torus, and `sup L - inf L <= M_n` when
    /// an action is given.
    fn check_entries(&self, field: &str, first: u64, last: u64, action: Option<&Lagrangian>) -> Result<(), CliError> {
        let schedule = self.schedule()?;
        for n in first..=last {
            let entry = schedule.entry(n).map_err(|e| invalid("schedule", e))?;
            let field = format!("{field} (n = {n})");
            let m = Mollifier::new(self.lattice.dim, entry.lambda).map_err(|e| invalid(&field, e))?;
            m.check_lattice(&self.lattice).map_err(|e| invalid(&field, e))?;
            if let Some(l) = action {
                rpfield::interaction::plan_for_entry(&self.lattice, l, &entry).map_err(|e| invalid(&field, e))?;
            }
        }
        Ok(())
    }
}
