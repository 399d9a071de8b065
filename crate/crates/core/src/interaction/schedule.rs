//! Cutoff schedules `(r_n, Lambda_n, a_n, M_n)` given by closed-form growth
//! laws, and the check that `M_n r_n^{D-1} / Lambda_n` decreases to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizon of the numeric monotonicity scan.
pub const SCAN_HORIZON: u64 = 10_000;
const EXPONENT_EPS: f64 = 1e-12;

/// `scale * base^n * n^exponent * ln(n + 1)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthLaw {
    pub scale: f64,
    #[serde(default = "unit")]
    pub base: f64,
    #[serde(default)]
    pub exponent: f64,
    #[serde(default)]
    pub log_power: f64,
}

fn unit() -> f64 {
    1.0
}

impl GrowthLaw {
    pub fn constant(scale: f64) -> Self {
        GrowthLaw {
            scale,
            base: 1.0,
            exponent: 0.0,
            log_power: 0.0,
        }
    }

    pub fn power(scale: f64, exponent: f64) -> Self {
        GrowthLaw {
            exponent,
            ..Self::constant(scale)
        }
    }

    pub fn geometric(scale: f64, base: f64) -> Self {
        GrowthLaw {
            base,
            ..Self::constant(scale)
        }
    }

    pub fn with_log_power(self, log_power: f64) -> Self {
        GrowthLaw { log_power, ..self }
    }

    pub fn ln_value(&self, n: u64) -> f64 {
        let nf = n as f64;
        self.scale.ln() + nf * self.base.ln() + self.exponent * nf.ln() + self.log_power * (nf + 1.0).ln().ln()
    }

    pub fn value(&self, n: u64) -> f64 {
        self.ln_value(n).exp()
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let ok = [self.scale, self.base, self.exponent, self.log_power].iter().all(|v| v.is_finite())
            && self.scale > 0.0
            && self.base > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSchedule(format!(
                "{name}: scale and base must be positive and all parameters finite"
            )))
        }
    }

    /// Sign of the asymptotic growth: `1` to infinity, `-1` to zero,
    /// `0` bounded away from both.
    pub fn trend(&self) -> i8 {
        let key = [self.base.ln(), self.exponent, self.log_power];
        for k in key {
            if k > EXPONENT_EPS {
                return 1;
            }
            if k < -EXPONENT_EPS {
                return -1;
            }
        }
        0
    }

    /// `self * other^power`, exponents combined symbolically.
    pub fn times_power(&self, other: &GrowthLaw, power: f64) -> GrowthLaw {
        GrowthLaw {
            scale: self.scale * other.scale.powf(power),
            base: self.base * other.base.powf(power),
            exponent: self.exponent + power * other.exponent,
            log_power: self.log_power + power * other.log_power,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSchedule {
    pub dim: usize,
    pub radius: GrowthLaw,
    pub lambda: GrowthLaw,
    pub sup_bound: GrowthLaw,
    #[serde(default)]
    pub penalty: Option<GrowthLaw>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub n: u64,
    pub radius: f64,
    pub lambda: f64,
    pub sup_bound: f64,
    pub penalty: Option<f64>,
    /// `1 / Lambda_n`.
    pub delta: f64,
}

impl ScheduleEntry {
    /// `M r^{D-1} / Lambda`.
    pub fn ratio(&self, dim: usize) -> f64 {
        self.sup_bound * self.radius.powi(dim as i32 - 1) / self.lambda
    }
}

impl CutoffSchedule {
    pub fn entry(&self, n: u64) -> Result<ScheduleEntry> {
        if n == 0 {
            return Err(Error::InvalidSchedule("schedule indices start at 1".into()));
        }
        let lambda = self.lambda.value(n);
        Ok(ScheduleEntry {
            n,
            radius: self.radius.value(n),
            lambda,
            sup_bound: self.sup_bound.value(n),
            penalty: self.penalty.map(|a| a.value(n)),
            delta: 1.0 / lambda,
        })
    }

    /// Law of `M_n r_n^{D-1} / Lambda_n`.
    pub fn ratio_law(&self) -> GrowthLaw {
        self.sup_bound
            .times_power(&self.radius, self.dim as f64 - 1.0)
            .times_power(&self.lambda, -1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCheck {
    pub pass: bool,
    pub reasons: Vec<String>,
    /// First index from which the ratio is nonincreasing up to the horizon.
    pub n0: Option<u64>,
    pub ratio_law: GrowthLaw,
    pub ratio_first: f64,
    pub ratio_last: f64,
}

fn nondecreasing(law: &GrowthLaw) -> Option<u64> {
    let mut prev = law.ln_value(1);
    for n in 2..=SCAN_HORIZON {
        let cur = law.ln_value(n);
        if cur < prev - 1e-12 * prev.abs().max(1.0) {
            return Some(n);
        }
        prev = cur;
    }
    None
}

/// Symbolic decay of the ratio law plus a numeric scan for monotone
/// decrease and for nondecreasing cutoffs on `n <= 10^4`.
pub fn check_schedule(schedule: &CutoffSchedule) -> ScheduleCheck {
    let mut reasons = Vec::new();
    let ratio_law = schedule.ratio_law();
    let mut laws: Vec<(&'static str, &GrowthLaw, bool)> = vec![
        ("radius", &schedule.radius, true),
        ("lambda", &schedule.lambda, true),
        ("sup_bound", &schedule.sup_bound, false),
    ];
    if let Some(a) = &schedule.penalty {
        laws.push(("penalty", a, true));
    }
    if schedule.dim == 0 {
        reasons.push("dimension must be at least 1".into());
    }
    for (name, law, diverges) in &laws {
        if let Err(e) = law.validate(name) {
            reasons.push(e.to_string());
            continue;
        }
        if *diverges && law.trend() != 1 {
            reasons.push(format!("{name} does not grow without bound"));
        }
        if let Some(n) = nondecreasing(law) {
            reasons.push(format!("{name} decreases at n = {n}"));
        }
    }
    if !reasons.is_empty() {
        return ScheduleCheck {
            pass: false,
            reasons,
            n0: None,
            ratio_law,
            ratio_first: f64::NAN,
            ratio_last: f64::NAN,
        };
    }
    if ratio_law.trend() != -1 {
        reasons.push(format!(
            "M r^(D-1) / Lambda does not tend to zero (base {}, exponent {}, log power {})",
            ratio_law.base, ratio_law.exponent, ratio_law.log_power
        ));
    }
    let mut last_increase = 0;
    let mut prev = ratio_law.ln_value(1);
    for n in 2..=SCAN_HORIZON {
        let cur = ratio_law.ln_value(n);
        if cur > prev + 1e-12 * prev.abs().max(1.0) {
            last_increase = n;
        }
        prev = cur;
    }
    let n0 = if last_increase == SCAN_HORIZON {
        reasons.push(format!("ratio still increasing at n = {SCAN_HORIZON}"));
        None
    } else {
        Some(last_increase.max(1))
    };
    ScheduleCheck {
        pass: reasons.is_empty(),
        reasons,
        n0,
        ratio_law,
        ratio_first: ratio_law.value(1),
        ratio_last: ratio_law.value(SCAN_HORIZON),
    }
}
