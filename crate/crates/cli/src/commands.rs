//! Command dispatch.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use rpfield::constraints::{constrained_covariance, penalized_covariance, penalty_sweep, SweepConfig};
use rpfield::free_measure::{lattice_covariance, map_samples, write_snapshot};
use rpfield::interaction::{
    bound_lagrangian, check_schedule, extract_limit, plan_for_entry, select_epsilon, ActionPlan, Ensemble,
    EstimatorResult, LimitStatus,
};
use rpfield::spectral::OuterFunction;
use rpfield::verifiers::{
    calibrate_c0, free_cosine_gram, invariance_gap, markov_check, rp_gram, rp_gram_with_plan, HalfSpaceRegion, Side,
};
use rpfield::{CylindricalFunction, Mollifier, QuadratureScheme, Region};

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Context};
use crate::report::{Item, Report, Table, Timing, Verdict, REPORT_SCHEMA};
use crate::seeds::Provenance;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Directory for files written during the run (field snapshots).
    pub out_dir: PathBuf,
}

#[derive(Default)]
struct Outcome {
    results: Vec<Item>,
    verdicts: Vec<Verdict>,
    tables: Vec<Table>,
    files: Vec<String>,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    opts: &'a RunOptions,
    command: Command,
    prov: Provenance,
    out: Outcome,
}

/// Validates `config` for `command`, runs it and assembles the report.
/// The config itself is never modified; a `--seed` override is recorded in
/// the provenance block.
pub fn run(command: Command, config: &RunConfig, opts: &RunOptions) -> Result<Report, CliError> {
    config.validate(command)?;
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let clock = Instant::now();
    let mut r = Run {
        cfg: config,
        opts,
        command,
        prov: Provenance::new(opts.seed.unwrap_or(config.seed), opts.seed.is_some()),
        out: Outcome::default(),
    };
    match command {
        Command::Covariance => r.covariance()?,
        Command::Sample => r.sample()?,
        Command::Estimate => r.estimate()?,
        Command::ConstrainSweep => r.sweep()?,
        Command::VerifyRp => r.verify_rp()?,
        Command::VerifyInvariance => r.verify_invariance()?,
        Command::VerifyMarkov => r.verify_markov()?,
        Command::ScheduleCheck => r.schedule_check()?,
    }
    if let Some(bad) = r.out.results.iter().find(|i| !i.value.is_finite()) {
        return Err(CliError::Compute {
            context: format!("result `{}`", bad.name),
            source: rpfield::Error::NonFinite("report value"),
        });
    }
    let Outcome {
        results,
        verdicts,
        tables,
        files,
    } = r.out;
    Ok(Report {
        schema: REPORT_SCHEMA.into(),
        command: command.name().into(),
        config: config.clone(),
        pass: verdicts.iter().all(|v| v.pass),
        results,
        verdicts,
        tables,
        files,
        provenance: r.prov,
        threads: rayon::current_num_threads(),
        timing: Timing {
            started_unix,
            wall_clock_seconds: clock.elapsed().as_secs_f64(),
        },
    })
}

fn estimate_item(name: String, r: &EstimatorResult) -> Item {
    let item = if r.exact {
        Item::exact(name, r.value)
    } else {
        Item::estimate(name, r.value, r.std_error)
    };
    item.with("samples", r.samples)
        .with("ess", if r.ess.is_finite() { Some(r.ess) } else { None })
        .with("min_action", r.min_action)
        .with("max_action", r.max_action)
}

impl Run<'_> {
    fn tag(&self) -> u64 {
        self.command.tag()
    }

    /// Error estimate of a deterministic quadrature value; `None` for the
    /// exact momentum sum.
    fn quadrature_error(&self, value: f64) -> Option<f64> {
        let q = &self.cfg.quadrature;
        match q.scheme {
            QuadratureScheme::LatticeMomentumSum => None,
            QuadratureScheme::RadialAdaptive => Some(q.abs_tol.max(q.rel_tol * value.abs())),
        }
    }

    fn quadrature_item(&self, name: String, value: f64) -> Item {
        match self.quadrature_error(value) {
            None => Item::exact(name, value),
            Some(e) => Item::estimate(name, value, e),
        }
    }

    fn functionals(&self, field: &str, names: &[String]) -> Result<Vec<CylindricalFunction>, CliError> {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| self.cfg.functional(&format!("{field}[{i}]"), n))
            .collect()
    }

    fn covariance(&mut self) -> Result<(), CliError> {
        let cfg = self.cfg;
        let job = cfg.covariance.as_ref().expect("validated");
        let cs = cfg.constraint_set();
        let quad = &cfg.quadrature;
        let cov = |f: &str, g: &str| -> Result<f64, CliError> {
            let (tf, tg) = (cfg.test("covariance", f)?, cfg.test("covariance", g)?);
            constrained_covariance(tf, tg, &cs, quad).context(|| format!("covariance of ({f}, {g})"))
        };
        for (f, g) in &job.pairs {
            let c = cov(f, g)?;
            self.out.results.push(self.quadrature_item(format!("covariance[{f},{g}]"), c));
            let norm = (cov(f, f)? * cov(g, g)?).sqrt();
            let ratio = if norm > 0.0 { c.abs() / norm } else { 0.0 };
            self.out.verdicts.push(Verdict::at_most(
                "cauchy-schwarz",
                json!({ "f": f, "g": g }),
                ratio,
                1.0 + 1e-9,
            ));
            let (tf, tg) = (cfg.test("covariance", f)?, cfg.test("covariance", g)?);
            if job.lattice_sum {
                let v = lattice_covariance(&cfg.lattice, tf, tg).context(|| format!("lattice sum of ({f}, {g})"))?;
                self.out.results.push(Item::exact(format!("lattice_free_covariance[{f},{g}]"), v));
            }
            if let Some(p) = job.penalty {
                let m = Mollifier::new(cfg.lattice.dim, p.lambda).context(|| "mollifier".into())?;
                let v = penalized_covariance(tf, tg, &cs, p.a, &m, quad)
                    .context(|| format!("penalized covariance of ({f}, {g})"))?;
                let item = self
                    .quadrature_item(format!("penalized_covariance[{f},{g}]"), v)
                    .with("a", p.a)
                    .with("lambda", p.lambda);
                self.out.results.push(item);
            }
        }
        Ok(())
    }

    fn sample(&mut self) -> Result<(), CliError> {
        let cfg = self.cfg;
        let job = cfg.sample.as_ref().expect("validated");
        let spec = cfg.lattice;
        let seed = self.prov.chain("sample", vec![self.tag()], job.count);
        let tests: Vec<_> = job
            .pairings
            .iter()
            .map(|g| cfg.test("sample.pairings", g).map(|t| t.sample(&spec)))
            .collect::<Result<_, _>>()?;
        let dir = self.opts.out_dir.join("snapshots");
        if job.snapshots {
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        let per_sample = map_samples(&spec, seed, 0, job.count, |i, field| {
            let pairings: Vec<f64> = tests.iter().map(|g| g.inner(field)).collect();
            let written = if job.snapshots {
                let stem = dir.join(format!("field_{i:05}"));
                write_snapshot(field, seed, i, &stem).map(|_| ())
            } else {
                Ok(())
            };
            (pairings, field.is_finite(), written)
        });
        let mut rows = Vec::with_capacity(job.count);
        let mut finite = true;
        for (i, (pairings, ok, written)) in per_sample.into_iter().enumerate() {
            written.context(|| format!("snapshot {i}"))?;
            finite &= ok;
            let mut row = serde_json::Map::new();
            row.insert("stream".into(), json!(i));
            for (name, v) in job.pairings.iter().zip(&pairings) {
                self.out.results.push(Item::exact(format!("pairing[{name}]#{i}"), *v));
                row.insert(name.clone(), json!(v));
            }
            rows.push(row);
            if job.snapshots {
                self.out.files.push(format!("snapshots/field_{i:05}.bin"));
                self.out.files.push(format!("snapshots/field_{i:05}.json"));
            }
        }
        if !job.pairings.is_empty() {
            self.out.tables.push(Table {
                name: "pairings".into(),
                rows,
            });
        }
        self.out
            .verdicts
            .push(Verdict::flag("finite-fields", json!({ "count": job.count }), finite));
        Ok(())
    }

    fn estimate(&mut self) -> Result<(), CliError> {
        let cfg = self.cfg;
        let job = cfg.estimate.as_ref().expect("validated");
        let schedule = cfg.schedule()?;
        let spec = cfg.lattice;
        let samples = job.samples.unwrap_or(cfg.samples);
        let fs = self.functionals("estimate.functionals", &job.functionals)?;
        let mut sequences: Vec<Vec<EstimatorResult>> = vec![Vec::new(); fs.len()];
        #[derive(Serialize)]
        struct Row<'a> {
            n: u64,
            radius: f64,
            lambda: f64,
            sup_bound: f64,
            epsilon: Option<f64>,
            functional: &'a str,
            value: f64,
            std_error: f64,
            ess: f64,
        }
        let mut rows = Vec::new();
        for n in job.first..=job.last {
            let entry = schedule.entry(n).context(|| format!("schedule entry {n}"))?;
            let (lagrangian, epsilon) = match &job.bounded {
                Some(eps_cfg) => {
                    let mut eps_cfg = *eps_cfg;
                    eps_cfg.seed = self
                        .prov
                        .chain(format!("estimate epsilon n={n}"), vec![self.tag(), 0, n], eps_cfg.samples);
                    let sel = select_epsilon(n, &cfg.lagrangian, &entry, &spec, &eps_cfg)
                        .context(|| format!("epsilon selection at n = {n}"))?;
                    let bounded = bound_lagrangian(&cfg.lagrangian, sel.epsilon).context(|| "bounded transform".into())?;
                    self.out.results.push(
                        Item::estimate(format!("epsilon_discrepancy n={n}"), sel.discrepancy, sel.std_error)
                            .with("epsilon", sel.epsilon)
                            .with("samples", sel.samples),
                    );
                    (bounded, Some(sel.epsilon))
                }
                None => (cfg.lagrangian.clone(), None),
            };
            let plan = plan_for_entry(&spec, &lagrangian, &entry).context(|| format!("action plan at n = {n}"))?;
            let seed = self.prov.chain(format!("estimate n={n}"), vec![self.tag(), 1, n], samples);
            let ens = Ensemble::generate(&spec, &[&plan], &fs, samples, seed).context(|| format!("ensemble at n = {n}"))?;
            for (i, name) in job.functionals.iter().enumerate() {
                let r = ens.ratio(0, i).context(|| format!("ratio of {name} at n = {n}"))?;
                self.out
                    .results
                    .push(estimate_item(format!("estimate[{name}] n={n}"), &r).with("epsilon", epsilon));
                rows.push(Row {
                    n,
                    radius: entry.radius,
                    lambda: entry.lambda,
                    sup_bound: entry.sup_bound,
                    epsilon,
                    functional: name,
                    value: r.value,
                    std_error: r.std_error,
                    ess: r.ess,
                });
                sequences[i].push(r);
            }
        }
        self.out.tables.push(Table::from_rows("estimates", &rows));
        for (name, seq) in job.functionals.iter().zip(&sequences) {
            let limit = extract_limit(seq, job.tolerance);
            let last = seq.last().expect("nonempty range");
            let item = match (limit.status, limit.value) {
                (LimitStatus::Converged, Some(v)) => Item::estimate(format!("limit[{name}]"), v, limit.cauchy),
                _ => Item::estimate(format!("limit[{name}]"), last.value, last.std_error),
            };
            self.out.results.push(item.with("status", limit.status).with("cauchy", limit.cauchy));
            if job.require_convergence {
                self.out.verdicts.push(Verdict::flag(
                    format!("limit[{name}]"),
                    json!({ "tolerance": job.tolerance, "status": limit.status }),
                    limit.status == LimitStatus::Converged,
                ));
            }
        }
        let check = check_schedule(schedule);
        self.out
            .verdicts
            .push(Verdict::flag("schedule", json!({ "reasons": check.reasons }), check.pass));
        Ok(())
    }

    fn sweep(&mut self) -> Result<(), CliError> {
        let cfg = self.cfg;
        let job = cfg.constrain_sweep.as_ref().expect("validated");
        let (f, g) = (cfg.test("constrain_sweep.f", &job.f)?, cfg.test("constrain_sweep.g", &job.g)?);
        let sc = SweepConfig {
            spec: cfg.lattice,
            quadrature: cfg.quadrature.clone(),
            solver: job.solver.clone(),
            first: job.first,
            last: job.last,
            tolerance: job.tolerance,
        };
        let table = penalty_sweep(f, g, &cfg.constraint_set(), cfg.schedule()?, &sc).context(|| "penalty sweep".into())?;
        self.out.results.push(self.quadrature_item("free_covariance".into(), table.free));
        for row in &table.rows {
            let err = self.quadrature_error(row.c_alinf).unwrap_or(0.0)
                + self.quadrature_error(row.c_kappa).unwrap_or(0.0)
                + row.solver_residual * row.c_alr.abs();
            self.out.results.push(
                Item::estimate(format!("gap n={}", row.n), row.gap, err)
                    .with("gap_volume", row.gap_volume)
                    .with("gap_penalty", row.gap_penalty)
                    .with("radius_capped", row.radius_capped),
            );
        }
        // Without a converged limit, fall back to the last gap.
        let last_gap = table.rows.last().map_or(0.0, |r| r.gap);
        let limit = table.limit.value.unwrap_or(last_gap);
        let relative = limit.abs() / table.free.abs().max(f64::MIN_POSITIVE);
        self.out.results.push(
            Item::estimate("limit_gap", limit, table.limit.cauchy)
                .with("status", table.limit.status)
                .with("relative", relative),
        );
        self.out.tables.push(Table::from_rows("sweep", &table.rows));
        self.out.verdicts.push(Verdict::flag(
            "gap-monotone",
            json!({ "first": job.first, "last": job.last }),
            table.monotone,
        ));
        self.out.verdicts.push(Verdict {
            check: "penalty-limit".into(),
            parameters: json!({ "tolerance": job.tolerance, "status": table.limit.status }),
            statistic: relative,
            threshold: job.tolerance,
            pass: table.pass,
        });
        Ok(())
    }

    fn verify_rp(&mut self) -> Result<(), CliError> {
        let cfg = self.cfg;
        let job = cfg.verify_rp.as_ref().expect("validated");
        let spec = cfg.lattice;
        let entry = cfg.schedule()?.entry(job.n).context(|| "schedule entry".into())?;
        let samples = job.samples.unwrap_or(cfg.samples);
        let fs = self.functionals("verify_rp.functionals", &job.functionals)?;
        let seed = self.prov.chain(format!("verify-rp n={}", job.n), vec![self.tag(), job.n], samples);
        let gram = rp_gram(&fs, &cfg.lagrangian, &entry, &spec, samples, seed).context(|| "reflection Gram".into())?;
        let params = json!({ "n": job.n, "samples": samples, "z": job.z, "functionals": job.functionals });
        self.out.results.push(
            Item::estimate("gram_min_eigenvalue", gram.min_eigenvalue, gram.std_error)
                .with("ess", gram.ess)
                .with("matrix", &gram.matrix)
                .with("std_errors", &gram.std_errors),
        );
        self.out.verdicts.push(Verdict::at_least(
            "reflection-positivity",
            params.clone(),
            gram.min_eigenvalue,
            -job.z * gram.std_error,
        ));
        let cosines: Option<Vec<_>> = fs
            .iter()
            .map(|f| match (&f.outer, f.inner.as_slice()) {
                (OuterFunction::Cosine { frequencies }, [g]) if frequencies == &[1.0] => Some(g.clone()),
                _ => None,
            })
            .collect();
        if let Some(tests) = cosines {
            let (free, min) = free_cosine_gram(&tests, &spec, |a, b| lattice_covariance(&spec, a, b))
                .context(|| "closed-form free Gram".into())?;
            self.out
                .results
                .push(Item::exact("free_gram_min_eigenvalue", min).with("matrix", free));
            self.out.verdicts.push(Verdict::at_least(
                "reflection-positivity-free-closed-form",
                json!({ "functionals": job.functionals }),
                min,
                -1e-12,
            ));
        }
        if job.split_check {
            let m = Mollifier::new(spec.dim, entry.lambda).context(|| "mollifier".into())?;
            let region = Region::Union {
                parts: vec![
                    HalfSpaceRegion::from_lambda(entry.lambda, Side::Plus).ball_region(spec.dim, entry.radius),
                    HalfSpaceRegion::from_lambda(entry.lambda, Side::Minus).ball_region(spec.dim, entry.radius),
                ],
            };
            let plan = ActionPlan::new(&spec, &cfg.lagrangian, &region, &m).context(|| "split action plan".into())?;
            // Same seed: the two Grams differ only through the band term.
            let split = rp_gram_with_plan(&fs, &plan, samples, seed).context(|| "split reflection Gram".into())?;
            let diff = gram
                .raw
                .iter()
                .flatten()
                .zip(split.raw.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let sup = fs.iter().map(|f| f.sup_norm()).fold(0.0, f64::max);
            self.out.results.push(
                Item::estimate("split_gram_min_eigenvalue", split.min_eigenvalue, split.std_error).with("ess", split.ess),
            );
            let diff_se = gram
                .std_errors
                .iter()
                .flatten()
                .zip(split.std_errors.iter().flatten())
                .map(|(a, b)| a.hypot(*b))
                .fold(0.0, f64::max);
            self.out.results.push(
                Item::estimate("full_minus_split_max_entry", diff, diff_se)
                    .with("scale", sup * sup * entry.ratio(spec.dim)),
            );
            self.out.verdicts.push(Verdict::at_least(
                "reflection-positivity-split",
                params,
                split.min_eigenvalue,
                -job.z * split.std_error,
            ));
        }
        Ok(())
    }

    fn verify_invariance(&mut self) -> Result<(), CliError> {
        let cfg = self.cfg;
        let job = cfg.verify_invariance.as_ref().expect("validated");
        let spec = cfg.lattice;
        let schedule = cfg.schedule()?;
        let samples = job.samples.unwrap_or(cfg.samples);
        let f = cfg.functional("verify_invariance.functional", &job.functional)?;
        let c0 = match job.c0 {
            Some(c) => c,
            None => {
                let entry = schedule.entry(job.first).context(|| "schedule entry".into())?;
                let seed = self
                    .prov
                    .chain(format!("verify-invariance calibration n={}", job.first), vec![self.tag(), 0, job.first], samples);
                let g = invariance_gap(&f, &job.transforms[0], &cfg.lagrangian, &entry, &spec, samples, seed, None)
                    .context(|| "c0 calibration".into())?;
                let c0 = calibrate_c0(&g);
                let se = if g.scale > 0.0 { g.std_error / g.scale } else { 0.0 };
                self.out
                    .results
                    .push(Item::estimate("c0", c0, se).with("calibration_n", job.first));
                c0
            }
        };
        #[derive(Serialize)]
        struct Row {
            transform: usize,
            n: u64,
            gap: f64,
            std_error: f64,
            scale: f64,
            bound: f64,
        }
        let mut rows = Vec::new();
        for (ti, t) in job.transforms.iter().enumerate() {
            for n in job.first..=job.last {
                let entry = schedule.entry(n).context(|| format!("schedule entry {n}"))?;
                let seed = self.prov.chain(
                    format!("verify-invariance t={ti} n={n}"),
                    vec![self.tag(), 1 + ti as u64, n],
                    samples,
                );
                let g = invariance_gap(&f, t, &cfg.lagrangian, &entry, &spec, samples, seed, Some(c0))
                    .context(|| format!("invariance gap t={ti} n={n}"))?;
                let bound = g.bound.expect("c0 supplied");
                self.out.results.push(
                    Item::estimate(format!("gap[t{ti}] n={n}"), g.gap, g.std_error)
                        .with("value", g.value)
                        .with("value_transformed", g.value_transformed)
                        .with("scale", g.scale)
                        .with("bound", bound),
                );
                self.out.verdicts.push(Verdict::at_most(
                    format!("invariance-bound t{ti} n={n}"),
                    json!({ "transform": t, "n": n, "c0": c0, "z": job.z }),
                    g.gap,
                    bound + job.z * g.std_error,
                ));
                rows.push(Row {
                    transform: ti,
                    n,
                    gap: g.gap,
                    std_error: g.std_error,
                    scale: g.scale,
                    bound,
                });
            }
        }
        self.out.tables.push(Table::from_rows("invariance", &rows));
        Ok(())
    }

    fn verify_markov(&mut self) -> Result<(), CliError> {
        let cfg = self.cfg;
        let job = cfg.verify_markov.as_ref().expect("validated");
        let r = markov_check(&cfg.lattice, job.width, &job.probes, job.symbol).context(|| "Markov check".into())?;
        self.out.results.push(
            Item::exact("max_conditional_covariance", r.max_conditional)
                .with("pairs", r.pairs)
                .with("band_sites", r.band_sites),
        );
        self.out
            .results
            .push(Item::exact("max_unconditional_covariance", r.max_unconditional));
        self.out.verdicts.push(Verdict::at_most(
            "markov",
            json!({ "width": job.width, "symbol": job.symbol }),
            r.max_conditional,
            job.threshold,
        ));
        Ok(())
    }

    fn schedule_check(&mut self) -> Result<(), CliError> {
        let check = check_schedule(self.cfg.schedule()?);
        if check.ratio_first.is_finite() {
            self.out.results.push(
                Item::exact("ratio_first", check.ratio_first)
                    .with("ratio_law", check.ratio_law)
                    .with("n0", check.n0),
            );
            self.out.results.push(Item::exact("ratio_last", check.ratio_last));
        }
        self.out
            .verdicts
            .push(Verdict::flag("schedule", json!({ "reasons": check.reasons }), check.pass));
        Ok(())
    }
}
