//! Command-line runner: config resolution, dispatch and file emission.
//!
//! Every command writes `<name>.csv` plus `<name>.meta` into the output
//! directory. The sidecar is itself a valid config file (derived values
//! follow as comments), so `--config <name>.meta` reproduces the run.

mod config;

pub use config::{parse_config, RunConfig, KEYS};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::action::{backtrack_calibrated, markov_defect, ActionField, DpConfig, Method, Solver, INTERPOLATION};
use crate::catalog::{CatalogEntry, ContactHamiltonian};
use crate::error::{Error, Result};
use crate::flow::{integrate, min_over_solutions, shoot, ContactState, ShootOptions};
use crate::harness::{self, write_report_csv, write_report_text, HarnessConfig};
use crate::modification::{check_invariance, InvarianceSetup};
use crate::torus::FiberVector;

pub const COMMANDS: [&str; 7] = [
    "solve",
    "shoot",
    "markov",
    "invariance",
    "shorttime",
    "verify-all",
    "export-trajectory",
];

pub const USAGE: &str = "usage: contact-action <command> [--config FILE] [--key value ...]
commands: solve, shoot, markov, invariance, shorttime, verify-all, export-trajectory
keys mirror the config file (entry, lambda, T, m, dt, out, workers, ...);
CONTACT_ACTION_OUT overrides the output directory";

/// What a command produced: its summary line and whether its checks held.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub checks_passed: bool,
}

impl Outcome {
    /// `0`, or `4` when a check failed.
    pub fn exit_code(&self) -> i32 {
        if self.checks_passed {
            0
        } else {
            4
        }
    }
}

/// Parse `args` (without the program name), honour `env_out` as the output
/// directory override and run the command.
pub fn run(args: &[String], env_out: Option<&str>) -> Result<Outcome> {
    let (mut cfg, positional) = parse_config(args)?;
    if let Some(dir) = env_out.filter(|d| !d.is_empty()) {
        cfg.out = PathBuf::from(dir);
    }
    let command = match positional.as_slice() {
        [c] => c.as_str(),
        [] => return Err(Error::Config(format!("missing command\n{USAGE}"))),
        more => return Err(Error::Config(format!("expected one command, got {more:?}"))),
    };
    if !COMMANDS.contains(&command) {
        return Err(Error::Config(format!("unknown command '{command}'\n{USAGE}")));
    }
    let workers = cfg.workers;
    crate::par::with_workers(workers, || dispatch(command, &cfg))
}

fn dispatch(command: &str, cfg: &RunConfig) -> Result<Outcome> {
    fs::create_dir_all(&cfg.out)?;
    match command {
        "solve" => solve(cfg),
        "shoot" => shoot_cmd(cfg),
        "markov" => markov(cfg),
        "invariance" => invariance(cfg),
        "shorttime" => shorttime(cfg),
        "verify-all" => verify_all(cfg),
        "export-trajectory" => export_trajectory(cfg),
        _ => unreachable!("checked by run"),
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<PathBuf> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(path, buf)?;
    Ok(path.to_path_buf())
}

/// The resolved config followed by derived values as comments.
fn write_sidecar(cfg: &RunConfig, name: &str, command: &str, derived: &[(&str, String)]) -> Result<PathBuf> {
    write_file(&cfg.out.join(format!("{name}.meta")), |w| {
        writeln!(w, "# contact-action {command}")?;
        w.write_all(cfg.to_text().as_bytes())?;
        for (k, v) in derived {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    })
}

fn dp_config(cfg: &RunConfig, entry: &CatalogEntry, m: usize, dt: f64) -> DpConfig {
    let dp = DpConfig::new(cfg.dim, m, dt, entry.lambda(), cfg.horizon);
    match cfg.v_max {
        Some(v) => dp.with_v_max(v),
        None => dp,
    }
}

fn method(cfg: &RunConfig) -> Method {
    match cfg.method.as_str() {
        "semigroup" => Method::Semigroup,
        _ => Method::Picard {
            tol_fix: cfg.tol_fix,
            max_outer: cfg.max_outer,
        },
    }
}

fn field_derived(f: &ActionField) -> Vec<(&'static str, String)> {
    vec![
        ("v_max_used", f.v_max.to_string()),
        ("substeps", f.substeps.to_string()),
        ("scheme", f.scheme.as_str().to_string()),
        ("interpolation", INTERPOLATION.to_string()),
    ]
}

fn shoot_options(cfg: &RunConfig) -> ShootOptions {
    ShootOptions {
        radius: cfg.radius,
        multistart: cfg.multistart,
        dt: cfg.shoot_dt,
        ..ShootOptions::default()
    }
}

fn solve(cfg: &RunConfig) -> Result<Outcome> {
    let entry = cfg.catalog_entry()?;
    let l = entry.lagrangian();
    let solver = Solver {
        l: &l,
        cfg: dp_config(cfg, &entry, cfg.m, cfg.dt),
        method: method(cfg),
    };
    let x0 = cfg.x0_point()?;
    let field = solver.solve(&x0, cfg.u0, cfg.horizon)?;
    let probe = cfg.probe_point()?;
    let value = field.sample_layer(field.layer_count(), &probe);
    let csv = write_file(&cfg.out.join("field.csv"), |w| field.write_csv(w))?;
    let curve = backtrack_calibrated(&field, &l, &probe, cfg.horizon)?;
    let ccsv = write_file(&cfg.out.join("curve.csv"), |w| curve.write_csv(w))?;
    let mut derived = field_derived(&field);
    derived.push(("h_probe", value.to_string()));
    let meta = write_sidecar(cfg, "field", "solve", &derived)?;
    Ok(Outcome {
        summary: format!("h({:?}, {}) = {value:.10}", probe.coords(), cfg.horizon),
        files: vec![csv, ccsv, meta],
        checks_passed: true,
    })
}

fn shoot_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let entry = cfg.catalog_entry()?;
    let x0 = cfg.x0_point()?;
    let probe = cfg.probe_point()?;
    let opts = shoot_options(cfg);
    let branches = shoot(&entry, &x0, cfg.u0, &probe, cfg.horizon, &opts)?;
    let (u_min, best) = min_over_solutions(&branches)?;
    let dim = cfg.dim;
    let csv = write_file(&cfg.out.join("branches.csv"), |w| {
        let mut header: Vec<String> = (1..=dim).map(|i| format!("p0_{i}")).collect();
        header.extend(["u_T".into(), "residual".into(), "converged".into()]);
        writeln!(w, "{}", header.join(","))?;
        for b in &branches {
            let mut row: Vec<String> = b.p0.as_slice().iter().map(f64::to_string).collect();
            row.push(b.terminal.u.to_string());
            row.push(b.residual.to_string());
            row.push(b.converged.to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;
    let meta = write_sidecar(
        cfg,
        "branches",
        "shoot",
        &[
            ("branches", branches.len().to_string()),
            ("u_min", u_min.to_string()),
            ("p0_min", format!("{:?}", best.p0.as_slice())),
        ],
    )?;
    Ok(Outcome {
        summary: format!(
            "min U({}) = {u_min:.10} over {} branches (p0 = {:?})",
            cfg.horizon,
            branches.len(),
            best.p0.as_slice()
        ),
        files: vec![csv, meta],
        checks_passed: true,
    })
}

fn markov(cfg: &RunConfig) -> Result<Outcome> {
    let entry = cfg.catalog_entry()?;
    let l = entry.lagrangian();
    let solver = Solver {
        l: &l,
        cfg: dp_config(cfg, &entry, cfg.m, cfg.dt),
        // one solve per base node; Picard would repeat its passes for each
        method: Method::Semigroup,
    };
    let field = solver.solve(&cfg.x0_point()?, cfg.u0, cfg.horizon)?;
    let t = cfg.t_split();
    let defect = markov_defect(&solver, &field, t, cfg.stride)?;
    let threshold = 1.0 / cfg.m as f64;
    let pass = defect <= threshold;
    let csv = write_file(&cfg.out.join("markov.csv"), |w| {
        writeln!(w, "t,s,defect,threshold,pass")?;
        writeln!(w, "{t},{},{defect:e},{threshold:e},{pass}", cfg.horizon - t)
    })?;
    let meta = write_sidecar(
        cfg,
        "markov",
        "markov",
        &[("method_used", "semigroup".into()), ("defect", defect.to_string())],
    )?;
    Ok(Outcome {
        summary: format!("max Markov defect {defect:.3e} (threshold {threshold:.1e}) at t = {t}"),
        files: vec![csv, meta],
        checks_passed: pass,
    })
}

fn invariance(cfg: &RunConfig) -> Result<Outcome> {
    let entry = cfg.catalog_entry()?;
    let dp = dp_config(cfg, &entry, cfg.invariance_m, cfg.invariance_dt);
    let mut setup = InvarianceSetup::new(cfg.x0_point()?, cfg.horizon, dp);
    setup.u0 = cfg.u0;
    setup.tol_fix = cfg.tol_fix;
    setup.max_outer = cfg.max_outer;
    setup.mu_override = cfg.mu;
    let o = check_invariance(&entry.lagrangian(), cfg.r1, cfg.r2, &setup)?;
    let threshold = 2.0 * cfg.tol_fix;
    let pass = o.diff <= threshold;
    let csv = write_file(&cfg.out.join("invariance.csv"), |w| {
        writeln!(w, "r1,r2,mu1,mu2,r0,diff,early_diff,threshold,pass")?;
        writeln!(
            w,
            "{},{},{:e},{:e},{},{:e},{:e},{threshold:e},{pass}",
            cfg.r1, cfg.r2, o.mu[0], o.mu[1], o.r0, o.diff, o.early_diff
        )
    })?;
    let meta = write_sidecar(cfg, "invariance", "invariance", &[("r0", o.r0.to_string())])?;
    Ok(Outcome {
        summary: format!(
            "|h_R1 - h_R2| = {:.3e} (threshold {threshold:.1e}), R0 = {:.4}",
            o.diff, o.r0
        ),
        files: vec![csv, meta],
        checks_passed: pass,
    })
}

fn shorttime(cfg: &RunConfig) -> Result<Outcome> {
    let entry = cfg.catalog_entry()?;
    let eps = cfg.short_eps;
    let dp = DpConfig::new(cfg.dim, cfg.short_time_m, cfg.short_time_dt, entry.lambda(), eps);
    let dp = match cfg.v_max {
        Some(v) => dp.with_v_max(v),
        None => dp,
    };
    let mut hc = HarnessConfig::new(cfg.dim)?;
    hc.short_time_momenta = cfg.short_momenta;
    let momenta = hc.momenta();
    let x0 = cfg.x0_point()?;
    let l = entry.lagrangian();
    let (field, _) =
        crate::action::picard_iterate(&l, &x0, cfg.u0, eps, &dp, cfg.tol_fix, cfg.max_outer)?;
    let k = field.layer_count();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for p0 in &momenta {
        let end = integrate(&entry, &ContactState::new(x0, cfg.u0, *p0, 0.0)?, eps, 1e-4)?;
        let s = end.last();
        let h = field.sample_layer(k, &s.x);
        worst = worst.max((s.u - h).abs());
        rows.push((*p0, s.x, s.u, h));
    }
    let threshold = 5e-3;
    let pass = worst <= threshold;
    let dim = cfg.dim;
    let csv = write_file(&cfg.out.join("shorttime.csv"), |w| {
        let mut header: Vec<String> = (1..=dim).map(|i| format!("p0_{i}")).collect();
        header.extend((1..=dim).map(|i| format!("x_{i}")));
        header.extend(["u".into(), "h".into(), "gap".into()]);
        writeln!(w, "{}", header.join(","))?;
        for (p0, x, u, h) in &rows {
            let mut row: Vec<String> = p0.as_slice().iter().map(f64::to_string).collect();
            row.extend(x.coords().iter().map(f64::to_string));
            row.extend([u.to_string(), h.to_string(), (u - h).abs().to_string()]);
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;
    let meta = write_sidecar(cfg, "shorttime", "shorttime", &field_derived(&field))?;
    Ok(Outcome {
        summary: format!("max |U(eps) - h(X(eps), eps)| = {worst:.3e} at eps = {eps} over {} momenta", rows.len()),
        files: vec![csv, meta],
        checks_passed: pass,
    })
}

/// Harness settings taken from the run config.
pub fn harness_config(cfg: &RunConfig) -> Result<HarnessConfig> {
    let mut hc = HarnessConfig::new(cfg.dim)?;
    hc.x0 = cfg.x0_point()?;
    hc.u0 = cfg.u0;
    hc.horizon = cfg.horizon;
    hc.m = cfg.m;
    hc.dt = cfg.dt;
    hc.v_max = cfg.v_max;
    hc.tol_fix = cfg.tol_fix;
    hc.max_outer = cfg.max_outer;
    hc.eps = cfg.eps;
    hc.lambda = cfg.lambda;
    hc.a = cfg.a;
    hc.shoot = shoot_options(cfg);
    hc.markov_m = cfg.markov_m;
    hc.markov_dt = cfg.markov_dt;
    hc.markov_stride = cfg.stride;
    hc.short_time_m = cfg.short_time_m;
    hc.short_time_dt = cfg.short_time_dt;
    hc.short_time_eps = vec![cfg.short_eps];
    hc.short_time_momenta = cfg.short_momenta;
    hc.invariance_m = cfg.invariance_m;
    hc.invariance_dt = cfg.invariance_dt;
    hc.invariance_r = (cfg.r1, cfg.r2);
    hc.invariance_mu = cfg.mu;
    hc.timing = cfg.timing;
    Ok(hc)
}

fn verify_all(cfg: &RunConfig) -> Result<Outcome> {
    let hc = harness_config(cfg)?;
    let reports = harness::run_all(&hc)?;
    let csv = write_file(&cfg.out.join("report.csv"), |w| write_report_csv(&reports, w, hc.timing))?;
    let txt = write_file(&cfg.out.join("report.txt"), |w| write_report_text(&reports, w))?;
    let passed = reports.iter().filter(|r| r.pass).count();
    let meta = write_sidecar(cfg, "report", "verify-all", &[("checks", reports.len().to_string())])?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    let mut summary = format!("{passed}/{} checks passed", reports.len());
    if !failed.is_empty() {
        summary.push_str(&format!("; failed: {}", failed.join(", ")));
    }
    Ok(Outcome {
        summary,
        files: vec![csv, txt, meta],
        checks_passed: failed.is_empty(),
    })
}

fn export_trajectory(cfg: &RunConfig) -> Result<Outcome> {
    let entry = cfg.catalog_entry()?;
    let p0 = FiberVector::new(&cfg.p0)?;
    let s0 = ContactState::new(cfg.x0_point()?, cfg.u0, p0, 0.0)?;
    let tr = integrate(&entry, &s0, cfg.horizon, cfg.shoot_dt)?;
    let csv = write_file(&cfg.out.join("trajectory.csv"), |w| tr.write_csv(w))?;
    let end = tr.last();
    let h_end = entry.value(&end.x, end.u, &end.p);
    let meta = write_sidecar(
        cfg,
        "trajectory",
        "export-trajectory",
        &[("steps", (tr.len() - 1).to_string()), ("step", tr.dt.to_string())],
    )?;
    Ok(Outcome {
        summary: format!(
            "trajectory of {} states to t = {}: x = {:?}, u = {:.10}, H = {h_end:.10}",
            tr.len(),
            end.t,
            end.x.coords(),
            end.u
        ),
        files: vec![csv, meta],
        checks_passed: true,
    })
}
