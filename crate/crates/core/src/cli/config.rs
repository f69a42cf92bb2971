use std::path::PathBuf;

use crate::catalog::{CatalogEntry, CATALOG_NAMES};
use crate::error::{Error, Result};
use crate::torus::{FiberVector, TorusPoint};

/// Fully resolved run configuration. Every key has a default; `Option`
/// fields marked `auto` are derived from the others when absent.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub entry: String,
    pub dim: usize,
    pub eps: f64,
    pub lambda: f64,
    pub a: f64,
    pub x0: Vec<f64>,
    pub u0: f64,
    pub horizon: f64,
    pub m: usize,
    pub dt: f64,
    pub v_max: Option<f64>,
    pub tol_fix: f64,
    pub max_outer: usize,
    pub method: String,
    /// Defaults to `x0 + (0.3, 0, ...)`.
    pub probe: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub multistart: usize,
    pub shoot_dt: f64,
    pub p0: Vec<f64>,
    /// Split time for the Markov check; defaults to `T / 2`.
    pub t_split: Option<f64>,
    pub stride: usize,
    pub r1: f64,
    pub r2: f64,
    pub mu: Option<f64>,
    pub short_eps: f64,
    pub short_momenta: usize,
    pub markov_m: usize,
    pub markov_dt: f64,
    pub short_time_m: usize,
    pub short_time_dt: f64,
    pub invariance_m: usize,
    pub invariance_dt: f64,
    pub timing: bool,
    pub out: PathBuf,
    /// `0` uses every core.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            entry: "discounted".into(),
            dim: 1,
            eps: 0.0,
            lambda: 0.5,
            a: 0.5,
            x0: vec![0.0],
            u0: 0.0,
            horizon: 1.0,
            m: 200,
            dt: 0.005,
            v_max: None,
            tol_fix: 1e-9,
            max_outer: 60,
            method: "picard".into(),
            probe: None,
            radius: None,
            multistart: 40,
            shoot_dt: 1e-3,
            p0: vec![0.5],
            t_split: None,
            stride: 1,
            r1: 6.0,
            r2: 10.0,
            mu: None,
            short_eps: 0.05,
            short_momenta: 9,
            markov_m: 100,
            markov_dt: 0.02,
            short_time_m: 400,
            short_time_dt: 0.01,
            invariance_m: 100,
            invariance_dt: 0.02,
            timing: true,
            out: PathBuf::from("out"),
            workers: 0,
        }
    }
}

pub const KEYS: [&str; 36] = [
    "entry", "dim", "eps", "lambda", "a", "x0", "u0", "T", "m", "dt", "v_max", "tol_fix", "max_outer", "method",
    "probe", "radius", "multistart", "shoot_dt", "p0", "t_split", "stride", "r1", "r2", "mu", "short_eps",
    "short_momenta", "markov_m", "markov_dt", "short_time_m", "short_time_dt", "invariance_m", "invariance_dt",
    "timing", "out", "workers", "coupling",
];

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{key} must be finite")));
    }
    Ok(x)
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: '{v}' is not a non-negative integer")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s)).collect()
}

fn auto<T>(v: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if v.trim() == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or("auto".into(), |x| x.to_string())
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "entry" => self.entry = v.to_string(),
            "dim" => self.dim = count(key, v)?,
            "eps" => self.eps = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "a" => self.a = num(key, v)?,
            // the entry's own coupling constant
            "coupling" => {
                let c = num(key, v)?;
                self.lambda = c;
                self.a = c;
            }
            "x0" => self.x0 = list(key, v)?,
            "u0" => self.u0 = num(key, v)?,
            "T" => self.horizon = num(key, v)?,
            "m" => self.m = count(key, v)?,
            "dt" => self.dt = num(key, v)?,
            "v_max" => self.v_max = auto(v, |s| num(key, s))?,
            "tol_fix" => self.tol_fix = num(key, v)?,
            "max_outer" => self.max_outer = count(key, v)?,
            "method" => self.method = v.to_string(),
            "probe" => self.probe = auto(v, |s| list(key, s))?,
            "radius" => self.radius = auto(v, |s| num(key, s))?,
            "multistart" => self.multistart = count(key, v)?,
            "shoot_dt" => self.shoot_dt = num(key, v)?,
            "p0" => self.p0 = list(key, v)?,
            "t_split" => self.t_split = auto(v, |s| num(key, s))?,
            "stride" => self.stride = count(key, v)?,
            "r1" => self.r1 = num(key, v)?,
            "r2" => self.r2 = num(key, v)?,
            "mu" => self.mu = auto(v, |s| num(key, s))?,
            "short_eps" => self.short_eps = num(key, v)?,
            "short_momenta" => self.short_momenta = count(key, v)?,
            "markov_m" => self.markov_m = count(key, v)?,
            "markov_dt" => self.markov_dt = num(key, v)?,
            "short_time_m" => self.short_time_m = count(key, v)?,
            "short_time_dt" => self.short_time_dt = num(key, v)?,
            "invariance_m" => self.invariance_m = count(key, v)?,
            "invariance_dt" => self.invariance_dt = num(key, v)?,
            "timing" => {
                self.timing = match v {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(Error::Config(format!("timing: '{v}' is not a boolean"))),
                }
            }
            "out" => self.out = PathBuf::from(v),
            "workers" => self.workers = count(key, v)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key '{other}' (valid keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Constraint checks; errors name the violated constraint.
    pub fn validate(&self) -> Result<()> {
        self.catalog_entry()?;
        if self.x0.len() != self.dim {
            return Err(Error::Config(format!("x0 has {} coordinates, dim = {}", self.x0.len(), self.dim)));
        }
        if let Some(p) = &self.probe {
            if p.len() != self.dim {
                return Err(Error::Config(format!("probe has {} coordinates, dim = {}", p.len(), self.dim)));
            }
        }
        if self.p0.len() != self.dim {
            return Err(Error::Config(format!("p0 has {} coordinates, dim = {}", self.p0.len(), self.dim)));
        }
        let positive = [
            ("T", self.horizon),
            ("dt", self.dt),
            ("tol_fix", self.tol_fix),
            ("shoot_dt", self.shoot_dt),
            ("r1", self.r1),
            ("r2", self.r2),
            ("short_eps", self.short_eps),
            ("markov_dt", self.markov_dt),
            ("short_time_dt", self.short_time_dt),
            ("invariance_dt", self.invariance_dt),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        for (k, v) in [("v_max", self.v_max), ("radius", self.radius), ("mu", self.mu)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::Config(format!("{k} must be positive, got {v}")));
                }
            }
        }
        for (k, v) in [
            ("m", self.m),
            ("max_outer", self.max_outer),
            ("multistart", self.multistart),
            ("stride", self.stride),
            ("short_momenta", self.short_momenta),
            ("markov_m", self.markov_m),
            ("short_time_m", self.short_time_m),
            ("invariance_m", self.invariance_m),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{k} must be at least 1")));
            }
        }
        divides("dt", self.dt, "T", self.horizon)?;
        if let Some(t) = self.t_split {
            if !(t > 0.0 && t < self.horizon) {
                return Err(Error::Config(format!("t_split must lie in (0, T), got {t}")));
            }
            divides("dt", self.dt, "t_split", t)?;
        }
        if !matches!(self.method.as_str(), "picard" | "semigroup") {
            return Err(Error::Config(format!("method must be picard or semigroup, got '{}'", self.method)));
        }
        Ok(())
    }

    pub fn catalog_entry(&self) -> Result<CatalogEntry> {
        if !CATALOG_NAMES.contains(&self.entry.as_str()) {
            return Err(Error::Config(format!(
                "unknown entry '{}', valid entries: {}",
                self.entry,
                CATALOG_NAMES.join(", ")
            )));
        }
        let coupling = if self.entry == "nonlinear_u" { self.a } else { self.lambda };
        CatalogEntry::by_name(&self.entry, self.dim, self.eps, coupling).map_err(|e| match e {
            Error::InvalidInput(s) => Error::Config(s),
            other => other,
        })
    }

    pub fn x0_point(&self) -> Result<TorusPoint> {
        TorusPoint::wrap(&self.x0)
    }

    pub fn probe_point(&self) -> Result<TorusPoint> {
        match &self.probe {
            Some(p) => TorusPoint::wrap(p),
            None => Ok(self.x0_point()?.translate(&FiberVector::axis(self.dim, 0.3))),
        }
    }

    pub fn t_split(&self) -> f64 {
        self.t_split.unwrap_or(0.5 * self.horizon)
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let probe = self.probe_point().map(|p| fmt_list(p.coords())).unwrap_or_default();
        let v = vec![
            ("entry", self.entry.clone()),
            ("dim", self.dim.to_string()),
            ("eps", self.eps.to_string()),
            ("lambda", self.lambda.to_string()),
            ("a", self.a.to_string()),
            ("x0", fmt_list(&self.x0)),
            ("u0", self.u0.to_string()),
            ("T", self.horizon.to_string()),
            ("m", self.m.to_string()),
            ("dt", self.dt.to_string()),
            ("v_max", fmt_opt(&self.v_max)),
            ("tol_fix", self.tol_fix.to_string()),
            ("max_outer", self.max_outer.to_string()),
            ("method", self.method.clone()),
            ("probe", probe),
            ("radius", fmt_opt(&self.radius)),
            ("multistart", self.multistart.to_string()),
            ("shoot_dt", self.shoot_dt.to_string()),
            ("p0", fmt_list(&self.p0)),
            ("t_split", self.t_split().to_string()),
            ("stride", self.stride.to_string()),
            ("r1", self.r1.to_string()),
            ("r2", self.r2.to_string()),
            ("mu", fmt_opt(&self.mu)),
            ("short_eps", self.short_eps.to_string()),
            ("short_momenta", self.short_momenta.to_string()),
            ("markov_m", self.markov_m.to_string()),
            ("markov_dt", self.markov_dt.to_string()),
            ("short_time_m", self.short_time_m.to_string()),
            ("short_time_dt", self.short_time_dt.to_string()),
            ("invariance_m", self.invariance_m.to_string()),
            ("invariance_dt", self.invariance_dt.to_string()),
            ("timing", self.timing.to_string()),
            ("out", self.out.display().to_string()),
            ("workers", self.workers.to_string()),
        ];
        v.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Text that [`RunConfig::apply_text`] turns back into this config.
    /// `workers` and `out` are left out: they never change results.
    pub fn to_text(&self) -> String {
        self.pairs()
            .into_iter()
            .filter(|(k, _)| k != "workers" && k != "out")
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

fn divides(a_name: &str, a: f64, b_name: &str, b: f64) -> Result<()> {
    let k = (b / a).round();
    if k < 1.0 || (k * a - b).abs() > 1e-12 * b.abs().max(1.0) {
        return Err(Error::Config(format!("{a_name} = {a} does not divide {b_name} = {b}")));
    }
    Ok(())
}

/// Config file (if any) then `--key value` / `--key=value` flags, later
/// settings winning. Returns the config and the positional arguments.
pub fn parse_config(args: &[String]) -> Result<(RunConfig, Vec<String>)> {
    let mut cfg = RunConfig::default();
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut positional = Vec::new();
    let mut file: Option<PathBuf> = None;
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        if let Some(flag) = arg.strip_prefix("--") {
            let (k, v) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    i += 1;
                    let v = args
                        .get(i)
                        .ok_or_else(|| Error::Config(format!("flag --{flag} needs a value")))?;
                    (flag.to_string(), v.clone())
                }
            };
            if k == "config" {
                file = Some(PathBuf::from(v));
            } else {
                flags.push((k, v));
            }
        } else {
            positional.push(arg.clone());
        }
        i += 1;
    }
    if let Some(path) = file {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for (k, v) in &flags {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok((cfg, positional))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_fills_defaults() {
        let mut c = RunConfig::default();
        c.apply_text("entry=discounted\nlambda=0.5  # discount\nT=1\n").unwrap();
        c.validate().unwrap();
        assert_eq!((c.m, c.dt), (200, 0.005));
        assert_eq!(c.probe_point().unwrap().coords(), &[0.3]);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::default();
        let e = c.set("colour", "red").unwrap_err().to_string();
        assert!(e.contains("unknown key 'colour'"));
        c.set("dt", "0.3").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("does not divide"));
        let mut c = RunConfig::default();
        c.set("entry", "harmonic").unwrap();
        let e = c.validate().unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("classical, discounted, nonlinear_u"));
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.set("entry", "nonlinear_u").unwrap();
        c.set("mu", "0.001").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        // probe and t_split come back resolved
        back.probe = None;
        back.t_split = None;
        assert_eq!(back, c);
    }

    #[test]
    fn flags_override_file_order() {
        let args: Vec<String> = ["solve", "--m", "50", "--dt=0.01", "--entry", "classical"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (c, pos) = parse_config(&args).unwrap();
        assert_eq!(pos, vec!["solve"]);
        assert_eq!((c.m, c.dt, c.entry.as_str()), (50, 0.01, "classical"));
    }
}
