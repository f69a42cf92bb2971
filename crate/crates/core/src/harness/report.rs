use std::io::Write;

use crate::error::Error;

/// `a dx + b dt + c tol_fix`: the error budget a check grants a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Tolerance {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn eval(&self, dx: f64, dt: f64, tol_fix: f64) -> f64 {
        self.a * dx + self.b * dt + self.c * tol_fix
    }

    pub fn describe(&self) -> String {
        format!("{} dx + {} dt + {} tol_fix", self.a, self.b, self.c)
    }
}

/// One line of the verification report. `pass` is `measured <= threshold`
/// unless the check was inconclusive, which is reported but not failed.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub inputs: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seconds: f64,
    pub note: String,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, inputs: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            inputs: inputs.into(),
            measured,
            threshold,
            pass: measured <= threshold,
            seconds: 0.0,
            note: String::new(),
        }
    }

    /// The check could not produce a number.
    pub fn errored(name: impl Into<String>, inputs: impl Into<String>, threshold: f64, err: &Error) -> Self {
        let mut r = Self::new(name, inputs, f64::INFINITY, threshold);
        r.note = err.to_string();
        r
    }

    pub fn inconclusive(name: impl Into<String>, inputs: impl Into<String>, threshold: f64, why: &str) -> Self {
        let mut r = Self::new(name, inputs, f64::NAN, threshold);
        r.pass = true;
        r.note = format!("inconclusive: {why}");
        r
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn is_inconclusive(&self) -> bool {
        self.note.starts_with("inconclusive")
    }
}

/// `check,measured,threshold,pass,seconds`. With `timing` off the seconds
/// column is zero, so repeated runs are byte-identical.
pub fn write_report_csv<W: Write>(reports: &[CheckReport], mut w: W, timing: bool) -> std::io::Result<()> {
    writeln!(w, "check,measured,threshold,pass,seconds")?;
    for r in reports {
        writeln!(
            w,
            "{},{:.6e},{:.6e},{},{:.3}",
            r.name,
            r.measured,
            r.threshold,
            r.pass,
            if timing { r.seconds } else { 0.0 }
        )?;
    }
    Ok(())
}

/// Human-readable report without timings.
pub fn write_report_text<W: Write>(reports: &[CheckReport], mut w: W) -> std::io::Result<()> {
    let failed = reports.iter().filter(|r| !r.pass).count();
    writeln!(w, "{} checks, {} failed", reports.len(), failed)?;
    for r in reports {
        let verdict = match (r.pass, r.is_inconclusive()) {
            (true, true) => "n/a",
            (true, false) => "pass",
            (false, _) => "FAIL",
        };
        writeln!(
            w,
            "{:<44} {:>12.4e} <= {:<12.4e} {}",
            r.name, r.measured, r.threshold, verdict
        )?;
        writeln!(w, "    {}", r.inputs)?;
        if !r.note.is_empty() {
            writeln!(w, "    {}", r.note)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_threshold() {
        assert!(CheckReport::new("a", "", 1.0, 1.0).pass);
        assert!(!CheckReport::new("a", "", 1.1, 1.0).pass);
        assert!(!CheckReport::new("a", "", f64::NAN, 1.0).pass);
        assert!(CheckReport::inconclusive("a", "", 1.0, "short trace").pass);
    }

    #[test]
    fn csv_without_timing_is_stable() {
        let mut r = CheckReport::new("x.y", "m=10", 2.5e-3, 1e-2);
        r.seconds = 1.234;
        let mut a = Vec::new();
        write_report_csv(&[r.clone()], &mut a, false).unwrap();
        assert_eq!(
            String::from_utf8(a).unwrap(),
            "check,measured,threshold,pass,seconds\nx.y,2.500000e-3,1.000000e-2,true,0.000\n"
        );
        let mut b = Vec::new();
        write_report_csv(&[r], &mut b, true).unwrap();
        assert!(String::from_utf8(b).unwrap().ends_with("true,1.234\n"));
    }
}
