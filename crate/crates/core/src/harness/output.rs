//! CSV formatting and trial statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

/// `x` with 12 significant digits, printed like C's `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes a CSV whose cells are already formatted.
pub fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes a CSV with the given header; every value goes through [`fmt_g12`].
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    write_rows(path, header, rows.into_iter().map(|r| r.iter().map(|v| fmt_g12(*v)).collect()))
}

/// `t,cum_regret` for `t = 1..=T`.
pub fn write_regret_trace(path: &Path, cum_regret: &[f64]) -> Result<()> {
    write_csv(
        path,
        &["t", "cum_regret"],
        cum_regret.iter().enumerate().map(|(i, r)| vec![(i + 1) as f64, *r]),
    )
}

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation over `√n`; zero for a single value.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// `(mean, stderr)` by the two-pass formula.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

/// Per-round mean and stderr across equally long traces.
pub fn aggregate(traces: &[&[f64]]) -> Vec<(f64, f64)> {
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let mut column = Vec::with_capacity(traces.len());
    (0..len)
        .map(|i| {
            column.clear();
            column.extend(traces.iter().map(|t| t[i]));
            mean_stderr(&column)
        })
        .collect()
}

pub fn write_aggregate(path: &Path, agg: &[(f64, f64)]) -> Result<()> {
    write_csv(
        path,
        &["t", "mean", "stderr"],
        agg.iter().enumerate().map(|(i, (m, s))| vec![(i + 1) as f64, *m, *s]),
    )
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    let _ = writeln!(s);
    fs::write(path, s)?;
    Ok(())
}
