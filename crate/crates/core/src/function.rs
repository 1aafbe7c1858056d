//! Scalar test functions: a small built-in catalog plus tabulated input.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Anything that can be sampled at a point. Closures `Fn(f64) -> f64` work
/// directly; [`FunctionSpec`] adds domain checking.
pub trait RealFunction {
    fn eval(&self, t: f64) -> Result<f64>;

    /// Closed interval on which `eval` is defined, if restricted.
    fn domain(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<F> RealFunction for F
where
    F: Fn(f64) -> f64,
{
    #[inline]
    fn eval(&self, t: f64) -> Result<f64> {
        Ok(self(t))
    }
}

/// Upper end of the domain shared by all catalog functions.
pub const CATALOG_DOMAIN_END: f64 = 2.0;

/// Piecewise-linear interpolant through strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    name: String,
    ts: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(name: impl Into<String>, ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ts.len() != values.len() {
            return Err(Error::Table(format!(
                "{} abscissae but {} values",
                ts.len(),
                values.len()
            )));
        }
        if ts.len() < 2 {
            return Err(Error::Table("need at least two rows".into()));
        }
        if let Some(bad) = ts.iter().chain(&values).find(|v| !v.is_finite()) {
            return Err(Error::Table(format!("non-finite entry {bad}")));
        }
        if let Some(w) = ts.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Table(format!(
                "abscissae must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self {
            name: name.into(),
            ts,
            values,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.ts[0], self.ts[self.ts.len() - 1])
    }

    fn eval(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::FunctionDomain {
                name: self.name.clone(),
                t,
                lo,
                hi,
            });
        }
        // first index with ts[i] > t, clamped so that [i-1, i] is a valid segment
        let i = self
            .ts
            .partition_point(|&s| s <= t)
            .clamp(1, self.ts.len() - 1);
        let (t0, t1) = (self.ts[i - 1], self.ts[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let s = (t - t0) / (t1 - t0);
        Ok(v0 + s * (v1 - v0))
    }
}

/// A named, evaluable function on a closed interval containing `[0, 1/p]`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    /// `f(t) = 1`
    One,
    /// `f(t) = t`
    T,
    /// `f(t) = t^2`
    TSq,
    /// `f(t) = 1 + sin(7t)`
    Sin7,
    /// `f(t) = |t - 1/2|`
    AbsHalf,
    Tabulated(Table),
}

impl FunctionSpec {
    pub const CATALOG: [FunctionSpec; 5] = [
        FunctionSpec::One,
        FunctionSpec::T,
        FunctionSpec::TSq,
        FunctionSpec::Sin7,
        FunctionSpec::AbsHalf,
    ];

    pub fn tabulated(name: impl Into<String>, ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Table::new(name, ts, values).map(FunctionSpec::Tabulated)
    }

    /// Reads a two-column CSV `(t, f(t))`. A header row is allowed and is
    /// detected by its first field not parsing as a number.
    pub fn from_csv_reader<R: Read>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let (mut ts, mut values) = (Vec::new(), Vec::new());
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Table(e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::Table(format!(
                    "row {} has {} fields, expected 2",
                    line + 1,
                    record.len()
                )));
            }
            let t = record[0].parse::<f64>();
            let v = record[1].parse::<f64>();
            match (t, v) {
                (Ok(t), Ok(v)) => {
                    ts.push(t);
                    values.push(v);
                }
                (Err(_), _) if line == 0 => continue,
                _ => {
                    return Err(Error::Table(format!(
                        "row {}: cannot parse `{}`,`{}` as numbers",
                        line + 1,
                        &record[0],
                        &record[1]
                    )))
                }
            }
        }
        Self::tabulated(name, ts, values)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "tabulated".into());
        Self::from_csv_reader(name, file)
    }

    pub fn name(&self) -> &str {
        match self {
            FunctionSpec::One => "one",
            FunctionSpec::T => "t",
            FunctionSpec::TSq => "t_sq",
            FunctionSpec::Sin7 => "sin7",
            FunctionSpec::AbsHalf => "abs_half",
            FunctionSpec::Tabulated(t) => &t.name,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            FunctionSpec::Tabulated(t) => t.domain(),
            _ => (0.0, CATALOG_DOMAIN_END),
        }
    }

    /// Fails unless `[lo, hi]` lies inside the domain.
    pub fn require_domain(&self, lo: f64, hi: f64) -> Result<()> {
        let (a, b) = self.domain();
        for t in [lo, hi] {
            if !(t >= a && t <= b) {
                return Err(Error::FunctionDomain {
                    name: self.name().to_string(),
                    t,
                    lo: a,
                    hi: b,
                });
            }
        }
        Ok(())
    }
}

impl RealFunction for FunctionSpec {
    fn domain(&self) -> Option<(f64, f64)> {
        Some(FunctionSpec::domain(self))
    }

    fn eval(&self, t: f64) -> Result<f64> {
        if let FunctionSpec::Tabulated(table) = self {
            return table.eval(t);
        }
        if !(0.0..=CATALOG_DOMAIN_END).contains(&t) {
            return Err(Error::FunctionDomain {
                name: self.name().to_string(),
                t,
                lo: 0.0,
                hi: CATALOG_DOMAIN_END,
            });
        }
        Ok(match self {
            FunctionSpec::One => 1.0,
            FunctionSpec::T => t,
            FunctionSpec::TSq => t * t,
            FunctionSpec::Sin7 => 1.0 + (7.0 * t).sin(),
            FunctionSpec::AbsHalf => (t - 0.5).abs(),
            FunctionSpec::Tabulated(_) => unreachable!(),
        })
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    /// Parses a catalog identifier.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(FunctionSpec::One),
            "t" => Ok(FunctionSpec::T),
            "t_sq" => Ok(FunctionSpec::TSq),
            "sin7" => Ok(FunctionSpec::Sin7),
            "abs_half" => Ok(FunctionSpec::AbsHalf),
            other => Err(Error::InvalidParams(format!(
                "unknown function `{other}` (expected one of one, t, t_sq, sin7, abs_half)"
            ))),
        }
    }
}
