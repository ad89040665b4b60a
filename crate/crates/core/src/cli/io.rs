//! Vector files and CSV reports.
//!
//! A vector file is one metadata line followed by a two-column CSV:
//!
//! ```text
//! # n=2 repr=chaos
//! index,value
//! 0,1
//! 1,0.5
//! 2,0
//! 3,-0.25
//! ```
//!
//! Values use the shortest decimal form that reads back to the same `f64`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::chaos::{ChaosVector, PointwiseVector};
use crate::measure::{SiteParams, MAX_SITES};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Chaos,
    Pointwise,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Chaos => "chaos",
            Self::Pointwise => "pointwise",
        })
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chaos" => Ok(Self::Chaos),
            "pointwise" => Ok(Self::Pointwise),
            other => Err(Error::VectorFormat(format!("unknown representation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile {
    pub n: usize,
    pub repr: Representation,
    pub values: Vec<f64>,
}

impl VectorFile {
    pub fn from_chaos(x: &ChaosVector) -> Self {
        Self {
            n: x.n(),
            repr: Representation::Chaos,
            values: x.coeffs().to_vec(),
        }
    }

    pub fn from_pointwise(v: &PointwiseVector) -> Self {
        Self {
            n: v.n(),
            repr: Representation::Pointwise,
            values: v.values().to_vec(),
        }
    }

    /// The stored functional in the chaos basis, transforming if needed.
    pub fn into_chaos(self, params: Arc<SiteParams>) -> Result<ChaosVector> {
        self.check_sites(&params)?;
        match self.repr {
            Representation::Chaos => ChaosVector::new(params, self.values),
            Representation::Pointwise => Ok(PointwiseVector::new(params, self.values)?.to_chaos()),
        }
    }

    fn check_sites(&self, params: &SiteParams) -> Result<()> {
        if self.n == params.n() {
            Ok(())
        } else {
            Err(Error::Mismatch {
                what: "vector file sites vs config sites",
                left: self.n,
                right: params.n(),
            })
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# n={} repr={}", self.n, self.repr)?;
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(["index", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            csv.write_record([i.to_string(), v.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn read_from<R: BufRead>(mut input: R) -> Result<Self> {
        let mut preamble = String::new();
        input.read_line(&mut preamble)?;
        let (n, repr) = parse_preamble(preamble.trim_end())?;
        let mut csv = csv::Reader::from_reader(input);
        if csv.headers()? != vec!["index", "value"] {
            return Err(Error::VectorFormat("expected header `index,value`".into()));
        }
        let mut values = Vec::with_capacity(1 << n);
        for (row, record) in csv.records().enumerate() {
            let record = record?;
            let bad = |what: &str| Error::VectorFormat(format!("row {row}: {what}"));
            let index: usize = record
                .get(0)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| bad("bad index"))?;
            if index != row {
                return Err(bad("indices must run 0, 1, 2, .. in order"));
            }
            let value: f64 = record
                .get(1)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| bad("bad value"))?;
            values.push(value);
        }
        if values.len() != 1 << n {
            return Err(Error::VectorFormat(format!(
                "expected {} rows, found {}",
                1usize << n,
                values.len()
            )));
        }
        Ok(Self { n, repr, values })
    }
}

fn parse_preamble(line: &str) -> Result<(usize, Representation)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::VectorFormat("missing `# n=<n> repr=<chaos|pointwise>` line".into()))?;
    let (mut n, mut repr) = (None, None);
    for item in body.split_whitespace() {
        match item.split_once('=') {
            Some(("n", v)) => {
                n = Some(
                    v.parse::<usize>()
                        .map_err(|_| Error::VectorFormat(format!("bad n `{v}`")))?,
                )
            }
            Some(("repr", v)) => repr = Some(v.parse()?),
            _ => return Err(Error::VectorFormat(format!("unexpected preamble item `{item}`"))),
        }
    }
    match (n, repr) {
        (Some(n), Some(repr)) if (1..=MAX_SITES).contains(&n) => Ok((n, repr)),
        (Some(n), Some(_)) => Err(Error::VectorFormat(format!("n = {n} outside 1..={MAX_SITES}"))),
        _ => Err(Error::VectorFormat("preamble needs both n and repr".into())),
    }
}

/// A CSV report assembled in memory and written in one go.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut csv = csv::Writer::from_path(path)?;
        csv.write_record(&self.header)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
        Ok(())
    }
}
