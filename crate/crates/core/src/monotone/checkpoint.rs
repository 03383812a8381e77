//! Plain-text checkpoints for [`MonotoneNet`].
//!
//! ```text
//! # myerson-airnet monotone network
//! format_version 1
//! n_bidders 5
//! groups 5
//! units 3
//! kappa 1.0000000000000000e2
//! theta
//! <one line per (bidder, group): `units` values>
//! beta
//! <same layout>
//! end
//! ```
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64` exactly. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::monotone::net::MonotoneNet;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub net: MonotoneNet,
    pub kappa: f64,
}

/// Expected network shape when loading.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub n_bidders: usize,
    pub groups: usize,
    pub units: usize,
}

impl Shape {
    pub fn of(net: &MonotoneNet) -> Self {
        Shape {
            n_bidders: net.n_bidders(),
            groups: net.groups(),
            units: net.units(),
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_string(ckpt: &Checkpoint) -> String {
    let net = &ckpt.net;
    let mut out = String::new();
    out.push_str("# myerson-airnet monotone network\n");
    let _ = writeln!(out, "format_version {FORMAT_VERSION}");
    let _ = writeln!(out, "n_bidders {}", net.n_bidders());
    let _ = writeln!(out, "groups {}", net.groups());
    let _ = writeln!(out, "units {}", net.units());
    let _ = writeln!(out, "kappa {}", fmt_f64(ckpt.kappa));
    for (name, values) in [("theta", net.theta()), ("beta", net.beta())] {
        out.push_str(name);
        out.push('\n');
        for row in values.chunks(net.units()) {
            let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_params(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, to_string(ckpt))?;
    Ok(())
}

pub fn load_params(path: &Path, expected: Option<Shape>) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)?;
    from_str(&text, expected)
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedCheckpoint(msg.into())
}

struct Lines<'a> {
    inner: std::iter::Filter<std::str::Lines<'a>, fn(&&str) -> bool>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        fn keep(l: &&str) -> bool {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        }
        Lines {
            inner: text.lines().filter(keep as fn(&&str) -> bool),
        }
    }

    fn next_line(&mut self, what: &str) -> Result<&'a str> {
        self.inner
            .next()
            .map(str::trim)
            .ok_or_else(|| malformed(format!("unexpected end of file, expected {what}")))
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.next_line(key)?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(v), None) if k == key => v
                .parse()
                .map_err(|_| malformed(format!("bad value for {key}: {v:?}"))),
            _ => Err(malformed(format!("expected `{key} <value>`, got {line:?}"))),
        }
    }

    fn block(&mut self, name: &str, rows: usize, cols: usize) -> Result<Vec<f64>> {
        let header = self.next_line(name)?;
        if header != name {
            return Err(malformed(format!(
                "expected `{name}` block, got {header:?}"
            )));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = self.next_line(name)?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| malformed(format!("bad number {tok:?} in {name} row {r}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(malformed(format!(
                    "{name} row {r} has {} values, expected {cols}",
                    row.len()
                )));
            }
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(malformed(format!("non-finite value {x} in {name}")));
            }
            values.extend(row);
        }
        Ok(values)
    }
}

pub fn from_str(text: &str, expected: Option<Shape>) -> Result<Checkpoint> {
    let mut lines = Lines::new(text);
    let version: u32 = lines.field("format_version")?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let shape = Shape {
        n_bidders: lines.field("n_bidders")?,
        groups: lines.field("groups")?,
        units: lines.field("units")?,
    };
    if let Some(exp) = expected {
        for (what, found, expected) in [
            ("n_bidders", shape.n_bidders, exp.n_bidders),
            ("groups", shape.groups, exp.groups),
            ("units", shape.units, exp.units),
        ] {
            if found != expected {
                return Err(Error::DimensionMismatch {
                    what,
                    found,
                    expected,
                });
            }
        }
    }
    let kappa: f64 = lines.field("kappa")?;
    if shape.n_bidders == 0 || shape.groups == 0 || shape.units == 0 {
        return Err(malformed("network dimensions must be positive"));
    }
    let rows = shape.n_bidders * shape.groups;
    let theta = lines.block("theta", rows, shape.units)?;
    let beta = lines.block("beta", rows, shape.units)?;
    let end = lines.next_line("end")?;
    if end != "end" {
        return Err(malformed(format!("expected `end`, got {end:?}")));
    }
    let net = MonotoneNet::from_raw(shape.n_bidders, shape.groups, shape.units, theta, beta)?;
    Ok(Checkpoint { net, kappa })
}
