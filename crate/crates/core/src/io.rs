//! CSV and JSON exports, plus readers for the same layouts.
//!
//! Numbers are printed with 12 significant digits. Every file may start with
//! `#` comment lines (the CLI uses one for the run-configuration digest);
//! readers return them separately. Lines end with LF.

use std::io::{Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::continuation::{BifurcationEvent, BifurcationRow, Branch, BranchPoint, Classification, EventKind};
use crate::dynamics::{ModeState, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::ModeBasis;
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::stationary::AmplitudeSolution;

pub const SIGNIFICANT_DIGITS: usize = 12;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Format(format!("{other:?}")),
            }
        } else {
            Error::Format(e.to_string())
        }
    }
}

/// Shortest decimal that round-trips the value rounded to 12 significant digits.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn num<T: Real>(x: T) -> String {
    format_number(x.as_f64())
}

/// A parsed file: comment lines (without `#`), header, and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column '{name}'")))
    }

    fn columns_with_prefix(&self, prefix: &str) -> Vec<usize> {
        let mut cols: Vec<(usize, usize)> = self
            .header
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.strip_prefix(prefix)?.parse::<usize>().ok().map(|k| (k, i)))
            .collect();
        cols.sort();
        cols.into_iter().map(|(_, i)| i).collect()
    }

    fn value<T: Real>(&self, row: usize, col: usize) -> Result<T> {
        let s = &self.rows[row][col];
        let v: f64 = s.trim().parse().map_err(|_| Error::Format(format!("row {}: '{s}' is not a number", row + 1)))?;
        Ok(T::lit(v))
    }
}

pub fn write_table<W: Write>(mut out: W, comments: &[String], header: &[String], rows: &[Vec<String>]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(mut input: R) -> Result<Table> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut comments = Vec::new();
    let mut body = String::with_capacity(text.len());
    for line in text.lines() {
        match line.strip_prefix('#') {
            Some(c) => comments.push(c.trim_start().to_string()),
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut r = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok(Table { comments, header, rows })
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |k| format!("{prefix}{k}"))
}

// ---- spectrum ----

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable<T> {
    pub mu_closed_form: Vec<T>,
    pub mu_numeric: Vec<T>,
    /// Row `j` is mode `j`.
    pub modes: Matrix<T>,
}

/// Columns `j, mu_closed_form, mu_numeric, alpha_1..alpha_N`.
pub fn write_spectrum<W: Write, T: Real>(
    out: W,
    comments: &[String],
    closed: &ModeBasis<T>,
    numeric: &ModeBasis<T>,
) -> Result<()> {
    let n = closed.n();
    let header: Vec<String> =
        ["j", "mu_closed_form", "mu_numeric"].iter().map(|s| s.to_string()).chain(indexed("alpha_", n)).collect();
    let rows: Vec<Vec<String>> = (0..n)
        .map(|j| {
            let mut r = vec![(j + 1).to_string(), num(closed.mu[j]), num(numeric.mu[j])];
            r.extend(closed.mode(j).iter().map(|v| num(*v)));
            r
        })
        .collect();
    write_table(out, comments, &header, &rows)
}

pub fn read_spectrum<R: Read, T: Real>(input: R) -> Result<SpectrumTable<T>> {
    let t = read_table(input)?;
    let (c, m) = (t.column("mu_closed_form")?, t.column("mu_numeric")?);
    let alpha = t.columns_with_prefix("alpha_");
    let n = t.rows.len();
    if alpha.len() != n {
        return Err(Error::Format(format!("{n} modes but {} alpha columns", alpha.len())));
    }
    let mut modes = Matrix::zeros(n, n);
    let (mut mc, mut mn) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for r in 0..n {
        mc.push(t.value(r, c)?);
        mn.push(t.value(r, m)?);
        for (k, col) in alpha.iter().enumerate() {
            modes[(r, k)] = t.value(r, *col)?;
        }
    }
    Ok(SpectrumTable { mu_closed_form: mc, mu_numeric: mn, modes })
}

// ---- trajectory ----

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow<T> {
    pub state: ModeState<T>,
    pub norm: T,
    pub energy: T,
}

/// Columns `t, re_d1, im_d1, ..., re_dN, im_dN, norm, energy`.
pub fn write_trajectory<W: Write, T: Real>(out: W, comments: &[String], traj: &Trajectory<T>) -> Result<()> {
    let n = traj.samples.first().map_or(0, |s| s.d.len());
    let mut header = vec!["t".to_string()];
    for k in 1..=n {
        header.push(format!("re_d{k}"));
        header.push(format!("im_d{k}"));
    }
    header.push("norm".into());
    header.push("energy".into());
    let rows: Vec<Vec<String>> = traj
        .samples
        .iter()
        .zip(&traj.energies)
        .map(|(s, e)| {
            let mut r = vec![num(s.t)];
            for d in &s.d {
                r.push(num(d.re));
                r.push(num(d.im));
            }
            r.push(num(s.norm_sqr()));
            r.push(num(*e));
            r
        })
        .collect();
    write_table(out, comments, &header, &rows)
}

pub fn read_trajectory<R: Read, T: Real>(input: R) -> Result<Vec<TrajectoryRow<T>>> {
    let t = read_table(input)?;
    let (ct, cn, ce) = (t.column("t")?, t.column("norm")?, t.column("energy")?);
    let re = t.columns_with_prefix("re_d");
    let im = t.columns_with_prefix("im_d");
    if re.len() != im.len() {
        return Err(Error::Format("unpaired real/imaginary columns".into()));
    }
    (0..t.rows.len())
        .map(|r| {
            let d = re
                .iter()
                .zip(&im)
                .map(|(a, b)| Ok(Complex::new(t.value(r, *a)?, t.value(r, *b)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrajectoryRow { state: ModeState { d, t: t.value(r, ct)? }, norm: t.value(r, cn)?, energy: t.value(r, ce)? })
        })
        .collect()
}

// ---- stationary solution sets ----

fn signed_amplitudes<T: Real>(t: &Table, r: usize, q: &[usize], s: &[usize]) -> Result<Vec<T>> {
    if q.len() != s.len() || q.is_empty() {
        return Err(Error::Format("q_k and sign_k columns do not match".into()));
    }
    q.iter()
        .zip(s)
        .map(|(qc, sc)| {
            let qv: T = t.value(r, *qc)?;
            let sv: T = t.value(r, *sc)?;
            let a = qv.max(T::zero()).sqrt();
            Ok(if sv < T::zero() { -a } else { a })
        })
        .collect()
}

/// Columns `eta, sigma, Omega, q_1..q_N, sign_1..sign_N, residual_norm`.
pub fn write_solutions<W: Write, T: Real>(out: W, comments: &[String], sols: &[AmplitudeSolution<T>]) -> Result<()> {
    let n = sols.first().map_or(0, |s| s.n());
    let header: Vec<String> = ["eta", "sigma", "Omega"]
        .iter()
        .map(|s| s.to_string())
        .chain(indexed("q_", n))
        .chain(indexed("sign_", n))
        .chain(["residual_norm".to_string()])
        .collect();
    let rows: Vec<Vec<String>> = sols
        .iter()
        .map(|s| {
            let mut r = vec![num(s.eta), num(s.sigma), num(s.omega)];
            r.extend(s.actions().into_iter().map(num));
            r.extend(s.signs().into_iter().map(|v| v.to_string()));
            r.push(num(s.residual_norm));
            r
        })
        .collect();
    write_table(out, comments, &header, &rows)
}

pub fn read_solutions<R: Read, T: Real>(input: R) -> Result<Vec<AmplitudeSolution<T>>> {
    let t = read_table(input)?;
    let (ce, cs, co, cr) = (t.column("eta")?, t.column("sigma")?, t.column("Omega")?, t.column("residual_norm")?);
    let (q, s) = (t.columns_with_prefix("q_"), t.columns_with_prefix("sign_"));
    (0..t.rows.len())
        .map(|r| {
            Ok(AmplitudeSolution {
                a: signed_amplitudes(&t, r, &q, &s)?,
                omega: t.value(r, co)?,
                eta: t.value(r, ce)?,
                sigma: t.value(r, cs)?,
                residual_norm: t.value(r, cr)?,
            })
        })
        .collect()
}

// ---- branches ----

/// Columns `arclength, eta, Omega, q_1..q_N, sign_1..sign_N, min_singular_value`.
pub fn write_branch<W: Write, T: Real>(out: W, comments: &[String], branch: &Branch<T>) -> Result<()> {
    let n = branch.n();
    let header: Vec<String> = ["arclength", "eta", "Omega"]
        .iter()
        .map(|s| s.to_string())
        .chain(indexed("q_", n))
        .chain(indexed("sign_", n))
        .chain(["min_singular_value".to_string()])
        .collect();
    let rows: Vec<Vec<String>> = branch
        .points
        .iter()
        .map(|p| {
            let mut r = vec![num(p.arclength), num(p.eta), num(p.omega)];
            r.extend(p.a.iter().map(|a| num(*a * *a)));
            r.extend(p.a.iter().map(|a| if *a < T::zero() { "-1".to_string() } else { "1".to_string() }));
            r.push(num(p.min_singular_value));
            r
        })
        .collect();
    write_table(out, comments, &header, &rows)
}

/// Branch points as exported; tangents and residuals are not stored and read back as zero.
pub fn read_branch<R: Read, T: Real>(input: R) -> Result<Vec<BranchPoint<T>>> {
    let t = read_table(input)?;
    let (cs, ce, co, cm) =
        (t.column("arclength")?, t.column("eta")?, t.column("Omega")?, t.column("min_singular_value")?);
    let (q, s) = (t.columns_with_prefix("q_"), t.columns_with_prefix("sign_"));
    (0..t.rows.len())
        .map(|r| {
            Ok(BranchPoint {
                eta: t.value(r, ce)?,
                omega: t.value(r, co)?,
                a: signed_amplitudes(&t, r, &q, &s)?,
                min_singular_value: t.value(r, cm)?,
                arclength: t.value(r, cs)?,
                tangent_eta: T::zero(),
                residual_norm: T::zero(),
            })
        })
        .collect()
}

// ---- events ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub kind: EventKind,
    pub eta_c: f64,
    pub classification: Classification,
    pub family_label: String,
}

impl<T: Real> From<&BifurcationEvent<T>> for EventRecord {
    fn from(e: &BifurcationEvent<T>) -> Self {
        Self {
            kind: e.kind,
            eta_c: format_number(e.eta_c.as_f64()).parse().unwrap_or(f64::NAN),
            classification: e.classification,
            family_label: e.family_label.clone(),
        }
    }
}

pub fn write_events_json<W: Write, T: Real>(mut out: W, events: &[BifurcationEvent<T>]) -> Result<()> {
    let recs: Vec<EventRecord> = events.iter().map(EventRecord::from).collect();
    serde_json::to_writer_pretty(&mut out, &recs).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_events_json<R: Read>(input: R) -> Result<Vec<EventRecord>> {
    serde_json::from_reader(input).map_err(|e| Error::Format(e.to_string()))
}

// ---- bifurcation table ----

/// Columns `N, sigma, eta_bif, Omega_bif, classification`.
pub fn write_bif_table<W: Write, T: Real>(out: W, comments: &[String], rows: &[BifurcationRow<T>]) -> Result<()> {
    let header: Vec<String> =
        ["N", "sigma", "eta_bif", "Omega_bif", "classification"].iter().map(|s| s.to_string()).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.n.to_string(), num(r.sigma), num(r.eta_bif), num(r.omega_bif), r.classification.to_string()])
        .collect();
    write_table(out, comments, &header, &body)
}

pub fn read_bif_table<R: Read, T: Real>(input: R) -> Result<Vec<BifurcationRow<T>>> {
    let t = read_table(input)?;
    let (cn, cs, ce, co, cc) =
        (t.column("N")?, t.column("sigma")?, t.column("eta_bif")?, t.column("Omega_bif")?, t.column("classification")?);
    (0..t.rows.len())
        .map(|r| {
            let n = t.rows[r][cn].parse().map_err(|_| Error::Format(format!("row {}: bad N", r + 1)))?;
            let classification = match t.rows[r][cc].as_str() {
                "supercritical" => Classification::Supercritical,
                "subcritical" => Classification::Subcritical,
                "none" => Classification::None,
                other => return Err(Error::Format(format!("unknown classification '{other}'"))),
            };
            Ok(BifurcationRow { n, sigma: t.value(r, cs)?, eta_bif: t.value(r, ce)?, omega_bif: t.value(r, co)?, classification })
        })
        .collect()
}

// ---- eigenfunctions ----

#[derive(Debug, Clone, PartialEq)]
pub struct EigenfunctionTable<T> {
    pub x: Vec<T>,
    pub potential: Vec<T>,
    /// `psi[j][i]` is eigenfunction `j` at node `i`.
    pub psi: Vec<Vec<T>>,
}

/// Columns `x, v, psi_1..psi_N`.
pub fn write_eigenfunctions<W: Write, T: Real>(out: W, comments: &[String], table: &EigenfunctionTable<T>) -> Result<()> {
    let header: Vec<String> =
        ["x", "v"].iter().map(|s| s.to_string()).chain(indexed("psi_", table.psi.len())).collect();
    let rows: Vec<Vec<String>> = (0..table.x.len())
        .map(|i| {
            let mut r = vec![num(table.x[i]), num(table.potential[i])];
            r.extend(table.psi.iter().map(|p| num(p[i])));
            r
        })
        .collect();
    write_table(out, comments, &header, &rows)
}

pub fn read_eigenfunctions<R: Read, T: Real>(input: R) -> Result<EigenfunctionTable<T>> {
    let t = read_table(input)?;
    let (cx, cv) = (t.column("x")?, t.column("v")?);
    let cols = t.columns_with_prefix("psi_");
    let n = t.rows.len();
    let x = (0..n).map(|r| t.value(r, cx)).collect::<Result<Vec<T>>>()?;
    let potential = (0..n).map(|r| t.value(r, cv)).collect::<Result<Vec<T>>>()?;
    let psi = cols
        .iter()
        .map(|c| (0..n).map(|r| t.value(r, *c)).collect::<Result<Vec<T>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenfunctionTable { x, potential, psi })
}
