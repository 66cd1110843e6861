//! The `fermi-parity` command line.
//!
//! Subcommands: `coeffs`, `table`, `state`, `sweep` and `selfcheck`.
//! Exit codes are 0 on success, 1 for usage errors, 2 for numerical failures
//! and 3 when the self-check finds a failing invariant.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, LN_2};
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::dirac::{angular_average, dirac_matrices, h_states, AngularGrid, HelicityPair};
use crate::error::Error;
use crate::matrix::{c, ComplexMatrix};
use crate::numerics::{integrate_semi_infinite, DEFAULT_BUDGET};
use crate::qinfo::{
    analyze, angular_coefficients, assemble_rho12, charge_swapped_reconstruction, parity_sign_flip,
    ppt_check, rho12_from_spinor_integral, ModelParams, StateAnalysis,
};
use crate::thermal::{coefficients, fermi_dirac_pdf, ThermalCoefficients, DEFAULT_COEFF_TOL};
use crate::Branch;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_SELFCHECK: i32 = 3;

pub const MAX_SWEEP_POINTS: usize = 100_000;

/// `(T_m, M++¹, M−−¹, M+−)` as printed in the published coefficient table.
pub const TABLE_I: [(f64, f64, f64, f64); 9] = [
    (1e5, 0.50000, 0.50000, 0.50000),
    (1e2, 0.50228, 0.49772, 0.49999),
    (1e1, 0.52264, 0.47736, 0.49912),
    (1.0, 0.68587, 0.31413, 0.45246),
    (1e-1, 0.97298, 2.7021e-2, 0.14465),
    (1e-2, 0.99968, 3.2275e-4, 1.5741e-2),
    (1e-5, 1.0000, 3.2349e-10, 1.5757e-5),
    (1e-10, 1.0000, 3.2349e-20, 1.5757e-10),
    (1e-12, 1.0000, 3.2349e-24, 1.5757e-12),
];

/// `(T_m, M++¹ − M−−¹, M++⁰ − M−−⁰)`. The last row stands for every `T_m ≤ 1e-5`.
pub const TABLE_II: [(f64, f64, f64); 7] = [
    (1e5, 0.0, 0.0),
    (1e2, 0.00456, -0.00456),
    (1e1, 0.04528, -0.04528),
    (1.0, 0.37174, -0.37174),
    (1e-1, 0.94596, -0.94596),
    (1e-2, 0.99936, -0.99936),
    (1e-5, 1.0, -1.0),
];

/// Table comparison: `|computed − printed| ≤ max(1e-5, 1e-3·|printed|)`.
pub fn table_cell_passes(computed: f64, printed: f64) -> bool {
    (computed - printed).abs() <= f64::max(1e-5, 1e-3 * printed.abs())
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
    SelfCheck(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::SelfCheck(_) => EXIT_SELFCHECK,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::SelfCheck(fails) => {
                write!(f, "self-check failed ({} check(s)):", fails.len())?;
                for x in fails {
                    write!(f, "\n  {x}")?;
                }
                Ok(())
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() || matches!(e, Error::NotHermitian(_)) {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fermi-parity", version, about = "Parity-helicity correlations of a thermal Fermi gas")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print M++, M-- and M+- at one temperature.
    Coeffs(CoeffsArgs),
    /// Recompute a published table and compare cell by cell.
    Table(TableArgs),
    /// Full report on the parity-helicity state.
    State(StateArgs),
    /// Tabulate a temperature sweep as CSV.
    Sweep(SweepArgs),
    /// Run the invariant suite.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// 1 for particles, 0 for antiparticles.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub s: u8,
    /// Temperature per unit mass, kT/mc².
    #[arg(long, allow_negative_numbers = true)]
    pub tm: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Absolute tolerance on each coefficient.
    #[arg(long, default_value_t = DEFAULT_COEFF_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// 1 for the coefficients, 2 for the differences M++ - M--.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
    pub which: u8,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, default_value_t = DEFAULT_COEFF_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct AngleArgs {
    /// Mixing angle of the helicity states.
    #[arg(long, allow_negative_numbers = true, default_value_t = FRAC_PI_4)]
    pub chi: f64,
    /// Relative phase of the helicity states.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub mu: f64,
    /// Read --chi and --mu in degrees.
    #[arg(long)]
    pub deg: bool,
}

impl AngleArgs {
    fn radians(&self) -> (f64, f64) {
        if self.deg {
            (self.chi.to_radians(), self.mu.to_radians())
        } else {
            (self.chi, self.mu)
        }
    }
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// 1 for particles, 0 for antiparticles.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub s: u8,
    /// Temperature per unit mass, kT/mc².
    #[arg(long, allow_negative_numbers = true)]
    pub tm: f64,
    #[command(flatten)]
    pub angles: AngleArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, default_value_t = DEFAULT_COEFF_TOL)]
    pub tol: f64,
    /// Report entropies in bits instead of nats (text output only).
    #[arg(long)]
    pub bits: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// 1 for particles, 0 for antiparticles.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub s: u8,
    /// Lowest T_m of the sweep.
    #[arg(long, default_value_t = 1e-3)]
    pub t_min: f64,
    /// Highest T_m of the sweep.
    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,
    /// Number of temperatures, endpoints included.
    #[arg(long, default_value_t = 61)]
    pub points: usize,
    /// Space temperatures linearly instead of logarithmically.
    #[arg(long)]
    pub linear: bool,
    #[command(flatten)]
    pub angles: AngleArgs,
    /// Comma-separated output columns; t_m is always written first.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = DEFAULT_COEFF_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Fast subset of the checks.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Renders `v` to 5 significant figures, rounding half away from zero.
/// Magnitudes of at least 0.1 are written in fixed notation, smaller ones as
/// `d.dddde-N`.
pub fn format_sig5(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0.0000".into();
    }
    let sign = if v < 0.0 { "-" } else { "" };
    let long = format!("{:.30e}", v.abs());
    let (mant, exp) = long.split_once('e').expect("exponent present");
    let mut exp: i32 = exp.parse().expect("integer exponent");
    let digits: Vec<u32> = mant.chars().filter_map(|ch| ch.to_digit(10)).collect();
    let mut kept: u64 = digits[..5].iter().fold(0, |a, &d| a * 10 + d as u64);
    if digits[5] >= 5 {
        kept += 1;
    }
    if kept == 100_000 {
        kept = 10_000;
        exp += 1;
    }
    let ds = kept.to_string();
    if exp >= -1 {
        let int_len = exp + 1;
        if int_len <= 0 {
            format!("{sign}0.{ds}")
        } else if int_len as usize >= 5 {
            format!("{sign}{ds}{}", "0".repeat(int_len as usize - 5))
        } else {
            let (a, b) = ds.split_at(int_len as usize);
            format!("{sign}{a}.{b}")
        }
    } else {
        format!("{sign}{}.{}e{exp}", &ds[..1], &ds[1..])
    }
}

fn format_full(v: f64) -> String {
    format!("{v:.16e}")
}

fn params_from(s: u8, t_m: f64, chi: f64, mu: f64) -> CliResult<ModelParams> {
    Ok(ModelParams::new(Branch::from_index(s)?, t_m, chi, mu)?)
}

fn check_tol(tol: f64) -> CliResult<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--tol must be finite and > 0, got {tol}")))
    }
}

/// One row of a sweep, also the JSON summary of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputRecord {
    pub t_m: f64,
    pub m_pp: f64,
    pub m_mm: f64,
    pub m_pm: f64,
    pub h_pp: f64,
    pub entropy_rho1: f64,
    pub entropy_rho2: f64,
    pub entropy_rho12: f64,
    pub mutual_info: f64,
    pub min_pt_eig: f64,
}

pub const RECORD_COLUMNS: [&str; 10] = [
    "t_m",
    "m_pp",
    "m_mm",
    "m_pm",
    "h_pp",
    "entropy_rho1",
    "entropy_rho2",
    "entropy_rho12",
    "mutual_info",
    "min_pt_eig",
];

impl OutputRecord {
    pub fn from_analysis(a: &StateAnalysis) -> CliResult<Self> {
        let r = Self {
            t_m: a.params.t_m,
            m_pp: a.coeffs.m_pp,
            m_mm: a.coeffs.m_mm,
            m_pm: a.coeffs.m_pm,
            h_pp: a.helicity_weights.0,
            entropy_rho1: a.spectrum1.entropy_nats,
            entropy_rho2: a.spectrum2.entropy_nats,
            entropy_rho12: a.spectrum12.entropy_nats,
            mutual_info: a.mutual_information,
            min_pt_eig: a.ppt.min_pt_eigenvalue,
        };
        if let Some(bad) = RECORD_COLUMNS.iter().find(|c| !r.field(c).unwrap().is_finite()) {
            return Err(CliError::Numerical(format!("{bad} is not finite at T_m = {}", r.t_m)));
        }
        Ok(r)
    }

    pub fn field(&self, name: &str) -> Option<f64> {
        Some(match name {
            "t_m" => self.t_m,
            "m_pp" => self.m_pp,
            "m_mm" => self.m_mm,
            "m_pm" => self.m_pm,
            "h_pp" => self.h_pp,
            "entropy_rho1" => self.entropy_rho1,
            "entropy_rho2" => self.entropy_rho2,
            "entropy_rho12" => self.entropy_rho12,
            "mutual_info" => self.mutual_info,
            "min_pt_eig" => self.min_pt_eig,
            _ => return None,
        })
    }
}

/// Computes the record for one parameter point.
pub fn output_record(params: &ModelParams, tol: f64) -> CliResult<OutputRecord> {
    let k = coefficients(params.s, params.t_m, tol)?;
    OutputRecord::from_analysis(&analyze(params, &k)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub log_spaced: bool,
    pub chi: f64,
    pub mu: f64,
    pub s: Branch,
}

impl SweepSpec {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.t_min > 0.0 && self.t_max.is_finite() && self.t_max > self.t_min) {
            return Err(CliError::Usage(format!(
                "need 0 < t_min < t_max, got t_min={} t_max={}",
                self.t_min, self.t_max
            )));
        }
        if !(2..=MAX_SWEEP_POINTS).contains(&self.points) {
            return Err(CliError::Usage(format!(
                "points must lie in [2, {MAX_SWEEP_POINTS}], got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn temperatures(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.t_min;
                }
                if i == n - 1 {
                    return self.t_max;
                }
                let f = i as f64 / (n - 1) as f64;
                if self.log_spaced {
                    self.t_min * (self.t_max / self.t_min).powf(f)
                } else {
                    self.t_min + f * (self.t_max - self.t_min)
                }
            })
            .collect()
    }
}

/// Evaluates every sweep point in parallel; rows come back in temperature order.
pub fn run_sweep(spec: &SweepSpec, tol: f64) -> CliResult<Vec<OutputRecord>> {
    spec.validate()?;
    check_tol(tol)?;
    let base = ModelParams::new(spec.s, spec.t_min, spec.chi, spec.mu)?;
    spec.temperatures()
        .into_par_iter()
        .map(|t_m| output_record(&ModelParams { t_m, ..base }, tol))
        .collect()
}

/// CSV with a header row and 17 significant digits per value.
pub fn render_csv(records: &[OutputRecord], columns: &[&str]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for r in records {
        let row: Vec<String> = columns.iter().map(|c| format_full(r.field(c).unwrap())).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn resolve_columns(requested: &Option<Vec<String>>) -> CliResult<Vec<&'static str>> {
    let Some(req) = requested else {
        return Ok(RECORD_COLUMNS.to_vec());
    };
    let mut cols = vec!["t_m"];
    for name in req {
        let name = name.trim();
        let known = RECORD_COLUMNS
            .iter()
            .find(|c| **c == name)
            .ok_or_else(|| CliError::Usage(format!("unknown column '{name}'; known: {}", RECORD_COLUMNS.join(","))))?;
        if !cols.contains(known) {
            cols.push(known);
        }
    }
    Ok(cols)
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))
}

pub fn cmd_coeffs(args: &CoeffsArgs, out: &mut dyn Write) -> CliResult<()> {
    check_tol(args.tol)?;
    let k = coefficients(Branch::from_index(args.s)?, args.tm, args.tol)?;
    match args.format {
        Format::Text => writeln!(out, "{} {} {}", format_sig5(k.m_pp), format_sig5(k.m_mm), format_sig5(k.m_pm))?,
        Format::Json => writeln!(out, "{}", json(&k)?)?,
        Format::Csv => writeln!(
            out,
            "t_m,m_pp,m_mm,m_pm\n{},{},{},{}",
            format_full(k.t_m),
            format_full(k.m_pp),
            format_full(k.m_mm),
            format_full(k.m_pm)
        )?,
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TableCell {
    pub t_m: f64,
    pub column: &'static str,
    pub computed: f64,
    pub printed: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    pub pass: bool,
}

fn cell(t_m: f64, column: &'static str, computed: f64, printed: f64) -> TableCell {
    let abs_dev = (computed - printed).abs();
    TableCell {
        t_m,
        column,
        computed,
        printed,
        abs_dev,
        rel_dev: if printed != 0.0 { abs_dev / printed.abs() } else { f64::NAN },
        pass: table_cell_passes(computed, printed),
    }
}

/// Recomputes table 1 or 2.
pub fn table_cells(which: u8, tol: f64) -> CliResult<Vec<TableCell>> {
    check_tol(tol)?;
    let mut cells = Vec::new();
    match which {
        1 => {
            for (t, pp, mm, pm) in TABLE_I {
                let k = coefficients(Branch::Positive, t, tol)?;
                cells.push(cell(t, "m_pp", k.m_pp, pp));
                cells.push(cell(t, "m_mm", k.m_mm, mm));
                cells.push(cell(t, "m_pm", k.m_pm, pm));
            }
        }
        2 => {
            for (t, d1, d0) in TABLE_II {
                let k1 = coefficients(Branch::Positive, t, tol)?;
                let k0 = coefficients(Branch::Negative, t, tol)?;
                cells.push(cell(t, "diff_s1", k1.parity_imbalance(), d1));
                cells.push(cell(t, "diff_s0", k0.parity_imbalance(), d0));
            }
        }
        _ => return Err(CliError::Usage(format!("no table {which}"))),
    }
    Ok(cells)
}

pub fn cmd_table(args: &TableArgs, out: &mut dyn Write) -> CliResult<()> {
    let cells = table_cells(args.which, args.tol)?;
    match args.format {
        Format::Json => writeln!(out, "{}", json(&cells)?)?,
        Format::Csv => {
            writeln!(out, "t_m,column,computed,printed,abs_dev,rel_dev,pass")?;
            for x in &cells {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    format_full(x.t_m),
                    x.column,
                    format_full(x.computed),
                    format_full(x.printed),
                    format_full(x.abs_dev),
                    format_full(x.rel_dev),
                    if x.pass { "PASS" } else { "FAIL" }
                )?;
            }
        }
        Format::Text => {
            writeln!(
                out,
                "{:<8} {:<8} {:>11} {:>11} {:>11} {:>11}  result",
                "T_m", "column", "computed", "printed", "abs dev", "rel dev"
            )?;
            for x in &cells {
                writeln!(
                    out,
                    "{:<8} {:<8} {:>11} {:>11} {:>11.3e} {:>11.3e}  {}",
                    format!("{:e}", x.t_m),
                    x.column,
                    format_sig5(x.computed),
                    format_sig5(x.printed),
                    x.abs_dev,
                    x.rel_dev,
                    if x.pass { "PASS" } else { "FAIL" }
                )?;
            }
            let failed = cells.iter().filter(|x| !x.pass).count();
            writeln!(out, "{} cells, {} failed", cells.len(), failed)?;
        }
    }
    Ok(())
}

fn matrix_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ChargeConjugationSummary {
    /// Largest eigenvalue shift between ρ12 and Ĉρ12Ĉ⁻¹.
    pub spectrum_shift: f64,
    /// Entrywise distance to the matrix rebuilt with M++⇄M−− and ñ+⇄ñ−.
    pub distance_to_swapped: f64,
    /// Same distance after conjugating the rebuilt matrix by σz⊗I.
    pub distance_to_swapped_parity_gauge: f64,
}

pub fn charge_conjugation_summary(a: &StateAnalysis) -> ChargeConjugationSummary {
    let recon = charge_swapped_reconstruction(&a.params, &a.coeffs);
    let z = parity_sign_flip();
    let gauged = &(&z * &recon) * &z;
    let spectrum_shift = a
        .spectrum12
        .eigenvalues
        .iter()
        .zip(&a.charge_conjugate_spectrum.eigenvalues)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    ChargeConjugationSummary {
        spectrum_shift,
        distance_to_swapped: a.charge_conjugate.max_abs_diff(&recon),
        distance_to_swapped_parity_gauge: a.charge_conjugate.max_abs_diff(&gauged),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateReport {
    pub params: ModelParams,
    pub coefficients: ThermalCoefficients,
    pub rho12: Vec<Vec<[f64; 2]>>,
    pub trace_rho12: f64,
    pub eigenvalues_rho12_closed: [f64; 4],
    pub eigenvalues_rho12_numeric: Vec<f64>,
    pub rho1: Vec<Vec<[f64; 2]>>,
    pub eigenvalues_rho1_closed: [f64; 2],
    pub eigenvalues_rho1_numeric: Vec<f64>,
    pub rho2: Vec<Vec<[f64; 2]>>,
    pub h_pp: f64,
    pub h_mm: f64,
    pub entropy_rho1: f64,
    pub entropy_rho2: f64,
    pub entropy_rho12: f64,
    pub mutual_info: f64,
    pub min_pt_eig: f64,
    pub ppt_separable: bool,
    pub pt_equals_rho: bool,
    pub charge_conjugation: ChargeConjugationSummary,
}

pub fn state_report(params: &ModelParams, tol: f64) -> CliResult<StateReport> {
    check_tol(tol)?;
    let k = coefficients(params.s, params.t_m, tol)?;
    let a = analyze(params, &k)?;
    Ok(StateReport {
        params: *params,
        coefficients: k,
        rho12: matrix_rows(&a.rho12),
        trace_rho12: a.rho12.trace().re,
        eigenvalues_rho12_closed: a.closed_eigs12,
        eigenvalues_rho12_numeric: a.spectrum12.eigenvalues.clone(),
        rho1: matrix_rows(&a.rho1),
        eigenvalues_rho1_closed: a.closed_eigs1,
        eigenvalues_rho1_numeric: a.spectrum1.eigenvalues.clone(),
        rho2: matrix_rows(&a.rho2),
        h_pp: a.helicity_weights.0,
        h_mm: a.helicity_weights.1,
        entropy_rho1: a.spectrum1.entropy_nats,
        entropy_rho2: a.spectrum2.entropy_nats,
        entropy_rho12: a.spectrum12.entropy_nats,
        mutual_info: a.mutual_information,
        min_pt_eig: a.ppt.min_pt_eigenvalue,
        ppt_separable: a.ppt.separable,
        pt_equals_rho: a.ppt.pt_equals_rho,
        charge_conjugation: charge_conjugation_summary(&a),
    })
}

fn write_matrix(out: &mut String, name: &str, rows: &[Vec<[f64; 2]>]) {
    let _ = writeln!(out, "{name} (re, im):");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|[re, im]| format!("({re:+.14e}, {im:+.14e})")).collect();
        let _ = writeln!(out, "  {}", cells.join("  "));
    }
}

fn write_list(out: &mut String, name: &str, v: &[f64]) {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.14e}")).collect();
    let _ = writeln!(out, "{name}: {}", cells.join(" "));
}

pub fn render_state_text(r: &StateReport, bits: bool) -> String {
    let (scale, unit) = if bits { (1.0 / LN_2, "bits") } else { (1.0, "nats") };
    let p = &r.params;
    let k = &r.coefficients;
    let mut o = String::new();
    let _ = writeln!(o, "s = {}  T_m = {:e}  chi = {}  mu = {}", p.s.index(), p.t_m, p.chi, p.mu);
    let _ = writeln!(o, "m_pp = {:.14e}\nm_mm = {:.14e}\nm_pm = {:.14e}", k.m_pp, k.m_mm, k.m_pm);
    write_matrix(&mut o, "rho12", &r.rho12);
    let _ = writeln!(o, "trace(rho12) = {:.6}", r.trace_rho12);
    write_list(&mut o, "eigenvalues rho12 (closed form, lambda1..lambda4)", &r.eigenvalues_rho12_closed);
    write_list(&mut o, "eigenvalues rho12 (numeric)", &r.eigenvalues_rho12_numeric);
    write_matrix(&mut o, "rho1", &r.rho1);
    write_list(&mut o, "eigenvalues rho1 (closed form)", &r.eigenvalues_rho1_closed);
    write_list(&mut o, "eigenvalues rho1 (numeric)", &r.eigenvalues_rho1_numeric);
    write_matrix(&mut o, "rho2", &r.rho2);
    let _ = writeln!(o, "h_pp = {:.14e}\nh_mm = {:.14e}", r.h_pp, r.h_mm);
    let _ = writeln!(o, "entropy_rho1 = {:.14e} {unit}", r.entropy_rho1 * scale);
    let _ = writeln!(o, "entropy_rho2 = {:.14e} {unit}", r.entropy_rho2 * scale);
    let _ = writeln!(o, "entropy_rho12 = {:.14e} {unit}", r.entropy_rho12 * scale);
    let _ = writeln!(o, "mutual_info = {:.14e} {unit}", r.mutual_info * scale);
    let _ = writeln!(o, "min_pt_eig = {:.14e}", r.min_pt_eig);
    let _ = writeln!(
        o,
        "ppt: {} (partial transpose equals rho12: {})",
        if r.ppt_separable { "separable" } else { "entangled" },
        if r.pt_equals_rho { "yes" } else { "no" }
    );
    let cc = &r.charge_conjugation;
    let _ = writeln!(o, "charge conjugate: spectrum shift = {:.3e}", cc.spectrum_shift);
    let _ = writeln!(o, "charge conjugate: distance to swapped rebuild = {:.3e}", cc.distance_to_swapped);
    let _ = writeln!(
        o,
        "charge conjugate: distance to swapped rebuild in sigma_z parity gauge = {:.3e}",
        cc.distance_to_swapped_parity_gauge
    );
    o
}

pub fn cmd_state(args: &StateArgs, out: &mut dyn Write) -> CliResult<()> {
    let (chi, mu) = args.angles.radians();
    let params = params_from(args.s, args.tm, chi, mu)?;
    let report = state_report(&params, args.tol)?;
    match args.format {
        Format::Json => writeln!(out, "{}", json(&report)?)?,
        Format::Text => write!(out, "{}", render_state_text(&report, args.bits))?,
        Format::Csv => {
            let rec = output_record(&params, args.tol)?;
            write!(out, "{}", render_csv(&[rec], &RECORD_COLUMNS))?;
        }
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    let (chi, mu) = args.angles.radians();
    let spec = SweepSpec {
        t_min: args.t_min,
        t_max: args.t_max,
        points: args.points,
        log_spaced: !args.linear,
        chi,
        mu,
        s: Branch::from_index(args.s)?,
    };
    let columns = resolve_columns(&args.columns)?;
    let records = run_sweep(&spec, args.tol)?;
    let body = match args.format {
        Format::Csv => render_csv(&records, &columns),
        Format::Json => json(&records)? + "\n",
        Format::Text => {
            let mut s = String::new();
            for r in &records {
                let row: Vec<String> = columns.iter().map(|c| format_sig5(r.field(c).unwrap())).collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
            s
        }
    };
    match &args.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => out.write_all(body.as_bytes())?,
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SelfcheckOptions {
    pub quick: bool,
    /// Shifts M++ up and M−− down by 1e-3 before any comparison.
    pub inject_fault: bool,
}

fn outcome(name: &str, pass: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        pass,
        detail,
    }
}

fn outcome_of(name: &str, r: crate::Result<(bool, String)>) -> CheckOutcome {
    match r {
        Ok((pass, detail)) => outcome(name, pass, detail),
        Err(e) => outcome(name, false, format!("error: {e}")),
    }
}

fn selfcheck_coefficients(s: Branch, t_m: f64, fault: bool) -> crate::Result<ThermalCoefficients> {
    let mut k = coefficients(s, t_m, DEFAULT_COEFF_TOL)?;
    if fault {
        k.m_pp += 1e-3;
        k.m_mm -= 1e-3;
    }
    Ok(k)
}

fn check_clifford() -> (bool, String) {
    let d = dirac_matrices();
    let id = ComplexMatrix::identity(4);
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        for l in 0..3 {
            let anti = &(&d.alpha[k] * &d.alpha[l]) + &(&d.alpha[l] * &d.alpha[k]);
            let want = if k == l { id.scale(c(2.0, 0.0)) } else { ComplexMatrix::zeros(4) };
            worst = worst.max(anti.max_abs_diff(&want));
        }
        let ab = &(&d.alpha[k] * &d.beta) + &(&d.beta * &d.alpha[k]);
        worst = worst.max(ab.max_abs());
    }
    worst = worst.max((&d.beta * &d.beta).max_abs_diff(&id));
    (worst <= 1e-14, format!("max deviation {worst:.2e}"))
}

fn check_h_overlap() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for &(theta, phi, chi, mu) in &[(0.3, 1.1, 0.2, 0.0), (2.0, 4.0, FRAC_PI_4, FRAC_PI_2), (1.0, 0.5, 1.3, 2.5)] {
        let (hp, hm) = h_states(theta, phi, chi, mu);
        worst = worst.max((hp.inner(&hm) - c((2.0 * chi).cos(), 0.0)).norm());
    }
    (worst <= 1e-14, format!("max |<h+|h-> - cos 2chi| = {worst:.2e}"))
}

fn check_angular() -> (bool, String) {
    let grid = AngularGrid::default();
    let mut worst: f64 = 0.0;
    for &(chi, mu) in &[(FRAC_PI_4, 0.0), (FRAC_PI_8, FRAC_PI_2)] {
        let a = angular_coefficients(chi, mu);
        let pp = angular_average(HelicityPair::PlusPlus, chi, mu, &grid);
        let pm = angular_average(HelicityPair::PlusMinus, chi, mu, &grid);
        worst = worst
            .max((pp.get(0, 0) - c(a.n_plus, 0.0)).norm())
            .max((pp.get(1, 1) - c(a.n_minus, 0.0)).norm())
            .max((pm.get(0, 0) - a.nt_plus).norm())
            .max((pm.get(1, 1) - a.nt_minus).norm())
            .max(pp.get(0, 1).norm())
            .max(pm.get(0, 1).norm());
    }
    (worst <= 1e-10, format!("max deviation {worst:.2e}"))
}

fn check_pdf() -> crate::Result<(bool, String)> {
    let r = integrate_semi_infinite(|q| fermi_dirac_pdf(q).unwrap_or(f64::NAN), 1e-13, DEFAULT_BUDGET)?;
    let d = (r.value - 1.0).abs();
    Ok((d <= 1e-10, format!("|integral - 1| = {d:.2e}")))
}

fn check_table_rows(rows: &[usize], fault: bool) -> crate::Result<(bool, String)> {
    let mut bad = Vec::new();
    for &i in rows {
        let (t, pp, mm, pm) = TABLE_I[i];
        let k = selfcheck_coefficients(Branch::Positive, t, fault)?;
        for (name, got, want) in [("m_pp", k.m_pp, pp), ("m_mm", k.m_mm, mm), ("m_pm", k.m_pm, pm)] {
            if !table_cell_passes(got, want) {
                bad.push(format!("{name}(T_m={t:e}) = {got:.6e}, printed {want:e}"));
            }
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { format!("{} rows", rows.len()) } else { bad.join("; ") }))
}

fn check_trace(fault: bool) -> crate::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for t in [1e-3, 1.0, 1e2] {
        for s in [Branch::Negative, Branch::Positive] {
            let k = selfcheck_coefficients(s, t, fault)?;
            worst = worst.max((k.m_pp + k.m_mm - 1.0).abs());
        }
    }
    Ok((worst <= 1e-10, format!("max |M++ + M-- - 1| = {worst:.2e}")))
}

fn sample_points() -> [(Branch, f64, f64, f64); 3] {
    [
        (Branch::Positive, 1.0, FRAC_PI_4, 0.0),
        (Branch::Negative, 1e-3, FRAC_PI_8, FRAC_PI_2),
        (Branch::Positive, 1e2, FRAC_PI_8, FRAC_PI_2),
    ]
}

fn check_oracle(points: &[(Branch, f64, f64, f64)], fault: bool) -> crate::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &(s, t, chi, mu) in points {
        let p = ModelParams::new(s, t, chi, mu)?;
        let k = selfcheck_coefficients(s, t, fault)?;
        let closed = assemble_rho12(&p, &k)?.matrix;
        let brute = rho12_from_spinor_integral(&p, 1e-11)?.matrix;
        worst = worst.max(closed.max_abs_diff(&brute));
    }
    Ok((worst <= 1e-8, format!("max entrywise difference {worst:.2e} over {} points", points.len())))
}

fn check_spectra(points: &[(Branch, f64, f64, f64)], fault: bool) -> crate::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &(s, t, chi, mu) in points {
        let p = ModelParams::new(s, t, chi, mu)?;
        let k = selfcheck_coefficients(s, t, fault)?;
        let a = analyze(&p, &k)?;
        let mut closed = a.closed_eigs12.to_vec();
        closed.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in closed.iter().zip(&a.spectrum12.eigenvalues) {
            worst = worst.max((x - y).abs());
        }
        for (x, y) in a.closed_eigs1.iter().zip(&a.spectrum1.eigenvalues) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max eigenvalue difference {worst:.2e}")))
}

fn check_ppt(points: &[(Branch, f64, f64, f64)], fault: bool) -> crate::Result<(bool, String)> {
    let mut min: f64 = f64::INFINITY;
    let mut all_equal = true;
    for &(s, t, chi, mu) in points {
        let p = ModelParams::new(s, t, chi, mu)?;
        let k = selfcheck_coefficients(s, t, fault)?;
        let r = ppt_check(&assemble_rho12(&p, &k)?.matrix)?;
        min = min.min(r.min_pt_eigenvalue);
        all_equal &= r.pt_equals_rho;
    }
    Ok((min >= -1e-10 && all_equal, format!("min PT eigenvalue {min:.3e}, PT = rho: {all_equal}")))
}

/// Runs the invariant suite and reports every check.
pub fn run_selfcheck(opts: SelfcheckOptions) -> Vec<CheckOutcome> {
    let fault = opts.inject_fault;
    let pts = sample_points();
    let mut out = vec![
        { let (p, d) = check_clifford(); outcome("clifford relations", p, d) },
        { let (p, d) = check_h_overlap(); outcome("h-state overlap", p, d) },
        outcome_of("fermi-dirac normalization", check_pdf()),
        outcome_of("trace normalization", check_trace(fault)),
        outcome_of("spectra closed form vs numeric", check_spectra(&pts[..1], fault)),
    ];
    if opts.quick {
        out.push(outcome_of("table I spot row", check_table_rows(&[3], fault)));
        return out;
    }
    out.push({ let (p, d) = check_angular(); outcome("angular averages", p, d) });
    out.push(outcome_of("table I spot rows", check_table_rows(&[0, 3, 5, 7], fault)));
    out.push(outcome_of("spectra at sampled points", check_spectra(&pts, fault)));
    out.push(outcome_of("separability", check_ppt(&pts, fault)));
    out.push(outcome_of("closed form vs spinor quadrature", check_oracle(&pts, fault)));
    out
}

pub fn cmd_selfcheck(args: &SelfcheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let start = Instant::now();
    let results = run_selfcheck(SelfcheckOptions {
        quick: args.quick,
        inject_fault: args.inject_fault,
    });
    for r in &results {
        writeln!(out, "{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail)?;
    }
    writeln!(out, "{} checks in {:.2} s", results.len(), start.elapsed().as_secs_f64())?;
    let fails: Vec<String> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}: {}", r.name, r.detail))
        .collect();
    if fails.is_empty() {
        Ok(())
    } else {
        Err(CliError::SelfCheck(fails))
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Coeffs(a) => cmd_coeffs(a, out),
        Command::Table(a) => cmd_table(a, out),
        Command::State(a) => cmd_state(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Selfcheck(a) => cmd_selfcheck(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}
