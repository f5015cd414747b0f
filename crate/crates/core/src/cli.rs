//! Command-line driver and results file I/O.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::adapt::{run_study_with, AdaptConfig, Mode, StudyRecord};
use crate::error::{Error, Result};
use crate::problems::ProblemId;
use crate::spaces::ElementFamily;

pub const CSV_COLUMNS: [&str; 11] = [
    "iteration",
    "n_cells",
    "n_dofs",
    "eta_total",
    "osc_total",
    "flux_error",
    "postpressure_error",
    "tnorm_error",
    "effectivity",
    "n_marked",
    "endpoint_fraction",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Manufactured,
    LinearFault,
    FaultFlow,
}

impl From<ProblemArg> for ProblemId {
    fn from(p: ProblemArg) -> ProblemId {
        match p {
            ProblemArg::Manufactured => ProblemId::Manufactured,
            ProblemArg::LinearFault => ProblemId::LinearFault,
            ProblemArg::FaultFlow => ProblemId::FaultFlow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Rt1,
    Bdm1,
}

impl From<FamilyArg> for ElementFamily {
    fn from(f: FamilyArg) -> ElementFamily {
        match f {
            FamilyArg::Rt1 => ElementFamily::Rt1,
            FamilyArg::Bdm1 => ElementFamily::Bdm1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Uniform,
    Adaptive,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Uniform => Mode::Uniform,
            ModeArg::Adaptive => Mode::Adaptive,
        }
    }
}

fn parse_theta(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("theta must lie in (0, 1], got {v}"))
    }
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("alpha must be positive and finite, got {v}"))
    }
}

fn parse_mesh_size(s: &str) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0 && v.is_multiple_of(4) {
        Ok(v)
    } else {
        Err(format!("n must be a positive multiple of 4, got {v}"))
    }
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0 {
        Ok(v)
    } else {
        Err("value must be at least 1".into())
    }
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "faultflow",
    version,
    about = "Adaptive mixed FEM for Darcy flow with a fault"
)]
pub struct RunOptions {
    #[arg(long, value_enum, default_value = "manufactured")]
    pub problem: ProblemArg,
    #[arg(long, value_enum, default_value = "bdm1")]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value = "adaptive")]
    pub mode: ModeArg,
    #[arg(long, default_value = "0.5", allow_hyphen_values = true, value_parser = parse_theta)]
    pub theta: f64,
    /// Fault coefficient; ignored for `manufactured`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_alpha)]
    pub alpha: Option<f64>,
    /// Cells per side of the initial mesh.
    #[arg(long, default_value = "8", value_parser = parse_mesh_size)]
    pub n: usize,
    #[arg(long, default_value = "5", value_parser = parse_positive)]
    pub iters: usize,
    #[arg(long, default_value = "200000", value_parser = parse_positive)]
    pub max_dofs: usize,
    /// Results file; defaults to `results.csv` or `results.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub dump_mesh: bool,
    #[arg(long)]
    pub dump_matrix: bool,
    #[arg(long)]
    pub dump_estimator: bool,
}

impl RunOptions {
    pub fn config(&self) -> AdaptConfig {
        AdaptConfig {
            problem: self.problem.into(),
            family: self.family.into(),
            mode: self.mode.into(),
            theta: self.theta,
            initial_n: self.n,
            max_iterations: self.iters,
            max_dofs: self.max_dofs,
            alpha: self.alpha,
        }
    }

    pub fn output_path(&self) -> PathBuf {
        match &self.out {
            Some(p) => p.clone(),
            None if self.json => PathBuf::from("results.json"),
            None => PathBuf::from("results.csv"),
        }
    }
}

/// Fully resolved configuration echoed at the top of every results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub problem: String,
    pub family: String,
    pub mode: String,
    pub theta: f64,
    pub alpha: f64,
    pub n: usize,
    pub iters: usize,
    pub max_dofs: usize,
}

impl From<&AdaptConfig> for ResolvedConfig {
    fn from(c: &AdaptConfig) -> ResolvedConfig {
        ResolvedConfig {
            problem: c.problem.name().into(),
            family: c.family.name().into(),
            mode: c.mode.name().into(),
            theta: c.theta,
            alpha: c.resolved_alpha(),
            n: c.initial_n,
            iters: c.max_iterations,
            max_dofs: c.max_dofs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub config: ResolvedConfig,
    pub records: Vec<StudyRecord>,
}

/// 17 significant digits.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_csv<W: Write>(mut w: W, results: &ResultsFile) -> Result<()> {
    let c = &results.config;
    writeln!(w, "# problem = {}", c.problem)?;
    writeln!(w, "# family = {}", c.family)?;
    writeln!(w, "# mode = {}", c.mode)?;
    writeln!(w, "# theta = {}", fmt_f64(c.theta))?;
    writeln!(w, "# alpha = {}", fmt_f64(c.alpha))?;
    writeln!(w, "# n = {}", c.n)?;
    writeln!(w, "# iters = {}", c.iters)?;
    writeln!(w, "# max_dofs = {}", c.max_dofs)?;
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    out.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in &results.records {
        out.write_record([
            r.iteration.to_string(),
            r.n_cells.to_string(),
            r.n_dofs.to_string(),
            fmt_f64(r.eta_total),
            fmt_f64(r.osc_total),
            fmt_opt(r.flux_error),
            fmt_opt(r.postpressure_error),
            fmt_opt(r.tnorm_error),
            fmt_opt(r.effectivity),
            r.n_marked.to_string(),
            fmt_f64(r.endpoint_fraction),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value `{s}` for {name}")))
}

fn parse_opt(s: &str, name: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_field(s, name).map(Some)
    }
}

pub fn read_csv<R: Read>(r: R) -> Result<ResultsFile> {
    let mut reader = BufReader::new(r);
    let mut header = Vec::new();
    let mut body = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        match line.strip_prefix('#') {
            Some(rest) => {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("bad header line `{}`", line.trim())))?;
                header.push((k.trim().to_string(), v.trim().to_string()));
            }
            None => body.push_str(&line),
        }
    }
    let get = |key: &str| -> Result<&str> {
        header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse(format!("missing header `{key}`")))
    };
    let config = ResolvedConfig {
        problem: get("problem")?.into(),
        family: get("family")?.into(),
        mode: get("mode")?.into(),
        theta: parse_field(get("theta")?, "theta")?,
        alpha: parse_field(get("alpha")?, "alpha")?,
        n: parse_field(get("n")?, "n")?,
        iters: parse_field(get("iters")?, "iters")?,
        max_dofs: parse_field(get("max_dofs")?, "max_dofs")?,
    };

    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if columns != CSV_COLUMNS {
        return Err(Error::Parse(format!("unexpected columns {columns:?}")));
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        let f = |i: usize| &row[i];
        records.push(StudyRecord {
            iteration: parse_field(f(0), CSV_COLUMNS[0])?,
            n_cells: parse_field(f(1), CSV_COLUMNS[1])?,
            n_dofs: parse_field(f(2), CSV_COLUMNS[2])?,
            eta_total: parse_field(f(3), CSV_COLUMNS[3])?,
            osc_total: parse_field(f(4), CSV_COLUMNS[4])?,
            flux_error: parse_opt(f(5), CSV_COLUMNS[5])?,
            postpressure_error: parse_opt(f(6), CSV_COLUMNS[6])?,
            tnorm_error: parse_opt(f(7), CSV_COLUMNS[7])?,
            effectivity: parse_opt(f(8), CSV_COLUMNS[8])?,
            n_marked: parse_field(f(9), CSV_COLUMNS[9])?,
            endpoint_fraction: parse_field(f(10), CSV_COLUMNS[10])?,
        });
    }
    Ok(ResultsFile { config, records })
}

pub fn write_json<W: Write>(w: W, results: &ResultsFile) -> Result<()> {
    serde_json::to_writer_pretty(w, results).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_json<R: Read>(r: R) -> Result<ResultsFile> {
    serde_json::from_reader(r).map_err(|e| Error::Parse(e.to_string()))
}

/// Read either format, chosen by file extension.
pub fn read_results(path: &Path) -> Result<ResultsFile> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        read_json(file)
    } else {
        read_csv(file)
    }
}

fn dump_path(out: &Path, kind: &str, iteration: usize, ext: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    out.with_file_name(format!("{stem}.{kind}.{iteration:03}.{ext}"))
}

/// Run the configured study and write all outputs. Returns the results path.
pub fn run(options: &RunOptions) -> Result<PathBuf> {
    let config = options.config();
    config.validate()?;
    let out = options.output_path();
    let records = run_study_with(&config, |state| {
        if options.dump_mesh {
            let f = File::create(dump_path(&out, "mesh", state.iteration, "txt"))?;
            state.mesh.write_dump(BufWriter::new(f))?;
        }
        if options.dump_matrix {
            let f = File::create(dump_path(&out, "matrix", state.iteration, "coo"))?;
            state.system.matrix.write_coo(BufWriter::new(f))?;
        }
        if options.dump_estimator {
            let f = File::create(dump_path(&out, "estimator", state.iteration, "json"))?;
            serde_json::to_writer(BufWriter::new(f), state.report)
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
        Ok(())
    })?;
    let results = ResultsFile {
        config: ResolvedConfig::from(&config),
        records,
    };
    let mut w = BufWriter::new(File::create(&out)?);
    if options.json {
        write_json(&mut w, &results)?;
    } else {
        write_csv(&mut w, &results)?;
    }
    w.flush()?;
    Ok(out)
}
