//! Command-line front end. Parses a JSON config plus mirroring flags,
//! dispatches scans, verifications, graph analyses, and the full criterion
//! battery, and emits CSV/JSON/DOT artifacts with a metadata header.
//! Exit codes: 0 all requested checks pass, 2 a check failed, 1 usage or
//! runtime error.

use crate::analysis::{
    check_gauge_invariance, free_fermion_energy, random_model, scan_flux, verify_remarks,
    verify_theorem, FluxCurve, RandomCouplings, TheoremOutcome, TheoremReport, ENDPOINT_TIE_TOL,
    REMARK_IDS,
};
use crate::basis::{enumerate_basis, FockBasis};
use crate::config::{
    parse_config, InteractionSpec, Metadata, RealSpec, RunConfig,
};
use crate::hamiltonian::build_hamiltonian;
use crate::hopgraph::{
    build_graph, check_equivalence_to_all_negative, cycle_fluxes, edges_csv, graph_report,
    minimal_cycle_fluxes, to_dot, CycleFlux, EquivalenceReport, GraphReport,
};
use crate::model::{make_uniform_gauge, Interaction, RingModel, Sector};
use crate::solver::spin_resolved_energies;
use crate::suite::{format_table, run_full_suite};
use crate::{FluxRingError, Result, TWO_PI};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

fn io_err(path: &Path, e: std::io::Error) -> FluxRingError {
    FluxRingError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(
    name = "fluxring",
    version,
    about = "Ground-state energy versus magnetic flux for interacting fermion rings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags mirror the config-file keys one-to-one; flags override the file.
#[derive(Args, Debug, Default)]
struct CommonFlags {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ring length (system.L).
    #[arg(long = "L")]
    length: Option<usize>,
    /// Hop magnitude: number or per-bond comma list (system.t).
    #[arg(long)]
    t: Option<String>,
    /// Hop phase in radians: number or per-bond comma list (system.theta).
    #[arg(long)]
    theta: Option<String>,
    /// Interaction: number, "inf", or per-site comma list (system.U).
    #[arg(long = "U")]
    interaction: Option<String>,
    /// On-site potential: number or per-site comma list (system.v).
    #[arg(long)]
    v: Option<String>,
    /// Electron count; the sector splits it as (floor, ceil).
    #[arg(long)]
    ne: Option<usize>,
    /// Spin-up count (sector.n_up).
    #[arg(long)]
    nup: Option<usize>,
    /// Spin-down count (sector.n_down).
    #[arg(long)]
    ndown: Option<usize>,
    /// Flux-grid size (scan.grid_points).
    #[arg(long)]
    grid_points: Option<usize>,
    /// Extremum refinement tolerance (scan.refine_tol).
    #[arg(long)]
    refine_tol: Option<f64>,
    /// Extremum deduplication tolerance (scan.dedup_tol).
    #[arg(long)]
    dedup_tol: Option<f64>,
    /// Period residual tolerance (scan.period_tol).
    #[arg(long)]
    period_tol: Option<f64>,
    /// Dense-solver dimension cutoff (solver.dense_threshold).
    #[arg(long)]
    dense_threshold: Option<usize>,
    /// Eigenvalue residual tolerance (solver.residual_tol).
    #[arg(long)]
    residual_tol: Option<f64>,
    /// Iterative-solver restart cap (solver.max_restarts).
    #[arg(long)]
    max_restarts: Option<usize>,
    /// Random seed, recorded in every output.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace t, U, v with the seeded random ensemble.
    #[arg(long)]
    random_couplings: bool,
    /// Worker count, accepted for compatibility; execution is sequential.
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_entries(s: &str, key: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| {
                FluxRingError::InvalidConfig(format!("{key}: {tok:?} is not a number"))
            })
        })
        .collect()
}

fn parse_real_flag(s: &str, key: &str) -> Result<RealSpec> {
    let entries = parse_entries(s, key)?;
    Ok(if entries.len() == 1 && !s.contains(',') {
        RealSpec::Scalar(entries[0])
    } else {
        RealSpec::PerEntry(entries)
    })
}

fn parse_interaction_flag(s: &str, key: &str) -> Result<InteractionSpec> {
    let parse_one = |tok: &str, key: &str| -> Result<Interaction> {
        let tok = tok.trim();
        if tok == "inf" {
            return Ok(Interaction::Infinite);
        }
        tok.parse::<f64>().map(Interaction::Finite).map_err(|_| {
            FluxRingError::InvalidConfig(format!(
                "{key}: {tok:?} is not a number and not \"inf\""
            ))
        })
    };
    if s.contains(',') {
        let list = s
            .split(',')
            .enumerate()
            .map(|(i, tok)| parse_one(tok, &format!("{key}[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        Ok(InteractionSpec::PerSite(list))
    } else {
        Ok(InteractionSpec::Scalar(parse_one(s, key)?))
    }
}

impl CommonFlags {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => parse_config(&fs::read_to_string(p).map_err(|e| io_err(p, e))?)?,
            None => RunConfig::default(),
        };
        if let Some(l) = self.length {
            cfg.system.length = l;
        }
        if let Some(s) = &self.t {
            cfg.system.t = parse_real_flag(s, "--t")?;
        }
        if let Some(s) = &self.theta {
            cfg.system.theta = parse_real_flag(s, "--theta")?;
        }
        if let Some(s) = &self.interaction {
            cfg.system.u = parse_interaction_flag(s, "--U")?;
        }
        if let Some(s) = &self.v {
            cfg.system.v = parse_real_flag(s, "--v")?;
        }
        if let Some(n) = self.ne {
            cfg.sector.n_up = n / 2;
            cfg.sector.n_down = n - n / 2;
        }
        if let Some(n) = self.nup {
            cfg.sector.n_up = n;
        }
        if let Some(n) = self.ndown {
            cfg.sector.n_down = n;
        }
        if self.grid_points.is_some() {
            cfg.scan.grid_points = self.grid_points;
        }
        if let Some(x) = self.refine_tol {
            cfg.scan.refine_tol = x;
        }
        if let Some(x) = self.dedup_tol {
            cfg.scan.dedup_tol = x;
        }
        if let Some(x) = self.period_tol {
            cfg.scan.period_tol = x;
        }
        if let Some(x) = self.dense_threshold {
            cfg.solver.dense_threshold = x;
        }
        if let Some(x) = self.residual_tol {
            cfg.solver.residual_tol = x;
        }
        if let Some(x) = self.max_restarts {
            cfg.solver.max_restarts = x;
        }
        if let Some(x) = self.seed {
            cfg.seed = x;
        }
        Ok(cfg)
    }

    fn model_and_sector(&self, cfg: &RunConfig) -> Result<(RingModel, Sector)> {
        let model = if self.random_couplings {
            random_model(cfg.system.length, cfg.seed, &RandomCouplings::default())?
        } else {
            cfg.build_model()?
        };
        let sector = cfg.sector_of(&model)?;
        Ok((model, sector))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the total flux and write the energy curve as CSV.
    Scan {
        #[command(flatten)]
        flags: CommonFlags,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the optimal-flux prediction for one model and sector.
    VerifyTheorem {
        #[command(flatten)]
        flags: CommonFlags,
        /// JSON output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the side statements (all of them when --ids is omitted).
    VerifyRemarks {
        #[command(flatten)]
        flags: CommonFlags,
        /// Comma-separated check ids, e.g. "1a,2,5".
        #[arg(long)]
        ids: Option<String>,
        /// JSON output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the hopping graph, its cycle fluxes, and the all-negative
    /// equivalence check at fixed flux.
    Graph {
        #[command(flatten)]
        flags: CommonFlags,
        /// Total flux through the ring.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// DOT output path.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Edge-list CSV output path.
        #[arg(long)]
        edges: Option<PathBuf>,
        /// JSON cycle report path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the basis as CSV (index, up bits, down bits).
        #[arg(long)]
        dump_basis: Option<PathBuf>,
        /// Write the matrix in coordinate text (row, col, re, im).
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
    /// Compare ground energies across gauge choices at fixed total flux.
    GaugeCheck {
        #[command(flatten)]
        flags: CommonFlags,
        /// Total flux through the ring.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// Random gauges beyond the deterministic pair.
        #[arg(long, default_value_t = 4)]
        trials: usize,
        /// JSON output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Free-fermion reference energies (zero interaction, uniform t).
    Oracle {
        /// Ring length.
        #[arg(long = "L")]
        length: usize,
        /// Uniform hop magnitude.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Electron count; the sector splits it as (floor, ceil).
        #[arg(long)]
        ne: Option<usize>,
        /// Spin-up count.
        #[arg(long)]
        nup: Option<usize>,
        /// Spin-down count.
        #[arg(long)]
        ndown: Option<usize>,
        /// Evaluate at a single flux instead of a grid.
        #[arg(long)]
        phi: Option<f64>,
        /// Grid size when no --phi is given.
        #[arg(long, default_value_t = 96)]
        grid: usize,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spin-resolved ground energies at fixed flux.
    Spin {
        #[command(flatten)]
        flags: CommonFlags,
        /// Total flux through the ring.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// JSON output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full thirteen-criterion verification battery.
    Suite {
        /// Seed for the random-model batteries.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| FluxRingError::Io(format!("serialization failed: {e}")))
}

fn sector_label(sector: &Sector) -> String {
    format!("{}u{}d", sector.n_up, sector.n_down)
}

/// CSV with the metadata header, columns phi, energy, sector, method.
/// Floats go through the shortest round-trip formatting, so reading the
/// file back reproduces the curve bit-for-bit.
pub fn curve_to_csv(meta: &Metadata, curve: &FluxCurve, sector: &str, method: &str) -> String {
    let mut out = meta.comment_lines("#");
    out.push_str("phi,energy,sector,method\n");
    for (phi, energy) in curve.grid.iter().zip(&curve.energies) {
        out.push_str(&format!("{phi},{energy},{sector},{method}\n"));
    }
    out
}

/// Parse a curve CSV back into (grid, energies), skipping comments and the
/// header row.
pub fn curve_from_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut grid = Vec::new();
    let mut energies = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("phi,") {
            continue;
        }
        let mut cols = line.split(',');
        let (p, e) = (cols.next(), cols.next());
        let parse = |tok: Option<&str>| -> Result<f64> {
            tok.and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| FluxRingError::Io(format!("bad CSV row: {line:?}")))
        };
        grid.push(parse(p)?);
        energies.push(parse(e)?);
    }
    Ok((grid, energies))
}

#[derive(Serialize)]
struct NamedCheck {
    name: String,
    predicted: String,
    measured: String,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct TheoremArtifact {
    metadata: Metadata,
    checks: Vec<NamedCheck>,
    report: TheoremReport,
}

fn theorem_checks(report: &TheoremReport) -> Vec<NamedCheck> {
    let fmt_phis = |phis: &[f64]| {
        let items: Vec<String> = phis.iter().map(|p| format!("{p:.6}")).collect();
        format!("[{}]", items.join(", "))
    };
    let measured: Vec<f64> = report.measured.iter().map(|e| e.phi).collect();
    let mut checks = vec![NamedCheck {
        name: format!(
            "global minimizers {} the predicted set ({})",
            if report.equality { "equal" } else { "contain" },
            report.regime
        ),
        predicted: fmt_phis(&report.predicted),
        measured: if report.outcome == TheoremOutcome::DegenerateConstant {
            "constant energy curve".into()
        } else {
            fmt_phis(&measured)
        },
        tolerance: report.phi_tolerance,
        pass: report.outcome != TheoremOutcome::Failed,
    }];
    if let Some(gap) = report.endpoint_gap {
        checks.push(NamedCheck {
            name: "energies at flux 0 and pi tie".into(),
            predicted: "|E(0) - E(pi)| = 0".into(),
            measured: format!("{gap:.3e}"),
            tolerance: ENDPOINT_TIE_TOL,
            pass: gap <= ENDPOINT_TIE_TOL,
        });
    }
    checks
}

#[derive(Serialize)]
struct GraphArtifact {
    metadata: Metadata,
    phi: f64,
    summary: GraphReport,
    fundamental_cycles: Vec<CycleFlux>,
    minimal_cycles: Vec<CycleFlux>,
    all_negative_equivalence: EquivalenceReport,
}

fn dump_basis_csv(basis: &FockBasis, l: usize) -> String {
    let bits = |mask: u64| -> String {
        (0..l)
            .map(|x| if mask >> x & 1 == 1 { '1' } else { '0' })
            .collect()
    };
    let mut out = String::from("index,up,down\n");
    for i in 0..basis.dim() {
        let s = basis.state(i);
        out.push_str(&format!("{i},{},{}\n", bits(s.up_mask), bits(s.down_mask)));
    }
    out
}

fn dump_matrix_coordinate(h: &crate::hamiltonian::SparseHermitian) -> String {
    let mut out = String::from("row,col,re,im\n");
    for (i, &d) in h.diag.iter().enumerate() {
        out.push_str(&format!("{i},{i},{d},0\n"));
    }
    for i in 0..h.dim {
        for k in h.row_ptr[i]..h.row_ptr[i + 1] {
            out.push_str(&format!(
                "{i},{},{},{}\n",
                h.col_idx[k],
                h.values[k].re,
                h.values[k].im
            ));
        }
    }
    out
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Scan { flags, out } => {
            let cfg = flags.load()?;
            let (model, sector) = flags.model_and_sector(&cfg)?;
            let spec = cfg.scan_spec();
            let curve = scan_flux(&model, &sector, &spec)?;
            let basis_dim = enumerate_basis(&sector)?.dim();
            let method = if basis_dim <= spec.solver.dense_threshold {
                "dense"
            } else {
                "lanczos"
            };
            let meta = Metadata::for_config(&cfg);
            let csv = curve_to_csv(&meta, &curve, &sector_label(&sector), method);
            emit(&out, &csv)?;
            if out.is_some() {
                let minima: Vec<String> = curve
                    .minimizers
                    .iter()
                    .map(|m| format!("{:.6}", m.phi))
                    .collect();
                println!(
                    "scan: {} points, minimizers at [{}]",
                    curve.grid.len(),
                    minima.join(", ")
                );
            }
            Ok(0)
        }
        Command::VerifyTheorem { flags, out } => {
            let cfg = flags.load()?;
            let (model, sector) = flags.model_and_sector(&cfg)?;
            let report = verify_theorem(&model, &sector, &cfg.scan_spec())?;
            let artifact = TheoremArtifact {
                metadata: Metadata::for_config(&cfg),
                checks: theorem_checks(&report),
                report,
            };
            let pass = artifact.checks.iter().all(|c| c.pass);
            emit(&out, &json_text(&artifact)?)?;
            Ok(if pass { 0 } else { 2 })
        }
        Command::VerifyRemarks { flags, ids, out } => {
            let cfg = flags.load()?;
            let selected: Vec<String> = match ids {
                Some(s) => s.split(',').map(|t| t.trim().to_string()).collect(),
                None => REMARK_IDS.iter().map(|s| s.to_string()).collect(),
            };
            let report = verify_remarks(&selected, &cfg.solver_opts())?;
            #[derive(Serialize)]
            struct RemarksArtifact {
                metadata: Metadata,
                checks: Vec<NamedCheck>,
                all_pass: bool,
            }
            let artifact = RemarksArtifact {
                metadata: Metadata::for_config(&cfg),
                checks: report
                    .checks
                    .iter()
                    .map(|c| NamedCheck {
                        name: format!("({}) {} — {}", c.id, c.title, c.instance),
                        predicted: c.predicted.clone(),
                        measured: c.measured.clone(),
                        tolerance: c.tolerance,
                        pass: c.pass,
                    })
                    .collect(),
                all_pass: report.all_pass,
            };
            emit(&out, &json_text(&artifact)?)?;
            Ok(if report.all_pass { 0 } else { 2 })
        }
        Command::Graph {
            flags,
            phi,
            dot,
            edges,
            out,
            dump_basis,
            dump_matrix,
        } => {
            let cfg = flags.load()?;
            let (model, sector) = flags.model_and_sector(&cfg)?;
            let basis = enumerate_basis(&sector)?;
            let gauge = make_uniform_gauge(&model, phi);
            let g = build_graph(&model, &gauge, &basis)?;
            let meta = Metadata::for_config(&cfg);
            if let Some(p) = &dot {
                fs::write(p, format!("{}{}", meta.comment_lines("//"), to_dot(&g)))
                    .map_err(|e| io_err(p, e))?;
            }
            if let Some(p) = &edges {
                fs::write(p, format!("{}{}", meta.comment_lines("#"), edges_csv(&g)))
                    .map_err(|e| io_err(p, e))?;
            }
            if let Some(p) = &dump_basis {
                fs::write(p, dump_basis_csv(&basis, model.length)).map_err(|e| io_err(p, e))?;
            }
            if let Some(p) = &dump_matrix {
                let h = build_hamiltonian(&model, &gauge, &basis)?;
                fs::write(p, dump_matrix_coordinate(&h)).map_err(|e| io_err(p, e))?;
            }
            let artifact = GraphArtifact {
                metadata: meta,
                phi,
                summary: graph_report(&g)?,
                fundamental_cycles: cycle_fluxes(&g)?,
                minimal_cycles: minimal_cycle_fluxes(&g)?,
                all_negative_equivalence: check_equivalence_to_all_negative(
                    &model,
                    &gauge,
                    &basis,
                    &cfg.solver_opts(),
                )?,
            };
            emit(&out, &json_text(&artifact)?)?;
            Ok(0)
        }
        Command::GaugeCheck {
            flags,
            phi,
            trials,
            out,
        } => {
            let cfg = flags.load()?;
            let (model, sector) = flags.model_and_sector(&cfg)?;
            let report = check_gauge_invariance(&model, &sector, phi, trials, &cfg.solver_opts())?;
            #[derive(Serialize)]
            struct GaugeArtifact {
                metadata: Metadata,
                report: crate::analysis::GaugeReport,
            }
            let pass = report.pass;
            let artifact = GaugeArtifact {
                metadata: Metadata::for_config(&cfg),
                report,
            };
            emit(&out, &json_text(&artifact)?)?;
            Ok(if pass { 0 } else { 2 })
        }
        Command::Oracle {
            length,
            t,
            ne,
            nup,
            ndown,
            phi,
            grid,
            out,
        } => {
            let (n_up, n_down) = match (nup, ndown, ne) {
                (Some(u), Some(d), _) => (u, d),
                (None, None, Some(n)) => (n / 2, n - n / 2),
                _ => {
                    return Err(FluxRingError::InvalidConfig(
                        "oracle needs --ne or both --nup and --ndown".into(),
                    ))
                }
            };
            let cfg = RunConfig::default();
            let meta = Metadata::for_config(&cfg);
            let sector = format!("{n_up}u{n_down}d");
            match phi {
                Some(phi) => {
                    let energy = free_fermion_energy(length, t, phi, n_up, n_down)?;
                    #[derive(Serialize)]
                    struct OracleValue {
                        metadata: Metadata,
                        phi: f64,
                        energy: f64,
                    }
                    emit(
                        &out,
                        &json_text(&OracleValue {
                            metadata: meta,
                            phi,
                            energy,
                        })?,
                    )?;
                }
                None => {
                    let mut csv = meta.comment_lines("#");
                    csv.push_str("phi,energy,sector,method\n");
                    for k in 0..grid.max(1) {
                        let phi = TWO_PI * k as f64 / grid.max(1) as f64;
                        let energy = free_fermion_energy(length, t, phi, n_up, n_down)?;
                        csv.push_str(&format!("{phi},{energy},{sector},oracle\n"));
                    }
                    emit(&out, &csv)?;
                }
            }
            Ok(0)
        }
        Command::Spin { flags, phi, out } => {
            let cfg = flags.load()?;
            let (model, sector) = flags.model_and_sector(&cfg)?;
            let report = spin_resolved_energies(
                &model,
                &make_uniform_gauge(&model, phi),
                sector.n_e(),
                &cfg.solver_opts(),
            )?;
            #[derive(Serialize)]
            struct SpinArtifact {
                metadata: Metadata,
                phi: f64,
                report: crate::solver::SpinResolvedReport,
            }
            let artifact = SpinArtifact {
                metadata: Metadata::for_config(&cfg),
                phi,
                report,
            };
            emit(&out, &json_text(&artifact)?)?;
            Ok(0)
        }
        Command::Suite { seed, out } => {
            let report = run_full_suite(seed)?;
            print!("{}", format_table(&report));
            if let Some(p) = &out {
                let mut cfg = RunConfig::default();
                cfg.seed = seed;
                #[derive(Serialize)]
                struct SuiteArtifact {
                    metadata: Metadata,
                    report: crate::suite::SuiteReport,
                }
                let artifact = SuiteArtifact {
                    metadata: Metadata::for_config(&cfg),
                    report: report.clone(),
                };
                fs::write(p, json_text(&artifact)?).map_err(|e| io_err(p, e))?;
            }
            Ok(if report.all_pass { 0 } else { 2 })
        }
    }
}

/// Entry point: parse the process arguments and dispatch. Returns the exit
/// code (0 pass, 2 check failure, 1 usage/runtime error).
pub fn run_args() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
