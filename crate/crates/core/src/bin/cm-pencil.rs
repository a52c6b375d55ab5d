use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cm_pencil::cm::{self, bracket_ij, CMState, Family, InvariantVector, RANK1_TOL};
use cm_pencil::integrate::{integrate_flow, IntegrationConfig, Space, Start};
use cm_pencil::io::{self, PhasePointJson};
use cm_pencil::pencil::{HierarchyIndex, PencilSelector};
use cm_pencil::phase::{in_open_set_m, MembershipReport, DEFAULT_TOL};
use cm_pencil::reduction::{canonical_form, SectionPoint};
use cm_pencil::verify::{run_suite, Execution, Suite, VerifyConfig};
use cm_pencil::{Error, Result};

/// Largest tolerated `||[B, A] - mu||` along a locus trajectory.
const CONSTRAINT_LIMIT: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "cm-pencil", version, about = "Poisson pencil and Calogero-Moser reduction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded property suite and print a JSON report.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Falls back to CM_PENCIL_SEED when omitted.
        #[arg(long, env = "CM_PENCIL_SEED")]
        seed: u64,
        /// Defaults to the suite's own tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Parallel)]
        execution: Mode,
    },
    /// Integrate a hierarchy flow with RK4 and write a CSV trajectory.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        space: SpaceArg,
        #[arg(long, default_value_t = 2)]
        flow: usize,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Canonical section representative, invariants and rank-1 verdict of a pair.
    Reduce {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Recover (lambda, mu) from invariants.
    Invert {
        #[arg(long)]
        invariants: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the closed-form bracket table of the invariants.
    Brackets {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        table: Option<u8>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Parallel,
    Sequential,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    #[value(name = "P")]
    P,
    #[value(name = "Q")]
    Q,
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Verify {
            suite,
            n,
            trials,
            seed,
            tol,
            execution,
        } => {
            let suite: Suite = suite.parse()?;
            let cfg = VerifyConfig {
                n,
                trials,
                seed,
                tol: tol.unwrap_or(suite.default_tol()),
            };
            let exec = match execution {
                Mode::Parallel => Execution::Parallel,
                Mode::Sequential => Execution::Sequential,
            };
            let report = run_suite(suite, &cfg, exec)?;
            print!("{}", io::to_json_string(&report)?);
            Ok(if report.passed { Outcome::Ok } else { Outcome::Violation })
        }
        Command::Simulate {
            input,
            space,
            flow,
            t_end,
            dt,
            stride,
            output,
        } => {
            let (start, space) = match space {
                SpaceArg::Q => (Start::Locus(io::read_json::<CMState>(&input)?), Space::Locus),
                SpaceArg::P => {
                    let p = io::read_phase_point(&input)?;
                    let sp = match SectionPoint::new(p.clone()) {
                        Ok(sp) => sp,
                        Err(_) => canonical_form(&p, DEFAULT_TOL)?.0,
                    };
                    (Start::Section(sp), Space::Section)
                }
            };
            let n = match &start {
                Start::Locus(c) => c.n(),
                Start::Section(sp) => sp.n(),
            };
            let cfg = IntegrationConfig {
                k: HierarchyIndex::new(flow)?,
                t_end,
                dt,
                space,
                record_stride: stride,
            };
            let (samples, report) = integrate_flow(&start, &cfg)?;
            let file = File::create(&output).map_err(|e| Error::Io(format!("{}: {e}", output.display())))?;
            io::write_trajectory_csv(BufWriter::new(file), space, n, &samples)?;
            io::write_json(&io::sidecar_path(&output), &report)?;
            if let Some(reason) = &report.exit_reason {
                eprintln!("domain exit at t = {}: {reason}", report.exit_time.unwrap_or(f64::NAN));
            }
            let breach = report.constraint_residual.is_some_and(|r| !(r < CONSTRAINT_LIMIT));
            Ok(if report.domain_exit || breach {
                Outcome::Violation
            } else {
                Outcome::Ok
            })
        }
        Command::Reduce { input, output } => {
            let p = io::read_phase_point(&input)?;
            let (sp, g) = canonical_form(&p, DEFAULT_TOL)?;
            let ratio = cm::rank1_ratio(&p);
            let rank1 = ratio < RANK1_TOL;
            let state = if rank1 { cm::normalize_to_q(&p, RANK1_TOL).ok() } else { None };
            let out = ReduceOutput {
                section: PhasePointJson::from(sp.point()),
                pattern: sp.pattern().signs().to_vec(),
                g: cm_pencil::linalg::to_rows(&g),
                invariants: cm::invariants_map(&p),
                membership: in_open_set_m(&p, DEFAULT_TOL),
                rank1,
                rank1_ratio: ratio,
                cm_state: state,
            };
            io::write_json(&output, &out)?;
            Ok(Outcome::Ok)
        }
        Command::Invert { invariants, output } => {
            let raw: InvariantVector = io::read_json(&invariants)?;
            let v = InvariantVector::new(raw.i, raw.j)?;
            let q = cm::pi_inverse(&v, DEFAULT_TOL)?;
            io::write_json(&output, &q)?;
            Ok(Outcome::Ok)
        }
        Command::Brackets { n, table } => {
            if n == 0 {
                return Err(Error::InvalidConfig("n must be >= 1".into()));
            }
            let tables: Vec<u8> = table.map(|t| vec![t]).unwrap_or_else(|| vec![0, 1]);
            for t in tables {
                let s = if t == 0 { PencilSelector::P0 } else { PencilSelector::P1 };
                let names: Vec<(Family, usize, String)> = (1..=n)
                    .map(|k| (Family::I, k, format!("I{k}")))
                    .chain((1..=n).map(|k| (Family::J, k, format!("J{k}"))))
                    .collect();
                for (f, k, fname) in &names {
                    for (g, l, gname) in &names {
                        let poly = bracket_ij(s, (*f, *k), (*g, *l), n)?;
                        println!("{{{fname},{gname}}}_{t} = {poly}");
                    }
                }
            }
            Ok(Outcome::Ok)
        }
    }
}

#[derive(Serialize)]
struct ReduceOutput {
    section: PhasePointJson,
    pattern: Vec<i8>,
    g: Vec<Vec<f64>>,
    invariants: InvariantVector,
    membership: MembershipReport,
    rank1: bool,
    rank1_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cm_state: Option<CMState>,
}
