use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use isogauge_cli::io::{obj_from_json, read_text, write_text};
use isogauge_cli::scenario::{run_file, RunOptions};
use isogauge_cli::suite::{verify, Mutation, SuiteOptions, CRITERIA};
use isogauge_cli::tolerances::Tolerances;
use isogauge_cli::{gallery, Report};

#[derive(Parser)]
#[command(name = "isogauge", version, about = "Run, verify and export isogauge constructions")]
struct Cli {
    /// Multiply every upper tolerance by this factor.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Refine scenario grids by this factor.
    #[arg(long, global = true, default_value_t = 1.0)]
    grid_scale: f64,
    /// Seed for randomly drawn samples.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Record runtimes in reports (makes them differ between runs).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run { scenario: PathBuf },
    /// Run the full invariant suite.
    VerifyAll {
        /// Restrict to these criteria (1-9).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
        /// Inject a fault the suite must detect.
        #[arg(long)]
        mutate_lelieuvre: bool,
    },
    /// Convert a grid or quad-net JSON file to OBJ.
    Export {
        input: PathBuf,
        /// Defaults to the input name with `.obj` inside --out.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in scenarios.
    Gallery,
}

fn finish(report: &Report, path: PathBuf) -> Result<ExitCode> {
    print!("{}", report.table());
    for n in &report.notes {
        println!("note: {n}");
    }
    write_text(&path, &report.to_json())?;
    println!("{} -> {}", if report.pass { "PASS" } else { "FAIL" }, path.display());
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let run_opts = RunOptions {
        tol_scale: cli.tol_scale,
        grid_scale: cli.grid_scale,
        out_dir: cli.out.clone(),
        timing: cli.timing,
    };
    match cli.command {
        Command::Run { scenario } => {
            let report = run_file(&scenario, &run_opts).with_context(|| format!("scenario {}", scenario.display()))?;
            let name = report.scenario["name"].as_str().unwrap_or("scenario").to_owned();
            finish(&report, cli.out.join(name).join("report.json"))
        }
        Command::VerifyAll { only, mutate_lelieuvre } => {
            let opts = SuiteOptions {
                tolerances: Tolerances::default().scaled(cli.tol_scale),
                seed: cli.seed,
                mutation: mutate_lelieuvre.then_some(Mutation::LelieuvreSignFlip),
                timing: true,
            };
            let criteria = only.unwrap_or_else(|| CRITERIA.to_vec());
            if let Some(k) = criteria.iter().find(|k| !CRITERIA.contains(k)) {
                anyhow::bail!("no criterion {k}; choose from 1-9");
            }
            let mut report = verify(&criteria, &opts);
            if !cli.timing {
                report.timing = None;
            }
            finish(&report, cli.out.join("verify-all.json"))
        }
        Command::Export { input, output } => {
            let mesh = obj_from_json(&read_text(&input)?).with_context(|| format!("reading {}", input.display()))?;
            let path = output.unwrap_or_else(|| {
                let stem = input.file_stem().map(|s| s.to_owned()).unwrap_or_else(|| "mesh".into());
                cli.out.join(stem).with_extension("obj")
            });
            write_text(&path, &mesh.text)?;
            println!(
                "{}: {} vertices, {} faces, {} masked faces omitted",
                path.display(),
                mesh.vertices,
                mesh.faces,
                mesh.masked_faces
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Gallery => {
            let report = gallery::gallery(&run_opts)?;
            finish(&report, cli.out.join("gallery.json"))
        }
    }
}
