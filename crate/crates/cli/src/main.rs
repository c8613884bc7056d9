use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use augmap_cli::config::{self, Config};
use augmap_cli::portrait::{self, OrbitSpec, PortraitStyle};
use augmap_cli::{analysis, simulate, verify};
use augmap_core::Point;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "augmap", version, about = "Augmented phase portraits for planar discrete maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibria, nullclines, root-curves, signed regions and invariance verdicts as JSON
    Analyze {
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Simulate the configured orbit batch and add convergence counts
        #[arg(long)]
        convergence: bool,
    },
    /// Render the augmented phase portrait as SVG
    Portrait {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Orbit overlay `x,y,steps`; repeatable
        #[arg(long = "orbits", value_parser = parse_orbit)]
        orbits: Vec<OrbitSpec>,
    },
    /// Run the checks for the configured model; exit 1 if any fails
    Verify {
        config: PathBuf,
        /// Write the full JSON report here
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Iterate the map and write the orbit as CSV
    Simulate {
        config: PathBuf,
        #[arg(long, value_parser = parse_point)]
        start: Point,
        #[arg(long)]
        steps: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated values, got {}", v.len()));
    }
    Ok(v)
}

fn parse_point(s: &str) -> Result<Point, String> {
    let v = parse_floats(s, 2)?;
    Ok(Point::new(v[0], v[1]))
}

fn parse_orbit(s: &str) -> Result<OrbitSpec, String> {
    let v = parse_floats(s, 3)?;
    if v[2] < 0.0 || v[2].fract() != 0.0 {
        return Err(format!("step count must be a nonnegative integer, got {}", v[2]));
    }
    Ok(OrbitSpec { start: Point::new(v[0], v[1]), steps: v[2] as usize })
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Config, ExitCode> {
    config::load(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze { config, out, convergence } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let a = analysis::run(&cfg);
            let report = analysis::report(&cfg, &a, convergence || cfg.orbits.is_some());
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            write_or_print(out.as_deref(), &json)?;
        }
        Command::Portrait { config, out, orbits } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let a = analysis::run(&cfg);
            let svg = portrait::render(&cfg.map, &a, cfg.bbox, &orbits, &PortraitStyle::default());
            std::fs::write(&out, svg).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Verify { config, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let report = verify::run(&cfg);
            print!("{}", report.human());
            if let Some(p) = out {
                let mut json = serde_json::to_string_pretty(&report)?;
                json.push('\n');
                std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?;
            }
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Simulate { config, start, steps, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            if !start.is_finite() {
                bail!("start point must be finite");
            }
            let (csv, orbit) = simulate::orbit_csv(&cfg.map, start, steps);
            write_or_print(out.as_deref(), &csv)?;
            if let Some(i) = orbit.non_finite_at {
                eprintln!("orbit stopped at step {i}: non-finite iterate");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
