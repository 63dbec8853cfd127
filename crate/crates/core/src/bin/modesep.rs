use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use modesep::harness::{
    brute_force_oracle, noise_sweep, separate, OracleGrid, ParamRange, PipelineConfig, ResultDoc,
    DEFAULT_REL_TOL,
};
use modesep::identify::{DegreePlan, StructureMode};
use modesep::recover::DEFAULT_K1_FLOOR;
use modesep::signalkit::{add_noise, csv, generate, Family, GeneratorSpec, Grid};
use modesep::{Error, Result};

/// Separate a two-component signal whose components obey first-order ODEs
/// with polynomial coefficients, via two sequential linear least-squares
/// steps.
#[derive(Parser)]
#[command(name = "modesep", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Lfm,
    Custom,
}

impl FamilyArg {
    fn family(self) -> Family {
        match self {
            FamilyArg::Gaussian => Family::Gaussian,
            FamilyArg::Lfm => Family::LfmChirp,
            FamilyArg::Custom => Family::Custom,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

#[derive(Clone, Copy, ValueEnum)]
enum MuArg {
    /// Scalar generators (mu = 1).
    #[value(name = "1")]
    One,
    /// Rotation generators (mu = i).
    #[value(name = "i")]
    I,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a plant F = a1 f1 + a2 f2 (optionally noisy) as CSV.
    Generate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// gaussian/lfm: alpha1,beta1,alpha2,beta2; custom: p1 coeffs '/' p2 coeffs.
        #[arg(long)]
        params: String,
        /// Mixing amplitudes a1,a2.
        #[arg(long, default_value = "1,1")]
        amps: String,
        #[arg(long, default_value_t = 2049)]
        n: usize,
        /// Relative noise level (of max |F|).
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the two-step separation on a signal CSV, write result JSON.
    Separate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Generator degree N1 (>= N2).
        #[arg(long)]
        n1: usize,
        /// Generator degree N2.
        #[arg(long)]
        n2: usize,
        #[arg(long, value_enum)]
        field: FieldArg,
        /// Known generator scale for both components.
        #[arg(long, value_enum, default_value = "1")]
        mu: MuArg,
        /// Rational second-step fit degrees Np,Nq (both components).
        #[arg(long)]
        rational: Option<String>,
        /// Solver truncation threshold.
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo noise sweep over a plant, write report CSV.
    Sweep {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        params: String,
        #[arg(long, default_value = "1,1")]
        amps: String,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        /// Comma-separated noise levels.
        #[arg(long)]
        levels: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Brute-force deviation-functional minimization on a parameter grid.
    Oracle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Per-parameter ranges lo:hi:count, comma-separated, '/' between components.
        #[arg(long)]
        ranges: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|cell| {
            cell.trim()
                .parse::<f64>()
                .map_err(|_| Error::InputFormat(format!("bad number {cell:?}")))
        })
        .collect()
}

fn parse_spec(family: Family, params: &str, amps: &str) -> Result<GeneratorSpec> {
    let amps = parse_list(amps)?;
    if amps.len() != 2 {
        return Err(Error::InputFormat("--amps takes exactly two values".into()));
    }
    match family {
        Family::Gaussian | Family::LfmChirp => {
            let p = parse_list(params)?;
            if p.len() != 4 {
                return Err(Error::InputFormat(
                    "--params takes alpha1,beta1,alpha2,beta2".into(),
                ));
            }
            let (alpha, beta) = ((p[0], p[2]), (p[1], p[3]));
            if family == Family::Gaussian {
                GeneratorSpec::gaussian(alpha, beta, (amps[0], amps[1]))
            } else {
                GeneratorSpec::lfm(alpha, beta, (amps[0], amps[1]))
            }
        }
        Family::Custom => {
            let (p1, p2) = params
                .split_once('/')
                .ok_or_else(|| Error::InputFormat("custom --params needs p1/p2".into()))?;
            GeneratorSpec::custom(parse_list(p1)?, parse_list(p2)?, (amps[0], amps[1]))
        }
    }
}

fn parse_ranges(text: &str) -> Result<(Vec<ParamRange>, Vec<ParamRange>)> {
    let (first, second) = text
        .split_once('/')
        .ok_or_else(|| Error::InputFormat("--ranges needs component1/component2".into()))?;
    let parse_side = |side: &str| -> Result<Vec<ParamRange>> {
        side.split(',')
            .map(|range| {
                let parts: Vec<&str> = range.trim().split(':').collect();
                if parts.len() != 3 {
                    return Err(Error::InputFormat(format!(
                        "range {range:?} is not lo:hi:count"
                    )));
                }
                let lo = parts[0]
                    .parse::<f64>()
                    .map_err(|_| Error::InputFormat(format!("bad lo in {range:?}")))?;
                let hi = parts[1]
                    .parse::<f64>()
                    .map_err(|_| Error::InputFormat(format!("bad hi in {range:?}")))?;
                let count = parts[2]
                    .parse::<usize>()
                    .map_err(|_| Error::InputFormat(format!("bad count in {range:?}")))?;
                if count == 0 || hi < lo {
                    return Err(Error::InputFormat(format!("empty range {range:?}")));
                }
                Ok(ParamRange::new(lo, hi, count))
            })
            .collect()
    };
    Ok((parse_side(first)?, parse_side(second)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            family,
            params,
            amps,
            n,
            noise,
            seed,
            out,
        } => {
            let family = family.family();
            let spec = parse_spec(family, &params, &amps)?;
            let grid = Grid::new(n)?;
            if family == Family::LfmChirp {
                let (f, _, _) = generate::<Complex64>(&spec, grid)?;
                let f = add_noise(&f, noise, seed);
                csv::write_signal(&out, &f)?;
            } else {
                let (f, _, _) = generate::<f64>(&spec, grid)?;
                let f = add_noise(&f, noise, seed);
                csv::write_signal(&out, &f)?;
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Separate {
            input,
            n1,
            n2,
            field,
            mu,
            rational,
            tol,
            out,
        } => {
            let plan = DegreePlan::new(n1, n2)?;
            let rational = match rational {
                None => None,
                Some(text) => {
                    let deg = parse_list(&text)?;
                    if deg.len() != 2 {
                        return Err(Error::InputFormat("--rational takes Np,Nq".into()));
                    }
                    Some(modesep::harness::RationalDegrees {
                        np1: deg[0] as usize,
                        nq1: deg[1] as usize,
                        np2: deg[0] as usize,
                        nq2: deg[1] as usize,
                    })
                }
            };
            let doc = match field {
                FieldArg::Real => {
                    let f = csv::read_signal_real(&input)?;
                    let mut cfg = PipelineConfig::<f64>::new(plan);
                    cfg.n = f.grid().n();
                    cfg.rel_tol = tol;
                    cfg.rational = rational;
                    if matches!(mu, MuArg::I) {
                        return Err(Error::InputFormat("mu = i requires --field complex".into()));
                    }
                    ResultDoc::from_result(&separate(&f, &cfg)?)
                }
                FieldArg::Complex => {
                    let f = csv::read_signal_complex(&input)?;
                    let mut cfg = PipelineConfig::<Complex64>::new(plan);
                    cfg.n = f.grid().n();
                    cfg.rel_tol = tol;
                    cfg.rational = rational;
                    if matches!(mu, MuArg::I) {
                        cfg.mu1 = Complex64::new(0.0, 1.0);
                        cfg.mu2 = Complex64::new(0.0, 1.0);
                    }
                    ResultDoc::from_result(&separate(&f, &cfg)?)
                }
            };
            std::fs::write(
                &out,
                serde_json::to_string_pretty(&doc).expect("serialize") + "\n",
            )?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Sweep {
            family,
            params,
            amps,
            n,
            levels,
            trials,
            seed,
            out,
        } => {
            let family = family.family();
            let spec = parse_spec(family, &params, &amps)?;
            let levels = parse_list(&levels)?;
            let (deg1, deg2) = spec.degrees();
            let plan = DegreePlan::new(deg1, deg2)?;
            let report = if family == Family::LfmChirp {
                let mut cfg = PipelineConfig::<Complex64>::new(plan);
                cfg.n = n;
                cfg.seed = seed;
                cfg.mu1 = Complex64::new(0.0, 1.0);
                cfg.mu2 = Complex64::new(0.0, 1.0);
                // the rotation structure is what keeps the complex-field
                // identification stable under noise
                cfg.structure = StructureMode::RotationGenerator;
                cfg.k1_floor = DEFAULT_K1_FLOOR;
                noise_sweep(&spec, &cfg, &levels, trials)?
            } else {
                let mut cfg = PipelineConfig::<f64>::new(plan);
                cfg.n = n;
                cfg.seed = seed;
                noise_sweep(&spec, &cfg, &levels, trials)?
            };
            report.write_csv(&out)?;
            for level in &report.levels {
                println!(
                    "sigma={}: median={} p90={} fail_rate={} trials={} ({} ms)",
                    level.sigma,
                    level.median_err,
                    level.p90_err,
                    level.fail_rate,
                    level.trials,
                    level.elapsed_ms
                );
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Oracle {
            input,
            family,
            ranges,
            out,
        } => {
            let family = family.family();
            let (ranges1, ranges2) = parse_ranges(&ranges)?;
            let grid_spec = OracleGrid {
                family,
                ranges1,
                ranges2,
            };
            let result = if family == Family::LfmChirp {
                let f = csv::read_signal_complex(&input)?;
                brute_force_oracle(&f, &grid_spec)?
            } else {
                let f = csv::read_signal_real(&input)?;
                brute_force_oracle(&f, &grid_spec)?
            };
            std::fs::write(
                &out,
                serde_json::to_string_pretty(&result).expect("serialize") + "\n",
            )?;
            println!(
                "best omega {} at {:?} ({} grid points)",
                result.best_value, result.best_params, result.grid_points
            );
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
