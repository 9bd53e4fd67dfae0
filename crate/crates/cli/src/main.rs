use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use polysep_cli::commands::{self, BoundsArgs, Exit, GridArgs, SeparateArgs, VerifyArgs};

#[derive(Parser)]
#[command(
    name = "polysep",
    version,
    about = "Polynomial separators for compact semialgebraic sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Search for p with p >= 1 on A and p <= 0 on B via the SOS hierarchy.
    #[command(allow_negative_numbers = true)]
    Separate {
        problem: PathBuf,
        #[arg(long)]
        degree_max: Option<u32>,
        #[arg(long)]
        level_max: Option<u32>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        margin: Option<f64>,
        /// Add the redundant ball generator n - |x|^2 to both sets.
        #[arg(long, value_enum)]
        ball: Option<OnOff>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a result file against a problem: certificates and a grid sweep.
    #[command(allow_negative_numbers = true)]
    Verify {
        problem: PathBuf,
        result: PathBuf,
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        cert_tol: f64,
    },
    /// Evaluate the a-priori degree bounds for a problem.
    #[command(allow_negative_numbers = true)]
    Bounds {
        problem: PathBuf,
        /// Lojasiewicz coefficient.
        #[arg(long = "c", default_value_t = 1.0)]
        loj_c: f64,
        /// Lojasiewicz exponent.
        #[arg(long = "T", default_value_t = 1.0)]
        t_exp: f64,
        /// Jackson constant.
        #[arg(long = "C", default_value_t = 1.0)]
        c_jackson: f64,
        #[arg(long, default_value_t = 201)]
        dist_resolution: usize,
        /// Target sup-norm error of the polynomial approximation.
        #[arg(long, default_value_t = 1.0)]
        err: f64,
        /// Also print the generators rescaled to box norm 1/2.
        #[arg(long)]
        normalize: bool,
    },
    /// Dump p and set membership on a 2-D grid as CSV.
    Grid {
        problem: PathBuf,
        result: PathBuf,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    // usage errors share exit code 1 with other input errors; 2 means "no separator"
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let code = if e.use_stderr() {
            Exit::InputError.code()
        } else {
            0
        };
        let _ = e.print();
        std::process::exit(code);
    });
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let code: Exit = match cli.command {
        Command::Separate {
            problem,
            degree_max,
            level_max,
            tol,
            margin,
            ball,
            out: path,
        } => {
            let args = SeparateArgs {
                problem,
                degree_max,
                level_max,
                tol,
                margin,
                ball: ball.map(|b| matches!(b, OnOff::On)),
                out: path,
            };
            commands::cmd_separate(&args, &mut out, &mut err)
        }
        Command::Verify {
            problem,
            result,
            resolution,
            tol,
            cert_tol,
        } => {
            let args = VerifyArgs {
                problem,
                result,
                resolution,
                tol,
                cert_tol,
            };
            commands::cmd_verify(&args, &mut out, &mut err)
        }
        Command::Bounds {
            problem,
            loj_c,
            t_exp,
            c_jackson,
            dist_resolution,
            err: target_err,
            normalize,
        } => {
            let args = BoundsArgs {
                problem,
                loj_c,
                t_exp,
                c_jackson,
                dist_resolution,
                target_err,
                normalize,
            };
            commands::cmd_bounds(&args, &mut out, &mut err)
        }
        Command::Grid {
            problem,
            result,
            resolution,
            out: path,
        } => {
            let args = GridArgs {
                problem,
                result,
                resolution,
                out: path,
            };
            commands::cmd_grid(&args, &mut out, &mut err)
        }
    };
    std::process::exit(code.code());
}
