use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wtn_cli::config::{self, DEFAULT_SEEDS};
use wtn_cli::runner::{run_all, RunOptions, REPORT_FILE};
use wtn_core::evaluation::{QuadratureStudy, ShapeStudy, ShapeTarget};

#[derive(Parser)]
#[command(name = "wtn", version, about = "Weak TransNet experiment runner")]
struct Cli {
    /// Output directory for reports, CSV tables and field exports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run only this master seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Reference grid (`x,y,u` CSV) used for every job.
    #[arg(long = "ref", global = true)]
    reference: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a TOML config.
    Run { config: PathBuf },
    /// Print the problem catalog.
    List,
    /// Simpson vs Monte Carlo quadrature on the smooth Poisson problem.
    Quadstudy {
        #[arg(long, value_delimiter = ',', default_values_t = vec![17, 33, 65])]
        simpson: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![289, 1089, 4225])]
        mc: Vec<usize>,
    },
    /// Projection error of the neural basis across shape parameters.
    SweepGamma {
        #[arg(long, value_delimiter = ',', default_values_t = vec![200, 400])]
        m: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 1.0, 0.5, 0.1, 0.05, 0.03])]
        sigma_f: Vec<f64>,
        /// Gaussian bump `exp(−(x²+y²)/2σ²)` instead of the printed target.
        #[arg(long)]
        bump: bool,
    },
}

fn seeds(cli: &Cli) -> Vec<u64> {
    cli.seed.map_or_else(|| DEFAULT_SEEDS.to_vec(), |s| vec![s])
}

fn run(cli: &Cli) -> wtn_cli::Result<()> {
    match &cli.command {
        Command::List => print!("{}", wtn_cli::list_catalog()),
        Command::Run { config } => {
            let file = config::load(config)?;
            let mut jobs = file.jobs()?;
            if let (Some(s), Some(first)) = (cli.seed, jobs.first().map(|j| j.seed)) {
                jobs.retain(|j| j.seed == first);
                jobs.iter_mut().for_each(|j| j.seed = s);
            }
            let opts = RunOptions { out_dir: cli.out.clone(), jobs: cli.jobs, reference: cli.reference.clone() };
            let reports = run_all(&jobs, &opts)?;
            for r in &reports {
                let err = r.rel_l2.map_or("-".to_string(), |e| format!("{e:.3e}"));
                println!("{:<8} {:<18} seed {:<3} rel_l2 {err}", r.method, r.problem, r.seed);
            }
            eprintln!("{} reports appended to {}", reports.len(), cli.out.join(REPORT_FILE).display());
        }
        Command::Quadstudy { simpson, mc } => {
            let study = QuadratureStudy { simpson_points: simpson.clone(), mc_samples: mc.clone(), ..QuadratureStudy::default() };
            let rows = wtn_cli::quadrature_study(&study, &seeds(cli))?;
            std::fs::create_dir_all(&cli.out)?;
            let path = cli.out.join("quadstudy.csv");
            wtn_cli::write_quadrature_csv(&path, &rows)?;
            print!("{}", std::fs::read_to_string(&path)?);
        }
        Command::SweepGamma { m, sigma_f, bump } => {
            let study = ShapeStudy { target: if *bump { ShapeTarget::Bump } else { ShapeTarget::AsPrinted }, ..ShapeStudy::default() };
            let mut gammas = vec![0.1, 0.25, 0.5, 0.75];
            gammas.extend((2..=32).map(|k| k as f64 * 0.5));
            let curves = wtn_cli::gamma_sweep(&study, m, sigma_f, &gammas, &seeds(cli))?;
            std::fs::create_dir_all(&cli.out)?;
            wtn_cli::write_gamma_csv(&cli.out.join("sweep_gamma.csv"), &curves)?;
            for c in &curves {
                println!("M={:<4} σ_f={:<5} γ*={}", c.m, c.sigma_f, c.gamma_opt);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
