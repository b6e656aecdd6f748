use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use feddisc::config::ExperimentConfig;
use feddisc::experiment::{self, ReportFormat};
use feddisc::Error;

/// Federated sign-SGD autoencoder attack detection.
#[derive(Parser)]
#[command(name = "feddisc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess CSV files into a dataset file.
    Prep {
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run federated training.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select the threshold on the training split and score the test split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        head: Option<PathBuf>,
    },
    /// Train with and without gradient quantization and compare.
    Compare {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a run directory into plot-ready tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every configuration key with its default.
    Config,
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Prep { input, out, config } => {
            let s = experiment::cmd_prep(&input, &out, config.as_deref())?;
            println!(
                "wrote {}: n={} train={} test={} d={} sources={} imputed_cells={}",
                out.display(),
                s.n,
                s.n_train,
                s.n_test,
                s.dim,
                s.sources,
                s.imputed_cells
            );
        }
        Command::Train { data, config, out } => {
            let t = experiment::cmd_train(&data, config.as_deref(), &out)?;
            println!("rounds={} final_loss={}", t.rounds.len(), t.final_loss);
        }
        Command::Evaluate {
            model,
            data,
            out,
            config,
            head,
        } => {
            let ev = experiment::cmd_evaluate(&model, &data, &out, config.as_deref(), head.as_deref())?;
            let m = ev.report.metrics;
            println!(
                "tau={} accuracy={} precision={} recall={} f_score={}",
                ev.threshold.tau, m.accuracy, m.precision, m.recall, m.f_score
            );
            if let Some(sm) = ev.softmax {
                println!("softmax accuracy={}", sm.metrics.accuracy);
            }
        }
        Command::Compare { data, config, out } => {
            let r = experiment::cmd_compare(&data, config.as_deref(), &out)?;
            print!("{}", r.to_text());
        }
        Command::Report { input, format, out } => {
            let format = ReportFormat::parse(&format)?;
            for p in experiment::cmd_report(&input, format, out.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::Config => print!("{}", ExperimentConfig::template()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match experiment::threads_from_env() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(_) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
