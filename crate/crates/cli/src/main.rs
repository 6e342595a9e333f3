use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use punctkit::eval::SentenceFilter;
use punctkit::parser::ParserMode;
use punctkit::PunctClass;
use punctkit_cli::experiment::table_path;
use punctkit_cli::{cmd_eval, cmd_experiment, cmd_inject, cmd_parse, cmd_strip, cmd_train, CliError};

/// Punctuation robustness experiments for dependency parsers.
#[derive(Parser)]
#[command(name = "punctkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remove punctuation from a CoNLL file, lifting orphaned dependents.
    Strip {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "all")]
        punct_class: PunctClass,
    },
    /// Insert commas and dots at random, attached as the annotation scheme dictates.
    Inject {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Probability of a comma before each word.
        #[arg(long)]
        chi: f64,
        /// Probability of a dot after each word.
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "dots-commas")]
        punct_class: PunctClass,
    },
    /// Score a system file against gold, ignoring punctuation.
    Eval {
        gold: PathBuf,
        system: PathBuf,
        #[arg(long, default_value = "all")]
        punct_class: PunctClass,
        /// Only score sentences whose gold side passes this filter.
        #[arg(long)]
        filter: Option<SentenceFilter>,
        /// Write a JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the reference parser.
    Train {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "standard")]
        mode: ParserMode,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse a CoNLL file with a trained model.
    Parse {
        model: PathBuf,
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment manifest and write a JSON report plus a text table.
    Experiment {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Strip { input, out, punct_class } => {
            println!("{}", cmd_strip(&input, &out, punct_class)?);
        }
        Command::Inject {
            input,
            out,
            chi,
            delta,
            seed,
            punct_class,
        } => {
            println!("{}", cmd_inject(&input, &out, chi, delta, seed, punct_class)?);
        }
        Command::Eval {
            gold,
            system,
            punct_class,
            filter,
            out,
        } => {
            let summary = cmd_eval(&gold, &system, punct_class, filter, out.as_deref())?;
            println!("{} sentences, {}", summary.sentences, summary.scores);
        }
        Command::Train {
            input,
            out,
            mode,
            epochs,
            seed,
        } => {
            let meta = cmd_train(&input, &out, mode, epochs, seed)?;
            println!(
                "trained on {} sentences ({} non-projective skipped, {} unstrippable skipped)",
                meta.sentences, meta.skipped_nonprojective, meta.skipped_unstrippable
            );
        }
        Command::Parse { model, input, out } => {
            println!("parsed {} sentences", cmd_parse(&model, &input, &out)?);
        }
        Command::Experiment { config, out } => {
            let report = cmd_experiment(&config, &out)?;
            print!("{}", report.table());
            println!("report written to {} and {}", out.display(), table_path(&out).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
