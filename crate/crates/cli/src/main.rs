use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wavelab_cli::{config, CliError, Command, Format, Invocation, Source};

#[derive(Parser)]
#[command(name = "wavelab", version, about = "Riemann-wave superpositions for the 1D Euler system")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Commutator identities, quasi-rectifiability verdicts and rescalings.
    Analyze(RunArgs),
    /// Full, reduced and closed-form solutions.
    Simulate(RunArgs),
    /// Interaction index of a two-wave collision.
    Index(RunArgs),
    /// Truncated closure of the generated Lie algebra.
    Algebra(RunArgs),
    /// Fundamental forms and foliation of the superposition region.
    Geometry(RunArgs),
    /// Runs whichever command the scenario names.
    Run(RunArgs),
    /// Lists the built-in presets, or prints one as a scenario file.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory, overriding the scenario's.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding the scenario's.
    #[arg(long)]
    seed: Option<u64>,
    /// Formats to write (comma separated); all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

impl RunArgs {
    fn invocation(self, command: Option<Command>) -> Invocation {
        let source = match (self.config, self.preset) {
            (Some(p), _) => Source::Config(p),
            (None, Some(n)) => Source::Preset(n),
            (None, None) => unreachable!("clap requires one of --config and --preset"),
        };
        Invocation { command, source, out: self.out, seed: self.seed, formats: self.format }
    }
}

fn fail(e: &CliError) -> ExitCode {
    println!("{}", e.to_json());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.to_string().trim_end().to_string())),
    };
    let (command, args) = match cli.command {
        Sub::Analyze(a) => (Some(Command::Analyze), a),
        Sub::Simulate(a) => (Some(Command::Simulate), a),
        Sub::Index(a) => (Some(Command::Index), a),
        Sub::Algebra(a) => (Some(Command::Algebra), a),
        Sub::Geometry(a) => (Some(Command::Geometry), a),
        Sub::Run(a) => (None, a),
        Sub::Presets { name: None } => {
            for (name, _) in config::PRESETS {
                let s = config::preset(name).expect("built-in presets parse");
                println!("{name}\t{}", s.command.name());
            }
            return ExitCode::SUCCESS;
        }
        Sub::Presets { name: Some(name) } => {
            return match config::PRESETS.iter().find(|(n, _)| *n == name) {
                Some((_, text)) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                None => fail(&CliError::UnknownPreset(name)),
            };
        }
    };
    match wavelab_cli::execute(&args.invocation(command)) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            ExitCode::from(summary.exit_code as u8)
        }
        Err(e) => fail(&e),
    }
}
