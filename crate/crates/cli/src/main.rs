use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qap_core::cli_io::{
    emit, emit_error, load_config, parse_occupations, resolve_config_path, run, write_output, Command, Format,
    Overrides, System, CONFIG_DIR_ENV,
};
use qap_core::QapError;

#[derive(Parser)]
#[command(name = "qap", version, about = "Stationary quantum actions of the relativistic particle and the closed string")]
struct Cli {
    #[command(subcommand)]
    target: Target,
}

#[derive(Subcommand)]
enum Target {
    /// Relativistic particle runs.
    Particle {
        command: ParticleCommand,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-string runs.
    String {
        command: StringCommand,
        /// Comma-separated mode occupations, e.g. "0,1,0".
        #[arg(long)]
        occupations: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the `[sweep]` section of a config.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ParticleCommand {
    Classical,
    Phase,
    Action,
    Stationary,
}

#[derive(Clone, Copy, ValueEnum)]
enum StringCommand {
    Phase,
    Action,
    Stationary,
    Spectrum,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// TOML run description.
    #[arg(long)]
    config: PathBuf,
    /// Directory searched for relative config paths.
    #[arg(long, env = CONFIG_DIR_ENV)]
    config_dir: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Concurrent sweep entries.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl From<ParticleCommand> for Command {
    fn from(c: ParticleCommand) -> Self {
        match c {
            ParticleCommand::Classical => Command::Classical,
            ParticleCommand::Phase => Command::Phase,
            ParticleCommand::Action => Command::Action,
            ParticleCommand::Stationary => Command::Stationary,
        }
    }
}

impl From<StringCommand> for Command {
    fn from(c: StringCommand) -> Self {
        match c {
            StringCommand::Phase => Command::Phase,
            StringCommand::Action => Command::Action,
            StringCommand::Stationary => Command::Stationary,
            StringCommand::Spectrum => Command::Spectrum,
        }
    }
}

fn execute(common: &Common, mut overrides: Overrides) -> Result<i32, (QapError, Format)> {
    let fallback = match common.format {
        Some(FormatArg::Csv) => Format::Csv,
        _ => Format::Json,
    };
    overrides.format = common.format.map(|f| match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    });
    overrides.output_path = common.out.as_ref().map(|p| p.display().to_string());

    let path = resolve_config_path(&common.config, common.config_dir.as_deref());
    let config = load_config(&path, &overrides).map_err(|e| (e, fallback))?;
    let format = config.output.format;
    let output = run(&config, common.workers).map_err(|e| (e, format))?;
    let bytes = emit(&output, format);
    match &config.output.path {
        Some(p) => write_output(&bytes, p.as_ref()).map_err(|e| (e, format))?,
        None => std::io::stdout().write_all(&bytes).map_err(|e| (QapError::from(e), format))?,
    }
    for record in &output.records {
        if let Err(e) = &record.outcome {
            eprintln!("qap: entry {} failed: {}", record.index, e.message);
        }
    }
    Ok(output.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, overrides) = match &cli.target {
        Target::Particle { command, common } => (
            common,
            Overrides { system: Some(System::Particle), command: Some((*command).into()), ..Overrides::default() },
        ),
        Target::String { command, occupations, common } => {
            let occupations = match occupations.as_deref().map(parse_occupations).transpose() {
                Ok(o) => o,
                Err(e) => {
                    let _ = std::io::stderr().write_all(&emit_error(&e, Format::Json));
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            (
                common,
                Overrides {
                    system: Some(System::String),
                    command: Some((*command).into()),
                    occupations,
                    ..Overrides::default()
                },
            )
        }
        Target::Sweep { common } => {
            (common, Overrides { command: Some(Command::Sweep), ..Overrides::default() })
        }
    };
    match execute(common, overrides) {
        Ok(code) => ExitCode::from(code as u8),
        Err((e, format)) => {
            let _ = std::io::stderr().write_all(&emit_error(&e, format));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
