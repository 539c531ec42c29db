use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use sesg_core::config::Format;
use sesg_core::error::{ConfigError, SimError};
use sesg_core::output::{emit_plot, metadata_path, write_csv};
use sesg_core::perunit::DerivedParameters;
use sesg_core::scenarios;
use sesg_core::{load_config, RunConfig};

/// Environment variable overriding `output.directory`; `--out` wins over both.
const OUTPUT_DIR_ENV: &str = "SIM_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "sim", version, about = "Self-excited synchronous generator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace, metadata and plot.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Built-in scenario name; overrides the config's `scenario`.
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated plot channels, e.g. `v_a,v_b,v_c`.
        #[arg(long, value_delimiter = ',')]
        plot: Option<Vec<String>>,
    },
    /// Check a config file and report every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the derived per-unit parameters.
    Derive {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the built-in scenarios.
    ListScenarios,
}

enum Failure {
    Invalid(anyhow::Error),
    Diverged(String),
    Other(anyhow::Error),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Parameter(_) | SimError::Saturation(_) => Failure::Invalid(e.into()),
            other => Failure::Other(other.into()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Invalid(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            scenario,
            out,
            plot,
        } => run(&config, scenario.as_deref(), out, plot),
        Command::Validate { config } => validate(&config),
        Command::Derive { config } => derive(&config),
        Command::ListScenarios => {
            for name in scenarios::BUILTIN_NAMES {
                println!("{name:<30} {}", scenarios::describe(name));
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Diverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn validate(path: &Path) -> Result<(), Failure> {
    let cfg = load_config(path)?;
    println!("{}: valid (config hash {})", path.display(), cfg.hash());
    Ok(())
}

fn derive(path: &Path) -> Result<(), Failure> {
    let cfg = load_config(path)?;
    let d = cfg.derive()?;
    print!("{}", derived_table(&d));
    Ok(())
}

fn derived_table(d: &DerivedParameters) -> String {
    let e = &d.elements;
    let tc = &d.time_constants;
    let rows: [(&str, f64, &str); 21] = [
        ("x_md", e.x_md, "pu"),
        ("x_mq", e.x_mq, "pu"),
        ("x_f", e.x_f, "pu"),
        ("x_1d", e.x_1d, "pu"),
        ("x_1q", e.x_1q, "pu"),
        ("x_2q", e.x_2q, "pu"),
        ("x_ls", d.composite.xls, "pu"),
        ("Td0_p", tc.td0_p, "s"),
        ("Td0_pp", tc.td0_pp, "s"),
        ("Tq0_p", tc.tq0_p, "s"),
        ("Tq0_pp", tc.tq0_pp, "s"),
        ("Td_p", tc.td_p, "s"),
        ("Td_pp", tc.td_pp, "s"),
        ("Tq_p", tc.tq_p, "s"),
        ("Tq_pp", tc.tq_pp, "s"),
        ("R_a", d.ra, "pu"),
        ("R_f", d.rf, "pu"),
        ("R_1d", d.r_1d, "pu"),
        ("R_1q", d.r_1q, "pu"),
        ("R_2q", d.r_2q, "pu"),
        ("omega_B", d.omega_e, "rad/s"),
    ];
    let mut out = format!("{:<10} {:>14}  unit\n", "parameter", "value");
    for (name, value, unit) in rows {
        out.push_str(&format!("{name:<10} {value:>14.6}  {unit}\n"));
    }
    out
}

fn run(path: &Path, scenario: Option<&str>, out: Option<PathBuf>, plot: Option<Vec<String>>) -> Result<(), Failure> {
    let mut cfg: RunConfig = load_config(path)?;
    if let Some(channels) = plot {
        cfg.output.plot_channels = channels;
        cfg.validate()?;
    }
    let sim = cfg.simulation()?;
    let script = cfg.scenario_script(&sim.derived, scenario)?;
    let ts = sim.run(&script)?;

    let dir = out
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let mut written = Vec::new();
    if cfg.output.formats.contains(&Format::Csv) {
        let csv = dir.join(format!("{}.csv", script.name));
        write_csv(&ts, &csv)
            .with_context(|| format!("writing {}", csv.display()))
            .map_err(Failure::Other)?;
        let meta = metadata_path(&csv);
        written.push(csv);
        written.push(meta);
    }
    if cfg.output.formats.contains(&Format::Svg) {
        let svg = dir.join(format!("{}.svg", script.name));
        emit_plot(&ts, &cfg.output.plot_channels, &svg)
            .with_context(|| format!("writing {}", svg.display()))
            .map_err(Failure::Other)?;
        written.push(svg);
    }

    for note in ts.metadata.notes.iter().filter(|n| n.starts_with("warning")) {
        eprintln!("{note}");
    }
    println!("scenario   {}", script.name);
    println!("samples    {}", ts.samples.len());
    println!("outcome    {}", serde_json::to_string(ts.outcome()).unwrap_or_default());
    for p in &written {
        println!("wrote      {}", p.display());
    }

    match ts.outcome() {
        o if o.is_diverged() && !script.expect_divergence => Err(Failure::Diverged(format!(
            "scenario `{}` diverged unexpectedly: {}",
            script.name,
            serde_json::to_string(o).unwrap_or_default()
        ))),
        _ => Ok(()),
    }
}
