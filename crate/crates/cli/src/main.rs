use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use osc_logic::gates::{Engine, GateKind};
use osc_logic_cli::commands::{reduce_cmd, seed_override, simulate_cmd, stability_cmd, truth_table_cmd, StabilityArgs};
use osc_logic_cli::{CliError, Outcome};

/// Oscillator networks for phase-encoded Boolean logic.
///
/// OSC_LOGIC_SEED overrides the random seed of every run.
#[derive(Parser)]
#[command(name = "osc-logic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Full,
    Phase,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Full => Engine::FullState,
            EngineArg::Phase => Engine::PhaseModel,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LogicGate {
    Not,
    And,
    Or,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnyGate {
    Register,
    Not,
    And,
    Or,
}

impl From<LogicGate> for GateKind {
    fn from(g: LogicGate) -> Self {
        match g {
            LogicGate::Not => GateKind::Not,
            LogicGate::And => GateKind::And,
            LogicGate::Or => GateKind::Or,
        }
    }
}

impl From<AnyGate> for GateKind {
    fn from(g: AnyGate) -> Self {
        match g {
            AnyGate::Register => GateKind::Register,
            AnyGate::Not => GateKind::Not,
            AnyGate::And => GateKind::And,
            AnyGate::Or => GateKind::Or,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a netlist and report phase locking.
    Simulate {
        netlist: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        engine: EngineArg,
        /// Trajectory CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run every input row of a gate and decode its output.
    TruthTable {
        #[arg(long, value_enum)]
        gate: LogicGate,
        #[arg(long, value_enum, default_value = "full")]
        engine: EngineArg,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Classify an equilibrium of a gate's phase equations and certify it.
    Stability {
        #[arg(long, value_enum)]
        gate: AnyGate,
        /// Comma-separated phases, e.g. `0,pi`.
        #[arg(long = "target-eq", allow_hyphen_values = true)]
        target_eq: String,
        /// Input bits, e.g. `0,1`; read off the target when omitted.
        #[arg(long)]
        inputs: Option<String>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Input drive gain of AND/OR (both inputs).
        #[arg(long = "gamma-i")]
        gamma_i: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the averaged phase model of a netlist.
    Reduce { netlist: PathBuf },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Simulate { netlist, engine, csv } => {
            simulate_cmd(&netlist, engine.into(), csv.as_deref(), seed_override()?)
        }
        Command::TruthTable { gate, engine, csv } => {
            truth_table_cmd(gate.into(), engine.into(), csv.as_deref(), seed_override()?)
        }
        Command::Stability {
            gate,
            target_eq,
            inputs,
            rho,
            gamma,
            gamma_i,
            csv,
        } => stability_cmd(
            gate.into(),
            &StabilityArgs {
                target: target_eq,
                inputs,
                rho,
                gamma,
                gamma_i,
                csv,
            },
        ),
        Command::Reduce { netlist } => reduce_cmd(&netlist),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
