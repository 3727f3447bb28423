//! `fsd` — simulate finite-state dynamics, certify bounded-time convergence,
//! generate lower-bound gadget instances, and run the two-party protocol
//! simulations. Exit codes: 0 success/true verdict, 1 false verdict or
//! violation found, 2 usage error, 3 budget exceeded.

use std::collections::BTreeSet;
use std::io::Read as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use fsd_core::dynamics::{orbit, Configuration, Dynamics, OrbitOutcome};
use fsd_core::error::FsdError;
use fsd_core::gadgets::{self, PairSet};
use fsd_core::harness::{self, Family, Measurement};
use fsd_core::instance;
use fsd_core::oracle::{converges_within, converges_within_sampled, ConvergenceVerdict};
use fsd_core::pls::{run_verifier, CertificateAssignment};
use fsd_core::scheme::{bound_report, honest_prover, verify_node, SchemeParams};
use fsd_core::{circuit, dot};

#[derive(Parser)]
#[command(name = "fsd", version, about = "Finite-state dynamics toolkit")]
struct Cli {
    /// Seed for all randomized operations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Cap on exhaustively enumerated configurations.
    #[arg(long, global = true, default_value_t = 1u128 << 32)]
    budget: u128,

    /// Worker-count hint; output is deterministic regardless.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format where applicable.
    #[arg(long, global = true, default_value = "json", value_parser = ["json", "dot", "csv"])]
    format: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArg {
    /// Instance file, or `-` for stdin.
    #[arg(long)]
    instance: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run one orbit from a start configuration.
    Simulate {
        #[command(flatten)]
        instance: InstanceArg,
        /// Comma-separated states in ascending node-id order.
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Decide whether every configuration reaches a fixed point within k
    /// steps (exit 1 with a witness when not).
    Converge {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        k: usize,
        /// Sample instead of exhausting when set.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Produce or check ball certificates for convergence within k steps.
    Certify {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        k: usize,
        /// Print the honest certificate assignment instead of verifying.
        #[arg(long)]
        prove: bool,
        /// Verify this assignment file (defaults to the honest one).
        #[arg(long)]
        verify: Option<String>,
    },
    /// Generate a lower-bound gadget instance.
    #[command(subcommand)]
    Gadget(GadgetCommand),
    /// Build, audit, or evaluate a binary decoder circuit.
    Decoder {
        #[arg(long)]
        t: u32,
        /// Print the structural audit report.
        #[arg(long)]
        audit: bool,
        /// Evaluate on these input bits (e.g. `101`, least significant
        /// first).
        #[arg(long)]
        input: Option<String>,
    },
    /// Simulate a two-party protocol over a gadget instance.
    #[command(subcommand)]
    Reduce(ReduceCommand),
    /// Tabulate measured certificate sizes against lower-bound curves.
    Report {
        /// Pair-set family sizes (comma-separated n values).
        #[arg(long, default_value = "2")]
        n_list: String,
        /// Decoder family sizes (comma-separated t values).
        #[arg(long, default_value = "1")]
        t_list: String,
    },
}

#[derive(Subcommand)]
enum GadgetCommand {
    /// Pair-set instance on 2n + 4*ceil(log2 n) nodes, q = 4.
    Thm2 {
        #[arg(long)]
        n: u32,
        /// Pairs like `1-2,3-4`.
        #[arg(long, default_value = "")]
        a: String,
        #[arg(long, default_value = "")]
        b: String,
        /// Write the roles sidecar to this file.
        #[arg(long)]
        roles: Option<String>,
    },
    /// Decoder instance with index sets over [2^t], q = 3.
    Thm3 {
        #[arg(long)]
        t: u32,
        /// Indices like `1,3`.
        #[arg(long, default_value = "")]
        a: String,
        #[arg(long, default_value = "")]
        b: String,
        #[arg(long)]
        roles: Option<String>,
    },
}

#[derive(Subcommand)]
enum ReduceCommand {
    Thm2 {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value = "")]
        a: String,
        #[arg(long, default_value = "")]
        b: String,
    },
    Thm3 {
        #[arg(long)]
        t: u32,
        #[arg(long, default_value = "")]
        a: String,
        #[arg(long, default_value = "")]
        b: String,
    },
}

fn load_instance(path: &str) -> Result<Dynamics, FsdError> {
    let text = if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(path)?
    };
    instance::from_json(&text)
}

fn parse_pairs(n: u32, text: &str) -> Result<PairSet, FsdError> {
    let mut pairs = Vec::new();
    for part in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (i, j) = part
            .trim()
            .split_once('-')
            .ok_or_else(|| FsdError::OutOfRange(format!("pair {part:?} is not `i-j`")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| FsdError::OutOfRange(format!("bad pair element {s:?}")))
        };
        pairs.push((parse(i)?, parse(j)?));
    }
    PairSet::new(n, pairs)
}

fn parse_indices(text: &str) -> Result<BTreeSet<u32>, FsdError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| FsdError::OutOfRange(format!("bad index {s:?}")))
        })
        .collect()
}

fn parse_list(text: &str) -> Result<Vec<u32>, FsdError> {
    parse_indices(text).map(|set| set.into_iter().collect())
}

fn emit_gadget(
    inst: &gadgets::GadgetInstance,
    format: &str,
    roles_path: Option<&str>,
) -> Result<ExitCode, FsdError> {
    if let Some(path) = roles_path {
        std::fs::write(path, instance::roles_to_json(&inst.roles)?)?;
    }
    match format {
        "dot" => print!("{}", dot::to_dot(&inst.dynamics.graph, Some(&inst.roles))),
        _ => println!("{}", instance::to_json(&inst.dynamics)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, FsdError> {
    match cli.command {
        Command::Simulate { instance: inst, config, steps } => {
            let dynamics = load_instance(&inst.instance)?;
            let states: Vec<u8> = config
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u8>()
                        .map_err(|_| FsdError::OutOfRange(format!("bad state {s:?}")))
                })
                .collect::<Result<_, _>>()?;
            let o = orbit(&dynamics, &Configuration::new(states), steps)?;
            let outcome = match o.outcome {
                OrbitOutcome::FixedPoint { step } => json!({"fixed_point": step}),
                OrbitOutcome::Cycle { start, period } => {
                    json!({"cycle": {"start": start, "period": period}})
                }
                OrbitOutcome::Truncated => json!("truncated"),
            };
            let trajectory: Vec<&[u8]> = o.states.iter().map(|x| x.states()).collect();
            println!("{}", json!({"trajectory": trajectory, "outcome": outcome}));
            Ok(ExitCode::SUCCESS)
        }
        Command::Converge { instance: inst, k, samples } => {
            let dynamics = load_instance(&inst.instance)?;
            let verdict = match samples {
                None => converges_within(&dynamics, k, Some(cli.budget))?,
                Some(count) => converges_within_sampled(&dynamics, k, count, cli.seed, &[])?,
            };
            match verdict {
                ConvergenceVerdict::Converges => {
                    println!("{}", json!({"converges": true, "k": k}));
                    Ok(ExitCode::SUCCESS)
                }
                ConvergenceVerdict::Diverges { witness } => {
                    println!(
                        "{}",
                        json!({"converges": false, "k": k, "witness": witness.states()})
                    );
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Certify { instance: inst, k, prove, verify } => {
            let dynamics = load_instance(&inst.instance)?;
            let params = SchemeParams::for_dynamics(&dynamics, k);
            let honest = honest_prover(&dynamics, &params);
            if prove {
                println!("{}", honest.to_json()?);
                return Ok(ExitCode::SUCCESS);
            }
            let assignment = match verify {
                Some(path) => CertificateAssignment::from_json(&std::fs::read_to_string(path)?)?,
                None => honest.clone(),
            };
            let outcome = run_verifier(&dynamics, &assignment, |view| verify_node(view, &params))?;
            let report = bound_report(&dynamics, &params, &honest);
            println!(
                "{}",
                json!({"outcome": outcome, "bound_report": report})
            );
            Ok(if outcome.accepted { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Gadget(GadgetCommand::Thm2 { n, a, b, roles }) => {
            let inst =
                gadgets::build_thm2_graph(n, &parse_pairs(n, &a)?, &parse_pairs(n, &b)?)?;
            emit_gadget(&inst, &cli.format, roles.as_deref())
        }
        Command::Gadget(GadgetCommand::Thm3 { t, a, b, roles }) => {
            let inst = gadgets::build_thm3_instance(t, &parse_indices(&a)?, &parse_indices(&b)?)?;
            emit_gadget(&inst, &cli.format, roles.as_deref())
        }
        Command::Decoder { t, audit, input } => {
            let c = circuit::build_decoder(t)?;
            if audit {
                let report = circuit::audit_structure(&c, t)?;
                println!("{}", serde_json::to_string(&report)?);
                return Ok(ExitCode::SUCCESS);
            }
            if let Some(bits) = input {
                let inputs: Vec<bool> = bits
                    .chars()
                    .map(|ch| match ch {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(FsdError::OutOfRange(format!("bad input bit {ch:?}"))),
                    })
                    .collect::<Result<_, _>>()?;
                let outputs = circuit::evaluate(&c, &inputs)?;
                let out_bits: Vec<u8> = outputs.iter().map(|&b| b as u8).collect();
                println!("{}", json!({"outputs": out_bits}));
                return Ok(ExitCode::SUCCESS);
            }
            match cli.format.as_str() {
                "dot" => print!("{}", c.to_dot()),
                _ => println!("{}", c.to_json()?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Reduce(cmd) => {
            let transcript = match cmd {
                ReduceCommand::Thm2 { n, a, b } => {
                    harness::simulate_thm2_protocol(n, &parse_pairs(n, &a)?, &parse_pairs(n, &b)?)?
                }
                ReduceCommand::Thm3 { t, a, b } => {
                    harness::simulate_thm3_protocol(t, &parse_indices(&a)?, &parse_indices(&b)?)?
                }
            };
            println!("{}", serde_json::to_string(&transcript)?);
            Ok(if transcript.accepted == transcript.disjoint {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Report { n_list, t_list } => {
            let mut measurements = Vec::new();
            for n in parse_list(&n_list)? {
                let inst = gadgets::build_thm2_graph(n, &PairSet::new(n, [])?, &PairSet::new(n, [])?)?;
                let params = SchemeParams::for_dynamics(&inst.dynamics, 2);
                let honest = honest_prover(&inst.dynamics, &params);
                measurements.push(Measurement {
                    family: Family::PairSet,
                    param: n,
                    k: 2,
                    measured_max_bits: honest.max_bits() as u64,
                });
            }
            for t in parse_list(&t_list)? {
                let inst =
                    gadgets::build_thm3_instance(t, &BTreeSet::new(), &BTreeSet::new())?;
                let params = SchemeParams::for_dynamics(&inst.dynamics, 6 * t as usize);
                let honest = honest_prover(&inst.dynamics, &params);
                measurements.push(Measurement {
                    family: Family::Decoder,
                    param: t,
                    k: 6 * t,
                    measured_max_bits: honest.max_bits() as u64,
                });
            }
            print!("{}", harness::lower_bound_report(&measurements));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // a hint only; results do not depend on the worker count
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(FsdError::BudgetExceeded { total, cap }) => {
            eprintln!("budget exceeded: {total} configurations, cap {cap}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
