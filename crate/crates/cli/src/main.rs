use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use valence_core::oracle::{bounded_solve_many, Budget, Objective, OracleVerdict};
use valence_core::reductions::{self, CounterMachine, PushdownGame};
use valence_core::solver_fv::{solve_fv_with_certificate, FvOptions};
use valence_core::solver_uv::{solve_uv_with, UvOptions};
use valence_core::{arena, classify, ClassLabel, GameArena, Winner};

const EXIT_OK: u8 = 0;
const EXIT_FORALL: u8 = 10;
const EXIT_UNKNOWN: u8 = 20;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "valence", version, about = "Viability games on graph-monoid valence systems")]
struct Cli {
    /// Worker threads for parallel oracle runs (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Include wall-clock timings in the report (makes it run-dependent).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the decidability class of an arena's graph.
    Classify { arena: PathBuf },
    /// Decide a game exactly.
    #[command(subcommand)]
    Solve(Solve),
    /// Bounded explicit-state search.
    Oracle {
        arena: PathBuf,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Rio)]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = Budget::default().max_configs)]
        max_configs: usize,
        #[arg(long, default_value_t = Budget::default().max_depth)]
        max_depth: usize,
        /// Initial storage as a word like "a x-"; repeat to solve several.
        #[arg(long)]
        credit: Vec<String>,
    },
    /// Compile another model into a viability arena.
    #[command(subcommand)]
    Compile(Compile),
    /// Render an arena as Graphviz DOT.
    ExportDot {
        arena: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Solve {
    /// Fixed initial credit.
    Fv {
        arena: PathBuf,
        #[arg(long, default_value = "")]
        credit: String,
        /// Write a universal strategy tree here when the universal player wins.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long, default_value_t = FvOptions::default().max_antichain)]
        max_antichain: usize,
    },
    /// Unknown initial credit.
    Uv {
        arena: PathBuf,
        /// Search for a concrete winning credit.
        #[arg(long)]
        witness: bool,
        #[arg(long, default_value_t = FvOptions::default().max_antichain)]
        max_antichain: usize,
    },
}

#[derive(Subcommand)]
enum Compile {
    /// Two-counter machine to a game arena.
    Cm {
        machine: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pushdown (energy) game to a viability arena.
    Pushdown {
        game: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Rio,
    Nonterm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    /// Unlooped isolated vertex plus an unlooped and a looped adjacent vertex.
    I,
    /// Isolated vertex plus two adjacent unlooped vertices.
    Ii,
    /// As `ii` with a loop on the isolated vertex.
    IiLooped,
    /// Non-termination game over a two-dimensional group with a stack.
    Pdzvass,
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    inputs: Vec<InputDigest>,
    verdict: serde_json::Value,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    artifacts: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<BTreeMap<String, f64>>,
}

struct Run {
    timings: bool,
    clock: BTreeMap<String, f64>,
    inputs: Vec<InputDigest>,
    artifacts: BTreeMap<String, String>,
}

impl Run {
    fn read(&mut self, path: &Path) -> anyhow::Result<String> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(text.as_bytes())),
        });
        Ok(text)
    }

    fn arena(&mut self, path: &Path) -> anyhow::Result<GameArena> {
        let text = self.read(path)?;
        Ok(GameArena::from_json_str(&text)?)
    }

    fn timed<T>(&mut self, step: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.clock.insert(step.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    fn write(&mut self, kind: &str, path: &Path, text: &str) -> anyhow::Result<()> {
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.insert(kind.to_string(), path.display().to_string());
        Ok(())
    }

    fn report(self, command: &str, verdict: serde_json::Value) -> RunReport {
        RunReport {
            command: command.to_string(),
            inputs: self.inputs,
            verdict,
            artifacts: self.artifacts,
            timings_ms: self.timings.then_some(self.clock),
        }
    }
}

fn winner_code(w: Winner) -> u8 {
    match w {
        Winner::Exists => EXIT_OK,
        Winner::Forall => EXIT_FORALL,
    }
}

/// Refuses graphs without an exact procedure; the report names the reason.
fn refusal(a: &GameArena, label: &ClassLabel) -> Option<serde_json::Value> {
    let g = a.graph();
    match label {
        ClassLabel::Undecidable { pattern, triple } => Some(serde_json::json!({
            "refused": "undecidable graph class",
            "pattern": pattern.roman(),
            "triple": triple.iter().map(|&v| g.name(v)).collect::<Vec<_>>(),
        })),
        ClassLabel::VassTimesGrp { .. } => Some(serde_json::json!({
            "refused": "no exact procedure for this class; use the oracle",
            "class": label.describe(g),
        })),
        _ => None,
    }
}

fn emit(text: &str, output: Option<&Path>, run: &mut Run, kind: &str) -> anyhow::Result<bool> {
    match output {
        Some(p) => {
            run.write(kind, p, text)?;
            Ok(true)
        }
        None => {
            print!("{text}");
            Ok(false)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<(Option<RunReport>, u8)> {
    let mut run = Run { timings: cli.timings, clock: BTreeMap::new(), inputs: Vec::new(), artifacts: BTreeMap::new() };
    match cli.command {
        Command::Classify { arena } => {
            let a = run.arena(&arena)?;
            let label = run.timed("classify", || classify(a.graph()));
            let verdict = serde_json::json!({
                "class": label.kind(),
                "description": label.describe(a.graph()),
                "route": label.route(),
            });
            Ok((Some(run.report("classify", verdict)), EXIT_OK))
        }
        Command::Solve(Solve::Fv { arena, credit, certificate, max_antichain }) => {
            let a = run.arena(&arena)?;
            if let Some(v) = refusal(&a, &classify(a.graph())) {
                return Ok((Some(run.report("solve fv", v)), EXIT_UNKNOWN));
            }
            let w = a.graph().parse_word(&credit)?;
            let opts = FvOptions { max_antichain, ..FvOptions::default() };
            let (v, cert) = run.timed("solve", || solve_fv_with_certificate(&a, &w, &opts))?;
            if let (Some(path), Some(c)) = (certificate, cert) {
                let j = serde_json::json!({ "arena": c.arena.to_json(), "tree": c.tree.to_json(&c.arena) });
                run.write("certificate", &path, &serde_json::to_string_pretty(&j)?)?;
            }
            let code = winner_code(v.winner);
            let verdict = serde_json::json!({ "credit": a.graph().word_names(&w), "result": v });
            Ok((Some(run.report("solve fv", verdict)), code))
        }
        Command::Solve(Solve::Uv { arena, witness, max_antichain }) => {
            let a = run.arena(&arena)?;
            if let Some(v) = refusal(&a, &classify(a.graph())) {
                return Ok((Some(run.report("solve uv", v)), EXIT_UNKNOWN));
            }
            let fv = FvOptions { max_antichain, ..FvOptions::default() };
            let opts = UvOptions { witness, fv, ..UvOptions::default() };
            let v = run.timed("solve", || solve_uv_with(&a, &opts))?;
            let code = winner_code(v.winner);
            let mut verdict = serde_json::to_value(&v)?;
            if let Some(w) = &v.witness {
                verdict["witness"] = serde_json::json!(a.graph().word_names(w));
            }
            Ok((Some(run.report("solve uv", verdict)), code))
        }
        Command::Oracle { arena, objective, max_configs, max_depth, credit } => {
            let a = run.arena(&arena)?;
            let credits = if credit.is_empty() { vec![String::new()] } else { credit };
            let words = credits.iter().map(|c| a.graph().parse_word(c)).collect::<valence_core::Result<Vec<_>>>()?;
            let objective = match objective {
                ObjectiveArg::Rio => Objective::Rio,
                ObjectiveArg::Nonterm => Objective::NonTermination,
            };
            let budget = Budget { max_configs, max_depth };
            let verdicts = run.timed("oracle", || bounded_solve_many(&a, &words, budget, objective));
            let code = if verdicts.iter().any(|v| v.winner().is_none()) {
                EXIT_UNKNOWN
            } else if verdicts.iter().all(|v| v.winner() == Some(Winner::Exists)) {
                EXIT_OK
            } else {
                EXIT_FORALL
            };
            let rows: Vec<serde_json::Value> = words
                .iter()
                .zip(&verdicts)
                .map(|(w, v): (_, &OracleVerdict)| serde_json::json!({ "credit": a.graph().word_names(w), "result": v }))
                .collect();
            let verdict = serde_json::json!({ "objective": objective, "budget": budget, "runs": rows });
            Ok((Some(run.report("oracle", verdict)), code))
        }
        Command::Compile(Compile::Cm { machine, target, output }) => {
            let m = CounterMachine::from_json_str(&run.read(&machine)?)?;
            let a = match target {
                Target::I => reductions::cm_to_game_i(&m)?,
                Target::Ii => reductions::cm_to_game_ii(&m, false)?,
                Target::IiLooped => reductions::cm_to_game_ii(&m, true)?,
                Target::Pdzvass => reductions::cm_to_nontermination_pdzvass(&m)?,
            };
            let objective = match target {
                Target::Pdzvass => Objective::NonTermination,
                _ => Objective::Rio,
            };
            let text = serde_json::to_string_pretty(&a.to_json())? + "\n";
            if !emit(&text, output.as_deref(), &mut run, "arena")? {
                return Ok((None, EXIT_OK));
            }
            let verdict = serde_json::json!({ "states": a.state_count(), "objective": objective });
            Ok((Some(run.report("compile cm", verdict)), EXIT_OK))
        }
        Command::Compile(Compile::Pushdown { game, output }) => {
            let p: PushdownGame = serde_json::from_str(&run.read(&game)?)
                .map_err(|e| valence_core::Error::Input(e.to_string()))?;
            let a = reductions::pushdown_game_to_viability(&p)?;
            let text = serde_json::to_string_pretty(&a.to_json())? + "\n";
            if !emit(&text, output.as_deref(), &mut run, "arena")? {
                return Ok((None, EXIT_OK));
            }
            let verdict = serde_json::json!({ "states": a.state_count() });
            Ok((Some(run.report("compile pushdown", verdict)), EXIT_OK))
        }
        Command::ExportDot { arena, output } => {
            let a = run.arena(&arena)?;
            let dot = arena::to_dot(&a);
            if !emit(&dot, output.as_deref(), &mut run, "dot")? {
                return Ok((None, EXIT_OK));
            }
            Ok((Some(run.report("export-dot", serde_json::json!({ "states": a.state_count() }))), EXIT_OK))
        }
    }
}

fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<valence_core::Error>() {
        Some(valence_core::Error::RoutedToOracle(_))
        | Some(valence_core::Error::Resource(_))
        | Some(valence_core::Error::NotApplicable(_)) => EXIT_UNKNOWN,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VALENCE_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        log::warn!("thread pool: {e}");
    }
    match dispatch(cli) {
        Ok((report, code)) => {
            if let Some(r) = report {
                println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
