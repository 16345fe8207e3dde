//! Command-line surface: workspace loading, validation, and one subcommand
//! per pipeline stage. Exit codes: 0 SAT / success, 1 UNSAT / trivial,
//! 2 implicationally hard, 3 input or internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use bincsp::analyzer::{analyze_language, SearchOptions, Verdict};
use bincsp::binary_core::{is_liberal, max_bound, validate_core, BinaryCore};
use bincsp::impgraph::{build_graph, find_cycle, render_dot};
use bincsp::minimality::{establish_minimality, Instance};
use bincsp::relalg::{template_by_id, template_ids, Relation};
use bincsp::solver::{brute_force_solve, solve, SolveResult};

/// Workbench for constraint satisfaction over finitely bounded homogeneous
/// binary cores: minimality, implication graphs, solving, and hardness
/// certificates.
#[derive(Parser)]
#[command(name = "bincsp", version)]
struct Cli {
    /// Seed for randomized generation; recorded in reports. All current
    /// subcommands are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct WorkspaceArgs {
    /// Core definition file, or a bare name resolved in the corpus
    /// directory ($BINCSP_CORPUS, default ./corpus).
    #[arg(long)]
    core: String,
    /// Language file with named relations.
    #[arg(long)]
    language: Option<String>,
    /// Instance file.
    #[arg(long)]
    instance: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a core and optionally a language and an instance against it.
    Validate {
        #[command(flatten)]
        workspace: WorkspaceArgs,
    },
    /// Enumerate the orbits of k-tuples over a core.
    Orbits {
        #[arg(long)]
        core: String,
        #[arg(short = 'k', long)]
        arity: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Establish (2,l)-minimality; exit 1 when the result is trivial.
    Minimize {
        #[command(flatten)]
        workspace: WorkspaceArgs,
        /// Defaults to MaxBound of the core.
        #[arg(short = 'l', long)]
        l: Option<usize>,
        /// Write the orbit-removal trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide an instance: exit 0 SAT, 1 UNSAT, 2 implicationally hard.
    Solve {
        #[command(flatten)]
        workspace: WorkspaceArgs,
        /// Cross-check the verdict against the brute-force oracle.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the certificate on SAT.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Run only the brute-force oracle (exhaustive, capped).
    Oracle {
        #[command(flatten)]
        workspace: WorkspaceArgs,
        #[arg(long, default_value_t = 8)]
        cap: usize,
    },
    /// Emit the implication graph of the minimized instance.
    Impgraph {
        #[command(flatten)]
        workspace: WorkspaceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// DOT rendering for offline viewing.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Search instances of a language for implication cycles and synthesize
    /// hardness certificates.
    Analyze {
        #[arg(long)]
        core: String,
        #[arg(long)]
        language: String,
        #[arg(long, default_value_t = 4)]
        max_vars: usize,
        #[arg(long, default_value_t = 2)]
        max_constraints: usize,
        #[arg(long, default_value_t = 10_000)]
        max_instances: usize,
        /// Write the critical-ternary witness separately.
        #[arg(long)]
        emit_witness: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Apply a registered pp-template to named language relations.
    Compose {
        #[arg(long)]
        core: String,
        #[arg(long)]
        language: String,
        /// Template id; see `compose --list`.
        #[arg(long)]
        template: Option<String>,
        /// Comma-separated relation names bound to the template slots.
        #[arg(long)]
        inputs: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}

fn resolve_path(name: &str) -> PathBuf {
    let direct = PathBuf::from(name);
    if direct.exists() {
        return direct;
    }
    if !name.contains('/') {
        let corpus = std::env::var("BINCSP_CORPUS").unwrap_or_else(|_| "corpus".to_string());
        let candidate = Path::new(&corpus).join(format!("{name}.json"));
        if candidate.exists() {
            return candidate;
        }
    }
    direct
}

fn read(name: &str) -> anyhow::Result<String> {
    let path = resolve_path(name);
    std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
}

fn load_core(name: &str) -> anyhow::Result<BinaryCore> {
    bincsp::io::load_core(&read(name)?).with_context(|| format!("loading core `{name}`"))
}

fn load_language(name: &str, core: &BinaryCore) -> anyhow::Result<Vec<(String, Relation)>> {
    bincsp::io::load_language(&read(name)?, core)
        .with_context(|| format!("loading language `{name}`"))
}

struct Workspace {
    core: BinaryCore,
    #[allow(dead_code)]
    language: Vec<(String, Relation)>,
    instance: Option<Instance>,
}

fn load_workspace(args: &WorkspaceArgs) -> anyhow::Result<Workspace> {
    let core = load_core(&args.core)?;
    let language = match &args.language {
        Some(name) => load_language(name, &core)?,
        None => Vec::new(),
    };
    let instance = match &args.instance {
        Some(name) => Some(
            bincsp::io::load_instance(&read(name)?, &core, &language)
                .with_context(|| format!("loading instance `{name}`"))?,
        ),
        None => None,
    };
    Ok(Workspace {
        core,
        language,
        instance,
    })
}

fn require_instance(ws: &Workspace) -> anyhow::Result<&Instance> {
    ws.instance
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs --instance"))
}

fn emit(path: &Option<PathBuf>, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(path) => {
            std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Validate { workspace } => {
            let core = load_core(&workspace.core)?;
            let diagnostics = validate_core(&core);
            // Language and instance loading performs the schema checks.
            if let Some(name) = &workspace.language {
                let language = load_language(name, &core)?;
                if let Some(inst_name) = &workspace.instance {
                    bincsp::io::load_instance(&read(inst_name)?, &core, &language)?;
                }
            } else if workspace.instance.is_some() {
                let ws = load_workspace(&workspace)?;
                drop(ws);
            }
            let ok = diagnostics.is_empty();
            emit(
                &None,
                &serde_json::json!({
                    "ok": ok,
                    "liberal": is_liberal(&core),
                    "max_bound": max_bound(&core),
                    "diagnostics": diagnostics,
                }),
            )?;
            Ok(if ok { 0 } else { 3 })
        }
        Command::Orbits { core, arity, out } => {
            let core = load_core(&core)?;
            let orbits = bincsp::orbits::enumerate_orbits(&core, arity)?;
            let sig = core.signature();
            emit(
                &out,
                &serde_json::json!({
                    "arity": arity,
                    "count": orbits.len(),
                    "orbits": orbits
                        .iter()
                        .map(|o| serde_json::to_value(bincsp::io::orbit_to_def(o, sig)).unwrap())
                        .collect::<Vec<_>>(),
                }),
            )?;
            Ok(0)
        }
        Command::Minimize {
            workspace,
            l,
            trace,
            out,
        } => {
            let ws = load_workspace(&workspace)?;
            let inst = require_instance(&ws)?;
            let l = l.unwrap_or_else(|| max_bound(&ws.core));
            let outcome = establish_minimality(inst, 2, l, &ws.core)?;
            if let Some(path) = &trace {
                let text =
                    bincsp::io::trace_to_jsonl(&outcome.trace, &outcome.instance, ws.core.signature());
                std::fs::write(path, text)?;
            }
            let file = bincsp::io::instance_to_file(&outcome.instance, ws.core.signature());
            emit(&out, &serde_json::to_value(&file)?)?;
            Ok(if outcome.trivial { 1 } else { 0 })
        }
        Command::Solve {
            workspace,
            oracle,
            trace,
            certificate,
        } => {
            let ws = load_workspace(&workspace)?;
            let inst = require_instance(&ws)?;
            let result = solve(inst, &ws.core)?;
            let sig = ws.core.signature();
            if oracle {
                let oracle_cert = brute_force_solve(inst, &ws.core, 8)?;
                let agreed = matches!(
                    (&result, &oracle_cert),
                    (SolveResult::Sat { .. }, Some(_))
                        | (SolveResult::Unsat { .. }, None)
                        | (SolveResult::ImplicationallyHard { .. }, _)
                );
                if !agreed {
                    return Err(anyhow!("solver and oracle disagree on this instance"));
                }
            }
            let (summary, trace_value) = match &result {
                SolveResult::Sat {
                    certificate: cert,
                    trace,
                } => {
                    if let Some(path) = &certificate {
                        let file = bincsp::io::certificate_to_file(cert, inst, sig);
                        emit(&Some(path.clone()), &serde_json::to_value(&file)?)?;
                    }
                    (
                        serde_json::json!({
                            "result": "sat",
                            "classes": cert.classes.len(),
                        }),
                        bincsp::io::solve_trace_to_json(trace, sig),
                    )
                }
                SolveResult::Unsat { trace } => (
                    serde_json::json!({"result": "unsat"}),
                    bincsp::io::solve_trace_to_json(trace, sig),
                ),
                SolveResult::ImplicationallyHard {
                    graph,
                    cycle,
                    instance,
                    trace,
                } => (
                    serde_json::json!({
                        "result": "implicationally_hard",
                        "cycle": bincsp::io::graph_to_json(graph, Some(cycle), instance, sig)["cycle"],
                    }),
                    bincsp::io::solve_trace_to_json(trace, sig),
                ),
            };
            if let Some(path) = &trace {
                std::fs::write(path, serde_json::to_string_pretty(&trace_value)? + "\n")?;
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(result.exit_code() as u8)
        }
        Command::Oracle { workspace, cap } => {
            let ws = load_workspace(&workspace)?;
            let inst = require_instance(&ws)?;
            match brute_force_solve(inst, &ws.core, cap)? {
                Some(cert) => {
                    let file = bincsp::io::certificate_to_file(&cert, inst, ws.core.signature());
                    emit(&None, &serde_json::to_value(&file)?)?;
                    Ok(0)
                }
                None => {
                    println!("{}", serde_json::json!({"result": "unsat"}));
                    Ok(1)
                }
            }
        }
        Command::Impgraph {
            workspace,
            out,
            dot,
        } => {
            let ws = load_workspace(&workspace)?;
            let inst = require_instance(&ws)?;
            let l = max_bound(&ws.core);
            let outcome = establish_minimality(inst, 2, l, &ws.core)?;
            if outcome.trivial {
                println!("{}", serde_json::json!({"trivial": true}));
                return Ok(1);
            }
            let graph = build_graph(&outcome.instance, &ws.core)?;
            let cycle = find_cycle(&graph);
            let sig = ws.core.signature();
            emit(
                &out,
                &bincsp::io::graph_to_json(&graph, cycle.as_ref(), &outcome.instance, sig),
            )?;
            if let Some(path) = &dot {
                std::fs::write(path, render_dot(&graph, &outcome.instance, sig))?;
            }
            Ok(0)
        }
        Command::Analyze {
            core,
            language,
            max_vars,
            max_constraints,
            max_instances,
            emit_witness,
            report,
        } => {
            let core = load_core(&core)?;
            let language = load_language(&language, &core)?;
            let options = SearchOptions {
                max_vars,
                max_constraints,
                max_instances,
            };
            let result = analyze_language(&core, &language, options)?;
            let sig = core.signature();
            let mut value = bincsp::io::report_to_json(&result, sig);
            if let Some(seed) = cli.seed {
                value["search_coverage"]["seed"] = serde_json::json!(seed);
            }
            emit(&report, &value)?;
            let code = match &result.verdict {
                Verdict::SimpleUpToBound => 0,
                Verdict::ImplicationallyHard { .. } => 2,
                Verdict::NoBoundedStrictWidth { witness, .. } => {
                    if let Some(path) = &emit_witness {
                        emit(
                            &Some(path.clone()),
                            &bincsp::io::witness_to_json(witness, sig),
                        )?;
                    }
                    2
                }
            };
            Ok(code)
        }
        Command::Compose {
            core,
            language,
            template,
            inputs,
            list,
            out,
        } => {
            if list {
                emit(
                    &None,
                    &serde_json::json!({
                        "version": bincsp::relalg::TEMPLATE_VERSION,
                        "templates": template_ids(),
                    }),
                )?;
                return Ok(0);
            }
            let core = load_core(&core)?;
            let language = load_language(&language, &core)?;
            let template_id =
                template.ok_or_else(|| anyhow!("--template is required (or use --list)"))?;
            let template = template_by_id(&template_id)
                .ok_or_else(|| anyhow!("unknown template `{template_id}`"))?;
            let names = inputs.ok_or_else(|| anyhow!("--inputs is required"))?;
            let slots: Vec<&Relation> = names
                .split(',')
                .map(|name| {
                    language
                        .iter()
                        .find(|(n, _)| n == name.trim())
                        .map(|(_, r)| r)
                        .ok_or_else(|| anyhow!("relation `{name}` not found in the language"))
                })
                .collect::<anyhow::Result<_>>()?;
            let result = template.apply(&core, &slots)?;
            let def = bincsp::io::relation_to_def(
                &format!("{template_id}@{names}"),
                &result,
                core.signature(),
            );
            emit(&out, &serde_json::to_value(&def)?)?;
            Ok(0)
        }
    }
}
