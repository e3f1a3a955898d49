use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use limlab::exprcalc::{
    build_a, build_c, build_s, check_u, evaluate, expand_full, gen_u_instance,
    gen_u_instance_with_epsilon, reduce_s_to_c, render_term, shape_check, ReductionStatus,
    ShapeContext, UInstance, UInstanceFile,
};
use limlab::families::gen::{random_registry, rng};
use limlab::families::io::{
    family_from_json, family_to_json, trivialization_from_json, trivialization_to_json,
};
use limlab::families::{
    coherence_violation, extend_from_cofinal, finsup_to_trivialization, finsup_violation,
    gen_family, solve_finsup, trivialization_failure, Family, FinsupOutcome, GenMode, GridFn,
};
use limlab::forcing::{iter_lower_bound, IterCond};
use limlab::ordcomb::{build_type_cycle, verify_type_cycle, OrdSet, TypeString};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Finite-scale checks for coherent families, ordinal types, formal sums and Hechler conditions.
#[derive(Parser)]
#[command(name = "limlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that every defect vanishes in columns ≥ k*.
    CheckCoherence {
        #[arg(long)]
        input: PathBuf,
        /// Threshold; defaults to the file's k*.
        #[arg(long)]
        kstar: Option<usize>,
    },
    /// Solve for a finitely supported Ψ and turn it into a trivialization.
    Trivialize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kstar: Option<usize>,
        /// Where to write the trivialization.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a candidate Ψ against Φ.
    VerifyFinsup {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        psi: PathBuf,
        #[arg(long)]
        kstar: Option<usize>,
    },
    /// Extend a trivialization of Φ restricted to a dominating sub-registry.
    ExtendCofinal {
        #[arg(long)]
        input: PathBuf,
        /// Sub-registry indices, e.g. 0,1,2.
        #[arg(long, value_delimiter = ',', required = true)]
        sub: Vec<usize>,
        /// Trivialization of Φ restricted to the sub-registry.
        #[arg(long)]
        upsilon: PathBuf,
        /// Domination map a(g) for every registry index.
        #[arg(long, value_delimiter = ',')]
        domination: Option<Vec<usize>>,
        #[arg(long)]
        kstar: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Shape check, full expansion of S and the S-to-C reduction.
    VerifySymbolic {
        #[arg(long)]
        n: usize,
        /// Defaults to 0,…,n.
        #[arg(long)]
        tau: Option<OrdSet>,
    },
    /// Build and verify a type cycle.
    TypeCycle {
        #[arg(long = "type")]
        ty: TypeString,
    },
    /// Evaluate the uniformity condition on an instance.
    CheckU {
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate C_n(τ) on an instance.
    #[command(name = "eval-C")]
    EvalC {
        #[arg(long)]
        input: PathBuf,
    },
    /// A lower bound for A ∪ {r}.
    HechlerLowerBound {
        #[arg(long)]
        input: PathBuf,
    },
    /// Write a seeded instance.
    Gen {
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        n: usize,
        /// Registry size.
        #[arg(long = "F", default_value_t = 5)]
        f: usize,
        /// Column count.
        #[arg(long = "N", default_value_t = 8)]
        cols: usize,
        /// Defaults to N/2.
        #[arg(long)]
        kstar: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// u_instance only: a nonzero common long-string defect.
        #[arg(long)]
        epsilon: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "exact_trivial")]
    ExactTrivial,
    #[value(name = "trivial_plus_noise")]
    TrivialPlusNoise,
    #[value(name = "incoherent")]
    Incoherent,
    #[value(name = "u_instance")]
    UInstance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
enum Status {
    Pass,
    Fail,
    Sat,
    Unsat,
    Error,
}

#[derive(Serialize)]
struct Report {
    command: Vec<String>,
    status: Status,
    ledger: Value,
}

impl Status {
    fn exit_code(self) -> u8 {
        match self {
            Status::Pass | Status::Sat => 0,
            Status::Fail | Status::Unsat => 1,
            Status::Error => 2,
        }
    }
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_family(path: &Path) -> Result<Family> {
    family_from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read(path)?;
    serde_json::from_str(&text).with_context(|| format!("in {}", path.display()))
}

fn load_instance(path: &Path) -> Result<UInstance> {
    let file: UInstanceFile = load_json(path)?;
    file.to_instance()
        .with_context(|| format!("in {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            emit(text);
            Ok(())
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn table(g: &GridFn) -> Value {
    json!(g
        .support()
        .map(|((i, j), v)| [i as i64, j as i64, v])
        .collect::<Vec<_>>())
}

fn run(cmd: Command) -> Result<(Status, Value)> {
    Ok(match cmd {
        Command::CheckCoherence { input, kstar } => {
            let phi = load_family(&input)?;
            let k = kstar.unwrap_or(phi.kstar());
            let v = coherence_violation(&phi, k);
            (
                pass_if(v.is_none()),
                json!({ "kstar": k, "n": phi.arity(), "violation": v }),
            )
        }
        Command::Trivialize {
            input,
            kstar,
            output,
        } => {
            let phi = load_family(&input)?;
            let k = kstar.unwrap_or(phi.kstar());
            if let Some(v) = coherence_violation(&phi, k) {
                return Ok((
                    Status::Fail,
                    json!({ "kstar": k, "reason": "not coherent", "violation": v }),
                ));
            }
            match solve_finsup(&phi, k)? {
                FinsupOutcome::Sat(psi) => {
                    let t = finsup_to_trivialization(&phi, &psi, k)?;
                    let checked = trivialization_failure(&phi, &t, k)?;
                    if let Some(f) = checked {
                        bail!("internal check failed: {f:?}");
                    }
                    let text = trivialization_to_json(&t, &phi);
                    if let Some(p) = &output {
                        write_out(Some(p), &text)?;
                    }
                    let triv: Value = serde_json::from_str(&text)?;
                    let psi: Value = serde_json::from_str(&family_to_json(&psi))?;
                    (
                        Status::Sat,
                        json!({ "kstar": k, "psi": psi, "trivialization": triv }),
                    )
                }
                FinsupOutcome::Unsat(cert) => {
                    (Status::Unsat, json!({ "kstar": k, "certificate": cert }))
                }
            }
        }
        Command::VerifyFinsup { input, psi, kstar } => {
            let phi = load_family(&input)?;
            let psi = load_family(&psi)?;
            let k = kstar.unwrap_or(phi.kstar());
            let v = finsup_violation(&phi, &psi, k)?;
            (pass_if(v.is_none()), json!({ "kstar": k, "violation": v }))
        }
        Command::ExtendCofinal {
            input,
            sub,
            upsilon,
            domination,
            kstar,
            output,
        } => {
            let phi = load_family(&input)?;
            let ups = trivialization_from_json(&read(&upsilon)?)
                .with_context(|| format!("in {}", upsilon.display()))?;
            let k = kstar.unwrap_or(phi.kstar());
            let ext = extend_from_cofinal(&phi, &sub, &ups, domination.as_deref(), k)?;
            let failure = trivialization_failure(&phi, &ext.trivialization, k)?;
            let text = trivialization_to_json(&ext.trivialization, &phi);
            if let Some(p) = &output {
                write_out(Some(p), &text)?;
            }
            let triv: Value = serde_json::from_str(&text)?;
            (
                pass_if(failure.is_none()),
                json!({
                    "kstar": k,
                    "kprime": ext.kprime,
                    "domination": ext.domination,
                    "failure": failure,
                    "trivialization": triv,
                }),
            )
        }
        Command::VerifySymbolic { n, tau } => {
            let tau = tau.unwrap_or_else(|| OrdSet::from_unsorted(0..=n as u64));
            let ctx = ShapeContext::Tau(tau.clone());
            let c = build_c(n, &tau)?;
            let s = build_s(n, &tau)?;
            let mut shape = Vec::new();
            for (name, l, cx) in [("C", &c, ctx.clone()), ("S", &s, ctx)] {
                shape.push(json!({ "sum": name, "failure": shape_check(l, &cx).err() }));
            }
            for i in 0..tau.len() {
                let face = tau.without_nth(i);
                let a = build_a(n, &face)?;
                shape.push(json!({
                    "sum": format!("A({face})"),
                    "failure": shape_check(&a, &ShapeContext::A(face.clone())).err(),
                }));
            }
            let shapes_ok = shape.iter().all(|s| s["failure"].is_null());
            let residual: Vec<String> = expand_full(&s)
                .iter()
                .map(|(t, &k)| render_term(t, k))
                .collect();
            let report = reduce_s_to_c(n, &tau)?;
            let ok = shapes_ok && residual.is_empty() && report.status == ReductionStatus::Success;
            (
                pass_if(ok),
                json!({
                    "n": n,
                    "tau": tau,
                    "shape": shape,
                    "s_raw_terms": s.raw_expansion().len(),
                    "s_full_expansion": residual,
                    "reduction": report,
                }),
            )
        }
        Command::TypeCycle { ty } => {
            let cycle = build_type_cycle(&ty)?;
            let check = verify_type_cycle(&ty, &cycle);
            (
                pass_if(check.is_ok()),
                json!({
                    "type": ty.to_string(),
                    "m": cycle.m(),
                    "cycle": cycle.sets(),
                    "failure": check.err().map(|e| e.to_string()),
                }),
            )
        }
        Command::CheckU { input } => {
            let inst = load_instance(&input)?;
            let u = check_u(&inst)?;
            (pass_if(u.holds), serde_json::to_value(&u)?)
        }
        Command::EvalC { input } => {
            let inst = load_instance(&input)?;
            let c = build_c(inst.n(), inst.tau())?;
            let v = evaluate(&c, &inst)?;
            (
                pass_if(v.is_zero()),
                json!({
                    "n": inst.n(),
                    "terms": c.terms().iter().map(|(t, &k)| render_term(t, k)).collect::<Vec<_>>(),
                    "domain": v.domain().values(),
                    "support": table(&v),
                }),
            )
        }
        Command::HechlerLowerBound { input } => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Premise {
                #[serde(rename = "A")]
                a: Vec<IterCond>,
                r: IterCond,
            }
            let premise: Premise = load_json(&input)?;
            let q = iter_lower_bound(&premise.a, &premise.r)?;
            let ok = q.extends(&premise.r) && premise.a.iter().all(|p| q.extends(p));
            (pass_if(ok), json!({ "lower_bound": q }))
        }
        Command::Gen {
            mode,
            n,
            f,
            cols,
            kstar,
            seed,
            epsilon,
            output,
        } => {
            let kstar = kstar.unwrap_or(cols / 2);
            if cols == 0 || kstar > cols {
                bail!("need N ≥ 1 and k* ≤ N (got N = {cols}, k* = {kstar})");
            }
            let text = match mode {
                Mode::UInstance => {
                    let inst = if epsilon {
                        gen_u_instance_with_epsilon(n, cols, seed)?
                    } else {
                        gen_u_instance(n, cols, seed)?
                    };
                    serde_json::to_string_pretty(&UInstanceFile::from_instance(&inst))?
                }
                _ => {
                    if n == 0 || f < n + 1 {
                        bail!("need n ≥ 1 and F ≥ n + 1 (got n = {n}, F = {f})");
                    }
                    if (f as f64) > 4f64.powi(cols as i32) {
                        bail!(
                            "only {} distinct functions of height ≤ 3 on {cols} columns",
                            4u64.pow(cols as u32)
                        );
                    }
                    let gm = match mode {
                        Mode::ExactTrivial => GenMode::ExactTrivial,
                        Mode::TrivialPlusNoise => GenMode::TrivialPlusNoise,
                        _ => GenMode::Incoherent,
                    };
                    let registry = random_registry(&mut rng(seed), f, cols, 3);
                    family_to_json(&gen_family(gm, n, &registry, kstar, seed)?)
                }
            };
            write_out(output.as_deref(), &text)?;
            return Ok((Status::Pass, Value::Null));
        }
    })
}

fn summary(status: Status, ledger: &Value) -> String {
    let keys = ["violation", "failure", "certificate", "kprime", "support"];
    let detail: Vec<String> = keys
        .iter()
        .filter_map(|k| {
            ledger
                .get(k)
                .filter(|v| !v.is_null())
                .map(|v| format!("{k}: {v}"))
        })
        .collect();
    let status = serde_json::to_value(status).expect("serializable");
    format!(
        "{}{}",
        status.as_str().unwrap_or("?"),
        if detail.is_empty() {
            String::new()
        } else {
            format!(" ({})", detail.join("; "))
        }
    )
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let is_gen = matches!(cli.command, Command::Gen { .. });
    let (status, ledger) = match run(cli.command) {
        Ok(r) => r,
        Err(e) => (Status::Error, json!({ "error": format!("{e:#}") })),
    };
    if is_gen && status != Status::Error {
        return ExitCode::SUCCESS;
    }
    let report = Report {
        command: argv[1..].to_vec(),
        status,
        ledger,
    };
    emit(&serde_json::to_string_pretty(&report).expect("serializable"));
    let name = report
        .command
        .first()
        .map(String::as_str)
        .unwrap_or("limlab");
    eprintln!("{name}: {}", summary(status, &report.ledger));
    ExitCode::from(status.exit_code())
}
