use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qforge_core::classify::{classify3, collapsibility_certificates, is_gap_algebra, Class3, Verdict3};
use qforge_core::clone::{
    chen_algebra, clone_closure, egp_test, essential_tuples, find_zhuk_condition, is_essential,
    projections_algebra, semilattice_algebra, tilde_relation, CloneBudget, ZhukOutcome,
};
use qforge_core::gadgets::{
    build_nu_for_sigma, build_r, build_rho, build_rho_prime, build_sigma_k, build_tau_k, build_z,
    check_nu_for_sigma, verify_pp_definition, AlphaBeta, Form,
};
use qforge_core::model::{
    parse_algebra, parse_sentence, parse_structure, Algebra, Domain, ElemSet, Relation, SentencePH, Structure, Tuple,
};
use qforge_core::powers::{is_k_collapsible, is_k_switchable, min_generating_size};
use qforge_core::qcsp::{
    alternation_class, csp_solve, eliminate_constant_atoms, naesat_brute, naesat_to_qcsp, pi2_nae_brute,
    pi2_naesat_gadget, qcsp_eval, qcsp_to_csp, solve_universal_conjunction, solve_via_canon, GadgetCase,
    NaeInstance, Pi2NaeInstance, Simplified, SwitchEvidence,
};
use qforge_core::Error;

use crate::{push_line, Budgets, Ctx, Report};

#[derive(Parser, Debug)]
#[command(name = "qforge", version, about = "Finite algebras, powers and quantified constraints")]
pub(crate) struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub(crate) struct Global {
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Term depth for clone searches.
    #[arg(long, global = true, value_name = "D")]
    pub budget_depth: Option<usize>,
    /// Largest power examined by bounded power checks.
    #[arg(long, global = true, value_name = "M")]
    pub budget_m: Option<usize>,
    /// Parallel suite steps.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
}

impl Global {
    pub fn apply(&self, b: &mut Budgets) {
        if let Some(d) = self.budget_depth {
            b.depth = d;
        }
        if let Some(m) = self.budget_m {
            b.m = m;
        }
        if let Some(j) = self.jobs {
            b.jobs = j.max(1);
        }
    }
}

#[derive(Subcommand, Debug)]
pub(crate) enum Command {
    /// Questions about one algebra.
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Generating sets of powers and adversaries.
    #[command(subcommand)]
    Powers(PowersCmd),
    /// Emit the gadget relations.
    #[command(subcommand)]
    Gadgets(GadgetsCmd),
    /// Evaluate, reduce and preprocess sentences.
    #[command(subcommand)]
    Qcsp(QcspCmd),
    /// Hardness reductions from NAE satisfiability.
    #[command(subcommand)]
    Reduce(ReduceCmd),
    /// Essential relations and pp-definition checks.
    #[command(subcommand)]
    Relations(RelationsCmd),
    /// Timed worked examples.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Run a JSONL manifest of commands and compare with its expectations.
    Suite {
        manifest: PathBuf,
        /// Write one run record per line here.
        #[arg(long)]
        records: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub(crate) enum AlgebraCmd {
    /// First covering pair (α,β) making every operation αβ-projective.
    Egp { file: PathBuf },
    /// Term operations of one arity, or a search for the Zhuk Condition.
    Clone {
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        arity: usize,
        #[arg(long)]
        zhuk: bool,
    },
    /// NP, coNP-complete or Pi2p-hard.
    Classify3 { file: PathBuf },
    /// G-set factors, Hubie-pols and bounded non-collapsibility evidence.
    Gap { file: PathBuf },
    /// A Hubie-pol family member preserving every relation of DELTA.
    Certify {
        file: PathBuf,
        delta: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub(crate) enum PowersCmd {
    /// Least size of a generating set of A^m.
    Gen {
        file: PathBuf,
        #[arg(long)]
        m: usize,
    },
    /// Does Ξ_{m,k} generate A^m for every m up to the budget?
    Switchable {
        file: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Does Υ_{m,k} generate A^m for every m up to the budget?
    Collapsible {
        file: PathBuf,
        #[arg(long)]
        k: usize,
        /// Source elements, default the whole domain.
        #[arg(long)]
        sources: Option<String>,
    },
}

#[derive(Args, Debug, Clone)]
pub(crate) struct AbArgs {
    #[arg(long, default_value = "0,2")]
    alpha: String,
    #[arg(long, default_value = "1,2")]
    beta: String,
    #[arg(long, default_value_t = 3)]
    domain: usize,
}

impl AbArgs {
    fn get(&self) -> Result<AlphaBeta, Error> {
        let d = Domain::new(self.domain)?;
        AlphaBeta::new(d, ElemSet::parse(&self.alpha, d)?, ElemSet::parse(&self.beta, d)?)
    }
}

#[derive(Args, Debug)]
pub(crate) struct FormArgs {
    /// Emit an explicit tuple list instead of DNF.
    #[arg(long, conflicts_with = "dnf")]
    tuples: bool,
    #[arg(long)]
    dnf: bool,
}

impl FormArgs {
    fn form(&self) -> Form {
        if self.tuples {
            Form::Tuples
        } else {
            Form::Dnf
        }
    }
}

#[derive(Subcommand, Debug)]
pub(crate) enum GadgetsCmd {
    /// τ_k, the disjunction of k copies of ρ' = α³ ∪ β³.
    Tau {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        ab: AbArgs,
        #[command(flatten)]
        form: FormArgs,
    },
    /// σ_k, the disjunction of k copies of ρ.
    Sigma {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        ab: AbArgs,
        #[command(flatten)]
        form: FormArgs,
    },
    /// ρ = α² ∪ β², or ρ' with --prime.
    Rho {
        /// ρ' (ternary) instead of ρ.
        #[arg(long)]
        prime: bool,
        #[command(flatten)]
        ab: AbArgs,
        #[command(flatten)]
        form: FormArgs,
    },
    /// The Z gadget for the Π_2 reduction.
    Z,
    /// The R gadget for the Π_2 reduction.
    R,
    /// The near-unanimity operation for σ_1..σ_m, checked.
    Nu {
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[command(flatten)]
        ab: AbArgs,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub(crate) enum Method {
    /// Game-tree evaluation.
    Brute,
    /// Skolem expansion over Ξ_{m,k}, needs --algebra.
    Csp,
    /// Canon substitution for almost existentially trivial structures.
    Canon,
    /// Atom-by-atom evaluation of purely universal sentences.
    Universal,
}

#[derive(Subcommand, Debug)]
pub(crate) enum QcspCmd {
    /// Decide a sentence over a structure.
    Solve {
        structure: PathBuf,
        sentence: PathBuf,
        #[arg(long, value_enum, default_value = "brute")]
        method: Method,
        /// Algebra whose switchability licenses the csp method.
        #[arg(long)]
        algebra: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Print the CSP instance obtained by Skolem expansion over Ξ_{m,k}.
    Reduce {
        structure: PathBuf,
        sentence: PathBuf,
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Eliminate atoms x=c.
    Preprocess {
        sentence: PathBuf,
        #[arg(long, default_value_t = 3)]
        domain: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub(crate) enum CaseArg {
    A,
    B,
}

#[derive(Subcommand, Debug)]
pub(crate) enum ReduceCmd {
    /// NAE instance to a purely universal sentence over τ_k.
    Naesat {
        file: PathBuf,
        #[command(flatten)]
        ab: AbArgs,
        /// Also evaluate the sentence and compare with brute force.
        #[arg(long)]
        eval: bool,
    },
    /// ∀∃ NAE instance to a Π_2 sentence.
    Pi2 {
        file: PathBuf,
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        eval: bool,
    },
}

#[derive(Subcommand, Debug)]
pub(crate) enum RelationsCmd {
    /// Essential tuples and ρ̃ for each relation of a structure.
    Essential {
        structure: PathBuf,
        #[arg(long)]
        rel: Option<String>,
    },
    /// Check that τ_k is the conjunction of σ_k over all pair choices.
    PpVerify {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        ab: AbArgs,
    },
}

#[derive(Subcommand, Debug)]
pub(crate) enum BenchCmd {
    /// Classify the three reference algebras and time each step.
    Vignette,
}

enum Failure {
    Core(Error),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Other(e)
    }
}

type Res = Result<Report, Failure>;

/// Runs a parsed command. Budget errors become inconclusive reports.
pub(crate) fn run(cmd: &Command, ctx: &mut Ctx) -> Result<Report, String> {
    let out = match cmd {
        Command::Algebra(c) => algebra(c, ctx),
        Command::Powers(c) => powers(c, ctx),
        Command::Gadgets(c) => gadgets(c),
        Command::Qcsp(c) => qcsp(c, ctx),
        Command::Reduce(c) => reduce(c, ctx),
        Command::Relations(c) => relations(c, ctx),
        Command::Bench(BenchCmd::Vignette) => vignette(),
        Command::Suite { manifest, records } => crate::suite::suite_command(manifest, records.as_deref(), ctx).map_err(Failure::Other),
    };
    match out {
        Ok(r) => Ok(r),
        Err(Failure::Core(e)) if e.is_budget() => Ok(Report::inconclusive(
            format!("inconclusive: {e}\n"),
            json!({ "inconclusive": e.to_string() }),
        )),
        Err(Failure::Core(e)) => Err(e.to_string()),
        Err(Failure::Other(e)) => Err(e),
    }
}

fn load_algebra(ctx: &mut Ctx, path: &PathBuf) -> Result<Algebra, Failure> {
    let text = ctx.read(path)?;
    parse_algebra(&text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn load_structure(ctx: &mut Ctx, path: &PathBuf) -> Result<Structure, Failure> {
    let text = ctx.read(path)?;
    parse_structure(&text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn load_sentence(ctx: &mut Ctx, path: &PathBuf) -> Result<SentencePH, Failure> {
    let text = ctx.read(path)?;
    parse_sentence(&text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn set_str(s: ElemSet) -> String {
    s.to_string()
}

fn tuple_str(t: &Tuple) -> String {
    t.iter().map(|e| e.to_string()).collect()
}

fn clone_budget(ctx: &Ctx) -> CloneBudget {
    CloneBudget {
        depth: ctx.budgets.depth,
        ..CloneBudget::default()
    }
}

fn algebra(cmd: &AlgebraCmd, ctx: &mut Ctx) -> Res {
    match cmd {
        AlgebraCmd::Egp { file } => {
            let alg = load_algebra(ctx, file)?;
            Ok(match egp_test(&alg)? {
                Some((a, b)) => Report::decided(
                    format!("EGP: every operation is αβ-projective for α = {a}, β = {b}\n"),
                    json!({ "egp": true, "alpha": set_str(a), "beta": set_str(b) }),
                ),
                None => Report::decided(
                    "PGP: no covering pair makes every operation αβ-projective\n",
                    json!({ "egp": false }),
                ),
            })
        }
        AlgebraCmd::Clone { file, arity, zhuk } => {
            let alg = load_algebra(ctx, file)?;
            let budget = clone_budget(ctx);
            if *zhuk {
                return zhuk_report(&alg, budget);
            }
            let closure = clone_closure(&alg, *arity, budget)?;
            let mut text = format!(
                "{} term operations of arity {}{}\n",
                closure.ops.len(),
                arity,
                if closure.exhausted { " found before the budget ran out" } else { "" }
            );
            let ops: Vec<Value> = closure
                .ops
                .iter()
                .map(|(t, term)| {
                    push_line(&mut text, format!("  {term}: {}", table_str(t.table())));
                    json!({ "term": term.to_string(), "table": t.table() })
                })
                .collect();
            let j = json!({ "arity": arity, "count": ops.len(), "complete": !closure.exhausted, "ops": ops, "budget_depth": budget.depth });
            Ok(if closure.exhausted {
                Report::inconclusive(text, j)
            } else {
                Report::decided(text, j)
            })
        }
        AlgebraCmd::Classify3 { file } => {
            let alg = load_algebra(ctx, file)?;
            let v = classify3(&alg)?;
            Ok(Report::decided(verdict_text(&v), verdict_json(&v)))
        }
        AlgebraCmd::Gap { file } => {
            let alg = load_algebra(ctx, file)?;
            let ev = is_gap_algebra(&alg)?;
            let mut text = String::new();
            push_line(&mut text, format!("gap algebra (bounded K={}, M={}): {}", ev.k_max, ev.m_max, ev.gap));
            match &ev.gset_factor {
                Some(f) => push_line(&mut text, format!("G-set factor on {} modulo {}", f.subalgebra, f.partition)),
                None => push_line(&mut text, "no G-set factor"),
            }
            if let Some((op, a)) = &ev.hubie_pol {
                push_line(&mut text, format!("`{op}` is a Hubie-pol in {{{a}}}"));
            }
            for (k, fail) in &ev.collapse_failures {
                match fail {
                    Some(m) => push_line(&mut text, format!("k={k}: Υ fails to generate at m={m}")),
                    None => push_line(&mut text, format!("k={k}: Υ generates for all m ≤ {}", ev.m_max)),
                }
            }
            Ok(Report::decided(text, serde_json::to_value(&ev).expect("serializable")))
        }
        AlgebraCmd::Certify { file, delta, n } => {
            let alg = load_algebra(ctx, file)?;
            let delta = load_structure(ctx, delta)?;
            Ok(match collapsibility_certificates(&alg, &delta, *n)? {
                Some(c) => Report::decided(
                    format!(
                        "{} with n={} preserves Δ; Hubie-pol source: {}\n",
                        c.family,
                        c.n,
                        c.hubie_source.map_or("none".into(), |a| format!("{{{a}}}"))
                    ),
                    json!({ "family": c.family, "n": c.n, "arity": c.op.arity(), "hubie_source": c.hubie_source }),
                ),
                None => Report::decided("no family member preserves Δ\n", json!({ "family": null })),
            })
        }
    }
}

fn table_str(t: &[u8]) -> String {
    t.iter().map(|e| e.to_string()).collect()
}

fn zhuk_report(alg: &Algebra, budget: CloneBudget) -> Res {
    Ok(match find_zhuk_condition(alg, budget)? {
        ZhukOutcome::Found(w) => Report::decided(
            format!(
                "Zhuk Condition holds (regime {}, depth {}):\n  p  = {} : {}\n  r3 = {} : {}\n",
                w.regime,
                w.depth,
                w.p,
                table_str(w.p_table.table()),
                w.r3,
                table_str(w.r3_table.table())
            ),
            json!({
                "zhuk": "found", "regime": w.regime, "depth": w.depth, "budget_depth": budget.depth,
                "p": w.p.to_string(), "p_table": w.p_table.table(),
                "r3": w.r3.to_string(), "r3_table": w.r3_table.table(),
            }),
        ),
        ZhukOutcome::Absent => Report::decided(
            "Zhuk Condition fails: neither regime has term witnesses\n",
            json!({ "zhuk": "absent" }),
        ),
        ZhukOutcome::Inconclusive { depth } => Report::inconclusive(
            format!("no witness up to depth {depth}; raise --budget-depth\n"),
            json!({ "zhuk": "inconclusive", "depth": depth, "budget_depth": budget.depth }),
        ),
    })
}

pub(crate) fn verdict_json(v: &Verdict3) -> Value {
    json!({
        "class": v.class.to_string(),
        "pgp": v.pgp,
        "alpha_beta": v.alpha_beta.map(|(a, b)| json!({ "alpha": set_str(a), "beta": set_str(b) })),
        "gset_factor": v.gset_factor.as_ref().map(|f| json!({
            "subalgebra": set_str(f.subalgebra), "partition": f.partition.to_string(),
        })),
        "switchability": v.switchability.as_ref().map(|s| json!({
            "k": s.k,
            "verdicts": s.verdicts,
        })),
    })
}

fn verdict_text(v: &Verdict3) -> String {
    let mut t = String::new();
    push_line(&mut t, format!("verdict: {}", v.class));
    match v.alpha_beta {
        Some((a, b)) => push_line(&mut t, format!("EGP: αβ-projective for α = {a}, β = {b}")),
        None => push_line(&mut t, "PGP: no αβ-projective pair"),
    }
    if let Some(f) = &v.gset_factor {
        push_line(&mut t, format!("G-set factor: subalgebra {} modulo {}", f.subalgebra, f.partition));
    } else if v.class != Class3::Np {
        push_line(&mut t, "no G-set factor");
    }
    if let Some(s) = &v.switchability {
        let ms: Vec<String> = s.verdicts.iter().map(|p| format!("m={} {}/{}", p.m, p.closure_size, p.seed_size)).collect();
        push_line(&mut t, format!("{}-switchable for m ≤ {}: {}", s.k, s.verdicts.len(), ms.join(", ")));
    } else if v.class == Class3::Np {
        push_line(&mut t, "no bounded switchability evidence");
    }
    t
}

fn powers(cmd: &PowersCmd, ctx: &mut Ctx) -> Res {
    match cmd {
        PowersCmd::Gen { file, m } => {
            let alg = load_algebra(ctx, file)?;
            let r = min_generating_size(&alg, *m)?;
            let witness: Vec<String> = r.witness.iter().map(tuple_str).collect();
            Ok(Report::decided(
                format!("f({}) = {} ({:?}); witness: {}\n", r.m, r.size, r.method, witness.join(" ")),
                json!({ "m": r.m, "size": r.size, "method": r.method, "witness": witness }),
            ))
        }
        PowersCmd::Switchable { file, k } => {
            let alg = load_algebra(ctx, file)?;
            let verdicts = is_k_switchable(&alg, *k, ctx.budgets.m)?;
            let first_fail = verdicts.iter().find(|v| !v.generates).map(|v| v.m);
            let mut text = String::new();
            for v in &verdicts {
                push_line(
                    &mut text,
                    format!("m={}: Ξ has {} tuples, closure {} → {}", v.m, v.seed_size, v.closure_size, v.generates),
                );
            }
            push_line(
                &mut text,
                match first_fail {
                    Some(m) => format!("not {k}-switchable: Ξ_{{{m},{k}}} does not generate"),
                    None => format!("{k}-switchable for every m ≤ {}", ctx.budgets.m),
                },
            );
            Ok(Report::decided(
                text,
                json!({ "k": k, "m_max": ctx.budgets.m, "switchable_up_to_budget": first_fail.is_none(), "first_failure": first_fail, "verdicts": verdicts }),
            ))
        }
        PowersCmd::Collapsible { file, k, sources } => {
            let alg = load_algebra(ctx, file)?;
            let d = alg.domain();
            let sources = match sources {
                Some(s) => ElemSet::parse(s, d)?,
                None => d.full_set(),
            };
            let verdicts = is_k_collapsible(&alg, *k, ctx.budgets.m, sources)?;
            let first_fail = verdicts.iter().find(|v| !v.union.generates).map(|v| v.m);
            let mut text = String::new();
            for v in &verdicts {
                let per: Vec<String> = v.per_source.iter().map(|(x, g)| format!("{x}:{g}")).collect();
                push_line(
                    &mut text,
                    format!("m={}: union {} of {} seeds → {}; per source {}", v.m, v.union.closure_size, v.union.seed_size, v.union.generates, per.join(" ")),
                );
            }
            push_line(
                &mut text,
                match first_fail {
                    Some(m) => format!("not {k}-collapsible from {sources}: fails at m={m}"),
                    None => format!("{k}-collapsible from {sources} for every m ≤ {}", ctx.budgets.m),
                },
            );
            Ok(Report::decided(
                text,
                json!({ "k": k, "sources": set_str(sources), "m_max": ctx.budgets.m, "collapsible_up_to_budget": first_fail.is_none(), "first_failure": first_fail, "verdicts": verdicts }),
            ))
        }
    }
}

fn relation_file(name: &str, rel: Relation) -> Res {
    let s = Structure::new(rel.domain()).with_relation(name, rel)?;
    let text = s.to_string();
    Ok(Report::decided(text.clone(), json!({ "structure": text })))
}

fn gadgets(cmd: &GadgetsCmd) -> Res {
    match cmd {
        GadgetsCmd::Tau { k, ab, form } => relation_file(&format!("tau{k}"), build_tau_k(&ab.get()?, *k, form.form())?),
        GadgetsCmd::Sigma { k, ab, form } => {
            relation_file(&format!("sigma{k}"), build_sigma_k(&ab.get()?, *k, form.form())?)
        }
        GadgetsCmd::Rho { prime, ab, form } => {
            let ab = ab.get()?;
            if *prime {
                relation_file("rho_prime", build_rho_prime(&ab, form.form())?)
            } else {
                relation_file("rho", build_rho(&ab, form.form())?)
            }
        }
        GadgetsCmd::Z => relation_file("Z", build_z()),
        GadgetsCmd::R => relation_file("R", build_r()),
        GadgetsCmd::Nu { m, ab } => {
            let ab = ab.get()?;
            let op = build_nu_for_sigma(&ab, *m)?;
            let check = check_nu_for_sigma(&ab, *m)?;
            let alg = Algebra::new(ab.domain()).with_op("nu", op)?;
            let mut text = alg.to_string();
            push_line(
                &mut text,
                format!("# preserves σ_1..σ_{m}: {}; idempotent: {}", check.holds(), check.fixes_constants),
            );
            Ok(Report::decided(
                text,
                json!({ "algebra": alg.to_string(), "check": check, "holds": check.holds() }),
            ))
        }
    }
}

fn qcsp(cmd: &QcspCmd, ctx: &mut Ctx) -> Res {
    match cmd {
        QcspCmd::Solve { structure, sentence, method, algebra, k } => {
            let s = load_structure(ctx, structure)?;
            let phi = load_sentence(ctx, sentence)?;
            let class = alternation_class(&phi).to_string();
            let (holds, extra) = match method {
                Method::Brute => (qcsp_eval(&s, &phi, None)?, json!(null)),
                Method::Canon => (solve_via_canon(&s, &phi)?, json!(null)),
                Method::Universal => (solve_universal_conjunction(&s, &phi)?, json!(null)),
                Method::Csp => {
                    let path = algebra
                        .as_ref()
                        .ok_or_else(|| Failure::Other("--method csp needs --algebra".into()))?;
                    let alg = load_algebra(ctx, path)?;
                    let m = phi.universals().count().max(1);
                    let evidence = SwitchEvidence::verify(&alg, &s, *k, m)?;
                    let inst = qcsp_to_csp(&s, &phi, &evidence)?;
                    let sol = csp_solve(&inst, &s)?;
                    let witness = sol.as_ref().map(|v| {
                        inst.names.iter().zip(v).map(|(n, e)| format!("{n}={e}")).collect::<Vec<_>>()
                    });
                    (sol.is_some(), json!({ "csp_variables": inst.num_vars(), "csp_constraints": inst.constraints.len(), "skolem_witness": witness }))
                }
            };
            Ok(Report::decided(
                format!("{holds}  ({class}, {})\n", method_name(*method)),
                json!({ "holds": holds, "class": class, "method": method_name(*method), "detail": extra }),
            ))
        }
        QcspCmd::Reduce { structure, sentence, algebra, k } => {
            let s = load_structure(ctx, structure)?;
            let phi = load_sentence(ctx, sentence)?;
            let alg = load_algebra(ctx, algebra)?;
            let m = phi.universals().count().max(1);
            let evidence = SwitchEvidence::verify(&alg, &s, *k, m)?;
            let inst = qcsp_to_csp(&s, &phi, &evidence)?;
            let text = inst.to_string();
            Ok(Report::decided(
                text.clone(),
                json!({ "variables": inst.num_vars(), "constraints": inst.constraints.len(), "instance": text }),
            ))
        }
        QcspCmd::Preprocess { sentence, domain } => {
            let phi = load_sentence(ctx, sentence)?;
            Ok(match eliminate_constant_atoms(&phi, Domain::new(*domain)?)? {
                Simplified::False => Report::decided("false\n", json!({ "false": true })),
                Simplified::Sentence(psi) => {
                    Report::decided(psi.to_string(), json!({ "false": false, "sentence": psi.to_string() }))
                }
            })
        }
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Brute => "brute",
        Method::Csp => "csp",
        Method::Canon => "canon",
        Method::Universal => "universal",
    }
}

fn reduce(cmd: &ReduceCmd, ctx: &mut Ctx) -> Res {
    let (s, phi, brute, holds) = match cmd {
        ReduceCmd::Naesat { file, ab, eval } => {
            let inst = NaeInstance::parse(&ctx.read(file)?)?;
            let (s, phi) = naesat_to_qcsp(&inst, &ab.get()?)?;
            let holds = if *eval { Some(qcsp_eval(&s, &phi, None)?) } else { None };
            // ψ holds exactly when the instance is not NAE-satisfiable
            (s, phi, eval.then(|| !naesat_brute(&inst)), holds)
        }
        ReduceCmd::Pi2 { file, case, eval } => {
            let inst = Pi2NaeInstance::parse(&ctx.read(file)?)?;
            let case = match case {
                CaseArg::A => GadgetCase::A,
                CaseArg::B => GadgetCase::B,
            };
            let (s, phi) = pi2_naesat_gadget(&inst, case)?;
            let holds = if *eval { Some(qcsp_eval(&s, &phi, None)?) } else { None };
            (s, phi, eval.then(|| pi2_nae_brute(&inst, case)), holds)
        }
    };
    let mut text = format!("{s}---\n{phi}");
    if let (Some(h), Some(b)) = (holds, brute) {
        push_line(&mut text, format!("# sentence: {h}; brute force: {b}; agree: {}", h == b));
    }
    Ok(Report::decided(
        text,
        json!({
            "structure": s.to_string(),
            "sentence": phi.to_string(),
            "class": alternation_class(&phi).to_string(),
            "holds": holds,
            "expected": brute,
            "agree": holds.zip(brute).map(|(h, b)| h == b),
        }),
    ))
}

fn relations(cmd: &RelationsCmd, ctx: &mut Ctx) -> Res {
    match cmd {
        RelationsCmd::Essential { structure, rel } => {
            let s = load_structure(ctx, structure)?;
            let mut text = String::new();
            let mut out = Vec::new();
            for r in s.relations() {
                if rel.as_ref().is_some_and(|n| n != &r.name) || r.relation.arity() == 0 {
                    continue;
                }
                let ess = is_essential(&r.relation)?;
                let tuples: Vec<String> = essential_tuples(&r.relation)?.iter().map(tuple_str).collect();
                let tilde = tilde_relation(&r.relation)?.materialize()?.len();
                push_line(
                    &mut text,
                    format!("{}: essential={ess}; |ρ̃|={tilde}; essential tuples: {}", r.name, if tuples.is_empty() { "none".into() } else { tuples.join(" ") }),
                );
                out.push(json!({ "name": r.name, "essential": ess, "tilde_size": tilde, "essential_tuples": tuples }));
            }
            if let Some(n) = rel {
                if out.is_empty() {
                    return Err(Error::Unknown(n.clone()).into());
                }
            }
            Ok(Report::decided(text, json!({ "relations": out })))
        }
        RelationsCmd::PpVerify { k, ab } => {
            let c = verify_pp_definition(&ab.get()?, *k)?;
            Ok(Report::decided(
                format!(
                    "τ_{k} {} the conjunction of {} σ_{k} atoms ({} assignments, |τ|={}, |Φ|={})\n",
                    if c.equal { "equals" } else { "differs from" },
                    c.conjuncts,
                    c.assignments,
                    c.tau_size,
                    c.phi_size
                ),
                serde_json::to_value(&c).expect("serializable"),
            ))
        }
    }
}

fn vignette() -> Res {
    let d = Domain::new(3)?;
    let cases = [
        ("(D;s)", semilattice_algebra()),
        ("(D;r,s)", chen_algebra()),
        ("projections", projections_algebra(d)),
    ];
    let mut text = String::new();
    let mut rows = Vec::new();
    for (name, alg) in cases {
        let start = Instant::now();
        let v = classify3(&alg)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        push_line(&mut text, format!("{name:<12} {:<14} {ms:>9.2} ms", v.class.to_string()));
        rows.push(json!({ "algebra": name, "verdict": verdict_json(&v) }));
    }
    Ok(Report::decided(text, json!({ "results": rows })))
}
