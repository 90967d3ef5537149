use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cqproof::deriver_cq::cq_schema_checker;
use cqproof::deriver_sk::{sk_schema_checker, SkError};
use cqproof::export::{export, from_json, ExportFormat};
use cqproof::fixtures::{gen_chain, gen_sat, gen_sat_cq, Fixture};
use cqproof::graph::{depth, size, tree_size, validate_proof, Proof, Sentence};
use cqproof::search::{
    decide_op, measure_of, min_size, min_tree_size, tree_shaped_min, Deriver, Measure, SearchError, SearchGoal,
};
use cqproof::syntax::{parse_document, print_kb, print_query, Document};
use cqproof::temporal::{temporal_min_proof, Formula, Interval, TemporalChecker, TemporalError, TemporalTheory};
use cqproof::translate::{cq_to_sk, sk_to_cq};
use cqproof::{Cq, KnowledgeBase};

#[derive(Parser)]
#[command(
    name = "cqproof",
    version,
    about = "Explanation proofs for certain answers to conjunctive queries over DL-Lite_R knowledge bases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs and report entailment, or validate a proof against them.
    Check {
        #[command(flatten)]
        inputs: Inputs,
        /// Proof in cqproof/1 JSON to validate.
        #[arg(long)]
        proof: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = DeriverArg::Sk)]
        deriver: DeriverArg,
    },
    /// Compute a minimal proof of the query answer.
    Prove {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        search: SearchArgs,
        /// Fail with exit code 1 if the minimum exceeds this bound.
        #[arg(long)]
        bound: Option<u128>,
        /// Use the polynomial algorithm for tree-shaped queries.
        #[arg(long)]
        tree_shaped_fast: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Decide whether a proof within the bound exists.
    Decide {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        bound: u128,
    },
    /// Translate a proof between the CQ and Skolemized derivers.
    Translate {
        /// Proof in cqproof/1 JSON.
        proof: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum)]
        to: TargetDeriver,
        #[command(flatten)]
        out: Output,
    },
    /// Prove a metric temporal query answer on an interval.
    TemporalProve {
        #[command(flatten)]
        inputs: Inputs,
        /// Target interval such as `[0,5]` or `[-inf,3]`; defaults to the `at` statement.
        #[arg(long, allow_hyphen_values = true)]
        target: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Print a hardness gadget instance.
    GenFixture {
        #[command(subcommand)]
        kind: FixtureKind,
    },
    /// Re-render a JSON proof.
    Export {
        proof: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FixtureKind {
    /// Chain of n inclusions in front of the query predicates.
    Chain {
        #[arg(long)]
        n: usize,
        /// Query file; defaults to `q(x) :- A(x).` with answer `a`.
        #[arg(long)]
        query: Option<PathBuf>,
    },
    /// SAT encoding of a CNF given as `1 -2; 2 3`.
    Sat {
        #[arg(long, allow_hyphen_values = true)]
        cnf: String,
        /// Number of variables; defaults to the largest one mentioned.
        #[arg(long)]
        vars: Option<usize>,
        /// Bound for the CQ deriver instead of the Skolemized one.
        #[arg(long)]
        cq: bool,
    },
}

#[derive(Args)]
struct Inputs {
    /// Input files (KB, query, temporal facts), read as one document.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = DeriverArg::Sk)]
    deriver: DeriverArg,
    #[arg(long, value_enum, default_value_t = MeasureArg::Tree)]
    measure: MeasureArg,
    /// Chase depth bound.
    #[arg(long)]
    depth: Option<usize>,
    /// Maximum number of search expansions.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DeriverArg {
    Cq,
    Sk,
    SkPrime,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetDeriver {
    Cq,
    Sk,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Size,
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

enum Verdict {
    Yes,
    No,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Verdict::Yes) => ExitCode::SUCCESS,
        Ok(Verdict::No) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_cap(&e) {
                3
            } else if is_not_entailed(&e) {
                1
            } else {
                2
            })
        }
    }
}

fn is_not_entailed(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(c.downcast_ref::<SearchError>(), Some(SearchError::NotEntailed(_)))
            || matches!(c.downcast_ref::<TemporalError>(), Some(TemporalError::NotEntailed(..)))
    })
}

fn is_cap(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<SearchError>().is_some_and(SearchError::is_cap)
            || matches!(c.downcast_ref::<SkError>(), Some(SkError::FactCap(_)))
            || matches!(c.downcast_ref::<TemporalError>(), Some(TemporalError::Search(s)) if s.is_cap())
            || matches!(c.downcast_ref::<TemporalError>(), Some(TemporalError::Sk(SkError::FactCap(_))))
    })
}

fn run(cmd: Command) -> Result<Verdict> {
    match cmd {
        Command::Check { inputs, proof, deriver } => check(&load(&inputs)?, proof.as_deref(), deriver),
        Command::Prove { inputs, search, bound, tree_shaped_fast, out } => {
            let doc = load(&inputs)?;
            let goal = goal(&doc, &search)?;
            let p = prove(&goal, search.deriver, tree_shaped_fast)?;
            let m = measure_of(goal.measure, &p);
            emit(&p, &out)?;
            if let Some(n) = bound {
                if m > n {
                    eprintln!("minimum {m} exceeds bound {n}");
                    return Ok(Verdict::No);
                }
            }
            Ok(Verdict::Yes)
        }
        Command::Decide { inputs, search, bound } => {
            let doc = load(&inputs)?;
            let g = goal(&doc, &search)?.with_bound(bound);
            if search.deriver == DeriverArg::Cq {
                bail!("decide supports the sk and sk-prime derivers");
            }
            let ok = decide_op(&g)?;
            println!("{ok}");
            Ok(if ok { Verdict::Yes } else { Verdict::No })
        }
        Command::Translate { proof, inputs, to, out } => {
            let doc = load(&inputs)?;
            let (kb, q) = (doc.kb(), query(&doc)?);
            let p = read_proof(&proof)?;
            let t = match to {
                TargetDeriver::Cq => sk_to_cq(&kb, &p, &q)?,
                TargetDeriver::Sk => cq_to_sk(&kb, &p, &q)?,
            };
            emit(&t, &out)?;
            Ok(Verdict::Yes)
        }
        Command::TemporalProve { inputs, target, out } => {
            let doc = load(&inputs)?;
            let mtcq = doc.query.clone().ok_or_else(|| anyhow!("no query in the input"))?;
            let target = match target {
                Some(t) => parse_interval(&t)?,
                None => {
                    doc.target.ok_or_else(|| anyhow!("no target interval; pass --target or add an `at` statement"))?
                }
            };
            let answers = doc.answers.clone().unwrap_or_default();
            let p = temporal_min_proof(&doc.kb(), &doc.tabox(), &mtcq, &answers, &target)?;
            emit(&p, &out)?;
            Ok(Verdict::Yes)
        }
        Command::GenFixture { kind } => {
            print!("{}", fixture_text(&gen_fixture(kind)?));
            Ok(Verdict::Yes)
        }
        Command::Export { proof, format, output } => {
            emit(&read_proof(&proof)?, &Output { format, output })?;
            Ok(Verdict::Yes)
        }
    }
}

fn load(inputs: &Inputs) -> Result<Document> {
    let mut doc = Document::default();
    for path in &inputs.files {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let d = parse_document(&text).with_context(|| format!("parsing {}", path.display()))?;
        doc.tbox.extend(d.tbox);
        doc.abox.extend(d.abox);
        doc.temporal.extend(d.temporal);
        doc.query = d.query.or(doc.query);
        doc.answers = d.answers.or(doc.answers);
        doc.target = d.target.or(doc.target);
    }
    Ok(doc)
}

fn query(doc: &Document) -> Result<Cq> {
    let m = doc.query.as_ref().ok_or_else(|| anyhow!("no query in the input"))?;
    let Formula::Cq(c) = &m.formula else { bail!("the query is temporal; use temporal-prove") };
    let q = Cq::new(m.answer_vars.clone(), c.atoms.clone())?;
    Ok(q.instantiate(doc.answers.as_deref().unwrap_or_default())?)
}

fn goal(doc: &Document, args: &SearchArgs) -> Result<SearchGoal> {
    let d = match args.deriver {
        DeriverArg::Cq | DeriverArg::Sk => Deriver::Sk,
        DeriverArg::SkPrime => Deriver::SkPrime,
    };
    let m = match args.measure {
        MeasureArg::Size => Measure::Size,
        MeasureArg::Tree => Measure::TreeSize,
    };
    let mut g = SearchGoal::new(doc.kb(), query(doc)?, Vec::new(), d, m);
    if let Some(depth) = args.depth {
        let mut cfg = g.chase_config();
        cfg.depth_bound = depth;
        g = g.with_chase(cfg);
    }
    if let Some(cap) = args.cap {
        g = g.with_cap(cap);
    }
    Ok(g)
}

fn prove(g: &SearchGoal, deriver: DeriverArg, fast: bool) -> Result<Proof> {
    let p = match g.measure {
        Measure::TreeSize if fast && g.deriver == Deriver::Sk => tree_shaped_min(g)?,
        Measure::TreeSize => min_tree_size(g)?,
        Measure::Size => min_size(g)?,
    };
    if deriver == DeriverArg::Cq {
        return Ok(sk_to_cq(&g.kb, &p, &g.query)?);
    }
    Ok(p)
}

fn check(doc: &Document, proof: Option<&Path>, deriver: DeriverArg) -> Result<Verdict> {
    let kb: KnowledgeBase = doc.kb();
    let Some(path) = proof else {
        println!("{} axioms, {} assertions, {} temporal facts", kb.tbox.len(), kb.abox.len(), doc.temporal.len());
        if doc.query.as_ref().is_some_and(|m| matches!(m.formula, Formula::Cq(_))) {
            let g = SearchGoal::new(kb, query(doc)?, Vec::new(), Deriver::Sk, Measure::TreeSize);
            return match min_tree_size(&g) {
                Ok(_) => {
                    println!("entailed");
                    Ok(Verdict::Yes)
                }
                Err(SearchError::NotEntailed(_)) => {
                    println!("not entailed");
                    Ok(Verdict::No)
                }
                Err(e) => Err(e.into()),
            };
        }
        return Ok(Verdict::Yes);
    };
    let p = read_proof(path)?;
    let temporal = p.graph.vertices().any(|v| matches!(p.graph.label(v), Sentence::Annotated(_)));
    let report = if temporal {
        let tabox = doc.tabox();
        validate_proof(&p, &TemporalTheory { kb: &kb, tabox: &tabox }, &TemporalChecker::new(&kb)?)
    } else {
        match deriver {
            DeriverArg::Cq => validate_proof(&p, &kb, &cq_schema_checker(&kb)),
            DeriverArg::Sk => validate_proof(&p, &kb, &sk_schema_checker(&kb, false)?),
            DeriverArg::SkPrime => validate_proof(&p, &kb, &sk_schema_checker(&kb, true)?),
        }
    };
    for f in &report.failures {
        println!("invalid: {f:?}");
    }
    let mut ok = report.is_valid();
    if !temporal && doc.query.is_some() {
        let q = query(doc)?;
        if !p.proves(&Sentence::Cq(q.clone())) {
            println!("invalid: proof concludes {}, not {q}", p.conclusion());
            ok = false;
        }
    }
    if ok {
        println!("valid (size {}, tree size {}, depth {})", size(&p), tree_size(&p)?, depth(&p)?);
        Ok(Verdict::Yes)
    } else {
        Ok(Verdict::No)
    }
}

fn read_proof(path: &Path) -> Result<Proof> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(p: &Proof, out: &Output) -> Result<()> {
    let text = match out.format {
        Format::Json => export(p, ExportFormat::Json)?,
        Format::Dot => export(p, ExportFormat::Dot)?,
        Format::Text => render_text(p)?,
    };
    match &out.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render_text(p: &Proof) -> Result<String> {
    let mut out = String::new();
    for v in p.graph.topo_order()? {
        let _ = write!(out, "{v}: {}", p.graph.label(v));
        if let Some(e) = p.graph.incoming(v).first() {
            let srcs: Vec<String> = e.sources.iter().map(ToString::to_string).collect();
            let _ = write!(out, "  [{} {}]", e.rule, srcs.join(" "));
        }
        out.push('\n');
    }
    let _ = writeln!(out, "size {}, tree size {}, depth {}", size(p), tree_size(p)?, depth(p)?);
    Ok(out)
}

fn parse_interval(s: &str) -> Result<Interval> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| anyhow!("interval must look like [lo,hi], got `{s}`"))?;
    let (lo, hi) = inner.split_once(',').ok_or_else(|| anyhow!("interval must look like [lo,hi], got `{s}`"))?;
    let end = |t: &str, inf: &str| -> Result<Option<i64>> {
        let t = t.trim();
        if t == inf {
            Ok(None)
        } else {
            t.parse().map(Some).with_context(|| format!("bad interval endpoint `{t}`"))
        }
    };
    Ok(Interval::new(end(lo, "-inf")?, end(hi, "inf")?)?)
}

fn gen_fixture(kind: FixtureKind) -> Result<Fixture> {
    match kind {
        FixtureKind::Chain { n, query } => {
            let doc = match query {
                Some(path) => load(&Inputs { files: vec![path] })?,
                None => parse_document("q(x) :- A(x).\nanswers a.")?,
            };
            let m = doc.query.as_ref().ok_or_else(|| anyhow!("no query in the input"))?;
            let Formula::Cq(c) = &m.formula else { bail!("chain fixtures need an atemporal query") };
            let q = Cq::new(m.answer_vars.clone(), c.atoms.clone())?;
            Ok(gen_chain(&doc.kb(), &q, doc.answers.as_deref().unwrap_or_default(), n)?)
        }
        FixtureKind::Sat { cnf, vars, cq } => {
            let clauses = parse_cnf(&cnf)?;
            let n =
                vars.unwrap_or_else(|| clauses.iter().flatten().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0));
            Ok(if cq { gen_sat_cq(n, &clauses)? } else { gen_sat(n, &clauses)? })
        }
    }
}

fn parse_cnf(s: &str) -> Result<Vec<Vec<i32>>> {
    s.split(';')
        .map(|c| c.split_whitespace().map(|l| l.parse().with_context(|| format!("bad literal `{l}`"))).collect())
        .collect()
}

fn fixture_text(f: &Fixture) -> String {
    let mut out = print_kb(&f.kb);
    let q = print_query(&f.query, &f.answer);
    out.push_str(q.split_once('\n').map_or(q.as_str(), |(_, rest)| rest));
    if let Some(b) = f.bound {
        let _ = writeln!(out, "% bound {b}");
    }
    if let Some(e) = f.expected {
        let _ = writeln!(out, "% expected {e}");
    }
    out
}
