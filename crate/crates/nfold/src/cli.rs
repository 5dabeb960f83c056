//! Command-line front end.
//!
//! Exit codes: 0 for a feasible, valid or optimal verdict, 1 for an
//! infeasible or invalid verdict, 2 for usage, parse and budget errors.
//! Verdicts go to stdout as JSON, summaries to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use nfold_core::augment::{SerialSearch, StepSearch};
use nfold_core::tables::{self, Certificate, Route, SolveReport, Strategy, TableSolver, Verdict};
use nfold_core::{conesolver, graver, oracle, presentation};
use nfold_core::{Budgets, CompactPresentation, HugeNFoldInstance, Int};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::format::{
    self, CertificateFile, Dec, Instance, Metadata, PresentationFile, SolutionInput, VerdictFile,
    VerdictKind,
};
use crate::search::ThreadedSearch;

/// Environment variable overriding all search budgets with one node count.
pub const BUDGET_ENV: &str = "HUGE_NFOLD_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "nfold", version, about = "Huge n-fold integer programs and huge three-way tables")]
struct Cli {
    /// Worker threads for augmentation rounds.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Use the brute-force reference oracles instead of the solvers.
    #[arg(long, global = true)]
    oracle: bool,
    /// Record wall time in output files (makes them run dependent).
    #[arg(long, global = true)]
    record_time: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Augment,
    Cone,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Optimize an n-fold program, or decide a table instance.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "augment")]
        strategy: StrategyArg,
        /// Also write the verdict file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide feasibility only.
    Feasible {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "augment")]
        strategy: StrategyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a solution against an instance.
    Check { instance: PathBuf, solution: PathBuf },
    /// Verify an infeasibility certificate from scratch.
    Certify {
        certificate: PathBuf,
        /// Also require the certificate to belong to this instance.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Graver basis of a matrix.
    Graver {
        #[arg(long)]
        matrix: PathBuf,
        /// Entry bound of the search box (oracle mode only).
        #[arg(long = "box", default_value_t = 4)]
        bound: i64,
    },
    /// Graver complexity and templates of a bimatrix.
    Complexity {
        #[arg(long)]
        bimatrix: PathBuf,
    },
    /// Shrink the supports of a solution.
    Reduce {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write out every brick of a solution.
    Expand {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = presentation::EXPAND_THRESHOLD)]
        max_n: u64,
    },
}

/// What a command produced.
struct Output {
    json: String,
    summary: String,
    code: i32,
    out: Option<PathBuf>,
}

impl Output {
    fn new<T: Serialize>(v: &T, summary: String, code: i32) -> Self {
        Output { json: format::to_json(v), summary, code, out: None }
    }
}

/// Budgets after applying `HUGE_NFOLD_BUDGET`.
pub fn budgets_from_env() -> anyhow::Result<Budgets> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => {
            let nodes: u64 = v.trim().parse().map_err(|_| anyhow!("{BUDGET_ENV} must be a node count, got {v:?}"))?;
            Ok(Budgets::default().with_search_budget(nodes))
        }
        Err(std::env::VarError::NotPresent) => Ok(Budgets::default()),
        Err(e) => bail!("{BUDGET_ENV}: {e}"),
    }
}

/// Run with the given arguments (including the program name) and return
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            if let Some(path) = &out.out {
                if let Err(e) = std::fs::write(path, &out.json) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return 2;
                }
            }
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.json.as_bytes());
            let _ = stdout.flush();
            eprintln!("{}", out.summary);
            out.code
        }
        Err(e) => {
            let budget = e.chain().any(|c| c.downcast_ref::<nfold_core::Error>().is_some_and(nfold_core::Error::is_budget));
            let label = if budget { "budget error" } else { "error" };
            eprintln!("{label}: {e:#}");
            2
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<Output> {
    let budgets = budgets_from_env()?;
    let threaded = ThreadedSearch { threads: cli.threads.max(1) };
    let searcher: &dyn StepSearch = if cli.threads > 1 { &threaded } else { &SerialSearch };
    let mut solver = TableSolver::with_searcher(budgets, searcher);
    let started = Instant::now();
    let ctx = Ctx { oracle: cli.oracle, record_time: cli.record_time, started };
    match &cli.cmd {
        Cmd::Solve { file, strategy, out } => {
            let mut o = ctx.solve(&mut solver, file, *strategy, false)?;
            o.out = out.clone();
            Ok(o)
        }
        Cmd::Feasible { file, strategy, out } => {
            let mut o = ctx.solve(&mut solver, file, *strategy, true)?;
            o.out = out.clone();
            Ok(o)
        }
        Cmd::Check { instance, solution } => check(instance, solution),
        Cmd::Certify { certificate, instance } => certify(&mut solver, certificate, instance.as_deref()),
        Cmd::Graver { matrix, bound } => graver_cmd(&budgets, matrix, *bound, cli.oracle),
        Cmd::Complexity { bimatrix } => complexity(&budgets, bimatrix),
        Cmd::Reduce { instance, solution, out } => {
            let mut o = reduce(instance, solution)?;
            o.out = out.clone();
            Ok(o)
        }
        Cmd::Expand { instance, solution, max_n } => expand(instance, solution, *max_n),
    }
}

fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    format::read_instance(path)?.to_instance().with_context(|| format!("instance {}", path.display()))
}

/// The n-fold program behind an instance file.
fn as_nfold(inst: &Instance) -> anyhow::Result<HugeNFoldInstance> {
    match inst {
        Instance::NFold(n) => Ok(n.clone()),
        Instance::Table(t) => Ok(tables::encode_table(t)?),
    }
}

fn read_solution(path: &Path) -> anyhow::Result<CompactPresentation> {
    Ok(format::read_json::<SolutionInput>(path)?.cp())
}

struct Ctx {
    oracle: bool,
    record_time: bool,
    started: Instant,
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::FastReject => "fast_reject",
        Route::Augmentation => "augmentation",
        Route::Exhaustive => "exhaustive",
        Route::Cone => "cone",
    }
}

impl Ctx {
    fn metadata(&self, strategy: &str, route: Option<&str>, rounds: u64, maps: u64) -> Metadata {
        Metadata {
            strategy: strategy.into(),
            route: route.map(Into::into),
            rounds,
            maps_evaluated: maps,
            wall_time_ms: self.record_time.then(|| self.started.elapsed().as_millis() as u64),
        }
    }

    fn verdict(&self, kind: VerdictKind, cost: Option<Int>, cp: Option<&CompactPresentation>, cert: Option<&Certificate>, meta: Metadata) -> Output {
        let summary = match (kind, cp) {
            (VerdictKind::Infeasible, _) => format!(
                "infeasible{} ({} strategy, {} ms)",
                if cert.is_some() { ", certificate attached" } else { "" },
                meta.strategy,
                self.started.elapsed().as_millis()
            ),
            (_, Some(cp)) => format!(
                "{}{}: support sizes {:?} ({} strategy, {} rounds, {} ms)",
                if kind == VerdictKind::Optimal { "optimal" } else { "feasible" },
                cost.as_ref().map(|c| format!(", cost {c}")).unwrap_or_default(),
                cp.support_sizes(),
                meta.strategy,
                meta.rounds,
                self.started.elapsed().as_millis()
            ),
            _ => format!("{kind:?}"),
        };
        let file = VerdictFile {
            verdict: kind,
            cost: cost.map(Dec),
            presentation: cp.map(PresentationFile::from_cp),
            certificate: cert.map(CertificateFile::from_certificate),
            metadata: meta,
        };
        let code = if kind == VerdictKind::Infeasible { 1 } else { 0 };
        Output::new(&file, summary, code)
    }

    fn table_report(&self, rep: &SolveReport, strategy: &str) -> Output {
        let meta = self.metadata(strategy, Some(route_name(rep.route)), rep.rounds, rep.maps_evaluated);
        match &rep.verdict {
            Verdict::Feasible { cp, .. } => self.verdict(VerdictKind::Feasible, None, Some(cp), None, meta),
            Verdict::Infeasible(c) => self.verdict(VerdictKind::Infeasible, None, None, Some(c), meta),
        }
    }

    fn solve(&self, solver: &mut TableSolver, file: &Path, strategy: StrategyArg, feasibility: bool) -> anyhow::Result<Output> {
        let inst = read_instance(file)?;
        if self.oracle {
            return self.solve_oracle(&inst, feasibility, &solver.budgets);
        }
        let name = match strategy {
            StrategyArg::Augment => "augment",
            StrategyArg::Cone => "cone",
        };
        match (&inst, strategy) {
            (Instance::Table(t), StrategyArg::Augment) => Ok(self.table_report(&solver.solve_table(t, Strategy::Augment)?, name)),
            (Instance::Table(t), StrategyArg::Cone) => Ok(self.table_report(&solver.solve_table(t, Strategy::Cone)?, name)),
            (Instance::NFold(n), StrategyArg::Augment) if feasibility => Ok(self.table_report(&solver.phase_one(n)?, name)),
            (Instance::NFold(n), StrategyArg::Augment) => {
                let rep = solver.solve_nfold(n)?;
                let meta = self.metadata(name, None, rep.rounds, rep.maps_evaluated);
                Ok(match rep.outcome {
                    tables::NFoldOutcome::Optimal { cp, cost } => {
                        self.verdict(VerdictKind::Optimal, Some(cost), Some(&cp), None, meta)
                    }
                    tables::NFoldOutcome::Infeasible(c) => {
                        self.verdict(VerdictKind::Infeasible, None, None, Some(&Certificate::Slack(c)), meta)
                    }
                })
            }
            (Instance::NFold(n), StrategyArg::Cone) => match conesolver::solve_cone(n, &solver.budgets)? {
                Some(sol) => {
                    let meta = self.metadata(name, Some("cone"), sol.queries, 0);
                    Ok(if feasibility {
                        self.verdict(VerdictKind::Feasible, None, Some(&sol.cp), None, meta)
                    } else {
                        self.verdict(VerdictKind::Optimal, Some(sol.cost), Some(&sol.cp), None, meta)
                    })
                }
                None => {
                    // attach a certificate when the slack program applies
                    let cert = match tables::build_auxiliary(n).and_then(|_| solver.phase_one(n)) {
                        Ok(SolveReport { verdict: Verdict::Infeasible(c), .. }) => Some(c),
                        Ok(_) => bail!("cone search and slack program disagree on feasibility"),
                        Err(_) => None,
                    };
                    let meta = self.metadata(name, Some("cone"), 0, 0);
                    Ok(self.verdict(VerdictKind::Infeasible, None, None, cert.as_ref(), meta))
                }
            },
        }
    }

    fn solve_oracle(&self, inst: &Instance, feasibility: bool, budgets: &Budgets) -> anyhow::Result<Output> {
        let meta = self.metadata("oracle", None, 0, 0);
        match inst {
            Instance::Table(t) => {
                let small = |x: &Int| x.to_i64().ok_or_else(|| anyhow!("oracle: value {x} too large"));
                let smalls = |v: &[Int]| v.iter().map(small).collect::<anyhow::Result<Vec<i64>>>();
                let g = smalls(&t.line_sums_flat())?;
                let types = t
                    .types
                    .iter()
                    .map(|k| {
                        let c = k.count.to_usize().filter(|&c| c <= 64).ok_or_else(|| anyhow!("oracle: count {} too large", k.count))?;
                        Ok((smalls(&k.f)?, smalls(&k.e)?, c))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                let found = oracle::bf_table_feasible(t.l, t.m, &g, &types, oracle::TableOrder::LayerMajor, budgets.oracle_nodes)?;
                Ok(match found {
                    None => self.verdict(VerdictKind::Infeasible, None, None, None, meta),
                    Some(layers) => {
                        let mut maps = vec![std::collections::BTreeMap::new(); types.len()];
                        let mut it = layers.into_iter();
                        for (k, (_, _, c)) in types.iter().enumerate() {
                            for layer in it.by_ref().take(*c) {
                                let z: Vec<Int> = layer.into_iter().map(Int::from).collect();
                                *maps[k].entry(z).or_insert_with(|| Int::from(0)) += 1;
                            }
                        }
                        let cp = CompactPresentation::from_maps(maps);
                        self.verdict(VerdictKind::Feasible, None, Some(&cp), None, meta)
                    }
                })
            }
            Instance::NFold(n) => Ok(match oracle::bf_nfold(n, budgets.oracle_nodes)? {
                None => self.verdict(VerdictKind::Infeasible, None, None, None, meta),
                Some(opt) => {
                    let mut maps = vec![std::collections::BTreeMap::new(); n.t()];
                    let mut it = opt.bricks.into_iter();
                    for (k, t) in n.types().iter().enumerate() {
                        let c = t.count.to_usize().expect("oracle counts are small");
                        for z in it.by_ref().take(c) {
                            *maps[k].entry(z).or_insert_with(|| Int::from(0)) += 1;
                        }
                    }
                    let cp = CompactPresentation::from_maps(maps);
                    if feasibility {
                        self.verdict(VerdictKind::Feasible, None, Some(&cp), None, meta)
                    } else {
                        self.verdict(VerdictKind::Optimal, Some(opt.cost), Some(&cp), None, meta)
                    }
                }
            }),
        }
    }
}

#[derive(Serialize)]
struct CheckJson {
    valid: bool,
    structural_ok: bool,
    bricks_ok: bool,
    counts_ok: bool,
    aggregate_ok: bool,
    failures: Vec<&'static str>,
    messages: Vec<String>,
}

fn check(instance: &Path, solution: &Path) -> anyhow::Result<Output> {
    let inst = read_instance(instance)?;
    let cp = read_solution(solution)?;
    let rep = match as_nfold(&inst) {
        Ok(n) => presentation::check_presentation(&n, &cp),
        // margins violate a necessary condition: nothing can be valid
        Err(e) => nfold_core::ValidationReport {
            structural_ok: true,
            bricks_ok: true,
            counts_ok: true,
            aggregate_ok: false,
            messages: vec![format!("{e:#}")],
        },
    };
    let valid = rep.all_ok();
    let failures = rep.failures();
    let summary = if valid { "valid".to_string() } else { format!("invalid: {}", failures.join(", ")) };
    let json = CheckJson {
        valid,
        structural_ok: rep.structural_ok,
        bricks_ok: rep.bricks_ok,
        counts_ok: rep.counts_ok,
        aggregate_ok: rep.aggregate_ok,
        failures,
        messages: rep.messages,
    };
    Ok(Output::new(&json, summary, if valid { 0 } else { 1 }))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CertificateInput {
    Wrapped { certificate: CertificateFile },
    Bare(CertificateFile),
}

#[derive(Serialize)]
struct CertifyJson {
    valid: bool,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    matches_instance: Option<bool>,
}

fn certify(solver: &mut TableSolver, path: &Path, instance: Option<&Path>) -> anyhow::Result<Output> {
    let file = match format::read_json::<CertificateInput>(path)? {
        CertificateInput::Wrapped { certificate } | CertificateInput::Bare(certificate) => certificate,
    };
    let cert = file.to_certificate()?;
    let kind = match cert {
        Certificate::Slack(_) => "slack",
        Certificate::Margins(_) => "margins",
    };
    let sound = solver.verify(&cert);
    let matches = match instance {
        None => None,
        Some(p) => Some(match (read_instance(p)?, &cert) {
            (Instance::Table(t), c) => tables::certificate_matches(&t, c),
            (Instance::NFold(n), Certificate::Slack(s)) => tables::build_auxiliary(&n).is_ok_and(|(aux, _)| aux == s.aux),
            (Instance::NFold(_), Certificate::Margins(_)) => false,
        }),
    };
    let valid = sound && matches.unwrap_or(true);
    let summary = match (sound, matches) {
        (false, _) => "certificate rejected".to_string(),
        (true, Some(false)) => "certificate is sound but belongs to a different instance".to_string(),
        (true, _) => format!("certificate verified ({kind})"),
    };
    Ok(Output::new(&CertifyJson { valid, kind, matches_instance: matches }, summary, if valid { 0 } else { 1 }))
}

#[derive(Serialize)]
struct GraverJson {
    matrix: Vec<Vec<Dec>>,
    count: usize,
    elements: Vec<Vec<Dec>>,
}

fn graver_cmd(budgets: &Budgets, path: &Path, bound: i64, use_oracle: bool) -> anyhow::Result<Output> {
    let m = format::read_json::<format::MatrixFile>(path)?.to_matrix()?;
    let elements = if use_oracle {
        oracle::bf_graver(&m, bound, budgets.oracle_nodes)?
    } else {
        graver::graver_basis_capped(&m, budgets.graver_elements)?.elements
    };
    let summary = format!("{} Graver basis elements", elements.len());
    let json = GraverJson {
        matrix: format::rows_json(&m),
        count: elements.len(),
        elements: elements.iter().map(|e| format::vec_json(e)).collect(),
    };
    Ok(Output::new(&json, summary, 0))
}

#[derive(Serialize)]
struct ComplexityJson {
    g: usize,
    template_count: usize,
    templates: Vec<Vec<Vec<Dec>>>,
}

fn complexity(budgets: &Budgets, path: &Path) -> anyhow::Result<Output> {
    let a = format::read_json::<format::BimatrixFile>(path)?.to_bimatrix()?;
    let t = graver::graver_templates_capped(&a, budgets.graver_elements)?;
    let summary = format!("Graver complexity {} with {} templates", t.g, t.len());
    let json = ComplexityJson {
        g: t.g,
        template_count: t.len(),
        templates: t.templates.iter().map(|h| h.bricks.iter().map(|b| format::vec_json(b)).collect()).collect(),
    };
    Ok(Output::new(&json, summary, 0))
}

#[derive(Serialize)]
struct ReduceJson {
    presentation: PresentationFile,
    support_before: usize,
    support_after: usize,
    merges: u64,
}

fn reduce(instance: &Path, solution: &Path) -> anyhow::Result<Output> {
    let inst = as_nfold(&read_instance(instance)?)?;
    let cp = read_solution(solution)?;
    let (out, stats) = presentation::reduce_support_stats(&inst, &cp)?;
    let json = ReduceJson {
        presentation: PresentationFile::from_cp(&out),
        support_before: cp.canonical().total_support(),
        support_after: out.total_support(),
        merges: stats.merges,
    };
    let summary = format!("support {} -> {} ({} merges)", json.support_before, json.support_after, stats.merges);
    Ok(Output::new(&json, summary, 0))
}

#[derive(Serialize)]
struct ExpandJson {
    n: usize,
    bricks: Vec<Vec<Dec>>,
}

fn expand(instance: &Path, solution: &Path, max_n: u64) -> anyhow::Result<Output> {
    let inst = as_nfold(&read_instance(instance)?)?;
    let cp = read_solution(solution)?;
    let bricks = presentation::expand(&inst, &cp, max_n)?;
    let summary = format!("{} bricks", bricks.len());
    let json = ExpandJson { n: bricks.len(), bricks: bricks.iter().map(|b| format::vec_json(b)).collect() };
    Ok(Output::new(&json, summary, 0))
}
