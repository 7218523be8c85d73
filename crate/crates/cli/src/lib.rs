//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or refused parameters, 2 when
//! a checked property fails (oracle disagreement, bound violated by its
//! simulation, structural predicate contradicted). Failures print one JSON
//! object on stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use replab::bounds::{self, Tail};
use replab::experiments::{
    self, default_grids, figure3_surface, occupancy_campaign, oracle_agreement_campaign_with,
    pruning_probability_campaign, rep_pruner, size_growth_campaign, CampaignConfig,
    OracleCheckConfig, PruneProbMode, PrunerFn, DEFAULT_LAMBDA_GRID,
};
use replab::generators::{self, NoiseModel, Routing, TreeShape};
use replab::oracle::{optimal_pruning, DEFAULT_LEAF_CAP};
use replab::prune::{iterative_prune, trace_assert_theorem2};
use replab::rng::DEFAULT_SEED;
use replab::structure::{corollary3_holds, fringe, safe_nodes, theorem4_predicate};
use replab::{rep_prune, rep_prune_train_labeled, tree_json, Dataset, DecisionTree, Labeling};

#[derive(Parser, Debug)]
#[command(name = "replab", version, about = "Reduced error pruning laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prune a tree with a pruning set.
    Prune(PruneArgs),
    /// Exhaustively find the smallest minimum-error pruning.
    Oracle(OracleArgs),
    /// Fringe, safe nodes and the structural checks on a sweep.
    Analyze(AnalyzeArgs),
    /// Evaluate one closed-form bound.
    Bounds(BoundsArgs),
    /// Evaluate the uniform-routing bound on a (p, c) grid.
    Surface(SurfaceArgs),
    /// Generate trees and datasets.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run a Monte Carlo campaign.
    #[command(subcommand)]
    Simulate(SimCommand),
}

#[derive(Args, Debug)]
struct TreeInput {
    /// Tree JSON file.
    #[arg(long)]
    tree: PathBuf,
    /// Pruning set CSV; without it the tree must carry counters.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Variant {
    /// Bottom-up sweep, pruning-majority leaves.
    Rep,
    /// Bottom-up sweep, training-majority leaves.
    Train,
    /// Greedy iterative pruning.
    Iterative,
}

#[derive(Args, Debug)]
struct PruneArgs {
    #[command(flatten)]
    input: TreeInput,
    #[arg(long, value_enum, default_value_t = Variant::Rep)]
    variant: Variant,
    /// Pruned tree JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-node decision trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum LabelingArg {
    Pruning,
    Train,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    input: TreeInput,
    #[arg(long, value_enum, default_value_t = LabelingArg::Pruning)]
    labeling: LabelingArg,
    /// Largest leaf count accepted for enumeration.
    #[arg(long, default_value_t = DEFAULT_LEAF_CAP)]
    cap: usize,
    /// Optimal pruned tree JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: TreeInput,
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BoundKind {
    Slud,
    Eq1,
    Eq2,
    Eq4,
    Eq5,
    Occupancy,
    Mcdiarmid,
    Pdev,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(value_enum)]
    kind: BoundKind,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Slud: number of trials.
    #[arg(long)]
    m: Option<u64>,
    /// Slud: success probability.
    #[arg(long)]
    q: Option<f64>,
    /// Slud: tail threshold.
    #[arg(long)]
    h: Option<f64>,
    /// Shift the tail threshold by one half.
    #[arg(long)]
    continuity_correction: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[arg(long, default_value_t = 100)]
    k: u64,
    #[arg(long, default_value_t = 500)]
    n: u64,
    /// LO:HI:STEP, both ends included.
    #[arg(long)]
    p_grid: Option<String>,
    /// LO:HI:STEP, both ends included.
    #[arg(long)]
    c_grid: Option<String>,
    /// Grid CSV: p,c,bound,exponent_p,vacuous.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Level-curve CSV: level,polyline,vertex,p,c.
    #[arg(long)]
    contours: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SeedArg {
    #[arg(long, env = "REPLAB_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// Random tree; internal node j tests attribute j at 0.5.
    Tree {
        #[arg(long)]
        internal: usize,
        #[arg(long, value_enum, default_value_t = ShapeArg::Uniform)]
        shape: ShapeArg,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Noise pruning set for a tree.
    Noise {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value_t = RoutingArg::Uniform)]
        routing: RoutingArg,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Single-attribute sample; optionally its minimal consistent tree.
    Theorem6 {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        tree_out: Option<PathBuf>,
    },
    /// The fixed instance on which the two leaf-labeling rules diverge.
    Figure1 {
        /// Tree JSON.
        #[arg(long)]
        out: PathBuf,
        /// Pruning set CSV.
        #[arg(long)]
        data_out: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ShapeArg {
    Uniform,
    Bst,
    Balanced,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RoutingArg {
    Uniform,
    Direct,
}

#[derive(Args, Debug)]
struct CampaignArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[command(flatten)]
    seed: SeedArg,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Report CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

impl CampaignArgs {
    fn config(&self) -> CampaignConfig {
        CampaignConfig::new(self.trials, self.seed.seed).with_workers(self.workers)
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Event,
    FullRep,
}

#[derive(Subcommand, Debug)]
enum SimCommand {
    /// Single-leaf probability against its closed-form upper bound.
    PruneProb {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Event)]
        mode: ModeArg,
        #[command(flatten)]
        campaign: CampaignArgs,
    },
    /// Leaf counts of minimal consistent trees on noise.
    SizeGrowth {
        #[arg(long)]
        p: f64,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        t_list: Vec<usize>,
        /// Also grow on a share alpha and prune with the rest.
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        campaign: CampaignArgs,
    },
    /// Empty and small safe-node counts and their deviation bounds.
    Occupancy {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Comma-separated deviation grid.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        #[command(flatten)]
        campaign: CampaignArgs,
    },
    /// Random instances checked against the exhaustive oracle.
    OracleCheck {
        #[arg(long, default_value_t = 10)]
        max_leaves: usize,
        #[arg(long, default_value_t = 50)]
        max_examples: usize,
        /// Where a disagreement is written.
        #[arg(long, default_value = "oracle_counterexample.json")]
        counterexample: PathBuf,
        /// Where the first iterative-pruning witness is written.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[command(flatten)]
        campaign: CampaignArgs,
    },
}

/// Why a command did not succeed.
#[derive(Debug)]
enum Failure {
    Validation(String),
    Assertion { message: String, path: Option<PathBuf> },
}

impl From<replab::Error> for Failure {
    fn from(e: replab::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(format!("I/O error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Validation(format!("CSV error: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &rep_pruner)
}

/// As [`run`], with the pruner checked by `simulate oracle-check` replaced.
pub fn run_with<I, T>(args: I, pruner: &PrunerFn) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            // The first paragraph names the offending subcommand or flag.
            let rendered = e.to_string();
            let message = rendered
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(str::trim)
                .collect::<Vec<_>>()
                .join(" ");
            report_failure(&Failure::Validation(message.trim_start_matches("error: ").to_string()));
            return 1;
        }
    };
    match dispatch(cli.command, pruner) {
        Ok(()) => 0,
        Err(f) => {
            report_failure(&f);
            match f {
                Failure::Validation(_) => 1,
                Failure::Assertion { .. } => 2,
            }
        }
    }
}

fn report_failure(f: &Failure) {
    let line = match f {
        Failure::Validation(message) => json!({"error": "validation", "message": message}),
        Failure::Assertion { message, path } => json!({
            "error": "assertion",
            "message": message,
            "path": path.as_ref().map(|p| p.display().to_string()),
        }),
    };
    eprintln!("{line}");
}

fn dispatch(command: Command, pruner: &PrunerFn) -> CmdResult {
    match command {
        Command::Prune(a) => cmd_prune(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Surface(a) => cmd_surface(a),
        Command::Gen(g) => cmd_gen(g),
        Command::Simulate(s) => cmd_simulate(s, pruner),
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic<F>(path: &Path, fill: F) -> CmdResult
where
    F: FnOnce(&mut dyn Write) -> CmdResult,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Failure::from(e.error))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

fn read_tree(path: &Path) -> Result<DecisionTree, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    tree_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn read_data(path: &Path) -> Result<Dataset, Failure> {
    let file = File::open(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    Dataset::read_csv(file).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

/// The input tree with counters from `--data`, or its stored counters.
fn counted_tree(input: &TreeInput) -> Result<DecisionTree, Failure> {
    let mut tree = read_tree(&input.tree)?;
    match &input.data {
        Some(path) => {
            let data = read_data(path)?;
            tree.clear_counters();
            tree.classify_pass(&data)?;
        }
        None if !tree.is_counted() => {
            return Err(Failure::Validation(
                "--data is required: the tree carries no pruning counters".into(),
            ))
        }
        None => {}
    }
    Ok(tree)
}

fn emit(json_out: bool, value: Value) {
    if json_out {
        println!("{value}");
    } else if let Value::Object(map) = value {
        for (k, v) in map {
            match v {
                Value::String(s) => println!("{k}={s}"),
                other => println!("{k}={other}"),
            }
        }
    }
}

fn cmd_prune(a: PruneArgs) -> CmdResult {
    let tree = counted_tree(&a.input)?;
    let original_error = tree.subtree_error(0);
    let (pruned, error, trace) = match a.variant {
        Variant::Rep => {
            let o = rep_prune(&tree)?;
            (o.tree, o.error, Some(o.trace))
        }
        Variant::Train => {
            let o = rep_prune_train_labeled(&tree)?;
            (o.tree, o.error, Some(o.trace))
        }
        Variant::Iterative => {
            let o = iterative_prune(&tree)?;
            if let Some(path) = &a.trace {
                write_atomic(path, |w| {
                    let mut c = csv::Writer::from_writer(w);
                    c.write_record(["step", "node", "error_before", "error_after"])?;
                    for (i, s) in o.steps.iter().enumerate() {
                        c.write_record([
                            i.to_string(),
                            s.node.to_string(),
                            s.error_before.to_string(),
                            s.error_after.to_string(),
                        ])?;
                    }
                    c.flush()?;
                    Ok(())
                })?;
            }
            (o.tree, o.error, None)
        }
    };
    if let (Some(trace), Some(path)) = (&trace, &a.trace) {
        write_atomic(path, |w| Ok(trace.write_csv(w)?))?;
    }
    let mut summary = json!({
        "variant": format!("{:?}", a.variant).to_lowercase(),
        "original_error": original_error,
        "error": error,
        "nodes": pruned.len(),
        "leaves": pruned.leaf_count(),
    });
    match &a.out {
        Some(path) => {
            write_text(path, &tree_json::to_string_pretty(&pruned))?;
            emit(a.json, summary);
        }
        None if a.json => {
            summary["tree"] = tree_json::to_value(&pruned);
            emit(true, summary);
        }
        None => println!("{}", tree_json::to_string_pretty(&pruned)),
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> CmdResult {
    let tree = counted_tree(&a.input)?;
    let labeling = match a.labeling {
        LabelingArg::Pruning => Labeling::PruningMajority,
        LabelingArg::Train => Labeling::TrainingMajority,
    };
    let res = optimal_pruning(&tree, labeling, a.cap)?;
    if let Some(path) = &a.out {
        let best = tree.apply_pruning(&res.best, labeling)?;
        write_text(path, &tree_json::to_string_pretty(&best))?;
    }
    emit(
        a.json,
        json!({
            "best_error": res.best_error,
            "best_size": res.best_size,
            "pruning_count": res.pruning_count.to_string(),
            "minimizers": res.minimizers,
            "selection": res.best.iter().collect::<Vec<_>>(),
        }),
    );
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> CmdResult {
    let tree = counted_tree(&a.input)?;
    let report = safe_nodes(&tree)?;
    let outcome = rep_prune(&tree)?;
    let verdict = theorem4_predicate(&tree, &outcome.tree, &report)?;
    let retention = trace_assert_theorem2(&outcome.trace, &tree)?;
    let depth_rule = corollary3_holds(&outcome.trace, &tree)?;
    let collapsed = outcome.tree.is_single_leaf();
    emit(
        a.json,
        json!({
            "fringe": fringe(&tree).into_iter().collect::<Vec<_>>(),
            "safe_nodes": report.safe,
            "k": report.k,
            "pruned_error": outcome.error,
            "collapsed": collapsed,
            "predicate": verdict,
            "retention_check": retention,
            "depth_check": depth_rule,
        }),
    );
    let mut failed = Vec::new();
    if verdict.collapses != collapsed {
        failed.push("collapse predicate disagrees with the sweep");
    }
    if !retention {
        failed.push("retention check failed on the trace");
    }
    if !depth_rule {
        failed.push("depth-to-first-leaf check failed on the trace");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion { message: failed.join("; "), path: None })
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str, kind: BoundKind) -> Result<T, Failure> {
    v.ok_or_else(|| {
        Failure::Validation(format!(
            "missing --{flag} for bounds {}",
            format!("{kind:?}").to_lowercase()
        ))
    })
}

fn cmd_bounds(a: BoundsArgs) -> CmdResult {
    let kind = a.kind;
    let tail = if a.continuity_correction { Tail::ContinuityCorrected } else { Tail::Uncorrected };
    let value = match kind {
        BoundKind::Slud => json!({
            "slud": bounds::slud_lower_bound(need(a.m, "m", kind)?, need(a.q, "q", kind)?, need(a.h, "h", kind)?)?
        }),
        BoundKind::Eq1 => json!({
            "eq1": bounds::negative_majority_bound_with(need(a.n, "n", kind)?, need(a.p, "p", kind)?, tail)?
        }),
        BoundKind::Eq2 => json!({
            "eq2": bounds::eq2_pruning_upper_bound_with(need(a.n, "n", kind)?, need(a.k, "k", kind)?, need(a.p, "p", kind)?, tail)?
        }),
        BoundKind::Eq4 => json!({
            "eq4": bounds::eq4_expected_small_nodes(need(a.n, "n", kind)?, need(a.k, "k", kind)?, need(a.c, "c", kind)?)?
        }),
        BoundKind::Eq5 => {
            let b = bounds::eq5_uniform_pruning_bound(
                need(a.n, "n", kind)?,
                need(a.k, "k", kind)?,
                need(a.p, "p", kind)?,
                need(a.c, "c", kind)?,
            )?;
            json!({"eq5": b.bound, "exponent_p": b.exponent_p, "vacuous": b.vacuous})
        }
        BoundKind::Occupancy => {
            let (m, h) = (need(a.n, "n", kind)?, need(a.k, "k", kind)?);
            let o = bounds::occupancy_expected_empty(m, h)?;
            let mut v = json!({"occupancy_exact": o.exact, "occupancy_approx": o.approx});
            if let Some(lambda) = a.lambda {
                v["occupancy_deviation"] = json!(bounds::occupancy_deviation_bound(h, o.exact, lambda)?);
            }
            v
        }
        BoundKind::Mcdiarmid => json!({
            "mcdiarmid": bounds::mcdiarmid_bound(need(a.n, "n", kind)?, need(a.lambda, "lambda", kind)?)?
        }),
        BoundKind::Pdev => {
            let (n, k) = (need(a.n, "n", kind)?, need(a.k, "k", kind)?);
            let er = bounds::occupancy_expected_empty(n, k)?.exact;
            json!({"pdev": bounds::p_deviation_bound(n, k, er, need(a.lambda, "lambda", kind)?)?, "er": er})
        }
    };
    emit(a.json, value);
    Ok(())
}

/// `LO:HI:STEP` with both ends included.
fn parse_grid(spec: &str, flag: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Validation(format!("--{flag} must be LO:HI:STEP, got {spec:?}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [lo, hi, step] = parts[..] else { return Err(bad()) };
    if step.is_nan() || step <= 0.0 || hi.is_nan() || hi < lo || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count > 1_000_000 {
        return Err(Failure::Validation(format!("--{flag} has too many points")));
    }
    Ok((0..=count).map(|i| lo + step * i as f64).collect())
}

fn cmd_surface(a: SurfaceArgs) -> CmdResult {
    let (default_p, default_c) = default_grids();
    let p_grid = match &a.p_grid {
        Some(s) => parse_grid(s, "p-grid")?,
        None => default_p,
    };
    let c_grid = match &a.c_grid {
        Some(s) => parse_grid(s, "c-grid")?,
        None => default_c,
    };
    let surface = figure3_surface(a.k, a.n, &p_grid, &c_grid)?;
    if let Some(path) = &a.out {
        write_atomic(path, |w| Ok(surface.write_csv(w)?))?;
    }
    if let Some(path) = &a.contours {
        write_atomic(path, |w| Ok(surface.write_contours_csv(w)?))?;
    }
    let claims = surface.claims();
    emit(
        a.json,
        json!({
            "rows": surface.p_grid.len(),
            "columns": surface.c_grid.len(),
            "contour_polylines": surface.contours.iter().map(|c| json!({"level": c.level, "polylines": c.polylines.len()})).collect::<Vec<_>>(),
            "claims": claims,
        }),
    );
    Ok(())
}

fn cmd_gen(g: GenCommand) -> CmdResult {
    match g {
        GenCommand::Tree { internal, shape, seed, out } => {
            let shape = match shape {
                ShapeArg::Uniform => TreeShape::Uniform,
                ShapeArg::Bst => TreeShape::RandomBst,
                ShapeArg::Balanced => TreeShape::Balanced,
            };
            let tree = generators::gen_random_tree(internal, shape, seed.seed);
            write_text(&out, &tree_json::to_string_pretty(&tree))?;
            emit(false, json!({"nodes": tree.len(), "leaves": tree.leaf_count()}));
        }
        GenCommand::Noise { tree, n, p, routing, seed, out } => {
            let tree = read_tree(&tree)?;
            let routing = match routing {
                RoutingArg::Uniform => Routing::AttributeUniform,
                RoutingArg::Direct => Routing::Direct,
            };
            let model = NoiseModel::new(p, routing)?;
            let data = generators::gen_noise_pruning_set(&tree, &model, n, seed.seed)?;
            write_atomic(&out, |w| Ok(data.write_csv(w)?))?;
            emit(false, json!({"examples": data.len(), "positives": data.positives()}));
        }
        GenCommand::Theorem6 { t, p, seed, out, tree_out } => {
            let data = generators::gen_theorem6_sample(t, p, seed.seed)?;
            write_atomic(&out, |w| Ok(data.write_csv(w)?))?;
            let alternations = generators::class_alternations(&data)?;
            if let Some(path) = tree_out {
                let tree = generators::minimal_consistent_threshold_tree(&data)?;
                write_text(&path, &tree_json::to_string_pretty(&tree))?;
            }
            emit(false, json!({"examples": data.len(), "alternations": alternations, "leaves": alternations + 1}));
        }
        GenCommand::Figure1 { out, data_out } => {
            let (tree, data) = generators::gen_figure1_instance();
            write_text(&out, &tree_json::to_string_pretty(&tree))?;
            write_atomic(&data_out, |w| Ok(data.write_csv(w)?))?;
            emit(false, json!({"nodes": tree.len(), "examples": data.len()}));
        }
    }
    Ok(())
}

fn proportion_fields(prefix: &str, p: &replab::stats::Proportion) -> [(String, String); 4] {
    [
        (prefix.to_string(), p.estimate.to_string()),
        (format!("{prefix}_se"), p.std_err.to_string()),
        (format!("{prefix}_ci_low"), p.ci_low.to_string()),
        (format!("{prefix}_ci_high"), p.ci_high.to_string()),
    ]
}

/// Writes a header and rows of `(column, value)` pairs.
fn write_table(path: &Path, rows: &[Vec<(String, String)>]) -> CmdResult {
    write_atomic(path, |w| {
        let mut c = csv::Writer::from_writer(w);
        if let Some(first) = rows.first() {
            c.write_record(first.iter().map(|(k, _)| k.as_str()))?;
        }
        for row in rows {
            c.write_record(row.iter().map(|(_, v)| v.as_str()))?;
        }
        c.flush()?;
        Ok(())
    })
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn cmd_simulate(s: SimCommand, pruner: &PrunerFn) -> CmdResult {
    match s {
        SimCommand::PruneProb { k, n, p, mode, campaign } => {
            let mode = match mode {
                ModeArg::Event => PruneProbMode::EventLevel,
                ModeArg::FullRep => PruneProbMode::FullRep,
            };
            let r = pruning_probability_campaign(k, n, p, mode, campaign.config())?;
            if let Some(path) = &campaign.out {
                let mut row = vec![
                    kv("mode", serde_json::to_value(r.mode).expect("enum").as_str().unwrap_or_default()),
                    kv("k", r.k),
                    kv("n", r.n),
                    kv("p", r.p),
                    kv("trials", r.trials),
                    kv("seed", r.seed),
                    kv("attempts", r.attempts),
                    kv("rejection_rate", r.rejection_rate),
                ];
                row.extend(proportion_fields("pruned", &r.pruned));
                row.extend(proportion_fields("negative_branch", &r.negative_branch));
                row.extend([kv("bound", r.bound), kv("gap", r.gap), kv("dominated", r.dominated)]);
                write_table(path, &[row])?;
            }
            emit(campaign.json, serde_json::to_value(&r).expect("serialisable"));
            if !r.dominated {
                return Err(Failure::Assertion {
                    message: format!(
                        "upper confidence limit {} exceeds bound {}",
                        r.pruned.ci_high, r.bound
                    ),
                    path: campaign.out.clone(),
                });
            }
        }
        SimCommand::SizeGrowth { p, t_list, alpha, campaign } => {
            let r = size_growth_campaign(p, &t_list, campaign.config(), alpha)?;
            if let Some(path) = &campaign.out {
                let rows: Vec<_> = r
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(i, g)| {
                        let pr = r.pruned.get(i);
                        let opt = |f: fn(&experiments::PrunedGrowthRow) -> String| pr.map(f).unwrap_or_default();
                        vec![
                            kv("t", g.t),
                            kv("mean_leaves", g.mean_leaves),
                            kv("std_err", g.std_err),
                            kv("predicted", g.predicted),
                            kv("z", g.z),
                            kv("grow_size", opt(|x| x.grow_size.to_string())),
                            kv("prune_size", opt(|x| x.prune_size.to_string())),
                            kv("mean_grown_leaves", opt(|x| x.mean_grown_leaves.to_string())),
                            kv("mean_pruned_leaves", opt(|x| x.mean_pruned_leaves.to_string())),
                            kv("pruned_std_err", opt(|x| x.pruned_std_err.to_string())),
                        ]
                    })
                    .collect();
                write_table(path, &rows)?;
            }
            emit(campaign.json, serde_json::to_value(&r).expect("serialisable"));
        }
        SimCommand::Occupancy { k, n, c, lambda, campaign } => {
            let lambdas = if lambda.is_empty() { DEFAULT_LAMBDA_GRID.to_vec() } else { lambda };
            let r = occupancy_campaign(k, n, c, &lambdas, campaign.config())?;
            if let Some(path) = &campaign.out {
                let rows: Vec<_> = r
                    .deviations
                    .iter()
                    .map(|d| {
                        let mut row = vec![kv("lambda", d.lambda)];
                        row.extend(proportion_fields("small", &d.small));
                        row.push(kv("small_bound", d.small_bound));
                        row.extend(proportion_fields("empty", &d.empty));
                        row.push(kv("empty_bound", d.empty_bound));
                        row.extend(proportion_fields("difference", &d.difference));
                        row.push(kv("difference_bound", d.difference_bound));
                        row.push(kv("dominated", d.dominated()));
                        row
                    })
                    .collect();
                write_table(path, &rows)?;
            }
            emit(campaign.json, serde_json::to_value(&r).expect("serialisable"));
            if !r.all_dominated() {
                return Err(Failure::Assertion {
                    message: "an empirical deviation frequency exceeds its bound".into(),
                    path: campaign.out.clone(),
                });
            }
        }
        SimCommand::OracleCheck { max_leaves, max_examples, counterexample, witness, campaign } => {
            let config = OracleCheckConfig {
                max_leaves,
                max_examples,
                ..OracleCheckConfig::from_campaign(campaign.config())
            };
            let r = oracle_agreement_campaign_with(config, pruner)?;
            if let (Some(path), Some(w)) = (&witness, &r.first_iterative_witness) {
                write_text(path, &serde_json::to_string_pretty(w).expect("serialisable"))?;
            }
            if let Some(path) = &campaign.out {
                write_table(
                    path,
                    &[vec![
                        kv("instances", r.instances),
                        kv("seed", r.seed),
                        kv("max_leaves", r.max_leaves),
                        kv("single_leaf_instances", r.single_leaf_instances),
                        kv("agreements", r.agreements),
                        kv("disagreements", r.disagreements),
                        kv("iterative_suboptimal", r.iterative_suboptimal),
                    ]],
                )?;
            }
            emit(campaign.json, serde_json::to_value(&r).expect("serialisable"));
            if let Some(d) = &r.first_disagreement {
                write_text(&counterexample, &serde_json::to_string_pretty(d).expect("serialisable"))?;
                return Err(Failure::Assertion {
                    message: format!(
                        "{} of {} instances disagree with the oracle; first at instance {}",
                        r.disagreements, r.instances, d.instance
                    ),
                    path: Some(counterexample),
                });
            }
        }
    }
    Ok(())
}
