//! `spantree` command-line driver.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spantree::decomposition::{decompose, verify_claims};
use spantree::embedder::{embed_tree, EmbedConfig};
use spantree::graph::{gen_host, Graph, HostFamily};
use spantree::oracle::{brute_force_embed, verify_nonembeddability, DenseHost, ExtremalRegime, ExtremalSpec, OracleBudget, OracleVerdict};
use spantree::params::{derive_params, desk_overrides, regime_k, Config, ParamOverrides};
use spantree::rng::Rng;
use spantree::tree::{gen_random_tree, RootedTree};
use spantree_cli::invariants::{run_invariant_suite, CorpusEntry, CorpusSpec};
use spantree_cli::sweep::{run_sweep, DeltaSpec, ProfileKind, SweepSpec};

/// Environment variable with the worker thread count.
const THREADS_ENV: &str = "SPANTREE_THREADS";

#[derive(Parser)]
#[command(name = "spantree", version, about = "Embed spanning trees of large maximum degree into randomly perturbed dense graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed one tree into one host.
    Embed(EmbedArgs),
    /// Decompose one tree and print its per-edge or per-vertex table.
    Decompose(DecomposeArgs),
    /// Run a threshold sweep.
    Sweep(SweepArgs),
    /// Run the invariant suite over a tree corpus.
    Invariants(InvariantArgs),
    /// Check that the extremal tree does not embed into `K_{n/2,n/2}` plus a sparse random graph.
    Extremal(ExtremalArgs),
    /// Exhaustively decide whether a tree embeds spanningly into a host.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the paper's defaults instead of the desk-scale preset.
    #[arg(long)]
    paper_defaults: bool,
    /// Host minimum-degree fraction.
    #[arg(long)]
    alpha: Option<f64>,
    /// Base edge probability.
    #[arg(long)]
    p: Option<f64>,
    /// Slack multiplier of probabilistic windows.
    #[arg(long)]
    slack: Option<f64>,
}

impl ParamArgs {
    fn config(&self) -> Result<Config> {
        let mut cfg = Config { overrides: if self.paper_defaults { ParamOverrides::default() } else { desk_overrides() }, ..Config::default() };
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.merge(&Config::parse(&text)?);
        }
        let o = &mut cfg.overrides;
        if self.alpha.is_some() {
            o.alpha = self.alpha;
        }
        if self.p.is_some() {
            o.p = self.p;
        }
        if self.slack.is_some() {
            o.slack = self.slack;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct EmbedArgs {
    /// Tree file (`n root` then `child parent` lines); generated when absent.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Tree profile when generating: `capped`, `spider`, `heavy`, `heavy:F`.
    #[arg(long, default_value = "heavy")]
    profile: String,
    /// Host edge-list file; generated when absent.
    #[arg(long)]
    host: Option<PathBuf>,
    /// Host family when generating.
    #[arg(long, default_value = "two-cliques")]
    host_family: String,
    /// Number of vertices.
    #[arg(long)]
    n: Option<usize>,
    /// Degree regime.
    #[arg(long)]
    k: Option<usize>,
    /// Maximum degree.
    #[arg(long)]
    delta: Option<usize>,
    /// Seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Whole-pipeline attempts.
    #[arg(long, default_value_t = 3)]
    retries: usize,
    /// Report file (`.json` or `.csv`).
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Tree file; generated when absent.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Tree profile when generating.
    #[arg(long, default_value = "heavy")]
    profile: String,
    /// Number of vertices.
    #[arg(long)]
    n: Option<usize>,
    /// Degree regime.
    #[arg(long)]
    k: Option<usize>,
    /// Maximum degree.
    #[arg(long)]
    delta: Option<usize>,
    /// Seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Table to print: `edges`, `vertices` or `claims`.
    #[arg(long, default_value = "edges")]
    table: String,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Tree sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4096")]
    n: Vec<usize>,
    /// Degree columns (`n^e` or integers), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "n^0.34,n^0.5,n^0.67")]
    delta: Vec<String>,
    /// Random-graph density multipliers, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4")]
    p_mult: Vec<f64>,
    /// Host families, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "two-cliques")]
    family: Vec<String>,
    /// Tree profiles, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "heavy")]
    profile: Vec<String>,
    /// Trials per cell.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Base seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Whole-pipeline attempts per trial.
    #[arg(long, default_value_t = 1)]
    retries: usize,
    /// Emit the wall-time column.
    #[arg(long)]
    timings: bool,
    /// Per-trial CSV output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregated per-cell CSV output.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct InvariantArgs {
    /// Corpus entries `family:n`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "path:1000,star:1000,binary:1023,caterpillar:1000,uniform:1000,heavy:2000")]
    corpus: Vec<String>,
    /// Random trees per random family entry.
    #[arg(long, default_value_t = 3)]
    per_entry: usize,
    /// Base seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Skip distribution and slice planning.
    #[arg(long)]
    no_pipeline: bool,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct ExtremalArgs {
    /// Number of vertices (even).
    #[arg(long, default_value_t = 24)]
    n: usize,
    /// Degree regime.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Maximum degree.
    #[arg(long, default_value_t = 12)]
    delta: usize,
    /// Constant `c` of the random graph `G(n, c p / 2)`.
    #[arg(long, default_value_t = 0.01)]
    c: f64,
    /// Force a construction branch: `large` or `small`.
    #[arg(long)]
    regime: Option<String>,
    /// Dense host: `bipartite` or `complete`.
    #[arg(long, default_value = "bipartite")]
    host: String,
    /// Trials.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Oracle time budget per trial in seconds.
    #[arg(long, default_value_t = 30.0)]
    budget_secs: f64,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Tree file.
    #[arg(long)]
    tree: PathBuf,
    /// Host edge-list file.
    #[arg(long)]
    host: PathBuf,
    /// Time budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    budget_secs: f64,
}

fn main() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let threads: usize = v.parse().with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Embed(a) => cmd_embed(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Invariants(a) => cmd_invariants(a),
        Command::Extremal(a) => cmd_extremal(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_tree(path: &Path) -> Result<RootedTree> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(RootedTree::parse(&text)?)
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Graph::parse_edge_list(&text)?)
}

/// Resolves `(n, k, Delta)` from flags, the config file and an optional tree.
fn shape(cfg: &Config, n: Option<usize>, k: Option<usize>, delta: Option<usize>, tree: Option<&RootedTree>) -> Result<(usize, usize, usize)> {
    let n = match (tree, n.or(cfg.n)) {
        (Some(t), Some(n)) if t.n() != n => bail!("--n {n} disagrees with the tree file ({} vertices)", t.n()),
        (Some(t), _) => t.n(),
        (None, Some(n)) => n,
        (None, None) => bail!("the number of vertices is required (--n or `n` in the config)"),
    };
    let delta = match delta.or(cfg.delta_max) {
        Some(d) => d,
        None => match tree {
            Some(t) => t.max_degree().max(2),
            None => ((n as f64).sqrt().round() as usize).max(2),
        },
    };
    let k = k.or(cfg.k).unwrap_or_else(|| regime_k(n, delta));
    Ok((n, k, delta))
}

fn cmd_embed(a: EmbedArgs) -> Result<()> {
    let cfg = a.params.config()?;
    let given = a.tree.as_deref().map(read_tree).transpose()?;
    let (n, k, delta) = shape(&cfg, a.n, a.k, a.delta, given.as_ref())?;
    let params = derive_params(n, k, delta, &cfg.overrides)?;
    let base = Rng::new(a.seed, 0);
    let t = match given {
        Some(t) => t,
        None => gen_random_tree(n, &ProfileKind::parse(&a.profile)?.profile(&params), &mut base.split(1))?,
    };
    let g = match &a.host {
        Some(p) => read_graph(p)?,
        None => gen_host(&HostFamily::parse(&a.host_family)?, n, params.alpha, &mut base.split(2))?,
    };
    let ecfg = EmbedConfig { retries: a.retries, r_key: a.seed, ..EmbedConfig::default() };
    let res = embed_tree(&t, &g, &params, &ecfg, &mut base.split(3));
    let (exact, slack, fail) = res.report.counts();
    println!(
        "success={} case={} attempts={} stage={} checks exact={exact} slack={slack} fail={fail}",
        res.success,
        res.case.as_deref().unwrap_or("-"),
        res.attempts,
        res.failure_stage.as_deref().unwrap_or("-"),
    );
    if let Some(reason) = &res.failure_reason {
        println!("reason: {reason}");
    }
    if let Some(path) = &a.report {
        let text = if path.extension().is_some_and(|e| e == "csv") { res.report.to_csv() } else { serde_json::to_string_pretty(&res)? };
        write_out(Some(path), &text)?;
    }
    Ok(())
}

fn cmd_decompose(a: DecomposeArgs) -> Result<()> {
    let cfg = a.params.config()?;
    let given = a.tree.as_deref().map(read_tree).transpose()?;
    let (n, k, delta) = shape(&cfg, a.n, a.k, a.delta, given.as_ref())?;
    let params = derive_params(n, k, delta, &cfg.overrides)?;
    let base = Rng::new(a.seed, 0);
    let t = match given {
        Some(t) => t,
        None => gen_random_tree(n, &ProfileKind::parse(&a.profile)?.profile(&params), &mut base.split(1))?,
    };
    let t = if t.n() >= 2 && !t.is_leaf(t.root()) { t.reroot_at_lowest_leaf() } else { t };
    let (ch, dec) = decompose(&t, &params, &mut base.split(2))?;
    let text = match a.table.as_str() {
        "edges" => dec.edges_csv(&t, &ch),
        "vertices" => spantree::decomposition::TreeDecomposition::vertices_csv(&ch),
        "claims" => {
            let rep = verify_claims(&t, &ch, &dec, &params);
            let mut s = String::from("claim,unconditional,status,violations\n");
            for c in rep.checks {
                s.push_str(&format!("{},{},{:?},{}\n", c.name, u8::from(c.unconditional), c.status, c.violations));
            }
            s
        }
        other => bail!("unknown table `{other}` (expected edges, vertices or claims)"),
    };
    write_out(a.out.as_deref(), &format!("# spantree decompose v1 case={}\n{text}", dec.case.name()))
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let cfg = a.params.config()?;
    let spec = SweepSpec {
        ns: a.n,
        deltas: a.delta.iter().map(|d| DeltaSpec::parse(d)).collect::<spantree::Result<_>>()?,
        p_mults: a.p_mult,
        families: a.family.iter().map(|f| HostFamily::parse(f)).collect::<spantree::Result<_>>()?,
        profiles: a.profile.iter().map(|p| ProfileKind::parse(p)).collect::<spantree::Result<_>>()?,
        trials: a.trials,
        seed: a.seed,
        overrides: cfg.overrides,
        embed: EmbedConfig { retries: a.retries, ..EmbedConfig::default() },
        timings: a.timings,
    };
    eprintln!("sweep: {} cells, {} trials", spec.cells().len(), spec.total_trials());
    let out = run_sweep(&spec);
    write_out(a.out.as_deref(), &out.to_csv())?;
    if let Some(p) = &a.summary {
        write_out(Some(p), &out.summary_csv())?;
    }
    Ok(())
}

fn cmd_invariants(a: InvariantArgs) -> Result<()> {
    let cfg = a.params.config()?;
    let spec = CorpusSpec {
        entries: a.corpus.iter().map(|e| CorpusEntry::parse(e)).collect::<spantree::Result<_>>()?,
        per_entry: a.per_entry,
        seed: a.seed,
        overrides: cfg.overrides,
        pipeline: !a.no_pipeline,
    };
    let rep = run_invariant_suite(&spec);
    write_out(a.out.as_deref(), &rep.to_csv())?;
    let (ok, total) = rep.conditional_stats();
    eprintln!("unconditional failures: {}; conditional checks passing: {ok}/{total}", rep.unconditional_failures().len());
    if !rep.unconditional_failures().is_empty() {
        bail!("unconditional invariant failures");
    }
    Ok(())
}

fn cmd_extremal(a: ExtremalArgs) -> Result<()> {
    let mut spec = ExtremalSpec::auto(a.n, a.k, a.delta, a.c);
    match a.regime.as_deref() {
        None => {}
        Some("large") => spec.regime = ExtremalRegime::LargeDelta,
        Some("small") => spec.regime = ExtremalRegime::SmallDelta,
        Some(other) => bail!("unknown regime `{other}` (expected large or small)"),
    }
    let host = match a.host.as_str() {
        "bipartite" => DenseHost::Bipartite,
        "complete" => DenseHost::Complete,
        other => bail!("unknown host `{other}` (expected bipartite or complete)"),
    };
    let budget = OracleBudget { time: Duration::from_secs_f64(a.budget_secs), nodes: u64::MAX };
    let rep = verify_nonembeddability(&spec, host, a.trials, budget, &mut Rng::new(a.seed, 0))?;
    write_out(a.out.as_deref(), &rep.to_csv())?;
    eprintln!(
        "non-embedded {}/{} finished trials; event E held in {:.0}% of trials; E-violations {}",
        rep.non_embedded(),
        rep.complete(),
        100.0 * rep.event_rate(),
        rep.violations()
    );
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let t = read_tree(&a.tree)?;
    let g = read_graph(&a.host)?;
    let out = brute_force_embed(&t, &g, OracleBudget { time: Duration::from_secs_f64(a.budget_secs), nodes: u64::MAX });
    println!("verdict={} nodes={}", out.verdict.name(), out.nodes);
    if let OracleVerdict::Found(phi) = out.verdict {
        let line: Vec<String> = phi.iter().map(|v| v.to_string()).collect();
        println!("phi={}", line.join(" "));
    }
    Ok(())
}
