//! Threshold sweeps over `(n, Delta, p multiplier, host family, tree profile)`
//! grids with deterministic per-trial seeds and CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use spantree::embedder::{embed_tree, EmbedConfig, EmbedResult};
use spantree::graph::{gen_host, HostFamily};
use spantree::params::{derive_params, regime_k, ParamOverrides, ParamSet};
use spantree::rng::{mix64, Rng};
use spantree::tree::{gen_random_tree, TreeProfile};
use spantree::{Error, Result};

/// Version tag of the sweep CSV schema.
pub const SWEEP_SCHEMA: &str = "# spantree sweep v1";

/// Version tag of the aggregated sweep CSV schema.
pub const SUMMARY_SCHEMA: &str = "# spantree sweep-summary v1";

/// Maximum degree of a column, absolute or as an exponent of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DeltaSpec {
    /// `Delta = round(n^e)`.
    Exponent(f64),
    /// A fixed value.
    Absolute(usize),
}

impl DeltaSpec {
    /// Parses `n^0.5` or `64`.
    pub fn parse(s: &str) -> Result<DeltaSpec> {
        let s = s.trim();
        if let Some(e) = s.strip_prefix("n^") {
            let e: f64 = e.parse().map_err(|_| Error::param("delta", format!("bad exponent `{s}`")))?;
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::param("delta", format!("exponent must lie in (0, 1], got {e}")));
            }
            Ok(DeltaSpec::Exponent(e))
        } else {
            s.parse().map(DeltaSpec::Absolute).map_err(|_| Error::param("delta", format!("expected `n^e` or an integer, got `{s}`")))
        }
    }

    /// The value at `n` (at least 2).
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            DeltaSpec::Exponent(e) => ((n as f64).powf(e).round() as usize).max(2),
            DeltaSpec::Absolute(d) => d.max(2),
        }
    }
}

/// Family of random trees of a sweep column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ProfileKind {
    /// Uniform random labelled trees with degrees capped by `Delta`.
    Capped,
    /// Spiders joined into a tree.
    Spider,
    /// Trees whose given fraction of vertices are heavy leaves.
    Heavy(f64),
}

impl ProfileKind {
    /// Parses `capped`, `spider`, `heavy` or `heavy:0.4`.
    pub fn parse(s: &str) -> Result<ProfileKind> {
        match s.trim() {
            "capped" => Ok(ProfileKind::Capped),
            "spider" => Ok(ProfileKind::Spider),
            "heavy" => Ok(ProfileKind::Heavy(0.5)),
            other => match other.strip_prefix("heavy:").map(str::parse::<f64>) {
                Some(Ok(f)) if f > 0.0 && f < 1.0 => Ok(ProfileKind::Heavy(f)),
                _ => Err(Error::param("profile", format!("unknown profile `{other}`"))),
            },
        }
    }

    /// Name used in CSV output.
    pub fn name(&self) -> String {
        match self {
            ProfileKind::Capped => "capped".into(),
            ProfileKind::Spider => "spider".into(),
            ProfileKind::Heavy(f) => format!("heavy:{f}"),
        }
    }

    /// The generator for a run with the given parameters.
    pub fn profile(&self, params: &ParamSet) -> TreeProfile {
        match *self {
            ProfileKind::Capped => TreeProfile::MaxDegreeCapped(params.delta_max),
            ProfileKind::Spider => TreeProfile::SpiderMix(params.delta_max),
            ProfileKind::Heavy(fraction) => TreeProfile::HeavyLeafRich { fraction, delta: params.delta_max, threshold: params.heavy_threshold() },
        }
    }
}

/// A sweep grid.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    /// Tree sizes.
    pub ns: Vec<usize>,
    /// Maximum-degree columns.
    pub deltas: Vec<DeltaSpec>,
    /// Multipliers of the random-graph density relative to the threshold.
    pub p_mults: Vec<f64>,
    /// Dense host families.
    pub families: Vec<HostFamily>,
    /// Tree profiles.
    pub profiles: Vec<ProfileKind>,
    /// Trials per cell.
    pub trials: usize,
    /// Base seed.
    pub seed: u64,
    /// Parameter overrides applied to every cell.
    pub overrides: ParamOverrides,
    /// Embedding options.
    pub embed: EmbedConfig,
    /// Whether to emit the wall-time column (which breaks byte-identity).
    pub timings: bool,
}

/// One grid cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    /// Tree size.
    pub n: usize,
    /// Maximum degree.
    pub delta: usize,
    /// Degree regime.
    pub k: usize,
    /// Density multiplier.
    pub p_mult: f64,
    /// Host family name.
    pub family: String,
    /// Tree profile name.
    pub profile: String,
    /// Index of the cell with the multiplier ignored; trials of cells sharing it share trees, hosts and coupled random graphs.
    pub column: usize,
}

impl SweepSpec {
    /// All cells in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        let mut column = 0;
        for &n in &self.ns {
            for d in &self.deltas {
                let delta = d.resolve(n);
                for fam in &self.families {
                    for prof in &self.profiles {
                        for &p_mult in &self.p_mults {
                            out.push(Cell { n, delta, k: regime_k(n, delta), p_mult, family: fam.name().into(), profile: prof.name(), column });
                        }
                        column += 1;
                    }
                }
            }
        }
        out
    }

    /// Number of trials the sweep will run.
    pub fn total_trials(&self) -> usize {
        self.cells().len() * self.trials
    }
}

/// One trial.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRow {
    /// The cell.
    pub cell: Cell,
    /// Trial index inside the cell.
    pub trial: usize,
    /// Seed of the trial.
    pub seed: u64,
    /// Whether the embedding succeeded.
    pub success: bool,
    /// Case of the tree.
    pub case: String,
    /// Stage of the failure (empty on success).
    pub stage: String,
    /// Attempts used.
    pub attempts: usize,
    /// Checks with paper-exact outcome.
    pub exact: usize,
    /// Checks passing only with slack.
    pub slack: usize,
    /// Failed checks.
    pub fail: usize,
    /// Wall time in milliseconds.
    pub wall_ms: f64,
}

/// Success rate of one cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    /// The cell.
    pub cell: Cell,
    /// Trials run.
    pub trials: usize,
    /// Successful trials.
    pub successes: usize,
    /// `log(n p) / log n` with `p` the random-graph density.
    pub log_np: f64,
    /// `log Delta / log n`.
    pub log_delta: f64,
}

impl CellSummary {
    /// Success rate.
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials.max(1) as f64
    }
}

/// Rows and aggregated table of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepOutput {
    /// Per-trial rows in `(cell, trial)` order.
    pub rows: Vec<TrialRow>,
    /// Per-cell rates in cell order.
    pub summary: Vec<CellSummary>,
    /// Whether the rows carry meaningful wall times.
    pub timings: bool,
}

/// Seed of a trial: shared by all multipliers of a column.
pub fn trial_seed(base: u64, column: usize, trial: usize) -> u64 {
    mix64(base ^ mix64(((column as u64) << 32) ^ trial as u64 ^ 0x5eed_5eed))
}

/// Parameters of a cell.
pub fn cell_params(cell: &Cell, overrides: &ParamOverrides) -> Result<ParamSet> {
    let mut ov = overrides.clone();
    ov.r_mult = Some(ov.r_mult.unwrap_or(1.0) * cell.p_mult);
    derive_params(cell.n, cell.k, cell.delta, &ov)
}

/// Runs one trial of a cell.
pub fn run_trial(cell: &Cell, trial: usize, spec: &SweepSpec) -> TrialRow {
    let seed = trial_seed(spec.seed, cell.column, trial);
    let clock = Instant::now();
    let outcome: Result<EmbedResult> = (|| {
        let params = cell_params(cell, &spec.overrides)?;
        let family = HostFamily::parse(&cell.family)?;
        let profile = ProfileKind::parse(&cell.profile)?;
        let base = Rng::new(seed, 0);
        let t = gen_random_tree(cell.n, &profile.profile(&params), &mut base.split(1))?;
        let g = gen_host(&family, cell.n, params.alpha, &mut base.split(2))?;
        let cfg = EmbedConfig { r_key: seed, ..spec.embed.clone() };
        Ok(embed_tree(&t, &g, &params, &cfg, &mut base.split(3)))
    })();
    let wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(res) => {
            let (exact, slack, fail) = res.report.counts();
            TrialRow {
                cell: cell.clone(),
                trial,
                seed,
                success: res.success,
                case: res.case.clone().unwrap_or_default(),
                stage: res.failure_stage.clone().unwrap_or_default(),
                attempts: res.attempts,
                exact,
                slack,
                fail,
                wall_ms,
            }
        }
        Err(e) => TrialRow {
            cell: cell.clone(),
            trial,
            seed,
            success: false,
            case: String::new(),
            stage: format!("setup: {}", e.to_string().replace(',', ";")),
            attempts: 0,
            exact: 0,
            slack: 0,
            fail: 0,
            wall_ms,
        },
    }
}

/// Runs every `(cell, trial)` pair in parallel and collects rows in deterministic order.
pub fn run_sweep(spec: &SweepSpec) -> SweepOutput {
    let cells = spec.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..spec.trials).map(move |t| (c, t))).collect();
    let rows: Vec<TrialRow> = jobs.par_iter().map(|&(c, t)| run_trial(&cells[c], t, spec)).collect();
    let summary = cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let successes = rows[i * spec.trials..(i + 1) * spec.trials].iter().filter(|r| r.success).count();
            let nf = cell.n as f64;
            let density = cell_params(cell, &spec.overrides).map(|p| p.r_density()).unwrap_or(f64::NAN);
            CellSummary {
                cell: cell.clone(),
                trials: spec.trials,
                successes,
                log_np: (nf * density).ln() / nf.ln(),
                log_delta: (cell.delta as f64).ln() / nf.ln(),
            }
        })
        .collect();
    SweepOutput { rows, summary, timings: spec.timings }
}

impl SweepOutput {
    /// Per-trial CSV with a versioned header comment.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SWEEP_SCHEMA);
        s.push('\n');
        s.push_str("n,delta,k,p_mult,family,profile,trial,seed,success,case,stage,attempts,checks_exact,checks_slack,checks_fail");
        if self.timings {
            s.push_str(",wall_ms");
        }
        s.push('\n');
        for r in &self.rows {
            let c = &r.cell;
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.n,
                c.delta,
                c.k,
                c.p_mult,
                c.family,
                c.profile,
                r.trial,
                r.seed,
                u8::from(r.success),
                r.case,
                r.stage,
                r.attempts,
                r.exact,
                r.slack,
                r.fail
            );
            if self.timings {
                let _ = write!(s, ",{:.1}", r.wall_ms);
            }
            s.push('\n');
        }
        s
    }

    /// Aggregated per-cell CSV for plotting.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from(SUMMARY_SCHEMA);
        s.push_str("\nn,delta,k,p_mult,family,profile,trials,successes,rate,log_np_over_log_n,log_delta_over_log_n\n");
        for c in &self.summary {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{:.4},{:.4},{:.4}",
                c.cell.n,
                c.cell.delta,
                c.cell.k,
                c.cell.p_mult,
                c.cell.family,
                c.cell.profile,
                c.trials,
                c.successes,
                c.rate(),
                c.log_np,
                c.log_delta
            );
        }
        s
    }

    /// Success rates per column, ordered by multiplier.
    pub fn columns(&self) -> BTreeMap<usize, Vec<(f64, f64)>> {
        let mut out: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
        for c in &self.summary {
            out.entry(c.cell.column).or_default().push((c.cell.p_mult, c.rate()));
        }
        for v in out.values_mut() {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        out
    }

    /// Whether the success rate is non-decreasing in the multiplier in every column.
    pub fn monotone(&self) -> bool {
        self.columns().values().all(|v| v.windows(2).all(|w| w[0].1 <= w[1].1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spantree::params::desk_overrides;

    fn tiny(trials: usize) -> SweepSpec {
        SweepSpec {
            ns: vec![300],
            deltas: vec![DeltaSpec::Exponent(0.5)],
            p_mults: vec![4.0],
            families: vec![HostFamily::TwoCliques],
            profiles: vec![ProfileKind::Heavy(0.5)],
            trials,
            seed: 11,
            overrides: desk_overrides(),
            embed: EmbedConfig { retries: 1, ..EmbedConfig::default() },
            timings: false,
        }
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let mut spec = tiny(3);
        spec.ns.clear();
        let out = run_sweep(&spec);
        assert!(out.rows.is_empty());
        assert_eq!(out.to_csv().lines().count(), 2);
        assert!(out.to_csv().starts_with(SWEEP_SCHEMA));
    }

    #[test]
    fn rows_are_cells_times_trials_and_reproducible() {
        let spec = tiny(5);
        let a = run_sweep(&spec);
        let b = run_sweep(&spec);
        assert_eq!(a.rows.len(), 5);
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.summary_csv(), b.summary_csv());
    }

    #[test]
    fn delta_and_profile_parsing() {
        assert_eq!(DeltaSpec::parse("n^0.5").unwrap().resolve(4096), 64);
        assert_eq!(DeltaSpec::parse("17").unwrap().resolve(4096), 17);
        assert!(DeltaSpec::parse("n^2").is_err());
        assert_eq!(ProfileKind::parse("heavy:0.3").unwrap(), ProfileKind::Heavy(0.3));
        assert!(ProfileKind::parse("bushy").is_err());
    }
}
