//! Invariant regression suite: decomposition claims, distribution conditions,
//! bookkeeping identities and slice planning over a generated tree corpus.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use spantree::assignment::assign;
use spantree::decomposition::{decompose, verify_claims, ClaimStatus};
use spantree::embedder::{plan_slices, round_state, EmbedConfig, HostExtras};
use spantree::graph::{gen_host, HostFamily};
use spantree::host::build_host_partition;
use spantree::params::{derive_params, regime_k, ParamOverrides};
use spantree::report::{Report, Status};
use spantree::rng::{mix64, Rng};
use spantree::tree::{caterpillar, complete_mary, gen_random_tree, path, star, RootedTree, TreeProfile};
use spantree::{Error, Result};

/// Version tag of the invariants CSV schema.
pub const INVARIANTS_SCHEMA: &str = "# spantree invariants v1";

/// Report checks that are exact counting statements.
pub const EXACT_CHECKS: &[&str] = &["Z2", "Z4", "L1", "L2", "slice-sum", "m-g-identities"];

/// Tree families of the corpus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CorpusFamily {
    /// Paths.
    Path,
    /// Stars `K_{1,n-1}`.
    Star,
    /// Complete binary trees truncated to `n` vertices.
    Binary,
    /// Caterpillars with `sqrt n` legs per spine vertex.
    Caterpillar,
    /// Uniform random trees with degree cap `sqrt n`.
    Uniform,
    /// Heavy-leaf-rich random trees with degree cap `sqrt n`.
    Heavy,
}

impl CorpusFamily {
    /// Parses a family name.
    pub fn parse(s: &str) -> Result<CorpusFamily> {
        Ok(match s {
            "path" => CorpusFamily::Path,
            "star" => CorpusFamily::Star,
            "binary" => CorpusFamily::Binary,
            "caterpillar" => CorpusFamily::Caterpillar,
            "uniform" => CorpusFamily::Uniform,
            "heavy" => CorpusFamily::Heavy,
            _ => return Err(Error::param("corpus", format!("unknown tree family `{s}`"))),
        })
    }

    /// Canonical name.
    pub fn name(&self) -> &'static str {
        match self {
            CorpusFamily::Path => "path",
            CorpusFamily::Star => "star",
            CorpusFamily::Binary => "binary",
            CorpusFamily::Caterpillar => "caterpillar",
            CorpusFamily::Uniform => "uniform",
            CorpusFamily::Heavy => "heavy",
        }
    }
}

/// One corpus entry: a family at a size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorpusEntry {
    /// Tree family.
    pub family: CorpusFamily,
    /// Number of vertices.
    pub n: usize,
}

impl CorpusEntry {
    /// Parses `family:n`.
    pub fn parse(s: &str) -> Result<CorpusEntry> {
        let (f, n) = s.split_once(':').ok_or_else(|| Error::param("corpus", format!("expected `family:n`, got `{s}`")))?;
        let n = n.trim().parse().map_err(|_| Error::param("corpus", format!("bad size in `{s}`")))?;
        Ok(CorpusEntry { family: CorpusFamily::parse(f.trim())?, n })
    }
}

/// Corpus and options of an invariant run.
#[derive(Clone, Debug)]
pub struct CorpusSpec {
    /// Entries in output order.
    pub entries: Vec<CorpusEntry>,
    /// Random trees per entry (deterministic families use one).
    pub per_entry: usize,
    /// Base seed.
    pub seed: u64,
    /// Parameter overrides.
    pub overrides: ParamOverrides,
    /// Whether to run the distribution and slice planning on many-heavy trees.
    pub pipeline: bool,
}

/// One evaluated invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantRow {
    /// Corpus entry label `family:n#i`.
    pub tree: String,
    /// Check name.
    pub check: String,
    /// Whether the check is a counting statement that must always hold.
    pub unconditional: bool,
    /// `pass`, `slack`, `conditional` or `fail`.
    pub status: String,
    /// Number of violations (claims) or measured value (windows).
    pub value: f64,
}

/// Output of [`run_invariant_suite`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct InvariantReport {
    /// Rows in corpus order.
    pub rows: Vec<InvariantRow>,
}

impl InvariantReport {
    /// Failed unconditional checks.
    pub fn unconditional_failures(&self) -> Vec<&InvariantRow> {
        self.rows.iter().filter(|r| r.unconditional && r.status == "fail").collect()
    }

    /// `(passing, total)` over conditional checks.
    pub fn conditional_stats(&self) -> (usize, usize) {
        let cond: Vec<_> = self.rows.iter().filter(|r| !r.unconditional).collect();
        (cond.iter().filter(|r| r.status == "pass" || r.status == "slack").count(), cond.len())
    }

    /// CSV with a versioned header comment.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(INVARIANTS_SCHEMA);
        s.push_str("\ntree,check,unconditional,status,value\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.tree, r.check, u8::from(r.unconditional), r.status, r.value);
        }
        s
    }
}

/// Builds the tree of an entry.
pub fn corpus_tree(e: &CorpusEntry, threshold: f64, rng: &mut Rng) -> Result<RootedTree> {
    let n = e.n;
    let cap = ((n as f64).sqrt().round() as usize).max(3);
    match e.family {
        CorpusFamily::Path => Ok(path(n)),
        CorpusFamily::Star => Ok(star(n)),
        CorpusFamily::Binary => {
            let mut h = 0;
            while (1usize << (h + 1)) - 1 < n {
                h += 1;
            }
            let full = complete_mary(2, h);
            let keep: Vec<Option<usize>> = full.bfs_order().take(n).map(|v| full.parent(v)).collect();
            let mut parents = vec![None; n];
            let order: Vec<usize> = full.bfs_order().take(n).collect();
            let mut idx = vec![usize::MAX; full.n()];
            for (i, &v) in order.iter().enumerate() {
                idx[v] = i;
            }
            for (i, p) in keep.into_iter().enumerate() {
                parents[i] = p.map(|q| idx[q]);
            }
            RootedTree::from_parents(&parents)
        }
        CorpusFamily::Caterpillar => {
            let legs = cap - 2;
            let spine = n / (legs + 1);
            let base = caterpillar(spine.max(1), legs);
            let mut parents: Vec<Option<usize>> = (0..base.n()).map(|v| base.parent(v)).collect();
            while parents.len() < n {
                let last = parents.len() - 1;
                parents.push(Some(last));
            }
            RootedTree::from_parents(&parents[..n])
        }
        CorpusFamily::Uniform => gen_random_tree(n, &TreeProfile::MaxDegreeCapped(cap), rng),
        CorpusFamily::Heavy => gen_random_tree(n, &TreeProfile::HeavyLeafRich { fraction: 0.5, delta: cap, threshold }, rng),
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Exact => "pass",
        Status::Slack => "slack",
        Status::Fail => "fail",
    }
}

fn push_report(rows: &mut Vec<InvariantRow>, label: &str, report: &Report) {
    for c in &report.checks {
        let name = if c.cluster == usize::MAX { format!("{}[{}]", c.name, c.round) } else { format!("{}[{}/{}]", c.name, c.round, c.cluster) };
        rows.push(InvariantRow {
            tree: label.to_string(),
            check: name,
            unconditional: EXACT_CHECKS.contains(&c.name.as_str()),
            status: status_name(c.status).into(),
            value: c.value,
        });
    }
}

fn run_tree(entry: &CorpusEntry, i: usize, spec: &CorpusSpec) -> Vec<InvariantRow> {
    let label = format!("{}:{}#{i}", entry.family.name(), entry.n);
    let mut rows = Vec::new();
    let seed = mix64(spec.seed ^ mix64((entry.n as u64) << 8 ^ entry.family as u64) ^ i as u64);
    let rng = Rng::new(seed, 0);
    let err_row = |rows: &mut Vec<InvariantRow>, stage: &str, e: &Error, unconditional: bool| {
        rows.push(InvariantRow {
            tree: label.clone(),
            check: format!("{stage}: {}", e.to_string().replace(',', ";")),
            unconditional,
            status: if unconditional { "fail".into() } else { "conditional".into() },
            value: 0.0,
        });
    };
    let delta_guess = ((entry.n as f64).sqrt().round() as usize).max(3);
    let probe = match derive_params(entry.n, regime_k(entry.n, delta_guess), delta_guess, &spec.overrides) {
        Ok(p) => p,
        Err(e) => {
            err_row(&mut rows, "params", &e, false);
            return rows;
        }
    };
    let t = match corpus_tree(entry, probe.heavy_threshold(), &mut rng.split(1)) {
        Ok(t) => t,
        Err(e) => {
            err_row(&mut rows, "tree", &e, false);
            return rows;
        }
    };
    let t = if t.n() >= 2 && !t.is_leaf(t.root()) { t.reroot_at_lowest_leaf() } else { t };
    let delta = t.max_degree().max(2);
    let params = match derive_params(t.n(), regime_k(t.n(), delta), delta, &spec.overrides) {
        Ok(p) => p,
        Err(e) => {
            err_row(&mut rows, "params", &e, false);
            return rows;
        }
    };
    let (ch, dec) = match decompose(&t, &params, &mut rng.split(2)) {
        Ok(x) => x,
        Err(e) => {
            err_row(&mut rows, "decompose", &e, true);
            return rows;
        }
    };
    for c in verify_claims(&t, &ch, &dec, &params).checks {
        let status = match c.status {
            ClaimStatus::Pass => "pass",
            ClaimStatus::Conditional => "conditional",
            ClaimStatus::Fail => "fail",
        };
        rows.push(InvariantRow { tree: label.clone(), check: c.name.into(), unconditional: c.unconditional, status: status.into(), value: c.violations as f64 });
    }
    rows.push(InvariantRow { tree: label.clone(), check: format!("case={}", dec.case.name()), unconditional: false, status: "pass".into(), value: dec.heavy_count as f64 });
    if !spec.pipeline || !dec.case.many_heavy() {
        return rows;
    }
    let params = params.with_case2(dec.case == spantree::decomposition::CaseTag::ManyHeavyCase2);
    let stage = (|| -> Result<()> {
        let g = gen_host(&HostFamily::TwoCliques, t.n(), params.alpha, &mut rng.split(3))?;
        let host = build_host_partition(&g, &params, &mut rng.split(4))?;
        let ca = assign(&t, &dec, &host, &params, &mut rng.split(5))?;
        push_report(&mut rows, &label, &ca.report);
        let mut rep = Report::default();
        let extras = HostExtras::new(&host, &params, false)?;
        let state = round_state(&t, &dec, &ca, &params, &mut rep);
        let plan = state.and_then(|_| plan_slices(&t, &dec, &ca, &host, &extras, &params, &EmbedConfig::default(), &mut rep, &mut rng.split(6)));
        push_report(&mut rows, &label, &rep);
        plan.map(|_| ())
    })();
    if let Err(e) = stage {
        let unconditional = matches!(e, Error::Invariant(_));
        err_row(&mut rows, "pipeline", &e, unconditional);
    }
    rows
}

/// Runs the suite over the corpus in parallel, keeping corpus order.
pub fn run_invariant_suite(spec: &CorpusSpec) -> InvariantReport {
    let jobs: Vec<(CorpusEntry, usize)> = spec
        .entries
        .iter()
        .flat_map(|e| {
            let reps = match e.family {
                CorpusFamily::Uniform | CorpusFamily::Heavy => spec.per_entry.max(1),
                _ => 1,
            };
            (0..reps).map(move |i| (*e, i))
        })
        .collect();
    let rows: Vec<Vec<InvariantRow>> = jobs.par_iter().map(|(e, i)| run_tree(e, *i, spec)).collect();
    InvariantReport { rows: rows.into_iter().flatten().collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spantree::params::desk_overrides;

    fn spec(entries: &[&str]) -> CorpusSpec {
        CorpusSpec {
            entries: entries.iter().map(|s| CorpusEntry::parse(s).unwrap()).collect(),
            per_entry: 1,
            seed: 3,
            overrides: desk_overrides(),
            pipeline: true,
        }
    }

    #[test]
    fn empty_corpus_gives_empty_report() {
        let rep = run_invariant_suite(&spec(&[]));
        assert!(rep.rows.is_empty());
        assert_eq!(rep.to_csv().lines().count(), 2);
    }

    #[test]
    fn small_corpus_has_no_unconditional_failures() {
        let rep = run_invariant_suite(&spec(&["path:500", "star:500", "binary:511", "caterpillar:500", "heavy:1000"]));
        assert!(rep.unconditional_failures().is_empty(), "{:?}", rep.unconditional_failures());
        assert!(!rep.rows.is_empty());
    }

    #[test]
    fn binary_tree_has_requested_size() {
        let t = corpus_tree(&CorpusEntry { family: CorpusFamily::Binary, n: 100 }, 1.0, &mut Rng::new(0, 0)).unwrap();
        assert_eq!(t.n(), 100);
        assert!(t.max_degree() <= 3);
    }
}
