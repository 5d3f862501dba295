//! Runtime parameter set with the defining formulas of every constant.
//!
//! The asymptotic constant hierarchy is replaced by explicit defaults. Any
//! field can be overridden; overridden fields are remembered so that
//! re-deriving a [`ParamSet`] from its own values is a fixed point.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical configuration keys, in documentation order.
pub const CONFIG_KEYS: &[&str] = &[
    "n", "k", "delta_max", "alpha", "p", "p_prime", "m_big", "m_star", "eps", "eps_chain", "mu",
    "eta", "d", "t", "r", "w_star", "nu", "case2", "slack", "r_mult",
];

/// All constants used by the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    /// Number of vertices of the tree and of the host graph.
    pub n: usize,
    /// Degree-regime index.
    pub k: usize,
    /// Maximum tree degree.
    pub delta_max: usize,
    /// Host minimum-degree fraction.
    pub alpha: f64,
    /// Base edge probability.
    pub p: f64,
    /// Scaled probability `M*^6 p`.
    pub p_prime: f64,
    /// Constant `M = 10 k M*^7`.
    pub m_big: f64,
    /// Constant `M*`.
    pub m_star: f64,
    /// `eps_0 = eps, eps_1, ..., eps_k`.
    pub eps_chain: Vec<f64>,
    /// Slice buffer fraction.
    pub mu: f64,
    /// Heavy-leaf fraction threshold.
    pub eta: f64,
    /// Minimum acceptable density of a super-regular pair.
    pub d: f64,
    /// Cluster size spread constant.
    pub t: f64,
    /// Number of cluster pairs.
    pub r: usize,
    /// Derived exponent `w*`.
    pub w_star: f64,
    /// Derived tolerance `nu`.
    pub nu: f64,
    /// Whether the many-heavy Case 2 applies (affects `nu` when `k = 1`).
    pub case2: bool,
    /// Desk-scale slack multiplier; `1.0` means paper-exact checks only.
    pub slack: f64,
    /// Multiplier applied to the density `M p` of the random graph `R`.
    pub r_mult: f64,
    /// Violated asymptotic preconditions, one message each.
    pub warnings: Vec<String>,
    /// Names of fields that were set explicitly rather than derived.
    pub overrides: BTreeSet<String>,
}

/// Partial parameter set; every `Some` field replaces the derived value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamOverrides {
    /// Overrides `alpha`.
    pub alpha: Option<f64>,
    /// Overrides `p`.
    pub p: Option<f64>,
    /// Overrides `p_prime`.
    pub p_prime: Option<f64>,
    /// Overrides `m_big`.
    pub m_big: Option<f64>,
    /// Overrides `m_star`.
    pub m_star: Option<f64>,
    /// Overrides `eps` (the first entry of the chain).
    pub eps: Option<f64>,
    /// Overrides the whole chain `eps_0..eps_k`.
    pub eps_chain: Option<Vec<f64>>,
    /// Overrides `mu`.
    pub mu: Option<f64>,
    /// Overrides `eta`.
    pub eta: Option<f64>,
    /// Overrides `d`.
    pub d: Option<f64>,
    /// Overrides `t`.
    pub t: Option<f64>,
    /// Overrides `r`.
    pub r: Option<usize>,
    /// Overrides `w_star`.
    pub w_star: Option<f64>,
    /// Overrides `nu`.
    pub nu: Option<f64>,
    /// Sets the Case 2 flag.
    pub case2: Option<bool>,
    /// Overrides `slack`.
    pub slack: Option<f64>,
    /// Overrides `r_mult`.
    pub r_mult: Option<f64>,
}

/// Default host minimum-degree fraction `alpha`.
pub const DEFAULT_ALPHA: f64 = 0.4;
/// Default `M*`.
pub const DEFAULT_M_STAR: f64 = 4.0;
/// Default `eps`.
pub const DEFAULT_EPS: f64 = 0.05;
/// Default `mu`.
pub const DEFAULT_MU: f64 = 0.1;
/// Default `eta`.
pub const DEFAULT_ETA: f64 = 0.15;
/// Default `d`.
pub const DEFAULT_D: f64 = 0.25;
/// Default `t`.
pub const DEFAULT_T: f64 = 4.0;
/// Default `r`.
pub const DEFAULT_R: usize = 4;

/// `p = max{ n^(-k/(k+1)), Delta^(k+1) n^(-2) }`.
pub fn threshold_p(n: usize, k: usize, delta: usize) -> f64 {
    let nf = n as f64;
    let kf = k as f64;
    let a = nf.powf(-kf / (kf + 1.0));
    let b = (delta as f64).powf(kf + 1.0) / (nf * nf);
    a.max(b)
}

/// The regime index `k` with `n^(1/(k+1)) <= Delta < n^(1/k)`.
pub fn regime_k(n: usize, delta: usize) -> usize {
    let nf = n as f64;
    let df = delta as f64;
    let mut k = 1;
    // Small tolerance so that exact powers such as 4096^(1/2) = 64 land on the closed side.
    while nf.powf(1.0 / (k as f64 + 1.0)) > df * (1.0 + 1e-12) && k < 64 {
        k += 1;
    }
    k
}

/// `eps_l = mu (eps/mu)^(1/2^l)` for `l = 0..=k`.
pub fn eps_chain_formula(eps: f64, mu: f64, k: usize) -> Vec<f64> {
    (0..=k).map(|l| mu * (eps / mu).powf(1.0 / 2f64.powi(l as i32))).collect()
}

/// `w*` per the two-branch definition.
pub fn w_star_formula(n: usize, k: usize, delta: usize, m_star: f64) -> f64 {
    let log_branch = m_star * (n as f64).ln();
    if k == 2 {
        let sqrt_branch = m_star.sqrt() * (n as f64).sqrt() / delta as f64;
        log_branch.min(sqrt_branch)
    } else {
        log_branch
    }
}

/// `nu` per the two-branch definition.
pub fn nu_formula(n: usize, k: usize, eps: f64, case2: bool) -> f64 {
    if case2 && k == 1 {
        eps.powf(1.0 / 3.0)
    } else {
        (n as f64).powf(-0.1)
    }
}

fn check_pos(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::param(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    check_pos(name, v)?;
    if v >= 1.0 {
        return Err(Error::param(name, format!("must lie in (0,1), got {v}")));
    }
    Ok(())
}

/// Derives the full parameter set for `(n, k, delta_max)`.
pub fn derive_params(n: usize, k: usize, delta_max: usize, ov: &ParamOverrides) -> Result<ParamSet> {
    if n < 4 {
        return Err(Error::param("n", format!("must be at least 4, got {n}")));
    }
    if k < 1 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if delta_max < 2 {
        return Err(Error::param("delta_max", format!("must be at least 2, got {delta_max}")));
    }
    let mut overrides = BTreeSet::new();
    let case2 = match ov.case2 {
        Some(c) => {
            overrides.insert("case2".into());
            c
        }
        None => false,
    };
    let r = match ov.r {
        Some(r) => {
            overrides.insert("r".into());
            r
        }
        None => DEFAULT_R,
    };
    let mut take = |name: &str, v: Option<f64>, derived: f64| -> f64 {
        match v {
            Some(x) => {
                overrides.insert(name.to_string());
                x
            }
            None => derived,
        }
    };
    let alpha = take("alpha", ov.alpha, DEFAULT_ALPHA);
    let p = take("p", ov.p, threshold_p(n, k, delta_max));
    let m_star = take("m_star", ov.m_star, DEFAULT_M_STAR);
    let p_prime = take("p_prime", ov.p_prime, m_star.powi(6) * p);
    let m_big = take("m_big", ov.m_big, 10.0 * k as f64 * m_star.powi(7));
    let mu = take("mu", ov.mu, DEFAULT_MU);
    let eps = take("eps", ov.eps, DEFAULT_EPS);
    let eta = take("eta", ov.eta, DEFAULT_ETA);
    let d = take("d", ov.d, DEFAULT_D);
    let t = take("t", ov.t, DEFAULT_T);
    let slack = take("slack", ov.slack, 1.0);
    let r_mult = take("r_mult", ov.r_mult, 1.0);
    let w_star = take("w_star", ov.w_star, w_star_formula(n, k, delta_max, m_star));
    let nu = take("nu", ov.nu, nu_formula(n, k, eps, case2));
    let eps_chain = match &ov.eps_chain {
        Some(c) => {
            overrides.insert("eps_chain".into());
            c.clone()
        }
        None => eps_chain_formula(eps, mu, k),
    };

    check_unit_open("alpha", alpha).or_else(|e| if alpha == 1.0 { Ok(()) } else { Err(e) })?;
    check_pos("p", p)?;
    if p > 1.0 {
        return Err(Error::param("p", format!("must be at most 1, got {p}")));
    }
    check_pos("p_prime", p_prime)?;
    check_pos("m_big", m_big)?;
    check_pos("m_star", m_star)?;
    for (name, v) in [("mu", mu), ("eps", eps), ("eta", eta), ("d", d)] {
        check_unit_open(name, v)?;
    }
    check_pos("t", t)?;
    check_pos("w_star", w_star)?;
    check_pos("nu", nu)?;
    check_pos("slack", slack)?;
    check_pos("r_mult", r_mult)?;
    if r == 0 {
        return Err(Error::param("r", "must be at least 1"));
    }
    if eps_chain.len() != k + 1 {
        return Err(Error::param(
            "eps_chain",
            format!("needs k+1 = {} entries, got {}", k + 1, eps_chain.len()),
        ));
    }
    for &e in &eps_chain {
        check_unit_open("eps_chain", e)?;
    }

    let mut ps = ParamSet {
        n,
        k,
        delta_max,
        alpha,
        p,
        p_prime,
        m_big,
        m_star,
        eps_chain,
        mu,
        eta,
        d,
        t,
        r,
        w_star,
        nu,
        case2,
        slack,
        r_mult,
        warnings: Vec::new(),
        overrides,
    };
    ps.warnings = regime_warnings(&ps);
    Ok(ps)
}

fn regime_warnings(ps: &ParamSet) -> Vec<String> {
    let mut w = Vec::new();
    let nf = ps.n as f64;
    let kf = ps.k as f64;
    let df = ps.delta_max as f64;
    if nf.powf(1.0 / (kf + 1.0)) > df * (1.0 + 1e-12) {
        w.push(format!("lower regime bound n^(1/(k+1)) <= Delta fails: {:.3} > {}", nf.powf(1.0 / (kf + 1.0)), ps.delta_max));
    }
    if df >= nf.powf(1.0 / kf) * (1.0 - 1e-12) {
        w.push(format!("upper regime bound Delta < n^(1/k) fails: {} >= {:.3}", ps.delta_max, nf.powf(1.0 / kf)));
    }
    let cap = nf / (ps.m_big * nf.ln());
    if df >= cap {
        w.push(format!("upper regime bound Delta < n/(M log n) fails: {} >= {:.3}", ps.delta_max, cap));
    }
    if ps.np_prime() >= nf {
        w.push(format!("n p' = {:.3} exceeds n; colour-2 edges cannot occur", ps.np_prime()));
    }
    if ps.m_big * ps.p > 1.0 {
        w.push(format!("M p = {:.3} exceeds 1; the random graph is complete", ps.m_big * ps.p));
    }
    if ps.eps() >= ps.d {
        w.push(format!("eps = {} is not below d = {}", ps.eps(), ps.d));
    }
    if !(ps.eps_chain.windows(2).all(|x| x[0] <= x[1]) && ps.eps_chain.last().copied().unwrap_or(0.0) <= ps.mu) {
        w.push("eps chain is not increasing towards mu".into());
    }
    w
}

impl ParamSet {
    /// `eps = eps_0`.
    pub fn eps(&self) -> f64 {
        self.eps_chain[0]
    }

    /// `n p'`.
    pub fn np_prime(&self) -> f64 {
        self.n as f64 * self.p_prime
    }

    /// Heavy-leaf threshold `n p' / log n`.
    pub fn heavy_threshold(&self) -> f64 {
        self.np_prime() / (self.n as f64).ln()
    }

    /// Edge probability of the union of the random graphs `R_1..R_{k+3}`.
    pub fn r_density(&self) -> f64 {
        (self.m_big * self.p * self.r_mult).min(1.0)
    }

    /// `true` when no regime warning was recorded.
    pub fn in_regime(&self) -> bool {
        self.warnings.is_empty()
    }

    /// Overrides reconstructed from the recorded override names.
    pub fn current_overrides(&self) -> ParamOverrides {
        let has = |s: &str| self.overrides.contains(s);
        ParamOverrides {
            alpha: has("alpha").then_some(self.alpha),
            p: has("p").then_some(self.p),
            p_prime: has("p_prime").then_some(self.p_prime),
            m_big: has("m_big").then_some(self.m_big),
            m_star: has("m_star").then_some(self.m_star),
            eps: has("eps").then(|| self.eps()),
            eps_chain: has("eps_chain").then(|| self.eps_chain.clone()),
            mu: has("mu").then_some(self.mu),
            eta: has("eta").then_some(self.eta),
            d: has("d").then_some(self.d),
            t: has("t").then_some(self.t),
            r: has("r").then_some(self.r),
            w_star: has("w_star").then_some(self.w_star),
            nu: has("nu").then_some(self.nu),
            case2: has("case2").then_some(self.case2),
            slack: has("slack").then_some(self.slack),
            r_mult: has("r_mult").then_some(self.r_mult),
        }
    }

    /// Re-derives from this set's own inputs and overrides.
    pub fn rederive(&self) -> Result<ParamSet> {
        derive_params(self.n, self.k, self.delta_max, &self.current_overrides())
    }

    /// Copy with the Case 2 flag set and `nu` recomputed unless overridden.
    pub fn with_case2(&self, case2: bool) -> ParamSet {
        let mut ps = self.clone();
        ps.case2 = case2;
        if !ps.overrides.contains("nu") {
            ps.nu = nu_formula(ps.n, ps.k, ps.eps(), case2);
        }
        ps
    }

    /// Renders the set in the `key = value` configuration format.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "delta_max = {}", self.delta_max);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "p_prime = {}", self.p_prime);
        let _ = writeln!(s, "m_big = {}", self.m_big);
        let _ = writeln!(s, "m_star = {}", self.m_star);
        let chain: Vec<String> = self.eps_chain.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(s, "eps_chain = {}", chain.join(","));
        let _ = writeln!(s, "mu = {}", self.mu);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "t = {}", self.t);
        let _ = writeln!(s, "r = {}", self.r);
        let _ = writeln!(s, "w_star = {}", self.w_star);
        let _ = writeln!(s, "nu = {}", self.nu);
        let _ = writeln!(s, "case2 = {}", self.case2);
        let _ = writeln!(s, "slack = {}", self.slack);
        let _ = writeln!(s, "r_mult = {}", self.r_mult);
        s
    }
}

/// Parsed configuration file: the three structural inputs plus overrides.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    /// Vertex count, if given.
    pub n: Option<usize>,
    /// Regime index, if given.
    pub k: Option<usize>,
    /// Maximum degree, if given.
    pub delta_max: Option<usize>,
    /// All remaining keys.
    pub overrides: ParamOverrides,
}

fn parse_f64(key: &str, v: &str, line: usize) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Parse { line, reason: format!("`{key}` expects a number, got `{v}`") })
}

fn parse_usize(key: &str, v: &str, line: usize) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Parse { line, reason: format!("`{key}` expects a non-negative integer, got `{v}`") })
}

impl Config {
    /// Parses the flat `key = value` format with `#` comments.
    pub fn parse(text: &str) -> Result<Config> {
        let mut c = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, reason: format!("expected `key = value`, got `{content}`") })?;
            let key = key.trim();
            let value = value.trim();
            let o = &mut c.overrides;
            match key {
                "n" => c.n = Some(parse_usize(key, value, line)?),
                "k" => c.k = Some(parse_usize(key, value, line)?),
                "delta_max" => c.delta_max = Some(parse_usize(key, value, line)?),
                "alpha" => o.alpha = Some(parse_f64(key, value, line)?),
                "p" => o.p = Some(parse_f64(key, value, line)?),
                "p_prime" => o.p_prime = Some(parse_f64(key, value, line)?),
                "m_big" => o.m_big = Some(parse_f64(key, value, line)?),
                "m_star" => o.m_star = Some(parse_f64(key, value, line)?),
                "eps" => o.eps = Some(parse_f64(key, value, line)?),
                "eps_chain" => {
                    let mut v = Vec::new();
                    for part in value.split(',') {
                        v.push(parse_f64(key, part.trim(), line)?);
                    }
                    o.eps_chain = Some(v);
                }
                "mu" => o.mu = Some(parse_f64(key, value, line)?),
                "eta" => o.eta = Some(parse_f64(key, value, line)?),
                "d" => o.d = Some(parse_f64(key, value, line)?),
                "t" => o.t = Some(parse_f64(key, value, line)?),
                "r" => o.r = Some(parse_usize(key, value, line)?),
                "w_star" => o.w_star = Some(parse_f64(key, value, line)?),
                "nu" => o.nu = Some(parse_f64(key, value, line)?),
                "case2" => {
                    o.case2 = Some(match value {
                        "true" | "1" => true,
                        "false" | "0" => false,
                        _ => return Err(Error::Parse { line, reason: format!("`case2` expects a boolean, got `{value}`") }),
                    })
                }
                "slack" => o.slack = Some(parse_f64(key, value, line)?),
                "r_mult" => o.r_mult = Some(parse_f64(key, value, line)?),
                _ => return Err(Error::Parse { line, reason: format!("unknown key `{key}`") }),
            }
        }
        Ok(c)
    }

    /// Merges `other` into `self`; fields set in `other` win.
    pub fn merge(&mut self, other: &Config) {
        macro_rules! pick {
            ($($f:ident),*) => { $( if other.overrides.$f.is_some() { self.overrides.$f = other.overrides.$f.clone(); } )* };
        }
        if other.n.is_some() {
            self.n = other.n;
        }
        if other.k.is_some() {
            self.k = other.k;
        }
        if other.delta_max.is_some() {
            self.delta_max = other.delta_max;
        }
        pick!(alpha, p, p_prime, m_big, m_star, eps, eps_chain, mu, eta, d, t, r, w_star, nu, case2, slack, r_mult);
    }
}

/// Overrides that make desk-scale runs meaningful.
///
/// With the default `M* = 4` the quantity `n p'` exceeds `n` for every
/// feasible `n`, so every vertex is forced into the trivial branch of the
/// colouring. The desk preset uses `M* = 1` (hence `p' = p`), a smaller
/// buffer `mu`, a smaller heavy-leaf fraction `eta`, two cluster pairs and
/// enables slack.
pub fn desk_overrides() -> ParamOverrides {
    ParamOverrides {
        m_star: Some(1.0),
        mu: Some(0.02),
        eta: Some(0.05),
        eps: Some(0.005),
        slack: Some(4.0),
        r: Some(2),
        ..ParamOverrides::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_example_k2() {
        let ps = derive_params(4096, 2, 64, &ParamOverrides::default()).unwrap();
        assert!((ps.p - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn p_example_k1_branches_coincide() {
        let ps = derive_params(4096, 1, 64, &ParamOverrides::default()).unwrap();
        assert!((ps.p - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn w_star_example_takes_minimum() {
        // Independent evaluation of both branches.
        let log_branch = 4.0 * (1.0e6f64).ln();
        let sqrt_branch = 2.0 * 1000.0 / 1000.0;
        assert!((log_branch - 55.262).abs() < 1e-3);
        let ov = ParamOverrides { m_star: Some(4.0), ..Default::default() };
        let ps = derive_params(1_000_000, 2, 1000, &ov).unwrap();
        assert!((ps.w_star - log_branch.min(sqrt_branch)).abs() < 1e-12);
        assert!((ps.w_star - 2.0).abs() < 1e-12);
    }

    #[test]
    fn defaults_match_stated_constants() {
        let ps = derive_params(4096, 2, 64, &ParamOverrides::default()).unwrap();
        assert_eq!(ps.m_star, 4.0);
        assert_eq!(ps.m_big, 10.0 * 2.0 * 4f64.powi(7));
        assert!((ps.p_prime - 4096.0 * ps.p).abs() < 1e-12);
        assert_eq!(ps.eps(), 0.05);
        assert_eq!((ps.mu, ps.eta, ps.d, ps.t, ps.r), (0.1, 0.15, 0.25, 4.0, 4));
        assert_eq!(ps.eps_chain.len(), 3);
        assert!(ps.eps_chain.windows(2).all(|w| w[0] < w[1]));
        assert!(*ps.eps_chain.last().unwrap() < ps.mu);
    }

    #[test]
    fn nu_branches() {
        let ps = derive_params(4096, 1, 64, &ParamOverrides::default()).unwrap();
        assert!((ps.nu - 4096f64.powf(-0.1)).abs() < 1e-12);
        let c2 = ps.with_case2(true);
        assert!((c2.nu - 0.05f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(derive_params(3, 1, 2, &ParamOverrides::default()).is_err());
        assert!(derive_params(10, 0, 2, &ParamOverrides::default()).is_err());
        assert!(derive_params(10, 1, 1, &ParamOverrides::default()).is_err());
        let ov = ParamOverrides { p: Some(f64::NAN), ..Default::default() };
        assert!(derive_params(100, 1, 10, &ov).is_err());
        let ov = ParamOverrides { mu: Some(-0.1), ..Default::default() };
        assert!(derive_params(100, 1, 10, &ov).is_err());
    }

    #[test]
    fn warnings_report_regime() {
        let ps = derive_params(4096, 1, 64, &ParamOverrides::default()).unwrap();
        assert!(ps.warnings.iter().any(|w| w.contains("n/(M log n)")));
        let ps = derive_params(4096, 1, 10, &ParamOverrides::default()).unwrap();
        assert!(ps.warnings.iter().any(|w| w.contains("lower regime bound")));
    }

    #[test]
    fn regime_k_examples() {
        assert_eq!(regime_k(4096, 17), 2);
        assert_eq!(regime_k(4096, 64), 1);
        assert_eq!(regime_k(4096, 262), 1);
        assert_eq!(regime_k(1_000_000, 1000), 1);
        assert_eq!(regime_k(1_000_000, 999), 2);
    }

    #[test]
    fn config_round_trip() {
        let ps = derive_params(500, 2, 20, &desk_overrides()).unwrap();
        let text = ps.to_config_string();
        let cfg = Config::parse(&text).unwrap();
        let again = derive_params(cfg.n.unwrap(), cfg.k.unwrap(), cfg.delta_max.unwrap(), &cfg.overrides).unwrap();
        assert_eq!(again.p, ps.p);
        assert_eq!(again.eps_chain, ps.eps_chain);
        assert_eq!(again.r, ps.r);
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let err = Config::parse("# header\nn = 10\nbogus = 3\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, reason: "unknown key `bogus`".into() });
        assert!(Config::parse("mu 0.3").is_err());
    }
}
