//! Balanced partition of 6-dimensional weight vectors into `2r` parts:
//! random seeding followed by a lexicographic local search.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::host::bar;
use crate::rng::Rng;

/// Default number of seeding attempts.
pub const DEFAULT_SEED_RETRIES: usize = 50;

/// Upper bound on local-search moves.
pub const MAX_MOVES: usize = 200_000;

/// A weight vector `(q_1, ..., q_6)`.
pub type WeightVector = [u64; 6];

/// The three exchange moves of the local search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExchangeCase {
    /// Move a block of the maximum part to its partner.
    A,
    /// Move a block of the partner of the minimum part onto the minimum part.
    B,
    /// Move a block of the maximum part onto the minimum pair.
    C,
}

/// Result of [`distribute_vectors`].
#[derive(Clone, Debug, Serialize)]
pub struct VectorPartition {
    /// Number of pairs `r`.
    pub r: usize,
    /// Part index `2 i + h` of every input vector.
    pub part: Vec<usize>,
    /// Whether the vector was fixed in the seeding phase.
    pub seeded: Vec<bool>,
    /// Weights `alpha_ih`.
    pub alphas: Vec<f64>,
    /// `t(ih) = sum_{F_ih} q_1 + sum_{F_ih-bar} q_2`.
    pub load: Vec<u64>,
    /// `max alpha^-1 t`.
    pub t_max: f64,
    /// `min alpha^-1 t`.
    pub t_min: f64,
    /// Bound `r^5 Delta_1`.
    pub b1_bound: f64,
    /// Whether the load spread is within `r^5 Delta_1`.
    pub b1_ok: bool,
    /// Whether the `(q_3, q_4)` lower bound holds for every part.
    pub b2_ok: bool,
    /// Whether the `(q_5, q_6)` lower bound holds for every part.
    pub b3_ok: bool,
    /// `m_1 <= r^3 Delta_1`, in which case no local search is needed.
    pub shortcut: bool,
    /// Seeding attempts used.
    pub seeding_attempts: usize,
    /// Whether the kept seeding satisfies every concentration event.
    pub seeding_exact: bool,
    /// Largest deviation of the kept seeding relative to its window (0 when exact).
    pub seeding_deviation: f64,
    /// Accepted moves per case.
    pub moves: [usize; 3],
    /// Objective `(t_max - t_min, |I_max| + |I_min|)` before the local search and after each accepted move.
    pub trace: Vec<(f64, usize)>,
    /// Input vectors violating the ratio condition.
    pub a1_violations: usize,
    /// Input vectors violating the caps.
    pub a2_violations: usize,
    /// Whether every `alpha_ih` lies in `[1/(2tr), 2t/r]`.
    pub a3_ok: bool,
}

impl VectorPartition {
    /// Indices of the vectors in part `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.part.len()).filter(|&j| self.part[j] == c).collect()
    }

    /// `t_max - t_min`.
    pub fn spread(&self) -> f64 {
        self.t_max - self.t_min
    }
}

/// Input caps `(Delta_1, Delta_2, Delta_3)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Caps {
    /// Cap on `q_1, q_2`.
    pub d1: f64,
    /// Cap on `q_3, q_4`.
    pub d2: f64,
    /// Cap on `q_5, q_6`.
    pub d3: f64,
}

/// `sum_{F_c} q_{2j-1} + sum_{F_c-bar} q_{2j}` for every part `c`.
pub fn part_stat(family: &[WeightVector], part: &[usize], parts: usize, j: usize) -> Vec<u64> {
    let mut s = vec![0u64; parts];
    for (q, &c) in family.iter().zip(part) {
        s[c] += q[2 * j];
        s[bar(c)] += q[2 * j + 1];
    }
    s
}

/// Whether `q` satisfies the ratio condition for `r`.
pub fn ratio_ok(q: &WeightVector, r: usize) -> bool {
    let lim = 2.0 * (r * r) as f64;
    q[0] == 0 || q[1] == 0 || q[0] as f64 / q[1] as f64 > lim || q[1] as f64 / q[0] as f64 > lim
}

struct Search<'a> {
    family: &'a [WeightVector],
    alphas: &'a [f64],
    part: Vec<usize>,
    movable: Vec<bool>,
    load: Vec<u64>,
    d1: f64,
}

fn objective(load: &[u64], alphas: &[f64]) -> (f64, usize, f64, f64) {
    let norm: Vec<f64> = load.iter().zip(alphas).map(|(&t, &a)| t as f64 / a).collect();
    let tmax = norm.iter().copied().fold(f64::MIN, f64::max);
    let tmin = norm.iter().copied().fold(f64::MAX, f64::min);
    let tol = 1e-9 * tmax.abs().max(1.0);
    let cnt = norm.iter().filter(|&&x| (x - tmax).abs() <= tol).count() + norm.iter().filter(|&&x| (x - tmin).abs() <= tol).count();
    (tmax - tmin, cnt, tmax, tmin)
}

fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    let tol = 1e-9 * b.0.abs().max(1.0);
    a.0 < b.0 - tol || ((a.0 - b.0).abs() <= tol && a.1 < b.1)
}

impl Search<'_> {
    fn norm(&self, c: usize) -> f64 {
        self.load[c] as f64 / self.alphas[c]
    }

    fn place(&mut self, j: usize, c: usize) {
        let q = &self.family[j];
        let old = self.part[j];
        self.load[old] -= q[0];
        self.load[bar(old)] -= q[1];
        self.part[j] = c;
        self.load[c] += q[0];
        self.load[bar(c)] += q[1];
    }

    /// Block `X_c`: movable vectors in `F*_c` with `q_1 > q_2` or in `F*_{c-bar}` with `q_2 > q_1`.
    fn block(&self, c: usize) -> Option<Vec<usize>> {
        let mut cand: Vec<usize> = (0..self.family.len())
            .filter(|&j| {
                let q = &self.family[j];
                self.movable[j] && ((self.part[j] == c && q[0] > q[1]) || (self.part[j] == bar(c) && q[1] > q[0]))
            })
            .collect();
        cand.sort_by(|&a, &b| {
            let ma = self.family[a][0].max(self.family[a][1]);
            let mb = self.family[b][0].max(self.family[b][1]);
            mb.cmp(&ma).then(a.cmp(&b))
        });
        let mut out = Vec::new();
        let mut sum = 0.0;
        for j in cand {
            if sum >= 2.0 * self.d1 {
                break;
            }
            sum += (self.family[j][0] + self.family[j][1]) as f64;
            out.push(j);
        }
        (sum >= 2.0 * self.d1 && !out.is_empty()).then_some(out)
    }

    /// Moves of a case for a given pair `(c_max, c_min)`, as `(vector, new part)` lists.
    fn candidate(&self, case: ExchangeCase, cmax: usize, cmin: usize) -> Option<Vec<(usize, usize)>> {
        let swap = |x: Vec<usize>, s: &Self| x.into_iter().map(|j| (j, bar(s.part[j]))).collect::<Vec<_>>();
        match case {
            ExchangeCase::A => self.block(cmax).map(|x| swap(x, self)),
            ExchangeCase::B => self.block(bar(cmin)).map(|x| swap(x, self)),
            ExchangeCase::C => {
                if cmax == cmin || cmax == bar(cmin) {
                    return None;
                }
                let x = self.block(cmax)?;
                Some(
                    x.into_iter()
                        .map(|j| if self.family[j][0] > self.family[j][1] { (j, cmin) } else { (j, bar(cmin)) })
                        .collect(),
                )
            }
        }
    }

    fn applies(&self, case: ExchangeCase, cmax: usize, cmin: usize, tmax: f64, r2d: f64) -> bool {
        match case {
            ExchangeCase::A => self.norm(bar(cmax)) < tmax - r2d,
            ExchangeCase::B => self.norm(bar(cmin)) > tmax - r2d,
            ExchangeCase::C => self.norm(bar(cmax)) >= tmax - r2d && self.norm(bar(cmin)) <= tmax - r2d,
        }
    }

    /// Applies the first strictly improving exchange; returns its case.
    fn step(&mut self, r: usize) -> Option<ExchangeCase> {
        let (spread, cnt, tmax, tmin) = objective(&self.load, self.alphas);
        let tol = 1e-9 * tmax.abs().max(1.0);
        let parts = self.load.len();
        let imax: Vec<usize> = (0..parts).filter(|&c| (self.norm(c) - tmax).abs() <= tol).collect();
        let imin: Vec<usize> = (0..parts).filter(|&c| (self.norm(c) - tmin).abs() <= tol).collect();
        let r2d = (r * r) as f64 * self.d1;
        for pass in 0..2 {
            for case in [ExchangeCase::A, ExchangeCase::B, ExchangeCase::C] {
                for &cmax in &imax {
                    for &cmin in &imin {
                        // The first pass follows the case conditions; the second tries every case.
                        if pass == 0 && !self.applies(case, cmax, cmin, tmax, r2d) {
                            continue;
                        }
                        let Some(moves) = self.candidate(case, cmax, cmin) else { continue };
                        let undo: Vec<(usize, usize)> = moves.iter().map(|&(j, _)| (j, self.part[j])).collect();
                        for &(j, c) in &moves {
                            self.place(j, c);
                        }
                        let (s2, c2, _, _) = objective(&self.load, self.alphas);
                        if better((s2, c2), (spread, cnt)) {
                            return Some(case);
                        }
                        for &(j, c) in undo.iter().rev() {
                            self.place(j, c);
                        }
                    }
                }
            }
        }
        None
    }
}

/// Runs the exchange local search on the vectors flagged `movable` until the
/// spread of `alpha^-1 t` is at most `r^5 Delta_1` or no exchange strictly
/// decreases the objective `(t_max - t_min, |I_max| + |I_min|)`.
///
/// Returns the number of accepted moves per case.
pub fn rebalance(family: &[WeightVector], alphas: &[f64], d1: f64, part: &mut Vec<usize>, movable: &[bool]) -> [usize; 3] {
    rebalance_traced(family, alphas, d1, part, movable).0
}

/// As [`rebalance`], additionally returning the objective
/// `(t_max - t_min, |I_max| + |I_min|)` before the search and after every accepted move.
pub fn rebalance_traced(
    family: &[WeightVector],
    alphas: &[f64],
    d1: f64,
    part: &mut Vec<usize>,
    movable: &[bool],
) -> ([usize; 3], Vec<(f64, usize)>) {
    let parts = alphas.len();
    let r = parts / 2;
    let bound = (r as f64).powi(5) * d1;
    let load = part_stat(family, part, parts, 0);
    let mut search = Search { family, alphas, part: std::mem::take(part), movable: movable.to_vec(), load, d1 };
    let mut moves = [0usize; 3];
    let mut total = 0;
    let (s0, c0, ..) = objective(&search.load, alphas);
    let mut trace = vec![(s0, c0)];
    loop {
        let (spread, cnt, ..) = objective(&search.load, alphas);
        if spread <= bound || total >= MAX_MOVES {
            break;
        }
        match search.step(r) {
            Some(c) => {
                let (s2, c2, ..) = objective(&search.load, alphas);
                assert!(better((s2, c2), (spread, cnt)), "accepted move did not decrease the objective");
                trace.push((s2, c2));
                moves[c as usize] += 1;
                total += 1;
            }
            None => break,
        }
    }
    *part = search.part;
    (moves, trace)
}

/// Distributes `family` over `2r` parts (`r = alphas.len() / 2`).
///
/// Phase 1 seeds every vector into a uniformly random part with probability
/// `beta` until all concentration events hold; phase 2 places the remaining
/// vectors greedily and runs the exchange local search on them.
pub fn distribute_vectors(
    family: &[WeightVector],
    alphas: &[f64],
    caps: Caps,
    beta: f64,
    t: f64,
    rng: &mut Rng,
    retries: usize,
) -> Result<VectorPartition> {
    let parts = alphas.len();
    if parts == 0 || !parts.is_multiple_of(2) {
        return Err(Error::Precondition(format!("need an even positive number of parts, got {parts}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("must lie in (0, 1), got {beta}")));
    }
    let r = parts / 2;
    let rf = r as f64;
    let a1_violations = family.iter().filter(|q| !ratio_ok(q, r)).count();
    let a2_violations = family
        .iter()
        .filter(|q| {
            q[0] as f64 > caps.d1 || q[1] as f64 > caps.d1 || q[2] as f64 > caps.d2 || q[3] as f64 > caps.d2 || q[4] as f64 > caps.d3 || q[5] as f64 > caps.d3
        })
        .count();
    let a3_ok = alphas.iter().all(|&a| a >= 1.0 / (2.0 * t * rf) - 1e-12 && a <= 2.0 * t / rf + 1e-12);
    let m: Vec<f64> = (0..3).map(|j| family.iter().map(|q| (q[2 * j] + q[2 * j + 1]) as f64).sum()).collect();
    let dj = [caps.d1, caps.d2, caps.d3];

    // Phase 1: seeding with rejection until every event E(j, ih) holds; after
    // the retry budget the attempt with the smallest relative deviation is kept.
    let mut seeded_part = vec![usize::MAX; family.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut attempts = 0;
    let mut seeding_exact = false;
    while attempts < retries.max(1) {
        attempts += 1;
        for s in seeded_part.iter_mut() {
            *s = if rng.chance(beta) { rng.below(parts) } else { usize::MAX };
        }
        let mut worst = 0.0f64;
        for j in 0..3 {
            let mut tj = vec![0u64; parts];
            for (q, &c) in family.iter().zip(&seeded_part) {
                if c != usize::MAX {
                    tj[c] += q[2 * j];
                    tj[bar(c)] += q[2 * j + 1];
                }
            }
            let mean = beta * m[j] / (2.0 * rf);
            let dev = (beta * m[j] / (4.0 * rf)).max(beta * rf * rf * dj[j] / 2.0);
            for &x in &tj {
                let gap = (x as f64 - mean).abs();
                let rel = if dev > 0.0 { gap / dev } else if gap == 0.0 { 0.0 } else { f64::INFINITY };
                worst = worst.max(rel);
            }
        }
        if worst <= 1.0 {
            seeding_exact = true;
            best = None;
            break;
        }
        if best.as_ref().is_none_or(|(w, _)| worst < *w) {
            best = Some((worst, seeded_part.clone()));
        }
    }
    let seeding_deviation = match best {
        Some((w, sp)) => {
            seeded_part = sp;
            w
        }
        None => 0.0,
    };

    // Phase 2: greedy placement of the unseeded vectors, largest first.
    let mut load = vec![0u64; parts];
    let mut part = vec![0usize; family.len()];
    let mut movable = vec![false; family.len()];
    for (j, &c) in seeded_part.iter().enumerate() {
        if c != usize::MAX {
            part[j] = c;
            load[c] += family[j][0];
            load[bar(c)] += family[j][1];
        }
    }
    let mut rest: Vec<usize> = (0..family.len()).filter(|&j| seeded_part[j] == usize::MAX).collect();
    rest.sort_by(|&a, &b| {
        let ma = family[a][0] + family[a][1];
        let mb = family[b][0] + family[b][1];
        mb.cmp(&ma).then(a.cmp(&b))
    });
    for j in rest {
        let q = &family[j];
        let mut best = (f64::MAX, 0usize);
        for c in 0..parts {
            let a = (load[c] + q[0]) as f64 / alphas[c];
            let b = (load[bar(c)] + q[1]) as f64 / alphas[bar(c)];
            let v = a.max(b);
            if v < best.0 - 1e-12 {
                best = (v, c);
            }
        }
        part[j] = best.1;
        movable[j] = true;
        load[best.1] += q[0];
        load[bar(best.1)] += q[1];
    }

    let b1_bound = rf.powi(5) * caps.d1;
    let shortcut = m[0] <= rf.powi(3) * caps.d1;
    let (moves, trace) = if shortcut {
        let (s0, c0, ..) = objective(&part_stat(family, &part, parts, 0), alphas);
        ([0; 3], vec![(s0, c0)])
    } else {
        rebalance_traced(family, alphas, caps.d1, &mut part, &movable)
    };
    let load = part_stat(family, &part, parts, 0);
    let (spread, _, t_max, t_min) = objective(&load, alphas);
    let mut b_ok = [true; 2];
    for (jj, ok) in b_ok.iter_mut().enumerate() {
        let j = jj + 1;
        let s = part_stat(family, &part, parts, j);
        for c in 0..parts {
            if (s[c] as f64) < alphas[c] * beta * beta * m[j] - rf * rf * dj[j] - 1e-9 {
                *ok = false;
            }
        }
    }
    Ok(VectorPartition {
        r,
        seeded: seeded_part.iter().map(|&c| c != usize::MAX).collect(),
        part,
        alphas: alphas.to_vec(),
        load,
        t_max,
        t_min,
        b1_bound,
        b1_ok: spread <= b1_bound + 1e-9,
        b2_ok: b_ok[0],
        b3_ok: b_ok[1],
        shortcut,
        seeding_attempts: attempts,
        seeding_exact,
        seeding_deviation,
        moves,
        trace,
        a1_violations,
        a2_violations,
        a3_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAPS1: Caps = Caps { d1: 1.0, d2: 1.0, d3: 1.0 };

    #[test]
    fn empty_family() {
        let vp = distribute_vectors(&[], &[0.25; 4], CAPS1, 0.2, 4.0, &mut Rng::from_seed(0), 50).unwrap();
        assert!(vp.part.is_empty());
        assert!(vp.b1_ok && vp.b2_ok && vp.b3_ok);
        assert_eq!(vp.spread(), 0.0);
    }

    #[test]
    fn thousand_unit_vectors() {
        let fam = vec![[1, 0, 0, 0, 0, 0]; 1000];
        let vp = distribute_vectors(&fam, &[0.25; 4], CAPS1, 0.2, 4.0, &mut Rng::from_seed(3), 50).unwrap();
        assert_eq!(vp.b1_bound, 32.0);
        assert!(vp.spread() <= 32.0, "spread {}", vp.spread());
        assert_eq!(vp.load.iter().sum::<u64>(), 1000);
        // Exhaustive optimum over all compositions (a, b, c, d) of 1000.
        let mut best = u64::MAX;
        for a in 0..=1000u64 {
            for b in 0..=(1000 - a) {
                for c in 0..=(1000 - a - b) {
                    let d = 1000 - a - b - c;
                    let mx = a.max(b).max(c).max(d);
                    let mn = a.min(b).min(c).min(d);
                    best = best.min(4 * (mx - mn));
                }
            }
        }
        assert!(best <= 16);
    }

    #[test]
    fn single_vector() {
        let fam = vec![[5, 0, 3, 0, 0, 0]];
        let caps = Caps { d1: 5.0, d2: 3.0, d3: 1.0 };
        let vp = distribute_vectors(&fam, &[0.25; 4], caps, 0.2, 4.0, &mut Rng::from_seed(1), 50).unwrap();
        assert_eq!(vp.part.len(), 1);
        assert_eq!(vp.b1_bound, 160.0);
        assert!(vp.spread() <= 4.0 * 5.0);
        assert!(vp.b1_ok);
    }

    #[test]
    fn unbalanced_start_is_repaired_by_exchanges() {
        // Mixed big and small vectors with q_1 >> q_2.
        let mut fam = Vec::new();
        for j in 0..3000u64 {
            fam.push([1 + j % 7, 0, j % 3, 0, 0, j % 2]);
        }
        let caps = Caps { d1: 7.0, d2: 2.0, d3: 1.0 };
        let alphas = [0.1, 0.2, 0.3, 0.4];
        let vp = distribute_vectors(&fam, &alphas, caps, 0.2, 4.0, &mut Rng::from_seed(9), 50).unwrap();
        assert!(vp.b1_ok);
        assert!(vp.b2_ok && vp.b3_ok);
    }

    #[test]
    fn local_search_repairs_a_skewed_start() {
        let fam: Vec<WeightVector> = (0..2000u64).map(|j| if j % 2 == 0 { [1 + j % 5, 0, 0, 0, 0, 0] } else { [0, 1 + j % 3, 0, 0, 0, 0] }).collect();
        let alphas = [0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125];
        let mut part = vec![0usize; fam.len()];
        let moves = rebalance(&fam, &alphas, 5.0, &mut part, &vec![true; fam.len()]);
        assert!(moves.iter().sum::<usize>() > 0);
        let load = part_stat(&fam, &part, 8, 0);
        let norm: Vec<f64> = load.iter().map(|&t| t as f64 / 0.125).collect();
        let spread = norm.iter().cloned().fold(f64::MIN, f64::max) - norm.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 4f64.powi(5) * 5.0, "spread {spread}");
        assert_eq!(load.iter().sum::<u64>(), fam.iter().map(|q| q[0] + q[1]).sum::<u64>());
    }

    #[test]
    fn ratio_condition() {
        assert!(ratio_ok(&[40, 4, 0, 0, 0, 0], 2));
        assert!(!ratio_ok(&[32, 4, 0, 0, 0, 0], 2));
        assert!(ratio_ok(&[0, 4, 0, 0, 0, 0], 2));
    }
}
