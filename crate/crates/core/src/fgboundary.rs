//! Random walks on free groups and their Furstenberg-Poisson boundary.
//!
//! Elements of `F_k` are reduced words; the boundary is realized as infinite
//! reduced words, certified at finite horizon by prefix stability. For the
//! walk with step law `mu` the two product sequences
//!
//! ```text
//! pi_n     = w_1 w_2 ... w_n            (forward products, -> bnd)
//! pi_check = w_1^{-1} w_2^{-1} ... w_n^{-1}   (-> bnd of the reflected walk)
//! ```
//!
//! drive the boundary convergence and the martingale test for the harmonic
//! functions `h_D(g) = nu(g^{-1} D)`. For the uniform step law `h_D` on
//! cylinders has a closed form on the `2k`-regular tree: the probability of
//! ever hitting a fixed neighbor is `1/(2k-1)`, and from any vertex the exit
//! ray passes through each of its `2k` neighbors with probability `1/(2k)`.

use std::collections::VecDeque;

use crate::error::{LabError, Result};
use crate::rng;
use crate::stats::Estimate;

/// A letter of `F_k`: `+g` or `-g` for generator index `g` in `1..=k`.
pub type Letter = i32;

/// A reduced word over the free group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn empty() -> ReducedWord {
        ReducedWord::default()
    }

    /// Validates that no letter is followed by its inverse.
    pub fn new(letters: Vec<Letter>) -> Result<ReducedWord> {
        if letters.iter().any(|&l| l == 0) {
            return Err(LabError::InvalidConfig("letter 0 is not a generator".into()));
        }
        if letters.windows(2).any(|w| w[0] == -w[1]) {
            return Err(LabError::InvalidConfig("word is not reduced".into()));
        }
        Ok(ReducedWord { letters })
    }

    /// Parses words like `"a b A B"` or `"abAB"`: lowercase letters are
    /// generators `a, b, c, ...`, uppercase their inverses.
    pub fn parse(s: &str) -> Result<ReducedWord> {
        let mut letters = Vec::new();
        for ch in s.chars() {
            if ch.is_whitespace() {
                continue;
            }
            let l = if ch.is_ascii_lowercase() {
                (ch as u8 - b'a') as Letter + 1
            } else if ch.is_ascii_uppercase() {
                -((ch as u8 - b'A') as Letter + 1)
            } else {
                return Err(LabError::InvalidConfig(format!("bad letter {ch:?}")));
            };
            letters.push(l);
        }
        ReducedWord::new(letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Appends one letter with free cancellation.
    pub fn push(&mut self, letter: Letter) {
        debug_assert!(letter != 0);
        if self.letters.last() == Some(&-letter) {
            self.letters.pop();
        } else {
            self.letters.push(letter);
        }
    }

    pub fn mul(&self, other: &ReducedWord) -> ReducedWord {
        let mut out = self.clone();
        for &l in &other.letters {
            out.push(l);
        }
        out
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord {
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        }
    }

    pub fn starts_with(&self, prefix: &ReducedWord) -> bool {
        self.letters.len() >= prefix.letters.len()
            && self.letters[..prefix.letters.len()] == prefix.letters[..]
    }

    pub fn common_prefix_len(&self, other: &ReducedWord) -> usize {
        self.letters
            .iter()
            .zip(&other.letters)
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn prefix(&self, len: usize) -> ReducedWord {
        ReducedWord { letters: self.letters[..len.min(self.letters.len())].to_vec() }
    }

    /// Word distance `|self^{-1} other|` in the Cayley graph.
    pub fn distance(&self, other: &ReducedWord) -> usize {
        let c = self.common_prefix_len(other);
        (self.len() - c) + (other.len() - c)
    }

    pub fn to_text(&self) -> String {
        self.letters
            .iter()
            .map(|&l| {
                let idx = (l.unsigned_abs() - 1) as u8;
                if l > 0 {
                    (b'a' + idx) as char
                } else {
                    (b'A' + idx) as char
                }
            })
            .collect()
    }
}

/// A seeded ensemble of `mu`-random walk paths on `F_k`.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub rank: usize,
    /// Step law over `a_1..a_k, a_1^{-1}..a_k^{-1}` (strictly positive).
    pub step_law: Vec<f64>,
    pub count: u64,
    pub horizon: u64,
    pub seed: u64,
}

impl PathEnsemble {
    pub fn new(
        rank: usize,
        step_law: Vec<f64>,
        count: u64,
        horizon: u64,
        seed: u64,
    ) -> Result<PathEnsemble> {
        if rank == 0 {
            return Err(LabError::InvalidConfig("rank must be positive".into()));
        }
        if step_law.len() != 2 * rank {
            return Err(LabError::InvalidConfig(format!(
                "step law needs {} entries",
                2 * rank
            )));
        }
        let sum: f64 = step_law.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(LabError::InvalidConfig(format!("step law sums to {sum}")));
        }
        // spread-out generating surrogate: every generator direction charged
        if step_law.iter().any(|&p| p <= 0.0) {
            return Err(LabError::InvalidConfig(
                "step law must be strictly positive on all generators".into(),
            ));
        }
        Ok(PathEnsemble { rank, step_law, count, horizon, seed })
    }

    pub fn uniform(rank: usize, count: u64, horizon: u64, seed: u64) -> Result<PathEnsemble> {
        let p = 1.0 / (2 * rank) as f64;
        PathEnsemble::new(rank, vec![p; 2 * rank], count, horizon, seed)
    }

    pub fn is_uniform(&self) -> bool {
        let p = 1.0 / (2 * self.rank) as f64;
        self.step_law.iter().all(|&q| (q - p).abs() < 1e-15)
    }

    fn letter_of(&self, index: usize) -> Letter {
        if index < self.rank {
            index as Letter + 1
        } else {
            -((index - self.rank) as Letter + 1)
        }
    }

    /// The `i`-th step letter of path `path`.
    pub fn step(&self, path: u64, i: u64) -> Letter {
        let stream = rng::derive(self.seed, path);
        self.letter_of(rng::pick(&self.step_law, rng::unit(stream, i)))
    }
}

/// The two product sequences of one path: `pi_0..pi_n` and the reflected
/// `pi_check_0..pi_check_n`.
#[derive(Debug, Clone)]
pub struct PathProducts {
    pub forward: Vec<ReducedWord>,
    pub reflected: Vec<ReducedWord>,
}

/// Materializes the product sequences for every path in the ensemble.
pub fn walk_paths(e: &PathEnsemble) -> Vec<PathProducts> {
    (0..e.count).map(|p| walk_one(e, p)).collect()
}

fn walk_one(e: &PathEnsemble, path: u64) -> PathProducts {
    let n = e.horizon as usize;
    let mut forward = Vec::with_capacity(n + 1);
    let mut reflected = Vec::with_capacity(n + 1);
    let mut f = ReducedWord::empty();
    let mut r = ReducedWord::empty();
    forward.push(f.clone());
    reflected.push(r.clone());
    for i in 0..n {
        let w = e.step(path, i as u64);
        f.push(w);
        r.push(-w);
        forward.push(f.clone());
        reflected.push(r.clone());
    }
    PathProducts { forward, reflected }
}

/// A boundary point certified by prefix stability, or not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryPoint {
    Resolved(ReducedWord),
    Unresolved,
}

impl BoundaryPoint {
    pub fn resolved(&self) -> Option<&ReducedWord> {
        match self {
            BoundaryPoint::Resolved(w) => Some(w),
            BoundaryPoint::Unresolved => None,
        }
    }

    /// Membership in the cylinder of `prefix`, when decidable.
    pub fn in_cylinder(&self, prefix: &ReducedWord) -> Option<bool> {
        let w = self.resolved()?;
        if w.starts_with(prefix) {
            Some(true)
        } else if w.len() >= prefix.len() || !prefix.starts_with(w) {
            Some(false)
        } else {
            None // resolved prefix too short to decide
        }
    }
}

/// Longest prefix of the final product unchanged over the last `s` steps.
pub fn boundary_point(products: &[ReducedWord], stability: usize) -> BoundaryPoint {
    assert!(stability >= 1);
    if products.len() < stability + 1 {
        return BoundaryPoint::Unresolved;
    }
    let tail = &products[products.len() - stability - 1..];
    let mut common = tail[0].len();
    for w in &tail[1..] {
        common = common.min(tail[0].common_prefix_len(w));
    }
    if common == 0 {
        BoundaryPoint::Unresolved
    } else {
        BoundaryPoint::Resolved(tail[0].prefix(common))
    }
}

/// Streams one path and returns its boundary point without storing the
/// whole product sequence.
fn stream_boundary(e: &PathEnsemble, path: u64, reflected: bool, stability: usize) -> BoundaryPoint {
    let mut window: VecDeque<ReducedWord> = VecDeque::with_capacity(stability + 1);
    let mut prod = ReducedWord::empty();
    window.push_back(prod.clone());
    for i in 0..e.horizon {
        let w = e.step(path, i);
        prod.push(if reflected { -w } else { w });
        if window.len() == stability + 1 {
            window.pop_front();
        }
        window.push_back(prod.clone());
    }
    let seq: Vec<ReducedWord> = window.into_iter().collect();
    if seq.len() < stability + 1 {
        return BoundaryPoint::Unresolved;
    }
    boundary_point_tail(&seq)
}

fn boundary_point_tail(tail: &[ReducedWord]) -> BoundaryPoint {
    let mut common = tail[0].len();
    for w in &tail[1..] {
        common = common.min(tail[0].common_prefix_len(w));
    }
    if common == 0 {
        BoundaryPoint::Unresolved
    } else {
        BoundaryPoint::Resolved(tail[0].prefix(common))
    }
}

/// Harmonic-measure estimates for a list of cylinders.
#[derive(Debug, Clone)]
pub struct HarmonicMeasureReport {
    pub resolved: u64,
    pub total: u64,
    pub estimates: Vec<(ReducedWord, Estimate)>,
}

/// Empirical `nu(cyl)`: the fraction of resolved boundary points extending
/// each prefix.
pub fn harmonic_measure(
    e: &PathEnsemble,
    cylinders: &[ReducedWord],
    stability: usize,
) -> HarmonicMeasureReport {
    let mut hits = vec![0u64; cylinders.len()];
    let mut resolved = 0u64;
    for p in 0..e.count {
        let b = stream_boundary(e, p, false, stability);
        if let BoundaryPoint::Resolved(w) = &b {
            resolved += 1;
            for (i, cyl) in cylinders.iter().enumerate() {
                if w.starts_with(cyl) {
                    hits[i] += 1;
                }
            }
        }
    }
    let estimates = cylinders
        .iter()
        .zip(&hits)
        .map(|(cyl, &h)| {
            let n = resolved.max(1) as f64;
            let p = h as f64 / n;
            let se = if cyl.is_empty() { 0.0 } else { (p * (1.0 - p) / n).sqrt() };
            (cyl.clone(), Estimate::new(p, se))
        })
        .collect();
    HarmonicMeasureReport { resolved, total: e.count, estimates }
}

/// Exact harmonic measure of `cyl(w)` seen from `g`, for the uniform step
/// law: `h_D(g) = nu(g^{-1} D)` via tree first-passage probabilities.
pub fn tree_harmonic_value(rank: usize, g: &ReducedWord, w: &ReducedWord) -> f64 {
    if w.is_empty() {
        return 1.0;
    }
    let two_k = (2 * rank) as f64;
    let f = 1.0 / (two_k - 1.0); // P(ever hit a fixed neighbor)
    let dist = g.distance(w) as f64;
    if g.starts_with(w) {
        // inside the subtree: escape only through w's rootward edge
        1.0 - f.powf(dist) / two_k
    } else {
        // outside: must reach w, then stay in its 2k-1 inward directions
        f.powf(dist) * (two_k - 1.0) / two_k
    }
}

/// A measurable boundary target for the martingale test.
#[derive(Debug, Clone)]
pub enum BoundarySet {
    Full,
    Cylinder(ReducedWord),
    Complement(ReducedWord),
}

impl BoundarySet {
    fn harmonic_value(&self, e: &PathEnsemble, g: &ReducedWord, inner: &HdFallback) -> f64 {
        match self {
            BoundarySet::Full => 1.0,
            BoundarySet::Cylinder(w) => {
                if e.is_uniform() {
                    tree_harmonic_value(e.rank, g, w)
                } else {
                    inner.estimate(e, g, w)
                }
            }
            BoundarySet::Complement(w) => {
                1.0 - BoundarySet::Cylinder(w.clone()).harmonic_value(e, g, inner)
            }
        }
    }

    fn indicator(&self, b: &BoundaryPoint) -> Option<f64> {
        match self {
            BoundarySet::Full => Some(1.0),
            BoundarySet::Cylinder(w) => b.in_cylinder(w).map(|x| x as u8 as f64),
            BoundarySet::Complement(w) => b.in_cylinder(w).map(|x| 1.0 - (x as u8 as f64)),
        }
    }
}

/// Nested Monte Carlo fallback for `h_D` under non-uniform step laws.
#[derive(Debug, Clone)]
pub struct HdFallback {
    pub inner_count: u64,
    pub inner_horizon: u64,
    pub stability: usize,
    pub seed: u64,
}

impl Default for HdFallback {
    fn default() -> HdFallback {
        HdFallback { inner_count: 200, inner_horizon: 120, stability: 30, seed: 0x4844 }
    }
}

impl HdFallback {
    fn estimate(&self, e: &PathEnsemble, g: &ReducedWord, w: &ReducedWord) -> f64 {
        let inner = PathEnsemble {
            rank: e.rank,
            step_law: e.step_law.clone(),
            count: self.inner_count,
            horizon: self.inner_horizon,
            seed: rng::derive(self.seed, rng::word(g.len() as u64, w.len() as u64)),
        };
        let mut hits = 0u64;
        let mut resolved = 0u64;
        for p in 0..inner.count {
            if let BoundaryPoint::Resolved(b) = stream_boundary(&inner, p, false, self.stability)
            {
                resolved += 1;
                if g.mul(&b).starts_with(w) {
                    hits += 1;
                }
            }
        }
        hits as f64 / resolved.max(1) as f64
    }
}

/// One row of a martingale convergence curve.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MartingaleRow {
    pub n: u64,
    /// Fraction of paths with `|h_D(pi_check_n) - 1_D(bnd_check)| < eps`.
    pub fraction: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct MartingaleCurve {
    pub rows: Vec<MartingaleRow>,
    pub decided: u64,
    pub total: u64,
}

impl MartingaleCurve {
    /// Non-decreasing up to `slack`.
    pub fn is_monotone_within(&self, slack: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].fraction >= w[0].fraction - slack)
    }
}

/// Convergence of the harmonic function along the reflected products toward
/// the boundary indicator (the martingale limit).
pub fn martingale_check(
    e: &PathEnsemble,
    target: &BoundarySet,
    eps: f64,
    grid: &[u64],
    stability: usize,
    fallback: &HdFallback,
) -> Result<MartingaleCurve> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(LabError::InvalidConfig("eps must lie in (0, 1/2)".into()));
    }
    if grid.is_empty() || grid.iter().any(|&n| n > e.horizon) {
        return Err(LabError::InvalidConfig("grid must fit inside the horizon".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidConfig("grid must be strictly increasing".into()));
    }
    let mut within = vec![0u64; grid.len()];
    let mut decided = 0u64;
    for p in 0..e.count {
        // reflected products at the grid points + final boundary point
        let mut prod = ReducedWord::empty();
        let mut window: VecDeque<ReducedWord> = VecDeque::with_capacity(stability + 1);
        window.push_back(prod.clone());
        let mut at_grid: Vec<ReducedWord> = Vec::with_capacity(grid.len());
        let mut gi = 0usize;
        if grid[0] == 0 {
            at_grid.push(prod.clone());
            gi += 1;
        }
        for i in 0..e.horizon {
            let w = e.step(p, i);
            prod.push(-w);
            if window.len() == stability + 1 {
                window.pop_front();
            }
            window.push_back(prod.clone());
            if gi < grid.len() && grid[gi] == i + 1 {
                at_grid.push(prod.clone());
                gi += 1;
            }
        }
        let seq: Vec<ReducedWord> = window.into_iter().collect();
        let bnd = if seq.len() >= stability + 1 {
            boundary_point_tail(&seq)
        } else {
            BoundaryPoint::Unresolved
        };
        let Some(ind) = target.indicator(&bnd) else {
            continue;
        };
        decided += 1;
        for (i, g) in at_grid.iter().enumerate() {
            let h = target.harmonic_value(e, g, fallback);
            if (h - ind).abs() < eps {
                within[i] += 1;
            }
        }
    }
    let n = decided.max(1) as f64;
    let rows = grid
        .iter()
        .zip(&within)
        .map(|(&g, &w)| {
            let frac = w as f64 / n;
            MartingaleRow {
                n: g,
                fraction: frac,
                stderr: (frac * (1.0 - frac) / n).sqrt(),
            }
        })
        .collect();
    Ok(MartingaleCurve { rows, decided, total: e.count })
}

/// All reduced words of length `1..=max_len` (cylinder enumeration).
pub fn enumerate_cylinders(rank: usize, max_len: usize) -> Vec<ReducedWord> {
    let mut out: Vec<ReducedWord> = Vec::new();
    let mut frontier = vec![ReducedWord::empty()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for g in 1..=rank as Letter {
                for l in [g, -g] {
                    if w.letters().last() != Some(&-l) {
                        let mut ext = w.clone();
                        ext.push(l);
                        next.push(ext);
                    }
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// One cell of the skew-invariance comparison.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SkewCell {
    pub omega_prefix: String,
    pub boundary_prefix: String,
    pub before: f64,
    pub after: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct SkewInvarianceReport {
    pub cells: Vec<SkewCell>,
    pub max_sigma: f64,
    pub samples: u64,
}

/// Tests invariance of `mu^N x nu` under the boundary skew product
/// `S: (w_1, w_2, ...; x) -> (w_2, w_3, ...; w_1.x)` by comparing the joint
/// law of (first step letters, boundary cylinder) before and after `S^m`.
pub fn boundary_skew_invariance(
    e: &PathEnsemble,
    cylinders: &[ReducedWord],
    omega_depth: usize,
    n_shift: u64,
    stability: usize,
) -> Result<SkewInvarianceReport> {
    if omega_depth == 0 {
        return Err(LabError::InvalidConfig("omega depth must be >= 1".into()));
    }
    let omega_cells = enumerate_letter_sequences(e.rank, omega_depth);
    let mut before = vec![vec![0u64; cylinders.len()]; omega_cells.len()];
    let mut after = vec![vec![0u64; cylinders.len()]; omega_cells.len()];
    let mut used = 0u64;

    let x_seed = rng::derive(e.seed, 0x424e_4458);
    for p in 0..e.count {
        // omega letters needed: first n_shift + omega_depth
        let need = n_shift + omega_depth as u64;
        let steps: Vec<Letter> = (0..need).map(|i| e.step(p, i)).collect();
        // independent boundary point x ~ nu
        let x_walk = PathEnsemble {
            rank: e.rank,
            step_law: e.step_law.clone(),
            count: 1,
            horizon: e.horizon,
            seed: rng::derive(x_seed, p),
        };
        let BoundaryPoint::Resolved(x) = stream_boundary(&x_walk, 0, false, stability) else {
            continue;
        };
        if x.len() < cylinders.iter().map(|c| c.len()).max().unwrap_or(0) + n_shift as usize {
            continue; // not enough resolved prefix to decide after the shift
        }
        used += 1;
        // before: (w_1..w_depth, x)
        let oi_before = letter_sequence_index(e.rank, &steps[..omega_depth]);
        for (ci, cyl) in cylinders.iter().enumerate() {
            if x.starts_with(cyl) {
                before[oi_before][ci] += 1;
            }
        }
        // after S^m: omega shifted by m, boundary x' = w_m ... w_1 . x
        let oi_after = letter_sequence_index(
            e.rank,
            &steps[n_shift as usize..n_shift as usize + omega_depth],
        );
        let mut x_after = x.clone();
        if n_shift > 0 {
            let mut g = ReducedWord::empty();
            for &s in steps[..n_shift as usize].iter() {
                // w_m ... w_2 w_1 built right-to-left
                let mut gg = ReducedWord::empty();
                gg.push(s);
                g = gg.mul(&g);
            }
            x_after = g.mul(&x);
        }
        for (ci, cyl) in cylinders.iter().enumerate() {
            if x_after.starts_with(cyl) {
                after[oi_after][ci] += 1;
            }
        }
    }

    let n = used.max(1) as f64;
    let mut cells = Vec::new();
    let mut max_sigma: f64 = 0.0;
    for (oi, om) in omega_cells.iter().enumerate() {
        for (ci, cyl) in cylinders.iter().enumerate() {
            let pb = before[oi][ci] as f64 / n;
            let pa = after[oi][ci] as f64 / n;
            if pb == 0.0 && pa == 0.0 {
                continue;
            }
            let se = ((pb * (1.0 - pb) + pa * (1.0 - pa)) / n).sqrt();
            let sigma = if (pa - pb).abs() == 0.0 {
                0.0
            } else if se == 0.0 {
                f64::INFINITY
            } else {
                (pa - pb).abs() / se
            };
            max_sigma = max_sigma.max(sigma);
            cells.push(SkewCell {
                omega_prefix: om.clone(),
                boundary_prefix: cyl.to_text(),
                before: pb,
                after: pa,
                sigma,
            });
        }
    }
    Ok(SkewInvarianceReport { cells, max_sigma, samples: used })
}

/// Raw letter sequences of exactly `depth` (no reduction: these are product
/// coordinates, not group elements).
fn enumerate_letter_sequences(rank: usize, depth: usize) -> Vec<String> {
    let letters: Vec<Letter> = (1..=rank as Letter).flat_map(|g| [g, -g]).collect();
    let mut seqs = vec![String::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &seqs {
            for &l in &letters {
                let mut t = s.clone();
                t.push(letter_char(l));
                next.push(t);
            }
        }
        seqs = next;
    }
    seqs
}

fn letter_char(l: Letter) -> char {
    let idx = (l.unsigned_abs() - 1) as u8;
    if l > 0 {
        (b'a' + idx) as char
    } else {
        (b'A' + idx) as char
    }
}

fn letter_sequence_index(rank: usize, steps: &[Letter]) -> usize {
    let mut idx = 0usize;
    for &s in steps {
        let off = if s > 0 {
            2 * (s as usize - 1)
        } else {
            2 * ((-s) as usize - 1) + 1
        };
        idx = idx * (2 * rank) + off;
    }
    idx
}
