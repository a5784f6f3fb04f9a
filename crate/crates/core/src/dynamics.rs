//! Samplable invertible ergodic p.m.p. symbolic systems.
//!
//! A point of the system is a two-sided symbol sequence, materialized lazily
//! as an [`OrbitWindow`]. Sampling is anchored at absolute coordinate 0:
//!
//! - Bernoulli laws draw each coordinate independently from its own counter.
//! - Markov laws draw `x_0` from the stationary vector, extend forward with
//!   the transition kernel, and extend backward with the time-reversed kernel
//!   `P̌(a,b) = π_b P(b,a) / π_a`, so any finite window has the stationary
//!   two-sided law and the shift is exactly invertible.
//!
//! The shift acts by re-indexing only, so `(T^n x)_i = x_{i+n}` holds
//! bit-exactly, and extending a window never changes symbols that were
//! already materialized.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::rng;
use crate::stats::{Estimate, Running};

pub type Symbol = u8;

/// Default cap on first-return searches. Truncating silently would bias Kac
/// statistics, so overruns are reported as errors instead.
pub const DEFAULT_RETURN_CAP: u64 = 1_000_000;

const PROB_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// The symbol law of a [`SymbolicSystem`].
#[derive(Debug, Clone)]
pub enum Law {
    /// Independent coordinates with the given per-symbol probabilities.
    Bernoulli { probs: Vec<f64> },
    /// Stationary Markov coordinates.
    Markov {
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
        reversed: Vec<Vec<f64>>,
    },
}

/// An invertible ergodic p.m.p. shift over a finite alphabet, keyed by a seed.
#[derive(Debug, Clone)]
pub struct SymbolicSystem {
    alphabet: Arc<Vec<String>>,
    law: Arc<Law>,
    seed: u64,
}

impl SymbolicSystem {
    pub fn bernoulli(alphabet: Vec<String>, probs: Vec<f64>, seed: u64) -> Result<SymbolicSystem> {
        validate_alphabet(&alphabet)?;
        if probs.len() != alphabet.len() {
            return Err(LabError::InvalidConfig(format!(
                "{} probabilities for {} symbols",
                probs.len(),
                alphabet.len()
            )));
        }
        validate_distribution(&probs)?;
        Ok(SymbolicSystem {
            alphabet: Arc::new(alphabet),
            law: Arc::new(Law::Bernoulli { probs }),
            seed,
        })
    }

    /// Uniform Bernoulli shorthand.
    pub fn uniform(alphabet: Vec<String>, seed: u64) -> Result<SymbolicSystem> {
        let p = 1.0 / alphabet.len() as f64;
        let probs = vec![p; alphabet.len()];
        SymbolicSystem::bernoulli(alphabet, probs, seed)
    }

    pub fn markov(
        alphabet: Vec<String>,
        transition: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<SymbolicSystem> {
        validate_alphabet(&alphabet)?;
        let k = alphabet.len();
        if transition.len() != k || transition.iter().any(|row| row.len() != k) {
            return Err(LabError::InvalidConfig(format!(
                "transition matrix must be {k}x{k}"
            )));
        }
        for row in &transition {
            validate_distribution(row)?;
        }
        let stationary = stationary_vector(&transition);
        // pi P = pi must hold to tolerance
        for j in 0..k {
            let pj: f64 = (0..k).map(|i| stationary[i] * transition[i][j]).sum();
            if (pj - stationary[j]).abs() > STATIONARY_TOL {
                return Err(LabError::InvalidConfig(format!(
                    "stationary vector residual {:.3e} exceeds {STATIONARY_TOL:.0e}",
                    (pj - stationary[j]).abs()
                )));
            }
        }
        // time reversal: rev[a][b] = pi_b P[b][a] / pi_a
        let mut reversed = vec![vec![0.0; k]; k];
        for a in 0..k {
            if stationary[a] > 0.0 {
                for b in 0..k {
                    reversed[a][b] = stationary[b] * transition[b][a] / stationary[a];
                }
            } else {
                reversed[a][a] = 1.0; // unreachable state, arbitrary self-loop
            }
        }
        Ok(SymbolicSystem {
            alphabet: Arc::new(alphabet),
            law: Arc::new(Law::Markov { transition, stationary, reversed }),
            seed,
        })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn symbol_index(&self, name: &str) -> Result<Symbol> {
        self.alphabet
            .iter()
            .position(|s| s == name)
            .map(|i| i as Symbol)
            .ok_or_else(|| LabError::InvalidConfig(format!("unknown symbol {name:?}")))
    }

    /// Marginal law of a single coordinate.
    pub fn marginal(&self) -> Vec<f64> {
        match &*self.law {
            Law::Bernoulli { probs } => probs.clone(),
            Law::Markov { stationary, .. } => stationary.clone(),
        }
    }

    /// Exact probability of observing `symbols` at consecutive coordinates.
    pub fn cylinder_probability(&self, symbols: &[Symbol]) -> f64 {
        if symbols.is_empty() {
            return 1.0;
        }
        match &*self.law {
            Law::Bernoulli { probs } => symbols.iter().map(|&s| probs[s as usize]).product(),
            Law::Markov { transition, stationary, .. } => {
                let mut p = stationary[symbols[0] as usize];
                for w in symbols.windows(2) {
                    p *= transition[w[0] as usize][w[1] as usize];
                }
                p
            }
        }
    }
}

fn validate_alphabet(alphabet: &[String]) -> Result<()> {
    if alphabet.is_empty() || alphabet.len() > Symbol::MAX as usize + 1 {
        return Err(LabError::InvalidConfig(format!(
            "alphabet size {} out of range",
            alphabet.len()
        )));
    }
    for (i, a) in alphabet.iter().enumerate() {
        if alphabet[..i].contains(a) {
            return Err(LabError::InvalidConfig(format!("duplicate symbol {a:?}")));
        }
    }
    Ok(())
}

fn validate_distribution(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(LabError::InvalidConfig("negative or non-finite probability".into()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(LabError::InvalidConfig(format!(
            "probabilities sum to {sum}, expected 1 within {PROB_SUM_TOL:.0e}"
        )));
    }
    Ok(())
}

/// Stationary vector by power iteration from the uniform vector.
fn stationary_vector(transition: &[Vec<f64>]) -> Vec<f64> {
    let k = transition.len();
    let mut pi = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..200_000 {
        for x in next.iter_mut() {
            *x = 0.0;
        }
        for i in 0..k {
            let pii = pi[i];
            for j in 0..k {
                next[j] += pii * transition[i][j];
            }
        }
        let norm: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= norm;
        }
        let delta: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if delta < 1e-15 {
            break;
        }
    }
    pi
}

/// A lazily materialized two-sided window of one orbit.
///
/// Local coordinate `i` refers to absolute coordinate `origin + i`; the shift
/// moves `origin`. `past_stream` takes over below `past_boundary` for windows
/// whose past has been resampled with the future held fixed.
#[derive(Debug, Clone)]
pub struct OrbitWindow {
    system: SymbolicSystem,
    fwd_stream: u64,
    past_stream: u64,
    past_boundary: i64,
    origin: i64,
    abs_lo: i64,
    symbols: Vec<Symbol>,
}

impl OrbitWindow {
    fn stream_for(&self, abs_index: i64) -> u64 {
        if abs_index < self.past_boundary {
            self.past_stream
        } else {
            self.fwd_stream
        }
    }

    fn abs_hi(&self) -> i64 {
        self.abs_lo + self.symbols.len() as i64 - 1
    }

    /// Smallest covered local coordinate.
    pub fn lo(&self) -> i64 {
        self.abs_lo - self.origin
    }

    /// Largest covered local coordinate.
    pub fn hi(&self) -> i64 {
        self.abs_hi() - self.origin
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        self.lo() <= lo && hi <= self.hi()
    }

    pub fn system(&self) -> &SymbolicSystem {
        &self.system
    }

    /// Symbol at local coordinate `i`, if materialized.
    pub fn get(&self, i: i64) -> Option<Symbol> {
        let abs = self.origin + i;
        if abs < self.abs_lo || abs > self.abs_hi() {
            return None;
        }
        Some(self.symbols[(abs - self.abs_lo) as usize])
    }

    /// Symbol at local coordinate `i`, or a window error.
    pub fn symbol(&self, i: i64) -> Result<Symbol> {
        self.get(i).ok_or(LabError::WindowTooSmall {
            needed_lo: i,
            needed_hi: i,
            have_lo: self.lo(),
            have_hi: self.hi(),
        })
    }

    /// Borrow of the symbols at local coordinates `[lo, hi]`.
    pub fn slice(&self, lo: i64, hi: i64) -> Result<&[Symbol]> {
        if !self.covers(lo, hi) {
            return Err(LabError::WindowTooSmall {
                needed_lo: lo,
                needed_hi: hi,
                have_lo: self.lo(),
                have_hi: self.hi(),
            });
        }
        let a = (self.origin + lo - self.abs_lo) as usize;
        let b = (self.origin + hi - self.abs_lo) as usize;
        Ok(&self.symbols[a..=b])
    }

    /// Shift viewpoint by `n`: the result represents `T^n x`.
    pub fn shift(&self, n: i64) -> OrbitWindow {
        let mut w = self.clone();
        w.origin += n;
        w
    }

    /// Materialize local coordinates `[lo, hi]` (no-op where already covered).
    pub fn extend(&mut self, lo: i64, hi: i64) {
        let want_lo = (self.origin + lo).min(self.abs_lo);
        let want_hi = (self.origin + hi).max(self.abs_hi());
        while self.abs_hi() < want_hi {
            let next = self.abs_hi() + 1;
            let sym = self.draw_forward(next);
            self.symbols.push(sym);
        }
        if want_lo < self.abs_lo {
            let mut head = Vec::with_capacity((self.abs_lo - want_lo) as usize);
            let mut cur = self.abs_lo;
            while cur > want_lo {
                cur -= 1;
                let sym = self.draw_backward(cur, *head.last().unwrap_or(&self.symbols[0]));
                head.push(sym);
            }
            head.reverse();
            head.extend_from_slice(&self.symbols);
            self.symbols = head;
            self.abs_lo = want_lo;
        }
    }

    fn draw_forward(&self, abs: i64) -> Symbol {
        let u = rng::unit_at(self.stream_for(abs), abs);
        match self.system.law() {
            Law::Bernoulli { probs } => rng::pick(probs, u) as Symbol,
            Law::Markov { transition, .. } => {
                let prev = self.symbols[(abs - 1 - self.abs_lo) as usize];
                rng::pick(&transition[prev as usize], u) as Symbol
            }
        }
    }

    /// `next` is the already-materialized symbol at `abs + 1`.
    fn draw_backward(&self, abs: i64, next: Symbol) -> Symbol {
        let u = rng::unit_at(self.stream_for(abs), abs);
        match self.system.law() {
            Law::Bernoulli { probs } => rng::pick(probs, u) as Symbol,
            Law::Markov { reversed, .. } => rng::pick(&reversed[next as usize], u) as Symbol,
        }
    }

    /// A copy whose local coordinates `i < 0` are redrawn from `fresh_seed`
    /// conditionally on the fixed coordinates `i >= 0`, materialized down to
    /// local `-depth`.
    ///
    /// For Bernoulli laws the redrawn past is independent of everything held
    /// fixed; for Markov laws it follows the reversed kernel from the symbol
    /// at local 0, which is exactly the conditional law of the past given the
    /// present and future.
    pub fn resample_past(&self, fresh_seed: u64, depth: i64) -> OrbitWindow {
        let keep_from = (self.origin - self.abs_lo) as usize;
        let mut w = OrbitWindow {
            system: self.system.clone(),
            fwd_stream: self.fwd_stream,
            past_stream: rng::derive(self.fwd_stream, fresh_seed ^ 0x5048_5354_5043_4f50),
            past_boundary: self.origin,
            origin: self.origin,
            abs_lo: self.origin,
            symbols: self.symbols[keep_from..].to_vec(),
        };
        w.extend(-depth, 0);
        w
    }
}

impl OrbitWindow {
    /// A window with explicitly prescribed symbols at local coordinates
    /// `lo, lo+1, ...`; lazy extension beyond them follows the system law.
    pub fn from_symbols(
        system: &SymbolicSystem,
        seed: u64,
        lo: i64,
        symbols: Vec<Symbol>,
    ) -> OrbitWindow {
        assert!(!symbols.is_empty());
        let stream = rng::derive(system.seed(), seed ^ 0x4558_504c_4943_4954);
        OrbitWindow {
            system: system.clone(),
            fwd_stream: stream,
            past_stream: stream,
            past_boundary: lo,
            origin: 0,
            abs_lo: lo,
            symbols,
        }
    }
}

/// Draws the window of local coordinates `[i_min, i_max]` of a fresh orbit.
///
/// The sampled symbols are a pure function of `(system, seed, coordinate)`;
/// negative coordinates are allowed.
pub fn sample_orbit(system: &SymbolicSystem, seed: u64, i_min: i64, i_max: i64) -> OrbitWindow {
    assert!(i_min <= i_max, "i_min must not exceed i_max");
    let stream = rng::derive(system.seed(), seed);
    let anchor_sym = match system.law() {
        Law::Bernoulli { probs } => rng::pick(probs, rng::unit_at(stream, 0)) as Symbol,
        Law::Markov { stationary, .. } => {
            rng::pick(stationary, rng::unit_at(stream, 0)) as Symbol
        }
    };
    let mut w = OrbitWindow {
        system: system.clone(),
        fwd_stream: stream,
        past_stream: stream,
        past_boundary: 0,
        origin: 0,
        abs_lo: 0,
        symbols: vec![anchor_sym],
    };
    w.extend(i_min.min(0), i_max.max(0));
    w
}

/// A predicate that reads a fixed finite coordinate window.
#[derive(Clone)]
pub struct CylinderIndicator {
    lo: i64,
    hi: i64,
    pred: Arc<dyn Fn(&[Symbol]) -> bool + Send + Sync>,
}

impl std::fmt::Debug for CylinderIndicator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CylinderIndicator")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish()
    }
}

impl CylinderIndicator {
    pub fn new(
        lo: i64,
        hi: i64,
        pred: impl Fn(&[Symbol]) -> bool + Send + Sync + 'static,
    ) -> CylinderIndicator {
        assert!(lo <= hi);
        CylinderIndicator { lo, hi, pred: Arc::new(pred) }
    }

    /// The full set (always true), window `[0, 0]`.
    pub fn full() -> CylinderIndicator {
        CylinderIndicator::new(0, 0, |_| true)
    }

    /// Conjunction of equality constraints `x_{offset} = symbol`.
    pub fn equals(constraints: Vec<(i64, Symbol)>) -> CylinderIndicator {
        assert!(!constraints.is_empty());
        let lo = constraints.iter().map(|c| c.0).min().unwrap();
        let hi = constraints.iter().map(|c| c.0).max().unwrap();
        CylinderIndicator::new(lo, hi, move |syms| {
            constraints.iter().all(|&(off, sym)| syms[(off - lo) as usize] == sym)
        })
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    /// Evaluate at `T^t x`; extends the window as needed.
    pub fn eval(&self, x: &mut OrbitWindow, t: i64) -> bool {
        x.extend(t + self.lo, t + self.hi);
        let syms = x.slice(t + self.lo, t + self.hi).expect("just extended");
        (self.pred)(syms)
    }
}

/// A real observable reading a fixed finite coordinate window.
#[derive(Clone)]
pub struct Observable {
    lo: i64,
    hi: i64,
    func: Arc<dyn Fn(&[Symbol]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish()
    }
}

impl Observable {
    pub fn new(
        lo: i64,
        hi: i64,
        func: impl Fn(&[Symbol]) -> f64 + Send + Sync + 'static,
    ) -> Observable {
        assert!(lo <= hi);
        Observable { lo, hi, func: Arc::new(func) }
    }

    pub fn constant(c: f64) -> Observable {
        Observable::new(0, 0, move |_| c)
    }

    /// Indicator of `x_offset = symbol`.
    pub fn indicator(offset: i64, symbol: Symbol) -> Observable {
        Observable::new(offset, offset, move |syms| {
            if syms[0] == symbol {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, x: &mut OrbitWindow, t: i64) -> f64 {
        x.extend(t + self.lo, t + self.hi);
        let syms = x.slice(t + self.lo, t + self.hi).expect("just extended");
        (self.func)(syms)
    }

    /// Evaluate on a raw symbol slice whose first entry is coordinate `lo`.
    pub fn eval_slice(&self, syms: &[Symbol]) -> f64 {
        (self.func)(syms)
    }
}

/// First return time `n(x) = inf{n >= 1 | T^n x in X*}`.
///
/// The caller asserts `x in X*`; the search gives up at `cap` with an error
/// rather than truncating.
pub fn first_return(
    indicator: &CylinderIndicator,
    x: &mut OrbitWindow,
    cap: u64,
) -> Result<u64> {
    debug_assert!(indicator.eval(x, 0), "first_return requires x in the target set");
    first_return_from(indicator, x, 0, cap)
}

/// First return of `T^t x` to the set, without re-shifting the window.
pub fn first_return_from(
    indicator: &CylinderIndicator,
    x: &mut OrbitWindow,
    t: i64,
    cap: u64,
) -> Result<u64> {
    for n in 1..=cap {
        if indicator.eval(x, t + n as i64) {
            return Ok(n);
        }
    }
    Err(LabError::ReturnCapExceeded { cap })
}

/// A Kakutani induced system together with its measured mass statistics.
#[derive(Debug, Clone)]
pub struct InducedSystem {
    pub base: SymbolicSystem,
    pub indicator: CylinderIndicator,
    pub return_cap: u64,
    /// Empirical frequency of the indicator over the inducing ensemble.
    pub measured_mass: Estimate,
    /// Mean first-return time over the members that landed in the set.
    pub mean_return: Estimate,
    /// |mass * mean_return - 1| in combined-sigma units (Kac's identity).
    pub kac_sigma: f64,
    seed: u64,
}

impl InducedSystem {
    /// Rejection-samples a start point distributed as the normalized
    /// restriction `m* = m|_{X*} / m(X*)`.
    pub fn sample_start(&self, seed: u64) -> Result<OrbitWindow> {
        let (lo, hi) = self.indicator.window();
        for attempt in 0..REJECTION_ATTEMPTS {
            let s = rng::word(rng::derive(self.seed, seed), attempt);
            let mut w = sample_orbit(&self.base, s, lo, hi);
            if self.indicator.eval(&mut w, 0) {
                return Ok(w);
            }
        }
        Err(LabError::EmptyIndicator)
    }
}

const REJECTION_ATTEMPTS: u64 = 100_000;

/// Builds an induced system, measuring `m(X*)` and checking Kac's identity
/// `E[n] = 1/m(X*)` on the same ensemble.
pub fn induce(
    system: &SymbolicSystem,
    indicator: &CylinderIndicator,
    ensemble: u64,
    seed: u64,
    return_cap: u64,
) -> Result<InducedSystem> {
    let results: Vec<Result<(bool, Option<u64>)>> =
        par_members(ensemble, seed, |_, member_seed| {
            let (lo, hi) = indicator.window();
            let mut w = sample_orbit(system, member_seed, lo, hi);
            if !indicator.eval(&mut w, 0) {
                return Ok((false, None));
            }
            let n = first_return(indicator, &mut w, return_cap)?;
            Ok((true, Some(n)))
        });

    let mut mass = Running::default();
    let mut ret = Running::default();
    for r in results {
        let (hit, n) = r?;
        mass.push(if hit { 1.0 } else { 0.0 });
        if let Some(n) = n {
            ret.push(n as f64);
        }
    }
    if ret.count == 0 {
        return Err(LabError::EmptyIndicator);
    }
    let mass_e = Estimate::of(&mass);
    let ret_e = Estimate::of(&ret);
    // sigma of the product via first-order error propagation
    let prod = mass_e.value * ret_e.value;
    let prod_se = ((ret_e.value * mass_e.stderr).powi(2)
        + (mass_e.value * ret_e.stderr).powi(2))
    .sqrt();
    let kac_sigma = if prod_se == 0.0 {
        if (prod - 1.0).abs() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (prod - 1.0).abs() / prod_se
    };
    Ok(InducedSystem {
        base: system.clone(),
        indicator: indicator.clone(),
        return_cap,
        measured_mass: mass_e,
        mean_return: ret_e,
        kac_sigma,
        seed: rng::derive(seed, 0x4b41_4b55_5441_4e49),
    })
}

/// Ensemble statistics of Birkhoff averages `(1/n) sum_{k<n} h(T^k x)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BirkhoffReport {
    pub mean: Estimate,
    /// Fraction of orbits whose partial sums ever dip below zero.
    pub dip_fraction: f64,
    /// Fraction of orbits whose full partial sum ends positive.
    pub final_positive_fraction: f64,
    /// Ensemble mean of the per-orbit minimum partial sum.
    pub min_partial_mean: f64,
}

pub fn birkhoff(
    system: &SymbolicSystem,
    h: &Observable,
    n: u64,
    ensemble: u64,
    seed: u64,
) -> BirkhoffReport {
    assert!(n >= 1);
    let per_member: Vec<(f64, f64, bool)> = par_members(ensemble, seed, |_, member_seed| {
        let (lo, hi) = h.window();
        let mut w = sample_orbit(system, member_seed, lo, n as i64 - 1 + hi);
        let mut sum = 0.0;
        let mut min_partial = f64::INFINITY;
        for k in 0..n as i64 {
            sum += h.eval(&mut w, k);
            min_partial = min_partial.min(sum);
        }
        (sum / n as f64, min_partial, sum > 0.0)
    });

    let mut mean = Running::default();
    let mut dips = 0u64;
    let mut final_pos = 0u64;
    let mut min_acc = Running::default();
    for &(avg, min_partial, positive) in &per_member {
        mean.push(avg);
        min_acc.push(min_partial);
        if min_partial < 0.0 {
            dips += 1;
        }
        if positive {
            final_pos += 1;
        }
    }
    BirkhoffReport {
        mean: Estimate::of(&mean),
        dip_fraction: dips as f64 / ensemble as f64,
        final_positive_fraction: final_pos as f64 / ensemble as f64,
        min_partial_mean: min_acc.mean(),
    }
}

/// Runs `f` once per ensemble member with a derived per-member seed.
///
/// Members execute in parallel; the returned vector is ordered by member
/// index, so downstream merging is deterministic regardless of thread count.
pub fn par_members<T: Send>(
    ensemble: u64,
    seed: u64,
    f: impl Fn(u64, u64) -> T + Sync,
) -> Vec<T> {
    (0..ensemble)
        .into_par_iter()
        .map(|member| f(member, rng::derive(seed, member)))
        .collect()
}
