//! Matrix cocycles over a symbolic system.
//!
//! A generator map `F: X -> SL_d(R)` reads a finite symbol window and is
//! multiplied along orbits:
//!
//! ```text
//! F_n(x) = F(T^{n-1}x) ... F(Tx) F(x)      n >= 1
//!        = I                                n = 0
//!        = F(T^n x)^{-1} ... F(T^{-1}x)^{-1}  n < 0
//! ```
//!
//! so that `F_{k+n}(x) = F_k(T^n x) F_n(x)`. Long products overflow doubles,
//! so products carry a separate log-scale: the pair `(M, s)` represents
//! `e^s M`, renormalized whenever an entry magnitude passes `1e100`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::dynamics::{par_members, sample_orbit, OrbitWindow, Symbol, SymbolicSystem};
use crate::error::{LabError, Result};
use crate::stats::{Estimate, Running};

/// Entry magnitude that triggers renormalization of a running product.
pub const RESCALE_THRESHOLD: f64 = 1e100;

const DET_REL_TOL: f64 = 1e-9;

/// Validates membership in `SL_d(R)`: finite entries, `det = 1` within a
/// relative tolerance.
pub fn check_special_linear(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() < 2 {
        return Err(LabError::InvalidConfig(format!(
            "generator must be square of dimension >= 2, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LabError::InvalidConfig("non-finite generator entry".into()));
    }
    let det = m.determinant();
    if (det - 1.0).abs() > DET_REL_TOL {
        return Err(LabError::InvalidConfig(format!(
            "generator determinant {det} is not 1 within {DET_REL_TOL:.0e}"
        )));
    }
    Ok(())
}

/// A generator table: symbol window -> `SL_d` matrix.
#[derive(Debug, Clone)]
pub struct CocycleSpec {
    dimension: usize,
    window: (i64, i64),
    table: Arc<HashMap<Vec<Symbol>, DMatrix<f64>>>,
    inverses: Arc<HashMap<Vec<Symbol>, DMatrix<f64>>>,
}

impl CocycleSpec {
    pub fn new(
        dimension: usize,
        window: (i64, i64),
        entries: Vec<(Vec<Symbol>, DMatrix<f64>)>,
    ) -> Result<CocycleSpec> {
        if window.0 > window.1 {
            return Err(LabError::InvalidConfig("window lo exceeds hi".into()));
        }
        let width = (window.1 - window.0 + 1) as usize;
        let mut table = HashMap::new();
        let mut inverses = HashMap::new();
        for (key, m) in entries {
            if key.len() != width {
                return Err(LabError::InvalidConfig(format!(
                    "table key length {} does not match window width {width}",
                    key.len()
                )));
            }
            if m.nrows() != dimension {
                return Err(LabError::InvalidConfig(format!(
                    "generator is {}x{}, cocycle dimension is {dimension}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            check_special_linear(&m)?;
            let inv = m.clone().try_inverse().ok_or_else(|| {
                LabError::InvalidConfig("generator is numerically singular".into())
            })?;
            if table.insert(key.clone(), m).is_some() {
                return Err(LabError::InvalidConfig(format!(
                    "duplicate table key {key:?}"
                )));
            }
            inverses.insert(key, inv);
        }
        if table.is_empty() {
            return Err(LabError::InvalidConfig("empty generator table".into()));
        }
        Ok(CocycleSpec {
            dimension,
            window,
            table: Arc::new(table),
            inverses: Arc::new(inverses),
        })
    }

    /// Single-coordinate table over `x_0`, one matrix per symbol index.
    pub fn per_symbol(matrices: Vec<DMatrix<f64>>) -> Result<CocycleSpec> {
        let dimension = matrices.first().map(|m| m.nrows()).unwrap_or(0);
        let entries = matrices
            .into_iter()
            .enumerate()
            .map(|(i, m)| (vec![i as Symbol], m))
            .collect();
        CocycleSpec::new(dimension, (0, 0), entries)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    /// Coordinates read by `F_n(x)`: the union of the generator windows of
    /// the points visited by the product.
    pub fn coordinates_needed(&self, n: i64) -> (i64, i64) {
        let (lo, hi) = self.window;
        if n >= 1 {
            (lo, n - 1 + hi)
        } else if n == 0 {
            (0, 0)
        } else {
            (n + lo, -1 + hi)
        }
    }

    pub fn generator_for_key(&self, key: &[Symbol]) -> Result<&DMatrix<f64>> {
        self.table.get(key).ok_or_else(|| {
            LabError::InvalidConfig(format!("generator table has no entry for {key:?}"))
        })
    }

    pub fn inverse_for_key(&self, key: &[Symbol]) -> Result<&DMatrix<f64>> {
        self.inverses.get(key).ok_or_else(|| {
            LabError::InvalidConfig(format!("generator table has no entry for {key:?}"))
        })
    }

    /// Generator at `T^t x`, without extending the window.
    pub fn generator(&self, x: &OrbitWindow, t: i64) -> Result<&DMatrix<f64>> {
        let key = x.slice(t + self.window.0, t + self.window.1)?;
        self.generator_for_key(key)
    }

    pub fn generator_inverse(&self, x: &OrbitWindow, t: i64) -> Result<&DMatrix<f64>> {
        let key = x.slice(t + self.window.0, t + self.window.1)?;
        self.inverse_for_key(key)
    }

    /// Checks that every window word of positive probability has an entry.
    pub fn validate_total(&self, system: &SymbolicSystem) -> Result<()> {
        let width = (self.window.1 - self.window.0 + 1) as usize;
        let k = system.alphabet_len();
        let mut word = vec![0 as Symbol; width];
        loop {
            if system.cylinder_probability(&word) > 0.0 && !self.table.contains_key(&word) {
                return Err(LabError::InvalidConfig(format!(
                    "generator table misses reachable window word {word:?}"
                )));
            }
            // odometer increment
            let mut pos = 0;
            loop {
                if pos == width {
                    return Ok(());
                }
                word[pos] += 1;
                if (word[pos] as usize) < k {
                    break;
                }
                word[pos] = 0;
                pos += 1;
            }
        }
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }
}

/// The pair `(matrix, log_scale)` representing `e^{log_scale} * matrix`.
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    pub matrix: DMatrix<f64>,
    pub log_scale: f64,
}

impl ScaledMatrix {
    pub fn identity(d: usize) -> ScaledMatrix {
        ScaledMatrix { matrix: DMatrix::identity(d, d), log_scale: 0.0 }
    }

    /// Left-multiplies by `g` and renormalizes above the entry threshold.
    pub fn apply_left(&mut self, g: &DMatrix<f64>) {
        self.matrix = g * &self.matrix;
        self.renormalize();
    }

    /// Right-multiplies by `g` and renormalizes above the entry threshold.
    pub fn apply_right(&mut self, g: &DMatrix<f64>) {
        self.matrix = &self.matrix * g;
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let max = self.matrix.abs().max();
        if max > RESCALE_THRESHOLD {
            self.matrix /= max;
            self.log_scale += max.ln();
        }
    }

    /// Collapses back to a plain matrix (may overflow for huge scales).
    pub fn into_matrix(self) -> DMatrix<f64> {
        if self.log_scale == 0.0 {
            self.matrix
        } else {
            self.matrix * self.log_scale.exp()
        }
    }

    /// `log` of the operator norm (largest singular value) of the full
    /// product, scale included.
    pub fn log_operator_norm(&self) -> f64 {
        let sv = self.matrix.clone().singular_values();
        let top = sv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top.ln() + self.log_scale
    }

    /// Singular values of the full product in decreasing log scale.
    pub fn log_singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self
            .matrix
            .clone()
            .singular_values()
            .iter()
            .map(|s| s.ln() + self.log_scale)
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}

impl CocycleSpec {
    /// `F_n` evaluated on a raw symbol slice whose first entry is coordinate
    /// `slice_lo` of the point.
    pub fn product_over_slice(
        &self,
        syms: &[Symbol],
        slice_lo: i64,
        n: i64,
    ) -> Result<ScaledMatrix> {
        let key_at = |t: i64| -> Result<&[Symbol]> {
            let a = t + self.window.0 - slice_lo;
            let b = t + self.window.1 - slice_lo;
            if a < 0 || b as usize >= syms.len() {
                return Err(LabError::WindowTooSmall {
                    needed_lo: t + self.window.0,
                    needed_hi: t + self.window.1,
                    have_lo: slice_lo,
                    have_hi: slice_lo + syms.len() as i64 - 1,
                });
            }
            Ok(&syms[a as usize..=b as usize])
        };
        let mut acc = ScaledMatrix::identity(self.dimension());
        if n >= 1 {
            for k in 0..n {
                acc.apply_left(self.generator_for_key(key_at(k)?)?);
            }
        } else {
            for k in 1..=(-n) {
                acc.apply_left(self.inverse_for_key(key_at(-k)?)?);
            }
        }
        Ok(acc)
    }
}

/// Evaluates `F_n(x)` with rescaling bookkeeping.
pub fn evaluate_scaled(c: &CocycleSpec, x: &OrbitWindow, n: i64) -> Result<ScaledMatrix> {
    let mut acc = ScaledMatrix::identity(c.dimension());
    if n >= 1 {
        for k in 0..n {
            acc.apply_left(c.generator(x, k)?);
        }
    } else {
        for k in 1..=(-n) {
            acc.apply_left(c.generator_inverse(x, -k)?);
        }
    }
    Ok(acc)
}

/// Evaluates `F_n(x)` as a plain matrix.
///
/// Errors with `WindowTooSmall` if `x` does not cover the coordinates the
/// product reads. For very long products prefer [`evaluate_scaled`]; the
/// collapse here can overflow.
pub fn evaluate(c: &CocycleSpec, x: &OrbitWindow, n: i64) -> Result<DMatrix<f64>> {
    evaluate_scaled(c, x, n).map(ScaledMatrix::into_matrix)
}

/// Monte Carlo estimate of the integrability integral
/// `∫ log ||F(x)|| dm(x)` (operator norm).
pub fn integrability(
    c: &CocycleSpec,
    system: &SymbolicSystem,
    ensemble: u64,
    seed: u64,
) -> Result<Estimate> {
    assert!(ensemble >= 1);
    let (lo, hi) = c.window();
    let samples: Vec<Result<f64>> = par_members(ensemble, seed, |_, member_seed| {
        let x = sample_orbit(system, member_seed, lo, hi);
        let g = c.generator(&x, 0)?;
        let sv = g.clone().singular_values();
        Ok(sv.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ln())
    });
    let mut acc = Running::default();
    for s in samples {
        acc.push(s?);
    }
    Ok(Estimate::of(&acc))
}

/// A skew product `T_f: (x, z) -> (Tx, f(x).z)` with `f` acting on a finite
/// state set by permutations; the uniform measure on `Z` is invariant.
#[derive(Debug, Clone)]
pub struct SkewSystem {
    base: SymbolicSystem,
    window: (i64, i64),
    z_size: usize,
    perms: Arc<HashMap<Vec<Symbol>, Vec<usize>>>,
}

impl SkewSystem {
    pub fn new(
        base: SymbolicSystem,
        window: (i64, i64),
        z_size: usize,
        perms: Vec<(Vec<Symbol>, Vec<usize>)>,
    ) -> Result<SkewSystem> {
        if z_size == 0 {
            return Err(LabError::InvalidConfig("empty state set".into()));
        }
        let width = (window.1 - window.0 + 1) as usize;
        let mut map = HashMap::new();
        for (key, perm) in perms {
            if key.len() != width {
                return Err(LabError::InvalidConfig("perm key width mismatch".into()));
            }
            if perm.len() != z_size {
                return Err(LabError::InvalidConfig(format!(
                    "permutation over {} states, expected {z_size}",
                    perm.len()
                )));
            }
            let mut seen = vec![false; z_size];
            for &p in &perm {
                if p >= z_size || seen[p] {
                    return Err(LabError::InvalidConfig(
                        "generator action is not a bijection".into(),
                    ));
                }
                seen[p] = true;
            }
            map.insert(key, perm);
        }
        if map.is_empty() {
            return Err(LabError::InvalidConfig("empty permutation table".into()));
        }
        Ok(SkewSystem { base, window, z_size, perms: Arc::new(map) })
    }

    pub fn base(&self) -> &SymbolicSystem {
        &self.base
    }

    pub fn z_size(&self) -> usize {
        self.z_size
    }

    pub fn step(&self, x: &mut OrbitWindow, t: i64, z: usize) -> usize {
        x.extend(t + self.window.0, t + self.window.1);
        let key = x.slice(t + self.window.0, t + self.window.1).expect("extended");
        self.perms[key][z]
    }

    /// One-step Markov kernel on `Z` induced by the symbol marginal.
    pub fn induced_kernel(&self) -> Vec<Vec<f64>> {
        let marginal = self.base.marginal();
        let width = (self.window.1 - self.window.0 + 1) as usize;
        let mut kernel = vec![vec![0.0; self.z_size]; self.z_size];
        let k = self.base.alphabet_len();
        let mut word = vec![0 as Symbol; width];
        loop {
            let p: f64 = if width == 1 {
                marginal[word[0] as usize]
            } else {
                self.base.cylinder_probability(&word)
            };
            if p > 0.0 {
                if let Some(perm) = self.perms.get(&word) {
                    for z in 0..self.z_size {
                        kernel[z][perm[z]] += p;
                    }
                }
            }
            let mut pos = 0;
            loop {
                if pos == width {
                    return kernel;
                }
                word[pos] += 1;
                if (word[pos] as usize) < k {
                    break;
                }
                word[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// The `z`-trajectory `z_0, f(x).z_0, f(Tx)f(x).z_0, ...` of length `n + 1`.
pub fn skew_orbit(s: &SkewSystem, x: &mut OrbitWindow, z0: usize, n: u64) -> Vec<usize> {
    assert!(z0 < s.z_size());
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut z = z0;
    out.push(z);
    for t in 0..n as i64 {
        z = s.step(x, t, z);
        out.push(z);
    }
    out
}

/// An observable on `(symbol window) x Z` with an exactly enumerable space
/// average under the product measure `m x uniform`.
#[derive(Clone)]
pub struct SkewObservable {
    pub label: String,
    window: (i64, i64),
    func: Arc<dyn Fn(&[Symbol], usize) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for SkewObservable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SkewObservable")
            .field("label", &self.label)
            .field("window", &self.window)
            .finish()
    }
}

impl SkewObservable {
    pub fn new(
        label: impl Into<String>,
        window: (i64, i64),
        func: impl Fn(&[Symbol], usize) -> f64 + Send + Sync + 'static,
    ) -> SkewObservable {
        SkewObservable { label: label.into(), window, func: Arc::new(func) }
    }

    /// Indicator of `x_0 = symbol` (optional) and `z = state` (optional).
    pub fn cylinder(symbol: Option<Symbol>, state: Option<usize>) -> SkewObservable {
        let label = format!(
            "1{{{}{}}}",
            symbol.map(|s| format!("x0={s}")).unwrap_or_default(),
            state
                .map(|z| format!("{}z={z}", if symbol.is_some() { "," } else { "" }))
                .unwrap_or_default()
        );
        SkewObservable::new(label, (0, 0), move |syms, z| {
            let sym_ok = symbol.map(|s| syms[0] == s).unwrap_or(true);
            let z_ok = state.map(|s| z == s).unwrap_or(true);
            if sym_ok && z_ok {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Exact average under `m x uniform(Z)`.
    pub fn space_average(&self, s: &SkewSystem) -> f64 {
        let (lo, hi) = self.window;
        let width = (hi - lo + 1) as usize;
        let k = s.base().alphabet_len();
        let mut word = vec![0 as Symbol; width];
        let mut total = 0.0;
        loop {
            let p = s.base().cylinder_probability(&word);
            if p > 0.0 {
                for z in 0..s.z_size() {
                    total += p * (self.func)(&word, z) / s.z_size() as f64;
                }
            }
            let mut pos = 0;
            loop {
                if pos == width {
                    return total;
                }
                word[pos] += 1;
                if (word[pos] as usize) < k {
                    break;
                }
                word[pos] = 0;
                pos += 1;
            }
        }
    }

    fn eval(&self, x: &mut OrbitWindow, t: i64, z: usize) -> f64 {
        x.extend(t + self.window.0, t + self.window.1);
        let syms = x.slice(t + self.window.0, t + self.window.1).expect("extended");
        (self.func)(syms, z)
    }
}

/// Per-observable comparison of skew Birkhoff averages with the product
/// space average.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SkewErgodicityRow {
    pub label: String,
    pub birkhoff: Estimate,
    pub space_average: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SkewErgodicityReport {
    pub rows: Vec<SkewErgodicityRow>,
    pub max_sigma: f64,
}

/// Tests ergodicity of the skew product: Birkhoff averages along `T_f`
/// orbits against exact product-measure averages, in combined-sigma units.
pub fn skew_ergodicity_test(
    s: &SkewSystem,
    observables: &[SkewObservable],
    n: u64,
    ensemble: u64,
    seed: u64,
) -> SkewErgodicityReport {
    let per_member: Vec<Vec<f64>> = par_members(ensemble, seed, |member, member_seed| {
        let mut x = sample_orbit(s.base(), member_seed, 0, n as i64);
        let z0 = (crate::rng::word(member_seed, member) % s.z_size() as u64) as usize;
        let mut sums = vec![0.0; observables.len()];
        let mut z = z0;
        for t in 0..n as i64 {
            for (i, obs) in observables.iter().enumerate() {
                sums[i] += obs.eval(&mut x, t, z);
            }
            z = s.step(&mut x, t, z);
        }
        sums.iter().map(|v| v / n as f64).collect()
    });

    let mut rows = Vec::with_capacity(observables.len());
    let mut max_sigma: f64 = 0.0;
    for (i, obs) in observables.iter().enumerate() {
        let acc = Running::from_samples(per_member.iter().map(|m| m[i]));
        let est = Estimate::of(&acc);
        let space = obs.space_average(s);
        let sigma = est.sigma_distance(space, 0.0);
        max_sigma = max_sigma.max(sigma);
        rows.push(SkewErgodicityRow {
            label: obs.label.clone(),
            birkhoff: est,
            space_average: space,
            sigma,
        });
    }
    SkewErgodicityReport { rows, max_sigma }
}
