//! Stationary (Furstenberg) measures on flag spaces and the harmonic family.
//!
//! Probability measures on the flag space are handled at finite resolution
//! as weighted atom clouds. Weak-* statements are probed through a fixed
//! panel of eight Lipschitz test functions plus neighborhood-mass queries:
//!
//! - stationarity is checked by a one-step refresh (push every atom by one
//!   fresh generator and compare on the panel, paired);
//! - the harmonic family `nu_-(x)` conditions on the future by resampling
//!   pasts with the coordinates `i >= 0` frozen;
//! - backward products push measures toward `delta_{psi_-(x)}`, measured by
//!   a shrinking diameter;
//! - properness is quantified by a power-law fit of neighborhood masses
//!   around proper subspaces, not by an unobservable zero-mass limit.

use nalgebra::{DMatrix, DVector};

use crate::cocycle::{evaluate_scaled, CocycleSpec};
use crate::dynamics::{par_members, sample_orbit, OrbitWindow, SymbolicSystem};
use crate::error::{LabError, Result};
use crate::flagspace::{flag_distance, subspace_angle, Flag};
use crate::oseledets::backward_attracting_flag;
use crate::rng;
use crate::stats::{weighted_quantile, Estimate, Running};

/// A weighted atom cloud on the flag space; weights sum to 1.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    atoms: Vec<(Flag, f64)>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<(Flag, f64)>) -> Result<EmpiricalMeasure> {
        if atoms.is_empty() {
            return Err(LabError::InvalidConfig("measure needs at least one atom".into()));
        }
        if atoms.iter().any(|(_, w)| !(*w >= 0.0)) {
            return Err(LabError::InvalidConfig("negative atom weight".into()));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LabError::InvalidConfig(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(EmpiricalMeasure { atoms })
    }

    /// Equal-weight cloud.
    pub fn from_flags(flags: Vec<Flag>) -> Result<EmpiricalMeasure> {
        let w = 1.0 / flags.len() as f64;
        EmpiricalMeasure::new(flags.into_iter().map(|f| (f, w)).collect())
    }

    pub fn atoms(&self) -> &[(Flag, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.atoms[0].0.dimension()
    }

    /// Merges atoms that agree to within a 1e-9 quantization of their
    /// canonical bases.
    pub fn coalesce(&self) -> EmpiricalMeasure {
        let mut grouped: std::collections::BTreeMap<Vec<i64>, (usize, f64)> =
            std::collections::BTreeMap::new();
        for (i, (flag, w)) in self.atoms.iter().enumerate() {
            let key: Vec<i64> = flag
                .basis()
                .iter()
                .map(|&x| (x / 1e-9).round() as i64)
                .collect();
            grouped
                .entry(key)
                .and_modify(|e| e.1 += w)
                .or_insert((i, *w));
        }
        let atoms = grouped
            .values()
            .map(|&(i, w)| (self.atoms[i].0.clone(), w))
            .collect();
        EmpiricalMeasure { atoms }
    }

    pub fn max_weight(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| *w).fold(0.0, f64::max)
    }

    /// Pushforward by a matrix (acting on every atom flag).
    pub fn pushforward(&self, g: &DMatrix<f64>) -> EmpiricalMeasure {
        EmpiricalMeasure {
            atoms: self.atoms.iter().map(|(f, w)| (f.act(g), *w)).collect(),
        }
    }

    /// Weighted mean and standard error of a test function.
    pub fn test_mean(&self, f: impl Fn(&Flag) -> f64) -> Estimate {
        let vals: Vec<f64> = self.atoms.iter().map(|(fl, _)| f(fl)).collect();
        weighted_estimate(&vals, &self.weights())
    }

    fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|(_, w)| *w).collect()
    }

    /// Mass of `{F : dist(F) < eps}` for an arbitrary distance field.
    pub fn mass_within(&self, eps: f64, dist: impl Fn(&Flag) -> f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(f, _)| dist(f) < eps)
            .map(|(_, w)| w)
            .sum()
    }

    /// The first `max` atoms, renormalized: a deterministic thinning for
    /// diagnostics whose cost is quadratic in the atom count.
    pub fn truncated(&self, max: usize) -> EmpiricalMeasure {
        if self.atoms.len() <= max {
            return self.clone();
        }
        let total: f64 = self.atoms[..max].iter().map(|(_, w)| w).sum();
        EmpiricalMeasure {
            atoms: self.atoms[..max]
                .iter()
                .map(|(f, w)| (f.clone(), w / total))
                .collect(),
        }
    }

    /// Frechet-style center: the atom minimizing the weighted mean squared
    /// flag distance. Candidates are subsampled above 64 atoms.
    pub fn center(&self) -> &Flag {
        let m = self.atoms.len();
        let stride = m.div_ceil(64);
        let mut best = 0usize;
        let mut best_cost = f64::INFINITY;
        for cand in (0..m).step_by(stride) {
            let cf = &self.atoms[cand].0;
            let cost: f64 = self
                .atoms
                .iter()
                .map(|(f, w)| {
                    let d = flag_distance(cf, f);
                    w * d * d
                })
                .sum();
            if cost < best_cost {
                best_cost = cost;
                best = cand;
            }
        }
        &self.atoms[best].0
    }

    /// 90th weighted percentile of the distance to the center.
    pub fn diameter(&self) -> f64 {
        let c = self.center();
        let d: Vec<f64> = self.atoms.iter().map(|(f, _)| flag_distance(c, f)).collect();
        weighted_quantile(&d, &self.weights(), 0.9)
    }
}

fn weighted_estimate(vals: &[f64], weights: &[f64]) -> Estimate {
    let total: f64 = weights.iter().sum();
    let mean: f64 = vals.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let var: f64 = vals
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean) * (v - mean))
        .sum::<f64>()
        / total;
    let n_eff = total * total / weights.iter().map(|w| w * w).sum::<f64>();
    Estimate::new(mean, (var / n_eff.max(1.0)).sqrt())
}

/// Fixed panel of eight Lipschitz test functions on the flag space:
/// squared projections of seeded reference directions onto flag subspaces.
#[derive(Debug, Clone)]
pub struct TestPanel {
    refs: Vec<DVector<f64>>,
    dims: Vec<usize>,
}

const PANEL_KEY: u64 = 0x5041_4e45_4c38;

impl TestPanel {
    pub fn standard(d: usize) -> TestPanel {
        assert!(d >= 2);
        let mut refs = Vec::with_capacity(8);
        let mut dims = Vec::with_capacity(8);
        for m in 0..8u64 {
            let v = DVector::from_fn(d, |i, _| {
                2.0 * rng::unit(PANEL_KEY, m * 64 + i as u64) - 1.0
            });
            refs.push(&v / v.norm());
            dims.push(1 + (m as usize % (d - 1)));
        }
        TestPanel { refs, dims }
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    /// `||proj_{E_j(flag)} r_m||^2` for panel index `m`.
    pub fn eval(&self, m: usize, flag: &Flag) -> f64 {
        let u = flag.subspace(self.dims[m]);
        let p = u.transpose() * &self.refs[m];
        p.norm_squared()
    }
}

/// Result of the stationary-measure estimator with its self-consistency
/// refresh check.
#[derive(Debug, Clone)]
pub struct StationaryEstimate {
    pub measure: EmpiricalMeasure,
    /// Per panel function: mean under the estimate, mean after one fresh
    /// push, and |difference| in paired-sigma units.
    pub panel: Vec<PanelComparison>,
    pub max_refresh_sigma: f64,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PanelComparison {
    pub mean: f64,
    pub refreshed_mean: f64,
    pub sigma: f64,
}

/// Draws one fresh generator distributed like `F(x)` under `m`.
fn fresh_generator<'c>(
    c: &'c CocycleSpec,
    system: &SymbolicSystem,
    seed: u64,
) -> Result<&'c DMatrix<f64>> {
    let (lo, hi) = c.window();
    let x = sample_orbit(system, seed, lo, hi);
    c.generator(&x, 0)
}

/// Estimates the stationary measure by pushing a reference flag with
/// length-`burn` products over independent orbits, and checks stationarity
/// by a one-step refresh on the test panel.
pub fn estimate_stationary(
    c: &CocycleSpec,
    system: &SymbolicSystem,
    burn: u64,
    samples: u64,
    seed: u64,
) -> Result<StationaryEstimate> {
    if burn < 10 {
        return Err(LabError::InvalidConfig("burn must be at least 10".into()));
    }
    let d = c.dimension();
    let panel = TestPanel::standard(d);
    let reference = Flag::standard(d);
    let (w_lo, w_hi) = c.window();

    let per_member: Vec<Result<(Flag, Flag)>> = par_members(samples, seed, |member, mseed| {
        let x = sample_orbit(system, mseed, w_lo, burn as i64 - 1 + w_hi);
        let prod = evaluate_scaled(c, &x, burn as i64)?;
        let atom = reference.act(&prod.matrix);
        let g = fresh_generator(c, system, rng::derive(mseed, member ^ 0x5245_4652_4553_48))?;
        let refreshed = atom.act(g);
        Ok((atom, refreshed))
    });

    let mut flags = Vec::with_capacity(samples as usize);
    let mut diff_acc = vec![Running::default(); panel.len()];
    let mut base_acc = vec![Running::default(); panel.len()];
    let mut refreshed_acc = vec![Running::default(); panel.len()];
    for r in per_member {
        let (atom, refreshed) = r?;
        for m in 0..panel.len() {
            let a = panel.eval(m, &atom);
            let b = panel.eval(m, &refreshed);
            base_acc[m].push(a);
            refreshed_acc[m].push(b);
            diff_acc[m].push(b - a);
        }
        flags.push(atom);
    }
    let mut rows = Vec::with_capacity(panel.len());
    let mut max_sigma: f64 = 0.0;
    for m in 0..panel.len() {
        let diff = Estimate::of(&diff_acc[m]);
        let sigma = if diff.value == 0.0 {
            0.0
        } else if diff.stderr == 0.0 {
            f64::INFINITY
        } else {
            diff.value.abs() / diff.stderr
        };
        max_sigma = max_sigma.max(sigma);
        rows.push(PanelComparison {
            mean: base_acc[m].mean(),
            refreshed_mean: refreshed_acc[m].mean(),
            sigma,
        });
    }
    Ok(StationaryEstimate {
        measure: EmpiricalMeasure::from_flags(flags)?,
        panel: rows,
        max_refresh_sigma: max_sigma,
    })
}

/// The Furstenberg integral for the top exponent: average of
/// `log ||g v|| / ||v||` over fresh generators `g` and top lines `v` of the
/// measure's atoms.
pub fn furstenberg_top_exponent(
    c: &CocycleSpec,
    system: &SymbolicSystem,
    nu: &EmpiricalMeasure,
    seed: u64,
) -> Result<Estimate> {
    let mut vals = Vec::with_capacity(nu.len());
    let mut weights = Vec::with_capacity(nu.len());
    for (k, (flag, w)) in nu.atoms().iter().enumerate() {
        let g = fresh_generator(c, system, rng::derive(seed, k as u64))?;
        let v = flag.top_line();
        vals.push((g * &v).norm().ln());
        weights.push(*w);
    }
    Ok(weighted_estimate(&vals, &weights))
}

/// The harmonic family `nu_-(x)`: atoms are backward attracting flags over
/// `M` independently resampled pasts, with the future frozen.
#[derive(Debug, Clone)]
pub struct HarmonicFamily {
    pub count: usize,
    pub depth: u64,
    pub measure: EmpiricalMeasure,
    /// Max panel discrepancy, in sigma units, between `nu_-(x)` and the
    /// average of `F(T^{-1}x)_* nu_-(T^{-1}x)` over a refreshed `x_{-1}`.
    pub martingale_sigma: f64,
}

/// Builds the harmonic family at `x` and checks the martingale identity.
pub fn harmonic_family(
    c: &CocycleSpec,
    x: &OrbitWindow,
    count: usize,
    depth: u64,
    seed: u64,
) -> Result<HarmonicFamily> {
    let (w_lo, w_hi) = c.window();
    let slack = depth as i64 + w_lo.abs() + w_hi.abs() + 2;
    let panel = TestPanel::standard(c.dimension());

    // atoms of nu_-(x): psi_- over fresh pasts
    let atoms: Vec<Result<Flag>> = par_members(count as u64, seed, |_, mseed| {
        let mut w = x.resample_past(mseed, slack);
        Ok(backward_attracting_flag(c, &mut w, depth)?.0)
    });
    let atoms: Result<Vec<Flag>> = atoms.into_iter().collect();
    let atoms = atoms?;

    // mixture of F(T^{-1}x)_* nu_-(T^{-1}x) over refreshed pasts: each draw
    // refreshes x_{-1} and deeper, takes psi_- at T^{-1}x from that past,
    // and pushes it one step forward
    let pushed: Vec<Result<Flag>> =
        par_members(count as u64, rng::derive(seed, 0x4d41_5254), |_, mseed| {
            let w = x.resample_past(mseed, slack);
            let mut back = w.shift(-1);
            let flag = backward_attracting_flag(c, &mut back, depth)?.0;
            back.extend(w_lo, w_hi);
            let g = c.generator(&back, 0)?;
            Ok(flag.act(g))
        });
    let pushed: Result<Vec<Flag>> = pushed.into_iter().collect();
    let pushed = pushed?;

    let mut max_sigma: f64 = 0.0;
    for m in 0..panel.len() {
        let a = Running::from_samples(atoms.iter().map(|f| panel.eval(m, f)));
        let b = Running::from_samples(pushed.iter().map(|f| panel.eval(m, f)));
        let sigma = Estimate::of(&a).sigma_distance(b.mean(), b.stderr());
        max_sigma = max_sigma.max(sigma);
    }
    Ok(HarmonicFamily {
        count,
        depth,
        measure: EmpiricalMeasure::from_flags(atoms)?,
        martingale_sigma: max_sigma,
    })
}

/// One row of a Dirac-contraction curve.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ContractionRow {
    pub n: u64,
    pub diameter: f64,
}

/// Pushforwards of a measure by deepening backward products.
#[derive(Debug, Clone)]
pub struct ContractionCurve {
    pub rows: Vec<ContractionRow>,
    /// Center of the deepest pushforward (the empirical `psi_-(x)`).
    pub limit: Flag,
}

impl ContractionCurve {
    /// Non-increasing up to `slack` per step.
    pub fn is_monotone_within(&self, slack: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].diameter <= w[0].diameter + slack)
    }
}

/// Pushes `nu` by `F(T^{-1}x)...F(T^{-n}x)` for each `n` and measures the
/// shrinking (or not) diameter. Non-contraction is reported, not an error.
pub fn dirac_contraction(
    c: &CocycleSpec,
    x: &OrbitWindow,
    nu: &EmpiricalMeasure,
    n_list: &[u64],
) -> Result<ContractionCurve> {
    assert!(!n_list.is_empty());
    let mut rows = Vec::with_capacity(n_list.len());
    let mut last: Option<EmpiricalMeasure> = None;
    for &n in n_list {
        let mut shifted = x.shift(-(n as i64));
        let (lo, hi) = c.coordinates_needed(n as i64);
        shifted.extend(lo, hi);
        let prod = evaluate_scaled(c, &shifted, n as i64)?;
        let pushed = nu.pushforward(&prod.matrix);
        rows.push(ContractionRow { n, diameter: pushed.diameter() });
        last = Some(pushed);
    }
    let limit = last.expect("nonempty list").center().clone();
    Ok(ContractionCurve { rows, limit })
}

/// A proper subspace locus in the flag space: flags whose `dim W`-dimensional
/// member coincides with `W`.
#[derive(Debug, Clone)]
pub struct SubspaceLocus {
    pub label: String,
    basis: DMatrix<f64>,
}

impl SubspaceLocus {
    /// Orthonormalizes the given spanning columns.
    pub fn new(label: impl Into<String>, span: DMatrix<f64>) -> Result<SubspaceLocus> {
        if span.ncols() == 0 || span.ncols() >= span.nrows() {
            return Err(LabError::InvalidConfig(
                "subspace must be proper and non-trivial".into(),
            ));
        }
        let qr = span.clone().qr();
        let q = qr.q();
        let r = qr.r();
        for j in 0..span.ncols() {
            if r[(j, j)].abs() < 1e-12 {
                return Err(LabError::InvalidConfig("subspace basis is degenerate".into()));
            }
        }
        Ok(SubspaceLocus { label: label.into(), basis: q.columns(0, span.ncols()).into_owned() })
    }

    /// A line locus from a single vector.
    pub fn line(label: impl Into<String>, v: DVector<f64>) -> Result<SubspaceLocus> {
        let d = v.nrows();
        SubspaceLocus::new(label, DMatrix::from_fn(d, 1, |i, _| v[i]))
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Largest principal angle between `E_{dim}(flag)` and the subspace.
    pub fn distance(&self, flag: &Flag) -> f64 {
        subspace_angle(&flag.subspace(self.dim()), &self.basis)
    }
}

/// Power-law profile of neighborhood masses around one subspace locus.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SubspaceProfile {
    pub label: String,
    pub masses: Vec<(f64, f64)>,
    /// Fitted exponent in `mass ~ C eps^c`; infinite when the measure
    /// vanishes near the locus on the whole grid.
    pub fitted_exponent: f64,
    pub exponent_stderr: f64,
    /// One-sided 95% lower confidence bound for the exponent.
    pub exponent_ci_low: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PropernessReport {
    pub per_subspace: Vec<SubspaceProfile>,
    pub max_atom_weight: f64,
    pub atom_count: usize,
    /// True when every subspace exponent is positive at 95% confidence and
    /// no coalesced atom carries more than `2 / atom_count` of the mass.
    pub proper: bool,
}

/// Neighborhood-mass profile `mass(eps)` over a decreasing epsilon grid,
/// with a fitted properness exponent per subspace.
pub fn properness_profile(
    nu: &EmpiricalMeasure,
    subspaces: &[SubspaceLocus],
    eps_grid: &[f64],
) -> Result<PropernessReport> {
    if eps_grid.len() < 2 || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidConfig(
            "eps grid must be strictly decreasing with at least two entries".into(),
        ));
    }
    let coalesced = nu.coalesce();
    let mut per_subspace = Vec::with_capacity(subspaces.len());
    let mut all_positive = true;
    for s in subspaces {
        let masses: Vec<(f64, f64)> = eps_grid
            .iter()
            .map(|&eps| (eps, nu.mass_within(eps, |f| s.distance(f))))
            .collect();
        let pts: Vec<(f64, f64)> = masses
            .iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|&(e, m)| (e.ln(), m.ln()))
            .collect();
        let (c, se, ci) = if pts.len() < 2 {
            (f64::INFINITY, 0.0, f64::INFINITY)
        } else {
            let (slope, se) = ols_slope(&pts);
            (slope, se, slope - 1.96 * se)
        };
        all_positive &= ci > 0.0;
        per_subspace.push(SubspaceProfile {
            label: s.label.clone(),
            masses,
            fitted_exponent: c,
            exponent_stderr: se,
            exponent_ci_low: ci,
        });
    }
    let max_atom_weight = coalesced.max_weight();
    let atom_gate = max_atom_weight <= 2.0 / nu.len() as f64;
    Ok(PropernessReport {
        per_subspace,
        max_atom_weight,
        atom_count: nu.len(),
        proper: all_positive && atom_gate,
    })
}

fn ols_slope(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if pts.len() == 2 {
        return (slope, 0.0);
    }
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let fit = my + slope * (p.0 - mx);
            (p.1 - fit) * (p.1 - fit)
        })
        .sum();
    let se = (ss_res / (n - 2.0) / sxx).sqrt();
    (slope, se)
}

/// One row of the contraction-to-growth table: simple-root values of the
/// Cartan projection of the backward product.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RootGrowthRow {
    pub n: u64,
    /// `chi_i(a_n) = log sigma_i - log sigma_{i+1}`.
    pub chi: Vec<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RootGrowthTable {
    pub rows: Vec<RootGrowthRow>,
}

impl RootGrowthTable {
    /// `chi_i(a_n) / n` at the deepest row.
    pub fn tail_slopes(&self) -> Vec<f64> {
        let last = self.rows.last().expect("nonempty table");
        last.chi.iter().map(|c| c / last.n as f64).collect()
    }

    /// True when every root value grows monotonically along the rows.
    pub fn is_diverging(&self) -> bool {
        (0..self.rows[0].chi.len()).all(|i| {
            self.rows
                .windows(2)
                .all(|w| w[1].chi[i] >= w[0].chi[i] - 1e-9)
        })
    }
}

/// Cartan-projection growth of backward products: positive simple roots
/// evaluated on `a_n`, for each depth in `n_list`.
///
/// The backward product `B_n = F(T^{-1}x)...F(T^{-n}x)` equals the forward
/// product restarted at `T^{-n}x`, so its Cartan data comes from the stable
/// accumulated-QR log singular values of that forward run.
pub fn contraction_growth_check(
    c: &CocycleSpec,
    x: &OrbitWindow,
    n_list: &[u64],
) -> Result<RootGrowthTable> {
    assert!(!n_list.is_empty());
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut shifted = x.shift(-(n as i64));
        let logs =
            crate::oseledets::product_log_singular_values_stable(c, &mut shifted, n)?;
        let chi = logs.windows(2).map(|w| w[0] - w[1]).collect();
        rows.push(RootGrowthRow { n, chi });
    }
    Ok(RootGrowthTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::CocycleSpec;
    use crate::dynamics::SymbolicSystem;
    use approx::assert_relative_eq;

    fn constant_diag(seed: u64) -> (SymbolicSystem, CocycleSpec) {
        let sys = SymbolicSystem::uniform(vec!["a".into()], seed).unwrap();
        let c = CocycleSpec::per_symbol(vec![DMatrix::from_row_slice(
            2,
            2,
            &[2.0, 0.0, 0.0, 0.5],
        )])
        .unwrap();
        (sys, c)
    }

    fn rotation_walk(seed: u64) -> (SymbolicSystem, CocycleSpec) {
        let rot = |t: f64| {
            DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
        };
        let sys = SymbolicSystem::uniform(vec!["r".into(), "s".into()], seed).unwrap();
        let c = CocycleSpec::per_symbol(vec![rot(1.0), rot(std::f64::consts::SQRT_2)]).unwrap();
        (sys, c)
    }

    fn sl2z_walk(seed: u64) -> (SymbolicSystem, CocycleSpec) {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 1.0]);
        let sys = SymbolicSystem::uniform(
            vec!["A".into(), "a".into(), "B".into(), "b".into()],
            seed,
        )
        .unwrap();
        let c = CocycleSpec::per_symbol(vec![
            a.clone(),
            a.try_inverse().unwrap(),
            b.clone(),
            b.try_inverse().unwrap(),
        ])
        .unwrap();
        (sys, c)
    }

    fn reducible_walk(seed: u64) -> (SymbolicSystem, CocycleSpec) {
        let g1 = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]);
        let g2 = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 2.0]);
        let sys = SymbolicSystem::uniform(vec!["p".into(), "q".into()], seed).unwrap();
        let c = CocycleSpec::per_symbol(vec![g1, g2]).unwrap();
        (sys, c)
    }

    fn uniform_line_measure(count: usize) -> EmpiricalMeasure {
        // equally spaced angles on the circle of lines in R^2
        let flags = (0..count)
            .map(|i| {
                let t = std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                let m = DMatrix::from_row_slice(
                    2,
                    2,
                    &[t.cos(), -t.sin(), t.sin(), t.cos()],
                );
                Flag::from_orthonormal(m).unwrap()
            })
            .collect();
        EmpiricalMeasure::from_flags(flags).unwrap()
    }

    #[test]
    fn constant_diagonal_measure_is_a_dirac_at_e1() {
        let (sys, c) = constant_diag(1);
        let est = estimate_stationary(&c, &sys, 40, 64, 0).unwrap();
        let e1 = Flag::standard(2);
        for (f, _) in est.measure.atoms() {
            assert!(flag_distance(f, &e1) < 1e-10);
        }
        assert!(est.max_refresh_sigma.is_finite());
        let co = est.measure.coalesce();
        assert_eq!(co.len(), 1);
        assert_relative_eq!(co.max_weight(), 1.0);
    }

    #[test]
    fn isometric_measure_matches_uniform_oracle() {
        // uniform measure on lines is stationary for rotations; the panel
        // means under the uniform law are exactly 1/2 in dimension 2
        let (sys, c) = rotation_walk(3);
        let est = estimate_stationary(&c, &sys, 60, 400, 7).unwrap();
        let panel = TestPanel::standard(2);
        for m in 0..panel.len() {
            let e = est.measure.test_mean(|f| panel.eval(m, f));
            assert!(
                (e.value - 0.5).abs() < 3.5 * e.stderr,
                "panel {m}: {e:?}"
            );
        }
        assert!(est.max_refresh_sigma < 4.0, "refresh {}", est.max_refresh_sigma);
    }

    #[test]
    fn sl2z_refresh_is_self_consistent() {
        let (sys, c) = sl2z_walk(5);
        let est = estimate_stationary(&c, &sys, 50, 600, 1).unwrap();
        assert!(est.max_refresh_sigma < 3.0, "refresh {}", est.max_refresh_sigma);
    }

    #[test]
    fn furstenberg_integral_constant_diagonal() {
        let (sys, c) = constant_diag(2);
        let est = estimate_stationary(&c, &sys, 40, 32, 3).unwrap();
        let top = furstenberg_top_exponent(&c, &sys, &est.measure, 4).unwrap();
        assert_relative_eq!(top.value, 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn furstenberg_integral_vanishes_for_isometries() {
        let (sys, c) = rotation_walk(6);
        let est = estimate_stationary(&c, &sys, 30, 64, 2).unwrap();
        let top = furstenberg_top_exponent(&c, &sys, &est.measure, 9).unwrap();
        assert!(top.value.abs() < 1e-12, "top {top:?}");
    }

    #[test]
    fn harmonic_family_is_dirac_for_constant_cocycle() {
        let (sys, c) = constant_diag(3);
        let x = sample_orbit(&sys, 1, 0, 4);
        let fam = harmonic_family(&c, &x, 32, 40, 5).unwrap();
        let co = fam.measure.coalesce();
        assert_eq!(co.len(), 1);
        assert_eq!(fam.martingale_sigma, 0.0);
    }

    #[test]
    fn harmonic_family_matches_unconditional_law_for_bernoulli() {
        // for an i.i.d. system psi_- reads only past coordinates, so nu_-(x)
        // must agree with the plain backward-flag law on the panel
        let (sys, c) = sl2z_walk(7);
        let x = sample_orbit(&sys, 42, 0, 4);
        let m = 384;
        let fam = harmonic_family(&c, &x, m, 120, 6).unwrap();
        // unconditional law: fresh orbits, same depth
        let flags: Vec<Flag> = (0..m as u64)
            .map(|k| {
                let mut w = sample_orbit(&sys, rng::derive(999, k), -130, 4);
                backward_attracting_flag(&c, &mut w, 120).unwrap().0
            })
            .collect();
        let free = EmpiricalMeasure::from_flags(flags).unwrap();
        let panel = TestPanel::standard(2);
        for idx in 0..panel.len() {
            let a = fam.measure.test_mean(|f| panel.eval(idx, f));
            let b = free.test_mean(|f| panel.eval(idx, f));
            let sigma = a.sigma_distance(b.value, b.stderr);
            assert!(sigma < 3.5, "panel {idx}: {sigma} sigma");
        }
    }

    #[test]
    fn martingale_discrepancy_is_small_on_sl2z() {
        let (sys, c) = sl2z_walk(8);
        let x = sample_orbit(&sys, 11, 0, 4);
        let fam = harmonic_family(&c, &x, 256, 100, 3).unwrap();
        assert!(fam.martingale_sigma < 3.0, "martingale {}", fam.martingale_sigma);
    }

    #[test]
    fn rotation_harmonic_family_has_no_gap() {
        let (sys, c) = rotation_walk(9);
        let x = sample_orbit(&sys, 0, 0, 2);
        assert!(matches!(
            harmonic_family(&c, &x, 8, 50, 0),
            Err(LabError::InsufficientGap { .. })
        ));
    }

    #[test]
    fn contraction_collapses_geometrically_for_constant_diagonal() {
        let (sys, c) = constant_diag(4);
        let x = sample_orbit(&sys, 3, -60, 2);
        let nu = uniform_line_measure(64);
        let curve = dirac_contraction(&c, &x, &nu, &[2, 4, 8, 16]).unwrap();
        // diameter shrinks by ~4^{-2 delta n}: slope of the line space map
        assert!(curve.is_monotone_within(1e-12));
        let d: Vec<f64> = curve.rows.iter().map(|r| r.diameter).collect();
        assert!(d[3] < 1e-6 && d[0] < 0.5, "diameters {d:?}");
        for w in d.windows(2) {
            assert!(w[1] < w[0] / 8.0, "not geometric: {d:?}");
        }
        assert!(flag_distance(&curve.limit, &Flag::standard(2)) < 1e-6);
    }

    #[test]
    fn no_contraction_for_isometries() {
        let (sys, c) = rotation_walk(11);
        let x = sample_orbit(&sys, 5, -300, 2);
        let nu = uniform_line_measure(64);
        let curve = dirac_contraction(&c, &x, &nu, &[10, 50, 250]).unwrap();
        for row in &curve.rows {
            assert!(row.diameter > 0.5, "diameter collapsed: {row:?}");
        }
    }

    #[test]
    fn sl2z_contraction_reaches_psi_minus() {
        let (sys, c) = sl2z_walk(12);
        let est = estimate_stationary(&c, &sys, 40, 200, 8).unwrap();
        let mut x = sample_orbit(&sys, 77, -220, 2);
        let curve = dirac_contraction(&c, &x, &est.measure, &[25, 50, 100, 200]).unwrap();
        assert!(curve.rows.last().unwrap().diameter < 0.01);
        let flags = crate::oseledets::oseledets_flags(&c, &mut x, 200).unwrap();
        assert!(
            flag_distance(&curve.limit, &flags.psi_minus) < 0.01,
            "limit vs psi_-: {}",
            flag_distance(&curve.limit, &flags.psi_minus)
        );
    }

    #[test]
    fn uniform_line_mass_is_linear_in_eps() {
        let nu = uniform_line_measure(4000);
        let e1 = SubspaceLocus::line("e1", DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let report = properness_profile(&nu, &[e1], &[0.4, 0.2, 0.1, 0.05]).unwrap();
        let p = &report.per_subspace[0];
        // arc-length oracle: mass(eps) = 2 eps / pi exactly
        for &(eps, mass) in &p.masses {
            assert_relative_eq!(mass, 2.0 * eps / std::f64::consts::PI, epsilon = 2e-3);
        }
        assert!((p.fitted_exponent - 1.0).abs() < 0.05, "c = {}", p.fitted_exponent);
        assert!(report.proper);
    }

    #[test]
    fn reducible_cocycle_is_flagged_not_proper() {
        let (sys, c) = reducible_walk(13);
        let est = estimate_stationary(&c, &sys, 50, 400, 4).unwrap();
        let e1 = SubspaceLocus::line("e1", DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let report =
            properness_profile(&est.measure, &[e1], &[0.4, 0.28, 0.2, 0.14, 0.1]).unwrap();
        assert!(!report.proper);
        // the invariant line soaks up at least half the mass at every eps
        for &(_, mass) in &report.per_subspace[0].masses {
            assert!(mass >= 0.5, "mass {mass}");
        }
        assert!(report.max_atom_weight > 2.0 / report.atom_count as f64);
    }

    #[test]
    fn sl2z_measure_is_proper() {
        let (sys, c) = sl2z_walk(14);
        let est = estimate_stationary(&c, &sys, 50, 4000, 5).unwrap();
        let subspaces = vec![
            SubspaceLocus::line("e1", DVector::from_vec(vec![1.0, 0.0])).unwrap(),
            SubspaceLocus::line("e2", DVector::from_vec(vec![0.0, 1.0])).unwrap(),
            SubspaceLocus::line("e1+e2", DVector::from_vec(vec![1.0, 1.0])).unwrap(),
        ];
        let report =
            properness_profile(&est.measure, &subspaces, &[0.45, 0.32, 0.22, 0.16, 0.11])
                .unwrap();
        assert!(report.proper, "{report:?}");
    }

    #[test]
    fn root_growth_is_exact_for_constant_diagonal() {
        let (sys, c) = constant_diag(5);
        let x = sample_orbit(&sys, 2, -40, 2);
        let table = contraction_growth_check(&c, &x, &[5, 10, 20]).unwrap();
        for row in &table.rows {
            assert_relative_eq!(
                row.chi[0],
                row.n as f64 * 2.0 * 2.0f64.ln(),
                epsilon = 1e-9
            );
        }
        assert!(table.is_diverging());
    }

    #[test]
    fn root_growth_vanishes_for_isometries() {
        let (sys, c) = rotation_walk(15);
        let x = sample_orbit(&sys, 4, -120, 2);
        let table = contraction_growth_check(&c, &x, &[10, 50, 100]).unwrap();
        for row in &table.rows {
            assert!(row.chi[0].abs() < 1e-9, "chi = {}", row.chi[0]);
        }
    }

    #[test]
    fn sl2z_root_slope_matches_twice_lambda1() {
        let (sys, c) = sl2z_walk(16);
        let mut acc = Running::default();
        for seed in 0..16u64 {
            let x = sample_orbit(&sys, 700 + seed, -2100, 2);
            let table = contraction_growth_check(&c, &x, &[500, 1000, 2000]).unwrap();
            acc.push(table.tail_slopes()[0]);
            assert!(table.is_diverging());
        }
        let est = Estimate::of(&acc);
        // probe value: 2 lambda_1 ~ 0.6424
        assert!(
            (est.value - 0.6424).abs() < 3.0 * est.stderr.max(0.01),
            "slope {est:?}"
        );
    }
}
