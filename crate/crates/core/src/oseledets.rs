//! Lyapunov spectra and Oseledets splittings.
//!
//! The spectrum estimator is the QR (Benettin) recursion: with `Q_0 = I`,
//!
//! ```text
//! F(T^k x) Q_k = Q_{k+1} R_{k+1},   lambda_i ~ (1/n) sum_k log (R_k)_{ii}
//! ```
//!
//! re-orthogonalizing every step with the positive-diagonal sign convention.
//! An independent norm-growth estimator `(1/n) log ||F_n(x)||` cross-checks
//! the top exponent along a different code path.
//!
//! Finite-horizon Oseledets data comes from singular flags: the backward
//! product attracts generic flags to `psi_-`, the forward product's inverse
//! attracts to `psi_+`, and the splitting lines are the intersections
//! `L_j = E_j(psi_-) ∩ E_{d-j+1}(psi_+)`. The frame of those lines conjugates
//! the one-step cocycle to nearly diagonal form, whose log-diagonals recover
//! the exponents.

use nalgebra::DMatrix;

use crate::cocycle::{evaluate_scaled, CocycleSpec, ScaledMatrix};
use crate::dynamics::{
    first_return_from, par_members, sample_orbit, CylinderIndicator, InducedSystem, OrbitWindow,
    SymbolicSystem,
};
use crate::error::{LabError, Result};
use crate::flagspace::{tuple_from_flag_pair, Flag, LineTuple};
use crate::stats::{median, weighted_quantile, Estimate, Running};

/// Required ratio between consecutive singular values before finite-horizon
/// flags are considered resolved.
pub const SV_GAP_REQUIRED: f64 = 1e3;

/// Adjacent exponents closer than this many combined standard errors are
/// grouped into one multiplicity block.
pub const GROUPING_SIGMA: f64 = 5.0;

/// `|lambda_1|` below this many standard errors classifies as degenerate.
pub const DEGENERATE_SIGMA: f64 = 3.0;

/// `lambda_1` above this many standard errors is confidently positive.
pub const NON_DEGENERATE_SIGMA: f64 = 5.0;

const MIN_QR_DIAGONAL: f64 = 1e-300;

/// Absolute floor below which an estimated exponent or gap is treated as
/// zero (accumulated rounding of exact isometries lands here).
pub const EXPONENT_FLOOR: f64 = 1e-12;

/// Classification of an estimated spectrum, with an explicit fourth outcome
/// for runs whose gaps are unresolved at the sampled precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Simple,
    NonDegenerate,
    Degenerate,
    Inconclusive,
}

/// Sorted Lyapunov exponents with standard errors and multiplicities.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Spectrum {
    /// `lambda_1 >= ... >= lambda_d` in nats per step.
    pub exponents: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Partition `d = d_1 + ... + d_s` grouping statistically equal exponents.
    pub multiplicities: Vec<usize>,
    /// Distinct values `gamma_1 > ... > gamma_s` (means of the groups).
    pub group_values: Vec<f64>,
    pub classification: Classification,
}

impl Spectrum {
    pub fn dimension(&self) -> usize {
        self.exponents.len()
    }

    /// `|sum_i lambda_i|`; zero for SL_d up to sampling error.
    pub fn trace_defect(&self) -> f64 {
        self.exponents.iter().sum::<f64>().abs()
    }

    /// Tolerance for the trace-free check: 5 x total standard error.
    pub fn trace_tolerance(&self) -> f64 {
        5.0 * self.stderrs.iter().sum::<f64>()
    }

    /// Gap `lambda_1 - lambda_2` (NaN in dimension 1).
    pub fn top_gap(&self) -> f64 {
        if self.exponents.len() < 2 {
            f64::NAN
        } else {
            self.exponents[0] - self.exponents[1]
        }
    }
}

fn classify(exponents: &[f64], stderrs: &[f64]) -> (Vec<usize>, Vec<f64>, Classification) {
    let d = exponents.len();
    let gap_sigma = |i: usize| -> f64 {
        (stderrs[i] * stderrs[i] + stderrs[i + 1] * stderrs[i + 1]).sqrt()
    };
    // multiplicity blocks: adjacent exponents grouped when the gap is within
    // GROUPING_SIGMA combined standard errors (ties of exact zeros group too)
    let mut multiplicities = Vec::new();
    let mut group_values = Vec::new();
    let mut start = 0usize;
    for i in 0..d {
        let split = i + 1 == d
            || exponents[i] - exponents[i + 1]
                > (GROUPING_SIGMA * gap_sigma(i)).max(EXPONENT_FLOOR);
        if split {
            let block = &exponents[start..=i];
            multiplicities.push(block.len());
            group_values.push(block.iter().sum::<f64>() / block.len() as f64);
            start = i + 1;
        }
    }
    let degenerate =
        exponents[0].abs() <= (DEGENERATE_SIGMA * stderrs[0]).max(EXPONENT_FLOOR);
    let all_gaps_resolved = multiplicities.len() == d;
    let classification = if degenerate {
        Classification::Degenerate
    } else if all_gaps_resolved {
        Classification::Simple
    } else if exponents[0] >= NON_DEGENERATE_SIGMA * stderrs[0] {
        Classification::NonDegenerate
    } else {
        Classification::Inconclusive
    };
    (multiplicities, group_values, classification)
}

/// A spectrum estimate together with the per-member exponent vectors
/// (columns already in spectrum order).
#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub spectrum: Spectrum,
    pub per_member: Vec<Vec<f64>>,
}

/// One QR step: absorbs `step` (with its log scale) into `q`, accumulating
/// log-diagonals.
fn qr_step(q: &mut DMatrix<f64>, step: &ScaledMatrix, logs: &mut [f64]) -> Result<()> {
    let z = &step.matrix * &*q;
    let qr = z.qr();
    let mut qn = qr.q();
    let r = qr.r();
    for i in 0..logs.len() {
        let mut rii = r[(i, i)];
        if rii < 0.0 {
            rii = -rii;
            for row in 0..qn.nrows() {
                qn[(row, i)] = -qn[(row, i)];
            }
        }
        if !(rii > MIN_QR_DIAGONAL) {
            return Err(LabError::NumericalBreakdown(format!(
                "QR diagonal underflow: r_{i}{i} = {rii:.3e}"
            )));
        }
        logs[i] += rii.ln() + step.log_scale;
    }
    *q = qn;
    Ok(())
}

/// QR estimate of the Lyapunov spectrum over ensemble-averaged orbits.
pub fn lyapunov_spectrum(
    c: &CocycleSpec,
    system: &SymbolicSystem,
    n: u64,
    ensemble: u64,
    seed: u64,
) -> Result<SpectrumRun> {
    if n < 100 {
        return Err(LabError::InvalidConfig("spectrum needs n >= 100".into()));
    }
    if ensemble < 2 {
        return Err(LabError::InvalidConfig("spectrum needs ensemble >= 2".into()));
    }
    let d = c.dimension();
    let (w_lo, w_hi) = c.window();
    let members: Vec<Result<Vec<f64>>> = par_members(ensemble, seed, |_, member_seed| {
        let x = sample_orbit(system, member_seed, w_lo, n as i64 - 1 + w_hi);
        let mut q = DMatrix::identity(d, d);
        let mut logs = vec![0.0; d];
        let mut one = ScaledMatrix::identity(d);
        for k in 0..n as i64 {
            one.matrix.copy_from(c.generator(&x, k)?);
            qr_step(&mut q, &one, &mut logs)?;
        }
        Ok(logs.iter().map(|l| l / n as f64).collect())
    });
    let mut rows = Vec::with_capacity(ensemble as usize);
    for m in members {
        rows.push(m?);
    }
    finish_spectrum(rows)
}

fn finish_spectrum(rows: Vec<Vec<f64>>) -> Result<SpectrumRun> {
    let d = rows[0].len();
    let mut acc = vec![Running::default(); d];
    for row in &rows {
        for (i, &v) in row.iter().enumerate() {
            acc[i].push(v);
        }
    }
    // sort positions by ensemble mean, descending; per-member columns follow
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| acc[b].mean().total_cmp(&acc[a].mean()));
    let exponents: Vec<f64> = order.iter().map(|&i| acc[i].mean()).collect();
    let stderrs: Vec<f64> = order.iter().map(|&i| acc[i].stderr()).collect();
    let per_member: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| order.iter().map(|&i| row[i]).collect())
        .collect();
    let (multiplicities, group_values, classification) = classify(&exponents, &stderrs);
    Ok(SpectrumRun {
        spectrum: Spectrum {
            exponents,
            stderrs,
            multiplicities,
            group_values,
            classification,
        },
        per_member,
    })
}

/// Independent top-exponent estimator: `(1/n) log ||F_n(x)||` averaged over
/// fresh orbits. Shares no code path with the QR recursion.
pub fn norm_growth_oracle(
    c: &CocycleSpec,
    system: &SymbolicSystem,
    n: u64,
    ensemble: u64,
    seed: u64,
) -> Result<Estimate> {
    let (w_lo, w_hi) = c.window();
    let members: Vec<Result<f64>> = par_members(ensemble, seed, |_, member_seed| {
        let x = sample_orbit(system, member_seed, w_lo, n as i64 - 1 + w_hi);
        let prod = evaluate_scaled(c, &x, n as i64)?;
        Ok(prod.log_operator_norm() / n as f64)
    });
    let mut acc = Running::default();
    for m in members {
        acc.push(m?);
    }
    Ok(Estimate::of(&acc))
}

/// Singular data of a product, sorted by decreasing singular value.
struct SortedSvd {
    sigma: Vec<f64>,
    /// right singular vectors as columns, sigma-descending
    v: DMatrix<f64>,
}

fn sorted_svd(m: &DMatrix<f64>) -> SortedSvd {
    let d = m.nrows();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = DMatrix::from_fn(d, d, |r, c| vt[(order[c], r)]);
    SortedSvd { sigma, v }
}

fn check_sv_gaps(sigma: &[f64]) -> Result<f64> {
    if !(sigma[0] > 0.0) {
        return Err(LabError::NumericalBreakdown(
            "vanishing top singular value in product".into(),
        ));
    }
    let mut min_ratio = f64::INFINITY;
    for i in 0..sigma.len() - 1 {
        // a small singular value rounded to zero means the contraction is
        // resolved beyond double precision, not that the gap is missing
        if sigma[i + 1] > 0.0 {
            min_ratio = min_ratio.min(sigma[i] / sigma[i + 1]);
        }
    }
    if min_ratio < SV_GAP_REQUIRED {
        return Err(LabError::InsufficientGap { min_ratio, required: SV_GAP_REQUIRED });
    }
    Ok(min_ratio)
}

/// Flag whose `E_j` is spanned by the right singular vectors of `m` with the
/// `j` smallest singular values (the attracting flag of `m^{-1}`).
fn inverse_attracting_flag(m: &ScaledMatrix) -> Result<(Flag, f64)> {
    let svd = sorted_svd(&m.matrix);
    let min_ratio = check_sv_gaps(&svd.sigma)?;
    let d = svd.v.nrows();
    let reversed = DMatrix::from_fn(d, d, |r, c| svd.v[(r, d - 1 - c)]);
    Ok((Flag::from_orthonormal(reversed)?, min_ratio))
}

/// Log singular values of `F_n(x)` (`n >= 1`), sorted decreasing, computed
/// by QR accumulation.
///
/// A direct SVD loses the small singular values to rounding once the
/// condition number passes ~1e15; the accumulated QR log-diagonals stay
/// finite at any depth, are exact for diagonal and isometric tables, and
/// differ from the true values by an alignment transient that is O(1) in
/// the depth.
pub(crate) fn product_log_singular_values_stable(
    c: &CocycleSpec,
    x: &mut OrbitWindow,
    n: u64,
) -> Result<Vec<f64>> {
    let d = c.dimension();
    let (lo, hi) = c.coordinates_needed(n as i64);
    x.extend(lo, hi);
    let mut q = DMatrix::identity(d, d);
    let mut logs = vec![0.0; d];
    let mut one = ScaledMatrix::identity(d);
    for k in 0..n as i64 {
        one.matrix.copy_from(c.generator(x, k)?);
        qr_step(&mut q, &one, &mut logs)?;
    }
    logs.sort_by(|a, b| b.total_cmp(a));
    Ok(logs)
}

/// `psi_-` alone: the attracting flag of the backward product
/// `F(T^{-1}x)...F(T^{-n}x)`, with its resolved gap ratio.
pub(crate) fn backward_attracting_flag(
    c: &CocycleSpec,
    x: &mut OrbitWindow,
    n: u64,
) -> Result<(Flag, f64)> {
    let (blo, bhi) = c.coordinates_needed(-(n as i64));
    x.extend(blo, bhi);
    let backward = evaluate_scaled(c, x, -(n as i64))?;
    inverse_attracting_flag(&backward)
}

/// Finite-horizon Oseledets flags at a point.
#[derive(Debug, Clone)]
pub struct OseledetsFlags {
    /// Attracting flag of deep-past forward products (fastest growth first).
    pub psi_minus: Flag,
    /// Attracting flag for the time-reversed dynamics.
    pub psi_plus: Flag,
    /// `min_j |det[E_j(psi_-) | E_{d-j}(psi_+)]|`.
    pub transversality: f64,
    /// Smallest consecutive singular value ratio seen in the two products.
    pub min_gap_ratio: f64,
}

/// Computes `psi_+/psi_-` from the length-`n` forward and backward products.
pub fn oseledets_flags(c: &CocycleSpec, x: &mut OrbitWindow, n: u64) -> Result<OseledetsFlags> {
    let n = n as i64;
    let (flo, fhi) = c.coordinates_needed(n);
    let (blo, bhi) = c.coordinates_needed(-n);
    x.extend(flo.min(blo), fhi.max(bhi));

    // psi_+: attracting flag of F_n(x)^{-1}
    let forward = evaluate_scaled(c, x, n)?;
    let (psi_plus, gap_f) = inverse_attracting_flag(&forward)?;
    // psi_-: attracting flag of B_n = F(T^{-1}x)...F(T^{-n}x) = F_{-n}(x)^{-1}
    let backward = evaluate_scaled(c, x, -n)?;
    let (psi_minus, gap_b) = inverse_attracting_flag(&backward)?;

    let d = c.dimension();
    let mut transversality = f64::INFINITY;
    for j in 1..d {
        let mut stacked = DMatrix::zeros(d, d);
        stacked
            .columns_mut(0, j)
            .copy_from(&psi_minus.basis().columns(0, j));
        stacked
            .columns_mut(j, d - j)
            .copy_from(&psi_plus.basis().columns(0, d - j));
        transversality = transversality.min(stacked.determinant().abs());
    }
    Ok(OseledetsFlags {
        psi_minus,
        psi_plus,
        transversality,
        min_gap_ratio: gap_f.min(gap_b),
    })
}

/// A frame of unit vectors spanning the Oseledets lines in exponent order.
#[derive(Debug, Clone)]
pub struct OseledetsFrame {
    /// Column `j` spans `L_{j+1}(x)`.
    pub columns: DMatrix<f64>,
    /// Smallest singular value of the column matrix.
    pub conditioning: f64,
}

impl OseledetsFrame {
    fn from_tuple(t: &LineTuple) -> OseledetsFrame {
        let d = t.dimension();
        let columns = DMatrix::from_fn(d, d, |i, j| t.line(j)[i]);
        let sv = columns.clone().singular_values();
        let conditioning = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        OseledetsFrame { columns, conditioning }
    }
}

/// Frame at `x` plus the conjugated one-step matrix
/// `D(x) = C(Tx)^{-1} F(x) C(x)`, which the splitting makes nearly diagonal.
#[derive(Debug, Clone)]
pub struct FrameReport {
    pub frame: OseledetsFrame,
    pub conjugated: DMatrix<f64>,
    /// `||offdiag(D)||_F / ||D||_F`.
    pub off_diagonal_mass: f64,
    /// `log |D_ii|` in exponent order.
    pub log_diagonal: Vec<f64>,
}

fn splitting_tuple(c: &CocycleSpec, x: &mut OrbitWindow, n: u64) -> Result<LineTuple> {
    let flags = oseledets_flags(c, x, n)?;
    tuple_from_flag_pair(&flags.psi_minus, &flags.psi_plus)
}

/// Computes the diagonalizing frame from depth-`n` flags at `x` and `Tx`.
pub fn frame(c: &CocycleSpec, x: &mut OrbitWindow, n: u64) -> Result<FrameReport> {
    let here = splitting_tuple(c, x, n)?;
    let mut shifted = x.shift(1);
    let there = splitting_tuple(c, &mut shifted, n)?;
    let f_here = OseledetsFrame::from_tuple(&here);
    let f_there = OseledetsFrame::from_tuple(&there);
    let (w_lo, w_hi) = c.window();
    x.extend(w_lo, w_hi);
    let g = c.generator(x, 0)?;
    let inv = f_there.columns.clone().try_inverse().ok_or(LabError::NotTransverse {
        margin: f_there.conditioning,
    })?;
    let conjugated = inv * g * &f_here.columns;
    let d = c.dimension();
    let mut off = 0.0;
    let mut total = 0.0;
    let mut log_diagonal = Vec::with_capacity(d);
    for i in 0..d {
        for j in 0..d {
            let v = conjugated[(i, j)] * conjugated[(i, j)];
            total += v;
            if i != j {
                off += v;
            }
        }
        log_diagonal.push(conjugated[(i, i)].abs().ln());
    }
    Ok(FrameReport {
        frame: f_here,
        conjugated,
        off_diagonal_mass: (off / total).sqrt(),
        log_diagonal,
    })
}

/// Per-subspace equivariance defect statistics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EquivarianceReport {
    /// Per `j`: (median, 95th percentile) of `sin angle(F(x) L_j(x), L_j(Tx))`.
    pub per_line: Vec<(f64, f64)>,
    /// Fraction of sampled points where flags or intersections degenerated.
    pub failed_fraction: f64,
    pub samples: u64,
}

/// Measures `sin` of the angle between `F(x) L_j(x)` and `L_j(Tx)` over an
/// ensemble of fresh points.
///
/// Individual samples with unresolved gaps are counted in `failed_fraction`;
/// the call errors only if every sample fails.
pub fn equivariance_check(
    c: &CocycleSpec,
    system: &SymbolicSystem,
    n: u64,
    ensemble: u64,
    seed: u64,
) -> Result<EquivarianceReport> {
    let d = c.dimension();
    let members: Vec<Result<Vec<f64>>> = par_members(ensemble, seed, |_, member_seed| {
        let mut x = sample_orbit(system, member_seed, 0, 0);
        let here = splitting_tuple(c, &mut x, n)?;
        let mut shifted = x.shift(1);
        let there = splitting_tuple(c, &mut shifted, n)?;
        let g = c.generator(&x, 0)?;
        let mut sines = Vec::with_capacity(d);
        for j in 0..d {
            let pushed = g * here.line(j);
            let pushed = &pushed / pushed.norm();
            let cos = pushed.dot(there.line(j)).abs().clamp(0.0, 1.0);
            sines.push((1.0 - cos * cos).max(0.0).sqrt());
        }
        Ok(sines)
    });
    let mut ok_rows: Vec<Vec<f64>> = Vec::new();
    let mut failed = 0u64;
    let mut last_err = None;
    for m in members {
        match m {
            Ok(row) => ok_rows.push(row),
            Err(e @ (LabError::InsufficientGap { .. } | LabError::NotTransverse { .. })) => {
                failed += 1;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if ok_rows.is_empty() {
        return Err(last_err.unwrap_or(LabError::InsufficientGap {
            min_ratio: 0.0,
            required: SV_GAP_REQUIRED,
        }));
    }
    let per_line = (0..d)
        .map(|j| {
            let col: Vec<f64> = ok_rows.iter().map(|r| r[j]).collect();
            let w = vec![1.0; col.len()];
            (median(&col), weighted_quantile(&col, &w, 0.95))
        })
        .collect();
    Ok(EquivarianceReport {
        per_line,
        failed_fraction: failed as f64 / ensemble as f64,
        samples: ensemble,
    })
}

/// Indicator of the points whose depth-`depth` Oseledets frame is resolved
/// and has conditioning above `threshold` — a computable stand-in for the
/// compactness conditions defining the inducing set.
pub fn frame_conditioning_indicator(
    c: &CocycleSpec,
    depth: u64,
    threshold: f64,
) -> CylinderIndicator {
    let c = c.clone();
    let n = depth as i64;
    let (flo, fhi) = c.coordinates_needed(n);
    let (blo, bhi) = c.coordinates_needed(-n);
    let lo = flo.min(blo);
    let hi = fhi.max(bhi);
    CylinderIndicator::new(lo, hi, move |syms| {
        let fwd = match c.product_over_slice(syms, lo, n) {
            Ok(m) => m,
            Err(_) => return false,
        };
        let back = match c.product_over_slice(syms, lo, -n) {
            Ok(m) => m,
            Err(_) => return false,
        };
        let plus = match inverse_attracting_flag(&fwd) {
            Ok((f, _)) => f,
            Err(_) => return false,
        };
        let minus = match inverse_attracting_flag(&back) {
            Ok((f, _)) => f,
            Err(_) => return false,
        };
        match tuple_from_flag_pair(&minus, &plus) {
            Ok(t) => OseledetsFrame::from_tuple(&t).conditioning > threshold,
            Err(_) => false,
        }
    })
}

/// Configuration for the induced-system rescaling check.
#[derive(Debug, Clone, Copy)]
pub struct InducedCheckConfig {
    /// Orbit length for the base spectrum.
    pub base_n: u64,
    /// Induced steps per ensemble member.
    pub induced_steps: u64,
    pub ensemble: u64,
    /// Sample count for the mass / Kac measurement.
    pub mass_ensemble: u64,
    pub return_cap: u64,
    pub seed: u64,
}

/// Comparison of the base spectrum with the induced spectrum, against the
/// Kakutani prediction `Lambda* = Lambda / m(X*)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InducedSpectrumReport {
    pub base: Spectrum,
    pub induced: Spectrum,
    pub measured_mass: Estimate,
    pub mean_return: Estimate,
    pub kac_sigma: f64,
    /// `lambda*_i / lambda_i` for exponents resolved away from zero (NaN
    /// where the base exponent is consistent with zero).
    pub ratios: Vec<f64>,
    pub expected_ratio: f64,
    /// `max_i |ratio_i - expected| / expected` over resolved exponents.
    pub max_ratio_rel_deviation: f64,
    /// Norm-growth estimate of `lambda*_1` on the induced products.
    pub oracle_lambda1_star: Estimate,
}

/// Estimates the spectrum of the induced cocycle `F*(x) = F_{n(x)}(x)` over
/// the first-return system and reports proportionality with the base.
pub fn induced_spectrum_check(
    c: &CocycleSpec,
    system: &SymbolicSystem,
    indicator: &CylinderIndicator,
    cfg: InducedCheckConfig,
) -> Result<InducedSpectrumReport> {
    let induced_sys: InducedSystem = crate::dynamics::induce(
        system,
        indicator,
        cfg.mass_ensemble,
        crate::rng::derive(cfg.seed, 1),
        cfg.return_cap,
    )?;
    let base = lyapunov_spectrum(c, system, cfg.base_n, cfg.ensemble, crate::rng::derive(cfg.seed, 2))?;

    let d = c.dimension();
    let members: Vec<Result<(Vec<f64>, f64)>> =
        par_members(cfg.ensemble, crate::rng::derive(cfg.seed, 3), |_, member_seed| {
            let mut x = induced_sys.sample_start(member_seed)?;
            let mut q = DMatrix::identity(d, d);
            let mut logs = vec![0.0; d];
            let mut one = ScaledMatrix::identity(d);
            let mut oracle = ScaledMatrix::identity(d);
            let mut t = 0i64;
            for _ in 0..cfg.induced_steps {
                let r = first_return_from(indicator, &mut x, t, cfg.return_cap)? as i64;
                let (plo, phi) = c.coordinates_needed(r);
                x.extend(t + plo, t + phi);
                // one long return can exceed single-factorization precision;
                // re-orthogonalize per base step (the log-diagonals telescope
                // to the same induced-step accumulation)
                for k in t..t + r {
                    let g = c.generator(&x, k)?;
                    one.matrix.copy_from(g);
                    qr_step(&mut q, &one, &mut logs)?;
                    oracle.apply_left(g);
                }
                t += r;
            }
            let lams = logs.iter().map(|l| l / cfg.induced_steps as f64).collect();
            Ok((lams, oracle.log_operator_norm() / cfg.induced_steps as f64))
        });

    let mut rows = Vec::new();
    let mut oracle_acc = Running::default();
    for m in members {
        let (lams, oracle) = m?;
        rows.push(lams);
        oracle_acc.push(oracle);
    }
    let induced = finish_spectrum(rows)?;

    let expected_ratio = 1.0 / induced_sys.measured_mass.value;
    let mut ratios = Vec::with_capacity(d);
    let mut max_dev: f64 = 0.0;
    for i in 0..d {
        let lam = base.spectrum.exponents[i];
        let se = base.spectrum.stderrs[i];
        if lam.abs() > (10.0 * se).max(1e-9) {
            let ratio = induced.spectrum.exponents[i] / lam;
            max_dev = max_dev.max((ratio - expected_ratio).abs() / expected_ratio);
            ratios.push(ratio);
        } else {
            ratios.push(f64::NAN);
        }
    }
    Ok(InducedSpectrumReport {
        base: base.spectrum,
        induced: induced.spectrum,
        measured_mass: induced_sys.measured_mass,
        mean_return: induced_sys.mean_return,
        kac_sigma: induced_sys.kac_sigma,
        ratios,
        expected_ratio,
        max_ratio_rel_deviation: max_dev,
        oracle_lambda1_star: Estimate::of(&oracle_acc),
    })
}
