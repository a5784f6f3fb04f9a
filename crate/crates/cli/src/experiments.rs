//! Experiment configurations and runners.
//!
//! Each experiment is described by one JSON file tagged with `"experiment"`;
//! runners return the summary object plus CSV rows, and the caller handles
//! all file I/O so failed runs write nothing.

use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::json;

use cocyclelab::dynamics::DEFAULT_RETURN_CAP;
use cocyclelab::fgboundary::{enumerate_cylinders, BoundarySet, HdFallback};
use cocyclelab::oseledets::InducedCheckConfig;
use cocyclelab::stationary::SubspaceLocus;
use cocyclelab::{
    boundary_skew_invariance, dirac_contraction, equivariance_check, estimate_stationary,
    frame, furstenberg_top_exponent, harmonic_measure, induced_spectrum_check,
    lyapunov_spectrum, martingale_check, norm_growth_oracle, oseledets_flags, sample_orbit,
    skew_ergodicity_test, CocycleConfig, CylinderIndicator, LabError, PathEnsemble, ReducedWord,
    Result, SkewObservable, SystemConfig,
};

use crate::output::{fmt_f64, Csv};

/// The result of a run: a one-line console summary, the summary object, and
/// the per-sample CSV.
pub struct Artifacts {
    pub line: String,
    pub summary: serde_json::Value,
    pub csv: Csv,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "experiment", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExperimentConfig {
    Spectrum(SpectrumExperiment),
    Stationary(StationaryExperiment),
    Induce(InduceExperiment),
    Boundary(BoundaryExperiment),
    Flags(FlagsExperiment),
    Skew(SkewExperiment),
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Spectrum(_) => "spectrum",
            ExperimentConfig::Stationary(_) => "stationary",
            ExperimentConfig::Induce(_) => "induce",
            ExperimentConfig::Boundary(_) => "boundary",
            ExperimentConfig::Flags(_) => "flags",
            ExperimentConfig::Skew(_) => "skew",
        }
    }

    pub fn out(&self) -> Option<&str> {
        match self {
            ExperimentConfig::Spectrum(e) => e.out.as_deref(),
            ExperimentConfig::Stationary(e) => e.out.as_deref(),
            ExperimentConfig::Induce(e) => e.out.as_deref(),
            ExperimentConfig::Boundary(e) => e.out.as_deref(),
            ExperimentConfig::Flags(e) => e.out.as_deref(),
            ExperimentConfig::Skew(e) => e.out.as_deref(),
        }
    }

    pub fn override_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Spectrum(e) => e.seed = seed,
            ExperimentConfig::Stationary(e) => e.seed = seed,
            ExperimentConfig::Induce(e) => e.seed = seed,
            ExperimentConfig::Boundary(e) => e.seed = seed,
            ExperimentConfig::Flags(e) => e.seed = seed,
            ExperimentConfig::Skew(e) => e.seed = seed,
        }
    }

    pub fn run(&self) -> Result<Artifacts> {
        match self {
            ExperimentConfig::Spectrum(e) => e.run(),
            ExperimentConfig::Stationary(e) => e.run(),
            ExperimentConfig::Induce(e) => e.run(),
            ExperimentConfig::Boundary(e) => e.run(),
            ExperimentConfig::Flags(e) => e.run(),
            ExperimentConfig::Skew(e) => e.run(),
        }
    }
}

fn classification_name(c: cocyclelab::Classification) -> &'static str {
    match c {
        cocyclelab::Classification::Simple => "simple",
        cocyclelab::Classification::NonDegenerate => "non_degenerate",
        cocyclelab::Classification::Degenerate => "degenerate",
        cocyclelab::Classification::Inconclusive => "inconclusive",
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumExperiment {
    pub system: SystemConfig,
    pub cocycle: CocycleConfig,
    pub n: u64,
    pub ensemble: u64,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub oracle: bool,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_true() -> bool {
    true
}

impl SpectrumExperiment {
    fn run(&self) -> Result<Artifacts> {
        let system = self.system.build()?;
        let cocycle = self.cocycle.build(&system)?;
        let run = lyapunov_spectrum(&cocycle, &system, self.n, self.ensemble, self.seed)?;
        let s = &run.spectrum;
        let oracle = if self.oracle {
            let o = norm_growth_oracle(
                &cocycle,
                &system,
                self.n,
                self.ensemble,
                cocyclelab::rng::derive(self.seed, 0x4f52_4143_4c45),
            )?;
            let sigma = if (s.exponents[0] - o.value).abs() <= 1e-12 {
                0.0
            } else {
                cocyclelab::Estimate::new(s.exponents[0], s.stderrs[0])
                    .sigma_distance(o.value, o.stderr)
            };
            json!({"lambda1": o.value, "stderr": o.stderr, "sigma_vs_qr": sigma})
        } else {
            serde_json::Value::Null
        };
        let summary = json!({
            "experiment": "spectrum",
            "n": self.n,
            "ensemble": self.ensemble,
            "seed": self.seed,
            "exponents": s.exponents,
            "stderrs": s.stderrs,
            "multiplicities": s.multiplicities,
            "group_values": s.group_values,
            "classification": classification_name(s.classification),
            "trace_defect": s.trace_defect(),
            "oracle": oracle,
        });
        let d = s.dimension();
        let header = (1..=d)
            .map(|i| format!("lambda_{i}"))
            .collect::<Vec<_>>()
            .join(",");
        let mut csv = Csv::new(&format!("member,{header}"));
        for (m, row) in run.per_member.iter().enumerate() {
            let mut fields = vec![m.to_string()];
            fields.extend(row.iter().map(|v| fmt_f64(*v)));
            csv.row(&fields);
        }
        let line = format!(
            "spectrum: lambda = [{}], classification = {}",
            s.exponents
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>()
                .join(", "),
            classification_name(s.classification)
        );
        Ok(Artifacts { line, summary, csv })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceSpec {
    pub label: String,
    /// Spanning vectors (rows).
    pub span: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionSpec {
    pub n_list: Vec<u64>,
    pub points: u64,
    #[serde(default)]
    pub diameter_threshold: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryExperiment {
    pub system: SystemConfig,
    pub cocycle: CocycleConfig,
    pub burn: u64,
    pub samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub subspaces: Vec<SubspaceSpec>,
    #[serde(default)]
    pub eps_grid: Vec<f64>,
    #[serde(default)]
    pub contraction: Option<ContractionSpec>,
    #[serde(default)]
    pub out: Option<String>,
}

impl StationaryExperiment {
    fn run(&self) -> Result<Artifacts> {
        let system = self.system.build()?;
        let cocycle = self.cocycle.build(&system)?;
        let est = estimate_stationary(&cocycle, &system, self.burn, self.samples, self.seed)?;
        let top = furstenberg_top_exponent(
            &cocycle,
            &system,
            &est.measure,
            cocyclelab::rng::derive(self.seed, 0x4655_5253_54),
        )?;

        let mut csv = Csv::new("section,label,x,value,stderr");
        for (m, row) in est.panel.iter().enumerate() {
            csv.row(&[
                "panel".into(),
                format!("f{m}"),
                m.to_string(),
                fmt_f64(row.mean),
                fmt_f64(row.sigma),
            ]);
        }

        let properness = if !self.subspaces.is_empty() && !self.eps_grid.is_empty() {
            let loci: Result<Vec<SubspaceLocus>> = self
                .subspaces
                .iter()
                .map(|s| {
                    let d = cocycle.dimension();
                    if s.span.iter().any(|v| v.len() != d) {
                        return Err(LabError::InvalidConfig(format!(
                            "subspace {} span vectors must have length {d}",
                            s.label
                        )));
                    }
                    let m = DMatrix::from_fn(d, s.span.len(), |i, j| s.span[j][i]);
                    SubspaceLocus::new(s.label.clone(), m)
                })
                .collect();
            let report = cocyclelab::properness_profile(&est.measure, &loci?, &self.eps_grid)?;
            for p in &report.per_subspace {
                for &(eps, mass) in &p.masses {
                    csv.row(&[
                        "properness".into(),
                        p.label.clone(),
                        fmt_f64(eps),
                        fmt_f64(mass),
                        String::new(),
                    ]);
                }
            }
            json!({
                "proper": report.proper,
                "max_atom_weight": report.max_atom_weight,
                "atom_count": report.atom_count,
                "subspaces": report.per_subspace.iter().map(|p| json!({
                    "label": p.label,
                    "fitted_exponent": p.fitted_exponent,
                    "exponent_stderr": p.exponent_stderr,
                    "exponent_ci_low": p.exponent_ci_low,
                })).collect::<Vec<_>>(),
            })
        } else {
            serde_json::Value::Null
        };

        let contraction = if let Some(cfg) = &self.contraction {
            let threshold = cfg.diameter_threshold.unwrap_or(0.01);
            // diameter estimation is quadratic in the atom count; a few
            // hundred atoms resolve a 90th percentile fine
            let nu = est.measure.truncated(256);
            let mut final_diams = Vec::new();
            let mut monotone = 0u64;
            let mut last_curve = None;
            for p in 0..cfg.points {
                let deepest = *cfg.n_list.iter().max().unwrap() as i64;
                let x = sample_orbit(
                    &system,
                    cocyclelab::rng::derive(self.seed, 0x434f_4e54 ^ p),
                    -(deepest + 2),
                    2,
                );
                let curve = dirac_contraction(&cocycle, &x, &nu, &cfg.n_list)?;
                if curve.is_monotone_within(0.05) {
                    monotone += 1;
                }
                final_diams.push(curve.rows.last().unwrap().diameter);
                last_curve = Some(curve);
            }
            if let Some(curve) = &last_curve {
                for row in &curve.rows {
                    csv.row(&[
                        "contraction".into(),
                        "diameter".into(),
                        row.n.to_string(),
                        fmt_f64(row.diameter),
                        String::new(),
                    ]);
                }
            }
            let small = final_diams.iter().filter(|&&d| d < threshold).count();
            json!({
                "points": cfg.points,
                "final_diameter_below_threshold_fraction":
                    small as f64 / cfg.points.max(1) as f64,
                "threshold": threshold,
                "monotone_fraction": monotone as f64 / cfg.points.max(1) as f64,
            })
        } else {
            serde_json::Value::Null
        };

        let summary = json!({
            "experiment": "stationary",
            "burn": self.burn,
            "samples": self.samples,
            "seed": self.seed,
            "max_refresh_sigma": est.max_refresh_sigma,
            "furstenberg_lambda1": {"value": top.value, "stderr": top.stderr},
            "properness": properness,
            "contraction": contraction,
        });
        let line = format!(
            "stationary: {} atoms, refresh max {:.2} sigma, furstenberg lambda1 = {:.6}",
            est.measure.len(),
            est.max_refresh_sigma,
            top.value
        );
        Ok(Artifacts { line, summary, csv })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSpec {
    /// Equality constraints `x_offset = symbol`.
    pub equals: Vec<(i64, String)>,
}

impl IndicatorSpec {
    pub fn build(&self, system: &cocyclelab::SymbolicSystem) -> Result<CylinderIndicator> {
        if self.equals.is_empty() {
            return Err(LabError::InvalidConfig("empty indicator".into()));
        }
        let mut constraints = Vec::with_capacity(self.equals.len());
        for (off, name) in &self.equals {
            constraints.push((*off, system.symbol_index(name)?));
        }
        Ok(CylinderIndicator::equals(constraints))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InduceExperiment {
    pub system: SystemConfig,
    pub cocycle: CocycleConfig,
    pub indicator: IndicatorSpec,
    pub base_n: u64,
    pub induced_steps: u64,
    pub ensemble: u64,
    pub mass_ensemble: u64,
    #[serde(default = "default_return_cap")]
    pub return_cap: u64,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_return_cap() -> u64 {
    DEFAULT_RETURN_CAP
}

impl InduceExperiment {
    fn run(&self) -> Result<Artifacts> {
        let system = self.system.build()?;
        let cocycle = self.cocycle.build(&system)?;
        let indicator = self.indicator.build(&system)?;
        let report = induced_spectrum_check(
            &cocycle,
            &system,
            &indicator,
            InducedCheckConfig {
                base_n: self.base_n,
                induced_steps: self.induced_steps,
                ensemble: self.ensemble,
                mass_ensemble: self.mass_ensemble,
                return_cap: self.return_cap,
                seed: self.seed,
            },
        )?;
        let summary = json!({
            "experiment": "induce",
            "seed": self.seed,
            "measured_mass": {"value": report.measured_mass.value, "stderr": report.measured_mass.stderr},
            "mean_return": {"value": report.mean_return.value, "stderr": report.mean_return.stderr},
            "kac_sigma": report.kac_sigma,
            "base_exponents": report.base.exponents,
            "induced_exponents": report.induced.exponents,
            "ratios": report.ratios,
            "expected_ratio": report.expected_ratio,
            "max_ratio_rel_deviation": report.max_ratio_rel_deviation,
            "oracle_lambda1_star": {"value": report.oracle_lambda1_star.value, "stderr": report.oracle_lambda1_star.stderr},
        });
        let mut csv = Csv::new("i,lambda,lambda_star,ratio");
        for i in 0..report.base.exponents.len() {
            csv.row(&[
                (i + 1).to_string(),
                fmt_f64(report.base.exponents[i]),
                fmt_f64(report.induced.exponents[i]),
                fmt_f64(report.ratios[i]),
            ]);
        }
        let line = format!(
            "induce: mass = {:.4}, ratio = {:.4} (expected {:.4}), kac = {:.2} sigma",
            report.measured_mass.value,
            report.ratios[0],
            report.expected_ratio,
            report.kac_sigma
        );
        Ok(Artifacts { line, summary, csv })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleSpec {
    pub cylinder: String,
    pub eps: f64,
    pub grid: Vec<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewInvarianceSpec {
    pub omega_depth: usize,
    pub cylinder_len: usize,
    pub n_shift: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryExperiment {
    /// Free group rank.
    pub k: usize,
    /// Step law over `a_1..a_k, a_1^{-1}..a_k^{-1}`; omitted means uniform.
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    pub count: u64,
    /// Walk horizon.
    pub n: u64,
    pub seed: u64,
    #[serde(default = "default_stability")]
    pub stability: usize,
    #[serde(default)]
    pub cylinders: Vec<String>,
    #[serde(default)]
    pub martingale: Option<MartingaleSpec>,
    #[serde(default)]
    pub skew: Option<SkewInvarianceSpec>,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_stability() -> usize {
    50
}

impl BoundaryExperiment {
    fn ensemble(&self) -> Result<PathEnsemble> {
        match &self.mu {
            Some(mu) => PathEnsemble::new(self.k, mu.clone(), self.count, self.n, self.seed),
            None => PathEnsemble::uniform(self.k, self.count, self.n, self.seed),
        }
    }

    fn run(&self) -> Result<Artifacts> {
        let e = self.ensemble()?;
        let cylinders: Result<Vec<ReducedWord>> =
            self.cylinders.iter().map(|s| ReducedWord::parse(s)).collect();
        let cylinders = cylinders?;
        let mut csv = Csv::new("section,label,x,value,stderr");

        let hm = harmonic_measure(&e, &cylinders, self.stability);
        for (cyl, est) in &hm.estimates {
            csv.row(&[
                "harmonic".into(),
                cyl.to_text(),
                cyl.len().to_string(),
                fmt_f64(est.value),
                fmt_f64(est.stderr),
            ]);
        }
        let harmonic = json!({
            "resolved": hm.resolved,
            "total": hm.total,
            "cylinders": hm.estimates.iter().map(|(c, est)| json!({
                "cylinder": c.to_text(),
                "value": est.value,
                "stderr": est.stderr,
            })).collect::<Vec<_>>(),
        });

        let martingale = if let Some(m) = &self.martingale {
            let target = BoundarySet::Cylinder(ReducedWord::parse(&m.cylinder)?);
            let curve = martingale_check(
                &e,
                &target,
                m.eps,
                &m.grid,
                self.stability,
                &HdFallback::default(),
            )?;
            for row in &curve.rows {
                csv.row(&[
                    "martingale".into(),
                    m.cylinder.clone(),
                    row.n.to_string(),
                    fmt_f64(row.fraction),
                    fmt_f64(row.stderr),
                ]);
            }
            json!({
                "cylinder": m.cylinder,
                "eps": m.eps,
                "decided": curve.decided,
                "final_fraction": curve.rows.last().map(|r| r.fraction),
                "rows": curve.rows.iter().map(|r| json!({
                    "n": r.n, "fraction": r.fraction, "stderr": r.stderr
                })).collect::<Vec<_>>(),
            })
        } else {
            serde_json::Value::Null
        };

        let skew = if let Some(s) = &self.skew {
            let cyls = enumerate_cylinders(e.rank, s.cylinder_len);
            let rep =
                boundary_skew_invariance(&e, &cyls, s.omega_depth, s.n_shift, self.stability)?;
            for cell in rep.cells.iter() {
                csv.row(&[
                    "skew".into(),
                    format!("{}|{}", cell.omega_prefix, cell.boundary_prefix),
                    s.n_shift.to_string(),
                    fmt_f64(cell.after - cell.before),
                    fmt_f64(cell.sigma),
                ]);
            }
            json!({
                "n_shift": s.n_shift,
                "max_sigma": rep.max_sigma,
                "samples": rep.samples,
                "cells": rep.cells.len(),
            })
        } else {
            serde_json::Value::Null
        };

        let summary = json!({
            "experiment": "boundary",
            "k": self.k,
            "count": self.count,
            "n": self.n,
            "seed": self.seed,
            "harmonic": harmonic,
            "martingale": martingale,
            "skew": skew,
        });
        let line = format!(
            "boundary: {}/{} paths resolved{}",
            hm.resolved,
            hm.total,
            self.martingale
                .as_ref()
                .and_then(|_| summary["martingale"]["final_fraction"].as_f64())
                .map(|f| format!(", martingale final fraction {f:.4}"))
                .unwrap_or_default()
        );
        Ok(Artifacts { line, summary, csv })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsExperiment {
    pub system: SystemConfig,
    pub cocycle: CocycleConfig,
    /// Product depth for the finite-horizon flags.
    pub n: u64,
    pub ensemble: u64,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

impl FlagsExperiment {
    fn run(&self) -> Result<Artifacts> {
        let system = self.system.build()?;
        let cocycle = self.cocycle.build(&system)?;

        let mut csv = Csv::new("member,transversality,min_gap_ratio,off_diagonal_mass");
        let mut transversal = 0u64;
        let mut off_masses = Vec::new();
        let mut failures = 0u64;
        let mut last_err: Option<LabError> = None;
        for member in 0..self.ensemble {
            let mut x = sample_orbit(
                &system,
                cocyclelab::rng::derive(self.seed, member),
                0,
                0,
            );
            let degenerate = |e: &LabError| {
                matches!(
                    e,
                    LabError::InsufficientGap { .. } | LabError::NotTransverse { .. }
                )
            };
            match oseledets_flags(&cocycle, &mut x, self.n)
                .and_then(|f| Ok((f, frame(&cocycle, &mut x, self.n)?)))
            {
                Ok((f, fr)) => {
                    if f.transversality > 1e-6 {
                        transversal += 1;
                    }
                    off_masses.push(fr.off_diagonal_mass);
                    csv.row(&[
                        member.to_string(),
                        fmt_f64(f.transversality),
                        fmt_f64(f.min_gap_ratio),
                        fmt_f64(fr.off_diagonal_mass),
                    ]);
                }
                Err(e) if degenerate(&e) => {
                    failures += 1;
                    last_err = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        if off_masses.is_empty() {
            return Err(last_err.unwrap_or(LabError::InsufficientGap {
                min_ratio: 0.0,
                required: cocyclelab::oseledets::SV_GAP_REQUIRED,
            }));
        }
        let equiv = equivariance_check(
            &cocycle,
            &system,
            self.n,
            self.ensemble,
            cocyclelab::rng::derive(self.seed, 0x4551_5549),
        )?;
        let median_off = cocyclelab::stats::median(&off_masses);
        let summary = json!({
            "experiment": "flags",
            "n": self.n,
            "ensemble": self.ensemble,
            "seed": self.seed,
            "transverse_fraction": transversal as f64 / self.ensemble as f64,
            "failed_fraction": failures as f64 / self.ensemble as f64,
            "median_off_diagonal_mass": median_off,
            "equivariance": {
                "per_line": equiv.per_line.iter().map(|&(med, p95)| json!({
                    "median_sin": med, "p95_sin": p95
                })).collect::<Vec<_>>(),
                "failed_fraction": equiv.failed_fraction,
            },
        });
        let line = format!(
            "flags: transverse {:.1}%, median off-diagonal mass {:.3e}",
            100.0 * transversal as f64 / self.ensemble as f64,
            median_off
        );
        Ok(Artifacts { line, summary, csv })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewObservableSpec {
    #[serde(default)]
    pub symbol: Option<String>,
    #[serde(default)]
    pub z: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewExperiment {
    pub system: SystemConfig,
    pub skew: cocyclelab::SkewConfig,
    pub observables: Vec<SkewObservableSpec>,
    pub n: u64,
    pub ensemble: u64,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

impl SkewExperiment {
    fn run(&self) -> Result<Artifacts> {
        let system = self.system.build()?;
        let skew = self.skew.build(&system)?;
        let mut observables = Vec::with_capacity(self.observables.len());
        for o in &self.observables {
            let sym = o.symbol.as_deref().map(|s| system.symbol_index(s)).transpose()?;
            if let Some(z) = o.z {
                if z >= skew.z_size() {
                    return Err(LabError::InvalidConfig(format!(
                        "observable state {z} out of range"
                    )));
                }
            }
            observables.push(SkewObservable::cylinder(sym, o.z));
        }
        let report = skew_ergodicity_test(&skew, &observables, self.n, self.ensemble, self.seed);
        let mut csv = Csv::new("observable,birkhoff,stderr,space_average,sigma");
        for row in &report.rows {
            csv.row(&[
                row.label.clone(),
                fmt_f64(row.birkhoff.value),
                fmt_f64(row.birkhoff.stderr),
                fmt_f64(row.space_average),
                fmt_f64(row.sigma),
            ]);
        }
        let summary = json!({
            "experiment": "skew",
            "n": self.n,
            "ensemble": self.ensemble,
            "seed": self.seed,
            "max_sigma": report.max_sigma,
            "rows": report.rows.iter().map(|r| json!({
                "observable": r.label,
                "birkhoff": r.birkhoff.value,
                "stderr": r.birkhoff.stderr,
                "space_average": r.space_average,
                "sigma": r.sigma,
            })).collect::<Vec<_>>(),
        });
        let line = format!("skew: max deviation {:.2} sigma over {} observables",
            report.max_sigma, report.rows.len());
        Ok(Artifacts { line, summary, csv })
    }
}
