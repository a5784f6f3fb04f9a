//! Full flags and spanning line tuples for `SL_d(R)`.
//!
//! `G/P` is modeled as the space of complete flags `E_1 < E_2 < ... < E_d`,
//! stored as an orthonormal matrix whose first `j` columns span `E_j`. `G/A'`
//! is the space of `d`-tuples of lines that span `R^d`. The two projections
//!
//! ```text
//! pr_1: (l_1,...,l_d) -> (l_1, l_1+l_2, ..., R^d)
//! pr_2 = pr_1 ∘ w_long,   w_long: j -> d+1-j
//! ```
//!
//! embed the tuple space into pairs of flags in general position, and
//! `tuple_from_flag_pair` inverts that embedding by intersecting
//! complementary subspaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{LabError, Result};

/// Transversality margins below this are treated as degenerate.
pub const GENERAL_POSITION_MARGIN: f64 = 1e-6;

const ORTHONORMAL_TOL: f64 = 1e-10;
const SPAN_TOL: f64 = 1e-12;

/// A complete flag, stored as an orthonormal basis adapted to the nesting.
#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    basis: DMatrix<f64>,
}

impl Flag {
    /// Wraps an orthonormal matrix; columns `1..=j` span `E_j`.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Flag> {
        let d = basis.nrows();
        if d < 1 || basis.ncols() != d {
            return Err(LabError::InvalidConfig("flag basis must be square".into()));
        }
        let gram = basis.transpose() * &basis;
        let defect = (&gram - DMatrix::identity(d, d)).abs().max();
        if defect > ORTHONORMAL_TOL {
            return Err(LabError::InvalidConfig(format!(
                "flag basis is not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Flag { basis: canonicalize_columns(basis) })
    }

    /// The standard flag `span(e_1) < span(e_1,e_2) < ...`.
    pub fn standard(d: usize) -> Flag {
        Flag { basis: DMatrix::identity(d, d) }
    }

    /// The order-reversed standard flag `span(e_d) < span(e_d,e_{d-1}) < ...`.
    pub fn reversed_standard(d: usize) -> Flag {
        let d_i = DMatrix::from_fn(d, d, |i, j| if i + j == d - 1 { 1.0 } else { 0.0 });
        Flag { basis: d_i }
    }

    pub fn dimension(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthonormal basis of `E_j` (the first `j` columns).
    pub fn subspace(&self, j: usize) -> DMatrix<f64> {
        assert!(j >= 1 && j <= self.dimension());
        self.basis.columns(0, j).into_owned()
    }

    /// Unit vector spanning the top line `E_1`.
    pub fn top_line(&self) -> DVector<f64> {
        self.basis.column(0).into_owned()
    }

    /// Induced action of `g` on the flag: apply to the basis, then restore
    /// orthonormality by Gram-Schmidt. The nesting is preserved exactly.
    pub fn act(&self, g: &DMatrix<f64>) -> Flag {
        let m = g * &self.basis;
        Flag { basis: canonicalize_columns(gram_schmidt_q(&m)) }
    }
}

/// Per-column sign convention: the entry of largest magnitude is positive.
fn canonicalize_columns(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for j in 0..m.ncols() {
        let mut lead = 0usize;
        let mut best = -1.0f64;
        for i in 0..m.nrows() {
            let a = m[(i, j)].abs();
            if a > best {
                best = a;
                lead = i;
            }
        }
        if m[(lead, j)] < 0.0 {
            for i in 0..m.nrows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
    m
}

/// Q factor of the QR decomposition with positive-diagonal convention.
pub(crate) fn gram_schmidt_q(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            for i in 0..q.nrows() {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// A spanning tuple of lines, each stored as a unit vector up to sign.
#[derive(Debug, Clone, PartialEq)]
pub struct LineTuple {
    lines: Vec<DVector<f64>>,
}

impl LineTuple {
    pub fn new(lines: Vec<DVector<f64>>) -> Result<LineTuple> {
        if lines.is_empty() {
            return Err(LabError::InvalidConfig("empty line tuple".into()));
        }
        let d = lines[0].nrows();
        if lines.len() != d || lines.iter().any(|l| l.nrows() != d) {
            return Err(LabError::InvalidConfig(
                "line tuple must hold d vectors of dimension d".into(),
            ));
        }
        let lines: Vec<DVector<f64>> = lines
            .into_iter()
            .map(|l| {
                let n = l.norm();
                canonicalize_vector(l / n)
            })
            .collect();
        let det = tuple_matrix(&lines).determinant().abs();
        if det < SPAN_TOL {
            return Err(LabError::DegenerateTuple { det });
        }
        Ok(LineTuple { lines })
    }

    pub fn standard(d: usize) -> LineTuple {
        let lines = (0..d)
            .map(|i| DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 }))
            .collect();
        LineTuple { lines }
    }

    pub fn dimension(&self) -> usize {
        self.lines.len()
    }

    pub fn line(&self, j: usize) -> &DVector<f64> {
        &self.lines[j]
    }

    pub fn lines(&self) -> &[DVector<f64>] {
        &self.lines
    }

    /// |det| of the matrix of line representatives (spanning margin).
    pub fn span_det(&self) -> f64 {
        tuple_matrix(&self.lines).determinant().abs()
    }

    /// Matrix action of `g` on each line.
    pub fn act(&self, g: &DMatrix<f64>) -> Result<LineTuple> {
        LineTuple::new(self.lines.iter().map(|l| g * l).collect())
    }

    /// Line-set equality up to sign, within `tol` on |<u,v>|.
    pub fn approx_eq(&self, other: &LineTuple, tol: f64) -> bool {
        self.dimension() == other.dimension()
            && self
                .lines
                .iter()
                .zip(&other.lines)
                .all(|(u, v)| (u.dot(v).abs() - 1.0).abs() <= tol)
    }
}

fn canonicalize_vector(mut v: DVector<f64>) -> DVector<f64> {
    let mut lead = 0usize;
    let mut best = -1.0f64;
    for i in 0..v.nrows() {
        if v[i].abs() > best {
            best = v[i].abs();
            lead = i;
        }
    }
    if v[lead] < 0.0 {
        v = -v;
    }
    v
}

fn tuple_matrix(lines: &[DVector<f64>]) -> DMatrix<f64> {
    let d = lines.len();
    DMatrix::from_fn(d, d, |i, j| lines[j][i])
}

/// A permutation of `{0, .., d-1}`; `apply[j]` is the destination slot of
/// source line `j`, so composition is the usual `(v ∘ w)[j] = v[w[j]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Permutation> {
        let d = map.len();
        let mut seen = vec![false; d];
        for &m in &map {
            if m >= d || seen[m] {
                return Err(LabError::InvalidConfig("not a permutation".into()));
            }
            seen[m] = true;
        }
        Ok(Permutation { map })
    }

    pub fn identity(d: usize) -> Permutation {
        Permutation { map: (0..d).collect() }
    }

    /// The order-reversing long element `j -> d-1-j`.
    pub fn long_element(d: usize) -> Permutation {
        Permutation { map: (0..d).map(|j| d - 1 - j).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, j: usize) -> usize {
        self.map[j]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation { map: other.map.iter().map(|&j| self.map[j]).collect() }
    }
}

/// Weyl action on line tuples: line `j` moves to slot `w(j)`.
pub fn weyl_act(w: &Permutation, t: &LineTuple) -> LineTuple {
    assert_eq!(w.len(), t.dimension());
    let d = t.dimension();
    let mut lines = vec![DVector::zeros(d); d];
    for j in 0..d {
        lines[w.apply(j)] = t.line(j).clone();
    }
    LineTuple { lines }
}

/// `pr_1`: Gram-Schmidt of the lines in order, so `E_j = l_1 + ... + l_j`.
pub fn pr1(t: &LineTuple) -> Result<Flag> {
    let det = t.span_det();
    if det < SPAN_TOL {
        return Err(LabError::DegenerateTuple { det });
    }
    let m = tuple_matrix(&t.lines);
    Ok(Flag { basis: canonicalize_columns(gram_schmidt_q(&m)) })
}

/// `pr_2 = pr_1 ∘ w_long`.
pub fn pr2(t: &LineTuple) -> Result<Flag> {
    pr1(&weyl_act(&Permutation::long_element(t.dimension()), t))
}

/// General position test: `E_j(f) ∩ E_{d-j}(g) = 0` for every `j`, decided
/// by the margin `min_j sigma_min([E_j(f) | E_{d-j}(g)])`.
pub fn general_position(f: &Flag, g: &Flag) -> (bool, f64) {
    let d = f.dimension();
    assert_eq!(d, g.dimension());
    let mut margin = f64::INFINITY;
    for j in 1..d {
        let mut stacked = DMatrix::zeros(d, d);
        stacked.columns_mut(0, j).copy_from(&f.basis.columns(0, j));
        stacked
            .columns_mut(j, d - j)
            .copy_from(&g.basis.columns(0, d - j));
        let smin = smallest_singular_value(&stacked);
        margin = margin.min(smin);
    }
    if d == 1 {
        margin = 1.0;
    }
    (margin > GENERAL_POSITION_MARGIN, margin)
}

/// Max over `j` of the largest principal angle between `E_j(f)` and
/// `E_j(g)`; a metric on the flag space with values in `[0, pi/2]`.
pub fn flag_distance(f: &Flag, g: &Flag) -> f64 {
    let d = f.dimension();
    assert_eq!(d, g.dimension());
    let mut worst: f64 = 0.0;
    for j in 1..d {
        let uj = f.basis.columns(0, j).into_owned();
        let vj = g.basis.columns(0, j).into_owned();
        worst = worst.max(subspace_angle(&uj, &vj));
    }
    worst
}

/// Largest principal angle between `span(u)` and `span(v)` (orthonormal
/// column bases of equal rank).
///
/// Computed as `atan2(sin, cos)` with the sine from the projection residual
/// and the cosine from the overlap, so the angle is accurate at both ends
/// of `[0, pi/2]`.
pub fn subspace_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    // sin theta_max = || (I - V V^T) U ||_2, cos theta_max = sigma_min(U^T V)
    let residual = u - v * (v.transpose() * u);
    let sv = residual.singular_values();
    let sin = sv.iter().cloned().fold(0.0f64, f64::max).clamp(0.0, 1.0);
    let cos = smallest_singular_value(&(u.transpose() * v)).clamp(0.0, 1.0);
    sin.atan2(cos)
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    sv.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Inverts `(pr_1, pr_2)` on transverse pairs: `l_j = E_j(f) ∩ E_{d-j+1}(g)`.
pub fn tuple_from_flag_pair(f: &Flag, g: &Flag) -> Result<LineTuple> {
    let (ok, margin) = general_position(f, g);
    if !ok {
        return Err(LabError::NotTransverse { margin });
    }
    let d = f.dimension();
    let mut lines = Vec::with_capacity(d);
    for j in 1..=d {
        // intersection = orthogonal complement of E_j(f)^perp + E_{d-j+1}(g)^perp
        let fp = f.basis.columns(j, d - j);
        let gp = g.basis.columns(d - j + 1, j - 1);
        let mut comp = DMatrix::zeros(d, (d - j) + (j - 1));
        comp.columns_mut(0, d - j).copy_from(&fp);
        comp.columns_mut(d - j, j - 1).copy_from(&gp);
        lines.push(null_direction(&comp));
    }
    LineTuple::new(lines)
}

/// Unit vector orthogonal to all columns of `comp` (which has `d-1` columns
/// of full rank): the least eigenvector of `comp compᵀ`.
fn null_direction(comp: &DMatrix<f64>) -> DVector<f64> {
    let d = comp.nrows();
    if comp.ncols() == 0 {
        return DVector::from_element(1, 1.0);
    }
    let gram = comp * comp.transpose();
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut best = 0usize;
    for i in 1..d {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let v = eig.eigenvectors.column(best).into_owned();
    &v / v.norm()
}
