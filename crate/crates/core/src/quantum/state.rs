use std::collections::BTreeMap;
use std::fmt;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::layout::{BasisLayout, Bipartition};
use crate::{CMatrix, Error, Result, C64};

/// Density matrix over an explicit basis layout.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    layout: BasisLayout,
    rho: CMatrix,
}

impl QuantumState {
    /// Wraps a matrix; only the shape is checked here. Use
    /// [`assert_valid_state`] for the physical checks.
    pub fn new(layout: BasisLayout, rho: CMatrix) -> Result<Self> {
        let n = layout.total_dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::Dimension(format!(
                "matrix is {}x{} but layout {} has dimension {}",
                rho.nrows(),
                rho.ncols(),
                layout,
                n
            )));
        }
        Ok(QuantumState { layout, rho })
    }

    /// Projector onto a basis state.
    pub fn basis(layout: BasisLayout, index: usize) -> Result<Self> {
        let n = layout.total_dim();
        if index >= n {
            return Err(Error::Argument(format!("basis index {index} >= {n}")));
        }
        let mut rho = CMatrix::zeros(n, n);
        rho[(index, index)] = C64::new(1.0, 0.0);
        Self::new(layout, rho)
    }

    /// Pure state `|psi><psi|` (normalised here).
    pub fn pure(layout: BasisLayout, psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Argument("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|c| c / norm));
        Self::new(layout, &v * v.adjoint())
    }

    pub fn maximally_mixed(layout: BasisLayout) -> Self {
        let n = layout.total_dim();
        let rho = CMatrix::identity(n, n).scale(1.0 / n as f64);
        QuantumState { layout, rho }
    }

    pub fn layout(&self) -> &BasisLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// Expectation of the occupation number of a mode.
    pub fn occupation(&self, mode: &str) -> Result<f64> {
        let table = self.layout.occupation_table(mode)?;
        Ok(table
            .iter()
            .enumerate()
            .filter(|(_, &o)| o > 0)
            .map(|(x, &o)| o as f64 * self.rho[(x, x)].re)
            .sum())
    }
}

/// Kronecker product; the left factor varies slowest.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Dimension(format!(
            "tensor product needs square inputs, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a.kronecker(b))
}

/// Eigenvalues in ascending order and the matching eigenvectors (columns).
///
/// The decomposition from nalgebra is polished with cyclic Jacobi sweeps on
/// `V†HV`, which brings the reconstruction error to rounding level.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut v = eig.eigenvectors;
    let mut a = v.adjoint() * m * &v;
    jacobi_polish(&mut a, &mut v);
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Diagonalizes a nearly diagonal Hermitian `a` in place, accumulating the
/// rotations into the columns of `v`.
fn jacobi_polish(a: &mut CMatrix, v: &mut CMatrix) {
    let n = a.nrows();
    let tiny = 1e-18 * a.norm().max(f64::MIN_POSITIVE);
    for _ in 0..30 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= tiny {
                    continue;
                }
                rotated = true;
                // phase makes the pair real, then a real Jacobi rotation zeroes it
                let e = (apq / r).conj();
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (tau * tau + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let u = [[C64::new(cs, 0.0), C64::new(sn, 0.0)], [e * -sn, e * cs]];
                for k in 0..n {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = x * u[0][0] + y * u[1][0];
                    a[(k, q)] = x * u[0][1] + y * u[1][1];
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = x * u[0][0] + y * u[1][0];
                    v[(k, q)] = x * u[0][1] + y * u[1][1];
                }
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = u[0][0].conj() * x + u[1][0].conj() * y;
                    a[(q, k)] = u[0][1].conj() * x + u[1][1].conj() * y;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
            }
        }
        if !rotated {
            break;
        }
    }
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest element-wise deviation `|m_ij - conj(m_ji)|`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "trace norm of {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let dev = hermiticity_deviation(m);
    if dev > 1e-8 {
        return Err(Error::Shape(format!(
            "matrix not Hermitian (deviation {dev:.3e})"
        )));
    }
    Ok(hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum())
}

/// Transposes the indices of the factors named in `part.side_a()`.
///
/// Labels must be factor labels. Mode-level splits (sites inside a
/// single-excitation factor, say) go through [`bipartite_reduction`].
pub fn partial_transpose(state: &QuantumState, part: &Bipartition) -> Result<CMatrix> {
    let layout = state.layout();
    let a: Vec<usize> = part
        .side_a()
        .iter()
        .map(|l| layout.factor_index(l))
        .collect::<Result<_>>()?;
    for l in part.side_b() {
        layout.factor_index(l)?;
    }
    let n = layout.total_dim();
    let rho = state.matrix();
    let mut out = CMatrix::zeros(n, n);
    let digits: Vec<Vec<usize>> = (0..n).map(|x| layout.digits(x)).collect();
    let mut dx = vec![0; layout.factors().len()];
    let mut dy = dx.clone();
    for x in 0..n {
        for y in 0..n {
            dx.copy_from_slice(&digits[x]);
            dy.copy_from_slice(&digits[y]);
            for &k in &a {
                std::mem::swap(&mut dx[k], &mut dy[k]);
            }
            out[(layout.index_of(&dx), layout.index_of(&dy))] = rho[(x, y)];
        }
    }
    Ok(out)
}

/// Reduced state on the kept factors, in layout order.
pub fn partial_trace(state: &QuantumState, keep: &[&str]) -> Result<QuantumState> {
    if keep.is_empty() {
        return Err(Error::Argument(
            "partial trace needs at least one kept factor".into(),
        ));
    }
    let layout = state.layout();
    let mut kept: Vec<usize> = keep
        .iter()
        .map(|l| layout.factor_index(l))
        .collect::<Result<_>>()?;
    kept.sort_unstable();
    kept.dedup();
    let factors: Vec<_> = kept.iter().map(|&k| layout.factors()[k].clone()).collect();
    let reduced = BasisLayout::new(factors)?;
    if kept.len() == layout.factors().len() {
        return QuantumState::new(reduced, state.matrix().clone());
    }

    let n = layout.total_dim();
    let keep_index = |d: &[usize]| {
        kept.iter()
            .fold(0, |acc, &k| acc * layout.factors()[k].dim() + d[k])
    };
    let traced: Vec<usize> = (0..layout.factors().len())
        .filter(|k| !kept.contains(k))
        .collect();
    let trace_index = |d: &[usize]| {
        traced
            .iter()
            .fold(0, |acc, &k| acc * layout.factors()[k].dim() + d[k])
    };

    let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for x in 0..n {
        let d = layout.digits(x);
        groups
            .entry(trace_index(&d))
            .or_default()
            .push((x, keep_index(&d)));
    }
    let m = reduced.total_dim();
    let rho = state.matrix();
    let mut out = CMatrix::zeros(m, m);
    for members in groups.values() {
        for &(x, i) in members {
            for &(y, j) in members {
                out[(i, j)] += rho[(x, y)];
            }
        }
    }
    QuantumState::new(reduced, out)
}

/// A state reduced onto the modes of a bipartition and written in the
/// smallest product basis `A (x) B` that contains its support.
#[derive(Clone, Debug)]
pub struct BipartiteState {
    pub matrix: CMatrix,
    pub dim_a: usize,
    pub dim_b: usize,
}

impl BipartiteState {
    /// Partial transpose over side A.
    pub fn partial_transpose(&self) -> CMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let n = da * db;
        CMatrix::from_fn(n, n, |r, c| {
            let (a, b) = (r / db, r % db);
            let (a2, b2) = (c / db, c % db);
            self.matrix[(a2 * db + b, a * db + b2)]
        })
    }
}

/// Traces out every mode outside the bipartition and re-expresses the
/// remainder over occupation patterns of side A and side B.
///
/// Every basis state of the layout is a product of occupation patterns, so
/// the partial transpose in the pattern basis agrees with the partial
/// transpose in the full mode-product space.
pub fn bipartite_reduction(state: &QuantumState, part: &Bipartition) -> Result<BipartiteState> {
    let layout = state.layout();
    let side_a = layout.expand_labels(part.side_a())?;
    let side_b = layout.expand_labels(part.side_b())?;
    if let Some(l) = side_a.intersection(&side_b).next() {
        return Err(Error::Argument(format!(
            "mode `{l}` on both sides of bipartition"
        )));
    }
    let modes = layout.modes();
    let tables: Vec<Vec<u8>> = modes
        .iter()
        .map(|m| layout.occupation_table(m))
        .collect::<Result<_>>()?;
    let n = layout.total_dim();

    let mut pat_a: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    let mut pat_b: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    let mut keys = Vec::with_capacity(n);
    for x in 0..n {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut rest = Vec::new();
        for (m, table) in modes.iter().zip(&tables) {
            if side_a.contains(m) {
                a.push(table[x]);
            } else if side_b.contains(m) {
                b.push(table[x]);
            } else {
                rest.push(table[x]);
            }
        }
        pat_a.entry(a.clone()).or_insert(0);
        pat_b.entry(b.clone()).or_insert(0);
        keys.push((a, b, rest));
    }
    for (i, v) in pat_a.values_mut().enumerate() {
        *v = i;
    }
    for (i, v) in pat_b.values_mut().enumerate() {
        *v = i;
    }
    let (da, db) = (pat_a.len(), pat_b.len());

    let mut groups: BTreeMap<&Vec<u8>, Vec<(usize, usize)>> = BTreeMap::new();
    for (x, (a, b, rest)) in keys.iter().enumerate() {
        groups
            .entry(rest)
            .or_default()
            .push((x, pat_a[a] * db + pat_b[b]));
    }
    let rho = state.matrix();
    let mut out = CMatrix::zeros(da * db, da * db);
    for members in groups.values() {
        for &(x, i) in members {
            for &(y, j) in members {
                out[(i, j)] += rho[(x, y)];
            }
        }
    }
    Ok(BipartiteState {
        matrix: out,
        dim_a: da,
        dim_b: db,
    })
}

/// Thresholds for the state-validity checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    /// Most negative eigenvalue tolerated, as a positive magnitude.
    pub positivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermiticity: 1e-10,
            trace: 1e-9,
            positivity: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            hermiticity: tol,
            trace: tol,
            positivity: tol,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Tolerances {
            hermiticity: self.hermiticity * factor,
            trace: self.trace * factor,
            positivity: self.positivity * factor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    Hermiticity,
    Trace,
    Positivity,
}

/// Outcome of [`assert_valid_state`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateReport {
    pub hermiticity_deviation: f64,
    pub trace_deviation: f64,
    /// `None` when the eigenvalue check was skipped.
    pub min_eigenvalue: Option<f64>,
    pub tolerances: Tolerances,
}

impl StateReport {
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.hermiticity_deviation > self.tolerances.hermiticity {
            v.push(Violation::Hermiticity);
        }
        if self.trace_deviation > self.tolerances.trace {
            v.push(Violation::Trace);
        }
        if matches!(self.min_eigenvalue, Some(e) if e < -self.tolerances.positivity) {
            v.push(Violation::Positivity);
        }
        v
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }
}

impl fmt::Display for StateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hermiticity {:.3e} (tol {:.1e}), trace {:.3e} (tol {:.1e}), min eigenvalue ",
            self.hermiticity_deviation,
            self.tolerances.hermiticity,
            self.trace_deviation,
            self.tolerances.trace
        )?;
        match self.min_eigenvalue {
            Some(e) => write!(f, "{e:.3e} (tol -{:.1e})", self.tolerances.positivity),
            None => write!(f, "unchecked"),
        }
    }
}

/// Hermiticity, unit trace and positivity diagnostics.
pub fn assert_valid_state(state: &QuantumState, tol: &Tolerances) -> StateReport {
    validity_report(state.matrix(), tol, true)
}

pub(crate) fn validity_report(rho: &CMatrix, tol: &Tolerances, eigen: bool) -> StateReport {
    let herm = hermiticity_deviation(rho);
    let trace_dev = (rho.trace() - C64::new(1.0, 0.0)).norm();
    let min_eigenvalue = eigen.then(|| {
        let h = (rho + rho.adjoint()).scale(0.5);
        hermitian_eigenvalues(&h).first().copied().unwrap_or(0.0)
    });
    StateReport {
        hermiticity_deviation: herm,
        trace_deviation: trace_dev,
        min_eigenvalue,
        tolerances: *tol,
    }
}
