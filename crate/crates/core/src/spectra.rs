//! Eigenvalue machinery for the real symmetric matrices produced by the
//! lattice module.
//!
//! Two storage shapes are supported:
//!
//! * [`SymTridiagonal`]: a symmetric tridiagonal matrix, optionally closed
//!   into a ring by a single corner coupling between the first and the last
//!   row (periodic chains). Eigenvalues are counted from the inertia of the
//!   shifted matrix and located by bisection.
//! * [`DenseSymmetric`]: full row-major storage, used for d >= 2 boxes and
//!   for the squared Bernoulli operator. Full spectra come from cyclic Jacobi
//!   rotations; counts come from an envelope-restricted LDLᵀ factorization.

use crate::error::{Error, Result};

/// Default absolute eigenvalue tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default bisection budget per eigenvalue.
pub const DEFAULT_MAX_BISECTIONS: usize = 200;
/// Default sweep budget for cyclic Jacobi.
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Replacement for an exactly vanishing pivot in the shifted factorizations.
const PIVMIN: f64 = 1e-300;

#[inline]
fn guard_pivot(d: f64) -> f64 {
    if d.abs() < PIVMIN {
        -PIVMIN
    } else {
        d
    }
}

/// Symmetric tridiagonal matrix with an optional ring closure.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    corner: f64,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        Self::with_corner(diag, off, 0.0)
    }

    /// `corner` couples row 0 and row n-1. It must vanish unless n >= 3,
    /// because for shorter chains that entry is already on the tridiagonal
    /// band.
    pub fn with_corner(diag: Vec<f64>, off: Vec<f64>, corner: f64) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::domain("empty tridiagonal matrix"));
        }
        if off.len() + 1 != n {
            return Err(Error::domain(format!(
                "off-diagonal length {} does not match dimension {}",
                off.len(),
                n
            )));
        }
        if corner != 0.0 && n < 3 {
            return Err(Error::domain("ring closure requires at least three rows"));
        }
        Ok(Self { diag, off, corner })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn corner(&self) -> f64 {
        self.corner
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            if i == 0 || i == n - 1 {
                r += self.corner.abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> DenseSymmetric {
        let n = self.dim();
        let mut a = DenseSymmetric::zeros(n);
        for i in 0..n {
            a.set(i, i, self.diag[i]);
        }
        for (i, &b) in self.off.iter().enumerate() {
            a.set(i, i + 1, b);
        }
        if self.corner != 0.0 {
            let c = a.get(0, n - 1) + self.corner;
            a.set(0, n - 1, c);
        }
        a
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for (i, &b) in self.off.iter().enumerate() {
            y[i] += b * x[i + 1];
            y[i + 1] += b * x[i];
        }
        if self.corner != 0.0 {
            y[0] += self.corner * x[n - 1];
            y[n - 1] += self.corner * x[0];
        }
        y
    }
}

/// Real symmetric matrix in full row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetric {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from a closure evaluated on the upper triangle and mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut a = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                a.set(i, j, f(i, j));
            }
        }
        a
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut a = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            a.set(i, i, d);
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Writes both (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds to both (i, j) and (j, i) (once if i == j).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, v)| a * v).sum())
            .collect()
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let r: f64 = self
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v.abs())
                .sum();
            let d = self.get(i, i);
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }

    /// Returns `self - shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut a = self.clone();
        for i in 0..self.n {
            a.data[i * self.n + i] -= shift;
        }
        a
    }

    /// Matrix square `self * self`, exploiting row sparsity.
    pub fn square(&self) -> Self {
        let n = self.n;
        let nz: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        let mut out = Self::zeros(n);
        for (i, row) in nz.iter().enumerate() {
            for &(j, a_ij) in row {
                for &(k, a_jk) in &nz[j] {
                    out.data[i * n + k] += a_ij * a_jk;
                }
            }
        }
        out
    }
}

/// Sorted eigenvalues (ascending, with multiplicity).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub tolerance: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Number of eigenvalues `<= e`.
    pub fn count_le(&self, e: f64) -> usize {
        self.eigenvalues.partition_point(|&x| x <= e)
    }
}

/// Lowest eigenpair with a strictly positive, unit-norm eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    pub vector: Vec<f64>,
}

/// Number of eigenvalues `<= e` of a (possibly ring-closed) tridiagonal
/// matrix, read off the signs of the pivots of `T - e`.
pub fn sturm_count(t: &SymTridiagonal, e: f64) -> usize {
    let n = t.dim();
    let a = &t.diag;
    let b = &t.off;
    let mut count = 0usize;
    let mut d = guard_pivot(a[0] - e);
    if d < 0.0 {
        count += 1;
    }
    if t.corner == 0.0 {
        for i in 1..n {
            d = guard_pivot(a[i] - e - b[i - 1] * b[i - 1] / d);
            if d < 0.0 {
                count += 1;
            }
        }
        return count;
    }

    ring_count(t, e)
}

/// Inertia contribution of the 2x2 block `[[p, q], [q, r]]`, zero counted
/// as non-positive.
fn block_count(p: f64, q: f64, r: f64) -> usize {
    let det = p * r - q * q;
    if det < 0.0 {
        1
    } else if det > 0.0 {
        if p + r < 0.0 {
            2
        } else {
            0
        }
    } else {
        1 + usize::from(p + r <= 0.0)
    }
}

// Ring closure: eliminating rows 0..n-2 in order only fills the coupling
// between the current row and the last one. A small pivot is merged with
// the next row into a 2x2 block (Bunch's tridiagonal rule), which keeps the
// fill bounded near eigenvalues of the open chain, in particular at the
// double eigenvalues of symmetric rings.
fn ring_count(t: &SymTridiagonal, e: f64) -> usize {
    let n = t.dim();
    let a = &t.diag;
    let b = &t.off;
    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    let sigma = a
        .iter()
        .map(|x| (x - e).abs())
        .chain(b.iter().map(|x| x.abs()))
        .fold(t.corner.abs(), f64::max);
    let own_fill = |i: usize| if i == n - 2 { b[n - 2] } else { 0.0 };

    let mut count = 0usize;
    let mut d = a[0] - e;
    let mut fill = t.corner + own_fill(0);
    let mut last = a[n - 1] - e;
    let mut i = 0;
    loop {
        if i == n - 2 {
            return count + block_count(d, fill, last);
        }
        let c = b[i];
        if d.abs() * sigma >= alpha * c * c {
            let p = guard_pivot(d);
            if p < 0.0 {
                count += 1;
            }
            last -= fill * fill / p;
            let next_fill = own_fill(i + 1) - c * fill / p;
            d = a[i + 1] - e - c * c / p;
            fill = next_fill;
            i += 1;
        } else {
            let x = a[i + 1] - e;
            let g = own_fill(i + 1);
            let det = d * x - c * c;
            count += block_count(d, c, x);
            last -= (x * fill * fill - 2.0 * c * fill * g + d * g * g) / det;
            if i + 1 == n - 2 {
                if guard_pivot(last) < 0.0 {
                    count += 1;
                }
                return count;
            }
            let c1 = b[i + 1];
            let next_fill = own_fill(i + 2) - c1 * (d * g - c * fill) / det;
            d = a[i + 2] - e - c1 * c1 * d / det;
            fill = next_fill;
            i += 2;
        }
    }
}

fn bisect_kth(
    count: impl Fn(f64) -> usize,
    k: usize,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    // invariant: count(lo) <= k < count(hi)
    for _ in 0..max_iter {
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if count(mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi - lo <= tol {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::numeric(format!(
            "bisection for eigenvalue #{k} did not reach tolerance {tol:e} in {max_iter} steps"
        )))
    }
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
    (lo - pad, hi + pad)
}

/// The `k`-th smallest eigenvalue (0-based) of a tridiagonal matrix.
pub fn kth_eigenvalue_tridiag(t: &SymTridiagonal, k: usize, tol: f64) -> Result<f64> {
    if k >= t.dim() {
        return Err(Error::domain(format!(
            "eigenvalue index {k} out of range for dimension {}",
            t.dim()
        )));
    }
    let (lo, hi) = widen(t.gershgorin());
    bisect_kth(|e| sturm_count(t, e), k, lo, hi, tol, DEFAULT_MAX_BISECTIONS)
}

/// All eigenvalues by bisection, each to absolute accuracy `tol`.
pub fn eigenvalues_tridiag(t: &SymTridiagonal, tol: f64) -> Result<Spectrum> {
    eigenvalues_tridiag_with(t, tol, DEFAULT_MAX_BISECTIONS)
}

pub fn eigenvalues_tridiag_with(
    t: &SymTridiagonal,
    tol: f64,
    max_bisections: usize,
) -> Result<Spectrum> {
    if !(tol > 0.0) {
        return Err(Error::domain("eigenvalue tolerance must be positive"));
    }
    let n = t.dim();
    let (lo, hi) = widen(t.gershgorin());
    let mut eigenvalues = Vec::with_capacity(n);
    let mut lower = lo;
    for k in 0..n {
        // eigenvalue k is >= eigenvalue k-1, so the previous result (minus
        // its tolerance) is a valid lower bracket
        let start = if k == 0 { lo } else { (lower - 2.0 * tol).max(lo) };
        let start = if sturm_count(t, start) > k { lo } else { start };
        let value = bisect_kth(|e| sturm_count(t, e), k, start, hi, tol, max_bisections)?;
        eigenvalues.push(value);
        lower = value;
    }
    Ok(Spectrum {
        eigenvalues,
        tolerance: tol,
    })
}

/// Full spectrum of a dense symmetric matrix by cyclic Jacobi rotations.
pub fn eigen_dense(a: &DenseSymmetric) -> Result<Spectrum> {
    eigen_dense_with(a, 1e-12, DEFAULT_MAX_SWEEPS)
}

/// Sweeps until the off-diagonal Frobenius norm falls below
/// `rel_tol * ||A||_F`.
pub fn eigen_dense_with(a: &DenseSymmetric, rel_tol: f64, max_sweeps: usize) -> Result<Spectrum> {
    let n = a.dim();
    let mut m = a.clone();
    let initial = a.frobenius_norm();
    let threshold = rel_tol * initial;
    let off_norm = |m: &DenseSymmetric| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = m.get(i, j);
                s += 2.0 * v * v;
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&m) <= threshold;
    let mut sweep = 0;
    while !converged && sweep < max_sweeps {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                if t == 0.0 {
                    continue;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m.get(r, p);
                    let arq = m.get(r, q);
                    m.set(r, p, c * arp - s * arq);
                    m.set(r, q, c * arq + s * arp);
                }
                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, 0.0);
            }
        }
        sweep += 1;
        converged = off_norm(&m) <= threshold;
    }
    if !converged {
        return Err(Error::numeric(format!(
            "Jacobi iteration did not converge in {max_sweeps} sweeps"
        )));
    }
    let mut eigenvalues: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(Spectrum {
        eigenvalues,
        tolerance: threshold,
    })
}

/// Number of eigenvalues `<= e` of a dense symmetric matrix.
///
/// Uses an LDLᵀ factorization of `A - e` restricted to the row envelope, so
/// banded matrices (with a few dense wrap rows) cost O(n · bandwidth²).
pub fn inertia_count(a: &DenseSymmetric, e: f64) -> usize {
    let n = a.dim();
    let first: Vec<usize> = (0..n)
        .map(|i| a.row(i)[..i].iter().position(|v| *v != 0.0).unwrap_or(i))
        .collect();
    // rows[i][j - first[i]] holds L(i, j) for first[i] <= j < i
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pivots: Vec<f64> = Vec::with_capacity(n);
    let mut count = 0usize;
    for i in 0..n {
        let fi = first[i];
        let mut li = vec![0.0; i - fi];
        // w(j) = L(i, j) * d(j), accumulated on the fly
        let mut w = vec![0.0; i - fi];
        for j in fi..i {
            let fj = first[j];
            let start = fi.max(fj);
            let mut s = a.get(i, j);
            let lj = &rows[j];
            for k in start..j {
                s -= w[k - fi] * lj[k - fj];
            }
            w[j - fi] = s;
            li[j - fi] = s / pivots[j];
        }
        let mut d = a.get(i, i) - e;
        for k in fi..i {
            d -= w[k - fi] * li[k - fi];
        }
        let d = guard_pivot(d);
        if d < 0.0 {
            count += 1;
        }
        pivots.push(d);
        rows.push(li);
    }
    count
}

/// Smallest eigenvalue of a dense symmetric matrix, by bisection on
/// [`inertia_count`].
pub fn lowest_eigenvalue(a: &DenseSymmetric, tol: f64) -> Result<f64> {
    let (lo, hi) = widen(a.gershgorin());
    bisect_kth(|e| inertia_count(a, e), 0, lo, hi, tol, DEFAULT_MAX_BISECTIONS)
}

/// Largest eigenvalue of a dense symmetric matrix.
pub fn highest_eigenvalue(a: &DenseSymmetric, tol: f64) -> Result<f64> {
    let n = a.dim();
    let (lo, hi) = widen(a.gershgorin());
    bisect_kth(|e| inertia_count(a, e), n - 1, lo, hi, tol, DEFAULT_MAX_BISECTIONS)
}

fn cholesky(a: &DenseSymmetric) -> Option<Vec<f64>> {
    let n = a.dim();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// Ground state by shifted inverse iteration.
///
/// The shift sits `1e-8` below the bisected lowest eigenvalue, the iteration
/// starts from the all-ones vector and stops when the relative change of the
/// eigenvector drops below `1e-13` (or after 500 steps). The sign is fixed so
/// that the entries are positive; a sign change signals a degenerate ground
/// state and is reported as an error.
pub fn ground_state(a: &DenseSymmetric, tol: f64) -> Result<GroundState> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::domain("empty operator"));
    }
    let emin = lowest_eigenvalue(a, tol)?;
    let shift = emin - 1e-8;
    let l = cholesky(&a.shifted(shift)).ok_or_else(|| {
        Error::numeric("shifted operator is not positive definite below the ground state")
    })?;

    let mut v = vec![1.0; n];
    normalize(&mut v);
    let mut converged = false;
    for _ in 0..500 {
        let mut next = cholesky_solve(&l, n, &v);
        normalize(&mut next);
        if next.iter().sum::<f64>() < 0.0 {
            next.iter_mut().for_each(|x| *x = -*x);
        }
        let change = next
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        v = next;
        if change <= 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numeric("inverse iteration did not converge"));
    }
    if let Some(pos) = v.iter().position(|x| *x <= 0.0) {
        return Err(Error::Consistency(format!(
            "ground state has a non-positive entry at index {pos}; the lowest eigenvalue is not simple"
        )));
    }
    let av = a.matvec(&v);
    let energy = av.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
    Ok(GroundState { energy, vector: v })
}
