//! Monte Carlo integrated density of states for the Bernoulli displacement
//! model, together with the diagnostics built on it.
//!
//! Every sample draws `ω_1..ω_L` independently with `P(ω_k = 0) = p`, builds
//! the restriction of `h_0 + V_ω` to `[1, 2L]` and counts eigenvalues
//! `<= E` with Sturm sequences. Per-sample counts are integers, so the
//! parallel reduction is exact and the output does not depend on the number
//! of worker threads.

pub mod test_function;
pub mod walk;

use rayon::prelude::*;
use serde::Serialize;

use crate::bdm::{dirichlet_operator, neumann_operator, periodic_operator};
use crate::error::{Error, Result};
use crate::floquet::band_edges_closed_form;
use crate::io::{csv_line, fmt_real};
use crate::lattice::BoundaryCondition;
use crate::rng::{bernoulli_window, sample_rng};
use crate::spectra::{sturm_count, SymTridiagonal};

pub use test_function::{build_test_function, TestFunction};
pub use walk::{apriori_bound_probe, walk_exhaustive, walk_statistics, AprioriReport, WalkExact, WalkReport};

/// Sampling parameters shared by the IDS and DOS estimators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdsParams {
    pub lambda: f64,
    pub p: f64,
    /// Number of cells; the box is `[1, 2L]`.
    pub l: usize,
    pub samples: usize,
    pub seed: u64,
    pub bc: BoundaryCondition,
}

impl IdsParams {
    pub fn new(lambda: f64, p: f64, l: usize, samples: usize, seed: u64) -> Self {
        Self {
            lambda,
            p,
            l,
            samples,
            seed,
            bc: BoundaryCondition::Dirichlet,
        }
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::domain("L must be at least 2"));
        }
        if self.samples == 0 {
            return Err(Error::domain("at least one sample is required"));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::domain(format!("probability {} outside [0, 1]", self.p)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::domain("lambda must be finite"));
        }
        if self.bc == BoundaryCondition::Truncation {
            return Err(Error::domain(
                "IDS sampling supports Dirichlet, Neumann and periodic boundary conditions",
            ));
        }
        Ok(())
    }

    /// Operator of sample `index`.
    pub fn sample_operator(&self, index: u64) -> SymTridiagonal {
        let mut rng = sample_rng(self.seed, index);
        let omega = bernoulli_window(&mut rng, self.p, self.l);
        operator_for(&omega, self.lambda, self.bc)
    }
}

pub(crate) fn operator_for(omega: &[u8], lambda: f64, bc: BoundaryCondition) -> SymTridiagonal {
    match bc {
        BoundaryCondition::Neumann => neumann_operator(omega, lambda),
        BoundaryCondition::Periodic => periodic_operator(omega, lambda),
        _ => dirichlet_operator(omega, lambda),
    }
}

/// Per-energy sums of counts and squared counts over all samples.
fn accumulate_counts(params: &IdsParams, energies: &[f64]) -> (Vec<u64>, Vec<u128>) {
    let m = energies.len();
    (0..params.samples as u64)
        .into_par_iter()
        .map(|i| {
            let op = params.sample_operator(i);
            let counts: Vec<u64> = energies.iter().map(|&e| sturm_count(&op, e) as u64).collect();
            let squares = counts.iter().map(|&c| u128::from(c) * u128::from(c)).collect();
            (counts, squares)
        })
        .reduce(
            || (vec![0u64; m], vec![0u128; m]),
            |(mut a, mut b), (c, d)| {
                a.iter_mut().zip(c).for_each(|(x, y)| *x += y);
                b.iter_mut().zip(d).for_each(|(x, y)| *x += y);
                (a, b)
            },
        )
}

/// Monte Carlo IDS on an energy grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdsCurve {
    pub params: IdsParams,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl IdsCurve {
    /// Value at the grid point within `tol` of `e`.
    pub fn value_at(&self, e: f64, tol: f64) -> Option<(f64, f64)> {
        self.grid
            .iter()
            .position(|&x| (x - e).abs() <= tol)
            .map(|i| (self.values[i], self.stderr[i]))
    }

    /// CSV with columns `energy,ids,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(["energy", "ids", "stderr"]);
        for i in 0..self.grid.len() {
            out.push_str(&csv_line([
                fmt_real(self.grid[i]),
                fmt_real(self.values[i]),
                fmt_real(self.stderr[i]),
            ]));
        }
        out
    }
}

pub fn estimate_ids(params: &IdsParams, grid: &[f64]) -> Result<IdsCurve> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::domain("energy grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::domain("energy grid must be sorted"));
    }
    let (sums, squares) = accumulate_counts(params, grid);
    let n = params.samples as f64;
    let sites = (2 * params.l) as f64;
    let mut values = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for (s, q) in sums.iter().zip(&squares) {
        let mean = *s as f64 / n;
        values.push(mean / sites);
        let var = if params.samples > 1 {
            ((*q as f64 / n - mean * mean) * n / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        stderr.push((var / n).sqrt() / sites);
    }
    Ok(IdsCurve {
        params: params.clone(),
        grid: grid.to_vec(),
        values,
        stderr,
    })
}

/// `n + 1` equally spaced points from `lo` to `hi`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Grid `λ/2 + j h`, `j = -n..=n`, with `h = half_width / n`; symmetric
/// about `λ/2`.
pub fn symmetric_grid(lambda: f64, half_width: f64, n: usize) -> Vec<f64> {
    let c = lambda / 2.0;
    let n = n.max(1) as i64;
    let h = half_width / n as f64;
    (-n..=n).map(|j| c + j as f64 * h).collect()
}

/// The edge `e0` together with `points` logarithmically spaced offsets
/// `ε ∈ [eps_lo, eps_hi]` on both sides.
pub fn edge_grid(e0: f64, eps_lo: f64, eps_hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let (a, b) = (eps_lo.ln(), eps_hi.ln());
    let eps: Vec<f64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect();
    let mut grid: Vec<f64> = eps.iter().map(|e| e0 - e).collect();
    grid.push(e0);
    grid.extend(eps.iter().map(|e| e0 + e));
    grid.sort_by(f64::total_cmp);
    grid
}

/// Eigenvalue histogram normalised to unit area.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DosHistogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl DosHistogram {
    pub fn total_mass(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }

    /// Maximal runs of bins with density above `threshold`.
    pub fn support_intervals(&self, threshold: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut open: Option<f64> = None;
        for (i, &d) in self.density.iter().enumerate() {
            match (d > threshold, open) {
                (true, None) => open = Some(self.edges[i]),
                (false, Some(lo)) => {
                    out.push((lo, self.edges[i]));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(lo) = open {
            out.push((lo, *self.edges.last().expect("non-empty edges")));
        }
        out
    }

    /// CSV with columns `bin_lo,bin_hi,density`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(["bin_lo", "bin_hi", "density"]);
        for (i, d) in self.density.iter().enumerate() {
            out.push_str(&csv_line([
                fmt_real(self.edges[i]),
                fmt_real(self.edges[i + 1]),
                fmt_real(*d),
            ]));
        }
        out
    }
}

/// Histogram of the pooled eigenvalues of the sampled restrictions over
/// `[min(0,λ) - 2, max(0,λ) + 2]`, which contains every eigenvalue.
///
/// Bin masses are differences of eigenvalue counts at the bin edges, which
/// is the same as binning the eigenvalues but needs no diagonalisation.
pub fn dos_histogram(params: &IdsParams, bins: usize) -> Result<DosHistogram> {
    params.validate()?;
    if bins < 10 {
        return Err(Error::domain("at least 10 bins are required"));
    }
    let pad = 1e-9;
    let lo = params.lambda.min(0.0) - 2.0 - pad;
    let hi = params.lambda.max(0.0) + 2.0 + pad;
    let edges = linear_grid(lo, hi, bins);
    let (sums, _) = accumulate_counts(params, &edges);
    let total = (params.samples * 2 * params.l) as f64;
    let density = (0..bins)
        .map(|i| (sums[i + 1] - sums[i]) as f64 / total / (edges[i + 1] - edges[i]))
        .collect();
    Ok(DosHistogram { edges, density })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub max_deviation: f64,
    /// Energy `E` at which `|N(E) - (1 - N(λ - E))|` is largest.
    pub worst_energy: f64,
    /// Standard error of the deviation at the worst point.
    pub worst_stderr: f64,
    pub pairs: usize,
}

/// Largest violation of `N(E_- + t) = 1 - N(E_+ - t)` over the grid.
///
/// Since `E_- + E_+ = λ`, the pairs are `(E, λ - E)`; the grid must be
/// symmetric about `λ/2`.
pub fn check_symmetry(curve: &IdsCurve) -> Result<SymmetryReport> {
    let params = &curve.params;
    if (params.p - 0.5).abs() > 1e-12 {
        return Err(Error::precondition(format!(
            "the 0-1 flip preserves the measure only for p = 1/2, got p = {}",
            params.p
        )));
    }
    let lambda = params.lambda;
    let mut max_deviation: f64 = 0.0;
    let mut worst_energy = f64::NAN;
    let mut worst_stderr = 0.0;
    for (i, &e) in curve.grid.iter().enumerate() {
        let mirror = lambda - e;
        let j = curve
            .grid
            .iter()
            .position(|&x| (x - mirror).abs() <= 1e-9)
            .ok_or_else(|| {
                Error::precondition(format!(
                    "grid is not symmetric about lambda/2: no partner for {e}"
                ))
            })?;
        let dev = (curve.values[i] - (1.0 - curve.values[j])).abs();
        if dev > max_deviation || worst_energy.is_nan() {
            max_deviation = dev;
            worst_energy = e;
            worst_stderr = (curve.stderr[i].powi(2) + curve.stderr[j].powi(2)).sqrt();
        }
    }
    Ok(SymmetryReport {
        max_deviation,
        worst_energy,
        worst_stderr,
        pairs: curve.grid.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "above" => Ok(Self::Above),
            "below" => Ok(Self::Below),
            other => Err(Error::domain(format!("unknown side `{other}`"))),
        }
    }
}

/// Fit of `(N(E0 ± ε) - N(E0)) · ln²ε` to a constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub edge: f64,
    pub side: Side,
    #[serde(rename = "C")]
    pub c: f64,
    pub median: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub product_min: f64,
    pub product_max: f64,
    /// `C > 0` and every product in `[C/3, 3C]`.
    pub pass: bool,
    /// Median positive and every product within a factor 3 of it.
    pub pass_median: bool,
    pub points: Vec<(f64, f64)>,
}

/// Least-squares constant fit of the log-squared-scaled IDS increment at a
/// band edge. `e0` must be an edge of the almost sure spectrum approached
/// from inside the spectrum: `E_-` or `G_+` from above, `G_-` or `E_+` from
/// below.
pub fn edge_singularity_fit(
    curve: &IdsCurve,
    e0: f64,
    side: Side,
    eps_lo: f64,
    eps_hi: f64,
) -> Result<FitResult> {
    if !(0.0 < eps_lo && eps_lo < eps_hi && eps_hi <= 0.1) {
        return Err(Error::domain("the ε window must satisfy 0 < lo < hi <= 0.1"));
    }
    let edges = band_edges_closed_form(curve.params.lambda);
    let allowed = match side {
        Side::Above => [edges.e_minus, edges.g_plus],
        Side::Below => [edges.g_minus, edges.e_plus],
    };
    if !allowed.iter().any(|&a| (a - e0).abs() <= 1e-9) {
        return Err(Error::precondition(format!(
            "{e0} is not a spectral edge approached from {side:?}",
        )));
    }
    let (n0, _) = curve.value_at(e0, 1e-12).ok_or_else(|| {
        Error::domain(format!("the energy grid does not contain the edge {e0}"))
    })?;
    let mut points = Vec::new();
    for (&e, &n) in curve.grid.iter().zip(&curve.values) {
        let eps = match side {
            Side::Above => e - e0,
            Side::Below => e0 - e,
        };
        if eps >= eps_lo * (1.0 - 1e-12) && eps <= eps_hi * (1.0 + 1e-12) {
            let rise = match side {
                Side::Above => n - n0,
                Side::Below => n0 - n,
            };
            points.push((eps, rise * eps.ln().powi(2)));
        }
    }
    if points.len() < 5 {
        return Err(Error::domain(format!(
            "only {} grid points fall in the ε window; at least 5 are needed",
            points.len()
        )));
    }
    let products: Vec<f64> = points.iter().map(|p| p.1).collect();
    let c = products.iter().sum::<f64>() / products.len() as f64;
    let mut sorted = products.clone();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let median = if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    };
    let product_min = sorted[0];
    let product_max = sorted[k - 1];
    let within = |center: f64| {
        center > 0.0 && product_min >= center / 3.0 && product_max <= 3.0 * center
    };
    Ok(FitResult {
        edge: e0,
        side,
        c,
        median,
        eps_lo,
        eps_hi,
        product_min,
        product_max,
        pass: within(c),
        pass_median: within(median),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_limits_and_gap_center() {
        let e = band_edges_closed_form(1.0);
        let params = IdsParams::new(1.0, 0.5, 20, 200, 3);
        let curve = estimate_ids(&params, &[e.e_minus - 0.1, 0.5, e.e_plus + 0.1]).unwrap();
        assert_eq!(curve.values[0], 0.0);
        assert_eq!(curve.values[2], 1.0);
        assert!((curve.values[1] - 0.5).abs() <= 2.0 * curve.stderr[1] + 0.05);
    }

    #[test]
    fn symmetry_requires_fair_coin() {
        let params = IdsParams::new(1.0, 0.7, 10, 10, 1);
        let curve = estimate_ids(&params, &symmetric_grid(1.0, 3.0, 10)).unwrap();
        assert!(matches!(check_symmetry(&curve), Err(Error::Precondition(_))));
    }

    #[test]
    fn histogram_has_unit_mass() {
        let params = IdsParams::new(1.0, 0.5, 10, 20, 1);
        let h = dos_histogram(&params, 50).unwrap();
        assert!((h.total_mass() - 1.0).abs() < 1e-9);
        assert!(dos_histogram(&params, 5).is_err());
    }

    #[test]
    fn edge_grid_layout() {
        let g = edge_grid(1.0, 1e-3, 1e-1, 5);
        assert_eq!(g.len(), 11);
        assert_eq!(g[5], 1.0);
        assert!((g[6] - 1.001).abs() < 1e-15 && (g[10] - 1.1).abs() < 1e-15);
    }
}
