//! Gap machinery for the Bernoulli displacement model.
//!
//! A configuration is a 0/1 sequence `ω_1..ω_L`; cell `k` occupies the sites
//! `2k-1, 2k` and carries `λ` on site `2k-1` when `ω_k = 0`, on site `2k`
//! when `ω_k = 1`. Squaring the shifted periodic operator on `[1, 2L]` gives
//! a five-diagonal matrix that splits into two Schrödinger operators with
//! potentials `±q_ω`, `q_ω(k) = λ(ω_{k+1} - ω_k)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::band_edges_closed_form;
use crate::spectra::{self, DenseSymmetric, SymTridiagonal};

/// Largest exponent `|S_k| ln z_+` accepted before `z_+^{S_k}` is deemed
/// out of range.
pub const MAX_LOG_SCALE: f64 = 600.0;
/// Half-width shaved off the gap when counting eigenvalues inside it.
pub const GAP_DELTA: f64 = 1e-9;

/// Potential `V_ω` on `[1, 2L]`.
pub fn bdm_potential(omega: &[u8], lambda: f64) -> Vec<f64> {
    omega
        .iter()
        .flat_map(|&w| {
            if w == 0 {
                [lambda, 0.0]
            } else {
                [0.0, lambda]
            }
        })
        .collect()
}

/// Tridiagonal `h_0 + V_ω` on `[1, 2L]` with the boundary condition encoded
/// as `(diagonal shift at both ends, ring closure)`.
fn chain(omega: &[u8], lambda: f64, end_shift: f64, ring: bool) -> SymTridiagonal {
    let mut diag = bdm_potential(omega, lambda);
    let n = diag.len();
    if ring {
        // n = 2L >= 4 whenever L >= 2; a single cell folds onto itself
        if n == 2 {
            return SymTridiagonal::new(diag, vec![-2.0]).expect("valid shape");
        }
        return SymTridiagonal::with_corner(diag, vec![-1.0; n - 1], -1.0).expect("valid shape");
    }
    diag[0] += end_shift;
    diag[n - 1] += end_shift;
    SymTridiagonal::new(diag, vec![-1.0; n - 1]).expect("valid shape")
}

/// `h^P_{[1,2L]}(ω)`.
pub fn periodic_operator(omega: &[u8], lambda: f64) -> SymTridiagonal {
    chain(omega, lambda, 0.0, true)
}

/// `h^D_{[1,2L]}(ω) = h_0 + N + V_ω`.
pub fn dirichlet_operator(omega: &[u8], lambda: f64) -> SymTridiagonal {
    chain(omega, lambda, 1.0, false)
}

/// `h^N_{[1,2L]}(ω) = h_0 - N + V_ω`.
pub fn neumann_operator(omega: &[u8], lambda: f64) -> SymTridiagonal {
    chain(omega, lambda, -1.0, false)
}

/// Exchanges the two displacements.
pub fn flip(omega: &[u8]) -> Vec<u8> {
    omega.iter().map(|&w| 1 - w).collect()
}

/// `q_ω(k) = λ(ω_{k+1} - ω_k)`, `k = 1..L`, with `ω_{L+1} = ω_1`.
pub fn q_omega(omega: &[u8], lambda: f64) -> Vec<f64> {
    let n = omega.len();
    (0..n)
        .map(|k| lambda * (f64::from(omega[(k + 1) % n]) - f64::from(omega[k])))
        .collect()
}

fn check_window(omega: &[u8]) -> Result<()> {
    if omega.len() < 2 {
        return Err(Error::domain("the window needs at least two cells"));
    }
    if omega.iter().any(|&w| w > 1) {
        return Err(Error::domain("Bernoulli displacements must be 0 or 1"));
    }
    Ok(())
}

/// `(h^P_{[1,2L]}(ω) - λ/2)^2 - (2 + λ^2/4)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SquaredOperator {
    pub lambda: f64,
    pub matrix: DenseSymmetric,
    /// `side[n-1] = H(n, n+1)` for `n = 1..2L`, cyclically.
    pub side: Vec<f64>,
}

pub fn build_squared_operator(omega: &[u8], lambda: f64) -> Result<SquaredOperator> {
    check_window(omega)?;
    let shifted = periodic_operator(omega, lambda)
        .to_dense()
        .shifted(lambda / 2.0);
    let matrix = shifted.square().shifted(2.0 + lambda * lambda / 4.0);
    let n = matrix.dim();
    let side = (0..n).map(|i| matrix.get(i, (i + 1) % n)).collect();
    Ok(SquaredOperator {
        lambda,
        matrix,
        side,
    })
}

/// The two Schrödinger operators the squared operator splits into.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoupledPair {
    /// Kinetic part enters with `+h_0` (even `L`) or `-h_0` (odd `L`).
    pub kinetic_sign: f64,
    /// `±h_0 + q_ω`.
    pub plus: SymTridiagonal,
    /// `±h_0 - q_ω`.
    pub minus: SymTridiagonal,
    pub q: Vec<f64>,
}

impl DecoupledPair {
    /// Sorted union of both spectra.
    pub fn joint_spectrum(&self, tol: f64) -> Result<Vec<f64>> {
        let mut all = spectra::eigenvalues_tridiag(&self.plus, tol)?.eigenvalues;
        all.extend(spectra::eigenvalues_tridiag(&self.minus, tol)?.eigenvalues);
        all.sort_by(f64::total_cmp);
        Ok(all)
    }
}

fn ring_with_potential(potential: Vec<f64>, hop: f64) -> SymTridiagonal {
    let n = potential.len();
    match n {
        1 => {
            let mut d = potential;
            d[0] += 2.0 * hop;
            SymTridiagonal::new(d, vec![]).expect("valid shape")
        }
        2 => SymTridiagonal::new(potential, vec![2.0 * hop]).expect("valid shape"),
        _ => SymTridiagonal::with_corner(potential, vec![hop; n - 1], hop).expect("valid shape"),
    }
}

/// Splits the squared operator into `J^± = h_0 ± q_ω` on the length-`L`
/// ring. On the pairs of sites `(2k, 2k+1)` the squared operator acts as
/// the ring adjacency plus the 2x2 block `[[0, q], [q, 0]]`; the symmetric
/// and antisymmetric combinations give `-h_0 ± q_ω`, and for even `L` the
/// gauge `(-1)^k` turns `-h_0` into `h_0`.
pub fn decouple(omega: &[u8], lambda: f64) -> Result<DecoupledPair> {
    check_window(omega)?;
    let q = q_omega(omega, lambda);
    let kinetic_sign = if omega.len().is_multiple_of(2) { 1.0 } else { -1.0 };
    let hop = -kinetic_sign;
    let plus = ring_with_potential(q.clone(), hop);
    let minus = ring_with_potential(q.iter().map(|v| -v).collect(), hop);
    Ok(DecoupledPair {
        kinetic_sign,
        plus,
        minus,
        q,
    })
}

/// Explicit positive solution of `(h_0 + q_ω) ψ = -sqrt(4 + λ^2) ψ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapCertificate {
    pub lambda: f64,
    pub z_plus: f64,
    pub z_minus: f64,
    /// `ψ(k)` for `k = 0..=n`, `ψ(0) = 1`.
    pub psi: Vec<f64>,
    /// `q_ω(k)` for `k = 1..n-1`, where it is fully determined by the window.
    pub q: Vec<f64>,
}

impl GapCertificate {
    /// Largest relative residual over the interior sites `k = 1..n-1`,
    /// each scaled by the local maximum of `ψ`.
    pub fn max_residual(&self) -> f64 {
        let s = (4.0 + self.lambda * self.lambda).sqrt();
        let psi = &self.psi;
        (1..psi.len() - 1)
            .map(|k| {
                let r = -psi[k - 1] + self.q[k - 1] * psi[k] - psi[k + 1] + s * psi[k];
                let scale = psi[k - 1].max(psi[k]).max(psi[k + 1]);
                (r / scale).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `z_+ = (sqrt(4 + λ^2) + λ) / 2`.
pub fn z_plus(lambda: f64) -> f64 {
    ((4.0 + lambda * lambda).sqrt() + lambda) / 2.0
}

/// `ψ(k) = z_+^{S_k}`, `S_k = Σ_{j<=k} (2ω_j - 1)`.
pub fn psi_omega(omega: &[u8], lambda: f64) -> Result<GapCertificate> {
    if lambda == 0.0 {
        return Err(Error::domain("the certificate needs lambda != 0"));
    }
    if omega.is_empty() || omega.iter().any(|&w| w > 1) {
        return Err(Error::domain("window must be a non-empty 0/1 sequence"));
    }
    let zp = z_plus(lambda);
    let zm = ((4.0 + lambda * lambda).sqrt() - lambda) / 2.0;
    let ln = zp.ln();
    let mut s = 0i64;
    let mut psi = Vec::with_capacity(omega.len() + 1);
    psi.push(1.0);
    for &w in omega {
        s += 2 * i64::from(w) - 1;
        if (s.abs() as f64) * ln.abs() > MAX_LOG_SCALE {
            return Err(Error::Range(format!(
                "z_+^{s} leaves the representable range; shorten the window"
            )));
        }
        psi.push(zp.powi(s as i32));
    }
    let q = (1..omega.len())
        .map(|k| lambda * (f64::from(omega[k]) - f64::from(omega[k - 1])))
        .collect();
    Ok(GapCertificate {
        lambda,
        z_plus: zp,
        z_minus: zm,
        psi,
        q,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub gap_clean: bool,
    /// Eigenvalues of `h^P` in `(G_- + δ, G_+ - δ)`.
    pub eigenvalues_in_gap: usize,
    /// Smallest eigenvalue of the squared operator.
    pub min_sq_eig: f64,
    /// No eigenvalue of the squared operator below `-sqrt(4+λ^2) - δ`
    /// (inertia count of the assembled matrix).
    pub squared_bound_holds: bool,
}

/// Finite-volume gap check for one configuration.
pub fn verify_gap(omega: &[u8], lambda: f64) -> Result<GapReport> {
    if lambda == 0.0 {
        return Err(Error::domain("the gap is closed at lambda = 0"));
    }
    check_window(omega)?;
    let edges = band_edges_closed_form(lambda);
    let hp = periodic_operator(omega, lambda);
    let (lo, hi) = (edges.g_minus + GAP_DELTA, edges.g_plus - GAP_DELTA);
    let in_gap = if hi > lo {
        spectra::sturm_count(&hp, hi) - spectra::sturm_count(&hp, lo)
    } else {
        0
    };

    let floor = -(4.0 + lambda * lambda).sqrt();
    let sq = build_squared_operator(omega, lambda)?;
    let squared_bound_holds = spectra::inertia_count(&sq.matrix, floor - GAP_DELTA) == 0;

    // spectral mapping: the smallest squared eigenvalue comes from the
    // eigenvalue of h^P closest to λ/2
    let c = lambda / 2.0;
    let n = hp.dim();
    let k = spectra::sturm_count(&hp, c);
    let mut nearest = f64::INFINITY;
    for idx in [k.wrapping_sub(1), k] {
        if idx < n {
            let e = spectra::kth_eigenvalue_tridiag(&hp, idx, 1e-13)?;
            nearest = nearest.min((e - c).abs());
        }
    }
    let min_sq_eig = nearest * nearest - (2.0 + lambda * lambda / 4.0);
    Ok(GapReport {
        gap_clean: in_gap == 0 && squared_bound_holds && min_sq_eig >= floor - GAP_DELTA,
        eigenvalues_in_gap: in_gap,
        min_sq_eig,
        squared_bound_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_layout() {
        assert_eq!(bdm_potential(&[0, 1], 2.0), vec![2.0, 0.0, 0.0, 2.0]);
        assert_eq!(bdm_potential(&[1, 0], 1.0), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn side_values() {
        let sq = build_squared_operator(&[0, 0, 0, 0], 1.0).unwrap();
        assert!(sq.side.iter().all(|&s| s.abs() < 1e-15));
        let sq = build_squared_operator(&[1, 0, 1, 0], 1.0).unwrap();
        for (n, s) in sq.side.iter().enumerate() {
            let want = if n % 2 == 0 { 0.0 } else if n % 4 == 1 { -1.0 } else { 1.0 };
            assert!((s - want).abs() < 1e-14, "site {} side {s}", n + 1);
        }
        for i in 0..8 {
            assert!(sq.matrix.get(i, i).abs() < 1e-14);
        }
    }

    #[test]
    fn z_plus_golden() {
        assert!((z_plus(1.0) - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        let c = psi_omega(&[0, 0, 0], 1.0).unwrap();
        assert!((c.z_plus * c.z_minus - 1.0).abs() < 1e-14);
        assert!((c.psi[3] - c.z_plus.powi(-3)).abs() < 1e-15);
        let c = psi_omega(&[1, 1, 1], 1.0).unwrap();
        assert!((c.psi[3] - c.z_plus.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn psi_overflow_is_a_range_error() {
        let long = vec![1u8; 2000];
        assert!(matches!(psi_omega(&long, 1.0), Err(Error::Range(_))));
    }

    #[test]
    fn alternating_corners_have_clean_gap() {
        let omega: Vec<u8> = (0..20).map(|k| (k % 2) as u8).collect();
        assert!(verify_gap(&omega, 1.0).unwrap().gap_clean);
    }
}
