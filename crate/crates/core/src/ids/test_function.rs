//! Test function glued from rescaled two-site ground states.
//!
//! `φ_1` is the positive ground state of the Neumann pair with `λ` on the
//! second site, `φ_{-1}` the one with `λ` on the first site, both with value
//! 1 at the first site. With `r = φ_1(2)` one has `φ_{-1}(2) = 1/r`, and
//! cell `k` of `Ψ` is `r^{S_{k-1}} φ_{α_k}`, `α_k = 2ω_k - 1`. The pieces
//! agree across cell boundaries, so `Ψ` is an exact eigenfunction of the
//! Neumann restriction at the lowest cell energy.

use serde::Serialize;

use crate::bdm::{dirichlet_operator, neumann_operator, MAX_LOG_SCALE};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    pub lambda: f64,
    /// `φ_1(2)`.
    pub r: f64,
    /// Ground-state energy of the two-site Neumann cell.
    pub cell_energy: f64,
    /// `α_k ∈ {-1, 1}`.
    pub alpha: Vec<i8>,
    /// `S_1..S_L`.
    pub partial_sums: Vec<i64>,
    /// `max_j S_j`.
    pub max_partial_sum: i64,
    /// `Ψ(1..=2L)`, normalised by `Ψ(1) = 1`.
    pub values: Vec<f64>,
}

/// Ground state ratio `φ_1(2)/φ_1(1)` and energy of `[[-1, -1], [-1, -1 + λ]]`.
pub fn cell_ground_state(lambda: f64) -> (f64, f64) {
    let h = lambda / 2.0;
    let energy = -1.0 + h - (1.0 + h * h).sqrt();
    // first row: (-1 - E) φ(1) - φ(2) = 0
    (-1.0 - energy, energy)
}

pub fn build_test_function(omega: &[u8], lambda: f64) -> Result<TestFunction> {
    if lambda == 0.0 {
        return Err(Error::domain("the test function needs lambda != 0"));
    }
    if omega.is_empty() || omega.iter().any(|&w| w > 1) {
        return Err(Error::domain("window must be a non-empty 0/1 sequence"));
    }
    let (r, cell_energy) = cell_ground_state(lambda);
    let ln_r = r.ln().abs();
    let alpha: Vec<i8> = omega.iter().map(|&w| if w == 1 { 1 } else { -1 }).collect();
    let mut partial_sums = Vec::with_capacity(alpha.len());
    let mut s = 0i64;
    let mut values = Vec::with_capacity(2 * alpha.len());
    for &a in &alpha {
        // cell value at its first site is r^{S_{k-1}}, at its second r^{S_k}
        let start = r.powi(s as i32);
        s += i64::from(a);
        if (s.abs() as f64) * ln_r > MAX_LOG_SCALE {
            return Err(Error::Range(format!(
                "r^{s} leaves the representable range; shorten the window"
            )));
        }
        values.push(start);
        values.push(r.powi(s as i32));
        partial_sums.push(s);
    }
    let max_partial_sum = *partial_sums.iter().max().expect("non-empty window");
    Ok(TestFunction {
        lambda,
        r,
        cell_energy,
        alpha,
        partial_sums,
        max_partial_sum,
        values,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl TestFunction {
    pub fn norm_sq(&self) -> f64 {
        dot(&self.values, &self.values)
    }

    fn omega(&self) -> Vec<u8> {
        self.alpha.iter().map(|&a| u8::from(a == 1)).collect()
    }

    /// Copy rescaled so that `Ψ(2L) = 1`; the construction read from the
    /// right end, used when `r < 1`.
    pub fn right_to_left(&self) -> Vec<f64> {
        let last = *self.values.last().expect("non-empty");
        self.values.iter().map(|v| v / last).collect()
    }

    /// Largest `|(h^N - E) Ψ|(n)` relative to the local size of `Ψ`.
    pub fn neumann_residual(&self) -> f64 {
        let op = neumann_operator(&self.omega(), self.lambda);
        let hv = op.matvec(&self.values);
        let n = self.values.len();
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                let scale = self.values[lo..=hi].iter().cloned().fold(0.0, f64::max);
                ((hv[i] - self.cell_energy * self.values[i]) / scale).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Dirichlet Rayleigh quotient `<Ψ, h^D Ψ> / ||Ψ||^2`.
    pub fn dirichlet_rayleigh(&self) -> f64 {
        let op = dirichlet_operator(&self.omega(), self.lambda);
        dot(&self.values, &op.matvec(&self.values)) / self.norm_sq()
    }

    /// `2 (Ψ(1)^2 + Ψ(2L)^2) / ||Ψ||^2`: Dirichlet and Neumann restrictions
    /// differ by 2 on the two end sites only.
    pub fn endpoint_excess(&self) -> f64 {
        let first = self.values[0];
        let last = *self.values.last().expect("non-empty");
        2.0 * (first * first + last * last) / self.norm_sq()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_at_unit_coupling() {
        let (r, e) = cell_ground_state(1.0);
        assert!((r - (1.25f64.sqrt() - 0.5)).abs() < 1e-15);
        assert!((e + (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn values_match_the_walk() {
        let t = build_test_function(&[1, 0, 0, 1, 1, 1], 1.0).unwrap();
        assert_eq!(t.partial_sums, vec![1, 0, -1, 0, 1, 2]);
        assert_eq!(t.max_partial_sum, 2);
        for j in 1..=6 {
            let want = (2.0 * t.partial_sums[j - 1] as f64 * t.r.ln()).exp();
            assert!((t.values[2 * j - 1].powi(2) - want).abs() < 1e-12 * want.max(1.0));
            if j < 6 {
                assert_eq!(t.values[2 * j - 1], t.values[2 * j]);
            }
        }
    }

    #[test]
    fn balanced_window_has_equal_ends() {
        let t = build_test_function(&[0, 1, 1, 0], 1.0).unwrap();
        assert!((t.values[0] - t.values[7]).abs() < 1e-15);
    }

    #[test]
    fn rayleigh_identity() {
        let t = build_test_function(&[0, 0, 1, 0, 1, 1, 1, 0], 1.0).unwrap();
        assert!(t.neumann_residual() < 1e-12);
        let lhs = t.dirichlet_rayleigh() - t.cell_energy;
        assert!((lhs - t.endpoint_excess()).abs() < 1e-10);
    }
}
