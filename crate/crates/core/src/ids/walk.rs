//! Simple symmetric random walk statistics and the a priori IDS bound.
//!
//! For the walk `S_j = α_1 + ... + α_j` with maximum `Y = max_{j<=L} S_j`
//! and threshold `a = ⌈√L⌉`, reflecting every path at its first visit to
//! `a` gives `P(Y >= a, S_L <= 0) = P(S_L >= 2a)`. The conditional version
//! `P(Y >= a | S_L <= 0)` is larger by the factor `1/P(S_L <= 0)` and is
//! reported separately.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::floquet::band_edges_closed_form;
use crate::ids::{estimate_ids, IdsParams};
use crate::lattice::BoundaryCondition;
use crate::rng::{bernoulli_window, sample_rng};
use crate::spectra::sturm_count;

const CHUNK: usize = 4096;

/// `P(Z >= 2)` for a standard normal `Z`.
pub fn gaussian_tail_at_two() -> f64 {
    0.5 * erfc(2.0 / std::f64::consts::SQRT_2)
}

/// `π^{-1/2} ∫_2^∞ e^{-y²/2} dy = √2 · P(Z >= 2)`.
pub fn pi_prefactor_tail() -> f64 {
    std::f64::consts::SQRT_2 * gaussian_tail_at_two()
}

pub fn threshold(l: usize) -> i64 {
    (l as f64).sqrt().ceil() as i64
}

/// `P(S_L >= k)` from the binomial law of the number of up-steps.
pub fn exact_tail(l: usize, k: i64) -> f64 {
    // S_L = 2U - L >= k  <=>  U >= ceil((L + k) / 2)
    let need = (l as i64 + k + 1).div_euclid(2);
    if need <= 0 {
        return 1.0;
    }
    if need > l as i64 {
        return 0.0;
    }
    let b = Binomial::new(0.5, l as u64).expect("valid binomial");
    b.sf((need - 1) as u64)
}

/// Exact probabilities by enumerating all `2^L` paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkExact {
    pub l: usize,
    pub threshold: i64,
    pub p_cond: f64,
    pub p_joint: f64,
    pub p_tail: f64,
}

pub fn walk_exhaustive(l: usize) -> Result<WalkExact> {
    if l == 0 || l > 26 {
        return Err(Error::resource("exhaustive enumeration supports 1 <= L <= 26"));
    }
    let a = threshold(l);
    let (mut joint, mut below, mut tail) = (0u64, 0u64, 0u64);
    for code in 0u64..(1u64 << l) {
        let (mut s, mut y) = (0i64, i64::MIN);
        for j in 0..l {
            s += if code >> j & 1 == 1 { 1 } else { -1 };
            y = y.max(s);
        }
        if s <= 0 {
            below += 1;
            if y >= a {
                joint += 1;
            }
        }
        if s >= 2 * a {
            tail += 1;
        }
    }
    let total = (1u64 << l) as f64;
    Ok(WalkExact {
        l,
        threshold: a,
        p_cond: joint as f64 / below as f64,
        p_joint: joint as f64 / total,
        p_tail: tail as f64 / total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkReport {
    pub l: usize,
    pub trials: usize,
    pub threshold: i64,
    /// `P(Y >= a | S_L <= 0)`.
    pub p_cond: f64,
    pub p_cond_stderr: f64,
    /// `P(Y >= a, S_L <= 0)`.
    pub p_joint: f64,
    pub p_joint_stderr: f64,
    /// `P(S_L >= 2a)`.
    pub p_tail: f64,
    pub p_tail_stderr: f64,
    /// Binomial value of `P(S_L >= 2a)`.
    pub exact_tail: f64,
    /// `P(Z >= 2)`, the large-`L` limit of the tail.
    pub gaussian_ref: f64,
    /// The same tail with prefactor `π^{-1/2}` instead of `(2π)^{-1/2}`.
    pub pi_prefactor_ref: f64,
}

fn bernoulli_stderr(p: f64, n: usize) -> f64 {
    if n > 1 {
        (p * (1.0 - p) / (n - 1) as f64).sqrt()
    } else {
        0.0
    }
}

/// Monte Carlo estimates over `trials` walks of length `L`.
pub fn walk_statistics(l: usize, trials: usize, seed: u64) -> Result<WalkReport> {
    if l < 4 {
        return Err(Error::domain("walk length must be at least 4"));
    }
    if trials < 1000 {
        return Err(Error::domain("at least 1000 trials are required"));
    }
    let a = threshold(l);
    let chunks = trials.div_ceil(CHUNK);
    let (joint, below, tail) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = sample_rng(seed, c as u64);
            let n = CHUNK.min(trials - c * CHUNK);
            let (mut joint, mut below, mut tail) = (0u64, 0u64, 0u64);
            for _ in 0..n {
                let (mut s, mut y) = (0i64, i64::MIN);
                let mut left = l;
                while left > 0 {
                    let take = left.min(64);
                    let bits: u64 = rng.gen();
                    for j in 0..take {
                        s += if bits >> j & 1 == 1 { 1 } else { -1 };
                        y = y.max(s);
                    }
                    left -= take;
                }
                if s <= 0 {
                    below += 1;
                    if y >= a {
                        joint += 1;
                    }
                }
                if s >= 2 * a {
                    tail += 1;
                }
            }
            (joint, below, tail)
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    let n = trials as f64;
    let p_joint = joint as f64 / n;
    let p_tail = tail as f64 / n;
    let p_cond = if below > 0 { joint as f64 / below as f64 } else { 0.0 };
    Ok(WalkReport {
        l,
        trials,
        threshold: a,
        p_cond,
        p_cond_stderr: bernoulli_stderr(p_cond, below as usize),
        p_joint,
        p_joint_stderr: bernoulli_stderr(p_joint, trials),
        p_tail,
        p_tail_stderr: bernoulli_stderr(p_tail, trials),
        exact_tail: exact_tail(l, 2 * a),
        gaussian_ref: gaussian_tail_at_two(),
        pi_prefactor_ref: pi_prefactor_tail(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AprioriReport {
    pub energy: f64,
    /// Estimated `P(E_1(h^D_{[1,2L]}) < E)`.
    pub fraction: f64,
    pub fraction_stderr: f64,
    /// Independent Dirichlet IDS estimate at `E` on `4L` cells.
    pub ids: f64,
    pub ids_stderr: f64,
    /// `fraction / (2L)`.
    pub bound: f64,
    pub bound_respected: bool,
}

/// Compares `P(E_1(h^D) < E) / (2L)` with an IDS estimate at `E`.
///
/// The IDS is estimated with an independent seed on a Dirichlet box of
/// `4L` cells; Dirichlet decoupling makes the expected normalised count
/// non-decreasing under such refinement, so the comparison is meaningful
/// at finite volume.
pub fn apriori_bound_probe(
    lambda: f64,
    energy: f64,
    l: usize,
    trials: usize,
    seed: u64,
) -> Result<AprioriReport> {
    let edges = band_edges_closed_form(lambda);
    if energy < edges.e_minus {
        return Err(Error::precondition(format!(
            "energy {energy} lies below the spectral minimum {}",
            edges.e_minus
        )));
    }
    if l < 2 || trials == 0 {
        return Err(Error::domain("need L >= 2 and at least one trial"));
    }
    let hits: u64 = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let omega = bernoulli_window(&mut rng, 0.5, l);
            let op = crate::bdm::dirichlet_operator(&omega, lambda);
            u64::from(sturm_count(&op, energy) >= 1)
        })
        .sum();
    let fraction = hits as f64 / trials as f64;
    let fraction_stderr = bernoulli_stderr(fraction, trials);
    let params = IdsParams::new(lambda, 0.5, 4 * l, trials, seed.wrapping_add(0x9E37_79B9_7F4A_7C15))
        .with_bc(BoundaryCondition::Dirichlet);
    let curve = estimate_ids(&params, &[energy])?;
    let (ids, ids_stderr) = (curve.values[0], curve.stderr[0]);
    let sites = (2 * l) as f64;
    let bound = fraction / sites;
    let combined = (ids_stderr.powi(2) + (fraction_stderr / sites).powi(2)).sqrt();
    Ok(AprioriReport {
        energy,
        fraction,
        fraction_stderr,
        ids,
        ids_stderr,
        bound,
        bound_respected: ids >= bound - 3.0 * combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_step_walk() {
        let w = walk_exhaustive(4).unwrap();
        assert_eq!(w.threshold, 2);
        assert_eq!(w.p_joint, 1.0 / 16.0);
        assert_eq!(w.p_tail, 1.0 / 16.0);
        assert_eq!(w.p_cond, 1.0 / 11.0);
    }

    #[test]
    fn reference_constants() {
        assert!((gaussian_tail_at_two() - 0.022750131948179195).abs() < 1e-10);
        assert!((pi_prefactor_tail() - 0.0321734).abs() < 1e-6);
    }

    #[test]
    fn binomial_tail_matches_enumeration() {
        for l in [4, 7, 10] {
            let w = walk_exhaustive(l).unwrap();
            assert!((exact_tail(l, 2 * w.threshold) - w.p_tail).abs() < 1e-12);
        }
    }
}
