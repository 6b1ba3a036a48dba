//! Numerical checks shared by the `verify-all` command and the acceptance
//! tests.
//!
//! Each check returns a [`CheckOutcome`] with a one-line detail string. A
//! check that hits an error is reported as failed with the error text.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bdm::{bdm_potential, periodic_operator, psi_omega, verify_gap};
use crate::error::Result;
use crate::floquet::{
    band_edges_closed_form, bands_from_discriminant, bdm_discriminant_poly, discriminant,
    omega_one_potential, omega_star_potential, sigma_lambda, BandStructure, SigmaMode,
};
use crate::ids::walk::{gaussian_tail_at_two, walk_exhaustive, walk_statistics};
use crate::ids::{
    check_symmetry, dos_histogram, edge_grid, edge_singularity_fit, estimate_ids, symmetric_grid,
    IdsCurve, IdsParams, Side,
};
use crate::model::{
    build_omega_star, classify_minimizers_1d, ground_energy_map, spectral_bottom_periodic,
    spectral_top_periodic, verify_bubbles, Geometry, SingleSite, DEFAULT_ENUMERATION_CAP,
};
use crate::rng::{bernoulli_window, sample_rng};
use crate::spectra::{eigen_dense, eigenvalues_tridiag, SymTridiagonal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// Reduced sample sizes for smoke runs.
    Quick,
    /// The sizes the acceptance thresholds were pinned for.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Non-blocking checks are reported but do not fail a run.
    pub blocking: bool,
    pub seconds: f64,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        let status = match (self.passed, self.blocking) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        format!(
            "[{status}] {:>2} {} ({:.2}s): {}",
            self.id, self.name, self.seconds, self.detail
        )
    }
}

pub const CHECK_IDS: [u8; 14] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14];

const SEED: u64 = 20_240_611;

fn name_of(id: u8) -> &'static str {
    match id {
        1 => "closed-form band edges",
        2 => "free limit",
        3 => "discriminant polynomial",
        4 => "central gap at finite volume",
        5 => "gap certificate residual",
        6 => "bubbles toward the corners",
        7 => "alternating configuration is extremal",
        8 => "periodic minimizers are balanced",
        9 => "IDS flip symmetry",
        10 => "1/log^2 behaviour at band edges",
        11 => "constant configuration covers the side gaps",
        12 => "periodic spectra inside the conjectured set",
        13 => "bisection against Jacobi",
        14 => "reflection principle for the walk",
        _ => "unknown check",
    }
}

pub fn run_check(id: u8, scale: Scale) -> CheckOutcome {
    let start = Instant::now();
    let result = match id {
        1 => check_band_edges(),
        2 => check_free_limit(),
        3 => check_discriminant(),
        4 => check_gap(scale),
        5 => check_certificate(scale),
        6 => check_bubbles(),
        7 => check_extremal(),
        8 => check_minimizers(),
        9 => check_symmetry_ids(scale),
        10 => check_edge_fit(scale),
        11 => check_coverage(),
        12 => check_conjecture(scale),
        13 => check_solvers(scale),
        14 => check_walk(scale),
        _ => Ok((false, format!("no check with id {id}"))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome {
        id,
        name: name_of(id),
        passed,
        blocking: id != 12,
        seconds: start.elapsed().as_secs_f64(),
        detail,
    }
}

pub fn run_all(scale: Scale) -> Vec<CheckOutcome> {
    CHECK_IDS.iter().map(|&id| run_check(id, scale)).collect()
}

type Check = Result<(bool, String)>;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn central_gap(bands: &BandStructure, center: f64) -> Option<(f64, f64)> {
    bands
        .gaps()
        .into_iter()
        .find(|&(lo, hi)| lo <= center && center <= hi)
}

fn check_band_edges() -> Check {
    let s5 = 5f64.sqrt();
    let golden = [-(1.0 + s5) / 2.0, (3.0 - s5) / 2.0, (s5 - 1.0) / 2.0, (3.0 + s5) / 2.0];
    let e = band_edges_closed_form(1.0);
    let closed_ok = e.as_array().iter().zip(golden).all(|(a, b)| close(*a, b, 1e-14));

    let bands = bands_from_discriminant(&omega_star_potential(1.0), None, 1e-13, "omega_star")?;
    let first = bands.bands.first().map_or(f64::NAN, |b| b.lower);
    let last = bands.bands.last().map_or(f64::NAN, |b| b.upper);
    let gap = central_gap(&bands, 0.5);
    let floquet_ok = close(first, e.e_minus, 1e-9)
        && close(last, e.e_plus, 1e-9)
        && gap.is_some_and(|(lo, hi)| close(lo, e.g_minus, 1e-9) && close(hi, e.g_plus, 1e-9));

    // periodic restriction on 8 period cells contains the Bloch states at
    // quasi-momenta 0 and π, which sit exactly on the band edges
    let omega: Vec<u8> = (0..16).map(|k| u8::from(k % 2 == 1)).collect();
    let eig = eigenvalues_tridiag(&periodic_operator(&omega, 1.0), 1e-13)?;
    let hits = e
        .as_array()
        .iter()
        .all(|&edge| eig.eigenvalues.iter().any(|&x| close(x, edge, 1e-9)));
    let inside = eig.eigenvalues.iter().all(|&x| bands.contains(x, 1e-9));
    Ok((
        closed_ok && floquet_ok && hits && inside,
        format!(
            "edges ({:.9}, {:.9}, {:.9}, {:.9}); Floquet outer [{first:.12}, {last:.12}], \
             central gap {gap:?}; 32-site ring hits all edges: {hits}, inside bands: {inside}",
            e.e_minus, e.g_minus, e.g_plus, e.e_plus
        ),
    ))
}

fn check_free_limit() -> Check {
    let e = band_edges_closed_form(0.0);
    let sigma = sigma_lambda(0.0, SigmaMode::Proved)?;
    let floquet = bands_from_discriminant(&omega_star_potential(0.0), None, 1e-13, "free")?;
    let single = |b: &BandStructure| {
        b.len() == 1 && close(b.bands[0].lower, -2.0, 1e-9) && close(b.bands[0].upper, 2.0, 1e-9)
    };
    let ok = e.g_minus == 0.0 && e.g_plus == 0.0 && single(&sigma) && single(&floquet);
    Ok((
        ok,
        format!(
            "G_- = {}, G_+ = {}; closed form {}; Floquet {}",
            e.g_minus,
            e.g_plus,
            sigma.summary(),
            floquet.summary()
        ),
    ))
}

fn check_discriminant() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let lambda = -3.0 + 6.0 * i as f64 / 99.0;
        for j in 0..100 {
            let e = -5.0 + 10.0 * j as f64 / 99.0;
            let d = discriminant(&omega_star_potential(lambda), e) - bdm_discriminant_poly(lambda, e);
            worst = worst.max(d.abs());
        }
    }
    Ok((worst <= 1e-10, format!("max |D_transfer - D_poly| = {worst:.3e} on 100x100 grid")))
}

fn check_gap(scale: Scale) -> Check {
    let per_lambda = match scale {
        Scale::Quick => 50,
        Scale::Full => 500,
    };
    let mut lines = Vec::new();
    let mut all = true;
    for (li, lambda) in [0.5f64, 1.0, 2.0, 3.0].into_iter().enumerate() {
        let floor = -(4.0 + lambda * lambda).sqrt();
        let reports = (0..per_lambda as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(SEED + li as u64, i);
                verify_gap(&bernoulli_window(&mut rng, 0.5, 100), lambda)
            })
            .collect::<Result<Vec<_>>>()?;
        let in_gap: usize = reports.iter().map(|r| r.eigenvalues_in_gap).sum();
        let min_sq = reports.iter().map(|r| r.min_sq_eig).fold(f64::INFINITY, f64::min);
        let ok = reports.iter().all(|r| r.gap_clean) && min_sq >= floor - 1e-9;
        all &= ok;
        lines.push(format!(
            "λ={lambda}: {in_gap} in gap, min squared eig {min_sq:.12} (floor {floor:.12})"
        ));
    }
    Ok((all, format!("{per_lambda} samples, L=100; {}", lines.join("; "))))
}

fn check_certificate(scale: Scale) -> Check {
    let windows = match scale {
        Scale::Quick => 200,
        Scale::Full => 1000,
    };
    let lambdas = [0.5, 1.0, 2.0, 3.0];
    let worst = (0..windows as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(SEED ^ 0x5, i);
            let lambda = lambdas[i as usize % lambdas.len()];
            let len = rng.gen_range(2..=100);
            let omega = bernoulli_window(&mut rng, 0.5, len);
            psi_omega(&omega, lambda).map(|c| c.max_residual())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((worst <= 1e-12, format!("{windows} windows, max relative residual {worst:.3e}")))
}

fn check_bubbles() -> Check {
    let q1 = SingleSite::new(Geometry::new(vec![8], vec![3])?, vec![1.0, 2.0, 1.0])?;
    let r1 = verify_bubbles(&q1, 1.0)?;
    let q2 = SingleSite::new(Geometry::new(vec![4, 4], vec![2, 2])?, vec![1.0; 4])?;
    let r2 = verify_bubbles(&q2, 1.0)?;
    let ok = r1.monotone && r1.min_margin > 0.0 && r2.monotone && r2.min_margin > 0.0;
    Ok((
        ok,
        format!(
            "d=1: {} pairs, min margin {:.3e}; d=2: {} pairs, min margin {:.3e}",
            r1.checked_pairs, r1.min_margin, r2.checked_pairs, r2.min_margin
        ),
    ))
}

fn check_extremal() -> Check {
    let q = SingleSite::bdm(1.0);
    let g = Geometry::bdm();
    let star = build_omega_star(&g);
    let e = band_edges_closed_form(1.0);
    let bottom = spectral_bottom_periodic(&star, &q, 1.0)?;
    let top = spectral_top_periodic(&star, &q, 1.0)?;
    let map = ground_energy_map(&q, 1.0)?;
    let at_corner = map.get(&g.a_min()).unwrap_or(f64::NAN);
    // flip invariant: σ(h_ω) = λ - σ(h_{1-ω}), and ω* is mapped to a shift
    // of itself, so sup σ = λ - inf σ
    let ok = close(bottom, e.e_minus, 1e-10)
        && close(bottom, at_corner, 1e-10)
        && close(top, e.e_plus, 1e-10)
        && close(top, 1.0 - bottom, 1e-10);
    Ok((
        ok,
        format!(
            "inf σ(ω*) = {bottom:.12}, E_- = {:.12}, E0(a_min) = {at_corner:.12}, \
             sup σ(ω*) = {top:.12}, E_+ = {:.12}",
            e.e_minus, e.e_plus
        ),
    ))
}

fn check_minimizers() -> Check {
    let q = SingleSite::bdm(1.0);
    let mut ok = true;
    let mut lines = Vec::new();
    for l in [2, 3, 4] {
        let r = classify_minimizers_1d(&q, l, 1.0, DEFAULT_ENUMERATION_CAP)?;
        let mins = r.minimizers().len();
        let expected = if l % 2 == 0 {
            r.configurations.iter().filter(|c| c.balanced).count()
        } else {
            0
        };
        ok &= r.predicate_holds && mins == expected;
        lines.push(format!("L={l}: {mins} minimizers"));
    }
    Ok((ok, lines.join(", ")))
}

fn check_symmetry_ids(scale: Scale) -> Check {
    let samples = match scale {
        Scale::Quick => 400,
        Scale::Full => 2000,
    };
    let params = IdsParams::new(1.0, 0.5, 100, samples, SEED);
    let e = band_edges_closed_form(1.0);
    let grid = symmetric_grid(1.0, e.e_plus - 0.5 + 0.1, 120);
    let curve = estimate_ids(&params, &grid)?;
    let report = check_symmetry(&curve)?;
    Ok((
        report.max_deviation <= 0.02,
        format!(
            "L=100, {samples} samples, {} points: max deviation {:.4} at E={:.4} (stderr {:.4})",
            report.pairs, report.max_deviation, report.worst_energy, report.worst_stderr
        ),
    ))
}

/// Lipschitz IDS `N(E0 + ε) = N(E0) + ε` on the same grid; its log-squared
/// products vary by a factor ≈ 11 over `[1e-3, 1e-1]`.
pub fn lipschitz_control(curve: &IdsCurve, e0: f64) -> IdsCurve {
    let values = curve.grid.iter().map(|&e| 0.5 + (e - e0)).collect();
    IdsCurve {
        params: curve.params.clone(),
        grid: curve.grid.clone(),
        values,
        stderr: vec![0.0; curve.grid.len()],
    }
}

fn check_edge_fit(scale: Scale) -> Check {
    let (l, samples) = match scale {
        Scale::Quick => (200, 1000),
        Scale::Full => (400, 5000),
    };
    let e = band_edges_closed_form(1.0);
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, e0) in [("E_-", e.e_minus), ("G_+", e.g_plus)] {
        let params = IdsParams::new(1.0, 0.5, l, samples, SEED ^ 0xED6E);
        let curve = estimate_ids(&params, &edge_grid(e0, 1e-3, 1e-1, 21))?;
        let fit = edge_singularity_fit(&curve, e0, Side::Above, 1e-3, 1e-1)?;
        let control = edge_singularity_fit(&lipschitz_control(&curve, e0), e0, Side::Above, 1e-3, 1e-1)?;
        ok &= fit.pass_median && !control.pass_median;
        lines.push(format!(
            "{name}: median {:.4}, products in [{:.4}, {:.4}] (ratio {:.2}), control ratio {:.2}",
            fit.median,
            fit.product_min,
            fit.product_max,
            fit.product_max / fit.product_min,
            control.product_max / control.product_min
        ));
    }
    Ok((ok, format!("L={l}, {samples} samples; {}", lines.join("; "))))
}

fn check_coverage() -> Check {
    let mut ok = true;
    let mut lines = Vec::new();
    for lambda in [0.5, 1.0, 2.0] {
        let star = bands_from_discriminant(&omega_star_potential(lambda), None, 1e-13, "omega_star")?;
        let one = bands_from_discriminant(&omega_one_potential(lambda), None, 1e-13, "omega_one")?;
        let central = central_gap(&star, lambda / 2.0);
        let side: Vec<(f64, f64)> = star.gaps().into_iter().filter(|g| Some(*g) != central).collect();
        let covered = side.iter().all(|&(lo, hi)| one.covers(lo, hi, 1e-9));
        let sigma = sigma_lambda(lambda, SigmaMode::Proved)?;
        ok &= covered && sigma.len() == 2;
        lines.push(format!(
            "λ={lambda}: {} side gaps covered: {covered}, {} bands",
            side.len(),
            sigma.len()
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn check_conjecture(scale: Scale) -> Check {
    let lambda = 3.0;
    let conj = sigma_lambda(lambda, SigmaMode::Conjecture)?;
    let mut outside = 0usize;
    let mut total = 0usize;
    for period in 1..=4usize {
        for code in 0..(1u32 << period) {
            let omega: Vec<u8> = (0..period).map(|j| (code >> j & 1) as u8).collect();
            let bands = bands_from_discriminant(&bdm_potential(&omega, lambda), None, 1e-12, "probe")?;
            for b in &bands.bands {
                total += 1;
                let inside = conj
                    .bands
                    .iter()
                    .any(|c| b.lower >= c.lower - 1e-2 && b.upper <= c.upper + 1e-2);
                outside += usize::from(!inside);
            }
        }
    }
    let (l, samples, bins) = match scale {
        Scale::Quick => (100, 100, 300),
        Scale::Full => (200, 400, 600),
    };
    let dos = dos_histogram(&IdsParams::new(lambda, 0.5, l, samples, SEED ^ 0xD05), bins)?;
    let support = dos.support_intervals(0.0);
    Ok((
        outside == 0 && support.len() == 6,
        format!(
            "{outside} of {total} periodic bands outside {} conjectured bands; \
             DOS support has {} intervals",
            conj.len(),
            support.len()
        ),
    ))
}

fn check_solvers(scale: Scale) -> Check {
    let count = match scale {
        Scale::Quick => 50,
        Scale::Full => 200,
    };
    let worst = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(SEED ^ 0x7D, i);
            let n = rng.gen_range(1..=60);
            let diag = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let off = (0..n - 1).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let t = SymTridiagonal::new(diag, off)?;
            let a = eigenvalues_tridiag(&t, 1e-13)?;
            let b = eigen_dense(&t.to_dense())?;
            Ok(a.eigenvalues
                .iter()
                .zip(&b.eigenvalues)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((worst <= 1e-10, format!("{count} matrices, max eigenvalue difference {worst:.3e}")))
}

fn check_walk(scale: Scale) -> Check {
    let trials = match scale {
        Scale::Quick => 20_000,
        Scale::Full => 100_000,
    };
    let small = walk_exhaustive(4)?;
    let w = walk_statistics(400, trials, SEED)?;
    let sigma = (w.p_joint_stderr.powi(2) + w.p_tail_stderr.powi(2)).sqrt();
    let agree = (w.p_joint - w.p_tail).abs() <= 3.0 * sigma;
    let tail_ok = (w.p_tail - w.exact_tail).abs() <= 3.0 * w.p_tail_stderr;
    let gauss = gaussian_tail_at_two();
    let ok = small.p_joint == small.p_tail && agree && tail_ok && close(gauss, 0.02275, 5e-6);
    Ok((
        ok,
        format!(
            "L=4 exact: joint {} = tail {}; L=400, {trials} walks: joint {:.5} vs tail {:.5} \
             (3σ = {:.5}), binomial tail {:.5}, conditional {:.5}; P(Z>=2) = {gauss:.5}",
            small.p_joint,
            small.p_tail,
            w.p_joint,
            w.p_tail,
            3.0 * sigma,
            w.exact_tail,
            w.p_cond
        ),
    ))
}
