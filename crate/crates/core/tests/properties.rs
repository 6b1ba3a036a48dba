use proptest::prelude::*;

use rdm_core::bdm::{
    build_squared_operator, decouple, dirichlet_operator, flip, neumann_operator, periodic_operator,
    psi_omega,
};
use rdm_core::floquet::{band_edges_closed_form, bands_from_discriminant};
use rdm_core::ids::{build_test_function, estimate_ids, linear_grid};
use rdm_core::lattice::{build_operator, reflect_extension};
use rdm_core::spectra::{eigen_dense, eigenvalues_tridiag, sturm_count};
use rdm_core::{BoundaryCondition, IdsParams, LatticeBox, SiteFunction, SymTridiagonal};

const BCS: [BoundaryCondition; 4] = [
    BoundaryCondition::Truncation,
    BoundaryCondition::Neumann,
    BoundaryCondition::Dirichlet,
    BoundaryCondition::Periodic,
];

fn omega_strategy(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, 1..=max_len)
}

// the squared operator needs a ring of at least two cells
fn ring_window(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, 2..=max_len)
}

fn lattice_case() -> impl Strategy<Value = (Vec<usize>, Vec<f64>)> {
    prop::collection::vec(1usize..=5, 1..=2).prop_flat_map(|ext| {
        let n: usize = ext.iter().product();
        (Just(ext), prop::collection::vec(-3.0f64..3.0, n))
    })
}

fn ring_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (3usize..=24).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-1.5f64..1.5, n - 1),
            -1.5f64..1.5,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operators_are_symmetric_with_consistent_spectra((ext, v) in lattice_case()) {
        let b = LatticeBox::from_extents(&ext).unwrap();
        let pot = SiteFunction::new(b.clone(), v).unwrap();
        for bc in BCS {
            let a = build_operator(&b, bc, &pot).unwrap().to_dense();
            prop_assert!(a.is_symmetric(0.0));
            let s = eigen_dense(&a).unwrap();
            let (glo, ghi) = a.gershgorin();
            prop_assert!(s.min() >= glo - 1e-10 && s.max() <= ghi + 1e-10);
            let sum: f64 = s.eigenvalues.iter().sum();
            prop_assert!((sum - a.trace()).abs() <= 1e-9 * (1.0 + a.frobenius_norm()));
        }
    }

    #[test]
    fn dirichlet_minus_neumann_is_twice_the_edge_count((ext, v) in lattice_case()) {
        let b = LatticeBox::from_extents(&ext).unwrap();
        let pot = SiteFunction::new(b.clone(), v).unwrap();
        let d = build_operator(&b, BoundaryCondition::Dirichlet, &pot).unwrap().to_dense();
        let n = build_operator(&b, BoundaryCondition::Neumann, &pot).unwrap().to_dense();
        let t = build_operator(&b, BoundaryCondition::Truncation, &pot).unwrap().to_dense();
        for i in 0..b.volume() {
            let edges = rdm_core::lattice::edge_count(&b, &b.site(i)).unwrap() as f64;
            prop_assert!((d.get(i, i) - t.get(i, i) - edges).abs() < 1e-15);
            prop_assert!((t.get(i, i) - n.get(i, i) - edges).abs() < 1e-15);
            prop_assert!((d.get(i, i) - n.get(i, i) - 2.0 * edges).abs() < 1e-15);
        }
    }

    #[test]
    fn free_neumann_bottom_is_minus_two_d(ext in prop::collection::vec(1usize..=6, 1..=2)) {
        let b = LatticeBox::from_extents(&ext).unwrap();
        let op = build_operator(&b, BoundaryCondition::Neumann, &SiteFunction::zeros(b.clone())).unwrap();
        let e = op.lowest_eigenvalue(1e-12).unwrap();
        prop_assert!((e + 2.0 * ext.len() as f64).abs() < 1e-9, "{e}");
    }

    #[test]
    fn bisection_matches_jacobi_on_chains((ext, v) in lattice_case()) {
        prop_assume!(ext.len() == 1);
        let b = LatticeBox::from_extents(&ext).unwrap();
        let pot = SiteFunction::new(b.clone(), v).unwrap();
        for bc in BCS {
            let op = build_operator(&b, bc, &pot).unwrap();
            let t = op.to_tridiagonal().unwrap();
            let a = eigenvalues_tridiag(&t, 1e-13).unwrap();
            let j = eigen_dense(&op.to_dense()).unwrap();
            for (x, y) in a.eigenvalues.iter().zip(&j.eigenvalues) {
                prop_assert!((x - y).abs() < 1e-10, "{bc}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn ring_sturm_counts_match_jacobi((diag, off, corner) in ring_strategy(), e in -4.0f64..4.0) {
        let t = SymTridiagonal::with_corner(diag, off, corner).unwrap();
        let eig = eigen_dense(&t.to_dense()).unwrap().eigenvalues;
        prop_assume!(eig.iter().all(|x| (x - e).abs() > 1e-9));
        prop_assert_eq!(sturm_count(&t, e), eig.iter().filter(|&&x| x <= e).count());
    }

    #[test]
    fn neumann_reflection_keeps_the_bottom((ext, v) in lattice_case(), axis in 1usize..=2) {
        prop_assume!(axis <= ext.len());
        let b = LatticeBox::from_extents(&ext).unwrap();
        let pot = SiteFunction::new(b.clone(), v).unwrap();
        let big = reflect_extension(&pot, axis).unwrap();
        let e = build_operator(&b, BoundaryCondition::Neumann, &pot).unwrap().lowest_eigenvalue(1e-12).unwrap();
        let e2 = build_operator(big.domain(), BoundaryCondition::Neumann, &big)
            .unwrap()
            .lowest_eigenvalue(1e-12)
            .unwrap();
        prop_assert!((e - e2).abs() < 1e-9, "{e} vs {e2}");
    }

    #[test]
    fn flip_reflects_the_spectrum(omega in omega_strategy(12), lambda in -3.0f64..3.0) {
        let f = flip(&omega);
        let ops = [
            (periodic_operator(&omega, lambda), periodic_operator(&f, lambda)),
            (dirichlet_operator(&omega, lambda), neumann_operator(&f, lambda)),
        ];
        for (a, b) in ops {
            let sa = eigen_dense(&a.to_dense()).unwrap().eigenvalues;
            let mut sb: Vec<f64> = eigen_dense(&b.to_dense()).unwrap().eigenvalues.iter().map(|x| lambda - x).collect();
            sb.sort_by(f64::total_cmp);
            for (x, y) in sa.iter().zip(&sb) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn periodic_spectrum_lies_between_outer_edges(omega in omega_strategy(40), lambda in -3.0f64..3.0) {
        let e = band_edges_closed_form(lambda);
        let s = eigenvalues_tridiag(&periodic_operator(&omega, lambda), 1e-13).unwrap();
        prop_assert!(s.min() >= e.e_minus - 1e-9);
        prop_assert!(s.max() <= e.e_plus + 1e-9);
    }

    #[test]
    fn periodic_eigenvalues_sit_in_floquet_bands(omega in omega_strategy(4), cells in 1usize..=6, lambda in -3.0f64..3.0) {
        let bands = bands_from_discriminant(&rdm_core::bdm::bdm_potential(&omega, lambda), None, 1e-13, "probe").unwrap();
        let repeated: Vec<u8> = omega.iter().cycle().take(omega.len() * cells).cloned().collect();
        let s = eigenvalues_tridiag(&periodic_operator(&repeated, lambda), 1e-13).unwrap();
        for x in s.eigenvalues {
            prop_assert!(bands.contains(x, 1e-9), "{x} outside {}", bands.summary());
        }
    }

    #[test]
    fn squared_operator_splits(omega in ring_window(10), lambda in 0.1f64..3.0) {
        let sq = build_squared_operator(&omega, lambda).unwrap();
        let full = eigen_dense(&sq.matrix).unwrap().eigenvalues;
        let split = decouple(&omega, lambda).unwrap().joint_spectrum(1e-13).unwrap();
        prop_assert_eq!(full.len(), split.len());
        for (x, y) in full.iter().zip(&split) {
            prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn gap_counting_through_the_squared_operator(omega in ring_window(30), lambda in 0.2f64..3.0, eps in 0.0f64..0.5) {
        let e = band_edges_closed_form(lambda);
        let hp = periodic_operator(&omega, lambda);
        let eig = eigenvalues_tridiag(&hp, 1e-13).unwrap().eigenvalues;
        let (lo, hi) = (e.g_minus - eps, e.g_plus + eps);
        prop_assume!(eig.iter().all(|x| (x - lo).abs() > 1e-8 && (x - hi).abs() > 1e-8));
        let direct = eig.iter().filter(|&&x| lo <= x && x <= hi).count();
        let s = (4.0 + lambda * lambda).sqrt();
        let eta = 2.0 * eps * (e.g_plus - lambda / 2.0) + eps * eps;
        let pair = decouple(&omega, lambda).unwrap();
        let via = sturm_count(&pair.plus, -s + eta) + sturm_count(&pair.minus, -s + eta);
        prop_assert_eq!(direct, via);
    }

    #[test]
    fn certificate_solves_the_equation(omega in omega_strategy(120), lambda in 0.1f64..3.0) {
        let c = psi_omega(&omega, lambda).unwrap();
        prop_assert!(c.psi.iter().all(|&x| x > 0.0));
        prop_assert!(c.max_residual() <= 1e-12);
    }

    #[test]
    fn test_function_rayleigh_identity(omega in omega_strategy(60), lambda in 0.2f64..3.0) {
        let t = build_test_function(&omega, lambda).unwrap();
        prop_assert!(t.neumann_residual() < 1e-11);
        let lhs = t.dirichlet_rayleigh() - t.cell_energy;
        prop_assert!((lhs - t.endpoint_excess()).abs() < 1e-10);
        let bottom = eigenvalues_tridiag(&dirichlet_operator(&omega, lambda), 1e-13).unwrap().min();
        prop_assert!(t.dirichlet_rayleigh() >= bottom - 1e-10);
    }
}

#[test]
fn ids_is_monotone_and_thread_count_invariant() {
    let params = IdsParams::new(1.5, 0.4, 30, 300, 11);
    let grid = linear_grid(-3.0, 4.0, 80);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_ids(&params, &grid).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
    assert!(one.values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn boundary_conditions_converge() {
    let grid = linear_grid(-2.0, 3.0, 60);
    let mut sup = Vec::new();
    for l in [50, 100, 200] {
        let d = estimate_ids(&IdsParams::new(1.0, 0.5, l, 400, 5), &grid).unwrap();
        let n = estimate_ids(
            &IdsParams::new(1.0, 0.5, l, 400, 5).with_bc(BoundaryCondition::Neumann),
            &grid,
        )
        .unwrap();
        sup.push(
            d.values
                .iter()
                .zip(&n.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    assert!(sup[0] > sup[1] && sup[1] > sup[2], "{sup:?}");
}

#[test]
fn ids_is_flat_across_the_central_gap() {
    let lambda = 2.0;
    let e = band_edges_closed_form(lambda);
    let grid = linear_grid(e.g_minus + 0.01, e.g_plus - 0.01, 20);
    let periodic = IdsParams::new(lambda, 0.5, 60, 300, 9).with_bc(BoundaryCondition::Periodic);
    let curve = estimate_ids(&periodic, &grid).unwrap();
    assert!(curve.values.iter().all(|&v| v == 0.5));
    let dirichlet = estimate_ids(&IdsParams::new(lambda, 0.5, 60, 300, 9), &grid).unwrap();
    let first = dirichlet.values[0];
    for (v, s) in dirichlet.values.iter().zip(&dirichlet.stderr) {
        assert!((v - first).abs() <= 2.0 * s + 1e-12);
        assert!((v - 0.5).abs() <= 1.0 / 60.0 + 2.0 * s);
    }
}
