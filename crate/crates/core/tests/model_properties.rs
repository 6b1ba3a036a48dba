use proptest::prelude::*;

use rdm_core::lattice::{apply, build_operator, reflect_extension};
use rdm_core::model::{
    approx_almost_sure_spectrum, assemble_potential, build_omega_star, classify_minimizers_1d,
    constant_configuration, ground_energy_map, spectral_bottom_periodic, DEFAULT_ENUMERATION_CAP,
};
use rdm_core::floquet::{band_edges_closed_form, bands_from_discriminant, omega_one_potential};
use rdm_core::{BoundaryCondition, Configuration, Distribution, Geometry, LatticeBox, SingleSite};

fn bubble_1d() -> SingleSite {
    SingleSite::new(Geometry::new(vec![8], vec![3]).unwrap(), vec![1.0, 2.0, 1.0]).unwrap()
}

fn plateau_2d() -> SingleSite {
    SingleSite::new(Geometry::new(vec![4, 4], vec![2, 2]).unwrap(), vec![1.0; 4]).unwrap()
}

#[test]
fn assembled_bdm_potentials() {
    let q = SingleSite::bdm(1.5);
    let w = LatticeBox::interval(1, 4).unwrap();
    let star = assemble_potential(&build_omega_star(q.geometry()), &w, &q, 1.0).unwrap();
    assert_eq!(star.values(), &[0.0, 1.5, 1.5, 0.0]);
    let one = assemble_potential(&constant_configuration(&[1]), &w, &q, 1.0).unwrap();
    assert_eq!(one.values(), &[0.0, 1.5, 0.0, 1.5]);
    let zero = assemble_potential(&Configuration::window_1d(&[1, 0]), &w, &q.scaled(0.0), 1.0).unwrap();
    assert!(zero.values().iter().all(|&v| v == 0.0));
    assert!(assemble_potential(&constant_configuration(&[1]), &LatticeBox::interval(1, 3).unwrap(), &q, 1.0).is_err());
}

#[test]
fn constant_configuration_bottom_matches_floquet() {
    let q = SingleSite::bdm(1.0);
    let bottom = spectral_bottom_periodic(&constant_configuration(&[1]), &q, 1.0).unwrap();
    let bands = bands_from_discriminant(&omega_one_potential(1.0), None, 1e-13, "one").unwrap();
    assert!((bottom - bands.bands[0].lower).abs() < 1e-10);
}

#[test]
fn energy_maps_are_reflection_symmetric() {
    for q in [bubble_1d(), plateau_2d(), SingleSite::bdm(2.0)] {
        for sign in [1.0, -1.0] {
            assert!(ground_energy_map(&q, sign).unwrap().reflection_defect() <= 1e-10);
        }
    }
}

#[test]
fn minimizers_of_short_periods() {
    let q = SingleSite::bdm(1.0);
    let two = classify_minimizers_1d(&q, 2, 1.0, DEFAULT_ENUMERATION_CAP).unwrap();
    assert_eq!(two.minimizers(), vec![&[0usize, 1][..], &[1, 0][..]]);
    let three = classify_minimizers_1d(&q, 3, 1.0, DEFAULT_ENUMERATION_CAP).unwrap();
    assert!(three.minimizers().is_empty() && three.predicate_holds);
    let best = three.configurations.iter().map(|c| c.bottom).fold(f64::INFINITY, f64::min);
    assert!(best > three.e_min + 1e-9);
}

#[test]
fn minimizers_sit_on_corners() {
    // Δ = {0, 1, 2} has the interior point 1
    let q = SingleSite::new(Geometry::new(vec![3], vec![1]).unwrap(), vec![1.0]).unwrap();
    for l in [2, 4] {
        let r = classify_minimizers_1d(&q, l, 1.0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(!r.minimizers().is_empty());
        for w in r.minimizers() {
            assert!(w.iter().all(|&x| x == 0 || x == 2), "{w:?}");
        }
    }
}

#[test]
fn enumeration_cap_is_a_resource_error() {
    let q = SingleSite::bdm(1.0);
    let err = classify_minimizers_1d(&q, 12, 1.0, 1000).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn reflected_corner_ground_state_solves_the_periodic_equation() {
    for q in [bubble_1d(), plateau_2d(), SingleSite::bdm(1.0)] {
        let g = q.geometry().clone();
        let cell = g.cell_box();
        let v = q.placed(&g.a_min()).unwrap();
        let gs = build_operator(&cell, BoundaryCondition::Neumann, &v).unwrap().ground_state(1e-13).unwrap();
        let mut psi = rdm_core::SiteFunction::new(cell.clone(), gs.vector).unwrap();
        let mut pot = v;
        for axis in 1..=g.dim() {
            for _ in 0..2 {
                psi = reflect_extension(&psi, axis).unwrap();
                pot = reflect_extension(&pot, axis).unwrap();
            }
        }
        // the reflected potential is the alternating-corner configuration
        let star = assemble_potential(&build_omega_star(&g), pot.domain(), &q, 1.0).unwrap();
        assert_eq!(star.values(), pot.values());

        let dom = pot.domain().clone();
        let op = build_operator(&dom, BoundaryCondition::Truncation, &pot).unwrap();
        let hpsi = apply(&op, &psi).unwrap();
        let scale = psi.values().iter().cloned().fold(0.0, f64::max);
        for (i, x) in dom.sites().enumerate() {
            let interior = (0..dom.dim()).all(|a| x[a] > dom.lower()[a] && x[a] < dom.upper()[a]);
            if interior {
                let r = hpsi.values()[i] - gs.energy * psi.values()[i];
                assert!(r.abs() <= 1e-12 * scale, "residual {r} at {x:?}");
            }
        }
    }
}

#[test]
fn periodic_union_grows_toward_the_two_band_set() {
    let q = SingleSite::bdm(1.0);
    let mu = Distribution::bernoulli(0.5).unwrap();
    let e = band_edges_closed_form(1.0);
    let one = approx_almost_sure_spectrum(&mu, &q, 1.0, 1, 1e-9).unwrap();
    let four = approx_almost_sure_spectrum(&mu, &q, 1.0, 4, 1e-9).unwrap();
    for b in &one.bands {
        assert!(four.covers(b.lower, b.upper, 1e-9));
    }
    let star = bands_from_discriminant(&[0.0, 1.0, 1.0, 0.0], None, 1e-13, "star").unwrap();
    for b in &star.bands {
        assert!(four.covers(b.lower, b.upper, 1e-9));
    }
    for b in &four.bands {
        assert!(b.lower >= e.e_minus - 1e-9 && b.upper <= e.e_plus + 1e-9);
        assert!(b.upper <= e.g_minus + 1e-9 || b.lower >= e.g_plus - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn neumann_windows_stay_above_the_corner_energy(omega in prop::collection::vec(0usize..=5, 1..=6)) {
        let q = bubble_1d();
        let g = q.geometry().clone();
        let e_corner = ground_energy_map(&q, 1.0).unwrap().get(&g.a_min()).unwrap();
        let n = omega.len() as i64 * 8;
        let w = LatticeBox::interval(1, n).unwrap();
        let v = assemble_potential(&Configuration::window_1d(&omega), &w, &q, 1.0).unwrap();
        let bottom = build_operator(&w, BoundaryCondition::Neumann, &v).unwrap().lowest_eigenvalue(1e-13).unwrap();
        prop_assert!(bottom >= e_corner - 1e-9, "{bottom} < {e_corner}");
    }

    #[test]
    fn even_periods_flip_the_spectrum(table in prop::collection::vec(0usize..=2, 2..=4), lambda in 0.1f64..3.0) {
        prop_assume!(table.len() % 2 == 0);
        let q = SingleSite::new(Geometry::new(vec![4], vec![2]).unwrap(), vec![lambda, lambda]).unwrap();
        let config = Configuration::periodic_1d(&table);
        let cell = config.cell_span(q.geometry()).unwrap();
        let plus = assemble_potential(&config, &cell, &q, 1.0).unwrap();
        let minus = assemble_potential(&config, &cell, &q, -1.0).unwrap();
        let top = build_operator(&cell, BoundaryCondition::Periodic, &plus).unwrap().highest_eigenvalue(1e-13).unwrap();
        let bottom = build_operator(&cell, BoundaryCondition::Periodic, &minus).unwrap().lowest_eigenvalue(1e-13).unwrap();
        prop_assert!((top + bottom).abs() <= 1e-10);
    }
}
