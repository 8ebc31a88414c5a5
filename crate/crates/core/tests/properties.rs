mod common;

use std::sync::Arc;

use crm_core::angmom::{wigner3j, HalfInt};
use crm_core::basis::{build_block, rotational_labels, Parity};
use crm_core::dynamics::{diagonalize, reduced_cycles, TimeGrid, Wavepacket};
use crm_core::hamiltonian::build_hamiltonian;
use crm_core::molecule::{FieldPoint, MoleculeSpec, Nucleus};
use crm_core::observables::{reduce, Observable, RotationalProbe};
use crm_core::pulse::kick_amplitudes;
use proptest::prelude::*;

fn spin_twice() -> impl Strategy<Value = i32> {
    0..=9i32
}

fn nucleus() -> impl Strategy<Value = Nucleus> {
    (spin_twice(), -2.0..2.0f64, -1e-3..1e-3f64, -3.0..3.0f64).prop_map(|(tw, eqq, sr, g)| Nucleus {
        spin: HalfInt::from_twice(tw),
        eqq: if tw >= 2 { eqq } else { 0.0 },
        spin_rotation: sr,
        g_factor: g,
    })
}

fn molecule() -> impl Strategy<Value = MoleculeSpec> {
    (
        "[a-z][a-z0-9_-]{0,12}",
        1.0..1e5f64,
        nucleus(),
        nucleus(),
        -1e-3..1e-3f64,
        -1e-2..1e-2f64,
        -0.1..0.1f64,
    )
        .prop_map(|(name, b_e, n1, n2, c3, c4, g_r)| MoleculeSpec {
            name,
            b_e,
            nuclei: [n1, n2],
            c3,
            c4,
            g_r,
        })
}

fn triad() -> impl Strategy<Value = [i32; 6]> {
    (0..=12i32, 0..=12i32, 0..=12i32)
        .prop_flat_map(|(a, b, c)| {
            let m1 = (0..=a).prop_map(move |k| 2 * k - a);
            let m2 = (0..=b).prop_map(move |k| 2 * k - b);
            (Just(a), Just(b), Just(c), m1, m2)
        })
        .prop_map(|(a, b, c, m1, m2)| [a, b, c, m1, m2, -m1 - m2])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn molecule_toml_round_trip(spec in molecule()) {
        let text = spec.to_toml_string();
        let back = MoleculeSpec::from_toml_str(&text).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn wigner3j_symmetries(t in triad()) {
        let h = HalfInt::from_twice;
        let [a, b, c, x, y, z] = t;
        let base = wigner3j(h(a), h(b), h(c), h(x), h(y), h(z));
        prop_assert!((base - common::racah_3j(a, b, c, x, y, z)).abs() < 1e-12);
        // cyclic permutations leave the symbol unchanged
        prop_assert_eq!(base, wigner3j(h(b), h(c), h(a), h(y), h(z), h(x)));
        // odd permutations and sign flips pick up (−1)^{j1+j2+j3}
        if (a + b + c) % 2 == 0 {
            let sign = if ((a + b + c) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!(base * sign, wigner3j(h(b), h(a), h(c), h(y), h(x), h(z)));
            prop_assert_eq!(base * sign, wigner3j(h(a), h(b), h(c), h(-x), h(-y), h(-z)));
        }
    }

    #[test]
    fn reduced_cycles_is_a_fraction(e in -1e7..1e7f64, t in 0.0..1e4f64) {
        let f = reduced_cycles(e, t);
        prop_assert!((0.0..1.0).contains(&f));
        // agrees with the naive reduction where that is still accurate
        if (e * t).abs() < 1e3 {
            let naive = (e * t).rem_euclid(1.0);
            let d = (f - naive).abs();
            prop_assert!(d.min(1.0 - d) < 1e-12);
        }
    }

    #[test]
    fn kick_is_unitary_and_isotropic(p in 0.0..30.0f64) {
        let kick = kick_amplitudes::<f64>(p, 80).unwrap();
        prop_assert!((kick.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((kick.alignment() - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn mean_n_grows_with_strength(p in 0.0..45.0f64, dp in 0.5..5.0f64) {
        let lo = kick_amplitudes::<f64>(p, 110).unwrap().mean_n();
        let hi = kick_amplitudes::<f64>(p + dp, 110).unwrap().mean_n();
        prop_assert!(hi >= lo - 1e-12);
    }

    #[test]
    fn time_grid_window_is_increasing(start in 0.0..1e7f64, len in 1e-3..1e3f64, n in 2usize..500) {
        let g = TimeGrid::window(1e-3, start, len, n).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert!(g.t_us().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn random_states_give_valid_reduced_matrices(seed in 0u64..1000) {
        let spec = MoleculeSpec::krb();
        let block = build_block(&spec, 4, HalfInt::from_twice(-7), Parity::Even).unwrap();
        let psi = common::random_state(block.dim(), seed);
        let rho = reduce(&psi, &block).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        let herm = (&rho.rho - rho.rho.adjoint()).norm();
        prop_assert!(herm < 1e-12);
        let a = rho.alignment();
        prop_assert!((0.0..=1.0).contains(&a));
        let purity = rho.purity();
        prop_assert!(purity > 0.0 && purity <= 1.0 + 1e-12);
        let s = rho.entropy_vn();
        prop_assert!(s >= 0.0 && s <= (rho.dim() as f64).log2().min(36f64.log2()) + 1e-12);
        prop_assert_eq!(rho.labels.len(), rotational_labels(&block).labels.len());
    }
}

#[test]
fn eigenstate_is_stationary() {
    let spec = MoleculeSpec::krb();
    let block = Arc::new(build_block(&spec, 4, HalfInt::from_twice(-7), Parity::Even).unwrap());
    let h = build_hamiltonian::<f64>(&spec, &block, FieldPoint::new(10.0).unwrap()).unwrap();
    let eig = Arc::new(diagonalize(&h).unwrap());
    let v = eig.eigenvectors().column(7).map(|x| num_complex::Complex::new(x, 0.0));
    let wp = Wavepacket::from_state(Arc::clone(&eig), &v).unwrap();
    let probe = RotationalProbe::new(&block);
    let first = probe.sample(wp.state_at(0.0).as_slice(), &Observable::ALL);
    for t in [0.1, 17.0, 4e3] {
        let s = probe.sample(wp.state_at(t).as_slice(), &Observable::ALL);
        assert!((s.alignment - first.alignment).abs() < 1e-12);
        assert!((s.purity - first.purity).abs() < 1e-12);
        assert!((s.entropy_bits - first.entropy_bits).abs() < 1e-10);
    }
}

#[test]
fn two_level_beat() {
    let spec = MoleculeSpec::krb();
    let block = Arc::new(build_block(&spec, 2, HalfInt::from_twice(-7), Parity::Even).unwrap());
    let h = build_hamiltonian::<f64>(&spec, &block, FieldPoint::new(10.0).unwrap()).unwrap();
    let eig = Arc::new(diagonalize(&h).unwrap());
    let (a, b) = (0, 5);
    let delta = eig.eigenvalues()[b] - eig.eigenvalues()[a];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let v = (eig.eigenvectors().column(a) + eig.eigenvectors().column(b)).map(|x| num_complex::Complex::new(x * r, 0.0));
    let wp = Wavepacket::from_state(Arc::clone(&eig), &v).unwrap();
    // overlap with the initial state oscillates as cos²(π Δ t)
    for t in [0.0, 0.1 / delta, 0.37 / delta, 0.5 / delta] {
        let psi = wp.state_at(t);
        let overlap = v.dotc(&psi).norm_sqr();
        let expected = (std::f64::consts::PI * delta * t).cos().powi(2);
        assert!((overlap - expected).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn f32_pipeline_tracks_f64() {
    let spec = MoleculeSpec::krb();
    let block = Arc::new(build_block(&spec, 8, HalfInt::from_twice(-7), Parity::Even).unwrap());
    let field = FieldPoint::new(10.0).unwrap();
    let h64 = build_hamiltonian::<f64>(&spec, &block, field).unwrap();
    let h32 = build_hamiltonian::<f32>(&spec, &block, field).unwrap();
    let e64 = diagonalize(&h64).unwrap();
    let e32 = diagonalize(&h32).unwrap();
    let scale = e64.eigenvalues().last().unwrap().abs();
    for (a, b) in e64.eigenvalues().iter().zip(e32.eigenvalues()) {
        assert!((a - f64::from(*b)).abs() < 1e-5 * scale);
    }
}
