use proptest::prelude::*;

use fqg::evolution::{nonlinear_term, step, FieldName, ModelParams, SimState, Variant};
use fqg::harness::snapshot::{decode, encode, Snapshot};
use fqg::harness::{parse_config, RunConfig};
use fqg::initial::InitialCondition;
use fqg::semigroup::{apply_semigroup, SemigroupParams};
use fqg::spectral::{
    biot_savart_velocity, forward_transform, inverse_transform, make_grid, spectral_gradient, Axis, GridSpec,
};

fn grid() -> GridSpec {
    make_grid(32, 16.0).unwrap()
}

fn random_ic() -> impl Strategy<Value = InitialCondition> {
    (any::<u64>(), 1usize..6, 0.5f64..2.0, 0.8f64..2.0, -1.0f64..1.0)
        .prop_map(|(seed, modes, k_max, sigma, bias)| InitialCondition::Random { seed, modes, k_max, sigma, bias })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(ic in random_ic()) {
        let f = ic.build(&grid()).unwrap();
        let back = inverse_transform(&forward_transform(&f));
        prop_assert!(back.sub(&f).unwrap().max_abs() <= 1e-13 * f.max_abs().max(1e-300));
        prop_assert!(forward_transform(&f).hermitian_defect() <= 1e-14);
    }

    #[test]
    fn velocity_is_divergence_free(ic in random_ic(), beta in 0.0f64..1.99) {
        let z = forward_transform(&ic.build(&grid()).unwrap());
        let (u1, u2) = biot_savart_velocity(&z, beta).unwrap();
        let div = spectral_gradient(&u1, Axis::X1).add(&spectral_gradient(&u2, Axis::X2)).unwrap();
        prop_assert!(div.coeff_norm() <= 1e-12 * z.coeff_norm().max(1e-300));
    }

    #[test]
    fn nonlinear_term_keeps_the_mean(ic in random_ic(), beta in 0.0f64..1.5) {
        let p = ModelParams::new(Variant::SqgPhysical, 1.6, beta, grid()).unwrap();
        let s = SimState::from_initial(&p, 0.0, &[(FieldName::Z, ic)]).unwrap();
        let n = &nonlinear_term(&s, &p).unwrap()[&FieldName::Z];
        prop_assert!(n.coeffs()[0].norm() <= 1e-15);
    }

    #[test]
    fn semigroup_scales_the_mass(ic in random_ic(), tau in 0.0f64..3.0, alpha in 1.2f64..2.0) {
        let p = SemigroupParams::unshifted(alpha, 1.0).unwrap();
        let f = forward_transform(&ic.build(&grid()).unwrap());
        let g = apply_semigroup(&f, tau, &p).unwrap();
        let expected = f.mass() * (p.lambda0() * tau).exp();
        prop_assert!((g.mass() - expected).abs() <= 1e-12 * f.mass().abs().max(1e-12));
    }

    #[test]
    fn snapshot_bytes_round_trip(a in random_ic(), b in random_ic(), time in 0.0f64..100.0) {
        let g = grid();
        let state = SimState::new(
            time,
            vec![(FieldName::W, a.build(&g).unwrap()), (FieldName::Theta, b.build(&g).unwrap())],
        )
        .unwrap();
        let snap = Snapshot::from_state(&state, Variant::BoussinesqPhysical, 1.3, 1.0).unwrap();
        let bytes = encode(&snap).unwrap();
        prop_assert_eq!(decode(&bytes).unwrap(), snap);
    }

    #[test]
    fn config_text_round_trip(
        alpha in 1.01f64..2.0,
        beta in 0.0f64..1.99,
        dt in 0.001f64..0.5,
        steps in 1u32..50,
        seed in any::<u64>(),
    ) {
        let text = format!(
            "label = p\nvariant = sqg_physical\nalpha = {alpha}\nbeta = {beta}\nn = 32\nbox = 16\n\
             dt = {dt}\nt_end = {}\nic = random\nic.seed = {seed}\n",
            dt * f64::from(steps)
        );
        let cfg: RunConfig = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
    }
}

#[test]
fn boussinesq_step_conserves_both_masses() {
    let g = make_grid(64, 32.0).unwrap();
    let p = ModelParams::new(Variant::BoussinesqPhysical, 1.4, 1.0, g).unwrap();
    let w = InitialCondition::Dipole { amplitude: 1.0, sigma: 1.5, center: (0.0, 0.0) };
    let th = InitialCondition::Gaussian { amplitude: 1.0, sigma: 1.5, center: (1.0, -0.5) };
    let mut s = SimState::from_initial(&p, 0.0, &[(FieldName::W, w), (FieldName::Theta, th)]).unwrap();
    let m0 = s.field(FieldName::Theta).unwrap().mass();
    for _ in 0..20 {
        s = step(&s, &p, 0.05).unwrap();
    }
    assert!((s.field(FieldName::Theta).unwrap().mass() - m0).abs() <= 1e-12 * m0);
    assert!(s.field(FieldName::W).unwrap().mass().abs() <= 1e-12);
    assert_eq!(s.step_count, 20);
}
