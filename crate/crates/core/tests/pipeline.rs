use gmtk_core::integrate::{integrate_euler_poincare, integrate_lie_poisson};
use gmtk_core::legendre::legendre_transform;
use gmtk_core::systems::from_config;
use gmtk_core::verify::{legendre_report, submanifold_report, DEFAULT_ISOTROPY_TOL};
use gmtk_core::{IntegratorSpec, Method};
use serde_json::json;

#[test]
fn custom_heisenberg_system_end_to_end() {
    let spec = from_config(&json!({
        "system": {"group": "heisenberg3", "inertia": [2.0, 1.0, 3.0]},
        "initial": {"xi": [0.3, -0.2, 0.5]}
    }))
    .unwrap();
    let l = spec.lagrangian.as_ref().unwrap();
    let h = legendre_transform(l).unwrap();
    let run = IntegratorSpec::new(Method::Rkmk4, 1e-2, 200);
    let ep = integrate_euler_poincare(l, &spec.initial_xi().unwrap(), &run).unwrap();
    let lp = integrate_lie_poisson(&h, &spec.initial_mu().unwrap(), &run).unwrap();
    assert_eq!(ep.len(), 201);
    for (xi, mu) in ep.vectors().iter().zip(lp.vectors()) {
        let diag = nalgebra::DVector::from_vec(vec![2.0, 1.0, 3.0]);
        assert!((xi.component_mul(&diag) - mu).amax() < 1e-6);
    }

    let rep = legendre_report(&spec, 20, 42).unwrap();
    assert!(rep.rank_check_pass && rep.max_roundtrip_error.unwrap() < 1e-9);
    let rep = submanifold_report(&spec, 10, 42, 1e-8, DEFAULT_ISOTROPY_TOL).unwrap();
    assert!(rep.pass, "{rep:?}");
}
