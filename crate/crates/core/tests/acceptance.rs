//! One line per acceptance criterion, seed 42. Exits non-zero if any fails.

use std::process::ExitCode;

use gmtk_core::verify::{run, Property, Report, VerifyConfig};

/// `(suite, property, bound, minimum samples)`; `None` bound means the property's own pass flag.
type Check = (&'static str, &'static str, Option<f64>, usize);

const CRITERIA: [(&str, &[Check]); 8] = [
    (
        "algebraic dualities",
        &[
            ("algebra", "ad_star_duality", Some(1e-10), 100),
            ("group", "coadjoint_duality", Some(1e-10), 100),
            ("group", "ad_to_ad", Some(1e-6), 1),
        ],
    ),
    (
        "triplet structure",
        &[
            ("triplet", "omega_d_theta1", Some(1e-6), 50),
            ("triplet", "omega_d_theta2", Some(1e-6), 50),
            ("triplet", "theta_difference_exact", Some(1e-8), 1),
            ("triplet", "abelian_theta1", Some(1e-12), 1),
            ("triplet", "abelian_theta2", Some(1e-12), 1),
            ("triplet", "abelian_alpha_q", Some(1e-12), 1),
            ("triplet", "abelian_omega", Some(1e-12), 1),
            ("triplet", "abelian_omega_flat_pullback", Some(1e-12), 1),
        ],
    ),
    (
        "submanifold representations",
        &[
            ("dynamics", "s_isotropy", Some(1e-6), 1),
            ("dynamics", "sprime_isotropy", Some(1e-6), 1),
            ("dynamics", "s_dimension", None, 1),
            ("dynamics", "sprime_dimension", None, 1),
            ("dynamics", "sigma_consistency", Some(1e-9), 1),
            ("dynamics", "omega_flat_consistency", Some(1e-9), 1),
            ("reduction", "dirac_tau", Some(1e-8), 1),
            ("reduction", "dirac_pi", Some(1e-8), 1),
        ],
    ),
    (
        "reduction commutation",
        &[
            ("reduction", "red_diff_kappa", Some(1e-12), 200),
            ("reduction", "red_diff_omega", Some(1e-12), 200),
            ("reduction", "omega_d_chi1", Some(1e-12), 1),
            ("reduction", "omega_d_chi2", Some(1e-12), 1),
        ],
    ),
    (
        "legendre transformation",
        &[
            ("legendre", "roundtrip_quadratic", Some(1e-9), 100),
            ("legendre", "generating_family", Some(1e-8), 1),
            ("legendre", "rank_check", None, 1),
            ("legendre", "degenerate_refused", None, 1),
        ],
    ),
    (
        "dynamics equivalence",
        &[
            ("integrate", "ep_lp_equivalence", Some(1e-6), 1),
            ("dynamics", "reduced_equations_exact", None, 1),
        ],
    ),
    (
        "conservation at desk scale",
        &[
            ("integrate", "casimir_drift", Some(1e-6), 1),
            ("integrate", "energy_drift", Some(1e-6), 1),
            ("integrate", "so3_constraint", Some(1e-9), 1),
            ("integrate", "order_rkmk4", Some(0.3), 1),
        ],
    ),
    ("classical baseline", &[("integrate", "classical_baseline", Some(1e-12), 1)]),
];

fn check(report: &Report, (suite, name, bound, min_samples): &Check) -> Result<String, String> {
    let p: &Property = report.get(suite, name).ok_or_else(|| format!("{suite}.{name} missing"))?;
    let ok = match bound {
        Some(b) => p.max_violation <= *b,
        None => p.pass,
    } && p.pass
        && p.samples >= *min_samples;
    let line = format!("{suite}.{name}={:.2e} (n={})", p.max_violation, p.samples);
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn main() -> ExitCode {
    let report = match run(&VerifyConfig::default()) {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance: could not run the suites: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut all = true;
    for (k, (title, checks)) in CRITERIA.iter().enumerate() {
        let results: Vec<_> = checks.iter().map(|c| check(&report, c)).collect();
        let pass = results.iter().all(Result::is_ok);
        all &= pass;
        let detail: Vec<String> = results.into_iter().map(|r| r.unwrap_or_else(|e| format!("FAILED {e}"))).collect();
        println!(
            "criterion {}: {} [{title}] {}",
            k + 1,
            if pass { "pass" } else { "FAIL" },
            detail.join(", ")
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
