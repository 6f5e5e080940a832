//! Seeded property suites over every module.
//!
//! Each suite draws from its own sampler stream (derived from the seed and
//! the suite name), so its results do not depend on which other suites run.
//! Suites run concurrently; the report is ordered by suite name.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AlgVec, DualVec, StructureAlgebra};
use crate::dynamics::{
    el_vector_field, euler_poincare_vf, hamilton_dirac, hamilton_vector_field, lagrange_dirac, lie_poisson_bracket,
    lie_poisson_vf, sprime_residual, submanifold_s, submanifold_sprime, HamiltonianField, LagrangianField, PhaseState,
};
use crate::error::{Error, Result};
use crate::fd::FdConfig;
use crate::group::{GroupElement, GroupModel};
use crate::integrate::{
    convergence_order, integrate_euler_poincare, integrate_hamilton, integrate_lie_poisson, IntegratorSpec, Method,
};
use crate::legendre::{
    generate, legendre_inverse, legendre_transform, make_el2h, make_h2l, make_reduced_h2l, make_reduced_l2h,
    rank_check, to_reduced, BaseKind, BasePoint, MorseFamily,
};
use crate::linalg;
use crate::oracle::{self, BundlePoint, BundleTangent};
use crate::reduction::{
    chi1, chi2, dirac_identity_pi, dirac_identity_tau, kappa, omega_flat_red, omega_zd, orbit_invariants,
    project_tstar_tg, project_tstar_tstar_g, project_tt_star_g, reduced_bracket, reduced_vf,
    tangent_to_reduced_generator, ReducedGenerator, ReducedPoint, ReducedTangent,
};
use crate::sample::{Sampler, DEFAULT_SEED};
use crate::systems::{builtin, from_config, legendre_pair_error, SystemSpec, BUILTINS};
use crate::triplet::{
    canonical_tstar_tg, canonical_tstar_tstar_g, delta, omega2, omega_flat, omega_sharp, omega_tangent,
    right_invariant_vf, sigma, sigma_inv, tangent_to_generator, theta1, theta2, CotCotPoint, CotTanPoint, Generator,
    TripletPoint, TripletTangent,
};

pub const SUITES: [&str; 8] = [
    "algebra",
    "dynamics",
    "group",
    "integrate",
    "legendre",
    "reduction",
    "systems",
    "triplet",
];

/// Every property with its default tolerance.
pub const PROPERTIES: &[(&str, &str, f64)] = &[
    ("algebra", "ad_star_duality", 1e-12),
    ("algebra", "bracket_bilinear", 1e-12),
    ("algebra", "jacobi", 1e-14),
    ("dynamics", "hamiltonian_conservation", 1e-8),
    ("dynamics", "lie_poisson_bracket_vs_field", 1e-7),
    ("dynamics", "omega_flat_consistency", 1e-9),
    ("dynamics", "reduced_equations_exact", 0.0),
    ("dynamics", "s_dimension", 0.0),
    ("dynamics", "s_isotropy", 1e-6),
    ("dynamics", "sigma_consistency", 1e-9),
    ("dynamics", "sprime_dimension", 0.0),
    ("dynamics", "sprime_isotropy", 1e-6),
    ("group", "ad_to_ad", 1e-6),
    ("group", "coadjoint_duality", 1e-10),
    ("group", "hat_intertwining", 1e-12),
    ("group", "right_gradient_linear", 1e-9),
    ("group", "right_gradient_quadratic", 1e-9),
    ("integrate", "casimir_drift", 1e-6),
    ("integrate", "classical_baseline", 1e-12),
    ("integrate", "energy_drift", 1e-6),
    ("integrate", "ep_lp_equivalence", 1e-6),
    ("integrate", "on_submanifold", 1e-10),
    ("integrate", "order_lie_euler", 0.3),
    ("integrate", "order_rkmk4", 0.3),
    ("integrate", "so3_constraint", 1e-9),
    ("legendre", "degenerate_refused", 0.0),
    ("legendre", "generating_family", 1e-8),
    ("legendre", "rank_check", 0.0),
    ("legendre", "roundtrip_quadratic", 1e-9),
    ("legendre", "roundtrip_quartic", 1e-9),
    ("legendre", "stationary_value", 1e-9),
    ("reduction", "dirac_pi", 1e-8),
    ("reduction", "dirac_tau", 1e-8),
    ("reduction", "hamilton_dirac_isotropy", 1e-6),
    ("reduction", "lagrange_dirac_isotropy", 1e-6),
    ("reduction", "off_submanifold_detected", 0.0),
    ("reduction", "omega_d_chi1", 1e-12),
    ("reduction", "omega_d_chi2", 1e-12),
    ("reduction", "orbit_invariance", 1e-10),
    ("reduction", "red_diff_kappa", 1e-12),
    ("reduction", "red_diff_omega", 1e-12),
    ("systems", "algebra_validate", 1e-12),
    ("systems", "analytic_gradients", 1e-6),
    ("systems", "hat_intertwining", 1e-12),
    ("systems", "legendre_pair", 1e-8),
    ("systems", "potential_limit", 1e-12),
    ("triplet", "abelian_alpha_q", 1e-12),
    ("triplet", "abelian_omega", 1e-12),
    ("triplet", "abelian_omega_flat_pullback", 1e-12),
    ("triplet", "abelian_theta1", 1e-12),
    ("triplet", "abelian_theta2", 1e-12),
    ("triplet", "omega_d_theta1", 1e-6),
    ("triplet", "omega_d_theta2", 1e-6),
    ("triplet", "omega_flat_symplectic", 1e-6),
    ("triplet", "sigma_symplectic", 1e-6),
    ("triplet", "theta_difference_exact", 1e-8),
];

/// Replacement for `ad*` used by the duality check.
pub type AdStar = Arc<dyn Fn(&StructureAlgebra, &AlgVec, &DualVec) -> DualVec + Send + Sync>;

#[derive(Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Suites to run; empty means all.
    pub suites: Vec<String>,
    /// Overrides every per-property sample count.
    pub samples: Option<usize>,
    /// Keyed by `suite.property` or a bare property name.
    pub tolerances: BTreeMap<String, f64>,
    pub fd: FdConfig,
    pub ad_star: Option<AdStar>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            suites: Vec::new(),
            samples: None,
            tolerances: BTreeMap::new(),
            fd: FdConfig::default(),
            ad_star: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Property {
    pub suite: String,
    pub name: String,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub pass: bool,
    pub properties: Vec<Property>,
}

impl Report {
    pub fn get(&self, suite: &str, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.suite == suite && p.name == name)
    }
}

fn cfg_err(path: &str, message: String) -> Error {
    Error::Config {
        path: path.into(),
        message,
    }
}

/// Resolves a tolerance key to its `(suite, property)` entry.
fn resolve(key: &str) -> Result<(&'static str, &'static str)> {
    let hits: Vec<_> = PROPERTIES
        .iter()
        .filter(|(s, n, _)| key == *n || key.split_once('.') == Some((s, n)))
        .map(|(s, n, _)| (*s, *n))
        .collect();
    match hits.as_slice() {
        [one] => Ok(*one),
        [] => Err(cfg_err("tol", format!("unknown property `{key}`"))),
        _ => Err(cfg_err("tol", format!("ambiguous property `{key}`; use suite.name"))),
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        for s in &self.suites {
            if !SUITES.contains(&s.as_str()) {
                return Err(cfg_err("suite", format!("unknown suite `{s}` (expected one of {})", SUITES.join(", "))));
            }
        }
        for (k, v) in &self.tolerances {
            resolve(k)?;
            if !(v.is_finite() && *v >= 0.0) {
                return Err(cfg_err("tol", format!("tolerance for `{k}` must be a non-negative number")));
            }
        }
        if self.samples == Some(0) {
            return Err(cfg_err("samples", "must be positive".into()));
        }
        Ok(())
    }

    fn tolerance(&self, suite: &str, name: &str) -> f64 {
        let overridden = self
            .tolerances
            .iter()
            .find(|(k, _)| resolve(k).is_ok_and(|(s, n)| s == suite && n == name));
        match overridden {
            Some((_, v)) => *v,
            None => PROPERTIES
                .iter()
                .find(|(s, n, _)| *s == suite && *n == name)
                .map_or(0.0, |p| p.2),
        }
    }
}

/// Runs the selected suites.
pub fn run(cfg: &VerifyConfig) -> Result<Report> {
    cfg.validate()?;
    let selected: Vec<&str> = SUITES
        .iter()
        .copied()
        .filter(|s| cfg.suites.is_empty() || cfg.suites.iter().any(|x| x == s))
        .collect();
    let mut results: Vec<(&str, Vec<Property>)> = selected
        .par_iter()
        .map(|suite| {
            let mut ctx = Ctx {
                cfg,
                suite,
                out: Vec::new(),
            };
            match *suite {
                "algebra" => algebra_suite(&mut ctx),
                "dynamics" => dynamics_suite(&mut ctx),
                "group" => group_suite(&mut ctx),
                "integrate" => integrate_suite(&mut ctx),
                "legendre" => legendre_suite(&mut ctx),
                "reduction" => reduction_suite(&mut ctx),
                "systems" => systems_suite(&mut ctx),
                _ => triplet_suite(&mut ctx),
            }
            ctx.out.sort_by(|a, b| a.name.cmp(&b.name));
            (*suite, ctx.out)
        })
        .collect();
    results.sort_by(|a, b| a.0.cmp(b.0));
    let properties: Vec<Property> = results.into_iter().flat_map(|(_, p)| p).collect();
    Ok(Report {
        seed: cfg.seed,
        pass: properties.iter().all(|p| p.pass),
        properties,
    })
}

struct Ctx<'a> {
    cfg: &'a VerifyConfig,
    suite: &'static str,
    out: Vec<Property>,
}

impl Ctx<'_> {
    fn sampler(&self, label: &str) -> Sampler {
        Sampler::stream(self.cfg.seed, &format!("{}.{label}", self.suite))
    }

    fn n(&self, default: usize) -> usize {
        self.cfg.samples.unwrap_or(default)
    }

    fn record(&mut self, name: &str, samples: usize, r: Result<f64>) {
        let tolerance = self.cfg.tolerance(self.suite, name);
        let (max_violation, error) = match r {
            Ok(v) if v.is_nan() => (f64::INFINITY, Some("non-finite violation".to_string())),
            Ok(v) => (v, None),
            Err(e) => (f64::INFINITY, Some(e.to_string())),
        };
        self.out.push(Property {
            suite: self.suite.into(),
            name: name.into(),
            samples,
            max_violation,
            tolerance,
            pass: max_violation <= tolerance,
            error,
        });
    }
}

/// Max that treats NaN as an infinite violation.
fn worst(acc: f64, v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        acc.max(v)
    }
}

fn models() -> [GroupModel; 3] {
    [GroupModel::so3(), GroupModel::heisenberg3(), GroupModel::abelian(3)]
}

fn random_triplet(s: &mut Sampler, model: &GroupModel) -> TripletPoint {
    let n = model.dim();
    TripletPoint {
        g: s.element(model),
        mu: s.dual(n, 1.5),
        xi: s.alg(n, 1.5),
        nu: s.dual(n, 1.5),
    }
}

fn random_generator(s: &mut Sampler, n: usize) -> Generator {
    Generator {
        xi2: s.alg(n, 1.0),
        nu2: s.dual(n, 1.0),
        xi3: s.alg(n, 1.0),
        nu3: s.dual(n, 1.0),
    }
}

fn random_reduced(s: &mut Sampler, n: usize) -> ReducedPoint {
    ReducedPoint {
        lam: s.dual(n, 1.5),
        mu: s.dual(n, 1.5),
        xi: s.alg(n, 1.5),
    }
}

fn random_reduced_generator(s: &mut Sampler, n: usize) -> ReducedGenerator {
    ReducedGenerator {
        eta: s.alg(n, 1.0),
        ups: s.dual(n, 1.0),
        zeta: s.alg(n, 1.0),
    }
}

fn load(name: &str) -> Result<SystemSpec> {
    builtin(name)
}

fn lagrangian(spec: &SystemSpec) -> Result<&LagrangianField> {
    spec.lagrangian
        .as_ref()
        .ok_or_else(|| Error::Domain(format!("{} has no Lagrangian", spec.name)))
}

fn hamiltonian(spec: &SystemSpec) -> Result<&HamiltonianField> {
    spec.hamiltonian
        .as_ref()
        .ok_or_else(|| Error::Domain(format!("{} has no Hamiltonian", spec.name)))
}

/// Builtins carrying both a Lagrangian and a Hamiltonian.
fn paired_systems() -> Result<Vec<SystemSpec>> {
    let mut out = Vec::new();
    for name in BUILTINS {
        let spec = load(name)?;
        if spec.lagrangian.is_some() && spec.hamiltonian.is_some() {
            out.push(spec);
        }
    }
    Ok(out)
}

fn reduced_systems() -> Result<Vec<SystemSpec>> {
    Ok(paired_systems()?.into_iter().filter(SystemSpec::is_reduced).collect())
}

// ---------------------------------------------------------------- algebra

fn algebra_suite(ctx: &mut Ctx) {
    let algs = [StructureAlgebra::so3(), StructureAlgebra::heisenberg3(), StructureAlgebra::abelian(3)];
    let n = ctx.n(100);
    let mut s = ctx.sampler("duality");
    let inject = ctx.cfg.ad_star.clone();
    let r = (|| {
        let mut v: f64 = 0.0;
        for alg in &algs {
            for _ in 0..n {
                let (xi, eta, mu) = (s.alg(3, 2.0), s.alg(3, 2.0), s.dual(3, 2.0));
                let nu = match &inject {
                    Some(f) => f(alg, &xi, &mu),
                    None => alg.ad_star(&xi, &mu)?,
                };
                v = worst(v, (nu.pair(&eta) - mu.pair(&alg.bracket(&xi, &eta)?)).abs());
            }
        }
        Ok(v)
    })();
    ctx.record("ad_star_duality", n * algs.len(), r);

    let mut s = ctx.sampler("bilinear");
    let r = (|| {
        let mut v: f64 = 0.0;
        for alg in &algs {
            for _ in 0..n {
                let (x, x2, y) = (s.alg(3, 2.0), s.alg(3, 2.0), s.alg(3, 2.0));
                let (a, b) = (s.uniform(-2.0, 2.0), s.uniform(-2.0, 2.0));
                let lhs = alg.bracket(&(&(&x * a) + &(&x2 * b)), &y)?;
                let rhs = &(&alg.bracket(&x, &y)? * a) + &(&alg.bracket(&x2, &y)? * b);
                v = worst(v, (&lhs - &rhs).max_abs());
            }
        }
        Ok(v)
    })();
    ctx.record("bracket_bilinear", n * algs.len(), r);

    let v = algs
        .iter()
        .map(|a| {
            let rep = a.validate();
            rep.jacobi.max(rep.antisymmetry)
        })
        .fold(0.0, worst);
    ctx.record("jacobi", algs.len(), Ok(v));
}

// ---------------------------------------------------------------- group

fn group_suite(ctx: &mut Ctx) {
    let n = ctx.n(100);
    let ms = models();

    let mut s = ctx.sampler("coadjoint");
    let r = (|| {
        let mut v: f64 = 0.0;
        for m in &ms {
            for _ in 0..n {
                let (g, mu, xi) = (s.element(m), s.dual(3, 2.0), s.alg(3, 2.0));
                let lhs = m.ad_star(&g, &mu)?.pair(&xi);
                let rhs = mu.pair(&m.ad(&m.inv(&g)?, &xi)?);
                v = worst(v, (lhs - rhs).abs());
            }
        }
        Ok(v)
    })();
    ctx.record("coadjoint_duality", n * ms.len(), r);

    let mut s = ctx.sampler("adtoad");
    let h = 1e-4;
    let r = (|| {
        let mut v: f64 = 0.0;
        for m in &ms {
            for _ in 0..n {
                let (mu, xi) = (s.dual(3, 2.0), s.alg(3, 2.0));
                let plus = m.ad_star(&m.exp(&(&xi * h))?, &mu)?;
                let minus = m.ad_star(&m.exp(&(&xi * -h))?, &mu)?;
                let d = &(&plus - &minus) * (0.5 / h);
                v = worst(v, (&d + &m.algebra().ad_star(&xi, &mu)?).max_abs());
            }
        }
        Ok(v)
    })();
    ctx.record("ad_to_ad", n * ms.len(), r);

    let mut s = ctx.sampler("hat");
    let v = ms.iter().map(|m| hat_defect(&mut s, m, n)).fold(0.0, worst);
    ctx.record("hat_intertwining", n * ms.len(), Ok(v));

    let fd = ctx.cfg.fd;
    let nq = ctx.n(10);
    let mut s = ctx.sampler("gradient");
    let r = (|| {
        let (mut lin, mut quad): (f64, f64) = (0.0, 0.0);
        for m in &ms {
            for _ in 0..nq {
                let g = s.element(m);
                let k = g.matrix().ncols();
                let b = DVector::from_vec(s.coords(k, 1.5));
                let c = DVector::from_vec(s.coords(k, 1.5));
                let f1 = |h: &GroupElement| {
                    let y = h.matrix() * &b;
                    0.5 * y.norm_squared() - c.dot(&y)
                };
                let f2 = |h: &GroupElement| (h.matrix() * &c).dot(&b).powi(2);
                let (a1, a2) = (s.uniform(-2.0, 2.0), s.uniform(-2.0, 2.0));
                let d1 = m.right_gradient(f1, &g, &fd)?;
                let d2 = m.right_gradient(f2, &g, &fd)?;
                let d12 = m.right_gradient(|h| a1 * f1(h) + a2 * f2(h), &g, &fd)?;
                lin = worst(lin, (&d12 - &(&(&d1 * a1) + &(&d2 * a2))).max_abs());
                let gm = g.matrix();
                let y = &gm * &b - &c;
                for i in 0..m.dim() {
                    let exact = y.dot(&(&gm * m.hat(&AlgVec::basis(m.dim(), i)) * &b));
                    quad = worst(quad, (d1[i] - exact).abs());
                }
            }
        }
        Ok((lin, quad))
    })();
    let split = |r: &Result<(f64, f64)>, pick: fn(&(f64, f64)) -> f64| match r {
        Ok(x) => Ok(pick(x)),
        Err(e) => Err(Error::Domain(e.to_string())),
    };
    ctx.record("right_gradient_linear", nq * ms.len(), split(&r, |x| x.0));
    ctx.record("right_gradient_quadratic", nq * ms.len(), split(&r, |x| x.1));
}

fn hat_defect(s: &mut Sampler, m: &GroupModel, n: usize) -> f64 {
    let alg = m.algebra();
    let mut v: f64 = 0.0;
    for _ in 0..n {
        let (xi, eta) = (s.alg(m.dim(), 2.0), s.alg(m.dim(), 2.0));
        let (x, y) = (m.hat(&xi), m.hat(&eta));
        let comm = &x * &y - &y * &x;
        v = worst(v, (comm - m.hat(&alg.br(&xi, &eta))).amax());
        v = worst(v, (&m.unhat(&x) - &xi).max_abs());
    }
    v
}

// ---------------------------------------------------------------- triplet

fn triplet_suite(ctx: &mut Ctx) {
    let ms = models();
    let n = ctx.n(50);
    let h = 1e-4;

    let mut s = ctx.sampler("omega");
    let (mut d1, mut d2): (f64, f64) = (0.0, 0.0);
    for k in 0..n {
        let model = &ms[k % ms.len()];
        let alg = model.algebra();
        let p = random_triplet(&mut s, model);
        let (a, b) = (random_generator(&mut s, 3), random_generator(&mut s, 3));
        let field = |gen: &Generator| {
            let gen = gen.clone();
            move |q: &BundlePoint| right_invariant_vf(alg, &gen, &TripletPoint::from_bundle(q)).to_bundle()
        };
        let t1 = |q: &BundlePoint, t: &BundleTangent| {
            let q = TripletPoint::from_bundle(q);
            theta1(alg, &q, &tangent_to_generator(alg, &q, &TripletTangent::from_bundle(t)))
        };
        let t2 = |q: &BundlePoint, t: &BundleTangent| {
            let q = TripletPoint::from_bundle(q);
            theta2(alg, &q, &tangent_to_generator(alg, &q, &TripletTangent::from_bundle(t)))
        };
        let (x, y) = (field(&a), field(&b));
        let w = omega2(alg, &p, &a, &b);
        d1 = worst(d1, (oracle::exterior_derivative(model, &t1, &x, &y, &p.to_bundle(), h) - w).abs());
        d2 = worst(d2, (oracle::exterior_derivative(model, &t2, &x, &y, &p.to_bundle(), h) - w).abs());
    }
    ctx.record("omega_d_theta1", n, Ok(d1));
    ctx.record("omega_d_theta2", n, Ok(d2));

    let mut s = ctx.sampler("delta");
    let mut v: f64 = 0.0;
    for k in 0..n {
        let model = &ms[k % ms.len()];
        let alg = model.algebra();
        let p = random_triplet(&mut s, model);
        let gen = random_generator(&mut s, 3);
        let t = right_invariant_vf(alg, &gen, &p);
        let d = oracle::directional(model, |q| delta(&TripletPoint::from_bundle(q)), &p.to_bundle(), &t.to_bundle(), h);
        v = worst(v, (d - (theta2(alg, &p, &gen) - theta1(alg, &p, &gen))).abs());
    }
    ctx.record("theta_difference_exact", n, Ok(v));

    abelian_properties(ctx);

    let ns = ctx.n(20);
    let mut s = ctx.sampler("symplectic");
    let (mut vs, mut vo): (f64, f64) = (0.0, 0.0);
    for k in 0..ns {
        let model = &ms[k % ms.len()];
        let p = random_triplet(&mut s, model);
        let (a, b) = (random_generator(&mut s, 3), random_generator(&mut s, 3));
        let w = omega2(model.algebra(), &p, &a, &b);
        vs = worst(vs, (sigma_pullback(model, &p, &a, &b) - w).abs());
        vo = worst(vo, (omega_flat_pullback(model, &p, &a, &b) - w).abs());
    }
    ctx.record("sigma_symplectic", ns, Ok(vs));
    ctx.record("omega_flat_symplectic", ns, Ok(vo));
}

fn concat(parts: &[&[f64]]) -> DVector<f64> {
    DVector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
}

fn cot_tan_bundle(q: &CotTanPoint) -> BundlePoint {
    BundlePoint {
        g: Some(q.g.clone()),
        x: concat(&[q.xi.as_slice(), q.alpha.as_slice(), q.beta.as_slice()]),
    }
}

fn cot_tan_unbundle(b: &BundlePoint) -> CotTanPoint {
    let n = b.x.len() / 3;
    let x = b.x.as_slice();
    CotTanPoint {
        g: b.g.clone().expect("group factor"),
        xi: AlgVec::from_slice(&x[..n]),
        alpha: DualVec::from_slice(&x[n..2 * n]),
        beta: DualVec::from_slice(&x[2 * n..]),
    }
}

fn cot_cot_bundle(r: &CotCotPoint) -> BundlePoint {
    BundlePoint {
        g: Some(r.g.clone()),
        x: concat(&[r.mu.as_slice(), r.alpha.as_slice(), r.eta.as_slice()]),
    }
}

fn cot_cot_unbundle(b: &BundlePoint) -> CotCotPoint {
    let n = b.x.len() / 3;
    let x = b.x.as_slice();
    CotCotPoint {
        g: b.g.clone().expect("group factor"),
        mu: DualVec::from_slice(&x[..n]),
        alpha: DualVec::from_slice(&x[n..2 * n]),
        eta: AlgVec::from_slice(&x[2 * n..]),
    }
}

/// `d(canonical one-form of T*TG)` on the sigma-pushforwards of two
/// right-invariant fields, all derivatives by finite differences.
fn sigma_pullback(model: &GroupModel, p: &TripletPoint, a: &Generator, b: &Generator) -> f64 {
    let alg = model.algebra();
    let n = model.dim();
    let field = |gen: &Generator| {
        let gen = gen.clone();
        move |c: &BundlePoint| {
            let q = sigma_inv(alg, &cot_tan_unbundle(c));
            let t = right_invariant_vf(alg, &gen, &q);
            let v = oracle::pushforward(
                model,
                |x| cot_tan_bundle(&sigma(alg, &TripletPoint::from_bundle(x))).x,
                &q.to_bundle(),
                &t.to_bundle(),
                1e-3,
            );
            BundleTangent { a: t.d_g.0, v }
        }
    };
    let theta = |c: &BundlePoint, t: &BundleTangent| {
        canonical_tstar_tg(alg, &cot_tan_unbundle(c), &AlgVec(t.a.clone()), &AlgVec::from_slice(&t.v.as_slice()[..n]))
    };
    oracle::exterior_derivative(model, &theta, &field(a), &field(b), &cot_tan_bundle(&sigma(alg, p)), 1e-4)
}

fn omega_flat_pullback(model: &GroupModel, p: &TripletPoint, a: &Generator, b: &Generator) -> f64 {
    let alg = model.algebra();
    let n = model.dim();
    let field = |gen: &Generator| {
        let gen = gen.clone();
        move |c: &BundlePoint| {
            let q = omega_sharp(alg, &cot_cot_unbundle(c));
            let t = right_invariant_vf(alg, &gen, &q);
            let v = oracle::pushforward(
                model,
                |x| cot_cot_bundle(&omega_flat(alg, &TripletPoint::from_bundle(x))).x,
                &q.to_bundle(),
                &t.to_bundle(),
                1e-3,
            );
            BundleTangent { a: t.d_g.0, v }
        }
    };
    let theta = |c: &BundlePoint, t: &BundleTangent| {
        canonical_tstar_tstar_g(alg, &cot_cot_unbundle(c), &AlgVec(t.a.clone()), &DualVec::from_slice(&t.v.as_slice()[..n]))
    };
    oracle::exterior_derivative(model, &theta, &field(a), &field(b), &cot_cot_bundle(&omega_flat(alg, p)), 1e-4)
}

/// On `R^n` the trivialized objects are the classical coordinate ones:
/// `theta1 = pdot dq - qdot dp`, `theta2 = pdot dq + p dqdot`,
/// `alpha_Q (q, p; qdot, pdot) = (q, qdot; pdot, p)`.
fn abelian_properties(ctx: &mut Ctx) {
    let model = GroupModel::abelian(3);
    let alg = model.algebra();
    let n = ctx.n(100);
    let mut s = ctx.sampler("abelian");
    let mut v = [0.0f64; 5];
    for _ in 0..n {
        let p = random_triplet(&mut s, &model);
        let (a, b) = (random_generator(&mut s, 3), random_generator(&mut s, 3));
        let (q, pp, qd, pd) = (p.g.entries(), &p.mu.0, &p.xi.0, &p.nu.0);
        // generator components are the coordinate increments (dq, dp, dqdot, dpdot)
        let dot = |x: &DVector<f64>, y: &DVector<f64>| x.dot(y);
        let th1 = dot(pd, &a.xi2.0) - dot(qd, &a.nu2.0);
        let th2 = dot(pd, &a.xi2.0) + dot(pp, &a.xi3.0);
        let om = dot(&a.nu3.0, &b.xi2.0) - dot(&b.nu3.0, &a.xi2.0) + dot(&a.nu2.0, &b.xi3.0) - dot(&b.nu2.0, &a.xi3.0);
        v[0] = worst(v[0], (theta1(alg, &p, &a) - th1).abs());
        v[1] = worst(v[1], (theta2(alg, &p, &a) - th2).abs());
        v[2] = worst(v[2], (omega2(alg, &p, &a, &b) - om).abs());
        let c = sigma(alg, &p);
        let alpha_q = (c.g.entries().iter().zip(&q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
            .max((&c.xi.0 - qd).amax())
            .max((&c.alpha.0 - pd).amax())
            .max((&c.beta.0 - pp).amax());
        v[3] = worst(v[3], alpha_q);
        // canonical P_q dq + P_p dp pulled back through omega_flat
        let r = omega_flat(alg, &p);
        let pulled = dot(&r.alpha.0, &a.xi2.0) + dot(&r.eta.0, &a.nu2.0);
        v[4] = worst(v[4], (pulled - th1).abs());
    }
    ctx.record("abelian_theta1", n, Ok(v[0]));
    ctx.record("abelian_theta2", n, Ok(v[1]));
    ctx.record("abelian_omega", n, Ok(v[2]));
    ctx.record("abelian_alpha_q", n, Ok(v[3]));
    ctx.record("abelian_omega_flat_pullback", n, Ok(v[4]));
}

// ---------------------------------------------------------------- dynamics

/// Tangents of `phi(g, x)` along the unit directions of `(g, x)`.
fn parametrization_tangents(
    model: &GroupModel,
    g: &GroupElement,
    x: &DVector<f64>,
    phi: &dyn Fn(&GroupElement, &DVector<f64>) -> Result<TripletPoint>,
) -> Vec<TripletTangent> {
    let n = model.dim();
    let base = BundlePoint {
        g: Some(g.clone()),
        x: x.clone(),
    };
    let f = |b: &BundlePoint| match phi(b.g.as_ref().expect("group factor"), &b.x) {
        Ok(p) => p.to_bundle().x,
        Err(_) => DVector::from_element(3 * n, f64::NAN),
    };
    (0..2 * n)
        .map(|i| {
            let mut u = BundleTangent {
                a: DVector::zeros(n),
                v: DVector::zeros(n),
            };
            if i < n {
                u.a[i] = 1.0;
            } else {
                u.v[i - n] = 1.0;
            }
            let v = oracle::pushforward(model, f, &base, &u, 1e-4);
            TripletTangent::from_bundle(&BundleTangent { a: u.a, v })
        })
        .collect()
}

/// Largest `|Omega(u, v)|` over pairs and the rank of the tangent family.
fn isotropy(alg: &StructureAlgebra, p: &TripletPoint, ts: &[TripletTangent]) -> (f64, usize) {
    let mut v: f64 = 0.0;
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            v = worst(v, omega_tangent(alg, p, &ts[i], &ts[j]).abs());
        }
    }
    let rows = ts.len();
    let m = DMatrix::from_fn(rows, 4 * ts[0].d_g.dim(), |r, c| {
        let t = &ts[r];
        let n = t.d_g.dim();
        match c / n {
            0 => t.d_g[c % n],
            1 => t.d_mu[c % n],
            2 => t.d_xi[c % n],
            _ => t.d_nu[c % n],
        }
    });
    (v, linalg::rank(&m).0)
}

fn dynamics_suite(ctx: &mut Ctx) {
    let n = ctx.n(10);
    let systems = match paired_systems() {
        Ok(s) => s,
        Err(e) => {
            for (_, name, _) in PROPERTIES.iter().filter(|p| p.0 == "dynamics") {
                ctx.record(name, 0, Err(Error::Domain(e.to_string())));
            }
            return;
        }
    };
    let total = n * systems.len();

    let mut s = ctx.sampler("isotropy");
    let r = (|| {
        let (mut iso_s, mut dim_s, mut iso_p, mut dim_p): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
        for spec in &systems {
            let (l, h) = (lagrangian(spec)?, hamiltonian(spec)?);
            let model = spec.model.as_ref();
            let alg = model.algebra();
            let d = model.dim();
            for _ in 0..n {
                let g = s.element(model);
                let xi = s.alg(d, 1.5);
                let p = submanifold_s(l, &g, &xi)?;
                let ts = parametrization_tangents(model, &g, &xi.0, &|g, x| submanifold_s(l, g, &AlgVec(x.clone())));
                let (iso, rank) = isotropy(alg, &p, &ts);
                iso_s = worst(iso_s, iso);
                dim_s = dim_s.max((rank as f64 - 2.0 * d as f64).abs());

                let mu = s.dual(d, 1.5);
                let st = PhaseState { g: g.clone(), mu: mu.clone() };
                let p = submanifold_sprime(h, &st)?;
                let ts = parametrization_tangents(model, &g, &mu.0, &|g, x| {
                    submanifold_sprime(h, &PhaseState { g: g.clone(), mu: DualVec(x.clone()) })
                });
                let (iso, rank) = isotropy(alg, &p, &ts);
                iso_p = worst(iso_p, iso);
                dim_p = dim_p.max((rank as f64 - 2.0 * d as f64).abs());
            }
        }
        Ok([iso_s, dim_s, iso_p, dim_p])
    })();
    for (k, name) in ["s_isotropy", "s_dimension", "sprime_isotropy", "sprime_dimension"].iter().enumerate() {
        ctx.record(name, total, pick(&r, k));
    }

    let mut s = ctx.sampler("consistency");
    let r = (|| {
        let (mut vs, mut vo): (f64, f64) = (0.0, 0.0);
        for spec in &systems {
            let (l, h) = (lagrangian(spec)?, hamiltonian(spec)?);
            let model = spec.model.as_ref();
            let alg = model.algebra();
            let d = model.dim();
            for _ in 0..n {
                let g = s.element(model);
                let xi = s.alg(d, 1.5);
                let q = sigma(alg, &submanifold_s(l, &g, &xi)?);
                let dl_dxi = l.fiber_gradient(&g, &xi)?;
                let alpha = &l.group_gradient(&g, &xi)? + &alg.ad_star(&xi, &dl_dxi)?;
                let e = (&q.alpha - &alpha)
                    .max_abs()
                    .max((&q.beta - &dl_dxi).max_abs())
                    .max((&q.xi - &xi).max_abs());
                vs = worst(vs, e);

                let mu = s.dual(d, 1.5);
                let st = PhaseState { g: g.clone(), mu: mu.clone() };
                let r = omega_flat(alg, &submanifold_sprime(h, &st)?);
                let dh_dmu = h.fiber_gradient(&g, &mu)?;
                let alpha = &alg.ad_star(&dh_dmu, &mu)? - &h.group_gradient(&g, &mu)?;
                let e = (&r.alpha - &alpha)
                    .max_abs()
                    .max((&r.eta + &dh_dmu).max_abs())
                    .max((&r.mu - &mu).max_abs());
                vo = worst(vo, e);
            }
        }
        Ok([vs, vo])
    })();
    ctx.record("sigma_consistency", total, pick(&r, 0));
    ctx.record("omega_flat_consistency", total, pick(&r, 1));

    let nb = ctx.n(50);
    let fd = ctx.cfg.fd;
    let reduced: Vec<&SystemSpec> = systems.iter().filter(|s| s.is_reduced()).collect();
    let mut s = ctx.sampler("bracket");
    let r = (|| {
        let mut v: f64 = 0.0;
        for spec in &reduced {
            let h = hamiltonian(spec)?;
            let d = spec.model.dim();
            for _ in 0..nb {
                let a = DVector::from_vec(s.coords(d, 1.0));
                let b = DMatrix::from_vec(d, d, s.coords(d * d, 1.0));
                let b = (&b + b.transpose()) * 0.5;
                let (a2, b2) = (a.clone(), b.clone());
                let f = HamiltonianField::reduced(spec.model.clone(), move |mu: &DualVec| {
                    a2.dot(&mu.0) + 0.5 * mu.0.dot(&(&b2 * &mu.0))
                });
                let mu = s.dual(d, 1.5);
                let df = fd.gradient(&mu.0, |m| f.value_at(&DualVec(m.clone())).unwrap_or(f64::NAN));
                let xh = lie_poisson_vf(h, &mu)?;
                v = worst(v, (lie_poisson_bracket(&f, h, &mu)? + df.dot(&xh.0)).abs());
            }
        }
        Ok(v)
    })();
    ctx.record("lie_poisson_bracket_vs_field", nb * reduced.len(), r);

    let mut s = ctx.sampler("reduced");
    let r = (|| {
        let mut v: f64 = 0.0;
        for spec in &reduced {
            let (l, h) = (lagrangian(spec)?, hamiltonian(spec)?);
            let d = spec.model.dim();
            for _ in 0..n {
                let g = s.element(&spec.model);
                let xi = s.alg(d, 1.5);
                v = worst(v, (&el_vector_field(l, &g, &xi)?.xidot - &euler_poincare_vf(l, &xi)?).max_abs());
                let mu = s.dual(d, 1.5);
                let (_, md) = hamilton_vector_field(h, &PhaseState { g, mu: mu.clone() })?;
                v = worst(v, (&md - &lie_poisson_vf(h, &mu)?).max_abs());
            }
        }
        Ok(v)
    })();
    ctx.record("reduced_equations_exact", n * reduced.len(), r);

    let mut s = ctx.sampler("conservation");
    let r = (|| {
        let mut v: f64 = 0.0;
        for spec in &systems {
            let h = hamiltonian(spec)?;
            let model = spec.model.as_ref();
            let d = model.dim();
            for _ in 0..n {
                let st = PhaseState { g: s.element(model), mu: s.dual(d, 1.5) };
                let (gd, md) = hamilton_vector_field(h, &st)?;
                let base = BundlePoint { g: Some(st.g.clone()), x: st.mu.0.clone() };
                let u = BundleTangent { a: gd.0, v: md.0 };
                let dh = oracle::directional(
                    model,
                    |b| h.value(b.g.as_ref().expect("group factor"), &DualVec(b.x.clone())).unwrap_or(f64::NAN),
                    &base,
                    &u,
                    fd.step,
                );
                v = worst(v, dh.abs());
            }
        }
        Ok(v)
    })();
    ctx.record("hamiltonian_conservation", total, r);
}

fn pick<const N: usize>(r: &Result<[f64; N]>, k: usize) -> Result<f64> {
    match r {
        Ok(v) => Ok(v[k]),
        Err(e) => Err(Error::Domain(e.to_string())),
    }
}

// ---------------------------------------------------------------- legendre

fn rigid_lagrangian(model: &Arc<GroupModel>, inertia: [f64; 3], eps: f64) -> LagrangianField {
    let m = move |xi: &AlgVec| DVector::from_fn(3, |k, _| inertia[k] * xi[k]);
    LagrangianField::reduced(model.clone(), move |xi: &AlgVec| {
        0.5 * xi.0.dot(&m(xi)) + eps * xi.0.norm_squared().powi(2)
    })
    .with_fiber_gradient(move |_, xi| DualVec(m(xi) + &xi.0 * (4.0 * eps * xi.0.norm_squared())))
    .with_fiber_hessian(move |_, xi| {
        let x = &xi.0;
        DMatrix::from_diagonal(&DVector::from_row_slice(&inertia))
            + DMatrix::identity(3, 3) * (4.0 * eps * x.norm_squared())
            + x * x.transpose() * (8.0 * eps)
    })
}

fn legendre_suite(ctx: &mut Ctx) {
    let model = Arc::new(GroupModel::so3());
    let n = ctx.n(50);

    let mut s = ctx.sampler("generating");
    let r = (|| {
        let l = lagrangian(&load("free_rigid_body")?)?.clone();
        let h = legendre_transform(&l)?;
        let e = make_reduced_l2h(&l)?;
        let alg = l.model().algebra().clone();
        let mut v: f64 = 0.0;
        for _ in 0..n {
            let mu = s.dual(3, 1.5);
            let gen = generate(&e, &BasePoint::linear(mu.0.clone()), &[])?;
            if gen.points.len() != 1 {
                return Ok(f64::INFINITY);
            }
            let z = to_reduced(&alg, BaseKind::Dual, &gen.points[0])?;
            let zh = hamilton_dirac(&h, &mu)?;
            let e = (&z.lam - &zh.lam).max_abs().max((&z.mu - &zh.mu).max_abs()).max((&z.xi - &zh.xi).max_abs());
            v = worst(v, e);
        }
        Ok(v)
    })();
    ctx.record("generating_family", n, r);

    let nr = ctx.n(100);
    for (name, eps) in [("roundtrip_quadratic", 0.0), ("roundtrip_quartic", 0.1)] {
        let mut s = ctx.sampler(name);
        let l = rigid_lagrangian(&model, [1.0, 2.0, 3.0], eps);
        let r = (|| {
            let back = legendre_inverse(&legendre_transform(&l)?)?;
            let mut v: f64 = 0.0;
            for _ in 0..nr {
                let xi = s.alg(3, 1.5);
                v = worst(v, (back.value_at(&xi)? - l.value_at(&xi)?).abs());
            }
            Ok(v)
        })();
        ctx.record(name, nr, r);
    }

    let nk = ctx.n(5);
    let mut s = ctx.sampler("rank");
    let r = (|| {
        let mut failures = 0usize;
        let mut checks = 0usize;
        for name in BUILTINS {
            let spec = load(name)?;
            let d = spec.model.dim();
            let mut families: Vec<MorseFamily> = Vec::new();
            if let Some(l) = &spec.lagrangian {
                families.push(make_el2h(l));
                if l.is_reduced() {
                    families.push(make_reduced_l2h(l)?);
                }
            }
            if let Some(h) = &spec.hamiltonian {
                families.push(make_h2l(h));
                if h.is_reduced() {
                    families.push(make_reduced_h2l(h)?);
                }
            }
            for e in &families {
                for _ in 0..nk {
                    let x = DVector::from_vec(s.coords(d, 1.5));
                    let base = if e.kind().has_group() {
                        BasePoint::with_group(s.element(&spec.model), x)
                    } else {
                        BasePoint::linear(x)
                    };
                    let r = DVector::from_vec(s.coords(d, 1.5));
                    checks += 1;
                    if !rank_check(e, &base, &r)?.pass {
                        failures += 1;
                    }
                }
            }
        }
        Ok((failures as f64, checks))
    })();
    let checks = r.as_ref().map_or(0, |x| x.1);
    ctx.record("rank_check", checks, r.map(|x| x.0));

    let mut s = ctx.sampler("stationary");
    let r = (|| {
        let mut v: f64 = 0.0;
        for spec in reduced_systems()? {
            let l = lagrangian(&spec)?;
            let h = legendre_transform(l)?;
            let e = make_reduced_l2h(l)?;
            let d = spec.model.dim();
            for _ in 0..n {
                let mu = s.dual(d, 1.5);
                let gen = generate(&e, &BasePoint::linear(mu.0.clone()), &[])?;
                if gen.points.is_empty() {
                    return Ok(f64::INFINITY);
                }
                for p in &gen.points {
                    let xi = AlgVec(p.fiber_witness.clone());
                    let expected = l.value_at(&xi)? - mu.pair(&xi);
                    v = worst(v, (p.value - expected).abs());
                    v = worst(v, (p.value + h.value_at(&mu)?).abs());
                }
            }
        }
        Ok(v)
    })();
    ctx.record("stationary_value", n * 2, r);

    let r = (|| {
        let l = lagrangian(&load("degenerate_linear")?)?.clone();
        Ok(match legendre_transform(&l) {
            Err(Error::DegenerateLagrangian { .. }) => 0.0,
            _ => 1.0,
        })
    })();
    ctx.record("degenerate_refused", 1, r);
}

// ---------------------------------------------------------------- reduction

fn tangent_as_point(t: &ReducedTangent) -> ReducedPoint {
    ReducedPoint {
        lam: t.d_lam.clone(),
        mu: t.d_mu.clone(),
        xi: t.d_xi.clone(),
    }
}

/// `X chi(Y) - Y chi(X) - chi([X, Y])`; chi is linear in the point, so the
/// directional derivatives are exact.
fn d_chi(
    alg: &StructureAlgebra,
    chi: fn(&ReducedPoint, &ReducedGenerator) -> f64,
    z: &ReducedPoint,
    a: &ReducedGenerator,
    b: &ReducedGenerator,
) -> f64 {
    let xa = tangent_as_point(&reduced_vf(alg, a, z));
    let xb = tangent_as_point(&reduced_vf(alg, b, z));
    chi(&xa, b) - chi(&xb, a) - chi(z, &reduced_bracket(alg, a, b))
}

fn reduction_suite(ctx: &mut Ctx) {
    let ms = models();
    let n = ctx.n(50);
    let mut s = ctx.sampler("chi");
    let (mut v1, mut v2): (f64, f64) = (0.0, 0.0);
    for k in 0..n {
        let alg = ms[k % ms.len()].algebra();
        let z = random_reduced(&mut s, 3);
        let (a, b) = (random_reduced_generator(&mut s, 3), random_reduced_generator(&mut s, 3));
        let w = omega_zd(alg, &z, &a, &b);
        v1 = worst(v1, (d_chi(alg, chi1, &z, &a, &b) - w).abs());
        v2 = worst(v2, (d_chi(alg, chi2, &z, &a, &b) - w).abs());
    }
    ctx.record("omega_d_chi1", n, Ok(v1));
    ctx.record("omega_d_chi2", n, Ok(v2));

    let nd = ctx.n(200);
    let mut s = ctx.sampler("reddiff");
    let r = (|| {
        let (mut vk, mut vo): (f64, f64) = (0.0, 0.0);
        for k in 0..nd {
            let model = &ms[k % ms.len()];
            let alg = model.algebra();
            let p = random_triplet(&mut s, model);
            let z = project_tt_star_g(model, &p)?;
            let a = kappa(&z);
            let b = project_tstar_tg(model, &sigma(alg, &p))?;
            vk = worst(vk, (&a.lam - &b.lam).max_abs().max((&a.xi - &b.xi).max_abs()).max((&a.mu - &b.mu).max_abs()));
            let c = omega_flat_red(&z);
            let d = project_tstar_tstar_g(model, &omega_flat(alg, &p))?;
            vo = worst(vo, (&c.lam - &d.lam).max_abs().max((&c.mu - &d.mu).max_abs()).max((&c.eta - &d.eta).max_abs()));
        }
        Ok([vk, vo])
    })();
    ctx.record("red_diff_kappa", nd, pick(&r, 0));
    ctx.record("red_diff_omega", nd, pick(&r, 1));

    let ni = ctx.n(10);
    let mut s = ctx.sampler("dirac");
    let r = (|| {
        let systems = reduced_systems()?;
        let mut v = [0.0f64; 5];
        let mut count = 0;
        for spec in &systems {
            let (l, h) = (lagrangian(spec)?, hamiltonian(spec)?);
            let alg = spec.model.algebra();
            let d = spec.model.dim();
            for _ in 0..ni {
                count += 1;
                let xi = s.alg(d, 1.5);
                let z = lagrange_dirac(l, &xi)?;
                v[0] = worst(v[0], dirac_identity_tau(l, &z)?);
                let mut off = z.clone();
                off.mu = &off.mu + &DualVec(DVector::from_element(d, 0.1));
                v[2] = worst(v[2], (0.05 - dirac_identity_tau(l, &off)?).max(0.0));
                v[3] = worst(v[3], dirac_isotropy(alg, &xi.0, &|x| lagrange_dirac(l, &AlgVec(x.clone())))?);

                let mu = s.dual(d, 1.5);
                let z = hamilton_dirac(h, &mu)?;
                v[1] = worst(v[1], dirac_identity_pi(h, &z)?);
                let mut off = z.clone();
                off.mu = &off.mu + &DualVec(DVector::from_element(d, 0.1));
                v[2] = worst(v[2], (0.05 - dirac_identity_pi(h, &off)?).max(0.0));
                v[4] = worst(v[4], dirac_isotropy(alg, &mu.0, &|x| hamilton_dirac(h, &DualVec(x.clone())))?);
            }
        }
        Ok((v, count))
    })();
    let count = r.as_ref().map_or(0, |x| x.1);
    let r = r.map(|x| x.0);
    ctx.record("dirac_tau", count, pick(&r, 0));
    ctx.record("dirac_pi", count, pick(&r, 1));
    ctx.record("off_submanifold_detected", 2 * count, pick(&r, 2));
    ctx.record("lagrange_dirac_isotropy", count, pick(&r, 3));
    ctx.record("hamilton_dirac_isotropy", count, pick(&r, 4));

    let model = GroupModel::so3();
    let mut s = ctx.sampler("orbit");
    let r = (|| {
        let mut v: f64 = 0.0;
        for _ in 0..n {
            let p = random_triplet(&mut s, &model);
            let h = s.element(&model);
            let mut q = p.clone();
            q.g = model.mul(&p.g, &h)?;
            let (a, b) = (project_tt_star_g(&model, &p)?, project_tt_star_g(&model, &q)?);
            let (ia, ib) = (orbit_invariants(&model, &a.lam), orbit_invariants(&model, &b.lam));
            v = worst(v, (ia[0] - ib[0]).abs());
        }
        Ok(v)
    })();
    ctx.record("orbit_invariance", n, r);
}

/// Largest `|Omega_zd|` on pairs of finite-difference tangents of an
/// `n`-parameter family of reduced points.
fn dirac_isotropy(
    alg: &StructureAlgebra,
    x: &DVector<f64>,
    phi: &dyn Fn(&DVector<f64>) -> Result<ReducedPoint>,
) -> Result<f64> {
    let h = 1e-4;
    let z = phi(x)?;
    let mut gens = Vec::new();
    for i in 0..x.len() {
        let mut e = DVector::zeros(x.len());
        e[i] = h;
        let (zp, zm) = (phi(&(x + &e))?, phi(&(x - &e))?);
        let t = ReducedTangent {
            d_lam: &(&zp.lam - &zm.lam) * (0.5 / h),
            d_mu: &(&zp.mu - &zm.mu) * (0.5 / h),
            d_xi: &(&zp.xi - &zm.xi) * (0.5 / h),
        };
        gens.push(tangent_to_reduced_generator(alg, &z, &t).0);
    }
    let mut v: f64 = 0.0;
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            v = worst(v, omega_zd(alg, &z, &gens[i], &gens[j]).abs());
        }
    }
    Ok(v)
}

// ---------------------------------------------------------------- integrate

fn integrate_suite(ctx: &mut Ctx) {
    let r = (|| {
        let spec = load("free_rigid_body")?;
        let h = hamiltonian(&spec)?;
        let s0 = PhaseState { g: spec.initial.g.clone(), mu: spec.initial_mu()? };
        let p4 = convergence_order(h, &s0, Method::Rkmk4, 0.02, 10.0)?;
        let p1 = convergence_order(h, &s0, Method::LieEuler, 0.02, 10.0)?;
        Ok([(p4 - 4.0).abs(), (p1 - 1.0).abs()])
    })();
    ctx.record("order_rkmk4", 1, pick(&r, 0));
    ctx.record("order_lie_euler", 1, pick(&r, 1));

    let r = (|| {
        let spec = load("free_rigid_body")?;
        let h = hamiltonian(&spec)?;
        let s0 = PhaseState { g: spec.initial.g.clone(), mu: spec.initial_mu()? };
        let rec = integrate_hamilton(h, &s0, &IntegratorSpec::new(Method::Rkmk4, 1e-3, 10_000))?;
        if let Some(e) = rec.error {
            return Err(Error::NonFinite(e));
        }
        let sm = rec.summary();
        Ok([sm.max_constraint_residual, sm.casimir_drift.iter().copied().fold(0.0, worst), sm.relative_energy_drift])
    })();
    ctx.record("so3_constraint", 10_001, pick(&r, 0));
    ctx.record("casimir_drift", 10_001, pick(&r, 1));
    ctx.record("energy_drift", 10_001, pick(&r, 2));

    let r = (|| {
        let spec = load("rigid_body_potential")?;
        let h = hamiltonian(&spec)?;
        let s0 = PhaseState { g: spec.initial.g.clone(), mu: spec.initial_mu()? };
        let rec = integrate_hamilton(h, &s0, &IntegratorSpec::new(Method::Rkmk4, 1e-2, 500))?;
        let mut v: f64 = 0.0;
        for st in &rec.states {
            let ps = PhaseState { g: st.g.clone().expect("group state"), mu: DualVec(st.v.clone()) };
            v = worst(v, sprime_residual(h, &submanifold_sprime(h, &ps)?)?);
        }
        Ok((v, rec.len()))
    })();
    let count = r.as_ref().map_or(0, |x| x.1);
    ctx.record("on_submanifold", count, r.map(|x| x.0));

    let r = (|| {
        let spec = load("free_rigid_body")?;
        let (l, h) = (lagrangian(&spec)?, hamiltonian(&spec)?);
        let mu0 = spec.initial_mu()?;
        let xi0 = spec.initial_xi()?;
        let it = IntegratorSpec::new(Method::Rkmk4, 1e-3, 10_000);
        let ep = integrate_euler_poincare(l, &xi0, &it)?;
        let lp = integrate_lie_poisson(h, &mu0, &it)?;
        let mut v: f64 = 0.0;
        for (a, b) in ep.states.iter().zip(&lp.states) {
            let mu = l.fiber_gradient_at(&AlgVec(a.v.clone()))?;
            v = worst(v, (&mu.0 - &b.v).amax());
        }
        if ep.len() != lp.len() {
            v = f64::INFINITY;
        }
        Ok(v)
    })();
    ctx.record("ep_lp_equivalence", 10_001, r);

    let r = (|| {
        let spec = load("abelian_particle")?;
        let h = hamiltonian(&spec)?;
        let s0 = PhaseState { g: spec.initial.g.clone(), mu: spec.initial_mu()? };
        let (dt, steps) = (1e-2, 1000);
        let rec = integrate_hamilton(h, &s0, &IntegratorSpec::new(Method::Rkmk4, dt, steps))?;
        let reference = classical_rk4(&DVector::from_vec(s0.g.entries()), &s0.mu.0, dt, steps);
        let mut v: f64 = 0.0;
        for (st, (q, p)) in rec.states.iter().zip(&reference) {
            let qn = DVector::from_vec(st.g.as_ref().expect("group state").entries());
            v = worst(v, (&qn - q).amax().max((&st.v - p).amax()));
        }
        Ok(v)
    })();
    ctx.record("classical_baseline", 1001, r);
}

/// Classical RK4 for `H = |p|^2 / 2 + |q|^2 / 2`.
fn classical_rk4(q0: &DVector<f64>, p0: &DVector<f64>, dt: f64, steps: usize) -> Vec<(DVector<f64>, DVector<f64>)> {
    let f = |q: &DVector<f64>, p: &DVector<f64>| (p.clone(), -q);
    let mut out = vec![(q0.clone(), p0.clone())];
    let (mut q, mut p) = (q0.clone(), p0.clone());
    for _ in 0..steps {
        let (a1, b1) = f(&q, &p);
        let (a2, b2) = f(&(&q + &a1 * (dt / 2.0)), &(&p + &b1 * (dt / 2.0)));
        let (a3, b3) = f(&(&q + &a2 * (dt / 2.0)), &(&p + &b2 * (dt / 2.0)));
        let (a4, b4) = f(&(&q + &a3 * dt), &(&p + &b3 * dt));
        q += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0);
        p += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (dt / 6.0);
        out.push((q.clone(), p.clone()));
    }
    out
}

// ---------------------------------------------------------------- systems

fn systems_suite(ctx: &mut Ctx) {
    let n = ctx.n(10);
    let fd = ctx.cfg.fd;
    let specs: Result<Vec<SystemSpec>> = BUILTINS.iter().map(|b| load(b)).collect();
    let specs = match specs {
        Ok(s) => s,
        Err(e) => {
            for (_, name, _) in PROPERTIES.iter().filter(|p| p.0 == "systems") {
                ctx.record(name, 0, Err(Error::Domain(e.to_string())));
            }
            return;
        }
    };

    let v = specs
        .iter()
        .map(|s| {
            let rep = s.model.algebra().validate();
            rep.jacobi.max(rep.antisymmetry)
        })
        .fold(0.0, worst);
    ctx.record("algebra_validate", specs.len(), Ok(v));

    let mut s = ctx.sampler("hat");
    let v = specs.iter().map(|sp| hat_defect(&mut s, &sp.model, n)).fold(0.0, worst);
    ctx.record("hat_intertwining", n * specs.len(), Ok(v));

    let mut s = ctx.sampler("pair");
    let paired: Vec<&SystemSpec> = specs.iter().filter(|s| s.lagrangian.is_some() && s.hamiltonian.is_some()).collect();
    let r = paired
        .iter()
        .try_fold(0.0, |acc, sp| legendre_pair_error(sp, &mut s, n).map(|e| worst(acc, e)));
    ctx.record("legendre_pair", n * paired.len(), r);

    let mut s = ctx.sampler("limit");
    let r = (|| {
        let free = load("free_rigid_body")?;
        let doc = serde_json::json!({
            "system": {"group": "so3", "inertia": [1.0, 2.0, 3.0], "potential_c": 0.0},
            "initial": {"mu": [1.0, 1.0, 1.0]}
        });
        let zero = from_config(&doc)?;
        let mut v: f64 = 0.0;
        for _ in 0..n {
            let g = s.element(&zero.model);
            let xi = s.alg(3, 1.5);
            let a = el_vector_field(lagrangian(&zero)?, &g, &xi)?.xidot;
            let b = euler_poincare_vf(lagrangian(&free)?, &xi)?;
            v = worst(v, (&a - &b).max_abs());
        }
        Ok(v)
    })();
    ctx.record("potential_limit", n, r);

    let mut s = ctx.sampler("gradients");
    let r = (|| {
        let mut v: f64 = 0.0;
        for sp in &specs {
            let model = sp.model.as_ref();
            let d = model.dim();
            for _ in 0..n {
                let g = s.element(model);
                let x = DVector::from_vec(s.coords(d, 1.5));
                if let Some(l) = &sp.lagrangian {
                    let xi = AlgVec(x.clone());
                    let num = fd.gradient(&x, |y| l.value(&g, &AlgVec(y.clone())).unwrap_or(f64::NAN));
                    v = worst(v, (&l.fiber_gradient(&g, &xi)?.0 - num).amax());
                    let num = model.right_gradient(|k| l.value(k, &xi).unwrap_or(f64::NAN), &g, &fd)?;
                    v = worst(v, (&l.group_gradient(&g, &xi)? - &num).max_abs());
                }
                if let Some(h) = &sp.hamiltonian {
                    let mu = DualVec(x.clone());
                    let num = fd.gradient(&x, |y| h.value(&g, &DualVec(y.clone())).unwrap_or(f64::NAN));
                    v = worst(v, (&h.fiber_gradient(&g, &mu)?.0 - num).amax());
                    let num = model.right_gradient(|k| h.value(k, &mu).unwrap_or(f64::NAN), &g, &fd)?;
                    v = worst(v, (&h.group_gradient(&g, &mu)? - &num).max_abs());
                }
            }
        }
        Ok(v)
    })();
    ctx.record("analytic_gradients", n * specs.len(), r);
}

// ---------------------------------------------------------------- reports

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LegendreReport {
    pub system: String,
    pub seed: u64,
    pub samples: usize,
    /// `None` when the Lagrangian is degenerate and no Hamiltonian exists.
    pub max_roundtrip_error: Option<f64>,
    pub rank_check_pass: bool,
    pub rank_checks: usize,
    pub degenerate: bool,
}

/// The Lagrangian frozen at `g`, as a field on the fibre alone.
fn restrict(l: &LagrangianField, g: &GroupElement) -> LagrangianField {
    let (a, b, c) = ((l.clone(), g.clone()), (l.clone(), g.clone()), (l.clone(), g.clone()));
    let n = l.dim();
    LagrangianField::reduced(l.model().clone(), move |xi: &AlgVec| a.0.value(&a.1, xi).unwrap_or(f64::NAN))
        .with_fiber_gradient(move |_, xi| {
            b.0.fiber_gradient(&b.1, xi)
                .unwrap_or_else(|_| DualVec(DVector::from_element(n, f64::NAN)))
        })
        .with_fiber_hessian(move |_, xi| {
            c.0.fiber_hessian(&c.1, xi)
                .unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN))
        })
        .with_fd(*l.fd())
}

/// Roundtrip error of `legendre_inverse . legendre_transform` on sampled
/// velocities (fibrewise at sampled `g` for group-dependent systems) and the
/// Morse rank condition of the Lagrangian generating families.
pub fn legendre_report(spec: &SystemSpec, samples: usize, seed: u64) -> Result<LegendreReport> {
    let l = lagrangian(spec)?;
    let model = spec.model.as_ref();
    let d = model.dim();
    let mut s = Sampler::stream(seed, "legendre");
    let mut degenerate = false;
    let mut err: f64 = 0.0;
    let fibres: Vec<LagrangianField> = if l.is_reduced() {
        vec![l.clone()]
    } else {
        (0..samples.min(10)).map(|_| restrict(l, &s.element(model))).collect()
    };
    'outer: for (k, f) in fibres.iter().enumerate() {
        let back = match legendre_transform(f).and_then(|h| legendre_inverse(&h)) {
            Ok(back) => back,
            Err(Error::DegenerateLagrangian { .. }) => {
                degenerate = true;
                break 'outer;
            }
            Err(e) => return Err(e),
        };
        let per = samples / fibres.len() + usize::from(k < samples % fibres.len());
        for _ in 0..per {
            let xi = s.alg(d, 1.5);
            err = worst(err, (back.value_at(&xi)? - f.value_at(&xi)?).abs());
        }
    }
    let mut families = vec![make_el2h(l)];
    if l.is_reduced() {
        families.push(make_reduced_l2h(l)?);
    }
    let mut pass = true;
    let mut checks = 0;
    for e in &families {
        for _ in 0..samples {
            let x = DVector::from_vec(s.coords(d, 1.5));
            let base = if e.kind().has_group() {
                BasePoint::with_group(s.element(model), x)
            } else {
                BasePoint::linear(x)
            };
            let r = DVector::from_vec(s.coords(d, 1.5));
            checks += 1;
            pass &= rank_check(e, &base, &r)?.pass;
        }
    }
    Ok(LegendreReport {
        system: spec.name.clone(),
        seed,
        samples,
        max_roundtrip_error: (!degenerate).then_some(err),
        rank_check_pass: pass,
        rank_checks: checks,
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubmanifoldStats {
    pub points: usize,
    pub max_membership_residual: f64,
    pub max_isotropy: f64,
    /// Smallest rank of the parametrization tangents over the samples.
    pub dimension: usize,
    pub expected_dimension: usize,
    pub example: TripletPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedStats {
    pub points: usize,
    pub max_dirac_residual: f64,
    pub max_isotropy: f64,
    pub example: ReducedPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubmanifoldReport {
    pub system: String,
    pub seed: u64,
    pub samples: usize,
    pub membership_tol: f64,
    pub isotropy_tol: f64,
    pub s: Option<SubmanifoldStats>,
    pub sprime: Option<SubmanifoldStats>,
    pub lagrange_dirac: Option<ReducedStats>,
    pub hamilton_dirac: Option<ReducedStats>,
    pub pass: bool,
}

pub const DEFAULT_ISOTROPY_TOL: f64 = 1e-6;

/// Membership and isotropy statistics of the Lagrangian submanifolds of a
/// system over sampled parameters.
pub fn submanifold_report(
    spec: &SystemSpec,
    samples: usize,
    seed: u64,
    membership_tol: f64,
    isotropy_tol: f64,
) -> Result<SubmanifoldReport> {
    let model = spec.model.as_ref();
    let alg = model.algebra();
    let d = model.dim();
    let mut s = Sampler::stream(seed, "submanifold");
    let mut stats = |phi: &dyn Fn(&GroupElement, &DVector<f64>) -> Result<TripletPoint>,
                     residual: &dyn Fn(&TripletPoint) -> Result<f64>|
     -> Result<Option<SubmanifoldStats>> {
        let mut out: Option<SubmanifoldStats> = None;
        for _ in 0..samples {
            let g = s.element(model);
            let x = DVector::from_vec(s.coords(d, 1.5));
            let p = phi(&g, &x)?;
            let res = residual(&p)?;
            let ts = parametrization_tangents(model, &g, &x, phi);
            let (iso, rank) = isotropy(alg, &p, &ts);
            let st = out.get_or_insert_with(|| SubmanifoldStats {
                points: 0,
                max_membership_residual: 0.0,
                max_isotropy: 0.0,
                dimension: usize::MAX,
                expected_dimension: 2 * d,
                example: p.clone(),
            });
            st.points += 1;
            st.max_membership_residual = worst(st.max_membership_residual, res);
            st.max_isotropy = worst(st.max_isotropy, iso);
            st.dimension = st.dimension.min(rank);
        }
        Ok(out)
    };
    let s_stats = match &spec.lagrangian {
        Some(l) => stats(
            &|g, x| submanifold_s(l, g, &AlgVec(x.clone())),
            &|p| crate::dynamics::s_residual(l, p),
        )?,
        None => None,
    };
    let sp_stats = match &spec.hamiltonian {
        Some(h) => stats(
            &|g, x| submanifold_sprime(h, &PhaseState { g: g.clone(), mu: DualVec(x.clone()) }),
            &|p| sprime_residual(h, p),
        )?,
        None => None,
    };

    let mut reduced = |phi: &dyn Fn(&DVector<f64>) -> Result<ReducedPoint>,
                       residual: &dyn Fn(&ReducedPoint) -> Result<f64>|
     -> Result<Option<ReducedStats>> {
        let mut out: Option<ReducedStats> = None;
        for _ in 0..samples {
            let x = DVector::from_vec(s.coords(d, 1.5));
            let z = phi(&x)?;
            let res = residual(&z)?;
            let iso = dirac_isotropy(alg, &x, phi)?;
            let st = out.get_or_insert_with(|| ReducedStats {
                points: 0,
                max_dirac_residual: 0.0,
                max_isotropy: 0.0,
                example: z.clone(),
            });
            st.points += 1;
            st.max_dirac_residual = worst(st.max_dirac_residual, res);
            st.max_isotropy = worst(st.max_isotropy, iso);
        }
        Ok(out)
    };
    let ld = match &spec.lagrangian {
        Some(l) if l.is_reduced() => reduced(
            &|x| lagrange_dirac(l, &AlgVec(x.clone())),
            &|z| dirac_identity_tau(l, z),
        )?,
        _ => None,
    };
    let hd = match &spec.hamiltonian {
        Some(h) if h.is_reduced() => reduced(
            &|x| hamilton_dirac(h, &DualVec(x.clone())),
            &|z| dirac_identity_pi(h, z),
        )?,
        _ => None,
    };

    let ok = |st: &Option<SubmanifoldStats>| {
        st.as_ref().is_none_or(|st| {
            st.max_membership_residual <= membership_tol
                && st.max_isotropy <= isotropy_tol
                && st.dimension == st.expected_dimension
        })
    };
    let ok_red = |st: &Option<ReducedStats>| {
        st.as_ref()
            .is_none_or(|st| st.max_dirac_residual <= membership_tol && st.max_isotropy <= isotropy_tol)
    };
    let pass = ok(&s_stats) && ok(&sp_stats) && ok_red(&ld) && ok_red(&hd);
    Ok(SubmanifoldReport {
        system: spec.name.clone(),
        seed,
        samples,
        membership_tol,
        isotropy_tol,
        s: s_stats,
        sprime: sp_stats,
        lagrange_dirac: ld,
        hamilton_dirac: hd,
        pass,
    })
}
