//! Shipped example systems and the JSON system description.
//!
//! Default parameters (inertia `diag(1, 2, 3)`, `c = 1`, initial data) are
//! choices of this crate, picked to exercise every code path.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use serde_json::Value;

use crate::algebra::{AlgVec, DualVec};
use crate::dynamics::{HamiltonianField, LagrangianField};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind, GroupModel};
use crate::legendre::conjugate;
use crate::sample::Sampler;

pub const BUILTINS: [&str; 5] = [
    "free_rigid_body",
    "rigid_body_potential",
    "abelian_particle",
    "heisenberg_free",
    "degenerate_linear",
];

/// Tolerance for the Legendre-pair consistency check.
pub const PAIR_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub inertia: Option<DMatrix<f64>>,
    pub potential_c: f64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    pub g: GroupElement,
    pub mu: Option<DualVec>,
    pub xi: Option<AlgVec>,
}

#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub name: String,
    pub model: Arc<GroupModel>,
    pub lagrangian: Option<LagrangianField>,
    pub hamiltonian: Option<HamiltonianField>,
    pub params: SystemParams,
    pub initial: InitialState,
    pub warnings: Vec<String>,
}

impl SystemSpec {
    pub fn group_id(&self) -> String {
        self.model.kind().to_string()
    }

    /// True when the fields ignore the group variable.
    pub fn is_reduced(&self) -> bool {
        self.lagrangian.as_ref().is_none_or(|l| l.is_reduced())
            && self.hamiltonian.as_ref().is_none_or(|h| h.is_reduced())
    }

    /// Initial momentum, from the Lagrangian when only `xi` is given.
    pub fn initial_mu(&self) -> Result<DualVec> {
        if let Some(mu) = &self.initial.mu {
            return Ok(mu.clone());
        }
        match (&self.initial.xi, &self.lagrangian) {
            (Some(xi), Some(l)) => l.fiber_gradient(&self.initial.g, xi),
            _ => Ok(DualVec::zeros(self.model.dim())),
        }
    }

    /// Initial velocity, from the Hamiltonian when only `mu` is given.
    pub fn initial_xi(&self) -> Result<AlgVec> {
        if let Some(xi) = &self.initial.xi {
            return Ok(xi.clone());
        }
        match (&self.initial.mu, &self.hamiltonian) {
            (Some(mu), Some(h)) => h.fiber_gradient(&self.initial.g, mu),
            _ => Ok(AlgVec::zeros(self.model.dim())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Potential {
    None,
    /// `c (g e3) . e3` on SO(3).
    Gravity(f64),
    /// `c |q|^2 / 2` on R^n.
    Spring(f64),
}

impl Potential {
    fn value(self, g: &GroupElement) -> f64 {
        match (self, g) {
            (Potential::Gravity(c), GroupElement::So3(m)) => c * m[(2, 2)],
            (Potential::Spring(c), GroupElement::Abelian(q)) => 0.5 * c * q.norm_squared(),
            _ => 0.0,
        }
    }

    /// Right-trivialized gradient.
    fn gradient(self, g: &GroupElement) -> DualVec {
        match (self, g) {
            (Potential::Gravity(c), GroupElement::So3(m)) => {
                let r = m.transpose() * Vector3::z();
                DualVec::from_slice(Vector3::z().cross(&r).scale(c).as_slice())
            }
            (Potential::Spring(c), GroupElement::Abelian(q)) => DualVec(q * c),
            (_, g) => DualVec::zeros(g.kind().dim()),
        }
    }
}

fn quadratic_pair(model: &Arc<GroupModel>, inertia: &DMatrix<f64>, h_inertia: &DMatrix<f64>, pot: Potential) -> Result<(LagrangianField, HamiltonianField)> {
    let inv = h_inertia
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular inertia".into()))?;
    let (i1, i2, i3) = (inertia.clone(), inertia.clone(), inertia.clone());
    let (j1, j2, j3) = (inv.clone(), inv.clone(), inv);
    let lagrangian = |eval: Box<dyn Fn(&GroupElement, &AlgVec) -> f64 + Send + Sync>| {
        if pot == Potential::None {
            LagrangianField::reduced(model.clone(), move |xi| eval(&GroupElement::Abelian(DVector::zeros(0)), xi))
        } else {
            LagrangianField::new(model.clone(), eval).with_group_gradient(move |g, _| -pot.gradient(g))
        }
    };
    let l = lagrangian(Box::new(move |g, xi: &AlgVec| 0.5 * xi.0.dot(&(&i1 * &xi.0)) - pot.value(g)))
        .with_fiber_gradient(move |_, xi| DualVec(&i2 * &xi.0))
        .with_fiber_hessian(move |_, _| i3.clone());
    let h = if pot == Potential::None {
        HamiltonianField::reduced(model.clone(), move |mu: &DualVec| 0.5 * mu.0.dot(&(&j1 * &mu.0)))
    } else {
        HamiltonianField::new(model.clone(), move |g, mu: &DualVec| 0.5 * mu.0.dot(&(&j1 * &mu.0)) + pot.value(g))
            .with_group_gradient(move |g, _| pot.gradient(g))
    }
    .with_fiber_gradient(move |_, mu| AlgVec(&j2 * &mu.0))
    .with_fiber_hessian(move |_, _| j3.clone());
    Ok((l, h))
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(v))
}

fn build(
    name: &str,
    model: GroupModel,
    inertia: DMatrix<f64>,
    h_inertia: Option<DMatrix<f64>>,
    pot: Potential,
    initial: InitialState,
) -> Result<SystemSpec> {
    let model = Arc::new(model);
    let explicit_h = h_inertia.is_some();
    let (l, h) = quadratic_pair(&model, &inertia, h_inertia.as_ref().unwrap_or(&inertia), pot)?;
    let c = match pot {
        Potential::Gravity(c) | Potential::Spring(c) => c,
        Potential::None => 0.0,
    };
    let mut spec = SystemSpec {
        name: name.into(),
        params: SystemParams {
            inertia: Some(inertia),
            potential_c: c,
            dim: model.dim(),
        },
        model,
        lagrangian: Some(l),
        hamiltonian: Some(h),
        initial,
        warnings: Vec::new(),
    };
    if explicit_h {
        let err = legendre_pair_error(&spec, &mut Sampler::stream(crate::sample::DEFAULT_SEED, "pair"), 8)?;
        if err > PAIR_TOL {
            spec.warnings.push(format!(
                "lagrangian and hamiltonian are not a Legendre pair (max mismatch {err:.3e} over 8 samples)"
            ));
        }
    }
    Ok(spec)
}

/// A shipped system by name.
pub fn builtin(name: &str) -> Result<SystemSpec> {
    match name {
        "free_rigid_body" => {
            let model = GroupModel::so3();
            let initial = InitialState {
                g: model.identity(),
                mu: Some(DualVec::from([1.0, 1.0, 1.0])),
                xi: None,
            };
            build(name, model, diag(&[1.0, 2.0, 3.0]), None, Potential::None, initial)
        }
        "rigid_body_potential" => {
            let model = GroupModel::so3();
            let initial = InitialState {
                g: model.exp(&AlgVec::from([0.5, 0.0, 0.0]))?,
                mu: Some(DualVec::from([1.0, 1.0, 1.0])),
                xi: None,
            };
            build(name, model, diag(&[1.0, 2.0, 3.0]), None, Potential::Gravity(1.0), initial)
        }
        "abelian_particle" => {
            let model = GroupModel::abelian(3);
            let initial = InitialState {
                g: GroupElement::Abelian(DVector::from_vec(vec![1.0, 0.0, 0.0])),
                mu: Some(DualVec::from([0.0, 1.0, 0.5])),
                xi: None,
            };
            build(name, model, DMatrix::identity(3, 3), None, Potential::Spring(1.0), initial)
        }
        "heisenberg_free" => {
            let model = GroupModel::heisenberg3();
            let initial = InitialState {
                g: model.identity(),
                mu: Some(DualVec::from([1.0, 0.5, 0.2])),
                xi: None,
            };
            build(name, model, DMatrix::identity(3, 3), None, Potential::None, initial)
        }
        "degenerate_linear" => {
            let model = Arc::new(GroupModel::so3());
            let a = [1.0, 2.0, 3.0];
            let l = LagrangianField::reduced(model.clone(), move |xi: &AlgVec| (0..3).map(|k| a[k] * xi[k]).sum())
                .with_fiber_gradient(move |_, _| DualVec::from(a))
                .with_fiber_hessian(|_, _| DMatrix::zeros(3, 3));
            Ok(SystemSpec {
                name: name.into(),
                params: SystemParams {
                    inertia: None,
                    potential_c: 0.0,
                    dim: 3,
                },
                initial: InitialState {
                    g: model.identity(),
                    mu: None,
                    xi: Some(AlgVec::from([1.0, 0.0, 0.0])),
                },
                model,
                lagrangian: Some(l),
                hamiltonian: None,
                warnings: Vec::new(),
            })
        }
        _ => Err(Error::UnknownSystem(name.into())),
    }
}

/// Largest `|H(g, mu) - (<mu, xi*> - L(g, xi*))|` over sampled `(g, mu)`,
/// where `xi*` solves `dL/dxi (g, xi*) = mu`.
pub fn legendre_pair_error(spec: &SystemSpec, sampler: &mut Sampler, samples: usize) -> Result<f64> {
    let (l, h) = match (&spec.lagrangian, &spec.hamiltonian) {
        (Some(l), Some(h)) => (l, h),
        _ => return Ok(0.0),
    };
    let n = spec.model.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let g = sampler.element(&spec.model);
        let mu = sampler.dual(n, 1.0);
        let (a, b, c) = (l.clone(), l.clone(), l.clone());
        let (ga, gb, gc) = (g.clone(), g.clone(), g.clone());
        let frozen = LagrangianField::reduced(spec.model.clone(), move |xi| a.value(&ga, xi).unwrap_or(f64::NAN))
            .with_fiber_gradient(move |_, xi| {
                b.fiber_gradient(&gb, xi).unwrap_or_else(|_| DualVec::new(vec![f64::NAN; xi.dim()]))
            })
            .with_fiber_hessian(move |_, xi| {
                c.fiber_hessian(&gc, xi).unwrap_or_else(|_| DMatrix::from_element(xi.dim(), xi.dim(), f64::NAN))
            });
        let (_, value) = conjugate(&frozen, &mu)?;
        worst = worst.max((value - h.value(&g, &mu)?).abs());
    }
    Ok(worst)
}

fn cfg_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| cfg_err(path, "expected an array of numbers"))?
        .iter()
        .enumerate()
        .map(|(i, x)| x.as_f64().ok_or_else(|| cfg_err(&format!("{path}[{i}]"), "expected a number")))
        .collect()
}

fn rows(v: &Value, path: &str) -> Result<Vec<Vec<f64>>> {
    let arr = v.as_array().ok_or_else(|| cfg_err(path, "expected an array"))?;
    if !arr.iter().any(Value::is_array) {
        return Ok(vec![numbers(v, path)?]);
    }
    arr.iter()
        .enumerate()
        .map(|(i, r)| numbers(r, &format!("{path}[{i}]")))
        .collect()
}

/// A diagonal (flat list) or full symmetric (nested list) inertia.
fn inertia(v: &Value, n: usize, path: &str) -> Result<DMatrix<f64>> {
    let r = rows(v, path)?;
    let m = if r.len() == 1 {
        if r[0].len() != n {
            return Err(cfg_err(path, format!("expected {n} diagonal entries, found {}", r[0].len())));
        }
        diag(&r[0])
    } else {
        if r.len() != n || r.iter().any(|row| row.len() != n) {
            return Err(cfg_err(path, format!("expected an {n}x{n} matrix")));
        }
        DMatrix::from_fn(n, n, |i, j| r[i][j])
    };
    if (&m - m.transpose()).amax() > 1e-12 {
        return Err(cfg_err(path, "inertia must be symmetric"));
    }
    if m.iter().any(|x| !x.is_finite()) || m.clone().cholesky().is_none() {
        return Err(cfg_err(path, "inertia must be positive definite"));
    }
    Ok(m)
}

fn vector(v: Option<&Value>, n: usize, path: &str) -> Result<Option<DVector<f64>>> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            let x = numbers(v, path)?;
            if x.len() != n {
                return Err(cfg_err(path, format!("expected {n} entries, found {}", x.len())));
            }
            Ok(Some(DVector::from_vec(x)))
        }
    }
}

fn custom(obj: &serde_json::Map<String, Value>) -> Result<SystemSpec> {
    for key in obj.keys() {
        if !["group", "inertia", "potential_c", "dim", "hamiltonian", "name"].contains(&key.as_str()) {
            return Err(cfg_err(&format!("system.{key}"), "unknown field"));
        }
    }
    let id = obj
        .get("group")
        .and_then(Value::as_str)
        .ok_or_else(|| cfg_err("system.group", "expected a group id string"))?;
    let dim = match obj.get("dim") {
        None | Some(Value::Null) => None,
        Some(d) => Some(
            d.as_u64()
                .filter(|&d| d > 0)
                .ok_or_else(|| cfg_err("system.dim", "expected a positive integer"))? as usize,
        ),
    };
    let kind = match (id, dim) {
        ("abelian", Some(n)) => GroupKind::Abelian(n),
        ("abelian", None) => return Err(cfg_err("system.dim", "abelian groups need a dimension")),
        _ => GroupKind::parse(id).map_err(|e| cfg_err("system.group", e.to_string()))?,
    };
    if let Some(n) = dim {
        if n != kind.dim() {
            return Err(cfg_err("system.dim", format!("group {kind} has dimension {}", kind.dim())));
        }
    }
    let model = GroupModel::new(kind);
    let n = model.dim();
    let i = match obj.get("inertia") {
        None | Some(Value::Null) => DMatrix::identity(n, n),
        Some(v) => inertia(v, n, "system.inertia")?,
    };
    let c = match obj.get("potential_c") {
        None | Some(Value::Null) => 0.0,
        Some(v) => v
            .as_f64()
            .filter(|c| c.is_finite())
            .ok_or_else(|| cfg_err("system.potential_c", "expected a number"))?,
    };
    let pot = match (kind, c) {
        (_, c) if c == 0.0 => Potential::None,
        (GroupKind::So3, c) => Potential::Gravity(c),
        (GroupKind::Abelian(_), c) => Potential::Spring(c),
        (GroupKind::Heisenberg3, _) => {
            return Err(cfg_err("system.potential_c", "no potential is defined on heisenberg3"))
        }
    };
    let h_inertia = match obj.get("hamiltonian") {
        None | Some(Value::Null) => None,
        Some(Value::Object(h)) => Some(inertia(
            h.get("inertia").ok_or_else(|| cfg_err("system.hamiltonian.inertia", "missing"))?,
            n,
            "system.hamiltonian.inertia",
        )?),
        Some(_) => return Err(cfg_err("system.hamiltonian", "expected an object")),
    };
    let name = obj.get("name").and_then(Value::as_str).unwrap_or("custom").to_string();
    let initial = InitialState {
        g: model.identity(),
        mu: None,
        xi: None,
    };
    build(&name, model, i, h_inertia, pot, initial)
}

/// Builds a system from `{"system": name | {...}, "initial": {...}}`.
pub fn from_config(doc: &Value) -> Result<SystemSpec> {
    let obj = doc.as_object().ok_or_else(|| cfg_err("", "expected a JSON object"))?;
    let mut spec = match obj.get("system") {
        Some(Value::String(name)) => builtin(name).map_err(|e| cfg_err("system", e.to_string()))?,
        Some(Value::Object(sys)) => custom(sys)?,
        Some(_) => return Err(cfg_err("system", "expected a builtin name or a system object")),
        None => return Err(cfg_err("system", "missing")),
    };
    if let Some(init) = obj.get("initial") {
        if init.is_null() {
            return Ok(spec);
        }
        let init = init.as_object().ok_or_else(|| cfg_err("initial", "expected an object"))?;
        for key in init.keys() {
            if !["g", "mu", "xi"].contains(&key.as_str()) {
                return Err(cfg_err(&format!("initial.{key}"), "unknown field"));
            }
        }
        let n = spec.model.dim();
        if let Some(g) = init.get("g").filter(|g| !g.is_null()) {
            let r = rows(g, "initial.g")?;
            spec.initial.g = spec
                .model
                .element_from_rows(&r)
                .map_err(|e| match e {
                    Error::Config { message, .. } => cfg_err("initial.g", message),
                    other => cfg_err("initial.g", other.to_string()),
                })?;
        }
        let mu = vector(init.get("mu"), n, "initial.mu")?;
        let xi = vector(init.get("xi"), n, "initial.xi")?;
        if mu.is_some() || xi.is_some() {
            spec.initial.mu = mu.map(DualVec);
            spec.initial.xi = xi.map(AlgVec);
        }
    }
    if spec.initial.mu.is_none() && spec.initial.xi.is_none() {
        return Err(cfg_err("initial", "give at least one of mu and xi"));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{el_vector_field, euler_poincare_vf};
    use serde_json::json;

    #[test]
    fn builtins_resolve() {
        for name in BUILTINS {
            let s = builtin(name).unwrap();
            assert_eq!(s.name, name);
            assert!(s.lagrangian.is_some() || s.hamiltonian.is_some());
            assert!(s.warnings.is_empty());
        }
        assert!(matches!(builtin("pendulum"), Err(Error::UnknownSystem(_))));
        let s = builtin("free_rigid_body").unwrap();
        assert_eq!(s.initial.mu.as_ref().unwrap().as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(s.params.inertia.as_ref().unwrap(), &diag(&[1.0, 2.0, 3.0]));
        assert!(s.is_reduced());
        assert!(!builtin("rigid_body_potential").unwrap().is_reduced());
        assert_eq!(s.initial_xi().unwrap().as_slice(), &[1.0, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn builtin_pairs_are_consistent() {
        let mut s = Sampler::new(3);
        for name in ["free_rigid_body", "rigid_body_potential", "abelian_particle", "heisenberg_free"] {
            let spec = builtin(name).unwrap();
            assert!(legendre_pair_error(&spec, &mut s, 10).unwrap() <= PAIR_TOL, "{name}");
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut s = Sampler::new(4);
        for name in BUILTINS {
            let spec = builtin(name).unwrap();
            let model = spec.model.clone();
            for _ in 0..10 {
                let g = s.element(&model);
                let xi = s.alg(model.dim(), 1.0);
                if let Some(l) = &spec.lagrangian {
                    let fd = model.right_gradient(|h| l.value(h, &xi).unwrap(), &g, l.fd()).unwrap();
                    assert!((&l.group_gradient(&g, &xi).unwrap() - &fd).max_abs() < 1e-6, "{name}");
                    let grad = l.fiber_gradient(&g, &xi).unwrap();
                    let fdg = l.fd().gradient(&xi.0, |x| l.value(&g, &AlgVec(x.clone())).unwrap());
                    assert!((grad.0 - fdg).amax() < 1e-6, "{name}");
                }
                if let Some(h) = &spec.hamiltonian {
                    let mu = DualVec(xi.0.clone());
                    let fd = model.right_gradient(|k| h.value(k, &mu).unwrap(), &g, h.fd()).unwrap();
                    assert!((&h.group_gradient(&g, &mu).unwrap() - &fd).max_abs() < 1e-6, "{name}");
                }
            }
        }
    }

    #[test]
    fn potential_at_zero_reduces_to_free_body() {
        let free = builtin("free_rigid_body").unwrap();
        let zero = from_config(&json!({"system": {"group": "so3", "inertia": [1, 2, 3], "potential_c": 0.0}, "initial": {"mu": [1, 1, 1]}})).unwrap();
        let mut s = Sampler::new(5);
        for _ in 0..10 {
            let g = s.element(&zero.model);
            let xi = s.alg(3, 1.0);
            let a = el_vector_field(zero.lagrangian.as_ref().unwrap(), &g, &xi).unwrap().xidot;
            let b = euler_poincare_vf(free.lagrangian.as_ref().unwrap(), &xi).unwrap();
            assert!((&a - &b).max_abs() < 1e-12);
        }
    }

    #[test]
    fn config_documents() {
        let spec = from_config(&json!({"system": "free_rigid_body"})).unwrap();
        assert_eq!(spec.name, "free_rigid_body");
        let spec = from_config(&json!({
            "system": {"group": "so3", "inertia": [[2, 0, 0], [0, 3, 0], [0, 0, 4]], "potential_c": 0.5},
            "initial": {"g": null, "mu": [0.1, 0.2, 0.3], "xi": null}
        }))
        .unwrap();
        assert!(!spec.is_reduced());
        assert_eq!(spec.params.potential_c, 0.5);
        let spec = from_config(&json!({
            "system": {"group": "abelian", "dim": 2},
            "initial": {"g": [[1.0, 2.0]], "xi": [0.0, 1.0]}
        }))
        .unwrap();
        assert_eq!(spec.initial.g, GroupElement::Abelian(DVector::from_vec(vec![1.0, 2.0])));
        assert_eq!(spec.initial_mu().unwrap().as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn config_errors_name_the_field() {
        let path = |doc: Value| match from_config(&doc) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert_eq!(path(json!({"system": {"group": "so3", "inertia": [1, 0, 3]}, "initial": {"mu": [1, 1, 1]}})), "system.inertia");
        assert_eq!(path(json!({"system": {"group": "so3", "inertia": [1, "x", 3]}})), "system.inertia[1]");
        assert_eq!(path(json!({"system": "pendulum"})), "system");
        assert_eq!(path(json!({"system": {"group": "so4"}})), "system.group");
        assert_eq!(path(json!({"system": "free_rigid_body", "initial": {"mu": [1, 2]}})), "initial.mu");
        assert_eq!(path(json!({"system": "free_rigid_body", "initial": {"g": [[2, 0, 0], [0, 1, 0], [0, 0, 1]]}})), "initial.g");
        assert_eq!(path(json!({"system": {"group": "heisenberg3", "potential_c": 1.0}})), "system.potential_c");
        assert_eq!(path(json!([1, 2])), "");
        assert_eq!(path(json!({"system": {"group": "so3", "colour": 1}})), "system.colour");
    }

    #[test]
    fn inconsistent_pair_is_accepted_with_warning() {
        let spec = from_config(&json!({
            "system": {"group": "so3", "inertia": [1, 2, 3], "hamiltonian": {"inertia": [1, 1, 1]}},
            "initial": {"mu": [1, 1, 1]}
        }))
        .unwrap();
        assert_eq!(spec.warnings.len(), 1);
        let spec = from_config(&json!({
            "system": {"group": "so3", "inertia": [1, 2, 3], "hamiltonian": {"inertia": [1, 2, 3]}},
            "initial": {"mu": [1, 1, 1]}
        }))
        .unwrap();
        assert!(spec.warnings.is_empty());
    }
}
