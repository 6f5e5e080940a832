//! Fixed-step integration of the Hamilton, Lie-Poisson, Euler-Poincare and
//! trivialized Euler-Lagrange vector fields.
//!
//! Group components move by `g -> exp(dt k) g`. `rkmk4` is the fourth-order
//! Runge-Kutta-Munthe-Kaas scheme with single-commutator corrections,
//! `lie_euler` its one-stage version, and `rk4_linear` classical RK4 on the
//! matrix entries followed by re-projection. Vector components always follow
//! the RK stages of the chosen method.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgVec, DualVec};
use crate::dynamics::{
    el_residual, el_vector_field, euler_poincare_vf, hamilton_vector_field, lie_poisson_vf, HamiltonianField,
    LagrangianField, PhaseState,
};
use crate::error::{check_dim, Error, Result};
use crate::group::{reproject, GroupElement, GroupKind, GroupModel, REPROJECT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LieEuler,
    Rkmk4,
    Rk4Linear,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lie_euler" => Ok(Self::LieEuler),
            "rkmk4" => Ok(Self::Rkmk4),
            "rk4_linear" => Ok(Self::Rk4Linear),
            _ => Err(Error::Config {
                path: "integrator.method".into(),
                message: format!("unknown method `{s}` (expected lie_euler, rkmk4 or rk4_linear)"),
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::LieEuler => "lie_euler",
            Self::Rkmk4 => "rkmk4",
            Self::Rk4Linear => "rk4_linear",
        }
    }
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub method: Method,
    pub dt: f64,
    pub steps: usize,
    /// Record every `stride`-th step; the final step is always recorded.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

impl IntegratorSpec {
    pub fn new(method: Method, dt: f64, steps: usize) -> Self {
        Self { method, dt, steps, stride: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| {
            Err(Error::Config {
                path: format!("integrator.{path}"),
                message: message.into(),
            })
        };
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "must be positive and finite");
        }
        if self.steps == 0 {
            return bad("steps", "must be at least 1");
        }
        if self.stride == 0 {
            return bad("stride", "must be at least 1");
        }
        Ok(())
    }
}

/// Whether the vector part of a state is a momentum or a velocity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Momentum,
    Velocity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState {
    pub g: Option<GroupElement>,
    pub v: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub energy: f64,
    pub casimirs: Vec<f64>,
    pub constraint_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub el_residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub group: GroupKind,
    pub kind: StateKind,
    pub times: Vec<f64>,
    pub states: Vec<TrajectoryState>,
    pub diagnostics: Vec<Diagnostics>,
    /// Set when a field evaluation failed; the record stops at the last good step.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub steps: usize,
    pub t_final: f64,
    pub energy_final: f64,
    pub energy_drift: f64,
    pub relative_energy_drift: f64,
    pub casimir_drift: Vec<f64>,
    pub max_constraint_residual: f64,
    pub error: Option<String>,
}

/// Drifts are relative unless the initial value is zero.
fn scale(x: f64) -> f64 {
    if x.abs() > 1e-300 {
        x.abs()
    } else {
        1.0
    }
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn summary(&self) -> Summary {
        let first = &self.diagnostics[0];
        let last = self.diagnostics.last().unwrap_or(first);
        let energy_drift = self
            .diagnostics
            .iter()
            .map(|d| (d.energy - first.energy).abs())
            .fold(0.0, f64::max);
        let casimir_drift = (0..first.casimirs.len())
            .map(|k| {
                let c0 = first.casimirs[k];
                self.diagnostics
                    .iter()
                    .map(|d| (d.casimirs[k] - c0).abs() / scale(c0))
                    .fold(0.0, f64::max)
            })
            .collect();
        Summary {
            steps: self.len().saturating_sub(1),
            t_final: *self.times.last().unwrap_or(&0.0),
            energy_final: last.energy,
            energy_drift,
            relative_energy_drift: energy_drift / scale(first.energy),
            casimir_drift,
            max_constraint_residual: self
                .diagnostics
                .iter()
                .map(|d| d.constraint_residual)
                .fold(0.0, f64::max),
            error: self.error.clone(),
        }
    }

    /// Momentum (or velocity) components as rows.
    pub fn vectors(&self) -> Vec<DVector<f64>> {
        self.states.iter().map(|s| s.v.clone()).collect()
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        if let Some(Some(g)) = self.states.first().map(|s| &s.g) {
            match g {
                GroupElement::Abelian(q) => h.extend((1..=q.len()).map(|i| format!("q{i}"))),
                _ => h.extend((0..3).flat_map(|i| (0..3).map(move |j| format!("g{i}{j}")))),
            }
        }
        let (prefix, n) = match self.kind {
            StateKind::Momentum => ("mu", self.states.first().map_or(0, |s| s.v.len())),
            StateKind::Velocity => ("xi", self.states.first().map_or(0, |s| s.v.len())),
        };
        h.extend((1..=n).map(|i| format!("{prefix}{i}")));
        h.push("energy".into());
        let nc = self.diagnostics.first().map_or(0, |d| d.casimirs.len());
        h.extend((1..=nc).map(|i| format!("casimir{i}")));
        h.push("constraint_residual".into());
        if self.diagnostics.first().is_some_and(|d| d.el_residual.is_some()) {
            h.push("el_residual".into());
        }
        h
    }

    /// CSV with a header row and 17 significant digits per value.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.header().join(","))?;
        for ((t, s), d) in self.times.iter().zip(&self.states).zip(&self.diagnostics) {
            let mut row = vec![*t];
            if let Some(g) = &s.g {
                row.extend(g.entries());
            }
            row.extend(s.v.iter());
            row.push(d.energy);
            row.extend(&d.casimirs);
            row.push(d.constraint_residual);
            row.extend(d.el_residual);
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

type Field<'a> = dyn Fn(Option<&GroupElement>, &DVector<f64>) -> Result<(Option<AlgVec>, DVector<f64>)> + 'a;

fn translate(model: &GroupModel, a: Option<AlgVec>, g: Option<&GroupElement>) -> Option<GroupElement> {
    match (a, g) {
        (Some(a), Some(g)) => Some(model.translate(&a, g)),
        _ => None,
    }
}

fn combo(terms: &[(f64, &Option<AlgVec>)]) -> Option<AlgVec> {
    let mut out: Option<AlgVec> = None;
    for (c, k) in terms {
        let k = (*k).as_ref()?;
        out = Some(match out {
            None => k * *c,
            Some(acc) => &acc + &(k * *c),
        });
    }
    out
}

fn bracket(model: &GroupModel, a: &Option<AlgVec>, b: &Option<AlgVec>) -> Option<AlgVec> {
    Some(model.algebra().br(a.as_ref()?, b.as_ref()?))
}

fn element_from_matrix(kind: GroupKind, m: &DMatrix<f64>) -> GroupElement {
    match kind {
        GroupKind::So3 => GroupElement::So3(Matrix3::from_iterator(m.iter().copied())),
        GroupKind::Heisenberg3 => GroupElement::Heisenberg3(Matrix3::from_iterator(m.iter().copied())),
        GroupKind::Abelian(n) => GroupElement::Abelian(DVector::from_fn(n, |i, _| m[(i, n)])),
    }
}

fn rk4_linear_step(model: &GroupModel, dt: f64, g: Option<&GroupElement>, v: &DVector<f64>, f: &Field) -> Result<(Option<GroupElement>, DVector<f64>)> {
    let kind = model.kind();
    let gm = g.map(|g| g.matrix());
    let rate = |m: &Option<DMatrix<f64>>, k: &Option<AlgVec>| match (m, k) {
        (Some(m), Some(k)) => Some(m * model.hat(k)),
        _ => None,
    };
    let shift = |m: &Option<DMatrix<f64>>, d: &Option<DMatrix<f64>>, c: f64| match (m, d) {
        (Some(m), Some(d)) => Some(m + d * c),
        _ => None,
    };
    let elem = |m: &Option<DMatrix<f64>>| m.as_ref().map(|m| element_from_matrix(kind, m));

    let (k1g, k1v) = f(g, v)?;
    let d1 = rate(&gm, &k1g);
    let m2 = shift(&gm, &d1, dt / 2.0);
    let (k2g, k2v) = f(elem(&m2).as_ref(), &(v + &k1v * (dt / 2.0)))?;
    let d2 = rate(&m2, &k2g);
    let m3 = shift(&gm, &d2, dt / 2.0);
    let (k3g, k3v) = f(elem(&m3).as_ref(), &(v + &k2v * (dt / 2.0)))?;
    let d3 = rate(&m3, &k3g);
    let m4 = shift(&gm, &d3, dt);
    let (k4g, k4v) = f(elem(&m4).as_ref(), &(v + &k3v * dt))?;
    let d4 = rate(&m4, &k4g);
    let g1 = match (gm, d1, d2, d3, d4) {
        (Some(m), Some(d1), Some(d2), Some(d3), Some(d4)) => {
            let m1 = m + (d1 + d2 * 2.0 + d3 * 2.0 + d4) * (dt / 6.0);
            Some(element_from_matrix(kind, &m1))
        }
        _ => None,
    };
    let v1 = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
    Ok((g1, v1))
}

fn step(model: &GroupModel, method: Method, dt: f64, g: Option<&GroupElement>, v: &DVector<f64>, f: &Field) -> Result<(Option<GroupElement>, DVector<f64>)> {
    match method {
        Method::LieEuler => {
            let (kg, kv) = f(g, v)?;
            Ok((translate(model, combo(&[(dt, &kg)]), g), v + kv * dt))
        }
        Method::Rkmk4 => {
            // the matrix flow is g' = g hat(k), so the commutator terms enter with a plus sign
            let (k1g, k1v) = f(g, v)?;
            let g2 = translate(model, combo(&[(dt / 2.0, &k1g)]), g);
            let (k2g, k2v) = f(g2.as_ref(), &(v + &k1v * (dt / 2.0)))?;
            let c12 = bracket(model, &k1g, &k2g);
            let g3 = translate(model, combo(&[(dt / 2.0, &k2g), (dt * dt / 8.0, &c12)]), g);
            let (k3g, k3v) = f(g3.as_ref(), &(v + &k2v * (dt / 2.0)))?;
            let g4 = translate(model, combo(&[(dt, &k3g)]), g);
            let (k4g, k4v) = f(g4.as_ref(), &(v + &k3v * dt))?;
            let c14 = bracket(model, &k1g, &k4g);
            let theta = combo(&[
                (dt / 6.0, &k1g),
                (dt / 3.0, &k2g),
                (dt / 3.0, &k3g),
                (dt / 6.0, &k4g),
                (dt * dt / 12.0, &c14),
            ]);
            let v1 = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
            Ok((translate(model, theta, g), v1))
        }
        Method::Rk4Linear => rk4_linear_step(model, dt, g, v, f),
    }
}

fn tidy(model: &GroupModel, g: GroupElement) -> Result<GroupElement> {
    if !g.is_finite() {
        return Err(Error::NonFinite("group element".into()));
    }
    Ok(match g {
        GroupElement::So3(m) if model.constraint_residual(&GroupElement::So3(m)) > REPROJECT_TOL => {
            GroupElement::So3(reproject(m))
        }
        other => other,
    })
}

fn run(
    model: &GroupModel,
    spec: &IntegratorSpec,
    kind: StateKind,
    g0: Option<GroupElement>,
    v0: DVector<f64>,
    f: &Field,
    diag: &dyn Fn(Option<&GroupElement>, &DVector<f64>) -> Result<Diagnostics>,
) -> Result<TrajectoryRecord> {
    spec.validate()?;
    let mut rec = TrajectoryRecord {
        group: model.kind(),
        kind,
        times: vec![0.0],
        states: vec![TrajectoryState { g: g0.clone(), v: v0.clone() }],
        diagnostics: vec![diag(g0.as_ref(), &v0)?],
        error: None,
    };
    let (mut g, mut v) = (g0, v0);
    for n in 1..=spec.steps {
        let next = step(model, spec.method, spec.dt, g.as_ref(), &v, f).and_then(|(g1, v1)| {
            let g1 = g1.map(|g| tidy(model, g)).transpose()?;
            if !v1.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("state".into()));
            }
            Ok((g1, v1))
        });
        match next {
            Ok((g1, v1)) => {
                g = g1;
                v = v1;
            }
            Err(e) => {
                rec.error = Some(e.to_string());
                break;
            }
        }
        if n % spec.stride == 0 || n == spec.steps {
            match diag(g.as_ref(), &v) {
                Ok(d) => {
                    rec.times.push(n as f64 * spec.dt);
                    rec.states.push(TrajectoryState { g: g.clone(), v: v.clone() });
                    rec.diagnostics.push(d);
                }
                Err(e) => {
                    rec.error = Some(e.to_string());
                    break;
                }
            }
        }
    }
    Ok(rec)
}

fn residual_of(model: &GroupModel, g: Option<&GroupElement>) -> f64 {
    g.map_or(0.0, |g| model.constraint_residual(g))
}

/// Trivialized Hamilton equations on `G x g*`.
pub fn integrate_hamilton(h: &HamiltonianField, s0: &PhaseState, spec: &IntegratorSpec) -> Result<TrajectoryRecord> {
    let model = h.model().clone();
    model.check(&s0.g)?;
    check_dim(h.dim(), s0.mu.dim())?;
    let f = |g: Option<&GroupElement>, v: &DVector<f64>| {
        let s = PhaseState {
            g: g.expect("group state").clone(),
            mu: DualVec(v.clone()),
        };
        let (w, mudot) = hamilton_vector_field(h, &s)?;
        Ok((Some(w), mudot.0))
    };
    let diag = |g: Option<&GroupElement>, v: &DVector<f64>| {
        let mu = DualVec(v.clone());
        Ok(Diagnostics {
            energy: h.value(g.expect("group state"), &mu)?,
            casimirs: model.casimirs(&mu),
            constraint_residual: residual_of(&model, g),
            el_residual: None,
        })
    };
    run(&model, spec, StateKind::Momentum, Some(s0.g.clone()), s0.mu.0.clone(), &f, &diag)
}

/// Lie-Poisson equations on `g*`.
pub fn integrate_lie_poisson(h: &HamiltonianField, mu0: &DualVec, spec: &IntegratorSpec) -> Result<TrajectoryRecord> {
    h.require_reduced("integrate_lie_poisson")?;
    check_dim(h.dim(), mu0.dim())?;
    let model = h.model().clone();
    let f = |_: Option<&GroupElement>, v: &DVector<f64>| Ok((None, lie_poisson_vf(h, &DualVec(v.clone()))?.0));
    let diag = |_: Option<&GroupElement>, v: &DVector<f64>| {
        let mu = DualVec(v.clone());
        Ok(Diagnostics {
            energy: h.value_at(&mu)?,
            casimirs: model.casimirs(&mu),
            constraint_residual: 0.0,
            el_residual: None,
        })
    };
    run(&model, spec, StateKind::Momentum, None, mu0.0.clone(), &f, &diag)
}

fn lagrangian_energy(l: &LagrangianField, g: &GroupElement, xi: &AlgVec) -> Result<(f64, DualVec)> {
    let p = l.fiber_gradient(g, xi)?;
    Ok((p.pair(xi) - l.value(g, xi)?, p))
}

/// Euler-Poincare equations on `g`; Casimirs are those of `dl/dxi`.
pub fn integrate_euler_poincare(l: &LagrangianField, xi0: &AlgVec, spec: &IntegratorSpec) -> Result<TrajectoryRecord> {
    l.require_reduced("integrate_euler_poincare")?;
    check_dim(l.dim(), xi0.dim())?;
    let model = l.model().clone();
    let e = model.identity();
    euler_poincare_vf(l, xi0)?;
    let f = |_: Option<&GroupElement>, v: &DVector<f64>| Ok((None, euler_poincare_vf(l, &AlgVec(v.clone()))?.0));
    let diag = |_: Option<&GroupElement>, v: &DVector<f64>| {
        let (energy, p) = lagrangian_energy(l, &e, &AlgVec(v.clone()))?;
        Ok(Diagnostics {
            energy,
            casimirs: model.casimirs(&p),
            constraint_residual: 0.0,
            el_residual: None,
        })
    };
    run(&model, spec, StateKind::Velocity, None, xi0.0.clone(), &f, &diag)
}

/// Trivialized Euler-Lagrange equations on `G x g`.
pub fn integrate_trivialized_el(l: &LagrangianField, g0: &GroupElement, xi0: &AlgVec, spec: &IntegratorSpec) -> Result<TrajectoryRecord> {
    let model = l.model().clone();
    model.check(g0)?;
    check_dim(l.dim(), xi0.dim())?;
    let f = |g: Option<&GroupElement>, v: &DVector<f64>| {
        let xi = AlgVec(v.clone());
        let field = el_vector_field(l, g.expect("group state"), &xi)?;
        Ok((Some(field.gdot), field.xidot.0))
    };
    let diag = |g: Option<&GroupElement>, v: &DVector<f64>| {
        let g = g.expect("group state");
        let xi = AlgVec(v.clone());
        let (energy, _) = lagrangian_energy(l, g, &xi)?;
        let field = el_vector_field(l, g, &xi)?;
        Ok(Diagnostics {
            energy,
            casimirs: Vec::new(),
            constraint_residual: model.constraint_residual(g),
            el_residual: Some(el_residual(l, g, &xi, &field.xidot)?.max_abs()),
        })
    };
    run(&model, spec, StateKind::Velocity, Some(g0.clone()), xi0.0.clone(), &f, &diag)
}

/// Group entries followed by the vector components of every recorded state.
pub fn flattened_states(rec: &TrajectoryRecord) -> Vec<DVector<f64>> {
    rec.states
        .iter()
        .map(|s| {
            let mut v = s.g.as_ref().map_or_else(Vec::new, GroupElement::entries);
            v.extend(s.v.iter());
            DVector::from_vec(v)
        })
        .collect()
}

/// Largest entrywise difference between two runs sampled on the same grid.
pub fn sup_error(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

/// Measured order of `method` on Hamilton's equations over `[0, t_final]`:
/// `log2(e(dt) / e(dt / 2))` with `e` the sup-error against an rkmk4 run at
/// step `dt / 32`, all sampled on the grid of step `dt`.
pub fn convergence_order(h: &HamiltonianField, s0: &PhaseState, method: Method, dt: f64, t_final: f64) -> Result<f64> {
    let steps = (t_final / dt).round() as usize;
    let run = |m: Method, refine: usize| -> Result<Vec<DVector<f64>>> {
        let mut spec = IntegratorSpec::new(m, dt / refine as f64, steps * refine);
        spec.stride = refine;
        spec.validate()?;
        let rec = integrate_hamilton(h, s0, &spec)?;
        match rec.error {
            Some(e) => Err(Error::NonFinite(e)),
            None => Ok(flattened_states(&rec)),
        }
    };
    let reference = run(Method::Rkmk4, 32)?;
    let coarse = run(method, 1)?;
    let fine = run(method, 2)?;
    Ok((sup_error(&coarse, &reference) / sup_error(&fine, &reference)).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;
    use std::sync::Arc;

    const I: [f64; 3] = [1.0, 2.0, 3.0];

    fn rigid_h(model: &Arc<GroupModel>) -> HamiltonianField {
        HamiltonianField::reduced(model.clone(), |mu: &DualVec| 0.5 * (0..3).map(|k| mu[k] * mu[k] / I[k]).sum::<f64>())
            .with_fiber_gradient(|_, mu| AlgVec::new((0..3).map(|k| mu[k] / I[k]).collect()))
    }

    fn rigid_l(model: &Arc<GroupModel>) -> LagrangianField {
        LagrangianField::reduced(model.clone(), |xi: &AlgVec| 0.5 * (0..3).map(|k| I[k] * xi[k] * xi[k]).sum::<f64>())
            .with_fiber_gradient(|_, xi| DualVec::new((0..3).map(|k| I[k] * xi[k]).collect()))
            .with_fiber_hessian(|_, _| DMatrix::from_diagonal(&DVector::from_row_slice(&I)))
    }

    fn oscillator(n: usize) -> HamiltonianField {
        let model = Arc::new(GroupModel::abelian(n));
        let q = |g: &GroupElement| match g {
            GroupElement::Abelian(q) => q.clone(),
            _ => unreachable!(),
        };
        HamiltonianField::new(model, move |g, mu: &DualVec| 0.5 * (mu.0.norm_squared() + q(g).norm_squared()))
            .with_fiber_gradient(|_, mu| AlgVec(mu.0.clone()))
            .with_group_gradient(move |g, _| DualVec(q(g)))
    }

    #[test]
    fn spec_validation() {
        assert!(IntegratorSpec::new(Method::Rkmk4, 1e-3, 0).validate().is_err());
        assert!(IntegratorSpec::new(Method::Rkmk4, -1.0, 10).validate().is_err());
        assert!(IntegratorSpec::new(Method::Rkmk4, f64::NAN, 10).validate().is_err());
        assert!(IntegratorSpec::new(Method::LieEuler, 1e-3, 1).validate().is_ok());
        assert_eq!(Method::parse("rk4_linear").unwrap(), Method::Rk4Linear);
        assert!(Method::parse("rk5").is_err());
    }

    #[test]
    fn constant_hamiltonian_freezes_state() {
        let model = Arc::new(GroupModel::so3());
        let h = HamiltonianField::reduced(model.clone(), |_: &DualVec| 1.0);
        let s0 = PhaseState { g: Sampler::new(1).element(&model), mu: DualVec::from([1.0, 2.0, 3.0]) };
        for method in [Method::LieEuler, Method::Rkmk4, Method::Rk4Linear] {
            let rec = integrate_hamilton(&h, &s0, &IntegratorSpec::new(method, 0.1, 20)).unwrap();
            assert_eq!(rec.len(), 21);
            let last = rec.states.last().unwrap();
            assert!((&last.v - &s0.mu.0).amax() < 1e-9);
            assert!((last.g.as_ref().unwrap().matrix() - s0.g.matrix()).amax() < 1e-9);
            assert_eq!(rec.summary().energy_drift, 0.0);
        }
    }

    #[test]
    fn oscillator_matches_closed_form() {
        let h = oscillator(2);
        let q0 = DVector::from_vec(vec![1.0, 0.0]);
        let p0 = DVector::from_vec(vec![0.0, 0.5]);
        let s0 = PhaseState { g: GroupElement::Abelian(q0.clone()), mu: DualVec(p0.clone()) };
        let rec = integrate_hamilton(&h, &s0, &IntegratorSpec::new(Method::Rkmk4, 1e-2, 1000)).unwrap();
        assert!(rec.summary().energy_drift <= 1e-8);
        let t: f64 = 10.0;
        let q = &q0 * t.cos() + &p0 * t.sin();
        match &rec.states.last().unwrap().g {
            Some(GroupElement::Abelian(qn)) => assert!((qn - q).amax() < 1e-6),
            _ => panic!("expected abelian state"),
        }
    }

    #[test]
    fn hamilton_and_lie_poisson_share_stages() {
        let model = Arc::new(GroupModel::so3());
        let h = rigid_h(&model);
        let mu0 = DualVec::from([1.0, 1.0, 1.0]);
        let spec = IntegratorSpec::new(Method::Rkmk4, 1e-2, 200);
        let a = integrate_hamilton(&h, &PhaseState { g: model.identity(), mu: mu0.clone() }, &spec).unwrap();
        let b = integrate_lie_poisson(&h, &mu0, &spec).unwrap();
        assert_eq!(a.vectors(), b.vectors());
    }

    #[test]
    fn principal_axis_is_fixed() {
        let model = Arc::new(GroupModel::so3());
        let mu0 = DualVec::from([1.0, 0.0, 0.0]);
        let rec = integrate_lie_poisson(&rigid_h(&model), &mu0, &IntegratorSpec::new(Method::Rkmk4, 1e-3, 10_000)).unwrap();
        assert!(rec.vectors().iter().all(|v| (v - &mu0.0).amax() < 1e-12));
        let ep = integrate_euler_poincare(&rigid_l(&model), &AlgVec::from([0.0, 0.7, 0.0]), &IntegratorSpec::new(Method::Rkmk4, 1e-2, 100)).unwrap();
        assert!(ep.vectors().iter().all(|v| (v - DVector::from_vec(vec![0.0, 0.7, 0.0])).amax() < 1e-12));
    }

    #[test]
    fn abelian_lie_poisson_is_constant() {
        let model = Arc::new(GroupModel::abelian(3));
        let h = HamiltonianField::reduced(model, |mu: &DualVec| mu.0.norm_squared());
        let mu0 = DualVec::from([0.3, -1.0, 2.0]);
        let rec = integrate_lie_poisson(&h, &mu0, &IntegratorSpec::new(Method::Rkmk4, 0.1, 50)).unwrap();
        assert!(rec.vectors().iter().all(|v| v == &mu0.0));
    }

    #[test]
    fn rigid_body_conservation() {
        let model = Arc::new(GroupModel::so3());
        let rec = integrate_lie_poisson(&rigid_h(&model), &DualVec::from([1.0, 1.0, 1.0]), &IntegratorSpec::new(Method::Rkmk4, 1e-3, 10_000)).unwrap();
        let s = rec.summary();
        assert!(s.casimir_drift[0] <= 1e-6);
        assert!(s.relative_energy_drift <= 1e-6);
    }

    #[test]
    fn group_coupled_orders() {
        let model = Arc::new(GroupModel::so3());
        let h = HamiltonianField::new(model.clone(), move |g, mu: &DualVec| {
            let pot = match g {
                GroupElement::So3(m) => 2.0 * m[(2, 2)],
                _ => unreachable!(),
            };
            0.5 * (0..3).map(|k| mu[k] * mu[k] / I[k]).sum::<f64>() + pot
        })
        .with_fiber_gradient(|_, mu| AlgVec::new((0..3).map(|k| mu[k] / I[k]).collect()));
        let s0 = PhaseState { g: model.exp(&AlgVec::from([0.3, -0.2, 0.1])).unwrap(), mu: DualVec::from([1.0, 1.0, 1.0]) };
        for (method, order) in [(Method::Rkmk4, 4.0), (Method::Rk4Linear, 4.0), (Method::LieEuler, 1.0)] {
            let p = convergence_order(&h, &s0, method, 0.1, 2.0).unwrap();
            assert!((p - order).abs() < 0.3, "{method:?}: measured order {p}");
        }
    }

    #[test]
    fn so3_constraint_holds() {
        let model = Arc::new(GroupModel::so3());
        let s0 = PhaseState { g: model.identity(), mu: DualVec::from([1.0, 1.0, 1.0]) };
        for method in [Method::Rkmk4, Method::Rk4Linear, Method::LieEuler] {
            let rec = integrate_hamilton(&rigid_h(&model), &s0, &IntegratorSpec::new(method, 1e-2, 1000)).unwrap();
            assert!(rec.summary().max_constraint_residual <= 1e-9);
        }
    }

    #[test]
    fn degenerate_el_stops_with_error() {
        let model = Arc::new(GroupModel::so3());
        let l = LagrangianField::reduced(model.clone(), |xi: &AlgVec| xi[0] + 2.0 * xi[1] + 3.0 * xi[2]);
        let rec = integrate_trivialized_el(&l, &model.identity(), &AlgVec::from([1.0, 0.0, 0.0]), &IntegratorSpec::new(Method::Rkmk4, 0.1, 5));
        match rec {
            Ok(r) => assert!(r.error.unwrap().contains("degenerate")),
            Err(e) => assert!(matches!(e, Error::DegenerateLagrangian { .. })),
        }
        assert!(matches!(
            integrate_euler_poincare(&l, &AlgVec::zeros(3), &IntegratorSpec::new(Method::Rkmk4, 0.1, 5)),
            Err(Error::DegenerateLagrangian { .. })
        ));
    }

    #[test]
    fn reduced_el_matches_euler_poincare() {
        let model = Arc::new(GroupModel::so3());
        let l = rigid_l(&model);
        let xi0 = AlgVec::from([0.5, 0.2, -0.4]);
        let spec = IntegratorSpec::new(Method::Rkmk4, 1e-2, 100);
        let a = integrate_trivialized_el(&l, &model.identity(), &xi0, &spec).unwrap();
        let b = integrate_euler_poincare(&l, &xi0, &spec).unwrap();
        assert_eq!(a.vectors(), b.vectors());
        assert!(a.diagnostics.iter().all(|d| d.el_residual.unwrap() < 1e-12));
    }

    #[test]
    fn stride_and_csv() {
        let model = Arc::new(GroupModel::so3());
        let s0 = PhaseState { g: model.identity(), mu: DualVec::from([1.0, 1.0, 1.0]) };
        let mut spec = IntegratorSpec::new(Method::Rkmk4, 1e-2, 10);
        spec.stride = 4;
        let rec = integrate_hamilton(&rigid_h(&model), &s0, &spec).unwrap();
        assert_eq!(rec.times.len(), 4);
        assert!((rec.times[3] - 0.1).abs() < 1e-15);
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,g00,g01,g02,g10,g11,g12,g20,g21,g22,mu1,mu2,mu3,energy,casimir1,constraint_residual"
        );
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(row.len(), 16);
        assert_eq!(row[10], 1.0);
        assert_eq!(text.lines().count(), 5);
    }
}
