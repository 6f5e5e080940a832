//! Morse families, generation of Lagrangian submanifolds and the Legendre
//! transformation.
//!
//! A [`MorseFamily`] is a function `E(base, r)` with fibre variable `r`.
//! [`generate`] finds fibre-stationary points by multi-start Newton and emits
//! the base differential there. The four shipped families are
//!
//! * [`make_el2h`]: `E(g, mu; xi) = L(g, xi) - <mu, xi>` over `G x g*`,
//! * [`make_h2l`]: `E(g, xi; mu) = <mu, xi> - H(g, mu)` over `G x g`,
//! * [`make_reduced_l2h`] and [`make_reduced_h2l`], their reduced versions.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AlgVec, DualVec, Fiber, StructureAlgebra};
use crate::dynamics::{HamiltonianField, LagrangianField, ScalarField};
use crate::error::{check_dim, Error, Result};
use crate::fd::FdConfig;
use crate::group::{GroupElement, GroupModel};
use crate::linalg;
use crate::reduction::{embed_kappa_hat, embed_omega_hat, ReducedPoint};
use crate::triplet::{cot_cot_from_covector, cot_tan_from_covector, omega_sharp, sigma_inv, TripletPoint};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Residual accepted once Newton stops making progress.
pub const STAGNATION_TOL: f64 = 1e-8;
pub const DEDUP_TOL: f64 = 1e-8;
pub const GRID: [f64; 3] = [-2.0, 0.0, 2.0];

/// The space a Morse family is fibred over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    /// `G x g*`
    GroupDual,
    /// `G x g`
    GroupAlgebra,
    /// `g*`
    Dual,
    /// `g`
    Algebra,
}

impl BaseKind {
    pub fn has_group(self) -> bool {
        matches!(self, BaseKind::GroupDual | BaseKind::GroupAlgebra)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasePoint {
    pub g: Option<GroupElement>,
    pub x: DVector<f64>,
}

impl BasePoint {
    pub fn linear(x: impl Into<DVector<f64>>) -> Self {
        Self { g: None, x: x.into() }
    }

    pub fn with_group(g: GroupElement, x: impl Into<DVector<f64>>) -> Self {
        Self { g: Some(g), x: x.into() }
    }
}

/// Differential of `E` along the base, right-trivialized in the group slot.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseCovector {
    pub g: Option<DualVec>,
    pub x: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedPoint {
    pub base: BasePoint,
    pub covector: BaseCovector,
    pub fiber_witness: DVector<f64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Generation {
    pub points: Vec<GeneratedPoint>,
    pub starts: usize,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub rank: usize,
    pub required: usize,
    pub pass: bool,
    pub singular_values: Vec<f64>,
}

type Total = Arc<dyn Fn(&GroupElement, &DVector<f64>, &DVector<f64>) -> Result<f64> + Send + Sync>;
type FiberGrad = Arc<dyn Fn(&GroupElement, &DVector<f64>, &DVector<f64>) -> Result<DVector<f64>> + Send + Sync>;
type FiberHess = Arc<dyn Fn(&GroupElement, &DVector<f64>, &DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync>;
type BaseGrad = Arc<dyn Fn(&GroupElement, &DVector<f64>, &DVector<f64>) -> Result<BaseCovector> + Send + Sync>;

/// A generating family `E(base, r)`; the fibre has the algebra dimension.
#[derive(Clone)]
pub struct MorseFamily {
    model: Arc<GroupModel>,
    kind: BaseKind,
    total: Total,
    fiber_gradient: Option<FiberGrad>,
    fiber_hessian: Option<FiberHess>,
    base_gradient: Option<BaseGrad>,
    hessian_noise: f64,
    fd: FdConfig,
}

impl std::fmt::Debug for MorseFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MorseFamily")
            .field("group", &self.model.kind())
            .field("kind", &self.kind)
            .finish()
    }
}

impl MorseFamily {
    /// `total(g, x, r)`; for reduced base kinds `g` is always the identity.
    pub fn new(
        model: Arc<GroupModel>,
        kind: BaseKind,
        total: impl Fn(&GroupElement, &DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            model,
            kind,
            total: Arc::new(move |g, x, r| Ok(total(g, x, r))),
            fiber_gradient: None,
            fiber_hessian: None,
            base_gradient: None,
            hessian_noise: 1e-6,
            fd: FdConfig::default(),
        }
    }

    pub fn with_fiber_gradient(
        mut self,
        grad: impl Fn(&GroupElement, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.fiber_gradient = Some(Arc::new(move |g, x, r| Ok(grad(g, x, r))));
        self.hessian_noise = self.hessian_noise.min(1e-8);
        self
    }

    pub fn with_fiber_hessian(
        mut self,
        hess: impl Fn(&GroupElement, &DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.fiber_hessian = Some(Arc::new(move |g, x, r| Ok(hess(g, x, r))));
        self.hessian_noise = 0.0;
        self
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn model(&self) -> &Arc<GroupModel> {
        &self.model
    }

    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    pub fn fiber_dim(&self) -> usize {
        self.model.dim()
    }

    pub fn base_dim(&self) -> usize {
        if self.kind.has_group() {
            2 * self.model.dim()
        } else {
            self.model.dim()
        }
    }

    fn group_of(&self, base: &BasePoint) -> Result<GroupElement> {
        match (&base.g, self.kind.has_group()) {
            (Some(g), true) => {
                self.model.check(g)?;
                Ok(g.clone())
            }
            (None, false) => Ok(self.model.identity()),
            (Some(_), false) => Err(Error::Domain(format!("{:?} base takes no group element", self.kind))),
            (None, true) => Err(Error::Domain(format!("{:?} base needs a group element", self.kind))),
        }
    }

    fn check(&self, base: &BasePoint, r: &DVector<f64>) -> Result<GroupElement> {
        check_dim(self.model.dim(), base.x.len())?;
        check_dim(self.fiber_dim(), r.len())?;
        self.group_of(base)
    }

    pub fn value(&self, base: &BasePoint, r: &DVector<f64>) -> Result<f64> {
        let g = self.check(base, r)?;
        crate::error::finite((self.total)(&g, &base.x, r)?, "Morse family value")
    }

    fn raw(&self, g: &GroupElement, x: &DVector<f64>, r: &DVector<f64>) -> f64 {
        (self.total)(g, x, r).unwrap_or(f64::NAN)
    }

    fn grad_at(&self, g: &GroupElement, x: &DVector<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
        let out = match &self.fiber_gradient {
            Some(grad) => grad(g, x, r)?,
            None => self.fd.gradient(r, |y| self.raw(g, x, y)),
        };
        finite_vec(out, "Morse fiber gradient")
    }

    pub fn fiber_gradient(&self, base: &BasePoint, r: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.check(base, r)?;
        self.grad_at(&g, &base.x, r)
    }

    fn inner_step(&self) -> f64 {
        if self.fiber_gradient.is_some() {
            self.fd.step
        } else {
            self.fd.outer_step()
        }
    }

    fn hess_at(&self, g: &GroupElement, x: &DVector<f64>, r: &DVector<f64>) -> Result<DMatrix<f64>> {
        let h = match &self.fiber_hessian {
            Some(hess) => hess(g, x, r)?,
            None => {
                let j = self.fd.jacobian(self.inner_step(), r, |y| {
                    self.grad_at(g, x, y).unwrap_or_else(|_| DVector::from_element(y.len(), f64::NAN))
                });
                (&j + j.transpose()) * 0.5
            }
        };
        if h.iter().all(|v| v.is_finite()) {
            Ok(h)
        } else {
            Err(Error::NonFinite("Morse fiber Hessian".into()))
        }
    }

    pub fn fiber_hessian(&self, base: &BasePoint, r: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = self.check(base, r)?;
        self.hess_at(&g, &base.x, r)
    }

    /// Base differential of `E` at fixed fibre point `r`.
    pub fn base_gradient(&self, base: &BasePoint, r: &DVector<f64>) -> Result<BaseCovector> {
        let g = self.check(base, r)?;
        if let Some(grad) = &self.base_gradient {
            return grad(&g, &base.x, r);
        }
        let group = if self.kind.has_group() {
            Some(self.model.right_gradient(|h| self.raw(h, &base.x, r), &g, &self.fd)?)
        } else {
            None
        };
        let x = finite_vec(self.fd.gradient(&base.x, |y| self.raw(&g, y, r)), "Morse base gradient")?;
        Ok(BaseCovector { g: group, x })
    }

    /// The `fiber_dim x (base_dim + fiber_dim)` block of mixed and fibre
    /// second derivatives.
    pub fn second_derivative_block(&self, base: &BasePoint, r: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = self.check(base, r)?;
        let n = self.model.dim();
        let h = self.inner_step();
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(self.base_dim() + n);
        let nan = || DVector::from_element(n, f64::NAN);
        if self.kind.has_group() {
            for i in 0..n {
                let e = AlgVec::basis(n, i);
                cols.push(self.fd.derivative_vec(h, |t| {
                    let gt = self.model.translate(&(&e * t), &g);
                    self.grad_at(&gt, &base.x, r).unwrap_or_else(|_| nan())
                }));
            }
        }
        let jx = self.fd.jacobian(h, &base.x, |y| self.grad_at(&g, y, r).unwrap_or_else(|_| nan()));
        cols.extend(jx.column_iter().map(|c| c.into_owned()));
        let hess = self.hess_at(&g, &base.x, r)?;
        cols.extend(hess.column_iter().map(|c| c.into_owned()));
        let block = DMatrix::from_columns(&cols);
        if block.iter().all(|v| v.is_finite()) {
            Ok(block)
        } else {
            Err(Error::NonFinite("Morse second differences".into()))
        }
    }
}

fn finite_vec(v: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

fn unwrap_nan<T>(r: Result<T>, nan: impl FnOnce() -> T) -> T {
    r.unwrap_or_else(|_| nan())
}

/// `E(g, mu; xi) = L(g, xi) - <mu, xi>` over `G x g*`.
pub fn make_el2h(l: &LagrangianField) -> MorseFamily {
    let (a, b, c, d) = (l.clone(), l.clone(), l.clone(), l.clone());
    let n = l.dim();
    let mut e = MorseFamily::new(l.model().clone(), BaseKind::GroupDual, move |g, mu, xi| {
        unwrap_nan(a.value(g, &AlgVec(xi.clone())), || f64::NAN) - mu.dot(xi)
    });
    e.fiber_gradient = Some(Arc::new(move |g, mu, xi| Ok(&b.fiber_gradient(g, &AlgVec(xi.clone()))?.0 - mu)));
    e.fiber_hessian = Some(Arc::new(move |g, _, xi| c.fiber_hessian(g, &AlgVec(xi.clone()))));
    e.base_gradient = Some(Arc::new(move |g, _, xi| {
        Ok(BaseCovector {
            g: Some(d.group_gradient(g, &AlgVec(xi.clone()))?),
            x: -xi.clone(),
        })
    }));
    e.hessian_noise = l.hessian_noise();
    e.fd = *l.fd();
    debug_assert_eq!(e.fiber_dim(), n);
    e
}

/// `E(g, xi; mu) = <mu, xi> - H(g, mu)` over `G x g`.
pub fn make_h2l(h: &HamiltonianField) -> MorseFamily {
    let (a, b, c, d) = (h.clone(), h.clone(), h.clone(), h.clone());
    let mut e = MorseFamily::new(h.model().clone(), BaseKind::GroupAlgebra, move |g, xi, mu| {
        mu.dot(xi) - unwrap_nan(a.value(g, &DualVec(mu.clone())), || f64::NAN)
    });
    e.fiber_gradient = Some(Arc::new(move |g, xi, mu| Ok(xi - &b.fiber_gradient(g, &DualVec(mu.clone()))?.0)));
    e.fiber_hessian = Some(Arc::new(move |g, _, mu| Ok(-c.fiber_hessian(g, &DualVec(mu.clone()))?)));
    e.base_gradient = Some(Arc::new(move |g, _, mu| {
        Ok(BaseCovector {
            g: Some(-d.group_gradient(g, &DualVec(mu.clone()))?),
            x: mu.clone(),
        })
    }));
    e.hessian_noise = h.hessian_noise();
    e.fd = *h.fd();
    e
}

/// `E(mu; xi) = l(xi) - <mu, xi>` over `g*`.
pub fn make_reduced_l2h(l: &LagrangianField) -> Result<MorseFamily> {
    l.require_reduced("make_reduced_l2h")?;
    let mut e = make_el2h(l);
    e.kind = BaseKind::Dual;
    e.base_gradient = Some(Arc::new(|_, _, xi| Ok(BaseCovector { g: None, x: -xi.clone() })));
    Ok(e)
}

/// `E(xi; mu) = <mu, xi> - h(mu)` over `g`.
pub fn make_reduced_h2l(h: &HamiltonianField) -> Result<MorseFamily> {
    h.require_reduced("make_reduced_h2l")?;
    let mut e = make_h2l(h);
    e.kind = BaseKind::Algebra;
    e.base_gradient = Some(Arc::new(|_, _, mu| Ok(BaseCovector { g: None, x: mu.clone() })));
    Ok(e)
}

/// Rank of the mixed/fibre second-derivative block at `(base, r)`.
pub fn rank_check(e: &MorseFamily, base: &BasePoint, r: &DVector<f64>) -> Result<RankReport> {
    let block = e.second_derivative_block(base, r)?;
    let (rank, singular_values) = linalg::rank(&block);
    let required = e.fiber_dim();
    Ok(RankReport {
        rank,
        required,
        pass: rank == required,
        singular_values,
    })
}

fn grid_starts(n: usize) -> Vec<DVector<f64>> {
    let total = GRID.len().pow(n as u32);
    (0..total)
        .map(|mut k| {
            DVector::from_fn(n, |_, _| {
                let v = GRID[k % GRID.len()];
                k /= GRID.len();
                v
            })
        })
        .collect()
}

struct Stationary {
    r: DVector<f64>,
    residual: f64,
    iterations: usize,
}

fn newton(e: &MorseFamily, g: &GroupElement, x: &DVector<f64>, start: &DVector<f64>) -> Option<Stationary> {
    let mut r = start.clone();
    let mut last = f64::INFINITY;
    for it in 0..=NEWTON_MAX_ITER {
        let grad = e.grad_at(g, x, &r).ok()?;
        let res = grad.amax();
        if res <= NEWTON_TOL {
            return Some(Stationary { r, residual: res, iterations: it });
        }
        let stalled = res > 0.5 * last;
        if it == NEWTON_MAX_ITER || (stalled && res <= STAGNATION_TOL) {
            return (res <= STAGNATION_TOL).then_some(Stationary { r, residual: res, iterations: it });
        }
        last = res;
        let hess = e.hess_at(g, x, &r).ok()?;
        let (step, _) = linalg::least_squares(&hess, &-grad, e.hessian_noise);
        if step.amax() <= 1e-13 * (1.0 + r.amax()) {
            return (res <= STAGNATION_TOL).then_some(Stationary { r, residual: res, iterations: it });
        }
        r += step;
        if !r.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    None
}

fn lex(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Fibre-stationary points of `E(base, .)` from the `{-2, 0, 2}^n` grid and
/// the given seeds, deduplicated and sorted by witness.
pub fn generate(e: &MorseFamily, base: &BasePoint, seeds: &[DVector<f64>]) -> Result<Generation> {
    let n = e.fiber_dim();
    check_dim(e.model.dim(), base.x.len())?;
    for s in seeds {
        check_dim(n, s.len())?;
    }
    let g = e.group_of(base)?;
    let mut starts = grid_starts(n);
    starts.extend(seeds.iter().cloned());
    let mut found: Vec<Stationary> = starts.par_iter().filter_map(|s| newton(e, &g, &base.x, s)).collect();
    found.sort_by(|a, b| lex(&a.r, &b.r));
    let mut kept: Vec<Stationary> = Vec::new();
    for s in found {
        if kept.iter().all(|k| (&k.r - &s.r).amax() > DEDUP_TOL) {
            kept.push(s);
        }
    }
    let mut points = Vec::with_capacity(kept.len());
    for s in kept {
        points.push(GeneratedPoint {
            base: base.clone(),
            covector: e.base_gradient(base, &s.r)?,
            value: e.value(base, &s.r)?,
            fiber_witness: s.r,
            residual: s.residual,
            iterations: s.iterations,
        });
    }
    let diagnostic = points
        .is_empty()
        .then(|| format!("Newton did not converge from any of {} starts", starts.len()));
    Ok(Generation {
        points,
        starts: starts.len(),
        diagnostic,
    })
}

/// Maps a generated point of a reduced family into `z_d`: through the
/// Hamiltonian embedding for a `g*` base, the Lagrangian one for a `g` base.
pub fn to_reduced(alg: &StructureAlgebra, kind: BaseKind, p: &GeneratedPoint) -> Result<ReducedPoint> {
    match kind {
        BaseKind::Dual => Ok(embed_omega_hat(alg, &DualVec(p.base.x.clone()), &AlgVec(-&p.covector.x))),
        BaseKind::Algebra => Ok(embed_kappa_hat(alg, &AlgVec(p.base.x.clone()), &DualVec(p.covector.x.clone()))),
        _ => Err(Error::Domain("to_reduced needs a reduced Morse family".into())),
    }
}

/// Maps a generated point of an unreduced family into the Tulczyjew space:
/// a `G x g*` base lands on `S`, a `G x g` base on `S'`.
pub fn to_triplet(alg: &StructureAlgebra, kind: BaseKind, p: &GeneratedPoint) -> Result<TripletPoint> {
    let (g, a) = match (&p.base.g, &p.covector.g) {
        (Some(g), Some(a)) => (g, a),
        _ => return Err(Error::Domain("to_triplet needs an unreduced Morse family".into())),
    };
    match kind {
        BaseKind::GroupDual => {
            let r = cot_cot_from_covector(alg, g, &DualVec(p.base.x.clone()), a, &AlgVec(p.covector.x.clone()));
            Ok(omega_sharp(alg, &r))
        }
        BaseKind::GroupAlgebra => {
            let q = cot_tan_from_covector(alg, g, &AlgVec(p.base.x.clone()), a, &DualVec(p.covector.x.clone()));
            Ok(sigma_inv(alg, &q))
        }
        _ => Err(Error::Domain("to_triplet needs an unreduced Morse family".into())),
    }
}

/// Solves `df(x) = y` by Newton from zero and returns `(x, <y, x> - f(x))`.
pub fn conjugate<V: Fiber>(f: &ScalarField<V>, y: &V::Dual) -> Result<(V, f64)> {
    f.require_reduced("conjugate")?;
    check_dim(f.dim(), y.vector().len())?;
    let e = f.model().identity();
    let mut x = DVector::zeros(f.dim());
    for _ in 0..NEWTON_MAX_ITER {
        let grad = f.fiber_gradient(&e, &V::from_vector(x.clone()))?;
        let r = grad.vector() - y.vector();
        let res = r.amax();
        if res <= NEWTON_TOL {
            break;
        }
        let hess = f.fiber_hessian(&e, &V::from_vector(x.clone()))?;
        let (step, _) = linalg::solve(&hess, &-r, f.hessian_noise())?;
        x += &step;
        if step.amax() <= 1e-13 * (1.0 + x.amax()) {
            break;
        }
    }
    let xv = V::from_vector(x.clone());
    let res = (f.fiber_gradient(&e, &xv)?.vector() - y.vector()).amax();
    if res > STAGNATION_TOL {
        return Err(Error::Domain(format!("Legendre Newton solve stalled at residual {res:e}")));
    }
    let value = y.vector().dot(&x) - f.value(&e, &xv)?;
    Ok((xv, value))
}

fn conjugate_field<V>(f: &ScalarField<V>) -> Result<ScalarField<V::Dual>>
where
    V: Fiber + Send + Sync + 'static,
    V::Dual: Send + Sync + 'static,
{
    f.require_reduced("legendre transform")?;
    conjugate(f, &V::Dual::from_vector(DVector::zeros(f.dim())))?;
    let (a, b, c) = (f.clone(), f.clone(), f.clone());
    let out = ScalarField::<V::Dual>::reduced(f.model().clone(), move |y| {
        conjugate(&a, y).map(|(_, v)| v).unwrap_or(f64::NAN)
    })
    .with_fiber_gradient(move |_, y| {
        conjugate(&b, y)
            .map(|(x, _)| x)
            .unwrap_or_else(|_| V::from_vector(DVector::from_element(y.vector().len(), f64::NAN)))
    })
    .with_fiber_hessian(move |e, y| {
        let n = y.vector().len();
        conjugate(&c, y)
            .and_then(|(x, _)| c.fiber_hessian(e, &x))
            .ok()
            .and_then(|h| h.try_inverse())
            .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN))
    })
    .with_fd(*f.fd());
    Ok(out)
}

/// `h(mu) = <mu, xi*> - l(xi*)` with `dl(xi*) = mu`. Fails with
/// `DegenerateLagrangian` when the fibre Hessian of `l` is singular.
pub fn legendre_transform(l: &LagrangianField) -> Result<HamiltonianField> {
    conjugate_field(l)
}

/// `l(xi) = <mu*, xi> - h(mu*)` with `dh(mu*) = xi`.
pub fn legendre_inverse(h: &HamiltonianField) -> Result<LagrangianField> {
    conjugate_field(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{hamilton_dirac, in_s, in_sprime, lagrange_dirac};
    use crate::sample::Sampler;

    const I: [f64; 3] = [1.0, 2.0, 3.0];

    fn rigid_l(model: &Arc<GroupModel>) -> LagrangianField {
        LagrangianField::reduced(model.clone(), |xi: &AlgVec| 0.5 * (0..3).map(|k| I[k] * xi[k] * xi[k]).sum::<f64>())
            .with_fiber_gradient(|_, xi| DualVec::new((0..3).map(|k| I[k] * xi[k]).collect()))
            .with_fiber_hessian(|_, _| DMatrix::from_diagonal(&DVector::from_row_slice(&I)))
    }

    fn quartic_l(model: &Arc<GroupModel>, eps: f64) -> LagrangianField {
        let m = |xi: &AlgVec| DVector::from_fn(3, |k, _| I[k] * xi[k]);
        LagrangianField::reduced(model.clone(), move |xi: &AlgVec| {
            0.5 * xi.0.dot(&m(xi)) + eps * xi.0.norm_squared().powi(2)
        })
        .with_fiber_gradient(move |_, xi| DualVec(m(xi) + &xi.0 * (4.0 * eps * xi.0.norm_squared())))
        .with_fiber_hessian(move |_, xi| {
            DMatrix::from_diagonal(&DVector::from_row_slice(&I))
                + DMatrix::identity(3, 3) * (4.0 * eps * xi.0.norm_squared())
                + &xi.0 * xi.0.transpose() * (8.0 * eps)
        })
    }

    fn linear_l(model: &Arc<GroupModel>) -> LagrangianField {
        LagrangianField::reduced(model.clone(), |xi: &AlgVec| xi[0] + 2.0 * xi[1] + 3.0 * xi[2])
    }

    #[test]
    fn rigid_body_generation() {
        let model = Arc::new(GroupModel::so3());
        let l = rigid_l(&model);
        let e = make_reduced_l2h(&l).unwrap();
        let base = BasePoint::linear(DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let gen = generate(&e, &base, &[]).unwrap();
        assert_eq!(gen.points.len(), 1);
        assert_eq!(gen.starts, 27);
        let p = &gen.points[0];
        assert!((&p.fiber_witness - DVector::from_vec(vec![1.0, 1.0, 1.0])).amax() < 1e-12);
        assert_eq!(p.covector.x, -&p.fiber_witness);
        let h = legendre_transform(&l).unwrap();
        let mu = DualVec(base.x.clone());
        let z = to_reduced(model.algebra(), e.kind(), p).unwrap();
        let expected = hamilton_dirac(&h, &mu).unwrap();
        assert!((&z.lam - &expected.lam).max_abs() < 1e-10);
        assert!((&z.xi - &expected.xi).max_abs() < 1e-10);
        assert!((p.value + h.value_at(&mu).unwrap()).abs() < 1e-12);
        assert!(rank_check(&e, &base, &p.fiber_witness).unwrap().pass);
    }

    #[test]
    fn reduced_h2l_lands_on_lagrange_dirac() {
        let model = Arc::new(GroupModel::so3());
        let l = rigid_l(&model);
        let h = legendre_transform(&l).unwrap();
        let e = make_reduced_h2l(&h).unwrap();
        let xi = DVector::from_vec(vec![0.4, -1.0, 0.2]);
        let gen = generate(&e, &BasePoint::linear(xi.clone()), &[]).unwrap();
        assert_eq!(gen.points.len(), 1);
        let z = to_reduced(model.algebra(), e.kind(), &gen.points[0]).unwrap();
        let expected = lagrange_dirac(&l, &AlgVec(xi)).unwrap();
        assert!((&z.lam - &expected.lam).max_abs() < 1e-10);
        assert!((&z.mu - &expected.mu).max_abs() < 1e-10);
    }

    #[test]
    fn abelian_quadratic_converges_in_one_step() {
        let model = Arc::new(GroupModel::abelian(2));
        let l = LagrangianField::reduced(model.clone(), |xi: &AlgVec| 0.5 * xi.0.norm_squared())
            .with_fiber_gradient(|_, xi| DualVec(xi.0.clone()))
            .with_fiber_hessian(|_, _| DMatrix::identity(2, 2));
        let e = make_reduced_l2h(&l).unwrap();
        let mu = DVector::from_vec(vec![0.7, -0.3]);
        let gen = generate(&e, &BasePoint::linear(mu.clone()), &[]).unwrap();
        assert_eq!(gen.points.len(), 1);
        assert!((&gen.points[0].fiber_witness - &mu).amax() < 1e-15);
        assert!(gen.points[0].iterations <= 1);
        let h = legendre_transform(&l).unwrap();
        assert!((h.value_at(&DualVec(mu.clone())).unwrap() - 0.5 * mu.norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_lagrangian() {
        let model = Arc::new(GroupModel::so3());
        let l = linear_l(&model);
        assert!(matches!(legendre_transform(&l), Err(Error::DegenerateLagrangian { rank: 0, dim: 3 })));
        let e = make_reduced_l2h(&l).unwrap();
        let a = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let base = BasePoint::linear(a.clone());
        let report = rank_check(&e, &base, &DVector::zeros(3)).unwrap();
        assert!(report.pass);
        let gen = generate(&e, &base, &[]).unwrap();
        assert_eq!(gen.points.len(), 27);
        assert!(gen.points.windows(2).all(|w| lex(&w[0].fiber_witness, &w[1].fiber_witness).is_lt()));
        let off = generate(&e, &BasePoint::linear(DVector::from_vec(vec![1.0, 0.0, 3.0])), &[]).unwrap();
        assert!(off.points.is_empty());
        assert!(off.diagnostic.is_some());
    }

    #[test]
    fn constant_family_fails_rank() {
        let model = Arc::new(GroupModel::so3());
        let e = MorseFamily::new(model, BaseKind::Dual, |_, _, _| 0.0);
        let r = rank_check(&e, &BasePoint::linear(DVector::zeros(3)), &DVector::zeros(3)).unwrap();
        assert_eq!((r.rank, r.required, r.pass), (0, 3, false));
    }

    #[test]
    fn transform_examples_and_roundtrip() {
        let model = Arc::new(GroupModel::so3());
        let h = legendre_transform(&rigid_l(&model)).unwrap();
        let mut s = Sampler::new(11);
        for _ in 0..20 {
            let mu = s.dual(3, 2.0);
            let closed = 0.5 * (0..3).map(|k| mu[k] * mu[k] / I[k]).sum::<f64>();
            assert!((h.value_at(&mu).unwrap() - closed).abs() < 1e-12);
        }
        for l in [rigid_l(&model), quartic_l(&model, 0.1)] {
            let back = legendre_inverse(&legendre_transform(&l).unwrap()).unwrap();
            for _ in 0..20 {
                let xi = s.alg(3, 1.5);
                assert!((back.value_at(&xi).unwrap() - l.value_at(&xi).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fd_only_family_matches_analytic() {
        let model = Arc::new(GroupModel::so3());
        let plain = LagrangianField::reduced(model.clone(), |xi: &AlgVec| {
            0.5 * (0..3).map(|k| I[k] * xi[k] * xi[k]).sum::<f64>()
        });
        let e = make_reduced_l2h(&plain).unwrap();
        let gen = generate(&e, &BasePoint::linear(DVector::from_vec(vec![1.0, 2.0, 3.0])), &[]).unwrap();
        assert_eq!(gen.points.len(), 1);
        assert!((&gen.points[0].fiber_witness - DVector::from_element(3, 1.0)).amax() < 1e-7);
    }

    #[test]
    fn unreduced_families_land_on_submanifolds() {
        let model = Arc::new(GroupModel::so3());
        let pot = |g: &GroupElement| match g {
            GroupElement::So3(m) => 2.0 * m[(2, 2)],
            _ => unreachable!(),
        };
        let l = LagrangianField::new(model.clone(), move |g, xi: &AlgVec| {
            0.5 * (0..3).map(|k| I[k] * xi[k] * xi[k]).sum::<f64>() - pot(g)
        })
        .with_fiber_gradient(|_, xi| DualVec::new((0..3).map(|k| I[k] * xi[k]).collect()))
        .with_fiber_hessian(|_, _| DMatrix::from_diagonal(&DVector::from_row_slice(&I)));
        let h = HamiltonianField::new(model.clone(), move |g, mu: &DualVec| {
            0.5 * (0..3).map(|k| mu[k] * mu[k] / I[k]).sum::<f64>() + pot(g)
        })
        .with_fiber_gradient(|_, mu| AlgVec::new((0..3).map(|k| mu[k] / I[k]).collect()))
        .with_fiber_hessian(|_, _| DMatrix::from_diagonal(&DVector::from_fn(3, |k, _| 1.0 / I[k])));
        let mut s = Sampler::new(12);
        let alg = model.algebra();
        for _ in 0..5 {
            let g = s.element(&model);
            let e = make_el2h(&l);
            let base = BasePoint::with_group(g.clone(), s.dual(3, 1.0).0);
            let gen = generate(&e, &base, &[]).unwrap();
            assert_eq!(gen.points.len(), 1);
            let p = to_triplet(alg, e.kind(), &gen.points[0]).unwrap();
            assert!(in_s(&l, &p, 1e-8).unwrap());
            assert!(rank_check(&e, &base, &gen.points[0].fiber_witness).unwrap().pass);

            let e = make_h2l(&h);
            let base = BasePoint::with_group(g.clone(), s.alg(3, 1.0).0);
            let gen = generate(&e, &base, &[]).unwrap();
            assert_eq!(gen.points.len(), 1);
            let p = to_triplet(alg, e.kind(), &gen.points[0]).unwrap();
            assert!(in_sprime(&h, &p, 1e-8).unwrap());
            assert!(rank_check(&e, &base, &gen.points[0].fiber_witness).unwrap().pass);
        }
    }

    #[test]
    fn base_kind_is_enforced() {
        let model = Arc::new(GroupModel::so3());
        let e = make_reduced_l2h(&rigid_l(&model)).unwrap();
        let bad = BasePoint::with_group(model.identity(), DVector::zeros(3));
        assert!(generate(&e, &bad, &[]).is_err());
        assert!(make_reduced_l2h(&LagrangianField::new(model, |_, _| 0.0)).is_err());
    }
}
