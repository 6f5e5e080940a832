use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgVec, DualVec, Fiber};
use crate::error::{finite, Error, Result};
use crate::fd::FdConfig;
use crate::group::{GroupElement, GroupModel};
use crate::sample::Sampler;

type Eval<V> = Arc<dyn Fn(&GroupElement, &V) -> f64 + Send + Sync>;
type Grad<V, W> = Arc<dyn Fn(&GroupElement, &V) -> W + Send + Sync>;
type Hess<V> = Arc<dyn Fn(&GroupElement, &V) -> DMatrix<f64> + Send + Sync>;

/// A scalar function on `G x V` with `V` either `g` or `g*`.
///
/// Derivatives default to central differences; analytic fibre gradients,
/// fibre Hessians and right group gradients may be registered.
#[derive(Clone)]
pub struct ScalarField<V: Fiber> {
    model: Arc<GroupModel>,
    eval: Eval<V>,
    fiber_gradient: Option<Grad<V, V::Dual>>,
    fiber_hessian: Option<Hess<V>>,
    group_gradient: Option<Grad<V, DualVec>>,
    reduced: bool,
    fd: FdConfig,
}

/// `L(g, xi)` on the right-trivialized tangent bundle.
pub type LagrangianField = ScalarField<AlgVec>;
/// `H(g, mu)` on the right-trivialized cotangent bundle.
pub type HamiltonianField = ScalarField<DualVec>;

impl<V: Fiber> std::fmt::Debug for ScalarField<V> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("group", &self.model.kind())
            .field("reduced", &self.reduced)
            .field("analytic_fiber_gradient", &self.fiber_gradient.is_some())
            .field("analytic_group_gradient", &self.group_gradient.is_some())
            .finish()
    }
}

impl<V: Fiber> ScalarField<V> {
    pub fn new(
        model: Arc<GroupModel>,
        eval: impl Fn(&GroupElement, &V) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            model,
            eval: Arc::new(eval),
            fiber_gradient: None,
            fiber_hessian: None,
            group_gradient: None,
            reduced: false,
            fd: FdConfig::default(),
        }
    }

    /// A field that ignores the group variable.
    pub fn reduced(model: Arc<GroupModel>, eval: impl Fn(&V) -> f64 + Send + Sync + 'static) -> Self {
        let mut f = Self::new(model, move |_, v| eval(v));
        f.reduced = true;
        f
    }

    pub fn with_fiber_gradient(
        mut self,
        grad: impl Fn(&GroupElement, &V) -> V::Dual + Send + Sync + 'static,
    ) -> Self {
        self.fiber_gradient = Some(Arc::new(grad));
        self
    }

    pub fn with_fiber_hessian(
        mut self,
        hess: impl Fn(&GroupElement, &V) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.fiber_hessian = Some(Arc::new(hess));
        self
    }

    pub fn with_group_gradient(
        mut self,
        grad: impl Fn(&GroupElement, &V) -> DualVec + Send + Sync + 'static,
    ) -> Self {
        self.group_gradient = Some(Arc::new(grad));
        self
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn model(&self) -> &Arc<GroupModel> {
        &self.model
    }

    pub fn fd(&self) -> &FdConfig {
        &self.fd
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn has_analytic_fiber_gradient(&self) -> bool {
        self.fiber_gradient.is_some()
    }

    pub fn has_analytic_group_gradient(&self) -> bool {
        self.group_gradient.is_some()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub(crate) fn require_reduced(&self, what: &'static str) -> Result<()> {
        if self.reduced {
            Ok(())
        } else {
            Err(Error::NotReduced(what))
        }
    }

    pub fn value(&self, g: &GroupElement, v: &V) -> Result<f64> {
        finite((self.eval)(g, v), "field value")
    }

    /// Value of a reduced field.
    pub fn value_at(&self, v: &V) -> Result<f64> {
        self.value(&self.model.identity(), v)
    }

    pub fn fiber_gradient(&self, g: &GroupElement, v: &V) -> Result<V::Dual> {
        let out = match &self.fiber_gradient {
            Some(grad) => grad(g, v),
            None => V::Dual::from_vector(self.fd.gradient(v.vector(), |x| {
                (self.eval)(g, &V::from_vector(x.clone()))
            })),
        };
        if out.vector().iter().all(|x| x.is_finite()) {
            Ok(out)
        } else {
            Err(Error::NonFinite("fiber gradient".into()))
        }
    }

    pub fn fiber_gradient_at(&self, v: &V) -> Result<V::Dual> {
        self.fiber_gradient(&self.model.identity(), v)
    }

    /// Analytic fibre gradient only; finite differences of the finite-difference
    /// gradient otherwise.
    fn fiber_gradient_vec(&self, g: &GroupElement, x: &DVector<f64>) -> DVector<f64> {
        match &self.fiber_gradient {
            Some(grad) => grad(g, &V::from_vector(x.clone())).vector().clone(),
            None => self.fd.gradient(x, |y| (self.eval)(g, &V::from_vector(y.clone()))),
        }
    }

    pub fn fiber_hessian(&self, g: &GroupElement, v: &V) -> Result<DMatrix<f64>> {
        let h = match &self.fiber_hessian {
            Some(hess) => hess(g, v),
            None => {
                let step = if self.fiber_gradient.is_some() {
                    self.fd.step
                } else {
                    self.fd.outer_step()
                };
                let j = self
                    .fd
                    .jacobian(step, v.vector(), |x| self.fiber_gradient_vec(g, x));
                (&j + j.transpose()) * 0.5
            }
        };
        if h.iter().all(|x| x.is_finite()) {
            Ok(h)
        } else {
            Err(Error::NonFinite("fiber Hessian".into()))
        }
    }

    /// Expected size of finite-difference noise in [`Self::fiber_hessian`].
    pub(crate) fn hessian_noise(&self) -> f64 {
        match (&self.fiber_hessian, &self.fiber_gradient) {
            (Some(_), _) => 0.0,
            (None, Some(_)) => 1e-8,
            (None, None) => 1e-6,
        }
    }

    /// Right-trivialized group gradient `T*_e R_g (dF/dg)`; zero for reduced fields.
    pub fn group_gradient(&self, g: &GroupElement, v: &V) -> Result<DualVec> {
        if self.reduced {
            return Ok(DualVec::zeros(self.dim()));
        }
        match &self.group_gradient {
            Some(grad) => {
                let out = grad(g, v);
                if out.is_finite() {
                    Ok(out)
                } else {
                    Err(Error::NonFinite("group gradient".into()))
                }
            }
            None => self.model.right_gradient(|h| (self.eval)(h, v), g, &self.fd),
        }
    }

    /// Derivative of the fibre gradient along the right-invariant curve
    /// `exp(t a) g`; zero for reduced fields.
    pub fn mixed_derivative(&self, g: &GroupElement, v: &V, a: &AlgVec) -> Result<V::Dual> {
        if self.reduced {
            return Ok(V::Dual::from_vector(DVector::zeros(self.dim())));
        }
        let step = if self.fiber_gradient.is_some() {
            self.fd.step
        } else {
            self.fd.outer_step()
        };
        let d = self.fd.derivative_vec(step, |t| {
            let h = self.model.translate(&(a * t), g);
            self.fiber_gradient_vec(&h, v.vector())
        });
        if d.iter().all(|x| x.is_finite()) {
            Ok(V::Dual::from_vector(d))
        } else {
            Err(Error::NonFinite("mixed derivative".into()))
        }
    }

    /// Largest change of the value under random changes of `g`; zero means
    /// the field is numerically g-independent.
    pub fn g_dependence(&self, sampler: &mut Sampler, samples: usize, scale: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let v = V::from_vector(DVector::from_vec(sampler.coords(self.dim(), scale)));
            let (g, h) = (sampler.element(&self.model), sampler.element(&self.model));
            worst = worst.max(((self.eval)(&g, &v) - (self.eval)(&h, &v)).abs());
        }
        worst
    }
}
