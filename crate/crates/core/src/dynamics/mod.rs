//! Trivialized Euler-Lagrange and Hamilton dynamics, their reductions, Poisson
//! brackets, Lagrangian submanifolds of `TT*G` and the Dirac derivatives.

mod field;

pub use field::{HamiltonianField, LagrangianField, ScalarField};

use crate::algebra::{AlgVec, DualVec};
use crate::error::{check_dim, Result};
use crate::group::GroupElement;
use crate::linalg;
use crate::reduction::ReducedPoint;
use crate::triplet::{CotCotPoint, CotTanPoint, TripletPoint};

/// Absolute tolerance on each dual component for submanifold membership.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// A point `(g, mu)` of `G x g*`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub g: GroupElement,
    pub mu: DualVec,
}

/// Explicit form of the trivialized Euler-Lagrange equations at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct ElVectorField {
    /// Right-trivialized `g_dot`, equal to `xi`.
    pub gdot: AlgVec,
    pub xidot: AlgVec,
    /// 2-norm condition number of the fibre Hessian.
    pub condition: f64,
}

/// `d/dt (dL/dxi) - T*R_g dL/dg - ad*_xi (dL/dxi)` along `(g_dot = xi, xi_dot)`.
pub fn el_residual(l: &LagrangianField, g: &GroupElement, xi: &AlgVec, xidot: &AlgVec) -> Result<DualVec> {
    l.model().check(g)?;
    check_dim(l.dim(), xi.dim())?;
    check_dim(l.dim(), xidot.dim())?;
    let alg = l.model().algebra();
    let p = l.fiber_gradient(g, xi)?;
    let hess = l.fiber_hessian(g, xi)?;
    let pdot = &DualVec(hess * &xidot.0) + &l.mixed_derivative(g, xi, xi)?;
    let rhs = &l.group_gradient(g, xi)? + &alg.ads(xi, &p);
    Ok(&pdot - &rhs)
}

/// Solves the trivialized Euler-Lagrange equations for `xi_dot`.
pub fn el_vector_field(l: &LagrangianField, g: &GroupElement, xi: &AlgVec) -> Result<ElVectorField> {
    l.model().check(g)?;
    check_dim(l.dim(), xi.dim())?;
    let alg = l.model().algebra();
    let p = l.fiber_gradient(g, xi)?;
    let hess = l.fiber_hessian(g, xi)?;
    let rhs = &(&l.group_gradient(g, xi)? + &alg.ads(xi, &p)) - &l.mixed_derivative(g, xi, xi)?;
    let (xidot, condition) = linalg::solve(&hess, &rhs.0, l.hessian_noise())?;
    Ok(ElVectorField {
        gdot: xi.clone(),
        xidot: AlgVec(xidot),
        condition,
    })
}

/// `(g_dot, mu_dot) = (dH/dmu, ad*_{dH/dmu} mu - T*R_g dH/dg)`.
pub fn hamilton_vector_field(h: &HamiltonianField, s: &PhaseState) -> Result<(AlgVec, DualVec)> {
    h.model().check(&s.g)?;
    check_dim(h.dim(), s.mu.dim())?;
    let alg = h.model().algebra();
    let w = h.fiber_gradient(&s.g, &s.mu)?;
    let mudot = &alg.ads(&w, &s.mu) - &h.group_gradient(&s.g, &s.mu)?;
    Ok((w, mudot))
}

/// Euler-Poincare: solves `(d2l/dxi2) xi_dot = ad*_xi (dl/dxi)`.
pub fn euler_poincare_vf(l: &LagrangianField, xi: &AlgVec) -> Result<AlgVec> {
    l.require_reduced("euler_poincare_vf")?;
    check_dim(l.dim(), xi.dim())?;
    let e = l.model().identity();
    let p = l.fiber_gradient(&e, xi)?;
    let hess = l.fiber_hessian(&e, xi)?;
    let rhs = l.model().algebra().ads(xi, &p);
    Ok(AlgVec(linalg::solve(&hess, &rhs.0, l.hessian_noise())?.0))
}

/// Lie-Poisson: `mu_dot = ad*_{dh/dmu} mu`.
pub fn lie_poisson_vf(h: &HamiltonianField, mu: &DualVec) -> Result<DualVec> {
    h.require_reduced("lie_poisson_vf")?;
    check_dim(h.dim(), mu.dim())?;
    let w = h.fiber_gradient_at(mu)?;
    Ok(h.model().algebra().ads(&w, mu))
}

/// `{f, k}(mu) = <mu, [df/dmu, dk/dmu]>`.
pub fn lie_poisson_bracket(f: &HamiltonianField, k: &HamiltonianField, mu: &DualVec) -> Result<f64> {
    f.require_reduced("lie_poisson_bracket")?;
    k.require_reduced("lie_poisson_bracket")?;
    check_dim(f.dim(), mu.dim())?;
    let (df, dk) = (f.fiber_gradient_at(mu)?, k.fiber_gradient_at(mu)?);
    Ok(mu.pair(&f.model().algebra().br(&df, &dk)))
}

/// Canonical Poisson bracket on `G x g*`.
pub fn canonical_poisson_bracket(f: &HamiltonianField, k: &HamiltonianField, s: &PhaseState) -> Result<f64> {
    f.model().check(&s.g)?;
    check_dim(f.dim(), s.mu.dim())?;
    let (df, dk) = (f.fiber_gradient(&s.g, &s.mu)?, k.fiber_gradient(&s.g, &s.mu)?);
    let (gf, gk) = (f.group_gradient(&s.g, &s.mu)?, k.group_gradient(&s.g, &s.mu)?);
    Ok(gk.pair(&df) - gf.pair(&dk) + s.mu.pair(&f.model().algebra().br(&df, &dk)))
}

/// The point `(g, dL/dxi, xi, T*R_g dL/dg)` of the Lagrangian submanifold `S`.
pub fn submanifold_s(l: &LagrangianField, g: &GroupElement, xi: &AlgVec) -> Result<TripletPoint> {
    l.model().check(g)?;
    check_dim(l.dim(), xi.dim())?;
    Ok(TripletPoint {
        g: g.clone(),
        mu: l.fiber_gradient(g, xi)?,
        xi: xi.clone(),
        nu: l.group_gradient(g, xi)?,
    })
}

/// The point `(g, mu, dH/dmu, -T*R_g dH/dg)` of `S'`.
pub fn submanifold_sprime(h: &HamiltonianField, s: &PhaseState) -> Result<TripletPoint> {
    h.model().check(&s.g)?;
    check_dim(h.dim(), s.mu.dim())?;
    Ok(TripletPoint {
        g: s.g.clone(),
        mu: s.mu.clone(),
        xi: h.fiber_gradient(&s.g, &s.mu)?,
        nu: -h.group_gradient(&s.g, &s.mu)?,
    })
}

/// Largest defect of `p` against the equations of `S`.
pub fn s_residual(l: &LagrangianField, p: &TripletPoint) -> Result<f64> {
    let q = submanifold_s(l, &p.g, &p.xi)?;
    Ok((&q.mu - &p.mu).max_abs().max((&q.nu - &p.nu).max_abs()))
}

/// Largest defect of `p` against the equations of `S'`.
pub fn sprime_residual(h: &HamiltonianField, p: &TripletPoint) -> Result<f64> {
    let q = submanifold_sprime(h, &PhaseState { g: p.g.clone(), mu: p.mu.clone() })?;
    Ok((&q.xi - &p.xi).max_abs().max((&q.nu - &p.nu).max_abs()))
}

pub fn in_s(l: &LagrangianField, p: &TripletPoint, tol: f64) -> Result<bool> {
    Ok(s_residual(l, p)? <= tol)
}

pub fn in_sprime(h: &HamiltonianField, p: &TripletPoint, tol: f64) -> Result<bool> {
    Ok(sprime_residual(h, p)? <= tol)
}

/// Trivialized differential of `L` as a point of `T*TG`:
/// `(g, xi, T*R_g dL/dg + ad*_xi dL/dxi, dL/dxi)`.
pub fn lagrangian_differential(l: &LagrangianField, g: &GroupElement, xi: &AlgVec) -> Result<CotTanPoint> {
    let p = l.fiber_gradient(g, xi)?;
    Ok(CotTanPoint {
        g: g.clone(),
        xi: xi.clone(),
        alpha: &l.group_gradient(g, xi)? + &l.model().algebra().ads(xi, &p),
        beta: p,
    })
}

/// `(g, mu, ad*_{dH/dmu} mu - T*R_g dH/dg, -dH/dmu)` in `T*T*G`.
pub fn hamiltonian_differential(h: &HamiltonianField, s: &PhaseState) -> Result<CotCotPoint> {
    let (w, mudot) = hamilton_vector_field(h, s)?;
    Ok(CotCotPoint {
        g: s.g.clone(),
        mu: s.mu.clone(),
        alpha: mudot,
        eta: -w,
    })
}

/// `(ad*_xi dl/dxi, dl/dxi, xi)`.
pub fn lagrange_dirac(l: &LagrangianField, xi: &AlgVec) -> Result<ReducedPoint> {
    l.require_reduced("lagrange_dirac")?;
    check_dim(l.dim(), xi.dim())?;
    let p = l.fiber_gradient_at(xi)?;
    Ok(ReducedPoint {
        lam: l.model().algebra().ads(xi, &p),
        mu: p,
        xi: xi.clone(),
    })
}

/// `(ad*_{dh/dmu} mu, mu, dh/dmu)`.
pub fn hamilton_dirac(h: &HamiltonianField, mu: &DualVec) -> Result<ReducedPoint> {
    h.require_reduced("hamilton_dirac")?;
    check_dim(h.dim(), mu.dim())?;
    let w = h.fiber_gradient_at(mu)?;
    Ok(ReducedPoint {
        lam: h.model().algebra().ads(&w, mu),
        mu: mu.clone(),
        xi: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::group::GroupModel;
    use crate::sample::Sampler;
    use nalgebra::{DMatrix, DVector};
    use std::sync::Arc;

    const I: [f64; 3] = [1.0, 2.0, 3.0];

    fn rigid_l(model: &Arc<GroupModel>) -> LagrangianField {
        LagrangianField::reduced(model.clone(), |xi: &AlgVec| {
            0.5 * (0..3).map(|i| I[i] * xi[i] * xi[i]).sum::<f64>()
        })
        .with_fiber_gradient(|_, xi| DualVec::new((0..3).map(|i| I[i] * xi[i]).collect()))
        .with_fiber_hessian(|_, _| DMatrix::from_diagonal(&DVector::from_row_slice(&I)))
    }

    fn rigid_h(model: &Arc<GroupModel>) -> HamiltonianField {
        HamiltonianField::reduced(model.clone(), |mu: &DualVec| {
            0.5 * (0..3).map(|i| mu[i] * mu[i] / I[i]).sum::<f64>()
        })
        .with_fiber_gradient(|_, mu| AlgVec::new((0..3).map(|i| mu[i] / I[i]).collect()))
    }

    fn particle(n: usize) -> (LagrangianField, HamiltonianField) {
        let model = Arc::new(GroupModel::abelian(n));
        let q = |g: &GroupElement| match g {
            GroupElement::Abelian(q) => q.clone(),
            _ => unreachable!(),
        };
        let v = move |q: &DVector<f64>| 0.5 * q.norm_squared() + q[0];
        let l = LagrangianField::new(model.clone(), move |g, xi: &AlgVec| 0.5 * xi.0.norm_squared() - v(&q(g)));
        let h = HamiltonianField::new(model, move |g, mu: &DualVec| 0.5 * mu.0.norm_squared() + v(&q(g)));
        (l, h)
    }

    fn grad_v(g: &GroupElement) -> DVector<f64> {
        match g {
            GroupElement::Abelian(q) => {
                let mut d = q.clone();
                d[0] += 1.0;
                d
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn abelian_euler_lagrange_is_newton() {
        let (l, h) = particle(3);
        let mut s = Sampler::new(3);
        let g = s.element(l.model());
        let xi = s.alg(3, 1.0);
        let f = el_vector_field(&l, &g, &xi).unwrap();
        assert_eq!(f.gdot, xi);
        assert!((f.xidot.0.clone() + grad_v(&g)).amax() < 1e-6);
        let xidot = s.alg(3, 1.0);
        let r = el_residual(&l, &g, &xi, &xidot).unwrap();
        assert!((r.0 - (&xidot.0 + grad_v(&g))).amax() < 1e-6);
        let mu = s.dual(3, 1.0);
        let (gd, md) = hamilton_vector_field(&h, &PhaseState { g: g.clone(), mu: mu.clone() }).unwrap();
        assert!((gd.0 - &mu.0).amax() < 1e-9);
        assert!((md.0 + grad_v(&g)).amax() < 1e-8);
    }

    #[test]
    fn rigid_body_examples() {
        let model = Arc::new(GroupModel::so3());
        let (l, h) = (rigid_l(&model), rigid_h(&model));
        let xi = AlgVec::from([1.0, 1.0, 1.0]);
        let f = el_vector_field(&l, &model.identity(), &xi).unwrap();
        // ad*_xi (I xi) = (1,2,3) x (1,1,1) = (-1, 2, -1), divided by I
        let expected = [-1.0, 1.0, -1.0 / 3.0];
        for i in 0..3 {
            assert!((f.xidot[i] - expected[i]).abs() < 1e-12);
        }
        assert!((f.condition - 3.0).abs() < 1e-6);
        let ep = euler_poincare_vf(&l, &xi).unwrap();
        assert!((&ep - &f.xidot).max_abs() < 1e-12);
        let r = el_residual(&l, &model.identity(), &xi, &f.xidot).unwrap();
        assert!(r.max_abs() < 1e-8);

        let mu = DualVec::from([1.0, 1.0, 1.0]);
        let lp = lie_poisson_vf(&h, &mu).unwrap();
        for (a, b) in lp.as_slice().iter().zip([-1.0 / 6.0, 2.0 / 3.0, -0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
        let s = PhaseState { g: model.identity(), mu: mu.clone() };
        assert_eq!(hamilton_vector_field(&h, &s).unwrap().1, lp);

        let ld = lagrange_dirac(&l, &xi).unwrap();
        assert_eq!(ld.lam.as_slice(), &[-1.0, 2.0, -1.0]);
        assert_eq!(ld.mu.as_slice(), &[1.0, 2.0, 3.0]);
        let hd = hamilton_dirac(&h, &mu).unwrap();
        assert_eq!(hd.lam, lp);
        assert_eq!(hd.xi.as_slice(), &[1.0, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn isotropic_inertia_gives_steady_rotation() {
        let model = Arc::new(GroupModel::so3());
        let l = LagrangianField::reduced(model.clone(), |xi: &AlgVec| 0.5 * xi.0.norm_squared());
        let xi = AlgVec::from([0.3, -1.0, 2.0]);
        assert!(euler_poincare_vf(&l, &xi).unwrap().max_abs() < 1e-9);
        let ld = lagrange_dirac(&l, &xi).unwrap();
        assert!(ld.lam.max_abs() < 1e-9);
        let h = HamiltonianField::reduced(model, |mu: &DualVec| 0.5 * mu.0.norm_squared());
        let mu = DualVec::from([1.0, 2.0, 3.0]);
        assert!(lie_poisson_vf(&h, &mu).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn degenerate_lagrangian_is_refused() {
        let model = Arc::new(GroupModel::so3());
        let l = LagrangianField::reduced(model.clone(), |xi: &AlgVec| xi[0] + 2.0 * xi[1] + 3.0 * xi[2]);
        let r = el_vector_field(&l, &model.identity(), &AlgVec::from([1.0, 0.0, 0.0]));
        assert!(matches!(r, Err(Error::DegenerateLagrangian { rank: 0, dim: 3 })));
        assert!(euler_poincare_vf(&l, &AlgVec::zeros(3)).is_err());
    }

    #[test]
    fn brackets() {
        let model = Arc::new(GroupModel::so3());
        let lin = |b: [f64; 3]| {
            HamiltonianField::reduced(model.clone(), move |mu: &DualVec| {
                (0..3).map(|i| b[i] * mu[i]).sum()
            })
        };
        let (f, k) = (lin([1.0, 0.0, 0.0]), lin([0.0, 1.0, 0.0]));
        let mu = DualVec::from([0.5, -1.0, 2.0]);
        assert!((lie_poisson_bracket(&f, &k, &mu).unwrap() - 2.0).abs() < 1e-9);
        assert!(lie_poisson_bracket(&f, &f, &mu).unwrap().abs() < 1e-12);
        let casimir = HamiltonianField::reduced(model.clone(), |mu: &DualVec| 0.5 * mu.0.norm_squared());
        assert!(lie_poisson_bracket(&casimir, &rigid_h(&model), &mu).unwrap().abs() < 1e-9);
        let s = PhaseState { g: model.identity(), mu: mu.clone() };
        let a = canonical_poisson_bracket(&f, &k, &s).unwrap();
        assert!((a - lie_poisson_bracket(&f, &k, &mu).unwrap()).abs() < 1e-12);

        let (_, h) = particle(2);
        let mut smp = Sampler::new(1);
        let s = PhaseState { g: smp.element(h.model()), mu: smp.dual(2, 1.0) };
        let q_lin = HamiltonianField::new(h.model().clone(), |g, _| match g {
            GroupElement::Abelian(q) => q[0],
            _ => unreachable!(),
        });
        // {q1, H} = -dH/dp1 in the sign convention of the Lie-Poisson bracket
        let b = canonical_poisson_bracket(&q_lin, &h, &s).unwrap();
        assert!((b + s.mu[0]).abs() < 1e-8);
    }

    #[test]
    fn submanifold_points() {
        let model = Arc::new(GroupModel::so3());
        let l = rigid_l(&model);
        let xi = AlgVec::from([0.5, -0.2, 1.0]);
        let p = submanifold_s(&l, &model.identity(), &xi).unwrap();
        assert_eq!(p.mu.as_slice(), &[0.5, -0.4, 3.0]);
        assert_eq!(p.nu, DualVec::zeros(3));
        assert!(in_s(&l, &p, MEMBERSHIP_TOL).unwrap());
        let mut off = p.clone();
        off.mu[0] += 1e-3;
        assert!(!in_s(&l, &off, MEMBERSHIP_TOL).unwrap());

        let (_, h) = particle(3);
        let mut s = Sampler::new(2);
        let st = PhaseState { g: s.element(h.model()), mu: s.dual(3, 1.0) };
        let sp = submanifold_sprime(&h, &st).unwrap();
        assert!((sp.nu.0.clone() + grad_v(&st.g)).amax() < 1e-8);
        let alg = h.model().algebra();
        let back = crate::triplet::omega_sharp(alg, &hamiltonian_differential(&h, &st).unwrap());
        assert!((&back.nu - &sp.nu).max_abs() < 1e-12);
        assert!((&back.xi - &sp.xi).max_abs() < 1e-12);
    }

    #[test]
    fn reduction_of_unreduced_equations_is_exact() {
        let model = Arc::new(GroupModel::so3());
        let l = rigid_l(&model);
        let mut s = Sampler::new(5);
        for _ in 0..5 {
            let g = s.element(&model);
            let xi = s.alg(3, 1.0);
            assert_eq!(el_vector_field(&l, &g, &xi).unwrap().xidot, euler_poincare_vf(&l, &xi).unwrap());
        }
    }
}
