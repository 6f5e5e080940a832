//! The trivialized Tulczyjew space `TT*G = (G x g*) x (g x g*)`.
//!
//! A point `(g, mu, xi, nu)` sits over `(g, mu)` in `T*G`; `xi` is the
//! right-trivialized velocity of `g` and `nu = mu_dot - ad*_xi mu`. Tangent
//! vectors carry their group component as an algebra vector and are
//! identified with [`Generator`]s of right-invariant vector fields.
//!
//! Sign conventions: `theta_1` uses `<mu, [xi, xi_2]>` and
//! `theta_2 - theta_1 = d<mu, xi>`.

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::algebra::{AlgVec, DualVec, StructureAlgebra};
use crate::error::{check_dim, Result};
use crate::group::{GroupElement, GroupModel};
use crate::oracle::{BundlePoint, BundleTangent};

#[derive(Clone, Debug, PartialEq)]
pub struct TripletPoint {
    pub g: GroupElement,
    pub mu: DualVec,
    pub xi: AlgVec,
    pub nu: DualVec,
}

/// Point `(g, xi, alpha, beta)` of the trivialized `T*TG`.
#[derive(Clone, Debug, PartialEq)]
pub struct CotTanPoint {
    pub g: GroupElement,
    pub xi: AlgVec,
    pub alpha: DualVec,
    pub beta: DualVec,
}

/// Point `(g, mu, alpha, eta)` of the trivialized `T*T*G`.
#[derive(Clone, Debug, PartialEq)]
pub struct CotCotPoint {
    pub g: GroupElement,
    pub mu: DualVec,
    pub alpha: DualVec,
    pub eta: AlgVec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub xi2: AlgVec,
    pub nu2: DualVec,
    pub xi3: AlgVec,
    pub nu3: DualVec,
}

/// Tangent vector at a point of `TT*G`; the base point is passed alongside.
#[derive(Clone, Debug, PartialEq)]
pub struct TripletTangent {
    pub d_g: AlgVec,
    pub d_mu: DualVec,
    pub d_xi: AlgVec,
    pub d_nu: DualVec,
}

impl TripletPoint {
    pub fn new(model: &GroupModel, g: GroupElement, mu: DualVec, xi: AlgVec, nu: DualVec) -> Result<Self> {
        model.check(&g)?;
        for d in [mu.dim(), xi.dim(), nu.dim()] {
            check_dim(model.dim(), d)?;
        }
        Ok(Self { g, mu, xi, nu })
    }

    /// Flattens to a bundle point with fibre `(mu, xi, nu)`.
    pub fn to_bundle(&self) -> BundlePoint {
        let mut x = self.mu.to_vec();
        x.extend(self.xi.as_slice());
        x.extend(self.nu.as_slice());
        BundlePoint {
            g: Some(self.g.clone()),
            x: DVector::from_vec(x),
        }
    }

    /// Inverse of [`TripletPoint::to_bundle`]; the group factor must be present.
    pub fn from_bundle(b: &BundlePoint) -> Self {
        let n = b.x.len() / 3;
        let x = b.x.as_slice();
        TripletPoint {
            g: b.g.clone().expect("triplet bundle points carry a group factor"),
            mu: DualVec::from_slice(&x[..n]),
            xi: AlgVec::from_slice(&x[n..2 * n]),
            nu: DualVec::from_slice(&x[2 * n..]),
        }
    }
}

impl Generator {
    pub fn zeros(n: usize) -> Self {
        Self {
            xi2: AlgVec::zeros(n),
            nu2: DualVec::zeros(n),
            xi3: AlgVec::zeros(n),
            nu3: DualVec::zeros(n),
        }
    }
}

impl TripletTangent {
    pub fn zeros(n: usize) -> Self {
        Self {
            d_g: AlgVec::zeros(n),
            d_mu: DualVec::zeros(n),
            d_xi: AlgVec::zeros(n),
            d_nu: DualVec::zeros(n),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.d_g
            .max_abs()
            .max(self.d_mu.max_abs())
            .max(self.d_xi.max_abs())
            .max(self.d_nu.max_abs())
    }

    pub fn to_bundle(&self) -> BundleTangent {
        let mut v = self.d_mu.to_vec();
        v.extend(self.d_xi.as_slice());
        v.extend(self.d_nu.as_slice());
        BundleTangent {
            a: self.d_g.0.clone(),
            v: DVector::from_vec(v),
        }
    }

    pub fn from_bundle(t: &BundleTangent) -> Self {
        let n = t.a.len();
        let v = t.v.as_slice();
        TripletTangent {
            d_g: AlgVec(t.a.clone()),
            d_mu: DualVec::from_slice(&v[..n]),
            d_xi: AlgVec::from_slice(&v[n..2 * n]),
            d_nu: DualVec::from_slice(&v[2 * n..]),
        }
    }
}

impl Serialize for TripletPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TripletPoint", 4)?;
        st.serialize_field("g", &self.g.rows())?;
        st.serialize_field("mu", &self.mu)?;
        st.serialize_field("xi", &self.xi)?;
        st.serialize_field("nu", &self.nu)?;
        st.end()
    }
}

/// `(g, mu, xi, nu) -> (g, xi, nu + ad*_xi mu, mu)`.
pub fn sigma(alg: &StructureAlgebra, p: &TripletPoint) -> CotTanPoint {
    CotTanPoint {
        g: p.g.clone(),
        xi: p.xi.clone(),
        alpha: &p.nu + &alg.ads(&p.xi, &p.mu),
        beta: p.mu.clone(),
    }
}

pub fn sigma_inv(alg: &StructureAlgebra, q: &CotTanPoint) -> TripletPoint {
    TripletPoint {
        g: q.g.clone(),
        mu: q.beta.clone(),
        xi: q.xi.clone(),
        nu: &q.alpha - &alg.ads(&q.xi, &q.beta),
    }
}

/// `(g, mu, xi, nu) -> (g, mu, nu + ad*_xi mu, -xi)`.
pub fn omega_flat(alg: &StructureAlgebra, p: &TripletPoint) -> CotCotPoint {
    CotCotPoint {
        g: p.g.clone(),
        mu: p.mu.clone(),
        alpha: &p.nu + &alg.ads(&p.xi, &p.mu),
        eta: -&p.xi,
    }
}

pub fn omega_sharp(alg: &StructureAlgebra, r: &CotCotPoint) -> TripletPoint {
    let xi = -&r.eta;
    let nu = &r.alpha - &alg.ads(&xi, &r.mu);
    TripletPoint {
        g: r.g.clone(),
        mu: r.mu.clone(),
        xi,
        nu,
    }
}

pub fn proj_tpi(p: &TripletPoint) -> (GroupElement, AlgVec) {
    (p.g.clone(), p.xi.clone())
}

pub fn proj_tau(p: &TripletPoint) -> (GroupElement, DualVec) {
    (p.g.clone(), p.mu.clone())
}

pub fn proj_pi_tg(q: &CotTanPoint) -> (GroupElement, AlgVec) {
    (q.g.clone(), q.xi.clone())
}

pub fn proj_pi_tstar_g(r: &CotCotPoint) -> (GroupElement, DualVec) {
    (r.g.clone(), r.mu.clone())
}

/// Value at `p` of the right-invariant vector field generated by `gen`.
pub fn right_invariant_vf(alg: &StructureAlgebra, gen: &Generator, p: &TripletPoint) -> TripletTangent {
    TripletTangent {
        d_g: gen.xi2.clone(),
        d_mu: &gen.nu2 + &alg.ads(&gen.xi2, &p.mu),
        d_xi: &gen.xi3 + &alg.br(&p.xi, &gen.xi2),
        d_nu: &(&gen.nu3 + &alg.ads(&gen.xi2, &p.nu)) - &alg.ads(&p.xi, &gen.nu2),
    }
}

/// The generator whose right-invariant field takes the value `t` at `p`.
pub fn tangent_to_generator(alg: &StructureAlgebra, p: &TripletPoint, t: &TripletTangent) -> Generator {
    let xi2 = t.d_g.clone();
    let nu2 = &t.d_mu - &alg.ads(&xi2, &p.mu);
    let xi3 = &t.d_xi - &alg.br(&p.xi, &xi2);
    let nu3 = &(&t.d_nu - &alg.ads(&xi2, &p.nu)) + &alg.ads(&p.xi, &nu2);
    Generator { xi2, nu2, xi3, nu3 }
}

/// `theta_1 = <nu, xi_2> - <nu_2, xi> + <mu, [xi, xi_2]>`.
pub fn theta1(alg: &StructureAlgebra, p: &TripletPoint, gen: &Generator) -> f64 {
    p.nu.pair(&gen.xi2) - gen.nu2.pair(&p.xi) + p.mu.pair(&alg.br(&p.xi, &gen.xi2))
}

/// `theta_2 = <mu, xi_3> + <nu, xi_2> + <mu, [xi, xi_2]>`.
pub fn theta2(alg: &StructureAlgebra, p: &TripletPoint, gen: &Generator) -> f64 {
    p.mu.pair(&gen.xi3) + p.nu.pair(&gen.xi2) + p.mu.pair(&alg.br(&p.xi, &gen.xi2))
}

/// The potential `<mu, xi>` of `theta_2 - theta_1`.
pub fn delta(p: &TripletPoint) -> f64 {
    p.mu.pair(&p.xi)
}

/// The symplectic two-form on a pair of generators.
pub fn omega2(alg: &StructureAlgebra, p: &TripletPoint, a: &Generator, b: &Generator) -> f64 {
    let inner = &(&alg.br(&a.xi3, &b.xi2) + &alg.br(&a.xi2, &b.xi3))
        + &alg.br(&p.xi, &alg.br(&a.xi2, &b.xi2));
    a.nu3.pair(&b.xi2) + a.nu2.pair(&b.xi3)
        - b.nu2.pair(&a.xi3)
        - b.nu3.pair(&a.xi2)
        + p.nu.pair(&alg.br(&a.xi2, &b.xi2))
        + p.mu.pair(&inner)
}

/// The symplectic two-form on a pair of tangent vectors at `p`.
pub fn omega_tangent(alg: &StructureAlgebra, p: &TripletPoint, u: &TripletTangent, v: &TripletTangent) -> f64 {
    omega2(alg, p, &tangent_to_generator(alg, p, u), &tangent_to_generator(alg, p, v))
}

/// Canonical one-form of `T*TG` at `q` on a tangent with base components
/// `(a, d_xi)`: `<alpha - ad*_xi beta, a> + <beta, d_xi>`.
pub fn canonical_tstar_tg(alg: &StructureAlgebra, q: &CotTanPoint, a: &AlgVec, d_xi: &AlgVec) -> f64 {
    (&q.alpha - &alg.ads(&q.xi, &q.beta)).pair(a) + q.beta.pair(d_xi)
}

/// Canonical one-form of `T*T*G` at `r` on a tangent with base components
/// `(a, d_mu)`: `<alpha + ad*_eta mu, a> + <d_mu, eta>`.
pub fn canonical_tstar_tstar_g(alg: &StructureAlgebra, r: &CotCotPoint, a: &AlgVec, d_mu: &DualVec) -> f64 {
    (&r.alpha + &alg.ads(&r.eta, &r.mu)).pair(a) + d_mu.pair(&r.eta)
}

/// `T*TG` point from right-trivialized covector components `(a, b)` over `(g, xi)`.
pub fn cot_tan_from_covector(alg: &StructureAlgebra, g: &GroupElement, xi: &AlgVec, a: &DualVec, b: &DualVec) -> CotTanPoint {
    CotTanPoint {
        g: g.clone(),
        xi: xi.clone(),
        alpha: a + &alg.ads(xi, b),
        beta: b.clone(),
    }
}

/// `T*T*G` point from right-trivialized covector components `(a, eta)` over `(g, mu)`.
pub fn cot_cot_from_covector(alg: &StructureAlgebra, g: &GroupElement, mu: &DualVec, a: &DualVec, eta: &AlgVec) -> CotCotPoint {
    CotCotPoint {
        g: g.clone(),
        mu: mu.clone(),
        alpha: a - &alg.ads(eta, mu),
        eta: eta.clone(),
    }
}

/// Right-trivializes a matrix tangent vector `v` at `g`.
pub fn trivialize_tangent(model: &GroupModel, g: &GroupElement, v: &DMatrix<f64>) -> AlgVec {
    let ginv = model.inv(g).expect("element of this model").matrix();
    model.unhat(&(ginv * v))
}

/// Right-trivializes a matrix covector at `g` (Frobenius pairing).
pub fn trivialize_covector(model: &GroupModel, g: &GroupElement, alpha: &DMatrix<f64>) -> DualVec {
    let gm = g.matrix();
    let n = model.dim();
    DualVec::new(
        (0..n)
            .map(|i| alpha.dot(&(&gm * model.hat(&AlgVec::basis(n, i)))))
            .collect(),
    )
}

/// Right-translates an algebra vector to a matrix tangent vector at `g`.
pub fn translate_tangent(model: &GroupModel, g: &GroupElement, xi: &AlgVec) -> DMatrix<f64> {
    g.matrix() * model.hat(xi)
}

/// `TT*G` point of a curve through `(g, mu)` with matrix velocity `v_g` and
/// momentum velocity `mu_dot`.
pub fn trivialize_tt_star_g(model: &GroupModel, g: &GroupElement, mu: &DualVec, v_g: &DMatrix<f64>, mu_dot: &DualVec) -> TripletPoint {
    let xi = trivialize_tangent(model, g, v_g);
    let nu = mu_dot - &model.algebra().ads(&xi, mu);
    TripletPoint {
        g: g.clone(),
        mu: mu.clone(),
        xi,
        nu,
    }
}

/// Inverse of [`trivialize_tt_star_g`]: `(g_dot, mu_dot)` as a matrix and a dual vector.
pub fn reconstruct(model: &GroupModel, p: &TripletPoint) -> (DMatrix<f64>, DualVec) {
    (
        translate_tangent(model, &p.g, &p.xi),
        &p.nu + &model.algebra().ads(&p.xi, &p.mu),
    )
}
