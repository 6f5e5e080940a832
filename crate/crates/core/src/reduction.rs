//! The reduced triplet on `z_d = O x g* x g`, with the wings `z_l` and `z_h`.
//!
//! Orbit points are stored as plain dual vectors `lam = Ad*_{g^-1} lambda`.
//! The reduced two-form is `d chi_1 = d chi_2` computed along the fields of
//! [`reduced_vf`]:
//! `<ups, zeta'> - <ups', zeta> + <lam, [eta, eta']>`.

use serde::Serialize;

use crate::algebra::{AlgVec, DualVec, StructureAlgebra};
use crate::dynamics::{HamiltonianField, LagrangianField};
use crate::error::Result;
use crate::group::GroupModel;
use crate::linalg;
use crate::triplet::{CotCotPoint, CotTanPoint, TripletPoint};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedPoint {
    pub lam: DualVec,
    pub mu: DualVec,
    pub xi: AlgVec,
}

/// Point `(lam, xi, mu)` of `z_l`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZlPoint {
    pub lam: DualVec,
    pub xi: AlgVec,
    pub mu: DualVec,
}

/// Point `(lam, mu, eta)` of `z_h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZhPoint {
    pub lam: DualVec,
    pub mu: DualVec,
    pub eta: AlgVec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedGenerator {
    pub eta: AlgVec,
    pub ups: DualVec,
    pub zeta: AlgVec,
}

/// Tangent vector at a point of `z_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedTangent {
    pub d_lam: DualVec,
    pub d_mu: DualVec,
    pub d_xi: AlgVec,
}

impl ReducedGenerator {
    pub fn zeros(n: usize) -> Self {
        Self {
            eta: AlgVec::zeros(n),
            ups: DualVec::zeros(n),
            zeta: AlgVec::zeros(n),
        }
    }

    /// The `3n` generators with a single unit entry.
    pub fn basis(n: usize) -> Vec<Self> {
        (0..3 * n)
            .map(|k| {
                let mut g = Self::zeros(n);
                match k / n {
                    0 => g.eta[k % n] = 1.0,
                    1 => g.ups[k % n] = 1.0,
                    _ => g.zeta[k % n] = 1.0,
                }
                g
            })
            .collect()
    }
}

impl ReducedTangent {
    pub fn max_abs(&self) -> f64 {
        self.d_lam.max_abs().max(self.d_mu.max_abs()).max(self.d_xi.max_abs())
    }
}

/// `(g, mu, xi, nu) -> (Ad*_{g^-1} lambda, mu, xi)` with `lambda = nu + ad*_xi mu`.
pub fn project_tt_star_g(model: &GroupModel, p: &TripletPoint) -> Result<ReducedPoint> {
    let ginv = model.inv(&p.g)?;
    let lambda = &p.nu + &model.algebra().ads(&p.xi, &p.mu);
    Ok(ReducedPoint {
        lam: model.ad_star_unchecked(&ginv, &lambda),
        mu: p.mu.clone(),
        xi: p.xi.clone(),
    })
}

/// `(g, xi, alpha, beta) -> (Ad*_{g^-1} alpha, xi, beta)`.
pub fn project_tstar_tg(model: &GroupModel, q: &CotTanPoint) -> Result<ZlPoint> {
    let ginv = model.inv(&q.g)?;
    Ok(ZlPoint {
        lam: model.ad_star_unchecked(&ginv, &q.alpha),
        xi: q.xi.clone(),
        mu: q.beta.clone(),
    })
}

/// `(g, mu, alpha, eta) -> (Ad*_{g^-1} alpha, mu, eta)`.
pub fn project_tstar_tstar_g(model: &GroupModel, r: &CotCotPoint) -> Result<ZhPoint> {
    let ginv = model.inv(&r.g)?;
    Ok(ZhPoint {
        lam: model.ad_star_unchecked(&ginv, &r.alpha),
        mu: r.mu.clone(),
        eta: r.eta.clone(),
    })
}

pub fn kappa(z: &ReducedPoint) -> ZlPoint {
    ZlPoint {
        lam: z.lam.clone(),
        xi: z.xi.clone(),
        mu: z.mu.clone(),
    }
}

pub fn kappa_inv(w: &ZlPoint) -> ReducedPoint {
    ReducedPoint {
        lam: w.lam.clone(),
        mu: w.mu.clone(),
        xi: w.xi.clone(),
    }
}

pub fn omega_flat_red(z: &ReducedPoint) -> ZhPoint {
    ZhPoint {
        lam: z.lam.clone(),
        mu: z.mu.clone(),
        eta: -&z.xi,
    }
}

pub fn omega_sharp_red(w: &ZhPoint) -> ReducedPoint {
    ReducedPoint {
        lam: w.lam.clone(),
        mu: w.mu.clone(),
        xi: -&w.eta,
    }
}

/// `(ad*_eta lam, ups + ad*_eta mu, zeta + [xi, eta])`.
pub fn reduced_vf(alg: &StructureAlgebra, gen: &ReducedGenerator, z: &ReducedPoint) -> ReducedTangent {
    ReducedTangent {
        d_lam: alg.ads(&gen.eta, &z.lam),
        d_mu: &gen.ups + &alg.ads(&gen.eta, &z.mu),
        d_xi: &gen.zeta + &alg.br(&z.xi, &gen.eta),
    }
}

/// Jacobi-Lie bracket of two [`reduced_vf`] fields, again of that form.
pub fn reduced_bracket(alg: &StructureAlgebra, a: &ReducedGenerator, b: &ReducedGenerator) -> ReducedGenerator {
    ReducedGenerator {
        eta: alg.br(&a.eta, &b.eta),
        ups: &alg.ads(&b.eta, &a.ups) - &alg.ads(&a.eta, &b.ups),
        zeta: &alg.br(&a.eta, &b.zeta) - &alg.br(&b.eta, &a.zeta),
    }
}

/// Generator of the [`reduced_vf`] field through `t`, found by a
/// minimum-norm least-squares solve of `ad*_eta lam = d_lam`. The residual of
/// that solve is returned alongside; it vanishes iff `t` is tangent to the
/// coadjoint orbit through `lam`.
pub fn tangent_to_reduced_generator(alg: &StructureAlgebra, z: &ReducedPoint, t: &ReducedTangent) -> (ReducedGenerator, f64) {
    let (eta, residual) = linalg::least_squares(&alg.ad_star_in_xi(&z.lam), &t.d_lam.0, 0.0);
    let eta = AlgVec(eta);
    let ups = &t.d_mu - &alg.ads(&eta, &z.mu);
    let zeta = &t.d_xi - &alg.br(&z.xi, &eta);
    (ReducedGenerator { eta, ups, zeta }, residual)
}

/// `chi_1 = <lam, eta> - <ups, xi>`.
pub fn chi1(z: &ReducedPoint, gen: &ReducedGenerator) -> f64 {
    z.lam.pair(&gen.eta) - gen.ups.pair(&z.xi)
}

/// `chi_2 = <lam, eta> + <mu, zeta>`.
pub fn chi2(z: &ReducedPoint, gen: &ReducedGenerator) -> f64 {
    z.lam.pair(&gen.eta) + z.mu.pair(&gen.zeta)
}

/// The potential `<mu, xi>` of `chi_2 - chi_1`.
pub fn delta(z: &ReducedPoint) -> f64 {
    z.mu.pair(&z.xi)
}

/// Reduced two-form `<ups, zeta'> - <ups', zeta> + <lam, [eta, eta']>`.
pub fn omega_zd(alg: &StructureAlgebra, z: &ReducedPoint, a: &ReducedGenerator, b: &ReducedGenerator) -> f64 {
    a.ups.pair(&b.zeta) - b.ups.pair(&a.zeta) + z.lam.pair(&alg.br(&a.eta, &b.eta))
}

/// Embedding of `T*g` at `(xi, mu)`: `(ad*_xi mu, mu, xi)`.
pub fn embed_kappa_hat(alg: &StructureAlgebra, xi: &AlgVec, mu: &DualVec) -> ReducedPoint {
    ReducedPoint {
        lam: alg.ads(xi, mu),
        mu: mu.clone(),
        xi: xi.clone(),
    }
}

/// Embedding of `T*g*` at `(mu, xi)`: `(ad*_xi mu, mu, xi)`.
pub fn embed_omega_hat(alg: &StructureAlgebra, mu: &DualVec, xi: &AlgVec) -> ReducedPoint {
    embed_kappa_hat(alg, xi, mu)
}

/// Largest discrepancy of `tau* dl = chi_2` over the basis generators at `z`.
pub fn dirac_identity_tau(l: &LagrangianField, z: &ReducedPoint) -> Result<f64> {
    l.require_reduced("dirac_identity_tau")?;
    let alg = l.model().algebra();
    let p = l.fiber_gradient_at(&z.xi)?;
    Ok(ReducedGenerator::basis(alg.dim())
        .iter()
        .map(|gen| {
            let lhs = p.pair(&reduced_vf(alg, gen, z).d_xi);
            (lhs - chi2(z, gen)).abs()
        })
        .fold(0.0, f64::max))
}

/// Largest discrepancy of `-pi* dh = chi_1` over the basis generators at `z`.
pub fn dirac_identity_pi(h: &HamiltonianField, z: &ReducedPoint) -> Result<f64> {
    h.require_reduced("dirac_identity_pi")?;
    let alg = h.model().algebra();
    let w = h.fiber_gradient_at(&z.mu)?;
    Ok(ReducedGenerator::basis(alg.dim())
        .iter()
        .map(|gen| {
            let lhs = -reduced_vf(alg, gen, z).d_mu.pair(&w);
            (lhs - chi1(z, gen)).abs()
        })
        .fold(0.0, f64::max))
}

/// Orbit invariants of `lam`: `|lam|` on so(3)*, the centre component on h3*,
/// all components on an abelian dual.
pub fn orbit_invariants(model: &GroupModel, lam: &DualVec) -> Vec<f64> {
    match model.kind() {
        crate::group::GroupKind::So3 => vec![lam.norm()],
        _ => model.casimirs(lam),
    }
}
