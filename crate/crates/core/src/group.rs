//! Matrix realizations of SO(3), the Heisenberg group H3 and R^n.
//!
//! A [`GroupElement`] stores the matrix of the *opposite* group: the group
//! product is `mul(g, h) = h_mat * g_mat`. With this reading, right
//! translation by `exp(a)` is `g_mat * exp(hat a)`, right-invariant vector
//! fields bracket like the algebra, `Ad(g, xi) = unhat(g_mat hat(xi) g_mat^-1)`
//! is the right adjoint action `I_g = L_{g^-1} o R_g`, and
//! `d/dt Ad*_{exp(t xi)} mu = -ad*_xi mu`. On SO(3) the algebra element of a
//! trajectory is the body angular velocity.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgVec, DualVec, StructureAlgebra};
use crate::error::{check_dim, finite, Error, Result};
use crate::fd::FdConfig;

/// Orthonormality residual above which SO(3) elements are re-projected.
pub const REPROJECT_TOL: f64 = 1e-9;

/// Largest rotation angle accepted by `log`.
pub const LOG_BRANCH_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    So3,
    Heisenberg3,
    Abelian(usize),
}

impl GroupKind {
    /// Parses `"so3"`, `"heisenberg3"` or `"abelian:n"`.
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "so3" => Ok(Self::So3),
            "heisenberg3" => Ok(Self::Heisenberg3),
            _ => id
                .strip_prefix("abelian:")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n > 0)
                .map(Self::Abelian)
                .ok_or_else(|| Error::Config {
                    path: "group".into(),
                    message: format!("unknown group `{id}` (expected so3, heisenberg3, abelian:n)"),
                }),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::So3 | Self::Heisenberg3 => 3,
            Self::Abelian(n) => *n,
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::So3 => write!(f, "so3"),
            Self::Heisenberg3 => write!(f, "heisenberg3"),
            Self::Abelian(n) => write!(f, "abelian:{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement {
    So3(Matrix3<f64>),
    Heisenberg3(Matrix3<f64>),
    /// Translation vector; the group law is addition.
    Abelian(DVector<f64>),
}

impl GroupElement {
    pub fn kind(&self) -> GroupKind {
        match self {
            Self::So3(_) => GroupKind::So3,
            Self::Heisenberg3(_) => GroupKind::Heisenberg3,
            Self::Abelian(q) => GroupKind::Abelian(q.len()),
        }
    }

    /// Matrix realization; R^n uses homogeneous `(n+1) x (n+1)` translations.
    pub fn matrix(&self) -> DMatrix<f64> {
        match self {
            Self::So3(m) | Self::Heisenberg3(m) => DMatrix::from_column_slice(3, 3, m.as_slice()),
            Self::Abelian(q) => {
                let n = q.len();
                let mut m = DMatrix::identity(n + 1, n + 1);
                m.view_mut((0, n), (n, 1)).copy_from(q);
                m
            }
        }
    }

    /// Flat coordinates: row-major matrix entries, or the translation vector.
    pub fn entries(&self) -> Vec<f64> {
        match self {
            Self::So3(m) | Self::Heisenberg3(m) => {
                (0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])).collect()
            }
            Self::Abelian(q) => q.as_slice().to_vec(),
        }
    }

    /// Rows for JSON output (a single row for R^n).
    pub fn rows(&self) -> Vec<Vec<f64>> {
        match self {
            Self::So3(m) | Self::Heisenberg3(m) => {
                (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect()
            }
            Self::Abelian(q) => vec![q.as_slice().to_vec()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|x| x.is_finite())
    }
}

/// A shipped group together with its algebra and `hat` map.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupModel {
    kind: GroupKind,
    algebra: StructureAlgebra,
}

impl GroupModel {
    pub fn new(kind: GroupKind) -> Self {
        let algebra = match kind {
            GroupKind::So3 => StructureAlgebra::so3(),
            GroupKind::Heisenberg3 => StructureAlgebra::heisenberg3(),
            GroupKind::Abelian(n) => StructureAlgebra::abelian(n),
        };
        Self { kind, algebra }
    }

    pub fn so3() -> Self {
        Self::new(GroupKind::So3)
    }

    pub fn heisenberg3() -> Self {
        Self::new(GroupKind::Heisenberg3)
    }

    pub fn abelian(n: usize) -> Self {
        Self::new(GroupKind::Abelian(n))
    }

    pub fn from_id(id: &str) -> Result<Self> {
        GroupKind::parse(id).map(Self::new)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn algebra(&self) -> &StructureAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn check(&self, g: &GroupElement) -> Result<()> {
        if g.kind() == self.kind {
            Ok(())
        } else {
            Err(Error::GroupMismatch(self.kind, g.kind()))
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self.kind {
            GroupKind::So3 => GroupElement::So3(Matrix3::identity()),
            GroupKind::Heisenberg3 => GroupElement::Heisenberg3(Matrix3::identity()),
            GroupKind::Abelian(n) => GroupElement::Abelian(DVector::zeros(n)),
        }
    }

    /// Parses an element from matrix rows (a single row for R^n) and checks
    /// the constraint invariants.
    pub fn element_from_rows(&self, rows: &[Vec<f64>]) -> Result<GroupElement> {
        let bad = |message: String| Error::Config {
            path: "g".into(),
            message,
        };
        let g = match self.kind {
            GroupKind::So3 | GroupKind::Heisenberg3 => {
                if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
                    return Err(bad("expected a 3x3 matrix".into()));
                }
                let m = Matrix3::from_fn(|i, j| rows[i][j]);
                if self.kind == GroupKind::So3 {
                    GroupElement::So3(m)
                } else {
                    GroupElement::Heisenberg3(m)
                }
            }
            GroupKind::Abelian(n) => {
                let q: Vec<f64> = rows.iter().flatten().copied().collect();
                if q.len() != n {
                    return Err(bad(format!("expected {n} translation coordinates")));
                }
                GroupElement::Abelian(DVector::from_vec(q))
            }
        };
        self.validate_element(&g).map_err(|e| bad(e.to_string()))?;
        Ok(g)
    }

    /// Checks the group-specific constraint invariant.
    pub fn validate_element(&self, g: &GroupElement) -> Result<()> {
        self.check(g)?;
        if !g.is_finite() {
            return Err(Error::NonFinite("group element".into()));
        }
        match g {
            GroupElement::So3(m) => {
                let r = so3_residual(m);
                if r > REPROJECT_TOL || m.determinant() <= 0.0 {
                    return Err(Error::Domain(format!(
                        "not a rotation: orthonormality residual {r:e}"
                    )));
                }
            }
            GroupElement::Heisenberg3(m) => {
                let unit = (0..3).all(|i| m[(i, i)] == 1.0)
                    && m[(1, 0)] == 0.0
                    && m[(2, 0)] == 0.0
                    && m[(2, 1)] == 0.0;
                if !unit {
                    return Err(Error::Domain("not unit upper-triangular".into()));
                }
            }
            GroupElement::Abelian(_) => {}
        }
        Ok(())
    }

    /// Orthonormality residual for SO(3), zero otherwise.
    pub fn constraint_residual(&self, g: &GroupElement) -> f64 {
        match g {
            GroupElement::So3(m) => so3_residual(m),
            GroupElement::Heisenberg3(m) => {
                let diag = (0..3).map(|i| (m[(i, i)] - 1.0).abs()).fold(0.0, f64::max);
                diag.max(m[(1, 0)].abs())
                    .max(m[(2, 0)].abs())
                    .max(m[(2, 1)].abs())
            }
            GroupElement::Abelian(_) => 0.0,
        }
    }

    /// Group product `g h`, realized as the matrix product `h_mat g_mat`.
    pub fn mul(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(compose(g, h))
    }

    pub fn inv(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(inverse(g))
    }

    pub fn exp(&self, xi: &AlgVec) -> Result<GroupElement> {
        check_dim(self.dim(), xi.dim())?;
        Ok(self.exp_unchecked(xi))
    }

    pub(crate) fn exp_unchecked(&self, xi: &AlgVec) -> GroupElement {
        match self.kind {
            GroupKind::So3 => GroupElement::So3(rodrigues(&Vector3::from_column_slice(xi.as_slice()))),
            GroupKind::Heisenberg3 => {
                let x = hat3_heis(xi);
                GroupElement::Heisenberg3(Matrix3::identity() + x + x * x * 0.5)
            }
            GroupKind::Abelian(_) => GroupElement::Abelian(xi.0.clone()),
        }
    }

    /// Principal logarithm.
    pub fn log(&self, g: &GroupElement) -> Result<AlgVec> {
        self.check(g)?;
        match g {
            GroupElement::So3(r) => so3_log(r),
            GroupElement::Heisenberg3(m) => {
                let n = m - Matrix3::identity();
                let x = n - n * n * 0.5;
                Ok(AlgVec::from([x[(0, 1)], x[(1, 2)], x[(0, 2)]]))
            }
            GroupElement::Abelian(q) => Ok(AlgVec(q.clone())),
        }
    }

    /// `exp(a) g`: the flow of the right-invariant field generated by `a`.
    pub fn translate(&self, a: &AlgVec, g: &GroupElement) -> GroupElement {
        compose(&self.exp_unchecked(a), g)
    }

    /// Matrix of `xi` in the realization's Lie algebra.
    pub fn hat(&self, xi: &AlgVec) -> DMatrix<f64> {
        match self.kind {
            GroupKind::So3 => {
                let m = skew(&Vector3::from_column_slice(xi.as_slice()));
                DMatrix::from_column_slice(3, 3, m.as_slice())
            }
            GroupKind::Heisenberg3 => {
                let m = hat3_heis(xi);
                DMatrix::from_column_slice(3, 3, m.as_slice())
            }
            GroupKind::Abelian(n) => {
                let mut m = DMatrix::zeros(n + 1, n + 1);
                m.view_mut((0, n), (n, 1)).copy_from(&xi.0);
                m
            }
        }
    }

    /// Inverse of `hat` on its image (off-image components are ignored).
    pub fn unhat(&self, m: &DMatrix<f64>) -> AlgVec {
        match self.kind {
            GroupKind::So3 => AlgVec::from([
                0.5 * (m[(2, 1)] - m[(1, 2)]),
                0.5 * (m[(0, 2)] - m[(2, 0)]),
                0.5 * (m[(1, 0)] - m[(0, 1)]),
            ]),
            GroupKind::Heisenberg3 => AlgVec::from([m[(0, 1)], m[(1, 2)], m[(0, 2)]]),
            GroupKind::Abelian(n) => AlgVec(m.view((0, n), (n, 1)).column(0).into_owned()),
        }
    }

    /// Right adjoint action `Ad_g xi = unhat(g_mat hat(xi) g_mat^-1)`.
    pub fn ad(&self, g: &GroupElement, xi: &AlgVec) -> Result<AlgVec> {
        self.check(g)?;
        check_dim(self.dim(), xi.dim())?;
        Ok(AlgVec(self.ad_matrix(g) * &xi.0))
    }

    /// Matrix of `Ad_g` in coordinates.
    pub fn ad_matrix(&self, g: &GroupElement) -> DMatrix<f64> {
        match g {
            GroupElement::So3(r) => DMatrix::from_column_slice(3, 3, r.as_slice()),
            GroupElement::Abelian(q) => DMatrix::identity(q.len(), q.len()),
            GroupElement::Heisenberg3(_) => {
                let m = g.matrix();
                let minv = inverse(g).matrix();
                let n = self.dim();
                let cols: Vec<DVector<f64>> = (0..n)
                    .map(|j| self.unhat(&(&m * self.hat(&AlgVec::basis(n, j)) * &minv)).0)
                    .collect();
                DMatrix::from_columns(&cols)
            }
        }
    }

    /// Coadjoint action, the dual of `Ad_{g^-1}`.
    pub fn ad_star(&self, g: &GroupElement, mu: &DualVec) -> Result<DualVec> {
        self.check(g)?;
        check_dim(self.dim(), mu.dim())?;
        Ok(self.ad_star_unchecked(g, mu))
    }

    pub(crate) fn ad_star_unchecked(&self, g: &GroupElement, mu: &DualVec) -> DualVec {
        DualVec(self.ad_matrix(&inverse(g)).transpose() * &mu.0)
    }

    /// Right-trivialized differential: component `i` is
    /// `d/de f(exp(e e_i) g)` at `e = 0`, by central differences.
    pub fn right_gradient(
        &self,
        f: impl Fn(&GroupElement) -> f64,
        g: &GroupElement,
        fd: &FdConfig,
    ) -> Result<DualVec> {
        self.check(g)?;
        let n = self.dim();
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let e = AlgVec::basis(n, i);
            let d = fd.derivative(|t| f(&self.translate(&(&e * t), g)));
            out[i] = finite(d, "right gradient")?;
        }
        Ok(DualVec(out))
    }

    /// Casimir functions of the Lie-Poisson structure on `g*`.
    pub fn casimirs(&self, mu: &DualVec) -> Vec<f64> {
        match self.kind {
            GroupKind::So3 => vec![mu.0.norm_squared()],
            GroupKind::Heisenberg3 => vec![mu[2]],
            GroupKind::Abelian(_) => mu.to_vec(),
        }
    }
}

fn so3_residual(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).amax()
}

fn compose(g: &GroupElement, h: &GroupElement) -> GroupElement {
    match (g, h) {
        (GroupElement::So3(a), GroupElement::So3(b)) => GroupElement::So3(reproject(b * a)),
        (GroupElement::Heisenberg3(a), GroupElement::Heisenberg3(b)) => {
            GroupElement::Heisenberg3(b * a)
        }
        (GroupElement::Abelian(a), GroupElement::Abelian(b)) => GroupElement::Abelian(a + b),
        _ => panic!("composing elements of {} and {}", g.kind(), h.kind()),
    }
}

fn inverse(g: &GroupElement) -> GroupElement {
    match g {
        GroupElement::So3(m) => GroupElement::So3(m.transpose()),
        GroupElement::Heisenberg3(m) => {
            let (a, b, c) = (m[(0, 1)], m[(1, 2)], m[(0, 2)]);
            GroupElement::Heisenberg3(Matrix3::new(1.0, -a, a * b - c, 0.0, 1.0, -b, 0.0, 0.0, 1.0))
        }
        GroupElement::Abelian(q) => GroupElement::Abelian(-q),
    }
}

/// Polar projection onto SO(3) when the orthonormality residual is too big.
pub fn reproject(m: Matrix3<f64>) -> Matrix3<f64> {
    if so3_residual(&m) <= REPROJECT_TOL {
        return m;
    }
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

pub(crate) fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

fn hat3_heis(xi: &AlgVec) -> Matrix3<f64> {
    Matrix3::new(0.0, xi[0], xi[2], 0.0, 0.0, xi[1], 0.0, 0.0, 0.0)
}

fn rodrigues(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-4 {
        (1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0, 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = skew(w);
    Matrix3::identity() + k * a + k * k * b
}

fn so3_log(r: &Matrix3<f64>) -> Result<AlgVec> {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = cos.acos();
    if theta >= std::f64::consts::PI - LOG_BRANCH_MARGIN {
        return Err(Error::Domain(format!(
            "log on SO(3) requires rotation angle < pi - {LOG_BRANCH_MARGIN:e}, got {theta}"
        )));
    }
    let v = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let scale = if theta < 1e-6 {
        0.5 * (1.0 + theta * theta / 6.0)
    } else {
        theta / (2.0 * theta.sin())
    };
    Ok(AlgVec::from_slice((v * scale).as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;
    use std::f64::consts::FRAC_PI_2;

    fn rot_z(a: f64) -> GroupElement {
        GroupElement::So3(Matrix3::new(a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0))
    }

    fn models() -> Vec<GroupModel> {
        vec![GroupModel::so3(), GroupModel::heisenberg3(), GroupModel::abelian(3)]
    }

    /// Truncated power series of the matrix exponential.
    fn expm_series(m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut term = DMatrix::identity(m.nrows(), m.ncols());
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * m / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn group_axioms() {
        let mut s = Sampler::new(7);
        for model in models() {
            for _ in 0..20 {
                let g = s.element(&model);
                let h = s.element(&model);
                let k = s.element(&model);
                let e = model.identity();
                assert_eq!(model.mul(&g, &e).unwrap(), g);
                let gi = model.mul(&g, &model.inv(&g).unwrap()).unwrap();
                assert!((gi.matrix() - e.matrix()).amax() < 1e-12);
                let l = model.mul(&model.mul(&g, &h).unwrap(), &k).unwrap();
                let r = model.mul(&g, &model.mul(&h, &k).unwrap()).unwrap();
                assert!((l.matrix() - r.matrix()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn mixing_groups_is_an_error() {
        let so3 = GroupModel::so3();
        let h = GroupModel::heisenberg3().identity();
        assert!(matches!(so3.mul(&so3.identity(), &h), Err(Error::GroupMismatch(..))));
    }

    #[test]
    fn rotations_about_z_compose() {
        let m = GroupModel::so3();
        let g = m.mul(&rot_z(0.4), &rot_z(1.1)).unwrap();
        assert!((g.matrix() - rot_z(1.5).matrix()).amax() < 1e-14);
    }

    #[test]
    fn exp_matches_series() {
        let mut s = Sampler::new(3);
        let m = GroupModel::so3();
        let g = m.exp(&AlgVec::from([FRAC_PI_2, 0.0, 0.0])).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        assert!((g.matrix() - expected).amax() < 1e-15);
        for model in models() {
            assert_eq!(model.exp(&AlgVec::zeros(model.dim())).unwrap(), model.identity());
            for _ in 0..10 {
                let xi = s.alg(model.dim(), 2.0);
                let diff = model.exp(&xi).unwrap().matrix() - expm_series(&model.hat(&xi));
                assert!(diff.amax() < 1e-13, "{}", model.kind());
            }
        }
    }

    #[test]
    fn log_inverts_exp() {
        let mut s = Sampler::new(11);
        for model in models() {
            for _ in 0..50 {
                let xi = s.alg(model.dim(), 1.5);
                let back = model.log(&model.exp(&xi).unwrap()).unwrap();
                assert!((&back - &xi).max_abs() < 1e-12);
            }
        }
        let tiny = AlgVec::from([1e-9, -2e-9, 3e-10]);
        let m = GroupModel::so3();
        assert!((&m.log(&m.exp(&tiny).unwrap()).unwrap() - &tiny).max_abs() < 1e-20);
    }

    #[test]
    fn log_rejects_branch_cut() {
        let m = GroupModel::so3();
        let g = m.exp(&AlgVec::from([std::f64::consts::PI, 0.0, 0.0])).unwrap();
        let err = m.log(&g).unwrap_err();
        assert!(err.to_string().contains("pi"));
    }

    #[test]
    fn hat_intertwines_bracket() {
        let mut s = Sampler::new(5);
        for model in models() {
            for _ in 0..20 {
                let xi = s.alg(model.dim(), 2.0);
                let eta = s.alg(model.dim(), 2.0);
                assert_eq!(model.unhat(&model.hat(&xi)), xi);
                let (x, y) = (model.hat(&xi), model.hat(&eta));
                let comm = &x * &y - &y * &x;
                let br = model.hat(&model.algebra().br(&xi, &eta));
                assert!((comm - br).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn ad_is_a_right_action() {
        let mut s = Sampler::new(9);
        for model in models() {
            for _ in 0..10 {
                let (g, h) = (s.element(&model), s.element(&model));
                let xi = s.alg(model.dim(), 1.0);
                let gh = model.mul(&g, &h).unwrap();
                let lhs = model.ad(&gh, &xi).unwrap();
                let rhs = model.ad(&h, &model.ad(&g, &xi).unwrap()).unwrap();
                assert!((&lhs - &rhs).max_abs() < 1e-12);
                assert_eq!(model.ad(&model.identity(), &xi).unwrap(), xi);
            }
        }
        let a = GroupModel::abelian(2);
        let xi = AlgVec::from([1.0, 2.0]);
        assert_eq!(a.ad(&GroupElement::Abelian(DVector::from_vec(vec![3.0, -1.0])), &xi).unwrap(), xi);
    }

    #[test]
    fn ad_derivative_is_bracket() {
        let m = GroupModel::so3();
        let fd = FdConfig::default();
        let eta = AlgVec::from([0.3, -0.2, 0.9]);
        let xi = AlgVec::from([1.0, 0.5, -0.4]);
        let d = fd.derivative_vec(1e-5, |t| m.ad(&m.exp(&(&eta * t)).unwrap(), &xi).unwrap().0);
        assert!((d - m.algebra().br(&eta, &xi).0).amax() < 1e-8);
    }

    #[test]
    fn coadjoint_action() {
        let mut s = Sampler::new(13);
        let m = GroupModel::so3();
        for _ in 0..20 {
            let g = s.element(&m);
            let mu = s.dual(3, 2.0);
            let xi = s.alg(3, 2.0);
            let nu = m.ad_star(&g, &mu).unwrap();
            assert!((nu.norm() - mu.norm()).abs() < 1e-12);
            let rhs = mu.pair(&m.ad(&m.inv(&g).unwrap(), &xi).unwrap());
            assert!((nu.pair(&xi) - rhs).abs() < 1e-12);
        }
        assert_eq!(m.ad_star(&m.identity(), &DualVec::from([1.0, 2.0, 3.0])).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn right_gradient_examples() {
        let fd = FdConfig::default();
        let so3 = GroupModel::so3();
        let zero = so3.right_gradient(|_| 2.5, &so3.identity(), &fd).unwrap();
        assert_eq!(zero, DualVec::zeros(3));
        let height = |g: &GroupElement| (g.matrix() * DVector::from_vec(vec![0.0, 0.0, 1.0]))[2];
        let d = so3.right_gradient(height, &so3.identity(), &fd).unwrap();
        assert!(d.max_abs() < 1e-12);

        let ab = GroupModel::abelian(3);
        let a = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let lin = |g: &GroupElement| match g {
            GroupElement::Abelian(q) => q.dot(&a),
            _ => unreachable!(),
        };
        let q = GroupElement::Abelian(DVector::from_vec(vec![0.3, 0.1, 2.0]));
        let d = ab.right_gradient(lin, &q, &fd).unwrap();
        assert!((d.0 - a).amax() < 1e-10);

        let nan = so3.right_gradient(|_| f64::NAN, &so3.identity(), &fd);
        assert!(matches!(nan, Err(Error::NonFinite(_))));
    }

    #[test]
    fn right_gradient_of_quadratic_matches_analytic() {
        // f(g) = 1/2 |g_mat b|^2 - c . g_mat b; d/de at exp(e e_i) g is
        // (g_mat b - c) . g_mat hat(e_i) b.
        let mut s = Sampler::new(21);
        let m = GroupModel::heisenberg3();
        let fd = FdConfig::default();
        let b = DVector::from_vec(vec![0.2, -1.0, 1.5]);
        let c = DVector::from_vec(vec![1.0, 0.3, -0.4]);
        for _ in 0..10 {
            let g = s.element(&m);
            let f = |h: &GroupElement| {
                let y = h.matrix() * &b;
                0.5 * y.norm_squared() - c.dot(&y)
            };
            let num = m.right_gradient(f, &g, &fd).unwrap();
            let gm = g.matrix();
            let y = &gm * &b - &c;
            for i in 0..3 {
                let exact = y.dot(&(&gm * m.hat(&AlgVec::basis(3, i)) * &b));
                assert!((num[i] - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn so3_stays_orthonormal() {
        let m = GroupModel::so3();
        let mut g = m.identity();
        let step = AlgVec::from([0.01, 0.02, -0.015]);
        for _ in 0..100_000 {
            g = m.translate(&step, &g);
        }
        assert!(m.constraint_residual(&g) <= REPROJECT_TOL);
        m.validate_element(&g).unwrap();
    }

    #[test]
    fn parse_group_ids() {
        assert_eq!(GroupKind::parse("abelian:4").unwrap(), GroupKind::Abelian(4));
        assert!(GroupKind::parse("abelian:0").is_err());
        assert!(GroupKind::parse("se3").is_err());
        assert_eq!(GroupKind::So3.to_string(), "so3");
    }
}
