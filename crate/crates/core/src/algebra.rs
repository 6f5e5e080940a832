//! Structure-constant Lie algebras, their duals and the coadjoint action.
//!
//! The pairing between `g*` and `g` is the coordinate dot product in dual
//! bases, and `ad*` is defined by `<ad*_xi mu, eta> = <mu, [xi, eta]>`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};

/// Tolerance used by [`StructureAlgebra::validate`].
pub const VALIDATE_TOL: f64 = 1e-12;

/// Coordinate vectors that live in `g` or `g*`.
pub trait Fiber: Clone + fmt::Debug + Send + Sync + 'static {
    type Dual: Fiber<Dual = Self>;

    fn from_vector(v: DVector<f64>) -> Self;
    fn vector(&self) -> &DVector<f64>;
}

macro_rules! coord_vec {
    ($name:ident, $dual:ident) => {
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(pub DVector<f64>);

        impl $name {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(DVector::from_vec(coords))
            }

            pub fn from_slice(coords: &[f64]) -> Self {
                Self(DVector::from_column_slice(coords))
            }

            pub fn zeros(n: usize) -> Self {
                Self(DVector::zeros(n))
            }

            /// The `i`-th basis vector of an `n`-dimensional space.
            pub fn basis(n: usize, i: usize) -> Self {
                let mut v = DVector::zeros(n);
                v[i] = 1.0;
                Self(v)
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                self.0.as_slice()
            }

            pub fn to_vec(&self) -> Vec<f64> {
                self.0.as_slice().to_vec()
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn max_abs(&self) -> f64 {
                self.0.amax()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|x| x.is_finite())
            }

            /// Coordinate identification with the dual space.
            pub fn flat(&self) -> $dual {
                $dual(self.0.clone())
            }
        }

        impl Fiber for $name {
            type Dual = $dual;

            fn from_vector(v: DVector<f64>) -> Self {
                Self(v)
            }

            fn vector(&self) -> &DVector<f64> {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self::new(v)
            }
        }

        impl From<DVector<f64>> for $name {
            fn from(v: DVector<f64>) -> Self {
                Self(v)
            }
        }

        impl<const N: usize> From<[f64; N]> for $name {
            fn from(v: [f64; N]) -> Self {
                Self::from_slice(&v)
            }
        }

        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl IndexMut<usize> for $name {
            fn index_mut(&mut self, i: usize) -> &mut f64 {
                &mut self.0[i]
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        impl<'a> Add<&'a $name> for &'a $name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                $name(&self.0 + &rhs.0)
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name(self.0 - rhs.0)
            }
        }

        impl<'a> Sub<&'a $name> for &'a $name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                $name(&self.0 - &rhs.0)
            }
        }

        impl AddAssign<&$name> for $name {
            fn add_assign(&mut self, rhs: &$name) {
                self.0 += &rhs.0;
            }
        }

        impl SubAssign<&$name> for $name {
            fn sub_assign(&mut self, rhs: &$name) {
                self.0 -= &rhs.0;
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-self.0)
            }
        }

        impl Neg for &$name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-&self.0)
            }
        }

        impl Mul<f64> for $name {
            type Output = $name;
            fn mul(self, s: f64) -> $name {
                $name(self.0 * s)
            }
        }

        impl Mul<f64> for &$name {
            type Output = $name;
            fn mul(self, s: f64) -> $name {
                $name(&self.0 * s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                self.as_slice().serialize(s)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                Vec::<f64>::deserialize(d).map(Self::new)
            }
        }
    };
}

coord_vec!(AlgVec, DualVec);
coord_vec!(DualVec, AlgVec);

impl DualVec {
    /// `<self, xi>`; panics on a dimension mismatch.
    pub fn pair(&self, xi: &AlgVec) -> f64 {
        assert_eq!(self.dim(), xi.dim(), "pairing vectors of different dimension");
        self.0.dot(&xi.0)
    }
}

/// `<mu, xi>` as the coordinate dot product.
pub fn pair(mu: &DualVec, xi: &AlgVec) -> Result<f64> {
    check_dim(mu.dim(), xi.dim())?;
    Ok(mu.0.dot(&xi.0))
}

/// A Lie algebra `[e_i, e_j] = sum_k c[i][j][k] e_k` with dense constants.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureAlgebra {
    name: String,
    dim: usize,
    c: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlgebraReport {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub pass: bool,
}

#[derive(Deserialize)]
struct AlgebraDoc {
    name: String,
    dim: usize,
    c: Vec<(usize, usize, usize, f64)>,
}

impl StructureAlgebra {
    /// Builds an algebra from the dense array `c[(i * n + j) * n + k]`.
    pub fn new(name: impl Into<String>, dim: usize, c: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Structure("dimension must be positive".into()));
        }
        check_dim(dim * dim * dim, c.len())?;
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::Structure("non-finite structure constant".into()));
        }
        Ok(Self {
            name: name.into(),
            dim,
            c,
        })
    }

    /// Builds an algebra from its nonzero constants `(i, j, k, value)`,
    /// filling in the antisymmetric partner `(j, i, k, -value)` whenever it
    /// is not listed.
    pub fn from_entries(
        name: impl Into<String>,
        dim: usize,
        entries: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let idx = |i: usize, j: usize, k: usize| (i * dim + j) * dim + k;
        let mut c = vec![0.0; dim * dim * dim];
        let mut listed = vec![false; c.len()];
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::Structure(format!(
                    "index ({i}, {j}, {k}) out of range for dimension {dim}"
                )));
            }
            c[idx(i, j, k)] = v;
            listed[idx(i, j, k)] = true;
        }
        for &(i, j, k, v) in entries {
            if !listed[idx(j, i, k)] {
                c[idx(j, i, k)] = -v;
            }
        }
        Self::new(name, dim, c)
    }

    /// Parses `{"name": .., "dim": n, "c": [[i, j, k, value], ...]}` with
    /// zero-based indices.
    pub fn from_json(doc: &str) -> Result<Self> {
        let doc: AlgebraDoc = serde_json::from_str(doc)?;
        Self::from_entries(doc.name, doc.dim, &doc.c)
    }

    /// so(3) with `c[i][j][k] = eps_ijk`; the bracket is the cross product.
    pub fn so3() -> Self {
        Self::from_entries("so3", 3, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)])
            .expect("so(3) constants")
    }

    /// Heisenberg algebra h3 with `[e1, e2] = e3`.
    pub fn heisenberg3() -> Self {
        Self::from_entries("heisenberg3", 3, &[(0, 1, 2, 1.0)]).expect("h3 constants")
    }

    pub fn abelian(n: usize) -> Self {
        Self::new(format!("abelian:{n}"), n, vec![0.0; n * n * n]).expect("abelian constants")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    pub fn bracket(&self, xi: &AlgVec, eta: &AlgVec) -> Result<AlgVec> {
        check_dim(self.dim, xi.dim())?;
        check_dim(self.dim, eta.dim())?;
        Ok(self.br(xi, eta))
    }

    pub fn ad_star(&self, xi: &AlgVec, mu: &DualVec) -> Result<DualVec> {
        check_dim(self.dim, xi.dim())?;
        check_dim(self.dim, mu.dim())?;
        Ok(self.ads(xi, mu))
    }

    pub(crate) fn br(&self, xi: &AlgVec, eta: &AlgVec) -> AlgVec {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if xi[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = xi[i] * eta[j];
                if w == 0.0 {
                    continue;
                }
                let row = (i * n + j) * n;
                for k in 0..n {
                    out[k] += w * self.c[row + k];
                }
            }
        }
        AlgVec(out)
    }

    pub(crate) fn ads(&self, xi: &AlgVec, mu: &DualVec) -> DualVec {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if xi[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let row = (i * n + j) * n;
                let mut s = 0.0;
                for k in 0..n {
                    s += self.c[row + k] * mu[k];
                }
                out[j] += xi[i] * s;
            }
        }
        DualVec(out)
    }

    /// Matrix of `ad_xi` acting on coordinates.
    pub fn ad_matrix(&self, xi: &AlgVec) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |k, j| {
            (0..n).map(|i| xi[i] * self.constant(i, j, k)).sum()
        })
    }

    /// Matrix of `mu -> ad*_{.} mu`, i.e. the map `xi -> ad*_xi mu`.
    pub fn ad_star_in_xi(&self, mu: &DualVec) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |j, i| {
            (0..n).map(|k| self.constant(i, j, k) * mu[k]).sum()
        })
    }

    pub fn validate(&self) -> AlgebraReport {
        let n = self.dim;
        let mut antisymmetry: f64 = 0.0;
        let mut jacobi: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    antisymmetry =
                        antisymmetry.max((self.constant(i, j, k) + self.constant(j, i, k)).abs());
                    for l in 0..n {
                        let s: f64 = (0..n)
                            .map(|m| {
                                self.constant(i, j, m) * self.constant(m, k, l)
                                    + self.constant(j, k, m) * self.constant(m, i, l)
                                    + self.constant(k, i, m) * self.constant(m, j, l)
                            })
                            .sum();
                        jacobi = jacobi.max(s.abs());
                    }
                }
            }
        }
        AlgebraReport {
            antisymmetry,
            jacobi,
            pass: antisymmetry <= VALIDATE_TOL && jacobi <= VALIDATE_TOL,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v3() -> impl Strategy<Value = [f64; 3]> {
        prop::array::uniform3(-10.0..10.0f64)
    }

    #[test]
    fn so3_bracket_is_cross_product() {
        let a = StructureAlgebra::so3();
        let x = a.bracket(&[1.0, 0.0, 0.0].into(), &[0.0, 1.0, 0.0].into()).unwrap();
        assert_eq!(x.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn so3_ad_star_example() {
        let a = StructureAlgebra::so3();
        let nu = a.ad_star(&[1.0, 0.0, 0.0].into(), &[0.0, 1.0, 0.0].into()).unwrap();
        assert_eq!(nu.as_slice(), &[0.0, 0.0, -1.0]);
    }

    #[test]
    fn abelian_is_trivial() {
        let a = StructureAlgebra::abelian(3);
        let xi = AlgVec::from([1.0, 2.0, 3.0]);
        let eta = AlgVec::from([-1.0, 0.5, 4.0]);
        assert_eq!(a.bracket(&xi, &eta).unwrap(), AlgVec::zeros(3));
        assert_eq!(a.ad_star(&xi, &eta.flat()).unwrap(), DualVec::zeros(3));
    }

    #[test]
    fn pairing_examples() {
        let xi = AlgVec::from([1.0, 0.0, 0.0]);
        assert_eq!(pair(&[1.0, 2.0, 3.0].into(), &xi).unwrap(), 1.0);
        assert_eq!(pair(&DualVec::zeros(3), &xi).unwrap(), 0.0);
        assert_eq!(pair(&[1.0, 1.0, 1.0].into(), &[1.0, -1.0, 0.0].into()).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = StructureAlgebra::so3();
        let r = a.bracket(&AlgVec::zeros(3), &AlgVec::zeros(2));
        assert!(matches!(r, Err(Error::DimensionMismatch { expected: 3, found: 2 })));
        assert!(pair(&DualVec::zeros(2), &AlgVec::zeros(3)).is_err());
    }

    #[test]
    fn validate_shipped_and_broken() {
        for a in [
            StructureAlgebra::so3(),
            StructureAlgebra::heisenberg3(),
            StructureAlgebra::abelian(4),
        ] {
            assert!(a.validate().pass, "{}", a.name());
        }
        let mut c = vec![0.0; 27];
        c[(0 * 3 + 1) * 3 + 2] = 1.0;
        let broken = StructureAlgebra::new("broken", 3, c).unwrap();
        let report = broken.validate();
        assert!(!report.pass);
        assert_eq!(report.antisymmetry, 1.0);
    }

    #[test]
    fn json_fills_antisymmetric_partners() {
        let a = StructureAlgebra::from_json(
            r#"{"name": "so3", "dim": 3, "c": [[0,1,2,1.0],[1,2,0,1.0],[2,0,1,1.0]]}"#,
        )
        .unwrap();
        assert_eq!(a, StructureAlgebra::so3());
        assert!(StructureAlgebra::from_json(r#"{"name": "x", "dim": 2, "c": [[0,2,0,1.0]]}"#)
            .is_err());
    }

    #[test]
    fn ad_matrices_match_operations() {
        let a = StructureAlgebra::so3();
        let xi = AlgVec::from([0.3, -1.2, 2.0]);
        let eta = AlgVec::from([1.0, 0.5, -0.7]);
        let mu = DualVec::from([0.2, 0.1, -3.0]);
        let m = a.ad_matrix(&xi) * &eta.0;
        assert!((m - a.br(&xi, &eta).0).amax() < 1e-14);
        let s = a.ad_star_in_xi(&mu) * &xi.0;
        assert!((s - a.ads(&xi, &mu).0).amax() < 1e-14);
    }

    proptest! {
        #[test]
        fn ad_star_is_dual_to_bracket(x in v3(), y in v3(), m in v3()) {
            for a in [StructureAlgebra::so3(), StructureAlgebra::heisenberg3()] {
                let (xi, eta, mu) = (AlgVec::from(x), AlgVec::from(y), DualVec::from(m));
                let lhs = a.ads(&xi, &mu).pair(&eta);
                let rhs = mu.pair(&a.br(&xi, &eta));
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn bracket_is_bilinear_and_antisymmetric(x in v3(), x2 in v3(), y in v3(), s in -3.0..3.0f64) {
            let a = StructureAlgebra::so3();
            let (xi, xi2, eta) = (AlgVec::from(x), AlgVec::from(x2), AlgVec::from(y));
            let lhs = a.br(&(&(&xi * s) + &(&xi2 * 2.0)), &eta);
            let rhs = &(&a.br(&xi, &eta) * s) + &(&a.br(&xi2, &eta) * 2.0);
            prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
            prop_assert_eq!(a.br(&xi, &xi), AlgVec::zeros(3));
            prop_assert!((&a.br(&xi, &eta) + &a.br(&eta, &xi)).max_abs() == 0.0);
        }
    }
}
