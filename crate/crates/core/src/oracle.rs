//! Finite-difference geometry on trivialized bundles `G x R^m`.
//!
//! These routines know nothing about the closed-form structures they are
//! used to check: flows move the group factor by `exp(t a) g` and the fibre
//! linearly, Jacobi-Lie brackets are differences of ambient matrix fields
//! `M -> M hat(a(M))`, and exterior derivatives use
//! `d theta(X, Y) = X theta(Y) - Y theta(X) - theta([X, Y])`.

use nalgebra::{DMatrix, DVector};

use crate::algebra::AlgVec;
use crate::group::{GroupElement, GroupModel};

/// A point with an optional group factor and a fibre vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BundlePoint {
    pub g: Option<GroupElement>,
    pub x: DVector<f64>,
}

/// A tangent: right-trivialized group part `a` (empty without a group
/// factor) and fibre part `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleTangent {
    pub a: DVector<f64>,
    pub v: DVector<f64>,
}

impl BundlePoint {
    pub fn linear(x: DVector<f64>) -> Self {
        Self { g: None, x }
    }
}

impl BundleTangent {
    pub fn linear(v: DVector<f64>) -> Self {
        Self {
            a: DVector::zeros(0),
            v,
        }
    }
}

/// Point reached after time `t` along the curve `(exp(t a) g, x + t v)`.
pub fn step(model: &GroupModel, p: &BundlePoint, t: f64, u: &BundleTangent) -> BundlePoint {
    BundlePoint {
        g: p
            .g
            .as_ref()
            .map(|g| model.translate(&AlgVec(&u.a * t), g)),
        x: &p.x + &u.v * t,
    }
}

/// Central-difference derivative of `f` along `u` at `p`.
pub fn directional(
    model: &GroupModel,
    f: impl Fn(&BundlePoint) -> f64,
    p: &BundlePoint,
    u: &BundleTangent,
    h: f64,
) -> f64 {
    (f(&step(model, p, h, u)) - f(&step(model, p, -h, u))) / (2.0 * h)
}

fn ambient(model: &GroupModel, p: &BundlePoint, u: &BundleTangent) -> Option<DMatrix<f64>> {
    p.g
        .as_ref()
        .map(|g| g.matrix() * model.hat(&AlgVec(u.a.clone())))
}

/// Jacobi-Lie bracket `[X, Y] = DY.X - DX.Y` at `p`.
pub fn lie_bracket(
    model: &GroupModel,
    x: &impl Fn(&BundlePoint) -> BundleTangent,
    y: &impl Fn(&BundlePoint) -> BundleTangent,
    p: &BundlePoint,
    h: f64,
) -> BundleTangent {
    let (xp, yp) = (x(p), y(p));
    // derivative of the field `f` along the curve generated by `u`
    let deriv = |f: &dyn Fn(&BundlePoint) -> BundleTangent, u: &BundleTangent| {
        let (fp, fm) = (step(model, p, h, u), step(model, p, -h, u));
        let (tp, tm) = (f(&fp), f(&fm));
        let dv = (&tp.v - &tm.v) / (2.0 * h);
        let dm = match (ambient(model, &fp, &tp), ambient(model, &fm, &tm)) {
            (Some(a), Some(b)) => Some((a - b) / (2.0 * h)),
            _ => None,
        };
        (dm, dv)
    };
    let (dy_m, dy_v) = deriv(y, &xp);
    let (dx_m, dx_v) = deriv(x, &yp);
    let a = match (&p.g, dy_m, dx_m) {
        (Some(g), Some(a), Some(b)) => {
            let minv = g
                .matrix()
                .try_inverse()
                .expect("group elements are invertible");
            model.unhat(&(minv * (a - b))).0
        }
        _ => DVector::zeros(0),
    };
    BundleTangent { a, v: dy_v - dx_v }
}

/// `d theta(X, Y)` at `p` by the invariant formula.
pub fn exterior_derivative(
    model: &GroupModel,
    theta: &impl Fn(&BundlePoint, &BundleTangent) -> f64,
    x: &impl Fn(&BundlePoint) -> BundleTangent,
    y: &impl Fn(&BundlePoint) -> BundleTangent,
    p: &BundlePoint,
    h: f64,
) -> f64 {
    let (xp, yp) = (x(p), y(p));
    let x_theta_y = directional(model, |q| theta(q, &y(q)), p, &xp, h);
    let y_theta_x = directional(model, |q| theta(q, &x(q)), p, &yp, h);
    x_theta_y - y_theta_x - theta(p, &lie_bracket(model, x, y, p, h))
}

/// Pushforward of `u` at `p` under a map into a linear space.
pub fn pushforward(
    model: &GroupModel,
    f: impl Fn(&BundlePoint) -> DVector<f64>,
    p: &BundlePoint,
    u: &BundleTangent,
    h: f64,
) -> DVector<f64> {
    (f(&step(model, p, h, u)) - f(&step(model, p, -h, u))) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;

    #[test]
    fn right_invariant_fields_bracket_like_the_algebra() {
        let mut s = Sampler::new(1);
        for model in [GroupModel::so3(), GroupModel::heisenberg3()] {
            let (a, b) = (s.alg(3, 1.0), s.alg(3, 1.0));
            let p = BundlePoint {
                g: Some(s.element(&model)),
                x: DVector::zeros(0),
            };
            let fa = |_: &BundlePoint| BundleTangent { a: a.0.clone(), v: DVector::zeros(0) };
            let fb = |_: &BundlePoint| BundleTangent { a: b.0.clone(), v: DVector::zeros(0) };
            let br = lie_bracket(&model, &fa, &fb, &p, 1e-4);
            let expected = model.algebra().bracket(&a, &b).unwrap();
            assert!((br.a - expected.0).amax() < 1e-8);
        }
    }

    #[test]
    fn linear_bracket_of_linear_fields() {
        // X = A x, Y = B x on R^2: [X, Y] = (BA - AB) x
        let model = GroupModel::abelian(1);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let x = |q: &BundlePoint| BundleTangent::linear(&a * &q.x);
        let y = |q: &BundlePoint| BundleTangent::linear(&b * &q.x);
        let p = BundlePoint::linear(DVector::from_vec(vec![0.5, -1.0]));
        let br = lie_bracket(&model, &x, &y, &p, 1e-3);
        let expected = (&b * &a - &a * &b) * &p.x;
        assert!((br.v - expected).amax() < 1e-10);
    }

    #[test]
    fn d_of_exact_form_vanishes() {
        // theta = d f for f(x) = x0^2 x1
        let model = GroupModel::abelian(1);
        let theta = |q: &BundlePoint, t: &BundleTangent| {
            2.0 * q.x[0] * q.x[1] * t.v[0] + q.x[0] * q.x[0] * t.v[1]
        };
        let x = |q: &BundlePoint| BundleTangent::linear(DVector::from_vec(vec![q.x[1], 1.0]));
        let y = |q: &BundlePoint| BundleTangent::linear(DVector::from_vec(vec![1.0, q.x[0] * q.x[0]]));
        let p = BundlePoint::linear(DVector::from_vec(vec![0.3, 0.7]));
        assert!(exterior_derivative(&model, &theta, &x, &y, &p, 1e-4).abs() < 1e-8);
    }
}
