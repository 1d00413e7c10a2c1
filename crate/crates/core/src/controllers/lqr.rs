use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, RowVector4, SMatrix, Vector4};

use crate::dynamics::{mass_matrix, ModelParams, RobotKind};
use crate::{Error, Result};

type Matrix8 = SMatrix<f64, 8, 8>;

/// Continuous-time linearization `xd = A x + B u` about the upright rest
/// state, with state `(q1 - pi, q2, qd1, qd2)` and `u` the active joint's
/// torque. Only viscous damping enters the linear model.
pub fn linearize_upright(p: &ModelParams, kind: RobotKind) -> (Matrix4<f64>, Vector4<f64>) {
    let [[m11, m12], [_, m22]] = mass_matrix(p, 0.0);
    let m = Matrix2::new(m11, m12, m12, m22);
    let m_inv = m.try_inverse().expect("mass matrix is positive definite");

    // Gradient of the gravity vector at q = (pi, 0).
    let top = p.m2 * p.g * p.r2;
    let dg = Matrix2::new(-p.g * (p.m1 * p.r1 + p.m2 * p.l1) - top, -top, -top, -top);
    let damping = Matrix2::new(p.b1, 0.0, 0.0, p.b2);
    let stiff = -m_inv * dg;
    let damp = -m_inv * damping;

    let mut a = Matrix4::zeros();
    a[(0, 2)] = 1.0;
    a[(1, 3)] = 1.0;
    a.fixed_view_mut::<2, 2>(2, 0).copy_from(&stiff);
    a.fixed_view_mut::<2, 2>(2, 2).copy_from(&damp);

    let col = m_inv.column(kind.active_joint());
    let b = Vector4::new(0.0, 0.0, col[0], col[1]);
    (a, b)
}

/// `A'P + PA - P B R^-1 B' P + Q`.
pub fn riccati_residual(
    a: &Matrix4<f64>,
    b: &Vector4<f64>,
    q: &Matrix4<f64>,
    r: f64,
    p: &Matrix4<f64>,
) -> Matrix4<f64> {
    let pb = p * b;
    a.transpose() * p + p * a - pb * pb.transpose() / r + q
}

/// Stabilizing solution of the continuous algebraic Riccati equation.
///
/// The Hamiltonian matrix sign function gives an initial solution, refined
/// by Newton-Kleinman iterations until the residual stops improving.
pub fn care(a: &Matrix4<f64>, b: &Vector4<f64>, q: &Matrix4<f64>, r: f64) -> Result<Matrix4<f64>> {
    if !(r > 0.0) {
        return Err(Error::Riccati(format!(
            "control weight must be > 0, got {r}"
        )));
    }
    let g = b * b.transpose() / r;
    let mut h = Matrix8::zeros();
    h.fixed_view_mut::<4, 4>(0, 0).copy_from(a);
    h.fixed_view_mut::<4, 4>(0, 4).copy_from(&(-g));
    h.fixed_view_mut::<4, 4>(4, 0).copy_from(&(-q));
    h.fixed_view_mut::<4, 4>(4, 4).copy_from(&(-a.transpose()));

    let w = matrix_sign(h)?;
    // Stable subspace [I; P] spans the kernel of (W + I).
    let eye = Matrix4::<f64>::identity();
    let mut lhs = DMatrix::<f64>::zeros(8, 4);
    let mut rhs = DMatrix::<f64>::zeros(8, 4);
    let w12 = w.fixed_view::<4, 4>(0, 4);
    let w22 = w.fixed_view::<4, 4>(4, 4) + eye;
    let w11 = w.fixed_view::<4, 4>(0, 0) + eye;
    let w21 = w.fixed_view::<4, 4>(4, 0);
    lhs.view_mut((0, 0), (4, 4)).copy_from(&w12);
    lhs.view_mut((4, 0), (4, 4)).copy_from(&w22);
    rhs.view_mut((0, 0), (4, 4)).copy_from(&(-w11));
    rhs.view_mut((4, 0), (4, 4)).copy_from(&(-w21));
    let sol = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Riccati(e.to_string()))?;
    let mut p = Matrix4::from_iterator(sol.iter().copied());
    p = 0.5 * (p + p.transpose());

    let mut best = riccati_residual(a, b, q, r, &p).norm();
    for _ in 0..8 {
        let next = match newton_kleinman_step(a, b, q, r, &p) {
            Some(next) => next,
            None => break,
        };
        let res = riccati_residual(a, b, q, r, &next).norm();
        if res < best {
            p = next;
            best = res;
        } else {
            break;
        }
    }
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::Riccati("non-finite solution".into()));
    }
    let closed = a - b * (b.transpose() * p) / r;
    if closed.complex_eigenvalues().iter().any(|e| e.re >= 0.0) {
        return Err(Error::Riccati("solution is not stabilizing".into()));
    }
    Ok(p)
}

fn matrix_sign(mut z: Matrix8) -> Result<Matrix8> {
    for _ in 0..100 {
        let inv = z.try_inverse().ok_or_else(|| {
            Error::Riccati("Hamiltonian has eigenvalues on the imaginary axis".into())
        })?;
        let det = z.determinant().abs();
        let c = det.powf(1.0 / 8.0);
        let next = 0.5 * (z / c + inv * c);
        let change = (next - z).norm();
        z = next;
        if change <= 1e-13 * z.norm() {
            return Ok(z);
        }
    }
    Err(Error::Riccati("sign iteration did not converge".into()))
}

/// Solves the Lyapunov equation for the closed loop of the current gain.
fn newton_kleinman_step(
    a: &Matrix4<f64>,
    b: &Vector4<f64>,
    q: &Matrix4<f64>,
    r: f64,
    p: &Matrix4<f64>,
) -> Option<Matrix4<f64>> {
    let k = b.transpose() * p / r;
    let acl = a - b * k;
    let rhs = -(q + k.transpose() * k * r);
    // vec(Acl' X + X Acl) = (I kron Acl' + Acl' kron I) vec(X)
    let at = acl.transpose();
    let mut kron = DMatrix::<f64>::zeros(16, 16);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                kron[(i * 4 + j, i * 4 + k)] += at[(j, k)];
                kron[(j * 4 + i, k * 4 + i)] += at[(j, k)];
            }
        }
    }
    let vec_rhs = DVector::from_iterator(16, rhs.iter().copied());
    let x = kron.lu().solve(&vec_rhs)?;
    let x = Matrix4::from_iterator(x.iter().copied());
    Some(0.5 * (x + x.transpose()))
}

/// LQR feedback `u = -K x` together with its cost-to-go matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrGain {
    pub k: RowVector4<f64>,
    pub p: Matrix4<f64>,
}

impl LqrGain {
    pub fn solve(a: &Matrix4<f64>, b: &Vector4<f64>, q: &Matrix4<f64>, r: f64) -> Result<Self> {
        let p = care(a, b, q, r)?;
        let k = b.transpose() * p / r;
        Ok(Self { k, p })
    }

    pub fn control(&self, x: &Vector4<f64>) -> f64 {
        -(self.k * x)[0]
    }

    pub fn cost_to_go(&self, x: &Vector4<f64>) -> f64 {
        (x.transpose() * self.p * x)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_care_matches_closed_form() {
        // xd = x + u, q = 1, r = 1: p = 1 + sqrt(2).
        let mut a = Matrix4::zeros();
        let mut b = Vector4::zeros();
        let mut q = Matrix4::identity();
        for i in 0..4 {
            a[(i, i)] = -1.0 - i as f64;
        }
        a[(0, 0)] = 1.0;
        b[0] = 1.0;
        q[(0, 0)] = 1.0;
        let p = care(&a, &b, &q, 1.0).unwrap();
        assert!((p[(0, 0)] - (1.0 + 2f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn pendulum_residual_is_tiny() {
        for kind in [RobotKind::Pendubot, RobotKind::Acrobot] {
            let p = ModelParams::default();
            let (a, b) = linearize_upright(&p, kind);
            let q = Matrix4::from_diagonal(&Vector4::new(10.0, 10.0, 1.0, 1.0));
            let sol = care(&a, &b, &q, 1.0).unwrap();
            let res = riccati_residual(&a, &b, &q, 1.0, &sol).norm();
            assert!(res < 1e-8, "{kind}: residual {res}");
            assert!((sol - sol.transpose()).norm() < 1e-12);
        }
    }

    #[test]
    fn linearization_matches_finite_differences() {
        use crate::dynamics::{forward_dynamics, State};
        let p = ModelParams {
            cf1: 0.0,
            cf2: 0.0,
            ..ModelParams::default()
        };
        let (a, b) = linearize_upright(&p, RobotKind::Pendubot);
        let h = 1e-6;
        let base = State::UPRIGHT.to_array();
        for j in 0..4 {
            let mut xp = base;
            let mut xm = base;
            xp[j] += h;
            xm[j] -= h;
            let fp = forward_dynamics(&p, &State::from_array(xp), [0.0; 2]).unwrap();
            let fm = forward_dynamics(&p, &State::from_array(xm), [0.0; 2]).unwrap();
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - a[(2 + i, j)]).abs() < 1e-5, "A[{},{j}]", 2 + i);
            }
        }
        let fp = forward_dynamics(&p, &State::UPRIGHT, [h, 0.0]).unwrap();
        let fm = forward_dynamics(&p, &State::UPRIGHT, [-h, 0.0]).unwrap();
        for i in 0..2 {
            assert!(((fp[i] - fm[i]) / (2.0 * h) - b[2 + i]).abs() < 1e-5);
        }
    }
}
