//! Reference equations of motion derived from the Lagrangian with
//! hyper-dual numbers, independent of the library's closed-form terms.

#![allow(dead_code)]

use std::ops::{Add, Mul, Neg, Sub};

use swingup::{ModelParams, State};

/// `a + b e1 + c e2 + d e1 e2` with `e1^2 = e2^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperDual {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl HyperDual {
    pub fn constant(a: f64) -> Self {
        Self {
            a,
            b: 0.0,
            c: 0.0,
            d: 0.0,
        }
    }

    fn lift(self, f: f64, df: f64, ddf: f64) -> Self {
        Self {
            a: f,
            b: df * self.b,
            c: df * self.c,
            d: df * self.d + ddf * self.b * self.c,
        }
    }

    pub fn sin(self) -> Self {
        self.lift(self.a.sin(), self.a.cos(), -self.a.sin())
    }

    pub fn cos(self) -> Self {
        self.lift(self.a.cos(), -self.a.sin(), -self.a.cos())
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
            d: self.d + o.d,
        }
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            a: self.a * o.a,
            b: self.a * o.b + self.b * o.a,
            c: self.a * o.c + self.c * o.a,
            d: self.a * o.d + self.b * o.c + self.c * o.b + self.d * o.a,
        }
    }
}

impl Mul<HyperDual> for f64 {
    type Output = HyperDual;
    fn mul(self, o: HyperDual) -> HyperDual {
        HyperDual::constant(self) * o
    }
}

/// Kinetic minus potential energy from link centre-of-mass velocities and
/// inertias about the centres of mass. Angles: q1 from hanging, q2 relative.
pub fn lagrangian(p: &ModelParams, q: [HyperDual; 2], qd: [HyperDual; 2]) -> HyperDual {
    let c = HyperDual::constant;
    let (q1, q12) = (q[0], q[0] + q[1]);
    let w12 = qd[0] + qd[1];

    // positions: x right, y up
    let x1d = c(p.r1) * q1.cos() * qd[0];
    let y1d = c(p.r1) * q1.sin() * qd[0];
    let x2d = c(p.l1) * q1.cos() * qd[0] + c(p.r2) * q12.cos() * w12;
    let y2d = c(p.l1) * q1.sin() * qd[0] + c(p.r2) * q12.sin() * w12;

    let ic1 = p.i1 - p.m1 * p.r1 * p.r1;
    let ic2 = p.i2 - p.m2 * p.r2 * p.r2;
    let half = c(0.5);
    let kinetic = half * c(p.m1) * (x1d * x1d + y1d * y1d)
        + half * c(ic1) * qd[0] * qd[0]
        + half * c(p.m2) * (x2d * x2d + y2d * y2d)
        + half * c(ic2) * w12 * w12;

    let y1 = -(c(p.r1) * q1.cos());
    let y2 = -(c(p.l1) * q1.cos()) - c(p.r2) * q12.cos();
    let potential = c(p.g) * (c(p.m1) * y1 + c(p.m2) * y2);
    kinetic - potential
}

/// Evaluates the Lagrangian with the chosen coordinates (0, 1 = q; 2, 3 =
/// qd) seeded along e1 and e2.
fn probe(p: &ModelParams, s: &State, i: Option<usize>, j: Option<usize>) -> HyperDual {
    let x = s.to_array();
    let mut v: Vec<HyperDual> = x.iter().map(|&a| HyperDual::constant(a)).collect();
    if let Some(i) = i {
        v[i].b = 1.0;
    }
    if let Some(j) = j {
        v[j].c = 1.0;
    }
    lagrangian(p, [v[0], v[1]], [v[2], v[3]])
}

/// Joint accelerations from the Euler-Lagrange equations
/// `d/dt dL/dqd - dL/dq = tau - friction`.
pub fn reference_qdd(p: &ModelParams, s: &State, tau: [f64; 2]) -> [f64; 2] {
    let qd = [s.qd1, s.qd2];
    let mut m = [[0.0; 2]; 2];
    let mut rhs = [0.0; 2];
    for i in 0..2 {
        for (j, slot) in m[i].iter_mut().enumerate() {
            *slot = probe(p, s, Some(2 + i), Some(2 + j)).d;
        }
        let mixed: f64 = (0..2)
            .map(|j| probe(p, s, Some(2 + i), Some(j)).d * qd[j])
            .sum();
        let dl_dq = probe(p, s, Some(i), None).b;
        let (b, cf) = if i == 0 { (p.b1, p.cf1) } else { (p.b2, p.cf2) };
        let friction = b * qd[i] + cf * (100.0 * qd[i]).tanh();
        rhs[i] = tau[i] - friction - mixed + dl_dq;
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ]
}

/// Total mechanical energy from the same Lagrangian terms.
pub fn reference_energy(p: &ModelParams, s: &State) -> f64 {
    let mut flipped = *s;
    flipped.qd1 = 0.0;
    flipped.qd2 = 0.0;
    let potential = -probe(p, &flipped, None, None).a;
    let lag = probe(p, s, None, None).a;
    let kinetic = lag + potential;
    kinetic + potential
}
