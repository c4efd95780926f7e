//! Constant turn rate and acceleration.
//!
//! Heading, velocity and acceleration are collinear; `ω` and `a` are held
//! constant over a step. State layout:
//! `[x, y, z, v, a, θ, ω, w, l, h]` with `(x, y, z)` the geometric center.

use super::arc::{ArcCoeffs, TURN_RATE_EPS};
use crate::geometry::normalize_angle;

pub const DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtraState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v: f64,
    pub a: f64,
    pub theta: f64,
    pub omega: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
}

impl CtraState {
    pub fn to_array(&self) -> [f64; DIM] {
        [
            self.x, self.y, self.z, self.v, self.a, self.theta, self.omega, self.w, self.l, self.h,
        ]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        CtraState {
            x: s[0],
            y: s[1],
            z: s[2],
            v: s[3],
            a: s[4],
            theta: s[5],
            omega: s[6],
            w: s[7],
            l: s[8],
            h: s[9],
        }
    }
}

fn coeffs(omega: f64, dt: f64) -> ArcCoeffs {
    let phi = omega * dt;
    if omega.abs() < TURN_RATE_EPS {
        ArcCoeffs::taylor(phi)
    } else {
        ArcCoeffs::new(phi)
    }
}

/// Planar displacement over `dt`, exact integral of `(v + aτ)·(cos, sin)(θ + ωτ)`.
pub fn ctra_displacement(s: &CtraState, dt: f64) -> [f64; 2] {
    let c = coeffs(s.omega, dt);
    let phi = s.omega * dt;
    let (sm, cm) = (s.theta + 0.5 * phi).sin_cos();
    let (s1, c1) = (s.theta + phi).sin_cos();
    let lin = s.v * dt * c.s;
    let quad = s.a * dt * dt;
    [
        lin * cm + quad * (c1 * c.g + s1 * c.k),
        lin * sm + quad * (s1 * c.g - c1 * c.k),
    ]
}

/// One CTRA step. `z`, `a`, `ω` and the sizes are unchanged.
pub fn ctra_transition(s: &CtraState, dt: f64) -> CtraState {
    let [dx, dy] = ctra_displacement(s, dt);
    CtraState {
        x: s.x + dx,
        y: s.y + dy,
        v: s.v + s.a * dt,
        theta: normalize_angle(s.theta + s.omega * dt),
        ..*s
    }
}

/// Analytic Jacobian of [`ctra_transition`] with respect to the state.
pub fn ctra_jacobian(s: &CtraState, dt: f64) -> [[f64; DIM]; DIM] {
    let mut f = identity();
    let c = coeffs(s.omega, dt);
    let phi = s.omega * dt;
    let (sm, cm) = (s.theta + 0.5 * phi).sin_cos();
    let (s1, c1) = (s.theta + phi).sin_cos();
    let t2 = dt * dt;
    let [dx, dy] = ctra_displacement(s, dt);

    let dx_dphi = s.v * dt * (-0.5 * sm * c.s + cm * c.ds)
        + s.a * t2 * (-s1 * c.g + c1 * c.dg + c1 * c.k + s1 * c.dk);
    let dy_dphi = s.v * dt * (0.5 * cm * c.s + sm * c.ds)
        + s.a * t2 * (c1 * c.g + s1 * c.dg + s1 * c.k - c1 * c.dk);

    f[0][3] = dt * cm * c.s;
    f[0][4] = t2 * (c1 * c.g + s1 * c.k);
    f[0][5] = -dy;
    f[0][6] = dt * dx_dphi;

    f[1][3] = dt * sm * c.s;
    f[1][4] = t2 * (s1 * c.g - c1 * c.k);
    f[1][5] = dx;
    f[1][6] = dt * dy_dphi;

    f[3][4] = dt;
    f[5][6] = dt;
    f
}

pub(crate) fn identity() -> [[f64; DIM]; DIM] {
    let mut m = [[0.0; DIM]; DIM];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}
