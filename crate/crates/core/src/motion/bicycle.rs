//! Kinematic bicycle with front-wheel steering.
//!
//! The state tracks the gravity center on the ground, not the box center.
//! Speed and steering angle are constant over a step; the velocity points
//! along `θ + β`, where the slip angle β follows from the steering angle and
//! the rear-axle distance. State layout:
//! `[x', y', z, v, a, θ, δ, w, l, h]`.

use std::f64::consts::FRAC_PI_2;

use super::arc::{ArcCoeffs, TURN_RATE_EPS};
use super::ctra::{identity, DIM};
use crate::geometry::normalize_angle;

/// Steering angles are kept strictly inside (−π/2, π/2).
pub const MAX_STEER: f64 = FRAC_PI_2 - 1e-6;

/// Wheelbase and rear-axle placement relative to the box length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicycleGeometry {
    /// Wheelbase divided by object length (γ).
    pub wheelbase_ratio: f64,
    /// Rear-axle-to-gravity-center distance as a fraction of the wheelbase.
    pub rear_axle_fraction: f64,
}

impl BicycleGeometry {
    pub fn rear_axle(&self, length: f64) -> f64 {
        self.rear_axle_fraction * self.wheelbase_ratio * length
    }

    /// Signed distance from the gravity center forward to the box center,
    /// assuming the wheelbase is centered in the footprint.
    pub fn center_offset(&self, length: f64) -> f64 {
        self.wheelbase_ratio * length * (0.5 - self.rear_axle_fraction)
    }

    /// β = atan(l_r / (γ l) · tan δ). Depends on δ only through the rear-axle fraction.
    pub fn slip_angle(&self, steer: f64) -> f64 {
        (self.rear_axle_fraction * steer.tan()).atan()
    }

    /// dβ/dδ.
    pub fn slip_angle_derivative(&self, steer: f64) -> f64 {
        let t = steer.tan();
        let f = self.rear_axle_fraction;
        f * (1.0 + t * t) / (1.0 + f * f * t * t)
    }

    /// ω = v sin β / l_r.
    pub fn turn_rate(&self, v: f64, steer: f64, length: f64) -> f64 {
        v * self.slip_angle(steer).sin() / self.rear_axle(length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v: f64,
    pub a: f64,
    pub theta: f64,
    pub delta: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
}

impl BicState {
    pub fn to_array(&self) -> [f64; DIM] {
        [
            self.x, self.y, self.z, self.v, self.a, self.theta, self.delta, self.w, self.l, self.h,
        ]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        BicState {
            x: s[0],
            y: s[1],
            z: s[2],
            v: s[3],
            a: s[4],
            theta: s[5],
            delta: s[6],
            w: s[7],
            l: s[8],
            h: s[9],
        }
    }
}

pub fn clamp_steer(delta: f64) -> f64 {
    normalize_angle(delta).clamp(-MAX_STEER, MAX_STEER)
}

struct Step {
    beta: f64,
    omega: f64,
    psi: f64,
    coeffs: ArcCoeffs,
}

fn step(s: &BicState, dt: f64, geo: &BicycleGeometry) -> Step {
    let beta = geo.slip_angle(s.delta);
    let omega = s.v * beta.sin() / geo.rear_axle(s.l);
    let phi = omega * dt;
    let coeffs = if omega.abs() < TURN_RATE_EPS {
        ArcCoeffs::taylor(phi)
    } else {
        ArcCoeffs::new(phi)
    };
    Step {
        beta,
        omega,
        psi: s.theta + beta + 0.5 * phi,
        coeffs,
    }
}

/// Gravity-center displacement over `dt`: exact integral of
/// `v·(cos, sin)(θ + β + ωτ)`.
pub fn bic_displacement(s: &BicState, dt: f64, geo: &BicycleGeometry) -> [f64; 2] {
    let st = step(s, dt, geo);
    let (sp, cp) = st.psi.sin_cos();
    let r = s.v * dt * st.coeffs.s;
    [r * cp, r * sp]
}

/// One bicycle step. Speed, acceleration, steering, z and sizes are unchanged.
pub fn bic_transition(s: &BicState, dt: f64, geo: &BicycleGeometry) -> BicState {
    let st = step(s, dt, geo);
    let (sp, cp) = st.psi.sin_cos();
    let r = s.v * dt * st.coeffs.s;
    BicState {
        x: s.x + r * cp,
        y: s.y + r * sp,
        theta: normalize_angle(s.theta + st.omega * dt),
        ..*s
    }
}

/// Analytic Jacobian of [`bic_transition`].
pub fn bic_jacobian(s: &BicState, dt: f64, geo: &BicycleGeometry) -> [[f64; DIM]; DIM] {
    let mut f = identity();
    let st = step(s, dt, geo);
    let c = st.coeffs;
    let (sp, cp) = st.psi.sin_cos();
    let lr = geo.rear_axle(s.l);
    let dbeta = geo.slip_angle_derivative(s.delta);

    // partials of φ = v·dt·sin β / l_r
    let dphi_dv = dt * st.beta.sin() / lr;
    let dphi_ddelta = dt * s.v * st.beta.cos() / lr * dbeta;
    let dphi_dl = -st.omega * dt / s.l;

    // partials of ψ = θ + β + φ/2
    let dpsi_ddelta = dbeta + 0.5 * dphi_ddelta;
    let dpsi_dv = 0.5 * dphi_dv;
    let dpsi_dl = 0.5 * dphi_dl;

    let vt = s.v * dt;
    // d(Δx) = dt cosψ s dv + v dt (−sinψ s dψ + cosψ s' dφ), likewise for Δy
    let x_part = |dpsi: f64, dphi: f64| vt * (-sp * c.s * dpsi + cp * c.ds * dphi);
    let y_part = |dpsi: f64, dphi: f64| vt * (cp * c.s * dpsi + sp * c.ds * dphi);

    f[0][3] = dt * cp * c.s + x_part(dpsi_dv, dphi_dv);
    f[0][5] = x_part(1.0, 0.0);
    f[0][6] = x_part(dpsi_ddelta, dphi_ddelta);
    f[0][8] = x_part(dpsi_dl, dphi_dl);

    f[1][3] = dt * sp * c.s + y_part(dpsi_dv, dphi_dv);
    f[1][5] = y_part(1.0, 0.0);
    f[1][6] = y_part(dpsi_ddelta, dphi_ddelta);
    f[1][8] = y_part(dpsi_dl, dphi_dl);

    f[5][3] = dphi_dv;
    f[5][6] = dphi_ddelta;
    f[5][8] = dphi_dl;
    f
}
