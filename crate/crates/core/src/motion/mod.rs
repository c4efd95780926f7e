//! Per-category motion models under an extended Kalman filter.
//!
//! CTRA and the kinematic bicycle are nonlinear with closed-form transitions
//! and analytic Jacobians; CA and CV are linear baselines kept for ablations.
//! Every model projects to the same measurement vector
//! `[x, y, z, w, l, h, yaw, vx, vy]`, velocity rows used only when the
//! detection carries velocity and velocity updates are enabled.

pub mod arc;
pub mod bicycle;
pub mod ctra;
pub mod linear;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, BoxState};

pub use bicycle::{bic_jacobian, bic_transition, BicState, BicycleGeometry};
pub use ctra::{ctra_jacobian, ctra_transition, CtraState};

/// Number of measurement rows with velocity.
pub const MEAS_DIM: usize = 9;
const YAW_ROW: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionModel {
    Ctra,
    #[serde(alias = "bic")]
    Bicycle,
    Ca,
    Cv,
}

impl MotionModel {
    pub fn name(self) -> &'static str {
        match self {
            MotionModel::Ctra => "ctra",
            MotionModel::Bicycle => "bicycle",
            MotionModel::Ca => "ca",
            MotionModel::Cv => "cv",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            MotionModel::Ctra | MotionModel::Bicycle => ctra::DIM,
            MotionModel::Ca => linear::CA_DIM,
            MotionModel::Cv => linear::CV_DIM,
        }
    }

    fn layout(self) -> &'static [Component] {
        use Component::*;
        match self {
            MotionModel::Ctra => &[X, Y, Z, Speed, Accel, Yaw, Turn, W, L, H],
            MotionModel::Bicycle => &[X, Y, Z, Speed, Accel, Yaw, Steer, W, L, H],
            MotionModel::Ca => &[X, Y, Z, Vx, Vy, Ax, Ay, Yaw, W, L, H],
            MotionModel::Cv => &[X, Y, Z, Vx, Vy, Yaw, W, L, H],
        }
    }

    fn index_of(self, c: Component) -> Option<usize> {
        self.layout().iter().position(|&x| x == c)
    }

    fn yaw_index(self) -> usize {
        self.index_of(Component::Yaw).expect("every layout carries yaw")
    }
}

impl std::fmt::Display for MotionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Component {
    X,
    Y,
    Z,
    Speed,
    Accel,
    Vx,
    Vy,
    Ax,
    Ay,
    Yaw,
    Turn,
    Steer,
    W,
    L,
    H,
}

/// Per-component variances for process noise and initial covariance.
/// `v` and `a` also seed the Cartesian velocity/acceleration entries of the
/// linear models; `turn` covers both ω and δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateNoise {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v: f64,
    pub a: f64,
    pub yaw: f64,
    pub turn: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
}

impl StateNoise {
    pub fn default_process() -> Self {
        StateNoise {
            x: 0.1,
            y: 0.1,
            z: 0.01,
            v: 1.0,
            a: 0.5,
            yaw: 0.02,
            turn: 0.05,
            w: 0.001,
            l: 0.001,
            h: 0.001,
        }
    }

    pub fn default_initial() -> Self {
        StateNoise {
            x: 0.5,
            y: 0.5,
            z: 0.5,
            v: 10.0,
            a: 4.0,
            yaw: 0.5,
            turn: 0.5,
            w: 0.1,
            l: 0.1,
            h: 0.1,
        }
    }

    fn get(&self, c: Component) -> f64 {
        use Component::*;
        match c {
            X => self.x,
            Y => self.y,
            Z => self.z,
            Speed | Vx | Vy => self.v,
            Accel | Ax | Ay => self.a,
            Yaw => self.yaw,
            Turn | Steer => self.turn,
            W => self.w,
            L => self.l,
            H => self.h,
        }
    }

    pub(crate) fn values(&self) -> [(&'static str, f64); 10] {
        [
            ("x", self.x),
            ("y", self.y),
            ("z", self.z),
            ("v", self.v),
            ("a", self.a),
            ("yaw", self.yaw),
            ("turn", self.turn),
            ("w", self.w),
            ("l", self.l),
            ("h", self.h),
        ]
    }
}

/// Measurement noise variances, in measurement-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementNoise {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        MeasurementNoise {
            x: 0.1,
            y: 0.1,
            z: 0.1,
            w: 0.05,
            l: 0.05,
            h: 0.05,
            yaw: 0.05,
            vx: 0.5,
            vy: 0.5,
        }
    }
}

impl MeasurementNoise {
    pub fn values(&self) -> [f64; MEAS_DIM] {
        [self.x, self.y, self.z, self.w, self.l, self.h, self.yaw, self.vx, self.vy]
    }

    pub fn uniform(variance: f64) -> Self {
        let v = variance;
        MeasurementNoise {
            x: v,
            y: v,
            z: v,
            w: v,
            l: v,
            h: v,
            yaw: v,
            vx: v,
            vy: v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionParams {
    /// Frame interval in seconds.
    pub dt: f64,
    pub bicycle: BicycleGeometry,
    pub process_noise: StateNoise,
    pub measurement_noise: MeasurementNoise,
    pub initial_covariance: StateNoise,
    /// Feed detection velocities into the update when present.
    pub use_velocity: bool,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            dt: 0.5,
            bicycle: BicycleGeometry {
                wheelbase_ratio: 0.8,
                rear_axle_fraction: 0.5,
            },
            process_noise: StateNoise::default_process(),
            measurement_noise: MeasurementNoise::default(),
            initial_covariance: StateNoise::default_initial(),
            use_velocity: true,
        }
    }
}

impl MotionParams {
    pub fn with_dt(&self, dt: f64) -> Self {
        MotionParams { dt, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("frame interval must be positive, got {}", self.dt)));
        }
        let ratio = self.bicycle.wheelbase_ratio;
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::Config(format!("wheelbase ratio must lie in (0, 1], got {ratio}")));
        }
        let f = self.bicycle.rear_axle_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Config(format!("rear-axle fraction must lie in (0, 1], got {f}")));
        }
        for (name, noise) in [("process_noise", &self.process_noise), ("initial_covariance", &self.initial_covariance)] {
            for (field, v) in noise.values() {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name}.{field} must be a positive variance, got {v}")));
                }
            }
        }
        if self.measurement_noise.values().iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config("measurement noise variances must be non-negative".into()));
        }
        Ok(())
    }

    fn q(&self, model: MotionModel) -> DMatrix<f64> {
        diag(model.layout().iter().map(|&c| self.process_noise.get(c)))
    }
}

/// Mean and covariance for one trajectory under one motion model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub model: MotionModel,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl TrackState {
    pub fn ctra(&self) -> Option<CtraState> {
        (self.model == MotionModel::Ctra).then(|| CtraState::from_slice(self.mean.as_slice()))
    }

    pub fn bicycle(&self) -> Option<BicState> {
        (self.model == MotionModel::Bicycle).then(|| BicState::from_slice(self.mean.as_slice()))
    }

    pub fn from_ctra(s: &CtraState, cov: DMatrix<f64>) -> Self {
        TrackState {
            model: MotionModel::Ctra,
            mean: DVector::from_row_slice(&s.to_array()),
            cov,
        }
    }

    pub fn from_bicycle(s: &BicState, cov: DMatrix<f64>) -> Self {
        TrackState {
            model: MotionModel::Bicycle,
            mean: DVector::from_row_slice(&s.to_array()),
            cov,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite()) && self.cov.iter().all(|v| v.is_finite())
    }

    fn normalize(&mut self) {
        let yaw = self.model.yaw_index();
        self.mean[yaw] = normalize_angle(self.mean[yaw]);
        if self.model == MotionModel::Bicycle {
            self.mean[6] = bicycle::clamp_steer(self.mean[6]);
        }
        symmetrize(&mut self.cov);
    }
}

fn diag(values: impl Iterator<Item = f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_iterator(values.size_hint().0, values))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> DMatrix<f64> {
    DMatrix::from_fn(N, N, |i, j| rows[i][j])
}

/// Mean propagation `f(x)` for the state's model.
pub fn transition(state: &TrackState, p: &MotionParams) -> DVector<f64> {
    let s = state.mean.as_slice();
    let out: Vec<f64> = match state.model {
        MotionModel::Ctra => ctra_transition(&CtraState::from_slice(s), p.dt).to_array().to_vec(),
        MotionModel::Bicycle => bic_transition(&BicState::from_slice(s), p.dt, &p.bicycle).to_array().to_vec(),
        MotionModel::Ca => linear::ca_transition(s, p.dt),
        MotionModel::Cv => linear::cv_transition(s, p.dt),
    };
    DVector::from_vec(out)
}

/// Jacobian ∂f/∂x evaluated at the state's mean.
pub fn jacobian(state: &TrackState, p: &MotionParams) -> DMatrix<f64> {
    let s = state.mean.as_slice();
    match state.model {
        MotionModel::Ctra => from_rows(ctra_jacobian(&CtraState::from_slice(s), p.dt)),
        MotionModel::Bicycle => from_rows(bic_jacobian(&BicState::from_slice(s), p.dt, &p.bicycle)),
        MotionModel::Ca => rows_to_matrix(linear::ca_jacobian(p.dt)),
        MotionModel::Cv => rows_to_matrix(linear::cv_jacobian(p.dt)),
    }
}

fn rows_to_matrix(rows: Vec<Vec<f64>>) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// EKF predict: `x ← f(x)`, `P ← F P Fᵀ + Q`.
pub fn predict(state: &TrackState, p: &MotionParams) -> Result<TrackState> {
    if !state.is_finite() {
        return Err(Error::NonFinite("track state before predict"));
    }
    let f = jacobian(state, p);
    let mut out = TrackState {
        model: state.model,
        mean: transition(state, p),
        cov: &f * &state.cov * f.transpose() + p.q(state.model),
    };
    out.normalize();
    if !out.is_finite() {
        return Err(Error::NonFinite("track state after predict"));
    }
    Ok(out)
}

/// Full measurement vector `h(x)` = `[x, y, z, w, l, h, yaw, vx, vy]`.
pub fn measurement_vector(state: &TrackState, p: &MotionParams) -> [f64; MEAS_DIM] {
    let s = state.mean.as_slice();
    match state.model {
        MotionModel::Ctra => {
            let (sn, cs) = s[5].sin_cos();
            [s[0], s[1], s[2], s[7], s[8], s[9], s[5], s[3] * cs, s[3] * sn]
        }
        MotionModel::Bicycle => {
            let geo = &p.bicycle;
            let off = geo.center_offset(s[8]);
            let (sn, cs) = s[5].sin_cos();
            let (se, ce) = (s[5] + geo.slip_angle(s[6])).sin_cos();
            [
                s[0] + off * cs,
                s[1] + off * sn,
                s[2],
                s[7],
                s[8],
                s[9],
                s[5],
                s[3] * ce,
                s[3] * se,
            ]
        }
        MotionModel::Ca => [s[0], s[1], s[2], s[8], s[9], s[10], s[7], s[3], s[4]],
        MotionModel::Cv => [s[0], s[1], s[2], s[6], s[7], s[8], s[5], s[3], s[4]],
    }
}

/// Jacobian of [`measurement_vector`], `MEAS_DIM × dim`.
pub fn measurement_jacobian(state: &TrackState, p: &MotionParams) -> DMatrix<f64> {
    let model = state.model;
    let s = state.mean.as_slice();
    let mut h = DMatrix::zeros(MEAS_DIM, model.dim());
    let direct = |c: Component| model.index_of(c);
    for (row, c) in [
        (0, Component::X),
        (1, Component::Y),
        (2, Component::Z),
        (3, Component::W),
        (4, Component::L),
        (5, Component::H),
        (6, Component::Yaw),
    ] {
        h[(row, direct(c).expect("pose and size in every layout"))] = 1.0;
    }
    match model {
        MotionModel::Ctra => {
            let (sn, cs) = s[5].sin_cos();
            h[(7, 3)] = cs;
            h[(7, 5)] = -s[3] * sn;
            h[(8, 3)] = sn;
            h[(8, 5)] = s[3] * cs;
        }
        MotionModel::Bicycle => {
            let geo = &p.bicycle;
            let off = geo.center_offset(s[8]);
            let doff_dl = geo.wheelbase_ratio * (0.5 - geo.rear_axle_fraction);
            let (sn, cs) = s[5].sin_cos();
            h[(0, 5)] = -off * sn;
            h[(0, 8)] = doff_dl * cs;
            h[(1, 5)] = off * cs;
            h[(1, 8)] = doff_dl * sn;
            let (se, ce) = (s[5] + geo.slip_angle(s[6])).sin_cos();
            let dbeta = geo.slip_angle_derivative(s[6]);
            h[(7, 3)] = ce;
            h[(7, 5)] = -s[3] * se;
            h[(7, 6)] = -s[3] * se * dbeta;
            h[(8, 3)] = se;
            h[(8, 5)] = s[3] * ce;
            h[(8, 6)] = s[3] * ce * dbeta;
        }
        MotionModel::Ca | MotionModel::Cv => {
            h[(7, 3)] = 1.0;
            h[(8, 4)] = 1.0;
        }
    }
    h
}

/// Observable box of a track: geometric center, size, heading and planar velocity.
/// Score and category are left for the caller.
pub fn measure(state: &TrackState, p: &MotionParams) -> BoxState {
    let m = measurement_vector(state, p);
    BoxState::new([m[0], m[1], m[2]], [m[3], m[4], m[5]], m[6]).with_velocity(m[7], m[8])
}

fn detection_vector(d: &BoxState) -> [f64; MEAS_DIM] {
    let [vx, vy] = d.velocity.unwrap_or([0.0, 0.0]);
    [d.x, d.y, d.z, d.w, d.l, d.h, d.yaw, vx, vy]
}

/// EKF update against one detection. The heading innovation is wrapped to (−π, π].
pub fn update(state: &TrackState, d: &BoxState, p: &MotionParams) -> Result<TrackState> {
    let rows = if p.use_velocity && d.velocity.is_some() { MEAS_DIM } else { YAW_ROW + 1 };
    let full_h = measurement_jacobian(state, p);
    let h = full_h.rows(0, rows).into_owned();
    let predicted = measurement_vector(state, p);
    let observed = detection_vector(d);
    let mut innovation = DVector::from_iterator(rows, (0..rows).map(|i| observed[i] - predicted[i]));
    innovation[YAW_ROW] = normalize_angle(innovation[YAW_ROW]);

    let r = DMatrix::from_diagonal(&DVector::from_row_slice(&p.measurement_noise.values()[..rows]));
    let hp = &h * &state.cov;
    let s = &hp * h.transpose() + &r;
    let chol = s.cholesky().ok_or(Error::SingularInnovation)?;
    // K = P Hᵀ S⁻¹ = (S⁻¹ H P)ᵀ for symmetric P and S
    let gain = chol.solve(&hp).transpose();

    let n = state.model.dim();
    let i_kh = DMatrix::identity(n, n) - &gain * &h;
    let mut out = TrackState {
        model: state.model,
        mean: &state.mean + &gain * innovation,
        cov: &i_kh * &state.cov * i_kh.transpose() + &gain * r * gain.transpose(),
    };
    out.normalize();
    if !out.is_finite() {
        return Err(Error::NonFinite("track state after update"));
    }
    Ok(out)
}

/// Starts a track from a detection. Turn rate, steering and acceleration start at zero.
/// The speed variance falls back to the initial covariance when the detection
/// carries no velocity.
pub fn init_track(d: &BoxState, model: MotionModel, p: &MotionParams) -> TrackState {
    let [vx, vy] = d.velocity.unwrap_or([0.0, 0.0]);
    let speed = vx.hypot(vy);
    let mean: Vec<f64> = match model {
        MotionModel::Ctra => vec![d.x, d.y, d.z, speed, 0.0, d.yaw, 0.0, d.w, d.l, d.h],
        MotionModel::Bicycle => {
            let off = p.bicycle.center_offset(d.l);
            let (sn, cs) = d.yaw.sin_cos();
            vec![d.x - off * cs, d.y - off * sn, d.z, speed, 0.0, d.yaw, 0.0, d.w, d.l, d.h]
        }
        MotionModel::Ca => vec![d.x, d.y, d.z, vx, vy, 0.0, 0.0, d.yaw, d.w, d.l, d.h],
        MotionModel::Cv => vec![d.x, d.y, d.z, vx, vy, d.yaw, d.w, d.l, d.h],
    };
    let has_velocity = d.velocity.is_some();
    let cov = diag(model.layout().iter().map(|&c| match c {
        Component::Speed if has_velocity => p.measurement_noise.vx.max(p.measurement_noise.vy).max(1e-6),
        Component::Vx if has_velocity => p.measurement_noise.vx.max(1e-6),
        Component::Vy if has_velocity => p.measurement_noise.vy.max(1e-6),
        other => p.initial_covariance.get(other),
    }));
    let mut state = TrackState {
        model,
        mean: DVector::from_vec(mean),
        cov,
    };
    state.normalize();
    state
}
