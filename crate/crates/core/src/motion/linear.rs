//! Linear constant-acceleration and constant-velocity baselines.
//!
//! CA layout: `[x, y, z, vx, vy, ax, ay, θ, w, l, h]` (11).
//! CV layout: `[x, y, z, vx, vy, θ, w, l, h]` (9).
//! Heading is carried as a random walk in both.

pub const CA_DIM: usize = 11;
pub const CV_DIM: usize = 9;

pub fn ca_transition(s: &[f64], dt: f64) -> Vec<f64> {
    let mut out = s.to_vec();
    let h = 0.5 * dt * dt;
    out[0] += s[3] * dt + s[5] * h;
    out[1] += s[4] * dt + s[6] * h;
    out[3] += s[5] * dt;
    out[4] += s[6] * dt;
    out
}

pub fn ca_jacobian(dt: f64) -> Vec<Vec<f64>> {
    let mut f = eye(CA_DIM);
    let h = 0.5 * dt * dt;
    f[0][3] = dt;
    f[0][5] = h;
    f[1][4] = dt;
    f[1][6] = h;
    f[3][5] = dt;
    f[4][6] = dt;
    f
}

pub fn cv_transition(s: &[f64], dt: f64) -> Vec<f64> {
    let mut out = s.to_vec();
    out[0] += s[3] * dt;
    out[1] += s[4] * dt;
    out
}

pub fn cv_jacobian(dt: f64) -> Vec<Vec<f64>> {
    let mut f = eye(CV_DIM);
    f[0][3] = dt;
    f[1][4] = dt;
    f
}

fn eye(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_acceleration_step() {
        let s = [0.0, 0.0, 1.0, 2.0, -1.0, 1.0, 0.0, 0.3, 1.8, 4.5, 1.5];
        let out = ca_transition(&s, 0.5);
        assert_eq!(out[0], 2.0 * 0.5 + 0.5 * 0.25);
        assert_eq!(out[1], -0.5);
        assert_eq!(out[3], 2.5);
        assert_eq!(out[7], 0.3);
    }

    #[test]
    fn constant_velocity_step() {
        let s = [1.0, 1.0, 0.0, 4.0, 2.0, 0.0, 1.8, 4.5, 1.5];
        let out = cv_transition(&s, 0.5);
        assert_eq!(&out[..2], &[3.0, 2.0]);
        assert_eq!(&out[2..], &s[2..]);
    }
}
