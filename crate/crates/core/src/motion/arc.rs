//! Coefficients of the constant-turn arc integrals.
//!
//! For a body turning through angle `φ = ωT` over one step, the displacement
//! integrals reduce to three bounded functions of φ:
//!
//! - `s(φ) = sin(φ/2) / (φ/2)`
//! - `g(φ) = (1 − cos φ) / φ²`
//! - `k(φ) = (φ − sin φ) / φ²`
//!
//! Written this way the closed form has no `1/ω` or `1/ω²` cancellation, so it
//! stays accurate right down to the straight-line branch.

/// Below this turn rate (rad/s) the transition uses the second-order Taylor branch.
pub const TURN_RATE_EPS: f64 = 1e-6;

/// Below this |φ| the direct formulas lose digits; a longer series is used.
const SERIES_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcCoeffs {
    pub s: f64,
    pub ds: f64,
    pub g: f64,
    pub dg: f64,
    pub k: f64,
    pub dk: f64,
}

impl ArcCoeffs {
    /// Second-order Taylor expansion in φ, used when the turn rate is
    /// below [`TURN_RATE_EPS`].
    pub fn taylor(phi: f64) -> Self {
        let p2 = phi * phi;
        ArcCoeffs {
            s: 1.0 - p2 / 24.0,
            ds: -phi / 12.0,
            g: 0.5 - p2 / 24.0,
            dg: -phi / 12.0,
            k: phi / 6.0,
            dk: 1.0 / 6.0 - p2 / 40.0,
        }
    }

    pub fn new(phi: f64) -> Self {
        if phi.abs() < SERIES_LIMIT {
            Self::series(phi)
        } else {
            Self::direct(phi)
        }
    }

    fn series(phi: f64) -> Self {
        let p2 = phi * phi;
        let p3 = p2 * phi;
        let p4 = p2 * p2;
        let p5 = p4 * phi;
        let p6 = p4 * p2;
        let p7 = p6 * phi;
        let p8 = p4 * p4;
        ArcCoeffs {
            s: 1.0 - p2 / 24.0 + p4 / 1920.0 - p6 / 322_560.0,
            ds: -phi / 12.0 + p3 / 480.0 - p5 / 53_760.0,
            g: 0.5 - p2 / 24.0 + p4 / 720.0 - p6 / 40_320.0 + p8 / 3_628_800.0,
            dg: -phi / 12.0 + p3 / 180.0 - p5 / 6_720.0 + p7 / 453_600.0,
            k: phi / 6.0 - p3 / 120.0 + p5 / 5_040.0 - p7 / 362_880.0,
            dk: 1.0 / 6.0 - p2 / 40.0 + p4 / 1_008.0 - p6 / 51_840.0,
        }
    }

    fn direct(phi: f64) -> Self {
        let u = 0.5 * phi;
        let (su, cu) = u.sin_cos();
        let (sp, _) = phi.sin_cos();
        let one_minus_cos = 2.0 * su * su;
        let p2 = phi * phi;
        let p3 = p2 * phi;
        ArcCoeffs {
            s: su / u,
            ds: 0.5 * (u * cu - su) / (u * u),
            g: one_minus_cos / p2,
            dg: (phi * sp - 2.0 * one_minus_cos) / p3,
            k: (phi - sp) / p2,
            dk: (one_minus_cos * phi - 2.0 * (phi - sp)) / p3,
        }
    }
}
