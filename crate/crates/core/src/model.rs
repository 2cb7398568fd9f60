//! Geometry and probe statistics of the two-orientation measurement.
//!
//! Two Sagnac interferometers (normals nominally along `y` and `z`) are read
//! out once, then the assembly is turned by `pi/2 + delta` about the sensor
//! `x` axis and read out again. The `z` interferometer is tilted towards `y`
//! by `theta`. The joint evolution is `exp(-i sum_k Phi_k n_k)` over the four
//! commuting number-difference observables `(n_y, n_z, n_y', n_z')`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Mat4, Vec4};

/// The four estimated parameters, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroParams {
    pub phi_y: f64,
    pub phi_z: f64,
    /// Tilt of the `z` interferometer towards `y`.
    pub theta: f64,
    /// Error in the `pi/2` repositioning rotation.
    pub delta: f64,
}

/// Parameter index, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    PhiY = 0,
    PhiZ = 1,
    Theta = 2,
    Delta = 3,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::PhiY, Param::PhiZ, Param::Theta, Param::Delta];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::PhiY => "phi_y",
            Param::PhiZ => "phi_z",
            Param::Theta => "theta",
            Param::Delta => "delta",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Observable index: `n_y`, `n_z` in the first orientation, `n_y'`, `n_z'`
/// in the rotated one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    Ny = 0,
    Nz = 1,
    NyPrime = 2,
    NzPrime = 3,
}

impl Observable {
    pub const ALL: [Observable; 4] = [
        Observable::Ny,
        Observable::Nz,
        Observable::NyPrime,
        Observable::NzPrime,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl GyroParams {
    pub fn new(phi_y: f64, phi_z: f64, theta: f64, delta: f64) -> Result<Self> {
        Self::from_array([phi_y, phi_z, theta, delta])
    }

    pub fn from_array(v: Vec4) -> Result<Self> {
        if let Some(p) = Param::ALL.into_iter().find(|p| !v[p.index()].is_finite()) {
            return Err(Error::InvalidParams(format!("{p} is not finite")));
        }
        Ok(Self {
            phi_y: v[0],
            phi_z: v[1],
            theta: v[2],
            delta: v[3],
        })
    }

    pub fn to_array(self) -> Vec4 {
        [self.phi_y, self.phi_z, self.theta, self.delta]
    }

    pub fn get(self, p: Param) -> f64 {
        self.to_array()[p.index()]
    }

    /// Copy with one parameter replaced.
    pub fn with(self, p: Param, value: f64) -> Self {
        let mut v = self.to_array();
        v[p.index()] = value;
        Self {
            phi_y: v[0],
            phi_z: v[1],
            theta: v[2],
            delta: v[3],
        }
    }

    /// The `theta, delta -> 0` limit of the same phases.
    pub fn aligned(self) -> Self {
        Self {
            theta: 0.0,
            delta: 0.0,
            ..self
        }
    }

    pub fn beta(self, alpha: f64) -> f64 {
        beta(alpha, self.phi_y, self.phi_z)
    }
}

/// `beta(alpha) = phi_y cos(alpha) - phi_z sin(alpha)`.
pub fn beta(alpha: f64, phi_y: f64, phi_z: f64) -> f64 {
    phi_y * alpha.cos() - phi_z * alpha.sin()
}

/// Accumulated phase multiplying each observable, in observable order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseVector(pub Vec4);

pub fn phase_vector(p: GyroParams) -> PhaseVector {
    let (st, ct) = p.theta.sin_cos();
    let (sd, cd) = p.delta.sin_cos();
    PhaseVector([
        p.phi_y,
        p.phi_y * st + p.phi_z * ct,
        -p.phi_y * sd - p.phi_z * cd,
        p.beta(p.theta + p.delta),
    ])
}

/// Jacobian of the phase vector: row `i` holds the generator coefficients of
/// parameter `i`, column `k` the observable `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrix {
    pub m: Mat4,
    pub det: f64,
}

pub fn coupling_matrix(p: GyroParams) -> CouplingMatrix {
    let (st, ct) = p.theta.sin_cos();
    let (sd, cd) = p.delta.sin_cos();
    let (std_, ctd) = (p.theta + p.delta).sin_cos();
    let gamma = p.beta(p.theta + p.delta + FRAC_PI_2);
    let m = [
        [1.0, st, -sd, ctd],
        [0.0, ct, -cd, -std_],
        [0.0, p.beta(p.theta), 0.0, gamma],
        [0.0, 0.0, -p.beta(p.delta), gamma],
    ];
    CouplingMatrix { m, det: det_m(p) }
}

/// Closed-form determinant of the coupling matrix, by cofactor expansion
/// along the first column:
/// `gamma (beta(theta) cos(delta) + beta(delta) cos(theta)) + beta(theta) beta(delta) sin(theta + delta)`
/// with `gamma = beta(theta + delta + pi/2)`.
pub fn det_m(p: GyroParams) -> f64 {
    let gamma = p.beta(p.theta + p.delta + FRAC_PI_2);
    let b_theta = p.beta(p.theta);
    let b_delta = p.beta(p.delta);
    gamma * (b_theta * p.delta.cos() + b_delta * p.theta.cos())
        + b_theta * b_delta * (p.theta + p.delta).sin()
}

/// Central-difference Jacobian of [`phase_vector`], same layout as
/// [`CouplingMatrix::m`].
pub fn numeric_jacobian(p: GyroParams, h: f64) -> Result<Mat4> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let mut jac = [[0.0; 4]; 4];
    for param in Param::ALL {
        let x = p.get(param);
        let plus = phase_vector(p.with(param, x + h)).0;
        let minus = phase_vector(p.with(param, x - h)).0;
        for k in 0..4 {
            jac[param.index()][k] = (plus[k] - minus[k]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Second moments of the probe state. The state is a product over the two
/// orientations, so only the within-orientation correlations appear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeStats {
    pub var_y: f64,
    pub var_z: f64,
    /// Correlation coefficient between `n_y` and `n_z` in the first orientation.
    pub lambda_12: f64,
    /// Same, for the rotated orientation.
    pub lambda_34: f64,
}

impl ProbeStats {
    pub fn new(var_y: f64, var_z: f64, lambda_12: f64, lambda_34: f64) -> Result<Self> {
        for (name, v) in [("var_y", var_y), ("var_z", var_z)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidProbeStats(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for l in [lambda_12, lambda_34] {
            if !(l.abs() < 1.0) {
                return Err(Error::InvalidProbeStats(format!(
                    "lambda out of range: {l}"
                )));
            }
        }
        Ok(Self {
            var_y,
            var_z,
            lambda_12,
            lambda_34,
        })
    }

    /// Equal variances in both interferometers and the same correlation in
    /// both orientations.
    pub fn symmetric(var: f64, lambda: f64) -> Result<Self> {
        Self::new(var, var, lambda, lambda)
    }

    pub fn c_12(&self) -> f64 {
        self.lambda_12 * (self.var_y * self.var_z).sqrt()
    }

    pub fn c_34(&self) -> f64 {
        self.lambda_34 * (self.var_y * self.var_z).sqrt()
    }
}

/// Block-diagonal covariance of `(n_y, n_z, n_y', n_z')`.
pub fn covariance_matrix(s: &ProbeStats) -> Mat4 {
    let (c12, c34) = (s.c_12(), s.c_34());
    [
        [s.var_y, c12, 0.0, 0.0],
        [c12, s.var_z, 0.0, 0.0],
        [0.0, 0.0, s.var_y, c34],
        [0.0, 0.0, c34, s.var_z],
    ]
}
