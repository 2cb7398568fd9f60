//! Quantum Fisher information and the Cramér-Rao bound.
//!
//! All generators commute and are linear in the number-difference observables,
//! `G = M n`, so for pure probe states the QFI is `4 M cov(n) M^T`. The bound on
//! the estimator covariance after `N` repetitions is `I_Q^{-1} / N`.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat4, Vec4};
use crate::model::{coupling_matrix, covariance_matrix, det_m, GyroParams, Param, ProbeStats};

pub use crate::linalg::invert_symmetric as invert_symmetric_4x4;

/// Relative factor of the singularity guard on `det M`.
pub const SINGULAR_DET_RTOL: f64 = 1e-12;

/// Quantum Fisher information matrix, parameter-indexed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix {
    pub q: Mat4,
    pub params: GyroParams,
    pub stats: ProbeStats,
}

/// Cramér-Rao covariance bound `I_Q^{-1} / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundMatrix {
    pub cov: Mat4,
    pub n_measurements: u32,
}

impl BoundMatrix {
    /// Per-parameter variance bounds in canonical order.
    pub fn diagonal(&self) -> Vec4 {
        linalg::diagonal(&self.cov)
    }

    pub fn variance(&self, p: Param) -> f64 {
        self.cov[p.index()][p.index()]
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }
}

pub fn qfi_matrix(p: GyroParams, s: ProbeStats) -> FisherMatrix {
    let m = coupling_matrix(p).m;
    let sigma = covariance_matrix(&s);
    let mut q = linalg::scale(
        &linalg::matmul(&linalg::matmul(&m, &sigma), &linalg::transpose(&m)),
        4.0,
    );
    linalg::symmetrize(&mut q);
    FisherMatrix {
        q,
        params: p,
        stats: s,
    }
}

/// Guard threshold on `|det M|` at these phases.
pub fn singularity_threshold(p: GyroParams) -> f64 {
    SINGULAR_DET_RTOL * (p.phi_y * p.phi_y + p.phi_z * p.phi_z).max(1.0)
}

/// Fails with [`Error::SingularModel`] when the four parameters are not
/// identifiable from the four observables.
pub fn check_identifiable(p: GyroParams) -> Result<f64> {
    let det = det_m(p);
    let threshold = singularity_threshold(p);
    if det.abs() > threshold {
        Ok(det)
    } else {
        Err(Error::SingularModel { det, threshold })
    }
}

pub(crate) fn check_measurements(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "number of measurements must be positive".into(),
        ));
    }
    Ok(())
}

pub fn crb_matrix(p: GyroParams, s: ProbeStats, n: u32) -> Result<BoundMatrix> {
    check_measurements(n)?;
    check_identifiable(p)?;
    // (4 M S M^T)^{-1} = M^{-T} S^{-1} M^{-1} / 4, which keeps the conditioning
    // of M rather than its square.
    let m_inv = linalg::invert(&coupling_matrix(p).m)?;
    let s_inv = linalg::invert_symmetric(&covariance_matrix(&s))?;
    let mut inv = linalg::scale(
        &linalg::matmul(&linalg::matmul(&linalg::transpose(&m_inv), &s_inv), &m_inv),
        0.25,
    );
    linalg::symmetrize(&mut inv);
    Ok(BoundMatrix {
        cov: linalg::scale(&inv, 1.0 / f64::from(n)),
        n_measurements: n,
    })
}

fn residual_variance(var_y: f64, var_z: f64, c_yz: f64) -> Result<f64> {
    let d = var_y * var_z - c_yz * c_yz;
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::DegenerateCovariance(d))
    }
}

/// Bounds `(Var phi_y, Var phi_z)` for a perfectly aligned pair treated as a
/// two-generator problem with no nuisance parameters.
pub fn ideal_bounds(var_y: f64, var_z: f64, c_yz: f64, n: u32) -> Result<(f64, f64)> {
    check_measurements(n)?;
    let d = residual_variance(var_y, var_z, c_yz)?;
    let norm = 4.0 * f64::from(n) * d;
    Ok((var_z / norm, var_y / norm))
}

/// `Var phi_z` of the four-parameter problem in the limit `theta, delta -> 0`,
/// with `kappa = phi_y / phi_z`.
pub fn small_misalignment_var_phi_z(
    kappa: f64,
    var_y: f64,
    var_z: f64,
    c_yz: f64,
    n: u32,
) -> Result<f64> {
    check_measurements(n)?;
    let d = residual_variance(var_y, var_z, c_yz)?;
    Ok((var_y + kappa * kappa * var_z + 2.0 * kappa * c_yz) / (8.0 * f64::from(n) * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gp(a: f64, b: f64, c: f64, d: f64) -> GyroParams {
        GyroParams::new(a, b, c, d).unwrap()
    }

    fn stats(var: f64, lambda: f64) -> ProbeStats {
        ProbeStats::symmetric(var, lambda).unwrap()
    }

    #[test]
    fn qfi_unit_phases_uncorrelated() {
        let f = qfi_matrix(gp(1.0, 1.0, 0.0, 0.0), stats(10.0, 0.0));
        assert_relative_eq!(f.q[0][0], 80.0, max_relative = 1e-15);
        assert!(f.q[0][1].abs() < 1e-14);
    }

    #[test]
    fn qfi_matches_double_loop() {
        let p = gp(0.66, 0.17, 0.02, 0.013);
        let s = stats(10.0, 0.3);
        let m = coupling_matrix(p).m;
        let sigma = covariance_matrix(&s);
        let q = qfi_matrix(p, s).q;
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    for l in 0..4 {
                        acc += m[i][k] * m[j][l] * sigma[k][l];
                    }
                }
                assert_relative_eq!(q[i][j], 4.0 * acc, max_relative = 1e-13, epsilon = 1e-14);
                assert_eq!(q[i][j], q[j][i]);
            }
        }
    }

    #[test]
    fn crb_phi_y_is_universal_at_zero_correlation() {
        for p in [
            gp(0.66, 0.17, 0.02, 0.013),
            gp(-0.3, 0.2, 0.3, -0.1),
            gp(1.0, 1.0, 0.0, 0.0),
        ] {
            let b = crb_matrix(p, stats(10.0, 0.0), 1).unwrap();
            assert_relative_eq!(b.variance(Param::PhiY), 0.025, max_relative = 1e-12);
        }
    }

    #[test]
    fn crb_equal_small_phases_sum() {
        let b = crb_matrix(gp(0.01, 0.01, 0.02, 0.013), stats(10.0, 0.0), 1).unwrap();
        let sum = b.variance(Param::PhiY) + b.variance(Param::PhiZ);
        assert_relative_eq!(sum, 0.05, max_relative = 1e-3);
    }

    #[test]
    fn crb_scales_with_measurements() {
        let p = gp(0.01, 0.01, 0.02, 0.013);
        let one = crb_matrix(p, stats(10.0, 0.0), 1).unwrap();
        let four = crb_matrix(p, stats(10.0, 0.0), 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(four.cov[i][j], one.cov[i][j] * 0.25);
            }
        }
        assert_eq!(four.n_measurements, 4);
    }

    #[test]
    fn crb_rejects_singular_model_and_zero_n() {
        let err = crb_matrix(gp(0.0, 0.0, 0.02, 0.013), stats(10.0, 0.0), 1).unwrap_err();
        assert!(matches!(err, Error::SingularModel { .. }));
        let err = crb_matrix(gp(0.5, 0.0, 0.0, 0.0), stats(10.0, 0.0), 1).unwrap_err();
        assert!(matches!(err, Error::SingularModel { .. }));
        assert!(crb_matrix(gp(0.5, 0.2, 0.0, 0.0), stats(10.0, 0.0), 0).is_err());
    }

    #[test]
    fn ideal_bounds_examples() {
        assert_eq!(ideal_bounds(10.0, 10.0, 0.0, 1).unwrap(), (0.025, 0.025));
        let (a, b) = ideal_bounds(10.0, 10.0, 5.0, 1).unwrap();
        assert_relative_eq!(a, 1.0 / 30.0, max_relative = 1e-15);
        assert_relative_eq!(b, 1.0 / 30.0, max_relative = 1e-15);
        assert!(matches!(
            ideal_bounds(10.0, 10.0, 10.0, 1),
            Err(Error::DegenerateCovariance(_))
        ));
    }

    #[test]
    fn small_misalignment_examples() {
        let v0 = small_misalignment_var_phi_z(0.0, 10.0, 10.0, 0.0, 1).unwrap();
        assert_eq!(v0, 0.0125);
        assert_eq!(v0, 0.5 * ideal_bounds(10.0, 10.0, 0.0, 1).unwrap().1);
        assert_eq!(
            small_misalignment_var_phi_z(1.0, 10.0, 10.0, 0.0, 1).unwrap(),
            0.025
        );
        assert_relative_eq!(
            small_misalignment_var_phi_z(1.0, 10.0, 10.0, 5.0, 1).unwrap(),
            0.05,
            max_relative = 1e-15
        );
        assert!(small_misalignment_var_phi_z(1.0, 10.0, 10.0, -10.0, 1).is_err());
    }

    #[test]
    fn small_misalignment_matches_aligned_matrix_route() {
        // At theta = delta = 0 the full pipeline reduces to the limit formula.
        for (py, pz, l) in [(0.2, 0.01, 0.0), (-0.3, 0.2, 0.3), (0.66, 0.17, -0.5)] {
            let b = crb_matrix(gp(py, pz, 0.0, 0.0), stats(10.0, l), 1).unwrap();
            let expected = small_misalignment_var_phi_z(py / pz, 10.0, 10.0, 10.0 * l, 1).unwrap();
            assert_relative_eq!(b.variance(Param::PhiZ), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn diverges_towards_perfect_correlation() {
        let p = gp(0.66, 0.17, 0.02, 0.013);
        let at0 = crb_matrix(p, stats(10.0, 0.0), 1).unwrap().diagonal();
        for l in [0.999, -0.999] {
            let near = crb_matrix(p, stats(10.0, l), 1).unwrap().diagonal();
            for k in 0..4 {
                assert!(near[k] > 10.0 * at0[k], "k={k} lambda={l}");
            }
        }
    }

    #[test]
    fn ideal_optimum_at_zero_correlation() {
        let base = ideal_bounds(10.0, 10.0, 0.0, 1).unwrap();
        for c in [5.0, -5.0] {
            let b = ideal_bounds(10.0, 10.0, c, 1).unwrap();
            assert!(b.0 > base.0 && b.1 > base.1);
        }
    }

    #[test]
    fn bound_is_inverse_of_qfi() {
        let p = gp(0.66, 0.17, 0.02, 0.013);
        let s = stats(10.0, 0.3);
        let direct = linalg::invert_symmetric(&qfi_matrix(p, s).q).unwrap();
        let b = crb_matrix(p, s, 3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(
                    b.cov[i][j] * 3.0,
                    direct[i][j],
                    max_relative = 1e-9,
                    epsilon = 1e-12
                );
            }
        }
    }

    fn draw() -> impl Strategy<Value = (GyroParams, f64)> {
        (-1.0..1.0, -1.0..1.0, -0.35..0.35, -0.35..0.35, -0.9..0.9).prop_filter_map(
            "det M too small",
            |(a, b, c, d, l)| {
                let p = GyroParams {
                    phi_y: a,
                    phi_z: b,
                    theta: c,
                    delta: d,
                };
                (det_m(p).abs() > 1e-6).then_some((p, l))
            },
        )
    }

    proptest! {
        #[test]
        fn phi_y_identity((p, l) in draw(), n in 1u32..5) {
            let b = crb_matrix(p, stats(10.0, l), n).unwrap();
            let x = b.variance(Param::PhiY) * 4.0 * f64::from(n) * 10.0 * (1.0 - l * l);
            prop_assert!((x - 1.0).abs() <= 1e-9, "{x}");
        }

        #[test]
        fn phase_scale_invariance((p, l) in draw(), c in prop::sample::select(vec![-2.0, 0.5, 3.0])) {
            let scaled = GyroParams { phi_y: c * p.phi_y, phi_z: c * p.phi_z, ..p };
            let a = crb_matrix(p, stats(10.0, l), 1).unwrap();
            let b = crb_matrix(scaled, stats(10.0, l), 1).unwrap();
            for k in [Param::PhiY, Param::PhiZ] {
                let (x, y) = (a.variance(k), b.variance(k));
                prop_assert!(((x - y) / x).abs() <= 1e-9, "{k}: {x} vs {y}");
            }
        }

        #[test]
        fn bound_is_symmetric_positive((p, l) in draw()) {
            let b = crb_matrix(p, stats(10.0, l), 1).unwrap();
            for i in 0..4 {
                prop_assert!(b.cov[i][i] > 0.0);
                for j in 0..4 {
                    prop_assert_eq!(b.cov[i][j], b.cov[j][i]);
                }
            }
        }
    }
}
