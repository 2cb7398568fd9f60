//! Long-hand expressions for the diagonal of the inverse QFI.
//!
//! With equal variances `v` and correlation `lambda` in both orientations,
//!
//! ```text
//! [I_Q^{-1}]_kk = F_k(phi, lambda) / (4 v (det M)^2 (1 - lambda^2))
//! ```
//!
//! The `F_k` below are typed in long hand. They are a validation layer only:
//! the matrix route in [`crate::fisher`] is the ground truth, and
//! [`cross_check`] reports every term that disagrees with it. The long-hand
//! `F_theta` and `F_delta` do disagree (see the committed report in
//! `tests/golden/closed_form_crosscheck.csv`), as does the long-hand bracket
//! for `det M`, kept as [`typeset_det_m`].

use std::f64::consts::FRAC_PI_2;

use crate::error::Result;
use crate::fisher::{check_identifiable, check_measurements, crb_matrix};
use crate::linalg::{self, Vec4};
use crate::model::{coupling_matrix, det_m, GyroParams, ProbeStats};

/// Relative tolerance for a closed-form term to count as agreeing.
pub const AGREEMENT_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormDiagonals {
    pub f_y: f64,
    pub f_z: f64,
    pub f_theta: f64,
    pub f_delta: f64,
}

impl ClosedFormDiagonals {
    pub fn to_array(self) -> Vec4 {
        [self.f_y, self.f_z, self.f_theta, self.f_delta]
    }
}

/// Long-hand bracket commonly quoted for `det M`; it equals the true
/// determinant only when `theta = delta = 0`.
pub fn typeset_det_m(p: GyroParams) -> f64 {
    let gamma = p.beta(p.theta + p.delta + FRAC_PI_2);
    let (b_t, b_d) = (p.beta(p.theta), p.beta(p.delta));
    gamma * (b_d + b_t) * p.theta.cos() - b_d * b_t * (p.delta + p.theta).sin()
}

pub fn closed_form_diagonals(p: GyroParams, lambda: f64) -> ClosedFormDiagonals {
    let (t, d, l) = (p.theta, p.delta, lambda);
    let g = p.beta(t + d + FRAC_PI_2);
    let bt = p.beta(t);
    let bd = p.beta(d);
    let (st, ct) = t.sin_cos();
    let (sd, cd) = d.sin_cos();
    let s_dt = (d + t).sin();
    let c_dt = (d + t).cos();

    let det = det_m(p);
    let f_y = det * det;

    let f_z = g
        * g
        * (bd * bd * (2.0 * l * st + st * st + 1.0)
            + 2.0 * bd * bt * sd * (st + l)
            + bt * bt * (sd * sd + 1.0))
        + bd * bd * bt * bt * (c_dt * c_dt + 1.0)
        - 2.0 * g * bd * bt * (bd * c_dt * (st + l) + bt * (sd * c_dt + l));

    let f_theta = g * g * ct * ct * ((sd - st) * (sd - st - 2.0 * l) + 2.0)
        + bd * bd
            * (1.5 - l * (2.0 * d + 3.0 * t).sin()
                + sd * (d + 2.0 * t).sin()
                + 0.5 * (2.0 * d + 4.0 * t).cos()
                + l * st)
        - g * bd
            * ct
            * (l * ((2.0 * d + t).cos() - 3.0 * (d + 2.0 * t).cos() + cd + ct)
                + 3.0 * s_dt
                + (2.0 * d + 2.0 * t).sin()
                - (d + 3.0 * t).sin()
                - (2.0 * t).sin());

    let f_delta = g * g * ct * ct * ((sd - st) * (st - sd + 2.0 * l) - 2.0)
        - bt * bt
            * ((sd * sd + 1.0) * s_dt * s_dt + ct * ct * (c_dt * c_dt + 1.0)
                - 2.0 * ct * s_dt * (sd * c_dt + l))
        + g * ct
            * bt
            * (l * ((2.0 * d + t).cos() + (d + 2.0 * t).cos() + cd - 3.0 * ct)
                + 3.0 * s_dt
                + (2.0 * t + 2.0 * d).cos() * (t - d).sin()
                - (2.0 * d).sin());

    ClosedFormDiagonals {
        f_y,
        f_z,
        f_theta,
        f_delta,
    }
}

/// Bound diagonals `F_k / (4 n v (det M)^2 (1 - lambda^2))` from the
/// long-hand expressions.
pub fn crb_diag_closed_form(p: GyroParams, var: f64, lambda: f64, n: u32) -> Result<Vec4> {
    check_measurements(n)?;
    ProbeStats::symmetric(var, lambda)?;
    let det = check_identifiable(p)?;
    let norm = 4.0 * f64::from(n) * var * det * det * (1.0 - lambda * lambda);
    Ok(closed_form_diagonals(p, lambda)
        .to_array()
        .map(|f| f / norm))
}

/// Agreement of one closed-form term with the matrix route.
#[derive(Debug, Clone, PartialEq)]
pub struct TermCheck {
    pub term: &'static str,
    pub max_rel_err: f64,
    pub worst_case: Option<(GyroParams, f64)>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckReport {
    pub cases: usize,
    pub terms: Vec<TermCheck>,
}

impl CrossCheckReport {
    pub fn all_agree(&self) -> bool {
        self.terms.iter().all(|t| t.agrees)
    }

    pub fn disagreeing(&self) -> Vec<&'static str> {
        self.terms
            .iter()
            .filter(|t| !t.agrees)
            .map(|t| t.term)
            .collect()
    }

    /// CSV with one row per term. The error column carries two significant
    /// digits so that the report is stable across platforms' libm.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,max_relative_error,agrees\n");
        for t in &self.terms {
            out.push_str(&format!("{},{:.1e},{}\n", t.term, t.max_rel_err, t.agrees));
        }
        out
    }
}

/// Compares every closed-form term against the numeric route over `cases`
/// (phases, correlation). Cases failing the singularity guard are skipped.
pub fn cross_check(cases: &[(GyroParams, f64)], var: f64) -> Result<CrossCheckReport> {
    const TERMS: [&str; 5] = ["det_m", "f_y", "f_z", "f_theta", "f_delta"];
    let mut worst: [(f64, Option<(GyroParams, f64)>); 5] = [(0.0, None); 5];
    let mut used = 0;

    for &(p, lambda) in cases {
        if check_identifiable(p).is_err() {
            continue;
        }
        used += 1;
        let numeric_det = linalg::determinant(&coupling_matrix(p).m);
        let mut errs = [rel_err(typeset_det_m(p), numeric_det), 0.0, 0.0, 0.0, 0.0];

        let closed = crb_diag_closed_form(p, var, lambda, 1)?;
        let numeric = crb_matrix(p, ProbeStats::symmetric(var, lambda)?, 1)?.diagonal();
        for k in 0..4 {
            errs[k + 1] = rel_err(closed[k], numeric[k]);
        }
        for (slot, e) in worst.iter_mut().zip(errs) {
            if e > slot.0 || e.is_nan() {
                *slot = (e, Some((p, lambda)));
            }
        }
    }

    let terms = TERMS
        .iter()
        .zip(worst)
        .map(|(&term, (max_rel_err, worst_case))| TermCheck {
            term,
            max_rel_err,
            worst_case,
            agrees: max_rel_err <= AGREEMENT_RTOL,
        })
        .collect();
    Ok(CrossCheckReport { cases: used, terms })
}

fn rel_err(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
