//! Choice of the inter-interferometer correlation coefficient `lambda`.
//!
//! Every bound diagonal carries a `1 / (1 - lambda^2)` factor, so any
//! objective built from them diverges at `lambda = +-1` and has an interior
//! minimum. The search is a uniform coarse scan followed by golden-section
//! refinement around the best scan point.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fisher::{check_identifiable, crb_matrix};
use crate::linalg::Vec4;
use crate::model::{GyroParams, Param, ProbeStats};

/// Distance kept from the poles at `lambda = +-1`.
pub const LAMBDA_EDGE: f64 = 1e-6;
pub const COARSE_POINTS: usize = 201;
pub const DEFAULT_TOL: f64 = 1e-7;

/// Nuisance values averaged over when a curve is summarised across the other
/// nuisance parameter.
pub const DEFAULT_NUISANCE_SET: [f64; 8] = [-0.3, -0.2, -0.1, -0.01, 0.01, 0.1, 0.2, 0.3];

/// Which combination of bound diagonals to minimise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `Var phi_y + Var phi_z`.
    SumPhaseVar,
    /// Trace of the bound matrix.
    FullTrace,
    VarPhiY,
    VarPhiZ,
    VarTheta,
    VarDelta,
    /// Non-negative weights on `(phi_y, phi_z, theta, delta)`.
    Weighted(Vec4),
}

impl Objective {
    pub fn weights(self) -> Vec4 {
        match self {
            Objective::SumPhaseVar => [1.0, 1.0, 0.0, 0.0],
            Objective::FullTrace => [1.0; 4],
            Objective::VarPhiY => [1.0, 0.0, 0.0, 0.0],
            Objective::VarPhiZ => [0.0, 1.0, 0.0, 0.0],
            Objective::VarTheta => [0.0, 0.0, 1.0, 0.0],
            Objective::VarDelta => [0.0, 0.0, 0.0, 1.0],
            Objective::Weighted(w) => w,
        }
    }

    pub fn evaluate(self, diagonal: &Vec4) -> f64 {
        self.weights()
            .iter()
            .zip(diagonal)
            .map(|(w, d)| w * d)
            .sum()
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::SumPhaseVar => f.write_str("sum_phase_var"),
            Objective::FullTrace => f.write_str("full_trace"),
            Objective::VarPhiY => f.write_str("var_phi_y"),
            Objective::VarPhiZ => f.write_str("var_phi_z"),
            Objective::VarTheta => f.write_str("var_theta"),
            Objective::VarDelta => f.write_str("var_delta"),
            Objective::Weighted(w) => write!(f, "weighted:{},{},{},{}", w[0], w[1], w[2], w[3]),
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    /// Accepts the names printed by `Display`; weights as `weighted:a,b,c,d`.
    fn from_str(s: &str) -> Result<Self> {
        let obj = match s {
            "sum_phase_var" => Objective::SumPhaseVar,
            "full_trace" => Objective::FullTrace,
            "var_phi_y" => Objective::VarPhiY,
            "var_phi_z" => Objective::VarPhiZ,
            "var_theta" => Objective::VarTheta,
            "var_delta" => Objective::VarDelta,
            _ => {
                let bad = || Error::InvalidArgument(format!("unknown objective `{s}`"));
                let list = s.strip_prefix("weighted:").ok_or_else(bad)?;
                let w: Vec<f64> = list
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad())?;
                let w: Vec4 = w.try_into().map_err(|_| bad())?;
                if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::InvalidArgument(format!(
                        "weights must be non-negative: `{s}`"
                    )));
                }
                Objective::Weighted(w)
            }
        };
        Ok(obj)
    }
}

pub fn objective_value(
    p: GyroParams,
    var: f64,
    lambda: f64,
    obj: Objective,
    n: u32,
) -> Result<f64> {
    let bound = crb_matrix(p, ProbeStats::symmetric(var, lambda)?, n)?;
    Ok(obj.evaluate(&bound.diagonal()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationResult {
    pub lambda_opt: f64,
    pub objective_value: f64,
    pub evaluations: usize,
    /// Final golden-section interval.
    pub bracket: (f64, f64),
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

/// Global minimiser of `f` over `[-1 + LAMBDA_EDGE, 1 - LAMBDA_EDGE]`.
///
/// A failed evaluation (numerically singular QFI near the poles) counts as
/// `+inf`; other errors abort.
pub fn minimize_correlation<F>(mut f: F, tol: f64) -> Result<OptimizationResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_tol(tol)?;
    let mut evaluations = 0;
    let mut eval = |x: f64| -> Result<f64> {
        evaluations += 1;
        match f(x) {
            Ok(v) if v.is_nan() => Ok(f64::INFINITY),
            Ok(v) => Ok(v),
            Err(Error::SingularMatrix { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };

    // Grid points are symmetric about zero and include it exactly.
    let half = (COARSE_POINTS - 1) / 2;
    let reach = 1.0 - LAMBDA_EDGE;
    let grid: Vec<f64> = (0..COARSE_POINTS)
        .map(|i| reach * (i as f64 - half as f64) / half as f64)
        .collect();

    let mut best = (0, f64::INFINITY);
    for (i, &x) in grid.iter().enumerate() {
        let v = eval(x)?;
        let better = v < best.1 || (v == best.1 && x.abs() < grid[best.0].abs());
        if better {
            best = (i, v);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::SingularMatrix {
            pivot: 0.0,
            threshold: 0.0,
        });
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = grid[best.0.saturating_sub(1)];
    let mut b = grid[(best.0 + 1).min(COARSE_POINTS - 1)];
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?;
        }
    }

    let (mut lambda_opt, mut value) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if best.1 < value {
        lambda_opt = grid[best.0];
        value = best.1;
    }
    Ok(OptimizationResult {
        lambda_opt,
        objective_value: value,
        evaluations,
        bracket: (a, b),
    })
}

pub fn optimal_lambda(
    p: GyroParams,
    var: f64,
    obj: Objective,
    tol: f64,
    n: u32,
) -> Result<OptimizationResult> {
    check_identifiable(p)?;
    ProbeStats::symmetric(var, 0.0)?;
    minimize_correlation(|l| objective_value(p, var, l, obj, n), tol)
}

/// Minimiser of `(3 + kappa^2 + 2 kappa lambda) / (1 - lambda^2)`, the
/// `theta, delta -> 0` limit of `Var phi_y + Var phi_z` with
/// `kappa = phi_y / phi_z`: the root of
/// `kappa lambda^2 + (3 + kappa^2) lambda + kappa = 0` inside `(-1, 1)`.
pub fn lambda_opt_small_angle(kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    // The roots multiply to one; this is the smaller one, written to avoid
    // cancellation.
    let b = 3.0 + kappa * kappa;
    let disc = b * b - 4.0 * kappa * kappa;
    -2.0 * kappa / (b + disc.sqrt())
}

/// Quantity varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Param(Param),
    Var,
    Lambda,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Param(p) => p.name(),
            SweepAxis::Var => "var",
            SweepAxis::Lambda => "lambda",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "var" | "n_var" => Ok(SweepAxis::Var),
            "lambda" => Ok(SweepAxis::Lambda),
            _ => Param::from_name(s)
                .map(SweepAxis::Param)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown sweep axis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Value of the swept quantity.
    pub value: f64,
    pub params: GyroParams,
    pub var: f64,
    pub lambda: f64,
    /// Bound diagonals in parameter order; `None` when singular.
    pub bounds: Option<Vec4>,
    pub objective: Option<f64>,
    pub lambda_opt: Option<f64>,
}

impl SweepRow {
    pub fn is_singular(&self) -> bool {
        self.bounds.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub objective: Objective,
    pub n: u32,
    /// When set, each row also carries the optimal `lambda` at this tolerance.
    pub lambda_opt_tol: Option<f64>,
}

/// One row per grid point, in grid order. Points where the model or the QFI
/// is singular are flagged (no bounds) rather than aborting the sweep.
pub fn sweep(
    base: GyroParams,
    var: f64,
    lambda: f64,
    axis: SweepAxis,
    grid: &[f64],
    settings: SweepSettings,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    grid.iter()
        .map(|&value| {
            let (p, v, l) = match axis {
                SweepAxis::Param(param) => (base.with(param, value), var, lambda),
                SweepAxis::Var => (base, value, lambda),
                SweepAxis::Lambda => (base, var, value),
            };
            let p = GyroParams::from_array(p.to_array())?;
            let stats = ProbeStats::symmetric(v, l)?;
            let mut row = SweepRow {
                value,
                params: p,
                var: v,
                lambda: l,
                bounds: None,
                objective: None,
                lambda_opt: None,
            };
            match crb_matrix(p, stats, settings.n) {
                Ok(b) => {
                    let d = b.diagonal();
                    row.objective = Some(settings.objective.evaluate(&d));
                    row.bounds = Some(d);
                }
                Err(Error::SingularModel { .. } | Error::SingularMatrix { .. }) => return Ok(row),
                Err(e) => return Err(e),
            }
            if let Some(tol) = settings.lambda_opt_tol {
                row.lambda_opt =
                    Some(optimal_lambda(p, v, settings.objective, tol, settings.n)?.lambda_opt);
            }
            Ok(row)
        })
        .collect()
}

/// How the phases are averaged out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AveragingMode {
    /// Mean of the per-phase-point optimal `lambda`.
    #[default]
    MeanOfOptima,
    /// Optimal `lambda` of the phase-averaged objective.
    OptimumOfMean,
}

impl FromStr for AveragingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_of_optima" => Ok(AveragingMode::MeanOfOptima),
            "optimum_of_mean" => Ok(AveragingMode::OptimumOfMean),
            _ => Err(Error::InvalidArgument(format!(
                "unknown averaging mode `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageSettings {
    pub phase_grid: Vec<(f64, f64)>,
    pub var: f64,
    pub objective: Objective,
    pub tol: f64,
    pub n: u32,
    pub mode: AveragingMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageRow {
    pub theta: f64,
    pub delta: f64,
    pub mean_lambda_opt: f64,
    pub points_used: usize,
}

/// `count x count` cell-centred grid over `[-pi, pi)^2`. Cell centres are
/// placed symmetrically about zero, so the grid is closed under `phi -> -phi`
/// in each coordinate and never contains a zero phase.
pub fn default_phase_grid(count: usize) -> Vec<(f64, f64)> {
    let h = std::f64::consts::TAU / count as f64;
    let mid = (count as f64 - 1.0) / 2.0;
    let axis: Vec<f64> = (0..count).map(|i| (i as f64 - mid) * h).collect();
    axis.iter()
        .flat_map(|&y| axis.iter().map(move |&z| (y, z)))
        .collect()
}

/// Phase-averaged optimal `lambda` at every `(theta, delta)` pair, `theta`
/// outermost. Phase points failing the singularity guard are skipped.
pub fn averaged_lambda_opt(
    theta_grid: &[f64],
    delta_grid: &[f64],
    settings: &AverageSettings,
) -> Result<Vec<AverageRow>> {
    if theta_grid.is_empty() || delta_grid.is_empty() || settings.phase_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "averaging grids must be non-empty".into(),
        ));
    }
    let mut rows = Vec::with_capacity(theta_grid.len() * delta_grid.len());
    for &theta in theta_grid {
        for &delta in delta_grid {
            rows.push(average_at(theta, delta, settings)?);
        }
    }
    Ok(rows)
}

fn average_at(theta: f64, delta: f64, s: &AverageSettings) -> Result<AverageRow> {
    let points: Vec<GyroParams> = s
        .phase_grid
        .iter()
        .map(|&(phi_y, phi_z)| GyroParams::new(phi_y, phi_z, theta, delta))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| check_identifiable(*p).is_ok())
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyGridAfterExclusion);
    }

    let mean_lambda_opt = match s.mode {
        AveragingMode::MeanOfOptima => {
            let mut total = 0.0;
            for p in &points {
                total += optimal_lambda(*p, s.var, s.objective, s.tol, s.n)?.lambda_opt;
            }
            total / points.len() as f64
        }
        AveragingMode::OptimumOfMean => {
            let mean = |l: f64| -> Result<f64> {
                let mut total = 0.0;
                for p in &points {
                    total += objective_value(*p, s.var, l, s.objective, s.n)?;
                }
                Ok(total / points.len() as f64)
            };
            minimize_correlation(mean, s.tol)?.lambda_opt
        }
    };
    Ok(AverageRow {
        theta,
        delta,
        mean_lambda_opt,
        points_used: points.len(),
    })
}

/// Collapses rows over the second nuisance parameter: for each value of the
/// first (`theta` when `by_theta`), the mean of `mean_lambda_opt` across the
/// other one. Keeps first-seen order.
pub fn marginalize(rows: &[AverageRow], by_theta: bool) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        let key = if by_theta { r.theta } else { r.delta };
        match out.iter_mut().find(|(k, _, _)| *k == key) {
            Some(slot) => {
                slot.1 += r.mean_lambda_opt;
                slot.2 += 1;
            }
            None => out.push((key, r.mean_lambda_opt, 1)),
        }
    }
    out.into_iter().map(|(k, s, c)| (k, s / c as f64)).collect()
}

/// Phase pairs of the reference table, evaluated at `theta = 0.02`,
/// `delta = 0.013`, `(Delta n)^2 = 10`, `N = 1`.
pub const REFERENCE_TABLE_PHASES: [(f64, f64); 8] = [
    (0.01, 0.01),
    (0.01, -0.30),
    (0.20, 0.01),
    (0.20, 0.20),
    (0.20, -0.30),
    (-0.30, 0.01),
    (-0.30, 0.20),
    (-0.30, -0.30),
];
pub const REFERENCE_THETA: f64 = 0.02;
pub const REFERENCE_DELTA: f64 = 0.013;
pub const REFERENCE_VAR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTableRow {
    pub params: GyroParams,
    pub sum_lambda0: f64,
    pub sum_lambda_opt: f64,
    pub lambda_opt: f64,
}

/// `Var phi_y + Var phi_z` without correlation and at the optimal
/// correlation, for each parameter point.
pub fn phase_table(
    points: &[GyroParams],
    var: f64,
    n: u32,
    tol: f64,
) -> Result<Vec<PhaseTableRow>> {
    points
        .iter()
        .map(|&p| {
            let sum_lambda0 = objective_value(p, var, 0.0, Objective::SumPhaseVar, n)?;
            let opt = optimal_lambda(p, var, Objective::SumPhaseVar, tol, n)?;
            Ok(PhaseTableRow {
                params: p,
                sum_lambda0,
                sum_lambda_opt: opt.objective_value,
                lambda_opt: opt.lambda_opt,
            })
        })
        .collect()
}
