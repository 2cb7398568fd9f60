//! JSON run configuration.
//!
//! Keys are snake_case and match the command-line flags; unknown keys are
//! rejected. Angles and phases are radians, `n_var` is the dimensionless
//! photon-number-difference variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GyroParams, ProbeStats};
use crate::optimize::{AveragingMode, Objective, SweepAxis, DEFAULT_NUISANCE_SET, DEFAULT_TOL};

/// Phase grid size per axis for `average` when not configured.
pub const DEFAULT_PHASE_COUNT: usize = 24;

/// Misalignment treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Model {
    /// Use `theta` and `delta` as given.
    #[default]
    Full,
    /// Evaluate at `theta = delta = 0` (the small-misalignment limit).
    Aligned,
}

impl Model {
    pub fn apply(self, p: GyroParams) -> GyroParams {
        match self {
            Model::Full => p,
            Model::Aligned => p.aligned(),
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Model::Full),
            "aligned" => Ok(Model::Aligned),
            _ => Err(Error::InvalidArgument(format!(
                "unknown model `{s}` (expected full or aligned)"
            ))),
        }
    }
}

/// Either an explicit list or `count` points from `start` to `stop`
/// (geometric spacing when `log` is set).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<bool>,
}

impl GridSpec {
    fn is_empty(&self) -> bool {
        *self == GridSpec::default()
    }

    /// Field-wise override: keys set in `other` win.
    fn merge(self, other: GridSpec) -> GridSpec {
        GridSpec {
            start: other.start.or(self.start),
            stop: other.stop.or(self.stop),
            count: other.count.or(self.count),
            values: other.values.or(self.values),
            log: other.log.or(self.log),
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let bad = |m: &str| Error::InvalidArgument(format!("grid: {m}"));
        if let Some(v) = &self.values {
            if self.start.is_some() || self.stop.is_some() || self.count.is_some() {
                return Err(bad(
                    "give either `values` or `start`/`stop`/`count`, not both",
                ));
            }
            if v.is_empty() {
                return Err(bad("`values` is empty"));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad("non-finite value"));
            }
            return Ok(v.clone());
        }
        let (start, stop, count) = match (self.start, self.stop, self.count) {
            (Some(a), Some(b), Some(n)) => (a, b, n),
            _ => return Err(bad("`start`, `stop` and `count` are all required")),
        };
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(bad("`count` must be positive and bounds finite"));
        }
        let log = self.log.unwrap_or(false);
        if log && !(start > 0.0 && stop > 0.0) {
            return Err(bad("log spacing needs positive bounds"));
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let last = (count - 1) as f64;
        Ok((0..count)
            .map(|i| {
                if i == count - 1 {
                    return stop;
                }
                let t = i as f64 / last;
                if log {
                    (start.ln() + t * (stop.ln() - start.ln())).exp()
                } else {
                    start + t * (stop - start)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<bool>,
    /// Also report the optimal `lambda` at every grid point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub with_lambda_opt: Option<bool>,
}

impl SweepSpec {
    fn grid(&self) -> GridSpec {
        GridSpec {
            start: self.start,
            stop: self.stop,
            count: self.count,
            values: self.values.clone(),
            log: self.log,
        }
    }

    fn merge(self, other: SweepSpec) -> SweepSpec {
        let g = self.grid().merge(other.grid());
        SweepSpec {
            axis: other.axis.or(self.axis),
            start: g.start,
            stop: g.stop,
            count: g.count,
            values: g.values,
            log: g.log,
            with_lambda_opt: other.with_lambda_opt.or(self.with_lambda_opt),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<GridSpec>,
    /// Points per phase axis of the averaging grid over `[-pi, pi)^2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_count: Option<usize>,
    /// `mean_of_optima` (default) or `optimum_of_mean`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// `theta` or `delta`: average the result over the other nuisance axis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal: Option<String>,
}

impl AverageSpec {
    fn merge(self, other: AverageSpec) -> AverageSpec {
        let merge_grid = |a: Option<GridSpec>, b: Option<GridSpec>| match (a, b) {
            (Some(a), Some(b)) => Some(a.merge(b)),
            (a, b) => b.or(a),
        };
        AverageSpec {
            theta: merge_grid(self.theta, other.theta),
            delta: merge_grid(self.delta, other.delta),
            phase_count: other.phase_count.or(self.phase_count),
            mode: other.mode.or(self.mode),
            marginal: other.marginal.or(self.marginal),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_measurements: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// `full` (default) or `aligned`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average: Option<AverageSpec>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    /// Keys set in `overrides` replace those in `self`.
    pub fn merge(self, overrides: RunConfig) -> RunConfig {
        let nested = |a: Option<SweepSpec>, b: Option<SweepSpec>| match (a, b) {
            (Some(a), Some(b)) => Some(a.merge(b)),
            (a, b) => b.or(a),
        };
        let nested_avg = |a: Option<AverageSpec>, b: Option<AverageSpec>| match (a, b) {
            (Some(a), Some(b)) => Some(a.merge(b)),
            (a, b) => b.or(a),
        };
        RunConfig {
            phi_y: overrides.phi_y.or(self.phi_y),
            phi_z: overrides.phi_z.or(self.phi_z),
            theta: overrides.theta.or(self.theta),
            delta: overrides.delta.or(self.delta),
            n_var: overrides.n_var.or(self.n_var),
            lambda: overrides.lambda.or(self.lambda),
            n_measurements: overrides.n_measurements.or(self.n_measurements),
            objective: overrides.objective.or(self.objective),
            tol: overrides.tol.or(self.tol),
            model: overrides.model.or(self.model),
            sweep: nested(self.sweep, overrides.sweep).filter(|s| *s != SweepSpec::default()),
            average: nested_avg(self.average, overrides.average)
                .filter(|s| *s != AverageSpec::default()),
        }
    }

    fn required(v: Option<f64>, key: &str) -> Result<f64> {
        v.ok_or_else(|| Error::InvalidArgument(format!("missing required key `{key}`")))
    }

    pub fn model(&self) -> Result<Model> {
        self.model.as_deref().map_or(Ok(Model::Full), str::parse)
    }

    /// Parameters after applying the misalignment model.
    pub fn params(&self) -> Result<GyroParams> {
        let p = GyroParams::new(
            Self::required(self.phi_y, "phi_y")?,
            Self::required(self.phi_z, "phi_z")?,
            Self::required(self.theta, "theta")?,
            Self::required(self.delta, "delta")?,
        )?;
        Ok(self.model()?.apply(p))
    }

    pub fn n_var(&self) -> Result<f64> {
        let v = Self::required(self.n_var, "n_var")?;
        ProbeStats::symmetric(v, 0.0)?;
        Ok(v)
    }

    pub fn lambda(&self) -> Result<f64> {
        let l = self.lambda.unwrap_or(0.0);
        if !(l.abs() < 1.0) {
            return Err(Error::InvalidProbeStats(format!(
                "lambda out of range: {l}"
            )));
        }
        Ok(l)
    }

    pub fn probe_stats(&self) -> Result<ProbeStats> {
        ProbeStats::symmetric(self.n_var()?, self.lambda()?)
    }

    pub fn n_measurements(&self) -> Result<u32> {
        match self.n_measurements.unwrap_or(1) {
            0 => Err(Error::InvalidArgument(
                "n_measurements must be positive".into(),
            )),
            n => Ok(n),
        }
    }

    pub fn objective(&self) -> Result<Objective> {
        self.objective
            .as_deref()
            .map_or(Ok(Objective::SumPhaseVar), str::parse)
    }

    pub fn tol(&self) -> Result<f64> {
        let t = self.tol.unwrap_or(DEFAULT_TOL);
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(Error::InvalidArgument(format!(
                "tol must be positive, got {t}"
            )))
        }
    }

    pub fn sweep_axis_and_grid(&self) -> Result<(SweepAxis, Vec<f64>, bool)> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("missing `sweep` section".into()))?;
        let axis = s
            .axis
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("missing sweep `axis`".into()))?
            .parse()?;
        Ok((axis, s.grid().points()?, s.with_lambda_opt.unwrap_or(false)))
    }

    /// Nuisance grids for `average`, defaulting to the standard averaging set.
    pub fn average_grids(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let spec = self.average.clone().unwrap_or_default();
        let grid = |g: Option<GridSpec>| match g {
            Some(g) if !g.is_empty() => g.points(),
            _ => Ok(DEFAULT_NUISANCE_SET.to_vec()),
        };
        Ok((grid(spec.theta)?, grid(spec.delta)?))
    }

    pub fn phase_count(&self) -> Result<usize> {
        match self
            .average
            .as_ref()
            .and_then(|a| a.phase_count)
            .unwrap_or(DEFAULT_PHASE_COUNT)
        {
            0 => Err(Error::InvalidArgument(
                "phase_count must be positive".into(),
            )),
            n => Ok(n),
        }
    }

    pub fn averaging_mode(&self) -> Result<AveragingMode> {
        self.average
            .as_ref()
            .and_then(|a| a.mode.as_deref())
            .map_or(Ok(AveragingMode::default()), str::parse)
    }

    /// `Some(true)` to marginalise onto `theta`, `Some(false)` onto `delta`.
    pub fn marginal(&self) -> Result<Option<bool>> {
        match self.average.as_ref().and_then(|a| a.marginal.as_deref()) {
            None => Ok(None),
            Some("theta") => Ok(Some(true)),
            Some("delta") => Ok(Some(false)),
            Some(other) => Err(Error::InvalidArgument(format!(
                "unknown marginal `{other}`"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_defaults() {
        let c = RunConfig::from_json(
            r#"{"phi_y":0.66,"phi_z":0.17,"theta":0.02,"delta":0.013,"n_var":10}"#,
        )
        .unwrap();
        assert_eq!(c.n_measurements().unwrap(), 1);
        assert_eq!(c.tol().unwrap(), 1e-7);
        assert_eq!(c.lambda().unwrap(), 0.0);
        assert_eq!(c.objective().unwrap(), Objective::SumPhaseVar);
        assert_eq!(c.model().unwrap(), Model::Full);
        assert_eq!(c.params().unwrap().theta, 0.02);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_json(r#"{"phi_y":0.66,"omega":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"sweep":{"axis":"var","step":1}}"#).is_err());
    }

    #[test]
    fn missing_required_key() {
        let c = RunConfig::from_json(r#"{"phi_y":0.66}"#).unwrap();
        assert!(c.params().is_err());
        assert!(c.n_var().is_err());
    }

    #[test]
    fn lambda_range() {
        let c = RunConfig {
            lambda: Some(1.0),
            ..Default::default()
        };
        assert!(c
            .lambda()
            .unwrap_err()
            .to_string()
            .contains("lambda out of range"));
    }

    #[test]
    fn overrides_win() {
        let file = RunConfig::from_json(
            r#"{"phi_y":0.66,"n_var":10,"sweep":{"axis":"var","values":[1,10]}}"#,
        )
        .unwrap();
        let flags = RunConfig {
            phi_y: Some(0.1),
            sweep: Some(SweepSpec {
                axis: Some("lambda".into()),
                ..Default::default()
            }),
            ..Default::default()
        };
        let c = file.merge(flags);
        assert_eq!(c.phi_y, Some(0.1));
        assert_eq!(c.n_var, Some(10.0));
        let s = c.sweep.unwrap();
        assert_eq!(s.axis.as_deref(), Some("lambda"));
        assert_eq!(s.values, Some(vec![1.0, 10.0]));
    }

    #[test]
    fn grids() {
        let g = GridSpec {
            start: Some(-0.9),
            stop: Some(0.9),
            count: Some(181),
            ..Default::default()
        };
        let pts = g.points().unwrap();
        assert_eq!(pts.len(), 181);
        assert_eq!(pts[0], -0.9);
        assert_eq!(pts[180], 0.9);
        assert!((pts[90]).abs() < 1e-15);

        let g = GridSpec {
            start: Some(1.0),
            stop: Some(100.0),
            count: Some(3),
            log: Some(true),
            ..Default::default()
        };
        let pts = g.points().unwrap();
        assert!((pts[1] - 10.0).abs() < 1e-12);

        assert!(GridSpec {
            values: Some(vec![]),
            ..Default::default()
        }
        .points()
        .is_err());
        assert!(GridSpec {
            start: Some(1.0),
            ..Default::default()
        }
        .points()
        .is_err());
        assert!(GridSpec {
            values: Some(vec![1.0]),
            count: Some(2),
            ..Default::default()
        }
        .points()
        .is_err());
    }

    #[test]
    fn average_defaults() {
        let c = RunConfig::default();
        let (t, d) = c.average_grids().unwrap();
        assert_eq!(t, DEFAULT_NUISANCE_SET.to_vec());
        assert_eq!(d, DEFAULT_NUISANCE_SET.to_vec());
        assert_eq!(c.phase_count().unwrap(), DEFAULT_PHASE_COUNT);
        assert_eq!(c.averaging_mode().unwrap(), AveragingMode::MeanOfOptima);
        assert_eq!(c.marginal().unwrap(), None);
    }

    #[test]
    fn aligned_model_zeroes_misalignment() {
        let c = RunConfig::from_json(
            r#"{"phi_y":0.2,"phi_z":0.01,"theta":0.02,"delta":0.013,"n_var":10,"model":"aligned"}"#,
        )
        .unwrap();
        let p = c.params().unwrap();
        assert_eq!((p.theta, p.delta), (0.0, 0.0));
        assert!(RunConfig {
            model: Some("small".into()),
            ..Default::default()
        }
        .model()
        .is_err());
    }
}
