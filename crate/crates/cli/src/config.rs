//! Experiment configuration files.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use stokeswim::controllability::{BracketConvention, ScanRanges, DEFAULT_RANK_TOL};
use stokeswim::planner::{PlannerOptions, Tolerances};
use stokeswim::simulator::{LoopPlacement, Phase};
use stokeswim::{DragCoefficients, LinkChain, Swimmer};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional for `scan`, which draws its own drag coefficients and lengths.
    #[serde(default)]
    pub swimmer: Option<SwimmerConfig>,
    pub experiment: Experiment,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwimmerConfig {
    pub lengths: Vec<f64>,
    pub drag: DragCoefficients,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// File-name stem of every artifact; defaults to the experiment kind.
    #[serde(default)]
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Experiment {
    Simulate(SimulateParams),
    Fields(FieldsParams),
    Rank(RankParams),
    Delta(DeltaParams),
    Scan(ScanParams),
    Scallop(ScallopParams),
    Commutator(CommutatorParams),
    Plan(PlanParams),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate(_) => "simulate",
            Experiment::Fields(_) => "fields",
            Experiment::Rank(_) => "rank",
            Experiment::Delta(_) => "delta",
            Experiment::Scan(_) => "scan",
            Experiment::Scallop(_) => "scallop",
            Experiment::Commutator(_) => "commutator",
            Experiment::Plan(_) => "plan",
        }
    }
}

fn default_bounds() -> (f64, f64) {
    (-1.0, 1.0)
}

fn default_depth() -> usize {
    4
}

fn default_tol() -> f64 {
    DEFAULT_RANK_TOL
}

fn default_convention() -> BracketConvention {
    BracketConvention::Geometric
}

/// Shape given as `(φ̇₂, θ̇₂, …)`-ordered control coordinates `[φ₂, θ₂, φ₃, θ₃, …]`.
pub type ShapeVector = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    /// Initial shape; defaults to the certificate shape.
    #[serde(default)]
    pub shape: Option<ShapeVector>,
    pub phases: Vec<Phase>,
    #[serde(default = "default_bounds")]
    pub bounds: (f64, f64),
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsParams {
    pub shapes: Vec<ShapeVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankParams {
    #[serde(default)]
    pub shape: Option<ShapeVector>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default = "default_convention")]
    pub convention: BracketConvention,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaParams {}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    #[serde(default)]
    pub ranges: ScanRanges,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_knots() -> Vec<f64> {
    vec![FRAC_PI_6, FRAC_PI_6 + FRAC_PI_4, FRAC_PI_6]
}

fn default_theta0() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScallopParams {
    /// φ values visited at unit rate; the first knot is the starting φ.
    #[serde(default = "default_knots")]
    pub knots: Vec<f64>,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_eps() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}

fn default_steps() -> usize {
    50
}

fn default_placement() -> LoopPlacement {
    LoopPlacement::CenteredOnShape
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorParams {
    #[serde(default)]
    pub shape: Option<ShapeVector>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_placement")]
    pub placement: LoopPlacement,
    #[serde(default = "default_steps")]
    pub steps_per_phase: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalConfig {
    #[serde(default)]
    pub translation: [f64; 3],
    /// Rotation vector (axis times angle).
    #[serde(default)]
    pub rotation: [f64; 3],
}

/// Objective; the power horizon is either absolute or a multiple of the min-time horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostConfig {
    MinTime,
    Power {
        #[serde(default)]
        horizon: Option<f64>,
        #[serde(default)]
        horizon_factor: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanParams {
    #[serde(default)]
    pub shape: Option<ShapeVector>,
    pub goal: GoalConfig,
    pub cost: CostConfig,
    #[serde(default)]
    pub options: PlannerOptions,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn check_dt(field: &str, dt: Option<f64>) -> Result<(), CliError> {
    match dt {
        Some(d) if !(d.is_finite() && d > 0.0) => Err(invalid(field, format!("must be positive, got {d}"))),
        _ => Ok(()),
    }
}

fn check_shape(field: &str, shape: &Option<ShapeVector>, dim: usize) -> Result<(), CliError> {
    match shape {
        Some(s) if s.len() != dim => Err(invalid(
            field,
            format!("expected {dim} angles for this chain, got {}", s.len()),
        )),
        Some(s) if s.iter().any(|a| !a.is_finite()) => Err(invalid(field, "angles must be finite")),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// The configured swimmer, validated.
    pub fn swimmer(&self) -> Result<Swimmer, CliError> {
        let sc = self
            .swimmer
            .as_ref()
            .ok_or_else(|| invalid("swimmer", "required for this experiment"))?;
        sc.drag.validate().map_err(|e| invalid("swimmer.drag", e))?;
        let chain = LinkChain::new(sc.lengths.clone()).map_err(|e| invalid("swimmer.lengths", e))?;
        Ok(Swimmer::new(chain, sc.drag))
    }

    /// Length `L` of an equal-length 2-link swimmer.
    pub fn two_link_length(&self) -> Result<f64, CliError> {
        let sw = self.swimmer()?;
        match sw.chain.lengths() {
            [a, b] if a == b => Ok(*a),
            other => Err(invalid(
                "swimmer.lengths",
                format!("{} needs two equal links, got {other:?}", self.experiment.name()),
            )),
        }
    }

    /// Checks every precondition that can be checked before running.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(prefix) = &self.output.prefix {
            if prefix.is_empty() || prefix.contains(['/', '\\']) {
                return Err(invalid("output.prefix", "must be a plain, non-empty file name"));
            }
        }
        if let Experiment::Scan(p) = &self.experiment {
            p.ranges.validate().map_err(|e| invalid("experiment.params.ranges", e))?;
            if p.samples == 0 {
                return Err(invalid("experiment.params.samples", "must be at least 1"));
            }
            if let Some(sc) = &self.swimmer {
                sc.drag.validate().map_err(|e| invalid("swimmer.drag", e))?;
            }
            return Ok(());
        }
        let sw = self.swimmer()?;
        let dim = sw.shape_dim();
        match &self.experiment {
            Experiment::Simulate(p) => {
                check_shape("experiment.params.shape", &p.shape, dim)?;
                check_dt("experiment.params.dt", p.dt)?;
                if let Some((i, _)) = p.phases.iter().enumerate().find(|(_, ph)| ph.u.len() != dim) {
                    return Err(invalid(
                        &format!("experiment.params.phases[{i}].u"),
                        format!("expected {dim} control channels"),
                    ));
                }
            }
            Experiment::Fields(p) => {
                if p.shapes.is_empty() {
                    return Err(invalid("experiment.params.shapes", "at least one shape is required"));
                }
                for (i, s) in p.shapes.iter().enumerate() {
                    check_shape(&format!("experiment.params.shapes[{i}]"), &Some(s.clone()), dim)?;
                }
            }
            Experiment::Rank(p) => {
                check_shape("experiment.params.shape", &p.shape, dim)?;
                if p.depth < 1 {
                    return Err(invalid("experiment.params.depth", "must be at least 1"));
                }
                if !(p.tolerance > 0.0 && p.tolerance < 1.0) {
                    return Err(invalid("experiment.params.tolerance", "must lie in (0, 1)"));
                }
            }
            Experiment::Delta(_) => {}
            Experiment::Scallop(p) => {
                self.two_link_length()?;
                if sw.drag.c_tau != 0.0 {
                    return Err(invalid("swimmer.drag.c_tau", "the scallop experiment needs c_tau = 0"));
                }
                if p.knots.len() < 2 || p.knots.first() != p.knots.last() {
                    return Err(invalid(
                        "experiment.params.knots",
                        "need at least two knots, first equal to last",
                    ));
                }
                check_dt("experiment.params.dt", p.dt)?;
            }
            Experiment::Commutator(p) => {
                check_shape("experiment.params.shape", &p.shape, dim)?;
                if p.eps.is_empty() || p.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                    return Err(invalid("experiment.params.eps", "need positive loop sizes"));
                }
                if p.steps_per_phase == 0 {
                    return Err(invalid("experiment.params.steps_per_phase", "must be at least 1"));
                }
            }
            Experiment::Plan(p) => {
                check_shape("experiment.params.shape", &p.shape, dim)?;
                let tol_ok = |t: &Tolerances| t.position > 0.0 && t.orientation > 0.0;
                if p.options.tolerances.as_ref().is_some_and(|t| !tol_ok(t)) {
                    return Err(invalid("experiment.params.options.tolerances", "must be positive"));
                }
                if let CostConfig::Power {
                    horizon,
                    horizon_factor,
                } = p.cost
                {
                    match (horizon, horizon_factor) {
                        (Some(h), None) if h > 0.0 => {}
                        (None, Some(f)) if f >= 1.0 => {}
                        _ => {
                            return Err(invalid(
                                "experiment.params.cost",
                                "power cost needs exactly one of horizon > 0 or horizon_factor >= 1",
                            ))
                        }
                    }
                }
            }
            Experiment::Scan(_) => unreachable!(),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(experiment: &str) -> String {
        format!(
            r#"{{"swimmer": {{"lengths": [1, 1], "drag": {{"c_par": 1, "c_perp": 2, "c_tau": 1}}}},
                "experiment": {experiment}}}"#
        )
    }

    #[test]
    fn parses_defaults() {
        let cfg = ExperimentConfig::parse(&base(r#"{"kind": "rank", "params": {}}"#)).unwrap();
        assert_eq!(cfg.seed, 0);
        match &cfg.experiment {
            Experiment::Rank(p) => {
                assert_eq!(p.depth, 4);
                assert_eq!(p.convention, BracketConvention::Geometric);
            }
            other => panic!("{other:?}"),
        }
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_reversed_drag() {
        let text = base(r#"{"kind": "delta", "params": {}}"#).replace(r#""c_par": 1"#, r#""c_par": 3"#);
        let err = ExperimentConfig::parse(&text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("swimmer.drag"), "{err}");
    }

    #[test]
    fn rejects_wrong_shape_length() {
        let cfg = ExperimentConfig::parse(&base(r#"{"kind": "rank", "params": {"shape": [1, 2, 3]}}"#)).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("experiment.params.shape"));
    }

    #[test]
    fn scallop_needs_zero_torsion() {
        let cfg = ExperimentConfig::parse(&base(r#"{"kind": "scallop", "params": {}}"#)).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("c_tau"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::parse(&base(r#"{"kind": "delta", "params": {"x": 1}}"#)).is_err());
    }

    #[test]
    fn scan_does_not_need_a_swimmer() {
        let cfg = ExperimentConfig::parse(r#"{"experiment": {"kind": "scan", "params": {"samples": 3}}}"#).unwrap();
        cfg.validate().unwrap();
    }
}
