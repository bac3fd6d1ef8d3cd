//! Dispatch of each experiment kind and the artifacts it writes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::Serialize;

use stokeswim::controllability::{
    certificate_shape, delta_closed_form, delta_determinant, lie_rank, nlink_delta, parameter_scan,
    scallop_check,
};
use stokeswim::io::{write_csv, Cell};
use stokeswim::planner::{evaluate_cost, goal_pose, plan_to_pose, revalidate, CostKind, PlannerOptions};
use stokeswim::simulator::{
    commutator_maneuver, log_log_slope, net_displacement, power_expended, reciprocal_stroke,
    scallop_experiment, simulate, ControlSignal, Trajectory, DEFAULT_DT,
};
use stokeswim::{Pose, ShapeState, Swimmer};

use crate::config::{
    CommutatorParams, CostConfig, Experiment, ExperimentConfig, FieldsParams, PlanParams, RankParams,
    ScallopParams, ScanParams, ShapeVector, SimulateParams,
};
use crate::CliError;

/// Resolved run settings after command-line overrides.
pub struct RunContext {
    pub out_dir: PathBuf,
    pub prefix: String,
    pub seed: u64,
    pub dt: Option<f64>,
}

/// What a run produced.
pub struct RunSummary {
    pub artifacts: Vec<PathBuf>,
    pub message: String,
    pub converged: bool,
}

struct Writer<'a> {
    ctx: &'a RunContext,
    artifacts: Vec<PathBuf>,
}

impl Writer<'_> {
    fn path(&mut self, suffix: &str) -> PathBuf {
        let p = self.ctx.out_dir.join(format!("{}{suffix}", self.ctx.prefix));
        self.artifacts.push(p.clone());
        p
    }

    fn create(&mut self, suffix: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path(suffix);
        Ok(BufWriter::new(File::create(&p).map_err(|e| CliError::io(&p, e))?))
    }

    fn json<T: Serialize>(&mut self, suffix: &str, value: &T) -> Result<(), CliError> {
        let mut f = self.create(suffix)?;
        serde_json::to_writer_pretty(&mut f, value).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(f).and_then(|_| f.flush()).map_err(|e| CliError::Io(e.to_string()))
    }

    fn csv<R: AsRef<[Cell]>>(&mut self, suffix: &str, header: &[&str], rows: &[R]) -> Result<(), CliError> {
        let mut f = self.create(suffix)?;
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        write_csv(&mut f, &header, rows)
            .and_then(|_| f.flush())
            .map_err(|e| CliError::Io(e.to_string()))
    }

    fn trajectory(&mut self, suffix: &str, traj: &Trajectory) -> Result<(), CliError> {
        let mut f = self.create(suffix)?;
        traj.write_csv(&mut f)
            .and_then(|_| f.flush())
            .map_err(|e| CliError::Io(e.to_string()))
    }

    /// Plot data `(t, x, y, z)` of the swimmer position.
    fn position_plot(&mut self, suffix: &str, traj: &Trajectory) -> Result<(), CliError> {
        let rows: Vec<[Cell; 4]> = traj
            .samples
            .iter()
            .map(|s| {
                let x = s.pose.translation;
                [s.t.into(), x[0].into(), x[1].into(), x[2].into()]
            })
            .collect();
        self.csv(suffix, &["t", "x", "y", "z"], &rows)
    }
}

fn shape_or_certificate(shape: &Option<ShapeVector>, sw: &Swimmer) -> ShapeState {
    match shape {
        Some(v) => ShapeState::from_control_vector(v),
        None => certificate_shape(sw.chain.links()),
    }
}

#[derive(Serialize)]
struct TrajectorySummary {
    horizon: f64,
    steps: usize,
    dt: f64,
    displacement: [f64; 3],
    rotation_angle: f64,
    power_expended: f64,
    max_orthogonality_defect: f64,
}

fn summarize(traj: &Trajectory) -> Result<TrajectorySummary, CliError> {
    let (dx, angle) = net_displacement(traj);
    Ok(TrajectorySummary {
        horizon: traj.terminal().t,
        steps: traj.samples.len() - 1,
        dt: traj.dt,
        displacement: [dx[0], dx[1], dx[2]],
        rotation_angle: angle,
        power_expended: power_expended(traj)?,
        max_orthogonality_defect: traj.max_orthogonality_defect(),
    })
}

pub fn run(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    if let Some(dt) = ctx.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CliError::Config(format!("--dt: must be positive, got {dt}")));
        }
    }
    fs::create_dir_all(&ctx.out_dir).map_err(|e| CliError::io(&ctx.out_dir, e))?;
    let mut w = Writer {
        ctx,
        artifacts: Vec::new(),
    };
    let (message, converged) = match &cfg.experiment {
        Experiment::Simulate(p) => (run_simulate(cfg, p, &mut w)?, true),
        Experiment::Fields(p) => (run_fields(cfg, p, &mut w)?, true),
        Experiment::Rank(p) => (run_rank(cfg, p, &mut w)?, true),
        Experiment::Delta(_) => (run_delta(cfg, &mut w)?, true),
        Experiment::Scan(p) => (run_scan(p, &mut w)?, true),
        Experiment::Scallop(p) => (run_scallop(cfg, p, &mut w)?, true),
        Experiment::Commutator(p) => (run_commutator(cfg, p, &mut w)?, true),
        Experiment::Plan(p) => run_plan(cfg, p, &mut w)?,
    };
    Ok(RunSummary {
        artifacts: w.artifacts,
        message,
        converged,
    })
}

fn run_simulate(cfg: &ExperimentConfig, p: &SimulateParams, w: &mut Writer) -> Result<String, CliError> {
    let sw = cfg.swimmer()?;
    let shape = shape_or_certificate(&p.shape, &sw);
    let signal = ControlSignal::piecewise(p.phases.clone(), p.bounds)?;
    let dt = w.ctx.dt.or(p.dt).unwrap_or(DEFAULT_DT);
    let traj = simulate(&sw, (&Pose::identity(), &shape), &signal, dt)?;
    let summary = summarize(&traj)?;
    w.trajectory(".csv", &traj)?;
    w.json(".json", &summary)?;
    w.position_plot("_plot.csv", &traj)?;
    Ok(format!(
        "simulated {} steps, |dx| = {:.6e}, rotation = {:.6e} rad",
        summary.steps,
        Vector3::from(summary.displacement).norm(),
        summary.rotation_angle
    ))
}

fn run_fields(cfg: &ExperimentConfig, p: &FieldsParams, w: &mut Writer) -> Result<String, CliError> {
    let sw = cfg.swimmer()?;
    let dim = sw.shape_dim();
    let mut header: Vec<String> = (0..dim).map(|k| format!("s{}", k + 1)).collect();
    header.push("field".into());
    header.extend(["v1", "v2", "v3", "w1", "w2", "w3"].map(String::from));
    header.extend((0..dim).map(|k| format!("rate{}", k + 1)));
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    for s in &p.shapes {
        let fields = sw.control_fields(&ShapeState::from_control_vector(s))?;
        for (j, f) in fields.iter().enumerate() {
            let mut row: Vec<Cell> = s.iter().map(|&a| a.into()).collect();
            row.push((j + 1).into());
            row.extend(f.to_vector().iter().map(|&x| Cell::Float(x)));
            rows.push(row);
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    w.csv(".csv", &header, &rows)?;
    Ok(format!("wrote {} fields at {} shapes", rows.len(), p.shapes.len()))
}

fn run_rank(cfg: &ExperimentConfig, p: &RankParams, w: &mut Writer) -> Result<String, CliError> {
    let sw = cfg.swimmer()?;
    let shape = shape_or_certificate(&p.shape, &sw);
    let report = lie_rank(&sw, &shape, p.depth, p.tolerance, p.convention)?;
    #[derive(Serialize)]
    struct Out<'a> {
        shape: Vec<f64>,
        depth: usize,
        convention: stokeswim::controllability::BracketConvention,
        #[serde(flatten)]
        report: &'a stokeswim::controllability::RankReport,
    }
    w.json(
        ".json",
        &Out {
            shape: shape.to_control_vector(),
            depth: p.depth,
            convention: p.convention,
            report: &report,
        },
    )?;
    Ok(format!("rank {} from {} bracket vectors", report.rank, report.vectors))
}

fn run_delta(cfg: &ExperimentConfig, w: &mut Writer) -> Result<String, CliError> {
    let sw = cfg.swimmer()?;
    #[derive(Serialize)]
    struct Out {
        delta_numeric: f64,
        delta_closed_form: Option<f64>,
        rel_error: Option<f64>,
    }
    let out = match cfg.two_link_length() {
        Ok(l) => {
            let numeric = delta_determinant(&sw.drag, l)?;
            let closed = delta_closed_form(&sw.drag, l);
            Out {
                delta_numeric: numeric,
                delta_closed_form: Some(closed),
                rel_error: Some((numeric - closed).abs() / closed.abs()),
            }
        }
        // no closed form exists for other chains
        Err(_) => Out {
            delta_numeric: nlink_delta(&sw.chain, &sw.drag)?,
            delta_closed_form: None,
            rel_error: None,
        },
    };
    w.json(".json", &out)?;
    Ok(match out.rel_error {
        Some(e) => format!("delta = {:.12e}, relative error {e:.2e}", out.delta_numeric),
        None => format!("delta = {:.12e}", out.delta_numeric),
    })
}

fn run_scan(p: &ScanParams, w: &mut Writer) -> Result<String, CliError> {
    let table = parameter_scan(&p.ranges, p.samples, w.ctx.seed)?;
    let rows: Vec<[Cell; 6]> = table
        .rows
        .iter()
        .map(|r| [r.c_par.into(), r.c_perp.into(), r.c_tau.into(), r.l.into(), r.delta.into(), r.rank.into()])
        .collect();
    w.csv(".csv", &["c_par", "c_perp", "c_tau", "L", "delta", "rank"], &rows)?;
    #[derive(Serialize)]
    struct Out {
        samples: usize,
        seed: u64,
        fraction_rank6: f64,
    }
    w.json(
        ".json",
        &Out {
            samples: p.samples,
            seed: w.ctx.seed,
            fraction_rank6: table.fraction_rank6,
        },
    )?;
    Ok(format!(
        "{} samples, rank 6 on a fraction {:.4}",
        p.samples, table.fraction_rank6
    ))
}

fn run_scallop(cfg: &ExperimentConfig, p: &ScallopParams, w: &mut Writer) -> Result<String, CliError> {
    let sw = cfg.swimmer()?;
    let l = cfg.two_link_length()?;
    let dt = w.ctx.dt.or(p.dt).unwrap_or(1e-4);
    let stroke = reciprocal_stroke(&p.knots, (-1.0, 1.0))?;
    let rep = scallop_experiment(&sw.drag, l, &stroke, p.theta0, p.knots[0], dt)?;
    let shapes: Vec<(f64, f64)> = p.knots.iter().map(|&phi| (p.theta0, phi)).collect();
    let check = scallop_check(&sw.drag, l, &shapes, 4)?;
    w.csv(
        ".csv",
        &["displacement", "rotation_angle", "plane_deviation", "steps"],
        &[[
            rep.displacement.into(),
            rep.rotation_angle.into(),
            rep.plane_deviation.into(),
            rep.steps.into(),
        ]],
    )?;
    #[derive(Serialize)]
    struct Out<'a> {
        dt: f64,
        experiment: &'a stokeswim::simulator::ScallopExperiment,
        degeneracy: &'a stokeswim::controllability::ScallopReport,
    }
    w.json(
        ".json",
        &Out {
            dt,
            experiment: &rep,
            degeneracy: &check,
        },
    )?;
    Ok(format!(
        "|dx| = {:.3e}, rotation = {:.3e}, plane deviation = {:.3e}",
        rep.displacement, rep.rotation_angle, rep.plane_deviation
    ))
}

fn run_commutator(cfg: &ExperimentConfig, p: &CommutatorParams, w: &mut Writer) -> Result<String, CliError> {
    let sw = cfg.swimmer()?;
    let shape = shape_or_certificate(&p.shape, &sw);
    let mut rows = Vec::with_capacity(p.eps.len());
    let mut mags = Vec::with_capacity(p.eps.len());
    for &eps in &p.eps {
        let r = commutator_maneuver(&sw, &shape, eps, p.placement, p.steps_per_phase)?;
        let mag = r.pose_log.norm();
        let cosine = r.pose_log.dot(&r.predicted) / (mag * r.predicted.norm());
        mags.push(mag);
        rows.push([eps.into(), mag.into(), r.predicted.norm().into(), Cell::Float(cosine)]);
    }
    w.csv(".csv", &["eps", "log_pose_norm", "predicted_norm", "cosine"], &rows)?;
    let slope = if p.eps.len() >= 2 {
        Some(log_log_slope(&p.eps, &mags))
    } else {
        None
    };
    #[derive(Serialize)]
    struct Out {
        placement: stokeswim::simulator::LoopPlacement,
        steps_per_phase: usize,
        slope: Option<f64>,
    }
    w.json(
        ".json",
        &Out {
            placement: p.placement,
            steps_per_phase: p.steps_per_phase,
            slope,
        },
    )?;
    Ok(match slope {
        Some(s) => format!("log-log slope {s:.4}"),
        None => "single loop size, no slope".into(),
    })
}

fn run_plan(cfg: &ExperimentConfig, p: &PlanParams, w: &mut Writer) -> Result<(String, bool), CliError> {
    let sw = cfg.swimmer()?;
    let shape = shape_or_certificate(&p.shape, &sw);
    let start_pose = Pose::identity();
    let start = (&start_pose, &shape);
    let goal = goal_pose(Vector3::from(p.goal.translation), Vector3::from(p.goal.rotation));
    let mut opts: PlannerOptions = p.options.clone();
    opts.seed = w.ctx.seed;
    if let Some(dt) = w.ctx.dt {
        opts.dt = dt;
    }

    let (plan, kind, min_time_horizon) = match p.cost {
        CostConfig::MinTime => {
            let plan = plan_to_pose(&sw, start, &goal, CostKind::MinTime, &opts)?;
            let h = plan.horizon();
            (plan, CostKind::MinTime, Some(h))
        }
        CostConfig::Power {
            horizon,
            horizon_factor,
        } => {
            // a feasible min-time plan seeds the power search
            let fast = match opts.seed_plan.take() {
                Some(seed) => seed,
                None => plan_to_pose(&sw, start, &goal, CostKind::MinTime, &opts)?,
            };
            let h = horizon.unwrap_or_else(|| horizon_factor.unwrap_or(1.0) * fast.horizon());
            let kind = CostKind::Power { horizon: h };
            let fast_h = fast.horizon();
            opts.seed_plan = fast.converged.then_some(fast);
            (plan_to_pose(&sw, start, &goal, kind, &opts)?, kind, Some(fast_h))
        }
    };

    let (cost, err) = evaluate_cost(&plan, kind, &sw, start, &goal, opts.dt)?;
    let revalidated = revalidate(&plan, &sw, start, &goal, opts.dt)?;
    let traj = simulate(&sw, start, &plan.to_signal()?, opts.dt)?;

    #[derive(Serialize)]
    struct Out<'a> {
        converged: bool,
        revalidated: bool,
        cost: f64,
        horizon: f64,
        min_time_horizon: Option<f64>,
        position_error: f64,
        orientation_error: f64,
        interior_fraction: f64,
        plan: &'a stokeswim::planner::ManeuverPlan,
    }
    w.json(
        ".json",
        &Out {
            converged: plan.converged,
            revalidated,
            cost,
            horizon: plan.horizon(),
            min_time_horizon,
            position_error: err.position,
            orientation_error: err.orientation,
            interior_fraction: plan.interior_fraction(),
            plan: &plan,
        },
    )?;
    w.trajectory("_trajectory.csv", &traj)?;
    w.position_plot("_plot.csv", &traj)?;
    let converged = plan.converged && revalidated;
    Ok((
        format!(
            "{} plan: horizon {:.4}, cost {:.6e}, terminal error {:.2e} / {:.2e}",
            if converged { "converged" } else { "unconverged" },
            plan.horizon(),
            cost,
            err.position,
            err.orientation
        ),
        converged,
    ))
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
