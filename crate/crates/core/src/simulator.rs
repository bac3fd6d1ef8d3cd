//! Time integration of the swimmer under prescribed shape controls.
//!
//! The shape obeys `ṡ = u`, so with a control held constant over a step the shape
//! is known exactly. The pose obeys `ġ = g·ξ(s(t))` with body twist `ξ`, which is
//! integrated with the Runge–Kutta–Munthe-Kaas method of order 4: the increment
//! `Ω` solves `Ω̇ = ξ + ½[Ω, ξ] + 1/12 [Ω, [Ω, ξ]]` and the pose is updated by the
//! SE(3) exponential, so rotations stay orthogonal to round-off.

use std::io::{self, Write};

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::controllability::{mixed_bracket, BracketConvention};
use crate::error::{Result, SwimError};
use crate::io::{write_csv, Cell};
use crate::lie::{commutator, exp_step, BodyTwist, Pose};
use crate::planner::lagrangian_power;
use crate::swimmer::{kernel, ConfigField, DragCoefficients, ShapeState, Swimmer};

/// Default integration step.
pub const DEFAULT_DT: f64 = 1e-3;

/// Slack allowed when checking control values against their bounds.
const BOUND_SLACK: f64 = 1e-12;

/// A control held constant for `duration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub u: Vec<f64>,
    pub duration: f64,
}

/// Piecewise-constant shape-rate signal with per-channel bounds `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    phases: Vec<Phase>,
    bounds: (f64, f64),
}

impl ControlSignal {
    /// Validates channel counts, bounds and durations.
    pub fn piecewise(phases: Vec<Phase>, bounds: (f64, f64)) -> Result<Self> {
        let (a, b) = bounds;
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(SwimError::InvalidInput(format!("bad control bounds [{a}, {b}]")));
        }
        if let Some(first) = phases.first() {
            let m = first.u.len();
            for (k, p) in phases.iter().enumerate() {
                if p.u.len() != m {
                    return Err(SwimError::InvalidInput(format!(
                        "phase {k} has {} channels, expected {m}",
                        p.u.len()
                    )));
                }
                if !(p.duration > 0.0 && p.duration.is_finite()) {
                    return Err(SwimError::InvalidInput(format!(
                        "phase {k} has non-positive duration {}",
                        p.duration
                    )));
                }
                if p.u.iter().any(|&v| !(v >= a - BOUND_SLACK && v <= b + BOUND_SLACK)) {
                    return Err(SwimError::InvalidInput(format!(
                        "phase {k} control {:?} outside [{a}, {b}]",
                        p.u
                    )));
                }
            }
        }
        Ok(Self { phases, bounds })
    }

    /// Zero-order hold of `values[k]` on `[k·cell, (k+1)·cell)`.
    pub fn sampled(values: Vec<Vec<f64>>, cell: f64, bounds: (f64, f64)) -> Result<Self> {
        Self::piecewise(
            values
                .into_iter()
                .map(|u| Phase { u, duration: cell })
                .collect(),
            bounds,
        )
    }

    /// Zero control on `channels` channels for `horizon`.
    pub fn zero(channels: usize, horizon: f64, bounds: (f64, f64)) -> Result<Self> {
        Self::piecewise(
            vec![Phase {
                u: vec![0.0; channels],
                duration: horizon,
            }],
            bounds,
        )
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn horizon(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn channels(&self) -> Option<usize> {
        self.phases.first().map(|p| p.u.len())
    }

    /// Control active at time `t` (right-continuous); zero past the horizon.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let mut t0 = 0.0;
        for p in &self.phases {
            if t < t0 + p.duration {
                return p.u.clone();
            }
            t0 += p.duration;
        }
        vec![0.0; self.channels().unwrap_or(0)]
    }

    /// The signal run backwards in time, `u(T − t)` negated. Undoes the shape change.
    pub fn reversed(&self) -> Result<Self> {
        let (a, b) = self.bounds;
        Self::piecewise(
            self.phases
                .iter()
                .rev()
                .map(|p| Phase {
                    u: p.u.iter().map(|v| -v).collect(),
                    duration: p.duration,
                })
                .collect(),
            (-b, -a),
        )
    }

    /// Net shape change `∫u dt`.
    pub fn net_shape_change(&self) -> Vec<f64> {
        let m = self.channels().unwrap_or(0);
        let mut acc = vec![0.0; m];
        for p in &self.phases {
            for (a, v) in acc.iter_mut().zip(&p.u) {
                *a += v * p.duration;
            }
        }
        acc
    }
}

/// One recorded state. `control` is the value applied on the step that starts here.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub pose: Pose,
    pub shape: ShapeState,
    pub twist: BodyTwist,
    pub control: Vec<f64>,
}

/// Time-ordered samples of a simulated motion.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub dt: f64,
    pub swimmer: Swimmer,
}

fn twist_at(swimmer: &Swimmer, shape: &ShapeState, u: &[f64]) -> Result<Vector6<f64>> {
    if u.iter().all(|&v| v == 0.0) {
        return Ok(Vector6::zeros());
    }
    Ok(swimmer.body_velocity(shape, u)?.to_vector())
}

fn dexpinv(omega: &Vector6<f64>, xi: &Vector6<f64>) -> Vector6<f64> {
    let c = commutator(omega, xi);
    xi + c * 0.5 + commutator(omega, &c) / 12.0
}

/// Advances `(pose, shape)` by `dt` under the constant control `u`.
pub fn step(
    swimmer: &Swimmer,
    pose: &Pose,
    shape: &ShapeState,
    u: &[f64],
    dt: f64,
) -> Result<(Pose, ShapeState)> {
    if !(dt > 0.0) {
        return Err(SwimError::PreconditionViolation(format!("dt must be positive, got {dt}")));
    }
    if u.len() != swimmer.shape_dim() {
        return Err(SwimError::InvalidInput(format!(
            "control has {} channels, swimmer needs {}",
            u.len(),
            swimmer.shape_dim()
        )));
    }
    let xi0 = twist_at(swimmer, shape, u)?;
    let xi_half = twist_at(swimmer, &shape.advanced(u, 0.5 * dt), u)?;
    let xi1 = twist_at(swimmer, &shape.advanced(u, dt), u)?;
    let k1 = xi0 * dt;
    let k2 = dexpinv(&(k1 * 0.5), &xi_half) * dt;
    let k3 = dexpinv(&(k2 * 0.5), &xi_half) * dt;
    let k4 = dexpinv(&k3, &xi1) * dt;
    let omega = (k1 + (k2 + k3) * 2.0 + k4) / 6.0;
    let pose_next = exp_step(pose, &BodyTwist::from_vector(&(omega / dt)), dt);
    Ok((pose_next, shape.advanced(u, dt)))
}

/// Integrates `signal` from `initial`, splitting steps at the signal's breakpoints.
/// Each phase is cut into `⌈duration / dt⌉` equal steps.
pub fn simulate(
    swimmer: &Swimmer,
    initial: (&Pose, &ShapeState),
    signal: &ControlSignal,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SwimError::PreconditionViolation(format!("dt must be positive, got {dt}")));
    }
    if let Some(m) = signal.channels() {
        if m != swimmer.shape_dim() {
            return Err(SwimError::InvalidInput(format!(
                "signal has {m} channels, swimmer needs {}",
                swimmer.shape_dim()
            )));
        }
    }
    let (mut pose, mut shape) = (*initial.0, initial.1.clone());
    let mut samples = Vec::new();
    let mut t0 = 0.0;
    for phase in signal.phases() {
        let n = ((phase.duration / dt) - 1e-9).ceil().max(1.0) as usize;
        let h = phase.duration / n as f64;
        for k in 0..n {
            samples.push(Sample {
                t: t0 + k as f64 * h,
                pose,
                shape: shape.clone(),
                twist: BodyTwist::from_vector(&twist_at(swimmer, &shape, &phase.u)?),
                control: phase.u.clone(),
            });
            let (p, s) = step(swimmer, &pose, &shape, &phase.u, h)?;
            pose = p;
            shape = s;
        }
        t0 += phase.duration;
    }
    let last_u = signal
        .phases()
        .last()
        .map(|p| p.u.clone())
        .unwrap_or_else(|| vec![0.0; swimmer.shape_dim()]);
    samples.push(Sample {
        t: t0,
        pose,
        twist: BodyTwist::from_vector(&twist_at(swimmer, &shape, &last_u)?),
        shape,
        control: last_u,
    });
    Ok(Trajectory {
        samples,
        dt,
        swimmer: swimmer.clone(),
    })
}

impl Trajectory {
    pub fn initial(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn terminal(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Largest orthogonality defect of the recorded rotations.
    pub fn max_orthogonality_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.pose.rotation.orthogonality_defect())
            .fold(0.0, f64::max)
    }

    /// Column names of [`Trajectory::write_csv`].
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "x1", "x2", "x3"].iter().map(|s| s.to_string()).collect();
        for r in 1..=3 {
            for c in 1..=3 {
                h.push(format!("r{r}{c}"));
            }
        }
        for i in 2..=self.swimmer.chain.links() {
            h.push(format!("theta_{i}"));
            h.push(format!("phi_{i}"));
        }
        for j in 1..=self.swimmer.shape_dim() {
            h.push(format!("u_{j}"));
        }
        h.push("power_density".into());
        h
    }

    /// Writes one row per sample; `power_density` is the general wrench–velocity
    /// density at the sample's shape and control.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut rows = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            let mut row: Vec<Cell> = vec![s.t.into()];
            row.extend(s.pose.translation.iter().map(|&x| Cell::from(x)));
            let r = s.pose.rotation.matrix();
            for i in 0..3 {
                for j in 0..3 {
                    row.push(r[(i, j)].into());
                }
            }
            for a in s.shape.angles() {
                row.push(a.theta.into());
                row.push(a.phi.into());
            }
            row.extend(s.control.iter().map(|&x| Cell::from(x)));
            let p = power_density(&self.swimmer, &s.shape, &s.control)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
            row.push(p.into());
            rows.push(row);
        }
        write_csv(out, &self.csv_header(), rows)
    }
}

/// `x(T) − x(0)` in the lab frame and the rotation angle of `R(0)ᵀR(T)`.
pub fn net_displacement(traj: &Trajectory) -> (Vector3<f64>, f64) {
    let a = &traj.initial().pose;
    let b = &traj.terminal().pose;
    let dx = b.translation - a.translation;
    let rel = a.rotation.transpose() * b.rotation;
    (dx, rel.angle())
}

/// Instantaneous power `Σ∫ f·ẋ ds + Σ∫ τ·ω ds` from the resistive force and torque
/// densities, for shape `shape` moving with rates `u`.
pub fn power_density(swimmer: &Swimmer, shape: &ShapeState, u: &[f64]) -> Result<f64> {
    if u.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let tw = swimmer.body_velocity(shape, u)?;
    let (v, w) = (tw.linear, tw.angular);
    let pairs: Vec<(f64, f64)> = shape.angles().iter().map(|a| (a.theta, a.phi)).collect();
    let frames = kernel::link_frames(&pairs);
    let lengths = swimmer.chain.lengths();
    let d = &swimmer.drag;
    let to_v = |a: &[f64; 3]| Vector3::new(a[0], a[1], a[2]);

    let mut power = 0.0;
    let mut torque = Vector3::zeros();
    let mut arm = Vector3::zeros();
    let mut arm_rate = Vector3::zeros();
    for (i, f) in frames.iter().enumerate() {
        let l = lengths[i];
        let e = to_v(&f.dir);
        let e_dot = if i == 0 {
            Vector3::zeros()
        } else {
            to_v(&f.d_phi) * u[2 * (i - 1)] + to_v(&f.d_theta) * u[2 * (i - 1) + 1]
        };
        let a_mat = e * e.transpose() * (d.c_par - d.c_perp) + Matrix3::identity() * d.c_perp;
        // velocity along the link is c + s·k for s ∈ [0, l]
        let c = v + w.cross(&arm) + arm_rate;
        let k = w.cross(&e) + e_dot;
        let (ac, ak) = (a_mat * c, a_mat * k);
        power += l * c.dot(&ac) + l * l * c.dot(&ak) + l * l * l / 3.0 * k.dot(&ak);
        torque += arm.cross(&(ac * l + ak * (0.5 * l * l)))
            + e.cross(&(ac * (0.5 * l * l) + ak * (l * l * l / 3.0)));
        if i == 0 {
            torque += e * (l * d.c_tau * e.dot(&w));
        }
        if i >= 1 {
            arm += e * l;
            arm_rate += e_dot * l;
        }
    }
    Ok(power + torque.dot(&w))
}

fn is_equal_two_link(swimmer: &Swimmer) -> bool {
    let l = swimmer.chain.lengths();
    l.len() == 2 && l[0] == l[1]
}

/// Trapezoid rule over steps, each step using its own control at both ends.
fn integrate_steps<F>(traj: &Trajectory, density: F) -> Result<f64>
where
    F: Fn(&ShapeState, &[f64]) -> Result<f64>,
{
    let mut total = 0.0;
    for w in traj.samples.windows(2) {
        let h = w[1].t - w[0].t;
        let u = &w[0].control;
        total += 0.5 * h * (density(&w[0].shape, u)? + density(&w[1].shape, u)?);
    }
    Ok(total)
}

/// Power expended along `traj`. Equal-length 2-link swimmers use the closed-form
/// Lagrangian; other chains use [`power_density`].
pub fn power_expended(traj: &Trajectory) -> Result<f64> {
    if is_equal_two_link(&traj.swimmer) {
        let drag = traj.swimmer.drag;
        let l = traj.swimmer.chain.lengths()[0];
        integrate_steps(traj, |s, u| {
            Ok(lagrangian_power(s.angles()[0].phi, u[0], u[1], &drag, l))
        })
    } else {
        power_expended_general(traj)
    }
}

/// Power expended along `traj` from the force and torque densities.
pub fn power_expended_general(traj: &Trajectory) -> Result<f64> {
    integrate_steps(traj, |s, u| power_density(&traj.swimmer, s, u))
}

/// Reciprocal stroke through the `φ` knots at unit rate, `θ̇ = 0`. The knots are
/// visited in order; a closed stroke starts and ends at the same value.
pub fn reciprocal_stroke(phi_knots: &[f64], bounds: (f64, f64)) -> Result<ControlSignal> {
    let phases = phi_knots
        .windows(2)
        .filter(|w| w[1] != w[0])
        .map(|w| Phase {
            u: vec![(w[1] - w[0]).signum(), 0.0],
            duration: (w[1] - w[0]).abs(),
        })
        .collect();
    ControlSignal::piecewise(phases, bounds)
}

/// Outcome of a scallop experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScallopExperiment {
    /// `|x(T) − x(0)|`.
    pub displacement: f64,
    /// Angle of `R(0)ᵀR(T)`.
    pub rotation_angle: f64,
    /// Largest distance of `x(t)` from the plane through `x(0)` spanned by `ê₃` and
    /// `(cos θ₀, sin θ₀, 0)`, both carried by `R(0)`.
    pub plane_deviation: f64,
    pub steps: usize,
}

/// Runs a stroke of the 2-link swimmer with `c_tau = 0` from shape `(θ₀, φ₀)`.
/// The `φ` channel of the signal must be closed.
pub fn scallop_experiment(
    drag: &DragCoefficients,
    l: f64,
    signal: &ControlSignal,
    theta0: f64,
    phi0: f64,
    dt: f64,
) -> Result<ScallopExperiment> {
    if drag.c_tau != 0.0 {
        return Err(SwimError::PreconditionViolation(format!(
            "scallop experiment needs c_tau = 0, got {}",
            drag.c_tau
        )));
    }
    let net = signal.net_shape_change();
    if net.first().is_some_and(|d| d.abs() > 1e-12) {
        return Err(SwimError::PreconditionViolation(format!(
            "phi path is not closed (net change {})",
            net[0]
        )));
    }
    let sw = Swimmer::two_link(l, *drag)?;
    let start = Pose::identity();
    let traj = simulate(&sw, (&start, &ShapeState::two_link(theta0, phi0)), signal, dt)?;
    Ok(scallop_report(&traj, theta0))
}

fn scallop_report(traj: &Trajectory, theta0: f64) -> ScallopExperiment {
    let p0 = &traj.initial().pose;
    let normal = p0.rotation.matrix() * Vector3::new(-theta0.sin(), theta0.cos(), 0.0);
    let plane_deviation = traj
        .samples
        .iter()
        .map(|s| normal.dot(&(s.pose.translation - p0.translation)).abs())
        .fold(0.0, f64::max);
    let (dx, angle) = net_displacement(traj);
    ScallopExperiment {
        displacement: dx.norm(),
        rotation_angle: angle,
        plane_deviation,
        steps: traj.samples.len() - 1,
    }
}

/// Where the commutator loop sits relative to the given shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopPlacement {
    /// The loop starts and ends at the given shape.
    StartAtShape,
    /// The loop is the square of side `ε` centered on the given shape; it starts at
    /// the corner `shape − (ε/2)(ê₁ + ê₂)`. This removes the `O(ε³)` drift that comes
    /// from the bracket varying across the loop.
    CenteredOnShape,
}

/// Outcome of the four-phase commutator loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorResult {
    pub pose: Pose,
    /// `log` of the net pose.
    pub pose_log: Vector6<f64>,
    /// `[V₁, V₂]` at the given shape (geometric bracket).
    pub bracket: ConfigField,
    /// `ε²·[V₁, V₂]` twist.
    pub predicted: Vector6<f64>,
    pub start_shape: ShapeState,
    pub final_shape: ShapeState,
}

/// Runs `u = (1,0), (0,1), (−1,0), (0,−1)` on the first two channels, each for `eps`,
/// with `steps_per_phase` RK steps per phase.
pub fn commutator_maneuver(
    swimmer: &Swimmer,
    shape: &ShapeState,
    eps: f64,
    placement: LoopPlacement,
    steps_per_phase: usize,
) -> Result<CommutatorResult> {
    if !(eps > 0.0) {
        return Err(SwimError::PreconditionViolation(format!("eps must be positive, got {eps}")));
    }
    let m = swimmer.shape_dim();
    let unit = |j: usize, s: f64| {
        let mut u = vec![0.0; m];
        u[j] = s;
        Phase { u, duration: eps }
    };
    let signal = ControlSignal::piecewise(
        vec![unit(0, 1.0), unit(1, 1.0), unit(0, -1.0), unit(1, -1.0)],
        (-1.0, 1.0),
    )?;
    let start_shape = match placement {
        LoopPlacement::StartAtShape => shape.clone(),
        LoopPlacement::CenteredOnShape => {
            let mut v = shape.to_control_vector();
            v[0] -= 0.5 * eps;
            v[1] -= 0.5 * eps;
            ShapeState::from_control_vector(&v)
        }
    };
    let traj = simulate(
        swimmer,
        (&Pose::identity(), &start_shape),
        &signal,
        eps / steps_per_phase.max(1) as f64,
    )?;
    let field = |j: usize| move |s: &ShapeState| Ok(swimmer.control_fields(s)?[j].clone());
    let bracket = mixed_bracket(field(0), field(1), shape, BracketConvention::Geometric)?;
    let end = traj.terminal();
    Ok(CommutatorResult {
        pose: end.pose,
        pose_log: end.pose.log(),
        predicted: bracket.twist.to_vector() * (eps * eps),
        bracket,
        start_shape,
        final_shape: end.shape.clone(),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Power for holding `φ = π/2` at `u = (1, 0)` over unit time, from the closed form.
pub fn reference_hold_power(drag: &DragCoefficients, l: f64) -> f64 {
    let (cpa, cpe) = (drag.c_par, drag.c_perp);
    l.powi(3) * cpe * (4.0 * cpa + cpe) / (24.0 * (cpa + cpe))
}
