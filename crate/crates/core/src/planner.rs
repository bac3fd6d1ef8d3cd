//! Direct-shooting search for shape strokes that carry the swimmer to a target pose.
//!
//! Minimal-time plans use a fixed template of bang-bang phases whose corner values
//! are drawn at random per restart; only the phase durations are optimized. Each
//! restart first projects onto the terminal constraint with Levenberg–Marquardt,
//! then shortens the horizon with Nelder–Mead on a penalized objective, and
//! projects back. Power plans keep the phase durations fixed and optimize the
//! phase values inside the bounds.
//!
//! The search runs in time units normalized by the largest control magnitude, so
//! scaling symmetric bounds by `c` scales the returned horizon by exactly `1/c`.

use nalgebra::{DVector, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwimError};
use crate::lie::Pose;
use crate::optimize::{levenberg_marquardt, nelder_mead, LmOptions, NelderMeadOptions};
use crate::simulator::{power_density, power_expended, simulate, step, ControlSignal, Phase};
use crate::swimmer::{DragCoefficients, ShapeState, Swimmer};

/// Power Lagrangian of the equal-length 2-link swimmer, quadratic in
/// `(u₁, u₂) = (φ̇, θ̇)`.
pub fn lagrangian_power(phi: f64, u1: f64, u2: f64, drag: &DragCoefficients, l: f64) -> f64 {
    let (cpa, cpe, ct) = (drag.c_par, drag.c_perp, drag.c_tau);
    let (s, c) = phi.sin_cos();
    let c2 = (2.0 * phi).cos();
    let l3 = l * l * l;
    let a = l3 * cpe * (4.0 * cpa + cpe + (4.0 * cpa - cpe) * c)
        / (24.0 * (cpa + cpe + (cpa - cpe) * c));
    let den = -36.0 * ct * c + 45.0 * ct + c2 * (15.0 * ct - 2.0 * cpe * l * l) + 2.0 * cpe * l * l;
    let b = 12.0 * ct * ct * cpe * l3 * s * s * (5.0 * (c2 + 3.0) - 12.0 * c) / (den * den);
    a * u1 * u1 + b * u2 * u2
}

/// Terminal tolerances: position in length units, orientation in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub position: f64,
    pub orientation: f64,
}

/// Objective of a planning problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CostKind {
    MinTime,
    /// Power expended over the fixed horizon.
    Power { horizon: f64 },
}

/// One phase of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPhase {
    pub u: Vec<f64>,
    pub dt: f64,
}

/// Sequence of constant-control phases and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverPlan {
    pub phases: Vec<PlanPhase>,
    pub kind: CostKind,
    pub bounds: (f64, f64),
    pub tolerances: Tolerances,
    /// False when no plan meeting the tolerances was found at both `dt` and `dt/2`.
    pub converged: bool,
}

impl ManeuverPlan {
    pub fn horizon(&self) -> f64 {
        self.phases.iter().map(|p| p.dt).sum()
    }

    pub fn to_signal(&self) -> Result<ControlSignal> {
        ControlSignal::piecewise(
            self.phases
                .iter()
                .map(|p| Phase {
                    u: p.u.clone(),
                    duration: p.dt,
                })
                .collect(),
            self.bounds,
        )
    }

    /// Every channel of every phase sits on a bound.
    pub fn is_bang_bang(&self) -> bool {
        let (a, b) = self.bounds;
        self.phases
            .iter()
            .all(|p| p.u.iter().all(|&v| (v - a).abs() < 1e-12 || (v - b).abs() < 1e-12))
    }

    /// Fraction of phase values strictly inside the bounds.
    pub fn interior_fraction(&self) -> f64 {
        let (a, b) = self.bounds;
        let total: usize = self.phases.iter().map(|p| p.u.len()).sum();
        if total == 0 {
            return 0.0;
        }
        let inside = self
            .phases
            .iter()
            .flat_map(|p| p.u.iter())
            .filter(|&&v| v > a + 1e-9 && v < b - 1e-9)
            .count();
        inside as f64 / total as f64
    }
}

/// Distance of a pose from the goal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TerminalError {
    pub position: f64,
    pub orientation: f64,
}

impl TerminalError {
    pub fn between(pose: &Pose, goal: &Pose) -> Self {
        Self {
            position: (pose.translation - goal.translation).norm(),
            orientation: (goal.rotation.transpose() * pose.rotation).angle(),
        }
    }

    pub fn within(&self, tol: &Tolerances) -> bool {
        self.position <= tol.position && self.orientation <= tol.orientation
    }
}

/// Simulates `plan` and returns its cost and terminal error.
pub fn evaluate_cost(
    plan: &ManeuverPlan,
    kind: CostKind,
    swimmer: &Swimmer,
    start: (&Pose, &ShapeState),
    goal: &Pose,
    dt: f64,
) -> Result<(f64, TerminalError)> {
    let traj = simulate(swimmer, start, &plan.to_signal()?, dt)?;
    let err = TerminalError::between(&traj.terminal().pose, goal);
    let cost = match kind {
        CostKind::MinTime => plan.horizon(),
        CostKind::Power { .. } => power_expended(&traj)?,
    };
    Ok((cost, err))
}

/// Search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerOptions {
    /// Per-channel control bounds `[a, b]`.
    pub bounds: (f64, f64),
    /// Number of phases in the template.
    pub phases: usize,
    pub restarts: usize,
    /// Defaults to `1e-2·L` and `1e-2` rad, with `L` the longest link.
    pub tolerances: Option<Tolerances>,
    /// Integration step used during the search.
    pub dt: f64,
    /// Largest accepted goal distance; defaults to `0.2·L`.
    pub max_displacement: Option<f64>,
    /// Largest accepted goal rotation in radians.
    pub max_rotation: f64,
    pub seed: u64,
    /// Nelder–Mead budget per restart.
    pub max_evaluations: usize,
    /// Feasible plan used to seed power-mode search.
    pub seed_plan: Option<ManeuverPlan>,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        Self {
            bounds: (-1.0, 1.0),
            phases: 12,
            restarts: 8,
            tolerances: None,
            dt: 1e-2,
            max_displacement: None,
            max_rotation: 0.2,
            seed: 0,
            max_evaluations: 1500,
            seed_plan: None,
        }
    }
}

/// Residual components at the tolerance boundary are ±1; the search aims inside this.
const SEARCH_TARGET: f64 = 0.3;
/// Candidates with all scaled residuals below this are accepted and then re-validated.
const ACCEPT: f64 = 0.9;
/// Penalty weight on the scaled residual in minimal-time refinement.
const TIME_PENALTY: f64 = 1.0;

struct Search<'a> {
    swimmer: &'a Swimmer,
    start_pose: Pose,
    start_shape: ShapeState,
    goal: Pose,
    tol: Tolerances,
    /// Normalized integration step.
    dt: f64,
    power: bool,
}

impl Search<'_> {
    fn density(&self, shape: &ShapeState, u: &[f64]) -> Result<f64> {
        let lengths = self.swimmer.chain.lengths();
        if lengths.len() == 2 && lengths[0] == lengths[1] {
            Ok(lagrangian_power(shape.angles()[0].phi, u[0], u[1], &self.swimmer.drag, lengths[0]))
        } else {
            power_density(self.swimmer, shape, u)
        }
    }

    /// Terminal pose and power of normalized phases.
    fn rollout(&self, phases: &[(Vec<f64>, f64)]) -> Option<(Pose, f64)> {
        let mut pose = self.start_pose;
        let mut shape = self.start_shape.clone();
        let mut energy = 0.0;
        for (u, d) in phases {
            if *d <= 0.0 {
                continue;
            }
            let n = ((d / self.dt) - 1e-9).ceil().max(1.0) as usize;
            let h = d / n as f64;
            for _ in 0..n {
                let (p, s) = step(self.swimmer, &pose, &shape, u, h).ok()?;
                if self.power {
                    energy += 0.5 * h * (self.density(&shape, u).ok()? + self.density(&s, u).ok()?);
                }
                pose = p;
                shape = s;
            }
        }
        Some((pose, energy))
    }

    /// Position and orientation errors scaled by their tolerances.
    fn residual(&self, pose: &Pose) -> DVector<f64> {
        let dx: Vector3<f64> = (pose.translation - self.goal.translation) / self.tol.position;
        let rel = Pose::new(self.goal.rotation.transpose() * pose.rotation, Vector3::zeros());
        let w = rel.log().fixed_rows::<3>(3).into_owned() / self.tol.orientation;
        DVector::from_iterator(6, dx.iter().chain(w.iter()).copied())
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    /// Normalized phases.
    phases: Vec<(Vec<f64>, f64)>,
    cost: f64,
    residual: f64,
    restart: usize,
}

impl Candidate {
    fn feasible(&self) -> bool {
        self.residual <= ACCEPT
    }
}

fn restart_seed(seed: u64, r: usize) -> u64 {
    seed ^ (r as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn pick_best(cands: Vec<Candidate>) -> Option<Candidate> {
    cands.into_iter().min_by(|a, b| {
        (!a.feasible(), if a.feasible() { a.cost } else { a.residual }, a.restart)
            .partial_cmp(&(!b.feasible(), if b.feasible() { b.cost } else { b.residual }, b.restart))
            .unwrap()
    })
}

fn lm_opts() -> LmOptions {
    LmOptions {
        max_iterations: 80,
        target: SEARCH_TARGET,
        fd_step: 1e-4,
    }
}

/// One minimal-time restart over durations `d = z²` of a fixed corner pattern.
fn min_time_restart(search: &Search, pattern: &[Vec<f64>], z0: DVector<f64>, budget: usize, r: usize) -> Candidate {
    let phases_of = |z: &DVector<f64>| -> Vec<(Vec<f64>, f64)> {
        pattern.iter().zip(z.iter()).map(|(u, zk)| (u.clone(), zk * zk)).collect()
    };
    let resid = |z: &DVector<f64>| search.rollout(&phases_of(z)).map(|(p, _)| search.residual(&p));
    let candidate = |z: &DVector<f64>, res: &DVector<f64>| Candidate {
        phases: phases_of(z),
        cost: z.norm_squared(),
        residual: res.amax(),
        restart: r,
    };

    let Some(first) = levenberg_marquardt(resid, &z0, &lm_opts()) else {
        return Candidate {
            phases: phases_of(&z0),
            cost: f64::INFINITY,
            residual: f64::INFINITY,
            restart: r,
        };
    };
    let mut best = candidate(&first.x, &first.residual);
    if !best.feasible() {
        return best;
    }
    let objective = |z: &DVector<f64>| match resid(z) {
        Some(res) => z.norm_squared() + TIME_PENALTY * res.norm_squared(),
        None => f64::INFINITY,
    };
    let nm = nelder_mead(
        objective,
        &first.x,
        0.1,
        &NelderMeadOptions {
            max_evaluations: budget,
            ..Default::default()
        },
    );
    if let Some(proj) = levenberg_marquardt(resid, &nm.x, &lm_opts()) {
        let c = candidate(&proj.x, &proj.residual);
        if c.feasible() && c.cost < best.cost {
            best = c;
        }
    }
    best
}

/// One power restart over phase values `v = mid + rad·sin(z)` on fixed durations.
fn power_restart(
    search: &Search,
    durations: &[f64],
    z0: DVector<f64>,
    bounds: (f64, f64),
    channels: usize,
    budget: usize,
    reference: Option<f64>,
    r: usize,
) -> Candidate {
    let (mid, rad) = (0.5 * (bounds.0 + bounds.1), 0.5 * (bounds.1 - bounds.0));
    let phases_of = |z: &DVector<f64>| power_phases(durations, z, channels, mid, rad);
    let eval = |z: &DVector<f64>| search.rollout(&phases_of(z)).map(|(p, e)| (search.residual(&p), e));
    let resid = |z: &DVector<f64>| eval(z).map(|(r, _)| r);
    let candidate = |z: &DVector<f64>| -> Candidate {
        match eval(z) {
            Some((res, e)) => Candidate {
                phases: phases_of(z),
                cost: e,
                residual: res.amax(),
                restart: r,
            },
            None => Candidate {
                phases: phases_of(z),
                cost: f64::INFINITY,
                residual: f64::INFINITY,
                restart: r,
            },
        }
    };

    let mut start = z0;
    let mut best = candidate(&start);
    if !best.feasible() {
        match levenberg_marquardt(resid, &start, &lm_opts()) {
            Some(out) => {
                start = out.x;
                best = candidate(&start);
            }
            None => return best,
        }
        if !best.feasible() {
            return best;
        }
    }
    let weight = reference.unwrap_or(best.cost).max(1e-9);
    let objective = |z: &DVector<f64>| match eval(z) {
        Some((res, e)) => e + weight * res.norm_squared(),
        None => f64::INFINITY,
    };
    let nm = nelder_mead(
        objective,
        &start,
        0.1,
        &NelderMeadOptions {
            max_evaluations: budget,
            ..Default::default()
        },
    );
    for z in [Some(nm.x.clone()), levenberg_marquardt(resid, &nm.x, &lm_opts()).map(|o| o.x)]
        .into_iter()
        .flatten()
    {
        let c = candidate(&z);
        if c.feasible() && c.cost < best.cost {
            best = c;
        }
    }
    best
}

fn validate_options(opts: &PlannerOptions, kind: &CostKind, tol: &Tolerances) -> Result<()> {
    let (a, b) = opts.bounds;
    let bad = |m: &str| Err(SwimError::InfeasibleOptions(m.to_string()));
    if !(tol.position > 0.0 && tol.position.is_finite() && tol.orientation > 0.0 && tol.orientation.is_finite()) {
        return bad("tolerances must be positive and finite");
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return bad("bounds must satisfy a < b");
    }
    if opts.phases == 0 || opts.restarts == 0 {
        return bad("phases and restarts must be positive");
    }
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return bad("dt must be positive");
    }
    if let CostKind::Power { horizon } = kind {
        if !(*horizon > 0.0 && horizon.is_finite()) {
            return bad("power horizon must be positive");
        }
    }
    Ok(())
}

/// Searches for a plan from `start` to `goal`. A plan that misses its tolerances is
/// returned with `converged = false`.
pub fn plan_to_pose(
    swimmer: &Swimmer,
    start: (&Pose, &ShapeState),
    goal: &Pose,
    kind: CostKind,
    opts: &PlannerOptions,
) -> Result<ManeuverPlan> {
    let l_ref = swimmer.chain.lengths().iter().copied().fold(0.0, f64::max);
    let tol = opts.tolerances.unwrap_or(Tolerances {
        position: 1e-2 * l_ref,
        orientation: 1e-2,
    });
    validate_options(opts, &kind, &tol)?;
    let max_disp = opts.max_displacement.unwrap_or(0.2 * l_ref);
    let gap = TerminalError::between(start.0, goal);
    if gap.position > max_disp || gap.orientation > opts.max_rotation {
        return Err(SwimError::PreconditionViolation(format!(
            "goal is {:.3e} away and rotated {:.3e} rad; planner regime is {max_disp:.3e} and {:.3e} rad",
            gap.position, gap.orientation, opts.max_rotation
        )));
    }
    if start.1.links() != swimmer.chain.links() {
        return Err(SwimError::InvalidInput("start shape does not match the chain".into()));
    }

    let mut plan = ManeuverPlan {
        phases: Vec::new(),
        kind,
        bounds: opts.bounds,
        tolerances: tol,
        converged: true,
    };
    if gap.within(&tol) {
        return Ok(plan);
    }

    let speed = opts.bounds.0.abs().max(opts.bounds.1.abs());
    let norm_bounds = (opts.bounds.0 / speed, opts.bounds.1 / speed);
    let search = Search {
        swimmer,
        start_pose: *start.0,
        start_shape: start.1.clone(),
        goal: *goal,
        tol,
        dt: opts.dt * speed,
        power: matches!(kind, CostKind::Power { .. }),
    };
    let m = swimmer.shape_dim();

    let best = match kind {
        CostKind::MinTime => {
            let cands: Vec<Candidate> = (0..opts.restarts)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opts.seed, r));
                    let pattern = corner_cycle(m, opts.phases, norm_bounds, r);
                    let z0 = DVector::from_fn(opts.phases, |_, _| rng.gen_range(0.05..0.5f64).sqrt());
                    min_time_restart(&search, &pattern, z0, opts.max_evaluations, r)
                })
                .collect();
            pick_best(cands)
        }
        CostKind::Power { horizon } => {
            let horizon_n = horizon * speed;
            let seed_plan = match &opts.seed_plan {
                Some(p) => Some(p.clone()),
                None => {
                    let mt = plan_to_pose(swimmer, start, goal, CostKind::MinTime, opts)?;
                    mt.converged.then_some(mt)
                }
            };
            // a feasible plan no longer than the horizon, slowed down to fill it
            let slowed = seed_plan.filter(|p| {
                p.horizon() <= horizon * (1.0 + 1e-12) && opts.bounds.0 <= 0.0 && opts.bounds.1 >= 0.0
            });
            let (mid, rad) = (0.5 * (norm_bounds.0 + norm_bounds.1), 0.5 * (norm_bounds.1 - norm_bounds.0));
            let to_z = |v: f64| ((v - mid) / rad).clamp(-1.0, 1.0).asin();
            let mut jobs: Vec<(Vec<f64>, DVector<f64>)> = Vec::new();
            let mut reference = None;
            if let Some(p) = slowed.as_ref().filter(|p| !p.phases.is_empty()) {
                let c = p.horizon() / horizon;
                let durations: Vec<f64> = p.phases.iter().map(|ph| ph.dt * speed / c).collect();
                let z = DVector::from_iterator(
                    durations.len() * m,
                    p.phases.iter().flat_map(|ph| ph.u.iter().map(|&v| to_z(v * c / speed))),
                );
                let seed_cand = search
                    .rollout(&power_phases(&durations, &z, m, mid, rad))
                    .map(|(_, e)| e);
                reference = seed_cand;
                jobs.push((durations, z));
            }
            for r in jobs.len()..opts.restarts {
                let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opts.seed, r));
                let durations = vec![horizon_n / opts.phases as f64; opts.phases];
                let z = DVector::from_fn(opts.phases * m, |_, _| rng.gen_range(-1.5..1.5));
                jobs.push((durations, z));
            }
            let cands: Vec<Candidate> = jobs
                .into_par_iter()
                .enumerate()
                .map(|(r, (durations, z))| {
                    power_restart(&search, &durations, z, norm_bounds, m, opts.max_evaluations, reference, r)
                })
                .collect();
            pick_best(cands)
        }
    };

    let best = best.expect("at least one restart");
    plan.phases = best
        .phases
        .iter()
        .filter(|(_, d)| *d > 1e-9)
        .map(|(u, d)| PlanPhase {
            u: u.iter().map(|v| v * speed).collect(),
            dt: d / speed,
        })
        .collect();
    plan.converged = best.feasible() && revalidate(&plan, swimmer, start, goal, opts.dt)?;
    Ok(plan)
}

/// Bang-bang template walking the control hypercube along a Gray code, so that
/// consecutive phases switch one channel and the shape traces loops. Restart `r`
/// picks the starting corner and the orientation of the walk.
fn corner_cycle(m: usize, phases: usize, bounds: (f64, f64), r: usize) -> Vec<Vec<f64>> {
    let corners = 1usize << m.min(20);
    (0..phases)
        .map(|k| {
            let step = if r.is_multiple_of(2) { k } else { corners - k % corners };
            let i = (step + r / 2) % corners;
            let gray = i ^ (i >> 1);
            (0..m)
                .map(|j| if (gray >> j) & 1 == 1 { bounds.0 } else { bounds.1 })
                .collect()
        })
        .collect()
}

fn power_phases(durations: &[f64], z: &DVector<f64>, m: usize, mid: f64, rad: f64) -> Vec<(Vec<f64>, f64)> {
    durations
        .iter()
        .enumerate()
        .map(|(k, &d)| ((0..m).map(|j| mid + rad * z[k * m + j].sin()).collect(), d))
        .collect()
}

/// True when `plan` meets its tolerances when simulated at `dt` and at `dt/2`.
pub fn revalidate(
    plan: &ManeuverPlan,
    swimmer: &Swimmer,
    start: (&Pose, &ShapeState),
    goal: &Pose,
    dt: f64,
) -> Result<bool> {
    for h in [dt, 0.5 * dt] {
        let (_, err) = evaluate_cost(plan, CostKind::MinTime, swimmer, start, goal, h)?;
        if !err.within(&plan.tolerances) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Goal pose from a translation and a rotation vector.
pub fn goal_pose(translation: Vector3<f64>, rotation: Vector3<f64>) -> Pose {
    let rot = Pose::exp(&Vector6::new(0.0, 0.0, 0.0, rotation[0], rotation[1], rotation[2])).rotation;
    Pose::new(rot, translation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn drag() -> DragCoefficients {
        DragCoefficients::new(1.0, 2.0, 1.0).unwrap()
    }

    fn start_shape() -> ShapeState {
        ShapeState::two_link(0.0, FRAC_PI_2)
    }

    #[test]
    fn lagrangian_examples() {
        let d = DragCoefficients::new(0.6, 1.7, 0.4).unwrap();
        assert_eq!(lagrangian_power(0.7, 0.0, 0.0, &d, 1.3), 0.0);
        let expected = 1.3f64.powi(3) * 1.7 * (4.0 * 0.6 + 1.7) / (24.0 * (0.6 + 1.7));
        assert_relative_eq!(lagrangian_power(FRAC_PI_2, 1.0, 0.0, &d, 1.3), expected, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn lagrangian_is_quadratic(phi in -3.1..3.1f64, u1 in -2.0..2.0f64, u2 in -2.0..2.0f64, k in 0.0..4.0f64) {
            let d = drag();
            let base = lagrangian_power(phi, u1, u2, &d, 1.1);
            prop_assert!(base >= 0.0);
            let doubled = lagrangian_power(phi, 2.0 * u1, 2.0 * u2, &d, 1.1);
            prop_assert!((doubled - 4.0 * base).abs() <= 4.0 * f64::EPSILON * base.max(1e-300) * 4.0);
            let scaled = lagrangian_power(phi, k * u1, k * u2, &d, 1.1);
            prop_assert!((scaled - k * k * base).abs() <= 1e-14 * base.max(1e-300) * (1.0 + k * k));
        }
    }

    #[test]
    fn empty_plan_costs_nothing() {
        let sw = Swimmer::two_link(1.0, drag()).unwrap();
        let plan = ManeuverPlan {
            phases: vec![],
            kind: CostKind::MinTime,
            bounds: (-1.0, 1.0),
            tolerances: Tolerances { position: 1e-2, orientation: 1e-2 },
            converged: true,
        };
        let s = start_shape();
        let (c, e) = evaluate_cost(&plan, CostKind::MinTime, &sw, (&Pose::identity(), &s), &Pose::identity(), 1e-2).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(e.position, 0.0);
        assert_eq!(e.orientation, 0.0);
    }

    #[test]
    fn zero_control_error_is_start_gap() {
        let sw = Swimmer::two_link(1.0, drag()).unwrap();
        let plan = ManeuverPlan {
            phases: vec![PlanPhase { u: vec![0.0, 0.0], dt: 0.7 }, PlanPhase { u: vec![1.0, -1.0], dt: 0.0 + 0.3 }],
            kind: CostKind::MinTime,
            bounds: (-1.0, 1.0),
            tolerances: Tolerances { position: 1e-2, orientation: 1e-2 },
            converged: true,
        };
        let s = start_shape();
        let goal = goal_pose(Vector3::new(0.05, 0.0, 0.0), Vector3::zeros());
        let (c, _) = evaluate_cost(&plan, CostKind::MinTime, &sw, (&Pose::identity(), &s), &goal, 1e-2).unwrap();
        assert_eq!(c, 0.7 + 0.3);
        let idle = ManeuverPlan { phases: plan.phases[..1].to_vec(), ..plan };
        let (_, e) = evaluate_cost(&idle, CostKind::MinTime, &sw, (&Pose::identity(), &s), &goal, 1e-2).unwrap();
        assert_relative_eq!(e.position, 0.05, epsilon = 1e-15);
    }

    #[test]
    fn goal_at_start_gives_empty_plan() {
        let sw = Swimmer::two_link(1.0, drag()).unwrap();
        let s = start_shape();
        let plan = plan_to_pose(&sw, (&Pose::identity(), &s), &Pose::identity(), CostKind::MinTime, &PlannerOptions::default()).unwrap();
        assert!(plan.phases.is_empty() && plan.converged);
        assert_eq!(plan.horizon(), 0.0);
    }

    #[test]
    fn rejects_bad_options_and_far_goals() {
        let sw = Swimmer::two_link(1.0, drag()).unwrap();
        let s = start_shape();
        let goal = goal_pose(Vector3::new(0.05, 0.0, 0.0), Vector3::zeros());
        let opts = PlannerOptions {
            tolerances: Some(Tolerances { position: -1.0, orientation: 1e-2 }),
            ..Default::default()
        };
        assert!(matches!(
            plan_to_pose(&sw, (&Pose::identity(), &s), &goal, CostKind::MinTime, &opts),
            Err(SwimError::InfeasibleOptions(_))
        ));
        let far = goal_pose(Vector3::new(0.5, 0.0, 0.0), Vector3::zeros());
        assert!(matches!(
            plan_to_pose(&sw, (&Pose::identity(), &s), &far, CostKind::MinTime, &PlannerOptions::default()),
            Err(SwimError::PreconditionViolation(_))
        ));
    }

    #[test]
    fn plan_serializes_with_expected_fields() {
        let plan = ManeuverPlan {
            phases: vec![PlanPhase { u: vec![1.0, -1.0], dt: 0.25 }],
            kind: CostKind::Power { horizon: 2.0 },
            bounds: (-1.0, 1.0),
            tolerances: Tolerances { position: 1e-2, orientation: 1e-2 },
            converged: false,
        };
        let text = serde_json::to_string(&plan).unwrap();
        for key in ["phases", "kind", "bounds", "tolerances", "converged"] {
            assert!(text.contains(key), "{key} missing in {text}");
        }
        assert!(plan.is_bang_bang());
        assert_eq!(plan.interior_fraction(), 0.0);
        let back: ManeuverPlan = serde_json::from_str(&text).unwrap();
        assert_eq!(back, plan);
    }
}
