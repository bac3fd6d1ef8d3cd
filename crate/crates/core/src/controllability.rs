//! Lie brackets of the swimmer's control fields and the rank test for fiber
//! controllability.
//!
//! A control field is `Z(g, s) = (g·ξ(s), a)` with a body twist `ξ` depending
//! on the shape `s` and a constant shape part `a`. The bracket of two such fields
//! at the identity is
//!
//! ```text
//! [Z₁, Z₂] = ( [ξ₁, ξ₂] + (∂ξ₂/∂s)·a₁ − (∂ξ₁/∂s)·a₂ ,  0 )
//! ```
//!
//! where `[ξ₁, ξ₂]` is the se(3) commutator. Dropping the commutator gives the
//! bracket of the same components viewed as vector fields on flat ℝ⁶ × shape
//! space; see [`BracketConvention`].
//!
//! Iterated brackets need shape derivatives up to order `depth − 1`. Nested finite
//! differences lose all accuracy by the fourth order, so [`BracketEngine`] expands
//! the fields as Taylor jets in every shape variable and differentiates them
//! exactly. [`mixed_bracket`] keeps a finite-difference route for arbitrary field
//! maps.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwimError};
use crate::jet::{Jet, JetSpace, Real};
use crate::lie::{commutator, BodyTwist};
use crate::swimmer::{
    closed_form_twists, kernel, ConfigField, DragCoefficients, LinkChain, ShapeState, Swimmer,
};

/// Relative singular-value threshold for the rank test.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// The shape at which the controllability certificate is evaluated: `φ = π/2`, `θ = 0`.
pub const CERTIFICATE_PHI: f64 = FRAC_PI_2;
pub const CERTIFICATE_THETA: f64 = 0.0;

/// How the group part of a bracket is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketConvention {
    /// Jacobi–Lie bracket on SE(3) × shape space: commutator plus shape derivatives.
    /// This is the bracket that generates net motion of the swimmer.
    Geometric,
    /// Shape-derivative terms only, treating the twist components as coordinates
    /// on ℝ⁶. Reproduces the tabulated certificate vectors and `δ = p/q`.
    Coordinate,
}

/// Bracket word over the generator fields (0-based indices, printed 1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BracketExpr {
    Field(usize),
    Bracket(Box<BracketExpr>, Box<BracketExpr>),
}

impl BracketExpr {
    /// Number of generators in the word.
    pub fn depth(&self) -> usize {
        match self {
            BracketExpr::Field(_) => 1,
            BracketExpr::Bracket(a, b) => a.depth() + b.depth(),
        }
    }
}

impl fmt::Display for BracketExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketExpr::Field(i) => write!(f, "V{}", i + 1),
            BracketExpr::Bracket(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

/// A bracket word and its value at the engine's base shape.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketNode {
    pub expression: BracketExpr,
    pub value: ConfigField,
}

/// A field expanded in the shape variables around the base shape.
#[derive(Clone)]
pub struct JetField {
    expression: BracketExpr,
    twist: [Jet; 6],
    shape: DVector<f64>,
    /// Highest Taylor order that is still exact.
    valid_degree: usize,
}

impl JetField {
    pub fn expression(&self) -> &BracketExpr {
        &self.expression
    }

    pub fn twist_value(&self) -> Vector6<f64> {
        Vector6::from_fn(|i, _| self.twist[i].value())
    }

    pub fn node(&self) -> BracketNode {
        BracketNode {
            expression: self.expression.clone(),
            value: ConfigField {
                twist: BodyTwist::from_vector(&self.twist_value()),
                shape_rates: self.shape.clone(),
            },
        }
    }
}

/// Exact iterated brackets of the control fields at one shape.
pub struct BracketEngine {
    generators: Vec<JetField>,
    convention: BracketConvention,
    base: DVector<f64>,
}

impl BracketEngine {
    /// Expands all `2N − 2` control fields of `swimmer` at `shape`, exact for
    /// brackets of up to `max_depth` generators.
    pub fn new(
        swimmer: &Swimmer,
        shape: &ShapeState,
        max_depth: usize,
        convention: BracketConvention,
    ) -> Result<Self> {
        if max_depth == 0 {
            return Err(SwimError::InvalidInput("bracket depth must be at least 1".into()));
        }
        if shape.links() != swimmer.chain.links() {
            return Err(SwimError::InvalidInput("shape and chain sizes differ".into()));
        }
        let nvars = swimmer.shape_dim();
        let degree = max_depth - 1;
        let space = JetSpace::new(nvars, degree);
        let base = DVector::from_vec(shape.to_control_vector());
        let angles: Vec<(Jet, Jet)> = (0..nvars / 2)
            .map(|k| {
                (
                    Jet::variable(&space, 2 * k + 1, base[2 * k + 1]),
                    Jet::variable(&space, 2 * k, base[2 * k]),
                )
            })
            .collect();
        let twists = kernel::field_twists(swimmer.chain.lengths(), &swimmer.drag, &angles)?;
        let generators = twists
            .into_iter()
            .enumerate()
            .map(|(j, t)| {
                let mut shape = DVector::zeros(nvars);
                shape[j] = 1.0;
                JetField {
                    expression: BracketExpr::Field(j),
                    twist: t,
                    shape,
                    valid_degree: degree,
                }
            })
            .collect();
        Ok(Self {
            generators,
            convention,
            base,
        })
    }

    /// Equal-length 2-link fields taken from their closed forms instead of the
    /// resistance solve. Serves as an independent route for cross-checks.
    pub fn from_closed_form(
        drag: &DragCoefficients,
        l: f64,
        theta: f64,
        phi: f64,
        max_depth: usize,
        convention: BracketConvention,
    ) -> Result<Self> {
        if drag.c_tau <= 0.0 {
            return Err(SwimError::DegenerateClosedForm);
        }
        let degree = max_depth.max(1) - 1;
        let space: Arc<JetSpace> = JetSpace::new(2, degree);
        let phi_j = Jet::variable(&space, 0, phi);
        let theta_j = Jet::variable(&space, 1, theta);
        let tw = closed_form_twists(theta_j, phi_j, drag, l);
        let generators = tw
            .into_iter()
            .enumerate()
            .map(|(j, t)| {
                let mut shape = DVector::zeros(2);
                shape[j] = 1.0;
                JetField {
                    expression: BracketExpr::Field(j),
                    twist: t,
                    shape,
                    valid_degree: degree,
                }
            })
            .collect();
        Ok(Self {
            generators,
            convention,
            base: DVector::from_vec(vec![phi, theta]),
        })
    }

    pub fn convention(&self) -> BracketConvention {
        self.convention
    }

    pub fn generators(&self) -> &[JetField] {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &JetField {
        &self.generators[i]
    }

    /// Base shape in control order.
    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    /// `[a, b]` as a jet field.
    pub fn bracket(&self, a: &JetField, b: &JetField) -> Result<JetField> {
        let valid = a.valid_degree.min(b.valid_degree);
        if valid == 0 {
            return Err(SwimError::InvalidInput(format!(
                "bracket [{}, {}] exceeds the engine's depth",
                a.expression, b.expression
            )));
        }
        let mut twist: [Jet; 6] = match self.convention {
            BracketConvention::Geometric => jet_commutator(&a.twist, &b.twist),
            BracketConvention::Coordinate => std::array::from_fn(|i| a.twist[i].zero_like()),
        };
        for (k, &ak) in a.shape.iter().enumerate() {
            if ak != 0.0 {
                for (t, bt) in twist.iter_mut().zip(&b.twist) {
                    *t = &*t + &bt.derivative(k).scale(ak);
                }
            }
        }
        for (k, &bk) in b.shape.iter().enumerate() {
            if bk != 0.0 {
                for (t, at) in twist.iter_mut().zip(&a.twist) {
                    *t = &*t - &at.derivative(k).scale(bk);
                }
            }
        }
        Ok(JetField {
            expression: BracketExpr::Bracket(
                Box::new(a.expression.clone()),
                Box::new(b.expression.clone()),
            ),
            twist,
            shape: DVector::zeros(a.shape.len()),
            valid_degree: valid - 1,
        })
    }

    /// The six fields `V₁, V₂, [V₁,V₂], [V₁,V₃], [V₂,V₃], [V₁,V₅]` built from
    /// generators `i` and `j`. Needs `max_depth ≥ 4`.
    pub fn certificate_fields(&self, i: usize, j: usize) -> Result<[JetField; 6]> {
        let v1 = self.generators[i].clone();
        let v2 = self.generators[j].clone();
        let v3 = self.bracket(&v1, &v2)?;
        let v4 = self.bracket(&v1, &v3)?;
        let v5 = self.bracket(&v2, &v3)?;
        let v6 = self.bracket(&v1, &v5)?;
        Ok([v1, v2, v3, v4, v5, v6])
    }

    /// Right-normed brackets `[X_{i₁}, [X_{i₂}, … X_{i_k}]]` for `k ≤ depth`.
    pub fn enumerate(&self, depth: usize) -> Result<Vec<JetField>> {
        let gens = &self.generators;
        let mut all: Vec<JetField> = gens.clone();
        let mut layer: Vec<JetField> = gens.clone();
        for level in 2..=depth {
            let mut next = Vec::new();
            for (gi, g) in gens.iter().enumerate() {
                for (bi, b) in layer.iter().enumerate() {
                    if level == 2 && bi <= gi {
                        continue;
                    }
                    next.push(self.bracket(g, b)?);
                }
            }
            all.extend(next.iter().cloned());
            layer = next;
        }
        Ok(all)
    }
}

fn jet_commutator(a: &[Jet; 6], b: &[Jet; 6]) -> [Jet; 6] {
    let cross = |u: [&Jet; 3], v: [&Jet; 3]| -> [Jet; 3] {
        [
            &(u[1] * v[2]) - &(u[2] * v[1]),
            &(u[2] * v[0]) - &(u[0] * v[2]),
            &(u[0] * v[1]) - &(u[1] * v[0]),
        ]
    };
    let (va, wa) = ([&a[0], &a[1], &a[2]], [&a[3], &a[4], &a[5]]);
    let (vb, wb) = ([&b[0], &b[1], &b[2]], [&b[3], &b[4], &b[5]]);
    let l1 = cross(wa, vb);
    let l2 = cross(wb, va);
    let ang = cross(wa, wb);
    [
        &l1[0] - &l2[0],
        &l1[1] - &l2[1],
        &l1[2] - &l2[2],
        ang[0].clone(),
        ang[1].clone(),
        ang[2].clone(),
    ]
}

/// Finite-difference bracket of two shape-dependent field maps at `shape`.
///
/// Directional derivatives use a 5-point central stencil with step
/// `h = 1e-5 · max(1, |s|)`. A field map that fails on a stencil point is reported
/// as [`SwimError::NumericalJacobianFailure`].
pub fn mixed_bracket<F1, F2>(
    f1: F1,
    f2: F2,
    shape: &ShapeState,
    convention: BracketConvention,
) -> Result<ConfigField>
where
    F1: Fn(&ShapeState) -> Result<ConfigField>,
    F2: Fn(&ShapeState) -> Result<ConfigField>,
{
    let z1 = f1(shape)?;
    let z2 = f2(shape)?;
    let s0 = shape.to_control_vector();
    let d2 = directional_derivative(&f2, &s0, z1.shape_rates.as_slice())?;
    let d1 = directional_derivative(&f1, &s0, z2.shape_rates.as_slice())?;
    let xi1 = z1.twist.to_vector();
    let xi2 = z2.twist.to_vector();
    let mut tw = d2.0 - d1.0;
    if convention == BracketConvention::Geometric {
        tw += commutator(&xi1, &xi2);
    }
    Ok(ConfigField {
        twist: BodyTwist::from_vector(&tw),
        shape_rates: d2.1 - d1.1,
    })
}

fn directional_derivative<F>(f: &F, s0: &[f64], dir: &[f64]) -> Result<(Vector6<f64>, DVector<f64>)>
where
    F: Fn(&ShapeState) -> Result<ConfigField>,
{
    let n = s0.len();
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok((Vector6::zeros(), DVector::zeros(n)));
    }
    let scale = s0.iter().fold(1.0_f64, |m, s| m.max(s.abs()));
    let h = 1e-5 * scale / norm;
    let eval = |t: f64| -> Result<DVector<f64>> {
        let s: Vec<f64> = s0.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        f(&ShapeState::from_control_vector(&s))
            .map(|z| z.to_vector())
            .map_err(|e| SwimError::NumericalJacobianFailure(format!("at offset {t:e}: {e}")))
    };
    let d = (eval(-2.0 * h)? - eval(2.0 * h)? + (eval(h)? - eval(-h)?) * 8.0) / (12.0 * h);
    Ok((Vector6::from_fn(|i, _| d[i]), d.rows(6, n).into_owned()))
}

/// Outcome of a rank test on the group projection of the bracket algebra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub rank: usize,
    /// Six singular values, descending.
    pub singular_values: [f64; 6],
    /// Relative threshold used.
    pub tolerance: f64,
    /// Number of bracket vectors stacked.
    pub vectors: usize,
    /// True when the fixed six-bracket certificate already reached rank 6.
    pub certified_by_sequence: bool,
}

fn rank_of(vectors: &[Vector6<f64>], tol: f64) -> ([f64; 6], usize) {
    if vectors.is_empty() {
        return ([0.0; 6], 0);
    }
    let m = DMatrix::from_fn(6, vectors.len(), |r, c| vectors[c][r]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv.resize(6, 0.0);
    let smax = sv[0];
    let rank = if smax > 0.0 {
        sv.iter().filter(|&&s| s > tol * smax).count()
    } else {
        0
    };
    (std::array::from_fn(|i| sv[i]), rank)
}

/// Rank of the twist parts of all brackets of up to `depth` generators at `shape`.
///
/// The certificate sequence on the first two generators is tried first; only if
/// it falls short of rank 6 are all right-normed brackets enumerated.
pub fn lie_rank(
    swimmer: &Swimmer,
    shape: &ShapeState,
    depth: usize,
    tol: f64,
    convention: BracketConvention,
) -> Result<RankReport> {
    let engine = BracketEngine::new(swimmer, shape, depth, convention)?;
    if depth >= 4 {
        let cert = engine.certificate_fields(0, 1)?;
        let vecs: Vec<Vector6<f64>> = cert.iter().map(|f| f.twist_value()).collect();
        let (sv, rank) = rank_of(&vecs, tol);
        if rank == 6 {
            return Ok(RankReport {
                rank,
                singular_values: sv,
                tolerance: tol,
                vectors: vecs.len(),
                certified_by_sequence: true,
            });
        }
    }
    let all = engine.enumerate(depth)?;
    let vecs: Vec<Vector6<f64>> = all.iter().map(|f| f.twist_value()).collect();
    let (sv, rank) = rank_of(&vecs, tol);
    Ok(RankReport {
        rank,
        singular_values: sv,
        tolerance: tol,
        vectors: vecs.len(),
        certified_by_sequence: false,
    })
}

/// The six certificate vectors and their determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// Columns `v₁ … v₆`.
    pub vectors: [Vector6<f64>; 6],
    pub determinant: f64,
}

impl Certificate {
    fn from_fields(fields: &[JetField; 6]) -> Self {
        let vectors: [Vector6<f64>; 6] = std::array::from_fn(|i| fields[i].twist_value());
        let m = Matrix6::from_columns(&vectors);
        Certificate {
            vectors,
            determinant: m.determinant(),
        }
    }
}

/// Certificate of the link-2 fields of `swimmer` at `shape`.
pub fn certificate(
    swimmer: &Swimmer,
    shape: &ShapeState,
    convention: BracketConvention,
) -> Result<Certificate> {
    let engine = BracketEngine::new(swimmer, shape, 4, convention)?;
    Ok(Certificate::from_fields(&engine.certificate_fields(0, 1)?))
}

/// Certificate shape for an `n`-link chain: link 2 at `(φ, θ) = (π/2, 0)`, other links
/// at a fixed generic orientation.
pub fn certificate_shape(n: usize) -> ShapeState {
    let mut v = vec![CERTIFICATE_PHI, CERTIFICATE_THETA];
    for k in 3..=n {
        v.extend([0.4 + 0.1 * k as f64, -0.3 * k as f64]);
    }
    ShapeState::from_control_vector(&v)
}

/// Determinant of the certificate vectors of the equal-length 2-link swimmer at
/// `(φ, θ) = (π/2, 0)`, computed numerically from the resistance model.
///
/// Uses [`BracketConvention::Coordinate`], under which the determinant equals
/// [`delta_closed_form`]; use [`certificate`] for the geometric determinant.
pub fn delta_determinant(drag: &DragCoefficients, l: f64) -> Result<f64> {
    if drag.c_tau <= 0.0 {
        return Err(SwimError::PreconditionViolation("delta needs c_tau > 0".into()));
    }
    let sw = Swimmer::two_link(l, *drag)?;
    Ok(certificate(&sw, &certificate_shape(2), BracketConvention::Coordinate)?.determinant)
}

/// Numerator and denominator polynomials of the controllability determinant.
pub fn delta_polynomials(drag: &DragCoefficients, l: f64) -> (f64, f64) {
    let (cpa, cpe, ct) = (drag.c_par, drag.c_perp, drag.c_tau);
    let l2 = l * l;
    let l4 = l2 * l2;
    let first = 27.0 * ct * ct * (11.0 * cpe * cpe + 32.0 * cpe * cpa - 4.0 * cpa * cpa)
        + 6.0 * ct * cpe * l2 * (cpe * cpe + 25.0 * cpe * cpa + 4.0 * cpa * cpa)
        + 4.0 * cpe.powi(3) * cpa * l4;
    let second = 8.0 * cpe.powi(4) * cpa * l4 * l2
        - 81.0 * ct.powi(3) * (61.0 * cpe * cpe + 160.0 * cpe * cpa + 164.0 * cpa * cpa)
        + 12.0 * ct * cpe * cpe * l4 * (cpe * cpe + 30.0 * cpe * cpa + 4.0 * cpa * cpa)
        + 18.0 * ct * ct * cpe * l2 * (18.0 * cpe * cpe + 85.0 * cpe * cpa - 72.0 * cpa * cpa);
    let p = cpe * cpe * l.powi(5) * first * second;
    let q = 32.0 * (cpe + cpa).powi(5) * (15.0 * ct + 2.0 * cpe * l2).powi(6);
    (p, q)
}

/// `p / q`.
pub fn delta_closed_form(drag: &DragCoefficients, l: f64) -> f64 {
    let (p, q) = delta_polynomials(drag, l);
    p / q
}

/// Tabulated twist parts of `V₃ … V₆` at `(φ, θ) = (π/2, 0)` (coordinate bracket).
pub fn certificate_closed_form(drag: &DragCoefficients, l: f64) -> [Vector6<f64>; 4] {
    let (cpa, cpe, ct) = (drag.c_par, drag.c_perp, drag.c_tau);
    let l2 = l * l;
    let l4 = l2 * l2;
    let d = 15.0 * ct + 2.0 * cpe * l2;
    let s = cpe + cpa;
    let v3_2 = 6.0 * ct * l * (3.0 * ct - 2.0 * cpe * l2) / (d * d) - cpe * l / (4.0 * s);
    let v3_4 = -(351.0 * ct * ct + 4.0 * cpe * cpe * l4 + 120.0 * ct * cpe * l2) / (2.0 * d * d);
    let v3_6 = 36.0 * ct * cpe * l2 / (d * d);
    let v4_2 = 6.0 * ct * l * (567.0 * ct * ct - 4.0 * cpe * cpe * l4 + 132.0 * ct * cpe * l2)
        / d.powi(3)
        - cpe * cpa * l / (2.0 * s * s);
    let v4_4 = 9.0 * ct * (927.0 * ct * ct - 4.0 * cpe * cpe * l4 + 180.0 * ct * cpe * l2) / d.powi(3);
    let v4_6 = 24.0 * ct * cpe * l2 * (21.0 * ct + 10.0 * cpe * l2) / d.powi(3);
    let v5_1 = l
        * (9.0 * ct * ct * (17.0 * cpe - 8.0 * cpa)
            + 4.0 * cpe.powi(3) * l4
            + 12.0 * ct * cpe * l2 * (9.0 * cpe + 4.0 * cpa))
        / (4.0 * s * d * d);
    [
        Vector6::new(0.0, v3_2, 0.0, v3_4, 0.0, v3_6),
        Vector6::new(0.0, v4_2, 0.0, v4_4, 0.0, v4_6),
        Vector6::new(v5_1, 0.0, 0.0, 0.0, v3_4, 0.0),
        Vector6::new(-v4_2, 0.0, 0.0, 0.0, v4_4, 0.0),
    ]
}

/// Findings of the `c_tau = 0` degeneracy check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScallopReport {
    /// Largest deviation of `V₂`'s twist from `(0,0,0,0,0,−1)` over the sampled shapes.
    pub v2_max_deviation: f64,
    pub ranks: Vec<usize>,
    pub max_rank: usize,
    /// `v2_max_deviation ≤ 1e-12` and every rank ≤ 5.
    pub degenerate: bool,
}

/// Verifies that with `c_tau = 0` turning `θ` only counter-rotates the body and the
/// bracket algebra does not reach rank 6.
pub fn scallop_check(
    drag: &DragCoefficients,
    l: f64,
    shapes: &[(f64, f64)],
    depth: usize,
) -> Result<ScallopReport> {
    if drag.c_tau != 0.0 {
        return Err(SwimError::PreconditionViolation(format!(
            "scallop check needs c_tau = 0, got {}",
            drag.c_tau
        )));
    }
    let sw = Swimmer::two_link(l, *drag)?;
    let target = Vector6::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0);
    let mut dev: f64 = 0.0;
    let mut ranks = Vec::with_capacity(shapes.len());
    for &(theta, phi) in shapes {
        let s = ShapeState::two_link(theta, phi);
        let f = sw.control_fields(&s)?;
        dev = dev.max((f[1].twist.to_vector() - target).amax());
        ranks.push(lie_rank(&sw, &s, depth, DEFAULT_RANK_TOL, BracketConvention::Geometric)?.rank);
    }
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    Ok(ScallopReport {
        v2_max_deviation: dev,
        max_rank,
        degenerate: dev <= 1e-12 && max_rank <= 5,
        ranks,
    })
}

/// Comparison of an `(L, L, 0, …, 0)` chain with the equal-length 2-link swimmer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub links: usize,
    pub delta_nlink: f64,
    pub delta_two_link: f64,
    pub delta_rel_error: f64,
    /// Largest relative deviation of the link-2 fields (twist and shape parts).
    pub fields_rel_error: f64,
    pub passed: bool,
}

/// Relative tolerance for the N-link reduction.
pub const REDUCTION_TOL: f64 = 1e-8;

/// Checks that an `n`-link chain with lengths `(L, L, 0, …, 0)` reproduces the
/// 2-link fields and determinant.
pub fn nlink_reduction_check(n: usize, l: f64, drag: &DragCoefficients) -> Result<ReductionReport> {
    if n < 3 {
        return Err(SwimError::PreconditionViolation(format!(
            "reduction check needs N ≥ 3, got {n}"
        )));
    }
    let nlink = Swimmer::new(LinkChain::reduced(n, l)?, *drag);
    let two = Swimmer::two_link(l, *drag)?;
    let shape_n = certificate_shape(n);
    let shape_2 = certificate_shape(2);

    let delta_nlink = certificate(&nlink, &shape_n, BracketConvention::Coordinate)?.determinant;
    let delta_two_link = delta_closed_form(drag, l);
    let delta_rel_error = rel_err(delta_nlink, delta_two_link);

    let fn_ = nlink.control_fields(&shape_n)?;
    let f2 = two.control_fields(&shape_2)?;
    let mut fields_rel_error: f64 = 0.0;
    for j in 0..2 {
        let a = fn_[j].to_vector();
        let b = f2[j].to_vector();
        let scale = b.amax().max(1e-300);
        let mut err = (a.rows(0, 8) - &b).amax() / scale;
        err = err.max(a.rows(8, a.len() - 8).amax() / scale);
        fields_rel_error = fields_rel_error.max(err);
    }
    Ok(ReductionReport {
        links: n,
        delta_nlink,
        delta_two_link,
        delta_rel_error,
        fields_rel_error,
        passed: delta_rel_error <= REDUCTION_TOL && fields_rel_error <= REDUCTION_TOL,
    })
}

/// Coordinate-bracket determinant of the link-2 certificate for an arbitrary chain.
pub fn nlink_delta(chain: &LinkChain, drag: &DragCoefficients) -> Result<f64> {
    let sw = Swimmer::new(chain.clone(), *drag);
    Ok(certificate(&sw, &certificate_shape(chain.links()), BracketConvention::Coordinate)?.determinant)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Sampling box for [`parameter_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRanges {
    pub c_par: (f64, f64),
    pub c_perp: (f64, f64),
    pub c_tau: (f64, f64),
    pub l: (f64, f64),
}

impl Default for ScanRanges {
    fn default() -> Self {
        Self {
            c_par: (0.1, 0.9),
            c_perp: (1.0, 3.0),
            c_tau: (0.1, 2.0),
            l: (0.5, 2.0),
        }
    }
}

impl ScanRanges {
    /// Every sample must satisfy `0 < c_par < c_perp`, `c_tau > 0`, `L > 0`, so the
    /// `c_par` box has to lie strictly below the `c_perp` box.
    pub fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 > 0.0 && r.0 <= r.1;
        if !(ok(self.c_par) && ok(self.c_perp) && ok(self.c_tau) && ok(self.l)) {
            return Err(SwimError::InvalidInput(
                "scan ranges must be finite, positive and ordered (lo ≤ hi)".into(),
            ));
        }
        if self.c_par.1 >= self.c_perp.0 {
            return Err(SwimError::InvalidInput(format!(
                "c_par range {:?} must lie below c_perp range {:?}",
                self.c_par, self.c_perp
            )));
        }
        Ok(())
    }
}

/// One row of a parameter scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub c_par: f64,
    pub c_perp: f64,
    pub c_tau: f64,
    pub l: f64,
    pub delta: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub fraction_rank6: f64,
}

/// Seed of sample `i`; independent of scheduling.
fn sample_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Samples drag/length tuples uniformly in `ranges`, reporting the determinant and
/// the geometric rank at the certificate shape for each.
pub fn parameter_scan(ranges: &ScanRanges, samples: usize, seed: u64) -> Result<ScanTable> {
    ranges.validate()?;
    let draw = |rng: &mut ChaCha8Rng, r: (f64, f64)| {
        if r.0 == r.1 {
            r.0
        } else {
            rng.gen_range(r.0..r.1)
        }
    };
    let rows: Vec<ScanRow> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, i));
            let c_par = draw(&mut rng, ranges.c_par);
            let c_perp = draw(&mut rng, ranges.c_perp);
            let c_tau = draw(&mut rng, ranges.c_tau);
            let l = draw(&mut rng, ranges.l);
            let drag = DragCoefficients::new(c_par, c_perp, c_tau)?;
            let delta = delta_determinant(&drag, l)?;
            let sw = Swimmer::two_link(l, drag)?;
            let rank = lie_rank(
                &sw,
                &certificate_shape(2),
                4,
                DEFAULT_RANK_TOL,
                BracketConvention::Geometric,
            )?
            .rank;
            Ok(ScanRow {
                c_par,
                c_perp,
                c_tau,
                l,
                delta,
                rank,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let full = rows.iter().filter(|r| r.rank == 6).count();
    let fraction_rank6 = if rows.is_empty() {
        0.0
    } else {
        full as f64 / rows.len() as f64
    };
    Ok(ScanTable {
        rows,
        fraction_rank6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn drag() -> DragCoefficients {
        DragCoefficients::new(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn self_bracket_vanishes() {
        let sw = Swimmer::two_link(1.0, drag()).unwrap();
        let e = BracketEngine::new(&sw, &certificate_shape(2), 3, BracketConvention::Geometric).unwrap();
        let b = e.bracket(e.generator(0), e.generator(0)).unwrap();
        assert_eq!(b.twist_value(), Vector6::zeros());
        assert_eq!(b.expression().to_string(), "[V1,V1]");
    }

    #[test]
    fn depth_is_enforced() {
        let sw = Swimmer::two_link(1.0, drag()).unwrap();
        let e = BracketEngine::new(&sw, &certificate_shape(2), 2, BracketConvention::Geometric).unwrap();
        let v3 = e.bracket(e.generator(0), e.generator(1)).unwrap();
        assert!(e.bracket(e.generator(0), &v3).is_err());
        assert!(BracketEngine::new(&sw, &certificate_shape(2), 0, BracketConvention::Geometric).is_err());
    }

    #[test]
    fn coordinate_certificate_matches_table() {
        let d = drag();
        let sw = Swimmer::two_link(1.0, d).unwrap();
        let cert = certificate(&sw, &certificate_shape(2), BracketConvention::Coordinate).unwrap();
        let table = certificate_closed_form(&d, 1.0);
        for (num, tab) in cert.vectors[2..].iter().zip(&table) {
            assert_relative_eq!(*num, *tab, epsilon = 1e-12);
        }
        assert_relative_eq!(cert.determinant, delta_closed_form(&d, 1.0), max_relative = 1e-10);
    }

    #[test]
    fn fd_bracket_agrees_with_jets_at_depth_two() {
        let d = drag();
        let sw = Swimmer::two_link(1.3, d).unwrap();
        let s = ShapeState::two_link(0.4, 1.2);
        for conv in [BracketConvention::Geometric, BracketConvention::Coordinate] {
            let field = |j: usize| {
                let sw = sw.clone();
                move |s: &ShapeState| Ok(sw.control_fields(s)?[j].clone())
            };
            let fd = mixed_bracket(field(0), field(1), &s, conv).unwrap();
            let e = BracketEngine::new(&sw, &s, 2, conv).unwrap();
            let ex = e.bracket(e.generator(0), e.generator(1)).unwrap();
            assert_relative_eq!(fd.twist.to_vector(), ex.twist_value(), epsilon = 1e-9);
            assert!(fd.shape_rates.amax() < 1e-9);
        }
    }

    #[test]
    fn fd_bracket_reports_stencil_failure() {
        let sw = Swimmer::two_link(1.0, drag()).unwrap();
        // a field map that is only defined for φ ≤ 1 fails on the stencil around φ = 1
        let f = |j: usize| {
            let sw = sw.clone();
            move |s: &ShapeState| {
                if s.angles()[0].phi > 1.0 {
                    return Err(SwimError::InvalidInput("outside domain".into()));
                }
                Ok(sw.control_fields(s)?[j].clone())
            }
        };
        let s = ShapeState::two_link(0.2, 1.0 - 1e-6);
        let r = mixed_bracket(f(0), f(1), &s, BracketConvention::Geometric);
        assert!(matches!(r, Err(SwimError::NumericalJacobianFailure(_))));
    }

    #[test]
    fn closed_form_route_matches_model_route() {
        let d = DragCoefficients::new(0.7, 1.9, 0.4).unwrap();
        let sw = Swimmer::two_link(1.2, d).unwrap();
        let s = ShapeState::two_link(-0.8, 2.1);
        for conv in [BracketConvention::Geometric, BracketConvention::Coordinate] {
            let a = BracketEngine::new(&sw, &s, 4, conv).unwrap();
            let b = BracketEngine::from_closed_form(&d, 1.2, -0.8, 2.1, 4, conv).unwrap();
            let fa = a.certificate_fields(0, 1).unwrap();
            let fb = b.certificate_fields(0, 1).unwrap();
            for (x, y) in fa.iter().zip(&fb) {
                assert_relative_eq!(x.twist_value(), y.twist_value(), epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn rank_examples() {
        let d = drag();
        let sw = Swimmer::two_link(1.0, d).unwrap();
        let s = certificate_shape(2);
        let r = lie_rank(&sw, &s, 4, DEFAULT_RANK_TOL, BracketConvention::Geometric).unwrap();
        assert_eq!(r.rank, 6);
        assert!(r.certified_by_sequence);
        let r = lie_rank(&sw, &s, 1, DEFAULT_RANK_TOL, BracketConvention::Geometric).unwrap();
        assert!(r.rank <= 2);
        let scallop = Swimmer::two_link(1.0, d.with_c_tau(0.0)).unwrap();
        let r = lie_rank(&scallop, &s, 4, DEFAULT_RANK_TOL, BracketConvention::Geometric).unwrap();
        assert!(r.rank <= 5, "{r:?}");
    }

    #[test]
    fn scallop_examples() {
        let d = drag().with_c_tau(0.0);
        let rep = scallop_check(&d, 1.0, &[(0.3, 1.1), (CERTIFICATE_THETA, CERTIFICATE_PHI)], 4).unwrap();
        assert!(rep.v2_max_deviation < 1e-12);
        assert!(rep.max_rank <= 5);
        assert!(rep.degenerate);
        assert!(matches!(
            scallop_check(&drag(), 1.0, &[(0.3, 1.1)], 4),
            Err(SwimError::PreconditionViolation(_))
        ));
    }

    #[test]
    fn q_at_reference_parameters() {
        // 32 · 3⁵ · 19⁶, by integer arithmetic
        let q_int: i64 = 32 * 3_i64.pow(5) * 19_i64.pow(6);
        let (_, q) = delta_polynomials(&drag(), 1.0);
        assert_eq!(q, q_int as f64);
    }

    #[test]
    fn scan_rejects_overlapping_drag_ranges() {
        let r = ScanRanges {
            c_par: (0.5, 1.5),
            c_perp: (1.0, 2.0),
            ..ScanRanges::default()
        };
        assert!(parameter_scan(&r, 3, 1).is_err());
    }

    #[test]
    fn scan_is_deterministic() {
        let a = parameter_scan(&ScanRanges::default(), 16, 42).unwrap();
        let b = parameter_scan(&ScanRanges::default(), 16, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fraction_rank6, 1.0);
    }
}
