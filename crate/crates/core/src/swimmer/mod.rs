//! Resistive-force hydrodynamics of the N-link swimmer.
//!
//! Link 1 lies along the body `z` axis; link `i ≥ 2` points along
//! `(cos θᵢ sin φᵢ, sin θᵢ sin φᵢ, cos φᵢ)` and is attached to the far end of link
//! `i − 1`. The swimmer's body frame sits at the joint between links 1 and 2.
//!
//! Shape-rate vectors have `2N − 2` entries ordered `(φ̇₂, θ̇₂, φ̇₃, θ̇₃, …)`, so
//! for the 2-link swimmer control `u₁` drives `φ` and `u₂` drives `θ`.

pub(crate) mod kernel;

use nalgebra::{DVector, Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwimError};
use crate::jet::Real;
use crate::lie::BodyTwist;

/// Relative asymmetry of the assembled resistance matrix that signals an assembly bug.
const ASSEMBLY_ASYMMETRY: f64 = 1e-10;

/// Resistive-force drag coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragCoefficients {
    /// Tangential drag per unit length.
    pub c_par: f64,
    /// Normal drag per unit length.
    pub c_perp: f64,
    /// Torsional drag of link 1 about its own axis.
    pub c_tau: f64,
}

impl DragCoefficients {
    /// Requires `0 < c_par < c_perp` and `c_tau ≥ 0`.
    pub fn new(c_par: f64, c_perp: f64, c_tau: f64) -> Result<Self> {
        let d = Self {
            c_par,
            c_perp,
            c_tau,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_par > 0.0 && self.c_par < self.c_perp && self.c_perp.is_finite()) {
            return Err(SwimError::InvalidInput(format!(
                "drag coefficients need 0 < c_par < c_perp, got c_par = {}, c_perp = {}",
                self.c_par, self.c_perp
            )));
        }
        if !(self.c_tau >= 0.0 && self.c_tau.is_finite()) {
            return Err(SwimError::InvalidInput(format!(
                "c_tau must be non-negative, got {}",
                self.c_tau
            )));
        }
        Ok(())
    }

    pub fn with_c_tau(mut self, c_tau: f64) -> Self {
        self.c_tau = c_tau;
        self
    }
}

/// Link lengths `ℓ₁ … ℓ_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkChain {
    lengths: Vec<f64>,
}

impl LinkChain {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() < 2 {
            return Err(SwimError::InvalidInput(format!(
                "a chain needs at least two links, got {}",
                lengths.len()
            )));
        }
        if lengths.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(SwimError::InvalidInput(
                "link lengths must be finite and non-negative".into(),
            ));
        }
        if lengths.iter().filter(|&&l| l > 0.0).count() < 2 {
            return Err(SwimError::InvalidInput(
                "at least two links must have positive length".into(),
            ));
        }
        Ok(Self { lengths })
    }

    /// Two links of equal length `l`.
    pub fn two_link(l: f64) -> Result<Self> {
        Self::new(vec![l, l])
    }

    /// `(l, l, 0, …, 0)` with `n` links.
    pub fn reduced(n: usize, l: f64) -> Result<Self> {
        let mut lengths = vec![0.0; n];
        lengths[0] = l;
        if n > 1 {
            lengths[1] = l;
        }
        Self::new(lengths)
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn links(&self) -> usize {
        self.lengths.len()
    }

    /// Number of shape variables, `2N − 2`.
    pub fn shape_dim(&self) -> usize {
        2 * (self.lengths.len() - 1)
    }
}

/// Polar angles of one link relative to link 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkAngles {
    pub theta: f64,
    pub phi: f64,
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// Shape parameters `(θᵢ, φᵢ)` for links `2..N`; `φ` is kept in `(−π, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeState {
    angles: Vec<LinkAngles>,
}

impl ShapeState {
    pub fn new(angles: Vec<LinkAngles>) -> Self {
        Self {
            angles: angles
                .into_iter()
                .map(|a| LinkAngles {
                    theta: a.theta,
                    phi: wrap_angle(a.phi),
                })
                .collect(),
        }
    }

    pub fn two_link(theta: f64, phi: f64) -> Self {
        Self::new(vec![LinkAngles { theta, phi }])
    }

    /// Same `(θ, φ)` for every moving link.
    pub fn uniform(links: usize, theta: f64, phi: f64) -> Self {
        Self::new(vec![LinkAngles { theta, phi }; links - 1])
    }

    /// Builds a shape from a vector in control order `(φ₂, θ₂, φ₃, θ₃, …)`.
    pub fn from_control_vector(v: &[f64]) -> Self {
        Self::new(
            v.chunks(2)
                .map(|c| LinkAngles {
                    phi: c[0],
                    theta: c[1],
                })
                .collect(),
        )
    }

    /// Shape in control order `(φ₂, θ₂, φ₃, θ₃, …)`.
    pub fn to_control_vector(&self) -> Vec<f64> {
        self.angles.iter().flat_map(|a| [a.phi, a.theta]).collect()
    }

    pub fn angles(&self) -> &[LinkAngles] {
        &self.angles
    }

    pub fn links(&self) -> usize {
        self.angles.len() + 1
    }

    /// Shape after moving with constant rates (control order) for `dt`.
    pub fn advanced(&self, rates: &[f64], dt: f64) -> ShapeState {
        let v: Vec<f64> = self
            .to_control_vector()
            .iter()
            .zip(rates)
            .map(|(s, r)| s + r * dt)
            .collect();
        Self::from_control_vector(&v)
    }

    fn pairs(&self) -> Vec<(f64, f64)> {
        self.angles.iter().map(|a| (a.theta, a.phi)).collect()
    }
}

/// The 6×6 grand resistance matrix `[[K, Cᵀ], [C, J]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrandResistance {
    m: Matrix6<f64>,
}

impl GrandResistance {
    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.m
    }

    pub fn k(&self) -> Matrix3<f64> {
        self.m.fixed_view::<3, 3>(0, 0).into()
    }

    pub fn c(&self) -> Matrix3<f64> {
        self.m.fixed_view::<3, 3>(3, 0).into()
    }

    pub fn j(&self) -> Matrix3<f64> {
        self.m.fixed_view::<3, 3>(3, 3).into()
    }

    /// `‖M − Mᵀ‖_F / ‖M‖_F`.
    pub fn symmetry_defect(&self) -> f64 {
        (self.m - self.m.transpose()).norm() / self.m.norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (self.m + self.m.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min()
    }

    /// Solves `M x = b` by Cholesky on the symmetrized matrix.
    pub fn solve(&self, b: &Vector6<f64>) -> Result<Vector6<f64>> {
        let sym = (self.m + self.m.transpose()) * 0.5;
        sym.cholesky()
            .map(|ch| ch.solve(b))
            .ok_or_else(|| SwimError::NotPositiveDefinite("Cholesky factorization failed".into()))
    }
}

/// Viscous force and torque produced by the shape change alone (body frame).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShapeWrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl ShapeWrench {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }
}

/// A control vector field on SE(3) × shape space: body twist plus shape rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigField {
    pub twist: BodyTwist,
    pub shape_rates: DVector<f64>,
}

impl ConfigField {
    /// Twist part followed by the shape part, `6 + 2(N − 1)` entries.
    pub fn to_vector(&self) -> DVector<f64> {
        let tw = self.twist.to_vector();
        DVector::from_iterator(
            6 + self.shape_rates.len(),
            tw.iter().copied().chain(self.shape_rates.iter().copied()),
        )
    }
}

/// Unit direction of link `i` (1-based).
pub fn link_direction(shape: &ShapeState, i: usize) -> Result<Vector3<f64>> {
    if i == 0 || i > shape.links() {
        return Err(SwimError::IndexOutOfRange {
            index: i,
            links: shape.links(),
        });
    }
    if i == 1 {
        return Ok(Vector3::z());
    }
    let a = shape.angles[i - 2];
    Ok(Vector3::new(
        a.theta.cos() * a.phi.sin(),
        a.theta.sin() * a.phi.sin(),
        a.phi.cos(),
    ))
}

/// Matrix of `v ↦ e × v`.
pub fn cross_matrix(e: &Vector3<f64>) -> Matrix3<f64> {
    crate::lie::skew(e)
}

/// A swimmer: link geometry plus drag physics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swimmer {
    pub chain: LinkChain,
    pub drag: DragCoefficients,
}

impl Swimmer {
    pub fn new(chain: LinkChain, drag: DragCoefficients) -> Self {
        Self { chain, drag }
    }

    /// Equal-length 2-link swimmer.
    pub fn two_link(l: f64, drag: DragCoefficients) -> Result<Self> {
        Ok(Self::new(LinkChain::two_link(l)?, drag))
    }

    pub fn shape_dim(&self) -> usize {
        self.chain.shape_dim()
    }

    fn check_shape(&self, shape: &ShapeState) -> Result<()> {
        if shape.links() != self.chain.links() {
            return Err(SwimError::InvalidInput(format!(
                "shape has {} links but chain has {}",
                shape.links(),
                self.chain.links()
            )));
        }
        Ok(())
    }

    fn check_rates(&self, rates: &[f64]) -> Result<()> {
        if rates.len() != self.shape_dim() {
            return Err(SwimError::InvalidInput(format!(
                "expected {} shape rates, got {}",
                self.shape_dim(),
                rates.len()
            )));
        }
        Ok(())
    }

    fn assembly(&self, shape: &ShapeState) -> Result<kernel::Assembly<f64>> {
        self.check_shape(shape)?;
        Ok(kernel::assemble(self.chain.lengths(), &self.drag, &shape.pairs()))
    }

    /// Grand resistance matrix at `shape`; fails when it is not positive definite.
    pub fn resistance(&self, shape: &ShapeState) -> Result<GrandResistance> {
        let asm = self.assembly(shape)?;
        let gr = GrandResistance {
            m: Matrix6::from_fn(|r, c| asm.m[r][c]),
        };
        assert!(
            gr.symmetry_defect() <= ASSEMBLY_ASYMMETRY,
            "resistance assembly produced an asymmetric matrix"
        );
        gr.m.cholesky()
            .ok_or_else(|| SwimError::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        Ok(gr)
    }

    /// Viscous wrench due to the shape velocity `rates` (control order).
    pub fn shape_wrench(&self, shape: &ShapeState, rates: &[f64]) -> Result<ShapeWrench> {
        self.check_rates(rates)?;
        let asm = self.assembly(shape)?;
        let mut w = Vector6::zeros();
        for (unit, &r) in asm.wrenches.iter().zip(rates) {
            w += Vector6::from_column_slice(unit) * r;
        }
        Ok(ShapeWrench {
            force: w.fixed_rows::<3>(0).into(),
            torque: w.fixed_rows::<3>(3).into(),
        })
    }

    /// Body twist enforced by the self-propulsion constraint `M·twist = −wrench`.
    pub fn body_velocity(&self, shape: &ShapeState, rates: &[f64]) -> Result<BodyTwist> {
        self.check_rates(rates)?;
        let asm = self.assembly(shape)?;
        let mut w = Vector6::zeros();
        for (unit, &r) in asm.wrenches.iter().zip(rates) {
            w += Vector6::from_column_slice(unit) * r;
        }
        let gr = GrandResistance {
            m: Matrix6::from_fn(|r, c| asm.m[r][c]),
        };
        Ok(BodyTwist::from_vector(&gr.solve(&(-w))?))
    }

    /// The `2N − 2` control fields at `shape`; field `j` has shape part `ê_j`.
    pub fn control_fields(&self, shape: &ShapeState) -> Result<Vec<ConfigField>> {
        let asm = self.assembly(shape)?;
        let gr = GrandResistance {
            m: Matrix6::from_fn(|r, c| asm.m[r][c]),
        };
        let n = self.shape_dim();
        asm.wrenches
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let x = gr.solve(&(-Vector6::from_column_slice(w)))?;
                let mut rates = DVector::zeros(n);
                rates[j] = 1.0;
                Ok(ConfigField {
                    twist: BodyTwist::from_vector(&x),
                    shape_rates: rates,
                })
            })
            .collect()
    }

    /// Twist parts of all control fields as a 6 × (2N − 2) matrix.
    pub fn field_matrix(&self, shape: &ShapeState) -> Result<nalgebra::DMatrix<f64>> {
        let fields = self.control_fields(shape)?;
        Ok(nalgebra::DMatrix::from_fn(6, fields.len(), |r, c| {
            fields[c].twist.to_vector()[r]
        }))
    }
}

/// Which closed form to use for the equal-length 2-link fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormBranch {
    /// General expressions, valid for `c_tau > 0`.
    General,
    /// `c_tau = 0`: the second field reduces to a pure counter-rotation.
    Scallop,
}

/// Closed-form fields `(V₁, V₂)` of the equal-length 2-link swimmer as 8-vectors
/// `(twist; φ̇; θ̇)`.
pub fn closed_form_fields(
    theta: f64,
    phi: f64,
    drag: &DragCoefficients,
    l: f64,
    branch: ClosedFormBranch,
) -> Result<([f64; 8], [f64; 8])> {
    let tw = match branch {
        ClosedFormBranch::General => {
            if drag.c_tau == 0.0 {
                return Err(SwimError::DegenerateClosedForm);
            }
            closed_form_twists(theta, phi, drag, l)
        }
        ClosedFormBranch::Scallop => {
            let mut t = closed_form_twists(theta, phi, &drag.with_c_tau(1.0), l);
            t[1] = [0.0, 0.0, 0.0, 0.0, 0.0, -1.0];
            t
        }
    };
    let mut v1 = [0.0; 8];
    let mut v2 = [0.0; 8];
    v1[..6].copy_from_slice(&tw[0]);
    v2[..6].copy_from_slice(&tw[1]);
    v1[6] = 1.0;
    v2[7] = 1.0;
    Ok((v1, v2))
}

/// Twist parts of the closed-form 2-link fields, generic over the scalar type.
pub(crate) fn closed_form_twists<T: Real>(
    theta: T,
    phi: T,
    drag: &DragCoefficients,
    l: f64,
) -> [[T; 6]; 2] {
    let (cpar, cperp, ctau) = (drag.c_par, drag.c_perp, drag.c_tau);
    let (st, ct) = (theta.sin(), theta.cos());
    let (sp, cp) = (phi.sin(), phi.cos());
    let half = phi.scale(0.5);
    let (sh, ch) = (half.sin(), half.cos());
    let sh2 = sh.clone() * sh.clone();
    let z = theta.zero_like();

    let den1 = (cp.scale(cpar - cperp) + z.lift(cperp + cpar)).scale(2.0);
    let v1 = [
        ct.scale(l * cperp) * sh2.clone() / den1.clone(),
        st.scale(l * cperp) * sh2.clone() / den1.clone(),
        sp.scale(l * cperp) / den1.scale(2.0),
        st.scale(0.5),
        ct.scale(-0.5),
        z.clone(),
    ];

    let c2p = (phi.scale(2.0)).cos();
    let s2p = (phi.scale(2.0)).sin();
    let den2 = cp.scale(36.0 * ctau) + z.lift(-45.0 * ctau) + c2p.scale(2.0 * cperp * l * l - 15.0 * ctau)
        + z.lift(-2.0 * cperp * l * l);
    let rot = s2p.scale(5.0) - sp.scale(6.0);
    let v2 = [
        st.scale(-24.0 * ctau * l) * sh2.clone() * sp.clone() / den2.clone(),
        ct.scale(48.0 * ctau * l) * sh2 * sh * ch / den2.clone(),
        z.clone(),
        ct.scale(-3.0 * ctau) * rot.clone() / den2.clone(),
        st.scale(-3.0 * ctau) * rot / den2.clone(),
        (sp.clone() * sp).scale(4.0 * l * l * cperp) / den2,
    ];
    [v1, v2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn drag() -> DragCoefficients {
        DragCoefficients::new(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn validation() {
        assert!(DragCoefficients::new(2.0, 1.0, 1.0).is_err());
        assert!(DragCoefficients::new(0.0, 1.0, 1.0).is_err());
        assert!(DragCoefficients::new(1.0, 2.0, -1.0).is_err());
        assert!(DragCoefficients::new(1.0, 2.0, 0.0).is_ok());
        assert!(LinkChain::new(vec![1.0]).is_err());
        assert!(LinkChain::new(vec![1.0, 0.0, 0.0]).is_err());
        assert!(LinkChain::new(vec![0.0, 1.0, 1.0]).is_ok());
        assert!(LinkChain::new(vec![1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn wrap_into_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(wrap_angle(0.3), 0.3);
    }

    #[test]
    fn link_directions() {
        let s = ShapeState::two_link(0.7, 1.3);
        assert_eq!(link_direction(&s, 1).unwrap(), Vector3::z());
        let s = ShapeState::two_link(0.0, FRAC_PI_2);
        assert_relative_eq!(link_direction(&s, 2).unwrap(), Vector3::x(), epsilon = 1e-15);
        let s = ShapeState::two_link(FRAC_PI_2, FRAC_PI_2);
        assert_relative_eq!(link_direction(&s, 2).unwrap(), Vector3::y(), epsilon = 1e-15);
        assert!(matches!(
            link_direction(&s, 3),
            Err(SwimError::IndexOutOfRange { index: 3, links: 2 })
        ));
        assert!(link_direction(&s, 0).is_err());
    }

    #[test]
    fn cross_matrix_examples() {
        assert_eq!(
            cross_matrix(&Vector3::z()),
            Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
        let e = Vector3::new(0.3, -1.2, 0.5);
        assert_eq!(cross_matrix(&e) * e, Vector3::zeros());
        assert_eq!(cross_matrix(&e).transpose(), -cross_matrix(&e));
    }

    #[test]
    fn aligned_two_link_blocks() {
        let d = drag();
        let l = 1.3;
        let sw = Swimmer::two_link(l, d).unwrap();
        let gr = sw.resistance(&ShapeState::two_link(0.4, 0.0)).unwrap();
        let k = Matrix3::from_diagonal(&Vector3::new(d.c_perp, d.c_perp, d.c_par)) * (2.0 * l);
        assert_relative_eq!(gr.k(), k, epsilon = 1e-14);
        let jd = 2.0 * l.powi(3) * d.c_perp / 3.0;
        let j = Matrix3::from_diagonal(&Vector3::new(jd, jd, l * d.c_tau));
        assert_relative_eq!(gr.j(), j, epsilon = 1e-14);
    }

    #[test]
    fn zero_length_links_reduce_to_two_link() {
        let d = drag();
        let two = Swimmer::two_link(1.0, d).unwrap();
        let four = Swimmer::new(LinkChain::new(vec![1.0, 1.0, 0.0, 0.0]).unwrap(), d);
        let s2 = ShapeState::two_link(0.3, 1.1);
        let s4 = ShapeState::new(vec![
            LinkAngles { theta: 0.3, phi: 1.1 },
            LinkAngles { theta: -2.0, phi: 0.4 },
            LinkAngles { theta: 1.0, phi: 2.9 },
        ]);
        assert_eq!(
            two.resistance(&s2).unwrap().matrix(),
            four.resistance(&s4).unwrap().matrix()
        );
        let f = four.control_fields(&s4).unwrap();
        for field in &f[2..] {
            assert_eq!(field.twist, BodyTwist::zero());
        }
    }

    #[test]
    fn shape_wrench_examples() {
        let d = drag();
        let l = 0.8;
        let sw = Swimmer::two_link(l, d).unwrap();
        let s = ShapeState::two_link(0.0, FRAC_PI_2);
        assert_eq!(sw.shape_wrench(&s, &[0.0, 0.0]).unwrap(), ShapeWrench::default());
        let w = sw.shape_wrench(&s, &[1.0, 0.0]).unwrap();
        assert_relative_eq!(w.force, Vector3::new(0.0, 0.0, -l * l * d.c_perp / 2.0), epsilon = 1e-15);
        let u = [0.3, -0.7];
        let w1 = sw.shape_wrench(&s, &u).unwrap().to_vector();
        let w2 = sw.shape_wrench(&s, &[0.6, -1.4]).unwrap().to_vector();
        assert_relative_eq!(w2, w1 * 2.0, epsilon = 1e-15);
    }

    #[test]
    fn body_velocity_at_aligned_shape() {
        let sw = Swimmer::two_link(1.0, drag()).unwrap();
        let s = ShapeState::two_link(0.0, 0.0);
        assert_eq!(sw.body_velocity(&s, &[0.0, 0.0]).unwrap(), BodyTwist::zero());
        let t = sw.body_velocity(&s, &[1.0, 0.0]).unwrap().to_vector();
        assert_relative_eq!(t, Vector6::new(0.0, 0.0, 0.0, 0.0, -0.5, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn closed_form_examples() {
        let d = drag();
        let (v1, _) = closed_form_fields(0.0, 0.0, &d, 1.0, ClosedFormBranch::General).unwrap();
        assert_eq!(v1, [0.0, 0.0, 0.0, 0.0, -0.5, 0.0, 1.0, 0.0]);
        let (_, v2) = closed_form_fields(0.9, 0.0, &d, 1.0, ClosedFormBranch::General).unwrap();
        for (a, b) in v2.iter().zip([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-16);
        }
        let l = 1.7;
        let (_, v2) = closed_form_fields(0.0, FRAC_PI_2, &d, l, ClosedFormBranch::General).unwrap();
        let expect = -2.0 * l * l * d.c_perp / (15.0 * d.c_tau + 2.0 * d.c_perp * l * l);
        assert_relative_eq!(v2[5], expect, epsilon = 1e-15);
        assert_eq!(
            closed_form_fields(0.0, 1.0, &d.with_c_tau(0.0), l, ClosedFormBranch::General),
            Err(SwimError::DegenerateClosedForm)
        );
        let (_, v2) = closed_form_fields(0.3, 1.1, &d.with_c_tau(0.0), l, ClosedFormBranch::Scallop).unwrap();
        assert_eq!(v2, [0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0]);
    }

    #[test]
    fn singular_scallop_configuration_is_rejected() {
        // c_tau = 0 with aligned links leaves spin about the common axis unresisted.
        let sw = Swimmer::two_link(1.0, drag().with_c_tau(0.0)).unwrap();
        assert!(matches!(
            sw.resistance(&ShapeState::two_link(0.0, 0.0)),
            Err(SwimError::NotPositiveDefinite(_))
        ));
        assert!(sw.resistance(&ShapeState::two_link(0.0, 0.5)).is_ok());
    }

    #[test]
    fn size_mismatch_is_reported() {
        let sw = Swimmer::two_link(1.0, drag()).unwrap();
        assert!(sw.body_velocity(&ShapeState::two_link(0.0, 1.0), &[1.0]).is_err());
        assert!(sw.resistance(&ShapeState::uniform(3, 0.0, 1.0)).is_err());
    }
}
