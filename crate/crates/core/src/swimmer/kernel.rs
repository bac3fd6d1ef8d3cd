//! Resistive-force assembly written over [`Real`] so the same code runs on plain
//! floats and on Taylor jets.

use crate::error::{Result, SwimError};
use crate::jet::Real;

use super::DragCoefficients;

pub(crate) type V3<T> = [T; 3];
pub(crate) type M3<T> = [[T; 3]; 3];

/// Per-link geometry in the body frame.
pub(crate) struct LinkFrame<T> {
    pub dir: V3<T>,
    pub d_phi: V3<T>,
    pub d_theta: V3<T>,
}

/// Grand resistance matrix and the wrench produced by each unit shape rate.
pub(crate) struct Assembly<T> {
    pub m: [[T; 6]; 6],
    /// `wrenches[j]` is `(F_sh; T_sh)` for the shape-rate vector `ê_j`.
    pub wrenches: Vec<[T; 6]>,
}

fn zero3<T: Real>(z: &T) -> V3<T> {
    [z.clone(), z.clone(), z.clone()]
}

fn zero33<T: Real>(z: &T) -> M3<T> {
    [zero3(z), zero3(z), zero3(z)]
}

fn identity33<T: Real>(z: &T) -> M3<T> {
    let mut m = zero33(z);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = z.lift(1.0);
    }
    m
}

fn add33<T: Real>(a: &M3<T>, b: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j].clone() + b[i][j].clone()))
}

fn scale33<T: Real>(a: &M3<T>, k: f64) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j].scale(k)))
}

fn mul33<T: Real>(a: &M3<T>, b: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            a[i][0].clone() * b[0][j].clone()
                + a[i][1].clone() * b[1][j].clone()
                + a[i][2].clone() * b[2][j].clone()
        })
    })
}

fn transpose33<T: Real>(a: &M3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i].clone()))
}

fn mulv<T: Real>(a: &M3<T>, v: &V3<T>) -> V3<T> {
    std::array::from_fn(|i| {
        a[i][0].clone() * v[0].clone() + a[i][1].clone() * v[1].clone() + a[i][2].clone() * v[2].clone()
    })
}

fn addv<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    std::array::from_fn(|i| a[i].clone() + b[i].clone())
}

fn scalev<T: Real>(a: &V3<T>, k: f64) -> V3<T> {
    std::array::from_fn(|i| a[i].scale(k))
}

pub(crate) fn cross_matrix<T: Real>(e: &V3<T>) -> M3<T> {
    let z = e[0].zero_like();
    [
        [z.clone(), -e[2].clone(), e[1].clone()],
        [e[2].clone(), z.clone(), -e[0].clone()],
        [-e[1].clone(), e[0].clone(), z],
    ]
}

fn outer<T: Real>(a: &V3<T>, b: &V3<T>) -> M3<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i].clone() * b[j].clone()))
}

/// Link directions and their partial derivatives; `angles[k] = (theta, phi)` of link `k + 2`.
pub(crate) fn link_frames<T: Real>(angles: &[(T, T)]) -> Vec<LinkFrame<T>> {
    let z = angles[0].0.zero_like();
    let mut frames = vec![LinkFrame {
        dir: [z.clone(), z.clone(), z.lift(1.0)],
        d_phi: zero3(&z),
        d_theta: zero3(&z),
    }];
    for (theta, phi) in angles {
        let (st, ct) = (theta.sin(), theta.cos());
        let (sp, cp) = (phi.sin(), phi.cos());
        frames.push(LinkFrame {
            dir: [ct.clone() * sp.clone(), st.clone() * sp.clone(), cp.clone()],
            d_phi: [ct.clone() * cp.clone(), st.clone() * cp, -sp.clone()],
            d_theta: [-(st * sp.clone()), ct * sp, z.clone()],
        });
    }
    frames
}

/// Assembles the grand resistance matrix and unit shape wrenches.
pub(crate) fn assemble<T: Real>(
    lengths: &[f64],
    drag: &DragCoefficients,
    angles: &[(T, T)],
) -> Assembly<T> {
    let n = lengths.len();
    debug_assert_eq!(angles.len() + 1, n);
    let frames = link_frames(angles);
    let z = angles[0].0.zero_like();
    let eye = identity33(&z);
    let (cpar, cperp, ctau) = (drag.c_par, drag.c_perp, drag.c_tau);

    let mut k_blk = zero33(&z);
    let mut c_blk = zero33(&z);
    let mut j_blk = zero33(&z);

    // drag tensors, cross matrices and moment-arm sums per link
    let mut drag_t = Vec::with_capacity(n);
    let mut cross = Vec::with_capacity(n);
    let mut arm = Vec::with_capacity(n);
    let mut arm_acc = zero33(&z);
    for (i, frame) in frames.iter().enumerate() {
        let eet = outer(&frame.dir, &frame.dir);
        let a = add33(&scale33(&eet, cpar - cperp), &scale33(&eye, cperp));
        let e_x = cross_matrix(&frame.dir);
        let l = lengths[i];

        k_blk = add33(&k_blk, &scale33(&a, l));
        let arm_a = mul33(&arm_acc, &a);
        c_blk = add33(
            &c_blk,
            &add33(&scale33(&arm_a, l), &scale33(&e_x, 0.5 * l * l * cperp)),
        );
        let mut j_i = add33(
            &scale33(&mul33(&arm_a, &arm_acc), -l),
            &scale33(
                &add33(&mul33(&e_x, &arm_acc), &mul33(&arm_acc, &e_x)),
                -0.5 * l * l * cperp,
            ),
        );
        let perp = add33(&eye, &scale33(&eet, -1.0));
        j_i = add33(&j_i, &scale33(&perp, l * l * l * cperp / 3.0));
        if i == 0 {
            j_i = add33(&j_i, &scale33(&eet, l * ctau));
        }
        j_blk = add33(&j_blk, &j_i);

        drag_t.push(a);
        arm.push(arm_acc.clone());
        if i >= 1 {
            arm_acc = add33(&arm_acc, &scale33(&e_x, l));
        }
        cross.push(e_x);
    }

    let c_t = transpose33(&c_blk);
    let m: [[T; 6]; 6] = std::array::from_fn(|r| {
        std::array::from_fn(|c| match (r < 3, c < 3) {
            (true, true) => k_blk[r][c].clone(),
            (true, false) => c_t[r][c - 3].clone(),
            (false, true) => c_blk[r - 3][c].clone(),
            (false, false) => j_blk[r - 3][c - 3].clone(),
        })
    });

    let mut wrenches = Vec::with_capacity(2 * (n - 1));
    for link in 1..n {
        for which in 0..2 {
            let rate = |i: usize| -> V3<T> {
                if i != link {
                    zero3(&z)
                } else if which == 0 {
                    frames[i].d_phi.clone()
                } else {
                    frames[i].d_theta.clone()
                }
            };
            wrenches.push(shape_wrench_from_rates(lengths, cperp, &drag_t, &cross, &arm, &rate, &z));
        }
    }

    Assembly { m, wrenches }
}

fn shape_wrench_from_rates<T: Real>(
    lengths: &[f64],
    cperp: f64,
    drag_t: &[M3<T>],
    cross: &[M3<T>],
    arm: &[M3<T>],
    rate: &dyn Fn(usize) -> V3<T>,
    z: &T,
) -> [T; 6] {
    let mut force = zero3(z);
    let mut torque = zero3(z);
    // Σ_{j=2}^{i-1} ℓ_j ė_j
    let mut arm_rate = zero3(z);
    for i in 1..lengths.len() {
        let l = lengths[i];
        let e_dot = rate(i);
        let a_arm = mulv(&drag_t[i], &arm_rate);
        force = addv(&force, &addv(&scalev(&a_arm, l), &scalev(&e_dot, 0.5 * l * l * cperp)));
        let t = addv(
            &scalev(&mulv(&arm[i], &a_arm), l),
            &addv(
                &scalev(
                    &addv(&mulv(&cross[i], &arm_rate), &mulv(&arm[i], &e_dot)),
                    0.5 * l * l * cperp,
                ),
                &scalev(&mulv(&cross[i], &e_dot), l * l * l * cperp / 3.0),
            ),
        );
        torque = addv(&torque, &t);
        arm_rate = addv(&arm_rate, &scalev(&e_dot, l));
    }
    [
        force[0].clone(),
        force[1].clone(),
        force[2].clone(),
        torque[0].clone(),
        torque[1].clone(),
        torque[2].clone(),
    ]
}

/// Solves `m x = b` for symmetric positive definite `m` by an `LDLᵀ` factorization.
/// Positivity is judged on the constant part of each pivot.
pub(crate) fn ldlt_solve<T: Real>(m: &[[T; 6]; 6], rhs: &[[T; 6]]) -> Result<Vec<[T; 6]>> {
    let z = m[0][0].zero_like();
    let scale = (0..6).map(|i| m[i][i].value().abs()).fold(0.0, f64::max);
    let mut l: [[T; 6]; 6] = std::array::from_fn(|_| std::array::from_fn(|_| z.clone()));
    let mut d: [T; 6] = std::array::from_fn(|_| z.clone());
    for j in 0..6 {
        let mut dj = m[j][j].clone();
        for k in 0..j {
            dj = dj - l[j][k].clone() * l[j][k].clone() * d[k].clone();
        }
        if !(dj.value() > 1e-14 * scale) {
            return Err(SwimError::NotPositiveDefinite(format!(
                "pivot {j} = {:e}",
                dj.value()
            )));
        }
        for i in (j + 1)..6 {
            let mut s = m[i][j].clone();
            for k in 0..j {
                s = s - l[i][k].clone() * l[j][k].clone() * d[k].clone();
            }
            l[i][j] = s / dj.clone();
        }
        d[j] = dj;
    }
    Ok(rhs
        .iter()
        .map(|b| {
            let mut y: [T; 6] = b.clone();
            for i in 0..6 {
                for k in 0..i {
                    y[i] = y[i].clone() - l[i][k].clone() * y[k].clone();
                }
            }
            for i in 0..6 {
                y[i] = y[i].clone() / d[i].clone();
            }
            for i in (0..6).rev() {
                for k in (i + 1)..6 {
                    y[i] = y[i].clone() - l[k][i].clone() * y[k].clone();
                }
            }
            y
        })
        .collect())
}

/// Body twists of all control fields, `M x_j = −w_j`.
pub(crate) fn field_twists<T: Real>(
    lengths: &[f64],
    drag: &DragCoefficients,
    angles: &[(T, T)],
) -> Result<Vec<[T; 6]>> {
    let asm = assemble(lengths, drag, angles);
    let rhs: Vec<[T; 6]> = asm
        .wrenches
        .iter()
        .map(|w| std::array::from_fn(|i| -w[i].clone()))
        .collect();
    ldlt_solve(&asm.m, &rhs)
}
