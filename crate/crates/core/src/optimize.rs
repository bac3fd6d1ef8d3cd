//! Small derivative-free optimizers used by the planner.
//!
//! [`nelder_mead`] is the classic simplex method with reflection, expansion,
//! contraction and shrink coefficients `(1, 2, ½, ½)`. [`levenberg_marquardt`]
//! drives a residual vector towards zero with a forward-difference Jacobian and
//! works for underdetermined systems (fewer residuals than unknowns).

use nalgebra::{DMatrix, DVector};

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 2000,
            f_tol: 1e-10,
            x_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from a simplex of axis steps of size `step` around `x0`.
pub fn nelder_mead<F>(mut f: F, x0: &DVector<f64>, step: f64, opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&DVector<f64>) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &DVector<f64>, evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.clone(), v0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += if x[i].abs() > 1e-12 { step * x[i].abs().max(1.0) } else { step };
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut converged = false;
    while evals < opts.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| (x - &simplex[0].0).amax())
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= opts.f_tol) || diameter <= opts.x_tol {
            converged = true;
            break;
        }

        let centroid = simplex[..n]
            .iter()
            .fold(DVector::zeros(n), |acc, (x, _)| acc + x)
            / n as f64;
        let worst = simplex[n].clone();
        let reflect = &centroid + (&centroid - &worst.0);
        let fr = eval(&reflect, &mut evals);

        if fr < simplex[0].1 {
            let expand = &centroid + (&reflect - &centroid) * 2.0;
            let fe = eval(&expand, &mut evals);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let (target, ft) = if fr < worst.1 { (&reflect, fr) } else { (&worst.0, worst.1) };
            let contract = &centroid + (target - &centroid) * 0.5;
            let fc = eval(&contract, &mut evals);
            if fc < ft {
                simplex[n] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = &best + (&item.0 - &best) * 0.5;
                    let v = eval(&x, &mut evals);
                    *item = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        evaluations: evals,
        converged,
    }
}

/// Stopping rules for [`levenberg_marquardt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Success once `max |rᵢ| ≤ target`.
    pub target: f64,
    /// Forward-difference step, relative to `max(1, |xₖ|)`.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            target: 1e-8,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub x: DVector<f64>,
    pub residual: DVector<f64>,
    pub evaluations: usize,
    pub reached_target: bool,
}

/// Drives `r(x)` towards zero. `r` returns `None` where it is undefined; such
/// points are treated as rejected trial steps.
pub fn levenberg_marquardt<F>(mut r: F, x0: &DVector<f64>, opts: &LmOptions) -> Option<LmResult>
where
    F: FnMut(&DVector<f64>) -> Option<DVector<f64>>,
{
    let n = x0.len();
    let mut evals = 1;
    let mut x = x0.clone();
    let mut res = r(&x)?;
    let mut cost = res.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..opts.max_iterations {
        if res.amax() <= opts.target {
            break;
        }
        let m = res.len();
        let mut jac = DMatrix::zeros(m, n);
        let mut ok = true;
        for k in 0..n {
            let h = opts.fd_step * x[k].abs().max(1.0);
            let mut xp = x.clone();
            xp[k] += h;
            evals += 1;
            match r(&xp) {
                Some(a) => jac.set_column(k, &((a - &res) / h)),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &res;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            let scale = jtj.diagonal().amax().max(1e-12);
            for i in 0..n {
                a[(i, i)] += lambda * scale;
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &x + &delta;
            evals += 1;
            if let Some(rt) = r(&trial) {
                let ct = rt.norm_squared();
                if ct < cost {
                    x = trial;
                    res = rt;
                    cost = ct;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some(LmResult {
        reached_target: res.amax() <= opts.target,
        x,
        residual: res,
        evaluations: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let f = |x: &DVector<f64>| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_evaluations: 5000,
            f_tol: 1e-16,
            x_tol: 1e-12,
        };
        let m = nelder_mead(f, &DVector::from_vec(vec![-1.2, 1.0]), 0.5, &opts);
        assert!(m.converged);
        assert_relative_eq!(m.x[0], 1.0, epsilon = 1e-5);
        assert_relative_eq!(m.x[1], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn nelder_mead_respects_budget() {
        let mut calls = 0;
        let f = |x: &DVector<f64>| {
            calls += 1;
            x.norm_squared()
        };
        let opts = NelderMeadOptions {
            max_evaluations: 50,
            ..Default::default()
        };
        let m = nelder_mead(f, &DVector::from_element(4, 3.0), 1.0, &opts);
        assert!(m.evaluations <= 50 + 5);
        assert!(m.value < 36.0);
        assert_eq!(calls, m.evaluations);
    }

    #[test]
    fn lm_solves_underdetermined_system() {
        // circle intersected with a line: x² + y² + z² = 4, x + y = 1
        let r = |v: &DVector<f64>| {
            Some(DVector::from_vec(vec![
                v.norm_squared() - 4.0,
                v[0] + v[1] - 1.0,
            ]))
        };
        let out = levenberg_marquardt(r, &DVector::from_vec(vec![1.0, 1.0, 1.0]), &LmOptions::default()).unwrap();
        assert!(out.reached_target);
        assert!((out.x.norm_squared() - 4.0).abs() < 1e-8);
    }

    #[test]
    fn lm_reports_undefined_start() {
        let r = |_: &DVector<f64>| None::<DVector<f64>>;
        assert!(levenberg_marquardt(r, &DVector::zeros(2), &LmOptions::default()).is_none());
    }
}
