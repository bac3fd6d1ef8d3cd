//! Truncated multivariate Taylor series ("jets").
//!
//! A [`Jet`] holds the Taylor coefficients of a function of `n` variables around
//! a base point, up to total degree `d`. Arithmetic and the elementary functions
//! used by the hydrodynamic model propagate the coefficients exactly, so partial
//! derivatives of the control fields of any order ≤ `d` come out at round-off
//! accuracy. Differentiating a jet loses one order of validity: the top-degree
//! coefficients of the result are not available.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

/// Scalar interface shared by `f64` and [`Jet`] so that the resistive-force
/// kernel is written once.
pub trait Real:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant living in the same space as `self`.
    fn lift(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn scale(&self, k: f64) -> Self;

    fn zero_like(&self) -> Self {
        self.lift(0.0)
    }
}

impl Real for f64 {
    fn lift(&self, v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn scale(&self, k: f64) -> Self {
        self * k
    }
}

/// Monomial bookkeeping shared by all jets of one shape.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    degree: usize,
    exponents: Vec<Vec<u8>>,
    /// (i, j, k): coefficient i times coefficient j lands in slot k.
    products: Vec<(u32, u32, u32)>,
    /// For each variable: (source slot, target slot, multiplicity).
    derivatives: Vec<Vec<(u32, u32, f64)>>,
}

impl JetSpace {
    pub fn new(nvars: usize, degree: usize) -> Arc<Self> {
        let mut exponents = vec![vec![0u8; nvars]];
        for deg in 1..=degree {
            let mut layer = Vec::new();
            monomials_of_degree(nvars, deg, &mut vec![0u8; nvars], 0, &mut layer);
            exponents.extend(layer);
        }
        let degrees: Vec<usize> = exponents
            .iter()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .collect();
        let index: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();

        let mut products = Vec::new();
        for (i, ei) in exponents.iter().enumerate() {
            for (j, ej) in exponents.iter().enumerate() {
                if degrees[i] + degrees[j] > degree {
                    continue;
                }
                let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }

        let derivatives = (0..nvars)
            .map(|v| {
                exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e[v] > 0)
                    .map(|(src, e)| {
                        let mut lowered = e.clone();
                        lowered[v] -= 1;
                        (src as u32, index[&lowered] as u32, e[v] as f64)
                    })
                    .collect()
            })
            .collect();

        Arc::new(Self {
            nvars,
            degree,
            exponents,
            products,
            derivatives,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }
}

fn monomials_of_degree(n: usize, left: usize, cur: &mut Vec<u8>, pos: usize, out: &mut Vec<Vec<u8>>) {
    if pos == n - 1 {
        cur[pos] = left as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k as u8;
        monomials_of_degree(n, left - k, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

/// Truncated Taylor series in the variables of its [`JetSpace`].
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("value", &self.coeffs[0])
            .field("nvars", &self.space.nvars)
            .field("degree", &self.space.degree)
            .finish()
    }
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, v: f64) -> Self {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = v;
        Self {
            space: Arc::clone(space),
            coeffs,
        }
    }

    /// The independent variable `var` expanded around `base`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, base: f64) -> Self {
        let mut j = Self::constant(space, base);
        if space.degree > 0 {
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// ∂/∂x_var of the series.
    pub fn derivative(&self, var: usize) -> Jet {
        let mut out = vec![0.0; self.coeffs.len()];
        for &(src, dst, m) in &self.space.derivatives[var] {
            out[dst as usize] += m * self.coeffs[src as usize];
        }
        Jet {
            space: Arc::clone(&self.space),
            coeffs: out,
        }
    }

    /// Value of the truncated polynomial at displacement `dx` from the base point.
    pub fn evaluate(&self, dx: &[f64]) -> f64 {
        self.space
            .exponents
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(dx)
                    .map(|(&k, x)| x.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    fn same_space(&self, other: &Jet) {
        debug_assert!(
            Arc::ptr_eq(&self.space, &other.space),
            "jets from different spaces"
        );
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    /// Non-constant part.
    fn tail(&self) -> Jet {
        let mut t = self.clone();
        t.coeffs[0] = 0.0;
        t
    }

    fn mul_ref(&self, other: &Jet) -> Jet {
        self.same_space(other);
        let mut out = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.space.products {
            let a = self.coeffs[i as usize];
            if a != 0.0 {
                out[k as usize] += a * other.coeffs[j as usize];
            }
        }
        Jet {
            space: Arc::clone(&self.space),
            coeffs: out,
        }
    }

    /// Σ_{k=0}^{d} c_k h^k for a nilpotent tail `h`.
    fn series(h: &Jet, c: impl Fn(usize) -> f64) -> Jet {
        let d = h.space.degree;
        let mut acc = Jet::constant(&h.space, c(d));
        for k in (0..d).rev() {
            acc = acc.mul_ref(h);
            acc.coeffs[0] += c(k);
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let a0 = self.coeffs[0];
        let h = self.tail().map(|c| -c / a0);
        Jet::series(&h, |_| 1.0).map(|c| c / a0)
    }

    fn sin_cos(&self) -> (Jet, Jet) {
        let a0 = self.coeffs[0];
        let h = self.tail();
        let sin_h = Jet::series(&h, |k| {
            if k % 2 == 1 {
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                sign / factorial(k)
            } else {
                0.0
            }
        });
        let cos_h = Jet::series(&h, |k| {
            if k % 2 == 0 {
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                sign / factorial(k)
            } else {
                0.0
            }
        });
        let (s0, c0) = a0.sin_cos();
        let sin = &sin_h.scale(c0) + &cos_h.scale(s0);
        let cos = &cos_h.scale(c0) - &sin_h.scale(s0);
        (sin, cos)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Real for Jet {
    fn lift(&self, v: f64) -> Self {
        Jet::constant(&self.space, v)
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn sin(&self) -> Self {
        self.sin_cos().0
    }
    fn cos(&self) -> Self {
        self.sin_cos().1
    }
    fn scale(&self, k: f64) -> Self {
        self.map(|c| c * k)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.same_space(rhs);
        Jet {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.same_space(rhs);
        Jet {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_ref(rhs)
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self.mul_ref(&rhs.recip())
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_ref(&rhs)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        &self / &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|c| -c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monomial_count() {
        // C(n + d, d)
        assert_eq!(JetSpace::new(2, 3).len(), 10);
        assert_eq!(JetSpace::new(10, 3).len(), 286);
        assert_eq!(JetSpace::new(3, 0).len(), 1);
    }

    #[test]
    fn derivatives_of_sin_product() {
        // f(x, y) = sin(x) * cos(y) / (2 + x y) around (0.4, -0.3)
        let sp = JetSpace::new(2, 4);
        let (x0, y0) = (0.4, -0.3);
        let x = Jet::variable(&sp, 0, x0);
        let y = Jet::variable(&sp, 1, y0);
        let f = x.sin() * y.cos() / (x.lift(2.0) + x.clone() * y.clone());
        let g = |x: f64, y: f64| x.sin() * y.cos() / (2.0 + x * y);
        assert_relative_eq!(f.value(), g(x0, y0), epsilon = 1e-15);

        // fourth-order central differences for the first partials
        let h = 1e-3;
        let fd_x = (-g(x0 + 2.0 * h, y0) + 8.0 * g(x0 + h, y0) - 8.0 * g(x0 - h, y0)
            + g(x0 - 2.0 * h, y0))
            / (12.0 * h);
        assert_relative_eq!(f.derivative(0).value(), fd_x, epsilon = 1e-11);

        // mixed second partial via the polynomial's own value at nearby points
        let fxy = f.derivative(0).derivative(1).value();
        let fd_xy = (g(x0 + h, y0 + h) - g(x0 + h, y0 - h) - g(x0 - h, y0 + h)
            + g(x0 - h, y0 - h))
            / (4.0 * h * h);
        assert_relative_eq!(fxy, fd_xy, epsilon = 1e-6);

        // the truncated series reproduces the function to O(|dx|^5)
        let dx = [0.01, -0.02];
        assert!((f.evaluate(&dx) - g(x0 + dx[0], y0 + dx[1])).abs() < 1e-9);
    }

    #[test]
    fn sin_cos_match_scalar_series() {
        let sp = JetSpace::new(1, 6);
        let x = Jet::variable(&sp, 0, 1.1);
        let s = x.sin();
        // d^k/dx^k sin = sin(x + kπ/2); coefficient k is that over k!
        for (k, c) in s.coefficients().iter().enumerate() {
            let expect = (1.1 + k as f64 * std::f64::consts::FRAC_PI_2).sin() / factorial(k);
            assert_relative_eq!(*c, expect, epsilon = 1e-15);
        }
        let one = &(&s * &s) + &(&x.cos() * &x.cos());
        assert_relative_eq!(one.value(), 1.0, epsilon = 1e-15);
        assert!(one.coefficients()[1..].iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn recip_inverts() {
        let sp = JetSpace::new(3, 3);
        let a = Jet::variable(&sp, 0, 2.0) + Jet::variable(&sp, 2, 0.5).sin();
        let one = &a * &a.recip();
        assert_relative_eq!(one.value(), 1.0, epsilon = 1e-15);
        assert!(one.coefficients()[1..].iter().all(|c| c.abs() < 1e-14));
    }
}
