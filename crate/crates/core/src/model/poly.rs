//! Univariate polynomials with rational coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::rational::{to_f64, Rat};

/// Ascending coefficients with no trailing zeros; the zero polynomial is empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rat) -> Self {
        Self::new(vec![c])
    }

    /// `slope * u + offset`
    pub fn linear(slope: Rat, offset: Rat) -> Self {
        Self::new(vec![offset, slope])
    }

    pub fn monomial(degree: usize, c: Rat) -> Self {
        let mut coeffs = vec![Rat::zero(); degree + 1];
        coeffs[degree] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// Coefficient of `u^d` (zero past the degree).
    pub fn coeff(&self, d: usize) -> Rat {
        self.coeffs.get(d).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_affine(&self) -> bool {
        self.coeffs.len() <= 2
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        self.coeffs.iter().rev().fold(Rat::zero(), |acc, c| acc * x + c)
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(to_f64).collect()
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(d, c)| c * Rat::from_integer(d.into()))
                .collect(),
        )
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Self {
        let mut coeffs = vec![Rat::zero()];
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(d, c)| c / Rat::from_integer((d + 1).into())),
        );
        Self::new(coeffs)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|d| self.coeff(d) + rhs.coeff(d)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|d| self.coeff(d) - rhs.coeff(d)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

/// Identity polynomial `u`.
pub fn u() -> Poly {
    Poly::monomial(1, Rat::one())
}

pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn derivative_f64(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(d, c)| c * d as f64).collect()
}

/// Real roots of a polynomial (f64 coefficients) inside `[a, b]`.
///
/// Recursively splits the interval at the critical points, so each segment is
/// monotone, and bisects the segments with a sign change.
pub fn real_roots_in(coeffs: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    if c.len() == 2 {
        let r = -c[0] / c[1];
        return if (a..=b).contains(&r) { vec![r] } else { Vec::new() };
    }
    let mut knots = vec![a];
    knots.extend(real_roots_in(&derivative_f64(&c), a, b).into_iter().filter(|&r| r > a && r < b));
    knots.push(b);
    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (horner(&c, lo), horner(&c, hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if fhi == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = horner(&c, mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    if horner(&c, b) == 0.0 {
        roots.push(b);
    }
    roots.dedup();
    roots
}

/// `max |p(x)|` over `[a, b]`, from the endpoints and the interior critical points.
pub fn max_abs_on(coeffs: &[f64], a: f64, b: f64) -> f64 {
    let crit = real_roots_in(&derivative_f64(coeffs), a, b);
    [a, b].into_iter().chain(crit).map(|x| horner(coeffs, x).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn p(c: &[i64]) -> Poly {
        Poly::new(c.iter().map(|&x| rat(x)).collect())
    }

    #[test]
    fn arithmetic_and_calculus() {
        let a = p(&[1, 2, 3]);
        let b = p(&[0, -2, -3]);
        assert_eq!(&a + &b, p(&[1]));
        assert_eq!((&a - &a).degree(), None);
        assert_eq!(&p(&[1, 1]) * &p(&[-1, 1]), p(&[-1, 0, 1]));
        assert_eq!(a.derivative(), p(&[2, 6]));
        assert_eq!(p(&[0, 0, 1]).antiderivative(), Poly::monomial(3, ratio(1, 3)));
        assert_eq!(a.eval(&ratio(1, 2)), ratio(11, 4));
    }

    #[test]
    fn roots_and_extrema() {
        // (x - 1)(x + 2)(x - 1/2)
        let c = [1.0, -2.5, 0.5, 1.0];
        let roots = real_roots_in(&c, -3.0, 3.0);
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([-2.0, 0.5, 1.0]) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
        assert!((max_abs_on(&[0.0, 0.0, 3.0], -2.0, 2.0) - 12.0).abs() < 1e-15);
        // 3u^2 - 1 on [-1/2, 1/2]: extremum at the interior critical point.
        assert!((max_abs_on(&[-1.0, 0.0, 3.0], -0.5, 0.5) - 1.0).abs() < 1e-15);
    }
}
