//! `B(u) = ∫_0^u sqrt(a(v)) dv` for a nonnegative scalar coefficient, tabulated
//! once by Gauss–Legendre quadrature and evaluated by cubic Hermite interpolation.

use super::piecewise::{CompiledPoly, PiecewisePoly};
use super::specs::DiffusionSpec;
use super::ModelError;
use crate::rational::to_f64;

const GAUSS_NODES: usize = 16;

/// Nodes and weights on `[-1, 1]`, by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[derive(Debug, Clone)]
pub struct SqrtPrimitive {
    a: CompiledPoly,
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl SqrtPrimitive {
    /// Tabulates on the domain of `a`, splitting every piece into
    /// `cells_per_piece` equal cells.
    pub fn new(a: &PiecewisePoly, cells_per_piece: usize) -> Self {
        let compiled = a.compile();
        let root = |x: f64| compiled.eval(x).max(0.0).sqrt();
        let gl = gauss_legendre(GAUSS_NODES);
        let mut knots = Vec::new();
        for w in a.breakpoints().windows(2) {
            let (lo, hi) = (to_f64(&w[0]), to_f64(&w[1]));
            for k in 0..cells_per_piece {
                knots.push(lo + (hi - lo) * k as f64 / cells_per_piece as f64);
            }
        }
        knots.push(to_f64(a.hi()));
        let mut values = vec![0.0; knots.len()];
        for k in 1..knots.len() {
            let (l, r) = (knots[k - 1], knots[k]);
            // stay inside one piece so the integrand is smooth on each cell
            let piece = compiled.piece_index(0.5 * (l + r));
            let p = &compiled.pieces[piece];
            let integral: f64 = gl
                .iter()
                .map(|(x, w)| {
                    let v = 0.5 * (l + r) + 0.5 * (r - l) * x;
                    w * super::poly::horner(p, v).max(0.0).sqrt()
                })
                .sum::<f64>()
                * 0.5
                * (r - l);
            values[k] = values[k - 1] + integral;
        }
        let slopes = knots.iter().map(|&x| root(x)).collect();
        let mut out = SqrtPrimitive { a: compiled, knots, values, slopes };
        let offset = out.eval_raw(0.0);
        for v in &mut out.values {
            *v -= offset;
        }
        out
    }

    /// One table per diagonal entry of a diagonal diffusion matrix.
    pub fn for_diagonal(diff: &DiffusionSpec, cells_per_piece: usize) -> Result<Vec<Self>, ModelError> {
        if !diff.is_diagonal() {
            return Err(ModelError::NotDiagonal);
        }
        Ok((0..diff.n()).map(|r| Self::new(diff.entry(r, r), cells_per_piece)).collect())
    }

    /// `sqrt(a(u))`
    pub fn integrand(&self, u: f64) -> f64 {
        self.a.eval(u).max(0.0).sqrt()
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.eval_raw(u)
    }

    fn eval_raw(&self, u: f64) -> f64 {
        let n = self.knots.len();
        let k = self.knots.partition_point(|&x| x <= u).clamp(1, n - 1);
        let (x0, x1) = (self.knots[k - 1], self.knots[k]);
        let h = x1 - x0;
        let s = (u - x0) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.values[k - 1] + h10 * h * self.slopes[k - 1] + h01 * self.values[k] + h11 * h * self.slopes[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::poly::Poly;
    use crate::rational::rat;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = gauss_legendre(16);
        let w: f64 = gl.iter().map(|p| p.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
        // ∫_{-1}^{1} x^30 dx = 2/31
        let i: f64 = gl.iter().map(|(x, w)| w * x.powi(30)).sum();
        assert!((i - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn constant_and_square_coefficients() {
        let one = PiecewisePoly::constant(rat(-1), rat(1), rat(4)).unwrap();
        let b = SqrtPrimitive::new(&one, 8);
        for u in [-1.0, -0.3, 0.0, 0.77, 1.0] {
            assert!((b.eval(u) - 2.0 * u).abs() < 1e-14);
        }
        // sqrt(u^2) = |u|, B = u|u|/2
        let sq = PiecewisePoly::polynomial(rat(-1), rat(1), Poly::monomial(2, rat(1))).unwrap();
        let b = SqrtPrimitive::new(&sq, 64);
        for u in [-0.9, -0.25, 0.1, 0.6] {
            assert!((b.eval(u) - u * u.abs() / 2.0).abs() < 1e-12, "{u}");
        }
    }
}
