use proptest::prelude::*;

use torusdecay_core::model::{apply_tg, primitive, PiecewisePoly, Poly};
use torusdecay_core::rational::{rat, ratio, to_f64, Rat};

const LO: i64 = -2;
const HI: i64 = 2;

/// 5-point Gauss-Legendre on [-1, 1], exact through degree 9.
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn piecewise() -> impl Strategy<Value = PiecewisePoly> {
    (
        prop::collection::btree_set(-15i64..=15, 0..=3),
        prop::collection::vec(prop::collection::vec((-6i64..=6, 1i64..=4), 1..=4), 4),
    )
        .prop_map(|(cuts, coeffs)| {
            let mut bps = vec![rat(LO)];
            bps.extend(cuts.iter().map(|&c| ratio(c, 8)));
            bps.push(rat(HI));
            let pieces = (0..bps.len() - 1)
                .map(|j| Poly::new(coeffs[j].iter().map(|&(n, d)| ratio(n, d)).collect()))
                .collect();
            PiecewisePoly::new(bps, pieces).unwrap()
        })
}

fn continuous() -> impl Strategy<Value = PiecewisePoly> {
    piecewise().prop_map(|p| primitive(&p, &rat(0)).unwrap())
}

struct Numeric {
    bps: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl Numeric {
    fn new(p: &PiecewisePoly) -> Self {
        Numeric {
            bps: p.breakpoints().iter().map(to_f64).collect(),
            coeffs: p.pieces().iter().map(|q| q.coeffs().iter().map(to_f64).collect()).collect(),
        }
    }

    fn piece(&self, x: f64) -> &[f64] {
        let j = self.bps[1..].iter().position(|&b| x < b).unwrap_or(self.coeffs.len() - 1);
        &self.coeffs[j.min(self.coeffs.len() - 1)]
    }

    fn value(&self, x: f64) -> f64 {
        self.piece(x).iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn slope(&self, x: f64) -> f64 {
        let c = self.piece(x);
        (1..c.len()).rev().fold(0.0, |acc, k| acc * x + k as f64 * c[k])
    }
}

/// Composite Gauss quadrature of `∫_0^u g f'` split at every breakpoint.
fn quadrature(g: &Numeric, f: &Numeric, u: f64) -> f64 {
    let (a, b, sign) = if u >= 0.0 { (0.0, u, 1.0) } else { (u, 0.0, -1.0) };
    let mut cuts: Vec<f64> = g.bps.iter().chain(&f.bps).copied().filter(|&x| x > a && x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (m, r) = ((w[0] + w[1]) / 2.0, (w[1] - w[0]) / 2.0);
        total += GL5.iter().map(|&(x, wt)| wt * r * g.value(m + r * x) * f.slope(m + r * x)).sum::<f64>();
    }
    sign * total
}

fn sample_points() -> Vec<Rat> {
    (0..64).map(|j| ratio(4 * j - 126, 64) + ratio(1, 97)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn matches_gauss_quadrature(g in piecewise(), f in continuous()) {
        let t = apply_tg(&g, &f).unwrap();
        prop_assert!(t.is_continuous());
        let (gn, fn_) = (Numeric::new(&g), Numeric::new(&f));
        for u in sample_points() {
            let exact = to_f64(&t.eval(&u).unwrap());
            let quad = quadrature(&gn, &fn_, to_f64(&u));
            prop_assert!((exact - quad).abs() <= 1e-10 * (1.0 + quad.abs()), "u = {}: {} vs {}", u, exact, quad);
        }
    }

    #[test]
    fn linear_in_weight_and_flux(g1 in piecewise(), g2 in piecewise(), f1 in continuous(), f2 in continuous(), c in -5i64..=5) {
        let c = rat(c);
        let lhs = apply_tg(&g1.add(&g2.scale(&c)).unwrap(), &f1).unwrap();
        let rhs = apply_tg(&g1, &f1).unwrap().add(&apply_tg(&g2, &f1).unwrap().scale(&c)).unwrap();
        prop_assert!(lhs.differs_by_constant(&rhs));
        let lhs = apply_tg(&g1, &f1.add(&f2.scale(&c)).unwrap()).unwrap();
        let rhs = apply_tg(&g1, &f1).unwrap().add(&apply_tg(&g1, &f2).unwrap().scale(&c)).unwrap();
        prop_assert!(lhs.differs_by_constant(&rhs));
    }

    #[test]
    fn derivative_is_weighted_slope(g in piecewise(), f in continuous()) {
        let t = apply_tg(&g, &f).unwrap();
        let d = t.derivative().sub(&g.mul(&f.derivative()).unwrap()).unwrap();
        prop_assert!(d.pieces().iter().all(Poly::is_zero));
    }

    #[test]
    fn vanishes_at_zero(g in piecewise(), f in continuous()) {
        prop_assert_eq!(apply_tg(&g, &f).unwrap().eval(&rat(0)).unwrap(), rat(0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn kruzhkov_identity(f in continuous(), k in -31i64..=31) {
        let k = ratio(k, 16);
        let g = PiecewisePoly::sign(rat(LO), rat(HI), k.clone()).unwrap();
        let t = apply_tg(&g, &f).unwrap();
        let f_k = f.eval(&k).unwrap();
        let expected = g.mul(&f.add_affine(&rat(0), &-f_k)).unwrap();
        prop_assert!(t.differs_by_constant(&expected));
    }
}

#[test]
fn worked_examples() {
    let f = PiecewisePoly::polynomial(rat(-1), rat(1), Poly::new(vec![rat(0), rat(0), ratio(1, 2)])).unwrap();
    let one = PiecewisePoly::constant(rat(-1), rat(1), rat(1)).unwrap();
    assert_eq!(apply_tg(&one, &f).unwrap().simplified(), f);
    let g = PiecewisePoly::identity(rat(-1), rat(1)).unwrap();
    let t = apply_tg(&g, &f).unwrap();
    assert_eq!(t.pieces()[0], Poly::monomial(3, ratio(1, 3)));
}
