//! Validated problem data: flux vector, diffusion matrix, entropies and the
//! JSON problem schema tying them to a lattice of periods.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::piecewise::PiecewisePoly;
use super::poly::Poly;
use super::{primitive, ModelError};
use crate::lattice::matrix::{det, RatMatrix};
use crate::lattice::{LatticeBasis, LatticeError, MAX_DIM};
use crate::rational::{rat, serde_rat, Rat, RatStr};

/// Number of equispaced samples in `[-M, M]` used by the convexity and
/// semidefiniteness checks (breakpoints are always added).
const SAMPLE_COUNT: i64 = 64;

fn check_cover(p: &PiecewisePoly, m: &Rat, what: impl FnOnce() -> String) -> Result<PiecewisePoly, ModelError> {
    if !p.covers(&-m.clone(), m) {
        return Err(ModelError::DoesNotCover { what: what(), m: m.clone() });
    }
    p.restrict(&-m.clone(), m)
}

fn equispaced(m: &Rat) -> Vec<Rat> {
    (0..SAMPLE_COUNT)
        .map(|k| -m.clone() + m * rat(2) * Rat::new(k.into(), (SAMPLE_COUNT - 1).into()))
        .collect()
}

/// The flux vector `phi = (phi_1, ..., phi_n)` on the working interval `[-M, M]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluxSpec {
    components: Vec<PiecewisePoly>,
    bound: Rat,
}

impl FluxSpec {
    pub fn new(components: Vec<PiecewisePoly>, bound: Rat) -> Result<Self, ModelError> {
        if !bound.is_positive() {
            return Err(ModelError::NonPositiveBound);
        }
        if components.is_empty() || components.len() > MAX_DIM {
            return Err(ModelError::Dimension(format!("flux has {} components", components.len())));
        }
        let components = components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if !c.is_continuous() {
                    return Err(ModelError::DiscontinuousFlux(i));
                }
                check_cover(c, &bound, || format!("flux component {i}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FluxSpec { components, bound })
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PiecewisePoly] {
        &self.components
    }

    pub fn bound(&self) -> &Rat {
        &self.bound
    }

    /// `xi . phi(u)`
    pub fn dot(&self, xi: &[Rat]) -> PiecewisePoly {
        let mut acc = PiecewisePoly::constant(-self.bound.clone(), self.bound.clone(), Rat::zero()).unwrap();
        for (c, x) in self.components.iter().zip(xi) {
            if !x.is_zero() {
                acc = acc.add(&c.scale(x)).expect("same working interval");
            }
        }
        acc
    }

    /// All components on their common breakpoint refinement.
    pub fn refined(&self) -> Vec<PiecewisePoly> {
        let all: Vec<Rat> = self.components.iter().flat_map(|c| c.breakpoints().to_vec()).collect();
        self.components.iter().map(|c| c.refine(&all)).collect()
    }
}

/// Symmetric positive semidefinite diffusion matrix `a(u)` with primitive `A(u)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionSpec {
    entries: Vec<Vec<PiecewisePoly>>,
    primitive: Vec<Vec<PiecewisePoly>>,
    psd_certificate: Vec<Rat>,
    bound: Rat,
}

impl DiffusionSpec {
    pub fn new(entries: Vec<Vec<PiecewisePoly>>, bound: Rat) -> Result<Self, ModelError> {
        if !bound.is_positive() {
            return Err(ModelError::NonPositiveBound);
        }
        let n = entries.len();
        if n == 0 || n > MAX_DIM || entries.iter().any(|r| r.len() != n) {
            return Err(ModelError::Dimension("diffusion matrix must be n x n".into()));
        }
        let entries = entries
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, e)| check_cover(e, &bound, || format!("diffusion entry ({i}, {j})")))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..n {
            for j in i + 1..n {
                let diff = entries[i][j].sub(&entries[j][i])?;
                if diff.pieces().iter().any(|p| !p.is_zero()) {
                    return Err(ModelError::Asymmetric(i, j));
                }
            }
        }
        let zero = Rat::zero();
        let primitive = entries
            .iter()
            .map(|row| row.iter().map(|e| primitive(e, &zero)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let mut spec = DiffusionSpec { entries, primitive, psd_certificate: Vec::new(), bound };
        spec.psd_certificate = spec.certify()?;
        Ok(spec)
    }

    /// `a ≡ 0` in dimension `n`.
    pub fn zero(n: usize, bound: Rat) -> Result<Self, ModelError> {
        let z = PiecewisePoly::constant(-bound.clone(), bound.clone(), Rat::zero())?;
        Self::new(vec![vec![z; n]; n], bound)
    }

    /// Diagonal matrix with the given diagonal entries.
    pub fn diagonal(diag: Vec<PiecewisePoly>, bound: Rat) -> Result<Self, ModelError> {
        let n = diag.len();
        let z = PiecewisePoly::constant(-bound.clone(), bound.clone(), Rat::zero())?;
        let entries = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { z.clone() }).collect())
            .collect();
        Self::new(entries, bound)
    }

    fn breakpoints(&self) -> Vec<Rat> {
        let mut all: Vec<Rat> =
            self.entries.iter().flatten().flat_map(|e| e.breakpoints().to_vec()).collect();
        all.sort();
        all.dedup();
        all
    }

    /// Samples where `a(u) ⪰ 0` is verified: breakpoints (both one-sided
    /// limits), piece midpoints and equispaced points.
    fn certify(&self) -> Result<Vec<Rat>, ModelError> {
        let bps = self.breakpoints();
        let mut samples: Vec<Rat> = bps.clone();
        samples.extend(bps.windows(2).map(|w| (&w[0] + &w[1]) / rat(2)));
        samples.extend(equispaced(&self.bound));
        samples.sort();
        samples.dedup();
        for x in &samples {
            for side in [Side::Left, Side::Right] {
                if !is_psd(&self.matrix_at(x, side)) {
                    return Err(ModelError::NotPsd(x.clone()));
                }
            }
        }
        Ok(samples)
    }

    fn matrix_at(&self, x: &Rat, side: Side) -> RatMatrix {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| {
                        let (l, r) = e.one_sided(x).expect("inside working interval");
                        match side {
                            Side::Left => l,
                            Side::Right => r,
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn bound(&self) -> &Rat {
        &self.bound
    }

    pub fn entries(&self) -> &[Vec<PiecewisePoly>] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &PiecewisePoly {
        &self.entries[i][j]
    }

    /// `A_ij` with `A_ij' = a_ij`, vanishing at 0.
    pub fn primitive(&self, i: usize, j: usize) -> &PiecewisePoly {
        &self.primitive[i][j]
    }

    pub fn psd_certificate(&self) -> &[Rat] {
        &self.psd_certificate
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| i == j || self.entries[i][j].pieces().iter().all(Poly::is_zero)))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.pieces().iter().all(Poly::is_zero))
    }

    /// `a(u) xi . xi`
    pub fn quadratic_form(&self, xi: &[Rat]) -> PiecewisePoly {
        let mut acc = PiecewisePoly::constant(-self.bound.clone(), self.bound.clone(), Rat::zero()).unwrap();
        for (i, xi_i) in xi.iter().enumerate() {
            for (j, xi_j) in xi.iter().enumerate() {
                let c = xi_i * xi_j;
                if !c.is_zero() {
                    acc = acc.add(&self.entries[i][j].scale(&c)).expect("same working interval");
                }
            }
        }
        acc
    }

    /// `q a(u) q^T` for a nonsingular rational `q` (rows are the new directions).
    pub fn transformed(&self, q: &RatMatrix) -> Result<Self, ModelError> {
        let n = self.n();
        if q.len() != n || q.iter().any(|r| r.len() != n) {
            return Err(ModelError::Dimension("transform must be n x n".into()));
        }
        let zero = PiecewisePoly::constant(-self.bound.clone(), self.bound.clone(), Rat::zero())?;
        let mut entries = vec![vec![zero; n]; n];
        for (i, qi) in q.iter().enumerate() {
            for (j, qj) in q.iter().enumerate() {
                let mut acc = entries[i][j].clone();
                for k in 0..n {
                    for l in 0..n {
                        let c = &qi[k] * &qj[l];
                        if !c.is_zero() {
                            acc = acc.add(&self.entries[k][l].scale(&c))?;
                        }
                    }
                }
                entries[i][j] = acc.simplified();
            }
        }
        Self::new(entries, self.bound.clone())
    }

    /// Common breakpoint refinement of every entry.
    pub fn refined(&self) -> Vec<Vec<PiecewisePoly>> {
        let all = self.breakpoints();
        self.entries.iter().map(|row| row.iter().map(|e| e.refine(&all)).collect()).collect()
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

/// Positive semidefiniteness of a symmetric rational matrix via all principal minors.
pub fn is_psd(m: &RatMatrix) -> bool {
    let n = m.len();
    (1u32..(1 << n)).all(|mask| {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub: RatMatrix = idx.iter().map(|&i| idx.iter().map(|&j| m[i][j].clone()).collect()).collect();
        !det(&sub).is_negative()
    })
}

/// Convex entropy `eta` with its derivative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntropySpec {
    eta: PiecewisePoly,
    eta_prime: PiecewisePoly,
}

impl EntropySpec {
    pub fn new(eta: &PiecewisePoly, bound: &Rat) -> Result<Self, ModelError> {
        let eta = check_cover(eta, bound, || "entropy".to_string())?;
        let eta_prime = eta.derivative();
        let mut samples: Vec<Rat> = eta.breakpoints().to_vec();
        samples.extend(equispaced(bound));
        samples.sort();
        samples.dedup();
        if !eta.is_continuous() {
            let at = (1..eta.breakpoints().len() - 1)
                .map(|j| eta.breakpoints()[j].clone())
                .find(|b| eta.one_sided(b).is_some_and(|(l, r)| l != r))
                .unwrap_or_else(|| eta.lo().clone());
            return Err(ModelError::NotConvex(at));
        }
        let mut prev: Option<Rat> = None;
        for x in &samples {
            let (l, r) = eta_prime.one_sided(x).expect("inside domain");
            for v in [l, r] {
                if prev.as_ref().is_some_and(|p| &v < p) {
                    return Err(ModelError::NotConvex(x.clone()));
                }
                prev = Some(v);
            }
        }
        for (j, p) in eta_prime.pieces().iter().enumerate() {
            // a decreasing linear piece slips between samples only if it is short
            if p.degree() == Some(1) && p.coeff(1).is_negative() {
                return Err(ModelError::NotConvex(eta.breakpoints()[j].clone()));
            }
        }
        Ok(EntropySpec { eta, eta_prime })
    }

    /// `|u - k|`
    pub fn kruzhkov(k: Rat, bound: &Rat) -> Result<Self, ModelError> {
        Self::new(&PiecewisePoly::abs_shift(-bound.clone(), bound.clone(), k)?, bound)
    }

    /// `u^2`
    pub fn square(bound: &Rat) -> Result<Self, ModelError> {
        Self::new(&PiecewisePoly::polynomial(-bound.clone(), bound.clone(), Poly::monomial(2, Rat::one()))?, bound)
    }

    /// `(u - k)^+`
    pub fn positive_part(k: Rat, bound: &Rat) -> Result<Self, ModelError> {
        let abs = PiecewisePoly::abs_shift(-bound.clone(), bound.clone(), k.clone())?;
        let lin = PiecewisePoly::polynomial(-bound.clone(), bound.clone(), Poly::linear(Rat::one(), -k))?;
        Self::new(&abs.add(&lin)?.scale(&Rat::new(1.into(), 2.into())), bound)
    }

    pub fn eta(&self) -> &PiecewisePoly {
        &self.eta
    }

    pub fn eta_prime(&self) -> &PiecewisePoly {
        &self.eta_prime
    }
}

/// A piecewise object, or a bare coefficient list meaning one polynomial on `[-M, M]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PiecewiseField {
    Full(PiecewisePoly),
    Coeffs(Vec<Rat>),
}

impl PiecewiseField {
    fn resolve(self, bound: &Rat) -> Result<PiecewisePoly, ModelError> {
        match self {
            PiecewiseField::Full(p) => Ok(p),
            PiecewiseField::Coeffs(c) => PiecewisePoly::polynomial(-bound.clone(), bound.clone(), Poly::new(c)),
        }
    }
}

impl Serialize for PiecewiseField {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PiecewiseField::Full(p) => p.serialize(s),
            PiecewiseField::Coeffs(c) => s.collect_seq(c.iter().map(|r| RatStr(r.clone()))),
        }
    }
}

impl<'de> Deserialize<'de> for PiecewiseField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = serde_json::Value::deserialize(d)?;
        if v.is_array() {
            let c: Vec<RatStr> = serde_json::from_value(v).map_err(D::Error::custom)?;
            Ok(PiecewiseField::Coeffs(c.into_iter().map(|r| r.0).collect()))
        } else if v.is_object() {
            serde_json::from_value(v).map(PiecewiseField::Full).map_err(D::Error::custom)
        } else {
            Err(D::Error::custom("expected a piecewise object or a coefficient array"))
        }
    }
}

/// The JSON problem schema
/// `{ "n": int, "M": rational, "flux": [...], "diffusion": [[...]], "lattice": [[...]] }`.
/// A missing lattice means the standard lattice `Z^n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProblemSpec {
    pub n: usize,
    #[serde(rename = "M", with = "serde_rat")]
    pub m: Rat,
    pub flux: Vec<PiecewiseField>,
    pub diffusion: Vec<Vec<PiecewiseField>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeBasis>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Validated problem: flux, diffusion and lattice of periods in a common dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemSpec {
    pub flux: FluxSpec,
    pub diffusion: DiffusionSpec,
    pub lattice: LatticeBasis,
}

impl ProblemSpec {
    pub fn new(flux: FluxSpec, diffusion: DiffusionSpec, lattice: LatticeBasis) -> Result<Self, ModelError> {
        let n = flux.n();
        if diffusion.n() != n || lattice.dim() != n {
            return Err(ModelError::Dimension(format!(
                "flux has {n} components, diffusion is {}x{0}, lattice has dimension {}",
                diffusion.n(),
                lattice.dim()
            )));
        }
        if flux.bound() != diffusion.bound() {
            return Err(ModelError::Dimension("flux and diffusion use different bounds M".into()));
        }
        Ok(ProblemSpec { flux, diffusion, lattice })
    }

    pub fn n(&self) -> usize {
        self.flux.n()
    }

    pub fn bound(&self) -> &Rat {
        self.flux.bound()
    }

    pub fn from_raw(raw: RawProblemSpec) -> Result<Self, SpecError> {
        let n = raw.n;
        if n == 0 || n > MAX_DIM {
            return Err(ModelError::Dimension(format!("n = {n} outside 1..={MAX_DIM}")).into());
        }
        if raw.flux.len() != n {
            return Err(ModelError::Dimension(format!("n = {n} but flux has {} components", raw.flux.len())).into());
        }
        let m = raw.m;
        let flux = FluxSpec::new(
            raw.flux.into_iter().map(|f| f.resolve(&m)).collect::<Result<_, _>>()?,
            m.clone(),
        )?;
        let diffusion = DiffusionSpec::new(
            raw.diffusion
                .into_iter()
                .map(|row| row.into_iter().map(|f| f.resolve(&m)).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()?,
            m,
        )?;
        let lattice = raw.lattice.unwrap_or_else(|| LatticeBasis::identity(n));
        Ok(ProblemSpec::new(flux, diffusion, lattice)?)
    }

    pub fn to_raw(&self) -> RawProblemSpec {
        RawProblemSpec {
            n: self.n(),
            m: self.bound().clone(),
            flux: self.flux.components().iter().map(|c| PiecewiseField::Full(c.simplified())).collect(),
            diffusion: self
                .diffusion
                .entries()
                .iter()
                .map(|row| row.iter().map(|e| PiecewiseField::Full(e.simplified())).collect())
                .collect(),
            lattice: Some(self.lattice.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn poly(c: &[Rat]) -> PiecewisePoly {
        PiecewisePoly::polynomial(rat(-1), rat(1), Poly::new(c.to_vec())).unwrap()
    }

    #[test]
    fn flux_requires_cover_and_continuity() {
        assert!(FluxSpec::new(vec![poly(&[rat(0), rat(1)])], rat(1)).is_ok());
        assert!(matches!(
            FluxSpec::new(vec![poly(&[rat(0), rat(1)])], rat(2)),
            Err(ModelError::DoesNotCover { .. })
        ));
        let jump = PiecewisePoly::sign(rat(-1), rat(1), rat(0)).unwrap();
        assert_eq!(FluxSpec::new(vec![jump], rat(1)), Err(ModelError::DiscontinuousFlux(0)));
    }

    #[test]
    fn diffusion_checks_symmetry_and_psd() {
        let one = poly(&[rat(1)]);
        let half = poly(&[ratio(1, 2)]);
        let zero = poly(&[]);
        assert!(DiffusionSpec::new(vec![vec![one.clone(), half.clone()], vec![half.clone(), one.clone()]], rat(1)).is_ok());
        assert_eq!(
            DiffusionSpec::new(vec![vec![one.clone(), half.clone()], vec![zero.clone(), one.clone()]], rat(1)),
            Err(ModelError::Asymmetric(0, 1))
        );
        let two = poly(&[rat(2)]);
        assert!(matches!(
            DiffusionSpec::new(vec![vec![one.clone(), two.clone()], vec![two, one.clone()]], rat(1)),
            Err(ModelError::NotPsd(_))
        ));
        // u on [-1, 1] is negative on the left half
        assert!(matches!(DiffusionSpec::new(vec![vec![poly(&[rat(0), rat(1)])]], rat(1)), Err(ModelError::NotPsd(_))));
    }

    #[test]
    fn diffusion_primitive_differentiates_back() {
        let a = DiffusionSpec::new(vec![vec![poly(&[rat(0), rat(0), rat(1)])]], rat(1)).unwrap();
        assert_eq!(a.primitive(0, 0).derivative(), *a.entry(0, 0));
        assert_eq!(a.primitive(0, 0).eval(&rat(0)), Some(rat(0)));
        assert!(!a.psd_certificate().is_empty());
    }

    #[test]
    fn transformed_diffusion() {
        let a = DiffusionSpec::diagonal(vec![poly(&[rat(1)]), poly(&[rat(0), rat(0), rat(1)])], rat(1)).unwrap();
        let q = vec![vec![rat(1), rat(1)], vec![rat(0), rat(1)]];
        let t = a.transformed(&q).unwrap();
        // (q a q^T)_00 = a_00 + a_11
        assert_eq!(t.entry(0, 0).pieces()[0], Poly::new(vec![rat(1), rat(0), rat(1)]));
        assert_eq!(t.entry(0, 1).pieces()[0], Poly::monomial(2, rat(1)));
    }

    #[test]
    fn entropies() {
        assert!(EntropySpec::square(&rat(1)).is_ok());
        assert!(EntropySpec::kruzhkov(ratio(1, 3), &rat(1)).is_ok());
        assert!(EntropySpec::positive_part(rat(0), &rat(1)).is_ok());
        let concave = poly(&[rat(0), rat(0), rat(-1)]);
        assert!(matches!(EntropySpec::new(&concave, &rat(1)), Err(ModelError::NotConvex(_))));
        let k = EntropySpec::kruzhkov(rat(0), &rat(1)).unwrap();
        assert_eq!(k.eta().eval(&ratio(-1, 2)), Some(ratio(1, 2)));
    }

    #[test]
    fn problem_json_with_shorthand() {
        let json = r#"{ "n": 1, "M": "1", "flux": [["0", "0", "1/2"]], "diffusion": [[{"breakpoints": ["-1", "0", "1"], "coeffs": [["0"], ["0", "0", "1"]]}]] }"#;
        let raw: RawProblemSpec = serde_json::from_str(json).unwrap();
        let spec = ProblemSpec::from_raw(raw).unwrap();
        assert_eq!(spec.lattice, LatticeBasis::identity(1));
        let again = ProblemSpec::from_raw(serde_json::from_str(&serde_json::to_string(&spec.to_raw()).unwrap()).unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn problem_dimension_mismatch() {
        let json = r#"{ "n": 2, "M": "1", "flux": [["0"]], "diffusion": [[["0"]]] }"#;
        let raw: RawProblemSpec = serde_json::from_str(json).unwrap();
        assert!(matches!(ProblemSpec::from_raw(raw), Err(SpecError::Model(ModelError::Dimension(_)))));
    }
}
