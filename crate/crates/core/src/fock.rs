//! Landau-level eigenfunctions as Gaussian-weighted polynomials in `(z, z̄)`.
//!
//! A [`GaussPoly`] stores `f(z) = Σ c_ab z^a z̄^b · e^{-B|z|²/4}` exactly as a
//! coefficient map. The creation and annihilation operators act on the
//! polynomial factor only:
//!
//! * `Q* = -2i e^{Ψ} ∂ e^{-Ψ}` sends `p` to `-2i ∂p + iB z̄ p`,
//! * `Q  = -2i e^{-Ψ} ∂̄ e^{Ψ}` sends `p` to `-2i ∂̄p`,
//!
//! with `Ψ = B|z|²/4`. Whole-plane inner products reduce to the Gaussian
//! moments `∫ z^a z̄^b e^{-B|z|²/2} dm = δ_ab (2π/B)(2/B)^a a!`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{BigComplex, BigReal};

/// Strength `B > 0` of the constant magnetic field.
#[derive(Clone, PartialEq)]
pub struct MagneticField(BigReal);

impl MagneticField {
    pub fn new(b: BigReal) -> Result<Self> {
        if !b.is_positive() {
            return Err(Error::InvalidArgument(format!(
                "magnetic field must be positive, got {b:?}"
            )));
        }
        Ok(MagneticField(b))
    }

    pub fn from_f64(b: f64, prec: u32) -> Result<Self> {
        Self::new(BigReal::from_f64(b, prec))
    }

    pub fn strength(&self) -> &BigReal {
        &self.0
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        MagneticField(self.0.with_prec(prec))
    }

    /// Landau level `Λ_q = (2q + 1) B`.
    pub fn landau_level(&self, q: u32) -> BigReal {
        self.0.mul_i64(2 * q as i64 + 1)
    }
}

impl fmt::Debug for MagneticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B={:?}", self.0)
    }
}

/// Landau level `q` and intra-level index `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LandauIndex {
    pub q: u32,
    pub k: u32,
}

impl LandauIndex {
    pub fn new(q: u32, k: u32) -> Self {
        LandauIndex { q, k }
    }
}

/// `∫ |z|^{2a} e^{-B|z|²/2} dm(z) = (2π/B)(2/B)^a a!`.
pub fn gaussian_moment(a: u32, field: &MagneticField) -> BigReal {
    let prec = field.prec();
    let b = field.strength();
    let two_over_b = &BigReal::from_i64(2, prec) / b;
    let base = &BigReal::pi(prec).mul_i64(2) / b;
    &(&base * &two_over_b.powi(a)) * &BigReal::factorial(a, prec)
}

/// Normalization `c_k` of `c_k z^k e^{-Ψ}` in `L²(ℝ²)`.
pub fn lowest_level_norm(k: u32, field: &MagneticField) -> BigReal {
    gaussian_moment(k, field).sqrt().recip()
}

/// `C_q = sqrt(q! (2B)^q)`.
pub fn ladder_constant(q: u32, field: &MagneticField) -> BigReal {
    let prec = field.prec();
    let two_b = field.strength().mul_i64(2);
    (&BigReal::factorial(q, prec) * &two_b.powi(q)).sqrt()
}

/// Polynomial in `(z, z̄)` times the Gaussian `e^{-B|z|²/4}`.
#[derive(Clone)]
pub struct GaussPoly {
    field: MagneticField,
    coeffs: BTreeMap<(u32, u32), BigComplex>,
    degree: (u32, u32),
}

impl GaussPoly {
    pub fn zero(field: &MagneticField) -> Self {
        GaussPoly {
            field: field.clone(),
            coeffs: BTreeMap::new(),
            degree: (0, 0),
        }
    }

    /// Single monomial `c z^a z̄^b e^{-Ψ}`.
    pub fn monomial(field: &MagneticField, a: u32, b: u32, c: BigComplex) -> Self {
        Self::from_terms(field, [((a, b), c)])
    }

    pub fn from_terms<I>(field: &MagneticField, terms: I) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), BigComplex)>,
    {
        let prec = field.prec();
        let mut coeffs: BTreeMap<(u32, u32), BigComplex> = BTreeMap::new();
        for (key, c) in terms {
            let c = c.with_prec(prec);
            match coeffs.get_mut(&key) {
                Some(existing) => *existing = &*existing + &c,
                None => {
                    coeffs.insert(key, c);
                }
            }
        }
        let mut p = GaussPoly {
            field: field.clone(),
            coeffs,
            degree: (0, 0),
        };
        p.normalize();
        p
    }

    /// Drops zero coefficients and those below `2^{-prec+16}` relative to the
    /// largest one, then refreshes the degree bound.
    fn normalize(&mut self) {
        let prec = self.field.prec();
        let largest = self
            .coeffs
            .values()
            .map(|c| c.abs())
            .fold(BigReal::zero(prec), BigReal::max);
        let floor = largest.mul_f64(2f64.powi(-(prec as i32) + 16));
        self.coeffs.retain(|_, c| !c.is_zero() && c.abs() >= floor);
        self.degree = self
            .coeffs
            .keys()
            .fold((0, 0), |(da, db), &(a, b)| (da.max(a), db.max(b)));
    }

    pub fn field(&self) -> &MagneticField {
        &self.field
    }

    pub fn prec(&self) -> u32 {
        self.field.prec()
    }

    pub fn coeffs(&self) -> &BTreeMap<(u32, u32), BigComplex> {
        &self.coeffs
    }

    pub fn coeff(&self, a: u32, b: u32) -> Option<&BigComplex> {
        self.coeffs.get(&(a, b))
    }

    /// Largest powers of `z` and `z̄` present.
    pub fn degree(&self) -> (u32, u32) {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check_field(&self, other: &GaussPoly) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch(
                format!("{:?}", self.field),
                format!("{:?}", other.field),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &GaussPoly) -> Result<GaussPoly> {
        self.check_field(other)?;
        Ok(Self::from_terms(
            &self.field,
            self.coeffs
                .iter()
                .chain(other.coeffs.iter())
                .map(|(k, c)| (*k, c.clone())),
        ))
    }

    pub fn sub(&self, other: &GaussPoly) -> Result<GaussPoly> {
        self.add(&other.scale(&BigComplex::from_real(BigReal::from_i64(-1, self.prec()))))
    }

    pub fn scale(&self, s: &BigComplex) -> GaussPoly {
        Self::from_terms(&self.field, self.coeffs.iter().map(|(k, c)| (*k, c * s)))
    }

    pub fn scale_real(&self, s: &BigReal) -> GaussPoly {
        Self::from_terms(&self.field, self.coeffs.iter().map(|(k, c)| (*k, c.scale(s))))
    }

    /// Creation operator: `p ↦ -2i ∂p + iB z̄ p`.
    pub fn apply_creation(&self) -> GaussPoly {
        let b = self.field.strength();
        let mut terms = Vec::with_capacity(2 * self.coeffs.len());
        for (&(a, bb), c) in &self.coeffs {
            if a > 0 {
                // -2i * a * c  on z^{a-1} z̄^b
                terms.push(((a - 1, bb), c.scale_i64(-2 * a as i64).mul_i()));
            }
            // iB * c on z^a z̄^{b+1}
            terms.push(((a, bb + 1), c.scale(b).mul_i()));
        }
        Self::from_terms(&self.field, terms)
    }

    /// Annihilation operator: `p ↦ -2i ∂̄p`.
    pub fn apply_annihilation(&self) -> GaussPoly {
        let terms = self.coeffs.iter().filter(|(&(_, b), _)| b > 0).map(|(&(a, b), c)| {
            ((a, b - 1), c.scale_i64(-2 * b as i64).mul_i())
        });
        Self::from_terms(&self.field, terms.collect::<Vec<_>>())
    }

    /// Free Landau Hamiltonian `X_0 = Q*Q + B`.
    pub fn apply_hamiltonian(&self) -> GaussPoly {
        let qq = self.apply_annihilation().apply_creation();
        let shift = self.scale_real(self.field.strength());
        qq.add(&shift).expect("same field")
    }

    /// Evaluates the function (polynomial times Gaussian) at `z`.
    pub fn eval(&self, z: &BigComplex) -> BigComplex {
        let prec = self.prec();
        let z = z.with_prec(prec);
        let zbar = z.conj();
        // Horner in z over rows a, Horner in z̄ inside each row
        let mut rows: BTreeMap<u32, Vec<(u32, &BigComplex)>> = BTreeMap::new();
        for (&(a, b), c) in &self.coeffs {
            rows.entry(a).or_default().push((b, c));
        }
        let inner = |row: &[(u32, &BigComplex)]| -> BigComplex {
            let top = row.iter().map(|(b, _)| *b).max().unwrap_or(0);
            let mut acc = BigComplex::zero(prec);
            let mut idx = row.len();
            for deg in (0..=top).rev() {
                acc = &acc * &zbar;
                if idx > 0 && row[idx - 1].0 == deg {
                    acc = &acc + row[idx - 1].1;
                    idx -= 1;
                }
            }
            acc
        };
        let mut acc = BigComplex::zero(prec);
        let top = self.degree.0;
        for deg in (0..=top).rev() {
            acc = &acc * &z;
            if let Some(row) = rows.get(&deg) {
                acc = &acc + &inner(row);
            }
        }
        let r2 = z.norm_sqr();
        let gauss = (&r2 * self.field.strength()).div_i64(-4).exp();
        acc.scale(&gauss)
    }

    /// Coefficient-wise closeness in absolute terms.
    pub fn approx_eq(&self, other: &GaussPoly, tol: f64) -> bool {
        match self.sub(other) {
            Ok(d) => d.coeffs.values().all(|c| c.abs().to_f64() <= tol),
            Err(_) => false,
        }
    }
}

impl fmt::Debug for GaussPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.coeffs.iter().map(|(k, v)| (k, v)))
            .finish()
    }
}

/// Orthonormal basis function `e_{q,k} = C_q^{-1} (Q*)^q (c_k z^k e^{-Ψ})`.
pub fn landau_basis(idx: LandauIndex, field: &MagneticField) -> GaussPoly {
    let prec = field.prec();
    let mut p = GaussPoly::monomial(field, idx.k, 0, BigComplex::one(prec));
    for _ in 0..idx.q {
        p = p.apply_creation();
    }
    let norm = &lowest_level_norm(idx.k, field) / &ladder_constant(idx.q, field);
    p.scale_real(&norm)
}

/// `∫ f conj(g) dm` over the whole plane.
pub fn exact_inner_product(f: &GaussPoly, g: &GaussPoly) -> Result<BigComplex> {
    f.check_field(g)?;
    let field = f.field();
    let prec = field.prec();
    let mut acc = BigComplex::zero(prec);
    let mut moments: BTreeMap<u32, BigReal> = BTreeMap::new();
    // term z^a z̄^b conj(z^c z̄^d) = z^{a+d} z̄^{b+c}
    for (&(a, b), fc) in f.coeffs() {
        for (&(c, d), gc) in g.coeffs() {
            if a + d != b + c {
                continue;
            }
            let m = moments
                .entry(a + d)
                .or_insert_with(|| gaussian_moment(a + d, field));
            acc = &acc + &(fc * &gc.conj()).scale(m);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREC: u32 = 256;

    fn field(b: f64) -> MagneticField {
        MagneticField::from_f64(b, PREC).unwrap()
    }

    fn c(re: f64, im: f64) -> BigComplex {
        BigComplex::from_f64(re, im, PREC)
    }

    fn tol() -> f64 {
        2f64.powi(-(PREC as i32) / 2)
    }

    /// Independent symbolic oracle for `Q*`: expands `-2i e^{Ψ} ∂ (p e^{-2Ψ})`
    /// term by term, using `∂ e^{-2Ψ} = -(B/2) z̄ e^{-2Ψ}`.
    fn creation_oracle(p: &GaussPoly) -> GaussPoly {
        let f = p.field().clone();
        let half_b = f.strength().div_i64(2);
        let mut terms = Vec::new();
        for (&(a, b), coef) in p.coeffs() {
            // ∂(z^a z̄^b) e^{-2Ψ}
            if a > 0 {
                terms.push(((a - 1, b), coef.scale_i64(a as i64)));
            }
            // z^a z̄^b ∂ e^{-2Ψ}
            terms.push(((a, b + 1), coef.scale(&(-&half_b))));
        }
        let inner = GaussPoly::from_terms(&f, terms);
        // multiply by -2i
        inner.scale(&c(0.0, -2.0))
    }

    #[test]
    fn creation_on_constant_and_z() {
        let f = field(2.0);
        let one = GaussPoly::monomial(&f, 0, 0, c(1.0, 0.0));
        let out = one.apply_creation();
        assert_eq!(out.len(), 1);
        assert_eq!(out.coeff(0, 1).unwrap().to_f64_pair(), (0.0, 2.0));

        let b = 3.5;
        let f = field(b);
        let z = GaussPoly::monomial(&f, 1, 0, c(1.0, 0.0));
        let out = z.apply_creation();
        assert_eq!(out.coeff(0, 0).unwrap().to_f64_pair(), (0.0, -2.0));
        assert_eq!(out.coeff(1, 1).unwrap().to_f64_pair(), (0.0, b));
    }

    #[test]
    fn creation_matches_symbolic_oracle() {
        let f = field(1.7);
        let p = GaussPoly::from_terms(
            &f,
            [((0, 0), c(1.0, 0.5)), ((3, 1), c(-2.0, 0.0)), ((2, 4), c(0.0, 0.25)), ((5, 0), c(1.0, 1.0))],
        );
        assert!(p.apply_creation().approx_eq(&creation_oracle(&p), tol()));
    }

    #[test]
    fn annihilation_examples() {
        let f = field(2.0);
        let hol = GaussPoly::monomial(&f, 5, 0, c(1.0, 0.0));
        assert!(hol.apply_annihilation().is_zero());
        let zbar = GaussPoly::monomial(&f, 0, 1, c(1.0, 0.0));
        let out = zbar.apply_annihilation();
        assert_eq!(out.coeff(0, 0).unwrap().to_f64_pair(), (0.0, -2.0));
        let zzbar = GaussPoly::monomial(&f, 1, 1, c(1.0, 0.0));
        let out = zzbar.apply_annihilation();
        assert_eq!(out.len(), 1);
        assert_eq!(out.coeff(1, 0).unwrap().to_f64_pair(), (0.0, -2.0));
    }

    #[test]
    fn commutator_is_two_b() {
        let b = 1.3;
        let f = field(b);
        let p = GaussPoly::from_terms(
            &f,
            [((0, 0), c(1.0, 0.0)), ((2, 1), c(0.5, -1.0)), ((1, 3), c(-0.75, 0.0))],
        );
        let lhs = p
            .apply_creation()
            .apply_annihilation()
            .sub(&p.apply_annihilation().apply_creation())
            .unwrap();
        let rhs = p.scale_real(&BigReal::from_f64(2.0 * b, PREC));
        assert!(lhs.approx_eq(&rhs, tol()));
    }

    #[test]
    fn ground_state_coefficient() {
        let f = field(2.0);
        let e00 = landau_basis(LandauIndex::new(0, 0), &f);
        let expected = BigReal::pi(PREC).sqrt().recip();
        assert!(e00.coeff(0, 0).unwrap().re.rel_close(&expected, 1e-70));
        let v = e00.eval(&BigComplex::zero(PREC));
        assert!(v.re.rel_close(&expected, 1e-70));
        assert!(v.im.is_zero());
    }

    #[test]
    fn polar_moment_oracle() {
        // ∫ r^{2k} e^{-B r²/2} 2πr dr by quadrature in r
        let f = field(2.0);
        let rule = crate::numerics::gauss_legendre(80, PREC).unwrap();
        let hi = BigReal::from_i64(12, PREC);
        let (nodes, weights) = rule.mapped(&BigReal::zero(PREC), &hi);
        for k in [0u32, 1, 4] {
            let mut acc = BigReal::zero(PREC);
            for (r, w) in nodes.iter().zip(&weights) {
                let g = (&r.square() * f.strength()).div_i64(-2).exp();
                acc = &acc + &(&(&r.powi(2 * k + 1) * &g) * w);
            }
            acc = &acc * &BigReal::pi(PREC).mul_i64(2);
            assert!(acc.rel_close(&gaussian_moment(k, &f), 1e-25), "k={k}");
        }
    }

    #[test]
    fn orthonormal_small_block() {
        let f = field(2.0);
        let basis: Vec<_> = (0..3)
            .flat_map(|q| (0..4).map(move |k| LandauIndex::new(q, k)))
            .map(|i| (i, landau_basis(i, &f)))
            .collect();
        for (i, fi) in &basis {
            for (j, fj) in &basis {
                let ip = exact_inner_product(fi, fj).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re.to_f64() - want).abs() < tol(), "{i:?} {j:?}");
                assert!(ip.im.to_f64().abs() < tol());
            }
        }
    }

    #[test]
    fn named_inner_products() {
        let f = field(2.0);
        let e = |q, k| landau_basis(LandauIndex::new(q, k), &f);
        assert!(exact_inner_product(&e(0, 0), &e(0, 1)).unwrap().is_zero());
        let n = exact_inner_product(&e(0, 3), &e(0, 3)).unwrap();
        assert!(n.re.rel_close(&BigReal::one(PREC), 1e-70));
        let n = exact_inner_product(&e(1, 0), &e(1, 0)).unwrap();
        assert!(n.re.rel_close(&BigReal::one(PREC), 1e-70));
        let x = exact_inner_product(&e(2, 1), &e(1, 1)).unwrap();
        assert!(x.abs().to_f64() < tol());
    }

    #[test]
    fn hamiltonian_eigenvalue() {
        let f = field(1.0);
        let e = landau_basis(LandauIndex::new(2, 3), &f);
        let lhs = e.apply_hamiltonian();
        let rhs = e.scale_real(&f.landau_level(2));
        assert!(lhs.approx_eq(&rhs, tol()));
        assert_eq!(f.landau_level(2).to_f64(), 5.0);
    }

    #[test]
    fn mismatched_fields_rejected() {
        let a = landau_basis(LandauIndex::new(0, 0), &field(1.0));
        let b = landau_basis(LandauIndex::new(0, 0), &field(2.0));
        assert!(matches!(exact_inner_product(&a, &b), Err(Error::FieldMismatch(..))));
    }

    #[test]
    fn eval_constant_and_radial_symmetry() {
        let f = field(1.5);
        let p = GaussPoly::from_terms(&f, [((0, 0), c(0.3, -0.2)), ((2, 1), c(1.0, 0.0))]);
        assert_eq!(p.eval(&BigComplex::zero(PREC)).to_f64_pair(), (0.3, -0.2));
        let e = landau_basis(LandauIndex::new(0, 4), &f);
        let z = c(0.7, -0.4);
        let theta = BigReal::from_f64(1.1, PREC);
        let rot = BigComplex::new(theta.cos(), theta.sin());
        let a = e.eval(&z).abs();
        let b = e.eval(&(&z * &rot)).abs();
        assert!(a.rel_close(&b, 1e-60));
    }

    #[test]
    fn eval_matches_direct_sum() {
        let f = field(0.8);
        let p = GaussPoly::from_terms(
            &f,
            [((0, 2), c(1.0, 0.0)), ((3, 0), c(0.0, 1.0)), ((1, 1), c(-0.5, 0.5)), ((3, 2), c(0.2, 0.0))],
        );
        let z = c(0.6, 0.9);
        let zbar = z.conj();
        let mut direct = BigComplex::zero(PREC);
        for (&(a, b), coef) in p.coeffs() {
            direct = &direct + &(&(coef * &z.powi(a)) * &zbar.powi(b));
        }
        let g = (&z.norm_sqr() * f.strength()).div_i64(-4).exp();
        let direct = direct.scale(&g);
        let got = p.eval(&z);
        assert!((&got - &direct).abs().to_f64() < 1e-60);
    }
}
