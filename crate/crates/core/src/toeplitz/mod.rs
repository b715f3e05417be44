//! Landau-level Toeplitz matrices `T_q(μ)` and their spectra.
//!
//! The matrix in the basis `e_{q,0}, …, e_{q,N-1}` is the Gram matrix
//! `M_jk = ∫ e_{q,k} conj(e_{q,j}) dμ`. Every entry is a finite combination
//! of measure moments, so one moment table of degree `N - 1 + q` serves the
//! whole assembly.

pub mod jacobi;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{landau_basis, GaussPoly, LandauIndex, MagneticField};
use crate::measures::{moment_table, support_info, MeasureSpec, MomentTable};
use crate::numerics::{BigComplex, BigReal};

pub use jacobi::{jacobi_eigenvalues, JacobiOutcome};

/// Relative agreement required between the `N` and `2N` spectra.
pub const STABILITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ToeplitzMatrix {
    pub q: u32,
    pub n: usize,
    pub field: MagneticField,
    pub measure: MeasureSpec,
    entries: Vec<BigComplex>,
}

impl ToeplitzMatrix {
    pub fn get(&self, j: usize, k: usize) -> &BigComplex {
        &self.entries[j * self.n + k]
    }

    pub fn entries(&self) -> &[BigComplex] {
        &self.entries
    }

    pub fn prec(&self) -> u32 {
        self.field.prec()
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im.is_zero())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|j| (0..self.n).all(|k| j == k || self.get(j, k).is_zero()))
    }

    pub fn frobenius(&self) -> BigReal {
        self.entries
            .iter()
            .fold(BigReal::zero(self.prec()), |acc, z| &acc + &z.norm_sqr())
            .sqrt()
    }
}

/// Descending eigenvalues with the metadata needed to reproduce them.
///
/// `values[i]` is `s_{i + index_offset}`: Toeplitz spectra use offset 0 so
/// that index `n` lines up with the basis index `k` of the closed forms.
#[derive(Clone, Debug, Serialize)]
pub struct EigSequence {
    #[serde(serialize_with = "serialize_big_vec")]
    pub values: Vec<BigReal>,
    pub q: u32,
    /// Truncation dimension of the matrix the values came from.
    pub n: usize,
    pub prec_bits: u32,
    pub stabilized_count: usize,
    pub index_offset: usize,
    /// Set when growing the truncation failed to stabilize the requested count.
    pub shortfall: bool,
}

fn serialize_big_vec<S: serde::Serializer>(v: &[BigReal], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.to_decimal_default())?;
    }
    seq.end()
}

impl EigSequence {
    /// Wraps an externally produced descending sequence; every value is
    /// considered stable.
    pub fn from_values(values: Vec<BigReal>, index_offset: usize) -> Self {
        let prec = values.first().map(|v| v.prec()).unwrap_or(64);
        EigSequence {
            stabilized_count: values.len(),
            n: values.len(),
            values,
            q: 0,
            prec_bits: prec,
            index_offset,
            shortfall: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `s_n` in the sequence's own enumeration.
    pub fn get(&self, n: usize) -> Option<&BigReal> {
        n.checked_sub(self.index_offset).and_then(|i| self.values.get(i))
    }

    /// Range of enumeration indices covered by the stable prefix.
    pub fn stable_indices(&self) -> std::ops::Range<usize> {
        self.index_offset..self.index_offset + self.stabilized_count
    }
}

fn level_basis(q: u32, n: usize, field: &MagneticField) -> Vec<GaussPoly> {
    (0..n as u32)
        .map(|k| landau_basis(LandauIndex::new(q, k), field))
        .collect()
}

/// Moment-table degree needed for a level-`q` matrix of size `n`.
pub fn required_degree(q: u32, n: usize) -> usize {
    n - 1 + q as usize
}

fn assemble_from_table(
    q: u32,
    n: usize,
    field: &MagneticField,
    mu: &MeasureSpec,
    table: &MomentTable,
) -> Result<ToeplitzMatrix> {
    let basis = level_basis(q, n, field);
    let prec = field.prec();
    let mut entries = vec![BigComplex::zero(prec); n * n];
    for j in 0..n {
        for k in j..n {
            let v = table.pair(&basis[k], &basis[j]).map_err(|e| Error::Entry {
                row: j,
                col: k,
                source: Box::new(e),
            })?;
            let v = if j == k {
                BigComplex::from_real(v.re)
            } else {
                v
            };
            entries[k * n + j] = v.conj();
            entries[j * n + k] = v;
        }
    }
    Ok(ToeplitzMatrix {
        q,
        n,
        field: field.clone(),
        measure: mu.clone(),
        entries,
    })
}

/// Assembles the `n × n` matrix of `T_q(μ)`.
pub fn assemble(q: u32, n: usize, field: &MagneticField, mu: &MeasureSpec) -> Result<ToeplitzMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation dimension must be >= 1".into()));
    }
    let table = moment_table(mu, field, required_degree(q, n))?;
    assemble_from_table(q, n, field, mu, &table)
}

/// Splits indices into groups that the matrix does not couple. Entries
/// below `2^{-prec+8} sqrt(M_jj M_kk)` count as zero; this is the same size
/// as the perturbations Jacobi itself makes.
fn coupled_blocks(m: &ToeplitzMatrix) -> Vec<Vec<usize>> {
    let n = m.n;
    let prec = m.prec();
    let tol = 2f64.powi(-(prec as i32) + 8);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let v = m.get(j, k);
            if v.is_zero() {
                continue;
            }
            let scale = (&m.get(j, j).re * &m.get(k, k).re).abs().sqrt();
            if v.abs() > scale.mul_f64(tol) {
                let (a, b) = (find(&mut parent, j), find(&mut parent, k));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Result of a full diagonalization.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Descending, clamped at zero.
    pub values: Vec<BigReal>,
    /// Most negative eigenvalue before clamping (zero if none).
    pub min_raw: BigReal,
    pub relative_residual: f64,
    pub blocks: usize,
}

/// All eigenvalues of the matrix, descending. Uncoupled index groups are
/// solved separately; each group runs real Jacobi when its entries are real.
pub fn eigen_desc(m: &ToeplitzMatrix) -> Result<Spectrum> {
    let prec = m.prec();
    let blocks = coupled_blocks(m);
    let mut values = Vec::with_capacity(m.n);
    let mut residual: f64 = 0.0;
    for block in &blocks {
        let b = block.len();
        let sub: Vec<BigComplex> = (0..b * b)
            .map(|idx| m.get(block[idx / b], block[idx % b]).clone())
            .collect();
        let out = jacobi_eigenvalues(&sub, b, prec)?;
        residual = residual.max(out.relative_residual);
        values.extend(out.diagonal);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    let min_raw = values
        .last()
        .cloned()
        .unwrap_or_else(|| BigReal::zero(prec))
        .min(BigReal::zero(prec));
    let zero = BigReal::zero(prec);
    let values = values
        .into_iter()
        .map(|v| if v.is_sign_negative() { zero.clone() } else { v })
        .collect();
    Ok(Spectrum {
        values,
        min_raw,
        relative_residual: residual,
        blocks: blocks.len(),
    })
}

/// Truncation dimension `ceil(1.5 n) + ceil(B ρ²) + 32`, with `ρ` the
/// support's reach from the basis origin.
pub fn truncation_dimension(n_target: usize, field: &MagneticField, mu: &MeasureSpec) -> usize {
    let rho = support_info(mu).origin_radius.to_f64();
    let b = field.to_f64();
    (1.5 * n_target as f64).ceil() as usize + (b * rho * rho).ceil() as usize + 32
}

/// Length of the prefix on which `a` and `b` agree to `tol` relatively.
fn agreeing_prefix(a: &[BigReal], b: &[BigReal], tol: f64) -> usize {
    a.iter()
        .zip(b)
        .take_while(|(x, y)| x.is_positive() && x.rel_close(y, tol))
        .count()
}

/// Leading eigenvalues of `T_q(μ)` that are stable under doubling the
/// truncation. Tries `N` against `2N`, then `2N` against `4N`.
pub fn stabilized_spectrum(
    q: u32,
    field: &MagneticField,
    mu: &MeasureSpec,
    n_target: usize,
) -> Result<EigSequence> {
    if n_target == 0 {
        return Err(Error::InvalidArgument("n_target must be >= 1".into()));
    }
    let n0 = truncation_dimension(n_target, field, mu);
    let mut table = moment_table(mu, field, required_degree(q, 2 * n0))?;
    let mut small = eigen_desc(&assemble_from_table(q, n0, field, mu, &table)?)?;
    let mut n = n0;
    for attempt in 0..2 {
        let big_n = 2 * n;
        if table.degree() < required_degree(q, big_n) {
            table = moment_table(mu, field, required_degree(q, big_n))?;
        }
        let big = eigen_desc(&assemble_from_table(q, big_n, field, mu, &table)?)?;
        let stable = agreeing_prefix(&small.values, &big.values, STABILITY_TOL);
        if stable >= n_target || attempt == 1 {
            return Ok(EigSequence {
                values: big.values,
                q,
                n: big_n,
                prec_bits: field.prec(),
                stabilized_count: stable,
                index_offset: 0,
                shortfall: stable < n_target,
            });
        }
        small = big;
        n = big_n;
    }
    unreachable!("loop returns on its second pass")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::lower_incomplete_gamma_reg;

    const PREC: u32 = 256;

    fn field2() -> MagneticField {
        MagneticField::from_f64(2.0, PREC).unwrap()
    }

    #[test]
    fn circle_matrix_is_diagonal_one_ring() {
        let f = field2();
        let mu = MeasureSpec::circle(0.0, 0.0, 1.0, PREC).unwrap();
        let m = assemble(0, 5, &f, &mu).unwrap();
        assert!(m.is_diagonal());
        let einv2 = BigReal::from_i64(-1, PREC).exp().mul_i64(2);
        for k in 0..5 {
            let want = &einv2 / &BigReal::factorial(k as u32, PREC);
            assert!(m.get(k, k).re.rel_close(&want, 1e-60));
        }
    }

    #[test]
    fn disk_matrix_eigenvalues_are_incomplete_gammas() {
        let f = field2();
        let mu = MeasureSpec::disk(0.0, 0.0, 1.0, PREC).unwrap();
        let m = assemble(0, 5, &f, &mu).unwrap();
        assert!(m.is_diagonal());
        let spec = eigen_desc(&m).unwrap();
        let one = BigReal::one(PREC);
        for (k, s) in spec.values.iter().enumerate() {
            let want = lower_incomplete_gamma_reg(k as u32 + 1, &one).unwrap();
            assert!(s.rel_close(&want, 1e-60));
        }
    }

    #[test]
    fn single_atom_has_rank_one() {
        let f = field2();
        let mu = MeasureSpec::atoms(&[((0.0, 1.0), 1.0)], PREC).unwrap();
        for q in 0..3 {
            let m = assemble(q, 6, &f, &mu).unwrap();
            let spec = eigen_desc(&m).unwrap();
            let top = spec.values[0].to_f64();
            assert!(top > 0.0);
            for v in &spec.values[1..] {
                assert!(v.to_f64() < 1e-60 * top, "q={q}");
            }
        }
    }

    #[test]
    fn matrices_are_hermitian() {
        let f = field2();
        let mu = MeasureSpec::polygon(&[(0.1, 0.0), (0.9, 0.2), (0.3, 0.7)], PREC).unwrap();
        let m = assemble(1, 6, &f, &mu).unwrap();
        assert!(!m.is_real());
        for j in 0..6 {
            assert!(m.get(j, j).im.is_zero());
            for k in 0..6 {
                assert!(m.get(j, k) == &m.get(k, j).conj());
            }
        }
        let spec = eigen_desc(&m).unwrap();
        assert!(spec.min_raw.to_f64() >= -1e-30);
    }

    #[test]
    fn segment_is_real_and_splits_by_parity() {
        let f = field2();
        let mu = MeasureSpec::segment(-1.0, 0.0, 1.0, 0.0, PREC).unwrap();
        let m = assemble(0, 12, &f, &mu).unwrap();
        assert!(m.is_real());
        let spec = eigen_desc(&m).unwrap();
        assert_eq!(spec.blocks, 2);
        assert!(spec.values.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn rotation_about_origin_preserves_spectrum() {
        let f = field2();
        let seg = MeasureSpec::segment(-1.0, 0.0, 1.0, 0.0, PREC).unwrap();
        let turned = seg
            .transformed(&BigReal::one(PREC), &BigReal::from_f64(0.7, PREC))
            .unwrap();
        let a = eigen_desc(&assemble(0, 14, &f, &seg).unwrap()).unwrap();
        let b = eigen_desc(&assemble(0, 14, &f, &turned).unwrap()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values).take(10) {
            assert!(x.rel_close(y, 1e-25), "{x:?} {y:?}");
        }
    }

    #[test]
    fn stabilized_circle_spectrum() {
        let f = field2();
        let mu = MeasureSpec::circle(0.0, 0.0, 1.0, PREC).unwrap();
        let s = stabilized_spectrum(0, &f, &mu, 20).unwrap();
        assert!(!s.shortfall);
        assert!(s.stabilized_count >= 20);
        let einv2 = BigReal::from_i64(-1, PREC).exp().mul_i64(2);
        for n in 0..20 {
            let want = &einv2 / &BigReal::factorial(n as u32, PREC);
            assert!(s.get(n).unwrap().rel_close(&want, 1e-50));
        }
    }

    #[test]
    fn truncation_rule() {
        let f = field2();
        let mu = MeasureSpec::disk(0.0, 0.0, 1.0, PREC).unwrap();
        assert_eq!(truncation_dimension(40, &f, &mu), 60 + 2 + 32);
    }
}
