//! Cyclic Jacobi eigensolver for Hermitian positive semidefinite matrices in
//! big-float arithmetic.
//!
//! Rotations are skipped when `|a_pq| <= ε sqrt(a_pp a_qq)`, the relative
//! criterion under which Jacobi resolves tiny eigenvalues of graded Gram
//! matrices to high relative accuracy. Only the upper triangle is stored.

use rug::ops::NegAssign;
use rug::{Assign, Float};

use crate::error::{Error, Result};
use crate::numerics::{BigComplex, BigReal};

pub const SWEEP_BUDGET: usize = 60;

/// Diagonal after convergence plus a residual report.
#[derive(Clone, Debug)]
pub struct JacobiOutcome {
    /// Eigenvalues in the order of the diagonal (unsorted, unclamped).
    pub diagonal: Vec<BigReal>,
    pub sweeps: usize,
    /// Off-diagonal Frobenius norm at exit divided by the input's Frobenius norm.
    pub relative_residual: f64,
}

struct Upper {
    n: usize,
    re: Vec<Float>,
    im: Option<Vec<Float>>,
}

impl Upper {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j);
        i * self.n + j
    }
}

/// Smallest rotation threshold exponent: `ε = 2^{-3 prec / 4}`.
fn eps_sq(prec: u32) -> Float {
    let e = -(3 * prec as i32 / 4);
    Float::with_val(prec, Float::i_exp(1, e)).square()
}

fn frobenius_sq(m: &Upper, prec: u32, off_only: bool) -> Float {
    let mut acc = Float::new(prec);
    let mut t = Float::new(prec);
    for i in 0..m.n {
        for j in i..m.n {
            if i == j && off_only {
                continue;
            }
            let k = m.idx(i, j);
            let w = if i == j { 1u32 } else { 2u32 };
            t.assign(m.re[k].square_ref());
            if let Some(im) = &m.im {
                t += Float::with_val(prec, im[k].square_ref());
            }
            t *= w;
            acc += &t;
        }
    }
    acc
}

/// Diagonalizes the Hermitian matrix given row-major as `entries` (`n × n`).
/// Only the upper triangle is read. If every entry has zero imaginary part
/// the real solver is used.
pub fn jacobi_eigenvalues(entries: &[BigComplex], n: usize, prec: u32) -> Result<JacobiOutcome> {
    assert_eq!(entries.len(), n * n);
    let real = entries.iter().all(|z| z.im.is_zero());
    let mut re = Vec::with_capacity(n * n);
    let mut im = if real { None } else { Some(Vec::with_capacity(n * n)) };
    for (k, z) in entries.iter().enumerate() {
        let (i, j) = (k / n, k % n);
        if i <= j {
            re.push(Float::with_val(prec, z.re.as_float()));
            if let Some(im) = im.as_mut() {
                if i == j {
                    im.push(Float::new(prec));
                } else {
                    im.push(Float::with_val(prec, z.im.as_float()));
                }
            }
        } else {
            re.push(Float::new(prec));
            if let Some(im) = im.as_mut() {
                im.push(Float::new(prec));
            }
        }
    }
    let mut m = Upper { n, re, im };
    let norm_sq = frobenius_sq(&m, prec, false);
    let sweeps = if m.im.is_some() {
        sweep_complex(&mut m, prec)?
    } else {
        sweep_real(&mut m, prec)?
    };
    let off = frobenius_sq(&m, prec, true);
    let relative_residual = if norm_sq.is_zero() {
        0.0
    } else {
        Float::with_val(64, &off / &norm_sq).sqrt().to_f64()
    };
    let diagonal = (0..n)
        .map(|i| BigReal::from_float(m.re[m.idx(i, i)].clone()))
        .collect();
    Ok(JacobiOutcome {
        diagonal,
        sweeps,
        relative_residual,
    })
}

/// True if the pair `(p, q)` still needs a rotation.
fn needs_rotation(apq_sq: &Float, app: &Float, aqq: &Float, eps2: &Float, t: &mut Float) -> bool {
    if apq_sq.is_zero() {
        return false;
    }
    t.assign(app * aqq);
    t.abs_mut();
    *t *= eps2;
    *apq_sq > *t
}

/// Rotation parameters from `(a_pp, a_qq, r)` with `r = a_pq != 0`:
/// returns `(t, s, tau)` in the stable Numerical Recipes form.
fn rotation(app: &Float, aqq: &Float, r: &Float, prec: u32) -> (Float, Float, Float) {
    let mut theta = Float::with_val(prec, aqq - app);
    theta /= r;
    theta /= 2u32;
    let root = (Float::with_val(prec, theta.square_ref()) + 1u32).sqrt();
    let mut t = Float::with_val(prec, theta.abs_ref()) + root;
    t.recip_mut();
    if theta.is_sign_negative() {
        t = -t;
    }
    let c = (Float::with_val(prec, t.square_ref()) + 1u32).sqrt().recip();
    let s = Float::with_val(prec, &t * &c);
    let tau = Float::with_val(prec, &s / Float::with_val(prec, &c + 1u32));
    (t, s, tau)
}

fn sweep_real(m: &mut Upper, prec: u32) -> Result<usize> {
    let n = m.n;
    let eps2 = eps_sq(prec);
    let mut tmp = Float::new(prec);
    let mut apq_sq = Float::new(prec);
    let mut g = Float::new(prec);
    let mut h = Float::new(prec);
    let mut u = Float::new(prec);
    for sweep in 0..SWEEP_BUDGET {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let kpq = m.idx(p, q);
                let (kpp, kqq) = (m.idx(p, p), m.idx(q, q));
                apq_sq.assign(m.re[kpq].square_ref());
                if !needs_rotation(&apq_sq, &m.re[kpp], &m.re[kqq], &eps2, &mut tmp) {
                    continue;
                }
                rotated = true;
                let apq = m.re[kpq].clone();
                // signed a_pq works directly in the real rotation formulas
                let (mut t, s, tau) = rotation(&m.re[kpp], &m.re[kqq], &apq, prec);
                t *= &apq;
                m.re[kpp] -= &t;
                m.re[kqq] += &t;
                m.re[kpq].assign(0);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let kp = if k < p { m.idx(k, p) } else { m.idx(p, k) };
                    let kq = if k < q { m.idx(k, q) } else { m.idx(q, k) };
                    g.assign(&m.re[kp]);
                    h.assign(&m.re[kq]);
                    // a_kp = g - s (h + g tau)
                    u.assign(&g * &tau);
                    u += &h;
                    u *= &s;
                    m.re[kp] -= &u;
                    // a_kq = h + s (g - h tau)
                    u.assign(&h * &tau);
                    u -= &g;
                    u *= &s;
                    m.re[kq] -= &u;
                }
            }
        }
        if !rotated {
            return Ok(sweep);
        }
    }
    let off = frobenius_sq(m, prec, true).sqrt().to_f64();
    Err(Error::JacobiStall {
        sweeps: SWEEP_BUDGET,
        residual: off,
    })
}

fn sweep_complex(m: &mut Upper, prec: u32) -> Result<usize> {
    let n = m.n;
    let eps2 = eps_sq(prec);
    let mut tmp = Float::new(prec);
    let mut apq_sq = Float::new(prec);
    let (mut gr, mut gi, mut hr, mut hi) = (
        Float::new(prec),
        Float::new(prec),
        Float::new(prec),
        Float::new(prec),
    );
    let (mut ur, mut ui) = (Float::new(prec), Float::new(prec));
    for sweep in 0..SWEEP_BUDGET {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let kpq = m.idx(p, q);
                let (kpp, kqq) = (m.idx(p, p), m.idx(q, q));
                {
                    let im = m.im.as_ref().expect("complex");
                    apq_sq.assign(m.re[kpq].square_ref());
                    apq_sq += Float::with_val(prec, im[kpq].square_ref());
                }
                if !needs_rotation(&apq_sq, &m.re[kpp], &m.re[kqq], &eps2, &mut tmp) {
                    continue;
                }
                rotated = true;
                let r = Float::with_val(prec, apq_sq.sqrt_ref());
                // e^{-iφ} = conj(a_pq) / r
                let cr = Float::with_val(prec, &m.re[kpq] / &r);
                let ci = -Float::with_val(prec, &m.im.as_ref().expect("complex")[kpq] / &r);
                let (mut t, s, tau) = rotation(&m.re[kpp], &m.re[kqq], &r, prec);
                t *= &r;
                m.re[kpp] -= &t;
                m.re[kqq] += &t;
                m.re[kpq].assign(0);
                let im = m.im.as_mut().expect("complex");
                im[kpq].assign(0);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    // g = a_kp, h = a_kq e^{-iφ}
                    let (kp, conj_p) = if k < p { (k * n + p, false) } else { (p * n + k, true) };
                    let (kq, conj_q) = if k < q { (k * n + q, false) } else { (q * n + k, true) };
                    gr.assign(&m.re[kp]);
                    gi.assign(&im[kp]);
                    if conj_p {
                        gi.neg_assign();
                    }
                    ur.assign(&m.re[kq]);
                    ui.assign(&im[kq]);
                    if conj_q {
                        ui.neg_assign();
                    }
                    // h = u * (cr + i ci)
                    hr.assign(&ur * &cr);
                    tmp.assign(&ui * &ci);
                    hr -= &tmp;
                    hi.assign(&ur * &ci);
                    tmp.assign(&ui * &cr);
                    hi += &tmp;
                    // new a_kp = g - s (h + g tau)
                    ur.assign(&gr * &tau);
                    ur += &hr;
                    ur *= &s;
                    ui.assign(&gi * &tau);
                    ui += &hi;
                    ui *= &s;
                    let new_pr = Float::with_val(prec, &gr - &ur);
                    let new_pi = Float::with_val(prec, &gi - &ui);
                    // new a_kq = h + s (g - h tau)
                    ur.assign(&hr * &tau);
                    ur -= &gr;
                    ur *= &s;
                    ui.assign(&hi * &tau);
                    ui -= &gi;
                    ui *= &s;
                    hr -= &ur;
                    hi -= &ui;
                    m.re[kp].assign(&new_pr);
                    im[kp].assign(&new_pi);
                    if conj_p {
                        im[kp].neg_assign();
                    }
                    m.re[kq].assign(&hr);
                    im[kq].assign(&hi);
                    if conj_q {
                        im[kq].neg_assign();
                    }
                }
            }
        }
        if !rotated {
            return Ok(sweep);
        }
    }
    let off = frobenius_sq(m, prec, true).sqrt().to_f64();
    Err(Error::JacobiStall {
        sweeps: SWEEP_BUDGET,
        residual: off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREC: u32 = 256;

    fn real_matrix(rows: &[&[f64]]) -> Vec<BigComplex> {
        rows.iter()
            .flat_map(|r| r.iter().map(|&x| BigComplex::from_f64(x, 0.0, PREC)))
            .collect()
    }

    fn sorted(mut v: Vec<BigReal>) -> Vec<f64> {
        v.sort_by(|a, b| b.total_cmp(a));
        v.iter().map(|x| x.to_f64()).collect()
    }

    #[test]
    fn two_by_two() {
        let m = real_matrix(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let out = jacobi_eigenvalues(&m, 2, PREC).unwrap();
        let v = sorted(out.diagonal);
        assert!((v[0] - 3.0).abs() < 1e-30 && (v[1] - 1.0).abs() < 1e-30);
    }

    #[test]
    fn diagonal_passes_through() {
        let m = real_matrix(&[&[0.5, 0.0, 0.0], &[0.0, 3.0, 0.0], &[0.0, 0.0, 1.0]]);
        let out = jacobi_eigenvalues(&m, 3, PREC).unwrap();
        assert_eq!(out.sweeps, 0);
        assert_eq!(sorted(out.diagonal), vec![3.0, 1.0, 0.5]);
    }

    #[test]
    fn hermitian_two_by_two() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let m = vec![
            BigComplex::from_f64(2.0, 0.0, PREC),
            BigComplex::from_f64(0.0, 1.0, PREC),
            BigComplex::from_f64(0.0, -1.0, PREC),
            BigComplex::from_f64(2.0, 0.0, PREC),
        ];
        let out = jacobi_eigenvalues(&m, 2, PREC).unwrap();
        let v = sorted(out.diagonal);
        assert!((v[0] - 3.0).abs() < 1e-30 && (v[1] - 1.0).abs() < 1e-30);
    }

    #[test]
    fn hilbert_smallest_eigenvalue_relative_accuracy() {
        // 8x8 Hilbert matrix: λ_min ≈ 1.11153896e-10
        let n = 8;
        let m: Vec<BigComplex> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                BigComplex::from_real(BigReal::from_ratio(1, (i + j + 1) as i64, PREC))
            })
            .collect();
        let out = jacobi_eigenvalues(&m, n, PREC).unwrap();
        let v = sorted(out.diagonal);
        assert!((v[7] / 1.111538966e-10 - 1.0).abs() < 1e-8, "{}", v[7]);
        assert!((v[0] - 1.695938996).abs() < 1e-8);
        let trace: f64 = (0..n).map(|i| 1.0 / (2 * i + 1) as f64).sum();
        assert!((v.iter().sum::<f64>() - trace).abs() < 1e-14);
    }

    #[test]
    fn complex_matches_real_embedding() {
        // A = X + iY Hermitian; eigenvalues of [[X, -Y], [Y, X]] are those of A twice
        let n = 4;
        let a: Vec<(f64, f64)> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let (lo, hi) = (i.min(j), i.max(j));
                let re = 1.0 / (1.0 + (lo + 2 * hi) as f64) + if i == j { 2.0 } else { 0.0 };
                let im = if i == j { 0.0 } else { 0.3 * (hi as f64 - lo as f64) / (1.0 + lo as f64) };
                (re, if i < j { im } else { -im })
            })
            .collect();
        let m: Vec<BigComplex> = a.iter().map(|&(x, y)| BigComplex::from_f64(x, y, PREC)).collect();
        let big: Vec<BigComplex> = (0..4 * n * n)
            .map(|k| {
                let (i, j) = (k / (2 * n), k % (2 * n));
                let (x, y) = a[(i % n) * n + (j % n)];
                let v = match (i < n, j < n) {
                    (true, true) | (false, false) => x,
                    (true, false) => -y,
                    (false, true) => y,
                };
                BigComplex::from_f64(v, 0.0, PREC)
            })
            .collect();
        let c = sorted(jacobi_eigenvalues(&m, n, PREC).unwrap().diagonal);
        let r = sorted(jacobi_eigenvalues(&big, 2 * n, PREC).unwrap().diagonal);
        for i in 0..n {
            assert!((c[i] - r[2 * i]).abs() < 1e-30);
            assert!((c[i] - r[2 * i + 1]).abs() < 1e-30);
        }
    }
}
