//! Gauss–Legendre rules at arbitrary precision.

use rug::{Assign, Float};

use super::big::BigReal;
use crate::error::{Error, Result};

const GUARD_BITS: u32 = 32;
const NEWTON_BUDGET: usize = 64;

/// Nodes in (-1, 1), ascending, with positive weights.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<BigReal>,
    pub weights: Vec<BigReal>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn prec(&self) -> u32 {
        self.weights.first().map(|w| w.prec()).unwrap_or(64)
    }

    /// Applies the rule on `[-1, 1]`.
    pub fn integrate<F>(&self, mut f: F) -> BigReal
    where
        F: FnMut(&BigReal) -> BigReal,
    {
        let mut acc = BigReal::zero(self.prec());
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = &acc + &(&f(x) * w);
        }
        acc
    }

    /// Nodes and weights affinely mapped onto `[a, b]`.
    pub fn mapped(&self, a: &BigReal, b: &BigReal) -> (Vec<BigReal>, Vec<BigReal>) {
        let half = (b - a).div_i64(2);
        let mid = (a + b).div_i64(2);
        let nodes = self.nodes.iter().map(|x| &mid + &(&half * x)).collect();
        let weights = self.weights.iter().map(|w| w * &half).collect();
        (nodes, weights)
    }
}

/// Legendre `P_n(x)` and `P_{n-1}(x)` by the three-term recurrence.
fn legendre_pair(n: usize, x: &Float, prec: u32) -> (Float, Float) {
    let mut p_prev = Float::with_val(prec, 1);
    let mut p = Float::with_val(prec, x);
    let mut tmp = Float::new(prec);
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
        tmp.assign(&p * x);
        tmp *= (2 * k + 1) as u32;
        p_prev *= k as u32;
        tmp -= &p_prev;
        tmp /= (k + 1) as u32;
        std::mem::swap(&mut p_prev, &mut p);
        std::mem::swap(&mut p, &mut tmp);
    }
    (p, p_prev)
}

fn legendre_f64(n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (1.0, x);
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * x * p - k as f64 * p_prev) / (k + 1) as f64;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Gauss–Legendre rule of the given order at `prec_bits` binary precision.
///
/// Nodes are the roots of `P_order`, found by Newton iteration seeded from
/// the asymptotic root estimate and carried out at `prec_bits + 32` bits.
pub fn gauss_legendre(order: usize, prec_bits: u32) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
    }
    if prec_bits < 64 {
        return Err(Error::InvalidArgument(format!(
            "quadrature precision {prec_bits} below 64 bits"
        )));
    }
    let n = order;
    let wp = prec_bits + GUARD_BITS;
    let half = n / 2;
    // positive roots, descending
    let mut pos_nodes = Vec::with_capacity(half);
    let mut pos_weights = Vec::with_capacity(half);
    let nf = n as f64;
    for i in 1..=half {
        let theta = std::f64::consts::PI * (i as f64 - 0.25) / (nf + 0.5);
        let mut x0 = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        for _ in 0..8 {
            let (p, pm) = legendre_f64(n, x0);
            let dp = nf * (x0 * p - pm) / (x0 * x0 - 1.0);
            let dx = p / dp;
            x0 -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let mut x = Float::with_val(wp, x0);
        let mut converged = false;
        let mut dp: Float;
        for _ in 0..NEWTON_BUDGET {
            let (p, pm) = legendre_pair(n, &x, wp);
            // P'_n = n (x P_n - P_{n-1}) / (x^2 - 1)
            let x2m1 = Float::with_val(wp, x.square_ref()) - 1u32;
            dp = Float::with_val(wp, &x * &p);
            dp -= &pm;
            dp *= n as u32;
            dp /= &x2m1;
            let dx = Float::with_val(wp, &p / &dp);
            x -= &dx;
            let small = dx.is_zero()
                || dx.get_exp().map_or(true, |e| e < -(wp as i32) + 4);
            if small {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureNodes { order: n, index: i - 1 });
        }
        let (p, pm) = legendre_pair(n, &x, wp);
        let x2m1 = Float::with_val(wp, x.square_ref()) - 1u32;
        dp = Float::with_val(wp, &x * &p);
        dp -= &pm;
        dp *= n as u32;
        dp /= &x2m1;
        // w = 2 / ((1 - x^2) P'_n(x)^2)
        let mut w = Float::with_val(wp, dp.square_ref());
        w *= Float::with_val(wp, -x2m1);
        let w = Float::with_val(wp, 2u32) / w;
        pos_nodes.push(Float::with_val(prec_bits, &x));
        pos_weights.push(Float::with_val(prec_bits, &w));
    }
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (x, w) in pos_nodes.iter().zip(&pos_weights) {
        nodes.push(BigReal::from_float(Float::with_val(prec_bits, -x)));
        weights.push(BigReal::from_float(w.clone()));
    }
    if n % 2 == 1 {
        let x = Float::with_val(wp, 0);
        let (_, pm) = legendre_pair(n, &x, wp);
        // at x = 0: P'_n(0) = n P_{n-1}(0)
        let dp = Float::with_val(wp, &pm * n as u32);
        let w = Float::with_val(wp, 2u32) / Float::with_val(wp, dp.square_ref());
        nodes.push(BigReal::zero(prec_bits));
        weights.push(BigReal::from_float(Float::with_val(prec_bits, &w)));
    }
    for (x, w) in pos_nodes.into_iter().zip(pos_weights).rev() {
        nodes.push(BigReal::from_float(x));
        weights.push(BigReal::from_float(w));
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        order: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_midpoint() {
        let r = gauss_legendre(1, 128).unwrap();
        assert!(r.nodes[0].is_zero());
        assert_eq!(r.weights[0].to_f64(), 2.0);
    }

    #[test]
    fn order_two_closed_form() {
        let prec = 256;
        let r = gauss_legendre(2, prec).unwrap();
        let expected = BigReal::from_i64(3, prec).sqrt().recip();
        assert!(r.nodes[1].rel_close(&expected, 1e-70));
        assert!((-&r.nodes[0]).rel_close(&expected, 1e-70));
        for w in &r.weights {
            assert!(w.rel_close(&BigReal::one(prec), 1e-70));
        }
    }

    #[test]
    fn x30_against_exact_rational() {
        let prec = 256;
        let r = gauss_legendre(16, prec).unwrap();
        let got = r.integrate(|x| x.powi(30));
        let exact = BigReal::from_ratio(2, 31, prec);
        assert!(got.rel_close(&exact, 1e-70), "{got:?}");
    }

    #[test]
    fn weights_sum_to_two_and_ladder_is_exact() {
        for &(order, prec) in &[(5usize, 128u32), (24, 256), (41, 512)] {
            let r = gauss_legendre(order, prec).unwrap();
            let sum = r.integrate(|_| BigReal::one(prec));
            let two = BigReal::from_i64(2, prec);
            let tol = BigReal::one(prec).mul_f64(2f64.powi(-(prec as i32) + 8));
            assert!((&sum - &two).abs() <= tol);
            assert!(r.weights.iter().all(|w| w.is_positive()));
            let resid_tol = 2f64.powi(-(prec as i32) / 2);
            for j in 0..(2 * order) {
                let got = r.integrate(|x| x.powi(j as u32));
                let exact = if j % 2 == 1 {
                    BigReal::zero(prec)
                } else {
                    BigReal::from_ratio(2, j as i64 + 1, prec)
                };
                assert!(
                    (&got - &exact).abs().to_f64() < resid_tol,
                    "order {order} monomial {j}"
                );
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gauss_legendre(0, 128).is_err());
        assert!(gauss_legendre(4, 32).is_err());
    }

    #[test]
    fn deterministic() {
        let a = gauss_legendre(33, 300).unwrap();
        let b = gauss_legendre(33, 300).unwrap();
        assert!(a.nodes == b.nodes && a.weights == b.weights);
    }
}
