//! Log-gamma and the regularized lower incomplete gamma function.

use rug::Float;

use super::big::BigReal;
use crate::error::{Error, Result};

/// `log Γ(x)` for `x > 0`, at the precision of `x`.
pub fn lgamma(x: &BigReal) -> Result<BigReal> {
    if !x.is_positive() {
        return Err(Error::InvalidArgument(format!("lgamma needs x > 0, got {x:?}")));
    }
    Ok(BigReal::from_float(x.as_float().clone().ln_gamma()))
}

/// `log n!` at `prec` bits.
pub fn ln_factorial(n: u64, prec: u32) -> BigReal {
    BigReal::from_float(Float::with_val(prec, n + 1).ln_gamma())
}

/// Regularized lower incomplete gamma `P(k, t) = γ(k, t) / Γ(k)` for integer
/// `k >= 1`.
///
/// Uses the forward recurrence `P(s+1, t) = P(s, t) - t^s e^{-t} / s!` from
/// `P(1, t) = 1 - e^{-t}`. The recurrence subtracts nearly equal numbers
/// once `s` exceeds `t`; when the cancellation eats more than half of the
/// working bits the whole ladder is recomputed at doubled precision.
pub fn lower_incomplete_gamma_reg(k: u32, t: &BigReal) -> Result<BigReal> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "incomplete gamma index k must be >= 1".into(),
        ));
    }
    let ladder = lower_incomplete_gamma_ladder(k, t)?;
    Ok(ladder.into_iter().next_back().expect("k >= 1"))
}

/// `[P(1, t), P(2, t), ..., P(kmax, t)]` at the precision of `t`.
pub fn lower_incomplete_gamma_ladder(kmax: u32, t: &BigReal) -> Result<Vec<BigReal>> {
    if kmax == 0 {
        return Ok(Vec::new());
    }
    if t.is_sign_negative() {
        return Err(Error::InvalidArgument(format!(
            "incomplete gamma needs t >= 0, got {t:?}"
        )));
    }
    let prec = t.prec();
    if t.is_zero() {
        return Ok(vec![BigReal::zero(prec); kmax as usize]);
    }
    let mut wp = prec + 32;
    loop {
        let (vals, lost) = ladder_at(kmax, t.as_float(), wp);
        if lost <= wp / 2 {
            return Ok(vals
                .into_iter()
                .map(|v| BigReal::from_float(Float::with_val(prec, v)))
                .collect());
        }
        wp *= 2;
    }
}

/// Runs the recurrence at `wp` bits. Returns the ladder and the estimated
/// number of bits lost to cancellation at the deepest entry.
fn ladder_at(kmax: u32, t: &Float, wp: u32) -> (Vec<Float>, u32) {
    let t = Float::with_val(wp, t);
    let e = Float::with_val(wp, -&t).exp();
    // 1 - e^{-t} without cancellation for small t
    let p1 = -Float::with_val(wp, -&t).exp_m1();
    let mut out = Vec::with_capacity(kmax as usize);
    out.push(p1);
    let mut term = e;
    for s in 1..kmax {
        term *= &t;
        term /= s;
        let next = Float::with_val(wp, out.last().expect("nonempty") - &term);
        out.push(next);
    }
    let last = out.last().expect("nonempty");
    let lost = if last.is_zero() || last.is_sign_negative() {
        u32::MAX
    } else {
        let e = last.get_exp().unwrap_or(0);
        let depth = 32 - kmax.leading_zeros();
        ((-e).max(0) as u32).saturating_add(depth)
    };
    (out, lost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    /// Independent oracle: `P(k, t) = e^{-t} Σ_{j >= k} t^j / j!`.
    fn series_oracle(k: u32, t: f64, prec: u32) -> BigReal {
        let wp = prec * 2;
        let t = Float::with_val(wp, t);
        let mut term = Float::with_val(wp, Float::factorial(k));
        term = Float::with_val(wp, (&t).pow(k)) / term;
        let mut sum = Float::new(wp);
        let mut j = k;
        loop {
            sum += &term;
            j += 1;
            term *= &t;
            term /= j;
            if term.is_zero() || term.get_exp().unwrap() < sum.get_exp().unwrap() - wp as i32 {
                break;
            }
        }
        sum *= Float::with_val(wp, -&t).exp();
        BigReal::from_float(Float::with_val(prec, sum))
    }

    #[test]
    fn lgamma_small_integers() {
        let prec = 256;
        assert!(lgamma(&BigReal::one(prec)).unwrap().is_zero());
        assert!(lgamma(&BigReal::from_i64(2, prec)).unwrap().is_zero());
        let product: u64 = (1..=10).product();
        let exact = BigReal::from_u64(product, prec).ln();
        let got = lgamma(&BigReal::from_i64(11, prec)).unwrap();
        assert!(got.rel_close(&exact, 1e-70));
        assert!(lgamma(&BigReal::zero(prec)).is_err());
    }

    #[test]
    fn lgamma_recurrence_grid() {
        let prec = 320;
        for i in 1..40 {
            let x = BigReal::from_ratio(i * 7, 13, prec);
            let lhs = &lgamma(&(&x + &BigReal::one(prec))).unwrap() - &lgamma(&x).unwrap();
            let rhs = x.ln();
            let tol = 2f64.powi(-(prec as i32) + 16) * (1.0 + rhs.to_f64().abs());
            assert!((&lhs - &rhs).abs().to_f64() <= tol, "x = {x:?}");
        }
    }

    #[test]
    fn closed_forms_at_t_one() {
        let prec = 256;
        let t = BigReal::one(prec);
        let einv = BigReal::from_i64(-1, prec).exp();
        let one = BigReal::one(prec);
        let p1 = lower_incomplete_gamma_reg(1, &t).unwrap();
        let p2 = lower_incomplete_gamma_reg(2, &t).unwrap();
        let p3 = lower_incomplete_gamma_reg(3, &t).unwrap();
        assert!(p1.rel_close(&(&one - &einv), 1e-70));
        assert!(p2.rel_close(&(&one - &einv.mul_i64(2)), 1e-70));
        assert!(p3.rel_close(&(&one - &einv.mul_f64(2.5)), 1e-70));
        assert!((p1.to_f64() - 0.6321205588).abs() < 1e-10);
        assert!((p2.to_f64() - 0.2642411177).abs() < 1e-10);
        assert!((p3.to_f64() - 0.0803013971).abs() < 1e-10);
    }

    #[test]
    fn deep_ladder_matches_series_oracle() {
        let prec = 512;
        for &t in &[0.125, 1.0, 3.5] {
            let ladder = lower_incomplete_gamma_ladder(160, &BigReal::from_f64(t, prec)).unwrap();
            for &k in &[1u32, 5, 40, 100, 160] {
                let oracle = series_oracle(k, t, prec);
                let got = &ladder[k as usize - 1];
                assert!(got.rel_close(&oracle, 1e-60), "k={k} t={t}: {got:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        let prec = 128;
        assert!(lower_incomplete_gamma_reg(3, &BigReal::zero(prec)).unwrap().is_zero());
        assert!(lower_incomplete_gamma_reg(0, &BigReal::one(prec)).is_err());
        assert!(lower_incomplete_gamma_reg(2, &BigReal::from_i64(-1, prec)).is_err());
    }

    #[test]
    fn monotone_in_k_and_t() {
        let prec = 256;
        let ts: Vec<BigReal> = (1..8).map(|i| BigReal::from_ratio(i, 3, prec)).collect();
        let ladders: Vec<Vec<BigReal>> = ts
            .iter()
            .map(|t| lower_incomplete_gamma_ladder(30, t).unwrap())
            .collect();
        for ladder in &ladders {
            for w in ladder.windows(2) {
                assert!(w[1] < w[0]);
            }
            assert!(ladder.iter().all(|p| p.is_positive() && p < &BigReal::one(prec)));
        }
        for k in 0..30 {
            for pair in ladders.windows(2) {
                assert!(pair[0][k] < pair[1][k]);
            }
        }
    }

    #[test]
    fn bit_identical_reruns() {
        let t = BigReal::from_ratio(5, 4, 400);
        let a = lower_incomplete_gamma_ladder(90, &t).unwrap();
        let b = lower_incomplete_gamma_ladder(90, &t).unwrap();
        assert!(a == b);
    }
}
