//! Rate functionals `r_n = (n! s_n)^{1/n}` and their extrapolated limits.
//!
//! The finite-`n` protocol: `log r_n` is fitted on a window by least squares
//! against `1, 1/n, ln n / n`. The `ln n / n` column absorbs the power-law
//! prefactors that closed-form spectra carry (for the disk `n! s_n` behaves
//! like `t^{n+1} e^{-t} / (n+1)`), which a bare `1/n` fit turns into a bias of
//! a few percent. The spread between the two fits is reported as a
//! diagnostic, and the tail-third max/min stand in for limsup/liminf.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{lgamma, BigReal};
use crate::toeplitz::EigSequence;

/// Minimum number of points in a fit window.
pub const MIN_WINDOW: usize = 8;

/// RMS residual above which a fit is flagged.
pub const RESIDUAL_FLAG: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct RatePoint {
    pub n: usize,
    pub s: BigReal,
    pub log10_s: f64,
    pub r: BigReal,
    pub log_r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitDiagnostics {
    /// Fitted `log` of the limit.
    pub intercept: f64,
    /// Coefficient of `1/n`.
    pub slope: f64,
    /// Coefficient of `ln n / n`.
    pub log_slope: f64,
    /// RMS residual of the fit, in `log r`.
    pub residual: f64,
    /// `|intercept - intercept of the plain 1/n fit|`.
    pub spread: f64,
    pub flagged: bool,
}

impl FitDiagnostics {
    /// Uncertainty of the intercept used for self-consistency checks.
    pub fn tolerance(&self) -> f64 {
        self.residual + self.spread
    }
}

#[derive(Clone, Debug)]
pub struct RateEstimate {
    pub points: Vec<RatePoint>,
    /// Inclusive range of `n` used by the fit.
    pub window: Option<(usize, usize)>,
    pub limit_est: Option<f64>,
    pub limsup_est: Option<f64>,
    pub liminf_est: Option<f64>,
    pub fit: Option<FitDiagnostics>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    /// `n` from `max(8, count / 2)` to the last stable index.
    Auto,
    /// Inclusive `n` range.
    Range(usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSummary {
    pub limit_est: f64,
    pub limsup_est: f64,
    pub liminf_est: f64,
    pub window: (usize, usize),
    pub residual: f64,
    pub fit: FitDiagnostics,
    pub points: usize,
}

impl RateEstimate {
    pub fn point(&self, n: usize) -> Option<&RatePoint> {
        self.points.iter().find(|p| p.n == n)
    }

    pub fn summary(&self) -> Option<RateSummary> {
        let fit = self.fit?;
        Some(RateSummary {
            limit_est: self.limit_est?,
            limsup_est: self.limsup_est?,
            liminf_est: self.liminf_est?,
            window: self.window?,
            residual: fit.residual,
            fit,
            points: self.points.len(),
        })
    }
}

/// `r_n` for `values[i] = s_{i + offset}`; indices `n < 1` are skipped since
/// the functional needs `1/n`.
pub fn rates_from_values(values: &[BigReal], offset: i64) -> Result<RateEstimate> {
    let mut points = Vec::with_capacity(values.len());
    for (i, s) in values.iter().enumerate() {
        let n = i as i64 + offset;
        if n < 1 {
            continue;
        }
        if !s.is_positive() {
            return Err(Error::NonPositive {
                index: n as usize,
                value: s.to_decimal(20),
            });
        }
        let prec = s.prec();
        let n_big = BigReal::from_i64(n + 1, prec);
        let log_r = (&lgamma(&n_big)? + &s.ln()).div_i64(n);
        points.push(RatePoint {
            n: n as usize,
            s: s.clone(),
            log10_s: s.log10().to_f64(),
            log_r: log_r.to_f64(),
            r: log_r.exp(),
        });
    }
    Ok(RateEstimate {
        points,
        window: None,
        limit_est: None,
        limsup_est: None,
        liminf_est: None,
        fit: None,
    })
}

/// Rate sequence over the stable prefix of `s`.
pub fn rate_sequence(s: &EigSequence) -> Result<RateEstimate> {
    let stable = &s.values[..s.stabilized_count.min(s.values.len())];
    rates_from_values(stable, s.index_offset as i64)
}

fn resolve_window(rate: &RateEstimate, window: Window) -> Result<(usize, usize)> {
    let (first, last) = match (rate.points.first(), rate.points.last()) {
        (Some(a), Some(b)) => (a.n, b.n),
        _ => return Err(Error::Precondition("no rate points to fit".into())),
    };
    let (lo, hi) = match window {
        Window::Range(lo, hi) => (lo, hi),
        Window::Auto => {
            let count = last + 1;
            let lo = MIN_WINDOW.max(count / 2).max(first);
            if last + 1 < lo + MIN_WINDOW {
                (last.saturating_sub(MIN_WINDOW - 1).max(first), last)
            } else {
                (lo, last)
            }
        }
    };
    let len = rate
        .points
        .iter()
        .filter(|p| p.n >= lo && p.n <= hi)
        .count();
    if len < MIN_WINDOW {
        return Err(Error::Precondition(format!(
            "fit window [{lo}, {hi}] holds {len} points, need at least {MIN_WINDOW}"
        )));
    }
    Ok((lo, hi))
}

/// Least-squares coefficients of `y` against the given columns.
fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let m = y.len();
    let k = columns.len();
    let a = DMatrix::from_fn(m, k, |i, j| columns[j][i]);
    let b = DVector::from_column_slice(y);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .expect("svd with both factors");
    let resid = &a * &coef - &b;
    let rms = (resid.norm_squared() / m as f64).sqrt();
    (coef.iter().copied().collect(), rms)
}

/// Fits `log r_n` on the window and fills in the limit estimates.
pub fn estimate_limit(rate: &RateEstimate, window: Window) -> Result<RateEstimate> {
    let (lo, hi) = resolve_window(rate, window)?;
    let pts: Vec<&RatePoint> = rate.points.iter().filter(|p| p.n >= lo && p.n <= hi).collect();
    let inv: Vec<f64> = pts.iter().map(|p| 1.0 / p.n as f64).collect();
    let logn: Vec<f64> = pts.iter().map(|p| (p.n as f64).ln() / p.n as f64).collect();
    let ones = vec![1.0; pts.len()];
    let y: Vec<f64> = pts.iter().map(|p| p.log_r).collect();
    let (full, residual) = least_squares(&[ones.clone(), inv.clone(), logn], &y);
    let (plain, _) = least_squares(&[ones, inv], &y);
    let fit = FitDiagnostics {
        intercept: full[0],
        slope: full[1],
        log_slope: full[2],
        residual,
        spread: (full[0] - plain[0]).abs(),
        flagged: residual > RESIDUAL_FLAG,
    };
    let tail_start = pts.len() - (pts.len() / 3).max(1);
    let tail: Vec<f64> = pts[tail_start..].iter().map(|p| p.log_r.exp()).collect();
    let mut out = rate.clone();
    out.window = Some((lo, hi));
    out.limit_est = Some(full[0].exp());
    out.limsup_est = Some(tail.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    out.liminf_est = Some(tail.iter().copied().fold(f64::INFINITY, f64::min));
    out.fit = Some(fit);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftReport {
    pub shift: i64,
    pub base_limit: f64,
    pub shifted_limit: f64,
    /// `|log base - log shifted|`.
    pub difference: f64,
    pub tolerance: f64,
    pub agrees: bool,
}

/// Compares the limit of `s` with that of the re-enumerated sequence
/// `s'_n = s_{n+ℓ}` on automatic windows.
pub fn shift_report(s: &EigSequence, shift: i64) -> Result<ShiftReport> {
    let count = s.stabilized_count as i64;
    if shift.abs() * 4 >= count {
        return Err(Error::Precondition(format!(
            "shift {shift} needs |shift| < stabilized_count / 4 = {}",
            count as f64 / 4.0
        )));
    }
    let stable = &s.values[..s.stabilized_count];
    let base = estimate_limit(&rate_sequence(s)?, Window::Auto)?;
    let shifted = estimate_limit(
        &rates_from_values(stable, s.index_offset as i64 - shift)?,
        Window::Auto,
    )?;
    let (fb, fs) = (base.fit.expect("fitted"), shifted.fit.expect("fitted"));
    let difference = (fb.intercept - fs.intercept).abs();
    // floor at double rounding of the fit itself
    let tolerance = fb.tolerance().max(fs.tolerance()).max(1e-12);
    Ok(ShiftReport {
        shift,
        base_limit: fb.intercept.exp(),
        shifted_limit: fs.intercept.exp(),
        difference,
        tolerance,
        agrees: difference <= tolerance,
    })
}

/// True iff the shifted and unshifted limits agree within the fits' own
/// residual-plus-spread.
pub fn shift_check(s: &EigSequence, shift: i64) -> Result<bool> {
    shift_report(s, shift).map(|r| r.agrees)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREC: u32 = 256;

    /// `s_n = c t^n / n!` for `n = offset..offset+len`.
    fn model(c: f64, t: f64, len: usize, offset: usize) -> EigSequence {
        let cc = BigReal::from_f64(c, PREC);
        let tt = BigReal::from_f64(t, PREC);
        let values = (offset..offset + len)
            .map(|n| &(&cc * &tt.powi(n as u32)) / &BigReal::factorial(n as u32, PREC))
            .collect();
        EigSequence::from_values(values, offset)
    }

    #[test]
    fn pure_factorial_model_is_constant() {
        let r = rate_sequence(&model(1.0, 0.25, 40, 1)).unwrap();
        for p in &r.points {
            assert!((p.r.to_f64() - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_prefactor_gives_log_slope() {
        let r = rate_sequence(&model(7.0, 1.0, 40, 1)).unwrap();
        for p in &r.points {
            assert!((p.log_r - 7f64.ln() / p.n as f64).abs() < 1e-14);
        }
        let est = estimate_limit(&r, Window::Auto).unwrap();
        let fit = est.fit.unwrap();
        assert!((fit.slope - 7f64.ln()).abs() < 1e-9);
        assert!(fit.log_slope.abs() < 1e-9);
        assert!((est.limit_est.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_model_limit_to_ten_digits() {
        let est = estimate_limit(&rate_sequence(&model(3.5, 0.4, 60, 1)).unwrap(), Window::Auto).unwrap();
        assert!((est.limit_est.unwrap() / 0.4 - 1.0).abs() < 1e-10);
        assert!(!est.fit.unwrap().flagged);
    }

    #[test]
    fn offset_zero_skips_first_value() {
        let r = rate_sequence(&model(1.0, 0.5, 10, 0)).unwrap();
        assert_eq!(r.points.first().unwrap().n, 1);
        assert_eq!(r.points.len(), 9);
    }

    #[test]
    fn rejects_non_positive_and_short_windows() {
        let mut s = model(1.0, 0.5, 20, 1);
        s.values[4] = BigReal::zero(PREC);
        assert!(matches!(rate_sequence(&s), Err(Error::NonPositive { index: 5, .. })));
        let r = rate_sequence(&model(1.0, 0.5, 20, 1)).unwrap();
        assert!(estimate_limit(&r, Window::Range(3, 6)).is_err());
    }

    #[test]
    fn rescaling_is_absorbed() {
        let a = model(1.0, 0.3, 50, 1);
        let mut b = a.clone();
        let big = BigReal::from_i64(10, PREC).powi(300);
        b.values = b.values.iter().map(|v| v * &big).collect();
        let la = estimate_limit(&rate_sequence(&a).unwrap(), Window::Auto).unwrap();
        let lb = estimate_limit(&rate_sequence(&b).unwrap(), Window::Auto).unwrap();
        assert!((la.limit_est.unwrap() - lb.limit_est.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn shifts_of_factorial_model() {
        let s = model(1.0, 0.6, 60, 1);
        for l in [-3, -1, 1, 3] {
            let rep = shift_report(&s, l).unwrap();
            assert!(rep.agrees, "{rep:?}");
            assert!((rep.shifted_limit / 0.6 - 1.0).abs() < 1e-2);
        }
        assert!(shift_check(&s, 20).is_err());
    }

    #[test]
    fn short_sequences_rejected_for_shifts() {
        let s = model(1.0, 0.6, 4, 1);
        assert!(shift_check(&s, 0).is_err());
    }

    #[test]
    fn tail_surrogates_bracket_the_tail() {
        let est = estimate_limit(&rate_sequence(&model(5.0, 1.0, 48, 1)).unwrap(), Window::Auto).unwrap();
        let (sup, inf) = (est.limsup_est.unwrap(), est.liminf_est.unwrap());
        assert!(sup >= inf);
        // 5^{1/n} decreases, so the tail max is at its first point
        let (lo, hi) = est.window.unwrap();
        assert_eq!((lo, hi), (24, 48));
        assert!(sup > 1.0 && inf > 1.0);
    }
}
