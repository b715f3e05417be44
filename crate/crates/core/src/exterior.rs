//! Dirichlet Landau Hamiltonian on the exterior of a disk.
//!
//! Separating `u = f(r) e^{imθ}` and putting `g = √r f` turns each angular
//! channel into `-g'' + W g = λ g` on `(R, ∞)` with
//! `W(r) = (m² - 1/4)/r² - mB + B² r²/4`. Eigenvalues are located by Prüfer
//! shooting: `θ' = cos²θ + (λ - W) sin²θ` is integrated forward from the
//! Dirichlet point and backward from a WKB-decaying start at `R_out`, and the
//! `k`-th eigenvalue is where the phase mismatch equals `kπ`.
//!
//! Everything here is `f64`. Eigenvalues are carried as `level + offset` so
//! gaps to a Landau level keep their relative accuracy; the integrator is RK4
//! with one Richardson step, and gaps below `FLOOR_REL · Λ_q` are treated as
//! unresolvable.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::MagneticField;
use crate::measures::MeasureSpec;
use crate::numerics::BigReal;
use crate::rates::{estimate_limit, rates_from_values, RateEstimate, RateSummary, Window};
use crate::toeplitz::stabilized_spectrum;

/// Gaps below `FLOOR_REL · Λ_q` are not resolved.
pub const FLOOR_REL: f64 = 1e-12;

/// Eigenvalues within this relative distance of the next level are left to
/// that level's cluster.
pub const UPPER_MARGIN: f64 = 1e-9;

/// Relative change of a gap under extending `R_out` that counts as a failed
/// truncation.
pub const TAIL_TOL: f64 = 1e-8;

/// Channels past the initial window that must come back empty before the
/// search stops.
const EMPTY_RUN: usize = 3;

const MAX_EXTRA_CHANNELS: i64 = 400;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InnerBoundary {
    /// `f(R) = 0`.
    Dirichlet(f64),
    /// Regular at the origin: the whole-plane channel.
    Regular,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingConfig {
    /// RK4 step in units of the magnetic length `1/√B`.
    pub step: f64,
    /// `∫ √(W - λ)` beyond the outer turning point before `R_out`.
    pub tail_action: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            step: 0.004,
            tail_action: 24.0,
        }
    }
}

/// One angular channel of the radial problem.
#[derive(Clone, Debug)]
pub struct RadialProblem {
    pub field: f64,
    pub m: i64,
    pub inner: InnerBoundary,
    pub config: ShootingConfig,
}

/// `λ = base + offset`, kept apart so small offsets stay exact.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Shift {
    base: f64,
    offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialEigen {
    pub m: i64,
    /// Number of interior nodes.
    pub k: usize,
    pub lambda: f64,
    /// `λ - base`, accurate relative to itself.
    pub offset: f64,
}

impl RadialProblem {
    pub fn new(field: f64, m: i64, inner: InnerBoundary) -> Result<Self> {
        if !(field.is_finite() && field > 0.0) {
            return Err(Error::InvalidArgument(format!("field must be positive, got {field}")));
        }
        if let InnerBoundary::Dirichlet(r) = inner {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
            }
        }
        Ok(RadialProblem {
            field,
            m,
            inner,
            config: ShootingConfig::default(),
        })
    }

    pub fn with_config(mut self, config: ShootingConfig) -> Self {
        self.config = config;
        self
    }

    /// Landau level `Λ_q = (2q+1)B`.
    pub fn level(&self, q: u32) -> f64 {
        (2 * q + 1) as f64 * self.field
    }

    fn potential(&self, r: f64) -> f64 {
        let m = self.m as f64;
        let b = self.field;
        (m * m - 0.25) / (r * r) - m * b + 0.25 * b * b * r * r
    }

    /// Matching point: the potential minimum, or the wall if it lies outside.
    fn match_point(&self) -> f64 {
        let m2 = (self.m as f64).powi(2) - 0.25;
        let rmin = if m2 > 0.0 {
            (4.0 * m2).powf(0.25) / self.field.sqrt()
        } else {
            0.0
        };
        match self.inner {
            InnerBoundary::Dirichlet(r) => r.max(rmin),
            InnerBoundary::Regular => rmin.max(self.series_start()),
        }
    }

    /// Outer turning point of `W = λ`.
    fn turning_point(&self, lambda: f64) -> f64 {
        let m = self.m as f64;
        let b = self.field;
        let p = m * b + lambda;
        let disc = (p * p - b * b * (m * m - 0.25)).max(0.0);
        ((p + disc.sqrt()) * 2.0 / (b * b)).max(0.0).sqrt()
    }

    /// `R_out` leaving `tail_action` of decay past the turning point of
    /// `lambda`; beyond it `√(W - λ) ≥ B r / 2` to leading order.
    pub fn outer_radius(&self, lambda: f64) -> f64 {
        let rt = self.turning_point(lambda).max(self.match_point());
        let b = self.field;
        (rt * rt + 4.0 * self.config.tail_action / b).sqrt() + 2.0 / b.sqrt()
    }

    fn series_start(&self) -> f64 {
        0.5 / self.field.sqrt()
    }

    /// Prüfer angle of the regular solution at `r`, from its power series
    /// `f = r^{|m|} Σ a_j r^{2j}`.
    fn regular_angle(&self, r: f64, s: Shift) -> f64 {
        let m = self.m as f64;
        let am = m.abs();
        let b = self.field;
        let lam = s.base + s.offset;
        let (mut a_prev2, mut a_prev) = (0.0, 1.0);
        let (mut f, mut df) = (1.0, am / r);
        let r2 = r * r;
        let mut pow = 1.0;
        for j in 1..200 {
            let jf = j as f64;
            let a = ((-m * b - lam) * a_prev + 0.25 * b * b * a_prev2) / (4.0 * jf * (am + jf));
            pow *= r2;
            let term = a * pow;
            f += term;
            df += term * (am + 2.0 * jf) / r;
            a_prev2 = a_prev;
            a_prev = a;
            if j > 8 && term.abs() < 1e-18 * f.abs() {
                break;
            }
        }
        // g = √r f, g' = √r (f/(2r) + f'), common factors dropped.
        let g = f;
        let dg = f / (2.0 * r) + df;
        g.atan2(dg)
    }

    fn rhs(&self, r: f64, theta: f64, s: Shift) -> f64 {
        let (sn, cs) = theta.sin_cos();
        let lw = s.offset + (s.base - self.potential(r));
        cs * cs + lw * sn * sn
    }

    fn integrate(&self, mut theta: f64, r0: f64, r1: f64, steps: usize, s: Shift) -> f64 {
        let h = (r1 - r0) / steps as f64;
        for i in 0..steps {
            let r = r0 + h * i as f64;
            let k1 = self.rhs(r, theta, s);
            let k2 = self.rhs(r + 0.5 * h, theta + 0.5 * h * k1, s);
            let k3 = self.rhs(r + 0.5 * h, theta + 0.5 * h * k2, s);
            let k4 = self.rhs(r + h, theta + h * k3, s);
            theta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        theta
    }

    fn mismatch_with_steps(&self, s: Shift, r_out: f64, refine: usize) -> f64 {
        let h = self.config.step / self.field.sqrt();
        let rc = self.match_point();
        let (r_in, theta_in) = match self.inner {
            InnerBoundary::Dirichlet(r) => (r, 0.0),
            InnerBoundary::Regular => {
                let r0 = self.series_start();
                (r0, self.regular_angle(r0, s))
            }
        };
        let lw_out = s.offset + (s.base - self.potential(r_out));
        let kappa = (-lw_out).max(0.0).sqrt();
        let theta_out = 1f64.atan2(-kappa);
        let n_left = (((rc - r_in) / h).ceil() as usize).max(1) * refine;
        let n_right = (((r_out - rc) / h).ceil() as usize).max(1) * refine;
        let left = if rc > r_in {
            self.integrate(theta_in, r_in, rc, n_left, s)
        } else {
            theta_in
        };
        let right = self.integrate(theta_out, r_out, rc, n_right, s);
        left - right
    }

    /// Phase mismatch at `λ = base + offset`, Richardson-extrapolated over
    /// one step halving.
    fn mismatch(&self, s: Shift, r_out: f64) -> f64 {
        let coarse = self.mismatch_with_steps(s, r_out, 1);
        let fine = self.mismatch_with_steps(s, r_out, 2);
        (16.0 * fine - coarse) / 15.0
    }

    /// Phase mismatch at `lambda`, in units of `π`; its floor counts the
    /// eigenvalues below `lambda`.
    pub fn counting_function(&self, lambda: f64) -> f64 {
        let s = Shift {
            base: lambda,
            offset: 0.0,
        };
        self.mismatch(s, self.outer_radius(lambda)) / PI
    }

    /// Solves `Φ(base + x) = kπ` for `x ∈ [lo, hi]`, given a bracketing pair.
    fn solve_offset(&self, base: f64, k: usize, lo: f64, hi: f64, r_out: f64) -> f64 {
        let target = k as f64 * PI;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = if a > 0.0 && b > 4.0 * a {
                (a * b).sqrt()
            } else {
                0.5 * (a + b)
            };
            if mid <= a || mid >= b {
                break;
            }
            let phi = self.mismatch(Shift { base, offset: mid }, r_out);
            if phi < target {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= 4.0 * f64::EPSILON * b.abs().max(a.abs()) {
                break;
            }
        }
        0.5 * (a + b)
    }

    /// Relative change of the root when `R_out` is pushed out.
    fn tail_sensitivity(&self, base: f64, x: f64, r_out: f64) -> f64 {
        let dx = if x > 0.0 { 1e-3 * x } else { 1e-6 * base.abs().max(1.0) };
        let s = Shift { base, offset: x };
        let s2 = Shift { base, offset: x + dx };
        let phi = self.mismatch(s, r_out);
        let slope = (self.mismatch(s2, r_out) - phi) / dx;
        let extended = (r_out * r_out + 16.0 / self.field).sqrt();
        let phi_ext = self.mismatch(s, extended);
        let shift = (phi_ext - phi).abs() / slope.abs().max(f64::MIN_POSITIVE);
        // Changing R_out also changes the grid; discount discretization noise
        // at a small fraction of the resolution floor.
        let noise = 0.05 * FLOOR_REL * (base + x).abs();
        (shift - noise).max(0.0) / x.abs().max(f64::MIN_POSITIVE)
    }

    /// All eigenvalues in `(base + lo, base + hi)`, by node count.
    pub fn eigenvalues_between(&self, base: f64, lo: f64, hi: f64) -> Result<Vec<RadialEigen>> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty window ({lo}, {hi})")));
        }
        let mut r_out = self.outer_radius(base + hi);
        for attempt in 0..2 {
            let phi_lo = self.mismatch(Shift { base, offset: lo }, r_out);
            let phi_hi = self.mismatch(Shift { base, offset: hi }, r_out);
            let k_first = (phi_lo / PI).floor() as i64 + 1;
            let k_last = (phi_hi / PI).floor() as i64;
            let mut out = Vec::new();
            let mut worst: f64 = 0.0;
            for k in k_first.max(0)..=k_last {
                let k = k as usize;
                let x = self.solve_offset(base, k, lo, hi, r_out);
                worst = worst.max(self.tail_sensitivity(base, x, r_out));
                out.push(RadialEigen {
                    m: self.m,
                    k,
                    lambda: base + x,
                    offset: x,
                });
            }
            if worst <= TAIL_TOL {
                return Ok(out);
            }
            if attempt == 1 {
                return Err(Error::Truncation(format!(
                    "channel m = {}: eigenvalues move by {worst:.2e} (relative) when R_out = {r_out:.3} is extended",
                    self.m
                )));
            }
            r_out = (r_out * r_out + 8.0 * self.config.tail_action / self.field).sqrt();
        }
        unreachable!("loop returns on its second pass")
    }

    /// The eigenvalue with `k` interior nodes.
    pub fn eigenvalue(&self, k: usize) -> Result<RadialEigen> {
        let b = self.field;
        // The magnetic Laplacian is bounded below by B on any domain.
        let lo = 0.5 * b;
        let mut hi = b * (2.0 * k as f64 + self.m.unsigned_abs() as f64 + 3.0);
        let target = (k + 1) as f64;
        for _ in 0..60 {
            if self.counting_function(hi) > target {
                break;
            }
            hi *= 2.0;
        }
        let found = self.eigenvalues_between(0.0, lo, hi)?;
        found
            .into_iter()
            .find(|e| e.k == k)
            .ok_or_else(|| Error::Bracket {
                lo,
                hi,
                trace: format!("no eigenvalue with {k} nodes in channel m = {}", self.m),
            })
    }
}

/// Smallest eigenvalue of the channel strictly above `Λ_q`.
pub fn radial_eigenvalue(p: &RadialProblem, q: u32) -> Result<RadialEigen> {
    let level = p.level(q);
    let floor = FLOOR_REL * level;
    let step = 2.0 * p.field;
    let mut trace = Vec::new();
    for j in 1..=32 {
        let hi = step * j as f64;
        let found = p.eigenvalues_between(level, floor, hi)?;
        trace.push(format!("({level}, {}]: {}", level + hi, found.len()));
        if let Some(first) = found.into_iter().next() {
            return Ok(first);
        }
    }
    Err(Error::Bracket {
        lo: level,
        hi: level + 32.0 * step,
        trace: trace.join("; "),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterRow {
    pub q: u32,
    /// Position in the cluster, from 1, by decreasing gap.
    pub n: usize,
    pub m: i64,
    pub lambda: f64,
    /// `λ_n - Λ_q`.
    pub gap: f64,
    /// `(n! gap_n)^{1/n}`.
    pub r_n: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterTable {
    pub field: f64,
    pub radius: f64,
    pub q: u32,
    pub level: f64,
    pub rows: Vec<ClusterRow>,
    /// Smallest gap the solver resolves.
    pub floor: f64,
    /// Set when fewer than the requested rows lie above the floor.
    pub floor_reached: bool,
    /// Inclusive range of angular channels searched.
    pub channels: (i64, i64),
}

impl ClusterTable {
    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gap).collect()
    }

    /// `Λ_q^{-1} - λ_n^{-1}`, the sequence compared with Toeplitz spectra.
    pub fn inverse_gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gap / (self.level * r.lambda)).collect()
    }

    /// Rates of the gaps with the automatic fit window.
    pub fn rate_estimate(&self) -> Result<RateEstimate> {
        rate_of(&self.gaps())
    }
}

fn rate_of(values: &[f64]) -> Result<RateEstimate> {
    let big: Vec<BigReal> = values.iter().map(|&v| BigReal::from_f64(v, 64)).collect();
    let rate = rates_from_values(&big, 1)?;
    estimate_limit(&rate, Window::Auto)
}

/// The `q`-th cluster of the exterior problem: the `n_max` eigenvalues in
/// `(Λ_q, Λ_{q+1})` with the largest gaps to `Λ_q`.
///
/// Channels `-q ..= n_max + q + 4` are always searched; past that the search
/// continues until `EMPTY_RUN` consecutive channels add nothing to the table.
pub fn cluster_table(field: f64, radius: f64, q: u32, n_max: usize) -> Result<ClusterTable> {
    cluster_table_with(field, radius, q, n_max, ShootingConfig::default())
}

pub fn cluster_table_with(
    field: f64,
    radius: f64,
    q: u32,
    n_max: usize,
    config: ShootingConfig,
) -> Result<ClusterTable> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let level = (2 * q + 1) as f64 * field;
    let floor = FLOOR_REL * level;
    let hi = 2.0 * field * (1.0 - UPPER_MARGIN);
    let m_lo = -(q as i64);
    let m_init = n_max as i64 + q as i64 + 4;
    let mut found: Vec<RadialEigen> = Vec::new();
    let mut m = m_lo;
    let mut empty_run = 0;
    let mut floor_hit = false;
    loop {
        let problem = RadialProblem::new(field, m, InnerBoundary::Dirichlet(radius))?.with_config(config);
        let eig = problem.eigenvalues_between(level, floor, hi)?;
        if m > m_init {
            let threshold = nth_largest_gap(&found, n_max);
            let useful = eig.iter().any(|e| threshold.map_or(true, |t| e.offset > t));
            empty_run = if useful { 0 } else { empty_run + 1 };
        }
        if eig.is_empty() && m >= 0 {
            floor_hit = true;
        }
        found.extend(eig);
        if m >= m_init && empty_run >= EMPTY_RUN {
            break;
        }
        if m >= m_init + MAX_EXTRA_CHANNELS {
            break;
        }
        m += 1;
    }
    found.sort_by(|a, b| b.offset.total_cmp(&a.offset));
    found.truncate(n_max);
    let floor_reached = found.len() < n_max && floor_hit;
    let gaps: Vec<f64> = found.iter().map(|e| e.offset).collect();
    let rates = if gaps.is_empty() {
        Vec::new()
    } else {
        rates_from_values(
            &gaps.iter().map(|&g| BigReal::from_f64(g, 64)).collect::<Vec<_>>(),
            1,
        )?
        .points
        .iter()
        .map(|p| p.r.to_f64())
        .collect()
    };
    let rows = found
        .iter()
        .zip(rates)
        .enumerate()
        .map(|(i, (e, r_n))| ClusterRow {
            q,
            n: i + 1,
            m: e.m,
            lambda: e.lambda,
            gap: e.offset,
            r_n,
        })
        .collect();
    Ok(ClusterTable {
        field,
        radius,
        q,
        level,
        rows,
        floor,
        floor_reached,
        channels: (m_lo, m),
    })
}

fn nth_largest_gap(found: &[RadialEigen], n: usize) -> Option<f64> {
    if found.len() < n {
        return None;
    }
    let mut gaps: Vec<f64> = found.iter().map(|e| e.offset).collect();
    gaps.sort_by(|a, b| b.total_cmp(a));
    Some(gaps[n - 1])
}

#[derive(Clone, Debug, Serialize)]
pub struct ToeplitzComparison {
    pub exterior: RateSummary,
    pub toeplitz: RateSummary,
    /// `|exterior - toeplitz| / toeplitz` of the limit estimates.
    pub relative_difference: f64,
}

/// Compares the rates of `Λ_q^{-1} - λ_n^{-1}` with those of the level-`q`
/// Toeplitz spectrum of the obstacle disk, both enumerated from 1.
pub fn toeplitz_comparison(table: &ClusterTable, prec: u32) -> Result<ToeplitzComparison> {
    let count = table.rows.len();
    let field = MagneticField::from_f64(table.field, prec)?;
    let disk = MeasureSpec::disk(0.0, 0.0, table.radius, prec)?;
    let seq = stabilized_spectrum(table.q, &field, &disk, count)?;
    if seq.stabilized_count < count {
        return Err(Error::Truncation(format!(
            "Toeplitz spectrum stabilized {} of {count} values",
            seq.stabilized_count
        )));
    }
    let toeplitz = estimate_limit(&rates_from_values(&seq.values[..count], 1)?, Window::Auto)?;
    let exterior = rate_of(&table.inverse_gaps())?;
    let (e, t) = match (exterior.summary(), toeplitz.summary()) {
        (Some(e), Some(t)) => (e, t),
        _ => return Err(Error::Precondition("rate fit produced no estimate".into())),
    };
    let relative_difference = (e.limit_est - t.limit_est).abs() / t.limit_est;
    Ok(ToeplitzComparison {
        exterior: e,
        toeplitz: t,
        relative_difference,
    })
}
