//! The acceptance suite: nine end-to-end checks against closed forms,
//! classical capacities and the abstract operator inequalities.
//!
//! Each criterion returns a [`CriterionResult`]; computation errors become a
//! failed result carrying the error text. Spectra shared between criteria are
//! cached in a [`Session`].

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::capacity::{fekete_diameter, registry_capacity, FeketeConfig};
use crate::error::{Error, Result};
use crate::exterior::{cluster_table, toeplitz_comparison};
use crate::fock::{exact_inner_product, landau_basis, GaussPoly, LandauIndex, MagneticField};
use crate::measures::MeasureSpec;
use crate::numerics::{lower_incomplete_gamma_reg, BigComplex, BigReal};
use crate::perturbation::{check_cluster_accumulation, check_form_domination, ClusterModel, FormPair};
use crate::rates::{estimate_limit, rate_sequence, shift_report, RateEstimate, Window};
use crate::toeplitz::{assemble, eigen_desc, stabilized_spectrum, EigSequence};

pub const CRITERIA: [u32; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Basis integrity.
    Basis,
    /// Disk and exterior-disk checks: 3, 7, 9.
    Theorem2,
    /// Curves, q-independence and capacities: 2, 4, 5, 6.
    Theorem3,
    /// Operator inequalities: 8.
    Abstract,
    All,
    Single(u32),
}

impl Suite {
    pub fn criteria(&self) -> Vec<u32> {
        match self {
            Suite::Basis => vec![1],
            Suite::Theorem2 => vec![3, 7, 9],
            Suite::Theorem3 => vec![2, 4, 5, 6],
            Suite::Abstract => vec![8],
            Suite::All => CRITERIA.to_vec(),
            Suite::Single(id) => vec![*id],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basis" => Ok(Suite::Basis),
            "theorem2" => Ok(Suite::Theorem2),
            "theorem3" => Ok(Suite::Theorem3),
            "abstract" => Ok(Suite::Abstract),
            "all" => Ok(Suite::All),
            other => match other.parse::<u32>() {
                Ok(id) if CRITERIA.contains(&id) => Ok(Suite::Single(id)),
                _ => Err(Error::Parse(format!(
                    "unknown suite `{other}`; expected basis, theorem2, theorem3, abstract, all or 1-9"
                ))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyOptions {
    /// Random instances per abstract check.
    pub seeds: u64,
    /// Working precision of the curve spectra.
    pub curve_prec: u32,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seeds: 100,
            curve_prec: 1024,
        }
    }
}

/// Options plus spectra already computed in this run.
pub struct Session {
    pub options: VerifyOptions,
    cache: HashMap<(String, u32, usize, u32), EigSequence>,
}

impl Session {
    pub fn new(options: VerifyOptions) -> Self {
        Session {
            options,
            cache: HashMap::new(),
        }
    }

    /// `stabilized_spectrum` for `B = 2`, memoized on the shape string.
    fn spectrum(&mut self, shape: &str, q: u32, n: usize, prec: u32) -> Result<EigSequence> {
        let key = (shape.to_string(), q, n, prec);
        if let Some(s) = self.cache.get(&key) {
            return Ok(s.clone());
        }
        let field = MagneticField::from_f64(2.0, prec)?;
        let mu = MeasureSpec::parse(shape, prec)?;
        let s = stabilized_spectrum(q, &field, &mu, n)?;
        self.cache.insert(key, s.clone());
        Ok(s)
    }

    /// Limit estimate from the first `n` stable values.
    fn limit(&mut self, shape: &str, q: u32, n: usize, prec: u32) -> Result<f64> {
        let s = self.spectrum(shape, q, n, prec)?;
        if s.stabilized_count < n {
            return Err(Error::Truncation(format!(
                "{shape} q={q}: {} of {n} eigenvalues stabilized",
                s.stabilized_count
            )));
        }
        limit_of(&capped(s, n))
    }
}

fn capped(mut s: EigSequence, n: usize) -> EigSequence {
    s.stabilized_count = s.stabilized_count.min(n);
    s
}

fn limit_of(s: &EigSequence) -> Result<f64> {
    fitted(s)?
        .limit_est
        .ok_or_else(|| Error::Precondition("fit produced no limit".into()))
}

fn fitted(s: &EigSequence) -> Result<RateEstimate> {
    estimate_limit(&rate_sequence(s)?, Window::Auto)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn run_suite(suite: Suite, options: VerifyOptions) -> Vec<CriterionResult> {
    let mut session = Session::new(options);
    suite
        .criteria()
        .into_iter()
        .map(|id| run_criterion(id, &mut session))
        .collect()
}

pub fn run_criterion(id: u32, session: &mut Session) -> CriterionResult {
    let start = Instant::now();
    let (name, outcome): (&'static str, Result<(bool, String)>) = match id {
        1 => ("basis integrity", basis_integrity()),
        2 => ("circle closed form", circle_closed_form()),
        3 => ("disk closed form", disk_closed_form(session)),
        4 => ("smooth-curve law", smooth_curve_law(session)),
        5 => ("q-independence", q_independence(session)),
        6 => ("capacity engine", capacity_engine()),
        7 => ("exterior disk", exterior_disk()),
        8 => ("abstract suite", abstract_suite(session.options.seeds)),
        9 => ("monotonicity", monotonicity(session)),
        _ => ("unknown", Err(Error::InvalidArgument(format!("no criterion {id}")))),
    };
    let (passed, detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed().as_secs_f64(),
    }
}

fn max_coeff(p: &GaussPoly) -> f64 {
    p.coeffs().values().map(|c| c.abs().to_f64()).fold(0.0, f64::max)
}

fn close_poly(a: &GaussPoly, b: &GaussPoly, tol: f64) -> bool {
    a.approx_eq(b, tol * (1.0 + max_coeff(a).max(max_coeff(b))))
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisReport {
    pub prec: u32,
    pub q_max: u32,
    pub k_max: u32,
    pub gram_max_error: f64,
    pub tolerance: f64,
    pub ladder_ok: bool,
    pub kernel_ok: bool,
    pub hamiltonian_ok: bool,
    pub passes: bool,
}

/// Gram identity, ladder relations `Q* e_{q,k} = √(2B(q+1)) e_{q+1,k}`,
/// `Q e_{q,k} = √(2Bq) e_{q-1,k}` (so `Q` kills the lowest level) and
/// `X_0 e_{q,k} = Λ_q e_{q,k}`.
pub fn basis_check(field: &MagneticField, q_max: u32, k_max: u32) -> Result<BasisReport> {
    let prec = field.prec();
    let tol = 2f64.powi(-(prec as i32) / 2);
    let mut basis = Vec::new();
    for q in 0..=q_max + 1 {
        for k in 0..=k_max {
            basis.push(((q, k), landau_basis(LandauIndex::new(q, k), field)));
        }
    }
    let get = |q: u32, k: u32| &basis[(q * (k_max + 1) + k) as usize].1;
    let mut gram_max_error: f64 = 0.0;
    for (i, (ia, f)) in basis.iter().enumerate() {
        if ia.0 > q_max {
            continue;
        }
        for (ib, g) in basis.iter().skip(i) {
            if ib.0 > q_max {
                continue;
            }
            let ip = exact_inner_product(f, g)?;
            let want = if ia == ib { BigComplex::one(prec) } else { BigComplex::zero(prec) };
            gram_max_error = gram_max_error.max((&ip - &want).abs().to_f64());
        }
    }
    let b = field.strength();
    let mut ladder_ok = true;
    let mut kernel_ok = true;
    let mut hamiltonian_ok = true;
    for q in 0..=q_max {
        let up = BigReal::from_i64(2 * (q as i64 + 1), prec);
        let up = (&up * b).sqrt();
        let down = (&BigReal::from_i64(2 * q as i64, prec) * b).sqrt();
        let level = field.landau_level(q);
        for k in 0..=k_max {
            let e = get(q, k);
            let raised = e.apply_creation();
            ladder_ok &= close_poly(&raised, &get(q + 1, k).scale_real(&up), tol);
            let lowered = e.apply_annihilation();
            if q == 0 {
                kernel_ok &= lowered.is_zero();
            } else {
                ladder_ok &= close_poly(&lowered, &get(q - 1, k).scale_real(&down), tol);
            }
            hamiltonian_ok &= close_poly(&e.apply_hamiltonian(), &e.scale_real(&level), tol);
        }
    }
    Ok(BasisReport {
        prec,
        q_max,
        k_max,
        gram_max_error,
        tolerance: tol,
        ladder_ok,
        kernel_ok,
        hamiltonian_ok,
        passes: gram_max_error <= tol && ladder_ok && kernel_ok && hamiltonian_ok,
    })
}

fn basis_integrity() -> Result<(bool, String)> {
    let field = MagneticField::from_f64(2.0, 512)?;
    let r = basis_check(&field, 4, 6)?;
    Ok((
        r.passes,
        format!(
            "gram error {:.2e} (tol {:.2e}), ladder {}, kernel {}, hamiltonian {}",
            r.gram_max_error, r.tolerance, r.ladder_ok, r.kernel_ok, r.hamiltonian_ok
        ),
    ))
}

fn circle_closed_form() -> Result<(bool, String)> {
    let prec = 512;
    let n = 60;
    let field = MagneticField::from_f64(2.0, prec)?;
    let mu = MeasureSpec::circle(0.0, 0.0, 1.0, prec)?;
    let m = assemble(0, n, &field, &mu)?;
    let diagonal = m.is_diagonal();
    let spec = eigen_desc(&m)?;
    let want = BigReal::from_i64(-1, prec).exp().mul_i64(2);
    let mut worst: f64 = 0.0;
    for (k, s) in spec.values.iter().enumerate() {
        let scaled = s * &BigReal::factorial(k as u32, prec);
        worst = worst.max(((&scaled - &want).abs() / &want).to_f64());
    }
    let limit = limit_of(&EigSequence::from_values(spec.values, 0))?;
    let passed = diagonal && worst <= 1e-20 && (limit - 1.0).abs() <= 1e-6;
    Ok((
        passed,
        format!("diagonal {diagonal}, max rel err of n!s_n vs 2/e {worst:.2e}, limit {limit:.9}"),
    ))
}

fn disk_closed_form(session: &mut Session) -> Result<(bool, String)> {
    let prec = 512;
    let n = 80;
    let s = session.spectrum("disk:0,0,1", 0, n, prec)?;
    let one = BigReal::one(prec);
    let mut worst: f64 = 0.0;
    for (k, v) in s.values.iter().take(s.stabilized_count.min(n)).enumerate() {
        let want = lower_incomplete_gamma_reg(k as u32 + 1, &one)?;
        worst = worst.max(((v - &want).abs() / &want).to_f64());
    }
    let limit = session.limit("disk:0,0,1", 0, n, prec)?;
    let passed = s.stabilized_count >= n && worst <= 1e-20 && rel(limit, 1.0) <= 0.02;
    Ok((
        passed,
        format!(
            "{} stable, max rel err vs P(k+1,1) {worst:.2e}, limit {limit:.6} (target 1, 2%)",
            s.stabilized_count
        ),
    ))
}

const SEGMENT: &str = "segment:-1,0,1,0";
const ELLIPSE_ARC: &str = "ellipse:0,0,1,0.5,arc";

fn smooth_curve_law(session: &mut Session) -> Result<(bool, String)> {
    let prec = session.options.curve_prec;
    let seg_cap = registry_capacity(&MeasureSpec::parse(SEGMENT, 64)?).expect("segment in registry");
    let ell_cap = registry_capacity(&MeasureSpec::parse(ELLIPSE_ARC, 64)?).expect("ellipse in registry");
    let seg_target = seg_cap * seg_cap;
    let ell_target = ell_cap * ell_cap;
    let seg = session.limit(SEGMENT, 0, 80, prec)?;
    let ell = session.limit(ELLIPSE_ARC, 0, 80, prec)?;
    let passed = rel(seg, seg_target) <= 0.10 && rel(ell, ell_target) <= 0.10;
    Ok((
        passed,
        format!(
            "segment {seg:.5} vs {seg_target:.5} ({:.2}%), ellipse arc {ell:.5} vs {ell_target:.5} ({:.2}%)",
            100.0 * rel(seg, seg_target),
            100.0 * rel(ell, ell_target)
        ),
    ))
}

fn pairwise_spread(v: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in v.iter().enumerate() {
        for b in &v[i + 1..] {
            worst = worst.max((a - b).abs() / a.abs().min(b.abs()));
        }
    }
    worst
}

fn q_independence(session: &mut Session) -> Result<(bool, String)> {
    let disk: Vec<f64> = (0..3)
        .map(|q| session.limit("disk:0,0,1", q, 80, 512))
        .collect::<Result<_>>()?;
    let prec = session.options.curve_prec;
    let seg: Vec<f64> = (0..3)
        .map(|q| session.limit(SEGMENT, q, 80, prec))
        .collect::<Result<_>>()?;
    let (sd, ss) = (pairwise_spread(&disk), pairwise_spread(&seg));
    Ok((
        sd <= 0.10 && ss <= 0.10,
        format!(
            "disk q=0,1,2 {:.5}/{:.5}/{:.5} (spread {:.2}%), segment {:.5}/{:.5}/{:.5} (spread {:.2}%)",
            disk[0],
            disk[1],
            disk[2],
            100.0 * sd,
            seg[0],
            seg[1],
            seg[2],
            100.0 * ss
        ),
    ))
}

fn capacity_engine() -> Result<(bool, String)> {
    let cfg = FeketeConfig::default();
    let mut parts = Vec::new();
    let mut passed = true;
    for (shape, tol) in [("disk:0,0,1", 0.005), (SEGMENT, 0.01), ("square:1", 0.01)] {
        let mu = MeasureSpec::parse(shape, 64)?;
        let est = fekete_diameter(&mu, &cfg)?;
        let want = registry_capacity(&mu).expect("shape in registry");
        let err = rel(est.value(), want);
        passed &= err <= tol;
        parts.push(format!("{shape} {:.5} vs {want:.5} ({:.3}%)", est.value(), 100.0 * err));
    }
    Ok((passed, format!("n={} seed={}: {}", cfg.n_points, cfg.seed, parts.join(", "))))
}

fn exterior_disk() -> Result<(bool, String)> {
    let table = cluster_table(2.0, 1.0, 0, 10)?;
    let positive = table.rows.iter().all(|r| r.gap > 0.0);
    let decreasing = table.rows.windows(2).all(|w| w[0].gap > w[1].gap);
    let complete = table.rows.len() == 10;
    let limit = table
        .rate_estimate()?
        .limit_est
        .ok_or_else(|| Error::Precondition("fit produced no limit".into()))?;
    let cmp = toeplitz_comparison(&table, 256)?;
    let passed = positive && decreasing && complete && rel(limit, 1.0) <= 0.15 && cmp.relative_difference <= 0.15;
    Ok((
        passed,
        format!(
            "{} gaps, positive {positive}, decreasing {decreasing}, limit {limit:.4} (target 1, 15%), \
             resolvent rate {:.4} vs Toeplitz {:.4} ({:.2}%)",
            table.rows.len(),
            cmp.exterior.limit_est,
            cmp.toeplitz.limit_est,
            100.0 * cmp.relative_difference
        ),
    ))
}

fn closed_form_sequences(prec: u32, n: usize) -> Result<Vec<(&'static str, EigSequence)>> {
    let one = BigReal::one(prec);
    let two_over_e = BigReal::from_i64(-1, prec).exp().mul_i64(2);
    let mut disk = Vec::with_capacity(n);
    let mut circle = Vec::with_capacity(n);
    for k in 0..n as u32 {
        disk.push(lower_incomplete_gamma_reg(k + 1, &one)?);
        circle.push(&two_over_e / &BigReal::factorial(k, prec));
    }
    Ok(vec![
        ("disk", EigSequence::from_values(disk, 0)),
        ("circle", EigSequence::from_values(circle, 0)),
    ])
}

fn abstract_suite(seeds: u64) -> Result<(bool, String)> {
    let mut worst_form = f64::INFINITY;
    let mut form_ok = true;
    for seed in 0..seeds {
        let d = 4 + (seed % 9) as usize;
        for fp in [FormPair::random(seed, d), FormPair::random_invariant(seed, d)] {
            let r = check_form_domination(&fp);
            form_ok &= r.passes;
            worst_form = worst_form.min(r.min_eigenvalue / r.scale);
        }
    }
    let mut cluster_ok = true;
    let mut worst_exact: f64 = 0.0;
    for seed in 0..seeds {
        for block in [true, false] {
            let cm = ClusterModel::random(seed, block);
            let r = check_cluster_accumulation(&cm, 1e-3, seed)?;
            cluster_ok &= r.passes;
            if let Some(e) = r.exactness_error {
                worst_exact = worst_exact.max(e);
            }
        }
    }
    let mut shift_ok = true;
    let mut worst_shift: f64 = 0.0;
    for (_, s) in closed_form_sequences(256, 60)? {
        for l in -3..=3i64 {
            let r = shift_report(&s, l)?;
            shift_ok &= r.agrees;
            worst_shift = worst_shift.max(r.difference);
        }
    }
    Ok((
        form_ok && cluster_ok && shift_ok,
        format!(
            "{seeds} seeds: min scaled eigenvalue {worst_form:.2e}, cluster checks {cluster_ok} \
             (exactness {worst_exact:.1e}), shift |l|<=3 max diff {worst_shift:.1e}"
        ),
    ))
}

fn monotonicity(session: &mut Session) -> Result<(bool, String)> {
    let prec = 256;
    let n = 40;
    let radii = ["0.8", "1", "1.2"];
    let mut toeplitz_ok = true;
    let mut compared = 0;
    for q in 0..2 {
        let seqs: Vec<EigSequence> = radii
            .iter()
            .map(|r| session.spectrum(&format!("disk:0,0,{r}"), q, n, prec))
            .collect::<Result<_>>()?;
        for w in seqs.windows(2) {
            let count = w[0].stabilized_count.min(w[1].stabilized_count);
            for i in 0..count {
                toeplitz_ok &= w[0].values[i].total_cmp(&w[1].values[i]).is_le();
                compared += 1;
            }
        }
    }
    let small = cluster_table(2.0, 1.0, 0, 10)?;
    let large = cluster_table(2.0, 1.2, 0, 10)?;
    let exterior_ok = small.rows.len() == large.rows.len()
        && small.rows.iter().zip(&large.rows).all(|(a, b)| b.gap > a.gap);
    Ok((
        toeplitz_ok && exterior_ok,
        format!(
            "nested disks R=0.8<1<1.2, q=0,1: {compared} comparisons {toeplitz_ok}; \
             exterior gaps R=1.2 over R=1 at {} indices {exterior_ok}",
            small.rows.len()
        ),
    ))
}
