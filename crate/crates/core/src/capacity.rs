//! Logarithmic capacity via Fekete points, with exact values for the
//! standard shapes.
//!
//! Maximizers of `Σ log|z_i - z_j|` over a compact set sit on the outer
//! boundary of its polynomial convex hull, so points are parameterized on
//! that boundary and optimized by coordinate ascent: each point moves by
//! golden-section search between its two neighbours. Everything here is
//! double precision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{MeasureKind, MeasureSpec};
use crate::numerics::{lgamma, BigReal};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FeketeConfig {
    pub n_points: usize,
    pub restarts: usize,
    /// Maximum coordinate-ascent sweeps per restart.
    pub max_sweeps: usize,
    pub seed: u64,
    /// Sweep stops once the energy gain falls below `tol · (1 + |E|)`.
    pub tol: f64,
}

impl Default for FeketeConfig {
    fn default() -> Self {
        FeketeConfig {
            n_points: 64,
            restarts: 3,
            max_sweeps: 4000,
            seed: 7,
            tol: 1e-14,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityMethod {
    Fekete,
    Registry,
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityEstimate {
    /// `d_n` at the largest `n` computed (equal to `extrapolated` for the
    /// registry).
    pub d_n: f64,
    pub n: usize,
    pub extrapolated: f64,
    pub method: CapacityMethod,
    /// False if some ascent hit its sweep budget while still improving.
    pub converged: bool,
    /// `(n, d_n)` for every size of the extrapolation ladder.
    pub ladder: Vec<(usize, f64)>,
}

impl CapacityEstimate {
    fn registry(value: f64) -> Self {
        CapacityEstimate {
            d_n: value,
            n: 0,
            extrapolated: value,
            method: CapacityMethod::Registry,
            converged: true,
            ladder: Vec::new(),
        }
    }

    /// The best available value of `Cap`.
    pub fn value(&self) -> f64 {
        self.extrapolated
    }
}

/// `Γ(1/4)² / (4 π^{3/2})`, the capacity of the unit square.
pub fn unit_square_capacity() -> f64 {
    let g = lgamma(&BigReal::from_f64(0.25, 128)).expect("positive").exp().to_f64();
    g * g / (4.0 * std::f64::consts::PI.powf(1.5))
}

/// Outer boundary of the polynomial convex hull, parameterized.
#[derive(Clone, Debug)]
enum Boundary {
    /// `θ ∈ [0, 2π)`.
    Ellipse {
        c: (f64, f64),
        a: f64,
        b: f64,
        tilt: f64,
    },
    /// `θ ∈ [0, π]` with `z = p0 + (1 - cos θ)/2 · (p1 - p0)`, which spreads
    /// the endpoint clustering of Fekete points evenly.
    Segment { p0: (f64, f64), p1: (f64, f64) },
    /// Arc length along the closed polygon.
    Polygon {
        vertices: Vec<(f64, f64)>,
        cumulative: Vec<f64>,
    },
}

impl Boundary {
    fn from_shape(mu: &MeasureSpec) -> Result<Self> {
        let c = |z: &crate::numerics::BigComplex| z.to_f64_pair();
        Ok(match mu.kind() {
            MeasureKind::AreaDisk { center, radius } | MeasureKind::ArcCircle { center, radius } => {
                let r = radius.to_f64();
                Boundary::Ellipse {
                    c: c(center),
                    a: r,
                    b: r,
                    tilt: 0.0,
                }
            }
            MeasureKind::AreaAnnulus { center, r_out, .. } => {
                let r = r_out.to_f64();
                Boundary::Ellipse {
                    c: c(center),
                    a: r,
                    b: r,
                    tilt: 0.0,
                }
            }
            MeasureKind::AreaEllipse { center, a, b, tilt }
            | MeasureKind::ArcEllipse { center, a, b, tilt } => Boundary::Ellipse {
                c: c(center),
                a: a.to_f64(),
                b: b.to_f64(),
                tilt: tilt.to_f64(),
            },
            MeasureKind::ArcSegment { start, end } => Boundary::Segment {
                p0: c(start),
                p1: c(end),
            },
            MeasureKind::AreaPolygon { vertices } => {
                let vertices: Vec<(f64, f64)> = vertices.iter().map(c).collect();
                let mut cumulative = vec![0.0];
                for i in 0..vertices.len() {
                    let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
                    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
                    cumulative.push(cumulative.last().expect("nonempty") + len);
                }
                Boundary::Polygon {
                    vertices,
                    cumulative,
                }
            }
            MeasureKind::Atoms { .. } => {
                return Err(Error::Precondition(
                    "finite point sets have zero capacity; no Fekete run".into(),
                ))
            }
        })
    }

    /// Period for closed boundaries.
    fn period(&self) -> Option<f64> {
        match self {
            Boundary::Ellipse { .. } => Some(std::f64::consts::TAU),
            Boundary::Segment { .. } => None,
            Boundary::Polygon { cumulative, .. } => cumulative.last().copied(),
        }
    }

    fn point(&self, p: f64) -> (f64, f64) {
        match self {
            Boundary::Ellipse { c, a, b, tilt } => {
                let (x, y) = (a * p.cos(), b * p.sin());
                let (ct, st) = (tilt.cos(), tilt.sin());
                (c.0 + ct * x - st * y, c.1 + st * x + ct * y)
            }
            Boundary::Segment { p0, p1 } => {
                let s = (1.0 - p.cos()) / 2.0;
                (p0.0 + s * (p1.0 - p0.0), p0.1 + s * (p1.1 - p0.1))
            }
            Boundary::Polygon {
                vertices,
                cumulative,
            } => {
                let total = *cumulative.last().expect("nonempty");
                let p = p.rem_euclid(total);
                let i = match cumulative.binary_search_by(|x| x.total_cmp(&p)) {
                    Ok(i) => i.min(vertices.len() - 1),
                    Err(i) => i - 1,
                };
                let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
                let len = cumulative[i + 1] - cumulative[i];
                let s = if len > 0.0 { (p - cumulative[i]) / len } else { 0.0 };
                (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1))
            }
        }
    }

    /// Deterministic starting parameters: equispaced for closed curves,
    /// Chebyshev–Lobatto for segments.
    fn initial(&self, n: usize) -> Vec<f64> {
        match self.period() {
            Some(per) => (0..n).map(|i| per * i as f64 / n as f64).collect(),
            None => (0..n)
                .map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

fn pair_energy(points: &[(f64, f64)]) -> f64 {
    let mut e = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            e += log_dist(points[i], points[j]);
        }
    }
    e
}

#[inline]
fn log_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    0.5 * ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).ln()
}

/// Energy of point `i` moved to `z` against all others.
fn point_energy(points: &[(f64, f64)], i: usize, z: (f64, f64)) -> f64 {
    points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &w)| log_dist(z, w))
        .sum()
}

const GOLDEN_ITERS: usize = 60;

/// Maximizes `f` on `[lo, hi]`; returns the best point found and its value.
fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, start: f64, f_start: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    let (x, fx) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if fx > f_start {
        (x, fx)
    } else {
        (start, f_start)
    }
}

struct AscentResult {
    energy: f64,
    converged: bool,
}

fn ascend(boundary: &Boundary, mut params: Vec<f64>, cfg: &FeketeConfig) -> AscentResult {
    let n = params.len();
    let period = boundary.period();
    let mut points: Vec<(f64, f64)> = params.iter().map(|&p| boundary.point(p)).collect();
    let mut energy = pair_energy(&points);
    for _ in 0..cfg.max_sweeps {
        let before = energy;
        for i in 0..n {
            let (lo, hi) = match period {
                Some(per) => {
                    let prev = if i == 0 { params[n - 1] - per } else { params[i - 1] };
                    let next = if i == n - 1 { params[0] + per } else { params[i + 1] };
                    (prev, next)
                }
                None => {
                    let prev = if i == 0 { 0.0 } else { params[i - 1] };
                    let next = if i == n - 1 { std::f64::consts::PI } else { params[i + 1] };
                    (prev, next)
                }
            };
            let current = point_energy(&points, i, points[i]);
            let f = |p: f64| point_energy(&points, i, boundary.point(p));
            let (p, fp) = golden_max(f, lo, hi, params[i], current);
            if fp > current {
                energy += fp - current;
                params[i] = p;
                points[i] = boundary.point(p);
            }
        }
        if let Some(per) = period {
            // keep parameters in [0, per) and in cyclic order
            let shift = params[0].div_euclid(per) * per;
            if shift != 0.0 {
                for p in params.iter_mut() {
                    *p -= shift;
                }
            }
        }
        if energy - before <= cfg.tol * (1.0 + energy.abs()) {
            // recompute from scratch to drop accumulated rounding
            return AscentResult {
                energy: pair_energy(&points),
                converged: true,
            };
        }
    }
    AscentResult {
        energy: pair_energy(&points),
        converged: false,
    }
}

fn diameter_from_energy(energy: f64, n: usize) -> f64 {
    (2.0 * energy / (n * (n - 1)) as f64).exp()
}

/// Best `d_n` over seeded restarts; restart 0 starts unjittered.
fn best_diameter(boundary: &Boundary, n: usize, cfg: &FeketeConfig) -> (f64, bool) {
    let base = boundary.initial(n);
    let period = boundary.period();
    let mut best: Option<(f64, bool)> = None;
    for restart in 0..cfg.restarts.max(1) {
        let params = if restart == 0 {
            base.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(restart as u64));
            let mut p: Vec<f64> = match period {
                Some(per) => {
                    let h = per / n as f64;
                    base.iter().map(|&x| x + rng.gen_range(-0.3..0.3) * h).collect()
                }
                None => {
                    let pi = std::f64::consts::PI;
                    let mut p: Vec<f64> = base
                        .iter()
                        .map(|&x| (x + rng.gen_range(-0.3..0.3) * pi / n as f64).clamp(0.0, pi))
                        .collect();
                    p[0] = 0.0;
                    p[n - 1] = pi;
                    p
                }
            };
            p.sort_by(f64::total_cmp);
            p
        };
        let out = ascend(boundary, params, cfg);
        // ties keep the earlier restart
        if best.map_or(true, |(e, _)| out.energy > e) {
            best = Some((out.energy, out.converged));
        }
    }
    let (e, conv) = best.expect("at least one restart");
    (diameter_from_energy(e, n), conv)
}

/// Sizes used for extrapolation: `n/4, 3n/8, …, n`.
fn ladder_sizes(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (2..=8).map(|k| n * k / 8).filter(|&m| m >= 4).collect();
    v.dedup();
    if v.last() != Some(&n) {
        v.push(n);
    }
    v
}

/// Fits `log d_n = log Cap + a ln n / (n-1) + b / (n-1)`; exact for the disk,
/// where `d_n = n^{1/(n-1)}`.
fn extrapolate(ladder: &[(usize, f64)]) -> f64 {
    if ladder.len() < 3 {
        return ladder.last().map(|&(_, d)| d).unwrap_or(0.0);
    }
    let m = ladder.len();
    let a = nalgebra::DMatrix::from_fn(m, 3, |i, j| {
        let n = ladder[i].0 as f64;
        match j {
            0 => 1.0,
            1 => n.ln() / (n - 1.0),
            _ => 1.0 / (n - 1.0),
        }
    });
    let y = nalgebra::DVector::from_iterator(m, ladder.iter().map(|&(_, d)| d.ln()));
    let coef = a.svd(true, true).solve(&y, 1e-14).expect("svd with both factors");
    coef[0].exp()
}

/// Fekete diameter `d_n` at `cfg.n_points`, plus the extrapolated capacity
/// from a ladder of smaller sizes.
pub fn fekete_diameter(shape: &MeasureSpec, cfg: &FeketeConfig) -> Result<CapacityEstimate> {
    if cfg.n_points < 2 {
        return Err(Error::InvalidArgument("Fekete runs need at least 2 points".into()));
    }
    let boundary = Boundary::from_shape(shape)?;
    let sizes = if cfg.n_points >= 16 {
        ladder_sizes(cfg.n_points)
    } else {
        vec![cfg.n_points]
    };
    let mut ladder = Vec::with_capacity(sizes.len());
    let mut converged = true;
    for &m in &sizes {
        let (d, conv) = best_diameter(&boundary, m, cfg);
        converged &= conv;
        ladder.push((m, d));
    }
    let (n, d_n) = *ladder.last().expect("nonempty");
    Ok(CapacityEstimate {
        d_n,
        n,
        extrapolated: extrapolate(&ladder),
        method: CapacityMethod::Fekete,
        converged,
        ladder,
    })
}

/// Side length if the polygon is a square.
fn square_side(vertices: &[(f64, f64)]) -> Option<f64> {
    if vertices.len() != 4 {
        return None;
    }
    let d = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let side = d(vertices[0], vertices[1]);
    let tol = 1e-12 * side;
    let sides_equal = (0..4).all(|i| (d(vertices[i], vertices[(i + 1) % 4]) - side).abs() <= tol);
    let diags_equal = (d(vertices[0], vertices[2]) - side * 2f64.sqrt()).abs() <= tol
        && (d(vertices[1], vertices[3]) - side * 2f64.sqrt()).abs() <= tol;
    (sides_equal && diags_equal).then_some(side)
}

/// Exact capacity where a classical closed form exists.
pub fn registry_capacity(shape: &MeasureSpec) -> Option<f64> {
    match shape.kind() {
        MeasureKind::AreaDisk { radius, .. } | MeasureKind::ArcCircle { radius, .. } => {
            Some(radius.to_f64())
        }
        MeasureKind::AreaAnnulus { r_out, .. } => Some(r_out.to_f64()),
        MeasureKind::ArcSegment { start, end } => Some((end - start).abs().to_f64() / 4.0),
        MeasureKind::AreaEllipse { a, b, .. } | MeasureKind::ArcEllipse { a, b, .. } => {
            Some((a.to_f64() + b.to_f64()) / 2.0)
        }
        MeasureKind::AreaPolygon { vertices } => {
            let v: Vec<(f64, f64)> = vertices.iter().map(|z| z.to_f64_pair()).collect();
            square_side(&v).map(|s| s * unit_square_capacity())
        }
        MeasureKind::Atoms { .. } => Some(0.0),
    }
}

/// `Cap(K)`: the registry value if known, otherwise a default Fekete run.
pub fn capacity_of(shape: &MeasureSpec) -> Result<CapacityEstimate> {
    match registry_capacity(shape) {
        Some(v) => Ok(CapacityEstimate::registry(v)),
        None => fekete_diameter(shape, &FeketeConfig::default()),
    }
}

/// Inner capacity of the polynomial convex hull. Shapes with interior are
/// their own Lipschitz subdomain; closed curves enclose a region once the
/// hull fills them; open curves and atoms give zero.
pub fn capacity_minus(shape: &MeasureSpec) -> Result<CapacityEstimate> {
    match shape.kind() {
        MeasureKind::ArcSegment { .. } | MeasureKind::Atoms { .. } => {
            Ok(CapacityEstimate::registry(0.0))
        }
        _ => capacity_of(shape),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREC: u32 = 128;

    fn cfg(n: usize) -> FeketeConfig {
        FeketeConfig {
            n_points: n,
            restarts: 2,
            ..FeketeConfig::default()
        }
    }

    /// Brute-force oracle for four points on the unit circle: fix one at
    /// angle 0 and grid-search the other three.
    fn brute_circle_four() -> f64 {
        let m = 90;
        let mut best = f64::NEG_INFINITY;
        let pt = |k: usize| {
            let t = std::f64::consts::TAU * k as f64 / (4 * m) as f64;
            (t.cos(), t.sin())
        };
        for a in 1..4 * m {
            for b in (a + 1)..4 * m {
                for c in (b + 1)..4 * m {
                    let e = pair_energy(&[pt(0), pt(a), pt(b), pt(c)]);
                    best = best.max(e);
                }
            }
        }
        diameter_from_energy(best, 4)
    }

    #[test]
    fn four_points_on_circle() {
        let disk = MeasureSpec::disk(0.0, 0.0, 1.0, PREC).unwrap();
        let est = fekete_diameter(&disk, &cfg(4)).unwrap();
        let want = 2f64.powf(2.0 / 3.0);
        assert!((est.d_n - want).abs() < 1e-12);
        assert!((brute_circle_four() - want).abs() < 1e-12);
    }

    #[test]
    fn two_points_on_segment() {
        let seg = MeasureSpec::segment(-1.0, 0.0, 1.0, 0.0, PREC).unwrap();
        let est = fekete_diameter(&seg, &cfg(2)).unwrap();
        assert!((est.d_n - 2.0).abs() < 1e-12);
    }

    #[test]
    fn disk_extrapolation() {
        let disk = MeasureSpec::disk(0.0, 0.0, 1.0, PREC).unwrap();
        let est = fekete_diameter(&disk, &cfg(64)).unwrap();
        assert!((est.extrapolated - 1.0).abs() < 5e-3, "{est:?}");
        for &(n, d) in &est.ladder {
            assert!((d - (n as f64).powf(1.0 / (n as f64 - 1.0))).abs() < 1e-10);
        }
    }

    #[test]
    fn ladder_is_monotone_and_above_capacity() {
        for shape in [
            MeasureSpec::segment(-1.0, 0.0, 1.0, 0.0, PREC).unwrap(),
            MeasureSpec::square(1.0, 0.0, 0.0, PREC).unwrap(),
            MeasureSpec::ellipse_arc(0.0, 0.0, 1.0, 0.5, PREC).unwrap(),
        ] {
            let est = fekete_diameter(&shape, &cfg(32)).unwrap();
            let cap = registry_capacity(&shape).unwrap();
            for w in est.ladder.windows(2) {
                assert!(w[1].1 <= w[0].1 + 1e-12, "{shape}: {:?}", est.ladder);
            }
            assert!(est.ladder.iter().all(|&(_, d)| d >= cap));
        }
    }

    #[test]
    fn registry_values() {
        let cap = |s: &str| capacity_of(&MeasureSpec::parse(s, PREC).unwrap()).unwrap().value();
        assert_eq!(cap("disk:0,0,2"), 2.0);
        assert_eq!(cap("segment:0,0,4,0"), 1.0);
        assert_eq!(cap("ellipse:0,0,2,1"), 1.5);
        assert!((cap("square:1") - 0.5901702).abs() < 1e-7);
        assert_eq!(cap("annulus:0,0,0.5,1"), 1.0);
        assert_eq!(cap("atoms:0,0,1"), 0.0);
    }

    #[test]
    fn inner_capacity() {
        let capm = |s: &str| capacity_minus(&MeasureSpec::parse(s, PREC).unwrap()).unwrap().value();
        assert_eq!(capm("disk:0,0,1"), 1.0);
        assert_eq!(capm("segment:-1,0,1,0"), 0.0);
        assert_eq!(capm("annulus:0,0,0.5,1"), 1.0);
        assert_eq!(capm("atoms:0,0,1;1,0,1"), 0.0);
    }

    #[test]
    fn scaling_covariance() {
        let tri = MeasureSpec::polygon(&[(0.0, 0.0), (1.0, 0.0), (0.2, 0.8)], PREC).unwrap();
        let big = tri
            .transformed(&BigReal::from_f64(2.5, PREC), &BigReal::from_f64(0.4, PREC))
            .unwrap();
        let a = fekete_diameter(&tri, &cfg(24)).unwrap();
        let b = fekete_diameter(&big, &cfg(24)).unwrap();
        assert!((b.d_n / a.d_n - 2.5).abs() < 1e-6);
        assert!((b.extrapolated / a.extrapolated - 2.5).abs() < 1e-4);
    }

    #[test]
    fn deterministic_given_seed() {
        let sq = MeasureSpec::square(1.0, 0.0, 0.0, PREC).unwrap();
        let a = fekete_diameter(&sq, &cfg(20)).unwrap();
        let b = fekete_diameter(&sq, &cfg(20)).unwrap();
        assert_eq!(a.ladder, b.ladder);
        assert_eq!(a.extrapolated.to_bits(), b.extrapolated.to_bits());
    }

    #[test]
    fn atoms_rejected() {
        let at = MeasureSpec::atoms(&[((0.0, 0.0), 1.0)], PREC).unwrap();
        assert!(fekete_diameter(&at, &cfg(4)).is_err());
    }
}
