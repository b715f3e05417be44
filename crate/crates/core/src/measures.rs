//! Compactly supported measures (the obstacles) and their Gaussian moments.
//!
//! All integrals of Gaussian-weighted polynomials against a measure reduce
//! to the moment table `m_ab = ∫ z^a z̄^b e^{-B|z|²/2} dμ(z)`. Radially
//! symmetric measures centered at the origin get closed forms; everything
//! else goes through quadrature with order doubling until two successive
//! tables agree.

use std::fmt;
use std::str::FromStr;

use rug::{Assign, Float};

use crate::error::{Error, Result};
use crate::fock::{GaussPoly, MagneticField};
use crate::numerics::{gauss_legendre, lower_incomplete_gamma_ladder, BigComplex, BigReal};

/// Maximum number of order doublings before quadrature gives up.
pub const MAX_DOUBLINGS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureKind {
    /// Area measure on the disk `|z - center| <= radius`.
    AreaDisk { center: BigComplex, radius: BigReal },
    /// Area measure on `r_in <= |z - center| <= r_out`.
    AreaAnnulus {
        center: BigComplex,
        r_in: BigReal,
        r_out: BigReal,
    },
    /// Area measure on a simple polygon.
    AreaPolygon { vertices: Vec<BigComplex> },
    /// Area measure on a filled ellipse, major axis tilted by `tilt` radians.
    AreaEllipse {
        center: BigComplex,
        a: BigReal,
        b: BigReal,
        tilt: BigReal,
    },
    /// Arc-length measure on a circle.
    ArcCircle { center: BigComplex, radius: BigReal },
    /// Arc-length measure on a straight segment.
    ArcSegment { start: BigComplex, end: BigComplex },
    /// Arc-length measure on an ellipse.
    ArcEllipse {
        center: BigComplex,
        a: BigReal,
        b: BigReal,
        tilt: BigReal,
    },
    /// Finitely many point masses.
    Atoms { atoms: Vec<(BigComplex, BigReal)> },
}

/// A validated compactly supported finite measure.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpec {
    kind: MeasureKind,
}

#[derive(Clone, Debug)]
pub struct SupportInfo {
    /// Smallest `R₀` with `supp μ ⊂ {|z - centroid| <= R₀}` for the shape's
    /// natural center.
    pub bounding_radius: BigReal,
    pub centroid: BigComplex,
    /// `max |z|` over the support, measured from the basis origin.
    pub origin_radius: BigReal,
}

fn pt(x: f64, y: f64, prec: u32) -> BigComplex {
    BigComplex::from_f64(x, y, prec)
}

impl MeasureSpec {
    pub fn new(kind: MeasureKind) -> Result<Self> {
        validate(&kind)?;
        Ok(MeasureSpec { kind })
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn disk(cx: f64, cy: f64, radius: f64, prec: u32) -> Result<Self> {
        Self::new(MeasureKind::AreaDisk {
            center: pt(cx, cy, prec),
            radius: BigReal::from_f64(radius, prec),
        })
    }

    pub fn annulus(cx: f64, cy: f64, r_in: f64, r_out: f64, prec: u32) -> Result<Self> {
        Self::new(MeasureKind::AreaAnnulus {
            center: pt(cx, cy, prec),
            r_in: BigReal::from_f64(r_in, prec),
            r_out: BigReal::from_f64(r_out, prec),
        })
    }

    pub fn circle(cx: f64, cy: f64, radius: f64, prec: u32) -> Result<Self> {
        Self::new(MeasureKind::ArcCircle {
            center: pt(cx, cy, prec),
            radius: BigReal::from_f64(radius, prec),
        })
    }

    pub fn segment(x1: f64, y1: f64, x2: f64, y2: f64, prec: u32) -> Result<Self> {
        Self::new(MeasureKind::ArcSegment {
            start: pt(x1, y1, prec),
            end: pt(x2, y2, prec),
        })
    }

    pub fn ellipse_arc(cx: f64, cy: f64, a: f64, b: f64, prec: u32) -> Result<Self> {
        Self::new(MeasureKind::ArcEllipse {
            center: pt(cx, cy, prec),
            a: BigReal::from_f64(a, prec),
            b: BigReal::from_f64(b, prec),
            tilt: BigReal::zero(prec),
        })
    }

    pub fn ellipse_area(cx: f64, cy: f64, a: f64, b: f64, prec: u32) -> Result<Self> {
        Self::new(MeasureKind::AreaEllipse {
            center: pt(cx, cy, prec),
            a: BigReal::from_f64(a, prec),
            b: BigReal::from_f64(b, prec),
            tilt: BigReal::zero(prec),
        })
    }

    /// Axis-aligned square of the given side.
    pub fn square(side: f64, cx: f64, cy: f64, prec: u32) -> Result<Self> {
        let h = side / 2.0;
        Self::polygon(
            &[(cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)],
            prec,
        )
    }

    pub fn polygon(vertices: &[(f64, f64)], prec: u32) -> Result<Self> {
        Self::new(MeasureKind::AreaPolygon {
            vertices: vertices.iter().map(|&(x, y)| pt(x, y, prec)).collect(),
        })
    }

    pub fn atoms(atoms: &[((f64, f64), f64)], prec: u32) -> Result<Self> {
        Self::new(MeasureKind::Atoms {
            atoms: atoms
                .iter()
                .map(|&((x, y), m)| (pt(x, y, prec), BigReal::from_f64(m, prec)))
                .collect(),
        })
    }

    /// Parses the shape mini-grammar (`disk:cx,cy,R`, `segment:x1,y1,x2,y2`,
    /// `circle:cx,cy,R`, `ellipse:cx,cy,a,b[,arc]`, `square:side[,cx,cy]`,
    /// `polygon:x1,y1;x2,y2;...`, `annulus:cx,cy,rin,rout`,
    /// `atoms:x,y,m;...`). Numbers are read as decimals at `prec` bits.
    pub fn parse(spec: &str, prec: u32) -> Result<Self> {
        let (name, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("shape {spec:?} lacks ':'")))?;
        let nums = |s: &str| -> Result<Vec<BigReal>> {
            s.split(',')
                .map(|t| BigReal::parse(t, prec))
                .collect::<Result<Vec<_>>>()
        };
        let want = |v: &[BigReal], n: usize| -> Result<()> {
            if v.len() != n {
                return Err(Error::Parse(format!(
                    "shape {spec:?}: expected {n} numbers, got {}",
                    v.len()
                )));
            }
            Ok(())
        };
        let c = |x: &BigReal, y: &BigReal| BigComplex::new(x.clone(), y.clone());
        let kind = match name.trim() {
            "disk" => {
                let v = nums(rest)?;
                want(&v, 3)?;
                MeasureKind::AreaDisk {
                    center: c(&v[0], &v[1]),
                    radius: v[2].clone(),
                }
            }
            "circle" => {
                let v = nums(rest)?;
                want(&v, 3)?;
                MeasureKind::ArcCircle {
                    center: c(&v[0], &v[1]),
                    radius: v[2].clone(),
                }
            }
            "annulus" => {
                let v = nums(rest)?;
                want(&v, 4)?;
                MeasureKind::AreaAnnulus {
                    center: c(&v[0], &v[1]),
                    r_in: v[2].clone(),
                    r_out: v[3].clone(),
                }
            }
            "segment" => {
                let v = nums(rest)?;
                want(&v, 4)?;
                MeasureKind::ArcSegment {
                    start: c(&v[0], &v[1]),
                    end: c(&v[2], &v[3]),
                }
            }
            "ellipse" => {
                let (body, arc) = match rest.rsplit_once(',') {
                    Some((body, tail)) if tail.trim() == "arc" => (body, true),
                    _ => (rest, false),
                };
                let v = nums(body)?;
                want(&v, 4)?;
                let center = c(&v[0], &v[1]);
                let (a, b) = (v[2].clone(), v[3].clone());
                let tilt = BigReal::zero(prec);
                if arc {
                    MeasureKind::ArcEllipse { center, a, b, tilt }
                } else {
                    MeasureKind::AreaEllipse { center, a, b, tilt }
                }
            }
            "square" => {
                let v = nums(rest)?;
                let (side, cx, cy) = match v.len() {
                    1 => (v[0].clone(), BigReal::zero(prec), BigReal::zero(prec)),
                    3 => (v[0].clone(), v[1].clone(), v[2].clone()),
                    n => {
                        return Err(Error::Parse(format!(
                            "shape {spec:?}: square takes 1 or 3 numbers, got {n}"
                        )))
                    }
                };
                let h = side.div_i64(2);
                let corners = [(-1, -1), (1, -1), (1, 1), (-1, 1)];
                MeasureKind::AreaPolygon {
                    vertices: corners
                        .iter()
                        .map(|&(sx, sy)| {
                            BigComplex::new(&cx + &h.mul_i64(sx), &cy + &h.mul_i64(sy))
                        })
                        .collect(),
                }
            }
            "polygon" => {
                let mut vertices = Vec::new();
                for p in rest.split(';').filter(|s| !s.trim().is_empty()) {
                    let v = nums(p)?;
                    want(&v, 2)?;
                    vertices.push(c(&v[0], &v[1]));
                }
                MeasureKind::AreaPolygon { vertices }
            }
            "atoms" => {
                let mut atoms = Vec::new();
                for p in rest.split(';').filter(|s| !s.trim().is_empty()) {
                    let v = nums(p)?;
                    want(&v, 3)?;
                    atoms.push((c(&v[0], &v[1]), v[2].clone()));
                }
                MeasureKind::Atoms { atoms }
            }
            other => return Err(Error::Parse(format!("unknown shape {other:?}"))),
        };
        Self::new(kind)
    }

    pub fn prec(&self) -> u32 {
        match &self.kind {
            MeasureKind::AreaDisk { radius, .. } | MeasureKind::ArcCircle { radius, .. } => {
                radius.prec()
            }
            MeasureKind::AreaAnnulus { r_out, .. } => r_out.prec(),
            MeasureKind::AreaPolygon { vertices } => vertices[0].prec(),
            MeasureKind::AreaEllipse { a, .. } | MeasureKind::ArcEllipse { a, .. } => a.prec(),
            MeasureKind::ArcSegment { start, .. } => start.prec(),
            MeasureKind::Atoms { atoms } => atoms[0].1.prec(),
        }
    }

    /// True for the arc-length and atomic measures.
    pub fn is_curve(&self) -> bool {
        matches!(
            self.kind,
            MeasureKind::ArcCircle { .. }
                | MeasureKind::ArcSegment { .. }
                | MeasureKind::ArcEllipse { .. }
                | MeasureKind::Atoms { .. }
        )
    }

    /// Radially symmetric about the basis origin (closed-form moments).
    pub fn is_origin_radial(&self) -> bool {
        match &self.kind {
            MeasureKind::AreaDisk { center, .. }
            | MeasureKind::AreaAnnulus { center, .. }
            | MeasureKind::ArcCircle { center, .. } => center.is_zero(),
            _ => false,
        }
    }

    /// Image of the measure under `z ↦ scale · e^{i angle} z`. Masses of
    /// atoms are kept; lengths scale.
    pub fn transformed(&self, scale: &BigReal, angle: &BigReal) -> Result<Self> {
        let rot = BigComplex::new(angle.cos(), angle.sin()).scale(scale);
        let map = |z: &BigComplex| z * &rot;
        let kind = match &self.kind {
            MeasureKind::AreaDisk { center, radius } => MeasureKind::AreaDisk {
                center: map(center),
                radius: radius * scale,
            },
            MeasureKind::AreaAnnulus { center, r_in, r_out } => MeasureKind::AreaAnnulus {
                center: map(center),
                r_in: r_in * scale,
                r_out: r_out * scale,
            },
            MeasureKind::AreaPolygon { vertices } => MeasureKind::AreaPolygon {
                vertices: vertices.iter().map(map).collect(),
            },
            MeasureKind::AreaEllipse { center, a, b, tilt } => MeasureKind::AreaEllipse {
                center: map(center),
                a: a * scale,
                b: b * scale,
                tilt: tilt + angle,
            },
            MeasureKind::ArcCircle { center, radius } => MeasureKind::ArcCircle {
                center: map(center),
                radius: radius * scale,
            },
            MeasureKind::ArcSegment { start, end } => MeasureKind::ArcSegment {
                start: map(start),
                end: map(end),
            },
            MeasureKind::ArcEllipse { center, a, b, tilt } => MeasureKind::ArcEllipse {
                center: map(center),
                a: a * scale,
                b: b * scale,
                tilt: tilt + angle,
            },
            MeasureKind::Atoms { atoms } => MeasureKind::Atoms {
                atoms: atoms.iter().map(|(z, m)| (map(z), m.clone())).collect(),
            },
        };
        Self::new(kind)
    }

    /// Total mass `μ(ℝ²)`.
    pub fn total_mass(&self) -> BigReal {
        let prec = self.prec();
        let pi = BigReal::pi(prec);
        match &self.kind {
            MeasureKind::AreaDisk { radius, .. } => &pi * &radius.square(),
            MeasureKind::AreaAnnulus { r_in, r_out, .. } => {
                &pi * &(&r_out.square() - &r_in.square())
            }
            MeasureKind::AreaPolygon { vertices } => polygon_signed_area(vertices).abs(),
            MeasureKind::AreaEllipse { a, b, .. } => &(&pi * a) * b,
            MeasureKind::ArcCircle { radius, .. } => (&pi * radius).mul_i64(2),
            MeasureKind::ArcSegment { start, end } => (end - start).abs(),
            MeasureKind::ArcEllipse { .. } => {
                // perimeter by the same quadrature the moments use
                let nodes = node_set(self, 256).expect("ellipse nodes");
                nodes
                    .iter()
                    .fold(BigReal::zero(prec), |acc, (_, w)| &acc + w)
            }
            MeasureKind::Atoms { atoms } => atoms
                .iter()
                .fold(BigReal::zero(prec), |acc, (_, m)| &acc + m),
        }
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = |z: &BigComplex| format!("{},{}", z.re.to_f64(), z.im.to_f64());
        match &self.kind {
            MeasureKind::AreaDisk { center, radius } => {
                write!(f, "disk:{},{}", p(center), radius.to_f64())
            }
            MeasureKind::AreaAnnulus { center, r_in, r_out } => {
                write!(f, "annulus:{},{},{}", p(center), r_in.to_f64(), r_out.to_f64())
            }
            MeasureKind::AreaPolygon { vertices } => {
                let v: Vec<String> = vertices.iter().map(p).collect();
                write!(f, "polygon:{}", v.join(";"))
            }
            MeasureKind::AreaEllipse { center, a, b, .. } => {
                write!(f, "ellipse:{},{},{}", p(center), a.to_f64(), b.to_f64())
            }
            MeasureKind::ArcCircle { center, radius } => {
                write!(f, "circle:{},{}", p(center), radius.to_f64())
            }
            MeasureKind::ArcSegment { start, end } => {
                write!(f, "segment:{},{}", p(start), p(end))
            }
            MeasureKind::ArcEllipse { center, a, b, .. } => {
                write!(f, "ellipse:{},{},{},arc", p(center), a.to_f64(), b.to_f64())
            }
            MeasureKind::Atoms { atoms } => {
                let v: Vec<String> = atoms
                    .iter()
                    .map(|(z, m)| format!("{},{}", p(z), m.to_f64()))
                    .collect();
                write!(f, "atoms:{}", v.join(";"))
            }
        }
    }
}

impl FromStr for MeasureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, 256)
    }
}

fn polygon_signed_area(vertices: &[BigComplex]) -> BigReal {
    let prec = vertices[0].prec();
    let n = vertices.len();
    let mut acc = BigReal::zero(prec);
    for i in 0..n {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % n];
        acc = &acc + &(&(&a.re * &b.im) - &(&a.im * &b.re));
    }
    acc.div_i64(2)
}

fn segments_cross(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let orient = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn validate(kind: &MeasureKind) -> Result<()> {
    let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
    match kind {
        MeasureKind::AreaDisk { radius, .. } | MeasureKind::ArcCircle { radius, .. } => {
            if !radius.is_positive() {
                return bad("radius must be positive");
            }
        }
        MeasureKind::AreaAnnulus { r_in, r_out, .. } => {
            if r_in.is_sign_negative() || !(r_out > r_in) {
                return bad("annulus needs 0 <= r_in < r_out");
            }
        }
        MeasureKind::AreaEllipse { a, b, .. } | MeasureKind::ArcEllipse { a, b, .. } => {
            if !b.is_positive() || a < b {
                return bad("ellipse needs semiaxes a >= b > 0");
            }
        }
        MeasureKind::ArcSegment { start, end } => {
            if start == end {
                return bad("segment endpoints must be distinct");
            }
        }
        MeasureKind::AreaPolygon { vertices } => {
            if vertices.len() < 3 {
                return bad("polygon needs at least 3 vertices");
            }
            if polygon_signed_area(vertices).is_zero() {
                return bad("polygon has zero area");
            }
            let v: Vec<(f64, f64)> = vertices.iter().map(|z| z.to_f64_pair()).collect();
            let n = v.len();
            for i in 0..n {
                for j in (i + 1)..n {
                    // adjacent edges share a vertex
                    if j == i + 1 || (i == 0 && j == n - 1) {
                        continue;
                    }
                    if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                        return bad("polygon edges intersect");
                    }
                }
            }
        }
        MeasureKind::Atoms { atoms } => {
            if atoms.is_empty() {
                return bad("atomic measure needs at least one atom");
            }
            if atoms.iter().any(|(_, m)| !m.is_positive()) {
                return bad("atom masses must be positive");
            }
        }
    }
    Ok(())
}

/// Tight bounding disk and origin reach of the support.
pub fn support_info(mu: &MeasureSpec) -> SupportInfo {
    let prec = mu.prec();
    let max_dist = |pts: &[BigComplex], c: &BigComplex| {
        pts.iter()
            .map(|z| (z - c).abs())
            .fold(BigReal::zero(prec), BigReal::max)
    };
    let (centroid, bounding_radius, origin_radius) = match &mu.kind {
        MeasureKind::AreaDisk { center, radius } | MeasureKind::ArcCircle { center, radius } => {
            (center.clone(), radius.clone(), &center.abs() + radius)
        }
        MeasureKind::AreaAnnulus { center, r_out, .. } => {
            (center.clone(), r_out.clone(), &center.abs() + r_out)
        }
        MeasureKind::AreaEllipse { center, a, .. } | MeasureKind::ArcEllipse { center, a, .. } => {
            (center.clone(), a.clone(), &center.abs() + a)
        }
        MeasureKind::ArcSegment { start, end } => {
            let mid = (start + end).scale(&BigReal::from_ratio(1, 2, prec));
            let r = (end - start).abs().div_i64(2);
            let reach = start.abs().max(end.abs());
            (mid, r, reach)
        }
        MeasureKind::AreaPolygon { vertices } => {
            let n = BigReal::from_i64(vertices.len() as i64, prec);
            let sum = vertices
                .iter()
                .fold(BigComplex::zero(prec), |acc, z| &acc + z);
            let c = sum.scale(&n.recip());
            let r = max_dist(vertices, &c);
            let reach = max_dist(vertices, &BigComplex::zero(prec));
            (c, r, reach)
        }
        MeasureKind::Atoms { atoms } => {
            let total = atoms
                .iter()
                .fold(BigReal::zero(prec), |acc, (_, m)| &acc + m);
            let sum = atoms
                .iter()
                .fold(BigComplex::zero(prec), |acc, (z, m)| &acc + &z.scale(m));
            let c = sum.scale(&total.recip());
            let pts: Vec<BigComplex> = atoms.iter().map(|(z, _)| z.clone()).collect();
            let r = max_dist(&pts, &c);
            let reach = max_dist(&pts, &BigComplex::zero(prec));
            (c, r, reach)
        }
    };
    SupportInfo {
        bounding_radius,
        centroid,
        origin_radius,
    }
}

/// Gaussian moments `m_ab = ∫ z^a z̄^b e^{-B|z|²/2} dμ` for `a, b <= degree`.
#[derive(Clone, Debug)]
pub struct MomentTable {
    degree: usize,
    data: Vec<BigComplex>,
    /// Quadrature order used (0 for closed forms).
    pub order: usize,
}

impl MomentTable {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, a: usize, b: usize) -> &BigComplex {
        &self.data[a * (self.degree + 1) + b]
    }

    /// `∫ f conj(g) dμ` for Gaussian polynomials within the table's degree.
    pub fn pair(&self, f: &GaussPoly, g: &GaussPoly) -> Result<BigComplex> {
        if f.field() != g.field() {
            return Err(Error::FieldMismatch(
                format!("{:?}", f.field()),
                format!("{:?}", g.field()),
            ));
        }
        let need = (f.degree().0 + g.degree().1).max(f.degree().1 + g.degree().0) as usize;
        if need > self.degree {
            return Err(Error::InvalidArgument(format!(
                "moment table of degree {} cannot integrate degree {need}",
                self.degree
            )));
        }
        let prec = f.prec();
        let mut re = Float::new(prec);
        let mut im = Float::new(prec);
        let mut t = Float::new(prec);
        for (&(a, b), fc) in f.coeffs() {
            for (&(c, d), gc) in g.coeffs() {
                // z^a z̄^b · conj(z^c z̄^d) = z^{a+d} z̄^{b+c}
                let m = self.get((a + d) as usize, (b + c) as usize);
                if m.is_zero() {
                    continue;
                }
                let w = fc * &gc.conj();
                t.assign(w.re.as_float() * m.re.as_float());
                re += &t;
                t.assign(w.im.as_float() * m.im.as_float());
                re -= &t;
                t.assign(w.re.as_float() * m.im.as_float());
                im += &t;
                t.assign(w.im.as_float() * m.re.as_float());
                im += &t;
            }
        }
        Ok(BigComplex::new(BigReal::from_float(re), BigReal::from_float(im)))
    }
}

/// `∫ f conj(g) dμ`.
pub fn integrate_pair(f: &GaussPoly, g: &GaussPoly, mu: &MeasureSpec) -> Result<BigComplex> {
    let need = (f.degree().0 + g.degree().1).max(f.degree().1 + g.degree().0) as usize;
    let table = moment_table(mu, f.field(), need)?;
    table.pair(f, g)
}

/// Smallest `m` with `u^m / m! < 2^{-bits}` and `m >= e·u`.
fn gaussian_taylor_terms(u: f64, bits: u32) -> usize {
    let target = -(bits as f64) * std::f64::consts::LN_2;
    let mut log_term = 0.0;
    let mut m = 0usize;
    loop {
        m += 1;
        log_term += u.max(1e-300).ln() - (m as f64).ln();
        if log_term < target && m as f64 >= std::f64::consts::E * u {
            return m;
        }
        if m > 100_000 {
            return m;
        }
    }
}

/// Builds the moment table, dispatching to closed forms where available.
pub fn moment_table(mu: &MeasureSpec, field: &MagneticField, degree: usize) -> Result<MomentTable> {
    let prec = field.prec();
    match &mu.kind {
        MeasureKind::AreaDisk { center, radius } if center.is_zero() => {
            radial_area_table(field, degree, &BigReal::zero(prec), radius)
        }
        MeasureKind::AreaAnnulus { center, r_in, r_out } if center.is_zero() => {
            radial_area_table(field, degree, r_in, r_out)
        }
        MeasureKind::ArcCircle { center, radius } if center.is_zero() => {
            Ok(ring_table(field, degree, radius))
        }
        MeasureKind::Atoms { atoms } => {
            let nodes: Vec<(BigComplex, BigReal)> = atoms
                .iter()
                .map(|(z, m)| (z.with_prec(prec), m.with_prec(prec)))
                .collect();
            Ok(accumulate(&nodes, field, degree, 0))
        }
        _ => quadrature_table(mu, field, degree),
    }
}

fn diagonal_table(degree: usize, prec: u32, diag: Vec<BigReal>) -> MomentTable {
    let n = degree + 1;
    let mut data = vec![BigComplex::zero(prec); n * n];
    for (a, d) in diag.into_iter().enumerate() {
        data[a * n + a] = BigComplex::from_real(d);
    }
    MomentTable {
        degree,
        data,
        order: 0,
    }
}

/// `∫_{r_in <= |z| <= r_out} |z|^{2a} e^{-B|z|²/2} dm
///  = (2π/B)(2/B)^a a! [P(a+1, B r_out²/2) - P(a+1, B r_in²/2)]`.
fn radial_area_table(
    field: &MagneticField,
    degree: usize,
    r_in: &BigReal,
    r_out: &BigReal,
) -> Result<MomentTable> {
    let prec = field.prec();
    let b = field.strength();
    let kmax = degree as u32 + 1;
    let t_out = (&r_out.with_prec(prec).square() * b).div_i64(2);
    let outer = lower_incomplete_gamma_ladder(kmax, &t_out)?;
    let inner = if r_in.is_zero() {
        None
    } else {
        let t_in = (&r_in.with_prec(prec).square() * b).div_i64(2);
        Some(lower_incomplete_gamma_ladder(kmax, &t_in)?)
    };
    let diag = (0..=degree)
        .map(|a| {
            let m = crate::fock::gaussian_moment(a as u32, field);
            let p = match &inner {
                Some(inner) => &outer[a] - &inner[a],
                None => outer[a].clone(),
            };
            &m * &p
        })
        .collect();
    Ok(diagonal_table(degree, prec, diag))
}

/// `∫_{|z| = R} |z|^{2a} e^{-B|z|²/2} ds = 2πR · R^{2a} e^{-BR²/2}`.
fn ring_table(field: &MagneticField, degree: usize, radius: &BigReal) -> MomentTable {
    let prec = field.prec();
    let r = radius.with_prec(prec);
    let r2 = r.square();
    let g = (&r2 * field.strength()).div_i64(-2).exp();
    let mut cur = &(&BigReal::pi(prec).mul_i64(2) * &r) * &g;
    let mut diag = Vec::with_capacity(degree + 1);
    for _ in 0..=degree {
        diag.push(cur.clone());
        cur = &cur * &r2;
    }
    diagonal_table(degree, prec, diag)
}

/// Weighted nodes `(z_i, w_i)` (measure density included, Gaussian not) at
/// quadrature level `order`.
fn node_set(mu: &MeasureSpec, order: usize) -> Result<Vec<(BigComplex, BigReal)>> {
    let prec = mu.prec();
    let two_pi = BigReal::pi(prec).mul_i64(2);
    // periodic trapezoid nodes on [0, 2π)
    let periodic = |m: usize| -> Vec<(BigReal, BigReal)> {
        let w = two_pi.div_i64(m as i64);
        (0..m)
            .map(|j| (w.mul_i64(j as i64), w.clone()))
            .collect()
    };
    let unit = |z: &BigReal| BigComplex::new(z.cos(), z.sin());
    let mut out = Vec::new();
    match &mu.kind {
        MeasureKind::AreaDisk { center, radius } => {
            let rule = gauss_legendre(order, prec)?;
            let (rs, rw) = rule.mapped(&BigReal::zero(prec), radius);
            annulus_nodes(center, &rs, &rw, &periodic(2 * order), &unit, &mut out);
        }
        MeasureKind::AreaAnnulus { center, r_in, r_out } => {
            let rule = gauss_legendre(order, prec)?;
            let (rs, rw) = rule.mapped(r_in, r_out);
            annulus_nodes(center, &rs, &rw, &periodic(2 * order), &unit, &mut out);
        }
        MeasureKind::ArcCircle { center, radius } => {
            for (th, w) in periodic(2 * order) {
                out.push((center + &unit(&th).scale(radius), &w * radius));
            }
        }
        MeasureKind::ArcEllipse { center, a, b, tilt } => {
            let rot = unit(tilt);
            for (th, w) in periodic(2 * order) {
                let (c, s) = (th.cos(), th.sin());
                let local = BigComplex::new(a * &c, b * &s);
                let speed = (&(a * &s).square() + &(b * &c).square()).sqrt();
                out.push((center + &(&local * &rot), &w * &speed));
            }
        }
        MeasureKind::AreaEllipse { center, a, b, tilt } => {
            let rot = unit(tilt);
            let rule = gauss_legendre(order, prec)?;
            let (rhos, rhow) = rule.mapped(&BigReal::zero(prec), &BigReal::one(prec));
            let ab = a * b;
            for (th, tw) in periodic(2 * order) {
                let dir = &BigComplex::new(a * &th.cos(), b * &th.sin()) * &rot;
                for (rho, w) in rhos.iter().zip(&rhow) {
                    let z = center + &dir.scale(rho);
                    out.push((z, &(&(&tw * w) * rho) * &ab));
                }
            }
        }
        MeasureKind::ArcSegment { start, end } => {
            let rule = gauss_legendre(order, prec)?;
            let half = (end - start).scale(&BigReal::from_ratio(1, 2, prec));
            let mid = (start + end).scale(&BigReal::from_ratio(1, 2, prec));
            let len = half.abs();
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                out.push((&mid + &half.scale(t), w * &len));
            }
        }
        MeasureKind::AreaPolygon { vertices } => {
            let rule = gauss_legendre(order, prec)?;
            let (us, uw) = rule.mapped(&BigReal::zero(prec), &BigReal::one(prec));
            let n = vertices.len();
            let apex = vertices
                .iter()
                .fold(BigComplex::zero(prec), |acc, z| &acc + z)
                .scale(&BigReal::from_i64(n as i64, prec).recip());
            // signed fan from the vertex average: exact for any simple polygon
            for i in 0..n {
                let v1 = &vertices[i];
                let v2 = &vertices[(i + 1) % n];
                let e1 = v1 - &apex;
                let e2 = v2 - v1;
                // twice the signed triangle area
                let jac = &(&e1.re * &e2.im) - &(&e1.im * &e2.re);
                if jac.is_zero() {
                    continue;
                }
                for (u, wu) in us.iter().zip(&uw) {
                    for (v, wv) in us.iter().zip(&uw) {
                        // Duffy: x = apex + u e1 + u v e2, dx = |jac| u du dv
                        let z = &(&apex + &e1.scale(u)) + &e2.scale(&(u * v));
                        let w = &(&(wu * wv) * u) * &jac;
                        out.push((z, w));
                    }
                }
            }
            // orientation: make the total weight positive
            let total = out.iter().fold(BigReal::zero(prec), |acc, (_, w)| &acc + w);
            if total.is_sign_negative() {
                for (_, w) in out.iter_mut() {
                    *w = -&*w;
                }
            }
        }
        MeasureKind::Atoms { atoms } => {
            out.extend(atoms.iter().cloned());
        }
    }
    Ok(out)
}

fn annulus_nodes(
    center: &BigComplex,
    rs: &[BigReal],
    rw: &[BigReal],
    angles: &[(BigReal, BigReal)],
    unit: &dyn Fn(&BigReal) -> BigComplex,
    out: &mut Vec<(BigComplex, BigReal)>,
) {
    for (th, tw) in angles {
        let dir = unit(th);
        for (r, w) in rs.iter().zip(rw) {
            out.push((center + &dir.scale(r), &(tw * w) * r));
        }
    }
}

/// Accumulates `Σ_i w_i e^{-B|z_i|²/2} z_i^a conj(z_i)^b` over the node set.
fn accumulate(
    nodes: &[(BigComplex, BigReal)],
    field: &MagneticField,
    degree: usize,
    order: usize,
) -> MomentTable {
    let prec = field.prec();
    let n = degree + 1;
    let collinear = collinear_with_origin(nodes);
    if let Some(dir) = collinear {
        return accumulate_collinear(nodes, field, degree, order, &dir);
    }
    let mut re: Vec<Float> = vec![Float::new(prec); n * n];
    let mut im: Vec<Float> = vec![Float::new(prec); n * n];
    let mut pow_re: Vec<Float> = vec![Float::new(prec); n];
    let mut pow_im: Vec<Float> = vec![Float::new(prec); n];
    let mut wpow_re: Vec<Float> = vec![Float::new(prec); n];
    let mut wpow_im: Vec<Float> = vec![Float::new(prec); n];
    let mut t = Float::new(prec);
    let mut u = Float::new(prec);
    let half_b = field.strength().div_i64(2);
    for (z, w) in nodes {
        let g = &z.norm_sqr() * &half_b;
        let weight = &(-g).exp() * w;
        let (zr, zi) = (z.re.as_float(), z.im.as_float());
        pow_re[0].assign(1);
        pow_im[0].assign(0);
        for a in 1..n {
            let (lo, hi) = pow_re.split_at_mut(a);
            let (lo_i, hi_i) = pow_im.split_at_mut(a);
            // (x + iy)(zr + i zi)
            t.assign(&lo[a - 1] * zr);
            u.assign(&lo_i[a - 1] * zi);
            hi[0].assign(&t - &u);
            t.assign(&lo[a - 1] * zi);
            u.assign(&lo_i[a - 1] * zr);
            hi_i[0].assign(&t + &u);
        }
        for a in 0..n {
            wpow_re[a].assign(&pow_re[a] * weight.as_float());
            wpow_im[a].assign(&pow_im[a] * weight.as_float());
        }
        // upper triangle a <= b: w z^a conj(z^b)
        for a in 0..n {
            for b in a..n {
                let idx = a * n + b;
                // (p + iq)(r - is) = pr + qs + i(qr - ps)
                t.assign(&wpow_re[a] * &pow_re[b]);
                re[idx] += &t;
                t.assign(&wpow_im[a] * &pow_im[b]);
                re[idx] += &t;
                t.assign(&wpow_im[a] * &pow_re[b]);
                im[idx] += &t;
                t.assign(&wpow_re[a] * &pow_im[b]);
                im[idx] -= &t;
            }
        }
    }
    let mut data = vec![BigComplex::zero(prec); n * n];
    for a in 0..n {
        for b in a..n {
            let idx = a * n + b;
            let v = BigComplex::new(
                BigReal::from_float(re[idx].clone()),
                BigReal::from_float(im[idx].clone()),
            );
            data[b * n + a] = v.conj();
            data[idx] = v;
        }
    }
    MomentTable {
        degree,
        data,
        order,
    }
}

/// Unit direction `e^{iφ}` if every node lies on one line through the origin.
fn collinear_with_origin(nodes: &[(BigComplex, BigReal)]) -> Option<BigComplex> {
    let anchor = nodes.iter().map(|(z, _)| z).find(|z| !z.is_zero())?;
    let dir = anchor.scale(&anchor.abs().recip());
    for (z, _) in nodes {
        let cross = &(&z.re * &dir.im) - &(&z.im * &dir.re);
        if !cross.is_zero() {
            let scale = z.abs();
            let tol = scale.mul_f64(2f64.powi(-(z.prec() as i32) + 8));
            if cross.abs() > tol {
                return None;
            }
        }
    }
    Some(dir)
}

/// Nodes `z = t e^{iφ}`: `m_ab = e^{i(a-b)φ} Σ w t^{a+b} e^{-B t²/2}`.
fn accumulate_collinear(
    nodes: &[(BigComplex, BigReal)],
    field: &MagneticField,
    degree: usize,
    order: usize,
    dir: &BigComplex,
) -> MomentTable {
    let prec = field.prec();
    let n = degree + 1;
    let mut hankel: Vec<Float> = vec![Float::new(prec); 2 * n - 1];
    let half_b = field.strength().div_i64(2);
    let mut p = Float::new(prec);
    for (z, w) in nodes {
        // signed coordinate along the line
        let t = &(&z.re * &dir.re) + &(&z.im * &dir.im);
        let weight = &(-(&t.square() * &half_b)).exp() * w;
        p.assign(weight.as_float());
        for h in hankel.iter_mut() {
            *h += &p;
            p *= t.as_float();
        }
    }
    let phases: Vec<BigComplex> = {
        let mut v = Vec::with_capacity(n);
        let mut cur = BigComplex::one(prec);
        for _ in 0..n {
            v.push(cur.clone());
            cur = &cur * dir;
        }
        v
    };
    let mut data = vec![BigComplex::zero(prec); n * n];
    for a in 0..n {
        for b in 0..n {
            let h = BigReal::from_float(hankel[a + b].clone());
            // e^{i(a-b)φ} = dir^a conj(dir)^b
            let phase = &phases[a] * &phases[b].conj();
            data[a * n + b] = phase.scale(&h);
        }
    }
    MomentTable {
        degree,
        data,
        order,
    }
}

/// Quadrature with order doubling until two successive tables agree to
/// `2^{-prec/2}` relative to the Cauchy–Schwarz scale `sqrt(m_aa m_bb)`.
fn quadrature_table(mu: &MeasureSpec, field: &MagneticField, degree: usize) -> Result<MomentTable> {
    let prec = field.prec();
    let info = support_info(mu);
    let reach = info.origin_radius.to_f64();
    let u = field.to_f64() * reach * reach / 2.0;
    let mut order = degree + gaussian_taylor_terms(u, prec / 2) + 8;
    if mu.is_curve() {
        order = order.max(16);
    } else {
        order = (order / 2 + 8).max(16);
    }
    let mu = MeasureSpec {
        kind: with_prec(&mu.kind, prec),
    };
    let tol = 2f64.powi(-(prec as i32) / 2);
    let mut prev = accumulate(&node_set(&mu, order)?, field, degree, order);
    for _ in 0..MAX_DOUBLINGS {
        order *= 2;
        let next = accumulate(&node_set(&mu, order)?, field, degree, order);
        match first_disagreement(&prev, &next, tol) {
            None => return Ok(next),
            Some(_) => prev = next,
        }
    }
    let order_last = prev.order;
    let prev2 = accumulate(&node_set(&mu, order_last / 2)?, field, degree, order_last / 2);
    let (a, b) = first_disagreement(&prev2, &prev, tol).unwrap_or((0, 0));
    Err(Error::QuadratureStall {
        entry: format!("moment ({a},{b})"),
        previous: format!("{:?}", prev2.get(a, b)),
        last: format!("{:?}", prev.get(a, b)),
    })
}

fn first_disagreement(x: &MomentTable, y: &MomentTable, tol: f64) -> Option<(usize, usize)> {
    let n = x.degree + 1;
    let diag: Vec<f64> = (0..n).map(|a| y.get(a, a).abs().to_f64()).collect();
    let diag_big: Vec<BigReal> = (0..n).map(|a| y.get(a, a).abs()).collect();
    for a in 0..n {
        for b in a..n {
            let diff = (x.get(a, b) - y.get(a, b)).abs();
            if diff.is_zero() {
                continue;
            }
            let scale = if diag[a] > 0.0 && diag[b] > 0.0 && diag[a].is_normal() && diag[b].is_normal() {
                BigReal::from_f64((diag[a] * diag[b]).sqrt(), 64)
            } else {
                (&diag_big[a] * &diag_big[b]).sqrt()
            };
            if diff > scale.mul_f64(tol) {
                return Some((a, b));
            }
        }
    }
    None
}

fn with_prec(kind: &MeasureKind, prec: u32) -> MeasureKind {
    let c = |z: &BigComplex| z.with_prec(prec);
    let r = |x: &BigReal| x.with_prec(prec);
    match kind {
        MeasureKind::AreaDisk { center, radius } => MeasureKind::AreaDisk {
            center: c(center),
            radius: r(radius),
        },
        MeasureKind::AreaAnnulus { center, r_in, r_out } => MeasureKind::AreaAnnulus {
            center: c(center),
            r_in: r(r_in),
            r_out: r(r_out),
        },
        MeasureKind::AreaPolygon { vertices } => MeasureKind::AreaPolygon {
            vertices: vertices.iter().map(c).collect(),
        },
        MeasureKind::AreaEllipse { center, a, b, tilt } => MeasureKind::AreaEllipse {
            center: c(center),
            a: r(a),
            b: r(b),
            tilt: r(tilt),
        },
        MeasureKind::ArcCircle { center, radius } => MeasureKind::ArcCircle {
            center: c(center),
            radius: r(radius),
        },
        MeasureKind::ArcSegment { start, end } => MeasureKind::ArcSegment {
            start: c(start),
            end: c(end),
        },
        MeasureKind::ArcEllipse { center, a, b, tilt } => MeasureKind::ArcEllipse {
            center: c(center),
            a: r(a),
            b: r(b),
            tilt: r(tilt),
        },
        MeasureKind::Atoms { atoms } => MeasureKind::Atoms {
            atoms: atoms.iter().map(|(z, m)| (c(z), r(m))).collect(),
        },
    }
}

/// Forces the quadrature path even for shapes with closed forms.
pub fn moment_table_by_quadrature(
    mu: &MeasureSpec,
    field: &MagneticField,
    degree: usize,
) -> Result<MomentTable> {
    quadrature_table(mu, field, degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{landau_basis, LandauIndex};

    const PREC: u32 = 256;

    fn field(b: f64) -> MagneticField {
        MagneticField::from_f64(b, PREC).unwrap()
    }

    fn e(q: u32, k: u32, f: &MagneticField) -> GaussPoly {
        landau_basis(LandauIndex::new(q, k), f)
    }

    #[test]
    fn disk_ground_state_is_incomplete_gamma() {
        let f = field(2.0);
        let mu = MeasureSpec::disk(0.0, 0.0, 1.0, PREC).unwrap();
        let got = integrate_pair(&e(0, 0, &f), &e(0, 0, &f), &mu).unwrap();
        let one = BigReal::one(PREC);
        let expected = &one - &BigReal::from_i64(-1, PREC).exp();
        assert!(got.re.rel_close(&expected, 1e-70));
        assert!(got.im.is_zero());
    }

    #[test]
    fn disk_closed_form_matches_brute_quadrature() {
        let f = field(2.0);
        let mu = MeasureSpec::disk(0.0, 0.0, 1.0, PREC).unwrap();
        let exact = moment_table(&mu, &f, 6).unwrap();
        let quad = moment_table_by_quadrature(&mu, &f, 6).unwrap();
        let tol = 2f64.powi(-(PREC as i32) / 2);
        assert!(first_disagreement(&exact, &quad, tol).is_none());
    }

    #[test]
    fn circle_one_ring() {
        let f = field(2.0);
        let mu = MeasureSpec::circle(0.0, 0.0, 1.0, PREC).unwrap();
        let einv = BigReal::from_i64(-1, PREC).exp();
        for k in 0..6u32 {
            let got = integrate_pair(&e(0, k, &f), &e(0, k, &f), &mu).unwrap();
            let expected = &einv.mul_i64(2) / &BigReal::factorial(k, PREC);
            assert!(got.re.rel_close(&expected, 1e-70), "k={k}");
        }
        let quad = moment_table_by_quadrature(&mu, &f, 8).unwrap();
        let exact = moment_table(&mu, &f, 8).unwrap();
        assert!(first_disagreement(&exact, &quad, 2f64.powi(-(PREC as i32) / 2)).is_none());
    }

    #[test]
    fn radial_measures_decouple_angular_momenta() {
        let f = field(2.0);
        for mu in [
            MeasureSpec::disk(0.0, 0.0, 1.3, PREC).unwrap(),
            MeasureSpec::annulus(0.0, 0.0, 0.4, 1.0, PREC).unwrap(),
            MeasureSpec::circle(0.0, 0.0, 0.8, PREC).unwrap(),
        ] {
            let v = integrate_pair(&e(0, 0, &f), &e(0, 1, &f), &mu).unwrap();
            assert!(v.is_zero());
        }
    }

    #[test]
    fn support_info_examples() {
        let s = support_info(&MeasureSpec::disk(0.0, 0.0, 1.0, PREC).unwrap());
        assert_eq!(s.bounding_radius.to_f64(), 1.0);
        assert!(s.centroid.is_zero());
        let s = support_info(&MeasureSpec::segment(-1.0, 0.0, 1.0, 0.0, PREC).unwrap());
        assert_eq!(s.bounding_radius.to_f64(), 1.0);
        assert!(s.centroid.is_zero());
        let s = support_info(&MeasureSpec::square(1.0, 0.0, 0.0, PREC).unwrap());
        assert!((s.bounding_radius.to_f64() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn validation_errors() {
        assert!(MeasureSpec::disk(0.0, 0.0, 0.0, PREC).is_err());
        assert!(MeasureSpec::segment(1.0, 1.0, 1.0, 1.0, PREC).is_err());
        assert!(MeasureSpec::ellipse_arc(0.0, 0.0, 0.5, 1.0, PREC).is_err());
        assert!(MeasureSpec::annulus(0.0, 0.0, 1.0, 0.5, PREC).is_err());
        assert!(MeasureSpec::polygon(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)], PREC).is_err());
        assert!(MeasureSpec::atoms(&[((0.0, 0.0), -1.0)], PREC).is_err());
    }

    #[test]
    fn parse_grammar() {
        let p = |s: &str| MeasureSpec::parse(s, PREC).unwrap();
        assert!(matches!(p("disk:0,0,1").kind(), MeasureKind::AreaDisk { .. }));
        assert!(matches!(p("circle:0,0,2").kind(), MeasureKind::ArcCircle { .. }));
        assert!(matches!(p("segment:-1,0,1,0").kind(), MeasureKind::ArcSegment { .. }));
        assert!(matches!(p("ellipse:0,0,1,0.5").kind(), MeasureKind::AreaEllipse { .. }));
        assert!(matches!(p("ellipse:0,0,1,0.5,arc").kind(), MeasureKind::ArcEllipse { .. }));
        assert!(matches!(p("square:1").kind(), MeasureKind::AreaPolygon { .. }));
        assert!(matches!(p("square:2,1,1").kind(), MeasureKind::AreaPolygon { .. }));
        assert!(matches!(p("polygon:0,0;1,0;0,1").kind(), MeasureKind::AreaPolygon { .. }));
        assert!(matches!(p("annulus:0,0,0.5,1").kind(), MeasureKind::AreaAnnulus { .. }));
        assert!(matches!(p("atoms:0,1,1;0.5,0,2").kind(), MeasureKind::Atoms { .. }));
        assert!(MeasureSpec::parse("blob:1", PREC).is_err());
        assert!(MeasureSpec::parse("disk:1,2", PREC).is_err());
        assert!(MeasureSpec::parse("disk", PREC).is_err());
    }

    #[test]
    fn polygon_and_ellipse_areas() {
        let sq = MeasureSpec::square(2.0, 0.3, -0.1, PREC).unwrap();
        assert!((sq.total_mass().to_f64() - 4.0).abs() < 1e-14);
        // quadrature of the constant-weight moment at B -> tiny reproduces the area
        let f = MagneticField::from_f64(1e-30, PREC).unwrap();
        let t = moment_table(&sq, &f, 0).unwrap();
        assert!((t.get(0, 0).re.to_f64() - 4.0).abs() < 1e-12);
        let el = MeasureSpec::ellipse_area(0.0, 0.0, 1.0, 0.5, PREC).unwrap();
        let t = moment_table(&el, &f, 0).unwrap();
        assert!((t.get(0, 0).re.to_f64() - std::f64::consts::PI * 0.5).abs() < 1e-12);
        let arc = MeasureSpec::ellipse_arc(0.0, 0.0, 1.0, 1.0, PREC).unwrap();
        assert!((arc.total_mass().to_f64() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn collinear_fast_path_matches_general_path() {
        let f = field(2.0);
        let seg = MeasureSpec::segment(-1.0, 0.0, 1.0, 0.0, PREC).unwrap();
        let order = 60;
        let nodes = node_set(&seg, order).unwrap();
        let fast = accumulate(&nodes, &f, 10, order);
        // perturb nothing but force the general accumulation
        let n = 11;
        let mut general = vec![BigComplex::zero(PREC); n * n];
        for (z, w) in &nodes {
            let g = (&z.norm_sqr() * f.strength()).div_i64(-2).exp();
            for a in 0..n {
                for b in 0..n {
                    let term = (&z.powi(a as u32) * &z.conj().powi(b as u32)).scale(&(&g * w));
                    general[a * n + b] = &general[a * n + b] + &term;
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let d = (fast.get(a, b) - &general[a * n + b]).abs().to_f64();
                assert!(d < 1e-60, "({a},{b})");
            }
        }
    }

    #[test]
    fn off_center_disk_quadrature_agrees_with_shifted_closed_form() {
        // ∫_{|z-c|<R} e^{-B|z|²/2} dm for the ground state: compare against a
        // fine brute polar sum about the center
        let f = field(1.0);
        let mu = MeasureSpec::disk(0.4, -0.2, 0.7, PREC).unwrap();
        let t = moment_table(&mu, &f, 2).unwrap();
        let m00 = t.get(0, 0).re.to_f64();
        let (cx, cy, r) = (0.4f64, -0.2f64, 0.7f64);
        let (nr, nt) = (400, 400);
        let mut brute = 0.0;
        for i in 0..nr {
            let rr = (i as f64 + 0.5) / nr as f64 * r;
            for j in 0..nt {
                let th = (j as f64 + 0.5) / nt as f64 * std::f64::consts::TAU;
                let (x, y) = (cx + rr * th.cos(), cy + rr * th.sin());
                brute += (-(x * x + y * y) / 2.0).exp() * rr;
            }
        }
        brute *= (r / nr as f64) * (std::f64::consts::TAU / nt as f64);
        assert!((m00 - brute).abs() < 1e-5, "{m00} vs {brute}");
    }
}
