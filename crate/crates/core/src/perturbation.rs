//! Finite-dimensional checks of the abstract operator facts behind the
//! cluster asymptotics: monotonicity of inverses under restriction of the
//! form domain, and eigenvalue clusters of `T - W` near an isolated
//! eigenvalue `Λ` of `T`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Orthonormal columns spanning the range of a random `rows × cols` matrix.
fn random_frame(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    random_matrix(rng, rows, cols).qr().q()
}

fn eigenvalues_asc(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// A positive definite form on `ℝ^d` and nested subspaces `V_b ⊂ V_a`,
/// each given by orthonormal columns.
#[derive(Clone, Debug)]
pub struct FormPair {
    pub m: DMatrix<f64>,
    pub frame_a: DMatrix<f64>,
    pub frame_b: DMatrix<f64>,
}

impl FormPair {
    pub fn new(m: DMatrix<f64>, frame_a: DMatrix<f64>, frame_b: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d || frame_a.nrows() != d || frame_b.nrows() != d {
            return Err(Error::InvalidArgument("form and frames disagree in dimension".into()));
        }
        if (&m - m.transpose()).amax() > 1e-12 * m.amax() {
            return Err(Error::InvalidArgument("form matrix is not symmetric".into()));
        }
        if eigenvalues_asc(&m)[0] <= 0.0 {
            return Err(Error::InvalidArgument("form matrix is not positive definite".into()));
        }
        for f in [&frame_a, &frame_b] {
            let gram = f.transpose() * f;
            if (gram - DMatrix::identity(f.ncols(), f.ncols())).amax() > 1e-10 {
                return Err(Error::InvalidArgument("frame columns are not orthonormal".into()));
            }
        }
        let inside = &frame_a * (frame_a.transpose() * &frame_b);
        if (inside - &frame_b).amax() > 1e-10 {
            return Err(Error::InvalidArgument("V_b is not contained in V_a".into()));
        }
        Ok(FormPair { m, frame_a, frame_b })
    }

    /// Random instance in dimension `d`: `M = G Gᵀ + m₀ I`, `V_a` of random
    /// dimension, `V_b` a random subspace of it.
    pub fn random(seed: u64, d: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_matrix(&mut rng, d, d);
        let m0 = rng.gen_range(0.05..1.0);
        let m = &g * g.transpose() + DMatrix::identity(d, d) * m0;
        let ka = rng.gen_range(2..=d);
        let kb = rng.gen_range(1..=ka);
        let frame_a = random_frame(&mut rng, d, ka);
        let inner = random_frame(&mut rng, ka, kb);
        let frame_b = &frame_a * inner;
        FormPair::new(m, frame_a, frame_b).expect("valid by construction")
    }

    /// Instance whose form leaves `V_b` invariant, so that `Mx ∈ V_b` for
    /// every `x ∈ V_b`.
    pub fn random_invariant(seed: u64, d: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = random_frame(&mut rng, d, d);
        let ka = rng.gen_range(2..=d);
        let kb = rng.gen_range(1..ka);
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| rng.gen_range(0.1..3.0)));
        let m = &basis * diag * basis.transpose();
        // V_b from eigenvectors, V_a adds a random mix of the rest
        let frame_b = basis.columns(0, kb).into_owned();
        let rest = basis.columns(kb, d - kb).into_owned();
        let mix = random_frame(&mut rng, d - kb, ka - kb);
        let mut frame_a = DMatrix::zeros(d, ka);
        frame_a.columns_mut(0, kb).copy_from(&frame_b);
        frame_a.columns_mut(kb, ka - kb).copy_from(&(rest * mix));
        FormPair::new(m, frame_a, frame_b).expect("valid by construction")
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `F A⁻¹ Fᵀ` with `A = Fᵀ M F`, i.e. the inverse of the compression
    /// extended by zero.
    fn extended_inverse(&self, frame: &DMatrix<f64>) -> DMatrix<f64> {
        let a = frame.transpose() * &self.m * frame;
        let inv = a.try_inverse().expect("compression of a positive form");
        frame * inv * frame.transpose()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FormReport {
    pub dim: usize,
    /// Smallest eigenvalue of `J_a A⁻¹ J_a* - J_b B⁻¹ J_b*`.
    pub min_eigenvalue: f64,
    /// `‖M⁻¹‖`, the natural scale of both inverses.
    pub scale: f64,
    /// `max |Bx - Ax|` over a basis of `V_b` when `M` leaves `V_b` invariant.
    pub invariant_residual: Option<f64>,
    pub passes: bool,
}

pub const FORM_TOL: f64 = 1e-12;

pub fn check_form_domination(fp: &FormPair) -> FormReport {
    let inv_a = fp.extended_inverse(&fp.frame_a);
    let inv_b = fp.extended_inverse(&fp.frame_b);
    let diff = inv_a - inv_b;
    let min_eigenvalue = eigenvalues_asc(&diff)[0];
    let scale = 1.0 / eigenvalues_asc(&fp.m)[0];
    let (fa, fb) = (&fp.frame_a, &fp.frame_b);
    let mfb = &fp.m * fb;
    let leak = (&mfb - fb * (fb.transpose() * &mfb)).amax();
    let invariant_residual = (leak <= 1e-10 * fp.m.amax()).then(|| {
        // A and B as operators on the ambient space: P_a M P_a, P_b M P_b
        let a_op = fa * (fa.transpose() * &fp.m * fa) * fa.transpose();
        let b_op = fb * (fb.transpose() * &fp.m * fb) * fb.transpose();
        (a_op * fb - b_op * fb).amax()
    });
    let passes = min_eigenvalue >= -FORM_TOL * scale
        && invariant_residual.map_or(true, |r| r <= 1e-10 * fp.m.amax());
    FormReport {
        dim: fp.dim(),
        min_eigenvalue,
        scale,
        invariant_residual,
        passes,
    }
}

/// `T = Λ P ⊕ D` on `ℝ^{m + k}` and a perturbation `W ⪰ 0`. The first `m`
/// coordinates span `ran P`.
#[derive(Clone, Debug)]
pub struct ClusterModel {
    pub lambda: f64,
    pub tau: f64,
    pub rank: usize,
    pub t: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

impl ClusterModel {
    pub fn new(lambda: f64, tau: f64, rank: usize, d: &[f64], w: DMatrix<f64>) -> Result<Self> {
        let n = rank + d.len();
        if w.nrows() != n || w.ncols() != n {
            return Err(Error::InvalidArgument("W has the wrong dimension".into()));
        }
        if tau <= 0.0 {
            return Err(Error::InvalidArgument("gap τ must be positive".into()));
        }
        if d.iter().any(|&x| (x - lambda).abs() < 2.0 * tau) {
            return Err(Error::InvalidArgument(
                "spectrum of D must avoid (Λ - 2τ, Λ + 2τ)".into(),
            ));
        }
        let ew = eigenvalues_asc(&w);
        if ew[0] < -1e-14 * ew[n - 1].abs().max(1.0) {
            return Err(Error::InvalidArgument("W must be positive semidefinite".into()));
        }
        let mut t = DMatrix::zeros(n, n);
        for i in 0..rank {
            t[(i, i)] = lambda;
        }
        for (j, &x) in d.iter().enumerate() {
            t[(rank + j, rank + j)] = x;
        }
        Ok(ClusterModel {
            lambda,
            tau,
            rank,
            t,
            w,
        })
    }

    /// Random model; with `block_diagonal` the perturbation does not couple
    /// `ran P` to its complement.
    pub fn random(seed: u64, block_diagonal: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = rng.gen_range(1.0..5.0);
        let tau = rng.gen_range(0.1..0.5);
        let rank = rng.gen_range(2..=6);
        let k = rng.gen_range(2..=6);
        let d: Vec<f64> = (0..k)
            .map(|_| {
                let off = rng.gen_range(2.0 * tau + 0.01..2.0 * tau + 3.0);
                if rng.gen_bool(0.5) {
                    lambda + off
                } else {
                    lambda - off
                }
            })
            .collect();
        let n = rank + k;
        let mut w = if block_diagonal {
            let gp = random_matrix(&mut rng, rank, rank);
            let gq = random_matrix(&mut rng, k, k);
            let mut w = DMatrix::zeros(n, n);
            w.view_mut((0, 0), (rank, rank)).copy_from(&(gp.transpose() * &gp));
            w.view_mut((rank, rank), (k, k)).copy_from(&(gq.transpose() * &gq));
            w
        } else {
            let g = random_matrix(&mut rng, n, n);
            g.transpose() * g
        };
        // scale to ‖W‖ = τ/2
        let norm = eigenvalues_asc(&w)[n - 1];
        w *= 0.5 * tau / norm;
        ClusterModel::new(lambda, tau, rank, &d, w).expect("valid by construction")
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    fn coupling_norm(&self) -> f64 {
        let k = self.dim() - self.rank;
        self.w.view((0, self.rank), (self.rank, k)).amax()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    /// Eigenvalues of `T - W` in `(Λ - τ, Λ)`, closest to `Λ` first.
    pub cluster: Vec<f64>,
    /// Nonzero eigenvalues of `PWP` on `ran P` below `τ`, ascending, so that
    /// entry `n` pairs with `cluster[n]`.
    pub compression: Vec<f64>,
    /// `max |Λ - λ_n - μ_n|` when `W` does not couple `ran P`; `None` otherwise.
    pub exactness_error: Option<f64>,
    pub weyl_norm: f64,
    pub weyl_max_shift: f64,
    /// Eigenvalues of `T - W` in `(Λ, Λ + 2τ - ‖W‖)`.
    pub above: usize,
    pub passes: bool,
}

/// Checks block exactness, Weyl stability under an off-diagonal coupling of
/// norm `weyl_norm`, and the absence of spectrum just above `Λ`.
pub fn check_cluster_accumulation(cm: &ClusterModel, weyl_norm: f64, seed: u64) -> Result<ClusterReport> {
    let n = cm.dim();
    let w_norm = eigenvalues_asc(&cm.w)[n - 1];
    if w_norm >= cm.tau {
        return Err(Error::Precondition(format!(
            "‖W‖ = {w_norm} must be below τ = {}",
            cm.tau
        )));
    }
    let tw = &cm.t - &cm.w;
    let spec = eigenvalues_asc(&tw);
    let mut cluster: Vec<f64> = spec
        .iter()
        .copied()
        .filter(|&x| x > cm.lambda - cm.tau && x < cm.lambda)
        .collect();
    cluster.sort_by(|a, b| b.total_cmp(a));
    let pwp = cm.w.view((0, 0), (cm.rank, cm.rank)).into_owned();
    let mut compression = eigenvalues_asc(&pwp);
    compression.retain(|&m| m > 0.0 && m < cm.tau);
    let tol = 1e-12 * (1.0 + cm.lambda.abs());
    let compression_cut: Vec<f64> = compression.iter().copied().filter(|&m| m > tol).collect();
    let exactness_error = (cm.coupling_norm() == 0.0).then(|| {
        if compression_cut.len() != cluster.len() {
            return f64::INFINITY;
        }
        cluster
            .iter()
            .zip(&compression_cut)
            .map(|(l, m)| (cm.lambda - l - m).abs())
            .fold(0.0, f64::max)
    });
    let above = spec
        .iter()
        .filter(|&&x| x > cm.lambda + tol && x < cm.lambda + 2.0 * cm.tau - w_norm)
        .count();
    // off-diagonal coupling between ran P and its complement
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = n - cm.rank;
    let block = random_matrix(&mut rng, cm.rank, k);
    let mut o = DMatrix::zeros(n, n);
    o.view_mut((0, cm.rank), (cm.rank, k)).copy_from(&block);
    o.view_mut((cm.rank, 0), (k, cm.rank)).copy_from(&block.transpose());
    let onorm = eigenvalues_asc(&o).iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if onorm > 0.0 {
        o *= weyl_norm / onorm;
    }
    let moved = eigenvalues_asc(&(&tw + &o));
    let weyl_max_shift = spec
        .iter()
        .zip(&moved)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let passes = exactness_error.map_or(true, |e| e <= 1e-10)
        && weyl_max_shift <= weyl_norm * (1.0 + 1e-9) + 1e-14
        && above == 0;
    Ok(ClusterReport {
        cluster,
        compression: compression_cut,
        exactness_error,
        weyl_norm,
        weyl_max_shift,
        above,
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_subspaces_give_zero() {
        let fp = FormPair::random(3, 6);
        let same = FormPair::new(fp.m.clone(), fp.frame_a.clone(), fp.frame_a.clone()).unwrap();
        let rep = check_form_domination(&same);
        assert!(rep.min_eigenvalue.abs() < 1e-12);
        assert!(rep.passes);
    }

    #[test]
    fn hand_computed_three_by_three() {
        let m = DMatrix::identity(3, 3);
        let fa = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let fb = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let fp = FormPair::new(m, fa, fb).unwrap();
        let diff = fp.extended_inverse(&fp.frame_a) - fp.extended_inverse(&fp.frame_b);
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[0.0, 1.0, 0.0]));
        assert!((diff - want).amax() < 1e-15);
        assert!(check_form_domination(&fp).passes);
    }

    /// Brute-force oracle: the quadratic form of the difference is
    /// nonnegative on many random vectors.
    #[test]
    fn random_instances_are_ordered() {
        for seed in 0..100u64 {
            let d = 4 + (seed as usize % 9);
            let fp = FormPair::random(seed, d);
            let rep = check_form_domination(&fp);
            assert!(rep.passes, "seed {seed}: {rep:?}");
            let diff = fp.extended_inverse(&fp.frame_a) - fp.extended_inverse(&fp.frame_b);
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            for _ in 0..20 {
                let x = random_matrix(&mut rng, d, 1);
                let q = (x.transpose() * &diff * &x)[(0, 0)];
                assert!(q >= -1e-12 * rep.scale * x.norm_squared());
            }
        }
    }

    #[test]
    fn invariant_subspace_identity() {
        for seed in 0..20 {
            let fp = FormPair::random_invariant(seed, 7);
            let rep = check_form_domination(&fp);
            assert!(rep.invariant_residual.unwrap() < 1e-10, "{rep:?}");
        }
    }

    #[test]
    fn rejects_non_nested_frames() {
        let m = DMatrix::identity(3, 3);
        let fa = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let fb = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!(FormPair::new(m, fa, fb).is_err());
    }

    #[test]
    fn diagonal_cluster_example() {
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[0.1, 0.01, 0.001, 0.0]));
        let cm = ClusterModel::new(1.0, 1.0, 3, &[5.0], w).unwrap();
        let rep = check_cluster_accumulation(&cm, 1e-4, 1).unwrap();
        let want = [0.999, 0.99, 0.9];
        assert_eq!(rep.cluster.len(), 3);
        for (got, want) in rep.cluster.iter().zip(want) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(rep.exactness_error.unwrap() < 1e-14);
        assert!(rep.weyl_max_shift <= 1e-4 * (1.0 + 1e-9));
        assert!(rep.passes);
    }

    #[test]
    fn coupled_perturbation_moves_by_at_most_its_norm() {
        // dense eigensolver oracle on the coupled example
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[0.1, 0.01, 0.001, 0.0]));
        let cm = ClusterModel::new(1.0, 1.0, 3, &[5.0], w.clone()).unwrap();
        let mut o = DMatrix::zeros(4, 4);
        for i in 0..3 {
            o[(i, 3)] = 1e-4 / 3f64.sqrt();
            o[(3, i)] = 1e-4 / 3f64.sqrt();
        }
        let base = eigenvalues_asc(&(&cm.t - &w));
        let moved = eigenvalues_asc(&(&cm.t - &w + o));
        for (a, b) in base.iter().zip(&moved) {
            assert!((a - b).abs() <= 1e-4);
        }
    }

    #[test]
    fn zero_perturbation_has_no_cluster() {
        let cm = ClusterModel::new(1.0, 1.0, 3, &[5.0], DMatrix::zeros(4, 4)).unwrap();
        let rep = check_cluster_accumulation(&cm, 1e-4, 2).unwrap();
        assert!(rep.cluster.is_empty());
        assert!(rep.passes);
    }

    #[test]
    fn random_models() {
        for seed in 0..50 {
            for block in [true, false] {
                let cm = ClusterModel::random(seed, block);
                let rep = check_cluster_accumulation(&cm, 1e-4, seed + 7).unwrap();
                assert!(rep.passes, "seed {seed} block {block}: {rep:?}");
                assert_eq!(rep.exactness_error.is_some(), block);
            }
        }
    }

    #[test]
    fn oversized_perturbation_rejected() {
        let w = DMatrix::identity(4, 4) * 2.0;
        let cm = ClusterModel::new(1.0, 1.0, 3, &[5.0], w).unwrap();
        assert!(check_cluster_accumulation(&cm, 1e-4, 0).is_err());
    }
}
