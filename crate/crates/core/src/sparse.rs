//! Compressed sparse row operators and Jacobi-preconditioned conjugate
//! gradients, including the deflated solve for the singular zero-mean
//! Poisson problem of the nonlocal chemical equations.
//!
//! Operators are assembled in volume-integrated form: the stiffness row
//! of cell `i` approximates `-integral_cell div(D grad u)`, so every
//! operator built here is symmetric and right-hand sides carry a cell
//! volume factor.

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Row-compressed sparse symmetric operator.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A x`, sequential and deterministic.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.col_idx[k], self.vals[k]))
        })
    }

    /// Largest asymmetry `|a_ij - a_ji|` relative to nothing (absolute).
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for (i, j, v) in self.entries() {
            if j < i {
                continue;
            }
            let mut vt = 0.0;
            for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                if self.col_idx[k] == i {
                    vt = self.vals[k];
                }
            }
            defect = defect.max((v - vt).abs());
        }
        defect
    }
}

/// Triplet accumulator; duplicate entries are summed at build time in a
/// deterministic (row, col) order.
#[derive(Debug, Clone)]
pub struct SparseBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> SparseBuilder {
        SparseBuilder {
            n,
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    pub fn add_diagonal(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.n);
        for (i, &v) in d.iter().enumerate() {
            self.entries.push((i, i, v));
        }
    }

    pub fn build(mut self) -> SparseOperator {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_counts = vec![0usize; self.n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_counts[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_counts[i + 1] += row_counts[i];
        }
        SparseOperator {
            n: self.n,
            row_ptr: row_counts,
            col_idx,
            vals,
        }
    }
}

/// Volume-integrated two-point stiffness for face diffusivities `d_f`:
/// row `i` gets `+A_f d_f / dist` on the diagonal and the negative on
/// the neighbor column, per incident face. Symmetric positive
/// semidefinite with constants in the nullspace.
pub fn stiffness_builder(mesh: &Mesh, face_coeffs: &[f64]) -> SparseBuilder {
    assert_eq!(face_coeffs.len(), mesh.n_faces());
    let mut builder = SparseBuilder::new(mesh.n_cells());
    for (f, &d) in mesh.faces().iter().zip(face_coeffs) {
        let w = f.area * d / f.distance;
        builder.add(f.owner, f.owner, w);
        builder.add(f.neighbor, f.neighbor, w);
        builder.add(f.owner, f.neighbor, -w);
        builder.add(f.neighbor, f.owner, -w);
    }
    builder
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite operator. Converges when `||Ax-b|| <= tol ||b||`.
pub fn solve_spd(
    a: &SparseOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    cg(a, b, x0, tol, max_iter, None)
}

/// Deflated conjugate gradients for a symmetric positive semidefinite
/// operator whose nullspace is the constants (pure Neumann Laplacian).
///
/// The right-hand side must be compatible (componentwise mean zero up
/// to round-off); the iterate is projected to volume-weighted mean zero
/// after every update, and the returned solution satisfies
/// `|sum x_i V_i| / sum V_i <= 1e-12` scaled by the solution size.
pub fn solve_zero_mean(
    a: &SparseOperator,
    b: &[f64],
    volumes: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    assert_eq!(volumes.len(), b.len());
    let b_inf = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean_b = b.iter().sum::<f64>() / b.len() as f64;
    if b_inf > 0.0 && mean_b.abs() > 1e-8 * b_inf {
        return Err(Error::IncompatibleRhs { mean: mean_b });
    }
    cg(a, b, x0, tol, max_iter, Some(volumes))
}

fn project_zero_mean(x: &mut [f64], volumes: &[f64], total_volume: f64) {
    let mean = dot(x, volumes) / total_volume;
    for xi in x.iter_mut() {
        *xi -= mean;
    }
}

fn cg(
    a: &SparseOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    deflate: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n();
    assert_eq!(b.len(), n);
    assert!(tol > 0.0, "tolerance must be positive");

    let total_volume = deflate.map(|v| v.iter().sum::<f64>()).unwrap_or(0.0);
    let norm_b = norm(b);
    let mut x = match x0 {
        Some(x0) => {
            assert_eq!(x0.len(), n);
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    if let Some(vols) = deflate {
        project_zero_mean(&mut x, vols, total_volume);
    }
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }

    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if norm(&r) <= tol * norm_b {
        let res = norm(&r) / norm_b;
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                residual: res,
            },
        ));
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::IndefiniteOperator(it));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if let Some(vols) = deflate {
            project_zero_mean(&mut x, vols, total_volume);
        }
        let res = norm(&r) / norm_b;
        if res <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: res,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: norm(&r) / norm_b,
    })
}

/// Default relative tolerance of the chemical and density solves.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default iteration cap as a multiple of the unknown count.
pub fn default_max_iter(n: usize) -> usize {
    10 * n.max(100)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn to_dense(a: &SparseOperator) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(a.n(), a.n());
        for (i, j, v) in a.entries() {
            m[(i, j)] += v;
        }
        m
    }

    #[test]
    fn builder_merges_duplicates() {
        let mut b = SparseBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.0);
        b.add(1, 0, -1.0);
        b.add(0, 1, -1.0);
        b.add(1, 1, 3.0);
        let a = b.build();
        let d = to_dense(&a);
        assert_relative_eq!(d[(0, 0)], 3.0);
        assert_relative_eq!(d[(1, 1)], 3.0);
        assert_relative_eq!(d[(0, 1)], -1.0);
        assert_eq!(a.nnz(), 4);
        assert!(a.symmetry_defect() < 1e-15);
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let mut b = SparseBuilder::new(5);
        b.add_diagonal(&vec![1.0; 5]);
        let a = b.build();
        let rhs = vec![3.0, -1.0, 0.5, 2.0, 9.0];
        let (x, stats) = solve_spd(&a, &rhs, None, 1e-12, 10).unwrap();
        assert_eq!(stats.iterations, 1);
        for (xi, bi) in x.iter().zip(&rhs) {
            assert_relative_eq!(xi, bi, epsilon = 1e-12);
        }
    }

    #[test]
    fn helmholtz_preserves_constants() {
        // (-Laplacian + I) applied to constants is the identity, so the
        // volume-integrated system (L + diag(V)) x = V solves to ones.
        let mesh = build_box_mesh(1, &[3.0], &[3]).unwrap();
        let mut builder = stiffness_builder(&mesh, &vec![1.0; mesh.n_faces()]);
        builder.add_diagonal(&mesh.volumes());
        let a = builder.build();
        let b = mesh.volumes();
        let (x, _) = solve_spd(&a, &b, None, 1e-12, 100).unwrap();
        for xi in x {
            assert_relative_eq!(xi, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn random_spd_matches_dense_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 20;
        let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let spd = &r.transpose() * &r + DMatrix::identity(n, n) * n as f64;

        let mut builder = SparseBuilder::new(n);
        for i in 0..n {
            for j in 0..n {
                builder.add(i, j, spd[(i, j)]);
            }
        }
        let a = builder.build();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();

        let (x, stats) = solve_spd(&a, &b, None, 1e-10, 1000).unwrap();
        let dense_x = spd
            .clone()
            .lu()
            .solve(&DVector::from_column_slice(&b))
            .unwrap();
        for i in 0..n {
            assert!((x[i] - dense_x[i]).abs() < 1e-8, "component {i}");
        }
        assert!(stats.residual <= 1e-10);
    }

    #[test]
    fn indefinite_operator_detected() {
        let mut b = SparseBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(1, 1, -1.0);
        let a = b.build();
        let err = solve_spd(&a, &[0.0, 1.0], None, 1e-10, 10).unwrap_err();
        assert!(matches!(err, Error::IndefiniteOperator(_)));
    }

    #[test]
    fn no_convergence_reported() {
        // A tiny iteration budget on a nontrivial system must fail loudly.
        let mesh = build_box_mesh(2, &[1.0, 1.0], &[8, 8]).unwrap();
        let mut builder = stiffness_builder(&mesh, &vec![1.0; mesh.n_faces()]);
        builder.add_diagonal(&vec![1e-6; mesh.n_cells()]);
        let a = builder.build();
        let b: Vec<f64> = (0..mesh.n_cells()).map(|i| (i % 7) as f64 - 3.0).collect();
        let err = solve_spd(&a, &b, None, 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn zero_mean_solve_matches_pseudoinverse() {
        let mesh = build_box_mesh(1, &[4.0], &[4]).unwrap();
        let a = stiffness_builder(&mesh, &vec![1.0; mesh.n_faces()]).build();
        let vol = mesh.volumes();
        // Mean-free source pattern scaled by cell volumes.
        let b: Vec<f64> = [1.0, -1.0, -1.0, 1.0]
            .iter()
            .zip(&vol)
            .map(|(s, v)| s * v)
            .collect();

        let (x, _) = solve_zero_mean(&a, &b, &vol, None, 1e-12, 1000).unwrap();

        let dense = to_dense(&a);
        let pinv = dense.pseudo_inverse(1e-12).unwrap();
        let mut oracle = (&pinv * DVector::from_column_slice(&b))
            .iter()
            .copied()
            .collect::<Vec<f64>>();
        // Align the oracle to the same volume-weighted gauge.
        let total_v: f64 = vol.iter().sum();
        let mean: f64 = oracle.iter().zip(&vol).map(|(o, v)| o * v).sum::<f64>() / total_v;
        for o in oracle.iter_mut() {
            *o -= mean;
        }
        for i in 0..4 {
            assert!((x[i] - oracle[i]).abs() < 1e-8, "component {i}");
        }

        let weighted_mean: f64 = x.iter().zip(&vol).map(|(xi, v)| xi * v).sum::<f64>() / total_v;
        assert!(weighted_mean.abs() < 1e-12);
    }

    #[test]
    fn zero_mean_rejects_incompatible_rhs() {
        let mesh = build_box_mesh(1, &[4.0], &[4]).unwrap();
        let a = stiffness_builder(&mesh, &vec![1.0; mesh.n_faces()]).build();
        let vol = mesh.volumes();
        let b = vec![1.0, 1.0, 1.0, 1.0];
        assert!(matches!(
            solve_zero_mean(&a, &b, &vol, None, 1e-10, 100),
            Err(Error::IncompatibleRhs { .. })
        ));
    }

    #[test]
    fn zero_mean_zero_rhs_gives_zero() {
        let mesh = build_box_mesh(1, &[4.0], &[4]).unwrap();
        let a = stiffness_builder(&mesh, &vec![1.0; mesh.n_faces()]).build();
        let vol = mesh.volumes();
        let (x, stats) = solve_zero_mean(&a, &[0.0; 4], &vol, None, 1e-10, 100).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn stiffness_is_symmetric_psd_with_constant_nullspace() {
        for mesh in [
            build_box_mesh(2, &[1.0, 1.0], &[7, 7]).unwrap(),
            build_box_mesh(3, &[1.0, 2.0, 1.0], &[4, 3, 4]).unwrap(),
        ] {
            let a = stiffness_builder(&mesh, &vec![1.0; mesh.n_faces()]).build();
            assert!(a.symmetry_defect() < 1e-12);

            let ones = vec![1.0; mesh.n_cells()];
            let mut out = vec![0.0; mesh.n_cells()];
            a.matvec(&ones, &mut out);
            assert!(out.iter().all(|&v| v.abs() < 1e-12));

            let dense = to_dense(&a);
            let eig = dense.symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
        }
    }

    #[test]
    fn cg_iterations_grow_at_most_linearly_in_resolution() {
        // Helmholtz iteration counts should grow no faster than O(1/h),
        // asserted with generous slack.
        let mut iters = Vec::new();
        for n in [16usize, 32, 64] {
            let mesh = build_box_mesh(1, &[1.0], &[n]).unwrap();
            let mut builder = stiffness_builder(&mesh, &vec![1.0; mesh.n_faces()]);
            builder.add_diagonal(&mesh.volumes());
            let a = builder.build();
            let b: Vec<f64> = mesh
                .cells()
                .iter()
                .map(|c| c.volume * (10.0 * c.center[0]).sin())
                .collect();
            let (_, stats) = solve_spd(&a, &b, None, 1e-10, 10 * n).unwrap();
            iters.push(stats.iterations);
        }
        assert!(iters[2] <= 3 * 4 * iters[0].max(1));
    }
}
