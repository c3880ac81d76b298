//! Chemical-signal solves: elliptic screened, backward-Euler parabolic
//! and nonlocal zero-mean Poisson, all driven by the current cell
//! density through a production function.
//!
//! Within a time step the chemicals are always computed from the old
//! density, which keeps the full step linear and decouples the chemical
//! solves from the density update.

use crate::error::Result;
use crate::field::Field;
use crate::mesh::Mesh;
use crate::sparse::{solve_spd, solve_zero_mean, stiffness_builder, SolveStats};

/// Structural case of the chemical equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemicalKind {
    /// `(-Laplacian + 1) z = f(u)`.
    Elliptic,
    /// `tau z_t = Laplacian z - z + f(u)`, backward Euler in time.
    Parabolic,
    /// `-Laplacian z = f(u) - mean(f(u))` with zero-mean `z`.
    NonlocalPoisson,
}

/// Screened elliptic solve `(-Laplacian + I) z = f(u)` with zero-flux
/// boundaries. The system is an M-matrix, so `z >= 0` whenever the
/// production is nonnegative.
pub fn solve_elliptic_chemical(
    u: &Field,
    f: impl Fn(f64) -> f64,
    mesh: &Mesh,
    guess: Option<&Field>,
    tol: f64,
    max_iter: usize,
) -> Result<(Field, SolveStats)> {
    u.check_binding(mesh);
    let mut builder = stiffness_builder(mesh, &vec![1.0; mesh.n_faces()]);
    builder.add_diagonal(&mesh.volumes());
    let a = builder.build();
    let b: Vec<f64> = u
        .values()
        .iter()
        .zip(mesh.cells())
        .map(|(&ui, c)| c.volume * f(ui))
        .collect();
    let (z, stats) = solve_spd(&a, &b, guess.map(|g| g.values()), tol, max_iter)?;
    Ok((Field::from_values(mesh, z), stats))
}

/// One backward-Euler step of the parabolic chemical equation:
/// `(I/dt - Laplacian + I) z_new = z_old/dt + f(u)`.
pub fn step_parabolic_chemical(
    z_old: &Field,
    u: &Field,
    f: impl Fn(f64) -> f64,
    mesh: &Mesh,
    dt: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Field, SolveStats)> {
    assert!(dt > 0.0, "dt must be positive");
    z_old.check_binding(mesh);
    u.check_binding(mesh);
    let mut builder = stiffness_builder(mesh, &vec![1.0; mesh.n_faces()]);
    let diag: Vec<f64> = mesh.volumes().iter().map(|v| v * (1.0 + 1.0 / dt)).collect();
    builder.add_diagonal(&diag);
    let a = builder.build();
    let b: Vec<f64> = z_old
        .values()
        .iter()
        .zip(u.values())
        .zip(mesh.cells())
        .map(|((&zi, &ui), c)| c.volume * (zi / dt + f(ui)))
        .collect();
    let (z, stats) = solve_spd(&a, &b, Some(z_old.values()), tol, max_iter)?;
    Ok((Field::from_values(mesh, z), stats))
}

/// Nonlocal zero-mean Poisson solve:
/// `-Laplacian z = f(u) - mean(f(u))`, with the volume-weighted mean of
/// `z` pinned to zero (the chemical is a deviation, free to change
/// sign).
pub fn solve_nonlocal_chemical(
    u: &Field,
    f: impl Fn(f64) -> f64,
    mesh: &Mesh,
    guess: Option<&Field>,
    tol: f64,
    max_iter: usize,
) -> Result<(Field, SolveStats)> {
    u.check_binding(mesh);
    let volumes = mesh.volumes();
    let s: Vec<f64> = u.values().iter().map(|&ui| f(ui)).collect();
    let mean = s
        .iter()
        .zip(&volumes)
        .map(|(si, v)| si * v)
        .sum::<f64>()
        / mesh.domain_volume();
    let b: Vec<f64> = s
        .iter()
        .zip(&volumes)
        .map(|(si, v)| (si - mean) * v)
        .collect();
    let a = stiffness_builder(mesh, &vec![1.0; mesh.n_faces()]).build();
    let (z, stats) = solve_zero_mean(&a, &b, &volumes, guess.map(|g| g.values()), tol, max_iter)?;
    Ok((Field::from_values(mesh, z), stats))
}

/// Picks the structural case for a parameter set.
pub fn chemical_kind(tau: u32, nonlocal: bool) -> ChemicalKind {
    if nonlocal {
        ChemicalKind::NonlocalPoisson
    } else if tau == 1 {
        ChemicalKind::Parabolic
    } else {
        ChemicalKind::Elliptic
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_ball_mesh, build_box_mesh, Cell, Mesh};
    use crate::sparse::{default_max_iter, DEFAULT_TOL};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn solve_elliptic(u: &Field, f: impl Fn(f64) -> f64, mesh: &Mesh) -> Field {
        solve_elliptic_chemical(u, f, mesh, None, 1e-12, default_max_iter(mesh.n_cells()))
            .unwrap()
            .0
    }

    #[test]
    fn constant_production_gives_constant_chemical() {
        let mesh = build_ball_mesh(2, 1.0, 0.12).unwrap();
        let u = Field::from_fn(&mesh, |c| c[0].abs());
        let z = solve_elliptic(&u, |_| 2.5, &mesh);
        for &zi in z.values() {
            assert_relative_eq!(zi, 2.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_density_gives_zero_chemical() {
        let mesh = build_box_mesh(2, &[1.0, 1.0], &[5, 5]).unwrap();
        let u = Field::zeros(&mesh);
        let z = solve_elliptic(&u, |s| s.powf(1.5), &mesh);
        assert!(z.values().iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn single_cell_mesh_is_identity_equation() {
        let mesh = Mesh::from_parts(
            1,
            vec![Cell {
                center: [0.5, 0.0, 0.0],
                volume: 1.0,
            }],
            vec![],
            1.0,
        )
        .unwrap();
        let u = Field::constant(&mesh, 5.0);
        let z = solve_elliptic(&u, |s| s, &mesh);
        assert_relative_eq!(z.values()[0], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn parabolic_decay_of_constants() {
        let mesh = build_box_mesh(1, &[1.0], &[8]).unwrap();
        let c0 = 3.0;
        for dt in [0.1, 1.0, 10.0] {
            let z_old = Field::constant(&mesh, c0);
            let u = Field::zeros(&mesh);
            let (z, _) =
                step_parabolic_chemical(&z_old, &u, |_| 0.0, &mesh, dt, 1e-12, 1000).unwrap();
            for &zi in z.values() {
                assert_relative_eq!(zi, c0 / (1.0 + dt), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn parabolic_fixed_point() {
        let mesh = build_box_mesh(1, &[1.0], &[8]).unwrap();
        let c0 = 1.7;
        let z_old = Field::constant(&mesh, c0);
        let u = Field::zeros(&mesh);
        let (z, _) =
            step_parabolic_chemical(&z_old, &u, |_| c0, &mesh, 0.25, 1e-12, 1000).unwrap();
        for &zi in z.values() {
            assert_relative_eq!(zi, c0, epsilon = 1e-10);
        }
    }

    #[test]
    fn parabolic_large_dt_approaches_elliptic() {
        let mesh = build_ball_mesh(2, 1.0, 0.15).unwrap();
        let u = Field::from_fn(&mesh, |c| 1.0 + c[0] * c[0] + 0.5 * c[1].abs());
        let f = |s: f64| s.powf(1.2);
        let elliptic = solve_elliptic(&u, f, &mesh);
        let z_old = Field::zeros(&mesh);
        let (parabolic, _) =
            step_parabolic_chemical(&z_old, &u, f, &mesh, 1e6, 1e-12, 10_000).unwrap();
        for (p, e) in parabolic.values().iter().zip(elliptic.values()) {
            assert!((p - e).abs() <= 1e-4 * e.abs().max(1.0));
        }
    }

    #[test]
    fn nonlocal_constant_density_gives_zero_deviation() {
        let mesh = build_ball_mesh(2, 1.0, 0.12).unwrap();
        let u = Field::constant(&mesh, 4.0);
        let (z, _) = solve_nonlocal_chemical(
            &u,
            |s| s.powf(1.5),
            &mesh,
            None,
            1e-12,
            default_max_iter(mesh.n_cells()),
        )
        .unwrap();
        assert!(z.values().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn nonlocal_deviation_has_zero_mean() {
        let mesh = build_ball_mesh(2, 1.0, 0.12).unwrap();
        let u = Field::from_fn(&mesh, |c| (1.0 + c[0]).max(0.0) + c[1] * c[1]);
        let (z, _) = solve_nonlocal_chemical(
            &u,
            |s| s,
            &mesh,
            None,
            1e-11,
            default_max_iter(mesh.n_cells()),
        )
        .unwrap();
        assert!(z.volume_weighted_mean(&mesh).abs() < 1e-12);
        // Deviations change sign unless the source is constant.
        assert!(z.min() < 0.0 && z.max() > 0.0);
    }

    #[test]
    fn nonlocal_matches_pseudoinverse_on_four_cells() {
        use nalgebra::{DMatrix, DVector};
        let mesh = build_box_mesh(1, &[4.0], &[4]).unwrap();
        let u = Field::from_values(&mesh, vec![2.0, 0.0, 0.0, 2.0]);
        let (z, _) = solve_nonlocal_chemical(&u, |s| s, &mesh, None, 1e-13, 1000).unwrap();

        // Dense route: assemble the Neumann Laplacian, pseudo-invert,
        // re-gauge to the volume-weighted zero-mean representative.
        let a = stiffness_builder(&mesh, &vec![1.0; mesh.n_faces()]).build();
        let mut dense = DMatrix::<f64>::zeros(4, 4);
        for (i, j, v) in a.entries() {
            dense[(i, j)] += v;
        }
        let vol = mesh.volumes();
        let s = [2.0, 0.0, 0.0, 2.0];
        let mean = s.iter().zip(&vol).map(|(si, v)| si * v).sum::<f64>() / mesh.domain_volume();
        let b: Vec<f64> = s.iter().zip(&vol).map(|(si, v)| (si - mean) * v).collect();
        let pinv = dense.pseudo_inverse(1e-12).unwrap();
        let oracle_vec: DVector<f64> = &pinv * DVector::from_column_slice(&b);
        let mut oracle: Vec<f64> = oracle_vec.iter().copied().collect();
        let gauge = oracle.iter().zip(&vol).map(|(o, v)| o * v).sum::<f64>() / mesh.domain_volume();
        for o in oracle.iter_mut() {
            *o -= gauge;
        }

        for i in 0..4 {
            assert!((z.values()[i] - oracle[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn local_chemicals_respect_discrete_maximum_principle() {
        let mesh = build_ball_mesh(2, 1.0, 0.14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = Field::from_values(
                &mesh,
                (0..mesh.n_cells())
                    .map(|_| rng.random_range(0.0..10.0))
                    .collect(),
            );
            let z = solve_elliptic(&u, |s| s.powf(1.3), &mesh);
            assert!(z.min() >= -1e-12);

            let (zp, _) =
                step_parabolic_chemical(&z, &u, |s| s.powf(1.3), &mesh, 0.05, 1e-12, 10_000)
                    .unwrap();
            assert!(zp.min() >= -1e-12);
        }
    }

    #[test]
    fn elliptic_solve_is_monotone_in_the_production() {
        let mesh = build_box_mesh(2, &[1.0, 1.0], &[6, 6]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let u = Field::from_values(
                &mesh,
                (0..mesh.n_cells())
                    .map(|_| rng.random_range(0.0..5.0))
                    .collect(),
            );
            let lo = solve_elliptic(&u, |s| s, &mesh);
            let hi = solve_elliptic(&u, |s| s + 0.5 + 0.1 * s, &mesh);
            for (l, h) in lo.values().iter().zip(hi.values()) {
                assert!(h >= &(l - 1e-12));
            }
        }
    }

    #[test]
    fn tolerances_constants_sane() {
        assert!(DEFAULT_TOL > 0.0 && DEFAULT_TOL < 1e-6);
    }
}
