//! Discrete spatial operators on cell fields: two-point-flux diffusion,
//! upwind chemotactic convection, least-squares gradient magnitudes and
//! pointwise source evaluation.
//!
//! Sign conventions. A diffusive [`FaceFlux`] is gain-oriented: a
//! positive value means mass entering the owner cell, and the cell
//! update uses `+divergence(flux)`. An upwind chemotactic flux is
//! transport-oriented: a positive value means mass moving from owner to
//! neighbor, and the update uses `-divergence(flux)`. [`divergence`]
//! itself always credits the owner: `div[owner] += q/V`,
//! `div[neighbor] -= q/V`.

use crate::field::{FaceFlux, Field};
use crate::mesh::Mesh;
use crate::params::ModelParams;

/// Two-point diffusive flux of `u` with diffusivity `(u+1)^(m1-1)`
/// evaluated by harmonic mean at the face:
/// `q_f = A_f * D_f * (u_j - u_i) / d_ij`.
///
/// Positive values point into the owner cell; `m1 = 1` reduces to the
/// standard Laplacian stencil.
pub fn diffusive_flux(u: &Field, mesh: &Mesh, m1: f64) -> FaceFlux {
    u.check_binding(mesh);
    debug_assert!(u.min() >= 0.0, "density fields must stay nonnegative");
    let coeffs = face_diffusivities(u, mesh, m1);
    let uv = u.values();
    let values = mesh
        .faces()
        .iter()
        .zip(&coeffs)
        .map(|(f, d)| f.area * d * (uv[f.neighbor] - uv[f.owner]) / f.distance)
        .collect();
    FaceFlux::from_values(mesh, values)
}

/// Harmonic-mean face diffusivities of `(u+1)^(m1-1)`; shared with the
/// implicit assembly so the explicit and implicit stencils agree.
pub fn face_diffusivities(u: &Field, mesh: &Mesh, m1: f64) -> Vec<f64> {
    let uv = u.values();
    let cell_d: Vec<f64> = uv.iter().map(|&ui| (ui + 1.0).powf(m1 - 1.0)).collect();
    mesh.faces()
        .iter()
        .map(|f| {
            let (a, b) = (cell_d[f.owner], cell_d[f.neighbor]);
            if a + b > 0.0 {
                2.0 * a * b / (a + b)
            } else {
                0.0
            }
        })
        .collect()
}

/// Upwind chemotactic flux of the transported density
/// `g(u) = u (u+1)^(m-1)` along the face velocity
/// `V_f = sign * coeff * (potential_j - potential_i) / d_ij`.
///
/// `sign` is +1 for attraction (drift up the potential gradient) and -1
/// for repulsion. The transported density is taken from the upwind cell
/// (owner when `V_f >= 0`), so flux out of an empty cell is exactly
/// zero. Positive values move mass from owner to neighbor.
pub fn upwind_chemotactic_flux(
    u: &Field,
    potential: &Field,
    mesh: &Mesh,
    sign: i32,
    m: f64,
    coeff: f64,
) -> FaceFlux {
    assert!(sign == 1 || sign == -1, "sign must be +1 or -1");
    assert!(coeff >= 0.0, "sensitivity coefficient must be >= 0");
    u.check_binding(mesh);
    potential.check_binding(mesh);
    debug_assert!(u.min() >= 0.0, "density fields must stay nonnegative");
    let uv = u.values();
    let pv = potential.values();
    let g = |ui: f64| ui * (ui + 1.0).powf(m - 1.0);
    let values = mesh
        .faces()
        .iter()
        .map(|f| {
            let velocity = sign as f64 * coeff * (pv[f.neighbor] - pv[f.owner]) / f.distance;
            let upwind = if velocity >= 0.0 { f.owner } else { f.neighbor };
            f.area * velocity * g(uv[upwind])
        })
        .collect();
    FaceFlux::from_values(mesh, values)
}

/// Per-cell balance of face values: `div[owner] += q/V`,
/// `div[neighbor] -= q/V`. The volume-weighted total is zero by
/// construction (zero-flux boundaries have no faces).
pub fn divergence(flux: &FaceFlux, mesh: &Mesh) -> Field {
    flux.check_binding(mesh);
    let mut out = vec![0.0f64; mesh.n_cells()];
    for (f, &q) in mesh.faces().iter().zip(flux.values()) {
        out[f.owner] += q;
        out[f.neighbor] -= q;
    }
    for (v, c) in out.iter_mut().zip(mesh.cells()) {
        *v /= c.volume;
    }
    Field::from_values(mesh, out)
}

/// Euclidean norm of the least-squares cell gradient fitted from the
/// directional differences `(u_j - u_i)/d_ij` to all adjacent cells,
/// floored by the root-mean-square slope norm
/// `sqrt(sum_f s_f^2 / 2)` over the incident faces.
///
/// Both estimates reproduce affine fields exactly on full-stencil
/// cells of a uniform box mesh (each axis contributes its slope twice
/// to the floor, once per face, and the floor never exceeds the
/// gradient norm there). They differ on single-cell concentrations:
/// the least-squares fit averages the opposing slopes of a spike to
/// nearly zero, while the cell-averaged gradient of a sub-cell-width
/// peak is of order `u/h` — which the slope norm reports. Cells with
/// fewer neighbors than the dimension (or a rank-deficient stencil)
/// fall back to the floor alone.
pub fn gradient_magnitude(u: &Field, mesh: &Mesh) -> Field {
    u.check_binding(mesh);
    let uv = u.values();
    let dim = mesh.dim();
    let mut out = vec![0.0f64; mesh.n_cells()];
    for ci in 0..mesh.n_cells() {
        let faces = mesh.cell_faces(ci);
        let mut normal_matrix = [[0.0f64; 3]; 3];
        let mut rhs = [0.0f64; 3];
        let mut slope_sq = 0.0f64;
        let mut n_neighbors = 0usize;
        for &fi in faces {
            let f = &mesh.faces()[fi];
            let (other, orient) = if f.owner == ci {
                (f.neighbor, 1.0)
            } else {
                (f.owner, -1.0)
            };
            let slope = (uv[other] - uv[ci]) / f.distance;
            let dir = [
                orient * f.normal[0],
                orient * f.normal[1],
                orient * f.normal[2],
            ];
            for a in 0..dim {
                rhs[a] += dir[a] * slope;
                for b in 0..dim {
                    normal_matrix[a][b] += dir[a] * dir[b];
                }
            }
            slope_sq += slope * slope;
            n_neighbors += 1;
        }
        let floor = (slope_sq / 2.0).sqrt();
        out[ci] = if n_neighbors < dim {
            floor
        } else {
            match solve_small_symmetric(&normal_matrix, &rhs, dim) {
                Some(g) => {
                    let ls = (0..dim).map(|a| g[a] * g[a]).sum::<f64>().sqrt();
                    ls.max(floor)
                }
                None => floor,
            }
        };
    }
    Field::from_values(mesh, out)
}

/// Direct solve of the (1-3)-dimensional least-squares normal system;
/// `None` if the stencil is rank deficient.
fn solve_small_symmetric(m: &[[f64; 3]; 3], b: &[f64; 3], dim: usize) -> Option<[f64; 3]> {
    let scale = (0..dim)
        .map(|a| m[a][a].abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let tol = 1e-12 * scale.powi(dim as i32);
    match dim {
        1 => {
            if m[0][0].abs() <= tol {
                return None;
            }
            Some([b[0] / m[0][0], 0.0, 0.0])
        }
        2 => {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() <= tol {
                return None;
            }
            Some([
                (b[0] * m[1][1] - b[1] * m[0][1]) / det,
                (m[0][0] * b[1] - m[1][0] * b[0]) / det,
                0.0,
            ])
        }
        3 => {
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            if det.abs() <= tol {
                return None;
            }
            let inv = [
                [
                    m[1][1] * m[2][2] - m[1][2] * m[2][1],
                    m[0][2] * m[2][1] - m[0][1] * m[2][2],
                    m[0][1] * m[1][2] - m[0][2] * m[1][1],
                ],
                [
                    m[1][2] * m[2][0] - m[1][0] * m[2][2],
                    m[0][0] * m[2][2] - m[0][2] * m[2][0],
                    m[0][2] * m[1][0] - m[0][0] * m[1][2],
                ],
                [
                    m[1][0] * m[2][1] - m[1][1] * m[2][0],
                    m[0][1] * m[2][0] - m[0][0] * m[2][1],
                    m[0][0] * m[1][1] - m[0][1] * m[1][0],
                ],
            ];
            let mut g = [0.0; 3];
            for a in 0..3 {
                g[a] = (inv[a][0] * b[0] + inv[a][1] * b[1] + inv[a][2] * b[2]) / det;
            }
            Some(g)
        }
        _ => None,
    }
}

/// Pointwise source `lambda u^rho - mu u^k - c g^gamma` where `g` is the
/// gradient magnitude.
pub fn source_eval(u: &Field, grad_mag: &Field, params: &ModelParams) -> Field {
    assert_eq!(u.len(), grad_mag.len());
    let values = u
        .values()
        .iter()
        .zip(grad_mag.values())
        .map(|(&ui, &gi)| {
            params.lambda * ui.powf(params.rho)
                - params.mu * ui.powf(params.k)
                - params.c * gi.powf(params.gamma)
        })
        .collect();
    u.with_values(values)
}
