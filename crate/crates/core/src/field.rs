//! Cell fields and face fluxes: the two value carriers every spatial
//! operator works on.

use crate::mesh::Mesh;

/// One scalar value per mesh cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    mesh_id: u64,
}

impl Field {
    pub fn zeros(mesh: &Mesh) -> Field {
        Field {
            values: vec![0.0; mesh.n_cells()],
            mesh_id: mesh.id(),
        }
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Field {
        Field {
            values: vec![value; mesh.n_cells()],
            mesh_id: mesh.id(),
        }
    }

    /// Evaluates `f` at every cell center.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(&[f64; 3]) -> f64) -> Field {
        Field {
            values: mesh.cells().iter().map(|c| f(&c.center)).collect(),
            mesh_id: mesh.id(),
        }
    }

    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Field {
        assert_eq!(
            values.len(),
            mesh.n_cells(),
            "field length {} does not match cell count {}",
            values.len(),
            mesh.n_cells()
        );
        Field {
            values,
            mesh_id: mesh.id(),
        }
    }

    /// New field with the same mesh binding and the given values.
    pub fn with_values(&self, values: Vec<f64>) -> Field {
        assert_eq!(values.len(), self.values.len());
        Field {
            values,
            mesh_id: self.mesh_id,
        }
    }

    /// Panics if the field does not belong to `mesh`.
    pub fn check_binding(&self, mesh: &Mesh) {
        assert_eq!(
            self.mesh_id,
            mesh.id(),
            "field is bound to mesh {} but used with mesh {}",
            self.mesh_id,
            mesh.id()
        );
        assert_eq!(self.values.len(), mesh.n_cells());
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Volume-weighted total, `sum_i u_i V_i`, in compensated arithmetic.
    pub fn mass(&self, mesh: &Mesh) -> f64 {
        self.check_binding(mesh);
        stable_sum(
            self.values
                .iter()
                .zip(mesh.cells())
                .map(|(u, c)| u * c.volume),
        )
    }

    /// Volume-weighted mean.
    pub fn volume_weighted_mean(&self, mesh: &Mesh) -> f64 {
        self.mass(mesh) / mesh.domain_volume()
    }
}

/// One signed value per interior face. The orientation of the sign is
/// operator-specific and documented on each producer.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFlux {
    values: Vec<f64>,
    mesh_id: u64,
}

impl FaceFlux {
    pub fn zeros(mesh: &Mesh) -> FaceFlux {
        FaceFlux {
            values: vec![0.0; mesh.n_faces()],
            mesh_id: mesh.id(),
        }
    }

    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> FaceFlux {
        assert_eq!(
            values.len(),
            mesh.n_faces(),
            "flux length {} does not match face count {}",
            values.len(),
            mesh.n_faces()
        );
        FaceFlux {
            values,
            mesh_id: mesh.id(),
        }
    }

    pub fn check_binding(&self, mesh: &Mesh) {
        assert_eq!(self.mesh_id, mesh.id(), "flux bound to a different mesh");
        assert_eq!(self.values.len(), mesh.n_faces());
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Neumaier compensated summation; keeps diagnostic sums (masses,
/// conservation checks) accurate to a few ulps independent of length.
pub fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;
    use approx::assert_relative_eq;

    #[test]
    fn mass_is_volume_weighted() {
        let mesh = build_box_mesh(1, &[1.0], &[4]).unwrap();
        let u = Field::constant(&mesh, 3.0);
        assert_relative_eq!(u.mass(&mesh), 3.0, epsilon = 1e-15);
        assert_relative_eq!(u.volume_weighted_mean(&mesh), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn stable_sum_handles_cancellation() {
        let values = vec![1e16, 1.0, -1e16, 1.0];
        assert_relative_eq!(stable_sum(values), 2.0, epsilon = 1e-12);
    }

    #[test]
    #[should_panic(expected = "bound to mesh")]
    fn binding_mismatch_panics() {
        let a = build_box_mesh(1, &[1.0], &[4]).unwrap();
        let b = build_box_mesh(1, &[1.0], &[4]).unwrap();
        let u = Field::zeros(&a);
        u.check_binding(&b);
    }
}
