//! Cell-centered finite-volume geometry on boxes, disks and balls.
//!
//! Zero-flux boundaries are realized structurally: only faces between
//! two kept cells exist, so no boundary flux ever needs to be imposed.
//! Disk/ball domains are masked Cartesian grids (a cell belongs to the
//! domain iff its center does), which keeps every cell full-volume and
//! the two-point flux stencil symmetric.

use crate::error::{Error, Result};
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// One control volume: center coordinates (unused trailing axes are 0)
/// and volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub center: [f64; 3],
    pub volume: f64,
}

/// One interior face between two cells, oriented owner -> neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub owner: usize,
    pub neighbor: usize,
    pub area: f64,
    /// Unit normal pointing from owner to neighbor.
    pub normal: [f64; 3],
    /// Center-to-center distance between owner and neighbor.
    pub distance: f64,
}

/// Immutable finite-volume mesh: cells, interior faces and adjacency.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    cells: Vec<Cell>,
    faces: Vec<Face>,
    /// Face indices touching each cell, in face order.
    cell_faces: Vec<Vec<usize>>,
    /// Nominal cell width (max axis spacing).
    h: f64,
    /// Per-axis cell extent (unused trailing axes mirror `h`); all
    /// cells of a mesh share it.
    spacing: [f64; 3],
    domain_volume: f64,
    id: u64,
}

impl Mesh {
    /// Assembles a mesh from raw parts, validating the face invariants.
    /// Degenerate meshes (single cell, no faces) are allowed.
    pub fn from_parts(dim: usize, cells: Vec<Cell>, faces: Vec<Face>, h: f64) -> Result<Mesh> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Mesh(format!("dim must be 1..=3 (got {dim})")));
        }
        if cells.is_empty() {
            return Err(Error::Mesh("mesh needs at least one cell".into()));
        }
        if !(h > 0.0) {
            return Err(Error::Mesh(format!("h must be > 0 (got {h})")));
        }
        for (ci, c) in cells.iter().enumerate() {
            if !(c.volume > 0.0) {
                return Err(Error::Mesh(format!("cell {ci} has nonpositive volume")));
            }
        }
        for (fi, f) in faces.iter().enumerate() {
            if f.owner == f.neighbor || f.owner >= cells.len() || f.neighbor >= cells.len() {
                return Err(Error::Mesh(format!(
                    "face {fi} must connect two distinct existing cells (owner={}, neighbor={})",
                    f.owner, f.neighbor
                )));
            }
            if !(f.area > 0.0) || !(f.distance > 0.0) {
                return Err(Error::Mesh(format!("face {fi} has nonpositive area or distance")));
            }
            let norm2: f64 = f.normal.iter().map(|x| x * x).sum();
            if (norm2.sqrt() - 1.0).abs() > 1e-12 {
                return Err(Error::Mesh(format!("face {fi} normal is not unit length")));
            }
        }
        let mut cell_faces = vec![Vec::new(); cells.len()];
        for (fi, f) in faces.iter().enumerate() {
            cell_faces[f.owner].push(fi);
            cell_faces[f.neighbor].push(fi);
        }
        let domain_volume = cells.iter().map(|c| c.volume).sum();
        Ok(Mesh {
            dim,
            cells,
            faces,
            cell_faces,
            h,
            spacing: [h; 3],
            domain_volume,
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
        })
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Indices of the faces touching `cell`, in global face order.
    pub fn cell_faces(&self, cell: usize) -> &[usize] {
        &self.cell_faces[cell]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain_volume(&self) -> f64 {
        self.domain_volume
    }

    /// Identity tag used to bind fields to the mesh they live on.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Cell volumes as a plain vector.
    pub fn volumes(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.volume).collect()
    }

    /// One-line summary for run logs.
    pub fn summary(&self) -> String {
        format!(
            "mesh: dim={} cells={} faces={} h={} domain_volume={}",
            self.dim,
            self.cells.len(),
            self.faces.len(),
            self.h,
            self.domain_volume
        )
    }
}

impl std::ops::Index<usize> for Mesh {
    type Output = Cell;
    fn index(&self, i: usize) -> &Cell {
        &self.cells[i]
    }
}

/// Uniform Cartesian box mesh with interior faces only.
///
/// `lengths` and `cells_per_axis` must both have `dim` entries with at
/// least 2 cells per axis.
pub fn build_box_mesh(dim: usize, lengths: &[f64], cells_per_axis: &[usize]) -> Result<Mesh> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Mesh(format!("dim must be 1..=3 (got {dim})")));
    }
    if lengths.len() != dim || cells_per_axis.len() != dim {
        return Err(Error::Mesh(format!(
            "expected {dim} lengths and cell counts (got {} and {})",
            lengths.len(),
            cells_per_axis.len()
        )));
    }
    for &l in lengths {
        if !(l > 0.0) {
            return Err(Error::Mesh(format!("axis length must be > 0 (got {l})")));
        }
    }
    for &n in cells_per_axis {
        if n < 2 {
            return Err(Error::Mesh(format!("need at least 2 cells per axis (got {n})")));
        }
    }

    let mut counts = [1usize; 3];
    let mut spacing = [1.0f64; 3];
    for a in 0..dim {
        counts[a] = cells_per_axis[a];
        spacing[a] = lengths[a] / cells_per_axis[a] as f64;
    }
    let volume = (0..dim).map(|a| spacing[a]).product();
    let index = |ix: usize, iy: usize, iz: usize| ix + counts[0] * (iy + counts[1] * iz);

    let mut cells = Vec::with_capacity(counts[0] * counts[1] * counts[2]);
    for iz in 0..counts[2] {
        for iy in 0..counts[1] {
            for ix in 0..counts[0] {
                let idx = [ix, iy, iz];
                let mut center = [0.0; 3];
                for a in 0..dim {
                    center[a] = (idx[a] as f64 + 0.5) * spacing[a];
                }
                cells.push(Cell { center, volume });
            }
        }
    }

    let mut faces = Vec::new();
    for axis in 0..dim {
        let area: f64 = (0..dim).filter(|&a| a != axis).map(|a| spacing[a]).product();
        let mut normal = [0.0; 3];
        normal[axis] = 1.0;
        for iz in 0..counts[2] {
            for iy in 0..counts[1] {
                for ix in 0..counts[0] {
                    let mut next = [ix, iy, iz];
                    next[axis] += 1;
                    if next[axis] >= counts[axis] {
                        continue;
                    }
                    faces.push(Face {
                        owner: index(ix, iy, iz),
                        neighbor: index(next[0], next[1], next[2]),
                        area,
                        normal,
                        distance: spacing[axis],
                    });
                }
            }
        }
    }

    let h = (0..dim).map(|a| spacing[a]).fold(0.0, f64::max);
    let mut mesh = Mesh::from_parts(dim, cells, faces, h)?;
    let mut full_spacing = [h; 3];
    full_spacing[..dim].copy_from_slice(&spacing[..dim]);
    mesh.spacing = full_spacing;
    Ok(mesh)
}

/// Masked Cartesian mesh over the disk (dim 2) or ball (dim 3) of the
/// given radius, keeping cells whose center lies strictly inside.
pub fn build_ball_mesh(dim: usize, radius: f64, h_target: f64) -> Result<Mesh> {
    if !(dim == 2 || dim == 3) {
        return Err(Error::Mesh(format!("ball mesh needs dim 2 or 3 (got {dim})")));
    }
    if !(radius > 0.0) {
        return Err(Error::Mesh(format!("radius must be > 0 (got {radius})")));
    }
    if !(h_target > 0.0) || h_target >= radius / 4.0 {
        return Err(Error::Mesh(format!(
            "h_target must satisfy 0 < h < radius/4 (got h={h_target}, radius={radius})"
        )));
    }

    let n = (2.0 * radius / h_target).ceil() as usize;
    let h = 2.0 * radius / n as f64;
    let center_coord = |i: usize| -radius + (i as f64 + 0.5) * h;
    let counts = if dim == 2 { [n, n, 1] } else { [n, n, n] };

    // Lattice index -> compact cell id for kept cells, in lexicographic
    // order (x fastest) so construction is deterministic.
    let mut lattice_to_cell = vec![usize::MAX; counts[0] * counts[1] * counts[2]];
    let lattice = |ix: usize, iy: usize, iz: usize| ix + counts[0] * (iy + counts[1] * iz);
    let volume = h.powi(dim as i32);
    let mut cells = Vec::new();
    for iz in 0..counts[2] {
        for iy in 0..counts[1] {
            for ix in 0..counts[0] {
                let mut center = [center_coord(ix), center_coord(iy), 0.0];
                if dim == 3 {
                    center[2] = center_coord(iz);
                }
                let r2: f64 = center.iter().map(|x| x * x).sum();
                if r2 < radius * radius {
                    lattice_to_cell[lattice(ix, iy, iz)] = cells.len();
                    cells.push(Cell { center, volume });
                }
            }
        }
    }
    if cells.len() < 25 {
        return Err(Error::Mesh(format!(
            "h_target too coarse: only {} cells kept (need at least 25)",
            cells.len()
        )));
    }

    let area = h.powi(dim as i32 - 1);
    let mut faces = Vec::new();
    for axis in 0..dim {
        let mut normal = [0.0; 3];
        normal[axis] = 1.0;
        for iz in 0..counts[2] {
            for iy in 0..counts[1] {
                for ix in 0..counts[0] {
                    let here = lattice_to_cell[lattice(ix, iy, iz)];
                    if here == usize::MAX {
                        continue;
                    }
                    let mut next = [ix, iy, iz];
                    next[axis] += 1;
                    if next[axis] >= counts[axis] {
                        continue;
                    }
                    let there = lattice_to_cell[lattice(next[0], next[1], next[2])];
                    if there == usize::MAX {
                        continue;
                    }
                    faces.push(Face {
                        owner: here,
                        neighbor: there,
                        area,
                        normal,
                        distance: h,
                    });
                }
            }
        }
    }

    Mesh::from_parts(dim, cells, faces, h)
}
