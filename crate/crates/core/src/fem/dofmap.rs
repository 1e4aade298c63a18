use crate::mesh::Mesh;

/// Splits the vertices into boundary dofs (in boundary-cycle order) and
/// interior dofs (in ascending vertex order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    pub boundary: Vec<usize>,
    pub interior: Vec<usize>,
    /// Position of each vertex within its own class.
    pub local: Vec<usize>,
    pub is_boundary: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.num_vertices();
        let boundary: Vec<usize> = mesh.boundary_edges.iter().map(|e| e.vertices[0]).collect();
        let mut is_boundary = vec![false; n];
        let mut local = vec![0; n];
        for (k, &v) in boundary.iter().enumerate() {
            is_boundary[v] = true;
            local[v] = k;
        }
        let interior: Vec<usize> = (0..n).filter(|&v| !is_boundary[v]).collect();
        for (k, &v) in interior.iter().enumerate() {
            local[v] = k;
        }
        Self {
            boundary,
            interior,
            local,
            is_boundary,
        }
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.local.len()
    }

    /// Column map for [`super::CsrMatrix::submatrix`] selecting interior vertices.
    pub fn interior_column_map(&self) -> Vec<usize> {
        (0..self.num_vertices())
            .map(|v| {
                if self.is_boundary[v] {
                    usize::MAX
                } else {
                    self.local[v]
                }
            })
            .collect()
    }

    pub fn boundary_column_map(&self) -> Vec<usize> {
        (0..self.num_vertices())
            .map(|v| {
                if self.is_boundary[v] {
                    self.local[v]
                } else {
                    usize::MAX
                }
            })
            .collect()
    }

    pub fn restrict_boundary(&self, full: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|&v| full[v]).collect()
    }

    pub fn restrict_interior(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&v| full[v]).collect()
    }

    pub fn combine(&self, interior: &[f64], boundary: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_vertices()];
        for (k, &v) in self.interior.iter().enumerate() {
            full[v] = interior[k];
        }
        for (k, &v) in self.boundary.iter().enumerate() {
            full[v] = boundary[k];
        }
        full
    }
}
