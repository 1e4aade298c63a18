use super::{CsrMatrix, DofMap, FemError, TripletBuilder};
use crate::geometry::{dist, signed_area, sub};
use crate::mesh::Mesh;

fn checked_area(mesh: &Mesh, t: usize) -> Result<f64, FemError> {
    let [a, b, c] = mesh.triangle_points(t);
    let area = signed_area(a, b, c);
    if area > 0.0 && area.is_finite() {
        Ok(area)
    } else {
        Err(FemError::DegenerateElement { triangle: t, area })
    }
}

/// Local P1 stiffness matrix of a counterclockwise triangle.
pub fn local_stiffness(p: [[f64; 2]; 3]) -> Result<[[f64; 3]; 3], FemError> {
    let area = signed_area(p[0], p[1], p[2]);
    if !(area > 0.0) {
        return Err(FemError::DegenerateElement { triangle: 0, area });
    }
    // edge opposite vertex i
    let e = [sub(p[2], p[1]), sub(p[0], p[2]), sub(p[1], p[0])];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (e[i][0] * e[j][0] + e[i][1] * e[j][1]) / (4.0 * area);
        }
    }
    Ok(k)
}

/// `A_ik = (grad e_i, grad e_k)` over all vertices.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<CsrMatrix, FemError> {
    let n = mesh.num_vertices();
    let mut b = TripletBuilder::new(n, n);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        checked_area(mesh, t)?;
        let k = local_stiffness(mesh.triangle_points(t))?;
        for i in 0..3 {
            for j in 0..3 {
                b.add(tri[i], tri[j], k[i][j]);
            }
        }
    }
    Ok(b.build(true))
}

/// `M_ik = (e_i, e_k)` over all vertices.
pub fn assemble_mass(mesh: &Mesh) -> Result<CsrMatrix, FemError> {
    let n = mesh.num_vertices();
    let mut b = TripletBuilder::new(n, n);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = checked_area(mesh, t)?;
        for i in 0..3 {
            for j in 0..3 {
                let f = if i == j { 2.0 } else { 1.0 };
                b.add(tri[i], tri[j], f * area / 12.0);
            }
        }
    }
    Ok(b.build(true))
}

/// `(M_G)_ik = (e_i, e_k)_{L2(boundary)}`, indexed by boundary dofs in cycle order.
pub fn assemble_boundary_mass(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    let nb = dofs.num_boundary();
    let mut b = TripletBuilder::new(nb, nb);
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        let l = dist(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        let (i, j) = (k, (k + 1) % nb);
        b.add(i, i, l / 3.0);
        b.add(j, j, l / 3.0);
        b.add(i, j, l / 6.0);
        b.add(j, i, l / 6.0);
    }
    b.build(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PolygonSpec;

    fn unit_square(levels: usize) -> Mesh {
        let spec =
            PolygonSpec::from_corners(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 0)
                .unwrap();
        let mut m = Mesh::from_parts(
            spec,
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 3], [1, 2, 3]],
            0,
        )
        .unwrap();
        for _ in 0..levels {
            m = crate::mesh::refine_regular(&m).unwrap();
        }
        m
    }

    #[test]
    fn unit_right_triangle_local_stiffness() {
        let k = local_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
        assert!(local_stiffness([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn stiffness_rows_sum_to_zero_and_linear_is_harmonic() {
        let m = unit_square(3);
        let a = assemble_stiffness(&m).unwrap();
        assert!(a.symmetry_defect() <= 1e-14);
        let ones = vec![1.0; m.num_vertices()];
        let row_max = a.values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        assert!(a.matvec(&ones).iter().all(|r| r.abs() <= 1e-12 * row_max));
        let x1: Vec<f64> = m.vertices.iter().map(|p| p[0]).collect();
        let ax = a.matvec(&x1);
        let flags = m.boundary_flags();
        for v in 0..m.num_vertices() {
            if !flags[v] {
                assert!(ax[v].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mass_integrates_constants_and_local_matrix() {
        let m = unit_square(2);
        let mm = assemble_mass(&m).unwrap();
        let ones = vec![1.0; m.num_vertices()];
        let total: f64 = mm.matvec(&ones).iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        let single = unit_square(0);
        let local = assemble_mass(&single).unwrap();
        // vertex 0 belongs only to the first triangle with area 1/2
        assert!((local.get(0, 0) - 0.5 * 2.0 / 12.0).abs() < 1e-16);
        assert!((local.get(0, 1) - 0.5 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn boundary_mass_perimeter() {
        let m = unit_square(2);
        let dofs = DofMap::new(&m);
        let mb = assemble_boundary_mass(&m, &dofs);
        let ones = vec![1.0; dofs.num_boundary()];
        let total: f64 = mb.matvec(&ones).iter().sum();
        assert!((total - 4.0).abs() < 1e-14);
        let l = 0.25;
        assert!((mb.get(0, 0) - 2.0 * l / 3.0).abs() < 1e-16);
        assert!((mb.get(0, 1) - l / 6.0).abs() < 1e-16);
        assert!(mb.symmetry_defect() == 0.0);
    }

    #[test]
    fn degenerate_element_detected() {
        let mut m = unit_square(0);
        m.vertices[3] = [0.5, 0.0];
        assert!(matches!(
            assemble_stiffness(&m),
            Err(FemError::DegenerateElement { .. })
        ));
        assert!(assemble_mass(&m).is_err());
    }
}
