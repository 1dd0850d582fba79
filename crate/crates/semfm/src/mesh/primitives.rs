//! Procedural meshes used by tests, the synthetic benchmark, and the demo.

use std::collections::HashMap;

use nalgebra::Point3;

use super::TriangleMesh;

/// Regular tetrahedron with the given edge length, centered at the origin.
pub fn tetrahedron(edge: f64) -> TriangleMesh {
    let s = edge / 2.0_f64.sqrt();
    let verts = vec![
        Point3::new(s / 2.0, s / 2.0, s / 2.0),
        Point3::new(s / 2.0, -s / 2.0, -s / 2.0),
        Point3::new(-s / 2.0, s / 2.0, -s / 2.0),
        Point3::new(-s / 2.0, -s / 2.0, s / 2.0),
    ];
    let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
    TriangleMesh::new(verts, faces).expect("tetrahedron is valid")
}

/// Icosphere: icosahedron with `subdivisions` rounds of midpoint subdivision,
/// projected onto the sphere of the given radius.
pub fn icosphere(subdivisions: u32, radius: f64) -> TriangleMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut verts: Vec<Point3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::new(x, y, z))
    .collect();

    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(&mut verts, &mut midpoints, a, b);
            let bc = midpoint(&mut verts, &mut midpoints, b, c);
            let ca = midpoint(&mut verts, &mut midpoints, c, a);
            next_faces.push([a, ab, ca]);
            next_faces.push([b, bc, ab]);
            next_faces.push([c, ca, bc]);
            next_faces.push([ab, bc, ca]);
        }
        faces = next_faces;
    }

    for v in &mut verts {
        let n = v.coords.norm();
        *v = Point3::from(v.coords * (radius / n));
    }
    TriangleMesh::new(verts, faces).expect("icosphere is valid")
}

fn midpoint(
    verts: &mut Vec<Point3<f64>>,
    cache: &mut HashMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = if a < b { (a, b) } else { (b, a) };
    if let Some(&i) = cache.get(&key) {
        return i;
    }
    let p = Point3::from((verts[a].coords + verts[b].coords) * 0.5);
    verts.push(p);
    let i = verts.len() - 1;
    cache.insert(key, i);
    i
}

/// Flat grid on the unit square [0,1]^2 in the z=0 plane with `n`+1 vertices
/// per side, each cell split into two right triangles.
pub fn unit_square_grid(n: usize) -> TriangleMesh {
    assert!(n >= 1);
    let mut verts = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            verts.push(Point3::new(i as f64 / n as f64, j as f64 / n as f64, 0.0));
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh::new(verts, faces).expect("grid is valid")
}

/// Long thin strip of `n` segments along x: 2(n+1) vertices, 2n triangles.
/// Useful as an embedded path graph.
pub fn strip(n: usize, segment: f64, width: f64) -> TriangleMesh {
    assert!(n >= 2);
    let mut verts = Vec::with_capacity(2 * (n + 1));
    for i in 0..=n {
        verts.push(Point3::new(i as f64 * segment, 0.0, 0.0));
        verts.push(Point3::new(i as f64 * segment, width, 0.0));
    }
    let mut faces = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (a, b, c, d) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
        faces.push([a, c, b]);
        faces.push([b, c, d]);
    }
    TriangleMesh::new(verts, faces).expect("strip is valid")
}
