//! Simplicial meshes (triangles in 2D, tetrahedra in 3D) with facet adjacency
//! and boundary region markers.
//!
//! Cells are stored with positive orientation. Facets are enumerated once,
//! carry their adjacent cells, the outward unit normal of the first adjacent
//! cell, their measure and the length scale used by the jump penalty.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Region tags used by the built-in generators.
pub mod markers {
    /// Unit square sides.
    pub const LEFT: u32 = 1;
    pub const RIGHT: u32 = 2;
    pub const BOTTOM: u32 = 3;
    pub const TOP: u32 = 4;

    /// Unit cube faces.
    pub const X_MIN: u32 = 1;
    pub const X_MAX: u32 = 2;
    pub const Y_MIN: u32 = 3;
    pub const Y_MAX: u32 = 4;
    pub const Z_MIN: u32 = 5;
    pub const Z_MAX: u32 = 6;

    /// Cylinder regions.
    pub const CYL_BOTTOM: u32 = 1;
    pub const CYL_TOP: u32 = 2;
    pub const CYL_LATERAL: u32 = 3;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Sorted vertex indices (2 in 2D, 3 in 3D).
    pub vertices: Vec<usize>,
    /// First adjacent cell; `normal` points out of this cell.
    pub inner: usize,
    /// Second adjacent cell for interior facets.
    pub outer: Option<usize>,
    /// Outward unit normal with respect to `inner`.
    pub normal: [f64; 3],
    /// Length (2D) or area (3D).
    pub measure: f64,
    /// Edge length in 2D, longest edge in 3D.
    pub size: f64,
}

impl Facet {
    pub fn is_interior(&self) -> bool {
        self.outer.is_some()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.inner).chain(self.outer)
    }

    /// Outward unit normal seen from `cell`.
    pub fn normal_for(&self, cell: usize) -> Option<[f64; 3]> {
        if cell == self.inner {
            Some(self.normal)
        } else if Some(cell) == self.outer {
            let n = self.normal;
            Some([-n[0], -n[1], -n[2]])
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    volumes: Vec<f64>,
    facets: Vec<Facet>,
    /// Facet opposite local vertex `i` of cell `c` is `cell_facets[c * (dim + 1) + i]`.
    cell_facets: Vec<usize>,
    boundary_markers: BTreeMap<usize, u32>,
}

impl Mesh {
    /// Builds a mesh from flat coordinate and connectivity arrays.
    ///
    /// Negatively oriented cells are flipped, facets are built and
    /// zero-volume cells are rejected.
    pub fn new(dim: usize, coords: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if coords.len() % dim != 0 {
            return Err(Error::invalid(
                "coordinate array length is not a multiple of dim",
            ));
        }
        let nv = coords.len() / dim;
        let k = dim + 1;
        if cells.len() % k != 0 {
            return Err(Error::invalid(
                "cell array length is not a multiple of dim + 1",
            ));
        }
        if let Some(&bad) = cells.iter().find(|&&v| v >= nv) {
            return Err(Error::Topology(format!(
                "vertex index {bad} out of range ({nv} vertices)"
            )));
        }
        let mut mesh = Mesh {
            dim,
            coords,
            cells,
            volumes: Vec::new(),
            facets: Vec::new(),
            cell_facets: Vec::new(),
            boundary_markers: BTreeMap::new(),
        };
        mesh.orient_cells()?;
        mesh.check_duplicate_cells()?;
        mesh.build_facets()?;
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        self.volumes[c]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Cell vertex coordinates padded to 3D.
    pub fn cell_points(&self, c: usize) -> Vec<[f64; 3]> {
        self.cell(c).iter().map(|&v| self.point(v)).collect()
    }

    /// Vertex coordinates padded to 3D.
    pub fn point(&self, v: usize) -> [f64; 3] {
        let x = self.vertex(v);
        let mut p = [0.0; 3];
        p[..self.dim].copy_from_slice(x);
        p
    }

    pub fn cell_centroid(&self, c: usize) -> [f64; 3] {
        let mut m = [0.0; 3];
        let pts = self.cell_points(c);
        for p in &pts {
            for k in 0..3 {
                m[k] += p[k];
            }
        }
        m.map(|x| x / pts.len() as f64)
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        let pts = self.cell_points(c);
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d = d.max(dist(&pts[i], &pts[j]));
            }
        }
        d
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, f: usize) -> &Facet {
        &self.facets[f]
    }

    /// Facets of cell `c`, the i-th one opposite local vertex i.
    pub fn cell_facets(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cell_facets[c * k..(c + 1) * k]
    }

    pub fn interior_facets(&self) -> impl Iterator<Item = (usize, &Facet)> + '_ {
        self.facets
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_interior())
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = (usize, &Facet)> + '_ {
        self.facets
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_interior())
    }

    pub fn boundary_markers(&self) -> &BTreeMap<usize, u32> {
        &self.boundary_markers
    }

    pub fn marker(&self, facet: usize) -> Option<u32> {
        self.boundary_markers.get(&facet).copied()
    }

    /// Boundary facets carrying any of `tags`.
    pub fn facets_with_markers<'a>(
        &'a self,
        tags: &'a [u32],
    ) -> impl Iterator<Item = (usize, &'a Facet)> + 'a {
        self.boundary_markers
            .iter()
            .filter(move |(_, t)| tags.contains(t))
            .map(move |(&f, _)| (f, &self.facets[f]))
    }

    pub fn has_marker(&self, tag: u32) -> bool {
        self.boundary_markers.values().any(|&t| t == tag)
    }

    pub fn set_marker(&mut self, facet: usize, tag: u32) -> Result<()> {
        match self.facets.get(facet) {
            Some(f) if !f.is_interior() => {
                self.boundary_markers.insert(facet, tag);
                Ok(())
            }
            Some(_) => Err(Error::invalid(format!("facet {facet} is interior"))),
            None => Err(Error::invalid(format!("facet {facet} does not exist"))),
        }
    }

    /// Tags every boundary facet for which `classify(centroid, normal)` returns a tag.
    pub fn mark_boundary<F>(&mut self, classify: F)
    where
        F: Fn(&[f64; 3], &[f64; 3]) -> Option<u32>,
    {
        for (i, f) in self.facets.iter().enumerate() {
            if f.is_interior() {
                continue;
            }
            let centroid = self.facet_centroid(f);
            if let Some(tag) = classify(&centroid, &f.normal) {
                self.boundary_markers.insert(i, tag);
            }
        }
    }

    /// Looks up a facet by its vertex set.
    pub fn find_facet(&self, vertices: &[usize]) -> Option<usize> {
        let key = facet_key(vertices);
        self.facets
            .iter()
            .position(|f| facet_key(&f.vertices) == key)
    }

    pub fn facet_centroid(&self, f: &Facet) -> [f64; 3] {
        let mut m = [0.0; 3];
        for &v in &f.vertices {
            let p = self.point(v);
            for k in 0..3 {
                m[k] += p[k];
            }
        }
        m.map(|x| x / f.vertices.len() as f64)
    }

    fn orient_cells(&mut self) -> Result<()> {
        let k = self.dim + 1;
        let n = self.num_cells();
        let mut volumes = Vec::with_capacity(n);
        for c in 0..n {
            let pts = self.cell_points(c);
            let mut s = signed_measure(self.dim, &pts);
            let scale = (0..k)
                .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
                .map(|(i, j)| dist(&pts[i], &pts[j]))
                .fold(0.0, f64::max)
                .powi(self.dim as i32);
            if s.abs() <= 1e-14 * scale || !s.is_finite() {
                return Err(Error::DegenerateCell {
                    cell: c,
                    measure: s,
                });
            }
            if s < 0.0 {
                self.cells.swap(c * k, c * k + 1);
                s = -s;
            }
            volumes.push(s);
        }
        self.volumes = volumes;
        Ok(())
    }

    fn check_duplicate_cells(&self) -> Result<()> {
        let mut seen = HashMap::with_capacity(self.num_cells());
        for (c, cell) in self.cells().enumerate() {
            let mut key = [usize::MAX; 4];
            key[..cell.len()].copy_from_slice(cell);
            key[..cell.len()].sort_unstable();
            if key[..cell.len()].windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Topology(format!("cell {c} repeats a vertex")));
            }
            if let Some(prev) = seen.insert(key, c) {
                return Err(Error::Topology(format!(
                    "cells {prev} and {c} are duplicates"
                )));
            }
        }
        Ok(())
    }

    /// Enumerates every (d-1)-face once, with adjacency, normals and sizes.
    ///
    /// Existing boundary markers are dropped.
    pub fn build_facets(&mut self) -> Result<()> {
        let k = self.dim + 1;
        let n = self.num_cells();
        let mut index: HashMap<[usize; 3], usize> = HashMap::with_capacity(n * k);
        let mut facets: Vec<Facet> = Vec::new();
        let mut cell_facets = vec![usize::MAX; n * k];

        for c in 0..n {
            let cell: Vec<usize> = self.cell(c).to_vec();
            for i in 0..k {
                let verts: Vec<usize> = (0..k).filter(|&j| j != i).map(|j| cell[j]).collect();
                let key = facet_key(&verts);
                match index.get(&key) {
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.outer.is_some() {
                            return Err(Error::Topology(format!(
                                "facet {:?} shared by more than two cells",
                                facet.vertices
                            )));
                        }
                        facet.outer = Some(c);
                        cell_facets[c * k + i] = f;
                    }
                    None => {
                        let f = facets.len();
                        let mut sorted = verts.clone();
                        sorted.sort_unstable();
                        let pts: Vec<[f64; 3]> = verts.iter().map(|&v| self.point(v)).collect();
                        let opposite = self.point(cell[i]);
                        let (normal, measure) = facet_normal(self.dim, &pts, &opposite);
                        let size = if self.dim == 2 {
                            measure
                        } else {
                            longest_edge(&pts)
                        };
                        facets.push(Facet {
                            vertices: sorted,
                            inner: c,
                            outer: None,
                            normal,
                            measure,
                            size,
                        });
                        index.insert(key, f);
                        cell_facets[c * k + i] = f;
                    }
                }
            }
        }
        self.facets = facets;
        self.cell_facets = cell_facets;
        self.boundary_markers.clear();
        Ok(())
    }

    /// Vertices touching any boundary facet tagged with one of `tags`.
    pub fn vertices_on(&self, tags: &[u32]) -> Vec<usize> {
        let mut on = vec![false; self.num_vertices()];
        for (_, f) in self.facets_with_markers(tags) {
            for &v in &f.vertices {
                on[v] = true;
            }
        }
        on.iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

fn facet_key(verts: &[usize]) -> [usize; 3] {
    let mut key = [usize::MAX; 3];
    key[..verts.len()].copy_from_slice(verts);
    key[..verts.len()].sort_unstable();
    key
}

pub(crate) fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Signed d-volume of a simplex.
pub(crate) fn signed_measure(dim: usize, pts: &[[f64; 3]]) -> f64 {
    let e1 = sub(&pts[1], &pts[0]);
    let e2 = sub(&pts[2], &pts[0]);
    if dim == 2 {
        0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
    } else {
        let e3 = sub(&pts[3], &pts[0]);
        dot(&cross(&e1, &e2), &e3) / 6.0
    }
}

fn longest_edge(pts: &[[f64; 3]]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            h = h.max(dist(&pts[i], &pts[j]));
        }
    }
    h
}

/// Unit normal pointing away from `opposite`, and the facet measure.
fn facet_normal(dim: usize, pts: &[[f64; 3]], opposite: &[f64; 3]) -> ([f64; 3], f64) {
    let (mut n, measure) = if dim == 2 {
        let e = sub(&pts[1], &pts[0]);
        let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
        ([e[1] / len, -e[0] / len, 0.0], len)
    } else {
        let c = cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]));
        let len = dot(&c, &c).sqrt();
        ([c[0] / len, c[1] / len, c[2] / len], 0.5 * len)
    };
    if dot(&n, &sub(opposite, &pts[0])) > 0.0 {
        n = n.map(|x| -x);
    }
    (n, measure)
}

/// Unit square split into `n x n` squares, each cut along the
/// lower-left to upper-right diagonal.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("unit_square_mesh needs n >= 1"));
    }
    let np = n + 1;
    let h = 1.0 / n as f64;
    let mut coords = Vec::with_capacity(2 * np * np);
    for j in 0..np {
        for i in 0..np {
            coords.push(i as f64 * h);
            coords.push(j as f64 * h);
        }
    }
    let id = |i: usize, j: usize| j * np + i;
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.extend_from_slice(&[a, b, c]);
            cells.extend_from_slice(&[a, c, d]);
        }
    }
    let mut mesh = Mesh::new(2, coords, cells)?;
    let tol = 1e-12;
    mesh.mark_boundary(|x, _| {
        if x[0] < tol {
            Some(markers::LEFT)
        } else if x[0] > 1.0 - tol {
            Some(markers::RIGHT)
        } else if x[1] < tol {
            Some(markers::BOTTOM)
        } else if x[1] > 1.0 - tol {
            Some(markers::TOP)
        } else {
            None
        }
    });
    Ok(mesh)
}

/// Unit cube split into `n^3` subcubes of six Kuhn tetrahedra each.
pub fn unit_cube_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("unit_cube_mesh needs n >= 1"));
    }
    let np = n + 1;
    let h = 1.0 / n as f64;
    let mut coords = Vec::with_capacity(3 * np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                coords.extend_from_slice(&[i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let id = |i: usize, j: usize, k: usize| (k * np + j) * np + i;
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cells = Vec::with_capacity(24 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut p = [i, j, k];
                    cells.push(id(p[0], p[1], p[2]));
                    for axis in perm {
                        p[axis] += 1;
                        cells.push(id(p[0], p[1], p[2]));
                    }
                }
            }
        }
    }
    let mut mesh = Mesh::new(3, coords, cells)?;
    let tol = 1e-12;
    mesh.mark_boundary(|x, _| {
        let tags = [
            (x[0] < tol, markers::X_MIN),
            (x[0] > 1.0 - tol, markers::X_MAX),
            (x[1] < tol, markers::Y_MIN),
            (x[1] > 1.0 - tol, markers::Y_MAX),
            (x[2] < tol, markers::Z_MIN),
            (x[2] > 1.0 - tol, markers::Z_MAX),
        ];
        tags.iter().find(|(hit, _)| *hit).map(|&(_, t)| t)
    });
    Ok(mesh)
}

/// Number of vertices on ring `k` of the disk triangulation (ring 0 is the centre).
fn ring_size(k: usize) -> usize {
    if k == 0 {
        1
    } else {
        6 * (k + 1)
    }
}

/// Triangulates a disk with concentric rings and returns (coords, triangles).
fn disk_triangulation(radius: f64, rings: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut pts = vec![[0.0, 0.0]];
    let mut start = vec![0usize];
    for k in 1..=rings {
        start.push(pts.len());
        let m = ring_size(k);
        let r = radius * k as f64 / rings as f64;
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            pts.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut tris = Vec::new();
    let m1 = ring_size(1);
    for j in 0..m1 {
        tris.push([0, start[1] + j, start[1] + (j + 1) % m1]);
    }
    for k in 2..=rings {
        let (mi, mo) = (ring_size(k - 1), ring_size(k));
        let (si, so) = (start[k - 1], start[k]);
        let (mut i, mut j) = (0usize, 0usize);
        while i < mi || j < mo {
            let next_in = (i + 1) as f64 / mi as f64;
            let next_out = (j + 1) as f64 / mo as f64;
            if j == mo || (i < mi && next_in < next_out) {
                tris.push([si + i % mi, so + j % mo, si + (i + 1) % mi]);
                i += 1;
            } else {
                tris.push([si + i % mi, so + j % mo, so + (j + 1) % mo]);
                j += 1;
            }
        }
    }
    (pts, tris)
}

/// Cylinder of the given radius and height with its axis along z, base at z = 0.
///
/// A ring-structured disk triangulation is extruded into `n_axial` prism
/// layers and each prism is cut into three tetrahedra. Diagonals on the
/// quadrilateral prism faces run from the lower-indexed bottom vertex, which
/// keeps neighbouring prisms conforming.
pub fn cylinder_mesh(radius: f64, height: f64, n_radial: usize, n_axial: usize) -> Result<Mesh> {
    if n_radial == 0 || n_axial == 0 {
        return Err(Error::invalid("cylinder_mesh needs n_radial, n_axial >= 1"));
    }
    if !(radius > 0.0 && height > 0.0 && radius.is_finite() && height.is_finite()) {
        return Err(Error::invalid(
            "cylinder radius and height must be positive",
        ));
    }
    let (disk, tris) = disk_triangulation(radius, n_radial);
    let nd = disk.len();
    let mut coords = Vec::with_capacity(3 * nd * (n_axial + 1));
    for l in 0..=n_axial {
        let z = height * l as f64 / n_axial as f64;
        for p in &disk {
            coords.extend_from_slice(&[p[0], p[1], z]);
        }
    }
    let mut cells = Vec::with_capacity(12 * tris.len() * n_axial);
    for l in 0..n_axial {
        let (lo, hi) = (l * nd, (l + 1) * nd);
        for t in &tris {
            let mut s = *t;
            s.sort_unstable();
            let [a, b, c] = s;
            let (a0, b0, c0) = (lo + a, lo + b, lo + c);
            let (a1, b1, c1) = (hi + a, hi + b, hi + c);
            cells.extend_from_slice(&[a0, b0, c0, c1]);
            cells.extend_from_slice(&[a0, b0, b1, c1]);
            cells.extend_from_slice(&[a0, a1, b1, c1]);
        }
    }
    let mut mesh = Mesh::new(3, coords, cells)?;
    let tol = 1e-9 * height.max(radius);
    mesh.mark_boundary(|x, n| {
        if x[2] < tol && n[2] < -0.5 {
            Some(markers::CYL_BOTTOM)
        } else if x[2] > height - tol && n[2] > 0.5 {
            Some(markers::CYL_TOP)
        } else {
            Some(markers::CYL_LATERAL)
        }
    });
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euler_2d(m: &Mesh) -> i64 {
        m.num_vertices() as i64 - m.facets().len() as i64 + m.num_cells() as i64
    }

    #[test]
    fn square_counts() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (4, 2));
        assert_eq!(m.interior_facets().count(), 1);

        let m = unit_square_mesh(2).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (9, 8));
        assert_eq!(m.facets().len(), 16);
        assert_eq!(m.interior_facets().count(), 8);

        let m = unit_square_mesh(4).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (25, 32));
        for n in 1..6 {
            assert_eq!(euler_2d(&unit_square_mesh(n).unwrap()), 1);
        }
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(
            unit_square_mesh(0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(unit_cube_mesh(0), Err(Error::InvalidArgument(_))));
        assert!(cylinder_mesh(1.0, 1.0, 0, 1).is_err());
        assert!(cylinder_mesh(0.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn cube_counts() {
        let m = unit_cube_mesh(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (8, 6));
        assert_eq!(m.facets().len(), 18);
        assert_eq!(m.interior_facets().count(), 6);
        let m = unit_cube_mesh(2).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells()), (27, 48));
    }

    #[test]
    fn volumes_sum_to_domain() {
        for n in [1, 3, 7] {
            let m = unit_square_mesh(n).unwrap();
            assert!((m.total_volume() - 1.0).abs() < 1e-12);
            assert!(m.volumes().iter().all(|&v| v > 0.0));
        }
        for n in [1, 2, 4] {
            let m = unit_cube_mesh(n).unwrap();
            assert!((m.total_volume() - 1.0).abs() < 1e-12);
            assert!(m.volumes().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn every_boundary_facet_is_marked() {
        let meshes = [
            unit_square_mesh(3).unwrap(),
            unit_cube_mesh(2).unwrap(),
            cylinder_mesh(5.0, 5.0, 2, 2).unwrap(),
        ];
        for m in &meshes {
            for (i, _) in m.boundary_facets() {
                assert!(m.marker(i).is_some(), "facet {i} unmarked");
            }
            assert_eq!(m.boundary_markers().len(), m.boundary_facets().count());
        }
        let sq = &meshes[0];
        assert_eq!(sq.facets_with_markers(&[markers::LEFT]).count(), 3);
        assert_eq!(sq.vertices_on(&[markers::LEFT]).len(), 4);
    }

    #[test]
    fn normals_are_unit_and_antiparallel_sum_vanishes() {
        for m in [unit_square_mesh(5).unwrap(), unit_cube_mesh(3).unwrap()] {
            let mut sum = [0.0; 3];
            for f in m.facets() {
                let n = f.normal;
                assert!((dot(&n, &n).sqrt() - 1.0).abs() < 1e-12);
                if let Some(o) = f.outer {
                    let no = f.normal_for(o).unwrap();
                    let ni = f.normal_for(f.inner).unwrap();
                    for k in 0..3 {
                        sum[k] += ni[k] + no[k];
                    }
                }
            }
            assert!(sum.iter().all(|s| s.abs() < 1e-14));
        }
    }

    #[test]
    fn normals_point_outward_on_square_boundary() {
        let m = unit_square_mesh(3).unwrap();
        for (i, f) in m.boundary_facets() {
            let expect = match m.marker(i).unwrap() {
                markers::LEFT => [-1.0, 0.0],
                markers::RIGHT => [1.0, 0.0],
                markers::BOTTOM => [0.0, -1.0],
                _ => [0.0, 1.0],
            };
            assert!((f.normal[0] - expect[0]).abs() < 1e-14);
            assert!((f.normal[1] - expect[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn adjacency_is_an_involution() {
        let m = unit_cube_mesh(2).unwrap();
        for (fi, f) in m.facets().iter().enumerate() {
            for c in f.cells() {
                assert!(m.cell_facets(c).contains(&fi));
            }
        }
        for c in 0..m.num_cells() {
            for &f in m.cell_facets(c) {
                assert!(m.facet(f).cells().any(|x| x == c));
            }
        }
    }

    #[test]
    fn mesh_size_halves_under_refinement() {
        for n in [2, 4, 8] {
            let r = unit_square_mesh(n).unwrap().h() / unit_square_mesh(2 * n).unwrap().h();
            assert!((r - 2.0).abs() < 0.1);
            let r = unit_cube_mesh(n).unwrap().h() / unit_cube_mesh(2 * n).unwrap().h();
            assert!((r - 2.0).abs() < 0.1);
        }
    }

    #[test]
    fn facet_sizes() {
        let m = unit_square_mesh(1).unwrap();
        let (_, diag) = m.interior_facets().next().unwrap();
        assert!((diag.size - 2f64.sqrt()).abs() < 1e-15);
        assert!((diag.measure - 2f64.sqrt()).abs() < 1e-15);
        let m = unit_cube_mesh(1).unwrap();
        for f in m.facets() {
            // every Kuhn face contains a face or body diagonal
            assert!(f.size >= 2f64.sqrt() - 1e-14);
        }
    }

    #[test]
    fn cylinder_geometry() {
        let m = cylinder_mesh(5.0, 5.0, 1, 1).unwrap();
        for v in m.vertices_on(&[markers::CYL_LATERAL]) {
            let p = m.vertex(v);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 5.0).abs() < 1e-9);
        }
        for (nr, na) in [(1, 1), (2, 3), (3, 5), (5, 2)] {
            let (r, h) = (5.0, 4.0);
            let m = cylinder_mesh(r, h, nr, na).unwrap();
            let exact = PI * r * r * h;
            assert!((m.total_volume() - exact).abs() / exact < 0.05);
            assert!(m.volumes().iter().all(|&v| v > 0.0));
        }
        let m = cylinder_mesh(5.0, 5.0, 3, 5).unwrap();
        assert!((1000..1500).contains(&m.num_cells()), "{}", m.num_cells());
    }

    #[test]
    fn degenerate_and_bad_input() {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        assert!(matches!(
            Mesh::new(2, coords, vec![0, 1, 2]),
            Err(Error::DegenerateCell { cell: 0, .. })
        ));
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        assert!(matches!(
            Mesh::new(2, coords.clone(), vec![0, 1, 3]),
            Err(Error::Topology(_))
        ));
        assert!(matches!(
            Mesh::new(2, coords.clone(), vec![0, 1, 2, 2, 1, 0]),
            Err(Error::Topology(_))
        ));
        // clockwise input is reoriented
        let m = Mesh::new(2, coords, vec![0, 2, 1]).unwrap();
        assert!((m.cell_volume(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_manifold_rejected() {
        // three triangles sharing the edge (0, 1)
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.5, 1.0, 0.5, -1.0, 0.5, 2.0];
        let err = Mesh::new(2, coords, vec![0, 1, 2, 0, 1, 3, 0, 1, 4]).unwrap_err();
        assert!(matches!(err, Error::Topology(_)));
    }
}
