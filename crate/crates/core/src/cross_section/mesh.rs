use std::collections::HashMap;

use serde::Serialize;

use super::geometry::{cross, dist, signed_area, SectionGeometry, Shape};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryEdge {
    /// Endpoints in the counter-clockwise order of the owning triangle.
    pub nodes: [usize; 2],
    pub normal: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Longest edge.
    pub h: f64,
}

impl TriangleMesh {
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut owners: HashMap<(usize, usize), u32> = HashMap::new();
        let mut h = 0.0f64;
        for t in &triangles {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Geometry("triangle references a missing vertex".into()));
            }
            for e in 0..3 {
                let (p, q) = (t[e], t[(e + 1) % 3]);
                *owners.entry((p.min(q), p.max(q))).or_default() += 1;
                h = h.max(dist(vertices[p], vertices[q]));
            }
        }
        if let Some((e, c)) = owners.iter().find(|(_, &c)| c > 2) {
            return Err(Error::Geometry(format!("edge {e:?} shared by {c} triangles")));
        }
        let mut boundary_edges = Vec::new();
        for t in &triangles {
            for e in 0..3 {
                let (p, q) = (t[e], t[(e + 1) % 3]);
                if owners[&(p.min(q), p.max(q))] == 1 {
                    let (a, b) = (vertices[p], vertices[q]);
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let length = dx.hypot(dy);
                    boundary_edges.push(BoundaryEdge {
                        nodes: [p, q],
                        normal: [dy / length, -dx / length],
                        length,
                    });
                }
            }
        }
        let mesh = Self {
            vertices,
            triangles,
            boundary_edges,
            h,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, t) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(k);
            if !(a > 0.0) {
                return Err(Error::Geometry(format!(
                    "triangle {k} {t:?} has signed area {a:.3e}"
                )));
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_area(&self, k: usize) -> f64 {
        let [i, j, l] = self.triangles[k];
        0.5 * cross(self.vertices[i], self.vertices[j], self.vertices[l])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|k| self.triangle_area(k)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.length).sum()
    }

    fn translate(&mut self, t: [f64; 2]) {
        if t != [0.0, 0.0] {
            for v in &mut self.vertices {
                v[0] += t[0];
                v[1] += t[1];
            }
        }
    }
}

/// Conforming triangulation with every edge no longer than `target_h`.
pub fn build_mesh(geometry: &SectionGeometry, target_h: f64) -> Result<TriangleMesh> {
    geometry.validate()?;
    let limit = geometry.min_extent() / 4.0;
    if !(target_h > 0.0 && target_h < limit) {
        return Err(Error::Geometry(format!(
            "target_h {target_h} must lie in (0, {limit})"
        )));
    }
    let mut mesh = match &geometry.shape {
        Shape::Rectangle { a, b } => rectangle_mesh(*a, *b, target_h)?,
        Shape::Disk { r } => disk_mesh(*r, target_h)?,
        Shape::Triangle { vertices } => polygon_mesh(vertices, target_h)?,
        Shape::Polygon { vertices } => polygon_mesh(vertices, target_h)?,
    };
    mesh.translate(geometry.offset);
    Ok(mesh)
}

/// Criss-cross grid: each cell split into four triangles through its centre.
fn rectangle_mesh(a: f64, b: f64, target_h: f64) -> Result<TriangleMesh> {
    let nx = (a / target_h).ceil() as usize;
    let ny = (b / target_h).ceil() as usize;
    let (dx, dy) = (a / nx as f64, b / ny as f64);
    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([-0.5 * a + i as f64 * dx, -0.5 * b + j as f64 * dy]);
        }
    }
    let centre0 = vertices.len();
    for j in 0..ny {
        for i in 0..nx {
            vertices.push([
                -0.5 * a + (i as f64 + 0.5) * dx,
                -0.5 * b + (j as f64 + 0.5) * dy,
            ]);
        }
    }
    let mut triangles = Vec::with_capacity(4 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let c = centre0 + j * nx + i;
            let (bl, br) = (grid(i, j), grid(i + 1, j));
            let (tl, tr) = (grid(i, j + 1), grid(i + 1, j + 1));
            triangles.push([bl, br, c]);
            triangles.push([br, tr, c]);
            triangles.push([tr, tl, c]);
            triangles.push([tl, bl, c]);
        }
    }
    TriangleMesh::from_parts(vertices, triangles)
}

/// Concentric rings whose node counts are multiples of six, so the mesh has
/// exact sixfold rotational symmetry.
fn disk_mesh(r: f64, target_h: f64) -> Result<TriangleMesh> {
    let mut rings = (r / target_h).ceil() as usize;
    loop {
        let mesh = disk_rings(r, rings)?;
        if mesh.h <= target_h {
            return Ok(mesh);
        }
        rings += 1;
    }
}

fn disk_rings(r: f64, rings: usize) -> Result<TriangleMesh> {
    let dr = r / rings as f64;
    let counts: Vec<usize> = (0..=rings)
        .map(|k| {
            if k == 0 {
                1
            } else {
                6 * ((k as f64 * std::f64::consts::FRAC_PI_3) - 1e-9).ceil() as usize
            }
        })
        .collect();
    let mut start = vec![0usize; rings + 2];
    for k in 0..=rings {
        start[k + 1] = start[k] + counts[k];
    }
    let mut vertices = Vec::with_capacity(start[rings + 1]);
    vertices.push([0.0, 0.0]);
    for k in 1..=rings {
        let rad = if k == rings { r } else { k as f64 * dr };
        for j in 0..counts[k] {
            let phi = std::f64::consts::TAU * j as f64 / counts[k] as f64;
            vertices.push([rad * phi.cos(), rad * phi.sin()]);
        }
    }
    let mut triangles = Vec::new();
    let n1 = counts[1];
    for j in 0..n1 {
        triangles.push([0, start[1] + j, start[1] + (j + 1) % n1]);
    }
    for k in 2..=rings {
        let (na, nb) = (counts[k - 1], counts[k]);
        let ia = |i: usize| start[k - 1] + i % na;
        let ib = |j: usize| start[k] + j % nb;
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            // compare the next angles i+1/na and j+1/nb exactly
            let inner_first = j == nb || (i < na && (i + 1) * nb < (j + 1) * na);
            if inner_first {
                triangles.push([ia(i), ib(j), ia(i + 1)]);
                i += 1;
            } else {
                triangles.push([ia(i), ib(j), ib(j + 1)]);
                j += 1;
            }
        }
    }
    TriangleMesh::from_parts(vertices, triangles)
}

/// Ear-clipped coarse triangulation, each piece split uniformly into N²
/// congruent triangles with nodes shared along coarse edges.
fn polygon_mesh(vertices: &[[f64; 2]], target_h: f64) -> Result<TriangleMesh> {
    let mut poly = vertices.to_vec();
    if signed_area(&poly) < 0.0 {
        poly.reverse();
    }
    let coarse = ear_clip(&poly)?;
    let poly = &poly;
    let longest = coarse
        .iter()
        .flat_map(|t| (0..3).map(move |e| dist(poly[t[e]], poly[t[(e + 1) % 3]])))
        .fold(0.0, f64::max);
    let mut n = (longest / target_h).ceil() as usize;
    loop {
        let mesh = subdivide(poly, &coarse, n)?;
        // rounding in the node coordinates can push h a hair over the target
        if mesh.h <= target_h {
            return Ok(mesh);
        }
        n += 1;
    }
}

fn subdivide(poly: &[[f64; 2]], coarse: &[[usize; 3]], n: usize) -> Result<TriangleMesh> {

    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let mut node = |counts: [(usize, usize); 3]| -> usize {
        let mut key: Vec<(usize, usize)> = counts.iter().copied().filter(|c| c.1 > 0).collect();
        key.sort_unstable();
        *index.entry(key.clone()).or_insert_with(|| {
            let mut p = [0.0, 0.0];
            for &(v, c) in &key {
                let w = c as f64 / n as f64;
                p[0] += w * poly[v][0];
                p[1] += w * poly[v][1];
            }
            nodes.push(p);
            nodes.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(coarse.len() * n * n);
    for t in coarse {
        let mut id = vec![vec![0usize; n + 1]; n + 1];
        for a in 0..=n {
            for b in 0..=n - a {
                id[a][b] = node([(t[0], n - a - b), (t[1], a), (t[2], b)]);
            }
        }
        for a in 0..n {
            for b in 0..n - a {
                triangles.push([id[a][b], id[a + 1][b], id[a][b + 1]]);
                if a + b + 2 <= n {
                    triangles.push([id[a + 1][b], id[a + 1][b + 1], id[a][b + 1]]);
                }
            }
        }
    }
    TriangleMesh::from_parts(nodes, triangles)
}

fn ear_clip(poly: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    let mut remaining: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len() - 2);
    while remaining.len() > 3 {
        let m = remaining.len();
        let ear = (0..m).find(|&k| {
            let (p, c, q) = (
                remaining[(k + m - 1) % m],
                remaining[k],
                remaining[(k + 1) % m],
            );
            if cross(poly[p], poly[c], poly[q]) <= 0.0 {
                return false;
            }
            remaining
                .iter()
                .filter(|&&v| v != p && v != c && v != q)
                .all(|&v| !inside_closed(poly[v], poly[p], poly[c], poly[q]))
        });
        let k = ear.ok_or_else(|| Error::Geometry("polygon has no ear".into()))?;
        let m = remaining.len();
        out.push([
            remaining[(k + m - 1) % m],
            remaining[k],
            remaining[(k + 1) % m],
        ]);
        remaining.remove(k);
    }
    out.push([remaining[0], remaining[1], remaining[2]]);
    Ok(out)
}

fn inside_closed(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}
