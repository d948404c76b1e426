//! Structured linear-triangle meshes.

use std::f64::consts::TAU;
use std::io::{self, Write};

use super::FemError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshShape {
    /// `[0, w] x [0, h]` split into `nx * ny` cells, two triangles each.
    Rectangle {
        nx: usize,
        ny: usize,
        w: f64,
        h: f64,
    },
    /// Disk centred at the origin: ring `k` (1..=rings) carries
    /// `k * sectors` equally spaced nodes, giving `sectors * rings^2`
    /// triangles of near-uniform size.
    Disk {
        rings: usize,
        sectors: usize,
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Boundary nodes in counterclockwise order.
    pub boundary_nodes: Vec<usize>,
    pub element_area: Vec<f64>,
}

pub fn build_mesh(shape: MeshShape) -> Result<Mesh, FemError> {
    match shape {
        MeshShape::Rectangle { nx, ny, w, h } => rectangle(nx, ny, w, h),
        MeshShape::Disk {
            rings,
            sectors,
            radius,
        } => disk(rings, sectors, radius),
    }
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn finish(
    nodes: Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
) -> Result<Mesh, FemError> {
    let mut triangles = Vec::with_capacity(tris.len());
    let mut element_area = Vec::with_capacity(tris.len());
    for mut t in tris {
        let mut a = signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
        if a < 0.0 {
            t.swap(1, 2);
            a = -a;
        }
        if !(a > 0.0) {
            return Err(FemError::DegenerateGeometry(format!(
                "zero-area triangle {t:?}"
            )));
        }
        triangles.push(t);
        element_area.push(a);
    }
    Ok(Mesh {
        nodes,
        triangles,
        boundary_nodes,
        element_area,
    })
}

fn rectangle(nx: usize, ny: usize, w: f64, h: f64) -> Result<Mesh, FemError> {
    if nx == 0 || ny == 0 || !(w > 0.0) || !(h > 0.0) {
        return Err(FemError::DegenerateGeometry(format!(
            "rectangle({nx}, {ny}, {w}, {h})"
        )));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([w * i as f64 / nx as f64, h * j as f64 / ny as f64]);
        }
    }
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            // diagonal from lower-left to upper-right keeps the mesh
            // symmetric about the line y = x on square domains
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    boundary.extend((0..nx).map(|i| id(i, 0)));
    boundary.extend((0..ny).map(|j| id(nx, j)));
    boundary.extend((1..=nx).rev().map(|i| id(i, ny)));
    boundary.extend((1..=ny).rev().map(|j| id(0, j)));
    finish(nodes, tris, boundary)
}

fn disk(rings: usize, sectors: usize, radius: f64) -> Result<Mesh, FemError> {
    if rings == 0 || sectors < 3 || !(radius > 0.0) {
        return Err(FemError::DegenerateGeometry(format!(
            "disk({rings}, {sectors}, {radius})"
        )));
    }
    let mut nodes = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(nodes.len());
        let r = radius * k as f64 / rings as f64;
        let m = k * sectors;
        for j in 0..m {
            let a = TAU * j as f64 / m as f64;
            nodes.push([r * a.cos(), r * a.sin()]);
        }
    }
    let mut tris = Vec::with_capacity(sectors * rings * rings);
    for j in 0..sectors {
        tris.push([0, ring_start[1] + j, ring_start[1] + (j + 1) % sectors]);
    }
    for k in 2..=rings {
        let (n_in, n_out) = ((k - 1) * sectors, k * sectors);
        let (s_in, s_out) = (ring_start[k - 1], ring_start[k]);
        // merge the two rings by angle; inner node i sits at i/n_in turns,
        // outer node o at o/n_out turns; compare exactly in integers
        let (mut i, mut o) = (0usize, 0usize);
        while i < n_in || o < n_out {
            let advance_outer = if i == n_in {
                true
            } else if o == n_out {
                false
            } else {
                // next outer angle (o+1)/n_out vs next inner angle (i+1)/n_in
                (o + 1) * n_in <= (i + 1) * n_out
            };
            if advance_outer {
                tris.push([s_in + i % n_in, s_out + o % n_out, s_out + (o + 1) % n_out]);
                o += 1;
            } else {
                tris.push([s_in + i % n_in, s_out + o % n_out, s_in + (i + 1) % n_in]);
                i += 1;
            }
        }
    }
    let outer = ring_start[rings];
    let boundary = (outer..outer + rings * sectors).collect();
    finish(nodes, tris, boundary)
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn total_area(&self) -> f64 {
        self.element_area.iter().sum()
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[e];
        let (p, q, r) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    pub fn centroids(&self) -> Vec<[f64; 2]> {
        (0..self.element_count())
            .map(|e| self.centroid(e))
            .collect()
    }

    /// Index of the triangle containing `p` (boundary inclusive), if any.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let tol = 1e-12;
        self.triangles.iter().enumerate().position(|(e, t)| {
            let (a, b, c) = (self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]);
            let area = self.element_area[e];
            signed_area(a, b, p) >= -tol * area
                && signed_area(b, c, p) >= -tol * area
                && signed_area(c, a, p) >= -tol * area
        })
    }

    /// Element pairs sharing an edge, with the shared edge length.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize, f64)> {
        use std::collections::BTreeMap;
        let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut pairs = Vec::new();
        for (e, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&other) = owner.get(&key) {
                    let (p, q) = (self.nodes[a], self.nodes[b]);
                    pairs.push((
                        other,
                        e,
                        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt(),
                    ));
                } else {
                    owner.insert(key, e);
                }
            }
        }
        pairs.sort_by_key(|&(a, b, _)| (a, b));
        pairs
    }

    /// Plain-text dump: a `nodes N` header then `id x y` lines, a
    /// `triangles M` header then `id a b c` lines.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "nodes {}", self.nodes.len())?;
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(out, "{i} {} {}", p[0], p[1])?;
        }
        writeln!(out, "triangles {}", self.triangles.len())?;
        for (e, t) in self.triangles.iter().enumerate() {
            writeln!(out, "{e} {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
