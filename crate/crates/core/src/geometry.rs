//! Periodic cell geometry.
//!
//! The reference cell is a rectangle with an extracellular frame around an
//! inner box; a vertical plane splits the box into the two intracellular
//! regions. Cells are triangulated on a structured grid, scaled by ε and glued
//! along their extracellular edges.
//!
//! Vertices on an interface are duplicated once per adjacent subdomain, so a
//! vertex belongs to exactly one of I1, I2, E and each potential field owns its
//! own trace degrees of freedom.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subdomain {
    I1,
    I2,
    E,
}

impl Subdomain {
    pub const ALL: [Subdomain; 3] = [Subdomain::I1, Subdomain::I2, Subdomain::E];

    /// Integer tag used in mesh exports.
    pub fn tag(self) -> i32 {
        match self {
            Subdomain::E => 0,
            Subdomain::I1 => 1,
            Subdomain::I2 => 2,
        }
    }

    pub fn is_intracellular(self) -> bool {
        self != Subdomain::E
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitCellSpec {
    pub cell_lengths: (f64, f64),
    pub inner_margin: f64,
    pub split_fraction: f64,
    pub mesh_density: usize,
}

impl UnitCellSpec {
    pub fn new(cell_lengths: (f64, f64), inner_margin: f64, split_fraction: f64, mesh_density: usize) -> Self {
        Self {
            cell_lengths,
            inner_margin,
            split_fraction,
            mesh_density,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (l1, l2) = self.cell_lengths;
        if !(l1.is_finite() && l2.is_finite() && l1 > 0.0 && l2 > 0.0) {
            return Err(Error::InvalidSpec(format!("cell lengths must be positive, got ({l1}, {l2})")));
        }
        if !(self.inner_margin > 0.0 && self.inner_margin < 0.5) {
            return Err(Error::InvalidSpec(format!(
                "inner_margin must lie in (0, 0.5), got {}",
                self.inner_margin
            )));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "split_fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if self.mesh_density == 0 {
            return Err(Error::InvalidSpec("mesh_density must be at least 1".into()));
        }
        Ok(())
    }

    /// Inner box as ([x0, x1], [y0, y1]) in cell coordinates.
    pub fn inner_box(&self) -> ([f64; 2], [f64; 2]) {
        let (l1, l2) = self.cell_lengths;
        let m = self.inner_margin;
        ([m * l1, (1.0 - m) * l1], [m * l2, (1.0 - m) * l2])
    }

    /// x coordinate of the gap-junction plane.
    pub fn split_x(&self) -> f64 {
        let ([x0, x1], _) = self.inner_box();
        x0 + self.split_fraction * (x1 - x0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingSpec {
    pub counts: (usize, usize),
    pub epsilon: f64,
}

/// An interface edge. `inner[k]` and `outer[k]` are coincident vertices: the
/// intracellular copy (the I1 copy on the gap junction) and the copy on the
/// other side. `normal` points out of the inner side.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceFacet {
    pub inner: [usize; 2],
    pub outer: [usize; 2],
    pub normal: [f64; 2],
    pub cell: usize,
}

#[derive(Clone, Debug)]
pub struct MicroMesh {
    pub vertices: Vec<[f64; 2]>,
    pub vertex_domain: Vec<Subdomain>,
    /// Cell that created the vertex. Extracellular vertices on shared cell
    /// edges keep the first owner.
    pub vertex_cell: Vec<usize>,
    pub triangles: Vec<[usize; 3]>,
    pub triangle_domain: Vec<Subdomain>,
    pub triangle_cell: Vec<usize>,
    pub facets_gamma1: Vec<InterfaceFacet>,
    pub facets_gamma2: Vec<InterfaceFacet>,
    pub facets_gamma12: Vec<InterfaceFacet>,
    pub exterior_facets: Vec<[usize; 2]>,
    pub epsilon: f64,
    pub counts: (usize, usize),
    pub cell: UnitCellSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterfaceMeasures {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma12: f64,
    pub omega_i1: f64,
    pub omega_i2: f64,
    pub omega_e: f64,
}

impl InterfaceMeasures {
    pub fn total_area(&self) -> f64 {
        self.omega_i1 + self.omega_i2 + self.omega_e
    }
}

fn breakpoints(bps: &[f64], density: usize) -> (Vec<f64>, Vec<usize>) {
    let mut pts = vec![bps[0]];
    let mut marks = vec![0];
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = (((b - a) * density as f64) - 1e-9).ceil().max(1.0) as usize;
        for k in 1..pieces {
            pts.push(a + (b - a) * k as f64 / pieces as f64);
        }
        pts.push(b);
        marks.push(pts.len() - 1);
    }
    (pts, marks)
}

/// Triangulates one reference cell.
pub fn build_unit_cell(spec: &UnitCellSpec) -> Result<MicroMesh> {
    spec.validate()?;
    let (l1, l2) = spec.cell_lengths;
    let ([bx0, bx1], [by0, by1]) = spec.inner_box();
    let (xs, xm) = breakpoints(&[0.0, bx0, spec.split_x(), bx1, l1], spec.mesh_density);
    let (ys, ym) = breakpoints(&[0.0, by0, by1, l2], spec.mesh_density);
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let (ix0, ixs, ix1) = (xm[1], xm[2], xm[3]);
    let (iy0, iy1) = (ym[1], ym[2]);

    let rect = |i: usize, j: usize| -> Subdomain {
        if (ix0..ix1).contains(&i) && (iy0..iy1).contains(&j) {
            if i < ixs {
                Subdomain::I1
            } else {
                Subdomain::I2
            }
        } else {
            Subdomain::E
        }
    };
    let slot = |d: Subdomain| d as usize;

    let mut vertices = Vec::new();
    let mut vertex_domain = Vec::new();
    let mut node_vid = vec![[usize::MAX; 3]; (nx + 1) * (ny + 1)];
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    for j in 0..=ny {
        for i in 0..=nx {
            let mut present = [false; 3];
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                if i >= di && j >= dj && i - di < nx && j - dj < ny {
                    present[slot(rect(i - di, j - dj))] = true;
                }
            }
            for d in Subdomain::ALL {
                if present[slot(d)] {
                    node_vid[node(i, j)][slot(d)] = vertices.len();
                    vertices.push([xs[i], ys[j]]);
                    vertex_domain.push(d);
                }
            }
        }
    }
    let vid = |i: usize, j: usize, d: Subdomain| node_vid[node(i, j)][slot(d)];

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut triangle_domain = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let d = rect(i, j);
            let (a, b, c, e) = (vid(i, j, d), vid(i + 1, j, d), vid(i + 1, j + 1, d), vid(i, j + 1, d));
            triangles.push([a, b, c]);
            triangles.push([a, c, e]);
            triangle_domain.push(d);
            triangle_domain.push(d);
        }
    }

    let mut g1 = Vec::new();
    let mut g2 = Vec::new();
    let mut g12 = Vec::new();
    // `lo`/`hi` are the rectangles on the negative/positive side of an edge
    // whose unit normal in the positive direction is `n`.
    let mut push_interface = |lo: Subdomain, hi: Subdomain, ends: [(usize, usize); 2], n: [f64; 2]| {
        if lo == hi {
            return;
        }
        let flip = [-n[0], -n[1]];
        let (inner_d, outer_d, normal) = match (lo, hi) {
            (Subdomain::I1, Subdomain::I2) => (lo, hi, n),
            (Subdomain::I2, Subdomain::I1) => (hi, lo, flip),
            (d, Subdomain::E) => (d, Subdomain::E, n),
            (Subdomain::E, d) => (d, Subdomain::E, flip),
            _ => unreachable!(),
        };
        let facet = InterfaceFacet {
            inner: ends.map(|(i, j)| vid(i, j, inner_d)),
            outer: ends.map(|(i, j)| vid(i, j, outer_d)),
            normal,
            cell: 0,
        };
        match (inner_d, outer_d) {
            (Subdomain::I1, Subdomain::I2) => g12.push(facet),
            (Subdomain::I1, Subdomain::E) => g1.push(facet),
            (Subdomain::I2, Subdomain::E) => g2.push(facet),
            _ => unreachable!(),
        }
    };
    for i in 1..nx {
        for j in 0..ny {
            push_interface(rect(i - 1, j), rect(i, j), [(i, j), (i, j + 1)], [1.0, 0.0]);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            push_interface(rect(i, j - 1), rect(i, j), [(i, j), (i + 1, j)], [0.0, 1.0]);
        }
    }

    let e = Subdomain::E;
    let mut exterior = Vec::new();
    for i in 0..nx {
        exterior.push([vid(i, 0, e), vid(i + 1, 0, e)]);
        exterior.push([vid(i, ny, e), vid(i + 1, ny, e)]);
    }
    for j in 0..ny {
        exterior.push([vid(0, j, e), vid(0, j + 1, e)]);
        exterior.push([vid(nx, j, e), vid(nx, j + 1, e)]);
    }

    let nv = vertices.len();
    let nt = triangles.len();
    Ok(MicroMesh {
        vertices,
        vertex_domain,
        vertex_cell: vec![0; nv],
        triangles,
        triangle_domain,
        triangle_cell: vec![0; nt],
        facets_gamma1: g1,
        facets_gamma2: g2,
        facets_gamma12: g12,
        exterior_facets: exterior,
        epsilon: 1.0,
        counts: (1, 1),
        cell: spec.clone(),
    })
}

/// Places `counts.0 × counts.1` copies of a reference cell scaled by ε and
/// merges the extracellular vertices on shared cell edges.
pub fn tile(cell: &MicroMesh, tiling: &TilingSpec) -> Result<MicroMesh> {
    let (cx, cy) = tiling.counts;
    if cx == 0 || cy == 0 {
        return Err(Error::InvalidSpec("tiling counts must be positive".into()));
    }
    if !(tiling.epsilon > 0.0 && tiling.epsilon.is_finite()) {
        return Err(Error::InvalidSpec(format!("epsilon must be positive, got {}", tiling.epsilon)));
    }
    if cell.counts != (1, 1) || cell.epsilon != 1.0 {
        return Err(Error::Contract("tile expects an unscaled single-cell mesh".into()));
    }
    let (l1, l2) = cell.cell.cell_lengths;
    let eps = tiling.epsilon;

    let mut right_of = HashMap::new();
    let mut top_of = HashMap::new();
    for (v, p) in cell.vertices.iter().enumerate() {
        if p[0] == l1 {
            right_of.insert(p[1].to_bits(), v);
        }
        if p[1] == l2 {
            top_of.insert(p[0].to_bits(), v);
        }
    }
    let left_partner: Vec<Option<usize>> = cell
        .vertices
        .iter()
        .map(|p| if p[0] == 0.0 { right_of.get(&p[1].to_bits()).copied() } else { None })
        .collect();
    let bottom_partner: Vec<Option<usize>> = cell
        .vertices
        .iter()
        .map(|p| if p[1] == 0.0 { top_of.get(&p[0].to_bits()).copied() } else { None })
        .collect();

    let ncell = cx * cy;
    let nv = cell.vertices.len();
    let mut gid = vec![usize::MAX; ncell * nv];
    let mut out = MicroMesh {
        vertices: Vec::new(),
        vertex_domain: Vec::new(),
        vertex_cell: Vec::new(),
        triangles: Vec::new(),
        triangle_domain: Vec::new(),
        triangle_cell: Vec::new(),
        facets_gamma1: Vec::new(),
        facets_gamma2: Vec::new(),
        facets_gamma12: Vec::new(),
        exterior_facets: Vec::new(),
        epsilon: eps,
        counts: tiling.counts,
        cell: cell.cell.clone(),
    };

    for iy in 0..cy {
        for ix in 0..cx {
            let c = iy * cx + ix;
            let hx = ix as f64 * l1;
            let hy = iy as f64 * l2;
            for v in 0..nv {
                let merged = match (left_partner[v], bottom_partner[v]) {
                    (Some(w), _) if ix > 0 => Some(gid[(c - 1) * nv + w]),
                    (_, Some(w)) if iy > 0 => Some(gid[(c - cx) * nv + w]),
                    _ => None,
                };
                gid[c * nv + v] = merged.unwrap_or_else(|| {
                    let p = cell.vertices[v];
                    out.vertices.push([eps * (hx + p[0]), eps * (hy + p[1])]);
                    out.vertex_domain.push(cell.vertex_domain[v]);
                    out.vertex_cell.push(c);
                    out.vertices.len() - 1
                });
            }
            let g = |v: usize| gid[c * nv + v];
            for (t, d) in cell.triangles.iter().zip(&cell.triangle_domain) {
                out.triangles.push(t.map(g));
                out.triangle_domain.push(*d);
                out.triangle_cell.push(c);
            }
            let map_facets = |src: &[InterfaceFacet], dst: &mut Vec<InterfaceFacet>| {
                for f in src {
                    dst.push(InterfaceFacet {
                        inner: f.inner.map(g),
                        outer: f.outer.map(g),
                        normal: f.normal,
                        cell: c,
                    });
                }
            };
            map_facets(&cell.facets_gamma1, &mut out.facets_gamma1);
            map_facets(&cell.facets_gamma2, &mut out.facets_gamma2);
            map_facets(&cell.facets_gamma12, &mut out.facets_gamma12);
            for f in &cell.exterior_facets {
                let (p, q) = (cell.vertices[f[0]], cell.vertices[f[1]]);
                let keep = (p[0] == 0.0 && q[0] == 0.0 && ix == 0)
                    || (p[0] == l1 && q[0] == l1 && ix + 1 == cx)
                    || (p[1] == 0.0 && q[1] == 0.0 && iy == 0)
                    || (p[1] == l2 && q[1] == l2 && iy + 1 == cy);
                if keep {
                    out.exterior_facets.push(f.map(g));
                }
            }
        }
    }
    Ok(out)
}

impl MicroMesh {
    pub fn n_cells(&self) -> usize {
        self.counts.0 * self.counts.1
    }

    /// Lower-left corner of cell `c` in physical coordinates.
    pub fn cell_origin(&self, c: usize) -> [f64; 2] {
        let (l1, l2) = self.cell.cell_lengths;
        let ix = c % self.counts.0;
        let iy = c / self.counts.0;
        [self.epsilon * ix as f64 * l1, self.epsilon * iy as f64 * l2]
    }

    /// Fast variable y = (x − origin)/ε of a point inside cell `c`.
    pub fn local_coords(&self, p: [f64; 2], c: usize) -> [f64; 2] {
        let o = self.cell_origin(c);
        [(p[0] - o[0]) / self.epsilon, (p[1] - o[1]) / self.epsilon]
    }

    /// Physical extent of the tiled domain.
    pub fn domain_size(&self) -> (f64, f64) {
        let (l1, l2) = self.cell.cell_lengths;
        (
            self.epsilon * l1 * self.counts.0 as f64,
            self.epsilon * l2 * self.counts.1 as f64,
        )
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(self.triangles[t].map(|v| self.vertices[v]))
    }

    pub fn triangle_centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_length(&self, e: [usize; 2]) -> f64 {
        let (p, q) = (self.vertices[e[0]], self.vertices[e[1]]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn facets(&self, which: Interface) -> &[InterfaceFacet] {
        match which {
            Interface::Gamma1 => &self.facets_gamma1,
            Interface::Gamma2 => &self.facets_gamma2,
            Interface::Gamma12 => &self.facets_gamma12,
        }
    }

    /// Number of edge-connected components formed by the triangles of `d`.
    pub fn component_count(&self, d: Subdomain) -> usize {
        let tris: Vec<usize> = (0..self.triangles.len()).filter(|&t| self.triangle_domain[t] == d).collect();
        let mut uf = UnionFind::new(self.triangles.len());
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for &t in &tris {
            let tri = self.triangles[t];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&o) = seen.get(&key) {
                    uf.union(o, t);
                } else {
                    seen.insert(key, t);
                }
            }
        }
        let mut roots: Vec<usize> = tris.iter().map(|&t| uf.find(t)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Vertex ids of one intracellular component, identified by cell and side.
    pub fn component_vertices(&self, d: Subdomain, cell: usize) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| self.vertex_domain[v] == d && self.vertex_cell[v] == cell)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Interface {
    Gamma1,
    Gamma2,
    Gamma12,
}

pub(crate) fn signed_area(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Facet lengths and subdomain areas.
pub fn interface_measures(mesh: &MicroMesh) -> InterfaceMeasures {
    let len = |fs: &[InterfaceFacet]| fs.iter().map(|f| mesh.edge_length(f.inner)).sum::<f64>();
    let mut area = [0.0; 3];
    for t in 0..mesh.triangles.len() {
        area[mesh.triangle_domain[t] as usize] += mesh.triangle_area(t);
    }
    InterfaceMeasures {
        gamma1: len(&mesh.facets_gamma1),
        gamma2: len(&mesh.facets_gamma2),
        gamma12: len(&mesh.facets_gamma12),
        omega_i1: area[Subdomain::I1 as usize],
        omega_i2: area[Subdomain::I2 as usize],
        omega_e: area[Subdomain::E as usize],
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> MicroMesh {
        build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 4)).unwrap()
    }

    #[test]
    fn gap_plane_and_first_region() {
        let m = reference();
        assert!(!m.facets_gamma12.is_empty());
        for f in &m.facets_gamma12 {
            for v in f.inner.iter().chain(&f.outer) {
                let p = m.vertices[*v];
                assert_eq!(p[0], 0.5);
                assert!((0.25..=0.75).contains(&p[1]));
            }
            assert_eq!(f.normal, [1.0, 0.0]);
        }
        for t in 0..m.triangles.len() {
            let c = m.triangle_centroid(t);
            let in_i1 = (0.25..0.5).contains(&c[0]) && (0.25..0.75).contains(&c[1]);
            assert_eq!(m.triangle_domain[t] == Subdomain::I1, in_i1);
        }
    }

    #[test]
    fn measures_of_reference_cell() {
        let mm = interface_measures(&reference());
        assert!((mm.gamma12 - 0.5).abs() < 1e-14);
        assert!((mm.omega_i1 - 0.125).abs() < 1e-14);
        assert!((mm.omega_i2 - 0.125).abs() < 1e-14);
        assert!((mm.gamma1 - 1.0).abs() < 1e-14);
        assert!((mm.gamma2 - 1.0).abs() < 1e-14);
        assert!((mm.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_margin() {
        let err = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.6, 0.5, 4)).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
        assert!(build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 1.0, 4)).is_err());
    }

    #[test]
    fn identity_tiling() {
        let m = reference();
        let t = tile(&m, &TilingSpec { counts: (1, 1), epsilon: 1.0 }).unwrap();
        assert_eq!(t.vertices, m.vertices);
        assert_eq!(t.triangles, m.triangles);
        assert_eq!(t.facets_gamma1, m.facets_gamma1);
        assert_eq!(t.exterior_facets, m.exterior_facets);
    }

    #[test]
    fn two_by_one_tiling() {
        let t = tile(&reference(), &TilingSpec { counts: (2, 1), epsilon: 0.5 }).unwrap();
        assert_eq!(t.domain_size(), (1.0, 0.5));
        let xmax = t.vertices.iter().map(|p| p[0]).fold(f64::MIN, f64::max);
        let ymax = t.vertices.iter().map(|p| p[1]).fold(f64::MIN, f64::max);
        assert_eq!((xmax, ymax), (1.0, 0.5));
        let mut gap_cells: Vec<usize> = t.facets_gamma12.iter().map(|f| f.cell).collect();
        gap_cells.dedup();
        assert_eq!(gap_cells, vec![0, 1]);
    }

    #[test]
    fn extracellular_connected_after_tiling() {
        let t = tile(&reference(), &TilingSpec { counts: (3, 3), epsilon: 1.0 / 3.0 }).unwrap();
        assert_eq!(t.component_count(Subdomain::E), 1);
        assert_eq!(t.component_count(Subdomain::I1), 9);
        assert_eq!(t.component_count(Subdomain::I2), 9);
    }
}
