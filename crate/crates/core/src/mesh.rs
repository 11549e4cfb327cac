//! Structured triangular meshes of a rectangular rock mass, cavity carving by
//! element deactivation, boundary tagging and P1 element geometry.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `(x_min, x_max) × (y_min, y_max)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub const fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self { x_min, x_max, y_min, y_max }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    /// Strict interior test.
    pub fn contains_strict(&self, p: [f64; 2]) -> bool {
        p[0] > self.x_min && p[0] < self.x_max && p[1] > self.y_min && p[1] < self.y_max
    }
}

/// Cavity `S(t) = (x_start, x_start + growth·t) × (y_center − half_height, y_center + half_height)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub x_start: f64,
    /// Advance of the cavity front per step (m/step).
    pub growth: f64,
    pub half_height: f64,
    pub y_center: f64,
}

impl CavitySpec {
    /// Cavity of the block-caving experiments, `(−500, −500 + 40 t) × (−20, 20)`.
    pub const BLOCK_CAVING: CavitySpec = CavitySpec {
        x_start: -500.0,
        growth: 40.0,
        half_height: 20.0,
        y_center: 0.0,
    };

    pub fn rect(&self, step: usize) -> Rect {
        Rect::new(
            self.x_start,
            self.x_start + self.growth * step as f64,
            self.y_center - self.half_height,
            self.y_center + self.half_height,
        )
    }

    /// Checks that the cavity at `step` stays strictly inside `domain`.
    pub fn validate(&self, domain: &Rect, step: usize) -> Result<()> {
        if !(self.growth >= 0.0) || !(self.half_height > 0.0) {
            return Err(Error::Mesh(format!(
                "cavity growth must be non-negative and half-height positive (got {} and {})",
                self.growth, self.half_height
            )));
        }
        let r = self.rect(step);
        if r.x_min > domain.x_min && r.x_max < domain.x_max && r.y_min > domain.y_min && r.y_max < domain.y_max {
            Ok(())
        } else {
            Err(Error::Mesh(format!(
                "cavity ({}, {}) x ({}, {}) at step {step} leaves the domain",
                r.x_min, r.x_max, r.y_min, r.y_max
            )))
        }
    }
}

/// How each grid cell is cut into triangles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    /// Two triangles per cell along the (i, j)–(i+1, j+1) diagonal.
    #[default]
    Diagonal,
    /// Four triangles per cell around an added center node.
    Crossed,
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "diagonal" => Ok(Split::Diagonal),
            "crossed" => Ok(Split::Crossed),
            other => Err(format!("unknown split `{other}` (expected diagonal or crossed)")),
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Diagonal => "diagonal",
            Split::Crossed => "crossed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// `x = x_min` or `x = x_max`
    Lat,
    /// `y = y_max`
    Up,
    /// `y = y_min`
    Down,
    /// Edges exposed by carving.
    Cav,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    domain: Rect,
    cells: [usize; 2],
    split: Split,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    active: Vec<bool>,
    boundary: Vec<BoundaryEdge>,
}

/// Structured mesh of `domain` with cells of size close to `h`.
///
/// The cell counts are `round(width / h)` and `round(height / h)`, so the
/// effective cell size is adjusted to divide the rectangle exactly. Nodes are
/// numbered along the shorter side first, which keeps the stiffness profile
/// narrow.
pub fn build_mesh(domain: Rect, h: f64, split: Split) -> Result<Mesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::param("mesh_size", format!("must be positive, got {h}")));
    }
    if !(domain.width() > 0.0 && domain.height() > 0.0) {
        return Err(Error::Mesh("domain rectangle is empty".into()));
    }
    if h > domain.width().min(domain.height()) {
        return Err(Error::Mesh(format!(
            "mesh size {h} exceeds the shortest side of the domain"
        )));
    }
    let nx = (domain.width() / h).round() as usize;
    let ny = (domain.height() / h).round() as usize;
    if nx < 2 || ny < 2 {
        return Err(Error::Mesh(format!(
            "mesh size {h} yields {nx} x {ny} cells, need at least 2 in each direction"
        )));
    }
    let hx = domain.width() / nx as f64;
    let hy = domain.height() / ny as f64;

    // (slow, fast) axis counts
    let x_slow = nx >= ny;
    let (ns, nf) = if x_slow { (nx, ny) } else { (ny, nx) };
    let crossed = split == Split::Crossed;
    let stride = if crossed { 2 * nf + 1 } else { nf + 1 };
    let grid = |i: usize, j: usize| -> usize {
        let (s, f) = if x_slow { (i, j) } else { (j, i) };
        s * stride + f
    };
    let center = |i: usize, j: usize| -> usize {
        let (s, f) = if x_slow { (i, j) } else { (j, i) };
        s * stride + nf + 1 + f
    };
    let n_nodes = (nx + 1) * (ny + 1) + if crossed { nx * ny } else { 0 };
    let mut nodes = vec![[0.0; 2]; n_nodes];
    for i in 0..=nx {
        for j in 0..=ny {
            nodes[grid(i, j)] = [domain.x_min + i as f64 * hx, domain.y_min + j as f64 * hy];
            if crossed && i < nx && j < ny {
                nodes[center(i, j)] = [
                    domain.x_min + (i as f64 + 0.5) * hx,
                    domain.y_min + (j as f64 + 0.5) * hy,
                ];
            }
        }
    }
    // exact outer coordinates, so boundary detection is not hostage to rounding
    for p in nodes.iter_mut() {
        if (p[0] - domain.x_max).abs() < 1e-9 * hx {
            p[0] = domain.x_max;
        }
        if (p[1] - domain.y_max).abs() < 1e-9 * hy {
            p[1] = domain.y_max;
        }
    }

    let mut triangles = Vec::with_capacity(nx * ny * if crossed { 4 } else { 2 });
    for s in 0..ns {
        for f in 0..nf {
            let (i, j) = if x_slow { (s, f) } else { (f, s) };
            let p00 = grid(i, j);
            let p10 = grid(i + 1, j);
            let p11 = grid(i + 1, j + 1);
            let p01 = grid(i, j + 1);
            if crossed {
                let c = center(i, j);
                triangles.extend([[p00, p10, c], [p10, p11, c], [p11, p01, c], [p01, p00, c]]);
            } else {
                triangles.extend([[p00, p10, p11], [p00, p11, p01]]);
            }
        }
    }

    let mut mesh = Mesh {
        domain,
        cells: [nx, ny],
        split,
        active: vec![true; triangles.len()],
        nodes,
        triangles,
        boundary: Vec::new(),
    };
    tag_boundaries(&mut mesh)?;
    Ok(mesh)
}

/// Recomputes the boundary edges of the active region and tags them by
/// location. Edges not on the outer rectangle are cavity edges.
pub fn tag_boundaries(mesh: &mut Mesh) -> Result<()> {
    let mut count: BTreeMap<(usize, usize), (u32, [usize; 2])> = BTreeMap::new();
    for (e, tri) in mesh.triangles.iter().enumerate() {
        if !mesh.active[e] {
            continue;
        }
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let entry = count.entry((a.min(b), a.max(b))).or_insert((0, [a, b]));
            entry.0 += 1;
        }
    }
    let d = mesh.domain;
    let tol = 1e-9 * d.width().max(d.height());
    let on = |v: f64, target: f64| (v - target).abs() <= tol;
    let mut boundary = Vec::new();
    for (_, (n, nodes)) in count {
        if n != 1 {
            continue;
        }
        let p = mesh.nodes[nodes[0]];
        let q = mesh.nodes[nodes[1]];
        let lat = (on(p[0], d.x_min) && on(q[0], d.x_min)) || (on(p[0], d.x_max) && on(q[0], d.x_max));
        let up = on(p[1], d.y_max) && on(q[1], d.y_max);
        let down = on(p[1], d.y_min) && on(q[1], d.y_min);
        let tag = match (lat, up, down) {
            (true, false, false) => BoundaryTag::Lat,
            (false, true, false) => BoundaryTag::Up,
            (false, false, true) => BoundaryTag::Down,
            (false, false, false) => BoundaryTag::Cav,
            _ => {
                return Err(Error::Mesh(format!(
                    "boundary edge {nodes:?} matches more than one side"
                )))
            }
        };
        boundary.push(BoundaryEdge { nodes, tag });
    }
    mesh.boundary = boundary;
    Ok(())
}

/// Deactivates every triangle whose centroid lies strictly inside the cavity
/// at `step` and retags the boundary.
pub fn carve_cavity(mesh: &Mesh, step: usize, spec: &CavitySpec) -> Result<Mesh> {
    spec.validate(&mesh.domain, step)?;
    let rect = spec.rect(step);
    let mut out = mesh.clone();
    let mut changed = false;
    for e in 0..out.triangles.len() {
        if out.active[e] && rect.contains_strict(out.centroid(e)) {
            out.active[e] = false;
            changed = true;
        }
    }
    if changed {
        if !out.active.iter().any(|&a| a) {
            return Err(Error::Mesh("cavity removes every element".into()));
        }
        tag_boundaries(&mut out)?;
    }
    Ok(out)
}

/// Area and constant shape-function gradients of a linear triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct P1Geometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

pub fn p1_geometry(p: [[f64; 2]; 3]) -> Result<P1Geometry> {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let scale = (0..3)
        .map(|k| {
            let q = p[(k + 1) % 3];
            (q[0] - p[k][0]).powi(2) + (q[1] - p[k][1]).powi(2)
        })
        .fold(0.0, f64::max);
    if !(det.abs() > 1e-14 * scale) {
        return Err(Error::Mesh(format!("degenerate triangle {p:?}")));
    }
    let mut grads = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        grads[k] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
    }
    Ok(P1Geometry {
        area: 0.5 * det.abs(),
        grads,
    })
}

impl Mesh {
    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    /// Cell counts `[nx, ny]`.
    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    pub fn split(&self) -> Split {
        self.split
    }

    /// Characteristic element size, the larger of the two cell sides.
    pub fn h(&self) -> f64 {
        (self.domain.width() / self.cells[0] as f64).max(self.domain.height() / self.cells[1] as f64)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn active_element_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn active_elements(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.triangles.len()).filter(move |&e| self.active[e])
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[e];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let c = self.element_coords(e);
        [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0]
    }

    pub fn geometry(&self, e: usize) -> P1Geometry {
        p1_geometry(self.element_coords(e)).expect("structured mesh triangles are non-degenerate")
    }

    /// Nodes that belong to at least one active triangle.
    pub fn active_nodes(&self) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        for e in self.active_elements() {
            for &n in &self.triangles[e] {
                mask[n] = true;
            }
        }
        mask
    }

    pub fn active_area(&self) -> f64 {
        self.active_elements().map(|e| self.geometry(e).area).sum()
    }

    pub fn boundary_edges(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> + '_ {
        self.boundary.iter().filter(move |b| b.tag == tag)
    }

    pub fn edge_counts(&self) -> BTreeMap<BoundaryTag, usize> {
        let mut m = BTreeMap::new();
        for b in &self.boundary {
            *m.entry(b.tag).or_insert(0) += 1;
        }
        m
    }

    /// Lumped nodal measure `Σ_{e ∋ i} area_e / 3` over active elements.
    pub fn lumped_node_area(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nodes.len()];
        for e in self.active_elements() {
            let a = self.geometry(e).area / 3.0;
            for &n in &self.triangles[e] {
                m[n] += a;
            }
        }
        m
    }
}
