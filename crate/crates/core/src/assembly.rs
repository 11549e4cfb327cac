//! Finite-element assembly of the elasticity system and of the damage
//! functional on P1 triangles.
//!
//! Degrees of freedom of the displacement are interleaved per node,
//! `[u_x(0), u_y(0), u_x(1), …]`. Nodal vectors always span every mesh node;
//! nodes outside the active region carry zeros and are excluded from solves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constitutive::{degradation_poly, dissipation_poly, DamageModel, StrainBrackets};
use crate::error::{Error, Result};
use crate::material::MaterialParams;
use crate::mesh::{BoundaryTag, Mesh};
use crate::solvers::BoxObjective;
use crate::sparse::SparseSpdMatrix;
use crate::tensor::SymTensor2;

/// Stiffness floor applied to the degradation in the elasticity step only.
pub const A_MIN: f64 = 1e-6;

/// Displacement DOF index of component `comp` (0 = x, 1 = y) at `node`.
#[inline]
pub fn dof(node: usize, comp: usize) -> usize {
    2 * node + comp
}

/// Mean of the three nodal values of triangle `tri`.
#[inline]
pub fn element_mean(values: &[f64], tri: &[usize; 3]) -> f64 {
    (values[tri[0]] + values[tri[1]] + values[tri[2]]) / 3.0
}

/// Constant strain of element `e` for the displacement `u`.
pub fn element_strain(mesh: &Mesh, e: usize, u: &[f64]) -> SymTensor2 {
    let g = mesh.geometry(e);
    strain_from_grads(&g.grads, &mesh.triangles()[e], u)
}

fn strain_from_grads(grads: &[[f64; 2]; 3], tri: &[usize; 3], u: &[f64]) -> SymTensor2 {
    let mut eps = SymTensor2::default();
    for k in 0..3 {
        let ux = u[dof(tri[k], 0)];
        let uy = u[dof(tri[k], 1)];
        eps.xx += grads[k][0] * ux;
        eps.yy += grads[k][1] * uy;
        eps.xy += 0.5 * (grads[k][1] * ux + grads[k][0] * uy);
    }
    eps
}

/// Stiffness matrix and gravity load vector over all `2 · node_count` DOFs.
///
/// The stress law of `model` is evaluated with the element-averaged damage and
/// the degradation floored at [`A_MIN`]. Rows of inactive nodes are empty.
pub fn assemble_elasticity(
    mesh: &Mesh,
    alpha: &[f64],
    model: DamageModel,
    mat: &MaterialParams,
) -> (SparseSpdMatrix, Vec<f64>) {
    let n = 2 * mesh.node_count();
    let mut trip = Vec::with_capacity(36 * mesh.active_element_count());
    for e in mesh.active_elements() {
        let tri = mesh.triangles()[e];
        let g = mesh.geometry(e);
        let (a, _, _) = degradation_poly(element_mean(alpha, &tri));
        let c = model.voigt_stiffness(a.max(A_MIN), mat);
        // B columns: dof 2k → [bx, 0, by], dof 2k+1 → [0, by, bx]
        let mut b = [[0.0; 6]; 3];
        for k in 0..3 {
            let [bx, by] = g.grads[k];
            b[0][2 * k] = bx;
            b[2][2 * k] = by;
            b[1][2 * k + 1] = by;
            b[2][2 * k + 1] = bx;
        }
        let mut cb = [[0.0; 6]; 3];
        for r in 0..3 {
            for col in 0..6 {
                cb[r][col] = (0..3).map(|s| c[r][s] * b[s][col]).sum();
            }
        }
        let dofs = [
            dof(tri[0], 0),
            dof(tri[0], 1),
            dof(tri[1], 0),
            dof(tri[1], 1),
            dof(tri[2], 0),
            dof(tri[2], 1),
        ];
        for p in 0..6 {
            for q in 0..6 {
                let kpq = g.area * (0..3).map(|r| b[r][p] * cb[r][q]).sum::<f64>();
                trip.push((dofs[p], dofs[q], kpq));
            }
        }
    }
    let k = SparseSpdMatrix::from_triplets(n, trip);
    (k, body_force_vector(mesh, mat))
}

/// Consistent gravity load: a third of `ρg · area` on each vertex of every
/// active element.
pub fn body_force_vector(mesh: &Mesh, mat: &MaterialParams) -> Vec<f64> {
    let f = mat.body_force();
    let mut load = vec![0.0; 2 * mesh.node_count()];
    for e in mesh.active_elements() {
        let area = mesh.geometry(e).area;
        for &node in &mesh.triangles()[e] {
            load[dof(node, 0)] += f[0] * area / 3.0;
            load[dof(node, 1)] += f[1] * area / 3.0;
        }
    }
    load
}

/// `½ uᵀKu − bᵀu`
pub fn elastic_potential(k: &SparseSpdMatrix, load: &[f64], u: &[f64]) -> f64 {
    let ku = k.apply(u);
    u.iter().zip(&ku).zip(load).map(|((ui, kui), bi)| ui * (0.5 * kui - bi)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub dof: usize,
    pub value: f64,
}

/// Kinematic condition imposed on every node of a tagged boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeCondition {
    Free,
    Clamped,
    /// `u_x = 0`, `u_y` free.
    RollerX,
    /// `u_y = 0`, `u_x` free.
    RollerY,
}

impl std::str::FromStr for EdgeCondition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "free" => Ok(EdgeCondition::Free),
            "clamped" => Ok(EdgeCondition::Clamped),
            "roller-x" => Ok(EdgeCondition::RollerX),
            "roller-y" => Ok(EdgeCondition::RollerY),
            other => Err(format!(
                "unknown boundary condition `{other}` (expected free, clamped, roller-x or roller-y)"
            )),
        }
    }
}

impl std::fmt::Display for EdgeCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EdgeCondition::Free => "free",
            EdgeCondition::Clamped => "clamped",
            EdgeCondition::RollerX => "roller-x",
            EdgeCondition::RollerY => "roller-y",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub lateral: EdgeCondition,
    pub up: EdgeCondition,
    pub down: EdgeCondition,
    pub cavity: EdgeCondition,
    /// Extra prescribed displacement values.
    pub prescribed: Vec<Constraint>,
}

impl Default for BoundaryConditions {
    /// Clamped base, lateral rollers, traction-free top and cavity.
    fn default() -> Self {
        Self {
            lateral: EdgeCondition::RollerX,
            up: EdgeCondition::Free,
            down: EdgeCondition::Clamped,
            cavity: EdgeCondition::Free,
            prescribed: Vec::new(),
        }
    }
}

impl BoundaryConditions {
    pub fn free() -> Self {
        Self {
            lateral: EdgeCondition::Free,
            up: EdgeCondition::Free,
            down: EdgeCondition::Free,
            cavity: EdgeCondition::Free,
            prescribed: Vec::new(),
        }
    }

    fn condition(&self, tag: BoundaryTag) -> EdgeCondition {
        match tag {
            BoundaryTag::Lat => self.lateral,
            BoundaryTag::Up => self.up,
            BoundaryTag::Down => self.down,
            BoundaryTag::Cav => self.cavity,
        }
    }

    /// Constraints of the tagged boundary plus the prescribed values, sorted
    /// by DOF. Duplicates with equal values are merged.
    pub fn constraints(&self, mesh: &Mesh) -> Result<Vec<Constraint>> {
        let mut set: BTreeMap<usize, f64> = BTreeMap::new();
        let mut insert = |c: Constraint| -> Result<()> {
            match set.insert(c.dof, c.value) {
                Some(old) if old != c.value => Err(Error::InvalidConstraint {
                    dof: c.dof,
                    reason: format!("conflicting values {old} and {}", c.value),
                }),
                _ => Ok(()),
            }
        };
        for edge in mesh.boundary() {
            let comps: &[usize] = match self.condition(edge.tag) {
                EdgeCondition::Free => &[],
                EdgeCondition::Clamped => &[0, 1],
                EdgeCondition::RollerX => &[0],
                EdgeCondition::RollerY => &[1],
            };
            for &node in &edge.nodes {
                for &c in comps {
                    insert(Constraint {
                        dof: dof(node, c),
                        value: 0.0,
                    })?;
                }
            }
        }
        for &c in &self.prescribed {
            insert(c)?;
        }
        Ok(set.into_iter().map(|(dof, value)| Constraint { dof, value }).collect())
    }
}

/// System restricted to the free DOFs after symmetric elimination of the
/// constraints and of DOFs of inactive nodes.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub matrix: SparseSpdMatrix,
    pub rhs: Vec<f64>,
    /// Full DOF index of each reduced unknown.
    pub free: Vec<usize>,
    /// Full-length vector holding the constraint values (zero elsewhere).
    pub fixed: Vec<f64>,
}

impl ReducedSystem {
    /// Full-length solution from reduced unknowns.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.fixed.clone();
        for (k, &d) in self.free.iter().enumerate() {
            u[d] = x[k];
        }
        u
    }

    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&d| u[d]).collect()
    }
}

/// Eliminates `constraints` and the DOFs of nodes outside `active_nodes`.
///
/// `active_nodes` may be `None` when every DOF of `k` is live.
pub fn apply_dirichlet(
    k: &SparseSpdMatrix,
    load: &[f64],
    constraints: &[Constraint],
    active_nodes: Option<&[bool]>,
) -> Result<ReducedSystem> {
    let n = k.dim();
    let live = |d: usize| active_nodes.is_none_or(|m| m[d / 2]);
    let mut fixed = vec![0.0; n];
    let mut is_fixed = vec![false; n];
    for c in constraints {
        if c.dof >= n {
            return Err(Error::InvalidConstraint {
                dof: c.dof,
                reason: format!("out of range (system size {n})"),
            });
        }
        if !live(c.dof) {
            return Err(Error::InvalidConstraint {
                dof: c.dof,
                reason: "node is not part of the active region".into(),
            });
        }
        if is_fixed[c.dof] && fixed[c.dof] != c.value {
            return Err(Error::InvalidConstraint {
                dof: c.dof,
                reason: format!("conflicting values {} and {}", fixed[c.dof], c.value),
            });
        }
        is_fixed[c.dof] = true;
        fixed[c.dof] = c.value;
    }
    let free: Vec<usize> = (0..n).filter(|&d| live(d) && !is_fixed[d]).collect();
    let k_fixed = k.apply(&fixed);
    let rhs = free.iter().map(|&d| load[d] - k_fixed[d]).collect();
    Ok(ReducedSystem {
        matrix: k.principal_submatrix(&free),
        rhs,
        free,
        fixed,
    })
}

/// `‖(K(α)u − b)_free‖₂` over the DOFs that are neither constrained nor
/// inactive.
pub fn equilibrium_residual(
    mesh: &Mesh,
    u: &[f64],
    alpha: &[f64],
    model: DamageModel,
    mat: &MaterialParams,
    constraints: &[Constraint],
) -> f64 {
    let (k, load) = assemble_elasticity(mesh, alpha, model, mat);
    let active = mesh.active_nodes();
    let mut skip = vec![false; k.dim()];
    for c in constraints {
        skip[c.dof] = true;
    }
    let ku = k.apply(u);
    (0..k.dim())
        .filter(|&d| active[d / 2] && !skip[d])
        .map(|d| (ku[d] - load[d]).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug)]
struct DamageElement {
    nodes: [usize; 3],
    area: f64,
    brackets: StrainBrackets,
}

/// Parts of the damage functional.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DamageEnergyParts {
    /// `∫ ψ(ε(u), ᾱ)`: the model's bulk density.
    pub bulk: f64,
    /// `∫ w(ᾱ)`
    pub local: f64,
    /// `∫ ½ w₁ℓ² |∇α|²`
    pub gradient: f64,
}

impl DamageEnergyParts {
    pub fn total(&self) -> f64 {
        self.bulk + self.local + self.gradient
    }
}

/// Damage functional at frozen displacement, as a function of the damage at
/// the active nodes.
///
/// Its arguments are *reduced* vectors indexed by active node; see
/// [`DamageFunctional::restrict`] and [`DamageFunctional::expand`].
#[derive(Clone, Debug)]
pub struct DamageFunctional {
    model: DamageModel,
    mat: MaterialParams,
    n_nodes: usize,
    /// mesh node of each unknown
    node_of: Vec<usize>,
    elements: Vec<DamageElement>,
    /// P1 Laplacian `∫ ∇N_i · ∇N_j` over the unknowns.
    laplacian: SparseSpdMatrix,
    lower: Vec<f64>,
    weights: Vec<f64>,
}

pub fn build_damage_functional(
    mesh: &Mesh,
    u: &[f64],
    model: DamageModel,
    mat: &MaterialParams,
    alpha_prev: &[f64],
) -> DamageFunctional {
    let active = mesh.active_nodes();
    let mut local_of = vec![usize::MAX; mesh.node_count()];
    let mut node_of = Vec::new();
    for (n, &a) in active.iter().enumerate() {
        if a {
            local_of[n] = node_of.len();
            node_of.push(n);
        }
    }
    let mut elements = Vec::with_capacity(mesh.active_element_count());
    let mut trip = Vec::with_capacity(9 * mesh.active_element_count());
    let mut weights = vec![0.0; node_of.len()];
    for e in mesh.active_elements() {
        let tri = mesh.triangles()[e];
        let g = mesh.geometry(e);
        let eps = strain_from_grads(&g.grads, &tri, u);
        let nodes = tri.map(|n| local_of[n]);
        for p in 0..3 {
            weights[nodes[p]] += g.area / 3.0;
            for q in 0..3 {
                let v = g.area * (g.grads[p][0] * g.grads[q][0] + g.grads[p][1] * g.grads[q][1]);
                trip.push((nodes[p], nodes[q], v));
            }
        }
        elements.push(DamageElement {
            nodes,
            area: g.area,
            brackets: StrainBrackets::new(&eps, mat),
        });
    }
    DamageFunctional {
        model,
        mat: mat.clone(),
        n_nodes: mesh.node_count(),
        lower: node_of.iter().map(|&n| alpha_prev[n]).collect(),
        laplacian: SparseSpdMatrix::from_triplets(node_of.len(), trip),
        node_of,
        elements,
        weights,
    }
}

impl DamageFunctional {
    pub fn model(&self) -> DamageModel {
        self.model
    }

    /// Irreversibility bound on the unknowns.
    pub fn lower_bound(&self) -> &[f64] {
        &self.lower
    }

    /// Lumped nodal area of each unknown.
    pub fn node_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mesh node of each unknown.
    pub fn nodes(&self) -> &[usize] {
        &self.node_of
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.node_of.iter().map(|&n| full[n]).collect()
    }

    /// Full-length nodal vector, zero at inactive nodes.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_nodes];
        for (k, &n) in self.node_of.iter().enumerate() {
            full[n] = reduced[k];
        }
        full
    }

    fn grad_coeff(&self) -> f64 {
        self.mat.w1 * self.mat.ell * self.mat.ell
    }

    #[inline]
    fn mean(&self, x: &[f64], el: &DamageElement) -> f64 {
        (x[el.nodes[0]] + x[el.nodes[1]] + x[el.nodes[2]]) / 3.0
    }

    pub fn parts(&self, x: &[f64]) -> DamageEnergyParts {
        let mut parts = DamageEnergyParts::default();
        for el in &self.elements {
            let a = self.mean(x, el);
            parts.bulk += el.area * self.model.bulk_density(&el.brackets, a, &self.mat).0;
            parts.local += el.area * dissipation_poly(a, self.mat.w1).0;
        }
        let lx = self.laplacian.apply(x);
        parts.gradient = 0.5 * self.grad_coeff() * crate::sparse::dot(x, &lx);
        parts
    }
}

impl BoxObjective for DamageFunctional {
    fn dim(&self) -> usize {
        self.node_of.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.parts(x).total()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        self.laplacian.mul_vec(x, g);
        let c = self.grad_coeff();
        g.iter_mut().for_each(|v| *v *= c);
        for el in &self.elements {
            let a = self.mean(x, el);
            let d = self.model.bulk_density(&el.brackets, a, &self.mat).1 + dissipation_poly(a, self.mat.w1).1;
            let share = el.area * d / 3.0;
            for &n in &el.nodes {
                g[n] += share;
            }
        }
    }

    fn hessian_product(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        self.laplacian.mul_vec(v, out);
        let c = self.grad_coeff();
        out.iter_mut().for_each(|o| *o *= c);
        for el in &self.elements {
            let a = self.mean(x, el);
            let d2 = self.model.bulk_density(&el.brackets, a, &self.mat).2 + dissipation_poly(a, self.mat.w1).2;
            let share = el.area * d2 / 9.0 * (v[el.nodes[0]] + v[el.nodes[1]] + v[el.nodes[2]]);
            for &n in &el.nodes {
                out[n] += share;
            }
        }
    }

    fn hessian_diagonal(&self, x: &[f64], out: &mut [f64]) {
        let c = self.grad_coeff();
        for (i, o) in out.iter_mut().enumerate() {
            *o = c * self.laplacian.get(i, i);
        }
        for el in &self.elements {
            let a = self.mean(x, el);
            let d2 = self.model.bulk_density(&el.brackets, a, &self.mat).2 + dissipation_poly(a, self.mat.w1).2;
            for &n in &el.nodes {
                out[n] += el.area * d2 / 9.0;
            }
        }
    }
}
