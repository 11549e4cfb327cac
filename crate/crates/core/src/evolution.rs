//! Time-stepped quasi-static evolution by alternate minimization.
//!
//! At each step the displacement is solved at frozen damage, then the damage
//! functional is minimized at frozen displacement over
//! `{α_prev ≤ α ≤ 1}`, until the damage stops changing. Between steps the
//! cavity advances and the converged damage becomes the new lower bound.

use serde::{Deserialize, Serialize};

use crate::assembly::{
    apply_dirichlet, assemble_elasticity, body_force_vector, build_damage_functional, elastic_potential,
    element_mean, equilibrium_residual, BoundaryConditions, Constraint, DamageFunctional,
};
use crate::constitutive::DamageModel;
use crate::error::{Error, Result};
use crate::material::MaterialParams;
use crate::mesh::{carve_cavity, CavitySpec, Mesh, Rect};
use crate::solvers::{minimize_box, BoxConstraints, BoxObjective, BoxSolverOptions, KktReport, LinearSolverKind};
use crate::sparse::{dot, norm2};

/// Element-mean damage above which an element counts as damaged in
/// [`StepRecord::damaged_area_fraction`].
pub const DAMAGED_THRESHOLD: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmSettings {
    /// Stop when `‖α⁽ᵖ⁾ − α⁽ᵖ⁻¹⁾‖∞` drops to this value.
    pub tol: f64,
    pub max_iter: usize,
    /// KKT tolerance of the damage step, relative to `w₁`.
    pub damage_tol: f64,
    pub damage_max_iter: usize,
    pub linear_solver: LinearSolverKind,
    /// Relative residual required from the elasticity solve.
    pub linear_tol: f64,
}

impl Default for AmSettings {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 200,
            damage_tol: 1e-6,
            damage_max_iter: 500,
            linear_solver: LinearSolverKind::Cholesky,
            linear_tol: 1e-10,
        }
    }
}

/// Snapshot of the evolution at one loading step.
///
/// Nodal vectors span every mesh node; nodes swallowed by the cavity carry
/// zeros and take no part in the solves.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub step: usize,
    pub mesh: Mesh,
    /// Interleaved displacement `[u_x, u_y]` per node (m).
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Irreversibility bound: the damage converged at the previous step.
    pub alpha_prev: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfStepKind {
    Displacement,
    Damage,
}

/// Energy of the functional minimized by one half-step, before and after.
///
/// Displacement half-steps report the elastic potential `½uᵀK(α)u − bᵀu` at
/// frozen damage; damage half-steps report the damage functional at frozen
/// displacement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfStep {
    pub iteration: usize,
    pub kind: HalfStepKind,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AmOutcome {
    pub iterations: usize,
    pub converged: bool,
    /// Final `‖Δα‖∞`.
    pub last_change: f64,
    pub half_steps: Vec<HalfStep>,
    /// One report per damage half-step.
    pub damage_reports: Vec<KktReport>,
    /// `‖(Ku − b)_free‖ / ‖b_free‖` of the returned state.
    pub equilibrium_residual: f64,
}

/// Energies of a state (J per unit thickness).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Integrated bulk density of the damage functional.
    pub elastic: f64,
    pub local_dissipation: f64,
    pub gradient_dissipation: f64,
    /// `∫ f · u`
    pub external_work: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub state: State,
    pub energy: EnergyBreakdown,
    pub outcome: AmOutcome,
}

impl StepRecord {
    pub fn max_alpha(&self) -> f64 {
        let active = self.state.mesh.active_nodes();
        self.state
            .alpha
            .iter()
            .zip(&active)
            .filter(|(_, &a)| a)
            .fold(0.0, |m, (&v, _)| m.max(v))
    }

    /// Share of the active area whose element-mean damage reaches
    /// [`DAMAGED_THRESHOLD`].
    pub fn damaged_area_fraction(&self) -> f64 {
        let mesh = &self.state.mesh;
        let (mut damaged, mut total) = (0.0, 0.0);
        for e in mesh.active_elements() {
            let area = mesh.geometry(e).area;
            total += area;
            if element_mean(&self.state.alpha, &mesh.triangles()[e]) >= DAMAGED_THRESHOLD {
                damaged += area;
            }
        }
        damaged / total
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
}

/// A configured block-caving experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub model: DamageModel,
    pub material: MaterialParams,
    /// Intact mesh of the rock mass.
    pub mesh: Mesh,
    /// `None` keeps the domain fixed.
    pub cavity: Option<CavitySpec>,
    pub boundary: BoundaryConditions,
    pub settings: AmSettings,
    /// Keep going after a step that hit `max_iter`.
    pub continue_on_unconverged: bool,
}

impl Simulation {
    pub fn new(model: DamageModel, material: MaterialParams, mesh: Mesh) -> Self {
        Self {
            model,
            material,
            mesh,
            cavity: Some(CavitySpec::BLOCK_CAVING),
            boundary: BoundaryConditions::default(),
            settings: AmSettings::default(),
            continue_on_unconverged: false,
        }
    }

    /// Mesh at `step`, with the cavity carved.
    pub fn mesh_at(&self, step: usize) -> Result<Mesh> {
        match &self.cavity {
            Some(c) => carve_cavity(&self.mesh, step, c),
            None => Ok(self.mesh.clone()),
        }
    }

    fn constraints(&self, mesh: &Mesh) -> Result<Vec<Constraint>> {
        self.boundary.constraints(mesh)
    }

    /// Equilibrium displacement at frozen damage.
    fn solve_displacement(&self, mesh: &Mesh, alpha: &[f64], constraints: &[Constraint]) -> Result<Vec<f64>> {
        let (k, load) = assemble_elasticity(mesh, alpha, self.model, &self.material);
        let active = mesh.active_nodes();
        let red = apply_dirichlet(&k, &load, constraints, Some(&active))?;
        let x = if red.free.is_empty() {
            Vec::new()
        } else {
            self.settings
                .linear_solver
                .solve(&red.matrix, &red.rhs, self.settings.linear_tol)?
        };
        Ok(red.expand(&x))
    }

    /// Undamaged state at step 0: elastic pre-solve of the domain under load.
    pub fn initial_state(&self) -> Result<State> {
        let mesh = self.mesh_at(0)?;
        let n = mesh.node_count();
        let alpha = vec![0.0; n];
        let cons = self.constraints(&mesh)?;
        let u = self.solve_displacement(&mesh, &alpha, &cons)?;
        Ok(State {
            step: 0,
            mesh,
            u,
            alpha: alpha.clone(),
            alpha_prev: alpha,
        })
    }

    fn damage_options(&self, f: &DamageFunctional) -> BoxSolverOptions {
        BoxSolverOptions {
            tol: self.settings.damage_tol * self.material.w1,
            max_iter: self.settings.damage_max_iter,
            weights: Some(f.node_weights().to_vec()),
            ..BoxSolverOptions::default()
        }
    }

    /// Alternate minimization at the state's step, warm-started from its
    /// fields and bounded below by `state.alpha_prev`.
    ///
    /// After the damage iterates settle, the displacement is solved once more
    /// so the returned pair is in equilibrium. Exhausting `max_iter` is not an
    /// error here; the outcome is flagged unconverged.
    pub fn alternate_minimization(&self, state: State) -> Result<(State, AmOutcome)> {
        let State {
            step,
            mesh,
            mut u,
            mut alpha,
            alpha_prev,
        } = state;
        let cons = self.constraints(&mesh)?;
        let active = mesh.active_nodes();
        for (i, &a) in active.iter().enumerate() {
            if !a {
                u[2 * i] = 0.0;
                u[2 * i + 1] = 0.0;
            }
        }
        for c in &cons {
            u[c.dof] = c.value;
        }
        if let Some(i) = (0..alpha.len()).find(|&i| active[i] && !(alpha_prev[i] <= alpha[i] && alpha[i] <= 1.0)) {
            return Err(Error::param(
                "alpha",
                format!("node {i}: damage {} not in [{}, 1]", alpha[i], alpha_prev[i]),
            ));
        }

        let mut outcome = AmOutcome {
            last_change: f64::INFINITY,
            ..Default::default()
        };
        for p in 1..=self.settings.max_iter {
            let before = self.potential(&mesh, &alpha, &u);
            u = self.solve_displacement(&mesh, &alpha, &cons)?;
            let after = self.potential(&mesh, &alpha, &u);
            outcome.half_steps.push(HalfStep {
                iteration: p,
                kind: HalfStepKind::Displacement,
                before,
                after,
            });

            let f = build_damage_functional(&mesh, &u, self.model, &self.material, &alpha_prev);
            let bounds = BoxConstraints::damage(f.lower_bound())?;
            let x0 = f.restrict(&alpha);
            let (x, mut report) = minimize_box(&f, &bounds, &x0, &self.damage_options(&f));
            outcome.half_steps.push(HalfStep {
                iteration: p,
                kind: HalfStepKind::Damage,
                before: f.value(&x0),
                after: f.value(&x),
            });
            if !report.converged {
                log::warn!(
                    "step {step}, iteration {p}: damage solve stopped with KKT residual {:e}",
                    report.residual()
                );
            }
            report.objective_history = Vec::new();
            outcome.damage_reports.push(report);

            let next = f.expand(&x);
            let change = next.iter().zip(&alpha).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            alpha = next;
            outcome.iterations = p;
            outcome.last_change = change;
            log::debug!("step {step}, iteration {p}: |dalpha| = {change:e}");
            if change <= self.settings.tol {
                outcome.converged = true;
                break;
            }
        }

        let before = self.potential(&mesh, &alpha, &u);
        u = self.solve_displacement(&mesh, &alpha, &cons)?;
        outcome.half_steps.push(HalfStep {
            iteration: outcome.iterations + 1,
            kind: HalfStepKind::Displacement,
            before,
            after: self.potential(&mesh, &alpha, &u),
        });
        outcome.equilibrium_residual = self.relative_residual(&mesh, &u, &alpha, &cons);
        if !outcome.converged {
            log::warn!(
                "step {step}: alternate minimization stopped after {} iterations (|dalpha| = {:e})",
                outcome.iterations,
                outcome.last_change
            );
        }
        Ok((
            State {
                step,
                mesh,
                u,
                alpha,
                alpha_prev,
            },
            outcome,
        ))
    }

    fn potential(&self, mesh: &Mesh, alpha: &[f64], u: &[f64]) -> f64 {
        let (k, load) = assemble_elasticity(mesh, alpha, self.model, &self.material);
        elastic_potential(&k, &load, u)
    }

    fn relative_residual(&self, mesh: &Mesh, u: &[f64], alpha: &[f64], cons: &[Constraint]) -> f64 {
        let r = equilibrium_residual(mesh, u, alpha, self.model, &self.material, cons);
        let load = body_force_vector(mesh, &self.material);
        let active = mesh.active_nodes();
        let mut fixed = vec![false; load.len()];
        for c in cons {
            fixed[c.dof] = true;
        }
        let free_load: Vec<f64> = (0..load.len())
            .filter(|&d| active[d / 2] && !fixed[d])
            .map(|d| load[d])
            .collect();
        let scale = norm2(&free_load);
        if scale > 0.0 {
            r / scale
        } else {
            r
        }
    }

    /// Moves to the next step: carves the cavity, freezes the current damage
    /// as the irreversibility bound and re-runs alternate minimization.
    pub fn advance_step(&self, state: State) -> Result<(State, AmOutcome)> {
        let step = state.step + 1;
        let mesh = match &self.cavity {
            Some(c) => carve_cavity(&state.mesh, step, c)?,
            None => state.mesh,
        };
        let active = mesh.active_nodes();
        let mut alpha = state.alpha;
        let mut u = state.u;
        for (i, &a) in active.iter().enumerate() {
            if !a {
                alpha[i] = 0.0;
                u[2 * i] = 0.0;
                u[2 * i + 1] = 0.0;
            }
        }
        let next = State {
            step,
            mesh,
            u,
            alpha_prev: alpha.clone(),
            alpha,
        };
        self.alternate_minimization(next)
    }

    /// Energy breakdown of `state` under this simulation's model and loads.
    pub fn energy_report(&self, state: &State) -> EnergyBreakdown {
        energy_report(state, self.model, &self.material)
    }

    fn record(&self, state: State, outcome: AmOutcome) -> Result<StepRecord> {
        if !outcome.converged && !self.continue_on_unconverged {
            return Err(Error::Unconverged {
                step: state.step,
                iterations: outcome.iterations,
                change: outcome.last_change,
            });
        }
        Ok(StepRecord {
            energy: self.energy_report(&state),
            state,
            outcome,
        })
    }

    /// Converged step 0.
    pub fn first_step(&self) -> Result<StepRecord> {
        let (state, outcome) = self.alternate_minimization(self.initial_state()?)?;
        self.record(state, outcome)
    }

    /// Step following `prev`.
    pub fn next_step(&self, prev: &State) -> Result<StepRecord> {
        let (state, outcome) = self.advance_step(prev.clone())?;
        self.record(state, outcome)
    }

    /// Steps `0..=final_step`, calling `on_step` after each one.
    pub fn run_with<F: FnMut(&StepRecord) -> Result<()>>(&self, final_step: usize, mut on_step: F) -> Result<Trajectory> {
        if let Some(c) = &self.cavity {
            c.validate(self.mesh.domain(), final_step)?;
        }
        let mut traj = Trajectory::default();
        let first = self.first_step()?;
        on_step(&first)?;
        traj.steps.push(first);
        for _ in 1..=final_step {
            let prev = &traj.steps.last().expect("non-empty").state;
            let rec = self.next_step(prev)?;
            log::info!(
                "step {}: {} iterations, max damage {:.4}",
                rec.state.step,
                rec.outcome.iterations,
                rec.max_alpha()
            );
            on_step(&rec)?;
            traj.steps.push(rec);
        }
        Ok(traj)
    }

    pub fn run(&self, final_step: usize) -> Result<Trajectory> {
        self.run_with(final_step, |_| Ok(()))
    }
}

/// Energy breakdown of a state; `total = elastic + local + gradient − work`.
pub fn energy_report(state: &State, model: DamageModel, mat: &MaterialParams) -> EnergyBreakdown {
    let f = build_damage_functional(&state.mesh, &state.u, model, mat, &state.alpha_prev);
    let parts = f.parts(&f.restrict(&state.alpha));
    let work = dot(&body_force_vector(&state.mesh, mat), &state.u);
    EnergyBreakdown {
        elastic: parts.bulk,
        local_dissipation: parts.local,
        gradient_dissipation: parts.gradient,
        external_work: work,
        total: parts.bulk + parts.local + parts.gradient - work,
    }
}

/// `∫ α` over active elements whose centroid lies strictly inside `region`
/// (everywhere when `None`), with element-mean damage.
pub fn integrated_damage(mesh: &Mesh, alpha: &[f64], region: Option<&Rect>) -> f64 {
    mesh.active_elements()
        .filter(|&e| region.is_none_or(|r| r.contains_strict(mesh.centroid(e))))
        .map(|e| mesh.geometry(e).area * element_mean(alpha, &mesh.triangles()[e]))
        .sum()
}

/// Damage-weighted centroid `∫ α x / ∫ α`, or `None` without damage.
pub fn damage_centroid(mesh: &Mesh, alpha: &[f64]) -> Option<[f64; 2]> {
    let (mut w, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for e in mesh.active_elements() {
        let m = mesh.geometry(e).area * element_mean(alpha, &mesh.triangles()[e]);
        let c = mesh.centroid(e);
        w += m;
        cx += m * c[0];
        cy += m * c[1];
    }
    (w > 0.0).then(|| [cx / w, cy / w])
}
