//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are fixed below.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use caving_damage::assembly::{build_damage_functional, BoundaryConditions, Constraint};
use caving_damage::config::Config;
use caving_damage::evolution::{damage_centroid, integrated_damage, Simulation, StepRecord, Trajectory};
use caving_damage::mesh::{build_mesh, Rect, Split};
use caving_damage::output::trace_csv;
use caving_damage::solvers::{minimize_box, BoxConstraints, BoxObjective, BoxSolverOptions};
use caving_damage::tensor::{principal_stresses_2d, principal_stresses_3d, SymTensor, SymTensor2, SymTensor3};
use caving_damage::{DamageModel, MaterialParams};
use common::{box_qp_active_set, box_qp_enumerate, cubic_roots, quad_value, quadratic_eigen, quadratic_form, rng, uniform};

const HOMOGENEOUS_TOL: f64 = 1e-6;
const EIGEN_TOL: f64 = 1e-9;
const GRADIENT_TOL: f64 = 1e-5;
const HESSIAN_TOL: f64 = 1e-4;
const DESCENT_SLACK: f64 = 1e-10;
const BOX_QP_TOL: f64 = 1e-8;
/// AM cap for the κ sweep; the κ = 0.2 run collapses late in the schedule
/// and would otherwise spend the default 200 iterations per collapsed step.
const SWEEP_AM_CAP: usize = 50;

struct Line {
    id: usize,
    pass: bool,
    detail: String,
}

fn report(lines: &mut Vec<Line>, id: usize, pass: bool, detail: String) {
    println!("criterion {id}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    lines.push(Line { id, pass, detail });
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn criterion_1() -> (bool, String) {
    let mut worst = 0.0f64;
    for eps0 in [1e-4, 5e-4, 1e-3, 3e-3] {
        let mut mat = MaterialParams::rock(1e4, 0.5);
        mat.density = 0.0;
        let mesh = build_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 0.5, Split::Diagonal).unwrap();
        let mut bc = BoundaryConditions::free();
        for (i, p) in mesh.nodes().iter().enumerate() {
            bc.prescribed.push(Constraint { dof: 2 * i, value: eps0 * p[0] });
            bc.prescribed.push(Constraint { dof: 2 * i + 1, value: 0.0 });
        }
        let mut sim = Simulation::new(DamageModel::Isotropic, mat.clone(), mesh);
        sim.cavity = None;
        sim.boundary = bc;
        let rec = sim.first_step().unwrap();
        let s = mat.hooke(&SymTensor2::new(eps0, 0.0, 0.0)).xx * eps0;
        let exact = s / (s + 2.0 * mat.w1);
        worst = rec.state.alpha.iter().fold(worst, |m, a| m.max((a - exact).abs()));
    }
    (worst <= HOMOGENEOUS_TOL, format!("max |α − α*| = {worst:.2e} (tol {HOMOGENEOUS_TOL:e})"))
}

fn spectral_error(mut got: Vec<f64>, oracle: &[f64]) -> f64 {
    got.sort_by(f64::total_cmp);
    let scale = max_abs(oracle);
    got.iter().zip(oracle).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

fn criterion_2() -> (bool, String) {
    let mut r = rng(1002);
    let (mut e3, mut e2) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let k = 10f64.powf(uniform(&mut r, 3.0, 8.0));
        let c: Vec<f64> = (0..6).map(|_| k * uniform(&mut r, -1.0, 1.0)).collect();
        let s = SymTensor3::new(c[0], c[1], c[2], c[3], c[4], c[5]);
        let i1 = s.trace();
        let i2 = s.xx * s.yy + s.yy * s.zz + s.zz * s.xx - s.xy * s.xy - s.yz * s.yz - s.xz * s.xz;
        let oracle = cubic_roots(-i1, i2, -s.det());
        let (a, b, d) = principal_stresses_3d(&s);
        e3 = e3.max(spectral_error(vec![a, b, d], &oracle));

        let t = SymTensor2::new(c[0], c[1], c[3]);
        let (l1, l2) = principal_stresses_2d(&t);
        e2 = e2.max(spectral_error(vec![l1, l2], &quadratic_eigen(t.xx, t.xy, t.yy)));
    }
    let pass = e3 < EIGEN_TOL && e2 < EIGEN_TOL;
    (pass, format!("max relative error 3D {e3:.2e}, 2D {e2:.2e} (tol {EIGEN_TOL:e})"))
}

fn criterion_3() -> (bool, String) {
    let mesh = build_mesh(Rect::new(0.0, 1000.0, 0.0, 1000.0), 100.0, Split::Diagonal).unwrap();
    let mut r = rng(1003);
    let (mut eg, mut eh) = (0.0f64, 0.0f64);
    for model in DamageModel::ALL {
        for _ in 0..50 {
            let mut mat = MaterialParams::rock(1e4, 150.0);
            mat.kappa = uniform(&mut r, 0.2, 2.0);
            let u: Vec<f64> = (0..2 * mesh.node_count()).map(|_| uniform(&mut r, -0.5, 0.5)).collect();
            let prev = vec![0.0; mesh.node_count()];
            let f = build_damage_functional(&mesh, &u, model, &mat, &prev);
            let n = f.dim();
            let x: Vec<f64> = (0..n).map(|_| uniform(&mut r, 0.0, 0.95)).collect();
            let h = 1e-6;
            let mut g = vec![0.0; n];
            f.gradient(&x, &mut g);
            let mut fd = vec![0.0; n];
            for i in 0..n {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                fd[i] = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
            }
            let diff: Vec<f64> = fd.iter().zip(&g).map(|(a, b)| a - b).collect();
            eg = eg.max(max_abs(&diff) / max_abs(&g));

            let v: Vec<f64> = (0..n).map(|_| uniform(&mut r, -1.0, 1.0)).collect();
            let mut hv = vec![0.0; n];
            f.hessian_product(&x, &v, &mut hv);
            let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            let (mut gp, mut gm) = (vec![0.0; n], vec![0.0; n]);
            f.gradient(&xp, &mut gp);
            f.gradient(&xm, &mut gm);
            let diff: Vec<f64> = (0..n).map(|i| (gp[i] - gm[i]) / (2.0 * h) - hv[i]).collect();
            eh = eh.max(max_abs(&diff) / max_abs(&hv));
        }
    }
    let pass = eg < GRADIENT_TOL && eh < HESSIAN_TOL;
    (
        pass,
        format!("150 states: gradient error {eg:.2e} (tol {GRADIENT_TOL:e}), Hessian-product error {eh:.2e} (tol {HESSIAN_TOL:e})"),
    )
}

/// Descent, KKT, irreversibility and bounds over a whole trajectory.
fn check_trajectory(sim: &Simulation, traj: &Trajectory) -> Result<String, String> {
    let kkt_tol = sim.settings.damage_tol * sim.material.w1;
    let (mut half_steps, mut worst_kkt) = (0usize, 0.0f64);
    for (t, rec) in traj.steps.iter().enumerate() {
        if !rec.outcome.converged {
            return Err(format!("step {t}: alternate minimization unconverged"));
        }
        for h in &rec.outcome.half_steps {
            half_steps += 1;
            if h.after > h.before + DESCENT_SLACK * h.before.abs() {
                return Err(format!("step {t}: {h:?} increases its functional"));
            }
        }
        let last = rec.outcome.damage_reports.last().ok_or(format!("step {t}: no damage solve"))?;
        worst_kkt = worst_kkt.max(last.residual());
        if last.residual() > kkt_tol {
            return Err(format!("step {t}: KKT residual {:e} > {kkt_tol:e}", last.residual()));
        }
        let s = &rec.state;
        let active = s.mesh.active_nodes();
        let prev = (t > 0).then(|| &traj.steps[t - 1].state.alpha);
        for i in 0..s.alpha.len() {
            if !(0.0..=1.0).contains(&s.alpha[i]) {
                return Err(format!("step {t}, node {i}: α = {} outside [0, 1]", s.alpha[i]));
            }
            if active[i] && (s.alpha[i] < s.alpha_prev[i] || prev.is_some_and(|p| s.alpha[i] < p[i])) {
                return Err(format!("step {t}, node {i}: damage decreased"));
            }
        }
    }
    Ok(format!("{half_steps} half-steps, max KKT residual {worst_kkt:.2e} (tol {kkt_tol:.0e})"))
}

fn block_caving(model: DamageModel, w1: f64, kappa: f64, am_cap: Option<usize>) -> (Simulation, Trajectory, f64) {
    let mut cfg = Config { model, w1, kappa, ..Config::default() };
    if let Some(cap) = am_cap {
        cfg.am_max_iter = cap;
        cfg.continue_on_unconverged = true;
    }
    let sim = cfg.simulation().unwrap();
    let start = Instant::now();
    let traj = sim.run(cfg.final_step).unwrap();
    (sim, traj, start.elapsed().as_secs_f64())
}

/// Relative objective gap, node count and number of nodes strictly inside
/// the box at the oracle's optimum.
fn box_oracle_instance(r: &mut impl rand::Rng) -> (f64, usize, usize) {
    let (nx, ny) = loop {
        let nx = r.random_range(2..=6usize);
        let ny = r.random_range(2..=6usize);
        if (nx + 1) * (ny + 1) <= 50 {
            break (nx, ny);
        }
    };
    let h = uniform(r, 10.0, 50.0);
    let mesh = build_mesh(Rect::new(0.0, nx as f64 * h, 0.0, ny as f64 * h), h, Split::Diagonal).unwrap();
    let mat = MaterialParams::rock(1e4, uniform(r, 0.5, 2.0) * h);
    let amp = uniform(r, 5e-4, 5e-3) * h;
    let u: Vec<f64> = (0..2 * mesh.node_count()).map(|_| uniform(r, -amp, amp)).collect();
    let prev: Vec<f64> = (0..mesh.node_count()).map(|_| uniform(r, 0.0, 0.3)).collect();
    let f = build_damage_functional(&mesh, &u, DamageModel::Isotropic, &mat, &prev);
    let n = f.dim();
    let bounds = BoxConstraints::damage(f.lower_bound()).unwrap();
    let opts = BoxSolverOptions {
        tol: 1e-6 * mat.w1,
        weights: Some(f.node_weights().to_vec()),
        ..BoxSolverOptions::default()
    };
    let (x, _) = minimize_box(&f, &bounds, f.lower_bound(), &opts);

    let (hq, gq, c) = quadratic_form(n, |y| f.value(y));
    let lo = f.lower_bound().to_vec();
    let hi = vec![1.0; n];
    let mut oracle = box_qp_active_set(&hq, &gq, &lo, &hi);
    if n <= 9 {
        oracle = box_qp_enumerate(&hq, &gq, &lo, &hi);
    }
    let fo = quad_value(&hq, &gq, c, &oracle);
    let rel = (f.value(&x) - fo).abs() / fo.abs();
    let interior = (0..n).filter(|&i| oracle[i] > lo[i] && oracle[i] < hi[i]).count();
    (rel, n, interior)
}

fn criterion_8() -> (bool, String) {
    let mut r = rng(1008);
    let (mut worst, mut largest, mut nodes, mut interior) = (0.0f64, 0usize, 0usize, 0usize);
    for _ in 0..25 {
        let (rel, n, k) = box_oracle_instance(&mut r);
        worst = worst.max(rel);
        largest = largest.max(n);
        nodes += n;
        interior += k;
    }
    (
        worst <= BOX_QP_TOL,
        format!(
            "25 subproblems (≤ {largest} nodes, {interior}/{nodes} nodes strictly inside the box): max relative objective gap {worst:.2e} (tol {BOX_QP_TOL:e})"
        ),
    )
}

fn main() -> ExitCode {
    let mut lines = Vec::new();
    let total = Instant::now();

    for (id, f) in [(1, criterion_1 as fn() -> (bool, String)), (2, criterion_2), (3, criterion_3), (8, criterion_8)] {
        let start = Instant::now();
        let (pass, detail) = f();
        report(&mut lines, id, pass, format!("{detail} [{:.1} s]", start.elapsed().as_secs_f64()));
    }

    // full block-caving runs
    let kappas = [0.2, 0.5, 1.5, 2.0];
    let (models, sweep, repeat) = std::thread::scope(|s| {
        let models: Vec<_> = [
            (DamageModel::Isotropic, 1e5),
            (DamageModel::Shear, 1e5),
            (DamageModel::ShearCompression, 1e4),
        ]
        .into_iter()
        .map(|(m, w1)| s.spawn(move || block_caving(m, w1, 1.0, None)))
        .collect();
        let sweep: Vec<_> = kappas
            .iter()
            .map(|&k| s.spawn(move || block_caving(DamageModel::ShearCompression, 1e4, k, Some(SWEEP_AM_CAP))))
            .collect();
        let repeat = s.spawn(|| block_caving(DamageModel::ShearCompression, 1e4, 1.0, None));
        let join = |h: std::thread::ScopedJoinHandle<'_, _>| h.join().expect("run panicked");
        (
            models.into_iter().map(join).collect::<Vec<_>>(),
            sweep.into_iter().map(join).collect::<Vec<_>>(),
            join(repeat),
        )
    });

    let mut c4 = Vec::new();
    let mut pass4 = true;
    for (sim, traj, secs) in &models {
        match check_trajectory(sim, traj) {
            Ok(d) => c4.push(format!("{} w1={:e}: {d} [{secs:.0} s]", sim.model, sim.material.w1)),
            Err(e) => {
                pass4 = false;
                c4.push(format!("{} w1={:e}: {e}", sim.model, sim.material.w1));
            }
        }
    }
    report(&mut lines, 4, pass4, c4.join("; "));

    let sc: &StepRecord = models[2].1.steps.last().unwrap();
    let above = integrated_damage(&sc.state.mesh, &sc.state.alpha, Some(&Rect::new(-500.0, 100.0, 20.0, 120.0)));
    let below = integrated_damage(&sc.state.mesh, &sc.state.alpha, Some(&Rect::new(-500.0, 100.0, -120.0, -20.0)));
    report(&mut lines, 5, above > below, format!("t=15 band above {above:.4e}, below {below:.4e}"));

    let iso = &models[0].1;
    let first = iso.steps.iter().find(|r| r.max_alpha() > 0.0);
    let c6 = first.and_then(|r| damage_centroid(&r.state.mesh, &r.state.alpha).map(|c| (r.state.step, c)));
    match c6 {
        Some((t, c)) => report(&mut lines, 6, c[1] < -20.0, format!("first damaged step t={t}, centroid ({:.1}, {:.1})", c[0], c[1])),
        None => report(&mut lines, 6, false, "no damage in the isotropic run".to_string()),
    }

    let totals: Vec<f64> = sweep
        .iter()
        .map(|(_, traj, _)| {
            let s = &traj.steps.last().unwrap().state;
            integrated_damage(&s.mesh, &s.alpha, None)
        })
        .collect();
    let monotone = totals.windows(2).all(|w| w[1] <= w[0]);
    let detail: Vec<String> = kappas
        .iter()
        .zip(&totals)
        .zip(&sweep)
        .map(|((k, v), (_, traj, _))| {
            let unconverged: Vec<usize> = traj.steps.iter().filter(|r| !r.outcome.converged).map(|r| r.state.step).collect();
            if unconverged.is_empty() {
                format!("κ={k}: {v:.4e}")
            } else {
                format!("κ={k}: {v:.4e} (AM capped at {SWEEP_AM_CAP} without convergence at t={unconverged:?})")
            }
        })
        .collect();
    report(&mut lines, 7, monotone, detail.join(", "));

    let a = trace_csv(&models[2].1.steps);
    let b = trace_csv(&repeat.1.steps);
    report(
        &mut lines,
        9,
        a.as_bytes() == b.as_bytes(),
        format!("{} CSV bytes, identical: {}", a.len(), a == b),
    );

    lines.sort_by_key(|l| l.id);
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!("acceptance: {}/{} passed in {:.0} s", lines.len() - failed.len(), lines.len(), total.elapsed().as_secs_f64());
    for l in lines.iter().filter(|l| !l.pass) {
        println!("failed criterion {}: {}", l.id, l.detail);
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
