//! Full block-caving evolution: the cavity advances step by step while the
//! damage field is computed by alternate minimization. Writes VTK snapshots,
//! checkpoints and `trace.csv` into the output directory.
//!
//! Usage: `cargo run --release --example block_caving [model] [w1] [final_step] [out_dir]`
//! (defaults: shear-compression 1e4 15 block_caving_out)

use std::path::PathBuf;

use caving_damage::config::Config;
use caving_damage::evolution::{damage_centroid, integrated_damage};
use caving_damage::mesh::Rect;
use caving_damage::output::{write_step, write_trace_csv};

fn main() -> caving_damage::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = Config::default();
    if let Some(m) = args.first() {
        cfg.model = m.parse().map_err(|e: String| caving_damage::Error::param("model", e))?;
    }
    if let Some(w1) = args.get(1) {
        cfg.w1 = w1.parse().map_err(|_| caving_damage::Error::param("w1", "not a number"))?;
    }
    if let Some(t) = args.get(2) {
        cfg.final_step = t.parse().map_err(|_| caving_damage::Error::param("final_step", "not an integer"))?;
    }
    cfg.output_dir = PathBuf::from(args.get(3).map_or("block_caving_out", String::as_str));
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| caving_damage::Error::Io {
        path: cfg.output_dir.clone(),
        source: e,
    })?;

    let sim = cfg.simulation()?;
    let above = Rect::new(-500.0, 100.0, 20.0, 120.0);
    let below = Rect::new(-500.0, 100.0, -120.0, -20.0);
    println!("model {}, w1 = {:e}, kappa = {}", cfg.model, cfg.w1, cfg.kappa);
    let traj = sim.run_with(cfg.final_step, |rec| {
        let s = &rec.state;
        let centroid = damage_centroid(&s.mesh, &s.alpha)
            .map_or("-".to_string(), |c| format!("({:.0}, {:.0})", c[0], c[1]));
        println!(
            "t = {:>2}: {:>3} iterations, max α {:.4}, ∫α {:.4e} (above roof {:.3e}, below floor {:.3e}), centroid {centroid}",
            s.step,
            rec.outcome.iterations,
            rec.max_alpha(),
            integrated_damage(&s.mesh, &s.alpha, None),
            integrated_damage(&s.mesh, &s.alpha, Some(&above)),
            integrated_damage(&s.mesh, &s.alpha, Some(&below)),
        );
        write_step(&cfg.output_dir, rec, sim.model)
    })?;
    write_trace_csv(&traj.steps, cfg.output_dir.join("trace.csv"))?;
    println!("outputs in {}", cfg.output_dir.display());
    Ok(())
}
