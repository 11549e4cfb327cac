//! Sensitivity of the shear-compression model to κ: total damage after the
//! last step for several values, runs in parallel threads.
//!
//! Usage: `cargo run --release --example kappa_sweep [final_step] [mesh_size]`
//! (defaults: 15 25)

use caving_damage::config::Config;
use caving_damage::evolution::integrated_damage;

fn main() -> caving_damage::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let final_step: usize = args.first().map_or(15, |s| s.parse().expect("final_step"));
    let h: f64 = args.get(1).map_or(25.0, |s| s.parse().expect("mesh_size"));
    let kappas = [0.2, 0.5, 1.0, 1.5, 2.0];

    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = kappas
            .iter()
            .map(|&kappa| {
                scope.spawn(move || -> caving_damage::Result<_> {
                    let cfg = Config {
                        kappa,
                        final_step,
                        mesh_size: h,
                        continue_on_unconverged: true,
                        ..Config::default()
                    };
                    let last = cfg.simulation()?.run(final_step)?.steps.pop().expect("at least one step");
                    Ok((kappa, last))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    println!("{:>5} {:>14} {:>8} {:>10} {:>9}", "kappa", "integral", "max α", "damaged", "converged");
    for r in results {
        let (kappa, rec) = r?;
        println!(
            "{kappa:>5} {:>14.6e} {:>8.4} {:>10.4} {:>9}",
            integrated_damage(&rec.state.mesh, &rec.state.alpha, None),
            rec.max_alpha(),
            rec.damaged_area_fraction(),
            rec.outcome.converged
        );
    }
    Ok(())
}
