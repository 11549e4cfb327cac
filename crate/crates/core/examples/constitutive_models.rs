//! Energy densities, damage driving forces and stresses of the three damage
//! models at one strain state, for a range of damage values.

use caving_damage::constitutive::{elastic_energy_density, stress, DamageModel, StrainBrackets};
use caving_damage::tensor::SymTensor2;
use caving_damage::MaterialParams;

fn main() {
    let mat = MaterialParams::rock(1e4, 75.0);
    // vertical shortening with some shear
    let eps = SymTensor2::new(-1e-5, -6e-4, 2e-4);
    let brackets = StrainBrackets::new(&eps, &mat);
    println!("strain {eps:?}");
    for model in DamageModel::ALL {
        println!("{model}:");
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let (psi, dpsi, _) = model.bulk_density(&brackets, alpha, &mat);
            let sig = stress(model, &eps, alpha, &mat);
            println!(
                "  α = {alpha:.2}: ψ = {psi:+.4e}, ∂ψ/∂α = {dpsi:+.4e}, W = {:+.4e}, σ = ({:+.3e}, {:+.3e}, {:+.3e})",
                elastic_energy_density(model, &eps, alpha, &mat),
                sig.xx,
                sig.yy,
                sig.xy
            );
        }
    }
}
