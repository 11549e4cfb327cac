//! Principal stresses, maximum shear and the shear-compression measure of a
//! few stress states, in 2D and 3D.

use caving_damage::tensor::{
    principal_stresses_2d, principal_stresses_3d, shear_compression_measure, CardanoInvariants, SymTensor,
    SymTensor2, SymTensor3,
};

fn main() {
    // lithostatic state at 500 m depth with K0 = ν/(1−ν)
    let sv = -2.7e3 * 9.8 * 500.0;
    let lith = SymTensor2::new(0.3 / 0.7 * sv, sv, 0.0);
    let pure_shear = SymTensor2::new(0.0, 0.0, 5e6);
    for (name, s) in [("lithostatic", lith), ("pure shear", pure_shear)] {
        let (l1, l2) = principal_stresses_2d(&s);
        println!(
            "{name:>12}: λ = ({l1:.4e}, {l2:.4e}) Pa, max shear {:.4e} Pa, criterion(κ=1) {:+.4e}",
            s.max_shear(),
            shear_compression_measure(&s, 1.0)
        );
    }

    let s = SymTensor3::new(-12e6, -5e6, -9e6, 1e6, -2e6, 3e6);
    let inv = CardanoInvariants::of(&s);
    let (max, min, mid) = principal_stresses_3d(&s);
    println!("3D tensor: m = {:.4e}, p = {:.4e}, q = {:.4e}, θ = {:.6} rad", inv.m, inv.p, inv.q, inv.theta());
    println!("  principal stresses (max, min, middle) = ({max:.6e}, {min:.6e}, {mid:.6e})");
    println!("  max shear {:.6e}, criterion(κ=1) {:+.6e}", s.max_shear(), shear_compression_measure(&s, 1.0));
}
