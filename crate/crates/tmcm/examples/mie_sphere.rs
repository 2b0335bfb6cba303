//! Mie coefficients for a PEC sphere and a coated (layered) sphere.
//!
//! Prints per-degree transition coefficients t_{tau l} and checks the
//! lossless condition |1 + 2t| = 1.

use num_complex::Complex64;
use tmcm::mie::{mie_coefficients, Material, SphereSpec};

fn main() -> tmcm::error::Result<()> {
    let k = 1.0;
    let l_max = 6;

    let pec = SphereSpec::pec(1.0);
    println!("PEC sphere, ka = 1.0");
    println!("{:>3} {:>24} {:>24} {:>12}", "l", "t_TE", "t_TM", "|1+2t_TM|");
    for (i, row) in mie_coefficients(k, &pec, l_max)?.iter().enumerate() {
        let s_tm = Complex64::new(1.0, 0.0) + 2.0 * row[1];
        println!(
            "{:>3} {:>+11.4e}{:>+11.4e}j {:>+11.4e}{:>+11.4e}j {:>12.9}",
            i + 1,
            row[0].re,
            row[0].im,
            row[1].re,
            row[1].im,
            s_tm.norm()
        );
    }

    // dielectric shell (eps_r = 4) over a PEC core
    let coated = SphereSpec {
        layers: vec![(1.0, Material::Dielectric { eps_r: 4.0 }), (0.6, Material::Pec)],
    };
    println!("\nPEC core (ka = 0.6) with eps_r = 4 shell (ka = 1.0)");
    println!("{:>3} {:>12} {:>12} {:>12}", "l", "|t_TE|", "|t_TM|", "|1+2t_TM|");
    for (i, row) in mie_coefficients(k, &coated, l_max)?.iter().enumerate() {
        let s_tm = Complex64::new(1.0, 0.0) + 2.0 * row[1];
        println!(
            "{:>3} {:>12.4e} {:>12.4e} {:>12.9}",
            i + 1,
            row[0].norm(),
            row[1].norm(),
            s_tm.norm()
        );
    }
    Ok(())
}
