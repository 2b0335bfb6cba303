//! Characteristic modes of a two-sphere composite.
//!
//! Synthesizes the total T-matrix of two PEC spheres, decomposes it, and
//! prints modal significances together with the lossless check |s_n| = 1.

use tmcm::mie::SphereSpec;
use tmcm::modes::decompose_scene;
use tmcm::synthesis::{Scene, StructureInstance};

fn main() -> tmcm::error::Result<()> {
    let k = 1.0;
    let scene = Scene::new(
        vec![
            StructureInstance::sphere(SphereSpec::pec(1.0), [0.0, 0.0, -1.5]),
            StructureInstance::sphere(SphereSpec::pec(1.0), [0.0, 0.0, 1.5]),
        ],
        k,
    )?;
    println!(
        "global basis: l_max = {}, N = {}",
        scene.global_basis.l_max,
        scene.global_basis.size()
    );

    let set = decompose_scene(&scene)?;
    println!("\n{:>4} {:>12} {:>24} {:>12}", "n", "|t_n|", "t_n", "|s_n|");
    for (i, mode) in set.modes.iter().take(10).enumerate() {
        println!(
            "{:>4} {:>12.6} {:>+11.4e}{:>+11.4e}j {:>12.9}",
            i,
            mode.t.norm(),
            mode.t.re,
            mode.t.im,
            mode.s.norm()
        );
    }

    // spheres on a symmetry axis give degenerate multiplets
    let groups = set.degenerate_groups();
    let multiplets: Vec<usize> =
        groups.iter().take(6).map(|g| g.len()).collect();
    println!("\nleading degeneracy multiplicities: {multiplets:?}");
    Ok(())
}
