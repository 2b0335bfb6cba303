//! Rotate a T-matrix and verify the invariants that make rotation safe:
//! the eigenvalue spectrum is preserved, rotating back recovers the
//! original, and a rotationally symmetric scatterer is left unchanged.

use ndarray_linalg::Eig;
use tmcm::basis::BasisSpec;
use tmcm::mie::pec_sphere_tmatrix;
use tmcm::rotation::{rotate_tmatrix, rotation_matrix, EulerAngles};
use tmcm::synthesis::{synthesize_total, Scene, StructureInstance};

fn main() -> tmcm::error::Result<()> {
    let k = 1.0;

    // an asymmetric scatterer: two unequal PEC spheres along x
    let scene = Scene::new(
        vec![
            StructureInstance::sphere(tmcm::mie::SphereSpec::pec(0.6), [-1.2, 0.0, 0.0]),
            StructureInstance::sphere(tmcm::mie::SphereSpec::pec(0.3), [1.2, 0.0, 0.0]),
        ],
        k,
    )?;
    let t = synthesize_total(&scene)?;
    let angles = EulerAngles::new(0.4, 1.1, -0.7);
    let rot = rotation_matrix(&t.basis, angles);
    let rotated = rotate_tmatrix(&t, &rot)?;

    let mut before: Vec<f64> = t.matrix.eig().unwrap().0.iter().map(|e| e.norm()).collect();
    let mut after: Vec<f64> =
        rotated.matrix.eig().unwrap().0.iter().map(|e| e.norm()).collect();
    before.sort_by(f64::total_cmp);
    after.sort_by(f64::total_cmp);
    let spectrum_drift = before
        .iter()
        .zip(&after)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("spectrum drift under rotation: {spectrum_drift:.3e}");

    let back = rotate_tmatrix(&rotated, &rotation_matrix(&t.basis, angles.inverse()))?;
    let roundtrip = (&back.matrix - &t.matrix).iter().map(|d| d.norm()).fold(0.0f64, f64::max);
    println!("round-trip error after inverse rotation: {roundtrip:.3e}");

    // a sphere at the origin commutes with every rotation
    let basis = BasisSpec::new(4);
    let sphere = pec_sphere_tmatrix(k, 1.0, &basis)?;
    let turned = rotate_tmatrix(&sphere, &rotation_matrix(&basis, angles))?;
    let change =
        (&turned.matrix - &sphere.matrix).iter().map(|d| d.norm()).fold(0.0f64, f64::max);
    println!("sphere T-matrix change under rotation: {change:.3e}");
    Ok(())
}
