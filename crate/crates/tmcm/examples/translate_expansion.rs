//! Re-expand an outgoing wave about a shifted origin and compare the two
//! descriptions of the same field point by point.
//!
//! The outgoing-to-regular operator is valid inside the sphere through the
//! old origin; sample points stay well inside it.

use ndarray::Array1;
use num_complex::Complex64;
use tmcm::basis::{evaluate_field, BasisSpec, SphericalExpansion, WaveKind};
use tmcm::translation::{general_translation, TranslationKind};

fn main() -> tmcm::error::Result<()> {
    let basis = BasisSpec::new(18);
    let k = 1.0;
    let kd = [0.9, -0.4, 1.6];

    // a low-order outgoing source about the old origin
    let mut coeffs = Array1::zeros(basis.size());
    coeffs[0] = Complex64::new(1.0, 0.0);
    coeffs[7] = Complex64::new(0.0, -0.5);
    coeffs[20] = Complex64::new(0.3, 0.2);
    let src = SphericalExpansion::new(WaveKind::Outgoing, coeffs.clone(), k, basis.clone())?;

    let op = general_translation(&basis, kd)?;
    assert_eq!(op.kind, TranslationKind::OutgoingToRegular);
    let moved =
        SphericalExpansion::new(WaveKind::Regular, op.matrix.dot(&coeffs), k, basis.clone())?;

    println!("{:>28} {:>14} {:>14}", "point (new frame)", "|E|", "rel err");
    for r_new in [[0.2, 0.1, -0.3], [-0.4, 0.3, 0.2], [0.1, -0.5, 0.1], [0.3, 0.3, 0.3]] {
        let r_old = [r_new[0] + kd[0] / k, r_new[1] + kd[1] / k, r_new[2] + kd[2] / k];
        let want = evaluate_field(&src, r_old)?;
        let got = evaluate_field(&moved, r_new)?;
        let mag = want.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let err = want
            .iter()
            .zip(got.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        println!(
            "  [{:+.1}, {:+.1}, {:+.1}]          {:>14.6e} {:>14.3e}",
            r_new[0],
            r_new[1],
            r_new[2],
            mag,
            err / mag
        );
    }
    Ok(())
}
