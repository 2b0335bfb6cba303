//! Scalar-wave operator algebra used to build translation operators.
//!
//! Works in the complex orthonormal spherical-harmonic basis (with
//! Condon-Shortley phase), where the angular-momentum ladder and Cartesian
//! gradient operators have their textbook sparse forms. The public real basis
//! is reached through a unitary per-(l, m) transform at the end.

use crate::basis::{pack_index, BasisSpec, Parity};
use crate::sph::AngularTables;
use ndarray::Array2;
use num_complex::Complex64;
use std::collections::HashMap;

/// Sparse scalar-wave expansion: (l, m) -> coefficient. Degree and order are
/// unrestricted above the physical basis so padded intermediates fit.
pub(crate) type ScalarCoeffs = HashMap<(usize, i64), Complex64>;

/// Complex orthonormal spherical harmonic with Condon-Shortley phase.
pub(crate) fn complex_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> Complex64 {
    let ma = m.unsigned_abs() as usize;
    if ma > l {
        return Complex64::new(0.0, 0.0);
    }
    let t = AngularTables::new(l, theta.cos(), theta.sin());
    let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
    let base = norm * t.pbar(l, ma);
    let phase = Complex64::from_polar(1.0, m as f64 * phi);
    if m >= 0 {
        if m % 2 == 0 { base * phase } else { -base * phase }
    } else {
        base * phase
    }
}

/// a_{lm} coefficient of cos(theta) Y_{lm} = a_{lm} Y_{l+1,m} + a_{l-1,m} Y_{l-1,m}.
#[inline]
pub(crate) fn a_coef(l: i64, m: i64) -> f64 {
    if l < m.abs() {
        return 0.0;
    }
    let lf = l as f64;
    let mf = m as f64;
    (((lf + 1.0) * (lf + 1.0) - mf * mf) / ((2.0 * lf + 1.0) * (2.0 * lf + 3.0))).sqrt()
}

/// b_{lm} coefficient magnitude set for (1/k) d/d+ = (1/k)(d/dx + i d/dy).
#[inline]
pub(crate) fn b_plus(l: i64, m: i64) -> f64 {
    let lf = l as f64;
    let mf = m as f64;
    (((lf + mf + 1.0) * (lf + mf + 2.0)) / ((2.0 * lf + 1.0) * (2.0 * lf + 3.0))).sqrt()
}

#[inline]
pub(crate) fn b_minus(l: i64, m: i64) -> f64 {
    if l - m < 2 || l < 1 {
        return 0.0;
    }
    let lf = l as f64;
    let mf = m as f64;
    (((lf - mf) * (lf - mf - 1.0)) / ((2.0 * lf - 1.0) * (2.0 * lf + 1.0))).sqrt()
}

fn add(out: &mut ScalarCoeffs, l: i64, m: i64, v: Complex64) {
    if l < m.abs() || l < 0 || v == Complex64::new(0.0, 0.0) {
        return;
    }
    *out.entry((l as usize, m)).or_insert(Complex64::new(0.0, 0.0)) += v;
}

/// (1/k) d/dz on a scalar-wave expansion:
/// (1/k) dz psi_{lm} = a_{l-1,m} psi_{l-1,m} - a_{lm} psi_{l+1,m}.
pub(crate) fn apply_dz(c: &ScalarCoeffs) -> ScalarCoeffs {
    let mut out = ScalarCoeffs::new();
    for (&(l, m), &v) in c {
        let l = l as i64;
        add(&mut out, l - 1, m, v * a_coef(l - 1, m));
        add(&mut out, l + 1, m, -v * a_coef(l, m));
    }
    out
}

/// (1/k)(d/dx + i d/dy):
/// (1/k) d+ psi_{lm} = b+_{lm} psi_{l+1,m+1} + b-_{lm} psi_{l-1,m+1}.
pub(crate) fn apply_dplus(c: &ScalarCoeffs) -> ScalarCoeffs {
    let mut out = ScalarCoeffs::new();
    for (&(l, m), &v) in c {
        let l = l as i64;
        add(&mut out, l + 1, m + 1, v * b_plus(l, m));
        add(&mut out, l - 1, m + 1, v * b_minus(l, m));
    }
    out
}

/// (1/k)(d/dx - i d/dy):
/// (1/k) d- psi_{lm} = -b+_{l,-m} psi_{l+1,m-1} - b-_{l,-m} psi_{l-1,m-1}.
pub(crate) fn apply_dminus(c: &ScalarCoeffs) -> ScalarCoeffs {
    let mut out = ScalarCoeffs::new();
    for (&(l, m), &v) in c {
        let l = l as i64;
        add(&mut out, l + 1, m - 1, -v * b_plus(l, -m));
        add(&mut out, l - 1, m - 1, -v * b_minus(l, -m));
    }
    out
}

/// L_z = -i d/dphi: L_z psi_{lm} = m psi_{lm}.
pub(crate) fn apply_lz(c: &ScalarCoeffs) -> ScalarCoeffs {
    c.iter()
        .map(|(&(l, m), &v)| ((l, m), v * m as f64))
        .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
        .collect()
}

#[inline]
fn lambda(l: i64, m: i64, up: bool) -> f64 {
    let lf = l as f64;
    let mf = m as f64;
    if up {
        ((lf - mf) * (lf + mf + 1.0)).max(0.0).sqrt()
    } else {
        ((lf + mf) * (lf - mf + 1.0)).max(0.0).sqrt()
    }
}

/// L+ psi_{lm} = sqrt((l-m)(l+m+1)) psi_{l,m+1}.
pub(crate) fn apply_lplus(c: &ScalarCoeffs) -> ScalarCoeffs {
    let mut out = ScalarCoeffs::new();
    for (&(l, m), &v) in c {
        add(&mut out, l as i64, m + 1, v * lambda(l as i64, m, true));
    }
    out
}

/// L- psi_{lm} = sqrt((l+m)(l-m+1)) psi_{l,m-1}.
pub(crate) fn apply_lminus(c: &ScalarCoeffs) -> ScalarCoeffs {
    let mut out = ScalarCoeffs::new();
    for (&(l, m), &v) in c {
        add(&mut out, l as i64, m - 1, v * lambda(l as i64, m, false));
    }
    out
}

/// Cartesian components (E_x, E_y, E_z) of the tau=1 vector wave with a
/// complex harmonic, as scalar-wave expansions of the same degree:
/// M_{lm} = -i gamma L psi_{lm} with gamma = 1/sqrt(l(l+1)).
pub(crate) fn m_wave_components(l: usize, m: i64) -> [ScalarCoeffs; 3] {
    let gamma = ((l * (l + 1)) as f64).sqrt().recip();
    let mi = Complex64::new(0.0, -1.0) * gamma;
    let mut seed = ScalarCoeffs::new();
    seed.insert((l, m), Complex64::new(1.0, 0.0));
    let lp = apply_lplus(&seed);
    let lm = apply_lminus(&seed);
    let lz = apply_lz(&seed);
    let mut ex = ScalarCoeffs::new();
    let mut ey = ScalarCoeffs::new();
    for (k, v) in &lp {
        add(&mut ex, k.0 as i64, k.1, 0.5 * v * mi);
        add(&mut ey, k.0 as i64, k.1, Complex64::new(0.0, -0.5) * v * mi);
    }
    for (k, v) in &lm {
        add(&mut ex, k.0 as i64, k.1, 0.5 * v * mi);
        add(&mut ey, k.0 as i64, k.1, Complex64::new(0.0, 0.5) * v * mi);
    }
    let ez = lz.iter().map(|(&k, &v)| (k, v * mi)).collect();
    [ex, ey, ez]
}

/// Cartesian curl over scalar-wave component expansions: (1/k) curl E.
pub(crate) fn curl_components(e: &[ScalarCoeffs; 3]) -> [ScalarCoeffs; 3] {
    // dx = (d+ + d-)/2, dy = (d+ - d-)/(2i), all divided by k already.
    let half = Complex64::new(0.5, 0.0);
    let halfi = Complex64::new(0.0, -0.5); // 1/(2i)
    let dx = |c: &ScalarCoeffs| -> ScalarCoeffs {
        let p = apply_dplus(c);
        let m = apply_dminus(c);
        merge(scale(&p, half), scale(&m, half))
    };
    let dy = |c: &ScalarCoeffs| -> ScalarCoeffs {
        let p = apply_dplus(c);
        let m = apply_dminus(c);
        merge(scale(&p, halfi), scale(&m, -halfi))
    };
    let cx = merge(dy(&e[2]), scale(&apply_dz(&e[1]), -Complex64::new(1.0, 0.0)));
    let cy = merge(apply_dz(&e[0]), scale(&dx(&e[2]), -Complex64::new(1.0, 0.0)));
    let cz = merge(dx(&e[1]), scale(&dy(&e[0]), -Complex64::new(1.0, 0.0)));
    [cx, cy, cz]
}

pub(crate) fn scale(c: &ScalarCoeffs, s: Complex64) -> ScalarCoeffs {
    c.iter().map(|(&k, &v)| (k, v * s)).collect()
}

pub(crate) fn merge(mut a: ScalarCoeffs, b: ScalarCoeffs) -> ScalarCoeffs {
    for (k, v) in b {
        *a.entry(k).or_insert(Complex64::new(0.0, 0.0)) += v;
    }
    a.retain(|_, v| v.norm() > 0.0);
    a
}

/// L . E over component expansions; for E = sum p M + q N this equals
/// -i sum p_{lm} sqrt(l(l+1)) psi_{lm}, which isolates the tau=1 content.
pub(crate) fn l_dot(e: &[ScalarCoeffs; 3]) -> ScalarCoeffs {
    let half = Complex64::new(0.5, 0.0);
    let halfi = Complex64::new(0.0, -0.5);
    // L_x = (L+ + L-)/2, L_y = (L+ - L-)/(2i)
    let lx = |c: &ScalarCoeffs| merge(scale(&apply_lplus(c), half), scale(&apply_lminus(c), half));
    let ly =
        |c: &ScalarCoeffs| merge(scale(&apply_lplus(c), halfi), scale(&apply_lminus(c), -halfi));
    merge(merge(lx(&e[0]), ly(&e[1])), apply_lz(&e[2]))
}

/// Complex-basis packed index over (tau, l, m): degree blocks in ascending l,
/// inside a degree m runs -l..=l, tau interleaved last (matching the real
/// canonical layout block structure).
#[inline]
pub(crate) fn cpack(tau: u8, l: usize, m: i64) -> usize {
    let start = 2 * (l - 1) * (l + 1);
    start + 2 * (m + l as i64) as usize + (tau as usize - 1)
}

/// Transform an operator matrix from the complex basis (cpack layout) to the
/// real canonical basis: O_real = conj(U) O_complex U^T, applied per (l, m)
/// 2x2 block on rows and columns. Rows and columns may carry different bases
/// (rectangular operators).
pub(crate) fn operator_complex_to_real(
    op: &Array2<Complex64>,
    basis_rows: &BasisSpec,
    basis_cols: &BasisSpec,
) -> Array2<Complex64> {
    let n_rows = basis_rows.size();
    let n = basis_cols.size();
    assert_eq!(op.dim(), (n_rows, n));
    let l_max = basis_cols.l_max;
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    // column pass: O1 = O U^T, then row pass: conj(U) O1.
    let mut o1 = Array2::<Complex64>::zeros((n_rows, n));
    for idx in crate::basis::iter_indices(l_max) {
        let col_r = pack_index(idx, l_max).unwrap();
        let (l, m, tau) = (idx.l, idx.m as i64, idx.tau);
        if m == 0 {
            let cc = cpack(tau, l, 0);
            for r in 0..n_rows {
                o1[[r, col_r]] = op[[r, cc]];
            }
        } else {
            let cp = cpack(tau, l, m);
            let cn = cpack(tau, l, -m);
            let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
            // U^T[+m, e] = sgn/sqrt2, U^T[+m, o] = -i sgn/sqrt2,
            // U^T[-m, e] = 1/sqrt2,  U^T[-m, o] = i/sqrt2.
            let (wp, wn) = match idx.sigma {
                Parity::Even => (
                    Complex64::new(sgn * sqrt_half, 0.0),
                    Complex64::new(sqrt_half, 0.0),
                ),
                Parity::Odd => (
                    Complex64::new(0.0, -sgn * sqrt_half),
                    Complex64::new(0.0, sqrt_half),
                ),
            };
            for r in 0..n_rows {
                o1[[r, col_r]] = op[[r, cp]] * wp + op[[r, cn]] * wn;
            }
        }
    }
    let mut out = Array2::<Complex64>::zeros((n_rows, n));
    for idx in crate::basis::iter_indices(basis_rows.l_max) {
        let row_r = pack_index(idx, basis_rows.l_max).unwrap();
        let (l, m, tau) = (idx.l, idx.m as i64, idx.tau);
        if m == 0 {
            let cc = cpack(tau, l, 0);
            for c in 0..n {
                out[[row_r, c]] = o1[[cc, c]];
            }
        } else {
            let cp = cpack(tau, l, m);
            let cn = cpack(tau, l, -m);
            let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
            // conj(U)[e, +m] = sgn/sqrt2, conj(U)[e, -m] = 1/sqrt2,
            // conj(U)[o, +m] = i sgn/sqrt2, conj(U)[o, -m] = -i/sqrt2.
            let (wp, wn) = match idx.sigma {
                Parity::Even => (
                    Complex64::new(sgn * sqrt_half, 0.0),
                    Complex64::new(sqrt_half, 0.0),
                ),
                Parity::Odd => (
                    Complex64::new(0.0, sgn * sqrt_half),
                    Complex64::new(0.0, -sqrt_half),
                ),
            };
            for c in 0..n {
                out[[row_r, c]] = o1[[cp, c]] * wp + o1[[cn, c]] * wn;
            }
        }
    }
    out
}

/// Real canonical coefficient vector -> complex cpack coefficient vector.
#[cfg(test)]
pub(crate) fn coeffs_real_to_complex(
    v: &ndarray::Array1<Complex64>,
    basis: &BasisSpec,
) -> ndarray::Array1<Complex64> {
    let l_max = basis.l_max;
    let mut out = ndarray::Array1::<Complex64>::zeros(v.len());
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    for idx in crate::basis::iter_indices(l_max) {
        let r = pack_index(idx, l_max).unwrap();
        let (l, m, tau) = (idx.l, idx.m as i64, idx.tau);
        if m == 0 {
            out[cpack(tau, l, 0)] += v[r];
        } else {
            let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
            let (wp, wn) = match idx.sigma {
                Parity::Even => (
                    Complex64::new(sgn * sqrt_half, 0.0),
                    Complex64::new(sqrt_half, 0.0),
                ),
                Parity::Odd => (
                    Complex64::new(0.0, -sgn * sqrt_half),
                    Complex64::new(0.0, sqrt_half),
                ),
            };
            out[cpack(tau, l, m)] += v[r] * wp;
            out[cpack(tau, l, -m)] += v[r] * wn;
        }
    }
    out
}

/// Complex cpack coefficient vector -> real canonical coefficient vector.
pub(crate) fn coeffs_complex_to_real(
    v: &ndarray::Array1<Complex64>,
    basis: &BasisSpec,
) -> ndarray::Array1<Complex64> {
    let l_max = basis.l_max;
    let mut out = ndarray::Array1::<Complex64>::zeros(v.len());
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    for idx in crate::basis::iter_indices(l_max) {
        let r = pack_index(idx, l_max).unwrap();
        let (l, m, tau) = (idx.l, idx.m as i64, idx.tau);
        if m == 0 {
            out[r] = v[cpack(tau, l, 0)];
        } else {
            let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
            let (wp, wn) = match idx.sigma {
                Parity::Even => (
                    Complex64::new(sgn * sqrt_half, 0.0),
                    Complex64::new(sqrt_half, 0.0),
                ),
                Parity::Odd => (
                    Complex64::new(0.0, sgn * sqrt_half),
                    Complex64::new(0.0, -sqrt_half),
                ),
            };
            out[r] = v[cpack(tau, l, m)] * wp + v[cpack(tau, l, -m)] * wn;
        }
    }
    out
}
