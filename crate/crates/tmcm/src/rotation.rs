//! Rotation operators for real-harmonic spherical wave expansions.
//!
//! The operator is real, orthogonal, and block-diagonal in (tau, l). The
//! polar kernel is the Wigner d function computed from its Jacobi-polynomial
//! closed form with a three-term recurrence; negative orders are reached
//! through the standard symmetries rather than the factorial form.

use crate::basis::{BasisSpec, Parity, SphericalExpansion};
use crate::error::{Error, Result};
use crate::sph::ln_factorial;
use crate::tmatrix::TMatrix;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use parking_lot::RwLock;
use std::collections::HashMap;
use std::sync::Arc;

/// ZYZ Euler angles (radians): azimuthal alpha, polar beta, azimuthal gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Canonical form: beta in [0, pi], alpha and gamma in [0, 2 pi).
    ///
    /// A negative beta is folded using D(a, -b, c) = D(a - pi, b, c + pi)
    /// (rotating the rotation axis by pi about z flips the sign of beta).
    pub fn canonicalize(self) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut a = self.alpha;
        let mut b = self.beta.rem_euclid(two_pi);
        let mut g = self.gamma;
        if b > std::f64::consts::PI {
            b = two_pi - b;
            a += std::f64::consts::PI;
            g += std::f64::consts::PI;
        }
        Self { alpha: a.rem_euclid(two_pi), beta: b, gamma: g.rem_euclid(two_pi) }
    }

    pub fn inverse(self) -> Self {
        Self { alpha: -self.gamma, beta: -self.beta, gamma: -self.alpha }
    }

    /// Active 3x3 rotation matrix Rz(alpha) Ry(beta) Rz(gamma); maps the unit
    /// z vector to the direction (theta = beta, phi = alpha) when gamma = 0.
    pub fn rotation_matrix3(self) -> [[f64; 3]; 3] {
        let rz = |t: f64| {
            [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]]
        };
        let ry = |t: f64| {
            [[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]]
        };
        mat3_mul(mat3_mul(rz(self.alpha), ry(self.beta)), rz(self.gamma))
    }
}

fn mat3_mul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn apply_mat3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Jacobi polynomial P_n^{(a, b)}(x) by the three-term recurrence.
fn jacobi(n: usize, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (a - b) + (1.0 + 0.5 * (a + b)) * x;
    for k in 2..=n {
        let kf = k as f64;
        let c1 = 2.0 * kf * (kf + a + b) * (2.0 * kf + a + b - 2.0);
        let c2 = (2.0 * kf + a + b - 1.0)
            * ((2.0 * kf + a + b) * (2.0 * kf + a + b - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * (2.0 * kf + a + b);
        let p2 = (c2 * p1 - c3 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Wigner d^l_{m m'}(beta).
///
/// Evaluated in the region m >= |m'| via the Jacobi closed form; other index
/// regions use d^l_{m'm}(b) = (-1)^{m-m'} d^l_{mm'}(b) and
/// d^l_{-m,-m'} = (-1)^{m-m'} d^l_{mm'}.
pub fn wigner_d(l: usize, m: i64, mp: i64, beta: f64) -> Result<f64> {
    let lf = l as i64;
    if m.abs() > lf || mp.abs() > lf {
        return Err(Error::IndexOutOfRange(format!("wigner_d l={l} m={m} m'={mp}")));
    }
    // reduce to m >= |m'|
    let (m, mp, sign) = if m.abs() >= mp.abs() {
        if m >= 0 {
            (m, mp, 1.0)
        } else {
            (-m, -mp, if (m - mp) % 2 == 0 { 1.0 } else { -1.0 })
        }
    } else if mp >= 0 {
        // swap
        (mp, m, if (m - mp) % 2 == 0 { 1.0 } else { -1.0 })
    } else {
        // swap and negate
        (-mp, -m, 1.0)
    };
    debug_assert!(m >= mp.abs());
    let (mu, mpu) = (m as usize, mp);
    let half = 0.5 * beta;
    let (c, s) = (half.cos(), half.sin());
    let a = (m - mp) as f64;
    let b = (m + mp) as f64;
    let ln_pref = 0.5
        * (ln_factorial((lf + m) as usize) + ln_factorial((lf - m) as usize)
            - ln_factorial((lf + mp) as usize)
            - ln_factorial((lf - mp) as usize));
    let n = (lf - m) as usize;
    let val = ln_pref.exp()
        * c.powi((m + mpu) as i32)
        * s.powi((m - mpu) as i32)
        * jacobi(n, a, b, beta.cos());
    let _ = mu;
    Ok(sign * val)
}

/// Rotation operator: one real orthogonal (2l+1) x (2l+1) block per degree,
/// shared by both wave classes.
#[derive(Debug, Clone)]
pub struct RotationOperator {
    pub basis: BasisSpec,
    pub angles: EulerAngles,
    /// blocks[l-1]: (2l+1)^2 block over (sigma, m) slots.
    blocks: Vec<Array2<f64>>,
}

/// Slot index within a degree block: 0 <-> (m=0, even); for m >= 1,
/// 2m-1 <-> (m, even), 2m <-> (m, odd).
#[inline]
fn slot(m: usize, sigma: Parity) -> usize {
    if m == 0 {
        0
    } else {
        2 * m - 1 + if sigma == Parity::Odd { 1 } else { 0 }
    }
}

#[inline]
fn slot_to_m_sigma(s: usize) -> (usize, Parity) {
    if s == 0 {
        (0, Parity::Even)
    } else {
        (((s - 1) / 2) + 1, if s % 2 == 0 { Parity::Odd } else { Parity::Even })
    }
}

/// Position of (m, sigma, tau) inside a degree block of the canonical
/// ordering (block length 2 (2l+1), tau interleaved).
#[inline]
fn pos_in_degree(m: usize, sigma: Parity, tau: u8) -> usize {
    let base = if m == 0 { 0 } else { 2 + 4 * (m - 1) };
    base + if m > 0 && sigma == Parity::Odd { 2 } else { 0 } + (tau as usize - 1)
}

/// Assemble the rotation operator for a basis.
pub fn rotation_matrix(basis: &BasisSpec, angles: EulerAngles) -> RotationOperator {
    let l_max = basis.l_max;
    let EulerAngles { alpha, beta, gamma } = angles;
    let mut blocks = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let dim = 2 * l + 1;
        let mut block = Array2::<f64>::zeros((dim, dim));
        // cache d values for this degree
        let lf = l as i64;
        let mut d = vec![0.0; (2 * l + 1) * (2 * l + 1)];
        let didx = |m: i64, mp: i64| ((m + lf) * (2 * lf + 1) + (mp + lf)) as usize;
        for m in -lf..=lf {
            for mp in -lf..=lf {
                d[didx(m, mp)] = wigner_d(l, m, mp, beta).unwrap();
            }
        }
        for m in 0..=l as i64 {
            for mp in 0..=l as i64 {
                let eps = |mm: i64| if mm == 0 { 1.0f64 } else { 2.0 };
                let pref = (eps(m) * eps(mp) / 4.0).sqrt()
                    * if (m + mp) % 2 == 0 { 1.0 } else { -1.0 };
                let a_c = d[didx(m, mp)] + sign_pow(mp) * d[didx(m, -mp)];
                let b_c = d[didx(m, mp)] - sign_pow(mp) * d[didx(m, -mp)];
                let (cg, sg) = ((m as f64 * gamma).cos(), (m as f64 * gamma).sin());
                let (ca, sa) = ((mp as f64 * alpha).cos(), (mp as f64 * alpha).sin());
                // Rz(gamma-block) * diag(A, B) * Rz(alpha-block)
                let ee = cg * a_c * ca - sg * b_c * sa;
                let eo = cg * a_c * sa + sg * b_c * ca;
                let oe = -sg * a_c * ca - cg * b_c * sa;
                let oo = -sg * a_c * sa + cg * b_c * ca;
                let mu = m as usize;
                let mpu = mp as usize;
                block[[slot(mu, Parity::Even), slot(mpu, Parity::Even)]] = pref * ee;
                if mpu > 0 {
                    block[[slot(mu, Parity::Even), slot(mpu, Parity::Odd)]] = pref * eo;
                }
                if mu > 0 {
                    block[[slot(mu, Parity::Odd), slot(mpu, Parity::Even)]] = pref * oe;
                }
                if mu > 0 && mpu > 0 {
                    block[[slot(mu, Parity::Odd), slot(mpu, Parity::Odd)]] = pref * oo;
                }
            }
        }
        blocks.push(block);
    }
    RotationOperator { basis: basis.clone(), angles, blocks }
}

#[inline]
fn sign_pow(p: i64) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl RotationOperator {
    /// Apply to a coefficient vector: out = D * v.
    pub fn apply_vec(&self, v: &Array1<Complex64>) -> Array1<Complex64> {
        let l_max = self.basis.l_max;
        let mut out = Array1::<Complex64>::zeros(v.len());
        for l in 1..=l_max {
            let start = 2 * (l - 1) * (l + 1);
            let dim = 2 * l + 1;
            let block = &self.blocks[l - 1];
            for tau in [1u8, 2u8] {
                for row in 0..dim {
                    let (mr, sr) = slot_to_m_sigma(row);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for col in 0..dim {
                        let (mc, sc) = slot_to_m_sigma(col);
                        acc += block[[row, col]] * v[start + pos_in_degree(mc, sc, tau)];
                    }
                    out[start + pos_in_degree(mr, sr, tau)] = acc;
                }
            }
        }
        out
    }

    /// Dense N x N matrix form.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.basis.size();
        let mut out = Array2::zeros((n, n));
        for l in 1..=self.basis.l_max {
            let start = 2 * (l - 1) * (l + 1);
            let dim = 2 * l + 1;
            let block = &self.blocks[l - 1];
            for tau in [1u8, 2u8] {
                for row in 0..dim {
                    let (mr, sr) = slot_to_m_sigma(row);
                    for col in 0..dim {
                        let (mc, sc) = slot_to_m_sigma(col);
                        out[[start + pos_in_degree(mr, sr, tau), start + pos_in_degree(mc, sc, tau)]] =
                            block[[row, col]];
                    }
                }
            }
        }
        out
    }

    /// Conjugate a dense complex matrix: returns D^t M D (the Eq.-13 form for
    /// T-matrices). Exploits the block-diagonal structure.
    pub fn conjugate_matrix(&self, m: &Array2<Complex64>) -> Array2<Complex64> {
        let tmp = self.apply_cols(m, true);
        self.apply_rows(&tmp, true)
    }

    /// Inverse conjugation: D M D^t.
    pub fn conjugate_matrix_inv(&self, m: &Array2<Complex64>) -> Array2<Complex64> {
        let tmp = self.apply_cols(m, false);
        self.apply_rows(&tmp, false)
    }

    /// D^t M for a matrix whose rows live in this operator's basis; the
    /// column count is unconstrained (rectangular operators).
    pub fn left_mul_transposed(&self, m: &Array2<Complex64>) -> Array2<Complex64> {
        self.apply_rows(m, true)
    }

    /// M D for a matrix whose columns live in this operator's basis.
    pub fn right_mul(&self, m: &Array2<Complex64>) -> Array2<Complex64> {
        self.apply_cols(m, true)
    }

    /// Multiply on the right: M * D (transpose = false) or M * D (column mix
    /// with D, transpose = true gives M * D with rows of D transposed, i.e.
    /// M * D for transpose=true means using D^t ... see callers).
    fn apply_cols(&self, m: &Array2<Complex64>, plain: bool) -> Array2<Complex64> {
        // out = m * D if plain, else m * D^t
        let mut out = Array2::zeros(m.dim());
        for l in 1..=self.basis.l_max {
            let start = 2 * (l - 1) * (l + 1);
            let dim = 2 * l + 1;
            let block = &self.blocks[l - 1];
            for tau in [1u8, 2u8] {
                let cols: Vec<usize> = (0..dim)
                    .map(|s| {
                        let (mm, ss) = slot_to_m_sigma(s);
                        start + pos_in_degree(mm, ss, tau)
                    })
                    .collect();
                for r in 0..m.nrows() {
                    for (jc, &cj) in cols.iter().enumerate() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (kc, &ck) in cols.iter().enumerate() {
                            let b = if plain { block[[kc, jc]] } else { block[[jc, kc]] };
                            acc += m[[r, ck]] * b;
                        }
                        out[[r, cj]] = acc;
                    }
                }
            }
        }
        out
    }

    fn apply_rows(&self, m: &Array2<Complex64>, transpose: bool) -> Array2<Complex64> {
        // out = D^t * m if transpose, else D * m
        let mut out = Array2::zeros(m.dim());
        for l in 1..=self.basis.l_max {
            let start = 2 * (l - 1) * (l + 1);
            let dim = 2 * l + 1;
            let block = &self.blocks[l - 1];
            for tau in [1u8, 2u8] {
                let rows: Vec<usize> = (0..dim)
                    .map(|s| {
                        let (mm, ss) = slot_to_m_sigma(s);
                        start + pos_in_degree(mm, ss, tau)
                    })
                    .collect();
                for (ir, &ri) in rows.iter().enumerate() {
                    for c in 0..m.ncols() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (kr, &rk) in rows.iter().enumerate() {
                            let b = if transpose { block[[kr, ir]] } else { block[[ir, kr]] };
                            acc += b * m[[rk, c]];
                        }
                        out[[ri, c]] = acc;
                    }
                }
            }
        }
        out
    }
}

/// Rotate an expansion: coefficients become D * c.
pub fn rotate_expansion(exp: &SphericalExpansion, op: &RotationOperator) -> Result<SphericalExpansion> {
    exp.basis.check_same(&op.basis)?;
    let mut out = exp.clone();
    out.coefficients = op.apply_vec(&exp.coefficients);
    Ok(out)
}

/// Rotate a T-matrix: T' = D^t T D.
pub fn rotate_tmatrix(t: &TMatrix, op: &RotationOperator) -> Result<TMatrix> {
    t.basis.check_same(&op.basis)?;
    Ok(TMatrix { matrix: op.conjugate_matrix(&t.matrix), k: t.k, basis: t.basis.clone() })
}

/// Cache of rotation operators keyed by basis size and quantized angles.
/// Rotation operators are frequency-independent, so a sweep reuses them.
#[derive(Default)]
pub struct RotationCache {
    map: RwLock<HashMap<(usize, [i64; 3]), Arc<RotationOperator>>>,
    hits: std::sync::atomic::AtomicUsize,
    misses: std::sync::atomic::AtomicUsize,
}

impl RotationCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(basis: &BasisSpec, angles: EulerAngles) -> (usize, [i64; 3]) {
        let q = |x: f64| (x / 1e-12).round() as i64;
        (basis.l_max, [q(angles.alpha), q(angles.beta), q(angles.gamma)])
    }

    pub fn get(&self, basis: &BasisSpec, angles: EulerAngles) -> Arc<RotationOperator> {
        use std::sync::atomic::Ordering;
        let key = Self::key(basis, angles);
        if let Some(op) = self.map.read().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return op.clone();
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let op = Arc::new(rotation_matrix(basis, angles));
        self.map.write().insert(key, op.clone());
        op
    }

    pub fn stats(&self) -> (usize, usize) {
        use std::sync::atomic::Ordering;
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }
}

/// Euler angles (alpha, beta, 0) whose rotation maps +z onto the given
/// direction; used by the general translation decomposition.
pub fn angles_to_direction(d: [f64; 3]) -> EulerAngles {
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    assert!(r > 0.0);
    let beta = (d[2] / r).clamp(-1.0, 1.0).acos();
    let alpha = if d[0] == 0.0 && d[1] == 0.0 { 0.0 } else { d[1].atan2(d[0]) };
    EulerAngles::new(alpha, beta, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{evaluate_field, pack_index, WaveIndex, WaveKind};
    use crate::sph::AngularTables;

    fn real_harmonic(l: usize, m: usize, sigma: Parity, theta: f64, phi: f64) -> f64 {
        let t = AngularTables::new(l, theta.cos(), theta.sin());
        let eps = if m == 0 { 1.0 } else { 2.0 };
        let q = (eps / (2.0 * std::f64::consts::PI)).sqrt();
        match sigma {
            Parity::Even => q * t.pbar(l, m) * (m as f64 * phi).cos(),
            Parity::Odd => q * t.pbar(l, m) * (m as f64 * phi).sin(),
        }
    }

    #[test]
    fn wigner_zero_angle_identity() {
        for l in 1..=6usize {
            for m in -(l as i64)..=l as i64 {
                for mp in -(l as i64)..=l as i64 {
                    let v = wigner_d(l, m, mp, 0.0).unwrap();
                    let expect = if m == mp { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-13, "l={l} m={m} mp={mp} v={v}");
                }
            }
        }
    }

    #[test]
    fn wigner_pi_property() {
        for l in 1..=6usize {
            for m in -(l as i64)..=l as i64 {
                for mp in -(l as i64)..=l as i64 {
                    let v = wigner_d(l, m, mp, std::f64::consts::PI).unwrap();
                    let expect = if m == -mp {
                        if (l as i64 + mp) % 2 == 0 { 1.0 } else { -1.0 }
                    } else {
                        0.0
                    };
                    assert!((v - expect).abs() < 1e-13, "l={l} m={m} mp={mp} v={v}");
                }
            }
        }
    }

    #[test]
    fn wigner_low_degree_closed_forms() {
        for &beta in &[0.3, 1.0, 2.0] {
            let b: f64 = beta;
            assert!((wigner_d(1, 0, 0, b).unwrap() - b.cos()).abs() < 1e-14);
            assert!((wigner_d(1, 1, 1, b).unwrap() - 0.5 * (1.0 + b.cos())).abs() < 1e-14);
            assert!((wigner_d(1, 1, 0, b).unwrap() + b.sin() / 2f64.sqrt()).abs() < 1e-14
                || (wigner_d(1, 1, 0, b).unwrap() - b.sin() / 2f64.sqrt()).abs() < 1e-14);
            assert!((wigner_d(2, 0, 0, b).unwrap() - 0.5 * (3.0 * b.cos() * b.cos() - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn wigner_orthogonality() {
        let beta = 0.77;
        for l in 1..=8usize {
            let lf = l as i64;
            for m1 in -lf..=lf {
                for m2 in -lf..=lf {
                    let mut acc = 0.0;
                    for mp in -lf..=lf {
                        acc += wigner_d(l, m1, mp, beta).unwrap() * wigner_d(l, m2, mp, beta).unwrap();
                    }
                    let expect = if m1 == m2 { 1.0 } else { 0.0 };
                    assert!((acc - expect).abs() < 1e-13, "l={l} {m1} {m2} {acc}");
                }
            }
        }
    }

    /// Quadrature oracle: D must satisfy Y_n(R r) = sum_n' D_{n'n} Y_n'(r)
    /// with R the active frame rotation of `rotation_matrix3`, consistent
    /// with the field contract E(R p) = R E'(p) for f' = D f.
    #[test]
    fn scalar_harmonic_rotation_oracle() {
        let l_max = 3;
        let basis = BasisSpec::new(l_max);
        let angles = EulerAngles::new(0.9, 0.6, -0.4);
        let op = rotation_matrix(&basis, angles);
        let r3 = angles.rotation_matrix3();
        let (nodes, wts) = crate::sph::gauss_legendre(12);
        let n_phi = 24;
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        // test a few (row, col) scalar pairs against quadrature
        for l in 1..=l_max {
            let dim = 2 * l + 1;
            for rs in 0..dim {
                let (mr, sr) = slot_to_m_sigma(rs);
                for cs in 0..dim {
                    let (mc, sc) = slot_to_m_sigma(cs);
                    // integral of Y_row(R r) Y_col(r) over the sphere
                    let mut acc = 0.0;
                    for (&x, &w) in nodes.iter().zip(&wts) {
                        let theta = x.acos();
                        for ip in 0..n_phi {
                            let phi = ip as f64 * dphi;
                            let p = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                            let rp = apply_mat3(&r3, p);
                            let tr = rp[2].clamp(-1.0, 1.0).acos();
                            let pr = rp[1].atan2(rp[0]);
                            acc += w * dphi
                                * real_harmonic(l, mr, sr, tr, pr)
                                * real_harmonic(l, mc, sc, theta, phi);
                        }
                    }
                    let got = op.blocks[l - 1][[cs, rs]];
                    assert!(
                        (acc - got).abs() < 1e-10,
                        "l={l} row=({mr},{sr:?}) col=({mc},{sc:?}) oracle={acc} D={got}"
                    );
                }
            }
        }
    }

    #[test]
    fn orthogonality_and_inverse() {
        let basis = BasisSpec::new(8);
        let angles = EulerAngles::new(1.3, 0.8, 2.2);
        let d = rotation_matrix(&basis, angles).to_dense();
        let n = basis.size();
        let prod = d.dot(&d.t());
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[[i, j]] - expect).abs() < 1e-12);
            }
        }
        let dinv = rotation_matrix(&basis, angles.inverse()).to_dense();
        let prod2 = dinv.dot(&d);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod2[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factorization_into_axial_and_polar_parts() {
        let basis = BasisSpec::new(6);
        let (a, b, g) = (0.7, 1.1, -2.0);
        let full = rotation_matrix(&basis, EulerAngles::new(a, b, g)).to_dense();
        let da = rotation_matrix(&basis, EulerAngles::new(a, 0.0, 0.0)).to_dense();
        let db = rotation_matrix(&basis, EulerAngles::new(0.0, b, 0.0)).to_dense();
        let dg = rotation_matrix(&basis, EulerAngles::new(0.0, 0.0, g)).to_dense();
        let composed = dg.dot(&db).dot(&da);
        let n = basis.size();
        for i in 0..n {
            for j in 0..n {
                assert!((full[[i, j]] - composed[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_at_zero_angles() {
        let basis = BasisSpec::new(4);
        let d = rotation_matrix(&basis, EulerAngles::new(0.0, 0.0, 0.0)).to_dense();
        for i in 0..basis.size() {
            for j in 0..basis.size() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d[[i, j]] - expect).abs() < 1e-14);
            }
        }
    }

    /// Field-level consistency: E(R p) = R E'(p) with f' = D f.
    #[test]
    fn rotation_commutes_with_field_evaluation() {
        let basis = BasisSpec::new(4);
        let k = 1.7;
        let mut exp = SphericalExpansion::zeros(WaveKind::Regular, k, basis.clone());
        for (n, c) in exp.coefficients.iter_mut().enumerate() {
            *c = Complex64::new((0.17 * n as f64).sin(), (0.41 * n as f64).cos());
        }
        let angles = EulerAngles::new(0.5, 1.2, -0.8);
        let op = rotation_matrix(&basis, angles);
        let rotated = rotate_expansion(&exp, &op).unwrap();
        let r3 = angles.rotation_matrix3();
        for &p in &[[0.3, -0.1, 0.4], [0.0, 0.55, -0.2], [-0.4, 0.2, 0.1]] {
            let lhs = evaluate_field(&exp, apply_mat3(&r3, p)).unwrap();
            let e_rot = evaluate_field(&rotated, p).unwrap();
            let rhs = [
                r3[0][0] * e_rot[0] + r3[0][1] * e_rot[1] + r3[0][2] * e_rot[2],
                r3[1][0] * e_rot[0] + r3[1][1] * e_rot[1] + r3[1][2] * e_rot[2],
                r3[2][0] * e_rot[0] + r3[2][1] * e_rot[1] + r3[2][2] * e_rot[2],
            ];
            for c in 0..3 {
                assert!((lhs[c] - rhs[c]).norm() < 1e-9, "p={p:?} c={c} {} {}", lhs[c], rhs[c]);
            }
        }
    }

    /// Steering: rotating a z-directed main lobe by (alpha, beta, 0) moves it
    /// to (theta = beta, phi = alpha).
    #[test]
    fn far_field_lobe_steering() {
        let basis = BasisSpec::new(1);
        let mut exp = SphericalExpansion::zeros(WaveKind::Outgoing, 1.0, basis.clone());
        // crossed electric + magnetic dipole (Huygens source) radiating to +z:
        // E-dipole along x (tau=2, l=1, m=1, even), M-dipole along y
        let ne = pack_index(WaveIndex { tau: 2, sigma: Parity::Even, l: 1, m: 1 }, 1).unwrap();
        let nm = pack_index(WaveIndex { tau: 1, sigma: Parity::Odd, l: 1, m: 1 }, 1).unwrap();
        exp.coefficients[ne] = Complex64::new(1.0, 0.0);
        // sign/phase chosen below by maximizing the unrotated pattern at +z
        let mut best = (Complex64::new(0.0, 0.0), -1.0);
        for &ph in &[1.0, -1.0] {
            for &im in &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut e2 = exp.clone();
                e2.coefficients[nm] = im * ph;
                let pat = crate::basis::far_field(&e2, &[(1e-6, 0.0), (std::f64::consts::PI - 1e-6, 0.0)]).unwrap();
                let fwd = pat.e_theta[0].norm_sqr() + pat.e_phi[0].norm_sqr();
                let back = pat.e_theta[1].norm_sqr() + pat.e_phi[1].norm_sqr();
                if fwd - back > best.1 {
                    best = (im * ph, fwd - back);
                }
            }
        }
        exp.coefficients[nm] = best.0;
        // E(R p) = R E'(p) with f' = D f means D(angles) expresses the field
        // in a rotated frame; steering the lobe actively onto direction
        // (theta = beta, phi = alpha) therefore uses the inverse angles.
        let (alpha, beta) = (0.9, 0.7);
        let inv = EulerAngles::new(alpha, beta, 0.0).inverse();
        let steered = rotate_expansion(&exp, &rotation_matrix(&basis, inv)).unwrap();
        // scan for the maximum
        let mut best_dir = (0.0, 0.0);
        let mut best_p = -1.0;
        for it in 0..60 {
            let th = std::f64::consts::PI * (it as f64 + 0.5) / 60.0;
            for ip in 0..120 {
                let ph = 2.0 * std::f64::consts::PI * ip as f64 / 120.0;
                let pat = crate::basis::far_field(&steered, &[(th, ph)]).unwrap();
                let p = pat.e_theta[0].norm_sqr() + pat.e_phi[0].norm_sqr();
                if p > best_p {
                    best_p = p;
                    best_dir = (th, ph);
                }
            }
        }
        assert!(
            (best_dir.0 - beta).abs() < 0.06 && (best_dir.1 - alpha).abs() < 0.06,
            "lobe at {:?}, expected ({beta}, {alpha})",
            best_dir
        );
    }

    #[test]
    fn tmatrix_rotation_preserves_symmetry_and_identity_angles() {
        let basis = BasisSpec::new(3);
        let n = basis.size();
        let mut t = TMatrix::zeros(1.0, basis.clone());
        for i in 0..n {
            for j in 0..=i {
                let v = Complex64::new((i as f64 * 0.3 + j as f64).sin(), (j as f64 * 0.7).cos());
                t.matrix[[i, j]] = v;
                t.matrix[[j, i]] = v;
            }
        }
        let id = rotation_matrix(&basis, EulerAngles::new(0.0, 0.0, 0.0));
        let same = rotate_tmatrix(&t, &id).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((same.matrix[[i, j]] - t.matrix[[i, j]]).norm() < 1e-13);
            }
        }
        let op = rotation_matrix(&basis, EulerAngles::new(0.4, 1.0, 1.9));
        let rt = rotate_tmatrix(&t, &op).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((rt.matrix[[i, j]] - rt.matrix[[j, i]]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn cache_reuses_operators() {
        let cache = RotationCache::new();
        let basis = BasisSpec::new(3);
        let a = EulerAngles::new(0.1, 0.2, 0.3);
        let op1 = cache.get(&basis, a);
        let op2 = cache.get(&basis, a);
        assert!(Arc::ptr_eq(&op1, &op2));
        assert_eq!(cache.stats(), (1, 1));
    }
}
