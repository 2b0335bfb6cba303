//! Index algebra and field evaluation for real-harmonic vector spherical
//! wavefunctions.
//!
//! The composite wave index is (tau, sigma, l, m): tau selects the wave class
//! (1 = transverse/"magnetic", 2 = its curl partner), sigma the azimuthal
//! parity (cos vs sin), l the degree and m >= 0 the order. The canonical
//! linear ordering iterates l ascending, then m ascending, then sigma (even
//! before odd, odd skipped at m = 0), then tau, which keeps each (l, m) block
//! contiguous: rotation operators are block-diagonal in l and axial
//! translation operators block-diagonal in m.
//!
//! Conventions (recorded in [`CONVENTION`] and enforced on operator
//! composition and file exchange): real spherical harmonics, e^{+j omega t}
//! time dependence, spherical Hankel functions of the second kind for
//! outgoing waves, power normalization (radiated power = ||f||^2 / 2).

use crate::error::{Error, Result};
use crate::sph;
use ndarray::Array1;
use num_complex::Complex64;

/// Azimuthal parity of a real harmonic: even = cos(m phi), odd = sin(m phi).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

/// Composite index over real-harmonic vector spherical wavefunctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WaveIndex {
    /// Wave class, 1 or 2.
    pub tau: u8,
    pub sigma: Parity,
    /// Degree, >= 1.
    pub l: usize,
    /// Order, 0..=l. Odd parity requires m >= 1.
    pub m: usize,
}

/// Basis convention tag. Operators and files carry it; mismatches are hard
/// errors, never silent reinterpretation.
pub const CONVENTION: &str = "real-harmonic/e+jwt/hankel2/power-norm/v1";

/// Truncated basis descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    pub l_max: usize,
    pub convention: String,
}

impl BasisSpec {
    pub fn new(l_max: usize) -> Self {
        assert!(l_max >= 1);
        Self { l_max, convention: CONVENTION.to_string() }
    }

    /// Basis size N = 2 L_max (L_max + 2).
    pub fn size(&self) -> usize {
        2 * self.l_max * (self.l_max + 2)
    }

    pub fn check_compatible(&self, other: &BasisSpec) -> Result<()> {
        if self.convention != other.convention {
            return Err(Error::BasisMismatch(format!(
                "convention {:?} vs {:?}",
                self.convention, other.convention
            )));
        }
        Ok(())
    }

    pub fn check_same(&self, other: &BasisSpec) -> Result<()> {
        if self != other {
            return Err(Error::BasisMismatch(format!(
                "L_max {} vs {} or convention mismatch",
                self.l_max, other.l_max
            )));
        }
        Ok(())
    }
}

/// Truncation rule: L_max = ceil(k r_max + 2 (k r_max)^(1/3) + 3).
pub fn truncation_order(k: f64, r_max: f64) -> Result<usize> {
    if k <= 0.0 || r_max < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "truncation_order requires k > 0, r_max >= 0 (got k={k}, r_max={r_max})"
        )));
    }
    let kr = k * r_max;
    Ok((kr + 2.0 * kr.cbrt() + 3.0).ceil() as usize)
}

/// Number of (sigma, tau) combinations below order m within one degree block.
#[inline]
fn offset_in_degree(m: usize) -> usize {
    if m == 0 {
        0
    } else {
        2 + 4 * (m - 1)
    }
}

/// Linear index of a wave index in the canonical ordering.
pub fn pack_index(idx: WaveIndex, l_max: usize) -> Result<usize> {
    let WaveIndex { tau, sigma, l, m } = idx;
    if !(1..=2).contains(&tau) || l < 1 || m > l {
        return Err(Error::IndexOutOfRange(format!("{idx:?}")));
    }
    if sigma == Parity::Odd && m == 0 {
        return Err(Error::IndexOutOfRange(format!("odd parity with m = 0: {idx:?}")));
    }
    if l > l_max {
        return Err(Error::IndexOutOfRange(format!("l = {l} exceeds L_max = {l_max}")));
    }
    let below = 2 * (l - 1) * (l + 1); // N(l-1)
    let sig = if sigma == Parity::Odd { 1 } else { 0 };
    let within = offset_in_degree(m) + if m == 0 { 0 } else { 2 * sig };
    Ok(below + within + (tau as usize - 1))
}

/// Inverse of [`pack_index`].
pub fn unpack_index(n: usize, l_max: usize) -> Result<WaveIndex> {
    let total = 2 * l_max * (l_max + 2);
    if n >= total {
        return Err(Error::IndexOutOfRange(format!("n = {n} >= N = {total}")));
    }
    let mut l = 1;
    while 2 * l * (l + 2) <= n {
        l += 1;
    }
    let mut rem = n - 2 * (l - 1) * (l + 1);
    let m;
    if rem < 2 {
        m = 0;
    } else {
        m = 1 + (rem - 2) / 4;
    }
    rem -= offset_in_degree(m);
    let sigma = if m == 0 {
        Parity::Even
    } else if rem < 2 {
        Parity::Even
    } else {
        rem -= 2;
        Parity::Odd
    };
    Ok(WaveIndex { tau: rem as u8 + 1, sigma, l, m })
}

/// Iterate all wave indices of a basis in canonical order.
pub fn iter_indices(l_max: usize) -> impl Iterator<Item = WaveIndex> {
    (1..=l_max).flat_map(|l| {
        (0..=l).flat_map(move |m| {
            let sigmas: &[Parity] = if m == 0 { &[Parity::Even] } else { &[Parity::Even, Parity::Odd] };
            sigmas.iter().flat_map(move |&sigma| {
                [1u8, 2u8].into_iter().map(move |tau| WaveIndex { tau, sigma, l, m })
            })
        })
    })
}

/// Expansion kind: regular (finite at the origin) or outgoing (radiating).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    Regular,
    Outgoing,
}

/// Coefficient vector of a spherical wave expansion at a fixed wavenumber.
#[derive(Debug, Clone)]
pub struct SphericalExpansion {
    pub kind: WaveKind,
    pub coefficients: Array1<Complex64>,
    /// Wavenumber in rad/m.
    pub k: f64,
    pub basis: BasisSpec,
}

impl SphericalExpansion {
    pub fn new(kind: WaveKind, coefficients: Array1<Complex64>, k: f64, basis: BasisSpec) -> Result<Self> {
        if coefficients.len() != basis.size() {
            return Err(Error::InvalidArgument(format!(
                "coefficient length {} != basis size {}",
                coefficients.len(),
                basis.size()
            )));
        }
        Ok(Self { kind, coefficients, k, basis })
    }

    pub fn zeros(kind: WaveKind, k: f64, basis: BasisSpec) -> Self {
        let n = basis.size();
        Self { kind, coefficients: Array1::zeros(n), k, basis }
    }
}

/// Angular factors of the two transverse vector harmonics for one index, in
/// the local (theta_hat, phi_hat) frame, plus the scalar harmonic value.
struct AngularParts {
    /// A_1 = gamma (theta_hat dY/dphi/sin - phi_hat dY/dtheta)
    a1_th: f64,
    a1_ph: f64,
    /// A_2 = gamma (theta_hat dY/dtheta + phi_hat dY/dphi/sin)
    a2_th: f64,
    a2_ph: f64,
    /// Y itself (for the radial A_3 part)
    y: f64,
}

fn angular_parts(idx: WaveIndex, tables: &sph::AngularTables, phi: f64) -> AngularParts {
    let WaveIndex { sigma, l, m, .. } = idx;
    let lf = l as f64;
    let gamma = 1.0 / (lf * (lf + 1.0)).sqrt();
    let eps_m = if m == 0 { 1.0 } else { 2.0 };
    let q = (eps_m / (2.0 * std::f64::consts::PI)).sqrt();
    let (c, s) = ((m as f64 * phi).cos(), (m as f64 * phi).sin());
    let tau_lm = tables.tau(l, m);
    let mu = if m == 0 { 0.0 } else { m as f64 * tables.u(l, m) };
    let (dth, dph_over_sin, y) = match sigma {
        Parity::Even => (q * tau_lm * c, -q * mu * s, q * tables.pbar(l, m) * c),
        Parity::Odd => (q * tau_lm * s, q * mu * c, q * tables.pbar(l, m) * s),
    };
    AngularParts {
        a1_th: gamma * dph_over_sin,
        a1_ph: -gamma * dth,
        a2_th: gamma * dth,
        a2_ph: gamma * dph_over_sin,
        y,
    }
}

/// Electric field of an expansion at a Cartesian point (meters).
///
/// Outgoing expansions cannot be evaluated at the origin.
pub fn evaluate_field(exp: &SphericalExpansion, point: [f64; 3]) -> Result<[Complex64; 3]> {
    let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    if exp.kind == WaveKind::Outgoing && r == 0.0 {
        return Err(Error::InvalidArgument(
            "outgoing expansion is singular at the origin".into(),
        ));
    }
    let l_max = exp.basis.l_max;
    let x = (exp.k * r).max(1e-12); // regular fields have a finite r -> 0 limit
    let (cos_t, sin_t, phi) = if r == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        let ct = (point[2] / r).clamp(-1.0, 1.0);
        (
            ct,
            (point[0] * point[0] + point[1] * point[1]).sqrt() / r,
            point[1].atan2(point[0]),
        )
    };
    let tables = sph::AngularTables::new(l_max, cos_t, sin_t);

    // radial functions
    let (z, zeta_over_x): (Vec<Complex64>, Vec<Complex64>) = match exp.kind {
        WaveKind::Regular => {
            let j = sph::sph_bessel_j(l_max, x);
            let (_, dpsi) = sph::riccati_psi(l_max, x);
            (
                j.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                dpsi.iter().map(|&v| Complex64::new(v / x, 0.0)).collect(),
            )
        }
        WaveKind::Outgoing => {
            let h = sph::sph_hankel2(l_max, x);
            let (_, dxi) = sph::riccati_xi(l_max, x);
            (h, dxi.iter().map(|&v| v / x).collect())
        }
    };

    // spherical unit vectors at the point
    let (cp, sp) = (phi.cos(), phi.sin());
    let r_hat = [sin_t * cp, sin_t * sp, cos_t];
    let th_hat = [cos_t * cp, cos_t * sp, -sin_t];
    let ph_hat = [-sp, cp, 0.0];

    let mut field = [Complex64::new(0.0, 0.0); 3];
    for (n, idx) in iter_indices(l_max).enumerate() {
        let c = exp.coefficients[n];
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let ap = angular_parts(idx, &tables, phi);
        let l = idx.l;
        let lf = l as f64;
        let (f_th, f_ph, f_r) = match idx.tau {
            1 => (z[l] * ap.a1_th, z[l] * ap.a1_ph, Complex64::new(0.0, 0.0)),
            _ => (
                zeta_over_x[l] * ap.a2_th,
                zeta_over_x[l] * ap.a2_ph,
                z[l] / x * (lf * (lf + 1.0)).sqrt() * ap.y,
            ),
        };
        for c3 in 0..3 {
            field[c3] += c * (f_th * th_hat[c3] + f_ph * ph_hat[c3] + f_r * r_hat[c3]);
        }
    }
    Ok(field)
}

/// Far-field pattern of an outgoing expansion on a (theta, phi) grid.
#[derive(Debug, Clone)]
pub struct FarFieldPattern {
    pub grid: Vec<(f64, f64)>,
    pub e_theta: Vec<Complex64>,
    pub e_phi: Vec<Complex64>,
    /// Power density (|E_theta|^2 + |E_phi|^2)/2, normalized to max = 1.
    pub power_normalized: Vec<f64>,
    /// Peak power density before normalization.
    pub peak_power: f64,
}

/// Large-argument asymptotics of the outgoing waves applied termwise:
/// E ~ (e^{-jkr}/(kr)) F(theta, phi); the returned components are F.
pub fn far_field(exp: &SphericalExpansion, grid: &[(f64, f64)]) -> Result<FarFieldPattern> {
    if exp.kind != WaveKind::Outgoing {
        return Err(Error::InvalidArgument("far_field requires an outgoing expansion".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("far_field requires a nonempty grid".into()));
    }
    let l_max = exp.basis.l_max;
    let jpow = |p: usize| -> Complex64 {
        match p % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    };
    let mut e_theta = Vec::with_capacity(grid.len());
    let mut e_phi = Vec::with_capacity(grid.len());
    for &(theta, phi) in grid {
        let tables = sph::AngularTables::new(l_max, theta.cos(), theta.sin());
        let mut f_th = Complex64::new(0.0, 0.0);
        let mut f_ph = Complex64::new(0.0, 0.0);
        for (n, idx) in iter_indices(l_max).enumerate() {
            let c = exp.coefficients[n];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let ap = angular_parts(idx, &tables, phi);
            // h2_l -> j^{l+1} e^{-jx}/x, (1/x)(x h2_l)' -> j^l e^{-jx}/x
            match idx.tau {
                1 => {
                    let g = jpow(idx.l + 1);
                    f_th += c * g * ap.a1_th;
                    f_ph += c * g * ap.a1_ph;
                }
                _ => {
                    let g = jpow(idx.l);
                    f_th += c * g * ap.a2_th;
                    f_ph += c * g * ap.a2_ph;
                }
            }
        }
        e_theta.push(f_th);
        e_phi.push(f_ph);
    }
    let raw: Vec<f64> = e_theta
        .iter()
        .zip(&e_phi)
        .map(|(a, b)| 0.5 * (a.norm_sqr() + b.norm_sqr()))
        .collect();
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    let power_normalized = if peak > 0.0 {
        raw.iter().map(|&p| p / peak).collect()
    } else {
        raw.clone()
    };
    Ok(FarFieldPattern {
        grid: grid.to_vec(),
        e_theta,
        e_phi,
        power_normalized,
        peak_power: peak,
    })
}

/// Total radiated power of an outgoing expansion: ||f||^2 / 2 under the
/// power normalization.
pub fn radiated_power(exp: &SphericalExpansion) -> f64 {
    0.5 * exp.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>()
}

/// Quadrature grid (Gauss-Legendre in theta, uniform in phi) with weights,
/// exact for the angular band limit of a degree-L basis.
pub fn quadrature_grid(l_max: usize) -> (Vec<(f64, f64)>, Vec<f64>) {
    let n_theta = 2 * l_max + 4;
    let n_phi = 4 * l_max + 5;
    let (nodes, wts) = sph::gauss_legendre(n_theta);
    let mut grid = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    for (&x, &w) in nodes.iter().zip(&wts) {
        let theta = x.acos();
        for ip in 0..n_phi {
            grid.push((theta, ip as f64 * dphi));
            weights.push(w * dphi);
        }
    }
    (grid, weights)
}

/// Regular expansion coefficients of the plane wave
/// E(r) = polarization * exp(-j k direction . r), truncated at the basis
/// L_max. Direction must be unit length and the polarization orthogonal
/// to it.
pub fn plane_wave_coefficients(
    basis: &BasisSpec,
    k: f64,
    direction: [f64; 3],
    polarization: [f64; 3],
) -> Result<SphericalExpansion> {
    use crate::algebra::{self, ScalarCoeffs};
    let dn = (direction[0] * direction[0] + direction[1] * direction[1]
        + direction[2] * direction[2])
        .sqrt();
    if (dn - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("direction norm {dn} != 1")));
    }
    let dot = direction[0] * polarization[0]
        + direction[1] * polarization[1]
        + direction[2] * polarization[2];
    if dot.abs() > 1e-10 {
        return Err(Error::InvalidArgument(
            "polarization not orthogonal to direction".into(),
        ));
    }
    let l_max = basis.l_max;
    let theta_k = direction[2].clamp(-1.0, 1.0).acos();
    let phi_k = if direction[0] == 0.0 && direction[1] == 0.0 {
        0.0
    } else {
        direction[1].atan2(direction[0])
    };
    // scalar expansion: exp(-j k d.r) = 4 pi sum (-j)^l j_l(kr) Y_lm(r) Y*_lm(d)
    let mut scalar = ScalarCoeffs::new();
    let four_pi = 4.0 * std::f64::consts::PI;
    for l in 0..=l_max + 2 {
        let jl = Complex64::new(0.0, -1.0).powu(l as u32);
        for m in -(l as i64)..=l as i64 {
            let w = four_pi * jl * algebra::complex_harmonic(l, m, theta_k, phi_k).conj();
            if w.norm_sqr() > 0.0 {
                scalar.insert((l, m), w);
            }
        }
    }
    let comps: [ScalarCoeffs; 3] = [
        algebra::scale(&scalar, Complex64::new(polarization[0], 0.0)),
        algebra::scale(&scalar, Complex64::new(polarization[1], 0.0)),
        algebra::scale(&scalar, Complex64::new(polarization[2], 0.0)),
    ];
    let pvec = algebra::l_dot(&comps);
    let qvec = algebra::l_dot(&algebra::curl_components(&comps));
    let mut cv = Array1::<Complex64>::zeros(basis.size());
    for l in 1..=l_max {
        let scale = Complex64::new(0.0, -((l * (l + 1)) as f64).sqrt());
        for m in -(l as i64)..=l as i64 {
            if let Some(&p) = pvec.get(&(l, m)) {
                cv[algebra::cpack(1, l, m)] = p / scale;
            }
            if let Some(&q) = qvec.get(&(l, m)) {
                cv[algebra::cpack(2, l, m)] = q / scale;
            }
        }
    }
    let coefficients = algebra::coeffs_complex_to_real(&cv, basis);
    SphericalExpansion::new(WaveKind::Regular, coefficients, k, basis.clone())
}


#[cfg(test)]
mod plane_wave_tests {
    use super::*;
    use crate::rotation::{apply_mat3, rotation_matrix, EulerAngles};

    fn direct_plane_wave(k: f64, d: [f64; 3], p: [f64; 3], r: [f64; 3]) -> [Complex64; 3] {
        let phase = Complex64::from_polar(1.0, -k * (d[0] * r[0] + d[1] * r[1] + d[2] * r[2]));
        [p[0] * phase, p[1] * phase, p[2] * phase]
    }

    #[test]
    fn reconstructs_plane_wave_field() {
        let basis = BasisSpec::new(14);
        let k = 1.0;
        let s = 3f64.sqrt().recip();
        let cases = [
            ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
            ([s, s, s], [2f64.sqrt().recip(), -(2f64.sqrt().recip()), 0.0]),
        ];
        for (d, p) in cases {
            let exp = plane_wave_coefficients(&basis, k, d, p).unwrap();
            for &pt in &[[0.8, 0.3, -0.5], [0.1, -1.2, 0.4], [2.0, 1.0, 1.5]] {
                let want = direct_plane_wave(k, d, p, pt);
                let got = evaluate_field(&exp, pt).unwrap();
                for c in 0..3 {
                    assert!(
                        (want[c] - got[c]).norm() < 1e-8,
                        "d={d:?} pt={pt:?} c={c}: {} vs {}",
                        got[c],
                        want[c]
                    );
                }
            }
        }
    }

    #[test]
    fn orthogonal_polarizations_give_orthogonal_coefficients() {
        let basis = BasisSpec::new(6);
        let d = [0.0, 0.6, 0.8];
        let p1 = [1.0, 0.0, 0.0];
        let p2 = [0.0, 0.8, -0.6];
        let a = plane_wave_coefficients(&basis, 1.0, d, p1).unwrap();
        let b = plane_wave_coefficients(&basis, 1.0, d, p2).unwrap();
        let dot: Complex64 = a
            .coefficients
            .iter()
            .zip(b.coefficients.iter())
            .map(|(x, y)| x.conj() * y)
            .sum();
        let na: f64 = a.coefficients.iter().map(|c| c.norm_sqr()).sum();
        assert!(dot.norm() < 1e-10 * na, "inner product {dot}");
    }

    #[test]
    fn rotated_axis_expansion_matches_rotated_direction() {
        let basis = BasisSpec::new(6);
        let k = 1.0;
        let f0 = plane_wave_coefficients(&basis, k, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap();
        let angles = EulerAngles::new(0.7, 1.1, -0.4);
        let r3 = angles.rotation_matrix3();
        let d = apply_mat3(&r3, [0.0, 0.0, 1.0]);
        let p = apply_mat3(&r3, [1.0, 0.0, 0.0]);
        // active rotation of the expansion is D(angles)^t = D(angles.inverse())
        let op = rotation_matrix(&basis, angles.inverse());
        let rotated = crate::rotation::rotate_expansion(&f0, &op).unwrap();
        let direct = plane_wave_coefficients(&basis, k, d, p).unwrap();
        for i in 0..basis.size() {
            assert!(
                (rotated.coefficients[i] - direct.coefficients[i]).norm() < 1e-12,
                "i={i}: {} vs {}",
                rotated.coefficients[i],
                direct.coefficients[i]
            );
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        let basis = BasisSpec::new(2);
        assert!(plane_wave_coefficients(&basis, 1.0, [0.0, 0.0, 2.0], [1.0, 0.0, 0.0]).is_err());
        assert!(plane_wave_coefficients(&basis, 1.0, [0.0, 0.0, 1.0], [0.0, 0.1, 1.0]).is_err());
    }

    /// Translating the plane-wave expansion reproduces the analytic phase
    /// shift (the core translation-operator shift identity).
    #[test]
    fn translation_shift_identity() {
        use crate::translation::{TranslationCache, TranslationKind};
        let inner = BasisSpec::new(4);
        let padded = BasisSpec::new(4 + 10);
        let k = 1.0;
        let d = [0.0, 0.6, 0.8];
        let p = [1.0, 0.0, 0.0];
        let exp = plane_wave_coefficients(&padded, k, d, p).unwrap();
        let cache = TranslationCache::new();
        for kd in [[0.7, -0.4, 1.2], [0.0, 0.0, 2.0], [-1.5, 0.2, -0.3]] {
            let op = cache.general(&padded, kd, TranslationKind::RegularToRegular).unwrap();
            let moved = op.matrix.dot(&exp.coefficients);
            // new-origin coefficients pick up exp(-j k d_vec . kd / k)
            let phase = Complex64::from_polar(
                1.0,
                -(d[0] * kd[0] + d[1] * kd[1] + d[2] * kd[2]),
            );
            let want = plane_wave_coefficients(&inner, k, d, p).unwrap();
            let scale: f64 = want.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for i in 0..inner.size() {
                assert!(
                    (moved[i] - want.coefficients[i] * phase).norm() < 1e-8 * scale,
                    "kd={kd:?} i={i}: {} vs {}",
                    moved[i],
                    want.coefficients[i] * phase
                );
            }
        }
    }
}
