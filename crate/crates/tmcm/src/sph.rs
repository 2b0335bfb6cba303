//! Scalar special functions: spherical Bessel/Hankel functions, Riccati-Bessel
//! functions, normalized associated Legendre functions and their angular
//! derivatives, Gauss-Legendre quadrature nodes.
//!
//! Normalization: `pbar(l, m)` is the theta-part of an orthonormal real
//! harmonic, i.e. integral over [0, pi] of pbar^2 sin(theta) d(theta) = 1.
//! No Condon-Shortley phase is included here.

use num_complex::Complex64;
use std::sync::OnceLock;

/// ln(n!) with a lazily built table.
pub fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0; 1024];
        for i in 2..t.len() {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    table[n]
}

/// Spherical Bessel functions j_0..j_lmax at x >= 0.
///
/// Downward recurrence normalized against j_0; series expansion near zero.
pub fn sph_bessel_j(lmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0);
    let mut j = vec![0.0; lmax + 1];
    if x == 0.0 {
        j[0] = 1.0;
        return j;
    }
    if x < 1e-3 {
        // series j_l = x^l/(2l+1)!! (1 - y/(2l+3) + y^2/(2(2l+3)(2l+5))), y = x^2/2
        let y = 0.5 * x * x;
        let mut pref = 1.0; // x^l / (2l+1)!!
        for l in 0..=lmax {
            if l > 0 {
                pref *= x / (2 * l + 1) as f64;
            }
            let a = 2.0 * l as f64;
            j[l] = pref * (1.0 - y / (a + 3.0) + y * y / (2.0 * (a + 3.0) * (a + 5.0)));
        }
        return j;
    }
    let j0 = x.sin() / x;
    if lmax == 0 {
        j[0] = j0;
        return j;
    }
    // start high enough that the downward recurrence has converged at lmax
    let ltop = lmax + 16 + (1.5 * x) as usize;
    let mut fp1 = 0.0_f64;
    let mut f = 1e-300_f64;
    let mut out = vec![0.0; lmax + 1];
    for l in (0..=ltop).rev() {
        let fm1 = (2 * l + 3) as f64 / x * f - fp1;
        if l <= lmax {
            out[l] = fm1;
        }
        fp1 = f;
        f = fm1;
        if f.abs() > 1e250 {
            // renormalize to avoid overflow
            let s = 1e-250;
            fp1 *= s;
            f *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    let scale = j0 / out[0];
    for l in 0..=lmax {
        j[l] = out[l] * scale;
    }
    j
}

/// Spherical Bessel functions of the second kind y_0..y_lmax at x > 0.
pub fn sph_bessel_y(lmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0);
    let mut y = vec![0.0; lmax + 1];
    y[0] = -x.cos() / x;
    if lmax == 0 {
        return y;
    }
    y[1] = -x.cos() / (x * x) - x.sin() / x;
    for l in 1..lmax {
        y[l + 1] = (2 * l + 1) as f64 / x * y[l] - y[l - 1];
    }
    y
}

/// Spherical Hankel functions of the second kind, h_l = j_l - i y_l
/// (outgoing under the e^{+j omega t} convention).
pub fn sph_hankel2(lmax: usize, x: f64) -> Vec<Complex64> {
    let j = sph_bessel_j(lmax, x);
    let y = sph_bessel_y(lmax, x);
    j.iter()
        .zip(y.iter())
        .map(|(&jj, &yy)| Complex64::new(jj, -yy))
        .collect()
}

/// Riccati-Bessel psi_l = x j_l and derivative psi_l' (w.r.t. x), l = 0..lmax.
pub fn riccati_psi(lmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let j = sph_bessel_j(lmax, x);
    let mut psi = vec![0.0; lmax + 1];
    let mut dpsi = vec![0.0; lmax + 1];
    for l in 0..=lmax {
        psi[l] = x * j[l];
        let jlm1 = if l == 0 { x.cos() / x.max(1e-300) } else { j[l - 1] };
        dpsi[l] = if x == 0.0 && l == 0 {
            1.0
        } else {
            x * jlm1 - l as f64 * j[l]
        };
    }
    if x == 0.0 {
        psi.iter_mut().for_each(|v| *v = 0.0);
        dpsi.iter_mut().enumerate().for_each(|(l, v)| *v = if l == 0 { 1.0 } else { 0.0 });
    }
    (psi, dpsi)
}

/// Riccati chi_l = x y_l and derivative, l = 0..lmax, x > 0.
pub fn riccati_chi(lmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let y = sph_bessel_y(lmax, x);
    let mut chi = vec![0.0; lmax + 1];
    let mut dchi = vec![0.0; lmax + 1];
    for l in 0..=lmax {
        chi[l] = x * y[l];
        let ylm1 = if l == 0 { x.sin() / x } else { y[l - 1] };
        dchi[l] = x * ylm1 - l as f64 * y[l];
    }
    (chi, dchi)
}

/// Riccati xi_l = x h2_l = psi_l - i chi_l and derivative.
pub fn riccati_xi(lmax: usize, x: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let (psi, dpsi) = riccati_psi(lmax, x);
    let (chi, dchi) = riccati_chi(lmax, x);
    let xi = psi.iter().zip(&chi).map(|(&p, &c)| Complex64::new(p, -c)).collect();
    let dxi = dpsi.iter().zip(&dchi).map(|(&p, &c)| Complex64::new(p, -c)).collect();
    (xi, dxi)
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Normalized associated Legendre tables at a single angle: pbar(l, m),
/// u(l, m) = pbar/sin(theta) for m >= 1, and the theta-derivative tau(l, m).
///
/// All recurrences run on u for m >= 1, so values stay finite at the poles.
pub struct AngularTables {
    lmax: usize,
    pbar: Vec<f64>,
    u: Vec<f64>,
    tau: Vec<f64>,
}

impl AngularTables {
    pub fn new(lmax: usize, cos_theta: f64, sin_theta: f64) -> Self {
        let n = tri(lmax, lmax) + lmax + 1;
        let mut pbar = vec![0.0; n];
        let mut u = vec![0.0; n];
        let mut tau = vec![0.0; n];
        let x = cos_theta;
        let s = sin_theta;

        // sectoral seeds
        let mut sect = (0.5f64).sqrt(); // pbar_0^0
        let mut usect = 0.0; // pbar_m^m / sin, valid from m = 1
        pbar[tri(0, 0)] = sect;
        for m in 1..=lmax {
            let f = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            usect = if m == 1 { f * sect } else { f * s * usect };
            sect *= f * s;
            pbar[tri(m, m)] = sect;
            u[tri(m, m)] = usect;
        }

        // upward in l for each m
        for m in 0..=lmax {
            if m + 1 <= lmax {
                let c = ((2 * m + 3) as f64).sqrt();
                pbar[tri(m + 1, m)] = c * x * pbar[tri(m, m)];
                if m >= 1 {
                    u[tri(m + 1, m)] = c * x * u[tri(m, m)];
                }
            }
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let mf = m as f64;
                let alpha = (((2.0 * lf - 1.0) * (2.0 * lf + 1.0)) / ((lf - mf) * (lf + mf))).sqrt();
                let beta = (((2.0 * lf + 1.0) * (lf + mf - 1.0) * (lf - mf - 1.0))
                    / ((lf - mf) * (lf + mf) * (2.0 * lf - 3.0)))
                    .sqrt();
                pbar[tri(l, m)] = alpha * x * pbar[tri(l - 1, m)] - beta * pbar[tri(l - 2, m)];
                if m >= 1 {
                    u[tri(l, m)] = alpha * x * u[tri(l - 1, m)] - beta * u[tri(l - 2, m)];
                }
            }
        }

        // tau: theta-derivative of pbar
        for l in 1..=lmax {
            let lf = l as f64;
            // m = 0: tau = -sqrt(l(l+1)) * pbar_l^1 (see tests for the sign pin)
            tau[tri(l, 0)] = -(lf * (lf + 1.0)).sqrt() * s * u[tri(l, 1)];
            for m in 1..=l {
                let mf = m as f64;
                let e = ((2.0 * lf + 1.0) * (lf - mf) * (lf + mf) / (2.0 * lf - 1.0)).sqrt();
                let um1 = if l >= 1 && m <= l - 1 { u[tri(l - 1, m)] } else { 0.0 };
                tau[tri(l, m)] = lf * x * u[tri(l, m)] - e * um1;
            }
        }

        Self { lmax, pbar, u, tau }
    }

    #[inline]
    pub fn pbar(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m <= l && l <= self.lmax);
        self.pbar[tri(l, m)]
    }

    /// pbar(l, m)/sin(theta); only defined for m >= 1.
    #[inline]
    pub fn u(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m >= 1 && m <= l && l <= self.lmax);
        self.u[tri(l, m)]
    }

    /// d pbar(l, m) / d theta.
    #[inline]
    pub fn tau(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m <= l && l <= self.lmax);
        self.tau[tri(l, m)]
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton from the Chebyshev estimate
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for l in 1..n {
        let lf = l as f64;
        let p2 = ((2.0 * lf + 1.0) * x * p1 - lf * p0) / (lf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
