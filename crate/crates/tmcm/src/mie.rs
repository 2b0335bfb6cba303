//! Analytic T-matrices for spheres: PEC, homogeneous dielectric, and layered
//! stacks with an optional PEC core.
//!
//! The T-matrix of any rotationally symmetric sphere is diagonal in the wave
//! index with entries depending only on (tau, l). Layered spheres use an
//! inside-out transfer of the reflection ratio rho in each layer's radial
//! profile psi(x) + rho xi(x), matching tangential fields at every interface.

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::sph::{riccati_psi, riccati_xi};
use crate::tmatrix::TMatrix;
use num_complex::Complex64;

/// Layer material. Dielectrics are lossless (real eps_r >= 1, mu_r = 1);
/// PEC is allowed only as the innermost layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Pec,
    Dielectric { eps_r: f64 },
}

/// Radially layered sphere, layers listed outside-in with strictly
/// decreasing outer radii (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSpec {
    pub layers: Vec<(f64, Material)>,
}

impl SphereSpec {
    pub fn pec(radius: f64) -> Self {
        Self { layers: vec![(radius, Material::Pec)] }
    }

    pub fn dielectric(radius: f64, eps_r: f64) -> Self {
        Self { layers: vec![(radius, Material::Dielectric { eps_r })] }
    }

    pub fn outer_radius(&self) -> f64 {
        self.layers.first().map(|l| l.0).unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidArgument("sphere needs at least one layer".into()));
        }
        let mut prev = f64::INFINITY;
        for (i, &(r, mat)) in self.layers.iter().enumerate() {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!("layer {i} radius {r} <= 0")));
            }
            if r >= prev {
                return Err(Error::InvalidArgument(format!(
                    "layer radii must strictly decrease outside-in (layer {i}: {r} >= {prev})"
                )));
            }
            prev = r;
            match mat {
                Material::Pec => {
                    if i + 1 != self.layers.len() {
                        return Err(Error::InvalidArgument(
                            "PEC allowed only as the innermost layer".into(),
                        ));
                    }
                }
                Material::Dielectric { eps_r } => {
                    if !(eps_r >= 1.0) || !eps_r.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "layer {i}: eps_r {eps_r} must be real and >= 1"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-(tau, l) Mie coefficients t_{tau l}, l = 1..=l_max.
/// Row l-1 holds [t_{1l} (TE), t_{2l} (TM)].
pub fn mie_coefficients(k: f64, spec: &SphereSpec, l_max: usize) -> Result<Vec<[Complex64; 2]>> {
    spec.validate()?;
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("wavenumber k = {k} must be positive")));
    }
    // layer wavenumbers, exterior appended as eps_r = 1; iterate inside-out
    let mut out = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let mut t = [Complex64::new(0.0, 0.0); 2];
        for pol in 0..2 {
            t[pol] = transfer_channel(k, spec, l, pol);
        }
        out.push(t);
    }
    Ok(out)
}

/// Outward transfer of the reflection ratio for one (l, polarization)
/// channel; pol 0 = TE (tau = 1), pol 1 = TM (tau = 2).
fn transfer_channel(k: f64, spec: &SphereSpec, l: usize, pol: usize) -> Complex64 {
    let n_layers = spec.layers.len();
    // region index counts outside-in over dielectric regions; n_layers is
    // the exterior (free space)
    let wavenumber = |idx: usize| -> f64 {
        if idx == n_layers {
            k
        } else {
            match spec.layers[idx].1 {
                Material::Dielectric { eps_r } => k * eps_r.sqrt(),
                Material::Pec => unreachable!("PEC region has no wavenumber"),
            }
        }
    };
    let innermost_pec = matches!(spec.layers[n_layers - 1].1, Material::Pec);
    // seed rho in the innermost dielectric region (or the exterior, for a
    // bare PEC sphere)
    let (mut rho, mut region) = if innermost_pec {
        let r_core = spec.layers[n_layers - 1].0;
        let region = if n_layers == 1 { n_layers } else { n_layers - 2 };
        let x = wavenumber(region) * r_core;
        let (psi, dpsi) = riccati_psi(l, x);
        let (xi, dxi) = riccati_xi(l, x);
        let rho = if pol == 0 {
            -Complex64::new(psi[l], 0.0) / xi[l]
        } else {
            -Complex64::new(dpsi[l], 0.0) / dxi[l]
        };
        (rho, region)
    } else {
        // regular field in the innermost dielectric region
        (Complex64::new(0.0, 0.0), n_layers - 1)
    };
    // cross interfaces outward: the outer boundary of `region` is
    // layers[region].0
    while region < n_layers {
        let r = spec.layers[region].0;
        let outer_region = if region == 0 { n_layers } else { region - 1 };
        let k_a = wavenumber(region);
        let k_b = wavenumber(outer_region);
        let x_a = k_a * r;
        let x_b = k_b * r;
        let (psi_a, dpsi_a) = riccati_psi(l, x_a);
        let (xi_a, dxi_a) = riccati_xi(l, x_a);
        let (psi_b, dpsi_b) = riccati_psi(l, x_b);
        let (xi_b, dxi_b) = riccati_xi(l, x_b);
        let za = psi_a[l] + rho * xi_a[l];
        let dza = dpsi_a[l] + rho * dxi_a[l];
        // TE: continuity of (value / k) and derivative; TM: value and
        // (derivative / k). Both reduce to the same 2x2 solve with the
        // k-ratio applied to the matching equation of that quantity.
        let ratio = k_b / k_a;
        let (p, q) = if pol == 0 {
            (za * ratio, dza)
        } else {
            (za, dza * ratio)
        };
        // solve C psi_b + D xi_b = p, C psi_b' + D xi_b' = q; rho_b = D / C
        let det = psi_b[l] * dxi_b[l] - dpsi_b[l] * xi_b[l];
        let c = (p * dxi_b[l] - q * xi_b[l]) / det;
        let d = (q * psi_b[l] - p * dpsi_b[l]) / det;
        rho = d / c;
        region = outer_region;
    }
    rho
}

fn diagonal_tmatrix(coeffs: &[[Complex64; 2]], k: f64, basis: &BasisSpec) -> TMatrix {
    let mut t = TMatrix::zeros(k, basis.clone());
    for idx in crate::basis::iter_indices(basis.l_max) {
        let n = crate::basis::pack_index(idx, basis.l_max).unwrap();
        t.matrix[[n, n]] = coeffs[idx.l - 1][idx.tau as usize - 1];
    }
    t
}

/// T-matrix of a PEC sphere of the given radius.
pub fn pec_sphere_tmatrix(k: f64, radius: f64, basis: &BasisSpec) -> Result<TMatrix> {
    let spec = SphereSpec::pec(radius);
    let coeffs = mie_coefficients(k, &spec, basis.l_max)?;
    Ok(diagonal_tmatrix(&coeffs, k, basis))
}

/// T-matrix of a layered sphere.
pub fn layered_sphere_tmatrix(k: f64, spec: &SphereSpec, basis: &BasisSpec) -> Result<TMatrix> {
    let coeffs = mie_coefficients(k, spec, basis.l_max)?;
    Ok(diagonal_tmatrix(&coeffs, k, basis))
}
