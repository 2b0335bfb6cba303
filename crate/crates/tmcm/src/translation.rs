//! Translation operators for spherical wave expansions.
//!
//! Axial (z) kernels come from scalar translation coefficients built by
//! recurrence and an exact vector coupling step: Cartesian components of each
//! vector wave are scalar-wave combinations, those are translated per
//! azimuthal order, and the vector coefficients are read back through the
//! angular-momentum projection L.E. General directions use the
//! rotate / z-translate / inverse-rotate decomposition.

use crate::algebra::{
    self, cpack, curl_components, l_dot, m_wave_components, operator_complex_to_real,
    ScalarCoeffs,
};
use crate::basis::{BasisSpec, WaveKind};
use crate::error::{Error, Result};
use crate::rotation::{angles_to_direction, rotation_matrix, EulerAngles, RotationCache};
use crate::sph::{sph_bessel_j, sph_hankel2};
use ndarray::Array2;
use num_complex::Complex64;
use parking_lot::RwLock;
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

/// Operator kind: outgoing source re-expanded as regular about the new origin
/// (valid inside the sphere through the old origin), or regular to regular
/// (valid everywhere).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TranslationKind {
    OutgoingToRegular,
    RegularToRegular,
}

/// Translation operator. Displacement convention: `kd` is
/// k * (new origin - old origin); applying the matrix to coefficients about
/// the old origin yields coefficients about the new origin describing the
/// same field.
#[derive(Debug, Clone)]
pub struct TranslationOperator {
    pub matrix: Array2<Complex64>,
    pub kind: TranslationKind,
    pub kd: [f64; 3],
    pub basis: BasisSpec,
}

/// Scalar axial translation coefficient tables C^m[l', l] for m = 0..=m_max,
/// rows l' = 0..=l_dst, cols l = 0..=l_src (entries with l' < m or l < m are
/// zero). Convention: psi_{lm}(r_old) = sum_{l'} C^m[l', l] psi_{l'm}(r_new)
/// with r_old = r_new + d z_hat, d > 0.
fn scalar_axial_tables(
    kind: WaveKind,
    kd: f64,
    l_dst: usize,
    l_src: usize,
    m_max: usize,
) -> Vec<Array2<Complex64>> {
    let l_work = l_dst + l_src + 2;
    // seed column l = 0 at m = 0
    let seeds: Vec<Complex64> = match kind {
        WaveKind::Regular => sph_bessel_j(l_work, kd)
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect(),
        WaveKind::Outgoing => sph_hankel2(l_work, kd),
    };
    let a = algebra::a_coef;
    let bp = algebra::b_plus;
    let bm = algebra::b_minus;
    // work[m] built in sequence; each is (l_work+1) x (l_src+1)
    let mut tables = Vec::with_capacity(m_max + 1);
    let mut work = Array2::<Complex64>::zeros((l_work + 1, l_src + 2));
    for lp in 0..=l_work {
        let sgn = if lp % 2 == 0 { 1.0 } else { -1.0 };
        work[[lp, 0]] = sgn * ((2 * lp + 1) as f64).sqrt() * seeds[lp];
    }
    for m in 0..=m_max {
        let mi = m as i64;
        if m > 0 {
            // order advance: sectoral column l = m from previous order's l = m-1
            let mut next = Array2::<Complex64>::zeros((l_work + 1, l_src + 2));
            let denom = bp(mi - 1, mi - 1);
            for lp in m..=l_work.saturating_sub(m) {
                let lpi = lp as i64;
                let mut v = Complex64::new(0.0, 0.0);
                if lp >= 1 {
                    v += bp(lpi - 1, mi - 1) * work[[lp - 1, m - 1]];
                }
                v += bm(lpi + 1, mi - 1) * work[[lp + 1, m - 1]];
                next[[lp, m]] = v / denom;
            }
            work = next;
        }
        // degree advance within this order: columns m+1 ..= l_src
        for l in m..l_src + 1 {
            if l + 1 > l_src + 1 {
                break;
            }
            let li = l as i64;
            let denom = a(li, mi);
            for lp in m..=l_work.saturating_sub(l + 1) {
                let lpi = lp as i64;
                let mut v = a(li - 1, mi)
                    * if l >= 1 { work[[lp, l - 1]] } else { Complex64::new(0.0, 0.0) };
                if lp >= 1 {
                    v += a(lpi - 1, mi) * work[[lp - 1, l]];
                }
                v -= a(lpi, mi) * work[[lp + 1, l]];
                work[[lp, l + 1]] = v / denom;
            }
        }
        let mut out = Array2::<Complex64>::zeros((l_dst + 1, l_src + 1));
        for lp in m..=l_dst {
            for l in m..=l_src {
                out[[lp, l]] = work[[lp, l]];
            }
        }
        tables.push(out);
    }
    tables
}

/// Translate a sparse scalar expansion along +z using the tables.
fn translate_scalar(
    c: &ScalarCoeffs,
    tables: &[Array2<Complex64>],
    l_dst: usize,
) -> ScalarCoeffs {
    let mut out = ScalarCoeffs::new();
    for (&(l, m), &v) in c {
        let ma = m.unsigned_abs() as usize;
        if ma >= tables.len() {
            continue;
        }
        let table = &tables[ma];
        for lp in ma..=l_dst {
            let w = v * table[[lp, l]];
            if w.norm_sqr() > 0.0 {
                *out.entry((lp, m)).or_insert(Complex64::new(0.0, 0.0)) += w;
            }
        }
    }
    out
}

/// Rectangular axial vector translation matrix in the real canonical basis.
/// Rows: destination basis, cols: source basis.
pub(crate) fn axial_matrix_rect(
    kind: WaveKind,
    kd: f64,
    basis_rows: &BasisSpec,
    basis_cols: &BasisSpec,
) -> Array2<Complex64> {
    let l_src = basis_cols.l_max;
    let l_dst = basis_rows.l_max;
    // scalar workspace: source degrees to l_src+1 (curl of tau=1 components),
    // destination degrees to l_dst+1 (curl in the extraction step), orders to
    // match.
    let tables = scalar_axial_tables(kind, kd, l_dst + 1, l_src + 1, (l_src + 1).min(l_dst + 1));
    let n_rows = basis_rows.size();
    let n_cols = basis_cols.size();
    let mut op_c = Array2::<Complex64>::zeros((n_rows, n_cols));
    for l in 1..=l_src {
        for m in -(l as i64)..=l as i64 {
            for tau in [1u8, 2u8] {
                let col = cpack(tau, l, m);
                let comps = if tau == 1 {
                    m_wave_components(l, m)
                } else {
                    curl_components(&m_wave_components(l, m))
                };
                let translated: [ScalarCoeffs; 3] = [
                    translate_scalar(&comps[0], &tables, l_dst + 1),
                    translate_scalar(&comps[1], &tables, l_dst + 1),
                    translate_scalar(&comps[2], &tables, l_dst + 1),
                ];
                let pvec = l_dot(&translated);
                let qvec = l_dot(&curl_components(&translated));
                for lp in (m.unsigned_abs() as usize).max(1)..=l_dst {
                    let scale = Complex64::new(0.0, -((lp * (lp + 1)) as f64).sqrt());
                    if let Some(&p) = pvec.get(&(lp, m)) {
                        op_c[[cpack(1, lp, m), col]] = p / scale;
                    }
                    if let Some(&q) = qvec.get(&(lp, m)) {
                        op_c[[cpack(2, lp, m), col]] = q / scale;
                    }
                }
            }
        }
    }
    operator_complex_to_real(&op_c, basis_rows, basis_cols)
}

fn kind_to_wave(kind: TranslationKind) -> WaveKind {
    match kind {
        TranslationKind::OutgoingToRegular => WaveKind::Outgoing,
        TranslationKind::RegularToRegular => WaveKind::Regular,
    }
}

/// Axial translation operator for displacement kd along +z.
pub fn z_translation(basis: &BasisSpec, kd: f64, kind: TranslationKind) -> Result<TranslationOperator> {
    if !kd.is_finite() || kd < 0.0 {
        return Err(Error::InvalidArgument(format!("z_translation kd = {kd}")));
    }
    if kd == 0.0 {
        if kind == TranslationKind::OutgoingToRegular {
            return Err(Error::InvalidArgument(
                "outgoing-to-regular translation is singular at zero separation".into(),
            ));
        }
        let mut m = Array2::zeros((basis.size(), basis.size()));
        for i in 0..basis.size() {
            m[[i, i]] = Complex64::new(1.0, 0.0);
        }
        return Ok(TranslationOperator { matrix: m, kind, kd: [0.0; 3], basis: basis.clone() });
    }
    let matrix = axial_matrix_rect(kind_to_wave(kind), kd, basis, basis);
    Ok(TranslationOperator { matrix, kind, kd: [0.0, 0.0, kd], basis: basis.clone() })
}

/// General-direction translation operator Y(kd) = D^t Yz(|kd|) D for the
/// outgoing-to-regular kind, using the global kernel and rotation caches.
pub fn general_translation(basis: &BasisSpec, kd: [f64; 3]) -> Result<TranslationOperator> {
    global_cache().general(basis, kd, TranslationKind::OutgoingToRegular)
}

/// General-direction regular-to-regular operator; identity at kd = 0.
pub fn general_regular(basis: &BasisSpec, kd: [f64; 3]) -> Result<TranslationOperator> {
    let r = (kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2]).sqrt();
    if r == 0.0 {
        return z_translation(basis, 0.0, TranslationKind::RegularToRegular);
    }
    global_cache().general(basis, kd, TranslationKind::RegularToRegular)
}

/// Entrywise real part of an outgoing-to-regular operator: the
/// regular-to-regular operator for the same displacement.
pub fn regular_part(y: &TranslationOperator) -> Result<TranslationOperator> {
    if y.kind != TranslationKind::OutgoingToRegular {
        return Err(Error::InvalidArgument(
            "regular_part expects an outgoing-to-regular operator".into(),
        ));
    }
    Ok(TranslationOperator {
        matrix: y.matrix.mapv(|v| Complex64::new(v.re, 0.0)),
        kind: TranslationKind::RegularToRegular,
        kd: y.kd,
        basis: y.basis.clone(),
    })
}

/// Internal padding policy for operator chains.
pub fn chain_padding(kd: f64) -> usize {
    4usize.max((0.5 * kd.abs()).ceil() as usize)
}

/// Kernel cache: axial matrices keyed by (kind, l_max, |kd| quantized to one
/// part in 1e12), polar kernels D(0,b,0)^t Z D(0,b,0) keyed additionally by
/// the polar angle, plus a rotation-operator cache for the decomposition.
pub struct TranslationCache {
    kernels: RwLock<HashMap<(TranslationKind, usize, u64), Arc<Array2<Complex64>>>>,
    polar: RwLock<HashMap<(TranslationKind, usize, u64, u64), Arc<Array2<Complex64>>>>,
    rotations: RotationCache,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl Default for TranslationCache {
    fn default() -> Self {
        Self {
            kernels: RwLock::new(HashMap::new()),
            polar: RwLock::new(HashMap::new()),
            rotations: RotationCache::new(),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }
}

fn quantize_kd(kd: f64) -> u64 {
    // relative quantization: round the mantissa to 1e-12 relative resolution
    let exp = kd.abs().log10().floor();
    let scale = 10f64.powf(11.0 - exp);
    (kd * scale).round() as u64
}

fn quantize_angle(angle: f64) -> u64 {
    // angles are bounded, absolute 1e-12 resolution suffices
    (angle * 1e12).round() as u64
}

/// Conjugation by the pure z rotation D(alpha, 0, 0): returns D^t w D.
///
/// That rotation only mixes the (even, odd) partner pair within each
/// (tau, l, m > 0) channel, with block [[cos m a, sin m a], [-sin m a,
/// cos m a]], so the conjugation is two O(N^2) passes instead of a dense
/// product.
fn azimuthal_conjugate(
    w: &Array2<Complex64>,
    alpha: f64,
    basis: &BasisSpec,
) -> Array2<Complex64> {
    use crate::basis::{iter_indices, pack_index, Parity};
    let n = basis.size();
    // even members of each m > 0 pair, with their odd partner and angle
    let mut pairs: Vec<(usize, usize, f64, f64)> = Vec::new();
    for idx in iter_indices(basis.l_max) {
        if idx.m == 0 || idx.sigma != Parity::Even {
            continue;
        }
        let e = pack_index(idx, basis.l_max).unwrap();
        let o = pack_index(
            crate::basis::WaveIndex { sigma: Parity::Odd, ..idx },
            basis.l_max,
        )
        .unwrap();
        let ang = idx.m as f64 * alpha;
        pairs.push((e, o, ang.cos(), ang.sin()));
    }
    // rows: tmp = D^t w
    let mut tmp = w.clone();
    for &(e, o, c, s) in &pairs {
        for col in 0..n {
            let we = w[[e, col]];
            let wo = w[[o, col]];
            tmp[[e, col]] = we * c - wo * s;
            tmp[[o, col]] = we * s + wo * c;
        }
    }
    // columns: out = tmp D
    let mut out = tmp.clone();
    for &(e, o, c, s) in &pairs {
        for row in 0..n {
            let we = tmp[[row, e]];
            let wo = tmp[[row, o]];
            out[[row, e]] = we * c - wo * s;
            out[[row, o]] = we * s + wo * c;
        }
    }
    out
}

impl TranslationCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fetch or build the axial kernel for |kd|.
    pub fn z_kernel(
        &self,
        basis: &BasisSpec,
        kd: f64,
        kind: TranslationKind,
    ) -> Arc<Array2<Complex64>> {
        let key = (kind, basis.l_max, quantize_kd(kd));
        if let Some(k) = self.kernels.read().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return k.clone();
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let m = Arc::new(axial_matrix_rect(kind_to_wave(kind), kd, basis, basis));
        self.kernels.write().insert(key, m.clone());
        m
    }

    /// Fetch or build the polar kernel D(0,b,0)^t Z(|kd|) D(0,b,0).
    fn polar_kernel(
        &self,
        basis: &BasisSpec,
        kd: f64,
        beta: f64,
        kind: TranslationKind,
    ) -> Arc<Array2<Complex64>> {
        let key = (kind, basis.l_max, quantize_kd(kd), quantize_angle(beta));
        if let Some(w) = self.polar.read().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return w.clone();
        }
        let kernel = self.z_kernel(basis, kd, kind);
        let w = if beta == 0.0 {
            kernel
        } else {
            let rot = self.rotations.get(basis, EulerAngles::new(0.0, beta, 0.0));
            Arc::new(rot.conjugate_matrix(&kernel))
        };
        self.polar.write().insert(key, w.clone());
        w
    }

    /// General translation through the cached decomposition. The polar factor
    /// D_b^t Z D_b is cached per (|kd|, beta); the azimuthal factor commutes
    /// past it cheaply, so directions sharing a cone reuse the dense work.
    pub fn general(
        &self,
        basis: &BasisSpec,
        kd: [f64; 3],
        kind: TranslationKind,
    ) -> Result<TranslationOperator> {
        let r = (kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2]).sqrt();
        if !(r > 0.0) {
            return Err(Error::InvalidArgument("zero translation displacement".into()));
        }
        let matrix = if kd[0] == 0.0 && kd[1] == 0.0 && kd[2] > 0.0 {
            self.z_kernel(basis, r, kind).as_ref().clone()
        } else {
            let angles = angles_to_direction(kd);
            let w = self.polar_kernel(basis, r, angles.beta, kind);
            if angles.alpha == 0.0 {
                w.as_ref().clone()
            } else {
                azimuthal_conjugate(&w, angles.alpha, basis)
            }
        };
        Ok(TranslationOperator { matrix, kind, kd, basis: basis.clone() })
    }

    pub fn stats(&self) -> (usize, usize) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    pub fn clear(&self) {
        self.kernels.write().clear();
        self.polar.write().clear();
    }
}

/// Process-wide shared cache used by the free-function constructors.
pub fn global_cache() -> &'static TranslationCache {
    static CACHE: OnceLock<TranslationCache> = OnceLock::new();
    CACHE.get_or_init(TranslationCache::new)
}

/// Rectangular general translation (rows/cols may carry different l_max);
/// used by the synthesis assembly where per-structure bases differ.
pub(crate) fn general_matrix_rect(
    kind: TranslationKind,
    kd: [f64; 3],
    basis_rows: &BasisSpec,
    basis_cols: &BasisSpec,
) -> Result<Array2<Complex64>> {
    let r = (kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2]).sqrt();
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("zero translation displacement".into()));
    }
    let axial = axial_matrix_rect(kind_to_wave(kind), r, basis_rows, basis_cols);
    if kd[0] == 0.0 && kd[1] == 0.0 && kd[2] > 0.0 {
        return Ok(axial);
    }
    let angles = angles_to_direction(kd);
    let rot_rows = rotation_matrix(basis_rows, angles);
    let rot_cols = rotation_matrix(basis_cols, angles);
    // D_rows^t * axial * D_cols
    let tmp = rot_rows.left_mul_transposed(&axial);
    Ok(rot_cols.right_mul(&tmp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::test_support::scalar_wave;
    use crate::basis::{evaluate_field, SphericalExpansion};
    use crate::sph::gauss_legendre;
    use ndarray::s;

    /// Quadrature oracle for scalar axial coefficients: project the shifted
    /// wave on harmonics at fixed radius in the new frame.
    fn scalar_c_oracle(kind: WaveKind, kd: f64, lp: usize, l: usize, m: i64, r_new: f64) -> Complex64 {
        let k = 1.0;
        let (nodes, wts) = gauss_legendre(40);
        let n_phi = 64;
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &w) in nodes.iter().zip(&wts) {
            let st = (1.0 - x * x).sqrt();
            for ip in 0..n_phi {
                let phi = ip as f64 * dphi;
                let p_new = [r_new * st * phi.cos(), r_new * st * phi.sin(), r_new * x];
                let p_old = [p_new[0], p_new[1], p_new[2] + kd];
                acc += w * dphi
                    * scalar_wave(kind, k, l, m, p_old)
                    * crate::algebra::complex_harmonic(lp, m, x.acos(), phi).conj();
            }
        }
        // the re-expansion about the new origin is regular for both kinds
        acc / sph_bessel_j(lp, k * r_new)[lp]
    }

    #[test]
    fn scalar_axial_coefficients_match_quadrature() {
        let kd = 1.7;
        for &kind in &[WaveKind::Regular, WaveKind::Outgoing] {
            let r_new = match kind {
                WaveKind::Regular => 0.8,
                WaveKind::Outgoing => 0.6,
            };
            let tables = scalar_axial_tables(kind, kd, 6, 4, 3);
            for &(lp, l, m) in &[(0usize, 0usize, 0i64), (2, 1, 0), (3, 2, 1), (4, 3, 2), (5, 4, 3), (1, 3, 1)] {
                let got = tables[m as usize][[lp, l]];
                let want = scalar_c_oracle(kind, kd, lp, l, m, r_new);
                assert!(
                    (got - want).norm() < 1e-7 * want.norm().max(1.0),
                    "{kind:?} lp={lp} l={l} m={m}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn scalar_tables_symmetric_in_order_sign() {
        // C^{-m} = C^m: check via quadrature at negative m
        let kd = 1.3;
        let tables = scalar_axial_tables(WaveKind::Regular, kd, 4, 3, 2);
        for &(lp, l, m) in &[(2usize, 2usize, 1i64), (3, 2, 2), (4, 3, 1)] {
            let got = tables[m as usize][[lp, l]];
            let want = scalar_c_oracle(WaveKind::Regular, kd, lp, l, -m, 0.8);
            assert!((got - want).norm() < 1e-7, "lp={lp} l={l} m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn regular_translation_matches_field() {
        let basis = BasisSpec::new(6);
        let k = 1.0;
        let kd = 2.0;
        let op = z_translation(&basis, kd, TranslationKind::RegularToRegular).unwrap();
        let mut exp = SphericalExpansion::zeros(WaveKind::Regular, k, basis.clone());
        // keep energy in low degrees so basis truncation is negligible
        for (i, c) in exp.coefficients.iter_mut().enumerate() {
            if i < 16 {
                *c = Complex64::new((0.3 * i as f64).sin(), (0.8 * i as f64).cos());
            }
        }
        let moved = SphericalExpansion::new(
            WaveKind::Regular,
            op.matrix.dot(&exp.coefficients),
            k,
            basis.clone(),
        )
        .unwrap();
        for &p_new in &[[0.2, 0.1, 0.3], [-0.1, 0.25, -0.2], [0.0, 0.0, 0.4]] {
            let p_old = [p_new[0], p_new[1], p_new[2] + kd];
            let want = evaluate_field(&exp, p_old).unwrap();
            let got = evaluate_field(&moved, p_new).unwrap();
            for c in 0..3 {
                assert!(
                    (want[c] - got[c]).norm() < 1e-6,
                    "p={p_new:?} c={c}: {} vs {}",
                    got[c],
                    want[c]
                );
            }
        }
    }

    #[test]
    fn outgoing_translation_matches_field() {
        let basis = BasisSpec::new(11);
        let k = 1.0;
        let kd = 4.0;
        let op = z_translation(&basis, kd, TranslationKind::OutgoingToRegular).unwrap();
        // single outgoing wavefunction at the old origin
        for src in [0usize, 3, 7] {
            let mut exp = SphericalExpansion::zeros(WaveKind::Outgoing, k, basis.clone());
            exp.coefficients[src] = Complex64::new(1.0, 0.0);
            let moved = SphericalExpansion::new(
                WaveKind::Regular,
                op.matrix.dot(&exp.coefficients),
                k,
                basis.clone(),
            )
            .unwrap();
            for &p_new in &[[0.3, 0.2, 0.4], [-0.5, 0.1, -0.3], [0.2, -0.6, 0.5]] {
                let p_old = [p_new[0], p_new[1], p_new[2] + kd];
                let want = evaluate_field(&exp, p_old).unwrap();
                let got = evaluate_field(&moved, p_new).unwrap();
                for c in 0..3 {
                    assert!(
                        (want[c] - got[c]).norm() < 1e-6 * want[c].norm().max(1.0),
                        "src={src} p={p_new:?} c={c}: {} vs {}",
                        got[c],
                        want[c]
                    );
                }
            }
        }
    }

    #[test]
    fn axial_operator_block_sparsity() {
        let basis = BasisSpec::new(4);
        let op = z_translation(&basis, 1.5, TranslationKind::RegularToRegular).unwrap();
        for ri in crate::basis::iter_indices(4) {
            let r = crate::basis::pack_index(ri, 4).unwrap();
            for ci in crate::basis::iter_indices(4) {
                let c = crate::basis::pack_index(ci, 4).unwrap();
                if ri.m != ci.m {
                    assert_eq!(
                        op.matrix[[r, c]],
                        Complex64::new(0.0, 0.0),
                        "nonzero off-block entry {ri:?} {ci:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn regular_part_equals_direct_regular_build() {
        let basis = BasisSpec::new(5);
        let kd = 2.3;
        let y = z_translation(&basis, kd, TranslationKind::OutgoingToRegular).unwrap();
        let r_from_y = regular_part(&y).unwrap();
        let r_direct = z_translation(&basis, kd, TranslationKind::RegularToRegular).unwrap();
        let n = basis.size();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (r_from_y.matrix[[i, j]] - r_direct.matrix[[i, j]]).norm() < 1e-11,
                    "({i},{j}): {} vs {}",
                    r_from_y.matrix[[i, j]],
                    r_direct.matrix[[i, j]]
                );
                // the regular kernel is real in the real-harmonic basis
                assert!(r_direct.matrix[[i, j]].im.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn regular_transpose_is_reverse_displacement() {
        let basis = BasisSpec::new(5);
        let kd = [0.7, -0.4, 1.1];
        let neg = [-kd[0], -kd[1], -kd[2]];
        let cache = TranslationCache::new();
        let fwd = cache.general(&basis, kd, TranslationKind::RegularToRegular).unwrap();
        let rev = cache.general(&basis, neg, TranslationKind::RegularToRegular).unwrap();
        let n = basis.size();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (fwd.matrix[[j, i]] - rev.matrix[[i, j]]).norm() < 1e-10,
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn regular_inverse_composition() {
        // R(kd) R(-kd) = I on an inner block when built padded
        let inner = BasisSpec::new(4);
        let padded = BasisSpec::new(4 + chain_padding(2.0) + 2);
        let cache = TranslationCache::new();
        let kd = [0.8, 0.5, 1.6];
        let neg = [-kd[0], -kd[1], -kd[2]];
        let fwd = cache.general(&padded, kd, TranslationKind::RegularToRegular).unwrap();
        let rev = cache.general(&padded, neg, TranslationKind::RegularToRegular).unwrap();
        let prod = rev.matrix.dot(&fwd.matrix);
        let n = inner.size();
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (prod[[i, j]] - Complex64::new(expect, 0.0)).norm() < 1e-6,
                    "({i},{j}) = {}",
                    prod[[i, j]]
                );
            }
        }
    }

    #[test]
    fn axial_composition() {
        let inner = BasisSpec::new(4);
        let padded = BasisSpec::new(10);
        let a = z_translation(&padded, 0.9, TranslationKind::RegularToRegular).unwrap();
        let b = z_translation(&padded, 1.4, TranslationKind::RegularToRegular).unwrap();
        let c = z_translation(&padded, 2.3, TranslationKind::RegularToRegular).unwrap();
        let prod = b.matrix.dot(&a.matrix);
        let n = inner.size();
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (prod[[i, j]] - c.matrix[[i, j]]).norm() < 1e-6,
                    "({i},{j}): {} vs {}",
                    prod[[i, j]],
                    c.matrix[[i, j]]
                );
            }
        }
    }

    #[test]
    fn general_translation_along_z_equals_axial() {
        let basis = BasisSpec::new(4);
        let cache = TranslationCache::new();
        let gen = cache
            .general(&basis, [0.0, 0.0, 1.8], TranslationKind::OutgoingToRegular)
            .unwrap();
        let ax = z_translation(&basis, 1.8, TranslationKind::OutgoingToRegular).unwrap();
        let n = basis.size();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(gen.matrix[[i, j]], ax.matrix[[i, j]]);
            }
        }
    }

    #[test]
    fn general_translation_field_matching_oracle() {
        let basis = BasisSpec::new(13);
        let k = 1.0;
        let kd = [1.6f64, -2.2, 2.4];
        let d_len = (kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2]).sqrt();
        let cache = TranslationCache::new();
        let op = cache.general(&basis, kd, TranslationKind::OutgoingToRegular).unwrap();
        let mut exp = SphericalExpansion::zeros(WaveKind::Outgoing, k, basis.clone());
        exp.coefficients[2] = Complex64::new(0.8, -0.3);
        exp.coefficients[9] = Complex64::new(-0.2, 0.5);
        let moved = SphericalExpansion::new(
            WaveKind::Regular,
            op.matrix.dot(&exp.coefficients),
            k,
            basis.clone(),
        )
        .unwrap();
        for &scale in &[0.12, 0.3] {
            let p_new = [scale * d_len * 0.5, -scale * d_len * 0.3, scale * d_len * 0.4];
            let p_old = [p_new[0] + kd[0], p_new[1] + kd[1], p_new[2] + kd[2]];
            let want = evaluate_field(&exp, p_old).unwrap();
            let got = evaluate_field(&moved, p_new).unwrap();
            for c in 0..3 {
                assert!(
                    (want[c] - got[c]).norm() < 1e-6 * want[c].norm().max(1e-3),
                    "c={c}: {} vs {}",
                    got[c],
                    want[c]
                );
            }
        }
    }

    #[test]
    fn cache_shares_kernel_across_directions() {
        let basis = BasisSpec::new(3);
        let cache = TranslationCache::new();
        let a = cache.general(&basis, [1.0, 0.5, 0.3], TranslationKind::OutgoingToRegular).unwrap();
        let r = (1.0f64 + 0.25 + 0.09).sqrt();
        let b = cache
            .general(&basis, [0.0, 0.0, r], TranslationKind::OutgoingToRegular)
            .unwrap();
        let (hits, misses) = cache.stats();
        assert_eq!(misses, 1);
        assert_eq!(hits, 1);
        // independent build agrees
        let fresh = TranslationCache::new()
            .general(&basis, [1.0, 0.5, 0.3], TranslationKind::OutgoingToRegular)
            .unwrap();
        let n = basis.size();
        for i in 0..n {
            for j in 0..n {
                assert!((a.matrix[[i, j]] - fresh.matrix[[i, j]]).norm() < 1e-12);
            }
        }
        let _ = b;
    }

    #[test]
    fn cached_general_matches_dense_conjugation() {
        // polar cache + azimuthal passes vs one dense D^t Z D
        let basis = BasisSpec::new(4);
        let cache = TranslationCache::new();
        for kd in [[1.1, -0.7, 0.4], [0.0, 0.0, -1.3], [-0.5, 0.9, -0.2]] {
            let fast = cache.general(&basis, kd, TranslationKind::OutgoingToRegular).unwrap();
            let r = (kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2]).sqrt();
            let kernel =
                axial_matrix_rect(WaveKind::Outgoing, r, &basis, &basis);
            let rot = rotation_matrix(&basis, angles_to_direction(kd));
            let want = rot.conjugate_matrix(&kernel);
            let mut worst = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..basis.size() {
                for j in 0..basis.size() {
                    worst = worst.max((fast.matrix[[i, j]] - want[[i, j]]).norm());
                    scale = scale.max(want[[i, j]].norm());
                }
            }
            assert!(worst < 1e-12 * scale, "kd {kd:?} worst {worst:e} scale {scale:e}");
        }
    }

    #[test]
    fn zero_displacement_handling() {
        let basis = BasisSpec::new(2);
        assert!(z_translation(&basis, 0.0, TranslationKind::OutgoingToRegular).is_err());
        let id = z_translation(&basis, 0.0, TranslationKind::RegularToRegular).unwrap();
        for i in 0..basis.size() {
            for j in 0..basis.size() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(id.matrix[[i, j]], Complex64::new(expect, 0.0));
            }
        }
        assert!(general_translation(&basis, [0.0; 3]).is_err());
    }

    #[test]
    fn rect_matrix_is_square_prefix() {
        // the square operator's leading block equals the rectangular build
        let big = BasisSpec::new(6);
        let small = BasisSpec::new(3);
        let sq = axial_matrix_rect(WaveKind::Outgoing, 2.1, &big, &big);
        let rect = axial_matrix_rect(WaveKind::Outgoing, 2.1, &small, &big);
        let view = sq.slice(s![..small.size(), ..]);
        for i in 0..small.size() {
            for j in 0..big.size() {
                assert!((view[[i, j]] - rect[[i, j]]).norm() < 1e-12);
            }
        }
    }
}
