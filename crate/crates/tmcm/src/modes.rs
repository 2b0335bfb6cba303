//! Characteristic-mode decomposition against an optional background,
//! frequency sweeps with greedy mode tracking, resonance reporting, and
//! modal far-field patterns.

use crate::basis::{far_field, BasisSpec, FarFieldPattern, SphericalExpansion, WaveKind};
use crate::error::{Error, Result};
use crate::synthesis::{assemble, synthesize_background, synthesize_total, Scene};
use crate::tmatrix::TMatrix;
use ndarray::{s, Array1};
use ndarray_linalg::Eig;
use num_complex::Complex64;
use rayon::prelude::*;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Correlation threshold for linking modes across adjacent frequencies.
pub const TRACKING_THRESHOLD: f64 = 0.7;

/// Relative tolerance under which eigenvalues count as a degenerate multiplet.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// One characteristic mode: eigenvalue t_n, scattering eigenvalue
/// s_n = 1 + 2 t_n, and a unit-norm outgoing coefficient vector.
#[derive(Debug, Clone)]
pub struct CharacteristicMode {
    pub t: Complex64,
    pub s: Complex64,
    pub vector: Array1<Complex64>,
    pub track_id: usize,
}

/// Decomposition at a single frequency, modes sorted by descending |t_n|.
#[derive(Debug, Clone)]
pub struct CharacteristicModeSet {
    pub frequency_hz: f64,
    pub k: f64,
    pub basis: BasisSpec,
    pub modes: Vec<CharacteristicMode>,
}

impl CharacteristicModeSet {
    /// Indices grouped into degenerate multiplets; modes are already sorted
    /// by |t_n| so groups are contiguous runs.
    pub fn degenerate_groups(&self) -> Vec<Vec<usize>> {
        let t_max = self.modes.iter().map(|m| m.t.norm()).fold(0.0, f64::max);
        let tol = DEGENERACY_TOL * t_max;
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.modes.len() {
            match groups.last_mut() {
                Some(g) if (self.modes[i].t - self.modes[*g.last().unwrap()].t).norm() <= tol => {
                    g.push(i)
                }
                _ => groups.push(vec![i]),
            }
        }
        groups
    }
}

/// Solve (T + T_b^dag + 2 T T_b^dag) f_n = t_n f_n with a dense complex
/// eigensolver; T_b may be zero (free-space background).
pub fn characteristic_modes(t: &TMatrix, t_b: &TMatrix) -> Result<CharacteristicModeSet> {
    t.basis.check_same(&t_b.basis)?;
    if (t.k - t_b.k).abs() > 1e-9 * t.k.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "wavenumber mismatch: {} vs {}",
            t.k, t_b.k
        )));
    }
    let tbh = t_b.matrix.t().mapv(|v| v.conj());
    let a = &t.matrix + &tbh + t.matrix.dot(&tbh).mapv(|v| 2.0 * v);
    let (vals, vecs) = a.eig().map_err(|e| Error::Linalg(format!("eigensolver failed: {e}")))?;
    let a_norm = a.mapv(|v| v.norm_sqr()).sum().sqrt();
    // residual guard on every right eigenpair
    let resid = &a.dot(&vecs) - &(&vecs * &vals);
    for (i, col) in resid.columns().into_iter().enumerate() {
        let r = col.mapv(|v| v.norm_sqr()).sum().sqrt();
        if r > 1e-9 * a_norm.max(1e-300) {
            return Err(Error::Linalg(format!(
                "eigenpair {i} residual {r:.3e} exceeds 1e-9 * |A| = {:.3e}",
                1e-9 * a_norm
            )));
        }
    }
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| {
        vals[j]
            .norm()
            .total_cmp(&vals[i].norm())
            .then(vals[j].re.total_cmp(&vals[i].re))
            .then(vals[j].im.total_cmp(&vals[i].im))
    });
    let mut modes = Vec::with_capacity(order.len());
    for (rank, &i) in order.iter().enumerate() {
        let mut v = vecs.column(i).to_owned();
        let norm = v.mapv(|x| x.norm_sqr()).sum().sqrt();
        v.mapv_inplace(|x| x / norm);
        // phase convention: largest-magnitude coefficient real positive
        let (jmax, _) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let phase = v[jmax] / v[jmax].norm();
        v.mapv_inplace(|x| x / phase);
        modes.push(CharacteristicMode {
            t: vals[i],
            s: Complex64::new(1.0, 0.0) + 2.0 * vals[i],
            vector: v,
            track_id: rank,
        });
    }
    Ok(CharacteristicModeSet {
        frequency_hz: t.k * SPEED_OF_LIGHT / (2.0 * std::f64::consts::PI),
        k: t.k,
        basis: t.basis.clone(),
        modes,
    })
}

/// |t_n| per mode (modal significance).
pub fn modal_significance(set: &CharacteristicModeSet) -> Vec<f64> {
    set.modes.iter().map(|m| m.t.norm()).collect()
}

/// Sweep outcome: per-frequency mode sets with consistent track ids, plus
/// any per-frequency failures (the sweep continues past them).
pub struct SweepResult {
    pub sets: Vec<CharacteristicModeSet>,
    pub failures: Vec<(f64, Error)>,
}

fn scene_at_frequency(scene: &Scene, f_hz: f64) -> Result<Scene> {
    let k = 2.0 * std::f64::consts::PI * f_hz / SPEED_OF_LIGHT;
    Scene::new(scene.structures.clone(), k)
}

/// Decompose one scene frequency point: synthesize the total and background
/// T-matrices and run the eigensolver.
pub fn decompose_scene(scene: &Scene) -> Result<CharacteristicModeSet> {
    let total = synthesize_total(scene)?;
    let background = if scene.background_indices().is_empty() {
        TMatrix::zeros(scene.k, scene.global_basis.clone())
    } else {
        synthesize_background(scene)?.0
    };
    characteristic_modes(&total, &background)
}

/// Conjugate dot product over the shared basis prefix (bases at different
/// frequencies may differ in size; smaller bases are exact prefixes).
fn prefix_correlation(a: &Array1<Complex64>, b: &Array1<Complex64>) -> f64 {
    let n = a.len().min(b.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        acc += a[i].conj() * b[i];
    }
    acc.norm()
}

/// Greedy bipartite matching on |f_n^dag f_m|; unmatched modes open new
/// tracks.
fn link_tracks(sets: &mut [CharacteristicModeSet]) {
    if sets.is_empty() {
        return;
    }
    let mut next_track = sets[0].modes.len();
    for i in 1..sets.len() {
        let (prev, cur) = {
            let (a, b) = sets.split_at_mut(i);
            (&a[i - 1], &mut b[0])
        };
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (m, mode) in cur.modes.iter().enumerate() {
            for (p, pmode) in prev.modes.iter().enumerate() {
                let c = prefix_correlation(&pmode.vector, &mode.vector);
                if c >= TRACKING_THRESHOLD {
                    candidates.push((c, m, p));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_cur = vec![false; cur.modes.len()];
        let mut used_prev = vec![false; prev.modes.len()];
        let mut assigned: Vec<Option<usize>> = vec![None; cur.modes.len()];
        for (_, m, p) in candidates {
            if !used_cur[m] && !used_prev[p] {
                used_cur[m] = true;
                used_prev[p] = true;
                assigned[m] = Some(prev.modes[p].track_id);
            }
        }
        for (m, a) in assigned.iter().enumerate() {
            cur.modes[m].track_id = match a {
                Some(id) => *id,
                None => {
                    next_track += 1;
                    next_track - 1
                }
            };
        }
    }
}

/// Frequency sweep: per-frequency synthesis and decomposition in parallel,
/// then a sequential tracking pass.
pub fn sweep(scene: &Scene, f_start: f64, f_stop: f64, n_points: usize) -> Result<SweepResult> {
    if n_points < 1 || !(f_start > 0.0) || f_stop < f_start {
        return Err(Error::InvalidArgument(format!(
            "invalid sweep range {f_start}..{f_stop} with {n_points} points"
        )));
    }
    let freqs: Vec<f64> = if n_points == 1 {
        vec![f_start]
    } else {
        (0..n_points)
            .map(|i| f_start + (f_stop - f_start) * i as f64 / (n_points - 1) as f64)
            .collect()
    };
    let results: Vec<(f64, Result<CharacteristicModeSet>)> = freqs
        .par_iter()
        .map(|&f| (f, scene_at_frequency(scene, f).and_then(|s| decompose_scene(&s))))
        .collect();
    let mut sets = Vec::new();
    let mut failures = Vec::new();
    for (f, r) in results {
        match r {
            Ok(mut set) => {
                set.frequency_hz = f;
                sets.push(set);
            }
            Err(e) => failures.push((f, e)),
        }
    }
    link_tracks(&mut sets);
    Ok(SweepResult { sets, failures })
}

/// Per-track resonance and 3 dB significance band.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceBand {
    pub track_id: usize,
    pub resonance_hz: f64,
    pub peak_significance: f64,
    /// Band edges where |t_n| crosses 0.707 (linear interpolation), if the
    /// track reaches the threshold at all.
    pub band: Option<(f64, f64)>,
    /// True when the band extends past the swept range on that side.
    pub open_low: bool,
    pub open_high: bool,
}

const BAND_LEVEL: f64 = 0.707;

/// Resonance frequencies and 3 dB bands for every track in a sweep.
pub fn resonance_report(sweep: &SweepResult) -> Result<Vec<ResonanceBand>> {
    if sweep.sets.is_empty() {
        return Err(Error::InvalidArgument("resonance report needs a nonempty sweep".into()));
    }
    let mut track_ids: Vec<usize> = sweep
        .sets
        .iter()
        .flat_map(|s| s.modes.iter().map(|m| m.track_id))
        .collect();
    track_ids.sort_unstable();
    track_ids.dedup();
    let mut report = Vec::new();
    for id in track_ids {
        // samples (frequency, |t|) in sweep order
        let samples: Vec<(f64, f64)> = sweep
            .sets
            .iter()
            .filter_map(|s| {
                s.modes
                    .iter()
                    .find(|m| m.track_id == id)
                    .map(|m| (s.frequency_hz, m.t.norm()))
            })
            .collect();
        let (peak_idx, &(resonance_hz, peak)) = samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .unwrap();
        let mut band = None;
        let mut open_low = false;
        let mut open_high = false;
        if peak >= BAND_LEVEL {
            // walk outward from the peak to the nearest crossings
            let mut lo = samples[0].0;
            open_low = true;
            for j in (0..peak_idx).rev() {
                if samples[j].1 < BAND_LEVEL {
                    let (f0, v0) = samples[j];
                    let (f1, v1) = samples[j + 1];
                    lo = f0 + (BAND_LEVEL - v0) / (v1 - v0) * (f1 - f0);
                    open_low = false;
                    break;
                }
            }
            let mut hi = samples[samples.len() - 1].0;
            open_high = true;
            for j in peak_idx + 1..samples.len() {
                if samples[j].1 < BAND_LEVEL {
                    let (f0, v0) = samples[j - 1];
                    let (f1, v1) = samples[j];
                    hi = f0 + (BAND_LEVEL - v0) / (v1 - v0) * (f1 - f0);
                    open_high = false;
                    break;
                }
            }
            band = Some((lo, hi));
        }
        report.push(ResonanceBand {
            track_id: id,
            resonance_hz,
            peak_significance: peak,
            band,
            open_low,
            open_high,
        });
    }
    Ok(report)
}

fn mode_expansion(set: &CharacteristicModeSet, mode_index: usize) -> Result<SphericalExpansion> {
    let mode = set.modes.get(mode_index).ok_or_else(|| {
        Error::IndexOutOfRange(format!(
            "mode index {mode_index} out of {} modes",
            set.modes.len()
        ))
    })?;
    SphericalExpansion::new(WaveKind::Outgoing, mode.vector.clone(), set.k, set.basis.clone())
}

/// Far-field pattern of one characteristic mode on a (theta, phi) grid.
pub fn characteristic_farfield(
    set: &CharacteristicModeSet,
    mode_index: usize,
    grid: &[(f64, f64)],
) -> Result<FarFieldPattern> {
    far_field(&mode_expansion(set, mode_index)?, grid)
}

/// Global outgoing coefficients contributed by a subset of structures when
/// the scene is excited with regular coefficients `a` at the global origin.
fn scattering_contribution(
    scene: &Scene,
    a: &Array1<Complex64>,
    keys_only: bool,
) -> Result<Array1<Complex64>> {
    use ndarray_linalg::Inverse;
    let blocks = assemble(scene)?;
    let sys = blocks.system_matrix();
    let inv = sys.inv().map_err(|e| Error::Linalg(e.to_string()))?;
    let rhs = blocks.excitation_matrix().dot(a);
    let x = inv.dot(&rhs);
    let mut f = Array1::zeros(scene.global_basis.size());
    let keys = scene.key_indices();
    for (i, &p) in blocks.indices.iter().enumerate() {
        if keys_only && !keys.contains(&p) {
            continue;
        }
        let r = blocks.offsets[i];
        let np = blocks.r_blocks[i].nrows();
        let xp = x.slice(s![r..r + np]);
        f = f + blocks.r_blocks[i].t().dot(&xp);
    }
    Ok(f)
}

/// Modal far field from the key structures only, omitting the radiation
/// scattered off the background. Requires a key/background split.
pub fn characteristic_farfield_key_only(
    scene: &Scene,
    set: &CharacteristicModeSet,
    mode_index: usize,
    grid: &[(f64, f64)],
) -> Result<FarFieldPattern> {
    if scene.background_indices().is_empty() {
        return Err(Error::InvalidArgument(
            "background exclusion needs a scene with background structures".into(),
        ));
    }
    scene.global_basis.check_same(&set.basis)?;
    let mode = set
        .modes
        .get(mode_index)
        .ok_or_else(|| Error::IndexOutOfRange(format!("mode index {mode_index}")))?;
    let f = scattering_contribution(scene, &mode.vector, true)?;
    let exp = SphericalExpansion::new(WaveKind::Outgoing, f, scene.k, scene.global_basis.clone())?;
    far_field(&exp, grid)
}
