//! Multi-structure scattering synthesis: assembles the block system of
//! per-structure T-matrices coupled by translation operators and solves for
//! the total (or background-only) T-matrix in a common global basis, with a
//! Schur-complement path that reuses a stored background factorization.

use crate::basis::{truncation_order, BasisSpec};
use crate::error::{Error, Result};
use crate::mie::{layered_sphere_tmatrix, Material, SphereSpec};
use crate::rotation::{rotate_tmatrix, rotation_matrix, EulerAngles};
use crate::tmatrix::TMatrix;
use crate::translation::{
    chain_padding, general_matrix_rect, global_cache, TranslationCache, TranslationKind,
};
use ndarray::{s, Array2};
use ndarray_linalg::{Inverse, OperationNorm};
use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

/// Where a structure's T-matrix comes from.
#[derive(Debug, Clone)]
pub enum StructureSource {
    Sphere(SphereSpec),
    Matrix(TMatrix),
}

/// Role in substructure decompositions: key structures are the objects under
/// study, background structures form the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Key,
    Background,
}

/// One placed structure: source, position of its local origin (meters),
/// orientation, and the radius of its enclosing sphere.
#[derive(Debug, Clone)]
pub struct StructureInstance {
    pub source: StructureSource,
    pub position: [f64; 3],
    pub orientation: EulerAngles,
    pub enclosing_radius: f64,
    pub role: Role,
}

impl StructureInstance {
    pub fn sphere(spec: SphereSpec, position: [f64; 3]) -> Self {
        let radius = spec.outer_radius();
        Self {
            source: StructureSource::Sphere(spec),
            position,
            orientation: EulerAngles::new(0.0, 0.0, 0.0),
            enclosing_radius: radius,
            role: Role::Key,
        }
    }

    pub fn from_tmatrix(t: TMatrix, enclosing_radius: f64, position: [f64; 3]) -> Self {
        Self {
            source: StructureSource::Matrix(t),
            position,
            orientation: EulerAngles::new(0.0, 0.0, 0.0),
            enclosing_radius,
            role: Role::Key,
        }
    }

    pub fn with_orientation(mut self, angles: EulerAngles) -> Self {
        self.orientation = angles;
        self
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }
}

/// A validated multi-structure configuration with its derived bases.
#[derive(Debug, Clone)]
pub struct Scene {
    pub structures: Vec<StructureInstance>,
    pub k: f64,
    /// Extra orders added to every truncation-rule basis; absorbs the
    /// re-expansion error of the operator chains.
    pub padding: usize,
    pub global_basis: BasisSpec,
    bases: Vec<BasisSpec>,
}

impl Scene {
    /// Build with the default padding policy (largest inter-origin or
    /// origin-offset electrical distance).
    pub fn new(structures: Vec<StructureInstance>, k: f64) -> Result<Self> {
        let mut kd_max = 0f64;
        for (p, sp) in structures.iter().enumerate() {
            let rp = norm3(sp.position);
            kd_max = kd_max.max(k * rp);
            for sq in structures.iter().skip(p + 1) {
                kd_max = kd_max.max(k * dist3(sp.position, sq.position));
            }
        }
        let padding = if structures.len() == 1 && kd_max == 0.0 {
            0
        } else {
            chain_padding(kd_max)
        };
        Self::with_padding(structures, k, padding)
    }

    pub fn with_padding(structures: Vec<StructureInstance>, k: f64, padding: usize) -> Result<Self> {
        if structures.is_empty() {
            return Err(Error::SceneInvalid("scene needs at least one structure".into()));
        }
        if !(k > 0.0) {
            return Err(Error::SceneInvalid(format!("wavenumber k = {k} must be positive")));
        }
        let mut extent = 0f64;
        for (p, sp) in structures.iter().enumerate() {
            if !(sp.enclosing_radius > 0.0) {
                return Err(Error::SceneInvalid(format!(
                    "structure {p}: enclosing radius must be positive"
                )));
            }
            extent = extent.max(norm3(sp.position) + sp.enclosing_radius);
            for (q, sq) in structures.iter().enumerate().skip(p + 1) {
                let gap = dist3(sp.position, sq.position);
                if gap <= sp.enclosing_radius + sq.enclosing_radius {
                    return Err(Error::SceneInvalid(format!(
                        "structures {p} and {q} intersect: separation {gap} <= radii sum {}",
                        sp.enclosing_radius + sq.enclosing_radius
                    )));
                }
            }
        }
        let global_basis = BasisSpec::new(truncation_order(k, extent)? + padding);
        let mut bases = Vec::with_capacity(structures.len());
        for sp in &structures {
            let l_rule = truncation_order(k, sp.enclosing_radius)? + padding;
            let l_max = match &sp.source {
                StructureSource::Sphere(spec) => {
                    spec.validate()?;
                    l_rule
                }
                StructureSource::Matrix(t) => {
                    if (t.k - k).abs() > 1e-9 * k {
                        return Err(Error::SceneInvalid(format!(
                            "imported T-matrix wavenumber {} differs from scene k = {k}",
                            t.k
                        )));
                    }
                    l_rule.min(t.basis.l_max)
                }
            };
            bases.push(BasisSpec::new(l_max));
        }
        Ok(Self { structures, k, padding, global_basis, bases })
    }

    pub fn structure_basis(&self, p: usize) -> &BasisSpec {
        &self.bases[p]
    }

    pub fn key_indices(&self) -> Vec<usize> {
        (0..self.structures.len()).filter(|&p| self.structures[p].role == Role::Key).collect()
    }

    pub fn background_indices(&self) -> Vec<usize> {
        (0..self.structures.len())
            .filter(|&p| self.structures[p].role == Role::Background)
            .collect()
    }

    /// Digest over everything the solution depends on.
    pub fn hash(&self) -> String {
        self.hash_of(&(0..self.structures.len()).collect::<Vec<_>>())
    }

    /// Digest over the background portion only (plus shared scene data).
    pub fn background_hash(&self) -> String {
        self.hash_of(&self.background_indices())
    }

    fn hash_of(&self, indices: &[usize]) -> String {
        let mut h = Sha256::new();
        h.update(self.k.to_bits().to_le_bytes());
        h.update((self.padding as u64).to_le_bytes());
        h.update((self.global_basis.l_max as u64).to_le_bytes());
        for &p in indices {
            let sp = &self.structures[p];
            for c in sp.position {
                h.update(c.to_bits().to_le_bytes());
            }
            for a in [sp.orientation.alpha, sp.orientation.beta, sp.orientation.gamma] {
                h.update(a.to_bits().to_le_bytes());
            }
            h.update(sp.enclosing_radius.to_bits().to_le_bytes());
            h.update((self.bases[p].l_max as u64).to_le_bytes());
            match &sp.source {
                StructureSource::Sphere(spec) => {
                    for &(r, mat) in &spec.layers {
                        h.update(r.to_bits().to_le_bytes());
                        match mat {
                            Material::Pec => h.update([0u8]),
                            Material::Dielectric { eps_r } => {
                                h.update([1u8]);
                                h.update(eps_r.to_bits().to_le_bytes());
                            }
                        }
                    }
                }
                StructureSource::Matrix(t) => {
                    for v in t.matrix.iter() {
                        h.update(v.re.to_bits().to_le_bytes());
                        h.update(v.im.to_bits().to_le_bytes());
                    }
                }
            }
        }
        format!("{:x}", h.finalize())
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

fn scale3(v: [f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}

/// Assembled block system for a subset of a scene's structures.
///
/// `r_blocks[p]` is the regular relocation from the global origin to
/// structure p (shape N_p x N_global); the row operator of the synthesis
/// formula is its transpose.
pub struct BlockSystem {
    pub indices: Vec<usize>,
    pub t_blocks: Vec<Array2<Complex64>>,
    pub y_blocks: Vec<Vec<Option<Array2<Complex64>>>>,
    pub r_blocks: Vec<Array2<Complex64>>,
    pub offsets: Vec<usize>,
    pub total_size: usize,
    pub global_basis: BasisSpec,
}

/// Rectangular regular relocation with a prefix identity at zero offset.
fn relocation_block(
    k: f64,
    position: [f64; 3],
    rows: &BasisSpec,
    cols: &BasisSpec,
) -> Result<Array2<Complex64>> {
    if norm3(position) == 0.0 {
        let mut m = Array2::zeros((rows.size(), cols.size()));
        for i in 0..rows.size().min(cols.size()) {
            m[[i, i]] = Complex64::new(1.0, 0.0);
        }
        return Ok(m);
    }
    general_matrix_rect(TranslationKind::RegularToRegular, scale3(position, k), rows, cols)
}

/// Build the coupled block system over the given structure subset.
pub fn assemble_subset(
    scene: &Scene,
    indices: &[usize],
    cache: &TranslationCache,
) -> Result<BlockSystem> {
    let m = indices.len();
    // rotated per-structure T-matrices
    let t_blocks: Vec<Array2<Complex64>> = indices
        .par_iter()
        .map(|&p| -> Result<Array2<Complex64>> {
            let sp = &scene.structures[p];
            let basis = &scene.bases[p];
            let t = match &sp.source {
                StructureSource::Sphere(spec) => layered_sphere_tmatrix(scene.k, spec, basis)?,
                StructureSource::Matrix(t) => {
                    let n = basis.size();
                    TMatrix::new(t.matrix.slice(s![..n, ..n]).to_owned(), scene.k, basis.clone())?
                }
            };
            let a = sp.orientation.canonicalize();
            if a.alpha == 0.0 && a.beta == 0.0 && a.gamma == 0.0 {
                Ok(t.matrix)
            } else {
                Ok(rotate_tmatrix(&t, &rotation_matrix(basis, a))?.matrix)
            }
        })
        .collect::<Result<_>>()?;
    // coupling blocks: regular re-expansion at p of the outgoing field of q
    let pairs: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let coupled: Vec<((usize, usize), Array2<Complex64>)> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<((usize, usize), Array2<Complex64>)> {
            let (p, q) = (indices[i], indices[j]);
            let kd = scale3(
                [
                    scene.structures[p].position[0] - scene.structures[q].position[0],
                    scene.structures[p].position[1] - scene.structures[q].position[1],
                    scene.structures[p].position[2] - scene.structures[q].position[2],
                ],
                scene.k,
            );
            let block = if scene.bases[p] == scene.bases[q] {
                cache.general(&scene.bases[p], kd, TranslationKind::OutgoingToRegular)?.matrix
            } else {
                general_matrix_rect(
                    TranslationKind::OutgoingToRegular,
                    kd,
                    &scene.bases[p],
                    &scene.bases[q],
                )?
            };
            Ok(((i, j), block))
        })
        .collect::<Result<_>>()?;
    let mut y_blocks: Vec<Vec<Option<Array2<Complex64>>>> =
        (0..m).map(|_| (0..m).map(|_| None).collect()).collect();
    for ((i, j), b) in coupled {
        y_blocks[i][j] = Some(b);
    }
    // relocation blocks to the global origin
    let r_blocks: Vec<Array2<Complex64>> = indices
        .par_iter()
        .map(|&p| {
            relocation_block(
                scene.k,
                scene.structures[p].position,
                &scene.bases[p],
                &scene.global_basis,
            )
        })
        .collect::<Result<_>>()?;
    let mut offsets = Vec::with_capacity(m);
    let mut total = 0;
    for &p in indices {
        offsets.push(total);
        total += scene.bases[p].size();
    }
    Ok(BlockSystem {
        indices: indices.to_vec(),
        t_blocks,
        y_blocks,
        r_blocks,
        offsets,
        total_size: total,
        global_basis: scene.global_basis.clone(),
    })
}

/// Assemble the full scene using the process-wide kernel cache.
pub fn assemble(scene: &Scene) -> Result<BlockSystem> {
    assemble_subset(scene, &(0..scene.structures.len()).collect::<Vec<_>>(), global_cache())
}

impl BlockSystem {
    fn block_size(&self, i: usize) -> usize {
        self.t_blocks[i].nrows()
    }

    /// A = 1 - T~ Y~ over the stacked per-structure space.
    pub fn system_matrix(&self) -> Array2<Complex64> {
        let n = self.total_size;
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            a[[i, i]] = Complex64::new(1.0, 0.0);
        }
        for i in 0..self.indices.len() {
            for j in 0..self.indices.len() {
                if let Some(y) = &self.y_blocks[i][j] {
                    let prod = self.t_blocks[i].dot(y);
                    let (ri, ci) = (self.offsets[i], self.offsets[j]);
                    let mut view =
                        a.slice_mut(s![ri..ri + prod.nrows(), ci..ci + prod.ncols()]);
                    view -= &prod;
                }
            }
        }
        a
    }

    /// Right-hand side T~ R~^t: first-order response to a global excitation.
    pub fn excitation_matrix(&self) -> Array2<Complex64> {
        let ng = self.global_basis.size();
        let mut b = Array2::zeros((self.total_size, ng));
        for i in 0..self.indices.len() {
            let prod = self.t_blocks[i].dot(&self.r_blocks[i]);
            let r = self.offsets[i];
            b.slice_mut(s![r..r + prod.nrows(), ..]).assign(&prod);
        }
        b
    }

    /// Collapse solved per-structure responses X to the global basis: R~ X.
    pub fn collapse(&self, x: &Array2<Complex64>) -> Array2<Complex64> {
        let ng = self.global_basis.size();
        let mut t = Array2::zeros((ng, x.ncols()));
        for i in 0..self.indices.len() {
            let r = self.offsets[i];
            let xp = x.slice(s![r..r + self.block_size(i), ..]);
            t = t + self.r_blocks[i].t().dot(&xp);
        }
        t
    }
}

fn invert_system(a: &Array2<Complex64>, context: &str) -> Result<Array2<Complex64>> {
    let inv = a.inv().map_err(|_| Error::SingularSystem {
        cond: f64::INFINITY,
        context: context.to_string(),
    })?;
    let cond = a.opnorm_one()? * inv.opnorm_one()?;
    if cond > 1e14 {
        return Err(Error::SingularSystem { cond, context: context.to_string() });
    }
    Ok(inv)
}

fn solve_subset(
    scene: &Scene,
    indices: &[usize],
    cache: &TranslationCache,
) -> Result<(TMatrix, BlockSystem, Array2<Complex64>)> {
    let blocks = assemble_subset(scene, indices, cache)?;
    let a = blocks.system_matrix();
    let ainv = invert_system(&a, "multiple-scattering system 1 - T~ Y~")?;
    let x = ainv.dot(&blocks.excitation_matrix());
    let t = blocks.collapse(&x);
    Ok((TMatrix::new(t, scene.k, scene.global_basis.clone())?, blocks, ainv))
}

/// Total T-matrix of the scene in the global basis.
pub fn synthesize_total(scene: &Scene) -> Result<TMatrix> {
    let all: Vec<usize> = (0..scene.structures.len()).collect();
    Ok(solve_subset(scene, &all, global_cache())?.0)
}

/// Stored background solve, reusable by the Schur path for any key set over
/// the same background.
pub struct BackgroundArtifacts {
    pub scene_hash: String,
    pub background_indices: Vec<usize>,
    a22_inv: Array2<Complex64>,
    a22_inv_b2: Array2<Complex64>,
}

/// Background-only T-matrix in the scene's global basis, with the
/// factorization retained for reuse. A scene with no background structures
/// yields T_b = 0 (free space).
pub fn synthesize_background(scene: &Scene) -> Result<(TMatrix, BackgroundArtifacts)> {
    let bg = scene.background_indices();
    if bg.is_empty() {
        let t = TMatrix::zeros(scene.k, scene.global_basis.clone());
        return Ok((
            t,
            BackgroundArtifacts {
                scene_hash: scene.background_hash(),
                background_indices: bg,
                a22_inv: Array2::zeros((0, 0)),
                a22_inv_b2: Array2::zeros((0, scene.global_basis.size())),
            },
        ));
    }
    let (t, blocks, ainv) = solve_subset(scene, &bg, global_cache())?;
    let a22_inv_b2 = ainv.dot(&blocks.excitation_matrix());
    Ok((
        t,
        BackgroundArtifacts {
            scene_hash: scene.background_hash(),
            background_indices: bg,
            a22_inv: ainv,
            a22_inv_b2,
        },
    ))
}

/// Total T-matrix through the Schur complement over the key blocks, reusing
/// the stored background factorization.
pub fn schur_total(scene: &Scene, artifacts: &BackgroundArtifacts) -> Result<TMatrix> {
    if artifacts.scene_hash != scene.background_hash() {
        return Err(Error::SceneInvalid(
            "stale background artifacts: scene hash mismatch".into(),
        ));
    }
    let keys = scene.key_indices();
    if keys.is_empty() {
        return Err(Error::SceneInvalid("no key structures in scene".into()));
    }
    if artifacts.background_indices.is_empty() {
        // free-space background: plain solve over the keys
        return Ok(solve_subset(scene, &keys, global_cache())?.0);
    }
    // order: keys first, then background in the artifact order
    let mut order = keys.clone();
    order.extend_from_slice(&artifacts.background_indices);
    let blocks = assemble_subset(scene, &order, global_cache())?;
    let n1: usize = keys.iter().map(|&p| scene.bases[p].size()).sum();
    let a = blocks.system_matrix();
    let b = blocks.excitation_matrix();
    let a11 = a.slice(s![..n1, ..n1]);
    let a12 = a.slice(s![..n1, n1..]);
    let a21 = a.slice(s![n1.., ..n1]);
    let b1 = b.slice(s![..n1, ..]);
    let a22_inv_a21 = artifacts.a22_inv.dot(&a21);
    let schur = a11.to_owned() - a12.dot(&a22_inv_a21);
    let schur_inv = invert_system(&schur, "Schur complement over key blocks")?;
    let x1 = schur_inv.dot(&(b1.to_owned() - a12.dot(&artifacts.a22_inv_b2)));
    let x2 = artifacts.a22_inv_b2.clone() - a22_inv_a21.dot(&x1);
    let mut x = Array2::zeros((blocks.total_size, scene.global_basis.size()));
    x.slice_mut(s![..n1, ..]).assign(&x1);
    x.slice_mut(s![n1.., ..]).assign(&x2);
    let t = blocks.collapse(&x);
    TMatrix::new(t, scene.k, scene.global_basis.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray_linalg::Eig;

    fn pec_at(k: f64, radius: f64, position: [f64; 3]) -> StructureInstance {
        let _ = k;
        StructureInstance::sphere(SphereSpec::pec(radius), position)
    }

    fn identity(n: usize) -> Array2<Complex64> {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = Complex64::new(1.0, 0.0);
        }
        m
    }

    fn unitarity_defect(t: &TMatrix) -> f64 {
        let s = t.scattering_matrix();
        let g = s.t().mapv(|v| v.conj()).dot(&s) - identity(s.nrows());
        g.mapv(|v| v.norm_sqr()).sum().sqrt()
    }

    #[test]
    fn single_structure_at_origin_collapses() {
        let k = 1.0;
        let scene = Scene::new(vec![pec_at(k, 1.0, [0.0; 3])], k).unwrap();
        assert_eq!(scene.padding, 0);
        let total = synthesize_total(&scene).unwrap();
        let direct = layered_sphere_tmatrix(k, &SphereSpec::pec(1.0), &scene.global_basis).unwrap();
        let diff = (&total.matrix - &direct.matrix).mapv(|v| v.norm()).sum();
        assert!(diff < 1e-14, "collapse defect {diff}");
    }

    /// Match each reference eigenvalue to the closest eigenvalue of `t`.
    fn max_match_distance(t: &TMatrix, reference: &[Complex64], floor: f64) -> f64 {
        let eig = t.matrix.eig().unwrap().0;
        let mut used = vec![false; eig.len()];
        let mut worst = 0f64;
        for &r in reference {
            if r.norm() < floor {
                continue;
            }
            let (best, d) = eig
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, &e)| (i, (e - r).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            used[best] = true;
            worst = worst.max(d);
        }
        worst
    }

    fn mie_multiset(k: f64, spec: &SphereSpec, basis: &BasisSpec) -> Vec<Complex64> {
        let t = layered_sphere_tmatrix(k, spec, basis).unwrap();
        (0..basis.size()).map(|i| t.matrix[[i, i]]).collect()
    }

    #[test]
    fn offset_single_sphere_preserves_spectrum() {
        let k = 1.0;
        let spec = SphereSpec::pec(0.8);
        let scene = Scene::new(
            vec![StructureInstance::sphere(spec.clone(), [1.2, -0.9, 2.6])],
            k,
        )
        .unwrap();
        let total = synthesize_total(&scene).unwrap();
        let reference = mie_multiset(k, &spec, scene.structure_basis(0));
        let worst = max_match_distance(&total, &reference, 1e-8);
        assert!(worst < 1e-6, "worst eigenvalue mismatch {worst:.3e}");
    }

    fn two_pec_scene(k: f64, kd: f64, padding: Option<usize>) -> Scene {
        let d = kd / k;
        let s = vec![
            pec_at(k, 1.0 / k, [0.0, 0.0, -d / 2.0]),
            pec_at(k, 1.0 / k, [0.0, 0.0, d / 2.0]),
        ];
        match padding {
            Some(p) => Scene::with_padding(s, k, p).unwrap(),
            None => Scene::new(s, k).unwrap(),
        }
    }

    #[test]
    fn two_pec_spheres_lossless_and_monotone_in_padding() {
        let k = 1.0;
        let mut defects = Vec::new();
        for padding in [1, 3, 5] {
            let scene = two_pec_scene(k, 4.0, Some(padding));
            let total = synthesize_total(&scene).unwrap();
            defects.push(unitarity_defect(&total));
        }
        assert!(defects[2] < 1e-3, "defects {defects:?}");
        assert!(defects[0] > defects[1] && defects[1] > defects[2], "defects {defects:?}");
    }

    #[test]
    fn synthesized_matrix_is_reciprocal() {
        let scene = two_pec_scene(1.0, 4.0, None);
        let total = synthesize_total(&scene).unwrap();
        let num = (&total.matrix - &total.matrix.t()).mapv(|v| v.norm_sqr()).sum().sqrt();
        let den = total.matrix.mapv(|v| v.norm_sqr()).sum().sqrt();
        assert!(num / den < 1e-6, "reciprocity defect {}", num / den);
    }

    #[test]
    fn neumann_series_converges_to_direct_solve() {
        let scene = two_pec_scene(1.0, 8.0, None);
        let all = [0usize, 1];
        let blocks = assemble_subset(&scene, &all, global_cache()).unwrap();
        let a = blocks.system_matrix();
        let b = blocks.excitation_matrix();
        let direct = a.inv().unwrap().dot(&b);
        // x_{K} = sum_{k<=K} (T~ Y~)^k B with T~ Y~ = 1 - A
        let ty = identity(a.nrows()) - &a;
        let mut term = b.clone();
        let mut sum = b.clone();
        for _ in 0..20 {
            term = ty.dot(&term);
            sum = sum + &term;
        }
        let num = (&sum - &direct).mapv(|v| v.norm_sqr()).sum().sqrt();
        let den = direct.mapv(|v| v.norm_sqr()).sum().sqrt();
        assert!(num / den < 1e-8, "Neumann residual {}", num / den);
    }

    #[test]
    fn schur_path_matches_direct_solve() {
        let k = 1.0;
        let structures = vec![
            pec_at(k, 0.4, [0.0, 0.0, -2.2]),
            pec_at(k, 0.4, [1.8, 0.0, 1.1]).with_role(Role::Background),
            pec_at(k, 0.4, [-1.5, 1.2, 1.4]).with_role(Role::Background),
        ];
        let scene = Scene::with_padding(structures, k, 2).unwrap();
        let direct = synthesize_total(&scene).unwrap();
        let (_tb, artifacts) = synthesize_background(&scene).unwrap();
        let schur = schur_total(&scene, &artifacts).unwrap();
        let num = (&schur.matrix - &direct.matrix).mapv(|v| v.norm_sqr()).sum().sqrt();
        let den = direct.matrix.mapv(|v| v.norm_sqr()).sum().sqrt();
        assert!(num / den < 1e-10, "Schur vs direct {}", num / den);
    }

    #[test]
    fn stale_artifacts_rejected() {
        let k = 1.0;
        let make = |r: f64| {
            Scene::with_padding(
                vec![
                    pec_at(k, 0.4, [0.0, 0.0, -2.0]),
                    pec_at(k, r, [0.0, 0.0, 2.0]).with_role(Role::Background),
                ],
                k,
                2,
            )
            .unwrap()
        };
        let (_t, artifacts) = synthesize_background(&make(0.4)).unwrap();
        assert!(matches!(
            schur_total(&make(0.5), &artifacts),
            Err(Error::SceneInvalid(_))
        ));
        assert!(schur_total(&make(0.4), &artifacts).is_ok());
    }

    #[test]
    fn background_of_all_keys_is_zero() {
        let scene = two_pec_scene(1.0, 4.0, None);
        let (tb, artifacts) = synthesize_background(&scene).unwrap();
        assert!(tb.matrix.iter().all(|v| v.norm() == 0.0));
        assert!(artifacts.background_indices.is_empty());
        // schur path then reduces to the plain key-only solve
        let schur = schur_total(&scene, &artifacts).unwrap();
        let direct = synthesize_total(&scene).unwrap();
        let diff = (&schur.matrix - &direct.matrix).mapv(|v| v.norm()).sum();
        assert!(diff < 1e-10);
    }

    #[test]
    fn centered_background_sphere_is_mie() {
        let k = 1.0;
        let structures = vec![
            pec_at(k, 0.5, [0.0, 0.0, 3.0]),
            pec_at(k, 1.0, [0.0; 3]).with_role(Role::Background),
        ];
        let scene = Scene::new(structures, k).unwrap();
        let (tb, _) = synthesize_background(&scene).unwrap();
        let n1 = scene.structure_basis(1).size().min(tb.size());
        let direct = layered_sphere_tmatrix(k, &SphereSpec::pec(1.0), &scene.global_basis).unwrap();
        let diff = (&tb.matrix.slice(s![..n1, ..n1]) - &direct.matrix.slice(s![..n1, ..n1]))
            .mapv(|v| v.norm())
            .sum();
        assert!(diff < 1e-12, "background Mie defect {diff}");
    }

    #[test]
    fn rigid_shift_preserves_spectrum() {
        let k = 1.0;
        let base = two_pec_scene(k, 4.0, None);
        let t0 = synthesize_total(&base).unwrap();
        let shift = [0.8, -0.5, 0.9];
        let shifted = Scene::with_padding(
            base.structures
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.position = [
                        s.position[0] + shift[0],
                        s.position[1] + shift[1],
                        s.position[2] + shift[2],
                    ];
                    s
                })
                .collect(),
            k,
            base.padding,
        )
        .unwrap();
        let t1 = synthesize_total(&shifted).unwrap();
        let reference: Vec<Complex64> = t0.matrix.eig().unwrap().0.to_vec();
        let worst = max_match_distance(&t1, &reference, 1e-5);
        assert!(worst < 1e-6, "shift spectrum mismatch {worst:.3e}");
    }

    #[test]
    fn uniform_line_array_reuses_kernels() {
        let k = 1.0;
        let d = 4.0;
        let structures = (0..3)
            .map(|i| pec_at(k, 1.0, [0.0, 0.0, (i as f64 - 1.0) * d]))
            .collect();
        let scene = Scene::new(structures, k).unwrap();
        let cache = TranslationCache::new();
        let all = [0usize, 1, 2];
        assemble_subset(&scene, &all, &cache).unwrap();
        let (_hits, misses) = cache.stats();
        assert!(misses <= 2, "distinct axial kernels built: {misses}");
    }

    #[test]
    fn intersecting_structures_rejected() {
        let k = 1.0;
        let err = Scene::new(
            vec![pec_at(k, 1.0, [0.0; 3]), pec_at(k, 1.0, [0.0, 0.0, 1.5])],
            k,
        );
        assert!(matches!(err, Err(Error::SceneInvalid(_))));
    }
}
