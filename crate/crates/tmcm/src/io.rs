//! File exchange: the T-matrix container, scene configuration parsing, and
//! CSV emitters for eigentraces and patterns.
//!
//! The T-matrix container is a diff-able text header followed by either a
//! raw little-endian interleaved real/imaginary f64 payload (row-major) or,
//! for small matrices, an all-text payload. Writes are atomic and outputs
//! are byte-deterministic for identical inputs.

use crate::basis::{BasisSpec, CONVENTION};
use crate::error::{Error, Result};
use crate::mie::{Material, SphereSpec};
use crate::modes::SweepResult;
use crate::rotation::EulerAngles;
use crate::synthesis::{Role, Scene, StructureInstance, StructureSource};
use crate::tmatrix::TMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use serde::Deserialize;
use std::io::{Read as _, Write as _};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Matrices up to this dimension use the all-text payload.
const TEXT_PAYLOAD_MAX_N: usize = 64;

/// Optional header fields carried alongside a stored matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TMatrixMetadata {
    pub name: Option<String>,
    pub enclosing_radius: Option<f64>,
    pub scene_hash: Option<String>,
    pub padding: Option<usize>,
    pub notes: Vec<String>,
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that round-trips the exact bits
    format!("{v:?}")
}

/// Write `contents` atomically (write to a temp file, then rename).
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Save a T-matrix with its header metadata.
pub fn save_tmatrix(t: &TMatrix, path: &Path, meta: &TMatrixMetadata) -> Result<()> {
    let n = t.size();
    let layout = if n <= TEXT_PAYLOAD_MAX_N { "text" } else { "binary-le-row-major" };
    let mut head = String::new();
    head.push_str("#tmatrix\n");
    head.push_str(&format!("format_version {FORMAT_VERSION}\n"));
    head.push_str(&format!("tool_version {TOOL_VERSION}\n"));
    head.push_str(&format!("convention {CONVENTION}\n"));
    head.push_str(&format!("k {}\n", fmt_f64(t.k)));
    head.push_str(&format!("l_max {}\n", t.basis.l_max));
    head.push_str(&format!("n {n}\n"));
    head.push_str(&format!("layout {layout}\n"));
    if let Some(name) = &meta.name {
        head.push_str(&format!("name {name}\n"));
    }
    if let Some(r) = meta.enclosing_radius {
        head.push_str(&format!("enclosing_radius {}\n", fmt_f64(r)));
    }
    if let Some(h) = &meta.scene_hash {
        head.push_str(&format!("scene_hash {h}\n"));
    }
    if let Some(p) = meta.padding {
        head.push_str(&format!("padding {p}\n"));
    }
    for note in &meta.notes {
        head.push_str(&format!("note {note}\n"));
    }
    head.push_str("payload\n");
    let mut bytes = head.into_bytes();
    if layout == "text" {
        for v in t.matrix.iter() {
            bytes.extend_from_slice(format!("{} {}\n", fmt_f64(v.re), fmt_f64(v.im)).as_bytes());
        }
    } else {
        bytes.reserve(16 * n * n);
        for v in t.matrix.iter() {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    atomic_write(path, &bytes)
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::FileFormat { path: path.display().to_string(), reason: reason.into() }
}

/// Load a T-matrix and its metadata; the convention tag must match exactly.
pub fn load_tmatrix(path: &Path) -> Result<(TMatrix, TMatrixMetadata)> {
    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;
    // split header from payload at the "payload\n" marker
    let marker = b"payload\n";
    let head_end = raw
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| format_err(path, "missing payload marker"))?;
    let header = std::str::from_utf8(&raw[..head_end])
        .map_err(|_| format_err(path, "header is not valid UTF-8"))?;
    let payload = &raw[head_end + marker.len()..];
    let mut lines = header.lines();
    if lines.next() != Some("#tmatrix") {
        return Err(format_err(path, "not a T-matrix container (missing #tmatrix magic)"));
    }
    let mut fields = std::collections::HashMap::new();
    let mut meta = TMatrixMetadata::default();
    for (lineno, line) in lines.enumerate() {
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| format_err(path, format!("malformed header line {}", lineno + 2)))?;
        if key == "note" {
            meta.notes.push(value.to_string());
        } else {
            fields.insert(key.to_string(), value.to_string());
        }
    }
    let get = |key: &str| -> Result<&String> {
        fields.get(key).ok_or_else(|| format_err(path, format!("missing header field '{key}'")))
    };
    let version: u32 = get("format_version")?
        .parse()
        .map_err(|_| format_err(path, "unparseable format_version"))?;
    if version != FORMAT_VERSION {
        return Err(format_err(path, format!("unknown format version {version}")));
    }
    let convention = get("convention")?;
    if convention != CONVENTION {
        return Err(format_err(
            path,
            format!("convention mismatch: file has '{convention}', expected '{CONVENTION}'"),
        ));
    }
    let k: f64 = get("k")?.parse().map_err(|_| format_err(path, "unparseable k"))?;
    let l_max: usize =
        get("l_max")?.parse().map_err(|_| format_err(path, "unparseable l_max"))?;
    let n: usize = get("n")?.parse().map_err(|_| format_err(path, "unparseable n"))?;
    let basis = BasisSpec::new(l_max);
    if n != basis.size() {
        return Err(format_err(
            path,
            format!("n = {n} inconsistent with l_max = {l_max} (expected {})", basis.size()),
        ));
    }
    meta.name = fields.get("name").cloned();
    meta.enclosing_radius = match fields.get("enclosing_radius") {
        Some(v) => {
            Some(v.parse().map_err(|_| format_err(path, "unparseable enclosing_radius"))?)
        }
        None => None,
    };
    meta.scene_hash = fields.get("scene_hash").cloned();
    meta.padding = match fields.get("padding") {
        Some(v) => Some(v.parse().map_err(|_| format_err(path, "unparseable padding"))?),
        None => None,
    };
    let layout = get("layout")?.clone();
    let mut matrix = Array2::zeros((n, n));
    match layout.as_str() {
        "text" => {
            let text = std::str::from_utf8(payload)
                .map_err(|_| format_err(path, "text payload is not valid UTF-8"))?;
            let mut values = text.lines();
            for i in 0..n {
                for j in 0..n {
                    let line = values
                        .next()
                        .ok_or_else(|| format_err(path, "truncated text payload"))?;
                    let (re, im) = line
                        .split_once(' ')
                        .ok_or_else(|| format_err(path, "malformed payload line"))?;
                    matrix[[i, j]] = Complex64::new(
                        re.parse().map_err(|_| format_err(path, "unparseable payload value"))?,
                        im.parse().map_err(|_| format_err(path, "unparseable payload value"))?,
                    );
                }
            }
        }
        "binary-le-row-major" => {
            if payload.len() < 16 * n * n {
                return Err(format_err(
                    path,
                    format!("truncated payload: {} bytes, expected {}", payload.len(), 16 * n * n),
                ));
            }
            for i in 0..n {
                for j in 0..n {
                    let off = 16 * (i * n + j);
                    let re = f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
                    let im = f64::from_le_bytes(payload[off + 8..off + 16].try_into().unwrap());
                    matrix[[i, j]] = Complex64::new(re, im);
                }
            }
        }
        other => return Err(format_err(path, format!("unknown layout '{other}'"))),
    }
    Ok((TMatrix::new(matrix, k, basis)?, meta))
}

/// Scene configuration file (structured text, explicit units in field names).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub frequency_hz: Option<f64>,
    pub padding: Option<usize>,
    pub sweep: Option<SweepConfig>,
    #[serde(rename = "structure")]
    pub structures: Vec<StructureConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub name: Option<String>,
    pub position_m: [f64; 3],
    #[serde(default)]
    pub euler_deg: [f64; 3],
    #[serde(default = "default_role")]
    pub role: String,
    pub sphere: Option<SphereConfig>,
    pub tmatrix_file: Option<String>,
    pub enclosing_radius_m: Option<f64>,
}

fn default_role() -> String {
    "key".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    pub layers: Vec<LayerConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub radius_m: f64,
    pub material: Option<String>,
    pub eps_r: Option<f64>,
}

impl SceneConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("scene config parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Wavenumber of the single-frequency sections (synth/modes/pattern).
    pub fn wavenumber(&self) -> Result<f64> {
        let f = self.frequency_hz.ok_or_else(|| {
            Error::InvalidArgument("scene config needs frequency_hz for this command".into())
        })?;
        Ok(2.0 * std::f64::consts::PI * f / crate::modes::SPEED_OF_LIGHT)
    }

    /// Build the scene at the given wavenumber. Relative T-matrix paths
    /// resolve against `base_dir`.
    pub fn to_scene(&self, k: f64, base_dir: &Path, padding_override: Option<usize>) -> Result<Scene> {
        let mut structures = Vec::new();
        for (i, sc) in self.structures.iter().enumerate() {
            let field_err = |reason: String| {
                Error::SceneInvalid(format!("structure {} ({}): {reason}", i + 1, sc.name.as_deref().unwrap_or("unnamed")))
            };
            let role = match sc.role.as_str() {
                "key" => Role::Key,
                "background" => Role::Background,
                other => return Err(field_err(format!("unknown role '{other}'"))),
            };
            let mut instance = match (&sc.sphere, &sc.tmatrix_file) {
                (Some(sphere), None) => {
                    let mut layers = Vec::new();
                    for (j, layer) in sphere.layers.iter().enumerate() {
                        let mat = match (layer.material.as_deref(), layer.eps_r) {
                            (Some("pec"), None) => Material::Pec,
                            (None, Some(eps_r)) => Material::Dielectric { eps_r },
                            _ => {
                                return Err(field_err(format!(
                                    "layer {}: set either material = \"pec\" or eps_r",
                                    j + 1
                                )))
                            }
                        };
                        layers.push((layer.radius_m, mat));
                    }
                    StructureInstance::sphere(SphereSpec { layers }, sc.position_m)
                }
                (None, Some(file)) => {
                    let radius = sc.enclosing_radius_m.ok_or_else(|| {
                        field_err("tmatrix_file requires enclosing_radius_m".into())
                    })?;
                    let path = base_dir.join(file);
                    let (t, _meta) = load_tmatrix(&path)?;
                    StructureInstance::from_tmatrix(t, radius, sc.position_m)
                }
                _ => {
                    return Err(field_err(
                        "set exactly one of sphere or tmatrix_file".into(),
                    ))
                }
            };
            let d = std::f64::consts::PI / 180.0;
            instance = instance
                .with_orientation(EulerAngles::new(
                    sc.euler_deg[0] * d,
                    sc.euler_deg[1] * d,
                    sc.euler_deg[2] * d,
                ))
                .with_role(role);
            structures.push(instance);
        }
        match padding_override.or(self.padding) {
            Some(p) => Scene::with_padding(structures, k, p),
            None => Scene::new(structures, k),
        }
    }
}

/// Reproducibility header shared by all CSV outputs.
pub fn csv_metadata_lines(scene_hash: &str, padding: usize) -> String {
    format!(
        "# tool_version {TOOL_VERSION}\n# convention {CONVENTION}\n# scene_hash {scene_hash}\n# padding {padding}\n"
    )
}

/// Eigentrace CSV: rows strictly ordered by (frequency, track_id).
pub fn eigentrace_csv(sweep: &SweepResult, scene_hash: &str, padding: usize) -> String {
    let mut out = csv_metadata_lines(scene_hash, padding);
    out.push_str("frequency_hz,track_id,re_t,im_t,abs_t,abs_s\n");
    for set in &sweep.sets {
        let mut rows: Vec<_> = set.modes.iter().collect();
        rows.sort_by_key(|m| m.track_id);
        for m in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(set.frequency_hz),
                m.track_id,
                fmt_f64(m.t.re),
                fmt_f64(m.t.im),
                fmt_f64(m.t.norm()),
                fmt_f64(m.s.norm()),
            ));
        }
    }
    out
}

/// Pattern CSV: far-field components and normalized power in dB per point.
pub fn pattern_csv(
    pattern: &crate::basis::FarFieldPattern,
    scene_hash: &str,
    padding: usize,
) -> String {
    let mut out = csv_metadata_lines(scene_hash, padding);
    out.push_str("theta_deg,phi_deg,re_e_theta,im_e_theta,re_e_phi,im_e_phi,power_db\n");
    let d = 180.0 / std::f64::consts::PI;
    for (i, &(theta, phi)) in pattern.grid.iter().enumerate() {
        let p = pattern.power_normalized[i].max(1e-300);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(theta * d),
            fmt_f64(phi * d),
            fmt_f64(pattern.e_theta[i].re),
            fmt_f64(pattern.e_theta[i].im),
            fmt_f64(pattern.e_phi[i].re),
            fmt_f64(pattern.e_phi[i].im),
            fmt_f64(10.0 * p.log10()),
        ));
    }
    out
}

/// Resolve a structure source to its T-matrix in a given basis; convenience
/// used by the CLI `rotate` subcommand.
pub fn source_tmatrix(source: &StructureSource, k: f64, basis: &BasisSpec) -> Result<TMatrix> {
    match source {
        StructureSource::Sphere(spec) => crate::mie::layered_sphere_tmatrix(k, spec, basis),
        StructureSource::Matrix(t) => {
            basis.check_same(&t.basis)?;
            Ok(t.clone())
        }
    }
}
