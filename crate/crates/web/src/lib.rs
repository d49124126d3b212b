//! Browser bindings: each entry point takes and returns a JSON string.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use holodof::closedform::{
    edof_nonparax, edof_paraxial, op_norm_paraxial, support_overlap, supports_nonparax, WavenumberSupport,
};
use holodof::geometry::{
    grid_size, optimal_orientation, parametrize_tx, partition_rx, spherical_center, upsilon_explicit, validity_paraxial,
    Deployment, PhysicalConstants, Validity,
};
use holodof::kernel::gbar_nonparax;
use holodof::spectrum::{assemble_shift_invariant, eigen_spectrum};
use holodof::Vec3;

/// Largest Tx grid the spectrum demo will build.
pub const DEMO_MAX_NODES: usize = 1600;

fn lam() -> f64 {
    PhysicalConstants::default().wavelength
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseInput {
    pub distance_lambda: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    #[serde(default)]
    pub alpha_deg: f64,
    #[serde(default)]
    pub beta_deg: f64,
    pub tx_side_lambda: f64,
    pub rx_side_lambda: f64,
}

#[derive(Debug, Serialize)]
pub struct PoseOutput {
    pub upsilon: f64,
    pub edof: f64,
    pub edof_rounded: u64,
    pub op_norm: Option<f64>,
    pub optimal_alpha_deg: Option<f64>,
    pub optimal_beta_deg: Option<f64>,
    pub optimal_edof: Option<f64>,
    pub valid: bool,
}

fn pose_deployment(p: &PoseInput, alpha: f64, beta: f64) -> holodof::Result<Deployment> {
    let l = lam();
    Deployment::from_spherical(
        PhysicalConstants::default(),
        p.distance_lambda * l,
        deg(p.theta_deg),
        deg(p.phi_deg),
        alpha,
        beta,
        [p.tx_side_lambda * l / 2.0; 2],
        [p.rx_side_lambda * l / 2.0; 2],
    )
}

/// Paraxial count for a pose, plus the count at the best Rx orientation.
pub fn pose_edof(input: &str) -> Result<String, String> {
    let p: PoseInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let dep = pose_deployment(&p, deg(p.alpha_deg), deg(p.beta_deg)).map_err(|e| e.to_string())?;
    let r = edof_paraxial(&dep);
    let opt = optimal_orientation(dep.center).ok();
    let optimal_edof = match opt {
        Some((a, b)) => Some(edof_paraxial(&pose_deployment(&p, a, b).map_err(|e| e.to_string())?).value),
        None => None,
    };
    let out = PoseOutput {
        upsilon: upsilon_explicit(dep.center, dep.alpha, dep.beta),
        edof: r.value,
        edof_rounded: r.floored,
        op_norm: op_norm_paraxial(&dep).ok(),
        optimal_alpha_deg: opt.map(|(a, _)| a.to_degrees()),
        optimal_beta_deg: opt.map(|(_, b)| b.to_degrees()),
        optimal_edof,
        valid: validity_paraxial(&dep).status == Validity::Valid,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitInput {
    /// Rx centre in wavelengths.
    pub center_lambda: [f64; 3],
    #[serde(default)]
    pub alpha_deg: f64,
    #[serde(default)]
    pub beta_deg: f64,
    pub tx_side_lambda: f64,
    pub rx_side_lambda: [f64; 2],
    pub n_u: usize,
    pub n_v: usize,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_density")]
    pub points_per_lambda: f64,
}

fn default_density() -> f64 {
    1.0
}

fn split_deployment(p: &SplitInput) -> holodof::Result<Deployment> {
    let l = lam();
    let c = Vec3::from(p.center_lambda) * l;
    Deployment::new(
        PhysicalConstants::default(),
        c,
        deg(p.alpha_deg),
        deg(p.beta_deg),
        [p.tx_side_lambda * l / 2.0; 2],
        [p.rx_side_lambda[0] * l / 2.0, p.rx_side_lambda[1] * l / 2.0],
    )
}

#[derive(Debug, Serialize)]
pub struct SupportOut {
    /// Vertices in units of κ0.
    pub vertices: Vec<[f64; 2]>,
    pub edof: f64,
}

#[derive(Debug, Serialize)]
pub struct SupportsOutput {
    pub supports: Vec<SupportOut>,
    /// Sum of pairwise overlaps over the sum of measures.
    pub overlap_fraction: f64,
    pub edof: f64,
    pub included: Vec<usize>,
}

fn scaled(s: &WavenumberSupport, k0: f64) -> Vec<[f64; 2]> {
    s.vertices.iter().map(|v| [v[0] / k0, v[1] / k0]).collect()
}

/// Wavenumber supports of every piece and the split count at `gamma`.
pub fn piece_supports(input: &str) -> Result<String, String> {
    let p: SplitInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    if p.n_u * p.n_v > 1024 {
        return Err("at most 1024 pieces".into());
    }
    let run = || -> holodof::Result<SupportsOutput> {
        let dep = split_deployment(&p)?;
        let part = partition_rx(&dep, p.n_u, p.n_v)?;
        let sup = supports_nonparax(&dep, &part)?;
        let k0 = dep.constants.kappa0;
        let total: f64 = sup.iter().map(|s| s.measure).sum();
        let mut shared = 0.0;
        for i in 0..sup.len() {
            for j in i + 1..sup.len() {
                shared += support_overlap(&sup[i], &sup[j]);
            }
        }
        let r = edof_nonparax(&dep, &part, p.gamma)?;
        let area = dep.tx_area();
        Ok(SupportsOutput {
            supports: sup
                .iter()
                .map(|s| SupportOut {
                    vertices: scaled(s, k0),
                    edof: s.measure * area / (4.0 * PI * PI),
                })
                .collect(),
            overlap_fraction: shared / total,
            edof: r.value,
            included: r.included,
        })
    };
    let out = run().map_err(|e| e.to_string())?;
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct SpectrumOutput {
    /// Eigenvalues over the largest piece norm, descending.
    pub normalized: Vec<f64>,
    pub levels: Vec<f64>,
    pub nodes: usize,
    pub count: usize,
    pub closed_form: f64,
}

/// Eigenvalues of the split-receiver Tx kernel on a coarse grid.
pub fn split_spectrum(input: &str) -> Result<String, String> {
    let p: SplitInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let run = || -> Result<SpectrumOutput, String> {
        let dep = split_deployment(&p).map_err(|e| e.to_string())?;
        let part = partition_rx(&dep, p.n_u, p.n_v).map_err(|e| e.to_string())?;
        let n_u = grid_size(dep.tx_half[0], p.points_per_lambda, dep.wavelength());
        let n_v = grid_size(dep.tx_half[1], p.points_per_lambda, dep.wavelength());
        if n_u * n_v > DEMO_MAX_NODES {
            return Err(format!("{n_u}x{n_v} grid exceeds {DEMO_MAX_NODES} nodes; lower the density"));
        }
        let tx = parametrize_tx(&dep, n_u, n_v).map_err(|e| e.to_string())?;
        let g = gbar_nonparax(&dep, &part).map_err(|e| e.to_string())?;
        let s = eigen_spectrum(&assemble_shift_invariant(&tx, |du, dv| g.eval(du, dv)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let levels: Vec<f64> = g.parts.iter().map(|(gs, _)| gs.op_norm).collect();
        let top = levels.iter().cloned().fold(0.0, f64::max);
        let r = edof_nonparax(&dep, &part, p.gamma).map_err(|e| e.to_string())?;
        let mut rel: Vec<f64> = levels.iter().map(|l| l / top).collect();
        rel.sort_by(|a, b| b.total_cmp(a));
        rel.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        Ok(SpectrumOutput {
            count: s.eigs.iter().filter(|&&e| e >= p.gamma * top).count(),
            normalized: s.eigs.iter().take(200).map(|e| e / top).collect(),
            levels: rel,
            nodes: tx.len(),
            closed_form: r.value,
        })
    };
    let out = run()?;
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = poseEdof)]
pub fn pose_edof_js(input: &str) -> Result<String, JsValue> {
    js(pose_edof(input))
}

#[wasm_bindgen(js_name = pieceSupports)]
pub fn piece_supports_js(input: &str) -> Result<String, JsValue> {
    js(piece_supports(input))
}

#[wasm_bindgen(js_name = splitSpectrum)]
pub fn split_spectrum_js(input: &str) -> Result<String, JsValue> {
    js(split_spectrum(input))
}

/// Rx centre in wavelengths for a spherical pose, for the page's inputs.
#[wasm_bindgen(js_name = sphericalCenter)]
pub fn spherical_center_js(distance_lambda: f64, theta_deg: f64, phi_deg: f64) -> Vec<f64> {
    let c = spherical_center(distance_lambda, deg(theta_deg), deg(phi_deg));
    vec![c.x, c.y, c.z]
}
