//! Closed-form operator norms, wavenumber supports and degree-of-freedom
//! counts.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{tau_coefficients, tau_raw, upsilon_explicit, Deployment, Partition, SubHoloS};
use crate::kernel::{gbar_amplitude, wavenumber_shift};
use crate::polygon::{self, Point};

/// Relative slack when deciding which pieces reach a normalized threshold.
const TIE_TOL: f64 = 1e-12;

/// Operator norm `|ḡ|² λ² ‖c‖² / |Υ|` of one Rx piece.
pub fn op_norm_sub(dep: &Deployment, sub: &SubHoloS) -> Result<f64> {
    let t = tau_coefficients(dep, sub)?;
    let g2 = gbar_amplitude(dep, &sub.center).norm_sqr();
    let l = dep.wavelength();
    Ok(g2 * l * l * sub.center.norm_squared() / t.upsilon.abs())
}

/// Operator norm of the single-piece Tx kernel.
pub fn op_norm_paraxial(dep: &Deployment) -> Result<f64> {
    op_norm_sub(dep, &dep.whole_rx())
}

/// Parallelogram of wavenumbers occupied by one Rx piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavenumberSupport {
    pub sub: usize,
    pub center: [f64; 2],
    /// Counter-clockwise vertices.
    pub vertices: Vec<Point>,
    /// Closed-form measure `4π² A |Υ| / (λ² ‖c‖²)`.
    pub measure: f64,
}

impl WavenumberSupport {
    pub fn polygon_area(&self) -> f64 {
        polygon::area(&self.vertices)
    }

    /// Whether `[κu, κv]` satisfies both band constraints.
    pub fn contains(&self, k: Point) -> bool {
        let v = &self.vertices;
        (0..v.len()).all(|i| {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            (b[0] - a[0]) * (k[1] - a[1]) - (b[1] - a[1]) * (k[0] - a[0]) >= -1e-12
        })
    }
}

fn support(dep: &Deployment, sub: &SubHoloS, center: [f64; 2]) -> Result<WavenumberSupport> {
    let t = tau_coefficients(dep, sub)?;
    let n = sub.center.norm();
    let k0 = dep.constants.kappa0;
    let ups = t.upsilon;
    let a = sub.half[0] * k0 / n * ups.abs();
    let b = sub.half[1] * k0 / n * ups.abs();
    let corner = |s: f64, q: f64| -> Point {
        [
            center[0] + (t.t11 * s + t.t21 * q) / ups,
            center[1] + (t.t12 * s + t.t22 * q) / ups,
        ]
    };
    let vertices = polygon::ccw(&[corner(a, b), corner(-a, b), corner(-a, -b), corner(a, -b)]);
    let l = dep.wavelength();
    Ok(WavenumberSupport {
        sub: sub.index,
        center,
        vertices,
        measure: 4.0 * PI * PI * sub.area() * ups.abs() / (l * l * n * n),
    })
}

/// Support of the single-piece kernel, centred at the origin.
pub fn support_paraxial(dep: &Deployment) -> Result<WavenumberSupport> {
    support(dep, &dep.whole_rx(), [0.0, 0.0])
}

/// Supports of every piece, each centred at its wavenumber shift.
pub fn supports_nonparax(dep: &Deployment, part: &Partition) -> Result<Vec<WavenumberSupport>> {
    part.subs
        .iter()
        .map(|s| {
            let w = wavenumber_shift(dep, s);
            support(dep, s, [w.ku, w.kv])
        })
        .collect()
}

/// Area shared by two supports.
pub fn support_overlap(a: &WavenumberSupport, b: &WavenumberSupport) -> f64 {
    polygon::overlap_area(&a.vertices, &b.vertices)
}

/// Round half to even.
pub fn round_half_even(x: f64) -> f64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 && r % 2.0 != 0.0 {
        r - x.signum()
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdofReport {
    /// Unrounded sum over included pieces.
    pub value: f64,
    /// `max(1, value)` rounded half to even.
    pub floored: u64,
    /// Pieces included in the sum.
    pub included: Vec<usize>,
}

impl EdofReport {
    fn new(value: f64, included: Vec<usize>) -> Self {
        Self {
            value,
            floored: round_half_even(value.max(1.0)) as u64,
            included,
        }
    }

    /// `max(1, value)` without rounding.
    pub fn bounded(&self) -> f64 {
        self.value.max(1.0)
    }
}

/// `A_Tx A_n |Υ_n| / (λ² ‖c_n‖²)` for one piece; zero when edge-on.
pub fn edof_sub(dep: &Deployment, sub: &SubHoloS) -> f64 {
    let t = tau_raw(dep, sub);
    let l = dep.wavelength();
    dep.tx_area() * sub.area() * t.upsilon.abs() / (l * l * sub.center.norm_squared())
}

/// Single-piece count.
pub fn edof_paraxial(dep: &Deployment) -> EdofReport {
    EdofReport::new(edof_sub(dep, &dep.whole_rx()), vec![0])
}

/// Largest per-piece operator norm and the pieces attaining it.
pub fn op_norm_nonparax(dep: &Deployment, part: &Partition) -> Result<(f64, Vec<usize>)> {
    let norms = part
        .subs
        .iter()
        .map(|s| op_norm_sub(dep, s))
        .collect::<Result<Vec<_>>>()?;
    let max = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let arg = (0..norms.len())
        .filter(|&i| norms[i] >= max * (1.0 - TIE_TOL))
        .collect();
    Ok((max, arg))
}

/// Pieces whose operator norm reaches `gamma_norm` times the largest one.
/// `gamma_norm = 0` selects every piece.
pub fn bandwidth_gamma(dep: &Deployment, part: &Partition, gamma_norm: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&gamma_norm) {
        return invalid(format!("normalized threshold must lie in [0, 1], got {gamma_norm}"));
    }
    let (max, _) = op_norm_nonparax(dep, part)?;
    let gamma = gamma_norm * max * (1.0 - TIE_TOL);
    let mut out = Vec::new();
    for s in &part.subs {
        if op_norm_sub(dep, s)? >= gamma {
            out.push(s.index);
        }
    }
    Ok(out)
}

/// Count of eigenvalues above `gamma_norm` times the largest piece norm.
pub fn edof_nonparax(dep: &Deployment, part: &Partition, gamma_norm: f64) -> Result<EdofReport> {
    let included = bandwidth_gamma(dep, part, gamma_norm)?;
    let value = included.iter().map(|&i| edof_sub(dep, &part.subs[i])).sum();
    Ok(EdofReport::new(value, included))
}

/// Cut-set count `Σ_n κ0² A_Tx A_n Υ_n / ((2π)² ‖c_n‖²)` for a broadside Rx.
pub fn edof_cutset(dep: &Deployment, part: &Partition) -> Result<f64> {
    if dep.alpha != 0.0 || dep.beta != 0.0 {
        return Err(Error::UnsupportedPose(
            "cut-set count needs the Rx parallel to the Tx (alpha = beta = 0)".into(),
        ));
    }
    let k0 = dep.constants.kappa0;
    let pre = k0 * k0 / (4.0 * PI * PI) * dep.tx_area();
    Ok(part
        .subs
        .iter()
        .map(|s| pre * s.area() * upsilon_explicit(s.center, 0.0, 0.0) / s.center.norm_squared())
        .sum())
}
