//! Exact and approximated channel kernels between the Tx and Rx surfaces.
//!
//! Offsets are measured from the Tx centre (the origin) and from the centre
//! `c` of the Rx piece under consideration.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{tau_coefficients, Deployment, Partition, PhysicalConstants, SubHoloS};
use crate::Vec3;

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    let px = PI * x;
    if px.abs() < 1e-6 {
        1.0 - px * px / 6.0
    } else {
        px.sin() / px
    }
}

/// Scalar Green function `jη e^{-jκ0 d} / (2λ d)`.
pub fn green_scalar(distance: f64, k: &PhysicalConstants) -> Result<Complex64> {
    if !(distance > 0.0) {
        return Err(Error::Singularity(format!("distance {distance} is not positive")));
    }
    if distance < 3.0 * k.wavelength {
        log::warn!(
            "distance {:.3} wavelengths is inside the reactive region",
            distance / k.wavelength
        );
    }
    Ok(green_unchecked(distance, k))
}

#[inline]
pub(crate) fn green_unchecked(distance: f64, k: &PhysicalConstants) -> Complex64 {
    let (s, c) = (k.kappa0 * distance).sin_cos();
    let a = k.eta / (2.0 * k.wavelength * distance);
    // j * (c - j s) = s + j c
    Complex64::new(a * s, a * c)
}

/// Polarization coupling `û_i·û_o − (r·û_i)(r·û_o)/‖r‖²` with `r = r_rx − r_tx`.
pub fn coupling_factor(r_tx: &Vec3, r_rx: &Vec3, pol_tx: &Vec3, pol_rx: &Vec3) -> f64 {
    let r = r_rx - r_tx;
    pol_tx.dot(pol_rx) - r.dot(pol_tx) * r.dot(pol_rx) / r.norm_squared()
}

/// Exact kernel `g = G(‖r‖)·e`.
pub fn kernel_exact(r_tx: &Vec3, r_rx: &Vec3, dep: &Deployment) -> Result<Complex64> {
    let d = (r_rx - r_tx).norm();
    let g = green_scalar(d, &dep.constants)?;
    Ok(g * coupling_factor(r_tx, r_rx, &dep.pol_tx, &dep.pol_rx))
}

#[inline]
pub(crate) fn kernel_exact_unchecked(r_tx: &Vec3, r_rx: &Vec3, dep: &Deployment) -> Complex64 {
    let r = r_rx - r_tx;
    let d2 = r.norm_squared();
    let d = d2.sqrt();
    let e = dep.pol_tx.dot(&dep.pol_rx) - r.dot(&dep.pol_tx) * r.dot(&dep.pol_rx) / d2;
    green_unchecked(d, &dep.constants) * e
}

/// Distance expanded to fourth order around the piece centre `c`, keeping
/// the exact `ρ` in the linear term and its linear part in the quadratic
/// term. `dt` and `dr` are the Tx and Rx offsets.
pub fn distance_quartic(dt: &Vec3, dr: &Vec3, c: &Vec3) -> f64 {
    let n = c.norm();
    let delta = dr - dt;
    let rho_lin = 2.0 * c.dot(&delta);
    let rho = rho_lin + delta.norm_squared();
    n * (1.0 + rho / (2.0 * n * n) - rho_lin * rho_lin / (8.0 * n.powi(4)))
}

fn expj(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Tx focusing function for an Rx piece centred at `c`.
pub fn focusing_tx(dt: &Vec3, c: &Vec3, kappa0: f64) -> Complex64 {
    let n = c.norm();
    let s = c.dot(dt);
    expj(kappa0 / (2.0 * n) * (dt.norm_squared() - 2.0 * s - s * s / (n * n)))
}

/// Rx focusing function for an Rx piece centred at `c`.
pub fn focusing_rx(dr: &Vec3, c: &Vec3, kappa0: f64) -> Complex64 {
    let n = c.norm();
    let s = c.dot(dr);
    expj(-kappa0 / (2.0 * n) * (dr.norm_squared() + 2.0 * s - s * s / (n * n)))
}

/// Cross-phase term coupling Tx and Rx offsets.
pub fn coupling_phase_p(dt: &Vec3, dr: &Vec3, c: &Vec3, kappa0: f64) -> Complex64 {
    let n = c.norm();
    expj(kappa0 / n * (dr.dot(dt) - c.dot(dt) * c.dot(dr) / (n * n)))
}

/// Amplitude `ḡ = jη e / (2λ‖c‖)` frozen at the Tx centre and the point `c`.
pub fn gbar_amplitude(dep: &Deployment, c: &Vec3) -> Complex64 {
    let k = &dep.constants;
    let e = coupling_factor(&Vec3::zeros(), c, &dep.pol_tx, &dep.pol_rx);
    Complex64::new(0.0, k.eta * e / (2.0 * k.wavelength * c.norm()))
}

/// Factorized quartic kernel `ḡ e^{-jκ0‖c‖} f_Rx p conj(f_Tx)` for one piece.
pub fn kernel_quartic(dt: &Vec3, dr: &Vec3, dep: &Deployment, sub: &SubHoloS) -> Complex64 {
    let c = &sub.center;
    let k0 = dep.constants.kappa0;
    gbar_amplitude(dep, c)
        * expj(-k0 * c.norm())
        * focusing_rx(dr, c, k0)
        * coupling_phase_p(dt, dr, c, k0)
        * focusing_tx(dt, c, k0).conj()
}

/// Shift-invariant Tx kernel of one Rx piece:
/// `|ḡ|² A sinc(U_o(τ11Δu + τ12Δv)) sinc(V_o(τ21Δu + τ22Δv))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbarSub {
    pub scale: f64,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    /// `|ḡ|² λ²‖c‖²/|Υ|`.
    pub op_norm: f64,
}

impl GbarSub {
    #[inline]
    pub fn eval(&self, du: f64, dv: f64) -> f64 {
        self.scale * sinc(self.a11 * du + self.a12 * dv) * sinc(self.a21 * du + self.a22 * dv)
    }
}

pub fn gbar_sub(dep: &Deployment, sub: &SubHoloS) -> Result<GbarSub> {
    let t = tau_coefficients(dep, sub)?;
    let g2 = gbar_amplitude(dep, &sub.center).norm_sqr();
    let lambda = dep.wavelength();
    let n2 = sub.center.norm_squared();
    Ok(GbarSub {
        scale: g2 * sub.area(),
        a11: t.u_o * t.t11,
        a12: t.u_o * t.t12,
        a21: t.v_o * t.t21,
        a22: t.v_o * t.t22,
        op_norm: g2 * lambda * lambda * n2 / t.upsilon.abs(),
    })
}

/// Wavenumber shift `(κ0 x/‖c‖, κ0 z/‖c‖)` of an Rx piece.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WavenumberShift {
    pub ku: f64,
    pub kv: f64,
}

pub fn wavenumber_shift(dep: &Deployment, sub: &SubHoloS) -> WavenumberShift {
    let c = &sub.center;
    let s = dep.constants.kappa0 / c.norm();
    WavenumberShift {
        ku: s * c.x,
        kv: s * c.z,
    }
}

/// Sum over pieces of the modulated per-piece kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct GbarNonparax {
    pub parts: Vec<(GbarSub, WavenumberShift)>,
}

impl GbarNonparax {
    pub fn eval(&self, du: f64, dv: f64) -> Complex64 {
        self.parts
            .iter()
            .map(|(g, s)| expj(-(s.ku * du + s.kv * dv)) * g.eval(du, dv))
            .sum()
    }
}

pub fn gbar_nonparax(dep: &Deployment, part: &Partition) -> Result<GbarNonparax> {
    let parts = part
        .subs
        .iter()
        .map(|s| Ok((gbar_sub(dep, s)?, wavenumber_shift(dep, s))))
        .collect::<Result<Vec<_>>>()?;
    Ok(GbarNonparax { parts })
}

/// Focusing function of the full Rx centre with the linear phase removed.
pub fn fbar_tx(dt: &Vec3, dep: &Deployment) -> Complex64 {
    let c = &dep.center;
    let n = c.norm();
    let s = c.dot(dt);
    expj(dep.constants.kappa0 / (2.0 * n) * (dt.norm_squared() - s * s / (n * n)))
}

/// Tx kernel built from the focusing functions of every piece:
/// `Σ_n f_Tx^n(a) conj(f_Tx^n(b)) Ḡ^n(a − b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeKernel {
    kappa0: f64,
    parts: Vec<(GbarSub, Vec3)>,
}

impl CompositeKernel {
    pub fn new(dep: &Deployment, part: &Partition) -> Result<Self> {
        let parts = part
            .subs
            .iter()
            .map(|s| Ok((gbar_sub(dep, s)?, s.center)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kappa0: dep.constants.kappa0,
            parts,
        })
    }

    pub fn eval(&self, a: &Vec3, b: &Vec3) -> Complex64 {
        let d = a - b;
        self.parts
            .iter()
            .map(|(g, c)| {
                focusing_tx(a, c, self.kappa0)
                    * focusing_tx(b, c, self.kappa0).conj()
                    * g.eval(d.x, d.z)
            })
            .sum()
    }
}
