//! Surface placement, parametrization, partitioning and the τ coefficients
//! that describe how a receiving sub-surface is seen from the transmitter.
//!
//! The transmitter lies in the x–z plane centred at the origin and is
//! parametrized as `(u, 0, v)`. The receiver is centred at `c_o` with its
//! in-plane axes rotated by `α` (about z) and `β` (tilt out of the x–y
//! plane).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::Vec3;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Free-space wave impedance μ0·c in ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730_313_668;
/// Ratio used for every "much greater than" check.
pub const VALIDITY_RATIO: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub frequency: f64,
    pub wavelength: f64,
    pub kappa0: f64,
    pub eta: f64,
}

impl PhysicalConstants {
    pub fn from_frequency(frequency: f64) -> Result<Self> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return invalid(format!("frequency must be positive, got {frequency}"));
        }
        let wavelength = SPEED_OF_LIGHT / frequency;
        Ok(Self {
            frequency,
            wavelength,
            kappa0: 2.0 * std::f64::consts::PI / wavelength,
            eta: FREE_SPACE_IMPEDANCE,
        })
    }

    pub fn from_wavelength(wavelength: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return invalid(format!("wavelength must be positive, got {wavelength}"));
        }
        Self::from_frequency(SPEED_OF_LIGHT / wavelength)
    }
}

impl Default for PhysicalConstants {
    /// 28 GHz carrier.
    fn default() -> Self {
        Self::from_frequency(28e9).expect("positive frequency")
    }
}

/// Cartesian unit vector for a polarization axis name (`x`, `y` or `z`).
pub fn polarization_axis(name: &str) -> Result<Vec3> {
    match name.trim().to_ascii_lowercase().as_str() {
        "x" => Ok(Vec3::x()),
        "y" => Ok(Vec3::y()),
        "z" => Ok(Vec3::z()),
        other => invalid(format!("unknown polarization axis '{other}'")),
    }
}

/// Complete description of a Tx/Rx surface pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub constants: PhysicalConstants,
    /// Rx centre `c_o`; the Tx centre is the origin.
    pub center: Vec3,
    pub alpha: f64,
    pub beta: f64,
    /// Half side lengths `[U_Tx, V_Tx]`.
    pub tx_half: [f64; 2],
    /// Half side lengths `[U_Rx, V_Rx]`.
    pub rx_half: [f64; 2],
    pub pol_tx: Vec3,
    pub pol_rx: Vec3,
}

impl Deployment {
    pub fn new(
        constants: PhysicalConstants,
        center: Vec3,
        alpha: f64,
        beta: f64,
        tx_half: [f64; 2],
        rx_half: [f64; 2],
    ) -> Result<Self> {
        let dep = Self {
            constants,
            center,
            alpha,
            beta,
            tx_half,
            rx_half,
            pol_tx: Vec3::x(),
            pol_rx: Vec3::x(),
        };
        dep.validate()?;
        Ok(dep)
    }

    /// Places the Rx centre at distance `d` with elevation `theta` and
    /// azimuth `phi`: `c_o = d (sinφ cosθ, cosφ cosθ, sinθ)`.
    pub fn from_spherical(
        constants: PhysicalConstants,
        distance: f64,
        theta: f64,
        phi: f64,
        alpha: f64,
        beta: f64,
        tx_half: [f64; 2],
        rx_half: [f64; 2],
    ) -> Result<Self> {
        Self::new(
            constants,
            spherical_center(distance, theta, phi),
            alpha,
            beta,
            tx_half,
            rx_half,
        )
    }

    pub fn with_polarization(mut self, pol_tx: Vec3, pol_rx: Vec3) -> Result<Self> {
        self.pol_tx = pol_tx;
        self.pol_rx = pol_rx;
        self.validate()?;
        Ok(self)
    }

    pub fn with_orientation(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    fn validate(&self) -> Result<()> {
        let lambda = self.constants.wavelength;
        for (name, h) in [("tx", self.tx_half), ("rx", self.rx_half)] {
            if !h.iter().all(|x| x.is_finite() && *x > 0.0) {
                return invalid(format!("{name} half-lengths must be positive, got {h:?}"));
            }
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return invalid("orientation angles must be finite");
        }
        let d = self.center.norm();
        if !d.is_finite() || d < 3.0 * lambda {
            return invalid(format!(
                "centre distance {d} is outside the radiative region (needs >= 3 wavelengths)"
            ));
        }
        for (name, p) in [("tx", self.pol_tx), ("rx", self.pol_rx)] {
            if (p.norm() - 1.0).abs() > 1e-9 {
                return invalid(format!("{name} polarization must be a unit vector"));
            }
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        self.constants.wavelength
    }

    pub fn tx_area(&self) -> f64 {
        4.0 * self.tx_half[0] * self.tx_half[1]
    }

    pub fn rx_area(&self) -> f64 {
        4.0 * self.rx_half[0] * self.rx_half[1]
    }

    /// In-plane Rx axes `(e_u, e_v)`.
    pub fn rx_axes(&self) -> (Vec3, Vec3) {
        rx_axes(self.alpha, self.beta)
    }

    /// Rx normal `e_u × e_v`.
    pub fn rx_normal(&self) -> Vec3 {
        let (eu, ev) = self.rx_axes();
        eu.cross(&ev)
    }

    /// Rx point for local coordinates measured from `c_o`.
    pub fn rx_point(&self, u: f64, v: f64) -> Vec3 {
        let (eu, ev) = self.rx_axes();
        self.center + eu * u + ev * v
    }

    pub fn tx_point(u: f64, v: f64) -> Vec3 {
        Vec3::new(u, 0.0, v)
    }

    /// Single-piece partition covering the whole receiver.
    pub fn whole_rx(&self) -> SubHoloS {
        SubHoloS {
            index: 0,
            center: self.center,
            local_center: [0.0, 0.0],
            half: self.rx_half,
        }
    }
}

pub fn spherical_center(distance: f64, theta: f64, phi: f64) -> Vec3 {
    Vec3::new(
        distance * phi.sin() * theta.cos(),
        distance * phi.cos() * theta.cos(),
        distance * theta.sin(),
    )
}

pub fn rx_axes(alpha: f64, beta: f64) -> (Vec3, Vec3) {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    (Vec3::new(ca, sa, 0.0), Vec3::new(-sb * sa, sb * ca, cb))
}

/// Rectangular piece of the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SubHoloS {
    pub index: usize,
    /// 3-D centre `c_o^n`.
    pub center: Vec3,
    /// Centre in Rx local coordinates.
    pub local_center: [f64; 2],
    pub half: [f64; 2],
}

impl SubHoloS {
    pub fn area(&self) -> f64 {
        4.0 * self.half[0] * self.half[1]
    }

    /// Whether a point given in Rx local coordinates lies on this piece.
    pub fn contains_local(&self, uv: [f64; 2]) -> bool {
        let tol = 1e-12 * (self.half[0] + self.half[1]);
        (uv[0] - self.local_center[0]).abs() <= self.half[0] + tol
            && (uv[1] - self.local_center[1]).abs() <= self.half[1] + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub n_u: usize,
    pub n_v: usize,
    /// Pieces ordered with `u` index outermost: `index = i_u * n_v + i_v`.
    pub subs: Vec<SubHoloS>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.subs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subs.is_empty()
    }

    /// Piece containing a point given in Rx local coordinates.
    pub fn locate(&self, uv: [f64; 2]) -> Option<usize> {
        self.subs.iter().position(|s| s.contains_local(uv))
    }
}

/// Splits the receiver into `n_u × n_v` equal rectangles.
pub fn partition_rx(dep: &Deployment, n_u: usize, n_v: usize) -> Result<Partition> {
    if n_u == 0 || n_v == 0 {
        return invalid("partition counts must be at least 1");
    }
    let (eu, ev) = dep.rx_axes();
    let hu = dep.rx_half[0] / n_u as f64;
    let hv = dep.rx_half[1] / n_v as f64;
    let mut subs = Vec::with_capacity(n_u * n_v);
    for i in 0..n_u {
        let uc = -dep.rx_half[0] + (2 * i + 1) as f64 * hu;
        for j in 0..n_v {
            let vc = -dep.rx_half[1] + (2 * j + 1) as f64 * hv;
            subs.push(SubHoloS {
                index: i * n_v + j,
                center: dep.center + eu * uc + ev * vc,
                local_center: [uc, vc],
                half: [hu, hv],
            });
        }
    }
    Ok(Partition { n_u, n_v, subs })
}

/// Sampled surface: nodes, their local coordinates and quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub points: Vec<Vec3>,
    pub local: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// `(n_u, n_v)` for tensor grids built by the parametrizers, with node
    /// index `i_u * n_v + i_v`.
    pub dims: Option<[usize; 2]>,
    pub spacing: Option<[f64; 2]>,
}

impl SurfaceGrid {
    /// Grid from explicit nodes (no tensor structure).
    pub fn from_nodes(points: Vec<Vec3>, local: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != local.len() || points.len() != weights.len() {
            return invalid("grid node, coordinate and weight counts differ");
        }
        if points.is_empty() {
            return invalid("grid must contain at least one node");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return invalid("grid weights must be positive");
        }
        Ok(Self {
            points,
            local,
            weights,
            dims: None,
            spacing: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Nodes per side for a given sampling density, never fewer than 2.
pub fn grid_size(half_length: f64, points_per_lambda: f64, wavelength: f64) -> usize {
    let n = (2.0 * half_length / wavelength * points_per_lambda).round();
    (n as usize).max(2)
}

fn midpoints(half: f64, n: usize) -> Vec<f64> {
    let h = 2.0 * half / n as f64;
    (0..n).map(|k| -half + (k as f64 + 0.5) * h).collect()
}

fn tensor_grid(
    half: [f64; 2],
    offset: [f64; 2],
    n_u: usize,
    n_v: usize,
    map: impl Fn(f64, f64) -> Vec3,
) -> Result<SurfaceGrid> {
    if n_u < 2 || n_v < 2 {
        return invalid(format!("grid needs at least 2 nodes per side, got {n_u}x{n_v}"));
    }
    let us = midpoints(half[0], n_u);
    let vs = midpoints(half[1], n_v);
    let du = 2.0 * half[0] / n_u as f64;
    let dv = 2.0 * half[1] / n_v as f64;
    let mut points = Vec::with_capacity(n_u * n_v);
    let mut local = Vec::with_capacity(n_u * n_v);
    for &u in &us {
        for &v in &vs {
            let (lu, lv) = (u + offset[0], v + offset[1]);
            points.push(map(lu, lv));
            local.push([lu, lv]);
        }
    }
    Ok(SurfaceGrid {
        points,
        local,
        weights: vec![du * dv; n_u * n_v],
        dims: Some([n_u, n_v]),
        spacing: Some([du, dv]),
    })
}

/// Midpoint-rule grid on the transmitter.
pub fn parametrize_tx(dep: &Deployment, n_u: usize, n_v: usize) -> Result<SurfaceGrid> {
    tensor_grid(dep.tx_half, [0.0, 0.0], n_u, n_v, Deployment::tx_point)
}

/// Midpoint-rule grid on one receiver piece. Local coordinates are measured
/// from the full Rx centre.
pub fn parametrize_rx(
    dep: &Deployment,
    sub: &SubHoloS,
    n_u: usize,
    n_v: usize,
) -> Result<SurfaceGrid> {
    tensor_grid(sub.half, sub.local_center, n_u, n_v, |u, v| dep.rx_point(u, v))
}

/// Rx grid over the full receiver.
pub fn parametrize_rx_full(dep: &Deployment, n_u: usize, n_v: usize) -> Result<SurfaceGrid> {
    parametrize_rx(dep, &dep.whole_rx(), n_u, n_v)
}

/// Coefficients of the cross-phase between Tx and an Rx piece, plus the
/// normalized Rx bandwidths `U_o`, `V_o`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tau {
    pub t11: f64,
    pub t12: f64,
    pub t21: f64,
    pub t22: f64,
    pub upsilon: f64,
    pub u_o: f64,
    pub v_o: f64,
}

pub(crate) fn tau_raw(dep: &Deployment, sub: &SubHoloS) -> Tau {
    let c = sub.center;
    let (x, y, z) = (c.x, c.y, c.z);
    let n2 = c.norm_squared();
    let (sa, ca) = dep.alpha.sin_cos();
    let (sb, cb) = dep.beta.sin_cos();
    let tau1 = (x * ca + y * sa) / n2;
    let tau2 = (-x * sb * sa + y * sb * ca + z * cb) / n2;
    let t11 = ca - x * tau1;
    let t12 = -z * tau1;
    let t21 = -sb * sa - x * tau2;
    let t22 = cb - z * tau2;
    let scale = 2.0 / (dep.wavelength() * n2.sqrt());
    Tau {
        t11,
        t12,
        t21,
        t22,
        upsilon: t11 * t22 - t12 * t21,
        u_o: scale * sub.half[0],
        v_o: scale * sub.half[1],
    }
}

pub fn tau_coefficients(dep: &Deployment, sub: &SubHoloS) -> Result<Tau> {
    if sub.center.norm() == 0.0 {
        return Err(Error::SingularGeometry("piece centre coincides with the Tx centre".into()));
    }
    let t = tau_raw(dep, sub);
    if t.upsilon.abs() < 1e-12 {
        return Err(Error::SingularGeometry(format!(
            "surfaces are edge-on to each other (upsilon = {:.3e})",
            t.upsilon
        )));
    }
    Ok(t)
}

/// Closed-form `Υ` written directly in the pose variables.
pub fn upsilon_explicit(center: Vec3, alpha: f64, beta: f64) -> f64 {
    let (x, y, z) = (center.x, center.y, center.z);
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    (y * y * ca * cb - y * z * sb - x * y * sa * cb) / center.norm_squared()
}

/// Rx orientation maximizing `|Υ|`, with `α` on the principal branch
/// `(-π/2, π/2)`.
pub fn optimal_orientation(center: Vec3) -> Result<(f64, f64)> {
    let (x, y, z) = (center.x, center.y, center.z);
    if y.abs() <= 1e-12 * center.norm() {
        return Err(Error::UndefinedOrientation(
            "Rx centre lies in the Tx plane (y_o = 0)".into(),
        ));
    }
    let alpha = (-x / y).atan();
    let beta = (z / (x * alpha.sin() - y * alpha.cos())).atan();
    Ok((alpha, beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validity {
    Valid,
    Borderline,
    Questionable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMargin {
    pub sub: usize,
    /// `sqrt(A_Tx A_Rx |Υ|) / (λ ‖c‖)`.
    pub edof_margin: f64,
    /// `‖c‖ / U_max`.
    pub distance_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// Worst of the individual flags.
    pub status: Validity,
    /// Flag for `‖c‖ ≫ U_max`.
    pub distance: Validity,
    /// Flag for `sqrt(A_Tx A_Rx |Υ|)/λ² ≫ ‖c‖/λ`.
    pub edof: Validity,
    /// Both surfaces are comparable to the link distance.
    pub large_pair: bool,
    pub margins: Vec<LinkMargin>,
    pub notes: Vec<String>,
}

impl ValidityReport {
    fn build(dep: &Deployment, margins: Vec<LinkMargin>) -> Self {
        let distance = classify(margins.iter().map(|m| m.distance_margin));
        let edof = classify(margins.iter().map(|m| m.edof_margin));
        let mut notes = Vec::new();
        if distance == Validity::Questionable {
            notes.push("surface sides are not small compared to the link distance".to_string());
        }
        if edof == Validity::Questionable {
            notes.push("too few degrees of freedom for the asymptotic count".to_string());
        }
        let large_pair = push_large_pair_note(dep, &mut notes);
        let status = if large_pair {
            Validity::Questionable
        } else {
            worst(distance, edof)
        };
        Self {
            status,
            distance,
            edof,
            large_pair,
            margins,
            notes,
        }
    }
}

fn worst(a: Validity, b: Validity) -> Validity {
    use Validity::*;
    match (a, b) {
        (Questionable, _) | (_, Questionable) => Questionable,
        (Borderline, _) | (_, Borderline) => Borderline,
        _ => Valid,
    }
}

fn link_margin(dep: &Deployment, sub: &SubHoloS) -> LinkMargin {
    let t = tau_raw(dep, sub);
    let d = sub.center.norm();
    let lambda = dep.wavelength();
    let u_max = 2.0 * dep.tx_half[0].max(dep.tx_half[1]).max(sub.half[0]).max(sub.half[1]);
    LinkMargin {
        sub: sub.index,
        edof_margin: (dep.tx_area() * sub.area() * t.upsilon.abs()).sqrt() / (lambda * d),
        distance_margin: d / u_max,
    }
}

fn classify(margins: impl Iterator<Item = f64>) -> Validity {
    let worst = margins.fold(f64::INFINITY, f64::min);
    let eps = 1e-9 * VALIDITY_RATIO;
    if worst < VALIDITY_RATIO - eps {
        Validity::Questionable
    } else if worst <= VALIDITY_RATIO + eps {
        Validity::Borderline
    } else {
        Validity::Valid
    }
}

/// Checks the scale separation behind the single-piece closed forms.
pub fn validity_paraxial(dep: &Deployment) -> ValidityReport {
    ValidityReport::build(dep, vec![link_margin(dep, &dep.whole_rx())])
}

/// Checks the scale separation for every piece of a partition.
pub fn validity_nonparaxial(dep: &Deployment, part: &Partition) -> ValidityReport {
    ValidityReport::build(dep, part.subs.iter().map(|s| link_margin(dep, s)).collect())
}

fn push_large_pair_note(dep: &Deployment, notes: &mut Vec<String>) -> bool {
    let d = dep.center.norm();
    let tx = 2.0 * dep.tx_half[0].max(dep.tx_half[1]);
    let rx = 2.0 * dep.rx_half[0].max(dep.rx_half[1]);
    let large = tx * VALIDITY_RATIO > d && rx * VALIDITY_RATIO > d;
    if large {
        notes.push(
            "both surfaces are large relative to the link distance: the transmit-side \
             kernel is not a convolution and the closed forms do not apply"
                .to_string(),
        );
    }
    large
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    fn lam() -> f64 {
        PhysicalConstants::default().wavelength
    }

    fn paraxial(theta: f64, phi: f64) -> Deployment {
        let l = lam();
        Deployment::from_spherical(
            PhysicalConstants::default(),
            256.0 * l,
            theta,
            phi,
            0.0,
            FRAC_PI_2,
            [16.0 * l; 2],
            [16.0 * l; 2],
        )
        .unwrap()
    }

    #[test]
    fn constants_at_28_ghz() {
        let c = PhysicalConstants::default();
        assert!((c.wavelength - 1.0707e-2).abs() < 1e-5);
        assert!((c.kappa0 * c.wavelength - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn tx_grid_of_4x4_nodes() {
        let l = lam();
        let dep = paraxial(FRAC_PI_4, 0.0);
        let g = parametrize_tx(&dep, 4, 4).unwrap();
        assert_eq!(g.len(), 16);
        let w = 8.0 * l;
        for wi in &g.weights {
            assert!((wi - w * w).abs() < 1e-18);
        }
        assert!((g.total_weight() - dep.tx_area()).abs() < 1e-15);
        let mut us: Vec<f64> = g.local.iter().map(|p| p[0] / l).collect();
        us.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let expect = [-12.0, -4.0, 4.0, 12.0];
        for (a, b) in us.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
        for (p, uv) in g.points.iter().zip(&g.local) {
            assert_eq!(p.y, 0.0);
            assert_eq!(p.x, uv[0]);
            assert_eq!(p.z, uv[1]);
        }
    }

    #[test]
    fn grid_rejects_single_node() {
        let dep = paraxial(FRAC_PI_4, 0.0);
        assert!(parametrize_tx(&dep, 1, 4).is_err());
    }

    #[test]
    fn rx_ceiling_pose_maps_v_to_y() {
        let l = lam();
        let c = Vec3::new(0.0, 100.0 * l, 50.0 * l);
        let dep = Deployment::new(PhysicalConstants::default(), c, 0.0, FRAC_PI_2, [l; 2], [l; 2]).unwrap();
        let p = dep.rx_point(0.3 * l, 0.7 * l);
        assert!((p - Vec3::new(0.3 * l, 100.7 * l, 50.0 * l)).norm() < 1e-15);
    }

    #[test]
    fn rx_axes_orthonormal() {
        for (a, b) in [(0.3, -1.1), (2.0, 0.4), (-0.7, 3.0)] {
            let (eu, ev) = rx_axes(a, b);
            assert!((eu.norm() - 1.0).abs() < 1e-15);
            assert!((ev.norm() - 1.0).abs() < 1e-15);
            assert!(eu.dot(&ev).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_2x2_centres() {
        let l = lam();
        let dep = paraxial(0.0, 0.0).with_orientation(0.0, 0.0);
        let dep = Deployment { rx_half: [32.0 * l; 2], ..dep };
        let p = partition_rx(&dep, 2, 2).unwrap();
        assert_eq!(p.len(), 4);
        let area: f64 = p.subs.iter().map(|s| s.area()).sum();
        assert!((area - dep.rx_area()).abs() < 1e-12 * dep.rx_area());
        for s in &p.subs {
            assert!((s.local_center[0].abs() - 16.0 * l).abs() < 1e-12);
            assert!((s.local_center[1].abs() - 16.0 * l).abs() < 1e-12);
            let back = dep.rx_point(s.local_center[0], s.local_center[1]);
            assert!((back - s.center).norm() < 1e-12);
        }
    }

    #[test]
    fn tau_broadside_identity() {
        let l = lam();
        let dep = Deployment::new(
            PhysicalConstants::default(),
            Vec3::new(0.0, 32.0 * l, 0.0),
            0.0,
            0.0,
            [4.0 * l; 2],
            [32.0 * l; 2],
        )
        .unwrap();
        let t = tau_coefficients(&dep, &dep.whole_rx()).unwrap();
        assert!((t.t11 - 1.0).abs() < 1e-15 && (t.t22 - 1.0).abs() < 1e-15);
        assert!(t.t12.abs() < 1e-15 && t.t21.abs() < 1e-15);
        assert!((t.upsilon - 1.0).abs() < 1e-15);
        assert!((t.u_o * l - 2.0).abs() < 1e-12 && (t.v_o * l - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tau_matches_explicit_upsilon() {
        let dep = paraxial(0.6, FRAC_PI_6).with_orientation(0.2, 1.1);
        let t = tau_raw(&dep, &dep.whole_rx());
        let e = upsilon_explicit(dep.center, 0.2, 1.1);
        assert!((t.upsilon - e).abs() < 1e-14);
    }

    #[test]
    fn tau_rejects_edge_on() {
        let dep = paraxial(0.0, 0.0);
        assert!(matches!(
            tau_coefficients(&dep, &dep.whole_rx()),
            Err(Error::SingularGeometry(_))
        ));
    }

    #[test]
    fn optimal_orientation_spherical() {
        let (theta, phi) = (0.4, -0.9);
        let (a, b) = optimal_orientation(spherical_center(10.0, theta, phi)).unwrap();
        assert!((a + phi).abs() < 1e-12);
        assert!((b + theta).abs() < 1e-12);
    }

    #[test]
    fn optimal_orientation_undefined_in_tx_plane() {
        assert!(matches!(
            optimal_orientation(Vec3::new(1.0, 0.0, 2.0)),
            Err(Error::UndefinedOrientation(_))
        ));
    }

    #[test]
    fn validity_examples() {
        let l = lam();
        let broadside = paraxial(0.0, 0.0).with_orientation(0.0, 0.0);
        let r = validity_paraxial(&broadside);
        assert!((r.margins[0].distance_margin - 8.0).abs() < 1e-12);
        assert_eq!(r.distance, Validity::Valid);
        assert_eq!(r.edof, Validity::Borderline);

        let sub = Deployment::new(
            PhysicalConstants::default(),
            Vec3::new(0.0, 32.0 * l, 0.0),
            0.0,
            0.0,
            [4.0 * l; 2],
            [4.0 * l; 2],
        )
        .unwrap();
        let r = validity_paraxial(&sub);
        assert!((r.margins[0].distance_margin - 4.0).abs() < 1e-12);
        assert_eq!(r.distance, Validity::Borderline);
        assert_eq!(r.edof, Validity::Questionable);

        let big = Deployment::new(
            PhysicalConstants::default(),
            Vec3::new(0.0, 32.0 * l, 0.0),
            0.0,
            0.0,
            [16.0 * l; 2],
            [16.0 * l; 2],
        )
        .unwrap();
        let part = partition_rx(&big, 4, 4).unwrap();
        let r = validity_nonparaxial(&big, &part);
        assert!(r.large_pair);
        assert_eq!(r.status, Validity::Questionable);
        assert!(r.notes.iter().any(|n| n.contains("not a convolution")));
    }

    #[test]
    fn rejects_reactive_distance() {
        let l = lam();
        let r = Deployment::new(
            PhysicalConstants::default(),
            Vec3::new(0.0, 2.0 * l, 0.0),
            0.0,
            0.0,
            [l; 2],
            [l; 2],
        );
        assert!(r.is_err());
    }
}
