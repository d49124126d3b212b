//! Prolate-spheroidal eigenfunctions of the Tx kernels and their
//! propagation to the receiver.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{tau_coefficients, Deployment, Partition, SubHoloS, SurfaceGrid};
use crate::kernel::{fbar_tx, focusing_tx, gbar_sub, wavenumber_shift, WavenumberShift};
use crate::spectrum::{assemble_channel, assemble_shift_invariant, eigen_decomposition};
use crate::Vec3;

/// Off-diagonal τ entries below this (relative) count as zero.
const SEPARABLE_TOL: f64 = 1e-9;
/// Eigenvalues closer than this (relative) are ordered by mode indices.
const TIE_TOL: f64 = 1e-12;

/// Eigenfunctions of `sin(Ω(x−y))/(π(x−y))` on `[-a, a]` with `Ω a = p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PswfBasis {
    pub p: f64,
    pub half: f64,
    pub nodes: Vec<f64>,
    pub step: f64,
    /// Concentrations, descending.
    pub eigenvalues: Vec<f64>,
    /// Samples at the nodes, unit `L²` norm, positive at the first
    /// significant node from the left.
    pub functions: Vec<Vec<f64>>,
}

fn sinc_kernel(omega: f64, d: f64) -> f64 {
    if d.abs() * omega < 1e-8 {
        omega / std::f64::consts::PI
    } else {
        (omega * d).sin() / (std::f64::consts::PI * d)
    }
}

/// Default quadrature size for a given bandwidth parameter.
pub fn pswf_nodes(p: f64) -> usize {
    ((16.0 * p / std::f64::consts::PI).ceil() as usize + 96).min(1500)
}

/// Nyström solution of the 1-D band-limited concentration problem.
pub fn pswf_basis(p: f64, half: f64, n_modes: usize, n_nodes: usize) -> Result<PswfBasis> {
    if !(p.is_finite() && p > 0.0 && half > 0.0) {
        return invalid(format!("bandwidth parameter and half-length must be positive, got {p}, {half}"));
    }
    if n_nodes < 2 || n_modes == 0 || n_modes > n_nodes {
        return invalid(format!("need 1 <= modes <= nodes and nodes >= 2, got {n_modes}, {n_nodes}"));
    }
    let step = 2.0 * half / n_nodes as f64;
    let nodes: Vec<f64> = (0..n_nodes).map(|k| -half + (k as f64 + 0.5) * step).collect();
    let omega = p / half;
    let a = Mat::<f64>::from_fn(n_nodes, n_nodes, |i, j| step * sinc_kernel(omega, nodes[i] - nodes[j]));
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut eigenvalues = Vec::with_capacity(n_modes);
    let mut functions = Vec::with_capacity(n_modes);
    let scale = 1.0 / step.sqrt();
    for m in 0..n_modes {
        let col = n_nodes - 1 - m;
        eigenvalues.push(s[col].clamp(0.0, 1.0));
        let mut f: Vec<f64> = (0..n_nodes).map(|i| u[(i, col)] * scale).collect();
        let peak = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let first = f.iter().find(|x| x.abs() > 1e-6 * peak).copied().unwrap_or(1.0);
        if first < 0.0 {
            f.iter_mut().for_each(|x| *x = -*x);
        }
        functions.push(f);
    }
    Ok(PswfBasis {
        p,
        half,
        nodes,
        step,
        eigenvalues,
        functions,
    })
}

impl PswfBasis {
    /// Value of mode `m` at `x`, by Nyström interpolation.
    pub fn eval(&self, m: usize, x: f64) -> f64 {
        let mu = self.eigenvalues[m];
        let f = &self.functions[m];
        if mu > 1e-10 {
            let omega = self.p / self.half;
            let s: f64 = self
                .nodes
                .iter()
                .zip(f)
                .map(|(y, fy)| sinc_kernel(omega, x - y) * fy)
                .sum();
            s * self.step / mu
        } else {
            let t = ((x + self.half) / self.step - 0.5).clamp(0.0, (f.len() - 1) as f64);
            let i = (t.floor() as usize).min(f.len() - 2);
            let w = t - i as f64;
            f[i] * (1.0 - w) + f[i + 1] * w
        }
    }

    /// Number of concentrations at or above one half.
    pub fn count_above_half(&self) -> usize {
        self.eigenvalues.iter().filter(|&&m| m >= 0.5).count()
    }
}

/// How a waveform's physical current is formed from its envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Focusing {
    /// Multiply by the focusing function of this Rx centre.
    Piece([f64; 3]),
    /// Multiply by the shared focusing function of the full Rx.
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub sub: usize,
    pub mode: (usize, usize),
    /// Eigenvalue predicted for the Tx operator.
    pub eigenvalue: f64,
    /// Eigenvalue over the piece operator norm.
    pub concentration: f64,
    /// Envelope at the Tx nodes (linear carrier included for split pieces).
    pub envelope: Vec<Complex64>,
    pub focusing: Focusing,
}

#[derive(Debug, Clone)]
pub struct WaveformSet {
    pub grid: SurfaceGrid,
    pub waveforms: Vec<Waveform>,
}

impl WaveformSet {
    pub fn len(&self) -> usize {
        self.waveforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waveforms.is_empty()
    }

    /// Physical current of waveform `k` at the Tx nodes, unit norm.
    pub fn current(&self, dep: &Deployment, k: usize) -> Vec<Complex64> {
        let w = &self.waveforms[k];
        let k0 = dep.constants.kappa0;
        let mut j: Vec<Complex64> = self
            .grid
            .local
            .iter()
            .zip(&w.envelope)
            .map(|(uv, e)| {
                let dt = Vec3::new(uv[0], 0.0, uv[1]);
                let f = match w.focusing {
                    Focusing::Piece(c) => focusing_tx(&dt, &Vec3::from(c), k0),
                    Focusing::Shared => fbar_tx(&dt, dep),
                };
                f * e
            })
            .collect();
        normalize(&mut j, &self.grid.weights);
        j
    }

    /// Gram matrix of the envelopes under the Tx quadrature.
    pub fn envelope_gram(&self) -> Vec<Vec<Complex64>> {
        let n = self.len();
        let w = &self.grid.weights;
        let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for a in 0..n {
            for b in 0..n {
                g[a][b] = self.waveforms[a]
                    .envelope
                    .iter()
                    .zip(&self.waveforms[b].envelope)
                    .zip(w)
                    .map(|((x, y), wi)| x.conj() * y * *wi)
                    .sum();
            }
        }
        g
    }
}

fn normalize(v: &mut [Complex64], w: &[f64]) {
    let n: f64 = v.iter().zip(w).map(|(x, wi)| x.norm_sqr() * wi).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// 1-D bandwidth parameters `(p_u, p_v)` of a separable piece.
pub fn pswf_parameters(dep: &Deployment, sub: &SubHoloS) -> Result<(f64, f64)> {
    let t = tau_coefficients(dep, sub)?;
    let scale = t.t11.abs().max(t.t22.abs());
    if t.t12.abs() > SEPARABLE_TOL * scale || t.t21.abs() > SEPARABLE_TOL * scale {
        return Err(Error::UnsupportedPose(format!(
            "kernel is not separable (tau12 = {:.3e}, tau21 = {:.3e})",
            t.t12, t.t21
        )));
    }
    let k0 = dep.constants.kappa0;
    let n = sub.center.norm();
    Ok((
        k0 * dep.tx_half[0] * sub.half[0] * t.t11.abs() / n,
        k0 * dep.tx_half[1] * sub.half[1] * t.t22.abs() / n,
    ))
}

struct Candidate {
    mode: (usize, usize),
    conc: f64,
}

fn order_modes(bu: &PswfBasis, bv: &PswfBasis) -> Vec<Candidate> {
    let mut c = Vec::new();
    for (i, a) in bu.eigenvalues.iter().enumerate() {
        for (j, b) in bv.eigenvalues.iter().enumerate() {
            c.push(Candidate {
                mode: (i, j),
                conc: a * b,
            });
        }
    }
    c.sort_by(|x, y| {
        let scale = x.conc.abs().max(y.conc.abs());
        if (x.conc - y.conc).abs() <= TIE_TOL * scale {
            (x.mode.0 + x.mode.1, x.mode.0).cmp(&(y.mode.0 + y.mode.1, y.mode.0))
        } else {
            y.conc.total_cmp(&x.conc)
        }
    });
    c
}

fn separable_modes(
    dep: &Deployment,
    sub: &SubHoloS,
    grid: &SurfaceGrid,
    m_max: usize,
    carrier: Option<WavenumberShift>,
    min_conc: f64,
) -> Result<Vec<Waveform>> {
    let (pu, pv) = pswf_parameters(dep, sub)?;
    let per_axis = |p: f64| ((2.0 * p / std::f64::consts::PI).ceil() as usize + 6).min(m_max.max(1));
    let bu = pswf_basis(pu, dep.tx_half[0], per_axis(pu), pswf_nodes(pu))?;
    let bv = pswf_basis(pv, dep.tx_half[1], per_axis(pv), pswf_nodes(pv))?;
    let norm = gbar_sub(dep, sub)?.op_norm;
    let mut out = Vec::new();
    for c in order_modes(&bu, &bv).into_iter().take(m_max) {
        if c.conc < min_conc {
            break;
        }
        let mut env: Vec<Complex64> = grid
            .local
            .iter()
            .map(|uv| {
                let a = bu.eval(c.mode.0, uv[0]) * bv.eval(c.mode.1, uv[1]);
                match carrier {
                    Some(s) => Complex64::from_polar(a, -(s.ku * uv[0] + s.kv * uv[1])),
                    None => Complex64::new(a, 0.0),
                }
            })
            .collect();
        normalize(&mut env, &grid.weights);
        out.push(Waveform {
            sub: sub.index,
            mode: c.mode,
            eigenvalue: norm * c.conc,
            concentration: c.conc,
            envelope: env,
            focusing: match carrier {
                Some(_) => Focusing::Shared,
                None => Focusing::Piece(sub.center.into()),
            },
        });
    }
    Ok(out)
}

fn numerical_modes(
    dep: &Deployment,
    sub: &SubHoloS,
    grid: &SurfaceGrid,
    m_max: usize,
    carrier: WavenumberShift,
    min_conc: f64,
) -> Result<Vec<Waveform>> {
    let g = gbar_sub(dep, sub)?;
    let h = assemble_shift_invariant(grid, |du, dv| Complex64::new(g.eval(du, dv), 0.0))?;
    let (s, vecs) = eigen_decomposition(&h)?;
    let mut out = Vec::new();
    for m in 0..m_max.min(s.eigs.len()) {
        let conc = s.eigs[m] / g.op_norm;
        if conc < min_conc {
            break;
        }
        let mut env: Vec<Complex64> = (0..grid.len())
            .map(|i| vecs[(i, m)] / grid.weights[i].sqrt())
            .collect();
        let peak = env.iter().fold(0.0f64, |a, x| a.max(x.norm()));
        if let Some(first) = env.iter().find(|x| x.norm() > 1e-6 * peak).copied() {
            let rot = first.conj() / first.norm();
            env.iter_mut().for_each(|x| *x *= rot);
        }
        for (x, uv) in env.iter_mut().zip(&grid.local) {
            *x *= Complex64::from_polar(1.0, -(carrier.ku * uv[0] + carrier.kv * uv[1]));
        }
        normalize(&mut env, &grid.weights);
        out.push(Waveform {
            sub: sub.index,
            mode: (m, 0),
            eigenvalue: s.eigs[m],
            concentration: conc,
            envelope: env,
            focusing: Focusing::Shared,
        });
    }
    Ok(out)
}

/// Leading `m_max` product eigenfunctions of the single-piece kernel.
pub fn eigenfunctions_paraxial(dep: &Deployment, grid: &SurfaceGrid, m_max: usize) -> Result<WaveformSet> {
    let waveforms = separable_modes(dep, &dep.whole_rx(), grid, m_max, None, 0.0)?;
    Ok(WaveformSet {
        grid: grid.clone(),
        waveforms,
    })
}

/// Eigenfunctions of every piece whose concentration reaches `min_conc`,
/// ordered by predicted eigenvalue. Separable pieces use prolate products,
/// others a Nyström solve of the piece kernel.
pub fn eigenfunctions_nonparax(
    dep: &Deployment,
    part: &Partition,
    grid: &SurfaceGrid,
    min_conc: f64,
    max_per_sub: usize,
) -> Result<WaveformSet> {
    let mut waveforms = Vec::new();
    for sub in &part.subs {
        let shift = wavenumber_shift(dep, sub);
        let modes = match separable_modes(dep, sub, grid, max_per_sub, Some(shift), min_conc) {
            Err(Error::UnsupportedPose(_)) => numerical_modes(dep, sub, grid, max_per_sub, shift, min_conc)?,
            r => r?,
        };
        waveforms.extend(modes);
    }
    waveforms.sort_by(|a, b| {
        b.eigenvalue
            .total_cmp(&a.eigenvalue)
            .then(a.sub.cmp(&b.sub))
            .then(a.mode.cmp(&b.mode))
    });
    Ok(WaveformSet {
        grid: grid.clone(),
        waveforms,
    })
}

/// Received fields, one column per waveform, sampled at the Rx nodes.
#[derive(Debug, Clone)]
pub struct ReceivedFields {
    pub fields: Mat<Complex64>,
    pub rx: SurfaceGrid,
}

/// Propagates every physical current through the exact kernel.
pub fn propagate(dep: &Deployment, set: &WaveformSet, rx: &SurfaceGrid) -> Result<ReceivedFields> {
    let h = assemble_channel(&set.grid, rx, dep)?;
    let tw: Vec<f64> = set.grid.weights.iter().map(|w| w.sqrt()).collect();
    let mut currents = Mat::<Complex64>::zeros(set.grid.len(), set.len());
    for k in 0..set.len() {
        let j = set.current(dep, k);
        for i in 0..set.grid.len() {
            currents[(i, k)] = j[i] * tw[i];
        }
    }
    let weighted = &h.mat * &currents;
    let fields = Mat::from_fn(rx.len(), set.len(), |i, k| weighted[(i, k)] / rx.weights[i].sqrt());
    Ok(ReceivedFields {
        fields,
        rx: rx.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    /// Received energy of each waveform.
    pub energies: Vec<f64>,
    /// `|C_kl| / sqrt(C_kk C_ll)`.
    pub normalized: Vec<Vec<f64>>,
}

impl CouplingMatrix {
    /// Normalized entry in dB (`10 log10`, entries are energy ratios).
    pub fn db(&self, k: usize, l: usize) -> f64 {
        10.0 * self.normalized[k][l].log10()
    }

    /// Largest off-diagonal entry among the given pairs, in dB.
    pub fn max_off_diagonal_db(&self, pair: impl Fn(usize, usize) -> bool) -> f64 {
        let n = self.energies.len();
        let mut worst = f64::NEG_INFINITY;
        for k in 0..n {
            for l in 0..n {
                if k != l && pair(k, l) {
                    worst = worst.max(self.db(k, l));
                }
            }
        }
        worst
    }
}

/// Gram matrix of the received fields under the Rx quadrature.
pub fn coupling_matrix(rf: &ReceivedFields) -> CouplingMatrix {
    let e = &rf.fields;
    let n = e.ncols();
    let w = &rf.rx.weights;
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for k in 0..n {
        for l in k..n {
            let c: Complex64 = (0..e.nrows()).map(|i| e[(i, k)].conj() * e[(i, l)] * w[i]).sum();
            gram[k][l] = c;
            gram[l][k] = c.conj();
        }
    }
    let energies: Vec<f64> = (0..n).map(|k| gram[k][k].re).collect();
    let normalized = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| gram[k][l].norm() / (energies[k] * energies[l]).sqrt())
                .collect()
        })
        .collect();
    CouplingMatrix { energies, normalized }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityMap {
    pub local: Vec<[f64; 2]>,
    pub intensity: Vec<f64>,
    /// Received energy on each piece.
    pub per_sub: Vec<f64>,
    /// Share of the energy landing on `target`.
    pub localization: f64,
    pub target: usize,
}

/// Intensity of field `k` over the Rx and its share on piece `target`.
pub fn field_intensity_map(rf: &ReceivedFields, k: usize, part: &Partition, target: usize) -> Result<IntensityMap> {
    if k >= rf.fields.ncols() || target >= part.len() {
        return invalid("waveform or piece index out of range");
    }
    let intensity: Vec<f64> = (0..rf.rx.len()).map(|i| rf.fields[(i, k)].norm_sqr()).collect();
    let mut per_sub = vec![0.0; part.len()];
    for (i, uv) in rf.rx.local.iter().enumerate() {
        if let Some(s) = part.locate(*uv) {
            per_sub[s] += intensity[i] * rf.rx.weights[i];
        }
    }
    let total: f64 = per_sub.iter().sum();
    Ok(IntensityMap {
        local: rf.rx.local.clone(),
        intensity,
        localization: if total > 0.0 { per_sub[target] / total } else { 0.0 },
        per_sub,
        target,
    })
}
