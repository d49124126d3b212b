//! Nyström discretization of the kernels and their eigenvalue spectra.
//!
//! Every matrix carries the square roots of the quadrature weights on both
//! sides, so its eigenvalues approximate those of the integral operator.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Deployment, SurfaceGrid};
use crate::kernel::kernel_exact_unchecked;

/// Largest matrix dimension accepted by the dense solvers.
pub const MAX_DIM: usize = 6000;
/// Largest number of entries in an assembled channel matrix.
pub const MAX_ENTRIES: usize = 1 << 26;
/// Tolerance on `‖M − Mᴴ‖_F / ‖M‖_F`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues below `-NEG_TOL · λ_max` are treated as a failure.
pub const NEG_TOL: f64 = 1e-8;
/// Half width of a plateau band, relative to its level.
pub const PLATEAU_BAND: f64 = 0.1;

/// Weighted Hermitian matrix `√w K √w`.
#[derive(Debug, Clone)]
pub struct HermitianKernel {
    pub mat: Mat<Complex64>,
}

/// Weighted channel matrix, Rx nodes by Tx nodes.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    pub mat: Mat<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Descending, clamped at zero.
    pub eigs: Vec<f64>,
    /// Closed-form operator norms used as reference levels.
    pub op_norm_refs: Vec<f64>,
    /// Trace of the discretized operator.
    pub trace: f64,
    /// Squared Frobenius norm of the discretized operator.
    pub frob2: f64,
}

impl Spectrum {
    pub fn with_op_norm_refs(mut self, refs: Vec<f64>) -> Self {
        self.op_norm_refs = refs;
        self
    }

    pub fn max(&self) -> f64 {
        self.eigs.first().copied().unwrap_or(0.0)
    }
}

fn check_dim(rows: usize, cols: usize) -> Result<()> {
    if rows.max(cols) > MAX_DIM {
        return Err(Error::TooLarge(format!(
            "{rows}x{cols} exceeds the {MAX_DIM} node limit; coarsen the grid"
        )));
    }
    Ok(())
}

/// Column-major fill of an `rows × cols` matrix.
fn fill(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64 + Sync) -> Mat<Complex64> {
    let mut data = vec![Complex64::new(0.0, 0.0); rows * cols];
    let col = |(j, chunk): (usize, &mut [Complex64])| {
        for (i, x) in chunk.iter_mut().enumerate() {
            *x = f(i, j);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(rows).enumerate().for_each(col);
    }
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(rows).enumerate().for_each(col);
    MatRef::from_column_major_slice(&data, rows, cols).to_owned()
}

fn hermitian_residual(m: &Mat<Complex64>) -> f64 {
    let n = m.nrows();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let a = m[(i, j)];
            num += (a - m[(j, i)].conj()).norm_sqr();
            den += a.norm_sqr();
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

impl HermitianKernel {
    /// Wraps a matrix after checking that it is square and Hermitian.
    pub fn from_mat(mat: Mat<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidArgument("kernel matrix must be square".into()));
        }
        let r = hermitian_residual(&mat);
        if !(r <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(r));
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

/// Nyström matrix of an arbitrary kernel `k(a, b)` over grid node indices.
pub fn assemble_self_adjoint(
    grid: &SurfaceGrid,
    k: impl Fn(usize, usize) -> Complex64 + Sync,
) -> Result<HermitianKernel> {
    let n = grid.len();
    check_dim(n, n)?;
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    HermitianKernel::from_mat(fill(n, n, |i, j| k(i, j) * (sw[i] * sw[j])))
}

/// Nyström matrix of a difference kernel `f(Δu, Δv)`. Tensor grids reuse a
/// table of the kernel over lattice offsets.
pub fn assemble_shift_invariant(
    grid: &SurfaceGrid,
    f: impl Fn(f64, f64) -> Complex64 + Sync,
) -> Result<HermitianKernel> {
    let n = grid.len();
    check_dim(n, n)?;
    let (Some([nu, nv]), Some([hu, hv])) = (grid.dims, grid.spacing) else {
        let loc = &grid.local;
        return assemble_self_adjoint(grid, |a, b| f(loc[a][0] - loc[b][0], loc[a][1] - loc[b][1]));
    };
    let (wu, wv) = (2 * nu - 1, 2 * nv - 1);
    let mut table = vec![Complex64::new(0.0, 0.0); wu * wv];
    for p in 0..wu {
        let du = (p as f64 - (nu - 1) as f64) * hu;
        for q in 0..wv {
            let dv = (q as f64 - (nv - 1) as f64) * hv;
            table[p * wv + q] = f(du, dv);
        }
    }
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let mat = fill(n, n, |a, b| {
        let p = a / nv + nu - 1 - b / nv;
        let q = a % nv + nv - 1 - b % nv;
        table[p * wv + q] * (sw[a] * sw[b])
    });
    HermitianKernel::from_mat(mat)
}

/// Weighted exact channel between two grids.
pub fn assemble_channel(tx: &SurfaceGrid, rx: &SurfaceGrid, dep: &Deployment) -> Result<ChannelMatrix> {
    let (m, n) = (rx.len(), tx.len());
    if m.min(n) > MAX_DIM || m * n > MAX_ENTRIES {
        return Err(Error::TooLarge(format!(
            "{m}x{n} channel exceeds the {MAX_DIM} node or {MAX_ENTRIES} entry limit; coarsen the grid"
        )));
    }
    let mut dmin = f64::INFINITY;
    for a in &tx.points {
        for b in &rx.points {
            dmin = dmin.min((b - a).norm());
        }
    }
    if !(dmin > 0.0) {
        return Err(Error::Singularity("a Tx node coincides with an Rx node".into()));
    }
    if dmin < 3.0 * dep.wavelength() {
        log::warn!(
            "closest node pair is {:.3} wavelengths apart, inside the reactive region",
            dmin / dep.wavelength()
        );
    }
    let swt: Vec<f64> = tx.weights.iter().map(|w| w.sqrt()).collect();
    let swr: Vec<f64> = rx.weights.iter().map(|w| w.sqrt()).collect();
    let mat = fill(m, n, |i, j| {
        kernel_exact_unchecked(&tx.points[j], &rx.points[i], dep) * (swr[i] * swt[j])
    });
    Ok(ChannelMatrix { mat })
}

impl ChannelMatrix {
    /// `Hᴴ H`, the discretized Tx-side operator.
    pub fn gram_tx(&self) -> HermitianKernel {
        HermitianKernel {
            mat: self.mat.adjoint() * &self.mat,
        }
    }

    /// `H Hᴴ`, the discretized Rx-side operator.
    pub fn gram_rx(&self) -> HermitianKernel {
        HermitianKernel {
            mat: &self.mat * self.mat.adjoint(),
        }
    }

    /// Received samples for a Tx current given at the Tx nodes (unweighted).
    pub fn apply(&self, current: &[Complex64]) -> Vec<Complex64> {
        let h = &self.mat;
        (0..h.nrows())
            .map(|i| (0..h.ncols()).map(|j| h[(i, j)] * current[j]).sum())
            .collect()
    }
}

fn finish(mut eigs: Vec<f64>, trace: f64, frob2: f64) -> Result<Spectrum> {
    eigs.sort_by(|a, b| b.total_cmp(a));
    let top = eigs.first().copied().unwrap_or(0.0);
    if let Some(&low) = eigs.last() {
        if low < -NEG_TOL * top.abs() {
            return Err(Error::Numeric(format!(
                "operator is not positive semidefinite (eigenvalue {low:.3e} vs {top:.3e})"
            )));
        }
    }
    for e in &mut eigs {
        *e = e.max(0.0);
    }
    Ok(Spectrum {
        eigs,
        op_norm_refs: Vec::new(),
        trace,
        frob2,
    })
}

fn trace_frob(m: &Mat<Complex64>) -> (f64, f64) {
    let n = m.nrows();
    let trace = (0..n.min(m.ncols())).map(|i| m[(i, i)].re).sum();
    let mut frob2 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..n {
            frob2 += m[(i, j)].norm_sqr();
        }
    }
    (trace, frob2)
}

/// Eigenvalues of a Hermitian operator, descending.
pub fn eigen_spectrum(h: &HermitianKernel) -> Result<Spectrum> {
    let eigs = h
        .mat
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigensolver failed: {e:?}")))?;
    let (trace, frob2) = trace_frob(&h.mat);
    finish(eigs, trace, frob2)
}

/// Eigenvalues and eigenvectors (as columns), both in descending order.
pub fn eigen_decomposition(h: &HermitianKernel) -> Result<(Spectrum, Mat<Complex64>)> {
    let evd = h
        .mat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigensolver failed: {e:?}")))?;
    let n = h.dim();
    let s = evd.S().column_vector();
    let u = evd.U();
    let eigs: Vec<f64> = (0..n).rev().map(|i| s[i].re).collect();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    let (trace, frob2) = trace_frob(&h.mat);
    Ok((finish(eigs, trace, frob2)?, vecs))
}

/// Squared singular values of the channel, from the smaller Gram matrix.
pub fn singular_spectrum(h: &ChannelMatrix) -> Result<Spectrum> {
    let g = if h.mat.ncols() <= h.mat.nrows() {
        h.gram_tx()
    } else {
        h.gram_rx()
    };
    let mut s = eigen_spectrum(&g)?;
    s.trace = trace_frob(&h.mat).1;
    Ok(s)
}

/// Squared singular values from a direct SVD; slower, used as a cross-check.
pub fn svd_spectrum(h: &ChannelMatrix) -> Result<Spectrum> {
    let sv = h
        .mat
        .singular_values()
        .map_err(|e| Error::Numeric(format!("SVD failed: {e:?}")))?;
    let eigs: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let trace = trace_frob(&h.mat).1;
    let frob2 = eigs.iter().map(|e| e * e).sum();
    finish(eigs, trace, frob2)
}

/// Number of eigenvalues at or above an absolute threshold.
pub fn count_edof(s: &Spectrum, gamma: f64) -> usize {
    s.eigs.iter().take_while(|&&e| e >= gamma).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    /// Within the plateau band of the level with this index.
    Level(usize),
    Transition,
    /// Below the band of the smallest level.
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    /// Levels in descending order.
    pub levels: Vec<f64>,
    pub bands: Vec<Band>,
    pub plateau_counts: Vec<usize>,
    pub n_transition: usize,
    pub n_null: usize,
    /// Transition eigenvalues over all non-null eigenvalues.
    pub transition_fraction: f64,
    pub max_eig: f64,
    pub min_plateau: Option<f64>,
}

/// Assigns each eigenvalue to the nearest level within ±10%, to the
/// transition band, or to the null band below a tenth of the smallest level.
pub fn polarization_profile(s: &Spectrum, levels: &[f64]) -> Result<PolarizationReport> {
    if levels.is_empty() || levels.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::InvalidArgument("levels must be positive".into()));
    }
    let mut lv = levels.to_vec();
    lv.sort_by(|a, b| b.total_cmp(a));
    lv.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let floor = PLATEAU_BAND * lv[lv.len() - 1];
    let mut bands = Vec::with_capacity(s.eigs.len());
    let mut plateau_counts = vec![0; lv.len()];
    let (mut n_transition, mut n_null) = (0, 0);
    let mut min_plateau: Option<f64> = None;
    for &e in &s.eigs {
        let nearest = (0..lv.len())
            .map(|k| (k, (e - lv[k]).abs() / lv[k]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("levels not empty");
        let band = if nearest.1 <= PLATEAU_BAND {
            plateau_counts[nearest.0] += 1;
            min_plateau = Some(min_plateau.map_or(e, |m| m.min(e)));
            Band::Level(nearest.0)
        } else if e < floor {
            n_null += 1;
            Band::Null
        } else {
            n_transition += 1;
            Band::Transition
        };
        bands.push(band);
    }
    let plateau: usize = plateau_counts.iter().sum();
    let active = plateau + n_transition;
    Ok(PolarizationReport {
        levels: lv,
        bands,
        plateau_counts,
        n_transition,
        n_null,
        transition_fraction: if active == 0 { 0.0 } else { n_transition as f64 / active as f64 },
        max_eig: s.max(),
        min_plateau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{parametrize_rx_full, parametrize_tx, PhysicalConstants};
    use crate::Vec3;

    fn spec(eigs: Vec<f64>) -> Spectrum {
        Spectrum {
            eigs,
            op_norm_refs: vec![],
            trace: 0.0,
            frob2: 0.0,
        }
    }

    #[test]
    fn diagonal_kernel_eigenvalues() {
        let m = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new([2.0, 5.0, 1.0][i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let s = eigen_spectrum(&HermitianKernel::from_mat(m).unwrap()).unwrap();
        assert_eq!(s.eigs, vec![5.0, 2.0, 1.0]);
        assert_eq!(s.trace, 8.0);
        assert_eq!(s.frob2, 30.0);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = Mat::from_fn(2, 2, |i, j| Complex64::new((i + 2 * j) as f64, 0.0));
        assert!(matches!(HermitianKernel::from_mat(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn single_pair_channel() {
        let k = PhysicalConstants::default();
        let l = k.wavelength;
        let dep = Deployment::new(k, Vec3::new(0.0, 10.0 * l, 0.0), 0.0, 0.0, [0.1 * l; 2], [0.1 * l; 2]).unwrap();
        let tx = SurfaceGrid::from_nodes(vec![Vec3::zeros()], vec![[0.0, 0.0]], vec![1.0]).unwrap();
        let rx = SurfaceGrid::from_nodes(vec![dep.center], vec![[0.0, 0.0]], vec![1.0]).unwrap();
        let h = assemble_channel(&tx, &rx, &dep).unwrap();
        let g = crate::kernel::kernel_exact(&Vec3::zeros(), &dep.center, &dep).unwrap();
        let s = singular_spectrum(&h).unwrap();
        assert_eq!(s.eigs.len(), 1);
        assert!((s.eigs[0] - g.norm_sqr()).abs() < 1e-12 * g.norm_sqr());
    }

    #[test]
    fn channel_spectrum_identities_and_svd() {
        let k = PhysicalConstants::default();
        let l = k.wavelength;
        let dep = Deployment::new(k, Vec3::new(2.0 * l, 20.0 * l, 1.0 * l), 0.2, 0.1, [2.0 * l; 2], [3.0 * l; 2]).unwrap();
        let tx = parametrize_tx(&dep, 8, 8).unwrap();
        let rx = parametrize_rx_full(&dep, 12, 12).unwrap();
        let h = assemble_channel(&tx, &rx, &dep).unwrap();
        let a = singular_spectrum(&h).unwrap();
        let b = svd_spectrum(&h).unwrap();
        let sum: f64 = a.eigs.iter().sum();
        let sum2: f64 = a.eigs.iter().map(|e| e * e).sum();
        assert!((sum - a.trace).abs() < 1e-9 * a.trace);
        assert!((sum2 - a.frob2).abs() < 1e-9 * a.frob2);
        for (x, y) in a.eigs.iter().zip(&b.eigs).take(10) {
            assert!((x - y).abs() < 1e-9 * a.eigs[0]);
        }
    }

    #[test]
    fn shift_invariant_table_matches_direct() {
        let k = PhysicalConstants::default();
        let l = k.wavelength;
        let dep = Deployment::new(k, Vec3::new(0.0, 20.0 * l, 0.0), 0.0, 0.0, [2.0 * l, 1.5 * l], [3.0 * l; 2]).unwrap();
        let g = parametrize_tx(&dep, 6, 5).unwrap();
        let f = |du: f64, dv: f64| Complex64::from_polar((-(du * du + 2.0 * dv * dv)).exp(), 3.0 * du - dv);
        let a = assemble_shift_invariant(&g, f).unwrap();
        let mut plain = g.clone();
        plain.dims = None;
        let b = assemble_shift_invariant(&plain, f).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert!((a.mat[(i, j)] - b.mat[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn polarization_bands() {
        let s = spec(vec![10.2, 9.5, 5.0, 4.8, 2.0, 0.2, 0.0]);
        let r = polarization_profile(&s, &[10.0, 5.0]).unwrap();
        assert_eq!(r.plateau_counts, vec![2, 2]);
        assert_eq!(r.n_transition, 1);
        assert_eq!(r.n_null, 2);
        assert!((r.transition_fraction - 0.2).abs() < 1e-15);
        assert_eq!(r.min_plateau, Some(4.8));
    }

    #[test]
    fn count_edof_threshold() {
        let s = spec(vec![3.0, 2.0, 2.0, 1.0]);
        assert_eq!(count_edof(&s, 2.0), 3);
        assert_eq!(count_edof(&s, 3.5), 0);
    }
}
