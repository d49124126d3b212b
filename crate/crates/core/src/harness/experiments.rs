//! Experiment runners shared by the CLI subcommands and the acceptance suite.

use num_complex::Complex64;
use serde_json::json;

use super::config::{Config, KernelKind, SweepConfig};
use super::output::{Cell, Table};
use crate::closedform::{edof_nonparax, edof_paraxial, op_norm_nonparax, op_norm_sub};
use crate::error::{Error, Result};
use crate::geometry::{
    grid_size, parametrize_rx_full, parametrize_tx, partition_rx, spherical_center, Deployment,
    Partition, SurfaceGrid,
};
use crate::kernel::{gbar_nonparax, CompositeKernel};
use crate::spectrum::{
    assemble_channel, assemble_self_adjoint, assemble_shift_invariant, count_edof,
    eigen_spectrum, polarization_profile, singular_spectrum, Spectrum,
};
use crate::waveforms::{
    coupling_matrix, eigenfunctions_nonparax, eigenfunctions_paraxial, field_intensity_map,
    propagate, CouplingMatrix, ReceivedFields, WaveformSet,
};

/// Tx grid at the given density (nodes per wavelength).
pub fn tx_grid(dep: &Deployment, density: f64) -> Result<SurfaceGrid> {
    let l = dep.wavelength();
    parametrize_tx(
        dep,
        grid_size(dep.tx_half[0], density, l),
        grid_size(dep.tx_half[1], density, l),
    )
}

/// Rx grid over the full receiver. Node counts are rounded to a multiple of
/// the partition so that every node falls inside a single piece.
pub fn rx_grid(dep: &Deployment, part: &Partition, density: f64) -> Result<SurfaceGrid> {
    let l = dep.wavelength();
    let round = |n: usize, k: usize| n.div_ceil(k) * k;
    parametrize_rx_full(
        dep,
        round(grid_size(dep.rx_half[0], density, l), part.n_u).max(2),
        round(grid_size(dep.rx_half[1], density, l), part.n_v).max(2),
    )
}

/// Tx grid for a configured run, checked against `numerics.max_nodes`.
pub fn config_tx_grid(cfg: &Config, dep: &Deployment) -> Result<SurfaceGrid> {
    let g = tx_grid(dep, cfg.tx_density())?;
    if g.len() > cfg.numerics.max_nodes {
        return Err(Error::TooLarge(format!(
            "Tx grid has {} nodes, above numerics.max_nodes = {}; lower the grid density",
            g.len(),
            cfg.numerics.max_nodes
        )));
    }
    Ok(g)
}

/// Closed-form operator norms of every piece.
pub fn piece_norms(dep: &Deployment, part: &Partition) -> Result<Vec<f64>> {
    part.subs.iter().map(|s| op_norm_sub(dep, s)).collect()
}

/// Spectrum of the Tx operator for the chosen kernel.
pub fn kernel_spectrum(
    dep: &Deployment,
    part: &Partition,
    tx: &SurfaceGrid,
    rx_density: f64,
    kind: KernelKind,
) -> Result<Spectrum> {
    let s = match kind {
        KernelKind::Exact => {
            let rx = rx_grid(dep, part, rx_density)?;
            singular_spectrum(&assemble_channel(tx, &rx, dep)?)?
        }
        KernelKind::Approx => {
            let g = gbar_nonparax(dep, part)?;
            eigen_spectrum(&assemble_shift_invariant(tx, |du, dv| g.eval(du, dv))?)?
        }
        KernelKind::Composite => {
            let c = CompositeKernel::new(dep, part)?;
            let p = &tx.points;
            eigen_spectrum(&assemble_self_adjoint(tx, |a, b| c.eval(&p[a], &p[b]))?)?
        }
    };
    Ok(s.with_op_norm_refs(piece_norms(dep, part)?))
}

/// Closed-form count for a normalized threshold.
pub fn closed_count(dep: &Deployment, part: &Partition, gamma: f64) -> Result<f64> {
    if part.len() == 1 {
        Ok(edof_paraxial(dep).bounded())
    } else {
        Ok(edof_nonparax(dep, part, gamma)?.bounded())
    }
}

pub struct Context {
    pub dep: Deployment,
    pub part: Partition,
}

impl Context {
    pub fn new(cfg: &Config) -> Result<Self> {
        let dep = cfg.deployment()?;
        let part = cfg.partition(&dep)?;
        Ok(Self { dep, part })
    }
}

pub type Output = (Table, serde_json::Value);

pub fn run_edof(cfg: &Config) -> Result<Output> {
    let ctx = Context::new(cfg)?;
    let tx = config_tx_grid(cfg, &ctx.dep)?;
    let s = kernel_spectrum(&ctx.dep, &ctx.part, &tx, cfg.rx_density(), cfg.experiment.kernel)?;
    let (norm, _) = op_norm_nonparax(&ctx.dep, &ctx.part)?;
    let mut t = Table::new(&["gamma", "closed_form", "closed_form_rounded", "numerical", "op_norm"]);
    for &g in &cfg.experiment.gammas {
        let c = closed_count(&ctx.dep, &ctx.part, g)?;
        let n = count_edof(&s, g * norm);
        t.push(vec![
            g.into(),
            c.into(),
            (crate::closedform::round_half_even(c) as i64).into(),
            n.into(),
            norm.into(),
        ]);
    }
    let summary = json!({ "tx_nodes": tx.len(), "pieces": ctx.part.len(), "largest_eigenvalue": s.max() });
    Ok((t, summary))
}

pub fn run_spectrum(cfg: &Config) -> Result<Output> {
    let ctx = Context::new(cfg)?;
    let tx = config_tx_grid(cfg, &ctx.dep)?;
    let s = kernel_spectrum(&ctx.dep, &ctx.part, &tx, cfg.rx_density(), cfg.experiment.kernel)?;
    let (norm, _) = op_norm_nonparax(&ctx.dep, &ctx.part)?;
    let mut t = Table::new(&["index", "eigenvalue", "normalized"]);
    for (i, e) in s.eigs.iter().enumerate() {
        t.push(vec![i.into(), (*e).into(), (e / norm).into()]);
    }
    let summary = json!({
        "trace": s.trace,
        "frobenius_squared": s.frob2,
        "op_norm": norm,
        "piece_norms": s.op_norm_refs,
    });
    Ok((t, summary))
}

/// Waveforms for the configured layout, propagated to the receiver.
pub fn waveform_fields(cfg: &Config, ctx: &Context) -> Result<(WaveformSet, ReceivedFields)> {
    let tx = config_tx_grid(cfg, &ctx.dep)?;
    let set = if ctx.part.len() == 1 {
        eigenfunctions_paraxial(&ctx.dep, &tx, cfg.experiment.modes)?
    } else {
        eigenfunctions_nonparax(&ctx.dep, &ctx.part, &tx, cfg.experiment.min_concentration, cfg.experiment.modes)?
    };
    let rx = rx_grid(&ctx.dep, &ctx.part, cfg.rx_density())?;
    let rf = propagate(&ctx.dep, &set, &rx)?;
    Ok((set, rf))
}

pub fn run_waveforms(cfg: &Config) -> Result<Output> {
    let ctx = Context::new(cfg)?;
    let (set, rf) = waveform_fields(cfg, &ctx)?;
    let cm = coupling_matrix(&rf);
    let mut t = Table::new(&[
        "index", "piece", "m_u", "m_v", "eigenvalue", "concentration", "received_energy", "localization",
    ]);
    for (k, w) in set.waveforms.iter().enumerate() {
        let loc = field_intensity_map(&rf, k, &ctx.part, w.sub)?.localization;
        t.push(vec![
            k.into(),
            w.sub.into(),
            w.mode.0.into(),
            w.mode.1.into(),
            w.eigenvalue.into(),
            w.concentration.into(),
            cm.energies[k].into(),
            loc.into(),
        ]);
    }
    let summary = json!({ "waveforms": set.len(), "tx_nodes": set.grid.len(), "rx_nodes": rf.rx.len() });
    Ok((t, summary))
}

pub fn coupling_table(cm: &CouplingMatrix) -> Table {
    let mut t = Table::new(&["k", "l", "normalized", "db"]);
    let n = cm.energies.len();
    for k in 0..n {
        for l in 0..n {
            t.push(vec![k.into(), l.into(), cm.normalized[k][l].into(), cm.db(k, l).into()]);
        }
    }
    t
}

pub fn run_coupling(cfg: &Config) -> Result<Output> {
    let ctx = Context::new(cfg)?;
    let (set, rf) = waveform_fields(cfg, &ctx)?;
    let cm = coupling_matrix(&rf);
    let pieces: Vec<usize> = set.waveforms.iter().map(|w| w.sub).collect();
    let off = cm.max_off_diagonal_db(|_, _| true);
    let cross = cm.max_off_diagonal_db(|k, l| pieces[k] != pieces[l]);
    let summary = json!({ "max_off_diagonal_db": off, "max_cross_piece_db": cross });
    Ok((coupling_table(&cm), summary))
}

/// Deployment with the Tx sides multiplied by `r`.
pub fn scaled_tx(dep: &Deployment, r: f64) -> Deployment {
    Deployment {
        tx_half: [dep.tx_half[0] * r, dep.tx_half[1] * r],
        ..dep.clone()
    }
}

pub fn run_polarization(cfg: &Config) -> Result<Output> {
    let ctx = Context::new(cfg)?;
    let mut t = Table::new(&[
        "r",
        "eigenvalues",
        "plateau",
        "transition",
        "null",
        "transition_fraction",
        "max_over_largest_level",
        "min_plateau_over_smallest_level",
    ]);
    for &r in &cfg.experiment.scalings {
        let dep = scaled_tx(&ctx.dep, r);
        let tx = config_tx_grid(cfg, &dep)?;
        let s = kernel_spectrum(&dep, &ctx.part, &tx, cfg.rx_density(), cfg.experiment.kernel)?;
        let rep = polarization_profile(&s, &s.op_norm_refs)?;
        let top = rep.levels[0];
        let low = rep.levels[rep.levels.len() - 1];
        t.push(vec![
            r.into(),
            s.eigs.len().into(),
            rep.plateau_counts.iter().sum::<usize>().into(),
            rep.n_transition.into(),
            rep.n_null.into(),
            rep.transition_fraction.into(),
            (rep.max_eig / top).into(),
            rep.min_plateau.map_or(Cell::Text(String::new()), |m| (m / low).into()),
        ]);
    }
    Ok((t, json!({ "pieces": ctx.part.len() })))
}

fn with_param(cfg: &Config, dep: &Deployment, param: &str, value: f64) -> Result<Deployment> {
    let dist = dep.center.norm();
    let (theta, phi) = if cfg.deployment.center.is_some() {
        let c = dep.center / dist;
        (c.z.asin(), c.x.atan2(c.y))
    } else {
        let (_, t, p) = cfg.spherical()?;
        (t, p)
    };
    let out = match param {
        "theta" | "theta_o" => Deployment { center: spherical_center(dist, value, phi), ..dep.clone() },
        "phi" | "phi_o" => Deployment { center: spherical_center(dist, theta, value), ..dep.clone() },
        "distance" => Deployment { center: dep.center * (value / dist), ..dep.clone() },
        "alpha" => dep.clone().with_orientation(value, dep.beta),
        "beta" => dep.clone().with_orientation(dep.alpha, value),
        other => {
            return Err(Error::Config(format!(
                "sweep.param: unknown parameter '{other}' (theta, phi, alpha, beta, distance)"
            )))
        }
    };
    Deployment::new(out.constants, out.center, out.alpha, out.beta, out.tx_half, out.rx_half)?
        .with_polarization(out.pol_tx, out.pol_rx)
}

pub fn run_sweep(cfg: &Config, sweep: &SweepConfig) -> Result<Output> {
    if sweep.steps < 1 {
        return Err(Error::Config("sweep.steps: must be at least 1".into()));
    }
    let base = cfg.deployment()?;
    let mut t = Table::new(&["value", "upsilon", "closed_form", "op_norm", "numerical"]);
    for i in 0..sweep.steps {
        let v = if sweep.steps == 1 {
            sweep.from
        } else {
            sweep.from + (sweep.to - sweep.from) * i as f64 / (sweep.steps - 1) as f64
        };
        let dep = with_param(cfg, &base, &sweep.param, v)?;
        let part = partition_rx(&dep, cfg.partition.n_u, cfg.partition.n_v)?;
        let ups = crate::geometry::tau_raw(&dep, &dep.whole_rx()).upsilon;
        let closed = closed_count(&dep, &part, 0.5)?;
        let norm = op_norm_nonparax(&dep, &part).map(|x| x.0).ok();
        let numeric = match (sweep.numeric, norm) {
            (true, Some(n)) => {
                let tx = config_tx_grid(cfg, &dep)?;
                let s = kernel_spectrum(&dep, &part, &tx, cfg.rx_density(), KernelKind::Exact)?;
                Cell::from(count_edof(&s, 0.5 * n))
            }
            (true, None) => Cell::from(0usize),
            (false, _) => Cell::Text(String::new()),
        };
        t.push(vec![
            v.into(),
            ups.into(),
            closed.into(),
            norm.map_or(Cell::Text("inf".into()), Cell::from),
            numeric,
        ]);
    }
    Ok((t, json!({ "param": sweep.param, "steps": sweep.steps })))
}

/// Normalized overlap of two unit currents under the Tx quadrature.
pub fn current_overlap(a: &[Complex64], b: &[Complex64], w: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), wi)| x.conj() * y * *wi)
        .sum::<Complex64>()
        .norm()
}
