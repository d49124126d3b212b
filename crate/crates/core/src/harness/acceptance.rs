//! Acceptance criteria, each evaluated at its stated tolerance.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use super::config::KernelKind;
use super::experiments::{kernel_spectrum, rx_grid, scaled_tx, tx_grid};
use crate::closedform::{
    edof_cutset, edof_nonparax, edof_paraxial, op_norm_nonparax, op_norm_paraxial, support_paraxial,
    supports_nonparax,
};
use crate::error::Result;
use crate::geometry::{
    optimal_orientation, partition_rx, upsilon_explicit, Deployment, Partition, PhysicalConstants,
};
use crate::kernel::{gbar_nonparax, gbar_sub, CompositeKernel};
use crate::spectrum::{
    assemble_channel, assemble_self_adjoint, assemble_shift_invariant, count_edof, eigen_spectrum,
    polarization_profile, singular_spectrum, svd_spectrum, Spectrum,
};
use crate::waveforms::{
    coupling_matrix, eigenfunctions_nonparax, eigenfunctions_paraxial, field_intensity_map, propagate,
};
use crate::Vec3;

/// Criteria whose stated tolerance the reference numerics do not reach.
/// They are still evaluated and reported as failures; see the README.
pub const KNOWN_SHORTFALLS: [u8; 4] = [3, 5, 6, 7];

pub const TITLES: [&str; 9] = [
    "paraxial closed form vs numerical count",
    "prolate product eigenvalues",
    "waveform coupling at the receiver",
    "approximation error vs partition size",
    "threshold dependence of the non-paraxial count",
    "eigenvalue polarization under Tx scaling",
    "non-paraxial waveform localization",
    "cut-set equivalence",
    "identity suites",
];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    /// `PASS`/`FAIL` line for terminal output.
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {}: {} ({:.1}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }

    pub fn expected(&self) -> bool {
        self.passed || KNOWN_SHORTFALLS.contains(&self.id)
    }
}

fn lam() -> f64 {
    PhysicalConstants::default().wavelength
}

/// Square 32λ surfaces at 256λ, Rx in a horizontal plane.
pub fn setup_paraxial(theta: f64, phi: f64) -> Result<Deployment> {
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
}

/// 8λ Tx facing a broadside Rx of half-sides `rx_half` (in λ) at 32λ.
pub fn setup_nonparaxial(rx_half: [f64; 2]) -> Result<Deployment> {
    let l = lam();
    Deployment::new(
        PhysicalConstants::default(),
        Vec3::new(0.0, 32.0 * l, 0.0),
        0.0,
        0.0,
        [4.0 * l; 2],
        [rx_half[0] * l, rx_half[1] * l],
    )
}

type Check = Result<(bool, String)>;

/// Runs criterion `id` (1 to 9). Evaluation errors count as failures.
pub fn run_criterion(id: u8) -> CriterionResult {
    let t0 = Instant::now();
    let out = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        title: TITLES.get(id.wrapping_sub(1) as usize).copied().unwrap_or("unknown"),
        passed,
        detail,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

/// Runs all criteria in order, calling `report` after each.
pub fn run_all(mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    (1..=9)
        .map(|id| {
            let r = run_criterion(id);
            report(&r);
            r
        })
        .collect()
}

fn exact_count(dep: &Deployment, density: f64, gamma_norm: f64) -> Result<(usize, Spectrum)> {
    let part = partition_rx(dep, 1, 1)?;
    let tx = tx_grid(dep, density)?;
    let s = kernel_spectrum(dep, &part, &tx, density, KernelKind::Exact)?;
    Ok((count_edof(&s, gamma_norm * op_norm_paraxial(dep)?), s))
}

fn criterion_1() -> Check {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for i in 1..=13 {
        let theta = 0.1 * i as f64;
        let dep = setup_paraxial(theta, FRAC_PI_6)?;
        let closed = edof_paraxial(&dep).bounded();
        let (n, _) = exact_count(&dep, 1.0, 0.5)?;
        let diff = (n as f64 - closed).abs();
        worst = worst.max(diff);
        ok &= diff <= 2f64.max(0.2 * closed);
    }
    let dep = setup_paraxial(1.1, FRAC_PI_6)?;
    let closed = edof_paraxial(&dep).bounded();
    let t0 = Instant::now();
    let (fine, _) = exact_count(&dep, 2.0, 0.5)?;
    let secs = t0.elapsed().as_secs_f64();
    let fine_ok = (fine as f64 - closed).abs() <= 2f64.max(0.2 * closed) && secs <= 300.0;
    let reference = edof_paraxial(&setup_paraxial(FRAC_PI_4, 0.0)?).value;
    let ref_ok = (reference - 8.0).abs() < 1e-9;
    Ok((
        ok && fine_ok && ref_ok,
        format!(
            "worst |count - closed| = {worst:.3} over 13 poses; half-wavelength check at theta=1.1: {fine} vs {closed:.3} in {secs:.0}s; reference pose closed form {reference:.6}"
        ),
    ))
}

fn criterion_2() -> Check {
    let dep = setup_paraxial(FRAC_PI_4, 0.0)?;
    let norm = op_norm_paraxial(&dep)?;
    let closed = edof_paraxial(&dep).value;
    let n_edof = closed.round() as usize;
    let tx = tx_grid(&dep, 1.5)?;
    let g = gbar_sub(&dep, &dep.whole_rx())?;
    let s = eigen_spectrum(&assemble_shift_invariant(&tx, |du, dv| Complex64::new(g.eval(du, dv), 0.0))?)?;
    let set = eigenfunctions_paraxial(&dep, &tx, 40)?;
    let worst = (0..n_edof)
        .map(|m| (set.waveforms[m].eigenvalue - s.eigs[m]).abs() / s.eigs[m])
        .fold(0.0, f64::max);
    let count = set.waveforms.iter().filter(|w| w.eigenvalue >= 0.5 * norm).count();
    let ok = worst <= 0.10 && (count as f64 - closed).abs() <= 1.0;
    Ok((
        ok,
        format!("worst relative error over {n_edof} modes {worst:.2e}; product count {count} vs closed form {closed:.3}"),
    ))
}

fn criterion_3() -> Check {
    let dep = setup_paraxial(FRAC_PI_4, 0.0)?;
    let part = partition_rx(&dep, 1, 1)?;
    let n_edof = edof_paraxial(&dep).value.round() as usize;
    let tx = tx_grid(&dep, 2.0)?;
    let set = eigenfunctions_paraxial(&dep, &tx, 16)?;
    let rf = propagate(&dep, &set, &rx_grid(&dep, &part, 2.0)?)?;
    let cm = coupling_matrix(&rf);
    let off = cm.max_off_diagonal_db(|k, l| k < n_edof && l < n_edof);
    let tail = (n_edof + 3..cm.energies.len())
        .map(|k| cm.energies[k] / cm.energies[0])
        .fold(0.0, f64::max);
    Ok((
        off <= -10.0 && tail <= 0.1,
        format!(
            "largest off-diagonal among the first {n_edof}: {off:.2} dB; largest energy ratio beyond mode {}: {tail:.3} (limit 0.1)",
            n_edof + 2
        ),
    ))
}

fn error_functional(exact: &Spectrum, approx: &Spectrum) -> f64 {
    let num: f64 = exact.eigs.iter().zip(&approx.eigs).map(|(a, b)| (a - b).powi(2)).sum();
    num / exact.eigs.iter().map(|a| a * a).sum::<f64>()
}

fn criterion_4() -> Check {
    let dep = setup_nonparaxial([32.0, 32.0])?;
    let tx = tx_grid(&dep, 2.0)?;
    let exact = kernel_spectrum(&dep, &partition_rx(&dep, 8, 8)?, &tx, 2.0, KernelKind::Exact)?;
    let mut errs = Vec::new();
    for n in [2, 4, 8] {
        let approx = kernel_spectrum(&dep, &partition_rx(&dep, n, n)?, &tx, 2.0, KernelKind::Approx)?;
        errs.push(error_functional(&exact, &approx));
    }
    let ok = errs.windows(2).all(|w| w[1] < w[0]);
    Ok((ok, format!("error for 4, 16, 64 pieces: {:.3e}, {:.3e}, {:.3e}", errs[0], errs[1], errs[2])))
}

fn criterion_5() -> Check {
    let dep = setup_nonparaxial([32.0, 32.0])?;
    let part = partition_rx(&dep, 8, 8)?;
    let tx = tx_grid(&dep, 2.0)?;
    let exact = kernel_spectrum(&dep, &part, &tx, 2.0, KernelKind::Exact)?;
    let (norm, _) = op_norm_nonparax(&dep, &part)?;
    let mut ok = true;
    let mut rows = Vec::new();
    let (mut last_c, mut last_n) = (0.0, 0usize);
    for g in [0.1, 0.5, 0.9] {
        let c = edof_nonparax(&dep, &part, g)?.bounded();
        let n = count_edof(&exact, g * norm);
        ok &= (c - n as f64).abs() <= 0.25 * n as f64;
        if !rows.is_empty() {
            ok &= c <= last_c && n <= last_n;
        }
        (last_c, last_n) = (c, n);
        rows.push(format!("gamma {g}: {c:.2} vs {n}"));
    }
    Ok((ok, rows.join("; ")))
}

fn criterion_6() -> Check {
    let base = setup_nonparaxial([32.0, 32.0])?;
    let part = partition_rx(&base, 8, 8)?;
    let mut fractions = Vec::new();
    let mut bounds = (0.0, 0.0);
    for r in [1.0, 2.0, 4.0] {
        let dep = scaled_tx(&base, r);
        let tx = tx_grid(&dep, 2.0)?;
        let s = kernel_spectrum(&dep, &part, &tx, 2.0, KernelKind::Approx)?;
        let rep = polarization_profile(&s, &s.op_norm_refs)?;
        fractions.push(rep.transition_fraction);
        let low = rep.levels[rep.levels.len() - 1];
        bounds = (rep.max_eig / rep.levels[0], rep.min_plateau.unwrap_or(0.0) / low);
    }
    let decreasing = fractions.windows(2).all(|w| w[1] < w[0]);
    let ok = decreasing && bounds.0 <= 1.05 && bounds.1 >= 0.95;
    Ok((
        ok,
        format!(
            "transition fraction {:.4}, {:.4}, {:.4}; at r=4 max/largest level {:.4} (limit 1.05), min plateau/smallest level {:.4} (limit 0.95)",
            fractions[0], fractions[1], fractions[2], bounds.0, bounds.1
        ),
    ))
}

fn strip() -> Result<(Deployment, Partition)> {
    let dep = setup_nonparaxial([32.0, 4.0])?;
    let part = partition_rx(&dep, 8, 1)?;
    Ok((dep, part))
}

fn criterion_7() -> Check {
    let (dep, part) = strip()?;
    let tx = tx_grid(&dep, 2.0)?;
    let set = eigenfunctions_nonparax(&dep, &part, &tx, 0.5, 20)?;
    let rf = propagate(&dep, &set, &rx_grid(&dep, &part, 2.0)?)?;
    let cm = coupling_matrix(&rf);
    let pieces: Vec<usize> = set.waveforms.iter().map(|w| w.sub).collect();
    let cross = cm.max_off_diagonal_db(|k, l| pieces[k] != pieces[l]);
    let lead = 12.min(set.len());
    let mut worst_loc: f64 = 1.0;
    for k in 0..lead {
        worst_loc = worst_loc.min(field_intensity_map(&rf, k, &part, pieces[k])?.localization);
    }
    let cross_lead = cm.max_off_diagonal_db(|k, l| k < lead && l < lead && pieces[k] != pieces[l]);
    Ok((
        cross <= -10.0 && worst_loc >= 0.6 && lead == 12,
        format!(
            "{} waveforms; largest cross-piece entry {cross:.2} dB ({cross_lead:.2} dB among the leading {lead}); lowest localization among the leading {lead}: {worst_loc:.3}",
            set.len()
        ),
    ))
}

fn criterion_8() -> Check {
    let dep = setup_nonparaxial([32.0, 32.0])?;
    let mut ok = true;
    let mut cut = Vec::new();
    for n in [8, 16] {
        let part = partition_rx(&dep, n, n)?;
        let c = edof_cutset(&dep, &part)?;
        let limit = edof_nonparax(&dep, &part, 0.0)?.value;
        ok &= (c - limit).abs() <= 1e-9 * c.abs();
        cut.push(c);
    }
    let drift = (cut[0] - cut[1]).abs() / cut[1];
    Ok((
        ok && drift <= 0.02,
        format!("cut-set {:.4} (64 pieces), {:.4} (256 pieces); relative change {drift:.2e}", cut[0], cut[1]),
    ))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn mercer(s: &Spectrum) -> f64 {
    let sum: f64 = s.eigs.iter().sum();
    let sq: f64 = s.eigs.iter().map(|e| e * e).sum();
    rel(sum, s.trace).max(rel(sq, s.frob2))
}

fn criterion_9() -> Check {
    let mut notes = Vec::new();

    // Trace and Frobenius identities on every kernel family.
    let a = setup_paraxial(FRAC_PI_4, 0.0)?;
    let b = setup_nonparaxial([32.0, 32.0])?;
    let part = partition_rx(&b, 4, 4)?;
    let ta = tx_grid(&a, 1.0)?;
    let tb = tx_grid(&b, 2.0)?;
    let ga = gbar_sub(&a, &a.whole_rx())?;
    let gb = gbar_nonparax(&b, &part)?;
    let comp = CompositeKernel::new(&b, &part)?;
    let channel = assemble_channel(&ta, &rx_grid(&a, &partition_rx(&a, 1, 1)?, 1.0)?, &a)?;
    let sub_s = eigen_spectrum(&assemble_shift_invariant(&ta, |du, dv| Complex64::new(ga.eval(du, dv), 0.0))?)?;
    let np_s = eigen_spectrum(&assemble_shift_invariant(&tb, |du, dv| gb.eval(du, dv))?)?;
    let p = &tb.points;
    let comp_s = eigen_spectrum(&assemble_self_adjoint(&tb, |i, j| comp.eval(&p[i], &p[j]))?)?;
    let ch_s = singular_spectrum(&channel)?;
    let mercer_worst = [&sub_s, &np_s, &comp_s, &ch_s].iter().map(|s| mercer(s)).fold(0.0, f64::max);
    // The diagonal of a difference kernel is its value at zero shift.
    let analytic = rel(sub_s.trace, ga.eval(0.0, 0.0) * a.tx_area());
    let mercer_ok = mercer_worst <= 1e-6 && analytic <= 1e-6;
    notes.push(format!("trace/Frobenius worst {mercer_worst:.1e}"));

    // Support measure against the clipped polygon area.
    let mut measure_worst: f64 = 0.0;
    for theta in [0.2, 0.5, 0.8, 1.1] {
        for phi in [-1.0, 0.0, 0.4, FRAC_PI_6] {
            for (alpha, beta) in [(0.0, FRAC_PI_2), (0.3, 1.0), (-0.7, 0.2), (1.2, -0.5), (0.0, 0.0)] {
                let dep = setup_paraxial(theta, phi)?.with_orientation(alpha, beta);
                if let Ok(s) = support_paraxial(&dep) {
                    measure_worst = measure_worst.max(rel(s.polygon_area(), s.measure));
                }
            }
        }
    }
    for s in supports_nonparax(&b, &partition_rx(&b, 8, 8)?)? {
        measure_worst = measure_worst.max(rel(s.polygon_area(), s.measure));
    }
    let measure_ok = measure_worst <= 1e-9;
    notes.push(format!("measure vs polygon worst {measure_worst:.1e}"));

    // Optimal orientation against a dense angular grid.
    let mut argmax_ok = true;
    let steps = 721;
    for c in [
        Vec3::new(0.3, 1.0, 0.2),
        Vec3::new(-2.0, 1.5, 0.7),
        Vec3::new(0.5, -1.0, -0.8),
        Vec3::new(0.0, 3.0, -1.0),
        Vec3::new(1.0, 0.2, 0.1),
    ] {
        let (alpha, beta) = optimal_orientation(c)?;
        let best = upsilon_explicit(c, alpha, beta).abs();
        let closed = c.y.abs() / c.norm();
        let mut grid_max: f64 = 0.0;
        let mut grid_arg = (0.0, 0.0);
        for i in 0..steps {
            let a = -FRAC_PI_2 + PI * i as f64 / (steps - 1) as f64;
            for j in 0..steps {
                let bt = -FRAC_PI_2 + PI * j as f64 / (steps - 1) as f64;
                let u = upsilon_explicit(c, a, bt).abs();
                if u > grid_max {
                    grid_max = u;
                    grid_arg = (a, bt);
                }
            }
        }
        let step = PI / (steps - 1) as f64;
        let near = |x: f64, y: f64| {
            let d = (x - y).rem_euclid(PI);
            d.min(PI - d) <= step
        };
        argmax_ok &= rel(best, closed) <= 1e-12
            && grid_max <= best * (1.0 + 1e-12)
            && near(grid_arg.0, alpha)
            && near(grid_arg.1, beta);
    }
    notes.push(format!("orientation argmax {}", if argmax_ok { "confirmed" } else { "mismatch" }));

    // Squared singular values against the Gram eigenvalues.
    let svd = svd_spectrum(&channel)?;
    let top = ch_s.max();
    let svd_worst = svd
        .eigs
        .iter()
        .zip(&ch_s.eigs)
        .map(|(x, y)| (x - y).abs() / top)
        .fold(0.0, f64::max);
    let svd_ok = svd_worst <= 1e-6;
    notes.push(format!("SVD vs eigen worst {svd_worst:.1e}"));

    Ok((mercer_ok && measure_ok && argmax_ok && svd_ok, notes.join("; ")))
}
