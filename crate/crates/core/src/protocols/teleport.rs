use num_complex::Complex64;
use serde::Serialize;

use super::params::ExperimentParams;
use crate::detection::{herald_projection, DetectorModel, HeraldBasis};
use crate::error::{Result, SimError};
use crate::fock::{DensityOperator, ModeLabel, PureState, Register};
use crate::optics::modes::{self, label};
use crate::optics::{apply_loss, apply_sfg_first_order, qfc_mode_transform, tmsv_pair};

/// Polarized coherent state `|√N α⟩_H |√N β⟩_V` on two modes, truncated to
/// at most `cap` photons and renormalized. Returns the state and the weight
/// removed by the truncation.
pub fn coherent_polarized(
    modes: (&ModeLabel, &ModeLabel),
    polarization: (Complex64, Complex64),
    mean_photons: f64,
    cap: u32,
) -> Result<(PureState, f64)> {
    let (alpha, beta) = normalize_polarization(polarization)?;
    if !(mean_photons >= 0.0) {
        return Err(SimError::InvalidParameter {
            name: "mean_photons".into(),
            value: mean_photons,
            reason: "must be nonnegative",
        });
    }
    let reg = Register::new([modes.0.clone(), modes.1.clone()])?;
    let amp_h = alpha * mean_photons.sqrt();
    let amp_v = beta * mean_photons.sqrt();
    let pref = (-mean_photons / 2.0).exp();
    let mut terms = Vec::new();
    for m in 0..=cap {
        for n in 0..=(cap - m) {
            let norm = (crate::fock::factorial(m) * crate::fock::factorial(n)).sqrt();
            terms.push((
                vec![m as u8, n as u8],
                amp_h.powu(m) * amp_v.powu(n) * pref / norm,
            ));
        }
    }
    let psi = PureState::from_terms(reg, cap, terms)?;
    let dropped = (1.0 - psi.norm_sqr()).max(0.0);
    Ok((psi.normalized()?, dropped))
}

fn normalize_polarization(p: (Complex64, Complex64)) -> Result<(Complex64, Complex64)> {
    let n = (p.0.norm_sqr() + p.1.norm_sqr()).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(SimError::InvalidParameter {
            name: "polarization".into(),
            value: n,
            reason: "needs a nonzero amplitude",
        });
    }
    Ok((p.0 / n, p.1 / n))
}

/// Overlap of the one-photon block of a polarization state with a target.
fn one_photon_fidelity(
    rho: &DensityOperator,
    h: &ModeLabel,
    v: &ModeLabel,
    target: (Complex64, Complex64),
) -> Result<f64> {
    let (ih, iv) = (rho.register().index_of(h)?, rho.register().index_of(v)?);
    let mut block = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (k, b, val) in rho.entries() {
        let slot = |o: &crate::fock::Occupation| match (o.get(ih), o.get(iv)) {
            (1, 0) => Some(0),
            (0, 1) => Some(1),
            _ => None,
        };
        let others_match = (0..k.len()).all(|i| i == ih || i == iv || k.get(i) == b.get(i));
        if let (Some(i), Some(j), true) = (slot(k), slot(b), others_match) {
            block[i][j] += val;
        }
    }
    let tr = block[0][0].re + block[1][1].re;
    if !(tr > 0.0) {
        return Err(SimError::Approximation(
            "no one-photon component in the output".into(),
        ));
    }
    let t = [target.0, target.1];
    let mut f = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            f += t[i].conj() * block[i][j] * t[j];
        }
    }
    Ok(f.re / tr)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TeleportReport {
    /// Fidelity of the one-photon part of the output to the input polarization.
    pub fidelity: f64,
    /// Probability of a genuine herald.
    pub herald_prob: f64,
    /// Weight removed by truncating the coherent input.
    pub truncation_weight: f64,
}

/// Teleport the polarization of a weak coherent pulse in `b` onto the
/// partner `d` of the photon in `a`, heralded by a D-polarized SFG photon.
pub fn teleport(
    params: &ExperimentParams,
    polarization: (Complex64, Complex64),
    mean_photons: f64,
) -> Result<TeleportReport> {
    params.validate()?;
    let target = normalize_polarization(polarization)?;
    let pair = tmsv_pair(
        &params.eps1,
        (&label(modes::A_H), &label(modes::A_V)),
        (&label(modes::D_H), &label(modes::D_V)),
        params.pair_cap,
    )?;
    let cap = 2 * params.pair_cap;
    let (input, truncation_weight) = coherent_polarized(
        (&label(modes::B_H), &label(modes::B_V)),
        polarization,
        mean_photons,
        cap,
    )?;
    let psi = pair.tensor(&input)?;
    let rho = DensityOperator::from_pure(&psi);
    let lossy = apply_loss(&rho, &params.source_losses()?)?;
    let converted = apply_sfg_first_order(
        &lossy.with_vacuum_modes(&modes::sfg_outputs())?,
        &params.sfg,
    )?;
    let transmitted = apply_loss(&converted, &params.herald_losses()?)?;
    let rho_sfg = herald_projection(
        &transmitted,
        HeraldBasis::D,
        &DetectorModel::new(params.eta_d, 0.0)?,
    )?;
    let rest: Vec<ModeLabel> = modes::bsa_inputs().into_iter().collect();
    let accidental = DensityOperator::from_pure(&psi).partial_trace(&rest)?;
    let herald = rho_sfg.add(&accidental.scaled(params.dark))?;
    let fidelity = one_photon_fidelity(&herald, &label(modes::D_H), &label(modes::D_V), target)?;
    Ok(TeleportReport {
        fidelity,
        herald_prob: rho_sfg.trace(),
        truncation_weight,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QfcReport {
    /// Normalized state of `d` after a D-polarized converted photon is detected.
    pub output: DensityOperator,
    pub fidelity: f64,
    pub herald_prob: f64,
}

/// Treat the light in `b` as a classical pump `(α, β)` that converts the
/// photon in `a` to `c` by the exact mode rotation, then herald on one
/// D-polarized photon in `c`. `pair` must live on `aH aV dH dV`.
pub fn qfc_teleport_strong_pump(
    alpha: Complex64,
    beta: Complex64,
    chi_tau: f64,
    pair: &PureState,
) -> Result<QfcReport> {
    let target = normalize_polarization((alpha, beta))?;
    let psi = pair.with_vacuum_modes(&modes::sfg_outputs())?;
    let converted = qfc_mode_transform(&psi, alpha, beta, chi_tau)?;
    let s = 0.5f64.sqrt();
    let bra = PureState::from_terms(
        Register::new([modes::C_H, modes::C_V])?,
        1,
        vec![
            (vec![1, 0], Complex64::new(s, 0.0)),
            (vec![0, 1], Complex64::new(s, 0.0)),
        ],
    )?;
    let heralded = converted.contract(&bra)?;
    let rho = DensityOperator::from_pure(&heralded)
        .partial_trace(&[label(modes::A_H), label(modes::A_V)])?;
    let herald_prob = rho.trace();
    let output = rho.normalized()?;
    let fidelity = one_photon_fidelity(&output, &label(modes::D_H), &label(modes::D_V), target)?;
    Ok(QfcReport {
        output,
        fidelity,
        herald_prob,
    })
}
