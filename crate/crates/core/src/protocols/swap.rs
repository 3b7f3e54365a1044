use serde::Serialize;

use super::params::ExperimentParams;
use crate::detection::{
    accidental_state, coincidence_prob, herald_projection, mix_dark_counts, threshold_povm,
    AnalyzerSetting, Coincidence, DetectorModel, Party, Port, StationEfficiencies,
};
use crate::efficiency::fidelity_lower_bound;
use crate::error::Result;
use crate::fock::{expectation_of_product, DensityOperator, PureState};
use crate::optics::modes::{self, label};
use crate::optics::{apply_loss, apply_sfg_first_order, build_swapping_input, pbs_mix};

/// Coincidence probabilities in the order HH, HV, VH, VV.
pub type CoincidenceTable = [f64; 4];

/// Correlation contrast of a Z-basis table.
pub fn visibility_z(p: &CoincidenceTable) -> f64 {
    let [hh, hv, vh, vv] = *p;
    (hh + vv - hv - vh) / (hh + hv + vh + vv)
}

/// Correlation contrast of an X-basis table (anticorrelated target).
pub fn visibility_x(p: &CoincidenceTable) -> f64 {
    let [hh, hv, vh, vv] = *p;
    (hv + vh - hh - vv) / (hh + hv + vh + vv)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisibilityReport {
    pub v_z: f64,
    pub v_x: f64,
    pub f_low: f64,
    /// Probability of a genuine herald event.
    pub herald_prob: f64,
    pub z_table: CoincidenceTable,
    pub x_table: CoincidenceTable,
}

impl VisibilityReport {
    fn from_tables(z_table: CoincidenceTable, x_table: CoincidenceTable, herald_prob: f64) -> Self {
        let v_z = visibility_z(&z_table);
        let v_x = visibility_x(&x_table);
        VisibilityReport {
            v_z,
            v_x,
            f_low: fidelity_lower_bound(v_z, v_x),
            herald_prob,
            z_table,
            x_table,
        }
    }

    /// `key = value` lines.
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("V_Z = {:.6}\n", self.v_z));
        s.push_str(&format!("V_X = {:.6}\n", self.v_x));
        s.push_str(&format!("F_low = {:.6}\n", self.f_low));
        s.push_str(&format!("herald_prob = {:.6e}\n", self.herald_prob));
        for (basis, table) in [("Z", &self.z_table), ("X", &self.x_table)] {
            for (c, p) in Coincidence::ALL.iter().zip(table.iter()) {
                s.push_str(&format!("P_{}_{} = {:.6e}\n", basis, c.name(), p));
            }
        }
        s
    }
}

/// Intermediate products of the SFG herald.
#[derive(Clone, Debug)]
pub struct SfgHerald {
    /// Input state before losses.
    pub psi_in: PureState,
    /// Unnormalized state of `d`, `e` after a genuine herald; trace = herald probability.
    pub rho_sfg: DensityOperator,
    /// `Tr_{a,b}|ψ_in⟩⟨ψ_in|`, the state left behind by a dark-count herald.
    pub accidental: DensityOperator,
}

/// Input state, source losses, SFG, herald-path loss and projection of the SFG photon.
pub fn sfg_herald(params: &ExperimentParams) -> Result<SfgHerald> {
    params.validate()?;
    let psi_in = build_swapping_input(&params.eps1, &params.eps2, params.pair_cap)?;
    let rho = DensityOperator::from_pure(&psi_in);
    let lossy = apply_loss(&rho, &params.source_losses()?)?;
    let with_c = lossy.with_vacuum_modes(&modes::sfg_outputs())?;
    let converted = apply_sfg_first_order(&with_c, &params.sfg)?;
    let transmitted = apply_loss(&converted, &params.herald_losses()?)?;
    let herald = DetectorModel::new(params.eta_d, 0.0)?;
    let rho_sfg = herald_projection(&transmitted, params.herald, &herald)?;
    let accidental = accidental_state(&psi_in)?;
    Ok(SfgHerald {
        psi_in,
        rho_sfg,
        accidental,
    })
}

fn table(
    rho: &DensityOperator,
    setting: AnalyzerSetting,
    eff: &StationEfficiencies,
) -> Result<CoincidenceTable> {
    let mut out = [0.0; 4];
    for (slot, which) in out.iter_mut().zip(Coincidence::ALL) {
        *slot = coincidence_prob(rho, (setting, setting), which, eff)?;
    }
    Ok(out)
}

/// Visibilities of the state swapped by the SFG analyzer, including
/// accidental heralds from dark counts of the herald detector.
pub fn sfg_swap(params: &ExperimentParams) -> Result<VisibilityReport> {
    let h = sfg_herald(params)?;
    let mut tables = [[0.0; 4]; 2];
    for (t, setting) in tables
        .iter_mut()
        .zip([AnalyzerSetting::Z, AnalyzerSetting::X])
    {
        let sfg = table(&h.rho_sfg, setting, &params.stations)?;
        let acd = table(&h.accidental, setting, &params.stations)?;
        for i in 0..4 {
            t[i] = mix_dark_counts(sfg[i], acd[i], params.dark);
        }
    }
    Ok(VisibilityReport::from_tables(
        tables[0],
        tables[1],
        h.rho_sfg.trace(),
    ))
}

/// Visibilities of the state swapped by a polarizing beamsplitter followed
/// by X-basis detection of both outputs, from four-fold coincidences.
pub fn lo_swap(params: &ExperimentParams) -> Result<VisibilityReport> {
    params.validate()?;
    let psi_in = build_swapping_input(&params.eps1, &params.eps2, params.pair_cap)?;
    let rho = DensityOperator::from_pure(&psi_in);
    let mixed = pbs_mix(&apply_loss(&rho, &params.source_losses()?)?)?;
    let n_max = mixed.max_photons();
    let bsa = DetectorModel::new(params.eta_d, 0.0)?;
    let (ah, av, bh, bv) = (
        label(modes::A_H),
        label(modes::A_V),
        label(modes::B_H),
        label(modes::B_V),
    );
    let anti = threshold_povm((&ah, &av), Port::V, AnalyzerSetting::X, &bsa, n_max)?;
    let diag = threshold_povm((&bh, &bv), Port::H, AnalyzerSetting::X, &bsa, n_max)?;
    let herald_prob = expectation_of_product(&[&anti, &diag], &mixed)?;
    let (dh, dv) = Party::D.modes();
    let (eh, ev) = Party::E.modes();
    let mut tables = [[0.0; 4]; 2];
    for (t, setting) in tables
        .iter_mut()
        .zip([AnalyzerSetting::Z, AnalyzerSetting::X])
    {
        for (slot, which) in t.iter_mut().zip(Coincidence::ALL) {
            let (pd, pe) = which.ports();
            let od = threshold_povm(
                (&dh, &dv),
                pd,
                setting,
                &params.stations.detector(Party::D, pd),
                n_max,
            )?;
            let oe = threshold_povm(
                (&eh, &ev),
                pe,
                setting,
                &params.stations.detector(Party::E, pe),
                n_max,
            )?;
            *slot = expectation_of_product(&[&od, &oe, &anti, &diag], &mixed)?;
        }
    }
    Ok(VisibilityReport::from_tables(
        tables[0],
        tables[1],
        herald_prob,
    ))
}
