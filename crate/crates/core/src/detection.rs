//! Threshold detectors behind polarization analyzers, heralding on the SFG
//! photon, and dark-count mixing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Result, SimError};
use crate::fock::{
    expectation_of_product, DensityOperator, LocalOperator, ModeLabel, PureState, Register,
};
use crate::optics::modes::{self, label};

/// Click/no-click detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Dark-count probability per coincidence window.
    pub dark_prob: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_prob: f64) -> Result<Self> {
        let d = DetectorModel {
            efficiency,
            dark_prob,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn ideal() -> Self {
        DetectorModel {
            efficiency: 1.0,
            dark_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("detector efficiency", self.efficiency)?;
        check_unit("dark-count probability", self.dark_prob)?;
        if self.dark_prob >= 1.0 {
            return Err(SimError::InvalidParameter {
                name: "dark-count probability".into(),
                value: self.dark_prob,
                reason: "must be below 1",
            });
        }
        Ok(())
    }

    /// Probability of no click given `n` incident photons.
    pub fn no_click(&self, n: u8) -> f64 {
        (1.0 - self.dark_prob) * (1.0 - self.efficiency).powi(n as i32)
    }

    pub fn click(&self, n: u8) -> f64 {
        1.0 - self.no_click(n)
    }
}

/// Output port of a polarization analyzer: transmitted (H) or reflected (V).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    H,
    V,
}

/// Half-wave-plate angle in front of a PBS; 0 measures Z, π/4 measures X.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub theta: f64,
}

impl AnalyzerSetting {
    pub const Z: AnalyzerSetting = AnalyzerSetting { theta: 0.0 };
    pub const X: AnalyzerSetting = AnalyzerSetting {
        theta: std::f64::consts::FRAC_PI_4,
    };

    pub fn new(theta: f64) -> Self {
        AnalyzerSetting { theta }
    }
}

/// Linear map of the analyzer rotation: `H† → cosθ H† + sinθ V†`, `V† → −sinθ H† + cosθ V†`.
pub fn analyzer_map(theta: f64) -> [[Complex64; 2]; 2] {
    let (c, s) = (theta.cos(), theta.sin());
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

/// Click element of the detector behind `port` of the analyzer on the
/// `(H, V)` mode pair, summed up to `n_max` photons.
pub fn threshold_povm(
    analyzer: (&ModeLabel, &ModeLabel),
    port: Port,
    setting: AnalyzerSetting,
    det: &DetectorModel,
    n_max: u32,
) -> Result<LocalOperator> {
    det.validate()?;
    let det = *det;
    Ok(LocalOperator::rotated_diagonal(
        analyzer.0,
        analyzer.1,
        n_max,
        analyzer_map(setting.theta),
        move |h, v| det.click(if port == Port::H { h } else { v }),
    )?)
}

/// Complement of [`threshold_povm`].
pub fn no_click_povm(
    analyzer: (&ModeLabel, &ModeLabel),
    port: Port,
    setting: AnalyzerSetting,
    det: &DetectorModel,
    n_max: u32,
) -> Result<LocalOperator> {
    det.validate()?;
    let det = *det;
    Ok(LocalOperator::rotated_diagonal(
        analyzer.0,
        analyzer.1,
        n_max,
        analyzer_map(setting.theta),
        move |h, v| det.no_click(if port == Port::H { h } else { v }),
    )?)
}

/// Polarization the SFG photon is projected on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeraldBasis {
    D,
    A,
}

impl HeraldBasis {
    /// `(H, V)` amplitudes of the one-photon projector.
    pub fn amplitudes(self) -> (f64, f64) {
        let s = 0.5f64.sqrt();
        match self {
            HeraldBasis::D => (s, s),
            HeraldBasis::A => (s, -s),
        }
    }
}

/// `Tr_{a,b,c}[η_d |l⟩⟨l|_c ρ]`: heralds on one SFG photon in polarization `l`.
/// Fails when any term carries more than one photon in the `c` modes.
pub fn herald_projection(
    rho: &DensityOperator,
    basis: HeraldBasis,
    det: &DetectorModel,
) -> Result<DensityOperator> {
    det.validate()?;
    let reg = rho.register();
    let [ch, cv] = modes::sfg_outputs();
    let (ich, icv) = (reg.index_of(&ch)?, reg.index_of(&cv)?);
    for (k, b, _) in rho.entries() {
        for occ in [k, b] {
            let n = occ.get(ich) as u32 + occ.get(icv) as u32;
            if n > 1 {
                return Err(SimError::Approximation(format!(
                    "{n} photons in the SFG output modes"
                )));
            }
        }
    }
    let (h, v) = basis.amplitudes();
    let bra = PureState::from_terms(
        Register::new([ch, cv])?,
        1,
        vec![
            (vec![1, 0], Complex64::new(h, 0.0)),
            (vec![0, 1], Complex64::new(v, 0.0)),
        ],
    )?;
    let projected = rho.contract(&bra)?.scaled(det.efficiency);
    let rest: Vec<ModeLabel> = modes::bsa_inputs()
        .into_iter()
        .filter(|m| projected.register().contains(m))
        .collect();
    Ok(projected.partial_trace(&rest)?)
}

/// One of the four two-detector coincidences; first letter is the `d` port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coincidence {
    HH,
    HV,
    VH,
    VV,
}

impl Coincidence {
    pub const ALL: [Coincidence; 4] = [
        Coincidence::HH,
        Coincidence::HV,
        Coincidence::VH,
        Coincidence::VV,
    ];

    pub fn ports(self) -> (Port, Port) {
        match self {
            Coincidence::HH => (Port::H, Port::H),
            Coincidence::HV => (Port::H, Port::V),
            Coincidence::VH => (Port::V, Port::H),
            Coincidence::VV => (Port::V, Port::V),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Coincidence::HH => "HH",
            Coincidence::HV => "HV",
            Coincidence::VH => "VH",
            Coincidence::VV => "VV",
        }
    }
}

/// Detection efficiencies of the four analyzer outputs plus a shared dark
/// probability for them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationEfficiencies {
    pub d_h: f64,
    pub d_v: f64,
    pub e_h: f64,
    pub e_v: f64,
    #[serde(default)]
    pub dark: f64,
}

impl StationEfficiencies {
    pub fn uniform(eta: f64) -> Self {
        StationEfficiencies {
            d_h: eta,
            d_v: eta,
            e_h: eta,
            e_v: eta,
            dark: 0.0,
        }
    }

    pub fn detector(&self, party: Party, port: Port) -> DetectorModel {
        let efficiency = match (party, port) {
            (Party::D, Port::H) => self.d_h,
            (Party::D, Port::V) => self.d_v,
            (Party::E, Port::H) => self.e_h,
            (Party::E, Port::V) => self.e_v,
        };
        DetectorModel {
            efficiency,
            dark_prob: self.dark,
        }
    }
}

/// The two remote stations receiving the swapped photons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    D,
    E,
}

impl Party {
    pub fn modes(self) -> (ModeLabel, ModeLabel) {
        match self {
            Party::D => (label(modes::D_H), label(modes::D_V)),
            Party::E => (label(modes::E_H), label(modes::E_V)),
        }
    }
}

/// `Tr[Π_d(θ₁) Π_e(θ₂) ρ]` for the requested pair of ports.
pub fn coincidence_prob(
    rho: &DensityOperator,
    settings: (AnalyzerSetting, AnalyzerSetting),
    which: Coincidence,
    eff: &StationEfficiencies,
) -> Result<f64> {
    let (pd, pe) = which.ports();
    let n_max = rho.max_photons();
    let (dh, dv) = Party::D.modes();
    let (eh, ev) = Party::E.modes();
    let od = threshold_povm(
        (&dh, &dv),
        pd,
        settings.0,
        &eff.detector(Party::D, pd),
        n_max,
    )?;
    let oe = threshold_povm(
        (&eh, &ev),
        pe,
        settings.1,
        &eff.detector(Party::E, pe),
        n_max,
    )?;
    Ok(expectation_of_product(&[&od, &oe], rho)?)
}

/// Coincidence probability on the unheralded state `Tr_{a,b}|ψ⟩⟨ψ|`.
pub fn accidental_prob(
    psi_in: &PureState,
    settings: (AnalyzerSetting, AnalyzerSetting),
    which: Coincidence,
    eff: &StationEfficiencies,
) -> Result<f64> {
    coincidence_prob(&accidental_state(psi_in)?, settings, which, eff)
}

/// `Tr_{a,b}|ψ⟩⟨ψ|`.
pub fn accidental_state(psi_in: &PureState) -> Result<DensityOperator> {
    let rest: Vec<ModeLabel> = modes::bsa_inputs()
        .into_iter()
        .filter(|m| psi_in.register().contains(m))
        .collect();
    Ok(DensityOperator::from_pure(psi_in).partial_trace(&rest)?)
}

/// `p_sfg (1 − dark) + dark · p_acd`.
pub fn mix_dark_counts(p_sfg: f64, p_acd: f64, dark: f64) -> f64 {
    p_sfg * (1.0 - dark) + dark * p_acd
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Occupation;

    fn de_register() -> Register {
        Register::new([modes::D_H, modes::D_V, modes::E_H, modes::E_V]).unwrap()
    }

    fn phi_minus() -> DensityOperator {
        let s = 0.5f64.sqrt();
        let psi = PureState::from_terms(
            de_register(),
            2,
            vec![
                (vec![1, 0, 1, 0], Complex64::new(s, 0.0)),
                (vec![0, 1, 0, 1], Complex64::new(-s, 0.0)),
            ],
        )
        .unwrap();
        DensityOperator::from_pure(&psi)
    }

    #[test]
    fn click_probabilities() {
        let det = DetectorModel::new(0.097, 0.0).unwrap();
        let (h, v) = (label("dH"), label("dV"));
        let op = threshold_povm((&h, &v), Port::H, AnalyzerSetting::Z, &det, 2).unwrap();
        let reg = Register::new(["dH", "dV"]).unwrap();
        let one =
            DensityOperator::from_pure(&PureState::fock(reg.clone(), 2, &[("dH", 1)]).unwrap());
        assert!((op.expectation(&one).unwrap() - 0.097).abs() < 1e-15);
        let two = DensityOperator::from_pure(&PureState::fock(reg, 2, &[("dH", 2)]).unwrap());
        assert!((op.expectation(&two).unwrap() - (1.0 - 0.903f64.powi(2))).abs() < 1e-15);
        assert!(DetectorModel::new(1.1, 0.0).is_err());
    }

    #[test]
    fn unit_efficiency_single_photon_projector() {
        let (h, v) = (label("dH"), label("dV"));
        let op = threshold_povm(
            (&h, &v),
            Port::H,
            AnalyzerSetting::Z,
            &DetectorModel::ideal(),
            1,
        )
        .unwrap();
        let one_h = Occupation::from_counts(&[1, 0]);
        assert!((op.entry(&one_h, &one_h).re - 1.0).abs() < 1e-15);
        assert_eq!(op.entries().count(), 1);
    }

    #[test]
    fn bell_state_statistics() {
        let rho = phi_minus();
        let eff = StationEfficiencies::uniform(1.0);
        let z = (AnalyzerSetting::Z, AnalyzerSetting::Z);
        let x = (AnalyzerSetting::X, AnalyzerSetting::X);
        assert!((coincidence_prob(&rho, z, Coincidence::HH, &eff).unwrap() - 0.5).abs() < 1e-14);
        assert!(
            coincidence_prob(&rho, z, Coincidence::HV, &eff)
                .unwrap()
                .abs()
                < 1e-14
        );
        assert!(
            coincidence_prob(&rho, x, Coincidence::HH, &eff)
                .unwrap()
                .abs()
                < 1e-14
        );
        assert!((coincidence_prob(&rho, x, Coincidence::HV, &eff).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn herald_on_orthogonal_polarization_vanishes() {
        let reg = Register::new([modes::C_H, modes::C_V, modes::D_H]).unwrap();
        let s = 0.5f64.sqrt();
        let d = PureState::from_terms(
            reg.clone(),
            2,
            vec![
                (vec![1, 0, 1], Complex64::new(s, 0.0)),
                (vec![0, 1, 1], Complex64::new(s, 0.0)),
            ],
        )
        .unwrap();
        let det = DetectorModel::new(0.85, 0.0).unwrap();
        let rho = DensityOperator::from_pure(&d);
        assert!(
            herald_projection(&rho, HeraldBasis::A, &det)
                .unwrap()
                .trace()
                .abs()
                < 1e-15
        );
        assert!(
            (herald_projection(&rho, HeraldBasis::D, &det)
                .unwrap()
                .trace()
                - 0.85)
                .abs()
                < 1e-15
        );
        let two = DensityOperator::from_pure(&PureState::fock(reg, 2, &[(modes::C_H, 2)]).unwrap());
        assert!(matches!(
            herald_projection(&two, HeraldBasis::A, &det),
            Err(SimError::Approximation(_))
        ));
    }

    #[test]
    fn dark_mixing() {
        assert_eq!(mix_dark_counts(0.3, 0.7, 0.0), 0.3);
        assert!((mix_dark_counts(0.3, 0.3, 0.2) - 0.3).abs() < 1e-16);
    }
}
