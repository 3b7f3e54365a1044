//! Sources, loss channels, the first-order SFG interaction, PBS mixing and
//! the frequency-conversion rotation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_unit, Result, SimError};
use crate::fock::{
    DensityOperator, ModeLabel, Occupation, PureState, Register, TraceMeaning, Truncation,
};

/// Mode names used by the swapping and teleportation pipelines.
pub mod modes {
    use crate::fock::{ModeLabel, Register};

    pub const A_H: &str = "aH";
    pub const A_V: &str = "aV";
    pub const B_H: &str = "bH";
    pub const B_V: &str = "bV";
    pub const C_H: &str = "cH";
    pub const C_V: &str = "cV";
    pub const D_H: &str = "dH";
    pub const D_V: &str = "dV";
    pub const E_H: &str = "eH";
    pub const E_V: &str = "eV";

    pub fn label(name: &str) -> ModeLabel {
        ModeLabel::new(name)
    }

    /// `[aH aV dH dV bH bV eH eV]`.
    pub fn swap_register() -> Register {
        Register::new([A_H, A_V, D_H, D_V, B_H, B_V, E_H, E_V]).expect("distinct labels")
    }

    pub fn bsa_inputs() -> [ModeLabel; 4] {
        [label(A_H), label(A_V), label(B_H), label(B_V)]
    }

    pub fn sfg_outputs() -> [ModeLabel; 2] {
        [label(C_H), label(C_V)]
    }
}

/// One entangled-photon source: a two-mode squeezed vacuum per polarization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    pub mu_h: f64,
    pub mu_v: f64,
}

impl SourceParams {
    pub fn new(mu_h: f64, mu_v: f64) -> Result<Self> {
        let s = SourceParams { mu_h, mu_v };
        s.validate()?;
        Ok(s)
    }

    pub fn symmetric(mu: f64) -> Result<Self> {
        Self::new(mu, mu)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonnegative("mu_h", self.mu_h)?;
        check_nonnegative("mu_v", self.mu_v)
    }

    pub fn gamma_h(&self) -> f64 {
        gamma(self.mu_h)
    }

    pub fn gamma_v(&self) -> f64 {
        gamma(self.mu_v)
    }
}

/// Pair-emission amplitude ratio `√(μ/(1+μ))`.
pub fn gamma(mu: f64) -> f64 {
    (mu / (1.0 + mu)).sqrt()
}

/// Single-photon SFG efficiencies per polarization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfgParams {
    pub eta_h: f64,
    pub eta_v: f64,
}

impl SfgParams {
    pub fn new(eta_h: f64, eta_v: f64) -> Result<Self> {
        let s = SfgParams { eta_h, eta_v };
        s.validate()?;
        Ok(s)
    }

    pub fn symmetric(eta: f64) -> Result<Self> {
        Self::new(eta, eta)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("eta_h", self.eta_h)?;
        check_unit("eta_v", self.eta_v)
    }

    /// Both efficiencies multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(self.eta_h * gain, self.eta_v * gain)
    }
}

/// Per-mode transmittances; modes not listed are lossless.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossMap {
    channels: BTreeMap<ModeLabel, f64>,
}

impl LossMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, mode: &str, t: f64) -> Result<Self> {
        self.set(mode, t)?;
        Ok(self)
    }

    pub fn set(&mut self, mode: &str, t: f64) -> Result<()> {
        check_unit(&format!("transmittance of {mode}"), t)?;
        self.channels.insert(ModeLabel::new(mode), t);
        Ok(())
    }

    pub fn get(&self, mode: &str) -> f64 {
        self.channels
            .get(&ModeLabel::new(mode))
            .copied()
            .unwrap_or(1.0)
    }

    /// Sub-map restricted to the listed modes.
    pub fn select(&self, modes: &[ModeLabel]) -> LossMap {
        let channels = self
            .channels
            .iter()
            .filter(|(m, _)| modes.contains(m))
            .map(|(m, t)| (m.clone(), *t))
            .collect();
        LossMap { channels }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeLabel, f64)> {
        self.channels.iter().map(|(m, t)| (m, *t))
    }

    /// Every transmittance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<LossMap> {
        let mut out = LossMap::new();
        for (m, t) in self.iter() {
            out.set(m.as_str(), t * factor)?;
        }
        Ok(out)
    }
}

/// Truncated two-mode squeezed vacuum over `(signal H, signal V, idler H, idler V)`,
/// keeping terms with at most `pair_cap` pairs and renormalizing.
pub fn tmsv_pair(
    src: &SourceParams,
    signal: (&ModeLabel, &ModeLabel),
    idler: (&ModeLabel, &ModeLabel),
    pair_cap: u32,
) -> Result<PureState> {
    src.validate()?;
    let register = Register::new([
        signal.0.clone(),
        signal.1.clone(),
        idler.0.clone(),
        idler.1.clone(),
    ])?;
    let (gh, gv) = (src.gamma_h(), src.gamma_v());
    let pref = ((1.0 - gh * gh) * (1.0 - gv * gv)).sqrt();
    let mut terms = Vec::new();
    for k in 0..=pair_cap {
        for l in 0..=(pair_cap - k) {
            let amp = pref * gh.powi(k as i32) * gv.powi(l as i32);
            terms.push((
                vec![k as u8, l as u8, k as u8, l as u8],
                Complex64::new(amp, 0.0),
            ));
        }
    }
    Ok(PureState::from_terms(register, 2 * pair_cap, terms)?.normalized()?)
}

/// `|ψ⟩_ad ⊗ |ψ⟩_be` over [`modes::swap_register`], truncated to at most
/// `pair_cap` pairs in total and renormalized.
pub fn build_swapping_input(
    eps1: &SourceParams,
    eps2: &SourceParams,
    pair_cap: u32,
) -> Result<PureState> {
    use modes::*;
    let first = tmsv_pair(
        eps1,
        (&label(A_H), &label(A_V)),
        (&label(D_H), &label(D_V)),
        pair_cap,
    )?;
    let second = tmsv_pair(
        eps2,
        (&label(B_H), &label(B_V)),
        (&label(E_H), &label(E_V)),
        pair_cap,
    )?;
    let cap = 2 * pair_cap;
    let joint = first
        .tensor(&second)?
        .filter(|k| k.total() <= cap)
        .with_max_photons(cap);
    Ok(joint.normalized()?)
}

/// Attenuate each listed mode by mixing it with a vacuum ancilla on a
/// splitter of transmittance `t` and tracing the ancilla out.
pub fn apply_loss(rho: &DensityOperator, losses: &LossMap) -> Result<DensityOperator> {
    let mut out = rho.clone();
    for (mode, t) in losses.iter() {
        check_unit(&format!("transmittance of {mode}"), t)?;
        rho.register().index_of(mode)?;
        if t == 1.0 {
            continue;
        }
        let anc = mode.ancilla();
        let theta = t.sqrt().acos();
        out = out
            .with_vacuum_modes(std::slice::from_ref(&anc))?
            .two_mode_rotation(mode, &anc, theta, 0.0)?
            .partial_trace(std::slice::from_ref(&anc))?;
    }
    Ok(out)
}

/// Same channel on a pure input, returned as one unnormalized branch per
/// number of photons lost from each mode (Kraus form).
pub fn loss_kraus_branches(psi: &PureState, losses: &LossMap) -> Result<Vec<PureState>> {
    let mut branches = vec![psi.clone()];
    for (mode, t) in losses.iter() {
        check_unit(&format!("transmittance of {mode}"), t)?;
        let i = psi.register().index_of(mode)?;
        let mut next = Vec::new();
        for b in &branches {
            let n_max = b.terms().map(|(k, _)| k.get(i)).max().unwrap_or(0);
            for lost in 0..=n_max {
                let mut terms = Vec::new();
                for (k, a) in b.terms() {
                    let n = k.get(i);
                    if n < lost {
                        continue;
                    }
                    let c = (crate::fock::binomial(n as u32, lost as u32)
                        * t.powi((n - lost) as i32)
                        * (1.0 - t).powi(lost as i32))
                    .sqrt();
                    let mut counts = k.counts().to_vec();
                    counts[i] = n - lost;
                    terms.push((counts, a * c));
                }
                let s = PureState::from_terms(b.register().clone(), b.max_photons(), terms)?;
                if !s.is_zero() {
                    next.push(s);
                }
            }
        }
        branches = next;
    }
    Ok(branches)
}

/// The converted branch of the first-order SFG interaction,
/// `O |k⟩` with `O = √η_H a_H b_H c_H† + √η_V a_V b_V c_V†`.
pub fn sfg_converted_ket(psi: &PureState, sfg: &SfgParams) -> Result<PureState> {
    use modes::*;
    let h = psi
        .apply_annihilation(&label(A_H))?
        .apply_annihilation(&label(B_H))?
        .apply_creation_with(&label(C_H), Truncation::Disabled)?
        .scaled(Complex64::new(sfg.eta_h.sqrt(), 0.0));
    let v = psi
        .apply_annihilation(&label(A_V))?
        .apply_annihilation(&label(B_V))?
        .apply_creation_with(&label(C_V), Truncation::Disabled)?
        .scaled(Complex64::new(sfg.eta_v.sqrt(), 0.0));
    Ok(h.add(&v)?.with_max_photons(psi.max_photons()))
}

fn check_c_vacuum(rho: &DensityOperator) -> Result<()> {
    for c in modes::sfg_outputs() {
        if rho.max_occupation(&c)? != 0 {
            return Err(crate::fock::FockError::NotVacuum(c.to_string()).into());
        }
    }
    Ok(())
}

/// `O ρ O†` for the converted SFG branch; the trace is the emission probability.
/// The register must already hold vacuum `cH`, `cV` modes.
pub fn apply_sfg_first_order(rho: &DensityOperator, sfg: &SfgParams) -> Result<DensityOperator> {
    sfg.validate()?;
    check_c_vacuum(rho)?;
    let out = rho.map_kets(rho.register(), rho.max_photons(), |k| {
        sfg_converted_ket(k, sfg)
    })?;
    Ok(out.with_meaning(TraceMeaning::EventProbability))
}

/// Both first-order branches: (converted, unconverted). The unconverted
/// branch is the input weighted by its no-emission probability.
pub fn sfg_branches(
    rho: &DensityOperator,
    sfg: &SfgParams,
) -> Result<(DensityOperator, DensityOperator)> {
    let converted = apply_sfg_first_order(rho, sfg)?;
    let keep = (rho.trace() - converted.trace()).max(0.0) / rho.trace().max(f64::MIN_POSITIVE);
    let unconverted = rho
        .scaled(keep)
        .with_meaning(TraceMeaning::EventProbability);
    Ok((converted, unconverted))
}

/// Ideal parity-check Kraus map `√η(|H⟩_c⟨HH|_ab + |V⟩_c⟨VV|_ab)`, valid for
/// inputs with at most two photons in the `a`, `b` modes.
pub fn kraus_parity_check(psi: &PureState, sfg: &SfgParams) -> Result<PureState> {
    use modes::*;
    sfg.validate()?;
    let reg = psi.register();
    let ab: Vec<usize> = bsa_inputs()
        .iter()
        .map(|m| reg.index_of(m))
        .collect::<std::result::Result<_, _>>()?;
    let ch = reg.index_of(&label(C_H))?;
    let cv = reg.index_of(&label(C_V))?;
    let mut terms: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (k, a) in psi.terms() {
        let counts: Vec<u8> = ab.iter().map(|&i| k.get(i)).collect();
        let total: u32 = counts.iter().map(|&n| n as u32).sum();
        if total > 2 {
            return Err(SimError::Approximation(format!(
                "parity check applied to {total} photons in a, b"
            )));
        }
        if k.get(ch) != 0 || k.get(cv) != 0 {
            return Err(crate::fock::FockError::NotVacuum(C_H.to_string()).into());
        }
        let (target, eta) = match counts.as_slice() {
            [1, 0, 1, 0] => (ch, sfg.eta_h),
            [0, 1, 0, 1] => (cv, sfg.eta_v),
            _ => continue,
        };
        let mut out = k.counts().to_vec();
        for &i in &ab {
            out[i] = 0;
        }
        out[target] = 1;
        *terms.entry(Occupation::from_counts(&out)).or_default() += a * eta.sqrt();
    }
    let terms = terms.into_iter().map(|(k, a)| (k.counts().to_vec(), a));
    Ok(PureState::from_terms(
        reg.clone(),
        psi.max_photons(),
        terms,
    )?)
}

/// Polarizing beamsplitter between `a` and `b`: H passes, V is exchanged.
pub fn pbs_mix(rho: &DensityOperator) -> Result<DensityOperator> {
    use modes::*;
    Ok(rho.swap_modes(&label(A_V), &label(B_V))?)
}

/// Pure-state version of [`pbs_mix`].
pub fn pbs_mix_pure(psi: &PureState) -> Result<PureState> {
    use modes::*;
    Ok(psi.swap_modes(&label(A_V), &label(B_V))?)
}

/// Frequency conversion of `a` into `c` driven by a classical pump with
/// polarization amplitudes `(alpha, beta)`:
/// `a_H† → cos(|α|χτ) a_H† + e^{i arg α} sin(|α|χτ) c_H†`, likewise for V.
pub fn qfc_mode_transform(
    psi: &PureState,
    alpha: Complex64,
    beta: Complex64,
    chi_tau: f64,
) -> Result<PureState> {
    use modes::*;
    let h = psi.two_mode_rotation(
        &label(A_H),
        &label(C_H),
        alpha.norm() * chi_tau,
        alpha.arg(),
    )?;
    Ok(h.two_mode_rotation(&label(A_V), &label(C_V), beta.norm() * chi_tau, beta.arg())?)
}
