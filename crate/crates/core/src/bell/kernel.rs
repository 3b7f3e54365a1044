use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::TwoPartyState;
use crate::error::{Result, SimError};
use crate::fock::{DensityOperator, PureState, Register, TraceMeaning};
use crate::optics::modes;
use crate::optics::{gamma, loss_kraus_branches, sfg_converted_ket, SourceParams};
use crate::protocols::ExperimentParams;

/// Pair numbers `(k1H, k1V, k2H, k2V)` of one input term.
type PairConfig = [u8; 4];

/// The SFG herald as a fixed matrix over pair configurations.
///
/// Everything between the sources and the herald click is linear in the
/// input density operator and leaves the station modes alone, so the
/// unnormalized heralded state is `ρ[k, k'] = ψ_k ψ_k'* W[k, k']`, where `ψ_k`
/// is the source amplitude of configuration `k`. `W` is computed once, at
/// unit SFG gain, by propagating each configuration through the Kraus form
/// of every loss and the converted SFG branch; source amplitudes can then
/// change freely.
#[derive(Clone, Debug)]
pub struct HeraldKernel {
    pair_cap: u32,
    configs: Vec<PairConfig>,
    w: DMatrix<Complex64>,
}

fn configs(pair_cap: u32) -> Vec<PairConfig> {
    let c = pair_cap as u8;
    let mut out = Vec::new();
    for a in 0..=c {
        for b in 0..=c - a {
            for d in 0..=c - a - b {
                for e in 0..=c - a - b - d {
                    out.push([a, b, d, e]);
                }
            }
        }
    }
    out
}

impl HeraldKernel {
    /// Built from the losses, SFG efficiencies, herald path and herald
    /// polarization of `params`; source brightness and dark counts are ignored.
    pub fn new(params: &ExperimentParams) -> Result<Self> {
        params.validate()?;
        use modes::*;
        let reg = Register::new([A_H, A_V, B_H, B_V, C_H, C_V, D_H, D_V, E_H, E_V])?;
        let configs = configs(params.pair_cap);
        let cap = 2 * params.pair_cap;
        let terms = configs.iter().map(|k| {
            (
                vec![k[0], k[1], k[2], k[3], 0, 0, k[0], k[1], k[2], k[3]],
                Complex64::new(1.0, 0.0),
            )
        });
        let all = PureState::from_terms(reg, cap, terms)?;
        let (hh, hv) = params.herald.amplitudes();
        let bra = PureState::from_terms(
            Register::new([C_H, C_V])?,
            1,
            vec![
                (vec![1, 0], Complex64::new(hh, 0.0)),
                (vec![0, 1], Complex64::new(hv, 0.0)),
            ],
        )?;
        let index: HashMap<PairConfig, usize> =
            configs.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let n = configs.len();
        let mut w = DMatrix::<Complex64>::zeros(n, n);
        let lossy = loss_kraus_branches(&all, &params.source_losses()?)?;
        for branch in lossy {
            let converted = sfg_converted_ket(&branch, &params.sfg)?;
            for out in loss_kraus_branches(&converted, &params.herald_losses()?)? {
                let clicked = out
                    .contract(&bra)?
                    .scaled(Complex64::new(params.eta_d.sqrt(), 0.0));
                // group amplitudes by what is left in a, b; station modes identify the configuration
                let mut groups: HashMap<[u8; 4], Vec<(usize, Complex64)>> = HashMap::new();
                for (occ, amp) in clicked.terms() {
                    let c = occ.counts();
                    let key = [c[4], c[5], c[6], c[7]];
                    let i = *index.get(&key).ok_or_else(|| {
                        SimError::Approximation("station occupation outside the pair cap".into())
                    })?;
                    groups
                        .entry([c[0], c[1], c[2], c[3]])
                        .or_default()
                        .push((i, *amp));
                }
                for g in groups.values() {
                    for &(i, a) in g {
                        for &(j, b) in g {
                            w[(i, j)] += a * b.conj();
                        }
                    }
                }
            }
        }
        Ok(HeraldKernel {
            pair_cap: params.pair_cap,
            configs,
            w,
        })
    }

    pub fn pair_cap(&self) -> u32 {
        self.pair_cap
    }

    fn amplitudes(&self, eps1: &SourceParams, eps2: &SourceParams) -> Result<Vec<f64>> {
        eps1.validate()?;
        eps2.validate()?;
        let g = [
            gamma(eps1.mu_h),
            gamma(eps1.mu_v),
            gamma(eps2.mu_h),
            gamma(eps2.mu_v),
        ];
        let mut amps: Vec<f64> = self
            .configs
            .iter()
            .map(|k| (0..4).map(|i| g[i].powi(k[i] as i32)).product())
            .collect();
        let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(amps)
    }

    /// Probability of a genuine herald at SFG gain `gain`.
    pub fn herald_prob(&self, eps1: &SourceParams, eps2: &SourceParams, gain: f64) -> Result<f64> {
        let a = self.amplitudes(eps1, eps2)?;
        Ok(gain
            * (0..a.len())
                .map(|i| a[i] * a[i] * self.w[(i, i)].re)
                .sum::<f64>())
    }

    /// Unnormalized entries `(ket, bra, value)` over station occupations
    /// `(dH, dV, eH, eV)`, and their trace.
    fn entries(
        &self,
        eps1: &SourceParams,
        eps2: &SourceParams,
        gain: f64,
        dark: f64,
    ) -> Result<(Vec<([u8; 4], [u8; 4], Complex64)>, f64)> {
        crate::error::check_nonnegative("gain", gain)?;
        crate::error::check_nonnegative("dark", dark)?;
        let a = self.amplitudes(eps1, eps2)?;
        let mut out = Vec::new();
        let mut total = 0.0;
        for i in 0..a.len() {
            for j in 0..a.len() {
                let mut v = self.w[(i, j)] * (gain * a[i] * a[j]);
                if i == j {
                    v += dark * a[i] * a[i];
                    total += v.re;
                }
                if v != Complex64::new(0.0, 0.0) {
                    out.push((self.configs[i], self.configs[j], v));
                }
            }
        }
        if !(total > 0.0) {
            return Err(SimError::Approximation(
                "herald has zero probability".into(),
            ));
        }
        Ok((out, total))
    }

    /// Normalized state of the stations after a herald click, a genuine SFG
    /// herald at gain `gain` mixed with dark-count heralds of probability `dark`.
    pub fn heralded_state(
        &self,
        eps1: &SourceParams,
        eps2: &SourceParams,
        gain: f64,
        dark: f64,
    ) -> Result<TwoPartyState> {
        let (entries, total) = self.entries(eps1, eps2, gain, dark)?;
        let scale = 1.0 / total;
        TwoPartyState::with_entries(
            self.pair_cap,
            entries.into_iter().map(|(k, b, v)| (k, b, v * scale)),
        )
    }

    /// Same state as a density operator on `dH dV eH eV`.
    pub fn heralded_density(
        &self,
        eps1: &SourceParams,
        eps2: &SourceParams,
        gain: f64,
        dark: f64,
    ) -> Result<DensityOperator> {
        let (entries, total) = self.entries(eps1, eps2, gain, dark)?;
        let reg = Register::new([modes::D_H, modes::D_V, modes::E_H, modes::E_V])?;
        let entries = entries
            .into_iter()
            .map(|(k, b, v)| (k.to_vec(), b.to_vec(), v / total));
        Ok(DensityOperator::from_entries(
            reg,
            2 * self.pair_cap,
            TraceMeaning::Normalized,
            entries,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::heralded_state_with_dark;
    use crate::presets::preset;
    use crate::protocols::sfg_herald;

    #[test]
    fn config_count() {
        assert_eq!(configs(3).len(), 35);
        assert_eq!(configs(1).len(), 5);
    }

    #[test]
    fn matches_density_operator_pipeline() {
        let mut params = preset("paper-tableS1").unwrap().params;
        params.pair_cap = 2;
        let kernel = HeraldKernel::new(&params).unwrap();
        let h = sfg_herald(&params).unwrap();
        let p = kernel.herald_prob(&params.eps1, &params.eps2, 1.0).unwrap();
        assert!(
            (p / h.rho_sfg.trace() - 1.0).abs() < 1e-10,
            "{p} {}",
            h.rho_sfg.trace()
        );
        let fast = kernel
            .heralded_density(&params.eps1, &params.eps2, 1.0, params.dark)
            .unwrap();
        let full = heralded_state_with_dark(&h.rho_sfg, &h.psi_in, params.dark).unwrap();
        let support: std::collections::BTreeSet<_> = fast
            .entries()
            .chain(full.entries())
            .map(|(k, b, _)| (k.clone(), b.clone()))
            .collect();
        for (k, b) in &support {
            assert!(
                (fast.entry(k, b) - full.entry(k, b)).norm() < 1e-12,
                "{k:?} {b:?}"
            );
        }
        let blocks = kernel
            .heralded_state(&params.eps1, &params.eps2, 1.0, params.dark)
            .unwrap();
        let reduced = TwoPartyState::from_density(&full).unwrap();
        assert!(blocks.max_difference(&reduced) < 1e-12);
    }
}
