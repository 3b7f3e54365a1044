use crate::error::{check_unit, Result, SimError};
use crate::fock::{DensityOperator, Occupation, PureState, Register};
use crate::optics::modes::*;
use crate::optics::{apply_loss, apply_sfg_first_order, LossMap, SfgParams};

/// Lowest-order loss-induced error events with two pairs from one source
/// and one from the other, all in the same polarization:
/// `(2γ⁶t²(1−t), γ⁶t²(1−t))`. The first passes an analyzer that only
/// counts photons; the second carries two photons from one source and is
/// rejected by the parity check.
pub fn error_event_probs(gamma: f64, t: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    check_unit("t", t)?;
    let g6 = gamma.powi(6);
    Ok((2.0 * g6 * t * t * (1.0 - t), g6 * t * t * (1.0 - t)))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(SimError::InvalidParameter {
            name: "gamma".into(),
            value: gamma,
            reason: "must lie in [0, 1)",
        });
    }
    Ok(())
}

/// Error-event weights read off the simulated lossy state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEvents {
    /// One photon of the doubled source lost: one photon from each source remains.
    pub p_first: f64,
    /// The single photon of the other source lost: two photons from one source remain.
    pub p_second: f64,
    /// SFG emission probability of the second event per unit efficiency.
    pub sfg_of_second: f64,
}

/// Build the `(2 pairs, 1 pair)` sector `γ³|2,2⟩_ad|1,1⟩_be` in one
/// polarization, send it through the loss channels, and read off the
/// populations that survive as the two event types.
pub fn simulated_error_events(gamma: f64, t: f64) -> Result<ErrorEvents> {
    check_gamma(gamma)?;
    check_unit("t", t)?;
    let reg = Register::new([A_H, D_H, B_H, E_H, C_H])?;
    let amp = num_complex::Complex64::new(gamma.powi(3), 0.0);
    let psi = PureState::from_terms(reg, 6, vec![(vec![2, 2, 1, 1, 0], amp)])?;
    let rho = DensityOperator::from_pure(&psi);
    let lossy = apply_loss(&rho, &LossMap::new().with(A_H, t)?.with(B_H, t)?)?;
    let mut p_first = 0.0;
    let mut p_second = 0.0;
    for (occ, p) in lossy.diagonal() {
        match (occ.get(0), occ.get(2)) {
            (1, 1) => p_first += p,
            (2, 0) => p_second += p,
            _ => {}
        }
    }
    let second = lossy.filter(|o: &Occupation| o.get(0) == 2 && o.get(2) == 0);
    let sfg_of_second = if second.is_empty() {
        0.0
    } else {
        let with_v = second.with_vacuum_modes(&[label(A_V), label(B_V), label(C_V)])?;
        apply_sfg_first_order(&with_v, &SfgParams::symmetric(1.0)?)?.trace()
    };
    Ok(ErrorEvents {
        p_first,
        p_second,
        sfg_of_second,
    })
}
