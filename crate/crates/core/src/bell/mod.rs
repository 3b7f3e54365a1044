//! CHSH tests and device-independent key rates on heralded states.
//!
//! Each party measures its two polarization modes with a rotatable
//! analyzer and two threshold detectors. The four local click patterns are
//! mapped to ±1 by a [`Strategy`].

mod kernel;
mod search;
mod state;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub use kernel::HeraldKernel;
pub use search::{
    efficiency_threshold, optimize_chsh, optimize_chsh_state, optimize_key_rate,
    sfg_gain_threshold, BellOptimum, GainObjective, HeraldModel, SearchOptions, Threshold,
};
pub use state::{chsh_value, heralded_state_with_dark, qber, PatternTable, TwoPartyState};

/// Local click pattern of a party's two detectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    /// Only the detector behind the H port clicks.
    OnlyFirst,
    OnlySecond,
    Both,
    Neither,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [
        Pattern::OnlyFirst,
        Pattern::OnlySecond,
        Pattern::Both,
        Pattern::Neither,
    ];

    /// Probability of the pattern given the no-click probabilities of the two detectors.
    pub fn probability(self, no_click_first: f64, no_click_second: f64) -> f64 {
        let (a, b) = (no_click_first, no_click_second);
        match self {
            Pattern::OnlyFirst => (1.0 - a) * b,
            Pattern::OnlySecond => a * (1.0 - b),
            Pattern::Both => (1.0 - a) * (1.0 - b),
            Pattern::Neither => a * b,
        }
    }
}

/// Assignment of ±1 to the four click patterns, in [`Pattern::ALL`] order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategy {
    signs: [i8; 4],
}

impl Strategy {
    /// `−1` for "only first", `+1` otherwise.
    pub const DEFAULT: Strategy = Strategy {
        signs: [-1, 1, 1, 1],
    };

    pub fn new(signs: [i8; 4]) -> Result<Self> {
        if signs.iter().any(|s| s.abs() != 1) {
            return Err(SimError::InvalidParameter {
                name: "strategy".into(),
                value: f64::NAN,
                reason: "every outcome must be +1 or -1",
            });
        }
        Ok(Strategy { signs })
    }

    /// Bit `p` of `index` set means pattern `p` is assigned `−1`.
    pub fn from_index(index: u8) -> Self {
        let mut signs = [1i8; 4];
        for (p, s) in signs.iter_mut().enumerate() {
            if index >> p & 1 == 1 {
                *s = -1;
            }
        }
        Strategy { signs }
    }

    pub fn index(self) -> u8 {
        self.signs
            .iter()
            .enumerate()
            .filter(|(_, s)| **s < 0)
            .map(|(p, _)| 1u8 << p)
            .sum()
    }

    /// The 16 strategies, ordered by index.
    pub fn all() -> [Strategy; 16] {
        std::array::from_fn(|i| Strategy::from_index(i as u8))
    }

    pub fn signs(self) -> [i8; 4] {
        self.signs
    }

    pub fn sign(self, p: Pattern) -> f64 {
        self.signs[p as usize] as f64
    }

    pub fn negated(self) -> Self {
        Strategy {
            signs: self.signs.map(|s| -s),
        }
    }
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::DEFAULT
    }
}

/// Which strategies a CHSH or key-rate search uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyChoice {
    Fixed {
        alice: Strategy,
        bob: Strategy,
    },
    /// Best of all 16 × 16 pairs at every evaluation.
    Best,
}

impl Default for StrategyChoice {
    fn default() -> Self {
        StrategyChoice::Fixed {
            alice: Strategy::DEFAULT,
            bob: Strategy::DEFAULT,
        }
    }
}

impl StrategyChoice {
    pub(crate) fn pairs(self) -> Vec<(Strategy, Strategy)> {
        match self {
            StrategyChoice::Fixed { alice, bob } => vec![(alice, bob)],
            StrategyChoice::Best => Strategy::all()
                .into_iter()
                .flat_map(|a| Strategy::all().into_iter().map(move |b| (a, b)))
                .collect(),
        }
    }
}

/// Analyzer angles of the two parties. Angles are reduced to `[0, π)`;
/// the statistics are π-periodic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellSettings {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    /// Alice's key-generation angle.
    pub a0: Option<f64>,
}

fn reduce(theta: f64) -> f64 {
    let r = theta.rem_euclid(std::f64::consts::PI);
    if r >= std::f64::consts::PI {
        0.0
    } else {
        r
    }
}

impl BellSettings {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64) -> Self {
        BellSettings {
            a1: reduce(a1),
            a2: reduce(a2),
            b1: reduce(b1),
            b2: reduce(b2),
            a0: None,
        }
    }

    pub fn with_key_angle(mut self, a0: f64) -> Self {
        self.a0 = Some(reduce(a0));
        self
    }

    /// Angles maximizing CHSH on `(|HH⟩ − |VV⟩)/√2` under the default strategy.
    pub fn canonical() -> Self {
        let pi = std::f64::consts::PI;
        BellSettings::new(0.0, pi / 4.0, -pi / 8.0, pi / 8.0)
    }
}

/// `h(x) = −x log₂x − (1−x) log₂(1−x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(SimError::InvalidParameter {
            name: "x".into(),
            value: x,
            reason: "must lie in [0, 1]",
        });
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Eve's Holevo information bound given a CHSH value; 1 below the classical bound.
pub fn holevo_bound(s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(SimError::NonFinite(format!("CHSH value {s}")));
    }
    if s < 2.0 {
        return Ok(1.0);
    }
    let x = ((s / 2.0).powi(2) - 1.0).min(1.0);
    binary_entropy((1.0 + x.sqrt()) / 2.0)
}

/// Devetak-Winter rate `1 − h(Q) − χ(S)`.
pub fn dw_key_rate(s: f64, q: f64) -> Result<f64> {
    Ok(1.0 - binary_entropy(q)? - holevo_bound(s)?)
}
