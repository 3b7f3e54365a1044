use serde::{Deserialize, Serialize};

use crate::detection::{DetectorModel, HeraldBasis, StationEfficiencies};
use crate::error::{check_unit, Result, SimError};
use crate::optics::modes::*;
use crate::optics::{LossMap, SfgParams, SourceParams};

/// Every physical input of the swapping, teleportation and Bell pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Source feeding modes `a` and `d`.
    pub eps1: SourceParams,
    /// Source feeding modes `b` and `e`.
    pub eps2: SourceParams,
    pub t1_h: f64,
    pub t1_v: f64,
    pub t2_h: f64,
    pub t2_v: f64,
    /// Transmittance of the SFG photon path to the herald detector.
    pub eta_t_h: f64,
    pub eta_t_v: f64,
    /// Detection efficiencies at the two analyzer stations.
    pub stations: StationEfficiencies,
    /// Efficiency of the herald detector.
    pub eta_d: f64,
    /// Dark-count probability of the herald detector per window.
    pub dark: f64,
    pub sfg: SfgParams,
    /// Largest total number of photon pairs kept in the input state.
    pub pair_cap: u32,
    pub herald: HeraldBasis,
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<()> {
        self.eps1.validate()?;
        self.eps2.validate()?;
        for (name, v) in [
            ("t1_h", self.t1_h),
            ("t1_v", self.t1_v),
            ("t2_h", self.t2_h),
            ("t2_v", self.t2_v),
            ("eta_t_h", self.eta_t_h),
            ("eta_t_v", self.eta_t_v),
            ("eta_d", self.eta_d),
            ("eta1_h", self.stations.d_h),
            ("eta1_v", self.stations.d_v),
            ("eta2_h", self.stations.e_h),
            ("eta2_v", self.stations.e_v),
            ("station dark", self.stations.dark),
        ] {
            check_unit(name, v)?;
        }
        self.herald_detector()?;
        self.sfg.validate()?;
        if self.pair_cap == 0 || self.pair_cap > 6 {
            return Err(SimError::InvalidParameter {
                name: "pair_cap".into(),
                value: self.pair_cap as f64,
                reason: "must be between 1 and 6",
            });
        }
        Ok(())
    }

    /// Losses on the four photons entering the analyzer.
    pub fn source_losses(&self) -> Result<LossMap> {
        LossMap::new()
            .with(A_H, self.t1_h)?
            .with(A_V, self.t1_v)?
            .with(B_H, self.t2_h)?
            .with(B_V, self.t2_v)
    }

    /// Loss between the SFG output and the herald detector.
    pub fn herald_losses(&self) -> Result<LossMap> {
        LossMap::new()
            .with(C_H, self.eta_t_h)?
            .with(C_V, self.eta_t_v)
    }

    pub fn herald_detector(&self) -> Result<DetectorModel> {
        DetectorModel::new(self.eta_d, self.dark)
    }

    /// Copy with both SFG efficiencies multiplied by `gain`.
    pub fn with_sfg_gain(&self, gain: f64) -> Result<Self> {
        let mut p = self.clone();
        p.sfg = self.sfg.scaled(gain)?;
        Ok(p)
    }

    /// Copy with all four source-side transmittances set to `t`.
    pub fn with_uniform_transmittance(&self, t: f64) -> Self {
        let mut p = self.clone();
        p.t1_h = t;
        p.t1_v = t;
        p.t2_h = t;
        p.t2_v = t;
        p
    }

    /// Copy with a lossless herald path (`η_t = η_d = 1`).
    pub fn with_lossless_herald(&self) -> Self {
        let mut p = self.clone();
        p.eta_t_h = 1.0;
        p.eta_t_v = 1.0;
        p.eta_d = 1.0;
        p
    }
}
