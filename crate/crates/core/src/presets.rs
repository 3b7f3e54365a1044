//! Named parameter bundles shipped with the simulator.

use crate::detection::{HeraldBasis, StationEfficiencies};
use crate::efficiency::SfgBenchInputs;
use crate::optics::{SfgParams, SourceParams};
use crate::protocols::ExperimentParams;

/// Dark-count probability of the herald detector per coincidence window
/// (0.15 Hz over 448 ps).
pub const HERALD_DARK_PROB: f64 = 6.7e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub params: ExperimentParams,
    /// Bench inputs of the efficiency measurement (H row, V row), when the preset carries them.
    pub bench: Option<[SfgBenchInputs; 2]>,
}

fn measured() -> ExperimentParams {
    ExperimentParams {
        eps1: SourceParams {
            mu_h: 0.060,
            mu_v: 0.050,
        },
        eps2: SourceParams {
            mu_h: 0.080,
            mu_v: 0.061,
        },
        t1_h: 0.44,
        t1_v: 0.48,
        t2_h: 0.56,
        t2_v: 0.57,
        eta_t_h: 0.43,
        eta_t_v: 0.40,
        stations: StationEfficiencies {
            d_h: 0.097,
            d_v: 0.11,
            e_h: 0.070,
            e_v: 0.10,
            dark: 0.0,
        },
        eta_d: 0.85,
        dark: 0.0,
        sfg: SfgParams {
            eta_h: 2.31e-8,
            eta_v: 2.35e-8,
        },
        pair_cap: 3,
        herald: HeraldBasis::A,
    }
}

fn bench_rows() -> [SfgBenchInputs; 2] {
    [
        SfgBenchInputs {
            c_sfg: 2.54e6,
            eta_t: 0.43,
            eta_d: 0.85,
            p_a: 80e-9,
            p_b: 61e-9,
            lambda_a: 1535e-9,
            lambda_b: 1585e-9,
            f: 1e9,
        },
        SfgBenchInputs {
            c_sfg: 1.94e6,
            eta_t: 0.40,
            eta_d: 0.85,
            p_a: 70e-9,
            p_b: 56e-9,
            lambda_a: 1535e-9,
            lambda_b: 1585e-9,
            f: 1e9,
        },
    ]
}

/// Every preset, sorted by name.
pub fn presets() -> Vec<Preset> {
    let table_s1 = ExperimentParams {
        dark: HERALD_DARK_PROB,
        ..measured()
    };
    let ideal = ExperimentParams {
        eps1: SourceParams {
            mu_h: 0.01,
            mu_v: 0.01,
        },
        eps2: SourceParams {
            mu_h: 0.01,
            mu_v: 0.01,
        },
        t1_h: 1.0,
        t1_v: 1.0,
        t2_h: 1.0,
        t2_v: 1.0,
        eta_t_h: 1.0,
        eta_t_v: 1.0,
        stations: StationEfficiencies::uniform(1.0),
        eta_d: 1.0,
        dark: 0.0,
        sfg: SfgParams {
            eta_h: 1.0,
            eta_v: 1.0,
        },
        pair_cap: 3,
        herald: HeraldBasis::A,
    };
    let fig_s3 = ExperimentParams {
        eps1: SourceParams {
            mu_h: 0.05,
            mu_v: 0.05,
        },
        eps2: SourceParams {
            mu_h: 0.05,
            mu_v: 0.05,
        },
        t1_h: 1.0,
        t1_v: 1.0,
        t2_h: 1.0,
        t2_v: 1.0,
        eta_t_h: 1.0,
        eta_t_v: 1.0,
        stations: StationEfficiencies::uniform(1.0),
        eta_d: 1.0,
        dark: 0.0,
        ..measured()
    };
    let mut out = vec![
        Preset {
            name: "fig-s3",
            description: "loss-sweep baseline: symmetric sources (mu = 0.05), lossless channels, unit detectors, no dark counts",
            params: fig_s3,
            bench: None,
        },
        Preset {
            name: "ideal",
            description: "all efficiencies and transmittances 1, no dark counts, weak symmetric sources (mu = 0.01)",
            params: ideal,
            bench: None,
        },
        Preset {
            name: "paper-table1",
            description: "measured analyzer unit (SFG efficiencies, herald path, bench count rates) with the measured sources; no dark counts",
            params: measured(),
            bench: Some(bench_rows()),
        },
        Preset {
            name: "paper-table2",
            description: "measured sources (mean photon numbers, detection efficiencies, transmittances) with the measured analyzer; no dark counts",
            params: measured(),
            bench: None,
        },
        Preset {
            name: "paper-tableS1",
            description: "full measured parameter set used for the visibility and Bell analyses, herald dark probability 6.7e-11",
            params: table_s1,
            bench: Some(bench_rows()),
        },
    ];
    out.sort_by_key(|p| p.name);
    out
}

pub fn preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_sorted_and_stable() {
        let names: Vec<&str> = presets().iter().map(|p| p.name).collect();
        assert_eq!(
            names,
            [
                "fig-s3",
                "ideal",
                "paper-table1",
                "paper-table2",
                "paper-tableS1"
            ]
        );
    }

    #[test]
    fn table_values() {
        let p = preset("paper-tableS1").unwrap().params;
        assert_eq!(p.eps1.mu_h, 0.060);
        assert_eq!(p.stations.d_h, 0.097);
        assert_eq!(p.t1_h, 0.44);
        assert_eq!(p.dark, 6.7e-11);
        for pr in presets() {
            pr.params.validate().unwrap();
        }
        let ideal = preset("ideal").unwrap().params;
        assert_eq!(
            (ideal.t1_h, ideal.eta_d, ideal.stations.e_v, ideal.dark),
            (1.0, 1.0, 1.0, 0.0)
        );
    }
}
