use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use sfgsim::bell::{
    efficiency_threshold, optimize_chsh, optimize_key_rate, sfg_gain_threshold, BellOptimum,
    GainObjective, HeraldModel, SearchOptions, Strategy, StrategyChoice,
};
use sfgsim::detection::StationEfficiencies;
use sfgsim::efficiency::{
    fidelity_lower_bound, gaussian_overlap_closed_form, sfg_eff_effective, sfg_eff_from_counts,
    sfg_eff_theoretical, sum_frequency_nm, CrystalParams, SpectralProfile,
};
use sfgsim::optics::modes::{label, A_H, A_V, D_H, D_V};
use sfgsim::optics::tmsv_pair;
use sfgsim::presets::Preset;
use sfgsim::protocols::{
    lo_swap, qfc_teleport_strong_pump, run_sweep, sfg_swap, teleport, ExperimentParams,
    VisibilityReport,
};

use crate::config::{apply_param, apply_param_text, is_sweepable, RawConfig, VIRTUAL_PARAMS};
use crate::output::{col, Column, Output};
use crate::{ConfigError, RunError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    SwapSfg,
    SwapLo,
    Teleport,
    Qfc,
    Bell,
    KeyRate,
    Efficiency,
    Sweep,
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "swap-sfg" => Experiment::SwapSfg,
            "swap-lo" => Experiment::SwapLo,
            "teleport" => Experiment::Teleport,
            "qfc" => Experiment::Qfc,
            "bell" => Experiment::Bell,
            "keyrate" => Experiment::KeyRate,
            "efficiency" => Experiment::Efficiency,
            "sweep" => Experiment::Sweep,
            _ => return Err(ConfigError::UnknownExperiment(s.to_string())),
        })
    }
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SwapSfg => "swap-sfg",
            Experiment::SwapLo => "swap-lo",
            Experiment::Teleport => "teleport",
            Experiment::Qfc => "qfc",
            Experiment::Bell => "bell",
            Experiment::KeyRate => "keyrate",
            Experiment::Efficiency => "efficiency",
            Experiment::Sweep => "sweep",
        }
    }

    fn section(self) -> Option<&'static str> {
        match self {
            Experiment::Teleport => Some("teleport"),
            Experiment::Qfc => Some("qfc"),
            Experiment::Bell => Some("bell"),
            Experiment::KeyRate => Some("keyrate"),
            Experiment::Efficiency => Some("efficiency"),
            Experiment::Sweep => Some("sweep"),
            Experiment::SwapSfg | Experiment::SwapLo => None,
        }
    }

    fn uses_stations_default(self) -> bool {
        matches!(self, Experiment::Bell | Experiment::KeyRate)
    }
}

/// What a sweep evaluates at each point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SweepMetric {
    Both,
    Single(Experiment),
}

/// Everything a run needs after the configuration is resolved.
pub struct Run {
    pub experiment: Experiment,
    pub preset: Preset,
    pub params: ExperimentParams,
    pub opts: SearchOptions,
    pub jobs: usize,
    pub cfg: RawConfig,
}

impl Run {
    pub fn resolve(
        cfg: RawConfig,
        preset: Preset,
        jobs: usize,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        let experiment: Experiment = cfg
            .get("experiment")
            .ok_or(ConfigError::Missing("experiment"))?
            .parse()?;
        let metric = if experiment == Experiment::Sweep {
            Some(sweep_metric(&cfg)?)
        } else {
            None
        };
        let mut sections: Vec<&str> = experiment.section().into_iter().collect();
        if let Some(SweepMetric::Single(e)) = metric {
            sections.extend(e.section());
        }
        cfg.check_known(&sections)?;
        let mut params = preset.params.clone();
        let station_kind = match metric {
            Some(SweepMetric::Single(e)) => e,
            _ => experiment,
        };
        if station_kind.uses_stations_default() {
            params.stations = StationEfficiencies {
                dark: params.stations.dark,
                ..StationEfficiencies::uniform(1.0)
            };
        }
        let (virtual_params, fields): (Vec<_>, Vec<_>) = cfg
            .param_overrides()
            .partition(|(path, _)| VIRTUAL_PARAMS.contains(path));
        for (path, text) in fields.into_iter().chain(virtual_params) {
            params = apply_param_text(&params, path, text)?;
        }
        params.validate().map_err(|e| ConfigError::Value {
            key: "params".into(),
            value: e.to_string(),
        })?;
        let opts = SearchOptions {
            seed,
            ..SearchOptions::default()
        };
        Ok(Run {
            experiment,
            preset,
            params,
            opts,
            jobs,
            cfg,
        })
    }

    pub fn execute(&self) -> Result<Output, RunError> {
        let out = match self.experiment {
            Experiment::Sweep => self.sweep()?,
            e => self.point(e, &self.params)?,
        };
        let mut out = out;
        out.notes.splice(
            0..0,
            [
                ("experiment".to_string(), self.experiment.name().to_string()),
                ("preset".to_string(), self.preset.name.to_string()),
            ],
        );
        Ok(out)
    }

    fn point(&self, e: Experiment, params: &ExperimentParams) -> Result<Output, RunError> {
        match e {
            Experiment::SwapSfg => Ok(visibility_output(&sfg_swap(params)?, "")),
            Experiment::SwapLo => Ok(visibility_output(&lo_swap(params)?, "")),
            Experiment::Teleport => self.teleport(params),
            Experiment::Qfc => self.qfc(params),
            Experiment::Bell => self.bell(params, false),
            Experiment::KeyRate => self.bell(params, true),
            Experiment::Efficiency => self.efficiency(),
            Experiment::Sweep => Err(ConfigError::Value {
                key: "sweep.experiment".into(),
                value: "sweep".into(),
            }
            .into()),
        }
    }

    fn sweep(&self) -> Result<Output, RunError> {
        let cfg = &self.cfg;
        let variable = cfg
            .get("sweep.variable")
            .ok_or(ConfigError::Missing("sweep.variable"))?;
        if !is_sweepable(&self.params, variable) {
            return Err(ConfigError::UnknownParameter(variable.to_string()).into());
        }
        let from = cfg
            .number("sweep.from")?
            .ok_or(ConfigError::Missing("sweep.from"))?;
        let to = cfg
            .number("sweep.to")?
            .ok_or(ConfigError::Missing("sweep.to"))?;
        let steps = cfg.number_or("sweep.steps", 2.0)?;
        if steps < 2.0 || steps.fract() != 0.0 {
            return Err(ConfigError::Value {
                key: "sweep.steps".into(),
                value: steps.to_string(),
            }
            .into());
        }
        let steps = steps as usize;
        let xs: Vec<f64> = (0..steps)
            .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
            .collect();
        let points = xs
            .iter()
            .map(|&x| apply_param(&self.params, variable, x))
            .collect::<Result<Vec<_>, _>>()?;
        let metric = sweep_metric(cfg)?;
        let results = run_sweep(&points, self.jobs, |p| {
            self.sweep_point(metric, p).map_err(|e| match e {
                RunError::Model(m) => m,
                RunError::Config(c) => sfgsim::SimError::Search(c.to_string()),
            })
        })?;
        let mut out = Output {
            columns: vec![col(variable, "1")],
            ..Output::default()
        };
        for (x, r) in xs.iter().zip(results) {
            let o = r?;
            if out.columns.len() == 1 {
                out.columns.extend(o.columns);
            }
            let mut row = vec![*x];
            row.extend(&o.rows[0]);
            out.rows.push(row);
        }
        Ok(out.note("variable", variable))
    }

    fn sweep_point(&self, metric: SweepMetric, p: &ExperimentParams) -> Result<Output, RunError> {
        match metric {
            SweepMetric::Both => {
                let s = visibility_output(&sfg_swap(p)?, "_sfg");
                let l = visibility_output(&lo_swap(p)?, "_lo");
                let mut columns = s.columns;
                columns.extend(l.columns);
                let mut row = s.rows[0].clone();
                row.extend(&l.rows[0]);
                Ok(Output::single(columns, row))
            }
            SweepMetric::Single(e) => self.point(e, p),
        }
    }

    fn teleport(&self, params: &ExperimentParams) -> Result<Output, RunError> {
        let cfg = &self.cfg;
        let theta = cfg.number_or("teleport.theta", PI / 8.0)?;
        let phi = cfg.number_or("teleport.phi", 0.0)?;
        let mean = cfg.number_or("teleport.mean_photons", 0.95)?;
        let r = teleport(params, polarization(theta, phi), mean)?;
        Ok(Output::single(
            vec![
                col("fidelity", "1"),
                col("herald_prob", "1"),
                col("truncation_weight", "1"),
            ],
            vec![r.fidelity, r.herald_prob, r.truncation_weight],
        ))
    }

    fn qfc(&self, params: &ExperimentParams) -> Result<Output, RunError> {
        let cfg = &self.cfg;
        let theta = cfg.number_or("qfc.theta", PI / 8.0)?;
        let phi = cfg.number_or("qfc.phi", 0.0)?;
        let amplitude = cfg.number_or("qfc.amplitude", 1.0)?;
        let chi_tau = cfg.number_or("qfc.chi_tau", 0.1)?;
        let (h, v) = polarization(theta, phi);
        let pair = tmsv_pair(
            &params.eps1,
            (&label(A_H), &label(A_V)),
            (&label(D_H), &label(D_V)),
            params.pair_cap,
        )?;
        let r = qfc_teleport_strong_pump(h * amplitude, v * amplitude, chi_tau, &pair)?;
        Ok(Output::single(
            vec![col("fidelity", "1"), col("herald_prob", "1")],
            vec![r.fidelity, r.herald_prob],
        ))
    }

    fn bell(&self, params: &ExperimentParams, key: bool) -> Result<Output, RunError> {
        let section = if key { "keyrate" } else { "bell" };
        let cfg = &self.cfg;
        let free_mu = cfg.flag(&format!("{section}.free_mu"), false)?;
        let choice = match cfg.get(&format!("{section}.strategy")).unwrap_or("default") {
            "default" => StrategyChoice::default(),
            "best" => StrategyChoice::Best,
            v => {
                return Err(ConfigError::Value {
                    key: format!("{section}.strategy"),
                    value: v.into(),
                }
                .into())
            }
        };
        let model = HeraldModel::new(params)?;
        let search = cfg.get(&format!("{section}.search")).unwrap_or("none");
        let (found, o) = match (search, key) {
            ("none", false) => (None, optimize_chsh(&model, free_mu, choice, &self.opts)?),
            ("none", true) => (
                None,
                optimize_key_rate(&model, free_mu, choice, &self.opts)?,
            ),
            ("efficiency", false) => {
                let target = cfg.number_or("bell.target", 2.0)?;
                let lo = cfg.number_or("bell.lo", 0.5)?;
                let hi = cfg.number_or("bell.hi", 1.0)?;
                let tol = cfg.number_or("bell.tol", 1e-3)?;
                let t = efficiency_threshold(
                    &model,
                    free_mu,
                    choice,
                    target,
                    (lo, hi),
                    tol,
                    &self.opts,
                )?;
                (Some(("eta_threshold", t.value)), t.optimum)
            }
            ("gain", _) => {
                let objective = if key {
                    GainObjective::PositiveKeyRate
                } else {
                    GainObjective::Violation
                };
                let lo = cfg.number_or(&format!("{section}.lo"), 1.0)?;
                let hi = cfg.number_or(&format!("{section}.hi"), 1000.0)?;
                let tol = cfg.number_or(&format!("{section}.tol"), 0.01)?;
                let t = sfg_gain_threshold(
                    &model,
                    objective,
                    free_mu,
                    choice,
                    (lo, hi),
                    tol,
                    &self.opts,
                )?;
                (Some(("gain_threshold", t.value)), t.optimum)
            }
            (v, _) => {
                return Err(ConfigError::Value {
                    key: format!("{section}.search"),
                    value: v.into(),
                }
                .into())
            }
        };
        let mut columns = Vec::new();
        let mut row = Vec::new();
        if let Some((name, value)) = found {
            columns.push(col(name, "1"));
            row.push(value);
        }
        columns.push(col("eta_sfg_h", "1"));
        row.push(params.sfg.eta_h);
        columns.push(col("eta_sfg_v", "1"));
        row.push(params.sfg.eta_v);
        append_optimum(&mut columns, &mut row, &o, key);
        Ok(Output {
            columns,
            rows: vec![row],
            notes: Vec::new(),
        }
        .note("strategies", format!("{} {}", signs(o.alice), signs(o.bob)))
        .note("converged", o.converged)
        .note("evaluations", o.evaluations))
    }

    fn efficiency(&self) -> Result<Output, RunError> {
        let cfg = &self.cfg;
        let bench = self
            .preset
            .bench
            .ok_or(ConfigError::NoBench(self.preset.name))?;
        let h = sfg_eff_from_counts(&bench[0])?;
        let v = sfg_eff_from_counts(&bench[1])?;
        let crystal = CrystalParams::from_lab_units(
            cfg.number_or("efficiency.eta_shg", 28.0)?,
            cfg.number_or("efficiency.length_cm", 6.3)?,
            cfg.number_or("efficiency.acceptance_ghz_cm", 248.0)?,
            cfg.number_or("efficiency.tbp", 0.67)?,
            cfg.number_or("efficiency.lambda_nm", 1560.0)?,
        );
        let th = sfg_eff_theoretical(&crystal)?;
        let ca = cfg.number_or("efficiency.center_a", 1535.0)?;
        let cb = cfg.number_or("efficiency.center_b", 1585.0)?;
        let a = SpectralProfile::gaussian(ca, cfg.number_or("efficiency.fwhm_a", 0.31)?)?;
        let b = SpectralProfile::gaussian(cb, cfg.number_or("efficiency.fwhm_b", 0.33)?)?;
        let pm = SpectralProfile::gaussian(
            sum_frequency_nm(ca, cb),
            cfg.number_or("efficiency.fwhm_pm", 0.080)?,
        )?;
        let eff = sfg_eff_effective(th, &a, &b, &pm)?;
        Ok(Output::single(
            vec![
                col("eta_sfg_h", "1"),
                col("eta_sfg_v", "1"),
                col("eta_theory", "1"),
                col("eta_effective", "1"),
                col("overlap_closed_form", "1"),
            ],
            vec![h, v, th, eff, gaussian_overlap_closed_form(&a, &b, &pm)],
        ))
    }
}

fn sweep_metric(cfg: &RawConfig) -> Result<SweepMetric, ConfigError> {
    match cfg.get("sweep.experiment").unwrap_or("swap") {
        "swap" => Ok(SweepMetric::Both),
        "sweep" | "efficiency" => Err(ConfigError::Value {
            key: "sweep.experiment".into(),
            value: cfg.get("sweep.experiment").unwrap().into(),
        }),
        other => Ok(SweepMetric::Single(other.parse()?)),
    }
}

fn polarization(theta: f64, phi: f64) -> (Complex64, Complex64) {
    (
        Complex64::new(theta.cos(), 0.0),
        Complex64::from_polar(theta.sin(), phi),
    )
}

fn signs(s: Strategy) -> String {
    s.signs()
        .iter()
        .map(|&x| if x > 0 { '+' } else { '-' })
        .collect()
}

fn visibility_output(r: &VisibilityReport, suffix: &str) -> Output {
    let mut columns: Vec<Column> = ["V_Z", "V_X", "F_low", "herald_prob"]
        .iter()
        .map(|n| col(format!("{n}{suffix}"), "1"))
        .collect();
    let mut row = vec![
        r.v_z,
        r.v_x,
        fidelity_lower_bound(r.v_z, r.v_x),
        r.herald_prob,
    ];
    for (basis, table) in [("Z", &r.z_table), ("X", &r.x_table)] {
        for (name, p) in ["HH", "HV", "VH", "VV"].iter().zip(table.iter()) {
            columns.push(col(format!("P_{basis}_{name}{suffix}"), "1"));
            row.push(*p);
        }
    }
    Output::single(columns, row)
}

fn append_optimum(columns: &mut Vec<Column>, row: &mut Vec<f64>, o: &BellOptimum, key: bool) {
    if key {
        columns.push(col("r", "bit"));
        row.push(o.objective);
    }
    columns.push(col("S", "1"));
    row.push(o.s);
    if key {
        columns.push(col("Q", "1"));
        row.push(o.qber.unwrap_or(f64::NAN));
        columns.push(col("a0", "rad"));
        row.push(o.settings.a0.unwrap_or(f64::NAN));
    }
    let st = &o.settings;
    for (name, v) in [("a1", st.a1), ("a2", st.a2), ("b1", st.b1), ("b2", st.b2)] {
        columns.push(col(name, "rad"));
        row.push(v);
    }
    for (name, v) in ["mu_1h", "mu_1v", "mu_2h", "mu_2v"].iter().zip(o.mu) {
        columns.push(col(*name, "photons"));
        row.push(v);
    }
}
