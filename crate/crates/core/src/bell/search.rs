use rayon::prelude::*;
use serde::Serialize;

use super::kernel::HeraldKernel;
use super::state::{correlator, PatternTable, TwoPartyState};
use super::{dw_key_rate, BellSettings, Pattern, Strategy, StrategyChoice};
use crate::detection::StationEfficiencies;
use crate::error::{Result, SimError};
use crate::optics::SourceParams;
use crate::optimize::{multi_start, seeded_starts, NelderMeadOptions, TraceRow};
use crate::protocols::ExperimentParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub starts: usize,
    pub seed: u64,
    pub simplex: NelderMeadOptions,
    /// Box for every mean photon number when it is optimized.
    pub mu_bounds: (f64, f64),
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            starts: 16,
            seed: 1,
            simplex: NelderMeadOptions::default(),
            mu_bounds: (1e-6, 0.5),
        }
    }
}

impl SearchOptions {
    fn mu_of(&self, s: f64) -> f64 {
        let (lo, hi) = (self.mu_bounds.0.ln(), self.mu_bounds.1.ln());
        (lo + (hi - lo) * (1.0 + s.sin()) / 2.0).exp()
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.mu_bounds;
        if !(lo > 0.0 && hi > lo && hi < 1.0) {
            return Err(SimError::InvalidParameter {
                name: "mu_bounds".into(),
                value: lo,
                reason: "need 0 < lower < upper < 1",
            });
        }
        if self.starts == 0 {
            return Err(SimError::InvalidParameter {
                name: "starts".into(),
                value: 0.0,
                reason: "need at least one start",
            });
        }
        Ok(())
    }
}

/// Heralded-state model with adjustable source brightness, SFG gain,
/// herald dark counts and station efficiencies.
#[derive(Clone, Debug)]
pub struct HeraldModel {
    kernel: HeraldKernel,
    pub eps1: SourceParams,
    pub eps2: SourceParams,
    /// Multiplier on both SFG efficiencies.
    pub gain: f64,
    pub dark: f64,
    pub stations: StationEfficiencies,
}

impl HeraldModel {
    pub fn new(params: &ExperimentParams) -> Result<Self> {
        Ok(HeraldModel {
            kernel: HeraldKernel::new(params)?,
            eps1: params.eps1,
            eps2: params.eps2,
            gain: 1.0,
            dark: params.dark,
            stations: params.stations,
        })
    }

    pub fn state(&self) -> Result<TwoPartyState> {
        self.kernel
            .heralded_state(&self.eps1, &self.eps2, self.gain, self.dark)
    }

    pub fn herald_prob(&self) -> Result<f64> {
        self.kernel.herald_prob(&self.eps1, &self.eps2, self.gain)
    }

    fn state_at(&self, mu: Option<[f64; 4]>) -> Result<TwoPartyState> {
        match mu {
            None => self.state(),
            Some(m) => self.kernel.heralded_state(
                &SourceParams {
                    mu_h: m[0],
                    mu_v: m[1],
                },
                &SourceParams {
                    mu_h: m[2],
                    mu_v: m[3],
                },
                self.gain,
                self.dark,
            ),
        }
    }
}

/// Result of a CHSH or key-rate search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellOptimum {
    /// The maximized objective: S, or the key rate.
    pub objective: f64,
    pub s: f64,
    /// Error rate at the key angle, for key-rate searches.
    pub qber: Option<f64>,
    pub settings: BellSettings,
    /// `(μ1H, μ1V, μ2H, μ2V)` at the optimum.
    pub mu: [f64; 4],
    pub alice: Strategy,
    pub bob: Strategy,
    pub converged: bool,
    pub evaluations: usize,
    /// Index of the winning start.
    pub start: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub parameter_names: Vec<&'static str>,
}

impl BellOptimum {
    /// Trace of the winning start as CSV: iteration, parameters, objective.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration");
        for n in &self.parameter_names {
            s.push(',');
            s.push_str(n);
        }
        s.push_str(",objective\n");
        for row in &self.trace {
            s.push_str(&row.iteration.to_string());
            for x in &row.x {
                s.push_str(&format!(",{x:.12e}"));
            }
            s.push_str(&format!(",{:.12e}\n", -row.value));
        }
        s
    }
}

/// `M = T₁₁ + T₂₁ + T₁₂ − T₂₂`, so that `S = Σ a(p) b(q) M[p][q]`.
fn chsh_matrix(t: &[PatternTable]) -> PatternTable {
    let mut m = [[0.0; 4]; 4];
    for p in 0..4 {
        for q in 0..4 {
            m[p][q] = t[0][p][q] + t[1][p][q] + t[2][p][q] - t[3][p][q];
        }
    }
    m
}

fn bilinear(m: &PatternTable, a: Strategy, b: Strategy) -> f64 {
    let mut s = 0.0;
    for p in Pattern::ALL {
        for q in Pattern::ALL {
            s += a.sign(p) * b.sign(q) * m[p as usize][q as usize];
        }
    }
    s
}

/// Largest S over the allowed strategies, with the strategies attaining it.
/// Bob's best reply to a fixed Alice strategy is taken pattern by pattern.
fn best_chsh(t: &[PatternTable], choice: StrategyChoice) -> (f64, Strategy, Strategy) {
    let m = chsh_matrix(t);
    match choice {
        StrategyChoice::Fixed { alice, bob } => (bilinear(&m, alice, bob), alice, bob),
        StrategyChoice::Best => {
            let mut best = (f64::NEG_INFINITY, Strategy::DEFAULT, Strategy::DEFAULT);
            for a in Strategy::all() {
                let mut signs = [1i8; 4];
                let mut s = 0.0;
                for q in 0..4 {
                    let v: f64 = Pattern::ALL
                        .iter()
                        .map(|&p| a.sign(p) * m[p as usize][q])
                        .sum();
                    signs[q] = if v < 0.0 { -1 } else { 1 };
                    s += v.abs();
                }
                if s > best.0 {
                    best = (s, a, Strategy::new(signs).expect("signs are ±1"));
                }
            }
            best
        }
    }
}

/// Largest key rate over the allowed strategies: (r, S, Q, alice, bob).
fn best_key_rate(
    t: &[PatternTable],
    choice: StrategyChoice,
) -> Result<(f64, f64, f64, Strategy, Strategy)> {
    let m = chsh_matrix(t);
    let mut best: Option<(f64, f64, f64, Strategy, Strategy)> = None;
    for (a, b) in choice.pairs() {
        let s = bilinear(&m, a, b);
        let total: f64 = t[4].iter().flatten().sum();
        let q = ((total - correlator(&t[4], (a, b))) / 2.0).clamp(0.0, 1.0);
        let r = dw_key_rate(s, q)?;
        if best.as_ref().is_none_or(|x| r > x.0) {
            best = Some((r, s, q, a, b));
        }
    }
    best.ok_or_else(|| SimError::Search("no strategies".into()))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Goal {
    Chsh,
    KeyRate,
}

struct Layout {
    angles: usize,
    free_mu: bool,
}

impl Layout {
    fn names(&self) -> Vec<&'static str> {
        let mut n = vec!["theta_a1", "theta_a2", "theta_b1", "theta_b2"];
        if self.angles == 5 {
            n.push("theta_a0");
        }
        if self.free_mu {
            n.extend(["s_mu1_h", "s_mu1_v", "s_mu2_h", "s_mu2_v"]);
        }
        n
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let pi = std::f64::consts::PI;
        let mut b = vec![(0.0, pi); self.angles];
        if self.free_mu {
            b.extend([(-pi / 2.0, pi / 2.0); 4]);
        }
        b
    }

    fn settings(&self, x: &[f64]) -> BellSettings {
        let s = BellSettings::new(x[0], x[1], x[2], x[3]);
        if self.angles == 5 {
            s.with_key_angle(x[4])
        } else {
            s
        }
    }

    fn mu(&self, x: &[f64], opts: &SearchOptions) -> Option<[f64; 4]> {
        self.free_mu
            .then(|| std::array::from_fn(|i| opts.mu_of(x[self.angles + i])))
    }
}

struct Evaluation {
    objective: f64,
    s: f64,
    qber: Option<f64>,
    alice: Strategy,
    bob: Strategy,
}

fn evaluate(
    state: &TwoPartyState,
    settings: &BellSettings,
    eff: &StationEfficiencies,
    choice: StrategyChoice,
    goal: Goal,
) -> Result<Evaluation> {
    let t = state.chsh_tables(settings, eff);
    match goal {
        Goal::Chsh => {
            let (s, alice, bob) = best_chsh(&t, choice);
            Ok(Evaluation {
                objective: s,
                s,
                qber: None,
                alice,
                bob,
            })
        }
        Goal::KeyRate => {
            let (r, s, q, alice, bob) = best_key_rate(&t, choice)?;
            Ok(Evaluation {
                objective: r,
                s,
                qber: Some(q),
                alice,
                bob,
            })
        }
    }
}

fn search_once<F>(
    layout: &Layout,
    state_of: &F,
    eff: &StationEfficiencies,
    choice: StrategyChoice,
    goal: Goal,
    starts: &[Vec<f64>],
    opts: &SearchOptions,
) -> Result<(usize, crate::optimize::Minimum)>
where
    F: Fn(Option<[f64; 4]>) -> Result<TwoPartyState> + Sync,
{
    let objective = |x: &[f64]| -> f64 {
        let settings = layout.settings(x);
        match state_of(layout.mu(x, opts))
            .and_then(|st| evaluate(&st, &settings, eff, choice, goal))
        {
            Ok(e) => -e.objective,
            Err(_) => f64::NAN,
        }
    };
    multi_start(&objective, starts, &opts.simplex)
}

/// Key angle with the strongest correlation against Bob's first setting.
fn key_angle(
    state: &TwoPartyState,
    b1: f64,
    eff: &StationEfficiencies,
    strategies: (Strategy, Strategy),
) -> f64 {
    let grid = 180;
    (0..grid)
        .map(|i| std::f64::consts::PI * i as f64 / grid as f64)
        .map(|a0| {
            (
                a0,
                correlator(&state.pattern_table(a0, b1, eff), strategies).abs(),
            )
        })
        .fold((0.0, f64::NEG_INFINITY), |best, c| {
            if c.1 > best.1 {
                c
            } else {
                best
            }
        })
        .0
}

/// Seeded multi-start search. Unless only the angles of a CHSH search under
/// fixed strategies are free, one extra start (last index) is added: the
/// CHSH-optimal angles at the model's photon numbers under a fixed strategy,
/// completed with the best key angle, which keeps the search off the flat
/// regions of the objective.
fn run<F>(
    layout: Layout,
    state_of: F,
    eff: &StationEfficiencies,
    fixed_mu: [f64; 4],
    choice: StrategyChoice,
    goal: Goal,
    opts: &SearchOptions,
) -> Result<BellOptimum>
where
    F: Fn(Option<[f64; 4]>) -> Result<TwoPartyState> + Sync,
{
    opts.validate()?;
    let mut starts = seeded_starts(&layout.bounds(), opts.starts, opts.seed);
    if layout.free_mu || layout.angles == 5 || choice == StrategyChoice::Best {
        let fixed = match choice {
            StrategyChoice::Best => StrategyChoice::default(),
            c => c,
        };
        let chsh_only = Layout {
            angles: 4,
            free_mu: false,
        };
        let chsh_starts = seeded_starts(&chsh_only.bounds(), opts.starts, opts.seed);
        let fixed_state = |_: Option<[f64; 4]>| state_of(None);
        let (_, anchor) = search_once(
            &chsh_only,
            &fixed_state,
            eff,
            fixed,
            Goal::Chsh,
            &chsh_starts,
            opts,
        )?;
        let mut x = anchor.x;
        if layout.angles == 5 {
            let pair = fixed.pairs()[0];
            x.push(key_angle(
                &state_of(None)?,
                BellSettings::new(x[0], x[1], x[2], x[3]).b1,
                eff,
                pair,
            ));
        }
        if layout.free_mu {
            let (lo, hi) = (opts.mu_bounds.0.ln(), opts.mu_bounds.1.ln());
            x.extend(fixed_mu.iter().map(|m| {
                (2.0 * (m.ln() - lo) / (hi - lo) - 1.0)
                    .clamp(-1.0, 1.0)
                    .asin()
            }));
        }
        starts.push(x);
    }
    let (start, min) = search_once(&layout, &state_of, eff, choice, goal, &starts, opts)?;
    let settings = layout.settings(&min.x);
    let mu = layout.mu(&min.x, opts);
    let e = evaluate(&state_of(mu)?, &settings, eff, choice, goal)?;
    Ok(BellOptimum {
        objective: e.objective,
        s: e.s,
        qber: e.qber,
        settings,
        mu: mu.unwrap_or(fixed_mu),
        alice: e.alice,
        bob: e.bob,
        converged: min.converged,
        evaluations: min.evaluations,
        start,
        trace: min.trace,
        parameter_names: layout.names(),
    })
}

fn model_mu(model: &HeraldModel) -> [f64; 4] {
    [
        model.eps1.mu_h,
        model.eps1.mu_v,
        model.eps2.mu_h,
        model.eps2.mu_v,
    ]
}

/// Maximize S over the analyzer angles of a fixed state.
pub fn optimize_chsh_state(
    state: &TwoPartyState,
    eff: &StationEfficiencies,
    choice: StrategyChoice,
    opts: &SearchOptions,
) -> Result<BellOptimum> {
    run(
        Layout {
            angles: 4,
            free_mu: false,
        },
        |_| Ok(state.clone()),
        eff,
        [f64::NAN; 4],
        choice,
        Goal::Chsh,
        opts,
    )
}

/// Maximize S over the angles and, when `free_mu`, the four mean photon numbers.
pub fn optimize_chsh(
    model: &HeraldModel,
    free_mu: bool,
    choice: StrategyChoice,
    opts: &SearchOptions,
) -> Result<BellOptimum> {
    run(
        Layout { angles: 4, free_mu },
        |mu| model.state_at(mu),
        &model.stations,
        model_mu(model),
        choice,
        Goal::Chsh,
        opts,
    )
}

/// Maximize the Devetak-Winter rate over the CHSH angles, the key angle
/// and, when `free_mu`, the mean photon numbers.
pub fn optimize_key_rate(
    model: &HeraldModel,
    free_mu: bool,
    choice: StrategyChoice,
    opts: &SearchOptions,
) -> Result<BellOptimum> {
    run(
        Layout { angles: 5, free_mu },
        |mu| model.state_at(mu),
        &model.stations,
        model_mu(model),
        choice,
        Goal::KeyRate,
        opts,
    )
}

/// Outcome of a threshold search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Threshold {
    /// Smallest scanned value meeting the objective, to the search tolerance.
    pub value: f64,
    /// Optimum at `value`.
    pub optimum: BellOptimum,
    /// Pre-scan points `(x, margin)`, where a positive margin meets the objective.
    pub scan: Vec<(f64, f64)>,
}

/// Allowed decrease between neighbouring pre-scan margins, for optimizer noise.
const MONOTONE_SLACK: f64 = 1e-5;

fn threshold_search<F>(
    lo: f64,
    hi: f64,
    geometric: bool,
    done: impl Fn(f64, f64) -> bool,
    eval: F,
) -> Result<Threshold>
where
    F: Fn(f64) -> Result<(f64, BellOptimum)> + Sync,
{
    if !(lo < hi) || (geometric && lo <= 0.0) {
        return Err(SimError::InvalidParameter {
            name: "bracket".into(),
            value: lo,
            reason: "needs lower < upper (and lower > 0 on a log scale)",
        });
    }
    let point = |i: usize| {
        let f = i as f64 / 7.0;
        if geometric {
            lo * (hi / lo).powf(f)
        } else {
            lo + (hi - lo) * f
        }
    };
    let xs: Vec<f64> = (0..8).map(point).collect();
    let evals: Vec<Result<(f64, BellOptimum)>> = xs.par_iter().map(|&x| eval(x)).collect();
    let mut scan = Vec::with_capacity(8);
    let mut optima = Vec::with_capacity(8);
    for (x, e) in xs.iter().zip(evals) {
        let (g, opt) = e?;
        scan.push((*x, g));
        optima.push(opt);
    }
    if let Some(w) = scan.windows(2).find(|w| w[1].1 < w[0].1 - MONOTONE_SLACK) {
        return Err(SimError::Search(format!(
            "objective not monotone between {} and {}",
            w[0].0, w[1].0
        )));
    }
    let first = scan
        .iter()
        .position(|(_, g)| *g > 0.0)
        .ok_or_else(|| SimError::Search(format!("objective never met up to {hi}")))?;
    if first == 0 {
        return Err(SimError::Search(format!(
            "objective already met at {lo}; no sign change in bracket"
        )));
    }
    let (mut a, mut b) = (xs[first - 1], xs[first]);
    let mut best = optima.swap_remove(first);
    while !done(a, b) {
        let m = if geometric {
            (a * b).sqrt()
        } else {
            0.5 * (a + b)
        };
        let (g, opt) = eval(m)?;
        if g > 0.0 {
            b = m;
            best = opt;
        } else {
            a = m;
        }
    }
    Ok(Threshold {
        value: b,
        optimum: best,
        scan,
    })
}

/// Smallest uniform station efficiency in `bracket` for which the optimized
/// S exceeds `target_s`, to `tol` in efficiency.
pub fn efficiency_threshold(
    model: &HeraldModel,
    free_mu: bool,
    choice: StrategyChoice,
    target_s: f64,
    bracket: (f64, f64),
    tol: f64,
    opts: &SearchOptions,
) -> Result<Threshold> {
    threshold_search(
        bracket.0,
        bracket.1,
        false,
        |a, b| b - a <= tol,
        |eta| {
            let mut m = model.clone();
            let dark = m.stations.dark;
            m.stations = StationEfficiencies {
                dark,
                ..StationEfficiencies::uniform(eta)
            };
            let opt = optimize_chsh(&m, free_mu, choice, opts)?;
            Ok((opt.s - target_s, opt))
        },
    )
}

/// What an SFG gain threshold search asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GainObjective {
    /// S > 2.
    Violation,
    /// Positive Devetak-Winter rate.
    PositiveKeyRate,
}

/// Smallest multiplier on both SFG efficiencies in `bracket` meeting the
/// objective, to relative tolerance `rel_tol`.
pub fn sfg_gain_threshold(
    model: &HeraldModel,
    objective: GainObjective,
    free_mu: bool,
    choice: StrategyChoice,
    bracket: (f64, f64),
    rel_tol: f64,
    opts: &SearchOptions,
) -> Result<Threshold> {
    threshold_search(
        bracket.0,
        bracket.1,
        true,
        |a, b| b / a <= 1.0 + rel_tol,
        |gain| {
            let mut m = model.clone();
            m.gain = gain * model.gain;
            match objective {
                GainObjective::Violation => {
                    let opt = optimize_chsh(&m, free_mu, choice, opts)?;
                    Ok((opt.s - 2.0, opt))
                }
                GainObjective::PositiveKeyRate => {
                    let opt = optimize_key_rate(&m, free_mu, choice, opts)?;
                    Ok((opt.objective, opt))
                }
            }
        },
    )
}
