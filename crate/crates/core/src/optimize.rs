//! Downhill-simplex minimization with deterministic multi-start.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SimError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    /// Converged once every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    pub max_evaluations: usize,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            diameter_tol: 1e-6,
            max_evaluations: 40_000,
            initial_step: 0.3,
        }
    }
}

/// One row of an optimization trace: best vertex after an iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], count: &mut usize) -> Result<f64> {
    *count += 1;
    let v = f(x);
    if !v.is_finite() {
        return Err(SimError::NonFinite(format!("{x:?}")));
    }
    Ok(v)
}

/// Minimize `f` from `x0` with the standard reflection, expansion,
/// contraction and shrink moves.
pub fn nelder_mead<F>(f: &F, x0: &[f64], opts: &NelderMeadOptions) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut count = 0;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(f, x0, &mut count)?));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(f, &x, &mut count)?;
        simplex.push((x, v));
    }
    let mut trace = Vec::new();
    let mut iteration = 0;
    let converged = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(TraceRow {
            iteration,
            x: simplex[0].0.clone(),
            value: simplex[0].1,
        });
        let best = &simplex[0].0;
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| {
                x.iter()
                    .zip(best)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            break true;
        }
        if count >= opts.max_evaluations {
            break false;
        }
        iteration += 1;
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(f, &xr, &mut count)?;
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(f, &xe, &mut count)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(0.5);
            let fc = eval(f, &xc, &mut count)?;
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(f, &xc, &mut count)?;
            (xc, fc)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = x_best
                .iter()
                .zip(&v.0)
                .map(|(b, xi)| b + 0.5 * (xi - b))
                .collect();
            let fx = eval(f, &x, &mut count)?;
            *v = (x, fx);
        }
    };
    let (x, value) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        value,
        evaluations: count,
        converged,
        trace,
    })
}

/// `count` starting points drawn uniformly from the box `bounds`, from a seeded generator.
pub fn seeded_starts(bounds: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect()
        })
        .collect()
}

/// Run [`nelder_mead`] from every start in parallel; the lowest value wins
/// and ties go to the earliest start. Returns the winning start index too.
pub fn multi_start<F>(
    f: &F,
    starts: &[Vec<f64>],
    opts: &NelderMeadOptions,
) -> Result<(usize, Minimum)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let runs: Vec<Result<Minimum>> = starts
        .par_iter()
        .map(|x0| nelder_mead(f, x0, opts))
        .collect();
    let mut best: Option<(usize, Minimum)> = None;
    for (i, r) in runs.into_iter().enumerate() {
        let m = r?;
        if best.as_ref().is_none_or(|(_, b)| m.value < b.value) {
            best = Some((i, m));
        }
    }
    best.ok_or_else(|| SimError::Search("no starting points".into()))
}
