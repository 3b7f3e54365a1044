//! Physical invariants of the optics, detection and Bell layers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

use sfgsim::bell::{
    dw_key_rate, heralded_state_with_dark, optimize_chsh_state, BellSettings, HeraldModel, Pattern,
    SearchOptions, Strategy, StrategyChoice, TwoPartyState,
};
use sfgsim::detection::{
    analyzer_map, coincidence_prob, no_click_povm, threshold_povm, AnalyzerSetting, Coincidence,
    DetectorModel, Party, Port, StationEfficiencies,
};
use sfgsim::fock::{
    expectation_of_product, occupations_up_to, DensityOperator, LocalOperator, ModeLabel,
    PureState, Register, TraceMeaning,
};
use sfgsim::optics::{
    apply_loss, apply_sfg_first_order, kraus_parity_check, modes, LossMap, SfgParams, SourceParams,
};
use sfgsim::presets::preset;
use sfgsim::protocols::{sfg_herald, sfg_swap, ExperimentParams};

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn amp() -> impl proptest::strategy::Strategy<Value = C> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(r, i)| c(r, i))
}

/// `Σ |v⟩⟨v|` over random vectors on all occupations up to `cap`.
fn random_density(
    register: Register,
    cap: u32,
    vectors: &[Vec<C>],
    normalize: bool,
) -> DensityOperator {
    let basis = occupations_up_to(register.len(), cap);
    let mut entries = Vec::new();
    for v in vectors {
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                entries.push((
                    bi.counts().to_vec(),
                    bj.counts().to_vec(),
                    v[i % v.len()] * v[j % v.len()].conj(),
                ));
            }
        }
    }
    let rho = DensityOperator::from_entries(register, cap, TraceMeaning::EventProbability, entries)
        .unwrap();
    if normalize {
        rho.normalized()
            .unwrap()
            .with_meaning(TraceMeaning::Normalized)
    } else {
        rho
    }
}

fn stations_register() -> Register {
    Register::new([modes::D_H, modes::D_V, modes::E_H, modes::E_V]).unwrap()
}

fn efficiencies() -> impl proptest::strategy::Strategy<Value = StationEfficiencies> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(d_h, d_v, e_h, e_v)| {
        StationEfficiencies {
            d_h,
            d_v,
            e_h,
            e_v,
            dark: 0.0,
        }
    })
}

/// Every H label exchanged with its V partner. Station detectors sit behind
/// analyzer ports, so they follow the mirror only when the analyzers
/// measure H/V.
fn mirrored(p: &ExperimentParams, swap_stations: bool) -> ExperimentParams {
    let mut m = p.clone();
    m.eps1 = SourceParams {
        mu_h: p.eps1.mu_v,
        mu_v: p.eps1.mu_h,
    };
    m.eps2 = SourceParams {
        mu_h: p.eps2.mu_v,
        mu_v: p.eps2.mu_h,
    };
    (m.t1_h, m.t1_v, m.t2_h, m.t2_v) = (p.t1_v, p.t1_h, p.t2_v, p.t2_h);
    (m.eta_t_h, m.eta_t_v) = (p.eta_t_v, p.eta_t_h);
    if swap_stations {
        m.stations = StationEfficiencies {
            d_h: p.stations.d_v,
            d_v: p.stations.d_h,
            e_h: p.stations.e_v,
            e_v: p.stations.e_h,
            dark: p.stations.dark,
        };
    }
    m.sfg = SfgParams {
        eta_h: p.sfg.eta_v,
        eta_v: p.sfg.eta_h,
    };
    m
}

/// Joint pattern probability through local POVM elements on the full register.
fn pattern_prob(
    rho: &DensityOperator,
    theta: (f64, f64),
    pattern: (Pattern, Pattern),
    eff: &StationEfficiencies,
) -> f64 {
    let n = rho.max_photons();
    let element = |party: Party, theta: f64, p: Pattern| {
        let (h, v) = party.modes();
        let (dh, dv) = (eff.detector(party, Port::H), eff.detector(party, Port::V));
        LocalOperator::rotated_diagonal(&h, &v, n, analyzer_map(theta), move |nh, nv| {
            p.probability(dh.no_click(nh), dv.no_click(nv))
        })
        .unwrap()
    };
    let a = element(Party::D, theta.0, pattern.0);
    let b = element(Party::E, theta.1, pattern.1);
    expectation_of_product(&[&a, &b], rho).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn loss_is_trace_preserving_and_positive(vs in prop::collection::vec(prop::collection::vec(amp(), 20), 1..=3), t in prop::collection::vec(0.0..=1.0f64, 2)) {
        // the third mode is an untouched reference, so positivity checks complete positivity
        let reg = Register::new(["aH", "bV", "ref"]).unwrap();
        let rho = random_density(reg, 3, &vs, false);
        let out = apply_loss(&rho, &LossMap::new().with("aH", t[0]).unwrap().with("bV", t[1]).unwrap()).unwrap();
        prop_assert!((out.trace() - rho.trace()).abs() < 1e-12 * (1.0 + rho.trace()));
        prop_assert!(out.min_eigenvalue().unwrap() > -1e-10 * (1.0 + rho.trace()));
    }

    #[test]
    fn kraus_operator_equals_first_order_sfg(v in prop::collection::vec(amp(), 15), eta_h in 0.0..0.1f64, eta_v in 0.0..0.1f64) {
        let reg = Register::new([modes::A_H, modes::A_V, modes::B_H, modes::B_V, modes::C_H, modes::C_V]).unwrap();
        let ab = occupations_up_to(4, 2);
        let terms = ab.iter().zip(&v).map(|(o, a)| { let mut k = o.counts().to_vec(); k.extend([0, 0]); (k, *a) }).collect::<Vec<_>>();
        let psi = PureState::from_terms(reg.clone(), 2, terms).unwrap();
        let sfg = SfgParams::new(eta_h, eta_v).unwrap();
        let via_kraus = DensityOperator::from_pure(&kraus_parity_check(&psi, &sfg).unwrap());
        let via_sfg = apply_sfg_first_order(&DensityOperator::from_pure(&psi), &sfg).unwrap();
        for (k, b, x) in via_sfg.entries() {
            prop_assert!((via_kraus.entry(k, b) - x).norm() < 1e-10);
        }
        for (k, b, x) in via_kraus.entries() {
            prop_assert!((via_sfg.entry(k, b) - x).norm() < 1e-10);
        }
        let doubled = apply_sfg_first_order(&DensityOperator::from_pure(&psi), &SfgParams::new(2.0 * eta_h, 2.0 * eta_v).unwrap()).unwrap();
        prop_assert!((doubled.trace() - 2.0 * via_sfg.trace()).abs() < 1e-12);
    }

    #[test]
    fn povm_elements_are_effects(theta in 0.0..std::f64::consts::PI, eta in 0.0..=1.0f64, dark in 0.0..0.1f64, n in 1u32..=4) {
        let (h, v) = (ModeLabel::new("dH"), ModeLabel::new("dV"));
        let det = DetectorModel::new(eta, dark).unwrap();
        let basis = occupations_up_to(2, n);
        let dense = |op: &LocalOperator| DMatrix::from_fn(basis.len(), basis.len(), |i, j| op.entry(&basis[i], &basis[j]));
        for port in [Port::H, Port::V] {
            let click = dense(&threshold_povm((&h, &v), port, AnalyzerSetting::new(theta), &det, n).unwrap());
            let none = dense(&no_click_povm((&h, &v), port, AnalyzerSetting::new(theta), &det, n).unwrap());
            let sum = &click + &none;
            prop_assert!((sum - DMatrix::identity(basis.len(), basis.len())).iter().all(|z| z.norm() < 1e-10));
            let herm = (&click + click.adjoint()) * c(0.5, 0.0);
            for e in herm.symmetric_eigenvalues().iter() {
                prop_assert!(*e > -1e-10 && *e < 1.0 + 1e-10);
            }
        }
    }

    #[test]
    fn coincidences_grow_with_efficiency(vs in prop::collection::vec(prop::collection::vec(amp(), 15), 1..=2), eff in efficiencies(), bump in 0.0..1.0f64, which in 0usize..4, theta in (0.0..3.14f64, 0.0..3.14f64)) {
        let rho = random_density(stations_register(), 2, &vs, true);
        let set = (AnalyzerSetting::new(theta.0), AnalyzerSetting::new(theta.1));
        let base = coincidence_prob(&rho, set, Coincidence::ALL[which], &eff).unwrap();
        for k in 0..4 {
            let mut e = eff;
            let slot = match k { 0 => &mut e.d_h, 1 => &mut e.d_v, 2 => &mut e.e_h, _ => &mut e.e_v };
            *slot += (1.0 - *slot) * bump;
            prop_assert!(coincidence_prob(&rho, set, Coincidence::ALL[which], &e).unwrap() >= base - 1e-12);
        }
    }

    #[test]
    fn chsh_respects_tsirelson(vs in prop::collection::vec(prop::collection::vec(amp(), 15), 1..=3), eff in efficiencies(), angles in prop::collection::vec(0.0..3.2f64, 4)) {
        let rho = random_density(stations_register(), 2, &vs, true);
        let st = TwoPartyState::from_density(&rho).unwrap();
        let s = BellSettings::new(angles[0], angles[1], angles[2], angles[3]);
        let bound = 2.0 * 2f64.sqrt() + 1e-6;
        for a in Strategy::all() {
            for b in Strategy::all() {
                let v = st.chsh(&s, (a, b), &eff);
                prop_assert!(v.abs() <= bound, "S = {}", v);
                prop_assert!((st.chsh(&s, (a.negated(), b.negated()), &eff) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn block_tables_match_local_operators(vs in prop::collection::vec(prop::collection::vec(amp(), 35), 1..=2), eff in efficiencies(), theta in (0.0..3.2f64, 0.0..3.2f64)) {
        // a spectator mode is traced out on the way to the two-party state
        let reg = Register::new([modes::D_H, modes::D_V, modes::E_H, modes::E_V, modes::A_H]).unwrap();
        let rho = random_density(reg, 3, &vs, true);
        let table = TwoPartyState::from_density(&rho).unwrap().pattern_table(theta.0, theta.1, &eff);
        for p in Pattern::ALL {
            for q in Pattern::ALL {
                let direct = pattern_prob(&rho, theta, (p, q), &eff);
                prop_assert!((table[p as usize][q as usize] - direct).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn key_rate_is_monotone(s in 2.0..2.8284f64, ds in 0.0..0.8f64, q in 0.0..0.5f64, dq in 0.0..0.5f64) {
        let s2 = (s + ds).min(2.0 * 2f64.sqrt());
        let q2 = (q + dq).min(0.5);
        prop_assert!(dw_key_rate(s2, q).unwrap() >= dw_key_rate(s, q).unwrap() - 1e-12);
        prop_assert!(dw_key_rate(s, q2).unwrap() <= dw_key_rate(s, q).unwrap() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn polarization_mirror_symmetry(mu in prop::collection::vec(0.01..0.1f64, 4), t in prop::collection::vec(0.3..=1.0f64, 6), eta in prop::collection::vec(0.5..=1.0f64, 4), sfg in (1e-8..1e-7f64, 1e-8..1e-7f64), dark in 0.0..1e-10f64) {
        let mut p = preset("paper-tableS1").unwrap().params;
        p.pair_cap = 2;
        p.eps1 = SourceParams::new(mu[0], mu[1]).unwrap();
        p.eps2 = SourceParams::new(mu[2], mu[3]).unwrap();
        (p.t1_h, p.t1_v, p.t2_h, p.t2_v, p.eta_t_h, p.eta_t_v) = (t[0], t[1], t[2], t[3], t[4], t[5]);
        p.stations = StationEfficiencies { d_h: eta[0], d_v: eta[1], e_h: eta[2], e_v: eta[3], dark: 0.0 };
        p.sfg = SfgParams::new(sfg.0, sfg.1).unwrap();
        p.dark = dark;
        let a = sfg_swap(&p).unwrap();
        let b = sfg_swap(&mirrored(&p, true)).unwrap();
        let bx = sfg_swap(&mirrored(&p, false)).unwrap();
        let scale = a.z_table.iter().chain(&a.x_table).fold(0.0f64, |m, x| m.max(x.abs()));
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * scale;
        // Z outcomes swap labels, diagonal/antidiagonal outcomes keep them
        let perm = [3, 2, 1, 0];
        for i in 0..4 {
            prop_assert!(close(a.z_table[i], b.z_table[perm[i]]));
            prop_assert!(close(a.x_table[i], bx.x_table[i]));
        }
        prop_assert!((a.herald_prob - b.herald_prob).abs() <= 1e-9 * a.herald_prob);
    }

    #[test]
    fn all_strategies_never_lose_to_the_default(vs in prop::collection::vec(prop::collection::vec(amp(), 15), 1..=2), eta in 0.6..=1.0f64) {
        let rho = random_density(stations_register(), 2, &vs, true);
        let st = TwoPartyState::from_density(&rho).unwrap();
        let eff = StationEfficiencies::uniform(eta);
        let opts = SearchOptions { starts: 4, ..Default::default() };
        let fixed = optimize_chsh_state(&st, &eff, StrategyChoice::default(), &opts).unwrap();
        let best = optimize_chsh_state(&st, &eff, StrategyChoice::Best, &opts).unwrap();
        prop_assert!(best.s >= fixed.s - 1e-9, "{} < {}", best.s, fixed.s);
    }
}

#[test]
fn herald_kernel_matches_full_pipeline_chsh() {
    let mut p = preset("paper-tableS1").unwrap().params;
    p.pair_cap = 2;
    p.stations = StationEfficiencies::uniform(1.0);
    let h = sfg_herald(&p).unwrap();
    let rho = heralded_state_with_dark(&h.rho_sfg, &h.psi_in, p.dark).unwrap();
    let full = TwoPartyState::from_density(&rho).unwrap();
    let model = HeraldModel::new(&p).unwrap();
    let reduced = model.state().unwrap();
    assert!(
        full.max_difference(&reduced) < 1e-12,
        "{}",
        full.max_difference(&reduced)
    );
    for k in 0..8 {
        let x = k as f64 * 0.37;
        let s = BellSettings::new(x, 2.0 * x + 0.1, 0.5 - x, 3.0 * x);
        let pair = (Strategy::DEFAULT, Strategy::from_index(k as u8 * 2 + 1));
        let a = sfgsim::bell::chsh_value(&rho, &s, pair, &p.stations).unwrap();
        let b = reduced.chsh(&s, pair, &p.stations);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}
