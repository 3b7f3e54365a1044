//! Sparse Fock algebra against plain dense matrices on small registers.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use sfgsim::fock::{
    DensityOperator, LocalOperator, ModeLabel, Occupation, PureState, Register, TraceMeaning,
};
use sfgsim::optics::{apply_loss, LossMap};

const TOL: f64 = 1e-10;
const CASES: u32 = 1000;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("m{i}")).collect()
}

fn register(n: usize) -> Register {
    Register::new(names(n).iter().map(|s| ModeLabel::new(s))).unwrap()
}

/// Occupations with at most `cap` photons, lexicographic.
fn basis(modes: usize, cap: u32) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..modes {
        let mut next = Vec::new();
        for p in &out {
            let used: u32 = p.iter().map(|&x| x as u32).sum();
            for n in 0..=(cap - used) {
                let mut q = p.clone();
                q.push(n as u8);
                next.push(q);
            }
        }
        out = next;
    }
    out.sort();
    out
}

struct Space {
    modes: usize,
    cap: u32,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl Space {
    fn new(modes: usize, cap: u32) -> Self {
        let states = basis(modes, cap);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Space {
            modes,
            cap,
            states,
            index,
        }
    }

    fn dim(&self) -> usize {
        self.states.len()
    }

    fn lower(&self, mode: usize) -> DMatrix<C> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (j, s) in self.states.iter().enumerate() {
            if s[mode] > 0 {
                let mut t = s.clone();
                t[mode] -= 1;
                m[(self.index[&t], j)] = c((s[mode] as f64).sqrt(), 0.0);
            }
        }
        m
    }

    fn number(&self, mode: usize) -> DMatrix<C> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.states.iter().map(|s| c(s[mode] as f64, 0.0)),
        ))
    }

    /// `exp(θ(e^{iφ} m2† m1 − e^{−iφ} m1† m2))`, the splitter sending
    /// `m1† → cosθ m1† + e^{iφ} sinθ m2†`.
    fn rotation(&self, m1: usize, m2: usize, theta: f64, phase: f64) -> DMatrix<C> {
        let (a1, a2) = (self.lower(m1), self.lower(m2));
        let e = C::from_polar(1.0, phase);
        let g = (a2.adjoint() * &a1) * e - (a1.adjoint() * &a2) * e.conj();
        (g * c(theta, 0.0)).exp()
    }

    fn vector(&self, psi: &PureState) -> DVector<C> {
        let mut v = DVector::zeros(self.dim());
        for (k, a) in psi.terms() {
            v[self.index[k.counts()]] = *a;
        }
        v
    }

    fn matrix(&self, rho: &DensityOperator) -> DMatrix<C> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (k, b, v) in rho.entries() {
            m[(self.index[k.counts()], self.index[b.counts()])] = *v;
        }
        m
    }

    fn pure(&self, amps: &[C]) -> PureState {
        let terms = self
            .states
            .iter()
            .cloned()
            .zip(amps.iter().copied())
            .collect::<Vec<_>>();
        PureState::from_terms(register(self.modes), self.cap, terms).unwrap()
    }

    fn density(&self, m: &DMatrix<C>) -> DensityOperator {
        let mut entries = Vec::new();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                entries.push((self.states[i].clone(), self.states[j].clone(), m[(i, j)]));
            }
        }
        DensityOperator::from_entries(
            register(self.modes),
            self.cap,
            TraceMeaning::EventProbability,
            entries,
        )
        .unwrap()
    }
}

fn max_diff_v(a: &DVector<C>, b: &DVector<C>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_diff_m(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random amplitudes on a random small space, with some exact zeros.
fn space_and_amps(min_modes: usize) -> impl Strategy<Value = (usize, u32, Vec<C>)> {
    (min_modes..=3usize, 1u32..=3).prop_flat_map(|(m, cap)| {
        let n = basis(m, cap).len();
        let amp = prop_oneof![1 => Just(c(0.0, 0.0)), 4 => (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(r, i)| c(r, i))];
        (Just(m), Just(cap), prop::collection::vec(amp, n))
    })
}

/// Random positive operator `Σ |v_i⟩⟨v_i|` from three vectors.
fn space_and_density(min_modes: usize) -> impl Strategy<Value = (usize, u32, Vec<Vec<C>>)> {
    (min_modes..=3usize, 1u32..=3).prop_flat_map(|(m, cap)| {
        let n = basis(m, cap).len();
        let amp = (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(r, i)| c(r, i));
        (
            Just(m),
            Just(cap),
            prop::collection::vec(prop::collection::vec(amp, n), 1..=3),
        )
    })
}

fn positive(vs: &[Vec<C>]) -> DMatrix<C> {
    let n = vs[0].len();
    let mut m = DMatrix::zeros(n, n);
    for v in vs {
        let v = DVector::from_vec(v.clone());
        m += &v * v.adjoint();
    }
    m
}

/// Dense partial trace over the listed mode indices.
fn dense_partial_trace(
    full: &Space,
    m: &DMatrix<C>,
    traced: &[usize],
    reduced: &Space,
) -> DMatrix<C> {
    let keep: Vec<usize> = (0..full.modes).filter(|i| !traced.contains(i)).collect();
    let pick = |s: &Vec<u8>, idx: &[usize]| idx.iter().map(|&i| s[i]).collect::<Vec<u8>>();
    let mut out = DMatrix::zeros(reduced.dim(), reduced.dim());
    for (i, si) in full.states.iter().enumerate() {
        for (j, sj) in full.states.iter().enumerate() {
            if pick(si, traced) == pick(sj, traced) {
                out[(
                    reduced.index[&pick(si, &keep)],
                    reduced.index[&pick(sj, &keep)],
                )] += m[(i, j)];
            }
        }
    }
    out
}

fn label(i: usize) -> ModeLabel {
    ModeLabel::new(&format!("m{i}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn creation_and_annihilation((m, cap, amps) in space_and_amps(1), mode in 0usize..3) {
        let mode = mode % m;
        let sp = Space::new(m, cap);
        let psi = sp.pure(&amps);
        let v = sp.vector(&psi);
        let a = sp.lower(mode);
        let up = a.adjoint() * &v;
        let created = psi.apply_creation(&label(mode)).unwrap();
        prop_assert!(max_diff_v(&sp.vector(&created), &up) < TOL);
        // the weight pushed past the cap is what a† sends to cap + 1
        let full = (&v.adjoint() * (a.adjoint() * &a + DMatrix::identity(sp.dim(), sp.dim())) * &v)[(0, 0)].re;
        prop_assert!((created.dropped_weight() + up.norm_squared() - full).abs() < TOL);
        let lowered = psi.apply_annihilation(&label(mode)).unwrap();
        prop_assert!(max_diff_v(&sp.vector(&lowered), &(&a * &v)) < TOL);
    }

    #[test]
    fn commutator_below_the_cap((m, cap, amps) in space_and_amps(1), mode in 0usize..3) {
        let mode = mode % m;
        let sp = Space::new(m, cap);
        let psi = sp.pure(&amps).filter(|k| k.total() < cap);
        let l = label(mode);
        let ad = psi.apply_creation(&l).unwrap().apply_annihilation(&l).unwrap();
        let da = psi.apply_annihilation(&l).unwrap().apply_creation(&l).unwrap();
        let diff = sp.vector(&ad) - sp.vector(&da);
        prop_assert!(max_diff_v(&diff, &sp.vector(&psi)) < TOL);
    }

    #[test]
    fn rotation_matches_matrix_exponential((m, cap, amps) in space_and_amps(2), pair in (0usize..3, 1usize..3), theta in -3.2..3.2f64, phase in -3.2..3.2f64) {
        let (i, j) = (pair.0 % m, (pair.0 + pair.1) % m);
        prop_assume!(i != j);
        let sp = Space::new(m, cap);
        let psi = sp.pure(&amps);
        let u = sp.rotation(i, j, theta, phase);
        let out = psi.two_mode_rotation(&label(i), &label(j), theta, phase).unwrap();
        prop_assert!(max_diff_v(&sp.vector(&out), &(&u * sp.vector(&psi))) < TOL);
        prop_assert!((out.norm_sqr() - psi.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn general_passive_map((m, cap, amps) in space_and_amps(2), theta in -3.2..3.2f64, phase in -3.2..3.2f64, alpha in -3.2..3.2f64, beta in -3.2..3.2f64) {
        let sp = Space::new(m, cap);
        let psi = sp.pure(&amps);
        let (co, si) = (theta.cos(), theta.sin());
        let e = C::from_polar(1.0, phase);
        let (pa, pb) = (C::from_polar(1.0, alpha), C::from_polar(1.0, beta));
        // columns: images of m0†, m1† under rotation ∘ phases
        let u = [[pa * co, -pb * e.conj() * si], [pa * e * si, pb * co]];
        let phases = (sp.number(0) * c(0.0, alpha) + sp.number(1) * c(0.0, beta)).exp();
        let dense = sp.rotation(0, 1, theta, phase) * phases;
        let out = psi.passive_two_mode(&label(0), &label(1), u).unwrap();
        prop_assert!(max_diff_v(&sp.vector(&out), &(&dense * sp.vector(&psi))) < TOL);
    }

    #[test]
    fn swap_and_inner_product((m, cap, amps) in space_and_amps(2), (_, _, other) in space_and_amps(2)) {
        let sp = Space::new(m, cap);
        let psi = sp.pure(&amps);
        let mut other = other;
        other.resize(sp.dim(), c(0.3, -0.1));
        let phi = sp.pure(&other);
        let swapped = psi.swap_modes(&label(0), &label(m - 1)).unwrap();
        for (k, a) in psi.terms() {
            let mut s = k.counts().to_vec();
            s.swap(0, m - 1);
            prop_assert!((swapped.amplitude(&Occupation::from_counts(&s)) - a).norm() < TOL);
        }
        let dense = sp.vector(&phi).dotc(&sp.vector(&psi));
        prop_assert!((phi.inner(&psi).unwrap() - dense).norm() < TOL);
    }

    #[test]
    fn tensor_is_the_kronecker_product(left in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..=6), right in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..=4), lcap in 1u32..=2, rcap in 1u32..=3) {
        let lsp = Space::new(2, lcap);
        let rsp = Space::new(1, rcap);
        let la: Vec<C> = (0..lsp.dim()).map(|i| { let (r, im) = left[i % left.len()]; c(r, im) }).collect();
        let ra: Vec<C> = (0..rsp.dim()).map(|i| { let (r, im) = right[i % right.len()]; c(r, im) }).collect();
        let l = lsp.pure(&la);
        let r = PureState::from_terms(Register::new([ModeLabel::new("m2")]).unwrap(), rcap, rsp.states.iter().cloned().zip(ra.iter().copied()).collect::<Vec<_>>()).unwrap();
        let t = l.tensor(&r).unwrap();
        for (i, si) in lsp.states.iter().enumerate() {
            for (j, sj) in rsp.states.iter().enumerate() {
                let mut s = si.clone();
                s.extend(sj);
                prop_assert!((t.amplitude(&Occupation::from_counts(&s)) - la[i] * ra[j]).norm() < TOL);
            }
        }
        prop_assert!((t.norm() - l.norm() * r.norm()).abs() < TOL);
    }

    #[test]
    fn density_rotation_and_expectation((m, cap, vs) in space_and_density(2), theta in -3.2..3.2f64, phase in -3.2..3.2f64, ops in space_and_density(2)) {
        let sp = Space::new(m, cap);
        let rho_m = positive(&vs);
        let rho = sp.density(&rho_m);
        let u = sp.rotation(0, m - 1, theta, phase);
        let out = rho.two_mode_rotation(&label(0), &label(m - 1), theta, phase).unwrap();
        prop_assert!(max_diff_m(&sp.matrix(&out), &(&u * &rho_m * u.adjoint())) < TOL);
        prop_assert!((out.trace() - rho.trace()).abs() < 1e-12);

        let mut op_vs = ops.2;
        for v in op_vs.iter_mut() {
            v.resize(sp.dim(), c(0.2, 0.1));
        }
        let op_m = positive(&op_vs);
        let op = sp.density(&op_m);
        let dense = (&op_m * &rho_m).trace().re;
        prop_assert!((rho.expectation(&op).unwrap() - dense).abs() < TOL * (1.0 + dense.abs()));
        let mut entries = Vec::new();
        for i in 0..sp.dim() {
            for j in 0..sp.dim() {
                entries.push((sp.states[i].clone(), sp.states[j].clone(), op_m[(i, j)]));
            }
        }
        let local = LocalOperator::from_entries(register(m), entries).unwrap();
        prop_assert!((local.expectation(&rho).unwrap() - dense).abs() < TOL * (1.0 + dense.abs()));
    }

    #[test]
    fn partial_trace_matches_dense((m, cap, vs) in space_and_density(2), which in 0usize..3) {
        let sp = Space::new(m, cap);
        let traced = [which % m];
        let rho_m = positive(&vs);
        let rho = sp.density(&rho_m);
        let red = rho.partial_trace(&[label(traced[0])]).unwrap();
        let names: Vec<ModeLabel> = (0..m).filter(|i| *i != traced[0]).map(label).collect();
        prop_assert_eq!(red.register().modes(), &names[..]);
        let rsp = Space::new(m - 1, cap);
        let dense = dense_partial_trace(&sp, &rho_m, &traced, &rsp);
        let mut got = DMatrix::zeros(rsp.dim(), rsp.dim());
        for (k, b, v) in red.entries() {
            got[(rsp.index[k.counts()], rsp.index[b.counts()])] = *v;
        }
        prop_assert!(max_diff_m(&got, &dense) < TOL);
        prop_assert!((red.trace() - rho.trace()).abs() < 1e-12 * (1.0 + rho.trace()));
    }

    #[test]
    fn contraction_matches_dense((m, cap, vs) in space_and_density(2), bra in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4)) {
        let sp = Space::new(m, cap);
        let rho_m = positive(&vs);
        let rho = sp.density(&rho_m);
        let one = Space::new(1, cap);
        let phi_amps: Vec<C> = (0..one.dim()).map(|i| c(bra[i].0, bra[i].1)).collect();
        let phi = PureState::from_terms(Register::new([label(0)]).unwrap(), cap, one.states.iter().cloned().zip(phi_amps.iter().copied()).collect::<Vec<_>>()).unwrap();
        let out = rho.contract(&phi).unwrap();
        let rsp = Space::new(m - 1, cap);
        let mut dense = DMatrix::zeros(rsp.dim(), rsp.dim());
        for (i, si) in sp.states.iter().enumerate() {
            for (j, sj) in sp.states.iter().enumerate() {
                let (ci, cj) = (phi_amps[si[0] as usize], phi_amps[sj[0] as usize]);
                dense[(rsp.index[&si[1..].to_vec()], rsp.index[&sj[1..].to_vec()])] += ci.conj() * rho_m[(i, j)] * cj;
            }
        }
        let mut got = DMatrix::zeros(rsp.dim(), rsp.dim());
        for (k, b, v) in out.entries() {
            got[(rsp.index[k.counts()], rsp.index[b.counts()])] = *v;
        }
        prop_assert!(max_diff_m(&got, &dense) < TOL);
    }

    #[test]
    fn loss_matches_dilation((m, cap, vs) in space_and_density(1), t in 0.0..=1.0f64, which in 0usize..3) {
        let mode = which % m;
        let sp = Space::new(m, cap);
        let rho_m = positive(&vs);
        let rho = sp.density(&rho_m);
        let out = apply_loss(&rho, &LossMap::new().with(&format!("m{mode}"), t).unwrap()).unwrap();
        // dense dilation: vacuum ancilla as an extra last mode
        let big = Space::new(m + 1, cap);
        let mut embed = DMatrix::zeros(big.dim(), sp.dim());
        for (j, s) in sp.states.iter().enumerate() {
            let mut e = s.clone();
            e.push(0);
            embed[(big.index[&e], j)] = c(1.0, 0.0);
        }
        let u = big.rotation(mode, m, t.sqrt().acos(), 0.0);
        let wide = &u * &embed * &rho_m * embed.adjoint() * u.adjoint();
        let dense = dense_partial_trace(&big, &wide, &[m], &sp);
        prop_assert!(max_diff_m(&sp.matrix(&out), &dense) < TOL);
        prop_assert!((out.trace() - rho.trace()).abs() < 1e-12 * (1.0 + rho.trace()));
    }
}
