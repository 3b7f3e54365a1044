use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::register::{ModeLabel, Occupation, Register};
use super::state::{passive_image, PureState};
use super::{FockError, Result, NORM_TOLERANCE, PSD_TOLERANCE};

/// Entries smaller than this fraction of the largest entry are pruned.
const RELATIVE_PRUNE: f64 = 1e-15;

/// How the trace of a [`DensityOperator`] should be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceMeaning {
    /// A state; the trace is one.
    Normalized,
    /// An unnormalized branch; the trace is the probability of the event.
    EventProbability,
}

/// Sparse operator `Σ ρ(k,b) |k⟩⟨b|` over one register.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    register: Register,
    max_photons: u32,
    entries: BTreeMap<(Occupation, Occupation), Complex64>,
    meaning: TraceMeaning,
}

type Image = Vec<(Occupation, Complex64)>;

impl DensityOperator {
    pub fn zero(register: Register, max_photons: u32, meaning: TraceMeaning) -> Self {
        DensityOperator {
            register,
            max_photons,
            entries: BTreeMap::new(),
            meaning,
        }
    }

    /// `|ψ⟩⟨ψ|`; flagged normalized when `ψ` has unit norm.
    pub fn from_pure(psi: &PureState) -> Self {
        let mut entries = BTreeMap::new();
        for (k, a) in psi.terms() {
            for (b, c) in psi.terms() {
                entries.insert((k.clone(), b.clone()), a * c.conj());
            }
        }
        let meaning = if psi.is_normalized() {
            TraceMeaning::Normalized
        } else {
            TraceMeaning::EventProbability
        };
        Self::build(psi.register().clone(), psi.max_photons(), entries, meaning)
    }

    /// Build from explicit `(ket, bra, value)` triples; repeats are summed.
    pub fn from_entries<I>(
        register: Register,
        max_photons: u32,
        meaning: TraceMeaning,
        entries: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, Vec<u8>, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (k, b, v) in entries {
            for occ in [&k, &b] {
                if occ.len() != register.len() {
                    return Err(FockError::OccupationLength {
                        expected: register.len(),
                        got: occ.len(),
                    });
                }
            }
            let (k, b) = (Occupation::from_counts(&k), Occupation::from_counts(&b));
            for occ in [&k, &b] {
                if occ.total() > max_photons {
                    return Err(FockError::ExceedsCap {
                        total: occ.total(),
                        cap: max_photons,
                    });
                }
            }
            *map.entry((k, b)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        Ok(Self::build(register, max_photons, map, meaning))
    }

    fn build(
        register: Register,
        max_photons: u32,
        mut entries: BTreeMap<(Occupation, Occupation), Complex64>,
        meaning: TraceMeaning,
    ) -> Self {
        let scale = entries.values().fold(0.0f64, |m, v| m.max(v.norm()));
        entries.retain(|_, v| v.norm() > scale * RELATIVE_PRUNE && v.norm() > 0.0);
        DensityOperator {
            register,
            max_photons,
            entries,
            meaning,
        }
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn max_photons(&self) -> u32 {
        self.max_photons
    }

    pub fn trace_meaning(&self) -> TraceMeaning {
        self.meaning
    }

    pub fn with_meaning(mut self, meaning: TraceMeaning) -> Self {
        self.meaning = meaning;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Occupation, &Occupation, &Complex64)> {
        self.entries.iter().map(|((k, b), v)| (k, b, v))
    }

    pub fn entry(&self, ket: &Occupation, bra: &Occupation) -> Complex64 {
        self.entries
            .get(&(ket.clone(), bra.clone()))
            .copied()
            .unwrap_or_default()
    }

    pub fn trace(&self) -> f64 {
        self.entries
            .iter()
            .filter(|((k, b), _)| k == b)
            .map(|(_, v)| v.re)
            .sum()
    }

    /// Diagonal entries `(occupation, population)` in basis order.
    pub fn diagonal(&self) -> Vec<(Occupation, f64)> {
        self.entries
            .iter()
            .filter(|((k, b), _)| k == b)
            .map(|((k, _), v)| (k.clone(), v.re))
            .collect()
    }

    /// Divide by the trace and flag the result as a state.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 || !tr.is_finite() {
            return Err(FockError::ZeroNorm);
        }
        Ok(self.scaled(1.0 / tr).with_meaning(TraceMeaning::Normalized))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), v * factor))
            .collect();
        Self::build(
            self.register.clone(),
            self.max_photons,
            entries,
            self.meaning,
        )
    }

    /// `self + other`, flagged as an event operator unless both inputs are states.
    pub fn add(&self, other: &DensityOperator) -> Result<Self> {
        if self.register != other.register {
            return Err(FockError::RegisterMismatch(format!(
                "{} vs {}",
                self.register, other.register
            )));
        }
        let mut entries = self.entries.clone();
        for (k, v) in &other.entries {
            *entries.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        Ok(Self::build(
            self.register.clone(),
            self.max_photons.max(other.max_photons),
            entries,
            TraceMeaning::EventProbability,
        ))
    }

    /// Largest deviation `|ρ(k,b) − conj ρ(b,k)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for ((k, b), v) in &self.entries {
            let w = self
                .entries
                .get(&(b.clone(), k.clone()))
                .copied()
                .unwrap_or_default();
            worst = worst.max((v - w.conj()).norm());
        }
        worst
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > NORM_TOLERANCE {
            return Err(FockError::NotHermitian(dev));
        }
        Ok(())
    }

    /// Sorted list of every occupation appearing as a ket or a bra.
    pub fn support(&self) -> Vec<Occupation> {
        let set: BTreeSet<&Occupation> = self.entries.keys().flat_map(|(k, b)| [k, b]).collect();
        set.into_iter().cloned().collect()
    }

    /// Dense matrix over `basis`; entries outside the basis are ignored.
    pub fn to_dense(&self, basis: &[Occupation]) -> DMatrix<Complex64> {
        let index: HashMap<&Occupation, usize> =
            basis.iter().enumerate().map(|(i, o)| (o, i)).collect();
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        for ((k, b), v) in &self.entries {
            if let (Some(&i), Some(&j)) = (index.get(k), index.get(b)) {
                m[(i, j)] = *v;
            }
        }
        m
    }

    /// Smallest eigenvalue on the stored support.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.check_hermitian()?;
        let support = self.support();
        if support.is_empty() {
            return Ok(0.0);
        }
        let m = self.to_dense(&support);
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = m.symmetric_eigenvalues();
        Ok(eig.iter().fold(f64::INFINITY, |a, &b| a.min(b)))
    }

    /// Fails unless the operator is Hermitian with spectrum `≥ −ε_psd`.
    pub fn check_psd(&self) -> Result<()> {
        let lo = self.min_eigenvalue()?;
        if lo < -PSD_TOLERANCE {
            return Err(FockError::NotPositive(lo));
        }
        Ok(())
    }

    /// `Tr[op · ρ]` for an operator over the same register.
    pub fn expectation(&self, op: &DensityOperator) -> Result<f64> {
        if self.register != op.register {
            return Err(FockError::RegisterMismatch(format!(
                "{} vs {}",
                self.register, op.register
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for ((k, b), v) in &op.entries {
            if let Some(r) = self.entries.get(&(b.clone(), k.clone())) {
                acc += v * r;
            }
        }
        Ok(acc.re)
    }

    /// `Σ ρ(k,b) f(k) f(b)†` where `f` sends a basis ket to a vector over
    /// `out_register`. Each distinct basis ket is mapped once.
    pub fn map_kets<F, E>(
        &self,
        out_register: &Register,
        out_max: u32,
        f: F,
    ) -> std::result::Result<Self, E>
    where
        F: Fn(&PureState) -> std::result::Result<PureState, E>,
        E: From<FockError>,
    {
        let mut cache: HashMap<Occupation, Image> = HashMap::new();
        for occ in self.support() {
            let mut amps = BTreeMap::new();
            amps.insert(occ.clone(), Complex64::new(1.0, 0.0));
            let basis = PureState::from_map(self.register.clone(), self.max_photons, amps, 0.0);
            let image = f(&basis)?;
            if image.register() != out_register {
                return Err(FockError::RegisterMismatch(format!(
                    "{} vs {}",
                    image.register(),
                    out_register
                ))
                .into());
            }
            cache.insert(occ, image.terms().map(|(k, a)| (k.clone(), *a)).collect());
        }
        Ok(self.apply_images(out_register.clone(), out_max, &cache))
    }

    fn apply_images(
        &self,
        register: Register,
        max_photons: u32,
        cache: &HashMap<Occupation, Image>,
    ) -> Self {
        let mut out: BTreeMap<(Occupation, Occupation), Complex64> = BTreeMap::new();
        for ((k, b), v) in &self.entries {
            let (ik, ib) = (&cache[k], &cache[b]);
            for (k2, ck) in ik {
                let vk = v * ck;
                for (b2, cb) in ib {
                    *out.entry((k2.clone(), b2.clone()))
                        .or_insert(Complex64::new(0.0, 0.0)) += vk * cb.conj();
                }
            }
        }
        Self::build(register, max_photons, out, self.meaning)
    }

    /// Conjugation by a passive two-mode map, see [`PureState::passive_two_mode`].
    pub fn passive_two_mode(
        &self,
        m1: &ModeLabel,
        m2: &ModeLabel,
        u: [[Complex64; 2]; 2],
    ) -> Result<Self> {
        if m1 == m2 {
            return Err(FockError::SameMode(m1.to_string()));
        }
        let i = self.register.index_of(m1)?;
        let j = self.register.index_of(m2)?;
        let mut cache: HashMap<Occupation, Image> = HashMap::new();
        for occ in self.support() {
            let image = passive_image(occ.get(i) as u32, occ.get(j) as u32, &u)
                .into_iter()
                .map(|(p, q, c)| {
                    let mut o = occ.clone();
                    o.set(i, p as u8);
                    o.set(j, q as u8);
                    (o, c)
                })
                .collect();
            cache.insert(occ, image);
        }
        Ok(self.apply_images(self.register.clone(), self.max_photons, &cache))
    }

    /// Conjugation by the rotation of [`PureState::two_mode_rotation`].
    pub fn two_mode_rotation(
        &self,
        m1: &ModeLabel,
        m2: &ModeLabel,
        theta: f64,
        phase: f64,
    ) -> Result<Self> {
        let (c, s) = (theta.cos(), theta.sin());
        let e = Complex64::from_polar(1.0, phase);
        let u = [
            [Complex64::new(c, 0.0), -e.conj() * s],
            [e * s, Complex64::new(c, 0.0)],
        ];
        self.passive_two_mode(m1, m2, u)
    }

    pub fn swap_modes(&self, m1: &ModeLabel, m2: &ModeLabel) -> Result<Self> {
        if m1 == m2 {
            return Err(FockError::SameMode(m1.to_string()));
        }
        let i = self.register.index_of(m1)?;
        let j = self.register.index_of(m2)?;
        let swap = |o: &Occupation| {
            let mut s = o.clone();
            s.set(i, o.get(j));
            s.set(j, o.get(i));
            s
        };
        let entries = self
            .entries
            .iter()
            .map(|((k, b), v)| ((swap(k), swap(b)), *v))
            .collect();
        Ok(DensityOperator {
            register: self.register.clone(),
            max_photons: self.max_photons,
            entries,
            meaning: self.meaning,
        })
    }

    /// Append fresh vacuum modes.
    pub fn with_vacuum_modes(&self, modes: &[ModeLabel]) -> Result<Self> {
        let extra = Register::new(modes.iter().cloned())?;
        let register = self.register.concat(&extra)?;
        let n = modes.len();
        let entries = self
            .entries
            .iter()
            .map(|((k, b), v)| ((k.extended(n), b.extended(n)), *v))
            .collect();
        Ok(DensityOperator {
            register,
            max_photons: self.max_photons,
            entries,
            meaning: self.meaning,
        })
    }

    /// Trace out `modes`; the result lives on the remaining modes in their original order.
    pub fn partial_trace(&self, modes: &[ModeLabel]) -> Result<Self> {
        let mut idx = self.register.indices_of(modes)?;
        idx.sort_unstable();
        let register = self.register.without_indices(&idx);
        let mut out: BTreeMap<(Occupation, Occupation), Complex64> = BTreeMap::new();
        for ((k, b), v) in &self.entries {
            let (kk, ks) = k.split(&idx);
            let (bk, bs) = b.split(&idx);
            if ks == bs {
                *out.entry((kk, bk)).or_insert(Complex64::new(0.0, 0.0)) += v;
            }
        }
        Ok(Self::build(register, self.max_photons, out, self.meaning))
    }

    /// `⟨φ|_S ρ |φ⟩_S` for a vector `φ` over a subset `S` of the modes.
    pub fn contract(&self, bra: &PureState) -> Result<Self> {
        let idx = self.register.indices_of(bra.register().modes())?;
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        let register = self.register.without_indices(&sorted);
        let mut out: BTreeMap<(Occupation, Occupation), Complex64> = BTreeMap::new();
        for ((k, b), v) in &self.entries {
            let ck = bra.amplitude(&k.pick(&idx));
            if ck.norm() == 0.0 {
                continue;
            }
            let cb = bra.amplitude(&b.pick(&idx));
            if cb.norm() == 0.0 {
                continue;
            }
            let (kk, _) = k.split(&sorted);
            let (bk, _) = b.split(&sorted);
            *out.entry((kk, bk)).or_insert(Complex64::new(0.0, 0.0)) += ck.conj() * v * cb;
        }
        Ok(Self::build(
            register,
            self.max_photons,
            out,
            TraceMeaning::EventProbability,
        ))
    }

    /// Keep only entries whose ket and bra both satisfy `keep`.
    pub fn filter<F>(&self, keep: F) -> Self
    where
        F: Fn(&Occupation) -> bool,
    {
        let entries = self
            .entries
            .iter()
            .filter(|((k, b), _)| keep(k) && keep(b))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        DensityOperator {
            register: self.register.clone(),
            max_photons: self.max_photons,
            entries,
            meaning: TraceMeaning::EventProbability,
        }
    }

    /// Largest photon number found in one mode over the support.
    pub fn max_occupation(&self, mode: &ModeLabel) -> Result<u8> {
        let i = self.register.index_of(mode)?;
        Ok(self
            .entries
            .keys()
            .flat_map(|(k, b)| [k.get(i), b.get(i)])
            .max()
            .unwrap_or(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(names: &[&str]) -> Register {
        Register::new(names.iter().copied()).unwrap()
    }

    fn bell() -> PureState {
        let s = 0.5f64.sqrt();
        PureState::from_terms(
            reg(&["a", "b"]),
            4,
            vec![
                (vec![0, 0], Complex64::new(s, 0.0)),
                (vec![1, 1], Complex64::new(s, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn partial_trace_of_correlated_pair_is_mixed() {
        let rho = DensityOperator::from_pure(&bell());
        let red = rho.partial_trace(&["b".into()]).unwrap();
        assert_eq!(red.len(), 2);
        assert!(
            (red.entry(
                &Occupation::from_counts(&[0]),
                &Occupation::from_counts(&[0])
            )
            .re - 0.5)
                .abs()
                < 1e-15
        );
        assert!(
            (red.entry(
                &Occupation::from_counts(&[1]),
                &Occupation::from_counts(&[1])
            )
            .re - 0.5)
                .abs()
                < 1e-15
        );
        assert!((red.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tracing_vacuum_mode_is_harmless() {
        let rho = DensityOperator::from_pure(&bell());
        let ext = rho.with_vacuum_modes(&["x".into()]).unwrap();
        assert_eq!(ext.partial_trace(&["x".into()]).unwrap(), rho);
        assert!(matches!(
            rho.partial_trace(&["zz".into()]),
            Err(FockError::UnknownMode(_))
        ));
    }

    #[test]
    fn loss_on_single_photon_oracle() {
        let t = 0.44f64;
        let one = PureState::fock(reg(&["a"]), 4, &[("a", 1)]).unwrap();
        let rho = DensityOperator::from_pure(&one)
            .with_vacuum_modes(&["a'".into()])
            .unwrap();
        let rot = rho
            .two_mode_rotation(&"a".into(), &"a'".into(), t.sqrt().acos(), 0.0)
            .unwrap();
        let out = rot.partial_trace(&["a'".into()]).unwrap();
        let p1 = out
            .entry(
                &Occupation::from_counts(&[1]),
                &Occupation::from_counts(&[1]),
            )
            .re;
        let p0 = out
            .entry(
                &Occupation::from_counts(&[0]),
                &Occupation::from_counts(&[0]),
            )
            .re;
        assert!((p1 - t).abs() < 1e-14 && (p0 - (1.0 - t)).abs() < 1e-14);
        assert!(
            out.entry(
                &Occupation::from_counts(&[1]),
                &Occupation::from_counts(&[0])
            )
            .norm()
                < 1e-15
        );
    }

    #[test]
    fn expectation_examples() {
        let rho = DensityOperator::from_pure(&bell());
        let vac = DensityOperator::from_pure(&PureState::vacuum(reg(&["a", "b"]), 4));
        assert!((rho.expectation(&vac).unwrap() - 0.5).abs() < 1e-15);
        assert!((vac.expectation(&vac).unwrap() - 1.0).abs() < 1e-15);
        let other = DensityOperator::from_pure(&PureState::vacuum(reg(&["a"]), 4));
        assert!(matches!(
            rho.expectation(&other),
            Err(FockError::RegisterMismatch(_))
        ));
    }

    #[test]
    fn psd_check_catches_negative_operator() {
        let r = reg(&["a"]);
        let ok = DensityOperator::from_pure(&PureState::vacuum(r.clone(), 2));
        assert!(ok.check_psd().is_ok());
        let bad = DensityOperator::from_entries(
            r.clone(),
            2,
            TraceMeaning::EventProbability,
            vec![(vec![0], vec![0], Complex64::new(-0.1, 0.0))],
        )
        .unwrap();
        assert!(matches!(bad.check_psd(), Err(FockError::NotPositive(_))));
        let skew = DensityOperator::from_entries(
            r,
            2,
            TraceMeaning::EventProbability,
            vec![(vec![0], vec![1], Complex64::new(0.1, 0.0))],
        )
        .unwrap();
        assert!(matches!(
            skew.check_hermitian(),
            Err(FockError::NotHermitian(_))
        ));
    }

    #[test]
    fn map_kets_matches_pure_evolution() {
        let psi = bell();
        let a = ModeLabel::new("a");
        let direct = DensityOperator::from_pure(&psi.apply_annihilation(&a).unwrap());
        let mapped = DensityOperator::from_pure(&psi)
            .map_kets(psi.register(), 4, |k| k.apply_annihilation(&a))
            .unwrap();
        for (k, b, v) in direct.entries() {
            assert!((mapped.entry(k, b) - v).norm() < 1e-15);
        }
        assert_eq!(direct.len(), mapped.len());
    }
}
