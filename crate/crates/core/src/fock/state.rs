use std::collections::BTreeMap;

use num_complex::Complex64;

use super::register::{ModeLabel, Occupation, Register};
use super::{binomial, factorial, FockError, Result, AMPLITUDE_TOLERANCE, NORM_TOLERANCE};

/// Whether a creation operator may push a term past the photon cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// Terms above the cap are dropped and their weight is recorded.
    Enforce,
    /// The cap is ignored for this call.
    Disabled,
}

/// Sparse superposition `Σ amp(n) |n⟩` over one register.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    register: Register,
    max_photons: u32,
    amps: BTreeMap<Occupation, Complex64>,
    dropped: f64,
}

impl PureState {
    pub fn vacuum(register: Register, max_photons: u32) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(Occupation::vacuum(register.len()), Complex64::new(1.0, 0.0));
        PureState {
            register,
            max_photons,
            amps,
            dropped: 0.0,
        }
    }

    /// The zero vector over a register.
    pub fn zero(register: Register, max_photons: u32) -> Self {
        PureState {
            register,
            max_photons,
            amps: BTreeMap::new(),
            dropped: 0.0,
        }
    }

    /// Single Fock basis state with the listed modes occupied.
    pub fn fock(register: Register, max_photons: u32, occupied: &[(&str, u8)]) -> Result<Self> {
        let mut occ = Occupation::vacuum(register.len());
        for (name, n) in occupied {
            let i = register.index_of(&ModeLabel::new(name))?;
            occ.set(i, *n);
        }
        if occ.total() > max_photons {
            return Err(FockError::ExceedsCap {
                total: occ.total(),
                cap: max_photons,
            });
        }
        let mut amps = BTreeMap::new();
        amps.insert(occ, Complex64::new(1.0, 0.0));
        Ok(PureState {
            register,
            max_photons,
            amps,
            dropped: 0.0,
        })
    }

    /// Build from explicit terms; repeated occupations are summed.
    pub fn from_terms<I>(register: Register, max_photons: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, Complex64)>,
    {
        let mut amps = BTreeMap::new();
        for (counts, amp) in terms {
            if counts.len() != register.len() {
                return Err(FockError::OccupationLength {
                    expected: register.len(),
                    got: counts.len(),
                });
            }
            let occ = Occupation::from_counts(&counts);
            if occ.total() > max_photons {
                return Err(FockError::ExceedsCap {
                    total: occ.total(),
                    cap: max_photons,
                });
            }
            *amps.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        Ok(Self::from_map(register, max_photons, amps, 0.0))
    }

    pub(crate) fn from_map(
        register: Register,
        max_photons: u32,
        mut amps: BTreeMap<Occupation, Complex64>,
        dropped: f64,
    ) -> Self {
        amps.retain(|_, a| a.norm() > AMPLITUDE_TOLERANCE);
        PureState {
            register,
            max_photons,
            amps,
            dropped,
        }
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn max_photons(&self) -> u32 {
        self.max_photons
    }

    /// Squared norm accumulated from terms removed by the photon cap.
    pub fn dropped_weight(&self) -> f64 {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    /// Terms in canonical (lexicographic) basis order.
    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amps.iter()
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.amps.get(occ).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= AMPLITUDE_TOLERANCE {
            return Err(FockError::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let amps = self.amps.iter().map(|(k, a)| (k.clone(), a * c)).collect();
        Self::from_map(
            self.register.clone(),
            self.max_photons,
            amps,
            self.dropped * c.norm_sqr(),
        )
    }

    /// Same vector with a different photon cap; terms above the new cap are dropped.
    pub fn with_max_photons(&self, max_photons: u32) -> Self {
        let mut dropped = self.dropped;
        let mut amps = BTreeMap::new();
        for (k, a) in &self.amps {
            if k.total() > max_photons {
                dropped += a.norm_sqr();
            } else {
                amps.insert(k.clone(), *a);
            }
        }
        PureState {
            register: self.register.clone(),
            max_photons,
            amps,
            dropped,
        }
    }

    fn check_same_register(&self, other: &PureState) -> Result<()> {
        if self.register != other.register {
            return Err(FockError::RegisterMismatch(format!(
                "{} vs {}",
                self.register, other.register
            )));
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        self.check_same_register(other)?;
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in &small.amps {
            if let Some(b) = large.amps.get(k) {
                acc += if conj_small {
                    a.conj() * b
                } else {
                    b.conj() * a
                };
            }
        }
        Ok(acc)
    }

    /// Vector sum `self + other`.
    pub fn add(&self, other: &PureState) -> Result<Self> {
        self.check_same_register(other)?;
        let mut amps = self.amps.clone();
        for (k, a) in &other.amps {
            *amps.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        Ok(Self::from_map(
            self.register.clone(),
            self.max_photons.max(other.max_photons),
            amps,
            self.dropped + other.dropped,
        ))
    }

    pub fn apply_creation(&self, mode: &ModeLabel) -> Result<Self> {
        self.apply_creation_with(mode, Truncation::Enforce)
    }

    /// `a† |ψ⟩`; each term gains a factor `√(n+1)`.
    pub fn apply_creation_with(&self, mode: &ModeLabel, truncation: Truncation) -> Result<Self> {
        let i = self.register.index_of(mode)?;
        let mut dropped = self.dropped;
        let mut amps = BTreeMap::new();
        let mut max_photons = self.max_photons;
        for (k, a) in &self.amps {
            let n = k.get(i);
            let amp = a * ((n as f64) + 1.0).sqrt();
            if k.total() + 1 > self.max_photons && truncation == Truncation::Enforce {
                dropped += amp.norm_sqr();
                continue;
            }
            max_photons = max_photons.max(k.total() + 1);
            amps.insert(k.with(i, n + 1), amp);
        }
        Ok(Self::from_map(
            self.register.clone(),
            max_photons,
            amps,
            dropped,
        ))
    }

    /// `a |ψ⟩`; each term gains a factor `√n`, vacuum terms vanish.
    pub fn apply_annihilation(&self, mode: &ModeLabel) -> Result<Self> {
        let i = self.register.index_of(mode)?;
        let mut amps = BTreeMap::new();
        for (k, a) in &self.amps {
            let n = k.get(i);
            if n == 0 {
                continue;
            }
            amps.insert(k.with(i, n - 1), a * (n as f64).sqrt());
        }
        Ok(Self::from_map(
            self.register.clone(),
            self.max_photons,
            amps,
            self.dropped,
        ))
    }

    /// Beamsplitter-type rotation acting on creation operators as
    /// `m1† → cosθ m1† + e^{iφ} sinθ m2†`, `m2† → −e^{−iφ} sinθ m1† + cosθ m2†`.
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

    /// General linear map on two modes: column `j` of `u` is the image of
    /// the creation operator of mode `j` (`u[row][col]`, rows = (m1, m2)).
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
        let mut amps: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (k, a) in &self.amps {
            for (p, q, c) in passive_image(k.get(i) as u32, k.get(j) as u32, &u) {
                let mut occ = k.clone();
                occ.set(i, p as u8);
                occ.set(j, q as u8);
                *amps.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += a * c;
            }
        }
        Ok(Self::from_map(
            self.register.clone(),
            self.max_photons,
            amps,
            self.dropped,
        ))
    }

    /// Exchange the contents of two modes.
    pub fn swap_modes(&self, m1: &ModeLabel, m2: &ModeLabel) -> Result<Self> {
        if m1 == m2 {
            return Err(FockError::SameMode(m1.to_string()));
        }
        let i = self.register.index_of(m1)?;
        let j = self.register.index_of(m2)?;
        let amps = self
            .amps
            .iter()
            .map(|(k, a)| {
                let mut occ = k.clone();
                occ.set(i, k.get(j));
                occ.set(j, k.get(i));
                (occ, *a)
            })
            .collect();
        Ok(Self::from_map(
            self.register.clone(),
            self.max_photons,
            amps,
            self.dropped,
        ))
    }

    /// Product state over the concatenated register.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let register = self.register.concat(&other.register)?;
        let max_photons = self.max_photons + other.max_photons;
        let mut amps = BTreeMap::new();
        for (ka, a) in &self.amps {
            for (kb, b) in &other.amps {
                amps.insert(ka.concat(kb), a * b);
            }
        }
        Ok(Self::from_map(
            register,
            max_photons,
            amps,
            self.dropped + other.dropped,
        ))
    }

    /// Append fresh vacuum modes to the register.
    pub fn with_vacuum_modes(&self, modes: &[ModeLabel]) -> Result<Self> {
        let extra = Register::new(modes.iter().cloned())?;
        let register = self.register.concat(&extra)?;
        let amps = self
            .amps
            .iter()
            .map(|(k, a)| (k.extended(modes.len()), *a))
            .collect();
        Ok(PureState {
            register,
            max_photons: self.max_photons,
            amps,
            dropped: self.dropped,
        })
    }

    /// Partial inner product `⟨bra|_S |ψ⟩` over the modes `S` of `bra`;
    /// the result lives on the remaining modes.
    pub fn contract(&self, bra: &PureState) -> Result<Self> {
        let idx = self.register.indices_of(bra.register.modes())?;
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        let rest = self.register.without_indices(&sorted);
        let mut amps: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (k, a) in &self.amps {
            let (keep, _) = k.split(&sorted);
            let sub = k.pick(&idx);
            let b = bra.amplitude(&sub);
            if b.norm() == 0.0 {
                continue;
            }
            *amps.entry(keep).or_insert(Complex64::new(0.0, 0.0)) += b.conj() * a;
        }
        Ok(Self::from_map(rest, self.max_photons, amps, 0.0))
    }

    /// Orthogonal projection onto the terms accepted by `keep`.
    pub fn filter<F>(&self, keep: F) -> Self
    where
        F: Fn(&Occupation) -> bool,
    {
        let amps = self
            .amps
            .iter()
            .filter(|(k, _)| keep(k))
            .map(|(k, a)| (k.clone(), *a))
            .collect();
        PureState {
            register: self.register.clone(),
            max_photons: self.max_photons,
            amps,
            dropped: 0.0,
        }
    }

    /// Occupation of one mode for every stored term.
    pub fn count_of(&self, occ: &Occupation, mode: &ModeLabel) -> Result<u8> {
        Ok(occ.get(self.register.index_of(mode)?))
    }
}

/// Image of `|p,q⟩` under the two-mode linear map `u`, as `(p', q', coeff)`.
pub(crate) fn passive_image(
    n1: u32,
    n2: u32,
    u: &[[Complex64; 2]; 2],
) -> Vec<(u32, u32, Complex64)> {
    let norm_in = (factorial(n1) * factorial(n2)).sqrt();
    let total = n1 + n2;
    let mut acc = vec![Complex64::new(0.0, 0.0); (total + 1) as usize];
    for j in 0..=n1 {
        let cj = binomial(n1, j) * u[0][0].powu(j) * u[1][0].powu(n1 - j);
        for k in 0..=n2 {
            let ck = binomial(n2, k) * u[0][1].powu(k) * u[1][1].powu(n2 - k);
            acc[(j + k) as usize] += cj * ck;
        }
    }
    acc.into_iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(p, c)| {
            let p = p as u32;
            let q = total - p;
            (p, q, c * (factorial(p) * factorial(q)).sqrt() / norm_in)
        })
        .collect()
}
