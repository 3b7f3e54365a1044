use std::collections::BTreeMap;

use num_complex::Complex64;

use super::density::DensityOperator;
use super::register::{ModeLabel, Occupation, Register};
use super::state::passive_image;
use super::{FockError, Result};

/// Operator acting on a subset of modes, identity elsewhere.
///
/// Matrix elements are stored over occupations of the subset only.
/// Entries outside the stored photon range are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    modes: Register,
    entries: BTreeMap<(Occupation, Occupation), Complex64>,
}

impl LocalOperator {
    pub fn from_entries<I>(modes: Register, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, Vec<u8>, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (k, b, v) in entries {
            for occ in [&k, &b] {
                if occ.len() != modes.len() {
                    return Err(FockError::OccupationLength {
                        expected: modes.len(),
                        got: occ.len(),
                    });
                }
            }
            *map.entry((Occupation::from_counts(&k), Occupation::from_counts(&b)))
                .or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        Ok(LocalOperator {
            modes,
            entries: map,
        })
    }

    /// Diagonal operator `Σ w(n)|n⟩⟨n|` over all occupations with at most `n_max` photons.
    pub fn diagonal<F>(modes: Register, n_max: u32, weight: F) -> Self
    where
        F: Fn(&[u8]) -> f64,
    {
        let mut entries = BTreeMap::new();
        for occ in occupations_up_to(modes.len(), n_max) {
            let w = weight(occ.counts());
            if w != 0.0 {
                entries.insert((occ.clone(), occ), Complex64::new(w, 0.0));
            }
        }
        LocalOperator { modes, entries }
    }

    /// Two-mode operator `U D U†` where `D` is diagonal in the Fock basis and
    /// `U` is the passive map with creation-operator images given by the
    /// columns of `u` (see `PureState::passive_two_mode`).
    pub fn rotated_diagonal<F>(
        m1: &ModeLabel,
        m2: &ModeLabel,
        n_max: u32,
        u: [[Complex64; 2]; 2],
        weight: F,
    ) -> Result<Self>
    where
        F: Fn(u8, u8) -> f64,
    {
        if m1 == m2 {
            return Err(FockError::SameMode(m1.to_string()));
        }
        let modes = Register::new([m1.clone(), m2.clone()])?;
        let mut entries: BTreeMap<(Occupation, Occupation), Complex64> = BTreeMap::new();
        for total in 0..=n_max {
            for p in 0..=total {
                let q = total - p;
                let w = weight(p as u8, q as u8);
                if w == 0.0 {
                    continue;
                }
                let image = passive_image(p, q, &u);
                for (p1, q1, c1) in &image {
                    for (p2, q2, c2) in &image {
                        let key = (
                            Occupation::from_counts(&[*p1 as u8, *q1 as u8]),
                            Occupation::from_counts(&[*p2 as u8, *q2 as u8]),
                        );
                        *entries.entry(key).or_insert(Complex64::new(0.0, 0.0)) +=
                            c1 * c2.conj() * w;
                    }
                }
            }
        }
        entries.retain(|_, v| v.norm() > 1e-16);
        Ok(LocalOperator { modes, entries })
    }

    pub fn modes(&self) -> &Register {
        &self.modes
    }

    pub fn entry(&self, ket: &Occupation, bra: &Occupation) -> Complex64 {
        self.entries
            .get(&(ket.clone(), bra.clone()))
            .copied()
            .unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Occupation, &Occupation, &Complex64)> {
        self.entries.iter().map(|((k, b), v)| (k, b, v))
    }

    /// `Tr[(op ⊗ I) ρ]`.
    pub fn expectation(&self, rho: &DensityOperator) -> Result<f64> {
        expectation_of_product(&[self], rho)
    }
}

/// `Tr[(op₁ ⊗ op₂ ⊗ … ⊗ I) ρ]` for operators on disjoint mode subsets.
pub fn expectation_of_product(ops: &[&LocalOperator], rho: &DensityOperator) -> Result<f64> {
    let reg = rho.register();
    let mut idx: Vec<Vec<usize>> = Vec::with_capacity(ops.len());
    let mut all: Vec<usize> = Vec::new();
    for op in ops {
        let i = reg.indices_of(op.modes.modes())?;
        for &j in &i {
            if all.contains(&j) {
                return Err(FockError::DuplicateMode(reg.modes()[j].to_string()));
            }
            all.push(j);
        }
        idx.push(i);
    }
    all.sort_unstable();
    let mut acc = Complex64::new(0.0, 0.0);
    'entries: for (k, b, v) in rho.entries() {
        let (kr, _) = k.split(&all);
        let (br, _) = b.split(&all);
        if kr != br {
            continue;
        }
        let mut f = *v;
        for (op, i) in ops.iter().zip(&idx) {
            let c = op.entry(&b.pick(i), &k.pick(i));
            if c.norm() == 0.0 {
                continue 'entries;
            }
            f *= c;
        }
        acc += f;
    }
    Ok(acc.re)
}

/// All occupations of `len` modes with total photon number at most `n_max`, in basis order.
pub fn occupations_up_to(len: usize, n_max: u32) -> Vec<Occupation> {
    fn rec(prefix: &mut Vec<u8>, left: usize, budget: u32, out: &mut Vec<Occupation>) {
        if left == 0 {
            out.push(Occupation::from_counts(prefix));
            return;
        }
        for n in 0..=budget {
            prefix.push(n as u8);
            rec(prefix, left - 1, budget - n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), len, n_max, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PureState;

    #[test]
    fn enumeration_counts() {
        assert_eq!(occupations_up_to(2, 2).len(), 6);
        assert_eq!(occupations_up_to(3, 3).len(), 20);
        let v = occupations_up_to(2, 1);
        assert_eq!(v[0].counts(), &[0, 0]);
        assert_eq!(v[1].counts(), &[0, 1]);
        assert_eq!(v[2].counts(), &[1, 0]);
    }

    #[test]
    fn identity_gives_trace() {
        let r = Register::new(["a", "b"]).unwrap();
        let s = 0.6f64.sqrt();
        let psi = PureState::from_terms(
            r,
            3,
            vec![
                (vec![1, 0], Complex64::new(s, 0.0)),
                (vec![0, 2], Complex64::new(0.0, 0.4f64.sqrt())),
            ],
        )
        .unwrap();
        let rho = DensityOperator::from_pure(&psi);
        let id = LocalOperator::diagonal(Register::new(["b"]).unwrap(), 3, |_| 1.0);
        assert!((id.expectation(&rho).unwrap() - 1.0).abs() < 1e-14);
        let nb = LocalOperator::diagonal(Register::new(["b"]).unwrap(), 3, |n| n[0] as f64);
        assert!((nb.expectation(&rho).unwrap() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn rotated_projector_on_diagonal_photon() {
        let (h, v) = (ModeLabel::new("dH"), ModeLabel::new("dV"));
        let th = std::f64::consts::FRAC_PI_4;
        let u = [
            [
                Complex64::new(th.cos(), 0.0),
                Complex64::new(-th.sin(), 0.0),
            ],
            [Complex64::new(th.sin(), 0.0), Complex64::new(th.cos(), 0.0)],
        ];
        let op =
            LocalOperator::rotated_diagonal(
                &h,
                &v,
                2,
                u,
                |p, q| if p == 1 && q == 0 { 1.0 } else { 0.0 },
            )
            .unwrap();
        let s = 0.5f64.sqrt();
        let reg = Register::new(["dH", "dV"]).unwrap();
        let d = PureState::from_terms(
            reg.clone(),
            2,
            vec![
                (vec![1, 0], Complex64::new(s, 0.0)),
                (vec![0, 1], Complex64::new(s, 0.0)),
            ],
        )
        .unwrap();
        let a = PureState::from_terms(
            reg,
            2,
            vec![
                (vec![1, 0], Complex64::new(s, 0.0)),
                (vec![0, 1], Complex64::new(-s, 0.0)),
            ],
        )
        .unwrap();
        assert!((op.expectation(&DensityOperator::from_pure(&d)).unwrap() - 1.0).abs() < 1e-14);
        assert!(
            op.expectation(&DensityOperator::from_pure(&a))
                .unwrap()
                .abs()
                < 1e-14
        );
    }
}
