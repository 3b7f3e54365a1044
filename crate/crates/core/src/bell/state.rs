use num_complex::Complex64;

use super::{BellSettings, Pattern, Strategy};
use crate::detection::{analyzer_map, DetectorModel, Party, Port, StationEfficiencies};
use crate::error::{Result, SimError};
use crate::fock::{passive_image, DensityOperator, ModeLabel, PureState, TraceMeaning};
use crate::optics::modes;

const TRACE_TOLERANCE: f64 = 1e-9;

/// Joint click-pattern probabilities for one setting pair, indexed `[alice][bob]`
/// in [`Pattern::ALL`] order.
pub type PatternTable = [[f64; 4]; 4];

/// Polarization modes of both parties, kept as blocks of fixed photon
/// number per party.
///
/// The analyzers and detectors of each party conserve its photon number,
/// so coherences between different photon numbers never affect the click
/// statistics and are not stored. Within the block `(n_d, n_e)` each party's
/// states are ordered by `n_V`, and the joint index is `v_d * (n_e + 1) + v_e`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPartyState {
    cap: u32,
    /// Row-major blocks, indexed `n_d * (cap + 1) + n_e`.
    blocks: Vec<Vec<Complex64>>,
}

/// One party's pattern elements, one `(n+1)²` block per photon number `n`.
type PartyPovm = [Vec<Vec<Complex64>>; 4];

fn party_povm(cap: u32, theta: f64, first: &DetectorModel, second: &DetectorModel) -> PartyPovm {
    let u = analyzer_map(theta);
    let mut out: PartyPovm = Default::default();
    for n in 0..=cap {
        let d = n as usize + 1;
        // column v: image of |n − v, v⟩
        let mut rot = vec![Complex64::new(0.0, 0.0); d * d];
        for v in 0..=n {
            for (_, q, c) in passive_image(n - v, v, &u) {
                rot[q as usize * d + v as usize] = c;
            }
        }
        for (pat, slot) in Pattern::ALL.iter().zip(out.iter_mut()) {
            let w: Vec<f64> = (0..=n)
                .map(|v| pat.probability(first.no_click((n - v) as u8), second.no_click(v as u8)))
                .collect();
            let mut q = vec![Complex64::new(0.0, 0.0); d * d];
            for i in 0..d {
                for j in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m in 0..d {
                        acc += rot[i * d + m] * w[m] * rot[j * d + m].conj();
                    }
                    q[i * d + j] = acc;
                }
            }
            slot.push(q);
        }
    }
    out
}

impl TwoPartyState {
    fn empty(cap: u32) -> Self {
        let blocks = (0..=cap as usize)
            .flat_map(|nd| {
                (0..=cap as usize)
                    .map(move |ne| vec![Complex64::new(0.0, 0.0); ((nd + 1) * (ne + 1)).pow(2)])
            })
            .collect();
        TwoPartyState { cap, blocks }
    }

    fn block_mut(&mut self, nd: usize, ne: usize) -> &mut Vec<Complex64> {
        &mut self.blocks[nd * (self.cap as usize + 1) + ne]
    }

    /// Adds `value` at ket `(d, e)`, bra `(d', e')`, given as `(n_H, n_V)`
    /// pairs; off-block entries are dropped.
    pub(crate) fn accumulate(&mut self, ket: [u8; 4], bra: [u8; 4], value: Complex64) {
        let (nd, ne) = ((ket[0] + ket[1]) as usize, (ket[2] + ket[3]) as usize);
        if nd != (bra[0] + bra[1]) as usize || ne != (bra[2] + bra[3]) as usize {
            return;
        }
        let dim = (nd + 1) * (ne + 1);
        let row = ket[1] as usize * (ne + 1) + ket[3] as usize;
        let col = bra[1] as usize * (ne + 1) + bra[3] as usize;
        self.block_mut(nd, ne)[row * dim + col] += value;
    }

    pub(crate) fn with_entries<I>(cap: u32, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ([u8; 4], [u8; 4], Complex64)>,
    {
        let mut s = Self::empty(cap);
        for (k, b, v) in entries {
            s.accumulate(k, b, v);
        }
        s.check_normalized()?;
        Ok(s)
    }

    /// Reduces a density operator to the station modes `dH dV eH eV`,
    /// tracing out every other mode.
    pub fn from_density(rho: &DensityOperator) -> Result<Self> {
        if rho.trace_meaning() != TraceMeaning::Normalized {
            return Err(SimError::Approximation(
                "CHSH evaluation needs a normalized state".into(),
            ));
        }
        let (dh, dv) = Party::D.modes();
        let (eh, ev) = Party::E.modes();
        let keep = [dh, dv, eh, ev];
        let others: Vec<ModeLabel> = rho
            .register()
            .modes()
            .iter()
            .filter(|m| !keep.contains(m))
            .cloned()
            .collect();
        let reduced = rho.partial_trace(&others)?;
        let idx: Vec<usize> = keep
            .iter()
            .map(|m| reduced.register().index_of(m))
            .collect::<std::result::Result<_, _>>()?;
        let pick = |o: &crate::fock::Occupation| {
            [o.get(idx[0]), o.get(idx[1]), o.get(idx[2]), o.get(idx[3])]
        };
        let mut cap = 1u32;
        for (k, b, _) in reduced.entries() {
            for occ in [pick(k), pick(b)] {
                cap = cap
                    .max((occ[0] + occ[1]) as u32)
                    .max((occ[2] + occ[3]) as u32);
            }
        }
        Self::with_entries(
            cap,
            reduced.entries().map(|(k, b, v)| (pick(k), pick(b), *v)),
        )
    }

    fn check_normalized(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(SimError::Approximation(format!(
                "state trace {tr} is not 1"
            )));
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let d = (b.len() as f64).sqrt() as usize;
                (0..d).map(|i| b[i * d + i].re).sum::<f64>()
            })
            .sum()
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Largest entry-wise difference to another state of the same cap.
    pub fn max_difference(&self, other: &TwoPartyState) -> f64 {
        if self.cap != other.cap {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    fn tables_for(
        &self,
        alice: &[f64],
        bob: &[f64],
        eff: &StationEfficiencies,
    ) -> Vec<Vec<PatternTable>> {
        let (dh, dv) = (
            eff.detector(Party::D, Port::H),
            eff.detector(Party::D, Port::V),
        );
        let (eh, ev) = (
            eff.detector(Party::E, Port::H),
            eff.detector(Party::E, Port::V),
        );
        let bob_povms: Vec<PartyPovm> = bob
            .iter()
            .map(|&t| party_povm(self.cap, t, &eh, &ev))
            .collect();
        let c = self.cap as usize;
        alice
            .iter()
            .map(|&ta| {
                let qa = party_povm(self.cap, ta, &dh, &dv);
                let mut tables = vec![[[0.0; 4]; 4]; bob.len()];
                let mut r = Vec::new();
                for nd in 0..=c {
                    let da = nd + 1;
                    for ne in 0..=c {
                        let db = ne + 1;
                        let dim = da * db;
                        let blk = &self.blocks[nd * (c + 1) + ne];
                        if blk.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                            continue;
                        }
                        for (p, qp) in qa.iter().enumerate() {
                            let q = &qp[nd];
                            // r[l][k] = Σ_ij q[i][j] ρ[(j,l),(i,k)]
                            r.clear();
                            r.resize(db * db, Complex64::new(0.0, 0.0));
                            for i in 0..da {
                                for j in 0..da {
                                    let qij = q[i * da + j];
                                    for l in 0..db {
                                        let row = (j * db + l) * dim + i * db;
                                        for k in 0..db {
                                            r[l * db + k] += qij * blk[row + k];
                                        }
                                    }
                                }
                            }
                            for (t, qb) in tables.iter_mut().zip(&bob_povms) {
                                for (qi, qq) in qb.iter().enumerate() {
                                    let m = &qq[ne];
                                    let mut acc = 0.0;
                                    for k in 0..db {
                                        for l in 0..db {
                                            acc += (m[k * db + l] * r[l * db + k]).re;
                                        }
                                    }
                                    t[p][qi] += acc;
                                }
                            }
                        }
                    }
                }
                tables
            })
            .collect()
    }

    /// Joint pattern probabilities at one setting pair.
    pub fn pattern_table(
        &self,
        theta_a: f64,
        theta_b: f64,
        eff: &StationEfficiencies,
    ) -> PatternTable {
        self.tables_for(&[theta_a], &[theta_b], eff)[0][0]
    }

    /// Pattern tables for `(A1,B1), (A2,B1), (A1,B2), (A2,B2)`, then `(A0,B1)` when a key angle is set.
    pub fn chsh_tables(&self, s: &BellSettings, eff: &StationEfficiencies) -> Vec<PatternTable> {
        let mut alice = vec![s.a1, s.a2];
        alice.extend(s.a0);
        let t = self.tables_for(&alice, &[s.b1, s.b2], eff);
        let mut out = vec![t[0][0], t[1][0], t[0][1], t[1][1]];
        if s.a0.is_some() {
            out.push(t[2][0]);
        }
        out
    }

    pub fn chsh(
        &self,
        s: &BellSettings,
        strategies: (Strategy, Strategy),
        eff: &StationEfficiencies,
    ) -> f64 {
        chsh_from_tables(&self.chsh_tables(s, eff), strategies)
    }
}

/// `⟨AB⟩ = Σ a(p) b(q) P(p, q)`.
pub fn correlator(t: &PatternTable, (alice, bob): (Strategy, Strategy)) -> f64 {
    let mut e = 0.0;
    for p in Pattern::ALL {
        for q in Pattern::ALL {
            e += alice.sign(p) * bob.sign(q) * t[p as usize][q as usize];
        }
    }
    e
}

/// `E₁₁ + E₂₁ + E₁₂ − E₂₂` from tables in [`TwoPartyState::chsh_tables`] order.
pub fn chsh_from_tables(t: &[PatternTable], strategies: (Strategy, Strategy)) -> f64 {
    correlator(&t[0], strategies) + correlator(&t[1], strategies) + correlator(&t[2], strategies)
        - correlator(&t[3], strategies)
}

/// `P(+1,−1) + P(−1,+1)` from one table.
pub fn qber_from_table(t: &PatternTable, strategies: (Strategy, Strategy)) -> f64 {
    let total: f64 = t.iter().flatten().sum();
    ((total - correlator(t, strategies)) / 2.0).clamp(0.0, 1.0)
}

/// CHSH value of a normalized heralded state.
pub fn chsh_value(
    rho: &DensityOperator,
    settings: &BellSettings,
    strategies: (Strategy, Strategy),
    eff: &StationEfficiencies,
) -> Result<f64> {
    Ok(TwoPartyState::from_density(rho)?.chsh(settings, strategies, eff))
}

/// Error rate between Alice's key angle and Bob's first angle.
pub fn qber(
    rho: &DensityOperator,
    theta_a0: f64,
    theta_b1: f64,
    strategies: (Strategy, Strategy),
    eff: &StationEfficiencies,
) -> Result<f64> {
    let state = TwoPartyState::from_density(rho)?;
    Ok(qber_from_table(
        &state.pattern_table(theta_a0, theta_b1, eff),
        strategies,
    ))
}

/// `(ρ_SFG + dark · Tr_{a,b}|ψ⟩⟨ψ|) / Tr[…]`: the state after a herald
/// click that is either a converted photon or a dark count.
pub fn heralded_state_with_dark(
    rho_sfg: &DensityOperator,
    psi_in: &PureState,
    dark: f64,
) -> Result<DensityOperator> {
    crate::error::check_nonnegative("dark", dark)?;
    let rest: Vec<ModeLabel> = modes::bsa_inputs()
        .into_iter()
        .filter(|m| psi_in.register().contains(m))
        .collect();
    let accidental = DensityOperator::from_pure(psi_in).partial_trace(&rest)?;
    let total = rho_sfg.add(&accidental.scaled(dark))?;
    if !(total.trace() > 0.0) {
        return Err(SimError::Approximation(
            "herald has zero probability".into(),
        ));
    }
    Ok(total.normalized()?.with_meaning(TraceMeaning::Normalized))
}
