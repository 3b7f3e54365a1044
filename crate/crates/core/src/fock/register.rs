use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{FockError, Result};

/// Symbolic name of one bosonic mode, e.g. `aH` or the ancilla `aH'`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct ModeLabel(Arc<str>);

impl ModeLabel {
    pub fn new(name: &str) -> Self {
        ModeLabel(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Label of the loss ancilla paired with this mode.
    pub fn ancilla(&self) -> ModeLabel {
        ModeLabel::new(&format!("{}'", self.0))
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModeLabel {
    fn from(s: &str) -> Self {
        ModeLabel::new(s)
    }
}

impl From<String> for ModeLabel {
    fn from(s: String) -> Self {
        ModeLabel(Arc::from(s))
    }
}

impl From<ModeLabel> for String {
    fn from(m: ModeLabel) -> Self {
        m.0.to_string()
    }
}

impl From<&ModeLabel> for ModeLabel {
    fn from(m: &ModeLabel) -> Self {
        m.clone()
    }
}

/// Ordered set of mode labels. The order fixes the layout of every
/// [`Occupation`] built over the register.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Register {
    modes: Vec<ModeLabel>,
}

impl Register {
    pub fn new<I, M>(modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = M>,
        M: Into<ModeLabel>,
    {
        let modes: Vec<ModeLabel> = modes.into_iter().map(Into::into).collect();
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(FockError::DuplicateMode(m.to_string()));
            }
        }
        Ok(Register { modes })
    }

    pub fn empty() -> Self {
        Register { modes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn contains(&self, mode: &ModeLabel) -> bool {
        self.modes.contains(mode)
    }

    pub fn index_of(&self, mode: &ModeLabel) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == mode)
            .ok_or_else(|| FockError::UnknownMode(mode.to_string()))
    }

    /// Concatenation `self ++ other`; fails on a shared label.
    pub fn concat(&self, other: &Register) -> Result<Register> {
        if let Some(m) = other.modes.iter().find(|m| self.contains(m)) {
            return Err(FockError::RegisterCollision(m.to_string()));
        }
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        Ok(Register { modes })
    }

    /// Register with the modes at `drop` (sorted, unique) removed.
    pub(crate) fn without_indices(&self, drop: &[usize]) -> Register {
        let modes = self
            .modes
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, m)| m.clone())
            .collect();
        Register { modes }
    }

    pub(crate) fn indices_of(&self, modes: &[ModeLabel]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(modes.len());
        for m in modes {
            let i = self.index_of(m)?;
            if out.contains(&i) {
                return Err(FockError::DuplicateMode(m.to_string()));
            }
            out.push(i);
        }
        Ok(out)
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.modes.iter().map(|m| m.as_str()).collect();
        write!(f, "[{}]", names.join(" "))
    }
}

/// Photon counts, one per mode of a register, compared lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Occupation(SmallVec<[u8; 16]>);

impl Occupation {
    pub fn vacuum(len: usize) -> Self {
        Occupation(SmallVec::from_elem(0, len))
    }

    pub fn from_counts(counts: &[u8]) -> Self {
        Occupation(SmallVec::from_slice(counts))
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| n as u32).sum()
    }

    pub(crate) fn with(&self, i: usize, n: u8) -> Self {
        let mut out = self.clone();
        out.0[i] = n;
        out
    }

    pub(crate) fn set(&mut self, i: usize, n: u8) {
        self.0[i] = n;
    }

    pub(crate) fn concat(&self, other: &Occupation) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Occupation(v)
    }

    pub(crate) fn extended(&self, extra: usize) -> Self {
        let mut v = self.0.clone();
        v.extend(std::iter::repeat_n(0, extra));
        Occupation(v)
    }

    /// Split into (kept, selected) parts; `selected` must be sorted.
    pub(crate) fn split(&self, selected: &[usize]) -> (Occupation, Occupation) {
        let mut keep = SmallVec::new();
        let mut sel = SmallVec::new();
        for (i, &n) in self.0.iter().enumerate() {
            if selected.contains(&i) {
                sel.push(n);
            } else {
                keep.push(n);
            }
        }
        (Occupation(keep), Occupation(sel))
    }

    /// Counts at the given indices, in the given order.
    pub(crate) fn pick(&self, idx: &[usize]) -> Occupation {
        Occupation(idx.iter().map(|&i| self.0[i]).collect())
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "|{}>", parts.join(","))
    }
}
