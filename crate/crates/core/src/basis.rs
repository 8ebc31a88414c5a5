//! Uncoupled product basis `|N M_N⟩|M_I1 M_I2⟩` split into blocks of fixed
//! total projection `M_F` and rotational parity.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::angmom::HalfInt;
use crate::error::{CrmError, Result};
use crate::molecule::MoleculeSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub n: HalfInt,
    pub m_n: HalfInt,
    pub m_i1: HalfInt,
    pub m_i2: HalfInt,
}

impl BasisState {
    pub fn new(n: i32, m_n: i32, m_i1: HalfInt, m_i2: HalfInt) -> Self {
        BasisState {
            n: HalfInt::from_int(n),
            m_n: HalfInt::from_int(m_n),
            m_i1,
            m_i2,
        }
    }

    pub fn m_f(&self) -> HalfInt {
        self.m_n + self.m_i1 + self.m_i2
    }

    pub fn rotor(&self) -> RotorLabel {
        RotorLabel {
            n: self.n,
            m_n: self.m_n,
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{} {}; {} {}>", self.n, self.m_n, self.m_i1, self.m_i2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: u32) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn first_n(self) -> u32 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// A rotational label `(N, M_N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RotorLabel {
    pub n: HalfInt,
    pub m_n: HalfInt,
}

impl fmt::Display for RotorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.m_n)
    }
}

#[derive(Clone, Debug)]
pub struct SymmetryBlock {
    m_f: HalfInt,
    parity: Parity,
    n_max: u32,
    spins: (HalfInt, HalfInt),
    states: Vec<BasisState>,
    index_of: HashMap<BasisState, usize>,
}

impl SymmetryBlock {
    pub fn m_f(&self) -> HalfInt {
        self.m_f
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn spins(&self) -> (HalfInt, HalfInt) {
        self.spins
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index_of.get(state).copied()
    }

    /// Index of the spin configuration `(M_I1, M_I2)` in the full
    /// `(2I1+1)(2I2+1)` bath space, ordered like the basis.
    pub fn bath_index(&self, state: &BasisState) -> usize {
        let (i1, i2) = self.spins;
        let a = ((state.m_i1.twice() + i1.twice()) / 2) as usize;
        let b = ((state.m_i2.twice() + i2.twice()) / 2) as usize;
        a * (i2.twice() + 1) as usize + b
    }

    pub fn bath_dimension(&self) -> usize {
        ((self.spins.0.twice() + 1) * (self.spins.1.twice() + 1)) as usize
    }
}

fn enumerate(spins: (HalfInt, HalfInt), n_max: u32, parity: Parity, m_f: HalfInt) -> Vec<BasisState> {
    let mut states = Vec::new();
    for n in (parity.first_n()..=n_max).step_by(2) {
        let n = HalfInt::from_int(n as i32);
        for m_n in n.projections() {
            for m_i1 in spins.0.projections() {
                let m_i2 = m_f - m_n - m_i1;
                if spins.1.admits(m_i2) {
                    states.push(BasisState { n, m_n, m_i1, m_i2 });
                }
            }
        }
    }
    states
}

/// Builds the `(M_F, parity)` block of the product basis truncated at `n_max`.
pub fn build_block(spec: &MoleculeSpec, n_max: u32, m_f: HalfInt, parity: Parity) -> Result<SymmetryBlock> {
    let spins = spec.spins();
    let bound = HalfInt::from_int(n_max as i32) + spins.0 + spins.1;
    let integral_mismatch = (m_f.twice() - bound.twice()) % 2 != 0;
    if m_f.abs() > bound || integral_mismatch {
        return Err(CrmError::UnreachableProjection {
            m_f: m_f.to_string(),
            n_max,
            bound: bound.to_string(),
        });
    }
    let states = enumerate(spins, n_max, parity, m_f);
    let index_of = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(SymmetryBlock {
        m_f,
        parity,
        n_max,
        spins,
        states,
        index_of,
    })
}

/// Every non-empty `(M_F, parity)` block for the given truncation.
pub fn all_blocks(spec: &MoleculeSpec, n_max: u32) -> Vec<SymmetryBlock> {
    let (i1, i2) = spec.spins();
    let bound = HalfInt::from_int(n_max as i32) + i1 + i2;
    let mut blocks = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        for m_f in bound.projections() {
            let block = build_block(spec, n_max, m_f, parity).expect("projection is reachable");
            if !block.is_empty() {
                blocks.push(block);
            }
        }
    }
    blocks
}

/// Rotational labels present in a block, with the basis indices that share each.
#[derive(Clone, Debug)]
pub struct LabelPartition {
    pub labels: Vec<RotorLabel>,
    pub members: Vec<Vec<usize>>,
    /// Label index of every basis state.
    pub label_of: Vec<usize>,
}

pub fn rotational_labels(block: &SymmetryBlock) -> LabelPartition {
    let mut labels: Vec<RotorLabel> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut label_of = Vec::with_capacity(block.dim());
    // states are sorted by (N, M_N) first, so equal labels are contiguous
    for (i, state) in block.states().iter().enumerate() {
        let label = state.rotor();
        if labels.last() != Some(&label) {
            labels.push(label);
            members.push(Vec::new());
        }
        members.last_mut().expect("pushed above").push(i);
        label_of.push(labels.len() - 1);
    }
    LabelPartition {
        labels,
        members,
        label_of,
    }
}
