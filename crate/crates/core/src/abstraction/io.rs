use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bounds::{BlockBound, BoundsStore, StateBound, TransitionBounds, NO_BLOCK};
use super::{ConfidenceLedger, Mode, UmdpAbstraction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub s: usize,
    pub a: usize,
    pub state_bounds: Vec<(u32, f64, f64)>,
    pub block_bounds: Vec<(u32, f64, f64)>,
    pub eps_c: Option<f64>,
    #[serde(default)]
    pub default_upper: f64,
}

/// On-disk form of an abstraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractionFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub mode: Mode,
    pub ledger: ConfidenceLedger,
    pub learned: Vec<(u32, u32)>,
    pub block_of: Vec<u32>,
    pub support_radius: f64,
    pub entries: Vec<EntryRecord>,
}

impl UmdpAbstraction {
    pub fn to_file(&self) -> AbstractionFile {
        let mut entries = Vec::with_capacity(self.n_states() * self.n_actions());
        for s in 0..self.n_states() {
            for a in 0..self.n_actions() {
                let v = self.get(s, a);
                entries.push(EntryRecord {
                    s,
                    a,
                    state_bounds: v.states.iter().map(|e| (e.state, e.lo, e.hi)).collect(),
                    block_bounds: v.blocks.iter().map(|b| (b.block, b.lo, b.hi)).collect(),
                    eps_c: v.mass_budget,
                    default_upper: v.default_upper,
                });
            }
        }
        AbstractionFile {
            n_states: self.n_states(),
            n_actions: self.n_actions(),
            mode: self.mode,
            ledger: self.ledger,
            learned: self.learned.clone(),
            block_of: self.block_of.clone(),
            support_radius: self.support_radius,
            entries,
        }
    }

    pub fn from_file(f: AbstractionFile) -> Result<Self> {
        let (n, m) = (f.n_states, f.n_actions);
        if f.entries.len() != n * m || f.block_of.len() != n {
            return Err(Error::Parse(format!("expected {} entries and {} block ids", n * m, n)));
        }
        let mut sets = vec![TransitionBounds::default(); n * m];
        for e in f.entries {
            if e.s >= n || e.a >= m {
                return Err(Error::Parse(format!("entry ({}, {}) out of range", e.s, e.a)));
            }
            let blocks: Vec<BlockBound> = e.block_bounds.iter().map(|&(block, lo, hi)| BlockBound { block, lo, hi }).collect();
            let mut states = Vec::with_capacity(e.state_bounds.len());
            for &(state, lo, hi) in &e.state_bounds {
                let g = *f.block_of.get(state as usize).ok_or_else(|| Error::Parse(format!("state {state} out of range")))?;
                let block = blocks.iter().position(|b| b.block == g).map(|k| k as u32).unwrap_or(NO_BLOCK);
                states.push(StateBound { state, block, lo, hi });
            }
            sets[e.s * m + e.a] = TransitionBounds { states, blocks, mass_budget: e.eps_c, default_upper: e.default_upper };
        }
        Ok(UmdpAbstraction {
            mode: f.mode,
            bounds: BoundsStore::from_sets(n, m, sets),
            ledger: f.ledger,
            learned: f.learned,
            block_of: f.block_of,
            support_radius: f.support_radius,
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(w, &self.to_file())?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let r = std::io::BufReader::new(std::fs::File::open(path)?);
        let f: AbstractionFile = serde_json::from_reader(r)?;
        Self::from_file(f)
    }
}
