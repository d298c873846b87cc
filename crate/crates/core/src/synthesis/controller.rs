//! Stateful controller that tracks the automaton state along a run.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rdp::ValueFunction;
use crate::automata::{Dfa, ProductUmdp};
use crate::error::Result;
use crate::geometry::Partition;

/// Lookup tables indexed by `s * n_z + z`; unreached pairs map to action 0
/// with bound 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyTable {
    pub n_states: usize,
    pub n_z: usize,
    pub action: Vec<u32>,
    pub lower: Vec<f64>,
}

impl StrategyTable {
    pub fn from_product(product: &ProductUmdp<'_>, vf: &ValueFunction) -> Self {
        let n = product.n_base_states();
        let n_z = product.n_dfa_states();
        let mut action = vec![0u32; n * n_z];
        let mut lower = vec![0.0; n * n_z];
        for i in 0..product.n_states() {
            let (s, z) = product.state(i);
            action[s * n_z + z] = vf.strategy[i];
            lower[s * n_z + z] = vf.lower[i];
        }
        StrategyTable { n_states: n, n_z, action, lower }
    }
}

/// Cheap to clone: the lookup data is shared.
#[derive(Debug, Clone)]
pub struct Controller {
    partition: Arc<Partition>,
    dfa: Arc<Dfa>,
    labels: Arc<[u32]>,
    table: Arc<StrategyTable>,
    sinks: Arc<[bool]>,
    s: usize,
    z: usize,
}

impl Controller {
    pub fn new(partition: Partition, dfa: Dfa, table: StrategyTable) -> Result<Self> {
        let labels = dfa.state_labels(&partition)?.into();
        let z = dfa.initial();
        let sinks = dfa.rejecting_sinks().into();
        Ok(Controller { partition: Arc::new(partition), dfa: Arc::new(dfa), labels, table: Arc::new(table), sinks, s: 0, z })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }

    /// Start a run at `x0`; returns the certified lower bound from there.
    pub fn reset(&mut self, x0: &[f64]) -> f64 {
        self.s = self.partition.locate(x0);
        self.z = self.dfa.step(self.dfa.initial(), self.labels[self.s]);
        self.bound()
    }

    pub fn action(&self) -> usize {
        self.table.action[self.s * self.table.n_z + self.z] as usize
    }

    pub fn bound(&self) -> f64 {
        self.table.lower[self.s * self.table.n_z + self.z]
    }

    /// Advance on the next observed state.
    pub fn observe(&mut self, x: &[f64]) {
        self.s = self.partition.locate(x);
        self.z = self.dfa.step(self.z, self.labels[self.s]);
    }

    pub fn cell(&self) -> usize {
        self.s
    }

    pub fn dfa_state(&self) -> usize {
        self.z
    }

    pub fn accepted(&self) -> bool {
        self.dfa.is_accepting(self.z)
    }

    /// The automaton can no longer accept.
    pub fn rejected(&self) -> bool {
        self.sinks[self.z]
    }

    pub fn table(&self) -> &StrategyTable {
        &self.table
    }
}
