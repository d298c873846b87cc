//! Sample-based UMDP abstraction of a partitioned system.

pub mod bounds;
mod build;
mod io;

pub use bounds::{BlockBound, BoundsStore, BoundsView, StateBound, TransitionBounds, NO_BLOCK};
pub use build::{build_abstraction, empirical_counts, pair_counts, PairCounts};
pub use io::{AbstractionFile, EntryRecord};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// State, block and mass-budget constraints.
    Full,
    /// State intervals plus the mass budget; no blocks.
    SupportOnlyImdp,
    /// State intervals only, with the Hoeffding width on every successor.
    NaiveImdp,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" | "umdp" => Ok(Mode::Full),
            "support-only-imdp" | "support-only" => Ok(Mode::SupportOnlyImdp),
            "naive-imdp" | "naive" => Ok(Mode::NaiveImdp),
            _ => Err(format!("unknown abstraction mode `{s}`")),
        }
    }
}

/// Two-sided Hoeffding half-width for `n` samples at confidence `1 - beta`.
pub fn hoeffding_eps(beta: f64, n: usize) -> f64 {
    ((2.0 / beta).ln() / (2.0 * n as f64)).sqrt()
}

/// Sample count from the closed-form sample-complexity bound, evaluated
/// literally as `max{ln((n/α)/(2ε²)), ln((n/α)/ln(1/(1-ε_c)))}`.
pub fn sample_complexity_closed_form(alpha: f64, eps: f64, eps_c: f64, n_learn: u64) -> f64 {
    let r = n_learn as f64 / alpha;
    (r / (2.0 * eps * eps)).ln().max((r / (1.0 / (1.0 - eps_c)).ln()).ln())
}

/// Samples that make every interval `eps` wide and the support hold with
/// `eps_c`, when `alpha` is split evenly over `n_learn` events.
pub fn sufficient_samples(alpha: f64, eps: f64, eps_c: f64, n_learn: u64) -> u64 {
    let beta = alpha / n_learn as f64;
    let hoeffding = (2.0 / beta).ln() / (2.0 * eps * eps);
    let support = (1.0 / beta).ln() / (1.0 / (1.0 - eps_c)).ln();
    hoeffding.max(support).ceil() as u64
}

/// Confidence accounting of one abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceLedger {
    pub alpha: f64,
    pub beta: f64,
    pub beta_c: f64,
    pub n_learn: u64,
    pub eps: f64,
    pub eps_c: f64,
    pub n_samples: usize,
}

impl ConfidenceLedger {
    pub fn new(alpha: f64, beta_c: f64, eps_c: f64, n_learn: u64, n_samples: usize) -> Self {
        let beta = if n_learn > 1 { (alpha - beta_c) / (n_learn - 1) as f64 } else { alpha - beta_c };
        ConfidenceLedger { alpha, beta, beta_c, n_learn, eps: hoeffding_eps(beta, n_samples), eps_c, n_samples }
    }

    /// `β_c + (n_learn - 1) β`.
    pub fn recomputed_alpha(&self) -> f64 {
        self.beta_c + (self.n_learn - 1) as f64 * self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbstractionParams {
    pub mode: Mode,
    pub alpha: f64,
    pub beta_c: f64,
    pub eps_c: f64,
}

/// Finite UMDP over the partition states; the last state is the absorbing
/// unsafe sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct UmdpAbstraction {
    pub mode: Mode,
    pub bounds: BoundsStore,
    pub ledger: ConfidenceLedger,
    /// `(|C(s,a)|, |Q(s,a)|)` for every safe pair in `s * n_actions + a` order.
    pub learned: Vec<(u32, u32)>,
    /// Global block id of every state.
    pub block_of: Vec<u32>,
    pub support_radius: f64,
}

impl UmdpAbstraction {
    pub fn n_states(&self) -> usize {
        self.bounds.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.bounds.n_actions
    }

    pub fn unsafe_index(&self) -> usize {
        self.n_states() - 1
    }

    pub fn get(&self, s: usize, a: usize) -> BoundsView<'_> {
        self.bounds.get(s, a)
    }

    pub fn confidence_ledger(&self) -> ConfidenceLedger {
        self.ledger
    }

    /// `1 + Σ (|C| + |Q|)` recomputed from the stored sizes.
    pub fn n_learn(&self) -> u64 {
        1 + self.learned.iter().map(|&(c, q)| c as u64 + q as u64).sum::<u64>()
    }
}
