use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Partition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeLabel {
    /// Required truth values; unlisted propositions are unconstrained.
    Props(BTreeMap<String, bool>),
    /// Taken when no other edge of the state matches.
    Else(ElseTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElseTag {
    Else,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: usize,
    pub label: EdgeLabel,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfaSpec {
    pub ap: Vec<String>,
    pub states: usize,
    pub initial: usize,
    pub accepting: Vec<usize>,
    pub edges: Vec<EdgeSpec>,
}

/// Deterministic automaton over label sets, with a total transition table
/// indexed by bitmasks over `ap`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dfa {
    ap: Vec<String>,
    n_states: usize,
    initial: usize,
    accepting: Vec<bool>,
    table: Vec<u32>,
}

const MAX_AP: usize = 16;

impl Dfa {
    pub fn from_spec(spec: &DfaSpec) -> Result<Self> {
        let k = spec.ap.len();
        if k > MAX_AP {
            return Err(Error::Config(format!("at most {MAX_AP} propositions per automaton")));
        }
        if spec.states == 0 || spec.initial >= spec.states {
            return Err(Error::Config("automaton needs a valid initial state".into()));
        }
        let mut accepting = vec![false; spec.states];
        for &z in &spec.accepting {
            *accepting.get_mut(z).ok_or_else(|| Error::Config(format!("accepting state {z} out of range")))? = true;
        }
        // (state, care mask, value mask, target); else edges separately
        let mut guarded = Vec::new();
        let mut fallback = vec![None; spec.states];
        for e in &spec.edges {
            if e.from >= spec.states || e.to >= spec.states {
                return Err(Error::Config(format!("edge {} -> {} out of range", e.from, e.to)));
            }
            match &e.label {
                EdgeLabel::Else(_) => fallback[e.from] = Some(e.to),
                EdgeLabel::Props(m) => {
                    let (mut care, mut val) = (0u32, 0u32);
                    for (p, v) in m {
                        let i = spec.ap.iter().position(|a| a == p).ok_or_else(|| Error::UnknownProposition(p.clone()))?;
                        care |= 1 << i;
                        if *v {
                            val |= 1 << i;
                        }
                    }
                    guarded.push((e.from, care, val, e.to));
                }
            }
        }
        let width = 1usize << k;
        let mut table = vec![0u32; spec.states * width];
        for z in 0..spec.states {
            for m in 0..width as u32 {
                let mut hit: Option<usize> = None;
                for &(from, care, val, to) in &guarded {
                    if from == z && m & care == val {
                        if hit.is_some_and(|h| h != to) {
                            return Err(Error::NondeterministicEdge { state: z, label: mask_names(&spec.ap, m) });
                        }
                        hit = Some(to);
                    }
                }
                let to = hit.or(fallback[z]).ok_or_else(|| Error::IncompleteTransition { state: z, label: mask_names(&spec.ap, m) })?;
                table[z * width + m as usize] = to as u32;
            }
        }
        Ok(Dfa { ap: spec.ap.clone(), n_states: spec.states, initial: spec.initial, accepting, table })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DfaSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn ap(&self) -> &[String] {
        &self.ap
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, z: usize) -> bool {
        self.accepting[z]
    }

    pub fn step(&self, z: usize, mask: u32) -> usize {
        self.table[(z << self.ap.len()) + mask as usize] as usize
    }

    /// Bitmask of a set of proposition names.
    pub fn mask_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<u32> {
        labels.iter().try_fold(0u32, |m, l| {
            let l = l.as_ref();
            let i = self.ap.iter().position(|a| a == l).ok_or_else(|| Error::UnknownProposition(l.to_string()))?;
            Ok(m | 1 << i)
        })
    }

    /// Run on a trace of label sets. Acceptance latches on the first visit
    /// to an accepting state.
    pub fn run<S: AsRef<str>>(&self, trace: &[Vec<S>]) -> Result<(usize, bool)> {
        let mut z = self.initial;
        let mut acc = self.accepting[z];
        for labels in trace {
            z = self.step(z, self.mask_of(labels)?);
            acc |= self.accepting[z];
        }
        Ok((z, acc))
    }

    /// Automaton labels of every partition state. Map labels outside the
    /// alphabet are not observed; alphabet entries absent from the map are
    /// rejected as likely typos.
    pub fn state_labels(&self, p: &Partition) -> Result<Vec<u32>> {
        if let Some(missing) = self.ap.iter().find(|a| !p.props().contains(a)) {
            return Err(Error::UnknownProposition(missing.clone()));
        }
        let conv: Vec<Option<usize>> = p.props().iter().map(|name| self.ap.iter().position(|a| a == name)).collect();
        Ok((0..p.n_states())
            .map(|s| {
                let m = p.label(s);
                conv.iter().enumerate().fold(0u32, |out, (i, c)| match c {
                    Some(j) if m >> i & 1 == 1 => out | 1 << j,
                    _ => out,
                })
            })
            .collect())
    }

    /// States from which every continuation stays out of the accepting set.
    pub fn rejecting_sinks(&self) -> Vec<bool> {
        let width = 1usize << self.ap.len();
        let mut can_accept = self.accepting.clone();
        loop {
            let mut changed = false;
            for z in 0..self.n_states {
                if !can_accept[z] && (0..width).any(|m| can_accept[self.table[z * width + m] as usize]) {
                    can_accept[z] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        can_accept.iter().map(|c| !c).collect()
    }
}

fn mask_names(ap: &[String], m: u32) -> Vec<String> {
    ap.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, a)| a.clone()).collect()
}

fn props(pairs: &[(&str, bool)]) -> EdgeLabel {
    EdgeLabel::Props(pairs.iter().map(|(p, v)| (p.to_string(), *v)).collect())
}

fn edge(from: usize, label: EdgeLabel, to: usize) -> EdgeSpec {
    EdgeSpec { from, label, to }
}

/// Counter automaton accepting once `k + 1` consecutive labels avoid
/// `unsafe`: states `0..=k` count safe labels read, `k + 1` accepts, `k + 2`
/// is the trap.
pub fn bounded_safety_spec(k: usize) -> DfaSpec {
    let acc = k + 1;
    let trap = k + 2;
    let mut edges = Vec::new();
    for c in 0..=k {
        edges.push(edge(c, props(&[("unsafe", true)]), trap));
        edges.push(edge(c, EdgeLabel::Else(ElseTag::Else), if c == k { acc } else { c + 1 }));
    }
    edges.push(edge(acc, EdgeLabel::Else(ElseTag::Else), acc));
    edges.push(edge(trap, EdgeLabel::Else(ElseTag::Else), trap));
    DfaSpec { ap: vec!["unsafe".into()], states: k + 3, initial: 0, accepting: vec![acc], edges }
}

pub const REACH_AVOID: &str = include_str!("../../specs/reach_avoid.json");
pub const WATER_CARPET_CHARGE: &str = include_str!("../../specs/water_carpet_charge.json");
pub const BOUNDED_SAFETY_15: &str = include_str!("../../specs/bounded_safety_15.json");
pub const SAFETY: &str = include_str!("../../specs/safety.json");
pub const TRIVIAL: &str = include_str!("../../specs/trivial.json");

/// Bundled automata by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "reach-avoid" | "phi1" => Some(REACH_AVOID),
        "water-carpet-charge" | "phi2" => Some(WATER_CARPET_CHARGE),
        "bounded-safety-15" | "phi3" => Some(BOUNDED_SAFETY_15),
        "safety" => Some(SAFETY),
        "true" | "trivial" => Some(TRIVIAL),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(d: &Dfa, trace: &[&[&str]]) -> (usize, bool) {
        let t: Vec<Vec<&str>> = trace.iter().map(|l| l.to_vec()).collect();
        d.run(&t).unwrap()
    }

    #[test]
    fn reach_avoid_runs() {
        let d = Dfa::from_json(REACH_AVOID).unwrap();
        assert_eq!(d.n_states(), 3);
        assert_eq!(run(&d, &[]), (0, false));
        assert!(run(&d, &[&[], &["goal"]]).1);
        assert!(!run(&d, &[&["unsafe"], &["goal"]]).1);
        assert!(matches!(d.run(&[vec!["lava"]]), Err(Error::UnknownProposition(_))));
    }

    #[test]
    fn trivial_accepts_everything() {
        let d = Dfa::from_json(TRIVIAL).unwrap();
        assert_eq!(d.n_states(), 1);
        assert!(run(&d, &[]).1);
        assert!(run(&d, &[&["unsafe"]]).1);
    }

    #[test]
    fn bundled_counter_matches_generator() {
        let d = Dfa::from_json(BOUNDED_SAFETY_15).unwrap();
        let g = Dfa::from_spec(&bounded_safety_spec(15)).unwrap();
        assert_eq!(d, g);
        assert_eq!(d.n_states(), 18);
    }

    #[test]
    fn missing_edge_and_overlap_are_rejected() {
        let spec = DfaSpec {
            ap: vec!["a".into(), "b".into()],
            states: 2,
            initial: 0,
            accepting: vec![1],
            edges: vec![edge(0, props(&[("a", true)]), 1), edge(1, EdgeLabel::Else(ElseTag::Else), 1)],
        };
        assert!(matches!(Dfa::from_spec(&spec), Err(Error::IncompleteTransition { state: 0, .. })));
        let mut spec2 = spec.clone();
        spec2.edges.push(edge(0, props(&[("b", true)]), 0));
        spec2.edges.push(edge(0, EdgeLabel::Else(ElseTag::Else), 0));
        assert!(matches!(Dfa::from_spec(&spec2), Err(Error::NondeterministicEdge { state: 0, .. })));
    }

    #[test]
    fn json_label_forms_parse() {
        let text = r#"{"ap":["goal","unsafe"],"states":2,"initial":0,"accepting":[1],
            "edges":[{"from":0,"label":{"goal":true},"to":1},{"from":0,"label":"else","to":0},
                     {"from":1,"label":"else","to":1}]}"#;
        let d = Dfa::from_json(text).unwrap();
        assert_eq!(d.step(0, 0b01), 1);
        assert_eq!(d.step(0, 0b10), 0);
    }
}
