//! Labeled Markov decision processes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum MdpError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TransitionDoc {
    pub from: String,
    pub action: String,
    pub to: String,
    pub prob: f64,
}

/// The on-disk MDP description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MdpDoc {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub initial: BTreeMap<String, f64>,
    pub transitions: Vec<TransitionDoc>,
    pub propositions: Vec<String>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct LabeledMdp {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    /// Initial distribution indexed by state.
    pub initial: Vec<f64>,
    /// `transitions[s][a]` lists `(successor, probability)`; an empty list
    /// means the action is unavailable in `s`.
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    pub propositions: Vec<String>,
    /// Sorted proposition names true in each state.
    pub labels: Vec<Vec<String>>,
}

impl LabeledMdp {
    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        let doc: MdpDoc = serde_json::from_str(text).map_err(|e| MdpError::Parse(e.to_string()))?;
        Self::from_doc(&doc)
    }

    /// Resolves names only; stochasticity and labels are checked by
    /// [`validate_mdp`].
    pub fn from_doc(doc: &MdpDoc) -> Result<Self, MdpError> {
        let states = index_names(&doc.states)?;
        let actions = index_names(&doc.actions)?;
        let state = |n: &str| states.get(n).copied().ok_or_else(|| MdpError::UnknownState(n.into()));

        let mut initial = vec![0.0; doc.states.len()];
        for (name, p) in &doc.initial {
            initial[state(name)?] += p;
        }
        let mut transitions = vec![vec![Vec::new(); doc.actions.len()]; doc.states.len()];
        for t in &doc.transitions {
            let a = actions.get(t.action.as_str()).copied().ok_or_else(|| MdpError::UnknownAction(t.action.clone()))?;
            let row: &mut Vec<(usize, f64)> = &mut transitions[state(&t.from)?][a];
            let to = state(&t.to)?;
            match row.iter_mut().find(|(s, _)| *s == to) {
                Some(entry) => entry.1 += t.prob,
                None => row.push((to, t.prob)),
            }
        }
        let mut labels = vec![Vec::new(); doc.states.len()];
        for (name, props) in &doc.labels {
            let mut props = props.clone();
            props.sort();
            props.dedup();
            labels[state(name)?] = props;
        }
        Ok(LabeledMdp {
            states: doc.states.clone(),
            actions: doc.actions.clone(),
            initial,
            transitions,
            propositions: doc.propositions.clone(),
            labels,
        })
    }

    pub fn to_doc(&self) -> MdpDoc {
        let mut transitions = Vec::new();
        for (s, rows) in self.transitions.iter().enumerate() {
            for (a, row) in rows.iter().enumerate() {
                for &(to, prob) in row {
                    transitions.push(TransitionDoc {
                        from: self.states[s].clone(),
                        action: self.actions[a].clone(),
                        to: self.states[to].clone(),
                        prob,
                    });
                }
            }
        }
        MdpDoc {
            states: self.states.clone(),
            actions: self.actions.clone(),
            initial: self
                .initial
                .iter()
                .enumerate()
                .filter(|(_, p)| **p != 0.0)
                .map(|(s, p)| (self.states[s].clone(), *p))
                .collect(),
            transitions,
            propositions: self.propositions.clone(),
            labels: self
                .labels
                .iter()
                .enumerate()
                .filter(|(_, l)| !l.is_empty())
                .map(|(s, l)| (self.states[s].clone(), l.clone()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("MDP documents always serialize")
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|s| s == name)
    }

    /// `P(to | from, action)`.
    pub fn prob(&self, from: usize, action: usize, to: usize) -> f64 {
        self.transitions[from][action].iter().filter(|(s, _)| *s == to).map(|(_, p)| p).sum()
    }

    pub fn available(&self, s: usize, a: usize) -> bool {
        !self.transitions[s][a].is_empty()
    }
}

fn index_names(names: &[String]) -> Result<HashMap<&str, usize>, MdpError> {
    let mut map = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.as_str(), i).is_some() {
            return Err(MdpError::DuplicateName(n.clone()));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MdpIssue {
    StochasticityViolation { state: String, action: String, sum: f64 },
    NegativeProbability { state: String, action: String, to: String, prob: f64 },
    InitialNotDistribution { sum: f64 },
    NegativeInitial { state: String, prob: f64 },
    UnknownProposition { state: String, proposition: String },
    DeadEnd { state: String },
}

impl fmt::Display for MdpIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MdpIssue::StochasticityViolation { state, action, sum } => {
                write!(f, "StochasticityViolation: P(.|{state},{action}) sums to {sum}")
            }
            MdpIssue::NegativeProbability { state, action, to, prob } => {
                write!(f, "NegativeProbability: P({to}|{state},{action}) = {prob}")
            }
            MdpIssue::InitialNotDistribution { sum } => write!(f, "InitialNotDistribution: sums to {sum}"),
            MdpIssue::NegativeInitial { state, prob } => write!(f, "NegativeInitial: {state} has {prob}"),
            MdpIssue::UnknownProposition { state, proposition } => {
                write!(f, "UnknownProposition: `{proposition}` labels {state}")
            }
            MdpIssue::DeadEnd { state } => write!(f, "DeadEnd: no action available in {state}"),
        }
    }
}

/// Lists every violated model invariant; an empty report means valid.
pub fn validate_mdp(mdp: &LabeledMdp) -> Vec<MdpIssue> {
    let mut issues = Vec::new();
    for (s, rows) in mdp.transitions.iter().enumerate() {
        if rows.iter().all(Vec::is_empty) {
            issues.push(MdpIssue::DeadEnd { state: mdp.states[s].clone() });
        }
        for (a, row) in rows.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            for &(to, prob) in row {
                if prob < 0.0 {
                    issues.push(MdpIssue::NegativeProbability {
                        state: mdp.states[s].clone(),
                        action: mdp.actions[a].clone(),
                        to: mdp.states[to].clone(),
                        prob,
                    });
                }
            }
            let sum: f64 = row.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > 1e-9 {
                issues.push(MdpIssue::StochasticityViolation {
                    state: mdp.states[s].clone(),
                    action: mdp.actions[a].clone(),
                    sum,
                });
            }
        }
    }
    for (s, &p) in mdp.initial.iter().enumerate() {
        if p < 0.0 {
            issues.push(MdpIssue::NegativeInitial { state: mdp.states[s].clone(), prob: p });
        }
    }
    let sum: f64 = mdp.initial.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        issues.push(MdpIssue::InitialNotDistribution { sum });
    }
    for (s, labels) in mdp.labels.iter().enumerate() {
        for p in labels {
            if !mdp.propositions.contains(p) {
                issues.push(MdpIssue::UnknownProposition { state: mdp.states[s].clone(), proposition: p.clone() });
            }
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixtures_are_valid() {
        for m in [fixtures::micro1_mdp(), fixtures::micro2_mdp(), fixtures::micro3_mdp(), fixtures::gridworld_mdp()] {
            assert_eq!(validate_mdp(&m), vec![]);
        }
    }

    #[test]
    fn reports_defects() {
        let mut doc = fixtures::micro1_mdp().to_doc();
        doc.transitions[0].prob = 0.5;
        doc.labels.insert("s0".into(), vec!["Z".into()]);
        let issues = validate_mdp(&LabeledMdp::from_doc(&doc).unwrap());
        assert!(issues.iter().any(|i| matches!(i,
            MdpIssue::StochasticityViolation { state, action, sum } if state == "s0" && action == "a" && (sum - 0.9).abs() < 1e-12)));
        assert!(issues.iter().any(|i| matches!(i, MdpIssue::UnknownProposition { proposition, .. } if proposition == "Z")));
    }

    #[test]
    fn json_round_trip() {
        let m = fixtures::micro2_mdp();
        let back = LabeledMdp::from_json(&m.to_json()).unwrap();
        assert_eq!(back.transitions, m.transitions);
        assert_eq!(back.labels, m.labels);
        assert_eq!(back.initial, m.initial);
    }

    #[test]
    fn unknown_names_fail_to_load() {
        let mut doc = fixtures::micro1_mdp().to_doc();
        doc.transitions[0].to = "nowhere".into();
        assert_eq!(LabeledMdp::from_doc(&doc).unwrap_err(), MdpError::UnknownState("nowhere".into()));
    }
}
