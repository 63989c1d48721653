//! Nonstationary stochastic policies over product states.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::automaton::PreferenceAutomaton;
use crate::encoding::OccupancyPlan;
use crate::mdp::LabeledMdp;
use crate::product::ProductMdp;

/// Below this total occupancy a state's decision rule is uniform.
pub const ZERO_OCCUPANCY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub horizon: usize,
    pub num_actions: usize,
    /// `rules[t][(s, q)]` is the action distribution at stage `t`.
    pub rules: Vec<BTreeMap<(usize, usize), Vec<f64>>>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum PolicyError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("rule for stage {t} is outside the horizon {horizon}")]
    StageOutOfRange { t: usize, horizon: usize },
    #[error("decision rule at stage {t} for ({s}, {q}) sums to {sum}")]
    NotADistribution { t: usize, s: String, q: String, sum: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RuleDoc {
    pub t: usize,
    pub state: [String; 2],
    pub action_probs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PolicyDoc {
    pub horizon: usize,
    pub rules: Vec<RuleDoc>,
}

impl Policy {
    pub fn new(horizon: usize, num_actions: usize) -> Self {
        Self { horizon, num_actions, rules: vec![BTreeMap::new(); horizon] }
    }

    pub fn rule(&self, t: usize, s: usize, q: usize) -> Option<&[f64]> {
        self.rules.get(t)?.get(&(s, q)).map(Vec::as_slice)
    }

    pub fn set_rule(&mut self, t: usize, s: usize, q: usize, probs: Vec<f64>) {
        self.rules[t].insert((s, q), probs);
    }

    pub fn to_doc(&self, mdp: &LabeledMdp, automaton: &PreferenceAutomaton) -> PolicyDoc {
        let mut rules = Vec::new();
        for (t, stage) in self.rules.iter().enumerate() {
            for (&(s, q), probs) in stage {
                rules.push(RuleDoc {
                    t,
                    state: [mdp.states[s].clone(), automaton.states()[q].clone()],
                    action_probs: probs
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| **p != 0.0)
                        .map(|(a, p)| (mdp.actions[a].clone(), *p))
                        .collect(),
                });
            }
        }
        PolicyDoc { horizon: self.horizon, rules }
    }

    pub fn from_doc(doc: &PolicyDoc, mdp: &LabeledMdp, automaton: &PreferenceAutomaton) -> Result<Self, PolicyError> {
        let unknown = |kind, name: &str| PolicyError::UnknownName { kind, name: name.to_string() };
        let actions: HashMap<&str, usize> = mdp.actions.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let mut policy = Policy::new(doc.horizon, mdp.num_actions());
        for r in &doc.rules {
            if r.t >= doc.horizon {
                return Err(PolicyError::StageOutOfRange { t: r.t, horizon: doc.horizon });
            }
            let s = mdp.state_index(&r.state[0]).ok_or_else(|| unknown("MDP state", &r.state[0]))?;
            let q = automaton.state_index(&r.state[1]).ok_or_else(|| unknown("automaton state", &r.state[1]))?;
            let mut probs = vec![0.0; mdp.num_actions()];
            for (name, &p) in &r.action_probs {
                probs[*actions.get(name.as_str()).ok_or_else(|| unknown("action", name))?] = p;
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || probs.iter().any(|p| *p < 0.0) {
                return Err(PolicyError::NotADistribution { t: r.t, s: r.state[0].clone(), q: r.state[1].clone(), sum });
            }
            policy.set_rule(r.t, s, q, probs);
        }
        Ok(policy)
    }

    pub fn to_json(&self, mdp: &LabeledMdp, automaton: &PreferenceAutomaton) -> String {
        serde_json::to_string_pretty(&self.to_doc(mdp, automaton)).expect("policy documents always serialize")
    }

    pub fn from_json(text: &str, mdp: &LabeledMdp, automaton: &PreferenceAutomaton) -> Result<Self, PolicyError> {
        let doc: PolicyDoc = serde_json::from_str(text).map_err(|e| PolicyError::Parse(e.to_string()))?;
        Self::from_doc(&doc, mdp, automaton)
    }
}

/// Decision rules `μ_t(x)(a) = y(t,x,a) / Σ_a' y(t,x,a')`. States with no
/// occupancy get the uniform distribution over their available actions.
pub fn extract_policy(plan: &OccupancyPlan, product: &ProductMdp) -> Policy {
    let mut policy = Policy::new(plan.horizon, product.num_actions);
    for (t, stage) in plan.occupancy.iter().enumerate() {
        let mut per_state: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for o in stage {
            per_state.entry(o.state).or_insert_with(|| vec![0.0; product.num_actions])[o.action] += o.value;
        }
        for (x, mut probs) in per_state {
            let total: f64 = probs.iter().sum();
            if total > ZERO_OCCUPANCY {
                probs.iter_mut().for_each(|p| *p /= total);
            } else {
                let available: Vec<usize> = product.available_actions(x).collect();
                probs = vec![0.0; product.num_actions];
                for &a in &available {
                    probs[a] = 1.0 / available.len() as f64;
                }
            }
            let (s, q) = product.states[x];
            policy.set_rule(t, s, q, probs);
        }
    }
    policy
}
