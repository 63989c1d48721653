//! Synchronous product of a labeled MDP with a preference automaton.

use std::collections::{HashMap, VecDeque};

use crate::automaton::{PreferenceAutomaton, Symbol};
use crate::mdp::LabeledMdp;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ProductError {
    #[error("label of state `{state}` uses proposition `{proposition}` unknown to the automaton")]
    UnknownProposition { state: String, proposition: String },
    #[error("label {label:?} of state `{state}` has no transition in the automaton")]
    SymbolMismatch { state: String, label: Vec<String> },
}

/// Only the fragment reachable from the initial distribution is stored.
#[derive(Debug, Clone)]
pub struct ProductMdp {
    /// `(mdp state, automaton state)` per product state, in discovery order.
    pub states: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
    /// Product states with positive initial mass.
    pub initial: Vec<(usize, f64)>,
    /// `transitions[x][a]` lists `(successor, probability)`; empty when the
    /// action is unavailable.
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    pub num_actions: usize,
    pub num_automaton_states: usize,
}

impl ProductMdp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, s: usize, q: usize) -> Option<usize> {
        self.index.get(&(s, q)).copied()
    }

    pub fn available(&self, x: usize, a: usize) -> bool {
        !self.transitions[x][a].is_empty()
    }

    pub fn available_actions(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_actions).filter(move |&a| self.available(x, a))
    }

    /// Initial mass as a dense vector over product states.
    pub fn initial_vector(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.num_states()];
        for &(x, m) in &self.initial {
            p[x] += m;
        }
        p
    }

    /// `layers[t]` holds, in ascending order, the product states that some
    /// policy reaches with positive probability at exactly stage `t`.
    pub fn reachable_layers(&self, horizon: usize) -> Vec<Vec<usize>> {
        let mut layers = Vec::with_capacity(horizon);
        if horizon == 0 {
            return layers;
        }
        let mut mark = vec![false; self.num_states()];
        let mut current: Vec<usize> = self.initial.iter().map(|&(x, _)| x).collect();
        current.sort_unstable();
        current.dedup();
        for _ in 1..horizon {
            let mut next = Vec::new();
            for &x in &current {
                for row in &self.transitions[x] {
                    for &(y, p) in row {
                        if p > 0.0 && !mark[y] {
                            mark[y] = true;
                            next.push(y);
                        }
                    }
                }
            }
            for &y in &next {
                mark[y] = false;
            }
            next.sort_unstable();
            layers.push(std::mem::replace(&mut current, next));
        }
        layers.push(current);
        layers
    }
}

/// Automaton symbol read on entering each MDP state.
pub fn label_symbols(mdp: &LabeledMdp, automaton: &PreferenceAutomaton) -> Result<Vec<Symbol>, ProductError> {
    mdp.labels
        .iter()
        .enumerate()
        .map(|(s, props)| {
            let sym = automaton.symbol(props).map_err(|_| ProductError::UnknownProposition {
                state: mdp.states[s].clone(),
                proposition: props
                    .iter()
                    .find(|p| !automaton.propositions().contains(p))
                    .cloned()
                    .unwrap_or_default(),
            })?;
            if automaton.step(automaton.initial(), sym).is_none() {
                return Err(ProductError::SymbolMismatch { state: mdp.states[s].clone(), label: props.clone() });
            }
            Ok(sym)
        })
        .collect()
}

pub fn product(mdp: &LabeledMdp, automaton: &PreferenceAutomaton) -> Result<ProductMdp, ProductError> {
    let symbols = label_symbols(mdp, automaton)?;
    let step = |q: usize, s: usize| automaton.step(q, symbols[s]).expect("symbols were checked against the alphabet");

    let mut states = Vec::new();
    let mut index = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |key: (usize, usize), states: &mut Vec<(usize, usize)>, queue: &mut VecDeque<usize>| {
        *index.entry(key).or_insert_with(|| {
            states.push(key);
            queue.push_back(states.len() - 1);
            states.len() - 1
        })
    };

    let mut initial = Vec::new();
    for (s, &p) in mdp.initial.iter().enumerate() {
        if p > 0.0 {
            let x = intern((s, step(automaton.initial(), s)), &mut states, &mut queue);
            initial.push((x, p));
        }
    }

    let mut transitions: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
    while let Some(x) = queue.pop_front() {
        let (s, q) = states[x];
        let rows: Vec<Vec<(usize, f64)>> = mdp.transitions[s]
            .iter()
            .map(|row| row.iter().map(|&(s2, p)| (intern((s2, step(q, s2)), &mut states, &mut queue), p)).collect())
            .collect();
        if transitions.len() <= x {
            transitions.resize(x + 1, Vec::new());
        }
        transitions[x] = rows;
    }

    let index = states.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    Ok(ProductMdp {
        states,
        index,
        initial,
        transitions,
        num_actions: mdp.num_actions(),
        num_automaton_states: automaton.num_states(),
    })
}
