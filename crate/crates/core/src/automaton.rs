//! Deterministic automata with a preference model over their states.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gpf::{self, Gpf};

/// A set of atomic propositions, stored as a bitmask over the automaton's
/// proposition list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Symbol(pub u64);

impl Symbol {
    pub const EMPTY: Symbol = Symbol(0);

    pub fn contains(self, prop: usize) -> bool {
        self.0 >> prop & 1 == 1
    }
}

/// Sorted, duplicate-free automaton state indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct StateSet(Vec<usize>);

impl StateSet {
    pub fn new(states: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = states.into_iter().collect();
        StateSet(set.into_iter().collect())
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0.binary_search(&q).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_disjoint(&self, other: &StateSet) -> bool {
        !self.0.iter().any(|q| other.contains(*q))
    }
}

/// A chain `X_0 ≼ X_1 ≼ … ≼ X_n` of disjoint state sets; later sets are
/// preferred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicPreference {
    pub sets: Vec<StateSet>,
    pub strict: bool,
}

impl AtomicPreference {
    pub fn new(sets: Vec<StateSet>, strict: bool) -> Self {
        Self { sets, strict }
    }

    /// Number of preference steps, one less than the number of sets.
    pub fn len(&self) -> usize {
        self.sets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedApf {
    pub name: String,
    pub apf: AtomicPreference,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AutomatonError {
    #[error("no transition from state `{state}` on symbol {symbol}")]
    MissingTransition { state: String, symbol: String },
    #[error("duplicate transition from state `{state}` on symbol {symbol}")]
    DuplicateTransition { state: String, symbol: String },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("symbol {0} is not in the alphabet")]
    UnknownSymbol(String),
    #[error("preference `{0}` has overlapping state sets")]
    OverlappingSets(String),
    #[error("preference `{0}` needs at least two nonempty state sets")]
    DegenerateApf(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("too many propositions ({0}); at most 64 are supported")]
    TooManyPropositions(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Gpf(#[from] gpf::GpfError),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TransitionDoc {
    pub from: String,
    pub symbol: Vec<String>,
    pub to: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ApfDoc {
    pub name: String,
    pub sets: Vec<Vec<String>>,
    #[serde(default)]
    pub strict: bool,
}

/// The on-disk automaton description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AutomatonDoc {
    pub states: Vec<String>,
    pub propositions: Vec<String>,
    pub initial: String,
    pub transitions: Vec<TransitionDoc>,
    #[serde(default)]
    pub pad_with_sink: bool,
    #[serde(default)]
    pub apfs: Vec<ApfDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gpf: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PreferenceAutomaton {
    states: Vec<String>,
    propositions: Vec<String>,
    alphabet: Vec<Symbol>,
    symbol_index: HashMap<Symbol, usize>,
    /// `delta[q][k]` is the successor of `q` on `alphabet[k]`.
    delta: Vec<Vec<usize>>,
    initial: usize,
    apfs: Vec<NamedApf>,
    gpf: Option<String>,
}

impl PreferenceAutomaton {
    pub fn from_json(text: &str) -> Result<Self, AutomatonError> {
        let doc: AutomatonDoc = serde_json::from_str(text).map_err(|e| AutomatonError::Parse(e.to_string()))?;
        Self::from_doc(&doc)
    }

    pub fn from_doc(doc: &AutomatonDoc) -> Result<Self, AutomatonError> {
        if doc.propositions.len() > 64 {
            return Err(AutomatonError::TooManyPropositions(doc.propositions.len()));
        }
        let mut states = doc.states.clone();
        let mut state_index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if state_index.insert(s.clone(), i).is_some() {
                return Err(AutomatonError::DuplicateName(s.clone()));
            }
        }
        let lookup = |name: &str| state_index.get(name).copied().ok_or_else(|| AutomatonError::UnknownState(name.into()));
        let initial = lookup(&doc.initial)?;

        let mut prop_index = HashMap::new();
        for (i, p) in doc.propositions.iter().enumerate() {
            if prop_index.insert(p.as_str(), i).is_some() {
                return Err(AutomatonError::DuplicateName(p.clone()));
            }
        }
        let to_symbol = |props: &[String]| -> Result<Symbol, AutomatonError> {
            let mut bits = 0u64;
            for p in props {
                let i = prop_index.get(p.as_str()).ok_or_else(|| AutomatonError::UnknownProposition(p.clone()))?;
                bits |= 1 << i;
            }
            Ok(Symbol(bits))
        };

        let mut edges = Vec::with_capacity(doc.transitions.len());
        let mut alphabet_set = BTreeSet::new();
        for t in &doc.transitions {
            let sym = to_symbol(&t.symbol)?;
            alphabet_set.insert(sym);
            edges.push((lookup(&t.from)?, sym, lookup(&t.to)?));
        }
        let alphabet: Vec<Symbol> = alphabet_set.into_iter().collect();
        let symbol_index: HashMap<Symbol, usize> = alphabet.iter().enumerate().map(|(i, s)| (*s, i)).collect();

        let mut delta = vec![vec![usize::MAX; alphabet.len()]; states.len()];
        for &(from, sym, to) in &edges {
            let slot = &mut delta[from][symbol_index[&sym]];
            if *slot != usize::MAX && *slot != to {
                return Err(AutomatonError::DuplicateTransition {
                    state: states[from].clone(),
                    symbol: format_symbol(&doc.propositions, sym),
                });
            }
            *slot = to;
        }

        let missing = delta.iter().any(|row| row.contains(&usize::MAX));
        if missing {
            if !doc.pad_with_sink {
                let (q, k) = delta
                    .iter()
                    .enumerate()
                    .find_map(|(q, row)| row.iter().position(|&t| t == usize::MAX).map(|k| (q, k)))
                    .unwrap();
                return Err(AutomatonError::MissingTransition {
                    state: states[q].clone(),
                    symbol: format_symbol(&doc.propositions, alphabet[k]),
                });
            }
            let mut sink = "sink".to_string();
            while state_index.contains_key(&sink) {
                sink.push('_');
            }
            let sink_id = states.len();
            states.push(sink);
            for row in &mut delta {
                for t in row.iter_mut() {
                    if *t == usize::MAX {
                        *t = sink_id;
                    }
                }
            }
            delta.push(vec![sink_id; alphabet.len()]);
        }

        let mut apfs: Vec<NamedApf> = Vec::with_capacity(doc.apfs.len());
        for a in &doc.apfs {
            if apfs.iter().any(|x| x.name == a.name) {
                return Err(AutomatonError::DuplicateName(a.name.clone()));
            }
            let mut sets = Vec::with_capacity(a.sets.len());
            for set in &a.sets {
                sets.push(StateSet::new(set.iter().map(|s| lookup(s)).collect::<Result<Vec<_>, _>>()?));
            }
            let apf = AtomicPreference::new(sets, a.strict);
            validate_apf(&a.name, &apf)?;
            apfs.push(NamedApf { name: a.name.clone(), apf });
        }

        let automaton = PreferenceAutomaton {
            states,
            propositions: doc.propositions.clone(),
            alphabet,
            symbol_index,
            delta,
            initial,
            apfs,
            gpf: doc.gpf.clone(),
        };
        if let Some(text) = &automaton.gpf {
            gpf::parse_gpf(text, &automaton)?;
        }
        Ok(automaton)
    }

    /// Writes the automaton back out with its full transition table; a sink
    /// added by padding becomes an ordinary state.
    pub fn to_doc(&self) -> AutomatonDoc {
        let mut transitions = Vec::new();
        for (q, row) in self.delta.iter().enumerate() {
            for (k, &to) in row.iter().enumerate() {
                transitions.push(TransitionDoc {
                    from: self.states[q].clone(),
                    symbol: self.symbol_props(self.alphabet[k]),
                    to: self.states[to].clone(),
                });
            }
        }
        AutomatonDoc {
            states: self.states.clone(),
            propositions: self.propositions.clone(),
            initial: self.states[self.initial].clone(),
            transitions,
            pad_with_sink: false,
            apfs: self
                .apfs
                .iter()
                .map(|a| ApfDoc {
                    name: a.name.clone(),
                    sets: a.apf.sets.iter().map(|s| s.iter().map(|q| self.states[q].clone()).collect()).collect(),
                    strict: a.apf.strict,
                })
                .collect(),
            gpf: self.gpf.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("automaton documents always serialize")
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn propositions(&self) -> &[String] {
        &self.propositions
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn apfs(&self) -> &[NamedApf] {
        &self.apfs
    }

    pub fn apf(&self, name: &str) -> Option<&NamedApf> {
        self.apfs.iter().find(|a| a.name == name)
    }

    /// The preference formula declared in the document, if any.
    pub fn gpf_text(&self) -> Option<&str> {
        self.gpf.as_deref()
    }

    pub fn default_gpf(&self) -> Option<Result<Gpf, gpf::GpfError>> {
        self.gpf.as_deref().map(|t| gpf::parse_gpf(t, self))
    }

    pub fn symbol<S: AsRef<str>>(&self, props: &[S]) -> Result<Symbol, AutomatonError> {
        let mut bits = 0u64;
        for p in props {
            let p = p.as_ref();
            let i = self
                .propositions
                .iter()
                .position(|x| x == p)
                .ok_or_else(|| AutomatonError::UnknownProposition(p.into()))?;
            bits |= 1 << i;
        }
        Ok(Symbol(bits))
    }

    pub fn symbol_props(&self, sym: Symbol) -> Vec<String> {
        (0..self.propositions.len()).filter(|&i| sym.contains(i)).map(|i| self.propositions[i].clone()).collect()
    }

    pub fn step(&self, q: usize, sym: Symbol) -> Option<usize> {
        self.symbol_index.get(&sym).map(|&k| self.delta[q][k])
    }

    /// Folds the transition function over `word` starting from `from`.
    pub fn run_from(&self, from: usize, word: &[Symbol]) -> Result<usize, AutomatonError> {
        word.iter().try_fold(from, |q, &sym| {
            self.step(q, sym).ok_or_else(|| AutomatonError::UnknownSymbol(format_symbol(&self.propositions, sym)))
        })
    }

    pub fn run(&self, word: &[Symbol]) -> Result<usize, AutomatonError> {
        self.run_from(self.initial, word)
    }

    /// Equality of transition structure and preference model.
    pub fn same_as(&self, other: &PreferenceAutomaton) -> bool {
        self.states == other.states
            && self.propositions == other.propositions
            && self.alphabet == other.alphabet
            && self.delta == other.delta
            && self.initial == other.initial
            && self.apfs == other.apfs
            && self.gpf == other.gpf
    }
}

fn validate_apf(name: &str, apf: &AtomicPreference) -> Result<(), AutomatonError> {
    if apf.sets.len() < 2 || apf.sets.iter().any(StateSet::is_empty) {
        return Err(AutomatonError::DegenerateApf(name.into()));
    }
    for i in 0..apf.sets.len() {
        for j in i + 1..apf.sets.len() {
            if !apf.sets[i].is_disjoint(&apf.sets[j]) {
                return Err(AutomatonError::OverlappingSets(name.into()));
            }
        }
    }
    Ok(())
}

fn format_symbol(props: &[String], sym: Symbol) -> String {
    let names: Vec<&str> = (0..props.len()).filter(|&i| sym.contains(i)).map(|i| props[i].as_str()).collect();
    format!("{{{}}}", names.join(","))
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}
