//! General preference formulas: parsing and exact evaluation.
//!
//! Surface syntax:
//!
//! ```text
//! gpf  := "lex(" gpf ("," gpf)+ ")" | or
//! or   := and ("|" and)*
//! and  := atom ("&" atom)*
//! atom := NAME | "(" or ")"
//! ```
//!
//! Names consist of alphanumerics and `_ ' - .`.

use std::fmt;

use crate::automaton::{AtomicPreference, NamedApf, PreferenceAutomaton, StateSet};

#[derive(Debug, Clone, PartialEq)]
pub enum Gpf {
    Apf(NamedApf),
    And(Vec<Gpf>),
    Or(Vec<Gpf>),
    Lex(Vec<Gpf>),
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum GpfError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown preference `{0}`")]
    UnknownApfName(String),
    #[error("lex(...) is only allowed at the root of a formula")]
    LexNotAtRoot,
    #[error("lex(...) has no pointwise value; plan it with plan_lex")]
    LexNotEvaluable,
    #[error("invalid terminal distribution: {0}")]
    InvalidDistribution(String),
}

impl Gpf {
    /// Leaves in left-to-right order, with repeats.
    pub fn leaves(&self) -> Vec<&NamedApf> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a NamedApf>) {
        match self {
            Gpf::Apf(a) => out.push(a),
            Gpf::And(c) | Gpf::Or(c) | Gpf::Lex(c) => c.iter().for_each(|g| g.collect_leaves(out)),
        }
    }

    /// Distinct leaves in order of first appearance.
    pub fn distinct_apfs(&self) -> Vec<&NamedApf> {
        let mut out: Vec<&NamedApf> = Vec::new();
        for leaf in self.leaves() {
            if !out.iter().any(|a| a.name == leaf.name) {
                out.push(leaf);
            }
        }
        out
    }

    pub fn is_lex(&self) -> bool {
        matches!(self, Gpf::Lex(_))
    }
}

impl fmt::Display for Gpf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, children: &[Gpf], sep: &str, wrap: impl Fn(&Gpf) -> bool) -> fmt::Result {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                if wrap(c) {
                    write!(f, "({c})")?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            Ok(())
        }
        match self {
            Gpf::Apf(a) => f.write_str(&a.name),
            Gpf::And(c) => join(f, c, " & ", |g| matches!(g, Gpf::And(_) | Gpf::Or(_))),
            Gpf::Or(c) => join(f, c, " | ", |g| matches!(g, Gpf::Or(_))),
            Gpf::Lex(c) => {
                f.write_str("lex(")?;
                join(f, c, ", ", |_| false)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Name(String),
    And,
    Or,
    Open,
    Close,
    Comma,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '\'' | '-' | '.')
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, GpfError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let tok = match c {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '&' => Token::And,
            '|' => Token::Or,
            '(' => Token::Open,
            ')' => Token::Close,
            ',' => Token::Comma,
            c if is_name_char(c) => {
                let mut name = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !is_name_char(c) {
                        break;
                    }
                    name.push(c);
                    chars.next();
                }
                out.push((i, Token::Name(name)));
                continue;
            }
            other => return Err(GpfError::Parse { offset: i, message: format!("unexpected character `{other}`") }),
        };
        chars.next();
        out.push((i, tok));
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    automaton: &'a PreferenceAutomaton,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, GpfError> {
        Err(GpfError::Parse { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<(), GpfError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn is_lex_start(&self) -> bool {
        matches!(self.peek(), Some(Token::Name(n)) if n == "lex")
            && matches!(self.tokens.get(self.pos + 1), Some((_, Token::Open)))
    }

    fn gpf(&mut self) -> Result<Gpf, GpfError> {
        if !self.is_lex_start() {
            return self.or();
        }
        self.pos += 2;
        let mut children = vec![self.lex_child()?];
        while self.peek() == Some(&Token::Comma) {
            self.pos += 1;
            children.push(self.lex_child()?);
        }
        self.expect(Token::Close, "`,` or `)`")?;
        if children.len() < 2 {
            return self.error("lex(...) needs at least two formulas");
        }
        Ok(Gpf::Lex(children))
    }

    fn lex_child(&mut self) -> Result<Gpf, GpfError> {
        if self.is_lex_start() {
            return Err(GpfError::LexNotAtRoot);
        }
        self.or()
    }

    fn or(&mut self) -> Result<Gpf, GpfError> {
        let mut children = vec![self.and()?];
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            children.push(self.and()?);
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { Gpf::Or(children) })
    }

    fn and(&mut self) -> Result<Gpf, GpfError> {
        let mut children = vec![self.atom()?];
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            children.push(self.atom()?);
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { Gpf::And(children) })
    }

    fn atom(&mut self) -> Result<Gpf, GpfError> {
        if self.is_lex_start() {
            return Err(GpfError::LexNotAtRoot);
        }
        match self.peek().cloned() {
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.or()?;
                self.expect(Token::Close, "`)`")?;
                Ok(inner)
            }
            Some(Token::Name(name)) => {
                self.pos += 1;
                let apf = self.automaton.apf(&name).ok_or(GpfError::UnknownApfName(name))?;
                Ok(Gpf::Apf(apf.clone()))
            }
            _ => self.error("expected a preference name or `(`"),
        }
    }
}

pub fn parse_gpf(text: &str, automaton: &PreferenceAutomaton) -> Result<Gpf, GpfError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, end: text.len(), automaton };
    let gpf = parser.gpf()?;
    if parser.pos != parser.tokens.len() {
        return parser.error("unexpected trailing input");
    }
    Ok(gpf)
}

/// Probability mass over automaton states at the end of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalDistribution {
    mass: Vec<f64>,
}

impl TerminalDistribution {
    pub fn new(mass: Vec<f64>) -> Result<Self, GpfError> {
        if let Some(m) = mass.iter().find(|m| !(**m >= 0.0)) {
            return Err(GpfError::InvalidDistribution(format!("negative or NaN mass {m}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(GpfError::InvalidDistribution(format!("masses sum to {total}")));
        }
        Ok(Self { mass })
    }

    /// Builds a distribution from `(state name, mass)` pairs; unnamed states
    /// get zero mass.
    pub fn from_named(automaton: &PreferenceAutomaton, pairs: &[(&str, f64)]) -> Result<Self, GpfError> {
        let mut mass = vec![0.0; automaton.num_states()];
        for &(name, m) in pairs {
            let q = automaton
                .state_index(name)
                .ok_or_else(|| GpfError::InvalidDistribution(format!("unknown state `{name}`")))?;
            mass[q] += m;
        }
        Self::new(mass)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, set: &StateSet) -> f64 {
        set.iter().map(|q| self.mass.get(q).copied().unwrap_or(0.0)).sum()
    }
}

/// Mass of the most preferred set that still does at least as well as its
/// predecessor, or 0 when no step of the chain qualifies.
pub fn eval_apf(apf: &AtomicPreference, dist: &TerminalDistribution) -> f64 {
    let p: Vec<f64> = apf.sets.iter().map(|s| dist.prob(s)).collect();
    (1..p.len())
        .rev()
        .find(|&i| if apf.strict { p[i] > p[i - 1] } else { p[i] >= p[i - 1] })
        .map_or(0.0, |i| p[i])
}

pub fn eval_gpf(gpf: &Gpf, dist: &TerminalDistribution) -> Result<f64, GpfError> {
    match gpf {
        Gpf::Apf(a) => Ok(eval_apf(&a.apf, dist)),
        Gpf::And(c) => c.iter().try_fold(f64::INFINITY, |acc, g| Ok(acc.min(eval_gpf(g, dist)?))),
        Gpf::Or(c) => c.iter().try_fold(f64::NEG_INFINITY, |acc, g| Ok(acc.max(eval_gpf(g, dist)?))),
        Gpf::Lex(_) => Err(GpfError::LexNotEvaluable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn two_state_apf() -> AtomicPreference {
        // {qB} ≼ {qA} over states qA = 0, qB = 1.
        AtomicPreference::new(vec![StateSet::new([1]), StateSet::new([0])], false)
    }

    fn leaf(name: &str) -> Gpf {
        Gpf::Apf(NamedApf { name: name.into(), apf: two_state_apf() })
    }

    #[test]
    fn parses_conjunction_of_refined_preferences() {
        let a = fixtures::fig2_automaton();
        let g = parse_gpf("P1 & P2 & P6", &a).unwrap();
        let Gpf::And(children) = &g else { panic!("{g:?}") };
        let names: Vec<&str> = children.iter().map(|c| match c {
            Gpf::Apf(n) => n.name.as_str(),
            _ => panic!(),
        }).collect();
        assert_eq!(names, ["P1", "P2", "P6"]);
        // The refined automaton's P2 ranks state 8 over state 5.
        let p2 = &a.apf("P2").unwrap().apf;
        assert_eq!(p2.sets[1], StateSet::new([a.state_index("8").unwrap()]));
    }

    #[test]
    fn precedence_and_parentheses() {
        let a = fixtures::fig1_automaton();
        assert_eq!(parse_gpf("P1", &a).unwrap().to_string(), "P1");
        let g = parse_gpf("P1 | P4 & P3", &a).unwrap();
        match &g {
            Gpf::Or(c) => {
                assert!(matches!(&c[0], Gpf::Apf(n) if n.name == "P1"));
                assert!(matches!(&c[1], Gpf::And(x) if x.len() == 2));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_gpf("(P1 | P4) & P3", &a).unwrap().to_string(), "(P1 | P4) & P3");
        assert_eq!(parse_gpf("lex(P1 & P4, P3)", &a).unwrap().to_string(), "lex(P1 & P4, P3)");
    }

    #[test]
    fn parse_errors() {
        let a = fixtures::fig1_automaton();
        assert_eq!(parse_gpf("P1 & Q9", &a).unwrap_err(), GpfError::UnknownApfName("Q9".into()));
        assert_eq!(parse_gpf("P1 & lex(P1, P3)", &a).unwrap_err(), GpfError::LexNotAtRoot);
        assert_eq!(parse_gpf("lex(lex(P1, P3), P4)", &a).unwrap_err(), GpfError::LexNotAtRoot);
        assert!(matches!(parse_gpf("P1 &", &a), Err(GpfError::Parse { .. })));
        assert!(matches!(parse_gpf("(P1", &a), Err(GpfError::Parse { .. })));
        assert!(matches!(parse_gpf("P1 P3", &a), Err(GpfError::Parse { .. })));
        assert!(matches!(parse_gpf("lex(P1)", &a), Err(GpfError::Parse { .. })));
    }

    #[test]
    fn apf_values() {
        let apf = two_state_apf();
        let d = |a: f64, b: f64| TerminalDistribution::new(vec![a, b]).unwrap();
        assert_eq!(eval_apf(&apf, &d(0.6, 0.4)), 0.6);
        assert_eq!(eval_apf(&apf, &d(0.4, 0.6)), 0.0);
        assert_eq!(eval_apf(&apf, &d(1.0, 0.0)), 1.0);
        let strict = AtomicPreference::new(apf.sets.clone(), true);
        assert_eq!(eval_apf(&apf, &d(0.5, 0.5)), 0.5);
        assert_eq!(eval_apf(&strict, &d(0.5, 0.5)), 0.0);
    }

    #[test]
    fn longest_chain_value() {
        let a = fixtures::fig1_automaton();
        let p5 = &a.apf("P5").unwrap().apf;
        let dist = TerminalDistribution::from_named(&a, &[("7", 0.5), ("4", 0.3), ("1", 0.2)]).unwrap();
        assert_eq!(eval_apf(p5, &dist), 0.5);
    }

    #[test]
    fn connective_values() {
        let a = fixtures::fig1_automaton();
        // P1: {4,6} ≼ {7}; P4: {1,2,3} ≼ {4,6}; P3: {4,6} ≼ {5}.
        let dist = TerminalDistribution::from_named(&a, &[("7", 0.2), ("4", 0.1), ("5", 0.5), ("1", 0.2)]).unwrap();
        let v = |t: &str| eval_gpf(&parse_gpf(t, &a).unwrap(), &dist).unwrap();
        assert!((v("P1") - 0.2).abs() < 1e-12);
        assert_eq!(v("P4"), 0.0);
        assert!((v("P3") - 0.5).abs() < 1e-12);
        assert!((v("P1 | P4 & P3") - 0.2).abs() < 1e-12);
        assert!((v("P1 | P3") - 0.5).abs() < 1e-12);
        assert_eq!(v("P1 & P4"), 0.0);
        assert_eq!(eval_gpf(&parse_gpf("lex(P1, P3)", &a).unwrap(), &dist), Err(GpfError::LexNotEvaluable));
    }

    #[test]
    fn distribution_checks() {
        assert!(TerminalDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(TerminalDistribution::new(vec![1.1, -0.1]).is_err());
        assert!(TerminalDistribution::new(vec![f64::NAN, 1.0]).is_err());
    }

    fn random_apf(n_states: usize) -> impl Strategy<Value = AtomicPreference> {
        (proptest::sample::subsequence((0..n_states).collect::<Vec<_>>(), 2..=n_states), any::<bool>())
            .prop_flat_map(|(states, strict)| {
                let k = states.len();
                (Just(states), proptest::collection::vec(0..k, k), 2..=k, Just(strict))
            })
            .prop_map(|(states, buckets, n_sets, strict)| {
                let mut sets = vec![Vec::new(); n_sets];
                for (i, q) in states.iter().enumerate() {
                    sets[if i < n_sets { i } else { buckets[i] % n_sets }].push(*q);
                }
                AtomicPreference::new(sets.into_iter().map(StateSet::new).collect(), strict)
            })
    }

    fn random_dist(n: usize) -> impl Strategy<Value = TerminalDistribution> {
        proptest::collection::vec(0u32..100, n).prop_map(|w| {
            let total: u32 = w.iter().sum::<u32>().max(1);
            let mut mass: Vec<f64> = w.iter().map(|&x| x as f64 / total as f64).collect();
            if w.iter().all(|&x| x == 0) {
                mass[0] = 1.0;
            }
            let s: f64 = mass.iter().sum();
            mass.iter_mut().for_each(|m| *m /= s);
            TerminalDistribution::new(mass).unwrap()
        })
    }

    proptest! {
        #[test]
        fn apf_value_is_zero_or_a_set_mass(apf in random_apf(6), dist in random_dist(6)) {
            let v = eval_apf(&apf, &dist);
            prop_assert!(v == 0.0 || apf.sets[1..].iter().any(|s| dist.prob(s) == v));
        }

        #[test]
        fn length_one_weak_closed_form(dist in random_dist(4)) {
            let apf = AtomicPreference::new(vec![StateSet::new([0, 2]), StateSet::new([1])], false);
            let (p0, p1) = (dist.prob(&apf.sets[0]), dist.prob(&apf.sets[1]));
            prop_assert_eq!(eval_apf(&apf, &dist), if p1 >= p0 { p1 } else { 0.0 });
        }

        #[test]
        fn connectives_bound_children(a in random_apf(5), b in random_apf(5), dist in random_dist(5)) {
            let la = Gpf::Apf(NamedApf { name: "a".into(), apf: a });
            let lb = Gpf::Apf(NamedApf { name: "b".into(), apf: b });
            let va = eval_gpf(&la, &dist).unwrap();
            let vb = eval_gpf(&lb, &dist).unwrap();
            let and = eval_gpf(&Gpf::And(vec![la.clone(), lb.clone()]), &dist).unwrap();
            let or = eval_gpf(&Gpf::Or(vec![la.clone(), lb.clone()]), &dist).unwrap();
            prop_assert!(and <= va && and <= vb);
            prop_assert!(or >= va && or >= vb);
            prop_assert_eq!(eval_gpf(&Gpf::And(vec![lb.clone(), la.clone()]), &dist).unwrap(), and);
            prop_assert_eq!(eval_gpf(&Gpf::Or(vec![lb.clone(), la.clone()]), &dist).unwrap(), or);
            prop_assert_eq!(eval_gpf(&Gpf::And(vec![la.clone(), la.clone()]), &dist).unwrap(), va);
            prop_assert_eq!(eval_gpf(&Gpf::Or(vec![la.clone(), la]), &dist).unwrap(), va);
        }
    }

    #[test]
    fn hand_folds() {
        let dist = TerminalDistribution::new(vec![0.6, 0.4]).unwrap();
        let g = Gpf::Or(vec![leaf("p"), Gpf::And(vec![leaf("p"), leaf("p")])]);
        assert_eq!(eval_gpf(&g, &dist).unwrap(), 0.6);
    }
}
