//! Exact evaluation of a policy by forward propagation of probability mass.

use crate::gpf::{eval_apf, eval_gpf, Gpf, GpfError, TerminalDistribution};
use crate::policy::Policy;
use crate::product::ProductMdp;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("no decision rule at stage {t} for MDP state {s}, automaton state {q}")]
    UndefinedDecisionRule { t: usize, s: usize, q: usize },
    #[error("decision rule at stage {t} for MDP state {s} picks unavailable action {a}")]
    UnavailableAction { t: usize, s: usize, a: usize },
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error(transparent)]
    Gpf(#[from] GpfError),
}

#[derive(Debug, Clone)]
pub struct Propagation {
    /// `stages[t][x]` is the probability of product state `x` at stage `t`.
    pub stages: Vec<Vec<f64>>,
    /// Automaton-state marginal of the last stage.
    pub terminal: TerminalDistribution,
}

#[derive(Debug, Clone)]
pub struct EvalResult {
    pub stages: Vec<Vec<f64>>,
    pub terminal: TerminalDistribution,
    /// Value of each distinct preference in the formula.
    pub apf_values: Vec<(String, f64)>,
    pub value: f64,
}

pub fn forward_eval(product: &ProductMdp, policy: &Policy, horizon: usize) -> Result<Propagation, EvalError> {
    if horizon == 0 {
        return Err(EvalError::InvalidHorizon);
    }
    let n = product.num_states();
    let mut stages = Vec::with_capacity(horizon);
    stages.push(product.initial_vector());
    for t in 0..horizon - 1 {
        let current = &stages[t];
        let mut next = vec![0.0; n];
        for (x, &mass) in current.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let (s, q) = product.states[x];
            let rule = policy.rule(t, s, q).ok_or(EvalError::UndefinedDecisionRule { t, s, q })?;
            for (a, &pa) in rule.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                let row = product.transitions[x].get(a).filter(|r| !r.is_empty());
                let row = row.ok_or(EvalError::UnavailableAction { t, s, a })?;
                for &(y, p) in row {
                    next[y] += mass * pa * p;
                }
            }
        }
        stages.push(next);
    }
    let mut terminal = vec![0.0; product.num_automaton_states];
    for (x, &mass) in stages[horizon - 1].iter().enumerate() {
        terminal[product.states[x].1] += mass;
    }
    let terminal = TerminalDistribution::new(terminal)?;
    Ok(Propagation { stages, terminal })
}

pub fn evaluate(product: &ProductMdp, policy: &Policy, gpf: &Gpf, horizon: usize) -> Result<EvalResult, EvalError> {
    let Propagation { stages, terminal } = forward_eval(product, policy, horizon)?;
    let apf_values = gpf.distinct_apfs().iter().map(|a| (a.name.clone(), eval_apf(&a.apf, &terminal))).collect();
    let value = eval_gpf(gpf, &terminal)?;
    Ok(EvalResult { stages, terminal, apf_values, value })
}

/// `v(φ, π, T)`: the formula's value on the policy's terminal distribution.
pub fn value_of(policy: &Policy, gpf: &Gpf, product: &ProductMdp, horizon: usize) -> Result<f64, EvalError> {
    Ok(evaluate(product, policy, gpf, horizon)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::PreferenceAutomaton;
    use crate::encoding::{plan_product, EncodingParams};
    use crate::fixtures;
    use crate::gpf::parse_gpf;
    use crate::mdp::LabeledMdp;
    use crate::policy::extract_policy;
    use crate::product::product;
    use prefplan_milp::MilpConfig;

    fn only_policy(p: &ProductMdp, horizon: usize) -> Policy {
        let mut pol = Policy::new(horizon, p.num_actions);
        for t in 0..horizon {
            for &(s, q) in &p.states {
                pol.set_rule(t, s, q, vec![1.0]);
            }
        }
        pol
    }

    #[test]
    fn micro_one_terminal_distribution() {
        let aut = fixtures::micro1_automaton();
        let p = product(&fixtures::micro1_mdp(), &aut).unwrap();
        let prop = forward_eval(&p, &only_policy(&p, 2), 2).unwrap();
        let m = prop.terminal.mass();
        assert!((m[aut.state_index("qA").unwrap()] - 0.6).abs() < 1e-15);
        assert!((m[aut.state_index("qB").unwrap()] - 0.4).abs() < 1e-15);
        let g = parse_gpf("p", &aut).unwrap();
        assert!((value_of(&only_policy(&p, 2), &g, &p, 2).unwrap() - 0.6).abs() < 1e-15);
        let gg = parse_gpf("p & p", &aut).unwrap();
        assert_eq!(value_of(&only_policy(&p, 2), &gg, &p, 2).unwrap(), value_of(&only_policy(&p, 2), &g, &p, 2).unwrap());
    }

    #[test]
    fn horizon_one_is_the_initial_marginal() {
        let aut = fixtures::micro1_automaton();
        let p = product(&fixtures::micro1_mdp(), &aut).unwrap();
        let prop = forward_eval(&p, &Policy::new(1, 1), 1).unwrap();
        assert_eq!(prop.terminal.mass()[aut.initial()], 1.0);
        assert_eq!(forward_eval(&p, &Policy::new(0, 1), 0).unwrap_err(), EvalError::InvalidHorizon);
    }

    #[test]
    fn deterministic_line_visits_a_then_b() {
        let mdp = LabeledMdp::from_json(
            r#"{"states":["s0","s1","s2"],"actions":["go"],"initial":{"s0":1.0},
            "transitions":[{"from":"s0","action":"go","to":"s1","prob":1.0},
                           {"from":"s1","action":"go","to":"s2","prob":1.0},
                           {"from":"s2","action":"go","to":"s2","prob":1.0}],
            "propositions":["A","B"],"labels":{"s1":["A"],"s2":["B"]}}"#,
        )
        .unwrap();
        let aut = fixtures::fig1_automaton();
        let p = product(&mdp, &aut).unwrap();
        let prop = forward_eval(&p, &only_policy(&p, 3), 3).unwrap();
        assert_eq!(prop.terminal.mass()[aut.state_index("5").unwrap()], 1.0);
    }

    #[test]
    fn missing_rule_is_reported() {
        let aut = fixtures::micro1_automaton();
        let p = product(&fixtures::micro1_mdp(), &aut).unwrap();
        let err = forward_eval(&p, &Policy::new(2, 1), 2).unwrap_err();
        assert!(matches!(err, EvalError::UndefinedDecisionRule { t: 0, .. }));
    }

    #[test]
    fn long_preference_on_a_staged_distribution() {
        // Five-state chain that ends in automaton states 7, 4 or 1 of the
        // region automaton with masses 0.5, 0.3, 0.2.
        let aut: PreferenceAutomaton = fixtures::fig1_automaton();
        let mdp = LabeledMdp::from_json(
            r#"{"states":["s","a","ab","abc","ac"],"actions":["x"],"initial":{"s":1.0},
            "transitions":[{"from":"s","action":"x","to":"a","prob":1.0},
                           {"from":"a","action":"x","to":"ab","prob":0.7},
                           {"from":"a","action":"x","to":"a","prob":0.3},
                           {"from":"ab","action":"x","to":"abc","prob":0.5},
                           {"from":"ab","action":"x","to":"ac","prob":0.5},
                           {"from":"abc","action":"x","to":"abc","prob":1.0},
                           {"from":"ac","action":"x","to":"ac","prob":1.0}],
            "propositions":["A","B","C"],
            "labels":{"a":["A"],"ab":["B"],"abc":["C"],"ac":["C"]}}"#,
        )
        .unwrap();
        let p = product(&mdp, &aut).unwrap();
        // After 3 steps: {1}: 0.3·... use the oracle, then check the chain rule.
        let prop = forward_eval(&p, &only_policy(&p, 4), 4).unwrap();
        let g = parse_gpf("P5", &aut).unwrap();
        let d = &prop.terminal;
        let sets = &aut.apf("P5").unwrap().apf.sets;
        let masses: Vec<f64> = sets.iter().map(|s| d.prob(s)).collect();
        let v = value_of(&only_policy(&p, 4), &g, &p, 4).unwrap();
        let i = (1..masses.len()).rev().find(|&i| masses[i] >= masses[i - 1]).unwrap();
        assert_eq!(v, masses[i]);
    }

    #[test]
    fn planned_policy_reproduces_occupancy() {
        let aut = fixtures::micro3_automaton();
        let p = product(&fixtures::micro3_mdp(), &aut).unwrap();
        let g = parse_gpf("p & r", &aut).unwrap();
        let plan = plan_product(&p, &g, &EncodingParams::new(3), &MilpConfig::default()).unwrap();
        let pol = extract_policy(&plan, &p);
        let prop = forward_eval(&p, &pol, 3).unwrap();
        for t in 0..3 {
            let occ = plan.state_occupancy(t, p.num_states());
            for x in 0..p.num_states() {
                assert!((occ[x] - prop.stages[t][x]).abs() < 1e-7);
            }
            assert!((prop.stages[t].iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((value_of(&pol, &g, &p, 3).unwrap() - plan.objective).abs() < 1e-6 + plan.epsilon);
    }
}
