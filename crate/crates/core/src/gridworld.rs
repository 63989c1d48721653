//! Gridworlds with slippery headings.
//!
//! Cells are numbered row-major from the top-left corner. A realized heading
//! that would leave the grid keeps the agent in place. Obstacle cells can be
//! entered and are absorbing.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::mdp::LabeledMdp;

pub const HEADINGS: [&str; 4] = ["N", "E", "S", "W"];

/// `DEFAULT_DYNAMICS[chosen][realized]`, headings ordered N, E, S, W.
pub const DEFAULT_DYNAMICS: [[f64; 4]; 4] = [
    [0.8, 0.1, 0.0, 0.1],
    [0.05, 0.8, 0.15, 0.0],
    [0.0, 0.1, 0.7, 0.2],
    [0.15, 0.0, 0.15, 0.7],
];

fn default_dynamics() -> [[f64; 4]; 4] {
    DEFAULT_DYNAMICS
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridworldSpec {
    pub width: usize,
    pub height: usize,
    pub initial_cell: usize,
    /// Cell id to the proposition that holds there.
    #[serde(default)]
    pub labels: BTreeMap<usize, String>,
    #[serde(default)]
    pub obstacles: Vec<usize>,
    #[serde(default = "default_dynamics")]
    pub dynamics: [[f64; 4]; 4],
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("invalid gridworld: {0}")]
    InvalidSpec(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl GridworldSpec {
    pub fn from_json(text: &str) -> Result<Self, GridError> {
        serde_json::from_str(text).map_err(|e| GridError::Parse(e.to_string()))
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    /// Destination of moving from `cell` in `heading`, or `cell` itself at
    /// the boundary.
    pub fn neighbor(&self, cell: usize, heading: usize) -> usize {
        let (r, c) = (cell / self.width, cell % self.width);
        match heading {
            0 if r > 0 => cell - self.width,
            1 if c + 1 < self.width => cell + 1,
            2 if r + 1 < self.height => cell + self.width,
            3 if c > 0 => cell - 1,
            _ => cell,
        }
    }

    fn validate(&self) -> Result<(), GridError> {
        let bad = |m: String| Err(GridError::InvalidSpec(m));
        let n = self.num_cells();
        if n == 0 {
            return bad("grid has no cells".into());
        }
        if self.initial_cell >= n {
            return bad(format!("initial cell {} is outside the grid", self.initial_cell));
        }
        if self.obstacles.contains(&self.initial_cell) {
            return bad(format!("initial cell {} is an obstacle", self.initial_cell));
        }
        if let Some(c) = self.obstacles.iter().chain(self.labels.keys()).find(|&&c| c >= n) {
            return bad(format!("cell {c} is outside the grid"));
        }
        for (i, row) in self.dynamics.iter().enumerate() {
            if row.iter().any(|p| !(*p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(format!("dynamics row {} is not a distribution", HEADINGS[i]));
            }
        }
        Ok(())
    }
}

pub fn build_gridworld(spec: &GridworldSpec) -> Result<LabeledMdp, GridError> {
    spec.validate()?;
    let n = spec.num_cells();
    let obstacles: BTreeSet<usize> = spec.obstacles.iter().copied().collect();
    let mut transitions = Vec::with_capacity(n);
    for cell in 0..n {
        let rows = (0..4)
            .map(|chosen| {
                if obstacles.contains(&cell) {
                    return vec![(cell, 1.0)];
                }
                let mut row: Vec<(usize, f64)> = Vec::new();
                for (realized, &p) in spec.dynamics[chosen].iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let to = spec.neighbor(cell, realized);
                    match row.iter_mut().find(|(s, _)| *s == to) {
                        Some(e) => e.1 += p,
                        None => row.push((to, p)),
                    }
                }
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        transitions.push(rows);
    }
    let mut initial = vec![0.0; n];
    initial[spec.initial_cell] = 1.0;
    let propositions: BTreeSet<String> = spec.labels.values().cloned().collect();
    let mut labels = vec![Vec::new(); n];
    for (&cell, prop) in &spec.labels {
        labels[cell] = vec![prop.clone()];
    }
    Ok(LabeledMdp {
        states: (0..n).map(|c| c.to_string()).collect(),
        actions: HEADINGS.iter().map(|h| h.to_string()).collect(),
        initial,
        transitions,
        propositions: propositions.into_iter().collect(),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::validate_mdp;

    fn open_grid(w: usize, h: usize) -> GridworldSpec {
        GridworldSpec {
            width: w,
            height: h,
            initial_cell: 0,
            labels: BTreeMap::new(),
            obstacles: vec![],
            dynamics: DEFAULT_DYNAMICS,
        }
    }

    #[test]
    fn north_row_of_the_table() {
        assert_eq!(DEFAULT_DYNAMICS[0], [0.8, 0.1, 0.0, 0.1]);
    }

    #[test]
    fn single_cell_stays_put() {
        let m = build_gridworld(&open_grid(1, 1)).unwrap();
        for a in 0..4 {
            assert_eq!(m.transitions[0][a], vec![(0, 1.0)]);
        }
    }

    #[test]
    fn centre_cell_heading_east() {
        let m = build_gridworld(&open_grid(5, 5)).unwrap();
        let e = m.action_index("E").unwrap();
        assert_eq!(m.prob(12, e, 13), 0.8);
        assert_eq!(m.prob(12, e, 7), 0.05);
        assert_eq!(m.prob(12, e, 17), 0.15);
        assert_eq!(m.prob(12, e, 11), 0.0);
    }

    #[test]
    fn boundary_mass_folds_onto_current_cell() {
        let m = build_gridworld(&open_grid(5, 5)).unwrap();
        let n = m.action_index("N").unwrap();
        // Top-left corner: N and W leave the grid.
        assert!((m.prob(0, n, 0) - 0.9).abs() < 1e-12);
        assert!((m.prob(0, n, 1) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn obstacles_absorb_and_can_be_entered() {
        let mut spec = open_grid(3, 1);
        spec.obstacles = vec![1];
        let m = build_gridworld(&spec).unwrap();
        let e = m.action_index("E").unwrap();
        assert_eq!(m.prob(0, e, 1), 0.8);
        for a in 0..4 {
            assert_eq!(m.transitions[1][a], vec![(1, 1.0)]);
        }
        assert!(validate_mdp(&m).is_empty());
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = open_grid(2, 2);
        spec.obstacles = vec![0];
        assert!(build_gridworld(&spec).is_err());
        let mut spec = open_grid(2, 2);
        spec.dynamics[1] = [0.5, 0.4, 0.0, 0.0];
        assert!(build_gridworld(&spec).is_err());
        let mut spec = open_grid(2, 2);
        spec.initial_cell = 4;
        assert!(build_gridworld(&spec).is_err());
    }

    #[test]
    fn every_row_is_stochastic() {
        let mut spec = open_grid(4, 3);
        spec.obstacles = vec![5, 6];
        spec.labels.insert(0, "A".into());
        let m = build_gridworld(&spec).unwrap();
        assert!(validate_mdp(&m).is_empty());
        assert_eq!(m.labels[0], ["A"]);
    }
}
