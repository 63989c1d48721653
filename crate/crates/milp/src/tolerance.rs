/// Every numeric tolerance used by the solver lives here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Row and bound feasibility of reported points.
    pub feasibility: f64,
    /// Reduced-cost threshold and objective agreement.
    pub optimality: f64,
    /// Distance from {0, 1} below which a binary counts as integral.
    pub integrality: f64,
    /// Internal primal tolerance used while pivoting; tighter than
    /// `feasibility` so reported points clear the public threshold.
    pub primal: f64,
    /// Internal reduced-cost tolerance used while pivoting.
    pub dual: f64,
    /// Smallest pivot magnitude accepted in the ratio test.
    pub pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { feasibility: 1e-7, optimality: 1e-7, integrality: 1e-7, primal: 1e-9, dual: 1e-9, pivot: 1e-7 }
    }
}
