//! Small dense linear programs, solved with `minilp`.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

/// Largest constraint or bound violation accepted from the solver.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `row · x ≥ rhs`
    Ge,
    /// `row · x ≤ rhs`
    Le,
    /// `row · x = rhs`
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub row: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.row.iter().zip(x).map(|(a, b)| a * b).sum();
        match self.relation {
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Maximize `objective · x` subject to bounds and linear constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Per-variable `(lower, upper)`; infinite values leave a side open.
    pub bounds: Vec<(f64, f64)>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Worst constraint or bound violation of `x`, in the original scaling.
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// Names of the constraints an elastic relaxation had to loosen.
    Infeasible { conflicts: Vec<String> },
    Unbounded,
    /// The solver returned a point violating the problem by more than [`FEASIBILITY_TOL`].
    Inaccurate { violation: f64 },
}

impl std::fmt::Display for SolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveError::Infeasible { conflicts } => write!(f, "infeasible; conflicting constraints: {conflicts:?}"),
            SolveError::Unbounded => f.write_str("unbounded"),
            SolveError::Inaccurate { violation } => write!(f, "solution violates constraints by {violation:e}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            bounds: vec![(0.0, f64::INFINITY); n_vars],
            constraints: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, name: impl Into<String>, row: Vec<f64>, relation: Relation, rhs: f64) {
        debug_assert_eq!(row.len(), self.n_vars());
        self.constraints.push(Constraint {
            name: name.into(),
            row,
            relation,
            rhs,
        });
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0));
        let rows = self.constraints.iter().map(|c| c.violation(x));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// Solves the program; rows are scaled to unit max-norm before they reach
    /// the solver and the result is checked against the unscaled problem.
    pub fn solve(&self) -> Result<LpSolution, SolveError> {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &b)| problem.add_var(c, b))
            .collect();
        for c in &self.constraints {
            let scale = c.row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let mut expr = LinearExpr::empty();
            for (v, &a) in vars.iter().zip(&c.row) {
                if a != 0.0 {
                    expr.add(*v, a / scale);
                }
            }
            problem.add_constraint(expr, op(c.relation), c.rhs / scale);
        }
        match problem.solve() {
            Ok(sol) => {
                let x: Vec<f64> = vars.iter().map(|&v| sol[v]).collect();
                let max_violation = self.max_violation(&x);
                if max_violation > FEASIBILITY_TOL {
                    return Err(SolveError::Inaccurate { violation: max_violation });
                }
                Ok(LpSolution {
                    objective: self.value(&x),
                    x,
                    max_violation,
                })
            }
            Err(minilp::Error::Infeasible) => Err(SolveError::Infeasible {
                conflicts: self.conflicts(),
            }),
            Err(minilp::Error::Unbounded) => Err(SolveError::Unbounded),
        }
    }

    /// Constraints that carry slack in a minimum-total-slack elastic relaxation
    /// (bounds stay hard).
    pub fn conflicts(&self) -> Vec<String> {
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self.bounds.iter().map(|&b| problem.add_var(0.0, b)).collect();
        let mut slacks = Vec::new();
        for c in &self.constraints {
            let scale = c.row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let mut expr = LinearExpr::empty();
            for (v, &a) in vars.iter().zip(&c.row) {
                if a != 0.0 {
                    expr.add(*v, a / scale);
                }
            }
            let up = problem.add_var(1.0, (0.0, f64::INFINITY));
            let down = problem.add_var(1.0, (0.0, f64::INFINITY));
            match c.relation {
                Relation::Ge => expr.add(up, 1.0),
                Relation::Le => expr.add(down, -1.0),
                Relation::Eq => {
                    expr.add(up, 1.0);
                    expr.add(down, -1.0);
                }
            }
            slacks.push((up, down));
            problem.add_constraint(expr, op(c.relation), c.rhs / scale);
        }
        match problem.solve() {
            Ok(sol) => self
                .constraints
                .iter()
                .zip(&slacks)
                .filter(|(_, &(u, d))| sol[u] + sol[d] > 1e-9)
                .map(|(c, _)| c.name.clone())
                .collect(),
            Err(_) => vec!["variable bounds".into()],
        }
    }
}

fn op(r: Relation) -> ComparisonOp {
    match r {
        Relation::Ge => ComparisonOp::Ge,
        Relation::Le => ComparisonOp::Le,
        Relation::Eq => ComparisonOp::Eq,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_toy() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.bounds = vec![(0.0, 1.0); 2];
        lp.add("sum", vec![1.0, 1.0], Relation::Eq, 1.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_toy_names_conflict() {
        let mut lp = LinearProgram::new(1);
        lp.bounds = vec![(0.0, f64::INFINITY)];
        lp.add("x>=2", vec![1.0], Relation::Ge, 2.0);
        lp.add("x<=1", vec![1.0], Relation::Le, 1.0);
        match lp.solve() {
            Err(SolveError::Infeasible { conflicts }) => assert_eq!(conflicts.len(), 1),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn badly_scaled_rows() {
        // max x + y, 1e4·x + 1e4·y ≤ 1e4, 1e-3·x ≥ 1e-4
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add("cap", vec![1e4, 1e4], Relation::Le, 1e4);
        lp.add("floor", vec![1e-3, 0.0], Relation::Ge, 1e-4);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!(sol.x[0] >= 0.1 - 1e-9);
    }

    #[test]
    fn free_variable() {
        // max s subject to s ≤ -3
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY)];
        lp.add("cap", vec![1.0], Relation::Le, -3.0);
        assert!((lp.solve().unwrap().x[0] + 3.0).abs() < 1e-12);
    }
}
