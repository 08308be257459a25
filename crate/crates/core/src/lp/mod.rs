//! Exact feasibility of bounded integer linear systems.

mod bnb;
mod lattice;
mod simplex;

use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::interval::{integer, Rational};

/// Default number of branch-and-bound nodes before giving up.
pub const DEFAULT_NODE_LIMIT: u64 = 1_000_000;

/// Largest number of points the exhaustive solver visits.
pub const BRUTEFORCE_LIMIT: u128 = 10_000_000;

/// An integer variable with finite bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
}

/// `lo <= sum(coef * x) <= hi`; a missing side is unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coefficients: Vec<(usize, Rational)>,
    pub lo: Option<Rational>,
    pub hi: Option<Rational>,
}

impl Constraint {
    pub fn activity(&self, x: &[i64]) -> Rational {
        self.coefficients
            .iter()
            .fold(Rational::zero(), |acc, (i, c)| acc + c * integer(x[*i]))
    }

    pub fn is_satisfied_by(&self, x: &[i64]) -> bool {
        let a = self.activity(x);
        self.lo.as_ref().is_none_or(|lo| &a >= lo) && self.hi.as_ref().is_none_or(|hi| &a <= hi)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearSystem {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("variable {name:?} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds {
        name: String,
        lower: i64,
        upper: i64,
    },
    #[error("constraint {constraint} refers to undeclared variable {index}")]
    UndeclaredVariable { constraint: usize, index: usize },
    #[error("exhaustive search over {points} points exceeds the limit of {limit}")]
    TooLarge { points: u128, limit: u128 },
}

impl LinearSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable and returns its index.
    pub fn add_variable(&mut self, name: impl Into<String>, lower: i64, upper: i64) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        coefficients: Vec<(usize, Rational)>,
        lo: Option<Rational>,
        hi: Option<Rational>,
    ) {
        self.constraints.push(Constraint {
            coefficients,
            lo,
            hi,
        });
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for v in &self.variables {
            if v.lower > v.upper {
                return Err(LpError::InvertedBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        for (ci, c) in self.constraints.iter().enumerate() {
            if let Some(&(index, _)) = c
                .coefficients
                .iter()
                .find(|(i, _)| *i >= self.variables.len())
            {
                return Err(LpError::UndeclaredVariable {
                    constraint: ci,
                    index,
                });
            }
        }
        Ok(())
    }

    /// Whether `x` satisfies every bound and constraint, exactly.
    pub fn is_satisfied_by(&self, x: &[i64]) -> bool {
        x.len() == self.variables.len()
            && self
                .variables
                .iter()
                .zip(x)
                .all(|(v, &xi)| v.lower <= xi && xi <= v.upper)
            && self.constraints.iter().all(|c| c.is_satisfied_by(x))
    }
}

/// An integer point, in variable declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<i64>,
}

impl Assignment {
    pub fn get(&self, system: &LinearSystem, name: &str) -> Option<i64> {
        system
            .variables
            .iter()
            .position(|v| v.name == name)
            .map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeasibilityResult {
    Feasible(Assignment),
    Infeasible,
    /// The node budget ran out before a decision.
    Indeterminate {
        nodes: u64,
    },
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible(_))
    }
}

impl fmt::Display for FeasibilityResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityResult::Feasible(a) => write!(f, "feasible {:?}", a.values),
            FeasibilityResult::Infeasible => f.write_str("infeasible"),
            FeasibilityResult::Indeterminate { nodes } => {
                write!(f, "indeterminate after {nodes} nodes")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub node_limit: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

/// A decision together with the number of branch-and-bound nodes used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub result: FeasibilityResult,
    pub nodes: u64,
}

/// Decides whether the system has an integer solution, by branch and bound
/// over an exact rational simplex. A returned witness has been rechecked
/// against the original constraints.
pub fn solve_feasibility(
    system: &LinearSystem,
    options: &SolverOptions,
) -> Result<Solution, LpError> {
    system.validate()?;
    Ok(bnb::solve(system, options))
}

/// Decides feasibility by visiting every integer point within the bounds.
pub fn solve_feasibility_bruteforce(system: &LinearSystem) -> Result<FeasibilityResult, LpError> {
    system.validate()?;
    let points = system
        .variables
        .iter()
        .map(|v| (v.upper - v.lower + 1) as u128)
        .fold(1u128, u128::saturating_mul);
    if points > BRUTEFORCE_LIMIT {
        return Err(LpError::TooLarge {
            points,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let mut x: Vec<i64> = system.variables.iter().map(|v| v.lower).collect();
    loop {
        if system.constraints.iter().all(|c| c.is_satisfied_by(&x)) {
            return Ok(FeasibilityResult::Feasible(Assignment { values: x }));
        }
        // Odometer step, last variable fastest.
        let mut i = x.len();
        loop {
            if i == 0 {
                return Ok(FeasibilityResult::Infeasible);
            }
            i -= 1;
            if x[i] < system.variables[i].upper {
                x[i] += 1;
                break;
            }
            x[i] = system.variables[i].lower;
        }
    }
}
