//! Simple positive and recursive fuzzy inference systems.
//!
//! All membership functions are the identity and there is no negation, so a
//! rule is just `φ(p1, .., pn) ⇒ c`: the conclusion must be at least the
//! aggregated premise values. Output variables may appear as premises. With
//! continuous non-decreasing aggregators, repeated max-updates from the
//! initial values climb monotonically to the least assignment satisfying
//! every rule.

mod rulefile;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use rulefile::parse_rules;

use crate::error::{Error, Result};
use crate::FxMap;

/// Rule aggregation function. All variants are continuous and
/// non-decreasing on `[0, 1]^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Aggregator {
    Min,
    /// Harmonic mean, extended by 0 when any argument is 0.
    HMean,
    /// Arithmetic mean times `α`, clamped to `[0, 1]`.
    AlphaMean(f64),
    /// Single premise passed through.
    Identity,
}

impl Aggregator {
    pub fn apply(&self, xs: &[f64]) -> f64 {
        match *self {
            Aggregator::Min => min(xs),
            Aggregator::HMean => hmean(xs),
            Aggregator::AlphaMean(alpha) => alpha_mean(alpha, xs),
            Aggregator::Identity => xs.first().copied().unwrap_or(0.0),
        }
    }

    pub fn check_arity(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::NoPremises);
        }
        if matches!(self, Aggregator::Identity) && n != 1 {
            return Err(Error::IdentityArity(n));
        }
        if let Aggregator::AlphaMean(alpha) = self {
            if !(alpha.is_finite() && *alpha >= 1.0) {
                return Err(Error::Config(alloc::format!("alpha must be >= 1, got {alpha}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregator::Min => f.write_str("min"),
            Aggregator::HMean => f.write_str("hmean"),
            Aggregator::AlphaMean(a) => write!(f, "amean[{a}]"),
            Aggregator::Identity => f.write_str("id"),
        }
    }
}

pub fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min).min(1.0)
}

pub fn hmean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut inv = 0.0;
    for &x in xs {
        if x <= 0.0 {
            return 0.0;
        }
        inv += 1.0 / x;
    }
    xs.len() as f64 / inv
}

pub fn alpha_mean(alpha: f64, xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (alpha * mean).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Premise {
    Var(VarId),
    Const(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub role: Role,
    /// Given value for inputs, lower bound for outputs.
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub premises: Vec<Premise>,
    pub aggregator: Aggregator,
    pub conclusion: VarId,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fis {
    variables: Vec<Variable>,
    rules: Vec<Rule>,
    names: FxMap<String, VarId>,
}

fn check_unit(v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::OutOfRange(v))
    }
}

impl Fis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_input(&mut self, name: &str, value: f64) -> Result<VarId> {
        self.push_var(name, Role::Input, check_unit(value)?)
    }

    pub fn add_output(&mut self, name: &str) -> Result<VarId> {
        self.push_var(name, Role::Output, 0.0)
    }

    pub fn add_output_with_initial(&mut self, name: &str, initial: f64) -> Result<VarId> {
        self.push_var(name, Role::Output, check_unit(initial)?)
    }

    fn push_var(&mut self, name: &str, role: Role, initial: f64) -> Result<VarId> {
        if let Some(&id) = self.names.get(name) {
            let var = &mut self.variables[id.0];
            var.role = role;
            var.initial = initial;
            return Ok(id);
        }
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            name: name.into(),
            role,
            initial,
        });
        self.names.insert(name.into(), id);
        Ok(id)
    }

    pub fn add_rule(&mut self, premises: Vec<Premise>, aggregator: Aggregator, conclusion: VarId) -> Result<()> {
        aggregator.check_arity(premises.len())?;
        let target = self
            .variables
            .get(conclusion.0)
            .ok_or_else(|| Error::UnknownVariable(alloc::format!("#{}", conclusion.0)))?;
        if target.role != Role::Output {
            return Err(Error::NotOutput(target.name.clone()));
        }
        for p in &premises {
            match *p {
                Premise::Const(c) => {
                    check_unit(c)?;
                }
                Premise::Var(v) if v.0 >= self.variables.len() => {
                    return Err(Error::UnknownVariable(alloc::format!("#{}", v.0)));
                }
                Premise::Var(_) => {}
            }
        }
        self.rules.push(Rule {
            premises,
            aggregator,
            conclusion,
        });
        Ok(())
    }

    pub fn variable(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn initial_values(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.initial).collect()
    }

    /// Copy with rules in the given order.
    pub fn with_rule_order(&self, order: &[usize]) -> Fis {
        let mut out = self.clone();
        out.rules = order.iter().map(|&i| self.rules[i].clone()).collect();
        out
    }
}

impl fmt::Display for Fis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.variables {
            match v.role {
                Role::Input => writeln!(f, "input {} = {}", v.name, v.initial)?,
                Role::Output if v.initial > 0.0 => writeln!(f, "init {} = {}", v.name, v.initial)?,
                Role::Output => writeln!(f, "output {}", v.name)?,
            }
        }
        for r in &self.rules {
            write!(f, "{} <= {}(", self.variables[r.conclusion.0].name, r.aggregator)?;
            for (i, p) in r.premises.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                match p {
                    Premise::Var(v) => f.write_str(&self.variables[v.0].name)?,
                    Premise::Const(c) => write!(f, "{c:?}")?,
                }
            }
            writeln!(f, ")")?;
        }
        Ok(())
    }
}

/// Aggregated premise values of `rule` under `values`.
pub fn firing_strength(rule: &Rule, values: &[f64]) -> f64 {
    let xs: Vec<f64> = rule
        .premises
        .iter()
        .map(|p| match *p {
            Premise::Var(v) => values[v.0],
            Premise::Const(c) => c,
        })
        .collect();
    rule.aggregator.apply(&xs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop once a full sweep changes no variable by this much or more.
    pub convergence_eps: f64,
    pub max_sweeps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            convergence_eps: 1e-9,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub values: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl Assignment {
    pub fn get(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}

/// Least solution by in-place max-updates in rule order.
pub fn solve(fis: &Fis, opts: &SolveOptions) -> Assignment {
    solve_inner(fis, opts, None)
}

/// As [`solve`], also returning the value vector after every sweep.
pub fn solve_traced(fis: &Fis, opts: &SolveOptions) -> (Assignment, Vec<Vec<f64>>) {
    let mut trace = Vec::new();
    let a = solve_inner(fis, opts, Some(&mut trace));
    (a, trace)
}

fn solve_inner(fis: &Fis, opts: &SolveOptions, mut trace: Option<&mut Vec<Vec<f64>>>) -> Assignment {
    let mut values = fis.initial_values();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for rule in &fis.rules {
            let s = firing_strength(rule, &values);
            let slot = &mut values[rule.conclusion.0];
            if s > *slot {
                max_change = max_change.max(s - *slot);
                *slot = s;
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(values.clone());
        }
        if max_change < opts.convergence_eps {
            converged = true;
            break;
        }
    }
    Assignment {
        values,
        sweeps,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Counterexample {
    /// A rule's strength exceeds its conclusion's value.
    Unsatisfied { variable: String, value: f64, strength: f64 },
    /// The value is above what iteration from the least element reaches.
    NotLeast { variable: String, value: f64, reference: f64 },
    /// The value is below the reference iteration, so the check cannot
    /// confirm it against the bound.
    BelowReference { variable: String, value: f64, reference: f64 },
}

impl Counterexample {
    pub fn variable(&self) -> &str {
        match self {
            Counterexample::Unsatisfied { variable, .. }
            | Counterexample::NotLeast { variable, .. }
            | Counterexample::BelowReference { variable, .. } => variable,
        }
    }
}

/// Checks that `assignment` satisfies every rule and agrees, within
/// `grid_step`, with a synchronous iteration started from the initial
/// values. Synchronous iterates are lower bounds on the least fixed point,
/// so a value above the reference by more than `grid_step` is not least.
pub fn verify_least_fixed_point(fis: &Fis, assignment: &Assignment, grid_step: f64) -> core::result::Result<(), Counterexample> {
    let values = &assignment.values;
    let reference = synchronous_iteration(fis, 1e-13, 1_000_000);
    for (i, var) in fis.variables.iter().enumerate() {
        if values[i] > reference[i] + grid_step {
            return Err(Counterexample::NotLeast {
                variable: var.name.clone(),
                value: values[i],
                reference: reference[i],
            });
        }
    }
    for rule in &fis.rules {
        let s = firing_strength(rule, values);
        let v = values[rule.conclusion.0];
        if s > v + grid_step {
            return Err(Counterexample::Unsatisfied {
                variable: fis.variables[rule.conclusion.0].name.clone(),
                value: v,
                strength: s,
            });
        }
    }
    for (i, var) in fis.variables.iter().enumerate() {
        let floor = reference[i].max(var.initial);
        if floor > values[i] + grid_step {
            return Err(Counterexample::BelowReference {
                variable: var.name.clone(),
                value: values[i],
                reference: floor,
            });
        }
    }
    Ok(())
}

/// Jacobi-style iteration: every rule reads the previous sweep's vector.
fn synchronous_iteration(fis: &Fis, eps: f64, max_sweeps: usize) -> Vec<f64> {
    let mut current = fis.initial_values();
    for _ in 0..max_sweeps {
        let mut next = current.clone();
        for rule in &fis.rules {
            let s = firing_strength(rule, &current);
            let slot = &mut next[rule.conclusion.0];
            *slot = slot.max(s);
        }
        let change = next
            .iter()
            .zip(&current)
            .map(|(a, b)| a - b)
            .fold(0.0, f64::max);
        current = next;
        if change < eps {
            break;
        }
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn aggregator_values() {
        assert_eq!(Aggregator::Min.apply(&[0.9, 0.3]), 0.3);
        assert!((Aggregator::HMean.apply(&[1.0, 0.5]) - 2.0 / 3.0).abs() < 1e-15);
        assert!((Aggregator::AlphaMean(3.0).apply(&[0.5, 0.1, 0.0]) - 0.6).abs() < 1e-15);
        assert_eq!(Aggregator::AlphaMean(3.0).apply(&[0.9, 0.9]), 1.0);
        assert_eq!(Aggregator::HMean.apply(&[0.0, 1.0]), 0.0);
        assert_eq!(Aggregator::Identity.apply(&[0.25]), 0.25);
    }

    #[test]
    fn identity_arity_checked() {
        let mut fis = Fis::new();
        let x = fis.add_output("x").unwrap();
        let err = fis.add_rule(vec![Premise::Const(0.1), Premise::Const(0.2)], Aggregator::Identity, x);
        assert_eq!(err, Err(Error::IdentityArity(2)));
        assert_eq!(fis.add_rule(vec![], Aggregator::Min, x), Err(Error::NoPremises));
        assert!(fis.add_rule(vec![Premise::Const(1.5)], Aggregator::Identity, x).is_err());
        let a = fis.add_input("a", 0.3).unwrap();
        assert!(matches!(
            fis.add_rule(vec![Premise::Const(0.1)], Aggregator::Identity, a),
            Err(Error::NotOutput(_))
        ));
    }

    #[test]
    fn no_rules_gives_zero() {
        let mut fis = Fis::new();
        let x = fis.add_output("x").unwrap();
        let a = solve(&fis, &SolveOptions::default());
        assert!(a.converged);
        assert_eq!(a.get(x), 0.0);
    }

    #[test]
    fn constant_rule() {
        let mut fis = Fis::new();
        let x = fis.add_output("x").unwrap();
        fis.add_rule(vec![Premise::Const(0.7)], Aggregator::Identity, x).unwrap();
        assert_eq!(solve(&fis, &SolveOptions::default()).get(x), 0.7);
    }

    fn three_rule() -> (Fis, VarId, VarId) {
        let mut fis = Fis::new();
        let x = fis.add_output("x").unwrap();
        let y = fis.add_output("y").unwrap();
        fis.add_rule(vec![Premise::Const(0.5)], Aggregator::Identity, x).unwrap();
        fis.add_rule(vec![Premise::Var(x)], Aggregator::Identity, y).unwrap();
        fis.add_rule(vec![Premise::Var(y)], Aggregator::Identity, x).unwrap();
        (fis, x, y)
    }

    #[test]
    fn cycle_reaches_half() {
        let (fis, x, y) = three_rule();
        let a = solve(&fis, &SolveOptions::default());
        assert_eq!((a.get(x), a.get(y)), (0.5, 0.5));
        assert_eq!(verify_least_fixed_point(&fis, &a, 1e-6), Ok(()));
    }

    #[test]
    fn inflated_output_rejected() {
        let (fis, _, y) = three_rule();
        let mut a = solve(&fis, &SolveOptions::default());
        a.values[y.0] += 0.2;
        let err = verify_least_fixed_point(&fis, &a, 1e-6).unwrap_err();
        assert!(matches!(err, Counterexample::NotLeast { .. }));
        assert_eq!(err.variable(), "y");
    }

    #[test]
    fn deflated_output_rejected() {
        let (fis, x, _) = three_rule();
        let mut a = solve(&fis, &SolveOptions::default());
        a.values[x.0] = 0.1;
        let err = verify_least_fixed_point(&fis, &a, 1e-6).unwrap_err();
        assert!(matches!(err, Counterexample::Unsatisfied { .. }));
    }

    #[test]
    fn sweep_cap_reports_not_converged() {
        // x <= hmean(x, 1) seeded at 0.01 climbs toward 1 geometrically
        let mut fis = Fis::new();
        let x = fis.add_output_with_initial("x", 0.01).unwrap();
        fis.add_rule(vec![Premise::Var(x), Premise::Const(1.0)], Aggregator::HMean, x).unwrap();
        let a = solve(&fis, &SolveOptions { convergence_eps: 1e-9, max_sweeps: 3 });
        assert!(!a.converged);
        assert_eq!(a.sweeps, 3);
        let a = solve(&fis, &SolveOptions::default());
        assert!(a.converged);
        assert!((a.get(x) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn seeding_equivalence() {
        let mut seeded = Fis::new();
        let x = seeded.add_output_with_initial("x", 0.4).unwrap();
        let y = seeded.add_output("y").unwrap();
        seeded.add_rule(vec![Premise::Var(x), Premise::Const(0.9)], Aggregator::HMean, y).unwrap();

        let mut ruled = Fis::new();
        let x2 = ruled.add_output("x").unwrap();
        let y2 = ruled.add_output("y").unwrap();
        ruled.add_rule(vec![Premise::Const(0.4)], Aggregator::Identity, x2).unwrap();
        ruled.add_rule(vec![Premise::Var(x2), Premise::Const(0.9)], Aggregator::HMean, y2).unwrap();

        let a = solve(&seeded, &SolveOptions::default());
        let b = solve(&ruled, &SolveOptions::default());
        assert_eq!(a.get(x), b.get(x2));
        assert_eq!(a.get(y), b.get(y2));
    }
}
