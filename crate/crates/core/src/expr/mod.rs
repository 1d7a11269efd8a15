//! Problem definitions: a piecewise-smooth expression forest over named
//! variables, with evaluation, smooth-selection Jacobians, and abs-node
//! activity queries.
//!
//! The only nonsmooth primitive is `abs`; `min`/`max` are desugared at parse
//! time, so every kink in a parsed map comes from an abs node. Everything
//! downstream (Clarke families, interval certification) keys off those nodes.

mod parse;
mod print;

pub use parse::{parse_problem, ParseError, ParseErrorKind};

use nalgebra::DMatrix;
use thiserror::Error;

/// Index of a node in a [`ProblemDef`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// Variable block: `x1..xn` are the unknowns, `y1..ym` the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    X,
    Y,
}

/// One node of the expression forest. Children always have smaller indices
/// than their parent, so arena order is a topological order.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Constant(f64),
    Var { block: Block, index: usize },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    /// Integer power with exponent >= 0.
    Pow(NodeId, u32),
    Neg(NodeId),
    Abs(NodeId),
}

/// A parsed problem: map F: R^n x R^m -> R^n, optionally with the matrix `A`
/// and shift `xi` of the algebraic form `A x = F(x) + xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDef {
    pub name: String,
    n: usize,
    m: usize,
    nodes: Vec<ExprNode>,
    components: Vec<NodeId>,
    abs_nodes: Vec<NodeId>,
    matrix_a: Option<DMatrix<f64>>,
    xi: Option<Vec<f64>>,
    cert_box: Option<Vec<(f64, f64)>>,
}

/// Activity of one abs node at a query point.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityRecord {
    pub node: NodeId,
    pub argument: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at node {}", (.0).0)]
    DivisionByZero(NodeId),
    #[error("dimension mismatch: expected x[{expected_x}], y[{expected_y}], got x[{got_x}], y[{got_y}]")]
    DimensionMismatch {
        expected_x: usize,
        expected_y: usize,
        got_x: usize,
        got_y: usize,
    },
}

impl ProblemDef {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        name: String,
        n: usize,
        m: usize,
        nodes: Vec<ExprNode>,
        components: Vec<NodeId>,
        matrix_a: Option<DMatrix<f64>>,
        xi: Option<Vec<f64>>,
        cert_box: Option<Vec<(f64, f64)>>,
    ) -> Self {
        let abs_nodes = nodes
            .iter()
            .enumerate()
            .filter_map(|(i, nd)| matches!(nd, ExprNode::Abs(_)).then_some(NodeId(i)))
            .collect();
        ProblemDef {
            name,
            n,
            m,
            nodes,
            components,
            abs_nodes,
            matrix_a,
            xi,
            cert_box,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nodes(&self) -> &[ExprNode] {
        &self.nodes
    }

    pub fn components(&self) -> &[NodeId] {
        &self.components
    }

    /// Abs nodes in arena order; their position in this slice is the
    /// "abs index" used by sign vectors and Jacobian-family directions.
    pub fn abs_nodes(&self) -> &[NodeId] {
        &self.abs_nodes
    }

    pub fn matrix_a(&self) -> Option<&DMatrix<f64>> {
        self.matrix_a.as_ref()
    }

    pub fn xi(&self) -> Option<&[f64]> {
        self.xi.as_deref()
    }

    /// Declared certification box over (x, y), n + m intervals.
    pub fn cert_box(&self) -> Option<&[(f64, f64)]> {
        self.cert_box.as_deref()
    }

    /// Certification box, falling back to [-10, 10]^(n+m).
    pub fn cert_box_or_default(&self) -> Vec<(f64, f64)> {
        self.cert_box
            .clone()
            .unwrap_or_else(|| vec![(-10.0, 10.0); self.n + self.m])
    }

    /// x-block slice of the certification box; the default start region for
    /// multistart solves.
    pub fn start_region(&self) -> Vec<(f64, f64)> {
        self.cert_box_or_default()[..self.n].to_vec()
    }

    /// Canonical text form; `parse_problem` of the output reproduces `self`.
    pub fn print(&self) -> String {
        print::print_problem(self)
    }

    /// Same problem with a different shift vector; lets algebraic mode sweep
    /// xi without reparsing.
    pub fn with_xi(&self, xi: Vec<f64>) -> ProblemDef {
        assert_eq!(xi.len(), self.n, "xi must have n entries");
        ProblemDef {
            xi: Some(xi),
            ..self.clone()
        }
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.n || y.len() != self.m {
            return Err(EvalError::DimensionMismatch {
                expected_x: self.n,
                expected_y: self.m,
                got_x: x.len(),
                got_y: y.len(),
            });
        }
        Ok(())
    }

    /// Evaluate F(x, y) componentwise.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.check_dims(x, y)?;
        let vals = self.node_values(x, y)?;
        Ok(self.components.iter().map(|&c| vals[c.0]).collect())
    }

    /// Values of every node at (x, y), in arena order.
    pub fn node_values(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut vals = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            vals[i] = match *node {
                ExprNode::Constant(c) => c,
                ExprNode::Var { block, index } => match block {
                    Block::X => x[index],
                    Block::Y => y[index],
                },
                ExprNode::Add(a, b) => vals[a.0] + vals[b.0],
                ExprNode::Sub(a, b) => vals[a.0] - vals[b.0],
                ExprNode::Mul(a, b) => vals[a.0] * vals[b.0],
                ExprNode::Div(a, b) => {
                    if vals[b.0] == 0.0 {
                        return Err(EvalError::DivisionByZero(NodeId(i)));
                    }
                    vals[a.0] / vals[b.0]
                }
                ExprNode::Pow(a, k) => vals[a.0].powi(k as i32),
                ExprNode::Neg(a) => -vals[a.0],
                ExprNode::Abs(a) => vals[a.0].abs(),
            };
        }
        Ok(vals)
    }

    /// Arguments of the abs nodes at (x, y), in abs-index order.
    pub fn abs_arguments(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, EvalError> {
        let vals = self.node_values(x, y)?;
        Ok(self
            .abs_nodes
            .iter()
            .map(|&id| match self.nodes[id.0] {
                ExprNode::Abs(a) => vals[a.0],
                _ => unreachable!(),
            })
            .collect())
    }

    /// Jacobian (x-block, n x n) of the smooth selection that replaces each
    /// abs node `|u|` by `s_i * u` with `signs[i] in {-1, +1}` (abs-index
    /// order). Equals the classical Jacobian wherever every abs argument is
    /// nonzero and the signs match the arguments.
    pub fn selection_jacobian(
        &self,
        x: &[f64],
        y: &[f64],
        signs: &[f64],
    ) -> Result<DMatrix<f64>, EvalError> {
        let full = self.selection_jacobian_full(x, y, signs)?;
        Ok(full.columns(0, self.n).into_owned())
    }

    /// Full selection Jacobian over the concatenated (x, y) variables,
    /// n x (n + m).
    pub fn selection_jacobian_full(
        &self,
        x: &[f64],
        y: &[f64],
        signs: &[f64],
    ) -> Result<DMatrix<f64>, EvalError> {
        self.check_dims(x, y)?;
        assert_eq!(signs.len(), self.abs_nodes.len(), "one sign per abs node");
        self.forward_jacobian(x, y, |abs_idx, _arg| AbsDiff {
            value_factor: signs[abs_idx],
            deriv: signs[abs_idx],
        })
    }

    /// Jacobian of F itself with the abs derivative at node i taken to be
    /// `slots[i]`, values left as true `|u|`. This is the family-member
    /// Jacobian J(t) used by the Clarke machinery.
    pub fn slot_jacobian_full(
        &self,
        x: &[f64],
        y: &[f64],
        slots: &[f64],
    ) -> Result<DMatrix<f64>, EvalError> {
        self.check_dims(x, y)?;
        assert_eq!(slots.len(), self.abs_nodes.len());
        self.forward_jacobian(x, y, |abs_idx, arg| AbsDiff {
            value_factor: if arg == 0.0 { 0.0 } else { arg.signum() },
            deriv: slots[abs_idx],
        })
    }

    /// One forward value+gradient sweep; `rule` decides how each abs node is
    /// linearized. `value_factor` multiplies the argument to produce the node
    /// value (sign of the argument for slot mode, the chosen sign for
    /// selection mode); `deriv` is the local derivative.
    fn forward_jacobian(
        &self,
        x: &[f64],
        y: &[f64],
        rule: impl Fn(usize, f64) -> AbsDiff,
    ) -> Result<DMatrix<f64>, EvalError> {
        let (_, grads) = self.forward_sweep(x, y, rule)?;
        let dim = self.n + self.m;
        let mut jac = DMatrix::zeros(self.components.len(), dim);
        for (row, &c) in self.components.iter().enumerate() {
            for d in 0..dim {
                jac[(row, d)] = grads[c.0][d];
            }
        }
        Ok(jac)
    }

    #[allow(clippy::type_complexity)]
    fn forward_sweep(
        &self,
        x: &[f64],
        y: &[f64],
        rule: impl Fn(usize, f64) -> AbsDiff,
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>), EvalError> {
        let dim = self.n + self.m;
        let mut vals = vec![0.0; self.nodes.len()];
        let mut grads = vec![vec![0.0; dim]; self.nodes.len()];
        let mut abs_counter = 0usize;
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                ExprNode::Constant(c) => vals[i] = c,
                ExprNode::Var { block, index } => {
                    let (v, col) = match block {
                        Block::X => (x[index], index),
                        Block::Y => (y[index], self.n + index),
                    };
                    vals[i] = v;
                    grads[i][col] = 1.0;
                }
                ExprNode::Add(a, b) => {
                    vals[i] = vals[a.0] + vals[b.0];
                    for d in 0..dim {
                        grads[i][d] = grads[a.0][d] + grads[b.0][d];
                    }
                }
                ExprNode::Sub(a, b) => {
                    vals[i] = vals[a.0] - vals[b.0];
                    for d in 0..dim {
                        grads[i][d] = grads[a.0][d] - grads[b.0][d];
                    }
                }
                ExprNode::Mul(a, b) => {
                    vals[i] = vals[a.0] * vals[b.0];
                    for d in 0..dim {
                        grads[i][d] = grads[a.0][d] * vals[b.0] + vals[a.0] * grads[b.0][d];
                    }
                }
                ExprNode::Div(a, b) => {
                    let den = vals[b.0];
                    if den == 0.0 {
                        return Err(EvalError::DivisionByZero(NodeId(i)));
                    }
                    vals[i] = vals[a.0] / den;
                    for d in 0..dim {
                        grads[i][d] = (grads[a.0][d] - vals[i] * grads[b.0][d]) / den;
                    }
                }
                ExprNode::Pow(a, k) => {
                    vals[i] = vals[a.0].powi(k as i32);
                    let factor = if k == 0 {
                        0.0
                    } else {
                        k as f64 * vals[a.0].powi(k as i32 - 1)
                    };
                    for d in 0..dim {
                        grads[i][d] = factor * grads[a.0][d];
                    }
                }
                ExprNode::Neg(a) => {
                    vals[i] = -vals[a.0];
                    for d in 0..dim {
                        grads[i][d] = -grads[a.0][d];
                    }
                }
                ExprNode::Abs(a) => {
                    let diff = rule(abs_counter, vals[a.0]);
                    abs_counter += 1;
                    vals[i] = diff.value_factor * vals[a.0];
                    for d in 0..dim {
                        grads[i][d] = diff.deriv * grads[a.0][d];
                    }
                }
            }
        }
        Ok((vals, grads))
    }

    /// Gradient (over the full (x, y) variables) of each abs node's argument,
    /// rows in abs-index order. Used to decide whether a kink is degenerate.
    pub fn abs_argument_gradients(
        &self,
        x: &[f64],
        y: &[f64],
    ) -> Result<Vec<Vec<f64>>, EvalError> {
        let args = self.abs_arguments(x, y)?;
        let (_, grads) = self.forward_sweep(x, y, |idx, _| AbsDiff {
            value_factor: if args[idx] == 0.0 { 0.0 } else { args[idx].signum() },
            deriv: if args[idx] == 0.0 { 0.0 } else { args[idx].signum() },
        })?;
        Ok(self
            .abs_nodes
            .iter()
            .map(|&id| match self.nodes[id.0] {
                ExprNode::Abs(a) => grads[a.0].clone(),
                _ => unreachable!(),
            })
            .collect())
    }

    /// Scale-aware default activity tolerance, 1e-10 * (1 + inf-norm of the
    /// query point).
    pub fn default_activity_tol(x: &[f64], y: &[f64]) -> f64 {
        let sup = x
            .iter()
            .chain(y.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        1e-10 * (1.0 + sup)
    }

    /// One record per abs node; active exactly when |argument| <= eta.
    pub fn activity(&self, x: &[f64], y: &[f64], eta: f64) -> Result<Vec<ActivityRecord>, EvalError> {
        assert!(eta >= 0.0, "activity tolerance must be nonnegative");
        let args = self.abs_arguments(x, y)?;
        Ok(self
            .abs_nodes
            .iter()
            .zip(args)
            .map(|(&node, argument)| ActivityRecord {
                node,
                argument,
                active: argument.abs() <= eta,
            })
            .collect())
    }

    /// Residual of the map actually being solved: F(x,y) in implicit mode,
    /// G(x) = A x - F(x) - xi in algebraic mode.
    pub fn residual(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, EvalError> {
        let f = self.eval(x, y)?;
        match &self.matrix_a {
            None => Ok(f),
            Some(a) => {
                let xi = self.xi.clone().unwrap_or_else(|| vec![0.0; self.n]);
                let mut out = vec![0.0; self.n];
                for i in 0..self.n {
                    let mut ax = 0.0;
                    for j in 0..self.n {
                        ax += a[(i, j)] * x[j];
                    }
                    out[i] = ax - f[i] - xi[i];
                }
                Ok(out)
            }
        }
    }
}

struct AbsDiff {
    value_factor: f64,
    deriv: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example1() -> ProblemDef {
        parse_problem(
            "n = 2\nm = 0\nA = [[-2, 1], [4, -3]]\nxi = [0, 0]\n\
             F1 = x1^3 + abs(x2)\nF2 = 4*x1 + abs(x2) + x2^3\n",
        )
        .unwrap()
    }

    fn fa(a: f64) -> ProblemDef {
        parse_problem(&format!(
            "n = 2\nm = 0\nF1 = x1 + {a}*abs(x1)\nF2 = x1^3 + x2\n"
        ))
        .unwrap()
    }

    #[test]
    fn identity_like_map_parses_to_sub() {
        let p = parse_problem("n = 1\nm = 1\nF1 = x1 - y1\n").unwrap();
        assert_eq!(p.n(), 1);
        assert_eq!(p.m(), 1);
        assert!(matches!(p.nodes()[p.components()[0].0], ExprNode::Sub(..)));
    }

    #[test]
    fn example1_has_two_abs_nodes_and_a() {
        let p = example1();
        assert_eq!(p.abs_nodes().len(), 2);
        assert!(p.matrix_a().is_some());
        assert_eq!(p.matrix_a().unwrap()[(1, 0)], 4.0);
    }

    #[test]
    fn eval_example1() {
        let p = example1();
        assert_eq!(p.eval(&[0.0, 0.0], &[]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(p.eval(&[1.0, 1.0], &[]).unwrap(), vec![2.0, 6.0]);
    }

    #[test]
    fn eval_fa_by_hand() {
        // (x + 0.5|x|, x^3 + y) at (-2, 1) = (-1, -7)
        let p = fa(0.5);
        assert_eq!(p.eval(&[-2.0, 1.0], &[]).unwrap(), vec![-1.0, -7.0]);
    }

    #[test]
    fn division_by_zero_reports_node() {
        let p = parse_problem("n = 2\nm = 0\nF1 = x1 / x2\nF2 = x2\n").unwrap();
        match p.eval(&[1.0, 0.0], &[]) {
            Err(EvalError::DivisionByZero(_)) => {}
            other => panic!("expected division by zero, got {other:?}"),
        }
    }

    #[test]
    fn selection_jacobian_smooth_branch() {
        let p = parse_problem("n = 1\nm = 0\nF1 = abs(x1)\n").unwrap();
        let j = p.selection_jacobian(&[3.0], &[], &[1.0]).unwrap();
        assert_eq!(j[(0, 0)], 1.0);
    }

    #[test]
    fn selection_jacobian_fa_off_kink() {
        // x-Jacobian [[1 + a*sign(x), 0], [3x^2, 1]] away from x = 0
        let p = fa(0.5);
        let j = p.selection_jacobian(&[-2.0, 1.0], &[], &[-1.0]).unwrap();
        assert_relative_eq!(j[(0, 0)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(j[(1, 0)], 12.0, epsilon = 1e-14);
        assert_relative_eq!(j[(1, 1)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn selection_jacobian_example1_at_1_0() {
        let p = example1();
        let j = p.selection_jacobian(&[1.0, 0.0], &[], &[1.0, 1.0]).unwrap();
        let expect = [[3.0, 1.0], [4.0, 1.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert_relative_eq!(j[(r, c)], expect[r][c], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn activity_detects_kinks() {
        let p = fa(0.5);
        let recs = p.activity(&[0.0, 5.0], &[], 1e-12).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].active);
        let recs = p.activity(&[1.0, 5.0], &[], 1e-12).unwrap();
        assert!(!recs[0].active);
    }

    #[test]
    fn activity_below_tolerance() {
        let p = example1();
        let recs = p.activity(&[5.0, 1e-13], &[], 1e-12).unwrap();
        assert!(recs.iter().all(|r| r.active));
    }

    #[test]
    fn residual_algebraic_mode() {
        // G(x) = Ax - F(x) - xi; at origin of example 1 everything vanishes.
        let p = example1();
        let g = p.residual(&[0.0, 0.0], &[]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }
}
