//! Canonical problem printer; `parse_problem(print_problem(p))` reproduces
//! the expression structure exactly.

use super::{Block, ExprNode, NodeId, ProblemDef};
use std::fmt::Write;

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(node: &ExprNode) -> u8 {
    match node {
        ExprNode::Add(..) | ExprNode::Sub(..) => PREC_ADD,
        ExprNode::Mul(..) | ExprNode::Div(..) => PREC_MUL,
        ExprNode::Neg(..) => PREC_NEG,
        ExprNode::Pow(..) => PREC_POW,
        ExprNode::Constant(c) if *c < 0.0 => PREC_NEG,
        _ => PREC_ATOM,
    }
}

pub fn print_problem(p: &ProblemDef) -> String {
    let mut out = String::new();
    if p.name != "unnamed" {
        let _ = writeln!(out, "name = {}", p.name);
    }
    let _ = writeln!(out, "n = {}", p.n());
    let _ = writeln!(out, "m = {}", p.m());
    if let Some(a) = p.matrix_a() {
        let rows: Vec<String> = (0..a.nrows())
            .map(|r| {
                let cells: Vec<String> = (0..a.ncols()).map(|c| format!("{:?}", a[(r, c)])).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect();
        let _ = writeln!(out, "A = [{}]", rows.join(","));
    }
    if let Some(xi) = p.xi() {
        let cells: Vec<String> = xi.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "xi = [{}]", cells.join(", "));
    }
    if let Some(b) = p.cert_box() {
        let segs: Vec<String> = b.iter().map(|(lo, hi)| format!("[{lo:?},{hi:?}]")).collect();
        let _ = writeln!(out, "box = {}", segs.join("x"));
    }
    for (k, &root) in p.components().iter().enumerate() {
        let mut expr = String::new();
        print_node(p, root, &mut expr);
        let _ = writeln!(out, "F{} = {}", k + 1, expr);
    }
    out
}

fn print_node(p: &ProblemDef, id: NodeId, out: &mut String) {
    let node = &p.nodes()[id.0];
    match node {
        ExprNode::Constant(c) => {
            let _ = write!(out, "{c:?}");
        }
        ExprNode::Var { block, index } => {
            let prefix = match block {
                Block::X => 'x',
                Block::Y => 'y',
            };
            let _ = write!(out, "{}{}", prefix, index + 1);
        }
        ExprNode::Add(a, b) => binary(p, *a, *b, " + ", PREC_ADD, out),
        ExprNode::Sub(a, b) => binary(p, *a, *b, " - ", PREC_ADD, out),
        ExprNode::Mul(a, b) => binary(p, *a, *b, "*", PREC_MUL, out),
        ExprNode::Div(a, b) => binary(p, *a, *b, "/", PREC_MUL, out),
        ExprNode::Pow(a, k) => {
            child(p, *a, PREC_POW, true, out);
            let _ = write!(out, "^{k}");
        }
        ExprNode::Neg(a) => {
            out.push('-');
            child(p, *a, PREC_NEG, true, out);
        }
        ExprNode::Abs(a) => {
            out.push_str("abs(");
            print_node(p, *a, out);
            out.push(')');
        }
    }
}

fn binary(p: &ProblemDef, a: NodeId, b: NodeId, op: &str, prec: u8, out: &mut String) {
    child(p, a, prec, false, out);
    out.push_str(op);
    // Right operand of a same-precedence operator needs parens to keep the
    // parse left-associated onto the original structure.
    child(p, b, prec, true, out);
}

fn child(p: &ProblemDef, id: NodeId, parent_prec: u8, strict: bool, out: &mut String) {
    let cp = precedence(&p.nodes()[id.0]);
    let need = if strict { cp <= parent_prec } else { cp < parent_prec };
    if need {
        out.push('(');
        print_node(p, id, out);
        out.push(')');
    } else {
        print_node(p, id, out);
    }
}
