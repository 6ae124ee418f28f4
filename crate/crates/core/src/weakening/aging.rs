use crate::analysis::LoopInfo;
use crate::frontend::{BinOp, Expr, ExprKind, Stmt, StmtKind};

/// Expressions for the value `variable` had one iteration earlier.
///
/// The loop body is scanned flow-insensitively (branches and nested loops
/// included) for self-updates `v := v + c`, `v := c + v` and `v := v - c`
/// where `c` does not depend on the loop's targets; each contributes the
/// inverse `v - c` or `v + c`. Any other update contributes nothing.
pub fn aging(variable: &str, lp: &LoopInfo) -> Vec<Expr> {
    let mut out: Vec<Expr> = Vec::new();
    scan(&lp.body, variable, lp, &mut out);
    out
}

fn scan(stmts: &[Stmt], v: &str, lp: &LoopInfo, out: &mut Vec<Expr>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Assign(x, rhs) if x == v => {
                if let Some(prev) = invert(v, rhs, lp) {
                    if !out.contains(&prev) {
                        out.push(prev);
                    }
                }
            }
            StmtKind::If { then_block, else_block, .. } => {
                scan(then_block, v, lp, out);
                scan(else_block, v, lp, out);
            }
            StmtKind::While { body, .. } => scan(body, v, lp, out),
            _ => {}
        }
    }
}

fn loop_constant(c: &Expr, lp: &LoopInfo) -> bool {
    c.free_vars().iter().all(|x| !lp.targets.contains(x))
}

fn invert(v: &str, rhs: &Expr, lp: &LoopInfo) -> Option<Expr> {
    let ExprKind::Binary(op, l, r) = &rhs.kind else {
        return None;
    };
    let var = Expr::var(v);
    match op {
        BinOp::Add if l.as_var() == Some(v) && loop_constant(r, lp) => {
            Some(Expr::binary(BinOp::Sub, var, strip(r)))
        }
        BinOp::Add if r.as_var() == Some(v) && loop_constant(l, lp) => {
            Some(Expr::binary(BinOp::Sub, var, strip(l)))
        }
        BinOp::Sub if l.as_var() == Some(v) && loop_constant(r, lp) => {
            Some(Expr::binary(BinOp::Add, var, strip(r)))
        }
        _ => None,
    }
}

/// Copy without source locations, so generated formulas print uniformly.
fn strip(e: &Expr) -> Expr {
    let mut c = e.clone();
    c.span = Default::default();
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::all_loops;
    use crate::frontend::{parse_program, print_expr};

    fn aged(body: &str, v: &str) -> Vec<String> {
        let src = format!(
            "procedure p(n: int, k: int) {{ var i, x: int; while (i < n) {{ {body} }} }}"
        );
        let prog = parse_program(&src).unwrap();
        let loops = all_loops(&prog, &prog.procedures[0]).unwrap();
        aging(v, &loops[0]).iter().map(print_expr).collect()
    }

    #[test]
    fn increment_inverts_to_decrement() {
        assert_eq!(aged("i := i + 1;", "i"), ["i - 1"]);
        assert_eq!(aged("i := 1 + i;", "i"), ["i - 1"]);
        assert_eq!(aged("i := i - k;", "i"), ["i + k"]);
    }

    #[test]
    fn one_expression_per_path() {
        assert_eq!(
            aged("if (i == 0) { i := i + 1; } else { i := i + 2; i := i + 1; }", "i"),
            ["i - 1", "i - 2"]
        );
    }

    #[test]
    fn non_invertible_updates_are_ignored() {
        assert!(aged("havoc x; i := i + 1;", "x").is_empty());
        assert!(aged("x := x + i; i := i + 1;", "x").is_empty());
        assert!(aged("i := 2 * i;", "i").is_empty());
    }
}
