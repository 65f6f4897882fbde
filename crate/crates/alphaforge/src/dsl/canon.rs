//! Deterministic canonical printing.
//!
//! Canonical form: no whitespace, uppercase operator names, `$`-prefixed
//! lowercase features, shortest round-trip decimals, and no parentheses
//! beyond precedence needs. `parse(canonicalize(e))` is structurally equal
//! to `e` for any parser-producible tree.

use super::ops::ParamValue;
use super::Expr;

pub fn canonicalize(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

/// Precedence of an expression when printed: atoms bind tightest.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Apply { op, .. } => op.infix.map(|(_, p)| p).unwrap_or(4),
        _ => 4,
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Feature(f) => {
            out.push('$');
            out.push_str(f.name());
        }
        Expr::Const(v) => out.push_str(&format_real(*v)),
        Expr::Apply {
            op,
            children,
            params,
        } => match op.infix {
            Some((sym, prec)) if op.arity == 2 => {
                let right_assoc_breaks = matches!(op.name, "SUB" | "DIV");
                write_child(&children[0], prec, false, out);
                out.push_str(sym);
                write_child(&children[1], prec, right_assoc_breaks, out);
            }
            Some((sym, prec)) => {
                // Unary minus; a negated literal folds into the constant,
                // matching how the parser reads it back.
                if let Expr::Const(v) = &children[0] {
                    out.push_str(&format_real(-v));
                } else {
                    out.push_str(sym);
                    write_child(&children[0], prec, false, out);
                }
            }
            None => {
                out.push_str(op.name);
                out.push('(');
                let mut first = true;
                for c in children {
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    write_expr(c, out);
                }
                for p in params {
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    match p {
                        ParamValue::Window(w) => out.push_str(&w.to_string()),
                        ParamValue::Real(r) => out.push_str(&format_real(*r)),
                    }
                }
                out.push(')');
            }
        },
    }
}

fn write_child(child: &Expr, parent_prec: u8, strict: bool, out: &mut String) {
    let cp = precedence(child);
    let needs_parens = cp < parent_prec || (strict && cp == parent_prec);
    if needs_parens {
        out.push('(');
        write_expr(child, out);
        out.push(')');
    } else {
        write_expr(child, out);
    }
}

/// Shortest decimal that round-trips through `f64` parsing.
fn format_real(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use crate::dsl::parse;

    use super::*;

    fn canon(src: &str) -> String {
        canonicalize(&parse(src).unwrap())
    }

    #[test]
    fn normalizes_case_and_whitespace() {
        assert_eq!(canon("ts_mean( $CLOSE ,5 )"), "TS_MEAN($close,5)");
    }

    #[test]
    fn atomic_leaf() {
        assert_eq!(canonicalize(&Expr::Feature(crate::dsl::FeatureField::Close)), "$close");
    }

    #[test]
    fn case_study_expression_only_loses_whitespace() {
        let src = "RANK(TS_CORR(DELTA($close, 1)/$close, DELTA($volume, 1)/$volume, 20) \
                   * TS_MEAN(($close - $open)/$close, 5))";
        let expected: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        assert_eq!(canon(src), expected);
    }

    #[test]
    fn precedence_parentheses() {
        assert_eq!(canon("($open+$close)*$low"), "($open+$close)*$low");
        assert_eq!(canon("$open+$close*$low"), "$open+$close*$low");
        assert_eq!(canon("$open-($close-$low)"), "$open-($close-$low)");
        assert_eq!(canon("($open-$close)-$low"), "$open-$close-$low");
        assert_eq!(canon("$open/($close*$low)"), "$open/($close*$low)");
    }

    #[test]
    fn unary_minus() {
        assert_eq!(canon("-$close"), "-$close");
        assert_eq!(canon("-($open+$close)"), "-($open+$close)");
        assert_eq!(canon("-$open*$close"), "-$open*$close");
        assert_eq!(canon("-3"), "-3");
        assert_eq!(canon("1 - -3"), "1--3");
    }

    #[test]
    fn fixpoint_on_reparse() {
        for src in [
            "TS_MEAN($close,5)",
            "-$open*$close+RANK($volume)/2",
            "WHERE(GT($close,$open),$high,$low)",
            "TS_QUANTILE($close,10,0.25)",
            "BB_UPPER($close,20,2.5)",
        ] {
            let once = canon(src);
            assert_eq!(canon(&once), once, "fixpoint failed for {src}");
        }
    }
}
