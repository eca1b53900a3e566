use super::ast::{Pattern, SpatialFormula, SpatialTerm};
use super::lexer::is_plain_ident;

/// Canonical concrete syntax. `parse(pretty_print(p)) == p` for every
/// well-scoped pattern.
pub fn pretty_print(p: &Pattern) -> String {
    let mut out = String::new();
    pattern(p, 0, true, &mut Vec::new(), &mut out);
    out
}

/// Formula text as it appears between brackets. `scope` lists the variables
/// bound at this point; class names that collide with them are quoted.
pub fn formula_to_string(f: &SpatialFormula, scope: &[&str]) -> String {
    let mut out = String::new();
    formula(f, 0, scope, &mut out);
    out
}

fn pattern_prec(p: &Pattern) -> u8 {
    match p {
        Pattern::Alt(..) | Pattern::Quantified { .. } => 0,
        Pattern::Concat(..) => 1,
        Pattern::Star(..) => 2,
        Pattern::Frame(_) => 3,
    }
}

// `tail` is true when nothing follows `p` up to the end of the enclosing
// group, which is where a quantifier body may run without parentheses.
fn pattern<'a>(p: &'a Pattern, min_prec: u8, tail: bool, scope: &mut Vec<&'a str>, out: &mut String) {
    let quant_needs_group = matches!(p, Pattern::Quantified { .. }) && !(tail && min_prec <= 2);
    if pattern_prec(p) < min_prec && !matches!(p, Pattern::Quantified { .. }) || quant_needs_group {
        out.push('(');
        pattern(p, 0, true, scope, out);
        out.push(')');
        return;
    }
    match p {
        Pattern::Alt(a, b) => {
            pattern(a, 0, false, scope, out);
            out.push_str(" | ");
            pattern(b, 1, tail, scope, out);
        }
        Pattern::Concat(a, b) => {
            pattern(a, 1, false, scope, out);
            out.push(' ');
            pattern(b, 2, tail, scope, out);
        }
        Pattern::Star(a) => {
            pattern(a, 3, false, scope, out);
            out.push('*');
        }
        Pattern::Quantified { quantifier, var, class, body } => {
            out.push_str(quantifier.keyword());
            out.push(' ');
            out.push_str(var);
            out.push_str(" <- [");
            out.push_str(&class_name(class, &[]));
            out.push_str("] . ");
            scope.push(var);
            pattern(body, 0, true, scope, out);
            scope.pop();
        }
        Pattern::Frame(SpatialFormula::True) => out.push('.'),
        Pattern::Frame(SpatialFormula::NonEmpty(SpatialTerm::Var(v))) => out.push_str(v),
        Pattern::Frame(f) => {
            out.push('[');
            formula(f, 0, scope, out);
            out.push(']');
        }
    }
}

fn formula_prec(f: &SpatialFormula) -> u8 {
    match f {
        SpatialFormula::Or(..) => 0,
        SpatialFormula::And(..) => 1,
        SpatialFormula::Not(..) => 2,
        _ => 3,
    }
}

fn formula(f: &SpatialFormula, min_prec: u8, scope: &[&str], out: &mut String) {
    if formula_prec(f) < min_prec {
        out.push('(');
        formula(f, 0, scope, out);
        out.push(')');
        return;
    }
    match f {
        SpatialFormula::True => out.push_str("true"),
        SpatialFormula::NonEmpty(t) => term(t, 0, scope, out),
        SpatialFormula::Dist { left, right, op, threshold } => {
            out.push_str("dist(");
            term(left, 0, scope, out);
            out.push_str(", ");
            term(right, 0, scope, out);
            out.push_str(") ");
            out.push_str(op.symbol());
            out.push(' ');
            out.push_str(&threshold.to_string());
        }
        SpatialFormula::Or(a, b) => {
            formula(a, 0, scope, out);
            out.push_str(" or ");
            formula(b, 1, scope, out);
        }
        SpatialFormula::And(a, b) => {
            formula(a, 1, scope, out);
            out.push_str(" and ");
            formula(b, 2, scope, out);
        }
        SpatialFormula::Not(a) => {
            out.push_str("not ");
            formula(a, 2, scope, out);
        }
    }
}

fn term_prec(t: &SpatialTerm) -> u8 {
    match t {
        SpatialTerm::Union(..) => 0,
        SpatialTerm::Intersect(..) => 1,
        SpatialTerm::Complement(..) => 2,
        _ => 3,
    }
}

fn term(t: &SpatialTerm, min_prec: u8, scope: &[&str], out: &mut String) {
    if term_prec(t) < min_prec {
        out.push('(');
        term(t, 0, scope, out);
        out.push(')');
        return;
    }
    match t {
        SpatialTerm::Class(c) => out.push_str(&class_name(c, scope)),
        SpatialTerm::Var(v) => out.push_str(v),
        SpatialTerm::Union(a, b) => {
            term(a, 0, scope, out);
            out.push_str(" | ");
            term(b, 1, scope, out);
        }
        SpatialTerm::Intersect(a, b) => {
            term(a, 1, scope, out);
            out.push_str(" & ");
            term(b, 2, scope, out);
        }
        SpatialTerm::Complement(a) => {
            out.push('!');
            term(a, 2, scope, out);
        }
    }
}

fn class_name(c: &str, scope: &[&str]) -> String {
    if is_plain_ident(c) && !scope.contains(&c) {
        c.to_string()
    } else {
        let escaped = c.replace('\\', "\\\\").replace('"', "\\\"");
        format!("\"{escaped}\"")
    }
}
