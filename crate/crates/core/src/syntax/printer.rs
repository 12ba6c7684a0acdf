use std::fmt::Write;

use super::ast::*;

/// Renders a tree as canonical MiniRuby: two-space indentation, one
/// statement per line, parenthesized call arguments and bare `super` args.
pub fn pretty_print(tree: &SyntaxTree) -> String {
    let mut out = String::new();
    let mut prev_was_class = false;
    for (i, item) in tree.items.iter().enumerate() {
        let is_class = matches!(item, Item::Class(_));
        if i > 0 && (is_class || prev_was_class) {
            out.push('\n');
        }
        match item {
            Item::Class(c) => print_class(&mut out, c),
            Item::Stmt(s) => print_stmt(&mut out, s, 0),
        }
        prev_was_class = is_class;
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_class(out: &mut String, c: &ClassDef) {
    write!(out, "class {}", c.name).unwrap();
    if let Some(sup) = &c.superclass {
        write!(out, " < {sup}").unwrap();
    }
    out.push('\n');
    for (i, member) in c.members.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match member {
            Member::Attr(a) => {
                indent(out, 1);
                out.push_str(a.kind.keyword());
                for (j, n) in a.names.iter().enumerate() {
                    out.push_str(if j == 0 { " :" } else { ", :" });
                    out.push_str(&n.text);
                }
                out.push('\n');
            }
            Member::Method(m) => print_method(out, m),
        }
    }
    out.push_str("end\n");
}

fn print_method(out: &mut String, m: &MethodDef) {
    indent(out, 1);
    write!(out, "def {}", m.name).unwrap();
    if !m.params.is_empty() {
        out.push('(');
        for (i, p) in m.params.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&p.text);
        }
        out.push(')');
    }
    out.push('\n');
    for s in &m.body {
        print_stmt(out, s, 2);
    }
    indent(out, 1);
    out.push_str("end\n");
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::IVarAssign { name, value } | StmtKind::LocalAssign { name, value } => {
            write!(out, "{name} = ").unwrap();
            print_expr(out, value);
        }
        StmtKind::AttrWrite {
            receiver,
            attr,
            value,
        } => {
            print_expr(out, receiver);
            write!(out, ".{attr} = ").unwrap();
            print_expr(out, value);
        }
        StmtKind::Expr { expr } => print_expr(out, expr),
        StmtKind::Return { value } => {
            out.push_str("return ");
            print_expr(out, value);
        }
        StmtKind::Puts { value } => {
            out.push_str("puts ");
            print_expr(out, value);
        }
        StmtKind::Super { args } => {
            out.push_str("super");
            for (i, a) in args.iter().enumerate() {
                out.push_str(if i == 0 { " " } else { ", " });
                print_expr(out, a);
            }
        }
    }
    out.push('\n');
}

fn print_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Str(s) => print_string(out, s),
        ExprKind::Int(n) => write!(out, "{n}").unwrap(),
        ExprKind::Nil => out.push_str("nil"),
        ExprKind::Bool(b) => write!(out, "{b}").unwrap(),
        ExprKind::SelfRef => out.push_str("self"),
        ExprKind::IVar(n) | ExprKind::Local(n) | ExprKind::Const(n) => out.push_str(n),
        ExprKind::Call {
            receiver,
            name,
            args,
        } => {
            print_expr(out, receiver);
            write!(out, ".{name}").unwrap();
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    print_expr(out, a);
                }
                out.push(')');
            }
        }
    }
}

fn print_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}
