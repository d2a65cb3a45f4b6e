//! Line-oriented text formats for algebras, structures and sentences.
//!
//! ```text
//! domain 3
//! op s 2
//! table: 0 2 2 2 1 2 2 2 2
//! ```
//!
//! ```text
//! domain 3
//! rel rho 2 tuples 00 02 11 12 20 21 22
//! rel tau1 3 dnf (x0=0&x1=0&x2=0)|...
//! const zero 0
//! ```
//!
//! ```text
//! forall x
//! exists y
//! matrix: rho(x,y) & y=2
//! ```
//!
//! `#` starts a comment. Serialization emits the canonical form, so
//! `serialize(parse(f)) == f` for files written in that form.

use std::fmt;

use super::*;

fn words(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

fn number(lineno: usize, col: usize, word: &str) -> Result<usize> {
    word.parse()
        .map_err(|_| Error::syntax(lineno, col, format!("expected a number, found `{word}`")))
}

fn name_ok(word: &str) -> bool {
    let mut chars = word.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

fn parse_domain_line(lineno: usize, ws: &[(usize, &str)]) -> Result<Domain> {
    if ws.len() != 2 {
        return Err(Error::syntax(lineno, 1, "expected `domain N`"));
    }
    Domain::new(number(lineno, ws[1].0, ws[1].1)?)
}

pub fn parse_algebra(text: &str) -> Result<Algebra> {
    struct Pending {
        name: String,
        arity: usize,
        entries: Vec<Elem>,
        needed: usize,
        in_table: bool,
        line: usize,
    }
    fn finish(alg: &mut Algebra, p: Pending) -> Result<()> {
        if p.entries.len() != p.needed {
            return Err(Error::syntax(
                p.line,
                1,
                format!(
                    "operation `{}` needs {} table entries, got {}",
                    p.name,
                    p.needed,
                    p.entries.len()
                ),
            ));
        }
        let op = OpTable::new(alg.domain(), p.arity, p.entries)?;
        alg.add_op(p.name, op)
    }

    let mut algebra: Option<Algebra> = None;
    let mut pending: Option<Pending> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let ws = words(strip_comment(raw));
        let Some(&(col, head)) = ws.first() else {
            continue;
        };
        match head {
            "domain" => {
                if algebra.is_some() {
                    return Err(Error::syntax(lineno, col, "duplicate `domain` line"));
                }
                algebra = Some(Algebra::new(parse_domain_line(lineno, &ws)?));
            }
            "op" => {
                let alg = algebra
                    .as_mut()
                    .ok_or_else(|| Error::syntax(lineno, col, "`op` before `domain`"))?;
                if let Some(p) = pending.take() {
                    finish(alg, p)?;
                }
                if ws.len() != 3 || !name_ok(ws[1].1) {
                    return Err(Error::syntax(lineno, col, "expected `op NAME ARITY`"));
                }
                let arity = number(lineno, ws[2].0, ws[2].1)?;
                let needed = alg.domain().power_within(arity, MAX_MATERIALIZE)?;
                pending = Some(Pending {
                    name: ws[1].1.to_string(),
                    arity,
                    entries: Vec::with_capacity(needed),
                    needed,
                    in_table: false,
                    line: lineno,
                });
            }
            _ => {
                let p = pending
                    .as_mut()
                    .ok_or_else(|| Error::syntax(lineno, col, format!("unexpected `{head}`")))?;
                let rest = if head == "table:" {
                    if p.in_table {
                        return Err(Error::syntax(lineno, col, "duplicate `table:`"));
                    }
                    p.in_table = true;
                    &ws[1..]
                } else if p.in_table {
                    &ws[..]
                } else {
                    return Err(Error::syntax(lineno, col, "expected `table:`"));
                };
                let size = algebra.as_ref().unwrap().domain();
                for &(c, w) in rest {
                    let v = number(lineno, c, w)?;
                    if p.entries.len() == p.needed {
                        return Err(Error::syntax(lineno, c, "too many table entries"));
                    }
                    p.entries.push(size.check(v)?);
                }
            }
        }
    }
    let mut alg = algebra.ok_or_else(|| Error::syntax(1, 1, "missing `domain` line"))?;
    if let Some(p) = pending {
        finish(&mut alg, p)?;
    }
    Ok(alg)
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain {}", self.domain())?;
        for NamedOp { name, op } in self.ops() {
            writeln!(f, "op {name} {}", op.arity())?;
            write!(f, "table:")?;
            for e in op.table() {
                write!(f, " {e}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn parse_structure(text: &str) -> Result<Structure> {
    let mut structure: Option<Structure> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        let ws = words(line);
        let Some(&(col, head)) = ws.first() else {
            continue;
        };
        if head == "domain" {
            if structure.is_some() {
                return Err(Error::syntax(lineno, col, "duplicate `domain` line"));
            }
            structure = Some(Structure::new(parse_domain_line(lineno, &ws)?));
            continue;
        }
        let st = structure
            .as_mut()
            .ok_or_else(|| Error::syntax(lineno, col, format!("`{head}` before `domain`")))?;
        let domain = st.domain();
        match head {
            "rel" => {
                if ws.len() < 4 || !name_ok(ws[1].1) {
                    return Err(Error::syntax(
                        lineno,
                        col,
                        "expected `rel NAME ARITY (tuples|dnf|qf) ...`",
                    ));
                }
                let arity = number(lineno, ws[2].0, ws[2].1)?;
                let (kcol, kind) = ws[3];
                let relation = match kind {
                    "tuples" => {
                        let mut tuples = Vec::new();
                        for &(c, w) in &ws[4..] {
                            let t: Tuple = if w == "-" {
                                Vec::new()
                            } else {
                                w.chars()
                                    .map(|ch| {
                                        ch.to_digit(10).map(|d| d as Elem).ok_or_else(|| {
                                            Error::syntax(lineno, c, format!("bad tuple `{w}`"))
                                        })
                                    })
                                    .collect::<Result<_>>()?
                            };
                            if t.len() != arity {
                                return Err(Error::syntax(
                                    lineno,
                                    c,
                                    format!("tuple `{w}` has length {}, relation arity is {arity}", t.len()),
                                ));
                            }
                            tuples.push(t);
                        }
                        Relation::from_tuples(domain, arity, tuples)?
                    }
                    "dnf" | "qf" => {
                        let offset = kcol - 1 + kind.len();
                        let expr = &line[offset..];
                        let formula = Formula::parse(expr).map_err(|e| match e {
                            Error::Syntax { col: c, msg, .. } => {
                                Error::syntax(lineno, offset + c, msg)
                            }
                            other => other,
                        })?;
                        if kind == "dnf" {
                            Relation::from_dnf(domain, arity, Dnf::from_formula(&formula)?)?
                        } else {
                            Relation::from_qf(domain, arity, formula)?
                        }
                    }
                    _ => {
                        return Err(Error::syntax(
                            lineno,
                            kcol,
                            format!("unknown relation encoding `{kind}`"),
                        ))
                    }
                };
                st.add_relation(ws[1].1, relation)?;
            }
            "const" => {
                if ws.len() != 3 || !name_ok(ws[1].1) {
                    return Err(Error::syntax(lineno, col, "expected `const NAME v`"));
                }
                let v = number(lineno, ws[2].0, ws[2].1)?;
                st.add_constant(ws[1].1, domain.check(v)? as Elem)?;
            }
            other => {
                return Err(Error::syntax(lineno, col, format!("unknown keyword `{other}`")))
            }
        }
    }
    structure.ok_or_else(|| Error::syntax(1, 1, "missing `domain` line"))
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain {}", self.domain())?;
        for NamedRelation { name, relation } in self.relations() {
            write!(f, "rel {name} {}", relation.arity())?;
            match relation.encoding() {
                Encoding::Tuples(set) => {
                    write!(f, " tuples")?;
                    for t in set {
                        write!(f, " ")?;
                        if t.is_empty() {
                            write!(f, "-")?;
                        }
                        for e in t {
                            write!(f, "{e}")?;
                        }
                    }
                }
                Encoding::Dnf(d) => write!(f, " dnf {d}")?,
                Encoding::Qf(q) => write!(f, " qf {q}")?,
            }
            writeln!(f)?;
        }
        for (name, v) in self.constants() {
            writeln!(f, "const {name} {v}")?;
        }
        Ok(())
    }
}

fn parse_arg(lineno: usize, col: usize, text: &str) -> Result<Arg> {
    let t = text.trim();
    if !t.is_empty() && t.chars().all(|c| c.is_ascii_digit()) {
        let v = number(lineno, col, t)?;
        let v = u8::try_from(v).map_err(|_| Error::syntax(lineno, col, "constant too large"))?;
        Ok(Arg::Const(v))
    } else if name_ok(t) {
        Ok(Arg::Var(t.to_string()))
    } else {
        Err(Error::syntax(lineno, col, format!("bad argument `{t}`")))
    }
}

fn parse_atom(lineno: usize, col: usize, text: &str) -> Result<Atom> {
    let t = text.trim();
    if let Some(open) = t.find('(') {
        let name = t[..open].trim();
        if !name_ok(name) || !t.ends_with(')') {
            return Err(Error::syntax(lineno, col, format!("bad atom `{t}`")));
        }
        let inner = &t[open + 1..t.len() - 1];
        let args = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|a| parse_arg(lineno, col, a))
                .collect::<Result<_>>()?
        };
        Ok(Atom::rel(name, args))
    } else if let Some((a, b)) = t.split_once('=') {
        Ok(Atom::Eq(parse_arg(lineno, col, a)?, parse_arg(lineno, col, b)?))
    } else {
        Err(Error::syntax(lineno, col, format!("bad atom `{t}`")))
    }
}

pub fn parse_sentence(text: &str) -> Result<SentencePH> {
    let mut prefix = Vec::new();
    let mut matrix = Vec::new();
    let mut in_matrix = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        let mut body = line;
        let mut base = 0;
        if !in_matrix {
            let ws = words(line);
            let Some(&(col, head)) = ws.first() else {
                continue;
            };
            match head {
                "forall" | "exists" => {
                    if ws.len() != 2 || !name_ok(ws[1].1) {
                        return Err(Error::syntax(lineno, col, format!("expected `{head} VAR`")));
                    }
                    let q = if head == "forall" {
                        Quantifier::Forall
                    } else {
                        Quantifier::Exists
                    };
                    prefix.push((q, ws[1].1.to_string()));
                    continue;
                }
                _ if head.starts_with("matrix:") => {
                    in_matrix = true;
                    base = line.find("matrix:").unwrap() + "matrix:".len();
                    body = &line[base..];
                }
                _ => return Err(Error::syntax(lineno, col, format!("unexpected `{head}`"))),
            }
        }
        let mut offset = base;
        for piece in body.split('&') {
            let col = offset + 1 + piece.len() - piece.trim_start().len();
            offset += piece.len() + 1;
            if piece.trim().is_empty() {
                continue;
            }
            matrix.push(parse_atom(lineno, col, piece)?);
        }
    }
    if !in_matrix {
        return Err(Error::syntax(text.lines().count().max(1), 1, "missing `matrix:`"));
    }
    SentencePH::new(prefix, matrix)
}
