//! Parser and renderer for the ASK-query subset used to declare patterns.
//!
//! Accepted shape:
//!
//! ```text
//! ASK WHERE {
//!   ?e0 {rel1} ?e1 .
//!   ?e1 ?rel_0 ?e2 .
//!   ?e2 {rel2} ?e3 .
//!   FILTER(?e0 != ?e1 && ?e1 != ?e2)
//! }
//! ```
//!
//! Subjects and objects are entity variables, predicates are either one of
//! the `{rel1}` / `{rel2}` placeholders or a single relation variable. The
//! only filter form is a conjunction of variable inequalities.

use std::fmt::Write as _;

use super::pattern::{GraphletPattern, PatternEdge, Slot};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Word(String),
    Var(String),
    Placeholder(Slot),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    And,
    NotEq,
    Other(String),
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Word(w) => w.clone(),
            Token::Var(v) => format!("?{v}"),
            Token::Placeholder(s) => format!("{{{s}}}"),
            Token::LBrace => "{".into(),
            Token::RBrace => "}".into(),
            Token::LParen => "(".into(),
            Token::RParen => ")".into(),
            Token::Dot => ".".into(),
            Token::And => "&&".into(),
            Token::NotEq => "!=".into(),
            Token::Other(s) => s.clone(),
        }
    }
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "OPTIONAL",
    "UNION",
    "MINUS",
    "BIND",
    "VALUES",
    "GRAPH",
    "SERVICE",
    "SELECT",
    "CONSTRUCT",
    "DESCRIBE",
    "PREFIX",
    "BASE",
    "EXISTS",
    "NOT",
    "FROM",
    "ORDER",
    "LIMIT",
    "OFFSET",
    "GROUP",
    "HAVING",
];

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let is_name = |c: char| c.is_alphanumeric() || c == '_';
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '?' | '$' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && is_name(chars[j]) {
                    j += 1;
                }
                if j == start {
                    return Err(Error::Query("empty variable name".into()));
                }
                out.push(Token::Var(chars[start..j].iter().collect()));
                i = j;
            }
            '{' => {
                let rest: String = chars[i..].iter().take(6).collect();
                if rest.eq_ignore_ascii_case("{rel1}") {
                    out.push(Token::Placeholder(Slot::Rel1));
                    i += 6;
                } else if rest.eq_ignore_ascii_case("{rel2}") {
                    out.push(Token::Placeholder(Slot::Rel2));
                    i += 6;
                } else {
                    out.push(Token::LBrace);
                    i += 1;
                }
            }
            '}' => {
                out.push(Token::RBrace);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '.' => {
                out.push(Token::Dot);
                i += 1;
            }
            '&' if chars.get(i + 1) == Some(&'&') => {
                out.push(Token::And);
                i += 2;
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                out.push(Token::NotEq);
                i += 2;
            }
            '|' if chars.get(i + 1) == Some(&'|') => {
                out.push(Token::Other("||".into()));
                i += 2;
            }
            '<' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j] != '>' && !chars[j].is_whitespace() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '>' {
                    out.push(Token::Other(chars[i..=j].iter().collect()));
                    i = j + 1;
                } else {
                    out.push(Token::Other("<".into()));
                    i += 1;
                }
            }
            c if c.is_alphabetic() => {
                let mut j = i;
                while j < chars.len() && (is_name(chars[j]) || chars[j] == ':') {
                    j += 1;
                }
                out.push(Token::Word(chars[i..j].iter().collect()));
                i = j;
            }
            other => {
                out.push(Token::Other(other.to_string()));
                i += 1;
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: &Token, what: &str) -> Result<()> {
        match self.next() {
            Some(ref t) if t == want => Ok(()),
            Some(t) => Err(unexpected(&t, what)),
            None => Err(Error::Query(format!("unexpected end of query, expected {what}"))),
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<()> {
        match self.next() {
            Some(Token::Word(w)) if w.eq_ignore_ascii_case(word) => Ok(()),
            Some(t) => Err(unexpected(&t, word)),
            None => Err(Error::Query(format!("unexpected end of query, expected {word}"))),
        }
    }
}

fn unexpected(t: &Token, what: &str) -> Error {
    if let Token::Word(w) = t {
        let upper = w.to_ascii_uppercase();
        if UNSUPPORTED_KEYWORDS.contains(&upper.as_str()) {
            return Error::Query(format!("unsupported SPARQL construct `{upper}`"));
        }
    }
    match t {
        Token::Other(s) if s == "||" => Error::Query("unsupported SPARQL construct `||` (disjunctive filter)".into()),
        Token::Other(s) if s.starts_with('<') => Error::Query(format!("unsupported SPARQL construct: IRI term `{s}`")),
        Token::Other(s) if s == "\"" || s == "'" => Error::Query("unsupported SPARQL construct: literal".into()),
        Token::Other(s) if matches!(s.as_str(), "/" | "|" | "*" | "+" | "^") => {
            Error::Query(format!("unsupported SPARQL construct: property path `{s}`"))
        }
        Token::Other(s) if s == "=" => Error::Query("unsupported SPARQL construct: equality filter `=`".into()),
        other => Error::Query(format!("expected {what}, found `{}`", other.describe())),
    }
}

/// Parses an ASK template; the returned pattern carries an empty name.
pub(crate) fn parse_unnamed(text: &str) -> Result<GraphletPattern> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    p.expect_word("ASK")?;
    p.expect_word("WHERE")?;
    p.expect(&Token::LBrace, "`{`")?;

    let mut vars: Vec<String> = Vec::new();
    let mut wildcard: Option<String> = None;
    let mut edges = Vec::new();
    let mut pairs = Vec::new();
    let mut saw_filter = false;

    let var_index = |name: &str, vars: &mut Vec<String>| match vars.iter().position(|v| v == name) {
        Some(i) => i,
        None => {
            vars.push(name.to_owned());
            vars.len() - 1
        }
    };

    loop {
        match p.next() {
            Some(Token::RBrace) => break,
            Some(Token::Dot) => continue,
            Some(Token::Word(w)) if w.eq_ignore_ascii_case("FILTER") => {
                if saw_filter {
                    return Err(Error::Query("only one FILTER clause is supported".into()));
                }
                saw_filter = true;
                p.expect(&Token::LParen, "`(` after FILTER")?;
                loop {
                    let a = match p.next() {
                        Some(Token::Var(v)) => v,
                        Some(t) => return Err(unexpected(&t, "variable in FILTER")),
                        None => return Err(Error::Query("unterminated FILTER".into())),
                    };
                    p.expect(&Token::NotEq, "`!=`")?;
                    let b = match p.next() {
                        Some(Token::Var(v)) => v,
                        Some(t) => return Err(unexpected(&t, "variable in FILTER")),
                        None => return Err(Error::Query("unterminated FILTER".into())),
                    };
                    pairs.push((a, b));
                    match p.next() {
                        Some(Token::And) => continue,
                        Some(Token::RParen) => break,
                        Some(t) => return Err(unexpected(&t, "`&&` or `)`")),
                        None => return Err(Error::Query("unterminated FILTER".into())),
                    }
                }
            }
            Some(Token::Var(subject)) => {
                if saw_filter {
                    return Err(Error::Query("triple patterns must precede the FILTER clause".into()));
                }
                let slot = match p.next() {
                    Some(Token::Placeholder(s)) => s,
                    Some(Token::Var(rv)) => {
                        match &wildcard {
                            Some(w) if *w != rv => {
                                return Err(Error::Query(format!(
                                    "unsupported SPARQL construct: second relation variable `?{rv}`"
                                )))
                            }
                            _ => wildcard = Some(rv),
                        }
                        Slot::Wildcard
                    }
                    Some(t) => return Err(unexpected(&t, "`{rel1}`, `{rel2}` or a relation variable")),
                    None => return Err(Error::Query("unexpected end of query in triple".into())),
                };
                let object = match p.next() {
                    Some(Token::Var(v)) => v,
                    Some(t) => return Err(unexpected(&t, "entity variable")),
                    None => return Err(Error::Query("unexpected end of query in triple".into())),
                };
                let src = var_index(&subject, &mut vars);
                let dst = var_index(&object, &mut vars);
                edges.push(PatternEdge { src, slot, dst });
                match p.peek() {
                    Some(Token::Dot) | Some(Token::RBrace) => {}
                    Some(Token::Word(w)) if w.eq_ignore_ascii_case("FILTER") => {}
                    Some(t) => return Err(unexpected(&t.clone(), "`.`")),
                    None => {}
                }
            }
            Some(t) => return Err(unexpected(&t, "triple pattern, FILTER or `}`")),
            None => return Err(Error::Query("unexpected end of query, expected `}`".into())),
        }
    }
    if let Some(t) = p.next() {
        return Err(unexpected(&t, "end of query"));
    }
    if let Some(w) = &wildcard {
        if vars.contains(w) {
            return Err(Error::Query(format!(
                "`?{w}` used both as entity and relation variable"
            )));
        }
    }
    let mut distinct = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let find = |v: &str| {
            vars.iter()
                .position(|x| x == v)
                .ok_or_else(|| Error::Query(format!("FILTER references unbound variable `?{v}`")))
        };
        distinct.push((find(&a)?, find(&b)?));
    }
    GraphletPattern::new("", vars, edges, distinct)
}

/// Renders the ASK template for a pattern.
pub fn render_query(p: &GraphletPattern) -> String {
    let vars = p.entity_vars();
    let mut s = String::from("ASK WHERE {\n");
    for e in p.edges() {
        let pred = match e.slot {
            Slot::Rel1 => "{rel1}",
            Slot::Rel2 => "{rel2}",
            Slot::Wildcard => "?rel_0",
        };
        let _ = writeln!(s, "  ?{} {} ?{} .", vars[e.src], pred, vars[e.dst]);
    }
    if !p.distinct_pairs().is_empty() {
        let conds: Vec<String> = p
            .distinct_pairs()
            .iter()
            .map(|&(a, b)| format!("?{} != ?{}", vars[a], vars[b]))
            .collect();
        let _ = writeln!(s, "  FILTER({})", conds.join(" && "));
    }
    s.push('}');
    s
}
