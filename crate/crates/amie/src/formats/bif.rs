//! Reader and writer for the BIF text format of discrete Bayesian networks.
//!
//! Supported: `network`, `variable` blocks with `type discrete [ k ] { ... }`,
//! and `probability` blocks with `table`, per-configuration rows and
//! `default`. `property` statements are skipped, `//` and `/* */` comments
//! are allowed.
//!
//! A `table` entry lists the child distribution of every parent
//! configuration in turn: child level fastest, then the first parent.
//! Each conditional distribution is rescaled to sum to one; rows further
//! than [`ROW_SUM_SLACK`] from one are rejected.

use std::fmt::Write as _;

use amie_core::network::{Cpt, DiscreteNet};

use super::FormatError;

/// Largest accepted `|sum - 1|` of a row before rescaling.
pub const ROW_SUM_SLACK: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Word(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    line: usize,
    column: usize,
}

fn is_punct(c: char) -> bool {
    matches!(c, '{' | '}' | '(' | ')' | '[' | ']' | ',' | ';' | '|')
}

fn tokenize(text: &str) -> Result<Vec<Token>, FormatError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    let advance = |c: char, line: &mut usize, column: &mut usize| {
        if c == '\n' {
            *line += 1;
            *column = 1;
        } else {
            *column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, column);
        if c.is_whitespace() {
            chars.next();
            advance(c, &mut line, &mut column);
        } else if c == '/' {
            chars.next();
            advance(c, &mut line, &mut column);
            match chars.peek() {
                Some('/') => {
                    while let Some(&d) = chars.peek() {
                        if d == '\n' {
                            break;
                        }
                        chars.next();
                        advance(d, &mut line, &mut column);
                    }
                }
                Some('*') => {
                    chars.next();
                    advance('*', &mut line, &mut column);
                    let mut prev = ' ';
                    loop {
                        let Some(d) = chars.next() else {
                            return Err(FormatError::at(l0, c0, "unterminated comment"));
                        };
                        advance(d, &mut line, &mut column);
                        if prev == '*' && d == '/' {
                            break;
                        }
                        prev = d;
                    }
                }
                _ => return Err(FormatError::at(l0, c0, "stray `/`")),
            }
        } else if is_punct(c) {
            chars.next();
            advance(c, &mut line, &mut column);
            out.push(Token { kind: Kind::Punct(c), line: l0, column: c0 });
        } else {
            let mut word = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_whitespace() || is_punct(d) || d == '/' {
                    break;
                }
                word.push(d);
                chars.next();
                advance(d, &mut line, &mut column);
            }
            out.push(Token { kind: Kind::Word(word), line: l0, column: c0 });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

struct RawVariable {
    name: String,
    levels: Vec<String>,
}

enum Entry {
    Table(Vec<f64>),
    Row(Vec<String>, Vec<f64>),
    Default(Vec<f64>),
}

struct RawProbability {
    child: String,
    parents: Vec<String>,
    entries: Vec<(Entry, usize, usize)>,
    line: usize,
    column: usize,
}

impl Parser {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormatError> {
        let (line, column) = self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.column));
        Err(FormatError::at(line, column, msg))
    }

    fn peek(&self) -> Option<&Kind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn position(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.column))
    }

    fn punct(&mut self, c: char) -> Result<(), FormatError> {
        if self.peek() == Some(&Kind::Punct(c)) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        let hit = self.peek() == Some(&Kind::Punct(c));
        self.pos += usize::from(hit);
        hit
    }

    fn word(&mut self, what: &str) -> Result<String, FormatError> {
        match self.peek() {
            Some(Kind::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), FormatError> {
        match self.peek() {
            Some(Kind::Word(w)) if w == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{kw}`")),
        }
    }

    fn skip_statement(&mut self) -> Result<(), FormatError> {
        while !self.eat_punct(';') {
            if self.pos >= self.toks.len() {
                return self.err("unterminated statement");
            }
            self.pos += 1;
        }
        Ok(())
    }

    fn skip_block(&mut self) -> Result<(), FormatError> {
        self.punct('{')?;
        let mut depth = 1;
        while depth > 0 {
            match self.peek() {
                None => return self.err("unterminated block"),
                Some(Kind::Punct('{')) => depth += 1,
                Some(Kind::Punct('}')) => depth -= 1,
                _ => {}
            }
            self.pos += 1;
        }
        Ok(())
    }

    /// Comma- or space-separated list of words up to `close`.
    fn word_list(&mut self, close: char, what: &str) -> Result<Vec<String>, FormatError> {
        let mut out = Vec::new();
        while !self.eat_punct(close) {
            out.push(self.word(what)?);
            self.eat_punct(',');
        }
        Ok(out)
    }

    fn numbers(&mut self) -> Result<Vec<f64>, FormatError> {
        let mut out = Vec::new();
        while !self.eat_punct(';') {
            let (line, column) = self.position();
            let w = self.word("a probability")?;
            let p: f64 = w.parse().map_err(|_| FormatError::at(line, column, format!("invalid probability `{w}`")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(FormatError::at(line, column, format!("probability {p} outside [0, 1]")));
            }
            out.push(p);
            self.eat_punct(',');
        }
        Ok(out)
    }

    fn variable(&mut self) -> Result<RawVariable, FormatError> {
        let name = self.word("a variable name")?;
        self.punct('{')?;
        let mut levels = None;
        while !self.eat_punct('}') {
            match self.peek() {
                Some(Kind::Word(w)) if w == "type" => {
                    self.pos += 1;
                    self.keyword("discrete")?;
                    self.punct('[')?;
                    let (line, column) = self.position();
                    let k: usize = self
                        .word("a level count")?
                        .parse()
                        .map_err(|_| FormatError::at(line, column, "invalid level count"))?;
                    self.punct(']')?;
                    self.punct('{')?;
                    let lv = self.word_list('}', "a level name")?;
                    if lv.len() != k {
                        return Err(FormatError::at(
                            line,
                            column,
                            format!("`{name}` declares {k} levels but lists {}", lv.len()),
                        ));
                    }
                    self.punct(';')?;
                    levels = Some(lv);
                }
                Some(Kind::Word(w)) if w == "property" => self.skip_statement()?,
                _ => return self.err("expected `type` or `property`"),
            }
        }
        let levels = levels.ok_or_else(|| {
            let (line, column) = self.position();
            FormatError::at(line, column, format!("variable `{name}` has no type"))
        })?;
        Ok(RawVariable { name, levels })
    }

    fn probability(&mut self) -> Result<RawProbability, FormatError> {
        let (line, column) = self.position();
        self.punct('(')?;
        let child = self.word("a variable name")?;
        let mut parents = Vec::new();
        if self.eat_punct('|') {
            parents = self.word_list(')', "a parent name")?;
        } else {
            self.punct(')')?;
        }
        self.punct('{')?;
        let mut entries = Vec::new();
        while !self.eat_punct('}') {
            let (l, c) = self.position();
            match self.peek() {
                Some(Kind::Word(w)) if w == "table" => {
                    self.pos += 1;
                    entries.push((Entry::Table(self.numbers()?), l, c));
                }
                Some(Kind::Word(w)) if w == "default" => {
                    self.pos += 1;
                    entries.push((Entry::Default(self.numbers()?), l, c));
                }
                Some(Kind::Word(w)) if w == "property" => self.skip_statement()?,
                Some(Kind::Punct('(')) => {
                    self.pos += 1;
                    let config = self.word_list(')', "a parent level")?;
                    entries.push((Entry::Row(config, self.numbers()?), l, c));
                }
                _ => return self.err("expected `table`, `default` or a parent configuration"),
            }
        }
        Ok(RawProbability { child, parents, entries, line, column })
    }
}

fn normalize(row: &mut [f64], line: usize, column: usize) -> Result<(), FormatError> {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_SLACK {
        return Err(FormatError::at(line, column, format!("distribution sums to {sum}")));
    }
    // rows already normalized up to rounding stay bit-identical
    if (sum - 1.0).abs() <= 1e-12 {
        return Ok(());
    }
    for p in row.iter_mut() {
        *p /= sum;
    }
    Ok(())
}

pub fn parse_bif(text: &str) -> Result<DiscreteNet, FormatError> {
    let toks = tokenize(text)?;
    let end = text.lines().count().max(1);
    let mut parser = Parser { toks, pos: 0, end: (end, 1) };
    let mut vars: Vec<RawVariable> = Vec::new();
    let mut probs: Vec<RawProbability> = Vec::new();
    while parser.pos < parser.toks.len() {
        match parser.word("`network`, `variable` or `probability`")?.as_str() {
            "network" => {
                if !matches!(parser.peek(), Some(Kind::Punct('{'))) {
                    parser.word("a network name")?;
                }
                parser.skip_block()?;
            }
            "variable" => vars.push(parser.variable()?),
            "probability" => probs.push(parser.probability()?),
            other => {
                parser.pos -= 1;
                return parser.err(format!("unexpected `{other}`"));
            }
        }
    }

    let index_of = |name: &str| vars.iter().position(|v| v.name == name);
    let mut cpts: Vec<Option<Cpt>> = vec![None; vars.len()];
    for p in probs {
        let here = |msg: String| FormatError::at(p.line, p.column, msg);
        let child = index_of(&p.child).ok_or_else(|| here(format!("unknown variable `{}`", p.child)))?;
        let parents = p
            .parents
            .iter()
            .map(|n| index_of(n).ok_or_else(|| here(format!("unknown parent `{n}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let card = vars[child].levels.len();
        let parent_cards: Vec<usize> = parents.iter().map(|&q| vars[q].levels.len()).collect();
        let n_rows: usize = parent_cards.iter().product();
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; n_rows];
        let mut default = None;
        for (entry, line, column) in p.entries {
            let at = |msg: String| FormatError::at(line, column, msg);
            match entry {
                Entry::Table(values) => {
                    if values.len() != n_rows * card {
                        return Err(at(format!("table has {} entries, expected {}", values.len(), n_rows * card)));
                    }
                    for (r, chunk) in values.chunks_exact(card).enumerate() {
                        rows[r] = Some(chunk.to_vec());
                    }
                }
                Entry::Default(values) => {
                    if values.len() != card {
                        return Err(at(format!("default has {} entries, expected {card}", values.len())));
                    }
                    default = Some(values);
                }
                Entry::Row(config, values) => {
                    if config.len() != parents.len() {
                        return Err(at(format!("{} parent levels for {} parents", config.len(), parents.len())));
                    }
                    if values.len() != card {
                        return Err(at(format!("row has {} entries, expected {card}", values.len())));
                    }
                    let mut r = 0;
                    let mut stride = 1;
                    for (k, lvl) in config.iter().enumerate() {
                        let q = parents[k];
                        let li = vars[q]
                            .levels
                            .iter()
                            .position(|l| l == lvl)
                            .ok_or_else(|| at(format!("`{}` has no level `{lvl}`", vars[q].name)))?;
                        r += li * stride;
                        stride *= parent_cards[k];
                    }
                    if rows[r].replace(values).is_some() {
                        return Err(at(format!("configuration ({}) given twice", config.join(", "))));
                    }
                }
            }
        }
        let mut probs = Vec::with_capacity(n_rows * card);
        for (r, row) in rows.into_iter().enumerate() {
            let mut row = row
                .or_else(|| default.clone())
                .ok_or_else(|| here(format!("`{}` is missing parent configuration {r}", p.child)))?;
            normalize(&mut row, p.line, p.column)?;
            probs.extend(row);
        }
        if cpts[child].replace(Cpt { parents, parent_cards, card, probs }).is_some() {
            return Err(here(format!("second probability block for `{}`", p.child)));
        }
    }
    let mut names = Vec::with_capacity(vars.len());
    let mut levels = Vec::with_capacity(vars.len());
    let mut tables = Vec::with_capacity(vars.len());
    for (v, cpt) in vars.into_iter().zip(cpts) {
        let cpt = cpt.ok_or_else(|| FormatError::at(0, 0, format!("no probability block for `{}`", v.name)))?;
        names.push(v.name);
        levels.push(v.levels);
        tables.push(cpt);
    }
    DiscreteNet::new(names, levels, tables).map_err(FormatError::from_core)
}

pub fn write_bif(net: &DiscreteNet) -> String {
    let mut out = String::from("network unknown {\n}\n");
    for v in 0..net.node_count() {
        let lv = net.levels(v);
        let _ = writeln!(
            out,
            "variable {} {{\n  type discrete [ {} ] {{ {} }};\n}}",
            net.names()[v],
            lv.len(),
            lv.join(", ")
        );
    }
    let fmt_row = |row: &[f64]| row.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>().join(", ");
    for v in 0..net.node_count() {
        let cpt = net.cpt(v);
        let names = net.names();
        if cpt.parents.is_empty() {
            let _ = writeln!(out, "probability ( {} ) {{\n  table {};\n}}", names[v], fmt_row(cpt.row(0)));
            continue;
        }
        let parent_names: Vec<&str> = cpt.parents.iter().map(|&p| names[p].as_str()).collect();
        let _ = writeln!(out, "probability ( {} | {} ) {{", names[v], parent_names.join(", "));
        for r in 0..cpt.n_rows() {
            let mut rest = r;
            let config: Vec<&str> = cpt
                .parents
                .iter()
                .zip(&cpt.parent_cards)
                .map(|(&p, &k)| {
                    let lvl = rest % k;
                    rest /= k;
                    net.levels(p)[lvl].as_str()
                })
                .collect();
            let _ = writeln!(out, "  ({}) {};", config.join(", "), fmt_row(cpt.row(r)));
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "network test {\n  property author x;\n}\n\
        variable A {\n  type discrete [ 2 ] { yes, no };\n}\n\
        variable B {\n  type discrete [ 3 ] { lo, mid, hi };\n  property note;\n}\n\
        /* block\n comment */\n\
        probability ( A ) {\n  table 0.3, 0.7;\n}\n\
        probability ( B | A ) {\n  (yes) 0.2, 0.3, 0.5; // trailing\n  (no) 0.6, 0.2, 0.2;\n}\n";

    #[test]
    fn parses_rows_and_tables() {
        let net = parse_bif(SMALL).unwrap();
        assert_eq!(net.names(), ["A", "B"]);
        assert_eq!(net.levels(1), ["lo", "mid", "hi"]);
        assert_eq!(net.parents(1), [0]);
        assert_eq!(net.cpt(1).row(1), [0.6, 0.2, 0.2]);
    }

    #[test]
    fn table_form_matches_row_form() {
        let t =
            SMALL.replace("(yes) 0.2, 0.3, 0.5; // trailing\n  (no) 0.6, 0.2, 0.2;", "table 0.2 0.3 0.5 0.6 0.2 0.2;");
        assert_eq!(parse_bif(&t).unwrap(), parse_bif(SMALL).unwrap());
    }

    #[test]
    fn errors_carry_positions() {
        let bad = SMALL.replace("0.6, 0.2, 0.2", "0.6, 0.2, x");
        let e = parse_bif(&bad).unwrap_err();
        assert_eq!((e.line, e.column), (18, 18));
        let bad = SMALL.replace("(no)", "(maybe)");
        assert!(parse_bif(&bad).unwrap_err().message.contains("maybe"));
        let bad = SMALL.replace("0.6, 0.2, 0.2", "0.6, 0.6, 0.6");
        assert!(parse_bif(&bad).is_err());
        let missing = SMALL.replace("  (no) 0.6, 0.2, 0.2;\n", "");
        assert!(parse_bif(&missing).is_err());
        assert!(parse_bif(&SMALL.replace("[ 3 ]", "[ 4 ]")).is_err());
    }

    #[test]
    fn rows_are_rescaled() {
        let t = SMALL.replace("table 0.3, 0.7", "table 0.301, 0.7");
        let net = parse_bif(&t).unwrap();
        assert!((net.cpt(0).row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_fills_missing_rows() {
        let t = SMALL.replace("(no) 0.6, 0.2, 0.2;", "default 0.1, 0.1, 0.8;");
        assert_eq!(parse_bif(&t).unwrap().cpt(1).row(1), [0.1, 0.1, 0.8]);
    }

    #[test]
    fn round_trip_vendored_networks() {
        for file in ["insurance.bif", "water.bif"] {
            let path = format!("{}/data/{file}", env!("CARGO_MANIFEST_DIR"));
            let net = parse_bif(&std::fs::read_to_string(path).unwrap()).unwrap();
            let again = parse_bif(&write_bif(&net)).unwrap();
            assert_eq!(again, net, "{file}");
        }
    }
}
