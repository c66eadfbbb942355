use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Binding, Expr, Input, Param, Program, Shape};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    BadChar(char),
    #[error("expected {expected}, found {found}")]
    Expected { expected: &'static str, found: String },
    #[error("no output: program has no `return`")]
    NoOutput,
    #[error("statement after `return`")]
    AfterReturn,
    #[error("`{0}` is bound more than once")]
    Duplicate(String),
    #[error("undefined tensor `{0}`")]
    Undefined(String),
    #[error("more than one `input` declaration")]
    SecondInput,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("bad number `{0}`")]
    BadNumber(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Punct(&'static str),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => alloc::format!("`{s}`"),
            Tok::Number(s) => alloc::format!("number `{s}`"),
            Tok::Punct(p) => alloc::format!("`{p}`"),
        }
    }
}

struct Token {
    tok: Tok,
    column: usize,
}

fn lex_line(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), column });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Number(chars[start..i].iter().collect()), column });
            continue;
        }
        if c == '<' && chars.get(i + 1) == Some(&'*') && chars.get(i + 2) == Some(&'>') {
            out.push(Token { tok: Tok::Punct("<*>"), column });
            i += 3;
            continue;
        }
        let punct = match c {
            ':' => ":",
            '[' => "[",
            ']' => "]",
            '=' => "=",
            '*' => "*",
            '+' => "+",
            '-' => "-",
            '(' => "(",
            ')' => ")",
            ',' => ",",
            _ => return Err(ParseError { line: line_no, column, kind: ParseErrorKind::BadChar(c) }),
        };
        out.push(Token { tok: Tok::Punct(punct), column });
        i += 1;
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_column: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        let column = self.toks.get(self.pos).map_or(self.end_column, |t| t.column);
        ParseError { line: self.line, column, kind }
    }

    fn expected(&self, expected: &'static str) -> ParseError {
        let found = self.toks.get(self.pos).map_or_else(|| "end of line".to_string(), |t| t.tok.describe());
        self.err(ParseErrorKind::Expected { expected, found })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn ident(&mut self) -> Result<(String, usize), ParseError> {
        match self.toks.get(self.pos) {
            Some(Token { tok: Tok::Ident(s), column }) => {
                self.pos += 1;
                Ok((s.clone(), *column))
            }
            _ => Err(self.expected("identifier")),
        }
    }

    fn punct(&mut self, p: &'static str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Punct(q)) if *q == p => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.expected(p)),
        }
    }

    fn eat(&mut self, p: &'static str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let negative = self.eat("-");
        match self.peek() {
            Some(Tok::Number(s)) => {
                let s = s.clone();
                let v: f64 = s.parse().map_err(|_| self.err(ParseErrorKind::BadNumber(s.clone())))?;
                self.pos += 1;
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.expected("number")),
        }
    }

    fn dim(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(Tok::Number(s)) => {
                let s = s.clone();
                let v: usize = s.parse().map_err(|_| self.err(ParseErrorKind::BadNumber(s.clone())))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.expected("dimension")),
        }
    }

    fn shape(&mut self) -> Result<Shape, ParseError> {
        let (r, _) = self.ident()?;
        if r != "R" {
            self.pos -= 1;
            return Err(self.expected("`R`"));
        }
        self.punct("[")?;
        let rows = self.dim()?;
        self.punct("]")?;
        self.punct("[")?;
        let cols = self.dim()?;
        self.punct("]")?;
        Ok(Shape::new(rows, cols))
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            Err(self.expected("end of line"))
        } else {
            Ok(())
        }
    }
}

struct Scope {
    names: BTreeSet<String>,
}

impl Scope {
    fn define(&mut self, name: &str, line: usize, column: usize) -> Result<(), ParseError> {
        if !self.names.insert(name.into()) {
            return Err(ParseError { line, column, kind: ParseErrorKind::Duplicate(name.into()) });
        }
        Ok(())
    }

    fn resolve(&self, name: &str, line: usize, column: usize) -> Result<String, ParseError> {
        if self.names.contains(name) {
            Ok(name.into())
        } else {
            Err(ParseError { line, column, kind: ParseErrorKind::Undefined(name.into()) })
        }
    }
}

fn operand(cur: &mut Cursor<'_>, scope: &Scope) -> Result<String, ParseError> {
    let (name, column) = cur.ident()?;
    scope.resolve(&name, cur.line, column)
}

fn expr(cur: &mut Cursor<'_>, scope: &Scope) -> Result<Expr, ParseError> {
    if matches!(cur.peek(), Some(Tok::Number(_)) | Some(Tok::Punct("-"))) {
        let c = cur.number()?;
        cur.punct("*")?;
        return Ok(Expr::ScalarMul(c, operand(cur, scope)?));
    }
    let (head, column) = cur.ident()?;
    if cur.eat("(") {
        let arg = operand(cur, scope)?;
        let e = match head.as_str() {
            "sigmoid" => Expr::Sigmoid(arg),
            "tanh" => Expr::Tanh(arg),
            "relu" => Expr::Relu(arg),
            "exp" => Expr::Exp(arg),
            "argmax" => Expr::ArgMax(arg),
            "reshape" => {
                cur.punct(",")?;
                let rows = cur.dim()?;
                cur.punct(",")?;
                let cols = cur.dim()?;
                Expr::Reshape(arg, Shape::new(rows, cols))
            }
            _ => {
                return Err(ParseError { line: cur.line, column, kind: ParseErrorKind::UnknownFunction(head) });
            }
        };
        cur.punct(")")?;
        return Ok(e);
    }
    let lhs = scope.resolve(&head, cur.line, column)?;
    let op = match cur.peek() {
        Some(Tok::Punct(p @ ("*" | "+" | "-" | "<*>"))) => *p,
        _ => return Err(cur.expected("operator")),
    };
    cur.pos += 1;
    let rhs = operand(cur, scope)?;
    Ok(match op {
        "*" => Expr::MatMul(lhs, rhs),
        "+" => Expr::Add(lhs, rhs),
        "-" => Expr::Sub(lhs, rhs),
        _ => Expr::Hadamard(lhs, rhs),
    })
}

/// Parses DSL source. Name resolution happens here; shapes are checked by
/// [`super::check_shapes`].
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let mut params = Vec::new();
    let mut input: Option<Input> = None;
    let mut body = Vec::new();
    let mut output: Option<String> = None;
    let mut scope = Scope { names: BTreeSet::new() };
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let toks = lex_line(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor { toks: &toks, pos: 0, line, end_column: raw.chars().count() + 1 };
        if output.is_some() {
            return Err(cur.err(ParseErrorKind::AfterReturn));
        }
        let (keyword, _) = cur.ident().map_err(|_| cur.expected("`param`, `input`, `let` or `return`"))?;
        match keyword.as_str() {
            "param" => {
                let (name, column) = cur.ident()?;
                cur.punct(":")?;
                let shape = cur.shape()?;
                cur.punct("=")?;
                let (key, _) = cur.ident()?;
                cur.finish()?;
                scope.define(&name, line, column)?;
                params.push(Param { name, shape, key });
            }
            "input" => {
                let (name, column) = cur.ident()?;
                cur.punct(":")?;
                let shape = cur.shape()?;
                cur.finish()?;
                if input.is_some() {
                    return Err(ParseError { line, column: 1, kind: ParseErrorKind::SecondInput });
                }
                scope.define(&name, line, column)?;
                input = Some(Input { name, shape });
            }
            "let" => {
                let (name, column) = cur.ident()?;
                cur.punct("=")?;
                let e = expr(&mut cur, &scope)?;
                cur.finish()?;
                scope.define(&name, line, column)?;
                body.push(Binding { name, expr: e, line });
            }
            "return" => {
                let name = operand(&mut cur, &scope)?;
                cur.finish()?;
                output = Some(name);
            }
            _ => {
                cur.pos = 0;
                return Err(cur.expected("`param`, `input`, `let` or `return`"));
            }
        }
    }

    let output = output.ok_or(ParseError { line: last_line.max(1), column: 1, kind: ParseErrorKind::NoOutput })?;
    Ok(Program { params, input, body, output })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = "\
# linear classifier
param W1 : R[1][2] = W1
param X1 : R[2][1] = X1
param B1 : R[1][1] = B1
let t1 = W1 * X1
let t2 = t1 + B1   # bias
return t2
";

    #[test]
    fn parses_linear_classifier() {
        let p = parse(LINEAR).unwrap();
        assert_eq!(p.params.len(), 3);
        assert_eq!(p.body.len(), 2);
        assert_eq!(p.body[0].expr, Expr::MatMul("W1".into(), "X1".into()));
        assert_eq!(p.body[1].expr, Expr::Add("t1".into(), "B1".into()));
        assert_eq!(p.output, "t2");
        assert!(p.input.is_none());
    }

    #[test]
    fn empty_source_has_no_output() {
        let e = parse("").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::NoOutput);
        assert!(e.to_string().contains("no output"));
        assert_eq!(parse("# nothing\n\n").unwrap_err().kind, ParseErrorKind::NoOutput);
    }

    #[test]
    fn undefined_name_is_cited() {
        let e = parse("param W : R[1][1] = W\nlet t = W + Q\nreturn t\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Undefined("Q".into()));
        assert_eq!((e.line, e.column), (2, 13));
        assert!(e.to_string().contains('Q'));
    }

    #[test]
    fn duplicate_binding() {
        let e = parse("input x : R[1][1]\nlet x = relu(x)\nreturn x\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Duplicate("x".into()));
    }

    #[test]
    fn use_before_definition_is_undefined() {
        let e = parse("input x : R[1][1]\nlet a = b + x\nlet b = relu(x)\nreturn a\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Undefined("b".into()));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse("input x : R[1][1]\nlet y = x ? x\nreturn y\n").unwrap_err();
        assert_eq!((e.line, e.column, e.kind), (2, 11, ParseErrorKind::BadChar('?')));
        let e = parse("input x : R[1][1]\nlet y = x\nreturn y\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Expected { expected: "operator", .. }));
        let e = parse("input x : R[1][1]\nreturn x\nlet y = relu(x)\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::AfterReturn);
        let e = parse("input x : R[1][1]\nlet y = softmax(x)\nreturn y\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownFunction("softmax".into()));
    }

    #[test]
    fn scalar_literals() {
        let p = parse("input x : R[2][1]\nlet a = -0.5 * x\nlet b = 2e-3 * a\nlet c = 3 * b\nreturn c\n").unwrap();
        assert_eq!(p.body[0].expr, Expr::ScalarMul(-0.5, "x".into()));
        assert_eq!(p.body[1].expr, Expr::ScalarMul(2e-3, "a".into()));
        assert_eq!(p.body[2].expr, Expr::ScalarMul(3.0, "b".into()));
    }

    #[test]
    fn print_then_parse_is_identity() {
        let src = "input x : R[4][1]\nparam W : R[3][4] = w0\nparam c : R[3][1] = c\n\
                   let h = W * x\nlet g = h - c\nlet k = g <*> g\nlet s = 0.1 * k\nlet u = sigmoid(s)\n\
                   let v = tanh(u)\nlet q = exp(v)\nlet r = relu(q)\nlet m = reshape(r, 1, 3)\nlet l = argmax(m)\nreturn l\n";
        let p = parse(src).unwrap();
        let printed = p.to_string();
        let again = parse(&printed).unwrap();
        assert!(p.same_structure(&again), "{printed}");
    }
}
