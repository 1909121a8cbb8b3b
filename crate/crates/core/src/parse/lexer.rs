use std::fmt;

use super::{Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Unsigned integer literal; also usable as a number.
    Int(u64),
    Float(f64),
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Lt,
    Gt,
    AndAnd,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Float(v) => write!(f, "`{v}`"),
            Tok::Eof => f.write_str("end of input"),
            other => write!(f, "`{}`", other.symbol()),
        }
    }
}

impl Tok {
    pub(crate) fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::AndAnd => "&&",
            Tok::Assign => "=",
            Tok::PlusAssign => "+=",
            Tok::MinusAssign => "-=",
            Tok::StarAssign => "*=",
            Tok::SlashAssign => "/=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Ident(_) => "identifier",
            Tok::Int(_) | Tok::Float(_) => "number",
            Tok::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

/// Splits source text into tokens. `//` and `#` start line comments.
/// Unknown characters are reported and skipped.
pub(crate) fn lex(src: &str, diags: &mut Vec<Diagnostic>) -> Vec<Token> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut n = 0;
    while n < chars.len() {
        let c = chars[n];
        let pos = Pos { line, col };
        let peek = chars.get(n + 1).copied();
        let single = |tok: Tok| (tok, 1usize);
        let (tok, len) = match c {
            '\n' => {
                line += 1;
                col = 1;
                n += 1;
                continue;
            }
            c if c.is_whitespace() => {
                col += 1;
                n += 1;
                continue;
            }
            '#' => {
                n = skip_line(&chars, n);
                continue;
            }
            '/' if peek == Some('/') => {
                n = skip_line(&chars, n);
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let end = scan(&chars, n, |c| c.is_ascii_alphanumeric() || c == '_');
                (Tok::Ident(chars[n..end].iter().collect()), end - n)
            }
            c if c.is_ascii_digit() => match lex_number(&chars, n) {
                Ok((tok, len)) => (tok, len),
                Err((msg, len)) => {
                    diags.push(Diagnostic::new(pos, msg));
                    col += len;
                    n += len;
                    continue;
                }
            },
            '(' => single(Tok::LParen),
            ')' => single(Tok::RParen),
            ',' => single(Tok::Comma),
            ';' => single(Tok::Semi),
            ':' => single(Tok::Colon),
            '<' => single(Tok::Lt),
            '>' => single(Tok::Gt),
            '&' if peek == Some('&') => (Tok::AndAnd, 2),
            '=' => single(Tok::Assign),
            '+' if peek == Some('=') => (Tok::PlusAssign, 2),
            '-' if peek == Some('=') => (Tok::MinusAssign, 2),
            '*' if peek == Some('=') => (Tok::StarAssign, 2),
            '/' if peek == Some('=') => (Tok::SlashAssign, 2),
            '+' => single(Tok::Plus),
            '-' => single(Tok::Minus),
            '*' => single(Tok::Star),
            '/' => single(Tok::Slash),
            other => {
                diags.push(Diagnostic::new(pos, format!("unexpected character {other:?}")));
                col += 1;
                n += 1;
                continue;
            }
        };
        out.push(Token { tok, pos });
        col += len;
        n += len;
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    out
}

fn skip_line(chars: &[char], mut n: usize) -> usize {
    while n < chars.len() && chars[n] != '\n' {
        n += 1;
    }
    n
}

fn scan(chars: &[char], start: usize, pred: impl Fn(char) -> bool) -> usize {
    let mut end = start;
    while end < chars.len() && pred(chars[end]) {
        end += 1;
    }
    end
}

fn lex_number(chars: &[char], start: usize) -> Result<(Tok, usize), (String, usize)> {
    let digit = |c: char| c.is_ascii_digit();
    let mut end = scan(chars, start, digit);
    let mut is_float = false;
    if end < chars.len() && chars[end] == '.' && chars.get(end + 1).is_some_and(|&c| digit(c)) {
        end = scan(chars, end + 1, digit);
        is_float = true;
    }
    if end < chars.len() && (chars[end] == 'e' || chars[end] == 'E') {
        let mut e = end + 1;
        if e < chars.len() && (chars[e] == '+' || chars[e] == '-') {
            e += 1;
        }
        if e < chars.len() && digit(chars[e]) {
            end = scan(chars, e, digit);
            is_float = true;
        }
    }
    let text: String = chars[start..end].iter().collect();
    let len = end - start;
    if is_float {
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((Tok::Float(v), len)),
            _ => Err((format!("number literal `{text}` is out of range"), len)),
        }
    } else {
        text.parse::<u64>()
            .map(|v| (Tok::Int(v), len))
            .map_err(|_| (format!("integer literal `{text}` is out of range"), len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        let mut d = Vec::new();
        let t = lex(src, &mut d);
        assert!(d.is_empty(), "{d:?}");
        t.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_numbers() {
        assert_eq!(
            toks("a += 0.5*b(i+1) -= 2e3 && <>"),
            vec![
                Tok::Ident("a".into()),
                Tok::PlusAssign,
                Tok::Float(0.5),
                Tok::Star,
                Tok::Ident("b".into()),
                Tok::LParen,
                Tok::Ident("i".into()),
                Tok::Plus,
                Tok::Int(1),
                Tok::RParen,
                Tok::MinusAssign,
                Tok::Float(2000.0),
                Tok::AndAnd,
                Tok::Lt,
                Tok::Gt,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let mut d = Vec::new();
        let t = lex("// c\n  x # y\n z", &mut d);
        assert_eq!(t[0].pos, Pos { line: 2, col: 3 });
        assert_eq!(t[1].pos, Pos { line: 3, col: 2 });
    }

    #[test]
    fn bad_characters_are_reported() {
        let mut d = Vec::new();
        let t = lex("a $ b 1e999", &mut d);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].pos, Pos { line: 1, col: 3 });
        assert_eq!(t.len(), 3);
    }
}
