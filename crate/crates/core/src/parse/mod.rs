//! Text front end for `.tl` programs.
//!
//! ```text
//! tensor g dim 3 rank 2 sym(0,1);
//! tensor dg dim 3 rank 2 sym(0,1) inner rank 1;
//! field alpha;
//! const two = 2;
//! index p : 4;
//! K(sym<0,1>, i, j) = two*alpha*g(i,j);
//! ```
//!
//! Indices `i j k l m n o` have dimension 3 and `a b c d` dimension 4 unless an
//! `index` declaration overrides them.

mod lexer;
mod render;

use std::collections::HashMap;
use std::fmt;

use lexer::{lex, Tok, Token};
pub use render::{render_program, render_statement};

use crate::ir::{
    validate_statement, AssignOp, CheckedStatement, Declarations, Declared, Expr, IndexTerm, IndexVar, Statement,
    TensorLeaf,
};
use crate::tensor::{ShapeError, SymmetrySpec, TensorShape};

/// Parsing stops collecting diagnostics after this many.
pub const MAX_DIAGNOSTICS: usize = 20;

const BUILTIN_INDICES: [(&str, usize); 11] = [
    ("i", 3),
    ("j", 3),
    ("k", 3),
    ("l", 3),
    ("m", 3),
    ("n", 3),
    ("o", 3),
    ("a", 4),
    ("b", 4),
    ("c", 4),
    ("d", 4),
];

const RESERVED: [&str; 10] = ["tensor", "field", "const", "index", "dim", "rank", "sym", "inner", "Sum", "sqrt"];

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Self {
            pos,
            message: message.into(),
        }
    }

    /// `file:line:col: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeclKind {
    Tensor { name: String, shape: TensorShape },
    Field { name: String },
    Const { name: String, value: f64 },
    Index { name: String, dim: usize },
}

impl DeclKind {
    pub fn name(&self) -> &str {
        match self {
            DeclKind::Tensor { name, .. }
            | DeclKind::Field { name }
            | DeclKind::Const { name, .. }
            | DeclKind::Index { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decl {
    pub kind: DeclKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramStatement {
    pub statement: Statement,
    pub pos: Pos,
}

/// Declarations and statements in source order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub decls: Vec<Decl>,
    pub statements: Vec<ProgramStatement>,
}

impl Program {
    /// Field and constant declarations (index declarations excluded).
    pub fn declarations(&self) -> Declarations {
        let mut decls = Declarations::new();
        for d in &self.decls {
            match &d.kind {
                DeclKind::Tensor { name, shape } => {
                    decls.insert(name.clone(), Declared::Tensor(shape.clone()));
                }
                DeclKind::Field { name } => {
                    decls.insert(name.clone(), Declared::Scalar);
                }
                DeclKind::Const { name, value } => {
                    decls.insert(name.clone(), Declared::Const(*value));
                }
                DeclKind::Index { .. } => {}
            }
        }
        decls
    }

    /// Validates every statement, reporting failures at the statement position.
    pub fn check(&self) -> Result<Vec<CheckedStatement>, Vec<Diagnostic>> {
        let decls = self.declarations();
        let mut ok = Vec::new();
        let mut diags = Vec::new();
        for s in &self.statements {
            match validate_statement(&s.statement, &decls) {
                Ok(c) => ok.push(c),
                Err(e) => diags.push(Diagnostic::new(s.pos, format!("[{}] {}", e.code(), e))),
            }
        }
        if diags.is_empty() {
            Ok(ok)
        } else {
            Err(diags)
        }
    }

    /// Structural equality ignoring source positions.
    pub fn same_structure(&self, other: &Program) -> bool {
        self.decls.len() == other.decls.len()
            && self.decls.iter().zip(&other.decls).all(|(a, b)| a.kind == b.kind)
            && self.statements.len() == other.statements.len()
            && self
                .statements
                .iter()
                .zip(&other.statements)
                .all(|(a, b)| a.statement == b.statement)
    }
}

/// Parses program text. On failure returns the first diagnostics in source
/// order (at most [`MAX_DIAGNOSTICS`]); recovery resumes after the next `;`.
pub fn parse_program(text: &str) -> Result<Program, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let tokens = lex(text, &mut diags);
    let mut parser = Parser {
        tokens,
        at: 0,
        diags,
        names: HashMap::new(),
        indices: BUILTIN_INDICES.iter().map(|&(n, d)| (n.to_string(), d)).collect(),
        program: Program::default(),
    };
    parser.program();
    let mut diags = parser.diags;
    if diags.is_empty() {
        Ok(parser.program)
    } else {
        diags.sort_by_key(|d| d.pos);
        diags.truncate(MAX_DIAGNOSTICS);
        Err(diags)
    }
}

type PResult<T> = Result<T, Diagnostic>;

#[derive(Debug, Clone, PartialEq)]
enum Named {
    Tensor,
    Field,
    Const(f64),
    Index,
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    diags: Vec<Diagnostic>,
    names: HashMap<String, Named>,
    indices: HashMap<String, usize>,
    program: Program,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let n = (self.at + ahead).min(self.tokens.len() - 1);
        &self.tokens[n].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(self.pos(), msg))
    }

    fn expected<T>(&self, what: &str) -> PResult<T> {
        self.error(format!("expected {what}, found {}", self.peek()))
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.expected(&format!("`{}`", tok.symbol()))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.expected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.pos();
                self.bump();
                Ok((s, pos))
            }
            _ => self.expected("identifier"),
        }
    }

    fn int(&mut self) -> PResult<usize> {
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                usize::try_from(v).or_else(|_| self.error("integer too large"))
            }
            _ => self.expected("integer"),
        }
    }

    fn program(&mut self) {
        while *self.peek() != Tok::Eof {
            if self.diags.len() >= MAX_DIAGNOSTICS {
                return;
            }
            if let Err(d) = self.item() {
                self.diags.push(d);
                self.recover();
            }
        }
    }

    /// Skips past the next `;` (or to end of input).
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn item(&mut self) -> PResult<()> {
        let is_decl = match self.peek() {
            Tok::Ident(s) => {
                matches!(s.as_str(), "tensor" | "field" | "const" | "index") && matches!(self.peek_at(1), Tok::Ident(_))
            }
            _ => false,
        };
        if is_decl {
            self.decl()
        } else {
            self.statement()
        }
    }

    fn declare_name(&mut self, name: &str, pos: Pos, what: Named) -> PResult<()> {
        if RESERVED.contains(&name) {
            return Err(Diagnostic::new(pos, format!("`{name}` is a reserved word")));
        }
        if self.names.contains_key(name) {
            return Err(Diagnostic::new(pos, format!("`{name}` is already declared")));
        }
        if what != Named::Index && self.indices.contains_key(name) && !is_builtin_index(name) {
            return Err(Diagnostic::new(pos, format!("`{name}` is already declared as an index")));
        }
        self.names.insert(name.to_string(), what);
        Ok(())
    }

    fn decl(&mut self) -> PResult<()> {
        let pos = self.pos();
        let (kw, _) = self.ident()?;
        let (name, name_pos) = self.ident()?;
        let kind = match kw.as_str() {
            "tensor" => {
                self.keyword("dim")?;
                let dim_pos = self.pos();
                let dim = self.int()?;
                self.keyword("rank")?;
                let outer_rank = self.int()?;
                let outer_sym = self.decl_sym()?;
                let (inner_rank, inner_sym) = if self.is_keyword("inner") {
                    self.bump();
                    self.keyword("rank")?;
                    let r = self.int()?;
                    (r, self.decl_sym()?)
                } else {
                    (0, SymmetrySpec::none())
                };
                let shape = TensorShape::new(dim, outer_rank, outer_sym, inner_rank, inner_sym)
                    .map_err(|e| Diagnostic::new(dim_pos, format!("invalid shape for `{name}`: {e}")))?;
                if outer_rank + inner_rank == 0 {
                    return Err(Diagnostic::new(dim_pos, format!("tensor `{name}` needs rank at least 1")));
                }
                shape
                    .component_count()
                    .map_err(|e| Diagnostic::new(dim_pos, format!("invalid shape for `{name}`: {e}")))?;
                self.declare_name(&name, name_pos, Named::Tensor)?;
                DeclKind::Tensor { name, shape }
            }
            "field" => {
                self.declare_name(&name, name_pos, Named::Field)?;
                DeclKind::Field { name }
            }
            "const" => {
                self.expect(Tok::Assign)?;
                let value = self.number()?;
                self.declare_name(&name, name_pos, Named::Const(value))?;
                DeclKind::Const { name, value }
            }
            "index" => {
                self.expect(Tok::Colon)?;
                let dim_pos = self.pos();
                let dim = self.int()?;
                if dim == 0 {
                    return Err(Diagnostic::new(dim_pos, "index dimension must be positive"));
                }
                self.declare_name(&name, name_pos, Named::Index)?;
                self.indices.insert(name.clone(), dim);
                DeclKind::Index { name, dim }
            }
            _ => unreachable!("checked by item()"),
        };
        self.expect(Tok::Semi)?;
        self.program.decls.push(Decl { kind, pos });
        Ok(())
    }

    /// Signed number literal for `const` declarations.
    fn number(&mut self) -> PResult<f64> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let v = match *self.peek() {
            Tok::Int(v) => v as f64,
            Tok::Float(v) => v,
            _ => return self.expected("number"),
        };
        self.bump();
        Ok(if neg { -v } else { v })
    }

    fn decl_sym(&mut self) -> PResult<SymmetrySpec> {
        let pos = self.pos();
        let mut pairs = Vec::new();
        while self.is_keyword("sym") {
            self.bump();
            self.expect(Tok::LParen)?;
            let p = self.int()?;
            self.expect(Tok::Comma)?;
            let q = self.int()?;
            self.expect(Tok::RParen)?;
            pairs.push((p, q));
        }
        sym_spec(pairs, pos)
    }

    fn statement(&mut self) -> PResult<()> {
        let pos = self.pos();
        let lhs = self.lval()?;
        let op = match self.peek() {
            Tok::Assign => AssignOp::Set,
            Tok::PlusAssign => AssignOp::Add,
            Tok::MinusAssign => AssignOp::Sub,
            Tok::StarAssign => AssignOp::Mul,
            Tok::SlashAssign => AssignOp::Div,
            _ => return self.expected("assignment operator"),
        };
        self.bump();
        let rhs = self.expr()?;
        self.expect(Tok::Semi)?;
        self.program.statements.push(ProgramStatement {
            statement: Statement { lhs, op, rhs },
            pos,
        });
        Ok(())
    }

    fn tensor_name(&mut self) -> PResult<String> {
        let (name, pos) = self.ident()?;
        match self.names.get(&name) {
            Some(Named::Tensor) => Ok(name),
            Some(_) => Err(Diagnostic::new(pos, format!("`{name}` is not a tensor"))),
            None => Err(Diagnostic::new(pos, format!("undeclared tensor `{name}`"))),
        }
    }

    fn lval(&mut self) -> PResult<TensorLeaf> {
        let name = self.tensor_name()?;
        self.expect(Tok::LParen)?;
        let declared_sym = if self.is_keyword("sym") && *self.peek_at(1) == Tok::Lt {
            let pos = self.pos();
            let mut pairs = Vec::new();
            loop {
                self.keyword("sym")?;
                self.expect(Tok::Lt)?;
                let p = self.int()?;
                self.expect(Tok::Comma)?;
                let q = self.int()?;
                self.expect(Tok::Gt)?;
                pairs.push((p, q));
                if *self.peek() == Tok::AndAnd {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::Comma)?;
            Some(sym_spec(pairs, pos)?)
        } else {
            None
        };
        let outer = self.terms()?;
        self.expect(Tok::RParen)?;
        let inner = self.inner_terms()?;
        Ok(TensorLeaf {
            name,
            outer,
            inner,
            declared_sym,
        })
    }

    fn inner_terms(&mut self) -> PResult<Vec<IndexTerm>> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let t = self.terms()?;
            self.expect(Tok::RParen)?;
            Ok(t)
        } else {
            Ok(Vec::new())
        }
    }

    fn terms(&mut self) -> PResult<Vec<IndexTerm>> {
        let mut out = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.term()?);
        }
        Ok(out)
    }

    fn term(&mut self) -> PResult<IndexTerm> {
        if let Tok::Int(_) = self.peek() {
            return Ok(IndexTerm::Fixed(self.int()?));
        }
        let var = self.index_var()?;
        let offset = if *self.peek() == Tok::Plus {
            self.bump();
            self.int()?
        } else {
            0
        };
        Ok(IndexTerm::Var { var, offset })
    }

    fn index_var(&mut self) -> PResult<IndexVar> {
        let (name, pos) = self.ident()?;
        match self.indices.get(&name) {
            Some(&dim) => Ok(IndexVar { name, dim }),
            None => Err(Diagnostic::new(pos, format!("undeclared index `{name}`"))),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = lhs + self.mul_expr()?;
                }
                Tok::Minus => {
                    self.bump();
                    lhs = lhs - self.mul_expr()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = lhs * self.unary()?;
                }
                Tok::Slash => {
                    self.bump();
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            // A minus directly before a literal folds into the constant.
            return match *self.peek() {
                Tok::Int(v) => {
                    self.bump();
                    Ok(Expr::Const(-(v as f64)))
                }
                Tok::Float(v) => {
                    self.bump();
                    Ok(Expr::Const(-v))
                }
                _ => Ok(-self.unary()?),
            };
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Const(v as f64))
            }
            Tok::Float(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) if name == "Sum" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let var = self.index_var()?;
                self.expect(Tok::Comma)?;
                let body = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::sum(&var, body))
            }
            Tok::Ident(name) if name == "sqrt" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::sqrt(e))
            }
            Tok::Ident(name) => {
                let pos = self.pos();
                match self.names.get(&name).cloned() {
                    Some(Named::Const(v)) => {
                        self.bump();
                        Ok(Expr::Const(v))
                    }
                    Some(Named::Field) => {
                        self.bump();
                        Ok(Expr::Field(name))
                    }
                    Some(Named::Tensor) => {
                        self.bump();
                        self.expect(Tok::LParen)?;
                        let outer = self.terms()?;
                        self.expect(Tok::RParen)?;
                        let inner = self.inner_terms()?;
                        Ok(Expr::Leaf(TensorLeaf {
                            name,
                            outer,
                            inner,
                            declared_sym: None,
                        }))
                    }
                    Some(Named::Index) => Err(Diagnostic::new(pos, format!("index `{name}` used as a value"))),
                    None if self.indices.contains_key(&name) => {
                        Err(Diagnostic::new(pos, format!("index `{name}` used as a value")))
                    }
                    None => Err(Diagnostic::new(pos, format!("undeclared name `{name}`"))),
                }
            }
            _ => self.expected("expression"),
        }
    }
}

fn is_builtin_index(name: &str) -> bool {
    BUILTIN_INDICES.iter().any(|&(n, _)| n == name)
}

fn sym_spec(pairs: Vec<(usize, usize)>, pos: Pos) -> PResult<SymmetrySpec> {
    SymmetrySpec::new(pairs).map_err(|e: ShapeError| Diagnostic::new(pos, format!("invalid symmetry: {e}")))
}
