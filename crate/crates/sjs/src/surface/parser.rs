//! Recursive-descent parser for the surface statement/expression
//! grammar. Semicolons between statements are optional.

use crate::span::Span;

use super::lexer::{lex, Tok, Token};
use super::{Block, ParseError, SExpr, Stmt};

pub fn parse_surface(text: &str) -> Result<Block, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let block = p.block(Tok::Eof)?;
    p.expect(Tok::Eof)?;
    if block.stmts.is_empty() {
        return Err(ParseError::new("empty program", Span::new(0, 0, 1, 1)));
    }
    Ok(block)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if self.peek() == &tok {
            Ok(self.bump())
        } else {
            Err(ParseError::new(
                format!("expected {}, found {}", tok.describe(), self.peek().describe()),
                self.peek_span(),
            ))
        }
    }

    /// Statements up to (not consuming) `end`.
    fn block(&mut self, end: Tok) -> Result<Block, ParseError> {
        let start = self.peek_span();
        let mut stmts = Vec::new();
        while self.peek() != &end {
            stmts.push(self.stmt()?);
            while self.eat(&Tok::Semi) {}
        }
        let span = stmts
            .iter()
            .fold(start, |acc: Span, s| acc.merge(s.span()));
        Ok(Block { stmts, span })
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.peek_span();
        match self.peek() {
            Tok::KwVar => {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                let init = self.expr()?;
                let span = span.merge(init.span());
                Ok(Stmt::VarDecl { name, init, span })
            }
            Tok::KwReturn => {
                self.bump();
                let e = self.expr()?;
                let span = span.merge(e.span());
                Ok(Stmt::Return(e, span))
            }
            // `function name(x) { ... }` in statement position declares a
            // variable; anonymous `function (x)` is an expression.
            Tok::KwFunction if matches!(&self.toks[self.pos + 1].tok, Tok::Ident(_)) => {
                self.bump();
                let name = self.ident()?;
                let (param, body, fspan) = self.function_tail(span)?;
                Ok(Stmt::FunDecl { name, param, body, span: fspan })
            }
            _ => Ok(Stmt::Expr(self.expr()?)),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                Ok(x)
            }
            other => Err(ParseError::new(
                format!("expected identifier, found {}", other.describe()),
                self.peek_span(),
            )),
        }
    }

    /// `(x?) { stmts }` after the `function` keyword (and optional name).
    fn function_tail(
        &mut self,
        start: Span,
    ) -> Result<(Option<String>, Block, Span), ParseError> {
        self.expect(Tok::LParen)?;
        let param = if self.peek() == &Tok::RParen {
            None
        } else {
            Some(self.ident()?)
        };
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let body = self.block(Tok::RBrace)?;
        let close = self.expect(Tok::RBrace)?;
        Ok((param, body, start.merge(close.span)))
    }

    /// Assignment level (lowest precedence, right-associative).
    fn expr(&mut self) -> Result<SExpr, ParseError> {
        let lhs = self.cond_expr()?;
        if self.peek() == &Tok::Eq {
            let eq_span = self.peek_span();
            self.bump();
            let value = self.expr()?;
            return match lhs {
                SExpr::Var(name, s) => {
                    let span = s.merge(value.span());
                    Ok(SExpr::Assign { name, value: Box::new(value), span })
                }
                SExpr::FieldRead { obj, field, span } => {
                    let span = span.merge(value.span());
                    Ok(SExpr::FieldWrite { obj, field, value: Box::new(value), span })
                }
                _ => Err(ParseError::new(
                    "invalid assignment target (expected a variable or field)",
                    eq_span,
                )),
            };
        }
        Ok(lhs)
    }

    fn cond_expr(&mut self) -> Result<SExpr, ParseError> {
        let cond = self.add_expr()?;
        if self.peek() == &Tok::Question {
            self.bump();
            let then = self.expr()?;
            self.expect(Tok::Colon)?;
            let els = self.expr()?;
            let span = cond.span().merge(els.span());
            return Ok(SExpr::Cond {
                cond: Box::new(cond),
                then: Box::new(then),
                els: Box::new(els),
                span,
            });
        }
        Ok(cond)
    }

    fn add_expr(&mut self) -> Result<SExpr, ParseError> {
        let mut lhs = self.postfix_expr()?;
        while self.peek() == &Tok::Plus {
            self.bump();
            let rhs = self.postfix_expr()?;
            let span = lhs.span().merge(rhs.span());
            lhs = SExpr::Add { lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn postfix_expr(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.bump();
                    let field = self.ident()?;
                    let fspan = e.span().merge(self.toks[self.pos - 1].span);
                    if self.peek() == &Tok::LParen {
                        let arg = self.call_arg()?;
                        let span = e.span().merge(self.toks[self.pos - 1].span);
                        e = SExpr::MethodCall { recv: Box::new(e), field, arg, span };
                    } else {
                        e = SExpr::FieldRead { obj: Box::new(e), field, span: fspan };
                    }
                }
                Tok::LParen => {
                    let arg = self.call_arg()?;
                    let span = e.span().merge(self.toks[self.pos - 1].span);
                    e = SExpr::FunCall { callee: Box::new(e), arg, span };
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn call_arg(&mut self) -> Result<Option<Box<SExpr>>, ParseError> {
        self.expect(Tok::LParen)?;
        if self.eat(&Tok::RParen) {
            return Ok(None);
        }
        let arg = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(Some(Box::new(arg)))
    }

    fn primary(&mut self) -> Result<SExpr, ParseError> {
        let span = self.peek_span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(SExpr::Int(n, span))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(SExpr::Str(s, span))
            }
            Tok::KwNull => {
                self.bump();
                Ok(SExpr::Null(span))
            }
            Tok::KwThis => {
                self.bump();
                Ok(SExpr::This(span))
            }
            Tok::Ident(x) => {
                self.bump();
                Ok(SExpr::Var(x, span))
            }
            Tok::KwFunction => {
                self.bump();
                let (param, body, fspan) = self.function_tail(span)?;
                Ok(SExpr::Lambda { param, body, span: fspan })
            }
            Tok::LBrace => self.obj_lit(),
            Tok::LParen => {
                self.bump();
                let block = self.block(Tok::RParen)?;
                self.expect(Tok::RParen)?;
                if block.stmts.is_empty() {
                    return Err(ParseError::new("empty parentheses", span));
                }
                if block.stmts.len() == 1 {
                    if let Stmt::Expr(e) = &block.stmts[0] {
                        return Ok(e.clone());
                    }
                }
                Ok(SExpr::Seq(block))
            }
            other => Err(ParseError::new(
                format!("expected an expression, found {}", other.describe()),
                span,
            )),
        }
    }

    fn obj_lit(&mut self) -> Result<SExpr, ParseError> {
        let open = self.expect(Tok::LBrace)?;
        let mut fields: Vec<(String, SExpr)> = Vec::new();
        if self.peek() != &Tok::RBrace {
            loop {
                let fspan = self.peek_span();
                let name = self.ident()?;
                if fields.iter().any(|(f, _)| f == &name) {
                    return Err(ParseError::new(
                        format!("duplicate field `{name}` in object literal"),
                        fspan,
                    ));
                }
                self.expect(Tok::Colon)?;
                let value = self.cond_expr()?;
                fields.push((name, value));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let close = self.expect(Tok::RBrace)?;
        let mut span = open.span.merge(close.span);
        let proto = if self.eat(&Tok::KwProto) {
            // the prototype parent is a postfix-level expression, which
            // itself may be another `{...} proto e`
            let parent = self.postfix_expr()?;
            span = span.merge(parent.span());
            Some(Box::new(parent))
        } else {
            None
        };
        Ok(SExpr::ObjLit { fields, proto, span })
    }
}
