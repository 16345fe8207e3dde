//! Parser and evaluator for the quantifier-free DNF relation grammar:
//! a disjunction (`|`) of conjunctions (`&`) of atoms `ORB(i,j)`, `i=j`,
//! `i!=j` with 1-based coordinates. Conjunctions may be parenthesized.

use crate::binary_core::{CoreSignature, OrbitalId};
use crate::error::Error;
use crate::orbits::{Orbit, PairLabel};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Orbital { orbital: OrbitalId, i: usize, j: usize },
    Eq { i: usize, j: usize },
    Neq { i: usize, j: usize },
}

pub type Dnf = Vec<Vec<Atom>>;

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Int(usize),
    LParen,
    RParen,
    Comma,
    Amp,
    Pipe,
    Eq,
    Neq,
    End,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { text, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::FormulaParse {
            at: self.pos,
            message: message.into(),
        }
    }

    fn next_token(&mut self) -> Result<Token> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return Ok(Token::End);
        }
        let c = bytes[self.pos];
        match c {
            b'(' => {
                self.pos += 1;
                Ok(Token::LParen)
            }
            b')' => {
                self.pos += 1;
                Ok(Token::RParen)
            }
            b',' => {
                self.pos += 1;
                Ok(Token::Comma)
            }
            b'&' => {
                self.pos += 1;
                Ok(Token::Amp)
            }
            b'|' => {
                self.pos += 1;
                Ok(Token::Pipe)
            }
            b'=' => {
                self.pos += 1;
                Ok(Token::Eq)
            }
            b'!' => {
                if bytes.get(self.pos + 1) == Some(&b'=') {
                    self.pos += 2;
                    Ok(Token::Neq)
                } else {
                    Err(self.error("expected `!=`"))
                }
            }
            b'0'..=b'9' => {
                let start = self.pos;
                while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let value: usize = self.text[start..self.pos]
                    .parse()
                    .map_err(|_| self.error("integer too large"))?;
                Ok(Token::Int(value))
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Ok(Token::Ident(self.text[start..self.pos].to_string()))
            }
            other => Err(self.error(format!("unexpected character `{}`", other as char))),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: Token,
    arity: usize,
    sig: &'a CoreSignature,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, arity: usize, sig: &'a CoreSignature) -> Result<Self> {
        let mut lexer = Lexer::new(text);
        let lookahead = lexer.next_token()?;
        Ok(Parser {
            lexer,
            lookahead,
            arity,
            sig,
        })
    }

    fn advance(&mut self) -> Result<Token> {
        let next = self.lexer.next_token()?;
        Ok(std::mem::replace(&mut self.lookahead, next))
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<()> {
        if self.lookahead == token {
            self.advance()?;
            Ok(())
        } else {
            Err(self.lexer.error(format!("expected {what}")))
        }
    }

    fn coordinate(&mut self) -> Result<usize> {
        match self.advance()? {
            Token::Int(v) if v >= 1 && v <= self.arity => Ok(v - 1),
            Token::Int(v) => Err(Error::CoordinateOutOfRange {
                index: v,
                arity: self.arity,
            }),
            _ => Err(self.lexer.error("expected a coordinate")),
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        match self.advance()? {
            Token::Ident(name) => {
                let orbital = self
                    .sig
                    .by_name(&name)
                    .ok_or(Error::UnknownOrbital(name))?;
                self.expect(Token::LParen, "`(`")?;
                let i = self.coordinate()?;
                self.expect(Token::Comma, "`,`")?;
                let j = self.coordinate()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(Atom::Orbital { orbital, i, j })
            }
            Token::Int(v) if v >= 1 && v <= self.arity => {
                let i = v - 1;
                match self.advance()? {
                    Token::Eq => Ok(Atom::Eq {
                        i,
                        j: self.coordinate()?,
                    }),
                    Token::Neq => Ok(Atom::Neq {
                        i,
                        j: self.coordinate()?,
                    }),
                    _ => Err(self.lexer.error("expected `=` or `!=`")),
                }
            }
            Token::Int(v) => Err(Error::CoordinateOutOfRange {
                index: v,
                arity: self.arity,
            }),
            _ => Err(self.lexer.error("expected an atom")),
        }
    }

    fn conjunction(&mut self) -> Result<Vec<Atom>> {
        let parenthesized = self.lookahead == Token::LParen;
        if parenthesized {
            self.advance()?;
        }
        let mut atoms = vec![self.atom()?];
        while self.lookahead == Token::Amp {
            self.advance()?;
            atoms.push(self.atom()?);
        }
        if parenthesized {
            self.expect(Token::RParen, "`)`")?;
        }
        Ok(atoms)
    }

    fn dnf(&mut self) -> Result<Dnf> {
        let mut disjuncts = vec![self.conjunction()?];
        while self.lookahead == Token::Pipe {
            self.advance()?;
            disjuncts.push(self.conjunction()?);
        }
        if self.lookahead != Token::End {
            return Err(self.lexer.error("trailing input"));
        }
        Ok(disjuncts)
    }
}

pub fn parse_dnf(text: &str, arity: usize, sig: &CoreSignature) -> Result<Dnf> {
    Parser::new(text, arity, sig)?.dnf()
}

pub fn eval_dnf(dnf: &Dnf, orbit: &Orbit, sig: &CoreSignature) -> bool {
    dnf.iter().any(|conj| {
        conj.iter().all(|atom| match *atom {
            Atom::Orbital { orbital, i, j } => {
                orbit.pair_label(i, j, sig) == PairLabel::Orbital(orbital)
            }
            Atom::Eq { i, j } => orbit.block_of(i) == orbit.block_of(j),
            Atom::Neq { i, j } => orbit.block_of(i) != orbit.block_of(j),
        })
    })
}
