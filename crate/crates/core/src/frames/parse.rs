//! Text formats for polynomials and frames.
//!
//! Frame files look like
//!
//! ```text
//! dim 3
//! field 1 component 1 : 1
//! field 2 component 2 : 1
//! field 2 component 3 : -x1
//! axis 1 : -1 1 dirichlet
//! axis 2 : -1 1 periodic
//! ```
//!
//! `axis` lines are optional (default: Dirichlet on (-1, 1)); an `identification heisenberg_lattice`
//! line selects the twisted gluing of [`Identification::HeisenbergLattice`]. `#` starts a comment.

use super::{AxisSpec, Boundary, Domain, Identification, PolyVectorField, SubRiemannianFrame};
use crate::error::{Error, Result};
use crate::frames::Poly;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str, dim: usize) -> std::result::Result<Vec<Tok>, String> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            'x' => {
                let start = i + 1;
                let mut j = start;
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                let idx: usize = s[start..j].parse().map_err(|_| format!("bad variable name at column {}", i + 1))?;
                if idx == 0 || idx > dim {
                    return Err(format!("variable x{idx} out of range 1..={dim}"));
                }
                out.push(Tok::Var(idx - 1));
                i = j;
            }
            d if d.is_ascii_digit() || d == '.' => {
                let start = i;
                let mut j = i;
                while j < b.len() && (b[j].is_ascii_digit() || b[j] == b'.') {
                    j += 1;
                }
                if j < b.len() && (b[j] == b'e' || b[j] == b'E') {
                    let mut k = j + 1;
                    if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                        k += 1;
                    }
                    if k < b.len() && b[k].is_ascii_digit() {
                        while k < b.len() && b[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let v: f64 = s[start..j].parse().map_err(|_| format!("bad number `{}`", &s[start..j]))?;
                out.push(Tok::Num(v));
                i = j;
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn expr(&mut self) -> std::result::Result<Poly, String> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Poly, String> {
        let mut acc = self.unary()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            acc = acc * self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> std::result::Result<Poly, String> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> std::result::Result<Poly, String> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            match self.peek() {
                Some(Tok::Num(v)) if *v >= 0.0 && v.fract() == 0.0 && *v <= 64.0 => {
                    let e = *v as u32;
                    self.pos += 1;
                    Ok(base.pow(e))
                }
                _ => Err("exponent must be a non-negative integer literal".into()),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> std::result::Result<Poly, String> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Poly::constant(self.dim, v))
            }
            Some(Tok::Var(k)) => {
                self.pos += 1;
                Ok(Poly::var(self.dim, k))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(e)
            }
            Some(t) => Err(format!("unexpected token {t:?}")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

/// Parses a polynomial in `x1..x{dim}` built from `+ - * ^`, parentheses and numeric literals.
pub fn parse_poly(text: &str, dim: usize) -> std::result::Result<Poly, String> {
    let toks = tokenize(text, dim)?;
    if toks.is_empty() {
        return Err("empty expression".into());
    }
    let mut p = Parser { toks: &toks, pos: 0, dim };
    let out = p.expr()?;
    if p.pos != toks.len() {
        return Err(format!("trailing input after token {}", p.pos));
    }
    Ok(out)
}

/// Parses the frame-definition text format.
pub fn parse_frame(text: &str) -> Result<SubRiemannianFrame> {
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let mut dim: Option<usize> = None;
    let mut comps: Vec<Vec<Poly>> = Vec::new();
    let mut axes: Vec<Option<AxisSpec>> = Vec::new();
    let mut ident = Identification::Straight;
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("dim") => {
                if dim.is_some() {
                    return Err(perr(line_no, "duplicate `dim` header".into()));
                }
                let n: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| perr(line_no, "expected `dim <positive integer>`".into()))?;
                dim = Some(n);
                axes = vec![None; n];
            }
            Some("field") => {
                let n = dim.ok_or_else(|| perr(line_no, "`dim` header must come first".into()))?;
                let (head, body) =
                    line.split_once(':').ok_or_else(|| perr(line_no, "expected `:` before polynomial".into()))?;
                let hw: Vec<&str> = head.split_whitespace().collect();
                if hw.len() != 4 || hw[2] != "component" {
                    return Err(perr(line_no, "expected `field i component j : <poly>`".into()));
                }
                let i: usize = hw[1].parse().map_err(|_| perr(line_no, "bad field index".into()))?;
                let j: usize = hw[3].parse().map_err(|_| perr(line_no, "bad component index".into()))?;
                if i == 0 || j == 0 || j > n {
                    return Err(perr(line_no, format!("indices out of range (field {i}, component {j})")));
                }
                let p = parse_poly(body.trim(), n).map_err(|m| perr(line_no, m))?;
                while comps.len() < i {
                    comps.push(vec![Poly::zero(n); n]);
                }
                comps[i - 1][j - 1] = &comps[i - 1][j - 1] + &p;
            }
            Some("axis") => {
                let n = dim.ok_or_else(|| perr(line_no, "`dim` header must come first".into()))?;
                let (head, body) =
                    line.split_once(':').ok_or_else(|| perr(line_no, "expected `axis j : lo hi kind`".into()))?;
                let j: usize = head
                    .split_whitespace()
                    .nth(1)
                    .and_then(|w| w.parse().ok())
                    .filter(|&j| j >= 1 && j <= n)
                    .ok_or_else(|| perr(line_no, "bad axis index".into()))?;
                let bw: Vec<&str> = body.split_whitespace().collect();
                if bw.len() != 3 {
                    return Err(perr(line_no, "expected `axis j : lo hi dirichlet|periodic`".into()));
                }
                let lo: f64 = bw[0].parse().map_err(|_| perr(line_no, "bad lower bound".into()))?;
                let hi: f64 = bw[1].parse().map_err(|_| perr(line_no, "bad upper bound".into()))?;
                if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                    return Err(perr(line_no, "axis needs finite lo < hi".into()));
                }
                let boundary = match bw[2] {
                    "dirichlet" => Boundary::Dirichlet,
                    "periodic" => Boundary::Periodic,
                    other => return Err(perr(line_no, format!("unknown boundary kind `{other}`"))),
                };
                axes[j - 1] = Some(AxisSpec { lo, hi, boundary });
            }
            Some("identification") => {
                ident = match words.next() {
                    Some("straight") => Identification::Straight,
                    Some("heisenberg_lattice") => Identification::HeisenbergLattice,
                    _ => return Err(perr(line_no, "expected `identification straight|heisenberg_lattice`".into())),
                };
            }
            Some(other) => return Err(perr(line_no, format!("unknown directive `{other}`"))),
            None => {}
        }
    }
    dim.ok_or_else(|| perr(0, "missing `dim` header".into()))?;
    if comps.is_empty() {
        return Err(perr(0, "no fields defined".into()));
    }
    let fields = comps.into_iter().map(PolyVectorField::new).collect();
    let axes = axes.into_iter().map(|a| a.unwrap_or(AxisSpec::dirichlet(-1.0, 1.0))).collect();
    SubRiemannianFrame::new(fields, Domain::new(axes).with_identification(ident))
}

/// Writes a frame in the format read by [`parse_frame`].
pub fn format_frame(frame: &SubRiemannianFrame) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dim {}", frame.dim());
    for (i, f) in frame.fields().iter().enumerate() {
        let mut any = false;
        for (j, c) in f.components().iter().enumerate() {
            if !c.is_zero() {
                any = true;
                let _ = writeln!(s, "field {} component {} : {}", i + 1, j + 1, c);
            }
        }
        if !any {
            let _ = writeln!(s, "field {} component 1 : 0", i + 1);
        }
    }
    for (j, a) in frame.domain().axes().iter().enumerate() {
        let kind = match a.boundary {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Periodic => "periodic",
        };
        let _ = writeln!(s, "axis {} : {} {} {}", j + 1, a.lo, a.hi, kind);
    }
    if frame.domain().identification() == Identification::HeisenbergLattice {
        s.push_str("identification heisenberg_lattice\n");
    }
    s
}
