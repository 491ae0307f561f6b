use std::collections::{BTreeMap, HashSet};
use std::fmt;

use super::elements;
use super::{Atom, Bond, BondOrder, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmilesErrorKind {
    Empty,
    NonAscii,
    UnbalancedParenthesis,
    UnclosedRing(u32),
    UnknownElement(String),
    BracketSyntax(String),
    InvalidRingBond(u32),
    DanglingBond,
    MisplacedToken(char),
    UnexpectedCharacter(char),
}

/// A SMILES syntax error with the byte offset it was detected at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

impl fmt::Display for SmilesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SmilesErrorKind::*;
        match &self.kind {
            Empty => write!(f, "empty SMILES"),
            NonAscii => write!(f, "non-ASCII byte at offset {}", self.offset),
            UnbalancedParenthesis => write!(f, "unbalanced parenthesis at offset {}", self.offset),
            UnclosedRing(d) => write!(f, "unclosed ring bond {} opened at offset {}", d, self.offset),
            UnknownElement(s) => write!(f, "unknown element '{}' at offset {}", s, self.offset),
            BracketSyntax(msg) => write!(f, "bracket atom syntax error at offset {}: {}", self.offset, msg),
            InvalidRingBond(d) => write!(f, "invalid ring closure {} at offset {}", d, self.offset),
            DanglingBond => write!(f, "bond symbol without a following atom at offset {}", self.offset),
            MisplacedToken(c) => write!(f, "misplaced '{}' at offset {}", c, self.offset),
            UnexpectedCharacter(c) => write!(f, "unexpected character '{}' at offset {}", c, self.offset),
        }
    }
}

impl std::error::Error for SmilesError {}

fn err<T>(offset: usize, kind: SmilesErrorKind) -> Result<T, SmilesError> {
    Err(SmilesError { offset, kind })
}

/// Parses a SMILES string into a [`MolGraph`].
///
/// Supports the organic subset, bracket atoms (isotope, chirality and atom
/// class are accepted and dropped), branches, ring closures including `%nn`,
/// explicit bond symbols and `.` fragment separators. Directional bonds `/`
/// and `\` are read as single bonds. Leading and trailing whitespace is
/// ignored.
pub fn parse_smiles(text: &str) -> Result<MolGraph, SmilesError> {
    let trimmed_start = text.len() - text.trim_start().len();
    let body = text.trim();
    if body.is_empty() {
        return err(0, SmilesErrorKind::Empty);
    }
    if let Some(pos) = body.bytes().position(|b| !b.is_ascii()) {
        return err(trimmed_start + pos, SmilesErrorKind::NonAscii);
    }
    let mut parser = Parser {
        bytes: body.as_bytes(),
        base: trimmed_start,
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        pairs: HashSet::new(),
        prev: None,
        branches: Vec::new(),
        pending: None,
        rings: BTreeMap::new(),
    };
    parser.run()?;
    Ok(MolGraph::from_parts(parser.atoms, parser.bonds))
}

struct Parser<'a> {
    bytes: &'a [u8],
    base: usize,
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    pairs: HashSet<(usize, usize)>,
    prev: Option<usize>,
    branches: Vec<(usize, usize)>,
    pending: Option<(BondOrder, usize)>,
    rings: BTreeMap<u32, (usize, Option<BondOrder>, usize)>,
}

impl Parser<'_> {
    fn offset(&self) -> usize {
        self.base + self.pos
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let at = self.offset();
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return err(at, SmilesErrorKind::MisplacedToken('('));
                    };
                    if self.pending.is_some() {
                        return err(at, SmilesErrorKind::DanglingBond);
                    }
                    self.branches.push((prev, at));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return err(at, SmilesErrorKind::DanglingBond);
                    }
                    let Some((atom, _)) = self.branches.pop() else {
                        return err(at, SmilesErrorKind::UnbalancedParenthesis);
                    };
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return err(at, SmilesErrorKind::MisplacedToken(c as char));
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        b'$' => {
                            return err(at, SmilesErrorKind::UnexpectedCharacter('$'));
                        }
                        _ => BondOrder::Single,
                    };
                    self.pending = Some((order, at));
                    self.pos += 1;
                }
                b'.' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return err(at, SmilesErrorKind::MisplacedToken('.'));
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom);
                }
                _ if c.is_ascii_alphabetic() => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom);
                }
                _ => return err(at, SmilesErrorKind::UnexpectedCharacter(c as char)),
            }
        }
        if let Some(&(_, at)) = self.branches.last() {
            return err(at, SmilesErrorKind::UnbalancedParenthesis);
        }
        if let Some((_, at)) = self.pending {
            return err(at, SmilesErrorKind::DanglingBond);
        }
        if let Some((&digit, &(_, _, at))) = self.rings.iter().next() {
            return err(at, SmilesErrorKind::UnclosedRing(digit));
        }
        Ok(())
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn add_atom(&mut self, atom: Atom) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let order = match self.pending.take() {
                Some((o, _)) => o,
                None => self.default_order(prev, idx),
            };
            // a fresh atom cannot already be bonded to `prev`
            let _ = self.connect(prev, idx, order);
        }
        self.pending = None;
        self.prev = Some(idx);
    }

    fn connect(&mut self, a: usize, b: usize, order: BondOrder) -> Result<(), ()> {
        let key = (a.min(b), a.max(b));
        if a == b || !self.pairs.insert(key) {
            return Err(());
        }
        self.bonds.push(Bond { a, b, order });
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let at = self.offset();
        let digit = if self.peek() == Some(b'%') {
            match (self.peek_at(1), self.peek_at(2)) {
                (Some(d1), Some(d2)) if d1.is_ascii_digit() && d2.is_ascii_digit() => {
                    self.pos += 3;
                    u32::from(d1 - b'0') * 10 + u32::from(d2 - b'0')
                }
                _ => return err(at, SmilesErrorKind::MisplacedToken('%')),
            }
        } else {
            let d = u32::from(self.peek().unwrap_or(b'0') - b'0');
            self.pos += 1;
            d
        };
        let Some(prev) = self.prev else {
            return err(at, SmilesErrorKind::InvalidRingBond(digit));
        };
        let bond_here = self.pending.take().map(|(o, _)| o);
        match self.rings.remove(&digit) {
            None => {
                self.rings.insert(digit, (prev, bond_here, at));
            }
            Some((open, bond_there, _)) => {
                let order = match (bond_there, bond_here) {
                    (Some(x), Some(y)) if x != y => {
                        return err(at, SmilesErrorKind::InvalidRingBond(digit));
                    }
                    (Some(x), _) | (None, Some(x)) => x,
                    (None, None) => self.default_order(open, prev),
                };
                if self.connect(open, prev, order).is_err() {
                    return err(at, SmilesErrorKind::InvalidRingBond(digit));
                }
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let at = self.offset();
        let c = self.peek().unwrap_or(b' ');
        let next = self.peek_at(1);
        let (element, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => (elements::CHLORINE, false, 2),
            (b'B', Some(b'r')) => (elements::BROMINE, false, 2),
            (b'B', _) => (elements::BORON, false, 1),
            (b'C', _) => (elements::CARBON, false, 1),
            (b'N', _) => (elements::NITROGEN, false, 1),
            (b'O', _) => (elements::OXYGEN, false, 1),
            (b'P', _) => (elements::PHOSPHORUS, false, 1),
            (b'S', _) => (elements::SULFUR, false, 1),
            (b'F', _) => (elements::FLUORINE, false, 1),
            (b'I', _) => (elements::IODINE, false, 1),
            (b'b', _) => (elements::BORON, true, 1),
            (b'c', _) => (elements::CARBON, true, 1),
            (b'n', _) => (elements::NITROGEN, true, 1),
            (b'o', _) => (elements::OXYGEN, true, 1),
            (b'p', _) => (elements::PHOSPHORUS, true, 1),
            (b's', _) => (elements::SULFUR, true, 1),
            _ => {
                return err(at, SmilesErrorKind::UnknownElement((c as char).to_string()));
            }
        };
        self.pos += len;
        Ok(Atom {
            element,
            aromatic,
            formal_charge: 0,
            explicit_h: 0,
            implicit_h: 0,
            degree: 0,
            in_ring: false,
            bracket: false,
        })
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.offset();
        self.pos += 1;
        let syntax = |p: &Self, msg: &str| -> SmilesError {
            SmilesError {
                offset: p.offset(),
                kind: SmilesErrorKind::BracketSyntax(msg.to_string()),
            }
        };
        // isotope
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        let sym_at = self.offset();
        let (element, aromatic) = match self.peek() {
            Some(c) if c.is_ascii_uppercase() => {
                let two = self
                    .peek_at(1)
                    .filter(u8::is_ascii_lowercase)
                    .map(|l| format!("{}{}", c as char, l as char));
                match two.as_deref().and_then(elements::atomic_number) {
                    Some(z) => {
                        self.pos += 2;
                        (z, false)
                    }
                    None => {
                        let one = (c as char).to_string();
                        let Some(z) = elements::atomic_number(&one) else {
                            return err(sym_at, SmilesErrorKind::UnknownElement(one));
                        };
                        self.pos += 1;
                        (z, false)
                    }
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let two = self
                    .peek_at(1)
                    .filter(u8::is_ascii_lowercase)
                    .map(|l| format!("{}{}", c as char, l as char));
                let two_z = match two.as_deref() {
                    Some("se") => Some(34),
                    Some("as") => Some(33),
                    Some("te") => Some(52),
                    _ => None,
                };
                if let Some(z) = two_z {
                    self.pos += 2;
                    (z, true)
                } else {
                    let upper = (c.to_ascii_uppercase() as char).to_string();
                    match elements::atomic_number(&upper) {
                        Some(z) if elements::aromatic_capable(z) => {
                            self.pos += 1;
                            (z, true)
                        }
                        _ => {
                            return err(sym_at, SmilesErrorKind::UnknownElement((c as char).to_string()));
                        }
                    }
                }
            }
            Some(b'*') => return err(sym_at, SmilesErrorKind::UnknownElement("*".into())),
            _ => return Err(syntax(self, "expected element symbol")),
        };
        // chirality
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            }
        }
        let mut explicit_h = 0;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            explicit_h = 1;
            if let Some(d @ b'0'..=b'9') = self.peek() {
                explicit_h = u32::from(d - b'0');
                self.pos += 1;
            }
        }
        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            charge = unit;
            if let Some(b'0'..=b'9') = self.peek() {
                let mut mag: i32 = 0;
                while let Some(d @ b'0'..=b'9') = self.peek() {
                    mag = mag.saturating_mul(10).saturating_add(i32::from(d - b'0'));
                    self.pos += 1;
                    if mag > 15 {
                        return Err(syntax(self, "charge magnitude too large"));
                    }
                }
                charge = unit * mag;
            } else {
                while self.peek() == Some(sign) {
                    charge += unit;
                    self.pos += 1;
                }
            }
        }
        if self.peek() == Some(b':') {
            self.pos += 1;
            if !matches!(self.peek(), Some(b'0'..=b'9')) {
                return Err(syntax(self, "atom class requires digits"));
            }
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        match self.peek() {
            Some(b']') => self.pos += 1,
            None => {
                return err(open, SmilesErrorKind::BracketSyntax("unterminated bracket atom".into()));
            }
            Some(_) => return Err(syntax(self, "unexpected character in bracket atom")),
        }
        Ok(Atom {
            element,
            aromatic,
            formal_charge: charge,
            explicit_h,
            implicit_h: 0,
            degree: 0,
            in_ring: false,
            bracket: true,
        })
    }
}
