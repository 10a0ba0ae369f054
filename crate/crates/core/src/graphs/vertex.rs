use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Canonical vertex address. Two addresses are equal iff they name the same
/// vertex of their family.
///
/// Text forms (used in JSON and CSV):
///
/// | variant      | example    | meaning                                        |
/// |--------------|------------|------------------------------------------------|
/// | `Int`        | `-3`       | integer site of a line family                  |
/// | `End`        | `e2:1.0`   | 2 father-steps above the origin, then word 1,0 |
/// | `Rooted`     | `r:0.1`    | descent word from the root                     |
/// | `Product`    | `p1,-3`    | (u mod 3, x)                                   |
/// | `Segment`    | `s3:2`     | offset 2 on segment 3 (`hub` for the centre)   |
/// | `Decorated`  | `d8'`      | site 8, `'` marks the pendant vertex           |
/// | `Index`      | `#12`      | opaque vertex of a loaded network              |
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexId {
    Int(i64),
    /// Tree with a distinguished end: `up` steps toward the end from the
    /// origin, then descent along `word`. When `up > 0` and the word is
    /// nonempty its first letter is never 0 (branch 0 leads back down to the
    /// origin).
    End { up: u32, word: Vec<u8> },
    /// Rooted tree; the level is the word length.
    Rooted(Vec<u8>),
    Product { u: u8, x: i64 },
    /// `offset == 0` is the hub, canonically stored with `seg == 0`.
    Segment { seg: u32, offset: u32 },
    Decorated { x: i64, pendant: bool },
    Index(u32),
}

impl VertexId {
    pub const HUB: VertexId = VertexId::Segment { seg: 0, offset: 0 };

    pub fn as_int(&self) -> Option<i64> {
        match self {
            VertexId::Int(x) => Some(*x),
            _ => None,
        }
    }
}

fn write_word(f: &mut fmt::Formatter<'_>, word: &[u8]) -> fmt::Result {
    for (i, c) in word.iter().enumerate() {
        if i > 0 {
            f.write_str(".")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

fn parse_word(s: &str) -> Option<Vec<u8>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split('.').map(|t| t.parse::<u8>().ok()).collect()
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Int(x) => write!(f, "{x}"),
            VertexId::End { up, word } => {
                write!(f, "e{up}:")?;
                write_word(f, word)
            }
            VertexId::Rooted(word) => {
                f.write_str("r:")?;
                write_word(f, word)
            }
            VertexId::Product { u, x } => write!(f, "p{u},{x}"),
            VertexId::Segment { offset: 0, .. } => f.write_str("hub"),
            VertexId::Segment { seg, offset } => write!(f, "s{seg}:{offset}"),
            VertexId::Decorated { x, pendant } => {
                write!(f, "d{x}")?;
                if *pendant {
                    f.write_str("'")?;
                }
                Ok(())
            }
            VertexId::Index(i) => write!(f, "#{i}"),
        }
    }
}

impl FromStr for VertexId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Address(s.to_string());
        if s == "hub" {
            return Ok(VertexId::HUB);
        }
        if let Some(rest) = s.strip_prefix('e') {
            let (up, word) = rest.split_once(':').ok_or_else(bad)?;
            let up = up.parse().map_err(|_| bad())?;
            let word = parse_word(word).ok_or_else(bad)?;
            if up > 0 && word.first() == Some(&0) {
                return Err(bad());
            }
            return Ok(VertexId::End { up, word });
        }
        if let Some(rest) = s.strip_prefix("r:") {
            return parse_word(rest).map(VertexId::Rooted).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix('p') {
            let (u, x) = rest.split_once(',').ok_or_else(bad)?;
            let u: u8 = u.parse().map_err(|_| bad())?;
            if u >= 3 {
                return Err(bad());
            }
            return Ok(VertexId::Product { u, x: x.parse().map_err(|_| bad())? });
        }
        if let Some(rest) = s.strip_prefix('s') {
            let (seg, offset) = rest.split_once(':').ok_or_else(bad)?;
            let seg: u32 = seg.parse().map_err(|_| bad())?;
            let offset: u32 = offset.parse().map_err(|_| bad())?;
            if seg == 0 || offset == 0 || offset > seg {
                return Err(bad());
            }
            return Ok(VertexId::Segment { seg, offset });
        }
        if let Some(rest) = s.strip_prefix('d') {
            let (num, pendant) = match rest.strip_suffix('\'') {
                Some(n) => (n, true),
                None => (rest, false),
            };
            return Ok(VertexId::Decorated { x: num.parse().map_err(|_| bad())?, pendant });
        }
        if let Some(rest) = s.strip_prefix('#') {
            return Ok(VertexId::Index(rest.parse().map_err(|_| bad())?));
        }
        s.parse::<i64>().map(VertexId::Int).map_err(|_| bad())
    }
}
