//! Words over the crossing alphabet and the surface-group word problem.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A generator letter: `+(k+1)` for generator k, `-(k+1)` for its inverse.
pub type Letter = i8;

const LOWER: &[u8] = b"abcdefgh";
const UPPER: &[u8] = b"ABCDEFGH";

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: Letter) -> Self {
        Word(vec![l])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Concatenation followed by free reduction.
    pub fn mul(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        for &l in &other.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn reduced(&self) -> Word {
        Word::empty().mul(self)
    }

    pub fn parse(s: &str) -> Result<Word> {
        let mut v = Vec::with_capacity(s.len());
        for ch in s.bytes() {
            if let Some(k) = LOWER.iter().position(|&c| c == ch) {
                v.push(k as Letter + 1);
            } else if let Some(k) = UPPER.iter().position(|&c| c == ch) {
                v.push(-(k as Letter + 1));
            } else {
                return Err(Error::Parse(format!("bad letter {:?} in word {s:?}", ch as char)));
            }
        }
        Ok(Word(v))
    }

    /// Largest generator index used, plus one.
    pub fn rank(&self) -> usize {
        self.0.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            let k = (l.unsigned_abs() - 1) as usize;
            let c = if l > 0 { LOWER[k] } else { UPPER[k] };
            write!(f, "{}", c as char)?;
        }
        Ok(())
    }
}

impl TryFrom<String> for Word {
    type Error = Error;
    fn try_from(s: String) -> Result<Word> {
        Word::parse(&s)
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

/// Fundamental group of the closed oriented surface of a given genus with
/// generators a, b, (c, d, ...) and relator [a,b][c,d]...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceGroup {
    pub genus: usize,
}

impl SurfaceGroup {
    pub fn new(genus: usize) -> Result<Self> {
        if genus == 0 || genus > 4 {
            return Err(Error::Invalid(format!("unsupported genus {genus}")));
        }
        Ok(SurfaceGroup { genus })
    }

    pub fn generators(&self) -> usize {
        2 * self.genus
    }

    /// a b A B c d C D ...
    pub fn relator(&self) -> Word {
        let mut v = Vec::new();
        for k in 0..self.genus {
            let a = (2 * k + 1) as Letter;
            let b = a + 1;
            v.extend_from_slice(&[a, b, -a, -b]);
        }
        Word(v)
    }

    /// Decides whether `w` is trivial in the group.
    pub fn is_identity(&self, w: &Word) -> bool {
        if w.rank() > self.generators() {
            return false;
        }
        if self.genus == 1 {
            let (mut ea, mut eb) = (0i64, 0i64);
            for &l in &w.0 {
                match l {
                    1 => ea += 1,
                    -1 => ea -= 1,
                    2 => eb += 1,
                    _ => eb -= 1,
                }
            }
            return ea == 0 && eb == 0;
        }
        self.dehn_reduce(w).is_empty()
    }

    pub fn equal(&self, u: &Word, v: &Word) -> bool {
        self.is_identity(&u.mul(&v.inverse()))
    }

    /// Dehn's algorithm: repeatedly replace any subword longer than half of a
    /// cyclic conjugate of the relator (or its inverse) by the shorter complement.
    /// Valid for genus >= 2 where the presentation is C'(1/6).
    pub fn dehn_reduce(&self, w: &Word) -> Word {
        let r = self.relator();
        let n = r.len();
        let mut rels: Vec<Vec<Letter>> = Vec::with_capacity(2 * n);
        for base in [r.0.clone(), r.inverse().0] {
            for s in 0..n {
                rels.push((0..n).map(|k| base[(s + k) % n]).collect());
            }
        }
        let half = n / 2 + 1;
        let mut cur = w.reduced().0;
        'outer: loop {
            for start in 0..cur.len() {
                for rel in &rels {
                    let mut k = 0;
                    while k < n && start + k < cur.len() && cur[start + k] == rel[k] {
                        k += 1;
                    }
                    if k >= half {
                        // rel[0..k] = (rel[k..n])^{-1} in the group
                        let repl: Vec<Letter> = rel[k..n].iter().rev().map(|l| -l).collect();
                        let mut next = cur[..start].to_vec();
                        next.extend_from_slice(&repl);
                        next.extend_from_slice(&cur[start + k..]);
                        cur = Word(next).reduced().0;
                        continue 'outer;
                    }
                }
            }
            break;
        }
        Word(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_display_inverse() {
        let w = Word::parse("aBcD").unwrap();
        assert_eq!(w.to_string(), "aBcD");
        assert_eq!(w.inverse().to_string(), "dCbA");
        assert!(w.mul(&w.inverse()).is_empty());
        assert!(Word::parse("ax").is_err());
    }

    #[test]
    fn genus_two_word_problem() {
        let g = SurfaceGroup::new(2).unwrap();
        assert!(g.is_identity(&g.relator()));
        assert!(g.is_identity(&Word::parse("cdCDabAB").unwrap()));
        assert!(g.is_identity(&Word::parse("dcDCbaBA").unwrap()));
        assert!(!g.is_identity(&Word::parse("abAB").unwrap()));
        assert!(!g.is_identity(&Word::parse("a").unwrap()));
        // conjugate of the relator
        let c = Word::parse("bc").unwrap();
        assert!(g.is_identity(&c.mul(&g.relator()).mul(&c.inverse())));
        assert!(g.equal(&Word::parse("abA").unwrap(), &Word::parse("dcDCb").unwrap()));
    }

    #[test]
    fn torus_word_problem() {
        let g = SurfaceGroup::new(1).unwrap();
        assert!(g.is_identity(&Word::parse("abAB").unwrap()));
        assert!(g.is_identity(&Word::parse("baBA").unwrap()));
        assert!(!g.is_identity(&Word::parse("aab").unwrap()));
    }
}
