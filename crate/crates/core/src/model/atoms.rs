use std::fmt;

use serde::{Deserialize, Serialize};

/// The three atoms in chain order: control qubit, buffer, target qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    Control,
    Buffer,
    Target,
}

impl Atom {
    pub const ALL: [Atom; 3] = [Atom::Control, Atom::Buffer, Atom::Target];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn species(self) -> Species {
        match self {
            Atom::Buffer => Species::Buffer,
            _ => Species::Qubit,
        }
    }
}

/// Buffer and qubit atoms see different drive channels and carry
/// unprimed / primed level labels respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    Buffer,
    Qubit,
}

/// Internal levels. `Pair` is the Förster partner level reached only
/// through the blockade coupling (|q⟩, |q'⟩).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Ground,
    Intermediate,
    Rydberg,
    Pair,
}

impl Level {
    pub fn is_rydberg(self) -> bool {
        matches!(self, Level::Rydberg | Level::Pair)
    }

    pub fn is_excited(self) -> bool {
        self != Level::Ground
    }

    pub fn label(self, species: Species) -> &'static str {
        match (self, species) {
            (Level::Ground, _) => "1",
            (Level::Intermediate, Species::Buffer) => "e",
            (Level::Intermediate, Species::Qubit) => "e'",
            (Level::Rydberg, Species::Buffer) => "r",
            (Level::Rydberg, Species::Qubit) => "r'",
            (Level::Pair, Species::Buffer) => "q",
            (Level::Pair, Species::Qubit) => "q'",
        }
    }
}

/// Which atoms start in |1⟩ (and therefore take part in the dynamics).
/// Atoms in |0⟩ are spectators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation {
    bits: [bool; 3],
}

impl Occupation {
    pub fn new(control: bool, buffer: bool, target: bool) -> Self {
        Self {
            bits: [control, buffer, target],
        }
    }

    /// Parses a two-qubit label `"ct"` (buffer implicitly in |1⟩) or a
    /// three-atom label `"cbt"`.
    pub fn parse(label: &str) -> Option<Self> {
        let bits: Vec<bool> = label
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<_>>()?;
        match bits.as_slice() {
            [c, t] => Some(Self::new(*c, true, *t)),
            [c, b, t] => Some(Self::new(*c, *b, *t)),
            _ => None,
        }
    }

    pub fn contains(&self, atom: Atom) -> bool {
        self.bits[atom.index()]
    }

    pub fn active(&self) -> Vec<Atom> {
        Atom::ALL.into_iter().filter(|a| self.contains(*a)).collect()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Three-character label in chain order, e.g. `"111"`.
    pub fn label(&self) -> String {
        self.bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }

    /// Formats a ket over all three atoms; spectators print as `0`.
    pub fn ket(&self, levels: &[(Atom, Level)]) -> String {
        let mut s = String::from("|");
        for atom in Atom::ALL {
            match levels.iter().find(|(a, _)| *a == atom) {
                Some((_, l)) => s.push_str(l.label(atom.species())),
                None if self.contains(atom) => s.push('1'),
                None => s.push('0'),
            }
        }
        s.push('⟩');
        s
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_labels() {
        let o = Occupation::parse("01").unwrap();
        assert_eq!(o.label(), "011");
        assert_eq!(o.active(), vec![Atom::Buffer, Atom::Target]);
        assert_eq!(Occupation::parse("101").unwrap().count(), 2);
        assert!(Occupation::parse("1x").is_none());
        assert!(Occupation::parse("1").is_none());
        let ket = o.ket(&[(Atom::Buffer, Level::Rydberg), (Atom::Target, Level::Pair)]);
        assert_eq!(ket, "|0rq'⟩");
    }
}
