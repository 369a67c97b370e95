use std::fmt;

use serde::{Deserialize, Serialize};

use super::Gate;
use crate::model::{PauliAxis, PauliString};

/// A Pauli string with a real sign, closed under Clifford conjugation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedPauli {
    pub negative: bool,
    pub string: PauliString,
}

impl SignedPauli {
    pub fn positive(string: PauliString) -> Self {
        Self {
            negative: false,
            string,
        }
    }

    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    /// `G P G†` for a Clifford gate; `None` for rotations.
    pub fn conjugate_by(&self, gate: &Gate) -> SignedPauli {
        self.try_conjugate_by(gate)
            .expect("only H and CZ are propagated through Pauli strings")
    }

    pub fn try_conjugate_by(&self, gate: &Gate) -> Option<SignedPauli> {
        let image = |generator: Phased| -> Phased {
            match *gate {
                Gate::H { site } => {
                    let bit = 1u64 << site;
                    let (x, z) = (generator.x & bit, generator.z & bit);
                    Phased {
                        x: (generator.x & !bit) | if z != 0 { bit } else { 0 },
                        z: (generator.z & !bit) | if x != 0 { bit } else { 0 },
                        k: generator.k,
                    }
                }
                Gate::Cz { a, b } => {
                    let mut out = generator;
                    if generator.x & (1 << a) != 0 {
                        out.z ^= 1 << b;
                    }
                    if generator.x & (1 << b) != 0 {
                        out.z ^= 1 << a;
                    }
                    out
                }
                _ => unreachable!(),
            }
        };
        if !matches!(gate, Gate::H { .. } | Gate::Cz { .. }) {
            return None;
        }
        let op = Phased::from_signed(self);
        // op = i^k ∏ X^x ∏ Z^z; conjugate each single-site generator in order.
        let mut acc = Phased { x: 0, z: 0, k: op.k };
        for site in bits(op.x) {
            acc = acc.mul(image(Phased { x: 1 << site, z: 0, k: 0 }));
        }
        for site in bits(op.z) {
            acc = acc.mul(image(Phased { x: 0, z: 1 << site, k: 0 }));
        }
        acc.to_signed()
    }

    /// `self · other`, or `None` when the two anticommute and the product
    /// is not Hermitian.
    pub fn product(&self, other: &SignedPauli) -> Option<SignedPauli> {
        Phased::from_signed(self)
            .mul(Phased::from_signed(other))
            .to_signed()
    }

    /// Whether the Pauli `∏ X^x ∏ Z^z` (any phase) commutes with `self`.
    pub fn commutes_with(&self, x: u64, z: u64) -> bool {
        let (flip, phase, _) = self.string.masks();
        ((flip & z).count_ones() + (phase & x).count_ones()) % 2 == 0
    }
}

impl fmt::Display for SignedPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-")?;
        }
        write!(f, "{}", self.string)
    }
}

/// `i^k ∏ X^x ∏ Z^z` over bitmasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Phased {
    x: u64,
    z: u64,
    k: u32,
}

impl Phased {
    fn from_signed(p: &SignedPauli) -> Self {
        let (flip, phase, num_y) = p.string.masks();
        // Y = i X Z
        Phased {
            x: flip,
            z: phase,
            k: (num_y + if p.negative { 2 } else { 0 }) % 4,
        }
    }

    fn mul(self, rhs: Phased) -> Phased {
        let swaps = (self.z & rhs.x).count_ones();
        Phased {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            k: (self.k + rhs.k + 2 * swaps) % 4,
        }
    }

    fn to_signed(self) -> Option<SignedPauli> {
        let num_y = (self.x & self.z).count_ones();
        let residual = (self.k + 4 - num_y % 4) % 4;
        let negative = match residual {
            0 => false,
            2 => true,
            _ => return None,
        };
        let terms = bits(self.x | self.z).map(|site| {
            let axis = match (self.x >> site & 1, self.z >> site & 1) {
                (1, 1) => PauliAxis::Y,
                (1, 0) => PauliAxis::X,
                _ => PauliAxis::Z,
            };
            (site, axis)
        });
        let string = PauliString::new(64, terms).ok()?;
        Some(SignedPauli { negative, string })
    }
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask >> i & 1 == 1)
}
