use std::fmt;
use std::str::FromStr;

use super::{Behaviour, Scenario};
use crate::error::{domain, Error, Result};

fn bit(v: u8) -> u8 {
    assert!(v <= 1, "bit value must be 0 or 1, got {v}");
    v
}

/// Label `(alpha, beta, gamma)` of a PR box and of the matching CHSH functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrLabel {
    pub alpha: u8,
    pub beta: u8,
    pub gamma: u8,
}

impl PrLabel {
    pub const STANDARD: PrLabel = PrLabel { alpha: 0, beta: 0, gamma: 0 };

    pub fn new(alpha: u8, beta: u8, gamma: u8) -> Self {
        PrLabel { alpha: bit(alpha), beta: bit(beta), gamma: bit(gamma) }
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < 8);
        PrLabel::new((i >> 2) as u8 & 1, (i >> 1) as u8 & 1, i as u8 & 1)
    }

    pub fn index(&self) -> usize {
        4 * self.alpha as usize + 2 * self.beta as usize + self.gamma as usize
    }

    pub fn all() -> impl Iterator<Item = PrLabel> {
        (0..8).map(PrLabel::from_index)
    }

    pub fn bits(&self) -> [u8; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// The LD boxes saturating `B^{abc} = 2`, in label order.
    pub fn saturating_lds(&self) -> Vec<LdLabel> {
        LdLabel::all()
            .filter(|ld| (chsh_value(&ld_box(*ld), *self) - 2.0).abs() < 1e-12)
            .collect()
    }
}

impl fmt::Display for PrLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.alpha, self.beta, self.gamma)
    }
}

impl FromStr for PrLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = parse_bits::<3>(s.strip_prefix("PR:").unwrap_or(s))?;
        Ok(PrLabel::new(b[0], b[1], b[2]))
    }
}

/// Label `(alpha, beta, gamma, delta)` of the LD box `a = alpha*x + beta`, `b = gamma*y + delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LdLabel {
    pub alpha: u8,
    pub beta: u8,
    pub gamma: u8,
    pub delta: u8,
}

impl LdLabel {
    pub fn new(alpha: u8, beta: u8, gamma: u8, delta: u8) -> Self {
        LdLabel { alpha: bit(alpha), beta: bit(beta), gamma: bit(gamma), delta: bit(delta) }
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < 16);
        LdLabel::new((i >> 3) as u8 & 1, (i >> 2) as u8 & 1, (i >> 1) as u8 & 1, i as u8 & 1)
    }

    pub fn index(&self) -> usize {
        8 * self.alpha as usize + 4 * self.beta as usize + 2 * self.gamma as usize + self.delta as usize
    }

    pub fn all() -> impl Iterator<Item = LdLabel> {
        (0..16).map(LdLabel::from_index)
    }

    pub fn outputs(&self, x: u8, y: u8) -> (u8, u8) {
        ((self.alpha & x) ^ self.beta, (self.gamma & y) ^ self.delta)
    }
}

impl fmt::Display for LdLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}{}", self.alpha, self.beta, self.gamma, self.delta)
    }
}

impl FromStr for LdLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = parse_bits::<4>(s.strip_prefix("LD:").unwrap_or(s))?;
        Ok(LdLabel::new(b[0], b[1], b[2], b[3]))
    }
}

fn parse_bits<const N: usize>(s: &str) -> Result<[u8; N]> {
    let bytes = s.as_bytes();
    if bytes.len() != N || !bytes.iter().all(|c| *c == b'0' || *c == b'1') {
        return Err(domain(format!("expected {N} bits, got {s:?}")));
    }
    let mut out = [0u8; N];
    for (o, c) in out.iter_mut().zip(bytes) {
        *o = c - b'0';
    }
    Ok(out)
}

/// PR box: probability 1/2 where `a ^ b = xy ^ alpha x ^ beta y ^ gamma`.
pub fn pr_box(label: PrLabel) -> Behaviour {
    let PrLabel { alpha, beta, gamma } = label;
    let mut probs = vec![0.0; 16];
    for x in 0..2u8 {
        for y in 0..2u8 {
            let parity = (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma;
            for a in 0..2u8 {
                for b in 0..2u8 {
                    if a ^ b == parity {
                        probs[idx(x, y, a, b)] = 0.5;
                    }
                }
            }
        }
    }
    Behaviour { scenario: Scenario::CHSH, probs }
}

/// Local deterministic box.
pub fn ld_box(label: LdLabel) -> Behaviour {
    let mut probs = vec![0.0; 16];
    for x in 0..2u8 {
        for y in 0..2u8 {
            let (a, b) = label.outputs(x, y);
            probs[idx(x, y, a, b)] = 1.0;
        }
    }
    Behaviour { scenario: Scenario::CHSH, probs }
}

fn idx(x: u8, y: u8, a: u8, b: u8) -> usize {
    (2 * x as usize + y as usize) * 4 + 2 * a as usize + b as usize
}

/// Correlators `E_xy = sum_ab (-1)^(a+b) mu(ab|xy)`, ordered `[E00, E01, E10, E11]`.
pub fn correlators(b: &Behaviour) -> [f64; 4] {
    debug_assert!(b.scenario().is_chsh());
    let mut e = [0.0; 4];
    for (z, ez) in e.iter_mut().enumerate() {
        let blk = b.block(z);
        *ez = blk[0] - blk[1] - blk[2] + blk[3];
    }
    e
}

/// CHSH functional `B^{abc}`.
pub fn chsh_value(b: &Behaviour, label: PrLabel) -> f64 {
    let e = correlators(b);
    let PrLabel { alpha, beta, gamma } = label;
    let sign = |p: u8| if p & 1 == 0 { 1.0 } else { -1.0 };
    sign(gamma) * e[0]
        + sign(beta + gamma) * e[1]
        + sign(alpha + gamma) * e[2]
        + sign(alpha + beta + gamma + 1) * e[3]
}

/// Coordinates on the two-dimensional slice through `PR^{000}`, `PR^{111}`
/// and the uniform behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceCoords {
    pub s: f64,
    pub s_prime: f64,
}

impl SliceCoords {
    pub fn new(s: f64, s_prime: f64) -> Result<Self> {
        let c = SliceCoords { s, s_prime };
        if !c.is_no_signalling() {
            return Err(domain(format!("slice point (S={s}, S'={s_prime}) lies outside the no-signalling square")));
        }
        Ok(c)
    }

    pub fn is_no_signalling(&self) -> bool {
        const TOL: f64 = 1e-12;
        self.s.is_finite()
            && self.s_prime.is_finite()
            && (self.s + self.s_prime).abs() <= 4.0 + TOL
            && (self.s - self.s_prime).abs() <= 4.0 + TOL
    }

    pub fn is_quantum(&self) -> bool {
        self.s * self.s + self.s_prime * self.s_prime <= 8.0 + 1e-12
    }
}

/// Behaviour at a point of the slice.
pub fn slice_behaviour(c: SliceCoords) -> Result<Behaviour> {
    let c = SliceCoords::new(c.s, c.s_prime)?;
    let (s, t) = (c.s, c.s_prime);
    let s1 = ((4.0 + s - t) / 16.0).max(0.0);
    let s2 = ((4.0 + t - s) / 16.0).max(0.0);
    let s3 = ((4.0 + s + t) / 16.0).max(0.0);
    let s4 = ((4.0 - s - t) / 16.0).max(0.0);
    let probs = vec![
        s1, s2, s2, s1, //
        s3, s4, s4, s3, //
        s3, s4, s4, s3, //
        s2, s1, s1, s2,
    ];
    Ok(Behaviour { scenario: Scenario::CHSH, probs })
}
