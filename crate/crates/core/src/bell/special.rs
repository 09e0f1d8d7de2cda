//! Named behaviours outside the CHSH scenario.

use super::{Behaviour, Scenario};

/// `(2,2,3)` box with probability 1/3 where `b - a = xy (mod 3)`.
pub fn nl_box_223() -> Behaviour {
    let sc = Scenario { parties: 2, settings: 2, outcomes: 3 };
    Behaviour::from_fn(sc, |z, c| {
        let xy = z[0] * z[1];
        if (c[1] + 3 - c[0]) % 3 == xy {
            1.0 / 3.0
        } else {
            0.0
        }
    })
    .expect("valid by construction")
}

/// [`nl_box_223`] with both parties' settings flipped.
pub fn nl_box_223_relabelled() -> Behaviour {
    let base = nl_box_223();
    let sc = base.scenario();
    Behaviour::from_fn(sc, |z, c| {
        let flipped = sc.settings_index(&[z[0] ^ 1, z[1] ^ 1]);
        base.prob(flipped, sc.outcome_index(c))
    })
    .expect("valid by construction")
}

#[derive(Clone, Copy)]
enum Cell {
    Corr,
    Anti,
    /// Bob outputs 0, Alice uniform.
    BobZero,
}

impl Cell {
    fn resolve(bit: u8) -> Cell {
        if bit == 0 {
            Cell::Corr
        } else {
            Cell::Anti
        }
    }

    fn prob(self, a: usize, b: usize) -> f64 {
        let hit = match self {
            Cell::Corr => a == b,
            Cell::Anti => a != b,
            Cell::BobZero => b == 0,
        };
        if hit {
            0.5
        } else {
            0.0
        }
    }
}

fn from_cells(cells: [[Cell; 3]; 3]) -> Behaviour {
    let sc = Scenario { parties: 2, settings: 3, outcomes: 2 };
    Behaviour::from_fn(sc, |z, c| cells[z[0]][z[1]].prob(c[0], c[1])).expect("valid by construction")
}

/// The two `(2,3,2)` extremal boxes for a resolution of their four open cells.
///
/// Bits of `resolution` (most significant first) fix the first box's cells
/// `(x,y) = (1,2), (2,1), (2,2)` and the second box's cell `(2,1)`; a zero bit
/// is perfect correlation, a one bit perfect anti-correlation.
pub fn nl_box_232(resolution: u8) -> [Behaviour; 2] {
    assert!(resolution < 16, "resolution must be a 4-bit value");
    let r = |i: u8| Cell::resolve((resolution >> (3 - i)) & 1);
    use Cell::*;
    let first = from_cells([[Corr, Corr, Corr], [Corr, Anti, r(0)], [Corr, r(1), r(2)]]);
    let second = from_cells([[Corr, Corr, BobZero], [Corr, Anti, BobZero], [Corr, r(3), BobZero]]);
    [first, second]
}

/// Equal mixtures of the two `(2,3,2)` boxes for all 16 resolutions.
pub fn nl_boxes_232() -> Vec<Behaviour> {
    (0..16u8)
        .map(|r| {
            let [p, q] = nl_box_232(r);
            p.mix(&q, 0.5).expect("same scenario")
        })
        .collect()
}

/// Tripartite GHZ correlation `(1 + (-1)^(a+b+c) E_xyz) / 8` with
/// `E = 1` for `x+y+z = 0`, `-1` for `x+y+z = 2` and `0` otherwise.
pub fn ghz_mixture_322() -> Behaviour {
    let sc = Scenario { parties: 3, settings: 2, outcomes: 2 };
    Behaviour::from_fn(sc, |z, c| {
        let corr = match z.iter().sum::<usize>() {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        };
        let sign = if c.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 };
        (1.0 + sign * corr) / 8.0
    })
    .expect("valid by construction")
}

pub struct SpecialBoxes {
    pub nl_box_223: Behaviour,
    pub nl_box_223_relabelled: Behaviour,
    pub nl_boxes_232: Vec<Behaviour>,
    pub ghz_mixture_322: Behaviour,
}

pub fn special_boxes() -> SpecialBoxes {
    SpecialBoxes {
        nl_box_223: nl_box_223(),
        nl_box_223_relabelled: nl_box_223_relabelled(),
        nl_boxes_232: nl_boxes_232(),
        ghz_mixture_322: ghz_mixture_322(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::no_signalling_check;

    #[test]
    fn all_special_boxes_are_no_signalling() {
        let s = special_boxes();
        let mut all = vec![s.nl_box_223, s.nl_box_223_relabelled, s.ghz_mixture_322];
        all.extend(s.nl_boxes_232);
        for r in 0..16 {
            all.extend(nl_box_232(r));
        }
        for b in &all {
            let rep = no_signalling_check(b);
            assert!(rep.no_signalling, "violation {}", rep.max_violation);
        }
    }

    #[test]
    fn relabelled_box_shifts_first_row() {
        let b = nl_box_223_relabelled();
        let sc = b.scenario();
        // xy = 00 now carries b - a = 1.
        assert_eq!(b.prob(0, sc.outcome_index(&[0, 1])), 1.0 / 3.0);
        assert_eq!(b.prob(0, sc.outcome_index(&[0, 0])), 0.0);
    }
}
