//! Regular hyperbolic octagon with 45° corners and its side pairings.
//!
//! Sides are numbered counterclockwise; side k joins corners k and k+1 and its
//! midpoint lies in direction (k+1)π/4. The pairings are chosen so that the
//! relator a b A B c d C D is the identity.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

use crate::hypgeom::{disk_rotation, disk_translation, Action, Model};
use crate::surface::word::{Letter, Word};

/// Hyperbolic distance from the center to a corner.
pub fn corner_distance() -> f64 {
    let t = (PI / 8.0).tan();
    (1.0 / (t * t)).acosh()
}

/// Hyperbolic distance from the center to a side midpoint.
pub fn inradius() -> f64 {
    (1.0 / (PI / 8.0).tan()).acosh()
}

pub fn corner(k: usize) -> C {
    let r = (corner_distance() / 2.0).tanh();
    C::from_polar(r, (2 * k + 1) as f64 * PI / 8.0)
}

fn side_angle(k: usize) -> f64 {
    (k + 1) as f64 * PI / 4.0
}

/// Isometry carrying side `from` onto side `to`, with the octagon landing on the
/// far side of `to`.
pub fn side_map(from: usize, to: usize) -> Action {
    disk_rotation(side_angle(to))
        .compose(&disk_translation(2.0 * inradius()))
        .compose(&disk_rotation(PI - side_angle(from)))
}

/// Actions of a, b, c, d.
pub fn generator_actions() -> [Action; 4] {
    [side_map(2, 0), side_map(1, 3), side_map(6, 4), side_map(5, 7)]
}

/// Action of a letter given generator actions.
pub fn letter_action(gens: &[Action], l: Letter) -> Action {
    let g = gens[(l.unsigned_abs() - 1) as usize];
    if l > 0 {
        g
    } else {
        g.inverse()
    }
}

pub fn word_action(gens: &[Action], w: &Word, model: Model) -> Action {
    let mut acc = match model {
        Model::HyperbolicDisk => Action::IDENTITY_DISK,
        Model::Euclidean => Action::Shift(C::new(0.0, 0.0)),
    };
    for &l in &w.0 {
        acc = acc.compose(&letter_action(gens, l));
    }
    acc
}

/// Shortest words h_k with h_k(corner 0) = corner k, by breadth-first search.
pub fn corner_lifts() -> Vec<Word> {
    let gens = generator_actions();
    let p0 = corner(0);
    let mut found: Vec<Option<Word>> = vec![None; 8];
    found[0] = Some(Word::empty());
    let letters: [Letter; 8] = [1, -1, 2, -2, 3, -3, 4, -4];
    let mut frontier = vec![Word::empty()];
    for _ in 0..6 {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                if w.0.last() == Some(&-l) {
                    continue;
                }
                let mut v = w.clone();
                v.0.push(l);
                let img = word_action(&gens, &v, Model::HyperbolicDisk).apply(p0);
                for (k, slot) in found.iter_mut().enumerate() {
                    if slot.is_none() && (img - corner(k)).norm() < 1e-9 {
                        *slot = Some(v.clone());
                    }
                }
                next.push(v);
            }
        }
        if found.iter().all(|f| f.is_some()) {
            break;
        }
        frontier = next;
    }
    found.into_iter().map(|f| f.expect("corner lift not found")).collect()
}

/// Deck elements carrying the octagon to its neighbours across each side,
/// as letters.
pub const NEIGHBOUR_LETTERS: [Letter; 8] = [1, -2, -1, 2, 3, -4, -3, 4];

/// Moves `z` into the closed octagon (the Dirichlet domain of the origin).
/// Returns the reduced point and the isometry `g` with `g(z)` = reduced point.
pub fn reduce_to_domain(z: C) -> (C, Action) {
    let m = Model::HyperbolicDisk;
    let gens = generator_actions();
    let centers: Vec<(C, Action)> = NEIGHBOUR_LETTERS
        .iter()
        .map(|&l| {
            let g = letter_action(&gens, l);
            (g.apply(C::new(0.0, 0.0)), g.inverse())
        })
        .collect();
    let mut cur = z;
    let mut acc = Action::IDENTITY_DISK;
    for _ in 0..64 {
        let d0 = m.dist(cur, C::new(0.0, 0.0));
        let best = centers
            .iter()
            .map(|(c, back)| (m.dist(cur, *c), back))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .expect("eight neighbours");
        if best.0 >= d0 - 1e-12 {
            break;
        }
        cur = best.1.apply(cur);
        acc = best.1.compose(&acc);
    }
    (cur, acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relator_is_identity() {
        let g = generator_actions();
        let w = Word::parse("abABcdCD").unwrap();
        let r = word_action(&g, &w, Model::HyperbolicDisk);
        assert!(r.deviation_from_identity() < 1e-10);
    }

    #[test]
    fn sides_are_paired() {
        let m = Model::HyperbolicDisk;
        for (from, to) in [(2, 0), (1, 3), (6, 4), (5, 7)] {
            let g = side_map(from, to);
            // endpoints of `from` land on endpoints of `to`, reversed
            let a = g.apply(corner(from));
            let b = g.apply(corner((from + 1) % 8));
            assert!(m.dist(a, corner((to + 1) % 8)) < 1e-10);
            assert!(m.dist(b, corner(to)) < 1e-10);
            // the center lands outside
            assert!(g.apply(C::new(0.0, 0.0)).norm() > corner(0).norm() * 0.9);
        }
    }

    #[test]
    fn neighbour_letters_match_sides() {
        let g = generator_actions();
        let m = Model::HyperbolicDisk;
        for (k, &l) in NEIGHBOUR_LETTERS.iter().enumerate() {
            let c = letter_action(&g, l).apply(C::new(0.0, 0.0));
            // the neighbour centre is the reflection of the origin in side k
            let mid = C::from_polar((inradius() / 2.0).tanh(), side_angle(k));
            assert!((m.dist(c, mid) - inradius()).abs() < 1e-10);
            assert!((m.dist(c, C::new(0.0, 0.0)) - 2.0 * inradius()).abs() < 1e-10);
        }
        let z = letter_action(&g, 1).compose(&letter_action(&g, 2)).apply(C::new(0.1, 0.05));
        let (r, back) = reduce_to_domain(z);
        assert!((r - C::new(0.1, 0.05)).norm() < 1e-10);
        assert!((back.apply(z) - r).norm() < 1e-12);
    }

    #[test]
    fn corner_lifts_hit_corners() {
        let g = generator_actions();
        for (k, w) in corner_lifts().iter().enumerate() {
            let p = word_action(&g, w, Model::HyperbolicDisk).apply(corner(0));
            assert!((p - corner(k)).norm() < 1e-10, "corner {k}");
        }
    }
}
