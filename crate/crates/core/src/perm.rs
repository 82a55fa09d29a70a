//! Permutations of `{1..d}` packed into a single machine word.
//!
//! Images are stored 0-based, four bits per point, so degrees up to
//! [`MAX_DEGREE`] fit in a `u64`. Composition follows the left-action
//! convention used throughout the crate: `p.then_after(q)` is `p ∘ q`,
//! i.e. `q` is applied first.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 16;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Perm {
    packed: u64,
    degree: u8,
}

impl Perm {
    pub fn identity(degree: usize) -> Perm {
        assert!((1..=MAX_DEGREE).contains(&degree), "unsupported degree {degree}");
        let mut packed = 0u64;
        for i in 0..degree {
            packed |= (i as u64) << (4 * i);
        }
        Perm { packed, degree: degree as u8 }
    }

    /// Builds a permutation from 0-based images. Fails unless `images` is a
    /// bijection of `0..images.len()`.
    pub fn from_images(images: &[usize]) -> Result<Perm> {
        let degree = images.len();
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidPermutation(format!("degree {degree} out of range")));
        }
        let mut seen = [false; MAX_DEGREE];
        let mut packed = 0u64;
        for (i, &im) in images.iter().enumerate() {
            if im >= degree || seen[im] {
                return Err(Error::InvalidPermutation(format!("{images:?} is not a bijection")));
            }
            seen[im] = true;
            packed |= (im as u64) << (4 * i);
        }
        Ok(Perm { packed, degree: degree as u8 })
    }

    /// One-line notation with 1-based points, e.g. `[2, 3, 1]` for `(1 2 3)`.
    pub fn from_one_line(images: &[usize]) -> Result<Perm> {
        if images.contains(&0) {
            return Err(Error::InvalidPermutation(format!("{images:?}: points are 1-based")));
        }
        let zero_based: Vec<usize> = images.iter().map(|&x| x - 1).collect();
        Perm::from_images(&zero_based)
    }

    /// Builds a permutation of the given degree from disjoint cycles in
    /// 1-based notation.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Perm> {
        let mut images: Vec<usize> = (0..degree).collect();
        for cycle in cycles {
            for (k, &x) in cycle.iter().enumerate() {
                let y = cycle[(k + 1) % cycle.len()];
                if x == 0 || y == 0 || x > degree || y > degree {
                    return Err(Error::InvalidPermutation(format!("cycle {cycle:?} out of range")));
                }
                images[x - 1] = y - 1;
            }
        }
        Perm::from_images(&images)
    }

    /// The rotation `i ↦ i + shift (mod d)`.
    pub fn rotation(degree: usize, shift: usize) -> Perm {
        let images: Vec<usize> = (0..degree).map(|i| (i + shift) % degree).collect();
        Perm::from_images(&images).expect("rotation is a bijection")
    }

    #[inline]
    pub fn degree(self) -> usize {
        self.degree as usize
    }

    #[inline]
    pub fn apply(self, point: usize) -> usize {
        ((self.packed >> (4 * point)) & 0xf) as usize
    }

    /// `self ∘ other`: apply `other` first.
    #[inline]
    pub fn then_after(self, other: Perm) -> Perm {
        debug_assert_eq!(self.degree, other.degree);
        let mut packed = 0u64;
        for i in 0..self.degree as usize {
            packed |= (self.apply(other.apply(i)) as u64) << (4 * i);
        }
        Perm { packed, degree: self.degree }
    }

    pub fn inverse(self) -> Perm {
        let mut packed = 0u64;
        for i in 0..self.degree as usize {
            packed |= (i as u64) << (4 * self.apply(i));
        }
        Perm { packed, degree: self.degree }
    }

    #[inline]
    pub fn is_identity(self) -> bool {
        self == Perm::identity(self.degree())
    }

    pub fn images(self) -> Vec<usize> {
        (0..self.degree()).map(|i| self.apply(i)).collect()
    }

    pub fn one_line(self) -> Vec<usize> {
        self.images().into_iter().map(|x| x + 1).collect()
    }

    pub fn fixes(self, point: usize) -> bool {
        self.apply(point) == point
    }

    pub fn is_even(self) -> bool {
        let mut seen = [false; MAX_DEGREE];
        let mut transpositions = 0;
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = self.apply(x);
                len += 1;
            }
            transpositions += len - 1;
        }
        transpositions % 2 == 0
    }

    pub fn packed(self) -> u64 {
        self.packed
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Perm {
    /// Cycle notation with 1-based points; the identity prints as `()`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut seen = [false; MAX_DEGREE];
        let mut wrote = false;
        for start in 0..self.degree() {
            if seen[start] || self.fixes(start) {
                continue;
            }
            write!(f, "(")?;
            let mut x = start;
            let mut first = true;
            while !seen[x] {
                seen[x] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}", x + 1)?;
                first = false;
                x = self.apply(x);
            }
            write!(f, ")")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "()")?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for Perm {
    type Error = Error;

    fn try_from(one_line: Vec<usize>) -> Result<Perm> {
        Perm::from_one_line(&one_line)
    }
}

impl From<Perm> for Vec<usize> {
    fn from(p: Perm) -> Vec<usize> {
        p.one_line()
    }
}

/// Closure of a set of permutations under composition. Returns the elements
/// in breadth-first discovery order, identity first.
pub fn generate_group(degree: usize, generators: &[Perm]) -> Vec<Perm> {
    let id = Perm::identity(degree);
    let mut elements = vec![id];
    let mut seen = std::collections::HashSet::from([id]);
    let mut head = 0;
    while head < elements.len() {
        let x = elements[head];
        head += 1;
        for &g in generators {
            let y = x.then_after(g);
            if seen.insert(y) {
                elements.push(y);
            }
        }
    }
    elements
}

/// Orbit of `point` under the group generated by `generators`.
pub fn orbit(degree: usize, generators: &[Perm], point: usize) -> Vec<usize> {
    let mut seen = vec![false; degree];
    seen[point] = true;
    let mut stack = vec![point];
    let mut out = vec![point];
    while let Some(x) = stack.pop() {
        for g in generators {
            let y = g.apply(x);
            if !seen[y] {
                seen[y] = true;
                out.push(y);
                stack.push(y);
            }
        }
    }
    out.sort_unstable();
    out
}
