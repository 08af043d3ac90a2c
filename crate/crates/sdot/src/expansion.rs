//! Exact floating-point expansion arithmetic (two-sum based, Shewchuk style).
//!
//! A value is carried as a list of nonoverlapping f64 components in
//! increasing magnitude whose exact sum is the represented real. Sums of a
//! few f64 addends and exact sign tests are what the transform identity
//! needs: intermediate rounding would otherwise break it at the last bit.

/// Exact sum of two floats: the rounded sum and the exact residual.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bv = s - a;
    let av = s - bv;
    let br = b - bv;
    let ar = a - av;
    (s, ar + br)
}

/// Components an expansion can hold; enough for sums of a few addends and
/// their pairwise differences.
const CAPACITY: usize = 12;

/// An exact expansion; components nonoverlapping, increasing in magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion {
    parts: [f64; CAPACITY],
    len: usize,
}

impl Default for Expansion {
    fn default() -> Self {
        Expansion::zero()
    }
}

impl Expansion {
    pub fn zero() -> Self {
        Expansion {
            parts: [0.0; CAPACITY],
            len: 0,
        }
    }

    /// Exact sum of the given addends.
    pub fn from_addends(addends: &[f64]) -> Self {
        let mut e = Expansion::zero();
        for &a in addends {
            e.add(a);
        }
        e
    }

    /// Grows the expansion by one float, exactly.
    pub fn add(&mut self, b: f64) {
        let mut q = b;
        let mut out = [0.0; CAPACITY];
        let mut n = 0;
        for &c in &self.parts[..self.len] {
            let (s, err) = two_sum(q, c);
            if err != 0.0 {
                assert!(n < CAPACITY, "expansion overflow");
                out[n] = err;
                n += 1;
            }
            q = s;
        }
        if q != 0.0 || n == 0 {
            assert!(n < CAPACITY, "expansion overflow");
            out[n] = q;
            n += 1;
        }
        self.parts = out;
        self.len = n;
    }

    /// Exact sign of the represented value.
    pub fn sign(&self) -> i8 {
        // nonoverlapping components: the largest magnitude one dominates
        match self.parts[..self.len].iter().rev().find(|&&c| c != 0.0) {
            Some(&c) if c > 0.0 => 1,
            Some(_) => -1,
            None => 0,
        }
    }

    /// Exact comparison of represented values.
    pub fn cmp_exact(&self, other: &Expansion) -> std::cmp::Ordering {
        let mut diff = *self;
        for &c in &other.parts[..other.len] {
            diff.add(-c);
        }
        match diff.sign() {
            1 => std::cmp::Ordering::Greater,
            -1 => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Equal,
        }
    }

    /// The represented value rounded to one float. Exact whenever the value
    /// is representable; otherwise a faithful sum from small to large.
    pub fn to_f64(&self) -> f64 {
        self.parts[..self.len].iter().sum()
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts[..self.len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_recovers_the_residual() {
        let (s, e) = two_sum(1.0, 1e-20);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-20);
    }

    #[test]
    fn expansion_tracks_cancellation_exactly() {
        let mut e = Expansion::from_addends(&[1.0, 1e-20]);
        e.add(-1.0);
        assert_eq!(e.to_f64(), 1e-20);
        assert_eq!(e.sign(), 1);
        e.add(-1e-20);
        assert_eq!(e.sign(), 0);
    }

    #[test]
    fn exact_comparison_sees_tiny_differences() {
        let a = Expansion::from_addends(&[0.1, 0.2, 1e-30]);
        let b = Expansion::from_addends(&[0.2, 0.1]);
        assert_eq!(a.cmp_exact(&b), std::cmp::Ordering::Greater);
        let c = Expansion::from_addends(&[0.1, 0.2]);
        assert_eq!(c.cmp_exact(&b), std::cmp::Ordering::Equal);
    }
}
