//! Integer partitions (Young diagrams) labelling Fock states and vertex legs.

use std::fmt;

/// A partition: weakly decreasing positive parts; trailing zeros are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    /// Build from parts; zeros are stripped, order is validated.
    pub fn new(parts: impl IntoIterator<Item = u32>) -> Self {
        let mut parts: Vec<u32> = parts.into_iter().take_while(|&p| p > 0).collect();
        assert!(
            parts.windows(2).all(|w| w[0] >= w[1]),
            "partition parts must be weakly decreasing"
        );
        parts.retain(|&p| p > 0);
        Partition { parts }
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Part at 1-based row `i`, zero beyond the length.
    pub fn part(&self, i: usize) -> u32 {
        assert!(i >= 1);
        self.parts.get(i - 1).copied().unwrap_or(0)
    }

    /// |λ|, the number of boxes.
    pub fn weight(&self) -> u32 {
        self.parts.iter().sum()
    }

    /// ℓ(λ), the number of rows.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Containment of Young diagrams: μ ⊆ λ.
    pub fn contains(&self, other: &Partition) -> bool {
        other
            .parts
            .iter()
            .enumerate()
            .all(|(i, &p)| self.part(i + 1) >= p)
    }

    /// Conjugate (transposed) partition: ᵗλ_j = #{i : λ_i ≥ j}.
    pub fn conjugate(&self) -> Partition {
        let cols = self.part(1) as usize;
        let mut t = Vec::with_capacity(cols);
        for j in 1..=cols {
            t.push(self.parts.iter().filter(|&&p| p as usize >= j).count() as u32);
        }
        Partition { parts: t }
    }

    /// Quadratic Casimir κ(λ) = Σ λ_i (λ_i − 2i + 1); always even, κ(ᵗλ) = −κ(λ).
    pub fn kappa(&self) -> i64 {
        self.parts
            .iter()
            .enumerate()
            .map(|(i0, &p)| {
                let (p, i) = (p as i64, i0 as i64 + 1);
                p * (p - 2 * i + 1)
            })
            .sum()
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// All partitions of weight exactly `n`, in lexicographically descending order.
pub fn partitions_of(n: u32) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(remaining: u32, max_part: u32, current: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition {
                parts: current.clone(),
            });
            return;
        }
        let hi = remaining.min(max_part);
        for p in (1..=hi).rev() {
            current.push(p);
            rec(remaining - p, p, current, out);
            current.pop();
        }
    }
    rec(n, n.max(1), &mut current, &mut out);
    if n == 0 {
        return vec![Partition::empty()];
    }
    out
}

/// All partitions of weight ≤ `max_weight`, weight-major then lexicographically
/// descending within each weight. The order is part of the report format.
pub fn enumerate_partitions(max_weight: u32) -> Vec<Partition> {
    let mut out = Vec::new();
    for n in 0..=max_weight {
        out.extend(partitions_of(n));
    }
    out
}
