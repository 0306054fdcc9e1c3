use std::fmt;

use crate::error::{Error, Result};

/// An order `g_{i_1,...,i_m <= n}` over relation positions: `positions` are
/// 1-based slots of an `arity`-ary relation tuple.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PositionalOrder {
    positions: Vec<usize>,
    arity: usize,
}

impl PositionalOrder {
    pub fn new(positions: Vec<usize>, arity: usize) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidArgument("an order needs at least one position".into()));
        }
        if let Some(&p) = positions.iter().find(|&&p| p == 0 || p > arity) {
            return Err(Error::InvalidArgument(format!("position {p} outside 1..={arity}")));
        }
        Ok(PositionalOrder { positions, arity })
    }

    /// The first/last anchor `g_{1,n <= n}` of an n-edge path graphlet.
    pub fn binary_anchor(arity: usize) -> Self {
        PositionalOrder {
            positions: vec![1, arity.max(1)],
            arity: arity.max(1),
        }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Full-arity orders consistent with `self`: slot `p` holds `p` for every
    /// anchored position `p`, every other slot is free over `1..=arity`.
    pub fn spans(&self) -> Vec<PositionalOrder> {
        let n = self.arity;
        let fixed: Vec<Option<usize>> = (1..=n)
            .map(|slot| self.positions.contains(&slot).then_some(slot))
            .collect();
        let mut out = Vec::new();
        let mut current = vec![0usize; n];
        fill(&fixed, 0, &mut current, &mut out, n);
        out
    }
}

fn fill(fixed: &[Option<usize>], slot: usize, current: &mut Vec<usize>, out: &mut Vec<PositionalOrder>, n: usize) {
    if slot == fixed.len() {
        out.push(PositionalOrder {
            positions: current.clone(),
            arity: n,
        });
        return;
    }
    match fixed[slot] {
        Some(v) => {
            current[slot] = v;
            fill(fixed, slot + 1, current, out, n);
        }
        None => {
            for v in 1..=n {
                current[slot] = v;
                fill(fixed, slot + 1, current, out, n);
            }
        }
    }
}

impl fmt::Display for PositionalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.positions.iter().map(|p| p.to_string()).collect();
        if self.positions.len() == self.arity {
            write!(f, "g_{{{}}}", idx.join(","))
        } else {
            write!(f, "g_{{{}<={}}}", idx.join(","), self.arity)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_arity_spans_itself() {
        let g = PositionalOrder::binary_anchor(2);
        assert_eq!(g.spans(), vec![PositionalOrder::new(vec![1, 2], 2).unwrap()]);
    }

    #[test]
    fn display() {
        assert_eq!(PositionalOrder::binary_anchor(3).to_string(), "g_{1,3<=3}");
        assert_eq!(PositionalOrder::new(vec![1, 2, 3], 3).unwrap().to_string(), "g_{1,2,3}");
    }

    #[test]
    fn out_of_range_position() {
        assert!(PositionalOrder::new(vec![1, 4], 3).is_err());
    }
}
