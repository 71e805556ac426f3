use std::ops::Range;

use nalgebra::{DVector, DVectorView};

/// State blocks of `y = (psi, q_C, q_V, q_M, a)` in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Psi,
    ChargeC,
    ChargeV,
    ChargeM,
    Field,
}

impl Block {
    pub const ALL: [Block; 5] = [
        Block::Psi,
        Block::ChargeC,
        Block::ChargeV,
        Block::ChargeM,
        Block::Field,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub n_nodes: usize,
    pub n_c: usize,
    pub n_v: usize,
    pub n_m: usize,
    pub n_a: usize,
}

impl BlockLayout {
    pub fn len(&self, b: Block) -> usize {
        match b {
            Block::Psi => self.n_nodes,
            Block::ChargeC => self.n_c,
            Block::ChargeV => self.n_v,
            Block::ChargeM => self.n_m,
            Block::Field => self.n_a,
        }
    }

    pub fn offset(&self, b: Block) -> usize {
        Block::ALL
            .iter()
            .take_while(|&&x| x != b)
            .map(|&x| self.len(x))
            .sum()
    }

    pub fn range(&self, b: Block) -> Range<usize> {
        let o = self.offset(b);
        o..o + self.len(b)
    }

    pub fn total(&self) -> usize {
        self.n_nodes + self.n_c + self.n_v + self.n_m + self.n_a
    }

    /// Length of the circuit part `(psi, q_C, q_V, q_M)`.
    pub fn n_circuit(&self) -> usize {
        self.total() - self.n_a
    }

    pub fn view<'a>(&self, v: &'a DVector<f64>, b: Block) -> DVectorView<'a, f64> {
        v.rows(self.offset(b), self.len(b))
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_cumulative() {
        let l = BlockLayout {
            n_nodes: 4,
            n_c: 0,
            n_v: 1,
            n_m: 2,
            n_a: 10,
        };
        assert_eq!(l.offset(Block::Psi), 0);
        assert_eq!(l.offset(Block::ChargeC), 4);
        assert_eq!(l.offset(Block::ChargeV), 4);
        assert_eq!(l.offset(Block::ChargeM), 5);
        assert_eq!(l.offset(Block::Field), 7);
        assert_eq!(l.total(), 17);
        assert_eq!(l.n_circuit(), 7);
    }
}
