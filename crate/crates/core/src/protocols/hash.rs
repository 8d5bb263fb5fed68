use rand::Rng;
use serde::{Deserialize, Serialize};

/// Affine map over GF(2): h(i) = M·bits(i) ⊕ b.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashScheme {
    pub input_bits: u32,
    pub output_bits: u32,
    /// Row r holds the input mask of output bit r.
    pub matrix: Vec<u64>,
    pub offset: u64,
}

impl HashScheme {
    pub fn draw(rng: &mut impl Rng, input_bits: u32, output_bits: u32) -> Self {
        assert!(input_bits <= 63 && output_bits <= 63, "hash widths above 63 bits");
        let in_mask = if input_bits == 0 { 0 } else { (1u64 << input_bits) - 1 };
        let matrix = (0..output_bits).map(|_| rng.gen::<u64>() & in_mask).collect();
        let out_mask = if output_bits == 0 { 0 } else { (1u64 << output_bits) - 1 };
        Self {
            input_bits,
            output_bits,
            matrix,
            offset: rng.gen::<u64>() & out_mask,
        }
    }

    /// The map i ↦ i on `bits` bits.
    pub fn identity(bits: u32) -> Self {
        Self {
            input_bits: bits,
            output_bits: bits,
            matrix: (0..bits).map(|r| 1u64 << r).collect(),
            offset: 0,
        }
    }

    pub fn apply(&self, input: u64) -> u64 {
        self.matrix
            .iter()
            .enumerate()
            .fold(self.offset, |acc, (r, row)| {
                acc ^ ((((row & input).count_ones() & 1) as u64) << r)
            })
    }

    /// Inputs 0..n grouped by hash value, each bucket ascending.
    pub fn buckets(&self, n: usize) -> std::collections::BTreeMap<u64, Vec<usize>> {
        let mut out: std::collections::BTreeMap<u64, Vec<usize>> = Default::default();
        for i in 0..n {
            out.entry(self.apply(i as u64)).or_default().push(i);
        }
        out
    }
}

/// Number of bits needed to index `n` items.
pub(crate) fn index_bits(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}
