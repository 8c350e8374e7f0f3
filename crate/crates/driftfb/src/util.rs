//! Small shared helpers: slice vectors and a seedable RNG for diagnostics.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn is_unit(a: &[f64], tol: f64) -> bool {
    (norm(a) - 1.0).abs() <= tol
}

/// SplitMix64: tiny deterministic generator for randomized diagnostics.
/// Not a statistical-quality RNG; byte-for-byte reproducible from the seed.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Random unit vector of the given dimension (1 or 2).
    pub fn unit_vector(&mut self, dimension: usize) -> Vec<f64> {
        match dimension {
            1 => vec![if self.next_f64() < 0.5 { -1.0 } else { 1.0 }],
            _ => {
                let phi = self.uniform(0.0, std::f64::consts::TAU);
                vec![phi.cos(), phi.sin()]
            }
        }
    }
}
