//! Counter-based randomness: the shared Bernoulli field of the basic coupling.
//!
//! Every vertex `(x, t)` owns two independent Bernoulli bits, `chi1 ~ Ber(b1)`
//! and `chi2 ~ Ber(b2)`. A [`RandomField`] produces them as a pure function of
//! `(seed, x, t, channel)` by hashing the coordinates and thresholding, so the
//! field never has to be stored: re-running any sampler against the same field
//! replays the identical randomness, which is exactly what coupling several
//! initial conditions requires.

use crate::params::ModelParams;

/// Bit channel of the coupling field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// Decides vertices whose minimal class arrives vertically (Ber(b1)).
    Chi1 = 1,
    /// Decides vertices whose minimal class arrives horizontally (Ber(b2)).
    Chi2 = 2,
}

/// Source of the coupling bits. Samplers are generic over this so exact
/// enumeration can substitute a bit table for the hashed field.
pub trait BitField {
    fn chi(&self, channel: Channel, x: i64, t: i64) -> bool;

    fn chi1(&self, x: i64, t: i64) -> bool {
        self.chi(Channel::Chi1, x, t)
    }

    fn chi2(&self, x: i64, t: i64) -> bool {
        self.chi(Channel::Chi2, x, t)
    }
}

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed, e.g. one per Monte Carlo trial.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn threshold(p: f64) -> u64 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        u64::MAX
    } else {
        // Rounds to the nearest representable threshold; the bias is O(2^-53).
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

/// Deterministic Bernoulli field keyed by `(seed, x, t, channel)`.
#[derive(Clone, Copy, Debug)]
pub struct RandomField {
    seed: u64,
    state: u64,
    thr1: u64,
    thr2: u64,
}

impl RandomField {
    pub fn new(params: &ModelParams, seed: u64) -> RandomField {
        RandomField {
            seed,
            state: mix64(seed ^ 0x6c62_272e_07bb_0142),
            thr1: threshold(params.b1()),
            thr2: threshold(params.b2()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline(always)]
    fn word(&self, x: i64, t: i64, stream: u64) -> u64 {
        let mut h = self.state;
        h = mix64(h ^ (x as u64).wrapping_mul(0xd6e8_feb8_6659_fd93));
        h = mix64(h ^ (t as u64).wrapping_mul(0xa076_1d64_78bd_642f));
        mix64(h ^ stream)
    }

    /// Auxiliary Bernoulli(p) bit on a stream separate from `chi1`/`chi2`;
    /// used for boundary data and initial conditions.
    pub fn aux_bernoulli(&self, p: f64, x: i64, t: i64, stream: u64) -> bool {
        self.word(x, t, 0x100 + stream) < threshold(p)
    }

    /// Auxiliary uniform draw on `[0, 1)`, independent of the `chi` bits.
    pub fn aux_uniform(&self, x: i64, t: i64, stream: u64) -> f64 {
        self.word(x, t, 0x100 + stream) as f64 / 18_446_744_073_709_551_616.0
    }
}

impl BitField for RandomField {
    #[inline(always)]
    fn chi(&self, channel: Channel, x: i64, t: i64) -> bool {
        match channel {
            Channel::Chi1 => self.word(x, t, 1) < self.thr1,
            Channel::Chi2 => self.word(x, t, 2) < self.thr2,
        }
    }
}

/// Public draw of one coupling bit (`P[true] = b_channel`).
pub fn bernoulli_draw(field: &RandomField, x: i64, t: i64, channel: Channel) -> bool {
    field.chi(channel, x, t)
}

/// Explicit bit table over a rectangle of vertices, for exhaustive
/// enumeration of every realization of a small box.
#[derive(Clone, Debug)]
pub struct TableField {
    x0: i64,
    t0: i64,
    width: usize,
    height: usize,
    bits1: Vec<bool>,
    bits2: Vec<bool>,
}

impl TableField {
    /// Covers vertices `x in [x0, x0+width)`, `t in [t0, t0+height)`.
    pub fn new(x0: i64, t0: i64, width: usize, height: usize) -> TableField {
        TableField {
            x0,
            t0,
            width,
            height,
            bits1: vec![false; width * height],
            bits2: vec![false; width * height],
        }
    }

    /// Number of bits in the table (two per vertex).
    pub fn bit_count(&self) -> usize {
        2 * self.width * self.height
    }

    /// Loads the table from the binary digits of `pattern`
    /// (bit `2*(row*width+col)` is chi1, the next one chi2).
    pub fn load_pattern(&mut self, pattern: u64) {
        assert!(self.bit_count() <= 64, "pattern enumeration limited to 64 bits");
        for i in 0..self.width * self.height {
            self.bits1[i] = (pattern >> (2 * i)) & 1 == 1;
            self.bits2[i] = (pattern >> (2 * i + 1)) & 1 == 1;
        }
    }

    /// Probability of the currently loaded pattern under independent
    /// Ber(b1)/Ber(b2) bits.
    pub fn pattern_weight(&self, params: &ModelParams) -> f64 {
        let mut w = 1.0;
        for i in 0..self.width * self.height {
            w *= if self.bits1[i] { params.b1() } else { 1.0 - params.b1() };
            w *= if self.bits2[i] { params.b2() } else { 1.0 - params.b2() };
        }
        w
    }

    fn index(&self, x: i64, t: i64) -> usize {
        let col = x.checked_sub(self.x0).expect("x below table");
        let row = t.checked_sub(self.t0).expect("t below table");
        assert!(
            (col as u64) < self.width as u64 && (row as u64) < self.height as u64,
            "bit table read outside covered rectangle: x={x}, t={t}"
        );
        row as usize * self.width + col as usize
    }
}

impl BitField for TableField {
    fn chi(&self, channel: Channel, x: i64, t: i64) -> bool {
        let i = self.index(x, t);
        match channel {
            Channel::Chi1 => self.bits1[i],
            Channel::Chi2 => self.bits2[i],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.3, 0.6).unwrap()
    }

    #[test]
    fn draws_are_deterministic() {
        let f = RandomField::new(&params(), 42);
        let g = RandomField::new(&params(), 42);
        for x in -5..5 {
            for t in 0..10 {
                assert_eq!(f.chi1(x, t), g.chi1(x, t));
                assert_eq!(f.chi2(x, t), g.chi2(x, t));
            }
        }
    }

    #[test]
    fn different_seeds_differ() {
        let f = RandomField::new(&params(), 1);
        let g = RandomField::new(&params(), 2);
        let disagreements = (0..1000).filter(|&t| f.chi2(0, t) != g.chi2(0, t)).count();
        assert!(disagreements > 300, "seeds produce near-identical fields");
    }

    #[test]
    fn channel_means_match_parameters() {
        // 1e5 distinct sites; 4 standard errors of a Bernoulli mean.
        let p = params();
        let f = RandomField::new(&p, 7);
        let n = 100_000i64;
        let ones1 = (0..n).filter(|&i| f.chi1(i, 3 * i + 1)).count() as f64;
        let ones2 = (0..n).filter(|&i| f.chi2(i, 3 * i + 1)).count() as f64;
        let nf = n as f64;
        let se1 = (p.b1() * (1.0 - p.b1()) / nf).sqrt();
        let se2 = (p.b2() * (1.0 - p.b2()) / nf).sqrt();
        assert!((ones1 / nf - p.b1()).abs() < 4.0 * se1);
        assert!((ones2 / nf - p.b2()).abs() < 4.0 * se2);
    }

    #[test]
    fn channels_are_independent_at_a_site() {
        // Chi-square independence test on the 2x2 table of (chi1, chi2)
        // bits over 1e5 sites; 4-sigma threshold for 1 dof is z^2 = 16.
        let p = params();
        let f = RandomField::new(&p, 11);
        let n = 100_000usize;
        let mut counts = [[0.0f64; 2]; 2];
        for i in 0..n {
            let x = i as i64;
            let a = f.chi1(x, 0) as usize;
            let b = f.chi2(x, 0) as usize;
            counts[a][b] += 1.0;
        }
        let nf = n as f64;
        let row: Vec<f64> = (0..2).map(|a| counts[a][0] + counts[a][1]).collect();
        let col: Vec<f64> = (0..2).map(|b| counts[0][b] + counts[1][b]).collect();
        let mut chi2 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let expected = row[a] * col[b] / nf;
                chi2 += (counts[a][b] - expected).powi(2) / expected;
            }
        }
        assert!(chi2 < 16.0, "chi-square statistic {chi2} rejects independence");
    }

    #[test]
    fn aux_streams_do_not_collide_with_chi() {
        let p = params();
        let f = RandomField::new(&p, 5);
        // Same coordinates, different streams: correlation should be ~0, so
        // over 4096 draws at b=0.5 the agreement count stays near half.
        let agree = (0..4096)
            .filter(|&i| f.aux_bernoulli(0.5, i, 0, 0) == f.aux_bernoulli(0.5, i, 0, 1))
            .count();
        assert!((agree as i64 - 2048).abs() < 4 * 32);
    }

    #[test]
    fn table_field_enumerates_patterns() {
        let mut table = TableField::new(1, 1, 2, 1);
        table.load_pattern(0b0110);
        assert!(!table.chi1(1, 1));
        assert!(table.chi2(1, 1));
        assert!(table.chi1(2, 1));
        assert!(!table.chi2(2, 1));
        // Pattern weights over all assignments sum to 1.
        let p = params();
        let mut total = 0.0;
        for pattern in 0u64..16 {
            table.load_pattern(pattern);
            total += table.pattern_weight(&p);
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}
