//! Counter-based Gaussian generator.
//!
//! Every stream is keyed by `(global_seed, path_id, mode_index, step)` and
//! produces its draws from an incrementing counter, so the value of any draw
//! is a pure function of the key and the draw number — reproducible
//! regardless of thread schedule or evaluation order.

/// One keyed counter stream.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: [u64; 4],
    counter: u64,
    spare_normal: Option<f64>,
}

/// 64-bit avalanche finaliser (the SplitMix64 mixing function).
#[inline]
fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl CounterRng {
    pub fn new(global_seed: u64, path_id: u64, mode_index: u64, step: u64) -> Self {
        Self {
            key: [global_seed, path_id, mode_index, step],
            counter: 0,
            spare_normal: None,
        }
    }

    /// Draw number `counter` of this stream, mixing in each key word with a
    /// distinct round constant so permuted keys give unrelated streams.
    pub fn next_u64(&mut self) -> u64 {
        let c = self.counter;
        self.counter += 1;
        let mut x = c.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for (i, &k) in self.key.iter().enumerate() {
            x = mix(x ^ k.wrapping_add((i as u64 + 1).wrapping_mul(0xd1b5_4a32_d192_ed03)));
        }
        x
    }

    /// Uniform in the half-open interval `(0, 1]` (never 0, safe for logs).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via Box–Muller; pairs are drawn together and the
    /// second value cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Complex Gaussian with unit total variance: real and imaginary parts
    /// independent `N(0, 1/2)`.
    pub fn complex_normal(&mut self) -> (f64, f64) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        (self.normal() * s, self.normal() * s)
    }
}
