//! Hash-based bit commitment in the random oracle model.
//!
//! A device commits to its tie-breaker bit (and the intent it plans to use)
//! by publishing `SHA-256(nonce | iv | tbb)`. The preimage layout is fixed
//! width so it parses one way only:
//!
//! ```text
//! [nonce:32][iv:1][tbb:1]
//! ```

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::protocol::{IntentValue, TieBreakerBit};

pub const NONCE_LEN: usize = 32;
pub const DIGEST_LEN: usize = 32;
/// Length of the serialized commitment preimage.
pub const PREIMAGE_LEN: usize = NONCE_LEN + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Nonce(pub [u8; NONCE_LEN]);

impl Nonce {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut bytes);
        Nonce(bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Commitment(pub [u8; DIGEST_LEN]);

impl Commitment {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }
}

/// The values revealed to open a commitment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Opening {
    pub nonce: Nonce,
    pub iv: IntentValue,
    pub tbb: TieBreakerBit,
}

impl Opening {
    pub fn new(nonce: Nonce, iv: IntentValue, tbb: TieBreakerBit) -> Self {
        Opening { nonce, iv, tbb }
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R, iv: IntentValue, tbb: TieBreakerBit) -> Self {
        Opening::new(Nonce::random(rng), iv, tbb)
    }

    pub fn preimage(&self) -> [u8; PREIMAGE_LEN] {
        let mut buf = [0u8; PREIMAGE_LEN];
        buf[..NONCE_LEN].copy_from_slice(&self.nonce.0);
        buf[NONCE_LEN] = self.iv.value();
        buf[NONCE_LEN + 1] = self.tbb.as_byte();
        buf
    }

    pub fn commitment(&self) -> Commitment {
        commit(self.nonce, self.iv, self.tbb)
    }
}

pub fn commit(nonce: Nonce, iv: IntentValue, tbb: TieBreakerBit) -> Commitment {
    let preimage = Opening::new(nonce, iv, tbb).preimage();
    Commitment(Sha256::digest(preimage).into())
}

pub fn verify(commitment: &Commitment, opening: &Opening) -> bool {
    opening.commitment() == *commitment
}

/// Two-party coin flip: XOR of both tie bits.
pub fn coin_flip(tbb_a: TieBreakerBit, tbb_b: TieBreakerBit) -> TieBreakerBit {
    TieBreakerBit::new(tbb_a.is_set() ^ tbb_b.is_set())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BITS: [TieBreakerBit; 2] = [TieBreakerBit::ZERO, TieBreakerBit::ONE];

    // SHA-256 of 34 zero bytes, computed with coreutils sha256sum.
    const ZERO_PREIMAGE_DIGEST: &str =
        "eb142b0cae0baa72a767ebc0823d1be94e14c5bfc52d8e417fc4302fceb6240c";

    #[test]
    fn zero_preimage_matches_reference_digest() {
        let c = commit(Nonce([0; 32]), IntentValue::ZERO, TieBreakerBit::ZERO);
        assert_eq!(hex::encode(c.0), ZERO_PREIMAGE_DIGEST);
        assert_eq!(c.as_bytes().len(), 32);
    }

    #[test]
    fn commit_is_deterministic() {
        let n = Nonce([7; 32]);
        let iv = IntentValue::new(4).unwrap();
        assert_eq!(commit(n, iv, TieBreakerBit::ONE), commit(n, iv, TieBreakerBit::ONE));
    }

    #[test]
    fn any_changed_field_breaks_verification() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = Opening::random(&mut rng, IntentValue::ZERO, TieBreakerBit::ZERO);
        let c = o.commitment();
        assert!(verify(&c, &o));

        let flipped_bit = Opening { tbb: TieBreakerBit::ONE, ..o };
        assert!(!verify(&c, &flipped_bit));

        let other_iv = Opening { iv: IntentValue::new(1).unwrap(), ..o };
        assert!(!verify(&c, &other_iv));

        for i in 0..NONCE_LEN {
            let mut n = o.nonce;
            n.0[i] ^= 0x01;
            assert!(!verify(&c, &Opening { nonce: n, ..o }));
        }
    }

    #[test]
    fn coin_flip_table() {
        assert_eq!(coin_flip(TieBreakerBit::ZERO, TieBreakerBit::ZERO), TieBreakerBit::ZERO);
        assert_eq!(coin_flip(TieBreakerBit::ONE, TieBreakerBit::ZERO), TieBreakerBit::ONE);
        assert_eq!(coin_flip(TieBreakerBit::ZERO, TieBreakerBit::ONE), TieBreakerBit::ONE);
        assert_eq!(coin_flip(TieBreakerBit::ONE, TieBreakerBit::ONE), TieBreakerBit::ZERO);
    }

    #[test]
    fn coin_flip_algebra() {
        for a in BITS {
            for b in BITS {
                assert_eq!(coin_flip(a, b), coin_flip(b, a));
                assert_eq!(coin_flip(a, coin_flip(a, b)), b);
            }
        }
    }

    #[test]
    fn one_uniform_side_gives_uniform_result() {
        // fix one side, enumerate the other uniformly: each output appears once
        for fixed in BITS {
            let ones = BITS.iter().filter(|&&b| coin_flip(fixed, b).is_set()).count();
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn hiding_bit_frequency() {
        // digests of commitments to 0 and to 1 under fresh nonces should both
        // look like fair coin flips bit-by-bit
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let samples = 10_000u32;
        let mut ones = [[0u32; 256]; 2];
        for _ in 0..samples {
            for (k, bit) in BITS.iter().enumerate() {
                let d = commit(Nonce::random(&mut rng), IntentValue::ZERO, *bit);
                for (i, byte) in d.0.iter().enumerate() {
                    for j in 0..8 {
                        ones[k][i * 8 + j] += ((byte >> j) & 1) as u32;
                    }
                }
            }
        }
        // 5 sigma per-bit bound for Binomial(10^4, 1/2)
        let bound = 5.0 * (samples as f64 * 0.25).sqrt();
        for pos in 0..256 {
            for k in 0..2 {
                let dev = (ones[k][pos] as f64 - samples as f64 / 2.0).abs();
                assert!(dev < bound, "bit {pos} of class {k} is biased: {}", ones[k][pos]);
            }
            let diff = (ones[0][pos] as f64 - ones[1][pos] as f64).abs();
            assert!(diff < bound * std::f64::consts::SQRT_2);
        }
    }

    fn arb_opening() -> impl Strategy<Value = Opening> {
        (any::<[u8; 32]>(), 0u8..=15, any::<bool>()).prop_map(|(n, iv, b)| {
            Opening::new(Nonce(n), IntentValue::new(iv).unwrap(), TieBreakerBit::new(b))
        })
    }

    proptest! {
        #[test]
        fn binding_on_distinct_openings(a in arb_opening(), b in arb_opening()) {
            prop_assume!(a != b);
            prop_assert!(!verify(&a.commitment(), &b));
            prop_assert!(verify(&a.commitment(), &a));
        }
    }
}
