use gofair_core::commitment::{commit, verify, Commitment, Nonce, Opening};
use gofair_core::protocol::frame::{self, FrameConfig};
use gofair_core::protocol::{IntentValue, TieBreakerBit};

struct Vector {
    opening: Opening,
    digest: [u8; 32],
}

fn vectors() -> Vec<Vector> {
    include_str!("fixtures/commitment_vectors.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let nonce: [u8; 32] = hex::decode(f[0]).unwrap().try_into().unwrap();
            let iv = IntentValue::new(f[1].parse().unwrap()).unwrap();
            let tbb = TieBreakerBit::new(f[2] == "1");
            let digest: [u8; 32] = hex::decode(f[3]).unwrap().try_into().unwrap();
            Vector { opening: Opening::new(Nonce(nonce), iv, tbb), digest }
        })
        .collect()
}

#[test]
fn frozen_digests() {
    let vs = vectors();
    assert_eq!(vs.len(), 8);
    for v in &vs {
        let o = v.opening;
        assert_eq!(commit(o.nonce, o.iv, o.tbb), Commitment(v.digest));
        assert!(verify(&Commitment(v.digest), &o));
    }
}

#[test]
fn flipping_the_bit_breaks_every_vector() {
    for v in vectors() {
        let mut o = v.opening;
        o.tbb = o.tbb.flipped();
        assert!(!verify(&Commitment(v.digest), &o));
    }
}

#[test]
fn commitment_rides_in_the_ie_verbatim() {
    let cfg = FrameConfig::default();
    for v in vectors() {
        let c = Commitment(v.digest);
        let bytes = frame::encode_vendor_ie(&frame::tbbc_vendor_ie(&cfg, &c)).unwrap();
        assert_eq!(&bytes[..6], &[0xDD, 36, 0x50, 0x6F, 0x9A, 0xFF]);
        assert_eq!(&bytes[6..], &v.digest);
        let ie = frame::decode_vendor_ie(&bytes).unwrap();
        assert_eq!(frame::parse_tbbc_vendor_ie(&cfg, &ie).unwrap(), c);

        let attr = frame::encode_p2p_attribute(&frame::opening_attribute(&cfg, &v.opening)).unwrap();
        assert_eq!(&attr[..3], &[0xF1, 34, 0]);
        assert_eq!(&attr[3..], &v.opening.preimage());
    }
}
