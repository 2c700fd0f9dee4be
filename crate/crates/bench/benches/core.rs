use criterion::{black_box, criterion_group, criterion_main, Criterion};
use gofair_core::commitment::{commit, verify, Commitment, Nonce, Opening};
use gofair_core::learning::{assess, posterior, AttackerPosterior, Cpt, FeatureVector, LearningConfig, PeerProfile};
use gofair_core::protocol::frame::{self, FrameConfig};
use gofair_core::protocol::{negotiate, DeviceId, Honest, IntentValue, NegotiationMode, Party, TieBreakerBit};
use gofair_core::simulation::{run, AttackProfile, DefenseMode, DeviceConfig, Scenario, Schedule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn commitment(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opening = Opening::random(&mut rng, IntentValue::ZERO, TieBreakerBit::ONE);
    let digest = commit(opening.nonce, opening.iv, opening.tbb);
    c.bench_function("commit", |b| b.iter(|| commit(black_box(Nonce([7; 32])), IntentValue::ZERO, TieBreakerBit::ONE)));
    c.bench_function("verify", |b| b.iter(|| verify(black_box(&digest), black_box(&opening))));
}

fn negotiation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for mode in [NegotiationMode::Standard, NegotiationMode::ProbeCommit, NegotiationMode::InlineCommit] {
        c.bench_function(&format!("negotiate/{mode:?}"), |b| {
            b.iter(|| {
                let (mut x, mut y) = (Honest, Honest);
                let mut a = Party::new(DeviceId(0), IntentValue::ZERO, &mut x);
                let mut r = Party::new(DeviceId(1), IntentValue::ZERO, &mut y);
                negotiate(mode, &mut a, &mut r, &mut rng).unwrap()
            })
        });
    }
}

fn learning(c: &mut Criterion) {
    let cpt = Cpt::default();
    let prior = AttackerPosterior::default();
    let all: Vec<_> = FeatureVector::all().collect();
    c.bench_function("posterior/all_375", |b| {
        b.iter(|| all.iter().map(|f| posterior(f, &cpt, &prior).unwrap().attacker_mass()).sum::<f64>())
    });
    let mut profile = PeerProfile::new(DeviceId(1));
    for day in 0..30 {
        for i in 0..200 {
            profile.record_negotiation(day, i % 3 != 0, i % 7 == 0).unwrap();
        }
    }
    let cfg = LearningConfig::default();
    c.bench_function("assess/30_days", |b| b.iter(|| assess(black_box(&profile), &cfg)));
}

fn frames(c: &mut Criterion) {
    let cfg = FrameConfig::default();
    let ie = frame::encode_vendor_ie(&frame::tbbc_vendor_ie(&cfg, &Commitment([0xAB; 32]))).unwrap();
    c.bench_function("frame/decode_ie", |b| {
        b.iter(|| frame::parse_tbbc_vendor_ie(&cfg, &frame::decode_vendor_ie(black_box(&ie)).unwrap()).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    for mode in [DefenseMode::S, DefenseMode::LC] {
        let mut sc = Scenario::new(
            vec![
                DeviceConfig::honest(mode, None),
                DeviceConfig::attacker(AttackProfile::new(0.5, 0.5), Some(Schedule::SHORT)),
            ],
            30,
            3,
        );
        sc.record_sessions = false;
        g.bench_function(format!("pair_30_days/{}", mode.label()), |b| b.iter(|| run(&sc).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, commitment, negotiation, learning, frames, simulation);
criterion_main!(benches);
