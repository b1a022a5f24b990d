use prosody_core::grad::{Graph, ParamStore, Tensor};
use prosody_core::salience::{
    load_items, noise_sequence, prepare_input, train_salience, LabeledAudio, MaskMode, SalienceConfig, SalienceNet,
};
use prosody_core::seed::rng_from;
use prosody_core::signal::{gen_corpus, gen_synthetic_utterance, read_manifest, SyntheticSpec};
use rand::Rng;

fn corpus(per_class: usize, seed: u64) -> (tempfile::TempDir, Vec<LabeledAudio>) {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen_corpus(&SyntheticSpec::default(), per_class, dir.path(), seed).unwrap();
    let items = load_items(&read_manifest(&manifest).unwrap()).unwrap();
    (dir, items)
}

#[test]
fn checkpoints_written_per_epoch() {
    let (dir, items) = corpus(1, 4);
    let cfg = SalienceConfig { epochs: 2, ..Default::default() };
    let ck = dir.path().join("ck");
    let mut calls = 0;
    let mut hook = |_: usize, _: usize, _: f64| calls += 1;
    train_salience(&items, &cfg, 4, Some(&ck), Some(&mut hook)).unwrap();
    assert_eq!(calls, 10);
    assert!(ck.join("salience_epoch_001.prsm").exists());
    assert!(ck.join("salience_epoch_002.prsm").exists());
}

/// For a scalar linear in the mask, the straight-through gradient equals the
/// derivative of the same scalar on the relaxed (soft) sample.
#[test]
fn straight_through_gradient_matches_soft_path() {
    let mut store = ParamStore::<f64>::new();
    let net = SalienceNet::new(&mut store, 8).unwrap();
    let y = gen_synthetic_utterance(&SyntheticSpec::default(), 3, 2).unwrap().audio;
    let cfg = SalienceConfig::default();
    let input = prepare_input(&y, cfg.energy_gate_db).unwrap();
    let frames = input.frames();
    let noise = noise_sequence(frames, 6);
    let mut rng = rng_from(1);
    let w: Vec<f64> = (0..frames).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let probe = store.find("mask.out.w").unwrap();
    let scalar = |store: &ParamStore<f64>, mode: &MaskMode| -> (f64, Vec<f64>) {
        let mut g = Graph::new();
        let feats = net.features(&mut g, store, &input).unwrap();
        let q = net.posterior(&mut g, store, feats, &input.keep).unwrap();
        let m = net.mask(&mut g, q, mode).unwrap();
        let wt = g.constant(Tensor::new(g.shape(m).to_vec(), w.clone()).unwrap()).unwrap();
        let p = g.mul(m, wt).unwrap();
        let s = g.sum(p).unwrap();
        let grads = g.backward(s).unwrap().params(store);
        (g.value(s).item(), grads.get(probe).data().to_vec())
    };
    let st = MaskMode::StraightThrough { temperature: 0.5, noise: noise.clone() };
    let relaxed = MaskMode::Relaxed { temperature: 0.5, noise };
    let (_, st_grad) = scalar(&store, &st);
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for e in 0..8 {
        let mut plus = store.clone();
        plus.value_mut(probe).data_mut()[e] += eps;
        let mut minus = store.clone();
        minus.value_mut(probe).data_mut()[e] -= eps;
        let numeric = (scalar(&plus, &relaxed).0 - scalar(&minus, &relaxed).0) / (2.0 * eps);
        worst = worst.max(prosody_core::grad::relative_error(st_grad[e], numeric));
    }
    assert!(worst <= 1e-3, "worst relative error {worst}");
}
