use qtwalk_core::embeddings::{read_model, write_model};
use qtwalk_core::eval::cosine_similarity;
use qtwalk_core::train::{
    build_vocabulary, extract_pairs, log_likelihood, log_likelihood_gradient, resume, softmax_probability, train,
    EmbeddingModel, Mode, SoftmaxMode, TrainConfig, TrainError,
};
use qtwalk_core::walk::{WalkCorpus, WalkParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus(walks: &[Vec<String>]) -> WalkCorpus {
    WalkCorpus::from_walks(WalkParams::default(), walks)
}

/// Walks around a ring of `n` tokens, so `t{i}` is always followed by `t{i+1}`.
fn ring(n: usize, len: usize) -> Vec<Vec<String>> {
    (0..n)
        .flat_map(|start| std::iter::repeat_n(start, 5))
        .map(|start| (0..len).map(|k| format!("t{}", (start + k) % n)).collect())
        .collect()
}

fn random_model(mode: Mode, vocab: usize, dim: usize, window: usize, seed: u64) -> EmbeddingModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrices = if mode == Mode::Classic { 1 } else { 2 * window };
    let mut fill = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    EmbeddingModel {
        mode,
        dim,
        window,
        tokens: (0..vocab).map(|i| format!("t{i}")).collect(),
        input: fill(vocab * dim),
        outputs: (0..matrices).map(|_| fill(vocab * dim)).collect(),
    }
}

#[test]
fn gradient_matches_central_differences() {
    for mode in [Mode::Classic, Mode::Structured] {
        let model = random_model(mode, 8, 4, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let walk: Vec<u32> = (0..10).map(|_| rng.random_range(0..8)).collect();
        let pairs = extract_pairs(&walk, 2);
        let grad = log_likelihood_gradient(&model, &pairs);
        let h = 1e-5;
        let check = |get: &dyn Fn(&mut EmbeddingModel) -> &mut f64, analytic: f64| {
            let mut plus = model.clone();
            *get(&mut plus) += h;
            let mut minus = model.clone();
            *get(&mut minus) -= h;
            let numeric = (log_likelihood(&plus, &pairs) - log_likelihood(&minus, &pairs)) / (2.0 * h);
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
            assert!(rel < 1e-5 || (numeric - analytic).abs() < 1e-9, "{mode}: numeric {numeric} analytic {analytic}");
        };
        for i in 0..model.input.len() {
            check(&|m: &mut EmbeddingModel| &mut m.input[i], grad.input[i]);
        }
        for k in 0..model.outputs.len() {
            for i in 0..model.input.len() {
                check(&|m: &mut EmbeddingModel| &mut m.outputs[k][i], grad.outputs[k][i]);
            }
        }
    }
}

#[test]
fn softmax_is_normalized() {
    let model = random_model(Mode::Structured, 12, 5, 3, 1);
    for center in 0..12 {
        for rel in [-3, -1, 1, 2, 3] {
            let total: f64 = (0..12).map(|w| softmax_probability(&model, center, w, rel)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

fn top1(model: &EmbeddingModel, center: u32, rel: i32) -> u32 {
    let n = model.vocab_size() as u32;
    (0..n)
        .max_by(|a, b| {
            softmax_probability(model, center, *a, rel).total_cmp(&softmax_probability(model, center, *b, rel))
        })
        .unwrap()
}

#[test]
fn negative_sampling_agrees_with_full_softmax() {
    // every t{i} is followed mostly by u{i}, less often by its neighbours
    let mut walks = Vec::new();
    for i in 0..20 {
        for (offset, times) in [(0, 6), (1, 2), (2, 1)] {
            for _ in 0..times * 10 {
                walks.push(vec![format!("t{i}"), format!("u{}", (i + offset) % 20)]);
            }
        }
    }
    let c = corpus(&walks);
    let vocab = build_vocabulary(&c, 1);
    for mode in [Mode::Classic, Mode::Structured] {
        let base = TrainConfig { mode, dim: 16, window: 1, epochs: 20, ..TrainConfig::default() };
        let ns = train(&c, &vocab, &base).unwrap();
        let full = train(&c, &vocab, &TrainConfig { softmax: SoftmaxMode::FullSoftmax, ..base.clone() }).unwrap();
        let mut agree = 0;
        for i in 0..20 {
            let center = vocab.get(&format!("t{i}")).unwrap();
            let expected = vocab.get(&format!("u{i}")).unwrap();
            assert_eq!(top1(&full, center, 1), expected, "{mode}: full softmax misses t{i}");
            agree += usize::from(top1(&ns, center, 1) == top1(&full, center, 1));
        }
        let rate = agree as f64 / 20.0;
        assert!(rate >= 0.9, "{mode}: top-1 agreement {rate}");
    }
}

#[test]
fn structured_mode_separates_positions() {
    let c = corpus(&ring(20, 10));
    let vocab = build_vocabulary(&c, 1);
    let cfg = TrainConfig { mode: Mode::Structured, dim: 16, window: 2, epochs: 30, ..TrainConfig::default() };
    for softmax in [SoftmaxMode::NegativeSampling, SoftmaxMode::FullSoftmax] {
        let model = train(&c, &vocab, &TrainConfig { softmax, ..cfg.clone() }).unwrap();
        for i in 0..20 {
            let center = vocab.get(&format!("t{i}")).unwrap();
            for rel in [-2i32, -1, 1, 2] {
                let want = format!("t{}", (i + rel).rem_euclid(20));
                assert_eq!(vocab.token(top1(&model, center, rel)), want, "{softmax:?} rel {rel}");
            }
        }
    }
}

#[test]
fn shared_contexts_give_similar_vectors() {
    let mut walks = Vec::new();
    for i in 0..200 {
        let a = format!("a{}", i % 4);
        let b = format!("b{}", i % 3);
        walks.push(vec![a.clone(), "x".to_string(), b.clone()]);
        walks.push(vec![a, "y".to_string(), b]);
        walks.push(vec![format!("c{}", i % 4), "z".to_string(), format!("d{}", i % 3)]);
    }
    let c = corpus(&walks);
    let vocab = build_vocabulary(&c, 1);
    for mode in [Mode::Classic, Mode::Structured] {
        let model = train(&c, &vocab, &TrainConfig { mode, dim: 20, window: 1, epochs: 10, ..TrainConfig::default() }).unwrap();
        let e = model.embeddings();
        let xy = cosine_similarity(e.get("x").unwrap(), e.get("y").unwrap()).unwrap();
        let xz = cosine_similarity(e.get("x").unwrap(), e.get("z").unwrap()).unwrap();
        assert!(xy > xz, "{mode}: cos(x,y)={xy} cos(x,z)={xz}");
    }
}

#[test]
fn training_is_reproducible_and_file_roundtrips() {
    let c = corpus(&ring(15, 8));
    let vocab = build_vocabulary(&c, 1);
    let cfg = TrainConfig { mode: Mode::Structured, dim: 8, window: 3, epochs: 3, ..TrainConfig::default() };
    let a = train(&c, &vocab, &cfg).unwrap();
    let b = train(&c, &vocab, &cfg).unwrap();
    assert_eq!(a, b);
    let mut buf = Vec::new();
    write_model(&a, &mut buf, true).unwrap();
    let back = read_model(&buf[..]).unwrap();
    assert_eq!(back, a);
}

#[test]
fn configuration_errors_are_reported() {
    let c = corpus(&ring(15, 8));
    let vocab = build_vocabulary(&c, 1);
    let cfg = TrainConfig { softmax: SoftmaxMode::FullSoftmax, full_softmax_cap: 10, ..TrainConfig::default() };
    assert_eq!(train(&c, &vocab, &cfg), Err(TrainError::VocabularyTooLarge { size: 15, cap: 10 }));

    let mut model = train(&c, &vocab, &TrainConfig { dim: 8, epochs: 1, ..TrainConfig::default() }).unwrap();
    let err = resume(&mut model, &c, &vocab, &TrainConfig { dim: 16, ..TrainConfig::default() }).unwrap_err();
    assert_eq!(err, TrainError::DimensionMismatch { expected: 16, found: 8 });

    let high = build_vocabulary(&c, 1_000);
    assert_eq!(train(&c, &high, &TrainConfig::default()), Err(TrainError::EmptyCorpus));
}
