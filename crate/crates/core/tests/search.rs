use jointbpe_core::acoustic::{TableAm, Utterance};
use jointbpe_core::decoder::{decode_joint, decode_single, DecoderConfig};
use jointbpe_testkit as kit;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn utt() -> Utterance {
    Utterance::new("tiny")
}

#[test]
fn single_matches_exhaustive_search() {
    for seed in 0..60 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = kit::tiny_single(&mut rng);
        let cfg = inst.exhaustive_config(0.0);
        let got = decode_single(&utt(), &inst.am, &inst.mlm, &cfg).unwrap();
        let paths = kit::enumerate(&inst, 0.0);
        match kit::argmax(&paths, TOL) {
            None => assert!(
                got.best().is_none_or(|h| h.score == f64::NEG_INFINITY),
                "seed {seed}"
            ),
            Some((score, words)) => {
                let best = got.best().expect("decoder found nothing");
                assert!(
                    (best.score - score).abs() < TOL,
                    "seed {seed}: {} vs {score}",
                    best.score
                );
                assert!(
                    words.contains(&best.words),
                    "seed {seed}: {:?} not in {words:?}",
                    best.words
                );
            }
        }
        // without pruning the n-best is the whole path set
        assert_eq!(got.hypotheses.len(), paths.len(), "seed {seed}");
    }
}

#[test]
fn single_ignores_gamma() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let inst = kit::tiny_single(&mut rng);
        let base = DecoderConfig {
            beamsize: 3,
            beta: inst.beta,
            gamma: 0.0,
            max_steps: 6,
            ..Default::default()
        };
        let a = decode_single(&utt(), &inst.am, &inst.mlm, &base).unwrap();
        let b = decode_single(
            &utt(),
            &inst.am,
            &inst.mlm,
            &DecoderConfig { gamma: 0.7, ..base },
        )
        .unwrap();
        assert_eq!(a, b, "seed {seed}");
    }
}

#[test]
fn joint_matches_exhaustive_search() {
    for seed in 0..60 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let inst = kit::tiny_joint(&mut rng, 0.1);
        let gamma = [0.2, 0.5, 0.8][seed as usize % 3];
        let cfg = inst.exhaustive_config(gamma);
        let got = decode_joint(&utt(), &inst.am, &inst.mlm, inst.second().unwrap(), &cfg).unwrap();
        let paths = kit::enumerate(&inst, gamma);
        if let Some((score, words)) = kit::argmax(&paths, TOL) {
            let best = got.best().expect("decoder found nothing");
            assert!(
                (best.score - score).abs() < TOL,
                "seed {seed}: {} vs {score}",
                best.score
            );
            assert!(words.contains(&best.words), "seed {seed}");
        }
    }
}

#[test]
fn gamma_zero_reproduces_single_system() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let inst = kit::tiny_joint(&mut rng, 0.3);
        let cfg = DecoderConfig {
            beamsize: 3,
            beta: inst.beta,
            gamma: 0.0,
            max_steps: 6,
            ..Default::default()
        };
        let single = decode_single(&utt(), &inst.am, &inst.mlm, &cfg).unwrap();
        let joint =
            decode_joint(&utt(), &inst.am, &inst.mlm, inst.second().unwrap(), &cfg).unwrap();
        let key = |r: &jointbpe_core::decoder::DecodeResult| -> Vec<_> {
            r.hypotheses
                .iter()
                .map(|h| (h.words.clone(), h.ys1.clone(), h.score.to_bits()))
                .collect()
        };
        assert_eq!(key(&single), key(&joint), "seed {seed}");
    }
}

#[test]
fn forced_path_score_is_affine_in_gamma() {
    let gammas = [0.0, 0.25, 0.5, 1.0];
    let mut checked = 0;
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let inst = kit::tiny_joint(&mut rng, 0.0);
        let paths = kit::enumerate(&inst, 0.0);
        let Some(path) = paths.iter().find(|p| p.score.is_finite()) else {
            continue;
        };
        let units = &path.ys[1..path.ys.len() - 1];
        let am = kit::forced_table(inst.vocab(), units, -0.5);
        let scores: Vec<f64> = gammas
            .iter()
            .map(|&g| {
                let cfg = DecoderConfig {
                    gamma: g,
                    ..inst.exhaustive_config(g)
                };
                let r = decode_joint(&utt(), &am, &inst.mlm, inst.second().unwrap(), &cfg).unwrap();
                r.hypotheses
                    .iter()
                    .find(|h| h.words == path.words)
                    .expect("forced path decoded")
                    .score
            })
            .collect();
        assert!(
            affine_residual(&gammas, &scores) < TOL,
            "seed {seed}: {scores:?}"
        );
        checked += 1;
    }
    assert!(checked >= 20);
}

fn affine_residual(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    x.iter()
        .zip(y)
        .map(|(a, b)| (b - (my + slope * (a - mx))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn decoding_is_repeatable() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inst = kit::tiny_joint(&mut rng, 0.1);
    let cfg = DecoderConfig {
        beamsize: 4,
        beta: inst.beta,
        ..Default::default()
    };
    let a = decode_joint(&utt(), &inst.am, &inst.mlm, inst.second().unwrap(), &cfg).unwrap();
    let b = decode_joint(&utt(), &inst.am, &inst.mlm, inst.second().unwrap(), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn nbest_is_sorted_and_bounded() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let inst = kit::tiny_single(&mut rng);
        let cfg = DecoderConfig {
            beamsize: 3,
            beta: inst.beta,
            max_steps: 8,
            ..Default::default()
        };
        let r = decode_single(&utt(), &inst.am, &inst.mlm, &cfg).unwrap();
        assert!(r.hypotheses.len() <= 3);
        assert!(r.hypotheses.windows(2).all(|w| w[0].score >= w[1].score));
        assert!(r.steps <= 8);
    }
}

#[test]
fn max_steps_truncates_when_nothing_can_end() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inst = kit::tiny_single(&mut rng);
    let vocab = inst.vocab().clone();
    // <eos> is never allowed, every other unit always is
    let row: Vec<f64> = (0..vocab.len())
        .map(|i| {
            if i == 0 || i == 1 {
                f64::NEG_INFINITY
            } else {
                -1.0
            }
        })
        .collect();
    let am = TableAm::new(vocab, vec![row]).unwrap();
    let cfg = DecoderConfig {
        beamsize: 2,
        beta: inst.beta,
        max_steps: 4,
        ..Default::default()
    };
    let r = decode_single(&utt(), &am, &inst.mlm, &cfg).unwrap();
    assert!(r.hypotheses.is_empty());
    assert!(r.steps <= 4);
    assert_eq!(r.truncated, r.steps == 4);
}

#[test]
fn vocabulary_mismatch_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let inst = kit::tiny_single(&mut rng);
    let other = TableAm::new(jointbpe_core::lm::Vocab::new(["zz"]), vec![vec![0.0; 4]]).unwrap();
    assert!(decode_single(&utt(), &other, &inst.mlm, &DecoderConfig::default()).is_err());
}
