use std::vec;

use zsda_core::synth::*;
use zsda_core::numerics::{Matrix, Rng};
use zsda_core::Error;

#[test]
fn clean_forced_duration_repeats_prototype() {
    let cfg = ScenarioConfig::default();
    let world = World::generate(&cfg).unwrap();
    let clean = DomainSpec::clean("x", cfg.feature_dim, 0.0);
    let frames = synthesize_with_durations(&world.target, &[1], &[2], &clean, &mut Rng::new(1)).unwrap();
    assert_eq!(frames.rows(), 2);
    assert_eq!(frames.row(0), world.target.prototype(1));
    assert_eq!(frames.row(1), world.target.prototype(1));
}

#[test]
fn synthesis_is_seeded() {
    let world = World::generate(&ScenarioConfig::default()).unwrap();
    let a = synthesize(&world.target, &[1, 2, 3], &world.target_domain, &mut Rng::new(5)).unwrap();
    let b = synthesize(&world.target, &[1, 2, 3], &world.target_domain, &mut Rng::new(5)).unwrap();
    assert_eq!(a, b);
    // tempo doubles every emitted frame
    assert_eq!(a.rows() % 2, 0);
    assert_eq!(a.row(0), a.row(1));
}

#[test]
fn synthesis_rejects_bad_tokens() {
    let world = World::generate(&ScenarioConfig::default()).unwrap();
    let dom = &world.source_domain;
    assert!(matches!(synthesize(&world.target, &[13], dom, &mut Rng::new(1)), Err(Error::Vocab { .. })));
    assert!(matches!(synthesize(&world.target, &[0], dom, &mut Rng::new(1)), Err(Error::Vocab { .. })));
    assert!(synthesize(&world.target, &[], dom, &mut Rng::new(1)).is_err());
}

#[test]
fn languages_respect_margins_and_offsets() {
    let cfg = ScenarioConfig::default();
    let close = World::generate(&cfg).unwrap();
    assert!(close.target.min_separation() >= cfg.margin);
    for t in 1..=cfg.graphemes {
        let d = distance(close.source.prototype(t), close.target.prototype(t));
        assert!(d <= cfg.close_offset() + 1e-12, "{d}");
    }
    let distant = World::generate(&ScenarioConfig::preset("distant").unwrap()).unwrap();
    assert!(distant.source.min_separation() >= cfg.margin);
    for t in 1..=cfg.graphemes {
        assert!(distance(distant.source.prototype(t), distant.target.prototype(t)) > cfg.close_offset());
    }
    assert_eq!(distant.target, close.target);
}

#[test]
fn domains_are_valid() {
    for name in ["default", "mild"] {
        let cfg = ScenarioConfig::preset(name).unwrap();
        let w = World::generate(&cfg).unwrap();
        assert!(w.target_domain.validate(cfg.max_condition).is_ok());
        assert_eq!(w.target_domain.tempo, 2);
        assert!((w.target_domain.noise_std - cfg.noise_ratio * w.source_domain.noise_std).abs() < 1e-12);
        assert_eq!(w.source_domain.channel, Matrix::identity(cfg.feature_dim));
    }
}

fn small(name: &str) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset(name).unwrap();
    cfg.n_labeled = 20;
    cfg.n_unlabeled = 15;
    cfg.n_dev = 5;
    cfg.n_test = 7;
    cfg
}

#[test]
fn corpus_splits_have_expected_tags() {
    let (world, corpus) = gen_corpus(&small("default")).unwrap();
    assert_eq!((corpus.labeled.len(), corpus.unlabeled.len()), (20, 15));
    assert_eq!((corpus.dev.len(), corpus.test.len()), (5, 7));
    for u in &corpus.labeled {
        assert_eq!((u.language.as_str(), u.domain.as_str()), (TARGET_LANGUAGE, SOURCE_DOMAIN));
        let t = u.transcript.as_ref().unwrap();
        assert!((3..=8).contains(&t.len()));
        assert!(t.iter().all(|&k| (1..world.target.vocab_size()).contains(&k)));
    }
    for u in &corpus.unlabeled {
        assert!(u.transcript.is_none());
        assert_eq!((u.language.as_str(), u.domain.as_str()), (SOURCE_LANGUAGE, TARGET_DOMAIN));
    }
    for u in corpus.dev.iter().chain(&corpus.test) {
        assert_eq!((u.language.as_str(), u.domain.as_str()), (TARGET_LANGUAGE, TARGET_DOMAIN));
    }
    assert_eq!(corpus.unlabeled_truth.len(), 15);
    assert_eq!(corpus.unlabeled_truth[3].0, corpus.unlabeled[3].id);
}

#[test]
fn cross_domain_moves_unlabeled_only() {
    let (_, c) = gen_corpus(&small("cross-domain")).unwrap();
    assert!(c.unlabeled.iter().all(|u| u.domain == SOURCE_DOMAIN));
    assert!(c.test.iter().all(|u| u.domain == TARGET_DOMAIN));
}

#[test]
fn regeneration_is_identical() {
    let a = gen_corpus(&small("default")).unwrap();
    let b = gen_corpus(&small("default")).unwrap();
    assert_eq!(a, b);
    let mut other = small("default");
    other.seed = 8;
    assert_ne!(gen_corpus(&other).unwrap().1.labeled[0], a.1.labeled[0]);
}

#[test]
fn transcript_round_trip_and_config_text() {
    let world = World::generate(&ScenarioConfig::default()).unwrap();
    let text = world.source.render(&[1, 5, 12]);
    assert_eq!(text, "A E L");
    assert_eq!(world.source.parse_transcript(&text).unwrap(), vec![1, 5, 12]);
    assert!(world.target.parse_transcript("a Z").is_err());

    let cfg = ScenarioConfig::preset("distant").unwrap();
    assert_eq!(ScenarioConfig::from_kv_text(&cfg.to_kv_text()).unwrap(), cfg);
    assert!(ScenarioConfig::from_kv_text("bogus = 1").is_err());
    assert!(ScenarioConfig::preset("nowhere").is_err());
}
