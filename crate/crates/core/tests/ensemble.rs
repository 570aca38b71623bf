use boostcnn::corpus::{EncodedCorpus, Label, Trait};
use boostcnn::embedding::{build_input_channels, ChannelSpec, EmbeddingTable, Variant};
use boostcnn::ensemble::{
    load_ensemble, save_ensemble, train_adaboost_cnn, EnsembleModel, Example, HyperParams,
};
use boostcnn::experiment::{
    generate_synthetic_corpus, plan_experiment, ExperimentConfig, Job, SyntheticSpec,
};
use boostcnn::neural::AdadeltaConfig;
use boostcnn::Error;

fn corpus(n_docs: usize, seed: u64) -> EncodedCorpus {
    let spec = SyntheticSpec {
        n_docs,
        ..Default::default()
    };
    let ds = generate_synthetic_corpus(&spec, seed).unwrap();
    let vocab = ds.build_vocab(1).unwrap();
    EncodedCorpus::encode(&ds, &vocab, spec.doc_len).unwrap()
}

fn hyper(filter_sizes: Vec<usize>, epochs: usize) -> HyperParams {
    HyperParams {
        filter_sizes,
        filters: 32,
        epochs,
        adadelta: AdadeltaConfig {
            step_scale: 1.0,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn first_job(corpus: &EncodedCorpus, hyper: &HyperParams, seed: u64) -> Job {
    let cfg = ExperimentConfig {
        variants: vec![Variant::Rand],
        traits: vec![Trait::Ext],
        hyper: hyper.clone(),
        seed,
        ..Default::default()
    };
    plan_experiment(corpus, &cfg).unwrap().jobs.remove(0)
}

fn examples<'a>(corpus: &'a EncodedCorpus, ix: &[usize]) -> Vec<Example<'a>> {
    ix.iter()
        .map(|&i| Example {
            doc: &corpus.documents[i],
            label: corpus.documents[i].labels.get(Trait::Ext),
        })
        .collect()
}

fn train(
    corpus: &EncodedCorpus,
    job: &Job,
    channels: &ChannelSpec,
    hyper: &HyperParams,
) -> EnsembleModel {
    train_adaboost_cnn(
        Trait::Ext,
        &examples(corpus, &job.train),
        &examples(corpus, &job.validation),
        channels,
        hyper,
        job.seed,
    )
    .unwrap()
}

fn test_accuracy(model: &EnsembleModel, c: &EncodedCorpus, job: &Job) -> f64 {
    model.accuracy(&examples(c, &job.test)).unwrap()
}

#[test]
fn trigram_detector_and_fused_model() {
    let c = corpus(500, 11);
    let fused_h = hyper(vec![3, 4, 5], 15);
    let job = first_job(&c, &fused_h, 11);
    let channels = build_input_channels(Variant::Rand, c.vocab_size, None, 32, job.seed).unwrap();

    let alone = train(&c, &job, &channels, &hyper(vec![3], 15));
    let fused = train(&c, &job, &channels, &fused_h);
    let alone_acc = test_accuracy(&alone, &c, &job);
    let fused_acc = test_accuracy(&fused, &c, &job);
    assert!(alone_acc >= 0.95, "h=3 test accuracy {alone_acc}");
    assert!(
        fused_acc >= alone_acc - 0.02,
        "fused {fused_acc} vs h=3 {alone_acc}"
    );

    assert_eq!(fused.log.len(), 15);
    let best = fused
        .log
        .iter()
        .map(|l| l.val_accuracy)
        .fold(f64::MIN, f64::max);
    let first_best = fused
        .log
        .iter()
        .find(|l| l.val_accuracy == best)
        .unwrap()
        .epoch;
    assert_eq!(fused.best_epoch, first_best);
}

#[test]
fn single_classifier_votes_alone() {
    let c = corpus(100, 3);
    let h = hyper(vec![3], 4);
    let job = first_job(&c, &h, 3);
    let channels = build_input_channels(Variant::Rand, c.vocab_size, None, 16, job.seed).unwrap();
    let model = train(&c, &job, &channels, &h);
    assert_eq!(model.classifiers.len(), 1);
    if model.weights[0] > 0.0 {
        for doc in &c.documents {
            assert_eq!(
                model.predict(doc).unwrap(),
                model.classifiers[0].predict(doc).unwrap()
            );
        }
    }
}

#[test]
fn training_is_deterministic() {
    let c = corpus(60, 5);
    let h = hyper(vec![3, 4], 3);
    let job = first_job(&c, &h, 5);
    let channels = build_input_channels(Variant::Rand, c.vocab_size, None, 8, job.seed).unwrap();
    assert_eq!(
        train(&c, &job, &channels, &h),
        train(&c, &job, &channels, &h)
    );
}

fn pretrained(c: &EncodedCorpus, dim: usize) -> EmbeddingTable {
    let mut r = boostcnn::rng::seeded(99);
    EmbeddingTable::uniform(c.vocab_size, dim, 0.3, &mut r)
}

#[test]
fn checkpoint_round_trip_every_variant() {
    let c = corpus(60, 7);
    let h = hyper(vec![3, 4, 5], 2);
    let job = first_job(&c, &h, 7);
    let table = pretrained(&c, 8);
    for variant in Variant::ALL {
        let base = build_input_channels(variant, c.vocab_size, Some(&table), 8, job.seed).unwrap();
        let model = train(&c, &job, &base, &h);
        let dir = tempfile::tempdir().unwrap();
        save_ensemble(dir.path(), &model, &base).unwrap();
        let loaded = load_ensemble(dir.path(), &base).unwrap();
        assert_eq!(loaded, model, "{variant}");
        for doc in &c.documents {
            assert_eq!(loaded.votes(doc).unwrap(), model.votes(doc).unwrap());
        }
    }
}

#[test]
fn checkpoint_version_mismatch_is_rejected() {
    let c = corpus(60, 7);
    let h = hyper(vec![3], 1);
    let job = first_job(&c, &h, 7);
    let base = build_input_channels(Variant::Rand, c.vocab_size, None, 8, job.seed).unwrap();
    let model = train(&c, &job, &base, &h);
    let dir = tempfile::tempdir().unwrap();
    save_ensemble(dir.path(), &model, &base).unwrap();
    let manifest = dir.path().join(boostcnn::ensemble::ENSEMBLE_MANIFEST);
    let text = std::fs::read_to_string(&manifest).unwrap();
    std::fs::write(&manifest, text.replace("\"version\": 1", "\"version\": 99")).unwrap();
    let err = load_ensemble(dir.path(), &base).unwrap_err();
    assert_eq!(err.class(), "format", "{err}");
}

#[test]
fn non_finite_input_reports_divergence() {
    let c = corpus(60, 9);
    let h = hyper(vec![3, 4], 2);
    let job = first_job(&c, &h, 9);
    let mut table = pretrained(&c, 8);
    for id in 1..c.vocab_size as u32 {
        table.row_mut(id)[0] = f64::NAN;
    }
    let base =
        build_input_channels(Variant::Static, c.vocab_size, Some(&table), 8, job.seed).unwrap();
    let err = train_adaboost_cnn(
        Trait::Ext,
        &examples(&c, &job.train),
        &examples(&c, &job.validation),
        &base,
        &h,
        job.seed,
    )
    .unwrap_err();
    assert!(
        matches!(
            err,
            Error::Diverged {
                height: 3,
                epoch: 1
            }
        ),
        "{err}"
    );
}

#[test]
fn labels_are_both_classes() {
    let c = corpus(40, 1);
    let pos = c
        .documents
        .iter()
        .filter(|d| d.labels.get(Trait::Agr) == Label::Positive)
        .count();
    assert_eq!(pos, 20);
}
