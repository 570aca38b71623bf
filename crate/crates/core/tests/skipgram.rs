use boostcnn::corpus::{
    encode_sentences, Dataset, Document, Label, TraitLabels, Vocabulary, PAD_ID,
};
use boostcnn::embedding::{log_prob, EmbeddingTable, SkipGram, SkipGramConfig};

/// Two topics that never share a sentence: {a, b} alternate and {q, r}
/// alternate.
fn toy() -> (Vec<Vec<u32>>, Vocabulary) {
    let docs = (0..20)
        .map(|i| Document {
            id: format!("d{i}"),
            raw_text: "a b a b a b a b a b a b. q r q r q r q r q r q r.".into(),
            labels: TraitLabels::uniform(Label::Positive),
        })
        .collect();
    let ds = Dataset { documents: docs };
    let vocab = ds.build_vocab(1).unwrap();
    (encode_sentences(&ds, &vocab), vocab)
}

#[test]
fn exact_softmax_objective_never_decreases() {
    let (sentences, vocab) = toy();
    let v = vocab.len();
    let cfg = SkipGramConfig {
        dim: 10,
        epochs: 5,
        negative: 0,
        seed: 3,
        ..Default::default()
    };
    let mut model = SkipGram::new(sentences, v, cfg).unwrap();
    let mut trace = vec![model.objective(None).unwrap()];
    for _ in 0..5 {
        model.train_epoch();
        trace.push(model.objective(None).unwrap());
    }
    for w in trace.windows(2) {
        assert!(w[1] >= w[0], "objective fell: {trace:?}");
    }
    assert!(trace[5] > trace[0] + 0.1, "{trace:?}");
    assert!(trace.iter().all(|&o| o <= 0.0));
}

#[test]
fn co_occurring_words_are_more_likely() {
    let (sentences, vocab) = toy();
    let v = vocab.len();
    let (a, b, q) = (vocab.id("a"), vocab.id("b"), vocab.id("q"));
    for negative in [0, 5] {
        let cfg = SkipGramConfig {
            dim: 10,
            epochs: 5,
            negative,
            seed: 8,
            ..Default::default()
        };
        let mut model = SkipGram::new(sentences.clone(), v, cfg).unwrap();
        model.train();
        let near = log_prob(model.input(), model.output(), a, b);
        let far = log_prob(model.input(), model.output(), a, q);
        assert!(near > far, "negative={negative}: {near} vs {far}");
    }
}

#[test]
fn artifact_round_trips_through_disk() {
    let (sentences, vocab) = toy();
    let v = vocab.len();
    let cfg = SkipGramConfig {
        dim: 6,
        epochs: 1,
        ..Default::default()
    };
    let mut model = SkipGram::new(sentences, v, cfg).unwrap();
    model.train();
    let table = model.into_input();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.bin");
    table.save(&path).unwrap();
    let back = EmbeddingTable::load(&path).unwrap();
    assert_eq!(back.to_bytes(), table.to_bytes());
    assert!(back.row(PAD_ID).iter().all(|&x| x == 0.0));

    let mut bytes = table.to_bytes();
    bytes.truncate(bytes.len() - 3);
    assert!(EmbeddingTable::from_bytes(&bytes).is_err());
}
