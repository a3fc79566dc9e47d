use std::collections::{BTreeMap, BTreeSet};

use deeplex::eval::{stratified_folds, token_accuracy, type_prf, TreebankFreqs};
use deeplex::featurespace::{vectorize, EventBag, FeatureMatrix, SelectionConfig, SparseVector, FeatureValue, select_instances};
use deeplex::knn::{ClassifierSuite, Instance, InstanceBase, TrainConfig};
use deeplex::lexicon::{LexicalEntry, LexicalType, SeedLexicon, WordClass};
use deeplex::morph::{align_edit_ops, char_ngrams};
use deeplex::syntax::{extract_tagger_features, feature_types, Level, RelationInventory, Sentence, Token};
use proptest::prelude::*;

fn word_class() -> impl Strategy<Value = WordClass> {
    prop::sample::select(WordClass::ALL.to_vec())
}

fn entry() -> impl Strategy<Value = LexicalEntry> {
    ("[a-e]{1,4}", word_class(), 0..4usize).prop_map(|(lexeme, wc, t)| {
        LexicalEntry::new(lexeme, LexicalType::new(format!("{}_{t}_le", wc.tag()), wc))
    })
}

fn lexicon() -> impl Strategy<Value = SeedLexicon> {
    prop::collection::vec(entry(), 1..60).prop_map(|es| SeedLexicon::from_entries(es).unwrap())
}

fn tagged_sentence() -> impl Strategy<Value = Sentence> {
    prop::collection::vec(("[a-d]{1,2}", prop::sample::select(vec!["NN", "VB", "DT", "JJ"])), 1..12).prop_map(
        |tokens| Sentence::new(tokens.into_iter().map(|(w, p)| Token::new(&w, &w, p)).collect()),
    )
}

proptest! {
    #[test]
    fn lexicon_round_trips(lex in lexicon()) {
        let reread = SeedLexicon::parse(&lex.to_tsv()).unwrap();
        prop_assert_eq!(reread.entries(), lex.entries());
        prop_assert_eq!(reread.word_class_map(), lex.word_class_map());
    }

    #[test]
    fn inventory_filter_is_monotone(lex in lexicon(), a in 0..6usize, b in 0..6usize) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(lex.filter_inventory(hi).is_subset(&lex.filter_inventory(lo)));
    }

    #[test]
    fn ngram_counts(lemma in "[a-c]{1,10}", n_max in 1..7usize, sentinels: bool) {
        let grams = char_ngrams(&lemma, 1, n_max, sentinels).unwrap();
        let len = lemma.chars().count() + if sentinels { 2 } else { 0 };
        let expected: usize = (1..=n_max).map(|n| (len + 1).saturating_sub(n)).sum();
        prop_assert_eq!(grams.values().sum::<usize>(), expected);
        prop_assert!(grams.keys().all(|g| (1..=n_max).contains(&g.chars().count())));
    }

    #[test]
    fn alignments_apply_and_invert(a in "[a-f]{1,9}", b in "[a-f]{1,9}", ca in word_class(), cb in word_class()) {
        if let Some(t) = align_edit_ops((&a, ca), (&b, cb)) {
            prop_assert_eq!(t.apply(&a), Some(b.clone()));
            prop_assert_eq!(t.inverse().apply(&b), Some(a.clone()));
            prop_assert_eq!(t.src_class, ca);
            let back = align_edit_ops((&b, cb), (&a, ca)).unwrap();
            prop_assert_eq!(back, t.inverse());
        }
    }

    #[test]
    fn tagger_emits_one_event_per_type(sentence in tagged_sentence(), pick in any::<prop::sample::Index>()) {
        let target = sentence.tokens[pick.index(sentence.tokens.len())].lemma.clone();
        let occurrences = sentence.tokens.iter().filter(|t| t.lemma == target).count() as u64;
        let bag = extract_tagger_features(std::slice::from_ref(&sentence), &BTreeSet::from([target.clone()]));
        let types = feature_types(Level::Tagged, &RelationInventory::default());
        for ftype in &types {
            let per_type: u64 = bag
                .lexeme_features(&target)
                .unwrap()
                .iter()
                .filter(|((t, _), _)| t == ftype)
                .map(|(_, n)| n)
                .sum();
            // Duplicate values within one occurrence count once.
            prop_assert!(per_type >= 1 && per_type <= occurrences);
        }
        prop_assert_eq!(bag.occurrences()[&target], occurrences);
    }

    #[test]
    fn extraction_is_a_union_over_sentences(sentences in prop::collection::vec(tagged_sentence(), 1..6), seed: u64) {
        let targets: BTreeSet<String> = ["a", "b", "ab"].map(String::from).into();
        let whole = extract_tagger_features(&sentences, &targets);

        let mut merged = EventBag::new();
        for s in &sentences {
            merged.merge(extract_tagger_features(std::slice::from_ref(s), &targets));
        }
        prop_assert_eq!(&merged, &whole);

        let mut shuffled = sentences.clone();
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        prop_assert_eq!(extract_tagger_features(&shuffled, &targets), whole);
    }

    #[test]
    fn relative_values_are_shares(
        events in prop::collection::vec((0..8usize, 0..3usize, 0..10usize), 1..200),
    ) {
        let mut bag = EventBag::new();
        let mut occ: BTreeMap<String, u64> = BTreeMap::new();
        for (l, t, i) in events {
            let lexeme = format!("w{l}");
            bag.add(&lexeme, &format!("t{t}"), &format!("i{i}"));
            *occ.entry(lexeme).or_default() += 1;
        }
        let population: BTreeSet<String> = occ.keys().cloned().collect();
        let space = select_instances(&bag, &population, &SelectionConfig { per_type_cap: 4, total_cap: 9, min_freq: 1 });
        let vectors = vectorize(&bag, &space, &occ).unwrap();
        for v in vectors.values() {
            for (&id, value) in &v.values {
                prop_assert!(id < space.len());
                prop_assert!(value.rel > 0.0 && value.rel <= 1.0);
                prop_assert_eq!(value.rel, value.raw as f64 / occ[&v.lexeme] as f64);
            }
        }

        let matrix = FeatureMatrix { space, vectors };
        let mut buf = Vec::new();
        matrix.write(&mut buf).unwrap();
        let reread = FeatureMatrix::read(buf.as_slice()).unwrap();
        prop_assert_eq!(&reread, &matrix);
        prop_assert_eq!(reread.space.fingerprint(), matrix.space.fingerprint());
    }

    #[test]
    fn knn_is_permutation_and_scale_invariant(
        rows in prop::collection::vec((prop::collection::vec(0..4u32, 3), any::<bool>()), 1..40),
        query in prop::collection::vec(0..4u32, 3),
        k in prop::sample::select(vec![1usize, 3, 9]),
        feature in 0..3usize,
        shift in 1..6i32,
        rotate in 0..40usize,
    ) {
        let make = |rows: &[(Vec<u32>, bool)], scale: f64| {
            let instances = rows
                .iter()
                .enumerate()
                .map(|(i, (v, label))| Instance {
                    lexeme: format!("x{i}"),
                    values: v.iter().enumerate().map(|(f, &x)| if f == feature { x as f64 * scale } else { x as f64 }).collect(),
                    label: *label,
                })
                .collect();
            InstanceBase::new(vec![0, 1, 2], vec![1.0, 0.5, 2.0], instances)
        };
        let q = |scale: f64| -> Vec<f64> {
            query.iter().enumerate().map(|(f, &x)| if f == feature { x as f64 * scale } else { x as f64 }).collect()
        };
        let base = make(&rows, 1.0);
        let expected = base.classify_projected(&q(1.0), k).unwrap();

        let mut permuted = rows.clone();
        permuted.rotate_left(rotate % rows.len());
        permuted.reverse();
        prop_assert_eq!(make(&permuted, 1.0).classify_projected(&q(1.0), k).unwrap(), expected);

        let scale = f64::powi(2.0, shift);
        prop_assert_eq!(make(&rows, scale).classify_projected(&q(scale), k).unwrap().0, expected.0);
    }

    #[test]
    fn folds_partition_the_lexicon(lex in lexicon(), n in 2..8usize, seed: u64) {
        let lexemes = lex.word_class_map().len();
        prop_assume!(lexemes >= n);
        let folds = stratified_folds(&lex, n, seed).unwrap();
        prop_assert_eq!(folds.fold_of.len(), lexemes);
        prop_assert!(folds.fold_of.values().all(|&f| f < n));
        let sizes = folds.sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(&folds, &stratified_folds(&lex, n, seed).unwrap());
    }

    #[test]
    fn single_type_folds_are_balanced(n_pos in 1..40usize, n_neg in 0..40usize, n in 2..8usize, seed: u64) {
        let mut entries: Vec<LexicalEntry> = (0..n_pos)
            .map(|i| LexicalEntry::new(format!("p{i}"), LexicalType::new("x_le", WordClass::Noun)))
            .collect();
        entries.extend((0..n_neg).map(|i| LexicalEntry::new(format!("q{i}"), LexicalType::new("y_le", WordClass::Noun))));
        let lex = SeedLexicon::from_entries(entries).unwrap();
        prop_assume!(n_pos + n_neg >= n);
        let folds = stratified_folds(&lex, n, seed).unwrap();
        for prefix in ["p", "q"] {
            let mut per_fold = vec![0usize; n];
            for (l, &f) in &folds.fold_of {
                if l.starts_with(prefix) {
                    per_fold[f] += 1;
                }
            }
            prop_assert!(per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap() <= 1, "{prefix}: {per_fold:?}");
        }
    }

    #[test]
    fn fscore_lies_between_precision_and_recall(h in prop::collection::btree_set(0..20u8, 0..12), g in prop::collection::btree_set(0..20u8, 0..12)) {
        let set = |s: &BTreeSet<u8>| -> BTreeSet<LexicalEntry> {
            s.iter().map(|i| LexicalEntry::new(format!("l{i}"), LexicalType::new("t", WordClass::Noun))).collect()
        };
        let prf = type_prf(&set(&h), &set(&g));
        for v in [prf.precision, prf.recall, prf.fscore] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if prf.precision + prf.recall > 0.0 {
            prop_assert!(prf.fscore >= prf.precision.min(prf.recall) - 1e-12);
            prop_assert!(prf.fscore <= prf.precision.max(prf.recall) + 1e-12);
        }
    }

    #[test]
    fn token_accuracy_is_monotone(
        counts in prop::collection::vec(1..30u64, 1..10),
        hits in prop::collection::vec(any::<bool>(), 10),
        extra in 0..10usize,
    ) {
        let gold: Vec<LexicalEntry> = (0..counts.len())
            .map(|i| LexicalEntry::new(format!("l{i}"), LexicalType::new("t", WordClass::Noun)))
            .collect();
        let lex = SeedLexicon::from_entries(gold.clone()).unwrap();
        let freqs = TreebankFreqs::new(gold.iter().cloned().zip(counts.iter().copied()).collect(), &lex).unwrap();
        let gold_set: BTreeSet<LexicalEntry> = gold.iter().cloned().collect();

        let mut hyp: BTreeSet<LexicalEntry> = gold.iter().zip(&hits).filter(|(_, h)| **h).map(|(e, _)| e.clone()).collect();
        let before = token_accuracy(&hyp, &gold_set, &freqs).unwrap();
        for e in &gold {
            hyp.insert(e.clone());
            prop_assert!(token_accuracy(&hyp, &gold_set, &freqs).unwrap() >= before);
        }
        let full = token_accuracy(&hyp, &gold_set, &freqs).unwrap();
        prop_assert_eq!(full, 1.0);
        hyp.extend((0..extra).map(|i| LexicalEntry::new(format!("z{i}"), LexicalType::new("t", WordClass::Noun))));
        prop_assert_eq!(token_accuracy(&hyp, &gold_set, &freqs).unwrap(), full);
    }

    #[test]
    fn baseline_recall_is_majority_share(lex in lexicon()) {
        let defaults = lex.defaults();
        for wc in WordClass::ALL {
            let gold: BTreeSet<LexicalEntry> = lex.entries().iter().filter(|e| e.word_class() == wc).cloned().collect();
            if gold.is_empty() {
                continue;
            }
            let hyp: BTreeSet<LexicalEntry> = lex
                .word_class_map()
                .iter()
                .filter(|(_, cs)| cs.contains(&wc))
                .flat_map(|(l, _)| defaults.entries_for(l, &BTreeSet::from([wc])))
                .collect();
            let majority = lex.type_counts()[defaults.get(wc).unwrap()];
            prop_assert_eq!(type_prf(&hyp, &gold).recall, majority as f64 / gold.len() as f64);
        }
    }
}

#[test]
fn model_round_trip_predicts_identically() {
    let lex = SeedLexicon::parse(
        "aa\tnoun\tn_a_le\nab\tnoun\tn_a_le\nba\tnoun\tn_b_le\nbb\tnoun\tn_b_le\nca\tverb\tv_a_le\ncb\tverb\tv_b_le\n",
    )
    .unwrap();
    let vectors: BTreeMap<String, SparseVector> = lex
        .lexemes()
        .enumerate()
        .map(|(i, l)| {
            let mut v = SparseVector::empty(l);
            v.occurrences = 3;
            v.values.insert(i % 3, FeatureValue { raw: 1 + (i as u64 % 3), rel: (1 + (i as u64 % 3)) as f64 / 3.0 });
            (l.to_owned(), v)
        })
        .collect();
    let inventory = lex.inventory().cloned().collect();
    let suite = ClassifierSuite::train(&vectors, 6, &lex, &inventory, &TrainConfig { k: 1, n_features: 4 })
        .unwrap()
        .with_fingerprint("abc");
    let mut buf = Vec::new();
    suite.write(&mut buf).unwrap();
    let reread = ClassifierSuite::read(buf.as_slice()).unwrap();
    assert_eq!(reread, suite);

    let classes = BTreeSet::from([WordClass::Noun, WordClass::Verb]);
    for v in vectors.values() {
        assert_eq!(
            reread.predict_entries("q", v, &classes),
            suite.predict_entries("q", v, &classes)
        );
    }
}
