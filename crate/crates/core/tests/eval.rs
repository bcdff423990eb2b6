use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use theme_annotate_core::eval::{
    adjusted_rand_index, confusion_counts, f_measure, mean_metrics, precision_frequency_bins, WordConfusion,
    WordCounts, WordSets,
};
use theme_annotate_core::textproc::Vocabulary;
use theme_annotate_core::Error;

fn sets(entries: &[(&str, &[&str])]) -> WordSets {
    entries.iter().map(|(id, ws)| (id.to_string(), ws.iter().map(|w| w.to_string()).collect())).collect()
}

#[test]
fn three_images_match_exhaustive_enumeration() {
    let vocab = Vocabulary::from_words(["car", "sky", "tree", "road"]).unwrap();
    let pred = sets(&[("a", &["car", "sky"]), ("b", &["tree"]), ("c", &["car", "road", "extra"])]);
    let truth = sets(&[("a", &["car"]), ("b", &["tree", "sky"]), ("c", &["road", "sky", "car"])]);
    let table = confusion_counts(&pred, &truth, &vocab).unwrap();
    // Every (image, word) cell classified independently.
    for (i, word) in vocab.words().iter().enumerate() {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for image in ["a", "b", "c"] {
            match (pred[image].contains(word), truth[image].contains(word)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let got = &table.words[i];
        assert_eq!((got.tp, got.fp, got.fn_), (tp, fp, fn_), "{word}");
    }
    assert_eq!((table.words[0].tp, table.words[0].fp, table.words[0].fn_), (2, 0, 0));
    assert_eq!((table.words[1].tp, table.words[1].fp, table.words[1].fn_), (0, 1, 2));
}

#[test]
fn single_image_examples() {
    let vocab = Vocabulary::from_words(["car", "sky"]).unwrap();
    let t = confusion_counts(&sets(&[("a", &["car"])]), &sets(&[("a", &["car"])]), &vocab).unwrap();
    assert_eq!((t.words[0].tp, t.words[0].fp, t.words[0].fn_), (1, 0, 0));
    let t = confusion_counts(&sets(&[("a", &["car"])]), &sets(&[("a", &["sky"])]), &vocab).unwrap();
    assert_eq!((t.words[0].fp, t.words[1].fn_), (1, 1));
    let err = confusion_counts(&sets(&[("a", &[])]), &sets(&[("b", &[])]), &vocab).unwrap_err();
    assert_eq!(err, Error::KeyMismatch(vec!["a".into(), "b".into()]));
}

fn counts(word: &str, tp: u64, fp: u64, fn_: u64, freq: u64) -> WordCounts {
    WordCounts { word: word.into(), tp, fp, fn_, train_frequency: freq }
}

#[test]
fn twelve_word_bins_by_hand() {
    // (word, tp, fp, frequency); precision = tp / (tp + fp)
    let rows = [
        ("a", 1, 1, 5),  // 0.5
        ("b", 0, 0, 2),  // 0
        ("c", 3, 1, 9),  // 0.75
        ("d", 1, 0, 2),  // 1
        ("e", 0, 4, 30), // 0
        ("f", 2, 2, 7),  // 0.5
        ("g", 1, 3, 12), // 0.25
        ("h", 4, 0, 1),  // 1
        ("i", 1, 4, 12), // 0.2
        ("j", 3, 2, 40), // 0.6
        ("k", 0, 1, 3),  // 0
        ("l", 1, 1, 20), // 0.5
    ];
    let table = WordConfusion { words: rows.iter().map(|&(w, tp, fp, f)| counts(w, tp, fp, 0, f)).collect() };
    let bins = precision_frequency_bins(&table, 5).unwrap();
    // ascending frequency, ties by word: h1 b2 d2 k3 a5 | f7 c9 g12 i12 l20 | e30 j40
    assert_eq!(bins.len(), 3);
    assert_eq!(bins[0].mean_frequency, 13.0 / 5.0);
    assert!((bins[0].mean_precision - (1.0 + 0.0 + 1.0 + 0.0 + 0.5) / 5.0).abs() < 1e-15);
    assert_eq!(bins[1].mean_frequency, 60.0 / 5.0);
    assert!((bins[1].mean_precision - (0.5 + 0.75 + 0.25 + 0.2 + 0.5) / 5.0).abs() < 1e-15);
    assert_eq!(bins[2].mean_frequency, 35.0);
    assert!((bins[2].mean_precision - 0.3).abs() < 1e-15);

    assert_eq!(precision_frequency_bins(&table, 10).unwrap().len(), 2);
    assert!(precision_frequency_bins(&table, 0).is_err());
}

#[test]
fn equal_frequencies_share_bin_means() {
    let table = WordConfusion { words: (0..20).map(|i| counts(&format!("w{i:02}"), i % 3, 1, 0, 4)).collect() };
    let bins = precision_frequency_bins(&table, 10).unwrap();
    assert_eq!(bins.len(), 2);
    assert!(bins.iter().all(|b| b.mean_frequency == 4.0));
}

#[test]
fn metric_examples() {
    let zero = WordConfusion { words: vec![counts("a", 0, 0, 0, 0), counts("b", 0, 3, 2, 1)] };
    let m = mean_metrics(&zero).unwrap();
    assert_eq!((m.mean_precision, m.mean_recall, m.mean_f, m.n_plus), (0.0, 0.0, 0.0, 0));

    let same = WordConfusion { words: vec![counts("a", 1, 1, 1, 0), counts("b", 3, 1, 1, 0)] };
    let m = mean_metrics(&same).unwrap();
    assert_eq!(m.mean_precision, m.mean_recall);
    assert!((m.mean_f - m.mean_precision).abs() < 1e-15);
    assert_eq!(m.n_plus, 2);

    assert!(mean_metrics(&WordConfusion { words: vec![] }).is_err());
    assert_eq!(f_measure(0.0, 0.0), 0.0);
}

#[test]
fn adjusted_rand_examples() {
    assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]).unwrap(), 1.0);
    // No pair agrees; expected index 2·2/6 = 2/3, max 2: (0 − 2/3)/(2 − 2/3)
    assert!((adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() + 0.5).abs() < 1e-12);
    assert!(adjusted_rand_index(&[0], &[0, 1]).is_err());
}

fn word_sets(images: usize) -> impl Strategy<Value = (WordSets, WordSets)> {
    let one = prop::collection::btree_set(0usize..6, 0..4);
    prop::collection::vec((one.clone(), one), images).prop_map(|rows| {
        let mut pred = BTreeMap::new();
        let mut truth = BTreeMap::new();
        for (i, (p, t)) in rows.into_iter().enumerate() {
            let name = |s: BTreeSet<usize>| s.into_iter().map(|w| format!("w{w}")).collect::<BTreeSet<_>>();
            pred.insert(format!("img{i:03}"), name(p));
            truth.insert(format!("img{i:03}"), name(t));
        }
        (pred, truth)
    })
}

fn vocab6() -> Vocabulary {
    Vocabulary::from_words((0..6).map(|w| format!("w{w}"))).unwrap()
}

proptest! {
    #[test]
    fn counts_agree_with_inputs((pred, truth) in word_sets(7)) {
        let table = confusion_counts(&pred, &truth, &vocab6()).unwrap();
        for w in &table.words {
            let truly = truth.values().filter(|s| s.contains(&w.word)).count() as u64;
            let predicted = pred.values().filter(|s| s.contains(&w.word)).count() as u64;
            prop_assert_eq!(w.tp + w.fn_, truly);
            prop_assert_eq!(w.tp + w.fp, predicted);
        }
        let m = mean_metrics(&table).unwrap();
        prop_assert!((m.mean_f - f_measure(m.mean_precision, m.mean_recall)).abs() <= 1e-12);
        prop_assert!(m.n_plus <= table.len());
    }

    #[test]
    fn disjoint_sets_add((a_pred, a_truth) in word_sets(4), (b_pred, b_truth) in word_sets(5)) {
        let rename = |m: WordSets, tag: &str| -> WordSets { m.into_iter().map(|(k, v)| (format!("{tag}{k}"), v)).collect() };
        let (a_pred, a_truth) = (rename(a_pred, "a"), rename(a_truth, "a"));
        let (b_pred, b_truth) = (rename(b_pred, "b"), rename(b_truth, "b"));
        let vocab = vocab6();
        let a = confusion_counts(&a_pred, &a_truth, &vocab).unwrap();
        let b = confusion_counts(&b_pred, &b_truth, &vocab).unwrap();
        let joined = confusion_counts(
            &a_pred.into_iter().chain(b_pred).collect(),
            &a_truth.into_iter().chain(b_truth).collect(),
            &vocab,
        ).unwrap();
        prop_assert_eq!(a.merge(&b).unwrap(), joined);
    }

    #[test]
    fn metrics_ignore_order((pred, truth) in word_sets(6), rotate in 0usize..6) {
        let base = mean_metrics(&confusion_counts(&pred, &truth, &vocab6()).unwrap()).unwrap();
        // Image order: re-key with ids sorting in a rotated order.
        let rekey = |m: &WordSets| -> WordSets {
            m.iter().enumerate().map(|(i, (_, v))| (format!("x{:03}", (i + rotate) % 6), v.clone())).collect()
        };
        let moved = mean_metrics(&confusion_counts(&rekey(&pred), &rekey(&truth), &vocab6()).unwrap()).unwrap();
        prop_assert_eq!(&base, &moved);
        // Word order.
        let mut words: Vec<String> = (0..6).map(|w| format!("w{w}")).collect();
        words.rotate_left(rotate);
        let shuffled = Vocabulary::from_words(words).unwrap();
        let other = mean_metrics(&confusion_counts(&pred, &truth, &shuffled).unwrap()).unwrap();
        prop_assert!((other.mean_precision - base.mean_precision).abs() < 1e-15);
        prop_assert!((other.mean_recall - base.mean_recall).abs() < 1e-15);
        prop_assert_eq!(other.n_plus, base.n_plus);
    }
}
