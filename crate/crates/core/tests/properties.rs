use std::collections::BTreeSet;

use proptest::prelude::*;
use theme_annotate_core::dataset::{make_bundle, split_train_test, test_size, FeatureMatrix, LabelCorpus, Role};
use theme_annotate_core::linalg::cosine;
use theme_annotate_core::textproc::{build_vocabulary, cosine_similarity, tfidf_weights, SparseVector};

fn bundle(n: usize) -> theme_annotate_core::dataset::DatasetBundle {
    let features = FeatureMatrix::from_rows((0..n).map(|i| (format!("id{i:03}"), vec![i as f64, 1.0]))).unwrap();
    let mut labels = LabelCorpus::new();
    for i in 0..n {
        labels.insert(format!("id{i:03}"), [(format!("w{}", i % 4), 1)]).unwrap();
    }
    make_bundle(features, labels, Role::Train).unwrap()
}

fn sparse() -> impl Strategy<Value = SparseVector> {
    prop::collection::vec((0usize..10, -5.0f64..5.0), 0..8).prop_map(SparseVector::from_pairs)
}

proptest! {
    #[test]
    fn split_is_a_partition(n in 2usize..60, fraction in 0.01f64..0.99, seed in any::<u64>()) {
        let b = bundle(n);
        let n_test = test_size(n, fraction);
        prop_assume!(n_test < n);
        let (train, test) = split_train_test(&b, fraction, seed).unwrap();
        prop_assert_eq!(test.len(), n_test);
        prop_assert_eq!(train.len() + test.len(), n);
        let a: BTreeSet<&String> = train.ids().iter().collect();
        let c: BTreeSet<&String> = test.ids().iter().collect();
        prop_assert!(a.is_disjoint(&c));
        // input order survives in both halves
        prop_assert!(train.ids().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(test.ids().windows(2).all(|w| w[0] < w[1]));
        let (train2, test2) = split_train_test(&b, fraction, seed).unwrap();
        prop_assert_eq!(train.ids(), train2.ids());
        prop_assert_eq!(test.ids(), test2.ids());
    }

    #[test]
    fn tfidf_ignores_corpus_order(docs in prop::collection::vec(prop::collection::vec((0usize..6, 1u32..5), 1..4), 1..10), shift in 0usize..10) {
        let build = |order: &[usize]| {
            let mut c = LabelCorpus::new();
            for &i in order {
                let words: Vec<(String, u32)> = docs[i].iter().map(|&(w, n)| (format!("w{w}"), n)).collect();
                c.insert(format!("d{i}"), words.iter().map(|(w, n)| (w.as_str(), *n))).unwrap();
            }
            c
        };
        let forward: Vec<usize> = (0..docs.len()).collect();
        let mut rotated = forward.clone();
        rotated.rotate_left(shift % docs.len());
        let (c1, c2) = (build(&forward), build(&rotated));
        let (v1, v2) = (build_vocabulary(&c1, 1, None).unwrap(), build_vocabulary(&c2, 1, None).unwrap());
        prop_assert_eq!(&v1, &v2);
        let (m1, m2) = (tfidf_weights(&c1, &v1), tfidf_weights(&c2, &v2));
        for (k, id) in m1.ids.iter().enumerate() {
            let j = m2.ids.iter().position(|x| x == id).unwrap();
            prop_assert_eq!(&m1.rows[k], &m2.rows[j]);
        }
    }

    #[test]
    fn sparse_cosine_is_symmetric_and_scale_free(u in sparse(), v in sparse(), s in 0.1f64..100.0) {
        let a = cosine_similarity(&u, &v);
        prop_assert_eq!(a, cosine_similarity(&v, &u));
        prop_assert!((cosine_similarity(&u.scaled(s), &v) - a).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&a));
        if !u.is_zero() {
            prop_assert_eq!(cosine_similarity(&u, &u), 1.0);
        }
    }

    #[test]
    fn dense_cosine_agrees_with_sparse(u in sparse(), v in sparse()) {
        let dense = |x: &SparseVector| (0..10).map(|i| x.get(i)).collect::<Vec<f64>>();
        prop_assert!((cosine(&dense(&u), &dense(&v)) - cosine_similarity(&u, &v)).abs() < 1e-12);
    }
}
