//! Property tests for the response scale, list building, ranking and the
//! evaluation measures.

use std::collections::HashSet;

use coldstart_core::evaluation::{cohesion, compute_septiles};
use coldstart_core::numerics::DenseMatrix;
use coldstart_core::questionnaire::{generate_questions, likert_to_score, LikertResponse, QuestionnaireDocument};
use coldstart_core::recommender::{diversify, interest_from_weights, interest_vector, top_k, RecMethod};
use coldstart_core::topics::{confidence, rating, TopicMatrix, TopicMethod};
use proptest::prelude::*;

fn topic_matrix(n_articles: usize, n_topics: usize) -> impl Strategy<Value = TopicMatrix> {
    prop::collection::vec(-1.0f64..1.0, n_articles * n_topics).prop_map(move |v| {
        TopicMatrix::new(
            DenseMatrix::from_fn(n_articles, n_topics, |r, c| v[r * n_topics + c]),
            TopicMethod::Content,
        )
    })
}

fn response() -> impl Strategy<Value = LikertResponse> {
    prop::sample::select(LikertResponse::ALL.to_vec())
}

fn negated(t: &TopicMatrix) -> TopicMatrix {
    TopicMatrix::new(
        DenseMatrix::from_fn(t.n_articles(), t.n_topics(), |r, c| -t.topics[(r, c)]),
        t.method,
    )
}

proptest! {
    #[test]
    fn likert_scale_matches_its_level(i in 0usize..7) {
        let r = LikertResponse::ALL[i];
        let want = (3.0 - i as f64) / 3.0;
        prop_assert!((likert_to_score(r) - want).abs() < 1e-12);
        prop_assert_eq!(likert_to_score(r.mirror()), -likert_to_score(r));
        prop_assert_eq!(r.mirror().mirror(), r);
        prop_assert_eq!(r.to_string().parse::<LikertResponse>().unwrap(), r);
    }

    #[test]
    fn interest_vector_is_the_weighted_column_sum(
        (topics, responses) in (3usize..6).prop_flat_map(|k| (topic_matrix(30, k), prop::collection::vec(response(), k)))
    ) {
        let iv = interest_vector(&responses, &topics).unwrap();
        for a in 0..30 {
            let mut want = 0.0;
            for (i, r) in responses.iter().enumerate() {
                want += likert_to_score(*r) * topics.topics[(a, i)];
            }
            prop_assert!((iv.scores[a] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn mirrored_responses_negate_the_interest_vector(
        (topics, responses) in (2usize..6).prop_flat_map(|k| (topic_matrix(25, k), prop::collection::vec(response(), k)))
    ) {
        let iv = interest_vector(&responses, &topics).unwrap();
        let mirrored: Vec<LikertResponse> = responses.iter().map(|r| r.mirror()).collect();
        let back = interest_vector(&mirrored, &topics).unwrap();
        for (x, y) in iv.scores.iter().zip(&back.scores) {
            prop_assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn interest_vector_is_linear_in_the_weights(
        topics in topic_matrix(20, 4),
        w1 in prop::collection::vec(-1.0f64..1.0, 4),
        w2 in prop::collection::vec(-1.0f64..1.0, 4),
        c in -3.0f64..3.0,
    ) {
        let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| c * a + b).collect();
        let left = interest_from_weights(&sum, &topics).unwrap();
        let a = interest_from_weights(&w1, &topics).unwrap();
        let b = interest_from_weights(&w2, &topics).unwrap();
        for i in 0..20 {
            prop_assert!((left.scores[i] - (c * a.scores[i] + b.scores[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn rating_and_confidence_match_their_formulas(
        edits in 0u32..10_000,
        kappa in 0.1f64..50.0,
        epsilon in 0.1f64..100.0,
    ) {
        let e = edits as f64;
        prop_assert_eq!(rating(e), if edits > 0 { 1.0 } else { 0.0 });
        let want = 1.0 + kappa * (1.0 + e / epsilon).ln();
        prop_assert!((confidence(e, kappa, epsilon) - want).abs() <= 1e-12 * want.max(1.0));
        prop_assert!(confidence(e, kappa, epsilon) >= 1.0);
    }

    #[test]
    fn negating_a_topic_swaps_its_lists(topics in topic_matrix(40, 3), n in 1usize..15) {
        let q = generate_questions(&topics, n, 3).unwrap();
        let flipped = generate_questions(&negated(&topics), n, 3).unwrap();
        for (a, b) in q.questions.iter().zip(&flipped.questions) {
            let ids = |l: &[coldstart_core::questionnaire::ListEntry]| l.iter().map(|e| e.article).collect::<Vec<_>>();
            prop_assert_eq!(ids(&a.list_a), ids(&b.list_b));
            prop_assert_eq!(ids(&a.list_b), ids(&b.list_a));
            prop_assert!(a.list_a.iter().all(|x| a.list_b.iter().all(|y| x.score >= y.score)));
        }
    }

    #[test]
    fn questionnaire_document_serializes_deterministically(topics in topic_matrix(30, 2)) {
        let ids: Vec<String> = (0..30).map(|i| format!("A{i}")).collect();
        let titles: Vec<String> = (0..30).map(|i| format!("Title {i}")).collect();
        let doc = generate_questions(&topics, 5, 2).unwrap().to_document(&ids, &titles);
        let again = generate_questions(&topics, 5, 2).unwrap().to_document(&ids, &titles);
        prop_assert_eq!(doc.to_json(), again.to_json());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.json");
        doc.save(&path).unwrap();
        let loaded = QuestionnaireDocument::load(&path).unwrap();
        prop_assert_eq!(loaded.to_json(), doc.to_json());
    }

    #[test]
    fn top_k_ignores_power_of_two_scaling(
        scores in prop::collection::vec(-100.0f64..100.0, 10..60),
        exp in -20i32..20,
        k in 0usize..10,
    ) {
        let factor = 2f64.powi(exp);
        let scaled: Vec<f64> = scores.iter().map(|s| s * factor).collect();
        let none = HashSet::new();
        let a = top_k(&scores, k, &none, RecMethod::QBased).unwrap();
        let b = top_k(&scaled, k, &none, RecMethod::QBased).unwrap();
        prop_assert_eq!(a.articles(), b.articles());
    }

    #[test]
    fn top_k_respects_exclusions_and_order(
        scores in prop::collection::vec(-1.0f64..1.0, 20..50),
        excluded in prop::collection::hash_set(0usize..20, 0..10),
        k in 1usize..10,
    ) {
        let list = top_k(&scores, k, &excluded, RecMethod::QBased).unwrap();
        prop_assert_eq!(list.len(), k);
        prop_assert!(list.articles().iter().all(|a| !excluded.contains(a)));
        prop_assert!(list.items.windows(2).all(|w| w[0].score >= w[1].score));
        let floor = list.items.last().unwrap().score;
        let kept: HashSet<usize> = list.articles().into_iter().collect();
        for (a, &s) in scores.iter().enumerate() {
            if !excluded.contains(&a) && !kept.contains(&a) {
                prop_assert!(s <= floor);
            }
        }
    }

    #[test]
    fn diversified_lists_come_from_the_pool(
        latent in prop::collection::vec(-1.0f64..1.0, 60 * 3),
        scores in prop::collection::vec(-1.0f64..1.0, 60),
        pool_size in 5usize..30,
        n_out in 1usize..6,
        seed in any::<u64>(),
    ) {
        let latents = DenseMatrix::from_fn(60, 3, |r, c| latent[r * 3 + c]);
        let pool = top_k(&scores, pool_size, &HashSet::new(), RecMethod::QBased).unwrap();
        let out = diversify(&pool, &latents, n_out, seed).unwrap();
        prop_assert_eq!(out.len(), n_out);
        let pool_ids = pool.articles();
        let positions: Vec<usize> = out
            .articles()
            .iter()
            .map(|a| pool_ids.iter().position(|p| p == a).expect("article outside the pool"))
            .collect();
        prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(out, diversify(&pool, &latents, n_out, seed).unwrap());
    }

    #[test]
    fn septile_bins_are_monotone(values in prop::collection::vec(-1e3f64..1e3, 7..80)) {
        let s = compute_septiles(&values).unwrap();
        prop_assert!(s.0.windows(2).all(|w| w[0] <= w[1]));
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let bins: Vec<usize> = sorted.iter().map(|&v| s.bin(v)).collect();
        prop_assert!(bins.windows(2).all(|w| w[0] <= w[1]));
        for &v in &values {
            let l = s.likert(v);
            prop_assert!((-1.0..=1.0).contains(&l));
            prop_assert!((l * 3.0 - (s.bin(v) as f64 - 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn cohesion_is_a_cosine_average(
        latent in prop::collection::vec(-1.0f64..1.0, 40 * 4),
        topic in prop::collection::vec(-1.0f64..1.0, 40),
        n in 2usize..20,
    ) {
        let latents = DenseMatrix::from_fn(40, 4, |r, c| latent[r * 4 + c]);
        let c = cohesion(&topic, &latents, n).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
    }
}
