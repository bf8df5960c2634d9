//! Preprocessing filters checked by scanning the output directly.

use std::collections::{HashMap, HashSet};

use coldstart_core::corpus::{filter_corpus, is_list_like, ArticleRecord, EditTriple, FilterConfig, FilteredCorpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GROUPS: usize = 12;
const PER_GROUP: usize = 56;

/// A corpus that breaks every rule somewhere, at production thresholds.
///
/// 672 regular articles in 12 groups of 56; each group shares a block of
/// terms, every article carries a ubiquitous term and a unique term. On top
/// of that: stubs, list-like titles, a term per group with df at most 49,
/// light users, barely edited articles and a user who only clears the bar
/// through a stub.
fn dirty_corpus(seed: u64) -> (Vec<ArticleRecord>, Vec<EditTriple>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut articles = Vec::new();
    for g in 0..GROUPS {
        for i in 0..PER_GROUP {
            let id = format!("g{g}a{i}");
            let mut words: Vec<String> = (0..110).map(|t| format!("grp{g}t{}", t % 20)).collect();
            words.push("everywhere".into());
            words.push(format!("unique{g}x{i}"));
            if i < 49 {
                words.push(format!("almost{g}"));
            }
            let title = match (g, i) {
                (0, 1) => "List of rivers".to_string(),
                (1, 2) => "  glossary of terms".to_string(),
                (2, 3) => "Timeline of events".to_string(),
                _ => format!("Article {g} {i}"),
            };
            articles.push(ArticleRecord::new(id, title, &words.join(" ")));
        }
    }
    // stubs: 99 tokens and far fewer
    articles.push(ArticleRecord::new("stub1", "Stub one", &vec!["grp0t1"; 99].join(" ")));
    articles.push(ArticleRecord::new("stub2", "Stub two", "short text"));

    let regular: Vec<String> = articles
        .iter()
        .filter(|a| a.token_count >= 100)
        .map(|a| a.article_id.clone())
        .collect();
    let mut edits = Vec::new();
    for u in 0..300 {
        let user = format!("u{u}");
        for _ in 0..rng.random_range(3..8) {
            let a = &regular[rng.random_range(0..regular.len())];
            edits.push(EditTriple::new(user.clone(), a.clone(), rng.random_range(3..15)));
        }
    }
    // every regular article gets enough edits from a heavy editor
    for (i, a) in regular.iter().enumerate() {
        if i % 97 == 5 {
            continue; // these stay under the article threshold
        }
        edits.push(EditTriple::new(format!("heavy{}", i % 10), a.clone(), 20));
    }
    // light users
    edits.push(EditTriple::new("light1", regular[0].clone(), 19));
    edits.push(EditTriple::new("light2", regular[1].clone(), 1));
    // clears 20 only with the stub edit
    edits.push(EditTriple::new("cascade", "stub1", 10));
    edits.push(EditTriple::new("cascade", regular[2].clone(), 12));
    // edits on unknown articles are dropped
    edits.push(EditTriple::new("u1", "ghost", 50));

    let edits = coldstart_core::corpus::aggregate_edits(edits);
    (articles, edits)
}

/// Checks all rules against the output with nothing but the raw fields.
fn assert_clean(out: &FilteredCorpus, config: &FilterConfig) {
    let n = out.articles.len();
    assert!(n > 0);
    for a in &out.articles {
        assert!(a.token_count >= config.min_tokens, "{} is a stub", a.article_id);
        assert!(!is_list_like(&a.title, &config.list_prefixes), "{} is list-like", a.title);
    }
    let mut user_totals: HashMap<&str, u64> = HashMap::new();
    let mut article_totals: HashMap<&str, u64> = HashMap::new();
    let triples = out.edit_triples();
    for e in &triples {
        *user_totals.entry(&e.user_id).or_default() += e.edit_count;
        *article_totals.entry(&e.article_id).or_default() += e.edit_count;
    }
    for u in &out.users {
        assert!(user_totals.get(u.as_str()).copied().unwrap_or(0) >= config.min_user_edits, "user {u}");
    }
    for a in &out.articles {
        let total = article_totals.get(a.article_id.as_str()).copied().unwrap_or(0);
        assert!(total >= config.min_article_edits, "article {}", a.article_id);
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for a in &out.articles {
        for t in a.tokens.iter().map(String::as_str).collect::<HashSet<_>>() {
            *df.entry(t).or_default() += 1;
        }
    }
    for t in &out.vocabulary {
        let d = df[t.as_str()];
        assert!(d >= config.min_df, "{t} df {d}");
        assert!(d as f64 <= config.max_df_fraction * n as f64, "{t} df {d} of {n}");
    }
    // and the vocabulary is every term that qualifies
    let qualifying = df
        .values()
        .filter(|&&d| d >= config.min_df && d as f64 <= config.max_df_fraction * n as f64)
        .count();
    assert_eq!(qualifying, out.vocabulary.len());
    // term counts agree with the retained tokens
    let term_totals = out.term_counts.col_sums();
    for (i, a) in out.articles.iter().enumerate() {
        let vocab: HashSet<&str> = out.vocabulary.iter().map(String::as_str).collect();
        let expected = a.tokens.iter().filter(|t| vocab.contains(t.as_str())).count();
        assert_eq!(term_totals[i], expected as f64);
    }
}

#[test]
fn every_rule_holds_on_the_output() {
    let (articles, edits) = dirty_corpus(1);
    let config = FilterConfig::default();
    let out = filter_corpus(&articles, &edits, &config).unwrap();
    assert_clean(&out, &config);

    let kept: HashSet<&str> = out.articles.iter().map(|a| a.article_id.as_str()).collect();
    for gone in ["stub1", "stub2", "g0a1", "g1a2", "g2a3"] {
        assert!(!kept.contains(gone), "{gone} survived");
    }
    let users: HashSet<&str> = out.users.iter().map(String::as_str).collect();
    for gone in ["light1", "light2", "cascade"] {
        assert!(!users.contains(gone), "{gone} survived");
    }
    assert!(!out.vocabulary.iter().any(|t| t == "everywhere" || t.starts_with("unique")));
    assert!(!out.vocabulary.iter().any(|t| t.starts_with("almost")));
    assert!(out.vocabulary.iter().any(|t| t.starts_with("grp")));
}

#[test]
fn filtering_the_output_again_changes_nothing() {
    for seed in 0..3 {
        let (articles, edits) = dirty_corpus(seed);
        let config = FilterConfig::default();
        let once = filter_corpus(&articles, &edits, &config).unwrap();
        let twice = filter_corpus(&once.articles, &once.edit_triples(), &config).unwrap();
        assert_eq!(once.articles, twice.articles);
        assert_eq!(once.users, twice.users);
        assert_eq!(once.vocabulary, twice.vocabulary);
        assert_eq!(once.edits, twice.edits);
        assert_eq!(once.term_counts, twice.term_counts);
    }
}

#[test]
fn passthrough_keeps_everything_with_an_edit() {
    let (articles, edits) = dirty_corpus(4);
    let out = filter_corpus(&articles, &edits, &FilterConfig::passthrough()).unwrap();
    assert_eq!(out.articles.len(), articles.len());
    let users: HashSet<&str> = edits
        .iter()
        .filter(|e| e.article_id != "ghost")
        .map(|e| e.user_id.as_str())
        .collect();
    assert_eq!(out.users.len(), users.len());
}
