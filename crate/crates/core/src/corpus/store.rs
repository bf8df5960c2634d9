//! On-disk layout of a preprocessed corpus directory.
//!
//! ```text
//! articles.idx   one article id per line, line number = column index
//! users.idx      one user id per line, line number = row index
//! vocab.idx      one term per line, line number = term index
//! edits.tsv      user_index \t article_index \t count
//! titles.tsv     article_index \t title
//! terms.bin      vocab × article term counts (sparse binary format)
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{io, SparseMatrix};
use crate::Corpus;

pub const ARTICLES_FILE: &str = "articles.idx";
pub const USERS_FILE: &str = "users.idx";
pub const VOCAB_FILE: &str = "vocab.idx";
pub const EDITS_FILE: &str = "edits.tsv";
pub const TITLES_FILE: &str = "titles.tsv";
pub const TERMS_FILE: &str = "terms.bin";

pub fn write_index_file(path: &Path, items: &[String]) -> Result<()> {
    let mut body = String::with_capacity(items.iter().map(|s| s.len() + 1).sum());
    for item in items {
        if item.contains('\n') {
            return Err(Error::InvalidArgument(format!(
                "index entry {item:?} contains a newline"
            )));
        }
        body.push_str(item);
        body.push('\n');
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_index_file(path: &Path) -> Result<Vec<String>> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(body.lines().map(str::to_string).collect())
}

/// `index \t title` lines; tabs and newlines inside titles become spaces.
pub fn write_titles(path: &Path, titles: &[String]) -> Result<()> {
    let lines: Vec<String> = titles
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{i}\t{}", t.replace(['\t', '\n', '\r'], " ")))
        .collect();
    write_index_file(path, &lines)
}

/// Reads a titles file for `n` articles; missing entries stay empty.
pub fn read_titles(path: &Path, n: usize) -> Result<Vec<String>> {
    let mut titles = vec![String::new(); n];
    for line in read_index_file(path)? {
        let (idx, title) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(path, format!("bad line {line:?}")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::format(path, format!("bad index {idx:?}")))?;
        if idx >= n {
            return Err(Error::format(path, format!("index {idx} out of range")));
        }
        titles[idx] = title.to_string();
    }
    Ok(titles)
}

pub fn save_corpus(dir: &Path, corpus: &Corpus) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_index_file(&dir.join(ARTICLES_FILE), &corpus.article_ids)?;
    write_index_file(&dir.join(USERS_FILE), &corpus.user_ids)?;
    write_index_file(&dir.join(VOCAB_FILE), &corpus.vocabulary)?;

    let path = dir.join(EDITS_FILE);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    for (u, a, n) in corpus.edits.triplets() {
        writeln!(w, "{u}\t{a}\t{}", n as u64).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    write_titles(&dir.join(TITLES_FILE), &corpus.titles)?;
    io::write_sparse(&dir.join(TERMS_FILE), &corpus.term_counts)
}

pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let article_ids = read_index_file(&dir.join(ARTICLES_FILE))?;
    let user_ids = read_index_file(&dir.join(USERS_FILE))?;
    let vocabulary = read_index_file(&dir.join(VOCAB_FILE))?;

    let path = dir.join(EDITS_FILE);
    let body = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut triplets = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let bad = || Error::format(&path, format!("line {}: {line:?}", i + 1));
        let mut f = line.split('\t');
        let (Some(u), Some(a), Some(n), None) = (f.next(), f.next(), f.next(), f.next()) else {
            return Err(bad());
        };
        let u: usize = u.parse().map_err(|_| bad())?;
        let a: usize = a.parse().map_err(|_| bad())?;
        let n: u64 = n.parse().map_err(|_| bad())?;
        triplets.push((u, a, n as f64));
    }
    let edits = SparseMatrix::from_triplets(user_ids.len(), article_ids.len(), triplets)?;

    let title_path = dir.join(TITLES_FILE);
    let titles = if title_path.exists() {
        read_titles(&title_path, article_ids.len())?
    } else {
        article_ids.clone()
    };

    let terms_path = dir.join(TERMS_FILE);
    let term_counts = if terms_path.exists() {
        io::read_sparse(&terms_path)?
    } else {
        SparseMatrix::zeros(vocabulary.len(), article_ids.len())
    };
    if term_counts.n_rows() != vocabulary.len() || term_counts.n_cols() != article_ids.len() {
        return Err(Error::format(
            &terms_path,
            format!(
                "term matrix is {}x{}, expected {}x{}",
                term_counts.n_rows(),
                term_counts.n_cols(),
                vocabulary.len(),
                article_ids.len()
            ),
        ));
    }

    Ok(Corpus {
        article_ids,
        titles,
        user_ids,
        vocabulary,
        edits,
        term_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_directory_round_trip() {
        let corpus = Corpus {
            article_ids: vec!["a1".into(), "a2".into()],
            titles: vec!["First".into(), "Second\twith tab".into()],
            user_ids: vec!["u1".into()],
            vocabulary: vec!["cat".into(), "dog".into(), "eel".into()],
            edits: SparseMatrix::from_triplets(1, 2, vec![(0, 1, 7.0)]).unwrap(),
            term_counts: SparseMatrix::from_triplets(3, 2, vec![(0, 0, 2.0), (2, 1, 1.0)]).unwrap(),
        };
        let dir = tempfile::tempdir().unwrap();
        save_corpus(dir.path(), &corpus).unwrap();
        assert_eq!(
            fs::read_to_string(dir.path().join(EDITS_FILE)).unwrap(),
            "0\t1\t7\n"
        );
        let back = load_corpus(dir.path()).unwrap();
        assert_eq!(back.article_ids, corpus.article_ids);
        assert_eq!(back.titles[1], "Second with tab");
        assert_eq!(back.edits, corpus.edits);
        assert_eq!(back.term_counts, corpus.term_counts);
    }
}
