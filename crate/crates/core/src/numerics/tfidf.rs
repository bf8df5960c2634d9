use crate::error::Result;
use crate::numerics::SparseMatrix;

/// Weighting applied to raw term counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TfidfVariant {
    /// `tf · ln(N / df)`
    #[default]
    Raw,
    /// `(1 + ln tf) · ln(N / df)`
    Sublinear,
}

/// TF-IDF weighting of a term×article count matrix.
///
/// Terms present in every article get idf 0 and vanish from storage.
pub fn tfidf(counts: &SparseMatrix) -> Result<SparseMatrix> {
    tfidf_with(counts, TfidfVariant::Raw)
}

pub fn tfidf_with(counts: &SparseMatrix, variant: TfidfVariant) -> Result<SparseMatrix> {
    let n_articles = counts.n_cols() as f64;
    let idf: Vec<f64> = (0..counts.n_rows())
        .map(|t| {
            let df = counts.row_nnz(t);
            if df == 0 {
                0.0
            } else {
                (n_articles / df as f64).ln()
            }
        })
        .collect();
    counts.map_values(|t, _, tf| {
        let weight = match variant {
            TfidfVariant::Raw => tf,
            TfidfVariant::Sublinear => 1.0 + tf.ln(),
        };
        weight * idf[t]
    })
}
