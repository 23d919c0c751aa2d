use std::collections::{BTreeMap, HashMap};

use super::{BaselineError, TagHistogram};

/// Selected tags in feature order with their inverse document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVocabulary {
    tags: Vec<String>,
    idf: Vec<f64>,
    index: HashMap<String, usize>,
}

impl FeatureVocabulary {
    pub fn new(tags: Vec<String>, idf: Vec<f64>) -> Result<Self, BaselineError> {
        if tags.len() != idf.len() {
            return Err(BaselineError::Corrupt(format!("{} tags but {} idf weights", tags.len(), idf.len())));
        }
        let mut index = HashMap::with_capacity(tags.len());
        for (i, t) in tags.iter().enumerate() {
            if !t.starts_with('/') {
                return Err(BaselineError::Corrupt(format!("tag {t:?} does not start with '/'")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(BaselineError::Corrupt(format!("duplicate tag {t}")));
            }
        }
        Ok(FeatureVocabulary { tags, idf, index })
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn position(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    /// TF-IDF vector of one file: count × idf per selected tag.
    pub fn vectorize(&self, hist: &TagHistogram) -> Vec<f64> {
        let mut v = vec![0.0; self.tags.len()];
        for (tag, &count) in hist {
            if let Some(i) = self.position(tag) {
                v[i] = count as f64 * self.idf[i];
            }
        }
        v
    }
}

/// Per-tag corpus TF-IDF mass: Σ_files count × ln(N / document frequency),
/// with the tag's idf.
pub fn tfidf_table(histograms: &[TagHistogram]) -> BTreeMap<String, (f64, f64)> {
    let n = histograms.len() as f64;
    let mut tf: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for h in histograms {
        for (tag, &count) in h {
            let e = tf.entry(tag.as_str()).or_insert((0, 0));
            e.0 += count;
            e.1 += 1;
        }
    }
    tf.into_iter()
        .map(|(tag, (total, df))| {
            let idf = (n / df as f64).ln();
            (tag.to_string(), (total as f64 * idf, idf))
        })
        .collect()
}

/// Keeps the `k` tags with the largest TF-IDF mass (ties broken by tag text).
/// Asking for more tags than exist keeps them all.
pub fn fit_vocabulary(histograms: &[TagHistogram], k: usize) -> Result<FeatureVocabulary, BaselineError> {
    if histograms.is_empty() {
        return Err(BaselineError::Empty("vocabulary corpus"));
    }
    if k == 0 {
        return Err(BaselineError::Config("k must be at least 1".into()));
    }
    let mut ranked: Vec<(String, f64, f64)> = tfidf_table(histograms)
        .into_iter()
        .map(|(t, (mass, idf))| (t, mass, idf))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    let (tags, idf) = ranked.into_iter().map(|(t, _, idf)| (t, idf)).unzip();
    FeatureVocabulary::new(tags, idf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::lex_tags;

    fn corpus() -> Vec<TagHistogram> {
        vec![
            lex_tags(b"/Type /Page /JS /JS"),
            lex_tags(b"/Type /Page /Font"),
            lex_tags(b"/Type /Font /Font /Font"),
            lex_tags(b"/Type /JavaScript"),
        ]
    }

    #[test]
    fn hand_computed_ranking() {
        // N = 4. Hand table (count, df, mass = count * ln(4/df)):
        //   /Font       4, 2, 4 ln 2 = 2.7726
        //   /JS         2, 1, 2 ln 4 = 2.7726
        //   /JavaScript 1, 1, 1 ln 4 = 1.3863
        //   /Page       2, 2, 2 ln 2 = 1.3863
        //   /Type       4, 4, 0
        let v = fit_vocabulary(&corpus(), 10).unwrap();
        assert_eq!(v.tags(), ["/Font", "/JS", "/JavaScript", "/Page", "/Type"]);
        let table = tfidf_table(&corpus());
        assert!((table["/Font"].0 - 4.0 * 2f64.ln()).abs() < 1e-12);
        assert!((table["/JS"].0 - 2.0 * 4f64.ln()).abs() < 1e-12);
        assert_eq!(table["/Type"], (0.0, 0.0));
    }

    #[test]
    fn ubiquitous_tag_ranks_last_and_k_truncates() {
        let v = fit_vocabulary(&corpus(), 2).unwrap();
        assert_eq!(v.tags(), ["/Font", "/JS"]);
        let all = fit_vocabulary(&corpus(), 100).unwrap();
        assert_eq!(all.tags().last().unwrap(), "/Type");
    }

    #[test]
    fn vectorize_uses_counts_times_idf() {
        let v = fit_vocabulary(&corpus(), 10).unwrap();
        let x = v.vectorize(&lex_tags(b"/JS /JS /JS /Unknown"));
        let js = v.position("/JS").unwrap();
        assert!((x[js] - 3.0 * 4f64.ln()).abs() < 1e-12);
        assert_eq!(x.iter().filter(|&&f| f != 0.0).count(), 1);
    }

    #[test]
    fn duplicate_tags_rejected() {
        assert!(FeatureVocabulary::new(vec!["/A".into(), "/A".into()], vec![1.0, 1.0]).is_err());
    }
}
