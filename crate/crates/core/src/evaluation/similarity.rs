use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{cosine, spearman, Embeddings};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPair {
    pub first: String,
    pub second: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<SimilarityPair>,
}

/// Parses `word1<TAB>word2<TAB>score` lines, or the same separated by commas.
/// Blank lines, `#` comments and a header line before the first pair are
/// skipped. Words are lowercased. A repeated pair (in either order) keeps its
/// first score; published sets such as WordSim353 contain a few of these.
pub fn parse_similarity<R: BufRead>(
    input: R,
    path: &Path,
    name: &str,
) -> Result<SimilarityDataset> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg,
        };
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let sep = if line.contains('\t') { '\t' } else { ',' };
        let fields: Vec<&str> = line.split(sep).map(str::trim).collect();
        if fields.len() < 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let score = match fields[2].parse::<f64>() {
            Ok(s) if s.is_finite() => s,
            Ok(_) => return Err(err("score is not finite".into())),
            Err(_) if pairs.is_empty() => continue,
            Err(_) => return Err(err(format!("invalid score {:?}", fields[2]))),
        };
        let (first, second) = (fields[0].to_lowercase(), fields[1].to_lowercase());
        if first.is_empty() || second.is_empty() {
            return Err(err("empty word".into()));
        }
        let key = if first <= second {
            (first.clone(), second.clone())
        } else {
            (second.clone(), first.clone())
        };
        if !seen.insert(key) {
            log::warn!(
                "{}:{line_no}: dropping repeated pair {first} {second}",
                path.display()
            );
            continue;
        }
        pairs.push(SimilarityPair {
            first,
            second,
            score,
        });
    }
    if pairs.is_empty() {
        return Err(Error::Data(format!(
            "{}: no similarity pairs",
            path.display()
        )));
    }
    Ok(SimilarityDataset {
        name: name.to_string(),
        pairs,
    })
}

/// Loads a dataset named after the file stem.
pub fn load_similarity(path: &Path) -> Result<SimilarityDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_similarity(BufReader::new(file), path, &name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub dataset: String,
    pub n_total: usize,
    /// Pairs with both words in the trained vocabulary.
    pub n_in_vocab: usize,
    pub rho_in_vocab: f64,
    /// All pairs, for models that embed unseen words.
    pub rho_all: Option<f64>,
    pub n_all: usize,
    /// Pairs with at least one unseen word, for models that embed them.
    pub rho_oov: Option<f64>,
    pub n_oov: usize,
}

impl SimilarityReport {
    pub const TSV_HEADER: &'static str =
        "dataset\tn_total\tn_in_vocab\trho_in_vocab\tn_all\trho_all\tn_oov\trho_oov";

    pub fn tsv_row(&self) -> String {
        let opt = |r: Option<f64>| r.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
        format!(
            "{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{}",
            self.dataset,
            self.n_total,
            self.n_in_vocab,
            self.rho_in_vocab,
            self.n_all,
            opt(self.rho_all),
            self.n_oov,
            opt(self.rho_oov)
        )
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::TSV_HEADER)?;
        writeln!(out, "{}", self.tsv_row())
    }
}

/// Cosine of two word vectors; a zero vector (possible for count-based
/// models) counts as similarity 0.
fn pair_similarity<E: Embeddings + ?Sized>(model: &E, p: &SimilarityPair) -> Option<f64> {
    let (u, v) = (model.vector(&p.first)?, model.vector(&p.second)?);
    Some(cosine(&u, &v).unwrap_or(0.0))
}

fn rho(scored: &[(f64, f64)]) -> Result<f64> {
    let (human, model): (Vec<f64>, Vec<f64>) = scored.iter().copied().unzip();
    spearman(&human, &model)
}

/// Spearman ρ between human scores and cosine similarity.
pub fn eval_similarity<E: Embeddings + ?Sized>(
    model: &E,
    dataset: &SimilarityDataset,
) -> Result<SimilarityReport> {
    let vocab = model.vocab();
    let mut in_vocab = Vec::new();
    let mut all = Vec::new();
    let mut oov = Vec::new();
    for p in &dataset.pairs {
        let known = vocab.contains(&p.first) && vocab.contains(&p.second);
        if !known && !model.embeds_unseen() {
            continue;
        }
        let Some(sim) = pair_similarity(model, p) else {
            continue;
        };
        all.push((p.score, sim));
        if known {
            in_vocab.push((p.score, sim));
        } else {
            oov.push((p.score, sim));
        }
    }
    if in_vocab.len() < 2 {
        return Err(Error::Data(format!(
            "{}: only {} in-vocabulary pairs",
            dataset.name,
            in_vocab.len()
        )));
    }
    let unseen = model.embeds_unseen();
    Ok(SimilarityReport {
        dataset: dataset.name.clone(),
        n_total: dataset.pairs.len(),
        n_in_vocab: in_vocab.len(),
        rho_in_vocab: rho(&in_vocab)?,
        rho_all: if unseen { Some(rho(&all)?) } else { None },
        n_all: if unseen { all.len() } else { 0 },
        rho_oov: if unseen && oov.len() >= 2 {
            rho(&oov).ok()
        } else {
            None
        },
        n_oov: oov.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tab_and_comma() {
        let tsv = "# c\nWord 1\tWord 2\tHuman (mean)\nTiger\tcat\t7.35\ncar\tauto\t9\n";
        let d = parse_similarity(tsv.as_bytes(), Path::new("ws.tsv"), "ws").unwrap();
        assert_eq!(d.pairs.len(), 2);
        assert_eq!(d.pairs[0].first, "tiger");
        let csv = "a,b,1.5\nb,c,2\n";
        assert_eq!(
            parse_similarity(csv.as_bytes(), Path::new("x"), "x")
                .unwrap()
                .pairs[1]
                .score,
            2.0
        );
    }

    #[test]
    fn rejects_bad_lines() {
        for (text, line) in [("a\tb\t1\nc\td\tx\n", 2), ("a\tb\n", 1)] {
            match parse_similarity(text.as_bytes(), Path::new("x"), "x") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(parse_similarity("# only\n".as_bytes(), Path::new("x"), "x").is_err());
    }

    #[test]
    fn repeated_pairs_keep_the_first_score() {
        let d = parse_similarity(
            "a\tb\t1\nb\ta\t2\nc\td\t3\n".as_bytes(),
            Path::new("x"),
            "x",
        )
        .unwrap();
        let scores: Vec<f64> = d.pairs.iter().map(|p| p.score).collect();
        assert_eq!(scores, [1.0, 3.0]);
    }
}
