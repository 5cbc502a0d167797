use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{normalize_rows, Embeddings};
use crate::error::{Error, Result};
use crate::numerics::{dot, norm, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectionKind {
    Semantic,
    Syntactic,
}

impl SectionKind {
    pub fn name(self) -> &'static str {
        match self {
            SectionKind::Semantic => "semantic",
            SectionKind::Syntactic => "syntactic",
        }
    }
}

/// The conventional split of the public analogy set: `gram*` sections are
/// syntactic, the rest semantic.
pub fn default_section_kind(name: &str) -> SectionKind {
    if name.starts_with("gram") {
        SectionKind::Syntactic
    } else {
        SectionKind::Semantic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub kind: SectionKind,
}

/// `a : b :: c : d`, lowercased.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyQuestion {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
    /// Index into [`AnalogyDataset::sections`].
    pub section: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyDataset {
    pub sections: Vec<Section>,
    pub questions: Vec<AnalogyQuestion>,
}

/// Parses `: section` headers followed by lines of four words. Section kinds
/// come from `kinds` when given (every section must be listed), otherwise
/// from [`default_section_kind`].
pub fn parse_analogies<R: BufRead>(
    input: R,
    path: &Path,
    kinds: Option<&HashMap<String, SectionKind>>,
) -> Result<AnalogyDataset> {
    let mut sections: Vec<Section> = Vec::new();
    let mut questions = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg,
        };
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix(':') {
            let name = name.trim().to_string();
            if name.is_empty() {
                return Err(err("empty section name".into()));
            }
            let kind = match kinds {
                Some(map) => *map
                    .get(&name)
                    .ok_or_else(|| err(format!("section {name:?} missing from the section map")))?,
                None => default_section_kind(&name),
            };
            sections.push(Section { name, kind });
            continue;
        }
        if sections.is_empty() {
            return Err(err("question before the first `: section` header".into()));
        }
        let words: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
        let [a, b, c, d]: [String; 4] = words
            .try_into()
            .map_err(|w: Vec<String>| err(format!("expected 4 words, found {}", w.len())))?;
        questions.push(AnalogyQuestion {
            a,
            b,
            c,
            d,
            section: sections.len() - 1,
        });
    }
    if questions.is_empty() {
        return Err(Error::Data(format!(
            "{}: no analogy questions",
            path.display()
        )));
    }
    Ok(AnalogyDataset {
        sections,
        questions,
    })
}

pub fn load_analogies(
    path: &Path,
    kinds: Option<&HashMap<String, SectionKind>>,
) -> Result<AnalogyDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_analogies(BufReader::new(file), path, kinds)
}

/// Section map lines: `section<TAB>semantic|syntactic`, `#` comments allowed.
pub fn parse_sidecar<R: BufRead>(input: R, path: &Path) -> Result<HashMap<String, SectionKind>> {
    let mut map = HashMap::new();
    for (idx, line) in input.lines().enumerate() {
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(name), Some(kind), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err("expected `section<TAB>semantic|syntactic`".into()));
        };
        let kind = match kind {
            "semantic" => SectionKind::Semantic,
            "syntactic" => SectionKind::Syntactic,
            other => return Err(err(format!("unknown section kind {other:?}"))),
        };
        if map.insert(name.to_string(), kind).is_some() {
            return Err(err(format!("section {name:?} listed twice")));
        }
    }
    Ok(map)
}

pub fn load_sidecar(path: &Path) -> Result<HashMap<String, SectionKind>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_sidecar(BufReader::new(file), path)
}

/// Unit-length vocabulary vectors plus the vocabulary lookup.
pub(crate) struct NormalizedVocab<'a, E: Embeddings + ?Sized> {
    pub model: &'a E,
    pub unit: Matrix,
}

impl<'a, E: Embeddings + ?Sized> NormalizedVocab<'a, E> {
    pub fn new(model: &'a E) -> Self {
        NormalizedVocab {
            model,
            unit: normalize_rows(model.vocab_matrix()),
        }
    }

    /// Unit vector for any embeddable word; `None` when the model cannot
    /// embed it or its vector is zero.
    pub fn unit_vector(&self, word: &str) -> Option<Vec<f64>> {
        if let Some(id) = self.model.vocab().id(word) {
            let row = self.unit.row(id as usize);
            return (norm(row) > 0.0).then(|| row.to_vec());
        }
        let mut v = self.model.vector(word)?;
        let n = norm(&v);
        if n == 0.0 {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= n);
        Some(v)
    }

    /// Vocabulary id maximizing `unit · query`, skipping `exclude`. Ties go to
    /// the lowest id.
    pub fn best_match(&self, query: &[f64], exclude: &[&str]) -> Option<u32> {
        let vocab = self.model.vocab();
        let skip: Vec<u32> = exclude.iter().filter_map(|w| vocab.id(w)).collect();
        let mut best: Option<(u32, f64)> = None;
        for id in 0..vocab.len() as u32 {
            if skip.contains(&id) {
                continue;
            }
            let score = dot(self.unit.row(id as usize), query);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((id, score));
            }
        }
        best.map(|b| b.0)
    }

    fn answer(&self, a: &str, b: &str, c: &str) -> Option<u32> {
        let (ua, ub, uc) = (
            self.unit_vector(a)?,
            self.unit_vector(b)?,
            self.unit_vector(c)?,
        );
        let query: Vec<f64> = ua
            .iter()
            .zip(&ub)
            .zip(&uc)
            .map(|((x, y), z)| y - x + z)
            .collect();
        self.best_match(&query, &[a, b, c])
    }
}

/// 3CosAdd over unit vectors: the vocabulary word closest in cosine to
/// `b̂ − â + ĉ`, excluding `a`, `b` and `c`. `None` when a query word cannot
/// be embedded.
pub fn answer_analogy<E: Embeddings + ?Sized>(
    model: &E,
    a: &str,
    b: &str,
    c: &str,
) -> Option<String> {
    let index = NormalizedVocab::new(model);
    index
        .answer(a, b, c)
        .map(|id| model.vocab().word(id).to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionScore {
    pub name: String,
    pub correct: usize,
    pub total: usize,
    /// Questions with an unembeddable query word, counted as wrong.
    pub skipped: usize,
}

impl SectionScore {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{:.6}",
            self.name,
            self.correct,
            self.total,
            self.skipped,
            self.accuracy()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyReport {
    pub all: SectionScore,
    /// Absent when the dataset has no question of that kind.
    pub semantic: Option<SectionScore>,
    pub syntactic: Option<SectionScore>,
    pub sections: Vec<SectionScore>,
}

impl AnalogyReport {
    /// TSV `scope\tcorrect\ttotal\tskipped\taccuracy`: the overall and per-kind
    /// scopes, then one `section:<name>` row per section.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scope\tcorrect\ttotal\tskipped\taccuracy")?;
        writeln!(out, "{}", self.all.tsv_row())?;
        for s in [&self.semantic, &self.syntactic].into_iter().flatten() {
            writeln!(out, "{}", s.tsv_row())?;
        }
        for s in &self.sections {
            let row = SectionScore {
                name: format!("section:{}", s.name),
                ..s.clone()
            };
            writeln!(out, "{}", row.tsv_row())?;
        }
        Ok(())
    }
}

/// Exact-match accuracy overall, per kind and per section.
pub fn eval_analogy<E: Embeddings + ?Sized>(
    model: &E,
    dataset: &AnalogyDataset,
) -> Result<AnalogyReport> {
    if dataset.questions.is_empty() {
        return Err(Error::Data("no analogy questions".into()));
    }
    let index = NormalizedVocab::new(model);
    let vocab = model.vocab();
    // (correct, skipped) per question, in dataset order.
    let outcomes: Vec<(bool, bool)> = dataset
        .questions
        .par_iter()
        .map(|q| match index.answer(&q.a, &q.b, &q.c) {
            Some(id) => (vocab.word(id) == q.d, false),
            None => (false, true),
        })
        .collect();

    let score = |name: &str, pick: &dyn Fn(&AnalogyQuestion) -> bool| -> Option<SectionScore> {
        let mut s = SectionScore {
            name: name.to_string(),
            correct: 0,
            total: 0,
            skipped: 0,
        };
        for (q, &(ok, skipped)) in dataset.questions.iter().zip(&outcomes) {
            if pick(q) {
                s.total += 1;
                s.correct += ok as usize;
                s.skipped += skipped as usize;
            }
        }
        (s.total > 0).then_some(s)
    };
    let kind_of = |q: &AnalogyQuestion| dataset.sections[q.section].kind;
    Ok(AnalogyReport {
        all: score("all", &|_| true).expect("non-empty"),
        semantic: score("semantic", &|q| kind_of(q) == SectionKind::Semantic),
        syntactic: score("syntactic", &|q| kind_of(q) == SectionKind::Syntactic),
        sections: dataset
            .sections
            .iter()
            .enumerate()
            .filter_map(|(i, sec)| score(&sec.name, &|q| q.section == i))
            .collect(),
    })
}
