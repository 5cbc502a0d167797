//! Morpheme-boundary ranking and its evaluation by mean average precision.
//!
//! Boundary `i` of an `n`-character word is the split between characters `i`
//! and `i + 1`, so the internal boundaries are `1..n`. The attention weight of
//! split state `i` scores boundary `i`; the outer splits `0` and `n` are never
//! ranked.

pub mod porter;

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedder::Model;
use crate::error::{Error, Result};

/// Number of seeds averaged for the randomized baselines.
pub const BASELINE_SEEDS: u64 = 100;

/// Gold surface segmentation of one word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSegmentation {
    pub word: String,
    /// Internal boundaries, each in `1..n`.
    pub boundaries: BTreeSet<usize>,
}

impl GoldSegmentation {
    /// Boundaries from consecutive segments, which must be non-empty.
    pub fn from_segments<S: AsRef<str>>(segments: &[S]) -> Result<Self> {
        let mut word = String::new();
        let mut boundaries = BTreeSet::new();
        let mut pos = 0;
        for (i, seg) in segments.iter().enumerate() {
            let seg = seg.as_ref();
            if seg.is_empty() {
                return Err(Error::Malformed(format!("segment {} is empty", i + 1)));
            }
            if i > 0 {
                boundaries.insert(pos);
            }
            pos += seg.chars().count();
            word.push_str(seg);
        }
        if word.is_empty() {
            return Err(Error::Malformed("no segments".into()));
        }
        Ok(GoldSegmentation { word, boundaries })
    }

    pub fn char_len(&self) -> usize {
        self.word.chars().count()
    }

    /// At least three morphemes.
    pub fn is_rich(&self) -> bool {
        self.boundaries.len() >= 2
    }
}

/// Parses `word<TAB>seg|seg|…` lines; blank lines and `#` comments are skipped.
pub fn parse_gold<R: BufRead>(input: R, path: &Path) -> Result<Vec<GoldSegmentation>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg,
        };
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, segs) = line
            .split_once('\t')
            .ok_or_else(|| err("expected word<TAB>seg|seg|…".into()))?;
        let segments: Vec<&str> = segs.split('|').collect();
        let gold = GoldSegmentation::from_segments(&segments).map_err(|e| err(e.to_string()))?;
        if gold.word != word {
            return Err(err(format!(
                "segments concatenate to {:?}, not {word:?}",
                gold.word
            )));
        }
        if !seen.insert(gold.word.clone()) {
            return Err(err(format!("duplicate word {word:?}")));
        }
        out.push(gold);
    }
    Ok(out)
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldSegmentation>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_gold(BufReader::new(file), path)
}

/// Internal boundaries of a word ordered by descending score.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRanking {
    pub word: String,
    /// `(position, score)` for every position in `1..n`.
    pub entries: Vec<(usize, f64)>,
}

impl BoundaryRanking {
    /// Tie-break rule applied by [`BoundaryRanking::from_scores`].
    pub const TIE_BREAK: &'static str = "leftmost-first";

    /// `scores[i - 1]` scores boundary `i`. Equal scores keep the leftmost
    /// position first.
    pub fn from_scores(word: &str, scores: &[f64]) -> Result<Self> {
        let n = word.chars().count();
        if n < 2 {
            return Err(Error::Data(format!("{word:?} has no internal boundary")));
        }
        if scores.len() != n - 1 {
            return Err(Error::shape("boundary scores", n - 1, scores.len()));
        }
        let mut entries: Vec<(usize, f64)> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| (i + 1, s))
            .collect();
        // Stable sort keeps increasing positions among equal scores.
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(BoundaryRanking {
            word: word.to_string(),
            entries,
        })
    }

    /// Ranking that follows `order` exactly, scored `B, B−1, …, 1`.
    pub fn from_order(word: &str, order: &[usize]) -> Self {
        let b = order.len();
        BoundaryRanking {
            word: word.to_string(),
            entries: order
                .iter()
                .enumerate()
                .map(|(r, &p)| (p, (b - r) as f64))
                .collect(),
        }
    }

    pub fn positions(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    /// Word split at the top-ranked boundary, e.g. `carry|ing`.
    pub fn top_split(&self) -> String {
        let top = self.entries[0].0;
        let head: String = self.word.chars().take(top).collect();
        let tail: String = self.word.chars().skip(top).collect();
        format!("{head}|{tail}")
    }
}

/// Attention weights of a split-attention model as boundary scores.
pub fn boundary_weights(model: &Model, word: &str) -> Result<BoundaryRanking> {
    let n = word.chars().count();
    if n < 2 {
        return Err(Error::Data(format!("{word:?} has no internal boundary")));
    }
    let attended = model.attend_word(word)?;
    BoundaryRanking::from_scores(word, &attended.weights[1..n])
}

/// Average precision of `ranking` with the gold boundaries as relevant set.
pub fn average_precision(ranking: &BoundaryRanking, gold: &GoldSegmentation) -> Result<f64> {
    let n = ranking.word.chars().count();
    if gold.boundaries.is_empty() {
        return Err(Error::Data(format!("{:?} has no gold boundary", gold.word)));
    }
    if let Some(&bad) = gold.boundaries.iter().find(|&&b| b == 0 || b >= n) {
        return Err(Error::Data(format!(
            "gold boundary {bad} outside 1..{} for {:?}",
            n.saturating_sub(1),
            gold.word
        )));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, (pos, _)) in ranking.entries.iter().enumerate() {
        if gold.boundaries.contains(pos) {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
            if hits == gold.boundaries.len() {
                break;
            }
        }
    }
    Ok(sum / gold.boundaries.len() as f64)
}

/// Mean AP over a set of words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScopeScore {
    pub map: f64,
    pub n_words: usize,
}

/// MAP over all scorable words and over words with at least three morphemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapReport {
    pub all: ScopeScore,
    /// Absent when no word has two or more gold boundaries.
    pub rich: Option<ScopeScore>,
}

impl MapReport {
    /// TSV with header `scope\tmap\tn_words`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scope\tmap\tn_words")?;
        writeln!(out, "all\t{:.6}\t{}", self.all.map, self.all.n_words)?;
        if let Some(rich) = self.rich {
            writeln!(out, "rich\t{:.6}\t{}", rich.map, rich.n_words)?;
        }
        Ok(())
    }
}

fn scorable(lexicon: &[GoldSegmentation]) -> Vec<&GoldSegmentation> {
    lexicon
        .iter()
        .filter(|g| !g.boundaries.is_empty() && g.char_len() >= 2)
        .collect()
}

fn summarize(scored: &[(bool, f64)]) -> Result<MapReport> {
    if scored.is_empty() {
        return Err(Error::Data("no word with an internal gold boundary".into()));
    }
    let mean = |it: &mut dyn Iterator<Item = f64>| {
        let (sum, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        (n > 0).then(|| ScopeScore {
            map: sum / n as f64,
            n_words: n,
        })
    };
    Ok(MapReport {
        all: mean(&mut scored.iter().map(|s| s.1)).expect("non-empty"),
        rich: mean(&mut scored.iter().filter(|s| s.0).map(|s| s.1)),
    })
}

/// MAP of `ranker` over the lexicon. Words without gold boundaries are
/// skipped. Words are ranked in parallel and averaged in lexicon order.
pub fn map_score<F>(ranker: F, lexicon: &[GoldSegmentation]) -> Result<MapReport>
where
    F: Fn(&str) -> Result<BoundaryRanking> + Sync,
{
    let scored = scorable(lexicon)
        .par_iter()
        .map(|g| Ok((g.is_rich(), average_precision(&ranker(&g.word)?, g)?)))
        .collect::<Result<Vec<_>>>()?;
    summarize(&scored)
}

/// Stable 64-bit FNV-1a, used to give each word its own random stream.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn word_rng(word: &str, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(fnv1a(word) ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Uniformly random order of the internal boundaries, fixed by `(word, seed)`.
pub fn random_ranker(word: &str, seed: u64) -> Result<BoundaryRanking> {
    let n = word.chars().count();
    if n < 2 {
        return Err(Error::Data(format!("{word:?} has no internal boundary")));
    }
    let mut order: Vec<usize> = (1..n).collect();
    order.shuffle(&mut word_rng(word, seed));
    Ok(BoundaryRanking::from_order(word, &order))
}

/// Boundary at the end of the Porter stem, mapped back onto the word. The
/// stemmer only rewrites the final stem letter `y → i` or appends `e`, so the
/// boundary is the common prefix length, extended over a `y → i` rewrite.
pub fn stem_boundary(word: &str, stem: &str) -> usize {
    let w: Vec<char> = word.chars().collect();
    let s: Vec<char> = stem.chars().collect();
    let lcp = w.iter().zip(&s).take_while(|(a, b)| a == b).count();
    if lcp + 1 == s.len() && s[lcp] == 'i' && w.get(lcp) == Some(&'y') {
        lcp + 1
    } else {
        lcp
    }
}

/// Porter stem boundary first (when it is internal), the rest in random order.
pub fn porter_ranker(word: &str, seed: u64) -> Result<BoundaryRanking> {
    let n = word.chars().count();
    if n < 2 {
        return Err(Error::Data(format!("{word:?} has no internal boundary")));
    }
    let b = stem_boundary(word, &porter::stem(word));
    let mut rest: Vec<usize> = (1..n).filter(|&p| p != b).collect();
    rest.shuffle(&mut word_rng(word, seed));
    let mut order = Vec::with_capacity(n - 1);
    if (1..n).contains(&b) {
        order.push(b);
    }
    order.extend(rest);
    Ok(BoundaryRanking::from_order(word, &order))
}

/// Mean and sample standard deviation of a randomized baseline's MAP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadScore {
    pub mean: f64,
    pub std: f64,
    pub n_words: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineReport {
    pub all: SpreadScore,
    pub rich: Option<SpreadScore>,
}

/// MAP of a seeded ranker over seeds `0..seeds`.
pub fn baseline_map<F>(
    ranker: F,
    lexicon: &[GoldSegmentation],
    seeds: u64,
) -> Result<BaselineReport>
where
    F: Fn(&str, u64) -> Result<BoundaryRanking> + Sync,
{
    if seeds == 0 {
        return Err(Error::Config("baseline needs at least one seed".into()));
    }
    let runs = (0..seeds)
        .map(|seed| map_score(|w| ranker(w, seed), lexicon))
        .collect::<Result<Vec<_>>>()?;
    let spread = |xs: Vec<ScopeScore>| -> Option<SpreadScore> {
        let n_words = xs.first()?.n_words;
        let k = xs.len() as f64;
        let mean = xs.iter().map(|s| s.map).sum::<f64>() / k;
        let var = if xs.len() > 1 {
            xs.iter().map(|s| (s.map - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Some(SpreadScore {
            mean,
            std: var.sqrt(),
            n_words,
        })
    };
    Ok(BaselineReport {
        all: spread(runs.iter().map(|r| r.all).collect()).expect("at least one seed"),
        rich: spread(runs.iter().filter_map(|r| r.rich).collect()),
    })
}

/// Exact expected AP of a uniformly random ranking of `b` boundaries with `g`
/// of them gold. The rank-`r` item is gold with probability `g/b`, and given
/// that, the expected number of gold items in the top `r` is
/// `1 + (r−1)(g−1)/(b−1)`.
pub fn expected_random_ap(g: usize, b: usize) -> f64 {
    assert!(g >= 1 && g <= b, "need 1 <= g <= b");
    if b == 1 {
        return 1.0;
    }
    let (gf, bf) = (g as f64, b as f64);
    (1..=b)
        .map(|r| {
            let r = r as f64;
            (gf / bf) * (1.0 + (r - 1.0) * (gf - 1.0) / (bf - 1.0)) / r
        })
        .sum::<f64>()
        / gf
}

/// Expected random-baseline MAP of a lexicon.
pub fn expected_random_map(lexicon: &[GoldSegmentation]) -> Result<MapReport> {
    let scored: Vec<(bool, f64)> = scorable(lexicon)
        .iter()
        .map(|g| {
            (
                g.is_rich(),
                expected_random_ap(g.boundaries.len(), g.char_len() - 1),
            )
        })
        .collect();
    summarize(&scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold(segs: &[&str]) -> GoldSegmentation {
        GoldSegmentation::from_segments(segs).unwrap()
    }

    #[test]
    fn segments_to_boundaries() {
        assert_eq!(gold(&["carry", "ing"]).boundaries, BTreeSet::from([5]));
        assert_eq!(gold(&["lenin", "ism"]).boundaries, BTreeSet::from([5]));
        assert_eq!(gold(&["a", "b", "c"]).boundaries, BTreeSet::from([1, 2]));
        assert!(gold(&["word"]).boundaries.is_empty());
        assert!(GoldSegmentation::from_segments(&["a", ""]).is_err());
    }

    #[test]
    fn gold_file_parsing() {
        let text = "# comment\ncarrying\tcarry|ing\n\nabc\ta|b|c\n";
        let lex = parse_gold(text.as_bytes(), Path::new("g.tsv")).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex[1].boundaries, BTreeSet::from([1, 2]));

        for (bad, line) in [
            ("ok\to|k\nabc\tab|d\n", 2),
            ("ab\ta|b\nab\ta|b\n", 2),
            ("x\tx\nab\ta||b\n", 2),
            ("nonsense\n", 1),
        ] {
            match parse_gold(bad.as_bytes(), Path::new("g.tsv")) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{bad:?}"),
                other => panic!("{bad:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn ranking_from_scores() {
        // Weights over splits 0..=3 of a 3-character word.
        let alpha = [0.1, 0.2, 0.6, 0.1];
        let r = BoundaryRanking::from_scores("abc", &alpha[1..3]).unwrap();
        assert_eq!(r.positions(), vec![2, 1]);
        assert_eq!(r.entries[0].1, 0.6);
        assert_eq!(r.entries[1].1, 0.2);

        let flat = BoundaryRanking::from_scores("abcde", &[0.25; 4]).unwrap();
        assert_eq!(flat.positions(), vec![1, 2, 3, 4]);
        assert_eq!(
            BoundaryRanking::from_scores("ab", &[0.3])
                .unwrap()
                .positions(),
            vec![1]
        );
        assert!(BoundaryRanking::from_scores("a", &[]).is_err());
        assert_eq!(
            BoundaryRanking::from_order("carrying", &[5, 1]).top_split(),
            "carry|ing"
        );
    }

    #[test]
    fn ap_examples() {
        let g = gold(&["ab", "cde"]);
        let first = BoundaryRanking::from_order("abcde", &[2, 1, 3, 4]);
        assert_eq!(average_precision(&first, &g).unwrap(), 1.0);
        let second = BoundaryRanking::from_order("abcde", &[1, 2, 3, 4]);
        assert_eq!(average_precision(&second, &g).unwrap(), 0.5);

        let g2 = gold(&["a", "bc", "de"]);
        let r = BoundaryRanking::from_order("abcde", &[1, 2, 3, 4]);
        assert!((average_precision(&r, &g2).unwrap() - 5.0 / 6.0).abs() < 1e-15);

        assert!(average_precision(&r, &gold(&["abcde"])).is_err());
        let mismatched = GoldSegmentation {
            word: "abcde".into(),
            boundaries: BTreeSet::from([5]),
        };
        assert!(average_precision(&r, &mismatched).is_err());
    }

    #[test]
    fn map_examples() {
        let lex = vec![gold(&["ab", "c"]), gold(&["x", "yz"]), gold(&["mono"])];
        let perfect = |w: &str| {
            let g = lex.iter().find(|g| g.word == w).unwrap();
            let mut order: Vec<usize> = g.boundaries.iter().copied().collect();
            order.extend((1..g.char_len()).filter(|p| !g.boundaries.contains(p)));
            Ok(BoundaryRanking::from_order(w, &order))
        };
        let rep = map_score(perfect, &lex).unwrap();
        assert_eq!(
            rep.all,
            ScopeScore {
                map: 1.0,
                n_words: 2
            }
        );
        assert!(rep.rich.is_none());

        let left = |w: &str| BoundaryRanking::from_scores(w, &vec![0.0; w.len() - 1]);
        // "abc" gold {2}: AP 0.5; "xyz" gold {1}: AP 1.0.
        assert_eq!(map_score(left, &lex).unwrap().all.map, 0.75);
        assert!(map_score(left, &[gold(&["mono"])]).is_err());

        let mut tsv = Vec::new();
        rep.write_tsv(&mut tsv).unwrap();
        assert_eq!(
            String::from_utf8(tsv).unwrap(),
            "scope\tmap\tn_words\nall\t1.000000\t2\n"
        );
    }

    #[test]
    fn random_ranker_contract() {
        let r = random_ranker("ab", 3).unwrap();
        assert_eq!(r.positions(), vec![1]);
        assert_eq!(average_precision(&r, &gold(&["a", "b"])).unwrap(), 1.0);
        assert_eq!(
            random_ranker("morphology", 5).unwrap(),
            random_ranker("morphology", 5).unwrap()
        );
        let mut p = random_ranker("morphology", 5).unwrap().positions();
        p.sort_unstable();
        assert_eq!(p, (1..10).collect::<Vec<_>>());
        assert!(random_ranker("a", 0).is_err());
    }

    #[test]
    fn expected_ap_closed_form() {
        let b4 = (1.0 + 0.5 + 1.0 / 3.0 + 0.25) / 4.0;
        assert!((expected_random_ap(1, 4) - b4).abs() < 1e-15);
        assert!((expected_random_ap(1, 4) - 0.5208).abs() < 1e-4);
        assert_eq!(expected_random_ap(3, 3), 1.0);
        assert_eq!(expected_random_ap(1, 1), 1.0);
    }

    #[test]
    fn porter_ranker_puts_stem_first() {
        assert_eq!(porter::stem("carrying"), "carri");
        assert_eq!(stem_boundary("carrying", "carri"), 5);
        assert_eq!(stem_boundary("hoping", "hope"), 3);
        assert_eq!(stem_boundary("generalizations", "gener"), 5);
        for seed in 0..10 {
            assert_eq!(porter_ranker("carrying", seed).unwrap().entries[0].0, 5);
        }
        // A word that is its own stem falls back to a random order.
        assert_eq!(porter::stem("sing"), "sing");
        let mut p = porter_ranker("sing", 1).unwrap().positions();
        p.sort_unstable();
        assert_eq!(p, vec![1, 2, 3]);
    }
}
