//! Documents as ragged arrays of word ids, their text format, and a
//! planted-topic generator for tests and demos.

use std::fmt::Write as _;
use std::path::Path;

use crate::dist::RandomSource;
use crate::{Error, Result};

/// `M` documents over a vocabulary of `V` words. Padding documents are
/// empty and always sit at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Vec<usize>>,
    vocab: usize,
    padding: usize,
}

impl Corpus {
    pub fn new(docs: Vec<Vec<usize>>, vocab: usize) -> Result<Self> {
        for (m, doc) in docs.iter().enumerate() {
            if let Some((i, &c)) = doc.iter().enumerate().find(|(_, &c)| c >= vocab) {
                return Err(Error::Shape(format!(
                    "document {m}, position {i}: word {c} is not below vocabulary size {vocab}"
                )));
            }
        }
        Ok(Corpus {
            docs,
            vocab,
            padding: 0,
        })
    }

    /// Parses one document per line, whitespace-separated word ids, with
    /// an optional first line `#M V`. Without a header the vocabulary size
    /// is `vocab` if given, else one more than the largest id.
    pub fn parse(text: &str, vocab: Option<usize>, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().peekable();
        let mut header = None;
        if let Some((_, first)) = lines.peek() {
            if let Some(rest) = first.trim().strip_prefix('#') {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                let nums: Vec<usize> = fields
                    .iter()
                    .map(|f| f.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(1, format!("header `{first}`: {e}")))?;
                if nums.len() != 2 {
                    return Err(parse_err(1, format!("header `{first}` should be `#M V`")));
                }
                header = Some((nums[0], nums[1]));
                lines.next();
            }
        }
        let vocab = header.map(|(_, v)| v).or(vocab);

        let mut docs = Vec::new();
        for (n, line) in lines {
            let mut doc = Vec::new();
            for tok in line.split_whitespace() {
                let c: usize = tok
                    .parse()
                    .map_err(|e| parse_err(n + 1, format!("`{tok}`: {e}")))?;
                if let Some(v) = vocab {
                    if c >= v {
                        return Err(Error::WordIdOutOfRange {
                            path: path.to_path_buf(),
                            line: n + 1,
                            word: c,
                            vocab: v,
                        });
                    }
                }
                doc.push(c);
            }
            docs.push(doc);
        }
        if let Some((m, _)) = header {
            if m != docs.len() {
                return Err(parse_err(
                    1,
                    format!("header declares {m} documents, file has {}", docs.len()),
                ));
            }
        }
        let vocab = vocab.unwrap_or_else(|| docs.iter().flatten().max().map_or(0, |&c| c + 1));
        Ok(Corpus {
            docs,
            vocab,
            padding: 0,
        })
    }

    /// The text format with a `#M V` header; padding documents are left out.
    pub fn to_text(&self) -> String {
        let mut s = format!("#{} {}\n", self.real_len(), self.vocab);
        for doc in &self.docs[..self.real_len()] {
            let words: Vec<String> = doc.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(s, "{}", words.join(" "));
        }
        s
    }

    pub fn docs(&self) -> &[Vec<usize>] {
        &self.docs
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    /// Documents including padding.
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Documents excluding padding.
    pub fn real_len(&self) -> usize {
        self.docs.len() - self.padding
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.docs.iter().map(Vec::len).collect()
    }

    pub fn total_words(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Appends empty documents until the count is a multiple of `w`.
    pub fn pad_to_multiple(&self, w: usize) -> Corpus {
        let mut c = self.clone();
        while !c.docs.len().is_multiple_of(w) {
            c.docs.push(Vec::new());
            c.padding += 1;
        }
        c
    }
}

pub fn load_corpus(path: impl AsRef<Path>, vocab: Option<usize>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    Corpus::parse(&text, vocab, path)
}

/// Word range `[lo, hi)` owned by `topic` when `v` words are split into
/// `k` contiguous slices.
pub fn topic_slice(topic: usize, k: usize, v: usize) -> (usize, usize) {
    (topic * v / k, (topic + 1) * v / k)
}

/// `m` documents of `doc_len` words. Each document gets a planted topic
/// uniformly at random. Each word comes from that topic's vocabulary
/// slice, except that with probability `noise` it is uniform over the
/// whole vocabulary. Returns the corpus and the planted topics.
pub fn generate_planted_corpus<R: RandomSource + ?Sized>(
    k: usize,
    v: usize,
    m: usize,
    doc_len: usize,
    noise: f64,
    rng: &mut R,
) -> Result<(Corpus, Vec<usize>)> {
    if k == 0 || v < k {
        return Err(Error::Config(format!(
            "planted corpus needs 1 <= K <= V, got K={k} V={v}"
        )));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Config(format!("noise {noise} is not a probability")));
    }
    let mut planted = Vec::with_capacity(m);
    let mut docs = Vec::with_capacity(m);
    for _ in 0..m {
        let t = rng.next_index(k);
        let (lo, hi) = topic_slice(t, k, v);
        let doc = (0..doc_len)
            .map(|_| {
                if rng.next_unit() < noise {
                    rng.next_index(v)
                } else {
                    lo + rng.next_index(hi - lo)
                }
            })
            .collect();
        planted.push(t);
        docs.push(doc);
    }
    Ok((Corpus::new(docs, v)?, planted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::SeededRng;
    use rand::SeedableRng;

    fn parse(text: &str, v: Option<usize>) -> Result<Corpus> {
        Corpus::parse(text, v, Path::new("mem"))
    }

    #[test]
    fn parses_documents() {
        let c = parse("0 1 2\n3 3\n", Some(4)).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.lengths(), vec![3, 2]);
        assert_eq!(c.docs()[1], vec![3, 3]);
        let c = parse("0 1\n\n2\n", None).unwrap();
        assert_eq!(c.lengths(), vec![2, 0, 1]);
        assert_eq!(c.vocab(), 3);
    }

    #[test]
    fn header_sets_counts() {
        let c = parse("#3 10\n1\n\n9 9\n", None).unwrap();
        assert_eq!(c.vocab(), 10);
        assert_eq!(c.lengths(), vec![1, 0, 2]);
        assert!(matches!(
            parse("#2 10\n1\n", None),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("#2\n1\n", None),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_bad_tokens() {
        assert!(matches!(
            parse("0 1\n4 0\n", Some(4)),
            Err(Error::WordIdOutOfRange {
                line: 2,
                word: 4,
                vocab: 4,
                ..
            })
        ));
        assert!(matches!(
            parse("0 x\n", None),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("0 -1\n", None),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let c = parse("#3 5\n0 4\n\n2 2 1\n", None).unwrap();
        assert_eq!(parse(&c.to_text(), None).unwrap(), c);
    }

    #[test]
    fn padding_appends_empty_documents() {
        let c = parse("0\n1\n2\n", None).unwrap().pad_to_multiple(4);
        assert_eq!(c.len(), 4);
        assert_eq!(c.real_len(), 3);
        assert_eq!(c.padding(), 1);
        assert!(c.docs()[3].is_empty());
        assert_eq!(c.pad_to_multiple(4), c);
        assert!(!c.to_text().contains("\n\n"));
    }

    #[test]
    fn planted_corpus_stays_in_slices() {
        let mut rng = SeededRng::seed_from_u64(4);
        let (c, planted) = generate_planted_corpus(4, 40, 64, 50, 0.0, &mut rng).unwrap();
        assert_eq!(c.len(), 64);
        for (doc, &t) in c.docs().iter().zip(&planted) {
            let (lo, hi) = topic_slice(t, 4, 40);
            assert_eq!(doc.len(), 50);
            assert!(doc.iter().all(|&w| (lo..hi).contains(&w)));
        }
        let (c, planted) = generate_planted_corpus(4, 40, 64, 50, 0.05, &mut rng).unwrap();
        let inside: usize = c
            .docs()
            .iter()
            .zip(&planted)
            .map(|(doc, &t)| {
                let (lo, hi) = topic_slice(t, 4, 40);
                doc.iter().filter(|&&w| (lo..hi).contains(&w)).count()
            })
            .sum();
        assert!(inside as f64 / c.total_words() as f64 > 0.93);
        let (_, planted) = generate_planted_corpus(1, 5, 10, 3, 0.05, &mut rng).unwrap();
        assert!(planted.iter().all(|&t| t == 0));
        assert!(generate_planted_corpus(5, 4, 1, 1, 0.0, &mut rng).is_err());
    }
}
