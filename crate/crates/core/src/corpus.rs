//! Sparse multi-class text data: ingestion, corpus statistics and class
//! mega-document profiles.
//!
//! Input lines follow the LibSVM multi-class layout
//!
//! ```text
//! # comment
//! 2 1:3 7:1
//! 1 5:2 5:3      # duplicate term ids are summed
//! ```
//!
//! Inverse document frequency is `ln(m / df_t)` (natural log, unsmoothed).
//! Documents are vectorized as tf-idf weights `x_t * I_t`, L2-normalized, and a
//! class centroid is the unnormalized mean of its members' normalized vectors.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::exec::{self, Execution};
use crate::{ClassId, Error, Result, TermId};

/// A labeled sparse term-frequency vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDoc {
    pub id: usize,
    /// `0` for unlabeled documents.
    pub label: ClassId,
    /// Strictly increasing term ids with positive counts.
    pub terms: Vec<(TermId, f64)>,
}

impl SparseDoc {
    /// Builds a document from unsorted entries, merging duplicate term ids and
    /// dropping zero counts.
    pub fn new(id: usize, label: ClassId, mut terms: Vec<(TermId, f64)>) -> Self {
        terms.sort_by_key(|&(t, _)| t);
        let mut merged: Vec<(TermId, f64)> = Vec::with_capacity(terms.len());
        for (t, c) in terms {
            match merged.last_mut() {
                Some((last, acc)) if *last == t => *acc += c,
                _ => merged.push((t, c)),
            }
        }
        merged.retain(|&(_, c)| c > 0.0);
        SparseDoc {
            id,
            label,
            terms: merged,
        }
    }

    /// Total term count `len(x)`.
    pub fn len(&self) -> f64 {
        self.terms.iter().map(|&(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn count(&self, term: TermId) -> f64 {
        self.terms
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.terms[i].1)
            .unwrap_or(0.0)
    }
}

/// Whether every line must carry a class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelPolicy {
    /// Labels `>= 1` are mandatory; documents without terms are dropped.
    Required,
    /// Labels may be `0` or absent; every data line yields a document.
    Optional,
}

/// A parsed data file.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub docs: Vec<SparseDoc>,
    /// Largest label seen.
    pub num_classes: ClassId,
    /// Largest term id plus one.
    pub vocab_size: usize,
    /// Labeled lines dropped because they had no positive counts.
    pub dropped_empty: usize,
}

/// Loads a labeled training file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    load_with_policy(path, LabelPolicy::Required)
}

pub fn load_with_policy(path: impl AsRef<Path>, policy: LabelPolicy) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), policy).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_corpus<R: BufRead>(reader: R, policy: LabelPolicy) -> Result<Corpus> {
    let mut docs = Vec::new();
    let mut num_classes = 0;
    let mut vocab_size = 0;
    let mut dropped_empty = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace().peekable();
        let Some(&first) = tokens.peek() else {
            continue;
        };
        let label = if first.contains(':') {
            if policy == LabelPolicy::Required {
                return Err(Error::parse(lineno, "missing class label"));
            }
            0
        } else {
            tokens.next();
            parse_label(first, lineno, policy)?
        };
        let mut terms = Vec::new();
        for tok in tokens {
            let (tid, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, format!("expected <term>:<count>, got {tok:?}")))?;
            let tid: TermId = tid
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad term id {tid:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad count {val:?}")))?;
            if !val.is_finite() || val < 0.0 {
                return Err(Error::parse(lineno, format!("count must be finite and >= 0, got {val}")));
            }
            vocab_size = vocab_size.max(tid as usize + 1);
            terms.push((tid, val));
        }
        let doc = SparseDoc::new(docs.len(), label, terms);
        if doc.is_empty() && policy == LabelPolicy::Required {
            dropped_empty += 1;
            continue;
        }
        num_classes = num_classes.max(label);
        docs.push(doc);
    }
    if docs.is_empty() && policy == LabelPolicy::Required {
        return Err(Error::EmptyCorpus);
    }
    Ok(Corpus {
        docs,
        num_classes,
        vocab_size,
        dropped_empty,
    })
}

fn parse_label(tok: &str, line: usize, policy: LabelPolicy) -> Result<ClassId> {
    let label: i64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("bad label {tok:?}")))?;
    let min = match policy {
        LabelPolicy::Required => 1,
        LabelPolicy::Optional => 0,
    };
    if label < min || label > ClassId::MAX as i64 {
        return Err(Error::InvalidLabel { line, label });
    }
    Ok(label as ClassId)
}

/// Writes documents in the format read by [`load_corpus`]. Counts use the
/// shortest representation that parses back to the same value.
pub fn write_corpus<W: Write>(mut out: W, docs: &[SparseDoc]) -> std::io::Result<()> {
    for doc in docs {
        write!(out, "{}", doc.label)?;
        for &(t, c) in &doc.terms {
            write!(out, " {t}:{c}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Corpus-level term statistics, stored densely by term id.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub num_docs: usize,
    pub num_classes: ClassId,
    /// `F_t`: total count of term t over the corpus.
    pub term_freq: Vec<f64>,
    pub doc_freq: Vec<u32>,
    /// `I_t = ln(m / df_t)`, `0` for absent terms.
    pub idf: Vec<f64>,
    /// `l_S = sum_t F_t`.
    pub total_terms: f64,
}

impl CorpusStats {
    pub fn vocab_size(&self) -> usize {
        self.term_freq.len()
    }

    pub fn term_freq(&self, t: TermId) -> f64 {
        self.term_freq.get(t as usize).copied().unwrap_or(0.0)
    }

    pub fn doc_freq(&self, t: TermId) -> u32 {
        self.doc_freq.get(t as usize).copied().unwrap_or(0)
    }

    pub fn idf(&self, t: TermId) -> f64 {
        self.idf.get(t as usize).copied().unwrap_or(0.0)
    }
}

pub fn compute_stats(docs: &[SparseDoc]) -> Result<CorpusStats> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocab = docs
        .iter()
        .filter_map(|d| d.terms.last())
        .map(|&(t, _)| t as usize + 1)
        .max()
        .unwrap_or(0);
    let mut term_freq = vec![0.0; vocab];
    let mut doc_freq = vec![0u32; vocab];
    for doc in docs {
        for &(t, c) in &doc.terms {
            term_freq[t as usize] += c;
            doc_freq[t as usize] += 1;
        }
    }
    let m = docs.len() as f64;
    let idf = doc_freq
        .iter()
        .map(|&df| if df == 0 { 0.0 } else { (m / df as f64).ln() })
        .collect();
    let total_terms = term_freq.iter().sum();
    Ok(CorpusStats {
        num_docs: docs.len(),
        num_classes: docs.iter().map(|d| d.label).max().unwrap_or(0),
        term_freq,
        doc_freq,
        idf,
        total_terms,
    })
}

/// Sparse real vector with a cached squared norm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    entries: Vec<(TermId, f64)>,
    sq_norm: f64,
}

impl SparseVec {
    /// `entries` must be sorted by term id without duplicates.
    pub fn from_sorted(entries: Vec<(TermId, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        let sq_norm = entries.iter().map(|&(_, v)| v * v).sum();
        SparseVec { entries, sq_norm }
    }

    pub fn entries(&self) -> &[(TermId, f64)] {
        &self.entries
    }

    pub fn sq_norm(&self) -> f64 {
        self.sq_norm
    }

    pub fn norm(&self) -> f64 {
        self.sq_norm.sqrt()
    }

    pub fn get(&self, t: TermId) -> f64 {
        self.entries
            .binary_search_by_key(&t, |&(k, _)| k)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (small, large) = if self.entries.len() <= other.entries.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.entries.iter().map(|&(t, v)| v * large.get(t)).sum()
    }

    /// Euclidean distance. Uses `|a|^2 + |b|^2 - 2 a.b` and falls back to an
    /// exact merge when that form cancels badly (nearly equal vectors).
    pub fn distance(&self, other: &SparseVec) -> f64 {
        let scale = self.sq_norm + other.sq_norm;
        let sq = scale - 2.0 * self.dot(other);
        if sq > 1e-6 * scale {
            sq.sqrt()
        } else {
            self.merged_sq_distance(other).sqrt()
        }
    }

    fn merged_sq_distance(&self, other: &SparseVec) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            let d = match (a.get(i), b.get(j)) {
                (Some(&(ta, va)), Some(&(tb, vb))) if ta == tb => {
                    i += 1;
                    j += 1;
                    va - vb
                }
                (Some(&(ta, va)), Some(&(tb, _))) if ta < tb => {
                    i += 1;
                    va
                }
                (Some(&(_, va)), None) => {
                    i += 1;
                    va
                }
                (_, Some(&(_, vb))) => {
                    j += 1;
                    vb
                }
                (None, None) => unreachable!(),
            };
            acc += d * d;
        }
        acc
    }
}

/// L2-normalized tf-idf vector of a document. Terms with zero idf (or unseen
/// in training) are dropped; a document with no weighted terms maps to zero.
pub fn tfidf_vector(doc: &SparseDoc, stats: &CorpusStats) -> SparseVec {
    let mut entries: Vec<(TermId, f64)> = doc
        .terms
        .iter()
        .map(|&(t, c)| (t, c * stats.idf(t)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut entries {
            *w /= norm;
        }
    }
    SparseVec::from_sorted(entries)
}

/// Statistics of one class's mega-document.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    pub class_id: ClassId,
    /// `y_t`, sorted by term id.
    pub term_counts: Vec<(TermId, f64)>,
    /// `|y| = sum_t y_t`; also the mega-document length `len(y)`.
    pub size_terms: f64,
    pub num_docs: usize,
    pub centroid: SparseVec,
}

impl ClassProfile {
    pub fn count(&self, t: TermId) -> f64 {
        self.term_counts
            .binary_search_by_key(&t, |&(k, _)| k)
            .map(|i| self.term_counts[i].1)
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> f64 {
        self.size_terms
    }
}

/// Profiles for classes `1..=K`, plus the average mega-document length.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfiles {
    profiles: Vec<ClassProfile>,
    pub avg_len: f64,
}

impl ClassProfiles {
    /// Assembles profiles for classes `1..=profiles.len()`, given in class order.
    pub fn from_profiles(profiles: Vec<ClassProfile>) -> Result<Self> {
        for (i, p) in profiles.iter().enumerate() {
            if p.class_id as usize != i + 1 {
                return Err(Error::InvalidConfig(format!(
                    "profile {} found at position of class {}",
                    p.class_id,
                    i + 1
                )));
            }
        }
        let avg_len = if profiles.is_empty() {
            0.0
        } else {
            profiles.iter().map(|p| p.size_terms).sum::<f64>() / profiles.len() as f64
        };
        Ok(ClassProfiles { profiles, avg_len })
    }

    pub fn num_classes(&self) -> ClassId {
        self.profiles.len() as ClassId
    }

    pub fn get(&self, class: ClassId) -> Option<&ClassProfile> {
        (class as usize)
            .checked_sub(1)
            .and_then(|i| self.profiles.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ClassProfile> {
        self.profiles.iter()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.profiles.iter().map(|p| p.num_docs).collect()
    }
}

pub fn build_profiles(docs: &[SparseDoc], stats: &CorpusStats) -> Result<ClassProfiles> {
    build_profiles_with(Execution::default(), docs, stats)
}

/// [`build_profiles`] with an explicit execution mode; work is split by class.
pub fn build_profiles_with(
    exec: Execution,
    docs: &[SparseDoc],
    stats: &CorpusStats,
) -> Result<ClassProfiles> {
    let k = stats.num_classes as usize;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, doc) in docs.iter().enumerate() {
        if doc.label == 0 || doc.label as usize > k {
            return Err(Error::UnknownClass(doc.label));
        }
        members[doc.label as usize - 1].push(i);
    }
    let missing: Vec<ClassId> = members
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_empty())
        .map(|(i, _)| i as ClassId + 1)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingClasses(missing));
    }
    let profiles = exec::map_range(exec, k, |c| {
        let idx = &members[c];
        let counts = sum_sorted(idx.iter().flat_map(|&i| docs[i].terms.iter().copied()));
        let size_terms = counts.iter().map(|&(_, v)| v).sum();
        let n = idx.len() as f64;
        let mut centroid = sum_sorted(
            idx.iter()
                .flat_map(|&i| tfidf_vector(&docs[i], stats).entries),
        );
        for (_, v) in &mut centroid {
            *v /= n;
        }
        centroid.retain(|&(_, v)| v != 0.0);
        ClassProfile {
            class_id: c as ClassId + 1,
            term_counts: counts,
            size_terms,
            num_docs: idx.len(),
            centroid: SparseVec::from_sorted(centroid),
        }
    });
    ClassProfiles::from_profiles(profiles)
}

/// Sums values per term. A stable sort keeps input order within a term so the
/// accumulation order is fixed.
fn sum_sorted(entries: impl Iterator<Item = (TermId, f64)>) -> Vec<(TermId, f64)> {
    let mut all: Vec<(TermId, f64)> = entries.collect();
    all.sort_by_key(|&(t, _)| t);
    let mut out: Vec<(TermId, f64)> = Vec::new();
    for (t, v) in all {
        match out.last_mut() {
            Some((last, acc)) if *last == t => *acc += v,
            _ => out.push((t, v)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Corpus> {
        parse_corpus(text.as_bytes(), LabelPolicy::Required)
    }

    fn doc(id: usize, label: ClassId, terms: &[(TermId, f64)]) -> SparseDoc {
        SparseDoc::new(id, label, terms.to_vec())
    }

    #[test]
    fn parses_simple_line() {
        let c = parse("2 1:3 7:1\n").unwrap();
        assert_eq!(c.docs, vec![doc(0, 2, &[(1, 3.0), (7, 1.0)])]);
        assert_eq!(c.num_classes, 2);
        assert_eq!(c.vocab_size, 8);
    }

    #[test]
    fn merges_duplicate_terms() {
        let c = parse("1 5:2 5:3").unwrap();
        assert_eq!(c.docs[0].terms, vec![(5, 5.0)]);
    }

    #[test]
    fn four_class_toy() {
        let c = parse("1 0:1\n2 1:1\n3 2:1\n4 3:1\n").unwrap();
        assert_eq!(c.num_classes, 4);
        assert_eq!(c.docs.len(), 4);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse("# header\n\n1 0:1 # trailing\n   \n2 1:2\n").unwrap();
        assert_eq!(c.docs.len(), 2);
        assert_eq!(c.docs[1].id, 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse("1 0:1\n1 0-1\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("1 0:1\n\n1 x:1\n") {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("1 0:-1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("a 0:1"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn rejects_empty_and_bad_labels() {
        assert!(matches!(parse(""), Err(Error::EmptyCorpus)));
        assert!(matches!(parse("# only comments\n"), Err(Error::EmptyCorpus)));
        assert!(matches!(
            parse("0 1:1"),
            Err(Error::InvalidLabel { line: 1, label: 0 })
        ));
        assert!(matches!(
            parse("1 1:1\n-3 1:1"),
            Err(Error::InvalidLabel { line: 2, label: -3 })
        ));
    }

    #[test]
    fn drops_termless_training_docs() {
        let c = parse("1 0:1\n2\n2 3:0\n2 1:1\n").unwrap();
        assert_eq!(c.docs.len(), 2);
        assert_eq!(c.dropped_empty, 2);
        assert_eq!(c.docs[1].id, 1);
    }

    #[test]
    fn optional_labels_keep_every_line() {
        let c = parse_corpus("0 1:1\n3:2\n2\n".as_bytes(), LabelPolicy::Optional).unwrap();
        assert_eq!(c.docs.len(), 3);
        assert_eq!(c.docs[1].label, 0);
        assert!(c.docs[2].is_empty());
        let empty = parse_corpus("".as_bytes(), LabelPolicy::Optional).unwrap();
        assert!(empty.docs.is_empty());
    }

    #[test]
    fn stats_hand_enumeration() {
        // docs {t1:2}, {t1:1, t2:1}
        let docs = vec![doc(0, 1, &[(1, 2.0)]), doc(1, 1, &[(1, 1.0), (2, 1.0)])];
        let s = compute_stats(&docs).unwrap();
        assert_eq!(s.term_freq(1), 3.0);
        assert_eq!(s.term_freq(2), 1.0);
        assert_eq!(s.total_terms, 4.0);
        assert_eq!(s.doc_freq(1), 2);
        assert_eq!(s.doc_freq(2), 1);
        assert_eq!(s.idf(1), 0.0);
        assert_eq!(s.idf(2), 2f64.ln());
        // absent terms
        assert_eq!(s.term_freq(0), 0.0);
        assert_eq!(s.idf(99), 0.0);
        assert_eq!(s.doc_freq(99), 0);
    }

    #[test]
    fn single_doc_idf_is_zero() {
        let s = compute_stats(&[doc(0, 1, &[(1, 1.0)])]).unwrap();
        assert_eq!(s.idf(1), 0.0);
        assert!(matches!(compute_stats(&[]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn profile_additivity() {
        let docs = vec![
            doc(0, 1, &[(1, 1.0)]),
            doc(1, 1, &[(1, 3.0)]),
            doc(2, 2, &[(2, 1.0)]),
        ];
        let s = compute_stats(&docs).unwrap();
        let p = build_profiles(&docs, &s).unwrap();
        let c1 = p.get(1).unwrap();
        assert_eq!(c1.count(1), 4.0);
        assert_eq!(c1.len(), 4.0);
        assert_eq!(c1.num_docs, 2);
        assert_eq!(p.avg_len, 2.5);
        assert!(p.get(3).is_none());
        assert!(p.get(0).is_none());
    }

    #[test]
    fn centroid_of_identical_docs() {
        let docs = vec![
            doc(0, 1, &[(1, 2.0), (3, 1.0)]),
            doc(1, 1, &[(1, 2.0), (3, 1.0)]),
            doc(2, 2, &[(2, 1.0), (3, 1.0)]),
        ];
        let s = compute_stats(&docs).unwrap();
        let p = build_profiles(&docs, &s).unwrap();
        let v = tfidf_vector(&docs[0], &s);
        assert!(v.norm() > 0.0);
        assert_eq!(p.get(1).unwrap().centroid.entries(), v.entries());
        assert_eq!(v.distance(&p.get(1).unwrap().centroid), 0.0);
    }

    #[test]
    fn missing_class_is_reported() {
        let docs = vec![doc(0, 1, &[(1, 1.0)]), doc(1, 3, &[(2, 1.0)])];
        let s = compute_stats(&docs).unwrap();
        match build_profiles(&docs, &s) {
            Err(Error::MissingClasses(ids)) => assert_eq!(ids, vec![2]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn distance_properties() {
        let a = SparseVec::from_sorted(vec![(0, 0.6), (2, 0.8)]);
        let b = SparseVec::from_sorted(vec![(1, 1.0)]);
        assert!((a.distance(&b) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.distance(&a), 0.0);
        assert!((a.dot(&SparseVec::from_sorted(vec![(2, 1.0)])) - 0.8).abs() < 1e-15);
    }
}
