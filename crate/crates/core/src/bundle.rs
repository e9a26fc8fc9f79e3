//! Versioned on-disk model bundle.
//!
//! A bundle directory holds everything prediction needs:
//!
//! | file | content |
//! |------|---------|
//! | `model.meta` | `key=value` lines: `format=dsmc/1`, loss, lambda, lr0, epochs, seed, scaled |
//! | `weights.txt` | 10 weights, one per line |
//! | `scaler.txt` | `mean std` per feature, only for scaled models |
//! | `corpus.meta` | `key=value`: m, K, vocab, l_S, avg_len, optional alpha/beta |
//! | `idf.txt` | `term df F idf` for every training term |
//! | `class_stats.txt` | `class term:count ...` (class mega-document counts) |
//! | `class_sizes.txt` | `class n_docs` |
//! | `centroids.txt` | `class term:weight ...` |
//!
//! Reals are written with 17 significant digits, so a load reproduces the
//! saved values exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::{ClassProfile, ClassProfiles, CorpusStats, SparseVec};
use crate::evaluation::BoundConstants;
use crate::features::{FeatureScaler, FeatureSpace, NUM_FEATURES};
use crate::textfmt::format_g;
use crate::trainer::{LinearModel, Loss};
use crate::{ClassId, Error, Result, TermId};

pub const FORMAT_VERSION: &str = "dsmc/1";

pub const MODEL_META: &str = "model.meta";
pub const WEIGHTS: &str = "weights.txt";
pub const SCALER: &str = "scaler.txt";
pub const CORPUS_META: &str = "corpus.meta";
pub const IDF: &str = "idf.txt";
pub const CLASS_STATS: &str = "class_stats.txt";
pub const CLASS_SIZES: &str = "class_sizes.txt";
pub const CENTROIDS: &str = "centroids.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: LinearModel,
    pub space: FeatureSpace,
    /// Sampling constants of the training run, when recorded.
    pub bounds: Option<BoundConstants>,
}

fn g17(x: f64) -> String {
    format_g(x, 17)
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn sparse_line(out: &mut String, class: ClassId, entries: &[(TermId, f64)]) {
    let _ = write!(out, "{class}");
    for &(t, v) in entries {
        let _ = write!(out, " {t}:{}", g17(v));
    }
    out.push('\n');
}

impl ModelBundle {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let m = &self.model;
        let stats = &self.space.stats;
        let profiles = &self.space.profiles;

        let meta = format!(
            "format={FORMAT_VERSION}\nloss={}\nlambda={}\nlr0={}\nepochs={}\nseed={}\nscaled={}\n",
            m.loss,
            g17(m.lambda),
            g17(m.lr0),
            m.epochs,
            m.seed,
            m.scaler.is_some()
        );
        write_atomic(&dir.join(MODEL_META), meta.as_bytes())?;

        let weights: String = m.weights.iter().map(|w| g17(*w) + "\n").collect();
        write_atomic(&dir.join(WEIGHTS), weights.as_bytes())?;

        let scaler_path = dir.join(SCALER);
        match &m.scaler {
            Some(s) => {
                let text: String = (0..NUM_FEATURES)
                    .map(|i| format!("{} {}\n", g17(s.mean[i]), g17(s.std[i])))
                    .collect();
                write_atomic(&scaler_path, text.as_bytes())?;
            }
            None => match fs::remove_file(&scaler_path) {
                Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
                    return Err(Error::io(&scaler_path, e))
                }
                _ => {}
            },
        }

        let mut corpus = format!(
            "format={FORMAT_VERSION}\nm={}\nK={}\nvocab={}\nl_S={}\navg_len={}\n",
            stats.num_docs,
            stats.num_classes,
            stats.vocab_size(),
            g17(stats.total_terms),
            g17(profiles.avg_len)
        );
        if let Some(b) = &self.bounds {
            let _ = write!(corpus, "alpha={}\nbeta={}\n", g17(b.alpha), g17(b.beta));
        }
        write_atomic(&dir.join(CORPUS_META), corpus.as_bytes())?;

        let mut idf = String::from("# term df F idf\n");
        for t in 0..stats.vocab_size() {
            if stats.doc_freq[t] > 0 {
                let _ = writeln!(
                    idf,
                    "{t} {} {} {}",
                    stats.doc_freq[t],
                    g17(stats.term_freq[t]),
                    g17(stats.idf[t])
                );
            }
        }
        write_atomic(&dir.join(IDF), idf.as_bytes())?;

        let mut class_stats = String::new();
        let mut sizes = String::new();
        let mut centroids = String::new();
        for p in profiles.iter() {
            sparse_line(&mut class_stats, p.class_id, &p.term_counts);
            sparse_line(&mut centroids, p.class_id, p.centroid.entries());
            let _ = writeln!(sizes, "{} {}", p.class_id, p.num_docs);
        }
        write_atomic(&dir.join(CLASS_STATS), class_stats.as_bytes())?;
        write_atomic(&dir.join(CLASS_SIZES), sizes.as_bytes())?;
        write_atomic(&dir.join(CENTROIDS), centroids.as_bytes())?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let model_meta = read_kv(&dir.join(MODEL_META))?;
        let format = model_meta.get("format")?;
        if format != FORMAT_VERSION {
            return Err(model_meta.error(format!("unsupported format {format:?}")));
        }
        let scaled: bool = model_meta.parse("scaled")?;

        let weights_path = dir.join(WEIGHTS);
        let weights_text = read(&weights_path)?;
        let weights: Vec<f64> = data_lines(&weights_text)
            .map(|(_, l)| parse_num(&weights_path, l))
            .collect::<Result<_>>()?;
        let weights: [f64; NUM_FEATURES] = weights.try_into().map_err(|w: Vec<f64>| Error::Bundle {
            path: weights_path.clone(),
            msg: format!("expected {NUM_FEATURES} weights, found {}", w.len()),
        })?;

        let scaler = if scaled {
            let path = dir.join(SCALER);
            let text = read(&path)?;
            let mut mean = [0.0; NUM_FEATURES];
            let mut std = [0.0; NUM_FEATURES];
            let rows: Vec<&str> = data_lines(&text).map(|(_, l)| l).collect();
            if rows.len() != NUM_FEATURES {
                return Err(Error::Bundle {
                    path,
                    msg: format!("expected {NUM_FEATURES} rows, found {}", rows.len()),
                });
            }
            for (i, row) in rows.iter().enumerate() {
                let mut it = row.split_whitespace();
                mean[i] = parse_num(&path, it.next().unwrap_or(""))?;
                std[i] = parse_num(&path, it.next().unwrap_or(""))?;
            }
            Some(FeatureScaler { mean, std })
        } else {
            None
        };

        let model = LinearModel {
            weights,
            scaler,
            loss: model_meta.get("loss")?.parse::<Loss>()?,
            lambda: model_meta.parse("lambda")?,
            lr0: model_meta.parse("lr0")?,
            epochs: model_meta.parse("epochs")?,
            seed: model_meta.parse("seed")?,
        };

        let corpus_meta = read_kv(&dir.join(CORPUS_META))?;
        let num_docs: usize = corpus_meta.parse("m")?;
        let num_classes: ClassId = corpus_meta.parse("K")?;
        let vocab: usize = corpus_meta.parse("vocab")?;
        let total_terms: f64 = corpus_meta.parse("l_S")?;
        let bounds = match (corpus_meta.values.get("alpha"), corpus_meta.values.get("beta")) {
            (Some(_), Some(_)) => Some(BoundConstants {
                alpha: corpus_meta.parse("alpha")?,
                beta: corpus_meta.parse("beta")?,
            }),
            _ => None,
        };

        let idf_path = dir.join(IDF);
        let idf_text = read(&idf_path)?;
        let mut term_freq = vec![0.0; vocab];
        let mut doc_freq = vec![0u32; vocab];
        let mut idf = vec![0.0; vocab];
        for (lineno, line) in data_lines(&idf_text) {
            let cols: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: &str| Error::Bundle {
                path: idf_path.clone(),
                msg: format!("line {lineno}: {msg}"),
            };
            if cols.len() != 4 {
                return Err(bad("expected `term df F idf`"));
            }
            let t: usize = cols[0].parse().map_err(|_| bad("bad term id"))?;
            if t >= vocab {
                return Err(bad("term id beyond vocabulary"));
            }
            doc_freq[t] = cols[1].parse().map_err(|_| bad("bad document frequency"))?;
            term_freq[t] = parse_num(&idf_path, cols[2])?;
            idf[t] = parse_num(&idf_path, cols[3])?;
        }
        let stats = CorpusStats {
            num_docs,
            num_classes,
            term_freq,
            doc_freq,
            idf,
            total_terms,
        };

        let counts = read_sparse(&dir.join(CLASS_STATS), num_classes)?;
        let centroids = read_sparse(&dir.join(CENTROIDS), num_classes)?;
        let sizes = read_sizes(&dir.join(CLASS_SIZES), num_classes)?;
        let profiles = counts
            .into_iter()
            .zip(centroids)
            .zip(sizes)
            .enumerate()
            .map(|(i, ((term_counts, centroid), num_docs))| ClassProfile {
                class_id: i as ClassId + 1,
                size_terms: term_counts.iter().map(|&(_, v)| v).sum(),
                term_counts,
                num_docs,
                centroid: SparseVec::from_sorted(centroid),
            })
            .collect();
        let profiles = ClassProfiles::from_profiles(profiles)?;
        Ok(ModelBundle {
            model,
            space: FeatureSpace { stats, profiles },
            bounds,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingBundleFile(path.to_path_buf()),
        _ => Error::io(path, e),
    })
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_num<T: std::str::FromStr>(path: &Path, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Bundle {
        path: path.to_path_buf(),
        msg: format!("bad number {s:?}"),
    })
}

struct KeyValues {
    path: PathBuf,
    values: BTreeMap<String, String>,
}

impl KeyValues {
    fn error(&self, msg: String) -> Error {
        Error::Bundle {
            path: self.path.clone(),
            msg,
        }
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| self.error(format!("missing key {key:?}")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| self.error(format!("bad value {raw:?} for {key}")))
    }
}

fn read_kv(path: &Path) -> Result<KeyValues> {
    let text = read(path)?;
    let mut values = BTreeMap::new();
    for (lineno, line) in data_lines(&text) {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Bundle {
            path: path.to_path_buf(),
            msg: format!("line {lineno}: expected key=value"),
        })?;
        values.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(KeyValues {
        path: path.to_path_buf(),
        values,
    })
}

fn class_rows(path: &Path, text: &str, num_classes: ClassId) -> Result<Vec<Vec<String>>> {
    let mut rows = vec![None; num_classes as usize];
    for (lineno, line) in data_lines(text) {
        let mut it = line.split_whitespace();
        let class: ClassId = parse_num(path, it.next().unwrap_or(""))?;
        let slot = (class as usize)
            .checked_sub(1)
            .and_then(|i| rows.get_mut(i))
            .ok_or_else(|| Error::Bundle {
                path: path.to_path_buf(),
                msg: format!("line {lineno}: class {class} out of range"),
            })?;
        *slot = Some(it.map(str::to_string).collect());
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or_else(|| Error::Bundle {
                path: path.to_path_buf(),
                msg: format!("no row for class {}", i + 1),
            })
        })
        .collect()
}

fn read_sparse(path: &Path, num_classes: ClassId) -> Result<Vec<Vec<(TermId, f64)>>> {
    let text = read(path)?;
    class_rows(path, &text, num_classes)?
        .into_iter()
        .map(|row| {
            let entries = row
                .iter()
                .map(|tok| {
                    let (t, v) = tok.split_once(':').ok_or_else(|| Error::Bundle {
                        path: path.to_path_buf(),
                        msg: format!("expected term:value, got {tok:?}"),
                    })?;
                    Ok((parse_num(path, t)?, parse_num(path, v)?))
                })
                .collect::<Result<Vec<(TermId, f64)>>>()?;
            if !entries.windows(2).all(|w| w[0].0 < w[1].0) {
                return Err(Error::Bundle {
                    path: path.to_path_buf(),
                    msg: "term ids must be strictly increasing".to_string(),
                });
            }
            Ok(entries)
        })
        .collect()
}

fn read_sizes(path: &Path, num_classes: ClassId) -> Result<Vec<usize>> {
    let text = read(path)?;
    class_rows(path, &text, num_classes)?
        .into_iter()
        .map(|row| match row.as_slice() {
            [n] => parse_num(path, n),
            _ => Err(Error::Bundle {
                path: path.to_path_buf(),
                msg: "expected `class n_docs`".to_string(),
            }),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SparseDoc;
    use crate::features::FeatureScaler;

    fn bundle(scaled: bool) -> ModelBundle {
        let docs = vec![
            SparseDoc::new(0, 1, vec![(0, 3.0), (5, 1.5)]),
            SparseDoc::new(1, 2, vec![(1, 2.0), (5, 1.0)]),
            SparseDoc::new(2, 3, vec![(2, 1.0), (3, 1.0)]),
            SparseDoc::new(3, 3, vec![(2, 2.0), (4, 0.25)]),
        ];
        let space = FeatureSpace::fit(&docs).unwrap();
        let mut model = LinearModel::from_weights([0.1, -0.2, 1.0 / 3.0, 4.0, 5e-20, 6.0, 7.0, 8.0, -9.5, 1e10]);
        if scaled {
            model.scaler = Some(FeatureScaler { mean: [0.5; NUM_FEATURES], std: [2.0 / 3.0; NUM_FEATURES] });
        }
        ModelBundle { model, space, bounds: Some(BoundConstants { alpha: 0.3, beta: 2.5 }) }
    }

    #[test]
    fn save_load_is_exact() {
        for scaled in [true, false] {
            let dir = tempfile::tempdir().unwrap();
            let b = bundle(scaled);
            b.save(dir.path()).unwrap();
            assert_eq!(ModelBundle::load(dir.path()).unwrap(), b);
            assert_eq!(dir.path().join(SCALER).exists(), scaled);
        }
    }

    #[test]
    fn missing_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        bundle(true).save(dir.path()).unwrap();
        fs::remove_file(dir.path().join(CENTROIDS)).unwrap();
        match ModelBundle::load(dir.path()) {
            Err(Error::MissingBundleFile(p)) => assert!(p.ends_with(CENTROIDS)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_other_format_versions() {
        let dir = tempfile::tempdir().unwrap();
        bundle(false).save(dir.path()).unwrap();
        let meta = fs::read_to_string(dir.path().join(MODEL_META)).unwrap();
        fs::write(dir.path().join(MODEL_META), meta.replace("dsmc/1", "dsmc/9")).unwrap();
        assert!(matches!(ModelBundle::load(dir.path()), Err(Error::Bundle { .. })));
    }
}
