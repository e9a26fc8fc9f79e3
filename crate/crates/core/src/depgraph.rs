//! Dependency graph of a dyadic sample and its exact proper fractional cover.
//!
//! Pairs built from the same source document are dependent, so the graph is
//! a disjoint union of cliques, one per source. Grouping pairs by slot gives a
//! cover by independent sets with unit weights: `K - 1` sets for the full
//! transform, `kappa` for a sampled one.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::reduction::{slot_for_adversarial, DyadicPair};
use crate::{ClassId, Result};

/// Per-vertex weight tolerance for exactness checks.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyGraph {
    /// Sorted neighbor lists.
    adjacency: Vec<Vec<usize>>,
    pub vertex_source: Vec<usize>,
}

impl DependencyGraph {
    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|n| n.binary_search(&v).is_ok())
    }
}

pub fn build_graph(pairs: &[DyadicPair]) -> DependencyGraph {
    let mut by_source: HashMap<usize, Vec<usize>> = HashMap::new();
    for (v, p) in pairs.iter().enumerate() {
        by_source.entry(p.source_doc).or_default().push(v);
    }
    let adjacency = pairs
        .iter()
        .enumerate()
        .map(|(v, p)| {
            by_source[&p.source_doc]
                .iter()
                .copied()
                .filter(|&u| u != v)
                .collect()
        })
        .collect();
    DependencyGraph {
        adjacency,
        vertex_source: pairs.iter().map(|p| p.source_doc).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverEntry {
    pub vertices: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FractionalCover {
    pub entries: Vec<CoverEntry>,
}

impl FractionalCover {
    pub fn weight(&self) -> f64 {
        cover_weight(self)
    }
}

/// `C_k = {pairs with slot k}` with unit weights; empty slots are omitted.
pub fn canonical_cover(pairs: &[DyadicPair]) -> FractionalCover {
    let mut slots: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, p) in pairs.iter().enumerate() {
        slots.entry(p.slot).or_default().push(v);
    }
    FractionalCover {
        entries: slots
            .into_values()
            .map(|vertices| CoverEntry {
                vertices,
                weight: 1.0,
            })
            .collect(),
    }
}

pub fn cover_weight(cover: &FractionalCover) -> f64 {
    cover.entries.iter().map(|e| e.weight).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Two adjacent vertices share cover entry `entry`.
    NotIndependent { entry: usize, u: usize, v: usize },
    /// The weights of the entries containing `vertex` sum to `total`, not 1.
    Inexact { vertex: usize, total: f64 },
    VertexOutOfRange { entry: usize, vertex: usize },
    WeightOutOfRange { entry: usize, weight: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverCheck {
    pub violations: Vec<Violation>,
}

impl CoverCheck {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every entry is an independent set with weight in `[0, 1]` and
/// that the weights covering each vertex sum to 1.
pub fn verify_cover(graph: &DependencyGraph, cover: &FractionalCover) -> CoverCheck {
    let n = graph.num_vertices();
    let mut violations = Vec::new();
    let mut totals = vec![0.0; n];
    for (i, entry) in cover.entries.iter().enumerate() {
        if !(0.0..=1.0).contains(&entry.weight) {
            violations.push(Violation::WeightOutOfRange {
                entry: i,
                weight: entry.weight,
            });
        }
        let members: HashSet<usize> = entry.vertices.iter().copied().collect();
        for &u in &entry.vertices {
            if u >= n {
                violations.push(Violation::VertexOutOfRange { entry: i, vertex: u });
                continue;
            }
            totals[u] += entry.weight;
            for &v in graph.neighbors(u) {
                if u < v && members.contains(&v) {
                    violations.push(Violation::NotIndependent { entry: i, u, v });
                }
            }
        }
    }
    for (vertex, &total) in totals.iter().enumerate() {
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            violations.push(Violation::Inexact { vertex, total });
        }
    }
    CoverCheck { violations }
}

/// Restricts a cover of the full transform to a sub-sample of its pairs.
///
/// `full` must be the full-transform pair list the cover refers to. Sampled
/// pairs are matched to full pairs by `(source_doc, adversarial_class)`; the
/// result covers the vertices of `sample` (indexed by position in `sample`)
/// with the original weights, and drops entries left empty.
pub fn restrict_cover(
    full: &[DyadicPair],
    cover: &FractionalCover,
    sample: &[DyadicPair],
) -> Result<FractionalCover> {
    let full_index: HashMap<(usize, ClassId), usize> = full
        .iter()
        .enumerate()
        .map(|(v, p)| ((p.source_doc, p.adversarial_class), v))
        .collect();
    let mut memberships: Vec<Vec<usize>> = vec![Vec::new(); full.len()];
    for (i, entry) in cover.entries.iter().enumerate() {
        for &v in &entry.vertices {
            if let Some(m) = memberships.get_mut(v) {
                m.push(i);
            }
        }
    }
    let mut restricted: Vec<Vec<usize>> = vec![Vec::new(); cover.entries.len()];
    for (v, p) in sample.iter().enumerate() {
        let key = (p.source_doc, p.adversarial_class);
        let Some(&fv) = full_index.get(&key) else {
            return Err(crate::Error::InvalidConfig(format!(
                "sampled pair (doc {}, class {}) is not in the full transform",
                key.0, key.1
            )));
        };
        for &e in &memberships[fv] {
            restricted[e].push(v);
        }
    }
    Ok(FractionalCover {
        entries: restricted
            .into_iter()
            .zip(&cover.entries)
            .filter(|(vs, _)| !vs.is_empty())
            .map(|(vertices, e)| CoverEntry {
                vertices,
                weight: e.weight,
            })
            .collect(),
    })
}

/// Slot a pair would occupy in the full transform.
pub fn full_transform_slot(pair: &DyadicPair) -> usize {
    slot_for_adversarial(pair.adversarial_class, pair.true_class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::JointFeatureVector;

    fn pair(source: usize, adversarial: ClassId, slot: usize) -> DyadicPair {
        DyadicPair {
            first: JointFeatureVector::default(),
            second: JointFeatureVector::default(),
            label: 1,
            source_doc: source,
            true_class: 1,
            adversarial_class: adversarial,
            slot,
        }
    }

    #[test]
    fn single_source_clique() {
        let pairs: Vec<_> = (0..5).map(|s| pair(7, s as ClassId + 2, s)).collect();
        let g = build_graph(&pairs);
        assert_eq!(g.num_edges(), 10);
        assert!(g.has_edge(0, 4));
        assert!(!g.has_edge(0, 0));
    }

    #[test]
    fn one_pair_per_source_is_edgeless() {
        let pairs: Vec<_> = (0..6).map(|s| pair(s, 2, 0)).collect();
        let g = build_graph(&pairs);
        assert_eq!(g.num_edges(), 0);
        let c = canonical_cover(&pairs);
        assert_eq!(c.entries.len(), 1);
        assert!(verify_cover(&g, &c).is_valid());
    }

    #[test]
    fn same_source_in_one_set_is_improper() {
        let pairs = vec![pair(0, 2, 0), pair(0, 3, 1), pair(1, 2, 0)];
        let g = build_graph(&pairs);
        let bad = FractionalCover {
            entries: vec![CoverEntry { vertices: vec![0, 1, 2], weight: 1.0 }],
        };
        let check = verify_cover(&g, &bad);
        assert_eq!(check.violations, vec![Violation::NotIndependent { entry: 0, u: 0, v: 1 }]);
    }

    #[test]
    fn uncovered_vertex_is_inexact() {
        let pairs = vec![pair(0, 2, 0), pair(0, 3, 1)];
        let g = build_graph(&pairs);
        let partial = FractionalCover {
            entries: vec![CoverEntry { vertices: vec![0], weight: 1.0 }],
        };
        assert_eq!(
            verify_cover(&g, &partial).violations,
            vec![Violation::Inexact { vertex: 1, total: 0.0 }]
        );
        let out_of_range = FractionalCover {
            entries: vec![CoverEntry { vertices: vec![0, 1, 9], weight: 0.5 }, CoverEntry { vertices: vec![0, 1], weight: 0.5 }],
        };
        let v = verify_cover(&g, &out_of_range).violations;
        assert!(v.contains(&Violation::VertexOutOfRange { entry: 0, vertex: 9 }));
    }

    #[test]
    fn weights() {
        assert_eq!(cover_weight(&FractionalCover::default()), 0.0);
        let pairs = vec![pair(0, 2, 0), pair(0, 3, 1), pair(1, 2, 0), pair(1, 3, 1)];
        assert_eq!(canonical_cover(&pairs).weight(), 2.0);
    }
}
