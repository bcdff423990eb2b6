//! Theme discovery: agglomerative clustering of tfIdf rows under cosine
//! similarity, followed by pruning of small clusters.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::textproc::{cosine_similarity, TfidfMatrix};
use crate::{Error, Result};

/// Cluster-to-cluster similarity criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linkage {
    /// Size-weighted mean of member similarities (UPGMA).
    #[default]
    Average,
    /// Minimum member similarity.
    Complete,
    /// Maximum member similarity.
    Single,
}

impl Linkage {
    /// Similarity of `a ∪ b` to a third cluster, from the similarities of
    /// `a` and `b` to it.
    fn merge(self, sim_a: f64, sim_b: f64, size_a: usize, size_b: usize) -> f64 {
        match self {
            Linkage::Average => (size_a as f64 * sim_a + size_b as f64 * sim_b) / (size_a + size_b) as f64,
            Linkage::Complete => sim_a.min(sim_b),
            Linkage::Single => sim_a.max(sim_b),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Single => "single",
        })
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(Error::Argument(format!("unknown linkage `{other}`"))),
        }
    }
}

/// Partition of training ids into themes plus the ids left out of every theme.
#[derive(Debug, Clone, PartialEq)]
pub struct ThemeModel {
    /// Non-empty, pairwise disjoint member lists.
    pub themes: Vec<Vec<String>>,
    /// Sorted ids that belong to no theme.
    pub dropped: Vec<String>,
    pub cutoff: f64,
    pub linkage: Linkage,
    /// Coverage target of the last pruning pass; 1.0 when unpruned.
    pub coverage: f64,
}

impl ThemeModel {
    pub fn len(&self) -> usize {
        self.themes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.themes.is_empty()
    }

    pub fn total_images(&self) -> usize {
        self.retained_images() + self.dropped.len()
    }

    pub fn retained_images(&self) -> usize {
        self.themes.iter().map(Vec::len).sum()
    }

    pub fn retained_fraction(&self) -> f64 {
        match self.total_images() {
            0 => 0.0,
            total => self.retained_images() as f64 / total as f64,
        }
    }

    /// Theme index of every retained id.
    pub fn assignment(&self) -> BTreeMap<&str, usize> {
        self.themes.iter().enumerate().flat_map(|(k, members)| members.iter().map(move |id| (id.as_str(), k))).collect()
    }
}

/// Row-best cache entry: most similar active partner, ties to the smallest index.
#[derive(Clone, Copy)]
struct Best {
    sim: f64,
    partner: usize,
}

struct Agglomerator {
    n: usize,
    sim: Vec<f64>,
    size: Vec<usize>,
    active: Vec<bool>,
    best: Vec<Option<Best>>,
}

impl Agglomerator {
    fn s(&self, i: usize, j: usize) -> f64 {
        self.sim[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.sim[i * self.n + j] = v;
        self.sim[j * self.n + i] = v;
    }

    fn rescan(&mut self, i: usize) {
        let mut best: Option<Best> = None;
        for j in (0..self.n).filter(|&j| j != i && self.active[j]) {
            let s = self.s(i, j);
            if best.is_none_or(|b| s > b.sim) {
                best = Some(Best { sim: s, partner: j });
            }
        }
        self.best[i] = best;
    }

    /// Globally most similar pair, ties broken by the lexicographically
    /// smallest `(low, high)` index pair.
    fn closest_pair(&self) -> Option<(f64, usize, usize)> {
        let mut out: Option<(f64, usize, usize)> = None;
        for i in (0..self.n).filter(|&i| self.active[i]) {
            let Some(b) = self.best[i] else { continue };
            let pair = (i.min(b.partner), i.max(b.partner));
            let better = match out {
                None => true,
                Some((s, lo, hi)) => b.sim > s || (b.sim == s && pair < (lo, hi)),
            };
            if better {
                out = Some((b.sim, pair.0, pair.1));
            }
        }
        out
    }

    fn merge(&mut self, a: usize, b: usize, linkage: Linkage) {
        let (size_a, size_b) = (self.size[a], self.size[b]);
        for k in 0..self.n {
            if k == a || k == b || !self.active[k] {
                continue;
            }
            let v = linkage.merge(self.s(a, k), self.s(b, k), size_a, size_b);
            self.set(a, k, v);
        }
        self.size[a] += size_b;
        self.active[b] = false;
        self.best[b] = None;
        self.rescan(a);
        for k in 0..self.n {
            if k == a || !self.active[k] {
                continue;
            }
            match self.best[k] {
                Some(bk) if bk.partner == a || bk.partner == b => self.rescan(k),
                Some(bk) => {
                    let s = self.s(k, a);
                    if s > bk.sim || (s == bk.sim && a < bk.partner) {
                        self.best[k] = Some(Best { sim: s, partner: a });
                    }
                }
                None => self.rescan(k),
            }
        }
    }
}

/// Merges clusters greedily, most similar pair first, until no pair reaches
/// `cutoff`. All-zero rows go straight to `dropped`.
///
/// Memory is one dense `f64` similarity matrix over the non-zero rows.
pub fn cluster_themes(tfidf: &TfidfMatrix, cutoff: f64, linkage: Linkage) -> Result<ThemeModel> {
    if !(cutoff > 0.0 && cutoff <= 1.0) {
        return Err(Error::Argument(format!("cutoff {cutoff} outside (0, 1]")));
    }
    let rows: Vec<usize> = (0..tfidf.rows.len()).filter(|&i| !tfidf.rows[i].is_zero()).collect();
    let mut dropped: Vec<String> =
        (0..tfidf.rows.len()).filter(|&i| tfidf.rows[i].is_zero()).map(|i| tfidf.ids[i].clone()).collect();
    dropped.sort();
    if rows.is_empty() {
        return Err(Error::NoThemes);
    }

    let n = rows.len();
    let mut agg =
        Agglomerator { n, sim: vec![0.0; n * n], size: vec![1; n], active: vec![true; n], best: vec![None; n] };
    for i in 0..n {
        agg.sim[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let s = cosine_similarity(&tfidf.rows[rows[i]], &tfidf.rows[rows[j]]);
            agg.set(i, j, s);
        }
    }
    for i in 0..n {
        agg.rescan(i);
    }

    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut last_sim = f64::INFINITY;
    while let Some((s, a, b)) = agg.closest_pair() {
        if s < cutoff {
            break;
        }
        debug_assert!(s <= last_sim + 1e-9, "non-monotone merge sequence");
        last_sim = s;
        agg.merge(a, b, linkage);
        let moved = core::mem::take(&mut members[b]);
        members[a].extend(moved);
    }

    let mut clusters: Vec<Vec<usize>> = members.into_iter().filter(|m| !m.is_empty()).collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    let themes = clusters.into_iter().map(|c| c.into_iter().map(|i| tfidf.ids[rows[i]].clone()).collect()).collect();
    Ok(ThemeModel { themes, dropped, cutoff, linkage, coverage: 1.0 })
}

/// Drops the smallest themes (ties: smallest member id first) while the
/// retained fraction stays at or above `coverage`. At least one theme is kept.
pub fn prune_themes(model: &ThemeModel, coverage: f64) -> Result<ThemeModel> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::Argument(format!("coverage {coverage} outside (0, 1]")));
    }
    let total = model.total_images() as f64;
    let mut order: Vec<usize> = (0..model.themes.len()).collect();
    let min_id = |k: usize| model.themes[k].iter().min();
    order.sort_by(|&a, &b| model.themes[a].len().cmp(&model.themes[b].len()).then_with(|| min_id(a).cmp(&min_id(b))));

    let mut retained = model.retained_images();
    let mut remove = vec![false; model.themes.len()];
    let mut remaining = model.themes.len();
    for k in order {
        let size = model.themes[k].len();
        if remaining == 1 || ((retained - size) as f64 / total) < coverage {
            break;
        }
        remove[k] = true;
        retained -= size;
        remaining -= 1;
    }

    let mut themes = Vec::with_capacity(remaining);
    let mut dropped = model.dropped.clone();
    for (k, members) in model.themes.iter().enumerate() {
        if remove[k] {
            dropped.extend(members.iter().cloned());
        } else {
            themes.push(members.clone());
        }
    }
    dropped.sort();
    Ok(ThemeModel { themes, dropped, cutoff: model.cutoff, linkage: model.linkage, coverage })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThemeStats {
    pub themes: usize,
    /// Theme size → number of themes of that size.
    pub size_histogram: BTreeMap<usize, usize>,
    pub retained: usize,
    pub dropped: usize,
    pub retained_fraction: f64,
}

pub fn theme_stats(model: &ThemeModel) -> ThemeStats {
    let mut size_histogram = BTreeMap::new();
    for t in &model.themes {
        *size_histogram.entry(t.len()).or_insert(0) += 1;
    }
    ThemeStats {
        themes: model.themes.len(),
        size_histogram,
        retained: model.retained_images(),
        dropped: model.dropped.len(),
        retained_fraction: model.retained_fraction(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::SparseVector;
    use alloc::string::ToString;

    fn matrix(rows: Vec<Vec<(usize, f64)>>) -> TfidfMatrix {
        let ids = (0..rows.len()).map(|i| format!("i{i:02}")).collect();
        TfidfMatrix { ids, rows: rows.into_iter().map(SparseVector::from_pairs).collect(), vocab_size: 32 }
    }

    fn model_with_sizes(sizes: &[usize]) -> ThemeModel {
        let mut next = 0;
        let themes = sizes
            .iter()
            .map(|&s| {
                (0..s)
                    .map(|_| {
                        next += 1;
                        format!("id{next:04}")
                    })
                    .collect()
            })
            .collect();
        ThemeModel { themes, dropped: vec![], cutoff: 0.5, linkage: Linkage::Average, coverage: 1.0 }
    }

    #[test]
    fn identical_rows_merge() {
        let m = matrix(vec![vec![(0, 1.0), (3, 0.5)], vec![(0, 1.0), (3, 0.5)]]);
        for cutoff in [0.01, 0.5, 1.0] {
            let t = cluster_themes(&m, cutoff, Linkage::Average).unwrap();
            assert_eq!(t.themes, vec![vec!["i00".to_string(), "i01".to_string()]]);
        }
    }

    #[test]
    fn disjoint_rows_stay_singletons() {
        let m = matrix(vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(2, 1.0)]]);
        let t = cluster_themes(&m, 0.5, Linkage::Average).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.dropped.is_empty());
    }

    #[test]
    fn zero_rows_are_dropped() {
        let m = matrix(vec![vec![(0, 1.0)], vec![], vec![(0, 2.0)]]);
        let t = cluster_themes(&m, 0.5, Linkage::Single).unwrap();
        assert_eq!(t.themes, vec![vec!["i00".to_string(), "i02".to_string()]]);
        assert_eq!(t.dropped, vec!["i01".to_string()]);
        assert_eq!(cluster_themes(&matrix(vec![vec![]]), 0.5, Linkage::Average), Err(Error::NoThemes));
    }

    #[test]
    fn rejects_bad_cutoff() {
        let m = matrix(vec![vec![(0, 1.0)]]);
        for c in [0.0, 1.01, -1.0, f64::NAN] {
            assert!(matches!(cluster_themes(&m, c, Linkage::Average), Err(Error::Argument(_))));
        }
    }

    #[test]
    fn linkages_differ_on_chain() {
        // a~b and b~c strongly similar, a and c only weakly.
        let m = matrix(vec![vec![(0, 1.0), (1, 1.0)], vec![(1, 1.0), (2, 1.0)], vec![(2, 1.0), (3, 1.0)]]);
        assert_eq!(cluster_themes(&m, 0.45, Linkage::Single).unwrap().len(), 1);
        assert_eq!(cluster_themes(&m, 0.45, Linkage::Complete).unwrap().len(), 2);
        // average of sims to {a,b}: (0 + 0.5) / 2 = 0.25
        assert_eq!(cluster_themes(&m, 0.25, Linkage::Average).unwrap().len(), 1);
        assert_eq!(cluster_themes(&m, 0.26, Linkage::Average).unwrap().len(), 2);
    }

    #[test]
    fn prune_keeps_coverage() {
        let m = model_with_sizes(&[50, 30, 12, 5, 3]);
        let p = prune_themes(&m, 0.90).unwrap();
        let sizes: Vec<usize> = p.themes.iter().map(Vec::len).collect();
        assert_eq!(sizes, [50, 30, 12]);
        assert_eq!(p.dropped.len(), 8);
        assert!((p.retained_fraction() - 0.92).abs() < 1e-12);
        assert_eq!(prune_themes(&m, 1.0).unwrap().themes, m.themes);
        let single = model_with_sizes(&[4]);
        assert_eq!(prune_themes(&single, 0.01).unwrap().themes, single.themes);
    }

    #[test]
    fn prune_ties_drop_smallest_id_first() {
        let m = model_with_sizes(&[10, 1, 1]);
        let p = prune_themes(&m, 0.9).unwrap();
        // one of the singletons can go (11/12 ≥ 0.9), the second cannot (10/12 < 0.9)
        assert_eq!(p.dropped, vec!["id0011".to_string()]);
    }

    #[test]
    fn stats_report() {
        let m = model_with_sizes(&[1, 1, 1]);
        let s = theme_stats(&m);
        assert_eq!(s.themes, 3);
        assert_eq!(s.retained_fraction, 1.0);
        assert_eq!(s.size_histogram.get(&1), Some(&3));
        let p = prune_themes(&model_with_sizes(&[50, 30, 12, 5, 3]), 0.9).unwrap();
        let s = theme_stats(&p);
        assert_eq!(s.retained_fraction, s.retained as f64 / (s.retained + s.dropped) as f64);
    }
}
