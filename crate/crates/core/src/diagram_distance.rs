//! Bottleneck and q-Wasserstein distances between persistence diagrams, and
//! labeled pairwise distance matrices built from them.
//!
//! Finite points of one dimension are matched with the usual diagonal
//! augmentation: each side gets one diagonal slot per point of the other
//! side, a point costs `(death - birth) / 2` to send to any diagonal slot and
//! two diagonal slots match for free. Ground cost is the ∞-norm. Open bars are
//! matched separately, in birth order, and must agree in number.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IncomparablePair, Result};
use crate::topology::filtration::{read_labeled_matrix, write_labeled_matrix};
use crate::topology::PersistenceDiagram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DistanceKind {
    Bottleneck,
    /// q-Wasserstein, `q ≥ 1`.
    Wasserstein(f64),
}

impl Default for DistanceKind {
    fn default() -> Self {
        DistanceKind::Bottleneck
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::Bottleneck => f.write_str("bottleneck"),
            DistanceKind::Wasserstein(q) => write!(f, "wasserstein:{q}"),
        }
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    /// `bottleneck` or `wasserstein:<q>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "bottleneck" {
            return Ok(DistanceKind::Bottleneck);
        }
        if let Some(q) = s.strip_prefix("wasserstein:") {
            let q: f64 = q.parse().map_err(|_| Error::invalid(format!("bad Wasserstein order '{q}'")))?;
            if !(q >= 1.0 && q.is_finite()) {
                return Err(Error::invalid(format!("Wasserstein order must be a finite q >= 1, got {q}")));
            }
            return Ok(DistanceKind::Wasserstein(q));
        }
        Err(Error::invalid(format!("unknown distance kind '{s}' (bottleneck | wasserstein:<q>)")))
    }
}

impl TryFrom<String> for DistanceKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DistanceKind> for String {
    fn from(k: DistanceKind) -> String {
        k.to_string()
    }
}

/// Finite `(birth, death)` points and open-bar births of one dimension.
fn split(diag: &PersistenceDiagram, dim: usize) -> Result<(Vec<(f64, f64)>, Vec<f64>)> {
    if dim > diag.max_dim() {
        return Err(Error::invalid(format!("diagram computed to dimension {}, asked for {dim}", diag.max_dim())));
    }
    let mut finite = Vec::new();
    let mut open = Vec::new();
    for p in diag.pairs().filter(|p| p.dim == dim) {
        if p.is_infinite() {
            open.push(p.birth);
        } else {
            finite.push((p.birth, p.death));
        }
    }
    open.sort_by(f64::total_cmp);
    Ok((finite, open))
}

fn open_bars(a: &PersistenceDiagram, b: &PersistenceDiagram, dim: usize) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>, Vec<f64>)> {
    let (fa, oa) = split(a, dim)?;
    let (fb, ob) = split(b, dim)?;
    if oa.len() != ob.len() {
        return Err(Error::Incomparable { dim, left: oa.len(), right: ob.len() });
    }
    let gaps = oa.iter().zip(&ob).map(|(x, y)| (x - y).abs()).collect();
    Ok((fa, fb, gaps))
}

pub fn bottleneck_distance(a: &PersistenceDiagram, b: &PersistenceDiagram, dim: usize) -> Result<f64> {
    let (fa, fb, gaps) = open_bars(a, b, dim)?;
    Ok(gaps.into_iter().fold(bottleneck_points(&fa, &fb), f64::max))
}

pub fn wasserstein_distance(a: &PersistenceDiagram, b: &PersistenceDiagram, dim: usize, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::invalid(format!("Wasserstein order must be a finite q >= 1, got {q}")));
    }
    let (fa, fb, gaps) = open_bars(a, b, dim)?;
    let open: f64 = gaps.iter().map(|g| g.powf(q)).sum();
    Ok((wasserstein_power(&fa, &fb, q) + open).powf(1.0 / q))
}

pub fn diagram_distance(a: &PersistenceDiagram, b: &PersistenceDiagram, dim: usize, kind: DistanceKind) -> Result<f64> {
    match kind {
        DistanceKind::Bottleneck => bottleneck_distance(a, b, dim),
        DistanceKind::Wasserstein(q) => wasserstein_distance(a, b, dim, q),
    }
}

/// ∞-norm distance between two diagram points.
pub fn point_cost(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).abs().max((p.1 - q.1).abs())
}

/// ∞-norm distance from a point to the diagonal.
pub fn diagonal_cost(p: (f64, f64)) -> f64 {
    (p.1 - p.0) / 2.0
}

/// Cost of slot `i` on the left against slot `j` on the right of the
/// diagonal-augmented problem; left slots are `a` then one diagonal slot per
/// point of `b`, right slots are `b` then one per point of `a`.
fn augmented_cost(a: &[(f64, f64)], b: &[(f64, f64)], i: usize, j: usize) -> f64 {
    match (i < a.len(), j < b.len()) {
        (true, true) => point_cost(a[i], b[j]),
        (true, false) => diagonal_cost(a[i]),
        (false, true) => diagonal_cost(b[j]),
        (false, false) => 0.0,
    }
}

/// Bottleneck distance between finite point sets: the smallest candidate
/// cost whose threshold graph has a perfect matching.
pub fn bottleneck_points(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let n = a.len() + b.len();
    if n == 0 {
        return 0.0;
    }
    let mut candidates: Vec<f64> = Vec::with_capacity(a.len() * b.len() + n + 1);
    candidates.push(0.0);
    candidates.extend(a.iter().chain(b).map(|&p| diagonal_cost(p)));
    for &p in a {
        candidates.extend(b.iter().map(|&q| point_cost(p, q)));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // sending everything to the diagonal is always possible, so the largest
    // candidate is feasible
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    let mut matcher = Matcher::new(n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if matcher.perfect(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Hopcroft-Karp on the threshold graph of the augmented problem.
struct Matcher {
    n: usize,
    adj: Vec<Vec<usize>>,
    left: Vec<usize>,
    right: Vec<usize>,
    dist: Vec<usize>,
}

const FREE: usize = usize::MAX;

impl Matcher {
    fn new(n: usize) -> Self {
        Matcher { n, adj: vec![Vec::new(); n], left: vec![FREE; n], right: vec![FREE; n], dist: vec![0; n] }
    }

    fn perfect(&mut self, a: &[(f64, f64)], b: &[(f64, f64)], t: f64) -> bool {
        for i in 0..self.n {
            self.adj[i].clear();
            for j in 0..self.n {
                if augmented_cost(a, b, i, j) <= t {
                    self.adj[i].push(j);
                }
            }
            if self.adj[i].is_empty() {
                return false;
            }
        }
        self.left.fill(FREE);
        self.right.fill(FREE);
        let mut size = 0;
        while self.layer() {
            for i in 0..self.n {
                if self.left[i] == FREE && self.augment(i) {
                    size += 1;
                }
            }
        }
        size == self.n
    }

    /// BFS from free left vertices; true if some free right vertex is reachable.
    fn layer(&mut self) -> bool {
        let mut queue = std::collections::VecDeque::new();
        for i in 0..self.n {
            if self.left[i] == FREE {
                self.dist[i] = 0;
                queue.push_back(i);
            } else {
                self.dist[i] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for &j in &self.adj[i] {
                match self.right[j] {
                    FREE => found = true,
                    k if self.dist[k] == usize::MAX => {
                        self.dist[k] = self.dist[i] + 1;
                        queue.push_back(k);
                    }
                    _ => {}
                }
            }
        }
        found
    }

    fn augment(&mut self, i: usize) -> bool {
        for idx in 0..self.adj[i].len() {
            let j = self.adj[i][idx];
            let k = self.right[j];
            if k == FREE || (self.dist[k] == self.dist[i] + 1 && self.augment(k)) {
                self.left[i] = j;
                self.right[j] = i;
                return true;
            }
        }
        self.dist[i] = usize::MAX;
        false
    }
}

/// `min Σ cost^q` over matchings of two finite point sets (the q-th power of
/// the q-Wasserstein distance).
pub fn wasserstein_power(a: &[(f64, f64)], b: &[(f64, f64)], q: f64) -> f64 {
    let n = a.len() + b.len();
    if n == 0 {
        return 0.0;
    }
    let cost: Vec<f64> = (0..n * n).map(|k| augmented_cost(a, b, k / n, k % n).powf(q)).collect();
    let assignment = hungarian(n, &cost);
    assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
}

/// Minimum-cost perfect assignment on a dense `n × n` cost matrix
/// (shortest augmenting paths with potentials, O(n³)). Returns the column
/// assigned to each row.
pub fn hungarian(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    // 1-based internally; column 0 is the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

/// Symmetric matrix of diagram distances between labeled entities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramDistanceMatrix {
    labels: Vec<String>,
    dim: usize,
    kind: DistanceKind,
    entries: Vec<f64>,
}

impl DiagramDistanceMatrix {
    pub fn new(labels: Vec<String>, dim: usize, kind: DistanceKind, entries: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if entries.len() != n * n {
            return Err(Error::invalid(format!("{} entries for {n} labels", entries.len())));
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != n {
            return Err(Error::invalid("duplicate labels"));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let x = entries[i * n + j];
                if !x.is_finite() || x < 0.0 || x != entries[j * n + i] {
                    return Err(Error::invalid(format!("entry ({i}, {j}) is not a finite symmetric distance")));
                }
            }
        }
        Ok(DiagramDistanceMatrix { labels, dim, kind, entries })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.labels.len() + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_labeled_matrix(&self.labels, self.len(), |i, j| self.get(i, j), out)
    }

    /// Reads a matrix written by [`write_csv`](Self::write_csv); the CSV
    /// carries no dimension or kind, so the caller supplies them.
    pub fn read_csv<R: Read>(input: R, dim: usize, kind: DistanceKind) -> Result<Self> {
        let (labels, entries) = read_labeled_matrix(input)?;
        DiagramDistanceMatrix::new(labels, dim, kind, entries)
    }
}

/// All pairwise distances between labeled diagrams in one dimension. Any
/// pair with mismatched open-bar counts makes the whole matrix fail, with
/// every such pair listed.
pub fn distance_matrix(
    diagrams: &[(String, PersistenceDiagram)],
    dim: usize,
    kind: DistanceKind,
) -> Result<DiagramDistanceMatrix> {
    let n = diagrams.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 diagrams, got {n}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values: Vec<Result<f64>> =
        pairs.par_iter().map(|&(i, j)| diagram_distance(&diagrams[i].1, &diagrams[j].1, dim, kind)).collect();

    let mut entries = vec![0.0; n * n];
    let mut missing = Vec::new();
    for (&(i, j), value) in pairs.iter().zip(values) {
        match value {
            Ok(x) => {
                entries[i * n + j] = x;
                entries[j * n + i] = x;
            }
            Err(Error::Incomparable { dim, left, right }) => missing.push(IncomparablePair {
                left: diagrams[i].0.clone(),
                right: diagrams[j].0.clone(),
                dim,
                left_infinite: left,
                right_infinite: right,
            }),
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncomparablePairs(missing));
    }
    DiagramDistanceMatrix::new(diagrams.iter().map(|(l, _)| l.clone()).collect(), dim, kind, entries)
}

/// `label_a,label_b,dim,kind,value` rows for every unordered pair of every
/// matrix.
pub fn write_pair_report<W: Write>(matrices: &[DiagramDistanceMatrix], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label_a", "label_b", "dim", "kind", "value"])?;
    for m in matrices {
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                w.write_record([
                    m.labels[i].clone(),
                    m.labels[j].clone(),
                    m.dim.to_string(),
                    m.kind.to_string(),
                    format!("{:?}", m.get(i, j)),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Which group pairs [`mean_group_distance`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GroupMode {
    /// `G` with itself only.
    Within,
    /// Distinct groups only.
    Across,
    /// Both.
    #[default]
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMean {
    pub left: String,
    pub right: String,
    pub mean: f64,
    /// Number of entity pairs averaged.
    pub count: usize,
}

/// Mean distance over `{d(u, v) : u ∈ G, v ∈ H, u ≠ v}` for each requested
/// pair of groups `G ≤ H` (by name).
pub fn mean_group_distance(
    dm: &DiagramDistanceMatrix,
    groups: &BTreeMap<String, String>,
    mode: GroupMode,
) -> Result<Vec<GroupMean>> {
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in dm.labels.iter().enumerate() {
        let g = groups.get(label).ok_or_else(|| Error::invalid(format!("label '{label}' has no group")))?;
        members.entry(g.as_str()).or_default().push(i);
    }
    let names: Vec<&str> = members.keys().copied().collect();
    let mut out = Vec::new();
    for (gi, &g) in names.iter().enumerate() {
        for &h in &names[gi..] {
            let within = g == h;
            match mode {
                GroupMode::Within if !within => continue,
                GroupMode::Across if within => continue,
                _ => {}
            }
            if within && members[g].len() < 2 {
                return Err(Error::UndefinedMean(g.to_owned()));
            }
            let (mut sum, mut count) = (0.0, 0usize);
            for &u in &members[g] {
                for &v in &members[h] {
                    // unordered pairs inside a group, all pairs across
                    if (within && u < v) || !within {
                        sum += dm.get(u, v);
                        count += 1;
                    }
                }
            }
            out.push(GroupMean { left: g.to_owned(), right: h.to_owned(), mean: sum / count as f64, count });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::PersistencePair;

    fn diagram(points: &[(usize, f64, f64)]) -> PersistenceDiagram {
        let pairs = points.iter().map(|&(dim, birth, death)| PersistencePair { dim, birth, death, generator: None }).collect();
        PersistenceDiagram::from_pairs(pairs, 2, 1.0)
    }

    #[test]
    fn worked_examples() {
        let a = diagram(&[(1, 0.0, 10.0)]);
        let b = diagram(&[(1, 0.0, 10.5)]);
        assert_eq!(bottleneck_distance(&a, &a, 1).unwrap(), 0.0);
        assert_eq!(bottleneck_distance(&a, &b, 1).unwrap(), 0.5);
        assert_eq!(wasserstein_distance(&a, &b, 1, 2.0).unwrap(), 0.5);
        let c = diagram(&[(1, 2.0, 6.0)]);
        let empty = diagram(&[]);
        assert_eq!(bottleneck_distance(&c, &empty, 1).unwrap(), 2.0);
        assert_eq!(wasserstein_distance(&c, &empty, 1, 1.0).unwrap(), 2.0);
        for q in [1.0, 2.0, 3.5] {
            assert_eq!(wasserstein_distance(&a, &a, 1, q).unwrap(), 0.0);
        }
    }

    #[test]
    fn open_bars() {
        let a = diagram(&[(0, 0.0, f64::INFINITY), (0, 0.0, 0.3)]);
        let b = diagram(&[(0, 0.2, f64::INFINITY)]);
        assert_eq!(bottleneck_distance(&a, &b, 0).unwrap(), 0.2);
        let c = diagram(&[(0, 0.0, f64::INFINITY), (0, 0.0, f64::INFINITY)]);
        match bottleneck_distance(&a, &c, 0) {
            Err(Error::Incomparable { dim: 0, left: 1, right: 2 }) => {}
            other => panic!("{other:?}"),
        }
        assert!(wasserstein_distance(&a, &c, 0, 1.0).is_err());
        assert!(bottleneck_distance(&a, &b, 3).is_err());
    }

    #[test]
    fn hungarian_small() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = hungarian(3, &cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("bottleneck".parse::<DistanceKind>().unwrap(), DistanceKind::Bottleneck);
        assert_eq!("wasserstein:2".parse::<DistanceKind>().unwrap(), DistanceKind::Wasserstein(2.0));
        assert!("wasserstein:0.5".parse::<DistanceKind>().is_err());
        assert!("l2".parse::<DistanceKind>().is_err());
        assert_eq!(DistanceKind::Wasserstein(2.0).to_string(), "wasserstein:2");
    }

    #[test]
    fn matrix_and_incomparable_pairs() {
        let d = diagram(&[(0, 0.0, f64::INFINITY), (0, 0.0, 0.5)]);
        let m = distance_matrix(&[("x".into(), d.clone()), ("y".into(), d.clone())], 0, DistanceKind::Bottleneck).unwrap();
        assert_eq!(m.as_slice(), &[0.0; 4]);

        let e = diagram(&[(0, 0.0, f64::INFINITY), (0, 0.0, f64::INFINITY)]);
        let labeled = vec![("x".to_string(), d.clone()), ("y".to_string(), d), ("z".to_string(), e)];
        match distance_matrix(&labeled, 0, DistanceKind::Bottleneck) {
            Err(Error::IncomparablePairs(p)) => {
                assert_eq!(p.len(), 2);
                assert_eq!((p[0].left.as_str(), p[0].right.as_str()), ("x", "z"));
                assert_eq!((p[0].left_infinite, p[0].right_infinite), (1, 2));
            }
            other => panic!("{other:?}"),
        }
        assert!(distance_matrix(&labeled[..1], 0, DistanceKind::Bottleneck).is_err());
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = DiagramDistanceMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            1,
            DistanceKind::Bottleneck,
            vec![0.0, 0.1, 0.2, 0.1, 0.0, 0.3, 0.2, 0.3, 0.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with(",a,b,c\na,0.0,0.1,0.2\n"));
        assert_eq!(DiagramDistanceMatrix::read_csv(&buf[..], 1, DistanceKind::Bottleneck).unwrap(), m);

        let mut report = Vec::new();
        write_pair_report(&[m], &mut report).unwrap();
        let text = String::from_utf8(report).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("b,c,1,bottleneck,0.3"));
    }

    #[test]
    fn group_means() {
        let labels: Vec<String> = ["a1", "a2", "b1", "b2"].iter().map(|s| s.to_string()).collect();
        let mut entries = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    entries[i * 4 + j] = if (i < 2) == (j < 2) { 0.1 } else { 0.9 };
                }
            }
        }
        let dm = DiagramDistanceMatrix::new(labels.clone(), 0, DistanceKind::Bottleneck, entries).unwrap();
        let groups: BTreeMap<String, String> =
            labels.iter().map(|l| (l.clone(), l[..1].to_string())).collect();
        let means = mean_group_distance(&dm, &groups, GroupMode::All).unwrap();
        let got: Vec<_> = means.iter().map(|m| (m.left.as_str(), m.right.as_str(), m.mean, m.count)).collect();
        assert_eq!(got, vec![("a", "a", 0.1, 1), ("a", "b", 0.9, 4), ("b", "b", 0.1, 1)]);
        assert_eq!(mean_group_distance(&dm, &groups, GroupMode::Across).unwrap().len(), 1);

        let solo: BTreeMap<String, String> = labels.iter().map(|l| (l.clone(), l.clone())).collect();
        assert!(matches!(mean_group_distance(&dm, &solo, GroupMode::Within), Err(Error::UndefinedMean(_))));
        assert_eq!(mean_group_distance(&dm, &solo, GroupMode::Across).unwrap().len(), 6);

        let mut partial = groups.clone();
        partial.remove("b2");
        assert!(mean_group_distance(&dm, &partial, GroupMode::All).is_err());
    }
}
