//! Vietoris-Rips filtrations with simplices stored as (value, dimension,
//! combinatorial code) triples.
//!
//! A simplex on sorted vertices `a_0 < ... < a_k` of an `n`-point set is
//! encoded by its rank in the lexicographic order of all `(k+1)`-subsets, so
//! comparing codes within one dimension is the same as comparing vertex lists
//! lexicographically.

use std::cmp::Ordering;
use std::io::{Read, Write};

use crate::embedding::{Metric, PointCloud};
use crate::error::{Error, Result};
use crate::matrix::{angular_distance, Matrix};

/// Default cap on the number of simplices in one filtration.
pub const DEFAULT_SIMPLEX_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, a zero diagonal and finite non-negative entries.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::invalid(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("diagonal entry {i} is not zero")));
            }
            for j in (i + 1)..n {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::invalid(format!("entry ({i},{j}) = {a} is not a distance")));
                }
                if a != b {
                    return Err(Error::invalid(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(DistanceMatrix { n, entries })
    }

    /// Builds a matrix from a function evaluated on `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        DistanceMatrix::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Smallest off-diagonal entry, if any.
    pub fn min_off_diagonal(&self) -> Option<f64> {
        (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .min_by(f64::total_cmp)
    }

    /// Square CSV; the header row and first column carry the labels.
    pub fn write_csv<W: Write>(&self, labels: &[String], out: W) -> Result<()> {
        write_labeled_matrix(labels, self.n, |i, j| self.get(i, j), out)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<(Vec<String>, Self)> {
        let (labels, entries) = read_labeled_matrix(input)?;
        let n = labels.len();
        Ok((labels, DistanceMatrix::new(n, entries)?))
    }
}

pub(crate) fn write_labeled_matrix<W: Write>(
    labels: &[String],
    n: usize,
    get: impl Fn(usize, usize) -> f64,
    out: W,
) -> Result<()> {
    if labels.len() != n {
        return Err(Error::invalid(format!("{} labels for a {n}x{n} matrix", labels.len())));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend((0..n).map(|j| format!("{:?}", get(i, j))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_labeled_matrix<R: Read>(input: R) -> Result<(Vec<String>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let labels: Vec<String> = r.headers()?.iter().skip(1).map(str::to_owned).collect();
    let n = labels.len();
    let mut entries = Vec::with_capacity(n * n);
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != n + 1 {
            return Err(Error::format("matrix csv", format!("row {rows} has {} fields", rec.len())));
        }
        if rec.get(0) != Some(labels.get(rows).map(String::as_str).unwrap_or("")) {
            return Err(Error::format("matrix csv", format!("row {rows} label does not match header")));
        }
        for f in rec.iter().skip(1) {
            let x = f.trim().parse::<f64>().map_err(|e| Error::format("matrix csv", e.to_string()))?;
            entries.push(x);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::format("matrix csv", format!("{rows} rows for {n} labels")));
    }
    Ok((labels, entries))
}

/// Angular (arccos / π) or Euclidean distances between the cloud's points.
pub fn pairwise_distances(cloud: &PointCloud) -> Result<DistanceMatrix> {
    let pts: &Matrix = cloud.points();
    if cloud.is_empty() {
        return Err(Error::invalid("point cloud is empty"));
    }
    if !pts.is_finite() {
        return Err(Error::invalid("point cloud has non-finite coordinates"));
    }
    match cloud.metric() {
        Metric::Angular => DistanceMatrix::from_fn(cloud.len(), |i, j| angular_distance(pts.row(i), pts.row(j))),
        Metric::Euclidean => DistanceMatrix::from_fn(cloud.len(), |i, j| {
            pts.row(i).iter().zip(pts.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        }),
    }
}

/// A simplex with its filtration value (the largest pairwise distance among
/// its vertices).
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub value: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Binomial coefficients `C(v, k)` for `v <= n`, `k <= max_k`.
#[derive(Debug, Clone)]
pub(crate) struct Binomial {
    n: usize,
    max_k: usize,
    table: Vec<u64>,
}

impl Binomial {
    pub(crate) fn new(n: usize, max_k: usize) -> Result<Self> {
        let width = max_k + 1;
        let mut table = vec![0u64; (n + 1) * width];
        for v in 0..=n {
            table[v * width] = 1;
            for k in 1..=max_k.min(v) {
                let a = table[(v - 1) * width + k - 1];
                let b = if k < v { table[(v - 1) * width + k] } else { 0 };
                table[v * width + k] = a.checked_add(b).ok_or_else(|| {
                    Error::invalid(format!("{n} points are too many for simplices of size {max_k}"))
                })?;
            }
        }
        Ok(Binomial { n, max_k, table })
    }

    #[inline]
    pub(crate) fn get(&self, v: usize, k: usize) -> u64 {
        if k > v {
            0
        } else {
            self.table[v * (self.max_k + 1) + k]
        }
    }

    /// Lexicographic rank of a sorted vertex list among subsets of its size.
    pub(crate) fn encode(&self, vertices: &[usize]) -> u64 {
        let s = vertices.len();
        // colex rank of the reflected set {n-1-a}, read in ascending order
        let colex: u64 = vertices
            .iter()
            .rev()
            .enumerate()
            .map(|(i, &a)| self.get(self.n - 1 - a, i + 1))
            .sum();
        self.get(self.n, s) - 1 - colex
    }

    pub(crate) fn decode(&self, code: u64, size: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut rest = self.get(self.n, size) - 1 - code;
        let mut hi = self.n;
        for i in (1..=size).rev() {
            // largest w < hi with C(w, i) <= rest
            let mut lo = i - 1;
            let mut top = hi;
            while top - lo > 1 {
                let mid = (lo + top) / 2;
                if self.get(mid, i) <= rest {
                    lo = mid;
                } else {
                    top = mid;
                }
            }
            rest -= self.get(lo, i);
            out.push(self.n - 1 - lo);
            hi = lo;
        }
    }
}

/// Simplex identity inside one dimension, ordered by (value, code).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Key {
    pub value: f64,
    pub code: u64,
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then(self.code.cmp(&other.code))
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Entry {
    pub value: f64,
    pub code: u64,
    pub dim: u8,
}

impl Entry {
    pub(crate) fn key(&self) -> Key {
        Key { value: self.value, code: self.code }
    }
}

/// The Vietoris-Rips filtration of a distance matrix, sorted by
/// (value, dimension, lexicographic vertex list).
#[derive(Debug, Clone)]
pub struct Filtration {
    dm: DistanceMatrix,
    max_dim: usize,
    max_eps: f64,
    entries: Vec<Entry>,
    binom: Binomial,
}

impl Filtration {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn max_eps(&self) -> f64 {
        self.max_eps
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dm
    }

    pub fn simplex(&self, index: usize) -> Simplex {
        let e = self.entries[index];
        let mut vertices = Vec::new();
        self.binom.decode(e.code, usize::from(e.dim) + 1, &mut vertices);
        Simplex { vertices, value: e.value }
    }

    pub fn simplices(&self) -> impl Iterator<Item = Simplex> + '_ {
        (0..self.entries.len()).map(move |i| self.simplex(i))
    }

    /// Number of simplices in each dimension `0..=max_dim + 1`.
    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_dim + 2];
        for e in &self.entries {
            counts[usize::from(e.dim)] += 1;
        }
        counts
    }

    pub(crate) fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub(crate) fn complex(&self) -> Complex<'_> {
        Complex { dm: &self.dm, binom: &self.binom, max_eps: self.max_eps }
    }
}

/// Geometry shared by the reduction routines: enumerates faces and cofacets
/// of encoded simplices directly from the distance matrix.
pub(crate) struct Complex<'a> {
    dm: &'a DistanceMatrix,
    binom: &'a Binomial,
    max_eps: f64,
}

impl Complex<'_> {
    pub(crate) fn decode(&self, code: u64, dim: usize, out: &mut Vec<usize>) {
        self.binom.decode(code, dim + 1, out);
    }

    pub(crate) fn vertices(&self, key: Key, dim: usize) -> Vec<usize> {
        let mut v = Vec::with_capacity(dim + 1);
        self.decode(key.code, dim, &mut v);
        v
    }

    /// Calls `f` with every cofacet present in the filtration.
    pub(crate) fn for_each_cofacet(&self, key: Key, dim: usize, buf: &mut Vec<usize>, mut f: impl FnMut(Key)) {
        self.decode(key.code, dim, buf);
        let n = self.dm.n();
        let mut merged = Vec::with_capacity(buf.len() + 1);
        for v in 0..n {
            if buf.contains(&v) {
                continue;
            }
            let mut value = key.value;
            for &a in buf.iter() {
                value = value.max(self.dm.get(a, v));
            }
            if value > self.max_eps {
                continue;
            }
            merged.clear();
            let at = buf.partition_point(|&a| a < v);
            merged.extend_from_slice(&buf[..at]);
            merged.push(v);
            merged.extend_from_slice(&buf[at..]);
            f(Key { value, code: self.binom.encode(&merged) });
        }
    }

    /// Calls `f` with every facet (dimension `dim - 1`).
    pub(crate) fn for_each_face(&self, key: Key, dim: usize, buf: &mut Vec<usize>, mut f: impl FnMut(Key)) {
        self.decode(key.code, dim, buf);
        let mut face = Vec::with_capacity(buf.len());
        for skip in 0..buf.len() {
            face.clear();
            face.extend(buf.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &a)| a));
            f(Key { value: self.diameter(&face), code: self.binom.encode(&face) });
        }
    }

    fn diameter(&self, vertices: &[usize]) -> f64 {
        let mut d: f64 = 0.0;
        for (i, &a) in vertices.iter().enumerate() {
            for &b in &vertices[i + 1..] {
                d = d.max(self.dm.get(a, b));
            }
        }
        d
    }
}

/// Enumerates cliques of the `eps`-neighbourhood graph up to `max_size`
/// vertices, depth first over increasing vertex lists. Stops early and
/// returns `false` as soon as `visit` does.
fn enumerate_cliques(
    dm: &DistanceMatrix,
    max_size: usize,
    eps: f64,
    mut visit: impl FnMut(&[usize], f64) -> bool,
) -> bool {
    let n = dm.n();
    // neighbours[u]: sorted v > u with d(u, v) <= eps
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|u| ((u + 1)..n).filter(|&v| dm.get(u, v) <= eps).collect())
        .collect();

    fn rec(
        dm: &DistanceMatrix,
        neighbours: &[Vec<usize>],
        max_size: usize,
        stack: &mut Vec<usize>,
        value: f64,
        candidates: &[usize],
        visit: &mut dyn FnMut(&[usize], f64) -> bool,
    ) -> bool {
        if !visit(stack, value) {
            return false;
        }
        if stack.len() == max_size {
            return true;
        }
        for (i, &v) in candidates.iter().enumerate() {
            let next: Vec<usize> = candidates[i + 1..]
                .iter()
                .copied()
                .filter(|w| neighbours[v].binary_search(w).is_ok())
                .collect();
            let val = stack.iter().fold(value, |acc, &a| acc.max(dm.get(a, v)));
            stack.push(v);
            let ok = rec(dm, neighbours, max_size, stack, val, &next, visit);
            stack.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    let mut stack = Vec::with_capacity(max_size);
    for u in 0..n {
        stack.push(u);
        let ok = rec(dm, &neighbours, max_size, &mut stack, 0.0, &neighbours[u], &mut visit);
        stack.pop();
        if !ok {
            return false;
        }
    }
    true
}

/// Number of simplices up to `max_size` vertices at scale `eps`, counting
/// stops once `limit` is exceeded.
fn count_simplices(dm: &DistanceMatrix, max_size: usize, eps: f64, limit: usize) -> usize {
    let mut count = 0usize;
    enumerate_cliques(dm, max_size, eps, |_, _| {
        count += 1;
        count <= limit
    });
    count
}

/// All simplices of dimension `<= max_dim + 1` with value `<= max_eps`,
/// sorted by (value, dimension, vertices).
pub fn build_vr_filtration(dm: &DistanceMatrix, max_dim: usize, max_eps: f64) -> Result<Filtration> {
    build_vr_filtration_with_budget(dm, max_dim, max_eps, DEFAULT_SIMPLEX_BUDGET)
}

pub fn build_vr_filtration_with_budget(
    dm: &DistanceMatrix,
    max_dim: usize,
    max_eps: f64,
    budget: usize,
) -> Result<Filtration> {
    if !(max_eps > 0.0) {
        return Err(Error::invalid("max_eps must be positive"));
    }
    let max_size = max_dim + 2;
    let binom = Binomial::new(dm.n(), max_size)?;
    let mut entries = Vec::new();
    let completed = enumerate_cliques(dm, max_size, max_eps, |verts, value| {
        if entries.len() >= budget {
            return false;
        }
        entries.push(Entry { value, code: binom.encode(verts), dim: (verts.len() - 1) as u8 });
        true
    });
    if !completed {
        drop(entries);
        return Err(budget_error(dm, max_size, max_eps, budget));
    }
    entries.sort_unstable_by(|a, b| {
        a.value.total_cmp(&b.value).then(a.dim.cmp(&b.dim)).then(a.code.cmp(&b.code))
    });
    Ok(Filtration { dm: dm.clone(), max_dim, max_eps, entries, binom })
}

/// Locates the smallest pairwise distance at which the budget is exceeded.
fn budget_error(dm: &DistanceMatrix, max_size: usize, max_eps: f64, budget: usize) -> Error {
    let mut scales: Vec<f64> = (0..dm.n())
        .flat_map(|i| ((i + 1)..dm.n()).map(move |j| (i, j)))
        .map(|(i, j)| dm.get(i, j))
        .filter(|&d| d <= max_eps)
        .collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    scales.push(max_eps);
    let (mut lo, mut hi) = (0usize, scales.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if count_simplices(dm, max_size, scales[mid], budget) > budget {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Error::BudgetExceeded {
        count: count_simplices(dm, max_size, scales[lo], budget),
        budget,
        eps: scales[lo],
    }
}
