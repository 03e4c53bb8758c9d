//! Persistence pairs and representative cycles over the two-element field.
//!
//! Pairs are found dimension by dimension: union-find for dimension 0, then
//! coboundary reduction (in reverse filtration order) for higher
//! dimensions, clearing every simplex already known to kill a class one
//! dimension down. Coboundary and homology reduction yield the same pairs.
//!
//! Representative cycles come from the boundary-matrix reduction in
//! filtration order, restricted to the columns it actually touches: when the
//! column of a death simplex has a low entry that is not its own birth, that
//! low entry is the birth of an earlier death column, whose reduced form is
//! computed first and memoized. Columns that reduce to zero are never added
//! by the standard algorithm, so skipping them leaves every reduced column
//! identical to the full left-to-right reduction.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use super::filtration::{Complex, Filtration, Key, Simplex};

#[derive(Debug, Clone, PartialEq)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for classes alive at `max_eps`.
    pub death: f64,
    /// A representative cycle, as a list of `dim`-simplices. For a finite
    /// dimension-0 bar this is the reduced boundary of the merging edge (an
    /// even vertex set containing the dying component's root).
    pub generator: Option<Vec<Simplex>>,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_infinite(&self) -> bool {
        self.death == f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
    max_dim: usize,
    max_eps: f64,
    has_generators: bool,
}

impl PersistenceDiagram {
    /// Assembles a diagram from pairs, which are sorted by (dim, birth, death).
    pub fn from_pairs(mut pairs: Vec<PersistencePair>, max_dim: usize, max_eps: f64) -> Self {
        sort_pairs(&mut pairs);
        let has_generators = pairs.iter().any(|p| p.generator.is_some());
        PersistenceDiagram { pairs, max_dim, max_eps, has_generators }
    }

    /// Pairs with positive persistence: the default view.
    pub fn pairs(&self) -> impl Iterator<Item = &PersistencePair> + '_ {
        self.pairs.iter().filter(|p| p.death > p.birth)
    }

    /// Every pair, zero-persistence ones included.
    pub fn all_pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    /// `(birth, death)` of the default-view pairs in one dimension.
    pub fn intervals(&self, dim: usize) -> Vec<(f64, f64)> {
        self.pairs().filter(|p| p.dim == dim).map(|p| (p.birth, p.death)).collect()
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn max_eps(&self) -> f64 {
        self.max_eps
    }

    pub fn has_generators(&self) -> bool {
        self.has_generators
    }

    /// Drops representative cycles.
    pub fn without_generators(mut self) -> Self {
        for p in &mut self.pairs {
            p.generator = None;
        }
        self.has_generators = false;
        self
    }
}

pub(crate) fn sort_pairs(pairs: &mut [PersistencePair]) {
    pairs.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PersistenceOptions {
    /// Compute representative cycles for positive-persistence pairs.
    pub generators: bool,
}

impl Default for PersistenceOptions {
    fn default() -> Self {
        PersistenceOptions { generators: true }
    }
}

pub fn compute_persistence(f: &Filtration) -> PersistenceDiagram {
    compute_persistence_with(f, PersistenceOptions::default())
}

/// Birth/death simplices of one dimension.
struct DimPairs {
    finite: Vec<(Key, Key)>,
    essential: Vec<Key>,
}

pub fn compute_persistence_with(f: &Filtration, options: PersistenceOptions) -> PersistenceDiagram {
    let complex = f.complex();
    let max_dim = f.max_dim();
    let mut by_dim: Vec<Vec<Key>> = vec![Vec::new(); max_dim + 2];
    for e in f.entries() {
        by_dim[usize::from(e.dim)].push(e.key());
    }

    let mut dims: Vec<DimPairs> = Vec::with_capacity(max_dim + 1);
    dims.push(zero_dim_pairs(&complex, &by_dim[0], &by_dim[1]));
    for k in 1..=max_dim {
        let cleared: HashSet<u64> = dims[k - 1].finite.iter().map(|(_, d)| d.code).collect();
        dims.push(cohomology_pairs(&complex, k, &by_dim[k], &cleared));
    }

    let mut pairs = Vec::new();
    let mut generators = Generators::new(&complex);
    // cycles for essential classes of the next dimension, built while the
    // reduced columns of the current one are available
    let mut essential_cycles: HashMap<u64, Vec<Simplex>> = HashMap::new();
    for (k, dp) in dims.iter().enumerate() {
        let want = options.generators;
        let next_essential = dims.get(k + 1).map_or(&[][..], |d| &d.essential[..]);
        if want {
            generators.prepare(k, dp, !next_essential.is_empty());
        }
        for &(b, d) in &dp.finite {
            let generator = (want && d.value > b.value).then(|| generators.finite(d));
            pairs.push(PersistencePair { dim: k, birth: b.value, death: d.value, generator });
        }
        for &b in &dp.essential {
            let generator = match (want, k) {
                (false, _) => None,
                (true, 0) => Some(generators.to_simplices(&[b], 0)),
                (true, _) => essential_cycles.remove(&b.code),
            };
            pairs.push(PersistencePair { dim: k, birth: b.value, death: f64::INFINITY, generator });
        }
        if want {
            essential_cycles = next_essential.iter().map(|&b| (b.code, generators.essential_above(b))).collect();
        }
    }
    sort_pairs(&mut pairs);
    PersistenceDiagram { pairs, max_dim, max_eps: f.max_eps(), has_generators: options.generators }
}

fn zero_dim_pairs(complex: &Complex<'_>, vertices: &[Key], edges: &[Key]) -> DimPairs {
    let n = vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut finite = Vec::new();
    let mut buf = Vec::with_capacity(2);
    for &e in edges {
        complex.decode(e.code, 1, &mut buf);
        let (ru, rv) = (find(&mut parent, buf[0]), find(&mut parent, buf[1]));
        if ru == rv {
            continue;
        }
        // elder rule: the component whose oldest vertex is younger dies
        let (old, young) = if ru < rv { (ru, rv) } else { (rv, ru) };
        parent[young] = old;
        finite.push((vertices[young], e));
    }
    let essential = (0..n).filter(|&v| find(&mut parent, v) == v).map(|v| vertices[v]).collect();
    DimPairs { finite, essential }
}

/// Pops cancelling duplicates and leaves the pivot (smallest cofacet) on top.
fn pivot(heap: &mut BinaryHeap<Reverse<Key>>) -> Option<Key> {
    while let Some(Reverse(top)) = heap.pop() {
        if heap.peek().is_some_and(|Reverse(next)| *next == top) {
            heap.pop();
            continue;
        }
        heap.push(Reverse(top));
        return Some(top);
    }
    None
}

fn cohomology_pairs(complex: &Complex<'_>, dim: usize, simplices: &[Key], cleared: &HashSet<u64>) -> DimPairs {
    // pivot cofacet code -> (column simplex, extra simplices in its V column)
    let mut reduced: HashMap<u64, (Key, Vec<Key>)> = HashMap::new();
    let mut finite = Vec::new();
    let mut essential = Vec::new();
    let mut heap: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    let mut buf = Vec::with_capacity(dim + 1);

    for &sigma in simplices.iter().rev() {
        if cleared.contains(&sigma.code) {
            continue;
        }
        heap.clear();
        complex.for_each_cofacet(sigma, dim, &mut buf, |c| heap.push(Reverse(c)));
        let mut added: Vec<Key> = Vec::new();
        loop {
            match pivot(&mut heap) {
                None => {
                    essential.push(sigma);
                    break;
                }
                Some(p) => match reduced.get(&p.code) {
                    Some((other, extra)) => {
                        for &s in std::iter::once(other).chain(extra.iter()) {
                            complex.for_each_cofacet(s, dim, &mut buf, |c| heap.push(Reverse(c)));
                            added.push(s);
                        }
                    }
                    None => {
                        finite.push((sigma, p));
                        reduced.insert(p.code, (sigma, mod_two(added)));
                        break;
                    }
                },
            }
        }
    }
    finite.reverse();
    essential.reverse();
    DimPairs { finite, essential }
}

/// Keeps the elements occurring an odd number of times, sorted.
fn mod_two(mut chain: Vec<Key>) -> Vec<Key> {
    chain.sort_unstable();
    let mut out = Vec::with_capacity(chain.len());
    for k in chain {
        if out.last() == Some(&k) {
            out.pop();
        } else {
            out.push(k);
        }
    }
    out
}

/// Symmetric difference of two sorted chains.
fn add_chains(a: &[Key], b: &[Key]) -> Vec<Key> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

struct ReducedColumn {
    boundary: Vec<Key>,
    /// The chain of (dim + 1)-simplices whose boundary is `boundary`.
    chain: Option<Vec<Key>>,
}

/// Memoized homology reduction, one dimension at a time.
struct Generators<'c, 'a> {
    complex: &'c Complex<'a>,
    dim: usize,
    track_chains: bool,
    /// birth code -> death key, for the current dimension
    death_of: HashMap<u64, Key>,
    /// death code -> birth key, for the current dimension
    birth_of: HashMap<u64, Key>,
    columns: HashMap<u64, ReducedColumn>,
}

impl<'c, 'a> Generators<'c, 'a> {
    fn new(complex: &'c Complex<'a>) -> Self {
        Generators {
            complex,
            dim: 0,
            track_chains: false,
            death_of: HashMap::new(),
            birth_of: HashMap::new(),
            columns: HashMap::new(),
        }
    }

    /// Switches to dimension `dim`; `track_chains` keeps the V columns needed
    /// for essential classes one dimension up.
    fn prepare(&mut self, dim: usize, pairs: &DimPairs, track_chains: bool) {
        self.columns.clear();
        self.dim = dim;
        self.track_chains = track_chains;
        self.death_of = pairs.finite.iter().map(|&(b, d)| (b.code, d)).collect();
        self.birth_of = pairs.finite.iter().map(|&(b, d)| (d.code, b)).collect();
    }

    fn facets(&self, key: Key, dim: usize) -> Vec<Key> {
        let mut faces = Vec::with_capacity(dim + 1);
        let mut buf = Vec::with_capacity(dim + 1);
        self.complex.for_each_face(key, dim, &mut buf, |f| faces.push(f));
        faces.sort_unstable();
        faces
    }

    /// Reduces the column of death simplex `death` (dimension `dim + 1`).
    fn reduce(&mut self, death: Key) {
        struct Frame {
            key: Key,
            target: Key,
            boundary: Vec<Key>,
            chain: Vec<Key>,
        }
        let new_frame = |this: &Self, key: Key| Frame {
            key,
            target: this.birth_of[&key.code],
            boundary: this.facets(key, this.dim + 1),
            chain: vec![key],
        };
        let mut stack = vec![new_frame(self, death)];
        while let Some(frame) = stack.last_mut() {
            let low = *frame.boundary.last().expect("death column cannot reduce to zero");
            if low == frame.target {
                let frame = stack.pop().unwrap();
                let chain = self.track_chains.then(|| mod_two(frame.chain));
                self.columns.insert(frame.key.code, ReducedColumn { boundary: frame.boundary, chain });
                continue;
            }
            let earlier = *self.death_of.get(&low.code).expect("low entry must be an earlier birth");
            debug_assert!(earlier < frame.key);
            match self.columns.get(&earlier.code) {
                Some(col) => {
                    frame.boundary = add_chains(&frame.boundary, &col.boundary);
                    if let Some(chain) = &col.chain {
                        frame.chain.extend_from_slice(chain);
                    }
                }
                None => {
                    let next = new_frame(self, earlier);
                    stack.push(next);
                }
            }
        }
    }

    fn to_simplices(&self, chain: &[Key], dim: usize) -> Vec<Simplex> {
        chain
            .iter()
            .map(|k| Simplex { vertices: self.complex.vertices(*k, dim), value: k.value })
            .collect()
    }

    fn finite(&mut self, death: Key) -> Vec<Simplex> {
        if !self.columns.contains_key(&death.code) {
            self.reduce(death);
        }
        let boundary = &self.columns[&death.code].boundary;
        self.to_simplices(boundary, self.dim)
    }

    /// A cycle for an essential class born at the `(dim + 1)`-simplex
    /// `birth`: the simplex plus the V columns of the death simplices that
    /// cancel its boundary.
    fn essential_above(&mut self, birth: Key) -> Vec<Simplex> {
        debug_assert!(self.track_chains);
        let mut boundary = self.facets(birth, self.dim + 1);
        let mut chain = vec![birth];
        while let Some(&low) = boundary.last() {
            let earlier = *self.death_of.get(&low.code).expect("boundary of a positive simplex reduces to zero");
            if !self.columns.contains_key(&earlier.code) {
                self.reduce(earlier);
            }
            let col = &self.columns[&earlier.code];
            boundary = add_chains(&boundary, &col.boundary);
            chain.extend_from_slice(col.chain.as_ref().expect("chains are tracked"));
        }
        self.to_simplices(&mod_two(chain), self.dim + 1)
    }
}
