//! Independent reference implementations and data generators shared by the
//! integration tests. Nothing here calls into the code under test except to
//! build inputs.
#![allow(dead_code)]

use creodrift::embedding::{Metric, PointCloud};
use creodrift::matrix::Matrix;
use creodrift::topology::DistanceMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ------------------------------------------------------------ point clouds

pub fn random_cloud(rng: &mut impl Rng, n: usize, d: usize, metric: Metric) -> PointCloud {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    PointCloud::normalized(labels, Matrix::from_rows(&rows), metric).unwrap()
}

/// Uniform sample of the unit sphere `S^{d-1}`.
pub fn sphere(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / r).collect()
        })
        .collect()
}

pub fn cloud_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::from("word");
    for i in 1..=rows[0].len() {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!("p{i}"));
        for x in r {
            out.push_str(&format!(",{x:?}"));
        }
        out.push('\n');
    }
    out
}

/// Symmetric matrix with zero diagonal and entries uniform in `[lo, hi)`.
pub fn random_distances(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut e = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let x = rng.random_range(lo..hi);
            e[i * n + j] = x;
            e[j * n + i] = x;
        }
    }
    e
}

// ------------------------------------------------- persistence (reference)

/// Rank over GF(2) of a set of column bit-vectors.
fn gf2_rank(mut cols: Vec<Vec<u64>>) -> usize {
    let mut rank = 0;
    let words = cols.first().map_or(0, Vec::len);
    for bit in 0..words * 64 {
        let (w, m) = (bit / 64, 1u64 << (bit % 64));
        let Some(p) = (rank..cols.len()).find(|&c| cols[c][w] & m != 0) else { continue };
        cols.swap(rank, p);
        let pivot = cols[rank].clone();
        for c in cols.iter_mut().skip(rank + 1) {
            if c[w] & m != 0 {
                for (x, y) in c.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Persistence diagram of the Vietoris-Rips filtration by brute force:
/// explicit boundary matrices, ranks over GF(2), and persistent Betti numbers
/// `β^{i,j}_k` at every pair of critical values, turned into bar
/// multiplicities by inclusion-exclusion. Returns sorted `(dim, birth,
/// death)` with zero-length bars omitted.
pub fn reference_diagram(dm: &[f64], n: usize, max_dim: usize, max_eps: f64) -> Vec<(usize, f64, f64)> {
    let value = |s: &[usize]| {
        let mut v = 0.0f64;
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                v = v.max(dm[s[a] * n + s[b]]);
            }
        }
        v
    };
    // simplices per dimension 0..=max_dim+1 with their values
    let by_dim: Vec<Vec<(Vec<usize>, f64)>> = (0..=max_dim + 1)
        .map(|k| {
            subsets(n, k + 1)
                .into_iter()
                .map(|s| {
                    let v = value(&s);
                    (s, v)
                })
                .filter(|(_, v)| *v <= max_eps)
                .collect()
        })
        .collect();
    let mut crit: Vec<f64> = by_dim.iter().flatten().map(|(_, v)| *v).collect();
    crit.sort_by(f64::total_cmp);
    crit.dedup();
    let m = crit.len();

    // boundary columns of the (k+1)-simplices, as bit-vectors over k-simplices
    let boundary = |k: usize| -> Vec<(f64, Vec<u64>)> {
        let rows = &by_dim[k];
        let words = rows.len().div_ceil(64).max(1);
        by_dim[k + 1]
            .iter()
            .map(|(s, v)| {
                let mut col = vec![0u64; words];
                for skip in 0..s.len() {
                    let mut face = s.clone();
                    face.remove(skip);
                    let r = rows.iter().position(|(f, _)| *f == face).expect("face present");
                    col[r / 64] ^= 1 << (r % 64);
                }
                (*v, col)
            })
            .collect()
    };

    let mut out = Vec::new();
    for k in 0..=max_dim {
        let rows = &by_dim[k];
        let down = if k == 0 { Vec::new() } else { boundary(k - 1) };
        let up = boundary(k);
        // dim Z_k(K_i)
        let cycles: Vec<i64> = (0..m)
            .map(|i| {
                let count = rows.iter().filter(|(_, v)| *v <= crit[i]).count();
                let r = gf2_rank(down.iter().filter(|(v, _)| *v <= crit[i]).map(|(_, c)| c.clone()).collect());
                (count - r) as i64
            })
            .collect();
        // β^{i,j} = dim Z_k(K_i) - dim(B_k(K_j) ∩ C_k(K_i))
        let beta = |i: usize, j: usize| -> i64 {
            let cols: Vec<Vec<u64>> = up.iter().filter(|(v, _)| *v <= crit[j]).map(|(_, c)| c.clone()).collect();
            let rank_b = gf2_rank(cols.clone()) as i64;
            let outside: Vec<Vec<u64>> = cols
                .into_iter()
                .map(|mut c| {
                    for (r, (_, v)) in rows.iter().enumerate() {
                        if *v <= crit[i] {
                            c[r / 64] &= !(1 << (r % 64));
                        }
                    }
                    c
                })
                .collect();
            let rank_out = gf2_rank(outside) as i64;
            cycles[i] - (rank_b - rank_out)
        };
        let mut table = vec![vec![0i64; m]; m];
        for i in 0..m {
            for j in i..m {
                table[i][j] = beta(i, j);
            }
        }
        let b = |i: isize, j: usize| if i < 0 { 0 } else { table[i as usize][j] };
        for i in 0..m {
            for j in i + 1..m {
                let mult = b(i as isize, j - 1) - b(i as isize - 1, j - 1) - b(i as isize, j) + b(i as isize - 1, j);
                assert!(mult >= 0, "negative multiplicity");
                for _ in 0..mult {
                    out.push((k, crit[i], crit[j]));
                }
            }
            let open = b(i as isize, m - 1) - b(i as isize - 1, m - 1);
            for _ in 0..open {
                out.push((k, crit[i], f64::INFINITY));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    out
}

pub fn diagram_triples(d: &creodrift::topology::PersistenceDiagram) -> Vec<(usize, f64, f64)> {
    let mut v: Vec<_> = d.pairs().map(|p| (p.dim, p.birth, p.death)).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    v
}

pub fn distance_matrix(dm: &[f64], n: usize) -> DistanceMatrix {
    DistanceMatrix::new(n, dm.to_vec()).unwrap()
}

// ----------------------------------------------------- matching (reference)

fn linf(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).abs().max((p.1 - q.1).abs())
}

fn to_diag(p: (f64, f64)) -> f64 {
    (p.1 - p.0) / 2.0
}

/// Every partial matching of `a` into `b` (unmatched points go to the
/// diagonal), folded with `combine` and minimized.
fn all_matchings(a: &[(f64, f64)], b: &[(f64, f64)], combine: &dyn Fn(f64, f64) -> f64, zero: f64) -> f64 {
    fn rec(
        i: usize,
        a: &[(f64, f64)],
        b: &[(f64, f64)],
        used: &mut Vec<bool>,
        acc: f64,
        combine: &dyn Fn(f64, f64) -> f64,
        best: &mut f64,
    ) {
        if i == a.len() {
            let mut total = acc;
            for (j, q) in b.iter().enumerate() {
                if !used[j] {
                    total = combine(total, to_diag(*q));
                }
            }
            *best = best.min(total);
            return;
        }
        rec(i + 1, a, b, used, combine(acc, to_diag(a[i])), combine, best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                rec(i + 1, a, b, used, combine(acc, linf(a[i], b[j])), combine, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, a, b, &mut vec![false; b.len()], zero, combine, &mut best);
    best
}

pub fn brute_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    all_matchings(a, b, &|x, y| x.max(y), 0.0)
}

pub fn brute_wasserstein(a: &[(f64, f64)], b: &[(f64, f64)], q: f64) -> f64 {
    all_matchings(a, b, &|x, y| x + y.powf(q), 0.0).powf(1.0 / q)
}

pub fn random_bars(rng: &mut impl Rng, max_points: usize) -> Vec<(f64, f64)> {
    let n = rng.random_range(0..=max_points);
    (0..n)
        .map(|_| {
            // coarse grid so ties and shared coordinates occur
            let b = f64::from(rng.random_range(0..20u32)) / 8.0;
            let len = f64::from(rng.random_range(1..20u32)) / 8.0;
            (b, b + len)
        })
        .collect()
}

// ------------------------------------------------------------- statistics

/// Lloyd's algorithm with farthest-point initialization.
pub fn kmeans(points: &[[f64; 2]], k: usize, iterations: usize) -> Vec<usize> {
    let d2 = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let mut centers = vec![points[0]];
    while centers.len() < k {
        let far = points
            .iter()
            .max_by(|a, b| {
                let da = centers.iter().map(|c| d2(a, c)).fold(f64::INFINITY, f64::min);
                let db = centers.iter().map(|c| d2(b, c)).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db)
            })
            .unwrap();
        centers.push(*far);
    }
    let mut assign = vec![0; points.len()];
    for _ in 0..iterations {
        for (i, p) in points.iter().enumerate() {
            assign[i] = (0..k).min_by(|&a, &b| d2(p, &centers[a]).total_cmp(&d2(p, &centers[b]))).unwrap();
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<_> = points.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                let m = members.len() as f64;
                *center = [members.iter().map(|p| p[0]).sum::<f64>() / m, members.iter().map(|p| p[1]).sum::<f64>() / m];
            }
        }
    }
    assign
}

/// Fraction of agreement under the best relabeling of three clusters.
pub fn agreement3(truth: &[usize], found: &[usize]) -> f64 {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    perms
        .iter()
        .map(|p| truth.iter().zip(found).filter(|(&t, &f)| p[f] == t).count())
        .max()
        .unwrap() as f64
        / truth.len() as f64
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

// ----------------------------------------------------------- synthetic text

/// Two communities over six monthly windows. Both draw from a shared pool;
/// a growing share of each month's tokens (0, 20%, ..., 100%) comes from a
/// community-specific topic set: `left` uses its topic words in tight
/// co-occurring groups of four, `right` scatters its own. With `identical`
/// both communities receive the very same documents.
pub fn divergence_dump(seed: u64, identical: bool) -> String {
    let mut rng = rng(seed);
    let shared: Vec<String> = (0..40).map(|i| format!("shared{i}")).collect();
    let topic_left: Vec<String> = (0..40).map(|i| format!("alpha{i}")).collect();
    let topic_right: Vec<String> = (0..40).map(|i| format!("beta{i}")).collect();
    let mut out = String::new();
    let june_2015 = 1_433_116_800i64;
    for month in 0..6u64 {
        let f = month as f64 / 5.0;
        let month_seed: u64 = rng.random();
        for (community, topic) in [("left", &topic_left), ("right", &topic_right)] {
            let mut docs = if identical { self::rng(month_seed) } else { self::rng(rng.random()) };
            for d in 0..400 {
                let group = docs.random_range(0..10);
                let words: Vec<&str> = (0..12)
                    .map(|_| {
                        if docs.random::<f64>() < f {
                            if community == "left" && !identical {
                                topic[group * 4 + docs.random_range(0..4)].as_str()
                            } else {
                                topic[docs.random_range(0..40)].as_str()
                            }
                        } else {
                            shared[docs.random_range(0..40)].as_str()
                        }
                    })
                    .collect();
                let ts = june_2015 + month as i64 * 31 * 86_400 + 3_600 + d;
                out.push_str(&format!(
                    "{{\"author\":\"u{d}\",\"subreddit\":\"{community}\",\"created_utc\":{ts},\"body\":\"{}\"}}\n",
                    words.join(" ")
                ));
            }
        }
    }
    out
}

pub const DIVERGENCE_MANIFEST: &str = "experiment = \"subreddit-divergence\"
seed = SEED
[inputs]
dumps = [\"dump.jsonl\"]
[embedding]
dim = 16
window = 3
epochs = 8
min_count = 3
top_n = 40
[topology]
max_dim = 0
max_eps = 3.2
";
