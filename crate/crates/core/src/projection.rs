//! Exact t-SNE on a precomputed distance matrix, plus scatter-plot export.
//!
//! Points are processed in label order and each point's initial position is
//! drawn from a stream keyed by its label, so permuting the input permutes
//! the output rows and nothing else.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diagram_distance::DiagramDistanceMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{stable_hash, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Iterations with exaggerated affinities and momentum 0.5; momentum is
    /// 0.8 afterwards.
    pub exaggeration_iterations: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 10.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            seed: 0,
        }
    }
}

impl TsneParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 3 {
            return Err(Error::invalid(format!("t-SNE needs at least 3 points, got {n}")));
        }
        if !(self.perplexity >= 1.0 && self.perplexity < n as f64) {
            return Err(Error::invalid(format!("perplexity {} outside [1, {n})", self.perplexity)));
        }
        if self.iterations < self.exaggeration_iterations || self.iterations < 250 {
            return Err(Error::invalid(format!("iterations = {} (need >= 250)", self.iterations)));
        }
        if !(self.learning_rate > 0.0) || !(self.early_exaggeration >= 1.0) {
            return Err(Error::invalid("learning_rate must be positive and early_exaggeration >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection2D {
    pub labels: Vec<String>,
    /// `n × 2`, rows aligned with `labels`.
    pub coords: Matrix,
    /// KL(P ‖ Q) after the last iteration.
    pub kl_divergence: f64,
    /// KL(P ‖ Q) after every iteration (unexaggerated P).
    pub kl_trace: Vec<f64>,
}

const ENTROPY_TOL: f64 = 1e-5;
const SEARCH_STEPS: usize = 200;

/// Conditional affinities `P(j | i) ∝ exp(-β_i d_ij²)` for one row, with
/// `β_i` found by bisection so that the row's entropy is `ln(perplexity)`.
/// Entropy ranges over `[ln(#nearest ties), ln(n - 1)]`; a target outside it
/// (equidistant points, say) gets the closest attainable row.
fn conditional_row(d: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let n = d.len();
    let target = perplexity.ln();
    let d2: Vec<f64> = d.iter().map(|x| x * x).collect();
    let min = d2.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).fold(f64::INFINITY, f64::min);
    let mut p = vec![0.0; n];
    let eval = |beta: f64, p: &mut [f64]| -> f64 {
        let mut sum = 0.0;
        for j in 0..n {
            p[j] = if j == i { 0.0 } else { (-beta * (d2[j] - min)).exp() };
            sum += p[j];
        }
        let mut h = 0.0;
        for x in p.iter_mut() {
            *x /= sum;
            if *x > 0.0 {
                h -= *x * x.ln();
            }
        }
        h
    };
    // entropy decreases in β
    let (mut lo, mut hi, mut beta) = (0.0f64, f64::INFINITY, 1.0f64);
    let mut h = eval(beta, &mut p);
    for _ in 0..SEARCH_STEPS {
        if (h - target).abs() < ENTROPY_TOL {
            break;
        }
        if h > target {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
        h = eval(beta, &mut p);
    }
    p
}

/// Symmetrized affinities `P_ij = (P(j|i) + P(i|j)) / 2n`, row-major.
/// Perplexities above `n - 1` exceed every attainable entropy and are
/// rejected.
pub fn affinities(distances: &[f64], n: usize, perplexity: f64) -> Result<Vec<f64>> {
    if distances.len() != n * n || distances.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("distance matrix must be n × n and finite"));
    }
    if n < 2 || !(perplexity >= 1.0 && perplexity <= (n - 1) as f64) {
        return Err(Error::invalid(format!("perplexity {perplexity} infeasible for {n} points (max {})", n.max(1) - 1)));
    }
    let mut cond = Vec::with_capacity(n * n);
    for i in 0..n {
        cond.extend(conditional_row(&distances[i * n..(i + 1) * n], i, perplexity));
    }
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64);
        }
    }
    Ok(p)
}

/// Student-t kernel values `1 / (1 + |y_i - y_j|²)` (zero diagonal) and their sum.
fn kernel(y: &[f64], n: usize) -> (Vec<f64>, f64) {
    let mut num = vec![0.0; n * n];
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (y[2 * i] - y[2 * j], y[2 * i + 1] - y[2 * j + 1]);
            let k = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = k;
            num[j * n + i] = k;
            z += 2.0 * k;
        }
    }
    (num, z)
}

fn kl_divergence(p: &[f64], num: &[f64], z: f64) -> f64 {
    p.iter()
        .zip(num)
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &k)| pij * (pij / (k / z).max(f64::MIN_POSITIVE)).ln())
        .sum::<f64>()
        .max(0.0)
}

pub fn tsne_precomputed(dm: &DiagramDistanceMatrix, params: &TsneParams) -> Result<Projection2D> {
    tsne(dm.labels(), dm.as_slice(), params)
}

/// t-SNE on any labeled symmetric distance matrix (row-major, `n × n`).
pub fn tsne(labels: &[String], distances: &[f64], params: &TsneParams) -> Result<Projection2D> {
    let n = labels.len();
    params.validate(n)?;
    if distances.len() != n * n {
        return Err(Error::invalid(format!("{} distances for {n} labels", distances.len())));
    }
    let distinct: BTreeSet<&String> = labels.iter().collect();
    if distinct.len() != n {
        return Err(Error::invalid("duplicate labels"));
    }

    // work in label order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    let sorted: Vec<f64> = (0..n * n).map(|k| distances[order[k / n] * n + order[k % n]]).collect();
    let p = affinities(&sorted, n, params.perplexity)?;

    let mut y = Vec::with_capacity(2 * n);
    for &o in &order {
        let mut rng = stream(params.seed, "tsne-init", stable_hash(labels[o].as_bytes()));
        for _ in 0..2 {
            let z: f64 = StandardNormal.sample(&mut rng);
            y.push(1e-4 * z);
        }
    }
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut grad = vec![0.0; 2 * n];
    let mut kl_trace = Vec::with_capacity(params.iterations);
    let mut previous = y.clone();
    // step multiplier, halved whenever a step is undone
    let mut scale = 1.0f64;

    for iter in 0..params.iterations {
        let early = iter < params.exaggeration_iterations;
        let exaggeration = if early { params.early_exaggeration } else { 1.0 };
        let momentum = if early { 0.5 } else { 0.8 };

        let (num, z) = kernel(&y, n);
        grad.fill(0.0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let k = num[i * n + j];
                let m = 4.0 * (exaggeration * p[i * n + j] - k / z) * k;
                grad[2 * i] += m * (y[2 * i] - y[2 * j]);
                grad[2 * i + 1] += m * (y[2 * i + 1] - y[2 * j + 1]);
            }
        }
        previous.copy_from_slice(&y);
        for c in 0..2 * n {
            gains[c] = if (grad[c] > 0.0) != (update[c] > 0.0) { gains[c] + 0.2 } else { (gains[c] * 0.8).max(0.01) };
            update[c] = momentum * update[c] - scale * params.learning_rate * gains[c] * grad[c];
            y[c] += update[c];
        }
        for axis in 0..2 {
            let mean = (0..n).map(|i| y[2 * i + axis]).sum::<f64>() / n as f64;
            (0..n).for_each(|i| y[2 * i + axis] -= mean);
        }
        let (num, z) = kernel(&y, n);
        let kl = kl_divergence(&p, &num, z);
        match kl_trace.last() {
            // past the exaggeration phase a step that raises KL is undone and
            // the momentum dropped, so the objective never climbs back
            Some(&last) if !early && kl > last => {
                y.copy_from_slice(&previous);
                update.fill(0.0);
                scale *= 0.5;
                kl_trace.push(last);
            }
            _ => {
                scale = (scale * 1.25).min(1.0);
                kl_trace.push(kl);
            }
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("t-SNE diverged (non-finite coordinates)"));
    }

    // back to input order
    let mut coords = Matrix::zeros(n, 2);
    for (k, &o) in order.iter().enumerate() {
        coords.row_mut(o).copy_from_slice(&y[2 * k..2 * k + 2]);
    }
    Ok(Projection2D {
        labels: labels.to_vec(),
        coords,
        kl_divergence: *kl_trace.last().expect("at least one iteration"),
        kl_trace,
    })
}

fn group_of<'g>(groups: &'g BTreeMap<String, String>, label: &str) -> Result<&'g str> {
    if groups.is_empty() {
        return Err(Error::invalid("group map is empty"));
    }
    groups.get(label).map(String::as_str).ok_or_else(|| Error::invalid(format!("label '{label}' has no group")))
}

/// `label,group,x,y` rows in projection order.
pub fn write_scatter_csv<W: Write>(proj: &Projection2D, groups: &BTreeMap<String, String>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "group", "x", "y"])?;
    for (i, label) in proj.labels.iter().enumerate() {
        let row = proj.coords.row(i);
        w.write_record([label.as_str(), group_of(groups, label)?, &format!("{:?}", row[0]), &format!("{:?}", row[1])])?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// SVG scatter: one circle per point coloured by group, and a legend with
/// one square swatch per group.
pub fn render_scatter_svg(proj: &Projection2D, groups: &BTreeMap<String, String>) -> Result<String> {
    let point_groups = proj.labels.iter().map(|l| group_of(groups, l)).collect::<Result<Vec<_>>>()?;
    let names: Vec<&str> = point_groups.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let colour = |g: &str| PALETTE[names.binary_search(&g).expect("group is listed") % PALETTE.len()];

    let (w, h, margin, legend_w) = (640.0, 480.0, 30.0, 140.0);
    let (plot_w, plot_h) = (w - legend_w - 2.0 * margin, h - 2.0 * margin);
    let xs: Vec<f64> = (0..proj.coords.rows()).map(|i| proj.coords.row(i)[0]).collect();
    let ys: Vec<f64> = (0..proj.coords.rows()).map(|i| proj.coords.row(i)[1]).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo { (lo, hi - lo) } else { (lo - 0.5, 1.0) }
    };
    let ((x0, xr), (y0, yr)) = (span(&xs), span(&ys));

    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r##"<rect x="{margin}" y="{margin}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#cccccc"/>"##
    )
    .unwrap();
    for (i, label) in proj.labels.iter().enumerate() {
        let cx = margin + (xs[i] - x0) / xr * plot_w;
        let cy = margin + plot_h - (ys[i] - y0) / yr * plot_h;
        writeln!(
            svg,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="4" fill="{}"><title>{}</title></circle>"#,
            colour(point_groups[i]),
            escape(label)
        )
        .unwrap();
    }
    let lx = w - legend_w;
    for (k, g) in names.iter().enumerate() {
        let ly = margin + 20.0 * k as f64;
        writeln!(svg, r#"<rect x="{lx}" y="{ly}" width="10" height="10" fill="{}"/>"#, colour(g)).unwrap();
        writeln!(svg, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#, lx + 16.0, ly + 9.0, escape(g))
            .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
