//! Shared fixtures and independent reference computations for tests.
#![allow(dead_code)]

use ndarray::Array2;
use pathlasso::model::center;
use pathlasso::{expand_and_standardize, ExpansionMap, GenotypeMatrix, PathwayModel, StandardizedDesign};
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random 0/1/2 genotypes with no constant column.
pub fn random_genotypes(rng: &mut impl Rng, n: usize, p: usize) -> GenotypeMatrix {
    let mut values = Array2::<u8>::zeros((n, p));
    for j in 0..p {
        let maf = rng.random_range(0.1..0.5);
        loop {
            for i in 0..n {
                let a = rng.random_bool(maf) as u8 + rng.random_bool(maf) as u8;
                values[[i, j]] = a;
            }
            let col = values.column(j);
            if col.iter().any(|&v| v != col[0]) {
                break;
            }
        }
    }
    let ids = (0..p).map(|j| format!("s{j}")).collect();
    GenotypeMatrix::from_counts_minor(values, ids).expect("valid genotypes").0
}

/// Random groups over `p` SNPs; with `overlap` the groups are drawn
/// independently so they share SNPs, otherwise they partition a prefix.
pub fn random_groups(rng: &mut impl Rng, p: usize, n_groups: usize, max_size: usize, overlap: bool) -> Vec<Vec<usize>> {
    let mut next = 0;
    (0..n_groups)
        .map(|k| {
            let size = rng.random_range(1..=max_size);
            if overlap {
                let mut g = sample(rng, p, size.min(p)).into_vec();
                g.sort_unstable();
                g
            } else {
                let size = size.min(p - next - (n_groups - k - 1)).max(1);
                let g: Vec<usize> = (next..next + size).collect();
                next += size;
                g
            }
        })
        .collect()
}

pub struct Instance {
    pub geno: GenotypeMatrix,
    pub model: PathwayModel,
    pub design: StandardizedDesign,
    pub y: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Small random problem: a few SNPs carry signal, the rest is noise.
pub fn random_instance(seed: u64, n: usize, p: usize, n_groups: usize, max_size: usize, overlap: bool) -> Instance {
    let mut r = rng(seed);
    let geno = random_genotypes(&mut r, n, p);
    let groups = random_groups(&mut r, p, n_groups, max_size, overlap);
    let names = (0..n_groups).map(|l| format!("G{l}")).collect();
    let mut model = PathwayModel::with_size_weights(names, groups).expect("groups");
    let w: Vec<f64> = model.weights().iter().map(|w| w * r.random_range(0.5..1.5)).collect();
    model.set_weights(w.clone()).expect("weights");
    let causal: Vec<usize> = sample(&mut r, p, 2.min(p)).into_vec();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let signal: f64 = causal.iter().map(|&k| geno.values()[[i, k]] as f64).sum();
            let noise: f64 = StandardNormal.sample(&mut r);
            0.7 * signal + noise
        })
        .collect();
    let map = ExpansionMap::build(&model, p).expect("map");
    let (design, yc) = expand_and_standardize(&geno, &map, &y).expect("design");
    Instance {
        geno,
        model,
        design,
        y: yc,
        weights: w,
    }
}

fn xb(design: &StandardizedDesign, beta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; design.n_rows()];
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            out.iter_mut().zip(design.column(j)).for_each(|(o, x)| *o += b * x);
        }
    }
    out
}

fn xt(design: &StandardizedDesign, r: &[f64]) -> Vec<f64> {
    (0..design.n_cols())
        .map(|j| design.column(j).iter().zip(r).map(|(x, v)| x * v).sum())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Group lasso objective computed from scratch.
pub fn reference_objective(design: &StandardizedDesign, y: &[f64], beta: &[f64], lambda: f64, w: &[f64]) -> f64 {
    let fit = xb(design, beta);
    let rss: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
    let pen: f64 = (0..design.n_blocks())
        .map(|l| w[l] * norm(&beta[design.block(l)]))
        .sum();
    0.5 * rss + lambda * pen
}

/// Largest eigenvalue of a symmetric matrix by power iteration.
fn top_eigenvalue(g: &Array2<f64>) -> f64 {
    let p = g.nrows();
    let mut v = ndarray::Array1::from_elem(p, 1.0 / (p as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..500 {
        let u = g.dot(&v);
        est = u.dot(&u).sqrt();
        if est == 0.0 {
            return 1.0;
        }
        v = u / est;
    }
    est * 1.01
}

/// Accelerated proximal gradient with adaptive restart, iterated until
/// successive objectives agree to `tol` relative for 20 steps. Works on the
/// Gram matrix, so it shares no code with the coordinate descent solver.
pub fn prox_grad_oracle(design: &StandardizedDesign, y: &[f64], lambda: f64, w: &[f64], tol: f64) -> (Vec<f64>, f64) {
    let p = design.n_cols();
    let gram = Array2::from_shape_fn((p, p), |(a, b)| {
        design.column(a).iter().zip(design.column(b)).map(|(x, z)| x * z).sum::<f64>()
    });
    let xty = ndarray::Array1::from_vec(xt(design, y));
    let yty: f64 = y.iter().map(|v| v * v).sum();
    let blocks: Vec<_> = (0..design.n_blocks()).map(|l| design.block(l)).collect();
    let objective = |b: &ndarray::Array1<f64>| {
        let quad = 0.5 * yty - b.dot(&xty) + 0.5 * b.dot(&gram.dot(b));
        let pen: f64 = blocks
            .iter()
            .enumerate()
            .map(|(l, r)| w[l] * b.slice(ndarray::s![r.clone()]).dot(&b.slice(ndarray::s![r.clone()])).sqrt())
            .sum();
        quad + lambda * pen
    };
    let step = 1.0 / top_eigenvalue(&gram);
    let mut beta = ndarray::Array1::<f64>::zeros(p);
    let mut z = beta.clone();
    let mut t = 1.0f64;
    let mut obj = objective(&beta);
    let mut quiet = 0;
    for _ in 0..2_000_000 {
        let grad = &xty - &gram.dot(&z);
        let mut next = &z + &(grad * step);
        for (l, r) in blocks.iter().enumerate() {
            let mut blk = next.slice_mut(ndarray::s![r.clone()]);
            let nb = blk.dot(&blk).sqrt();
            let shrink = if nb > 0.0 { (1.0 - step * lambda * w[l] / nb).max(0.0) } else { 0.0 };
            blk.mapv_inplace(|v| v * shrink);
        }
        let new_obj = objective(&next);
        let change = (obj - new_obj) / obj.abs().max(1e-300);
        if change < -tol {
            // restart momentum; increases at rounding level are accepted
            t = 1.0;
            z = beta.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &next + &((&next - &beta) * ((t - 1.0) / t_next));
        t = t_next;
        beta = next;
        obj = new_obj;
        quiet = if change.abs() < tol { quiet + 1 } else { 0 };
        if quiet >= 20 {
            break;
        }
    }
    let beta = beta.to_vec();
    let obj = reference_objective(design, y, &beta, lambda, w);
    (beta, obj)
}

/// Blocks with a nonzero oracle coefficient vector, ignoring entries below
/// `thresh` in norm.
pub fn support(design: &StandardizedDesign, beta: &[f64], thresh: f64) -> Vec<usize> {
    (0..design.n_blocks())
        .filter(|&l| norm(&beta[design.block(l)]) > thresh)
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x1` and `x2 = x1 + 0.3 z` in separate groups with `y ∝ z`: only the
/// second group passes the initial screen, and the first enters once the
/// second is fitted.
pub fn suppression_instance() -> (StandardizedDesign, Vec<f64>, Vec<f64>) {
    let n = 120;
    let mut r = rng(99);
    let x1 = center(&(0..n).map(|_| StandardNormal.sample(&mut r)).collect::<Vec<f64>>()).0;
    let mut z = center(&(0..n).map(|_| StandardNormal.sample(&mut r)).collect::<Vec<f64>>()).0;
    // make z exactly orthogonal to x1 so the screen rejects x1's group
    let proj = dot(&z, &x1) / dot(&x1, &x1);
    z.iter_mut().zip(&x1).for_each(|(a, b)| *a -= proj * b);
    let mut x = Array2::<f64>::zeros((n, 4));
    for i in 0..n {
        x[[i, 0]] = x1[i] + 0.3 * z[i];
        x[[i, 1]] = x1[i];
        x[[i, 2]] = StandardNormal.sample(&mut r);
        x[[i, 3]] = StandardNormal.sample(&mut r);
    }
    let y: Vec<f64> = z.iter().map(|v| 0.3 * v).collect();
    let design = StandardizedDesign::from_expanded(x.view(), vec![0..1, 1..2, 2..4]).unwrap();
    (design, center(&y).0, vec![1.0, 1.0, 2f64.sqrt()])
}

/// Independent Hardy-Weinberg genotypes at fixed allele frequencies.
pub fn population_sample(mafs: &[f64], n: usize, seed: u64) -> GenotypeMatrix {
    let mut r = rng(seed);
    let mut values = Array2::<u8>::zeros((n, mafs.len()));
    for (j, &m) in mafs.iter().enumerate() {
        let draw = Binomial::new(2, m).unwrap();
        values.column_mut(j).iter_mut().for_each(|v| *v = draw.sample(&mut r) as u8);
    }
    let ids = (0..mafs.len()).map(|j| format!("s{j}")).collect();
    GenotypeMatrix::new(values, ids).unwrap()
}
