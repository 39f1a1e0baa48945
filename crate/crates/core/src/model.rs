//! Genotypes, pathway group structure, overlap expansion and column
//! standardization.
//!
//! Overlapping pathways are made block-separable by giving every pathway its
//! own copy of each SNP it contains: the expanded design is the column-wise
//! concatenation `[X_G1, X_G2, ..., X_GL]`, so a SNP shared by `k` pathways
//! occupies `k` expanded slots.

use std::collections::{BTreeMap, HashSet};
use std::ops::Range;

use ndarray::{Array2, ArrayView2, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// N x P matrix of minor-allele counts.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeMatrix {
    values: Array2<u8>,
    snp_ids: Vec<String>,
    maf: Vec<f64>,
}

fn column_maf(values: &Array2<u8>, j: usize) -> f64 {
    let n = values.nrows();
    let total: u64 = values.column(j).iter().map(|&v| v as u64).sum();
    total as f64 / (2.0 * n as f64)
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    let mut dups: Vec<String> = ids
        .iter()
        .filter(|id| !seen.insert(id.as_str()))
        .cloned()
        .collect();
    if dups.is_empty() {
        Ok(())
    } else {
        dups.sort();
        dups.dedup();
        Err(Error::Duplicates(dups))
    }
}

impl GenotypeMatrix {
    /// Validates counts in {0,1,2}, unique ids and minor-allele coding
    /// (`0 < maf <= 0.5` for every column).
    pub fn new(values: Array2<u8>, snp_ids: Vec<String>) -> Result<Self> {
        if values.ncols() != snp_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} genotype columns but {} SNP ids",
                values.ncols(),
                snp_ids.len()
            )));
        }
        if values.nrows() == 0 {
            return Err(Error::invalid("genotype matrix has no individuals"));
        }
        check_unique(&snp_ids)?;
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, &v)| v > 2) {
            return Err(Error::invalid(format!(
                "genotype value {v} at individual {i}, SNP {} is not a 0/1/2 count",
                snp_ids[j]
            )));
        }
        let maf: Vec<f64> = (0..values.ncols()).map(|j| column_maf(&values, j)).collect();
        for (j, &m) in maf.iter().enumerate() {
            if m <= 0.0 {
                return Err(Error::ZeroVariance {
                    snp_id: snp_ids[j].clone(),
                });
            }
            if m > 0.5 {
                return Err(Error::invalid(format!(
                    "SNP {} has allele frequency {m:.4} > 0.5; counts must be of the minor allele",
                    snp_ids[j]
                )));
            }
        }
        Ok(Self {
            values,
            snp_ids,
            maf,
        })
    }

    /// Like [`GenotypeMatrix::new`] but first recodes any column whose
    /// counted allele is the major one (`x -> 2 - x`). Returns the indices of
    /// the recoded columns.
    pub fn from_counts_minor(
        mut values: Array2<u8>,
        snp_ids: Vec<String>,
    ) -> Result<(Self, Vec<usize>)> {
        let mut flipped = Vec::new();
        if values.iter().all(|&v| v <= 2) && values.nrows() > 0 {
            for j in 0..values.ncols() {
                if column_maf(&values, j) > 0.5 {
                    values.column_mut(j).mapv_inplace(|v| 2 - v);
                    flipped.push(j);
                }
            }
        }
        Ok((Self::new(values, snp_ids)?, flipped))
    }

    pub fn n_individuals(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_snps(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, u8> {
        self.values.view()
    }

    pub fn snp_ids(&self) -> &[String] {
        &self.snp_ids
    }

    pub fn maf(&self) -> &[f64] {
        &self.maf
    }

    /// Mean allele count of SNP `j` (twice its MAF).
    pub fn mean_count(&self, j: usize) -> f64 {
        2.0 * self.maf[j]
    }

    pub fn column_f64(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().map(|&v| v as f64).collect()
    }

    pub fn index_of(&self, snp_id: &str) -> Option<usize> {
        self.snp_ids.iter().position(|s| s == snp_id)
    }
}

/// L named groups of original SNP indices with their penalty weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathwayModelRepr", into = "PathwayModelRepr")]
pub struct PathwayModel {
    group_names: Vec<String>,
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
    snp_ids: Option<Vec<String>>,
    genes: Option<BTreeMap<String, Vec<usize>>>,
}

#[derive(Serialize, Deserialize)]
struct PathwayModelRepr {
    group_names: Vec<String>,
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
    #[serde(default)]
    sizes: Option<Vec<usize>>,
    #[serde(default)]
    total_expanded: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    snp_ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    genes: Option<BTreeMap<String, Vec<usize>>>,
}

impl TryFrom<PathwayModelRepr> for PathwayModel {
    type Error = Error;

    fn try_from(r: PathwayModelRepr) -> Result<Self> {
        let mut model = PathwayModel::new(r.group_names, r.groups, r.weights)?;
        if let Some(sizes) = r.sizes {
            if sizes != model.sizes() {
                return Err(Error::invalid("pathway sizes disagree with group contents"));
            }
        }
        if let Some(total) = r.total_expanded {
            if total != model.total_expanded() {
                return Err(Error::invalid("total_expanded disagrees with group contents"));
            }
        }
        if let Some(ids) = r.snp_ids {
            model = model.with_snp_ids(ids)?;
        }
        if let Some(genes) = r.genes {
            model = model.with_genes(genes)?;
        }
        Ok(model)
    }
}

impl From<PathwayModel> for PathwayModelRepr {
    fn from(m: PathwayModel) -> Self {
        PathwayModelRepr {
            sizes: Some(m.sizes()),
            total_expanded: Some(m.total_expanded()),
            group_names: m.group_names,
            groups: m.groups,
            weights: m.weights,
            snp_ids: m.snp_ids,
            genes: m.genes,
        }
    }
}

impl PathwayModel {
    pub fn new(group_names: Vec<String>, groups: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if group_names.len() != groups.len() || weights.len() != groups.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names, {} groups, {} weights",
                group_names.len(),
                groups.len(),
                weights.len()
            )));
        }
        if groups.is_empty() {
            return Err(Error::invalid("pathway model has no groups"));
        }
        check_unique(&group_names)?;
        for (name, g) in group_names.iter().zip(&groups) {
            if g.is_empty() {
                return Err(Error::invalid(format!("group {name} is empty")));
            }
            let mut seen = HashSet::with_capacity(g.len());
            if let Some(d) = g.iter().find(|&&i| !seen.insert(i)) {
                return Err(Error::invalid(format!("group {name} lists SNP index {d} twice")));
            }
        }
        check_weights(&weights)?;
        Ok(Self {
            group_names,
            groups,
            weights,
            snp_ids: None,
            genes: None,
        })
    }

    /// Groups with the size-balancing weights `w_l = sqrt(S_l)`.
    pub fn with_size_weights(group_names: Vec<String>, groups: Vec<Vec<usize>>) -> Result<Self> {
        let weights = groups.iter().map(|g| (g.len() as f64).sqrt()).collect();
        Self::new(group_names, groups, weights)
    }

    /// Attach the identifiers the group indices refer to.
    pub fn with_snp_ids(mut self, snp_ids: Vec<String>) -> Result<Self> {
        check_unique(&snp_ids)?;
        self.validate_indices(snp_ids.len())?;
        self.snp_ids = Some(snp_ids);
        Ok(self)
    }

    /// Attach gene membership (gene name -> SNP indices), used for
    /// single-gene causal placement in simulations.
    pub fn with_genes(mut self, genes: BTreeMap<String, Vec<usize>>) -> Result<Self> {
        if let Some(ids) = &self.snp_ids {
            if let Some((g, _)) = genes.iter().find(|(_, s)| s.iter().any(|&i| i >= ids.len())) {
                return Err(Error::invalid(format!("gene {g} references an unknown SNP index")));
            }
        }
        self.genes = Some(genes);
        Ok(self)
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, l: usize) -> &[usize] {
        &self.groups[l]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn snp_ids(&self) -> Option<&[String]> {
        self.snp_ids.as_deref()
    }

    pub fn genes(&self) -> Option<&BTreeMap<String, Vec<usize>>> {
        self.genes.as_ref()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// P* = sum of group sizes.
    pub fn total_expanded(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn size_weights(&self) -> Vec<f64> {
        self.groups.iter().map(|g| (g.len() as f64).sqrt()).collect()
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.groups.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} groups",
                weights.len(),
                self.groups.len()
            )));
        }
        check_weights(&weights)?;
        self.weights = weights;
        Ok(())
    }

    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.group_names.iter().position(|n| n == name)
    }

    pub fn validate_indices(&self, n_snps: usize) -> Result<()> {
        for (name, g) in self.group_names.iter().zip(&self.groups) {
            if let Some(&bad) = g.iter().find(|&&i| i >= n_snps) {
                return Err(Error::invalid(format!(
                    "group {name} references SNP index {bad} but only {n_snps} SNPs exist"
                )));
            }
        }
        Ok(())
    }

    /// Re-index groups (and genes) against the columns of a genotype matrix,
    /// matching by SNP identifier. Requires attached SNP ids.
    pub fn align_to(&self, genotype_ids: &[String]) -> Result<PathwayModel> {
        let ids = self
            .snp_ids
            .as_ref()
            .ok_or_else(|| Error::invalid("pathway model carries no snp_ids to align by"))?;
        let lookup: std::collections::HashMap<&str, usize> = genotype_ids
            .iter()
            .enumerate()
            .map(|(j, s)| (s.as_str(), j))
            .collect();
        let remap = |i: usize| -> Result<usize> {
            lookup
                .get(ids[i].as_str())
                .copied()
                .ok_or_else(|| Error::invalid(format!("SNP {} missing from genotype file", ids[i])))
        };
        let groups = self
            .groups
            .iter()
            .map(|g| g.iter().map(|&i| remap(i)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut out = PathwayModel::new(self.group_names.clone(), groups, self.weights.clone())?
            .with_snp_ids(genotype_ids.to_vec())?;
        if let Some(genes) = &self.genes {
            let mut remapped = BTreeMap::new();
            for (name, snps) in genes {
                // genes may list SNPs that are not genotyped; keep the ones that are
                let kept: Vec<usize> = snps
                    .iter()
                    .filter_map(|&i| lookup.get(ids[i].as_str()).copied())
                    .collect();
                if !kept.is_empty() {
                    remapped.insert(name.clone(), kept);
                }
            }
            out = out.with_genes(remapped)?;
        }
        Ok(out)
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    match weights.iter().position(|&w| !(w.is_finite() && w > 0.0)) {
        Some(l) => Err(Error::invalid(format!(
            "group weight {} at position {l} is not strictly positive",
            weights[l]
        ))),
        None => Ok(()),
    }
}

/// Layout of the overlap-expanded coefficient space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionMap {
    expanded_to_original: Vec<usize>,
    group_offsets: Vec<usize>,
}

impl ExpansionMap {
    /// Concatenate the groups in order; slot `e` holds a copy of original
    /// column `expanded_to_original[e]`.
    pub fn build(pathways: &PathwayModel, n_snps: usize) -> Result<Self> {
        pathways.validate_indices(n_snps)?;
        let mut expanded_to_original = Vec::with_capacity(pathways.total_expanded());
        let mut group_offsets = Vec::with_capacity(pathways.n_groups());
        for g in pathways.groups() {
            if g.is_empty() {
                return Err(Error::invalid("empty group"));
            }
            group_offsets.push(expanded_to_original.len());
            expanded_to_original.extend_from_slice(g);
        }
        Ok(Self {
            expanded_to_original,
            group_offsets,
        })
    }

    pub fn expanded_to_original(&self) -> &[usize] {
        &self.expanded_to_original
    }

    pub fn group_offsets(&self) -> &[usize] {
        &self.group_offsets
    }

    pub fn n_blocks(&self) -> usize {
        self.group_offsets.len()
    }

    pub fn total(&self) -> usize {
        self.expanded_to_original.len()
    }

    pub fn block(&self, l: usize) -> Range<usize> {
        let end = self
            .group_offsets
            .get(l + 1)
            .copied()
            .unwrap_or(self.expanded_to_original.len());
        self.group_offsets[l]..end
    }

    pub fn blocks(&self) -> Vec<Range<usize>> {
        (0..self.n_blocks()).map(|l| self.block(l)).collect()
    }
}

/// What to do with a column that has no variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroVariance {
    Reject,
    /// Keep the slot as an all-zero column; it can never enter the fit.
    ZeroColumn,
}

/// Mean-centred, unit-norm expanded design with its block partition.
#[derive(Debug, Clone)]
pub struct StandardizedDesign {
    columns: Array2<f64>,
    column_scales: Vec<f64>,
    column_means: Vec<f64>,
    blocks: Vec<Range<usize>>,
    response_mean: f64,
}

/// Centre and scale to unit Euclidean norm in place; returns (mean, norm).
fn standardize_in_place(col: &mut [f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    col.iter_mut().for_each(|v| *v -= mean);
    let scale = linalg::norm(col);
    if scale > 0.0 {
        col.iter_mut().for_each(|v| *v /= scale);
    }
    (mean, scale)
}

/// Relative variance below which a column is treated as constant.
const CONSTANT_COLUMN_TOL: f64 = 1e-12;

fn is_constant(col: &[f64], mean: f64, scale: f64) -> bool {
    let magnitude = mean.abs().max(1.0) * (col.len() as f64).sqrt();
    scale <= CONSTANT_COLUMN_TOL * magnitude
}

pub fn center(y: &[f64]) -> (Vec<f64>, f64) {
    let mean = y.iter().sum::<f64>() / y.len().max(1) as f64;
    (y.iter().map(|v| v - mean).collect(), mean)
}

impl StandardizedDesign {
    /// Standardize an already expanded real matrix; `blocks` must tile its
    /// columns.
    pub fn from_expanded(x: ArrayView2<'_, f64>, blocks: Vec<Range<usize>>) -> Result<Self> {
        check_blocks(&blocks, x.ncols())?;
        let (n, p) = x.dim();
        let mut columns = Array2::<f64>::zeros((n, p).f());
        let mut scales = Vec::with_capacity(p);
        let mut means = Vec::with_capacity(p);
        for j in 0..p {
            let mut col = columns.column_mut(j);
            col.assign(&x.column(j));
            let slice = col.as_slice_mut().expect("column-major storage");
            let raw = slice.to_vec();
            let (mean, scale) = standardize_in_place(slice);
            if is_constant(&raw, mean, scale) {
                return Err(Error::ZeroVariance {
                    snp_id: format!("column {j}"),
                });
            }
            means.push(mean);
            scales.push(scale);
        }
        Ok(Self {
            columns,
            column_scales: scales,
            column_means: means,
            blocks,
            response_mean: 0.0,
        })
    }

    /// Standardize selected rows of a set of original columns and copy them
    /// into their expanded slots. `column(j)` yields original column `j`
    /// restricted to `rows`.
    fn from_original<F>(
        n_rows: usize,
        map: &ExpansionMap,
        name: impl Fn(usize) -> String,
        column: F,
        policy: ZeroVariance,
    ) -> Result<(Self, Vec<usize>)>
    where
        F: Fn(usize) -> Vec<f64>,
    {
        let p_star = map.total();
        let mut cache: BTreeMap<usize, (Vec<f64>, f64, f64)> = BTreeMap::new();
        let mut zeroed = Vec::new();
        for &orig in map.expanded_to_original() {
            if cache.contains_key(&orig) {
                continue;
            }
            let mut col = column(orig);
            let raw = col.clone();
            let (mean, scale) = standardize_in_place(&mut col);
            if is_constant(&raw, mean, scale) {
                match policy {
                    ZeroVariance::Reject => return Err(Error::ZeroVariance { snp_id: name(orig) }),
                    ZeroVariance::ZeroColumn => {
                        col.iter_mut().for_each(|v| *v = 0.0);
                        zeroed.push(orig);
                        cache.insert(orig, (col, mean, 0.0));
                        continue;
                    }
                }
            }
            cache.insert(orig, (col, mean, scale));
        }
        let mut columns = Array2::<f64>::zeros((n_rows, p_star).f());
        let mut scales = Vec::with_capacity(p_star);
        let mut means = Vec::with_capacity(p_star);
        for (e, orig) in map.expanded_to_original().iter().enumerate() {
            let (col, mean, scale) = &cache[orig];
            columns
                .column_mut(e)
                .as_slice_mut()
                .expect("column-major storage")
                .copy_from_slice(col);
            scales.push(*scale);
            means.push(*mean);
        }
        Ok((
            Self {
                columns,
                column_scales: scales,
                column_means: means,
                blocks: map.blocks(),
                response_mean: 0.0,
            },
            zeroed,
        ))
    }

    pub fn n_rows(&self) -> usize {
        self.columns.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.ncols()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, l: usize) -> Range<usize> {
        self.blocks[l].clone()
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn block_size(&self, l: usize) -> usize {
        self.blocks[l].len()
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        self.columns
            .column(j)
            .to_slice()
            .expect("column-major storage")
    }

    pub fn columns(&self) -> ArrayView2<'_, f64> {
        self.columns.view()
    }

    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn response_mean(&self) -> f64 {
        self.response_mean
    }

    /// `X beta`
    pub fn predict(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows()];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                linalg::axpy(b, self.column(j), &mut out);
            }
        }
        out
    }

    /// `y - X beta`, computed from scratch.
    pub fn residual(&self, y: &[f64], beta: &[f64]) -> Vec<f64> {
        let fit = self.predict(beta);
        y.iter().zip(fit).map(|(a, b)| a - b).collect()
    }

    /// `X_l^T r`
    pub fn block_correlation(&self, l: usize, r: &[f64]) -> Vec<f64> {
        self.block(l).map(|j| linalg::dot(self.column(j), r)).collect()
    }

    /// `||X_l^T r||_2`
    pub fn block_score(&self, l: usize, r: &[f64]) -> f64 {
        self.block(l)
            .map(|j| {
                let c = linalg::dot(self.column(j), r);
                c * c
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn check_blocks(blocks: &[Range<usize>], p: usize) -> Result<()> {
    let mut next = 0;
    for b in blocks {
        if b.start != next || b.end <= b.start {
            return Err(Error::invalid("blocks must tile the columns contiguously without gaps"));
        }
        next = b.end;
    }
    if next != p {
        return Err(Error::invalid(format!("blocks cover {next} of {p} columns")));
    }
    Ok(())
}

/// Expand the genotype columns by `map`, standardize them, and centre `y`.
pub fn expand_and_standardize(
    geno: &GenotypeMatrix,
    map: &ExpansionMap,
    y: &[f64],
) -> Result<(StandardizedDesign, Vec<f64>)> {
    if y.len() != geno.n_individuals() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries for {} individuals",
            y.len(),
            geno.n_individuals()
        )));
    }
    if map.expanded_to_original().iter().any(|&j| j >= geno.n_snps()) {
        return Err(Error::invalid("expansion map references SNPs beyond the genotype matrix"));
    }
    let (mut design, _) = StandardizedDesign::from_original(
        geno.n_individuals(),
        map,
        |j| geno.snp_ids()[j].clone(),
        |j| geno.column_f64(j),
        ZeroVariance::Reject,
    )?;
    let (yc, mean) = center(y);
    design.response_mean = mean;
    Ok((design, yc))
}

/// Design and centred response restricted to `rows` (which may repeat).
/// Columns that are constant on the subsample become zero columns; their
/// original indices are returned.
pub fn expand_and_standardize_rows(
    geno: &GenotypeMatrix,
    map: &ExpansionMap,
    y: &[f64],
    rows: &[usize],
) -> Result<(StandardizedDesign, Vec<f64>, Vec<usize>)> {
    if y.len() != geno.n_individuals() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries for {} individuals",
            y.len(),
            geno.n_individuals()
        )));
    }
    if let Some(&bad) = rows.iter().find(|&&i| i >= geno.n_individuals()) {
        return Err(Error::invalid(format!("row index {bad} out of range")));
    }
    let values = geno.values();
    let (mut design, zeroed) = StandardizedDesign::from_original(
        rows.len(),
        map,
        |j| geno.snp_ids()[j].clone(),
        |j| rows.iter().map(|&i| values[[i, j]] as f64).collect(),
        ZeroVariance::ZeroColumn,
    )?;
    let y_sub: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let (yc, mean) = center(&y_sub);
    design.response_mean = mean;
    Ok((design, yc, zeroed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("g{i}")).collect()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("rs{i}")).collect()
    }

    #[test]
    fn overlapping_groups_duplicate_shared_snp() {
        let m = PathwayModel::with_size_weights(names(2), vec![vec![0, 1], vec![1, 2]]).unwrap();
        let map = ExpansionMap::build(&m, 3).unwrap();
        assert_eq!(map.expanded_to_original(), &[0, 1, 1, 2]);
        assert_eq!(map.group_offsets(), &[0, 2]);
        assert_eq!(map.total(), 4);
        assert_eq!(map.block(1), 2..4);
    }

    #[test]
    fn disjoint_groups_expand_to_identity() {
        let m = PathwayModel::with_size_weights(names(2), vec![vec![0], vec![1]]).unwrap();
        let map = ExpansionMap::build(&m, 2).unwrap();
        assert_eq!(map.expanded_to_original(), &[0, 1]);
    }

    #[test]
    fn snp_in_three_singleton_groups() {
        let m = PathwayModel::with_size_weights(names(3), vec![vec![0], vec![0], vec![0]]).unwrap();
        let map = ExpansionMap::build(&m, 1).unwrap();
        assert_eq!(map.expanded_to_original(), &[0, 0, 0]);
        assert_eq!(map.total(), 3);
    }

    #[test]
    fn rejects_empty_group_and_out_of_range_index() {
        assert!(PathwayModel::with_size_weights(names(1), vec![vec![]]).is_err());
        let m = PathwayModel::with_size_weights(names(1), vec![vec![0, 5]]).unwrap();
        assert!(ExpansionMap::build(&m, 3).is_err());
    }

    #[test]
    fn rejects_bad_weights_and_duplicate_names() {
        assert!(PathwayModel::new(names(1), vec![vec![0]], vec![0.0]).is_err());
        assert!(PathwayModel::new(names(1), vec![vec![0]], vec![-1.0]).is_err());
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(matches!(
            PathwayModel::with_size_weights(dup, vec![vec![0], vec![1]]),
            Err(Error::Duplicates(_))
        ));
    }

    #[test]
    fn genotype_validation() {
        let ok = GenotypeMatrix::new(array![[0u8, 1], [1, 0], [2, 0]], ids(2)).unwrap();
        assert!((ok.maf()[0] - 0.5).abs() < 1e-12);
        assert!((ok.maf()[1] - 1.0 / 6.0).abs() < 1e-12);
        assert!(GenotypeMatrix::new(array![[3u8], [0]], ids(1)).is_err());
        assert!(GenotypeMatrix::new(array![[0u8], [0]], ids(1)).is_err());
        assert!(GenotypeMatrix::new(array![[2u8], [2]], ids(1)).is_err());
        let dup = vec!["x".to_string(), "x".to_string()];
        assert!(GenotypeMatrix::new(array![[0u8, 1], [1, 0]], dup).is_err());
        let (flipped, which) = GenotypeMatrix::from_counts_minor(array![[2u8], [2], [1]], ids(1)).unwrap();
        assert_eq!(which, vec![0]);
        assert_eq!(flipped.values()[[2, 0]], 1);
    }

    #[test]
    fn duplicated_column_standardizes_identically() {
        let geno = GenotypeMatrix::new(array![[0u8], [1], [2], [1]], ids(1)).unwrap();
        let m = PathwayModel::with_size_weights(names(2), vec![vec![0], vec![0]]).unwrap();
        let map = ExpansionMap::build(&m, 1).unwrap();
        let (d, _) = expand_and_standardize(&geno, &map, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.column(0), d.column(1));
        assert!((linalg::norm(d.column(0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response_centres_to_zero() {
        let geno = GenotypeMatrix::new(array![[0u8], [1], [2], [1]], ids(1)).unwrap();
        let m = PathwayModel::with_size_weights(names(1), vec![vec![0]]).unwrap();
        let map = ExpansionMap::build(&m, 1).unwrap();
        let (d, y) = expand_and_standardize(&geno, &map, &[3.0; 4]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(d.response_mean(), 3.0);
    }

    #[test]
    fn hand_checked_standardization() {
        // [0,0,2,2] -> centred [-1,-1,1,1], norm 2
        let geno = GenotypeMatrix::new(array![[0u8], [0], [2], [2]], ids(1)).unwrap();
        let m = PathwayModel::with_size_weights(names(1), vec![vec![0]]).unwrap();
        let map = ExpansionMap::build(&m, 1).unwrap();
        let (d, _) = expand_and_standardize(&geno, &map, &[0.0, 1.0, 0.0, 1.0]).unwrap();
        let oracle_norm = [-1.0f64, -1.0, 1.0, 1.0].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_eq!(oracle_norm, 2.0);
        assert_eq!(d.column_scales(), &[2.0]);
        assert_eq!(d.column(0), &[-0.5, -0.5, 0.5, 0.5]);
    }

    #[test]
    fn zero_variance_column_names_the_snp() {
        let geno = GenotypeMatrix::new(array![[1u8, 0], [1, 1], [1, 2]], ids(2)).unwrap();
        let m = PathwayModel::with_size_weights(names(1), vec![vec![0, 1]]).unwrap();
        let map = ExpansionMap::build(&m, 2).unwrap();
        match expand_and_standardize(&geno, &map, &[1.0, 2.0, 3.0]) {
            Err(Error::ZeroVariance { snp_id }) => assert_eq!(snp_id, "rs0"),
            other => panic!("expected zero variance error, got {other:?}"),
        }
    }

    #[test]
    fn subsample_zeroes_constant_columns() {
        let geno = GenotypeMatrix::new(array![[0u8, 1], [1, 1], [0, 0], [2, 1]], ids(2)).unwrap();
        let m = PathwayModel::with_size_weights(names(1), vec![vec![0, 1]]).unwrap();
        let map = ExpansionMap::build(&m, 2).unwrap();
        let (d, y, zeroed) =
            expand_and_standardize_rows(&geno, &map, &[1.0, 2.0, 3.0, 4.0], &[0, 1, 1, 3]).unwrap();
        assert_eq!(zeroed, vec![1]);
        assert!(d.column(1).iter().all(|&v| v == 0.0));
        assert!((y.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn model_json_roundtrip_and_validation() {
        let m = PathwayModel::with_size_weights(names(2), vec![vec![0, 1], vec![1, 2]])
            .unwrap()
            .with_snp_ids(ids(3))
            .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"total_expanded\":4"));
        let back: PathwayModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"group_names":["a"],"groups":[[]],"weights":[1.0]}"#;
        assert!(serde_json::from_str::<PathwayModel>(bad).is_err());
    }

    #[test]
    fn align_reindexes_by_snp_id() {
        let m = PathwayModel::with_size_weights(names(1), vec![vec![0, 2]])
            .unwrap()
            .with_snp_ids(ids(3))
            .unwrap();
        let geno_ids = vec!["rs2".to_string(), "rs9".to_string(), "rs0".to_string()];
        let a = m.align_to(&geno_ids).unwrap();
        assert_eq!(a.group(0), &[2, 0]);
        let missing = vec!["rs2".to_string()];
        assert!(m.align_to(&missing).is_err());
    }
}
