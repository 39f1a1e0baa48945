//! Reading SNP locations, gene locations, gene sets (GMT), genotypes and
//! phenotypes; windowed SNP-to-gene mapping; and turning gene sets into a
//! filtered, deduplicated [`PathwayModel`].
//!
//! All inputs are UTF-8, tab-delimited, unquoted. Blank lines and lines
//! starting with `#` are skipped.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GenotypeMatrix, PathwayModel};

pub const DEFAULT_WINDOW_BP: u64 = 10_000;
pub const DEFAULT_MIN_SNPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnpLocation {
    pub snp_id: String,
    pub chromosome: String,
    pub position: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneLocation {
    pub gene_id: String,
    pub chromosome: String,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GeneSetCollection {
    pub sets: BTreeMap<String, BTreeSet<String>>,
    pub descriptions: BTreeMap<String, String>,
    pub source_lines: BTreeMap<String, usize>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(reader: impl BufRead, path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_u64(path: &Path, line: usize, field: &str, what: &str) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("{what} {field:?} is not a non-negative integer")))
}

fn reject_duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            dups.insert(id.to_string());
        }
    }
    if dups.is_empty() {
        Ok(())
    } else {
        Err(Error::Duplicates(dups.into_iter().collect()))
    }
}

/// `snp_id  chrom  pos`. A first line whose position is not numeric is
/// taken as a header.
pub fn parse_snps(reader: impl BufRead, path: &Path) -> Result<Vec<SnpLocation>> {
    let mut out = Vec::new();
    for (k, (line, text)) in data_lines(reader, path)?.into_iter().enumerate() {
        let f: Vec<&str> = text.split('\t').collect();
        if f.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 fields, found {}", f.len())));
        }
        if k == 0 && f[2].trim().parse::<u64>().is_err() {
            continue;
        }
        out.push(SnpLocation {
            snp_id: f[0].trim().to_string(),
            chromosome: f[1].trim().to_string(),
            position: parse_u64(path, line, f[2], "position")?,
        });
    }
    reject_duplicates(out.iter().map(|s| s.snp_id.as_str()))?;
    Ok(out)
}

/// `gene_id  chrom  start  end`, with `start <= end`.
pub fn parse_genes(reader: impl BufRead, path: &Path) -> Result<Vec<GeneLocation>> {
    let mut out = Vec::new();
    for (k, (line, text)) in data_lines(reader, path)?.into_iter().enumerate() {
        let f: Vec<&str> = text.split('\t').collect();
        if f.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 fields, found {}", f.len())));
        }
        if k == 0 && f[2].trim().parse::<u64>().is_err() {
            continue;
        }
        let start = parse_u64(path, line, f[2], "start")?;
        let end = parse_u64(path, line, f[3], "end")?;
        if start > end {
            return Err(parse_err(path, line, format!("gene {} starts at {start} after its end {end}", f[0])));
        }
        out.push(GeneLocation {
            gene_id: f[0].trim().to_string(),
            chromosome: f[1].trim().to_string(),
            start,
            end,
        });
    }
    reject_duplicates(out.iter().map(|g| g.gene_id.as_str()))?;
    Ok(out)
}

/// GMT: `name  description  gene  gene ...`. Sets without genes are dropped
/// with a warning.
pub fn parse_gmt(reader: impl BufRead, path: &Path) -> Result<GeneSetCollection> {
    let mut c = GeneSetCollection::default();
    let mut names = Vec::new();
    for (line, text) in data_lines(reader, path)? {
        let mut f = text.split('\t');
        let name = f.next().unwrap_or_default().trim().to_string();
        if name.is_empty() {
            return Err(parse_err(path, line, "gene set has no name"));
        }
        let desc = f.next().unwrap_or_default().to_string();
        let genes: BTreeSet<String> = f.map(str::trim).filter(|g| !g.is_empty()).map(String::from).collect();
        names.push(name.clone());
        if genes.is_empty() {
            log::warn!("{}:{line}: gene set {name} is empty and was dropped", path.display());
            continue;
        }
        c.sets.insert(name.clone(), genes);
        c.descriptions.insert(name.clone(), desc);
        c.source_lines.insert(name, line);
    }
    reject_duplicates(names.iter().map(String::as_str))?;
    Ok(c)
}

pub fn load_mapping_inputs(
    snp_path: &Path,
    gene_path: &Path,
    gmt_path: &Path,
) -> Result<(Vec<SnpLocation>, Vec<GeneLocation>, GeneSetCollection)> {
    Ok((
        parse_snps(open(snp_path)?, snp_path)?,
        parse_genes(open(gene_path)?, gene_path)?,
        parse_gmt(open(gmt_path)?, gmt_path)?,
    ))
}

pub fn write_snps(snps: &[SnpLocation], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "snp_id\tchrom\tpos")?;
    for s in snps {
        writeln!(out, "{}\t{}\t{}", s.snp_id, s.chromosome, s.position)?;
    }
    Ok(())
}

pub fn write_genes(genes: &[GeneLocation], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "gene_id\tchrom\tstart\tend")?;
    for g in genes {
        writeln!(out, "{}\t{}\t{}\t{}", g.gene_id, g.chromosome, g.start, g.end)?;
    }
    Ok(())
}

pub fn write_gmt(sets: &GeneSetCollection, mut out: impl Write) -> std::io::Result<()> {
    for (name, genes) in &sets.sets {
        let desc = sets.descriptions.get(name).map(String::as_str).unwrap_or("");
        write!(out, "{name}\t{desc}")?;
        for g in genes {
            write!(out, "\t{g}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneMapping {
    /// Gene id → indices into the SNP list, ascending. Genes with no SNPs
    /// in range are absent.
    pub gene_to_snps: BTreeMap<String, Vec<usize>>,
    pub unmapped_snps: usize,
    pub window_bp: u64,
}

/// A SNP maps to a gene on the same chromosome when
/// `start − window ≤ pos ≤ end + window` (both ends inclusive).
pub fn map_snps_to_genes(snps: &[SnpLocation], genes: &[GeneLocation], window_bp: u64) -> GeneMapping {
    let mut by_chrom: HashMap<&str, Vec<(u64, usize)>> = HashMap::new();
    for (i, s) in snps.iter().enumerate() {
        by_chrom.entry(&s.chromosome).or_default().push((s.position, i));
    }
    by_chrom.values_mut().for_each(|v| v.sort_unstable());

    let mut mapped = vec![false; snps.len()];
    let mut gene_to_snps = BTreeMap::new();
    for g in genes {
        let Some(sorted) = by_chrom.get(g.chromosome.as_str()) else { continue };
        let lo = g.start.saturating_sub(window_bp);
        let hi = g.end.saturating_add(window_bp);
        let first = sorted.partition_point(|&(p, _)| p < lo);
        let mut hits: Vec<usize> = sorted[first..]
            .iter()
            .take_while(|&&(p, _)| p <= hi)
            .map(|&(_, i)| i)
            .collect();
        if hits.is_empty() {
            continue;
        }
        hits.sort_unstable();
        hits.iter().for_each(|&i| mapped[i] = true);
        gene_to_snps.insert(g.gene_id.clone(), hits);
    }
    GeneMapping {
        gene_to_snps,
        unmapped_snps: mapped.iter().filter(|m| !**m).count(),
        window_bp,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub n_snps: usize,
    pub n_genes: usize,
    pub n_input_sets: usize,
    pub window_bp: u64,
    pub min_snps: usize,
    pub unmapped_snps: usize,
    /// SNPs mapped to at least one gene.
    pub mapped_snps: usize,
    pub dropped_small: Vec<String>,
    /// Surviving pathway → names of removed pathways with identical SNP sets.
    pub aliases: BTreeMap<String, Vec<String>>,
    pub n_pathways: usize,
    pub snps_per_pathway: SizeStats,
    /// Number of surviving pathways a mapped SNP belongs to → SNP count.
    pub snp_multiplicity: BTreeMap<usize, usize>,
}

/// Union the SNPs of each set's genes, drop sets below `min_snps`, merge
/// sets with identical SNP content (the lexicographically first name
/// survives) and assign size weights `sqrt(S_l)`.
pub fn build_pathway_model(
    mapping: &GeneMapping,
    gene_sets: &GeneSetCollection,
    snps: &[SnpLocation],
    min_snps: usize,
) -> Result<(PathwayModel, MappingReport)> {
    if min_snps < 1 {
        return Err(Error::invalid("min_snps must be at least 1"));
    }
    let mut dropped_small = Vec::new();
    // BTreeMap iteration is by name, so the first name seen for a SNP set is
    // the lexicographically smallest.
    let mut by_content: BTreeMap<Vec<usize>, Vec<String>> = BTreeMap::new();
    for (name, genes) in &gene_sets.sets {
        let set: BTreeSet<usize> = genes
            .iter()
            .filter_map(|g| mapping.gene_to_snps.get(g))
            .flatten()
            .copied()
            .collect();
        if set.len() < min_snps {
            dropped_small.push(name.clone());
            continue;
        }
        by_content.entry(set.into_iter().collect()).or_default().push(name.clone());
    }
    if by_content.is_empty() {
        return Err(Error::invalid(format!("no pathway has at least {min_snps} mapped SNPs")));
    }
    let mut survivors: Vec<(String, Vec<usize>)> = Vec::new();
    let mut aliases = BTreeMap::new();
    for (snp_set, mut names) in by_content {
        names.sort();
        let keep = names.remove(0);
        if !names.is_empty() {
            aliases.insert(keep.clone(), names);
        }
        survivors.push((keep, snp_set));
    }
    survivors.sort_by(|a, b| a.0.cmp(&b.0));
    let (names, groups): (Vec<String>, Vec<Vec<usize>>) = survivors.into_iter().unzip();

    let mut multiplicity = vec![0usize; snps.len()];
    groups.iter().flatten().for_each(|&i| multiplicity[i] += 1);
    let mut is_mapped = vec![false; snps.len()];
    mapping.gene_to_snps.values().flatten().for_each(|&i| is_mapped[i] = true);
    let mut snp_multiplicity = BTreeMap::new();
    for (i, &m) in multiplicity.iter().enumerate() {
        if is_mapped[i] {
            *snp_multiplicity.entry(m).or_insert(0) += 1;
        }
    }

    let mut sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    sizes.sort_unstable();
    let mid = sizes.len() / 2;
    let median = if sizes.len() % 2 == 1 {
        sizes[mid] as f64
    } else {
        0.5 * (sizes[mid - 1] + sizes[mid]) as f64
    };
    let report = MappingReport {
        n_snps: snps.len(),
        n_genes: mapping.gene_to_snps.len(),
        n_input_sets: gene_sets.sets.len(),
        window_bp: mapping.window_bp,
        min_snps,
        unmapped_snps: mapping.unmapped_snps,
        mapped_snps: is_mapped.iter().filter(|m| **m).count(),
        dropped_small,
        aliases,
        n_pathways: groups.len(),
        snps_per_pathway: SizeStats {
            min: sizes[0],
            max: sizes[sizes.len() - 1],
            mean: sizes.iter().sum::<usize>() as f64 / sizes.len() as f64,
            median,
        },
        snp_multiplicity,
    };
    let model = PathwayModel::with_size_weights(names, groups)?
        .with_snp_ids(snps.iter().map(|s| s.snp_id.clone()).collect())?
        .with_genes(mapping.gene_to_snps.clone())?;
    Ok((model, report))
}

/// Genotype text before minor-allele checks and QC.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGenotypes {
    pub values: Array2<u8>,
    pub snp_ids: Vec<String>,
}

/// First row: SNP ids. Each further row: one individual's counts (0/1/2).
pub fn parse_genotypes(reader: impl BufRead, path: &Path) -> Result<RawGenotypes> {
    let lines = data_lines(reader, path)?;
    let Some(((_, header), rows)) = lines.split_first() else {
        return Err(parse_err(path, 1, "genotype file is empty"));
    };
    let snp_ids: Vec<String> = header.split('\t').map(|s| s.trim().to_string()).collect();
    reject_duplicates(snp_ids.iter().map(String::as_str))?;
    let p = snp_ids.len();
    let mut flat = Vec::with_capacity(rows.len() * p);
    for (line, text) in rows {
        let before = flat.len();
        for field in text.split('\t') {
            match field.trim() {
                "0" => flat.push(0u8),
                "1" => flat.push(1),
                "2" => flat.push(2),
                other => return Err(parse_err(path, *line, format!("genotype {other:?} is not 0, 1 or 2"))),
            }
        }
        if flat.len() - before != p {
            return Err(parse_err(path, *line, format!("expected {p} genotypes, found {}", flat.len() - before)));
        }
    }
    let values = Array2::from_shape_vec((rows.len(), p), flat).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(RawGenotypes { values, snp_ids })
}

/// Strict load: every column must be polymorphic. Columns coded on the
/// major allele are recoded with a warning.
pub fn load_genotypes(path: &Path) -> Result<GenotypeMatrix> {
    let raw = parse_genotypes(open(path)?, path)?;
    let (g, flipped) = GenotypeMatrix::from_counts_minor(raw.values, raw.snp_ids)?;
    if !flipped.is_empty() {
        log::warn!("{}: {} SNPs recoded to count the minor allele", path.display(), flipped.len());
    }
    Ok(g)
}

pub fn write_genotypes(geno: &GenotypeMatrix, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", geno.snp_ids().join("\t"))?;
    let mut line = String::with_capacity(2 * geno.n_snps());
    for row in geno.values().rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push('\t');
            }
            line.push((b'0' + v) as char);
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcConfig {
    pub min_maf: f64,
    /// SNP ids failing call-rate or Hardy–Weinberg checks done elsewhere.
    pub exclude: BTreeSet<String>,
}

impl Default for QcConfig {
    fn default() -> Self {
        Self {
            min_maf: 0.1,
            exclude: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcReport {
    pub input_snps: usize,
    pub excluded: usize,
    pub monomorphic: usize,
    pub low_maf: usize,
    pub recoded: usize,
    pub kept: usize,
}

/// Drop excluded, constant and low-MAF SNPs and recode
/// the rest to minor-allele counts.
pub fn apply_qc(raw: &RawGenotypes, qc: &QcConfig) -> Result<(GenotypeMatrix, QcReport)> {
    let n = raw.values.nrows();
    if n == 0 {
        return Err(Error::invalid("genotype matrix has no individuals"));
    }
    let mut keep = Vec::new();
    let (mut excluded, mut monomorphic, mut low_maf) = (0, 0, 0);
    for (j, id) in raw.snp_ids.iter().enumerate() {
        if qc.exclude.contains(id) {
            excluded += 1;
            continue;
        }
        let col = raw.values.column(j);
        if col.iter().all(|&v| v == col[0]) {
            monomorphic += 1;
            continue;
        }
        let freq = col.iter().map(|&v| v as f64).sum::<f64>() / (2.0 * n as f64);
        let maf = freq.min(1.0 - freq);
        if maf < qc.min_maf {
            low_maf += 1;
            continue;
        }
        keep.push(j);
    }
    if keep.is_empty() {
        return Err(Error::invalid("no SNPs survive quality control"));
    }
    let values = raw.values.select(ndarray::Axis(1), &keep);
    let ids = keep.iter().map(|&j| raw.snp_ids[j].clone()).collect();
    let (g, flipped) = GenotypeMatrix::from_counts_minor(values, ids)?;
    let report = QcReport {
        input_snps: raw.snp_ids.len(),
        excluded,
        monomorphic,
        low_maf,
        recoded: flipped.len(),
        kept: keep.len(),
    };
    Ok((g, report))
}

/// One phenotype per line (the last tab-separated field). A non-numeric
/// first line is taken as a header.
pub fn parse_phenotype(reader: impl BufRead, path: &Path) -> Result<Vec<f64>> {
    let mut y = Vec::new();
    for (k, (line, text)) in data_lines(reader, path)?.into_iter().enumerate() {
        let field = text.rsplit('\t').next().unwrap_or_default().trim();
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => y.push(v),
            Ok(_) => return Err(parse_err(path, line, format!("phenotype {field:?} is not finite"))),
            Err(_) if k == 0 => continue,
            Err(_) => return Err(parse_err(path, line, format!("phenotype {field:?} is not a number"))),
        }
    }
    Ok(y)
}

pub fn load_phenotype(path: &Path) -> Result<Vec<f64>> {
    parse_phenotype(open(path)?, path)
}

pub fn write_phenotype(y: &[f64], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "phenotype")?;
    for v in y {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

/// One SNP id per line.
pub fn load_id_list(path: &Path) -> Result<BTreeSet<String>> {
    Ok(data_lines(open(path)?, path)?
        .into_iter()
        .map(|(_, t)| t.trim().to_string())
        .collect())
}

pub fn load_pathway_model(path: &Path) -> Result<PathwayModel> {
    Ok(serde_json::from_reader(open(path)?)?)
}
