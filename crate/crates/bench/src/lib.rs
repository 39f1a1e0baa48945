//! Fixtures shared by the benchmarks.

use pathlasso::rng::stream;
use pathlasso::simulation::synth_genotypes;
use pathlasso::{
    expand_and_standardize, ExpansionMap, GenotypeMatrix, PathwayModel, StandardizedDesign, SyntheticGenotypeSpec,
};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct Fixture {
    pub geno: GenotypeMatrix,
    pub model: PathwayModel,
    pub design: StandardizedDesign,
    /// Centred null response.
    pub y: Vec<f64>,
}

/// `n_groups` overlapping pathways of 50 to 150 SNPs drawn from `p` SNPs in
/// LD blocks of 10, with a standard normal response.
pub fn fixture(n: usize, p: usize, n_groups: usize, seed: u64) -> Fixture {
    let geno = synth_genotypes(&SyntheticGenotypeSpec {
        n,
        p,
        ld_block_size: 10,
        ld_rho: 0.5,
        seed,
        ..Default::default()
    })
    .expect("synthetic genotypes");
    let mut rng = stream(seed, &[1]);
    let groups: Vec<Vec<usize>> = (0..n_groups)
        .map(|_| {
            let size = rng.random_range(50..=150).min(p);
            let mut g = sample(&mut rng, p, size).into_vec();
            g.sort_unstable();
            g
        })
        .collect();
    let names = (0..n_groups).map(|l| format!("P{l:03}")).collect();
    let model = PathwayModel::with_size_weights(names, groups).expect("pathways");
    let map = ExpansionMap::build(&model, p).expect("expansion");
    let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let (design, y) = expand_and_standardize(&geno, &map, &y).expect("design");
    Fixture { geno, model, design, y }
}
