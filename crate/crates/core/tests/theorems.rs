//! Oracle-regime checks of the links between graph structure and AMIE.

use amie_core::explain::{build_report, ReportOptions};
use amie_core::graph::{d_separated, FalsePositiveCase, RoleKind};
use amie_core::learn::ModelKind;
use amie_core::synth::{generate_dag, mask_latents, random_cpts, sample, BayesNet, GenConfig, LatentMode, OracleModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn world(n: usize, d: f64, l: usize, mode: LatentMode, seed: u64) -> BayesNet {
    let cfg =
        GenConfig { total_nodes: n, edge_ratio: d, latent_count: l, latent_mode: mode, seed, ..GenConfig::default() };
    let dag = mask_latents(&generate_dag(&cfg).unwrap(), &cfg).unwrap();
    random_cpts(&dag, &cfg).unwrap()
}

/// Full joint distribution indexed by the bit pattern of all nodes.
fn joint(net: &BayesNet) -> Vec<f64> {
    let n = net.dag().node_count();
    let mut a = vec![0u8; n];
    (0..1u32 << n)
        .map(|c| {
            for (v, slot) in a.iter_mut().enumerate() {
                *slot = ((c >> v) & 1) as u8;
            }
            net.joint(&a)
        })
        .collect()
}

/// Whether `x ⊥ y | z` holds in the joint to within `tol`.
fn independent(p: &[f64], x: usize, y: usize, z: &[usize], tol: f64) -> bool {
    let zc = 1u32 << z.len();
    let mut table = vec![[[0.0f64; 2]; 2]; zc as usize];
    for (c, &pc) in p.iter().enumerate() {
        let c = c as u32;
        let zi = z.iter().enumerate().fold(0, |acc, (k, &v)| acc | (((c >> v) & 1) << k));
        table[zi as usize][((c >> x) & 1) as usize][((c >> y) & 1) as usize] += pc;
    }
    table.iter().all(|t| {
        let pz = t[0][0] + t[0][1] + t[1][0] + t[1][1];
        (0..2).all(|a| {
            (0..2).all(|b| {
                let px = t[a][0] + t[a][1];
                let py = t[0][b] + t[1][b];
                pz == 0.0 || (t[a][b] * pz - px * py).abs() <= tol * pz
            })
        })
    })
}

#[test]
fn faithfulness_sanity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut agree, mut total) = (0usize, 0usize);
    for seed in 0..60 {
        let n = 5 + (seed as usize % 4);
        let net = world(n, 1.5, 0, LatentMode::None, seed);
        let p = joint(&net);
        for _ in 0..40 {
            let x = rng.gen_range(0..n);
            let y = rng.gen_range(0..n);
            if x == y {
                continue;
            }
            let z: Vec<usize> = (0..n).filter(|&v| v != x && v != y && rng.gen_bool(0.3)).collect();
            let dsep = d_separated(net.dag(), x, y, &z).unwrap();
            agree += usize::from(dsep == independent(&p, x, y, &z, 1e-6));
            total += 1;
        }
    }
    let rate = agree as f64 / total as f64;
    assert!(rate >= 0.99, "agreement {rate} over {total} triples");
}

#[test]
fn causal_roles_have_nonzero_oracle_amie() {
    for seed in 0..40 {
        let net = world(12, 2.0, 3, LatentMode::ConnectedOnly, seed);
        let dag = net.dag().clone();
        let data = sample(&net, 1500, seed).unwrap().data;
        let oracle = OracleModel::new(net).unwrap();
        let report = build_report(&oracle, &data, &ReportOptions::for_model(ModelKind::Oracle), Some(&dag)).unwrap();
        for f in &report.features {
            if f.true_role.is_some_and(RoleKind::is_causal) {
                assert!(f.amie.abs() > 1e-9, "seed {seed}: {} ({:?}) has AMIE {}", f.name, f.true_role, f.amie);
            }
        }
    }
}

#[test]
fn oracle_false_positives_are_explained() {
    let mut unexplained = Vec::new();
    for seed in 0..60 {
        let net = world(14, 2.0, 4, LatentMode::ConnectedOnly, seed);
        let dag = net.dag().clone();
        let data = sample(&net, 1000, seed).unwrap().data;
        let oracle = OracleModel::new(net).unwrap();
        let report = build_report(&oracle, &data, &ReportOptions::for_model(ModelKind::Oracle), Some(&dag)).unwrap();
        for f in &report.features {
            if f.fp_case == Some(FalsePositiveCase::Unexplained) {
                unexplained.push((seed, f.name.clone()));
            }
        }
    }
    assert!(unexplained.is_empty(), "{unexplained:?}");
}
