//! Seeded random point sets for clustering tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub epsilon: f64,
}

/// Blobs plus background noise. Every third seed snaps coordinates to a
/// coarse grid so that many distances tie.
pub fn random_instance(seed: u64, max_n: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=max_n);
    let dim = rng.gen_range(1..=4);
    let blobs = rng.gen_range(1..=4);
    let mut centers: Vec<Vec<f64>> = (0..blobs)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..10.0)).collect())
        .collect();
    let nested = seed % 2 == 1;
    if nested {
        // each blob splits into sub-blobs about one unit apart
        centers = centers
            .iter()
            .flat_map(|c| {
                let subs = rng.gen_range(2..=3);
                (0..subs)
                    .map(|_| c.iter().map(|x| x + rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>())
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    let blobs = centers.len();
    let spread = if nested { rng.gen_range(0.05..0.3) } else { rng.gen_range(0.1..1.0) };
    let grid = seed % 3 == 0;
    let points = (0..n)
        .map(|_| {
            let p: Vec<f64> = if rng.gen_bool(0.8) {
                let c = &centers[rng.gen_range(0..blobs)];
                c.iter().map(|x| x + rng.gen_range(-spread..spread)).collect()
            } else {
                (0..dim).map(|_| rng.gen_range(0.0..10.0)).collect()
            };
            if grid {
                p.iter().map(|x| (x * 2.0).round() / 2.0).collect()
            } else {
                p
            }
        })
        .collect();
    let epsilon = if nested {
        rng.gen_range(0.0..2.0)
    } else {
        [0.0, 0.05, 0.1, 0.5, 1.5][rng.gen_range(0..5)]
    };
    Instance {
        seed,
        points,
        min_cluster_size: rng.gen_range(2..=6),
        min_samples: rng.gen_range(1..=4),
        epsilon,
    }
}
