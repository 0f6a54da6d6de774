use spacetx::benchmark::*;

fn main() {
    let mut scored: Vec<(u64, f64)> = (7001..7101u64)
        .map(|seed| {
            let spec = SyntheticSpec {
                family: SyntheticFamily::ShiftedQuadratic,
                n_tasks: 6, shift_scale: 0.1, n_grid: 2000, noise_std: 0.0, adversarial: false,
            };
            let sims = synthetic_true_similarities(&spec, seed).unwrap();
            let min = sims.iter().map(|(_, _, s)| *s).fold(f64::INFINITY, f64::min);
            (seed, min)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    for (seed, min_sim) in scored.iter().take(6) {
        println!("seed {seed}: min pairwise true similarity {min_sim:.4}");
    }
    println!("worst: {:?}", scored.last().unwrap());
}
