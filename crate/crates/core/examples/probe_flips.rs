use spacetx::benchmark::*;
use spacetx::gp::gp_predict;
use spacetx::optimizer::*;
use spacetx::seed::*;
use spacetx::space::*;
use spacetx::transfer::*;
use std::sync::Arc;

fn main() {
    let spec = SyntheticSpec {
        family: SyntheticFamily::ShiftedQuadratic,
        n_tasks: 6, shift_scale: 0.1, n_grid: 2000, noise_std: 0.0, adversarial: false,
    };
    let bench = generate_synthetic_family(&spec, 7001).unwrap();
    let protocol = Protocol::new(7002);
    // build sources for target task0 exactly like the harness
    let target = &bench.tasks[0];
    let sources: Vec<Arc<SourceTask>> = bench.tasks.iter().skip(1).map(|st| {
        let mut rng = rng_from_seed(stable_hash(&[SeedPart::Num(7002), SeedPart::Str(&target.id), SeedPart::Str("source_rows"), SeedPart::Str(&st.id), SeedPart::Num(0)]));
        let idx = rand::seq::index::sample(&mut rng, st.rows.len(), 100);
        let hist = TaskHistory::new(idx.iter().map(|i| st.rows[i].clone()).collect());
        Arc::new(SourceTask::new(st.id.clone(), &bench.space, hist,
            &protocol.source_surrogate_options.clone().with_seed(1), &protocol.classifier_options).unwrap())
    }).collect();
    // run ours-gp for 40 trials on task0
    let evaluate = |c: &Configuration| evaluate_config(&bench, &target.id, c);
    let candidates = target.configurations();
    let mut params = RunParams::new(40, 3, 99);
    params.gp_options = protocol.surrogate_options.clone();
    let result = run_bo(&evaluate, &bench.space, &candidates, &DesignerSpec::Ours(Default::default()), &sources, &params).unwrap();
    // D^T after 40 trials
    let obs: Vec<(EncodedPoint, f64)> = result.evaluations.iter()
        .map(|(_, c, y)| (encode(&bench.space, c).unwrap(), *y)).collect();
    // per-source regions at the final history state
    let cfg = DesignConfig::default();
    let obs_hist = TaskHistory::new(result.evaluations.iter().map(|(_, c, y)| (c.clone(), *y)).collect());
    let pool_pts: Vec<EncodedPoint> = candidates.iter().map(|c| encode(&bench.space, c).unwrap()).collect();
    for src in &sources {
        let region = extract_promising_region(src, &bench.space, &obs_hist, &cfg).unwrap();
        let pos = pool_pts.iter().filter(|p| spacetx::gpc::gpc_predict_label(&region.classifier, p).unwrap() == 1).count();
        let ones = region.classifier.train_labels().iter().filter(|&&l| l == 1).count();
        println!("{}: S={:.3} alpha={:.3} labels +{ones}/100 region {:.1}% of pool",
            src.id, region.similarity, region.alpha_used, 100.0 * pos as f64 / pool_pts.len() as f64);
    }
    println!("y range observed: {:.3}..{:.3}", 
        obs.iter().map(|o| o.1).fold(f64::INFINITY, f64::min),
        obs.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max));
    for src in &sources {
        let means: Vec<f64> = obs.iter().map(|(p, _)| gp_predict(&src.surrogate, p).unwrap().0).collect();
        let mut flips_by_bucket = [0usize; 5];
        let mut total_by_bucket = [0usize; 5];
        let buckets = [0.02, 0.05, 0.1, 0.2, f64::INFINITY];
        let n = obs.len();
        let mut flips = 0; let mut total = 0;
        for j in 0..n { for k in (j+1)..n {
            let dy = (obs[j].1 - obs[k].1).abs();
            let b = buckets.iter().position(|&ub| dy <= ub).unwrap();
            total_by_bucket[b] += 1; total += 1;
            let pres = (means[j] < means[k]) == (obs[j].1 < obs[k].1);
            if !pres { flips_by_bucket[b] += 1; flips += 1; }
        }}
        let s = 1.0 - flips as f64 / total as f64;
        print!("{}: S={s:.3} flips/total per |dy| bucket:", src.id);
        for b in 0..5 { print!(" {}/{}", flips_by_bucket[b], total_by_bucket[b]); }
        println!("  ls={:?} lml={:.1}",
            src.surrogate.lengthscales().iter().map(|l| (l * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            src.surrogate.log_marginal_likelihood());
    }
}
// (appended) inspect source surrogate hyperparameters
