use spacetx::benchmark::*;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let noise: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.0);
    let reps: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(5);
    let spec = SyntheticSpec {
        family: SyntheticFamily::ShiftedQuadratic,
        n_tasks: 6,
        shift_scale: 0.1,
        n_grid: 2000,
        noise_std: noise,
        adversarial: false,
    };
    let bench_seed: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(7001);
    let bench = generate_synthetic_family(&spec, bench_seed).unwrap();
    let methods = vec![
        MethodSpec { name: "gp".into(), driver: DriverKind::GpBo, designer: spacetx::optimizer::DesignerSpec::None },
        MethodSpec { name: "ours-gp".into(), driver: DriverKind::GpBo, designer: spacetx::optimizer::DesignerSpec::Ours(spacetx::transfer::DesignConfig {
            k: std::env::var("OURS_K").map(|s| s.parse().unwrap()).unwrap_or(5),
            ..Default::default()
        }) },
    ];
    let mut protocol = Protocol::new(7002);
    protocol.reps = reps;
    if let Ok(sw) = std::env::var("TARGET_SWEEPS") { protocol.surrogate_options.max_opt_iters = sw.parse().unwrap(); }
    let start = Instant::now();
    let results = run_leave_one_out(&bench, &methods, &protocol).unwrap();
    let agg = aggregate_results(&results).unwrap();
    println!("noise={noise} reps={reps} elapsed={:?}", start.elapsed());
    for row in &agg.methods {
        println!("{:>8}: t10={:.4} t25={:.4} t50={:.4}", row.method, row.mean_nce[9], row.mean_nce[24], row.mean_nce[49]);
    }
    // designed-space diagnostics for ours-gp
    let mut size_sum = vec![0usize; 50];
    let mut opt_in = vec![0usize; 50];
    let mut cells = 0usize;
    let mut sim_sum = 0.0; let mut sim_n = 0usize;
    for ((_, m, _), cell) in &results.cells {
        if m != "ours-gp" { continue; }
        cells += 1;
        for t in 0..50 {
            size_sum[t] += cell.result.designed_space_sizes[t];
            opt_in[t] += usize::from(cell.result.tracked_membership[t]);
        }
        for e in &cell.result.region_extractions {
            sim_sum += e.similarity; sim_n += 1;
        }
    }
    println!("mean similarity over extractions: {:.3}", sim_sum / sim_n as f64);
    for t in [4, 9, 14, 24, 39, 49] {
        println!("t{:>2}: mean size {:>6.0}  optimum-in {:.2}", t + 1,
            size_sum[t] as f64 / cells as f64, opt_in[t] as f64 / cells as f64);
    }
}
