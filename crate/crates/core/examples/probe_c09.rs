use spacetx::benchmark::*;
use spacetx::optimizer::DesignerSpec;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let family = match args.get(1).map(|s| s.as_str()) {
        Some("branin") => SyntheticFamily::ShiftedBranin,
        _ => SyntheticFamily::ShiftedQuadratic,
    };
    let reps: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(5);
    let spec = SyntheticSpec { family, n_tasks: 6, shift_scale: 0.0, n_grid: 2000, noise_std: 0.0, adversarial: false };
    let bench = generate_synthetic_family(&spec, 9001).unwrap();
    let methods = vec![MethodSpec { name: "ours-gp".into(), driver: DriverKind::GpBo, designer: DesignerSpec::Ours(Default::default()) }];
    let mut protocol = Protocol::new(9002);
    protocol.trials = 25;
    protocol.reps = reps;
    let results = run_leave_one_out(&bench, &methods, &protocol).unwrap();
    let mut sizes = Vec::new();
    let mut opt_in = 0; let mut cells = 0;
    let mut sims = 0.0; let mut n_sims = 0;
    for cell in results.cells.values() {
        sizes.push(cell.result.designed_space_sizes[19]);
        opt_in += usize::from(cell.result.tracked_membership[19]);
        cells += 1;
        for e in &cell.result.region_extractions { sims += e.similarity; n_sims += 1; }
    }
    sizes.sort_unstable();
    println!("family {:?}: median size@20 = {} / 2000, optimum-in {:.2}, mean S {:.3}",
        family, sizes[sizes.len() / 2], opt_in as f64 / cells as f64, sims / n_sims as f64);
}
