use spacetx::gp::GpOptions;
use spacetx::gpc::*;
use spacetx::seed::rng_from_seed;
use spacetx::space::*;

fn main() {
    let space = SearchSpace::new(vec![
        ParameterDef::continuous("x0", 0.0, 1.0, false, 0.5),
        ParameterDef::continuous("x1", 0.0, 1.0, false, 0.5),
    ]).unwrap();
    // rippled bowl like the benchmark family
    let f = |a: f64, b: f64| {
        let bowl = (a - 0.5f64).powi(2) + (b - 0.5f64).powi(2);
        let r = (2.0 * std::f64::consts::PI * 2.5 * a).cos() * (2.0 * std::f64::consts::PI * 2.5 * b).cos();
        bowl + 0.4 * r
    };
    let mut rng = rng_from_seed(2);
    let train = sample_uniform(&space, 100, &mut rng);
    let pool = sample_uniform(&space, 2000, &mut rng);
    let ys: Vec<f64> = train.iter().map(|c| match (&c.values[0], &c.values[1]) {
        (ParamValue::Float(a), ParamValue::Float(b)) => f(*a, *b), _ => unreachable!() }).collect();
    let points: Vec<_> = train.iter().map(|c| encode(&space, c).unwrap()).collect();
    let pool_pts: Vec<_> = pool.iter().map(|c| encode(&space, c).unwrap()).collect();

    for n_pos in [5usize, 14, 30] {
        let mut sorted = ys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let thr = sorted[n_pos];
        let labels: Vec<u8> = ys.iter().map(|&y| u8::from(y < thr)).collect();
        let opts = GpOptions { restarts: 1, max_opt_iters: 4, ..GpOptions::default() };
        let m = fit_gpc(&points, &labels, &opts).unwrap();
        let acc = m.training_accuracy();
        let pos_frac = pool_pts.iter().filter(|p| gpc_predict_label(&m, p).unwrap() == 1).count() as f64 / 2000.0;
        // recall on the truly-positive training points
        let recall = points.iter().zip(&labels).filter(|(_, &l)| l == 1)
            .filter(|(p, _)| gpc_predict_label(&m, p).unwrap() == 1).count();
        println!("n_pos={n_pos:>2}: train acc={acc:.3} region={:.1}% of pool, recall {recall}/{n_pos}", pos_frac * 100.0);
    }
}
