use sparse_gev::Model;

fn gumbel_ln_pdf(x: f64, mu: f64, s: f64) -> f64 {
    let u = (x - mu) / s;
    -s.ln() - u - (-u).exp()
}

fn normal_ln_pdf(x: f64, m: f64, sd: f64) -> f64 {
    -0.5 * ((x - m) / sd).powi(2) - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Exact filtered means `E[mu_t | x_0..x_t]` by forward recursion on a dense grid.
pub fn grid_filter(model: &Model, x: &[f64]) -> Vec<f64> {
    let (c, b, s, tau) = (model.c()[0], model.beta()[[0, 0, 0]], model.sigma()[0], model.tau());
    let lo = x.iter().cloned().fold(f64::MAX, f64::min) - 12.0 * (tau + s);
    let hi = x.iter().cloned().fold(f64::MIN, f64::max) + 12.0 * (tau + s);
    let n = 4001;
    let h = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|k| lo + k as f64 * h).collect();
    let mean_of = |w: &[f64]| {
        let z: f64 = w.iter().sum();
        grid.iter().zip(w).map(|(g, w)| g * w).sum::<f64>() / z
    };
    // the filter starts from mu_0 ~ N(x_0, tau^2)
    let mut dens: Vec<f64> = grid.iter().map(|&m| normal_ln_pdf(m, x[0], tau).exp()).collect();
    let mut means = vec![mean_of(&dens)];
    for &xt in &x[1..] {
        let mut next = vec![0.0; n];
        for (j, &m) in grid.iter().enumerate() {
            let pred: f64 = grid
                .iter()
                .zip(&dens)
                .map(|(&mp, &d)| d * normal_ln_pdf(m, c + b * mp, tau).exp())
                .sum::<f64>()
                * h;
            next[j] = pred * gumbel_ln_pdf(xt, m, s).exp();
        }
        let z: f64 = next.iter().sum::<f64>() * h;
        dens = next.into_iter().map(|d| d / z).collect();
        means.push(mean_of(&dens));
    }
    means
}
