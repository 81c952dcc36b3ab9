//! Detection efficiencies from g2_WR, η_R and <n_R> against <n_W>, and the
//! intrinsic retrieval efficiency.

use dlcz::fit::{fit_detection_efficiencies, intrinsic_retrieval, predict_curves, EfficiencyPoint, NoiseCalibration};
use dlcz::{Measured, WriteNoiseLine};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cal = NoiseCalibration {
        line: WriteNoiseLine::new(6e-5, 0.08)?,
        lambda_b: 4e-3,
        g2_bb: 1.5,
    };
    let n_w: Vec<f64> = (1..=8).map(|i| 4e-4 * i as f64).collect();
    let truth = predict_curves(0.029, 0.06, &cal, &n_w)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut noisy = |v: f64, rel: f64| {
        let e = rel * v;
        (v + Normal::new(0.0, e).map(|n| n.sample(&mut rng)).unwrap_or(0.0), e)
    };
    let points: Vec<EfficiencyPoint> = (0..n_w.len())
        .map(|i| EfficiencyPoint {
            n_w: n_w[i],
            g2_wr: Some(noisy(truth.g2_wr[i], 0.05)),
            eta_r: Some(noisy(truth.eta_r[i], 0.05)),
            n_r: Some(noisy(truth.n_r[i], 0.01)),
        })
        .collect();
    let fit = fit_detection_efficiencies(&points, &cal)?;
    println!("η_X = {} (injected 0.029), η_Y = {} (injected 0.060)", fit.eta_x, fit.eta_y);
    println!("χ² = {:.1} for {} values", fit.chi2, fit.residuals.len());

    let star = intrinsic_retrieval(Measured::new(0.060, 0.002), Measured::new(0.19, 0.02), Measured::new(0.45, 0.02))?;
    println!("η*_R = {star}");
    Ok(())
}
