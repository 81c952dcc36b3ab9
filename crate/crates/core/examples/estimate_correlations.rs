//! Correlation functions and retrieval efficiency from simulated clicks,
//! compared with the model, for the full read pulse and shorter windows.

use dlcz::estimate::{Channel, Moments, Selection};
use dlcz::pgf::{g2_conditional_auto, g2_cross};
use dlcz::sim::{simulate_interleaved, SimConfig};
use dlcz::{ModelParams, WriteNoiseLine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let line = WriteNoiseLine::new(6e-5, 0.08)?;
    let model = ModelParams::with_noise_line(0.05, 0.029, 0.06, &line, 4e-3, 1.5)?;
    let base = SimConfig {
        record_time_tags: true,
        ..SimConfig::new(model, 3_000_000, 3)
    };
    let data = simulate_interleaved(&[
        base.clone(),
        SimConfig {
            write_pulse_present: false,
            rng_seed: 4,
            ..base.clone()
        },
    ])?;
    println!("model: g2_WR = {:.3}, g2_RR|W=1 = {:.3}", g2_cross(&model)?, g2_conditional_auto(&model)?);
    for window in [None, Some(10.0), Some(40.0), Some(130.0)] {
        let m = Moments::from_dataset(&data, Selection { delay_us: None, window_us: window })?;
        let g = m.g2_cross()?;
        let eta = m.retrieval_efficiency()?;
        let cond = m.g2_conditional()?;
        let rr = m.g2_unconditional(Channel::Read)?;
        println!(
            "window {window:?}: g2_WR = {:.3} ± {:.3}, eta_R = {:.4} ± {:.4}, g2_RR|W=1 = {:.3} ± {:.3}, g2_RR = {:.3}",
            g.value, g.std_err, eta.value, eta.std_err, cond.value, cond.std_err, rr.value
        );
        if let Some(w) = window {
            let mw = base.model_in_window(w);
            println!("    windowed model: g2_WR = {:.3}", g2_cross(&mw)?);
        }
    }
    Ok(())
}
