//! Delay sweep: g2_WR(τ_D) and η_R(τ_D) decay fits and threshold crossings.

use dlcz::estimate::{Channel, Moments, Selection};
use dlcz::fit::{fit_memory_decay, threshold_crossing, CurvePoint, DecayModel};
use dlcz::sim::{simulate_interleaved, SimConfig};
use dlcz::{ModelParams, WriteNoiseLine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let line = WriteNoiseLine::new(6e-5, 0.08)?;
    let model = ModelParams::with_noise_line(0.02, 0.029, 0.06, &line, 4e-3, 1.5)?;
    let tau = 400.0;
    let delays: Vec<f64> = (0..11).map(|i| 10.0 + 100.0 * i as f64).collect();
    let mut blocks = Vec::new();
    for (i, &d) in delays.iter().enumerate() {
        let c = SimConfig {
            delay_us: d,
            memory_tau_us: Some(tau),
            ..SimConfig::new(model, 1_000_000, 100 + 2 * i as u64)
        };
        blocks.push(SimConfig {
            write_pulse_present: false,
            rng_seed: 101 + 2 * i as u64,
            ..c.clone()
        });
        blocks.push(c);
    }
    let data = simulate_interleaved(&blocks)?;

    let (mut g2, mut eta) = (Vec::new(), Vec::new());
    let (mut ww, mut rr) = (0.0, 0.0);
    for &d in &delays {
        let m = Moments::from_dataset(&data, Selection::at_delay(d))?;
        let g = m.g2_cross()?;
        let e = m.retrieval_efficiency()?;
        ww += m.g2_unconditional(Channel::Write)?.value / delays.len() as f64;
        rr += m.g2_unconditional(Channel::Read)?.value / delays.len() as f64;
        println!("τ_D = {d:>6} µs: g2_WR = {:6.2} ± {:5.2}, η_R = {:.4} ± {:.4}", g.value, g.std_err, e.value, e.std_err);
        g2.push(CurvePoint::new(d, g.value, g.std_err));
        eta.push(CurvePoint::new(d, e.value, e.std_err));
    }
    let fit_eta = fit_memory_decay(&eta, DecayModel::PlainExp)?;
    println!("η_R decay: τ = {:.0} ± {:.0} µs (injected {tau})", fit_eta.tau_us.value, fit_eta.tau_us.std_err);
    let fit_g = fit_memory_decay(&g2, DecayModel::G2Offset1)?;
    println!("g2_WR decay: B = {}, τ = {}", fit_g.amplitude, fit_g.tau_us);
    for (label, r) in [
        ("g2_WR = 5.7", threshold_crossing(&fit_g, 5.7, None)),
        ("g2_WR = 2", threshold_crossing(&fit_g, 2.0, None)),
        ("R_CS = 1", threshold_crossing(&fit_g, 1.0, Some((ww, rr)))),
    ] {
        match r {
            Ok(c) => println!("{label} at {:.0} ± {:.0} µs", c.time_us, c.std_err),
            Err(e) => println!("{label}: {e}"),
        }
    }
    Ok(())
}
