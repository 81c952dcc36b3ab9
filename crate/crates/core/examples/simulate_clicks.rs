//! Monte Carlo click records at the reference operating point.

use dlcz::pgf::{g2_cross, mean_counts};
use dlcz::sim::{simulate_interleaved, SimConfig};
use dlcz::{ModelParams, WriteNoiseLine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let line = WriteNoiseLine::new(6e-5, 0.08)?;
    let model = ModelParams::with_noise_line(0.02, 0.029, 0.06, &line, 4e-3, 1.5)?;
    let with_write = SimConfig {
        record_time_tags: true,
        ..SimConfig::new(model, 200_000, 1)
    };
    let no_write = SimConfig {
        write_pulse_present: false,
        rng_seed: 2,
        ..with_write.clone()
    };
    let data = simulate_interleaved(&[with_write, no_write])?;
    println!("{} sequences, blocks {:?}", data.len(), data.metadata().blocks);
    for rec in data.records().filter(|r| r.write_clicks > 0 && r.read_clicks > 0).take(5) {
        println!("{rec:?}");
    }
    let (n_w, n_r) = mean_counts(&model);
    println!("model: <n_W> = {n_w:.3e}, <n_R> = {n_r:.3e}, g2_WR = {:.2}", g2_cross(&model)?);

    let mut out = Vec::new();
    data.write_jsonl(&mut out)?;
    let first = out.split(|&b| b == b'\n').next().unwrap_or_default();
    println!("first JSON line: {}", String::from_utf8_lossy(first));
    Ok(())
}
