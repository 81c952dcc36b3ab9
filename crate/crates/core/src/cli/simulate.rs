use std::io::BufWriter;

use super::config::{read_toml, Manifest, ManifestEntry, SimulateConfig};
use super::{write_json, CliError, CommonArgs, Format};
use crate::dataset::{ClickDataset, SCHEMA_VERSION};
use crate::pgf::ModelParams;
use crate::sim::{simulate_interleaved, SimConfig};

pub const DATASET_STEM: &str = "dataset";

/// Seed of block `block` in dataset `dataset`, spread with a golden-ratio
/// increment so neighbouring blocks get unrelated streams.
fn block_seed(seed: u64, dataset: usize, block: usize) -> u64 {
    let k = ((dataset as u64) << 20) | block as u64;
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k + 1))
}

/// Expands the sweeps into one list of interleaved blocks per dataset.
pub fn build_configs(config: &SimulateConfig, seed: u64) -> Result<Vec<Vec<SimConfig>>, CliError> {
    let base = &config.simulation;
    let mus = if config.sweep.mu.is_empty() {
        vec![base.model.mu]
    } else {
        config.sweep.mu.clone()
    };
    let delays = if config.sweep.delays_us.is_empty() {
        vec![base.delay_us]
    } else {
        config.sweep.delays_us.clone()
    };
    let mut out = Vec::with_capacity(mus.len());
    for (d, &mu) in mus.iter().enumerate() {
        let model = match &config.noise_line {
            Some(line) => ModelParams::with_noise_line(
                mu,
                base.model.eta_x,
                base.model.eta_y,
                line,
                base.model.lambda_b,
                base.model.g2_bb,
            )?,
            None => ModelParams { mu, ..base.model },
        };
        let mut blocks = Vec::new();
        for &delay in &delays {
            let with_write = SimConfig {
                model,
                delay_us: delay,
                write_pulse_present: true,
                rng_seed: block_seed(seed, d, blocks.len()),
                ..base.clone()
            };
            blocks.push(with_write.clone());
            if config.sweep.no_write_sequences > 0 {
                blocks.push(SimConfig {
                    n_sequences: config.sweep.no_write_sequences,
                    write_pulse_present: false,
                    rng_seed: block_seed(seed, d, blocks.len()),
                    ..with_write
                });
            }
        }
        for b in &blocks {
            b.validate()?;
        }
        out.push(blocks);
    }
    Ok(out)
}

pub(super) fn write_dataset(data: &ClickDataset, path: &std::path::Path, format: Format) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let out = BufWriter::new(file);
    match format {
        Format::Json => data.write_jsonl(out)?,
        Format::Csv => data.write_csv(out)?,
    }
    Ok(())
}

pub(super) fn run(common: &CommonArgs) -> Result<(), CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("simulate needs --config <file>".into()))?;
    let config: SimulateConfig = read_toml(path)?;
    let seed = common.seed.or(config.seed).unwrap_or(0);
    let datasets = build_configs(&config, seed)?;
    let ext = match common.format {
        Format::Json => "jsonl",
        Format::Csv => "csv",
    };
    let mut entries = Vec::with_capacity(datasets.len());
    for (i, blocks) in datasets.iter().enumerate() {
        let file = if datasets.len() == 1 {
            format!("{DATASET_STEM}.{ext}")
        } else {
            format!("{DATASET_STEM}_{i:03}.{ext}")
        };
        let data = simulate_interleaved(blocks)?;
        write_dataset(&data, &common.out_dir.join(&file), common.format)?;
        entries.push(ManifestEntry {
            file,
            n_sequences: data.len() as u64,
            model: blocks[0].model,
            metadata: data.metadata().clone(),
        });
        eprintln!("simulated {} sequences ({}/{})", data.len(), i + 1, datasets.len());
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        format: ext.to_string(),
        config: SimulateConfig {
            seed: Some(seed),
            ..config
        },
        datasets: entries,
    };
    write_json(&common.out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}
