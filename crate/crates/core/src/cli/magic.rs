use std::path::Path;

use serde::Serialize;

use super::{write_file, write_json, CliError, CommonArgs, Format};
use crate::atomic::cesium::cs_d1_fwm_scheme;
use crate::atomic::{coupling_table, find_magic_detuning, find_static_zero, parse_scheme, MagicReport, RamanLevelScheme};

const CESIUM_RANGE: (f64, f64) = (-3000.0, 3000.0);

#[derive(Serialize)]
struct MinimumReport<'a> {
    schema_version: u32,
    scheme: &'a RamanLevelScheme,
    range_mhz: (f64, f64),
    magic: MagicReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    static_zero_mhz: Option<f64>,
}

#[derive(Serialize)]
struct TableRow {
    detuning_mhz: f64,
    static_coupling: Option<f64>,
    doppler_re: f64,
    doppler_im: f64,
    doppler_abs: f64,
}

pub(super) fn run(
    common: &CommonArgs,
    scheme_path: Option<&Path>,
    cesium: bool,
    temperature: f64,
    range: Option<Vec<f64>>,
    step: f64,
) -> Result<(), CliError> {
    let scheme = match (scheme_path, cesium) {
        (Some(p), false) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_scheme(&text)?
        }
        (None, true) => cs_d1_fwm_scheme(temperature),
        _ => return Err(CliError::Usage("give a scheme file or --cesium".into())),
    };
    let range = match range.as_deref() {
        Some([lo, hi]) => (*lo, *hi),
        Some(_) => return Err(CliError::Usage("--range takes two values".into())),
        None if cesium => CESIUM_RANGE,
        None => return Err(CliError::Usage("--range LO HI is required for a scheme file".into())),
    };
    if !(range.0 < range.1) {
        return Err(CliError::Usage(format!("empty detuning range [{}, {}]", range.0, range.1)));
    }
    let table: Vec<TableRow> = coupling_table(&scheme, range, step)?
        .into_iter()
        .map(|(x, s, d)| TableRow {
            detuning_mhz: x,
            static_coupling: s,
            doppler_re: d.re,
            doppler_im: d.im,
            doppler_abs: d.norm(),
        })
        .collect();
    match common.format {
        Format::Json => write_json(&common.out_dir.join("coupling_table.json"), &table)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &table {
                w.serialize(row).map_err(|e| CliError::Data(e.to_string()))?;
            }
            let buf = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
            write_file(&common.out_dir.join("coupling_table.csv"), &buf)?;
        }
    }
    let magic = find_magic_detuning(&scheme, range)?;
    let report = MinimumReport {
        schema_version: crate::dataset::SCHEMA_VERSION,
        scheme: &scheme,
        range_mhz: range,
        static_zero_mhz: find_static_zero(&scheme, range).ok(),
        magic,
    };
    write_json(&common.out_dir.join("magic_report.json"), &report)?;
    println!(
        "magic detuning {:.4} MHz, |R| = {:.3e}, {} the Doppler width ({:.1} MHz)",
        report.magic.detuning_mhz,
        report.magic.coupling_abs,
        if report.magic.outside_doppler_width { "outside" } else { "inside" },
        report.magic.doppler_width_mhz
    );
    Ok(())
}
