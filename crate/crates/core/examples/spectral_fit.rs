//! Filter-cavity scans of write and read photons and the write efficiency.

use dlcz::fit::{
    fit_read_spectrum, fit_write_spectrum, read_spectrum_model, write_efficiency, write_spectrum_model,
    ReadSpectrumParams, SpectrumScan, WriteSpectrumParams, DEFAULT_LARMOR_MHZ,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let detunings: Vec<f64> = (0..241).map(|i| -6.0 + 0.05 * i as f64).collect();
    let counts = |f: &dyn Fn(f64) -> f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        detunings
            .iter()
            .map(|&x| Poisson::new(f(x).max(1e-9)).map(|p| p.sample(rng)).unwrap_or(0.0))
            .collect()
    };

    let write = WriteSpectrumParams {
        a_narr: 820.0,
        a_broad: 180.0,
        a_lkg: 300.0,
        a_bg: 10.0,
        width_1: 0.5,
        width_2: 1.1,
        width_broad: 5.0,
    };
    let y = counts(&|x| write_spectrum_model(&write, DEFAULT_LARMOR_MHZ, x), &mut rng);
    let fit = fit_write_spectrum(&SpectrumScan::new(detunings.clone(), y))?;
    println!(
        "write: widths {:.3}/{:.3} MHz, η_W = {} (injected 0.82), reduced χ² = {:.2}",
        fit.width_1,
        fit.width_2,
        write_efficiency(&fit)?,
        fit.report().reduced_chi2
    );

    let read = ReadSpectrumParams {
        b_narr_write: 600.0,
        b_narr_no_write: 150.0,
        b_broad: 100.0,
        b_lkg: 200.0,
        b_bg: 10.0,
        width_1: 0.5,
        width_2: 1.1,
        width_broad: 5.0,
    };
    let mut scan = SpectrumScan::new(
        detunings.clone(),
        counts(&|x| read_spectrum_model(&read, DEFAULT_LARMOR_MHZ, x, true), &mut rng),
    );
    scan.counts_no_write = Some(counts(&|x| read_spectrum_model(&read, DEFAULT_LARMOR_MHZ, x, false), &mut rng));
    let fit = fit_read_spectrum(&scan)?;
    println!(
        "read: narrow with write {:.1} ± {:.1}, without {:.1} ± {:.1}",
        fit.a_narr,
        fit.std_err("b_narr_write").unwrap_or(f64::NAN),
        fit.a_narr_no_write.unwrap_or(f64::NAN),
        fit.std_err("b_narr_no_write").unwrap_or(f64::NAN)
    );
    Ok(())
}
