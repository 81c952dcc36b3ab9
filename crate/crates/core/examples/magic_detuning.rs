//! Magic detuning of the caesium D1 four-wave-mixing scheme.

use dlcz::atomic::cesium::cs_d1_fwm_scheme;
use dlcz::atomic::{find_magic_detuning, find_static_zero, format_scheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scheme = cs_d1_fwm_scheme(43.0);
    print!("{}", format_scheme(&scheme));
    let zero = find_static_zero(&scheme, (-3000.0, 3000.0))?;
    println!("static zero: {zero:.3} MHz");
    let report = find_magic_detuning(&scheme, (-3000.0, 3000.0))?;
    println!(
        "Doppler minimum: {:.4} MHz, |R| = {:.3e}, distances to resonances {:?} MHz, Doppler width {:.1} MHz",
        report.detuning_mhz, report.coupling_abs, report.distance_to_resonances_mhz, report.doppler_width_mhz
    );
    println!("outside Doppler width: {}", report.outside_doppler_width);
    Ok(())
}
