//! The Faddeeva function w(z) and the Doppler-broadened line shape it gives.

use dlcz::atomic::faddeeva;
use num_complex::Complex64;

fn main() {
    for z in [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(1.0, 0.5),
        Complex64::new(-3.0, 0.01),
        Complex64::new(6.0, 2.0),
        Complex64::new(100.0, 0.0),
        Complex64::new(1.0, -0.5),
    ] {
        let w = faddeeva(z);
        println!("w({z}) = {:.15} {:+.15}i", w.re, w.im);
    }
    let z = Complex64::new(100.0, 0.0);
    let lead = Complex64::i() / (std::f64::consts::PI.sqrt() * z);
    println!("|w/(i/√π z) − 1| at z = 100: {:.2e}", (faddeeva(z) / lead - 1.0).norm());

    // Voigt profile: Re w((Δ + iγ/2)/Γ_D) for γ = 5, Γ_D = 200.
    for delta in [-400.0, -200.0, 0.0, 200.0, 400.0] {
        let v = faddeeva(Complex64::new(delta / 200.0, 2.5 / 200.0)).re;
        println!("Δ = {delta:>6}: Voigt {v:.6}");
    }
}
