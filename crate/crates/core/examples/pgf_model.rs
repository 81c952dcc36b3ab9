//! Closed-form photon statistics against the brute-force joint distribution.

use dlcz::pgf::{
    cauchy_schwarz_parameter, conditional_read_mean, g2_conditional_auto, g2_cross, g2_read_marginal,
    g2_write_marginal, joint_pmf, mean_counts, retrieval_efficiency_model,
};
use dlcz::{ModelParams, WriteNoiseLine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let line = WriteNoiseLine::new(6e-5, 0.08)?;
    println!("{:>6} {:>10} {:>8} {:>8} {:>8} {:>6}", "mu", "<n_W>", "g2_WR", "g2_RR|W", "eta_R", "R_CS");
    for mu in [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5] {
        let p = ModelParams::with_noise_line(mu, 0.029, 0.06, &line, 4e-3, 1.5)?;
        let g = g2_cross(&p)?;
        let rcs = cauchy_schwarz_parameter(g, g2_write_marginal(&p)?, g2_read_marginal(&p)?)?;
        println!(
            "{mu:>6} {:>10.3e} {g:>8.3} {:>8.3} {:>8.4} {rcs:>6.2}",
            mean_counts(&p).0,
            g2_conditional_auto(&p)?,
            retrieval_efficiency_model(&p)?,
        );
    }

    // The same quantities from the truncated joint PMF.
    let p = ModelParams::with_noise_line(0.05, 0.029, 0.06, &line, 4e-3, 1.5)?;
    let m = joint_pmf(&p, 40)?.moments();
    println!("\nmu = 0.05, closed form vs joint PMF (n_max = 40):");
    println!("  g2_WR    {:.12} {:.12}", g2_cross(&p)?, m.g2_cross);
    println!(
        "  E(R|W=1) {:.12} {:.12}",
        p.eta_y * conditional_read_mean(&p)? + p.lambda_b,
        m.heralded_read_mean
    );
    println!("  g2_RR|W  {:.12} {:.12}", g2_conditional_auto(&p)?, m.g2_heralded_read);
    Ok(())
}
