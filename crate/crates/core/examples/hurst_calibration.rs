//! Estimate the Hurst exponent of exact fractional Gaussian noise and show
//! the log-log points behind one fit.

use congestion::features::{hurst, DEFAULT_MIN_LEN};
use congestion::pipeline::format_calibration;
use congestion::synth::{calibrate_hurst, fgn_generate, FgnSpec, CALIBRATION_GRID};

fn main() {
    let x = fgn_generate(FgnSpec { h_target: 0.8, n: 1024, seed: 1 }).unwrap();
    let fit = hurst(&x, DEFAULT_MIN_LEN).unwrap();
    println!("H = 0.8 sample: estimate {:.3}, r^2 {:.3}", fit.h, fit.r_squared);
    for (log_n, log_rs) in &fit.points {
        println!("  log10 N = {log_n:.3}  log10 RS = {log_rs:.3}");
    }
    for n in [1024, 80] {
        println!();
        print!("{}", format_calibration(&calibrate_hurst(&CALIBRATION_GRID, n, 50, DEFAULT_MIN_LEN).unwrap()));
    }
}
