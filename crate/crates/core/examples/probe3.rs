use num_complex::Complex64;
use quasidiff::spectral::{self, ScanOptions, SpectralWindow};
use quasidiff::*;

fn main() {
    let spec = third_order_periodic(
        CoefficientFunction::zero(),
        CoefficientFunction::zero(),
    ).unwrap();
    // sample the determinant near the expected roots and the window
    for &l in &[-250.0, -248.0502134, -100.0, -1.5, 0.0, 1.5, 100.0, 248.0502134, 250.0] {
        let d = char_det(&spec, Complex64::new(l, 0.0)).unwrap();
        println!("det({:>12.4}) = {:.6e} + {:.6e} i  |.| = {:.6e}", l, d.re, d.im, d.norm());
    }
    let res = spectral::find_eigenvalues(
        &spec,
        SpectralWindow::Real { lo: -300.0, hi: 300.0 },
        &ScanOptions::default(),
    ).unwrap();
    println!("found {} eigenvalues:", res.eigenvalues.len());
    for ev in &res.eigenvalues {
        println!("  {} (mult {}, residual {:.3e})", ev.lambda, ev.multiplicity, ev.residual);
    }
}
