use tgp_core::spectrum::{eigenfunctions_upto, KernelSpec};

fn main() {
    let spec = KernelSpec::new(1.0, 0.25, 1.0).unwrap();
    let mut sup = 0.0f64;
    let mut argmax = 0.0;
    let mut x = 0.0;
    while x <= 8.0 {
        let s: f64 = eigenfunctions_upto(&spec, 10, x).iter().map(|p| p * p).sum();
        if s > sup { sup = s; argmax = x; }
        x += 0.001;
    }
    println!("sup_x sum phi_j(x)^2 (k=10, a=1) = {sup:.1} at x = {argmax:.2}; 3n/2 at n=4000 is 6000, n/2+n = spike threshold ~ deviation n/2=2000");
    // two-sided tail probability beyond argmax
    let z = argmax;
    let p = 0.5 * erfc(z / 2f64.sqrt());
    println!("P(|X| > {z:.2}) = {:.2e}; expected extreme covariates per n=4000 design = {:.2}", 2.0*p, 2.0*p*4000.0);
}

fn erfc(x: f64) -> f64 {
    // Abramowitz-Stegun 7.1.26
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}
