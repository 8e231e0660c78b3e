use stable_noise::gridops::*;
use stable_noise::kernel::*;

fn main() {
    let f = Kernel::from_fn(
        1,
        |x: &[f64]| (1.0 - x[0].abs()).max(0.0),
        Some(BoxDomain::new(vec![-1.0], vec![1.0]).unwrap()),
        None,
    );
    let alpha = 1.5;
    for &h in &[0.5, 0.25, 0.125, 0.0625] {
        let grid = GridSpec::covering(&f, h, alpha, 1e-9).unwrap();
        let avg = cell_average(&f, &grid).unwrap();
        let dist = lalpha_distance(&avg, &f, alpha, 1e-10).unwrap();
        println!("h = {h}: dist = {dist:.6e}");
    }
}
