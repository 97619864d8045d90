use shearjet::jets::{build_direction_set, build_profiles, psi2_phi2, JetParams};
use shearjet::spectral::GridSpec;

fn main() {
    let jp = JetParams::new(4.0, 0.25, 0.5, 0.5).unwrap();
    let ds = build_direction_set(&jp).unwrap();
    let prof = build_profiles(2048).unwrap();
    let grid = GridSpec::new(3, 96).unwrap();
    let vol = grid.volume();
    let mut worst = 0.0f64;
    for k in 0..ds.dirs.len() {
        let p2 = psi2_phi2(&ds, k, &jp, &prof, 0.17, grid).unwrap();
        let mean = p2.iter().sum::<f64>() / p2.len() as f64;
        worst = worst.max((mean * vol - 1.0).abs());
    }
    println!("N=96 normalized psi2_phi2: worst |vol·mean − 1| = {worst:.3e}");
}
