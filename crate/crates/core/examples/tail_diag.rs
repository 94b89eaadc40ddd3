use sixv::hydro;
use sixv::params::ModelParams;

fn main() {
    let p = ModelParams::new(0.3, 0.6).unwrap();
    let grid = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
    for (t, n) in [(500u32, 2000u64), (2000, 2000)] {
        let tp = hydro::tail_profile(&p, t, 1.0, n, 0xAC12, &grid).unwrap();
        println!("T={t} trials={n}");
        println!("  s:     {:?}", tp.s_grid);
        println!("  upper: {:?}", tp.upper);
        println!("  lower: {:?}", tp.lower);
    }
}
