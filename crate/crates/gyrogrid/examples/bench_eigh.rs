use gyrogrid::circuit::charge_offset_spectrum_shift;
use gyrogrid::params::{FluxRatio, ModelParams};

fn main() {
    let flux = FluxRatio::new(1, 2).unwrap();
    for (rv, rw) in [(0.3, 0.5), (0.4, 0.8)] {
        let model = ModelParams::new(flux, rv, rw).unwrap();
        for (n, m) in [(16usize, 48usize), (20, 48), (20, 64), (24, 64), (24, 80), (28, 96)] {
            let s = charge_offset_spectrum_shift(&model, n, m, (0.15, -0.2), 5).unwrap();
            println!("rv={rv} rw={rw} n_max={n:2} m_max={m:3}  shift={s:.3e}");
        }
    }
}
