//! Simulate a small forest scene, write it to disk, and read it back.
//!
//! cargo run --release --example simulate_scene -- [out_dir]

use std::path::PathBuf;

use tomoboost::sardata::{read_stack, write_raster, write_stack, AcquisitionGeometry, Polarization};
use tomoboost::simulator::{simulate_stack, vertical_wavenumbers, SceneSpec};

fn main() -> tomoboost::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("tomoboost_scene"));
    let geometry = AcquisitionGeometry::p_band_six_tracks();
    let spec = SceneSpec {
        rows: 128,
        cols: 128,
        ..SceneSpec::default()
    };
    let scene = simulate_stack(&spec, &geometry)?;

    let kz = vertical_wavenumbers(&geometry)?;
    println!("kz [rad/m]: {:?}", kz.as_slice());
    println!("Fourier vertical resolution: {:.2} m", kz.fourier_resolution());

    let (lo, hi) = scene
        .chm
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    println!("CHM range {lo:.1} .. {hi:.1} m");

    for pol in Polarization::ALL {
        let ch = tomoboost::sardata::channel_index(0, pol);
        let power: f64 = scene.stack.channel(ch).iter().map(|z| z.norm_sqr()).sum::<f64>()
            / scene.stack.channel(ch).len() as f64;
        println!("mean {} power on the master track: {power:.3}", pol.name());
    }

    write_stack(&scene.stack, &out.join("stack"))?;
    write_raster(&scene.dtm, &out.join("dtm"))?;
    write_raster(&scene.chm, &out.join("chm"))?;
    let back = read_stack(&out.join("stack"))?;
    println!("wrote {} ({}x{}, {} channels)", out.display(), back.rows(), back.cols(), back.num_channels());
    Ok(())
}
