//! File emission: trace CSVs, combined SVG plots, training-curve CSVs, and
//! PGM sample grids.

use std::fs;
use std::path::Path;

use ctrloptim_core::lti::TimeSeries;
use ctrloptim_core::metrics::render_svg;
use ctrloptim_core::nn::{SampleDump, TrainCurve};

use crate::Result;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_timeseries_csv(path: &Path, trace: &TimeSeries) -> Result<()> {
    fs::write(path, trace.to_csv())?;
    Ok(())
}

pub fn write_traces_svg(path: &Path, traces: &[TimeSeries]) -> Result<()> {
    fs::write(path, render_svg(traces)?)?;
    Ok(())
}

pub fn write_train_curve_csv(path: &Path, curve: &TrainCurve) -> Result<()> {
    fs::write(path, curve.to_csv())?;
    Ok(())
}

/// Binary PGM (P5) grid of grayscale images: 8 x 8 tiles, each `side x side`
/// pixels, row-major in dump order.
pub fn write_pgm_grid(path: &Path, dump: &SampleDump) -> Result<()> {
    let side = (dump.width as f64).sqrt().round() as usize;
    let (tile_w, tile_h) = if side * side == dump.width {
        (side, side)
    } else {
        (dump.width, 1)
    };
    let grid = 8usize;
    let (w, h) = (grid * tile_w, grid * tile_h);
    let mut pixels = vec![0u8; w * h];
    for (idx, image) in dump.images.chunks(dump.width).take(grid * grid).enumerate() {
        let (gx, gy) = (idx % grid, idx / grid);
        for (p, &v) in image.iter().enumerate() {
            let (x, y) = (p % tile_w, p / tile_w);
            let byte = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            pixels[(gy * tile_h + y) * w + gx * tile_w + x] = byte;
        }
    }
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    fs::write(path, out)?;
    Ok(())
}
