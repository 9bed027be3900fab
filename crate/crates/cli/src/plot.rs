//! Minimal raster line plots for loss curves. No text rendering; each
//! series gets a color swatch in the top-left corner in legend order.

use std::path::Path;

use cyclegan_core::Result;
use image::{Rgb, RgbImage};

const WIDTH: u32 = 900;
const HEIGHT: u32 = 600;
const MARGIN: u32 = 50;

pub const PALETTE: [Rgb<u8>; 4] = [
    Rgb([214, 69, 65]),
    Rgb([31, 119, 180]),
    Rgb([44, 160, 44]),
    Rgb([148, 103, 189]),
];

pub struct Series<'a> {
    pub values: &'a [f64],
    pub color: Rgb<u8>,
}

pub fn line_plot(series: &[Series<'_>], path: &Path) -> Result<()> {
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut max_len = 0usize;
    for s in series {
        for &v in s.values {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        max_len = max_len.max(s.values.len());
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }

    let x0 = MARGIN as f64;
    let x1 = (WIDTH - MARGIN) as f64;
    let y0 = (HEIGHT - MARGIN) as f64; // bottom
    let y1 = MARGIN as f64; // top

    // Axes.
    draw_line(&mut img, x0, y0, x1, y0, Rgb([0, 0, 0]));
    draw_line(&mut img, x0, y0, x0, y1, Rgb([0, 0, 0]));

    for s in series {
        if s.values.len() < 2 {
            continue;
        }
        let step = (x1 - x0) / (max_len.max(2) - 1) as f64;
        let scale = |v: f64| y0 - (v - lo) / (hi - lo) * (y0 - y1);
        for (i, pair) in s.values.windows(2).enumerate() {
            let ax = x0 + i as f64 * step;
            let bx = x0 + (i + 1) as f64 * step;
            draw_line(&mut img, ax, scale(pair[0]), bx, scale(pair[1]), s.color);
        }
    }

    // Legend swatches.
    for (i, s) in series.iter().enumerate() {
        let sx = MARGIN + 8 + 24 * i as u32;
        for dx in 0..16 {
            for dy in 0..16 {
                img.put_pixel(sx + dx, 8 + dy, s.color);
            }
        }
    }

    img.save(path)?;
    Ok(())
}

fn draw_line(img: &mut RgbImage, ax: f64, ay: f64, bx: f64, by: f64, color: Rgb<u8>) {
    let steps = ((bx - ax).abs().max((by - ay).abs()).ceil() as usize).max(1);
    for t in 0..=steps {
        let f = t as f64 / steps as f64;
        let x = ax + (bx - ax) * f;
        let y = ay + (by - ay) * f;
        if x >= 0.0 && y >= 0.0 && (x as u32) < WIDTH && (y as u32) < HEIGHT {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}
