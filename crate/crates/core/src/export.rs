//! Map files: 8-bit grayscale PNG, flat CSV and false-color heat maps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{normalize_raster, Raster};

fn to_byte(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

fn image_error(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Range-normalizes and writes one byte per pixel; a non-flat map always
/// reaches 255.
pub fn save_gray_png(map: &Raster, path: &Path) -> Result<()> {
    let n = normalize_raster(map);
    let (w, h) = n.dims();
    let buf = image::GrayImage::from_fn(w as u32, h as u32, |x, y| image::Luma([to_byte(n.get(x as usize, y as usize))]));
    buf.save(path).map_err(|e| image_error(path, e))
}

/// `width,height` header line, then one row of comma-separated values per image row.
pub fn raster_csv(map: &Raster) -> String {
    let (w, h) = map.dims();
    let mut out = format!("{w},{h}\n");
    for y in 0..h {
        let row: Vec<String> = (0..w).map(|x| map.get(x, y).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_raster_csv(text: &str) -> Result<Raster> {
    let bad = |m: &str| Error::param(format!("malformed map csv: {m}"));
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| bad("empty"))?;
    let (w, h) = head.split_once(',').ok_or_else(|| bad("missing dimensions"))?;
    let w: usize = w.trim().parse().map_err(|_| bad("width"))?;
    let h: usize = h.trim().parse().map_err(|_| bad("height"))?;
    let mut data = Vec::with_capacity(w * h);
    for line in lines.take(h) {
        for v in line.split(',') {
            data.push(v.trim().parse::<f64>().map_err(|_| bad("value"))?);
        }
    }
    Raster::new(w, h, data)
}

/// Dark blue through cyan and yellow to dark red.
pub fn heat_color(v: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [
        [0.0, 0.0, 0.5],
        [0.0, 0.5, 1.0],
        [0.5, 1.0, 0.5],
        [1.0, 0.8, 0.0],
        [0.6, 0.0, 0.0],
    ];
    let t = v.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    [0, 1, 2].map(|c| to_byte(a[c] + f * (b[c] - a[c])))
}

pub fn save_heatmap_png(map: &Raster, path: &Path) -> Result<()> {
    let n = normalize_raster(map);
    let (w, h) = n.dims();
    let buf = image::RgbImage::from_fn(w as u32, h as u32, |x, y| image::Rgb(heat_color(n.get(x as usize, y as usize))));
    buf.save(path).map_err(|e| image_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_png_reaches_full_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let map = Raster::from_fn(7, 5, |x, y| (x * y) as f64 * 0.01 + 3.0);
        save_gray_png(&map, &path).unwrap();
        let back = image::open(&path).unwrap().into_luma8();
        assert_eq!(back.dimensions(), (7, 5));
        assert_eq!(back.pixels().map(|p| p.0[0]).max(), Some(255));
        assert_eq!(back.get_pixel(0, 0).0[0], 0);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let map = Raster::from_fn(4, 3, |x, y| (x as f64 + 0.1) / (y as f64 + 3.0));
        assert_eq!(parse_raster_csv(&raster_csv(&map)).unwrap(), map);
        assert!(parse_raster_csv("3,1\n1,2\n").is_err());
    }

    #[test]
    fn heat_color_endpoints() {
        assert_eq!(heat_color(0.0), [0, 0, 128]);
        assert_eq!(heat_color(1.0), [153, 0, 0]);
        assert_eq!(heat_color(-3.0), heat_color(0.0));
    }
}
