//! Single-channel raster grids and the low-level operations built on them.
//!
//! Every map in the toolkit (fixation maps, saliency maps, feature maps,
//! center surfaces) is a [`Raster`]. Operations are pure: they borrow their
//! inputs and return new rasters.

use crate::error::{Error, Result};

/// Row-major grid of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "raster {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite value at index {i}")));
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first maximal value in row-major order.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        best
    }

    /// `(x, y)` of [`Raster::argmax`].
    pub fn argmax_xy(&self) -> (usize, usize) {
        let i = self.argmax();
        (i % self.width, i / self.width)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Point-wise combination of two equally sized rasters.
    pub fn zip_with(&self, other: &Raster, f: impl Fn(f64, f64) -> f64) -> Result<Raster> {
        self.check_same_dims(other)?;
        Ok(Raster {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Raster) -> Result<()> {
        self.check_same_dims(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, factor: f64) -> Raster {
        self.map(|v| v * factor)
    }

    pub fn check_same_dims(&self, other: &Raster) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// RGB image with each plane stored as a [`Raster`] with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    red: Raster,
    green: Raster,
    blue: Raster,
}

impl ColorImage {
    pub fn new(red: Raster, green: Raster, blue: Raster) -> Result<Self> {
        red.check_same_dims(&green)?;
        red.check_same_dims(&blue)?;
        for plane in [&red, &green, &blue] {
            if plane.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::param("color plane values must lie in [0, 1]"));
            }
        }
        Ok(ColorImage { red, green, blue })
    }

    /// Image where every pixel has the same color.
    pub fn uniform(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        ColorImage {
            red: Raster::filled(width, height, rgb[0]),
            green: Raster::filled(width, height, rgb[1]),
            blue: Raster::filled(width, height, rgb[2]),
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Self {
        let mut r = Vec::with_capacity(width * height);
        let mut g = Vec::with_capacity(width * height);
        let mut b = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let [pr, pg, pb] = f(x, y);
                r.push(pr.clamp(0.0, 1.0));
                g.push(pg.clamp(0.0, 1.0));
                b.push(pb.clamp(0.0, 1.0));
            }
        }
        ColorImage {
            red: Raster::new(width, height, r).expect("sized by construction"),
            green: Raster::new(width, height, g).expect("sized by construction"),
            blue: Raster::new(width, height, b).expect("sized by construction"),
        }
    }

    pub fn width(&self) -> usize {
        self.red.width()
    }

    pub fn height(&self) -> usize {
        self.red.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.red.dims()
    }

    pub fn red(&self) -> &Raster {
        &self.red
    }

    pub fn green(&self) -> &Raster {
        &self.green
    }

    pub fn blue(&self) -> &Raster {
        &self.blue
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        [self.red.get(x, y), self.green.get(x, y), self.blue.get(x, y)]
    }
}

/// Affine rescale onto `[0, 1]`. A constant raster maps to all zeros.
pub fn normalize_raster(r: &Raster) -> Raster {
    let lo = r.min();
    let hi = r.max();
    if hi <= lo {
        return Raster::zeros(r.width, r.height);
    }
    let range = hi - lo;
    r.map(|v| (v - lo) / range)
}

/// Sampled 1-D Gaussian truncated at ±3σ and renormalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if sigma.is_nan() || sigma <= 0.0 || sigma.is_infinite() {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let total: f64 = k.iter().sum();
    for w in &mut k {
        *w /= total;
    }
    Ok(k)
}

/// Separable Gaussian blur with edge replication.
///
/// Each output is accumulated as `v[x] + Σ w_k (v[x+k] - v[x])` so constant
/// regions stay bit-exact.
pub fn gaussian_blur(r: &Raster, sigma: f64) -> Result<Raster> {
    let kernel = gaussian_kernel(sigma)?;
    Ok(convolve_separable(r, &kernel, &kernel))
}

pub(crate) fn convolve_separable(r: &Raster, kx: &[f64], ky: &[f64]) -> Raster {
    let (w, h) = r.dims();
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let src = r.values();

    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut tmp[y * w..(y + 1) * w];
        for x in 0..w {
            let center = row[x];
            let mut acc = 0.0;
            for (k, &wk) in kx.iter().enumerate() {
                let xx = (x as isize + k as isize - rx).clamp(0, w as isize - 1) as usize;
                acc += wk * (row[xx] - center);
            }
            out[x] = center + acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let center = tmp[y * w + x];
            let mut acc = 0.0;
            for (k, &wk) in ky.iter().enumerate() {
                let yy = (y as isize + k as isize - ry).clamp(0, h as isize - 1) as usize;
                acc += wk * (tmp[yy * w + x] - center);
            }
            out[y * w + x] = center + acc;
        }
    }
    Raster {
        width: w,
        height: h,
        data: out,
    }
}

/// Keep every second pixel in each direction; dimensions become `ceil(n / 2)`.
pub fn decimate(r: &Raster) -> Raster {
    let w = r.width.div_ceil(2);
    let h = r.height.div_ceil(2);
    Raster::from_fn(w, h, |x, y| r.get(2 * x, 2 * y))
}

/// Gaussian pyramid with `levels` entries; level 0 is the input itself.
pub fn build_gaussian_pyramid(r: &Raster, levels: usize) -> Result<Vec<Raster>> {
    if levels == 0 {
        return Err(Error::param("pyramid needs at least one level"));
    }
    let mut out = Vec::with_capacity(levels);
    out.push(r.clone());
    for _ in 1..levels {
        let prev = out.last().expect("non-empty");
        let next = decimate(&gaussian_blur(prev, 1.0)?);
        out.push(next);
    }
    Ok(out)
}

/// Bilinear resampling with pixel-center alignment and clamped borders.
pub fn resize_bilinear(r: &Raster, new_width: usize, new_height: usize) -> Result<Raster> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::param("resize target must be at least 1x1"));
    }
    if r.dims() == (new_width, new_height) {
        return Ok(r.clone());
    }
    let xs = sample_positions(r.width, new_width);
    let ys = sample_positions(r.height, new_height);
    let mut data = Vec::with_capacity(new_width * new_height);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let a = r.get(x0, y0);
            let b = r.get(x1, y0);
            let c = r.get(x0, y1);
            let d = r.get(x1, y1);
            let top = a + fx * (b - a);
            let bottom = c + fx * (d - c);
            data.push(top + fy * (bottom - top));
        }
    }
    Ok(Raster {
        width: new_width,
        height: new_height,
        data,
    })
}

fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn impulse(w: usize, h: usize, x: usize, y: usize) -> Raster {
        let mut r = Raster::zeros(w, h);
        r.set(x, y, 1.0);
        r
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Raster::new(0, 3, vec![]).is_err());
        assert!(Raster::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Raster::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn normalize_constant_is_zero() {
        let r = Raster::new(2, 2, vec![5.0; 4]).unwrap();
        assert_eq!(normalize_raster(&r).values(), &[0.0; 4]);
    }

    #[test]
    fn normalize_affine() {
        let r = Raster::new(3, 1, vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(normalize_raster(&r).values(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_random_keeps_argmax() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let r = Raster::from_fn(8, 8, |_, _| rng.random_range(-4.0..9.0));
        let n = normalize_raster(&r);
        // direct scan
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut arg = 0;
        for (i, &v) in r.values().iter().enumerate() {
            lo = lo.min(v);
            if v > hi {
                hi = v;
                arg = i;
            }
        }
        assert!(lo < hi);
        assert_eq!(n.min(), 0.0);
        assert_eq!(n.max(), 1.0);
        assert_eq!(n.argmax(), arg);
    }

    #[test]
    fn blur_rejects_nonpositive_sigma() {
        let r = Raster::zeros(4, 4);
        assert!(gaussian_blur(&r, 0.0).is_err());
        assert!(gaussian_blur(&r, -1.0).is_err());
    }

    #[test]
    fn blur_impulse_matches_sampled_gaussian() {
        let sigma = 4.0;
        let out = gaussian_blur(&impulse(65, 65, 32, 32), sigma).unwrap();
        // 2-D oracle over the truncated square window, normalized over the window.
        let radius = (3.0 * sigma).ceil() as i64;
        let mut total = 0.0;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                total += (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            }
        }
        let mut max_err: f64 = 0.0;
        for y in 0..65i64 {
            for x in 0..65i64 {
                let (dx, dy) = (x - 32, y - 32);
                let expected = if dx.abs() <= radius && dy.abs() <= radius {
                    (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp() / total
                } else {
                    0.0
                };
                max_err = max_err.max((out.get(x as usize, y as usize) - expected).abs());
            }
        }
        assert!(max_err < 1e-6, "max error {max_err}");
        assert_eq!(out.argmax_xy(), (32, 32));
        assert!((out.sum() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn blur_constant_is_exact() {
        let r = Raster::filled(13, 7, 0.37);
        assert_eq!(gaussian_blur(&r, 2.5).unwrap(), r);
    }

    #[test]
    fn blur_superposes_impulses() {
        let a = impulse(40, 30, 10, 12);
        let b = impulse(40, 30, 29, 17);
        let both = a.zip_with(&b, |p, q| p + q).unwrap();
        let lhs = gaussian_blur(&both, 3.0).unwrap();
        let rhs = gaussian_blur(&a, 3.0)
            .unwrap()
            .zip_with(&gaussian_blur(&b, 3.0).unwrap(), |p, q| p + q)
            .unwrap();
        for (p, q) in lhs.values().iter().zip(rhs.values()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn pyramid_sizes_follow_ceil_halving() {
        let r = Raster::zeros(1024, 764);
        let pyr = build_gaussian_pyramid(&r, 8).unwrap();
        let dims: Vec<_> = pyr.iter().map(Raster::dims).collect();
        assert_eq!(
            dims,
            vec![
                (1024, 764),
                (512, 382),
                (256, 191),
                (128, 96),
                (64, 48),
                (32, 24),
                (16, 12),
                (8, 6)
            ]
        );
    }

    #[test]
    fn pyramid_constant_levels() {
        let r = Raster::filled(100, 60, 0.25);
        for level in build_gaussian_pyramid(&r, 6).unwrap() {
            assert!(level.values().iter().all(|&v| v == 0.25));
        }
    }

    #[test]
    fn pyramid_level_one_matches_blur_then_subsample() {
        let r = impulse(33, 33, 16, 16);
        let pyr = build_gaussian_pyramid(&r, 2).unwrap();
        // Oracle: direct 2-D truncated gaussian (σ=1) evaluated at even pixels.
        let k: Vec<f64> = (-3i64..=3).map(|d| (-(d * d) as f64 / 2.0).exp()).collect();
        let ks: f64 = k.iter().sum();
        let oracle = Raster::from_fn(17, 17, |x, y| {
            let (dx, dy) = (2 * x as i64 - 16, 2 * y as i64 - 16);
            if dx.abs() <= 3 && dy.abs() <= 3 {
                k[(dx + 3) as usize] * k[(dy + 3) as usize] / (ks * ks)
            } else {
                0.0
            }
        });
        for (a, b) in pyr[1].values().iter().zip(oracle.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        // subsampling an impulse blurred at σ=1 keeps roughly a quarter of the mass
        let kept = pyr[1].sum();
        assert!(kept > 0.2 && kept <= 1.0, "kept mass {kept}");
    }

    #[test]
    fn pyramid_rejects_zero_levels() {
        assert!(build_gaussian_pyramid(&Raster::zeros(4, 4), 0).is_err());
    }

    #[test]
    fn resize_constant_and_identity() {
        let c = Raster::filled(4, 4, 0.7);
        let up = resize_bilinear(&c, 9, 9).unwrap();
        assert!(up.values().iter().all(|&v| v == 0.7));
        let r = Raster::from_fn(5, 3, |x, y| (x * 3 + y) as f64);
        assert_eq!(resize_bilinear(&r, 5, 3).unwrap(), r);
    }

    #[test]
    fn resize_two_by_two_hand_grid() {
        let r = Raster::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let up = resize_bilinear(&r, 4, 4).unwrap();
        // Source coordinates per output index: clamp((i + 0.5) / 2 - 0.5) = 0, .25, .75, 1.
        let t = [0.0, 0.25, 0.75, 1.0];
        for (y, &fy) in t.iter().enumerate() {
            for (x, &fx) in t.iter().enumerate() {
                let top = fx;
                let bottom = 2.0 + fx;
                let expected = top + fy * (bottom - top);
                assert_eq!(up.get(x, y), expected, "at ({x},{y})");
            }
        }
    }

    proptest! {
        #[test]
        fn blur_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = Raster::from_fn(12, 9, |_, _| rng.random_range(-1.0..1.0));
            let y = Raster::from_fn(12, 9, |_, _| rng.random_range(-1.0..1.0));
            let mix = x.zip_with(&y, |p, q| a * p + b * q).unwrap();
            let lhs = gaussian_blur(&mix, 1.7).unwrap();
            let bx = gaussian_blur(&x, 1.7).unwrap();
            let by = gaussian_blur(&y, 1.7).unwrap();
            for i in 0..lhs.len() {
                let rhs = a * bx.values()[i] + b * by.values()[i];
                prop_assert!((lhs.values()[i] - rhs).abs() < 1e-9);
            }
        }

        #[test]
        fn normalize_is_idempotent(vals in proptest::collection::vec(-100.0f64..100.0, 2..40)) {
            let n = vals.len();
            let r = Raster::new(n, 1, vals).unwrap();
            let once = normalize_raster(&r);
            let twice = normalize_raster(&once);
            for (p, q) in once.values().iter().zip(twice.values()) {
                prop_assert!((p - q).abs() < 1e-12);
                prop_assert!(p.is_finite());
            }
        }

        #[test]
        fn resize_stays_finite_and_bounded(w in 1usize..12, h in 1usize..12, nw in 1usize..20, nh in 1usize..20, seed in 0u64..100) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let r = Raster::from_fn(w, h, |_, _| rng.random_range(0.0..1.0));
            let out = resize_bilinear(&r, nw, nh).unwrap();
            prop_assert_eq!(out.dims(), (nw, nh));
            for &v in out.values() {
                prop_assert!(v.is_finite() && v >= r.min() - 1e-12 && v <= r.max() + 1e-12);
            }
        }

        #[test]
        fn pyramid_halves_with_ceil(w in 1usize..300, h in 1usize..300) {
            let pyr = build_gaussian_pyramid(&Raster::zeros(w, h), 5).unwrap();
            for k in 1..pyr.len() {
                prop_assert_eq!(pyr[k].width(), pyr[k - 1].width().div_ceil(2));
                prop_assert_eq!(pyr[k].height(), pyr[k - 1].height().div_ceil(2));
            }
        }
    }
}
