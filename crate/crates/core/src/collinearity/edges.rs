//! Canny edge detection: Gaussian blur, Sobel gradients, non-maximum suppression with
//! bilinear interpolation along the gradient, and double-threshold hysteresis.
//!
//! Borders are replicated during filtering and the outermost pixel ring never carries an
//! edge. Thresholds apply to the gradient magnitude divided by its maximum.

use serde::{Deserialize, Serialize};

use super::CollinearityError;
use crate::assets::ImageBuffer;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: u32,
    pub height: u32,
    pub mask: Vec<bool>,
}

impl EdgeMap {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.mask[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// 0 for background, 255 for edges.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.mask.iter().map(|&m| if m { 255 } else { 0 }).collect()
    }

    pub fn from_bytes(width: u32, height: u32, bytes: &[u8]) -> Self {
        Self {
            width,
            height,
            mask: bytes.iter().map(|&b| b > 127).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub sigma: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low: 0.1,
            high: 0.2,
        }
    }
}

pub fn detect_edges(image: &ImageBuffer, params: &CannyParams) -> Result<EdgeMap, CollinearityError> {
    detect_edges_gray(&image.to_gray(), image.width, image.height, params)
}

fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Separable Gaussian with radius `round(4 sigma)` and replicated borders.
pub fn gaussian_blur(gray: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return gray.to_vec();
    }
    let radius = (4.0 * sigma + 0.5) as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let s: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= s);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * gray[y * w + clamp_index(x as isize + k as isize - radius, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * tmp[clamp_index(y as isize + k as isize - radius, h) * w + x])
                .sum();
        }
    }
    out
}

/// Sobel derivatives along rows (`gi`) and columns (`gj`), replicated borders.
pub fn sobel(img: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |y: isize, x: isize| img[clamp_index(y, h) * w + clamp_index(x, w)];
    let mut gi = vec![0.0; w * h];
    let mut gj = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gi[i] = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            gj[i] = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
        }
    }
    (gi, gj)
}

pub fn detect_edges_gray(gray: &[f64], width: u32, height: u32, params: &CannyParams) -> Result<EdgeMap, CollinearityError> {
    if !(params.low > 0.0 && params.low < params.high) {
        return Err(CollinearityError::BadThresholds {
            low: params.low,
            high: params.high,
        });
    }
    let (w, h) = (width as usize, height as usize);
    let mut edges = EdgeMap::empty(width, height);
    if w < 3 || h < 3 {
        return Ok(edges);
    }
    let smooth = gaussian_blur(gray, w, h, params.sigma);
    let (gi, gj) = sobel(&smooth, w, h);
    let mut mag: Vec<f64> = gi.iter().zip(&gj).map(|(a, b)| a.hypot(*b)).collect();
    let max = mag.iter().copied().fold(0.0, f64::max);
    if max <= 1e-12 {
        return Ok(edges);
    }
    mag.iter_mut().for_each(|m| *m /= max);

    let m_at = |y: usize, x: usize| mag[y * w + x];
    let mut candidate = vec![false; w * h];
    let mut strong = vec![false; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = mag[i];
            if m < params.low {
                continue;
            }
            let (a, b) = (gi[i], gj[i]);
            let (abs_i, abs_j) = (a.abs(), b.abs());
            // (plus1, plus2, minus1, minus2, weight) in (row, col)
            let same_sign = (a >= 0.0 && b >= 0.0) || (a <= 0.0 && b <= 0.0);
            let (p1, p2, n1, n2, wgt) = if same_sign {
                if abs_i >= abs_j {
                    ((y + 1, x), (y + 1, x + 1), (y - 1, x), (y - 1, x - 1), abs_j / abs_i)
                } else {
                    ((y, x + 1), (y + 1, x + 1), (y, x - 1), (y - 1, x - 1), abs_i / abs_j)
                }
            } else if abs_i <= abs_j {
                ((y, x + 1), (y - 1, x + 1), (y, x - 1), (y + 1, x - 1), abs_i / abs_j)
            } else {
                ((y - 1, x), (y - 1, x + 1), (y + 1, x), (y + 1, x - 1), abs_j / abs_i)
            };
            let plus = m_at(p2.0, p2.1) * wgt + m_at(p1.0, p1.1) * (1.0 - wgt);
            let minus = m_at(n2.0, n2.1) * wgt + m_at(n1.0, n1.1) * (1.0 - wgt);
            // strict on one side so a symmetric ridge keeps a single pixel
            if m > plus && m >= minus {
                candidate[i] = true;
                strong[i] = m >= params.high;
            }
        }
    }

    // hysteresis: keep 8-connected candidate components that contain a strong pixel
    let mut stack: Vec<usize> = (0..w * h).filter(|&i| strong[i]).collect();
    for &i in &stack {
        edges.mask[i] = true;
    }
    while let Some(i) = stack.pop() {
        let (y, x) = ((i / w) as isize, (i % w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (ny, nx) = (y + dy, x + dx);
                if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if candidate[j] && !edges.mask[j] {
                    edges.mask[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_edges() {
        let img = ImageBuffer::filled(20, 20, 1, 0.4);
        assert_eq!(detect_edges(&img, &CannyParams::default()).unwrap().count(), 0);
    }

    #[test]
    fn bad_thresholds() {
        let img = ImageBuffer::filled(8, 8, 1, 0.0);
        let p = CannyParams {
            sigma: 1.0,
            low: 0.3,
            high: 0.2,
        };
        assert!(matches!(detect_edges(&img, &p), Err(CollinearityError::BadThresholds { .. })));
    }

    #[test]
    fn vertical_step_gives_single_pixel_line() {
        let (w, h) = (32u32, 24u32);
        let mut img = ImageBuffer::filled(w, h, 1, 0.0);
        for y in 0..h {
            for x in 16..w {
                img.data[(y * w + x) as usize] = 1.0;
            }
        }
        let e = detect_edges(&img, &CannyParams::default()).unwrap();
        for y in 1..h - 1 {
            let xs: Vec<u32> = (0..w).filter(|&x| e.get(x, y)).collect();
            assert_eq!(xs.len(), 1, "row {y}: {xs:?}");
            assert!((xs[0] as i64 - 16).abs() <= 1);
        }
    }
}
