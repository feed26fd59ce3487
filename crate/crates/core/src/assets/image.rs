use std::fs;
use std::path::Path;

use super::AssetError;

/// Row-major image with values in `[0, 1]`, one or three channels.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<f64>) -> Result<Self, AssetError> {
        if channels != 1 && channels != 3 {
            return Err(AssetError::Image(format!("unsupported channel count {channels}")));
        }
        if data.len() != width as usize * height as usize * channels as usize {
            return Err(AssetError::Image(format!(
                "buffer length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(AssetError::Image("values outside [0, 1]".into()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: f64) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width as usize * height as usize * channels as usize],
        }
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    /// RGB at a pixel; grayscale is replicated.
    #[inline]
    pub fn rgb(&self, x: u32, y: u32) -> [f64; 3] {
        let i = self.index(x, y);
        if self.channels == 1 {
            [self.data[i]; 3]
        } else {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        }
    }

    pub fn set_rgb(&mut self, x: u32, y: u32, rgb: [f64; 3]) {
        let i = self.index(x, y);
        if self.channels == 1 {
            self.data[i] = luminance(rgb);
        } else {
            self.data[i..i + 3].copy_from_slice(&rgb);
        }
    }

    /// Luminance `0.299 R + 0.587 G + 0.114 B`, row-major.
    pub fn to_gray(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.data.clone();
        }
        self.data
            .chunks_exact(3)
            .map(|c| luminance([c[0], c[1], c[2]]))
            .collect()
    }
}

#[inline]
pub fn luminance(rgb: [f64; 3]) -> f64 {
    0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Decodes PNG (8-bit gray or RGB/RGBA) or binary PGM.
pub fn load_image(path: &Path) -> Result<ImageBuffer, AssetError> {
    let img = image::open(path).map_err(|e| AssetError::Image(format!("{}: {e}", path.display())))?;
    let (w, h) = (img.width(), img.height());
    let buf = match img.color().channel_count() {
        1 | 2 => {
            let g = img.to_luma8();
            ImageBuffer::new(w, h, 1, g.as_raw().iter().map(|&v| v as f64 / 255.0).collect())?
        }
        _ => {
            let c = img.to_rgb8();
            ImageBuffer::new(w, h, 3, c.as_raw().iter().map(|&v| v as f64 / 255.0).collect())?
        }
    };
    Ok(buf)
}

pub fn write_png(img: &ImageBuffer, path: &Path) -> Result<(), AssetError> {
    let bytes: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
    let color = if img.channels == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    image::save_buffer_with_format(path, &bytes, img.width, img.height, color, image::ImageFormat::Png)
        .map_err(|e| AssetError::Image(e.to_string()))
}

/// Binary (P5) PGM, maxval 255.
pub fn write_pgm(width: u32, height: u32, pixels: &[u8], path: &Path) -> Result<(), AssetError> {
    if pixels.len() != width as usize * height as usize {
        return Err(AssetError::Image("pixel count does not match dimensions".into()));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths_and_ranges() {
        assert!(ImageBuffer::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(ImageBuffer::new(1, 1, 3, vec![0.0, 1.5, 0.0]).is_err());
        assert!(ImageBuffer::new(1, 1, 2, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn png_and_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = ImageBuffer::filled(4, 3, 3, 0.0);
        img.set_rgb(1, 2, [1.0, 0.5, 0.0]);
        let png = dir.path().join("a.png");
        write_png(&img, &png).unwrap();
        let back = load_image(&png).unwrap();
        assert_eq!(back.channels, 3);
        assert_eq!(back.rgb(1, 2)[0], 1.0);
        assert!((back.rgb(1, 2)[1] - 128.0 / 255.0).abs() < 1e-12);

        let pgm = dir.path().join("e.pgm");
        write_pgm(3, 2, &[0, 255, 0, 255, 0, 0], &pgm).unwrap();
        let g = load_image(&pgm).unwrap();
        assert_eq!((g.width, g.height, g.channels), (3, 2, 1));
        assert_eq!(g.data, vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn luminance_weights() {
        let img = ImageBuffer::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert!((img.to_gray()[0] - 0.299).abs() < 1e-15);
    }
}
