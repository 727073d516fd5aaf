//! Row-major float images and portable anymap I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    /// Validates the shape and that every sample lies in `[0, 1]`.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidArgument(format!(
                "image data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "image sample {bad} outside [0, 1]"
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Image {
            width,
            height,
            channels,
            data: vec![value.clamp(0.0, 1.0); width * height * channels],
        }
    }

    /// Builds a grayscale image, clamping samples into `[0, 1]`.
    pub(crate) fn from_gray_clamped(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Image {
            width,
            height,
            channels: 1,
            data: data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Rec. 601 luma for RGB, identity for grayscale.
    pub fn luminance(&self, x: usize, y: usize) -> f32 {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 1 {
            self.data[i]
        } else {
            0.299 * self.data[i] + 0.587 * self.data[i + 1] + 0.114 * self.data[i + 2]
        }
    }

    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let data = (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .map(|(x, y)| self.luminance(x, y))
            .collect();
        Image::from_gray_clamped(self.width, self.height, data)
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Box-filter resize of a grayscale copy to `size × size`.
    pub fn gray_resized(&self, size: usize) -> Vec<f64> {
        let gray = self.to_gray();
        let mut out = vec![0.0; size * size];
        for oy in 0..size {
            let y0 = oy * self.height / size;
            let y1 = ((oy + 1) * self.height / size).max(y0 + 1).min(self.height);
            for ox in 0..size {
                let x0 = ox * self.width / size;
                let x1 = ((ox + 1) * self.width / size).max(x0 + 1).min(self.width);
                let mut acc = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        acc += gray.data[y * self.width + x] as f64;
                    }
                }
                out[oy * size + ox] = acc / ((y1 - y0) * (x1 - x0)) as f64;
            }
        }
        out
    }

    /// Binary portable anymap: P5 for grayscale, P6 for RGB, 8-bit samples.
    pub fn encode_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|v| quantize(*v)));
        out
    }

    /// Always writes RGB (P6), replicating grayscale samples.
    pub fn encode_ppm(&self) -> Vec<u8> {
        if self.channels == 3 {
            return self.encode_pnm();
        }
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for v in &self.data {
            let q = quantize(*v);
            out.extend([q, q, q]);
        }
        out
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode_ppm()).map_err(|e| Error::io(path, e))
    }

    pub fn read_pnm(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Image::decode_pnm(&bytes).map_err(|msg| Error::format(path.display(), 0, "pnm", msg))
    }

    pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<Image, String> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("truncated header".into());
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1; // single whitespace after maxval
        let channels = match fields[0].as_str() {
            "P5" => 1,
            "P6" => 3,
            other => return Err(format!("unsupported magic {other}")),
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|_| format!("bad header number {s}"));
        let (w, h, max) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if max != 255 {
            return Err(format!("only 8-bit maxval 255 supported, got {max}"));
        }
        let n = w * h * channels;
        let body = bytes.get(pos..pos + n).ok_or("truncated pixel data")?;
        let data = body.iter().map(|b| *b as f32 / 255.0).collect();
        Ok(Image {
            width: w,
            height: h,
            channels,
            data,
        })
    }
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(Image::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(Image::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 1, 1, vec![1.5]).is_err());
        assert!(Image::new(1, 1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn pnm_roundtrip_is_quantized() {
        let img = Image::new(3, 2, 1, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        let back = Image::decode_pnm(&img.encode_pnm()).unwrap();
        assert_eq!(back.channels(), 1);
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
        let rgb = Image::decode_pnm(&img.encode_ppm()).unwrap();
        assert_eq!(rgb.channels(), 3);
        assert_eq!(rgb.get(2, 1, 1), back.get(2, 1, 0));
    }

    #[test]
    fn header_with_comment() {
        let mut bytes = b"P5\n# comment\n2 1\n255\n".to_vec();
        bytes.extend([0u8, 255]);
        let img = Image::decode_pnm(&bytes).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn resize_averages_blocks() {
        let img = Image::new(4, 4, 1, (0..16).map(|i| (i % 2) as f32).collect()).unwrap();
        let small = img.gray_resized(2);
        assert!(small.iter().all(|v| (v - 0.5).abs() < 1e-12));
    }
}
