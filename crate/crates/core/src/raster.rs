//! Pixel grids and binary PGM/PPM I/O.

use std::fs;
use std::path::Path;

use crate::class::GeometricClass;
use crate::error::{GalError, Result};

/// Row-major grid of scalars in `[0, 1]` with one or three channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(GalError::Parameter(format!(
                "raster must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(GalError::Dimension(format!(
                "raster {width}x{height}x{channels} needs {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        if let Some(v) = data
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(GalError::Degenerate(format!(
                "raster value {v} outside [0, 1]"
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    /// Build a raster, clamping every value into `[0, 1]` (NaN becomes 0).
    pub fn from_clamped(
        width: usize,
        height: usize,
        channels: usize,
        mut data: Vec<f64>,
    ) -> Result<Self> {
        for v in data.iter_mut() {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Raster::new(width, height, channels, data)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Raster::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len_pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// RGB triple at a pixel; gray rasters repeat their single channel.
    #[inline]
    pub fn rgb(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 3 {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        } else {
            let v = self.data[i];
            [v, v, v]
        }
    }

    #[inline]
    pub fn rgb_at(&self, pixel: usize) -> [f64; 3] {
        self.rgb(pixel % self.width, pixel / self.width)
    }

    /// Luma with 0.299/0.587/0.114 weights, as a flat plane.
    pub fn gray_plane(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.data.clone();
        }
        self.data
            .chunks_exact(3)
            .map(|c| 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2])
            .collect()
    }

    pub fn to_gray(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.gray_plane(),
        }
    }

    pub fn same_dims(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Mirror left to right.
    pub fn mirrored(&self) -> Raster {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                let i = (y * self.width + x) * self.channels;
                data.extend_from_slice(&self.data[i..i + self.channels]);
            }
        }
        Raster {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        }
    }

    /// Quantize every value to 8 bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|v| quantize(*v)).collect()
    }
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Per-pixel class codes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    codes: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, codes: Vec<u8>) -> Result<Self> {
        if codes.len() != width * height {
            return Err(GalError::Dimension(format!(
                "label map {width}x{height} needs {} codes, got {}",
                width * height,
                codes.len()
            )));
        }
        if let Some(c) = codes
            .iter()
            .find(|c| GeometricClass::from_code(**c).is_none())
        {
            return Err(GalError::Format(format!("invalid class code {c}")));
        }
        Ok(LabelMap {
            width,
            height,
            codes,
        })
    }

    pub fn filled(width: usize, height: usize, class: GeometricClass) -> Self {
        LabelMap {
            width,
            height,
            codes: vec![class.code(); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    #[inline]
    pub fn class_at(&self, x: usize, y: usize) -> GeometricClass {
        GeometricClass::ALL[self.codes[y * self.width + x] as usize]
    }

    #[inline]
    pub fn class_of(&self, pixel: usize) -> GeometricClass {
        GeometricClass::ALL[self.codes[pixel] as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, class: GeometricClass) {
        self.codes[y * self.width + x] = class.code();
    }

    pub fn mirrored(&self) -> LabelMap {
        let mut codes = Vec::with_capacity(self.codes.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                codes.push(self.class_at(x, y).mirrored().code());
            }
        }
        LabelMap {
            width: self.width,
            height: self.height,
            codes,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelMode {
    /// P5 with raw codes 0 to 6.
    Codes,
    /// P6 with the class palette.
    Colors,
}

struct PnmHeader {
    magic: [u8; 2],
    width: usize,
    height: usize,
    payload_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<PnmHeader> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'5' || bytes[1] == b'6') {
        return Err(GalError::Format("expected P5 or P6 magic".into()));
    }
    let mut pos = 2;
    let mut tokens = [0usize; 3];
    for slot in tokens.iter_mut() {
        // whitespace and comments before each token
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(b) = bytes.get(pos) {
                        pos += 1;
                        if *b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(GalError::Format("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(GalError::Format("non-numeric header token".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *slot = text
            .parse()
            .map_err(|_| GalError::Format(format!("header value {text} out of range")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(GalError::Format("missing whitespace after header".into())),
    }
    let [width, height, maxval] = tokens;
    if maxval != 255 {
        return Err(GalError::Format(format!(
            "only 8-bit maxval 255 supported, got {maxval}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(GalError::Format("zero image dimension".into()));
    }
    Ok(PnmHeader {
        magic: [bytes[0], bytes[1]],
        width,
        height,
        payload_offset: pos,
    })
}

/// Parse a binary PGM/PPM image held in memory.
pub fn decode_raster(bytes: &[u8]) -> Result<Raster> {
    let header = parse_header(bytes)?;
    let channels = if header.magic[1] == b'6' { 3 } else { 1 };
    let expected = header.width * header.height * channels;
    let payload = &bytes[header.payload_offset..];
    if payload.len() < expected {
        return Err(GalError::Length {
            expected,
            found: payload.len(),
        });
    }
    let data = payload[..expected]
        .iter()
        .map(|b| *b as f64 / 255.0)
        .collect();
    Raster::new(header.width, header.height, channels, data)
}

pub fn encode_raster(raster: &Raster) -> Vec<u8> {
    let magic = if raster.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    out.extend(raster.to_bytes());
    out
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| GalError::io(path, e))?;
    decode_raster(&bytes)
}

pub fn write_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_raster(raster)).map_err(|e| GalError::io(path, e))
}

pub fn encode_label_map(map: &LabelMap, mode: LabelMode) -> Vec<u8> {
    match mode {
        LabelMode::Codes => {
            let mut out = format!("P5\n{} {}\n255\n", map.width, map.height).into_bytes();
            out.extend_from_slice(&map.codes);
            out
        }
        LabelMode::Colors => {
            let mut out = format!("P6\n{} {}\n255\n", map.width, map.height).into_bytes();
            for c in &map.codes {
                out.extend_from_slice(&GeometricClass::ALL[*c as usize].color());
            }
            out
        }
    }
}

pub fn write_label_map(map: &LabelMap, mode: LabelMode, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_label_map(map, mode)).map_err(|e| GalError::io(path, e))
}

/// Read a label map written in either mode.
pub fn read_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| GalError::io(path, e))?;
    decode_label_map(&bytes)
}

pub fn decode_label_map(bytes: &[u8]) -> Result<LabelMap> {
    let header = parse_header(bytes)?;
    let n = header.width * header.height;
    let payload = &bytes[header.payload_offset..];
    if header.magic[1] == b'5' {
        if payload.len() < n {
            return Err(GalError::Length {
                expected: n,
                found: payload.len(),
            });
        }
        LabelMap::new(header.width, header.height, payload[..n].to_vec())
    } else {
        if payload.len() < 3 * n {
            return Err(GalError::Length {
                expected: 3 * n,
                found: payload.len(),
            });
        }
        let codes = payload[..3 * n]
            .chunks_exact(3)
            .map(|c| {
                GeometricClass::from_color([c[0], c[1], c[2]])
                    .map(|k| k.code())
                    .ok_or_else(|| GalError::Format(format!("color {c:?} is not in the palette")))
            })
            .collect::<Result<Vec<u8>>>()?;
        LabelMap::new(header.width, header.height, codes)
    }
}
