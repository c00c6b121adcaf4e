//! PNG encodings: depth as 16-bit grayscale millimeters (0 = invalid),
//! labels as 8-bit indexed color with palette index = class id.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Read, Write};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::frame::{DepthFrame, Frame, LabelFrame};
use crate::scene::ClassId;

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Png(e.to_string())
}

fn encode<W: Write>(w: W, width: usize, height: usize, color: ColorType, depth: BitDepth, palette: Option<Vec<u8>>, data: &[u8]) -> Result<()> {
    let mut enc = png::Encoder::new(w, width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    if let Some(p) = palette {
        enc.set_palette(p);
    }
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(data).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

struct Decoded {
    width: usize,
    height: usize,
    color: ColorType,
    depth: BitDepth,
    data: Vec<u8>,
}

fn decode(bytes: &[u8]) -> Result<Decoded> {
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(png_err)?;
    let mut data = vec![0; reader.output_buffer_size().ok_or_else(|| png_err("image too large"))?];
    let info = reader.next_frame(&mut data).map_err(png_err)?;
    data.truncate(info.buffer_size());
    Ok(Decoded {
        width: info.width as usize,
        height: info.height as usize,
        color: info.color_type,
        depth: info.bit_depth,
        data,
    })
}

/// Meters to millimeters, rounded; saturates at 65.535 m.
pub fn depth_to_mm(d: f64) -> u16 {
    if d > 0.0 {
        (d * 1000.0).round().min(u16::MAX as f64) as u16
    } else {
        0
    }
}

pub fn encode_depth_png<W: Write>(frame: &DepthFrame, w: W) -> Result<()> {
    let data: Vec<u8> = frame.data().iter().flat_map(|&d| depth_to_mm(d).to_be_bytes()).collect();
    encode(w, frame.width(), frame.height(), ColorType::Grayscale, BitDepth::Sixteen, None, &data)
}

pub fn decode_depth_png(bytes: &[u8]) -> Result<DepthFrame> {
    let img = decode(bytes)?;
    if img.color != ColorType::Grayscale || img.depth != BitDepth::Sixteen {
        return Err(Error::Png(format!("depth PNG must be 16-bit grayscale, got {:?} {:?}", img.color, img.depth)));
    }
    let data = img
        .data
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 1000.0)
        .collect();
    Frame::from_vec(img.width, img.height, data)
}

/// Deterministic 256-entry palette; index 0 is black.
pub fn label_palette() -> Vec<u8> {
    let mut out = Vec::with_capacity(256 * 3);
    for i in 0u32..256 {
        // Bit-interleaved colormap: spreads neighbouring ids apart.
        let (mut r, mut g, mut b) = (0u8, 0u8, 0u8);
        let mut c = i;
        for shift in (0..8).rev() {
            r |= ((c & 1) as u8) << shift;
            g |= (((c >> 1) & 1) as u8) << shift;
            b |= (((c >> 2) & 1) as u8) << shift;
            c >>= 3;
        }
        out.extend([r, g, b]);
    }
    out
}

pub fn encode_label_png<W: Write>(frame: &LabelFrame, w: W) -> Result<()> {
    let data = frame
        .data()
        .iter()
        .map(|c| u8::try_from(c.0).map_err(|_| Error::Png(format!("class id {} does not fit an 8-bit label PNG", c.0))))
        .collect::<Result<Vec<u8>>>()?;
    encode(w, frame.width(), frame.height(), ColorType::Indexed, BitDepth::Eight, Some(label_palette()), &data)
}

/// Accepts 8-bit indexed or grayscale PNGs; the raw sample is the class id.
pub fn decode_label_png(bytes: &[u8]) -> Result<LabelFrame> {
    let img = decode(bytes)?;
    if !matches!(img.color, ColorType::Indexed | ColorType::Grayscale) || img.depth != BitDepth::Eight {
        return Err(Error::Png(format!("label PNG must be 8-bit indexed, got {:?} {:?}", img.color, img.depth)));
    }
    let data = img.data.iter().map(|&v| ClassId(v as u16)).collect();
    Frame::from_vec(img.width, img.height, data)
}

/// 16-bit grayscale image of `values` mapped linearly from `[lo, hi]`.
pub fn encode_preview_png<W: Write>(frame: &Frame<f64>, lo: f64, hi: f64, w: W) -> Result<()> {
    if !(hi > lo) {
        return Err(Error::Parameter(format!("preview range [{lo}, {hi}] is empty")));
    }
    let data: Vec<u8> = frame
        .data()
        .iter()
        .flat_map(|&v| {
            let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            ((t * u16::MAX as f64).round() as u16).to_be_bytes()
        })
        .collect();
    encode(w, frame.width(), frame.height(), ColorType::Grayscale, BitDepth::Sixteen, None, &data)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    Ok(bytes)
}

pub fn write_depth_png(path: &Path, frame: &DepthFrame) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_depth_png(frame, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_depth_png(path: &Path) -> Result<DepthFrame> {
    decode_depth_png(&read_bytes(path)?)
}

pub fn write_label_png(path: &Path, frame: &LabelFrame) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_label_png(frame, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_label_png(path: &Path) -> Result<LabelFrame> {
    decode_label_png(&read_bytes(path)?)
}
