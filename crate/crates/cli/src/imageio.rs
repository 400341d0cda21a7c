//! Image file I/O.
//!
//! Binary PGM (grayscale) and PPM (color) are the canonical formats: the
//! writers here round-trip 8-bit data bit-exactly. PNG is accepted on input
//! for convenience. Real-valued (unquantized) pixel data travels in a
//! sidecar raster: a 16-byte header (4-byte magic `FZF8`, then height,
//! width, channels as little-endian u32) followed by channel-planar
//! row-major little-endian f64 samples.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use fuzzyseg::{Image, LabelMap};

use crate::{CliError, CliResult};

const SIDECAR_MAGIC: &[u8; 4] = b"FZF8";

/// Conventional sidecar path: the image path with `.f64` appended.
pub fn sidecar_path(image_path: &Path) -> std::path::PathBuf {
    let mut s = image_path.as_os_str().to_owned();
    s.push(".f64");
    std::path::PathBuf::from(s)
}

fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Writes a PGM (1 channel) or PPM (3 channels) file, quantizing to 8 bits.
pub fn write_image(path: &Path, img: &Image) -> CliResult<()> {
    let mut bytes = Vec::with_capacity(64 + img.values().len());
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    bytes.extend_from_slice(format!("{}\n{} {}\n255\n", magic, img.width(), img.height()).as_bytes());
    let n = img.pixel_count();
    for idx in 0..n {
        for ch in 0..img.channels() {
            bytes.push(quantize(img.channel(ch)[idx]));
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes a label map as a PGM whose pixel values are the raw class indices.
pub fn write_labels(path: &Path, labels: &LabelMap) -> CliResult<()> {
    let mut bytes = Vec::with_capacity(64 + labels.labels().len());
    bytes.extend_from_slice(format!("P5\n{} {}\n255\n", labels.width(), labels.height()).as_bytes());
    bytes.extend_from_slice(labels.labels());
    fs::write(path, bytes)?;
    Ok(())
}

struct PnmHeader {
    color: bool,
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

fn parse_pnm_header(bytes: &[u8]) -> CliResult<PnmHeader> {
    let color = match &bytes.get(0..2) {
        Some(b"P5") => false,
        Some(b"P6") => true,
        _ => return Err(CliError::io("not a binary PGM/PPM file")),
    };
    // Header tokens: width, height, maxval, separated by whitespace, with
    // '#' comments running to end of line.
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        while pos < bytes.len() {
            let b = bytes[pos];
            if b == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(CliError::io("malformed PNM header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| CliError::io("malformed PNM header"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(CliError::io("malformed PNM header"));
    }
    pos += 1;
    Ok(PnmHeader {
        color,
        width: fields[0],
        height: fields[1],
        maxval: fields[2],
        data_offset: pos,
    })
}

fn read_pnm(bytes: &[u8]) -> CliResult<Image> {
    let header = parse_pnm_header(bytes)?;
    if header.maxval == 0 || header.maxval > 255 {
        return Err(CliError::io(format!("unsupported PNM maxval {}", header.maxval)));
    }
    let channels = if header.color { 3 } else { 1 };
    let n = header.height * header.width;
    let raster = &bytes[header.data_offset..];
    if raster.len() < n * channels {
        return Err(CliError::io("PNM raster truncated"));
    }
    let mut data = vec![0f64; n * channels];
    for idx in 0..n {
        for ch in 0..channels {
            data[ch * n + idx] = raster[idx * channels + ch] as f64;
        }
    }
    Image::from_data(header.height, header.width, channels, data).map_err(|e| CliError::io(e.to_string()))
}

fn read_png(path: &Path) -> CliResult<Image> {
    let decoded = image::open(path).map_err(|e| CliError::io(format!("cannot decode {}: {}", path.display(), e)))?;
    let color = decoded.color();
    if color.has_color() {
        let rgb = decoded.to_rgb8();
        let (w, h) = (rgb.width() as usize, rgb.height() as usize);
        let n = h * w;
        let mut data = vec![0f64; n * 3];
        for (idx, px) in rgb.pixels().enumerate() {
            for ch in 0..3 {
                data[ch * n + idx] = px.0[ch] as f64;
            }
        }
        Image::from_data(h, w, 3, data).map_err(|e| CliError::io(e.to_string()))
    } else {
        let gray = decoded.to_luma8();
        let (w, h) = (gray.width() as usize, gray.height() as usize);
        let data: Vec<f64> = gray.pixels().map(|p| p.0[0] as f64).collect();
        Image::from_data(h, w, 1, data).map_err(|e| CliError::io(e.to_string()))
    }
}

/// Reads PGM/PPM (by magic), the f64 sidecar raster (by magic), or PNG.
pub fn read_image(path: &Path) -> CliResult<Image> {
    let bytes = fs::read(path).map_err(|e| CliError::io(format!("cannot read {}: {}", path.display(), e)))?;
    match bytes.get(0..2) {
        Some(b"P5") | Some(b"P6") => read_pnm(&bytes),
        _ if bytes.get(0..4) == Some(SIDECAR_MAGIC.as_slice()) => decode_sidecar(&bytes),
        _ => read_png(path),
    }
}

/// Reads a label-map PGM written by [`write_labels`].
pub fn read_labels(path: &Path) -> CliResult<LabelMap> {
    let bytes = fs::read(path).map_err(|e| CliError::io(format!("cannot read {}: {}", path.display(), e)))?;
    let header = parse_pnm_header(&bytes)?;
    if header.color {
        return Err(CliError::io("label maps must be grayscale PGM"));
    }
    let n = header.height * header.width;
    let raster = &bytes[header.data_offset..];
    if raster.len() < n {
        return Err(CliError::io("label raster truncated"));
    }
    LabelMap::from_data(header.height, header.width, raster[..n].to_vec())
        .map_err(|e| CliError::io(e.to_string()))
}

/// Writes the real-valued sidecar raster.
pub fn write_sidecar(path: &Path, img: &Image) -> CliResult<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(SIDECAR_MAGIC)?;
    f.write_all(&(img.height() as u32).to_le_bytes())?;
    f.write_all(&(img.width() as u32).to_le_bytes())?;
    f.write_all(&(img.channels() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(img.values().len() * 8);
    for v in img.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&buf)?;
    Ok(())
}

fn decode_sidecar(bytes: &[u8]) -> CliResult<Image> {
    if bytes.len() < 16 || &bytes[0..4] != SIDECAR_MAGIC {
        return Err(CliError::io("not a sidecar raster"));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (h, w, c) = (word(4), word(8), word(12));
    let n = h * w * c;
    if bytes.len() < 16 + 8 * n {
        return Err(CliError::io("sidecar raster truncated"));
    }
    let data: Vec<f64> = bytes[16..16 + 8 * n]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Image::from_data(h, w, c, data).map_err(|e| CliError::io(e.to_string()))
}

/// Reads the sidecar raster from a file.
pub fn read_sidecar(path: &Path) -> CliResult<Image> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {}", path.display(), e)))?
        .read_to_end(&mut bytes)?;
    decode_sidecar(&bytes)
}
