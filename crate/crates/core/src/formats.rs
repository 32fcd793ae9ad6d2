//! Image files: 8-bit RGB PNG and binary PPM (`P6`) frames, binary PGM
//! (`P5`) masks, plus numbered frame sequences on disk.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Cursor, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::morphology::BinaryMask;
use crate::pixel::RgbFrame;

const PNG_SIGNATURE: &[u8; 8] = b"\x89PNG\r\n\x1a\n";

/// Reads a frame, choosing the decoder from the file's leading bytes.
pub fn load_frame(path: &Path) -> Result<RgbFrame> {
    let bytes = std::fs::read(path)?;
    decode_frame(&bytes)
}

pub fn decode_frame(bytes: &[u8]) -> Result<RgbFrame> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else if bytes.len() < 2 {
        Err(io::Error::new(io::ErrorKind::UnexpectedEof, "file too short for an image header").into())
    } else {
        Err(Error::Format(
            "expected an 8-bit RGB PNG or a binary PPM (P6)".into(),
        ))
    }
}

fn decode_png(bytes: &[u8]) -> Result<RgbFrame> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_error)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Format(format!(
            "PNG must be 8-bit RGB truecolor, got {:?} at {:?} bits",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width, info.height);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("PNG too large".into()))?;
    let mut buf = vec![0; size];
    let out = reader.next_frame(&mut buf).map_err(png_error)?;
    buf.truncate(out.buffer_size());
    RgbFrame::from_raw(width, height, buf)
}

fn png_error(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::Io(io),
        other => Error::Format(format!("PNG: {other}")),
    }
}

/// Reads a whitespace-separated header token, skipping `#` comments.
fn header_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !token.is_empty() {
                    return Ok(token);
                }
            }
            b => token.push(b as char),
        }
    }
}

/// Parses `magic width height maxval` and leaves the reader on the first
/// data byte.
fn read_pnm_header<R: BufRead>(r: &mut R, magic: &str) -> Result<(u32, u32)> {
    let found = header_token(r)?;
    if found != magic {
        return Err(Error::Format(format!("expected {magic} header, found `{found}`")));
    }
    let mut number = |name: &str| -> Result<u32> {
        let tok = header_token(r)?;
        tok.parse::<u32>()
            .map_err(|_| Error::Format(format!("bad {name} `{tok}` in {magic} header")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("{magic} maxval must be 255, got {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("{magic} image is {width}x{height}")));
    }
    Ok((width, height))
}

fn decode_ppm(bytes: &[u8]) -> Result<RgbFrame> {
    let mut r = Cursor::new(bytes);
    let (width, height) = read_pnm_header(&mut r, "P6")?;
    let mut data = vec![0u8; width as usize * height as usize * 3];
    r.read_exact(&mut data)?;
    RgbFrame::from_raw(width, height, data)
}

pub fn encode_ppm<W: Write>(mut w: W, frame: &RgbFrame) -> Result<()> {
    write!(w, "P6\n{} {}\n255\n", frame.width(), frame.height())?;
    w.write_all(frame.as_raw())?;
    Ok(())
}

pub fn encode_png<W: Write>(w: W, frame: &RgbFrame) -> Result<()> {
    let mut enc = png::Encoder::new(w, frame.width(), frame.height());
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let to_io = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => Error::Io(io),
        other => Error::Format(format!("PNG: {other}")),
    };
    let mut writer = enc.write_header().map_err(to_io)?;
    writer.write_image_data(frame.as_raw()).map_err(to_io)?;
    writer.finish().map_err(to_io)?;
    Ok(())
}

/// Writes PNG for a `.png` path and PPM otherwise.
pub fn save_frame(frame: &RgbFrame, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        encode_png(&mut out, frame)?;
    } else {
        encode_ppm(&mut out, frame)?;
    }
    out.flush()?;
    Ok(())
}

/// Mask as `P5` graymap: foreground 255, background 0.
pub fn encode_mask<W: Write>(mut w: W, mask: &BinaryMask) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", mask.width(), mask.height())?;
    let bytes: Vec<u8> = mask
        .to_bools()
        .into_iter()
        .map(|b| if b { 255 } else { 0 })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    encode_mask(&mut out, mask)?;
    out.flush()?;
    Ok(())
}

/// Reads a `P5` graymap; any non-zero sample is foreground.
pub fn decode_mask<R: Read>(reader: R) -> Result<BinaryMask> {
    let mut r = BufReader::new(reader);
    let (width, height) = read_pnm_header(&mut r, "P5")?;
    let mut data = vec![0u8; width as usize * height as usize];
    r.read_exact(&mut data)?;
    let bits: Vec<bool> = data.iter().map(|&b| b != 0).collect();
    BinaryMask::from_bools(width, height, &bits)
}

pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    decode_mask(File::open(path)?)
}

/// Parses the index out of `frame_000123.png` / `frame_000123.ppm`.
pub fn frame_index(path: &Path) -> Option<u64> {
    let name = path.file_name()?.to_str()?;
    let (stem, ext) = name.rsplit_once('.')?;
    if !matches!(ext.to_ascii_lowercase().as_str(), "png" | "ppm") {
        return None;
    }
    let digits = stem.strip_prefix("frame_")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// `frame_%06d.<ext>`
pub fn frame_file_name(index: u64, ext: &str) -> String {
    format!("frame_{index:06}.{ext}")
}

/// Numbered frames in `dir`, sorted by index.
pub fn list_frames(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut frames = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if let Some(idx) = frame_index(&path) {
            frames.push((idx, path));
        }
    }
    frames.sort();
    if let Some(w) = frames.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Parameter(format!(
            "frame {} appears twice ({} and {})",
            w[0].0,
            w[0].1.display(),
            w[1].1.display()
        )));
    }
    Ok(frames)
}
