//! Frame sequence readers and writers: raw dumps with a JSON sidecar, PNG files and
//! directories, and Y4M.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use eventforge_core::frame::Frame;
use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Geometry of a raw frame dump, stored next to it as `<file>.json`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawInfo {
    pub width: u16,
    pub height: u16,
    #[serde(default = "one")]
    pub channels: u8,
    #[serde(default)]
    pub fps: Option<f64>,
    /// Bits per sample: 8, or 16 for little-endian photon counts.
    #[serde(default = "eight")]
    pub bits: u8,
}

fn one() -> u8 {
    1
}

fn eight() -> u8 {
    8
}

/// Command-line overrides for raw input geometry.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RawOverrides {
    pub width: Option<u16>,
    pub height: Option<u16>,
    pub channels: Option<u8>,
    pub fps: Option<f64>,
}

/// Decoded frame sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Video {
    pub width: u16,
    pub height: u16,
    pub channels: u8,
    pub fps: Option<f64>,
    pub frames: Vec<Frame>,
}

impl Video {
    pub fn frame_bytes(&self) -> usize {
        self.width as usize * self.height as usize * self.channels as usize
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Raw geometry from the sidecar, with command-line flags taking precedence.
pub fn raw_info(path: &Path, o: RawOverrides) -> Result<RawInfo> {
    let side = sidecar_path(path);
    let mut info = if side.exists() {
        serde_json::from_slice::<RawInfo>(&read_file(&side)?)?
    } else {
        match (o.width, o.height) {
            (Some(width), Some(height)) => RawInfo { width, height, channels: 1, fps: None, bits: 8 },
            _ => {
                return Err(CliError::param(format!(
                    "{}: raw input needs --width and --height or a sidecar {}",
                    path.display(),
                    side.display()
                )))
            }
        }
    };
    info.width = o.width.unwrap_or(info.width);
    info.height = o.height.unwrap_or(info.height);
    info.channels = o.channels.unwrap_or(info.channels);
    info.fps = o.fps.or(info.fps);
    if info.width == 0 || info.height == 0 || !matches!(info.channels, 1 | 3) || !matches!(info.bits, 8 | 16) {
        return Err(CliError::param(format!(
            "unsupported raw geometry {}x{}x{} at {} bits",
            info.width, info.height, info.channels, info.bits
        )));
    }
    Ok(info)
}

/// Reads framed video, picking the format from the path: a directory of PNGs, a single
/// PNG, a `.y4m` file, or otherwise a raw 8-bit dump.
pub fn read_video(path: &Path, o: RawOverrides) -> Result<Video> {
    let mut video = if path.is_dir() {
        read_png_dir(path)?
    } else {
        match extension(path).as_str() {
            "png" => {
                let f = read_png(path)?;
                Video { width: f.width, height: f.height, channels: f.channels, fps: None, frames: vec![f] }
            }
            "y4m" => parse_y4m(&read_file(path)?)?,
            _ => {
                let info = raw_info(path, o)?;
                if info.bits != 8 {
                    return Err(CliError::param("framed input must be 8-bit; 16-bit dumps are photon input for `simulate`"));
                }
                let bytes = read_file(path)?;
                let n = info.width as usize * info.height as usize * info.channels as usize;
                if bytes.len() % n != 0 {
                    return Err(CliError::format(format!(
                        "{}: {} bytes is not a whole number of {}-byte frames",
                        path.display(),
                        bytes.len(),
                        n
                    )));
                }
                let frames = bytes
                    .chunks_exact(n)
                    .map(|c| Frame::from_data(info.width, info.height, info.channels, c.to_vec()).unwrap())
                    .collect();
                Video { width: info.width, height: info.height, channels: info.channels, fps: info.fps, frames }
            }
        }
    };
    video.fps = o.fps.or(video.fps);
    if video.frames.is_empty() {
        return Err(CliError::format(format!("{}: no frames", path.display())));
    }
    Ok(video)
}

/// Photon-count frames for the simulator: a raw dump (16-bit when the sidecar says so)
/// or any 8-bit video.
pub fn read_photons(path: &Path, o: RawOverrides) -> Result<(u16, u16, Vec<Vec<u16>>)> {
    let is_raw = !path.is_dir() && !matches!(extension(path).as_str(), "png" | "y4m");
    if is_raw {
        let info = raw_info(path, o)?;
        if info.bits == 16 {
            if info.channels != 1 {
                return Err(CliError::param("photon input must have one channel"));
            }
            let bytes = read_file(path)?;
            let n = info.width as usize * info.height as usize * 2;
            if bytes.len() % n != 0 {
                return Err(CliError::format(format!("{}: not a whole number of 16-bit frames", path.display())));
            }
            let frames = bytes
                .chunks_exact(n)
                .map(|c| c.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect())
                .collect();
            return Ok((info.width, info.height, frames));
        }
    }
    let v = read_video(path, o)?;
    let frames = v.frames.iter().map(|f| f.to_gray().into_iter().map(u16::from).collect()).collect();
    Ok((v.width, v.height, frames))
}

pub fn read_png(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => CliError::io(path, io),
        other => other.into(),
    })?;
    Ok(image_to_frame(img))
}

fn image_to_frame(img: DynamicImage) -> Frame {
    let (w, h) = (img.width() as u16, img.height() as u16);
    if img.color().has_color() {
        Frame::from_data(w, h, 3, img.into_rgb8().into_raw()).unwrap()
    } else {
        Frame::from_data(w, h, 1, img.into_luma8().into_raw()).unwrap()
    }
}

fn read_png_dir(dir: &Path) -> Result<Video> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| extension(p) == "png")
        .collect();
    paths.sort();
    let frames = paths.iter().map(|p| read_png(p)).collect::<Result<Vec<_>>>()?;
    let Some(first) = frames.first() else {
        return Err(CliError::format(format!("{}: no PNG files", dir.display())));
    };
    let (width, height, channels) = (first.width, first.height, first.channels);
    if let Some((i, _)) = frames.iter().enumerate().find(|(_, f)| (f.width, f.height, f.channels) != (width, height, channels)) {
        return Err(CliError::format(format!("{}: size or color differs from the first frame", paths[i].display())));
    }
    Ok(Video { width, height, channels, fps: None, frames })
}

/// Parses 8-bit Y4M, keeping the luma plane.
pub fn parse_y4m(bytes: &[u8]) -> Result<Video> {
    let bad = |m: &str| CliError::format(format!("Y4M: {m}"));
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header line"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not text"))?;
    let mut tokens = header.split(' ');
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(bad("missing YUV4MPEG2 signature"));
    }
    let (mut w, mut h, mut fps, mut chroma) = (0usize, 0usize, None, "420jpeg".to_string());
    for t in tokens.filter(|t| !t.is_empty()) {
        let (tag, val) = t.split_at(1);
        match tag {
            "W" => w = val.parse().map_err(|_| bad("bad width"))?,
            "H" => h = val.parse().map_err(|_| bad("bad height"))?,
            "F" => {
                let (n, d) = val.split_once(':').ok_or_else(|| bad("bad frame rate"))?;
                let (n, d): (f64, f64) = (n.parse().map_err(|_| bad("bad frame rate"))?, d.parse().map_err(|_| bad("bad frame rate"))?);
                if d > 0.0 {
                    fps = Some(n / d);
                }
            }
            "C" => chroma = val.to_string(),
            _ => {}
        }
    }
    if w == 0 || h == 0 || w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(bad("missing or invalid dimensions"));
    }
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let chroma_len = match chroma.as_str() {
        "mono" => 0,
        "420" | "420jpeg" | "420paldv" | "420mpeg2" => 2 * cw * ch,
        "422" => 2 * cw * h,
        "444" => 2 * w * h,
        other => return Err(bad(&format!("unsupported colorspace {other}"))),
    };
    let luma = w * h;
    let mut frames = Vec::new();
    let mut pos = nl + 1;
    while pos < bytes.len() {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map(|i| pos + i).ok_or_else(|| bad("truncated frame header"))?;
        if !bytes[pos..end].starts_with(b"FRAME") {
            return Err(bad("expected FRAME marker"));
        }
        pos = end + 1;
        if bytes.len() < pos + luma + chroma_len {
            return Err(bad("truncated frame data"));
        }
        frames.push(Frame::from_data(w as u16, h as u16, 1, bytes[pos..pos + luma].to_vec()).unwrap());
        pos += luma + chroma_len;
    }
    Ok(Video { width: w as u16, height: h as u16, channels: 1, fps, frames })
}

/// Monochrome Y4M of the frames' gray values.
pub fn encode_y4m(frames: &[Frame], fps: f64) -> Vec<u8> {
    let (w, h) = frames.first().map_or((0, 0), |f| (f.width, f.height));
    let (num, den) = if fps.fract() == 0.0 { (fps as u64, 1) } else { ((fps * 1000.0).round() as u64, 1000) };
    let mut out = format!("YUV4MPEG2 W{w} H{h} F{num}:{den} Ip A1:1 Cmono\n").into_bytes();
    for f in frames {
        out.extend_from_slice(b"FRAME\n");
        out.extend_from_slice(&f.to_gray());
    }
    out
}

pub fn encode_png(frame: &Frame) -> Result<Vec<u8>> {
    let (w, h) = (frame.width as u32, frame.height as u32);
    let img = if frame.channels == 3 {
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, frame.data.clone()).unwrap())
    } else {
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, frame.to_gray()).unwrap())
    };
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Writes frames by output path: `.y4m`, `.raw` (with sidecar), or otherwise a directory
/// of numbered PNGs.
pub fn write_video(path: &Path, frames: &[Frame], fps: f64) -> Result<()> {
    match extension(path).as_str() {
        "y4m" => write_file(path, &encode_y4m(frames, fps)),
        "raw" => {
            let first = frames.first();
            let info = RawInfo {
                width: first.map_or(0, |f| f.width),
                height: first.map_or(0, |f| f.height),
                channels: first.map_or(1, |f| f.channels),
                fps: Some(fps),
                bits: 8,
            };
            let mut bytes = Vec::with_capacity(frames.iter().map(|f| f.data.len()).sum());
            for f in frames {
                bytes.extend_from_slice(&f.data);
            }
            write_file(path, &bytes)?;
            write_file(&sidecar_path(path), serde_json::to_string_pretty(&info)?.as_bytes())
        }
        _ => write_png_dir(path, frames, "frame"),
    }
}

pub fn write_png_dir(dir: &Path, frames: &[Frame], prefix: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        let p = dir.join(format!("{prefix}_{i:06}.png"));
        write_file(&p, &encode_png(f)?)?;
    }
    Ok(())
}

/// 16-bit little-endian photon dump with its sidecar.
pub fn write_photons(path: &Path, width: u16, height: u16, frames: &[Vec<u16>]) -> Result<()> {
    let mut f = Vec::with_capacity(frames.iter().map(|f| f.len() * 2).sum());
    for frame in frames {
        for v in frame {
            f.write_all(&v.to_le_bytes()).unwrap();
        }
    }
    write_file(path, &f)?;
    let info = RawInfo { width, height, channels: 1, fps: None, bits: 16 };
    write_file(&sidecar_path(path), serde_json::to_string_pretty(&info)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: u16, h: u16, seed: u8) -> Frame {
        let data = (0..w as usize * h as usize).map(|i| (i as u8).wrapping_mul(7).wrapping_add(seed)).collect();
        Frame::from_data(w, h, 1, data).unwrap()
    }

    #[test]
    fn y4m_round_trip() {
        let frames = vec![gray(5, 3, 0), gray(5, 3, 9)];
        let v = parse_y4m(&encode_y4m(&frames, 25.0)).unwrap();
        assert_eq!((v.width, v.height, v.channels, v.fps), (5, 3, 1, Some(25.0)));
        assert_eq!(v.frames, frames);
    }

    #[test]
    fn y4m_420_skips_chroma() {
        let mut bytes = b"YUV4MPEG2 W3 H3 F30000:1001 C420jpeg\n".to_vec();
        for k in 0..2u8 {
            bytes.extend_from_slice(b"FRAME\n");
            bytes.extend_from_slice(&[k; 9]);
            bytes.extend_from_slice(&[200; 8]);
        }
        let v = parse_y4m(&bytes).unwrap();
        assert_eq!(v.frames.len(), 2);
        assert_eq!(v.frames[1].data, vec![1; 9]);
        assert!((v.fps.unwrap() - 29.97).abs() < 0.01);
    }

    #[test]
    fn y4m_rejects_truncation_and_deep_color() {
        let mut bytes = encode_y4m(&[gray(4, 4, 1)], 30.0);
        bytes.pop();
        assert!(matches!(parse_y4m(&bytes), Err(CliError::Format(_))));
        assert!(parse_y4m(b"YUV4MPEG2 W2 H2 C420p10\n").is_err());
        assert!(parse_y4m(b"MPEG W2 H2\n").is_err());
    }

    #[test]
    fn png_and_raw_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames = vec![gray(6, 4, 3), gray(6, 4, 50)];
        write_video(&dir.path().join("pngs"), &frames, 30.0).unwrap();
        assert_eq!(read_video(&dir.path().join("pngs"), RawOverrides::default()).unwrap().frames, frames);

        let raw = dir.path().join("clip.raw");
        write_video(&raw, &frames, 12.0).unwrap();
        let v = read_video(&raw, RawOverrides::default()).unwrap();
        assert_eq!((v.frames.clone(), v.fps), (frames, Some(12.0)));

        let rgb = Frame::from_data(2, 1, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let p = dir.path().join("rgb.png");
        write_file(&p, &encode_png(&rgb).unwrap()).unwrap();
        assert_eq!(read_png(&p).unwrap(), rgb);
    }

    #[test]
    fn raw_needs_geometry() {
        let dir = tempfile::tempdir().unwrap();
        let raw = dir.path().join("clip.bin");
        write_file(&raw, &[0; 12]).unwrap();
        assert!(matches!(read_video(&raw, RawOverrides::default()), Err(CliError::Param(_))));
        let o = RawOverrides { width: Some(3), height: Some(2), ..Default::default() };
        assert_eq!(read_video(&raw, o).unwrap().frames.len(), 2);
        let o = RawOverrides { width: Some(5), height: Some(1), ..Default::default() };
        assert!(matches!(read_video(&raw, o), Err(CliError::Format(_))));
    }

    #[test]
    fn photon_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("photons.raw");
        let frames = vec![vec![1u16, 300, 65535, 0], vec![2, 4, 8, 16]];
        write_photons(&p, 2, 2, &frames).unwrap();
        assert_eq!(read_photons(&p, RawOverrides::default()).unwrap(), (2, 2, frames));
    }
}
