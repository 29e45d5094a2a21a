//! File formats: PNG rasters, the CCWM weight-map container, and atomic
//! output.

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use cellcount_core::weightmap::WeightMap;
use cellcount_core::{BinaryMask, BitDepth, GrayRaster, LabelMap, ProbabilityMap, Raster};
use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{CliError, CliResult};

pub const CCWM_MAGIC: &[u8; 4] = b"CCWM";

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::at(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::at(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::at(path, e))?;
    tmp.persist(path).map_err(|e| CliError::at(path, e.error))?;
    Ok(())
}

fn encode(img: DynamicImage) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    img.write_to(&mut Cursor::new(&mut buf), ImageFormat::Png)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(buf)
}

fn dims(w: usize, h: usize) -> (u32, u32) {
    (w as u32, h as u32)
}

/// Reads any PNG as grayscale; color images are converted to luma at their
/// own bit depth.
pub fn read_gray(path: &Path) -> CliResult<GrayRaster> {
    let img = image::open(path).map_err(|e| CliError::at(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let sixteen = img.color().bytes_per_pixel() / img.color().channel_count() == 2;
    let (depth, data): (BitDepth, Vec<u16>) = if sixteen {
        (BitDepth::Sixteen, img.to_luma16().into_raw())
    } else {
        (BitDepth::Eight, img.to_luma8().into_raw().into_iter().map(u16::from).collect())
    };
    Ok(GrayRaster::new(depth, Raster::from_vec(w, h, data)?)?)
}

/// Binary mask stored as 0 and the full-scale value; anything else is
/// rejected.
pub fn read_mask(path: &Path) -> CliResult<BinaryMask> {
    let gray = read_gray(path)?;
    let max = gray.depth().max_value();
    if let Some(v) = gray.pixels().as_slice().iter().find(|&&v| v != 0 && v != max) {
        return Err(CliError::at(path, format!("not a binary mask: pixel value {v} (expected 0 or {max})")));
    }
    Ok(gray.pixels().map(|&v| v == max))
}

pub fn read_heatmap(path: &Path) -> CliResult<ProbabilityMap> {
    Ok(ProbabilityMap::new(read_gray(path)?.to_unit())?)
}

/// Targets or predictions as instances: 16-bit images are label maps,
/// 8-bit images binary masks split into 8-connected components.
pub fn read_instances(path: &Path) -> CliResult<LabelMap> {
    let gray = read_gray(path)?;
    match gray.depth() {
        BitDepth::Sixteen => Ok(LabelMap::compact(&gray.pixels().map(|&v| u32::from(v)))),
        BitDepth::Eight => Ok(cellcount_core::imgcore::connected_components(
            &read_mask(path)?,
            cellcount_core::Connectivity::Eight,
        )),
    }
}

pub fn mask_png(mask: &BinaryMask) -> CliResult<Vec<u8>> {
    let (w, h) = dims(mask.width(), mask.height());
    let data = mask.as_slice().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode(DynamicImage::ImageLuma8(ImageBuffer::from_raw(w, h, data).expect("size")))
}

pub fn gray_png(gray: &GrayRaster) -> CliResult<Vec<u8>> {
    let (w, h) = dims(gray.width(), gray.height());
    let px = gray.pixels().as_slice();
    let img = match gray.depth() {
        BitDepth::Eight => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, px.iter().map(|&v| v as u8).collect()).expect("size"),
        ),
        BitDepth::Sixteen => {
            DynamicImage::ImageLuma16(ImageBuffer::<Luma<u16>, _>::from_raw(w, h, px.to_vec()).expect("size"))
        }
    };
    encode(img)
}

pub fn heatmap_png(p: &ProbabilityMap, depth: BitDepth) -> CliResult<Vec<u8>> {
    gray_png(&GrayRaster::from_unit(p.raster(), depth))
}

pub fn rgb_png(rgb: &Raster<[u8; 3]>) -> CliResult<Vec<u8>> {
    let (w, h) = dims(rgb.width(), rgb.height());
    let data = rgb.as_slice().iter().flatten().copied().collect();
    encode(DynamicImage::ImageRgb8(ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, data).expect("size")))
}

/// Label ids as 16-bit pixel values.
pub fn labels_png(lm: &LabelMap) -> CliResult<Vec<u8>> {
    if lm.object_count() > u32::from(u16::MAX) {
        return Err(CliError::Runtime(format!(
            "{} objects do not fit a 16-bit label image",
            lm.object_count()
        )));
    }
    let pixels = lm.labels().map(|&l| l as u16);
    gray_png(&GrayRaster::new(BitDepth::Sixteen, pixels)?)
}

/// `CCWM`, width and height as u32, then row-major f32 values, all
/// little-endian.
pub fn ccwm_bytes(weights: &Raster<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * weights.len());
    out.extend_from_slice(CCWM_MAGIC);
    out.extend_from_slice(&(weights.width() as u32).to_le_bytes());
    out.extend_from_slice(&(weights.height() as u32).to_le_bytes());
    for &v in weights.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn parse_ccwm(bytes: &[u8]) -> CliResult<Raster<f32>> {
    let bad = |why: &str| CliError::Runtime(format!("invalid CCWM data: {why}"));
    if bytes.len() < 12 || &bytes[..4] != CCWM_MAGIC {
        return Err(bad("missing header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (w, h) = (word(4), word(8));
    let body = &bytes[12..];
    if w.checked_mul(h).and_then(|n| n.checked_mul(4)) != Some(body.len()) {
        return Err(bad("size does not match header"));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Raster::from_vec(w, h, values).map_err(|e| bad(&e.to_string()))
}

pub fn read_ccwm(path: &Path) -> CliResult<Raster<f32>> {
    parse_ccwm(&fs::read(path).map_err(|e| CliError::at(path, e))?)
}

/// 16-bit PNG of the weights scaled so the maximum maps to 65535. The
/// factor is stored in a `scale` text chunk: `weight = pixel / scale`.
pub fn weight_png(wm: &WeightMap) -> CliResult<Vec<u8>> {
    let scale = f64::from(u16::MAX) / wm.max();
    let r = wm.raster();
    let mut data = Vec::with_capacity(2 * r.len());
    for &v in r.as_slice() {
        data.extend_from_slice(&((v * scale).round().min(65535.0) as u16).to_be_bytes());
    }
    let mut buf = Vec::new();
    let err = |e: png::EncodingError| CliError::Runtime(e.to_string());
    {
        let mut enc = png::Encoder::new(&mut buf, r.width() as u32, r.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        enc.add_text_chunk("scale".into(), format!("{scale}")).map_err(err)?;
        let mut writer = enc.write_header().map_err(err)?;
        writer.write_image_data(&data).map_err(err)?;
    }
    Ok(buf)
}

/// PNG files directly inside `dir`, sorted by file name.
pub fn list_pngs(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::at(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

/// Pairs files with equal names in two directories. Any name present on
/// one side only is an error listing every such name.
pub fn pair_by_name(left: &Path, right: &Path) -> CliResult<Vec<(String, PathBuf, PathBuf)>> {
    let name = |p: &PathBuf| p.file_name().unwrap().to_string_lossy().into_owned();
    let a = list_pngs(left)?;
    let b = list_pngs(right)?;
    let names_a: Vec<String> = a.iter().map(name).collect();
    let names_b: Vec<String> = b.iter().map(name).collect();
    let mut missing: Vec<String> = names_a
        .iter()
        .filter(|n| !names_b.contains(n))
        .map(|n| format!("{n} (only in {})", left.display()))
        .chain(
            names_b
                .iter()
                .filter(|n| !names_a.contains(n))
                .map(|n| format!("{n} (only in {})", right.display())),
        )
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(CliError::Runtime(format!("unpaired files:\n  {}", missing.join("\n  "))));
    }
    if a.is_empty() {
        return Err(CliError::Runtime(format!("no PNG files in {}", left.display())));
    }
    Ok(names_a
        .into_iter()
        .zip(a.into_iter().zip(b))
        .map(|(n, (x, y))| (n, x, y))
        .collect())
}
