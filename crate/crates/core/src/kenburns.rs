//! Ken Burns synthetic clips: turn a still image into a 16-frame clip by
//! linearly interpolating between two random square crops and bilinearly
//! resizing each crop to 112×112.
//!
//! Image I/O is limited to binary PPM (P6); convert anything else with e.g.
//! ImageMagick (`magick in.jpg out.ppm`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::{Result, ZslError};
use crate::rng;

pub const FRAME_COUNT: usize = 16;
pub const FRAME_SIZE: usize = 112;
pub const MIN_CROP_SIDE: f64 = 8.0;

/// RGB image with channel values in [0, 1].
#[derive(Debug, Clone)]
pub struct Image {
    height: usize,
    width: usize,
    /// H × W × 3, row-major.
    pixels: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(ZslError::Invalid("empty image".into()));
        }
        if pixels.len() != height * width * 3 {
            return Err(ZslError::Invalid("pixel buffer size mismatch".into()));
        }
        if pixels.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(ZslError::Invalid("pixel outside [0, 1]".into()));
        }
        Ok(Image {
            height,
            width,
            pixels,
        })
    }

    pub fn constant(height: usize, width: usize, rgb: [f32; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width * 3);
        for _ in 0..height * width {
            pixels.extend_from_slice(&rgb);
        }
        Image::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Load a binary PPM (P6, maxval ≤ 255).
    pub fn load_ppm(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| ZslError::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut header = Vec::new();

        // magic, width, height, maxval; '#' comments allowed between tokens
        let mut tokens = Vec::new();
        while tokens.len() < 4 {
            let mut byte = [0u8; 1];
            if r.read(&mut byte).map_err(|e| ZslError::io(path, e))? == 0 {
                return Err(ZslError::format(path, "truncated PPM header"));
            }
            match byte[0] {
                b'#' => {
                    let mut comment = Vec::new();
                    r.read_until(b'\n', &mut comment)
                        .map_err(|e| ZslError::io(path, e))?;
                }
                b if b.is_ascii_whitespace() => {
                    if !header.is_empty() {
                        tokens.push(String::from_utf8_lossy(&header).into_owned());
                        header.clear();
                    }
                }
                b => header.push(b),
            }
        }
        if tokens[0] != "P6" {
            return Err(ZslError::format(path, "not a P6 PPM"));
        }
        let width: usize = tokens[1]
            .parse()
            .map_err(|_| ZslError::format(path, "bad width"))?;
        let height: usize = tokens[2]
            .parse()
            .map_err(|_| ZslError::format(path, "bad height"))?;
        let maxval: u32 = tokens[3]
            .parse()
            .map_err(|_| ZslError::format(path, "bad maxval"))?;
        if maxval == 0 || maxval > 255 {
            return Err(ZslError::format(path, "unsupported maxval"));
        }
        let mut raw = vec![0u8; width * height * 3];
        r.read_exact(&mut raw)
            .map_err(|_| ZslError::format(path, "truncated PPM payload"))?;
        let scale = 1.0 / maxval as f32;
        let pixels = raw.iter().map(|&b| b as f32 * scale).collect();
        Image::new(height, width, pixels)
    }

    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| ZslError::io(path, e))?;
        let mut w = BufWriter::new(file);
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)
            .map_err(|e| ZslError::io(path, e))?;
        let raw: Vec<u8> = self
            .pixels
            .iter()
            .map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        w.write_all(&raw).map_err(|e| ZslError::io(path, e))?;
        w.flush().map_err(|e| ZslError::io(path, e))
    }
}

/// Square crop: center and edge length in source-pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crop {
    pub cx: f64,
    pub cy: f64,
    pub side: f64,
}

impl Crop {
    pub fn in_bounds(&self, image: &Image) -> bool {
        let h = self.side / 2.0;
        self.side >= MIN_CROP_SIDE
            && self.cx - h >= 0.0
            && self.cy - h >= 0.0
            && self.cx + h <= image.width as f64
            && self.cy + h <= image.height as f64
    }
}

/// Linear path between a start and end crop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropPath {
    pub start: Crop,
    pub end: Crop,
}

impl CropPath {
    /// Crop parameters for frame `k`, linear in k over the 16 frames.
    pub fn at_frame(&self, k: usize) -> Crop {
        let t = k as f64 / (FRAME_COUNT - 1) as f64;
        Crop {
            cx: self.start.cx + t * (self.end.cx - self.start.cx),
            cy: self.start.cy + t * (self.end.cy - self.start.cy),
            side: self.start.side + t * (self.end.side - self.start.side),
        }
    }

    pub fn validate(&self, image: &Image) -> Result<()> {
        // endpoints in bounds imply every interpolated crop is in bounds
        // (the constraint set is convex), but check all frames anyway
        for k in 0..FRAME_COUNT {
            if !self.at_frame(k).in_bounds(image) {
                return Err(ZslError::Invalid(format!(
                    "crop at frame {k} out of bounds"
                )));
            }
        }
        Ok(())
    }
}

/// Crop-size policy: side uniform in [min_scale, max_scale]·min(H, W).
#[derive(Debug, Clone, Copy)]
pub struct KenBurnsConfig {
    pub min_scale: f64,
    pub max_scale: f64,
}

impl Default for KenBurnsConfig {
    fn default() -> Self {
        KenBurnsConfig {
            min_scale: 0.5,
            max_scale: 1.0,
        }
    }
}

fn sample_crop<R: Rng>(image: &Image, config: &KenBurnsConfig, rng: &mut R) -> Crop {
    let min_dim = image.height.min(image.width) as f64;
    let side = if config.min_scale == config.max_scale {
        config.min_scale * min_dim
    } else {
        rng.gen_range(config.min_scale..config.max_scale) * min_dim
    };
    let half = side / 2.0;
    let sample_center = |rng: &mut R, lo: f64, hi: f64| {
        if hi > lo {
            rng.gen_range(lo..hi)
        } else {
            lo
        }
    };
    let cx = sample_center(rng, half, image.width as f64 - half);
    let cy = sample_center(rng, half, image.height as f64 - half);
    Crop { cx, cy, side }
}

/// Sample start and end crops independently (locations and sizes).
pub fn sample_crop_path<R: Rng>(
    image: &Image,
    config: &KenBurnsConfig,
    rng: &mut R,
) -> Result<CropPath> {
    if !(0.0 < config.min_scale && config.min_scale <= config.max_scale && config.max_scale <= 1.0)
    {
        return Err(ZslError::InvalidConfig(
            "crop scales must satisfy 0 < min <= max <= 1".into(),
        ));
    }
    let min_dim = image.height.min(image.width) as f64;
    if config.min_scale * min_dim < MIN_CROP_SIDE {
        return Err(ZslError::Invalid(format!(
            "image {}x{} too small for min crop side {MIN_CROP_SIDE}",
            image.width, image.height
        )));
    }
    Ok(CropPath {
        start: sample_crop(image, config, rng),
        end: sample_crop(image, config, rng),
    })
}

/// One rendered synthetic clip: 16 frames of 112×112×3 values in [0, 1].
#[derive(Debug, Clone)]
pub struct SyntheticClip {
    pub frames: Vec<Image>,
}

impl SyntheticClip {
    /// Flatten into one 112·112·3 row per frame (the raw-clip feature-store
    /// payload).
    pub fn frame_rows(&self) -> Vec<Vec<f32>> {
        self.frames.iter().map(|f| f.pixels.clone()).collect()
    }
}

/// Bilinear sample with half-pixel centers, clamped at the borders.
fn bilinear(image: &Image, x: f64, y: f64) -> [f32; 3] {
    let u = (x - 0.5).clamp(0.0, (image.width - 1) as f64);
    let v = (y - 0.5).clamp(0.0, (image.height - 1) as f64);
    let x0 = u.floor() as usize;
    let y0 = v.floor() as usize;
    let x1 = (x0 + 1).min(image.width - 1);
    let y1 = (y0 + 1).min(image.height - 1);
    let fx = (u - x0 as f64) as f32;
    let fy = (v - y0 as f64) as f32;
    let p00 = image.pixel(y0, x0);
    let p01 = image.pixel(y0, x1);
    let p10 = image.pixel(y1, x0);
    let p11 = image.pixel(y1, x1);
    let mut out = [0.0f32; 3];
    for c in 0..3 {
        let top = p00[c] * (1.0 - fx) + p01[c] * fx;
        let bot = p10[c] * (1.0 - fx) + p11[c] * fx;
        out[c] = top * (1.0 - fy) + bot * fy;
    }
    out
}

fn render_crop(image: &Image, crop: &Crop) -> Image {
    let left = crop.cx - crop.side / 2.0;
    let top = crop.cy - crop.side / 2.0;
    let step = crop.side / FRAME_SIZE as f64;
    let mut pixels = Vec::with_capacity(FRAME_SIZE * FRAME_SIZE * 3);
    for j in 0..FRAME_SIZE {
        let y = top + (j as f64 + 0.5) * step;
        for i in 0..FRAME_SIZE {
            let x = left + (i as f64 + 0.5) * step;
            pixels.extend_from_slice(&bilinear(image, x, y));
        }
    }
    Image {
        height: FRAME_SIZE,
        width: FRAME_SIZE,
        pixels,
    }
}

/// Render the 16 frames along a crop path.
pub fn render_clip(image: &Image, path: &CropPath) -> Result<SyntheticClip> {
    path.validate(image)?;
    let frames = (0..FRAME_COUNT)
        .map(|k| render_crop(image, &path.at_frame(k)))
        .collect();
    Ok(SyntheticClip { frames })
}

/// One manifest row: which image, which class, which path, which seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_path: PathBuf,
    pub class: String,
    pub path: CropPath,
    pub seed: u64,
}

/// Deterministic clip manifest for a directory tree of per-class images.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    /// Class directories skipped because they contained no images.
    pub skipped_classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// TSV: `image_path\tclass\tcx0,cy0,s0\tcx1,cy1,s1\tseed`, with skipped
    /// classes recorded as `# skipped <class>` header lines.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| ZslError::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| ZslError::io(path, e);
        for c in &self.skipped_classes {
            writeln!(w, "# skipped {c}").map_err(io)?;
        }
        for e in &self.entries {
            writeln!(
                w,
                "{}\t{}\t{},{},{}\t{},{},{}\t{}",
                e.image_path.display(),
                e.class,
                e.path.start.cx,
                e.path.start.cy,
                e.path.start.side,
                e.path.end.cx,
                e.path.end.cy,
                e.path.end.side,
                e.seed
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| ZslError::io(path, e))?;
        let mut manifest = Manifest::default();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| ZslError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(skipped) = line.strip_prefix("# skipped ") {
                manifest.skipped_classes.push(skipped.to_string());
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(ZslError::parse(path, idx + 1, "expected 5 TSV fields"));
            }
            let crop = |s: &str| -> Result<Crop> {
                let parts: Vec<&str> = s.split(',').collect();
                if parts.len() != 3 {
                    return Err(ZslError::parse(path, idx + 1, "expected cx,cy,side"));
                }
                Ok(Crop {
                    cx: parts[0]
                        .parse()
                        .map_err(|_| ZslError::parse(path, idx + 1, "bad cx"))?,
                    cy: parts[1]
                        .parse()
                        .map_err(|_| ZslError::parse(path, idx + 1, "bad cy"))?,
                    side: parts[2]
                        .parse()
                        .map_err(|_| ZslError::parse(path, idx + 1, "bad side"))?,
                })
            };
            manifest.entries.push(ManifestEntry {
                image_path: PathBuf::from(fields[0]),
                class: fields[1].to_string(),
                path: CropPath {
                    start: crop(fields[2])?,
                    end: crop(fields[3])?,
                },
                seed: fields[4]
                    .parse()
                    .map_err(|_| ZslError::parse(path, idx + 1, "bad seed"))?,
            });
        }
        Ok(manifest)
    }
}

/// Build a clip manifest from `image_dir` (one subdirectory per class,
/// containing `.ppm` images). Each image gets its own child seed so the
/// manifest is independent of traversal order.
pub fn build_pretraining_dataset(
    image_dir: &Path,
    class_filter: Option<&[String]>,
    clips_per_image: usize,
    config: &KenBurnsConfig,
    master_seed: u64,
) -> Result<Manifest> {
    if clips_per_image == 0 {
        return Err(ZslError::InvalidConfig("clips_per_image must be >= 1".into()));
    }
    let mut class_dirs: Vec<(String, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(image_dir).map_err(|e| ZslError::io(image_dir, e))? {
        let entry = entry.map_err(|e| ZslError::io(image_dir, e))?;
        if entry.path().is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if class_filter.map_or(true, |f| f.iter().any(|c| c == &name)) {
                class_dirs.push((name, entry.path()));
            }
        }
    }
    class_dirs.sort();

    let mut manifest = Manifest::default();
    for (class, dir) in class_dirs {
        let mut images: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| ZslError::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "ppm"))
            .collect();
        images.sort();
        if images.is_empty() {
            manifest.skipped_classes.push(class);
            continue;
        }
        for image_path in images {
            let image = Image::load_ppm(&image_path)?;
            let seed = rng::derive_seed(master_seed, &image_path.to_string_lossy());
            let mut stream = rng::seeded(seed);
            for _ in 0..clips_per_image {
                let path = sample_crop_path(&image, config, &mut stream)?;
                manifest.entries.push(ManifestEntry {
                    image_path: image_path.clone(),
                    class: class.clone(),
                    path,
                    seed,
                });
            }
        }
    }
    Ok(manifest)
}
