//! Precomputed per-clip visual features: binary store I/O, the training-time
//! random-snippet sampler, and inference-time multi-snippet pooling.
//!
//! Feature store layout (little-endian): magic `ZSLF`, u32 version, u32 D_v,
//! u32 video count; per video a u16 id length, the UTF-8 id, u32 T_clips and
//! T_clips·D_v f32 values row-major. Version field: low 16 bits are the
//! format version (1), bit 16 marks a raw-clip payload where each "clip row"
//! is one rendered 112·112·3 frame.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;

use crate::curation::ClassSet;
use crate::error::{Result, ZslError};
use crate::math::{mean_rows, Matrix, Scalar};

pub const FEATURE_MAGIC: &[u8; 4] = b"ZSLF";
pub const FEATURE_VERSION: u32 = 1;
/// Header flag marking a raw-clip payload (rendered frames, not CNN features).
pub const RAW_CLIP_FLAG: u32 = 1 << 16;

/// Per-clip features of one video: T_clips rows of dimension D_v.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoFeatures<F> {
    video_id: String,
    clips: Matrix<F>,
}

impl<F: Scalar> VideoFeatures<F> {
    pub fn new(video_id: impl Into<String>, clips: Matrix<F>) -> Result<Self> {
        if clips.rows() == 0 {
            return Err(ZslError::EmptyInput("video with zero clips".into()));
        }
        if !clips.all_finite() {
            return Err(ZslError::Invalid("non-finite feature entry".into()));
        }
        Ok(VideoFeatures {
            video_id: video_id.into(),
            clips,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn n_clips(&self) -> usize {
        self.clips.rows()
    }

    pub fn dim(&self) -> usize {
        self.clips.cols()
    }

    pub fn clip(&self, i: usize) -> &[F] {
        self.clips.row(i)
    }

    pub fn clips(&self) -> &Matrix<F> {
        &self.clips
    }
}

/// An in-memory feature store: the videos of one dataset, no labels yet.
#[derive(Debug, Clone)]
pub struct FeatureStore<F> {
    dim: usize,
    raw_clips: bool,
    videos: Vec<VideoFeatures<F>>,
}

impl<F: Scalar> FeatureStore<F> {
    pub fn new(dim: usize, videos: Vec<VideoFeatures<F>>) -> Result<Self> {
        Self::with_flags(dim, videos, false)
    }

    pub fn with_flags(dim: usize, videos: Vec<VideoFeatures<F>>, raw_clips: bool) -> Result<Self> {
        let mut ids = HashSet::new();
        for v in &videos {
            if v.dim() != dim {
                return Err(ZslError::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
            if !ids.insert(v.video_id().to_string()) {
                return Err(ZslError::Invalid(format!(
                    "duplicate video id '{}'",
                    v.video_id()
                )));
            }
        }
        Ok(FeatureStore {
            dim,
            raw_clips,
            videos,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn raw_clips(&self) -> bool {
        self.raw_clips
    }

    pub fn videos(&self) -> &[VideoFeatures<F>] {
        &self.videos
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| ZslError::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| ZslError::io(path, e);
        w.write_all(FEATURE_MAGIC).map_err(io)?;
        let version = FEATURE_VERSION | if self.raw_clips { RAW_CLIP_FLAG } else { 0 };
        w.write_u32::<LittleEndian>(version).map_err(io)?;
        w.write_u32::<LittleEndian>(self.dim as u32).map_err(io)?;
        w.write_u32::<LittleEndian>(self.videos.len() as u32)
            .map_err(io)?;
        for v in &self.videos {
            let id = v.video_id().as_bytes();
            if id.len() > u16::MAX as usize {
                return Err(ZslError::Invalid(format!(
                    "video id too long: {}",
                    v.video_id()
                )));
            }
            w.write_u16::<LittleEndian>(id.len() as u16).map_err(io)?;
            w.write_all(id).map_err(io)?;
            w.write_u32::<LittleEndian>(v.n_clips() as u32).map_err(io)?;
            for val in v.clips.as_slice() {
                w.write_f32::<LittleEndian>(val.to_f32().unwrap_or(f32::NAN))
                    .map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| ZslError::io(path, e))?;
        let mut r = BufReader::new(file);
        let trunc = |_| ZslError::format(path, "truncated feature store");

        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(trunc)?;
        if &magic != FEATURE_MAGIC {
            return Err(ZslError::format(path, "bad magic, not a feature store"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(trunc)?;
        if version & 0xffff != FEATURE_VERSION {
            return Err(ZslError::format(
                path,
                format!("unsupported version {}", version & 0xffff),
            ));
        }
        let raw_clips = version & RAW_CLIP_FLAG != 0;
        let dim = r.read_u32::<LittleEndian>().map_err(trunc)? as usize;
        let count = r.read_u32::<LittleEndian>().map_err(trunc)? as usize;
        let mut videos = Vec::with_capacity(count);
        for i in 0..count {
            let id_len = r.read_u16::<LittleEndian>().map_err(trunc)? as usize;
            let mut id = vec![0u8; id_len];
            r.read_exact(&mut id).map_err(trunc)?;
            let id = String::from_utf8(id)
                .map_err(|_| ZslError::format(path, format!("video {i}: id is not UTF-8")))?;
            let t_clips = r.read_u32::<LittleEndian>().map_err(trunc)? as usize;
            let mut data = Vec::with_capacity(t_clips * dim);
            for _ in 0..t_clips * dim {
                let v = r.read_f32::<LittleEndian>().map_err(trunc)?;
                data.push(F::from_f32(v).unwrap());
            }
            let clips = Matrix::from_vec(t_clips, dim, data);
            videos.push(
                VideoFeatures::new(id.clone(), clips)
                    .map_err(|e| ZslError::format(path, format!("video '{id}': {e}")))?,
            );
        }
        // must be at EOF
        let mut tail = [0u8; 1];
        if r.read(&mut tail).map_err(|e| ZslError::io(path, e))? != 0 {
            return Err(ZslError::format(path, "trailing bytes after last video"));
        }
        FeatureStore::with_flags(dim, videos, raw_clips)
    }
}

/// Videos joined with class labels and the class set's embeddings.
#[derive(Debug, Clone)]
pub struct LabeledDataset<F> {
    classes: ClassSet<F>,
    videos: Vec<(VideoFeatures<F>, usize)>,
}

impl<F: Scalar> LabeledDataset<F> {
    pub fn new(classes: ClassSet<F>, videos: Vec<(VideoFeatures<F>, usize)>) -> Result<Self> {
        let mut ids = HashSet::new();
        for (v, ci) in &videos {
            if *ci >= classes.len() {
                return Err(ZslError::Invalid(format!(
                    "video '{}' references class index {ci} out of {}",
                    v.video_id(),
                    classes.len()
                )));
            }
            if !ids.insert(v.video_id().to_string()) {
                return Err(ZslError::Invalid(format!(
                    "duplicate video id '{}'",
                    v.video_id()
                )));
            }
        }
        Ok(LabeledDataset { classes, videos })
    }

    pub fn classes(&self) -> &ClassSet<F> {
        &self.classes
    }

    pub fn videos(&self) -> &[(VideoFeatures<F>, usize)] {
        &self.videos
    }

    pub fn n_videos(&self) -> usize {
        self.videos.len()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.videos.first().map(|(v, _)| v.dim())
    }

    pub fn class_video_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes.len()];
        for (_, ci) in &self.videos {
            counts[*ci] += 1;
        }
        counts
    }
}

/// Label file: UTF-8 lines `<video_id>\t<class_name>`.
pub fn load_labels(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(|e| ZslError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ZslError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, class) = line
            .split_once('\t')
            .ok_or_else(|| ZslError::parse(path, idx + 1, "expected '<video_id>\\t<class>'"))?;
        out.push((id.to_string(), class.trim().to_string()));
    }
    Ok(out)
}

/// Load a feature store plus a label file and resolve labels against the
/// given class set. Every video must have a label; every label must name a
/// known video-id-free class.
pub fn load_feature_store<F: Scalar>(
    features_path: &Path,
    labels_path: &Path,
    classes: ClassSet<F>,
) -> Result<LabeledDataset<F>> {
    let store = FeatureStore::read(features_path)?;
    let labels = load_labels(labels_path)?;
    let by_id: HashMap<&str, &str> = labels.iter().map(|(i, c)| (i.as_str(), c.as_str())).collect();
    let known_ids: HashSet<&str> = store.videos().iter().map(|v| v.video_id()).collect();
    for (id, _) in &labels {
        if !known_ids.contains(id.as_str()) {
            return Err(ZslError::format(
                labels_path,
                format!("label references unknown video '{id}'"),
            ));
        }
    }
    let mut videos = Vec::with_capacity(store.videos().len());
    for v in store.videos() {
        let class = by_id.get(v.video_id()).ok_or_else(|| {
            ZslError::format(
                labels_path,
                format!("video '{}' has no label", v.video_id()),
            )
        })?;
        let ci = classes.index_of(class).ok_or_else(|| {
            ZslError::format(
                labels_path,
                format!("label '{class}' not in the class set"),
            )
        })?;
        videos.push((v.clone(), ci));
    }
    LabeledDataset::new(classes, videos)
}

/// One uniformly random clip row; the paper's "snippet at a random time t"
/// at the precomputed-feature level.
pub fn sample_training_snippet<'a, F: Scalar, R: Rng>(
    video: &'a VideoFeatures<F>,
    rng: &mut R,
) -> &'a [F] {
    let idx = rng.gen_range(0..video.n_clips());
    video.clip(idx)
}

/// Indices for `t_eval` linearly spaced snippets over `[0, n_clips - 1]`,
/// endpoint-inclusive; `t_eval = 1` selects index 0. Indices may repeat when
/// `t_eval > n_clips`.
pub fn linspace_indices(n_clips: usize, t_eval: usize) -> Vec<usize> {
    assert!(n_clips >= 1 && t_eval >= 1);
    if t_eval == 1 {
        return vec![0];
    }
    (0..t_eval)
        .map(|k| {
            let pos = k as f64 * (n_clips - 1) as f64 / (t_eval - 1) as f64;
            pos.round() as usize
        })
        .collect()
}

/// Average of `t_eval` linearly spaced clip rows.
pub fn pool_inference_features<F: Scalar>(video: &VideoFeatures<F>, t_eval: usize) -> Vec<F> {
    let rows: Vec<&[F]> = linspace_indices(video.n_clips(), t_eval)
        .into_iter()
        .map(|i| video.clip(i))
        .collect();
    mean_rows(&rows)
}
