//! The trainable semantic encoder: a single linear map from visual-feature
//! space to word-vector space, trained by regressing class embeddings with
//! Adam under a stepwise learning-rate schedule.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;

use crate::error::{Result, ZslError};
use crate::features::{sample_training_snippet, LabeledDataset};
use crate::math::{Matrix, Scalar};
use crate::rng;
use crate::wordvec::SemanticEmbedding;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ZSLW";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Linear map D_v → D_s. With `has_bias` the weight matrix carries one extra
/// input row and the forward pass appends a constant 1 to the feature.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEncoder<F> {
    weights: Matrix<F>,
    has_bias: bool,
}

impl<F: Scalar> LinearEncoder<F> {
    pub fn new(weights: Matrix<F>, has_bias: bool) -> Result<Self> {
        if !weights.all_finite() {
            return Err(ZslError::Invalid("non-finite encoder weight".into()));
        }
        if has_bias && weights.rows() < 2 {
            return Err(ZslError::Invalid("bias encoder needs >= 2 weight rows".into()));
        }
        Ok(LinearEncoder { weights, has_bias })
    }

    pub fn init<R: Rng>(
        input_dim: usize,
        output_dim: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let rows = input_dim + bias as usize;
        let bound = 1.0 / (input_dim as f64).sqrt();
        let mut w = Matrix::zeros(rows, output_dim);
        for v in w.as_mut_slice() {
            *v = F::from_f64_lossy(rng.gen_range(-bound..bound));
        }
        LinearEncoder {
            weights: w,
            has_bias: bias,
        }
    }

    /// Dimension of the visual features this encoder accepts.
    pub fn input_dim(&self) -> usize {
        self.weights.rows() - self.has_bias as usize
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn has_bias(&self) -> bool {
        self.has_bias
    }

    pub fn weights(&self) -> &Matrix<F> {
        &self.weights
    }

    /// z = yᵀ·W (plus the bias row when enabled).
    pub fn forward(&self, y: &[F]) -> Result<Vec<F>> {
        if y.len() != self.input_dim() {
            return Err(ZslError::DimensionMismatch {
                expected: self.input_dim(),
                got: y.len(),
            });
        }
        let mut z = if self.has_bias {
            self.weights.row(self.weights.rows() - 1).to_vec()
        } else {
            vec![F::zero(); self.output_dim()]
        };
        for (i, &yi) in y.iter().enumerate() {
            let row = self.weights.row(i);
            for (o, &w) in z.iter_mut().zip(row) {
                *o += yi * w;
            }
        }
        Ok(z)
    }
}

/// Sum over the batch of squared Euclidean residual norms.
pub fn batch_loss<F: Scalar>(
    enc: &LinearEncoder<F>,
    batch: &[(&[F], &SemanticEmbedding<F>)],
) -> Result<F> {
    if batch.is_empty() {
        return Err(ZslError::EmptyInput("batch".into()));
    }
    let mut loss = F::zero();
    for (y, target) in batch {
        let z = enc.forward(y)?;
        if z.len() != target.dim() {
            return Err(ZslError::DimensionMismatch {
                expected: target.dim(),
                got: z.len(),
            });
        }
        for (p, t) in z.iter().zip(target.as_slice()) {
            let d = *p - *t;
            loss += d * d;
        }
    }
    Ok(loss)
}

/// Analytic gradient of the summed squared loss: Σ 2·y·(z − target)ᵀ.
pub fn batch_gradient<F: Scalar>(
    enc: &LinearEncoder<F>,
    batch: &[(&[F], &SemanticEmbedding<F>)],
) -> Result<Matrix<F>> {
    if batch.is_empty() {
        return Err(ZslError::EmptyInput("batch".into()));
    }
    let two = F::from_f64_lossy(2.0);
    let mut grad = Matrix::zeros(enc.weights.rows(), enc.weights.cols());
    for (y, target) in batch {
        let z = enc.forward(y)?;
        if z.len() != target.dim() {
            return Err(ZslError::DimensionMismatch {
                expected: target.dim(),
                got: z.len(),
            });
        }
        let residual: Vec<F> = z
            .iter()
            .zip(target.as_slice())
            .map(|(p, t)| two * (*p - *t))
            .collect();
        for (i, &yi) in y.iter().enumerate() {
            let row = grad.row_mut(i);
            for (g, r) in row.iter_mut().zip(&residual) {
                *g += yi * *r;
            }
        }
        if enc.has_bias {
            let last = grad.rows() - 1;
            let row = grad.row_mut(last);
            for (g, r) in row.iter_mut().zip(&residual) {
                *g += *r;
            }
        }
    }
    Ok(grad)
}

/// Adam optimizer state for one weight matrix.
#[derive(Debug, Clone)]
pub struct AdamState<F> {
    first_moment: Matrix<F>,
    second_moment: Matrix<F>,
    step_count: u64,
    pub beta1: F,
    pub beta2: F,
    pub epsilon: F,
    pub learning_rate: F,
}

impl<F: Scalar> AdamState<F> {
    /// Fresh state with the canonical β1=0.9, β2=0.999, ε=1e-8.
    pub fn new(rows: usize, cols: usize, learning_rate: F) -> Self {
        AdamState {
            first_moment: Matrix::zeros(rows, cols),
            second_moment: Matrix::zeros(rows, cols),
            step_count: 0,
            beta1: F::from_f64_lossy(0.9),
            beta2: F::from_f64_lossy(0.999),
            epsilon: F::from_f64_lossy(1e-8),
            learning_rate,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One Adam update with bias correction, in place.
pub fn adam_step<F: Scalar>(
    state: &mut AdamState<F>,
    weights: &mut Matrix<F>,
    gradient: &Matrix<F>,
) -> Result<()> {
    assert_eq!(weights.rows(), gradient.rows());
    assert_eq!(weights.cols(), gradient.cols());
    for i in 0..gradient.rows() {
        for (j, g) in gradient.row(i).iter().enumerate() {
            if !g.is_finite() {
                return Err(ZslError::NonFiniteGradient { row: i, col: j });
            }
        }
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let one = F::one();
    let bc1 = one - state.beta1.powi(t);
    let bc2 = one - state.beta2.powi(t);
    let m = state.first_moment.as_mut_slice();
    let v = state.second_moment.as_mut_slice();
    let w = weights.as_mut_slice();
    for ((w, (m, v)), &g) in w
        .iter_mut()
        .zip(m.iter_mut().zip(v.iter_mut()))
        .zip(gradient.as_slice())
    {
        *m = state.beta1 * *m + (one - state.beta1) * g;
        *v = state.beta2 * *v + (one - state.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *w -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// Training hyperparameters. Defaults follow the published schedule:
/// 150 epochs, batch 22, lr 1e-3 with tenfold decay at epochs 60 and 120.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub lr_decay_epochs: Vec<usize>,
    pub lr_decay_factor: f64,
    pub bias: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 150,
            batch_size: 22,
            base_lr: 1e-3,
            lr_decay_epochs: vec![60, 120],
            lr_decay_factor: 10.0,
            bias: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(ZslError::InvalidConfig(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if self.base_lr <= 0.0 || self.lr_decay_factor <= 0.0 {
            return Err(ZslError::InvalidConfig(
                "learning rate and decay factor must be positive".into(),
            ));
        }
        if self.lr_decay_epochs.iter().any(|&e| e >= self.epochs) {
            return Err(ZslError::InvalidConfig(
                "decay epochs must be < epochs".into(),
            ));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let decays = self.lr_decay_epochs.iter().filter(|&&e| epoch >= e).count();
        self.base_lr / self.lr_decay_factor.powi(decays as i32)
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone)]
pub struct TrainHistory {
    pub epoch_mean_loss: Vec<f64>,
    pub epoch_lr: Vec<f64>,
}

/// Full training loop: per epoch shuffle videos, draw one random clip per
/// video, run Adam over batches (last partial batch kept). Deterministic
/// given the config seed.
pub fn train<F: Scalar>(
    dataset: &LabeledDataset<F>,
    targets: &[SemanticEmbedding<F>],
    config: &TrainConfig,
) -> Result<(LinearEncoder<F>, TrainHistory)> {
    config.validate()?;
    if dataset.n_videos() == 0 {
        return Err(ZslError::EmptyInput("training dataset".into()));
    }
    if targets.len() != dataset.classes().len() {
        return Err(ZslError::Invalid(format!(
            "{} classes but {} target embeddings",
            dataset.classes().len(),
            targets.len()
        )));
    }
    let d_v = dataset.feature_dim().unwrap();
    let d_s = targets[0].dim();
    if targets.iter().any(|t| t.dim() != d_s) {
        return Err(ZslError::Invalid("inconsistent target dimensions".into()));
    }

    let mut stream = rng::seeded(config.seed);
    let mut enc = LinearEncoder::init(d_v, d_s, config.bias, &mut stream);
    let mut adam = AdamState::new(
        enc.weights.rows(),
        enc.weights.cols(),
        F::from_f64_lossy(config.base_lr),
    );

    let n = dataset.n_videos();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory {
        epoch_mean_loss: Vec::with_capacity(config.epochs),
        epoch_lr: Vec::with_capacity(config.epochs),
    };

    for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch);
        adam.learning_rate = F::from_f64_lossy(lr);

        // Fisher-Yates shuffle on the shared stream
        for i in (1..n).rev() {
            let j = stream.gen_range(0..=i);
            order.swap(i, j);
        }

        let snippets: Vec<(&[F], &SemanticEmbedding<F>)> = order
            .iter()
            .map(|&vi| {
                let (video, ci) = &dataset.videos()[vi];
                (sample_training_snippet(video, &mut stream), &targets[*ci])
            })
            .collect();

        let mut epoch_loss = 0.0f64;
        for batch in snippets.chunks(config.batch_size) {
            let loss = batch_loss(&enc, batch)?;
            let grad = batch_gradient(&enc, batch)?;
            adam_step(&mut adam, &mut enc.weights, &grad)?;
            epoch_loss += loss.to_f64_lossy();
        }
        history.epoch_mean_loss.push(epoch_loss / n as f64);
        history.epoch_lr.push(lr);
    }
    Ok((enc, history))
}

/// Checkpoint: magic `ZSLW`, u32 version, u32 D_v (weight rows), u32 D_s,
/// weights as little-endian f32 row-major, then a UTF-8 `key=value` trailer
/// recording the training config.
pub fn save_checkpoint<F: Scalar>(
    path: &Path,
    enc: &LinearEncoder<F>,
    config: &TrainConfig,
) -> Result<()> {
    let file = File::create(path).map_err(|e| ZslError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| ZslError::io(path, e);
    w.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(CHECKPOINT_VERSION).map_err(io)?;
    w.write_u32::<LittleEndian>(enc.weights.rows() as u32)
        .map_err(io)?;
    w.write_u32::<LittleEndian>(enc.weights.cols() as u32)
        .map_err(io)?;
    for v in enc.weights.as_slice() {
        w.write_f32::<LittleEndian>(v.to_f32().unwrap_or(f32::NAN))
            .map_err(io)?;
    }
    let decay = config
        .lr_decay_epochs
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let trailer = format!(
        "epochs={}\nbatch_size={}\nbase_lr={}\nlr_decay_epochs={}\nlr_decay_factor={}\nbias={}\nseed={}\n",
        config.epochs,
        config.batch_size,
        config.base_lr,
        decay,
        config.lr_decay_factor,
        config.bias,
        config.seed
    );
    w.write_all(trailer.as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

pub fn load_checkpoint<F: Scalar>(path: &Path) -> Result<(LinearEncoder<F>, TrainConfig)> {
    let file = File::open(path).map_err(|e| ZslError::io(path, e))?;
    let mut r = BufReader::new(file);
    let trunc = |_| ZslError::format(path, "truncated checkpoint");

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(trunc)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(ZslError::format(path, "bad magic, not a checkpoint"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(trunc)?;
    if version != CHECKPOINT_VERSION {
        return Err(ZslError::format(path, format!("unsupported version {version}")));
    }
    let rows = r.read_u32::<LittleEndian>().map_err(trunc)? as usize;
    let cols = r.read_u32::<LittleEndian>().map_err(trunc)? as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(F::from_f32(r.read_f32::<LittleEndian>().map_err(trunc)?).unwrap());
    }
    let mut trailer = String::new();
    r.read_to_string(&mut trailer)
        .map_err(|_| ZslError::format(path, "trailer is not UTF-8"))?;
    let mut config = TrainConfig::default();
    for line in trailer.lines() {
        let Some((k, v)) = line.split_once('=') else {
            continue;
        };
        match k {
            "epochs" => config.epochs = parse_trailer(path, k, v)?,
            "batch_size" => config.batch_size = parse_trailer(path, k, v)?,
            "base_lr" => config.base_lr = parse_trailer(path, k, v)?,
            "lr_decay_factor" => config.lr_decay_factor = parse_trailer(path, k, v)?,
            "bias" => config.bias = parse_trailer(path, k, v)?,
            "seed" => config.seed = parse_trailer(path, k, v)?,
            "lr_decay_epochs" => {
                config.lr_decay_epochs = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',')
                        .map(|e| parse_trailer(path, k, e))
                        .collect::<Result<_>>()?
                };
            }
            _ => {}
        }
    }
    let enc = LinearEncoder::new(Matrix::from_vec(rows, cols, data), config.bias)?;
    Ok((enc, config))
}

fn parse_trailer<T: std::str::FromStr>(path: &Path, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| ZslError::format(path, format!("bad trailer value for {key}: '{v}'")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::ClassSet;
    use crate::features::VideoFeatures;
    use crate::wordvec::ClassName;
    use approx::assert_relative_eq;

    fn emb(v: &[f64]) -> SemanticEmbedding<f64> {
        SemanticEmbedding::new(v.to_vec()).unwrap()
    }

    fn identity_encoder(n: usize) -> LinearEncoder<f64> {
        let mut w = Matrix::zeros(n, n);
        for i in 0..n {
            w.set(i, i, 1.0);
        }
        LinearEncoder::new(w, false).unwrap()
    }

    #[test]
    fn forward_identity() {
        let enc = identity_encoder(3);
        assert_eq!(enc.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn forward_zero_weights() {
        let enc = LinearEncoder::new(Matrix::zeros(2, 3), false).unwrap();
        assert_eq!(enc.forward(&[5.0, -1.0]).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn forward_hand_case() {
        let enc = LinearEncoder::new(Matrix::from_rows(&[vec![2.0], vec![3.0]]), false).unwrap();
        assert_eq!(enc.forward(&[1.0, 1.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn forward_dim_mismatch_errors() {
        let enc = identity_encoder(3);
        assert!(enc.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn loss_zero_on_perfect_prediction() {
        let enc = identity_encoder(2);
        let t = emb(&[1.0, 2.0]);
        let y = [1.0, 2.0];
        let batch = vec![(&y[..], &t)];
        assert_eq!(batch_loss(&enc, &batch).unwrap(), 0.0);
    }

    #[test]
    fn loss_single_residual() {
        let enc = LinearEncoder::new(Matrix::zeros(1, 2), false).unwrap();
        let t = emb(&[1.0, 0.0]);
        let y = [1.0];
        let batch = vec![(&y[..], &t)];
        assert_eq!(batch_loss(&enc, &batch).unwrap(), 1.0);
    }

    #[test]
    fn loss_sums_over_batch() {
        // residuals (1,0) and (0,2) → 1 + 4 = 5
        let enc = LinearEncoder::new(Matrix::zeros(1, 2), false).unwrap();
        let t1 = emb(&[1.0, 0.0]);
        let t2 = emb(&[0.0, 2.0]);
        let y = [1.0];
        let batch = vec![(&y[..], &t1), (&y[..], &t2)];
        assert_eq!(batch_loss(&enc, &batch).unwrap(), 5.0);
    }

    #[test]
    fn loss_decomposes_over_concat() {
        let enc = LinearEncoder::new(
            Matrix::from_rows(&[vec![0.3, -0.2], vec![0.1, 0.8]]),
            false,
        )
        .unwrap();
        let t1 = emb(&[1.0, 0.5]);
        let t2 = emb(&[-0.3, 2.0]);
        let y1 = [1.0, 2.0];
        let y2 = [0.5, -1.0];
        let b1 = vec![(&y1[..], &t1)];
        let b2 = vec![(&y2[..], &t2)];
        let both = vec![(&y1[..], &t1), (&y2[..], &t2)];
        assert_relative_eq!(
            batch_loss(&enc, &both).unwrap(),
            batch_loss(&enc, &b1).unwrap() + batch_loss(&enc, &b2).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn empty_batch_errors() {
        let enc = identity_encoder(2);
        assert!(batch_loss(&enc, &[]).is_err());
        assert!(batch_gradient(&enc, &[]).is_err());
    }

    #[test]
    fn gradient_zero_on_zero_residual() {
        let enc = identity_encoder(2);
        let t = emb(&[0.5, -0.5]);
        let y = [0.5, -0.5];
        let batch = vec![(&y[..], &t)];
        let g = batch_gradient(&enc, &batch).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_scalar_case() {
        // d/dW (1 − W)² at W=0 is −2
        let enc = LinearEncoder::new(Matrix::zeros(1, 1), false).unwrap();
        let t = emb(&[1.0]);
        let y = [1.0];
        let batch = vec![(&y[..], &t)];
        let g = batch_gradient(&enc, &batch).unwrap();
        assert_eq!(g.get(0, 0), -2.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng::seeded(11);
        for _ in 0..20 {
            let d_v = r.gen_range(1..=8);
            let d_s = r.gen_range(1..=8);
            let n = r.gen_range(1..=5);
            let mut w = Matrix::zeros(d_v, d_s);
            for v in w.as_mut_slice() {
                *v = r.gen_range(-1.0..1.0);
            }
            let enc = LinearEncoder::new(w, false).unwrap();
            let ys: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d_v).map(|_| r.gen_range(-1.0..1.0)).collect())
                .collect();
            let ts: Vec<SemanticEmbedding<f64>> = (0..n)
                .map(|_| {
                    emb(&(0..d_s)
                        .map(|_| r.gen_range(-1.0..1.0) + 2.0)
                        .collect::<Vec<_>>())
                })
                .collect();
            let batch: Vec<(&[f64], &SemanticEmbedding<f64>)> =
                ys.iter().map(|y| y.as_slice()).zip(ts.iter()).collect();
            let g = batch_gradient(&enc, &batch).unwrap();
            let h = 1e-4;
            for i in 0..d_v {
                for j in 0..d_s {
                    let mut wp = enc.clone();
                    wp.weights.set(i, j, enc.weights.get(i, j) + h);
                    let mut wm = enc.clone();
                    wm.weights.set(i, j, enc.weights.get(i, j) - h);
                    let fd = (batch_loss(&wp, &batch).unwrap()
                        - batch_loss(&wm, &batch).unwrap())
                        / (2.0 * h);
                    let a = g.get(i, j);
                    let denom = a.abs().max(fd.abs()).max(1e-8);
                    assert!(
                        (a - fd).abs() / denom <= 1e-5,
                        "grad {a} vs fd {fd} at ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn adam_zero_gradient_leaves_weights() {
        let mut w = Matrix::from_rows(&[vec![1.0, -1.0]]);
        let orig = w.clone();
        let mut st = AdamState::new(1, 2, 1e-3);
        adam_step(&mut st, &mut w, &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(w, orig);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn adam_first_step_closed_form() {
        // scalar g=1, lr=1e-3: m̂ = v̂ = 1 at t=1 so Δw ≈ −lr
        let mut w = Matrix::from_rows(&[vec![0.0f64]]);
        let mut st = AdamState::new(1, 1, 1e-3);
        let g = Matrix::from_rows(&[vec![1.0f64]]);
        adam_step(&mut st, &mut w, &g).unwrap();
        assert_relative_eq!(w.get(0, 0), -1e-3, epsilon = 1e-10);
    }

    #[test]
    fn adam_rejects_non_finite_gradient() {
        let mut w = Matrix::from_rows(&[vec![0.0f64]]);
        let mut st = AdamState::new(1, 1, 1e-3);
        let g = Matrix::from_rows(&[vec![f64::NAN]]);
        assert!(adam_step(&mut st, &mut w, &g).is_err());
    }

    #[test]
    fn adam_matches_independent_oracle_on_quadratic() {
        // minimize f(w) = w² from w=1; oracle is a literal transcription of
        // the update rule, kept separate from the implementation above.
        let (beta1, beta2, eps, lr) = (0.9f64, 0.999, 1e-8, 0.05);
        let mut w_oracle = 1.0f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);

        let mut w = Matrix::from_rows(&[vec![1.0f64]]);
        let mut st = AdamState::new(1, 1, lr);

        for t in 1..=100 {
            let g = 2.0 * w_oracle;
            m = beta1 * m + (1.0 - beta1) * g;
            v = beta2 * v + (1.0 - beta2) * g * g;
            let m_hat = m / (1.0 - beta1.powi(t));
            let v_hat = v / (1.0 - beta2.powi(t));
            w_oracle -= lr * m_hat / (v_hat.sqrt() + eps);

            let g_impl = Matrix::from_rows(&[vec![2.0 * w.get(0, 0)]]);
            adam_step(&mut st, &mut w, &g_impl).unwrap();
            assert_relative_eq!(w.get(0, 0), w_oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn lr_schedule_conforms() {
        let config = TrainConfig::default();
        assert_eq!(config.lr_at(0), 1e-3);
        assert_eq!(config.lr_at(59), 1e-3);
        assert_relative_eq!(config.lr_at(60), 1e-4, epsilon = 1e-18);
        assert_relative_eq!(config.lr_at(119), 1e-4, epsilon = 1e-18);
        assert_relative_eq!(config.lr_at(120), 1e-5, epsilon = 1e-19);
        assert_relative_eq!(config.lr_at(149), 1e-5, epsilon = 1e-19);
    }

    #[test]
    fn decay_epoch_past_end_is_rejected() {
        let config = TrainConfig {
            epochs: 50,
            lr_decay_epochs: vec![60],
            ..TrainConfig::default()
        };
        assert!(config.validate().is_err());
    }

    fn tiny_dataset() -> (LabeledDataset<f64>, Vec<SemanticEmbedding<f64>>) {
        let classes = ClassSet::new(
            "c",
            vec![(ClassName::parse("jump").unwrap(), emb(&[1.0, 0.0]))],
        )
        .unwrap();
        let video =
            VideoFeatures::new("v1", Matrix::from_rows(&[vec![0.7, -0.3, 0.4]])).unwrap();
        let targets = vec![emb(&[1.0, 0.0])];
        (LabeledDataset::new(classes, vec![(video, 0)]).unwrap(), targets)
    }

    #[test]
    fn single_video_converges_to_target() {
        let (ds, targets) = tiny_dataset();
        let config = TrainConfig {
            epochs: 3000,
            batch_size: 4,
            base_lr: 0.01,
            lr_decay_epochs: vec![2000, 2600],
            seed: 3,
            ..TrainConfig::default()
        };
        let (enc, hist) = train(&ds, &targets, &config).unwrap();
        assert_eq!(hist.epoch_mean_loss.len(), config.epochs);
        let z = enc.forward(ds.videos()[0].0.clip(0)).unwrap();
        let err: f64 = z
            .iter()
            .zip(targets[0].as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-4, "residual {err}");
    }

    #[test]
    fn train_is_deterministic() {
        let (ds, targets) = tiny_dataset();
        let config = TrainConfig {
            epochs: 20,
            lr_decay_epochs: vec![],
            seed: 9,
            ..TrainConfig::default()
        };
        let (e1, h1) = train(&ds, &targets, &config).unwrap();
        let (e2, h2) = train(&ds, &targets, &config).unwrap();
        assert_eq!(e1.weights().as_slice(), e2.weights().as_slice());
        assert_eq!(h1.epoch_mean_loss, h2.epoch_mean_loss);
    }

    #[test]
    fn missing_target_rejected_before_training() {
        let (ds, _) = tiny_dataset();
        assert!(train(&ds, &[], &TrainConfig::default()).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.zslw");
        let enc = LinearEncoder::new(
            Matrix::from_rows(&[vec![0.25f64, -1.5], vec![3.0, 0.0]]),
            false,
        )
        .unwrap();
        let config = TrainConfig::default();
        save_checkpoint(&path, &enc, &config).unwrap();
        let (back, cfg): (LinearEncoder<f64>, _) = load_checkpoint(&path).unwrap();
        assert_eq!(back.weights().as_slice(), enc.weights().as_slice());
        assert_eq!(cfg, config);
    }
}
