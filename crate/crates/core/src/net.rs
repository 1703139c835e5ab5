//! Fully-connected network mapping a fingerprint to (T1, T2).
//!
//! Weights are stored row-major per layer (`outputs x inputs`). The network
//! works in an encoded output space `[0, 1]^2`; [`OutputScaler`] converts to
//! and from milliseconds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::epg::TissueParams;
use crate::error::{Error, Result};
use crate::image::{ImageStack, Mask, ParamMap};
use crate::linalg::{self, axpy, dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => linalg::tanh(x),
            Activation::Sigmoid => 1.0 / (1.0 + libm::exp(-x)),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    fn slope_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "sigmoid" => Some(Activation::Sigmoid),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputNormalization {
    None,
    /// Divide each input by its Euclidean norm (zero inputs pass through).
    UnitNorm,
}

impl InputNormalization {
    pub fn name(self) -> &'static str {
        match self {
            InputNormalization::None => "none",
            InputNormalization::UnitNorm => "unit_norm",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "none" => Some(InputNormalization::None),
            "unit_norm" => Some(InputNormalization::UnitNorm),
            _ => None,
        }
    }

    pub(crate) fn apply(self, x: &mut [f64]) {
        if self == InputNormalization::UnitNorm {
            let n = norm(x);
            if n > 0.0 {
                x.iter_mut().for_each(|v| *v /= n);
            }
        }
    }
}

/// Maps encoded outputs in `[0, 1]` to milliseconds by linear scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputScaler {
    pub t1_max_ms: f64,
    pub t2_max_ms: f64,
}

impl OutputScaler {
    pub fn new(t1_max_ms: f64, t2_max_ms: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(t1_max_ms) && ok(t2_max_ms)) {
            return Err(Error::InvalidConfig(format!(
                "scaler maxima must be positive, got ({t1_max_ms}, {t2_max_ms})"
            )));
        }
        Ok(OutputScaler { t1_max_ms, t2_max_ms })
    }

    pub fn decode(&self, out: [f64; 2]) -> TissueParams {
        TissueParams::new(out[0] * self.t1_max_ms, out[1] * self.t2_max_ms)
    }

    pub fn encode(&self, p: TissueParams) -> Result<[f64; 2]> {
        let in_range = |v: f64, max: f64| (0.0..=max).contains(&v);
        if !(in_range(p.t1_ms, self.t1_max_ms) && in_range(p.t2_ms, self.t2_max_ms)) {
            return Err(Error::TargetOutOfRange { t1_ms: p.t1_ms, t2_ms: p.t2_ms });
        }
        Ok([p.t1_ms / self.t1_max_ms, p.t2_ms / self.t2_max_ms])
    }
}

impl Default for OutputScaler {
    /// Grid maxima: 5000 ms for T1, 2000 ms for T2.
    fn default() -> Self {
        OutputScaler { t1_max_ms: 5000.0, t2_max_ms: 2000.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs], activation }
    }

    /// Uniform Glorot initialization, zero biases.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = libm::sqrt(6.0 / (inputs + outputs) as f64);
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect();
        Layer { inputs, outputs, weights, biases: vec![0.0; outputs], activation }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn forward_into(&self, x: &[f64], y: &mut [f64]) {
        for (o, yo) in y.iter_mut().enumerate() {
            *yo = self.activation.apply(dot(self.row(o), x) + self.biases[o]);
        }
    }

    /// Weights regrouped for [`block_affine`]: tiles of [`ROWS`] outputs,
    /// each stored input-major (`tile[k * ROWS + r]`), zero-padded past the
    /// last output.
    fn packed(&self) -> Vec<f64> {
        let tiles = self.outputs.div_ceil(ROWS);
        let mut p = vec![0.0; tiles * ROWS * self.inputs];
        for o in 0..self.outputs {
            let tile = &mut p[(o / ROWS) * ROWS * self.inputs..];
            for (k, w) in self.row(o).iter().enumerate() {
                tile[k * ROWS + o % ROWS] = *w;
            }
        }
        p
    }

    /// Same map on a block of [`LANES`] samples stored input-major
    /// (`x[k * LANES + s]`), writing `y` output-major. Each sum runs over
    /// the inputs in order, so every sample sees the same arithmetic.
    fn forward_block(&self, packed: &[f64], x: &[f64], y: &mut [f64]) {
        block_affine(packed, &self.biases, self.inputs, self.outputs, x, y);
        let y = &mut y[..self.outputs * LANES];
        match self.activation {
            Activation::Tanh => y.iter_mut().for_each(|v| *v = linalg::tanh(*v)),
            Activation::Sigmoid => y.iter_mut().for_each(|v| *v = Activation::Sigmoid.apply(*v)),
            Activation::Linear => {}
        }
    }
}

/// `y[o * LANES + s] = sum_k w[o][k] * x[k * LANES + s] + b[o]`, with `w`
/// laid out by [`Layer::packed`].
#[inline(never)]
fn block_affine(packed: &[f64], b: &[f64], ni: usize, no: usize, x: &[f64], y: &mut [f64]) {
    let x = &x[..ni * LANES];
    for (t, tile) in packed.chunks_exact(ni * ROWS).enumerate() {
        let mut acc = [[0.0f64; LANES]; ROWS];
        for (xk, wk) in x.chunks_exact(LANES).zip(tile.chunks_exact(ROWS)) {
            let xk: &[f64; LANES] = xk.try_into().unwrap();
            for r in 0..ROWS {
                for s in 0..LANES {
                    acc[r][s] += wk[r] * xk[s];
                }
            }
        }
        let o = t * ROWS;
        for (r, acc_r) in acc.iter().enumerate().take(no - o) {
            for s in 0..LANES {
                y[(o + r) * LANES + s] = acc_r[s] + b[o + r];
            }
        }
    }
}

/// Samples per inference block.
const LANES: usize = 8;
/// Output rows per register tile.
const ROWS: usize = 8;

/// Hidden width of the default topology.
pub const HIDDEN_WIDTH: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    scaler: OutputScaler,
    input_normalization: InputNormalization,
}

impl Mlp {
    /// Checks that layer shapes chain and that the network ends in two
    /// outputs.
    pub fn new(layers: Vec<Layer>, scaler: OutputScaler, input_normalization: InputNormalization) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.inputs == 0 || l.outputs == 0 {
                return Err(Error::InvalidConfig(format!("layer {i} has a zero dimension")));
            }
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::InvalidConfig(format!("layer {i} arrays do not match its shape")));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].outputs != w[1].inputs {
                return Err(Error::InvalidConfig(format!(
                    "layer {i} has {} outputs but layer {} takes {} inputs",
                    w[0].outputs,
                    i + 1,
                    w[1].inputs
                )));
            }
        }
        if layers.last().map(|l| l.outputs) != Some(2) {
            return Err(Error::InvalidConfig("network must end in 2 outputs (T1, T2)".into()));
        }
        Ok(Mlp { layers, scaler, input_normalization })
    }

    /// Glorot-initialized network with the given widths (`sizes[0]` is the
    /// input length, the last entry must be 2). Hidden layers use tanh, the
    /// output layer sigmoid.
    pub fn init(
        sizes: &[usize],
        scaler: OutputScaler,
        input_normalization: InputNormalization,
        seed: u64,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidConfig("need at least input and output sizes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last { Activation::Sigmoid } else { Activation::Tanh };
                Layer::glorot(w[0], w[1], act, &mut rng)
            })
            .collect();
        Mlp::new(layers, scaler, input_normalization)
    }

    /// `frames -> 300 -> 300 -> 2`.
    pub fn drone(
        frames: usize,
        scaler: OutputScaler,
        input_normalization: InputNormalization,
        seed: u64,
    ) -> Result<Self> {
        Mlp::init(&[frames, HIDDEN_WIDTH, HIDDEN_WIDTH, 2], scaler, input_normalization, seed)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn scaler(&self) -> OutputScaler {
        self.scaler
    }

    pub fn input_normalization(&self) -> InputNormalization {
        self.input_normalization
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    /// Total number of weights and biases.
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), actual: len });
        }
        Ok(())
    }

    /// Encoded network output for one fingerprint.
    pub fn forward_encoded(&self, fingerprint: &[f64]) -> Result<[f64; 2]> {
        self.check_input(fingerprint.len())?;
        let mut scratch = BlockScratch::new(self);
        Ok(scratch.run(self, fingerprint)[0])
    }

    /// Reconstructs (T1, T2) in milliseconds.
    pub fn forward(&self, fingerprint: &[f64]) -> Result<TissueParams> {
        Ok(self.scaler.decode(self.forward_encoded(fingerprint)?))
    }

    /// Forward over `n` row-major fingerprints, bit-identical to calling
    /// [`Mlp::forward`] on each row.
    pub fn forward_batch(&self, inputs: &[f64]) -> Result<Vec<TissueParams>> {
        let dim = self.input_dim();
        if !inputs.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: inputs.len() % dim });
        }
        let mut out = Vec::with_capacity(inputs.len() / dim);
        let mut scratch = BlockScratch::new(self);
        for block in inputs.chunks(dim * LANES) {
            let enc = scratch.run(self, block);
            out.extend(enc[..block.len() / dim].iter().map(|e| self.scaler.decode(*e)));
        }
        Ok(out)
    }
}

/// Activations for one block, input-major.
struct BlockScratch {
    packed: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: Vec<f64>,
    x: Vec<f64>,
}

impl BlockScratch {
    fn new(net: &Mlp) -> Self {
        let width = net.layers.iter().map(|l| l.outputs.max(l.inputs)).max().unwrap_or(0);
        BlockScratch {
            packed: net.layers.iter().map(Layer::packed).collect(),
            a: vec![0.0; width * LANES],
            b: vec![0.0; width * LANES],
            x: vec![0.0; net.input_dim()],
        }
    }

    /// Runs up to [`LANES`] row-major samples. Unused lanes repeat the last
    /// sample and their outputs are ignored by callers.
    fn run(&mut self, net: &Mlp, rows: &[f64]) -> [[f64; 2]; LANES] {
        let dim = net.input_dim();
        let count = rows.len() / dim;
        for s in 0..LANES {
            let src = s.min(count - 1);
            self.x.copy_from_slice(&rows[src * dim..(src + 1) * dim]);
            net.input_normalization.apply(&mut self.x);
            for (k, v) in self.x.iter().enumerate() {
                self.a[k * LANES + s] = *v;
            }
        }
        for (l, p) in net.layers.iter().zip(&self.packed) {
            l.forward_block(p, &self.a, &mut self.b);
            core::mem::swap(&mut self.a, &mut self.b);
        }
        let mut out = [[0.0; 2]; LANES];
        for (s, o) in out.iter_mut().enumerate() {
            *o = [self.a[s], self.a[LANES + s]];
        }
        out
    }
}

/// Eq.-1 style mean squared error in encoded space, averaged over samples
/// and both output components.
pub fn loss(predicted: &[TissueParams], target: &[TissueParams], scaler: &OutputScaler) -> Result<f64> {
    if predicted.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), actual: predicted.len() });
    }
    if predicted.is_empty() {
        return Err(Error::InvalidConfig("loss needs at least one sample".into()));
    }
    let mut sum = 0.0;
    for (p, t) in predicted.iter().zip(target) {
        let d1 = (p.t1_ms - t.t1_ms) / scaler.t1_max_ms;
        let d2 = (p.t2_ms - t.t2_ms) / scaler.t2_max_ms;
        sum += d1 * d1 + d2 * d2;
    }
    Ok(sum / (2 * predicted.len()) as f64)
}

/// Per-layer gradient buffers with the same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().chain(self.biases.iter_mut()).for_each(|g| g.fill(0.0));
    }
}

/// Reusable activation buffers for backpropagation.
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn new(net: &Mlp) -> Self {
        let mut acts = vec![vec![0.0; net.input_dim()]];
        acts.extend(net.layers.iter().map(|l| vec![0.0; l.outputs]));
        let deltas = net.layers.iter().map(|l| vec![0.0; l.outputs]).collect();
        Workspace { acts, deltas }
    }
}

impl Mlp {
    /// Adds the gradient of `weight * sum_j (y_j - t_j)^2` for one sample to
    /// `grads` and returns the unweighted squared error. `x` is the raw
    /// fingerprint; input normalization is applied here.
    pub fn accumulate_sample(
        &self,
        x: &[f64],
        target: [f64; 2],
        weight: f64,
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> Result<f64> {
        self.check_input(x.len())?;
        ws.acts[0].copy_from_slice(x);
        self.input_normalization.apply(&mut ws.acts[0]);
        for (i, l) in self.layers.iter().enumerate() {
            let (prev, next) = ws.acts.split_at_mut(i + 1);
            l.forward_into(&prev[i], &mut next[0]);
        }
        let depth = self.layers.len();
        let out = &ws.acts[depth];
        let mut sq = 0.0;
        {
            let last = &self.layers[depth - 1];
            let delta = &mut ws.deltas[depth - 1];
            for j in 0..2 {
                let e = out[j] - target[j];
                sq += e * e;
                delta[j] = 2.0 * weight * e * last.activation.slope_at_output(out[j]);
            }
        }
        for i in (0..depth).rev() {
            let l = &self.layers[i];
            let a_prev = &ws.acts[i];
            let (lower, upper) = ws.deltas.split_at_mut(i);
            let delta = &upper[0];
            let gw = &mut grads.weights[i];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, a_prev, &mut gw[o * l.inputs..(o + 1) * l.inputs]);
                }
            }
            axpy(1.0, delta, &mut grads.biases[i]);
            if i > 0 {
                let below = &mut lower[i - 1];
                below.fill(0.0);
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, l.row(o), below);
                    }
                }
                let act = self.layers[i - 1].activation;
                for (b, &a) in below.iter_mut().zip(&ws.acts[i]) {
                    *b *= act.slope_at_output(a);
                }
            }
        }
        Ok(sq)
    }

    /// Loss (mean over samples and both outputs, encoded space) and its
    /// gradient for a batch of row-major inputs with encoded targets.
    pub fn loss_and_gradients(&self, inputs: &[f64], targets: &[[f64; 2]]) -> Result<(f64, Gradients)> {
        let dim = self.input_dim();
        if inputs.len() != targets.len() * dim {
            return Err(Error::DimensionMismatch { expected: targets.len() * dim, actual: inputs.len() });
        }
        if targets.is_empty() {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        let weight = 1.0 / (2 * targets.len()) as f64;
        let mut ws = Workspace::new(self);
        let mut grads = Gradients::zeros_like(self);
        let mut sum = 0.0;
        for (x, t) in inputs.chunks_exact(dim).zip(targets) {
            sum += self.accumulate_sample(x, *t, weight, &mut ws, &mut grads)?;
        }
        Ok((sum * weight, grads))
    }
}

impl Mlp {
    /// Runs the network on every masked-in voxel. Masked-out voxels are
    /// zero in both maps.
    pub fn reconstruct_map(&self, stack: &ImageStack, mask: &Mask) -> Result<ParamMap> {
        stack.check_mask(mask)?;
        if stack.frames() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), actual: stack.frames() });
        }
        let idx: Vec<usize> = mask.indices().collect();
        let mut gathered = Vec::with_capacity(idx.len() * stack.frames());
        for &i in &idx {
            gathered.extend_from_slice(stack.voxel(i));
        }
        let params = self.forward_batch(&gathered)?;
        let mut map = ParamMap::empty(mask.clone());
        for (&i, p) in idx.iter().zip(params) {
            map.set(i, p);
        }
        Ok(map)
    }
}
