//! A small convolutional network trained from scratch.
//!
//! Tensors are flat `Vec<f64>` in channel-major `[c][h][w]` order. The
//! convolution is a valid cross-correlation (the kernel is not flipped).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::imagemap::ImageCanvas;
use crate::seed::rng_from_seed;

/// `[channels, height, width]`.
pub type Shape = [usize; 3];

fn volume(s: Shape) -> usize {
    s[0] * s[1] * s[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    #[default]
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    /// `[out][in][kh][kw]`
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_h: kernel,
            kernel_w: kernel,
            stride,
            weights: vec![0.0; out_channels * in_channels * kernel * kernel],
            biases: vec![0.0; out_channels],
        }
    }

    pub fn from_weights(
        in_channels: usize,
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
    ) -> Result<Self> {
        let layer = Self {
            in_channels,
            out_channels,
            kernel_h,
            kernel_w,
            stride: 1,
            weights,
            biases,
        };
        layer.check_params()?;
        Ok(layer)
    }

    fn check_params(&self) -> Result<()> {
        if self.stride == 0 || self.kernel_h == 0 || self.kernel_w == 0 {
            return Err(Error::Shape("conv kernel and stride must be positive".into()));
        }
        let want = self.out_channels * self.in_channels * self.kernel_h * self.kernel_w;
        if self.weights.len() != want || self.biases.len() != self.out_channels {
            return Err(Error::Shape(format!(
                "conv expects {want} weights and {} biases, found {} and {}",
                self.out_channels,
                self.weights.len(),
                self.biases.len()
            )));
        }
        Ok(())
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let [c, h, w] = input;
        if c != self.in_channels || self.kernel_h > h || self.kernel_w > w {
            return Err(Error::Shape(format!(
                "conv {}x{}x{} kernel cannot slide over input {c}x{h}x{w}",
                self.in_channels, self.kernel_h, self.kernel_w
            )));
        }
        Ok([
            self.out_channels,
            (h - self.kernel_h) / self.stride + 1,
            (w - self.kernel_w) / self.stride + 1,
        ])
    }

    fn kernel(&self, oc: usize, ic: usize) -> &[f64] {
        let k = self.kernel_h * self.kernel_w;
        let start = (oc * self.in_channels + ic) * k;
        &self.weights[start..start + k]
    }

    /// Pre-activation output.
    fn forward(&self, x: &[f64], input: Shape) -> Vec<f64> {
        let [_, h, w] = input;
        let [oc_n, oh, ow] = self.output_shape(input).expect("checked at model build");
        let mut out = vec![0.0; oc_n * oh * ow];
        for oc in 0..oc_n {
            let plane = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
            plane.fill(self.biases[oc]);
            for ic in 0..self.in_channels {
                let src = &x[ic * h * w..(ic + 1) * h * w];
                let kern = self.kernel(oc, ic);
                for ky in 0..self.kernel_h {
                    for kx in 0..self.kernel_w {
                        let wv = kern[ky * self.kernel_w + kx];
                        for oy in 0..oh {
                            let dst = &mut plane[oy * ow..(oy + 1) * ow];
                            let row = (oy * self.stride + ky) * w + kx;
                            if self.stride == 1 {
                                for (d, s) in dst.iter_mut().zip(&src[row..row + ow]) {
                                    *d += wv * s;
                                }
                            } else {
                                for (ox, d) in dst.iter_mut().enumerate() {
                                    *d += wv * src[row + ox * self.stride];
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Accumulate parameter gradients; write the input gradient when asked.
    fn backward(
        &self,
        x: &[f64],
        input: Shape,
        grad_out: &[f64],
        grad_w: &mut [f64],
        grad_b: &mut [f64],
        mut grad_in: Option<&mut [f64]>,
    ) {
        let [_, h, w] = input;
        let [oc_n, oh, ow] = self.output_shape(input).expect("checked at model build");
        let k = self.kernel_h * self.kernel_w;
        for oc in 0..oc_n {
            let g = &grad_out[oc * oh * ow..(oc + 1) * oh * ow];
            grad_b[oc] += g.iter().sum::<f64>();
            for ic in 0..self.in_channels {
                let src = &x[ic * h * w..(ic + 1) * h * w];
                let wbase = (oc * self.in_channels + ic) * k;
                for ky in 0..self.kernel_h {
                    for kx in 0..self.kernel_w {
                        let widx = wbase + ky * self.kernel_w + kx;
                        let wv = self.weights[widx];
                        let mut acc = 0.0;
                        for oy in 0..oh {
                            let grow = &g[oy * ow..(oy + 1) * ow];
                            let row = (oy * self.stride + ky) * w + kx;
                            if self.stride == 1 {
                                acc += grow.iter().zip(&src[row..row + ow]).map(|(a, b)| a * b).sum::<f64>();
                                if let Some(gi) = grad_in.as_deref_mut() {
                                    let dst = &mut gi[ic * h * w + row..ic * h * w + row + ow];
                                    for (d, gv) in dst.iter_mut().zip(grow) {
                                        *d += wv * gv;
                                    }
                                }
                            } else {
                                for (ox, gv) in grow.iter().enumerate() {
                                    let xi = row + ox * self.stride;
                                    acc += gv * src[xi];
                                    if let Some(gi) = grad_in.as_deref_mut() {
                                        gi[ic * h * w + xi] += wv * gv;
                                    }
                                }
                            }
                        }
                        grad_w[widx] += acc;
                    }
                }
            }
        }
    }
}

/// Convolution followed by an activation.
pub fn conv_forward(x: &[f64], input: Shape, layer: &ConvLayer, activation: Activation) -> Result<(Vec<f64>, Shape)> {
    layer.check_params()?;
    let out_shape = layer.output_shape(input)?;
    if x.len() != volume(input) {
        return Err(Error::Shape(format!(
            "input has {} values but shape {input:?} needs {}",
            x.len(),
            volume(input)
        )));
    }
    let mut y = layer.forward(x, input);
    if activation == Activation::Relu {
        y.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    Ok((y, out_shape))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolLayer {
    pub window_h: usize,
    pub window_w: usize,
    pub stride: usize,
}

impl PoolLayer {
    pub fn square(window: usize) -> Self {
        Self {
            window_h: window,
            window_w: window,
            stride: window,
        }
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let [c, h, w] = input;
        if self.window_h == 0 || self.window_w == 0 || self.stride == 0 {
            return Err(Error::Shape("pool window and stride must be positive".into()));
        }
        if self.window_h > h || self.window_w > w {
            return Err(Error::Shape(format!(
                "pool window {}x{} larger than input {h}x{w}",
                self.window_h, self.window_w
            )));
        }
        if !(h - self.window_h).is_multiple_of(self.stride) || !(w - self.window_w).is_multiple_of(self.stride) {
            return Err(Error::Shape(format!(
                "pool window {}x{} with stride {} does not tile input {h}x{w}",
                self.window_h, self.window_w, self.stride
            )));
        }
        Ok([
            c,
            (h - self.window_h) / self.stride + 1,
            (w - self.window_w) / self.stride + 1,
        ])
    }

    /// Max over each region; the second vector holds the flat input index of
    /// each maximum (first occurrence wins).
    fn forward(&self, x: &[f64], input: Shape) -> (Vec<f64>, Vec<usize>) {
        let [c, h, w] = input;
        let [_, oh, ow] = self.output_shape(input).expect("checked at model build");
        let mut out = Vec::with_capacity(c * oh * ow);
        let mut arg = Vec::with_capacity(c * oh * ow);
        for ch in 0..c {
            let base = ch * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_i = base + oy * self.stride * w + ox * self.stride;
                    for py in 0..self.window_h {
                        for px in 0..self.window_w {
                            let i = base + (oy * self.stride + py) * w + ox * self.stride + px;
                            if x[i] > best {
                                best = x[i];
                                best_i = i;
                            }
                        }
                    }
                    out.push(best);
                    arg.push(best_i);
                }
            }
        }
        (out, arg)
    }
}

/// Max pooling; returns pooled maps, their shape and the argmax indices.
pub fn maxpool_forward(x: &[f64], input: Shape, layer: &PoolLayer) -> Result<(Vec<f64>, Shape, Vec<usize>)> {
    let out_shape = layer.output_shape(input)?;
    if x.len() != volume(input) {
        return Err(Error::Shape(format!(
            "input has {} values but shape {input:?} needs {}",
            x.len(),
            volume(input)
        )));
    }
    let (y, arg) = layer.forward(x, input);
    Ok((y, out_shape, arg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// `[out][in]`
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    fn backward(
        &self,
        x: &[f64],
        grad_out: &[f64],
        grad_w: &mut [f64],
        grad_b: &mut [f64],
        grad_in: Option<&mut [f64]>,
    ) {
        for (o, &g) in grad_out.iter().enumerate() {
            grad_b[o] += g;
            if g == 0.0 {
                continue;
            }
            let gw = &mut grad_w[o * self.inputs..(o + 1) * self.inputs];
            for (d, v) in gw.iter_mut().zip(x) {
                *d += g * v;
            }
        }
        if let Some(gi) = grad_in {
            for (o, &g) in grad_out.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                for (d, w) in gi.iter_mut().zip(row) {
                    *d += g * w;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Conv(ConvLayer),
    Relu,
    MaxPool(PoolLayer),
    Flatten,
    Dense(DenseLayer),
}

/// Layer stack ending in logits; softmax is applied on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    input_shape: Shape,
    layers: Vec<Layer>,
    class_count: usize,
}

/// Hyperparameters of the default network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    pub conv1_filters: usize,
    pub conv1_kernel: usize,
    pub conv2_filters: usize,
    pub conv2_kernel: usize,
    pub pool: usize,
    pub hidden: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            conv1_filters: 8,
            conv1_kernel: 5,
            conv2_filters: 16,
            conv2_kernel: 3,
            pool: 2,
            hidden: 64,
        }
    }
}

impl CnnModel {
    pub fn new(input_shape: Shape, layers: Vec<Layer>, class_count: usize) -> Result<Self> {
        let model = Self {
            input_shape,
            layers,
            class_count,
        };
        model.validate()?;
        Ok(model)
    }

    /// Check that layer shapes compose and end in `class_count` logits.
    pub fn validate(&self) -> Result<()> {
        if self.class_count < 1 {
            return Err(Error::Shape("model needs at least one class".into()));
        }
        let shapes = self.layer_shapes()?;
        let last = *shapes.last().expect("input shape always present");
        if volume(last) != self.class_count || last[1] != 1 || last[2] != 1 {
            return Err(Error::Shape(format!(
                "final layer yields shape {last:?}, expected {} logits",
                self.class_count
            )));
        }
        for layer in &self.layers {
            let finite = match layer {
                Layer::Conv(c) => c.weights.iter().chain(&c.biases).all(|v| v.is_finite()),
                Layer::Dense(d) => d.weights.iter().chain(&d.biases).all(|v| v.is_finite()),
                _ => true,
            };
            if !finite {
                return Err(invalid("model parameters must be finite"));
            }
        }
        Ok(())
    }

    /// Shape entering each layer, plus the final output shape.
    fn layer_shapes(&self) -> Result<Vec<Shape>> {
        let mut shapes = vec![self.input_shape];
        let mut cur = self.input_shape;
        for layer in &self.layers {
            cur = match layer {
                Layer::Conv(c) => {
                    c.check_params()?;
                    c.output_shape(cur)?
                }
                Layer::Relu => cur,
                Layer::MaxPool(p) => p.output_shape(cur)?,
                Layer::Flatten => [volume(cur), 1, 1],
                Layer::Dense(d) => {
                    if volume(cur) != d.inputs || cur[1] != 1 || cur[2] != 1 {
                        return Err(Error::Shape(format!(
                            "dense layer expects {} flat inputs, got shape {cur:?}",
                            d.inputs
                        )));
                    }
                    if d.weights.len() != d.inputs * d.outputs || d.biases.len() != d.outputs {
                        return Err(Error::Shape("dense parameter count mismatch".into()));
                    }
                    [d.outputs, 1, 1]
                }
            };
            shapes.push(cur);
        }
        Ok(shapes)
    }

    /// conv → ReLU → pool → conv → ReLU → pool → flatten → dense → ReLU →
    /// dense, with zero biases and fan-in scaled Gaussian weights.
    pub fn desk_scale(image_side: usize, class_count: usize, arch: &Architecture, seed: u64) -> Result<Self> {
        let conv1 = ConvLayer::zeros(1, arch.conv1_filters, arch.conv1_kernel, 1);
        let pool = PoolLayer::square(arch.pool);
        let s1 = pool.output_shape(conv1.output_shape([1, image_side, image_side])?)?;
        let conv2 = ConvLayer::zeros(arch.conv1_filters, arch.conv2_filters, arch.conv2_kernel, 1);
        let s2 = pool.output_shape(conv2.output_shape(s1)?)?;
        let layers = vec![
            Layer::Conv(conv1),
            Layer::Relu,
            Layer::MaxPool(pool),
            Layer::Conv(conv2),
            Layer::Relu,
            Layer::MaxPool(pool),
            Layer::Flatten,
            Layer::Dense(DenseLayer::zeros(volume(s2), arch.hidden)),
            Layer::Relu,
            Layer::Dense(DenseLayer::zeros(arch.hidden, class_count)),
        ];
        let mut model = Self::new([1, image_side, image_side], layers, class_count)?;
        model.init_weights(seed);
        Ok(model)
    }

    /// Redraw weights from `N(0, 2/fan_in)` (last layer `N(0, 1/fan_in)`)
    /// and zero the biases.
    pub fn init_weights(&mut self, seed: u64) {
        let mut rng = rng_from_seed(seed);
        let last_dense = self.layers.iter().rposition(|l| matches!(l, Layer::Dense(_)));
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let (weights, biases, fan_in) = match layer {
                Layer::Conv(c) => (&mut c.weights, &mut c.biases, c.in_channels * c.kernel_h * c.kernel_w),
                Layer::Dense(d) => (&mut d.weights, &mut d.biases, d.inputs),
                _ => continue,
            };
            let gain = if Some(i) == last_dense { 1.0 } else { 2.0 };
            let std = (gain / fan_in as f64).sqrt();
            for w in weights.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *w = std * z;
            }
            biases.fill(0.0);
        }
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Weight and bias slices of every parametric layer, weights first.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push(c.weights.as_slice());
                    out.push(c.biases.as_slice());
                }
                Layer::Dense(d) => {
                    out.push(d.weights.as_slice());
                    out.push(d.biases.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push(c.weights.as_mut_slice());
                    out.push(c.biases.as_mut_slice());
                }
                Layer::Dense(d) => {
                    out.push(d.weights.as_mut_slice());
                    out.push(d.biases.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients(self.param_slices().iter().map(|s| vec![0.0; s.len()]).collect())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != volume(self.input_shape) {
            return Err(Error::Shape(format!(
                "model expects input {:?} ({} values), got {} values",
                self.input_shape,
                volume(self.input_shape),
                x.len()
            )));
        }
        Ok(())
    }

    pub fn image_tensor(&self, image: &ImageCanvas) -> Result<Vec<f64>> {
        let [c, h, w] = self.input_shape;
        if image.height() != h || image.width() != w {
            return Err(Error::Shape(format!(
                "model expects {w}x{h} images, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        let plane = image.to_unit_floats();
        Ok((0..c).flat_map(|_| plane.iter().copied()).collect())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut shape = self.input_shape;
        let mut acts = vec![x.to_vec()];
        let mut shapes = vec![shape];
        let mut argmax = Vec::new();
        for layer in &self.layers {
            let cur = acts.last().expect("non-empty");
            let (next, next_shape) = match layer {
                Layer::Conv(c) => {
                    let s = c.output_shape(shape).expect("validated");
                    (c.forward(cur, shape), s)
                }
                Layer::Relu => (cur.iter().map(|v| v.max(0.0)).collect(), shape),
                Layer::MaxPool(p) => {
                    let s = p.output_shape(shape).expect("validated");
                    let (y, arg) = p.forward(cur, shape);
                    argmax.push(arg);
                    (y, s)
                }
                Layer::Flatten => (cur.clone(), [volume(shape), 1, 1]),
                Layer::Dense(d) => (d.forward(cur), [d.outputs, 1, 1]),
            };
            acts.push(next);
            shapes.push(next_shape);
            shape = next_shape;
        }
        Trace { acts, shapes, argmax }
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x).acts.pop().expect("non-empty"))
    }

    /// Class probabilities for a `[0,1]`-scaled input tensor.
    pub fn forward_tensor(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn forward(&self, image: &ImageCanvas) -> Result<Vec<f64>> {
        self.forward_tensor(&self.image_tensor(image)?)
    }

    /// Add ∂(cross-entropy)/∂θ for one sample into `grads`; returns the loss
    /// and the forward probabilities.
    pub fn accumulate_gradients(&self, x: &[f64], label: usize, grads: &mut Gradients) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        if label >= self.class_count {
            return Err(invalid(format!(
                "label {label} out of range for {} classes",
                self.class_count
            )));
        }
        let trace = self.trace(x);
        let logits = trace.acts.last().expect("non-empty");
        let probs = softmax(logits);
        let loss = cross_entropy(logits, label);

        let mut grad: Vec<f64> = probs.clone();
        grad[label] -= 1.0;

        let mut slot = grads.0.len();
        let mut pool_idx = trace.argmax.len();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.acts[li];
            let in_shape = trace.shapes[li];
            let need_input_grad = li > 0;
            grad = match layer {
                Layer::Conv(c) => {
                    slot -= 2;
                    let (gw, gb) = grads.pair_mut(slot);
                    let mut gi = vec![0.0; input.len()];
                    c.backward(
                        input,
                        in_shape,
                        &grad,
                        gw,
                        gb,
                        need_input_grad.then_some(gi.as_mut_slice()),
                    );
                    gi
                }
                Layer::Dense(d) => {
                    slot -= 2;
                    let (gw, gb) = grads.pair_mut(slot);
                    let mut gi = vec![0.0; input.len()];
                    d.backward(input, &grad, gw, gb, need_input_grad.then_some(gi.as_mut_slice()));
                    gi
                }
                Layer::Relu => {
                    let out = &trace.acts[li + 1];
                    grad.iter()
                        .zip(out)
                        .map(|(g, y)| if *y > 0.0 { *g } else { 0.0 })
                        .collect()
                }
                Layer::MaxPool(_) => {
                    pool_idx -= 1;
                    let mut gi = vec![0.0; input.len()];
                    for (g, &i) in grad.iter().zip(&trace.argmax[pool_idx]) {
                        gi[i] += g;
                    }
                    gi
                }
                Layer::Flatten => grad,
            };
        }
        Ok((loss, probs))
    }

    /// Gradient set and loss for one image.
    pub fn backward(&self, image: &ImageCanvas, label: usize) -> Result<(Gradients, f64)> {
        let x = self.image_tensor(image)?;
        self.backward_tensor(&x, label)
    }

    pub fn backward_tensor(&self, x: &[f64], label: usize) -> Result<(Gradients, f64)> {
        let mut grads = self.zero_grads();
        let (loss, _) = self.accumulate_gradients(x, label, &mut grads)?;
        Ok((grads, loss))
    }

    /// Cross-entropy of one sample, for finite-difference checks.
    pub fn loss(&self, x: &[f64], label: usize) -> Result<f64> {
        Ok(cross_entropy(&self.logits(x)?, label))
    }

    pub fn predict(&self, image: &ImageCanvas) -> Result<(usize, Vec<f64>)> {
        let probs = self.forward(image)?;
        Ok((argmax(&probs), probs))
    }
}

struct Trace {
    acts: Vec<Vec<f64>>,
    shapes: Vec<Shape>,
    argmax: Vec<Vec<usize>>,
}

/// Gradients in [`CnnModel::param_slices`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    fn pair_mut(&mut self, slot: usize) -> (&mut [f64], &mut [f64]) {
        let (a, b) = self.0.split_at_mut(slot + 1);
        (&mut a[slot], &mut b[0])
    }

    pub fn scale(&mut self, factor: f64) {
        self.0.iter_mut().flatten().for_each(|g| *g *= factor);
    }

    pub fn clear(&mut self) {
        self.0.iter_mut().for_each(|g| g.fill(0.0));
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter().flatten()
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[label]`, via log-sum-exp.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let ce = lse - logits[label];
    // clamp rounding below zero but let NaN through so divergence is seen
    if ce < 0.0 {
        0.0
    } else {
        ce
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 30,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(invalid("learning_rate must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid("momentum must be in [0,1)"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub loss: Vec<f64>,
    /// Training accuracy in percent, measured on the forward passes of each
    /// epoch.
    pub accuracy: Vec<f64>,
}

/// Mini-batch SGD with momentum over pre-scaled input tensors.
///
/// Each epoch reshuffles with an RNG seeded once from `cfg.seed`; each
/// update uses the batch-mean gradient:
/// `v ← momentum·v − lr·g`, `θ ← θ + v`.
pub fn train_tensors(
    mut model: CnnModel,
    data: &[(Vec<f64>, usize)],
    cfg: &TrainConfig,
) -> Result<(CnnModel, LearningCurve)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(invalid("training set is empty"));
    }
    for (x, label) in data {
        model.check_input(x)?;
        if *label >= model.class_count {
            return Err(invalid(format!(
                "label {label} out of range for {} classes",
                model.class_count
            )));
        }
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut velocity = model.zero_grads();
    let mut grads = model.zero_grads();
    let mut curve = LearningCurve::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            for &i in batch {
                let (x, label) = &data[i];
                let (loss, probs) = model.accumulate_gradients(x, *label, &mut grads)?;
                loss_sum += loss;
                if argmax(&probs) == *label {
                    correct += 1;
                }
            }
            grads.scale(1.0 / batch.len() as f64);
            for ((params, v), g) in model.param_slices_mut().into_iter().zip(&mut velocity.0).zip(&grads.0) {
                for ((p, vi), gi) in params.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vi = cfg.momentum * *vi - cfg.learning_rate * gi;
                    *p += *vi;
                }
            }
        }
        let mean_loss = loss_sum / data.len() as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Training {
                epoch: epoch + 1,
                message: format!("loss diverged to {mean_loss}"),
            });
        }
        let acc = 100.0 * correct as f64 / data.len() as f64;
        log::debug!("epoch {}: loss {mean_loss:.5} acc {acc:.2}%", epoch + 1);
        curve.loss.push(mean_loss);
        curve.accuracy.push(acc);
    }
    Ok((model, curve))
}

/// Train on labeled images; intensities are scaled to `[0,1]`.
pub fn train(model: CnnModel, images: &[(ImageCanvas, usize)], cfg: &TrainConfig) -> Result<(CnnModel, LearningCurve)> {
    if images.is_empty() {
        return Err(invalid("training set is empty"));
    }
    let data = images
        .iter()
        .map(|(img, label)| Ok((model.image_tensor(img)?, *label)))
        .collect::<Result<Vec<_>>>()?;
    train_tensors(model, &data, cfg)
}

/// Predicted class and probability vector; ties go to the lowest class.
pub fn predict(model: &CnnModel, image: &ImageCanvas) -> Result<(usize, Vec<f64>)> {
    model.predict(image)
}
