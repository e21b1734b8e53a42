//! Stacked LSTM with a softmax head: batched forward pass and
//! backpropagation through time.
//!
//! Gate rows are ordered input, forget, cell, output. Sequences in a batch
//! may have different lengths; a finished sequence keeps its last hidden and
//! cell state, so the head always reads each sequence's final state.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{FeatureVector, FEATURES};
use super::{ClassifierError, PassingBelief};

/// Hidden state size of the bundled model.
pub const DEFAULT_HIDDEN: usize = 128;
pub const LAYERS: usize = 2;

/// Weights of one recurrent layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    /// `4H x input`
    pub w_ih: Array2<f64>,
    /// `4H x H`
    pub w_hh: Array2<f64>,
    /// `4H`
    pub b: Array1<f64>,
}

impl LstmLayer {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_ih: Array2::zeros((4 * hidden, input)),
            w_hh: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn input(&self) -> usize {
        self.w_ih.ncols()
    }
}

/// Two LSTM layers, the affine head and per-feature normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub layers: Vec<LstmLayer>,
    /// `2 x H`; row 0 is the left logit.
    pub fc_w: Array2<f64>,
    pub fc_b: Array1<f64>,
    pub norm_mean: Array1<f64>,
    pub norm_std: Array1<f64>,
}

/// Gradients with the same shapes as the trainable parts of [`ModelWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LstmLayer>,
    pub fc_w: Array2<f64>,
    pub fc_b: Array1<f64>,
}

impl ModelWeights {
    /// All-zero weights with identity normalization.
    pub fn zeros(hidden: usize) -> Self {
        Self {
            layers: vec![LstmLayer::zeros(FEATURES, hidden), LstmLayer::zeros(hidden, hidden)],
            fc_w: Array2::zeros((2, hidden)),
            fc_b: Array1::zeros(2),
            norm_mean: Array1::zeros(FEATURES),
            norm_std: Array1::ones(FEATURES),
        }
    }

    /// Uniform initialization in `+-1/sqrt(H)`.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut w = Self::zeros(hidden);
        let k = 1.0 / (hidden as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in w.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.random_range(-k..k);
            }
        }
        w
    }

    pub fn hidden(&self) -> usize {
        self.fc_w.ncols()
    }

    /// Trainable tensors as flat slices, in a fixed order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.push(l.w_ih.as_slice_mut().unwrap());
            out.push(l.w_hh.as_slice_mut().unwrap());
            out.push(l.b.as_slice_mut().unwrap());
        }
        out.push(self.fc_w.as_slice_mut().unwrap());
        out.push(self.fc_b.as_slice_mut().unwrap());
        out
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.push(l.w_ih.as_slice().unwrap());
            out.push(l.w_hh.as_slice().unwrap());
            out.push(l.b.as_slice().unwrap());
        }
        out.push(self.fc_w.as_slice().unwrap());
        out.push(self.fc_b.as_slice().unwrap());
        out
    }

    /// Checks every shape against the hidden size and that entries are finite.
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let h = self.hidden();
        let bad = |m: String| Err(ClassifierError::DimensionMismatch(m));
        if self.layers.len() != LAYERS {
            return bad(format!("expected {LAYERS} layers, found {}", self.layers.len()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            let input = if i == 0 { FEATURES } else { h };
            if l.w_ih.dim() != (4 * h, input) || l.w_hh.dim() != (4 * h, h) || l.b.len() != 4 * h {
                return bad(format!("layer {i} has inconsistent shapes"));
            }
        }
        if self.fc_w.dim() != (2, h) || self.fc_b.len() != 2 {
            return bad("head must be 2 x hidden".into());
        }
        if self.norm_mean.len() != FEATURES || self.norm_std.len() != FEATURES {
            return bad(format!("normalization needs {FEATURES} entries"));
        }
        if self.norm_std.iter().any(|s| !(*s > 0.0)) {
            return bad("normalization std must be positive".into());
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(ClassifierError::CorruptFile("non-finite weight".into()));
        }
        Ok(())
    }

    /// Normalized `T` steps of a batch: `out[t]` is `B x FEATURES`.
    pub(crate) fn batch_inputs(&self, seqs: &[&[FeatureVector]]) -> (Vec<Array2<f64>>, Vec<usize>) {
        let t_max = seqs.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut xs = vec![Array2::zeros((seqs.len(), FEATURES)); t_max];
        for (b, seq) in seqs.iter().enumerate() {
            for (t, f) in seq.iter().enumerate() {
                for k in 0..FEATURES {
                    xs[t][[b, k]] = (f[k] - self.norm_mean[k]) / self.norm_std[k];
                }
            }
        }
        (xs, seqs.iter().map(|s| s.len()).collect())
    }
}

impl Gradients {
    pub fn zeros_like(w: &ModelWeights) -> Self {
        Self {
            layers: w
                .layers
                .iter()
                .map(|l| LstmLayer::zeros(l.input(), l.hidden()))
                .collect(),
            fc_w: Array2::zeros(w.fc_w.dim()),
            fc_b: Array1::zeros(2),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.push(l.w_ih.as_slice().unwrap());
            out.push(l.w_hh.as_slice().unwrap());
            out.push(l.b.as_slice().unwrap());
        }
        out.push(self.fc_w.as_slice().unwrap());
        out.push(self.fc_b.as_slice().unwrap());
        out
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    /// Activated gates `[i f g o]`, `B x 4H`.
    gates: Array2<f64>,
    tanh_c: Array2<f64>,
}

/// Intermediate values of a batched forward pass, kept for backprop.
pub struct ForwardTrace {
    layers: Vec<Vec<StepCache>>,
    lens: Vec<usize>,
    h_final: Array2<f64>,
    pub logits: Array2<f64>,
    /// `B x 2` softmax outputs.
    pub probs: Array2<f64>,
}

/// Runs the batch through the network. `xs[t]` holds normalized inputs for
/// step `t`; row `b` is ignored once `t >= lens[b]`.
pub(crate) fn forward_batch(w: &ModelWeights, xs: &[Array2<f64>], lens: &[usize]) -> ForwardTrace {
    let bsz = lens.len();
    let h = w.hidden();
    let mut inputs: Vec<Array2<f64>> = xs.to_vec();
    let mut caches = Vec::with_capacity(w.layers.len());
    for layer in &w.layers {
        let mut hs = Array2::<f64>::zeros((bsz, h));
        let mut cs = Array2::<f64>::zeros((bsz, h));
        let mut steps = Vec::with_capacity(inputs.len());
        let mut outputs = Vec::with_capacity(inputs.len());
        for (t, x) in inputs.iter().enumerate() {
            let mut z = x.dot(&layer.w_ih.t()) + hs.dot(&layer.w_hh.t());
            z += &layer.b;
            let mut h_new = hs.clone();
            let mut c_new = cs.clone();
            let mut tanh_c = Array2::<f64>::zeros((bsz, h));
            for b in 0..bsz {
                if t >= lens[b] {
                    continue;
                }
                let mut zs = z.row_mut(b);
                for j in 0..h {
                    let i = sigmoid(zs[j]);
                    let f = sigmoid(zs[h + j]);
                    let g = zs[2 * h + j].tanh();
                    let o = sigmoid(zs[3 * h + j]);
                    zs[j] = i;
                    zs[h + j] = f;
                    zs[2 * h + j] = g;
                    zs[3 * h + j] = o;
                    let c = f * cs[[b, j]] + i * g;
                    let tc = c.tanh();
                    c_new[[b, j]] = c;
                    tanh_c[[b, j]] = tc;
                    h_new[[b, j]] = o * tc;
                }
            }
            steps.push(StepCache {
                x: x.clone(),
                h_prev: hs,
                c_prev: cs,
                gates: z,
                tanh_c,
            });
            outputs.push(h_new.clone());
            hs = h_new;
            cs = c_new;
        }
        caches.push(steps);
        inputs = outputs;
    }
    let h_final = inputs.last().cloned().unwrap_or_else(|| Array2::zeros((bsz, h)));
    let mut logits = h_final.dot(&w.fc_w.t());
    logits += &w.fc_b;
    let mut probs = Array2::zeros((bsz, 2));
    for b in 0..bsz {
        let (l0, l1) = (logits[[b, 0]], logits[[b, 1]]);
        let m = l0.max(l1);
        let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
        probs[[b, 0]] = e0 / (e0 + e1);
        probs[[b, 1]] = e1 / (e0 + e1);
    }
    ForwardTrace {
        layers: caches,
        lens: lens.to_vec(),
        h_final,
        logits,
        probs,
    }
}

/// Gradients of a loss given its derivative w.r.t. the head logits (`B x 2`).
pub(crate) fn backward(w: &ModelWeights, trace: &ForwardTrace, dlogits: ArrayView2<f64>) -> Gradients {
    let mut g = Gradients::zeros_like(w);
    let h = w.hidden();
    let bsz = trace.lens.len();
    g.fc_w = dlogits.t().dot(&trace.h_final);
    g.fc_b = dlogits.sum_axis(Axis(0));
    let t_max = trace.layers.first().map_or(0, |l| l.len());

    // Gradient arriving at each layer's output h_t from the layer above.
    let mut from_above: Vec<Array2<f64>> = vec![Array2::zeros((bsz, h)); t_max];
    let mut dh_next = dlogits.dot(&w.fc_w);
    for (li, layer) in w.layers.iter().enumerate().rev() {
        let steps = &trace.layers[li];
        let gl = &mut g.layers[li];
        let mut dc_next = Array2::<f64>::zeros((bsz, h));
        let mut dx_all: Vec<Array2<f64>> = Vec::with_capacity(t_max);
        for t in (0..t_max).rev() {
            let st = &steps[t];
            let mut dh = dh_next;
            dh += &from_above[t];
            let mut dz = Array2::<f64>::zeros((bsz, 4 * h));
            let mut dc_prev = dc_next.clone();
            for b in 0..bsz {
                if t >= trace.lens[b] {
                    // Frozen state: gradient flows straight through.
                    continue;
                }
                let gs = st.gates.row(b);
                for j in 0..h {
                    let (i, f, gg, o) = (gs[j], gs[h + j], gs[2 * h + j], gs[3 * h + j]);
                    let tc = st.tanh_c[[b, j]];
                    let dhj = dh[[b, j]];
                    let dc = dc_next[[b, j]] + dhj * o * (1.0 - tc * tc);
                    dz[[b, j]] = dc * gg * i * (1.0 - i);
                    dz[[b, h + j]] = dc * st.c_prev[[b, j]] * f * (1.0 - f);
                    dz[[b, 2 * h + j]] = dc * i * (1.0 - gg * gg);
                    dz[[b, 3 * h + j]] = dhj * tc * o * (1.0 - o);
                    dc_prev[[b, j]] = dc * f;
                }
            }
            gl.w_ih += &dz.t().dot(&st.x);
            gl.w_hh += &dz.t().dot(&st.h_prev);
            gl.b += &dz.sum_axis(Axis(0));
            let mut dh_prev = dz.dot(&layer.w_hh);
            for b in 0..bsz {
                if t >= trace.lens[b] {
                    dh_prev.row_mut(b).assign(&dh.row(b));
                }
            }
            dx_all.push(dz.dot(&layer.w_ih));
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        dx_all.reverse();
        from_above = dx_all;
        dh_next = Array2::zeros((bsz, h));
    }
    g
}

/// Belief for one feature sequence.
pub fn lstm_forward(w: &ModelWeights, seq: &[FeatureVector]) -> Result<PassingBelief, ClassifierError> {
    if seq.is_empty() {
        return Err(ClassifierError::EmptyWindow);
    }
    if w.norm_mean.len() != FEATURES || w.layers.first().map(|l| l.input()) != Some(FEATURES) {
        return Err(ClassifierError::DimensionMismatch(format!(
            "model does not take {FEATURES} features"
        )));
    }
    let (xs, lens) = w.batch_inputs(&[seq]);
    let trace = forward_batch(w, &xs, &lens);
    Ok(PassingBelief {
        p_l: trace.probs[[0, 0]],
        p_r: trace.probs[[0, 1]],
    })
}

/// Beliefs for several sequences in one batched pass.
pub fn lstm_forward_batch(w: &ModelWeights, seqs: &[&[FeatureVector]]) -> Result<Vec<PassingBelief>, ClassifierError> {
    if seqs.iter().any(|s| s.is_empty()) {
        return Err(ClassifierError::EmptyWindow);
    }
    if seqs.is_empty() {
        return Ok(Vec::new());
    }
    if w.norm_mean.len() != FEATURES || w.layers.first().map(|l| l.input()) != Some(FEATURES) {
        return Err(ClassifierError::DimensionMismatch(format!(
            "model does not take {FEATURES} features"
        )));
    }
    let (xs, lens) = w.batch_inputs(seqs);
    let trace = forward_batch(w, &xs, &lens);
    Ok((0..seqs.len())
        .map(|b| PassingBelief {
            p_l: trace.probs[[b, 0]],
            p_r: trace.probs[[b, 1]],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_uniform() {
        let w = ModelWeights::zeros(8);
        let seq = [[1.0, 2.0, 3.0, 0.0, 1.0, 0.5, 0.5]; 4];
        let b = lstm_forward(&w, &seq).unwrap();
        assert_eq!(b.p_l, 0.5);
        assert_eq!(b.p_r, 0.5);
    }

    #[test]
    fn outputs_sum_to_one() {
        let w = ModelWeights::init(16, 3);
        for n in 1..12 {
            let seq: Vec<FeatureVector> = (0..n)
                .map(|k| {
                    let a = k as f64;
                    [a, -a, a * 1.4, 0.3, 0.95, 0.6, 0.8]
                })
                .collect();
            let b = lstm_forward(&w, &seq).unwrap();
            assert!((b.p_l + b.p_r - 1.0).abs() < 1e-9);
            assert!(b.p_l > 0.0 && b.p_l < 1.0);
        }
        assert!(lstm_forward(&w, &[]).is_err());
    }

    /// Scalar oracle for a hidden-size-2 network over one step.
    #[test]
    fn tiny_network_matches_hand_rolled() {
        let mut w = ModelWeights::init(2, 11);
        w.norm_mean = Array1::from(vec![0.1, -0.2, 1.0, 0.0, 0.0, 0.0, 0.0]);
        w.norm_std = Array1::from(vec![2.0, 1.0, 0.5, 1.0, 1.0, 1.0, 3.0]);
        let x = [0.7, -1.1, 2.0, 0.2, -0.4, 0.9, 0.1];
        let got = lstm_forward(&w, &[x]).unwrap();

        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let xn: Vec<f64> = (0..7).map(|k| (x[k] - w.norm_mean[k]) / w.norm_std[k]).collect();
        let mut input = xn;
        for l in &w.layers {
            let mut hnew = vec![0.0; 2];
            for j in 0..2 {
                let pre = |gate: usize| {
                    let r = gate * 2 + j;
                    let mut s = l.b[r];
                    for (k, v) in input.iter().enumerate() {
                        s += l.w_ih[[r, k]] * v;
                    }
                    s // h_prev and c_prev are zero
                };
                let i = sig(pre(0));
                let g = pre(2).tanh();
                let o = sig(pre(3));
                let c = i * g;
                hnew[j] = o * c.tanh();
            }
            input = hnew;
        }
        let l0 = w.fc_b[0] + w.fc_w[[0, 0]] * input[0] + w.fc_w[[0, 1]] * input[1];
        let l1 = w.fc_b[1] + w.fc_w[[1, 0]] * input[0] + w.fc_w[[1, 1]] * input[1];
        let p_l = l0.exp() / (l0.exp() + l1.exp());
        assert!((got.p_l - p_l).abs() < 1e-15, "{} vs {}", got.p_l, p_l);
    }

    #[test]
    fn batch_matches_single() {
        let w = ModelWeights::init(6, 5);
        let a: Vec<FeatureVector> = (0..5).map(|k| [k as f64, 1.0, 2.0, 0.0, 1.0, 0.0, 1.0]).collect();
        let b: Vec<FeatureVector> = (0..2).map(|k| [0.5, k as f64, 1.0, 1.0, 0.0, 1.0, 0.0]).collect();
        let (xs, lens) = w.batch_inputs(&[&a, &b]);
        let tr = forward_batch(&w, &xs, &lens);
        let pa = lstm_forward(&w, &a).unwrap();
        let pb = lstm_forward(&w, &b).unwrap();
        assert!((tr.probs[[0, 0]] - pa.p_l).abs() < 1e-14);
        assert!((tr.probs[[1, 0]] - pb.p_l).abs() < 1e-14);
    }
}
