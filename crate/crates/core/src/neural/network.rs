//! Convolutional encoders and an MLP decoder with hand-written backprop.
//!
//! Each task row of `d_m` (and of `d_j`) is a one-channel sequence along the
//! machine (job) axis. A stack of kernel-3 "same" convolutions with ReLU maps
//! it to `filters` channels; both encodings are flattened, concatenated and
//! decoded by fully connected layers. All parameters live in one flat vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::features::{FeatureTensors, Shape};

const KERNEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// `tasks x machines` assignment logits.
    AssignmentLogits,
    /// One start time per task, in units of the normalization scale.
    StartTimes,
    /// Logits followed by start times, for the one-stage baseline.
    Joint,
}

impl Head {
    pub fn output_len(self, shape: Shape) -> usize {
        let logits = shape.tasks * shape.machines;
        match self {
            Head::AssignmentLogits => logits,
            Head::StartTimes => shape.tasks,
            Head::Joint => logits + shape.tasks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub shape: Shape,
    pub head: Head,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub filters: usize,
    pub hidden: usize,
    pub dropout: f64,
}

impl NetworkConfig {
    pub fn new(shape: Shape, head: Head) -> Self {
        Self {
            shape,
            head,
            encoder_layers: 2,
            decoder_layers: 2,
            filters: 8,
            hidden: 64,
            dropout: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.shape;
        if s.tasks == 0 || s.machines == 0 || s.jobs == 0 {
            return Err(Error::InvalidArgument("network shape must be nonzero".into()));
        }
        if !(2..=3).contains(&self.encoder_layers) || !(2..=3).contains(&self.decoder_layers) {
            return Err(Error::InvalidArgument(format!(
                "encoder and decoder depth must be 2 or 3, got {} and {}",
                self.encoder_layers, self.decoder_layers
            )));
        }
        if self.filters == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument("filters and hidden width must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn output_len(&self) -> usize {
        self.head.output_len(self.shape)
    }
}

#[derive(Debug, Clone, Copy)]
struct Conv {
    w: usize,
    b: usize,
    cin: usize,
    cout: usize,
}

#[derive(Debug, Clone, Copy)]
struct Linear {
    w: usize,
    b: usize,
    nin: usize,
    nout: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    enc_m: Vec<Conv>,
    enc_j: Vec<Conv>,
    dec: Vec<Linear>,
    total: usize,
}

impl Layout {
    fn new(c: &NetworkConfig) -> Self {
        let mut off = 0;
        let conv_stack = |off: &mut usize| -> Vec<Conv> {
            (0..c.encoder_layers)
                .map(|l| {
                    let cin = if l == 0 { 1 } else { c.filters };
                    let w = *off;
                    let b = w + c.filters * cin * KERNEL;
                    *off = b + c.filters;
                    Conv {
                        w,
                        b,
                        cin,
                        cout: c.filters,
                    }
                })
                .collect()
        };
        let enc_m = conv_stack(&mut off);
        let enc_j = conv_stack(&mut off);
        let s = c.shape;
        let mut dims = vec![s.tasks * c.filters * (s.machines + s.jobs)];
        dims.extend(std::iter::repeat_n(c.hidden, c.decoder_layers - 1));
        dims.push(c.output_len());
        let dec = dims
            .windows(2)
            .map(|d| {
                let w = off;
                let b = w + d[0] * d[1];
                off = b + d[1];
                Linear {
                    w,
                    b,
                    nin: d[0],
                    nout: d[1],
                }
            })
            .collect();
        Self {
            enc_m,
            enc_j,
            dec,
            total: off,
        }
    }
}

/// Forward-pass intermediates needed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct Cache {
    /// Per encoder layer: its input and its pre-activation.
    enc_m: Vec<(Vec<f64>, Vec<f64>)>,
    enc_j: Vec<(Vec<f64>, Vec<f64>)>,
    /// Per decoder layer: its input; hidden layers also keep pre-activation
    /// and dropout multipliers.
    dec_in: Vec<Vec<f64>>,
    dec_pre: Vec<Vec<f64>>,
    dec_drop: Vec<Option<Vec<f64>>>,
}

impl Cache {
    /// Smallest |pre-activation| at any ReLU; gradient checks avoid points
    /// where this is near zero.
    pub fn min_abs_preactivation(&self) -> f64 {
        self.enc_m
            .iter()
            .chain(&self.enc_j)
            .map(|(_, z)| z)
            .chain(&self.dec_pre)
            .flat_map(|z| z.iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

pub enum Mode<'r> {
    Eval,
    /// Dropout on, masks drawn from the given generator.
    Train(&'r mut ChaCha8Rng),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    params: Vec<f64>,
}

impl Network {
    /// He-uniform weights, zero biases.
    pub fn new(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |start: usize, len: usize, fan_in: usize| {
            let bound = (6.0 / fan_in as f64).sqrt();
            for p in &mut params[start..start + len] {
                *p = rng.random_range(-bound..bound);
            }
        };
        for c in layout.enc_m.iter().chain(&layout.enc_j) {
            fill(c.w, c.cout * c.cin * KERNEL, c.cin * KERNEL);
        }
        for l in &layout.dec {
            fill(l.w, l.nin * l.nout, l.nin);
        }
        Ok(Self { config, params })
    }

    pub fn from_params(config: NetworkConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let expected = Layout::new(&config).total;
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: params.len(),
            });
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn forward(&self, x: &FeatureTensors, mode: Mode) -> Result<Vec<f64>> {
        self.forward_cached(x, mode).map(|(y, _)| y)
    }

    pub fn forward_cached(&self, x: &FeatureTensors, mut mode: Mode) -> Result<(Vec<f64>, Cache)> {
        let s = self.config.shape;
        if x.shape != s {
            return Err(Error::InvalidArgument(format!(
                "features are {}x{}x{}, network expects {}x{}x{}",
                x.shape.tasks, x.shape.machines, x.shape.jobs, s.tasks, s.machines, s.jobs
            )));
        }
        let layout = Layout::new(&self.config);
        let p = &self.params;
        let (h_m, enc_m) = encode(p, &layout.enc_m, &x.d_m, s.tasks, s.machines);
        let (h_j, enc_j) = encode(p, &layout.enc_j, &x.d_j, s.tasks, s.jobs);
        let mut a = h_m;
        a.extend(h_j);

        let last = layout.dec.len() - 1;
        let mut dec_in = Vec::new();
        let mut dec_pre = Vec::new();
        let mut dec_drop = Vec::new();
        for (k, l) in layout.dec.iter().enumerate() {
            let mut z = p[l.b..l.b + l.nout].to_vec();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &p[l.w + o * l.nin..l.w + (o + 1) * l.nin];
                *zo += row.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>();
            }
            dec_in.push(std::mem::take(&mut a));
            if k == last {
                a = z;
                break;
            }
            let mut h: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
            let drop = match &mut mode {
                Mode::Train(rng) if self.config.dropout > 0.0 => {
                    let keep = 1.0 - self.config.dropout;
                    let m: Vec<f64> = (0..h.len())
                        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    h.iter_mut().zip(&m).for_each(|(v, s)| *v *= s);
                    Some(m)
                }
                _ => None,
            };
            dec_pre.push(z);
            dec_drop.push(drop);
            a = h;
        }
        Ok((
            a,
            Cache {
                enc_m,
                enc_j,
                dec_in,
                dec_pre,
                dec_drop,
            },
        ))
    }

    /// Adds the gradient of `grad_out . output` with respect to the
    /// parameters into `grads`.
    pub fn backward(&self, cache: &Cache, grad_out: &[f64], grads: &mut [f64]) {
        let layout = Layout::new(&self.config);
        let p = &self.params;
        let s = self.config.shape;
        let mut g = grad_out.to_vec();
        for (k, l) in layout.dec.iter().enumerate().rev() {
            if k < layout.dec.len() - 1 {
                if let Some(m) = &cache.dec_drop[k] {
                    g.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
                }
                g.iter_mut().zip(&cache.dec_pre[k]).for_each(|(v, z)| {
                    if *z <= 0.0 {
                        *v = 0.0
                    }
                });
            }
            let input = &cache.dec_in[k];
            let mut gin = vec![0.0; l.nin];
            for (o, &go) in g.iter().enumerate() {
                grads[l.b + o] += go;
                if go == 0.0 {
                    continue;
                }
                let w = &p[l.w + o * l.nin..l.w + (o + 1) * l.nin];
                let gw = &mut grads[l.w + o * l.nin..l.w + (o + 1) * l.nin];
                for i in 0..l.nin {
                    gw[i] += go * input[i];
                    gin[i] += go * w[i];
                }
            }
            g = gin;
        }
        let split = s.tasks * self.config.filters * s.machines;
        let (g_m, g_j) = g.split_at(split);
        encode_backward(p, &layout.enc_m, &cache.enc_m, g_m, s.tasks, s.machines, grads);
        encode_backward(p, &layout.enc_j, &cache.enc_j, g_j, s.tasks, s.jobs, grads);
    }
}

type EncCache = Vec<(Vec<f64>, Vec<f64>)>;

fn encode(p: &[f64], layers: &[Conv], input: &[f64], rows: usize, len: usize) -> (Vec<f64>, EncCache) {
    let mut x = input.to_vec();
    let mut cache = Vec::with_capacity(layers.len());
    for c in layers {
        let z = conv_forward(p, c, &x, rows, len);
        let a = z.iter().map(|v| v.max(0.0)).collect();
        cache.push((x, z));
        x = a;
    }
    (x, cache)
}

/// `x` is `rows x cin x len`; returns `rows x cout x len`.
fn conv_forward(p: &[f64], c: &Conv, x: &[f64], rows: usize, len: usize) -> Vec<f64> {
    let mut z = vec![0.0; rows * c.cout * len];
    for r in 0..rows {
        for o in 0..c.cout {
            let out = &mut z[(r * c.cout + o) * len..(r * c.cout + o + 1) * len];
            out.fill(p[c.b + o]);
            for i in 0..c.cin {
                let xi = &x[(r * c.cin + i) * len..(r * c.cin + i + 1) * len];
                for k in 0..KERNEL {
                    let w = p[c.w + (o * c.cin + i) * KERNEL + k];
                    for (pos, v) in out.iter_mut().enumerate() {
                        if let Some(q) = (pos + k).checked_sub(1).filter(|&q| q < len) {
                            *v += w * xi[q];
                        }
                    }
                }
            }
        }
    }
    z
}

fn encode_backward(
    p: &[f64],
    layers: &[Conv],
    cache: &EncCache,
    grad_out: &[f64],
    rows: usize,
    len: usize,
    grads: &mut [f64],
) {
    let mut g = grad_out.to_vec();
    for (l, c) in layers.iter().enumerate().rev() {
        let (x, z) = &cache[l];
        g.iter_mut().zip(z).for_each(|(v, z)| {
            if *z <= 0.0 {
                *v = 0.0
            }
        });
        let mut gx = if l > 0 { vec![0.0; x.len()] } else { Vec::new() };
        for r in 0..rows {
            for o in 0..c.cout {
                let go = &g[(r * c.cout + o) * len..(r * c.cout + o + 1) * len];
                grads[c.b + o] += go.iter().sum::<f64>();
                for i in 0..c.cin {
                    let base = (r * c.cin + i) * len;
                    for k in 0..KERNEL {
                        let wi = c.w + (o * c.cin + i) * KERNEL + k;
                        let w = p[wi];
                        let mut gw = 0.0;
                        for (pos, &gv) in go.iter().enumerate() {
                            if let Some(q) = (pos + k).checked_sub(1).filter(|&q| q < len) {
                                gw += gv * x[base + q];
                                if l > 0 {
                                    gx[base + q] += gv * w;
                                }
                            }
                        }
                        grads[wi] += gw;
                    }
                }
            }
        }
        g = gx;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Instance;
    use crate::model::tests::alt;

    pub(crate) fn small_instance() -> Instance {
        Instance::new(
            3,
            vec![
                vec![vec![alt(0, 3), alt(1, 5)], vec![alt(2, 2)]],
                vec![vec![alt(1, 4), alt(2, 1)], vec![alt(0, 6), alt(2, 2)]],
            ],
        )
        .unwrap()
    }

    fn config(head: Head, enc: usize, dec: usize) -> NetworkConfig {
        NetworkConfig {
            filters: 3,
            hidden: 5,
            encoder_layers: enc,
            decoder_layers: dec,
            ..NetworkConfig::new(Shape::of(&small_instance()), head)
        }
    }

    #[test]
    fn output_shapes() {
        let f = FeatureTensors::new(&small_instance(), 6.0).unwrap();
        for (head, len) in [(Head::AssignmentLogits, 12), (Head::StartTimes, 4), (Head::Joint, 16)] {
            let net = Network::new(config(head, 2, 2), 1).unwrap();
            assert_eq!(net.forward(&f, Mode::Eval).unwrap().len(), len);
        }
    }

    #[test]
    fn eval_is_deterministic_and_dropout_is_not() {
        let f = FeatureTensors::new(&small_instance(), 6.0).unwrap();
        let net = Network::new(config(Head::Joint, 3, 3), 2).unwrap();
        assert_eq!(net.forward(&f, Mode::Eval).unwrap(), net.forward(&f, Mode::Eval).unwrap());
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        let a = net.forward(&f, Mode::Train(&mut r1)).unwrap();
        let b = net.forward(&f, Mode::Train(&mut r2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        assert!(Network::new(config(Head::Joint, 1, 2), 0).is_err());
        assert!(Network::new(config(Head::Joint, 2, 4), 0).is_err());
        let net = Network::new(config(Head::Joint, 2, 2), 0).unwrap();
        let other = Instance::new(1, vec![vec![vec![alt(0, 1)]]]).unwrap();
        let f = FeatureTensors::new(&other, 1.0).unwrap();
        assert!(net.forward(&f, Mode::Eval).is_err());
        assert!(Network::from_params(net.config().clone(), vec![0.0; 3]).is_err());
    }

    /// Norm-wise relative error of the full parameter gradient against
    /// central differences, for random weights and output weightings.
    #[test]
    fn gradient_matches_finite_differences() {
        let f = FeatureTensors::new(&small_instance(), 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        let mut seed = 0;
        while checked < 100 {
            seed += 1;
            let head = [Head::AssignmentLogits, Head::StartTimes, Head::Joint][seed as usize % 3];
            let mut net = Network::new(config(head, 2 + seed as usize % 2, 2 + (seed as usize / 2) % 2), seed).unwrap();
            // Random biases too, so no pre-activation sits exactly at zero.
            net.params.iter_mut().for_each(|p| *p = rng.random_range(-0.6..0.6));
            let (y, cache) = net.forward_cached(&f, Mode::Eval).unwrap();
            if cache.min_abs_preactivation() < 1e-4 {
                continue;
            }
            let weights: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut analytic = vec![0.0; net.num_params()];
            net.backward(&cache, &weights, &mut analytic);

            let h = 1e-6;
            let objective = |n: &Network| -> f64 {
                let y = n.forward(&f, Mode::Eval).unwrap();
                y.iter().zip(&weights).map(|(a, b)| a * b).sum()
            };
            let mut probe = net.clone();
            let mut numeric = vec![0.0; net.num_params()];
            for i in 0..net.num_params() {
                let v = probe.params[i];
                probe.params[i] = v + h;
                let up = objective(&probe);
                probe.params[i] = v - h;
                let down = objective(&probe);
                probe.params[i] = v;
                numeric[i] = (up - down) / (2.0 * h);
            }
            let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
            let scale = norm(&analytic).max(norm(&numeric)).max(1e-12);
            assert!(diff / scale <= 1e-4, "seed {seed}: relative error {}", diff / scale);
            checked += 1;
        }
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}
