use rand::Rng;

use super::sigmoid;
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub hidden: usize,
    /// Weight-decay coefficient on the summed (not averaged) loss.
    pub decay: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Initial weights are uniform on `(−init_range, init_range)`.
    pub init_range: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self { hidden: 5, decay: 0.01, epochs: 500, learning_rate: 0.1, init_range: 0.5 }
    }
}

/// Single-hidden-layer perceptron with logistic units and a logistic output,
/// trained by full-batch gradient descent on penalized cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNet {
    /// `hidden × (inputs + 1)`, bias last in each row.
    pub input_weights: Vec<Vec<f64>>,
    /// `hidden + 1`, bias last.
    pub output_weights: Vec<f64>,
}

impl NeuralNet {
    pub fn fit(x: &Matrix, y: &[bool], cfg: &NetConfig, seed_: u64) -> Self {
        Self::fit_traced(x, y, cfg, seed_).0
    }

    /// Fit and return the penalized loss before each epoch plus the final one.
    pub fn fit_traced(x: &Matrix, y: &[bool], cfg: &NetConfig, seed_: u64) -> (Self, Vec<f64>) {
        let p = x.ncols();
        let h = cfg.hidden.max(1);
        let mut rng = seed::rng(seed_);
        let mut draw = || rng.random_range(-cfg.init_range..cfg.init_range);
        let mut net = Self {
            input_weights: (0..h).map(|_| (0..=p).map(|_| draw()).collect()).collect(),
            output_weights: (0..=h).map(|_| draw()).collect(),
        };
        let n = x.nrows().max(1) as f64;
        let mut trace = Vec::with_capacity(cfg.epochs + 1);
        let mut g_in = vec![vec![0.0; p + 1]; h];
        let mut g_out = vec![0.0; h + 1];
        let mut hid = vec![0.0; h];
        for _ in 0..cfg.epochs {
            g_in.iter_mut().for_each(|r| r.fill(0.0));
            g_out.fill(0.0);
            let mut loss = 0.0;
            for (row, &label) in x.rows().zip(y) {
                let out = net.hidden_activations(row, &mut hid);
                let t = f64::from(u8::from(label));
                loss += cross_entropy(out, t);
                let delta = out - t;
                for k in 0..h {
                    g_out[k] += delta * hid[k];
                    let dk = delta * net.output_weights[k] * hid[k] * (1.0 - hid[k]);
                    for (g, xi) in g_in[k].iter_mut().zip(row) {
                        *g += dk * xi;
                    }
                    g_in[k][p] += dk;
                }
                g_out[h] += delta;
            }
            loss += cfg.decay * net.squared_norm();
            trace.push(loss);
            let step = cfg.learning_rate / n;
            for k in 0..h {
                for (w, g) in net.input_weights[k].iter_mut().zip(&g_in[k]) {
                    *w -= step * (g + 2.0 * cfg.decay * *w);
                }
            }
            for (w, g) in net.output_weights.iter_mut().zip(&g_out) {
                *w -= step * (g + 2.0 * cfg.decay * *w);
            }
        }
        let final_loss: f64 = x
            .rows()
            .zip(y)
            .map(|(r, &l)| cross_entropy(net.forward(r), f64::from(u8::from(l))))
            .sum::<f64>()
            + cfg.decay * net.squared_norm();
        trace.push(final_loss);
        (net, trace)
    }

    fn hidden_activations(&self, x: &[f64], hid: &mut [f64]) -> f64 {
        let h = self.input_weights.len();
        let mut z = self.output_weights[h];
        for (k, w) in self.input_weights.iter().enumerate() {
            let (bias, ws) = w.split_last().unwrap();
            let a = sigmoid(super::dot(ws, x) + bias);
            hid[k] = a;
            z += self.output_weights[k] * a;
        }
        sigmoid(z)
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut hid = vec![0.0; self.input_weights.len()];
        self.hidden_activations(x, &mut hid)
    }

    fn squared_norm(&self) -> f64 {
        self.parameters().iter().map(|w| w * w).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.input_weights.iter().flatten().copied().collect();
        v.extend_from_slice(&self.output_weights);
        v
    }
}

fn cross_entropy(p: f64, t: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

/// Average of several networks trained from different random starts.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedNetwork {
    pub members: Vec<NeuralNet>,
}

impl AveragedNetwork {
    pub fn fit(x: &Matrix, y: &[bool], cfg: &NetConfig, repeats: usize, seed_: u64) -> Self {
        let members = (0..repeats.max(1))
            .map(|r| NeuralNet::fit(x, y, cfg, seed::derive(seed_, &[r as u64])))
            .collect();
        Self { members }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        self.members.iter().map(|m| m.forward(x)).sum::<f64>() / self.members.len() as f64
    }
}
