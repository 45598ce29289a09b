//! Small recurrent predictor used by local twins to model one behavior
//! metric over perception intervals. Single-layer LSTM with a scalar input
//! and a linear head, trained by full backpropagation through time on
//! sliding windows. Everything is f64 and hand-rolled so replicas can
//! reproduce training bit-for-bit.

use crate::math::Adam;
use rand::Rng;

/// Parameter layout, gate order i, f, g, o:
/// wx[4H] | wh[4H*H] | b[4H] | wy[H] | by[1]
#[derive(Debug, Clone)]
pub struct Lstm {
    pub hidden: usize,
    pub params: Vec<f64>,
}

struct Offsets {
    wx: usize,
    wh: usize,
    b: usize,
    wy: usize,
    by: usize,
    total: usize,
}

fn offsets(h: usize) -> Offsets {
    let wx = 0;
    let wh = wx + 4 * h;
    let b = wh + 4 * h * h;
    let wy = b + 4 * h;
    let by = wy + h;
    Offsets { wx, wh, b, wy, by, total: by + 1 }
}

/// Forward pass intermediates kept for backprop.
struct Tape {
    // Per step: gate activations and cell states.
    i: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    o: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    y: f64,
}

impl Lstm {
    pub fn new(hidden: usize, seed: u64) -> Self {
        let off = offsets(hidden);
        let mut rng = crate::rng::stream(seed, "lstm-init", hidden as u64);
        let scale = 1.0 / (hidden as f64).sqrt();
        let mut params: Vec<f64> = (0..off.total)
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        // Forget-gate bias starts high so early training does not wash out
        // the cell state.
        for j in 0..hidden {
            params[off.b + hidden + j] = 1.0;
        }
        params[off.by] = 0.0;
        Self { hidden, params }
    }

    pub fn param_count(&self) -> usize {
        offsets(self.hidden).total
    }

    fn run(&self, xs: &[f64]) -> Tape {
        let h = self.hidden;
        let off = offsets(h);
        let p = &self.params;
        let steps = xs.len();
        let mut tape = Tape {
            i: Vec::with_capacity(steps),
            f: Vec::with_capacity(steps),
            g: Vec::with_capacity(steps),
            o: Vec::with_capacity(steps),
            c: Vec::with_capacity(steps),
            h: Vec::with_capacity(steps),
            y: 0.0,
        };
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for &x in xs {
            let mut iv = vec![0.0; h];
            let mut fv = vec![0.0; h];
            let mut gv = vec![0.0; h];
            let mut ov = vec![0.0; h];
            for j in 0..h {
                let mut zi = p[off.wx + j] * x + p[off.b + j];
                let mut zf = p[off.wx + h + j] * x + p[off.b + h + j];
                let mut zg = p[off.wx + 2 * h + j] * x + p[off.b + 2 * h + j];
                let mut zo = p[off.wx + 3 * h + j] * x + p[off.b + 3 * h + j];
                for k in 0..h {
                    let hp = h_prev[k];
                    zi += p[off.wh + j * h + k] * hp;
                    zf += p[off.wh + (h + j) * h + k] * hp;
                    zg += p[off.wh + (2 * h + j) * h + k] * hp;
                    zo += p[off.wh + (3 * h + j) * h + k] * hp;
                }
                iv[j] = crate::math::sigmoid(zi);
                fv[j] = crate::math::sigmoid(zf);
                gv[j] = zg.tanh();
                ov[j] = crate::math::sigmoid(zo);
            }
            let mut cv = vec![0.0; h];
            let mut hv = vec![0.0; h];
            for j in 0..h {
                cv[j] = fv[j] * c_prev[j] + iv[j] * gv[j];
                hv[j] = ov[j] * cv[j].tanh();
            }
            tape.i.push(iv);
            tape.f.push(fv);
            tape.g.push(gv);
            tape.o.push(ov);
            tape.c.push(cv.clone());
            tape.h.push(hv.clone());
            c_prev = cv;
            h_prev = hv;
        }
        let mut y = p[off.by];
        for j in 0..h {
            y += p[off.wy + j] * h_prev[j];
        }
        tape.y = y;
        tape
    }

    /// Predicted next value after consuming `xs`.
    pub fn forward(&self, xs: &[f64]) -> f64 {
        self.run(xs).y
    }

    /// Squared-error loss against `target` and the full parameter gradient.
    pub fn grad(&self, xs: &[f64], target: f64) -> (f64, Vec<f64>) {
        let h = self.hidden;
        let off = offsets(h);
        let p = &self.params;
        let tape = self.run(xs);
        let steps = xs.len();
        let err = tape.y - target;
        let loss = err * err;
        let dy = 2.0 * err;

        let mut grad = vec![0.0; off.total];
        let h_last = &tape.h[steps - 1];
        for j in 0..h {
            grad[off.wy + j] = dy * h_last[j];
        }
        grad[off.by] = dy;

        let mut dh = vec![0.0; h];
        let mut dc = vec![0.0; h];
        for j in 0..h {
            dh[j] = dy * p[off.wy + j];
        }
        for t in (0..steps).rev() {
            let x = xs[t];
            let (iv, fv, gv, ov, cv) =
                (&tape.i[t], &tape.f[t], &tape.g[t], &tape.o[t], &tape.c[t]);
            let c_prev: &[f64] = if t == 0 { &[] } else { &tape.c[t - 1] };
            let h_prev: &[f64] = if t == 0 { &[] } else { &tape.h[t - 1] };
            let mut dh_prev = vec![0.0; h];
            let mut dc_prev = vec![0.0; h];
            for j in 0..h {
                let tc = cv[j].tanh();
                let dcj = dc[j] + dh[j] * ov[j] * (1.0 - tc * tc);
                let doj = dh[j] * tc;
                let dij = dcj * gv[j];
                let dgj = dcj * iv[j];
                let cp = if t == 0 { 0.0 } else { c_prev[j] };
                let dfj = dcj * cp;
                dc_prev[j] = dcj * fv[j];

                let dzi = dij * iv[j] * (1.0 - iv[j]);
                let dzf = dfj * fv[j] * (1.0 - fv[j]);
                let dzg = dgj * (1.0 - gv[j] * gv[j]);
                let dzo = doj * ov[j] * (1.0 - ov[j]);

                grad[off.wx + j] += dzi * x;
                grad[off.wx + h + j] += dzf * x;
                grad[off.wx + 2 * h + j] += dzg * x;
                grad[off.wx + 3 * h + j] += dzo * x;
                grad[off.b + j] += dzi;
                grad[off.b + h + j] += dzf;
                grad[off.b + 2 * h + j] += dzg;
                grad[off.b + 3 * h + j] += dzo;
                for k in 0..h {
                    let hp = if t == 0 { 0.0 } else { h_prev[k] };
                    grad[off.wh + j * h + k] += dzi * hp;
                    grad[off.wh + (h + j) * h + k] += dzf * hp;
                    grad[off.wh + (2 * h + j) * h + k] += dzg * hp;
                    grad[off.wh + (3 * h + j) * h + k] += dzo * hp;
                    dh_prev[k] += p[off.wh + j * h + k] * dzi
                        + p[off.wh + (h + j) * h + k] * dzf
                        + p[off.wh + (2 * h + j) * h + k] * dzg
                        + p[off.wh + (3 * h + j) * h + k] * dzo;
                }
            }
            dh = dh_prev;
            dc = dc_prev;
        }
        (loss, grad)
    }
}

/// Metric predictor: normalizes the series, maintains the LSTM and its
/// optimizer state, and is retrained incrementally at each perception.
#[derive(Debug, Clone)]
pub struct Predictor {
    lstm: Lstm,
    adam: Adam,
    pub window: usize,
    mean: f64,
    std: f64,
}

impl Predictor {
    pub fn new(hidden: usize, window: usize, seed: u64) -> Self {
        let lstm = Lstm::new(hidden, seed);
        let n = lstm.param_count();
        Self {
            lstm,
            adam: Adam::new(0.02, n),
            window,
            mean: 0.0,
            std: 1.0,
        }
    }

    fn normalize(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    /// Retrain on the series and predict the value after its last element.
    /// Returns None until one full window plus a target is available.
    pub fn fit_predict(&mut self, series: &[f64], epochs: usize) -> Option<f64> {
        if series.len() < self.window + 1 {
            return None;
        }
        self.mean = crate::math::mean(series);
        let var = series
            .iter()
            .map(|v| (v - self.mean) * (v - self.mean))
            .sum::<f64>()
            / series.len() as f64;
        self.std = var.sqrt().max(1e-6);
        let xs: Vec<f64> = series.iter().map(|v| self.normalize(*v)).collect();
        for _ in 0..epochs {
            for start in 0..=(xs.len() - self.window - 1) {
                let win = &xs[start..start + self.window];
                let target = xs[start + self.window];
                let (_, grad) = self.lstm.grad(win, target);
                self.adam.step(&mut self.lstm.params, &grad);
            }
        }
        let tail = &xs[xs.len() - self.window..];
        Some(self.lstm.forward(tail) * self.std + self.mean)
    }
}
