//! Naive loop implementations used as references.

use std::f64::consts::PI;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `[T][F]` → `[T][C]` with `w[f][c]`.
pub fn freq_conv(x: &[Vec<f64>], w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let c = w[0].len();
    x.iter()
        .map(|frame| {
            (0..c)
                .map(|ch| frame.iter().enumerate().map(|(f, v)| v * w[f][ch]).sum())
                .collect()
        })
        .collect()
}

/// Dilated 3-tap depthwise filter `dw[k][c]` then pointwise mix `pw[i][o]`.
pub fn septemp(x: &[Vec<f64>], dw: &[Vec<f64>], pw: &[Vec<f64>], dilation: usize) -> Vec<Vec<f64>> {
    let t = x.len();
    let c = x[0].len();
    let mut depth = vec![vec![0.0; c]; t];
    for ti in 0..t {
        for ch in 0..c {
            for (k, taps) in dw.iter().enumerate() {
                let src = ti as isize + (k as isize - 1) * dilation as isize;
                if src >= 0 && (src as usize) < t {
                    depth[ti][ch] += taps[ch] * x[src as usize][ch];
                }
            }
        }
    }
    depth
        .iter()
        .map(|row| {
            (0..c)
                .map(|o| (0..c).map(|i| row[i] * pw[i][o]).sum())
                .collect()
        })
        .collect()
}

pub struct BnParams<'a> {
    pub gamma: &'a [f64],
    pub beta: &'a [f64],
    pub mean: &'a [f64],
    pub var: &'a [f64],
    pub eps: f64,
}

pub fn batchnorm_infer(x: &[Vec<f64>], p: &BnParams) -> Vec<Vec<f64>> {
    x.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, v)| (v - p.mean[c]) / (p.var[c] + p.eps).sqrt() * p.gamma[c] + p.beta[c])
                .collect()
        })
        .collect()
}

/// Batch statistics over all rows of every sequence in the batch.
pub fn batchnorm_train(
    batch: &[Vec<Vec<f64>>],
    gamma: &[f64],
    beta: &[f64],
    eps: f64,
) -> Vec<Vec<Vec<f64>>> {
    let c = gamma.len();
    let rows: Vec<&Vec<f64>> = batch.iter().flatten().collect();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..c)
        .map(|ch| rows.iter().map(|r| r[ch]).sum::<f64>() / n)
        .collect();
    let var: Vec<f64> = (0..c)
        .map(|ch| rows.iter().map(|r| (r[ch] - mean[ch]).powi(2)).sum::<f64>() / n)
        .collect();
    let p = BnParams {
        gamma,
        beta,
        mean: &mean,
        var: &var,
        eps,
    };
    batch.iter().map(|seq| batchnorm_infer(seq, &p)).collect()
}

pub fn relu(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|r| r.iter().map(|v| v.max(0.0)).collect())
        .collect()
}

pub struct GruWeights {
    /// `[h][d]`
    pub w: [Vec<Vec<f64>>; 3],
    /// `[h][h]`
    pub u: [Vec<Vec<f64>>; 3],
    pub b: [Vec<f64>; 3],
}

fn affine(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// One direction, gates in (update, reset, candidate) order.
pub fn gru(x: &[Vec<f64>], g: &GruWeights, reverse: bool) -> Vec<Vec<f64>> {
    let hsize = g.b[0].len();
    let mut h = vec![0.0; hsize];
    let mut out = vec![Vec::new(); x.len()];
    let order: Vec<usize> = if reverse {
        (0..x.len()).rev().collect()
    } else {
        (0..x.len()).collect()
    };
    for t in order {
        let wz = affine(&g.w[0], &x[t]);
        let wr = affine(&g.w[1], &x[t]);
        let wn = affine(&g.w[2], &x[t]);
        let uz = affine(&g.u[0], &h);
        let ur = affine(&g.u[1], &h);
        let z: Vec<f64> = (0..hsize)
            .map(|j| sigmoid(wz[j] + uz[j] + g.b[0][j]))
            .collect();
        let r: Vec<f64> = (0..hsize)
            .map(|j| sigmoid(wr[j] + ur[j] + g.b[1][j]))
            .collect();
        let rh: Vec<f64> = (0..hsize).map(|j| r[j] * h[j]).collect();
        let un = affine(&g.u[2], &rh);
        let n: Vec<f64> = (0..hsize)
            .map(|j| (wn[j] + un[j] + g.b[2][j]).tanh())
            .collect();
        h = (0..hsize)
            .map(|j| (1.0 - z[j]) * h[j] + z[j] * n[j])
            .collect();
        out[t] = h.clone();
    }
    out
}

pub fn bgru(x: &[Vec<f64>], fwd: &GruWeights, bwd: &GruWeights) -> Vec<Vec<f64>> {
    let f = gru(x, fwd, false);
    let b = gru(x, bwd, true);
    f.into_iter()
        .zip(b)
        .map(|(mut a, b)| {
            a.extend(b);
            a
        })
        .collect()
}

/// Shared-weight attention with projection `w[D][D]`.
pub fn swsa(x: &[Vec<f64>], w: &[Vec<f64>], heads: usize, query: usize) -> Vec<f64> {
    let d = w.len();
    let hw = d / heads;
    let u: Vec<Vec<f64>> = x.iter().map(|frame| affine(w, frame)).collect();
    let q = &u[query];
    let mut out = vec![0.0; d];
    for head in 0..heads {
        let cols = head * hw..(head + 1) * hw;
        let scores: Vec<f64> = u
            .iter()
            .map(|ut| cols.clone().map(|j| q[j] * ut[j]).sum())
            .collect();
        let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
        let z: f64 = e.iter().sum();
        for (t, ut) in u.iter().enumerate() {
            for j in cols.clone() {
                out[j] += e[t] / z * ut[j];
            }
        }
    }
    out
}

pub fn avg_pool(x: &[Vec<f64>]) -> Vec<f64> {
    let d = x[0].len();
    (0..d)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / x.len() as f64)
        .collect()
}

/// `w[out][in]`.
pub fn dense(x: &[f64], w: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    affine(w, x).iter().zip(b).map(|(a, b)| a + b).collect()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

/// Frames each output of a stack of dilated 3-tap layers depends on, found by
/// propagating dependency sets through the stack; returns the span from the
/// earliest to the latest frame reached.
pub fn traced_receptive_field(dilations: &[usize]) -> usize {
    let reach: usize = dilations.iter().sum();
    let t = 4 * reach + 1;
    let centre = t / 2;
    // deps[t] = set of input frames output frame t depends on.
    let mut deps: Vec<Vec<bool>> = (0..t).map(|i| (0..t).map(|j| i == j).collect()).collect();
    for &d in dilations {
        let prev = deps.clone();
        for (ti, row) in deps.iter_mut().enumerate() {
            row.iter_mut().for_each(|v| *v = false);
            for k in -1isize..=1 {
                let src = ti as isize + k * d as isize;
                if src >= 0 && (src as usize) < t {
                    for (v, &p) in row.iter_mut().zip(&prev[src as usize]) {
                        *v |= p;
                    }
                }
            }
        }
    }
    let first = deps[centre].iter().position(|&v| v).unwrap();
    let last = deps[centre].iter().rposition(|&v| v).unwrap();
    last - first + 1
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Log mel energies by direct DFT: pre-emphasis, zero padding to 99 frames of
/// 400 shifted by 160, Hamming window, 512-point magnitude spectrum, 40 HTK
/// triangles over 20..7600 Hz, natural log floored at 1e-10.
pub fn log_mel_direct(samples: &[f64]) -> Vec<Vec<f64>> {
    let (n_fft, len, hop, frames, filters) = (512usize, 400usize, 160usize, 99usize, 40usize);
    let mut emph = vec![0.0; (frames - 1) * hop + len];
    for i in 0..samples.len() {
        emph[i] = samples[i] - if i > 0 { 0.97 * samples[i - 1] } else { 0.0 };
    }
    let lo = hz_to_mel(20.0);
    let hi = hz_to_mel(7600.0);
    let edge = |i: usize| mel_to_hz(lo + (hi - lo) * i as f64 / (filters + 1) as f64);
    let mut out = Vec::with_capacity(frames);
    for fr in 0..frames {
        let seg: Vec<f64> = (0..len)
            .map(|i| {
                emph[fr * hop + i] * (0.54 - 0.46 * (2.0 * PI * i as f64 / (len - 1) as f64).cos())
            })
            .collect();
        let mag: Vec<f64> = (0..=n_fft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in seg.iter().enumerate() {
                    let a = -2.0 * PI * (k * i) as f64 / n_fft as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect();
        let row = (0..filters)
            .map(|m| {
                let (l, c, r) = (edge(m), edge(m + 1), edge(m + 2));
                let e: f64 = mag
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let f = k as f64 * 16000.0 / n_fft as f64;
                        let wt = if f > l && f <= c {
                            (f - l) / (c - l)
                        } else if f > c && f < r {
                            (r - f) / (r - c)
                        } else {
                            0.0
                        };
                        wt * v
                    })
                    .sum();
                e.max(1e-10).ln()
            })
            .collect();
        out.push(row);
    }
    out
}
