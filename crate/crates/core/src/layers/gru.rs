//! Bidirectional GRU.
//!
//! Per direction, with `h` the previous state:
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! n  = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 − z) ⊙ h + z ⊙ n
//! ```
//!
//! The initial state is zero. The backward direction reads the sequence in
//! reverse; its state for frame `t` is written to frame `t` of the output.

use rand::Rng;

use super::{check_grad_shape, dims3, fan_in_uniform, Layer, LayerGrads};
use crate::error::{Error, Result};
use crate::numerics::{gemm_nn, gemm_nt, gemm_tn, matvec_acc, matvec_t_acc, sigmoid, Tensor};

/// Parameters of one recurrent direction.
#[derive(Debug, Clone)]
pub struct GruDirection {
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

/// Activations of one direction, each `[B, T, h]` indexed by true frame.
#[derive(Debug, Clone)]
struct DirectionCache {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
}

impl GruDirection {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor::zeros(&[hidden, input]);
        let u = || Tensor::zeros(&[hidden, hidden]);
        let b = || Tensor::zeros(&[hidden]);
        Self {
            w_z: w(),
            w_r: w(),
            w_h: w(),
            u_z: u(),
            u_r: u(),
            u_h: u(),
            b_z: b(),
            b_r: b(),
            b_h: b(),
        }
    }

    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut d = Self::zeros(input, hidden);
        for w in [&mut d.w_z, &mut d.w_r, &mut d.w_h] {
            *w = fan_in_uniform(&[hidden, input], input, rng);
        }
        for u in [&mut d.u_z, &mut d.u_r, &mut d.u_h] {
            *u = fan_in_uniform(&[hidden, hidden], hidden, rng);
        }
        d
    }

    pub fn input_size(&self) -> usize {
        self.w_z.shape()[1]
    }

    pub fn hidden_size(&self) -> usize {
        self.w_z.shape()[0]
    }

    fn tensors(&self) -> [&Tensor; 9] {
        [
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z, &self.b_r,
            &self.b_h,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Tensor; 9] {
        [
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    fn validate(&self) -> Result<()> {
        let (h, d) = (self.hidden_size(), self.input_size());
        let expected: [&[usize]; 9] = [
            &[h, d],
            &[h, d],
            &[h, d],
            &[h, h],
            &[h, h],
            &[h, h],
            &[h],
            &[h],
            &[h],
        ];
        for (t, e) in self.tensors().iter().zip(expected) {
            if t.shape() != e {
                return Err(Error::shape("gru parameters", t.shape(), e));
            }
        }
        Ok(())
    }

    /// Input projections `X Wᵀ + b` for all frames at once, `[B*T, h]`.
    fn project(&self, x: &[f64], rows: usize, w: &Tensor, b: &Tensor) -> Vec<f64> {
        let h = self.hidden_size();
        let mut out: Vec<f64> = b.data().iter().copied().cycle().take(rows * h).collect();
        gemm_nt(x, w.data(), rows, self.input_size(), h, &mut out);
        out
    }

    /// Run over `[B, T, d]`, writing states into `out` (`[B, T, stride]`,
    /// columns `offset..offset+h`).
    fn run(
        &self,
        x: &Tensor,
        reverse: bool,
        out: &mut [f64],
        stride: usize,
        offset: usize,
    ) -> DirectionCache {
        let (b, t) = (x.shape()[0], x.shape()[1]);
        let h = self.hidden_size();
        let xz = self.project(x.data(), b * t, &self.w_z, &self.b_z);
        let xr = self.project(x.data(), b * t, &self.w_r, &self.b_r);
        let xn = self.project(x.data(), b * t, &self.w_h, &self.b_h);
        let mut cache = DirectionCache {
            h_prev: vec![0.0; b * t * h],
            z: vec![0.0; b * t * h],
            r: vec![0.0; b * t * h],
            n: vec![0.0; b * t * h],
        };
        let mut state = vec![0.0; h];
        let mut rh = vec![0.0; h];
        let mut acc = vec![0.0; h];
        for bi in 0..b {
            state.iter_mut().for_each(|v| *v = 0.0);
            for step in 0..t {
                let ti = if reverse { t - 1 - step } else { step };
                let row = (bi * t + ti) * h;
                cache.h_prev[row..row + h].copy_from_slice(&state);

                acc.copy_from_slice(&xz[row..row + h]);
                matvec_acc(self.u_z.data(), &state, h, h, &mut acc);
                let z = &mut cache.z[row..row + h];
                z.iter_mut().zip(&acc).for_each(|(z, &a)| *z = sigmoid(a));

                acc.copy_from_slice(&xr[row..row + h]);
                matvec_acc(self.u_r.data(), &state, h, h, &mut acc);
                let r = &mut cache.r[row..row + h];
                r.iter_mut().zip(&acc).for_each(|(r, &a)| *r = sigmoid(a));

                rh.iter_mut()
                    .zip(r.iter())
                    .zip(&state)
                    .for_each(|((o, &r), &s)| *o = r * s);
                acc.copy_from_slice(&xn[row..row + h]);
                matvec_acc(self.u_h.data(), &rh, h, h, &mut acc);
                let n = &mut cache.n[row..row + h];
                n.iter_mut().zip(&acc).for_each(|(n, &a)| *n = a.tanh());

                let z = &cache.z[row..row + h];
                for j in 0..h {
                    state[j] = (1.0 - z[j]) * state[j] + z[j] * n[j];
                }
                let o = (bi * t + ti) * stride + offset;
                out[o..o + h].copy_from_slice(&state);
            }
        }
        cache
    }

    /// Backpropagate through time. `grad` is `[B, T, stride]`, this
    /// direction's columns at `offset`. Accumulates the input gradient into
    /// `dx` and returns parameter gradients.
    #[allow(clippy::too_many_arguments)]
    fn backprop(
        &self,
        x: &Tensor,
        cache: &DirectionCache,
        reverse: bool,
        grad: &[f64],
        stride: usize,
        offset: usize,
        dx: &mut [f64],
    ) -> Result<Vec<Tensor>> {
        let (b, t) = (x.shape()[0], x.shape()[1]);
        let (h, d) = (self.hidden_size(), self.input_size());
        let rows = b * t;
        let mut da_z = vec![0.0; rows * h];
        let mut da_r = vec![0.0; rows * h];
        let mut da_n = vec![0.0; rows * h];
        let mut rh_all = vec![0.0; rows * h];
        let mut dh = vec![0.0; h];
        let mut d_rh = vec![0.0; h];
        let mut dh_prev = vec![0.0; h];
        for bi in 0..b {
            dh.iter_mut().for_each(|v| *v = 0.0);
            for step in (0..t).rev() {
                let ti = if reverse { t - 1 - step } else { step };
                let row = (bi * t + ti) * h;
                let g = (bi * t + ti) * stride + offset;
                for j in 0..h {
                    dh[j] += grad[g + j];
                }
                let hp = &cache.h_prev[row..row + h];
                let z = &cache.z[row..row + h];
                let r = &cache.r[row..row + h];
                let n = &cache.n[row..row + h];
                for j in 0..h {
                    dh_prev[j] = dh[j] * (1.0 - z[j]);
                    da_n[row + j] = dh[j] * z[j] * (1.0 - n[j] * n[j]);
                    da_z[row + j] = dh[j] * (n[j] - hp[j]) * z[j] * (1.0 - z[j]);
                    rh_all[row + j] = r[j] * hp[j];
                }
                d_rh.iter_mut().for_each(|v| *v = 0.0);
                matvec_t_acc(self.u_h.data(), &da_n[row..row + h], h, h, &mut d_rh);
                for j in 0..h {
                    da_r[row + j] = d_rh[j] * hp[j] * r[j] * (1.0 - r[j]);
                    dh_prev[j] += d_rh[j] * r[j];
                }
                matvec_t_acc(self.u_z.data(), &da_z[row..row + h], h, h, &mut dh_prev);
                matvec_t_acc(self.u_r.data(), &da_r[row..row + h], h, h, &mut dh_prev);
                dh.copy_from_slice(&dh_prev);
            }
        }

        let weight_grad = |da: &[f64]| {
            let mut g = vec![0.0; h * d];
            gemm_tn(da, x.data(), rows, h, d, &mut g);
            Tensor::new(vec![h, d], g)
        };
        let recurrent_grad = |da: &[f64], states: &[f64]| {
            let mut g = vec![0.0; h * h];
            gemm_tn(da, states, rows, h, h, &mut g);
            Tensor::new(vec![h, h], g)
        };
        let bias_grad = |da: &[f64]| {
            let mut g = vec![0.0; h];
            da.chunks(h)
                .for_each(|row| g.iter_mut().zip(row).for_each(|(a, b)| *a += b));
            Tensor::new(vec![h], g)
        };
        gemm_nn(&da_z, self.w_z.data(), rows, h, d, dx);
        gemm_nn(&da_r, self.w_r.data(), rows, h, d, dx);
        gemm_nn(&da_n, self.w_h.data(), rows, h, d, dx);
        Ok(vec![
            weight_grad(&da_z)?,
            weight_grad(&da_r)?,
            weight_grad(&da_n)?,
            recurrent_grad(&da_z, &cache.h_prev)?,
            recurrent_grad(&da_r, &cache.h_prev)?,
            recurrent_grad(&da_n, &rh_all)?,
            bias_grad(&da_z)?,
            bias_grad(&da_r)?,
            bias_grad(&da_n)?,
        ])
    }
}

/// Bidirectional GRU; output frames concatenate `[forward, backward]` states.
#[derive(Debug, Clone)]
pub struct Bgru {
    pub forward_dir: GruDirection,
    pub backward_dir: GruDirection,
    cache: Option<(Tensor, DirectionCache, DirectionCache)>,
}

const PARAM_NAMES: [&str; 18] = [
    "fwd.w_z", "fwd.w_r", "fwd.w_h", "fwd.u_z", "fwd.u_r", "fwd.u_h", "fwd.b_z", "fwd.b_r",
    "fwd.b_h", "bwd.w_z", "bwd.w_r", "bwd.w_h", "bwd.u_z", "bwd.u_r", "bwd.u_h", "bwd.b_z",
    "bwd.b_r", "bwd.b_h",
];

impl Bgru {
    pub fn new(forward_dir: GruDirection, backward_dir: GruDirection) -> Result<Self> {
        forward_dir.validate()?;
        backward_dir.validate()?;
        if forward_dir.input_size() != backward_dir.input_size()
            || forward_dir.hidden_size() != backward_dir.hidden_size()
        {
            return Err(Error::InvalidArgument(
                "BGRU directions must have equal sizes".into(),
            ));
        }
        Ok(Self {
            forward_dir,
            backward_dir,
            cache: None,
        })
    }

    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let f = GruDirection::init(input, hidden, rng);
        let b = GruDirection::init(input, hidden, rng);
        Self::new(f, b).unwrap()
    }

    pub fn input_size(&self) -> usize {
        self.forward_dir.input_size()
    }

    pub fn hidden_size(&self) -> usize {
        self.forward_dir.hidden_size()
    }

    pub fn output_size(&self) -> usize {
        2 * self.hidden_size()
    }

    fn run(&self, x: &Tensor) -> Result<(Tensor, DirectionCache, DirectionCache)> {
        let (b, t) = dims3(self.kind(), x, self.input_size())?;
        let (h, stride) = (self.hidden_size(), self.output_size());
        let mut out = vec![0.0; b * t * stride];
        let fwd = self.forward_dir.run(x, false, &mut out, stride, 0);
        let bwd = self.backward_dir.run(x, true, &mut out, stride, h);
        Ok((Tensor::new(vec![b, t, stride], out)?, fwd, bwd))
    }
}

impl Layer for Bgru {
    fn kind(&self) -> &'static str {
        "bgru"
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.run(x)?.0)
    }

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let (y, fwd, bwd) = self.run(x)?;
        self.cache = Some((x.clone(), fwd, bwd));
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let (x, fwd, bwd) = self
            .cache
            .take()
            .ok_or(Error::MissingForwardCache("bgru"))?;
        let (b, t) = (x.shape()[0], x.shape()[1]);
        let (h, stride) = (self.hidden_size(), self.output_size());
        check_grad_shape(self.kind(), grad_out, &[b, t, stride])?;
        let mut dx = vec![0.0; x.len()];
        let mut params =
            self.forward_dir
                .backprop(&x, &fwd, false, grad_out.data(), stride, 0, &mut dx)?;
        params.extend(self.backward_dir.backprop(
            &x,
            &bwd,
            true,
            grad_out.data(),
            stride,
            h,
            &mut dx,
        )?);
        Ok(LayerGrads {
            input: Tensor::new(x.shape().to_vec(), dx)?,
            params,
        })
    }

    fn params(&self) -> Vec<(&'static str, &Tensor)> {
        PARAM_NAMES
            .iter()
            .copied()
            .zip(
                self.forward_dir
                    .tensors()
                    .into_iter()
                    .chain(self.backward_dir.tensors()),
            )
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let Self {
            forward_dir,
            backward_dir,
            ..
        } = self;
        forward_dir
            .tensors_mut()
            .into_iter()
            .chain(backward_dir.tensors_mut())
            .collect()
    }
}
