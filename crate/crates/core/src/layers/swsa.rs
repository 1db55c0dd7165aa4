//! Shared-weight self-attention.
//!
//! One matrix `w` projects every frame `u_t = w·x_t` (keys and values) and
//! the query frame `q = w·x_query`. Each of the heads attends with unscaled
//! dot-product scores over its slice of the projection, and the per-head
//! contexts are concatenated.

use rand::Rng;

use super::{check_grad_shape, dims3, fan_in_uniform, Layer, LayerGrads};
use crate::error::{Error, Result};
use crate::numerics::{
    gemm_nn, gemm_nt, gemm_tn, matvec_acc, matvec_t_acc, outer_acc, softmax_in_place, Tensor,
};

#[derive(Debug, Clone)]
pub struct Swsa {
    /// `[D, D]`
    pub w: Tensor,
    heads: usize,
    query_index: usize,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    x: Tensor,
    /// `[B, T, D]` projected frames.
    u: Vec<f64>,
    /// `[B, D]` projected queries.
    q: Vec<f64>,
    /// `[B, heads, T]` attention weights.
    alpha: Vec<f64>,
}

impl Swsa {
    pub fn new(w: Tensor, heads: usize, query_index: usize) -> Result<Self> {
        let d = match *w.shape() {
            [a, b] if a == b => a,
            _ => return Err(Error::shape("swsa weight", w.shape(), &[0, 0])),
        };
        if heads == 0 || d % heads != 0 {
            return Err(Error::InvalidArgument(format!(
                "{heads} heads do not divide width {d}"
            )));
        }
        Ok(Self {
            w,
            heads,
            query_index,
            cache: None,
        })
    }

    pub fn init(
        width: usize,
        heads: usize,
        query_index: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        Self::new(
            fan_in_uniform(&[width, width], width, rng),
            heads,
            query_index,
        )
    }

    pub fn width(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn query_index(&self) -> usize {
        self.query_index
    }

    fn head_width(&self) -> usize {
        self.width() / self.heads
    }

    fn run(&self, x: &Tensor) -> Result<(Tensor, Cache)> {
        let d = self.width();
        let (b, t) = dims3(self.kind(), x, d)?;
        if t <= self.query_index {
            return Err(Error::InvalidArgument(format!(
                "sequence of {t} frames has no query frame {}",
                self.query_index
            )));
        }
        let (heads, hw) = (self.heads, self.head_width());
        let mut u = vec![0.0; b * t * d];
        gemm_nt(x.data(), self.w.data(), b * t, d, d, &mut u);
        let mut q = vec![0.0; b * d];
        let mut alpha = vec![0.0; b * heads * t];
        let mut out = vec![0.0; b * d];
        for bi in 0..b {
            let xq =
                &x.data()[(bi * t + self.query_index) * d..(bi * t + self.query_index + 1) * d];
            matvec_acc(self.w.data(), xq, d, d, &mut q[bi * d..(bi + 1) * d]);
            for g in 0..heads {
                let cols = g * hw..(g + 1) * hw;
                let qg = &q[bi * d + cols.start..bi * d + cols.end];
                let a = &mut alpha[(bi * heads + g) * t..(bi * heads + g + 1) * t];
                for (ti, s) in a.iter_mut().enumerate() {
                    let ut = &u[(bi * t + ti) * d + cols.start..(bi * t + ti) * d + cols.end];
                    *s = qg.iter().zip(ut).map(|(a, b)| a * b).sum();
                }
                softmax_in_place(a)?;
                let ctx = &mut out[bi * d + cols.start..bi * d + cols.end];
                for (ti, &w) in a.iter().enumerate() {
                    let ut = &u[(bi * t + ti) * d + cols.start..(bi * t + ti) * d + cols.end];
                    ctx.iter_mut().zip(ut).for_each(|(c, &v)| *c += w * v);
                }
            }
        }
        let cache = Cache {
            x: x.clone(),
            u,
            q,
            alpha,
        };
        Ok((Tensor::new(vec![b, d], out)?, cache))
    }

    /// Attention weights, `[B, heads, T]`.
    pub fn attention_weights(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t) = (x.shape()[0], x.shape()[1]);
        let (_, cache) = self.run(x)?;
        Tensor::new(vec![b, self.heads, t], cache.alpha)
    }
}

impl Layer for Swsa {
    fn kind(&self) -> &'static str {
        "swsa"
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.run(x)?.0)
    }

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let (y, cache) = self.run(x)?;
        self.cache = Some(cache);
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let Cache { x, u, q, alpha } = self
            .cache
            .take()
            .ok_or(Error::MissingForwardCache("swsa"))?;
        let d = self.width();
        let (b, t) = (x.shape()[0], x.shape()[1]);
        check_grad_shape(self.kind(), grad_out, &[b, d])?;
        let (heads, hw) = (self.heads, self.head_width());
        let mut du = vec![0.0; b * t * d];
        let mut dq = vec![0.0; b * d];
        let mut d_alpha = vec![0.0; t];
        for bi in 0..b {
            for g in 0..heads {
                let cols = g * hw..(g + 1) * hw;
                let dctx = &grad_out.data()[bi * d + cols.start..bi * d + cols.end];
                let qg = &q[bi * d + cols.start..bi * d + cols.end];
                let a = &alpha[(bi * heads + g) * t..(bi * heads + g + 1) * t];
                for ti in 0..t {
                    let off = (bi * t + ti) * d + cols.start;
                    d_alpha[ti] = dctx.iter().zip(&u[off..off + hw]).map(|(a, b)| a * b).sum();
                }
                let mean: f64 = a.iter().zip(&d_alpha).map(|(a, da)| a * da).sum();
                let dqg = &mut dq[bi * d + cols.start..bi * d + cols.end];
                for ti in 0..t {
                    let off = (bi * t + ti) * d + cols.start;
                    let ds = a[ti] * (d_alpha[ti] - mean);
                    for j in 0..hw {
                        dqg[j] += ds * u[off + j];
                        du[off + j] += a[ti] * dctx[j] + ds * qg[j];
                    }
                }
            }
        }
        let mut dw = vec![0.0; d * d];
        gemm_tn(&du, x.data(), b * t, d, d, &mut dw);
        let mut dx = vec![0.0; b * t * d];
        gemm_nn(&du, self.w.data(), b * t, d, d, &mut dx);
        for bi in 0..b {
            let row = (bi * t + self.query_index) * d;
            let dqb = &dq[bi * d..(bi + 1) * d];
            outer_acc(&mut dw, dqb, &x.data()[row..row + d]);
            matvec_t_acc(self.w.data(), dqb, d, d, &mut dx[row..row + d]);
        }
        Ok(LayerGrads {
            input: Tensor::new(x.shape().to_vec(), dx)?,
            params: vec![Tensor::new(vec![d, d], dw)?],
        })
    }

    fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("w", &self.w)]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w]
    }
}
