use ndarray::{Array1, Array2, Array3, Array4, ArrayD, ArrayView3, Axis, Ix1, Ix4, IxDyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{Layer, Param};

/// Spatial output size of a convolution: floor((n + 2p - k) / s) + 1.
pub fn conv_out_size(n: usize, k: usize, s: usize, p: usize) -> Option<usize> {
    (n + 2 * p).checked_sub(k).map(|d| d / s + 1)
}

/// Unfold one (C, H, W) sample into a (C*k*k, OH*OW) matrix, zero padding.
fn im2col<F: Scalar>(x: &ArrayView3<F>, k: usize, s: usize, p: usize) -> Array2<F> {
    let (c, h, w) = x.dim();
    let oh = conv_out_size(h, k, s, p).unwrap();
    let ow = conv_out_size(w, k, s, p).unwrap();
    let mut cols = Array2::zeros((c * k * k, oh * ow));
    for ci in 0..c {
        for ki in 0..k {
            for kj in 0..k {
                let row = (ci * k + ki) * k + kj;
                let mut row_view = cols.row_mut(row);
                let out = row_view.as_slice_mut().unwrap();
                for oi in 0..oh {
                    let ii = (oi * s + ki) as isize - p as isize;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    for oj in 0..ow {
                        let jj = (oj * s + kj) as isize - p as isize;
                        if jj < 0 || jj >= w as isize {
                            continue;
                        }
                        out[oi * ow + oj] = x[[ci, ii as usize, jj as usize]];
                    }
                }
            }
        }
    }
    cols
}

/// Fold a (C*k*k, OH*OW) matrix back onto a (C, H, W) sample, accumulating
/// overlaps. Exact adjoint of `im2col`.
fn col2im<F: Scalar>(
    cols: &Array2<F>,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    s: usize,
    p: usize,
) -> Array3<F> {
    let oh = conv_out_size(h, k, s, p).unwrap();
    let ow = conv_out_size(w, k, s, p).unwrap();
    let mut x = Array3::zeros((c, h, w));
    for ci in 0..c {
        for ki in 0..k {
            for kj in 0..k {
                let row = (ci * k + ki) * k + kj;
                let row_view = cols.row(row);
                let src = row_view.as_slice().unwrap();
                for oi in 0..oh {
                    let ii = (oi * s + ki) as isize - p as isize;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    for oj in 0..ow {
                        let jj = (oj * s + kj) as isize - p as isize;
                        if jj < 0 || jj >= w as isize {
                            continue;
                        }
                        x[[ci, ii as usize, jj as usize]] += src[oi * ow + oj];
                    }
                }
            }
        }
    }
    x
}

fn sampled_weights<F: Scalar, R: Rng>(shape: &[usize], std: f64, rng: &mut R) -> Param<F> {
    let std = F::of_f64(std);
    let value = ArrayD::from_shape_simple_fn(IxDyn(shape), || F::standard_normal(rng) * std);
    Param::new(value)
}

struct ConvCache<F: Scalar> {
    cols: Vec<Array2<F>>,
    in_h: usize,
    in_w: usize,
}

/// 2-D convolution with bias and zero padding.
pub struct Conv2d<F: Scalar> {
    pub w: Param<F>, // (out_c, in_c, k, k)
    pub b: Param<F>, // (out_c,)
    in_c: usize,
    out_c: usize,
    k: usize,
    stride: usize,
    pad: usize,
    cache: Vec<ConvCache<F>>,
}

impl<F: Scalar> Conv2d<F> {
    pub fn new<R: Rng>(
        in_c: usize,
        out_c: usize,
        k: usize,
        stride: usize,
        pad: usize,
        init_std: f64,
        rng: &mut R,
    ) -> Self {
        Conv2d {
            w: sampled_weights(&[out_c, in_c, k, k], init_std, rng),
            b: Param::new(ArrayD::zeros(IxDyn(&[out_c]))),
            in_c,
            out_c,
            k,
            stride,
            pad,
            cache: Vec::new(),
        }
    }
}

impl<F: Scalar> Layer<F> for Conv2d<F> {
    fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>> {
        let (n, c, h, w) = x.dim();
        if c != self.in_c {
            return Err(Error::shape(
                format!("{} input channels", self.in_c),
                format!("{c} channels"),
            ));
        }
        let oh = conv_out_size(h, self.k, self.stride, self.pad)
            .filter(|&v| v > 0)
            .ok_or_else(|| {
                Error::shape(
                    format!("input height >= {} after padding {}", self.k, self.pad),
                    format!("height {h}"),
                )
            })?;
        let ow = conv_out_size(w, self.k, self.stride, self.pad)
            .filter(|&v| v > 0)
            .ok_or_else(|| {
                Error::shape(
                    format!("input width >= {} after padding {}", self.k, self.pad),
                    format!("width {w}"),
                )
            })?;

        let w_view = self.w.value.view().into_dimensionality::<Ix4>().unwrap();
        let w_mat = w_view
            .to_shape((self.out_c, self.in_c * self.k * self.k))
            .unwrap();
        let bias = self.b.value.view().into_dimensionality::<Ix1>().unwrap();

        let mut y = Array4::zeros((n, self.out_c, oh, ow));
        let mut cols_cache = Vec::new();
        for i in 0..n {
            let cols = im2col(&x.index_axis(Axis(0), i), self.k, self.stride, self.pad);
            let out = w_mat.dot(&cols);
            let mut slot = y.index_axis_mut(Axis(0), i);
            for (ci, mut plane) in slot.outer_iter_mut().enumerate() {
                let row = out.row(ci);
                let src = row.as_slice().unwrap();
                let dst = plane.as_slice_mut().unwrap();
                let b = bias[ci];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = *s + b;
                }
            }
            if cache {
                cols_cache.push(cols);
            }
        }
        if cache {
            self.cache.push(ConvCache {
                cols: cols_cache,
                in_h: h,
                in_w: w,
            });
        }
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F> {
        let cached = self.cache.pop().expect("conv backward without forward");
        let (n, oc, oh, ow) = grad_out.dim();
        debug_assert_eq!(oc, self.out_c);
        let kk = self.in_c * self.k * self.k;

        let w_view = self.w.value.view().into_dimensionality::<Ix4>().unwrap();
        let w_mat = w_view.to_shape((self.out_c, kk)).unwrap();

        let mut gw = Array2::<F>::zeros((self.out_c, kk));
        let mut gb = Array1::<F>::zeros(self.out_c);
        let mut gx = Array4::zeros((n, self.in_c, cached.in_h, cached.in_w));
        for i in 0..n {
            let g = grad_out.index_axis(Axis(0), i);
            let g_mat = g.to_shape((oc, oh * ow)).unwrap();
            gw = gw + g_mat.dot(&cached.cols[i].t());
            gb = gb + g_mat.sum_axis(Axis(1));
            let g_cols = w_mat.t().dot(&g_mat);
            let gxi = col2im(
                &g_cols,
                self.in_c,
                cached.in_h,
                cached.in_w,
                self.k,
                self.stride,
                self.pad,
            );
            gx.index_axis_mut(Axis(0), i).assign(&gxi);
        }
        let gw = gw
            .into_shape_with_order(IxDyn(&[self.out_c, self.in_c, self.k, self.k]))
            .unwrap();
        self.w.grad += &gw;
        self.b.grad += &gb.into_dyn();
        gx
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param<F>)) {
        f(&mut self.w);
        f(&mut self.b);
    }

    fn clear_cache(&mut self) {
        self.cache.clear();
    }
}

struct ConvTCache<F: Scalar> {
    x_mats: Vec<Array2<F>>,
    in_h: usize,
    in_w: usize,
}

/// 2-D transposed convolution (fractionally-strided upsampler) with bias.
pub struct ConvTranspose2d<F: Scalar> {
    pub w: Param<F>, // (in_c, out_c, k, k)
    pub b: Param<F>, // (out_c,)
    in_c: usize,
    out_c: usize,
    k: usize,
    stride: usize,
    pad: usize,
    out_pad: usize,
    cache: Vec<ConvTCache<F>>,
}

impl<F: Scalar> ConvTranspose2d<F> {
    pub fn new<R: Rng>(
        in_c: usize,
        out_c: usize,
        k: usize,
        stride: usize,
        pad: usize,
        out_pad: usize,
        init_std: f64,
        rng: &mut R,
    ) -> Self {
        assert!(out_pad < stride, "output padding must be < stride");
        ConvTranspose2d {
            w: sampled_weights(&[in_c, out_c, k, k], init_std, rng),
            b: Param::new(ArrayD::zeros(IxDyn(&[out_c]))),
            in_c,
            out_c,
            k,
            stride,
            pad,
            out_pad,
            cache: Vec::new(),
        }
    }

    fn out_size(&self, n: usize) -> usize {
        (n - 1) * self.stride + self.k + self.out_pad - 2 * self.pad
    }
}

impl<F: Scalar> Layer<F> for ConvTranspose2d<F> {
    fn forward(&mut self, x: &Array4<F>, cache: bool) -> Result<Array4<F>> {
        let (n, c, h, w) = x.dim();
        if c != self.in_c {
            return Err(Error::shape(
                format!("{} input channels", self.in_c),
                format!("{c} channels"),
            ));
        }
        let (oh, ow) = (self.out_size(h), self.out_size(w));
        let w_view = self.w.value.view().into_dimensionality::<Ix4>().unwrap();
        let w_mat = w_view
            .to_shape((self.in_c, self.out_c * self.k * self.k))
            .unwrap();
        let bias = self.b.value.view().into_dimensionality::<Ix1>().unwrap();

        let mut y = Array4::zeros((n, self.out_c, oh, ow));
        let mut x_mats = Vec::new();
        for i in 0..n {
            let xi = x.index_axis(Axis(0), i);
            let x_mat = xi.to_shape((self.in_c, h * w)).unwrap().into_owned();
            let cols = w_mat.t().dot(&x_mat); // (out_c*k*k, h*w)
            let mut yi = y.index_axis_mut(Axis(0), i);
            for ci in 0..self.out_c {
                for ki in 0..self.k {
                    for kj in 0..self.k {
                        let row = (ci * self.k + ki) * self.k + kj;
                        let row_view = cols.row(row);
                        let src = row_view.as_slice().unwrap();
                        for ii in 0..h {
                            let oi = (ii * self.stride + ki) as isize - self.pad as isize;
                            if oi < 0 || oi >= oh as isize {
                                continue;
                            }
                            for jj in 0..w {
                                let oj = (jj * self.stride + kj) as isize - self.pad as isize;
                                if oj < 0 || oj >= ow as isize {
                                    continue;
                                }
                                yi[[ci, oi as usize, oj as usize]] += src[ii * w + jj];
                            }
                        }
                    }
                }
            }
            for (ci, mut plane) in yi.outer_iter_mut().enumerate() {
                plane += bias[ci];
            }
            if cache {
                x_mats.push(x_mat);
            }
        }
        if cache {
            self.cache.push(ConvTCache {
                x_mats,
                in_h: h,
                in_w: w,
            });
        }
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Array4<F>) -> Array4<F> {
        let cached = self.cache.pop().expect("convT backward without forward");
        let (n, _, oh, ow) = grad_out.dim();
        let (h, w) = (cached.in_h, cached.in_w);
        let kk = self.out_c * self.k * self.k;

        let w_view = self.w.value.view().into_dimensionality::<Ix4>().unwrap();
        let w_mat = w_view.to_shape((self.in_c, kk)).unwrap();

        let mut gw = Array2::<F>::zeros((self.in_c, kk));
        let mut gb = Array1::<F>::zeros(self.out_c);
        let mut gx = Array4::zeros((n, self.in_c, h, w));
        for i in 0..n {
            let g = grad_out.index_axis(Axis(0), i);
            // Gather grad_out at each scatter target: adjoint of the forward
            // scatter, laid out like im2col over the input grid.
            let mut g_cols = Array2::<F>::zeros((kk, h * w));
            for ci in 0..self.out_c {
                for ki in 0..self.k {
                    for kj in 0..self.k {
                        let row = (ci * self.k + ki) * self.k + kj;
                        let mut row_view = g_cols.row_mut(row);
                        let dst = row_view.as_slice_mut().unwrap();
                        for ii in 0..h {
                            let oi = (ii * self.stride + ki) as isize - self.pad as isize;
                            if oi < 0 || oi >= oh as isize {
                                continue;
                            }
                            for jj in 0..w {
                                let oj = (jj * self.stride + kj) as isize - self.pad as isize;
                                if oj < 0 || oj >= ow as isize {
                                    continue;
                                }
                                dst[ii * w + jj] = g[[ci, oi as usize, oj as usize]];
                            }
                        }
                    }
                }
            }
            gw = gw + cached.x_mats[i].dot(&g_cols.t());
            for (ci, plane) in g.outer_iter().enumerate() {
                gb[ci] += plane.sum();
            }
            let gx_mat = w_mat.dot(&g_cols); // (in_c, h*w)
            let gxi = gx_mat.into_shape_with_order((self.in_c, h, w)).unwrap();
            gx.index_axis_mut(Axis(0), i).assign(&gxi);
        }
        let gw = gw
            .into_shape_with_order(IxDyn(&[self.in_c, self.out_c, self.k, self.k]))
            .unwrap();
        self.w.grad += &gw;
        self.b.grad += &gb.into_dyn();
        gx
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Param<F>)) {
        f(&mut self.w);
        f(&mut self.b);
    }

    fn clear_cache(&mut self) {
        self.cache.clear();
    }
}
