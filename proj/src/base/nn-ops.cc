// base/nn-ops.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "base/nn-ops.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "base/error.h"
#include "base/gemm.h"

namespace csfnet {
namespace ops {

namespace {

struct ConvDims {
  int64_t n, cin, h, w, cout, ho, wo, k, p;
};

// Row r = (c * kh + i) * kw + j of col holds the input pixels seen by kernel
// tap (i, j) of channel c, one column per output position.
template <typename S>
void Im2Col(const double* x, const ConvDims& d, const Conv2dGeometry& g,
            S* col) {
  for (int64_t c = 0; c < d.cin; ++c)
    for (int64_t i = 0; i < g.kernel_h; ++i)
      for (int64_t j = 0; j < g.kernel_w; ++j) {
        S* dst = col + ((c * g.kernel_h + i) * g.kernel_w + j) * d.p;
        const int64_t dy = i * g.dilation_h - g.pad_h;
        const int64_t dx = j * g.dilation_w - g.pad_w;
        const int64_t lo = std::clamp<int64_t>(-dx, 0, d.wo);
        const int64_t hi = std::clamp<int64_t>(d.w - dx, 0, d.wo);
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          S* row = dst + oy * d.wo;
          const int64_t iy = oy + dy;
          if (iy < 0 || iy >= d.h) {
            std::fill(row, row + d.wo, S(0));
            continue;
          }
          const double* src = x + (c * d.h + iy) * d.w + dx;
          std::fill(row, row + lo, S(0));
          for (int64_t ox = lo; ox < hi; ++ox) row[ox] = static_cast<S>(src[ox]);
          std::fill(row + std::max(lo, hi), row + d.wo, S(0));
        }
      }
}

template <typename S>
void Col2ImAdd(const S* col, const ConvDims& d, const Conv2dGeometry& g,
               double* x) {
  for (int64_t c = 0; c < d.cin; ++c)
    for (int64_t i = 0; i < g.kernel_h; ++i)
      for (int64_t j = 0; j < g.kernel_w; ++j) {
        const S* src = col + ((c * g.kernel_h + i) * g.kernel_w + j) * d.p;
        const int64_t dy = i * g.dilation_h - g.pad_h;
        const int64_t dx = j * g.dilation_w - g.pad_w;
        const int64_t lo = std::clamp<int64_t>(-dx, 0, d.wo);
        const int64_t hi = std::clamp<int64_t>(d.w - dx, 0, d.wo);
        for (int64_t oy = 0; oy < d.ho; ++oy) {
          const int64_t iy = oy + dy;
          if (iy < 0 || iy >= d.h) continue;
          double* dst = x + (c * d.h + iy) * d.w + dx;
          const S* row = src + oy * d.wo;
          for (int64_t ox = lo; ox < hi; ++ox) dst[ox] += row[ox];
        }
      }
}

template <typename S>
void ConvForward(const Tensor& x, const Tensor& w, const ConvDims& d,
                 const Conv2dGeometry& g, Tensor* out) {
  std::vector<S> ws(w.data(), w.data() + w.numel());
  std::vector<S> col(d.k * d.p), res(d.cout * d.p);
  for (int64_t n = 0; n < d.n; ++n) {
    Im2Col<S>(x.data() + n * d.cin * d.h * d.w, d, g, col.data());
    GemmKernel<S>(false, false, d.cout, d.p, d.k, ws.data(), col.data(), S(0),
                  res.data());
    double* o = out->data() + n * d.cout * d.p;
    for (int64_t q = 0; q < d.cout * d.p; ++q) o[q] = res[q];
  }
}

template <typename S>
void ConvBackward(const Tensor& x, const Tensor& w, const Tensor& grad,
                  const ConvDims& d, const Conv2dGeometry& g, Tensor* gx,
                  Tensor* gw) {
  std::vector<S> ws(w.data(), w.data() + w.numel());
  std::vector<S> col(d.k * d.p), gs(d.cout * d.p), dw(d.cout * d.k, S(0));
  for (int64_t n = 0; n < d.n; ++n) {
    const double* gn = grad.data() + n * d.cout * d.p;
    for (int64_t q = 0; q < d.cout * d.p; ++q) gs[q] = static_cast<S>(gn[q]);
    if (gw) {
      Im2Col<S>(x.data() + n * d.cin * d.h * d.w, d, g, col.data());
      GemmKernel<S>(false, true, d.cout, d.k, d.p, gs.data(), col.data(), S(1),
                    dw.data());
    }
    if (gx) {
      GemmKernel<S>(true, false, d.k, d.p, d.cout, ws.data(), gs.data(), S(0),
                    col.data());
      Col2ImAdd<S>(col.data(), d, g, gx->data() + n * d.cin * d.h * d.w);
    }
  }
  if (gw)
    for (int64_t q = 0; q < d.cout * d.k; ++q) (*gw)[q] += dw[q];
}

double Sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Var Conv2d(const Var& x, const Var& weight, const Var& bias,
           const Conv2dGeometry& geom) {
  CSF_CHECK_INPUT(x.value().ndim() == 4, "Conv2d expects [N, C, H, W], got ",
                  ShapeString(x.shape()));
  CSF_CHECK_INPUT(weight.value().ndim() == 4 && weight.dim(1) == x.dim(1) &&
                      weight.dim(2) == geom.kernel_h &&
                      weight.dim(3) == geom.kernel_w,
                  "Conv2d weight ", ShapeString(weight.shape()),
                  " incompatible with input ", ShapeString(x.shape()));
  ConvDims d;
  d.n = x.dim(0);
  d.cin = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.cout = weight.dim(0);
  d.ho = d.h + 2 * geom.pad_h - geom.dilation_h * (geom.kernel_h - 1);
  d.wo = d.w + 2 * geom.pad_w - geom.dilation_w * (geom.kernel_w - 1);
  CSF_CHECK_INPUT(d.ho > 0 && d.wo > 0, "Conv2d output would be empty for ",
                  ShapeString(x.shape()));
  d.k = d.cin * geom.kernel_h * geom.kernel_w;
  d.p = d.ho * d.wo;

  Tensor out(Shape{d.n, d.cout, d.ho, d.wo});
  if (MatmulPrecision() == Precision::kFloat64)
    ConvForward<double>(x.value(), weight.value(), d, geom, &out);
  else
    ConvForward<float>(x.value(), weight.value(), d, geom, &out);
  const bool has_bias = bias.defined();
  if (has_bias) {
    CSF_CHECK_INPUT(bias.numel() == d.cout, "Conv2d bias size mismatch");
    for (int64_t n = 0; n < d.n; ++n)
      for (int64_t c = 0; c < d.cout; ++c) {
        double* o = out.data() + (n * d.cout + c) * d.p;
        const double b = bias.value()[c];
        for (int64_t q = 0; q < d.p; ++q) o[q] += b;
      }
  }
  std::vector<Var> inputs = {x, weight};
  if (has_bias) inputs.push_back(bias);
  return MakeResult(std::move(out), std::move(inputs),
                    [d, geom, has_bias](Node& self) {
    const Tensor& xv = self.inputs[0]->value;
    const Tensor& wv = self.inputs[1]->value;
    Tensor* gx = self.InputGrad(0);
    Tensor* gw = self.InputGrad(1);
    if (gx || gw) {
      if (MatmulPrecision() == Precision::kFloat64)
        ConvBackward<double>(xv, wv, self.grad, d, geom, gx, gw);
      else
        ConvBackward<float>(xv, wv, self.grad, d, geom, gx, gw);
    }
    if (has_bias) {
      if (Tensor* gb = self.InputGrad(2)) {
        for (int64_t n = 0; n < d.n; ++n)
          for (int64_t c = 0; c < d.cout; ++c) {
            const double* g = self.grad.data() + (n * d.cout + c) * d.p;
            double acc = 0.0;
            for (int64_t q = 0; q < d.p; ++q) acc += g[q];
            (*gb)[c] += acc;
          }
      }
    }
  }, "Conv2d");
}

Var MaxPool2x2(const Var& x) {
  CSF_CHECK_INPUT(x.value().ndim() == 4, "MaxPool2x2 expects [N, C, H, W]");
  const int64_t planes = x.dim(0) * x.dim(1);
  const int64_t h = x.dim(2), w = x.dim(3), ho = h / 2, wo = w / 2;
  CSF_CHECK_INPUT(ho > 0 && wo > 0, "MaxPool2x2 input too small");
  Tensor out(Shape{x.dim(0), x.dim(1), ho, wo});
  std::vector<int64_t> argmax(out.numel());
  const double* src = x.value().data();
  for (int64_t pl = 0; pl < planes; ++pl)
    for (int64_t oy = 0; oy < ho; ++oy)
      for (int64_t ox = 0; ox < wo; ++ox) {
        int64_t best = pl * h * w + (2 * oy) * w + 2 * ox;
        for (int64_t dy = 0; dy < 2; ++dy)
          for (int64_t dx = 0; dx < 2; ++dx) {
            const int64_t idx = pl * h * w + (2 * oy + dy) * w + 2 * ox + dx;
            if (src[idx] > src[best]) best = idx;
          }
        const int64_t o = (pl * ho + oy) * wo + ox;
        out[o] = src[best];
        argmax[o] = best;
      }
  return MakeResult(std::move(out), {x}, [argmax = std::move(argmax)](Node& self) {
    if (Tensor* g = self.InputGrad(0))
      for (size_t o = 0; o < argmax.size(); ++o) (*g)[argmax[o]] += self.grad[o];
  }, "MaxPool2x2");
}

namespace {

// Shared backward for affine normalizations: given dy, xhat and the
// per-element gamma, accumulates dx for one normalization set of m
// elements addressed through idx(k).
template <typename Index>
void NormalizeBackward(int64_t m, double inv_std, const double* dy,
                       const double* xhat, const double* gamma_of, Index idx,
                       double* dx) {
  double mean_g = 0.0, mean_gx = 0.0;
  for (int64_t k = 0; k < m; ++k) {
    const int64_t e = idx(k);
    const double g = dy[e] * gamma_of[k];
    mean_g += g;
    mean_gx += g * xhat[e];
  }
  mean_g /= m;
  mean_gx /= m;
  for (int64_t k = 0; k < m; ++k) {
    const int64_t e = idx(k);
    const double g = dy[e] * gamma_of[k];
    dx[e] += inv_std * (g - mean_g - xhat[e] * mean_gx);
  }
}

}  // namespace

Var GroupNorm(const Var& x, int64_t groups, const Var& gamma, const Var& beta,
              double eps) {
  CSF_CHECK_INPUT(x.value().ndim() >= 1, "GroupNorm of a scalar");
  const int64_t c = x.dim(0);
  const int64_t p = x.numel() / c;
  CSF_CHECK_CONFIG(groups > 0 && c % groups == 0, "GroupNorm: ", groups,
                   " groups do not divide ", c, " channels");
  CSF_CHECK_INPUT(gamma.numel() == c && beta.numel() == c,
                  "GroupNorm affine size mismatch");
  const int64_t cg = c / groups;
  const int64_t m = cg * p;
  Tensor xhat(x.shape());
  Tensor out(x.shape());
  std::vector<double> inv_std(groups);
  const double* xv = x.value().data();
  for (int64_t gi = 0; gi < groups; ++gi) {
    const int64_t base = gi * m;
    double mean = 0.0;
    for (int64_t k = 0; k < m; ++k) mean += xv[base + k];
    mean /= m;
    double var = 0.0;
    for (int64_t k = 0; k < m; ++k) {
      const double dv = xv[base + k] - mean;
      var += dv * dv;
    }
    var /= m;
    inv_std[gi] = 1.0 / std::sqrt(var + eps);
    for (int64_t k = 0; k < m; ++k) {
      const int64_t e = base + k;
      const int64_t ch = e / p;
      xhat[e] = (xv[e] - mean) * inv_std[gi];
      out[e] = xhat[e] * gamma.value()[ch] + beta.value()[ch];
    }
  }
  return MakeResult(std::move(out), {x, gamma, beta},
                    [xhat = std::move(xhat), inv_std, groups, c, p, cg,
                     m](Node& self) {
    const Tensor& gam = self.inputs[1]->value;
    if (Tensor* gx = self.InputGrad(0)) {
      std::vector<double> gamma_of(m);
      for (int64_t gi = 0; gi < groups; ++gi) {
        const int64_t base = gi * m;
        for (int64_t k = 0; k < m; ++k) gamma_of[k] = gam[(base + k) / p];
        NormalizeBackward(m, inv_std[gi], self.grad.data(), xhat.data(),
                          gamma_of.data(), [base](int64_t k) { return base + k; },
                          gx->data());
      }
    }
    Tensor* gg = self.InputGrad(1);
    Tensor* gb = self.InputGrad(2);
    if (gg || gb) {
      for (int64_t ch = 0; ch < c; ++ch) {
        double sg = 0.0, sb = 0.0;
        for (int64_t q = 0; q < p; ++q) {
          const int64_t e = ch * p + q;
          sg += self.grad[e] * xhat[e];
          sb += self.grad[e];
        }
        if (gg) (*gg)[ch] += sg;
        if (gb) (*gb)[ch] += sb;
      }
    }
    (void)cg;
  }, "GroupNorm");
}

Var LayerNormFirstDim(const Var& x, const Var& gamma, const Var& beta,
                      double eps) {
  CSF_CHECK_INPUT(x.value().ndim() == 2, "LayerNormFirstDim expects [D, P]");
  const int64_t d = x.dim(0), p = x.dim(1);
  CSF_CHECK_INPUT(gamma.numel() == d && beta.numel() == d,
                  "LayerNormFirstDim affine size mismatch");
  Tensor xhat(x.shape()), out(x.shape());
  std::vector<double> mean(p, 0.0), var(p, 0.0), inv_std(p);
  const double* xv = x.value().data();
  for (int64_t k = 0; k < d; ++k)
    for (int64_t q = 0; q < p; ++q) mean[q] += xv[k * p + q];
  for (int64_t q = 0; q < p; ++q) mean[q] /= d;
  for (int64_t k = 0; k < d; ++k)
    for (int64_t q = 0; q < p; ++q) {
      const double dv = xv[k * p + q] - mean[q];
      var[q] += dv * dv;
    }
  for (int64_t q = 0; q < p; ++q) inv_std[q] = 1.0 / std::sqrt(var[q] / d + eps);
  for (int64_t k = 0; k < d; ++k) {
    const double g = gamma.value()[k], b = beta.value()[k];
    for (int64_t q = 0; q < p; ++q) {
      const int64_t e = k * p + q;
      xhat[e] = (xv[e] - mean[q]) * inv_std[q];
      out[e] = xhat[e] * g + b;
    }
  }
  return MakeResult(std::move(out), {x, gamma, beta},
                    [xhat = std::move(xhat), inv_std, d, p](Node& self) {
    const Tensor& gam = self.inputs[1]->value;
    const double* dy = self.grad.data();
    if (Tensor* gx = self.InputGrad(0)) {
      std::vector<double> mg(p, 0.0), mgx(p, 0.0);
      for (int64_t k = 0; k < d; ++k)
        for (int64_t q = 0; q < p; ++q) {
          const int64_t e = k * p + q;
          const double g = dy[e] * gam[k];
          mg[q] += g;
          mgx[q] += g * xhat[e];
        }
      for (int64_t k = 0; k < d; ++k)
        for (int64_t q = 0; q < p; ++q) {
          const int64_t e = k * p + q;
          const double g = dy[e] * gam[k];
          (*gx)[e] += inv_std[q] * (g - mg[q] / d - xhat[e] * mgx[q] / d);
        }
    }
    Tensor* gg = self.InputGrad(1);
    Tensor* gb = self.InputGrad(2);
    if (gg || gb)
      for (int64_t k = 0; k < d; ++k) {
        double sg = 0.0, sb = 0.0;
        for (int64_t q = 0; q < p; ++q) {
          sg += dy[k * p + q] * xhat[k * p + q];
          sb += dy[k * p + q];
        }
        if (gg) (*gg)[k] += sg;
        if (gb) (*gb)[k] += sb;
      }
  }, "LayerNormFirstDim");
}

Var LayerNormLastDim(const Var& x, const Var& gamma, const Var& beta,
                     double eps) {
  CSF_CHECK_INPUT(x.value().ndim() == 2, "LayerNormLastDim expects [R, D]");
  const int64_t r = x.dim(0), d = x.dim(1);
  CSF_CHECK_INPUT(gamma.numel() == d && beta.numel() == d,
                  "LayerNormLastDim affine size mismatch");
  Tensor xhat(x.shape()), out(x.shape());
  std::vector<double> inv_std(r);
  const double* xv = x.value().data();
  for (int64_t i = 0; i < r; ++i) {
    const double* row = xv + i * d;
    double mean = 0.0;
    for (int64_t k = 0; k < d; ++k) mean += row[k];
    mean /= d;
    double var = 0.0;
    for (int64_t k = 0; k < d; ++k) var += (row[k] - mean) * (row[k] - mean);
    inv_std[i] = 1.0 / std::sqrt(var / d + eps);
    for (int64_t k = 0; k < d; ++k) {
      xhat[i * d + k] = (row[k] - mean) * inv_std[i];
      out[i * d + k] = xhat[i * d + k] * gamma.value()[k] + beta.value()[k];
    }
  }
  return MakeResult(std::move(out), {x, gamma, beta},
                    [xhat = std::move(xhat), inv_std, r, d](Node& self) {
    const double* gam = self.inputs[1]->value.data();
    if (Tensor* gx = self.InputGrad(0))
      for (int64_t i = 0; i < r; ++i)
        NormalizeBackward(d, inv_std[i], self.grad.data(), xhat.data(), gam,
                          [i, d](int64_t k) { return i * d + k; }, gx->data());
    Tensor* gg = self.InputGrad(1);
    Tensor* gb = self.InputGrad(2);
    if (gg || gb)
      for (int64_t i = 0; i < r; ++i)
        for (int64_t k = 0; k < d; ++k) {
          const double g = self.grad[i * d + k];
          if (gg) (*gg)[k] += g * xhat[i * d + k];
          if (gb) (*gb)[k] += g;
        }
  }, "LayerNormLastDim");
}

Var BatchNorm2d(const Var& x, const Var& gamma, const Var& beta,
                Tensor* running_mean, Tensor* running_var, bool training,
                double momentum, double eps) {
  CSF_CHECK_INPUT(x.value().ndim() == 4, "BatchNorm2d expects [N, C, H, W]");
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const int64_t m = n * hw;
  CSF_CHECK_INPUT(gamma.numel() == c && beta.numel() == c &&
                      running_mean->numel() == c && running_var->numel() == c,
                  "BatchNorm2d parameter size mismatch");
  const double* xv = x.value().data();
  std::vector<double> mean(c, 0.0), inv_std(c);
  if (training) {
    CSF_CHECK_INPUT(m > 1, "BatchNorm2d training needs more than one value");
    std::vector<double> var(c, 0.0);
    for (int64_t b = 0; b < n; ++b)
      for (int64_t ch = 0; ch < c; ++ch) {
        const double* src = xv + (b * c + ch) * hw;
        for (int64_t q = 0; q < hw; ++q) mean[ch] += src[q];
      }
    for (int64_t ch = 0; ch < c; ++ch) mean[ch] /= m;
    for (int64_t b = 0; b < n; ++b)
      for (int64_t ch = 0; ch < c; ++ch) {
        const double* src = xv + (b * c + ch) * hw;
        for (int64_t q = 0; q < hw; ++q)
          var[ch] += (src[q] - mean[ch]) * (src[q] - mean[ch]);
      }
    for (int64_t ch = 0; ch < c; ++ch) {
      const double biased = var[ch] / m;
      inv_std[ch] = 1.0 / std::sqrt(biased + eps);
      (*running_mean)[ch] = (1 - momentum) * (*running_mean)[ch] + momentum * mean[ch];
      (*running_var)[ch] = (1 - momentum) * (*running_var)[ch] +
                           momentum * var[ch] / static_cast<double>(m - 1);
    }
  } else {
    for (int64_t ch = 0; ch < c; ++ch) {
      mean[ch] = (*running_mean)[ch];
      inv_std[ch] = 1.0 / std::sqrt((*running_var)[ch] + eps);
    }
  }
  Tensor xhat(x.shape()), out(x.shape());
  for (int64_t b = 0; b < n; ++b)
    for (int64_t ch = 0; ch < c; ++ch) {
      const int64_t base = (b * c + ch) * hw;
      const double g = gamma.value()[ch], bb = beta.value()[ch];
      for (int64_t q = 0; q < hw; ++q) {
        xhat[base + q] = (xv[base + q] - mean[ch]) * inv_std[ch];
        out[base + q] = xhat[base + q] * g + bb;
      }
    }
  return MakeResult(std::move(out), {x, gamma, beta},
                    [xhat = std::move(xhat), inv_std, training, n, c, hw,
                     m](Node& self) {
    const Tensor& gam = self.inputs[1]->value;
    const double* dy = self.grad.data();
    const double* xh = xhat.data();
    // Per-channel sums of dy and dy * xhat serve both the affine and the
    // input gradients.
    std::vector<double> sum_dy(c, 0.0), sum_dyx(c, 0.0);
    for (int64_t b = 0; b < n; ++b)
      for (int64_t ch = 0; ch < c; ++ch) {
        const int64_t base = (b * c + ch) * hw;
        double sg = 0.0, sb = 0.0;
        for (int64_t q = 0; q < hw; ++q) {
          sg += dy[base + q] * xh[base + q];
          sb += dy[base + q];
        }
        sum_dyx[ch] += sg;
        sum_dy[ch] += sb;
      }
    if (Tensor* gg = self.InputGrad(1))
      for (int64_t ch = 0; ch < c; ++ch) (*gg)[ch] += sum_dyx[ch];
    if (Tensor* gb = self.InputGrad(2))
      for (int64_t ch = 0; ch < c; ++ch) (*gb)[ch] += sum_dy[ch];
    if (!self.TracksInput(0)) return;
    // dx overwrites dy in place.
    double* dx = self.grad.data();
    for (int64_t b = 0; b < n; ++b)
      for (int64_t ch = 0; ch < c; ++ch) {
        const int64_t base = (b * c + ch) * hw;
        const double scale = gam[ch] * inv_std[ch];
        const double mg = training ? sum_dy[ch] / m : 0.0;
        const double mgx = training ? sum_dyx[ch] / m : 0.0;
        for (int64_t q = 0; q < hw; ++q)
          dx[base + q] = scale * (dx[base + q] - mg - xh[base + q] * mgx);
      }
    self.PassGrad(0, std::move(self.grad));
  }, "BatchNorm2d");
}

namespace {

// Per-direction recurrence state kept for the backward pass. Rows are
// indexed by time step s and batch b as s * B + b.
struct LstmTrace {
  std::vector<double> gates;  // [L*B, 4H] post-activation i, f, g, o
  std::vector<double> cell;   // [L*B, H]
  std::vector<double> hidden; // [L*B, H]
};

void LstmForwardDirection(const std::vector<double>& xl, int64_t l, int64_t b,
                          int64_t in, int64_t hd, const LstmDirectionParams& p,
                          bool reverse, LstmTrace* tr) {
  const int64_t g4 = 4 * hd;
  tr->gates.assign(l * b * g4, 0.0);
  tr->cell.assign(l * b * hd, 0.0);
  tr->hidden.assign(l * b * hd, 0.0);
  // Input projection for all steps at once.
  Gemm(false, true, l * b, g4, in, xl.data(), p.w_ih.value().data(), 0.0,
       tr->gates.data());
  const double* bias = p.bias.value().data();
  for (int64_t r = 0; r < l * b; ++r)
    for (int64_t j = 0; j < g4; ++j) tr->gates[r * g4 + j] += bias[j];

  // W_hh transposed to [H, 4H] so each step's recurrent product streams
  // over contiguous gate rows.
  std::vector<double> w_hh_t(hd * g4);
  const double* w_hh = p.w_hh.value().data();
  for (int64_t j = 0; j < g4; ++j)
    for (int64_t q = 0; q < hd; ++q) w_hh_t[q * g4 + j] = w_hh[j * hd + q];

  std::vector<double> zeros(b * hd, 0.0);
  for (int64_t k = 0; k < l; ++k) {
    const int64_t s = reverse ? l - 1 - k : k;
    const int64_t prev = reverse ? s + 1 : s - 1;
    const bool first = k == 0;
    const double* h_prev = first ? zeros.data() : tr->hidden.data() + prev * b * hd;
    const double* c_prev = first ? zeros.data() : tr->cell.data() + prev * b * hd;
    double* gates = tr->gates.data() + s * b * g4;
    if (!first)
      for (int64_t bi = 0; bi < b; ++bi) {
        double* gr = gates + bi * g4;
        for (int64_t q = 0; q < hd; ++q) {
          const double hq = h_prev[bi * hd + q];
          const double* wr = w_hh_t.data() + q * g4;
          for (int64_t j = 0; j < g4; ++j) gr[j] += hq * wr[j];
        }
      }
    double* c = tr->cell.data() + s * b * hd;
    double* h = tr->hidden.data() + s * b * hd;
    for (int64_t bi = 0; bi < b; ++bi) {
      double* gr = gates + bi * g4;
      for (int64_t j = 0; j < hd; ++j) {
        const double ig = Sigmoid(gr[j]);
        const double fg = Sigmoid(gr[hd + j]);
        const double gg = std::tanh(gr[2 * hd + j]);
        const double og = Sigmoid(gr[3 * hd + j]);
        gr[j] = ig;
        gr[hd + j] = fg;
        gr[2 * hd + j] = gg;
        gr[3 * hd + j] = og;
        const double cv = fg * c_prev[bi * hd + j] + ig * gg;
        c[bi * hd + j] = cv;
        h[bi * hd + j] = og * std::tanh(cv);
      }
    }
  }
}

// dy_l: [L*B, H] upstream gradient for this direction's hidden states.
void LstmBackwardDirection(const std::vector<double>& xl,
                           const std::vector<double>& dy_l, int64_t l,
                           int64_t b, int64_t in, int64_t hd,
                           const LstmDirectionParams& p, bool reverse,
                           const LstmTrace& tr, Node& self, size_t wi,
                           std::vector<double>* dxl) {
  const int64_t g4 = 4 * hd;
  std::vector<double> da(l * b * g4, 0.0);
  std::vector<double> h_prev_all(l * b * hd, 0.0);
  std::vector<double> dh_next(b * hd, 0.0), dc_next(b * hd, 0.0);
  const double* w_hh = p.w_hh.value().data();
  for (int64_t k = l - 1; k >= 0; --k) {
    const int64_t s = reverse ? l - 1 - k : k;
    const int64_t prev = reverse ? s + 1 : s - 1;
    const bool first = k == 0;
    const double* gates = tr.gates.data() + s * b * g4;
    const double* c = tr.cell.data() + s * b * hd;
    double* das = da.data() + s * b * g4;
    for (int64_t bi = 0; bi < b; ++bi)
      for (int64_t j = 0; j < hd; ++j) {
        const int64_t e = bi * hd + j;
        const double ig = gates[bi * g4 + j];
        const double fg = gates[bi * g4 + hd + j];
        const double gg = gates[bi * g4 + 2 * hd + j];
        const double og = gates[bi * g4 + 3 * hd + j];
        const double cp = first ? 0.0 : tr.cell[prev * b * hd + e];
        const double tc = std::tanh(c[e]);
        const double dh = dy_l[s * b * hd + e] + dh_next[e];
        const double d_o = dh * tc;
        const double dc = dh * og * (1.0 - tc * tc) + dc_next[e];
        das[bi * g4 + j] = dc * gg * ig * (1.0 - ig);
        das[bi * g4 + hd + j] = dc * cp * fg * (1.0 - fg);
        das[bi * g4 + 2 * hd + j] = dc * ig * (1.0 - gg * gg);
        das[bi * g4 + 3 * hd + j] = d_o * og * (1.0 - og);
        dc_next[e] = dc * fg;
        if (!first) h_prev_all[s * b * hd + e] = tr.hidden[prev * b * hd + e];
      }
    if (!first) {
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      for (int64_t bi = 0; bi < b; ++bi) {
        double* dh = dh_next.data() + bi * hd;
        for (int64_t j = 0; j < g4; ++j) {
          const double d = das[bi * g4 + j];
          const double* wr = w_hh + j * hd;
          for (int64_t q = 0; q < hd; ++q) dh[q] += d * wr[q];
        }
      }
    }
  }
  if (Tensor* g = self.InputGrad(wi))  // w_ih
    Gemm(true, false, g4, in, l * b, da.data(), xl.data(), 1.0, g->data());
  if (Tensor* g = self.InputGrad(wi + 1))  // w_hh
    Gemm(true, false, g4, hd, l * b, da.data(), h_prev_all.data(), 1.0, g->data());
  if (Tensor* g = self.InputGrad(wi + 2))  // bias
    for (int64_t r = 0; r < l * b; ++r)
      for (int64_t j = 0; j < g4; ++j) (*g)[j] += da[r * g4 + j];
  if (dxl)
    Gemm(false, false, l * b, in, g4, da.data(), p.w_ih.value().data(), 1.0,
         dxl->data());
}

}  // namespace

Var BiLstm(const Var& x, const LstmDirectionParams& fwd,
           const LstmDirectionParams& bwd) {
  CSF_CHECK_INPUT(x.value().ndim() == 3, "BiLstm expects [B, L, In]");
  const int64_t b = x.dim(0), l = x.dim(1), in = x.dim(2);
  const int64_t hd = fwd.w_hh.dim(1);
  for (const LstmDirectionParams* p : {&fwd, &bwd}) {
    CSF_CHECK_INPUT(p->w_ih.dim(0) == 4 * hd && p->w_ih.dim(1) == in &&
                        p->w_hh.dim(0) == 4 * hd && p->w_hh.dim(1) == hd &&
                        p->bias.numel() == 4 * hd,
                    "BiLstm parameter shapes do not match input width ", in);
  }
  // Time-major copy so each step's batch rows are contiguous.
  auto to_time_major = [b, l](const double* src, int64_t width) {
    std::vector<double> out(l * b * width);
    for (int64_t bi = 0; bi < b; ++bi)
      for (int64_t s = 0; s < l; ++s)
        std::copy(src + (bi * l + s) * width, src + (bi * l + s + 1) * width,
                  out.data() + (s * b + bi) * width);
    return out;
  };
  std::vector<double> xl = to_time_major(x.value().data(), in);
  auto tf = std::make_shared<LstmTrace>();
  auto tb = std::make_shared<LstmTrace>();
  LstmForwardDirection(xl, l, b, in, hd, fwd, false, tf.get());
  LstmForwardDirection(xl, l, b, in, hd, bwd, true, tb.get());

  Tensor out(Shape{b, l, 2 * hd});
  for (int64_t bi = 0; bi < b; ++bi)
    for (int64_t s = 0; s < l; ++s) {
      double* o = out.data() + (bi * l + s) * 2 * hd;
      std::copy_n(tf->hidden.data() + (s * b + bi) * hd, hd, o);
      std::copy_n(tb->hidden.data() + (s * b + bi) * hd, hd, o + hd);
    }
  if (!GradEnabled()) return Var(std::move(out));
  return MakeResult(
      std::move(out),
      {x, fwd.w_ih, fwd.w_hh, fwd.bias, bwd.w_ih, bwd.w_hh, bwd.bias},
      [xl = std::move(xl), tf, tb, fwd, bwd, b, l, in, hd](Node& self) {
        std::vector<double> dyf(l * b * hd), dyb(l * b * hd);
        for (int64_t bi = 0; bi < b; ++bi)
          for (int64_t s = 0; s < l; ++s) {
            const double* g = self.grad.data() + (bi * l + s) * 2 * hd;
            std::copy_n(g, hd, dyf.data() + (s * b + bi) * hd);
            std::copy_n(g + hd, hd, dyb.data() + (s * b + bi) * hd);
          }
        Tensor* gx = self.InputGrad(0);
        std::vector<double> dxl;
        if (gx) dxl.assign(l * b * in, 0.0);
        LstmBackwardDirection(xl, dyf, l, b, in, hd, fwd, false, *tf, self, 1,
                              gx ? &dxl : nullptr);
        LstmBackwardDirection(xl, dyb, l, b, in, hd, bwd, true, *tb, self, 4,
                              gx ? &dxl : nullptr);
        if (gx)
          for (int64_t bi = 0; bi < b; ++bi)
            for (int64_t s = 0; s < l; ++s) {
              const double* src = dxl.data() + (s * b + bi) * in;
              double* dst = gx->data() + (bi * l + s) * in;
              for (int64_t q = 0; q < in; ++q) dst[q] += src[q];
            }
      },
      "BiLstm");
}

UnfoldGeometry ComputeUnfoldGeometry(int64_t length, int64_t window,
                                     int64_t stride) {
  CSF_CHECK_INPUT(window >= 1 && stride >= 1, "unfold window ", window,
                  " and stride ", stride, " must be >= 1");
  CSF_CHECK_INPUT(length >= 1, "unfold of an empty axis");
  UnfoldGeometry g;
  g.length = length;
  g.padded = std::max(length, window);
  const int64_t rem = (g.padded - window) % stride;
  if (rem != 0) g.padded += stride - rem;
  g.windows = (g.padded - window) / stride + 1;
  return g;
}

namespace {

// Maps (batch index, axis position) to the flat offset in a [T, F] plane.
struct AxisView {
  int64_t frames, bins;
  Axis axis;
  int64_t other() const { return axis == Axis::kTime ? bins : frames; }
  int64_t length() const { return axis == Axis::kTime ? frames : bins; }
  int64_t Offset(int64_t other_idx, int64_t pos) const {
    return axis == Axis::kTime ? pos * bins + other_idx : other_idx * bins + pos;
  }
};

void UnfoldInto(const double* x, int64_t channels, const AxisView& v,
                const UnfoldGeometry& g, int64_t window, int64_t stride,
                double* y) {
  const int64_t plane = v.frames * v.bins;
  const int64_t width = channels * window;
  if (v.axis == Axis::kTime) {
    // Bins are contiguous in x; blocks of kBlock bins keep both the reads
    // and the kBlock output rows streaming.
    constexpr int64_t kBlock = 8;
    const int64_t row_stride = g.windows * width;
    for (int64_t o0 = 0; o0 < v.bins; o0 += kBlock) {
      const int64_t nb = std::min(kBlock, v.bins - o0);
      for (int64_t w = 0; w < g.windows; ++w)
        for (int64_t c = 0; c < channels; ++c)
          for (int64_t i = 0; i < window; ++i) {
            const int64_t pos = w * stride + i;
            double* dst = y + o0 * row_stride + w * width + c * window + i;
            const double* src = x + c * plane + pos * v.bins + o0;
            for (int64_t o = 0; o < nb; ++o)
              dst[o * row_stride] = pos < g.length ? src[o] : 0.0;
          }
    }
    return;
  }
  for (int64_t o = 0; o < v.other(); ++o)
    for (int64_t w = 0; w < g.windows; ++w) {
      double* row = y + (o * g.windows + w) * width;
      for (int64_t c = 0; c < channels; ++c)
        for (int64_t i = 0; i < window; ++i) {
          const int64_t pos = w * stride + i;
          row[c * window + i] =
              pos < g.length ? x[c * plane + v.Offset(o, pos)] : 0.0;
        }
    }
}

void FoldInto(const double* y, int64_t channels, const AxisView& v,
              const UnfoldGeometry& g, int64_t window, int64_t stride,
              double* x) {
  const int64_t plane = v.frames * v.bins;
  const int64_t width = channels * window;
  if (v.axis == Axis::kTime) {
    constexpr int64_t kBlock = 8;
    const int64_t row_stride = g.windows * width;
    for (int64_t o0 = 0; o0 < v.bins; o0 += kBlock) {
      const int64_t nb = std::min(kBlock, v.bins - o0);
      for (int64_t w = 0; w < g.windows; ++w)
        for (int64_t c = 0; c < channels; ++c)
          for (int64_t i = 0; i < window; ++i) {
            const int64_t pos = w * stride + i;
            if (pos >= g.length) continue;
            const double* src = y + o0 * row_stride + w * width + c * window + i;
            double* dst = x + c * plane + pos * v.bins + o0;
            for (int64_t o = 0; o < nb; ++o) dst[o] += src[o * row_stride];
          }
    }
    return;
  }
  for (int64_t o = 0; o < v.other(); ++o)
    for (int64_t w = 0; w < g.windows; ++w) {
      const double* row = y + (o * g.windows + w) * width;
      for (int64_t c = 0; c < channels; ++c)
        for (int64_t i = 0; i < window; ++i) {
          const int64_t pos = w * stride + i;
          if (pos < g.length) x[c * plane + v.Offset(o, pos)] += row[c * window + i];
        }
    }
}

}  // namespace

Var UnfoldAxis(const Var& x, Axis axis, int64_t window, int64_t stride) {
  CSF_CHECK_INPUT(x.value().ndim() == 3, "UnfoldAxis expects [C, T, F], got ",
                  ShapeString(x.shape()));
  const int64_t c = x.dim(0);
  const AxisView v{x.dim(1), x.dim(2), axis};
  const UnfoldGeometry g = ComputeUnfoldGeometry(v.length(), window, stride);
  Tensor out(Shape{v.other(), g.windows, c * window});
  UnfoldInto(x.value().data(), c, v, g, window, stride, out.data());
  return MakeResult(std::move(out), {x}, [c, v, g, window, stride](Node& self) {
    if (Tensor* gx = self.InputGrad(0))
      FoldInto(self.grad.data(), c, v, g, window, stride, gx->data());
  }, "UnfoldAxis");
}

Var FoldAxis(const Var& y, int64_t channels, int64_t frames, int64_t bins,
             Axis axis, int64_t window, int64_t stride) {
  const AxisView v{frames, bins, axis};
  const UnfoldGeometry g = ComputeUnfoldGeometry(v.length(), window, stride);
  CSF_CHECK_INPUT(y.shape() == Shape({v.other(), g.windows, channels * window}),
                  "FoldAxis input ", ShapeString(y.shape()),
                  " does not match the unfold geometry");
  Tensor out(Shape{channels, frames, bins});
  FoldInto(y.value().data(), channels, v, g, window, stride, out.data());
  return MakeResult(std::move(out), {y},
                    [channels, v, g, window, stride](Node& self) {
    if (self.TracksInput(0)) {
      Tensor tmp(self.inputs[0]->value.shape());
      UnfoldInto(self.grad.data(), channels, v, g, window, stride, tmp.data());
      self.PassGrad(0, std::move(tmp));
    }
  }, "FoldAxis");
}

}  // namespace ops
}  // namespace csfnet
