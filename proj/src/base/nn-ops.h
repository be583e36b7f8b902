// base/nn-ops.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Differentiable network kernels: convolution, pooling, normalization,
// bidirectional LSTM and the axis unfold/fold pair used by the separator.

#ifndef CSFNET_BASE_NN_OPS_H_
#define CSFNET_BASE_NN_OPS_H_

#include "base/autograd.h"

namespace csfnet {
namespace ops {

struct Conv2dGeometry {
  int64_t kernel_h = 1, kernel_w = 1;
  int64_t dilation_h = 1, dilation_w = 1;
  int64_t pad_h = 0, pad_w = 0;
};

// x [N, Cin, H, W], weight [Cout, Cin, kh, kw], bias [Cout] or undefined.
// Stride 1; zero padding.
Var Conv2d(const Var& x, const Var& weight, const Var& bias,
           const Conv2dGeometry& geom);

// 2x2 max pooling with stride 2 over the last two axes of [N, C, H, W].
Var MaxPool2x2(const Var& x);

// x viewed as [C, P]; statistics over each of `groups` channel groups.
Var GroupNorm(const Var& x, int64_t groups, const Var& gamma, const Var& beta,
              double eps = 1e-5);

// x [D, P]; each column normalized over D.
Var LayerNormFirstDim(const Var& x, const Var& gamma, const Var& beta,
                      double eps = 1e-5);

// x [R, D]; each row normalized over D.
Var LayerNormLastDim(const Var& x, const Var& gamma, const Var& beta,
                     double eps = 1e-5);

// x [N, C, H, W]. In training mode batch statistics are used and the
// running buffers are updated in place.
Var BatchNorm2d(const Var& x, const Var& gamma, const Var& beta,
                Tensor* running_mean, Tensor* running_var, bool training,
                double momentum = 0.1, double eps = 1e-5);

struct LstmDirectionParams {
  Var w_ih;  // [4H, In], gate order i, f, g, o
  Var w_hh;  // [4H, H]
  Var bias;  // [4H]
};

// x [B, L, In] -> [B, L, 2H]; forward-direction states in [..., :H],
// backward-direction states in [..., H:]. Zero initial states.
Var BiLstm(const Var& x, const LstmDirectionParams& fwd,
           const LstmDirectionParams& bwd);

enum class Axis { kTime = 1, kFrequency = 2 };

struct UnfoldGeometry {
  int64_t length = 0;       // original axis length
  int64_t padded = 0;       // after right zero padding
  int64_t windows = 0;      // (padded - I) / J + 1
};

UnfoldGeometry ComputeUnfoldGeometry(int64_t length, int64_t window,
                                     int64_t stride);

// x [C, T, F] -> [other, windows, C * I]. Element (b, l, c * I + i) is
// x[c, l * J + i, b] for the time axis (zero beyond the end).
Var UnfoldAxis(const Var& x, Axis axis, int64_t window, int64_t stride);

// Adjoint of UnfoldAxis: overlapping windows are summed and the padding
// cropped. y [other, windows, C * I] -> [C, T, F].
Var FoldAxis(const Var& y, int64_t channels, int64_t frames, int64_t bins,
             Axis axis, int64_t window, int64_t stride);

}  // namespace ops
}  // namespace csfnet

#endif  // CSFNET_BASE_NN_OPS_H_
