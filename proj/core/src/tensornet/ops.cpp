// Copyright 2026 The disco Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "disco/tensornet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <cblas.h>

#include "disco/rng.hpp"

namespace disco::tensornet {

namespace {

// im2col chunks are capped so the scratch stays modest; the chunk size is a
// pure function of the shapes involved, which keeps results bit-stable.
constexpr std::int64_t kColBudgetBytes = 48ll * 1024 * 1024;

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
          const float* a, int lda, const float* b, int ldb, float beta,
          float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

struct ConvDims {
  std::int64_t n, h, w, cin, cout, ho, wo, patch;  // patch = 9*cin
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& input, const Tensor<T>& kernel, int stride) {
  if (input.rank() != 4) raise(Errc::ShapeError, "conv input must be NHWC");
  if (kernel.rank() != 2) raise(Errc::ShapeError, "conv kernel must be 2-D");
  if (stride != 1 && stride != 2)
    raise(Errc::ShapeError, "conv stride must be 1 or 2");
  ConvDims d;
  d.n = input.dim(0);
  d.h = input.dim(1);
  d.w = input.dim(2);
  d.cin = input.dim(3);
  d.patch = 9 * d.cin;
  if (kernel.dim(0) != d.patch)
    raise(Errc::ShapeError, "kernel rows must equal 9*Cin");
  d.cout = kernel.dim(1);
  d.ho = conv_out_extent(d.h, stride);
  d.wo = conv_out_extent(d.w, stride);
  return d;
}

template <typename T>
std::int64_t conv_chunk_images(const ConvDims& d) {
  const std::int64_t per_image =
      d.ho * d.wo * d.patch * static_cast<std::int64_t>(sizeof(T));
  return std::clamp<std::int64_t>(kColBudgetBytes / std::max<std::int64_t>(per_image, 1),
                                  1, d.n);
}

// Fills the col matrix for images [n0, n0+count): rows are output pixels in
// (image, ho, wo) order, columns are (ky*3+kx)*Cin + cin. Zero padding 1.
template <typename T>
void im2col(const T* input, const ConvDims& d, int stride, std::int64_t n0,
            std::int64_t count, T* col) {
  const std::int64_t row_len = d.patch;
  for (std::int64_t ni = 0; ni < count; ++ni) {
    const T* img = input + (n0 + ni) * d.h * d.w * d.cin;
    T* row = col + ni * d.ho * d.wo * row_len;
    for (std::int64_t ho = 0; ho < d.ho; ++ho) {
      for (std::int64_t wo = 0; wo < d.wo; ++wo, row += row_len) {
        for (int ky = 0; ky < 3; ++ky) {
          const std::int64_t hy = ho * stride + ky - 1;
          T* dst = row + ky * 3 * d.cin;
          if (hy < 0 || hy >= d.h) {
            std::fill(dst, dst + 3 * d.cin, T(0));
            continue;
          }
          for (int kx = 0; kx < 3; ++kx, dst += d.cin) {
            const std::int64_t wx = wo * stride + kx - 1;
            if (wx < 0 || wx >= d.w) {
              std::fill(dst, dst + d.cin, T(0));
            } else {
              const T* src = img + (hy * d.w + wx) * d.cin;
              std::copy(src, src + d.cin, dst);
            }
          }
        }
      }
    }
  }
}

// Scatter-adds a col-gradient matrix back onto the input gradient.
template <typename T>
void col2im_add(const T* col, const ConvDims& d, int stride, std::int64_t n0,
                std::int64_t count, T* input_grad) {
  const std::int64_t row_len = d.patch;
  for (std::int64_t ni = 0; ni < count; ++ni) {
    T* img = input_grad + (n0 + ni) * d.h * d.w * d.cin;
    const T* row = col + ni * d.ho * d.wo * row_len;
    for (std::int64_t ho = 0; ho < d.ho; ++ho) {
      for (std::int64_t wo = 0; wo < d.wo; ++wo, row += row_len) {
        for (int ky = 0; ky < 3; ++ky) {
          const std::int64_t hy = ho * stride + ky - 1;
          if (hy < 0 || hy >= d.h) continue;
          const T* src = row + ky * 3 * d.cin;
          for (int kx = 0; kx < 3; ++kx, src += d.cin) {
            const std::int64_t wx = wo * stride + kx - 1;
            if (wx < 0 || wx >= d.w) continue;
            T* dst = img + (hy * d.w + wx) * d.cin;
            for (std::int64_t c = 0; c < d.cin; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

}  // namespace

void set_blas_threads(int threads) {
  openblas_set_num_threads(std::max(1, threads));
}

template <typename T>
Tensor<T> conv3x3_forward(const Tensor<T>& input, const Tensor<T>& kernel,
                          int stride) {
  const ConvDims d = conv_dims(input, kernel, stride);
  Tensor<T> out({d.n, d.ho, d.wo, d.cout});
  const std::int64_t chunk = conv_chunk_images<T>(d);
  std::vector<T> col(static_cast<std::size_t>(chunk * d.ho * d.wo * d.patch));
  for (std::int64_t n0 = 0; n0 < d.n; n0 += chunk) {
    const std::int64_t count = std::min(chunk, d.n - n0);
    im2col(input.data(), d, stride, n0, count, col.data());
    const int m = static_cast<int>(count * d.ho * d.wo);
    gemm(false, false, m, static_cast<int>(d.cout), static_cast<int>(d.patch),
         T(1), col.data(), static_cast<int>(d.patch), kernel.data(),
         static_cast<int>(d.cout), T(0),
         out.data() + n0 * d.ho * d.wo * d.cout, static_cast<int>(d.cout));
  }
  return out;
}

template <typename T>
void conv3x3_backward(Tensor<T>& input, Tensor<T>& kernel, int stride,
                      const Tensor<T>& output) {
  const ConvDims d = conv_dims(input, kernel, stride);
  if (output.grad.empty()) raise(Errc::ShapeError, "conv output grad missing");
  const std::int64_t chunk = conv_chunk_images<T>(d);
  std::vector<T> col(static_cast<std::size_t>(chunk * d.ho * d.wo * d.patch));
  std::vector<T> dcol;
  if (input.has_grad())
    dcol.resize(static_cast<std::size_t>(chunk * d.ho * d.wo * d.patch));

  for (std::int64_t n0 = 0; n0 < d.n; n0 += chunk) {
    const std::int64_t count = std::min(chunk, d.n - n0);
    const int m = static_cast<int>(count * d.ho * d.wo);
    const T* out_grad = output.grad.data() + n0 * d.ho * d.wo * d.cout;
    if (kernel.has_grad()) {
      im2col(input.data(), d, stride, n0, count, col.data());
      // dK += col^T * dOut
      gemm(true, false, static_cast<int>(d.patch), static_cast<int>(d.cout), m,
           T(1), col.data(), static_cast<int>(d.patch), out_grad,
           static_cast<int>(d.cout), T(1), kernel.grad.data(),
           static_cast<int>(d.cout));
    }
    if (input.has_grad()) {
      // dCol = dOut * K^T, then scatter-add back to pixels.
      gemm(false, true, m, static_cast<int>(d.patch), static_cast<int>(d.cout),
           T(1), out_grad, static_cast<int>(d.cout), kernel.data(),
           static_cast<int>(d.cout), T(0), dcol.data(),
           static_cast<int>(d.patch));
      col2im_add(dcol.data(), d, stride, n0, count, input.grad.data());
    }
  }
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, const Tensor<T>& gamma,
                            const Tensor<T>& beta, Tensor<T>& running_mean,
                            Tensor<T>& running_var, bool training,
                            BnCache<T>& cache) {
  if (input.rank() < 2) raise(Errc::ShapeError, "batchnorm input rank < 2");
  const std::int64_t channels = input.shape.back();
  const std::int64_t count = input.size() / channels;
  if (gamma.size() != channels || beta.size() != channels ||
      running_mean.size() != channels || running_var.size() != channels)
    raise(Errc::ShapeError, "batchnorm parameter size mismatch");
  if (training && input.dim(0) < 2)
    raise(Errc::InsufficientBatch, "batchnorm training needs batch >= 2");

  Tensor<T> out(input.shape);
  const T* x = input.data();
  T* y = out.data();

  std::vector<T> mean(channels), inv_std(channels);
  if (training) {
    // Serial per-channel reductions: the summation order is fixed, so the
    // statistics are bitwise reproducible.
    std::vector<double> sum(channels, 0.0), sum_sq(channels, 0.0);
    for (std::int64_t i = 0; i < count; ++i) {
      const T* row = x + i * channels;
      for (std::int64_t c = 0; c < channels; ++c) {
        sum[c] += row[c];
        sum_sq[c] += static_cast<double>(row[c]) * row[c];
      }
    }
    for (std::int64_t c = 0; c < channels; ++c) {
      const double m = sum[c] / count;
      const double var = std::max(0.0, sum_sq[c] / count - m * m);
      mean[c] = static_cast<T>(m);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + kBatchNormEps));
      running_mean.values[c] = static_cast<T>(
          (1.0 - kBatchNormMomentum) * running_mean.values[c] +
          kBatchNormMomentum * m);
      running_var.values[c] =
          static_cast<T>((1.0 - kBatchNormMomentum) * running_var.values[c] +
                         kBatchNormMomentum * var);
    }
    cache.mean = mean;
    cache.inv_std = inv_std;
    cache.count = count;
  } else {
    for (std::int64_t c = 0; c < channels; ++c) {
      mean[c] = running_mean.values[c];
      inv_std[c] = static_cast<T>(
          1.0 / std::sqrt(static_cast<double>(running_var.values[c]) +
                          kBatchNormEps));
    }
    cache = BnCache<T>{};
  }

  for (std::int64_t i = 0; i < count; ++i) {
    const T* xr = x + i * channels;
    T* yr = y + i * channels;
    for (std::int64_t c = 0; c < channels; ++c)
      yr[c] = gamma.values[c] * (xr[c] - mean[c]) * inv_std[c] + beta.values[c];
  }
  return out;
}

template <typename T>
void batchnorm_backward(Tensor<T>& input, Tensor<T>& gamma, Tensor<T>& beta,
                        const BnCache<T>& cache, const Tensor<T>& output) {
  if (cache.count == 0)
    raise(Errc::ShapeError, "batchnorm backward requires a training cache");
  const std::int64_t channels = input.shape.back();
  const std::int64_t count = cache.count;
  const T* x = input.data();
  const T* dy = output.grad.data();

  // Two serial reduction passes, then one elementwise pass.
  std::vector<double> sum_dy(channels, 0.0), sum_dy_xhat(channels, 0.0);
  for (std::int64_t i = 0; i < count; ++i) {
    const T* xr = x + i * channels;
    const T* dyr = dy + i * channels;
    for (std::int64_t c = 0; c < channels; ++c) {
      const double xhat = (xr[c] - cache.mean[c]) * cache.inv_std[c];
      sum_dy[c] += dyr[c];
      sum_dy_xhat[c] += dyr[c] * xhat;
    }
  }
  if (gamma.has_grad())
    for (std::int64_t c = 0; c < channels; ++c)
      gamma.grad[c] += static_cast<T>(sum_dy_xhat[c]);
  if (beta.has_grad())
    for (std::int64_t c = 0; c < channels; ++c)
      beta.grad[c] += static_cast<T>(sum_dy[c]);
  if (!input.has_grad()) return;

  T* dx = input.grad.data();
  for (std::int64_t i = 0; i < count; ++i) {
    const T* xr = x + i * channels;
    const T* dyr = dy + i * channels;
    T* dxr = dx + i * channels;
    for (std::int64_t c = 0; c < channels; ++c) {
      const double xhat = (xr[c] - cache.mean[c]) * cache.inv_std[c];
      const double term = count * static_cast<double>(dyr[c]) - sum_dy[c] -
                          xhat * sum_dy_xhat[c];
      dxr[c] += static_cast<T>(gamma.values[c] * cache.inv_std[c] * term / count);
    }
  }
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out(input.shape);
  for (std::size_t i = 0; i < input.values.size(); ++i)
    out.values[i] = input.values[i] > T(0) ? input.values[i] : T(0);
  return out;
}

template <typename T>
void relu_backward(Tensor<T>& input, const Tensor<T>& output) {
  if (!input.has_grad()) return;
  for (std::size_t i = 0; i < input.values.size(); ++i)
    if (input.values[i] > T(0)) input.grad[i] += output.grad[i];
}

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& input, double p, std::uint64_t key,
                          bool training) {
  if (p < 0.0 || p >= 1.0) raise(Errc::ConfigError, "dropout p must be in [0,1)");
  Tensor<T> out(input.shape);
  if (!training || p == 0.0) {
    out.values = input.values;
    return out;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < input.values.size(); ++i)
    out.values[i] =
        keyed_uniform(key, i) >= p ? input.values[i] * scale : T(0);
  return out;
}

template <typename T>
void dropout_backward(Tensor<T>& input, double p, std::uint64_t key,
                      bool training, const Tensor<T>& output) {
  if (!input.has_grad()) return;
  if (!training || p == 0.0) {
    for (std::size_t i = 0; i < input.grad.size(); ++i)
      input.grad[i] += output.grad[i];
    return;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < input.grad.size(); ++i)
    if (keyed_uniform(key, i) >= p) input.grad[i] += output.grad[i] * scale;
}

template <typename T>
Tensor<T> global_average_pool_forward(const Tensor<T>& input) {
  if (input.rank() != 4) raise(Errc::ShapeError, "GAP input must be NHWC");
  const std::int64_t n = input.dim(0), hw = input.dim(1) * input.dim(2),
                     c = input.dim(3);
  Tensor<T> out({n, c});
  for (std::int64_t ni = 0; ni < n; ++ni) {
    const T* img = input.data() + ni * hw * c;
    std::vector<double> acc(static_cast<std::size_t>(c), 0.0);
    for (std::int64_t i = 0; i < hw; ++i)
      for (std::int64_t ci = 0; ci < c; ++ci) acc[ci] += img[i * c + ci];
    for (std::int64_t ci = 0; ci < c; ++ci)
      out.values[ni * c + ci] = static_cast<T>(acc[ci] / hw);
  }
  return out;
}

template <typename T>
void global_average_pool_backward(Tensor<T>& input, const Tensor<T>& output) {
  if (!input.has_grad()) return;
  const std::int64_t n = input.dim(0), hw = input.dim(1) * input.dim(2),
                     c = input.dim(3);
  for (std::int64_t ni = 0; ni < n; ++ni) {
    const T* dy = output.grad.data() + ni * c;
    T* dx = input.grad.data() + ni * hw * c;
    for (std::int64_t i = 0; i < hw; ++i)
      for (std::int64_t ci = 0; ci < c; ++ci)
        dx[i * c + ci] += dy[ci] / static_cast<T>(hw);
  }
}

template <typename T>
Tensor<T> fc_forward(const Tensor<T>& input, const Tensor<T>& weight,
                     const Tensor<T>& bias) {
  if (input.rank() != 2 || weight.rank() != 2)
    raise(Errc::ShapeError, "fc expects 2-D input and weight");
  const std::int64_t n = input.dim(0), cin = input.dim(1),
                     cout = weight.dim(1);
  if (weight.dim(0) != cin || bias.size() != cout)
    raise(Errc::ShapeError, "fc weight/bias shape mismatch");
  Tensor<T> out({n, cout});
  for (std::int64_t i = 0; i < n; ++i)
    std::copy(bias.values.begin(), bias.values.end(),
              out.values.begin() + i * cout);
  gemm(false, false, static_cast<int>(n), static_cast<int>(cout),
       static_cast<int>(cin), T(1), input.data(), static_cast<int>(cin),
       weight.data(), static_cast<int>(cout), T(1), out.data(),
       static_cast<int>(cout));
  return out;
}

template <typename T>
void fc_backward(Tensor<T>& input, Tensor<T>& weight, Tensor<T>& bias,
                 const Tensor<T>& output) {
  const std::int64_t n = input.dim(0), cin = input.dim(1),
                     cout = weight.dim(1);
  const T* dy = output.grad.data();
  if (weight.has_grad())
    gemm(true, false, static_cast<int>(cin), static_cast<int>(cout),
         static_cast<int>(n), T(1), input.data(), static_cast<int>(cin), dy,
         static_cast<int>(cout), T(1), weight.grad.data(),
         static_cast<int>(cout));
  if (bias.has_grad())
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t c = 0; c < cout; ++c)
        bias.grad[c] += dy[i * cout + c];
  if (input.has_grad())
    gemm(false, true, static_cast<int>(n), static_cast<int>(cin),
         static_cast<int>(cout), T(1), dy, static_cast<int>(cout),
         weight.data(), static_cast<int>(cout), T(1), input.grad.data(),
         static_cast<int>(cin));
}

template <typename T>
T l2_loss(const Tensor<T>& prediction, const Tensor<T>& target) {
  if (prediction.shape != target.shape)
    raise(Errc::ShapeError, "l2_loss shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < prediction.values.size(); ++i) {
    const double d = static_cast<double>(prediction.values[i]) - target.values[i];
    acc += d * d;
  }
  return static_cast<T>(acc / prediction.values.size());
}

template <typename T>
void l2_loss_backward(Tensor<T>& prediction, const Tensor<T>& target, T scale) {
  if (!prediction.has_grad()) return;
  const T k = scale * T(2) / static_cast<T>(prediction.values.size());
  for (std::size_t i = 0; i < prediction.values.size(); ++i)
    prediction.grad[i] += k * (prediction.values[i] - target.values[i]);
}

template <typename T>
void sgd_step(Tensor<T>& weights, Tensor<T>& velocity, T lr, T momentum,
              T weight_decay) {
  if (!weights.has_grad()) raise(Errc::ShapeError, "sgd_step without gradients");
  if (velocity.values.size() != weights.values.size())
    raise(Errc::ShapeError, "sgd velocity shape mismatch");
  for (T g : weights.grad)
    if (!std::isfinite(static_cast<double>(g)))
      raise(Errc::NonFiniteGradient, "non-finite gradient in sgd_step");
  for (std::size_t i = 0; i < weights.values.size(); ++i) {
    velocity.values[i] = momentum * velocity.values[i] + weights.grad[i] +
                         weight_decay * weights.values[i];
    weights.values[i] -= lr * velocity.values[i];
  }
}

// Explicit instantiations: f32 for training, f64 for gradient checking.
#define DISCO_INSTANTIATE(T)                                                   \
  template Tensor<T> conv3x3_forward<T>(const Tensor<T>&, const Tensor<T>&,    \
                                        int);                                  \
  template void conv3x3_backward<T>(Tensor<T>&, Tensor<T>&, int,               \
                                    const Tensor<T>&);                         \
  template Tensor<T> batchnorm_forward<T>(const Tensor<T>&, const Tensor<T>&,  \
                                          const Tensor<T>&, Tensor<T>&,        \
                                          Tensor<T>&, bool, BnCache<T>&);      \
  template void batchnorm_backward<T>(Tensor<T>&, Tensor<T>&, Tensor<T>&,      \
                                      const BnCache<T>&, const Tensor<T>&);    \
  template Tensor<T> relu_forward<T>(const Tensor<T>&);                        \
  template void relu_backward<T>(Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> dropout_forward<T>(const Tensor<T>&, double,              \
                                        std::uint64_t, bool);                  \
  template void dropout_backward<T>(Tensor<T>&, double, std::uint64_t, bool,   \
                                    const Tensor<T>&);                         \
  template Tensor<T> global_average_pool_forward<T>(const Tensor<T>&);         \
  template void global_average_pool_backward<T>(Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> fc_forward<T>(const Tensor<T>&, const Tensor<T>&,         \
                                   const Tensor<T>&);                          \
  template void fc_backward<T>(Tensor<T>&, Tensor<T>&, Tensor<T>&,             \
                               const Tensor<T>&);                              \
  template T l2_loss<T>(const Tensor<T>&, const Tensor<T>&);                   \
  template void l2_loss_backward<T>(Tensor<T>&, const Tensor<T>&, T);          \
  template void sgd_step<T>(Tensor<T>&, Tensor<T>&, T, T, T);

DISCO_INSTANTIATE(float)
DISCO_INSTANTIATE(double)
#undef DISCO_INSTANTIATE

}  // namespace disco::tensornet
