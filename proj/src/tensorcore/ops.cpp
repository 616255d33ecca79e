#include "padkit/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace padkit::ops {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

[[noreturn]] void shape_fail(const std::string& op, const std::string& what, const Shape& a, const Shape& b) {
  throw ShapeError(op + ": " + what + " (got " + shape_to_string(a) + " and " + shape_to_string(b) + ")");
}

template <typename T>
void accumulate(Node<T>& parent, const Tensor<T>& g) {
  if (!parent.requires_grad) return;
  Tensor<T>& dst = parent.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

// Unrolls every kh x kw x Cin neighbourhood of image n into one row.
template <typename T>
void im2col(const T* x, std::size_t h, std::size_t w, std::size_t cin, std::size_t kh, std::size_t kw, T* cols) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  const std::size_t row_len = kh * kw * cin;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      T* dst = cols + (r * w + c) * row_len;
      for (std::size_t i = 0; i < kh; ++i) {
        const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(r + i) - ph;
        for (std::size_t j = 0; j < kw; ++j) {
          const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(c + j) - pw;
          T* cell = dst + (i * kw + j) * cin;
          if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(h) || xx >= static_cast<std::ptrdiff_t>(w)) {
            std::fill(cell, cell + cin, T{0});
          } else {
            const T* src = x + (static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)) * cin;
            std::copy(src, src + cin, cell);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, std::size_t h, std::size_t w, std::size_t cin, std::size_t kh, std::size_t kw, T* dx) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  const std::size_t row_len = kh * kw * cin;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const T* src = cols + (r * w + c) * row_len;
      for (std::size_t i = 0; i < kh; ++i) {
        const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(r + i) - ph;
        if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t j = 0; j < kw; ++j) {
          const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(c + j) - pw;
          if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
          T* dst = dx + (static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)) * cin;
          const T* cell = src + (i * kw + j) * cin;
          for (std::size_t k = 0; k < cin; ++k) dst[k] += cell[k];
        }
      }
    }
  }
}

template <typename T, typename F, typename G>
Var<T> elementwise(Tape<T>& tape, const Var<T>& x, F forward, G derivative) {
  const Tensor<T>& in = x.value();
  Tensor<T> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = forward(in[i]);
  return tape.record(std::move(out), {x}, [derivative](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor<T>& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * derivative(p.value[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& kernel, const Var<T>& bias) {
  const Shape& xs = x.shape();
  const Shape& ks = kernel.shape();
  if (xs.size() != 4) throw ShapeError("conv2d: input must be [N,H,W,C], got " + shape_to_string(xs));
  if (ks.size() != 4) throw ShapeError("conv2d: kernel must be [kh,kw,Cin,Cout], got " + shape_to_string(ks));
  if (ks[0] % 2 == 0 || ks[1] % 2 == 0) throw ShapeError("conv2d: same padding needs odd kernel, got " + shape_to_string(ks));
  if (ks[2] != xs[3]) shape_fail("conv2d", "input channels differ from kernel Cin", xs, ks);
  if (bias.shape() != Shape{ks[3]}) shape_fail("conv2d", "bias must be [Cout]", bias.shape(), ks);

  const std::size_t n = xs[0], h = xs[1], w = xs[2], cin = xs[3];
  const std::size_t kh = ks[0], kw = ks[1], cout = ks[3];
  const std::size_t rows = h * w, row_len = kh * kw * cin;

  Tensor<T> out(Shape{n, h, w, cout});
  AlignedVector<T> cols(rows * row_len);
  CMapMat<T> kmat(kernel.value().raw(), static_cast<Eigen::Index>(row_len), static_cast<Eigen::Index>(cout));
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bvec(bias.value().raw(), static_cast<Eigen::Index>(cout));
  for (std::size_t b = 0; b < n; ++b) {
    im2col(x.value().raw() + b * rows * cin, h, w, cin, kh, kw, cols.data());
    CMapMat<T> cmat(cols.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(row_len));
    MapMat<T> omat(out.raw() + b * rows * cout, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cout));
    omat.noalias() = cmat * kmat;
    omat.rowwise() += bvec;
  }

  return tape.record(std::move(out), {x, kernel, bias}, [=](Node<T>& self) {
    Node<T>& px = *self.parents[0];
    Node<T>& pk = *self.parents[1];
    Node<T>& pb = *self.parents[2];
    AlignedVector<T> work(rows * row_len);
    CMapMat<T> kmat(pk.value.raw(), static_cast<Eigen::Index>(row_len), static_cast<Eigen::Index>(cout));
    T* dk = pk.requires_grad ? pk.grad_buffer().raw() : nullptr;
    T* db = pb.requires_grad ? pb.grad_buffer().raw() : nullptr;
    T* dx = px.requires_grad ? px.grad_buffer().raw() : nullptr;
    for (std::size_t b = 0; b < n; ++b) {
      CMapMat<T> gout(self.grad.raw() + b * rows * cout, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cout));
      if (db) {
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dbv(db, static_cast<Eigen::Index>(cout));
        dbv += gout.colwise().sum();
      }
      if (dk) {
        im2col(px.value.raw() + b * rows * cin, h, w, cin, kh, kw, work.data());
        CMapMat<T> cmat(work.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(row_len));
        MapMat<T> dkm(dk, static_cast<Eigen::Index>(row_len), static_cast<Eigen::Index>(cout));
        dkm.noalias() += cmat.transpose() * gout;
      }
      if (dx) {
        MapMat<T> dcols(work.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(row_len));
        dcols.noalias() = gout * kmat.transpose();
        col2im_add(work.data(), h, w, cin, kh, kw, dx + b * rows * cin);
      }
    }
  });
}

template <typename T>
Var<T> maxpool2(Tape<T>& tape, const Var<T>& x) {
  const Shape& xs = x.shape();
  if (xs.size() != 4) throw ShapeError("maxpool2: input must be [N,H,W,C], got " + shape_to_string(xs));
  if (xs[1] % 2 != 0 || xs[2] % 2 != 0) {
    throw ShapeError("maxpool2: spatial dims must be even, got " + shape_to_string(xs));
  }
  const std::size_t n = xs[0], h = xs[1], w = xs[2], c = xs[3];
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor<T> out(Shape{n, oh, ow, c});
  std::vector<std::size_t> argmax(out.size());
  const T* in = x.value().raw();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t q = 0; q < ow; ++q) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          std::size_t best = ((b * h + 2 * r) * w + 2 * q) * c + ch;
          for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
              const std::size_t idx = ((b * h + 2 * r + i) * w + 2 * q + j) * c + ch;
              if (in[idx] > in[best]) best = idx;
            }
          }
          const std::size_t o = ((b * oh + r) * ow + q) * c + ch;
          out[o] = in[best];
          argmax[o] = best;
        }
      }
    }
  }
  return tape.record(std::move(out), {x}, [argmax = std::move(argmax)](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor<T>& g = p.grad_buffer();
    for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += self.grad[o];
  });
}

template <typename T>
Var<T> dense(Tape<T>& tape, const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 2 || ws.size() != 2) shape_fail("dense", "input and weight must be rank 2", xs, ws);
  if (xs[1] != ws[0]) shape_fail("dense", "input width differs from weight rows", xs, ws);
  if (bias.shape() != Shape{ws[1]}) shape_fail("dense", "bias must be [U]", bias.shape(), ws);
  const auto n = static_cast<Eigen::Index>(xs[0]);
  const auto d = static_cast<Eigen::Index>(xs[1]);
  const auto u = static_cast<Eigen::Index>(ws[1]);

  Tensor<T> out(Shape{xs[0], ws[1]});
  MapMat<T> om(out.raw(), n, u);
  om.noalias() = CMapMat<T>(x.value().raw(), n, d) * CMapMat<T>(weight.value().raw(), d, u);
  om.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.value().raw(), u);

  return tape.record(std::move(out), {x, weight, bias}, [=](Node<T>& self) {
    Node<T>& px = *self.parents[0];
    Node<T>& pw = *self.parents[1];
    Node<T>& pb = *self.parents[2];
    CMapMat<T> g(self.grad.raw(), n, u);
    if (px.requires_grad) {
      MapMat<T>(px.grad_buffer().raw(), n, d).noalias() += g * CMapMat<T>(pw.value.raw(), d, u).transpose();
    }
    if (pw.requires_grad) {
      MapMat<T>(pw.grad_buffer().raw(), d, u).noalias() += CMapMat<T>(px.value.raw(), n, d).transpose() * g;
    }
    if (pb.requires_grad) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(pb.grad_buffer().raw(), u) += g.colwise().sum();
    }
  });
}

template <typename T>
Var<T> batchnorm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormStats<T>& stats,
                 Mode mode, const BatchNormOptions& options) {
  const Shape& xs = x.shape();
  if (xs.empty()) throw ShapeError("batchnorm: scalar input");
  const std::size_t c = xs.back();
  const Shape cshape{c};
  if (gamma.shape() != cshape || beta.shape() != cshape || stats.running_mean.shape() != cshape ||
      stats.running_var.shape() != cshape) {
    shape_fail("batchnorm", "per-channel parameters must match channel count", gamma.shape(), xs);
  }
  const std::size_t m = x.value().size() / c;
  if (mode == Mode::Train && m == 0) throw std::invalid_argument("batchnorm: empty batch in train mode");

  const T eps = static_cast<T>(options.epsilon);
  std::vector<T> mean(c, T{0}), inv_std(c, T{0});
  const T* in = x.value().raw();
  if (mode == Mode::Train) {
    std::vector<T> var(c, T{0});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < c; ++k) mean[k] += in[i * c + k];
    for (std::size_t k = 0; k < c; ++k) mean[k] /= static_cast<T>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < c; ++k) {
        const T d = in[i * c + k] - mean[k];
        var[k] += d * d;
      }
    const T mom = static_cast<T>(options.momentum);
    for (std::size_t k = 0; k < c; ++k) {
      var[k] /= static_cast<T>(m);
      inv_std[k] = T{1} / std::sqrt(var[k] + eps);
      stats.running_mean[k] = mom * stats.running_mean[k] + (T{1} - mom) * mean[k];
      stats.running_var[k] = mom * stats.running_var[k] + (T{1} - mom) * var[k];
    }
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      mean[k] = stats.running_mean[k];
      inv_std[k] = T{1} / std::sqrt(stats.running_var[k] + eps);
    }
  }

  Tensor<T> xhat(xs);
  Tensor<T> out(xs);
  const T* gm = gamma.value().raw();
  const T* bt = beta.value().raw();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < c; ++k) {
      const std::size_t idx = i * c + k;
      xhat[idx] = (in[idx] - mean[k]) * inv_std[k];
      out[idx] = gm[k] * xhat[idx] + bt[k];
    }

  const bool train = mode == Mode::Train;
  return tape.record(std::move(out), {x, gamma, beta},
                     [m, c, train, inv_std = std::move(inv_std), xhat = std::move(xhat)](Node<T>& self) {
                       Node<T>& px = *self.parents[0];
                       Node<T>& pg = *self.parents[1];
                       Node<T>& pb = *self.parents[2];
                       const T* dy = self.grad.raw();
                       std::vector<T> sum_dy(c, T{0}), sum_dy_xhat(c, T{0});
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t k = 0; k < c; ++k) {
                           sum_dy[k] += dy[i * c + k];
                           sum_dy_xhat[k] += dy[i * c + k] * xhat[i * c + k];
                         }
                       if (pg.requires_grad) {
                         T* dg = pg.grad_buffer().raw();
                         for (std::size_t k = 0; k < c; ++k) dg[k] += sum_dy_xhat[k];
                       }
                       if (pb.requires_grad) {
                         T* dbt = pb.grad_buffer().raw();
                         for (std::size_t k = 0; k < c; ++k) dbt[k] += sum_dy[k];
                       }
                       if (!px.requires_grad) return;
                       T* dx = px.grad_buffer().raw();
                       const T* gm = pg.value.raw();
                       const T mm = static_cast<T>(m);
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t k = 0; k < c; ++k) {
                           const std::size_t idx = i * c + k;
                           if (train) {
                             dx[idx] += gm[k] * inv_std[k] / mm *
                                        (mm * dy[idx] - sum_dy[k] - xhat[idx] * sum_dy_xhat[k]);
                           } else {
                             dx[idx] += gm[k] * inv_std[k] * dy[idx];
                           }
                         }
                     });
}

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x) {
  return elementwise(
      tape, x, [](T v) { return v > T{0} ? v : T{0}; }, [](T in, T) { return in > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> leaky_relu(Tape<T>& tape, const Var<T>& x, double alpha) {
  const T a = static_cast<T>(alpha);
  return elementwise(
      tape, x, [a](T v) { return v > T{0} ? v : a * v; }, [a](T in, T) { return in > T{0} ? T{1} : a; });
}

template <typename T>
Var<T> tanh(Tape<T>& tape, const Var<T>& x) {
  return elementwise(
      tape, x, [](T v) { return std::tanh(v); }, [](T, T out) { return T{1} - out * out; });
}

template <typename T>
Var<T> softmax(Tape<T>& tape, const Var<T>& x) {
  const Shape& xs = x.shape();
  if (xs.empty()) throw ShapeError("softmax: scalar input");
  const std::size_t k = xs.back();
  const std::size_t rows = x.value().size() / k;
  Tensor<T> out(xs);
  const T* in = x.value().raw();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = in + r * k;
    T mx = *std::max_element(row, row + k);
    T total{0};
    for (std::size_t j = 0; j < k; ++j) {
      out[r * k + j] = std::exp(row[j] - mx);
      total += out[r * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] /= total;
  }
  return tape.record(std::move(out), {x}, [rows, k](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    T* dx = p.grad_buffer().raw();
    for (std::size_t r = 0; r < rows; ++r) {
      T dot{0};
      for (std::size_t j = 0; j < k; ++j) dot += self.grad[r * k + j] * self.value[r * k + j];
      for (std::size_t j = 0; j < k; ++j) {
        dx[r * k + j] += self.value[r * k + j] * (self.grad[r * k + j] - dot);
      }
    }
  });
}

template <typename T>
Var<T> concat_channels(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != bs.size() || as.empty() || !std::equal(as.begin(), as.end() - 1, bs.begin())) {
    shape_fail("concat_channels", "leading dims must agree", as, bs);
  }
  const std::size_t ca = as.back(), cb = bs.back(), cc = ca + cb;
  const std::size_t rows = a.value().size() / ca;
  Shape os = as;
  os.back() = cc;
  Tensor<T> out(os);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().raw() + r * ca, ca, out.raw() + r * cc);
    std::copy_n(b.value().raw() + r * cb, cb, out.raw() + r * cc + ca);
  }
  return tape.record(std::move(out), {a, b}, [rows, ca, cb, cc](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    if (pa.requires_grad) {
      T* ga = pa.grad_buffer().raw();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < ca; ++j) ga[r * ca + j] += self.grad[r * cc + j];
    }
    if (pb.requires_grad) {
      T* gb = pb.grad_buffer().raw();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cb; ++j) gb[r * cb + j] += self.grad[r * cc + ca + j];
    }
  });
}

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) shape_fail("add", "shapes must be identical", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return tape.record(std::move(out), {a, b}, [](Node<T>& self) {
    accumulate(*self.parents[0], self.grad);
    accumulate(*self.parents[1], self.grad);
  });
}

template <typename T>
Var<T> dropout(Tape<T>& tape, const Var<T>& x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  if (mode == Mode::Infer || rate == 0.0) return x;
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> mask(x.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < rate ? T{0} : scale;
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * mask[i];
  return tape.record(std::move(out), {x}, [mask = std::move(mask)](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor<T>& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

template <typename T>
Var<T> flatten(Tape<T>& tape, const Var<T>& x) {
  const Shape& xs = x.shape();
  if (xs.empty()) throw ShapeError("flatten: scalar input");
  const std::size_t n = xs[0];
  const std::size_t rest = n == 0 ? 0 : x.value().size() / n;
  Tensor<T> out = x.value().reshaped(Shape{n, rest});
  return tape.record(std::move(out), {x}, [](Node<T>& self) { accumulate(*self.parents[0], self.grad); });
}

template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x) {
  T total{0};
  for (T v : x.value().data()) total += v;
  return tape.record(Tensor<T>(Shape{1}, std::vector<T>{total}), {x}, [](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor<T>& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
  });
}

template <typename T>
Var<T> weighted_sum(Tape<T>& tape, const Var<T>& x, const Tensor<T>& weights) {
  if (weights.shape() != x.shape()) shape_fail("weighted_sum", "weights must match input", weights.shape(), x.shape());
  T total{0};
  for (std::size_t i = 0; i < weights.size(); ++i) total += x.value()[i] * weights[i];
  return tape.record(Tensor<T>(Shape{1}, std::vector<T>{total}), {x}, [weights](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    Tensor<T>& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * weights[i];
  });
}

#define PADKIT_INSTANTIATE_OPS(T)                                                                              \
  template Var<T> conv2d(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);                               \
  template Var<T> maxpool2(Tape<T>&, const Var<T>&);                                                           \
  template Var<T> dense(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);                                \
  template Var<T> batchnorm(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&, BatchNormStats<T>&, Mode, \
                            const BatchNormOptions&);                                                          \
  template Var<T> relu(Tape<T>&, const Var<T>&);                                                               \
  template Var<T> leaky_relu(Tape<T>&, const Var<T>&, double);                                                 \
  template Var<T> tanh(Tape<T>&, const Var<T>&);                                                               \
  template Var<T> softmax(Tape<T>&, const Var<T>&);                                                            \
  template Var<T> concat_channels(Tape<T>&, const Var<T>&, const Var<T>&);                                     \
  template Var<T> add(Tape<T>&, const Var<T>&, const Var<T>&);                                                 \
  template Var<T> dropout(Tape<T>&, const Var<T>&, double, Mode, Rng&);                                        \
  template Var<T> flatten(Tape<T>&, const Var<T>&);                                                            \
  template Var<T> sum(Tape<T>&, const Var<T>&);                                                                \
  template Var<T> weighted_sum(Tape<T>&, const Var<T>&, const Tensor<T>&);

PADKIT_INSTANTIATE_OPS(float)
PADKIT_INSTANTIATE_OPS(double)

#undef PADKIT_INSTANTIATE_OPS

}  // namespace padkit::ops
