#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hearbc/kernels.hpp"
#include "hearbc/tensor.hpp"
#include "hearbc/util.hpp"

namespace hearbc::nn {

// ---------------------------------------------------------------------------
// Parameter registry
// ---------------------------------------------------------------------------

template <typename T>
struct Param {
  Tensor<T> value;
  int id = -1;
};

/// Ordered registry of named parameters. The order defines the checkpoint
/// layout and the architecture fingerprint.
template <typename T>
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor<T>* value;
  };

  void add(const std::string& name, Param<T>& p) {
    p.id = static_cast<int>(entries_.size());
    entries_.push_back({name, &p.value});
  }

  size_t size() const { return entries_.size(); }
  const Entry& entry(size_t i) const { return entries_[i]; }
  Entry& entry(size_t i) { return entries_[i]; }

  int64_t total_params() const {
    int64_t n = 0;
    for (const auto& e : entries_) n += e.value->numel();
    return n;
  }

  /// sha256 over the ordered (name, shape) list; identifies the architecture.
  std::string fingerprint() const {
    std::string desc;
    for (const auto& e : entries_) {
      desc += e.name;
      desc += ':';
      for (size_t d = 0; d < e.value->shape.size(); ++d) {
        if (d) desc += 'x';
        desc += std::to_string(e.value->shape[d]);
      }
      desc += ';';
    }
    return util::sha256_hex(desc);
  }

  std::vector<int> ids_with_prefix(const std::string& prefix) const {
    std::vector<int> ids;
    for (size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name.rfind(prefix, 0) == 0) ids.push_back(static_cast<int>(i));
    }
    return ids;
  }

 private:
  std::vector<Entry> entries_;
};

/// Gradient buffers aligned with a ParamSet. Each training shard owns one.
template <typename T>
struct GradStore {
  std::vector<Tensor<T>> g;

  void init(const ParamSet<T>& ps) {
    g.clear();
    g.reserve(ps.size());
    for (size_t i = 0; i < ps.size(); ++i) g.emplace_back(ps.entry(i).value->shape);
  }
  void zero() {
    for (auto& t : g) t.zero();
  }
  void add(const GradStore<T>& o) {
    for (size_t i = 0; i < g.size(); ++i) {
      T* a = g[i].data();
      const T* b = o.g[i].data();
      const int64_t n = g[i].numel();
#pragma omp simd
      for (int64_t j = 0; j < n; ++j) a[j] += b[j];
    }
  }
  Tensor<T>& of(const Param<T>& p) { return g[static_cast<size_t>(p.id)]; }
};

// ---------------------------------------------------------------------------
// Layers. Forward fills a per-call Ctx; backward consumes it. Parameters are
// read-only during forward/backward so shards can share a model.
// ---------------------------------------------------------------------------

template <typename T>
struct Linear {
  Param<T> w;  // [out, in]
  Param<T> b;  // [out]
  int64_t in = 0, out = 0;

  struct Ctx {
    Tensor<T> x;  // [rows, in]
  };

  Linear() = default;
  Linear(int64_t in_dim, int64_t out_dim, util::Rng& rng) { init(in_dim, out_dim, rng); }

  void init(int64_t in_dim, int64_t out_dim, util::Rng& rng) {
    in = in_dim;
    out = out_dim;
    w.value = Tensor<T>({out, in});
    b.value = Tensor<T>({out});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& x : w.value.v) x = static_cast<T>(rng.uniform(-bound, bound));
  }

  void register_params(const std::string& prefix, ParamSet<T>& ps) {
    ps.add(prefix + ".w", w);
    ps.add(prefix + ".b", b);
  }

  void forward(const Tensor<T>& x, Ctx& ctx, Tensor<T>& y) const {
    const int64_t rows = x.numel() / in;
    ctx.x = x;
    y = Tensor<T>({rows, out});
    kernels::gemm_nt(x.data(), w.value.data(), y.data(), rows, out, in, T(0));
    for (int64_t r = 0; r < rows; ++r) {
      T* yr = y.data() + r * out;
      const T* bb = b.value.data();
#pragma omp simd
      for (int64_t j = 0; j < out; ++j) yr[j] += bb[j];
    }
  }

  void backward(const Ctx& ctx, const Tensor<T>& dy, GradStore<T>& grads, Tensor<T>& dx) const {
    const int64_t rows = dy.numel() / out;
    dx = Tensor<T>({rows, in});
    kernels::gemm_nn(dy.data(), w.value.data(), dx.data(), rows, in, out, T(0));
    kernels::gemm_tn(dy.data(), ctx.x.data(), grads.of(w).data(), out, in, rows, T(1));
    T* db = grads.of(b).data();
    for (int64_t r = 0; r < rows; ++r) {
      const T* dyr = dy.data() + r * out;
#pragma omp simd
      for (int64_t j = 0; j < out; ++j) db[j] += dyr[j];
    }
  }
};

template <typename T>
struct Conv2d {
  Param<T> w;  // [outC, inC*k*k]
  Param<T> b;  // [outC]
  kernels::ConvShape shape{};

  struct Ctx {
    Tensor<T> col;  // filled by forward, reused as dcol scratch in backward
  };

  Conv2d() = default;
  Conv2d(const kernels::ConvShape& s, util::Rng& rng) { init(s, rng); }

  void init(const kernels::ConvShape& s, util::Rng& rng) {
    shape = s;
    w.value = Tensor<T>({s.out_c, s.col_rows()});
    b.value = Tensor<T>({s.out_c});
    const double fan_in = static_cast<double>(s.col_rows());
    const double bound = std::sqrt(2.0) * std::sqrt(3.0 / fan_in);  // Kaiming uniform
    for (auto& x : w.value.v) x = static_cast<T>(rng.uniform(-bound, bound));
  }

  void register_params(const std::string& prefix, ParamSet<T>& ps) {
    ps.add(prefix + ".w", w);
    ps.add(prefix + ".b", b);
  }

  void forward(const Tensor<T>& x, Ctx& ctx, Tensor<T>& y) const {
    ctx.col = Tensor<T>({shape.col_rows(), shape.col_cols()});
    y = Tensor<T>({shape.out_c, shape.out_h(), shape.out_w()});
    kernels::conv2d_forward(x.data(), w.value.data(), b.value.data(), shape, ctx.col.data(),
                            y.data());
  }

  void backward(Ctx& ctx, const Tensor<T>& dy, GradStore<T>& grads, Tensor<T>& dx) const {
    kernels::conv2d_backward_params(dy.data(), ctx.col.data(), shape, grads.of(w).data(),
                                    grads.of(b).data());
    dx = Tensor<T>({shape.in_c, shape.in_h, shape.in_w});
    // col no longer needed; reuse it as the dcol scratch
    kernels::conv2d_backward_input(dy.data(), w.value.data(), shape, ctx.col.data(), dx.data());
  }
};

template <typename T>
struct ReLU {
  struct Ctx {
    Tensor<T> y;
  };

  static void forward(const Tensor<T>& x, Ctx& ctx, Tensor<T>& y) {
    y = x;
    for (auto& v : y.v) v = v > T(0) ? v : T(0);
    ctx.y = y;
  }

  static void backward(const Ctx& ctx, const Tensor<T>& dy, Tensor<T>& dx) {
    dx = dy;
    const T* y = ctx.y.data();
    T* d = dx.data();
    const int64_t n = dx.numel();
    for (int64_t i = 0; i < n; ++i)
      if (y[i] <= T(0)) d[i] = T(0);
  }
};

/// Layer normalization over the last dimension.
template <typename T>
struct LayerNorm {
  Param<T> gamma;  // [dim]
  Param<T> beta;   // [dim]
  int64_t dim = 0;

  struct Ctx {
    Tensor<T> xhat;        // [rows, dim]
    std::vector<T> rstd;   // per row
  };

  LayerNorm() = default;
  explicit LayerNorm(int64_t d) { init(d); }

  void init(int64_t d) {
    dim = d;
    gamma.value = Tensor<T>({d});
    beta.value = Tensor<T>({d});
    for (auto& v : gamma.value.v) v = T(1);
  }

  void register_params(const std::string& prefix, ParamSet<T>& ps) {
    ps.add(prefix + ".gamma", gamma);
    ps.add(prefix + ".beta", beta);
  }

  void forward(const Tensor<T>& x, Ctx& ctx, Tensor<T>& y) const {
    const int64_t rows = x.numel() / dim;
    ctx.xhat = Tensor<T>({rows, dim});
    ctx.rstd.assign(static_cast<size_t>(rows), T(0));
    y = Tensor<T>({rows, dim});
    for (int64_t r = 0; r < rows; ++r) {
      const T* xr = x.data() + r * dim;
      T mean = 0;
      for (int64_t i = 0; i < dim; ++i) mean += xr[i];
      mean /= static_cast<T>(dim);
      T var = 0;
      for (int64_t i = 0; i < dim; ++i) var += (xr[i] - mean) * (xr[i] - mean);
      var /= static_cast<T>(dim);
      const T rstd = T(1) / std::sqrt(var + T(1e-5));
      ctx.rstd[static_cast<size_t>(r)] = rstd;
      T* xh = ctx.xhat.data() + r * dim;
      T* yr = y.data() + r * dim;
      const T* g = gamma.value.data();
      const T* bb = beta.value.data();
      for (int64_t i = 0; i < dim; ++i) {
        xh[i] = (xr[i] - mean) * rstd;
        yr[i] = g[i] * xh[i] + bb[i];
      }
    }
  }

  void backward(const Ctx& ctx, const Tensor<T>& dy, GradStore<T>& grads, Tensor<T>& dx) const {
    const int64_t rows = dy.numel() / dim;
    dx = Tensor<T>({rows, dim});
    T* dg = grads.of(gamma).data();
    T* db = grads.of(beta).data();
    const T* g = gamma.value.data();
    for (int64_t r = 0; r < rows; ++r) {
      const T* dyr = dy.data() + r * dim;
      const T* xh = ctx.xhat.data() + r * dim;
      const T rstd = ctx.rstd[static_cast<size_t>(r)];
      T mean_dxhat = 0, mean_dxhat_xhat = 0;
      for (int64_t i = 0; i < dim; ++i) {
        const T dxhat = dyr[i] * g[i];
        mean_dxhat += dxhat;
        mean_dxhat_xhat += dxhat * xh[i];
        dg[i] += dyr[i] * xh[i];
        db[i] += dyr[i];
      }
      mean_dxhat /= static_cast<T>(dim);
      mean_dxhat_xhat /= static_cast<T>(dim);
      T* dxr = dx.data() + r * dim;
      for (int64_t i = 0; i < dim; ++i) {
        const T dxhat = dyr[i] * g[i];
        dxr[i] = rstd * (dxhat - mean_dxhat - xh[i] * mean_dxhat_xhat);
      }
    }
  }
};

inline namespace detail {
template <typename T>
void softmax_row(T* x, int64_t n) {
  T mx = x[0];
  for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  T sum = 0;
  for (int64_t i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - mx);
    sum += x[i];
  }
  for (int64_t i = 0; i < n; ++i) x[i] /= sum;
}

// Given p = softmax(z) and dp, computes dz in place of dp.
template <typename T>
void softmax_backward_row(const T* p, T* dp, int64_t n) {
  T dot = 0;
  for (int64_t i = 0; i < n; ++i) dot += p[i] * dp[i];
  for (int64_t i = 0; i < n; ++i) dp[i] = p[i] * (dp[i] - dot);
}
}  // namespace detail

/// Multi-head self-attention over a short token sequence (4 or 5 tokens).
/// Sizes are tiny, so per-head math uses plain loops.
template <typename T>
struct MultiHeadSelfAttention {
  Linear<T> wq, wk, wv, wo;
  int64_t dim = 0, heads = 0, dk = 0;

  struct Ctx {
    typename Linear<T>::Ctx cq, ck, cv, co;
    Tensor<T> q, k, v;    // [Tk, dim]
    Tensor<T> p;          // [heads, Tk, Tk], post-softmax
    Tensor<T> att;        // [Tk, dim] concatenated head outputs
    int64_t tokens = 0;
  };

  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(int64_t d, int64_t h, util::Rng& rng) { init(d, h, rng); }

  void init(int64_t d, int64_t h, util::Rng& rng) {
    dim = d;
    heads = h;
    dk = d / h;
    wq.init(d, d, rng);
    wk.init(d, d, rng);
    wv.init(d, d, rng);
    wo.init(d, d, rng);
  }

  void register_params(const std::string& prefix, ParamSet<T>& ps) {
    wq.register_params(prefix + ".wq", ps);
    wk.register_params(prefix + ".wk", ps);
    wv.register_params(prefix + ".wv", ps);
    wo.register_params(prefix + ".wo", ps);
  }

  void forward(const Tensor<T>& x, Ctx& ctx, Tensor<T>& y) const {
    const int64_t tk = x.shape[0];
    ctx.tokens = tk;
    wq.forward(x, ctx.cq, ctx.q);
    wk.forward(x, ctx.ck, ctx.k);
    wv.forward(x, ctx.cv, ctx.v);
    ctx.p = Tensor<T>({heads, tk, tk});
    ctx.att = Tensor<T>({tk, dim});
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    for (int64_t h = 0; h < heads; ++h) {
      const int64_t off = h * dk;
      T* ph = ctx.p.data() + h * tk * tk;
      for (int64_t i = 0; i < tk; ++i) {
        const T* qi = ctx.q.data() + i * dim + off;
        for (int64_t j = 0; j < tk; ++j) {
          const T* kj = ctx.k.data() + j * dim + off;
          T s = 0;
          for (int64_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
          ph[i * tk + j] = s * scale;
        }
        softmax_row(ph + i * tk, tk);
      }
      for (int64_t i = 0; i < tk; ++i) {
        T* out = ctx.att.data() + i * dim + off;
        for (int64_t c = 0; c < dk; ++c) out[c] = T(0);
        for (int64_t j = 0; j < tk; ++j) {
          const T pij = ph[i * tk + j];
          const T* vj = ctx.v.data() + j * dim + off;
          for (int64_t c = 0; c < dk; ++c) out[c] += pij * vj[c];
        }
      }
    }
    wo.forward(ctx.att, ctx.co, y);
  }

  void backward(Ctx& ctx, const Tensor<T>& dy, GradStore<T>& grads, Tensor<T>& dx) const {
    const int64_t tk = ctx.tokens;
    Tensor<T> datt;
    wo.backward(ctx.co, dy, grads, datt);
    Tensor<T> dq({tk, dim}), dkk({tk, dim}), dv({tk, dim});
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    std::vector<T> dp(static_cast<size_t>(tk));
    for (int64_t h = 0; h < heads; ++h) {
      const int64_t off = h * dk;
      const T* ph = ctx.p.data() + h * tk * tk;
      for (int64_t i = 0; i < tk; ++i) {
        const T* do_i = datt.data() + i * dim + off;
        // dv += p^T * datt ; dp = datt . v
        for (int64_t j = 0; j < tk; ++j) {
          const T* vj = ctx.v.data() + j * dim + off;
          T s = 0;
          for (int64_t c = 0; c < dk; ++c) s += do_i[c] * vj[c];
          dp[static_cast<size_t>(j)] = s;
          T* dvj = dv.data() + j * dim + off;
          const T pij = ph[i * tk + j];
          for (int64_t c = 0; c < dk; ++c) dvj[c] += pij * do_i[c];
        }
        softmax_backward_row(ph + i * tk, dp.data(), tk);
        // ds (in dp) -> dq_i, dk_j
        T* dqi = dq.data() + i * dim + off;
        for (int64_t j = 0; j < tk; ++j) {
          const T dsij = dp[static_cast<size_t>(j)] * scale;
          const T* kj = ctx.k.data() + j * dim + off;
          const T* qi = ctx.q.data() + i * dim + off;
          T* dkj = dkk.data() + j * dim + off;
          for (int64_t c = 0; c < dk; ++c) {
            dqi[c] += dsij * kj[c];
            dkj[c] += dsij * qi[c];
          }
        }
      }
    }
    Tensor<T> dx_q, dx_k, dx_v;
    wq.backward(ctx.cq, dq, grads, dx_q);
    wk.backward(ctx.ck, dkk, grads, dx_k);
    wv.backward(ctx.cv, dv, grads, dx_v);
    dx = dx_q;
    for (int64_t i = 0; i < dx.numel(); ++i) dx.v[static_cast<size_t>(i)] +=
        dx_k.v[static_cast<size_t>(i)] + dx_v.v[static_cast<size_t>(i)];
  }
};

template <typename T>
struct Dropout {
  double p = 0.5;

  struct Ctx {
    Tensor<T> mask;  // empty in eval mode
  };

  void forward(const Tensor<T>& x, bool train, util::Rng& rng, Ctx& ctx, Tensor<T>& y) const {
    if (!train || p <= 0.0) {
      y = x;
      ctx.mask = Tensor<T>();
      return;
    }
    ctx.mask = Tensor<T>(x.shape);
    y = x;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    for (int64_t i = 0; i < x.numel(); ++i) {
      const T m = rng.coin(1.0 - p) ? keep_scale : T(0);
      ctx.mask.v[static_cast<size_t>(i)] = m;
      y.v[static_cast<size_t>(i)] *= m;
    }
  }

  void backward(const Ctx& ctx, const Tensor<T>& dy, Tensor<T>& dx) const {
    dx = dy;
    if (ctx.mask.numel() == 0) return;
    for (int64_t i = 0; i < dx.numel(); ++i)
      dx.v[static_cast<size_t>(i)] *= ctx.mask.v[static_cast<size_t>(i)];
  }
};

template <typename T>
struct GlobalAvgPool {
  struct Ctx {
    int64_t c = 0, hw = 0;
  };

  static void forward(const Tensor<T>& x, Ctx& ctx, Tensor<T>& y) {
    ctx.c = x.shape[0];
    ctx.hw = x.shape[1] * x.shape[2];
    y = Tensor<T>({ctx.c});
    for (int64_t c = 0; c < ctx.c; ++c) {
      const T* xc = x.data() + c * ctx.hw;
      T s = 0;
#pragma omp simd reduction(+ : s)
      for (int64_t i = 0; i < ctx.hw; ++i) s += xc[i];
      y.v[static_cast<size_t>(c)] = s / static_cast<T>(ctx.hw);
    }
  }

  static void backward(const Ctx& ctx, const Tensor<T>& dy, Tensor<T>& dx) {
    dx = Tensor<T>({ctx.c, ctx.hw, 1});
    // shape restored by the caller; only the flat layout matters
    for (int64_t c = 0; c < ctx.c; ++c) {
      const T g = dy.v[static_cast<size_t>(c)] / static_cast<T>(ctx.hw);
      T* d = dx.data() + c * ctx.hw;
      for (int64_t i = 0; i < ctx.hw; ++i) d[i] = g;
    }
  }
};

// ---------------------------------------------------------------------------
// Adam with optional per-parameter freeze mask.
// ---------------------------------------------------------------------------

template <typename T>
class Adam {
 public:
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void init(const ParamSet<T>& ps) {
    m_.clear();
    v_.clear();
    for (size_t i = 0; i < ps.size(); ++i) {
      m_.emplace_back(ps.entry(i).value->shape);
      v_.emplace_back(ps.entry(i).value->shape);
    }
    frozen_.assign(ps.size(), false);
    t_ = 0;
  }

  void freeze(const std::vector<int>& ids) {
    for (int id : ids) frozen_[static_cast<size_t>(id)] = true;
  }
  bool is_frozen(size_t i) const { return frozen_[i]; }

  void step(ParamSet<T>& ps, const GradStore<T>& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (size_t i = 0; i < ps.size(); ++i) {
      if (frozen_[i]) continue;
      T* w = ps.entry(i).value->data();
      T* m = m_[i].data();
      T* v = v_[i].data();
      const T* g = grads.g[i].data();
      const int64_t n = m_[i].numel();
      const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
      const T lr_t = static_cast<T>(lr);
      const T e = static_cast<T>(eps);
      const T r1 = static_cast<T>(1.0 / bc1), r2 = static_cast<T>(1.0 / bc2);
#pragma omp simd
      for (int64_t j = 0; j < n; ++j) {
        m[j] = b1 * m[j] + (T(1) - b1) * g[j];
        v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
        const T mhat = m[j] * r1;
        const T vhat = v[j] * r2;
        w[j] -= lr_t * mhat / (std::sqrt(vhat) + e);
      }
    }
  }

  int64_t steps() const { return t_; }

 private:
  std::vector<Tensor<T>> m_, v_;
  std::vector<bool> frozen_;
  int64_t t_ = 0;
};

/// Cosine annealing from lr0 to 0 over max_epochs; evaluated per epoch.
inline double cosine_lr(double lr0, int epoch, int max_epochs) {
  return lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(epoch) /
                                      static_cast<double>(max_epochs)));
}

}  // namespace hearbc::nn
