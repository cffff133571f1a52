#pragma once

#include <cstdint>
#include <omp.h>

namespace hearbc::kernels {

// Optimized OpenMP kernels for the hot paths (GEMM and convolution).
// Every kernel here has a naive serial twin in hearbc::kernels::ref that the
// tests compare against and the bench_kernels tool times.
//
// Determinism contract: for a fixed binary, results are bit-identical across
// runs and across thread counts. Each output element is produced by exactly
// one thread with a fixed inner summation order, and there are no cross-row
// reductions.

inline bool use_parallel(int64_t work) {
  return work > (1 << 16) && !omp_in_parallel();
}

// ---------------------------------------------------------------------------
// GEMM family. Row-major. beta scales the existing C (0 overwrites, 1 accumulates).
// ---------------------------------------------------------------------------

// C[M,N] = beta*C + A[M,K] * B[K,N]
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, int64_t M, int64_t N, int64_t K, T beta) {
  const int64_t work = M * N * K;
#pragma omp parallel for schedule(static) if (use_parallel(work))
  for (int64_t i0 = 0; i0 < M; i0 += 4) {
    const int64_t rows = (M - i0) < 4 ? (M - i0) : 4;
    if (rows == 4) {
      T* c0 = C + (i0 + 0) * N;
      T* c1 = C + (i0 + 1) * N;
      T* c2 = C + (i0 + 2) * N;
      T* c3 = C + (i0 + 3) * N;
      for (int64_t j = 0; j < N; ++j) {
        c0[j] *= beta; c1[j] *= beta; c2[j] *= beta; c3[j] *= beta;
      }
      for (int64_t k = 0; k < K; ++k) {
        const T a0 = A[(i0 + 0) * K + k];
        const T a1 = A[(i0 + 1) * K + k];
        const T a2 = A[(i0 + 2) * K + k];
        const T a3 = A[(i0 + 3) * K + k];
        const T* b = B + k * N;
#pragma omp simd
        for (int64_t j = 0; j < N; ++j) {
          const T bj = b[j];
          c0[j] += a0 * bj;
          c1[j] += a1 * bj;
          c2[j] += a2 * bj;
          c3[j] += a3 * bj;
        }
      }
    } else {
      for (int64_t i = i0; i < i0 + rows; ++i) {
        T* c = C + i * N;
        for (int64_t j = 0; j < N; ++j) c[j] *= beta;
        for (int64_t k = 0; k < K; ++k) {
          const T a = A[i * K + k];
          const T* b = B + k * N;
#pragma omp simd
          for (int64_t j = 0; j < N; ++j) c[j] += a * b[j];
        }
      }
    }
  }
}

// C[M,N] = beta*C + A[M,K] * B^T, with B stored [N,K]
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, int64_t M, int64_t N, int64_t K, T beta) {
  const int64_t work = M * N * K;
#pragma omp parallel for schedule(static) if (use_parallel(work))
  for (int64_t i = 0; i < M; ++i) {
    const T* a = A + i * K;
    T* c = C + i * N;
    int64_t j = 0;
    for (; j + 4 <= N; j += 4) {
      const T* b0 = B + (j + 0) * K;
      const T* b1 = B + (j + 1) * K;
      const T* b2 = B + (j + 2) * K;
      const T* b3 = B + (j + 3) * K;
      T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
      for (int64_t k = 0; k < K; ++k) {
        const T ak = a[k];
        s0 += ak * b0[k];
        s1 += ak * b1[k];
        s2 += ak * b2[k];
        s3 += ak * b3[k];
      }
      c[j + 0] = beta * c[j + 0] + s0;
      c[j + 1] = beta * c[j + 1] + s1;
      c[j + 2] = beta * c[j + 2] + s2;
      c[j + 3] = beta * c[j + 3] + s3;
    }
    for (; j < N; ++j) {
      const T* b = B + j * K;
      T s = 0;
#pragma omp simd reduction(+ : s)
      for (int64_t k = 0; k < K; ++k) s += a[k] * b[k];
      c[j] = beta * c[j] + s;
    }
  }
}

// C[M,N] = beta*C + A^T * B, with A stored [K,M], B stored [K,N]
template <typename T>
void gemm_tn(const T* A, const T* B, T* C, int64_t M, int64_t N, int64_t K, T beta) {
  const int64_t work = M * N * K;
#pragma omp parallel for schedule(static) if (use_parallel(work))
  for (int64_t i0 = 0; i0 < M; i0 += 4) {
    const int64_t rows = (M - i0) < 4 ? (M - i0) : 4;
    for (int64_t i = i0; i < i0 + rows; ++i) {
      T* c = C + i * N;
      for (int64_t j = 0; j < N; ++j) c[j] *= beta;
    }
    for (int64_t k = 0; k < K; ++k) {
      const T* b = B + k * N;
      for (int64_t i = i0; i < i0 + rows; ++i) {
        const T a = A[k * M + i];
        T* c = C + i * N;
#pragma omp simd
        for (int64_t j = 0; j < N; ++j) c[j] += a * b[j];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Convolution, NCHW single image, square kernel, zero padding.
// ---------------------------------------------------------------------------

struct ConvShape {
  int64_t in_c, in_h, in_w;
  int64_t out_c;
  int64_t kernel;
  int64_t stride;
  int64_t pad;

  int64_t out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int64_t out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  int64_t col_rows() const { return in_c * kernel * kernel; }
  int64_t col_cols() const { return out_h() * out_w(); }
};

// col[(c*k*k + ki*k + kj), (oh*outW + ow)] = x[c, oh*s+ki-p, ow*s+kj-p] (0 outside)
template <typename T>
void im2col(const T* x, const ConvShape& s, T* col) {
  const int64_t oh = s.out_h(), ow = s.out_w(), k = s.kernel;
#pragma omp parallel for schedule(static) if (use_parallel(s.in_c * k * k * oh * ow))
  for (int64_t c = 0; c < s.in_c; ++c) {
    const T* xc = x + c * s.in_h * s.in_w;
    for (int64_t ki = 0; ki < k; ++ki) {
      for (int64_t kj = 0; kj < k; ++kj) {
        T* row = col + ((c * k + ki) * k + kj) * oh * ow;
        for (int64_t i = 0; i < oh; ++i) {
          const int64_t y = i * s.stride + ki - s.pad;
          T* dst = row + i * ow;
          if (y < 0 || y >= s.in_h) {
            for (int64_t j = 0; j < ow; ++j) dst[j] = T(0);
            continue;
          }
          const T* src = xc + y * s.in_w;
          for (int64_t j = 0; j < ow; ++j) {
            const int64_t xcol = j * s.stride + kj - s.pad;
            dst[j] = (xcol >= 0 && xcol < s.in_w) ? src[xcol] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-add the col layout back into an image. dx must be zeroed by the caller.
template <typename T>
void col2im_add(const T* col, const ConvShape& s, T* dx) {
  const int64_t oh = s.out_h(), ow = s.out_w(), k = s.kernel;
#pragma omp parallel for schedule(static) if (use_parallel(s.in_c * k * k * oh * ow))
  for (int64_t c = 0; c < s.in_c; ++c) {
    T* xc = dx + c * s.in_h * s.in_w;
    for (int64_t ki = 0; ki < k; ++ki) {
      for (int64_t kj = 0; kj < k; ++kj) {
        const T* row = col + ((c * k + ki) * k + kj) * oh * ow;
        for (int64_t i = 0; i < oh; ++i) {
          const int64_t y = i * s.stride + ki - s.pad;
          if (y < 0 || y >= s.in_h) continue;
          T* dst = xc + y * s.in_w;
          const T* src = row + i * ow;
          for (int64_t j = 0; j < ow; ++j) {
            const int64_t xcol = j * s.stride + kj - s.pad;
            if (xcol >= 0 && xcol < s.in_w) dst[xcol] += src[j];
          }
        }
      }
    }
  }
}

// y[outC, outH*outW] = W[outC, inC*k*k] * col + b. col is caller scratch
// (col_rows x col_cols) and is left filled for the backward pass.
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, const ConvShape& s, T* col, T* y) {
  im2col(x, s, col);
  gemm_nn(w, col, y, s.out_c, s.col_cols(), s.col_rows(), T(0));
  const int64_t n = s.col_cols();
  for (int64_t oc = 0; oc < s.out_c; ++oc) {
    T* yr = y + oc * n;
    const T bias = b[oc];
#pragma omp simd
    for (int64_t j = 0; j < n; ++j) yr[j] += bias;
  }
}

// dx[inC,H,W] = scatter(W^T * dy); dcol is caller scratch (col_rows x col_cols)
template <typename T>
void conv2d_backward_input(const T* dy, const T* w, const ConvShape& s, T* dcol, T* dx) {
  gemm_tn(w, dy, dcol, s.col_rows(), s.col_cols(), s.out_c, T(0));
  const int64_t n = s.in_c * s.in_h * s.in_w;
  for (int64_t i = 0; i < n; ++i) dx[i] = T(0);
  col2im_add(dcol, s, dx);
}

// dw += dy * col^T ; db += rowsum(dy). col is the buffer filled by the forward.
template <typename T>
void conv2d_backward_params(const T* dy, const T* col, const ConvShape& s, T* dw, T* db) {
  gemm_nt(dy, col, dw, s.out_c, s.col_rows(), s.col_cols(), T(1));
  const int64_t n = s.col_cols();
  for (int64_t oc = 0; oc < s.out_c; ++oc) {
    const T* dyr = dy + oc * n;
    T acc = 0;
#pragma omp simd reduction(+ : acc)
    for (int64_t j = 0; j < n; ++j) acc += dyr[j];
    db[oc] += acc;
  }
}

// ---------------------------------------------------------------------------
// Naive serial reference implementations (kept for tests and the benchmark).
// ---------------------------------------------------------------------------
namespace ref {

template <typename T>
void gemm_nn(const T* A, const T* B, T* C, int64_t M, int64_t N, int64_t K, T beta) {
  for (int64_t i = 0; i < M; ++i)
    for (int64_t j = 0; j < N; ++j) {
      T s = 0;
      for (int64_t k = 0; k < K; ++k) s += A[i * K + k] * B[k * N + j];
      C[i * N + j] = beta * C[i * N + j] + s;
    }
}

template <typename T>
void gemm_nt(const T* A, const T* B, T* C, int64_t M, int64_t N, int64_t K, T beta) {
  for (int64_t i = 0; i < M; ++i)
    for (int64_t j = 0; j < N; ++j) {
      T s = 0;
      for (int64_t k = 0; k < K; ++k) s += A[i * K + k] * B[j * K + k];
      C[i * N + j] = beta * C[i * N + j] + s;
    }
}

template <typename T>
void gemm_tn(const T* A, const T* B, T* C, int64_t M, int64_t N, int64_t K, T beta) {
  for (int64_t i = 0; i < M; ++i)
    for (int64_t j = 0; j < N; ++j) {
      T s = 0;
      for (int64_t k = 0; k < K; ++k) s += A[k * M + i] * B[k * N + j];
      C[i * N + j] = beta * C[i * N + j] + s;
    }
}

// Direct 7-loop convolution
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, const ConvShape& s, T* y) {
  const int64_t oh = s.out_h(), ow = s.out_w(), k = s.kernel;
  for (int64_t oc = 0; oc < s.out_c; ++oc) {
    for (int64_t i = 0; i < oh; ++i) {
      for (int64_t j = 0; j < ow; ++j) {
        T acc = b[oc];
        for (int64_t c = 0; c < s.in_c; ++c) {
          for (int64_t ki = 0; ki < k; ++ki) {
            const int64_t yy = i * s.stride + ki - s.pad;
            if (yy < 0 || yy >= s.in_h) continue;
            for (int64_t kj = 0; kj < k; ++kj) {
              const int64_t xx = j * s.stride + kj - s.pad;
              if (xx < 0 || xx >= s.in_w) continue;
              acc += w[((oc * s.in_c + c) * k + ki) * k + kj] * x[(c * s.in_h + yy) * s.in_w + xx];
            }
          }
        }
        y[(oc * oh + i) * ow + j] = acc;
      }
    }
  }
}

template <typename T>
void conv2d_backward(const T* x, const T* w, const T* dy, const ConvShape& s, T* dx, T* dw,
                     T* db) {
  const int64_t oh = s.out_h(), ow = s.out_w(), k = s.kernel;
  for (int64_t i = 0; i < s.in_c * s.in_h * s.in_w; ++i) dx[i] = T(0);
  for (int64_t oc = 0; oc < s.out_c; ++oc) {
    for (int64_t i = 0; i < oh; ++i) {
      for (int64_t j = 0; j < ow; ++j) {
        const T g = dy[(oc * oh + i) * ow + j];
        db[oc] += g;
        for (int64_t c = 0; c < s.in_c; ++c) {
          for (int64_t ki = 0; ki < k; ++ki) {
            const int64_t yy = i * s.stride + ki - s.pad;
            if (yy < 0 || yy >= s.in_h) continue;
            for (int64_t kj = 0; kj < k; ++kj) {
              const int64_t xx = j * s.stride + kj - s.pad;
              if (xx < 0 || xx >= s.in_w) continue;
              dw[((oc * s.in_c + c) * k + ki) * k + kj] += x[(c * s.in_h + yy) * s.in_w + xx] * g;
              dx[(c * s.in_h + yy) * s.in_w + xx] += w[((oc * s.in_c + c) * k + ki) * k + kj] * g;
            }
          }
        }
      }
    }
  }
}

}  // namespace ref
}  // namespace hearbc::kernels
