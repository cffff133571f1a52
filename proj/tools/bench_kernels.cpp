// Times the OpenMP kernels against their serial reference implementations
// on the shapes that dominate training and inference.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "hearbc/kernels.hpp"
#include "hearbc/util.hpp"

using namespace hearbc;
using Clock = std::chrono::steady_clock;

namespace {

double time_of(const std::function<void()>& f, int reps) {
  f();  // warm-up
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) f();
  const auto t1 = Clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void bench_gemm(int64_t M, int64_t N, int64_t K, int reps) {
  util::Rng rng(0);
  std::vector<float> A(static_cast<size_t>(M * K)), B(static_cast<size_t>(K * N)),
      C(static_cast<size_t>(M * N));
  for (auto& v : A) v = rng.uniformf(-1.f, 1.f);
  for (auto& v : B) v = rng.uniformf(-1.f, 1.f);
  const double flops = 2.0 * static_cast<double>(M) * N * K;

  const double t_omp =
      time_of([&] { kernels::gemm_nn(A.data(), B.data(), C.data(), M, N, K, 0.f); }, reps);
  const double t_ref =
      time_of([&] { kernels::ref::gemm_nn(A.data(), B.data(), C.data(), M, N, K, 0.f); },
              std::max(1, reps / 8));
  std::printf("gemm_nn   %4lld x %5lld x %4lld   omp %8.3f ms (%6.2f GFLOPS)   ref %8.3f ms (%6.2f GFLOPS)   speedup %5.1fx\n",
              static_cast<long long>(M), static_cast<long long>(N), static_cast<long long>(K),
              t_omp * 1e3, flops / t_omp / 1e9, t_ref * 1e3, flops / t_ref / 1e9, t_ref / t_omp);
}

void bench_conv(const kernels::ConvShape& s, const char* tag, int reps) {
  util::Rng rng(0);
  std::vector<float> x(static_cast<size_t>(s.in_c * s.in_h * s.in_w)),
      w(static_cast<size_t>(s.out_c * s.col_rows())), b(static_cast<size_t>(s.out_c)),
      col(static_cast<size_t>(s.col_rows() * s.col_cols())),
      y(static_cast<size_t>(s.out_c * s.col_cols()));
  for (auto& v : x) v = rng.uniformf(-1.f, 1.f);
  for (auto& v : w) v = rng.uniformf(-1.f, 1.f);
  const double flops = 2.0 * static_cast<double>(s.out_c) * s.col_cols() * s.col_rows();

  const double t_omp = time_of(
      [&] { kernels::conv2d_forward(x.data(), w.data(), b.data(), s, col.data(), y.data()); },
      reps);
  const double t_ref = time_of(
      [&] { kernels::ref::conv2d_forward(x.data(), w.data(), b.data(), s, y.data()); },
      std::max(1, reps / 8));
  std::printf("conv2d    %-18s omp %8.3f ms (%6.2f GFLOPS)   ref %8.3f ms (%6.2f GFLOPS)   speedup %5.1fx\n",
              tag, t_omp * 1e3, flops / t_omp / 1e9, t_ref * 1e3, flops / t_ref / 1e9,
              t_ref / t_omp);
}

}  // namespace

int main() {
  std::printf("threads: %d\n\n", omp_get_max_threads());

  bench_gemm(32, 3136, 27, 50);
  bench_gemm(64, 784, 288, 50);
  bench_gemm(128, 196, 576, 50);
  bench_gemm(256, 49, 1152, 50);
  bench_gemm(512, 512, 512, 20);
  bench_gemm(1, 512, 2560, 200);
  std::printf("\n");

  bench_conv({3, 112, 112, 32, 3, 2, 1}, "visual block 1", 50);
  bench_conv({32, 56, 56, 64, 3, 2, 1}, "visual block 2", 50);
  bench_conv({64, 28, 28, 128, 3, 2, 1}, "visual block 3", 50);
  bench_conv({128, 14, 14, 256, 3, 2, 1}, "visual block 4", 50);
  bench_conv({1, 80, 198, 32, 3, 2, 1}, "audio block 1", 50);
  return 0;
}
