#include <doctest.h>

#include <vector>

#include "hearbc/kernels.hpp"
#include "hearbc/util.hpp"

using namespace hearbc;

namespace {

template <typename T>
std::vector<T> random_vec(int64_t n, util::Rng& rng) {
  std::vector<T> v(static_cast<size_t>(n));
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

template <typename T>
void check_close(const std::vector<T>& a, const std::vector<T>& b, double tol) {
  REQUIRE(a.size() == b.size());
  double max_err = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max(1.0, std::abs(static_cast<double>(b[i])));
    max_err = std::max(max_err, std::abs(static_cast<double>(a[i] - b[i])) / denom);
  }
  CHECK(max_err < tol);
}

}  // namespace

TEST_CASE("gemm variants match the serial reference") {
  util::Rng rng(42);
  for (auto [M, N, K] : {std::tuple<int64_t, int64_t, int64_t>{7, 9, 5},
                         {64, 784, 288},
                         {1, 512, 2560},
                         {33, 17, 129}}) {
    auto A = random_vec<float>(M * K, rng);
    auto B_nn = random_vec<float>(K * N, rng);
    auto B_nt = random_vec<float>(N * K, rng);
    auto A_tn = random_vec<float>(K * M, rng);
    std::vector<float> C1(static_cast<size_t>(M * N), 0.5f), C2 = C1;

    kernels::gemm_nn(A.data(), B_nn.data(), C1.data(), M, N, K, 1.0f);
    kernels::ref::gemm_nn(A.data(), B_nn.data(), C2.data(), M, N, K, 1.0f);
    check_close(C1, C2, 1e-4);

    std::fill(C1.begin(), C1.end(), 0.f);
    std::fill(C2.begin(), C2.end(), 0.f);
    kernels::gemm_nt(A.data(), B_nt.data(), C1.data(), M, N, K, 0.0f);
    kernels::ref::gemm_nt(A.data(), B_nt.data(), C2.data(), M, N, K, 0.0f);
    check_close(C1, C2, 1e-4);

    kernels::gemm_tn(A_tn.data(), B_nn.data(), C1.data(), M, N, K, 0.0f);
    kernels::ref::gemm_tn(A_tn.data(), B_nn.data(), C2.data(), M, N, K, 0.0f);
    check_close(C1, C2, 1e-4);
  }
}

TEST_CASE("gemm double precision agrees tightly with reference") {
  util::Rng rng(7);
  const int64_t M = 13, N = 21, K = 34;
  auto A = random_vec<double>(M * K, rng);
  auto B = random_vec<double>(K * N, rng);
  std::vector<double> C1(static_cast<size_t>(M * N)), C2 = C1;
  kernels::gemm_nn(A.data(), B.data(), C1.data(), M, N, K, 0.0);
  kernels::ref::gemm_nn(A.data(), B.data(), C2.data(), M, N, K, 0.0);
  check_close(C1, C2, 1e-13);
}

TEST_CASE("conv2d forward and backward match the direct reference") {
  util::Rng rng(3);
  for (auto s : {kernels::ConvShape{3, 17, 19, 8, 3, 2, 1},
                 kernels::ConvShape{4, 10, 10, 6, 3, 1, 1},
                 kernels::ConvShape{2, 16, 16, 5, 7, 2, 3},
                 kernels::ConvShape{3, 9, 9, 4, 1, 1, 0}}) {
    auto x = random_vec<float>(s.in_c * s.in_h * s.in_w, rng);
    auto w = random_vec<float>(s.out_c * s.col_rows(), rng);
    auto b = random_vec<float>(s.out_c, rng);
    const int64_t out_n = s.out_c * s.out_h() * s.out_w();

    std::vector<float> col(static_cast<size_t>(s.col_rows() * s.col_cols()));
    std::vector<float> y1(static_cast<size_t>(out_n)), y2(static_cast<size_t>(out_n));
    kernels::conv2d_forward(x.data(), w.data(), b.data(), s, col.data(), y1.data());
    kernels::ref::conv2d_forward(x.data(), w.data(), b.data(), s, y2.data());
    check_close(y1, y2, 1e-4);

    auto dy = random_vec<float>(out_n, rng);
    std::vector<float> dx1(x.size()), dw1(w.size(), 0.f), db1(b.size(), 0.f);
    std::vector<float> dx2(x.size()), dw2(w.size(), 0.f), db2(b.size(), 0.f);

    kernels::conv2d_backward_params(dy.data(), col.data(), s, dw1.data(), db1.data());
    std::vector<float> dcol(col.size());
    kernels::conv2d_backward_input(dy.data(), w.data(), s, dcol.data(), dx1.data());
    kernels::ref::conv2d_backward(x.data(), w.data(), dy.data(), s, dx2.data(), dw2.data(),
                                  db2.data());
    check_close(dx1, dx2, 1e-4);
    check_close(dw1, dw2, 1e-4);
    check_close(db1, db2, 1e-4);
  }
}

TEST_CASE("im2col/col2im round trip accumulates overlaps correctly") {
  // col2im(im2col(x)) multiplies each pixel by its patch-coverage count;
  // with kernel 1, stride 1 the round trip is the identity.
  util::Rng rng(11);
  kernels::ConvShape s{3, 8, 8, 1, 1, 1, 0};
  auto x = random_vec<float>(s.in_c * s.in_h * s.in_w, rng);
  std::vector<float> col(static_cast<size_t>(s.col_rows() * s.col_cols()));
  kernels::im2col(x.data(), s, col.data());
  std::vector<float> back(x.size(), 0.f);
  kernels::col2im_add(col.data(), s, back.data());
  check_close(back, x, 1e-6);
}
