#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fusionette/attention.hpp"
#include "fusionette/error.hpp"
#include "oracle.hpp"

using namespace fusionette;

namespace {

DiffAttnParams random_diff_params(std::size_t d_model, std::size_t d, double lambda,
                                  std::mt19937_64& rng, bool requires_grad = false) {
  DiffAttnParams p;
  p.w_q = oracle::random_tensor({d_model, 2 * d}, rng, requires_grad);
  p.w_k = oracle::random_tensor({d_model, 2 * d}, rng, requires_grad);
  p.w_v = oracle::random_tensor({d_model, 2 * d}, rng, requires_grad);
  p.lambda = Tensor::from_values({1}, {lambda}, requires_grad);
  p.d = d;
  p.d_model = d_model;
  return p;
}

}  // namespace

TEST_CASE("reshape_tokens examples") {
  std::vector<double> v(8);
  for (std::size_t i = 0; i < 8; ++i) v[i] = static_cast<double>(i) * 0.5 - 1.0;
  const auto x = Tensor::from_values({8}, v);
  const auto four = reshape_tokens(x, 4);
  CHECK(four.tokens.shape() == Shape{4, 2});
  CHECK(four.origin_dim == 8);
  CHECK(reshape_tokens(x, 1).tokens.shape() == Shape{1, 8});
  const auto back = flatten_tokens(four.tokens);
  CHECK(back.shape() == Shape{8});
  CHECK(std::equal(back.values().begin(), back.values().end(), v.begin()));
  CHECK(reshape_tokens(Tensor::zeros({3, 8}), 2).tokens.shape() == Shape{3, 2, 4});
  CHECK_THROWS_AS(reshape_tokens(x, 3), InvalidArgument);
}

TEST_CASE("self_attn examples") {
  std::mt19937_64 rng(4);
  SUBCASE("single token is the identity") {
    const auto v = oracle::random_tensor({1, 6}, rng);
    const auto out = self_attn(v);
    CHECK(std::equal(out.values().begin(), out.values().end(), v.values().begin()));
  }
  SUBCASE("identical rows give identical outputs") {
    const auto v = Tensor::from_values({3, 2}, {0.3, -1.0, 0.3, -1.0, 2.0, 0.5});
    const auto out = self_attn(v);
    CHECK(out.at(0) == out.at(2));
    CHECK(out.at(1) == out.at(3));
  }
  SUBCASE("random 3x4 against brute force") {
    const auto m = oracle::random_mat(3, 4, rng);
    CHECK(oracle::max_abs_diff(self_attn(oracle::from_mat(m)), oracle::attention(m, m)) < 1e-12);
  }
}

TEST_CASE("cross_attn examples") {
  std::mt19937_64 rng(8);
  SUBCASE("B = A reduces to self_attn") {
    const auto a = oracle::random_tensor({4, 3}, rng);
    const auto x = cross_attn(a, a), y = self_attn(a);
    CHECK(std::equal(x.values().begin(), x.values().end(), y.values().begin()));
  }
  SUBCASE("a single key row is copied to every output row") {
    const auto a = oracle::random_tensor({3, 2}, rng);
    const auto b = Tensor::from_values({1, 2}, {0.25, -4.0});
    const auto out = cross_attn(a, b);
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(out.at(r * 2) == 0.25);
      CHECK(out.at(r * 2 + 1) == -4.0);
    }
  }
  SUBCASE("random 2x3, 4x3 against brute force") {
    const auto a = oracle::random_mat(2, 3, rng), b = oracle::random_mat(4, 3, rng);
    CHECK(oracle::max_abs_diff(cross_attn(oracle::from_mat(a), oracle::from_mat(b)),
                               oracle::attention(a, b)) < 1e-12);
  }
  SUBCASE("width mismatch") {
    CHECK_THROWS_AS(cross_attn(Tensor::zeros({2, 3}), Tensor::zeros({2, 4})), DimensionError);
  }
}

TEST_CASE("diff_attn examples") {
  std::mt19937_64 rng(13);
  SUBCASE("one token: (1 - lambda) X W_v") {
    const auto p = random_diff_params(4, 2, 0.8, rng);
    const auto x = oracle::random_mat(1, 4, rng);
    const auto want = oracle::scaled(oracle::matmul(x, oracle::to_mat(p.w_v)), 1.0 - 0.8);
    CHECK(oracle::max_abs_diff(diff_attn(oracle::from_mat(x), p), want) < 1e-12);
  }
  SUBCASE("lambda 0 is single-branch attention") {
    const auto p = random_diff_params(4, 2, 0.0, rng);
    const auto x = oracle::random_mat(3, 4, rng);
    const auto q = oracle::columns(oracle::matmul(x, oracle::to_mat(p.w_q)), 0, 2);
    const auto k = oracle::columns(oracle::matmul(x, oracle::to_mat(p.w_k)), 0, 2);
    const auto v = oracle::matmul(x, oracle::to_mat(p.w_v));
    const auto a = oracle::softmax_rows(
        oracle::scaled(oracle::matmul(q, oracle::transpose(k)), 1.0 / std::sqrt(2.0)));
    CHECK(oracle::max_abs_diff(diff_attn(oracle::from_mat(x), p), oracle::matmul(a, v)) < 1e-12);
  }
  SUBCASE("random N=3, d_model=4, d=2 against brute force") {
    const auto p = random_diff_params(4, 2, 0.37, rng);
    const auto x = oracle::random_mat(3, 4, rng);
    const auto want = oracle::diff_attention(x, oracle::to_mat(p.w_q), oracle::to_mat(p.w_k),
                                             oracle::to_mat(p.w_v), 0.37, 2);
    CHECK(oracle::max_abs_diff(diff_attn(oracle::from_mat(x), p), want) < 1e-12);
  }
  SUBCASE("width mismatch") {
    const auto p = random_diff_params(4, 2, 0.8, rng);
    CHECK_THROWS_AS(diff_attn(Tensor::zeros({3, 5}), p), DimensionError);
  }
}

TEST_CASE("self_attn rows stay inside the envelope of the input rows") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = oracle::random_mat(5, 3, rng, -3.0, 3.0);
    const auto out = self_attn(oracle::from_mat(m));
    for (std::size_t j = 0; j < 3; ++j) {
      double lo = m[0][j], hi = m[0][j];
      for (const auto& row : m) {
        lo = std::min(lo, row[j]);
        hi = std::max(hi, row[j]);
      }
      for (std::size_t r = 0; r < 5; ++r) {
        CHECK(out.at(r * 3 + j) >= lo - 1e-12);
        CHECK(out.at(r * 3 + j) <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("self_attn is permutation equivariant") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = oracle::random_mat(4, 3, rng);
    std::vector<std::size_t> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    oracle::Mat permuted;
    for (auto i : perm) permuted.push_back(m[i]);
    const auto out = oracle::to_mat(self_attn(oracle::from_mat(m)));
    const auto out_p = oracle::to_mat(self_attn(oracle::from_mat(permuted)));
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(std::abs(out_p[r][j] - out[perm[r]][j]) < 1e-12);
  }
}

TEST_CASE("diff_attn mixing rows sum to 1 - lambda") {
  // With W_v chosen so that V = X, feeding X = all-ones columns exposes the
  // row sums of the mixing matrix directly.
  std::mt19937_64 rng(23);
  for (double lambda : {0.0, 0.3, 0.8, 1.5, -0.4}) {
    auto p = random_diff_params(2, 1, lambda, rng);
    auto wv = p.w_v.mutable_values();
    std::fill(wv.begin(), wv.end(), 0.0);
    wv[0] = 1.0;  // V[:, 0] = X[:, 0]
    oracle::Mat x = oracle::random_mat(5, 2, rng);
    for (auto& row : x) row[0] = 1.0;
    const auto out = diff_attn(oracle::from_mat(x), p);
    for (std::size_t r = 0; r < 5; ++r) CHECK(std::abs(out.at(r * 2) - (1.0 - lambda)) < 1e-12);
  }
}

TEST_CASE("attention ops pass finite-difference checks") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    auto v = oracle::random_tensor({4, 3}, rng, true);
    auto a = oracle::random_tensor({2, 3}, rng, true);
    auto batched = oracle::random_tensor({2, 4, 3}, rng, true);
    const auto w = oracle::random_tensor({4, 3}, rng);
    const auto wd = oracle::random_tensor({3, 4}, rng);
    auto p = random_diff_params(4, 2, 0.8, rng, true);
    auto x = oracle::random_tensor({3, 4}, rng, true);
    worst = std::max(worst, oracle::gradient_relative_error(
                                [&] { return sum(mul(self_attn(v), w)); }, {v}));
    worst = std::max(worst, oracle::gradient_relative_error(
                                [&] { return sum(mul(self_attn(batched), self_attn(batched))); },
                                {batched}));
    worst = std::max(worst, oracle::gradient_relative_error(
                                [&] { return sum(mul(cross_attn(a, v), cross_attn(a, v))); },
                                {a, v}));
    worst = std::max(worst, oracle::gradient_relative_error(
                                [&] { return sum(mul(diff_attn(x, p), wd)); },
                                {x, p.w_q, p.w_k, p.w_v, p.lambda}));
  }
  INFO("worst relative error " << worst);
  CHECK(worst < 1e-4);
}
