#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "zvp/policy.hpp"

using namespace zvp;

namespace {

PolicyDims small_dims() {
  PolicyDims d;
  d.vocab_size = 8;
  d.embed_dim = 4;
  d.hidden_dim = 8;
  d.window = 4;
  return d;
}

Prompt make_prompt(std::vector<TokenId> tokens, std::int64_t id = 0) {
  Prompt p;
  p.tokens = std::move(tokens);
  p.prompt_id = id;
  return p;
}

}  // namespace

TEST_CASE("parameter layout matches the declared count", "[policy]") {
  const PolicyDims d = small_dims();
  // V*d + (w*d)*h + h + h*V + V
  const std::size_t expected = 8 * 4 + (4 * 4) * 8 + 8 + 8 * 8 + 8;
  CHECK(d.param_count() == expected);
  CHECK(PolicyParams::zero_init(d).values().size() == expected);
}

TEST_CASE("zero parameters give zero logits; forward is deterministic", "[policy]") {
  const PolicyDims d = small_dims();
  const auto zero = PolicyParams::zero_init(d);
  const std::vector<TokenId> ctx(4, static_cast<TokenId>(d.pad_id()));
  for (double z : logits(zero, ctx)) CHECK(z == 0.0);

  const auto params = PolicyParams::random_init(d, 7);
  const std::vector<TokenId> ctx2{1, 2, 3, 4};
  CHECK(logits(params, ctx2) == logits(params, ctx2));

  const std::vector<TokenId> bad{1, 2, 3};
  CHECK_THROWS_AS(logits(params, bad), ConfigError);
}

TEST_CASE("logit perturbation matches the analytic direction", "[policy]") {
  const PolicyDims d = small_dims();
  auto params = PolicyParams::random_init(d, 3);
  const std::vector<TokenId> ctx{0, 1, 2, 3};
  const std::size_t pick = d.b2_offset() + 2;  // output bias feeds one logit linearly

  const std::vector<double> base = logits(params, ctx);
  const double delta = 1e-6;
  params.values()[pick] += delta;
  const std::vector<double> bumped = logits(params, ctx);
  CHECK(bumped[2] - base[2] == Catch::Approx(delta).epsilon(1e-9));
  for (std::size_t v = 0; v < base.size(); ++v) {
    if (v != 2) CHECK(bumped[v] == base[v]);
  }
}

TEST_CASE("token distribution: uniform, frozen softmax, errors", "[policy]") {
  const PolicyDims d = small_dims();
  const auto zero = PolicyParams::zero_init(d);
  const std::vector<TokenId> ctx{0, 1, 2, 3};

  const auto uniform = token_distribution(zero, ctx, 1.0, 1.0);
  for (double p : uniform) CHECK(p == Catch::Approx(1.0 / 8).margin(1e-15));

  // softmax([2,1,0,0]) evaluated independently.
  const std::vector<double> z{2.0, 1.0, 0.0, 0.0};
  const auto p = softmax(z);
  CHECK(p[0] == Catch::Approx(0.61029568541362322).margin(1e-15));
  CHECK(p[1] == Catch::Approx(0.22451523569930606).margin(1e-15));
  CHECK(p[2] == Catch::Approx(0.08259453944353537).margin(1e-15));
  CHECK(p[3] == Catch::Approx(0.08259453944353537).margin(1e-15));

  CHECK_THROWS_AS(token_distribution(zero, ctx, 0.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(token_distribution(zero, ctx, -1.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(token_distribution(zero, ctx, 1.0, 0.0), ContractViolation);
  CHECK_THROWS_AS(token_distribution(zero, ctx, 1.0, 1.5), ContractViolation);
}

TEST_CASE("nucleus truncation keeps a strict subset when mass concentrates", "[policy]") {
  const PolicyDims d = small_dims();
  auto params = PolicyParams::zero_init(d);
  // Concentrate mass on two tokens via output biases.
  params.values()[d.b2_offset() + 1] = 3.0;
  params.values()[d.b2_offset() + 4] = 2.0;
  const std::vector<TokenId> ctx{0, 0, 0, 0};

  const auto dist = token_distribution(params, ctx, 1.0, 0.7);
  int kept = 0;
  double sum = 0.0;
  for (double p : dist) {
    if (p > 0.0) kept += 1;
    sum += p;
  }
  CHECK(kept < d.vocab_size);
  CHECK(kept >= 1);
  CHECK(dist[1] > 0.0);  // the top token is always kept
  CHECK(sum == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("nucleus ties break by ascending token id", "[policy]") {
  // Four equal probabilities at 0.25: top_p = 0.5 keeps exactly ids 0 and 1.
  const std::vector<double> probs{0.25, 0.25, 0.25, 0.25};
  const auto kept = nucleus_set(probs, 0.5);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0] == 0);
  CHECK(kept[1] == 1);
}

TEST_CASE("entropy identities", "[policy]") {
  const std::vector<double> uniform4(4, 0.25);
  CHECK(entropy_of(uniform4) == Catch::Approx(1.3862943611198906).margin(1e-12));

  const std::vector<double> onehot{1.0, 0.0, 0.0};
  CHECK(entropy_of(onehot) == 0.0);

  const std::vector<double> mixed{0.5, 0.25, 0.25};
  CHECK(entropy_of(mixed) == Catch::Approx(1.0397207708399179).margin(1e-9));

  // entropy_at over a 3-token vocabulary realizing [0.5, 0.25, 0.25].
  PolicyDims d3;
  d3.vocab_size = 3;
  d3.embed_dim = 2;
  d3.hidden_dim = 2;
  d3.window = 2;
  auto params = PolicyParams::zero_init(d3);
  params.values()[d3.b2_offset() + 0] = std::log(2.0);
  const std::vector<TokenId> ctx{static_cast<TokenId>(d3.pad_id()),
                                 static_cast<TokenId>(d3.pad_id())};
  CHECK(entropy_at(params, ctx) == Catch::Approx(1.0397207708399179).margin(1e-9));
}

TEST_CASE("entropy stays within [0, log V] for random policies", "[policy]") {
  const PolicyDims d = small_dims();
  const double hmax = std::log(8.0);
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    auto params = PolicyParams::random_init(d, static_cast<std::uint64_t>(trial));
    for (double& v : params.values()) v *= rng.uniform(0.0, 40.0);
    std::vector<TokenId> ctx(4);
    for (auto& t : ctx) t = static_cast<TokenId>(rng.uniform_int(0, 7));
    const double h = entropy_at(params, ctx);
    CHECK(h >= 0.0);
    CHECK(h <= hmax);
  }
}

TEST_CASE("point-mass policy emits eos with zero entropy", "[policy]") {
  const PolicyDims d = small_dims();
  auto params = PolicyParams::zero_init(d);
  params.values()[d.b2_offset() + static_cast<std::size_t>(d.eos_id())] = 1000.0;

  Rng rng(5);
  const Response resp = sample_response(params, make_prompt({0, 1}), 6, 1.0, 1.0, rng);
  REQUIRE(resp.tokens.size() == 1);
  CHECK(resp.tokens[0] == d.eos_id());
  CHECK(resp.terminated);
  CHECK(resp.entropies[0] == 0.0);
  CHECK(resp.logprobs_old[0] == 0.0);
}

TEST_CASE("sampling is reproducible given the seed", "[policy]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 11);
  const Prompt prompt = make_prompt({1, 2, 3});
  Rng a(77), b(77);
  const Response ra = sample_response(params, prompt, 12, 1.0, 1.0, a);
  const Response rb = sample_response(params, prompt, 12, 1.0, 1.0, b);
  CHECK(ra.tokens == rb.tokens);
  CHECK(ra.logprobs_old == rb.logprobs_old);
  CHECK(ra.entropies == rb.entropies);
  CHECK(ra.terminated == rb.terminated);
}

TEST_CASE("response invariants: lengths match, logprobs <= 0, entropies bounded", "[policy]") {
  const PolicyDims d = small_dims();
  const double hmax = std::log(8.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto params = PolicyParams::random_init(d, seed);
    Rng rng(seed + 1);
    const Response r = sample_response(params, make_prompt({2, 5}), 10, 1.0, 0.9, rng);
    REQUIRE(r.tokens.size() >= 1);
    CHECK(r.logprobs_old.size() == r.tokens.size());
    CHECK(r.entropies.size() == r.tokens.size());
    for (double lp : r.logprobs_old) CHECK(lp <= 0.0);
    for (double h : r.entropies) {
      CHECK(h >= 0.0);
      CHECK(h <= hmax);
    }
  }
}

TEST_CASE("empirical first-token frequencies match the distribution", "[policy]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 21);
  const Prompt prompt = make_prompt({3, 1});
  const std::vector<TokenId> ctx = context_window(d, prompt.tokens);
  const auto expected = token_distribution(params, ctx, 1.0, 1.0);

  constexpr std::int64_t kDraws = 100000;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(d.vocab_size), 0);
  Rng rng(123456);
  for (std::int64_t i = 0; i < kDraws; ++i) {
    Response r = sample_response(params, prompt, 1, 1.0, 1.0, rng);
    counts[static_cast<std::size_t>(r.tokens[0])] += 1;
  }

  // 3-sigma binomial bounds per token.
  for (std::size_t v = 0; v < counts.size(); ++v) {
    const double mean = expected[v] * kDraws;
    const double sigma = std::sqrt(expected[v] * (1.0 - expected[v]) * kDraws);
    CHECK(std::abs(counts[v] - mean) <= 3.0 * sigma + 1.0);
  }

  // Chi-square goodness of fit at alpha = 0.01.
  const double stat = zvp::testing::chi_square_statistic(counts, expected, kDraws);
  CHECK(stat < zvp::testing::chi_square_critical_99(d.vocab_size - 1));
}

TEST_CASE("nucleus sampling never emits excluded tokens", "[policy]") {
  const PolicyDims d = small_dims();
  auto params = PolicyParams::zero_init(d);
  params.values()[d.b2_offset() + 2] = 2.5;
  params.values()[d.b2_offset() + 6] = 2.0;
  const Prompt prompt = make_prompt({0});
  const std::vector<TokenId> ctx = context_window(d, prompt.tokens);
  const auto dist = token_distribution(params, ctx, 1.0, 0.7);

  Rng rng(31337);
  for (int i = 0; i < 5000; ++i) {
    Response r = sample_response(params, prompt, 1, 1.0, 0.7, rng);
    CHECK(dist[static_cast<std::size_t>(r.tokens[0])] > 0.0);
  }
}

TEST_CASE("zero weights give an exactly zero gradient", "[policy]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 9);
  GradientAccumulator accum(d);
  const std::vector<TokenId> tokens{1, 4, 7};
  const std::vector<double> weights(3, 0.0);
  accum.accumulate(params, make_prompt({0, 2}), tokens, weights);
  for (double g : accum.gradient()) CHECK(g == 0.0);
}

TEST_CASE("log-prob gradient at the output bias is e_k - p", "[policy]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 13);
  const Prompt prompt = make_prompt({1, 2});
  const std::vector<TokenId> tokens{5};
  const std::vector<TokenId> ctx = context_window(d, prompt.tokens);
  const auto probs = token_distribution(params, ctx, 1.0, 1.0);

  GradientAccumulator accum(d);
  const std::vector<double> weights{1.0};
  accum.accumulate(params, prompt, tokens, weights);
  const auto grad = accum.gradient();
  for (int v = 0; v < d.vocab_size; ++v) {
    const double expected = (v == 5 ? 1.0 : 0.0) - probs[static_cast<std::size_t>(v)];
    CHECK(grad[d.b2_offset() + static_cast<std::size_t>(v)] ==
          Catch::Approx(expected).margin(1e-15));
  }
}

TEST_CASE("analytic gradient matches central differences", "[policy]") {
  const PolicyDims d = small_dims();
  REQUIRE(d.param_count() <= 2000);
  Rng rng(2718);
  for (int trial = 0; trial < 20; ++trial) {
    const auto params = PolicyParams::random_init(d, static_cast<std::uint64_t>(trial + 40));
    Prompt prompt = make_prompt({static_cast<TokenId>(rng.uniform_int(0, 5)),
                                 static_cast<TokenId>(rng.uniform_int(0, 5))});
    const std::size_t len = static_cast<std::size_t>(rng.uniform_int(1, 4));
    std::vector<TokenId> tokens(len);
    for (auto& t : tokens) t = static_cast<TokenId>(rng.uniform_int(0, d.vocab_size - 1));
    std::vector<double> weights(len);
    for (auto& w : weights) w = rng.uniform(-1.0, 1.0);

    GradientAccumulator accum(d);
    accum.accumulate(params, prompt, tokens, weights);
    const std::vector<double> analytic(accum.gradient().begin(), accum.gradient().end());

    auto f = [&](std::span<const double> x) {
      const PolicyParams probe(d, std::vector<double>(x.begin(), x.end()));
      const auto logps = response_logprobs(probe, prompt, tokens);
      double total = 0.0;
      for (std::size_t t = 0; t < logps.size(); ++t) total += weights[t] * logps[t];
      return total;
    };
    const auto numeric = zvp::testing::central_diff_gradient(
        f, std::vector<double>(params.values().begin(), params.values().end()));
    CHECK(zvp::testing::max_rel_error(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("snapshots are immutable and idempotent", "[policy]") {
  const PolicyDims d = small_dims();
  auto params = PolicyParams::random_init(d, 17);
  const PolicySnapshot snap = snapshot(params);
  const std::vector<TokenId> ctx{1, 2, 3, 4};
  const auto before = logits(snap.params(), ctx);

  for (double& v : params.values()) v += 0.25;
  CHECK(logits(snap.params(), ctx) == before);

  const PolicySnapshot snap2 = snapshot(snap);
  CHECK(snap2.params().values().size() == snap.params().values().size());
  for (std::size_t i = 0; i < snap.params().values().size(); ++i) {
    CHECK(snap2.params().values()[i] == snap.params().values()[i]);
  }
}

TEST_CASE("importance ratio is exactly one immediately after a snapshot", "[policy]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 19);
  const PolicySnapshot snap = snapshot(params);
  const Prompt prompt = make_prompt({0, 3});
  Rng rng(4242);
  const Response resp = sample_response(snap.params(), prompt, 8, 1.0, 1.0, rng);

  const auto logp_now = response_logprobs(params, prompt, resp.tokens, 1.0, 1.0);
  REQUIRE(logp_now.size() == resp.logprobs_old.size());
  for (std::size_t t = 0; t < logp_now.size(); ++t) {
    CHECK(logp_now[t] == resp.logprobs_old[t]);
    CHECK(std::exp(logp_now[t] - resp.logprobs_old[t]) == 1.0);
  }
}

TEST_CASE("checkpoint round-trips bit-exactly and validates headers", "[policy]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 23);
  const std::string bytes = serialize_checkpoint(params);
  const auto restored = deserialize_checkpoint(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
  CHECK(restored.dims() == d);
  for (std::size_t i = 0; i < params.values().size(); ++i) {
    CHECK(restored.values()[i] == params.values()[i]);
  }

  std::string bad_version = bytes;
  bad_version[0] = 99;
  CHECK_THROWS_AS(deserialize_checkpoint(std::span<const unsigned char>(
                      reinterpret_cast<const unsigned char*>(bad_version.data()),
                      bad_version.size())),
                  ConfigError);

  CHECK_THROWS_AS(deserialize_checkpoint(std::span<const unsigned char>(
                      reinterpret_cast<const unsigned char*>(bytes.data()), 10)),
                  ConfigError);
  CHECK_THROWS_AS(deserialize_checkpoint(std::span<const unsigned char>(
                      reinterpret_cast<const unsigned char*>(bytes.data()),
                      bytes.size() - 8)),
                  ConfigError);
}
