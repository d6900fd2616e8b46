#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "test_helpers.hpp"
#include "zvp/objective.hpp"
#include "zvp/trainer.hpp"

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

// Group sampled from `actor`, with rewards chosen by verifying against a
// fixed answer so both reward signs occur.
RolloutGroup sampled_group(const PolicyParams& actor, int g, int max_len, Rng& rng) {
  RolloutGroup group;
  group.prompt.tokens = {1, 2};
  group.prompt.prompt_id = 7;
  for (int i = 0; i < g; ++i) {
    Response r = sample_response(actor, group.prompt, max_len, 1.0, 1.0, rng);
    group.rewards.push_back(i % 2 == 0 ? kRewardCorrect : kRewardIncorrect);
    group.responses.push_back(std::move(r));
  }
  return group;
}

}  // namespace

TEST_CASE("importance ratio basics", "[objective]") {
  CHECK(importance_ratio(-1.5, -1.5) == 1.0);
  CHECK(importance_ratio(-1.0 + std::log(2.0), -1.0) == Catch::Approx(2.0).margin(1e-12));
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    CHECK(importance_ratio(rng.uniform(-10, 0), rng.uniform(-10, 0)) > 0.0);
  }
}

TEST_CASE("clipped term arithmetic at the published clip range", "[objective]") {
  const ClipConfig clip;  // (0.20, 0.28)
  CHECK(clipped_term(1.5, 1.0, clip) == Catch::Approx(1.28).margin(1e-15));
  CHECK(clipped_term(0.5, -1.0, clip) == Catch::Approx(-0.8).margin(1e-15));
  CHECK(clipped_term(0.5, 0.0, clip) == 0.0);
  CHECK(clipped_term(97.0, 0.0, clip) == 0.0);
  // Interior ratios are untouched.
  CHECK(clipped_term(1.1, 2.0, clip) == Catch::Approx(2.2).margin(1e-15));
}

TEST_CASE("clip config is validated", "[objective]") {
  CHECK_THROWS_AS((ClipConfig{0.0, 0.28}.validate()), ConfigError);
  CHECK_THROWS_AS((ClipConfig{0.3, 0.2}.validate()), ConfigError);
  CHECK_THROWS_AS((ClipConfig{0.2, 1.0}.validate()), ConfigError);
  CHECK_NOTHROW((ClipConfig{0.2, 0.28}.validate()));
}

TEST_CASE("all-zero advantages give zero objective and zero gradient", "[objective]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 3);
  Rng rng(11);
  std::vector<RolloutGroup> groups{sampled_group(params, 4, 5, rng)};
  std::vector<AdvantageTensor> advs(1);
  advs[0].origin = AdvantageOrigin::grpo;
  for (const Response& r : groups[0].responses) {
    advs[0].values.emplace_back(r.tokens.size(), 0.0);
  }
  const auto out = batch_objective(groups, advs, params, {});
  CHECK(out.objective == 0.0);
  for (double g : out.gradient) CHECK(g == 0.0);
}

TEST_CASE("at ratio one the objective is the advantage-weighted mean", "[objective]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 5);
  Rng rng(13);
  std::vector<RolloutGroup> groups{sampled_group(params, 4, 5, rng)};
  std::vector<AdvantageTensor> advs{grpo_advantage(groups[0])};

  const auto out = batch_objective(groups, advs, params, {});
  double expected = 0.0;
  std::size_t tokens = 0;
  for (const Response& r : groups[0].responses) tokens += r.tokens.size();
  for (std::size_t i = 0; i < groups[0].size(); ++i) {
    for (double a : advs[0].values[i]) expected += a / static_cast<double>(tokens);
  }
  CHECK(out.objective == Catch::Approx(expected).margin(1e-12));

  // Gradient equals the weighted sum of log-prob gradients with w_t = A_t/N.
  GradientAccumulator accum(d);
  for (std::size_t i = 0; i < groups[0].size(); ++i) {
    std::vector<double> w(advs[0].values[i]);
    for (double& x : w) x /= static_cast<double>(tokens);
    accum.accumulate(params, groups[0].prompt, groups[0].responses[i].tokens, w);
  }
  const auto direct = accum.gradient();
  REQUIRE(direct.size() == out.gradient.size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(out.gradient[i] == Catch::Approx(direct[i]).margin(1e-12));
  }
}

TEST_CASE("clipped branch contributes value but zero gradient", "[objective]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 7);
  Rng rng(17);

  RolloutGroup group;
  group.prompt.tokens = {0, 1};
  for (int i = 0; i < 2; ++i) {
    Response r = sample_response(params, group.prompt, 1, 1.0, 1.0, rng);
    group.responses.push_back(std::move(r));
  }
  group.rewards = {kRewardCorrect, kRewardIncorrect};

  // Shift the recorded old log-probs so the ratios sit beyond the clip range
  // on the clipped side for both advantage signs.
  AdvantageTensor adv;
  adv.values = {{1.0}, {-1.0}};
  group.responses[0].logprobs_old[0] -= std::log(1.5);  // r = 1.5, A > 0
  group.responses[1].logprobs_old[0] += std::log(2.0);  // r = 0.5, A < 0

  std::vector<RolloutGroup> groups{group};
  std::vector<AdvantageTensor> advs{adv};
  const auto out = batch_objective(groups, advs, params, {});
  CHECK(out.objective == Catch::Approx((1.28 - 0.8) / 2.0).margin(1e-12));
  for (double g : out.gradient) CHECK(g == 0.0);
}

TEST_CASE("directional derivative at ratio one carries the advantage sign", "[objective]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 9);
  Rng rng(19);
  for (double a : {2.5, 0.7, -0.7, -2.5}) {
    RolloutGroup group;
    group.prompt.tokens = {3};
    Response r = sample_response(params, group.prompt, 1, 1.0, 1.0, rng);
    group.responses.push_back(r);
    group.responses.push_back(r);
    group.rewards = {kRewardCorrect, kRewardIncorrect};

    AdvantageTensor adv;
    adv.values = {{a}, {0.0}};
    std::vector<RolloutGroup> groups{group};
    std::vector<AdvantageTensor> advs{adv};
    const auto out = batch_objective(groups, advs, params, {});

    GradientAccumulator accum(d);
    const std::vector<double> w{1.0};
    accum.accumulate(params, group.prompt, group.responses[0].tokens, w);
    double dot = 0.0;
    for (std::size_t i = 0; i < out.gradient.size(); ++i) {
      dot += out.gradient[i] * accum.gradient()[i];
    }
    if (a > 0) CHECK(dot > 0.0);
    else CHECK(dot < 0.0);
  }
}

TEST_CASE("token_level and response_mean agree on equal-length batches", "[objective]") {
  const PolicyDims d = small_dims();
  const auto actor = PolicyParams::random_init(d, 23);
  const auto current = PolicyParams::random_init(d, 24);
  Rng rng(29);

  std::vector<RolloutGroup> groups;
  std::vector<AdvantageTensor> advs;
  for (int g = 0; g < 2; ++g) {
    RolloutGroup group;
    group.prompt.tokens = {static_cast<TokenId>(g), 2};
    for (int i = 0; i < 2; ++i) {
      // Fixed-length responses: never let eos terminate early.
      Response r;
      for (int t = 0; t < 3; ++t) {
        r.tokens.push_back(static_cast<TokenId>(rng.uniform_int(0, d.vocab_size - 3)));
      }
      r.logprobs_old = response_logprobs(actor, group.prompt, r.tokens);
      r.entropies = response_entropies(actor, group.prompt, r.tokens);
      group.responses.push_back(std::move(r));
    }
    group.rewards = {kRewardCorrect, kRewardIncorrect};
    advs.push_back(grpo_advantage(group));
    groups.push_back(std::move(group));
  }

  ObjectiveSettings token_level;
  ObjectiveSettings response_mean;
  response_mean.aggregation = Aggregation::response_mean;
  const auto a = batch_objective(groups, advs, current, token_level);
  const auto b = batch_objective(groups, advs, current, response_mean);
  CHECK(std::abs(a.objective - b.objective) <= 1e-12);
}

TEST_CASE("objective gradient matches central differences", "[objective]") {
  const PolicyDims d = small_dims();
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const auto actor = PolicyParams::random_init(d, static_cast<std::uint64_t>(100 + trial));
    const auto current = PolicyParams::random_init(d, static_cast<std::uint64_t>(200 + trial));

    std::vector<RolloutGroup> groups;
    std::vector<AdvantageTensor> advs;
    for (int g = 0; g < 2; ++g) {
      RolloutGroup group;
      group.prompt.tokens = {static_cast<TokenId>(rng.uniform_int(0, 5))};
      const bool zv = g == 0;
      for (int i = 0; i < 3; ++i) {
        Response r = sample_response(actor, group.prompt, 4, 1.0, 1.0, rng);
        group.responses.push_back(std::move(r));
      }
      if (zv) {
        group.rewards = {kRewardIncorrect, kRewardIncorrect, kRewardIncorrect};
        advs.push_back(zvp_advantage(group, 0.1));
      } else {
        group.rewards = {kRewardCorrect, kRewardIncorrect, kRewardIncorrect};
        advs.push_back(grpo_advantage(group));
      }
      groups.push_back(std::move(group));
    }

    const auto out = batch_objective(groups, advs, current, {});
    auto f = [&](std::span<const double> x) {
      const PolicyParams probe(d, std::vector<double>(x.begin(), x.end()));
      return batch_objective(groups, advs, probe, {}).objective;
    };
    const auto numeric = zvp::testing::central_diff_gradient(
        f, std::vector<double>(current.values().begin(), current.values().end()));
    CHECK(zvp::testing::max_rel_error(out.gradient, numeric) <= 1e-4);
  }
}

TEST_CASE("objective validates shapes", "[objective]") {
  const PolicyDims d = small_dims();
  const auto params = PolicyParams::random_init(d, 41);
  Rng rng(43);
  std::vector<RolloutGroup> groups{sampled_group(params, 2, 3, rng)};
  std::vector<AdvantageTensor> advs{grpo_advantage(groups[0])};
  advs[0].values[0].push_back(0.0);
  CHECK_THROWS_AS(batch_objective(groups, advs, params, {}), ContractViolation);
}

// --------------------------- optimizer ---------------------------

TEST_CASE("zero gradient with zero weight decay leaves parameters unchanged", "[objective]") {
  const PolicyDims d = small_dims();
  auto params = PolicyParams::random_init(d, 51);
  const std::vector<double> before(params.values().begin(), params.values().end());

  OptimizerConfig cfg;
  cfg.weight_decay = 0.0;
  auto state = OptimizerState::init(cfg, params.values().size());
  const std::vector<double> zero(params.values().size(), 0.0);
  optimizer_step(params, zero, state);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(params.values()[i] == before[i]);
}

TEST_CASE("warmup learning rate is linear", "[objective]") {
  OptimizerConfig cfg;
  cfg.lr_max = 3e-3;
  cfg.warmup_steps = 10;
  for (int s = 0; s < 10; ++s) {
    CHECK(scheduled_lr(cfg, s) == Catch::Approx(3e-3 * (s + 1) / 10.0).margin(1e-18));
  }
  CHECK(scheduled_lr(cfg, 10) == 3e-3);
  CHECK(scheduled_lr(cfg, 500) == 3e-3);
}

TEST_CASE("cosine schedule decays to zero at the horizon", "[objective]") {
  OptimizerConfig cfg;
  cfg.schedule = LrSchedule::cosine;
  cfg.warmup_steps = 4;
  cfg.total_steps = 100;
  CHECK(scheduled_lr(cfg, 4) == cfg.lr_max);
  CHECK(scheduled_lr(cfg, 100) == Catch::Approx(0.0).margin(1e-18));
  CHECK(scheduled_lr(cfg, 52) == Catch::Approx(cfg.lr_max * 0.5).margin(1e-12));
  CHECK_THROWS_AS(([&] {
                    OptimizerConfig bad = cfg;
                    bad.total_steps = 3;
                    bad.validate();
                  }()),
                  ConfigError);
}

TEST_CASE("optimizer trajectories are deterministic", "[objective]") {
  const PolicyDims d = small_dims();
  auto a = PolicyParams::random_init(d, 61);
  auto b = PolicyParams::random_init(d, 61);
  auto sa = OptimizerState::init({}, a.values().size());
  auto sb = OptimizerState::init({}, b.values().size());
  Rng rng(67);
  for (int step = 0; step < 25; ++step) {
    std::vector<double> grad(a.values().size());
    for (double& g : grad) g = rng.uniform(-1.0, 1.0);
    optimizer_step(a, grad, sa);
    optimizer_step(b, grad, sb);
  }
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    CHECK(a.values()[i] == b.values()[i]);
  }
}

TEST_CASE("non-finite gradients abort the run with a diagnostic", "[objective]") {
  const PolicyDims d = small_dims();
  auto params = PolicyParams::random_init(d, 71);
  auto state = OptimizerState::init({}, params.values().size());
  std::vector<double> grad(params.values().size(), 0.0);
  grad[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(optimizer_step(params, grad, state), RunAbort);
  grad[5] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(optimizer_step(params, grad, state), RunAbort);
}
