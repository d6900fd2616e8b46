#pragma once

// Windowed-context MLP policy over a fixed vocabulary: the last `window`
// token embeddings are concatenated, passed through one tanh hidden layer
// and projected to logits. Small enough that all gradients are hand-derived
// and exact, which keeps finite-difference checks tight.
//
// Layout of the flat parameter vector:
//   [ embedding V*d | W1 (h x w*d, row-major) | b1 (h) | W2 (V x h, row-major) | b2 (V) ]
//
// Token ids: 0 .. V-3 are payload symbols, V-2 is the reserved left-padding
// id, V-1 is the end-of-answer id.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "zvp/core.hpp"
#include "zvp/rng.hpp"

namespace zvp {

struct PolicyDims {
  int vocab_size = 18;  // includes pad and eos
  int embed_dim = 16;
  int hidden_dim = 32;
  int window = 8;

  int pad_id() const { return vocab_size - 2; }
  int eos_id() const { return vocab_size - 1; }
  int payload_size() const { return vocab_size - 2; }
  int input_dim() const { return window * embed_dim; }

  std::size_t embed_offset() const { return 0; }
  std::size_t embed_count() const {
    return static_cast<std::size_t>(vocab_size) * embed_dim;
  }
  std::size_t w1_offset() const { return embed_count(); }
  std::size_t w1_count() const {
    return static_cast<std::size_t>(hidden_dim) * input_dim();
  }
  std::size_t b1_offset() const { return w1_offset() + w1_count(); }
  std::size_t b1_count() const { return static_cast<std::size_t>(hidden_dim); }
  std::size_t w2_offset() const { return b1_offset() + b1_count(); }
  std::size_t w2_count() const {
    return static_cast<std::size_t>(vocab_size) * hidden_dim;
  }
  std::size_t b2_offset() const { return w2_offset() + w2_count(); }
  std::size_t b2_count() const { return static_cast<std::size_t>(vocab_size); }
  std::size_t param_count() const { return b2_offset() + b2_count(); }

  void validate() const {
    if (vocab_size < 3) throw ConfigError("vocab_size must be >= 3 (payload + pad + eos)");
    if (embed_dim < 1 || hidden_dim < 1 || window < 1) {
      throw ConfigError("embed_dim, hidden_dim and window must be >= 1");
    }
  }

  bool operator==(const PolicyDims&) const = default;
};

class PolicyParams {
 public:
  PolicyParams(PolicyDims dims, std::vector<double> values)
      : dims_(dims), theta_(std::move(values)) {
    dims_.validate();
    if (theta_.size() != dims_.param_count()) {
      throw ConfigError("parameter vector size " + std::to_string(theta_.size()) +
                        " does not match dims (" +
                        std::to_string(dims_.param_count()) + ")");
    }
  }

  static PolicyParams zero_init(const PolicyDims& dims) {
    dims.validate();
    return PolicyParams(dims, std::vector<double>(dims.param_count(), 0.0));
  }

  // Small uniform weights, zero biases: keeps initial entropy near log|V|.
  static PolicyParams random_init(const PolicyDims& dims, std::uint64_t seed,
                                  double scale = 0.05) {
    dims.validate();
    std::vector<double> theta(dims.param_count(), 0.0);
    Rng rng(derive_seed(seed, {seed_stream::policy_init}));
    for (std::size_t i = 0; i < dims.embed_count(); ++i) {
      theta[dims.embed_offset() + i] = rng.uniform(-scale, scale);
    }
    for (std::size_t i = 0; i < dims.w1_count(); ++i) {
      theta[dims.w1_offset() + i] = rng.uniform(-scale, scale);
    }
    for (std::size_t i = 0; i < dims.w2_count(); ++i) {
      theta[dims.w2_offset() + i] = rng.uniform(-scale, scale);
    }
    return PolicyParams(dims, std::move(theta));
  }

  const PolicyDims& dims() const { return dims_; }
  std::span<const double> values() const { return theta_; }
  std::span<double> values() { return theta_; }

  bool all_finite() const {
    for (double v : theta_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  PolicyDims dims_;
  std::vector<double> theta_;
};

// Frozen deep copy of the policy at snapshot time; provides read access only.
class PolicySnapshot {
 public:
  explicit PolicySnapshot(const PolicyParams& source) : params_(source) {}
  const PolicyParams& params() const { return params_; }
  const PolicyDims& dims() const { return params_.dims(); }

 private:
  PolicyParams params_;
};

inline PolicySnapshot snapshot(const PolicyParams& params) {
  return PolicySnapshot(params);
}
inline PolicySnapshot snapshot(const PolicySnapshot& snap) { return snap; }

// ---------------------------------------------------------------------------
// Forward evaluation
// ---------------------------------------------------------------------------

struct ForwardTrace {
  std::vector<double> input;   // concatenated context embeddings, w*d
  std::vector<double> hidden;  // tanh activations, h
  std::vector<double> logits;  // V
};

namespace detail {

inline void check_context(const PolicyDims& dims, std::span<const TokenId> context) {
  if (static_cast<int>(context.size()) != dims.window) {
    throw ConfigError("context length " + std::to_string(context.size()) +
                      " does not match window " + std::to_string(dims.window));
  }
  for (TokenId t : context) {
    if (t < 0 || t >= dims.vocab_size) {
      throw ConfigError("token id " + std::to_string(t) + " outside vocabulary");
    }
  }
}

}  // namespace detail

inline void forward(const PolicyParams& params, std::span<const TokenId> context,
                    ForwardTrace& trace) {
  const PolicyDims& d = params.dims();
  detail::check_context(d, context);
  const std::span<const double> theta = params.values();

  trace.input.resize(static_cast<std::size_t>(d.input_dim()));
  trace.hidden.resize(static_cast<std::size_t>(d.hidden_dim));
  trace.logits.resize(static_cast<std::size_t>(d.vocab_size));

  for (int s = 0; s < d.window; ++s) {
    const double* row = theta.data() + d.embed_offset() +
                        static_cast<std::size_t>(context[static_cast<std::size_t>(s)]) * d.embed_dim;
    std::copy(row, row + d.embed_dim, trace.input.data() + static_cast<std::size_t>(s) * d.embed_dim);
  }

  const double* w1 = theta.data() + d.w1_offset();
  const double* b1 = theta.data() + d.b1_offset();
  for (int j = 0; j < d.hidden_dim; ++j) {
    double acc = b1[j];
    const double* row = w1 + static_cast<std::size_t>(j) * d.input_dim();
    for (int i = 0; i < d.input_dim(); ++i) acc += row[i] * trace.input[static_cast<std::size_t>(i)];
    trace.hidden[static_cast<std::size_t>(j)] = std::tanh(acc);
  }

  const double* w2 = theta.data() + d.w2_offset();
  const double* b2 = theta.data() + d.b2_offset();
  for (int v = 0; v < d.vocab_size; ++v) {
    double acc = b2[v];
    const double* row = w2 + static_cast<std::size_t>(v) * d.hidden_dim;
    for (int j = 0; j < d.hidden_dim; ++j) acc += row[j] * trace.hidden[static_cast<std::size_t>(j)];
    trace.logits[static_cast<std::size_t>(v)] = acc;
  }
}

inline std::vector<double> logits(const PolicyParams& params,
                                  std::span<const TokenId> context) {
  ForwardTrace trace;
  forward(params, context, trace);
  return trace.logits;
}

// Builds the length-w context ending at `sequence`'s tail, left-padded with
// the reserved pad id.
inline std::vector<TokenId> context_window(const PolicyDims& dims,
                                           std::span<const TokenId> sequence) {
  std::vector<TokenId> ctx(static_cast<std::size_t>(dims.window),
                           static_cast<TokenId>(dims.pad_id()));
  const std::size_t take = std::min<std::size_t>(sequence.size(),
                                                 static_cast<std::size_t>(dims.window));
  std::copy(sequence.end() - static_cast<std::ptrdiff_t>(take), sequence.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(take));
  return ctx;
}

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

inline void softmax_inplace(std::span<double> z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  softmax_inplace(p);
  return p;
}

// -sum p log p in nats, with 0 log 0 := 0. Clamped into [0, log n] so the
// analytic bound survives rounding at the exact-uniform corner.
inline double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  const double hmax = std::log(static_cast<double>(probs.size()));
  return std::clamp(h, 0.0, hmax);
}

// Indices kept by nucleus truncation, in descending-probability order with
// probability ties broken by ascending token id: the smallest such prefix
// whose mass reaches top_p.
inline std::vector<int> nucleus_set(std::span<const double> probs, double top_p) {
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (probs[static_cast<std::size_t>(a)] != probs[static_cast<std::size_t>(b)])
      return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
    return a < b;
  });
  std::vector<int> kept;
  double cum = 0.0;
  for (int idx : order) {
    kept.push_back(idx);
    cum += probs[static_cast<std::size_t>(idx)];
    if (cum >= top_p) break;
  }
  return kept;
}

namespace detail {

inline void check_sampling_params(double temperature, double top_p) {
  if (!(temperature > 0.0)) {
    throw ContractViolation("temperature must be > 0, got " + std::to_string(temperature));
  }
  if (!(top_p > 0.0) || top_p > 1.0) {
    throw ContractViolation("top_p must lie in (0, 1], got " + std::to_string(top_p));
  }
}

// Full-length sampling distribution from raw logits: softmax at the given
// temperature, then nucleus truncation and renormalization. Entries outside
// the nucleus are exactly zero.
inline std::vector<double> sampling_distribution(std::span<const double> raw_logits,
                                                 double temperature, double top_p) {
  std::vector<double> p(raw_logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = raw_logits[i] / temperature;
  softmax_inplace(p);
  if (top_p < 1.0) {
    const std::vector<int> kept = nucleus_set(p, top_p);
    std::vector<double> out(p.size(), 0.0);
    double mass = 0.0;
    for (int idx : kept) mass += p[static_cast<std::size_t>(idx)];
    for (int idx : kept) out[static_cast<std::size_t>(idx)] = p[static_cast<std::size_t>(idx)] / mass;
    return out;
  }
  return p;
}

}  // namespace detail

// Probability vector the sampler draws from: softmax(logits / temperature)
// with nucleus truncation at top_p. Sums to 1 within 1e-9.
inline std::vector<double> token_distribution(const PolicyParams& params,
                                              std::span<const TokenId> context,
                                              double temperature, double top_p) {
  detail::check_sampling_params(temperature, top_p);
  ForwardTrace trace;
  forward(params, context, trace);
  return detail::sampling_distribution(trace.logits, temperature, top_p);
}

// Entropy of the policy distribution at temperature 1 over the full
// vocabulary, regardless of sampling settings.
inline double entropy_at(const PolicyParams& params, std::span<const TokenId> context) {
  ForwardTrace trace;
  forward(params, context, trace);
  softmax_inplace(trace.logits);
  return entropy_of(trace.logits);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

// Autoregressive sampling until the end-of-answer token or max_len. Records
// per-token log-probs under the sampling distribution and the temperature-1
// full-vocabulary entropy at each step.
inline Response sample_response(const PolicyParams& params, const Prompt& prompt,
                                int max_len, double temperature, double top_p,
                                Rng& rng) {
  detail::check_sampling_params(temperature, top_p);
  if (max_len < 1) throw ContractViolation("max_len must be >= 1");
  const PolicyDims& d = params.dims();

  Response out;
  std::vector<TokenId> sequence = prompt.tokens;
  ForwardTrace trace;
  for (int step = 0; step < max_len; ++step) {
    const std::vector<TokenId> ctx = context_window(d, sequence);
    forward(params, ctx, trace);

    std::vector<double> t1 = trace.logits;
    softmax_inplace(t1);
    const double entropy = entropy_of(t1);

    std::vector<double> dist;
    if (temperature == 1.0 && top_p == 1.0) {
      dist = std::move(t1);
    } else {
      dist = detail::sampling_distribution(trace.logits, temperature, top_p);
    }

    const auto token = static_cast<TokenId>(rng.categorical(dist));
    out.tokens.push_back(token);
    out.logprobs_old.push_back(std::log(dist[static_cast<std::size_t>(token)]));
    out.entropies.push_back(entropy);
    sequence.push_back(token);
    if (token == d.eos_id()) {
      out.terminated = true;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Log-probabilities and gradients
// ---------------------------------------------------------------------------

// Per-token log-probs of a fixed response under the current policy, using
// the same temperature/top_p construction as the sampler. A token that falls
// outside the current nucleus has probability zero and log-prob -inf.
inline std::vector<double> response_logprobs(const PolicyParams& params,
                                             const Prompt& prompt,
                                             std::span<const TokenId> response_tokens,
                                             double temperature = 1.0,
                                             double top_p = 1.0) {
  detail::check_sampling_params(temperature, top_p);
  const PolicyDims& d = params.dims();
  std::vector<double> out;
  out.reserve(response_tokens.size());
  std::vector<TokenId> sequence = prompt.tokens;
  ForwardTrace trace;
  for (TokenId token : response_tokens) {
    const std::vector<TokenId> ctx = context_window(d, sequence);
    forward(params, ctx, trace);
    const std::vector<double> dist =
        detail::sampling_distribution(trace.logits, temperature, top_p);
    const double p = dist[static_cast<std::size_t>(token)];
    out.push_back(p > 0.0 ? std::log(p)
                          : -std::numeric_limits<double>::infinity());
    sequence.push_back(token);
  }
  return out;
}

// Temperature-1 full-vocabulary entropies along a fixed response, one value
// per generated token position.
inline std::vector<double> response_entropies(const PolicyParams& params,
                                              const Prompt& prompt,
                                              std::span<const TokenId> response_tokens) {
  const PolicyDims& d = params.dims();
  std::vector<double> out;
  out.reserve(response_tokens.size());
  std::vector<TokenId> sequence = prompt.tokens;
  ForwardTrace trace;
  for (TokenId token : response_tokens) {
    const std::vector<TokenId> ctx = context_window(d, sequence);
    forward(params, ctx, trace);
    softmax_inplace(trace.logits);
    out.push_back(entropy_of(trace.logits));
    sequence.push_back(token);
  }
  return out;
}

// Accumulates d/dtheta of sum_t w_t * log pi(o_t | context_t) across calls.
// Gradients are exact; the nucleus keep-set is treated as locally constant,
// so tokens outside the current nucleus contribute nothing.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const PolicyDims& dims)
      : dims_(dims), grad_(dims.param_count(), 0.0) {}

  void reset() { std::fill(grad_.begin(), grad_.end(), 0.0); }
  std::span<const double> gradient() const { return grad_; }
  std::vector<double> take() { return std::move(grad_); }

  // Adds weighted log-prob gradients for one response and returns the
  // per-token log-probs under `params`.
  std::vector<double> accumulate(const PolicyParams& params, const Prompt& prompt,
                                 std::span<const TokenId> response_tokens,
                                 std::span<const double> token_weights,
                                 double temperature = 1.0, double top_p = 1.0) {
    detail::check_sampling_params(temperature, top_p);
    if (token_weights.size() != response_tokens.size()) {
      throw ContractViolation("token weight count does not match response length");
    }
    if (params.dims() != dims_) {
      throw ConfigError("accumulator dims do not match policy dims");
    }
    const PolicyDims& d = dims_;
    std::vector<double> logps;
    logps.reserve(response_tokens.size());

    std::vector<TokenId> sequence = prompt.tokens;
    std::vector<TokenId> ctx;
    for (std::size_t t = 0; t < response_tokens.size(); ++t) {
      const TokenId token = response_tokens[t];
      ctx = context_window(d, sequence);
      forward(params, ctx, trace_);
      const std::vector<double> dist =
          detail::sampling_distribution(trace_.logits, temperature, top_p);
      const double p = dist[static_cast<std::size_t>(token)];
      const double logp = p > 0.0 ? std::log(p)
                                  : -std::numeric_limits<double>::infinity();
      logps.push_back(logp);

      const double w = token_weights[t];
      if (w != 0.0 && p > 0.0) {
        backward_token(params, ctx, dist, token, w / temperature);
      }
      sequence.push_back(token);
    }
    return logps;
  }

 private:
  // One backward pass for d(log q_k)/dz = e_k - q restricted to the nucleus,
  // scaled by `coeff` (weight / temperature).
  void backward_token(const PolicyParams& params, std::span<const TokenId> ctx,
                      std::span<const double> dist, TokenId token, double coeff) {
    const PolicyDims& d = dims_;
    const std::span<const double> theta = params.values();

    dlogits_.assign(static_cast<std::size_t>(d.vocab_size), 0.0);
    for (int v = 0; v < d.vocab_size; ++v) {
      dlogits_[static_cast<std::size_t>(v)] = -coeff * dist[static_cast<std::size_t>(v)];
    }
    dlogits_[static_cast<std::size_t>(token)] += coeff;

    // Output projection and its input gradient.
    const double* w2 = theta.data() + d.w2_offset();
    double* gw2 = grad_.data() + d.w2_offset();
    double* gb2 = grad_.data() + d.b2_offset();
    dhidden_.assign(static_cast<std::size_t>(d.hidden_dim), 0.0);
    for (int v = 0; v < d.vocab_size; ++v) {
      const double dv = dlogits_[static_cast<std::size_t>(v)];
      if (dv == 0.0) continue;
      gb2[v] += dv;
      const double* row = w2 + static_cast<std::size_t>(v) * d.hidden_dim;
      double* grow = gw2 + static_cast<std::size_t>(v) * d.hidden_dim;
      for (int j = 0; j < d.hidden_dim; ++j) {
        grow[j] += dv * trace_.hidden[static_cast<std::size_t>(j)];
        dhidden_[static_cast<std::size_t>(j)] += dv * row[j];
      }
    }

    // Through tanh.
    for (int j = 0; j < d.hidden_dim; ++j) {
      const double h = trace_.hidden[static_cast<std::size_t>(j)];
      dhidden_[static_cast<std::size_t>(j)] *= (1.0 - h * h);
    }

    // Hidden layer and embedding gradient.
    const double* w1 = theta.data() + d.w1_offset();
    double* gw1 = grad_.data() + d.w1_offset();
    double* gb1 = grad_.data() + d.b1_offset();
    dinput_.assign(static_cast<std::size_t>(d.input_dim()), 0.0);
    for (int j = 0; j < d.hidden_dim; ++j) {
      const double dj = dhidden_[static_cast<std::size_t>(j)];
      if (dj == 0.0) continue;
      gb1[j] += dj;
      const double* row = w1 + static_cast<std::size_t>(j) * d.input_dim();
      double* grow = gw1 + static_cast<std::size_t>(j) * d.input_dim();
      for (int i = 0; i < d.input_dim(); ++i) {
        grow[i] += dj * trace_.input[static_cast<std::size_t>(i)];
        dinput_[static_cast<std::size_t>(i)] += dj * row[i];
      }
    }

    double* gembed = grad_.data() + d.embed_offset();
    for (int s = 0; s < d.window; ++s) {
      double* grow = gembed + static_cast<std::size_t>(ctx[static_cast<std::size_t>(s)]) * d.embed_dim;
      const double* seg = dinput_.data() + static_cast<std::size_t>(s) * d.embed_dim;
      for (int i = 0; i < d.embed_dim; ++i) grow[i] += seg[i];
    }
  }

  PolicyDims dims_;
  std::vector<double> grad_;
  ForwardTrace trace_;
  std::vector<double> dlogits_, dhidden_, dinput_;
};

// ---------------------------------------------------------------------------
// Checkpoint format: [version:u8][V,d,h,w : 4 x i32 LE][params : f64 LE]
// ---------------------------------------------------------------------------

inline constexpr std::uint8_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline bool host_is_little_endian() {
  const std::uint32_t probe = 1;
  unsigned char b[4];
  std::memcpy(b, &probe, 4);
  return b[0] == 1;
}

}  // namespace detail

inline std::string serialize_checkpoint(const PolicyParams& params) {
  const PolicyDims& d = params.dims();
  std::string out;
  out.reserve(1 + 16 + params.values().size() * 8);
  out.push_back(static_cast<char>(kCheckpointVersion));
  detail::put_u32(out, static_cast<std::uint32_t>(d.vocab_size));
  detail::put_u32(out, static_cast<std::uint32_t>(d.embed_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(d.hidden_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(d.window));
  for (double v : params.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    if (!detail::host_is_little_endian()) {
      std::uint64_t swapped = 0;
      for (int i = 0; i < 8; ++i) swapped |= ((bits >> (8 * i)) & 0xff) << (8 * (7 - i));
      bits = swapped;
    }
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  return out;
}

inline PolicyParams deserialize_checkpoint(std::span<const unsigned char> bytes) {
  if (bytes.size() < 17) throw ConfigError("checkpoint truncated");
  if (bytes[0] != kCheckpointVersion) {
    throw ConfigError("unsupported checkpoint version " + std::to_string(bytes[0]));
  }
  PolicyDims dims;
  dims.vocab_size = static_cast<int>(detail::get_u32(bytes.data() + 1));
  dims.embed_dim = static_cast<int>(detail::get_u32(bytes.data() + 5));
  dims.hidden_dim = static_cast<int>(detail::get_u32(bytes.data() + 9));
  dims.window = static_cast<int>(detail::get_u32(bytes.data() + 13));
  dims.validate();
  const std::size_t expected = 17 + dims.param_count() * 8;
  if (bytes.size() != expected) {
    throw ConfigError("checkpoint payload size mismatch: expected " +
                      std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  std::vector<double> theta(dims.param_count());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(bytes[17 + i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    }
    if (!detail::host_is_little_endian()) {
      std::uint64_t swapped = 0;
      for (int b = 0; b < 8; ++b) swapped |= ((bits >> (8 * b)) & 0xff) << (8 * (7 - b));
      bits = swapped;
    }
    std::memcpy(&theta[i], &bits, 8);
  }
  return PolicyParams(dims, std::move(theta));
}

inline void save_checkpoint(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open checkpoint file for writing: " + path);
  const std::string bytes = serialize_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing checkpoint: " + path);
}

inline PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint file: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(
      std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(data.data()), data.size()));
}

}  // namespace zvp
