#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinnode/errors.hpp"
#include "pinnode/taylor2.hpp"

namespace pinnode {

enum class Initializer { glorot_normal, glorot_uniform };

Initializer parse_initializer(std::string_view name);
std::string to_string(Initializer init);

/// Fixed input embedding. `sinusoidal` maps the (scaled) input s to
/// (sin(1 s), ..., sin(n s)), optionally followed by s itself.
struct FeatureMap {
  enum class Kind { identity, sinusoidal };
  Kind kind = Kind::identity;
  int n = 10;
  bool passthrough = false;

  int width() const { return kind == Kind::identity ? 1 : n + (passthrough ? 1 : 0); }
  bool operator==(const FeatureMap&) const = default;
};

enum class TransformKind { identity, hard_ic, positivity };

TransformKind parse_transform(std::string_view name);
std::string to_string(TransformKind kind);

/// Per-component output transform applied to the raw network output N.
///   hard_ic, first order:  u = u0 + (t - t0) N
///   hard_ic, second order: u = u0 + v0 (t - t0) + (t - t0)^2 N   (v0 set)
///   positivity:            u = softplus(N)
struct OutputTransform {
  TransformKind kind = TransformKind::identity;
  double t0 = 0.0;
  double u0 = 0.0;
  std::optional<double> v0;

  bool operator==(const OutputTransform&) const = default;
};

/// Architecture of the feed-forward network. Hidden layers apply the
/// activation element-wise; the output layer is affine.
struct NetworkSpec {
  std::vector<int> widths{20, 20};
  Primitive activation = Primitive::tanh;
  int d_in = 1;
  int d_out = 1;
  Initializer initializer = Initializer::glorot_normal;
  FeatureMap feature_map{};
  /// Empty means identity on every component; otherwise one per output.
  std::vector<OutputTransform> transforms{};
  /// The network sees s = (t - input_offset) * input_scale.
  double input_scale = 1.0;
  double input_offset = 0.0;

  static NetworkSpec uniform(int depth, int width, Primitive activation, int d_out);

  int depth() const { return static_cast<int>(widths.size()); }
  int input_width() const { return feature_map.width(); }
  /// [N_0, N_1, ..., N_L, d_out]
  std::vector<int> layer_sizes() const;
  std::size_t parameter_count() const;
  void validate() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Where layer l's weights and biases sit inside theta. W is column-major
/// (rows = fan_out, cols = fan_in), followed by the bias vector.
struct LayerLayout {
  std::size_t weight_offset;
  std::size_t bias_offset;
  int rows;
  int cols;
};
std::vector<LayerLayout> layer_layout(const NetworkSpec& spec);

struct NetworkParams {
  std::vector<double> theta;
};

/// Glorot-initialized weights, zero biases; a pure function of (spec, seed).
NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Generic (scalar) evaluation. With S = double this is the plain forward
// pass; with S = Var it records the whole computation on a tape and serves as
// the reference implementation for the batched kernel.
// ---------------------------------------------------------------------------

template <class S>
std::vector<Taylor2<S>> input_features(const NetworkSpec& spec, const Taylor2<S>& t) {
  Taylor2<S> s = affine(S(spec.input_scale), t, S(-spec.input_offset * spec.input_scale));
  std::vector<Taylor2<S>> out;
  if (spec.feature_map.kind == FeatureMap::Kind::identity) {
    out.push_back(s);
    return out;
  }
  out.reserve(static_cast<std::size_t>(spec.feature_map.width()));
  for (int k = 1; k <= spec.feature_map.n; ++k)
    out.push_back(taylor_apply(Primitive::sin, scale(S(static_cast<double>(k)), s)));
  if (spec.feature_map.passthrough) out.push_back(s);
  return out;
}

template <class S>
std::vector<Taylor2<S>> forward_trunk(const NetworkSpec& spec, std::span<const S> theta,
                                      std::vector<Taylor2<S>> h) {
  const auto layout = layer_layout(spec);
  if (theta.size() != spec.parameter_count())
    throw ContractViolation("forward: theta length does not match the network spec");
  if (h.size() != static_cast<std::size_t>(spec.input_width()))
    throw ContractViolation("forward: input width does not match the network spec");
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const LayerLayout& L = layout[l];
    std::vector<Taylor2<S>> z(static_cast<std::size_t>(L.rows));
    for (int i = 0; i < L.rows; ++i) {
      Taylor2<S> acc{theta[L.bias_offset + static_cast<std::size_t>(i)], S(0.0), S(0.0)};
      for (int j = 0; j < L.cols; ++j) {
        const S& w = theta[L.weight_offset + static_cast<std::size_t>(i + j * L.rows)];
        const Taylor2<S>& x = h[static_cast<std::size_t>(j)];
        acc.value = acc.value + w * x.value;
        acc.d1 = acc.d1 + w * x.d1;
        acc.d2 = acc.d2 + w * x.d2;
      }
      z[static_cast<std::size_t>(i)] = acc;
    }
    const bool hidden = l + 1 < layout.size();
    if (hidden)
      for (auto& zi : z) zi = taylor_apply(spec.activation, zi);
    h = std::move(z);
  }
  return h;
}

template <class S>
Taylor2<S> transform_output(const OutputTransform& tr, const Taylor2<S>& t, const Taylor2<S>& n) {
  switch (tr.kind) {
    case TransformKind::identity:
      return n;
    case TransformKind::positivity:
      return taylor_apply(Primitive::softplus, n);
    case TransformKind::hard_ic: {
      const Taylor2<S> tau = t - constant_taylor(S(tr.t0));
      if (!tr.v0) return constant_taylor(S(tr.u0)) + tau * n;
      const Taylor2<S> base = affine(S(*tr.v0), tau, S(tr.u0));
      return base + (tau * tau) * n;
    }
  }
  return n;
}

template <class S>
std::vector<Taylor2<S>> apply_transforms(const NetworkSpec& spec, const Taylor2<S>& t,
                                         std::vector<Taylor2<S>> n) {
  if (spec.transforms.empty()) return n;
  for (std::size_t j = 0; j < n.size(); ++j) n[j] = transform_output(spec.transforms[j], t, n[j]);
  return n;
}

/// u(t) with value, du/dt and d2u/dt2 for every output component.
template <class S>
std::vector<Taylor2<S>> forward(const NetworkSpec& spec, std::span<const S> theta, const Taylor2<S>& t) {
  auto n = forward_trunk(spec, theta, input_features(spec, t));
  return apply_transforms(spec, t, std::move(n));
}

inline std::vector<Taylor2<double>> forward(const NetworkSpec& spec, const NetworkParams& params, double t) {
  return forward<double>(spec, std::span<const double>(params.theta), seed_input(t));
}

}  // namespace pinnode
