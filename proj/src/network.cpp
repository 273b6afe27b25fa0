#include "pinnode/network.hpp"

#include <cmath>

#include "pinnode/rng.hpp"

namespace pinnode {

Initializer parse_initializer(std::string_view name) {
  if (name == "glorot-normal" || name == "glorot_normal") return Initializer::glorot_normal;
  if (name == "glorot-uniform" || name == "glorot_uniform") return Initializer::glorot_uniform;
  throw ConfigError("unknown initializer '" + std::string(name) + "'");
}

std::string to_string(Initializer init) {
  return init == Initializer::glorot_normal ? "glorot-normal" : "glorot-uniform";
}

TransformKind parse_transform(std::string_view name) {
  if (name == "identity" || name == "none") return TransformKind::identity;
  if (name == "hard-ic" || name == "hard_ic") return TransformKind::hard_ic;
  if (name == "positivity" || name == "positive") return TransformKind::positivity;
  throw ConfigError("unknown output transform '" + std::string(name) + "'");
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::hard_ic: return "hard-ic";
    case TransformKind::positivity: return "positivity";
  }
  return "identity";
}

NetworkSpec NetworkSpec::uniform(int depth, int width, Primitive activation, int d_out) {
  NetworkSpec spec;
  spec.widths.assign(static_cast<std::size_t>(depth), width);
  spec.activation = activation;
  spec.d_out = d_out;
  return spec;
}

std::vector<int> NetworkSpec::layer_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(widths.size() + 2);
  sizes.push_back(input_width());
  sizes.insert(sizes.end(), widths.begin(), widths.end());
  sizes.push_back(d_out);
  return sizes;
}

std::size_t NetworkSpec::parameter_count() const {
  const auto sizes = layer_sizes();
  std::size_t n = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l)
    n += static_cast<std::size_t>(sizes[l]) * static_cast<std::size_t>(sizes[l - 1] + 1);
  return n;
}

void NetworkSpec::validate() const {
  if (widths.empty()) throw ConfigError("network needs at least one hidden layer");
  for (int w : widths)
    if (w < 1) throw ConfigError("hidden layer widths must be positive");
  if (d_in != 1) throw ConfigError("only scalar (time) inputs are supported");
  if (d_out < 1) throw ConfigError("output dimension must be positive");
  switch (activation) {
    case Primitive::tanh:
    case Primitive::sigmoid:
    case Primitive::relu:
    case Primitive::sin:
    case Primitive::swish:
      break;
    default:
      throw ConfigError("activation must be one of tanh, sigmoid, relu, sine, swish");
  }
  if (feature_map.kind == FeatureMap::Kind::sinusoidal && feature_map.n < 1)
    throw ConfigError("sinusoidal feature map needs n >= 1");
  if (!transforms.empty() && transforms.size() != static_cast<std::size_t>(d_out))
    throw ConfigError("one output transform per output component is required");
  if (!(input_scale > 0.0) || !std::isfinite(input_scale)) throw ConfigError("input scale must be positive");
}

std::vector<LayerLayout> layer_layout(const NetworkSpec& spec) {
  const auto sizes = spec.layer_sizes();
  std::vector<LayerLayout> out;
  out.reserve(sizes.size() - 1);
  std::size_t offset = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    LayerLayout L{offset, 0, sizes[l], sizes[l - 1]};
    L.bias_offset = offset + static_cast<std::size_t>(L.rows) * static_cast<std::size_t>(L.cols);
    offset = L.bias_offset + static_cast<std::size_t>(L.rows);
    out.push_back(L);
  }
  return out;
}

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  NetworkParams p;
  p.theta.assign(spec.parameter_count(), 0.0);
  CounterRng rng(seed, /*stream=*/0x1417);
  for (const LayerLayout& L : layer_layout(spec)) {
    const double fan_sum = static_cast<double>(L.rows + L.cols);
    const std::size_t count = static_cast<std::size_t>(L.rows) * static_cast<std::size_t>(L.cols);
    if (spec.initializer == Initializer::glorot_normal) {
      const double stddev = std::sqrt(2.0 / fan_sum);
      for (std::size_t k = 0; k < count; ++k) p.theta[L.weight_offset + k] = stddev * rng.normal();
    } else {
      const double limit = std::sqrt(6.0 / fan_sum);
      for (std::size_t k = 0; k < count; ++k) p.theta[L.weight_offset + k] = rng.uniform(-limit, limit);
    }
  }
  return p;
}

}  // namespace pinnode
