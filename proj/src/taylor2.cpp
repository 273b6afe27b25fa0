#include "pinnode/taylor2.hpp"

#include "pinnode/errors.hpp"

namespace pinnode {

Primitive parse_primitive(std::string_view name) {
  if (name == "identity" || name == "linear") return Primitive::identity;
  if (name == "sigmoid") return Primitive::sigmoid;
  if (name == "tanh") return Primitive::tanh;
  if (name == "sin" || name == "sine") return Primitive::sin;
  if (name == "cos") return Primitive::cos;
  if (name == "relu") return Primitive::relu;
  if (name == "swish") return Primitive::swish;
  if (name == "exp") return Primitive::exp;
  if (name == "softplus") return Primitive::softplus;
  throw ConfigError("unsupported primitive '" + std::string(name) + "'");
}

std::string to_string(Primitive p) {
  switch (p) {
    case Primitive::identity: return "identity";
    case Primitive::sigmoid: return "sigmoid";
    case Primitive::tanh: return "tanh";
    case Primitive::sin: return "sine";
    case Primitive::cos: return "cos";
    case Primitive::relu: return "relu";
    case Primitive::swish: return "swish";
    case Primitive::exp: return "exp";
    case Primitive::softplus: return "softplus";
  }
  return "identity";
}

}  // namespace pinnode
