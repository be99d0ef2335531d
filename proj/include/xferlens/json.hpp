#pragma once

#include <nlohmann/json.hpp>

namespace xferlens {

/// Insertion-ordered JSON; input files keep their entry order.
using Json = nlohmann::ordered_json;

}  // namespace xferlens
