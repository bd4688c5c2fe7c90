#pragma once

#include <string>
#include <string_view>

#include "mertoneq/discount.hpp"
#include "mertoneq/grid.hpp"
#include "mertoneq/market.hpp"
#include "mertoneq/utility.hpp"

namespace mertoneq {

struct ModelConfig {
  MarketModel market;
  DiscountFunction discount;
  Utility utility;
  TimeGrid grid;
};

// JSON document with sections "market", "discount", "utility" and "grid":
//
//   "market":   {"r0": x, "mu": [x, ...], "sigma": [[x, ...], ...]}
//               where every x is a number or an array of node values on [0, T]
//               (a one-asset market may give mu and sigma as plain numbers);
//   "discount": {"type": "exponential", "rate": r}
//             | {"type": "hyperbolic", "k": k, "beta": b}
//             | {"type": "mixture", "weights": [...], "rates": [...]}
//             | {"type": "karp", "delta": x};
//   "utility":  {"type": "power", "a": a, "gamma": g} | {"type": "log", "a": a}
//             | {"type": "exponential", "a": a, "gamma": g};
//   "grid":     {"T": T, "n": n}.
//
// Unknown fields, missing fields and out-of-range values raise ValidationError.
// With allow_other_sections, top-level keys other than the four are left to the caller.
ModelConfig parse_model_config(std::string_view json, bool allow_other_sections = false);

}  // namespace mertoneq
