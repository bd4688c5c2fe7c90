#include "mertoneq/config.hpp"

#include <set>

#include <json.hpp>

#include "mertoneq/errors.hpp"

namespace mertoneq {

namespace {

using nlohmann::json;

void only_keys(const json& j, std::string_view where, std::set<std::string> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ValidationError("unknown field '" + key + "' in " + std::string(where));
  }
}

const json& need(const json& j, const std::string& key, std::string_view where) {
  if (!j.contains(key)) throw ValidationError("missing field '" + key + "' in " + std::string(where));
  return j.at(key);
}

double number(const json& j, std::string_view what) {
  if (!j.is_number()) throw ValidationError(std::string(what) + " must be a number");
  return j.get<double>();
}

Curve curve(const json& j, double T, std::string_view what) {
  if (j.is_number()) return Curve::constant(j.get<double>(), 0.0, T);
  if (!j.is_array() || j.empty()) throw ValidationError(std::string(what) + " must be a number or a node array");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(number(e, what));
  if (v.size() == 1) return Curve::constant(v[0], 0.0, T);
  return Curve(0.0, T, std::move(v));
}

std::vector<double> numbers(const json& j, std::string_view what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + " must be an array");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(number(e, what));
  return v;
}

MarketModel market(const json& j, double T) {
  only_keys(j, "market", {"r0", "mu", "sigma"});
  const Curve r0 = curve(need(j, "r0", "market"), T, "market.r0");
  const json& mu = need(j, "mu", "market");
  const json& sigma = need(j, "sigma", "market");
  std::vector<Curve> drift;
  std::vector<std::vector<Curve>> vol;
  if (mu.is_number()) {
    drift.push_back(curve(mu, T, "market.mu"));
  } else {
    if (!mu.is_array() || mu.empty()) throw ValidationError("market.mu must be a number or an array");
    for (const auto& e : mu) drift.push_back(curve(e, T, "market.mu"));
  }
  if (sigma.is_number()) {
    vol.push_back({curve(sigma, T, "market.sigma")});
  } else {
    if (!sigma.is_array()) throw ValidationError("market.sigma must be a number or a matrix");
    for (const auto& row : sigma) {
      if (!row.is_array()) throw ValidationError("market.sigma rows must be arrays");
      std::vector<Curve> r;
      for (const auto& e : row) r.push_back(curve(e, T, "market.sigma"));
      vol.push_back(std::move(r));
    }
  }
  if (vol.size() != drift.size()) throw ValidationError("market.sigma must have one row per asset");
  for (const auto& row : vol) {
    if (row.size() != drift.size()) throw ValidationError("market.sigma must be square");
  }
  return MarketModel(T, r0, std::move(drift), std::move(vol));
}

DiscountFunction discount(const json& j, double T) {
  if (!j.is_object()) throw ValidationError("discount must be an object");
  const json& type = need(j, "type", "discount");
  if (!type.is_string()) throw ValidationError("discount.type must be a string");
  const std::string t = type.get<std::string>();
  if (t == "exponential") {
    only_keys(j, "discount", {"type", "rate"});
    return DiscountFunction::exponential(number(need(j, "rate", "discount"), "discount.rate"), T);
  }
  if (t == "hyperbolic") {
    only_keys(j, "discount", {"type", "k", "beta"});
    return DiscountFunction::hyperbolic(number(need(j, "k", "discount"), "discount.k"),
                                        number(need(j, "beta", "discount"), "discount.beta"), T);
  }
  if (t == "mixture") {
    only_keys(j, "discount", {"type", "weights", "rates"});
    return DiscountFunction::mixture(numbers(need(j, "weights", "discount"), "discount.weights"),
                                     numbers(need(j, "rates", "discount"), "discount.rates"), T);
  }
  if (t == "karp") {
    only_keys(j, "discount", {"type", "delta"});
    return DiscountFunction::karp(curve(need(j, "delta", "discount"), T, "discount.delta"), T);
  }
  throw ValidationError("unknown discount type '" + t + "'");
}

Utility utility(const json& j) {
  if (!j.is_object()) throw ValidationError("utility must be an object");
  const json& type = need(j, "type", "utility");
  if (!type.is_string()) throw ValidationError("utility.type must be a string");
  const std::string t = type.get<std::string>();
  if (t == "power") {
    only_keys(j, "utility", {"type", "a", "gamma"});
    return Utility::power(number(need(j, "a", "utility"), "utility.a"),
                          number(need(j, "gamma", "utility"), "utility.gamma"));
  }
  if (t == "log") {
    only_keys(j, "utility", {"type", "a"});
    return Utility::log(number(need(j, "a", "utility"), "utility.a"));
  }
  if (t == "exponential") {
    only_keys(j, "utility", {"type", "a", "gamma"});
    return Utility::exponential(number(need(j, "a", "utility"), "utility.a"),
                                number(need(j, "gamma", "utility"), "utility.gamma"));
  }
  throw ValidationError("unknown utility type '" + t + "'");
}

}  // namespace

ModelConfig parse_model_config(std::string_view text, bool allow_other_sections) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  if (!allow_other_sections) only_keys(doc, "config", {"market", "discount", "utility", "grid"});

  const json& g = need(doc, "grid", "config");
  only_keys(g, "grid", {"T", "n"});
  const double T = number(need(g, "T", "grid"), "grid.T");
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("grid.T must be > 0");
  const json& n = need(g, "n", "grid");
  if (!n.is_number_integer() || n.get<long long>() < 1) throw ValidationError("grid.n must be a positive integer");

  return ModelConfig{market(need(doc, "market", "config"), T), discount(need(doc, "discount", "config"), T),
                     utility(need(doc, "utility", "config")), TimeGrid(T, static_cast<std::size_t>(n.get<long long>()))};
}

}  // namespace mertoneq
