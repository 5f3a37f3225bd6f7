#pragma once

// JSON experiment configs. Every suite block is a flat object; unknown keys
// are rejected and values are checked against module preconditions when parsed.

#include "supercon/geometry.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace supercon {

using json = nlohmann::ordered_json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Bodies

inline json vector_to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  if (!v.allFinite()) throw ConfigError(what + ": non-finite entry");
  return v;
}

inline json body_to_json(const ConvexBody& body) {
  json j;
  j["kind"] = kind_name(body);
  if (const auto* h = std::get_if<HalfSpace>(&body)) {
    j["normal"] = vector_to_json(h->normal());
    j["offset"] = h->offset();
  } else if (const auto* b = std::get_if<Ball>(&body)) {
    j["center"] = vector_to_json(b->center());
    j["radius"] = b->radius();
  } else if (const auto* e = std::get_if<Ellipsoid>(&body)) {
    j["center"] = vector_to_json(e->center());
    j["semi_axes"] = vector_to_json(e->semi_axes());
  } else {
    json list = json::array();
    for (const auto& h : std::get<HalfSpaceSet>(body).halfspaces())
      list.push_back({{"normal", vector_to_json(h.normal())}, {"offset", h.offset()}});
    j["halfspaces"] = list;
  }
  return j;
}

namespace detail {

inline void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected an object");
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) throw ConfigError(what + ": unknown key '" + k + "'");
  }
  for (const char* k : keys)
    if (!j.contains(k)) throw ConfigError(what + ": missing key '" + std::string(k) + "'");
}

inline double number_from_json(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + ": expected a number");
  return j.get<double>();
}

inline HalfSpace halfspace_from_json(const json& j, const std::string& what) {
  only_keys(j, {"normal", "offset"}, what);
  try {
    return HalfSpace(vector_from_json(j["normal"], what + ".normal"), number_from_json(j["offset"], what + ".offset"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace detail

inline ConvexBody body_from_json(const json& j, const std::string& what = "body") {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ConfigError(what + ": expected an object with a string 'kind'");
  const std::string kind = j["kind"];
  try {
    if (kind == "halfspace") {
      detail::only_keys(j, {"kind", "normal", "offset"}, what);
      return detail::halfspace_from_json({{"normal", j["normal"]}, {"offset", j["offset"]}}, what);
    }
    if (kind == "ball") {
      detail::only_keys(j, {"kind", "center", "radius"}, what);
      return Ball(vector_from_json(j["center"], what + ".center"), detail::number_from_json(j["radius"], what + ".radius"));
    }
    if (kind == "ellipsoid") {
      detail::only_keys(j, {"kind", "center", "semi_axes"}, what);
      return Ellipsoid(vector_from_json(j["center"], what + ".center"),
                       vector_from_json(j["semi_axes"], what + ".semi_axes"));
    }
    if (kind == "halfspace_set") {
      detail::only_keys(j, {"kind", "halfspaces"}, what);
      if (!j["halfspaces"].is_array()) throw ConfigError(what + ".halfspaces: expected an array");
      std::vector<HalfSpace> hs;
      for (std::size_t i = 0; i < j["halfspaces"].size(); ++i)
        hs.push_back(detail::halfspace_from_json(j["halfspaces"][i], what + ".halfspaces[" + std::to_string(i) + "]"));
      return HalfSpaceSet(std::move(hs));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
  throw ConfigError(what + ": unknown body kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Field-list driven (de)serialization of flat parameter blocks

namespace detail {

class FieldReader {
 public:
  FieldReader(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ConfigError(what_ + ": expected an object");
  }

  template <class T>
  void operator()(const char* key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const std::string where = what_ + "." + key;
    read(j_[key], field, where);
  }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw ConfigError(what_ + ": unknown key '" + k + "'");
  }

 private:
  static void read(const json& j, double& out, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    out = j.get<double>();
    if (!std::isfinite(out)) throw ConfigError(where + ": must be finite");
  }
  template <class I>
    requires std::is_integral_v<I>
  static void read(const json& j, I& out, const std::string& where) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(where + ": expected an integer");
    if (j.is_number_integer() && j.get<std::int64_t>() < 0) throw ConfigError(where + ": must be >= 0");
    out = j.get<I>();
  }
  static void read(const json& j, std::string& out, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected a string");
    out = j.get<std::string>();
  }
  template <class T>
  static void read(const json& j, std::vector<T>& out, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    out.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      T v{};
      read(j[i], v, where + "[" + std::to_string(i) + "]");
      out.push_back(v);
    }
  }
  static void read(const json& j, json& out, const std::string&) { out = j; }

  const json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

class FieldWriter {
 public:
  template <class T>
  void operator()(const char* key, const T& field) {
    if constexpr (std::is_same_v<T, json>) {
      if (!field.is_null()) out[key] = field;
    } else {
      out[key] = field;
    }
  }
  json out = json::object();
};

}  // namespace detail

template <class Config>
Config parse_block(const json& j, const std::string& what) {
  Config c;
  detail::FieldReader reader(j, what);
  c.fields(reader);
  reader.finish();
  c.validate();
  return c;
}

template <class Config>
json block_to_json(Config c) {
  detail::FieldWriter writer;
  c.fields(writer);
  return writer.out;
}

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

inline void require_sampling(const std::string& s, const std::string& what) {
  require(s == "auto" || s == "dense" || s == "implicit", what + ".sampling: expected auto, dense or implicit");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Suite parameter blocks. Defaults reproduce the acceptance configuration.

struct SupmatrixTraceConfig {
  std::int64_t N = 50;
  std::uint64_t I = 25;
  std::uint64_t n_max = 60;
  std::uint64_t instances = 20;
  std::uint64_t equivalence_instances = 10;
  double margin = 0.1;
  double beta0 = 1.0;
  double decay = 0.995;
  double column_tol = 1e-10;
  std::uint64_t max_extra_sweeps = 100000;

  template <class V>
  void fields(V& v) {
    v("N", N); v("I", I); v("n_max", n_max); v("instances", instances);
    v("equivalence_instances", equivalence_instances); v("margin", margin); v("beta0", beta0);
    v("decay", decay); v("column_tol", column_tol); v("max_extra_sweeps", max_extra_sweeps);
  }
  void validate() const {
    using detail::require;
    require(N >= 2, "supmatrix-trace.N: must be >= 2");
    require(I >= 1, "supmatrix-trace.I: must be >= 1");
    require(instances >= 1, "supmatrix-trace.instances: must be >= 1");
    require(equivalence_instances <= instances, "supmatrix-trace.equivalence_instances: must not exceed instances");
    require(margin > 0.0, "supmatrix-trace.margin: must be > 0");
    require(beta0 >= 0.0, "supmatrix-trace.beta0: must be >= 0");
    require(decay > 0.0 && decay < 1.0, "supmatrix-trace.decay: must lie in (0, 1)");
    require(column_tol > 0.0, "supmatrix-trace.column_tol: must be > 0");
  }
};

struct ComVerifyConfig {
  std::vector<double> sum_d = {3.0, 4.0, 12.0};
  std::int64_t sum_N = 1000;
  std::uint64_t sum_trials = 10000;
  double chain_step = 0.1;
  std::uint64_t chain_steps = 20;
  std::int64_t chain_N = 500;
  std::uint64_t chain_trials = 10000;
  std::int64_t action_N = 400;
  std::uint64_t action_trials = 1000;
  std::uint64_t action_spectra = 3;
  std::uint64_t action_exact_trials = 20;
  std::int64_t rank1_N = 100;
  std::uint64_t rank1_trials = 1000;
  std::int64_t product_N = 400;
  std::uint64_t product_M = 5;
  std::uint64_t product_trials = 1000;
  std::uint64_t psd_checks = 1000;
  std::vector<std::int64_t> gram_N = {64, 256};
  std::uint64_t gram_trials = 20;
  std::string sampling = "auto";

  template <class V>
  void fields(V& v) {
    v("sum_d", sum_d); v("sum_N", sum_N); v("sum_trials", sum_trials);
    v("chain_step", chain_step); v("chain_steps", chain_steps); v("chain_N", chain_N); v("chain_trials", chain_trials);
    v("action_N", action_N); v("action_trials", action_trials); v("action_spectra", action_spectra);
    v("action_exact_trials", action_exact_trials);
    v("rank1_N", rank1_N); v("rank1_trials", rank1_trials);
    v("product_N", product_N); v("product_M", product_M); v("product_trials", product_trials);
    v("psd_checks", psd_checks); v("gram_N", gram_N); v("gram_trials", gram_trials); v("sampling", sampling);
  }
  void validate() const {
    using detail::require;
    require(!sum_d.empty(), "com-verify.sum_d: must be nonempty");
    for (double d : sum_d) require(d >= 0.0, "com-verify.sum_d: entries must be >= 0");
    require(sum_N >= 2, "com-verify.sum_N: must be >= 2");
    require(chain_step >= 0.0 && chain_step <= 2.0, "com-verify.chain_step: must lie in [0, 2]");
    require(chain_steps >= 1, "com-verify.chain_steps: must be >= 1");
    require(chain_N >= 3, "com-verify.chain_N: must be >= 3");
    require(action_N >= 2 && rank1_N >= 2 && product_N >= 2, "com-verify: matrix dimensions must be >= 2");
    require(action_spectra >= 1 && product_M >= 1, "com-verify: action_spectra and product_M must be >= 1");
    for (auto n : gram_N) require(n >= 1, "com-verify.gram_N: entries must be >= 1");
    require(sum_trials >= 2 && chain_trials >= 2 && action_trials >= 2 && rank1_trials >= 2 && product_trials >= 2 &&
                action_exact_trials >= 1 && gram_trials >= 1,
            "com-verify: trial counts too small");
    detail::require_sampling(sampling, "com-verify");
  }
};

struct ScalingConfig {
  std::vector<std::int64_t> dims = {64, 256, 1024};
  std::uint64_t action_trials = 2000;
  std::uint64_t chain_trials = 2000;
  double chain_step = 0.1;
  std::uint64_t chain_steps = 20;
  std::vector<std::int64_t> gram_dims = {32, 64, 128};
  std::uint64_t gram_trials = 20;
  std::string sampling = "auto";

  template <class V>
  void fields(V& v) {
    v("dims", dims); v("action_trials", action_trials); v("chain_trials", chain_trials);
    v("chain_step", chain_step); v("chain_steps", chain_steps); v("gram_dims", gram_dims);
    v("gram_trials", gram_trials); v("sampling", sampling);
  }
  void validate() const {
    using detail::require;
    require(dims.size() >= 3, "scaling.dims: need at least 3 dimensions");
    for (auto n : dims) require(n >= 16, "scaling.dims: entries must be >= 16");
    require(gram_dims.size() >= 3, "scaling.gram_dims: need at least 3 dimensions");
    for (auto n : gram_dims) require(n >= 16, "scaling.gram_dims: entries must be >= 16");
    require(action_trials >= 2 && chain_trials >= 2 && gram_trials >= 1, "scaling: trial counts too small");
    require(chain_step > 0.0 && chain_step <= 2.0, "scaling.chain_step: must lie in (0, 2]");
    require(chain_steps >= 1, "scaling.chain_steps: must be >= 1");
    detail::require_sampling(sampling, "scaling");
  }
};

struct ProjderCheckConfig {
  std::uint64_t fd_samples = 100;
  std::int64_t fd_max_N = 12;
  double fd_h = 1e-5;
  std::uint64_t mv_segments = 20;
  std::uint64_t mv_nodes = 64;
  std::uint64_t ratio_samples = 100000;
  std::vector<std::int64_t> ratio_N = {3, 50, 500};
  std::uint64_t paths = 10000;
  std::int64_t cascade_N = 200;
  std::uint64_t cascade_M = 5;
  double cascade_radius = 1.0;
  double cascade_distance = 0.2;
  std::uint64_t cascade_trials = 1000;
  /// Optional explicit chain: [{"body": {...}, "distance": d}, ...]; replaces
  /// the generated spheres when present.
  json cascade_chain;

  template <class V>
  void fields(V& v) {
    v("fd_samples", fd_samples); v("fd_max_N", fd_max_N); v("fd_h", fd_h);
    v("mv_segments", mv_segments); v("mv_nodes", mv_nodes);
    v("ratio_samples", ratio_samples); v("ratio_N", ratio_N); v("paths", paths);
    v("cascade_N", cascade_N); v("cascade_M", cascade_M); v("cascade_radius", cascade_radius);
    v("cascade_distance", cascade_distance); v("cascade_trials", cascade_trials); v("cascade_chain", cascade_chain);
  }
  void validate() const {
    using detail::require;
    require(fd_samples >= 1, "projder-check.fd_samples: must be >= 1");
    require(fd_max_N >= 2, "projder-check.fd_max_N: must be >= 2");
    require(fd_h > 0.0, "projder-check.fd_h: must be > 0");
    require(mv_nodes >= 1, "projder-check.mv_nodes: must be >= 1");
    for (auto n : ratio_N) require(n >= 2, "projder-check.ratio_N: entries must be >= 2");
    require(cascade_N >= 2, "projder-check.cascade_N: must be >= 2");
    require(cascade_M >= 1, "projder-check.cascade_M: must be >= 1");
    require(cascade_radius > 0.0 && cascade_distance > 0.0, "projder-check: cascade radius and distance must be > 0");
    require(cascade_trials >= 2, "projder-check.cascade_trials: must be >= 2");
    if (!cascade_chain.is_null()) chain();
  }

  struct Link {
    ConvexBody body;
    double distance;
  };
  std::vector<Link> chain() const {
    std::vector<Link> out;
    if (!cascade_chain.is_array() || cascade_chain.empty())
      throw ConfigError("projder-check.cascade_chain: expected a nonempty array");
    for (std::size_t i = 0; i < cascade_chain.size(); ++i) {
      const std::string what = "projder-check.cascade_chain[" + std::to_string(i) + "]";
      detail::only_keys(cascade_chain[i], {"body", "distance"}, what);
      ConvexBody body = body_from_json(cascade_chain[i]["body"], what + ".body");
      const double d = detail::number_from_json(cascade_chain[i]["distance"], what + ".distance");
      if (!(d > 0.0)) throw ConfigError(what + ".distance: must be > 0");
      if (!std::holds_alternative<Ball>(body) && !std::holds_alternative<Ellipsoid>(body))
        throw ConfigError(what + ".body: cascades need a ball or an ellipsoid");
      if (!out.empty() && dim(body) != dim(out.front().body)) throw ConfigError(what + ".body: dimension mismatch");
      out.push_back({std::move(body), d});
    }
    return out;
  }
};

struct LinSupSuiteConfig {
  std::int64_t N = 200;
  std::uint64_t I = 100;
  std::uint64_t trials = 100;
  double margin = 0.1;
  double beta0 = 1.0;
  double decay = 0.995;
  double tol = 1e-8;
  std::uint64_t max_sweeps = 100000;
  std::int64_t drift_N = 500;
  std::uint64_t drift_I = 500;
  std::uint64_t drift_trials = 20;
  std::vector<std::uint64_t> drift_rows = {200, 400, 600};
  std::vector<std::uint64_t> drift_steps = {4, 16, 64};

  template <class V>
  void fields(V& v) {
    v("N", N); v("I", I); v("trials", trials); v("margin", margin); v("beta0", beta0); v("decay", decay);
    v("tol", tol); v("max_sweeps", max_sweeps); v("drift_N", drift_N); v("drift_I", drift_I);
    v("drift_trials", drift_trials); v("drift_rows", drift_rows); v("drift_steps", drift_steps);
  }
  void validate() const {
    using detail::require;
    require(N >= 2, "linsup.N: must be >= 2");
    require(I >= 1, "linsup.I: must be >= 1");
    require(trials >= 1, "linsup.trials: must be >= 1");
    require(margin > 0.0, "linsup.margin: must be > 0");
    require(beta0 >= 0.0, "linsup.beta0: must be >= 0");
    require(decay > 0.0 && decay < 1.0, "linsup.decay: must lie in (0, 1)");
    require(tol > 0.0, "linsup.tol: must be > 0");
    require(max_sweeps >= 1, "linsup.max_sweeps: must be >= 1");
    if (drift_trials > 0) {
      require(drift_N >= 2 && drift_I >= 1, "linsup: drift_N must be >= 2 and drift_I >= 1");
      require(!drift_rows.empty() && !drift_steps.empty(), "linsup: drift_rows and drift_steps must be nonempty");
      for (auto k : drift_steps) require(k >= 1, "linsup.drift_steps: entries must be >= 1");
    }
  }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"com-verify", "linsup", "projder-check", "supmatrix-trace", "scaling"};
  return names;
}

/// Top-level experiment config: {"suite", "seed", "threads", "output_dir", "<suite>": {...}}.
struct ExperimentConfig {
  std::optional<std::string> suite;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> output_dir;
  json blocks = json::object();  // suite name -> parameter block
};

inline ExperimentConfig parse_experiment_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "suite") {
      if (!value.is_string()) throw ConfigError("config.suite: expected a string");
      c.suite = value.get<std::string>();
      const auto& names = suite_names();
      if (std::find(names.begin(), names.end(), *c.suite) == names.end())
        throw ConfigError("config.suite: unknown suite '" + *c.suite + "'");
    } else if (key == "seed") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
        throw ConfigError("config.seed: expected a nonnegative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "threads") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 1)
        throw ConfigError("config.threads: expected a positive integer");
      c.threads = value.get<unsigned>();
    } else if (key == "output_dir") {
      if (!value.is_string()) throw ConfigError("config.output_dir: expected a string");
      c.output_dir = value.get<std::string>();
    } else if (std::find(suite_names().begin(), suite_names().end(), key) != suite_names().end()) {
      if (!value.is_object()) throw ConfigError("config." + key + ": expected an object");
      c.blocks[key] = value;
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  return c;
}

}  // namespace supercon
