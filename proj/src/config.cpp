#include "netharvest/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace netharvest {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                         const std::string& what) const {
    const auto mark = node.Mark();
    const long line = mark.line >= 0 ? mark.line + 1 : 0;
    std::string where = origin_;
    if (line > 0) where += ":" + std::to_string(line);
    throw Error(ErrorCode::kParseError, where + ": field '" + field + "': " + what,
                line > 0 ? std::optional<long>(line) : std::nullopt);
  }

  void only_keys(const YAML::Node& map, const std::string& field,
                 std::initializer_list<const char*> allowed) const {
    if (!map.IsMap()) fail(map, field, "expected a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) {
        fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
      }
    }
  }

  YAML::Node required(const YAML::Node& map, const char* key, const std::string& field) const {
    const YAML::Node node = map[key];
    if (!node) fail(map, field, "missing required key");
    return node;
  }

  double number(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, field, "expected a number, got '" + node.Scalar() + "'");
    }
  }

  long integer(const YAML::Node& node, const std::string& field) const {
    const double v = number(node, field);
    if (v != static_cast<double>(static_cast<long>(v))) fail(node, field, "expected an integer");
    return static_cast<long>(v);
  }

  std::string text(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a string");
    return node.Scalar();
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& field) const {
    if (!node.IsSequence()) fail(node, field, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
      out.push_back(number(node[i], field + "[" + std::to_string(i + 1) + "]"));
    }
    return out;
  }

  Eigen::MatrixXd matrix(const YAML::Node& node, const std::string& field) const {
    if (!node.IsSequence() || node.size() == 0) fail(node, field, "expected a list of rows");
    const auto n = static_cast<Eigen::Index>(node.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row_field = field + "[" + std::to_string(i + 1) + "]";
      const auto row = numbers(node[static_cast<std::size_t>(i)], row_field);
      if (static_cast<Eigen::Index>(row.size()) != n) {
        fail(node[static_cast<std::size_t>(i)], row_field,
             "row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(n));
      }
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
  }

  // Calls `build`, prefixing model errors with the field they came from.
  template <typename Build>
  auto model(const YAML::Node& node, const std::string& field, Build&& build) const {
    try {
      return build();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParseError) throw;
      const auto mark = node.Mark();
      std::string where = origin_;
      if (mark.line >= 0) where += ":" + std::to_string(mark.line + 1);
      throw Error(e.code(), where + ": field '" + field + "': " + e.detail(), e.index());
    }
  }

 private:
  std::string origin_;
};

Networkd read_network(const Reader& r, const YAML::Node& node) {
  r.only_keys(node, "network", {"weights", "fick"});
  const bool has_weights = static_cast<bool>(node["weights"]);
  const bool has_fick = static_cast<bool>(node["fick"]);
  if (has_weights == has_fick) r.fail(node, "network", "give exactly one of 'weights' or 'fick'");
  if (has_weights) {
    const auto w = r.matrix(node["weights"], "network.weights");
    return r.model(node["weights"], "network.weights", [&] { return Networkd::build(w); });
  }
  const auto w = r.matrix(node["fick"], "network.fick");
  return r.model(node["fick"], "network.fick", [&] { return fick_from_weights(w); });
}

GrowthModeld read_growth(const Reader& r, const YAML::Node& node) {
  r.only_keys(node, "growth", {"family", "Gamma", "K", "sigma", "delta"});
  const auto family_node = r.required(node, "family", "growth.family");
  const auto family = lower(r.text(family_node, "growth.family"));
  auto param = [&](const char* key) {
    return r.number(r.required(node, key, std::string("growth.") + key), std::string("growth.") + key);
  };
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* key : keys) {
      if (node[key]) r.fail(node[key], std::string("growth.") + key, "not a parameter of " + family);
    }
  };
  if (family == "s1" || family == "logistic") {
    forbid({"delta"});
    const double gamma = param("Gamma"), k = param("K"), sigma = param("sigma");
    return r.model(node, "growth", [&] { return GrowthModeld::logistic(gamma, k, sigma); });
  }
  if (family == "s2" || family == "power") {
    forbid({"Gamma", "K"});
    const double sigma = param("sigma"), delta = param("delta");
    return r.model(node, "growth", [&] { return GrowthModeld::power(sigma, delta); });
  }
  if (family == "s3" || family == "log") {
    forbid({"sigma", "delta"});
    const double gamma = param("Gamma"), k = param("K");
    return r.model(node, "growth", [&] { return GrowthModeld::log_type(gamma, k); });
  }
  r.fail(family_node, "growth.family", "unknown family '" + family + "' (S1, S2 or S3)");
}

ExtractionPattern read_pattern(const Reader& r, const YAML::Node& node, Eigen::Index n) {
  if (!node.IsSequence() || node.size() == 0) r.fail(node, "active_nodes", "expected a nonempty list");
  std::vector<Eigen::Index> active;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto field = "active_nodes[" + std::to_string(i + 1) + "]";
    const long label = r.integer(node[i], field);
    if (label < 1 || label > n) {
      r.fail(node[i], field, "node " + std::to_string(label) + " outside 1.." + std::to_string(n));
    }
    active.push_back(label - 1);
  }
  return r.model(node, "active_nodes", [&] { return ExtractionPattern::build(n, active); });
}

SimConfigd read_sim(const Reader& r, const YAML::Node& node) {
  SimConfigd cfg;
  if (!node) return cfg;
  r.only_keys(node, "sim", {"horizon", "rel_tol", "abs_tol", "max_step", "negativity_tol", "intervals"});
  if (node["horizon"]) cfg.horizon = r.number(node["horizon"], "sim.horizon");
  if (node["rel_tol"]) cfg.rel_tol = r.number(node["rel_tol"], "sim.rel_tol");
  if (node["abs_tol"]) cfg.abs_tol = r.number(node["abs_tol"], "sim.abs_tol");
  if (node["max_step"]) cfg.max_step = r.number(node["max_step"], "sim.max_step");
  if (node["negativity_tol"]) cfg.negativity_tol = r.number(node["negativity_tol"], "sim.negativity_tol");
  if (node["intervals"]) cfg.intervals = r.integer(node["intervals"], "sim.intervals");
  r.model(node, "sim", [&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

VerifySettings read_verify(const Reader& r, const YAML::Node& node) {
  VerifySettings vs;
  if (!node) return vs;
  r.only_keys(node, "verify",
              {"grid_points", "grid_low", "grid_high", "multipliers", "cone_radii", "seed",
               "boundary_samples", "cone_samples", "state_samples"});
  if (node["grid_points"]) vs.grid_points = static_cast<int>(r.integer(node["grid_points"], "verify.grid_points"));
  if (node["grid_low"]) vs.grid_low_factor = r.number(node["grid_low"], "verify.grid_low");
  if (node["grid_high"]) vs.grid_high_factor = r.number(node["grid_high"], "verify.grid_high");
  if (node["multipliers"]) vs.multipliers = r.numbers(node["multipliers"], "verify.multipliers");
  if (node["cone_radii"]) vs.cone_radii = r.numbers(node["cone_radii"], "verify.cone_radii");
  if (node["seed"]) {
    const long seed = r.integer(node["seed"], "verify.seed");
    if (seed < 0) r.fail(node["seed"], "verify.seed", "must be nonnegative");
    vs.seed = static_cast<std::uint64_t>(seed);
  }
  if (node["boundary_samples"]) {
    vs.boundary_samples = static_cast<int>(r.integer(node["boundary_samples"], "verify.boundary_samples"));
  }
  if (node["cone_samples"]) vs.cone_samples = static_cast<int>(r.integer(node["cone_samples"], "verify.cone_samples"));
  if (node["state_samples"]) {
    vs.state_samples = static_cast<int>(r.integer(node["state_samples"], "verify.state_samples"));
  }
  r.model(node, "verify", [&] {
    vs.validate();
    return 0;
  });
  return vs;
}

SweepSettings read_sweep(const Reader& r, const YAML::Node& node) {
  SweepSettings sw;
  if (!node) return sw;
  r.only_keys(node, "sweep", {"parameter", "values"});
  if (node["parameter"]) {
    const auto name = r.text(node["parameter"], "sweep.parameter");
    sw.parameter = r.model(node["parameter"], "sweep.parameter", [&] { return parse_sweep_parameter(name); });
  }
  if (node["values"]) sw.values = r.numbers(node["values"], "sweep.values");
  if (sw.values.empty()) r.fail(node, "sweep.values", "expected at least one value");
  return sw;
}

}  // namespace

std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::kF: return "f";
    case SweepParameter::kRho: return "rho";
    case SweepParameter::kGamma: return "Gamma";
    case SweepParameter::kK: return "K";
    case SweepParameter::kDelta: return "delta";
    case SweepParameter::kSigma: return "sigma";
  }
  return "?";
}

SweepParameter parse_sweep_parameter(const std::string& name) {
  for (auto p : {SweepParameter::kF, SweepParameter::kRho, SweepParameter::kGamma,
                 SweepParameter::kK, SweepParameter::kDelta, SweepParameter::kSigma}) {
    if (name == to_string(p)) return p;
  }
  throw Error(ErrorCode::kInvalidParameter,
              "unknown sweep parameter '" + name + "' (f, rho, Gamma, K, delta, sigma)");
}

ScenarioConfig parse_config_string(const std::string& text, const std::string& origin) {
  const Reader r(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    const long line = e.mark.line + 1;
    throw Error(ErrorCode::kParseError, origin + ":" + std::to_string(line) + ": " + e.msg, line);
  }
  if (!root.IsMap()) r.fail(root, "", "document must be a mapping");
  r.only_keys(root, "",
              {"name", "network", "active_nodes", "growth", "rho", "initial_stock", "sim", "verify", "sweep"});

  const std::string name = root["name"] ? r.text(root["name"], "name") : std::string("scenario");
  auto network = read_network(r, r.required(root, "network", "network"));
  const Eigen::Index n = network.size();
  auto pattern = read_pattern(r, r.required(root, "active_nodes", "active_nodes"), n);
  auto growth = read_growth(r, r.required(root, "growth", "growth"));
  const auto rho_node = r.required(root, "rho", "rho");
  const double rho = r.number(rho_node, "rho");
  if (!(rho > 0)) r.fail(rho_node, "rho", "discount rate must be positive");

  const auto stock_node = r.required(root, "initial_stock", "initial_stock");
  const auto stock = r.numbers(stock_node, "initial_stock");
  if (static_cast<Eigen::Index>(stock.size()) != n) {
    r.fail(stock_node, "initial_stock",
           "has " + std::to_string(stock.size()) + " entries, network has " + std::to_string(n) + " nodes");
  }
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(stock.data(), n);

  auto scenario = r.model(stock_node, "initial_stock", [&] {
    return Scenariod(std::move(network), std::move(pattern), std::move(growth), rho, x0);
  });
  return ScenarioConfig{name, std::move(scenario), read_sim(r, root["sim"]),
                        read_verify(r, root["verify"]), read_sweep(r, root["sweep"])};
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_string(buf.str(), path.string());
}

}  // namespace netharvest
