#pragma once

// Experiment drivers: configuration, reference truths, metrics and the
// per-figure sweeps. Every driver is deterministic for a fixed configuration
// (solver limits are node counts, never wall time, in the shipped configs).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "symtree/baselines.hpp"
#include "symtree/casestudies.hpp"
#include "symtree/dataset.hpp"
#include "symtree/expr.hpp"
#include "symtree/learn.hpp"
#include "symtree/tree.hpp"

namespace symtree::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------- config

struct DataSpec {
  std::string source = "case1";  // case1 | two-tank | viscosity | csv
  std::size_t n = 40;
  std::uint64_t seed = 1;
  double sigma = 0.0;
  std::string path;              // csv only
  std::string target = "y";      // csv only
};

struct ExperimentSpec {
  std::string name;
  std::vector<std::size_t> sizes;
  std::vector<std::uint64_t> seeds;
  std::vector<double> sigmas;
  std::vector<int> nb_values;
  std::size_t test_size = 2000;
  std::uint64_t test_seed = 7;
  int grid = 10;
  double train_t_end = 8.0;
  double train_dt = 0.1;
  double rollout_t_end = 20.0;
  double rollout_dt = 0.05;
};

struct Config {
  DataSpec data;
  std::vector<std::string> branch;
  std::vector<std::string> leaf;
  FitOptions fit;
  ExperimentSpec experiment;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

template <typename T>
std::vector<T> parse_numbers(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

inline std::optional<int> parse_optional_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t == "none") return std::nullopt;
  return parse_number<int>(key, t);
}

}  // namespace detail

inline std::vector<std::string> case1_branch_basis() { return {"x1", "x2", "x1^2", "x2^2", "x1*x2"}; }
inline std::vector<std::string> case1_leaf_basis() { return {"1", "x1", "x2", "x1^2", "x2^2", "x1*x2"}; }
inline std::vector<std::string> tank_branch_basis() { return {"h1 - h2", "h1", "h2", "F1"}; }
inline std::vector<std::string> tank_leaf_basis() { return {"1", "sqrt(abs(h1 - h2))", "sqrt(h2)", "F1"}; }
inline std::vector<std::string> viscosity_branch_basis() { return {"log10(M)", "M"}; }
inline std::vector<std::string> viscosity_leaf_basis() { return {"1", "log10(M)", "M"}; }

/// Built-in settings for each experiment; a config file overrides any key.
inline Config default_config(const std::string& experiment) {
  Config c;
  c.experiment.name = experiment;
  c.fit.solver.node_limit = 20000;
  c.experiment.seeds = {1};
  auto case1 = [&] {
    c.data.source = "case1";
    c.branch = case1_branch_basis();
    c.leaf = case1_leaf_basis();
    c.fit.hp.n_b = 2;
  };
  if (experiment == "fig3") {
    case1();
    c.experiment.sizes = {20, 40, 60};
    c.experiment.seeds = {1, 2, 3};
  } else if (experiment == "error-map" || experiment == "case1") {
    case1();
    c.data.n = 60;
  } else if (experiment == "nb-sweep") {
    case1();
    c.data.n = 60;
    c.experiment.nb_values = {1, 2, 3, 4, 5};
    c.fit.solver.node_limit = 2000;
  } else if (experiment == "two-tank") {
    c.data.source = "two-tank";
    c.data.n = 80;
    c.branch = tank_branch_basis();
    c.leaf = tank_leaf_basis();
    c.fit.hp.n_b = 1;
    c.fit.hp.n_f = 2;
  } else if (experiment == "viscosity") {
    c.data.source = "viscosity";
    c.branch = viscosity_branch_basis();
    c.leaf = viscosity_leaf_basis();
    c.fit.hp.n_b = 1;
    c.experiment.sizes = {40, 100};
  } else if (experiment == "noise") {
    c.data.source = "viscosity";
    c.data.n = 40;
    c.branch = viscosity_branch_basis();
    c.leaf = viscosity_leaf_basis();
    c.fit.hp.n_b = 1;
    c.fit.hp.n_f = 2;
    c.experiment.sigmas = {0.0, 0.05, 0.1, 0.2, 0.4};
    c.experiment.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    c.fit.solver.node_limit = 2000;
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return c;
}

/// Applies an INI document on top of `base`. Unknown sections or keys are errors.
inline Config parse_config(std::istream& in, Config base = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Config c = std::move(base);
  auto& hp = c.fit.hp;
  auto& sv = c.fit.solver;
  auto& ex = c.experiment;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, std::map<std::string, Setter>> schema = {
      {"data",
       {{"source", [&](auto&, auto& v) { c.data.source = v; }},
        {"n", [&](auto& k, auto& v) { c.data.n = detail::parse_number<std::size_t>(k, v); }},
        {"seed", [&](auto& k, auto& v) { c.data.seed = detail::parse_number<std::uint64_t>(k, v); }},
        {"sigma", [&](auto& k, auto& v) { c.data.sigma = detail::parse_number<double>(k, v); }},
        {"path", [&](auto&, auto& v) { c.data.path = v; }},
        {"target", [&](auto&, auto& v) { c.data.target = v; }}}},
      {"basis",
       {{"branch", [&](auto&, auto& v) { c.branch = detail::split_list(v); }},
        {"leaf", [&](auto&, auto& v) { c.leaf = detail::split_list(v); }}}},
      {"hyperparams",
       {{"depth", [&](auto& k, auto& v) { hp.depth = detail::parse_number<int>(k, v); }},
        {"n_b", [&](auto& k, auto& v) { hp.n_b = detail::parse_optional_int(k, v); }},
        {"n_f", [&](auto& k, auto& v) { hp.n_f = detail::parse_optional_int(k, v); }},
        {"lambda_c", [&](auto& k, auto& v) { hp.lambda_c = detail::parse_number<double>(k, v); }},
        {"lambda_m", [&](auto& k, auto& v) { hp.lambda_m = detail::parse_number<double>(k, v); }},
        {"a_lb", [&](auto& k, auto& v) { hp.a_lb = detail::parse_number<double>(k, v); }},
        {"a_ub", [&](auto& k, auto& v) { hp.a_ub = detail::parse_number<double>(k, v); }},
        {"b_lb", [&](auto& k, auto& v) { hp.b_lb = detail::parse_number<double>(k, v); }},
        {"b_ub", [&](auto& k, auto& v) { hp.b_ub = detail::parse_number<double>(k, v); }},
        {"c_lb", [&](auto& k, auto& v) { hp.c_lb = detail::parse_number<double>(k, v); }},
        {"c_ub", [&](auto& k, auto& v) { hp.c_ub = detail::parse_number<double>(k, v); }},
        {"y_lb", [&](auto& k, auto& v) { hp.y_lb = detail::parse_number<double>(k, v); }},
        {"y_ub", [&](auto& k, auto& v) { hp.y_ub = detail::parse_number<double>(k, v); }},
        {"big_m", [&](auto& k, auto& v) { hp.big_m = detail::parse_number<double>(k, v); }},
        {"big_m_mode",
         [&](auto& k, auto& v) {
           if (v == "per-row") {
             hp.big_m_mode = BigMMode::kPerRow;
           } else if (v == "global") {
             hp.big_m_mode = BigMMode::kGlobal;
           } else {
             throw ConfigError("config key '" + k + "': expected per-row or global");
           }
         }},
        {"epsilon", [&](auto& k, auto& v) { hp.epsilon = detail::parse_number<double>(k, v); }}}},
      {"solver",
       {{"abs_gap", [&](auto& k, auto& v) { sv.abs_gap = detail::parse_number<double>(k, v); }},
        {"rel_gap", [&](auto& k, auto& v) { sv.rel_gap = detail::parse_number<double>(k, v); }},
        {"feas_tol", [&](auto& k, auto& v) { sv.feas_tol = detail::parse_number<double>(k, v); }},
        {"int_tol", [&](auto& k, auto& v) { sv.int_tol = detail::parse_number<double>(k, v); }},
        {"node_limit", [&](auto& k, auto& v) { sv.node_limit = detail::parse_number<std::int64_t>(k, v); }},
        {"time_limit", [&](auto& k, auto& v) { sv.time_limit = detail::parse_number<double>(k, v); }},
        {"seed", [&](auto& k, auto& v) { sv.seed = detail::parse_number<std::uint64_t>(k, v); }},
        {"branching",
         [&](auto& k, auto& v) {
           if (v == "priority") {
             sv.branching = BranchingRule::kStructuralPriority;
           } else if (v == "most-fractional") {
             sv.branching = BranchingRule::kMostFractional;
           } else {
             throw ConfigError("config key '" + k + "': expected priority or most-fractional");
           }
         }},
        {"selection",
         [&](auto& k, auto& v) {
           if (v == "best-bound") {
             sv.selection = NodeSelection::kBestBound;
           } else if (v == "depth-first") {
             sv.selection = NodeSelection::kDepthFirstDive;
           } else {
             throw ConfigError("config key '" + k + "': expected best-bound or depth-first");
           }
         }},
        {"warm_start", [&](auto& k, auto& v) { c.fit.warm_start = detail::parse_bool(k, v); }},
        {"polish", [&](auto& k, auto& v) { c.fit.polish = detail::parse_bool(k, v); }}}},
      {"experiment",
       {{"name", [&](auto&, auto& v) { ex.name = v; }},
        {"sizes", [&](auto& k, auto& v) { ex.sizes = detail::parse_numbers<std::size_t>(k, v); }},
        {"seeds", [&](auto& k, auto& v) { ex.seeds = detail::parse_numbers<std::uint64_t>(k, v); }},
        {"sigmas", [&](auto& k, auto& v) { ex.sigmas = detail::parse_numbers<double>(k, v); }},
        {"nb_values", [&](auto& k, auto& v) { ex.nb_values = detail::parse_numbers<int>(k, v); }},
        {"test_size", [&](auto& k, auto& v) { ex.test_size = detail::parse_number<std::size_t>(k, v); }},
        {"test_seed", [&](auto& k, auto& v) { ex.test_seed = detail::parse_number<std::uint64_t>(k, v); }},
        {"grid", [&](auto& k, auto& v) { ex.grid = detail::parse_number<int>(k, v); }},
        {"train_t_end", [&](auto& k, auto& v) { ex.train_t_end = detail::parse_number<double>(k, v); }},
        {"train_dt", [&](auto& k, auto& v) { ex.train_dt = detail::parse_number<double>(k, v); }},
        {"rollout_t_end", [&](auto& k, auto& v) { ex.rollout_t_end = detail::parse_number<double>(k, v); }},
        {"rollout_dt", [&](auto& k, auto& v) { ex.rollout_dt = detail::parse_number<double>(k, v); }}}},
  };
  for (const auto& [section, body] : tree) {
    const auto s = schema.find(section);
    if (s == schema.end()) throw ConfigError("config: unknown section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const auto f = s->second.find(key);
      if (f == s->second.end()) {
        throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      }
      f->second(section + "." + key, detail::trim(value.data()));
    }
  }
  return c;
}

inline Config load_config(const std::string& path, Config base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

/// Sanity checks shared by every driver.
inline void validate(const Config& c) {
  if (c.branch.empty()) throw ConfigError("config: [basis] branch is empty");
  if (c.leaf.empty()) throw ConfigError("config: [basis] leaf is empty");
  if (c.data.sigma < 0) throw ConfigError("config: data.sigma must be >= 0");
  try {
    c.fit.hp.validate();
    c.fit.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// ------------------------------------------------------------------- data

inline Trajectory tank_training_trajectory(const ExperimentSpec& ex) {
  return simulate_two_tank({0.2, 1.5}, default_training_schedule(), ex.train_t_end, ex.train_dt);
}

/// Training data described by `spec` (`sigma` applies to viscosity only).
inline Dataset make_dataset(const DataSpec& spec, const ExperimentSpec& ex = {}) {
  if (spec.source == "case1") return gen_case1(spec.n, spec.seed);
  if (spec.source == "viscosity") return gen_viscosity(spec.n, spec.seed, spec.sigma);
  if (spec.source == "two-tank") return tank_training_trajectory(ex).tank1_dataset(spec.n);
  if (spec.source == "csv") {
    if (spec.path.empty()) throw ConfigError("config: data.path is required for csv data");
    std::ifstream in(spec.path);
    if (!in) throw ConfigError("cannot open data file '" + spec.path + "'");
    return read_csv(in, spec.target);
  }
  throw ConfigError("config: unknown data source '" + spec.source + "'");
}

inline std::pair<BasisSet, BasisSet> make_bases(const Config& c, const Dataset& data) {
  try {
    return {BasisSet(c.branch, data.feature_names, BasisRole::kBranching),
            BasisSet(c.leaf, data.feature_names, BasisRole::kLeaf)};
  } catch (const ParseError& e) {
    throw ConfigError(std::string("config: basis: ") + e.what());
  }
}

// ------------------------------------------------------------------ truth

/// Ground truth of a two-regime generator: regime 1 iff sum a_k phi_k >= b.
struct RegimeTruth {
  std::vector<std::map<std::string, double>> leaves;  // per regime, basis text -> coefficient
  std::map<std::string, double> split_a;
  double split_b = 0.0;
  std::function<int(std::span<const double>)> regime;  // raw row in feature order
};

inline RegimeTruth truth_for(const std::string& source) {
  RegimeTruth t;
  if (source == "case1") {
    t.leaves = {{{"x1^2", 1.0}, {"x2^2", 1.0}}, {{"x1^2", 1.0}, {"x2", 1.0}}};
    t.split_a = {{"x1^2", 1.0}, {"x2^2", 1.0}};
    t.split_b = kCase1Radius2;
    t.regime = [](std::span<const double> r) { return case1_regime(r[0], r[1]); };
  } else if (source == "two-tank") {
    t.leaves = {{{"sqrt(abs(h1 - h2))", -kTankCv}, {"F1", 1.0}},
                {{"sqrt(abs(h1 - h2))", kTankCv}, {"F1", 1.0}}};
    t.split_a = {{"h1 - h2", -1.0}};
    t.split_b = 0.0;
    t.regime = [](std::span<const double> r) { return two_tank_regime(r[0], r[1]); };
  } else if (source == "viscosity") {
    const ViscosityLaw law;
    t.leaves = {{{"1", law.low_intercept()}, {"log10(M)", law.low_slope()}},
                {{"1", law.high_intercept()}, {"log10(M)", law.high_slope()}}};
    t.split_a = {{"log10(M)", 1.0}};
    t.split_b = law.log_mc();
    t.regime = [law](std::span<const double> r) { return law.regime(r[0]); };
  } else {
    throw ConfigError("no ground truth for data source '" + source + "'");
  }
  return t;
}

/// Lays out {text: coefficient} in basis order, matching texts structurally.
inline std::vector<double> coefficient_vector(const std::map<std::string, double>& terms,
                                              const BasisSet& basis) {
  std::vector<double> out(basis.size(), 0.0);
  for (const auto& [text, value] : terms) {
    const std::string canon = to_string(parse(text, basis.universe()));
    const auto it = std::find(basis.texts().begin(), basis.texts().end(), canon);
    if (it == basis.texts().end()) {
      throw ConfigError("basis has no member '" + text + "' needed by the ground truth");
    }
    out[static_cast<std::size_t>(it - basis.texts().begin())] = value;
  }
  return out;
}

// ---------------------------------------------------------------- metrics

inline double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("mae: length mismatch");
  if (pred.size() == 0) throw std::invalid_argument("mae: empty input");
  return (pred - truth).cwiseAbs().mean();
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("rmse: length mismatch");
  if (a.empty()) throw std::invalid_argument("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

/// RMSE of the first tank's level between a model rollout and the reference.
inline double rollout_rmse(const Trajectory& model, const Trajectory& reference) {
  if (model.size() != reference.size()) throw std::invalid_argument("rollout_rmse: length mismatch");
  return rmse(model.h1, reference.h1);
}

/// Regime -> leaf node (0 when no leaf claims the regime). Each leaf votes for
/// the majority true regime of its routed rows (ties to the lower regime);
/// a regime takes the voting leaf holding most of its rows, ties to the lower
/// node id.
inline std::vector<int> match_leaves(const std::vector<int>& routing, const std::vector<int>& regimes,
                                     int num_regimes) {
  if (routing.size() != regimes.size()) throw std::invalid_argument("match_leaves: length mismatch");
  std::map<int, std::vector<int>> counts;  // leaf -> per-regime counts
  for (std::size_t i = 0; i < routing.size(); ++i) {
    auto& c = counts[routing[i]];
    c.resize(static_cast<std::size_t>(num_regimes), 0);
    const int r = regimes[i];
    if (r < 0 || r >= num_regimes) throw std::invalid_argument("match_leaves: regime out of range");
    ++c[static_cast<std::size_t>(r)];
  }
  std::vector<int> out(static_cast<std::size_t>(num_regimes), 0);
  std::vector<int> best(static_cast<std::size_t>(num_regimes), -1);
  for (const auto& [leaf, c] : counts) {
    const auto vote = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
    if (c[vote] > best[vote]) {
      best[vote] = c[vote];
      out[vote] = leaf;
    }
  }
  return out;
}

/// sqrt of the summed squared differences over all regimes.
inline double coeff_l2(const std::vector<std::vector<double>>& learned,
                       const std::vector<std::vector<double>>& truth) {
  if (learned.size() != truth.size()) throw std::invalid_argument("coeff_l2: regime count mismatch");
  double s = 0.0;
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (learned[r].size() != truth[r].size()) throw std::invalid_argument("coeff_l2: length mismatch");
    for (std::size_t k = 0; k < truth[r].size(); ++k) {
      s += (learned[r][k] - truth[r][k]) * (learned[r][k] - truth[r][k]);
    }
  }
  return std::sqrt(s);
}

/// [a, b] scaled by 1 / max|a|, negated when `flip`.
inline std::vector<double> normalized_split(const std::vector<double>& a, double b, bool flip) {
  const double scale = ::symtree::detail::largest_abs(a);
  std::vector<double> out(a);
  out.push_back(b);
  if (scale == 0.0) return out;
  for (double& v : out) v = (flip ? -v : v) / scale;
  return out;
}

/// How a fitted depth-one tree lines up with the generator's regimes.
struct RegimeComparison {
  std::vector<int> leaf_of_regime;
  std::vector<std::vector<double>> learned_leaves;  // per regime, zeros if unmatched
  std::vector<std::vector<double>> true_leaves;
  std::vector<double> learned_split;  // normalized, regime 1 on the ">=" side
  std::vector<double> true_split;
  double leaf_l2 = 0.0;
  double split_l2 = 0.0;
  bool pattern_ok = false;  // same nonzero coefficients in every matched leaf
};

inline RegimeComparison compare_to_truth(const SymbolicTree& tree, const std::vector<int>& routing,
                                         const Dataset& train, const RegimeTruth& truth) {
  RegimeComparison out;
  std::vector<int> regimes;
  for (std::size_t i = 0; i < train.rows(); ++i) regimes.push_back(truth.regime(train.row(i)));
  const int nr = static_cast<int>(truth.leaves.size());
  out.leaf_of_regime = match_leaves(routing, regimes, nr);
  out.pattern_ok = true;
  for (int r = 0; r < nr; ++r) {
    out.true_leaves.push_back(coefficient_vector(truth.leaves[static_cast<std::size_t>(r)], tree.leaf_basis()));
    const int leaf = out.leaf_of_regime[static_cast<std::size_t>(r)];
    std::vector<double> c(tree.leaf_basis().size(), 0.0);
    if (leaf > 0) c = tree.node(leaf).c;
    out.learned_leaves.push_back(c);
    const double scale = std::max(1.0, ::symtree::detail::largest_abs(c));
    for (std::size_t k = 0; k < c.size(); ++k) {
      const bool learned_on = std::fabs(c[k]) > 1e-9 * scale;
      const bool true_on = out.true_leaves.back()[k] != 0.0;
      if (learned_on != true_on || leaf == 0) out.pattern_ok = false;
    }
  }
  out.leaf_l2 = coeff_l2(out.learned_leaves, out.true_leaves);
  // Regime 1 should sit on the right (g >= b) side of the root.
  const bool flip = nr > 1 && out.leaf_of_regime[1] > 0 && ::symtree::detail::in_subtree(out.leaf_of_regime[1], 2);
  out.learned_split = normalized_split(tree.node(1).a, tree.node(1).b, flip);
  out.true_split = normalized_split(coefficient_vector(truth.split_a, tree.branch_basis()), truth.split_b, false);
  double s = 0.0;
  for (std::size_t k = 0; k < out.true_split.size(); ++k) {
    s += (out.learned_split[k] - out.true_split[k]) * (out.learned_split[k] - out.true_split[k]);
  }
  out.split_l2 = std::sqrt(s);
  return out;
}

// ------------------------------------------------------------- invariants

/// Structural checks on a fitted model; returns one message per failure.
inline std::vector<std::string> check_invariants(const FitResult& fit, const Dataset& train) {
  std::vector<std::string> bad;
  if (!fit.has_tree()) {
    bad.push_back("no tree");
    return bad;
  }
  const auto& br = fit.problem;
  const auto& x = fit.assignment;
  const auto& tree = fit.tree();
  const auto& sol = *fit.solution;
  const int nn = br.nodes.count();
  const int nd = static_cast<int>(train.rows());

  // Routing: solver routing equals inference routing, one active leaf per row.
  const auto leaves = tree.predict_leaves(train);
  for (int i = 0; i < nd; ++i) {
    if (leaves[static_cast<std::size_t>(i)] != sol.routing[static_cast<std::size_t>(i)]) {
      bad.push_back("row " + std::to_string(i) + " routed to " +
                    std::to_string(sol.routing[static_cast<std::size_t>(i)]) + " by the solver but to " +
                    std::to_string(leaves[static_cast<std::size_t>(i)]) + " by inference");
      break;
    }
    int on = 0;
    for (int n = 1; n <= nn; ++n) on += x[br.map.z[i][n]] > 0.5 ? 1 : 0;
    if (on != 1) {
      bad.push_back("row " + std::to_string(i) + " has " + std::to_string(on) + " routing indicators set");
      break;
    }
  }

  // Linearization: delta = yhat * z.
  for (int i = 0; i < nd && bad.size() < 8; ++i) {
    for (int n = 1; n <= nn; ++n) {
      const VarId dv = br.map.delta[i][n];
      if (!br.model.valid(dv)) continue;
      const double yh = x[br.map.yhat[i][n]];
      const double z = std::round(x[br.map.z[i][n]]);
      if (std::fabs(x[dv] - yh * z) > 1e-6 * std::max(1.0, std::fabs(yh))) {
        bad.push_back("delta != yhat*z at row " + std::to_string(i) + " node " + std::to_string(n));
        break;
      }
    }
  }

  // With zero complexity weights the objective is the training MAE.
  if (br.hp.lambda_c == 0.0 && br.hp.lambda_m == 0.0) {
    const double m = mae(tree.predict(train), train.y);
    if (std::fabs(m - x.objective) > 1e-6 * std::max(1.0, std::fabs(m))) {
      bad.push_back("objective " + format_g17(x.objective) + " differs from training MAE " + format_g17(m));
    }
  }

  // Positive rescaling of every split leaves the routing unchanged.
  for (double s : {0.5, 2.5}) {
    std::vector<TreeNode> nodes;
    for (int n = 1; n <= tree.num_nodes(); ++n) {
      TreeNode t = tree.node(n);
      if (t.kind == NodeKind::kBranch) {
        for (double& a : t.a) a *= s;
        t.b *= s;
      }
      nodes.push_back(std::move(t));
    }
    const SymbolicTree scaled(tree.depth(), tree.branch_basis(), tree.leaf_basis(), std::move(nodes));
    if (scaled.predict_leaves(train) != leaves) {
      bad.push_back("split rescaling by " + format_g17(s) + " changes the routing");
    }
  }

  // Serialization round trip.
  const SymbolicTree back = deserialize_text(serialize_text(tree));
  if (serialize_text(back) != serialize_text(tree) || to_text(back) != to_text(tree) ||
      back.predict(train) != tree.predict(train)) {
    bad.push_back("serialize/deserialize round trip changed the tree");
  }
  return bad;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

// ------------------------------------------------------------------ tables

/// Plain CSV table; every cell is preformatted text.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw std::logic_error("table row has the wrong width");
    rows.push_back(std::move(row));
  }
  void write(std::ostream& out) const {
    auto cell = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    };
    for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << cell(columns[k]);
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << cell(r[k]);
      out << '\n';
    }
  }
  void write_file(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    write(out);
  }
};

inline std::string num(double v) { return format_g17(v); }

/// One fitted model plus what the drivers report about it.
struct FitRecord {
  FitResult fit;
  std::vector<std::string> invariant_failures;
  double seconds = 0.0;

  bool limited() const {
    return fit.status() == SolveStatus::kLimitReached || fit.status() == SolveStatus::kFeasibleWithGap;
  }
  std::string status() const { return to_string(fit.status()); }
};

inline FitRecord fit_and_check(const Dataset& train, const BasisSet& kb, const BasisSet& kf,
                               const FitOptions& opt) {
  FitRecord r;
  const auto t0 = std::chrono::steady_clock::now();
  r.fit = fit_tree(train, kb, kf, opt);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.invariant_failures = check_invariants(r.fit, train);
  return r;
}

// ------------------------------------------------------------------- fig3

struct Fig3Result {
  Table runs;     // n, seed, method, test_mae, status
  Table medians;  // n, tree, sparse, linear_tree, constant_tree
  std::map<std::size_t, std::map<std::string, double>> median_mae;
  std::vector<FitRecord> fits;
  bool ordering_holds = false;      // tree < sparse < linear <= constant at every size
  bool tree_nonincreasing = false;  // median tree MAE never rises with size
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline const std::vector<std::string>& fig3_methods() {
  static const std::vector<std::string> m{"symbolic_tree", "sparse", "linear_tree", "constant_tree"};
  return m;
}

/// Minimum leaf size of the linear-leaf baseline: a tenth of the data, at least 2.
inline std::size_t linear_tree_min_leaf(std::size_t n) {
  return std::max<std::size_t>(2, (n + 9) / 10);
}

inline Fig3Result run_fig3(const Config& c, std::ostream* log = nullptr) {
  validate(c);
  Fig3Result out;
  out.runs.columns = {"n", "seed", "method", "test_mae", "status"};
  out.medians.columns = {"n", "symbolic_tree", "sparse", "linear_tree", "constant_tree"};
  const Dataset test = gen_case1(c.experiment.test_size, c.experiment.test_seed);
  std::map<std::size_t, std::map<std::string, std::vector<double>>> all;
  for (std::size_t n : c.experiment.sizes) {
    for (std::uint64_t seed : c.experiment.seeds) {
      DataSpec spec = c.data;
      spec.n = n;
      spec.seed = seed;
      const Dataset train = make_dataset(spec, c.experiment);
      const auto [kb, kf] = make_bases(c, train);
      FitRecord rec = fit_and_check(train, kb, kf, c.fit);
      const double tree_mae = rec.fit.has_tree() ? mae(rec.fit.tree().predict(test), test.y) : std::nan("");
      const SparseModel sparse = fit_sparse(train, kf);
      const GreedyTree lin = fit_greedy_tree(train, c.fit.hp.depth, LeafModel::kLinear, linear_tree_min_leaf(n));
      const GreedyTree cst = fit_greedy_tree(train, c.fit.hp.depth, LeafModel::kConstant, 1);
      const std::map<std::string, std::pair<double, std::string>> m = {
          {"symbolic_tree", {tree_mae, rec.status()}},
          {"sparse", {mae(sparse.predict(test), test.y), "optimal"}},
          {"linear_tree", {mae(lin.predict(test), test.y), "greedy"}},
          {"constant_tree", {mae(cst.predict(test), test.y), "greedy"}},
      };
      for (const auto& name : fig3_methods()) {
        const auto& [v, st] = m.at(name);
        out.runs.add({std::to_string(n), std::to_string(seed), name, num(v), st});
        all[n][name].push_back(v);
      }
      if (log) {
        *log << "fig3 n=" << n << " seed=" << seed << " tree=" << tree_mae << " (" << rec.status()
             << ", " << rec.seconds << " s)\n";
      }
      out.fits.push_back(std::move(rec));
    }
  }
  out.ordering_holds = true;
  out.tree_nonincreasing = true;
  double prev = kInf;
  for (const auto& [n, methods] : all) {
    std::vector<std::string> row{std::to_string(n)};
    for (const auto& name : fig3_methods()) {
      out.median_mae[n][name] = median(methods.at(name));
      row.push_back(num(out.median_mae[n][name]));
    }
    out.medians.add(row);
    const auto& md = out.median_mae[n];
    if (!(md.at("symbolic_tree") < md.at("sparse") && md.at("sparse") < md.at("linear_tree") &&
          md.at("linear_tree") <= md.at("constant_tree"))) {
      out.ordering_holds = false;
    }
    if (md.at("symbolic_tree") > prev) out.tree_nonincreasing = false;
    prev = md.at("symbolic_tree");
  }
  return out;
}

// -------------------------------------------------------------- error map

struct ErrorMapResult {
  Table grid;  // x1, x2, distance, true_regime, learned_regime, per-method |error|
  FitRecord fit;
  bool zero_where_regimes_agree = false;
  bool max_error_in_mismatch = false;
};

inline ErrorMapResult run_error_map(const Config& c, std::ostream* log = nullptr) {
  validate(c);
  ErrorMapResult out;
  const Dataset train = make_dataset(c.data, c.experiment);
  const auto [kb, kf] = make_bases(c, train);
  out.fit = fit_and_check(train, kb, kf, c.fit);
  if (!out.fit.fit.has_tree()) throw std::runtime_error("error map: solver returned no tree");
  const auto& tree = out.fit.fit.tree();
  const RegimeTruth truth = truth_for("case1");
  const auto cmp = compare_to_truth(tree, out.fit.fit.solution->routing, train, truth);
  std::map<int, int> regime_of_leaf;
  for (int r = 0; r < static_cast<int>(cmp.leaf_of_regime.size()); ++r) {
    if (cmp.leaf_of_regime[static_cast<std::size_t>(r)] > 0) regime_of_leaf[cmp.leaf_of_regime[static_cast<std::size_t>(r)]] = r;
  }
  const SparseModel sparse = fit_sparse(train, kf);
  const GreedyTree lin = fit_greedy_tree(train, c.fit.hp.depth, LeafModel::kLinear, linear_tree_min_leaf(train.rows()));
  const GreedyTree cst = fit_greedy_tree(train, c.fit.hp.depth, LeafModel::kConstant, 1);
  const Dataset grid = case1_grid(c.experiment.grid);
  const auto tree_pred = tree.predict(grid);
  const auto tree_leaf = tree.predict_leaves(grid);
  const auto sparse_pred = sparse.predict(grid);
  const auto lin_pred = lin.predict(grid);
  const auto cst_pred = cst.predict(grid);
  out.grid.columns = {"x1", "x2", "distance", "true_regime", "learned_regime", "err_symbolic_tree",
                      "err_sparse", "err_linear_tree", "err_constant_tree"};
  out.zero_where_regimes_agree = true;
  double max_err = -1.0;
  bool max_in_mismatch = false;
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double x1 = grid.x(ii, 0), x2 = grid.x(ii, 1);
    const int tr = case1_regime(x1, x2);
    const auto it = regime_of_leaf.find(tree_leaf[i]);
    const int lr = it == regime_of_leaf.end() ? -1 : it->second;
    const double e = std::fabs(tree_pred[ii] - grid.y[ii]);
    if (tr == lr && e > 1e-6) out.zero_where_regimes_agree = false;
    if (e > max_err) {
      max_err = e;
      max_in_mismatch = tr != lr;
    }
    out.grid.add({num(x1), num(x2), num(std::hypot(x1, x2)), std::to_string(tr), std::to_string(lr), num(e),
                  num(std::fabs(sparse_pred[ii] - grid.y[ii])), num(std::fabs(lin_pred[ii] - grid.y[ii])),
                  num(std::fabs(cst_pred[ii] - grid.y[ii]))});
  }
  out.max_error_in_mismatch = max_err <= 1e-6 || max_in_mismatch;
  if (log) *log << "error-map: " << to_text(tree) << " (" << out.fit.status() << ")\n";
  return out;
}

// --------------------------------------------------------------- N_B sweep

struct NbSweepResult {
  Table runs;  // n_b, test_mae, train_objective, status, nodes, model
  std::map<int, double> test_mae;
  std::vector<FitRecord> fits;
  int argmin = 0;  // ties to the smaller N_B
};

inline NbSweepResult run_nb_sweep(const Config& c, std::ostream* log = nullptr) {
  validate(c);
  NbSweepResult out;
  out.runs.columns = {"n_b", "test_mae", "train_objective", "status", "nodes", "model"};
  const Dataset train = make_dataset(c.data, c.experiment);
  const Dataset test = gen_case1(c.experiment.test_size, c.experiment.test_seed);
  const auto [kb, kf] = make_bases(c, train);
  double best = kInf;
  for (int nb : c.experiment.nb_values) {
    FitOptions opt = c.fit;
    opt.hp.n_b = nb;
    FitRecord rec = fit_and_check(train, kb, kf, opt);
    const double m = rec.fit.has_tree() ? mae(rec.fit.tree().predict(test), test.y) : std::nan("");
    out.test_mae[nb] = m;
    if (m < best) {
      best = m;
      out.argmin = nb;
    }
    out.runs.add({std::to_string(nb), num(m), num(rec.fit.assignment.objective), rec.status(),
                  std::to_string(rec.fit.stats.nodes), rec.fit.has_tree() ? to_text(rec.fit.tree()) : ""});
    if (log) *log << "nb-sweep N_B=" << nb << " mae=" << m << " (" << rec.status() << ", " << rec.seconds << " s)\n";
    out.fits.push_back(std::move(rec));
  }
  return out;
}

// --------------------------------------------------------------- two tank

struct TwoTankResult {
  FitRecord fit;
  SparseModel sparse;
  RegimeComparison comparison;
  std::string split_feature;
  double threshold = std::nan("");  // on the split's single basis function
  double rmse_tree = std::nan("");
  double rmse_sparse = std::nan("");
  Table rollout;       // t, h1_true, h2_true, h1_tree, h1_sparse
  Table coefficients;  // regime, basis, learned, true
};

inline TwoTankResult run_two_tank(const Config& c, std::ostream* log = nullptr) {
  validate(c);
  TwoTankResult out;
  const Trajectory train_traj = tank_training_trajectory(c.experiment);
  const Dataset train = train_traj.tank1_dataset(c.data.n);
  const auto [kb, kf] = make_bases(c, train);
  out.fit = fit_and_check(train, kb, kf, c.fit);
  if (!out.fit.fit.has_tree()) throw std::runtime_error("two-tank: solver returned no tree");
  const SymbolicTree& tree = out.fit.fit.tree();
  out.sparse = fit_sparse(train, kf);
  out.comparison = compare_to_truth(tree, out.fit.fit.solution->routing, train, truth_for("two-tank"));

  const auto& root = tree.node(1);
  int active = 0;
  for (std::size_t k = 0; k < root.a.size(); ++k) {
    if (root.a[k] != 0.0) {
      ++active;
      out.split_feature = kb.texts()[k];
      out.threshold = root.b / root.a[k];
    }
  }
  if (active != 1) {
    out.split_feature.clear();
    out.threshold = std::nan("");
  }

  out.coefficients.columns = {"regime", "basis", "learned", "true"};
  for (std::size_t r = 0; r < out.comparison.true_leaves.size(); ++r) {
    for (std::size_t k = 0; k < kf.size(); ++k) {
      out.coefficients.add({std::to_string(r), kf.texts()[k], num(out.comparison.learned_leaves[r][k]),
                            num(out.comparison.true_leaves[r][k])});
    }
  }

  // Roll out from a different initial state under the test schedule.
  const std::pair<double, double> init{0.1, 1.2};
  const FlowSchedule sched = default_test_schedule();
  const double te = c.experiment.rollout_t_end, dt = c.experiment.rollout_dt;
  const Trajectory truth = simulate_two_tank(init, sched, te, dt);
  auto model_rhs = [&](auto&& predict) {
    return [&, predict](double h1, double h2, double f1, double f2, double) {
      const std::vector<double> row{h1, h2, f1, f2};
      return predict(std::span<const double>(row));
    };
  };
  // Rows are in the training feature order, which is the tree's universe.
  auto tree_predict = [&](std::span<const double> row) { return tree.predict(row); };
  auto sparse_predict = [&](std::span<const double> row) {
    double v = 0.0;
    for (std::size_t k = 0; k < kf.size(); ++k) v += out.sparse.coef[k] * kf.eval(k, row);
    return v;
  };
  const Trajectory tree_traj = simulate_two_tank(init, sched, te, dt, model_rhs(tree_predict), LevelPolicy::kClampAtZero);
  const Trajectory sparse_traj =
      simulate_two_tank(init, sched, te, dt, model_rhs(sparse_predict), LevelPolicy::kClampAtZero);
  out.rmse_tree = rollout_rmse(tree_traj, truth);
  out.rmse_sparse = rollout_rmse(sparse_traj, truth);
  out.rollout.columns = {"t", "h1_true", "h2_true", "h1_symbolic_tree", "h1_sparse"};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out.rollout.add({num(truth.t[i]), num(truth.h1[i]), num(truth.h2[i]), num(tree_traj.h1[i]), num(sparse_traj.h1[i])});
  }
  if (log) {
    *log << "two-tank: " << to_text(tree) << " (" << out.fit.status() << ", " << out.fit.seconds << " s)\n"
         << "two-tank: rollout RMSE tree " << out.rmse_tree << ", sparse " << out.rmse_sparse << "\n";
  }
  return out;
}

// -------------------------------------------------------------- viscosity

/// log10 M at which the root routing flips, by bisection over (3, 6). NaN if
/// the routing is the same at both ends.
inline double viscosity_threshold(const SymbolicTree& tree) {
  auto leaf_at = [&](double t) {
    const double m = std::pow(10.0, t);
    return tree.predict_leaf(std::span<const double>(&m, 1));
  };
  double lo = 3.0, hi = 6.0;
  const int left = leaf_at(lo);
  if (leaf_at(hi) == left) return std::nan("");
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (leaf_at(mid) == left ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct ViscosityRun {
  std::size_t n = 0;
  FitRecord fit;
  RegimeComparison comparison;
  double low_slope = std::nan(""), low_intercept = std::nan("");
  double high_slope = std::nan(""), high_intercept = std::nan("");
  double threshold = std::nan("");
};

struct ViscosityResult {
  std::vector<ViscosityRun> runs;
  Table table;  // n, low_slope, low_intercept, high_slope, high_intercept, threshold, status, model
};

inline ViscosityResult run_viscosity(const Config& c, std::ostream* log = nullptr) {
  validate(c);
  ViscosityResult out;
  out.table.columns = {"n", "seed", "low_slope", "low_intercept", "high_slope", "high_intercept",
                       "threshold_log10M", "status", "model"};
  const RegimeTruth truth = truth_for("viscosity");
  const std::vector<std::size_t> sizes = c.experiment.sizes.empty() ? std::vector<std::size_t>{c.data.n}
                                                                    : c.experiment.sizes;
  for (std::size_t n : sizes) {
    ViscosityRun run;
    run.n = n;
    DataSpec spec = c.data;
    spec.n = n;
    const Dataset train = make_dataset(spec, c.experiment);
    const auto [kb, kf] = make_bases(c, train);
    run.fit = fit_and_check(train, kb, kf, c.fit);
    if (run.fit.fit.has_tree()) {
      const auto& tree = run.fit.fit.tree();
      run.comparison = compare_to_truth(tree, run.fit.fit.solution->routing, train, truth);
      const auto one = coefficient_vector({{"1", 1.0}}, kf);
      const auto lg = coefficient_vector({{"log10(M)", 1.0}}, kf);
      auto pick = [&](const std::vector<double>& c, const std::vector<double>& unit) {
        for (std::size_t k = 0; k < unit.size(); ++k) {
          if (unit[k] != 0.0) return c[k];
        }
        return std::nan("");
      };
      run.low_intercept = pick(run.comparison.learned_leaves[0], one);
      run.low_slope = pick(run.comparison.learned_leaves[0], lg);
      run.high_intercept = pick(run.comparison.learned_leaves[1], one);
      run.high_slope = pick(run.comparison.learned_leaves[1], lg);
      run.threshold = viscosity_threshold(tree);
    }
    out.table.add({std::to_string(n), std::to_string(spec.seed), num(run.low_slope), num(run.low_intercept),
                   num(run.high_slope), num(run.high_intercept), num(run.threshold), run.fit.status(),
                   run.fit.fit.has_tree() ? to_text(run.fit.fit.tree()) : ""});
    if (log) {
      *log << "viscosity n=" << n << ": "
           << (run.fit.fit.has_tree() ? to_text(run.fit.fit.tree()) : std::string("no tree"))
           << " threshold " << run.threshold << " (" << run.fit.status() << ", " << run.fit.seconds << " s)\n";
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

// ------------------------------------------------------------------ noise

struct NoiseResult {
  Table runs;     // sigma, seed, leaf_l2, split_l2, pattern_ok, status, model
  Table summary;  // sigma, mean_leaf_l2, mean_split_l2, pattern_preserved, runs, limited
  std::map<double, double> mean_leaf_l2;
  std::map<double, double> mean_split_l2;
  std::map<double, int> pattern_count;
  std::map<double, int> run_count;
  std::vector<FitRecord> fits;
};

inline NoiseResult run_noise(const Config& c, std::ostream* log = nullptr) {
  validate(c);
  NoiseResult out;
  out.runs.columns = {"sigma", "seed", "leaf_l2", "split_l2", "pattern_ok", "status", "model"};
  out.summary.columns = {"sigma", "mean_leaf_l2", "mean_split_l2", "pattern_preserved", "runs", "limited"};
  const RegimeTruth truth = truth_for("viscosity");
  for (double sigma : c.experiment.sigmas) {
    double leaf_sum = 0.0, split_sum = 0.0;
    int limited = 0;
    for (std::uint64_t seed : c.experiment.seeds) {
      DataSpec spec = c.data;
      spec.sigma = sigma;
      spec.seed = seed;
      const Dataset train = make_dataset(spec, c.experiment);
      const auto [kb, kf] = make_bases(c, train);
      FitRecord rec = fit_and_check(train, kb, kf, c.fit);
      RegimeComparison cmp;
      if (rec.fit.has_tree()) cmp = compare_to_truth(rec.fit.tree(), rec.fit.solution->routing, train, truth);
      leaf_sum += cmp.leaf_l2;
      split_sum += cmp.split_l2;
      out.pattern_count[sigma] += cmp.pattern_ok ? 1 : 0;
      ++out.run_count[sigma];
      limited += rec.limited() ? 1 : 0;
      out.runs.add({num(sigma), std::to_string(seed), num(cmp.leaf_l2), num(cmp.split_l2),
                    cmp.pattern_ok ? "1" : "0", rec.status(),
                    rec.fit.has_tree() ? to_text(rec.fit.tree()) : ""});
      if (log) {
        *log << "noise sigma=" << sigma << " seed=" << seed << " leaf_l2=" << cmp.leaf_l2
             << " pattern=" << cmp.pattern_ok << " (" << rec.status() << ", " << rec.seconds << " s)\n";
      }
      out.fits.push_back(std::move(rec));
    }
    const double runs = static_cast<double>(c.experiment.seeds.size());
    out.mean_leaf_l2[sigma] = leaf_sum / runs;
    out.mean_split_l2[sigma] = split_sum / runs;
    out.summary.add({num(sigma), num(out.mean_leaf_l2[sigma]), num(out.mean_split_l2[sigma]),
                     std::to_string(out.pattern_count[sigma]), std::to_string(out.run_count[sigma]),
                     std::to_string(limited)});
  }
  return out;
}

// ---------------------------------------------------------------- dispatch

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"fig3", "error-map", "nb-sweep", "two-tank", "viscosity", "noise"};
  return names;
}

/// Runs one named experiment and writes its CSV files into `dir`.
inline void run_experiment(const Config& c, const std::filesystem::path& dir, std::ostream* log = nullptr) {
  std::filesystem::create_directories(dir);
  const std::string& name = c.experiment.name;
  if (name == "fig3") {
    const auto r = run_fig3(c, log);
    r.runs.write_file(dir / "fig3_runs.csv");
    r.medians.write_file(dir / "fig3_median_mae.csv");
  } else if (name == "error-map") {
    run_error_map(c, log).grid.write_file(dir / "error_map.csv");
  } else if (name == "nb-sweep") {
    run_nb_sweep(c, log).runs.write_file(dir / "nb_sweep.csv");
  } else if (name == "two-tank") {
    const auto r = run_two_tank(c, log);
    r.rollout.write_file(dir / "two_tank_rollout.csv");
    r.coefficients.write_file(dir / "two_tank_coefficients.csv");
    Table s;
    s.columns = {"split_feature", "threshold", "rmse_symbolic_tree", "rmse_sparse", "status", "model", "sparse_model"};
    s.add({r.split_feature, num(r.threshold), num(r.rmse_tree), num(r.rmse_sparse), r.fit.status(),
           to_text(r.fit.fit.tree()), r.sparse.to_text()});
    s.write_file(dir / "two_tank_summary.csv");
  } else if (name == "viscosity") {
    run_viscosity(c, log).table.write_file(dir / "viscosity.csv");
  } else if (name == "noise") {
    const auto r = run_noise(c, log);
    r.runs.write_file(dir / "noise_runs.csv");
    r.summary.write_file(dir / "noise_summary.csv");
  } else {
    throw ConfigError("unknown experiment '" + name + "'");
  }
}

}  // namespace symtree::harness
