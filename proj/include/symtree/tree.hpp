#pragma once

// The learned model as a standalone object: inference, text rendering and a
// JSON model document.

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "symtree/dataset.hpp"
#include "symtree/expr.hpp"

namespace symtree {

enum class NodeKind { kBranch, kLeaf, kInactive };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::kBranch: return "branch";
    case NodeKind::kLeaf: return "leaf";
    case NodeKind::kInactive: return "inactive";
  }
  return "?";
}

struct TreeNode {
  NodeKind kind = NodeKind::kInactive;
  std::vector<double> a;  // split coefficients over the branching basis
  double b = 0.0;         // threshold
  std::vector<double> c;  // leaf coefficients over the leaf basis
};

class TreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Nodes are numbered 1..2^(D+1)-1; node n has children 2n and 2n+1. A point
/// goes left iff sum_k a_nk phi_k(x) < b_n.
class SymbolicTree {
 public:
  SymbolicTree(int depth, BasisSet branch, BasisSet leaf, std::vector<TreeNode> nodes)
      : depth_(depth), branch_(std::move(branch)), leaf_(std::move(leaf)),
        nodes_(std::move(nodes)) {
    validate();
  }

  int depth() const { return depth_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  const TreeNode& node(int n) const { return nodes_.at(static_cast<std::size_t>(n - 1)); }
  const BasisSet& branch_basis() const { return branch_; }
  const BasisSet& leaf_basis() const { return leaf_; }
  const std::vector<std::string>& variables() const { return branch_.universe(); }

  std::vector<int> leaves() const {
    std::vector<int> out;
    for (int n = 1; n <= num_nodes(); ++n) {
      if (node(n).kind == NodeKind::kLeaf) out.push_back(n);
    }
    return out;
  }

  /// g_n(x) for a branch node; `row` is in variables() order.
  double split_value(int n, std::span<const double> row) const {
    const auto& nd = node(n);
    double g = 0.0;
    for (std::size_t k = 0; k < branch_.size(); ++k) {
      if (nd.a[k] != 0.0) g += nd.a[k] * branch_.eval(k, row);
    }
    return g;
  }

  int predict_leaf(std::span<const double> row) const {
    int n = 1;
    while (node(n).kind == NodeKind::kBranch) {
      n = split_value(n, row) < node(n).b ? 2 * n : 2 * n + 1;
    }
    return n;
  }

  double leaf_value(int n, std::span<const double> row) const {
    const auto& nd = node(n);
    double y = 0.0;
    for (std::size_t k = 0; k < leaf_.size(); ++k) {
      if (nd.c[k] != 0.0) y += nd.c[k] * leaf_.eval(k, row);
    }
    return y;
  }

  double predict(std::span<const double> row) const {
    return leaf_value(predict_leaf(row), row);
  }

  /// Rows of `data` are matched to the tree's variables by name.
  Eigen::VectorXd predict(const Dataset& data) const {
    const auto perm = column_map(data);
    Eigen::VectorXd out(static_cast<Eigen::Index>(data.rows()));
    std::vector<double> row(perm.size());
    for (std::size_t i = 0; i < data.rows(); ++i) {
      for (std::size_t v = 0; v < perm.size(); ++v) {
        row[v] = data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[v]));
      }
      out[static_cast<Eigen::Index>(i)] = predict(row);
    }
    return out;
  }

  std::vector<int> predict_leaves(const Dataset& data) const {
    const auto perm = column_map(data);
    std::vector<int> out(data.rows());
    std::vector<double> row(perm.size());
    for (std::size_t i = 0; i < data.rows(); ++i) {
      for (std::size_t v = 0; v < perm.size(); ++v) {
        row[v] = data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[v]));
      }
      out[i] = predict_leaf(row);
    }
    return out;
  }

 private:
  std::vector<std::size_t> column_map(const Dataset& data) const {
    std::vector<std::size_t> perm;
    for (const auto& name : variables()) {
      auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
      if (it == data.feature_names.end()) {
        throw std::invalid_argument("dataset has no column '" + name + "'");
      }
      perm.push_back(static_cast<std::size_t>(it - data.feature_names.begin()));
    }
    return perm;
  }

  void validate() const {
    if (depth_ < 1) throw TreeError("depth must be at least 1");
    if (nodes_.size() != (std::size_t{1} << (depth_ + 1)) - 1) {
      throw TreeError("expected " + std::to_string((1 << (depth_ + 1)) - 1) + " nodes");
    }
    if (branch_.universe() != leaf_.universe()) {
      throw TreeError("branching and leaf bases use different variables");
    }
    if (nodes_[0].kind != NodeKind::kBranch) throw TreeError("root must be a branch node");
    const int first_terminal = 1 << depth_;
    bool any_leaf = false;
    for (int n = 1; n <= num_nodes(); ++n) {
      const auto& nd = node(n);
      const std::string where = "node " + std::to_string(n);
      if (nd.a.size() != branch_.size()) throw TreeError(where + ": split coefficient count");
      if (nd.c.size() != leaf_.size()) throw TreeError(where + ": leaf coefficient count");
      if (!std::isfinite(nd.b)) throw TreeError(where + ": non-finite threshold");
      for (double v : nd.a) if (!std::isfinite(v)) throw TreeError(where + ": non-finite a");
      for (double v : nd.c) if (!std::isfinite(v)) throw TreeError(where + ": non-finite c");
      if (nd.kind == NodeKind::kBranch && n >= first_terminal) {
        throw TreeError(where + ": terminal node cannot branch");
      }
      if (n > 1) {
        const bool parent_branches = node(n / 2).kind == NodeKind::kBranch;
        if (parent_branches && nd.kind == NodeKind::kInactive) {
          throw TreeError(where + ": child of a branch node must be active");
        }
        if (!parent_branches && nd.kind != NodeKind::kInactive) {
          throw TreeError(where + ": child of a non-branch node must be inactive");
        }
      }
      any_leaf = any_leaf || nd.kind == NodeKind::kLeaf;
    }
    if (!any_leaf) throw TreeError("tree has no leaf");
  }

  int depth_;
  BasisSet branch_;
  BasisSet leaf_;
  std::vector<TreeNode> nodes_;
};

namespace detail {

inline double largest_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// "g >= b" with the split normalized for reading.
inline std::string condition_text(const SymbolicTree& t, int n, int digits) {
  const auto& nd = t.node(n);
  const double scale = largest_abs(nd.a);
  if (scale == 0.0) return "0 >= " + format_sig(nd.b, digits);
  int active = 0;
  std::size_t only = 0;
  for (std::size_t k = 0; k < nd.a.size(); ++k) {
    if (std::fabs(nd.a[k]) > 1e-9 * scale) {
      ++active;
      only = k;
    }
  }
  if (active == 1) {
    const double a = nd.a[only];
    return to_string(t.branch_basis()[only]) + (a > 0 ? " >= " : " <= ") +
           format_sig(nd.b / a, digits);
  }
  // Divide by the largest coefficient with its sign so it prints as +1.
  double lead = 0.0;
  for (double v : nd.a) {
    if (std::fabs(v) == scale) {
      lead = v;
      break;
    }
  }
  std::vector<double> a(nd.a);
  for (double& v : a) v /= lead;
  return print_combination(a, t.branch_basis(), 1e-9, digits) + (lead > 0 ? " >= " : " <= ") +
         format_sig(nd.b / lead, digits);
}

inline std::string subtree_text(const SymbolicTree& t, int n, int digits, bool top) {
  const auto& nd = t.node(n);
  if (nd.kind == NodeKind::kLeaf) {
    // Drop coefficients that are pure round-off relative to the leaf.
    return print_combination(nd.c, t.leaf_basis(), 1e-9 * std::max(1.0, largest_abs(nd.c)), digits);
  }
  std::string s = subtree_text(t, 2 * n + 1, digits, false) + " if " +
                  condition_text(t, n, digits) + ", otherwise " +
                  subtree_text(t, 2 * n, digits, false);
  return top ? s : "(" + s + ")";
}

}  // namespace detail

/// "f_right if g >= b, otherwise f_left", nested for deeper trees.
inline std::string to_text(const SymbolicTree& tree, int digits = 4) {
  return detail::subtree_text(tree, 1, digits, true);
}

inline nlohmann::json serialize(const SymbolicTree& tree) {
  nlohmann::json doc;
  doc["depth"] = tree.depth();
  doc["variables"] = tree.variables();
  doc["basis_branch"] = tree.branch_basis().texts();
  doc["basis_leaf"] = tree.leaf_basis().texts();
  doc["nodes"] = nlohmann::json::array();
  for (int n = 1; n <= tree.num_nodes(); ++n) {
    const auto& nd = tree.node(n);
    doc["nodes"].push_back({{"id", n},
                            {"kind", to_string(nd.kind)},
                            {"a", nd.a},
                            {"b", nd.b},
                            {"c", nd.c}});
  }
  return doc;
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& obj, const std::string& key,
                                   const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key, "missing field");
  return *it;
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) {
      throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a string");
    }
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

inline std::vector<double> number_list(const nlohmann::json& j, const std::string& path,
                                       std::size_t expected) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  if (j.size() != expected) {
    throw SchemaError(path, "expected " + std::to_string(expected) + " entries, got " +
                                std::to_string(j.size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a number");
    }
    out.push_back(j[i].get<double>());
  }
  return out;
}

}  // namespace detail

inline SymbolicTree deserialize(const nlohmann::json& doc) {
  using detail::field;
  const auto& jd = field(doc, "depth", "$");
  if (!jd.is_number_integer() || jd.get<int>() < 1 || jd.get<int>() > 16) {
    throw SchemaError("$.depth", "expected an integer in [1, 16]");
  }
  const int depth = jd.get<int>();
  const auto vars = detail::string_list(field(doc, "variables", "$"), "$.variables");
  const auto kb = detail::string_list(field(doc, "basis_branch", "$"), "$.basis_branch");
  const auto kf = detail::string_list(field(doc, "basis_leaf", "$"), "$.basis_leaf");
  BasisSet branch, leaf;
  try {
    branch = BasisSet(kb, vars, BasisRole::kBranching);
  } catch (const ParseError& e) {
    throw SchemaError("$.basis_branch", e.what());
  }
  try {
    leaf = BasisSet(kf, vars, BasisRole::kLeaf);
  } catch (const ParseError& e) {
    throw SchemaError("$.basis_leaf", e.what());
  }
  const auto& jn = field(doc, "nodes", "$");
  const std::size_t count = (std::size_t{1} << (depth + 1)) - 1;
  if (!jn.is_array() || jn.size() != count) {
    throw SchemaError("$.nodes", "expected an array of " + std::to_string(count) + " nodes");
  }
  std::vector<TreeNode> nodes(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string path = "$.nodes[" + std::to_string(i) + "]";
    const auto& o = jn[i];
    const auto& id = field(o, "id", path);
    if (!id.is_number_integer() || id.get<long long>() != static_cast<long long>(i + 1)) {
      throw SchemaError(path + ".id", "expected " + std::to_string(i + 1));
    }
    const auto& kind = field(o, "kind", path);
    const std::string k = kind.is_string() ? kind.get<std::string>() : "";
    if (k == "branch") {
      nodes[i].kind = NodeKind::kBranch;
    } else if (k == "leaf") {
      nodes[i].kind = NodeKind::kLeaf;
    } else if (k == "inactive") {
      nodes[i].kind = NodeKind::kInactive;
    } else {
      throw SchemaError(path + ".kind", "expected branch, leaf or inactive");
    }
    nodes[i].a = detail::number_list(field(o, "a", path), path + ".a", kb.size());
    const auto& b = field(o, "b", path);
    if (!b.is_number()) throw SchemaError(path + ".b", "expected a number");
    nodes[i].b = b.get<double>();
    nodes[i].c = detail::number_list(field(o, "c", path), path + ".c", kf.size());
  }
  if (nodes[0].kind != NodeKind::kBranch) {
    throw SchemaError("$.nodes[0].kind", "root must be a branch node");
  }
  try {
    return SymbolicTree(depth, std::move(branch), std::move(leaf), std::move(nodes));
  } catch (const TreeError& e) {
    throw SchemaError("$.nodes", e.what());
  }
}

inline std::string serialize_text(const SymbolicTree& tree) {
  return serialize(tree).dump(2) + "\n";
}

inline SymbolicTree deserialize_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("$", e.what());
  }
  return deserialize(doc);
}

inline void save_tree(const std::string& path, const SymbolicTree& tree) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << serialize_text(tree);
}

inline SymbolicTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_text(ss.str());
}

}  // namespace symtree
