#pragma once

// In-memory mixed-integer linear program (minimization) with bounded
// variables, an independent feasibility checker and a free-MPS writer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace symtree {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct VarId {
  std::int32_t value = -1;
  friend auto operator<=>(const VarId&, const VarId&) = default;
};

struct ConstraintId {
  std::int32_t value = -1;
  friend auto operator<=>(const ConstraintId&, const ConstraintId&) = default;
};

enum class Integrality { kContinuous, kBinary };
enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct Term {
  VarId var;
  double coef = 0.0;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  Integrality integrality = Integrality::kContinuous;
  double objective = 0.0;
  // Higher values are branched on first under structural-priority branching.
  int branch_priority = 0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MilpModel {
 public:
  explicit MilpModel(std::string name = "model") : name_(std::move(name)) {}

  VarId add_variable(std::string name, double lower, double upper,
                     Integrality integrality, int branch_priority = 0) {
    if (name.empty()) throw ModelError("variable name must be nonempty");
    if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
      throw ModelError("inverted bounds for variable '" + name + "'");
    }
    if (integrality == Integrality::kBinary && (lower < 0.0 || upper > 1.0)) {
      throw ModelError("binary variable '" + name + "' has bounds outside [0,1]");
    }
    vars_.push_back(Variable{std::move(name), lower, upper, integrality, 0.0,
                             branch_priority});
    return VarId{static_cast<std::int32_t>(vars_.size() - 1)};
  }

  ConstraintId add_constraint(std::vector<Term> terms, Sense sense, double rhs,
                              std::string name = {}) {
    if (!std::isfinite(rhs)) throw ModelError("non-finite right-hand side");
    std::vector<std::int32_t> seen;
    seen.reserve(terms.size());
    for (const auto& t : terms) {
      check(t.var);
      if (!std::isfinite(t.coef)) {
        throw ModelError("non-finite coefficient on '" + vars_[index(t.var)].name +
                         "'");
      }
      seen.push_back(t.var.value);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
      throw ModelError("duplicate variable in constraint '" + name + "'");
    }
    rows_.push_back(Constraint{std::move(name), std::move(terms), sense, rhs});
    return ConstraintId{static_cast<std::int32_t>(rows_.size() - 1)};
  }

  void set_objective(VarId v, double coef) {
    check(v);
    if (!std::isfinite(coef)) throw ModelError("non-finite objective coefficient");
    vars_[index(v)].objective = coef;
  }

  void set_bounds(VarId v, double lower, double upper) {
    check(v);
    if (lower > upper) throw ModelError("inverted bounds");
    vars_[index(v)].lower = lower;
    vars_[index(v)].upper = upper;
  }

  const std::string& name() const { return name_; }
  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }
  std::size_t num_binaries() const {
    return static_cast<std::size_t>(
        std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) {
          return v.integrality == Integrality::kBinary;
        }));
  }
  const Variable& variable(VarId v) const { return vars_[index(v)]; }
  const Variable& variable(std::size_t j) const { return vars_[j]; }
  const Constraint& constraint(ConstraintId c) const {
    return rows_[static_cast<std::size_t>(c.value)];
  }
  const Constraint& constraint(std::size_t r) const { return rows_[r]; }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }

  bool valid(VarId v) const {
    return v.value >= 0 && static_cast<std::size_t>(v.value) < vars_.size();
  }

 private:
  static std::size_t index(VarId v) { return static_cast<std::size_t>(v.value); }
  void check(VarId v) const {
    if (!valid(v)) throw ModelError("invalid variable handle " + std::to_string(v.value));
  }

  std::string name_;
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
};

enum class SolveStatus {
  kOptimal,
  kFeasibleWithGap,
  kInfeasible,
  kUnbounded,
  kLimitReached,
  kNumericalFailure,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasibleWithGap: return "feasible-with-gap";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kLimitReached: return "limit-reached";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct Assignment {
  std::vector<double> values;
  double objective = kInf;
  SolveStatus status = SolveStatus::kInfeasible;

  double operator[](VarId v) const { return values[static_cast<std::size_t>(v.value)]; }
  bool has_solution() const { return !values.empty(); }
};

inline double objective_value(const MilpModel& m, std::span<const double> x) {
  double obj = 0.0;
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    obj += m.variable(j).objective * x[j];
  }
  return obj;
}

inline double row_activity(const Constraint& row, std::span<const double> x) {
  double act = 0.0;
  for (const auto& t : row.terms) act += t.coef * x[static_cast<std::size_t>(t.var.value)];
  return act;
}

struct FeasibilityReport {
  bool feasible = true;
  double max_bound_violation = 0.0;
  double max_row_violation = 0.0;
  double max_integrality_violation = 0.0;
  std::string worst;
};

/// Re-evaluates every bound, row and integrality requirement from scratch.
/// Row violations are measured relative to max(1, |rhs|).
inline FeasibilityReport check_feasibility(const MilpModel& m,
                                           std::span<const double> x,
                                           double feas_tol = 1e-7,
                                           double int_tol = 1e-6) {
  FeasibilityReport rep;
  if (x.size() != m.num_variables()) {
    rep.feasible = false;
    rep.worst = "value vector has wrong length";
    return rep;
  }
  double worst_rel = 0.0;
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    const auto& v = m.variable(j);
    if (!std::isfinite(x[j])) {
      rep.feasible = false;
      rep.worst = "non-finite value for " + v.name;
      return rep;
    }
    const double viol = std::max(v.lower - x[j], x[j] - v.upper);
    if (viol > rep.max_bound_violation) {
      rep.max_bound_violation = viol;
      if (viol > feas_tol && viol > worst_rel) {
        worst_rel = viol;
        rep.worst = "bound of " + v.name;
      }
    }
    if (v.integrality == Integrality::kBinary) {
      const double frac = std::fabs(x[j] - std::round(x[j]));
      rep.max_integrality_violation = std::max(rep.max_integrality_violation, frac);
      if (frac > int_tol) rep.worst = "integrality of " + v.name;
    }
  }
  for (std::size_t r = 0; r < m.num_constraints(); ++r) {
    const auto& row = m.constraint(r);
    const double act = row_activity(row, x);
    double viol = 0.0;
    switch (row.sense) {
      case Sense::kLessEqual: viol = act - row.rhs; break;
      case Sense::kGreaterEqual: viol = row.rhs - act; break;
      case Sense::kEqual: viol = std::fabs(act - row.rhs); break;
    }
    viol /= std::max(1.0, std::fabs(row.rhs));
    if (viol > rep.max_row_violation) {
      rep.max_row_violation = viol;
      if (viol > feas_tol && viol > worst_rel) {
        worst_rel = viol;
        rep.worst = "row " + (row.name.empty() ? std::to_string(r) : row.name);
      }
    }
  }
  rep.feasible = rep.max_bound_violation <= feas_tol &&
                 rep.max_row_violation <= feas_tol &&
                 rep.max_integrality_violation <= int_tol;
  return rep;
}

/// Maps a name onto [A-Za-z0-9_], at most 64 characters.
inline std::string mps_sanitize(const std::string& name) {
  std::string out;
  out.reserve(std::min<std::size_t>(name.size(), 64));
  for (char c : name) {
    if (out.size() == 64) break;
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                    (c >= '0' && c <= '9') || c == '_';
    out += ok ? c : '_';
  }
  return out;
}

namespace detail {

inline std::string mps_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Free-format MPS with integer columns wrapped in INTORG/INTEND markers.
/// Output is a pure function of the model.
inline std::string write_mps(const MilpModel& m) {
  if (m.num_variables() == 0) throw ModelError("cannot export an empty model");
  std::vector<std::string> col_names(m.num_variables());
  std::unordered_set<std::string> used{"OBJ"};
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    col_names[j] = mps_sanitize(m.variable(j).name);
    if (!used.insert(col_names[j]).second) {
      throw ModelError("variable name '" + m.variable(j).name +
                       "' collides after MPS sanitization");
    }
  }
  std::vector<std::string> row_names(m.num_constraints());
  std::unordered_set<std::string> used_rows{"OBJ"};
  for (std::size_t r = 0; r < m.num_constraints(); ++r) {
    std::string base = m.constraint(r).name.empty()
                           ? "R" + std::to_string(r)
                           : mps_sanitize(m.constraint(r).name);
    std::string candidate = base;
    if (!used_rows.insert(candidate).second) {
      candidate = mps_sanitize(base.substr(0, 50) + "_" + std::to_string(r));
      if (!used_rows.insert(candidate).second) {
        throw ModelError("row name collision for '" + m.constraint(r).name + "'");
      }
    }
    row_names[r] = candidate;
  }

  // Column-wise view of the rows.
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(m.num_variables());
  for (std::size_t r = 0; r < m.num_constraints(); ++r) {
    for (const auto& t : m.constraint(r).terms) {
      cols[static_cast<std::size_t>(t.var.value)].emplace_back(r, t.coef);
    }
  }

  std::ostringstream out;
  out << "NAME " << mps_sanitize(m.name().empty() ? "model" : m.name()) << "\n";
  out << "ROWS\n N OBJ\n";
  for (std::size_t r = 0; r < m.num_constraints(); ++r) {
    const char* s = m.constraint(r).sense == Sense::kLessEqual      ? "L"
                    : m.constraint(r).sense == Sense::kGreaterEqual ? "G"
                                                                    : "E";
    out << ' ' << s << ' ' << row_names[r] << '\n';
  }
  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    const bool is_int = m.variable(j).integrality == Integrality::kBinary;
    if (is_int != in_int) {
      out << "    MARKER" << marker++ << " 'MARKER' "
          << (is_int ? "'INTORG'" : "'INTEND'") << '\n';
      in_int = is_int;
    }
    const double c = m.variable(j).objective;
    if (c != 0.0 || cols[j].empty()) {
      out << "    " << col_names[j] << " OBJ " << detail::mps_number(c) << '\n';
    }
    for (const auto& [r, a] : cols[j]) {
      out << "    " << col_names[j] << ' ' << row_names[r] << ' '
          << detail::mps_number(a) << '\n';
    }
  }
  if (in_int) out << "    MARKER" << marker++ << " 'MARKER' 'INTEND'\n";
  out << "RHS\n";
  for (std::size_t r = 0; r < m.num_constraints(); ++r) {
    if (m.constraint(r).rhs != 0.0) {
      out << "    RHS " << row_names[r] << ' '
          << detail::mps_number(m.constraint(r).rhs) << '\n';
    }
  }
  out << "BOUNDS\n";
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    const auto& v = m.variable(j);
    const std::string& n = col_names[j];
    if (v.lower == v.upper) {
      out << " FX BND " << n << ' ' << detail::mps_number(v.lower) << '\n';
      continue;
    }
    if (v.integrality == Integrality::kBinary && v.lower == 0.0 && v.upper == 1.0) {
      out << " BV BND " << n << '\n';
      continue;
    }
    const bool lo_inf = v.lower == -kInf;
    const bool up_inf = v.upper == kInf;
    if (lo_inf && up_inf) {
      out << " FR BND " << n << '\n';
      continue;
    }
    if (lo_inf) {
      out << " MI BND " << n << '\n';
    } else if (v.lower != 0.0 || v.integrality == Integrality::kBinary) {
      out << " LO BND " << n << ' ' << detail::mps_number(v.lower) << '\n';
    }
    if (up_inf) {
      if (v.integrality == Integrality::kBinary) out << " PL BND " << n << '\n';
    } else {
      out << " UP BND " << n << ' ' << detail::mps_number(v.upper) << '\n';
    }
  }
  out << "ENDATA\n";
  return out.str();
}

}  // namespace symtree
