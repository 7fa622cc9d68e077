// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/random_instances.hpp"
#include "symtree/harness.hpp"

using namespace symtree;
using namespace symtree::harness;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::vector<const FitRecord*> g_fits;  // every model fitted for criteria 2-6
std::vector<std::string> g_limited;    // fits that stopped at a node limit

void keep(const FitRecord& r, const std::string& label) {
  g_fits.push_back(&r);
  if (r.limited()) g_limited.push_back(label + " (" + r.status() + ")");
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

Verdict criterion1() {
  std::mt19937_64 rng(2024);
  int agree = 0, total = 0;
  std::string bad;
  for (int t = 0; t < 50; ++t) {
    const int nb = 4 + static_cast<int>(rng() % 9);
    const int nc = static_cast<int>(rng() % 11);
    const int rows = 5 + static_cast<int>(rng() % 16);
    const MilpModel m = symtree::testing::random_milp(rng, nb, nc, rows);
    const Assignment oracle = brute_force(m);
    const auto [a, stats] = solve_milp(m);
    ++total;
    const bool same = a.status == oracle.status &&
                      (oracle.status != SolveStatus::kOptimal || std::fabs(a.objective - oracle.objective) <= 1e-6);
    agree += same ? 1 : 0;
    if (!same && bad.empty()) bad = " first mismatch: random model " + std::to_string(t);
  }
  std::mt19937_64 trng(11);
  for (int t = 0; t < 10; ++t) {
    const Dataset d = symtree::testing::tiny_tree_dataset(trng, 4 + t % 3);
    const BasisSet kb({"x", "x^2"}, d.feature_names, BasisRole::kBranching);
    const BasisSet kf({"1", "x"}, d.feature_names, BasisRole::kLeaf);
    HyperParams hp;
    hp.n_b = 1;
    FitOptions opt;
    opt.hp = hp;
    const FitResult r = fit_tree(d, kb, kf, opt);
    const Assignment oracle = brute_force(r.problem.model);
    ++total;
    const bool same = r.status() == SolveStatus::kOptimal && oracle.has_solution() &&
                      std::fabs(r.assignment.objective - oracle.objective) <= 1e-6;
    agree += same ? 1 : 0;
    if (!same && bad.empty()) bad = " first mismatch: tree instance " + std::to_string(t);
  }
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " instances agree" + bad};
}

double regime_accuracy(const SymbolicTree& tree, const RegimeComparison& cmp, std::uint64_t test_seed) {
  std::map<int, int> regime_of_leaf;
  for (int g = 0; g < 2; ++g) regime_of_leaf[cmp.leaf_of_regime[static_cast<std::size_t>(g)]] = g;
  const Dataset test = gen_case1(2000, test_seed);
  const auto leaves = tree.predict_leaves(test);
  int right = 0;
  for (std::size_t i = 0; i < test.rows(); ++i) {
    const auto it = regime_of_leaf.find(leaves[i]);
    const auto row = test.row(i);
    right += it != regime_of_leaf.end() && it->second == case1_regime(row[0], row[1]) ? 1 : 0;
  }
  return right / static_cast<double>(test.rows());
}

Verdict criterion2(std::vector<FitRecord>& store) {
  Config c = default_config("case1");
  c.data.n = 50;
  const Dataset train = make_dataset(c.data, c.experiment);
  const auto [kb, kf] = make_bases(c, train);
  const auto t0 = std::chrono::steady_clock::now();
  store.push_back(fit_and_check(train, kb, kf, c.fit));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const FitRecord& r = store.back();
  keep(r, "case1 n=" + std::to_string(c.data.n));
  if (!r.fit.has_tree()) return {false, "no tree"};
  const RegimeTruth truth = truth_for("case1");
  const auto cmp = compare_to_truth(r.fit.tree(), r.fit.solution->routing, train, truth);
  double worst = 0.0;
  for (std::size_t g = 0; g < cmp.true_leaves.size(); ++g) {
    for (std::size_t k = 0; k < cmp.true_leaves[g].size(); ++k) {
      worst = std::max(worst, std::fabs(cmp.learned_leaves[g][k] - cmp.true_leaves[g][k]));
    }
  }
  const double acc = regime_accuracy(r.fit.tree(), cmp, c.experiment.test_seed);
  const double l_acc = r.fit.solution->terms.l_acc;
  const bool pass = l_acc <= 1e-6 && worst <= 1e-3 && acc >= 0.97 && secs <= 600.0;

  // Other sizes and seeds, reported only: the boundary is free inside the
  // gap between training points, so accuracy moves with the sample.
  std::string spread;
  for (std::size_t n : {40, 50, 60}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      Config o = c;
      o.data.n = n;
      o.data.seed = seed;
      const Dataset d = make_dataset(o.data, o.experiment);
      const FitResult f = fit_tree(d, kb, kf, o.fit);
      if (!f.has_tree()) continue;
      const auto oc = compare_to_truth(f.tree(), f.solution->routing, d, truth);
      spread += " " + std::to_string(n) + "/" + std::to_string(seed) + ":" +
                fmt(regime_accuracy(f.tree(), oc, o.experiment.test_seed));
    }
  }
  return {pass, "n=" + std::to_string(c.data.n) + " seed " + std::to_string(c.data.seed) + ": L_acc " + fmt(l_acc) +
                    ", worst leaf coefficient error " + fmt(worst) + ", regime accuracy " + fmt(acc) + ", model " +
                    to_text(r.fit.tree()) + "; accuracy by n/seed (not scored):" + spread};
}

Verdict criterion3(Fig3Result& r) {
  r = run_fig3(default_config("fig3"));
  for (std::size_t i = 0; i < r.fits.size(); ++i) keep(r.fits[i], "fig3 fit " + std::to_string(i));
  std::string detail;
  for (const auto& [n, m] : r.median_mae) {
    detail += "n=" + std::to_string(n) + ": tree " + fmt(m.at("symbolic_tree")) + " sparse " + fmt(m.at("sparse")) +
              " linear " + fmt(m.at("linear_tree")) + " constant " + fmt(m.at("constant_tree")) + "; ";
  }
  detail += std::string("ordering ") + (r.ordering_holds ? "holds" : "violated") + ", tree MAE " +
            (r.tree_nonincreasing ? "nonincreasing" : "rises") + " with n";
  return {r.ordering_holds && r.tree_nonincreasing, detail};
}

Verdict criterion4(NbSweepResult& r) {
  r = run_nb_sweep(default_config("nb-sweep"));
  std::string detail;
  for (std::size_t i = 0; i < r.fits.size(); ++i) {
    keep(r.fits[i], "nb-sweep N_B=" + std::to_string(i + 1));
  }
  for (const auto& [nb, m] : r.test_mae) detail += "N_B=" + std::to_string(nb) + " " + fmt(m) + "; ";
  return {r.argmin == 2, detail + "argmin " + std::to_string(r.argmin)};
}

Verdict criterion5(TwoTankResult& r) {
  r = run_two_tank(default_config("two-tank"));
  keep(r.fit, "two-tank");
  double worst = 0.0;
  for (std::size_t g = 0; g < r.comparison.true_leaves.size(); ++g) {
    for (std::size_t k = 0; k < r.comparison.true_leaves[g].size(); ++k) {
      worst = std::max(worst, std::fabs(r.comparison.learned_leaves[g][k] - r.comparison.true_leaves[g][k]));
    }
  }
  const double ratio = r.rmse_sparse / r.rmse_tree;
  const bool pass = worst <= 0.02 && r.split_feature == "h1 - h2" && std::fabs(r.threshold) <= 0.05 &&
                    r.rmse_tree <= 1e-2 && ratio >= 100.0;
  return {pass, "worst leaf coefficient error " + fmt(worst) + ", split on '" + r.split_feature + "' at " +
                    fmt(r.threshold) + ", rollout RMSE " + fmt(r.rmse_tree) + " vs sparse " + fmt(r.rmse_sparse) +
                    " (ratio " + fmt(ratio) + ")"};
}

Verdict criterion6(ViscosityResult& r) {
  r = run_viscosity(default_config("viscosity"));
  bool pass = r.runs.size() == 2;
  std::string detail;
  for (const auto& run : r.runs) {
    keep(run.fit, "viscosity n=" + std::to_string(run.n));
    detail += "n=" + std::to_string(run.n) + ": slopes " + fmt(run.low_slope) + "/" + fmt(run.high_slope) +
              ", intercepts " + fmt(run.low_intercept) + "/" + fmt(run.high_intercept) + ", threshold " +
              fmt(run.threshold) + "; ";
    if (run.n == 40) {
      pass = pass && std::fabs(run.low_slope - 1.0) <= 0.05 && std::fabs(run.high_slope - 3.4) <= 0.05 &&
             std::fabs(run.low_intercept + 0.49) <= 0.1 && std::fabs(run.high_intercept + 11.28) <= 0.1 &&
             run.threshold >= 4.1 && run.threshold <= 4.55;
    } else if (run.n == 100) {
      pass = pass && run.threshold >= 4.35 && run.threshold <= 4.55;
    }
  }
  return {pass, detail};
}

Verdict criterion7() {
  const NoiseResult r = run_noise(default_config("noise"));
  bool pass = r.mean_leaf_l2.at(0.4) >= r.mean_leaf_l2.at(0.0);
  std::string detail = "mean leaf L2 at sigma 0: " + fmt(r.mean_leaf_l2.at(0.0)) + ", at 0.4: " +
                       fmt(r.mean_leaf_l2.at(0.4)) + "; pattern kept:";
  int limited = 0;
  for (const auto& f : r.fits) limited += f.limited() ? 1 : 0;
  for (const auto& [sigma, count] : r.pattern_count) {
    detail += " " + fmt(sigma) + "->" + std::to_string(count) + "/" + std::to_string(r.run_count.at(sigma));
    if (sigma <= 0.2 + 1e-12 && count < 8) pass = false;
  }
  detail += "; " + std::to_string(limited) + " of " + std::to_string(r.fits.size()) + " fits stopped at the node limit";
  return {pass, detail};
}

Verdict criterion8() {
  struct Want {
    std::string name;
    BuildResult br;
    int vars, bins, rows;
  };
  std::vector<Want> cases;
  {
    const Config c = default_config("case1");
    const Dataset d = gen_case1(100, 1);
    const auto [kb, kf] = make_bases(c, d);
    cases.push_back({"case1 n=100", build(d, kb, kf, HyperParams{}), 1268, 307, 2572});
  }
  {
    const Config c = default_config("two-tank");
    const Dataset d = tank_training_trajectory(c.experiment).tank1_dataset(80);
    const auto [kb, kf] = make_bases(c, d);
    cases.push_back({"two-tank n=80", build(d, kb, kf, c.fit.hp), 1019, 258, 2066});
  }
  bool pass = true;
  std::string detail;
  for (const auto& w : cases) {
    const auto v = static_cast<int>(w.br.model.num_variables());
    const auto b = static_cast<int>(w.br.model.num_binaries());
    const auto r = static_cast<int>(w.br.model.num_constraints());
    pass = pass && std::abs(v - w.vars) <= 5 && std::abs(b - w.bins) <= 5 && std::abs(r - w.rows) <= 5;
    detail += w.name + ": " + std::to_string(v) + " variables, " + std::to_string(b) + " binaries, " +
              std::to_string(r) + " constraints; ";
  }
  return {pass, detail};
}

Verdict criterion9() {
  int bad = 0;
  std::string first;
  for (const FitRecord* r : g_fits) {
    if (!r->invariant_failures.empty()) {
      ++bad;
      if (first.empty()) first = ", first: " + r->invariant_failures.front();
    }
  }
  return {bad == 0 && !g_fits.empty(),
          std::to_string(g_fits.size() - static_cast<std::size_t>(bad)) + "/" + std::to_string(g_fits.size()) +
              " fitted models pass" + first};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::function<Verdict()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += v.pass ? 0 : 1;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " | " << v.detail << " ["
              << std::round(secs * 10) / 10 << " s]" << std::endl;
  };
  std::vector<FitRecord> case1;
  case1.reserve(1);
  Fig3Result fig3;
  NbSweepResult nb;
  TwoTankResult tank;
  ViscosityResult visc;
  report(1, criterion1);
  report(2, [&] { return criterion2(case1); });
  report(3, [&] { return criterion3(fig3); });
  report(4, [&] { return criterion4(nb); });
  report(5, [&] { return criterion5(tank); });
  report(6, [&] { return criterion6(visc); });
  report(7, criterion7);
  report(8, criterion8);
  report(9, criterion9);
  if (!g_limited.empty()) {
    std::cout << "note: stopped at the node limit (incumbent reported):";
    for (const auto& s : g_limited) std::cout << " " << s << ";";
    std::cout << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
