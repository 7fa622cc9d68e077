// symtree command-line front end.
//
// Exit codes: 0 success, 1 bad input or usage, 2 internal failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "symtree/harness.hpp"
#include "symtree/symtree.hpp"

namespace {

using namespace symtree;

class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Dataset load_dataset(const std::string& path, const std::string& target) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open data file '" + path + "'");
  Dataset d = read_csv(in, target);
  if (d.empty()) throw UserError("empty dataset");
  return d;
}

// Features only if the file has no target column.
Dataset load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open data file '" + path + "'");
  std::string header;
  std::getline(in, header);
  const auto cols = detail::split_csv_line(header);
  const bool has_y = std::find(cols.begin(), cols.end(), "y") != cols.end();
  in.clear();
  in.seekg(0);
  Dataset d = read_csv(in, has_y ? "y" : "");
  if (d.empty()) throw UserError("empty dataset");
  return d;
}

harness::Config load_fit_config(const std::string& path) {
  harness::Config c = harness::load_config(path);
  harness::validate(c);
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw UserError("cannot write '" + path + "'");
  out << text;
}

int cmd_generate(const std::string& which, std::size_t n, std::uint64_t seed, double sigma,
                 const std::string& out) {
  harness::DataSpec spec;
  spec.source = which;
  spec.n = n;
  spec.seed = seed;
  spec.sigma = sigma;
  if (n == 0) throw UserError("--n must be positive");
  const Dataset d = harness::make_dataset(spec);
  write_csv_file(out, d);
  std::cout << "wrote " << d.rows() << " rows to " << out << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& config_path, const std::string& out,
            const std::string& solver, const std::string& mps) {
  const harness::Config c = load_fit_config(config_path);
  const Dataset data = load_dataset(data_path, c.data.target);
  const auto [kb, kf] = harness::make_bases(c, data);
  if (solver == "export-only") {
    if (mps.empty()) throw UserError("--solver export-only needs --mps");
    const BuildResult br = build(data, kb, kf, c.fit.hp);
    write_text(mps, write_mps(br.model));
    std::cout << "wrote MPS with " << br.model.num_variables() << " variables, " << br.model.num_binaries()
              << " binaries, " << br.model.num_constraints() << " constraints to " << mps << "\n";
    return 0;
  }
  if (out.empty()) throw UserError("--out is required with the embedded solver");
  const FitResult r = fit_tree(data, kb, kf, c.fit);
  if (!mps.empty()) write_text(mps, write_mps(r.problem.model));
  std::cout << "status: " << to_string(r.status()) << "\n"
            << "nodes: " << r.stats.nodes << "\n";
  if (!r.has_tree()) {
    std::cerr << "error: no feasible tree found\n";
    return 2;
  }
  std::cout << "objective: " << format_g17(r.assignment.objective) << "\n"
            << "model: " << to_text(r.tree()) << "\n";
  save_tree(out, r.tree());
  return 0;
}

int cmd_predict(const std::string& model, const std::string& data_path, const std::string& out) {
  SymbolicTree tree = [&] {
    std::ifstream in(model);
    if (!in) throw UserError("cannot open model file '" + model + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_text(ss.str());
  }();
  const Dataset data = load_features(data_path);
  const auto pred = tree.predict(data);
  const auto leaves = tree.predict_leaves(data);
  std::ofstream f(out);
  if (!f) throw UserError("cannot write '" + out + "'");
  f << "leaf,prediction\n";
  for (std::size_t i = 0; i < data.rows(); ++i) {
    f << leaves[i] << ',' << format_g17(pred[static_cast<Eigen::Index>(i)]) << '\n';
  }
  return 0;
}

int cmd_export(const std::string& data_path, const std::string& config_path, const std::string& out) {
  const harness::Config c = load_fit_config(config_path);
  const Dataset data = load_dataset(data_path, c.data.target);
  const auto [kb, kf] = harness::make_bases(c, data);
  const BuildResult br = build(data, kb, kf, c.fit.hp);
  write_text(out, write_mps(br.model));
  std::cout << "variables: " << br.model.num_variables() << "\n"
            << "binaries: " << br.model.num_binaries() << "\n"
            << "constraints: " << br.model.num_constraints() << "\n";
  return 0;
}

int cmd_eval(const std::string& experiment, const std::string& out, const std::string& config_path) {
  harness::Config c = harness::default_config(experiment);
  if (!config_path.empty()) c = harness::load_config(config_path, c);
  c.experiment.name = experiment;
  harness::run_experiment(c, out, &std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic regression trees learned by mixed-integer programming"};
  app.require_subcommand(1);

  std::string data, config, out, model, mps, solver = "embedded", which, experiment;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  double sigma = 0.0;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
  gen->add_option("--case", which, "case1, two-tank or viscosity")
      ->required()
      ->check(CLI::IsMember({"case1", "two-tank", "viscosity"}));
  gen->add_option("--n", n, "Number of samples")->required();
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--sigma", sigma, "Target noise (viscosity only)")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", out, "Output CSV")->required();

  auto* fit = app.add_subcommand("fit", "Learn a tree");
  fit->add_option("--data", data, "Training CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--config", config, "INI configuration")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out, "Model JSON");
  fit->add_option("--solver", solver, "embedded or export-only")
      ->check(CLI::IsMember({"embedded", "export-only"}));
  fit->add_option("--mps", mps, "Also write the MILP in MPS format");

  auto* pred = app.add_subcommand("predict", "Evaluate a saved tree");
  pred->add_option("--model", model, "Model JSON")->required()->check(CLI::ExistingFile);
  pred->add_option("--data", data, "Input CSV")->required()->check(CLI::ExistingFile);
  pred->add_option("--out", out, "Output CSV")->required();

  auto* exp = app.add_subcommand("export-mps", "Write the MILP without solving it");
  exp->add_option("--data", data, "Training CSV")->required()->check(CLI::ExistingFile);
  exp->add_option("--config", config, "INI configuration")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", out, "Output MPS")->required();

  auto* ev = app.add_subcommand("eval", "Run a benchmark experiment");
  ev->add_option("--experiment", experiment, "Experiment name")
      ->required()
      ->check(CLI::IsMember(harness::experiment_names()));
  ev->add_option("--out", out, "Output directory")->required();
  ev->add_option("--config", config, "INI overrides")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(which, n, seed, sigma, out);
    if (*fit) return cmd_fit(data, config, out, solver, mps);
    if (*pred) return cmd_predict(model, data, out);
    if (*exp) return cmd_export(data, config, out);
    if (*ev) return cmd_eval(experiment, out, config);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const harness::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const TreeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
