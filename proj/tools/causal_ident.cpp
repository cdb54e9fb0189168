// causal_ident command-line front end. Links the C API only.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "causal_ident/causal_ident.h"

namespace {

using json = nlohmann::ordered_json;

struct Flags {
  std::string spec;
  std::vector<std::string> param, psi, gamma, classes;
  std::string regime;
  std::optional<std::size_t> n, budget;
  std::optional<double> tol, floor;
  std::optional<std::uint64_t> seed;
  std::string mode = "float";
  std::string output = "human";
  bool b_conditions = false;
  bool g_formula = false;
  std::string beta;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("spec", f.spec, "model-spec JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--mode", f.mode, "arithmetic")->check(CLI::IsMember({"float", "rational"}));
  cmd->add_option("--output", f.output, "report format")->check(CLI::IsMember({"human", "json"}));
  cmd->add_option("--tol", f.tol, "tolerance")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "random seed");
}

void add_selectors(CLI::App* cmd, Flags& f) {
  cmd->add_option("--gamma", f.gamma, "parameter selector(s)")->delimiter(',');
  cmd->add_option("--psi", f.psi, "functional selector(s)")->delimiter(',');
  cmd->add_option("--class", f.classes, "model class name(s)")->delimiter(',');
}

json request_of(const std::string& verb, const Flags& f, const std::vector<std::string>& argv) {
  json options = json::object();
  auto list = [&](const char* key, const std::vector<std::string>& v) {
    if (!v.empty()) options[key] = v;
  };
  list("param", f.param);
  list("psi", f.psi);
  list("gamma", f.gamma);
  list("class", f.classes);
  if (!f.regime.empty()) options["regime"] = f.regime;
  if (f.n) options["n"] = *f.n;
  if (f.budget) options["budget"] = *f.budget;
  if (f.tol) options["tol"] = *f.tol;
  if (f.seed) options["seed"] = *f.seed;
  options["mode"] = f.mode;
  if (f.b_conditions) options["b_conditions"] = true;
  if (f.g_formula) options["g_formula"] = true;
  if (!f.beta.empty()) options["beta"] = f.beta;
  if (f.floor) options["floor"] = *f.floor;
  return json{{"verb", verb}, {"spec", f.spec}, {"argv", argv}, {"options", options}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identification checks for causal parameters on finite structural models"};
  app.set_version_flag("--version", std::string(ci_version()));
  app.require_subcommand(1);
  Flags f;

  auto* eval = app.add_subcommand("eval", "evaluate parameters, functionals, regimes or the g-formula");
  add_common(eval, f);
  eval->add_option("--param", f.param, "parameter or functional selector(s)")->delimiter(',');
  eval->add_option("--psi", f.psi, "functional selector(s)")->delimiter(',');
  eval->add_option("--regime", f.regime, "regime name from the model file");
  eval->add_flag("--g-formula", f.g_formula, "evaluate the extended g-formula");
  eval->add_option("--beta", f.beta, "incremental propensity-score odds multiplier (with --g-formula)");

  auto* check = app.add_subcommand("check", "membership of the model in classes or B-conditions");
  add_common(check, f);
  check->add_option("--class", f.classes, "class name(s)")->delimiter(',');
  check->add_flag("--b-conditions", f.b_conditions, "check sequential exchangeability for --regime");
  check->add_option("--regime", f.regime, "regime name from the model file");

  auto* ident = app.add_subcommand("ident", "sampled identification check of --gamma by --psi");
  add_common(ident, f);
  add_selectors(ident, f);
  ident->add_option("--n", f.n, "sampled models")->check(CLI::PositiveNumber);

  auto* cex = app.add_subcommand("counterexample", "search the class for a large |gamma - psi|");
  add_common(cex, f);
  add_selectors(cex, f);
  cex->add_option("--budget", f.budget, "objective evaluations")->check(CLI::PositiveNumber);

  auto* audit = app.add_subcommand("audit", "identity-slippage audit (I1-I4)");
  add_common(audit, f);
  add_selectors(audit, f);
  audit->add_option("--n", f.n, "sampled models per leg")->check(CLI::PositiveNumber);
  audit->add_option("--budget", f.budget, "search budget per leg")->check(CLI::PositiveNumber);
  audit->add_option("--floor", f.floor, "gap floor for I4")->check(CLI::NonNegativeNumber);

  auto* report = app.add_subcommand("report", "summary of every quantity and check the model file supports");
  add_common(report, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return CI_INPUT_ERROR;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  const std::string verb = app.get_subcommands().front()->get_name();
  const std::string request = request_of(verb, f, args).dump();

  const auto start = std::chrono::steady_clock::now();
  char* record = nullptr;
  const ci_status status = ci_run_file(request.c_str(), &record);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!record) {
    std::cerr << "causal_ident: internal error\n";
    return CI_INPUT_ERROR;
  }
  if (f.output == "json") {
    std::fputs(record, stdout);
  } else {
    char* text = nullptr;
    if (ci_render_human(record, wall, &text) == CI_OK && text) std::fputs(text, stdout);
    ci_string_free(text);
  }
  ci_string_free(record);
  return status == CI_INTERNAL ? CI_INPUT_ERROR : static_cast<int>(status);
}
