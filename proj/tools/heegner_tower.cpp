#include <CLI11.hpp>

#include <iostream>

#include "heegner/pipeline.hpp"

using namespace heegner;

namespace {

std::vector<Int> to_ints(const std::vector<long>& xs) {
  std::vector<Int> out;
  for (long x : xs) out.push_back(Int(x));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heegner points and theta elements on definite quaternion algebras"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, json_out;
  app.add_option("--config", config_path, "configuration file (key = value)")->required();
  app.add_option("--json", json_out, "write the JSON report here");

  auto* classset = app.add_subcommand("classset", "right ideal class sets with mass certification");
  auto* brandt = app.add_subcommand("brandt", "Brandt matrices");
  std::vector<long> brandt_v;
  int brandt_m = 0;
  brandt->add_option("--v", brandt_v, "norms of the Hecke primes")->delimiter(',');
  brandt->add_option("--m", brandt_m, "p-level exponent");
  auto* embeddings = app.add_subcommand("embeddings", "Picard groups and Heegner embeddings");
  auto* points = app.add_subcommand("points", "Heegner points");
  std::vector<long> pc;
  std::vector<int> pn, pm;
  auto* build = points->add_subcommand("build", "build and check points");
  for (auto* s : {points, build}) {
    s->add_option("--c", pc, "conductors")->delimiter(',');
    s->add_option("--n", pn, "p-power exponents")->delimiter(',');
    s->add_option("--m", pm, "levels")->delimiter(',');
  }
  auto* verify = app.add_subcommand("verify", "compatibility and Euler relations");
  std::vector<std::string> which;
  bool verify_all = false;
  verify->add_option("which", which, "horizontal|vertical|galois|euler")
      ->check(CLI::IsMember({"horizontal", "vertical", "galois", "euler"}));
  verify->add_flag("--all", verify_all, "run every check");
  auto* theta = app.add_subcommand("theta", "theta elements");
  int theta_n = -1, precision = -1;
  theta->add_option("--n", theta_n, "largest layer");
  theta->add_option("--precision", precision, "work modulo p^k");
  auto* lfun = app.add_subcommand("lfun", "two-variable L = theta theta*");
  int lfun_n = -1;
  lfun->add_option("--n", lfun_n, "layer");
  auto* all = app.add_subcommand("all", "every pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage errors count as configuration errors
    return app.exit(e) == 0 ? 0 : 2;
  }

  std::string command = app.get_subcommands().front()->get_name();
  json report = {{"schema", kSchema}, {"command", command}};
  int code = 0;
  try {
    RunConfig cfg = load_config(config_path);
    if (precision > 0) cfg.k = precision;
    Session S(cfg);
    report["config"] = config_json(S);
    Report R;
    int nmax = cfg.n_max;
    if (theta_n >= 0) nmax = theta_n;
    if (lfun_n >= 0) nmax = lfun_n;
    if (classset->parsed()) run_classset(S, R);
    if (brandt->parsed()) run_brandt(S, R, brandt_v.empty() ? cfg.hecke_primes : to_ints(brandt_v), brandt_m);
    if (embeddings->parsed()) run_embeddings(S, R);
    if (points->parsed())
      run_points(S, R, pc.empty() ? cfg.conductors : to_ints(pc), pn.empty() ? std::vector<int>{0, 1} : pn,
                 pm.empty() ? cfg.depths : pm);
    if (verify->parsed()) {
      VerifySelection sel;
      if (!verify_all)
        for (auto& w : which) {
          sel.horizontal = sel.horizontal || w == "horizontal";
          sel.vertical = sel.vertical || w == "vertical";
          sel.galois = sel.galois || w == "galois";
          sel.euler = sel.euler || w == "euler";
        }
      run_verify(S, R, sel);
    }
    if (theta->parsed()) run_theta(S, R, nmax);
    if (lfun->parsed()) run_lfun(S, R, nmax);
    if (all->parsed()) {
      run_classset(S, R);
      run_brandt(S, R, cfg.hecke_primes, 0);
      if (S.over_q()) {
        run_embeddings(S, R);
        run_points(S, R, cfg.conductors, {0, 1}, cfg.depths);
        run_verify(S, R, {});
        run_theta(S, R, nmax);
        run_lfun(S, R, nmax);
      }
    }
    report["result"] = R.result;
    report["checks"] = R.checks;
    report["status"] = R.ok() ? "pass" : "fail";
    for (auto& c : R.checks)
      std::cout << (c.at("pass").get<bool>() ? "pass  " : "FAIL  ") << c.at("name").get<std::string>() << "\n";
    std::cout << command << ": " << (R.ok() ? "pass" : "fail") << " (" << R.checks.size() << " checks)\n";
    code = R.ok() ? 0 : 1;
  } catch (const Error& e) {
    code = e.kind == "config" ? 2 : 1;
    report["status"] = code == 2 ? "config-error" : "error";
    report["error"] = {{"kind", e.kind}, {"message", e.what()}};
    std::cerr << "error (" << e.kind << "): " << e.what() << "\n";
  } catch (const std::exception& e) {
    code = 1;
    report["status"] = "error";
    report["error"] = {{"kind", "internal"}, {"message", e.what()}};
    std::cerr << "error: " << e.what() << "\n";
  }
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    out << report.dump(2) << "\n";
  }
  return code;
}
