#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "ouspde/suites.hpp"

namespace {

void print_report(const ouspde::SuiteReport& rep) {
  std::printf("suite %s: %d pass, %d fail, %d inconclusive (seed %llu)\n", rep.suite.c_str(),
              rep.count(ouspde::CheckStatus::pass), rep.count(ouspde::CheckStatus::fail),
              rep.count(ouspde::CheckStatus::inconclusive),
              static_cast<unsigned long long>(rep.seed));
  for (const auto& c : rep.checks)
    std::printf("  [%-12s] %-36s %-46s value=%.6g threshold=%.6g\n",
                ouspde::status_name(c.status), c.id.c_str(), c.anchor.c_str(), c.value,
                c.threshold);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ouspde verification suites"};
  app.require_subcommand(1);

  CLI::App* verify = app.add_subcommand("verify", "run one verification suite");
  std::string suite;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  long samples = -1;
  int threads = -1;
  bool half_qv = false;
  verify->add_option("suite", suite, "suite name")->required();
  verify->add_option("--config", config_path, "JSON configuration file");
  verify->add_option("--out", out_dir, "directory for the report and sweep CSVs");
  verify->add_option("--seed", seed, "base RNG seed")->each([&](const std::string&) {
    seed_set = true;
  });
  verify->add_option("--samples", samples, "override the per-check sample/path budget");
  verify->add_option("--threads", threads, "worker thread cap (0 = hardware)");
  verify->add_flag("--half-qv-convention", half_qv,
                   "interpret the noise with the half quadratic-variation convention");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  ouspde::SuiteConfig cfg;
  try {
    if (!config_path.empty()) cfg = ouspde::suite_config_from_json(ouspde::read_json_file(config_path));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: cannot read config %s: %s\n", config_path.c_str(), e.what());
    return 2;
  }
  cfg.suite = suite;
  if (seed_set) cfg.seed = seed;
  if (samples >= 0) cfg.samples = samples;
  if (threads >= 0) cfg.threads = threads;
  if (half_qv) cfg.half_qv = true;
  if (!out_dir.empty()) cfg.out_dir = out_dir;

  const auto names = ouspde::suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::fprintf(stderr, "error: unknown suite '%s'; expected one of:", suite.c_str());
    for (const auto& n : names) std::fprintf(stderr, " %s", n.c_str());
    std::fprintf(stderr, "\n");
    return 2;
  }

  try {
    const ouspde::SuiteReport rep = ouspde::run_suite(cfg);
    print_report(rep);
    return rep.ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
