#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hemoreduce/hemoreduce.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string method;
  bool quiet = false;
};

int fail(hr_status st, const std::string& msg) {
  std::cerr << "hemoreduce: " << msg << '\n';
  return hr_exit_code(st);
}

int run(const std::string& command, const Options& o) {
  char err[1024] = {0};
  hr_pipeline* p = nullptr;
  hr_status st = hr_pipeline_create(o.config.empty() ? nullptr : o.config.c_str(), &p, err, sizeof(err));
  if (st != HR_OK) return fail(st, err);
  if (!o.out.empty()) st = hr_pipeline_set_output(p, o.out.c_str());
  if (st == HR_OK && o.seed_set) st = hr_pipeline_set_train_seed(p, o.seed);
  if (st == HR_OK) st = hr_pipeline_set_verbose(p, o.quiet ? 0 : 1);
  if (st == HR_OK) {
    if (command == "generate") st = hr_generate(p);
    else if (command == "pod") st = hr_pod(p);
    else if (command == "rom") st = hr_rom(p, o.method.c_str());
    else if (command == "evaluate") st = hr_evaluate(p);
    else if (command == "config") std::cout << hr_pipeline_config_json(p) << '\n';
  }
  const int code = st == HR_OK ? 0 : fail(st, hr_pipeline_last_error(p));
  hr_pipeline_destroy(p);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order models of pulsatile flow in a 2D T-junction"};
  app.set_version_flag("--version", hr_version());
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration (JSON); built-in defaults when omitted");
    sub->add_option("--out", o.out, "Output directory (overrides output.dir)");
    sub->add_option("--seed", o.seed, "Training-signal seed (overrides signals.train.seed)")
        ->each([&](const std::string&) { o.seed_set = true; });
    sub->add_flag("-q,--quiet", o.quiet, "Suppress progress output");
  };
  common(app.add_subcommand("generate", "Run the full-order model for the training and test signals"));
  common(app.add_subcommand("pod", "Build velocity and pressure POD bases"));
  auto* rom = app.add_subcommand("rom", "Build and run a reduced-order model on the test signal");
  common(rom);
  rom->add_option("--method", o.method, "galerkin or esn")->required()->check(CLI::IsMember({"galerkin", "esn"}));
  common(app.add_subcommand("evaluate", "Error series, timing report and VTK exports"));
  common(app.add_subcommand("config", "Print the effective configuration"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(app.get_subcommands().front()->get_name(), o);
}
