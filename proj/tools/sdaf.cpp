#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdaf/io.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "experiment config file")->required();
  sub->add_option("--out", args.out, "output directory");
  sub->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
    args.seed_set = true;
  });
  sub->add_option("--override", args.overrides, "config override key=value (repeatable)");
}

int dispatch(const std::string& kind, const CommonArgs& args) {
  try {
    sdaf::KeyValueConfig cfg = sdaf::KeyValueConfig::parse_file(args.config);
    cfg.set("experiment.kind", kind);
    if (args.seed_set) cfg.set("seed", std::to_string(args.seed));
    for (const std::string& ov : args.overrides) {
      const auto eq = ov.find('=');
      if (eq == std::string::npos) {
        fprintf(stderr, "error: --override expects key=value, got '%s'\n", ov.c_str());
        return 1;
      }
      cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    return sdaf::run_experiment(cfg, args.out);
  } catch (const sdaf::Error& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perturbed alpha-Dirac-harmonic maps on flat spin 2-tori"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* kind;
    const char* help;
  };
  const std::vector<Sub> subs = {
      {"solve", "solve", "minimize the alpha-energy in a homotopy class"},
      {"saddle", "saddle", "mountain-pass initialization + Newton for the coupled system"},
      {"continue", "continue", "continuation ladder in alpha and k with the energy monitor"},
      {"flow", "flow", "negative pseudo-gradient flow with per-step contract checks"},
      {"spectrum", "spectrum", "low-lying spectrum of the twisted Dirac operator"},
      {"diagnose", "diagnose", "energies, residuals, lambda_plus, concentration, minimax"},
      {"uniqueness", "uniqueness", "independent-start uniqueness experiment (flat target)"},
      {"convexity", "convexity", "second differences along geodesic homotopies"},
      {"growthcheck", "growthcheck", "sampled growth/decay conditions for a perturbation"},
  };

  std::vector<CommonArgs> args(subs.size());
  std::vector<CLI::App*> apps;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    CLI::App* sub = app.add_subcommand(subs[i].name, subs[i].help);
    add_common(sub, args[i]);
    apps.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (apps[i]->parsed()) return dispatch(subs[i].kind, args[i]);
  }
  return 1;
}
