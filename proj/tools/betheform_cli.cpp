// betheform command-line driver.
//
//   betheform run          run verification suites, write records + summary
//   betheform list-sectors print the weight sectors of a chain
//   betheform solve-roots  solve the Bethe system in one sector
//   betheform show-cache   list root-cache entries
//   betheform clean-cache  remove root-cache entries
//
// Every subcommand accepts --config FILE (flat key = value text) and
// repeated --set key=value overrides; overrides win.
// Exit codes: 0 all pass, 1 identity failure, 2 config error, 3 internal.

#include "betheform/runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace betheform;

namespace {

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_file, "configuration file (key = value lines)");
  cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set seed=11")
      ->type_name("KEY=VALUE");
}

RunConfig make_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_file.empty()) cfg.load_file(opts.config_file);
  for (const std::string& kv : opts.overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw config_error("override must be key=value: " + kv);
    cfg.set(strip(kv.substr(0, eq)), strip(kv.substr(eq + 1)));
  }
  cfg.finalize();
  return cfg;
}

ModelSpec spec_from(const RunConfig& cfg) {
  if (cfg.xi_mode == "explicit") {
    ModelSpec spec;
    spec.N = cfg.N;
    spec.M = cfg.M;
    spec.c = Coupling{cfg.c};
    spec.m = cfg.m;
    spec.xi = cfg.xi;
    spec.kappa = cfg.kappa;
    spec.max_dim = cfg.max_dim;
    spec.validate(cfg.tols);
    return spec;
  }
  ModelSpec spec = ModelSpec::seeded(cfg.N, cfg.M, cfg.c, cfg.m, cfg.seed, cfg.max_dim);
  spec.kappa = cfg.kappa;
  spec.validate(cfg.tols);
  return spec;
}

int cmd_list_sectors(const CommonOpts& opts) {
  const RunConfig cfg = make_config(opts);
  const auto sectors = enumerate_sectors(cfg.N, cfg.M, cfg.max_dim);
  std::cout << "sectors of the rank-" << cfg.N << " chain with " << cfg.M << " sites:\n";
  std::cout << "occupations\tcardinalities\tdim\n";
  long total = 0;
  for (const auto& sec : sectors) {
    std::cout << format_cards(sec.occupations) << "\t"
              << format_cards(levels_from_occupations(sec.occupations)) << "\t" << sec.dim()
              << "\n";
    total += sec.dim();
  }
  std::cout << "total dimension " << total << "\n";
  return 0;
}

int cmd_solve_roots(const CommonOpts& opts, const std::string& sector_text, bool no_cache) {
  const RunConfig cfg = make_config(opts);
  const ModelSpec spec = spec_from(cfg);
  const std::vector<int> cards = parse_sector(sector_text);
  if (static_cast<int>(cards.size()) != cfg.N - 1)
    throw config_error("sector tuple must have N-1 entries");
  RootStore store(cfg.cache_dir);
  const auto roots = store.solve(spec, cards, std::span<const cplx>(spec.kappa), cfg.seed,
                                 cfg.n_starts, cfg.tols, !no_cache);
  std::cout << "sector " << format_cards(cards) << ": " << roots.size()
            << " admissible root set(s)\n";
  for (size_t r = 0; r < roots.size(); ++r) {
    std::cout << "#" << r << "  residual " << format_g17(roots[r].residual) << "\n";
    for (size_t lv = 0; lv < roots[r].levels.size(); ++lv) {
      std::cout << "  level " << lv + 1 << ":";
      for (cplx z : roots[r].levels[lv]) std::cout << " " << format_cplx17(z);
      std::cout << "\n";
    }
  }
  std::cout << "cache " << store.dir() << " (hits " << store.hits() << ", misses "
            << store.misses() << ")\n";
  return 0;
}

int cmd_show_cache(const CommonOpts& opts) {
  const RunConfig cfg = make_config(opts);
  RootStore store(cfg.cache_dir);
  namespace fs = std::filesystem;
  if (!fs::exists(store.dir())) {
    std::cout << "cache directory " << store.dir() << " does not exist\n";
    return 0;
  }
  size_t n = 0;
  for (const auto& entry : fs::directory_iterator(store.dir())) {
    if (entry.path().extension() != ".json") continue;
    try {
      nlohmann::json j;
      std::ifstream in(entry.path());
      in >> j;
      std::cout << entry.path().filename().string() << "  schema " << j.value("schema_version", -1)
                << "  sector " << format_cards(j.value("sector", std::vector<int>{})) << "  roots "
                << j.at("roots").size() << "\n";
    } catch (...) {
      std::cout << entry.path().filename().string() << "  (unreadable)\n";
    }
    ++n;
  }
  std::cout << n << " entr" << (n == 1 ? "y" : "ies") << " in " << store.dir() << "\n";
  return 0;
}

int cmd_clean_cache(const CommonOpts& opts) {
  const RunConfig cfg = make_config(opts);
  RootStore store(cfg.cache_dir);
  namespace fs = std::filesystem;
  size_t n = 0;
  if (fs::exists(store.dir()))
    for (const auto& entry : fs::directory_iterator(store.dir()))
      if (entry.path().extension() == ".json") {
        fs::remove(entry.path());
        ++n;
      }
  std::cout << "removed " << n << " cache entr" << (n == 1 ? "y" : "ies") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GL(N) spin-chain form-factor verification laboratory"};
  app.require_subcommand(1);

  CommonOpts run_opts, ls_opts, solve_opts, show_opts, clean_opts;
  std::string sector_text = "(1,0)";
  bool no_cache = false;

  CLI::App* run_cmd = app.add_subcommand("run", "run the verification suites");
  add_common(run_cmd, run_opts);
  CLI::App* ls_cmd = app.add_subcommand("list-sectors", "print weight sectors");
  add_common(ls_cmd, ls_opts);
  CLI::App* solve_cmd = app.add_subcommand("solve-roots", "solve one sector's Bethe system");
  add_common(solve_cmd, solve_opts);
  solve_cmd->add_option("--sector", sector_text, "level cardinalities, e.g. (2,1)");
  solve_cmd->add_flag("--no-cache", no_cache, "bypass the root cache");
  CLI::App* show_cmd = app.add_subcommand("show-cache", "list root-cache entries");
  add_common(show_cmd, show_opts);
  CLI::App* clean_cmd = app.add_subcommand("clean-cache", "remove root-cache entries");
  add_common(clean_cmd, clean_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return run_and_report(make_config(run_opts), std::cout);
    if (ls_cmd->parsed()) return cmd_list_sectors(ls_opts);
    if (solve_cmd->parsed()) return cmd_solve_roots(solve_opts, sector_text, no_cache);
    if (show_cmd->parsed()) return cmd_show_cache(show_opts);
    if (clean_cmd->parsed()) return cmd_clean_cache(clean_opts);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
