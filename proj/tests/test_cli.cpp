#include "betheform/cache.hpp"
#include "betheform/config.hpp"
#include "betheform/runner.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

using namespace betheform;

namespace {

std::filesystem::path fresh_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("betheform-test-" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("complex literal parsing", "[cli]") {
  CHECK(parse_complex("1") == cplx{1.0, 0.0});
  CHECK(parse_complex("-2.5") == cplx{-2.5, 0.0});
  CHECK(parse_complex("0.3i") == cplx{0.0, 0.3});
  CHECK(parse_complex("1+2i") == cplx{1.0, 2.0});
  CHECK(parse_complex("1-2i") == cplx{1.0, -2.0});
  CHECK(parse_complex("-1.5e-3+2.5e-2i") == cplx{-1.5e-3, 2.5e-2});
  CHECK(parse_complex("i") == cplx{0.0, 1.0});
  CHECK(parse_complex(" 0.25 + 0.125i ") == cplx{0.25, 0.125});
  CHECK_THROWS_AS(parse_complex("abc"), config_error);
  // 17 significant digits round-trip doubles exactly
  const cplx z{0.1234567890123456789, -3.14159265358979323846e-7};
  CHECK(parse_complex(format_cplx17(z)) == z);
}

TEST_CASE("config files, overrides and validation", "[cli]") {
  RunConfig cfg;
  cfg.set("N", "3");
  cfg.set("M", "4");
  cfg.set("seed", "11");
  cfg.set("sectors", "(1,0);(2,1)");
  cfg.set("suites", "rtt,thm41");
  cfg.finalize();
  CHECK(cfg.sectors.size() == 2);
  CHECK(cfg.suites == std::set<std::string>{"rtt", "thm41"});
  CHECK(cfg.kappa == unit_twist(3));

  CHECK_THROWS_AS(RunConfig{}.set("bogus_key", "1"), config_error);
  CHECK_THROWS_AS(RunConfig{}.set("suites", "nope"), config_error);

  // dense-limit guard: M = 9 at N = 3 exceeds 3^8
  RunConfig big;
  big.set("M", "9");
  CHECK_THROWS_AS(big.finalize(), config_error);

  // sector tuples must match the rank
  RunConfig wrong;
  wrong.set("sectors", "(1,0,0)");
  CHECK_THROWS_AS(wrong.finalize(), config_error);

  // file loading
  const auto dir = fresh_dir("config");
  const auto file = dir / "run.cfg";
  {
    std::ofstream out(file);
    out << "# comment line\n";
    out << "N = 2\n";
    out << "M = 3\n";
    out << "m = 1\n";
    out << "c = 1+0i   # inline comment\n";
    out << "xi = 0.1+0.02i, 0.55+0.1i, 0.9+0.27i\n";
    out << "suites = bethe\n";
  }
  RunConfig fromfile;
  fromfile.load_file(file.string());
  fromfile.finalize();
  CHECK(fromfile.N == 2);
  CHECK(fromfile.xi_mode == "explicit");
  CHECK(fromfile.xi.size() == 3);
}

TEST_CASE("root cache: round trip, revalidation, key sensitivity", "[cli]") {
  const auto dir = fresh_dir("cache");
  const ModelSpec spec = ModelSpec::seeded(3, 3, cplx{1.0, 0.0}, 1, 7);
  const auto kap = std::span<const cplx>(spec.kappa);
  RootStore store(dir.string());

  const auto first = store.solve(spec, {1, 0}, kap, 7, 0, {});
  CHECK(store.misses() == 1);
  CHECK(store.hits() == 0);
  REQUIRE(!first.empty());

  // cache hit skips the multistart and reproduces the roots to the last digit
  const auto second = store.solve(spec, {1, 0}, kap, 7, 0, {});
  CHECK(store.hits() == 1);
  REQUIRE(second.size() == first.size());
  for (size_t k = 0; k < first.size(); ++k) CHECK(second[k].levels == first[k].levels);

  // a 1e-12 perturbation of one inhomogeneity changes the key
  ModelSpec bumped = spec;
  bumped.xi[0] += cplx{1e-12, 0.0};
  CHECK(cache_key_string(spec, {1, 0}, kap) != cache_key_string(bumped, {1, 0}, kap));
  CHECK(store.path_for(cache_key_string(spec, {1, 0}, kap)) !=
        store.path_for(cache_key_string(bumped, {1, 0}, kap)));

  // corrupt entry: warn and recompute
  {
    std::ofstream out(store.path_for(cache_key_string(spec, {1, 0}, kap)));
    out << "{ not json";
  }
  const auto third = store.solve(spec, {1, 0}, kap, 7, 0, {});
  REQUIRE(third.size() == first.size());
  for (size_t k = 0; k < first.size(); ++k) CHECK(third[k].levels == first[k].levels);
}

TEST_CASE("record stream format", "[cli]") {
  VerificationRecord rec;
  rec.suite = "thm41";
  rec.identity = "thm41";
  rec.N = 3;
  rec.M = 4;
  rec.m = 2;
  rec.sector_bra = "(2,0)";
  rec.sector_ket = "(1,0)";
  rec.i = 1;
  rec.j = 2;
  rec.lhs = {0.125, -0.5};
  rec.rhs = {0.125, -0.5};
  rec.pass = true;
  const std::string line = record_line(rec);
  // fixed field count
  CHECK(std::count(line.begin(), line.end(), '\t') == 16);
  std::ostringstream os;
  write_records(os, {rec});
  CHECK(os.str().find(record_header()) == 0);
  CHECK(os.str().find("0.125\t-0.5") != std::string::npos);
}

TEST_CASE("runs are deterministic given (config, seed)", "[cli]") {
  RunConfig cfg;
  cfg.set("N", "3");
  cfg.set("M", "3");
  cfg.set("m", "1");
  cfg.set("seed", "13");
  cfg.set("sectors", "(1,0);(1,1)");
  cfg.set("suites", "bethe,thm42,commutators");
  cfg.finalize();
  const auto dir = fresh_dir("determinism");
  RootStore store(dir.string());
  const RunResult a = run_suites(cfg, &store);   // cold cache
  const RunResult b = run_suites(cfg, &store);   // warm cache
  const RunResult c = run_suites(cfg, nullptr);  // no cache
  REQUIRE(a.records.size() == b.records.size());
  REQUIRE(a.records.size() == c.records.size());
  for (size_t k = 0; k < a.records.size(); ++k) {
    CHECK(record_line(a.records[k]) == record_line(b.records[k]));
    CHECK(record_line(a.records[k]) == record_line(c.records[k]));
  }
}

TEST_CASE("run_and_report writes records and returns the pass status", "[cli]") {
  RunConfig cfg;
  cfg.set("N", "3");
  cfg.set("M", "3");
  cfg.set("m", "1");
  cfg.set("seed", "19");
  cfg.set("sectors", "(1,0)");
  cfg.set("suites", "commutators");
  const auto dir = fresh_dir("report");
  cfg.set("out", (dir / "reports").string());
  cfg.set("cache", (dir / "cache").string());
  cfg.finalize();
  std::ostringstream log;
  const int code = run_and_report(cfg, log);
  CHECK(code == 0);
  CHECK(std::filesystem::exists(dir / "reports" / "records.tsv"));
  CHECK(std::filesystem::exists(dir / "reports" / "summary.txt"));
  CHECK(log.str().find("TOTAL") != std::string::npos);
}

TEST_CASE("parallel fan-out reproduces the serial records", "[cli]") {
  const ModelSpec spec = ModelSpec::seeded(3, 4, cplx{1.0, 0.0}, 2, 7);
  const SectorTable tab(3, 4);
  const Inventory inv = build_inventory(spec, tab, {{1, 0}, {2, 0}}, 7, 0, {});
  const auto serial = suite_thm41(spec, tab, inv, 7, 8, {}, 1);
  const auto parallel = suite_thm41(spec, tab, inv, 7, 8, {}, 4);
  REQUIRE(serial.size() == parallel.size());
  for (size_t k = 0; k < serial.size(); ++k)
    CHECK(record_line(serial[k]) == record_line(parallel[k]));
}
