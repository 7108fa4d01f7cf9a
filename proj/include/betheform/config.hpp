// config.hpp — run configuration: a flat key = value text file with complex
// literals written as "a+bi", plus command-line overrides using the same
// key/value syntax.  Rejected configurations never start a partial run.

#pragma once

#include "betheform/algebra.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace betheform {

struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

inline std::string strip(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

namespace detail_cfg {
inline double to_double(const std::string& s, size_t* used, const std::string& original) {
  try {
    return std::stod(s, used);
  } catch (const std::exception&) {
    throw config_error("bad complex literal: " + original);
  }
}
}  // namespace detail_cfg

// Complex literal "a+bi" (also "a", "bi", "a-bi", exponents allowed).
inline cplx parse_complex(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw config_error("empty complex literal");
  if (s.back() != 'i' && s.back() != 'I') {
    size_t used = 0;
    const double re = detail_cfg::to_double(s, &used, text);
    if (used != s.size()) throw config_error("bad complex literal: " + text);
    return {re, 0.0};
  }
  s.pop_back();  // trailing i
  if (s.empty() || s == "+") return {0.0, 1.0};
  if (s == "-") return {0.0, -1.0};
  // Split at the last +/- that is not part of an exponent and not leading.
  size_t split = std::string::npos;
  for (size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string::npos) {
    size_t used = 0;
    const double im = detail_cfg::to_double(s, &used, text);
    if (used != s.size()) throw config_error("bad complex literal: " + text);
    return {0.0, im};
  }
  size_t used = 0;
  const double re = detail_cfg::to_double(s.substr(0, split), &used, text);
  if (used != split) throw config_error("bad complex literal: " + text);
  std::string imtext = s.substr(split);
  if (imtext == "+") return {re, 1.0};
  if (imtext == "-") return {re, -1.0};
  const double im = detail_cfg::to_double(imtext, &used, text);
  if (used != imtext.size()) throw config_error("bad complex literal: " + text);
  return {re, im};
}

inline std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == sep) {
      if (!strip(cur).empty()) out.push_back(strip(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!strip(cur).empty()) out.push_back(strip(cur));
  return out;
}

// "(1,0)" -> {1,0}
inline std::vector<int> parse_sector(const std::string& text) {
  std::string s = strip(text);
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') throw config_error("bad sector: " + text);
  std::vector<int> cards;
  for (const std::string& part : split_list(s.substr(1, s.size() - 2), ','))
    cards.push_back(std::stoi(part));
  return cards;
}

inline const std::set<std::string>& known_suites() {
  static const std::set<std::string> s{"rtt",     "bethe",       "thm41",    "thm42", "lemma51",
                                       "local",   "commutators", "morphism", "glN"};
  return s;
}

struct RunConfig {
  int N = 3;
  int M = 4;
  cplx c{1.0, 0.0};
  int m = 2;
  std::uint64_t seed = 7;
  std::string xi_mode = "seeded";  // seeded | explicit
  std::vector<cplx> xi;            // used when xi_mode == explicit
  std::vector<cplx> kappa;         // empty -> all ones
  std::vector<std::vector<int>> sectors;  // empty -> rank-dependent default
  std::vector<int> lemma_sector;          // empty -> rank-dependent default
  std::set<std::string> suites = known_suites();
  int n_starts = 0;  // 0 -> 50 per root
  int n_beta = 5;
  int n_z = 10;
  long max_dim = 6561;
  int parallelism = 1;
  std::string out_dir = "reports";
  std::string cache_dir = "root-cache";
  Tolerances tols{};

  std::vector<std::vector<int>> default_sectors() const {
    if (N == 2) return {{0}, {1}, {2}};
    if (N == 3) return {{0, 0}, {1, 0}, {1, 1}, {2, 0}, {2, 1}};
    std::vector<int> vacuum(static_cast<size_t>(N - 1), 0);
    std::vector<int> one_root = vacuum;
    one_root[0] = 1;
    return {vacuum, one_root};
  }
  std::vector<int> default_lemma_sector() const {
    if (N == 2) return {2};
    if (N == 3) return {2, 1};
    std::vector<int> cards(static_cast<size_t>(N - 1), 0);
    cards[0] = 1;
    return cards;
  }

  void set(const std::string& key, const std::string& value) {
    if (key == "N") N = std::stoi(value);
    else if (key == "M") M = std::stoi(value);
    else if (key == "c") c = parse_complex(value);
    else if (key == "m") m = std::stoi(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "xi_mode") xi_mode = value;
    else if (key == "xi") {
      xi.clear();
      for (const auto& part : split_list(value, ',')) xi.push_back(parse_complex(part));
      xi_mode = "explicit";
    } else if (key == "kappa") {
      kappa.clear();
      for (const auto& part : split_list(value, ',')) kappa.push_back(parse_complex(part));
    } else if (key == "sectors") {
      sectors.clear();
      for (const auto& part : split_list(value, ';')) sectors.push_back(parse_sector(part));
    } else if (key == "lemma_sector") {
      lemma_sector = parse_sector(value);
    } else if (key == "suites") {
      suites.clear();
      for (const auto& part : split_list(value, ',')) {
        if (!known_suites().count(part)) throw config_error("unknown suite: " + part);
        suites.insert(part);
      }
    } else if (key == "n_starts") n_starts = std::stoi(value);
    else if (key == "n_beta") n_beta = std::stoi(value);
    else if (key == "n_z") n_z = std::stoi(value);
    else if (key == "max_dim") max_dim = std::stol(value);
    else if (key == "parallelism") parallelism = std::stoi(value);
    else if (key == "out") out_dir = value;
    else if (key == "cache") cache_dir = value;
    else if (key == "tol_root") tols.root = std::stod(value);
    else if (key == "tol_match") tols.match = std::stod(value);
    else if (key == "tol_distinct") tols.distinct = std::stod(value);
    else if (key == "tol_degenerate") tols.degenerate = std::stod(value);
    else if (key == "tol_pairing") tols.pairing = std::stod(value);
    else if (key == "tol_denominator") tols.denominator = std::stod(value);
    else throw config_error("unknown config key: " + key);
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      const std::string stripped = strip(line);
      if (stripped.empty()) continue;
      const size_t eq = stripped.find('=');
      if (eq == std::string::npos)
        throw config_error(path + ":" + std::to_string(lineno) + ": expected key = value");
      set(strip(stripped.substr(0, eq)), strip(stripped.substr(eq + 1)));
    }
  }

  // Full validation against module preconditions; throws config_error.
  void finalize() {
    if (N < 2 || N > 6) throw config_error("rank N out of supported range [2,6]");
    if (M < 2) throw config_error("need at least 2 sites for a composite split");
    double dim = 1;
    for (int k = 0; k < M; ++k) dim *= N;
    if (dim > static_cast<double>(max_dim))
      throw config_error("N^M exceeds the dense limit " + std::to_string(max_dim));
    if (m < 1 || m >= M) throw config_error("split site m must satisfy 1 <= m < M");
    if (std::abs(c) == 0.0) throw config_error("coupling c must be nonzero");
    if (xi_mode == "explicit" && static_cast<int>(xi.size()) != M)
      throw config_error("explicit xi list must have M entries");
    if (xi_mode != "explicit" && xi_mode != "seeded") throw config_error("xi_mode must be seeded|explicit");
    if (kappa.empty()) kappa = unit_twist(N);
    if (static_cast<int>(kappa.size()) != N) throw config_error("kappa must have N entries");
    if (sectors.empty()) sectors = default_sectors();
    for (const auto& cards : sectors) {
      if (static_cast<int>(cards.size()) != N - 1)
        throw config_error("sector " + std::to_string(cards.size()) + "-tuple does not match rank");
      for (size_t k = 0; k + 1 < cards.size(); ++k)
        if (cards[k] < cards[k + 1]) throw config_error("sector cardinalities must be non-increasing");
      if (!cards.empty() && (cards[0] > M || cards.back() < 0)) throw config_error("sector out of range");
    }
    if (lemma_sector.empty()) lemma_sector = default_lemma_sector();
    if (n_beta < 0 || n_z < 3) throw config_error("need n_beta >= 0 and n_z >= 3");
    if (parallelism < 1) throw config_error("parallelism must be >= 1");
  }
};

}  // namespace betheform
