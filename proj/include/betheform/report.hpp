// report.hpp — machine-readable record stream and human-readable summary.
//
// Records are tab-separated, one line per identity check, with a fixed
// header; floating-point fields use 17 significant digits so a diff of two
// runs is a bitwise check of every number.  Timestamps and runtimes never
// appear in the record stream, only in the summary.

#pragma once

#include "betheform/formfactor.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace betheform {

inline std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_cplx17(cplx z) { return format_g17(z.real()) + (z.imag() < 0 ? "" : "+") + format_g17(z.imag()) + "i"; }

inline const char* record_header() {
  return "suite\tidentity\tN\tM\tm\tsector_bra\tsector_ket\ti\tj\tz_or_site\t"
         "lhs_re\tlhs_im\trhs_re\trhs_im\tabs_res\trel_res\tpass";
}

inline std::string record_line(const VerificationRecord& r) {
  std::string s;
  s += r.suite + "\t" + r.identity + "\t";
  s += std::to_string(r.N) + "\t" + std::to_string(r.M) + "\t" + std::to_string(r.m) + "\t";
  s += r.sector_bra + "\t" + r.sector_ket + "\t";
  s += std::to_string(r.i) + "\t" + std::to_string(r.j) + "\t" + r.z_or_site + "\t";
  s += format_g17(r.lhs.real()) + "\t" + format_g17(r.lhs.imag()) + "\t";
  s += format_g17(r.rhs.real()) + "\t" + format_g17(r.rhs.imag()) + "\t";
  s += format_g17(r.abs_res) + "\t" + format_g17(r.rel_res) + "\t";
  s += r.pass ? "1" : "0";
  return s;
}

inline void write_records(std::ostream& os, const std::vector<VerificationRecord>& records) {
  os << record_header() << "\n";
  for (const auto& r : records) os << record_line(r) << "\n";
}

struct SummaryRow {
  long count = 0;
  long passed = 0;
  double max_rel = 0.0;
  double runtime_s = 0.0;
};

inline std::map<std::string, SummaryRow> summarize(const std::vector<VerificationRecord>& records) {
  std::map<std::string, SummaryRow> rows;
  for (const auto& r : records) {
    SummaryRow& row = rows[r.suite + "/" + r.identity];
    ++row.count;
    if (r.pass) ++row.passed;
    row.max_rel = std::max(row.max_rel, r.rel_res);
    row.runtime_s += r.runtime_s;
  }
  return rows;
}

inline void write_summary(std::ostream& os, const std::vector<VerificationRecord>& records) {
  const auto rows = summarize(records);
  size_t width = 24;
  for (const auto& [name, row] : rows) width = std::max(width, name.size() + 2);
  os << std::left << std::setw(static_cast<int>(width)) << "identity" << std::right
     << std::setw(8) << "count" << std::setw(8) << "pass" << std::setw(9) << "rate"
     << std::setw(14) << "max_rel" << std::setw(10) << "time_s" << "\n";
  long total = 0, passed = 0;
  for (const auto& [name, row] : rows) {
    os << std::left << std::setw(static_cast<int>(width)) << name << std::right << std::setw(8)
       << row.count << std::setw(8) << row.passed << std::fixed << std::setprecision(3)
       << std::setw(9) << (row.count ? static_cast<double>(row.passed) / static_cast<double>(row.count) : 0.0)
       << std::setw(14) << std::scientific << std::setprecision(2) << row.max_rel << std::fixed
       << std::setprecision(2) << std::setw(10) << row.runtime_s << "\n";
    total += row.count;
    passed += row.passed;
  }
  os << std::left << std::setw(static_cast<int>(width)) << "TOTAL" << std::right << std::setw(8)
     << total << std::setw(8) << passed << std::fixed << std::setprecision(3) << std::setw(9)
     << (total ? static_cast<double>(passed) / static_cast<double>(total) : 0.0) << "\n";
}

inline bool all_pass(const std::vector<VerificationRecord>& records) {
  for (const auto& r : records)
    if (!r.pass) return false;
  return true;
}

}  // namespace betheform
