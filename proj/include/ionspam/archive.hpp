#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ionspam/detection.hpp"
#include "ionspam/species.hpp"  // format_double

namespace ionspam {

// Newline-delimited shot archive:
//   index,truth(0|1),c0,...,c{n-1},decay_time_us
// with the decay field empty when the ion did not decay.
inline void write_archive(std::ostream& out,
                          const std::vector<ShotRecord>& recs) {
  out << "# ionspam shot archive v1\n";
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    out << i << ',' << (r.truth_state == QubitPrep::Zero ? '0' : '1');
    for (int c : r.segment_counts) out << ',' << c;
    out << ',';
    if (r.truth_decay_time_us) out << format_double(*r.truth_decay_time_us);
    out << '\n';
  }
}

inline std::vector<ShotRecord> read_archive(std::istream& in) {
  std::vector<ShotRecord> recs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() < 4) {
      throw std::invalid_argument("archive line " + std::to_string(lineno) +
                                  ": too few fields");
    }
    ShotRecord r;
    r.truth_state = fields[1] == "0" ? QubitPrep::Zero : QubitPrep::One;
    if (fields[1] != "0" && fields[1] != "1") {
      throw std::invalid_argument("archive line " + std::to_string(lineno) +
                                  ": truth label must be 0 or 1");
    }
    for (std::size_t i = 2; i + 1 < fields.size(); ++i) {
      r.segment_counts.push_back(std::stoi(fields[i]));
    }
    if (!fields.back().empty()) {
      r.truth_decay_time_us = std::stod(fields.back());
    }
    recs.push_back(std::move(r));
  }
  return recs;
}

}  // namespace ionspam
