#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ionspam {

// Full-precision double formatting used by every text interface.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

enum class Manifold { S12, P12, P32, D32, D52 };

inline double manifold_j(Manifold m) {
  switch (m) {
    case Manifold::S12: return 0.5;
    case Manifold::P12: return 0.5;
    case Manifold::P32: return 1.5;
    case Manifold::D32: return 1.5;
    case Manifold::D52: return 2.5;
  }
  throw std::invalid_argument("unknown manifold");
}

inline std::string manifold_name(Manifold m) {
  switch (m) {
    case Manifold::S12: return "S1/2";
    case Manifold::P12: return "P1/2";
    case Manifold::P32: return "P3/2";
    case Manifold::D32: return "D3/2";
    case Manifold::D52: return "D5/2";
  }
  return "?";
}

// One magnetic sublevel |manifold, F, mF>.
struct ZeemanState {
  Manifold manifold;
  int f;
  int mf;

  auto operator<=>(const ZeemanState&) const = default;
};

inline std::string state_name(const ZeemanState& z) {
  return manifold_name(z.manifold) + ",F=" + std::to_string(z.f) +
         ",mF=" + std::to_string(z.mf);
}

// Tabulated per-isotope constants. Frequencies are plain Hz (not angular);
// every formula here uses ratios of like quantities so the 2*pi convention
// cancels.
struct SpeciesParams {
  std::string name;
  double nuclear_spin = 0.0;  // I, half-integer
  double linewidth_hz = 0.0;  // Gamma/2pi of the cycling transition
  double hf_s_hz = 0.0;       // ground-state hyperfine splitting
  double hf_p_hz = 0.0;       // excited P-state hyperfine splitting
  double eta_up = 0.0;        // branching P(F'+1) -> S(F+1)
  double eta_cross = 0.0;     // branching P(F') -> S(F+1)
  double eta_flush = 0.0;     // branching P(F'+1) -> S(F)
  std::optional<double> d52_lifetime_s;       // metastable D5/2 lifetime
  std::optional<double> deshelve_branch_f1;   // P3/2,F=0 -> S1/2,F=1 fraction

  // qubit lives in the lower ground-state hyperfine manifold
  int f_lower() const { return static_cast<int>(std::lround(nuclear_spin - 0.5)); }
  int f_upper() const { return f_lower() + 1; }

  void validate() const {
    auto fail = [&](const std::string& msg) {
      throw std::invalid_argument("species '" + name + "': " + msg);
    };
    if (name.empty()) fail("name must be non-empty");
    const double twice_i = 2.0 * nuclear_spin;
    if (std::abs(twice_i - std::lround(twice_i)) > 1e-9 ||
        std::lround(twice_i) % 2 == 0 || nuclear_spin < 1.5) {
      fail("nuclear_spin must be a half-integer >= 3/2");
    }
    if (!(linewidth_hz > 0)) fail("linewidth_hz must be > 0");
    if (!(hf_s_hz > 0)) fail("hf_s_hz must be > 0");
    if (hf_p_hz < 0) fail("hf_p_hz must be >= 0");
    if (!(hf_s_hz > hf_p_hz)) fail("hf_s_hz must exceed hf_p_hz");
    for (double eta : {eta_up, eta_cross, eta_flush}) {
      if (eta < 0 || eta > 1) fail("branching fractions must lie in [0,1]");
    }
    if (d52_lifetime_s && !(*d52_lifetime_s > 0)) fail("d52_lifetime_s must be > 0");
    if (deshelve_branch_f1 && (*deshelve_branch_f1 < 0 || *deshelve_branch_f1 > 1)) {
      fail("deshelve_branch_f1 must lie in [0,1]");
    }
  }
};

inline std::vector<SpeciesParams> builtin_species() {
  auto row = [](std::string name, double i, double eta_up, double eta_cross,
                double gamma_mhz, double hf_s_ghz, double hf_p_ghz) {
    SpeciesParams s;
    s.name = std::move(name);
    s.nuclear_spin = i;
    s.linewidth_hz = gamma_mhz * 1e6;
    s.hf_s_hz = hf_s_ghz * 1e9;
    s.hf_p_hz = hf_p_ghz * 1e9;
    s.eta_up = eta_up;
    s.eta_cross = eta_cross;
    s.eta_flush = 1.0 - eta_up;  // P(F'+1) decays only to S(F) and S(F+1)
    return s;
  };
  std::vector<SpeciesParams> all;
  all.push_back(row("9Be+", 1.5, 1.0 / 2, 5.0 / 6, 22.4, 1.25, 0.194));
  all.push_back(row("25Mg+", 2.5, 4.0 / 9, 7.0 / 9, 42.4, 1.788, 0.307));
  all.push_back(row("43Ca+", 3.5, 5.0 / 12, 3.0 / 4, 22.4, 3.226, 0.581));
  all.push_back(row("87Sr+", 4.5, 2.0 / 5, 11.0 / 15, 21.5, 5.0, 0.89));
  all.push_back(row("135Ba+", 1.5, 1.0 / 2, 5.0 / 6, 20.1, 7.18, 1.33));
  all.push_back(row("137Ba+", 1.5, 1.0 / 2, 5.0 / 6, 20.1, 8.03, 1.49));
  all.push_back(row("173Yb+", 2.5, 4.0 / 9, 7.0 / 9, 19.7, 10.5, 1.85));
  for (auto& s : all) {
    if (s.name == "135Ba+" || s.name == "137Ba+") {
      s.d52_lifetime_s = 30.1;
      s.deshelve_branch_f1 = 0.738;
    }
  }
  return all;
}

inline SpeciesParams find_species(const std::vector<SpeciesParams>& list,
                                  const std::string& name) {
  for (const auto& s : list) {
    if (s.name == name) return s;
  }
  throw std::invalid_argument("unknown species: " + name);
}

// Deterministic, sorted enumeration of all sublevels allowed by I and the
// manifold's J. F runs |J-I| .. J+I, mF runs -F .. F.
inline std::vector<ZeemanState> enumerate_sublevels(
    const SpeciesParams& species, const std::set<Manifold>& manifolds) {
  species.validate();
  if (manifolds.empty()) {
    throw std::invalid_argument("manifold set must be non-empty");
  }
  std::vector<ZeemanState> out;
  for (Manifold m : manifolds) {
    const double j = manifold_j(m);
    const double i = species.nuclear_spin;
    const int f_min = static_cast<int>(std::lround(std::abs(j - i)));
    const int f_max = static_cast<int>(std::lround(j + i));
    for (int f = f_min; f <= f_max; ++f) {
      for (int mf = -f; mf <= f; ++mf) {
        out.push_back({m, f, mf});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Species data file: one [name] section per species, key = value lines,
// '#' comments. Frequencies carry units in the key names.

inline std::string species_to_config(const SpeciesParams& s) {
  std::ostringstream os;
  os << "[" << s.name << "]\n";
  os << "nuclear_spin = " << format_double(s.nuclear_spin) << "\n";
  os << "linewidth_hz = " << format_double(s.linewidth_hz) << "\n";
  os << "hf_s_hz = " << format_double(s.hf_s_hz) << "\n";
  os << "hf_p_hz = " << format_double(s.hf_p_hz) << "\n";
  os << "eta_up = " << format_double(s.eta_up) << "\n";
  os << "eta_cross = " << format_double(s.eta_cross) << "\n";
  os << "eta_flush = " << format_double(s.eta_flush) << "\n";
  if (s.d52_lifetime_s) {
    os << "d52_lifetime_s = " << format_double(*s.d52_lifetime_s) << "\n";
  }
  if (s.deshelve_branch_f1) {
    os << "deshelve_branch_f1 = " << format_double(*s.deshelve_branch_f1) << "\n";
  }
  return os.str();
}

inline std::string species_list_to_config(const std::vector<SpeciesParams>& list) {
  std::ostringstream os;
  os << "# ionspam species data, format v1\n";
  os << "# frequencies are plain Hz (Gamma/2pi convention, not angular)\n";
  for (const auto& s : list) {
    os << "\n" << species_to_config(s);
  }
  return os.str();
}

inline std::vector<SpeciesParams> parse_species_config(std::istream& in) {
  std::vector<SpeciesParams> out;
  SpeciesParams cur;
  bool open = false;
  auto flush_section = [&]() {
    if (open) {
      cur.validate();
      out.push_back(cur);
      cur = SpeciesParams{};
    }
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw std::invalid_argument("species file line " + std::to_string(lineno) +
                                    ": malformed section header");
      }
      flush_section();
      cur.name = line.substr(1, line.size() - 2);
      open = true;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos || !open) {
      throw std::invalid_argument("species file line " + std::to_string(lineno) +
                                  ": expected 'key = value' inside a section");
    }
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string valstr = line.substr(eq + 1);
    valstr.erase(0, valstr.find_first_not_of(" \t"));
    double val = 0;
    try {
      std::size_t pos = 0;
      val = std::stod(valstr, &pos);
      if (pos != valstr.size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw std::invalid_argument("species file line " + std::to_string(lineno) +
                                  ": bad numeric value for '" + key + "'");
    }
    if (key == "nuclear_spin") cur.nuclear_spin = val;
    else if (key == "linewidth_hz") cur.linewidth_hz = val;
    else if (key == "hf_s_hz") cur.hf_s_hz = val;
    else if (key == "hf_p_hz") cur.hf_p_hz = val;
    else if (key == "eta_up") cur.eta_up = val;
    else if (key == "eta_cross") cur.eta_cross = val;
    else if (key == "eta_flush") cur.eta_flush = val;
    else if (key == "d52_lifetime_s") cur.d52_lifetime_s = val;
    else if (key == "deshelve_branch_f1") cur.deshelve_branch_f1 = val;
    else {
      throw std::invalid_argument("species file line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    }
  }
  flush_section();
  return out;
}

inline std::vector<SpeciesParams> load_species_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open species file: " + path);
  return parse_species_config(in);
}

// Merge user-supplied species over built-ins by name; new names append.
inline std::vector<SpeciesParams> merge_species(
    std::vector<SpeciesParams> base, const std::vector<SpeciesParams>& extra) {
  for (const auto& e : extra) {
    bool replaced = false;
    for (auto& b : base) {
      if (b.name == e.name) {
        b = e;
        replaced = true;
        break;
      }
    }
    if (!replaced) base.push_back(e);
  }
  return base;
}

}  // namespace ionspam
