// ionspam command-line front end: Table-style infidelity predictions,
// deterministic pulse-sequence simulation, SPAM shot generation, and
// classification / error-budget reporting. All randomness derives from the
// --seed flag; identical (config, seed) gives byte-identical output.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ionspam/archive.hpp"
#include "ionspam/detection.hpp"
#include "ionspam/pipeline.hpp"
#include "ionspam/pumpsim.hpp"
#include "ionspam/ratemodel.hpp"
#include "ionspam/species.hpp"
#include "ionspam/stats.hpp"

namespace {

using namespace ionspam;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct OutputTarget {
  std::string path;  // empty = stdout

  void write(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open output file: " + path);
    f << text;
  }
};

std::vector<SpeciesParams> load_merged_species(const std::string& user_file) {
  auto all = builtin_species();
  if (!user_file.empty()) {
    all = merge_species(std::move(all), load_species_file(user_file));
  }
  return all;
}

struct PrepOptions {
  std::string protocol = "nbop";
  int cycles = 35;
  int flushless_tail = 0;
  bool ideal = false;
  double initial_error = 7e-3;  // polarization residual / ideal-mode eps0
  PumpParams pump;
};

Protocol build_protocol(const PrepOptions& o) {
  PumpParams pp = o.pump;
  pp.polarization_residual = o.initial_error;
  if (o.ideal) {
    pp = PumpParams{};
    pp.polarization_residual = 0.0;
    pp.flush_leak = 0.0;
  }
  if (o.protocol == "maop") return build_maop(o.cycles, pp);
  if (o.protocol == "nbop") {
    return build_nbop(o.cycles, flush_first_n(o.cycles, o.cycles - o.flushless_tail), pp);
  }
  if (o.protocol == "polarization") return build_polarization_prep(pp.polarization_residual);
  throw std::invalid_argument("unknown protocol: " + o.protocol);
}

std::vector<std::pair<int, double>> run_prep_series(const PrepOptions& o,
                                                    const SpeciesParams& sp) {
  const StateSpace space(sp, {Manifold::S12, Manifold::D52});
  PopulationVector init =
      o.ideal ? qubit_error_population(space, o.initial_error)
              : delta_population(space, space.qubit_zero());
  return run_prep(build_protocol(o), space, init);
}

void add_prep_options(CLI::App* cmd, PrepOptions& o) {
  cmd->add_option("--protocol", o.protocol, "maop, nbop or polarization")
      ->check(CLI::IsMember({"maop", "nbop", "polarization"}))
      ->capture_default_str();
  cmd->add_option("--cycles", o.cycles, "number of pumping cycles")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--flushless-tail", o.flushless_tail,
                  "final cycles run without the 493 nm flush pulse (nbop)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_flag("--ideal", o.ideal,
                "zero all pulse imperfections; start with the initial error "
                "split over the lower-manifold mF=+-1 sublevels");
  cmd->add_option("--initial-error", o.initial_error,
                  "polarization-prep residual error")
      ->capture_default_str();
  cmd->add_option("--flush-leak", o.pump.flush_leak,
                  "per-pulse off-resonant leak of |0> under the flush beam")
      ->capture_default_str();
  cmd->add_option("--microwave-infidelity", o.pump.microwave_infidelity)
      ->capture_default_str();
  cmd->add_option("--shelve-infidelity", o.pump.shelve_infidelity)
      ->capture_default_str();
}

void add_detection_options(CLI::App* cmd, DetectionConfig& d, ShelvingConfig& s) {
  cmd->add_option("--segments", d.n_segments)->capture_default_str();
  cmd->add_option("--segment-us", d.segment_us)->capture_default_str();
  cmd->add_option("--bright-rate", d.bright_rate_per_us, "counts per us")
      ->capture_default_str();
  cmd->add_option("--dark-rate", d.dark_rate_per_us, "counts per us")
      ->capture_default_str();
  cmd->add_option("--lifetime", d.d52_lifetime_s, "D5/2 lifetime in seconds")
      ->capture_default_str();
  cmd->add_option("--confidence", d.bayes_confidence,
                  "sequential classifier stopping confidence")
      ->capture_default_str();
  cmd->add_option("--threshold", d.threshold_counts,
                  "bright/dark discriminator on total counts")
      ->capture_default_str();
  cmd->add_option("--shelve-fidelity", s.pulse_fidelities,
                  "three cabinet-shelving pulse fidelities")
      ->expected(3);
}

std::string csv_prep_series(const std::vector<std::pair<int, double>>& series) {
  std::ostringstream os;
  os << "cycle,prep_error\n";
  for (const auto& [c, e] : series) os << c << ',' << format_double(e) << '\n';
  return os.str();
}

int run_app(int argc, char** argv) {
  CLI::App app{"trapped-ion hyperfine-qubit SPAM simulator"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI config file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::string species_file;
  std::string species_name = "137Ba+";
  std::uint64_t seed = 1;
  long long trials = 1000;
  int threads = 1;
  bool dump_config = false;
  app.add_option("--species-file", species_file,
                 "species data file merged over built-ins by name");
  app.add_option("--species", species_name, "species name")->capture_default_str();
  app.add_option("--seed", seed, "global RNG seed (no wall-clock seeding)")
      ->capture_default_str();
  app.add_option("--trials", trials, "trials per prepared state")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--threads", threads, "worker threads (affects speed only)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--dump-config", dump_config,
               "print the effective configuration and exit");

  // species
  auto* cmd_species = app.add_subcommand(
      "species", "print the species table in the data-file format");
  OutputTarget species_out;
  cmd_species->add_option("--out", species_out.path, "output path");

  // predict
  auto* cmd_predict = app.add_subcommand(
      "predict", "steady-state preparation error for every species (CSV)");
  OutputTarget predict_out;
  cmd_predict->add_option("--out", predict_out.path, "output path");

  // simulate-prep
  auto* cmd_prep = app.add_subcommand(
      "simulate-prep", "deterministic prep error vs cycle number (CSV)");
  PrepOptions prep_opts;
  OutputTarget prep_out;
  add_prep_options(cmd_prep, prep_opts);
  cmd_prep->add_option("--out", prep_out.path, "output path");

  // simulate-spam
  auto* cmd_spam = app.add_subcommand(
      "simulate-spam", "simulate interleaved SPAM trials into a shot archive");
  PrepOptions spam_prep;
  DetectionConfig spam_det;
  ShelvingConfig spam_shelve;
  double transfer_infidelity = 5.4e-5;
  double burst_rate = 0.0;
  OutputTarget spam_out, hist_out;
  add_prep_options(cmd_spam, spam_prep);
  add_detection_options(cmd_spam, spam_det, spam_shelve);
  cmd_spam->add_option("--transfer-infidelity", transfer_infidelity)
      ->capture_default_str();
  cmd_spam->add_option("--burst-rate", burst_rate,
                       "correlated-error onset probability per trial")
      ->capture_default_str();
  cmd_spam->add_option("--out", spam_out.path, "archive output path");
  cmd_spam->add_option("--hist", hist_out.path, "histogram CSV output path");

  // classify
  auto* cmd_classify = app.add_subcommand(
      "classify", "classify an archive: per-shot labels and flagged decays");
  std::string classify_archive;
  DetectionConfig classify_det;
  ShelvingConfig classify_shelve;
  OutputTarget classify_out;
  cmd_classify->add_option("--archive", classify_archive, "shot archive path")
      ->required();
  add_detection_options(cmd_classify, classify_det, classify_shelve);
  cmd_classify->add_option("--out", classify_out.path, "output path");

  // summarize
  auto* cmd_summarize = app.add_subcommand(
      "summarize", "SPAM infidelity summary with Wilson intervals");
  std::string summarize_archive;
  DetectionConfig summarize_det;
  ShelvingConfig summarize_shelve;
  OutputTarget summarize_out;
  cmd_summarize->add_option("--archive", summarize_archive, "shot archive path")
      ->required();
  add_detection_options(cmd_summarize, summarize_det, summarize_shelve);
  cmd_summarize->add_option("--out", summarize_out.path, "output path");

  // budget
  auto* cmd_budget = app.add_subcommand(
      "budget", "assemble an error-budget table from a components file");
  std::string budget_components;
  OutputTarget budget_out;
  bool budget_csv = false;
  cmd_budget->add_option("--components", budget_components,
                         "CSV: source,state(0|1),value,uncertainty,kind")
      ->required();
  cmd_budget->add_flag("--csv", budget_csv, "emit CSV instead of aligned text");
  cmd_budget->add_option("--out", budget_out.path, "output path");

  // global options may appear after the subcommand name
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help / error message
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  if (dump_config) {
    std::cout << app.config_to_str(true, true);
    return kExitOk;
  }

  const auto all_species = load_merged_species(species_file);

  if (*cmd_species) {
    species_out.write(species_list_to_config(all_species));
    return kExitOk;
  }

  if (*cmd_predict) {
    std::ostringstream os;
    os << "species,nuclear_spin,linewidth_hz,hf_s_hz,hf_p_hz,eps_prep\n";
    for (const auto& s : all_species) {
      os << s.name << ',' << format_double(s.nuclear_spin) << ','
         << format_double(s.linewidth_hz) << ',' << format_double(s.hf_s_hz)
         << ',' << format_double(s.hf_p_hz) << ','
         << format_double(prep_error_steady_state(s)) << '\n';
    }
    predict_out.write(os.str());
    return kExitOk;
  }

  const SpeciesParams species = find_species(all_species, species_name);

  if (*cmd_prep) {
    prep_out.write(csv_prep_series(run_prep_series(prep_opts, species)));
    return kExitOk;
  }

  if (*cmd_spam) {
    SpamPipelineConfig cfg;
    cfg.species = species;
    cfg.protocol = build_protocol(spam_prep);
    cfg.transfer_infidelity = transfer_infidelity;
    cfg.detection = spam_det;
    cfg.shelving = spam_shelve;
    cfg.trials_per_state = trials;
    cfg.seed = seed;
    cfg.threads = threads;
    if (burst_rate > 0) {
      BurstModel bm;
      bm.burst_rate_per_trial = burst_rate;
      cfg.bursts = bm;
    }
    const SpamRunResult res = run_spam_pipeline(cfg);

    std::ostringstream os;
    write_archive(os, res.archive);
    spam_out.write(os.str());

    if (!hist_out.path.empty()) {
      std::map<int, std::pair<long long, long long>> hist;
      for (const auto& r : res.archive) {
        auto& bin = hist[r.total_counts()];
        (r.truth_state == QubitPrep::Zero ? bin.first : bin.second)++;
      }
      std::ostringstream hs;
      hs << "total_counts,prepared_zero,prepared_one\n";
      for (const auto& [k, v] : hist) {
        hs << k << ',' << v.first << ',' << v.second << '\n';
      }
      hist_out.write(hs.str());
    }
    return kExitOk;
  }

  if (*cmd_classify) {
    std::ifstream in(classify_archive);
    if (!in) throw std::invalid_argument("cannot open archive: " + classify_archive);
    const auto recs = read_archive(in);
    std::ostringstream os;
    os << "index,truth,total_counts,threshold_label,bayes_label,"
          "bayes_segments,posterior_dark\n";
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const Label tl = classify_threshold(recs[i], classify_det.threshold_counts);
      const BayesResult br = classify_bayes(recs[i], classify_det);
      os << i << ',' << (recs[i].truth_state == QubitPrep::Zero ? 0 : 1) << ','
         << recs[i].total_counts() << ','
         << (tl == Label::Bright ? "bright" : "dark") << ','
         << (br.label == Label::Bright ? "bright" : "dark") << ','
         << br.segments_used << ',' << format_double(br.posterior_dark) << '\n';
    }
    const auto flagged = flag_decays(recs, classify_det);
    os << "# flagged_decays:";
    for (std::size_t i : flagged) os << ' ' << i;
    os << "\n# flagged_count: " << flagged.size() << '\n';
    classify_out.write(os.str());
    return kExitOk;
  }

  if (*cmd_summarize) {
    std::ifstream in(summarize_archive);
    if (!in) throw std::invalid_argument("cannot open archive: " + summarize_archive);
    const auto recs = read_archive(in);
    std::vector<Label> labels;
    labels.reserve(recs.size());
    for (const auto& r : recs) {
      labels.push_back(classify_threshold(r, summarize_det.threshold_counts));
    }
    const SpamSummary s = spam_summary(tally_labels(recs, labels));
    auto line = [](const char* name, const RateEstimate& r) {
      const double u = 0.5 * (r.interval.high - r.interval.low);
      std::ostringstream os;
      os << name << ": " << format_parenthetical(r.value, u)
         << "  value=" << format_double(r.value)
         << " wilson=[" << format_double(r.interval.low) << ','
         << format_double(r.interval.high) << "]\n";
      return os.str();
    };
    std::string text = line("infidelity_zero", s.zero) +
                       line("infidelity_one", s.one) + line("total", s.total);
    summarize_out.write(text);
    return kExitOk;
  }

  if (*cmd_budget) {
    std::ifstream in(budget_components);
    if (!in) {
      throw std::invalid_argument("cannot open components file: " + budget_components);
    }
    std::vector<BudgetEntry> components;
    std::string bline;
    int lineno = 0;
    while (std::getline(in, bline)) {
      ++lineno;
      if (bline.empty() || bline[0] == '#') continue;
      std::istringstream ls(bline);
      std::string source, state, value, unc, kind;
      if (!std::getline(ls, source, ',') || !std::getline(ls, state, ',') ||
          !std::getline(ls, value, ',') || !std::getline(ls, unc, ',') ||
          !std::getline(ls, kind, ',')) {
        throw std::invalid_argument("components line " + std::to_string(lineno) +
                                    ": expected source,state,value,uncertainty,kind");
      }
      BudgetEntry e;
      e.source = source;
      e.state = state == "0" ? BudgetState::Zero : BudgetState::One;
      e.value = std::stod(value);
      e.uncertainty = std::stod(unc);
      e.kind = kind == "measured" ? BudgetKind::Measured : BudgetKind::Predicted;
      components.push_back(e);
    }
    const ErrorBudget b = build_budget(components);
    std::ostringstream os;
    if (budget_csv) {
      os << "source,state,value,uncertainty,kind\n";
      for (const auto& e : b.entries) {
        os << e.source << ',' << (e.state == BudgetState::Zero ? 0 : 1) << ','
           << format_double(e.value) << ',' << format_double(e.uncertainty)
           << ',' << (e.kind == BudgetKind::Measured ? "measured" : "predicted")
           << '\n';
      }
      os << "predicted_subtotal_zero,0," << format_double(b.predicted_subtotal_zero)
         << ",0,predicted\n";
      os << "predicted_subtotal_one,1," << format_double(b.predicted_subtotal_one)
         << ",0,predicted\n";
    } else {
      os << std::left;
      auto row = [&](const std::string& src, const std::string& z,
                     const std::string& o) {
        os << "  " << std::setw(36) << src << std::setw(18) << z << o << '\n';
      };
      row("Error source", "|0> state", "|1> state");
      for (const auto& e : b.entries) {
        if (is_subtotal_row(e)) continue;
        std::string v = format_parenthetical(e.value, e.uncertainty);
        row(e.source, e.state == BudgetState::Zero ? v : "-",
            e.state == BudgetState::One ? v : "-");
      }
      row("Subtotal (predicted)", format_double(b.predicted_subtotal_zero),
          format_double(b.predicted_subtotal_one));
      if (b.measured_subtotal_zero || b.measured_subtotal_one) {
        row("Subtotal (measured)",
            b.measured_subtotal_zero ? format_double(*b.measured_subtotal_zero) : "-",
            b.measured_subtotal_one ? format_double(*b.measured_subtotal_one) : "-");
      }
      if (b.leftover_zero) {
        os << "  leftover |0> state-preparation bound: "
           << format_double(*b.leftover_zero) << '\n';
      }
      if (!b.consistent) os << "  WARNING: inconsistent inputs (negative leftover)\n";
    }
    budget_out.write(os.str());
    return kExitOk;
  }

  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const CLI::ParseError&) {
    return kExitConfigError;  // CLI11_PARSE inside run_app handles messaging
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}
