// lvef: command-line front end for LVEF fusion, error calibration and
// survival uncertainty propagation.
//
// Exit status: 0 success, 1 usage error, 2 data validation error,
// 3 numerical failure (diagnostic JSON on stderr).

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lvef/calibration.hpp"
#include "lvef/cohort_io.hpp"
#include "lvef/cohort_sim.hpp"
#include "lvef/errors.hpp"
#include "lvef/fusion.hpp"
#include "lvef/propagation.hpp"
#include "lvef/report.hpp"
#include "lvef/survival.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string input = "-";
  std::string output;  // directory; empty means stdout where supported
  std::uint64_t seed = 0;
  std::size_t replicates = 1000;
  double horizon = 365.0;
  std::string bands = "35,50";
  double sigma_visual = 18.1;
  double sigma_simpson = 8.8;
  std::string mode = "paper-sd";
  std::string source = "all";
  unsigned threads = 0;
};

lvef::BandEdges parse_bands(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw lvef::Error(lvef::ErrorCode::invalid_parameter, "--bands expects LOW,HIGH");
  }
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw lvef::Error(lvef::ErrorCode::invalid_parameter, "--bands expects two numbers");
  }
}

lvef::InstrumentSigma sigmas_of(const CommonOptions& o) {
  lvef::InstrumentSigma s{o.sigma_visual, o.sigma_simpson, lvef::parse_fusion_mode(o.mode)};
  s.validate();
  return s;
}

std::vector<lvef::LvefSource> sources_of(const CommonOptions& o) {
  if (o.source == "all") return {lvef::kSources.begin(), lvef::kSources.end()};
  return {lvef::parse_source(o.source)};
}

lvef::CohortData load_cohort(const std::string& input) {
  lvef::CohortData data = input == "-" ? lvef::parse_cohort_csv(std::cin)
                                       : lvef::read_cohort_csv(input);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
  return data;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lvef::Error(lvef::ErrorCode::io, "cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw lvef::Error(lvef::ErrorCode::io, "failed writing " + path.string());
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw lvef::Error(lvef::ErrorCode::io, "cannot create directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

// Writes to <output>/<name>, or to stdout when no output directory was given.
void emit(const CommonOptions& o, const std::string& name, const std::string& content) {
  if (o.output.empty()) {
    std::cout << content;
    return;
  }
  const fs::path path = ensure_dir(o.output) / name;
  write_file(path, content);
  std::cerr << "wrote " << path.string() << '\n';
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

lvef::PropagationConfig propagation_config(const CommonOptions& o, lvef::LvefSource source) {
  lvef::PropagationConfig pc;
  pc.source = source;
  pc.replicates = o.replicates;
  pc.horizon = o.horizon;
  pc.band_edges = parse_bands(o.bands);
  pc.sigmas = sigmas_of(o);
  pc.seed = o.seed;
  pc.threads = o.threads;
  pc.validate();
  return pc;
}

int cmd_fuse(const CommonOptions& o) {
  const auto data = load_cohort(o.input);
  const auto fused = lvef::fuse_cohort(data.records, sigmas_of(o));
  std::ostringstream out;
  lvef::write_fused_csv(out, data.records, fused);
  emit(o, "fused.csv", out.str());
  return 0;
}

struct CalibrationFlags {
  double likelihood_shape = lvef::CalibrationConfig{}.likelihood_shape;
  std::size_t chain_length = lvef::CalibrationConfig{}.chain_length;
  std::size_t kept = lvef::CalibrationConfig{}.kept_samples;
  std::size_t burn_in = lvef::CalibrationConfig{}.burn_in;
  double proposal_scale = 0.0;
  bool no_tune = false;
};

int cmd_calibrate(const CommonOptions& o, const CalibrationFlags& f) {
  auto make = [&](double observed) {
    auto c = lvef::CalibrationConfig::with_defaults(observed);
    c.likelihood_shape = f.likelihood_shape;
    c.chain_length = f.chain_length;
    c.kept_samples = f.kept;
    c.burn_in = f.burn_in;
    if (f.proposal_scale > 0.0) c.proposal_sd = f.proposal_scale * observed;
    c.tune_proposal = !f.no_tune;
    return c;
  };
  const auto mode = lvef::parse_fusion_mode(o.mode);
  const auto visual = make(o.sigma_visual);
  const auto simpson = make(o.sigma_simpson);
  const auto run = lvef::run_error_calibration(visual, simpson, mode, o.seed);

  json doc = lvef::to_json(run);
  doc["config"] = {{"seed", o.seed},
                   {"mode", lvef::to_string(mode)},
                   {"observed_sigma", {{"visual", o.sigma_visual}, {"simpson", o.sigma_simpson}}},
                   {"likelihood_shape", f.likelihood_shape},
                   {"prior", {{"shape", visual.prior_shape}, {"rate", visual.prior_rate}}},
                   {"chain_length", f.chain_length},
                   {"kept_samples", f.kept},
                   {"burn_in", f.burn_in},
                   {"tune_proposal", !f.no_tune}};
  doc["point_relative_reduction"] =
      lvef::relative_reduction({o.sigma_visual, o.sigma_simpson, mode});
  emit(o, "posterior_summary.json", doc.dump(2) + "\n");
  for (const auto& w : run.visual.warnings) std::cerr << "warning: visual: " << w << '\n';
  for (const auto& w : run.simpson.warnings) std::cerr << "warning: simpson: " << w << '\n';
  return 0;
}

int cmd_km(const CommonOptions& o) {
  const auto data = load_cohort(o.input);
  const auto fused = lvef::fuse_cohort(data.records, sigmas_of(o));
  json doc = {{"horizon_days", o.horizon}, {"sources", json::object()}};
  for (auto source : sources_of(o)) {
    const auto point = lvef::point_analysis(data.records, fused, propagation_config(o, source));
    json strata = lvef::to_json(point)["strata"];
    doc["sources"][std::string(lvef::to_string(source))] = strata;
  }
  emit(o, "km.json", doc.dump(2) + "\n");
  return 0;
}

int cmd_cox(const CommonOptions& o) {
  const auto data = load_cohort(o.input);
  const auto fused = lvef::fuse_cohort(data.records, sigmas_of(o));
  json doc = {{"sources", json::object()}};
  int status = 0;
  for (auto source : sources_of(o)) {
    std::vector<lvef::SurvivalRecord> records;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
      const auto& m = data.records[i];
      const double x = source == lvef::LvefSource::visual    ? m.visual_lvef
                       : source == lvef::LvefSource::simpson ? m.simpson_lvef
                                                             : fused[i].theta;
      records.push_back({m.time_days, m.event, x});
    }
    const std::string name(lvef::to_string(source));
    try {
      doc["sources"][name] = lvef::to_json(lvef::cox_fit(records), 5.0);
    } catch (const lvef::Error& e) {
      if (lvef::is_validation_error(e.code())) throw;
      doc["sources"][name] = {{"error", {{"code", lvef::to_string(e.code())}, {"detail", e.what()}}}};
      std::cerr << "error: " << name << ": " << e.what() << '\n';
      status = 3;
    }
  }
  emit(o, "cox.json", doc.dump(2) + "\n");
  return status;
}

int cmd_propagate(const CommonOptions& o) {
  const auto data = load_cohort(o.input);
  const auto sigmas = sigmas_of(o);
  const auto fused = lvef::fuse_cohort(data.records, sigmas);
  const fs::path dir = ensure_dir(o.output.empty() ? "." : o.output);
  json doc = {{"seed", o.seed}, {"replicates", o.replicates}, {"sources", json::object()}};
  for (auto source : sources_of(o)) {
    const auto summary = lvef::propagate(data.records, fused, propagation_config(o, source));
    const std::string name(lvef::to_string(source));
    doc["sources"][name] = lvef::to_json(summary);
    lvef::write_km_band_csv(dir / ("km_bands_" + name + ".csv"), summary);
  }
  write_file(dir / "propagation_summary.json", doc.dump(2) + "\n");
  std::cerr << "wrote " << (dir / "propagation_summary.json").string() << '\n';
  return 0;
}

int cmd_simulate(const CommonOptions& o, std::size_t n, const std::string& preset) {
  auto config = lvef::SimConfig::preset(preset);
  config.n_patients = n;
  config.seed = o.seed;
  lvef::RngStream stream = lvef::make_stream(o.seed, 0);
  const auto cohort = lvef::simulate(config, stream);
  std::ostringstream out;
  const auto truth = cohort.true_lvef();
  lvef::write_cohort_csv(out, cohort.measurements(), truth);
  emit(o, "cohort.csv", out.str());
  return 0;
}

int cmd_report(const CommonOptions& o) {
  const auto data = load_cohort(o.input);
  lvef::ReportOptions ro;
  ro.seed = o.seed;
  ro.replicates = o.replicates;
  ro.horizon = o.horizon;
  ro.band_edges = parse_bands(o.bands);
  ro.sigmas = sigmas_of(o);
  ro.sources = sources_of(o);
  ro.threads = o.threads;
  ro.input_name = o.input == "-" ? "<stdin>" : fs::path(o.input).filename().string();

  auto report = lvef::build_report(data, ro);
  report.document["metadata"]["generated_at"] = utc_timestamp();

  const fs::path dir = ensure_dir(o.output.empty() ? "." : o.output);
  write_file(dir / "report.json", report.document.dump(2) + "\n");
  for (const auto& summary : report.propagation) {
    lvef::write_km_band_csv(dir / ("km_bands_" + std::string(lvef::to_string(summary.source)) + ".csv"),
                            summary);
  }
  std::ostringstream fused_csv;
  lvef::write_fused_csv(fused_csv, data.records, lvef::fuse_cohort(data.records, ro.sigmas));
  write_file(dir / "fused.csv", fused_csv.str());
  std::cerr << "wrote " << (dir / "report.json").string() << '\n';
  return 0;
}

void add_sigma_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--sigma-visual", o.sigma_visual, "visual measurement error, LVEF points")
      ->capture_default_str();
  cmd->add_option("--sigma-simpson", o.sigma_simpson, "Simpson measurement error, LVEF points")
      ->capture_default_str();
  cmd->add_option("--mode", o.mode, "fusion interpretation of sigma: paper-sd | variance")
      ->check(CLI::IsMember({"paper-sd", "variance"}))
      ->capture_default_str();
}

void add_analysis_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--input", o.input, "cohort CSV ('-' for stdin)")->capture_default_str();
  cmd->add_option("--output", o.output, "output directory");
  cmd->add_option("--horizon", o.horizon, "event-rate horizon, days")->capture_default_str();
  cmd->add_option("--bands", o.bands, "stratum edges LOW,HIGH")->capture_default_str();
  cmd->add_option("--source", o.source, "visual | simpson | assimilated | all")
      ->check(CLI::IsMember({"visual", "simpson", "assimilated", "all"}))
      ->capture_default_str();
  add_sigma_flags(cmd, o);
}

void add_replicate_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  cmd->add_option("--replicates", o.replicates, "Monte-Carlo replicates")->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LVEF measurement fusion and survival uncertainty propagation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lvef::kToolVersion));

  CommonOptions o;
  CalibrationFlags cal;
  std::size_t sim_n = 1366;
  std::string preset = "default";

  auto* fuse = app.add_subcommand("fuse", "fuse visual and Simpson LVEF per patient");
  fuse->add_option("--input", o.input, "cohort CSV ('-' for stdin)")->capture_default_str();
  fuse->add_option("--output", o.output, "output directory (default: stdout)");
  add_sigma_flags(fuse, o);

  auto* calibrate = app.add_subcommand("calibrate-error",
                                       "MCMC calibration of both measurement errors and of R");
  calibrate->add_option("--visual", o.sigma_visual, "observed visual error, LVEF points")
      ->capture_default_str();
  calibrate->add_option("--simpson", o.sigma_simpson, "observed Simpson error, LVEF points")
      ->capture_default_str();
  calibrate->add_option("--seed", o.seed, "random seed")->capture_default_str();
  calibrate->add_option("--mode", o.mode, "paper-sd | variance")
      ->check(CLI::IsMember({"paper-sd", "variance"}))
      ->capture_default_str();
  calibrate->add_option("--output", o.output, "output directory (default: stdout)");
  calibrate->add_option("--likelihood-shape", cal.likelihood_shape)->capture_default_str();
  calibrate->add_option("--chain-length", cal.chain_length)->capture_default_str();
  calibrate->add_option("--kept-samples", cal.kept)->capture_default_str();
  calibrate->add_option("--burn-in", cal.burn_in)->capture_default_str();
  calibrate->add_option("--proposal-scale", cal.proposal_scale,
                        "initial proposal sd as a multiple of the observed error (default 0.25)");
  calibrate->add_flag("--no-tune", cal.no_tune, "skip the proposal tuning pre-run");

  auto* km = app.add_subcommand("km", "Kaplan-Meier event rates by LVEF stratum");
  add_analysis_flags(km, o);

  auto* cox = app.add_subcommand("cox", "Cox proportional-hazards fit on LVEF");
  cox->add_option("--input", o.input, "cohort CSV ('-' for stdin)")->capture_default_str();
  cox->add_option("--output", o.output, "output directory (default: stdout)");
  cox->add_option("--source", o.source, "visual | simpson | assimilated | all")
      ->check(CLI::IsMember({"visual", "simpson", "assimilated", "all"}))
      ->capture_default_str();
  add_sigma_flags(cox, o);

  auto* propagate = app.add_subcommand("propagate", "Monte-Carlo propagation of LVEF error");
  add_analysis_flags(propagate, o);
  add_replicate_flags(propagate, o);

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic paired cohort");
  simulate->add_option("--n", sim_n, "patients")->capture_default_str();
  simulate->add_option("--seed", o.seed, "random seed")->capture_default_str();
  simulate->add_option("--preset", preset, "default | concordant")
      ->check(CLI::IsMember({"default", "concordant"}))
      ->capture_default_str();
  simulate->add_option("--output", o.output, "output directory (default: stdout)");

  auto* report = app.add_subcommand("report", "run every stage and write the analysis report");
  add_analysis_flags(report, o);
  add_replicate_flags(report, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fuse) return cmd_fuse(o);
    if (*calibrate) return cmd_calibrate(o, cal);
    if (*km) return cmd_km(o);
    if (*cox) return cmd_cox(o);
    if (*propagate) return cmd_propagate(o);
    if (*simulate) return cmd_simulate(o, sim_n, preset);
    if (*report) return cmd_report(o);
  } catch (const lvef::Error& e) {
    if (lvef::is_validation_error(e.code())) {
      std::cerr << "error (" << lvef::to_string(e.code()) << "): " << e.what() << '\n';
      return 2;
    }
    json diag = {{"error", lvef::to_string(e.code())}, {"detail", e.what()}};
    if (const auto* nc = dynamic_cast<const lvef::NonConvergenceError*>(&e)) {
      diag["last_beta"] = nc->last_beta();
      diag["iterations"] = nc->iterations();
    }
    std::cerr << diag.dump() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
