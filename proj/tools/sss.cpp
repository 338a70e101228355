#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sss/analyze.hpp"
#include "sss/corr_oracle.hpp"
#include "sss/image_io.hpp"
#include "sss/sim.hpp"

namespace {

using nlohmann::json;

std::optional<double> parse_sigma_spec(const std::string& text) {
  if (text == "estimate") return std::nullopt;
  std::string value = text;
  if (text.rfind("known:", 0) == 0) value = text.substr(6);
  try {
    std::size_t used = 0;
    const double sigma = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return sigma;
  } catch (const std::exception&) {
    throw sss::InputError("cannot parse sigma '" + text +
                          "'; use known:<value> or estimate");
  }
}

std::vector<double> parse_angles_spec(const std::string& text) {
  if (text.empty() || text == "six") return sss::angles_six();
  if (text == "table4") return sss::angles_narrow();
  std::string list = text;
  if (text.rfind("custom:", 0) == 0) list = text.substr(7);
  std::vector<double> angles;
  std::stringstream stream(list);
  std::string token;
  while (std::getline(stream, token, ',')) {
    try {
      angles.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw sss::InputError("cannot parse angle '" + token + "' in --angles");
    }
  }
  if (angles.empty())
    throw sss::InputError("angle preset '" + text +
                          "' not recognized; use six, table4 or custom:<list>");
  return angles;
}

sss::ImageFormat parse_format(const std::string& text) {
  if (text == "csv") return sss::ImageFormat::csv;
  if (text == "pgm") return sss::ImageFormat::pgm;
  if (text == "png" || text == "png-gray") return sss::ImageFormat::png_gray;
  throw sss::InputError("unknown image format '" + text + "'");
}

sss::SimMode parse_mode(const std::string& text) {
  if (text == "slope_per_angle") return sss::SimMode::slope_per_angle;
  if (text == "slope_joint") return sss::SimMode::slope_joint;
  if (text == "curvature_per_angle") return sss::SimMode::curvature_per_angle;
  if (text == "curvature_joint") return sss::SimMode::curvature_joint;
  throw sss::InputError("unknown simulation mode '" + text + "'");
}

void load_sim_config_file(const std::string& path, sss::SimConfig& config) {
  std::ifstream in(path);
  if (!in) throw sss::InputError("input not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw sss::InputError("cannot parse config " + path + ": " + e.what());
  }
  if (j.contains("mode")) config.mode = parse_mode(j["mode"].get<std::string>());
  if (j.contains("replicates")) config.replicates = j["replicates"].get<int>();
  if (j.contains("rows")) config.rows = j["rows"].get<sss::Index>();
  if (j.contains("cols")) config.cols = j["cols"].get<sss::Index>();
  if (j.contains("margin")) config.margin_override = j["margin"].get<sss::Index>();
  if (j.contains("bandwidths"))
    config.bandwidths = j["bandwidths"].get<std::vector<double>>();
  if (j.contains("angles")) {
    if (j["angles"].is_string())
      config.angles = parse_angles_spec(j["angles"].get<std::string>());
    else
      config.angles = j["angles"].get<std::vector<double>>();
  }
  if (j.contains("alpha")) config.alpha = j["alpha"].get<double>();
  if (j.contains("seed")) config.master_seed = j["seed"].get<std::uint64_t>();
  if (j.contains("sigma"))
    config.sigma_estimated = !parse_sigma_spec(j["sigma"].get<std::string>());
  if (j.contains("one_sided")) config.one_sided = j["one_sided"].get<bool>();
  if (j.contains("threads")) config.threads = j["threads"].get<int>();
}

std::string sim_result_csv(const sss::SimResult& result) {
  std::string out = "mode,h,angle,exceed_count,replicates,rate,ci95_lo,ci95_hi,u_crit,g\n";
  char buf[64];
  for (const auto& cell : result.cells) {
    out += sss::to_string(result.config.mode);
    std::snprintf(buf, sizeof buf, ",%g,", cell.h);
    out += buf;
    if (cell.angle) {
      std::snprintf(buf, sizeof buf, "%.17g", *cell.angle);
      out += buf;
    } else {
      out += "joint";
    }
    std::snprintf(buf, sizeof buf, ",%d,%d,%.17g,%.17g,%.17g,%.17g,%lld\n",
                  cell.exceed_count, cell.replicates, cell.rate, cell.ci_lo,
                  cell.ci_hi, cell.u_crit, static_cast<long long>(cell.g));
    out += buf;
  }
  return out;
}

void write_text_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sss::InputError("cannot write file: " + path);
  out << text;
}

int run_oracle(sss::Index size, const std::vector<double>& bandwidths,
               const std::vector<double>& direction_degrees,
               std::uint64_t seed, const std::string& out_path) {
  const auto grid = sss::generate_noise(size, size, seed);
  const std::vector<std::pair<sss::Index, sss::Index>> lags{
      {1, 0}, {0, 1}, {1, 1}, {2, 0}};

  std::string out = "order,h,direction_deg,lag_i,lag_j,analytic,empirical,abs_error\n";
  char buf[160];
  for (const double h : bandwidths) {
    const auto region = sss::interior(grid, h);
    const auto mi = sss::moment_images(grid, h, region, sss::MomentSet::both,
                                       sss::SumMethod::separable);
    for (const auto order : {sss::DerivOrder::slope, sss::DerivOrder::curvature}) {
      for (const double deg : direction_degrees) {
        const double theta = deg * std::numbers::pi / 180.0;
        const auto dir = sss::Direction<double>::from_angle(theta);
        const auto field = sss::stat_field_from_moments(
            mi, grid.rows(), grid.cols(), dir, order, 1.0);
        for (const auto& [li, lj] : lags) {
          const double analytic =
              sss::rho(order, double(li), double(lj), dir.u, dir.v, h);
          const double empirical =
              sss::empirical_lag_correlation(field.stats, li, lj);
          std::snprintf(buf, sizeof buf, "%s,%g,%g,%lld,%lld,%.10f,%.10f,%.10f\n",
                        sss::to_string(order), h, deg,
                        static_cast<long long>(li), static_cast<long long>(lj),
                        analytic, empirical, std::abs(empirical - analytic));
          out += buf;
        }
      }
    }
  }
  write_text_output(out_path, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale significance analysis of slopes and curvatures in images"};
  app.require_subcommand(1);

  // analyze
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "Analyze an image across bandwidths and write maps");
  std::string input, format_text, sigma_text = "estimate", angles_text = "six";
  std::string out_dir = ".", outputs_text = "map-png,class-csv,summary-json,streamlines-svg";
  std::string kinds_text = "slope,curvature", method_text = "separable";
  std::vector<double> bandwidths{2, 4, 8, 16};
  double alpha = 0.05;
  long long margin = -1;
  bool compat_tau2u2 = false, one_sided = false;
  long long seed_stride = 4, max_steps = 400;
  double step = 0.5;
  analyze_cmd->add_option("--input", input, "Input image path")->required();
  analyze_cmd->add_option("--format", format_text, "csv|pgm|png (default: from extension)");
  analyze_cmd->add_option("--h", bandwidths, "Bandwidths, e.g. --h 2,4,8,16")
      ->delimiter(',');
  analyze_cmd->add_option("--alpha", alpha, "Significance level");
  analyze_cmd->add_option("--sigma", sigma_text, "known:<value> or estimate");
  analyze_cmd->add_option("--angles", angles_text, "six|table4|custom:<radians list>");
  analyze_cmd->add_option("--margin", margin, "Interior margin override, pixels");
  analyze_cmd->add_option("--out-dir", out_dir, "Output directory");
  analyze_cmd->add_option("--outputs", outputs_text,
                          "Comma list of map-png,class-csv,summary-json,streamlines-svg");
  analyze_cmd->add_option("--kinds", kinds_text, "Comma list of slope,curvature");
  analyze_cmd->add_option("--method", method_text, "separable|direct sum path");
  analyze_cmd->add_flag("--compat-tau2u2", compat_tau2u2,
                        "Joint slope cutoff 2u^2 instead of u^2");
  analyze_cmd->add_flag("--one-sided", one_sided, "One-sided (upper tail) tests");
  analyze_cmd->add_option("--seed-stride", seed_stride, "Streamline seed lattice stride");
  analyze_cmd->add_option("--step", step, "Streamline integration step, pixels");
  analyze_cmd->add_option("--max-steps", max_steps, "Streamline step budget");

  // simulate
  auto* simulate_cmd = app.add_subcommand(
      "simulate", "Null-hypothesis exceedance experiments");
  std::string config_path, mode_text = "slope_joint", sim_sigma_text = "known:1";
  std::string sim_angles_text, sim_out = "-";
  std::vector<double> sim_bandwidths{2, 4, 8, 16};
  long long reps = 200, rows = 280, cols = 280, sim_margin = -1, threads = 0;
  double sim_alpha = 0.05;
  std::uint64_t seed = 1;
  bool sim_one_sided = false;
  simulate_cmd->add_option("--config", config_path, "JSON config file");
  simulate_cmd->add_option("--mode", mode_text,
                           "slope_per_angle|slope_joint|curvature_per_angle|curvature_joint");
  simulate_cmd->add_option("--reps", reps, "Replicates");
  simulate_cmd->add_option("--rows", rows, "Field rows");
  simulate_cmd->add_option("--cols", cols, "Field cols");
  simulate_cmd->add_option("--h", sim_bandwidths, "Bandwidths")->delimiter(',');
  simulate_cmd->add_option("--alpha", sim_alpha, "Significance level");
  simulate_cmd->add_option("--margin", sim_margin, "Interior margin override");
  simulate_cmd->add_option("--angles", sim_angles_text, "six|table4|custom:<list>");
  simulate_cmd->add_option("--sigma", sim_sigma_text, "known:<value> or estimate");
  simulate_cmd->add_option("--seed", seed, "Master seed");
  simulate_cmd->add_flag("--one-sided", sim_one_sided, "One-sided tests");
  simulate_cmd->add_option("--threads", threads, "Worker threads (0: auto)");
  simulate_cmd->add_option("--out", sim_out, "Output CSV path ('-' for stdout)");

  // threshold
  auto* threshold_cmd = app.add_subcommand(
      "threshold", "Print the resolved threshold for one configuration");
  double th_alpha = 0.05, th_h = 4;
  int th_n = 2;
  long long th_g = 200;
  std::string th_order = "slope";
  bool th_one_sided = false;
  threshold_cmd->add_option("--alpha", th_alpha, "Significance level");
  threshold_cmd->add_option("--n", th_n, "Number of directions");
  threshold_cmd->add_option("--g", th_g, "Interior side length")->required();
  threshold_cmd->add_option("--h", th_h, "Bandwidth")->required();
  threshold_cmd->add_option("--order", th_order, "slope|curvature");
  threshold_cmd->add_flag("--one-sided", th_one_sided, "One-sided budget");

  // oracle
  auto* oracle_cmd = app.add_subcommand(
      "oracle", "Analytic vs empirical statistic autocorrelations");
  std::vector<double> or_bandwidths{4, 8};
  std::vector<double> or_dirs{0, 90, 45};
  long long or_size = 400;
  std::uint64_t or_seed = 1;
  std::string or_out = "-";
  oracle_cmd->add_option("--h", or_bandwidths, "Bandwidths")->delimiter(',');
  oracle_cmd->add_option("--dirs", or_dirs, "Directions in degrees")->delimiter(',');
  oracle_cmd->add_option("--size", or_size, "Noise field side length");
  oracle_cmd->add_option("--seed", or_seed, "Seed");
  oracle_cmd->add_option("--out", or_out, "Output CSV path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(analyze_cmd)) {
      sss::RunConfig config;
      config.input_path = input;
      if (!format_text.empty()) config.format = parse_format(format_text);
      config.bandwidths = bandwidths;
      config.alpha = alpha;
      config.sigma = parse_sigma_spec(sigma_text);
      config.angles = parse_angles_spec(angles_text);
      if (margin >= 0) config.margin_override = margin;
      config.out_dir = out_dir;
      config.compat_tau_2u2 = compat_tau2u2;
      config.one_sided = one_sided;
      config.seed_stride = seed_stride;
      config.streamline_step = step;
      config.max_steps = max_steps;
      if (method_text == "direct") config.method = sss::SumMethod::direct;
      else if (method_text == "separable") config.method = sss::SumMethod::separable;
      else throw sss::InputError("unknown --method '" + method_text + "'");

      config.outputs.clear();
      std::stringstream outs(outputs_text);
      std::string token;
      while (std::getline(outs, token, ',')) {
        if (token == "map-png") config.outputs.insert(sss::OutputKind::map_png);
        else if (token == "class-csv") config.outputs.insert(sss::OutputKind::class_csv);
        else if (token == "summary-json") config.outputs.insert(sss::OutputKind::summary_json);
        else if (token == "streamlines-svg") config.outputs.insert(sss::OutputKind::streamlines_svg);
        else throw sss::InputError("unknown output kind '" + token + "'");
      }
      config.do_slope = kinds_text.find("slope") != std::string::npos;
      config.do_curvature = kinds_text.find("curvature") != std::string::npos;

      const auto report = sss::analyze(config);
      for (const auto& file : report.files) std::cout << file << "\n";
      return 0;
    }

    if (app.got_subcommand(simulate_cmd)) {
      sss::SimConfig config;
      if (!config_path.empty()) load_sim_config_file(config_path, config);
      if (simulate_cmd->count("--mode") || config_path.empty())
        config.mode = parse_mode(mode_text);
      if (simulate_cmd->count("--reps") || config_path.empty())
        config.replicates = static_cast<int>(reps);
      if (simulate_cmd->count("--rows") || config_path.empty()) config.rows = rows;
      if (simulate_cmd->count("--cols") || config_path.empty()) config.cols = cols;
      if (simulate_cmd->count("--h") || config_path.empty())
        config.bandwidths = sim_bandwidths;
      if (simulate_cmd->count("--alpha") || config_path.empty())
        config.alpha = sim_alpha;
      if (simulate_cmd->count("--seed") || config_path.empty())
        config.master_seed = seed;
      if (simulate_cmd->count("--margin") && sim_margin >= 0)
        config.margin_override = sim_margin;
      if (simulate_cmd->count("--angles"))
        config.angles = parse_angles_spec(sim_angles_text);
      if (simulate_cmd->count("--sigma"))
        config.sigma_estimated = !parse_sigma_spec(sim_sigma_text);
      if (simulate_cmd->count("--one-sided")) config.one_sided = sim_one_sided;
      if (simulate_cmd->count("--threads"))
        config.threads = static_cast<int>(threads);

      const auto result = sss::type1_experiment(config);
      write_text_output(sim_out, sim_result_csv(result));
      return 0;
    }

    if (app.got_subcommand(threshold_cmd)) {
      sss::DerivOrder order;
      if (th_order == "slope") order = sss::DerivOrder::slope;
      else if (th_order == "curvature") order = sss::DerivOrder::curvature;
      else throw sss::InputError("unknown --order '" + th_order + "'");
      const auto spec = sss::make_threshold<double>(th_alpha, th_n, th_g, th_h,
                                                    order, th_one_sided);
      std::cout << sss::threshold_spec_json(spec);
      return 0;
    }

    if (app.got_subcommand(oracle_cmd))
      return run_oracle(or_size, or_bandwidths, or_dirs, or_seed, or_out);
  } catch (const sss::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
