#include "sss/analyze.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sss/render.hpp"
#include "sss/sim.hpp"

namespace sss {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_h(double h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", h);
  return buf;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json threshold_to_json(const ThresholdSpec<double>& spec) {
  return json{{"alpha", spec.alpha},
              {"n_directions", spec.n_directions},
              {"order", to_string(spec.order)},
              {"g", spec.g},
              {"h", spec.h},
              {"C", spec.c_scale},
              {"theta_bound", spec.theta_bound},
              {"x_quantile", spec.x_quantile},
              {"u_crit", spec.u_crit},
              {"one_sided", spec.one_sided}};
}

class OutputSet {
 public:
  explicit OutputSet(std::string dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const void* data, std::size_t size) {
    const fs::path path = fs::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw InputError("failed while writing: " + path.string());
    files_.push_back(path.string());
  }

  void write(const std::string& name, const std::string& text) {
    write(name, text.data(), text.size());
  }
  void write(const std::string& name, const std::vector<std::uint8_t>& bytes) {
    write(name, bytes.data(), bytes.size());
  }

  const std::vector<std::string>& files() const { return files_; }

  void remove_all() noexcept {
    for (const auto& file : files_) {
      std::error_code ec;
      fs::remove(file, ec);
    }
  }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

std::string slope_csv(const SlopeResult<double>& result) {
  std::string out = "i,j,r_stat,significant\n";
  const auto& region = result.region;
  for (Index i = 0; i < region.g_rows; ++i)
    for (Index j = 0; j < region.g_cols; ++j) {
      out += std::to_string(region.margin + i);
      out.push_back(',');
      out += std::to_string(region.margin + j);
      out.push_back(',');
      out += format_value(result.r_stat(i, j));
      out.push_back(',');
      out += result.significant(i, j) ? '1' : '0';
      out.push_back('\n');
    }
  return out;
}

std::string curvature_csv(const CurvatureResult<double>& result) {
  std::string out = "i,j";
  for (std::size_t k = 0; k < result.angles.size(); ++k)
    out += ",t" + std::to_string(k);
  out += ",category\n";
  const auto& region = result.region;
  for (Index i = 0; i < region.g_rows; ++i)
    for (Index j = 0; j < region.g_cols; ++j) {
      out += std::to_string(region.margin + i);
      out.push_back(',');
      out += std::to_string(region.margin + j);
      for (const auto& stats : result.stats) {
        out.push_back(',');
        out += format_value(stats(i, j));
      }
      out.push_back(',');
      out += to_string(result.category_at(i, j));
      out.push_back('\n');
    }
  return out;
}

}  // namespace

std::string threshold_spec_json(const ThresholdSpec<double>& spec, int indent) {
  return threshold_to_json(spec).dump(indent) + "\n";
}

AnalyzeReport analyze(const RunConfig& config) {
  if (config.outputs.empty())
    throw InputError("at least one output kind must be selected");
  if (!config.do_slope && !config.do_curvature)
    throw InputError("at least one of slope/curvature analyses must run");
  std::vector<double> bandwidths = config.bandwidths;
  if (bandwidths.empty()) throw InputError("need at least one bandwidth");
  for (const double h : bandwidths)
    if (!(h > 0)) throw InputError("bandwidths must be positive");
  std::sort(bandwidths.begin(), bandwidths.end());
  bandwidths.erase(std::unique(bandwidths.begin(), bandwidths.end()),
                   bandwidths.end());

  ImageFormat format;
  if (config.format) {
    format = *config.format;
  } else {
    const auto guessed = format_from_path(config.input_path);
    if (!guessed)
      throw InputError("cannot infer image format from path: " +
                       config.input_path + " (use --format)");
    format = *guessed;
  }
  const auto grid = load_image(config.input_path, format);

  double sigma;
  std::string sigma_mode;
  if (config.sigma) {
    sigma = *config.sigma;
    sigma_mode = "known";
    if (!(sigma > 0)) throw InputError("known sigma must be positive");
  } else {
    sigma = estimate_sigma(grid);
    sigma_mode = "estimated";
    if (!(sigma > 0))
      throw InputError(
          "estimated noise scale is zero (constant image?); supply a known "
          "sigma");
  }

  const std::vector<double> angles =
      config.angles.empty() ? angles_six() : config.angles;

  AnalysisOptions<double> opts;
  opts.method = config.method;
  opts.compat_tau_2u2 = config.compat_tau_2u2;
  opts.one_sided = config.one_sided;

  auto wants = [&](OutputKind kind) { return config.outputs.count(kind) > 0; };

  std::error_code dir_ec;
  fs::create_directories(config.out_dir, dir_ec);

  OutputSet outputs(config.out_dir);
  json summary;
  try {
    summary = json{{"input", config.input_path},
                   {"rows", grid.rows()},
                   {"cols", grid.cols()},
                   {"spacing", grid.spacing()},
                   {"alpha", config.alpha},
                   {"sigma_used", sigma},
                   {"sigma_mode", sigma_mode},
                   {"angles", angles},
                   {"one_sided", config.one_sided},
                   {"compat_tau2u2", config.compat_tau_2u2},
                   {"bandwidths", json::array()}};

    for (const double h : bandwidths) {
      const auto region =
          config.margin_override
              ? interior_with_margin(grid, *config.margin_override)
              : interior(grid, h);
      const std::string hs = format_h(h);
      json entry{{"h", h},
                 {"margin", region.margin},
                 {"g_rows", region.g_rows},
                 {"g_cols", region.g_cols},
                 {"g", region.g_effective()}};

      if (config.do_slope) {
        const auto slope =
            slope_analysis(grid, h, config.alpha, sigma, region, opts);
        const auto lines =
            trace_streamlines(slope, config.seed_stride,
                              config.streamline_step, config.max_steps);
        if (wants(OutputKind::map_png))
          outputs.write("slope_map_h" + hs + ".png",
                        render_map(slope, RenderPalette::standard(), grid));
        if (wants(OutputKind::class_csv))
          outputs.write("slope_h" + hs + ".csv", slope_csv(slope));
        if (wants(OutputKind::streamlines_svg))
          outputs.write("slope_streamlines_h" + hs + ".svg",
                        render_streamlines(lines, grid));
        entry["slope"] = json{{"threshold", threshold_to_json(slope.threshold)},
                              {"tau", slope.tau},
                              {"significant_pixels",
                               static_cast<long long>(slope.significant.count())},
                              {"streamlines", lines.size()}};
      }

      if (config.do_curvature) {
        const auto curvature = curvature_analysis(grid, h, config.alpha, sigma,
                                                  angles, region, opts);
        if (wants(OutputKind::map_png))
          outputs.write("curvature_map_h" + hs + ".png",
                        render_map(curvature, RenderPalette::standard(), grid));
        if (wants(OutputKind::class_csv))
          outputs.write("curvature_h" + hs + ".csv", curvature_csv(curvature));
        json counts;
        for (const auto cat :
             {CurvatureCategory::peak, CurvatureCategory::hole,
              CurvatureCategory::saddle, CurvatureCategory::ridge,
              CurvatureCategory::valley, CurvatureCategory::none})
          counts[to_string(cat)] = curvature.count(cat);
        entry["curvature"] =
            json{{"threshold", threshold_to_json(curvature.threshold)},
                 {"counts", counts}};
      }
      summary["bandwidths"].push_back(std::move(entry));
    }

    if (wants(OutputKind::summary_json))
      outputs.write("summary.json", summary.dump(2) + "\n");
  } catch (...) {
    outputs.remove_all();
    throw;
  }

  AnalyzeReport report;
  report.files = outputs.files();
  report.summary_json = summary.dump(2) + "\n";
  return report;
}

}  // namespace sss
