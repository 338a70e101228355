#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sss/image_io.hpp"
#include "sss/inference.hpp"
#include "sss/types.hpp"

namespace sss {

enum class OutputKind { map_png, class_csv, summary_json, streamlines_svg };

struct RunConfig {
  std::string input_path;
  std::optional<ImageFormat> format;  // default: from file extension
  std::vector<double> bandwidths{2, 4, 8, 16};
  double alpha = 0.05;
  std::optional<double> sigma;  // known noise scale; empty: estimate
  std::vector<double> angles;   // empty: the six-angle preset
  std::set<OutputKind> outputs{OutputKind::map_png, OutputKind::class_csv,
                               OutputKind::summary_json,
                               OutputKind::streamlines_svg};
  std::optional<Index> margin_override;
  bool do_slope = true;
  bool do_curvature = true;
  bool compat_tau_2u2 = false;
  bool one_sided = false;
  SumMethod method = SumMethod::separable;
  Index seed_stride = 4;
  double streamline_step = 0.5;
  Index max_steps = 400;
  std::string out_dir = ".";
};

struct AnalyzeReport {
  std::vector<std::string> files;  // paths written, in output order
  std::string summary_json;
};

/// Runs the per-bandwidth slope/curvature pipeline and writes the configured
/// outputs. Throws on failure after removing any partially written files.
AnalyzeReport analyze(const RunConfig& config);

/// JSON rendering of a resolved threshold (also used by the CLI).
std::string threshold_spec_json(const ThresholdSpec<double>& spec,
                                int indent = 2);

}  // namespace sss
