#pragma once

#include <string>
#include <vector>

namespace teleopt::svg {

// One optimizer's aggregate loss curve, indexed by step.
struct Series {
  std::string label;
  std::vector<double> median;
  std::vector<double> q1;
  std::vector<double> q3;
};

// Minimal diagnostic plot: log10 loss vs step, one median line per series
// with a shaded interquartile band. Output is well-formed SVG 1.1 with no
// NaN/Inf coordinates (values are clamped into the plottable range) and is
// byte-deterministic for identical input.
std::string render_loss_plot(const std::vector<Series>& series, const std::string& title);

}  // namespace teleopt::svg
