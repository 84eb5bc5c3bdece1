#pragma once

#include <map>
#include <string>
#include <vector>

#include "symdyn/pattern.hpp"

namespace symdyn::cli {

struct Overlay {
  GSet cells;
  std::string stroke;
  std::string fill = "none";
};

struct SvgStyle {
  int cell = 18;
  std::map<int, std::string> palette{{0, "#ffffff"}, {1, "#1f5fbf"}, {2, "#d0a020"}, {3, "#3a9a3a"}};
  std::vector<Overlay> overlays;
  bool origin_dot = false;
  std::string title;
};

// rank 1 draws torsion as rows, rank 2 draws y upward; other ranks throw Precondition
std::string render_svg(const Pattern& p, const SvgStyle& st = {});
std::string render_pgm(const Pattern& p);
// "0110…" runs: one line per torsion row, each as symbol×length tokens
std::string render_rle(const Pattern& p);

}  // namespace symdyn::cli
