#include "render.hpp"

#include <algorithm>
#include <sstream>

namespace symdyn::cli {

namespace {

struct Plane {
  int x0 = 0, y0 = 0, w = 0, h = 0;
};

std::pair<int, int> plane_xy(const Ctx& g, const Element& e) {
  if (g->free_rank() == 1) return {e.x[0], e.t};
  return {e.x[0], e.x[1]};
}

void check_rank(const Ctx& g) {
  if (g->free_rank() == 2 && g->torsion_order() != 1)
    throw Error(ErrorKind::Precondition, "rendering needs rank 1, or rank 2 without torsion");
  if (g->free_rank() != 1 && g->free_rank() != 2) throw Error(ErrorKind::Precondition, "rendering needs rank 1 or 2");
}

Plane bounds(const Ctx& g, const std::vector<const GSet*>& sets) {
  Plane pl;
  bool first = true;
  int x1 = 0, y1 = 0;
  for (const GSet* s : sets)
    for (const auto& e : *s) {
      auto [x, y] = plane_xy(g, e);
      if (first) {
        pl.x0 = x1 = x;
        pl.y0 = y1 = y;
        first = false;
      }
      pl.x0 = std::min(pl.x0, x);
      pl.y0 = std::min(pl.y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  if (!first) {
    pl.w = x1 - pl.x0 + 1;
    pl.h = y1 - pl.y0 + 1;
  }
  return pl;
}

}  // namespace

std::string render_svg(const Pattern& p, const SvgStyle& st) {
  const Ctx& g = p.ctx();
  check_rank(g);
  std::vector<const GSet*> sets{&p.domain()};
  for (const auto& o : st.overlays) sets.push_back(&o.cells);
  const Plane pl = bounds(g, sets);
  const int c = st.cell;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pl.w * c << "\" height=\"" << pl.h * c
     << "\" viewBox=\"0 0 " << pl.w * c << ' ' << pl.h * c << "\">\n";
  if (!st.title.empty()) os << "<title>" << st.title << "</title>\n";
  auto px = [&](const Element& e) {
    auto [x, y] = plane_xy(g, e);
    return std::pair<int, int>{(x - pl.x0) * c, (pl.h - 1 - (y - pl.y0)) * c};
  };
  for (size_t i = 0; i < p.size(); ++i) {
    auto [x, y] = px(p.domain()[i]);
    const int s = p.symbols()[i];
    auto it = st.palette.find(s);
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << c << "\" height=\"" << c << "\" fill=\""
       << (it == st.palette.end() ? "#888888" : it->second) << "\" stroke=\"#999999\" stroke-width=\"0.5\"/>\n";
  }
  for (const auto& o : st.overlays)
    for (const auto& e : o.cells) {
      auto [x, y] = px(e);
      os << "<rect x=\"" << x + 2 << "\" y=\"" << y + 2 << "\" width=\"" << c - 4 << "\" height=\"" << c - 4
         << "\" fill=\"" << o.fill << "\" fill-opacity=\"0.6\" stroke=\"" << o.stroke << "\" stroke-width=\"2\"/>\n";
    }
  if (st.origin_dot && pl.w > 0) {
    auto [x, y] = px(g->identity());
    os << "<circle cx=\"" << x + c / 2 << "\" cy=\"" << y + c / 2 << "\" r=\"" << c / 5 << "\" fill=\"#000000\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_pgm(const Pattern& p) {
  const Ctx& g = p.ctx();
  check_rank(g);
  const Plane pl = bounds(g, {&p.domain()});
  int top = 1;
  for (auto s : p.symbols()) top = std::max(top, int(s));
  std::vector<int> img(size_t(pl.w) * size_t(pl.h), 0);
  for (size_t i = 0; i < p.size(); ++i) {
    auto [x, y] = plane_xy(g, p.domain()[i]);
    img[size_t(pl.h - 1 - (y - pl.y0)) * size_t(pl.w) + size_t(x - pl.x0)] = 255 - 255 * p.symbols()[i] / top;
  }
  std::ostringstream os;
  os << "P2\n" << pl.w << ' ' << pl.h << "\n255\n";
  for (int r = 0; r < pl.h; ++r) {
    for (int col = 0; col < pl.w; ++col) os << (col ? " " : "") << img[size_t(r) * size_t(pl.w) + size_t(col)];
    os << '\n';
  }
  return os.str();
}

std::string render_rle(const Pattern& p) {
  const Ctx& g = p.ctx();
  if (g->free_rank() != 1) throw Error(ErrorKind::Precondition, "run-length text needs rank 1");
  std::ostringstream os;
  for (int t = 0; t < g->torsion_order(); ++t) {
    int last = -1, run = 0;
    bool any = false;
    auto flush = [&] {
      if (run) os << (any ? " " : "") << last << 'x' << run;
      any = any || run;
    };
    int prev_x = 0;
    bool started = false;
    for (size_t i = 0; i < p.size(); ++i) {
      const Element& e = p.domain()[i];
      if (e.t != t) continue;
      const int s = p.symbols()[i];
      const bool gap = started && e.x[0] != prev_x + 1;
      if (started && (s != last || gap)) {
        flush();
        run = 0;
        if (gap) os << " @" << e.x[0] << ":";
      }
      if (!started) os << "t" << t << " @" << e.x[0] << ": ";
      started = true;
      last = s;
      ++run;
      prev_x = e.x[0];
    }
    flush();
    if (started) os << '\n';
  }
  return os.str();
}

}  // namespace symdyn::cli
