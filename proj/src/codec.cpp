#include "symdyn/codec.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "symdyn/kshift.hpp"
#include "symdyn/specification.hpp"

namespace symdyn {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

GSet prod(std::initializer_list<const GSet*> sets) {
  auto it = sets.begin();
  GSet out = **it;
  for (++it; it != sets.end(); ++it) out = set_product(out, **it);
  return out;
}

double log2_big(const BigInt& n) { return n > 0 ? log_big(n) / kLn2 : -INFINITY; }

std::string set_key(const GSet& a) { return a.to_json().dump(); }

GSet untranslate(const GSet& a, const Element& c) { return translate(a, a.ctx()->inv(c)); }

json elem_json(const Ctx& ctx, const Element& e) { return ctx->coords(e); }

std::string coord_str(const Ctx& ctx, const Element& e) {
  std::string s;
  for (auto c : ctx->coords(e)) s += (s.empty() ? "" : ",") + std::to_string(c);
  return "(" + s + ")";
}

int r_eps_of(const Rational& eps, long n) {
  if (n <= 64) return r_epsilon(eps);
  const double e = 1.0 / double(n);
  return int(std::floor(std::log(e) / std::log1p(-e))) + 1;
}

}  // namespace

json CodecParams::to_json() const {
  return {{"delta_bits", delta_bits}, {"eps", eps.str()},       {"n", n},
          {"theta_log2", theta_log2}, {"r_eps", r_eps},         {"desk_feasible", desk_feasible}};
}

CodecParams choose_parameters(double h_src, double h_tgt_bar, int src_alphabet, int tgt_alphabet, long mbar_size,
                              long max_n) {
  if (!(h_src < h_tgt_bar)) throw Error(ErrorKind::Precondition, "source entropy must lie below the target entropy");
  if (src_alphabet < 1 || tgt_alphabet < 1 || mbar_size < 1) throw Error(ErrorKind::Precondition, "bad sizes");
  CodecParams p;
  p.delta_bits = (h_tgt_bar - h_src) / (2 * kLn2);
  p.theta_log2 = 2 * std::log2(double(src_alphabet)) + 5.0 * double(mbar_size) * std::log2(double(tgt_alphabet));
  const long n1 = 5 * mbar_size + 1;
  const double q = p.theta_log2 / p.delta_bits;
  if (!std::isfinite(q) || q >= double(max_n)) throw Error(ErrorKind::Infeasible, "no ε = 1/n on the grid: gap too small");
  const long n2 = long(std::floor(q)) + 1;
  p.n = std::max(n1, n2);
  if (p.n > max_n) throw Error(ErrorKind::Infeasible, "no ε = 1/n on the grid: gap too small");
  p.eps = Rational(1, p.n);
  p.r_eps = r_eps_of(p.eps, p.n);
  p.desk_feasible = p.r_eps <= 16;
  return p;
}

GSet CodecConfig::K() const {
  const GSet m = mbar();
  return prod({&m, &m, &m, &kit.Z0});
}

GSet CodecConfig::hole() const {
  const GSet m = mbar();
  return prod({&m, &m, &kit.Z0});
}

void CodecConfig::validate() const {
  spec.validate();
  if (!source) throw Error(ErrorKind::Config, "missing source oracle");
  check_same(GSet(source->ctx()), GSet(spec.ctx()));
  if (shapes.empty()) throw Error(ErrorKind::Config, "need at least one shape");
  if (kit.r() < int(shapes.size())) throw Error(ErrorKind::Config, "marker kit has fewer κ blocks than shapes");
  if (eps <= 0 || eps >= 1) throw Error(ErrorKind::Config, "ε must lie in (0,1)");
  if (frame < 0 || census_halo < 0) throw Error(ErrorKind::Config, "negative frame or halo");
  const GSet k = K(), h = hole();
  for (size_t i = 0; i < shapes.size(); ++i) {
    if (!is_symmetric(shapes[i])) throw Error(ErrorKind::NotSymmetric, "shape " + std::to_string(i) + " not symmetric");
    if (i > 0 && (!is_subset(shapes[i - 1], shapes[i]) || shapes[i - 1] == shapes[i]))
      throw Error(ErrorKind::Config, "shapes must be strictly nested");
    if (!is_subset(k, shapes[i])) throw Error(ErrorKind::Config, "shape " + std::to_string(i) + " misses K = M̄³Z₀");
    if (!is_subset(h, core(shapes[i], mbar())))
      throw Error(ErrorKind::Config, "M̄²Z₀ not inside the M̄-core of shape " + std::to_string(i));
  }
}

json CodecConfig::to_json() const {
  json j;
  j["grid"] = spec.name;
  j["source"] = source_json;
  j["shape_radii"] = shape_radii;
  j["eps"] = eps.str();
  j["delta_bits"] = delta_bits;
  j["frame"] = frame;
  j["census_halo"] = census_halo;
  j["window"] = window;
  j["kit"] = kit.to_json();
  return j;
}

OraclePtr source_from_json(const Ctx& ctx, const json& j) {
  const std::string kind = j.value("kind", "full");
  if (kind == "full") return full_shift(ctx, j.value("q", 2));
  if (kind == "golden-mean") return golden_mean(ctx);
  throw Error(ErrorKind::Config, "unknown source kind '" + kind + "'");
}

CodecConfig CodecConfig::from_json(const json& j) {
  CodecConfig c;
  try {
    c.spec = grid_fixture(j.at("grid").get<std::string>());
    const Ctx& ctx = c.spec.ctx();
    c.source_json = j.value("source", json{{"kind", "full"}, {"q", 2}});
    c.source = source_from_json(ctx, c.source_json);
    c.shape_radii = j.at("shape_radii").get<std::vector<int>>();
    for (int r : c.shape_radii) c.shapes.push_back(folner_box(ctx, r));
    if (j.contains("eps")) c.eps = Rational(j.at("eps").get<std::string>());
    c.frame = j.value("frame", c.frame);
    c.census_halo = j.value("census_halo", c.census_halo);
    c.window = j.value("window", c.window);
    if (j.contains("kit")) {
      c.kit = MarkerKit::from_json(ctx, j.at("kit"));
    } else {
      MarkerOptions mo;
      mo.kappa_count = std::max<int>(2, int(c.shapes.size()));
      c.kit = assemble_marker(c.spec, mo);
    }
    c.delta_bits = j.value("delta_bits", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("codec config: ") + e.what());
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const Error*>(&e)) throw;
    throw Error(ErrorKind::Config, std::string("codec config: ") + e.what());
  }
  c.validate();
  return c;
}

CodecConfig codec_fixture(const std::string& name) {
  if (name != "z-full3") throw Error(ErrorKind::Config, "unknown codec fixture '" + name + "'");
  json j = {{"grid", "z-full3"}, {"source", {{"kind", "full"}, {"q", 2}}}, {"shape_radii", {280, 300, 320, 340, 360, 380, 400}},
            {"eps", "1/40"},     {"frame", 16},                           {"census_halo", 2},
            {"window", 8000}};
  CodecConfig c = CodecConfig::from_json(j);
  // grid-pinned entropy of X̄ on a long interval
  const GSet probe = folner_box(c.spec.ctx(), 70);
  const BigInt cnt = target_census(c, probe, codec_grid(c, probe))->count();
  const double h_tgt = log_big(cnt) / double(probe.size());
  c.delta_bits = (h_tgt - std::log(2.0)) / (2 * kLn2);
  return c;
}

json GapReport::to_json() const {
  json j = {{"source_count_log2", log2_big(source_count)},
            {"target_count_log2", log2_big(target_count)},
            {"holds", holds}};
  if (!chain.is_null()) j["chain"] = chain;
  return j;
}

GSet s_zero(const CodecConfig& cfg, const GSet& s_tilde) {
  return set_difference(core(s_tilde, cfg.mbar()), cfg.hole());
}

GSet codec_grid(const CodecConfig& cfg, const GSet& s0) {
  const auto& sp = cfg.spec;
  if (s0.empty()) return GSet(sp.ctx());
  const GSet reach = prod({&sp.W, &sp.W, &sp.W, &sp.W, &sp.R(), &sp.M, &sp.M});
  const GSet g = set_union(set_product(reach, s0), halo_region(s0, cfg.census_halo));
  return greedy_maximal(sp.W, g);
}

CensusPtr target_census(const CodecConfig& cfg, const GSet& s0, const GSet& grid) {
  auto xb = make_xbar(cfg.spec);
  CensusOptions o;
  o.halo = cfg.census_halo;
  o.search = cfg.spec.search;
  const GSet region = halo_region(s0, cfg.census_halo);
  std::vector<uint8_t> hid(region.size(), 0);
  for (const auto& v : grid) {
    long k = region.index_of(v);
    if (k >= 0) hid[size_t(k)] = 1;
  }
  o.pin_hidden = Pattern(region, std::move(hid));
  return Census::build(*xb, s0, o);
}

GapReport verify_gap(const CodecConfig& cfg, const GSet& s_hat, const GSet& s0, const GSet* s) {
  GapReport r;
  r.source_count = Census::build(*cfg.source, s_hat)->count();
  r.target_count = target_census(cfg, s0, codec_grid(cfg, s0))->count();
  r.holds = r.source_count < r.target_count;
  if (s) {
    const double eps = double(cfg.eps.convert_to<double>());
    const double sz = double(s->size());
    const double ldelta = std::log2(double(cfg.source->q_vis()));
    const double llambda = std::log2(double(cfg.spec.X->q_vis()));
    const double mb = double(cfg.mbar().size());
    const double theta = 2 * ldelta + 5 * mb * llambda;
    const double y_s = log2_big(Census::build(*cfg.source, *s)->count());
    const double x_s = log2_big(target_census(cfg, *s, codec_grid(cfg, *s))->count());
    const double y_hat = log2_big(r.source_count), x_0 = log2_big(r.target_count);
    auto side = [](double l, double rr, bool ok) { return json{{"lhs", l}, {"rhs", rr}, {"holds", ok}}; };
    json c;
    c["x_bar_counts"] = "grid-pinned lower bounds";
    c["en1"] = side(x_s, y_s + cfg.delta_bits * sz, x_s > y_s + cfg.delta_bits * sz);
    c["en2"] = side(y_hat, y_s + 2 * eps * sz * ldelta, y_hat <= y_s + 2 * eps * sz * ldelta);
    c["en3"] = side(x_0 + 5 * mb * eps * sz * llambda, x_s, x_0 + 5 * mb * eps * sz * llambda >= x_s);
    const double rhs4 = x_0 + sz * (eps * theta - cfg.delta_bits);
    c["en4"] = side(y_hat, rhs4, y_hat < rhs4);
    r.chain = c;
  }
  return r;
}

Pattern CodePair::theta(const Pattern& src) const {
  const BigInt i = source->rank(src);
  if (i >= target->count()) throw Error(ErrorKind::OutOfRange, "source index beyond the target census");
  return target->unrank(i);
}

std::optional<Pattern> CodePair::theta_inv(const Pattern& block) const {
  if (!target->contains(block)) return std::nullopt;
  const BigInt i = target->rank(block);
  if (i >= source->count()) return std::nullopt;
  return source->unrank(i);
}

CodePairPtr CodeBook::get(const CodecConfig& cfg, const GSet& s_hat, const GSet& s_tilde) {
  const std::string key = set_key(s_hat) + "|" + set_key(s_tilde);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = pairs_.find(key);
  if (it != pairs_.end()) return it->second;
  auto p = std::make_shared<CodePair>();
  p->s_hat = s_hat;
  p->s_tilde = s_tilde;
  p->s0 = s_zero(cfg, s_tilde);
  p->grid = codec_grid(cfg, p->s0);
  p->source = Census::build(*cfg.source, s_hat);
  p->target = target_census(cfg, p->s0, p->grid);
  p->gap.source_count = p->source->count();
  p->gap.target_count = p->target->count();
  p->gap.holds = p->gap.source_count < p->gap.target_count;
  pairs_.emplace(key, p);
  return p;
}

std::shared_ptr<CodeBook> build_codebook(const CodecConfig& cfg, const std::vector<std::pair<GSet, GSet>>& pairs) {
  auto book = std::make_shared<CodeBook>();
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (!is_subset(cfg.hole(), core(pairs[i].second, cfg.mbar())))
      throw Error(ErrorKind::Precondition, "pair " + std::to_string(i) + ": no room for the marker hole");
    auto p = book->get(cfg, pairs[i].first, pairs[i].second);
    if (!p->gap.holds)
      throw Error(ErrorKind::Infeasible, "pair " + std::to_string(i) + ": source census not below target census");
  }
  return book;
}

const char* tile_status_name(TileStatus s) {
  switch (s) {
    case TileStatus::Encoded: return "encoded";
    case TileStatus::NoRoom: return "no-room";
    case TileStatus::Gap: return "gap";
    case TileStatus::Corrupt: return "corrupt";
  }
  return "?";
}

namespace {

Quasitiling canonical(const CodecConfig& cfg, std::vector<std::pair<Element, int>> tiles) {
  std::sort(tiles.begin(), tiles.end());
  Quasitiling q(cfg.spec.ctx());
  for (const auto& s : cfg.shapes) q.add_shape(s);
  for (const auto& [c, t] : tiles) q.add_tile(t, c);
  return q;
}

}  // namespace

WindowGeometry window_geometry(const CodecConfig& cfg, const GSet& window) {
  WindowGeometry g;
  g.window = window;
  g.f_enc = core(window, folner_box(window.ctx(), cfg.frame));
  g.core = core(g.f_enc, cfg.shapes.back());
  return g;
}

Quasitiling window_tiling(const CodecConfig& cfg, const WindowGeometry& geo) {
  if (geo.core.empty()) throw Error(ErrorKind::Precondition, "window too small for any tile");
  Quasitiling q = ow_construct(geo.f_enc, cfg.shapes, cfg.eps);
  std::vector<std::pair<Element, int>> tiles;
  for (const auto& t : q.tiles()) tiles.emplace_back(t.center, t.shape);
  return canonical(cfg, std::move(tiles));
}

Layout plan_layout(const CodecConfig& cfg, const WindowGeometry& geo, const Quasitiling& T, CodeBook& book) {
  Layout L;
  L.window = geo.window;
  L.f_enc = geo.f_enc;
  L.core = geo.core;
  L.T = T;
  L.Tt = recenter_with_hole(shrink_to_disjoint(T, cfg.eps), cfg.K());
  CompleteOptions co;
  co.strict = false;  // holes no tile can absorb stay uncovered
  L.Th = complete_to_tiling(L.Tt, L.f_enc, cfg.eps, co);
  const GSet hole = cfg.hole();
  for (size_t i = 0; i < T.size(); ++i) {
    TilePlan tp;
    tp.center = T.tiles()[i].center;
    tp.shape = T.tiles()[i].shape;
    const long jt = L.Tt.tile_index_by_center(tp.center), jh = L.Th.tile_index_by_center(tp.center);
    if (jt < 0 || jh < 0) throw Error(ErrorKind::Infeasible, "tile lost between pipeline stages");
    tp.tilde = L.Tt.tile(size_t(jt));
    tp.hat = L.Th.tile(size_t(jh));
    const GSet s_tilde = untranslate(tp.tilde, tp.center);
    if (!is_subset(hole, core(s_tilde, cfg.mbar()))) {
      tp.status = TileStatus::NoRoom;
    } else {
      tp.code = book.get(cfg, untranslate(tp.hat, tp.center), s_tilde);
      tp.status = tp.code->gap.holds ? TileStatus::Encoded : TileStatus::Gap;
      tp.t0 = translate(tp.code->s0, tp.center);
    }
    L.tiles.push_back(std::move(tp));
  }
  return L;
}

namespace {

json tile_json(const Ctx& ctx, const TilePlan& t) {
  return {{"center", elem_json(ctx, t.center)},
          {"shape", t.shape},
          {"status", tile_status_name(t.status)},
          {"tilde", t.tilde.size()},
          {"hat", t.hat.size()},
          {"t0", t.t0.size()}};
}

}  // namespace

Encoded encode(const Pattern& y, const CodecConfig& cfg, CodeBook* book) {
  CodeBook local;
  CodeBook& bk = book ? *book : local;
  const auto& sp = cfg.spec;
  const Ctx& ctx = sp.ctx();
  const GSet& window = y.domain();
  if (!locally_admissible(*cfg.source, y)) throw Error(ErrorKind::Precondition, "source window is not admissible");
  const WindowGeometry geo = window_geometry(cfg, window);
  const Layout L = plan_layout(cfg, geo, window_tiling(cfg, geo), bk);

  const GSet w2rm2 = prod({&sp.W, &sp.W, &sp.R(), &sp.M, &sp.M});
  std::map<int, AlmostPattern> marker;
  std::vector<AlmostPattern> parts;
  GSet covered(ctx), centers(ctx);
  for (const auto& tp : L.tiles) {
    if (!marker.count(tp.shape)) marker.emplace(tp.shape, cfg.kit.marker_ap(tp.shape, sp));
    parts.push_back(marker.at(tp.shape).translate(tp.center));
    centers = set_union(centers, GSet::singleton(ctx, tp.center));
    if (tp.status != TileStatus::Encoded) continue;
    const Element ci = ctx->inv(tp.center);
    AlmostPattern ap;
    ap.alpha = tp.code->theta(y.restrict(tp.hat).translate(ci)).translate(tp.center);
    ap.E = GSet(ctx);
    ap.V = set_intersection(translate(tp.code->grid, tp.center), set_product(w2rm2, tp.t0));
    parts.push_back(std::move(ap));
    covered = set_union(covered, tp.hat);
  }

  AlmostPattern glued = glue_almost(parts, sp);
  Pattern fixed;
  if (glued.host) {
    const GSet keep = set_union(glued.domain(), set_product(sp.R(), *glued.V));
    if (!is_subset(glued.host->domain(), window)) throw Error(ErrorKind::Infeasible, "glue leaves the window: frame too small");
    fixed = glued.host->restrict(set_intersection(keep, glued.host->domain()));
  } else {
    fixed = reinforce(glued, sp).pattern;
  }
  const GSet vall = extend_to_maximal(*glued.V, sp.W, core(window, sp.R()));
  const GSet fresh = set_difference(vall, *glued.V);
  Pattern seed;
  try {
    seed = merge({fixed, build_grid(sp, fresh)});
  } catch (const Error& e) {
    throw Error(ErrorKind::Infeasible, std::string("window grid clashes with the glued tiles: ") + e.what());
  }
  Solution sol = lexmin_completion(*sp.X, window, seed, sp.search);
  if (sol.verdict == Verdict::Unknown) throw Error(ErrorKind::Budget, "window fill undecided");
  if (sol.verdict == Verdict::False) throw Error(ErrorKind::Infeasible, "window fill refuted");

  Encoded out;
  out.x = sol.visible();
  const auto occ = occurrences(out.x, cfg.kit.zeta);
  if (!(GSet(ctx, occ) == centers)) throw Error(ErrorKind::Infeasible, "markers occur away from the tile centers");
  AlmostPattern audit;
  audit.alpha = out.x;
  audit.E = set_product(cfg.kit.E, centers);
  if (!beta_audit(audit, cfg.kit.beta).empty()) throw Error(ErrorKind::Infeasible, "β occurs outside E·C");
  out.covered = covered;
  out.coverage = L.core.empty() ? 0.0
                                : double(set_intersection(covered, L.core).size()) / double(L.core.size());
  json tiles = json::array();
  for (const auto& tp : L.tiles) tiles.push_back(tile_json(ctx, tp));
  out.manifest = {{"tiles", tiles},
                  {"T", L.T.to_json()},
                  {"covered", covered.to_json()},
                  {"core_size", L.core.size()},
                  {"coverage", out.coverage}};
  return out;
}

Decoded decode(const Pattern& x, const CodecConfig& cfg, CodeBook* book) {
  CodeBook local;
  CodeBook& bk = book ? *book : local;
  const auto& sp = cfg.spec;
  const Ctx& ctx = sp.ctx();
  const GSet& window = x.domain();
  Decoded out;
  out.y = Pattern(ctx);
  const auto occ = occurrences(x, cfg.kit.zeta);
  out.report["markers"] = occ.size();
  if (occ.empty()) {
    out.report["tiles"] = json::array();
    return out;
  }
  const GSet centers(ctx, occ);
  if (!is_separated(centers, cfg.kit.Z0)) throw Error(ErrorKind::Corrupt, "marker centers are not Z₀⁻¹Z₀-separated");
  std::vector<std::pair<Element, int>> tiles;
  for (const auto& c : centers) {
    int found = -1;
    for (int t = 0; t < cfg.kit.r() && found < 0; ++t)
      if (x.restrict(translate(cfg.kit.kappa[size_t(t)].domain(), sp.ctx()->mul(cfg.kit.g0, c))) ==
          cfg.kit.kappa[size_t(t)].translate(ctx->mul(cfg.kit.g0, c)))
        found = t;
    if (found < 0) throw Error(ErrorKind::Corrupt, "unknown κ block at " + coord_str(ctx, c));
    if (found >= int(cfg.shapes.size())) throw Error(ErrorKind::Corrupt, "κ names no shape at " + coord_str(ctx, c));
    tiles.emplace_back(c, found);
  }
  const Quasitiling T = canonical(cfg, tiles);
  // the tiling is a function of the window; markers must agree with it
  const WindowGeometry geo = window_geometry(cfg, window);
  Quasitiling expect(ctx);
  try {
    expect = window_tiling(cfg, geo);
  } catch (const Error& e) {
    throw Error(ErrorKind::Corrupt, std::string("markers found but the window admits no tiling: ") + e.what());
  }
  bool same = expect.size() == T.size();
  for (size_t i = 0; same && i < T.size(); ++i)
    same = expect.tiles()[i].center == T.tiles()[i].center && expect.tiles()[i].shape == T.tiles()[i].shape;
  if (!same) throw Error(ErrorKind::Corrupt, "markers disagree with the window tiling");

  const Layout L = plan_layout(cfg, geo, T, bk);
  std::vector<Pattern> parts;
  json rep = json::array();
  size_t covered = 0;
  for (auto tp : L.tiles) {
    if (tp.status == TileStatus::Encoded) {
      const Element ci = ctx->inv(tp.center);
      auto src = tp.code->theta_inv(x.restrict(tp.t0).translate(ci));
      if (!src) {
        tp.status = TileStatus::Corrupt;
      } else {
        parts.push_back(src->translate(tp.center));
        covered += tp.hat.size();
      }
    }
    rep.push_back(tile_json(ctx, tp));
  }
  out.y = parts.empty() ? Pattern(ctx) : merge(parts);
  out.report["tiles"] = rep;
  out.report["covered"] = covered;
  return out;
}

json RoundtripStats::to_json() const {
  return {{"trials", trials},
          {"failures", failures},
          {"mean_coverage", mean_coverage},
          {"min_coverage", min_coverage},
          {"errors", errors}};
}

RoundtripStats roundtrip_check(const CodecConfig& cfg, int trials, uint64_t seed, CodeBook* book) {
  CodeBook local;
  CodeBook& bk = book ? *book : local;
  RoundtripStats st;
  st.trials = trials;
  if (trials <= 0) return st;
  const Ctx& ctx = cfg.spec.ctx();
  std::mt19937_64 rng(seed);
  double sum = 0, lo = 1;
  // window lengths vary over one largest shape so both tile shapes show up
  const int spread = int(cfg.shapes.back().size());
  for (int i = 0; i < trials; ++i) {
    const int len = cfg.window - int(rng() % uint64_t(spread));
    const GSet window = ctx->free_rank() == 1 ? free_box(ctx, 0, len - 1) : folner_box(ctx, len);
    try {
      auto y = sample_pattern(*cfg.source, window, rng, cfg.spec.search);
      if (!y) throw Error(ErrorKind::Infeasible, "could not sample a source window");
      Encoded enc = encode(*y, cfg, &bk);
      Decoded dec = decode(enc.x, cfg, &bk);
      if (!(dec.y == y->restrict(enc.covered))) {
        ++st.failures;
        st.errors.push_back("trial " + std::to_string(i) + ": decoded window differs");
      }
      sum += enc.coverage;
      lo = std::min(lo, enc.coverage);
    } catch (const Error& e) {
      ++st.failures;
      st.errors.push_back("trial " + std::to_string(i) + ": " + e.what());
      lo = 0;
    }
  }
  st.mean_coverage = sum / trials;
  st.min_coverage = lo;
  return st;
}

}  // namespace symdyn
