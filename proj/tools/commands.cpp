#include "commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <locale>
#include <random>
#include <sstream>

#include "render.hpp"
#include "symdyn/census.hpp"
#include "symdyn/codec.hpp"
#include "symdyn/kshift.hpp"
#include "symdyn/marker.hpp"
#include "symdyn/quasitiling.hpp"
#include "symdyn/specification.hpp"

namespace symdyn::cli {

namespace {

namespace fs = std::filesystem;

// exit 3: an invariant failed during the run
struct Violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Violation(what);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path);
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string num(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(15) << v;
  return os.str();
}

Ctx zz6_ctx() { return make_ctx(1, {6}); }

GSet preset_k(const std::string& name) {
  if (name == "zz6") {
    auto c = zz6_ctx();
    return GSet(c, {c->make_elem({0}, 0), c->make_elem({0}, 1), c->make_elem({0}, 5)});
  }
  if (name == "l-tromino") {
    auto c = make_ctx(2);
    return GSet(c, {c->make_elem({0, 0}), c->make_elem({1, 0}), c->make_elem({0, 1})});
  }
  if (name == "z01") {
    auto c = make_ctx(1);
    return GSet(c, {c->make_elem({0}), c->make_elem({1})});
  }
  throw Error(ErrorKind::Config, "unknown K preset '" + name + "'");
}

KShiftSpec load_kshift(const std::string& preset, const std::string& path) {
  if (!path.empty()) {
    const json j = read_json(path);
    if (!j.contains("group")) throw Error(ErrorKind::Config, path + ": kshift spec needs group");
    return KShiftSpec::from_json(make_ctx(GroupContext::from_json(j.at("group"))), j);
  }
  return KShiftSpec::make(preset_k(preset));
}

struct OracleChoice {
  std::string name = "full";
  int q = 2;
  int rank = 1;
  std::string k_preset = "zz6";
  std::string k_file;
};

void add_oracle_flags(CLI::App* c, OracleChoice& o) {
  c->add_option("--oracle", o.name, "full | golden-mean | kshift")->check(CLI::IsMember({"full", "golden-mean", "kshift"}));
  c->add_option("--q", o.q, "alphabet size of the full shift")->check(CLI::Range(1, 255));
  c->add_option("--rank", o.rank, "free rank for the full shift")->check(CLI::Range(1, 2));
  c->add_option("--k", o.k_preset, "K preset for kshift: zz6 | l-tromino | z01");
  c->add_option("--k-file", o.k_file, "KShiftSpec JSON for kshift");
}

OraclePtr make_oracle(const OracleChoice& o) {
  if (o.name == "full") return full_shift(make_ctx(o.rank), o.q);
  if (o.name == "golden-mean") return golden_mean(make_ctx(1));
  return omega_k(load_kshift(o.k_preset, o.k_file).K);
}

int alphabet_of(const OracleChoice& o) { return o.name == "full" ? o.q : 2; }

// one <svg> per panel, stacked vertically
std::string stack_svg(const std::vector<std::string>& panels, int gap = 24) {
  int w = 0, h = 0;
  std::vector<std::pair<int, int>> dims;
  for (const auto& p : panels) {
    int pw = 0, ph = 0;
    std::sscanf(p.c_str(), "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\"", &pw, &ph);
    dims.emplace_back(pw, ph);
    w = std::max(w, pw);
    h += ph + gap;
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  int y = 0;
  for (size_t i = 0; i < panels.size(); ++i) {
    os << "<g transform=\"translate(0," << y << ")\">\n" << panels[i] << "</g>\n";
    y += dims[i].second + gap;
  }
  os << "</svg>\n";
  return os.str();
}

std::string side_by_side_svg(const std::vector<std::string>& panels, int gap = 36) {
  int w = 0, h = 0;
  std::vector<int> widths;
  for (const auto& p : panels) {
    int pw = 0, ph = 0;
    std::sscanf(p.c_str(), "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\"", &pw, &ph);
    widths.push_back(pw);
    w += pw + gap;
    h = std::max(h, ph);
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  int x = 0;
  for (size_t i = 0; i < panels.size(); ++i) {
    os << "<g transform=\"translate(" << x << ",0)\">\n" << panels[i] << "</g>\n";
    x += widths[i] + gap;
  }
  os << "</svg>\n";
  return os.str();
}

// ---- entropy

int cmd_entropy(const OracleChoice& oc, int n_max, int halo, const std::string& out) {
  auto o = make_oracle(oc);
  CensusOptions co;
  co.halo = halo;
  const double bound = std::log(double(alphabet_of(oc))) + 1e-12;
  std::ostringstream os;
  os << "n,count,estimate,increment\n";
  for (int n = 1; n <= n_max; ++n) {
    const BigInt c = count_blocks(*o, folner_box(o->ctx(), n), co);
    const double est = entropy_estimate(*o, n, co);
    const double inc = entropy_increment(*o, n, co);
    require(c >= 1, "empty census at n=" + std::to_string(n));
    require(est <= bound, "estimate above log of the alphabet at n=" + std::to_string(n));
    os << n << ',' << c.str() << ',' << num(est) << ',' << num(inc) << '\n';
  }
  emit(out, os.str());
  return 0;
}

// ---- kshift

GSet kshift_window(const Ctx& c, int side) {
  std::vector<std::pair<int, int>> r(size_t(c->free_rank()), {0, side - 1});
  return set_product(interval_box(c, r), folner_box(c, 0));
}

std::string figure1_svg(int cols) {
  const GSet k = preset_k("zz6");
  const Ctx c = k.ctx();
  const GSet f = kshift_window(c, cols);
  const GSet v = greedy_maximal(k, f);
  require(is_maximal_in_window(v, k, f) != Verdict::False, "greedy set is not maximal");
  SvgStyle top;
  top.overlays.push_back({k, "#d02020", "#d02020"});
  top.origin_dot = true;
  top.title = "Z x Z6 with K";
  SvgStyle bottom;
  bottom.title = "maximal K-separated set";
  return stack_svg({render_svg(Pattern::constant(f, 0), top), render_svg(indicator(v, f), bottom)});
}

int cmd_kshift(const std::string& preset, const std::string& file, int side, const std::string& format,
               const std::string& out, bool figure1) {
  if (figure1) {
    emit(out, figure1_svg(side));
    return 0;
  }
  const KShiftSpec spec = load_kshift(preset, file);
  const GSet f = kshift_window(spec.K.ctx(), side);
  const GSet v = greedy_maximal(spec.K, f);
  require(is_k_separated(v, spec.K), "greedy set is not K-separated");
  require(is_maximal_in_window(v, spec.K, f) != Verdict::False, "greedy set is not maximal on the core");
  const Pattern p = indicator(v, f);
  if (format == "pgm") emit(out, render_pgm(p));
  else if (format == "rle") emit(out, render_rle(p));
  else emit(out, render_svg(p));
  return 0;
}

// ---- spec-check

json spec_result_json(const SpecCheckResult& r) {
  json j = {{"pass", r.pass},       {"trials_run", r.trials_run},       {"refuted", r.refuted},
            {"unknown", r.unknown}, {"skipped", r.skipped},             {"sweep_domains", r.sweep_domains},
            {"refuted_in_sweep", r.refuted_in_sweep}, {"first_refuted", r.first_refuted_trial}};
  if (r.alpha1) j["alpha1"] = r.alpha1->to_json();
  if (r.alpha2) j["alpha2"] = r.alpha2->to_json();
  if (r.refuting_cell) j["refuting_cell"] = r.alpha1->ctx()->coords(*r.refuting_cell);
  return j;
}

int cmd_spec_check(const OracleChoice& oc, const std::string& margin_name, int radius, SpecCheckOptions opt,
                   const std::string& out) {
  auto o = make_oracle(oc);
  const Ctx& c = o->ctx();
  GSet margin(c);
  if (margin_name == "identity") {
    margin = GSet::identity(c);
  } else {
    if (oc.name != "kshift") throw Error(ErrorKind::Config, "margin " + margin_name + " needs --oracle kshift");
    const KShiftSpec s = load_kshift(oc.k_preset, oc.k_file);
    margin = margin_name == "kinvk" ? s.kinvk : s.margin;
  }
  const SpecCheckResult r = check_specification(*o, margin, folner_box(c, radius), opt);
  json j = spec_result_json(r);
  j["margin"] = margin_name;
  emit(out, dump(j));
  // KK⁻¹K is a guaranteed margin for K-shifts
  if (oc.name == "kshift" && margin_name == "margin") require(r.refuted == 0, "KK⁻¹K margin refuted");
  return 0;
}

// ---- quasitile

std::vector<GSet> box_shapes(const Ctx& c, const std::vector<int>& radii) {
  std::vector<GSet> s;
  for (int r : radii) s.push_back(folner_box(c, r));
  return s;
}

json tiling_stats(const Quasitiling& t, const GSet& core_set, const Rational& eps) {
  return {{"tiles", t.size()},
          {"grade", grade_name(disjointness_grade(t, eps))},
          {"covering_of_core", to_double(covering_fraction(t, core_set))}};
}

int cmd_quasitile(int rank, int side, const std::string& eps_s, const std::vector<int>& radii, const std::string& out,
                  const std::string& svg) {
  const Ctx c = make_ctx(rank);
  Rational eps;
  try {
    eps = Rational(eps_s);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Config, "bad --eps " + eps_s);
  }
  const int r = r_epsilon(eps);
  std::vector<int> rad = radii;
  if (rad.empty())
    for (int i = 0, v = 1; i < r; ++i, v = 2 * v + 1) rad.push_back(v);
  const std::vector<GSet> shapes = box_shapes(c, rad);
  const GSet f = kshift_window(c, side);
  const GSet core_set = core(f, shapes.back());
  const Quasitiling t = ow_construct(f, shapes, eps);
  const Quasitiling tt = shrink_to_disjoint(t, eps);
  CompleteOptions copt;
  copt.strict = false;
  const Quasitiling th = complete_to_tiling(tt, f, eps, copt);
  long worst = 0;
  bool gain_ok = true;
  for (size_t i = 0; i < tt.size(); ++i) {
    const long gain = long(th.tile(i).size()) - long(tt.tile(i).size());
    const Rational cap = 2 * eps * long(tt.tile(i).size());
    const BigInt cap_ceil = (numerator(cap) + denominator(cap) - 1) / denominator(cap);
    worst = std::max(worst, gain);
    gain_ok = gain_ok && BigInt(gain) <= cap_ceil;
  }
  json j = {{"eps", eps.str()},
            {"r_eps", r},
            {"shape_radii", rad},
            {"window", f.size()},
            {"core", core_set.size()},
            {"T", tiling_stats(t, core_set, eps)},
            {"T_tilde", tiling_stats(tt, core_set, eps)},
            {"T_hat", tiling_stats(th, core_set, eps)},
            {"max_gain", worst}};
  emit(out, dump(j));
  if (!svg.empty()) {
    std::vector<std::pair<Element, int>> cells;
    for (size_t i = 0; i < th.size(); ++i)
      for (const auto& e : th.tile(i)) cells.emplace_back(e, 1 + int(i % 3));
    SvgStyle st;
    st.cell = rank == 1 ? 4 : 8;
    Pattern p = Pattern::from_pairs(c, cells);
    emit(svg, render_svg(overlay(Pattern::constant(f, 0), p), st));
  }
  const Grade g = disjointness_grade(t, eps);
  require(g != Grade::None && g != Grade::EpsDisjoint, "ow_construct is not strongly ε-disjoint");
  require(covering_fraction(t, core_set) >= 1 - eps, "ow_construct covers less than 1-ε of the core");
  require(disjointness_grade(tt, eps) == Grade::Disjoint, "shrunk tiling is not disjoint");
  require(covering_fraction(tt, core_set) >= (1 - eps) * (1 - eps), "shrunk tiling covers less than (1-ε)² of the core");
  require(disjointness_grade(th, eps) == Grade::Disjoint, "completed tiling is not disjoint");
  require(gain_ok, "a completed tile grew by more than ⌈2ε|S̃|⌉");
  return 0;
}

// ---- marker

MarkerOptions marker_options(const GridSpec& s, int kappa) {
  MarkerOptions o;
  o.kappa_count = kappa;
  if (s.name == "zz4-full2") {
    std::vector<std::pair<Element, int>> cells;
    for (int x = -2; x <= 2; ++x)
      for (int t = 0; t < 4; ++t) cells.emplace_back(s.ctx()->make_elem({x}, t), x == 0 && t == 0 ? 1 : 0);
    o.x0 = Pattern::from_pairs(s.ctx(), cells);
  }
  return o;
}

int cmd_marker(const std::string& fixture, int kappa, const std::string& out, const std::string& svg, int t) {
  const GridSpec s = grid_fixture(fixture);
  const MarkerKit k = assemble_marker(s, marker_options(s, kappa));
  emit(out, dump(k.to_json()));
  if (!svg.empty()) emit(svg, marker_svg(k, t));
  const auto problems = check_kit(k, s);
  require(problems.empty(), problems.empty() ? "" : problems.front());
  require(verify_unambiguous(k), "marker is not unambiguous");
  return 0;
}

// ---- codec

json load_config_json(const std::string& path) {
  json j = read_json(path);
  if (j.contains("kit_path") && !j.contains("kit")) {
    fs::path kp = j.at("kit_path").get<std::string>();
    if (kp.is_relative()) kp = fs::path(path).parent_path() / kp;
    j["kit"] = read_json(kp.string());
  }
  return j;
}

CodecConfig load_config(const std::string& path, const std::string& fixture) {
  if (!path.empty()) return CodecConfig::from_json(load_config_json(path));
  return codec_fixture(fixture);
}

Pattern load_pattern(const Ctx& c, const std::string& path) {
  try {
    return Pattern::from_json(c, read_json(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
}

int cmd_codec_config(const std::string& fixture, const std::string& out) {
  emit(out, dump(codec_fixture(fixture).to_json()));
  return 0;
}

int cmd_codec_encode(const std::string& cfg_path, const std::string& fixture, const std::string& in, int random_len,
                     uint64_t seed, const std::string& out, const std::string& manifest, const std::string& y_out) {
  const CodecConfig cfg = load_config(cfg_path, fixture);
  Pattern y;
  if (!in.empty()) {
    y = load_pattern(cfg.spec.ctx(), in);
  } else {
    if (random_len <= 0) throw Error(ErrorKind::Config, "encode needs --in or --random");
    std::mt19937_64 rng(seed);
    auto s = sample_pattern(*cfg.source, free_box(cfg.spec.ctx(), 0, random_len - 1), rng);
    if (!s) throw Error(ErrorKind::Infeasible, "could not sample a source window");
    y = *s;
  }
  if (!y_out.empty()) emit(y_out, y.to_json().dump() + "\n");
  const Encoded e = encode(y, cfg);
  emit(out, e.x.to_json().dump() + "\n");
  if (!manifest.empty()) emit(manifest, dump(e.manifest));
  return 0;
}

int cmd_codec_decode(const std::string& cfg_path, const std::string& fixture, const std::string& in,
                     const std::string& out, const std::string& report) {
  const CodecConfig cfg = load_config(cfg_path, fixture);
  const Decoded d = decode(load_pattern(cfg.spec.ctx(), in), cfg);
  emit(out, d.y.to_json().dump() + "\n");
  if (!report.empty()) emit(report, dump(d.report));
  return 0;
}

int cmd_codec_roundtrip(const std::string& cfg_path, const std::string& fixture, int trials, uint64_t seed,
                        const std::string& out) {
  const CodecConfig cfg = load_config(cfg_path, fixture);
  const RoundtripStats st = roundtrip_check(cfg, trials, seed);
  emit(out, dump(st.to_json()));
  require(st.failures == 0, std::to_string(st.failures) + " roundtrip failures");
  return 0;
}

// ---- repro

int cmd_repro_zz6(int n_max, const std::string& out) {
  const GSet k = preset_k("zz6");
  const Ctx c = k.ctx();
  auto o = omega_k(k);
  const double target = std::log(3.0) / 6;
  std::ostringstream os;
  os << "n,count,estimate\n";
  bool ok = true;
  for (int n = 1; n <= n_max; ++n) {
    const BigInt cnt = count_blocks(*o, kshift_window(c, n));
    const double est = log_big(cnt) / double(6 * n);
    BigInt p = 1;
    for (int i = 0; i < n; ++i) p *= 3;
    ok = ok && cnt == p && std::abs(est - target) <= 1e-9;
    os << n << ',' << cnt.str() << ',' << num(est) << '\n';
  }
  emit(out, os.str());
  require(ok, "column counts differ from 3^n");
  return 0;
}

struct TrianglePair {
  Ctx ctx = make_ctx(2);
  GSet K;
  Pattern alpha1, alpha2;
};

TrianglePair triangle_pair() {
  TrianglePair tp;
  const Ctx& c = tp.ctx;
  tp.K = preset_k("l-tromino");
  auto tri = [&](int x0, int y0, bool upper) {
    std::vector<std::pair<Element, int>> cells;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const bool in = upper ? j >= i : i >= j;
        if (!in) continue;
        const int x = x0 + i, y = y0 + j;
        const bool corner = (i == 0 && j == 0) || (i == 2 && j == 2);
        cells.emplace_back(c->make_elem({x, y}), corner ? 1 : 0);
      }
    return Pattern::from_pairs(c, cells);
  };
  tp.alpha1 = tri(-2, 1, true);
  tp.alpha2 = tri(1, -2, false);
  return tp;
}

// cells next to p that are 1 in every admissible extension
GSet forced_ones(const Oracle& o, const Pattern& p, int halo) {
  std::vector<Element> out;
  for (const auto& cell : set_difference(halo_region(p.domain(), 1), p.domain())) {
    const Pattern probe = overlay(p, Pattern::from_pairs(p.ctx(), {{cell, 0}}));
    if (exact_admissible(o, probe, halo) == Verdict::False) out.push_back(cell);
  }
  return GSet(p.ctx(), out);
}

std::string coords_str(const Ctx& c, const Element& e) {
  std::string s = "(";
  auto v = c->coords(e);
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + ")";
}

int cmd_repro_margin(const std::string& out, const std::string& text_out, int sweep) {
  const TrianglePair tp = triangle_pair();
  const Ctx& c = tp.ctx;
  const KShiftSpec spec = KShiftSpec::make(tp.K);
  auto o = omega_k(tp.K);
  const int halo = 3;
  std::ostringstream tx;
  const Verdict v1 = exact_admissible(*o, tp.alpha1, halo), v2 = exact_admissible(*o, tp.alpha2, halo);
  const bool apart = is_apart(tp.alpha1.domain(), tp.alpha2.domain(), spec.kinvk);
  const Solution both = exact_witness(*o, merge({tp.alpha1, tp.alpha2}), halo);
  const GSet f1 = forced_ones(*o, tp.alpha1, halo), f2 = forced_ones(*o, tp.alpha2, halo);
  tx << "alpha1 admissible: " << verdict_name(v1) << "\n";
  tx << "alpha2 admissible: " << verdict_name(v2) << "\n";
  tx << "domains K^-1K-apart: " << (apart ? "yes" : "no") << "\n";
  tx << "alpha1 forces 1 at:";
  for (const auto& e : f1) tx << ' ' << coords_str(c, e);
  tx << "\nalpha2 forces 1 at:";
  for (const auto& e : f2) tx << ' ' << coords_str(c, e);
  tx << "\nunion admissible: " << verdict_name(both.verdict);
  if (both.refuting_cell) tx << " (refuted at " << coords_str(c, *both.refuting_cell) << ")";
  tx << "\n";
  bool forced_clash = false;
  for (const auto& a : f1)
    for (const auto& b : f2)
      if (intersects(translate(tp.K, a), translate(tp.K, b))) forced_clash = true;
  tx << "forced ones K-overlap: " << (forced_clash ? "yes" : "no") << "\n";
  if (sweep > 0) {
    SpecCheckOptions opt;
    opt.trials = 0;
    opt.halo = halo;
    opt.sweep_side = sweep;
    const SpecCheckResult r = check_specification(*o, spec.kinvk, folner_box(c, 4), opt);
    tx << "split sweep (side " << sweep << ", " << r.sweep_domains << " domains): "
       << (r.pass ? "no counterexample" : "counterexample at domain " + std::to_string(r.first_refuted_trial)) << "\n";
    if (!r.pass) tx << "  " << r.alpha1->to_json().dump() << "\n  " << r.alpha2->to_json().dump() << "\n";
  }
  emit(text_out, tx.str());

  SvgStyle left;
  left.overlays.push_back({spec.kinvk, "#d8c000", "#fff3a0"});
  left.overlays.push_back({tp.K, "#d02020", "#d02020"});
  left.origin_dot = true;
  left.title = "K and K^-1 K";
  SvgStyle right;
  right.origin_dot = true;
  right.overlays.push_back({set_union(f1, f2), "#555555", "#999999"});
  right.title = "alpha1, alpha2 and the forced ones";
  const GSet frame1 = interval_box(c, {{-2, 2}, {-2, 2}});
  const GSet frame2 = interval_box(c, {{-3, 4}, {-3, 4}});
  const std::string svg =
      side_by_side_svg({render_svg(Pattern::constant(frame1, 0), left),
                        render_svg(overlay(Pattern::constant(frame2, 0), merge({tp.alpha1, tp.alpha2})), right)});
  emit(out, svg);
  require(v1 == Verdict::True && v2 == Verdict::True, "a triangle block is not admissible");
  require(apart, "triangle domains are not K^-1K-apart");
  require(both.verdict == Verdict::False, "the triangle union was not refuted");
  return 0;
}

// ---- validate

json validate_config(const std::string& path) {
  json errors = json::array(), warnings = json::array();
  json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    return {{"errors", {e.what()}}, {"warnings", warnings}};
  }
  auto err = [&](const std::string& field, const std::string& msg) { errors.push_back(field + ": " + msg); };
  GridSpec spec;
  bool have_spec = false;
  if (!j.contains("grid") || !j["grid"].is_string()) {
    err("grid", "missing fixture name");
  } else {
    try {
      spec = grid_fixture(j["grid"].get<std::string>());
      have_spec = true;
    } catch (const Error& e) {
      err("grid", e.what());
    }
  }
  if (j.contains("source")) {
    const std::string kind = j["source"].value("kind", "full");
    if (kind != "full" && kind != "golden-mean") err("source", "unknown kind " + kind);
  }
  std::vector<int> radii;
  if (!j.contains("shape_radii") || !j["shape_radii"].is_array() || j["shape_radii"].empty()) {
    err("shape_radii", "missing or empty");
  } else {
    for (const auto& r : j["shape_radii"]) {
      if (!r.is_number_integer() || r.get<int>() < 0) err("shape_radii", "entries must be nonnegative integers");
      else radii.push_back(r.get<int>());
    }
    for (size_t i = 1; i < radii.size(); ++i)
      if (radii[i] <= radii[i - 1]) err("shape_radii", "must be strictly increasing");
  }
  Rational eps(1, 40);
  if (j.contains("eps")) {
    try {
      eps = Rational(j["eps"].get<std::string>());
      if (eps <= 0 || eps >= 1) err("eps", "must lie in (0,1)");
    } catch (const std::exception&) {
      err("eps", "not a rational string");
    }
  }
  for (const char* f : {"frame", "census_halo", "window"})
    if (j.contains(f) && (!j[f].is_number_integer() || j[f].get<int>() < 0)) err(f, "must be a nonnegative integer");
  json kit;
  if (j.contains("kit_path")) {
    fs::path kp = j["kit_path"].get<std::string>();
    if (kp.is_relative()) kp = fs::path(path).parent_path() / kp;
    if (!fs::exists(kp)) err("kit_path", "file not found: " + kp.string());
    else
      try {
        kit = read_json(kp.string());
      } catch (const Error& e) {
        err("kit_path", e.what());
      }
  } else if (j.contains("kit")) {
    kit = j["kit"];
  }
  if (have_spec && kit.is_object()) {
    try {
      const MarkerKit k = MarkerKit::from_json(spec.ctx(), kit);
      if (int(radii.size()) > k.r()) err("kit", "fewer appendages than shapes");
      const double delta = j.value("delta_bits", 0.0);
      const long mb = long(k.margin_bar.size());
      const double theta = 2 * std::log2(2.0) + 5.0 * double(mb) * std::log2(3.0);
      const double e = to_double(eps);
      if (5.0 * double(mb) * e >= 1) warnings.push_back("eps: 5|M̄|ε = " + num(5.0 * double(mb) * e) + " ≥ 1");
      if (delta <= 0 || theta * e >= delta)
        warnings.push_back("eps: Θ^ε ≥ 2^δ (log2 Θ·ε = " + num(theta * e) + ", δ = " + num(delta) + ")");
    } catch (const std::exception& ex) {
      err("kit", ex.what());
    }
  }
  return {{"errors", errors}, {"warnings", warnings}};
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Budget:
    case ErrorKind::Infeasible:
    case ErrorKind::Corrupt: return 2;
    default: return 1;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"symbolic dynamics workbench"};
  app.require_subcommand(1);
  std::function<int()> action;

  OracleChoice oc;
  int n_max = 8, halo = 0;
  std::string out, svg, text_out;

  auto* ent = app.add_subcommand("entropy", "block counts and entropy estimates as CSV");
  add_oracle_flags(ent, oc);
  ent->add_option("--n", n_max, "largest box radius")->check(CLI::Range(1, 200));
  ent->add_option("--halo", halo, "census halo")->check(CLI::Range(0, 8));
  ent->add_option("--out", out, "CSV path (stdout by default)");
  ent->callback([&] { action = [&] { return cmd_entropy(oc, n_max, halo, out); }; });

  std::string preset = "zz6", kfile, format = "svg";
  int side = 12;
  bool fig1 = false;
  auto* ks = app.add_subcommand("kshift", "maximal K-separated sets as PGM, run-length text or SVG");
  ks->add_option("--k", preset, "K preset: zz6 | l-tromino | z01");
  ks->add_option("--spec", kfile, "KShiftSpec JSON");
  ks->add_option("--side", side, "window side")->check(CLI::Range(1, 4096));
  ks->add_option("--format", format)->check(CLI::IsMember({"svg", "pgm", "rle"}));
  ks->add_option("--out", out);
  ks->add_flag("--figure1", fig1, "the Z×Z6 picture: K on top, a maximal set below");
  ks->callback([&] { action = [&] { return cmd_kshift(preset, kfile, side, format, out, fig1); }; });

  SpecCheckOptions sopt;
  std::string margin = "margin";
  int radius = 4;
  auto* sc = app.add_subcommand("spec-check", "randomized specification check");
  add_oracle_flags(sc, oc);
  sc->add_option("--margin", margin)->check(CLI::IsMember({"identity", "kinvk", "margin"}));
  sc->add_option("--radius", radius, "window box radius")->check(CLI::Range(1, 64));
  sc->add_option("--trials", sopt.trials)->check(CLI::Range(0L, 100000000L));
  sc->add_option("--seed", sopt.seed);
  sc->add_option("--halo", sopt.halo)->check(CLI::Range(0, 8));
  sc->add_option("--sweep", sopt.sweep_side, "sweep split boxes up to this side first")->check(CLI::Range(0, 8));
  sc->add_option("--enumerate", sopt.enumerate_limit, "enumerate part blocks up to this census size");
  sc->add_flag("--parallel", sopt.parallel);
  sc->add_option("--out", out);
  sc->callback([&] { action = [&] { return cmd_spec_check(oc, margin, radius, sopt, out); }; });

  int rank = 1, qside = 2000;
  std::string eps_s = "1/5";
  std::vector<int> radii;
  auto* qt = app.add_subcommand("quasitile", "Ornstein-Weiss pipeline on a box window");
  qt->add_option("--rank", rank)->check(CLI::Range(1, 2));
  qt->add_option("--side", qside, "window side")->check(CLI::Range(1, 100000));
  qt->add_option("--eps", eps_s, "rational, e.g. 1/5");
  qt->add_option("--shapes", radii, "box radii, smallest first (default: r_ε radii 1, 3, 7, …)")->delimiter(',');
  qt->add_option("--out", out);
  qt->add_option("--svg", svg);
  qt->callback([&] { action = [&] { return cmd_quasitile(rank, qside, eps_s, radii, out, svg); }; });

  std::string fixture = "z-full3";
  int kappa = 2, t = 0;
  auto* mk = app.add_subcommand("marker", "assemble and verify a marker kit");
  mk->add_option("--fixture", fixture)->check(CLI::IsMember({"z-full3", "zz4-full2", "z-golden"}));
  mk->add_option("--kappa", kappa, "number of appendages")->check(CLI::Range(1, 64));
  mk->add_option("--out", out);
  mk->add_option("--svg", svg);
  mk->add_option("--t", t, "appendage drawn in the SVG");
  mk->callback([&] { action = [&] { return cmd_marker(fixture, kappa, out, svg, t); }; });

  std::string cfg_path, in, manifest, report, y_out;
  std::string codec_fixture_name = "z-full3";
  int random_len = 0, trials = 10;
  uint64_t seed = 1;
  auto* cd = app.add_subcommand("codec", "finite-window encoder and decoder");
  cd->require_subcommand(1);
  auto cfg_flags = [&](CLI::App* c) {
    c->add_option("--config", cfg_path, "codec config JSON");
    c->add_option("--fixture", codec_fixture_name, "used when --config is absent");
  };
  auto* cc = cd->add_subcommand("config", "write a fixture config");
  cc->add_option("--fixture", codec_fixture_name);
  cc->add_option("--out", out);
  cc->callback([&] { action = [&] { return cmd_codec_config(codec_fixture_name, out); }; });
  auto* ce = cd->add_subcommand("encode");
  cfg_flags(ce);
  ce->add_option("--in", in, "source pattern JSON");
  ce->add_option("--random", random_len, "sample a source window of this length instead");
  ce->add_option("--seed", seed);
  ce->add_option("--out", out)->required();
  ce->add_option("--manifest", manifest);
  ce->add_option("--source-out", y_out, "write the sampled source");
  ce->callback([&] {
    action = [&] { return cmd_codec_encode(cfg_path, codec_fixture_name, in, random_len, seed, out, manifest, y_out); };
  });
  auto* cde = cd->add_subcommand("decode");
  cfg_flags(cde);
  cde->add_option("--in", in)->required();
  cde->add_option("--out", out)->required();
  cde->add_option("--report", report);
  cde->callback([&] { action = [&] { return cmd_codec_decode(cfg_path, codec_fixture_name, in, out, report); }; });
  auto* cr = cd->add_subcommand("roundtrip");
  cfg_flags(cr);
  cr->add_option("--trials", trials)->check(CLI::Range(0, 100000));
  cr->add_option("--seed", seed);
  cr->add_option("--out", out);
  cr->callback([&] { action = [&] { return cmd_codec_roundtrip(cfg_path, codec_fixture_name, trials, seed, out); }; });

  int sweep = 0;
  auto* rp = app.add_subcommand("repro", "reproduce the worked examples");
  rp->require_subcommand(1);
  auto* rz = rp->add_subcommand("zz6-entropy", "column counts of the Z×Z6 K-shift");
  rz->add_option("--n", n_max)->check(CLI::Range(1, 64));
  rz->add_option("--out", out);
  rz->callback([&] { action = [&] { return cmd_repro_zz6(n_max, out); }; });
  auto* rm = rp->add_subcommand("margin-counterexample", "the triangle pair in Z² refuting margin K⁻¹K");
  rm->add_option("--out", out, "SVG path");
  rm->add_option("--text", text_out, "refutation text (stdout by default)");
  rm->add_option("--sweep", sweep, "also run the split sweep up to this side")->check(CLI::Range(0, 8));
  rm->callback([&] { action = [&] { return cmd_repro_margin(out, text_out, sweep); }; });

  auto* va = app.add_subcommand("validate", "check a codec config without running it");
  va->add_option("--config", cfg_path)->required();
  va->add_option("--out", out);
  va->callback([&] {
    action = [&] {
      const json r = validate_config(cfg_path);
      emit(out, dump(r));
      return r["errors"].empty() ? 0 : 1;
    };
  });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    return action ? action() : 1;
  } catch (const Violation& v) {
    std::cerr << "property violation: " << v.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace symdyn::cli
