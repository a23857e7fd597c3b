#include "walkprior/harness/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "walkprior/common.hpp"

namespace wp::harness {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(' ');
    const auto e = s.find_last_not_of(' ');
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

bool to_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

[[noreturn]] void fail(const CsvTable& t, int line, const std::string& msg) {
  throw Error(t.source + ":" + std::to_string(line) + ": " + msg);
}

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else if (c == '-' && !o.empty() && o.back() == '-') o += " -";  // no "--" inside comments
    else o.push_back(c);
  }
  return o;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Axis {
  double lo = 0.0, hi = 1.0, step = 0.2;
};

Axis nice_axis(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
    lo -= pad;
    hi += pad;
  }
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (raw <= step) break;
  }
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

struct Stat {
  double mean = 0.0, std = 0.0;
  int n = 0;
};

Stat stat_of(const std::vector<double>& v) {
  Stat s;
  s.n = static_cast<int>(v.size());
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (s.n - 1));
  }
  return s;
}

// A run is one seed's rows.
struct Run {
  const CsvTable* table;
  std::vector<int> rows;
};

std::vector<Run> split_runs(const std::vector<CsvTable>& tables) {
  std::vector<Run> runs;
  for (const auto& t : tables) {
    const int sc = t.column("seed");
    if (sc < 0) {
      Run r{&t, {}};
      for (int i = 0; i < static_cast<int>(t.rows.size()); ++i) r.rows.push_back(i);
      runs.push_back(std::move(r));
      continue;
    }
    std::map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(t.rows.size()); ++i) {
      const std::string& key = t.rows[i][sc];
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, static_cast<int>(runs.size())).first;
        runs.push_back(Run{&t, {}});
      }
      runs[it->second].rows.push_back(i);
    }
  }
  return runs;
}

class Svg {
 public:
  Svg(int w, int h) : w_(w), h_(h) {}
  std::ostringstream body;
  std::string finish(const std::vector<std::string>& meta) const {
    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    for (const auto& m : meta) o << "<!-- " << esc(m) << " -->\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
      << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << w_ << "\" height=\"" << h_ << "\" fill=\"white\"/>\n";
    o << body.str() << "</svg>\n";
    return o.str();
  }

 private:
  int w_, h_;
};

constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;
constexpr const char* kColor = "#1f77b4";

void frame(Svg& svg, const PlotOptions& o, const std::string& title, const std::string& xlabel,
           const std::string& ylabel, const Axis& y) {
  const double pw = o.width - kLeft - kRight, ph = o.height - kTop - kBottom;
  auto& b = svg.body;
  b << "<text x=\"" << num(o.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << esc(title) << "</text>\n";
  b << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  const int nt = static_cast<int>(std::lround((y.hi - y.lo) / y.step));
  for (int i = 0; i <= nt; ++i) {
    const double py = kTop + ph - ph * i / nt;
    b << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py) << "\" x2=\"" << num(kLeft + pw)
      << "\" y2=\"" << num(py) << "\"/>\n";
  }
  b << "</g>\n<g text-anchor=\"end\">\n";
  for (int i = 0; i <= nt; ++i) {
    const double py = kTop + ph - ph * i / nt;
    b << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py + 4) << "\">"
      << tick_label(y.lo + i * y.step) << "</text>\n";
  }
  b << "</g>\n";
  b << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
    << "\" y2=\"" << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  b << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(kLeft + pw)
    << "\" y2=\"" << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  b << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(o.height - 10.0)
    << "\" text-anchor=\"middle\">" << esc(xlabel) << "</text>\n";
  b << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << num(kTop + ph / 2) << ")\">" << esc(ylabel) << "</text>\n";
}

std::string line_plot(const std::vector<Run>& runs, int xc, int yc, const PlotOptions& o,
                      const std::vector<std::string>& meta) {
  const CsvTable& t0 = *runs.front().table;
  std::map<double, std::vector<double>> by_x;
  for (const auto& r : runs) {
    for (int i : r.rows) {
      double x = 0.0, y = 0.0;
      to_number(r.table->rows[i][xc], x);
      if (to_number(r.table->rows[i][yc], y)) by_x[x].push_back(y);
    }
  }
  std::vector<std::pair<double, Stat>> pts;
  for (const auto& [x, ys] : by_x) pts.emplace_back(x, stat_of(ys));
  const bool band = runs.size() > 1;
  double ylo = 0.0, yhi = 0.0, xlo = 0.0, xhi = 1.0;
  if (!pts.empty()) {
    ylo = yhi = pts.front().second.mean;
    xlo = pts.front().first;
    xhi = pts.back().first;
  }
  for (const auto& [x, s] : pts) {
    ylo = std::min(ylo, s.mean - (band ? s.std : 0.0));
    yhi = std::max(yhi, s.mean + (band ? s.std : 0.0));
  }
  const Axis y = nice_axis(ylo, yhi);
  const Axis x = nice_axis(xlo, xhi);
  Svg svg(o.width, o.height);
  const std::string ylabel = t0.columns[yc];
  frame(svg, o, ylabel + (band ? " (mean ± std, " + std::to_string(runs.size()) + " seeds)" : ""),
        t0.columns[xc], ylabel, y);
  const double pw = o.width - kLeft - kRight, ph = o.height - kTop - kBottom;
  auto px = [&](double v) { return kLeft + pw * (v - x.lo) / (x.hi - x.lo); };
  auto py = [&](double v) { return kTop + ph - ph * (v - y.lo) / (y.hi - y.lo); };
  auto& b = svg.body;
  const int nx = static_cast<int>(std::lround((x.hi - x.lo) / x.step));
  b << "<g text-anchor=\"middle\">\n";
  for (int i = 0; i <= nx; ++i) {
    const double v = x.lo + i * x.step;
    b << "<text x=\"" << num(px(v)) << "\" y=\"" << num(kTop + ph + 18) << "\">" << tick_label(v)
      << "</text>\n";
  }
  b << "</g>\n";
  if (band && !pts.empty()) {
    b << "<polygon fill=\"" << kColor << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (const auto& [xv, s] : pts) b << num(px(xv)) << "," << num(py(s.mean + s.std)) << " ";
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      b << num(px(it->first)) << "," << num(py(it->second.mean - it->second.std)) << " ";
    }
    b << "\"/>\n";
  }
  b << "<polyline fill=\"none\" stroke=\"" << kColor << "\" stroke-width=\"1.5\" points=\"";
  for (const auto& [xv, s] : pts) b << num(px(xv)) << "," << num(py(s.mean)) << " ";
  b << "\"/>\n";
  return svg.finish(meta);
}

std::string bar_plot(const std::vector<Run>& runs, int xc, int yc, const PlotOptions& o,
                     const std::vector<std::string>& meta) {
  const CsvTable& t0 = *runs.front().table;
  std::vector<std::string> cats;
  std::map<std::string, std::vector<double>> vals;
  for (const auto& r : runs) {
    for (int i : r.rows) {
      const std::string& c = r.table->rows[i][xc];
      if (!vals.count(c)) cats.push_back(c);
      double y = 0.0;
      auto& v = vals[c];
      if (to_number(r.table->rows[i][yc], y)) v.push_back(y);
    }
  }
  const bool bars = runs.size() > 1;
  double ylo = 0.0, yhi = 0.0;
  for (const auto& c : cats) {
    const Stat s = stat_of(vals[c]);
    if (s.n == 0) continue;
    ylo = std::min(ylo, s.mean - (bars ? s.std : 0.0));
    yhi = std::max(yhi, s.mean + (bars ? s.std : 0.0));
  }
  const Axis y = nice_axis(ylo, yhi);
  Svg svg(o.width, o.height);
  const std::string ylabel = t0.columns[yc];
  frame(svg, o, ylabel + (bars ? " (mean ± std, " + std::to_string(runs.size()) + " seeds)" : ""),
        t0.columns[xc], ylabel, y);
  const double pw = o.width - kLeft - kRight, ph = o.height - kTop - kBottom;
  auto py = [&](double v) { return kTop + ph - ph * (v - y.lo) / (y.hi - y.lo); };
  auto& b = svg.body;
  const double slot = cats.empty() ? pw : pw / static_cast<double>(cats.size());
  for (std::size_t k = 0; k < cats.size(); ++k) {
    const double cx = kLeft + slot * (k + 0.5);
    b << "<text x=\"" << num(cx) << "\" y=\"" << num(kTop + ph + 18)
      << "\" text-anchor=\"middle\">" << esc(cats[k]) << "</text>\n";
    const Stat s = stat_of(vals[cats[k]]);
    if (s.n == 0) continue;
    const double top = py(std::max(s.mean, 0.0)), base = py(std::min(s.mean, 0.0));
    b << "<rect x=\"" << num(cx - slot * 0.3) << "\" y=\"" << num(top) << "\" width=\""
      << num(slot * 0.6) << "\" height=\"" << num(base - top) << "\" fill=\"" << kColor
      << "\"/>\n";
    if (bars) {
      b << "<line x1=\"" << num(cx) << "\" y1=\"" << num(py(s.mean - s.std)) << "\" x2=\""
        << num(cx) << "\" y2=\"" << num(py(s.mean + s.std)) << "\" stroke=\"black\"/>\n";
      for (double v : {s.mean - s.std, s.mean + s.std}) {
        b << "<line x1=\"" << num(cx - 6) << "\" y1=\"" << num(py(v)) << "\" x2=\"" << num(cx + 6)
          << "\" y2=\"" << num(py(v)) << "\" stroke=\"black\"/>\n";
      }
    }
  }
  return svg.finish(meta);
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (t.columns.empty() && line[0] == '#') {
      std::string c = line.substr(1);
      if (!c.empty() && c.back() == '\r') c.pop_back();
      t.comments.push_back(c.substr(c.find_first_not_of(' ') == std::string::npos
                                        ? c.size()
                                        : c.find_first_not_of(' ')));
      continue;
    }
    auto fields = split(line);
    if (t.columns.empty()) {
      for (const auto& f : fields) {
        if (f.empty()) fail(t, n, "empty column name in header");
      }
      if (fields.size() < 2) fail(t, n, "header needs an x column and at least one metric");
      t.columns = std::move(fields);
      continue;
    }
    if (fields.size() != t.columns.size()) {
      fail(t, n, "expected " + std::to_string(t.columns.size()) + " fields, found " +
                     std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.row_lines.push_back(n);
  }
  if (t.columns.empty()) fail(t, std::max(n, 1), "missing header");
  if (t.rows.empty()) fail(t, n, "no data rows");
  // Metric columns hold numbers or nothing.
  double v = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (r[0].empty()) fail(t, t.row_lines[i], "empty value in column '" + t.columns[0] + "'");
    for (std::size_t c = 1; c < r.size(); ++c) {
      if (t.columns[c] == "seed" || r[c].empty()) continue;
      if (!to_number(r[c], v)) {
        fail(t, t.row_lines[i], "column '" + t.columns[c] + "': not a number '" + r[c] + "'");
      }
    }
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), std::filesystem::path(path).filename().string());
}

std::vector<std::pair<std::string, std::string>> render_plots(const std::vector<CsvTable>& tables,
                                                              const PlotOptions& opts) {
  if (tables.empty()) throw Error("plot: no input tables");
  const CsvTable& t0 = tables.front();
  for (const auto& t : tables) {
    if (t.columns != t0.columns) {
      throw Error(t.source + ":1: header differs from " + t0.source);
    }
  }
  std::vector<std::string> cols = opts.columns;
  if (cols.empty()) {
    for (std::size_t c = 1; c < t0.columns.size(); ++c) {
      if (t0.columns[c] != "seed") cols.push_back(t0.columns[c]);
    }
  }
  bool x_numeric = true;
  double v = 0.0;
  for (const auto& t : tables) {
    for (const auto& r : t.rows) x_numeric = x_numeric && to_number(r[0], v);
  }
  const auto runs = split_runs(tables);
  std::vector<std::string> meta;
  for (const auto& t : tables) {
    meta.push_back("source " + t.source);
    for (const auto& c : t.comments) meta.push_back(c);
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& name : cols) {
    const int yc = t0.column(name);
    if (yc <= 0) throw Error("plot: no metric column '" + name + "' in " + t0.source);
    out.emplace_back(name, x_numeric ? line_plot(runs, 0, yc, opts, meta)
                                     : bar_plot(runs, 0, yc, opts, meta));
  }
  return out;
}

std::vector<std::string> emit_plots(const std::vector<std::string>& csv_paths,
                                    const std::string& out_dir, const PlotOptions& opts) {
  std::vector<CsvTable> tables;
  for (const auto& p : csv_paths) tables.push_back(read_csv(p));
  const auto plots = render_plots(tables, opts);
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  for (const auto& [name, svg] : plots) {
    const std::string path = out_dir + "/" + name + ".svg";
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << svg;
    written.push_back(path);
  }
  return written;
}

}  // namespace wp::harness
