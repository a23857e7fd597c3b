#pragma once

#include <string>
#include <vector>

namespace wp::harness {

// Comma-separated table. Lines starting with '#' before the header are kept
// as comments; blank lines are skipped.
struct CsvTable {
  std::string source;
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> row_lines;  // 1-based source line of each row

  int column(const std::string& name) const;  // -1 when absent
};

// Errors carry "source:line: ...".
CsvTable parse_csv(const std::string& text, const std::string& source);
CsvTable read_csv(const std::string& path);

struct PlotOptions {
  std::vector<std::string> columns;  // empty: every metric column
  int width = 640;
  int height = 400;
};

// One SVG per metric column. The first column is the x axis: numeric gives a
// line plot, text gives a bar chart over categories. Several seeds (one per file,
// or a "seed" column) are drawn as mean with a shaded +-1 std band, or error bars.
// Returns the written paths.
std::vector<std::string> emit_plots(const std::vector<std::string>& csv_paths,
                                    const std::string& out_dir, const PlotOptions& opts = {});

// In-memory variant used by emit_plots; returns (column, svg text) pairs.
std::vector<std::pair<std::string, std::string>> render_plots(const std::vector<CsvTable>& tables,
                                                              const PlotOptions& opts = {});

}  // namespace wp::harness
