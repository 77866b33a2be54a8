#include "klio/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "klio/errors.hpp"
#include "klio/text_io.hpp"

namespace klio {

void Dataset::validate() const {
  if (terminal.size() == 0) throw ValidationError("dataset has no terminal state");
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& rec = pairs[i];
    if (rec.x_prev.size() != terminal.size())
      throw ValidationError("dataset pair state dimension mismatch");
    if (rec.k != static_cast<int>(i) + 1)
      throw ValidationError("dataset pairs must be numbered 1..N in order");
    if (!pairs.empty() && rec.u.size() != pairs.front().u.size())
      throw ValidationError("dataset pair input dimension mismatch");
  }
}

void save_dataset(const Dataset& ds, const std::filesystem::path& p) {
  ds.validate();
  std::ofstream os(p);
  if (!os) throw ValidationError("cannot open for writing: " + p.string());
  os << "# klio dataset: pairs=" << ds.pairs.size() << " n=" << ds.state_dim()
     << " p=" << ds.input_dim() << "\n";
  for (const auto& rec : ds.pairs) {
    os << rec.k;
    for (Eigen::Index i = 0; i < rec.x_prev.size(); ++i)
      os << " " << format_double(rec.x_prev[i]);
    for (Eigen::Index i = 0; i < rec.u.size(); ++i)
      os << " " << format_double(rec.u[i]);
    os << "\n";
  }
  os << ds.pairs.size();
  for (Eigen::Index i = 0; i < ds.terminal.size(); ++i)
    os << " " << format_double(ds.terminal[i]);
  os << "\n";
}

Dataset load_dataset(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw ValidationError("cannot open for reading: " + p.string());

  int state_dim = -1, input_dim = -1;
  std::string line;
  int line_no = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;

  auto fail = [&](const std::string& msg) -> void {
    throw ValidationError(p.string() + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tok;
    std::vector<double> fields;
    bool comment = false;
    while (ss >> tok) {
      if (tok[0] == '#') {
        if (fields.empty()) comment = true;
        break;
      }
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') fail("bad number '" + tok + "'");
      fields.push_back(v);
    }
    if (comment || fields.empty()) continue;
    rows.push_back(std::move(fields));
    row_lines.push_back(line_no);
  }
  if (rows.size() < 2) {
    line_no = row_lines.empty() ? line_no : row_lines.back();
    fail("dataset needs at least one pair and a terminal record");
  }

  // The last record is the terminal state (k plus n fields); every other
  // record is k plus n + p fields.
  const size_t pair_arity = rows.front().size();
  const size_t terminal_arity = rows.back().size();
  if (terminal_arity >= pair_arity) {
    line_no = row_lines.back();
    fail("terminal record must be shorter than pair records");
  }
  state_dim = static_cast<int>(terminal_arity) - 1;
  input_dim = static_cast<int>(pair_arity - terminal_arity);
  if (state_dim < 1 || input_dim < 1) {
    line_no = row_lines.back();
    fail("inconsistent state/input dimensions");
  }

  Dataset ds;
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    const auto& f = rows[i];
    line_no = row_lines[i];
    if (f.size() != pair_arity) fail("pair record has wrong arity");
    StepRecord rec;
    rec.k = static_cast<int>(f[0]);
    if (rec.k != static_cast<int>(i) + 1) fail("pair records must be numbered 1..N");
    rec.x_prev = Eigen::Map<const Eigen::VectorXd>(f.data() + 1, state_dim);
    rec.u = Eigen::Map<const Eigen::VectorXd>(f.data() + 1 + state_dim, input_dim);
    ds.pairs.push_back(std::move(rec));
  }
  ds.terminal =
      Eigen::Map<const Eigen::VectorXd>(rows.back().data() + 1, state_dim);
  ds.validate();
  return ds;
}

Dataset filter_jump_discontinuities(const Dataset& ds, int axis, double threshold) {
  ds.validate();
  if (axis < 0 || axis >= ds.state_dim())
    throw ValidationError("filter axis out of range");
  Dataset out;
  out.terminal = ds.terminal;
  for (size_t i = 0; i < ds.pairs.size(); ++i) {
    const double before = ds.pairs[i].x_prev[axis];
    const double after = ds.next_state(i)[axis];
    if (std::abs(after - before) > threshold) continue;
    StepRecord rec = ds.pairs[i];
    rec.k = static_cast<int>(out.pairs.size()) + 1;
    out.pairs.push_back(std::move(rec));
  }
  return out;
}

}  // namespace klio
