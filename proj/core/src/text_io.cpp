#include "klio/text_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "klio/errors.hpp"
#include "klio/lqg.hpp"

namespace klio {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

// Token reader that tracks line numbers for error reporting.
class LineReader {
 public:
  LineReader(std::istream& is, std::string name) : is_(is), name_(std::move(name)) {}

  // Next non-empty, non-comment line split into tokens.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (tokens.empty() || tokens[0][0] == '#') continue;
      return tokens;
    }
    fail("unexpected end of file");
    return {};
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError(name_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  std::vector<std::string> expect(const std::string& keyword, size_t min_tokens) {
    auto tokens = next();
    if (tokens[0] != keyword || tokens.size() < min_tokens)
      fail("expected '" + keyword + "' record");
    return tokens;
  }

  double to_double(const std::string& s) const {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') fail("bad number '" + s + "'");
    return v;
  }

  std::int64_t to_int(const std::string& s) const {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') fail("bad integer '" + s + "'");
    return v;
  }

 private:
  std::istream& is_;
  std::string name_;
  int line_no_ = 0;
};

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw ValidationError("cannot open for writing: " + p.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw ValidationError("cannot open for reading: " + p.string());
  return is;
}

GridPtr read_grid_block(LineReader& r) {
  const auto head = r.expect("axes", 2);
  const int ndim = static_cast<int>(r.to_int(head[1]));
  if (ndim < 1) r.fail("axes count must be >= 1");
  std::vector<AxisSpec> axes;
  axes.reserve(static_cast<size_t>(ndim));
  for (int d = 0; d < ndim; ++d) {
    const auto tok = r.expect("axis", 5);
    AxisSpec ax;
    ax.lo = r.to_double(tok[1]);
    ax.hi = r.to_double(tok[2]);
    ax.bins = static_cast<int>(r.to_int(tok[3]));
    if (tok[4] == "wrap")
      ax.wrap = true;
    else if (tok[4] == "clamp")
      ax.wrap = false;
    else
      r.fail("axis mode must be wrap or clamp");
    axes.push_back(ax);
  }
  return make_grid(std::move(axes));
}

void write_sparse_vector(std::ostream& os, const Eigen::VectorXd& v) {
  Eigen::Index nonzero = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) ++nonzero;
  os << "entries " << nonzero << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) os << i << " " << format_double(v[i]) << "\n";
}

Eigen::VectorXd read_sparse_vector(LineReader& r, std::int64_t size) {
  const auto head = r.expect("entries", 2);
  const std::int64_t count = r.to_int(head[1]);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto tok = r.next();
    if (tok.size() != 2) r.fail("expected '<index> <value>'");
    const std::int64_t idx = r.to_int(tok[0]);
    if (idx < 0 || idx >= size) r.fail("entry index out of range");
    v[idx] = r.to_double(tok[1]);
  }
  return v;
}

void write_sparse_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  Eigen::Index nonzero = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(r, c) != 0.0) ++nonzero;
  os << "entries " << nonzero << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(r, c) != 0.0)
        os << r << " " << c << " " << format_double(m(r, c)) << "\n";
}

Eigen::MatrixXd read_sparse_matrix(LineReader& r, std::int64_t rows, std::int64_t cols) {
  const auto head = r.expect("entries", 2);
  const std::int64_t count = r.to_int(head[1]);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto tok = r.next();
    if (tok.size() != 3) r.fail("expected '<row> <col> <value>'");
    const std::int64_t rr = r.to_int(tok[0]);
    const std::int64_t cc = r.to_int(tok[1]);
    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols)
      r.fail("matrix entry out of range");
    m(rr, cc) = r.to_double(tok[2]);
  }
  return m;
}

void expect_magic(LineReader& r, const std::string& magic) {
  const auto tok = r.next();
  if (tok.size() < 2 || tok[0] != magic || tok[1] != "v1")
    r.fail("expected header '" + magic + " v1'");
}

}  // namespace

void write_grid(std::ostream& os, const GridSpace& grid) {
  os << "axes " << grid.ndim() << "\n";
  for (int d = 0; d < grid.ndim(); ++d) {
    const auto& ax = grid.axis(d);
    os << "axis " << format_double(ax.lo) << " " << format_double(ax.hi) << " "
       << ax.bins << " " << (ax.wrap ? "wrap" : "clamp") << "\n";
  }
}

void save_distribution(const DiscreteDistribution& d, const std::filesystem::path& p) {
  auto os = open_out(p);
  os << "klio-distribution v1\n";
  write_grid(os, *d.grid());
  write_sparse_vector(os, d.mass());
  os << "end\n";
}

DiscreteDistribution load_distribution(const std::filesystem::path& p) {
  auto is = open_in(p);
  LineReader r(is, p.string());
  expect_magic(r, "klio-distribution");
  auto grid = read_grid_block(r);
  auto mass = read_sparse_vector(r, grid->size());
  r.expect("end", 1);
  return DiscreteDistribution(std::move(grid), std::move(mass));
}

namespace {

template <typename Kernel>
void save_conditional(const Kernel& k, const std::filesystem::path& p,
                      const char* magic) {
  auto os = open_out(p);
  os << magic << " v1\n";
  os << "steps " << k.steps() << "\n";
  os << "state-grid\n";
  write_grid(os, *k.state_grid());
  os << "action-grid\n";
  write_grid(os, *k.action_grid());
  for (int t = 1; t <= k.steps(); ++t) {
    os << "table " << t << "\n";
    write_sparse_matrix(os, k.table_at_step(t));
  }
  os << "end\n";
}

}  // namespace

void save_transition_kernel(const TransitionKernel& k, const std::filesystem::path& p) {
  save_conditional(k, p, "klio-transition-kernel");
}

TransitionKernel load_transition_kernel(const std::filesystem::path& p) {
  auto is = open_in(p);
  LineReader r(is, p.string());
  expect_magic(r, "klio-transition-kernel");
  const auto steps_tok = r.expect("steps", 2);
  const int steps = static_cast<int>(r.to_int(steps_tok[1]));
  r.expect("state-grid", 1);
  auto state_grid = read_grid_block(r);
  r.expect("action-grid", 1);
  auto action_grid = read_grid_block(r);
  std::vector<Eigen::MatrixXd> tables;
  for (int t = 1; t <= steps; ++t) {
    r.expect("table", 2);
    tables.push_back(read_sparse_matrix(r, state_grid->size() * action_grid->size(),
                                        state_grid->size()));
  }
  r.expect("end", 1);
  return TransitionKernel(std::move(state_grid), std::move(action_grid),
                          std::move(tables));
}

void save_policy_kernel(const PolicyKernel& k, const std::filesystem::path& p) {
  save_conditional(k, p, "klio-policy-kernel");
}

PolicyKernel load_policy_kernel(const std::filesystem::path& p) {
  auto is = open_in(p);
  LineReader r(is, p.string());
  expect_magic(r, "klio-policy-kernel");
  const auto steps_tok = r.expect("steps", 2);
  const int steps = static_cast<int>(r.to_int(steps_tok[1]));
  r.expect("state-grid", 1);
  auto state_grid = read_grid_block(r);
  r.expect("action-grid", 1);
  auto action_grid = read_grid_block(r);
  std::vector<Eigen::MatrixXd> tables;
  for (int t = 1; t <= steps; ++t) {
    r.expect("table", 2);
    tables.push_back(
        read_sparse_matrix(r, state_grid->size(), action_grid->size()));
  }
  r.expect("end", 1);
  return PolicyKernel(std::move(state_grid), std::move(action_grid), std::move(tables));
}

void save_cost_table(const CostTable& c, const std::filesystem::path& p) {
  if (!c.grid || c.stages.empty())
    throw ValidationError("cost table needs a grid and at least one stage");
  auto os = open_out(p);
  os << "klio-cost v1\n";
  os << "steps " << c.stages.size() << "\n";
  write_grid(os, *c.grid);
  for (size_t t = 0; t < c.stages.size(); ++t) {
    if (c.stages[t].size() != c.grid->size())
      throw ValidationError("cost table stage size mismatch");
    os << "table " << (t + 1) << "\n";
    write_sparse_vector(os, c.stages[t]);
  }
  os << "end\n";
}

CostTable load_cost_table(const std::filesystem::path& p) {
  auto is = open_in(p);
  LineReader r(is, p.string());
  expect_magic(r, "klio-cost");
  const auto steps_tok = r.expect("steps", 2);
  const int steps = static_cast<int>(r.to_int(steps_tok[1]));
  CostTable c;
  c.grid = read_grid_block(r);
  for (int t = 1; t <= steps; ++t) {
    r.expect("table", 2);
    c.stages.push_back(read_sparse_vector(r, c.grid->size()));
  }
  r.expect("end", 1);
  return c;
}

void save_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& p) {
  auto os = open_out(p);
  os << "klio-matrix v1\n";
  os << "rows " << m.rows() << " cols " << m.cols() << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << " ";
      os << format_double(m(r, c));
    }
    os << "\n";
  }
  os << "end\n";
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& p) {
  auto is = open_in(p);
  LineReader r(is, p.string());
  expect_magic(r, "klio-matrix");
  const auto head = r.expect("rows", 4);
  if (head[2] != "cols") r.fail("expected 'rows <r> cols <c>'");
  const std::int64_t rows = r.to_int(head[1]);
  const std::int64_t cols = r.to_int(head[3]);
  Eigen::MatrixXd m(rows, cols);
  for (std::int64_t rr = 0; rr < rows; ++rr) {
    const auto tok = r.next();
    if (tok.size() != static_cast<size_t>(cols)) r.fail("matrix row has wrong arity");
    for (std::int64_t cc = 0; cc < cols; ++cc) m(rr, cc) = r.to_double(tok[static_cast<size_t>(cc)]);
  }
  r.expect("end", 1);
  return m;
}

void save_weights(const WeightsFile& w, const std::filesystem::path& p) {
  auto os = open_out(p);
  os << "klio-weights v1\n";
  os << "count " << w.weights.size() << "\n";
  for (Eigen::Index i = 0; i < w.weights.size(); ++i)
    os << format_double(w.weights[i]) << "\n";
  os << "status " << w.status << "\n";
  os << "objective " << format_double(w.objective) << "\n";
  os << "gradient-norm " << format_double(w.gradient_norm) << "\n";
  os << "iterations " << w.iterations << "\n";
  os << "end\n";
}

namespace {

void write_named_matrix(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
  os << "matrix " << name << " " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << " ";
      os << format_double(m(r, c));
    }
    os << "\n";
  }
}

Eigen::MatrixXd read_named_matrix(LineReader& r, const std::string& name) {
  const auto head = r.expect("matrix", 4);
  if (head[1] != name) r.fail("expected matrix '" + name + "'");
  const std::int64_t rows = r.to_int(head[2]);
  const std::int64_t cols = r.to_int(head[3]);
  Eigen::MatrixXd m(rows, cols);
  for (std::int64_t rr = 0; rr < rows; ++rr) {
    const auto tok = r.next();
    if (tok.size() != static_cast<size_t>(cols)) r.fail("matrix row has wrong arity");
    for (std::int64_t cc = 0; cc < cols; ++cc)
      m(rr, cc) = r.to_double(tok[static_cast<size_t>(cc)]);
  }
  return m;
}

void write_named_vector(std::ostream& os, const char* name, const Eigen::VectorXd& v) {
  os << "vector " << name << " " << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << " ";
    os << format_double(v[i]);
  }
  os << "\n";
}

Eigen::VectorXd read_named_vector(LineReader& r, const std::string& name) {
  const auto head = r.expect("vector", 3);
  if (head[1] != name) r.fail("expected vector '" + name + "'");
  const std::int64_t size = r.to_int(head[2]);
  const auto tok = r.next();
  if (tok.size() != static_cast<size_t>(size)) r.fail("vector has wrong arity");
  Eigen::VectorXd v(size);
  for (std::int64_t i = 0; i < size; ++i) v[i] = r.to_double(tok[static_cast<size_t>(i)]);
  return v;
}

}  // namespace

void save_gaussian_model(const GaussianLinearModel& m, const std::filesystem::path& p) {
  m.validate();
  auto os = open_out(p);
  os << "klio-gaussian-model v1\n";
  os << "horizon " << m.horizon << "\n";
  write_named_matrix(os, "A", m.A);
  write_named_matrix(os, "B", m.B);
  write_named_matrix(os, "Sigma", m.sigma);
  write_named_matrix(os, "W", m.W);
  write_named_matrix(os, "R", m.R);
  write_named_matrix(os, "Q", m.Q);
  write_named_vector(os, "x_d", m.x_d);
  write_named_vector(os, "u_d", m.u_d);
  write_named_vector(os, "cost_center", m.cost_point());
  os << "end\n";
}

GaussianLinearModel load_gaussian_model(const std::filesystem::path& p) {
  auto is = open_in(p);
  LineReader r(is, p.string());
  expect_magic(r, "klio-gaussian-model");
  GaussianLinearModel m;
  m.horizon = static_cast<int>(r.to_int(r.expect("horizon", 2)[1]));
  m.A = read_named_matrix(r, "A");
  m.B = read_named_matrix(r, "B");
  m.sigma = read_named_matrix(r, "Sigma");
  m.W = read_named_matrix(r, "W");
  m.R = read_named_matrix(r, "R");
  m.Q = read_named_matrix(r, "Q");
  m.x_d = read_named_vector(r, "x_d");
  m.u_d = read_named_vector(r, "u_d");
  m.cost_center = read_named_vector(r, "cost_center");
  r.expect("end", 1);
  m.validate();
  return m;
}

WeightsFile load_weights(const std::filesystem::path& p) {
  auto is = open_in(p);
  LineReader r(is, p.string());
  expect_magic(r, "klio-weights");
  const auto head = r.expect("count", 2);
  const std::int64_t count = r.to_int(head[1]);
  WeightsFile w;
  w.weights.resize(count);
  for (std::int64_t i = 0; i < count; ++i) {
    const auto tok = r.next();
    if (tok.size() != 1) r.fail("expected one weight per line");
    w.weights[i] = r.to_double(tok[0]);
  }
  w.status = r.expect("status", 2)[1];
  w.objective = r.to_double(r.expect("objective", 2)[1]);
  w.gradient_norm = r.to_double(r.expect("gradient-norm", 2)[1]);
  w.iterations = static_cast<int>(r.to_int(r.expect("iterations", 2)[1]));
  r.expect("end", 1);
  return w;
}

}  // namespace klio
