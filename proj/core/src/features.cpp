#include "klio/features.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "klio/errors.hpp"

namespace klio {

namespace {

double gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        const Eigen::MatrixXd& cov) {
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw ValidationError("gaussian bump covariance must be positive definite");
  const Eigen::VectorXd d = x - mean;
  const double quad = d.dot(llt.solve(d));
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const double log_norm =
      -0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi) +
              log_det);
  return std::exp(log_norm - 0.5 * quad);
}

}  // namespace

double Feature::evaluate(const Eigen::VectorXd& x) const {
  switch (family) {
    case Family::kQuadraticToPoint: {
      const Eigen::VectorXd d = x - point;
      return d.squaredNorm();
    }
    case Family::kGaussianBump:
      return gaussian_density(x, point, cov);
    case Family::kAbsDeviation:
      return std::abs(x[axis] - target);
    case Family::kCosineGap: {
      const double g = std::cos(x[axis]) - std::cos(target);
      return g * g;
    }
    case Family::kExpGap: {
      const double g = cosine ? std::cos(x[axis]) - std::cos(target)
                              : x[axis] - target;
      return 1.0 - std::exp(-g * g);
    }
  }
  throw ValidationError("unknown feature family");
}

Feature quadratic_to_point(Eigen::VectorXd point) {
  Feature f;
  f.family = Feature::Family::kQuadraticToPoint;
  f.point = std::move(point);
  return f;
}

Feature gaussian_bump(Eigen::VectorXd point, Eigen::MatrixXd cov) {
  Feature f;
  f.family = Feature::Family::kGaussianBump;
  f.point = std::move(point);
  f.cov = std::move(cov);
  return f;
}

Feature abs_deviation(int axis, double target) {
  Feature f;
  f.family = Feature::Family::kAbsDeviation;
  f.axis = axis;
  f.target = target;
  return f;
}

Feature cosine_gap(int axis, double target) {
  Feature f;
  f.family = Feature::Family::kCosineGap;
  f.axis = axis;
  f.target = target;
  return f;
}

Feature exp_gap(int axis, double target, bool cosine) {
  Feature f;
  f.family = Feature::Family::kExpGap;
  f.axis = axis;
  f.target = target;
  f.cosine = cosine;
  return f;
}

FeatureBasis::FeatureBasis(std::vector<Feature> features)
    : features_(std::move(features)) {
  if (features_.empty()) throw ValidationError("feature basis needs F >= 1");
}

Eigen::VectorXd FeatureBasis::evaluate(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(size());
  for (int i = 0; i < size(); ++i) out[i] = features_[static_cast<size_t>(i)].evaluate(x);
  return out;
}

Eigen::MatrixXd FeatureBasis::evaluate_on_grid(const GridSpace& grid) const {
  Eigen::MatrixXd out(grid.size(), size());
  for (std::int64_t c = 0; c < grid.size(); ++c) {
    const Eigen::VectorXd x = grid.center(c);
    for (int i = 0; i < size(); ++i)
      out(c, i) = features_[static_cast<size_t>(i)].evaluate(x);
  }
  if (!out.allFinite())
    throw ValidationError("feature basis produced non-finite values on the grid");
  return out;
}

namespace {

const char* family_name(Feature::Family f) {
  switch (f) {
    case Feature::Family::kQuadraticToPoint: return "quadratic_to_point";
    case Feature::Family::kGaussianBump: return "gaussian_bump";
    case Feature::Family::kAbsDeviation: return "abs_deviation";
    case Feature::Family::kCosineGap: return "cosine_gap";
    case Feature::Family::kExpGap: return "exp_gap";
  }
  return "unknown";
}

}  // namespace

void save_feature_basis(const FeatureBasis& basis, const std::filesystem::path& p) {
  nlohmann::json j;
  j["features"] = nlohmann::json::array();
  for (int i = 0; i < basis.size(); ++i) {
    const Feature& f = basis.feature(i);
    nlohmann::json jf;
    jf["family"] = family_name(f.family);
    switch (f.family) {
      case Feature::Family::kQuadraticToPoint:
        jf["point"] = std::vector<double>(f.point.data(), f.point.data() + f.point.size());
        break;
      case Feature::Family::kGaussianBump: {
        jf["point"] = std::vector<double>(f.point.data(), f.point.data() + f.point.size());
        std::vector<std::vector<double>> cov;
        for (Eigen::Index r = 0; r < f.cov.rows(); ++r)
          cov.emplace_back(f.cov.row(r).begin(), f.cov.row(r).end());
        jf["cov"] = cov;
        break;
      }
      case Feature::Family::kAbsDeviation:
      case Feature::Family::kCosineGap:
        jf["axis"] = f.axis;
        jf["target"] = f.target;
        break;
      case Feature::Family::kExpGap:
        jf["axis"] = f.axis;
        jf["target"] = f.target;
        jf["cosine"] = f.cosine;
        break;
    }
    j["features"].push_back(std::move(jf));
  }
  std::ofstream os(p);
  if (!os) throw ValidationError("cannot open for writing: " + p.string());
  os << j.dump(2) << "\n";
}

FeatureBasis load_feature_basis(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw ValidationError("cannot open for reading: " + p.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
  if (!j.contains("features") || !j["features"].is_array())
    throw ValidationError(p.string() + ": missing 'features' array");

  std::vector<Feature> features;
  for (const auto& jf : j["features"]) {
    const std::string family = jf.value("family", "");
    auto get_point = [&]() {
      const auto v = jf.at("point").get<std::vector<double>>();
      return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                               static_cast<Eigen::Index>(v.size()))
          .eval();
    };
    if (family == "quadratic_to_point") {
      features.push_back(quadratic_to_point(get_point()));
    } else if (family == "gaussian_bump") {
      const auto rows = jf.at("cov").get<std::vector<std::vector<double>>>();
      Eigen::MatrixXd cov(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows[r].size(); ++c)
          cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      features.push_back(gaussian_bump(get_point(), std::move(cov)));
    } else if (family == "abs_deviation") {
      features.push_back(abs_deviation(jf.at("axis").get<int>(), jf.at("target").get<double>()));
    } else if (family == "cosine_gap") {
      features.push_back(cosine_gap(jf.at("axis").get<int>(), jf.at("target").get<double>()));
    } else if (family == "exp_gap") {
      features.push_back(exp_gap(jf.at("axis").get<int>(), jf.at("target").get<double>(),
                                 jf.value("cosine", false)));
    } else {
      throw ValidationError(p.string() + ": unknown feature family '" + family + "'");
    }
  }
  return FeatureBasis(std::move(features));
}

}  // namespace klio
