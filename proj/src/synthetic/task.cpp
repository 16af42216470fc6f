#include "cdrs/synthetic/task.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>

#include "cdrs/error.hpp"

namespace cdrs::synthetic {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// log Phi(x) for the standard normal CDF, accurate deep into the lower tail.
double log_ndtr(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x > -36.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * kLog2Pi + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// log(Phi(hi) - Phi(lo)) for lo < hi.
double log_ndtr_diff(double lo, double hi) {
  if (lo > 0.0) {
    // Both in the upper tail: use the survival function on the mirrored side.
    const double a = log_ndtr(-lo);
    const double b = log_ndtr(-hi);
    return a + std::log1p(-std::exp(b - a));
  }
  const double a = log_ndtr(hi);
  const double b = log_ndtr(lo);
  return a + std::log1p(-std::exp(b - a));
}

double log_sum_exp(const std::vector<double>& terms) {
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(from_vector(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, const char* key) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw ContractViolation(std::string(key) + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == rows[0].size(), std::string(key) + ": ragged matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

Matrix circle_offsets(int attributes, double radius) {
  Matrix off(2, attributes);
  for (int a = 0; a < attributes; ++a) {
    const double angle = 2.0 * std::numbers::pi * a / attributes;
    off(0, a) = radius * std::cos(angle);
    off(1, a) = radius * std::sin(angle);
  }
  return off;
}

}  // namespace

nlohmann::json TaskSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = kind == LabelKind::kClass ? "class" : "continuous";
  if (kind == LabelKind::kClass) {
    j["num_classes"] = num_classes;
  } else {
    j["num_train_labels"] = num_train_labels;
  }
  j["base"] = from_vector(base);
  j["slope"] = from_vector(slope);
  j["fake_shift"] = from_vector(fake_shift);
  j["real_cov"] = matrix_json(real_cov);
  j["fake_cov"] = matrix_json(fake_cov);
  j["attribute_offsets"] = matrix_json(attribute_offsets.transpose());
  j["real_weights"] = from_vector(real_weights);
  j["fake_weights"] = from_vector(fake_weights);
  j["label_noise_sd"] = label_noise_sd;
  return j;
}

TaskSpec TaskSpec::from_json(const nlohmann::json& j) {
  TaskSpec s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "class") {
    s.kind = LabelKind::kClass;
    s.num_classes = j.at("num_classes").get<int>();
  } else if (kind == "continuous") {
    s.kind = LabelKind::kContinuous;
    s.num_train_labels = j.at("num_train_labels").get<int>();
  } else {
    throw ContractViolation("task.kind must be 'class' or 'continuous', got '" + kind + "'");
  }
  s.base = to_vector(j.at("base").get<std::vector<double>>());
  s.slope = to_vector(j.at("slope").get<std::vector<double>>());
  s.fake_shift = to_vector(j.at("fake_shift").get<std::vector<double>>());
  s.real_cov = matrix_from_json(j.at("real_cov"), "real_cov");
  s.fake_cov = matrix_from_json(j.at("fake_cov"), "fake_cov");
  s.attribute_offsets = matrix_from_json(j.at("attribute_offsets"), "attribute_offsets").transpose();
  s.real_weights = to_vector(j.at("real_weights").get<std::vector<double>>());
  s.fake_weights = to_vector(j.at("fake_weights").get<std::vector<double>>());
  s.label_noise_sd = j.value("label_noise_sd", 0.0);
  return s;
}

ConditionalGaussianTask::Gaussian ConditionalGaussianTask::factor(const Matrix& cov,
                                                                  const char* which) {
  require(cov.rows() == cov.cols(), std::string(which) + " must be square");
  require(cov.isApprox(cov.transpose(), 1e-12), std::string(which) + " must be symmetric");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw ContractViolation(std::string(which) + " is not positive definite");
  }
  Gaussian g;
  g.chol_lower = llt.matrixL();
  g.precision = llt.solve(Matrix::Identity(cov.rows(), cov.cols()));
  const double log_det = 2.0 * g.chol_lower.diagonal().array().log().sum();
  g.log_norm = -0.5 * (static_cast<double>(cov.rows()) * kLog2Pi + log_det);
  return g;
}

ConditionalGaussianTask::ConditionalGaussianTask(TaskSpec spec) : spec_(std::move(spec)) {
  const int d = spec_.dim();
  require(d >= 1, "task: dimension must be positive");
  require(spec_.slope.size() == d && spec_.fake_shift.size() == d,
          "task: slope and fake_shift must match the dimension of base");
  require(spec_.real_cov.rows() == d && spec_.fake_cov.rows() == d,
          "task: covariance size must match the dimension");
  const int a = spec_.num_attributes();
  require(a >= 1, "task: at least one attribute required");
  require(spec_.fake_weights.size() == a && spec_.attribute_offsets.cols() == a &&
              spec_.attribute_offsets.rows() == d,
          "task: attribute weights and offsets disagree in shape");
  for (const Vector* w : {&spec_.real_weights, &spec_.fake_weights}) {
    require((w->array() >= 0.0).all() && std::abs(w->sum() - 1.0) < 1e-9,
            "task: attribute weights must be a probability vector");
  }
  require(spec_.label_noise_sd >= 0.0, "task: label_noise_sd must be nonnegative");
  if (spec_.kind == LabelKind::kClass) {
    require(spec_.num_classes >= 2, "task: a class task needs at least two classes");
    require(spec_.label_noise_sd == 0.0, "task: label noise applies to continuous tasks only");
  } else {
    require(spec_.num_train_labels >= 2, "task: a continuous task needs at least two labels");
  }
  real_ = factor(spec_.real_cov, "real_cov");
  fake_ = factor(spec_.fake_cov, "fake_cov");
}

TaskSpec ConditionalGaussianTask::default_class_spec() {
  TaskSpec s;
  s.kind = LabelKind::kClass;
  s.num_classes = 10;
  s.base = Vector::Zero(2);
  s.base << -1.0, 0.0;
  s.slope = Vector::Zero(2);
  s.slope << 2.0, 0.0;
  s.fake_shift = Vector(2);
  s.fake_shift << 0.5, 0.3;
  s.real_cov = Matrix::Identity(2, 2);
  s.fake_cov = Matrix::Identity(2, 2);
  s.attribute_offsets = circle_offsets(5, 1.5);
  s.real_weights = Vector::Constant(5, 0.2);
  s.fake_weights = Vector(5);
  s.fake_weights << 0.6, 0.1, 0.1, 0.1, 0.1;
  return s;
}

TaskSpec ConditionalGaussianTask::default_continuous_spec() {
  constexpr double kLabelSlope = 12.0;
  constexpr double kLabelBias = 0.1;
  TaskSpec s;
  s.kind = LabelKind::kContinuous;
  s.num_train_labels = 60;
  s.base = Vector::Zero(2);
  s.slope = Vector(2);
  s.slope << 0.0, kLabelSlope;
  s.fake_shift = Vector(2);
  s.fake_shift << 0.5, 0.0;
  s.real_cov = Matrix::Identity(2, 2);
  s.fake_cov = Matrix::Identity(2, 2);
  // Attributes separate along the first axis and nudge the label axis slightly,
  // so a label window keeps every attribute but in slightly different proportions.
  const double label_bias[5] = {0.0, 1.0, -1.0, 0.5, -0.5};
  s.attribute_offsets = Matrix(2, 5);
  for (int a = 0; a < 5; ++a) {
    s.attribute_offsets(0, a) = 1.5 * std::cos(2.0 * std::numbers::pi * a / 5);
    s.attribute_offsets(1, a) = kLabelBias * kLabelSlope * label_bias[a];
  }
  s.real_weights = Vector::Constant(5, 0.2);
  s.fake_weights = Vector(5);
  s.fake_weights << 0.6, 0.1, 0.1, 0.1, 0.1;
  s.label_noise_sd = 0.1;
  return s;
}

bool ConditionalGaussianTask::in_label_space(double y) const {
  if (!std::isfinite(y)) return false;
  if (spec_.kind == LabelKind::kClass) {
    return y >= 0.0 && y < spec_.num_classes && y == std::floor(y);
  }
  return y >= 0.0 && y <= 1.0;
}

double ConditionalGaussianTask::position(double y) const {
  require(in_label_space(y), "task: label " + std::to_string(y) + " is outside the label space");
  return spec_.kind == LabelKind::kClass ? y / (spec_.num_classes - 1) : y;
}

std::vector<double> ConditionalGaussianTask::training_labels() const {
  std::vector<double> labels;
  if (spec_.kind == LabelKind::kClass) {
    for (int k = 0; k < spec_.num_classes; ++k) labels.push_back(k);
  } else {
    const int n = spec_.num_train_labels;
    for (int k = 0; k < n; ++k) labels.push_back(static_cast<double>(k) / (n - 1));
  }
  return labels;
}

Vector ConditionalGaussianTask::real_mean(double y) const {
  return spec_.base + spec_.slope * position(y) + spec_.attribute_offsets * spec_.real_weights;
}

Vector ConditionalGaussianTask::fake_mean(double y) const {
  return spec_.base + spec_.slope * position(y) + spec_.attribute_offsets * spec_.fake_weights +
         spec_.fake_shift;
}

SampleBatch ConditionalGaussianTask::sample(double y, std::size_t n, Rng& rng, bool fake) const {
  const double t = position(y);
  const Vector& weights = fake ? spec_.fake_weights : spec_.real_weights;
  const Gaussian& g = fake ? fake_ : real_;
  std::discrete_distribution<int> pick(weights.data(), weights.data() + weights.size());
  std::normal_distribution<double> normal;
  const bool noisy = fake && spec_.label_noise_sd > 0.0;

  SampleBatch out;
  out.x.resize(dim(), static_cast<Eigen::Index>(n));
  out.actual_labels.resize(n);
  out.attributes.resize(n);
  Vector z(dim());
  for (std::size_t i = 0; i < n; ++i) {
    const int a = pick(rng);
    double t_actual = t;
    if (noisy) t_actual = std::clamp(t + spec_.label_noise_sd * normal(rng), 0.0, 1.0);
    for (int k = 0; k < dim(); ++k) z(k) = normal(rng);
    Vector x = spec_.base + spec_.slope * t_actual + spec_.attribute_offsets.col(a) +
               g.chol_lower * z;
    if (fake) x += spec_.fake_shift;
    out.x.col(static_cast<Eigen::Index>(i)) = x;
    // Continuous labels coincide with their positions.
    out.actual_labels[i] = spec_.kind == LabelKind::kClass ? y : t_actual;
    out.attributes[i] = a;
  }
  return out;
}

SampleBatch ConditionalGaussianTask::sample_real(double y, std::size_t n, Rng& rng) const {
  return sample(y, n, rng, false);
}

SampleBatch ConditionalGaussianTask::sample_fake(double y, std::size_t n, Rng& rng) const {
  return sample(y, n, rng, true);
}

double ConditionalGaussianTask::log_gaussian(const Gaussian& g, const Vector& diff) const {
  return g.log_norm - 0.5 * diff.dot(g.precision * diff);
}

double ConditionalGaussianTask::log_real_density(const Vector& h, double y) const {
  require(h.size() == dim(), "task: feature dimension mismatch");
  const Vector mean = spec_.base + spec_.slope * position(y);
  std::vector<double> terms;
  for (int a = 0; a < num_attributes(); ++a) {
    if (spec_.real_weights(a) == 0.0) continue;
    terms.push_back(std::log(spec_.real_weights(a)) +
                    log_gaussian(real_, h - mean - spec_.attribute_offsets.col(a)));
  }
  return log_sum_exp(terms);
}

double ConditionalGaussianTask::log_fake_component(const Vector& h, double t, int a) const {
  const Vector d = h - spec_.base - spec_.attribute_offsets.col(a) - spec_.fake_shift;
  const double sigma = spec_.label_noise_sd;
  if (spec_.kind == LabelKind::kClass || sigma == 0.0) {
    return log_gaussian(fake_, d - spec_.slope * t);
  }
  // t' is clipped Normal(t, sigma^2): point masses at 0 and 1 plus an interior
  // Gaussian integral over u in (0, 1) that has a closed form in Phi.
  const Vector& b = spec_.slope;
  const Vector pd = fake_.precision * d;
  const double inv_var = 1.0 / (sigma * sigma);
  const double A = b.dot(fake_.precision * b) + inv_var;
  const double B = b.dot(pd) + t * inv_var;
  const double C0 = -0.5 * d.dot(pd) - 0.5 * t * t * inv_var;
  const double root_a = std::sqrt(A);
  const double interior = fake_.log_norm - 0.5 * (kLog2Pi + 2.0 * std::log(sigma)) + C0 +
                          0.5 * B * B / A + 0.5 * (kLog2Pi - std::log(A)) +
                          log_ndtr_diff(-B / root_a, (A - B) / root_a);
  const double at_zero = log_ndtr(-t / sigma) + log_gaussian(fake_, d);
  const double at_one = log_ndtr((t - 1.0) / sigma) + log_gaussian(fake_, d - b);
  return log_sum_exp({interior, at_zero, at_one});
}

double ConditionalGaussianTask::log_fake_density(const Vector& h, double y) const {
  require(h.size() == dim(), "task: feature dimension mismatch");
  const double t = position(y);
  std::vector<double> terms;
  for (int a = 0; a < num_attributes(); ++a) {
    if (spec_.fake_weights(a) == 0.0) continue;
    terms.push_back(std::log(spec_.fake_weights(a)) + log_fake_component(h, t, a));
  }
  return log_sum_exp(terms);
}

double ConditionalGaussianTask::true_ratio(const Vector& h, double y) const {
  return std::exp(log_real_density(h, y) - log_fake_density(h, y));
}

}  // namespace cdrs::synthetic
