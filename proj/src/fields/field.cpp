#include "nsdf/fields/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nsdf::fields {

namespace {

template <typename T>
Matrix<T> eval_batch_scalar(const Field& f, const Matrix<T>& points) {
  Matrix<T> out(1, points.cols());
  for (int j = 0; j < points.cols(); ++j)
    out(0, j) = T(f.eval({double(points(0, j)), double(points(1, j)), double(points(2, j))}));
  return out;
}

template <typename T>
Matrix<T> grad_batch_scalar(const Field& f, const Matrix<T>& points) {
  Matrix<T> out(3, points.cols());
  for (int j = 0; j < points.cols(); ++j) {
    Vec3 g = f.grad({double(points(0, j)), double(points(1, j)), double(points(2, j))});
    out(0, j) = T(g.x);
    out(1, j) = T(g.y);
    out(2, j) = T(g.z);
  }
  return out;
}

template <typename T>
void check_batch(const Matrix<T>& points) {
  if (points.rows() != 3)
    throw Error(ErrorKind::contract,
                "point batch must be 3xk, got " + points.shape_str());
}

}  // namespace

Matrix<float> Field::eval_batch(const Matrix<float>& points) const {
  check_batch(points);
  return eval_batch_scalar(*this, points);
}
Matrix<double> Field::eval_batch(const Matrix<double>& points) const {
  check_batch(points);
  return eval_batch_scalar(*this, points);
}
Matrix<float> Field::grad_batch(const Matrix<float>& points) const {
  check_batch(points);
  return grad_batch_scalar(*this, points);
}
Matrix<double> Field::grad_batch(const Matrix<double>& points) const {
  check_batch(points);
  return grad_batch_scalar(*this, points);
}

// --- sphere ---------------------------------------------------------------

Vec3 SphereField::grad(const Vec3& p) const {
  Vec3 d = p - center_;
  double n = d.norm();
  if (n == 0) return {0, 0, 0};  // medial point, caller guards
  return d / n;
}

std::string SphereField::describe() const {
  std::ostringstream os;
  os << "sphere(r=" << radius_ << ")";
  return os.str();
}

// --- torus ----------------------------------------------------------------

double TorusField::eval(const Vec3& p) const {
  double s = std::hypot(p.x, p.z);
  return std::hypot(s - major_, p.y) - minor_;
}

Vec3 TorusField::grad(const Vec3& p) const {
  double s = std::hypot(p.x, p.z);
  double q = s - major_;
  double d = std::hypot(q, p.y);
  if (d == 0) return {0, 0, 0};
  if (s == 0) return {0, p.y / d, 0};  // on the axis
  double f = q / (d * s);
  return {p.x * f, p.y / d, p.z * f};
}

std::string TorusField::describe() const {
  std::ostringstream os;
  os << "torus(R=" << major_ << ",r=" << minor_ << ")";
  return os.str();
}

// --- box --------------------------------------------------------------------

double BoxField::eval(const Vec3& p) const {
  Vec3 q{std::abs(p.x) - half_.x, std::abs(p.y) - half_.y, std::abs(p.z) - half_.z};
  Vec3 qp{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
  double outside = qp.norm();
  double inside = std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
  return outside + inside;
}

Vec3 BoxField::grad(const Vec3& p) const {
  Vec3 q{std::abs(p.x) - half_.x, std::abs(p.y) - half_.y, std::abs(p.z) - half_.z};
  auto sgn = [](double v) { return v < 0 ? -1.0 : 1.0; };
  if (q.x > 0 || q.y > 0 || q.z > 0) {
    Vec3 qp{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
    double n = qp.norm();
    if (n == 0) return {0, 0, 0};
    return {sgn(p.x) * qp.x / n, sgn(p.y) * qp.y / n, sgn(p.z) * qp.z / n};
  }
  // Inside: outward normal of the nearest face.
  if (q.x >= q.y && q.x >= q.z) return {sgn(p.x), 0, 0};
  if (q.y >= q.z) return {0, sgn(p.y), 0};
  return {0, 0, sgn(p.z)};
}

std::string BoxField::describe() const {
  std::ostringstream os;
  os << "box(" << half_.x << "," << half_.y << "," << half_.z << ")";
  return os.str();
}

// --- blend ------------------------------------------------------------------

BlendField::BlendField(FieldPtr a, FieldPtr b, double t) : a_(std::move(a)), b_(std::move(b)), t_(t) {
  if (!a_ || !b_) throw Error(ErrorKind::contract, "blend requires two fields");
  domain_ = a_->domain();
}

double BlendField::eval(const Vec3& p) const {
  return (1.0 - t_) * a_->eval(p) + t_ * b_->eval(p);
}

Vec3 BlendField::grad(const Vec3& p) const {
  return (1.0 - t_) * a_->grad(p) + t_ * b_->grad(p);
}

std::string BlendField::describe() const {
  std::ostringstream os;
  os << "blend(" << a_->describe() << "," << b_->describe() << ",t=" << t_ << ")";
  return os.str();
}

// --- neural -----------------------------------------------------------------

NeuralField::NeuralField(mlp::MlpParams<double> params)
    : params_(std::move(params)), params_f32_(params_.cast<float>()) {
  params_.validate();
  if (params_.input_dim != 3)
    throw Error(ErrorKind::validation, "a 3D field needs a 3-input network");
}

double NeuralField::eval(const Vec3& p) const {
  Matrix<double> pt(3, 1, {p.x, p.y, p.z});
  return mlp::forward_batch(params_, pt)(0, 0);
}

Vec3 NeuralField::grad(const Vec3& p) const {
  Matrix<double> pt(3, 1, {p.x, p.y, p.z});
  Matrix<double> g = mlp::gradient_batch(params_, pt);
  return {g(0, 0), g(1, 0), g(2, 0)};
}

Matrix<float> NeuralField::eval_batch(const Matrix<float>& points) const {
  return mlp::forward_batch(params_f32_, points);
}
Matrix<double> NeuralField::eval_batch(const Matrix<double>& points) const {
  return mlp::forward_batch(params_, points);
}
Matrix<float> NeuralField::grad_batch(const Matrix<float>& points) const {
  return mlp::gradient_batch(params_f32_, points);
}
Matrix<double> NeuralField::grad_batch(const Matrix<double>& points) const {
  return mlp::gradient_batch(params_, points);
}

std::string NeuralField::describe() const {
  std::ostringstream os;
  os << "neural(" << params_.layers.size() << " layers, " << params_.parameter_count()
     << " params)";
  return os.str();
}

// --- time-varying -----------------------------------------------------------

namespace {

template <typename T>
Matrix<T> tv_eval_scalar(const TimeVaryingField& f, const Matrix<T>& points, T t) {
  Matrix<T> out(1, points.cols());
  for (int j = 0; j < points.cols(); ++j)
    out(0, j) = T(f.eval({double(points(0, j)), double(points(1, j)), double(points(2, j))},
                         double(t)));
  return out;
}

template <typename T>
Matrix<T> tv_grad_scalar(const TimeVaryingField& f, const Matrix<T>& points, T t) {
  Matrix<T> out(3, points.cols());
  for (int j = 0; j < points.cols(); ++j) {
    Vec3 g = f.spatial_grad(
        {double(points(0, j)), double(points(1, j)), double(points(2, j))}, double(t));
    out(0, j) = T(g.x);
    out(1, j) = T(g.y);
    out(2, j) = T(g.z);
  }
  return out;
}

template <typename T>
Matrix<T> with_time_row(const Matrix<T>& points, T t) {
  Matrix<T> p4(4, points.cols());
  for (int r = 0; r < 3; ++r)
    for (int j = 0; j < points.cols(); ++j) p4(r, j) = points(r, j);
  for (int j = 0; j < points.cols(); ++j) p4(3, j) = t;
  return p4;
}

}  // namespace

Matrix<float> TimeVaryingField::eval_batch(const Matrix<float>& points, float t) const {
  return tv_eval_scalar(*this, points, t);
}
Matrix<double> TimeVaryingField::eval_batch(const Matrix<double>& points, double t) const {
  return tv_eval_scalar(*this, points, t);
}
Matrix<float> TimeVaryingField::grad_batch(const Matrix<float>& points, float t) const {
  return tv_grad_scalar(*this, points, t);
}
Matrix<double> TimeVaryingField::grad_batch(const Matrix<double>& points, double t) const {
  return tv_grad_scalar(*this, points, t);
}

BlendTimeField::BlendTimeField(FieldPtr a, FieldPtr b) : a_(std::move(a)), b_(std::move(b)) {
  if (!a_ || !b_) throw Error(ErrorKind::contract, "blend requires two fields");
  domain_ = a_->domain();
}

double BlendTimeField::eval(const Vec3& p, double t) const {
  return (1.0 - t) * a_->eval(p) + t * b_->eval(p);
}

Vec3 BlendTimeField::spatial_grad(const Vec3& p, double t) const {
  return (1.0 - t) * a_->grad(p) + t * b_->grad(p);
}

std::string BlendTimeField::describe() const {
  std::ostringstream os;
  os << "blend4d(" << a_->describe() << " -> " << b_->describe() << ")";
  return os.str();
}

NeuralTimeField::NeuralTimeField(mlp::MlpParams<double> params)
    : params_(std::move(params)), params_f32_(params_.cast<float>()) {
  params_.validate();
  if (params_.input_dim != 4)
    throw Error(ErrorKind::validation, "a time-extended field needs a 4-input network");
}

double NeuralTimeField::eval(const Vec3& p, double t) const {
  Matrix<double> pt(4, 1, {p.x, p.y, p.z, t});
  return mlp::forward_batch(params_, pt)(0, 0);
}

Vec3 NeuralTimeField::spatial_grad(const Vec3& p, double t) const {
  Matrix<double> pt(4, 1, {p.x, p.y, p.z, t});
  Matrix<double> g = mlp::spatial_gradient_batch(params_, pt);
  return {g(0, 0), g(1, 0), g(2, 0)};
}

Matrix<float> NeuralTimeField::eval_batch(const Matrix<float>& points, float t) const {
  return mlp::forward_batch(params_f32_, with_time_row(points, t));
}
Matrix<double> NeuralTimeField::eval_batch(const Matrix<double>& points, double t) const {
  return mlp::forward_batch(params_, with_time_row(points, t));
}
Matrix<float> NeuralTimeField::grad_batch(const Matrix<float>& points, float t) const {
  return mlp::spatial_gradient_batch(params_f32_, with_time_row(points, t));
}
Matrix<double> NeuralTimeField::grad_batch(const Matrix<double>& points, double t) const {
  return mlp::spatial_gradient_batch(params_, with_time_row(points, t));
}

std::string NeuralTimeField::describe() const {
  std::ostringstream os;
  os << "neural4d(" << params_.layers.size() << " layers, " << params_.parameter_count()
     << " params)";
  return os.str();
}

namespace {

class TimeSliceField : public Field {
public:
  TimeSliceField(TimeFieldPtr source, double t) : source_(std::move(source)), t_(t) {
    domain_ = source_->domain();
  }
  double eval(const Vec3& p) const override { return source_->eval(p, t_); }
  Vec3 grad(const Vec3& p) const override { return source_->spatial_grad(p, t_); }
  Matrix<float> eval_batch(const Matrix<float>& points) const override {
    return source_->eval_batch(points, float(t_));
  }
  Matrix<double> eval_batch(const Matrix<double>& points) const override {
    return source_->eval_batch(points, t_);
  }
  Matrix<float> grad_batch(const Matrix<float>& points) const override {
    return source_->grad_batch(points, float(t_));
  }
  Matrix<double> grad_batch(const Matrix<double>& points) const override {
    return source_->grad_batch(points, t_);
  }
  std::string describe() const override {
    std::ostringstream os;
    os << source_->describe() << "@t=" << t_;
    return os.str();
  }

private:
  TimeFieldPtr source_;
  double t_;
};

}  // namespace

FieldPtr time_slice(TimeFieldPtr field4d, double t) {
  if (!field4d) throw Error(ErrorKind::contract, "time_slice requires a time-extended field");
  return std::make_shared<TimeSliceField>(std::move(field4d), t);
}

// --- analytic spec ------------------------------------------------------------

std::string AnalyticSpec::text() const {
  std::ostringstream os;
  os << name;
  bool first = true;
  for (const auto& [k, v] : params) {
    os << (first ? ":" : ",") << k << "=" << v;
    first = false;
  }
  return os.str();
}

AnalyticSpec parse_field_spec(const std::string& text) {
  AnalyticSpec spec;
  auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (colon != std::string::npos) {
    std::string rest = text.substr(colon + 1);
    std::istringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorKind::config, "bad field parameter '" + item + "' in '" + text + "'");
      try {
        spec.params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        throw Error(ErrorKind::config, "bad field parameter '" + item + "' in '" + text + "'");
      }
    }
  }
  return spec;
}

namespace {
double param_or(const AnalyticSpec& s, const std::string& key, double fallback) {
  auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}
}  // namespace

FieldPtr make_analytic_field(const AnalyticSpec& spec) {
  if (spec.name == "sphere") {
    return std::make_shared<SphereField>(
        Vec3{param_or(spec, "cx", 0), param_or(spec, "cy", 0), param_or(spec, "cz", 0)},
        param_or(spec, "r", 0.7));
  }
  if (spec.name == "torus")
    return std::make_shared<TorusField>(param_or(spec, "R", 0.6), param_or(spec, "r", 0.3));
  if (spec.name == "box")
    return std::make_shared<BoxField>(Vec3{param_or(spec, "hx", 0.6), param_or(spec, "hy", 0.45),
                                           param_or(spec, "hz", 0.5)});
  if (spec.name == "blend") {
    auto a = std::make_shared<SphereField>(Vec3{0, 0, 0}, param_or(spec, "r", 0.7));
    auto b = std::make_shared<TorusField>(param_or(spec, "R", 0.6), param_or(spec, "rt", 0.3));
    return std::make_shared<BlendField>(a, b, param_or(spec, "t", 0.5));
  }
  throw Error(ErrorKind::config, "unknown analytic field '" + spec.name +
                                     "' (expected sphere, torus, box or blend)");
}

TimeFieldPtr make_analytic_time_field(const AnalyticSpec& spec) {
  if (spec.name != "blend")
    throw Error(ErrorKind::config,
                "only 'blend' is available as an analytic time-extended field");
  auto a = std::make_shared<SphereField>(Vec3{0, 0, 0}, param_or(spec, "r", 0.7));
  auto b = std::make_shared<TorusField>(param_or(spec, "R", 0.6), param_or(spec, "rt", 0.3));
  return std::make_shared<BlendTimeField>(a, b);
}

}  // namespace nsdf::fields
