#pragma once

#include <map>
#include <memory>
#include <string>

#include "nsdf/core.hpp"
#include "nsdf/mlp/mlp.hpp"

namespace nsdf::fields {

using tensor::Matrix;

// A signed distance field over an axis-aligned domain. Evaluation outside the
// domain extends by the same formula (extrapolation). Scalar accessors are
// double precision; the float batch path is what the renderer consumes.
class Field {
public:
  virtual ~Field() = default;

  virtual double eval(const Vec3& p) const = 0;
  virtual Vec3 grad(const Vec3& p) const = 0;  // not normalized

  // points: 3 x k, one point per column; returns 1 x k distances.
  virtual Matrix<float> eval_batch(const Matrix<float>& points) const;
  virtual Matrix<double> eval_batch(const Matrix<double>& points) const;
  virtual Matrix<float> grad_batch(const Matrix<float>& points) const;
  virtual Matrix<double> grad_batch(const Matrix<double>& points) const;

  virtual bool exact_sdf() const { return false; }
  virtual std::string describe() const = 0;

  const Aabb& domain() const { return domain_; }
  void set_domain(const Aabb& box) { domain_ = box; }

protected:
  Aabb domain_{};
};

using FieldPtr = std::shared_ptr<const Field>;

class SphereField : public Field {
public:
  SphereField(Vec3 center, double radius) : center_(center), radius_(radius) {}
  double eval(const Vec3& p) const override { return (p - center_).norm() - radius_; }
  Vec3 grad(const Vec3& p) const override;
  bool exact_sdf() const override { return true; }
  std::string describe() const override;
  double radius() const { return radius_; }
  const Vec3& center() const { return center_; }

private:
  Vec3 center_;
  double radius_;
};

// Axis along y: distance to the circle of radius R in the xz-plane, minus r.
class TorusField : public Field {
public:
  TorusField(double major, double minor) : major_(major), minor_(minor) {}
  double eval(const Vec3& p) const override;
  Vec3 grad(const Vec3& p) const override;
  bool exact_sdf() const override { return true; }
  std::string describe() const override;

private:
  double major_, minor_;
};

class BoxField : public Field {
public:
  explicit BoxField(Vec3 half_extents) : half_(half_extents) {}
  double eval(const Vec3& p) const override;
  Vec3 grad(const Vec3& p) const override;
  bool exact_sdf() const override { return true; }
  std::string describe() const override;

private:
  Vec3 half_;
};

// Pointwise linear interpolation of two fields. A valid approximation of the
// blended shape's distance, but not an exact SDF.
class BlendField : public Field {
public:
  BlendField(FieldPtr a, FieldPtr b, double t);
  double eval(const Vec3& p) const override;
  Vec3 grad(const Vec3& p) const override;
  bool exact_sdf() const override { return false; }
  std::string describe() const override;

private:
  FieldPtr a_, b_;
  double t_;
};

class NeuralField : public Field {
public:
  explicit NeuralField(mlp::MlpParams<double> params);
  double eval(const Vec3& p) const override;
  Vec3 grad(const Vec3& p) const override;
  Matrix<float> eval_batch(const Matrix<float>& points) const override;
  Matrix<double> eval_batch(const Matrix<double>& points) const override;
  Matrix<float> grad_batch(const Matrix<float>& points) const override;
  Matrix<double> grad_batch(const Matrix<double>& points) const override;
  std::string describe() const override;

  const mlp::MlpParams<double>& params() const { return params_; }
  const mlp::MlpParams<float>& params_f32() const { return params_f32_; }

private:
  mlp::MlpParams<double> params_;
  mlp::MlpParams<float> params_f32_;
};

// ---------------------------------------------------------------------------
// Time-extended fields: a 1-parameter family f(p, t). Slicing at fixed t
// yields an ordinary Field whose evaluation matches the direct 4D evaluation
// bit for bit.
// ---------------------------------------------------------------------------

class TimeVaryingField {
public:
  virtual ~TimeVaryingField() = default;
  virtual double eval(const Vec3& p, double t) const = 0;
  virtual Vec3 spatial_grad(const Vec3& p, double t) const = 0;
  virtual Matrix<float> eval_batch(const Matrix<float>& points, float t) const;
  virtual Matrix<double> eval_batch(const Matrix<double>& points, double t) const;
  virtual Matrix<float> grad_batch(const Matrix<float>& points, float t) const;
  virtual Matrix<double> grad_batch(const Matrix<double>& points, double t) const;
  virtual std::string describe() const = 0;

  const Aabb& domain() const { return domain_; }
  void set_domain(const Aabb& box) { domain_ = box; }

protected:
  Aabb domain_{};
};

using TimeFieldPtr = std::shared_ptr<const TimeVaryingField>;

// f(p, t) = (1-t) a(p) + t b(p)
class BlendTimeField : public TimeVaryingField {
public:
  BlendTimeField(FieldPtr a, FieldPtr b);
  double eval(const Vec3& p, double t) const override;
  Vec3 spatial_grad(const Vec3& p, double t) const override;
  std::string describe() const override;

private:
  FieldPtr a_, b_;
};

// A 4-input network over (x, y, z, t).
class NeuralTimeField : public TimeVaryingField {
public:
  explicit NeuralTimeField(mlp::MlpParams<double> params);
  double eval(const Vec3& p, double t) const override;
  Vec3 spatial_grad(const Vec3& p, double t) const override;
  Matrix<float> eval_batch(const Matrix<float>& points, float t) const override;
  Matrix<double> eval_batch(const Matrix<double>& points, double t) const override;
  Matrix<float> grad_batch(const Matrix<float>& points, float t) const override;
  Matrix<double> grad_batch(const Matrix<double>& points, double t) const override;
  std::string describe() const override;

  const mlp::MlpParams<double>& params() const { return params_; }

private:
  mlp::MlpParams<double> params_;
  mlp::MlpParams<float> params_f32_;
};

FieldPtr time_slice(TimeFieldPtr field4d, double t);

// ---------------------------------------------------------------------------
// Analytic field construction from a textual spec, e.g. "sphere:r=0.7" or
// "torus:R=0.6,r=0.3" or "box:hx=0.6,hy=0.45,hz=0.5" or "blend:t=0.5".
// ---------------------------------------------------------------------------

struct AnalyticSpec {
  std::string name;
  std::map<std::string, double> params;
  std::string text() const;
};

AnalyticSpec parse_field_spec(const std::string& text);
FieldPtr make_analytic_field(const AnalyticSpec& spec);
TimeFieldPtr make_analytic_time_field(const AnalyticSpec& spec);  // name must be "blend"

}  // namespace nsdf::fields
