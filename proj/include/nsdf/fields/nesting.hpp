#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "nsdf/fields/field.hpp"

namespace nsdf::fields {

// Threshold recurrences. The sequences run coarse -> fine; eps entries are
// positive deviation bounds, deltas come back strictly decreasing.

// eps[0..m-2] bound |f_i - f_{i-1}| for i = 2..m (adjacent pairs).
std::vector<double> thresholds_prop1(const std::vector<double>& eps);

// eps[0..m-1] bound |f - f_i| against one common reference, m >= 2.
std::vector<double> thresholds_prop2(const std::vector<double>& eps);

// hausdorff[0..m-2] bound surface deviations; approx is the common network
// approximation error.
std::vector<double> thresholds_prop3(const std::vector<double>& hausdorff, double approx);

// ---------------------------------------------------------------------------

struct FieldSource {
  enum class Kind { analytic, weights };
  Kind kind = Kind::analytic;
  AnalyticSpec analytic;       // when Kind::analytic
  std::string weights_path;    // when Kind::weights (as written in a manifest)
};

struct SequenceEntry {
  FieldPtr field;
  FieldSource source;
  std::string label;  // e.g. "64x1" or "sphere"
  size_t param_count = 0;
};

struct SequenceProvenance {
  int proposition = 0;  // 0 = thresholds supplied directly
  std::vector<double> eps;
  double margin = 0.0;
  uint64_t sampler_seed = 0;
  size_t n_uniform = 0;
  size_t n_surface = 0;
  size_t verify_samples = 0;
  size_t verify_violations = 0;
  std::string note;
};

// Ordered fields, coarse to fine, with their nesting thresholds.
struct NestedSequence {
  std::vector<SequenceEntry> entries;
  std::vector<double> deltas;
  SequenceProvenance provenance;

  size_t size() const { return entries.size(); }
  const Field& field(size_t i) const { return *entries[i].field; }
  void validate() const;  // m >= 1, deltas positive and strictly decreasing
};

struct AnimatedSequence {
  struct Entry {
    TimeFieldPtr field;
    FieldSource source;
    std::string label;
    size_t param_count = 0;
  };
  std::vector<Entry> entries;
  std::vector<double> deltas;
  SequenceProvenance provenance;

  size_t size() const { return entries.size(); }
  NestedSequence slice(double t) const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// Sup-norm deviation estimation by sampling: uniform points in the domain
// plus points near the reference surface offset along the gradient. The
// returned eps includes the safety margin.
// ---------------------------------------------------------------------------

struct SupSamplerConfig {
  size_t n_uniform = 500000;
  size_t n_surface = 500000;
  double margin = 1e-3;           // added to the raw sampled maximum
  double noise_halfwidth = 0.1;   // surface offset range, scene units
  uint64_t seed = 1;
};

struct SupDiffResult {
  double eps = 0;      // raw_max + margin
  double raw_max = 0;
  Vec3 argmax;
  size_t samples = 0;
};

// Near-surface samples are taken around g's zero set (the finer / reference
// field by callers' convention).
SupDiffResult estimate_sup_diff(const Field& f, const Field& g, const SupSamplerConfig& config);

// Deterministic near-surface sampling used by the estimator, the verifier and
// the trainer: uniform seeds projected onto the zero set along the gradient,
// then offset along the gradient by noise from `offset` (uniform half-width
// or gaussian sigma).
struct SurfaceNoise {
  enum class Kind { uniform, gaussian } kind = Kind::uniform;
  double amount = 0.1;
};
std::vector<Vec3> sample_near_surface(const Field& field, size_t count, SurfaceNoise noise,
                                      Rng& rng);

// ---------------------------------------------------------------------------
// Empirical nesting verification over adjacent pairs.
// ---------------------------------------------------------------------------

struct VerifyConfig {
  size_t samples = 1000000;  // >= 1e5 required
  uint64_t seed = 7;
  size_t max_recorded_violations = 100000;
};

struct NestingViolation {
  Vec3 point;
  size_t pair_index;  // between entries pair_index and pair_index+1
  double f_coarse;
  double f_fine;
};

struct NestingReport {
  size_t samples_total = 0;
  size_t checked = 0;  // samples inside a fine neighborhood, summed over pairs
  size_t violation_count = 0;
  std::vector<NestingViolation> violations;  // capped
  double rate() const { return checked ? double(violation_count) / double(checked) : 0.0; }
  bool ok() const { return violation_count == 0; }
};

NestingReport verify_nesting(const NestedSequence& seq, const VerifyConfig& config);

// ---------------------------------------------------------------------------
// Manifest files (.nest)
// ---------------------------------------------------------------------------

struct SequenceManifest {
  bool time_dependent = false;
  NestedSequence sequence;    // when !time_dependent
  AnimatedSequence animated;  // when time_dependent
};

void save_manifest(const NestedSequence& seq, const std::filesystem::path& path);
void save_manifest(const AnimatedSequence& seq, const std::filesystem::path& path);
SequenceManifest load_manifest(const std::filesystem::path& path);

}  // namespace nsdf::fields
