#include "nsdf/fields/nesting.hpp"

#include <algorithm>
#include <cmath>

namespace nsdf::fields {

namespace {

void check_positive(const std::vector<double>& values, const char* what) {
  for (double v : values)
    if (!(v > 0))
      throw Error(ErrorKind::contract, std::string(what) + " must all be positive");
}

}  // namespace

std::vector<double> thresholds_prop1(const std::vector<double>& eps) {
  if (eps.empty())
    throw Error(ErrorKind::contract,
                "at least one deviation bound is required (a single-field sequence has no "
                "derived threshold)");
  check_positive(eps, "deviation bounds");
  size_t m = eps.size() + 1;
  std::vector<double> deltas(m);
  deltas[m - 1] = eps.back();
  for (size_t i = m - 1; i >= 1; --i) deltas[i - 1] = deltas[i] + eps[i - 1];
  return deltas;
}

std::vector<double> thresholds_prop2(const std::vector<double>& eps) {
  if (eps.size() < 2)
    throw Error(ErrorKind::contract, "the common-reference recurrence needs at least two fields");
  check_positive(eps, "deviation bounds");
  size_t m = eps.size();
  std::vector<double> deltas(m);
  deltas[m - 1] = eps[m - 1] + eps[m - 2];
  for (size_t i = m - 1; i >= 1; --i) deltas[i - 1] = deltas[i] + eps[i] + eps[i - 1];
  return deltas;
}

std::vector<double> thresholds_prop3(const std::vector<double>& hausdorff, double approx) {
  if (hausdorff.empty())
    throw Error(ErrorKind::contract, "at least one surface deviation is required");
  check_positive(hausdorff, "surface deviations");
  if (!(approx > 0))
    throw Error(ErrorKind::contract, "the approximation error must be positive");
  size_t m = hausdorff.size() + 1;
  std::vector<double> deltas(m);
  deltas[m - 1] = approx;
  for (size_t i = m - 1; i >= 1; --i)
    deltas[i - 1] = deltas[i] + hausdorff[i - 1] + 2 * approx;
  return deltas;
}

void NestedSequence::validate() const {
  if (entries.empty()) throw Error(ErrorKind::validation, "sequence has no fields");
  if (deltas.size() != entries.size())
    throw Error(ErrorKind::validation,
                "sequence has " + std::to_string(entries.size()) + " fields but " +
                    std::to_string(deltas.size()) + " thresholds");
  // Proposition-derived thresholds decrease strictly; hand-edited ones (for
  // probing sharpness) may not, and tracing/verification still accept them.
  for (size_t i = 0; i < deltas.size(); ++i)
    if (!(deltas[i] > 0))
      throw Error(ErrorKind::validation, "threshold " + std::to_string(i) + " is not positive");
  for (const auto& e : entries)
    if (!e.field) throw Error(ErrorKind::validation, "sequence entry has no field");
}

NestedSequence AnimatedSequence::slice(double t) const {
  NestedSequence seq;
  seq.deltas = deltas;
  seq.provenance = provenance;
  for (const auto& e : entries)
    seq.entries.push_back({time_slice(e.field, t), e.source, e.label, e.param_count});
  return seq;
}

void AnimatedSequence::validate() const {
  if (entries.empty()) throw Error(ErrorKind::validation, "sequence has no fields");
  if (deltas.size() != entries.size())
    throw Error(ErrorKind::validation, "thresholds do not match the field count");
  for (double d : deltas)
    if (!(d > 0)) throw Error(ErrorKind::validation, "thresholds must be positive");
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace {

constexpr int kProjectionSteps = 4;
constexpr size_t kChunk = 16384;

// Project a chunk of points onto the zero set along the gradient, batched in
// double precision. Returns accepted surface points.
void project_chunk(const Field& field, std::vector<Vec3>& pts, double keep_tol) {
  const int k = int(pts.size());
  Matrix<double> p(3, k);
  for (int j = 0; j < k; ++j) {
    p(0, j) = pts[j].x;
    p(1, j) = pts[j].y;
    p(2, j) = pts[j].z;
  }
  for (int step = 0; step < kProjectionSteps; ++step) {
    Matrix<double> d = field.eval_batch(p);
    Matrix<double> g = field.grad_batch(p);
    for (int j = 0; j < k; ++j) {
      double gx = g(0, j), gy = g(1, j), gz = g(2, j);
      double n2 = gx * gx + gy * gy + gz * gz;
      if (n2 < 1e-16) continue;
      double s = d(0, j) / n2;
      p(0, j) -= s * gx;
      p(1, j) -= s * gy;
      p(2, j) -= s * gz;
    }
  }
  Matrix<double> d = field.eval_batch(p);
  std::vector<Vec3> accepted;
  accepted.reserve(pts.size());
  for (int j = 0; j < k; ++j)
    if (std::abs(d(0, j)) <= keep_tol)
      accepted.push_back({p(0, j), p(1, j), p(2, j)});
  pts = std::move(accepted);
}

}  // namespace

std::vector<Vec3> sample_near_surface(const Field& field, size_t count, SurfaceNoise noise,
                                      Rng& rng) {
  std::vector<Vec3> result;
  result.reserve(count);
  const Aabb& box = field.domain();
  const double keep_tol = 2e-3 * box.diameter();

  int empty_rounds = 0;
  while (result.size() < count && empty_rounds < 8) {
    size_t want = count - result.size();
    size_t batch = std::min<size_t>(std::max<size_t>(want + want / 4, 4096), size_t(1) << 20);
    std::vector<Vec3> candidates(batch);
    for (auto& c : candidates) c = rng.uniform_in_box(box);

    // Projection parallelizes over fixed chunks; accepted points are merged
    // in chunk order so the stream stays deterministic.
    size_t chunks = (batch + kChunk - 1) / kChunk;
    std::vector<std::vector<Vec3>> accepted(chunks);
    parallel_chunks(int(chunks), [&](int ci) {
      size_t lo = size_t(ci) * kChunk, hi = std::min(batch, lo + kChunk);
      std::vector<Vec3> part(candidates.begin() + lo, candidates.begin() + hi);
      project_chunk(field, part, keep_tol);
      accepted[ci] = std::move(part);
    });
    std::vector<Vec3> surface;
    surface.reserve(batch);
    for (auto& part : accepted) surface.insert(surface.end(), part.begin(), part.end());
    if (surface.empty()) {
      ++empty_rounds;
      continue;
    }

    // Offset along the (batched) gradient; the noise draws stay sequential.
    size_t gchunks = (surface.size() + kChunk - 1) / kChunk;
    Matrix<double> grads(3, int(surface.size()));
    parallel_chunks(int(gchunks), [&](int ci) {
      size_t lo = size_t(ci) * kChunk, hi = std::min(surface.size(), lo + kChunk);
      Matrix<double> p(3, int(hi - lo));
      for (size_t j = lo; j < hi; ++j) {
        p(0, int(j - lo)) = surface[j].x;
        p(1, int(j - lo)) = surface[j].y;
        p(2, int(j - lo)) = surface[j].z;
      }
      Matrix<double> g = field.grad_batch(p);
      for (size_t j = lo; j < hi; ++j)
        for (int r = 0; r < 3; ++r) grads(r, int(j)) = g(r, int(j - lo));
    });
    for (size_t j = 0; j < surface.size() && result.size() < count; ++j) {
      Vec3 g{grads(0, int(j)), grads(1, int(j)), grads(2, int(j))};
      double n = g.norm();
      if (n < 1e-12) continue;
      double offset = noise.kind == SurfaceNoise::Kind::uniform
                          ? rng.uniform(-noise.amount, noise.amount)
                          : rng.normal(0.0, noise.amount);
      result.push_back(surface[j] + g * (offset / n));
    }
  }
  if (result.size() < count)
    throw Error(ErrorKind::divergence,
                "surface sampling kept only " + std::to_string(result.size()) + " of " +
                    std::to_string(count) + " requested points for " + field.describe());
  return result;
}

// ---------------------------------------------------------------------------
// Sup-norm difference
// ---------------------------------------------------------------------------

namespace {

// max |f - g| over points, evaluated in chunked double batches.
void max_abs_diff(const Field& f, const Field& g, const std::vector<Vec3>& pts, double& best,
                  Vec3& arg) {
  size_t n = pts.size();
  size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> chunk_best(chunks, -1.0);
  std::vector<Vec3> chunk_arg(chunks);
  parallel_chunks(int(chunks), [&](int ci) {
    size_t lo = size_t(ci) * kChunk, hi = std::min(n, lo + kChunk);
    Matrix<double> p(3, int(hi - lo));
    for (size_t j = lo; j < hi; ++j) {
      p(0, int(j - lo)) = pts[j].x;
      p(1, int(j - lo)) = pts[j].y;
      p(2, int(j - lo)) = pts[j].z;
    }
    Matrix<double> df = f.eval_batch(p);
    Matrix<double> dg = g.eval_batch(p);
    for (int j = 0; j < p.cols(); ++j) {
      double d = std::abs(df(0, j) - dg(0, j));
      if (d > chunk_best[ci]) {
        chunk_best[ci] = d;
        chunk_arg[ci] = pts[lo + j];
      }
    }
  });
  for (size_t ci = 0; ci < chunks; ++ci)
    if (chunk_best[ci] > best) {
      best = chunk_best[ci];
      arg = chunk_arg[ci];
    }
}

}  // namespace

SupDiffResult estimate_sup_diff(const Field& f, const Field& g, const SupSamplerConfig& config) {
  if (config.n_uniform + config.n_surface < 1000)
    throw Error(ErrorKind::config, "sup-norm estimation needs at least 1000 samples, got " +
                                       std::to_string(config.n_uniform + config.n_surface));
  Rng rng(config.seed);
  std::vector<Vec3> pts;
  pts.reserve(config.n_uniform + config.n_surface);
  const Aabb& box = g.domain();
  for (size_t i = 0; i < config.n_uniform; ++i) pts.push_back(rng.uniform_in_box(box));
  if (config.n_surface) {
    try {
      auto near = sample_near_surface(g, config.n_surface,
                                      {SurfaceNoise::Kind::uniform, config.noise_halfwidth}, rng);
      pts.insert(pts.end(), near.begin(), near.end());
    } catch (const Error&) {
      // No reachable zero set: the uniform half still bounds the deviation.
      for (size_t i = 0; i < config.n_surface; ++i) pts.push_back(rng.uniform_in_box(box));
    }
  }

  SupDiffResult result;
  result.samples = pts.size();
  double best = -1.0;
  Vec3 arg;
  max_abs_diff(f, g, pts, best, arg);
  result.raw_max = std::max(best, 0.0);
  result.argmax = arg;
  result.eps = result.raw_max + config.margin;
  return result;
}

// ---------------------------------------------------------------------------
// Nesting verification
// ---------------------------------------------------------------------------

NestingReport verify_nesting(const NestedSequence& seq, const VerifyConfig& config) {
  seq.validate();
  if (config.samples < 100000)
    throw Error(ErrorKind::contract, "nesting verification needs at least 1e5 samples, got " +
                                         std::to_string(config.samples));

  const size_t m = seq.size();
  NestingReport report;
  report.samples_total = config.samples;
  if (m < 2) return report;  // nothing to check

  // Half uniform, half near the member surfaces (violations live in thin
  // shells, so surface density is what matters).
  Rng rng(config.seed);
  std::vector<Vec3> pts;
  pts.reserve(config.samples);
  const Aabb& box = seq.field(m - 1).domain();
  size_t n_uniform = config.samples / 2;
  for (size_t i = 0; i < n_uniform; ++i) pts.push_back(rng.uniform_in_box(box));
  size_t n_surface = config.samples - n_uniform;
  size_t per_field = n_surface / m;
  for (size_t fi = 0; fi < m; ++fi) {
    size_t quota = fi + 1 == m ? n_surface - per_field * (m - 1) : per_field;
    // A member whose zero set is not reachable inside the domain (a badly
    // fitted net, say) still gets checked through uniform samples.
    try {
      auto near = sample_near_surface(seq.field(fi), quota,
                                      {SurfaceNoise::Kind::uniform, 0.1}, rng);
      pts.insert(pts.end(), near.begin(), near.end());
    } catch (const Error&) {
      for (size_t i = 0; i < quota; ++i) pts.push_back(rng.uniform_in_box(box));
    }
  }

  const size_t n = pts.size();
  const size_t chunks = (n + kChunk - 1) / kChunk;

  for (size_t pair = 0; pair + 1 < m; ++pair) {
    const Field& coarse = seq.field(pair);
    const Field& fine = seq.field(pair + 1);
    const double delta_coarse = seq.deltas[pair];
    const double delta_fine = seq.deltas[pair + 1];

    // Per-chunk results merged in chunk order, so the report is identical no
    // matter how many workers ran.
    std::vector<std::vector<NestingViolation>> chunk_violations(chunks);
    std::vector<size_t> chunk_checked(chunks, 0);

    parallel_chunks(int(chunks), [&](int ci) {
      size_t lo = size_t(ci) * kChunk, hi = std::min(n, lo + kChunk);
      int k = int(hi - lo);
      Matrix<double> p(3, k);
      for (int j = 0; j < k; ++j) {
        p(0, j) = pts[lo + j].x;
        p(1, j) = pts[lo + j].y;
        p(2, j) = pts[lo + j].z;
      }
      Matrix<double> df = fine.eval_batch(p);

      // Gather the points inside the fine neighborhood, then check them
      // against the coarse one.
      std::vector<int> inside;
      for (int j = 0; j < k; ++j)
        if (std::abs(df(0, j)) <= delta_fine) inside.push_back(j);
      if (inside.empty()) return;

      Matrix<double> q(3, int(inside.size()));
      for (size_t jj = 0; jj < inside.size(); ++jj) {
        q(0, int(jj)) = p(0, inside[jj]);
        q(1, int(jj)) = p(1, inside[jj]);
        q(2, int(jj)) = p(2, inside[jj]);
      }
      Matrix<double> dc = coarse.eval_batch(q);

      chunk_checked[ci] = inside.size();
      for (size_t jj = 0; jj < inside.size(); ++jj) {
        if (std::abs(dc(0, int(jj))) > delta_coarse)
          chunk_violations[ci].push_back(
              {pts[lo + inside[jj]], pair, dc(0, int(jj)), df(0, inside[jj])});
      }
    });

    for (size_t ci = 0; ci < chunks; ++ci) {
      report.checked += chunk_checked[ci];
      report.violation_count += chunk_violations[ci].size();
      for (auto& v : chunk_violations[ci])
        if (report.violations.size() < config.max_recorded_violations)
          report.violations.push_back(v);
    }
  }
  return report;
}

}  // namespace nsdf::fields
