#include "nsdf/tracer/trace.hpp"

#include <algorithm>
#include <cmath>

namespace nsdf::tracer {

using tensor::Matrix;

void TraceConfig::validate(size_t sequence_size) const {
  if (budgets.size() != sequence_size)
    throw Error(ErrorKind::config, "got " + std::to_string(budgets.size()) + " budgets for " +
                                       std::to_string(sequence_size) + " levels");
  if (sequence_size > kMaxLevels)
    throw Error(ErrorKind::config, "at most " + std::to_string(kMaxLevels) + " levels supported");
  bool any = false;
  for (int b : budgets) {
    if (b < 0) throw Error(ErrorKind::config, "iteration budgets must be non-negative");
    if (b > 0) any = true;
  }
  if (!any) throw Error(ErrorKind::config, "all iteration budgets are zero");
  if (!(eps_stop > 0)) throw Error(ErrorKind::config, "eps_stop must be positive");
}

namespace {

struct BatchState {
  std::vector<float> px, py, pz, t;
  const Ray* rays = nullptr;
  HitRecord* records = nullptr;
};

// Trace one level for the active rays. An evaluation counts as one iteration;
// the converging evaluation is included. Convergence at an offset level means
// the ray has reached (or is already inside) the offset surface; at the final
// level the end point must lie within eps_stop of the zero set on either
// side, and backward steps are clamped so fitting noise cannot walk the ray
// out again.
void trace_level(const Field& field, int level, float delta, bool final_level, float eps_stop,
                 int budget, float t_max, BatchState& st, std::vector<int>& active,
                 std::vector<int>& advanced) {
  advanced.clear();
  if (budget <= 0 || active.empty()) return;

  std::vector<int> still = active;
  for (int iter = 0; iter < budget && !still.empty(); ++iter) {
    const int k = int(still.size());
    Matrix<float> points(3, k);
    for (int j = 0; j < k; ++j) {
      int r = still[j];
      points(0, j) = st.px[r];
      points(1, j) = st.py[r];
      points(2, j) = st.pz[r];
    }
    Matrix<float> f = field.eval_batch(points);

    std::vector<int> next;
    next.reserve(still.size());
    for (int j = 0; j < k; ++j) {
      int r = still[j];
      HitRecord& rec = st.records[r];
      rec.level_reached = level;
      rec.iterations_used[level]++;
      float fd = f(0, j) - delta;
      rec.final_distance = std::fabs(fd);

      bool converged = final_level ? std::fabs(fd) <= eps_stop : fd <= eps_stop;
      if (converged) {
        advanced.push_back(r);
        continue;
      }
      float step = fd;
      if (final_level && step < 0) step = 0;
      st.px[r] += step * st.rays[r].direction.x;
      st.py[r] += step * st.rays[r].direction.y;
      st.pz[r] += step * st.rays[r].direction.z;
      st.t[r] += step;
      if (st.t[r] > t_max) continue;  // miss: flew past the far clip
      next.push_back(r);
    }
    still = std::move(next);
  }
  // Rays still in `still` exhausted the budget: misses, not advanced.
}

void trace_rays(const NestedSequence& seq, const Ray* rays, HitRecord* records, size_t count,
                const TraceConfig& config) {
  const size_t m = seq.size();
  int effective_final = -1;
  for (size_t j = 0; j < m; ++j)
    if (config.budgets[j] > 0) effective_final = int(j);

  BatchState st;
  st.rays = rays;
  st.records = records;
  st.px.resize(count);
  st.py.resize(count);
  st.pz.resize(count);
  st.t.assign(count, 0.0f);
  std::vector<int> active(count);
  for (size_t i = 0; i < count; ++i) {
    records[i] = HitRecord{};
    st.px[i] = rays[i].origin.x;
    st.py[i] = rays[i].origin.y;
    st.pz[i] = rays[i].origin.z;
    active[int(i)] = int(i);
  }

  std::vector<int> advanced;
  for (int j = 0; j <= effective_final; ++j) {
    if (config.budgets[j] == 0) continue;  // normals-only level, passed through
    bool final_level = j == effective_final;
    float delta = final_level ? 0.0f : float(seq.deltas[j]);
    trace_level(seq.field(j), j, delta, final_level, config.eps_stop, config.budgets[j],
                config.t_max, st, active, advanced);
    active = advanced;
  }

  for (int r : active) {
    HitRecord& rec = records[r];
    rec.hit = true;
    rec.point = {st.px[r], st.py[r], st.pz[r]};
    rec.t = st.t[r];
  }
  // Misses keep hit=false with their last state for diagnostics.
  for (size_t i = 0; i < count; ++i) {
    if (!records[i].hit) {
      records[i].point = {st.px[i], st.py[i], st.pz[i]};
      records[i].t = st.t[i];
    }
  }
}

}  // namespace

HitRecord sphere_trace(const Field& field, const Ray& ray, float delta, float eps_stop,
                       int max_iters, float t_max) {
  if (!(eps_stop > 0)) throw Error(ErrorKind::config, "eps_stop must be positive");
  if (delta < 0) throw Error(ErrorKind::config, "offset must be non-negative");

  // A single final level with an explicit offset: traces the delta-level set.
  BatchState st;
  HitRecord record;
  Ray r = ray;
  st.rays = &r;
  st.records = &record;
  st.px = {ray.origin.x};
  st.py = {ray.origin.y};
  st.pz = {ray.origin.z};
  st.t = {0.0f};
  std::vector<int> active{0}, advanced;
  trace_level(field, 0, delta, /*final_level=*/true, eps_stop, max_iters, t_max, st, active,
              advanced);
  if (!advanced.empty()) {
    record.hit = true;
  }
  record.point = {st.px[0], st.py[0], st.pz[0]};
  record.t = st.t[0];
  return record;
}

HitRecord multiscale_sphere_trace(const NestedSequence& seq, const Ray& ray,
                                  const TraceConfig& config) {
  seq.validate();
  config.validate(seq.size());
  HitRecord record;
  trace_rays(seq, &ray, &record, 1, config);
  return record;
}

std::vector<HitRecord> trace_image(const NestedSequence& seq, const Camera& camera,
                                   const TraceConfig& config) {
  seq.validate();
  config.validate(seq.size());
  std::vector<Ray> rays = generate_rays(camera);
  std::vector<HitRecord> records(rays.size());

  constexpr size_t kRaysPerChunk = 16384;
  const size_t chunks = (rays.size() + kRaysPerChunk - 1) / kRaysPerChunk;
  parallel_chunks(int(chunks), [&](int ci) {
    size_t lo = size_t(ci) * kRaysPerChunk;
    size_t hi = std::min(rays.size(), lo + kRaysPerChunk);
    trace_rays(seq, rays.data() + lo, records.data() + lo, hi - lo, config);
  });
  return records;
}

}  // namespace nsdf::tracer
