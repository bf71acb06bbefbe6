// Command-line front end: fits capacity-sorted networks to reference shapes,
// certifies nesting thresholds, renders stills and frame sequences, runs the
// bench matrix, and maps fine normals onto meshes.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "nsdf/shading/shading.hpp"
#include "nsdf/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace nsdf;

namespace {

// Exit codes: 0 success, 1 usage, 2 validation or certification failure,
// 3 numeric divergence.
int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config: return 1;
    case ErrorKind::divergence: return 3;
    default: return 2;
  }
}

using EchoMap = std::vector<std::pair<std::string, std::string>>;

void echo_config(const std::string& command, const EchoMap& values,
                 const fs::path& save_next_to) {
  std::ostringstream os;
  os << "# resolved configuration: " << command << "\n";
  for (const auto& [k, v] : values) os << k << " = " << v << "\n";
  std::cout << os.str();
  if (!save_next_to.empty()) {
    fs::path cfg = save_next_to;
    cfg += ".config";
    std::ofstream out(cfg);
    out << os.str();
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

Vec3 parse_vec3(const std::string& s) {
  auto parts = split(s, ',');
  if (parts.size() != 3)
    throw Error(ErrorKind::config, "expected x,y,z triple, got '" + s + "'");
  try {
    return {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, "expected x,y,z triple, got '" + s + "'");
  }
}

std::vector<int> parse_budgets(const std::string& s) {
  std::vector<int> out;
  for (const auto& p : split(s, ',')) {
    try {
      out.push_back(std::stoi(p));
    } catch (const std::exception&) {
      throw Error(ErrorKind::config, "bad iteration budget '" + p + "'");
    }
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

// Bundled reference shapes; anything else goes through the field-spec parser.
fields::AnalyticSpec resolve_shape(const std::string& name) {
  if (name == "sphere") return fields::parse_field_spec("sphere:r=0.7");
  if (name == "sphere_unit") return fields::parse_field_spec("sphere:r=1");
  if (name == "torus") return fields::parse_field_spec("torus:R=0.6,r=0.3");
  if (name == "box") return fields::parse_field_spec("box:hx=0.6,hy=0.45,hz=0.5");
  if (name == "blend") return fields::parse_field_spec("blend:r=0.7,R=0.6,rt=0.3");
  return fields::parse_field_spec(name);
}

struct CameraFlags {
  std::string position = "2,1.5,2";
  std::string look_at = "0,0,0";
  std::string up = "0,1,0";
  double fov = 50.0;
  int width = 256;
  int height = 256;

  void attach(CLI::App* cmd) {
    cmd->add_option("--cam-pos", position, "camera position x,y,z");
    cmd->add_option("--look-at", look_at, "look-at point x,y,z");
    cmd->add_option("--up", up, "up vector x,y,z");
    cmd->add_option("--fov", fov, "vertical field of view, degrees");
    cmd->add_option("--width", width, "image width in pixels");
    cmd->add_option("--height", height, "image height in pixels");
  }
  tracer::Camera camera() const {
    tracer::Camera cam;
    cam.position = parse_vec3(position);
    cam.look_at = parse_vec3(look_at);
    cam.up = parse_vec3(up);
    cam.vertical_fov_deg = fov;
    cam.width = width;
    cam.height = height;
    return cam;
  }
  void echo(EchoMap& m) const {
    m.push_back({"cam-pos", position});
    m.push_back({"look-at", look_at});
    m.push_back({"up", up});
    m.push_back({"fov", std::to_string(fov)});
    m.push_back({"width", std::to_string(width)});
    m.push_back({"height", std::to_string(height)});
  }
};

void write_image(const shading::ImageBuffer& img, const fs::path& path) {
  if (path.extension() == ".png")
    shading::write_png(img, path);
  else
    shading::write_ppm(img, path);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string shape;
  std::string archs = "64x1";
  std::string out_dir = ".";
  std::string name;
  uint64_t seed = 7;
  int epochs = 800;
  std::string epochs_list;
  double lr = 0.1;
  double omega0 = 30.0;
  size_t n_uniform = 100000;
  size_t n_surface = 100000;
  double sigma = 0.01;
  size_t sup_uniform = 500000;
  size_t sup_surface = 500000;
  size_t verify_samples = 1000000;
  double domain_half = 1.0;
};

int run_train(const TrainFlags& f) {
  if (f.shape.empty()) throw Error(ErrorKind::config, "--shape is required");
  fields::AnalyticSpec shape_spec = resolve_shape(f.shape);
  const bool time_dependent = shape_spec.name == "blend";
  const int input_dim = time_dependent ? 4 : 3;

  std::vector<mlp::Architecture> archs;
  for (const auto& a : split(f.archs, ','))
    archs.push_back(mlp::parse_architecture(a, input_dim));
  if (archs.empty()) throw Error(ErrorKind::config, "--archs must list at least one WxK entry");

  std::string name = f.name.empty() ? f.shape : f.name;
  fs::path out_dir(f.out_dir);
  fs::create_directories(out_dir);
  fs::path manifest_path = out_dir / (name + ".nest");

  trainer::SequenceFitConfig config;
  config.train.epochs = f.epochs;
  config.train.learning_rate = f.lr;
  config.train.omega0 = f.omega0;
  config.train.seed = f.seed;
  config.samples = {f.n_uniform, f.n_surface, f.sigma, 10000, f.seed};
  config.sup.n_uniform = f.sup_uniform;
  config.sup.n_surface = f.sup_surface;
  config.sup.seed = f.seed + 1;
  config.verify.samples = f.verify_samples;
  config.verify.seed = f.seed + 2;
  for (const auto& e : split(f.epochs_list, ',')) config.epochs_per_arch.push_back(std::stoi(e));

  EchoMap echo{{"command", "train"},
               {"shape", shape_spec.text()},
               {"archs", f.archs},
               {"seed", std::to_string(f.seed)},
               {"epochs", std::to_string(f.epochs)},
               {"lr", std::to_string(f.lr)},
               {"omega0", std::to_string(f.omega0)},
               {"uniform", std::to_string(f.n_uniform)},
               {"surface", std::to_string(f.n_surface)},
               {"sigma", std::to_string(f.sigma)},
               {"sup-uniform", std::to_string(f.sup_uniform)},
               {"sup-surface", std::to_string(f.sup_surface)},
               {"verify-samples", std::to_string(f.verify_samples)},
               {"domain-half", std::to_string(f.domain_half)},
               {"out-dir", f.out_dir},
               {"name", name}};
  if (!f.epochs_list.empty()) echo.push_back({"epochs-list", f.epochs_list});
  echo_config("train", echo, manifest_path);

  auto save_member = [&](size_t i, const mlp::MlpParams<double>& params,
                         const trainer::TrainReport& report) {
    std::string stem = name + "_" + archs[i].name();
    fs::path weights = out_dir / (stem + ".sdfnet");
    mlp::save_params(params, weights);
    report.write(out_dir / (stem + ".report.txt"));
    std::cout << archs[i].name() << ": " << report.summary() << "\n";
    return weights.filename().string();
  };

  if (time_dependent) {
    auto oracle = fields::make_analytic_time_field(shape_spec);
    auto mutable_oracle = std::const_pointer_cast<fields::TimeVaryingField>(
        std::shared_ptr<const fields::TimeVaryingField>(oracle));
    mutable_oracle->set_domain(Aabb::cube(f.domain_half));
    trainer::AnimatedFitResult fit = trainer::fit_sequence_4d(archs, *oracle, config);
    for (size_t i = 0; i < archs.size(); ++i) {
      std::string file = save_member(i, fit.params[i], fit.reports[i]);
      fit.sequence.entries[i].source = {fields::FieldSource::Kind::weights, {}, file};
    }
    save_manifest(fit.sequence, manifest_path);
    std::cout << "certified per-slice with zero violations; manifest " << manifest_path << "\n";
  } else {
    auto oracle_const = fields::make_analytic_field(shape_spec);
    auto oracle = std::const_pointer_cast<fields::Field>(oracle_const);
    oracle->set_domain(Aabb::cube(f.domain_half));
    trainer::SequenceFitResult fit = trainer::fit_sequence(archs, *oracle, config);
    for (size_t i = 0; i < archs.size(); ++i) {
      std::string file = save_member(i, fit.params[i], fit.reports[i]);
      fit.sequence.entries[i].source = {fields::FieldSource::Kind::weights, {}, file};
    }
    save_manifest(fit.sequence, manifest_path);
    std::cout << "eps:";
    for (double e : fit.eps) std::cout << " " << e;
    std::cout << "\ndeltas:";
    for (double d : fit.sequence.deltas) std::cout << " " << d;
    std::cout << "\ncertification: " << fit.certification.violation_count << " violations over "
              << fit.certification.checked << " checked samples\nmanifest " << manifest_path
              << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

struct RenderFlags {
  std::string manifest;
  std::string budgets;
  std::string normals = "own";
  int fine = -1;
  double eps_stop = 1e-3;
  double t_max = 10.0;
  int time_steps = 0;
  double time = 0.0;
  std::string out = "render.ppm";
  CameraFlags camera;
};

shading::RenderConfig make_render_config(const RenderFlags& f, size_t levels) {
  shading::RenderConfig config;
  config.trace.budgets = f.budgets.empty() ? std::vector<int>(levels, 40) : parse_budgets(f.budgets);
  config.trace.eps_stop = float(f.eps_stop);
  config.trace.t_max = float(f.t_max);
  if (f.normals == "own")
    config.normal_source = shading::NormalSource::own;
  else if (f.normals == "mapped")
    config.normal_source = shading::NormalSource::mapped;
  else
    throw Error(ErrorKind::config, "--normals must be 'own' or 'mapped'");
  config.mapped_fine_index = f.fine;
  return config;
}

int run_render(const RenderFlags& f) {
  if (f.manifest.empty()) throw Error(ErrorKind::config, "--manifest is required");
  fields::SequenceManifest manifest = fields::load_manifest(f.manifest);
  size_t levels = manifest.time_dependent ? manifest.animated.size() : manifest.sequence.size();
  shading::RenderConfig config = make_render_config(f, levels);
  tracer::Camera cam = f.camera.camera();

  EchoMap echo{{"command", "render"},
               {"manifest", f.manifest},
               {"budgets", join_ints(config.trace.budgets)},
               {"normals", f.normals},
               {"fine", std::to_string(f.fine)},
               {"eps-stop", std::to_string(f.eps_stop)},
               {"t-max", std::to_string(f.t_max)},
               {"out", f.out}};
  if (manifest.time_dependent) {
    echo.push_back({"time-steps", std::to_string(f.time_steps)});
    echo.push_back({"time", std::to_string(f.time)});
  }
  f.camera.echo(echo);
  echo_config("render", echo, f.out);

  if (manifest.time_dependent && f.time_steps > 0) {
    fs::path base(f.out);
    fs::path dir = base.parent_path();
    std::string stem = base.stem().string();
    std::string ext = base.extension().string();
    for (int i = 0; i < f.time_steps; ++i) {
      double t = f.time_steps == 1 ? 0.0 : double(i) / double(f.time_steps - 1);
      fields::NestedSequence seq = manifest.animated.slice(t);
      shading::ImageBuffer img = shading::render(seq, cam, config);
      std::ostringstream frame_name;
      frame_name << stem << "_" << std::setw(3) << std::setfill('0') << i << ext;
      fs::path frame = dir.empty() ? fs::path(frame_name.str()) : dir / frame_name.str();
      write_image(img, frame);
      std::cout << "frame " << i << " (t=" << t << ") -> " << frame << "\n";
    }
    return 0;
  }

  fields::NestedSequence seq =
      manifest.time_dependent ? manifest.animated.slice(f.time) : manifest.sequence;
  shading::ImageBuffer img = shading::render(seq, cam, config);
  write_image(img, f.out);
  size_t hits = 0;
  for (auto m : img.mask) hits += m;
  std::cout << "wrote " << f.out << " (" << hits << " hit pixels of " << img.pixel_count()
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchRow {
  std::vector<std::string> nets;
  std::vector<int> iters;
  std::string normals = "own";
  bool baseline = false;
};

BenchRow parse_row(const std::string& text) {
  BenchRow row;
  for (const auto& part : split(text, ';')) {
    auto eq = part.find('=');
    std::string key = part.substr(0, eq);
    std::string value = eq == std::string::npos ? "" : part.substr(eq + 1);
    if (key == "nets")
      row.nets = split(value, ',');
    else if (key == "iters")
      row.iters = parse_budgets(value);
    else if (key == "normals")
      row.normals = value;
    else if (key == "baseline")
      row.baseline = true;
    else
      throw Error(ErrorKind::config, "unknown bench row key '" + key + "' in '" + text + "'");
  }
  if (row.nets.empty() || row.iters.size() != row.nets.size())
    throw Error(ErrorKind::config,
                "bench row needs matching nets and iters lists: '" + text + "'");
  return row;
}

struct BenchFlags {
  std::string manifest;
  std::vector<std::string> rows;
  int repeats = 1;
  double eps_stop = 1e-3;
  std::string out = "bench.csv";
  CameraFlags camera;
};

int run_bench(const BenchFlags& f) {
  if (f.manifest.empty()) throw Error(ErrorKind::config, "--manifest is required");
  if (f.rows.empty()) throw Error(ErrorKind::config, "at least one --row is required");
  fields::SequenceManifest manifest = fields::load_manifest(f.manifest);
  if (manifest.time_dependent)
    throw Error(ErrorKind::config, "bench expects a static manifest");
  const fields::NestedSequence& full = manifest.sequence;

  auto find_entry = [&](const std::string& label) -> size_t {
    // Bare numbers select by position; anything else matches the label.
    if (!label.empty() && label.find_first_not_of("0123456789") == std::string::npos) {
      size_t idx = std::stoul(label);
      if (idx >= full.size())
        throw Error(ErrorKind::config, "field index " + label + " is out of range");
      return idx;
    }
    for (size_t i = 0; i < full.size(); ++i)
      if (full.entries[i].label == label) return i;
    throw Error(ErrorKind::config, "manifest has no field labelled '" + label + "'");
  };

  std::vector<BenchRow> rows;
  int baseline_index = -1;
  for (const auto& text : f.rows) {
    rows.push_back(parse_row(text));
    if (rows.back().baseline) {
      if (baseline_index >= 0) throw Error(ErrorKind::config, "only one baseline row is allowed");
      baseline_index = int(rows.size()) - 1;
    }
  }
  if (baseline_index < 0)
    throw Error(ErrorKind::config, "no baseline row configured (add ';baseline' to one row)");

  EchoMap echo{{"command", "bench"},
               {"manifest", f.manifest},
               {"repeats", std::to_string(f.repeats)},
               {"eps-stop", std::to_string(f.eps_stop)},
               {"out", f.out}};
  for (const auto& r : f.rows) echo.push_back({"row", r});
  f.camera.echo(echo);
  echo_config("bench", echo, f.out);

  tracer::Camera cam = f.camera.camera();

  struct RowResult {
    std::string nets_label;
    std::string iters_label;
    double time_s = 0;
    size_t mem_kb = 0;
    double mse = -1;
    double speedup = 0;
    shading::ImageBuffer image;
  };

  auto run_row = [&](const BenchRow& row) {
    // The traced sequence is the listed subsequence; mapped normals come from
    // the manifest's finest field, appended with a zero budget if absent.
    fields::NestedSequence seq;
    std::vector<int> budgets = row.iters;
    for (const auto& label : row.nets) seq.entries.push_back(full.entries[find_entry(label)]);
    std::vector<size_t> order;
    for (const auto& label : row.nets) order.push_back(find_entry(label));
    seq.deltas.clear();
    for (size_t idx : order) seq.deltas.push_back(full.deltas[idx]);

    shading::RenderConfig config;
    config.shade.material.specular = 0.3f;
    config.trace.eps_stop = float(f.eps_stop);
    if (row.normals == "mapped") {
      config.normal_source = shading::NormalSource::mapped;
      size_t fine_idx = full.size() - 1;
      if (order.empty() || order.back() != fine_idx) {
        seq.entries.push_back(full.entries[fine_idx]);
        seq.deltas.push_back(full.deltas[fine_idx]);
        budgets.push_back(0);
      }
      config.mapped_fine_index = int(seq.size()) - 1;
    } else if (row.normals != "own") {
      throw Error(ErrorKind::config, "row normals must be 'own' or 'mapped'");
    }
    config.trace.budgets = budgets;

    RowResult result;
    for (const auto& e : seq.entries)
      result.mem_kb += (e.param_count * 4 + 1023) / 1024;  // 4 bytes/parameter, ceil per net

    auto start = std::chrono::steady_clock::now();
    for (int rep = 0; rep < f.repeats; ++rep)
      result.image = shading::render(seq, cam, config);
    auto stop = std::chrono::steady_clock::now();
    result.time_s = std::chrono::duration<double>(stop - start).count() / f.repeats;

    std::ostringstream nets_os, iters_os;
    for (size_t i = 0; i < row.nets.size(); ++i) nets_os << (i ? ">" : "") << row.nets[i];
    if (row.normals == "mapped") nets_os << "+map";
    result.nets_label = nets_os.str();
    result.iters_label = join_ints(row.iters);
    return result;
  };

  std::vector<RowResult> results;
  results.reserve(rows.size());
  for (const auto& row : rows) results.push_back(run_row(row));

  const RowResult& baseline = results[baseline_index];
  std::ofstream csv(f.out);
  if (!csv) throw Error(ErrorKind::validation, "cannot write " + f.out);
  csv << "nets,iters,time_s,mem_kb,mse,speedup\n";
  csv.precision(6);
  for (size_t i = 0; i < results.size(); ++i) {
    RowResult& r = results[i];
    r.speedup = r.time_s > 0 ? baseline.time_s / r.time_s : 0.0;
    csv << "\"" << r.nets_label << "\",\"" << r.iters_label << "\"," << r.time_s << ","
        << r.mem_kb << ",";
    if (int(i) != baseline_index) {
      r.mse = shading::image_mse(r.image, baseline.image);
      csv << r.mse;
    }
    csv << "," << r.speedup << "\n";
  }
  std::cout << "wrote " << f.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// nest
// ---------------------------------------------------------------------------

struct NestFlags {
  std::string fields_arg;
  int prop = 2;
  std::string eps_arg;
  std::string oracle;
  double approx = 0.0;
  size_t samples = 1000000;
  size_t sup_uniform = 500000;
  size_t sup_surface = 500000;
  uint64_t seed = 7;
  double scale_delta1 = 1.0;
  bool allow_violations = false;
  std::string out;
};

int run_nest(const NestFlags& f) {
  auto specs = split(f.fields_arg, ',');
  if (specs.size() < 2)
    throw Error(ErrorKind::config, "--fields needs at least two comma-separated entries");

  fields::NestedSequence seq;
  for (const auto& s : specs) {
    fields::SequenceEntry entry;
    if (s.size() > 7 && s.substr(s.size() - 7) == ".sdfnet") {
      auto params = mlp::load_params(s);
      entry.param_count = params.parameter_count();
      entry.field = std::make_shared<fields::NeuralField>(std::move(params));
      entry.source = {fields::FieldSource::Kind::weights, {}, s};
      entry.label = fs::path(s).stem().string();
    } else {
      fields::AnalyticSpec spec = resolve_shape(s);
      entry.field = fields::make_analytic_field(spec);
      entry.source = {fields::FieldSource::Kind::analytic, spec, {}};
      entry.label = spec.name;
    }
    // Labels must stay unique for bench row lookups.
    std::string base = entry.label;
    int suffix = 1;
    auto taken = [&](const std::string& l) {
      for (const auto& e : seq.entries)
        if (e.label == l) return true;
      return false;
    };
    while (taken(entry.label)) entry.label = base + "_" + std::to_string(++suffix);
    seq.entries.push_back(std::move(entry));
  }

  // Deviation bounds: given explicitly, or measured against an oracle (the
  // common-reference recurrence) / between adjacent members (the pairwise
  // recurrence).
  std::vector<double> eps;
  fields::SupSamplerConfig sup;
  sup.n_uniform = f.sup_uniform;
  sup.n_surface = f.sup_surface;
  sup.seed = f.seed + 1;
  if (!f.eps_arg.empty()) {
    for (const auto& e : split(f.eps_arg, ',')) eps.push_back(std::stod(e));
  } else if (f.prop == 2) {
    if (f.oracle.empty())
      throw Error(ErrorKind::config, "--prop 2 needs --eps or --oracle to measure against");
    auto oracle = fields::make_analytic_field(resolve_shape(f.oracle));
    for (const auto& e : seq.entries)
      eps.push_back(fields::estimate_sup_diff(*e.field, *oracle, sup).eps);
  } else if (f.prop == 1) {
    for (size_t i = 1; i < seq.entries.size(); ++i)
      eps.push_back(
          fields::estimate_sup_diff(*seq.entries[i - 1].field, *seq.entries[i].field, sup).eps);
  } else {
    throw Error(ErrorKind::config, "--prop 3 needs explicit --eps (surface deviations)");
  }

  switch (f.prop) {
    case 1: seq.deltas = fields::thresholds_prop1(eps); break;
    case 2: seq.deltas = fields::thresholds_prop2(eps); break;
    case 3:
      if (!(f.approx > 0))
        throw Error(ErrorKind::config, "--prop 3 needs a positive --approx");
      seq.deltas = fields::thresholds_prop3(eps, f.approx);
      break;
    default:
      throw Error(ErrorKind::config, "--prop must be 1, 2 or 3");
  }
  seq.deltas[0] *= f.scale_delta1;

  seq.provenance.proposition = f.prop;
  seq.provenance.eps = eps;
  seq.provenance.margin = sup.margin;
  seq.provenance.sampler_seed = sup.seed;
  seq.provenance.n_uniform = sup.n_uniform;
  seq.provenance.n_surface = sup.n_surface;

  EchoMap echo{{"command", "nest"},      {"fields", f.fields_arg},
               {"prop", std::to_string(f.prop)}, {"samples", std::to_string(f.samples)},
               {"seed", std::to_string(f.seed)}, {"scale-delta1", std::to_string(f.scale_delta1)},
               {"allow-violations", f.allow_violations ? "true" : "false"}};
  if (!f.eps_arg.empty()) echo.push_back({"eps", f.eps_arg});
  if (!f.oracle.empty()) echo.push_back({"oracle", f.oracle});
  if (f.approx > 0) echo.push_back({"approx", std::to_string(f.approx)});
  if (!f.out.empty()) echo.push_back({"out", f.out});
  echo_config("nest", echo, f.out.empty() ? fs::path() : fs::path(f.out));

  fields::VerifyConfig verify;
  verify.samples = f.samples;
  verify.seed = f.seed;
  fields::NestingReport report = verify_nesting(seq, verify);
  seq.provenance.verify_samples = f.samples;
  seq.provenance.verify_violations = report.violation_count;

  std::cout << "proposition " << f.prop << "\neps:";
  for (double e : eps) std::cout << " " << e;
  std::cout << "\ndeltas:";
  for (double d : seq.deltas) std::cout << " " << d;
  std::cout << "\nchecked " << report.checked << " in-neighborhood samples of "
            << report.samples_total << ", violations " << report.violation_count << " (rate "
            << report.rate() << ")\n";
  size_t show = std::min<size_t>(report.violations.size(), 10);
  for (size_t i = 0; i < show; ++i) {
    const auto& v = report.violations[i];
    std::cout << "  violation at (" << v.point.x << ", " << v.point.y << ", " << v.point.z
              << ") pair " << v.pair_index << ": |f_coarse|=" << std::abs(v.f_coarse)
              << " > delta, |f_fine|=" << std::abs(v.f_fine) << "\n";
  }

  if (!f.out.empty()) save_manifest(seq, f.out);
  if (!report.ok() && !f.allow_violations) return 2;
  return 0;
}

// ---------------------------------------------------------------------------
// map-normals
// ---------------------------------------------------------------------------

struct MapNormalsFlags {
  std::string mesh;
  std::string fine;
  double delta = 0.05;
  std::string out;
};

int run_map_normals(const MapNormalsFlags& f) {
  if (f.mesh.empty() || f.fine.empty() || f.out.empty())
    throw Error(ErrorKind::config, "--mesh, --fine and --out are required");

  EchoMap echo{{"command", "map-normals"},
               {"mesh", f.mesh},
               {"fine", f.fine},
               {"delta", std::to_string(f.delta)},
               {"out", f.out}};
  echo_config("map-normals", echo, f.out);

  shading::Mesh mesh = shading::load_obj(f.mesh);
  fields::FieldPtr fine;
  if (f.fine.size() > 7 && f.fine.substr(f.fine.size() - 7) == ".sdfnet")
    fine = std::make_shared<fields::NeuralField>(mlp::load_params(f.fine));
  else
    fine = fields::make_analytic_field(resolve_shape(f.fine));

  shading::MeshMapReport report = shading::map_normals_to_mesh(mesh, *fine, f.delta);
  shading::save_obj(mesh, f.out);
  std::cout << "mapped " << report.mapped << " of " << mesh.vertices.size() << " vertex normals; "
            << report.violators << " outside the neighborhood ("
            << report.violator_fraction() * 100 << "%), " << report.fallbacks
            << " zero-gradient fallbacks\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale renderer for nested neural signed distance fields"};
  app.require_subcommand(1);

  TrainFlags train;
  auto* cmd_train = app.add_subcommand("train", "fit a capacity-sorted network sequence");
  cmd_train->add_option("--shape", train.shape,
                        "reference shape (sphere|sphere_unit|torus|box|blend or spec)");
  cmd_train->add_option("--archs", train.archs, "comma list of WxK architectures, coarse first");
  cmd_train->add_option("--seed", train.seed, "rng seed");
  cmd_train->add_option("--epochs", train.epochs, "training epochs");
  cmd_train->add_option("--epochs-list", train.epochs_list, "per-architecture epoch override");
  cmd_train->add_option("--lr", train.lr, "initial learning rate");
  cmd_train->add_option("--omega0", train.omega0, "sine frequency");
  cmd_train->add_option("--uniform", train.n_uniform, "uniform training samples");
  cmd_train->add_option("--surface", train.n_surface, "near-surface training samples");
  cmd_train->add_option("--sigma", train.sigma, "surface sample offset sigma");
  cmd_train->add_option("--sup-uniform", train.sup_uniform, "uniform samples for deviation bounds");
  cmd_train->add_option("--sup-surface", train.sup_surface, "surface samples for deviation bounds");
  cmd_train->add_option("--verify-samples", train.verify_samples, "certification sample count");
  cmd_train->add_option("--domain-half", train.domain_half, "half extent of the training box");
  cmd_train->add_option("--out-dir", train.out_dir, "output directory");
  cmd_train->add_option("--name", train.name, "output name prefix (defaults to the shape)");

  RenderFlags render;
  auto* cmd_render = app.add_subcommand("render", "render a manifest");
  cmd_render->add_option("--manifest", render.manifest, "sequence manifest (.nest)");
  cmd_render->add_option("--budgets", render.budgets, "per-level iteration budgets, e.g. 30,30");
  cmd_render->add_option("--normals", render.normals, "own | mapped");
  cmd_render->add_option("--fine", render.fine, "field index for mapped normals (-1 = finest)");
  cmd_render->add_option("--eps-stop", render.eps_stop, "stopping tolerance");
  cmd_render->add_option("--t-max", render.t_max, "far clip");
  cmd_render->add_option("--time-steps", render.time_steps, "frame count for animated manifests");
  cmd_render->add_option("--time", render.time, "time for a single animated frame");
  cmd_render->add_option("--out", render.out, "output image (.ppm or .png)");
  render.camera.attach(cmd_render);

  BenchFlags bench;
  auto* cmd_bench = app.add_subcommand("bench", "timing/fidelity matrix, CSV output");
  cmd_bench->add_option("--manifest", bench.manifest, "sequence manifest (.nest)");
  cmd_bench->add_option("--row", bench.rows,
                        "row spec: nets=64x1,256x3;iters=30,10;normals=own|mapped[;baseline]");
  cmd_bench->add_option("--repeats", bench.repeats, "renders per row (time is the mean)");
  cmd_bench->add_option("--eps-stop", bench.eps_stop, "stopping tolerance");
  cmd_bench->add_option("--out", bench.out, "output CSV path");
  bench.camera.attach(cmd_bench);

  NestFlags nest;
  auto* cmd_nest = app.add_subcommand("nest", "derive thresholds and certify nesting");
  cmd_nest->add_option("--fields", nest.fields_arg,
                       "comma list of members, coarse first (.sdfnet files or analytic specs)");
  cmd_nest->add_option("--prop", nest.prop, "threshold recurrence: 1, 2 or 3");
  cmd_nest->add_option("--eps", nest.eps_arg, "explicit deviation bounds");
  cmd_nest->add_option("--oracle", nest.oracle, "reference shape for measured bounds (prop 2)");
  cmd_nest->add_option("--approx", nest.approx, "approximation error (prop 3)");
  cmd_nest->add_option("--samples", nest.samples, "verification sample count");
  cmd_nest->add_option("--seed", nest.seed, "verification seed");
  cmd_nest->add_option("--scale-delta1", nest.scale_delta1, "scale the first threshold");
  cmd_nest->add_flag("--allow-violations", nest.allow_violations,
                     "exit 0 even when violations are found");
  cmd_nest->add_option("--out", nest.out, "write the certified manifest here");

  MapNormalsFlags map_normals;
  auto* cmd_map = app.add_subcommand("map-normals", "replace mesh normals with a field's");
  cmd_map->add_option("--mesh", map_normals.mesh, "input OBJ");
  cmd_map->add_option("--fine", map_normals.fine, "fine field (.sdfnet or analytic spec)");
  cmd_map->add_option("--delta", map_normals.delta, "neighborhood threshold");
  cmd_map->add_option("--out", map_normals.out, "output OBJ");

  app.set_config("--config", "", "read options from a key = value file");
  for (auto* sub : {cmd_train, cmd_render, cmd_bench, cmd_nest, cmd_map})
    sub->set_config("--config", "", "read options from a key = value file");

  try {
    app.parse(argc, argv);
    if (cmd_train->parsed()) return run_train(train);
    if (cmd_render->parsed()) return run_render(render);
    if (cmd_bench->parsed()) return run_bench(bench);
    if (cmd_nest->parsed()) return run_nest(nest);
    if (cmd_map->parsed()) return run_map_normals(map_normals);
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
