#include <fstream>

#include <json.hpp>

#include "nsdf/fields/nesting.hpp"

// Manifest files (.nest) list the sequence members coarse to fine, their
// thresholds, and how the thresholds were produced. Weight paths are stored
// relative to the manifest and resolved on load.

namespace nsdf::fields {

using nlohmann::json;

namespace {

json source_to_json(const FieldSource& s) {
  json j;
  if (s.kind == FieldSource::Kind::weights) {
    j["weights"] = s.weights_path;
  } else {
    j["analytic"] = s.analytic.name;
    if (!s.analytic.params.empty()) j["params"] = s.analytic.params;
  }
  return j;
}

FieldSource source_from_json(const json& j) {
  FieldSource s;
  if (j.contains("weights")) {
    s.kind = FieldSource::Kind::weights;
    s.weights_path = j.at("weights").get<std::string>();
  } else if (j.contains("analytic")) {
    s.kind = FieldSource::Kind::analytic;
    s.analytic.name = j.at("analytic").get<std::string>();
    if (j.contains("params"))
      s.analytic.params = j.at("params").get<std::map<std::string, double>>();
  } else {
    throw Error(ErrorKind::parse, "manifest field entry has neither 'weights' nor 'analytic'");
  }
  return s;
}

json provenance_to_json(const SequenceProvenance& p) {
  json j;
  j["proposition"] = p.proposition;
  j["eps"] = p.eps;
  j["margin"] = p.margin;
  j["sampler_seed"] = p.sampler_seed;
  j["n_uniform"] = p.n_uniform;
  j["n_surface"] = p.n_surface;
  j["verify_samples"] = p.verify_samples;
  j["verify_violations"] = p.verify_violations;
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

SequenceProvenance provenance_from_json(const json& j) {
  SequenceProvenance p;
  p.proposition = j.value("proposition", 0);
  p.eps = j.value("eps", std::vector<double>{});
  p.margin = j.value("margin", 0.0);
  p.sampler_seed = j.value("sampler_seed", uint64_t(0));
  p.n_uniform = j.value("n_uniform", size_t(0));
  p.n_surface = j.value("n_surface", size_t(0));
  p.verify_samples = j.value("verify_samples", size_t(0));
  p.verify_violations = j.value("verify_violations", size_t(0));
  p.note = j.value("note", std::string());
  return p;
}

template <typename Seq>
json sequence_to_json(const Seq& seq, bool time_dependent) {
  json j;
  j["time_dependent"] = time_dependent;
  j["deltas"] = seq.deltas;
  json fields = json::array();
  for (const auto& e : seq.entries) {
    json fe = source_to_json(e.source);
    if (!e.label.empty()) fe["label"] = e.label;
    fields.push_back(std::move(fe));
  }
  j["fields"] = std::move(fields);
  j["provenance"] = provenance_to_json(seq.provenance);
  return j;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::validation, "cannot write manifest " + path.string());
  out << j.dump(1) << "\n";
}

}  // namespace

void save_manifest(const NestedSequence& seq, const std::filesystem::path& path) {
  seq.validate();
  write_json(sequence_to_json(seq, false), path);
}

void save_manifest(const AnimatedSequence& seq, const std::filesystem::path& path) {
  seq.validate();
  write_json(sequence_to_json(seq, true), path);
}

SequenceManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, "malformed manifest " + path.string() + ": " + e.what());
  }

  SequenceManifest manifest;
  try {
    manifest.time_dependent = j.value("time_dependent", false);
    auto deltas = j.at("deltas").get<std::vector<double>>();
    auto prov = provenance_from_json(j.value("provenance", json::object()));
    const json& fields = j.at("fields");
    if (fields.size() != deltas.size())
      throw Error(ErrorKind::validation,
                  "manifest " + path.string() + " lists " + std::to_string(fields.size()) +
                      " fields but " + std::to_string(deltas.size()) + " thresholds");

    auto base_dir = path.parent_path();
    for (const auto& fe : fields) {
      FieldSource source = source_from_json(fe);
      std::string label = fe.value("label", std::string());
      if (manifest.time_dependent) {
        AnimatedSequence::Entry entry;
        entry.source = source;
        entry.label = label;
        if (source.kind == FieldSource::Kind::weights) {
          auto params = mlp::load_params(base_dir / source.weights_path);
          if (params.input_dim != 4)
            throw Error(ErrorKind::validation,
                        "manifest " + path.string() + " is time-dependent but " +
                            source.weights_path + " is not a 4-input network");
          entry.param_count = params.parameter_count();
          entry.field = std::make_shared<NeuralTimeField>(std::move(params));
        } else {
          entry.field = make_analytic_time_field(source.analytic);
        }
        manifest.animated.entries.push_back(std::move(entry));
      } else {
        SequenceEntry entry;
        entry.source = source;
        entry.label = label;
        if (source.kind == FieldSource::Kind::weights) {
          auto params = mlp::load_params(base_dir / source.weights_path);
          if (params.input_dim != 3)
            throw Error(ErrorKind::validation, "manifest " + path.string() + " is static but " +
                                                   source.weights_path +
                                                   " is not a 3-input network");
          entry.param_count = params.parameter_count();
          entry.field = std::make_shared<NeuralField>(std::move(params));
        } else {
          entry.field = make_analytic_field(source.analytic);
        }
        manifest.sequence.entries.push_back(std::move(entry));
      }
    }
    if (manifest.time_dependent) {
      manifest.animated.deltas = deltas;
      manifest.animated.provenance = prov;
      manifest.animated.validate();
    } else {
      manifest.sequence.deltas = deltas;
      manifest.sequence.provenance = prov;
      manifest.sequence.validate();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "manifest " + path.string() + " is malformed: " + e.what());
  }
  return manifest;
}

}  // namespace nsdf::fields
