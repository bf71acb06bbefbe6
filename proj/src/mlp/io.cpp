#include <fstream>

#include <json.hpp>

#include "nsdf/mlp/mlp.hpp"

// Weight file format (.sdfnet): a JSON object with fields activation, omega0,
// input_dim and layers[{rows, cols, weights_flat, bias}]. Numbers are written
// as shortest round-trip decimals, so save/load is bit-exact.

namespace nsdf::mlp {

using nlohmann::json;

void save_params(const MlpParams<double>& params, const std::filesystem::path& destination) {
  params.validate();
  json j;
  j["activation"] = tensor::activation_name(params.activation);
  j["omega0"] = params.activation.omega0;
  j["input_dim"] = params.input_dim;
  json layers = json::array();
  for (const auto& l : params.layers) {
    json jl;
    jl["rows"] = l.weights.rows();
    jl["cols"] = l.weights.cols();
    jl["weights_flat"] = l.weights.storage();
    jl["bias"] = l.bias.storage();
    layers.push_back(std::move(jl));
  }
  j["layers"] = std::move(layers);

  std::ofstream out(destination);
  if (!out)
    throw Error(ErrorKind::validation, "cannot write weight file " + destination.string());
  out << j.dump(1) << "\n";
}

MlpParams<double> load_params(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in)
    throw Error(ErrorKind::parse, "cannot open weight file " + source.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, "malformed weight file " + source.string() + ": " + e.what());
  }

  MlpParams<double> params;
  try {
    params.activation =
        tensor::parse_activation(j.at("activation").get<std::string>(), j.at("omega0").get<double>());
    params.input_dim = j.at("input_dim").get<int>();
    const json& layers = j.at("layers");
    for (size_t i = 0; i < layers.size(); ++i) {
      const json& jl = layers[i];
      try {
        int rows = jl.at("rows").get<int>();
        int cols = jl.at("cols").get<int>();
        auto weights = jl.at("weights_flat").get<std::vector<double>>();
        auto bias = jl.at("bias").get<std::vector<double>>();
        if (weights.size() != size_t(rows) * cols || bias.size() != size_t(rows))
          throw Error(ErrorKind::parse,
                      "layer " + std::to_string(i) + " of " + source.string() +
                          " has inconsistent weight or bias length");
        params.layers.push_back(
            {Matrix<double>(rows, cols, std::move(weights)), Matrix<double>(rows, 1, std::move(bias))});
      } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, "layer " + std::to_string(i) + " of " + source.string() +
                                          " is malformed: " + e.what());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "weight file " + source.string() + " is malformed: " + e.what());
  }
  params.validate();
  return params;
}

}  // namespace nsdf::mlp
