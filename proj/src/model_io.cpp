#include "aracl/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace aracl {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& M) {
  json a = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) a.push_back(M(i, j));
  return a;
}

Eigen::MatrixXd matrix_from_json(const json& a, Eigen::Index rows, Eigen::Index cols) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != rows * cols)
    throw DataError("model file: tensor size mismatch");
  Eigen::MatrixXd M(rows, cols);
  Eigen::Index p = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = a[p++].get<double>();
  return M;
}

json model_to_json(const SoftmaxModel& m) {
  json doc;
  if (std::holds_alternative<MRModel>(m)) {
    const auto& mr = std::get<MRModel>(m);
    doc["architecture"] = {{"type", "mr"}, {"k", mr.k()}, {"d", mr.d()}};
    doc["params"] = {{"W", matrix_to_json(mr.W)},
                     {"b", matrix_to_json(mr.b)},
                     {"l1_strength", mr.l1_strength}};
  } else {
    const auto& p = std::get<MLPModel>(m);
    doc["architecture"] = {
        {"type", "mlp"}, {"k", p.k()}, {"d", p.d()}, {"h", p.h()}, {"activation", "relu"}};
    doc["params"] = {{"W1", matrix_to_json(p.W1)},
                     {"b1", matrix_to_json(p.b1)},
                     {"W2", matrix_to_json(p.W2)},
                     {"b2", matrix_to_json(p.b2)}};
  }
  return doc;
}

SoftmaxModel model_from_json(const json& doc) {
  const auto& arch = doc.at("architecture");
  const std::string type = arch.at("type").get<std::string>();
  const auto& params = doc.at("params");
  if (type == "mr") {
    MRModel mr;
    const int k = arch.at("k").get<int>();
    const int d = arch.at("d").get<int>();
    mr.W = matrix_from_json(params.at("W"), k, d);
    mr.b = matrix_from_json(params.at("b"), k, 1);
    mr.l1_strength = params.value("l1_strength", 0.0);
    return mr;
  }
  if (type == "mlp") {
    MLPModel p;
    const int k = arch.at("k").get<int>();
    const int d = arch.at("d").get<int>();
    const int h = arch.at("h").get<int>();
    p.W1 = matrix_from_json(params.at("W1"), h, d);
    p.b1 = matrix_from_json(params.at("b1"), h, 1);
    p.W2 = matrix_from_json(params.at("W2"), k, h);
    p.b2 = matrix_from_json(params.at("b2"), k, 1);
    return p;
  }
  throw DataError("model file: unknown architecture type '" + type + "'");
}

json parse(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw DataError("model file: malformed JSON");
  return doc;
}

void check_header(const json& doc, const std::string& format) {
  if (doc.value("format", "") != format)
    throw DataError("model file: expected format '" + format + "'");
  if (doc.value("version", 0) != 1)
    throw DataError("model file: unsupported container version");
}

}  // namespace

std::string serialize_model(const SoftmaxModel& m, const std::string& config_hash) {
  json doc = model_to_json(m);
  doc["format"] = "aracl-model";
  doc["version"] = 1;
  doc["config_hash"] = config_hash;
  return doc.dump();
}

SoftmaxModel deserialize_model(const std::string& text) {
  json doc = parse(text);
  check_header(doc, "aracl-model");
  return model_from_json(doc);
}

std::string serialize_particles(const ParticleSet& p, const std::string& config_hash) {
  p.validate();
  json doc;
  doc["format"] = "aracl-particles";
  doc["version"] = 1;
  doc["config_hash"] = config_hash;
  json arr = json::array();
  for (const auto& m : p.particles) arr.push_back(model_to_json(m));
  doc["particles"] = std::move(arr);
  return doc.dump();
}

ParticleSet deserialize_particles(const std::string& text) {
  json doc = parse(text);
  check_header(doc, "aracl-particles");
  ParticleSet p;
  for (const auto& entry : doc.at("particles")) p.particles.push_back(model_from_json(entry));
  p.validate();
  return p;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << text;
}

}  // namespace

void save_model_file(const SoftmaxModel& m, const std::string& path,
                     const std::string& config_hash) {
  write_file(path, serialize_model(m, config_hash));
}

SoftmaxModel load_model_file(const std::string& path) {
  return deserialize_model(read_file(path));
}

void save_particles_file(const ParticleSet& p, const std::string& path,
                         const std::string& config_hash) {
  write_file(path, serialize_particles(p, config_hash));
}

ParticleSet load_particles_file(const std::string& path) {
  return deserialize_particles(read_file(path));
}

bool file_is_particles(const std::string& path) {
  json doc = parse(read_file(path));
  return doc.value("format", "") == "aracl-particles";
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace aracl
