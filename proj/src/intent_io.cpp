#include "teleop/intent.hpp"

#include "teleop/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace teleop::intent {

namespace {

constexpr const char* kModelMagic = "teleop-mlp";
constexpr int kModelVersion = 1;

void write_row(std::ostream& out, const double* v, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) out << (i ? " " : "") << v[i];
  out << '\n';
}

void write_layer(std::ostream& out, const char* tag, const DenseLayer& l) {
  out << tag << ' ' << l.weight.rows() << ' ' << l.weight.cols() << '\n';
  for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
    const Eigen::VectorXd row = l.weight.row(r);
    write_row(out, row.data(), row.size());
  }
  write_row(out, l.bias.data(), l.bias.size());
}

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw InvalidArgument("model file: expected '" + word + "', got '" + got + "'");
}

double read_double(std::istream& in) {
  double v;
  if (!(in >> v)) throw InvalidArgument("model file: truncated numeric data");
  return v;
}

DenseLayer read_layer(std::istream& in, const std::string& tag) {
  expect(in, tag);
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1) throw InvalidArgument("model file: bad layer shape");
  DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) l.weight(r, c) = read_double(in);
  for (Eigen::Index r = 0; r < rows; ++r) l.bias[r] = read_double(in);
  return l;
}

}  // namespace

void write_model(std::ostream& out, const MlpParams& params) {
  params.validate();
  out << std::setprecision(17);
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "activation " << (params.activation == Activation::Relu ? "relu" : "tanh") << '\n';
  out << "inputs " << params.input_mean.size() << '\n';
  out << "mean ";
  write_row(out, params.input_mean.data(), params.input_mean.size());
  out << "scale ";
  write_row(out, params.input_scale.data(), params.input_scale.size());
  out << "seed " << params.seed << '\n';
  out << "final_loss " << params.info.final_loss << '\n';
  out << "epochs " << params.info.epochs << '\n';
  out << "trunk_layers " << params.weights.trunk.size() << '\n';
  for (const auto& l : params.weights.trunk) write_layer(out, "trunk", l);
  write_layer(out, "object", params.weights.object_head);
  write_layer(out, "direction", params.weights.direction_head);
  out << "end\n";
}

MlpParams read_model(std::istream& in) {
  expect(in, kModelMagic);
  int version = 0;
  if (!(in >> version) || version != kModelVersion) throw InvalidArgument("model file: unsupported version");
  MlpParams p;
  expect(in, "activation");
  std::string act;
  in >> act;
  if (act == "relu") p.activation = Activation::Relu;
  else if (act == "tanh") p.activation = Activation::Tanh;
  else throw InvalidArgument("model file: unknown activation '" + act + "'");
  expect(in, "inputs");
  Eigen::Index inputs = 0;
  if (!(in >> inputs) || inputs < 1) throw InvalidArgument("model file: bad input count");
  p.input_mean.resize(inputs);
  p.input_scale.resize(inputs);
  expect(in, "mean");
  for (Eigen::Index i = 0; i < inputs; ++i) p.input_mean[i] = read_double(in);
  expect(in, "scale");
  for (Eigen::Index i = 0; i < inputs; ++i) p.input_scale[i] = read_double(in);
  expect(in, "seed");
  in >> p.seed;
  expect(in, "final_loss");
  p.info.final_loss = read_double(in);
  expect(in, "epochs");
  in >> p.info.epochs;
  expect(in, "trunk_layers");
  std::size_t layers = 0;
  if (!(in >> layers)) throw InvalidArgument("model file: bad layer count");
  for (std::size_t i = 0; i < layers; ++i) p.weights.trunk.push_back(read_layer(in, "trunk"));
  p.weights.object_head = read_layer(in, "object");
  p.weights.direction_head = read_layer(in, "direction");
  expect(in, "end");
  p.validate();
  return p;
}

void save_model(const std::string& path, const MlpParams& params) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write model file '" + path + "'");
  write_model(out, params);
}

MlpParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open model file '" + path + "'");
  try {
    return read_model(in);
  } catch (const std::invalid_argument& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

std::string trajectory_to_line(const LabeledTrajectory& traj) {
  nlohmann::json j;
  j["id"] = traj.id;
  j["target_object"] = traj.target_object;
  j["grasp_direction"] = scene::to_string(traj.grasp_direction);
  j["rate"] = traj.rate;
  j["duration"] = traj.duration;
  auto objects = nlohmann::json::array();
  for (const auto& p : traj.object_positions) objects.push_back({p.x(), p.y(), p.z()});
  j["objects"] = std::move(objects);
  auto steps = nlohmann::json::array();
  for (const auto& s : traj.states) {
    steps.push_back({s.timestamp, s.position.x(), s.position.y(), s.position.z(), s.direction.x(), s.direction.y(),
                     s.direction.z(), s.palm_normal.x(), s.palm_normal.y(), s.palm_normal.z(), s.y_rotation});
  }
  j["steps"] = std::move(steps);
  return j.dump();
}

LabeledTrajectory trajectory_from_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  LabeledTrajectory t;
  t.id = j.at("id").get<std::string>();
  t.target_object = j.at("target_object").get<int>();
  t.grasp_direction = scene::parse_direction(j.at("grasp_direction").get<std::string>());
  t.rate = j.at("rate").get<double>();
  t.duration = j.at("duration").get<double>();
  for (const auto& o : j.at("objects")) t.object_positions.emplace_back(o.at(0), o.at(1), o.at(2));
  for (const auto& s : j.at("steps")) {
    if (s.size() != 11) throw InvalidArgument("trajectory step must have 11 fields");
    HandState h;
    h.timestamp = s[0];
    h.position = Vec3(s[1], s[2], s[3]);
    h.direction = Vec3(s[4], s[5], s[6]);
    h.palm_normal = Vec3(s[7], s[8], s[9]);
    h.y_rotation = s[10];
    t.states.push_back(h);
  }
  t.validate(static_cast<int>(t.object_positions.size()));
  return t;
}

void write_dataset(std::ostream& out, const std::vector<LabeledTrajectory>& dataset) {
  for (const auto& t : dataset) out << trajectory_to_line(t) << '\n';
}

std::vector<LabeledTrajectory> read_dataset(std::istream& in, const std::string& source) {
  std::vector<LabeledTrajectory> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(trajectory_from_line(line));
    } catch (const std::exception& e) {
      throw ConfigError(e.what(), source, line_no);
    }
  }
  return out;
}

void save_dataset(const std::string& path, const std::vector<LabeledTrajectory>& dataset) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write dataset '" + path + "'");
  write_dataset(out, dataset);
}

std::vector<LabeledTrajectory> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset", path);
  return read_dataset(in, path);
}

}  // namespace teleop::intent
