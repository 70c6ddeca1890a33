#include "freqctl/network.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace freqctl {

namespace {

using nlohmann::json;

void require_positive(const Vector& v, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] <= 0.0) {
      std::ostringstream msg;
      msg << name << "[" << i << "] <= 0";
      throw ValidationError(msg.str());
    }
  }
}

Vector vector_from_json(const json& j, const char* key, std::size_t expected) {
  if (!j.contains(key)) throw ParseError(std::string("missing key \"") + key + "\"");
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw ParseError(std::string("\"") + key + "\" must be an array");
  if (arr.size() != expected) {
    std::ostringstream msg;
    msg << "\"" << key << "\" has " << arr.size() << " entries, expected " << expected;
    throw ParseError(msg.str());
  }
  Vector v(static_cast<Eigen::Index>(expected));
  for (std::size_t i = 0; i < expected; ++i) {
    if (!arr[i].is_number()) throw ParseError(std::string("\"") + key + "\" entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

bool is_connected(std::size_t n_buses, const std::vector<Edge>& edges) {
  if (n_buses == 0) return false;
  std::vector<std::size_t> parent(n_buses);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n_buses;
  for (const auto& e : edges) {
    auto a = find(e.from), b = find(e.to);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

NetworkModel::NetworkModel(std::size_t n_buses, std::vector<Edge> edges, Vector inertia,
                           Vector damping, Vector susceptance)
    : n_(n_buses),
      edges_(std::move(edges)),
      m_(std::move(inertia)),
      d_(std::move(damping)),
      b_(std::move(susceptance)) {
  if (n_ == 0) throw ValidationError("network has no buses");
  if (static_cast<std::size_t>(m_.size()) != n_ || static_cast<std::size_t>(d_.size()) != n_)
    throw ValidationError("M and D must have one entry per bus");
  if (static_cast<std::size_t>(b_.size()) != edges_.size())
    throw ValidationError("B must have one entry per edge");
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    if (edge.from >= n_ || edge.to >= n_) {
      std::ostringstream msg;
      msg << "edge " << e + 1 << " references a bus outside 1.." << n_;
      throw ValidationError(msg.str());
    }
    if (edge.from == edge.to) {
      std::ostringstream msg;
      msg << "edge " << e + 1 << " is a self-loop";
      throw ValidationError(msg.str());
    }
  }
  require_positive(m_, "M");
  require_positive(d_, "D");
  require_positive(b_, "B");
  if (!is_connected(n_, edges_)) throw ValidationError("graph disconnected");
}

Matrix NetworkModel::incidence() const {
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(edges_.size()));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    c(static_cast<Eigen::Index>(edges_[e].from), static_cast<Eigen::Index>(e)) = 1.0;
    c(static_cast<Eigen::Index>(edges_[e].to), static_cast<Eigen::Index>(e)) = -1.0;
  }
  return c;
}

Matrix NetworkModel::laplacian() const { return laplacian(b_); }

Matrix NetworkModel::laplacian(const Vector& edge_weights) const {
  const auto n = static_cast<Eigen::Index>(n_);
  Matrix l = Matrix::Zero(n, n);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto i = static_cast<Eigen::Index>(edges_[e].from);
    const auto j = static_cast<Eigen::Index>(edges_[e].to);
    const double w = edge_weights[static_cast<Eigen::Index>(e)];
    l(i, i) += w;
    l(j, j) += w;
    l(i, j) -= w;
    l(j, i) -= w;
  }
  return l;
}

Vector NetworkModel::apply_incidence(const Vector& edge_values) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const double x = edge_values[static_cast<Eigen::Index>(e)];
    out[static_cast<Eigen::Index>(edges_[e].from)] += x;
    out[static_cast<Eigen::Index>(edges_[e].to)] -= x;
  }
  return out;
}

Vector NetworkModel::apply_incidence_transpose(const Vector& bus_values) const {
  Vector out(static_cast<Eigen::Index>(edges_.size()));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    out[static_cast<Eigen::Index>(e)] = bus_values[static_cast<Eigen::Index>(edges_[e].from)] -
                                        bus_values[static_cast<Eigen::Index>(edges_[e].to)];
  }
  return out;
}

void validate_disturbance(const NetworkModel& model, const Disturbance& dist) {
  if (static_cast<std::size_t>(dist.p.size()) != model.n_buses())
    throw ValidationError("disturbance dimension does not match bus count");
  for (Eigen::Index i = 0; i < dist.p.size(); ++i) {
    if (!std::isfinite(dist.p[i])) {
      std::ostringstream msg;
      msg << "p[" << i << "] is not finite";
      throw ValidationError(msg.str());
    }
  }
}

NetworkModel network_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("network file: ") + err.what());
  }
  if (!j.is_object()) throw ParseError("network file must hold a JSON object");
  if (!j.contains("buses") || !j.at("buses").is_number_integer())
    throw ParseError("missing integer key \"buses\"");
  const auto n_raw = j.at("buses").get<long long>();
  if (n_raw <= 0) throw ValidationError("buses must be positive");
  const auto n = static_cast<std::size_t>(n_raw);

  if (!j.contains("edges") || !j.at("edges").is_array()) throw ParseError("missing array \"edges\"");
  std::vector<Edge> edges;
  for (const auto& pair : j.at("edges")) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
        !pair[1].is_number_integer())
      throw ParseError("each edge must be a pair of integer bus numbers");
    const auto i = pair[0].get<long long>();
    const auto k = pair[1].get<long long>();
    if (i < 1 || k < 1 || static_cast<std::size_t>(i) > n || static_cast<std::size_t>(k) > n) {
      std::ostringstream msg;
      msg << "edge (" << i << "," << k << ") references a bus outside 1.." << n;
      throw ValidationError(msg.str());
    }
    edges.push_back({static_cast<std::size_t>(i - 1), static_cast<std::size_t>(k - 1)});
  }
  Vector m = vector_from_json(j, "M", n);
  Vector d = vector_from_json(j, "D", n);
  Vector b = vector_from_json(j, "B", edges.size());
  return NetworkModel(n, std::move(edges), std::move(m), std::move(d), std::move(b));
}

NetworkModel load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("network file not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return network_from_json_text(buf.str());
}

std::string network_to_json_text(const NetworkModel& model) {
  json j;
  j["buses"] = model.n_buses();
  j["edges"] = json::array();
  for (const auto& e : model.edges()) j["edges"].push_back({e.from + 1, e.to + 1});
  auto to_array = [](const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  j["M"] = to_array(model.inertia());
  j["D"] = to_array(model.damping());
  j["B"] = to_array(model.susceptance());
  return j.dump(2);
}

NetworkModel toy3() {
  std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 0}};
  Vector m(3), d(3), b(3);
  m << 4.0, 4.8, 3.2;
  d << 1.0, 1.2, 0.8;
  b << 1.0, 0.75, 0.9;
  return NetworkModel(3, std::move(edges), std::move(m), std::move(d), std::move(b));
}

}  // namespace freqctl
