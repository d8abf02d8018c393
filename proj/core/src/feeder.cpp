#include "dervolt/feeder.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dervolt {

using nlohmann::json;

LineParameters LineParameters::from_rx(Eigen::VectorXd r, Eigen::VectorXd x) {
  LineParameters params;
  params.alpha = r.array() / x.array();
  params.r = std::move(r);
  params.x = std::move(x);
  params.validate();
  return params;
}

void LineParameters::validate() const {
  if (r.size() != x.size() || alpha.size() != x.size()) {
    throw FeederError("line parameter vectors disagree in length");
  }
  for (int l = 0; l < count(); ++l) {
    if (!(x[l] > 0.0) || !std::isfinite(x[l])) {
      throw FeederError("non-positive reactance on line " + std::to_string(l + 1));
    }
    if (!(r[l] >= 0.0) || !std::isfinite(r[l])) {
      throw FeederError("negative resistance on line " + std::to_string(l + 1));
    }
    if (std::abs(r[l] - alpha[l] * x[l]) >
        1e-12 * std::max(1.0, std::abs(r[l]))) {
      throw FeederError("r = alpha*x violated on line " + std::to_string(l + 1));
    }
  }
}

DerFleet DerFleet::none(int bus_count) {
  DerFleet fleet;
  fleet.p_min = Eigen::VectorXd::Zero(bus_count);
  fleet.p_max = Eigen::VectorXd::Zero(bus_count);
  fleet.q_min = Eigen::VectorXd::Zero(bus_count);
  fleet.q_max = Eigen::VectorXd::Zero(bus_count);
  return fleet;
}

void DerFleet::validate() const {
  if (p_min.size() != p_max.size() || q_min.size() != q_max.size() ||
      p_min.size() != q_min.size()) {
    throw FeederError("DER bound vectors disagree in length");
  }
  if ((p_min.array() > p_max.array()).any() ||
      (q_min.array() > q_max.array()).any()) {
    throw FeederError("DER lower bound exceeds upper bound");
  }
}

void LoadProfile::validate() const {
  if (p.size() != q.size()) {
    throw FeederError("load vectors disagree in length");
  }
  if (!p.allFinite() || !q.allFinite()) {
    throw FeederError("non-finite load entry");
  }
  if ((p.array() < 0.0).any() || (q.array() < 0.0).any()) {
    throw FeederError("negative nominal load");
  }
}

FeederTopology::FeederTopology(int bus_count,
                               std::vector<std::pair<int, int>> lines)
    : bus_count_(bus_count), lines_(std::move(lines)) {
  const int n = bus_count_;
  const int l_count = static_cast<int>(lines_.size());
  if (n < 1) {
    throw FeederError("feeder needs at least one non-substation bus");
  }
  if (l_count != n) {
    throw FeederError("not radial: " + std::to_string(l_count) + " lines for " +
                      std::to_string(n) + " buses");
  }

  // Every non-root bus must receive exactly one line, and walking parents
  // must reach the substation: that is radiality plus orientation away from
  // the root in one check.
  std::vector<int> parent(n + 1, -1), incoming(n + 1, -1);
  for (int l = 0; l < l_count; ++l) {
    auto [from, to] = lines_[l];
    if (from < 0 || from > n || to < 1 || to > n) {
      throw FeederError("line " + std::to_string(l + 1) + " references bus outside 0.." +
                        std::to_string(n));
    }
    if (from == to) {
      throw FeederError("self-loop at bus " + std::to_string(to));
    }
    if (incoming[to] != -1) {
      throw FeederError("bus " + std::to_string(to) + " has two incoming lines");
    }
    parent[to] = from;
    incoming[to] = l;
  }
  paths_.assign(n, {});
  for (int i = 1; i <= n; ++i) {
    std::vector<int> path;
    int node = i;
    while (node != 0) {
      if (parent[node] == -1) {
        throw FeederError("bus " + std::to_string(node) + " is disconnected from the substation");
      }
      path.push_back(incoming[node]);
      node = parent[node];
      if (static_cast<int>(path.size()) > n) {
        throw FeederError("cycle detected through bus " + std::to_string(i));
      }
    }
    std::reverse(path.begin(), path.end());
    paths_[i - 1] = std::move(path);
  }

  incidence_ = Eigen::MatrixXd::Zero(n, l_count);
  for (int l = 0; l < l_count; ++l) {
    auto [from, to] = lines_[l];
    if (from >= 1) {
      incidence_(from - 1, l) = 1.0;
    }
    incidence_(to - 1, l) = -1.0;
  }
  inverse_ = invert_incidence(*this);
}

int FeederTopology::line_between(int from, int to) const {
  for (int l = 0; l < line_count(); ++l) {
    if (lines_[l].first == from && lines_[l].second == to) {
      return l;
    }
  }
  throw FeederError("no line (" + std::to_string(from) + ", " + std::to_string(to) + ")");
}

Eigen::VectorXd FeederTopology::line_flows(const Eigen::VectorXd& net_injection) const {
  if (net_injection.size() != bus_count_) {
    throw std::invalid_argument("injection vector has wrong length");
  }
  return inverse_ * net_injection;
}

Eigen::MatrixXd invert_incidence(const FeederTopology& topology) {
  const Eigen::MatrixXd& m = topology.incidence();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  // PartialPivLU has no rank query; check the residual instead.
  Eigen::MatrixXd inverse = lu.inverse();
  const int n = topology.bus_count();
  double residual =
      (m * inverse - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!std::isfinite(residual) || residual > 1e-10) {
    throw FeederError("incidence matrix is singular (non-radial feeder)");
  }
  return inverse;
}

namespace {

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FeederError("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FeederError("parse failure in " + path.string() + ": " + e.what());
  }
}

}  // namespace

FeederModel load_feeder(const std::filesystem::path& path) {
  json doc = parse_file(path);
  try {
    const auto& jbuses = doc.at("buses");
    const auto& jlines = doc.at("lines");
    const int n = static_cast<int>(jbuses.size());

    LoadProfile loads;
    loads.p = Eigen::VectorXd::Zero(n);
    loads.q = Eigen::VectorXd::Zero(n);
    std::vector<bool> seen(n + 1, false);
    for (const auto& jb : jbuses) {
      int id = jb.at("id").get<int>();
      if (id < 1 || id > n) {
        throw FeederError("bus id " + std::to_string(id) + " outside 1.." + std::to_string(n));
      }
      if (seen[id]) {
        throw FeederError("duplicate bus id " + std::to_string(id));
      }
      seen[id] = true;
      loads.p[id - 1] = jb.at("p_d0").get<double>();
      loads.q[id - 1] = jb.at("q_d0").get<double>();
    }
    loads.validate();

    std::vector<std::pair<int, int>> ends;
    Eigen::VectorXd r(jlines.size()), x(jlines.size());
    int idx = 0;
    for (const auto& jl : jlines) {
      ends.emplace_back(jl.at("from").get<int>(), jl.at("to").get<int>());
      r[idx] = jl.at("r_pu").get<double>();
      x[idx] = jl.at("x_pu").get<double>();
      ++idx;
    }
    FeederTopology topology(n, std::move(ends));
    LineParameters params = LineParameters::from_rx(std::move(r), std::move(x));

    DerFleet ders = DerFleet::none(n);
    if (doc.contains("ders")) {
      for (const auto& jd : doc["ders"]) {
        int bus = jd.at("bus").get<int>();
        if (bus < 1 || bus > n) {
          throw FeederError("DER at unknown bus " + std::to_string(bus));
        }
        ders.p_min[bus - 1] = jd.at("p_min").get<double>();
        ders.p_max[bus - 1] = jd.at("p_max").get<double>();
        ders.q_min[bus - 1] = jd.at("q_min").get<double>();
        ders.q_max[bus - 1] = jd.at("q_max").get<double>();
      }
    }
    ders.validate();

    FeederModel model{std::move(topology), std::move(params),
                      std::move(loads),    std::move(ders),
                      "",                  0.0,
                      0.0};
    if (doc.contains("meta")) {
      const auto& meta = doc["meta"];
      model.name = meta.value("name", "");
      model.v_base_kv = meta.value("v_base_kv", 0.0);
      model.s_base_mva = meta.value("s_base_mva", 0.0);
    }
    return model;
  } catch (const json::exception& e) {
    throw FeederError("malformed feeder file " + path.string() + ": " + e.what());
  }
}

void save_feeder(const FeederModel& model, const std::filesystem::path& path) {
  json doc;
  doc["meta"] = {{"name", model.name},
                 {"v_base_kv", model.v_base_kv},
                 {"s_base_mva", model.s_base_mva}};
  json jbuses = json::array();
  for (int i = 1; i <= model.topology.bus_count(); ++i) {
    jbuses.push_back({{"id", i},
                      {"p_d0", model.loads.p[i - 1]},
                      {"q_d0", model.loads.q[i - 1]}});
  }
  doc["buses"] = std::move(jbuses);

  // canonical order: by (from, to)
  std::vector<int> order(model.topology.line_count());
  for (int l = 0; l < model.topology.line_count(); ++l) order[l] = l;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return model.topology.line(a) < model.topology.line(b);
  });
  json jlines = json::array();
  int id = 1;
  for (int l : order) {
    auto [from, to] = model.topology.line(l);
    jlines.push_back({{"id", id++},
                      {"from", from},
                      {"to", to},
                      {"r_pu", model.params.r[l]},
                      {"x_pu", model.params.x[l]}});
  }
  doc["lines"] = std::move(jlines);

  json jders = json::array();
  for (int i = 1; i <= model.topology.bus_count(); ++i) {
    const int k = i - 1;
    if (model.ders.p_min[k] != 0.0 || model.ders.p_max[k] != 0.0 ||
        model.ders.q_min[k] != 0.0 || model.ders.q_max[k] != 0.0) {
      jders.push_back({{"bus", i},
                       {"p_min", model.ders.p_min[k]},
                       {"p_max", model.ders.p_max[k]},
                       {"q_min", model.ders.q_min[k]},
                       {"q_max", model.ders.q_max[k]}});
    }
  }
  doc["ders"] = std::move(jders);

  std::ofstream out(path);
  if (!out) {
    throw FeederError("cannot write " + path.string());
  }
  out << doc.dump(2) << "\n";
}

}  // namespace dervolt
