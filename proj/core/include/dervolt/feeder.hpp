#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dervolt {

/// Raised on malformed feeder files or structural validation failures.
class FeederError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-line series impedances. Invariant: x > 0, r >= 0, r = alpha .* x.
struct LineParameters {
  Eigen::VectorXd r;
  Eigen::VectorXd x;
  Eigen::VectorXd alpha;  // R-to-X ratio, assumed known and fixed

  static LineParameters from_rx(Eigen::VectorXd r, Eigen::VectorXd x);

  int count() const { return static_cast<int>(x.size()); }
  void validate() const;
};

/// Per-bus DER capability box. Buses without a DER carry all-zero bounds.
struct DerFleet {
  Eigen::VectorXd p_min;
  Eigen::VectorXd p_max;
  Eigen::VectorXd q_min;
  Eigen::VectorXd q_max;

  static DerFleet none(int bus_count);
  int bus_count() const { return static_cast<int>(p_min.size()); }
  void validate() const;
};

/// Nominal per-bus demand, per-unit.
struct LoadProfile {
  Eigen::VectorXd p;
  Eigen::VectorXd q;

  int bus_count() const { return static_cast<int>(p.size()); }
  void validate() const;
};

/// Directed radial graph rooted at the substation (bus 0), plus the reduced
/// incidence matrix M, its cached inverse, and per-bus root paths.
///
/// Buses are 0..N with 0 the substation; lines are 0-based indices into the
/// construction order. Every line must point away from the root. Immutable
/// after construction and safe to share across threads.
class FeederTopology {
 public:
  FeederTopology(int bus_count, std::vector<std::pair<int, int>> lines);

  int bus_count() const { return bus_count_; }
  int line_count() const { return static_cast<int>(lines_.size()); }

  const std::vector<std::pair<int, int>>& lines() const { return lines_; }
  std::pair<int, int> line(int l) const { return lines_.at(l); }

  /// 0-based index of the line from->to; throws FeederError if absent.
  int line_between(int from, int to) const;

  /// Reduced incidence matrix M (N x L, substation row removed).
  const Eigen::MatrixXd& incidence() const { return incidence_; }
  /// Cached M^{-1}.
  const Eigen::MatrixXd& inverse_incidence() const { return inverse_; }

  /// path_sets()[i-1] lists the lines on the unique path bus 0 -> bus i,
  /// ordered root-first.
  const std::vector<std::vector<int>>& path_sets() const { return paths_; }

  /// Lossless line flows f = M^{-1} p for net active injections p.
  Eigen::VectorXd line_flows(const Eigen::VectorXd& net_injection) const;

 private:
  int bus_count_ = 0;
  std::vector<std::pair<int, int>> lines_;
  Eigen::MatrixXd incidence_;
  Eigen::MatrixXd inverse_;
  std::vector<std::vector<int>> paths_;
};

/// Numeric inverse of the reduced incidence matrix, with the residual
/// contract ||M M^{-1} - I||_inf <= 1e-10 enforced. Throws FeederError on a
/// singular (non-radial) matrix.
Eigen::MatrixXd invert_incidence(const FeederTopology& topology);

/// A fully loaded and validated feeder.
struct FeederModel {
  FeederTopology topology;
  LineParameters params;
  LoadProfile loads;
  DerFleet ders;
  std::string name;
  double v_base_kv = 0.0;
  double s_base_mva = 0.0;
};

/// Parses and validates a feeder file (see data/ieee37.json for the schema).
FeederModel load_feeder(const std::filesystem::path& path);

/// Serializes a feeder in the same schema; load_feeder(save_feeder(m)) is an
/// equivalent model with lines in canonical order.
void save_feeder(const FeederModel& model, const std::filesystem::path& path);

}  // namespace dervolt
