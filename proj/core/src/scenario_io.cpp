#include "dervolt/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dervolt {

using nlohmann::json;

namespace {

json config_to_json_obj(const ScenarioConfig& config) {
  json doc;
  doc["feeder"] = config.feeder_path.string();
  doc["horizon"] = config.horizon;
  doc["window"] = config.window;
  doc["gamma"] = config.gamma;
  doc["v_lo"] = config.v_lo;
  doc["v_hi"] = config.v_hi;
  doc["control_band_margin"] = config.control_band_margin;
  doc["sigma_d"] = config.sigma_d;
  doc["sigma_m"] = config.sigma_m;
  doc["seed"] = config.seed;
  doc["mode"] = to_string(config.mode);
  doc["estimate_every"] = config.estimate_every;
  doc["initial_guess_rel_error"] = config.initial_guess_rel_error;
  json events = json::array();
  for (const auto& event : config.events) {
    events.push_back({{"step", event.step},
                      {"line", {event.from_bus, event.to_bus}},
                      {"factor", event.factor},
                      {"preserve_alpha", event.preserve_alpha}});
  }
  doc["events"] = std::move(events);
  if (std::isfinite(config.f_max)) {
    doc["f_max"] = config.f_max;
  }
  doc["u0"] = config.u0;
  return doc;
}

ScenarioConfig config_from_json_obj(const json& doc,
                                    const std::filesystem::path& base_dir) {
  ScenarioConfig config;
  std::filesystem::path feeder = doc.at("feeder").get<std::string>();
  config.feeder_path =
      feeder.is_absolute() || base_dir.empty() ? feeder : base_dir / feeder;
  config.horizon = doc.value("horizon", config.horizon);
  config.window = doc.value("window", config.window);
  config.gamma = doc.value("gamma", config.gamma);
  config.v_lo = doc.value("v_lo", config.v_lo);
  config.v_hi = doc.value("v_hi", config.v_hi);
  config.control_band_margin =
      doc.value("control_band_margin", config.control_band_margin);
  config.sigma_d = doc.value("sigma_d", config.sigma_d);
  config.sigma_m = doc.value("sigma_m", config.sigma_m);
  config.seed = doc.value("seed", config.seed);
  config.mode = controller_mode_from_string(
      doc.value("mode", std::string("estimated-model")));
  config.estimate_every = doc.value("estimate_every", config.estimate_every);
  config.initial_guess_rel_error =
      doc.value("initial_guess_rel_error", config.initial_guess_rel_error);
  if (doc.contains("events")) {
    for (const auto& je : doc["events"]) {
      PerturbationEvent event;
      event.step = je.at("step").get<std::int64_t>();
      event.from_bus = je.at("line").at(0).get<int>();
      event.to_bus = je.at("line").at(1).get<int>();
      event.factor = je.value("factor", 1.0);
      event.preserve_alpha = je.value("preserve_alpha", true);
      config.events.push_back(event);
    }
  }
  if (doc.contains("f_max")) {
    config.f_max = doc["f_max"].get<double>();
  }
  config.u0 = doc.value("u0", config.u0);
  config.validate();
  return config;
}

void write_vector_block(std::ostream& out, const Eigen::VectorXd& v) {
  for (int i = 0; i < v.size(); ++i) {
    out << ',' << v[i];
  }
}

}  // namespace

std::string scenario_to_json(const ScenarioConfig& config) {
  return config_to_json_obj(config).dump();
}

ScenarioConfig scenario_from_json(const std::string& text,
                                  const std::filesystem::path& base_dir) {
  return config_from_json_obj(json::parse(text), base_dir);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scenario file " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("parse failure in " + path.string() + ": " +
                             e.what());
  }
  return config_from_json_obj(doc, path.parent_path());
}

void write_trace_csv(const SimulationTrace& trace,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << std::setprecision(17);
  out << "# dervolt-trace v1\n";
  out << "# config " << scenario_to_json(trace.config) << "\n";
  out << "# termination " << trace.termination << "\n";

  const int n =
      trace.steps.empty() ? 0 : static_cast<int>(trace.steps[0].v_true.size());
  out << "step";
  for (const char* name : {"v_true", "v_meas", "p_g", "q_g"}) {
    for (int i = 1; i <= n; ++i) {
      out << ',' << name << '_' << i;
    }
  }
  out << ",mae_x,mae_X,violations,solver_status,effective_rank"
      << ",mae_r,mae_R,max_violation,rank_deficient,negative_x_count"
      << ",objective,duality_gap,sweeps,model_gap\n";
  for (const auto& rec : trace.steps) {
    out << rec.step;
    write_vector_block(out, rec.v_true);
    write_vector_block(out, rec.v_meas);
    write_vector_block(out, rec.p_g);
    write_vector_block(out, rec.q_g);
    out << ',' << rec.mae_x << ',' << rec.mae_X << ',' << rec.band_violations
        << ',' << rec.solver_status << ',' << rec.effective_rank << ','
        << rec.mae_r << ',' << rec.mae_R << ',' << rec.max_violation << ','
        << (rec.rank_deficient ? 1 : 0) << ',' << rec.negative_x_count << ','
        << rec.objective << ',' << rec.duality_gap << ',' << rec.sweeps << ','
        << rec.model_gap << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    fields.push_back(field);
  }
  return fields;
}

}  // namespace

SimulationTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open trace file " + path.string());
  }
  SimulationTrace trace;
  std::string line;
  bool have_config = false;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# config ", 0) == 0) {
        trace.config = scenario_from_json(line.substr(9), path.parent_path());
        have_config = true;
      } else if (line.rfind("# termination ", 0) == 0) {
        trace.termination = line.substr(14);
      }
      continue;
    }
    if (header.empty()) {
      header = split_csv_line(line);
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("malformed trace row in " + path.string());
    }
    // bus count from the header layout: step + 4 blocks + 14 scalars
    const int n = static_cast<int>((header.size() - 15)) / 4;
    StepRecord rec;
    int c = 0;
    auto next_d = [&]() { return std::stod(fields[c++]); };
    rec.step = static_cast<std::int64_t>(next_d());
    auto read_block = [&]() {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = next_d();
      return v;
    };
    rec.v_true = read_block();
    rec.v_meas = read_block();
    rec.p_g = read_block();
    rec.q_g = read_block();
    rec.mae_x = next_d();
    rec.mae_X = next_d();
    rec.band_violations = static_cast<int>(next_d());
    rec.solver_status = fields[c++];
    rec.effective_rank = static_cast<int>(next_d());
    rec.mae_r = next_d();
    rec.mae_R = next_d();
    rec.max_violation = next_d();
    rec.rank_deficient = next_d() != 0.0;
    rec.negative_x_count = static_cast<int>(next_d());
    rec.objective = next_d();
    rec.duality_gap = next_d();
    rec.sweeps = static_cast<int>(next_d());
    rec.model_gap = next_d();
    trace.steps.push_back(std::move(rec));
  }
  if (!have_config) {
    throw std::runtime_error("trace file lacks the config header: " +
                             path.string());
  }
  return trace;
}

void write_monte_carlo_csv(const std::vector<MonteCarloRow>& rows,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << std::setprecision(17);
  out << "window,replicas,mae_x_mean,mae_x_var,mae_X_mean,mae_X_var\n";
  for (const auto& row : rows) {
    out << row.window << ',' << row.replicas << ',' << row.mae_x_mean << ','
        << row.mae_x_var << ',' << row.mae_X_mean << ',' << row.mae_X_var
        << '\n';
  }
}

void write_snapshots_csv(const std::vector<MeasurementSnapshot>& snapshots,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << std::setprecision(17);
  const int n =
      snapshots.empty() ? 0 : static_cast<int>(snapshots[0].u_meas.size());
  out << "step,u0_meas";
  for (const char* name : {"u_meas", "p_meas", "q_meas"}) {
    for (int i = 1; i <= n; ++i) {
      out << ',' << name << '_' << i;
    }
  }
  out << '\n';
  for (const auto& snap : snapshots) {
    out << snap.step << ',' << snap.u0_meas;
    write_vector_block(out, snap.u_meas);
    write_vector_block(out, snap.p_meas);
    write_vector_block(out, snap.q_meas);
    out << '\n';
  }
}

std::vector<MeasurementSnapshot> read_snapshots_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open snapshot file " + path.string());
  }
  std::vector<MeasurementSnapshot> snapshots;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split_csv_line(line);
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("malformed snapshot row in " + path.string());
    }
    const int n = static_cast<int>((header.size() - 2) / 3);
    MeasurementSnapshot snap;
    int c = 0;
    auto next_d = [&]() { return std::stod(fields[c++]); };
    snap.step = static_cast<std::int64_t>(next_d());
    snap.u0_meas = next_d();
    snap.u_meas.resize(n);
    snap.p_meas.resize(n);
    snap.q_meas.resize(n);
    for (int i = 0; i < n; ++i) snap.u_meas[i] = next_d();
    for (int i = 0; i < n; ++i) snap.p_meas[i] = next_d();
    for (int i = 0; i < n; ++i) snap.q_meas[i] = next_d();
    snapshots.push_back(std::move(snap));
  }
  return snapshots;
}

}  // namespace dervolt
