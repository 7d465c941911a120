#include "ieqmon/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "ieqmon/error.hpp"

namespace ieqmon {

namespace {

// A YAML mapping plus its dotted path, rejecting keys nobody asked about.
class Section {
 public:
  Section(YAML::Node node, std::string path, std::initializer_list<const char*> allowed)
      : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError(where() + "must be a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!ok.contains(key)) throw ConfigError("unknown key '" + child_path(key) + "'");
    }
  }

  bool has(const char* key) const { return static_cast<bool>(node_[key]); }
  YAML::Node raw(const char* key) const { return node_[key]; }
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const char* key, T& out) const {
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("bad value for '" + child_path(key) + "'");
    }
  }

  template <typename T>
  T require(const char* key) const {
    if (!has(key)) throw ConfigError("missing key '" + child_path(key) + "'");
    T out{};
    get(key, out);
    return out;
  }

  Section sub(const char* key, std::initializer_list<const char*> allowed) const {
    return Section(node_[key], child_path(key), allowed);
  }

 private:
  std::string where() const { return path_.empty() ? "document " : "'" + path_ + "' "; }

  YAML::Node node_;
  std::string path_;
};

Interval parse_interval(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence() || n.size() != 2) throw ConfigError("'" + path + "' entries must be [start, end]");
  try {
    return {n[0].as<double>(), n[1].as<double>()};
  } catch (const YAML::Exception&) {
    throw ConfigError("bad interval in '" + path + "'");
  }
}

std::vector<Interval> parse_intervals(const YAML::Node& n, const std::string& path) {
  std::vector<Interval> out;
  if (!n) return out;
  if (!n.IsSequence()) throw ConfigError("'" + path + "' must be a list");
  for (const auto& item : n) out.push_back(parse_interval(item, path));
  return out;
}

Band parse_band(const Section& s, const char* key, Band fallback) {
  const YAML::Node n = s.raw(key);
  if (!n) return fallback;
  const Interval iv = parse_interval(n, s.child_path(key));
  return {iv.start, iv.end};
}

void parse_field_drift(const Section& parent, const char* key, FieldDrift& d) {
  if (!parent.has(key)) return;
  const Section s = parent.sub(key, {"target", "reversion_rate", "sigma", "bounds"});
  s.get("target", d.target);
  s.get("reversion_rate", d.reversion_rate);
  s.get("sigma", d.sigma);
  d.bounds = parse_band(s, "bounds", d.bounds);
}

void parse_waveform(const Section& s, WaveformSpec& w) {
  s.get("mains_frequency", w.mains_frequency);
  s.get("nominal_rms_voltage", w.nominal_rms_voltage);
  s.get("noise_sigma", w.noise_sigma);
  s.get("synthesis_rate", w.synthesis_rate);
  s.get("initial_phase", w.initial_phase);
}

void parse_frontend(const Section& s, FrontEndConfig& fe) {
  s.get("aref", fe.adc.reference_volts);
  s.get("adc_bits", fe.adc.resolution_bits);
  s.get("bias_volts", fe.bias.bias_volts);
  s.get("rail_volts", fe.bias.rail_volts);
  s.get("ct_turns", fe.ct.turns);
  s.get("ct_max_primary_current", fe.ct.max_primary_current);
  s.get("adapter_gain", fe.tap.adapter_gain);
  s.get("divider_ratio", fe.tap.divider_ratio);
  s.get("current_noise_sigma", fe.current_noise_sigma);
  if (!s.has("bias_volts")) fe.bias.bias_volts = fe.adc.reference_volts / 2.0;
  if (!s.has("rail_volts")) fe.bias.rail_volts = fe.adc.reference_volts;
  if (s.has("burden_resistance")) {
    s.get("burden_resistance", fe.ct.burden_resistance);
  } else if (fe.adc.reference_volts > 0 && fe.ct.turns > 0 && fe.ct.max_primary_current > 0) {
    fe.ct.burden_resistance = burden_resistor(fe.adc.reference_volts, fe.ct.turns, fe.ct.max_primary_current);
  }
}

LoadProfile parse_load(const YAML::Node& n, const std::string& path) {
  const Section s(n, path, {"name", "rms_current", "power_factor", "on"});
  LoadProfile p;
  p.appliance_name = s.require<std::string>("name");
  p.rms_current = s.require<double>("rms_current");
  s.get("power_factor", p.power_factor);
  if (s.has("on")) {
    p.on_intervals = parse_intervals(s.raw("on"), s.child_path("on"));
  } else {
    p = LoadProfile::always_on(p.appliance_name, p.rms_current, p.power_factor);
  }
  return p;
}

GridEvent parse_event(const YAML::Node& n, const std::string& path) {
  const Section s(n, path, {"kind", "start", "duration", "factor", "target_rms_voltage"});
  GridEvent e;
  const auto kind = s.require<std::string>("kind");
  if (kind == "swell") {
    e.kind = GridEventKind::swell;
  } else if (kind == "sag") {
    e.kind = GridEventKind::sag;
  } else {
    throw ConfigError("'" + s.child_path("kind") + "' must be swell or sag");
  }
  e.start = s.require<double>("start");
  e.duration = s.require<double>("duration");
  if (s.has("factor") == s.has("target_rms_voltage")) {
    throw ConfigError("'" + path + "' needs exactly one of factor / target_rms_voltage");
  }
  // target_rms_voltage is resolved against the nominal voltage after parsing.
  if (s.has("factor")) {
    s.get("factor", e.magnitude_factor);
  } else {
    e.magnitude_factor = -s.require<double>("target_rms_voltage");
  }
  return e;
}

void parse_ieq(const Section& s, IeqScenario& ieq) {
  if (s.has("initial")) {
    const Section init = s.sub("initial", {"temperature", "humidity", "co2"});
    init.get("temperature", ieq.initial.temperature);
    init.get("humidity", ieq.initial.humidity);
    init.get("co2", ieq.initial.co2);
  }
  ieq.drift = DriftParams::frozen(ieq.initial);
  if (s.has("drift")) {
    const Section d = s.sub("drift", {"temperature", "humidity", "co2"});
    parse_field_drift(d, "temperature", ieq.drift.temperature);
    parse_field_drift(d, "humidity", ieq.drift.humidity);
    parse_field_drift(d, "co2", ieq.drift.co2);
  }
  if (s.has("sensor")) {
    const Section m = s.sub("sensor", {"temp_resolution", "humid_resolution", "temp_noise_sigma",
                                       "humid_noise_sigma", "co2_noise_sigma", "co2_curve", "adc_bits", "aref"});
    IeqSensorModel& model = ieq.sensor;
    m.get("temp_resolution", model.temp_resolution);
    m.get("humid_resolution", model.humid_resolution);
    m.get("temp_noise_sigma", model.temp_noise_sigma);
    m.get("humid_noise_sigma", model.humid_noise_sigma);
    m.get("co2_noise_sigma", model.co2_noise_sigma);
    m.get("adc_bits", model.adc.resolution_bits);
    m.get("aref", model.adc.reference_volts);
    if (m.has("co2_curve")) {
      const Section c = m.sub("co2_curve", {"baseline_ppm", "baseline_volts", "volts_per_decade", "offset_ppm"});
      c.get("baseline_ppm", model.co2_curve.baseline_ppm);
      c.get("baseline_volts", model.co2_curve.baseline_volts);
      c.get("volts_per_decade", model.co2_curve.volts_per_decade);
      c.get("offset_ppm", model.co2_curve.offset_ppm);
    }
  }
}

DeviceConfig parse_device(const YAML::Node& n, const std::string& path, const NetworkScenario& net) {
  const Section s(n, path, {"device_id", "api_key", "owner", "endpoint", "report_interval", "retry_queue_capacity",
                            "drop_probability", "reconnect_backoff", "max_flush_per_tick"});
  DeviceConfig d;
  d.device_id = s.require<std::string>("device_id");
  d.api_key = s.require<std::string>("api_key");
  s.get("owner", d.owner);
  s.get("endpoint", d.endpoint);
  s.get("report_interval", d.report_interval);
  s.get("retry_queue_capacity", d.retry_queue_capacity);
  d.drop_probability = net.drop_probability;
  s.get("drop_probability", d.drop_probability);
  s.get("reconnect_backoff", d.reconnect_backoff);
  s.get("max_flush_per_tick", d.max_flush_per_tick);
  return d;
}

void parse_rules(const Section& s, RuleSet& r) {
  s.get("swell_threshold", r.swell_threshold);
  s.get("sag_threshold", r.sag_threshold);
  r.temp_band = parse_band(s, "temp_band", r.temp_band);
  r.humidity_band = parse_band(s, "humidity_band", r.humidity_band);
  s.get("co2_max", r.co2_max);
  s.get("alert_cooldown", r.alert_cooldown);
  s.get("summary_time", r.summary_time);
  s.get("maintain_window", r.maintain_window);
  s.get("maintain_tip", r.maintain_tip);
  if (s.has("tips")) {
    const YAML::Node tips = s.raw("tips");
    if (!tips.IsMap()) throw ConfigError("'" + s.child_path("tips") + "' must be a mapping");
    for (const auto& kv : tips) {
      const auto key = kv.first.as<std::string>();
      const auto kind = parse_anomaly_kind(key);
      if (!kind) throw ConfigError("unknown key '" + s.child_path("tips") + "." + key + "'");
      r.tips[*kind] = kv.second.as<std::string>();
    }
  }
}

ValidationSpec parse_validation(const Section& s) {
  ValidationSpec v;
  std::string source = "ground_truth";
  s.get("reference", source);
  if (source == "ground_truth") {
    v.source = ValidationSpec::Source::ground_truth;
  } else if (source == "explicit") {
    v.source = ValidationSpec::Source::explicit_values;
  } else {
    throw ConfigError("'" + s.child_path("reference") + "' must be ground_truth or explicit");
  }
  s.get("tolerance", v.tolerance);
  s.get("windows", v.windows);
  s.get("energy", v.energy);
  s.get("ieq", v.ieq);
  if (s.has("appliances")) {
    const YAML::Node apps = s.raw("appliances");
    if (!apps.IsMap()) throw ConfigError("'" + s.child_path("appliances") + "' must be a mapping");
    for (const auto& kv : apps) {
      const auto name = kv.first.as<std::string>();
      const Section a(kv.second, s.child_path("appliances") + "." + name, {"power", "voltage", "current"});
      v.appliances[name] = {a.require<double>("power"), a.require<double>("voltage"), a.require<double>("current")};
    }
  }
  if (s.has("ieq_reference")) {
    const Section r = s.sub("ieq_reference", {"temperature", "humidity", "co2"});
    v.ieq_reference = IeqReference{r.require<double>("temperature"), r.require<double>("humidity"),
                                   r.require<double>("co2")};
  }
  return v;
}

}  // namespace

void Scenario::validate() const {
  if (duration < 0) throw ConfigError("duration must be >= 0");
  waveform.validate();
  frontend.validate();
  for (const LoadProfile& l : loads) l.validate();
  validate_events(events);
  ieq.sensor.validate();
  rules.validate();
  std::set<std::string> ids;
  for (const DeviceConfig& d : devices) {
    d.validate();
    if (!ids.insert(d.device_id).second) throw ConfigError("devices: duplicate device_id '" + d.device_id + "'");
  }
  if (!(network.drop_probability >= 0 && network.drop_probability <= 1)) {
    throw ConfigError("network.drop_probability must be in [0, 1]");
  }
  if (validation) {
    if (validation->tolerance < 0) throw ConfigError("validation.tolerance must be >= 0");
    if (validation->windows < 1) throw ConfigError("validation.windows must be >= 1");
  }
}

Scenario parse_scenario(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario is not valid YAML: ") + e.what());
  }
  const Section doc(root, "",
                    {"name", "seed", "duration", "start_time", "waveform", "frontend", "loads", "events", "ieq",
                     "devices", "users", "rules", "network", "sensor_faults", "validation"});
  Scenario sc;
  doc.get("name", sc.name);
  doc.get("seed", sc.seed);
  doc.get("duration", sc.duration);
  doc.get("start_time", sc.start_time);
  if (doc.has("waveform")) {
    parse_waveform(doc.sub("waveform", {"mains_frequency", "nominal_rms_voltage", "noise_sigma", "synthesis_rate",
                                        "initial_phase"}),
                   sc.waveform);
  }
  if (doc.has("frontend")) {
    parse_frontend(doc.sub("frontend", {"aref", "adc_bits", "bias_volts", "rail_volts", "ct_turns",
                                        "ct_max_primary_current", "burden_resistance", "adapter_gain",
                                        "divider_ratio", "current_noise_sigma"}),
                   sc.frontend);
  }
  if (const YAML::Node loads = doc.raw("loads")) {
    if (!loads.IsSequence()) throw ConfigError("'loads' must be a list");
    for (std::size_t k = 0; k < loads.size(); ++k) sc.loads.push_back(parse_load(loads[k], "loads[" + std::to_string(k) + "]"));
  }
  if (const YAML::Node events = doc.raw("events")) {
    if (!events.IsSequence()) throw ConfigError("'events' must be a list");
    for (std::size_t k = 0; k < events.size(); ++k) {
      GridEvent e = parse_event(events[k], "events[" + std::to_string(k) + "]");
      if (e.magnitude_factor < 0) e.magnitude_factor = -e.magnitude_factor / sc.waveform.nominal_rms_voltage;
      sc.events.push_back(e);
    }
  }
  if (doc.has("ieq")) parse_ieq(doc.sub("ieq", {"initial", "drift", "sensor"}), sc.ieq);
  if (doc.has("network")) {
    const Section n = doc.sub("network", {"drop_probability", "outages", "recover_after_run", "max_drain_seconds"});
    n.get("drop_probability", sc.network.drop_probability);
    sc.network.outages = parse_intervals(n.raw("outages"), "network.outages");
    n.get("recover_after_run", sc.network.recover_after_run);
    n.get("max_drain_seconds", sc.network.max_drain_seconds);
  }
  if (const YAML::Node devices = doc.raw("devices")) {
    if (!devices.IsSequence()) throw ConfigError("'devices' must be a list");
    for (std::size_t k = 0; k < devices.size(); ++k) {
      sc.devices.push_back(parse_device(devices[k], "devices[" + std::to_string(k) + "]", sc.network));
    }
  }
  if (sc.devices.empty()) {
    DeviceConfig d;
    d.device_id = "node-1";
    d.api_key = "demo-key";
    d.owner = "demo";
    d.drop_probability = sc.network.drop_probability;
    sc.devices.push_back(d);
  }
  if (const YAML::Node users = doc.raw("users")) {
    if (!users.IsSequence()) throw ConfigError("'users' must be a list");
    for (std::size_t k = 0; k < users.size(); ++k) {
      const Section u(users[k], "users[" + std::to_string(k) + "]", {"username", "password", "password_hash"});
      UserSpec spec;
      spec.username = u.require<std::string>("username");
      u.get("password", spec.password);
      u.get("password_hash", spec.password_hash);
      if (spec.password.empty() == spec.password_hash.empty()) {
        throw ConfigError("'users[" + std::to_string(k) + "]' needs exactly one of password / password_hash");
      }
      sc.users.push_back(spec);
    }
  }
  if (doc.has("rules")) {
    parse_rules(doc.sub("rules", {"swell_threshold", "sag_threshold", "temp_band", "humidity_band", "co2_max",
                                  "alert_cooldown", "summary_time", "maintain_window", "maintain_tip", "tips"}),
                sc.rules);
  }
  if (const YAML::Node faults = doc.raw("sensor_faults")) {
    try {
      sc.sensor_faults = faults.as<std::vector<std::int64_t>>();
    } catch (const YAML::Exception&) {
      throw ConfigError("'sensor_faults' must be a list of integer offsets");
    }
  }
  if (doc.has("validation")) {
    sc.validation = parse_validation(doc.sub("validation", {"reference", "tolerance", "windows", "energy", "ieq",
                                                            "appliances", "ieq_reference"}));
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace ieqmon
