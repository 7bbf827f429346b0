#include "koopctl/config.hpp"

#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "koopctl/error.hpp"
#include "koopctl/text_format.hpp"

namespace koopctl {

namespace {

// Reads one TOML table, remembering which keys were consumed so that the
// leftovers can be reported as unknown.
class TableReader {
 public:
  TableReader(const toml::table& table, std::string name, std::string source)
      : table_(table), name_(std::move(name)), source_(std::move(source)) {}

  const toml::node* find(std::string_view key) {
    seen_.insert(std::string(key));
    return table_.get(key);
  }

  [[noreturn]] void fail(const toml::node& node, const std::string& message) const {
    throw InputError(location(node) + message);
  }

  std::string location(const toml::node& node) const {
    const auto& src = node.source();
    return source_ + ":" + std::to_string(src.begin.line) + ": ";
  }

  std::string key_name(std::string_view key) const {
    return name_.empty() ? std::string(key) : name_ + "." + std::string(key);
  }

  void read(std::string_view key, double& out) {
    if (const auto* node = find(key)) {
      const auto v = node->value<double>();
      if (!v || !(node->is_floating_point() || node->is_integer())) fail(*node, key_name(key) + " must be a number");
      if (!std::isfinite(*v)) fail(*node, key_name(key) + " must be finite");
      out = *v;
    }
  }

  void read(std::string_view key, std::size_t& out) {
    if (const auto* node = find(key)) {
      const auto v = node->value<std::int64_t>();
      if (!node->is_integer() || !v) fail(*node, key_name(key) + " must be an integer");
      if (*v < 0) fail(*node, key_name(key) + " must be non-negative");
      out = static_cast<std::size_t>(*v);
    }
  }

  void read(std::string_view key, bool& out) {
    if (const auto* node = find(key)) {
      if (!node->is_boolean()) fail(*node, key_name(key) + " must be true or false");
      out = *node->value<bool>();
    }
  }

  void read(std::string_view key, std::string& out) {
    if (const auto* node = find(key)) {
      if (!node->is_string()) fail(*node, key_name(key) + " must be a string");
      out = *node->value<std::string>();
    }
  }

  std::optional<std::vector<double>> numbers(std::string_view key) {
    const auto* node = find(key);
    if (!node) return std::nullopt;
    const auto* arr = node->as_array();
    if (!arr) fail(*node, key_name(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& item : *arr) {
      const auto v = item.value<double>();
      if (!v || !(item.is_floating_point() || item.is_integer()) || !std::isfinite(*v)) {
        fail(item, key_name(key) + " must contain finite numbers only");
      }
      out.push_back(*v);
    }
    return out;
  }

  // Sub-table (or nullptr); its reader reports keys with a dotted prefix.
  const toml::table* subtable(std::string_view key) {
    const auto* node = find(key);
    if (!node) return nullptr;
    const auto* t = node->as_table();
    if (!t) fail(*node, key_name(key) + " must be a table");
    return t;
  }

  void reject_unknown() const {
    for (const auto& [key, node] : table_) {
      if (!seen_.count(std::string(key.str()))) {
        fail(node, "unknown key '" + key_name(key.str()) + "'");
      }
    }
  }

  const std::string& source() const { return source_; }

 private:
  const toml::table& table_;
  std::string name_;
  std::string source_;
  std::set<std::string> seen_;
};

ReactionProfile read_table_file(const std::filesystem::path& path, const std::string& where) {
  std::ifstream in(path);
  if (!in) throw InputError(where + "cannot open reaction table " + path.string());
  std::vector<double> z, a;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    const std::string ctx = path.string() + " line " + std::to_string(line_no);
    if (fields.size() != 2) throw InputError(ctx + ": expected two columns z,a");
    if (line_no == 1 && !fields[0].empty() && std::isalpha(static_cast<unsigned char>(fields[0][0]))) continue;
    z.push_back(parse_double(fields[0], ctx));
    a.push_back(parse_double(fields[1], ctx));
  }
  try {
    return ReactionProfile::table(std::move(z), std::move(a));
  } catch (const InvalidArgument& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void read_plant(TableReader& r, ExperimentConfig& c, const std::filesystem::path& base_dir) {
  r.read("rho", c.plant.rho);
  r.read("q0", c.plant.q0);
  r.read("q1", c.plant.q1);
  const toml::node* poly_node = r.find("a");
  const toml::table* table = r.subtable("a_table");
  const toml::node* file_node = r.find("a_table_file");
  const int given = (poly_node != nullptr) + (table != nullptr) + (file_node != nullptr);
  if (given > 1) {
    const toml::node& where = poly_node ? *poly_node : *file_node;
    r.fail(where, "plant: give only one of a, a_table, a_table_file");
  }
  if (poly_node) {
    std::vector<double> coeffs;
    if (const auto v = poly_node->value<double>(); v && (poly_node->is_integer() || poly_node->is_floating_point())) {
      coeffs = {*v};
    } else {
      const auto* arr = poly_node->as_array();
      if (!arr || arr->empty()) r.fail(*poly_node, "plant.a must be a number or a nonempty array of coefficients");
      for (const auto& item : *arr) {
        const auto x = item.value<double>();
        if (!x || !(item.is_integer() || item.is_floating_point())) r.fail(item, "plant.a must contain numbers");
        coeffs.push_back(*x);
      }
    }
    c.plant.a = ReactionProfile::polynomial(std::move(coeffs));
  }
  if (table) {
    TableReader t(*table, "plant.a_table", r.source());
    auto z = t.numbers("z");
    auto v = t.numbers("values");
    t.reject_unknown();
    if (!z || !v) r.fail(*table, "plant.a_table needs arrays z and values");
    try {
      c.plant.a = ReactionProfile::table(std::move(*z), std::move(*v));
    } catch (const InvalidArgument& e) {
      r.fail(*table, e.what());
    }
  }
  if (file_node) {
    if (!file_node->is_string()) r.fail(*file_node, "plant.a_table_file must be a string");
    const std::string file = *file_node->value<std::string>();
    std::filesystem::path p(file);
    if (p.is_relative()) p = base_dir / p;
    c.plant.a = read_table_file(p, r.location(*file_node));
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& message) {
    if (!ok) throw InputError("config: " + message);
  };
  try {
    plant.validate();
  } catch (const InvalidArgument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  require(grid_nodes >= 3, "grid.nodes must be >= 3");
  require(centers.empty() ? sensors >= 1 : true, "sampling.sensors must be >= 1");
  require(epsilon >= 0.0, "sampling.epsilon must be >= 0");
  require(t_s > 0.0, "sampling.t_s must be positive");
  require(delays >= 1, "sampling.delays must be >= 1");
  require(substeps >= 1, "sampling.substeps must be >= 1");
  require(pulse_duration > 0.0, "initial_condition.pulse_duration must be positive");
  require(!order || *order >= 1, "dmd.order must be >= 1");
  require(order_tol > 0.0 && order_max >= 1, "dmd.tol must be positive and dmd.n_max >= 1");
  require(step_u0 != 0.0, "rho.u0 must be nonzero");
  require(step_settle >= 0.0, "rho.settle must be >= 0");
  require(rho_order >= 2, "rho.order must be >= 2");
  require(assigned_modes >= 1, "synthesis.modes must be >= 1");
  require(targets.size() == assigned_modes, "synthesis.targets must list one value per assigned mode");
  require(!order || assigned_modes <= *order, "synthesis.modes exceeds the DMD order");
  require(optimizer.box > 0.0 && optimizer.starts >= 1 && optimizer.max_iterations >= 1,
          "synthesis.box must be positive, starts and max_iterations >= 1");
  require(closed_loop_t_final > 0.0 && closed_loop_dt > 0.0 && record_interval > 0.0,
          "verification times must be positive");
  require(decay_t_start >= 0.0 && decay_t_start < closed_loop_t_final,
          "verification.decay_t_start must lie inside the closed-loop horizon");
  require(delay_mode_sensors >= 1 && delay_mode_delays >= 1, "delay_mode sizes must be >= 1");
}

ExperimentConfig example_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config(std::string_view text, std::string_view source_name,
                              const std::filesystem::path& base_dir) {
  const std::string source(source_name);
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    throw InputError(source + ":" + std::to_string(e.source().begin.line) + ": " +
                     std::string(e.description()));
  }
  ExperimentConfig c = example_config();
  TableReader top(root, "", source);
  std::string preset = "paper_example";
  top.read("preset", preset);
  if (preset != "paper_example") {
    top.fail(*root.get("preset"), "unknown preset '" + preset + "' (available: paper_example)");
  }

  if (const auto* t = top.subtable("plant")) {
    TableReader r(*t, "plant", source);
    read_plant(r, c, base_dir);
    r.reject_unknown();
  }
  if (const auto* t = top.subtable("grid")) {
    TableReader r(*t, "grid", source);
    r.read("nodes", c.grid_nodes);
    r.reject_unknown();
  }
  if (const auto* t = top.subtable("sampling")) {
    TableReader r(*t, "sampling", source);
    r.read("sensors", c.sensors);
    if (auto centers = r.numbers("centers")) c.centers = std::move(*centers);
    r.read("epsilon", c.epsilon);
    r.read("t_s", c.t_s);
    r.read("delays", c.delays);
    r.read("substeps", c.substeps);
    r.reject_unknown();
  }
  if (const auto* t = top.subtable("initial_condition")) {
    TableReader r(*t, "initial_condition", source);
    r.read("pulse_amplitude", c.pulse_amplitude);
    r.read("pulse_duration", c.pulse_duration);
    r.reject_unknown();
  }
  if (const auto* t = top.subtable("dmd")) {
    TableReader r(*t, "dmd", source);
    if (const auto* node = r.find("order")) {
      if (node->is_string() && *node->value<std::string>() == "auto") {
        c.order.reset();
      } else if (node->is_integer() && *node->value<std::int64_t>() >= 1) {
        c.order = static_cast<std::size_t>(*node->value<std::int64_t>());
      } else {
        r.fail(*node, "dmd.order must be a positive integer or \"auto\"");
      }
    }
    r.read("tol", c.order_tol);
    r.read("n_max", c.order_max);
    r.reject_unknown();
  }
  if (const auto* t = top.subtable("rho")) {
    TableReader r(*t, "rho", source);
    r.read("estimate", c.estimate_rho);
    r.read("u0", c.step_u0);
    r.read("settle", c.step_settle);
    r.read("order", c.rho_order);
    r.reject_unknown();
  }
  if (const auto* t = top.subtable("synthesis")) {
    TableReader r(*t, "synthesis", source);
    r.read("modes", c.assigned_modes);
    const auto re = r.numbers("targets");
    const auto im = r.numbers("targets_im");
    if (im && !re) r.fail(*t->get("targets_im"), "synthesis.targets_im needs synthesis.targets");
    if (re) {
      if (im && im->size() != re->size()) {
        r.fail(*t->get("targets_im"), "synthesis.targets_im must match synthesis.targets in length");
      }
      c.targets.clear();
      for (std::size_t i = 0; i < re->size(); ++i) c.targets.emplace_back((*re)[i], im ? (*im)[i] : 0.0);
    }
    r.read("box", c.optimizer.box);
    r.read("starts", c.optimizer.starts);
    {
      std::size_t seed = c.optimizer.seed;
      r.read("seed", seed);
      c.optimizer.seed = seed;
    }
    r.read("max_iterations", c.optimizer.max_iterations);
    r.reject_unknown();
  }
  if (const auto* t = top.subtable("verification")) {
    TableReader r(*t, "verification", source);
    r.read("n_tail", c.n_tail);
    r.read("n_check", c.n_check);
    r.read("t_final", c.closed_loop_t_final);
    r.read("dt", c.closed_loop_dt);
    r.read("record_interval", c.record_interval);
    r.read("decay_t_start", c.decay_t_start);
    r.reject_unknown();
  }
  if (const auto* t = top.subtable("delay_mode")) {
    TableReader r(*t, "delay_mode", source);
    r.read("sensors", c.delay_mode_sensors);
    r.read("delays", c.delay_mode_delays);
    r.reject_unknown();
  }
  if (const auto* t = top.subtable("output")) {
    TableReader r(*t, "output", source);
    std::string dir = c.output_dir.string();
    r.read("dir", dir);
    c.output_dir = dir;
    r.reject_unknown();
  }
  top.reject_unknown();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string(), path.parent_path());
}

std::string config_to_toml(const ExperimentConfig& c, bool include_output) {
  std::ostringstream out;
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s + "]";
  };
  auto number = [](double v) { return format_double(v); };
  out << "[plant]\n";
  out << "rho = " << number(c.plant.rho) << '\n';
  if (c.plant.a.is_polynomial()) out << "a = " << list(c.plant.a.coefficients()) << '\n';
  out << "q0 = " << number(c.plant.q0) << '\n';
  out << "q1 = " << number(c.plant.q1) << '\n';
  if (!c.plant.a.is_polynomial()) {
    out << "\n[plant.a_table]\n";
    out << "z = " << list(c.plant.a.table_z()) << '\n';
    out << "values = " << list(c.plant.a.table_values()) << '\n';
  }
  out << "\n[grid]\nnodes = " << c.grid_nodes << '\n';
  out << "\n[sampling]\nsensors = " << c.sensors << '\n';
  if (!c.centers.empty()) out << "centers = " << list(c.centers) << '\n';
  out << "epsilon = " << number(c.epsilon) << '\n';
  out << "t_s = " << number(c.t_s) << '\n';
  out << "delays = " << c.delays << '\n';
  out << "substeps = " << c.substeps << '\n';
  out << "\n[initial_condition]\npulse_amplitude = " << number(c.pulse_amplitude) << '\n';
  out << "pulse_duration = " << number(c.pulse_duration) << '\n';
  out << "\n[dmd]\norder = " << (c.order ? std::to_string(*c.order) : std::string("\"auto\"")) << '\n';
  out << "tol = " << number(c.order_tol) << '\n';
  out << "n_max = " << c.order_max << '\n';
  out << "\n[rho]\nestimate = " << (c.estimate_rho ? "true" : "false") << '\n';
  out << "u0 = " << number(c.step_u0) << '\n';
  out << "settle = " << number(c.step_settle) << '\n';
  out << "order = " << c.rho_order << '\n';
  std::vector<double> re, im;
  bool complex_targets = false;
  for (const auto& t : c.targets) {
    re.push_back(t.real());
    im.push_back(t.imag());
    complex_targets = complex_targets || t.imag() != 0.0;
  }
  out << "\n[synthesis]\nmodes = " << c.assigned_modes << '\n';
  out << "targets = " << list(re) << '\n';
  if (complex_targets) out << "targets_im = " << list(im) << '\n';
  out << "box = " << number(c.optimizer.box) << '\n';
  out << "starts = " << c.optimizer.starts << '\n';
  out << "seed = " << c.optimizer.seed << '\n';
  out << "max_iterations = " << c.optimizer.max_iterations << '\n';
  out << "\n[verification]\nn_tail = " << c.n_tail << '\n';
  out << "n_check = " << c.n_check << '\n';
  out << "t_final = " << number(c.closed_loop_t_final) << '\n';
  out << "dt = " << number(c.closed_loop_dt) << '\n';
  out << "record_interval = " << number(c.record_interval) << '\n';
  out << "decay_t_start = " << number(c.decay_t_start) << '\n';
  out << "\n[delay_mode]\nsensors = " << c.delay_mode_sensors << '\n';
  out << "delays = " << c.delay_mode_delays << '\n';
  if (include_output) out << "\n[output]\ndir = \"" << c.output_dir.generic_string() << "\"\n";
  return out.str();
}

}  // namespace koopctl
