#include "koopctl/serialization.hpp"

#include <fstream>
#include <json.hpp>
#include <string>

#include "koopctl/error.hpp"
#include "koopctl/text_format.hpp"

namespace koopctl {

namespace {

using json = nlohmann::ordered_json;

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T value(const json& j, const char* key, const std::string& where) {
  try {
    return field(j, key, where).get<T>();
  } catch (const json::exception& e) {
    throw InputError(where + ": field '" + key + "' has the wrong type");
  }
}

json real_array(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json real_matrix(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(real_array(m.row(r).transpose()));
  return a;
}

Eigen::VectorXd to_vector(const json& j, const char* key, const std::string& where) {
  const auto v = value<std::vector<double>>(j, key, where);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd to_matrix(const json& j, const char* key, const std::string& where) {
  const auto rows = value<std::vector<std::vector<double>>>(j, key, where);
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw InputError(where + ": ragged matrix '" + key + "'");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

void put_complex_vector(json& j, const std::string& key, const Eigen::VectorXcd& v) {
  j[key + "_re"] = real_array(v.real());
  j[key + "_im"] = real_array(v.imag());
}

Eigen::VectorXcd get_complex_vector(const json& j, const std::string& key, const std::string& where) {
  const Eigen::VectorXd re = to_vector(j, (key + "_re").c_str(), where);
  const Eigen::VectorXd im = to_vector(j, (key + "_im").c_str(), where);
  if (re.size() != im.size()) throw InputError(where + ": '" + key + "' parts differ in length");
  Eigen::VectorXcd v(re.size());
  v.real() = re;
  v.imag() = im;
  return v;
}

void put_complex_matrix(json& j, const std::string& key, const Eigen::MatrixXcd& m) {
  j[key + "_re"] = real_matrix(m.real());
  j[key + "_im"] = real_matrix(m.imag());
}

Eigen::MatrixXcd get_complex_matrix(const json& j, const std::string& key, const std::string& where) {
  const Eigen::MatrixXd re = to_matrix(j, (key + "_re").c_str(), where);
  const Eigen::MatrixXd im = to_matrix(j, (key + "_im").c_str(), where);
  if (re.rows() != im.rows() || re.cols() != im.cols()) {
    throw InputError(where + ": '" + key + "' parts differ in shape");
  }
  Eigen::MatrixXcd m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return m;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void write_spectrum_json(const KoopmanSpectrum& spectrum, const OrderSelection* selection,
                         const std::filesystem::path& path) {
  json j;
  j["t_s"] = spectrum.model.t_s;
  j["order"] = spectrum.model.order();
  j["effective_rank"] = spectrum.model.effective_rank;
  j["residual_norm"] = spectrum.model.residual.norm();
  j["delays"] = spectrum.sensors.empty() || spectrum.modes.empty()
                    ? std::size_t{1}
                    : static_cast<std::size_t>(spectrum.modes.front().samples.size()) / spectrum.sensors.size();
  j["sensors"] = spectrum.sensors;
  j["f"] = real_array(spectrum.model.f);
  j["residual"] = real_array(spectrum.model.residual);
  j["warnings"] = spectrum.warnings;
  if (selection) {
    j["order_selection"] = {{"n", selection->n},
                            {"met_tolerance", selection->met_tolerance},
                            {"residual_norms", selection->residual_norms},
                            {"relative_residuals", selection->relative_residuals}};
  }
  json modes = json::array();
  for (const auto& m : spectrum.modes) {
    json e;
    e["lambda_hat_re"] = m.lambda_hat.real();
    e["lambda_hat_im"] = m.lambda_hat.imag();
    e["mu_re"] = m.mu.real();
    e["mu_im"] = m.mu.imag();
    e["rel_residual"] = m.rel_residual;
    e["amplitude_re"] = m.amplitude.real();
    e["amplitude_im"] = m.amplitude.imag();
    e["mode_samples"] = real_array(m.samples.real());
    e["mode_samples_im"] = real_array(m.samples.imag());
    modes.push_back(std::move(e));
  }
  j["modes"] = std::move(modes);
  write_json(j, path);
}

KoopmanSpectrum read_spectrum_json(const std::filesystem::path& path, const SpatialGrid& grid) {
  const json j = read_json(path);
  const std::string where = path.string();
  KoopmanSpectrum s;
  s.model.t_s = value<double>(j, "t_s", where);
  s.model.effective_rank = value<std::size_t>(j, "effective_rank", where);
  s.model.f = to_vector(j, "f", where);
  s.model.residual = to_vector(j, "residual", where);
  s.sensors = value<std::vector<double>>(j, "sensors", where);
  s.warnings = value<std::vector<std::string>>(j, "warnings", where);
  const auto m = static_cast<Eigen::Index>(s.sensors.size());
  for (const json& e : field(j, "modes", where)) {
    KoopmanEigenpair p;
    p.lambda_hat = {value<double>(e, "lambda_hat_re", where), value<double>(e, "lambda_hat_im", where)};
    p.mu = {value<double>(e, "mu_re", where), value<double>(e, "mu_im", where)};
    p.rel_residual = value<double>(e, "rel_residual", where);
    const Eigen::VectorXd re = to_vector(e, "mode_samples", where);
    const Eigen::VectorXd im = to_vector(e, "mode_samples_im", where);
    if (re.size() != im.size() || re.size() < m) throw InputError(where + ": mode samples too short");
    p.samples.resize(re.size());
    p.samples.real() = re;
    p.samples.imag() = im;
    p.mode = normalize_mode(s.sensors, p.samples.head(m), grid, &p.amplitude);
    s.modes.push_back(std::move(p));
  }
  return s;
}

void write_rho_json(const RhoEstimate& estimate, const std::filesystem::path& path) {
  json j;
  j["rho_hat"] = estimate.rho_hat;
  j["rho_without_boundary_factor"] = estimate.rho_without_boundary;
  j["per_mode"] = estimate.per_mode;
  j["mu_zero_mode_re"] = estimate.mu_zero_mode.real();
  j["mu_zero_mode_im"] = estimate.mu_zero_mode.imag();
  j["modes_used"] = estimate.modes_used;
  json modes = json::array();
  for (const auto& m : estimate.modes) {
    modes.push_back({{"lambda_re", m.lambda.real()},
                     {"lambda_im", m.lambda.imag()},
                     {"rel_residual", m.rel_residual},
                     {"rho", m.rho},
                     {"rho_without_boundary_factor", m.rho_without_boundary},
                     {"admissible", m.admissible},
                     {"used", m.used}});
  }
  j["modes"] = std::move(modes);
  write_json(j, path);
}

RhoEstimate read_rho_json(const std::filesystem::path& path) {
  const json j = read_json(path);
  const std::string where = path.string();
  RhoEstimate e;
  e.rho_hat = value<double>(j, "rho_hat", where);
  e.rho_without_boundary = value<double>(j, "rho_without_boundary_factor", where);
  e.per_mode = value<std::vector<double>>(j, "per_mode", where);
  e.mu_zero_mode = {value<double>(j, "mu_zero_mode_re", where), value<double>(j, "mu_zero_mode_im", where)};
  e.modes_used = value<std::size_t>(j, "modes_used", where);
  for (const json& m : field(j, "modes", where)) {
    RhoModeEstimate r;
    r.lambda = {value<double>(m, "lambda_re", where), value<double>(m, "lambda_im", where)};
    r.rel_residual = value<double>(m, "rel_residual", where);
    r.rho = value<double>(m, "rho", where);
    r.rho_without_boundary = value<double>(m, "rho_without_boundary_factor", where);
    r.admissible = value<bool>(m, "admissible", where);
    r.used = value<bool>(m, "used", where);
    e.modes.push_back(r);
  }
  if (!(e.rho_hat > 0.0)) throw InputError(where + ": rho_hat must be positive");
  return e;
}

void write_gain_json(const GainSynthesis& synth, const ParameterSearch* search,
                     const std::filesystem::path& path) {
  json j;
  put_complex_vector(j, "targets", synth.targets);
  put_complex_matrix(j, "P", synth.P);
  j["K"] = real_matrix(synth.K);
  j["gain_norm"] = synth.gain_norm();
  put_complex_vector(j, "achieved_spectrum", synth.achieved);
  j["cond_V"] = synth.cond_V;
  put_complex_matrix(j, "V_tilde", synth.V_tilde);
  if (search) {
    j["optimizer"] = {{"feasible_starts", search->feasible_starts},
                      {"best_start", search->best_start},
                      {"objective", search->gain_norm}};
  }
  write_json(j, path);
}

GainSynthesis read_gain_json(const std::filesystem::path& path) {
  const json j = read_json(path);
  const std::string where = path.string();
  GainSynthesis s;
  s.targets = get_complex_vector(j, "targets", where);
  s.P = get_complex_matrix(j, "P", where);
  s.K = to_matrix(j, "K", where);
  s.achieved = get_complex_vector(j, "achieved_spectrum", where);
  s.cond_V = value<double>(j, "cond_V", where);
  s.V_tilde = get_complex_matrix(j, "V_tilde", where);
  const auto n = s.targets.size();
  if (s.K.rows() != 2 || s.K.cols() != n || s.P.rows() != 2 || s.P.cols() != n ||
      s.V_tilde.rows() != n || s.V_tilde.cols() != n) {
    throw InputError(where + ": gain artifact has inconsistent shapes");
  }
  return s;
}

void write_certificate_json(const RobustnessCertificate& cert, const GainSynthesis& synth,
                            const ModalModel& model, const std::filesystem::path& path) {
  json j;
  j["pass"] = cert.pass;
  j["gamma"] = cert.gamma;
  j["alpha_hat"] = cert.alpha_hat;
  j["lambda_tail_max"] = cert.lambda_tail_max;
  j["lambda_max_Pi"] = cert.lambda_max_Pi;
  j["lambda_min_Pi"] = cert.lambda_min_Pi;
  j["gain_norm"] = cert.gain_norm;
  j["coupling_norm"] = cert.coupling_norm;
  j["Pi"] = real_matrix(cert.Pi);
  j["A_cl"] = real_matrix(cert.A_cl);
  json bounds;
  bounds["eps_lambda"] = cert.bounds.eps_lambda;
  bounds["eps_B"] = cert.bounds.eps_B;
  bounds["c_phi"] = cert.bounds.c_phi;
  bounds["scope"] = cert.bounds.scope;
  bounds["coupling_from_reference"] = cert.bounds.B_reference.size() > 0;
  if (cert.bounds.B_reference.size() > 0) put_complex_matrix(bounds, "B_reference", cert.bounds.B_reference);
  j["bounds"] = std::move(bounds);
  json inputs;
  put_complex_vector(inputs, "lambda_hat", model.lambda);
  put_complex_matrix(inputs, "B_hat", model.B);
  inputs["rho_hat"] = model.rho_hat;
  inputs["K"] = real_matrix(synth.K);
  put_complex_vector(inputs, "targets", synth.targets);
  j["inputs"] = std::move(inputs);
  write_json(j, path);
}

RobustnessCertificate read_certificate_json(const std::filesystem::path& path) {
  const json j = read_json(path);
  const std::string where = path.string();
  RobustnessCertificate c;
  c.pass = value<bool>(j, "pass", where);
  c.gamma = value<double>(j, "gamma", where);
  c.alpha_hat = value<double>(j, "alpha_hat", where);
  c.lambda_tail_max = value<double>(j, "lambda_tail_max", where);
  c.lambda_max_Pi = value<double>(j, "lambda_max_Pi", where);
  c.lambda_min_Pi = value<double>(j, "lambda_min_Pi", where);
  c.gain_norm = value<double>(j, "gain_norm", where);
  c.coupling_norm = value<double>(j, "coupling_norm", where);
  c.Pi = to_matrix(j, "Pi", where);
  c.A_cl = to_matrix(j, "A_cl", where);
  const json& b = field(j, "bounds", where);
  c.bounds.eps_lambda = value<double>(b, "eps_lambda", where);
  c.bounds.eps_B = value<double>(b, "eps_B", where);
  c.bounds.c_phi = value<double>(b, "c_phi", where);
  c.bounds.scope = value<std::string>(b, "scope", where);
  if (value<bool>(b, "coupling_from_reference", where)) {
    c.bounds.B_reference = get_complex_matrix(b, "B_reference", where);
  }
  return c;
}

void write_open_loop_diagnostics_csv(const std::vector<DiagnosticRow>& rows,
                                     const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "index,eigenvalue_error,mode_error,rel_residual\n";
  for (const auto& r : rows) {
    out << r.index << ',' << format_double(r.eigenvalue_error) << ',' << format_double(r.mode_error)
        << ',' << format_double(r.rel_residual) << '\n';
  }
}

std::vector<DiagnosticRow> read_open_loop_diagnostics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<DiagnosticRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    const std::string where = path.string() + " line " + std::to_string(line_no);
    if (f.size() != 4) throw InputError(where + ": expected 4 fields");
    rows.push_back({static_cast<std::size_t>(parse_double(f[0], where)), parse_double(f[1], where),
                    parse_double(f[2], where), parse_double(f[3], where)});
  }
  return rows;
}

void write_closed_loop_diagnostics_csv(const std::vector<ClosedLoopDiagnosticRow>& rows,
                                       const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "index,eigenvalue_error,eigenvector_error\n";
  for (const auto& r : rows) {
    out << r.index << ',' << format_double(r.eigenvalue_error) << ','
        << format_double(r.eigenvector_error) << '\n';
  }
}

void write_spectrum_report_csv(const SpectrumReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "index,open_loop,closed_loop,displacement\n";
  std::size_t index = 1;
  for (const auto& t : report.targets) {
    out << index++ << ',' << format_double(t.open_loop) << ',' << format_double(t.closed_loop.real())
        << ',' << format_double(std::abs(t.closed_loop - t.open_loop)) << '\n';
  }
  for (const auto& s : report.tail) {
    out << s.index << ',' << format_double(s.open_loop) << ',' << format_double(s.closed_loop.real())
        << ',' << format_double(s.displacement) << '\n';
  }
}

}  // namespace koopctl
