// Command-line front end. Talks to the library only through the C interface.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tfm/tfm.h"

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Failure {
  int exit_code;
  std::string message;
};

[[noreturn]] void config_error(const std::string& message) { throw Failure{kExitConfig, message}; }

void check(tfm_status status) {
  if (status == TFM_OK) return;
  const int code = status == TFM_ERR_INVALID ? kExitConfig : status == TFM_ERR_IO ? kExitIo : kExitNumerical;
  throw Failure{code, tfm_last_error()};
}

std::string real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string round_trip(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Flat key = value files go to the TOML reader; a JSON document (such as a
// run manifest) contributes the members of its "config" object.
class ManifestConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream again(text);
      return CLI::ConfigTOML::from_config(again);
    }
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config", std::string("malformed JSON config: ") + e.what());
    }
    const json& cfg = doc.contains("config") ? doc.at("config") : doc;
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : cfg.items()) {
      if (value.is_null()) continue;
      CLI::ConfigItem item;
      item.name = key;
      auto push = [&item](const json& v) {
        if (v.is_string()) item.inputs.push_back(v.get<std::string>());
        else if (v.is_number_integer()) item.inputs.push_back(std::to_string(v.get<long long>()));
        else if (v.is_number()) item.inputs.push_back(round_trip(v.get<double>()));
        else if (v.is_boolean()) item.inputs.push_back(v.get<bool>() ? "true" : "false");
        else throw CLI::ConversionError(item.name, "unsupported config value");
      };
      if (value.is_array()) {
        for (const auto& v : value) push(v);
      } else {
        push(value);
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

struct Options {
  std::vector<double> c;
  std::string c_grid;
  double T = 1.0;
  int n_max = -1;
  int quad_order = 0;
  std::vector<std::string> tau{"sigma"};
  double tau0 = 0.0;
  double nu = 0.5;
  std::string sigma = "auto";
  double kappa = 0.5;
  std::vector<double> design{1.0, std::numbers::pi / 4, 1.0, 3 * std::numbers::pi / 4};
  std::vector<double> row2{1.0, 0.0, 0.0, 0.0};
  std::string regime = "limited";
  std::string t_grid = "-3:3:0.01";
  std::string out;
  std::string format = "csv";
  unsigned threads = 0;
};

std::vector<double> parse_grid(const std::string& spec, const char* flag) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      config_error(std::string(flag) + ": '" + item + "' is not a number");
    }
  }
  if (parts.size() != 3) config_error(std::string(flag) + " expects start:stop:step");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop)) {
    config_error(std::string(flag) + ": step must be positive and bounds finite");
  }
  std::vector<double> grid;
  if (stop < start) return grid;
  const long count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (count > 10000000) config_error(std::string(flag) + " has too many points");
  for (long i = 0; i < count; ++i) grid.push_back(start + static_cast<double>(i) * step);
  return grid;
}

std::vector<double> c_values(const Options& o, std::vector<double> fallback) {
  if (!o.c.empty() && !o.c_grid.empty()) config_error("use either --c or --c-grid, not both");
  std::vector<double> grid = !o.c.empty() ? o.c : !o.c_grid.empty() ? parse_grid(o.c_grid, "--c-grid") : fallback;
  if (grid.empty()) config_error("the c grid is empty");
  for (double c : grid) {
    if (!(c > 0.0) || !std::isfinite(c)) config_error("every c must be positive (got " + round_trip(c) + ")");
  }
  return grid;
}

// Runs fn(i) for i in [0, count) on a small worker pool; results are stored
// by index so output order never depends on scheduling.
template <typename Result, typename F>
std::vector<Result> parallel_map(std::size_t count, unsigned threads, F fn) {
  std::vector<Result> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  unsigned workers = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

using Cell = std::variant<double, long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string render(const std::string& command, const json& config, const Table& table, const std::string& format) {
  std::string out;
  if (format == "csv") {
    out += "# schema_version=" + std::to_string(kSchemaVersion) + "\n";
    out += "# command=" + command + "\n";
    out += "# config=" + config.dump() + "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
    out += "\n";
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ",";
        if (const auto* d = std::get_if<double>(&row[i])) out += real(*d);
        else if (const auto* l = std::get_if<long>(&row[i])) out += std::to_string(*l);
        else out += std::get<std::string>(row[i]);
      }
      out += "\n";
    }
    return out;
  }
  out += "{\"schema_version\":" + std::to_string(kSchemaVersion);
  out += ",\"command\":" + json(command).dump();
  out += ",\"config\":" + config.dump();
  out += ",\"columns\":" + json(table.columns).dump();
  out += ",\"rows\":[";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out += r ? ",[" : "[";
    const auto& row = table.rows[r];
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      if (const auto* d = std::get_if<double>(&row[i])) out += std::isfinite(*d) ? real(*d) : "null";
      else if (const auto* l = std::get_if<long>(&row[i])) out += std::to_string(*l);
      else out += json(std::get<std::string>(row[i])).dump();
    }
    out += "]";
  }
  out += "]}\n";
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Failure{kExitIo, "cannot open '" + path + "' for writing"};
  f << text;
  f.flush();
  if (!f) throw Failure{kExitIo, "error while writing '" + path + "'"};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json tolerances(const Options& o) {
  return json{{"eigenvalue_floor", 1e-13},
              {"whole_line_marginal", 1e-12},
              {"whole_line_cap_T", 20},
              {"probability_clip", 1e-10},
              {"povm_validity", 1e-9},
              {"fisher_p_floor", 1e-12},
              {"fisher_step", "1e-5*(1+|theta|), one Richardson step"},
              {"crb_condition_cap", 1e12},
              {"tau_floor_sigma", 1e-4},
              {"threads", o.threads}};
}

void emit(const Options& o, const std::string& command, const json& config, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw Failure{kExitIo, "error while writing to standard output"};
    return;
  }
  write_file(o.out, text);
  json manifest{{"schema_version", kSchemaVersion},
                {"tool", "tfm_cli"},
                {"library_version", tfm_version_string()},
                {"command", command},
                {"config", config},
                {"tolerances", tolerances(o)},
                {"output", o.out},
                {"format", o.format},
                {"created_utc", utc_timestamp()}};
  write_file(o.out + ".manifest.json", manifest.dump(2) + "\n");
}

struct BasisHandle {
  tfm_basis* ptr = nullptr;
  BasisHandle(double c, double T, int n_max, int quad_order) { check(tfm_basis_create(c, T, n_max, quad_order, &ptr)); }
  ~BasisHandle() { tfm_basis_destroy(ptr); }
  BasisHandle(const BasisHandle&) = delete;
  BasisHandle& operator=(const BasisHandle&) = delete;
};

json common_config(const Options& o, const std::vector<double>& cs) {
  return json{{"c", cs}, {"T", o.T}, {"quad-order", o.quad_order}, {"format", o.format}};
}

void cmd_spectrum(const Options& o) {
  std::vector<double> fallback;
  for (int k : {5, 10, 20}) fallback.push_back(k * std::numbers::pi / 2);
  const auto cs = c_values(o, fallback);
  json config = common_config(o, cs);
  config["n-max"] = o.n_max;
  auto spectra = parallel_map<std::vector<double>>(cs.size(), o.threads, [&](std::size_t i) {
    BasisHandle b(cs[i], o.T, o.n_max, o.quad_order);
    tfm_basis_info info{};
    check(tfm_basis_get_info(b.ptr, &info));
    std::vector<double> lam(static_cast<std::size_t>(info.n_max + 1));
    std::size_t written = 0;
    check(tfm_basis_lambdas(b.ptr, lam.data(), lam.size(), &written));
    return lam;
  });
  Table t{{"c", "n", "lambda", "plunge_index"}, {}};
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t n = 0; n < spectra[i].size(); ++n) {
      t.rows.push_back({cs[i], static_cast<long>(n), spectra[i][n], static_cast<long>(tfm_plunge_index(cs[i]))});
    }
  }
  emit(o, "spectrum", config, render("spectrum", config, t, o.format));
}

void cmd_fig1(const Options& o) {
  const auto cs = c_values(o, {1.0, 5.0, 10.0, 20.0});
  const auto ts = parse_grid(o.t_grid, "--t-grid");
  if (ts.empty()) config_error("the t grid is empty");
  json config = common_config(o, cs);
  config["t-grid"] = o.t_grid;
  struct Curve {
    std::vector<double> psi, hg;
    double sup = 0.0;
  };
  auto curves = parallel_map<Curve>(cs.size(), o.threads, [&](std::size_t i) {
    BasisHandle b(cs[i], o.T, 2, o.quad_order);
    Curve cv;
    double overlap = 0.0;
    for (double t : ts) {
      double v = 0.0;
      check(tfm_basis_eval(b.ptr, 2, t, &v));
      // The Hermite-Gauss mode lives in units where T = 1.
      const double h = tfm_hg_eval(2, cs[i], t / o.T) / std::sqrt(o.T);
      cv.psi.push_back(v);
      cv.hg.push_back(h);
      overlap += v * h;
    }
    const double sign = overlap < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      cv.hg[k] *= sign;
      cv.sup = std::max(cv.sup, std::abs(cv.psi[k] - cv.hg[k]));
    }
    return cv;
  });
  Table t{{"c", "t", "psi2", "psi2_hg", "sup_distance"}, {}};
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t k = 0; k < ts.size(); ++k) {
      t.rows.push_back({cs[i], ts[k], curves[i].psi[k], curves[i].hg[k], curves[i].sup});
    }
  }
  emit(o, "fig1", config, render("fig1", config, t, o.format));
}

void cmd_lambda0(const Options& o) {
  const auto cs = !o.c.empty() || !o.c_grid.empty() ? c_values(o, {}) : parse_grid("0.1:10:0.1", "--c-grid");
  json config{{"c", cs}, {"format", o.format}};
  auto values = parallel_map<double>(cs.size(), o.threads, [&](std::size_t i) {
    double v = 0.0;
    check(tfm_lambda0_curve(&cs[i], 1, &v));
    return v;
  });
  Table t{{"c", "lambda0"}, {}};
  for (std::size_t i = 0; i < cs.size(); ++i) t.rows.push_back({cs[i], values[i]});
  emit(o, "lambda0", config, render("lambda0", config, t, o.format));
}

tfm_regime parse_regime(const std::string& name) {
  if (name == "ideal") return TFM_REGIME_IDEAL;
  if (name == "limited") return TFM_REGIME_LIMITED;
  if (name == "truncated") return TFM_REGIME_TRUNCATED;
  config_error("--regime must be ideal, limited or truncated");
}

double parse_number(const std::string& s, const char* flag) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  config_error(std::string(flag) + ": '" + s + "' is not a number");
}

void cmd_superres(const Options& o) {
  const auto cs = c_values(o, {1.0, 2.0, 5.0, 10.0});
  const tfm_regime regime = parse_regime(o.regime);
  if (o.design.size() != 4) config_error("--design expects r1,phi1,r2,phi2");
  if (o.row2.size() != 4) config_error("--row2 expects four entries");
  if (o.tau.empty()) config_error("--tau needs at least one value");
  std::vector<std::optional<double>> taus;
  for (const auto& s : o.tau) taus.push_back(s == "sigma" ? std::nullopt : std::optional(parse_number(s, "--tau")));
  std::optional<double> sigma;
  if (o.sigma != "auto") sigma = parse_number(o.sigma, "--sigma");

  json config = common_config(o, cs);
  config["tau"] = o.tau;
  config["tau0"] = o.tau0;
  config["nu"] = o.nu;
  config["sigma"] = o.sigma;
  config["kappa"] = o.kappa;
  config["design"] = o.design;
  config["row2"] = o.row2;
  config["regime"] = o.regime;

  struct Point {
    double c;
    std::optional<double> tau;
  };
  std::vector<Point> points;
  for (double c : cs) {
    for (const auto& tau : taus) points.push_back({c, tau});
  }
  auto results = parallel_map<tfm_superres_result>(points.size(), o.threads, [&](std::size_t i) {
    tfm_superres_config cfg;
    tfm_superres_config_init(&cfg);
    cfg.c = points[i].c;
    cfg.T = o.T;
    cfg.has_tau = points[i].tau.has_value();
    cfg.tau = points[i].tau.value_or(0.0);
    cfg.tau0 = o.tau0;
    cfg.nu = o.nu;
    cfg.has_sigma = sigma.has_value();
    cfg.sigma = sigma.value_or(0.0);
    cfg.kappa = o.kappa;
    cfg.r1 = o.design[0];
    cfg.phi1 = o.design[1];
    cfg.r2 = o.design[2];
    cfg.phi2 = o.design[3];
    for (int k = 0; k < 4; ++k) cfg.row2[k] = o.row2[static_cast<std::size_t>(k)];
    cfg.regime = regime;
    cfg.quad_order = o.quad_order;
    tfm_superres_result r{};
    check(tfm_superres_evaluate(&cfg, &r));
    return r;
  });
  Table t{{"c", "tau", "tau0", "nu", "sigma", "regime", "A_ideal", "A_limited", "bound_phi2", "bound_lambda0",
           "F_tautau", "F_tautau0", "F_taunu", "F_tau0tau0", "F_tau0nu", "F_nunu", "crb_tau", "crb_tau0", "crb_nu",
           "singular", "crb_tau_only", "p0", "p1", "p2", "p_leak", "retained_energy", "basis_size"},
          {}};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& r = results[i];
    t.rows.push_back({points[i].c, r.tau, o.tau0, o.nu, r.sigma, o.regime, r.A_ideal, r.A_limited, r.bound_phi2,
                      r.bound_lambda0, r.fisher[0], r.fisher[1], r.fisher[2], r.fisher[4], r.fisher[5], r.fisher[8],
                      r.crb[0], r.crb[1], r.crb[2], static_cast<long>(r.singular),
                      r.fisher[0] > 0.0 ? 1.0 / std::sqrt(r.fisher[0]) : std::nan(""), r.probabilities[0],
                      r.probabilities[1], r.probabilities[2], r.probabilities[3], r.retained_energy,
                      static_cast<long>(r.basis_size)});
  }
  emit(o, "superres", config, render("superres", config, t, o.format));
}

void cmd_basis(const Options& o) {
  const auto cs = c_values(o, {});
  if (cs.size() != 1) config_error("basis takes exactly one c value");
  if (o.format != "json") config_error("basis output is JSON only (--format json)");
  json config = common_config(o, cs);
  config["n-max"] = o.n_max;
  BasisHandle b(cs[0], o.T, o.n_max, o.quad_order);
  char* text = nullptr;
  check(tfm_basis_to_json(b.ptr, &text));
  std::string doc(text);
  tfm_free_string(text);
  // Splice the resolved command configuration into the basis document.
  doc.insert(doc.find_last_of('}'), ",\"command\":\"basis\",\"config\":" + config.dump());
  emit(o, "basis", config, doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-frequency metrology under finite bandwidth and measurement time"};
  app.config_formatter(std::make_shared<ManifestConfig>());
  app.set_config("--config", "", "flat key=value file or a run manifest; flags override it");
  app.require_subcommand(1);

  Options o;
  app.add_option("--c", o.c, "Slepian frequencies c = Omega T")->delimiter(',');
  app.add_option("--c-grid", o.c_grid, "c grid as start:stop:step");
  app.add_option("--T", o.T, "half-length of the time window");
  app.add_option("--n-max", o.n_max, "highest index (negative: all resolvable)");
  app.add_option("--quad-order", o.quad_order, "Nystrom order (0: default)");
  app.add_option("--tau", o.tau, "pulse separations, or 'sigma'")->delimiter(',');
  app.add_option("--tau0", o.tau0, "pulse centroid");
  app.add_option("--nu", o.nu, "relative intensity in [0, 1]");
  app.add_option("--sigma", o.sigma, "Gaussian width, or 'auto' for T/sqrt(2 c kappa)");
  app.add_option("--kappa", o.kappa, "margin in the default sigma");
  app.add_option("--design", o.design, "sphere design r1,phi1,r2,phi2")->delimiter(',');
  app.add_option("--row2", o.row2, "third POVM row C20,C21,C22,C23")->delimiter(',');
  app.add_option("--regime", o.regime, "ideal|limited|truncated");
  app.add_option("--t-grid", o.t_grid, "time grid for fig1 as start:stop:step");
  app.add_option("--out", o.out, "output file (a manifest is written next to it)");
  app.add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", o.threads, "worker threads (0: hardware)");

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalue table (c, n, lambda_n)");
  auto* fig1 = app.add_subcommand("fig1", "psi_2 against the second Hermite-Gauss mode");
  auto* lambda0 = app.add_subcommand("lambda0", "largest eigenvalue over a c grid");
  auto* superres = app.add_subcommand("superres", "two-pulse superresolution sweep");
  auto* basis = app.add_subcommand("basis", "serialize a computed basis as JSON");
  for (auto* sub : {spectrum, fig1, lambda0, superres, basis}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*spectrum) cmd_spectrum(o);
    else if (*fig1) cmd_fig1(o);
    else if (*lambda0) cmd_lambda0(o);
    else if (*superres) cmd_superres(o);
    else if (*basis) cmd_basis(o);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
