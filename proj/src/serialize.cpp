#include "tfm/serialize.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tfm/error.hpp"

namespace tfm {

namespace {

using nlohmann::json;

template <typename Range>
void append_array(std::string& out, const Range& values) {
  out += '[';
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    out += format_real(v);
    first = false;
  }
  out += ']';
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw_invalid(std::string("malformed ") + what + " document: " + e.what());
  }
}

void check_schema(const json& doc, const char* what) {
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw_invalid(std::string(what) + " document has no schema_version");
  }
  const int version = doc.at("schema_version").get<int>();
  if (version != kSchemaVersion) {
    throw_invalid(std::string(what) + " schema_version " + std::to_string(version) + " is not supported");
  }
}

std::string outcome_label(Eigen::Index i, Eigen::Index count) {
  return i + 1 == count ? std::string("leakage") : "outcome" + std::to_string(i);
}

std::vector<std::string> parameter_labels(const FisherMatrix& f) {
  if (static_cast<Eigen::Index>(f.labels.size()) == f.matrix.rows()) return f.labels;
  std::vector<std::string> out;
  for (Eigen::Index n = 0; n < f.matrix.rows(); ++n) out.push_back("theta" + std::to_string(n));
  return out;
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", value);
  return buf;
}

std::string basis_to_json(const ProlateBasis& basis) {
  std::string out = "{\"schema_version\":" + std::to_string(kSchemaVersion);
  out += ",\"c\":" + format_real(basis.params().c());
  out += ",\"T\":" + format_real(basis.params().T());
  out += ",\"n_max\":" + std::to_string(basis.n_max());
  out += ",\"quad_order\":" + std::to_string(basis.quad_order());
  out += ",\"sign_convention\":\"" + std::string(ProlateBasis::kSignConvention) + "\"";
  out += ",\"lambdas\":";
  append_array(out, basis.lambdas());
  out += ",\"nodes\":";
  append_array(out, basis.nodes());
  out += ",\"weights\":";
  append_array(out, basis.weights());
  out += ",\"samples\":[";
  for (int n = 0; n < basis.size(); ++n) {
    if (n > 0) out += ',';
    const Eigen::VectorXd col = basis.samples().col(n);
    append_array(out, std::vector<double>(col.data(), col.data() + col.size()));
  }
  out += "]}\n";
  return out;
}

ProlateBasis basis_from_json(const std::string& text) {
  const json doc = parse(text, "basis");
  check_schema(doc, "basis");
  try {
    const auto params = SlepianParams::from_c(doc.at("c").get<double>(), doc.at("T").get<double>());
    auto lambdas = doc.at("lambdas").get<std::vector<double>>();
    auto nodes = doc.at("nodes").get<std::vector<double>>();
    auto weights = doc.at("weights").get<std::vector<double>>();
    const auto& rows = doc.at("samples");
    if (doc.at("n_max").get<int>() + 1 != static_cast<int>(lambdas.size())) {
      throw_invalid("basis n_max disagrees with the number of eigenvalues");
    }
    if (doc.at("quad_order").get<int>() != static_cast<int>(nodes.size())) {
      throw_invalid("basis quad_order disagrees with the number of nodes");
    }
    if (rows.size() != lambdas.size()) throw_invalid("basis samples must hold one array per eigenvalue");
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(lambdas.size()));
    for (std::size_t n = 0; n < rows.size(); ++n) {
      const auto col = rows[n].get<std::vector<double>>();
      if (col.size() != nodes.size()) throw_invalid("basis sample array has the wrong length");
      for (std::size_t j = 0; j < col.size(); ++j) samples(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n)) = col[j];
    }
    return ProlateBasis::from_parts(params, std::move(nodes), std::move(weights), std::move(lambdas),
                                    std::move(samples));
  } catch (const json::exception& e) {
    throw_invalid(std::string("basis document: ") + e.what());
  }
}

std::string bandlimited_to_json(const BandlimitedFunction& g) {
  std::string out = "{\"schema_version\":" + std::to_string(kSchemaVersion);
  out += ",\"c\":" + format_real(g.params.c());
  out += ",\"T\":" + format_real(g.params.T());
  out += ",\"coeffs\":";
  append_array(out, std::vector<double>(g.coeffs.data(), g.coeffs.data() + g.coeffs.size()));
  out += "}\n";
  return out;
}

BandlimitedFunction bandlimited_from_json(const std::string& text) {
  const json doc = parse(text, "bandlimited function");
  check_schema(doc, "bandlimited function");
  try {
    const auto coeffs = doc.at("coeffs").get<std::vector<double>>();
    BandlimitedFunction g{SlepianParams::from_c(doc.at("c").get<double>(), doc.at("T").get<double>()),
                          Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()))};
    return g;
  } catch (const json::exception& e) {
    throw_invalid(std::string("bandlimited function document: ") + e.what());
  }
}

std::string probabilities_to_csv(const Eigen::VectorXd& p) {
  std::string out = "index,label,probability\n";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    out += std::to_string(i) + "," + outcome_label(i, p.size()) + "," + format_real(p[i]) + "\n";
  }
  return out;
}

std::string probabilities_to_json(const Eigen::VectorXd& p) {
  std::string out = "{\"schema_version\":" + std::to_string(kSchemaVersion) + ",\"labels\":[";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i > 0) out += ',';
    out += "\"" + outcome_label(i, p.size()) + "\"";
  }
  out += "],\"probabilities\":";
  append_array(out, std::vector<double>(p.data(), p.data() + p.size()));
  out += "}\n";
  return out;
}

std::string fisher_to_csv(const FisherMatrix& f) {
  const auto labels = parameter_labels(f);
  std::string out = "parameter";
  for (const auto& l : labels) out += "," + l;
  out += "\n";
  for (Eigen::Index r = 0; r < f.matrix.rows(); ++r) {
    out += labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < f.matrix.cols(); ++c) out += "," + format_real(f.matrix(r, c));
    out += "\n";
  }
  return out;
}

std::string fisher_to_json(const FisherMatrix& f) {
  const auto labels = parameter_labels(f);
  std::string out = "{\"schema_version\":" + std::to_string(kSchemaVersion) + ",\"labels\":[";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += ',';
    out += "\"" + labels[i] + "\"";
  }
  out += "],\"steps\":";
  append_array(out, f.steps);
  out += ",\"excluded_outcomes\":[";
  for (std::size_t i = 0; i < f.excluded_outcomes.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(f.excluded_outcomes[i]);
  }
  out += "],\"matrix\":[";
  for (Eigen::Index r = 0; r < f.matrix.rows(); ++r) {
    if (r > 0) out += ',';
    const Eigen::RowVectorXd row = f.matrix.row(r);
    append_array(out, std::vector<double>(row.data(), row.data() + row.size()));
  }
  out += "]}\n";
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for reading: " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "error while reading '" + path + "'");
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing: " + std::strerror(errno));
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "error while writing '" + path + "'");
}

void save_basis(const ProlateBasis& basis, const std::string& path) { write_text_file(path, basis_to_json(basis)); }

ProlateBasis load_basis(const std::string& path) { return basis_from_json(read_text_file(path)); }

}  // namespace tfm
