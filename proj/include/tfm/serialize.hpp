#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tfm/bandlimited.hpp"
#include "tfm/metrology.hpp"
#include "tfm/pswf.hpp"

namespace tfm {

inline constexpr int kSchemaVersion = 1;

/// %.16e (17 significant digits); non-finite values become "nan", "inf", "-inf".
std::string format_real(double value);

std::string basis_to_json(const ProlateBasis& basis);
ProlateBasis basis_from_json(const std::string& text);

std::string bandlimited_to_json(const BandlimitedFunction& g);
BandlimitedFunction bandlimited_from_json(const std::string& text);

/// One row per outcome: index,label,probability. The last row is the leakage element.
std::string probabilities_to_csv(const Eigen::VectorXd& p);
std::string probabilities_to_json(const Eigen::VectorXd& p);

/// Header row of labels, then one row per matrix row.
std::string fisher_to_csv(const FisherMatrix& f);
std::string fisher_to_json(const FisherMatrix& f);

/// Whole-file helpers; failures raise ErrorCode::kIo.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

void save_basis(const ProlateBasis& basis, const std::string& path);
ProlateBasis load_basis(const std::string& path);

}  // namespace tfm
