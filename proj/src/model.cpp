#include "nino/model.hpp"

namespace nino {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::additive: return "additive";
    case ModelKind::multiplicative: return "multiplicative";
    case ModelKind::mixed: return "mixed";
  }
  return "additive";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "additive") return ModelKind::additive;
  if (s == "multiplicative") return ModelKind::multiplicative;
  if (s == "mixed") return ModelKind::mixed;
  throw DataError("unknown model kind '" + s + "' (expected additive|multiplicative|mixed)");
}

int OperatorSet::dim() const {
  return std::visit([](const auto& m) { return static_cast<int>(m.rows()); }, a);
}

Eigen::VectorXd OperatorSet::lift(const Eigen::VectorXd& x) const {
  if (!has_basis()) return x;
  if (x.size() != basis.cols()) throw DataError("OperatorSet::lift: reduced size mismatch");
  return basis * x;
}

Eigen::VectorXd OperatorSet::reduce(const Eigen::VectorXd& x) const {
  if (!has_basis()) return x;
  if (x.size() != basis.rows()) throw DataError("OperatorSet::reduce: full-space size mismatch");
  return basis.transpose() * x;
}

void OperatorSet::validate() const {
  const int n = dim();
  const int ncols = std::visit([](const auto& m) { return static_cast<int>(m.cols()); }, a);
  if (n != ncols) throw DataError("OperatorSet: drift must be square");
  if (kind == ModelKind::additive) {
    if (s.size() == 0 || s.rows() != n)
      throw DataError("OperatorSet: additive kind needs S with matching rows");
  }
  if (kind == ModelKind::multiplicative || kind == ModelKind::mixed) {
    if (s1.rows() != n || s1.cols() != n)
      throw DataError("OperatorSet: multiplicative kind needs square S1 of matching size");
  }
  if (kind == ModelKind::mixed) {
    if (s2.size() == 0 || s2.rows() != n)
      throw DataError("OperatorSet: mixed kind needs S2 with matching rows");
  }
  if (has_basis() && basis.cols() != n)
    throw DataError("OperatorSet: basis column count must match the reduced dimension");
}

}  // namespace nino
