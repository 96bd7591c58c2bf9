#include "tdb/rules.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tdb/error.hpp"

namespace tdb {

namespace {

DenseMatrix w2_transposed(const CoreTensor& core) {
  const auto& s = core.values.shape();
  if (s[0] != core.parts || s[1] != core.parts || s[2] != core.parts)
    throw ShapeError("core tensor is not P x P x P");
  return unfold(core.values, 2).transpose();
}

DenseMatrix combine(const DenseMatrix& a, const DenseMatrix& b, double sign) {
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) + sign * b(r, c);
  return out;
}

std::vector<std::vector<double>> null_space(const DenseMatrix& m) {
  const std::size_t rank = numerical_rank(m);
  const FullRightSvd svd = right_singular_basis(m);
  std::vector<std::vector<double>> basis;
  for (std::size_t c = rank; c < m.cols(); ++c) {
    std::vector<double> v(m.cols());
    for (std::size_t r = 0; r < m.cols(); ++r) v[r] = svd.v(r, c);
    basis.push_back(std::move(v));
  }
  return basis;
}

std::vector<std::vector<double>> witnesses(const CoreTensor& core, double sign) {
  const DenseMatrix w2t = w2_transposed(core);
  const DenseMatrix sw = multiply(swap_matrix(core.parts), w2t);
  return null_space(combine(w2t, sw, sign));
}

}  // namespace

DenseMatrix swap_matrix(std::size_t parts) {
  if (parts == 0) throw ConfigError("swap matrix needs P >= 1");
  DenseMatrix s(parts * parts, parts * parts);
  for (std::size_t i = 0; i < parts; ++i)
    for (std::size_t j = 0; j < parts; ++j) s(i * parts + j, j * parts + i) = 1.0;
  return s;
}

LearnabilityReport learnability_report(const CoreTensor& core, bool tied) {
  const DenseMatrix w2t = w2_transposed(core);
  const DenseMatrix sw = multiply(swap_matrix(core.parts), w2t);
  LearnabilityReport r;
  r.parts = core.parts;
  r.rank_sym = numerical_rank(combine(w2t, sw, -1.0));
  r.rank_anti = numerical_rank(combine(w2t, sw, 1.0));
  r.rank_w2 = numerical_rank(w2t);
  r.rank_concat = numerical_rank(hconcat(w2t, sw));
  r.symmetry = r.rank_sym < r.parts;
  r.antisymmetry = r.rank_anti < r.parts;
  r.inverse = r.rank_w2 == r.rank_concat;
  if (!tied)
    r.caveat =
        "the rank conditions assume shared head/tail embeddings; this model keeps separate "
        "head and tail tables, so the verdicts describe its tied variant";
  return r;
}

std::vector<std::vector<double>> symmetry_witnesses(const CoreTensor& core) {
  return witnesses(core, -1.0);
}

std::vector<std::vector<double>> antisymmetry_witnesses(const CoreTensor& core) {
  return witnesses(core, 1.0);
}

std::vector<double> inverse_witness(const CoreTensor& core, std::span<const double> r) {
  if (r.size() != core.parts) throw ShapeError("relation block length must equal P");
  const DenseMatrix w2t = w2_transposed(core);
  const DenseMatrix sw = multiply(swap_matrix(core.parts), w2t);
  DenseMatrix rv(core.parts, 1, std::vector<double>(r.begin(), r.end()));
  const DenseMatrix target = multiply(w2t, rv);
  // Pseudo-inverse solve through the compact SVD of S W2^T.
  const CompactSvd svd = compact_svd(sw);
  std::vector<double> out(core.parts, 0.0);
  for (std::size_t q = 0; q < svd.rank(); ++q) {
    double proj = 0.0;
    for (std::size_t i = 0; i < target.rows(); ++i) proj += svd.u(i, q) * target(i, 0);
    proj /= svd.sigma[q];
    for (std::size_t i = 0; i < core.parts; ++i) out[i] += svd.v(i, q) * proj;
  }
  return out;
}

std::string LearnabilityReport::to_json() const {
  nlohmann::ordered_json j;
  j["parts"] = parts;
  j["rank_sym"] = rank_sym;
  j["rank_anti"] = rank_anti;
  j["rank_w2"] = rank_w2;
  j["rank_concat"] = rank_concat;
  j["symmetry"] = symmetry;
  j["antisymmetry"] = antisymmetry;
  j["inverse"] = inverse;
  if (!caveat.empty()) j["caveat"] = caveat;
  return j.dump();
}

std::string LearnabilityReport::to_text() const {
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  std::ostringstream out;
  out << "parts          " << parts << '\n'
      << "rank_sym       " << rank_sym << '\n'
      << "rank_anti      " << rank_anti << '\n'
      << "rank_w2        " << rank_w2 << '\n'
      << "rank_concat    " << rank_concat << '\n'
      << "symmetry       " << yn(symmetry) << '\n'
      << "antisymmetry   " << yn(antisymmetry) << '\n'
      << "inverse        " << yn(inverse) << '\n';
  if (!caveat.empty()) out << "note: " << caveat << '\n';
  return out.str();
}

CoreTensor parse_core_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("core file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("parts") || !j.contains("values"))
    throw ParseError("core file must be an object with 'parts' and 'values'");
  if (!j["parts"].is_number_integer() || j["parts"].get<long long>() <= 0)
    throw ParseError("core 'parts' must be a positive integer");
  const auto p = static_cast<std::size_t>(j["parts"].get<long long>());
  if (p > 256) throw ParseError("core 'parts' is implausibly large");
  const auto& vals = j["values"];
  if (!vals.is_array() || vals.size() != p * p * p)
    throw ParseError("core 'values' must be an array of P^3 = " + std::to_string(p * p * p) +
                     " numbers");
  std::vector<double> v;
  v.reserve(vals.size());
  for (const auto& e : vals) {
    if (!e.is_number()) throw ParseError("core 'values' must contain only numbers");
    const double d = e.get<double>();
    if (!std::isfinite(d)) throw ParseError("core 'values' must be finite");
    v.push_back(d);
  }
  CoreTensor core;
  core.parts = p;
  core.values = DenseTensor3({p, p, p}, std::move(v));
  core.trainable = false;
  return core;
}

CoreTensor load_core_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open core file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_core_json(ss.str());
}

}  // namespace tdb
