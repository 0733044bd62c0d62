#include "mmbeam/codebooks.hpp"

#include "json.hpp"

#include <cmath>
#include <stdexcept>

#include "mmbeam/rng.hpp"

namespace mmbeam {

namespace {
using json = nlohmann::ordered_json;
}

std::string to_string(CodebookKind kind) {
  switch (kind) {
    case CodebookKind::directional: return "directional";
    case CodebookKind::sounding: return "sounding";
    case CodebookKind::concatenated: return "concatenated";
  }
  throw std::logic_error("unknown CodebookKind");
}

CodebookKind codebook_kind_from_string(const std::string& s) {
  if (s == "directional") return CodebookKind::directional;
  if (s == "sounding") return CodebookKind::sounding;
  if (s == "concatenated") return CodebookKind::concatenated;
  throw std::invalid_argument("unknown codebook kind: " + s);
}

void Codebook::validate() const {
  for (const auto& w : codewords)
    if (w.size() != n_elements)
      throw std::invalid_argument("Codebook: codeword length mismatch");
  if (kind == CodebookKind::directional) {
    if (angles_deg.size() != codewords.size())
      throw std::invalid_argument("Codebook: directional codebooks need one angle per codeword");
    for (std::size_t i = 1; i < angles_deg.size(); ++i)
      if (!(angles_deg[i] > angles_deg[i - 1]))
        throw std::invalid_argument("Codebook: angles must be strictly increasing");
  }
}

Awv steering_codeword(const ArrayGeometry& geometry, double angle_deg) {
  return array_response(geometry, angle_deg) /
         std::sqrt(static_cast<double>(geometry.n_elements));
}

Codebook dft_codebook(const ArrayGeometry& geometry, int k,
                      double angle_min_deg, double angle_max_deg) {
  geometry.validate();
  if (k < 2) throw std::invalid_argument("dft_codebook: K must be >= 2");
  if (!(angle_min_deg < angle_max_deg))
    throw std::invalid_argument("dft_codebook: angle_min must be < angle_max");

  Codebook cb;
  cb.kind = CodebookKind::directional;
  cb.n_elements = geometry.n_elements;
  cb.codewords.reserve(k);
  cb.angles_deg.reserve(k);
  const double step = (angle_max_deg - angle_min_deg) / (k - 1);
  for (int i = 0; i < k; ++i) {
    const double angle = (i == k - 1) ? angle_max_deg : angle_min_deg + step * i;
    cb.angles_deg.push_back(angle);
    cb.codewords.push_back(steering_codeword(geometry, angle));
  }
  return cb;
}

Codebook pn_codebook(const ArrayGeometry& geometry, int m0, std::uint64_t seed) {
  geometry.validate();
  if (m0 < 1) throw std::invalid_argument("pn_codebook: M0 must be >= 1");

  const double mag = 1.0 / std::sqrt(static_cast<double>(geometry.n_elements));
  Codebook cb;
  cb.kind = CodebookKind::sounding;
  cb.n_elements = geometry.n_elements;
  cb.seed = seed;
  cb.codewords.reserve(m0);
  for (int m = 0; m < m0; ++m) {
    Awv w(geometry.n_elements);
    const std::uint64_t row = hash_combine(seed, static_cast<std::uint64_t>(m));
    for (int n = 0; n < geometry.n_elements; ++n) {
      // Exact quadrature values, not polar(), so the phase set is exact.
      switch (hash_combine(row, static_cast<std::uint64_t>(n)) & 3u) {
        case 0: w(n) = {mag, 0.0}; break;
        case 1: w(n) = {0.0, mag}; break;
        case 2: w(n) = {-mag, 0.0}; break;
        default: w(n) = {0.0, -mag}; break;
      }
    }
    cb.codewords.push_back(std::move(w));
  }
  return cb;
}

Codebook concat_codebook(const Codebook& directional, const Codebook& sounding) {
  if (!sounding.codewords.empty() && !directional.codewords.empty() &&
      directional.n_elements != sounding.n_elements)
    throw std::invalid_argument("concat_codebook: codeword length mismatch");

  Codebook cb;
  cb.kind = CodebookKind::concatenated;
  cb.n_elements = directional.codewords.empty() ? sounding.n_elements
                                                : directional.n_elements;
  cb.codewords = directional.codewords;
  cb.codewords.insert(cb.codewords.end(), sounding.codewords.begin(),
                      sounding.codewords.end());
  return cb;
}

std::string codebook_to_json(const Codebook& codebook) {
  json j;
  j["kind"] = to_string(codebook.kind);
  j["n_elements"] = codebook.n_elements;
  if (codebook.kind == CodebookKind::directional)
    j["angles_deg"] = codebook.angles_deg;
  json words = json::array();
  for (const auto& w : codebook.codewords) {
    json word = json::array();
    for (Eigen::Index n = 0; n < w.size(); ++n)
      word.push_back({w(n).real(), w(n).imag()});
    words.push_back(std::move(word));
  }
  j["codewords"] = std::move(words);
  if (codebook.seed) j["seed"] = *codebook.seed;
  return j.dump();
}

Codebook codebook_from_json(const std::string& text) {
  const json j = json::parse(text);
  Codebook cb;
  cb.kind = codebook_kind_from_string(j.at("kind").get<std::string>());
  cb.n_elements = j.at("n_elements").get<int>();
  if (j.contains("angles_deg"))
    cb.angles_deg = j.at("angles_deg").get<std::vector<double>>();
  for (const auto& word : j.at("codewords")) {
    Awv w(static_cast<Eigen::Index>(word.size()));
    for (std::size_t n = 0; n < word.size(); ++n)
      w(static_cast<Eigen::Index>(n)) = std::complex<double>(
          word[n].at(0).get<double>(), word[n].at(1).get<double>());
    cb.codewords.push_back(std::move(w));
  }
  if (j.contains("seed")) cb.seed = j.at("seed").get<std::uint64_t>();
  cb.validate();
  return cb;
}

}  // namespace mmbeam
