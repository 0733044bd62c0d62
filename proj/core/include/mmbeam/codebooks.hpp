#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmbeam/array_channel.hpp"

namespace mmbeam {

enum class CodebookKind { directional, sounding, concatenated };

std::string to_string(CodebookKind kind);
CodebookKind codebook_kind_from_string(const std::string& s);

// Ordered collection of AWVs. Directional codebooks carry one steering angle
// per codeword (strictly increasing); sounding codebooks carry the seed that
// generated them.
struct Codebook {
  CodebookKind kind = CodebookKind::directional;
  int n_elements = 0;
  std::vector<Awv> codewords;
  std::vector<double> angles_deg;     // directional only
  std::optional<std::uint64_t> seed;  // sounding only

  int size() const { return static_cast<int>(codewords.size()); }
  void validate() const;
};

// a(angle)/sqrt(N); unit Euclidean norm.
Awv steering_codeword(const ArrayGeometry& geometry, double angle_deg);

// K steering codewords uniformly spaced in physical angle over
// [angle_min, angle_max], endpoints included.
Codebook dft_codebook(const ArrayGeometry& geometry, int k,
                      double angle_min_deg, double angle_max_deg);

// M0 pseudo-random codewords: every element has magnitude 1/sqrt(N) and a
// phase drawn from {0, pi/2, pi, 3pi/2} by a counter-based hash of
// (seed, codeword, element), so the codebook is identical across platforms.
Codebook pn_codebook(const ArrayGeometry& geometry, int m0, std::uint64_t seed);

// Directional codewords first (0..K-1), sounding next (K..K+M0-1).
Codebook concat_codebook(const Codebook& directional, const Codebook& sounding);

// Format: {kind, n_elements, angles_deg?, codewords: [[[re,im],...],...], seed?}.
// Codeword order is part of the contract.
std::string codebook_to_json(const Codebook& codebook);
Codebook codebook_from_json(const std::string& text);

}  // namespace mmbeam
