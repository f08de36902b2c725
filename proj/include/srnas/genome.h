// Copyright 2026 The srnas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SRNAS_GENOME_H_
#define SRNAS_GENOME_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"
#include "srnas/random.h"

namespace srnas {

enum class ConvKind : std::uint8_t {
  kConv2D = 0,
  kGroupConvG2 = 1,
  kGroupConvG4 = 2,
  kInvertedBottleneckE2 = 3,
};

inline constexpr std::array<ConvKind, 4> kConvKinds = {
    ConvKind::kConv2D, ConvKind::kGroupConvG2, ConvKind::kGroupConvG4,
    ConvKind::kInvertedBottleneckE2};
inline constexpr std::array<int, 4> kChannelChoices = {16, 32, 48, 64};
inline constexpr std::array<int, 2> kKernelChoices = {1, 3};
inline constexpr std::array<int, 3> kRepeatChoices = {1, 2, 4};
inline constexpr std::size_t kNumOperators = 192;

// Token prefix used in the text format ("conv", "groupConG2", ...).
std::string_view ConvKindToken(ConvKind kind);
int GroupCount(ConvKind kind);

// One cell block: the operator chosen from the 192-member micro space.
struct CellGene {
  ConvKind conv_kind = ConvKind::kConv2D;
  int channels = 16;
  int kernel = 1;
  bool residual = false;
  int repeats = 1;

  friend bool operator==(const CellGene&, const CellGene&) = default;
  friend auto operator<=>(const CellGene&, const CellGene&) = default;
};

bool IsValid(const CellGene& gene);

// Position of `gene` in OperatorSet(); gene must be valid.
std::size_t OperatorIndex(const CellGene& gene);

// The full micro space in canonical lexicographic order over
// (conv_kind, channels, kernel, residual, repeats).
const std::vector<CellGene>& OperatorSet();

// Number of macro bits for n cells: n(n+1)/2.
constexpr std::size_t MacroBitCount(std::size_t n) { return n * (n + 1) / 2; }

// Flat index of c_i^j, 1-based i <= j <= n, in the row-major triangular layout.
constexpr std::size_t MacroIndex(std::size_t n, std::size_t i, std::size_t j) {
  const std::size_t offset = (i - 1) * n - (i - 1) * (i - 2) / 2;
  return offset + (j - i);
}

// Triangular connection bit-field between cell inputs and later cells.
class MacroGenome {
 public:
  MacroGenome() = default;
  explicit MacroGenome(std::size_t n) : n_(n), bits_(MacroBitCount(n), 0) {}
  MacroGenome(std::size_t n, std::vector<std::uint8_t> bits);

  std::size_t n() const { return n_; }
  std::size_t size() const { return bits_.size(); }

  // c_i^j with 1-based i <= j.
  bool Get(std::size_t i, std::size_t j) const {
    return bits_[MacroIndex(n_, i, j)] != 0;
  }
  void Set(std::size_t i, std::size_t j, bool value) {
    bits_[MacroIndex(n_, i, j)] = value ? 1 : 0;
  }

  bool bit(std::size_t flat) const { return bits_.at(flat) != 0; }
  void set_bit(std::size_t flat, bool value) { bits_.at(flat) = value ? 1 : 0; }
  void flip(std::size_t flat) { bits_.at(flat) ^= 1; }

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t PopCount() const;

  std::string ToBitString() const;

  friend bool operator==(const MacroGenome&, const MacroGenome&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Chromosome {
  std::vector<CellGene> micro;
  MacroGenome macro;

  std::size_t n() const { return micro.size(); }

  friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

bool IsValid(const Chromosome& c);

struct Constraints {
  double min_score = 25.0;
  double max_mult_adds = 300e9;
};

struct SearchConfig {
  int n = 7;
  int population_size = 64;
  double p_r = 0.3;
  double p_den = 0.3;
  double p_mr = 0.6;
  double p_mf = 0.8;
  Constraints constraints;
  std::uint64_t rng_seed = 0;

  // Throws std::invalid_argument naming the violated bound.
  void Validate() const;
};

// 192^n * 2^(n(n+1)/2), exact.
boost::multiprecision::cpp_int SpaceSize(unsigned n);

Chromosome SampleRandom(std::size_t n, Rng& rng);

class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& token, const std::string& what)
      : std::runtime_error("bad token '" + token + "': " + what),
        token_(token) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

// `<kind>_f<channels>_k<kernel>_b<repeats>_<isskip|noskip>`
std::string EncodeGene(const CellGene& gene);
CellGene DecodeGene(std::string_view token);

// One gene token per line, then `macro=<bits>`.
std::string Encode(const Chromosome& c);
Chromosome Decode(std::string_view text);

// Single-line key used for archive lookup and caching: tokens joined by ';'
// followed by '|' and the macro bits.
std::string EncodeKey(const Chromosome& c);
Chromosome DecodeKey(std::string_view key);

nlohmann::json ToJson(const CellGene& gene);
nlohmann::json ToJson(const Chromosome& c);
Chromosome ChromosomeFromJson(const nlohmann::json& j);

}  // namespace srnas

#endif  // SRNAS_GENOME_H_
