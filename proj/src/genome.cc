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

#include "srnas/genome.h"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace srnas {

namespace {

template <typename T, std::size_t N>
int IndexOf(const std::array<T, N>& values, T v) {
  for (std::size_t k = 0; k < N; ++k) {
    if (values[k] == v) return static_cast<int>(k);
  }
  return -1;
}

std::vector<std::string_view> Split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r' || s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

// Parses "<prefix><digits>" and returns the integer, or -1.
int ParseField(std::string_view field, char prefix) {
  if (field.size() < 2 || field[0] != prefix) return -1;
  int value = 0;
  const char* first = field.data() + 1;
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return -1;
  return value;
}

std::vector<std::uint8_t> ParseBits(std::string_view bits) {
  std::vector<std::uint8_t> out;
  out.reserve(bits.size());
  for (char ch : bits) {
    if (ch != '0' && ch != '1') {
      throw DecodeError(std::string(bits), "macro bits must be 0/1");
    }
    out.push_back(ch == '1' ? 1 : 0);
  }
  return out;
}

Chromosome Assemble(std::vector<CellGene> micro, std::string_view bits) {
  const std::size_t n = micro.size();
  if (n == 0) throw DecodeError("", "chromosome has no cells");
  auto parsed = ParseBits(bits);
  if (parsed.size() != MacroBitCount(n)) {
    std::ostringstream msg;
    msg << "expected " << MacroBitCount(n) << " macro bits for " << n
        << " cells, got " << parsed.size();
    throw DecodeError("macro=" + std::string(bits), msg.str());
  }
  return Chromosome{std::move(micro), MacroGenome(n, std::move(parsed))};
}

}  // namespace

std::string_view ConvKindToken(ConvKind kind) {
  switch (kind) {
    case ConvKind::kConv2D:
      return "conv";
    case ConvKind::kGroupConvG2:
      return "groupConG2";
    case ConvKind::kGroupConvG4:
      return "groupConG4";
    case ConvKind::kInvertedBottleneckE2:
      return "invertBotConE2";
  }
  return "?";
}

int GroupCount(ConvKind kind) {
  switch (kind) {
    case ConvKind::kGroupConvG2:
      return 2;
    case ConvKind::kGroupConvG4:
      return 4;
    default:
      return 1;
  }
}

bool IsValid(const CellGene& gene) {
  return IndexOf(kConvKinds, gene.conv_kind) >= 0 &&
         IndexOf(kChannelChoices, gene.channels) >= 0 &&
         IndexOf(kKernelChoices, gene.kernel) >= 0 &&
         IndexOf(kRepeatChoices, gene.repeats) >= 0;
}

std::size_t OperatorIndex(const CellGene& gene) {
  const auto kind = static_cast<std::size_t>(IndexOf(kConvKinds, gene.conv_kind));
  const auto ch = static_cast<std::size_t>(IndexOf(kChannelChoices, gene.channels));
  const auto k = static_cast<std::size_t>(IndexOf(kKernelChoices, gene.kernel));
  const auto rep = static_cast<std::size_t>(IndexOf(kRepeatChoices, gene.repeats));
  const std::size_t res = gene.residual ? 1 : 0;
  return (((kind * kChannelChoices.size() + ch) * kKernelChoices.size() + k) *
              2 +
          res) *
             kRepeatChoices.size() +
         rep;
}

const std::vector<CellGene>& OperatorSet() {
  static const std::vector<CellGene> ops = [] {
    std::vector<CellGene> out;
    out.reserve(kNumOperators);
    for (ConvKind kind : kConvKinds) {
      for (int ch : kChannelChoices) {
        for (int k : kKernelChoices) {
          for (bool res : {false, true}) {
            for (int rep : kRepeatChoices) {
              out.push_back(CellGene{kind, ch, k, res, rep});
            }
          }
        }
      }
    }
    return out;
  }();
  return ops;
}

MacroGenome::MacroGenome(std::size_t n, std::vector<std::uint8_t> bits)
    : n_(n), bits_(std::move(bits)) {
  if (bits_.size() != MacroBitCount(n)) {
    throw std::invalid_argument("macro bit count does not match n(n+1)/2");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t MacroGenome::PopCount() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::string MacroGenome::ToBitString() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

bool IsValid(const Chromosome& c) {
  if (c.micro.empty() || c.macro.n() != c.micro.size() ||
      c.macro.size() != MacroBitCount(c.micro.size())) {
    return false;
  }
  return std::all_of(c.micro.begin(), c.micro.end(),
                     [](const CellGene& g) { return IsValid(g); });
}

void SearchConfig::Validate() const {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (population_size < 2) {
    throw std::invalid_argument("population_size must be >= 2");
  }
  if (!(p_r >= 0.0 && p_r <= p_r + p_den && p_r + p_den <= 1.0 && p_den >= 0.0)) {
    throw std::invalid_argument("require 0 <= p_r <= p_r + p_den <= 1");
  }
  if (!(p_mr >= 0.0 && p_mr <= p_mf && p_mf <= 1.0)) {
    throw std::invalid_argument("require 0 <= p_mr <= p_mf <= 1");
  }
}

boost::multiprecision::cpp_int SpaceSize(unsigned n) {
  using boost::multiprecision::cpp_int;
  cpp_int micro = boost::multiprecision::pow(cpp_int(kNumOperators), n);
  const unsigned macro_bits = n * (n + 1) / 2;
  cpp_int macro = cpp_int(1) << macro_bits;
  return micro * macro;
}

Chromosome SampleRandom(std::size_t n, Rng& rng) {
  const auto& ops = OperatorSet();
  Chromosome c;
  c.micro.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    c.micro.push_back(ops[UniformIndex(rng, ops.size())]);
  }
  c.macro = MacroGenome(n);
  for (std::size_t b = 0; b < c.macro.size(); ++b) {
    c.macro.set_bit(b, Bernoulli(rng, 0.5));
  }
  return c;
}

std::string EncodeGene(const CellGene& gene) {
  std::ostringstream out;
  out << ConvKindToken(gene.conv_kind) << "_f" << gene.channels << "_k"
      << gene.kernel << "_b" << gene.repeats << "_"
      << (gene.residual ? "isskip" : "noskip");
  return out.str();
}

CellGene DecodeGene(std::string_view token) {
  const std::string tok(token);
  const auto parts = Split(token, '_');
  if (parts.size() != 5) {
    throw DecodeError(tok, "expected 5 '_'-separated fields");
  }
  CellGene gene;
  bool kind_ok = false;
  for (ConvKind kind : kConvKinds) {
    if (parts[0] == ConvKindToken(kind)) {
      gene.conv_kind = kind;
      kind_ok = true;
    }
  }
  if (!kind_ok) {
    throw DecodeError(std::string(parts[0]), "unknown conv kind in " + tok);
  }
  gene.channels = ParseField(parts[1], 'f');
  if (IndexOf(kChannelChoices, gene.channels) < 0) {
    throw DecodeError(std::string(parts[1]), "channels not in {16,32,48,64} in " + tok);
  }
  gene.kernel = ParseField(parts[2], 'k');
  if (IndexOf(kKernelChoices, gene.kernel) < 0) {
    throw DecodeError(std::string(parts[2]), "kernel not in {1,3} in " + tok);
  }
  gene.repeats = ParseField(parts[3], 'b');
  if (IndexOf(kRepeatChoices, gene.repeats) < 0) {
    throw DecodeError(std::string(parts[3]), "repeats not in {1,2,4} in " + tok);
  }
  if (parts[4] == "isskip") {
    gene.residual = true;
  } else if (parts[4] == "noskip") {
    gene.residual = false;
  } else {
    throw DecodeError(std::string(parts[4]), "expected isskip|noskip in " + tok);
  }
  return gene;
}

std::string Encode(const Chromosome& c) {
  std::string out;
  for (const auto& gene : c.micro) {
    out += EncodeGene(gene);
    out += '\n';
  }
  out += "macro=";
  out += c.macro.ToBitString();
  out += '\n';
  return out;
}

Chromosome Decode(std::string_view text) {
  std::vector<CellGene> micro;
  std::string_view bits;
  bool have_macro = false;
  for (std::string_view raw : Split(text, '\n')) {
    const std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (have_macro) {
      throw DecodeError(std::string(line), "content after macro line");
    }
    if (line.substr(0, 6) == "macro=") {
      bits = line.substr(6);
      have_macro = true;
      continue;
    }
    micro.push_back(DecodeGene(line));
  }
  if (!have_macro) throw DecodeError("", "missing macro= line");
  return Assemble(std::move(micro), bits);
}

std::string EncodeKey(const Chromosome& c) {
  std::string out;
  for (std::size_t k = 0; k < c.micro.size(); ++k) {
    if (k) out += ';';
    out += EncodeGene(c.micro[k]);
  }
  out += '|';
  out += c.macro.ToBitString();
  return out;
}

Chromosome DecodeKey(std::string_view key) {
  const std::size_t bar = key.find('|');
  if (bar == std::string_view::npos) {
    throw DecodeError(std::string(key), "missing '|' separator");
  }
  std::vector<CellGene> micro;
  for (std::string_view token : Split(key.substr(0, bar), ';')) {
    micro.push_back(DecodeGene(token));
  }
  return Assemble(std::move(micro), key.substr(bar + 1));
}

nlohmann::json ToJson(const CellGene& gene) {
  return nlohmann::json{{"conv_kind", std::string(ConvKindToken(gene.conv_kind))},
                        {"channels", gene.channels},
                        {"kernel", gene.kernel},
                        {"residual", gene.residual},
                        {"repeats", gene.repeats},
                        {"token", EncodeGene(gene)}};
}

nlohmann::json ToJson(const Chromosome& c) {
  nlohmann::json micro = nlohmann::json::array();
  for (const auto& gene : c.micro) micro.push_back(ToJson(gene));
  return nlohmann::json{{"n", c.n()},
                        {"micro", std::move(micro)},
                        {"macro", c.macro.ToBitString()}};
}

Chromosome ChromosomeFromJson(const nlohmann::json& j) {
  std::vector<CellGene> micro;
  for (const auto& g : j.at("micro")) {
    const std::string kind = g.at("conv_kind").get<std::string>();
    std::ostringstream token;
    token << kind << "_f" << g.at("channels").get<int>() << "_k"
          << g.at("kernel").get<int>() << "_b" << g.at("repeats").get<int>()
          << "_" << (g.at("residual").get<bool>() ? "isskip" : "noskip");
    micro.push_back(DecodeGene(token.str()));
  }
  Chromosome c = Assemble(std::move(micro), j.at("macro").get<std::string>());
  if (j.contains("n") && j.at("n").get<std::size_t>() != c.n()) {
    throw DecodeError("n", "declared n does not match micro length");
  }
  return c;
}

std::string SerializeRng(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng DeserializeRng(const std::string& text) {
  std::istringstream in(text);
  Rng rng;
  in >> rng;
  if (!in) throw std::invalid_argument("corrupt rng state");
  return rng;
}

}  // namespace srnas
