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

#ifndef SRNAS_COST_MODEL_H_
#define SRNAS_COST_MODEL_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "srnas/genome.h"

namespace srnas {

enum class LayerKind : std::uint8_t {
  kConv,
  kGroupConv,
  kPointwiseConv,
  kDepthwiseConv,
  kPixelShuffle,
};

std::string_view LayerKindName(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int groups = 1;
  // Upscale factor for kPixelShuffle, unused otherwise.
  int shuffle = 1;
  bool at_hr = false;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Weights + biases; 0 for pixel shuffle.
std::int64_t LayerParams(const LayerSpec& layer);
// Multiply-accumulates per output pixel of the layer's grid.
std::int64_t LayerMacsPerPixel(const LayerSpec& layer);

// How incoming skip edges are merged at a block input.
enum class Aggregation : std::uint8_t {
  kConcat,      // channel concatenation; widens the block input
  kProjectSum,  // 1x1 projection of each mismatched edge, then addition
};

// Middle layer of the inverted bottleneck.
enum class BottleneckMiddle : std::uint8_t {
  kDense,      // k x k conv on the expanded width
  kDepthwise,  // k x k depthwise conv on the expanded width
};

struct CostConventions {
  Aggregation aggregation = Aggregation::kConcat;
  BottleneckMiddle bottleneck_middle = BottleneckMiddle::kDense;
  int extractor_channels = 32;
  int input_channels = 1;
  int output_channels = 1;

  friend bool operator==(const CostConventions&, const CostConventions&) = default;
};

nlohmann::json ToJson(const CostConventions& conv);
CostConventions ConventionsFromJson(const nlohmann::json& j);

enum class BlockRole : std::uint8_t { kExtractor, kCell, kUpsampler };

// One stage of the network. `sources` are node ids whose outputs feed this
// block: node 0 is the extractor output, node i the output of cell i.
struct Block {
  BlockRole role = BlockRole::kCell;
  std::string name;
  std::vector<int> sources;
  int input_channels = 0;
  int output_channels = 0;
  // kProjectSum only: one entry per source, nullopt when widths already match.
  std::vector<std::optional<LayerSpec>> edge_projections;
  // Main path; for cells, `repeats` copies laid out back to back.
  std::vector<LayerSpec> layers;
  int repeats = 1;
  bool residual = false;
  // Set when the residual needs a width-matching 1x1 conv.
  std::optional<LayerSpec> residual_projection;
};

struct ModelGraph {
  std::vector<Block> blocks;
  int scale = 2;
  CostConventions conventions;

  // Width seen by each block: element k is blocks[k].input_channels.
  std::vector<int> BlockInputChannels() const;
};

struct CostReport {
  std::int64_t params = 0;
  std::int64_t mult_adds = 0;
  int height = 480;
  int width = 480;
};

// Main path of one cell (all repeats) plus its residual projection, fed by
// `input_channels`. The residual adds the cell's backbone input, of width
// `residual_channels` (defaults to `input_channels`). Sources and edge
// projections are left empty.
Block MakeCellBlock(const CellGene& gene, int input_channels,
                    const CostConventions& conventions = {},
                    int residual_channels = 0);

std::int64_t BlockParams(const Block& block);
// Multiply-accumulates of the block at a 1x1 spatial grid.
std::int64_t BlockMacsPerPixel(const Block& block);

// Decodes `c` into extractor -> n cells -> upsampler. Only scale 2 is
// supported; other values throw std::invalid_argument.
ModelGraph BuildGraph(const Chromosome& c, int scale = 2,
                      const CostConventions& conventions = {});

std::int64_t CountParams(const ModelGraph& g);

// `h`, `w` are the low-resolution input size; layers flagged at_hr run at
// (h*scale, w*scale). Throws std::invalid_argument for h or w < 1.
std::int64_t CountMultAdds(const ModelGraph& g, int h, int w);

CostReport Cost(const ModelGraph& g, int h = 480, int w = 480);

nlohmann::json ToJson(const LayerSpec& layer);
nlohmann::json ToJson(const ModelGraph& g);
nlohmann::json ToJson(const CostReport& report);

}  // namespace srnas

#endif  // SRNAS_COST_MODEL_H_
