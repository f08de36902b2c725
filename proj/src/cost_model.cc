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

#include "srnas/cost_model.h"

#include <stdexcept>

namespace srnas {

namespace {

LayerSpec Conv(int in, int out, int k, bool at_hr = false) {
  return LayerSpec{LayerKind::kConv, in, out, k, 1, 1, at_hr};
}

LayerSpec Pointwise(int in, int out) {
  return LayerSpec{LayerKind::kPointwiseConv, in, out, 1, 1, 1, false};
}

void AppendCellCopy(const CellGene& gene, int in, BottleneckMiddle middle,
                    std::vector<LayerSpec>& layers) {
  const int out = gene.channels;
  switch (gene.conv_kind) {
    case ConvKind::kConv2D:
      layers.push_back(Conv(in, out, gene.kernel));
      break;
    case ConvKind::kGroupConvG2:
    case ConvKind::kGroupConvG4: {
      const int g = GroupCount(gene.conv_kind);
      if (in % g != 0 || out % g != 0) {
        throw std::invalid_argument("group conv widths not divisible by groups");
      }
      layers.push_back(
          LayerSpec{LayerKind::kGroupConv, in, out, gene.kernel, g, 1, false});
      break;
    }
    case ConvKind::kInvertedBottleneckE2: {
      const int expanded = 2 * out;
      layers.push_back(Pointwise(in, expanded));
      if (middle == BottleneckMiddle::kDepthwise) {
        layers.push_back(LayerSpec{LayerKind::kDepthwiseConv, expanded, expanded,
                                   gene.kernel, expanded, 1, false});
      } else {
        layers.push_back(Conv(expanded, expanded, gene.kernel));
      }
      layers.push_back(Pointwise(expanded, out));
      break;
    }
  }
}

}  // namespace

Block MakeCellBlock(const CellGene& gene, int input_channels,
                    const CostConventions& conventions, int residual_channels) {
  if (residual_channels <= 0) residual_channels = input_channels;
  Block cell;
  cell.role = BlockRole::kCell;
  cell.name = EncodeGene(gene);
  cell.input_channels = input_channels;
  cell.output_channels = gene.channels;
  cell.repeats = gene.repeats;
  cell.residual = gene.residual;
  if (input_channels <= 0) return cell;
  int width = input_channels;
  for (int r = 0; r < gene.repeats; ++r) {
    AppendCellCopy(gene, width, conventions.bottleneck_middle, cell.layers);
    width = gene.channels;
  }
  if (gene.residual && residual_channels != gene.channels) {
    cell.residual_projection = Pointwise(residual_channels, gene.channels);
  }
  return cell;
}

std::string_view LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv:
      return "conv";
    case LayerKind::kGroupConv:
      return "group_conv";
    case LayerKind::kPointwiseConv:
      return "pointwise_conv";
    case LayerKind::kDepthwiseConv:
      return "depthwise_conv";
    case LayerKind::kPixelShuffle:
      return "pixel_shuffle";
  }
  return "?";
}

std::int64_t LayerMacsPerPixel(const LayerSpec& layer) {
  if (layer.kind == LayerKind::kPixelShuffle) return 0;
  return static_cast<std::int64_t>(layer.out_channels) *
         (layer.in_channels / layer.groups) * layer.kernel * layer.kernel;
}

std::int64_t LayerParams(const LayerSpec& layer) {
  if (layer.kind == LayerKind::kPixelShuffle) return 0;
  return LayerMacsPerPixel(layer) + layer.out_channels;
}

std::vector<int> ModelGraph::BlockInputChannels() const {
  std::vector<int> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(b.input_channels);
  return out;
}

ModelGraph BuildGraph(const Chromosome& c, int scale,
                      const CostConventions& conventions) {
  if (scale != 2) throw std::invalid_argument("only x2 scale is supported");
  if (!IsValid(c)) throw std::invalid_argument("invalid chromosome");

  const int n = static_cast<int>(c.n());
  ModelGraph g;
  g.scale = scale;
  g.conventions = conventions;

  // node_width[k]: channels of node k (0 = extractor output, i = cell i).
  std::vector<int> node_width;

  Block extractor;
  extractor.role = BlockRole::kExtractor;
  extractor.name = "extractor";
  extractor.input_channels = conventions.input_channels;
  extractor.output_channels = conventions.extractor_channels;
  extractor.layers.push_back(
      Conv(conventions.input_channels, conventions.extractor_channels, 3));
  g.blocks.push_back(std::move(extractor));
  node_width.push_back(conventions.extractor_channels);

  auto merge = [&](Block& block, const std::vector<int>& sources) {
    block.sources = sources;
    const int backbone = node_width[sources.front()];
    if (conventions.aggregation == Aggregation::kConcat) {
      int width = 0;
      for (int s : sources) width += node_width[s];
      block.input_channels = width;
      block.edge_projections.assign(sources.size(), std::nullopt);
      return;
    }
    block.input_channels = backbone;
    for (int s : sources) {
      if (node_width[s] == backbone) {
        block.edge_projections.emplace_back(std::nullopt);
      } else {
        block.edge_projections.emplace_back(Pointwise(node_width[s], backbone));
      }
    }
  };

  for (int j = 1; j <= n; ++j) {
    const CellGene& gene = c.micro[j - 1];
    // Backbone first, then skips from the inputs of earlier cells. c_j^j is
    // the backbone indicator and carries no cost.
    std::vector<int> sources{j - 1};
    for (int i = 1; i < j; ++i) {
      if (c.macro.Get(i, j)) sources.push_back(i - 1);
    }
    Block wiring;
    merge(wiring, sources);
    Block cell =
        MakeCellBlock(gene, wiring.input_channels, conventions, node_width[j - 1]);
    cell.name = "cell" + std::to_string(j) + ":" + EncodeGene(gene);
    cell.sources = std::move(wiring.sources);
    cell.edge_projections = std::move(wiring.edge_projections);
    g.blocks.push_back(std::move(cell));
    node_width.push_back(gene.channels);
  }

  Block up;
  up.role = BlockRole::kUpsampler;
  up.name = "upsampler";
  merge(up, {n, 0});
  const int feat = conventions.extractor_channels;
  up.layers.push_back(Conv(up.input_channels, feat * scale * scale, 3));
  up.layers.push_back(LayerSpec{LayerKind::kPixelShuffle, feat * scale * scale,
                                feat, 1, 1, scale, true});
  up.layers.push_back(Conv(feat, conventions.output_channels, 3, true));
  up.output_channels = conventions.output_channels;
  g.blocks.push_back(std::move(up));
  return g;
}

namespace {

template <typename Fn>
void ForEachLayer(const ModelGraph& g, Fn&& fn) {
  for (const auto& b : g.blocks) {
    for (const auto& p : b.edge_projections) {
      if (p) fn(*p);
    }
    for (const auto& l : b.layers) fn(l);
    if (b.residual_projection) fn(*b.residual_projection);
  }
}

}  // namespace

std::int64_t BlockParams(const Block& block) {
  ModelGraph g;
  g.blocks.push_back(block);
  return CountParams(g);
}

std::int64_t BlockMacsPerPixel(const Block& block) {
  std::int64_t total = 0;
  ModelGraph g;
  g.blocks.push_back(block);
  ForEachLayer(g, [&](const LayerSpec& l) { total += LayerMacsPerPixel(l); });
  return total;
}

std::int64_t CountParams(const ModelGraph& g) {
  std::int64_t total = 0;
  ForEachLayer(g, [&](const LayerSpec& l) { total += LayerParams(l); });
  return total;
}

std::int64_t CountMultAdds(const ModelGraph& g, int h, int w) {
  if (h < 1 || w < 1) throw std::invalid_argument("spatial size must be >= 1");
  const std::int64_t lr = static_cast<std::int64_t>(h) * w;
  const std::int64_t hr = lr * g.scale * g.scale;
  std::int64_t total = 0;
  ForEachLayer(g, [&](const LayerSpec& l) {
    total += LayerMacsPerPixel(l) * (l.at_hr ? hr : lr);
  });
  return total;
}

CostReport Cost(const ModelGraph& g, int h, int w) {
  return CostReport{CountParams(g), CountMultAdds(g, h, w), h, w};
}

nlohmann::json ToJson(const CostConventions& conv) {
  return nlohmann::json{
      {"aggregation",
       conv.aggregation == Aggregation::kConcat ? "concat" : "project-sum"},
      {"bottleneck_middle",
       conv.bottleneck_middle == BottleneckMiddle::kDense ? "dense" : "depthwise"},
      {"extractor_channels", conv.extractor_channels},
      {"input_channels", conv.input_channels},
      {"output_channels", conv.output_channels},
      {"bias", true},
      {"residual_projection", "backbone input, 1x1 conv when widths differ"},
      {"skip_payload", "backbone feature entering the source cell"}};
}

CostConventions ConventionsFromJson(const nlohmann::json& j) {
  CostConventions conv;
  if (j.contains("aggregation")) {
    const auto a = j.at("aggregation").get<std::string>();
    if (a == "concat") {
      conv.aggregation = Aggregation::kConcat;
    } else if (a == "project-sum") {
      conv.aggregation = Aggregation::kProjectSum;
    } else {
      throw std::invalid_argument("unknown aggregation '" + a + "'");
    }
  }
  if (j.contains("bottleneck_middle")) {
    const auto m = j.at("bottleneck_middle").get<std::string>();
    if (m == "dense") {
      conv.bottleneck_middle = BottleneckMiddle::kDense;
    } else if (m == "depthwise") {
      conv.bottleneck_middle = BottleneckMiddle::kDepthwise;
    } else {
      throw std::invalid_argument("unknown bottleneck_middle '" + m + "'");
    }
  }
  conv.extractor_channels = j.value("extractor_channels", conv.extractor_channels);
  conv.input_channels = j.value("input_channels", conv.input_channels);
  conv.output_channels = j.value("output_channels", conv.output_channels);
  return conv;
}

nlohmann::json ToJson(const LayerSpec& layer) {
  nlohmann::json j{{"kind", std::string(LayerKindName(layer.kind))},
                   {"in_channels", layer.in_channels},
                   {"out_channels", layer.out_channels},
                   {"kernel", layer.kernel},
                   {"groups", layer.groups},
                   {"at_hr", layer.at_hr},
                   {"params", LayerParams(layer)}};
  if (layer.kind == LayerKind::kPixelShuffle) j["upscale"] = layer.shuffle;
  return j;
}

nlohmann::json ToJson(const ModelGraph& g) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : g.blocks) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : b.layers) layers.push_back(ToJson(l));
    nlohmann::json projections = nlohmann::json::array();
    for (const auto& p : b.edge_projections) {
      projections.push_back(p ? ToJson(*p) : nlohmann::json(nullptr));
    }
    const char* role = b.role == BlockRole::kExtractor  ? "extractor"
                       : b.role == BlockRole::kCell     ? "cell"
                                                        : "upsampler";
    blocks.push_back({{"role", role},
                      {"name", b.name},
                      {"sources", b.sources},
                      {"input_channels", b.input_channels},
                      {"output_channels", b.output_channels},
                      {"edge_projections", std::move(projections)},
                      {"layers", std::move(layers)},
                      {"repeats", b.repeats},
                      {"residual", b.residual},
                      {"residual_projection", b.residual_projection
                                                  ? ToJson(*b.residual_projection)
                                                  : nlohmann::json(nullptr)}});
  }
  return nlohmann::json{{"scale", g.scale},
                        {"conventions", ToJson(g.conventions)},
                        {"blocks", std::move(blocks)},
                        {"params", CountParams(g)}};
}

nlohmann::json ToJson(const CostReport& report) {
  return nlohmann::json{{"params", report.params},
                        {"mult_adds", report.mult_adds},
                        {"input_height", report.height},
                        {"input_width", report.width}};
}

}  // namespace srnas
