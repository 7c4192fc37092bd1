#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ccbir/nn/layers.hpp"
#include "ccbir/rng.hpp"

namespace ccbir::nn {

/// Stage layout for the five-part feature extractor (stem f0 plus stages
/// f1..f4). Two presets: "tiny" (plain conv stages, trains on a laptop CPU
/// in minutes) and "resnet50-layout" (bottleneck stacks [3,4,6,3] mirroring
/// the classical stage geometry, for full-corpus runs).
struct BackboneConfig {
    enum class Variant { kTiny, kResNet50Layout };

    struct Stem {
        int out_ch;
        int kernel;
        int stride;
        int pad;
        bool maxpool;  // 3x3 stride-2 pool after the stem conv
    };
    struct Stage {
        int out_ch;
        int blocks;
        int stride;  // applied by the first block of the stage
    };

    Variant variant = Variant::kTiny;
    int input_channels = 1;
    Stem stem{8, 5, 4, 2, false};
    std::array<Stage, 4> stages{};

    bool bottleneck() const { return variant == Variant::kResNet50Layout; }
    std::string variant_name() const;

    static BackboneConfig tiny();
    static BackboneConfig resnet50_layout();
    static BackboneConfig from_name(const std::string& name);
};

class Backbone {
  public:
    struct PlainBlockCache {
        Conv2d::Cache conv;
        std::vector<unsigned char> mask;
    };
    struct BottleneckCache {
        Conv2d::Cache c1, c2, c3;
        Conv2d::Cache proj;
        std::vector<unsigned char> m1, m2, m_out;
        bool has_proj = false;
    };
    using BlockCache = std::variant<PlainBlockCache, BottleneckCache>;

    struct Cache {
        Conv2d::Cache stem_conv;
        std::vector<unsigned char> stem_mask;
        MaxPool2d::Cache pool;
        int stem_channels = 0;
        std::array<std::vector<BlockCache>, 4> stages;
    };

    /// Stage outputs needed downstream: a2 (f2), a3 (f3), a4 (f4).
    struct StageOutputs {
        Tensor a2, a3, a4;
    };

    Backbone() = default;
    Backbone(const BackboneConfig& cfg, const std::string& prefix);

    StageOutputs forward(const Tensor& x, Cache* cache = nullptr) const;

    /// Backprop from the stage outputs. da3_extra / da2_extra carry
    /// gradients injected by skip consumers (the refiner); pass nullptr
    /// when a stage output feeds nothing else. Returns d loss / d input.
    Tensor backward(const Tensor& da4, const Tensor* da3_extra,
                    const Tensor* da2_extra, const Cache& cache);

    void collect_params(std::vector<Param>& out);
    void init_xavier(Rng& rng);

    const BackboneConfig& config() const { return cfg_; }
    int stage_channels(int stage_1to4) const {
        return cfg_.stages[stage_1to4 - 1].out_ch;
    }

  private:
    struct PlainBlock {
        Conv2d conv;
    };
    struct BottleneckBlock {
        Conv2d c1, c2, c3;      // 1x1 reduce, 3x3, 1x1 expand
        std::optional<Conv2d> proj;  // 1x1 shortcut when shape changes
    };
    using Block = std::variant<PlainBlock, BottleneckBlock>;

    Tensor forward_block(const Block& blk, const Tensor& x,
                         BlockCache* cache) const;
    Tensor backward_block(Block& blk, const Tensor& dy,
                          const BlockCache& cache);

    BackboneConfig cfg_{};
    Conv2d stem_;
    MaxPool2d pool_{3, 2, 1};
    std::array<std::vector<Block>, 4> stages_;
};

}  // namespace ccbir::nn
