#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccbir/composition_data.hpp"
#include "ccbir/hyperparams.hpp"
#include "ccbir/image.hpp"
#include "ccbir/nn/backbone.hpp"

namespace ccbir {

/// Generic 2-D map of reals (CAMs, raw attention maps).
struct SpatialMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    SpatialMap() = default;
    SpatialMap(int h, int w, double fill = 0.0)
        : height(h), width(w),
          values(static_cast<std::size_t>(h) * w, fill) {}

    double at(int y, int x) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    double& at(int y, int x) {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

/// Raw class logits plus their softmax normalization. The softmax weights
/// are what the KCM aggregation consumes.
struct ClassScores {
    std::vector<double> logits;
    std::vector<double> weights;  // nonnegative, sum to 1
};

ClassScores make_class_scores(std::vector<double> logits);

/// Key Composition Map: min-max normalized to [0,1] (all 0.5 when the raw
/// aggregate is constant).
struct KCM {
    int height = 0;
    int width = 0;
    std::vector<double> map;
    std::string source_resolution;

    GrayscaleImage to_image() const;
};

/// CAM(y,x) = sum_c w_c * features[c,y,x]. The weight vector length must
/// match the feature channel count.
SpatialMap compute_cam(const nn::Tensor& features,
                       const std::vector<double>& class_weights);

/// Weighted CAM aggregation with softmax(scores) weights, then min-max
/// normalization.
KCM compute_kcm(const std::vector<SpatialMap>& cams, const ClassScores& scores);

/// Refiner head widths (c1..c4). Skip wiring is fixed: f3 feeds c2 and f2
/// feeds c3, each through a 1x1 projection after bilinear alignment.
struct RefinerConfig {
    int c1_out = 32;
    int c2_out = 24;
    int c3_out = 16;
    int c4_out = 32;
    int upsample = 2;  // spatial factor applied after c1

    static RefinerConfig for_backbone(const nn::BackboneConfig& bb);
};

struct CcnetConfig {
    nn::BackboneConfig backbone = nn::BackboneConfig::tiny();
    RefinerConfig refiner = RefinerConfig{};
    int num_classes = kNumCompositionClasses;

    static CcnetConfig variant(const std::string& name);
};

struct CcnetOutput {
    ClassScores scores;
    std::vector<SpatialMap> cams;  // one per class, refiner resolution
    KCM kcm;
};

/// Composition Clues Network: backbone -> refiner with two skip fusions ->
/// GAP -> fc1 logits; CAMs are formed from the last refiner feature map
/// with fc1's weights.
class CCNet {
  public:
    struct Cache {
        nn::Backbone::Cache backbone;
        nn::Conv2d::Cache c1c, c2c, c3c, c4c, p2c, p3c;
        std::vector<unsigned char> m1, m2, m3, m4;
        int a2_h = 0, a2_w = 0, a3_h = 0, a3_w = 0;
        int r1_h = 0, r1_w = 0;
        int g_h = 0, g_w = 0;
        nn::Linear::Cache fc;
    };

    CCNet() = default;
    explicit CCNet(const CcnetConfig& cfg);

    void init_xavier(std::uint64_t seed);
    bool ready() const { return ready_; }

    /// Full inference on a preprocessed 256x256 image; deterministic.
    CcnetOutput forward(const GrayscaleImage& img) const;
    KCM kcm_for(const GrayscaleImage& img) const;

    /// Training-path forward producing raw logits; the caller owns the
    /// cache and uses it for backward(). Also returns the final refiner
    /// feature map through `g_out` when non-null.
    std::vector<double> forward_logits(const nn::Tensor& x, Cache* cache,
                                       nn::Tensor* g_out = nullptr) const;
    void backward(const std::vector<double>& dlogits, const Cache& cache);

    std::vector<nn::Param> params();
    std::size_t param_count() const;
    std::uint64_t weight_fingerprint();
    const CcnetConfig& config() const { return cfg_; }
    const nn::Linear& fc1() const { return fc1_; }

    void save_checkpoint(const std::string& path,
                         const nlohmann::json& extra_meta = nlohmann::json::object());
    static CCNet load_checkpoint(const std::string& path);

  private:
    CcnetConfig cfg_{};
    nn::Backbone backbone_;
    nn::Conv2d c1_, c2_, c3_, c4_, proj2_, proj3_;
    nn::Linear fc1_;
    bool ready_ = false;
};

enum class CompositionLossMode { kSingleLabel, kMultiLabel };

struct CcnetTrainReport {
    std::vector<double> epoch_losses;  // mean training loss per epoch
    double wall_seconds = 0.0;
};

/// Xavier-init (seeded) then Adam-train the network in place. Single-label
/// cross-entropy on the first listed class by default; kMultiLabel switches
/// to per-class sigmoid BCE. NaN loss aborts with NumericError naming the
/// epoch and sample.
CcnetTrainReport train_ccnet(CCNet& net,
                             const std::vector<CompositionSample>& train_set,
                             const Hyperparams& hp,
                             CompositionLossMode mode =
                                 CompositionLossMode::kSingleLabel);

struct CompositionMetrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    int n_samples = 0;
};

/// Metrics from argmax predictions against (possibly multi-hot) truths. A
/// prediction inside the truth set is correct; macro averages run over
/// classes with nonzero ground-truth support, and a class with no
/// predictions contributes precision 0.
CompositionMetrics composition_metrics(
    const std::vector<int>& predictions,
    const std::vector<CompositionLabel>& truths);

int predict_composition(const CCNet& net, const GrayscaleImage& img);

CompositionMetrics evaluate_composition(
    const CCNet& net, const std::vector<CompositionSample>& test_set);

}  // namespace ccbir
