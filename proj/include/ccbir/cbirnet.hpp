#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccbir/ccnet.hpp"
#include "ccbir/image.hpp"
#include "ccbir/nn/backbone.hpp"

namespace ccbir {

/// How strongly the KCM modulates the content features (0 = content only).
struct FusionConfig {
    double l_kcm = 0.5;
    int dim = 128;  // embedding dimension D
    // KCM resampling to the feature-map grid is always bilinear.

    void validate() const;
};

struct EmbeddingVector {
    std::vector<double> v;
    std::string source_id;
};

/// fused = l_kcm * (feat (.) kcm) + (1 - l_kcm) * feat, with the KCM
/// bilinearly resampled to the feature map's spatial size and broadcast
/// across channels. l_kcm = 0 reduces to the content-only baseline.
nn::Tensor fuse_features(const nn::Tensor& feat, const KCM& kcm,
                         const FusionConfig& cfg);

struct CbirHeadConfig {
    int r1_out = 24;
    int r2_out = 16;

    static CbirHeadConfig for_backbone(const nn::BackboneConfig& bb);
};

struct CbirnetConfig {
    nn::BackboneConfig backbone = nn::BackboneConfig::tiny();
    CbirHeadConfig head{};
    FusionConfig fusion{};

    static CbirnetConfig variant(const std::string& name, const FusionConfig& fusion);
};

/// Content branch: backbone F2 -> KCM fusion -> reduction convs r1, r2 ->
/// GAP -> fc2 -> embedding v. The KCM comes from a frozen CCNet; no
/// gradient ever flows into it.
class CBIRNet {
  public:
    struct Cache {
        nn::Backbone::Cache backbone;
        nn::Conv2d::Cache r1c, r2c;
        std::vector<unsigned char> m1, m2;
        std::vector<double> fused_mask;  // d fused / d feat, per element
        int feat_h = 0, feat_w = 0;
        nn::Linear::Cache fc;
    };

    CBIRNet() = default;
    explicit CBIRNet(const CbirnetConfig& cfg);

    void init_xavier(std::uint64_t seed);
    bool ready() const { return ready_; }

    /// Embed a preprocessed image given its KCM (resampled internally).
    std::vector<double> forward(const nn::Tensor& x, const KCM& kcm,
                                Cache* cache = nullptr) const;
    void backward(const std::vector<double>& dv, const Cache& cache);

    std::vector<nn::Param> params();
    std::size_t param_count();
    const CbirnetConfig& config() const { return cfg_; }

  private:
    CbirnetConfig cfg_{};
    nn::Backbone backbone_;
    nn::Conv2d r1_, r2_;
    nn::Linear fc2_;
    bool ready_ = false;
};

/// A self-contained retrieval embedder: frozen CCNet (KCM source), CBIRNet,
/// and the fusion settings they were trained with.
struct Embedder {
    CCNet ccnet;
    CBIRNet cbirnet;

    const FusionConfig& fusion() const { return cbirnet.config().fusion; }

    EmbeddingVector embed(const GrayscaleImage& img) const;

    /// FNV-1a over all weights (ccnet then cbirnet), mixed with l_kcm and D.
    std::uint64_t fingerprint();

    void save_checkpoint(const std::string& path,
                         const nlohmann::json& extra_meta = nlohmann::json::object());
    static Embedder load_checkpoint(const std::string& path);
};

/// Spec-level convenience: KCM from the frozen CCNet, then the content
/// branch. The image must be preprocessed (256x256).
EmbeddingVector cbirnet_forward(const GrayscaleImage& img, const CCNet& ccnet,
                                const CBIRNet& cbirnet);

/// Cosine similarity with zero-norm protection (NumericError).
double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

}  // namespace ccbir
