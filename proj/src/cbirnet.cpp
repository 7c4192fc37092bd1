#include "ccbir/cbirnet.hpp"

#include <algorithm>
#include <cmath>

#include "ccbir/checkpoint.hpp"
#include "ccbir/common.hpp"
#include "ccbir/nn/optim.hpp"

namespace ccbir {

void FusionConfig::validate() const {
    if (l_kcm < 0.0 || l_kcm > 1.0) {
        throw ConfigError("fusion: l_kcm must be in [0,1], got " +
                          std::to_string(l_kcm));
    }
    if (dim < 1) throw ConfigError("fusion: embedding dim must be >= 1");
}

nn::Tensor fuse_features(const nn::Tensor& feat, const KCM& kcm,
                         const FusionConfig& cfg) {
    cfg.validate();
    nn::Tensor kt(1, kcm.height, kcm.width);
    kt.v = kcm.map;
    kt = nn::resize_bilinear(kt, feat.h, feat.w);

    nn::Tensor fused = feat;
    const double l = cfg.l_kcm;
    for (int c = 0; c < feat.c; ++c) {
        double* plane = fused.channel(c);
        for (std::size_t i = 0; i < fused.plane(); ++i) {
            plane[i] *= l * kt.v[i] + (1.0 - l);
        }
    }
    return fused;
}

CbirHeadConfig CbirHeadConfig::for_backbone(const nn::BackboneConfig& bb) {
    if (bb.bottleneck()) return CbirHeadConfig{512, 256};
    return CbirHeadConfig{24, 16};
}

CbirnetConfig CbirnetConfig::variant(const std::string& name,
                                     const FusionConfig& fusion) {
    CbirnetConfig cfg;
    cfg.backbone = nn::BackboneConfig::from_name(name);
    cfg.head = CbirHeadConfig::for_backbone(cfg.backbone);
    cfg.fusion = fusion;
    return cfg;
}

CBIRNet::CBIRNet(const CbirnetConfig& cfg) : cfg_(cfg) {
    cfg.fusion.validate();
    backbone_ = nn::Backbone(cfg.backbone, "cbirnet");
    const int f4_ch = backbone_.stage_channels(4);
    r1_ = nn::Conv2d("cbirnet.r1", f4_ch, cfg.head.r1_out, 3, 2, 1);
    r2_ = nn::Conv2d("cbirnet.r2", cfg.head.r1_out, cfg.head.r2_out, 3, 2, 1);
    fc2_ = nn::Linear("cbirnet.fc2", cfg.head.r2_out, cfg.fusion.dim);
}

void CBIRNet::init_xavier(std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, 0x6362697272ULL));
    backbone_.init_xavier(rng);
    for (nn::Conv2d* conv : {&r1_, &r2_}) {
        nn::xavier_fill(conv->w, conv->in_channels() * 9,
                        conv->out_channels() * 9, rng);
        std::fill(conv->b.begin(), conv->b.end(), 0.0);
    }
    nn::xavier_fill(fc2_.w, fc2_.in_dim(), fc2_.out_dim(), rng);
    std::fill(fc2_.b.begin(), fc2_.b.end(), 0.0);
    ready_ = true;
}

std::vector<double> CBIRNet::forward(const nn::Tensor& x, const KCM& kcm,
                                     Cache* cache) const {
    if (!ready_) {
        throw NotReadyError(
            "cbirnet: weights not initialized (train, init, or load a checkpoint first)");
    }
    auto bb = backbone_.forward(x, cache ? &cache->backbone : nullptr);
    nn::Tensor& feat = bb.a4;

    nn::Tensor kt(1, kcm.height, kcm.width);
    kt.v = kcm.map;
    kt = nn::resize_bilinear(kt, feat.h, feat.w);
    const double l = cfg_.fusion.l_kcm;
    if (cache) {
        cache->feat_h = feat.h;
        cache->feat_w = feat.w;
        cache->fused_mask.resize(kt.v.size());
    }
    for (std::size_t i = 0; i < kt.v.size(); ++i) {
        const double m = l * kt.v[i] + (1.0 - l);
        kt.v[i] = m;
        if (cache) cache->fused_mask[i] = m;
    }
    for (int c = 0; c < feat.c; ++c) {
        double* plane = feat.channel(c);
        for (std::size_t i = 0; i < feat.plane(); ++i) plane[i] *= kt.v[i];
    }

    nn::Tensor h1 = nn::relu(r1_.forward(feat, cache ? &cache->r1c : nullptr),
                             cache ? &cache->m1 : nullptr);
    nn::Tensor h2 = nn::relu(r2_.forward(h1, cache ? &cache->r2c : nullptr),
                             cache ? &cache->m2 : nullptr);
    std::vector<double> pooled = nn::global_avg_pool(h2);
    return fc2_.forward(pooled, cache ? &cache->fc : nullptr);
}

void CBIRNet::backward(const std::vector<double>& dv, const Cache& cache) {
    std::vector<double> dpooled = fc2_.backward(dv, cache.fc);
    nn::Tensor dh2 =
        nn::global_avg_pool_backward(dpooled, cache.r2c.oh, cache.r2c.ow);
    nn::Tensor dz2 = nn::relu_backward(dh2, cache.m2);
    nn::Tensor dh1 = r2_.backward(dz2, cache.r2c);
    nn::Tensor dz1 = nn::relu_backward(dh1, cache.m1);
    nn::Tensor dfused = r1_.backward(dz1, cache.r1c);
    for (int c = 0; c < dfused.c; ++c) {
        double* plane = dfused.channel(c);
        for (std::size_t i = 0; i < dfused.plane(); ++i) {
            plane[i] *= cache.fused_mask[i];
        }
    }
    backbone_.backward(dfused, nullptr, nullptr, cache.backbone);
}

std::vector<nn::Param> CBIRNet::params() {
    std::vector<nn::Param> out;
    backbone_.collect_params(out);
    r1_.collect_params(out);
    r2_.collect_params(out);
    fc2_.collect_params(out);
    return out;
}

std::size_t CBIRNet::param_count() {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.value->size();
    return n;
}

EmbeddingVector Embedder::embed(const GrayscaleImage& img) const {
    return cbirnet_forward(img, ccnet, cbirnet);
}

std::uint64_t Embedder::fingerprint() {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto* net_params : {&ccnet, (CCNet*)nullptr}) {
        (void)net_params;
    }
    for (const auto& p : ccnet.params()) {
        h = fnv1a64(p.value->data(), p.value->size() * sizeof(double), h);
    }
    for (const auto& p : cbirnet.params()) {
        h = fnv1a64(p.value->data(), p.value->size() * sizeof(double), h);
    }
    const double l = fusion().l_kcm;
    h = fnv1a64(&l, sizeof(l), h);
    const std::int32_t d = fusion().dim;
    h = fnv1a64(&d, sizeof(d), h);
    return h;
}

void Embedder::save_checkpoint(const std::string& path,
                               const nlohmann::json& extra_meta) {
    if (!ccnet.ready() || !cbirnet.ready()) {
        throw NotReadyError("embedder: cannot save uninitialized weights");
    }
    Checkpoint ckpt;
    ckpt.meta["arch"] = "cbir_embedder";
    ckpt.meta["ccnet_variant"] = ccnet.config().backbone.variant_name();
    ckpt.meta["cbirnet_variant"] = cbirnet.config().backbone.variant_name();
    ckpt.meta["fusion"] = {{"l_kcm", fusion().l_kcm}, {"dim", fusion().dim}};
    ckpt.meta["class_names"] = composition_class_names();
    ckpt.meta["preprocessing"] = {{"resize", {256, 256}},
                                  {"range", {0.0, 1.0}},
                                  {"luma", {0.299, 0.587, 0.114}},
                                  {"interpolation", "bilinear"}};
    if (!extra_meta.empty()) ckpt.meta["run"] = extra_meta;
    for (const auto& p : ccnet.params()) {
        ckpt.add(p.name, {static_cast<int>(p.value->size())}, *p.value);
    }
    for (const auto& p : cbirnet.params()) {
        ckpt.add(p.name, {static_cast<int>(p.value->size())}, *p.value);
    }
    ckpt.save(path);
}

Embedder Embedder::load_checkpoint(const std::string& path) {
    Checkpoint ckpt = Checkpoint::load(path);
    if (ckpt.meta.value("arch", "") != "cbir_embedder") {
        throw DataError("checkpoint " + path + " is not an embedder checkpoint");
    }
    FusionConfig fusion;
    fusion.l_kcm = ckpt.meta.at("fusion").at("l_kcm").get<double>();
    fusion.dim = ckpt.meta.at("fusion").at("dim").get<int>();
    fusion.validate();

    Embedder emb;
    emb.ccnet = CCNet(
        CcnetConfig::variant(ckpt.meta.at("ccnet_variant").get<std::string>()));
    emb.cbirnet = CBIRNet(CbirnetConfig::variant(
        ckpt.meta.at("cbirnet_variant").get<std::string>(), fusion));
    auto load_params = [&ckpt, &path](std::vector<nn::Param> params) {
        for (const auto& p : params) {
            const auto& data = ckpt.tensor(p.name);
            if (data.size() != p.value->size()) {
                throw ShapeError("checkpoint " + path + ": tensor " + p.name +
                                 " has " + std::to_string(data.size()) +
                                 " values, expected " +
                                 std::to_string(p.value->size()));
            }
            *p.value = data;
        }
    };
    load_params(emb.ccnet.params());
    load_params(emb.cbirnet.params());
    // Mark both nets ready by reusing init paths' flag via a zero-cost trick:
    // loading counts as initialization.
    emb.ccnet.mark_ready();
    emb.cbirnet.mark_ready();
    return emb;
}

EmbeddingVector cbirnet_forward(const GrayscaleImage& img, const CCNet& ccnet,
                                const CBIRNet& cbirnet) {
    if (img.height != 256 || img.width != 256) {
        throw ShapeError("cbirnet: expected a preprocessed 256x256 image, got " +
                         std::to_string(img.height) + "x" +
                         std::to_string(img.width));
    }
    const KCM kcm = ccnet.kcm_for(img);
    EmbeddingVector out;
    out.v = cbirnet.forward(nn::tensor_from_image(img), kcm);
    out.source_id = img.source_id;
    return out;
}

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw ShapeError("cosine_similarity: dimension mismatch " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        throw NumericError("cosine_similarity: zero-norm vector");
    }
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace ccbir
