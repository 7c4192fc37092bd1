#include "ccbir/ccnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ccbir/checkpoint.hpp"
#include "ccbir/common.hpp"
#include "ccbir/nn/losses.hpp"
#include "ccbir/nn/optim.hpp"

namespace ccbir {

ClassScores make_class_scores(std::vector<double> logits) {
    ClassScores s;
    s.weights = nn::softmax(logits);
    s.logits = std::move(logits);
    return s;
}

GrayscaleImage KCM::to_image() const {
    GrayscaleImage img(height, width);
    img.pixels = map;
    img.source_id = "kcm";
    return img;
}

SpatialMap compute_cam(const nn::Tensor& features,
                       const std::vector<double>& class_weights) {
    if (static_cast<int>(class_weights.size()) != features.c) {
        throw ShapeError("compute_cam: weight vector length " +
                         std::to_string(class_weights.size()) +
                         " != feature channels " + std::to_string(features.c));
    }
    SpatialMap cam(features.h, features.w);
    for (int ci = 0; ci < features.c; ++ci) {
        const double wc = class_weights[ci];
        if (wc == 0.0) continue;
        const double* plane = features.channel(ci);
        for (std::size_t i = 0; i < features.plane(); ++i) {
            cam.values[i] += wc * plane[i];
        }
    }
    return cam;
}

KCM compute_kcm(const std::vector<SpatialMap>& cams, const ClassScores& scores) {
    if (cams.empty()) throw ShapeError("compute_kcm: no CAMs");
    if (scores.weights.size() != cams.size()) {
        throw ShapeError("compute_kcm: " + std::to_string(cams.size()) +
                         " CAMs vs " + std::to_string(scores.weights.size()) +
                         " scores");
    }
    const int h = cams[0].height, w = cams[0].width;
    for (const auto& c : cams) {
        if (c.height != h || c.width != w) {
            throw ShapeError("compute_kcm: CAM resolution mismatch");
        }
    }
    KCM kcm;
    kcm.height = h;
    kcm.width = w;
    kcm.source_resolution = std::to_string(h) + "x" + std::to_string(w);
    kcm.map.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (std::size_t k = 0; k < cams.size(); ++k) {
        const double wk = scores.weights[k];
        for (std::size_t i = 0; i < kcm.map.size(); ++i) {
            kcm.map[i] += wk * cams[k].values[i];
        }
    }
    const auto [mn_it, mx_it] =
        std::minmax_element(kcm.map.begin(), kcm.map.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx - mn <= 0.0) {
        std::fill(kcm.map.begin(), kcm.map.end(), 0.5);
    } else {
        const double inv = 1.0 / (mx - mn);
        for (double& v : kcm.map) v = (v - mn) * inv;
    }
    return kcm;
}

RefinerConfig RefinerConfig::for_backbone(const nn::BackboneConfig& bb) {
    if (bb.bottleneck()) {
        return RefinerConfig{512, 256, 128, 256, 2};
    }
    return RefinerConfig{32, 24, 16, 32, 2};
}

CcnetConfig CcnetConfig::variant(const std::string& name) {
    CcnetConfig cfg;
    cfg.backbone = nn::BackboneConfig::from_name(name);
    cfg.refiner = RefinerConfig::for_backbone(cfg.backbone);
    return cfg;
}

CCNet::CCNet(const CcnetConfig& cfg) : cfg_(cfg) {
    backbone_ = nn::Backbone(cfg.backbone, "ccnet");
    const int f2_ch = backbone_.stage_channels(2);
    const int f3_ch = backbone_.stage_channels(3);
    const int f4_ch = backbone_.stage_channels(4);
    const auto& r = cfg.refiner;
    c1_ = nn::Conv2d("ccnet.c1", f4_ch, r.c1_out, 3, 1, 1);
    c2_ = nn::Conv2d("ccnet.c2", r.c1_out, r.c2_out, 3, 1, 1);
    proj3_ = nn::Conv2d("ccnet.proj3", f3_ch, r.c2_out, 1, 1, 0);
    c3_ = nn::Conv2d("ccnet.c3", r.c2_out, r.c3_out, 3, 1, 1);
    proj2_ = nn::Conv2d("ccnet.proj2", f2_ch, r.c3_out, 1, 1, 0);
    c4_ = nn::Conv2d("ccnet.c4", r.c3_out, r.c4_out, 3, 1, 1);
    fc1_ = nn::Linear("ccnet.fc1", r.c4_out, cfg.num_classes);
}

void CCNet::init_xavier(std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, 0x63636e6574ULL));
    backbone_.init_xavier(rng);
    for (nn::Conv2d* conv : {&c1_, &c2_, &c3_, &c4_}) {
        const int k = 3;
        nn::xavier_fill(conv->w, conv->in_channels() * k * k,
                        conv->out_channels() * k * k, rng);
        std::fill(conv->b.begin(), conv->b.end(), 0.0);
    }
    for (nn::Conv2d* conv : {&proj3_, &proj2_}) {
        nn::xavier_fill(conv->w, conv->in_channels(), conv->out_channels(), rng);
        std::fill(conv->b.begin(), conv->b.end(), 0.0);
    }
    nn::xavier_fill(fc1_.w, fc1_.in_dim(), fc1_.out_dim(), rng);
    std::fill(fc1_.b.begin(), fc1_.b.end(), 0.0);
    ready_ = true;
}

std::vector<double> CCNet::forward_logits(const nn::Tensor& x, Cache* cache,
                                          nn::Tensor* g_out) const {
    if (!ready_) {
        throw NotReadyError(
            "ccnet: weights not initialized (train, init, or load a checkpoint first)");
    }
    auto bb = backbone_.forward(x, cache ? &cache->backbone : nullptr);
    if (cache) {
        cache->a2_h = bb.a2.h;
        cache->a2_w = bb.a2.w;
        cache->a3_h = bb.a3.h;
        cache->a3_w = bb.a3.w;
    }

    nn::Tensor r1 = nn::relu(c1_.forward(bb.a4, cache ? &cache->c1c : nullptr),
                             cache ? &cache->m1 : nullptr);
    if (cache) {
        cache->r1_h = r1.h;
        cache->r1_w = r1.w;
    }
    const int th = r1.h * cfg_.refiner.upsample;
    const int tw = r1.w * cfg_.refiner.upsample;
    nn::Tensor u = nn::resize_bilinear(r1, th, tw);

    nn::Tensor z2 = c2_.forward(u, cache ? &cache->c2c : nullptr);
    {
        nn::Tensor skip3 = nn::resize_bilinear(bb.a3, th, tw);
        nn::Tensor p3 = proj3_.forward(skip3, cache ? &cache->p3c : nullptr);
        for (std::size_t i = 0; i < z2.v.size(); ++i) z2.v[i] += p3.v[i];
    }
    nn::Tensor r2 = nn::relu(z2, cache ? &cache->m2 : nullptr);

    nn::Tensor z3 = c3_.forward(r2, cache ? &cache->c3c : nullptr);
    {
        nn::Tensor skip2 = nn::resize_bilinear(bb.a2, th, tw);
        nn::Tensor p2 = proj2_.forward(skip2, cache ? &cache->p2c : nullptr);
        for (std::size_t i = 0; i < z3.v.size(); ++i) z3.v[i] += p2.v[i];
    }
    nn::Tensor r3 = nn::relu(z3, cache ? &cache->m3 : nullptr);

    nn::Tensor g = nn::relu(c4_.forward(r3, cache ? &cache->c4c : nullptr),
                            cache ? &cache->m4 : nullptr);
    if (cache) {
        cache->g_h = g.h;
        cache->g_w = g.w;
    }
    std::vector<double> pooled = nn::global_avg_pool(g);
    if (g_out) *g_out = std::move(g);
    return fc1_.forward(pooled, cache ? &cache->fc : nullptr);
}

void CCNet::backward(const std::vector<double>& dlogits, const Cache& cache) {
    std::vector<double> dpooled = fc1_.backward(dlogits, cache.fc);
    nn::Tensor dg = nn::global_avg_pool_backward(dpooled, cache.g_h, cache.g_w);
    nn::Tensor dz4 = nn::relu_backward(dg, cache.m4);
    nn::Tensor dr3 = c4_.backward(dz4, cache.c4c);

    nn::Tensor dz3 = nn::relu_backward(dr3, cache.m3);
    nn::Tensor dr2 = c3_.backward(dz3, cache.c3c);
    nn::Tensor da2_resized = proj2_.backward(dz3, cache.p2c);
    nn::Tensor da2 =
        nn::resize_bilinear_backward(da2_resized, cache.a2_h, cache.a2_w);

    nn::Tensor dz2 = nn::relu_backward(dr2, cache.m2);
    nn::Tensor du = c2_.backward(dz2, cache.c2c);
    nn::Tensor da3_resized = proj3_.backward(dz2, cache.p3c);
    nn::Tensor da3 =
        nn::resize_bilinear_backward(da3_resized, cache.a3_h, cache.a3_w);

    nn::Tensor dr1 = nn::resize_bilinear_backward(du, cache.r1_h, cache.r1_w);
    nn::Tensor dz1 = nn::relu_backward(dr1, cache.m1);
    nn::Tensor da4 = c1_.backward(dz1, cache.c1c);

    backbone_.backward(da4, &da3, &da2, cache.backbone);
}

CcnetOutput CCNet::forward(const GrayscaleImage& img) const {
    if (img.height != 256 || img.width != 256) {
        throw ShapeError("ccnet: expected a preprocessed 256x256 image, got " +
                         std::to_string(img.height) + "x" +
                         std::to_string(img.width));
    }
    nn::Tensor g;
    std::vector<double> logits =
        forward_logits(nn::tensor_from_image(img), nullptr, &g);

    CcnetOutput out;
    out.scores = make_class_scores(std::move(logits));
    out.cams.reserve(cfg_.num_classes);
    for (int k = 0; k < cfg_.num_classes; ++k) {
        std::vector<double> wk(fc1_.w.begin() +
                                   static_cast<std::size_t>(k) * fc1_.in_dim(),
                               fc1_.w.begin() +
                                   static_cast<std::size_t>(k + 1) * fc1_.in_dim());
        out.cams.push_back(compute_cam(g, wk));
    }
    out.kcm = compute_kcm(out.cams, out.scores);
    return out;
}

KCM CCNet::kcm_for(const GrayscaleImage& img) const { return forward(img).kcm; }

std::vector<nn::Param> CCNet::params() {
    std::vector<nn::Param> out;
    backbone_.collect_params(out);
    c1_.collect_params(out);
    c2_.collect_params(out);
    proj3_.collect_params(out);
    c3_.collect_params(out);
    proj2_.collect_params(out);
    c4_.collect_params(out);
    fc1_.collect_params(out);
    return out;
}

std::size_t CCNet::param_count() {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.value->size();
    return n;
}

std::uint64_t CCNet::weight_fingerprint() {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params()) {
        h = fnv1a64(p.value->data(), p.value->size() * sizeof(double), h);
    }
    return h;
}

namespace {

nlohmann::json preprocessing_fingerprint() {
    return {{"resize", {256, 256}},
            {"range", {0.0, 1.0}},
            {"luma", {0.299, 0.587, 0.114}},
            {"interpolation", "bilinear"}};
}

void save_params_into(Checkpoint& ckpt, std::vector<nn::Param> params) {
    for (const auto& p : params) {
        ckpt.add(p.name, {static_cast<int>(p.value->size())}, *p.value);
    }
}

void load_params_from(const Checkpoint& ckpt, std::vector<nn::Param> params) {
    for (const auto& p : params) {
        const auto& data = ckpt.tensor(p.name);
        if (data.size() != p.value->size()) {
            throw ShapeError("checkpoint tensor " + p.name + " has " +
                             std::to_string(data.size()) + " values, expected " +
                             std::to_string(p.value->size()));
        }
        *p.value = data;
    }
}

}  // namespace

void CCNet::save_checkpoint(const std::string& path,
                            const nlohmann::json& extra_meta) {
    if (!ready_) throw NotReadyError("ccnet: cannot save uninitialized weights");
    Checkpoint ckpt;
    ckpt.meta["arch"] = "ccnet";
    ckpt.meta["variant"] = cfg_.backbone.variant_name();
    ckpt.meta["refiner"] = {{"c1", cfg_.refiner.c1_out},
                            {"c2", cfg_.refiner.c2_out},
                            {"c3", cfg_.refiner.c3_out},
                            {"c4", cfg_.refiner.c4_out},
                            {"upsample", cfg_.refiner.upsample}};
    ckpt.meta["class_names"] = composition_class_names();
    ckpt.meta["preprocessing"] = preprocessing_fingerprint();
    ckpt.meta["kcm"] = {{"score_weighting", "softmax"},
                        {"normalization", "minmax"}};
    if (!extra_meta.empty()) ckpt.meta["run"] = extra_meta;
    save_params_into(ckpt, params());
    ckpt.save(path);
}

CCNet CCNet::load_checkpoint(const std::string& path) {
    Checkpoint ckpt = Checkpoint::load(path);
    if (ckpt.meta.value("arch", "") != "ccnet") {
        throw DataError("checkpoint " + path + " is not a ccnet checkpoint");
    }
    CCNet net(CcnetConfig::variant(ckpt.meta.at("variant").get<std::string>()));
    load_params_from(ckpt, net.params());
    net.ready_ = true;
    return net;
}

CcnetTrainReport train_ccnet(CCNet& net,
                             const std::vector<CompositionSample>& train_set,
                             const Hyperparams& hp, CompositionLossMode mode) {
    hp.validate();
    if (train_set.empty()) {
        throw DataError("train_ccnet: empty training set");
    }
    const auto t0 = std::chrono::steady_clock::now();

    net.init_xavier(hp.seed);
    auto params = net.params();
    nn::Adam adam(hp.learning_rate);

    std::vector<nn::Tensor> inputs;
    inputs.reserve(train_set.size());
    for (const auto& s : train_set) {
        inputs.push_back(nn::tensor_from_image(s.image));
    }

    CcnetTrainReport report;
    report.epoch_losses.reserve(hp.epochs);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    CCNet::Cache cache;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        Rng erng = make_rng(derive_seed(hp.seed, 0x65706f630000ULL + epoch));
        shuffle(order, erng);
        double epoch_loss = 0.0;
        std::size_t done = 0;
        while (done < order.size()) {
            const std::size_t batch =
                std::min<std::size_t>(hp.batch_size, order.size() - done);
            nn::zero_grads(params);
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t idx = order[done + b];
                const auto& sample = train_set[idx];
                std::vector<double> logits =
                    net.forward_logits(inputs[idx], &cache);
                std::vector<double> dlogits;
                double loss;
                if (mode == CompositionLossMode::kSingleLabel) {
                    loss = nn::cross_entropy(logits, sample.label.first(),
                                             &dlogits);
                } else {
                    loss = nn::binary_cross_entropy(
                        logits, sample.label.as_vector(), &dlogits);
                }
                if (!std::isfinite(loss)) {
                    throw NumericError(
                        "train_ccnet: non-finite loss at epoch " +
                        std::to_string(epoch) + ", sample " +
                        sample.image.source_id);
                }
                epoch_loss += loss;
                net.backward(dlogits, cache);
            }
            nn::scale_grads(params, 1.0 / static_cast<double>(batch));
            adam.step(params);
            done += batch;
        }
        report.epoch_losses.push_back(epoch_loss /
                                      static_cast<double>(order.size()));
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return report;
}

CompositionMetrics composition_metrics(
    const std::vector<int>& predictions,
    const std::vector<CompositionLabel>& truths) {
    if (predictions.size() != truths.size() || predictions.empty()) {
        throw DataError("composition_metrics: empty or mismatched inputs");
    }
    const int k = kNumCompositionClasses;
    std::vector<int> tp(k, 0), fp(k, 0), fn(k, 0), support(k, 0);
    int correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int pred = predictions[i];
        const auto& truth = truths[i];
        for (int c = 0; c < k; ++c) {
            if (truth.is_set(c)) ++support[c];
        }
        if (truth.is_set(pred)) {
            ++correct;
            ++tp[pred];
        } else {
            ++fp[pred];
            for (int c = 0; c < k; ++c) {
                if (truth.is_set(c)) ++fn[c];
            }
        }
    }

    CompositionMetrics m;
    m.n_samples = static_cast<int>(predictions.size());
    m.accuracy = static_cast<double>(correct) / predictions.size();
    int classes_counted = 0;
    for (int c = 0; c < k; ++c) {
        if (support[c] == 0) continue;  // macro over classes present in truth
        ++classes_counted;
        const int pred_c = tp[c] + fp[c];
        const double prec = pred_c ? static_cast<double>(tp[c]) / pred_c : 0.0;
        const double rec = static_cast<double>(tp[c]) / (tp[c] + fn[c]);
        m.macro_precision += prec;
        m.macro_recall += rec;
        if (prec + rec > 0.0) {
            m.macro_f1 += 2.0 * prec * rec / (prec + rec);
        }
    }
    if (classes_counted) {
        m.macro_precision /= classes_counted;
        m.macro_recall /= classes_counted;
        m.macro_f1 /= classes_counted;
    }
    return m;
}

int predict_composition(const CCNet& net, const GrayscaleImage& img) {
    const CcnetOutput out = net.forward(img);
    return static_cast<int>(std::max_element(out.scores.logits.begin(),
                                             out.scores.logits.end()) -
                            out.scores.logits.begin());
}

CompositionMetrics evaluate_composition(
    const CCNet& net, const std::vector<CompositionSample>& test_set) {
    if (test_set.empty()) {
        throw DataError("evaluate_composition: empty test set");
    }
    std::vector<int> preds;
    std::vector<CompositionLabel> truths;
    preds.reserve(test_set.size());
    truths.reserve(test_set.size());
    for (const auto& s : test_set) {
        preds.push_back(predict_composition(net, s.image));
        truths.push_back(s.label);
    }
    return composition_metrics(preds, truths);
}

}  // namespace ccbir
