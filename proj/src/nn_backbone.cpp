#include "ccbir/nn/backbone.hpp"

#include "ccbir/common.hpp"

namespace ccbir::nn {

std::string BackboneConfig::variant_name() const {
    return bottleneck() ? "resnet50-layout" : "tiny";
}

BackboneConfig BackboneConfig::tiny() {
    BackboneConfig cfg;
    cfg.variant = Variant::kTiny;
    cfg.stem = {8, 5, 4, 2, false};
    cfg.stages = {{{12, 1, 2}, {16, 1, 2}, {24, 1, 2}, {32, 1, 1}}};
    return cfg;
}

BackboneConfig BackboneConfig::resnet50_layout() {
    BackboneConfig cfg;
    cfg.variant = Variant::kResNet50Layout;
    cfg.stem = {64, 7, 2, 3, true};
    cfg.stages = {{{256, 3, 1}, {512, 4, 2}, {1024, 6, 2}, {2048, 3, 2}}};
    return cfg;
}

BackboneConfig BackboneConfig::from_name(const std::string& name) {
    if (name == "tiny") return tiny();
    if (name == "resnet50-layout") return resnet50_layout();
    throw ConfigError("unknown backbone variant: " + name);
}

Backbone::Backbone(const BackboneConfig& cfg, const std::string& prefix)
    : cfg_(cfg) {
    stem_ = Conv2d(prefix + ".f0", cfg.input_channels, cfg.stem.out_ch,
                   cfg.stem.kernel, cfg.stem.stride, cfg.stem.pad);
    int in_ch = cfg.stem.out_ch;
    for (int s = 0; s < 4; ++s) {
        const auto& st = cfg.stages[s];
        for (int b = 0; b < st.blocks; ++b) {
            const int stride = b == 0 ? st.stride : 1;
            const std::string name =
                prefix + ".f" + std::to_string(s + 1) + "." + std::to_string(b);
            if (cfg.bottleneck()) {
                const int mid = st.out_ch / 4;
                BottleneckBlock blk;
                blk.c1 = Conv2d(name + ".c1", in_ch, mid, 1, 1, 0);
                blk.c2 = Conv2d(name + ".c2", mid, mid, 3, stride, 1);
                blk.c3 = Conv2d(name + ".c3", mid, st.out_ch, 1, 1, 0);
                if (stride != 1 || in_ch != st.out_ch) {
                    blk.proj =
                        Conv2d(name + ".proj", in_ch, st.out_ch, 1, stride, 0);
                }
                stages_[s].push_back(std::move(blk));
            } else {
                stages_[s].push_back(
                    PlainBlock{Conv2d(name, in_ch, st.out_ch, 3, stride, 1)});
            }
            in_ch = st.out_ch;
        }
    }
}

Tensor Backbone::forward_block(const Block& blk, const Tensor& x,
                               BlockCache* cache) const {
    if (const auto* plain = std::get_if<PlainBlock>(&blk)) {
        PlainBlockCache* pc = nullptr;
        if (cache) {
            *cache = PlainBlockCache{};
            pc = &std::get<PlainBlockCache>(*cache);
        }
        Tensor y = plain->conv.forward(x, pc ? &pc->conv : nullptr);
        return relu(y, pc ? &pc->mask : nullptr);
    }
    const auto& bn = std::get<BottleneckBlock>(blk);
    BottleneckCache* bc = nullptr;
    if (cache) {
        *cache = BottleneckCache{};
        bc = &std::get<BottleneckCache>(*cache);
        bc->has_proj = bn.proj.has_value();
    }
    Tensor h1 = relu(bn.c1.forward(x, bc ? &bc->c1 : nullptr),
                     bc ? &bc->m1 : nullptr);
    Tensor h2 = relu(bn.c2.forward(h1, bc ? &bc->c2 : nullptr),
                     bc ? &bc->m2 : nullptr);
    Tensor z = bn.c3.forward(h2, bc ? &bc->c3 : nullptr);
    Tensor sc = bn.proj ? bn.proj->forward(x, bc ? &bc->proj : nullptr) : x;
    if (!z.same_shape(sc)) {
        throw ShapeError("bottleneck shortcut shape mismatch: " +
                         z.shape_str() + " vs " + sc.shape_str());
    }
    for (std::size_t i = 0; i < z.v.size(); ++i) z.v[i] += sc.v[i];
    return relu(z, bc ? &bc->m_out : nullptr);
}

Tensor Backbone::backward_block(Block& blk, const Tensor& dy,
                                const BlockCache& cache) {
    if (auto* plain = std::get_if<PlainBlock>(&blk)) {
        const auto& pc = std::get<PlainBlockCache>(cache);
        Tensor dz = relu_backward(dy, pc.mask);
        return plain->conv.backward(dz, pc.conv);
    }
    auto& bn = std::get<BottleneckBlock>(blk);
    const auto& bc = std::get<BottleneckCache>(cache);
    Tensor dz = relu_backward(dy, bc.m_out);
    Tensor dh2 = bn.c3.backward(dz, bc.c3);
    Tensor dh1 = bn.c2.backward(relu_backward(dh2, bc.m2), bc.c2);
    Tensor dx = bn.c1.backward(relu_backward(dh1, bc.m1), bc.c1);
    if (bn.proj) {
        Tensor dsc = bn.proj->backward(dz, bc.proj);
        for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dsc.v[i];
    } else {
        for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dz.v[i];
    }
    return dx;
}

Backbone::StageOutputs Backbone::forward(const Tensor& x, Cache* cache) const {
    Tensor a = stem_.forward(x, cache ? &cache->stem_conv : nullptr);
    a = relu(a, cache ? &cache->stem_mask : nullptr);
    if (cfg_.stem.maxpool) {
        if (cache) cache->stem_channels = a.c;
        a = pool_.forward(a, cache ? &cache->pool : nullptr);
    }
    StageOutputs out;
    for (int s = 0; s < 4; ++s) {
        if (cache) cache->stages[s].resize(stages_[s].size());
        for (std::size_t b = 0; b < stages_[s].size(); ++b) {
            a = forward_block(stages_[s][b], a,
                              cache ? &cache->stages[s][b] : nullptr);
        }
        if (s == 1) out.a2 = a;
        if (s == 2) out.a3 = a;
    }
    out.a4 = std::move(a);
    return out;
}

Tensor Backbone::backward(const Tensor& da4, const Tensor* da3_extra,
                          const Tensor* da2_extra, const Cache& cache) {
    Tensor d = da4;
    for (int s = 3; s >= 0; --s) {
        for (int b = static_cast<int>(stages_[s].size()) - 1; b >= 0; --b) {
            d = backward_block(stages_[s][b], d, cache.stages[s][b]);
        }
        const Tensor* extra = s == 3 ? da3_extra : (s == 2 ? da2_extra : nullptr);
        if (extra) {
            if (!d.same_shape(*extra)) {
                throw ShapeError("skip gradient shape mismatch: " +
                                 d.shape_str() + " vs " + extra->shape_str());
            }
            for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] += extra->v[i];
        }
    }
    if (cfg_.stem.maxpool) {
        d = pool_.backward(d, cache.stem_channels, cache.pool);
    }
    d = relu_backward(d, cache.stem_mask);
    return stem_.backward(d, cache.stem_conv);
}

void Backbone::collect_params(std::vector<Param>& out) {
    stem_.collect_params(out);
    for (auto& stage : stages_) {
        for (auto& blk : stage) {
            if (auto* plain = std::get_if<PlainBlock>(&blk)) {
                plain->conv.collect_params(out);
            } else {
                auto& bn = std::get<BottleneckBlock>(blk);
                bn.c1.collect_params(out);
                bn.c2.collect_params(out);
                bn.c3.collect_params(out);
                if (bn.proj) bn.proj->collect_params(out);
            }
        }
    }
}

namespace {
void xavier_conv(Conv2d& conv, int kernel, Rng& rng) {
    const int fan_in = conv.in_channels() * kernel * kernel;
    const int fan_out = conv.out_channels() * kernel * kernel;
    xavier_fill(conv.w, fan_in, fan_out, rng);
    std::fill(conv.b.begin(), conv.b.end(), 0.0);
}
}  // namespace

void Backbone::init_xavier(Rng& rng) {
    xavier_conv(stem_, cfg_.stem.kernel, rng);
    for (auto& stage : stages_) {
        for (auto& blk : stage) {
            if (auto* plain = std::get_if<PlainBlock>(&blk)) {
                xavier_conv(plain->conv, 3, rng);
            } else {
                auto& bn = std::get<BottleneckBlock>(blk);
                xavier_conv(bn.c1, 1, rng);
                xavier_conv(bn.c2, 3, rng);
                xavier_conv(bn.c3, 1, rng);
                if (bn.proj) xavier_conv(*bn.proj, 1, rng);
            }
        }
    }
}

}  // namespace ccbir::nn
