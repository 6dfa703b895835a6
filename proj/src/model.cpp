#include "stella/model.hpp"

namespace stella {

StellaModel::StellaModel(const ModelConfig& c, const CorpusMetadata& m) : cfg(c), meta(m) {
    Rng rng(cfg.seed);
    revin = Revin(cfg.channels);
    stl = NeuralStl(cfg.channels, cfg.stl_hidden, rng);
    stl.passthrough = cfg.ablation.no_nstl;
    for (int k = 0; k < 3; ++k)
        encoders.emplace_back(cfg.patch, cfg.seq_len, rng, cfg.ablation.no_tcp);
    SamConfig sam_cfg = cfg.sam;
    sam_cfg.use_fbp = !cfg.ablation.no_fbp;
    sam_cfg.use_csp = !cfg.ablation.no_csp;
    sam = SemanticAnchorModule(sam_cfg, cfg.patch.d_model, cfg.backbone.frozen_seed, rng);
    BackboneConfig bb = cfg.backbone;
    bb.d_model = cfg.patch.d_model;
    backbone = Backbone(bb);
    int64_t p_n = cfg.patch.patch_count(cfg.seq_len);
    for (int k = 0; k < 3; ++k) heads.emplace_back(p_n, cfg.patch.d_model, cfg.horizon, rng);
    fusion = GatedFusion(cfg.horizon, rng);
}

ForwardResult StellaModel::forward(const Tensor& x, bool training, Rng& rng) const {
    ForwardResult out;
    auto [xnorm, stats] = revin.normalize(x);
    out.components = stl.forward(xnorm);
    const Tensor* comps[3] = {&out.components.trend, &out.components.seasonal,
                              &out.components.residual};
    for (int k = 0; k < 3; ++k)
        out.embeddings.push_back(encoders[static_cast<size_t>(k)].encode(*comps[k], training, rng));
    int64_t b = x.shape()[0], c = x.shape()[2];
    out.anchors = sam.anchors({*comps[0], *comps[1], *comps[2]}, meta, b);
    auto [x_in, layout] = assemble_input(out.anchors, out.embeddings, b, c);
    out.layout = layout;
    std::vector<Tensor> z = backbone.forward(x_in, layout, training, rng);
    for (int k = 0; k < 3; ++k)
        out.component_yhat.push_back(heads[static_cast<size_t>(k)].forward(z[static_cast<size_t>(k)], b, c));
    FusionResult fr = fusion.fuse(out.component_yhat[0], out.component_yhat[1],
                                  out.component_yhat[2]);
    out.gates = fr.gates;
    out.yhat = revin.denormalize(fr.fused, stats);
    return out;
}

ParamRegistry StellaModel::parameters() const {
    ParamRegistry reg;
    revin.collect(reg, "revin");
    if (!stl.passthrough) stl.collect(reg, "stl");
    static const char* kKind[3] = {"trend", "seasonal", "residual"};
    for (int k = 0; k < 3; ++k)
        encoders[static_cast<size_t>(k)].collect(reg, std::string("encoder.") + kKind[k]);
    sam.collect(reg, "sam");
    backbone.collect(reg, "backbone");
    for (int k = 0; k < 3; ++k)
        heads[static_cast<size_t>(k)].collect(reg, std::string("head.") + kKind[k]);
    fusion.collect(reg, "fusion");
    return reg;
}

}  // namespace stella
