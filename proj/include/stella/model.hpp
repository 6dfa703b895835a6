#pragma once

#include <string>
#include <vector>

#include "stella/backbone.hpp"
#include "stella/decode_fusion.hpp"
#include "stella/neural_stl.hpp"
#include "stella/normalization.hpp"
#include "stella/semantic_anchor.hpp"
#include "stella/tc_patch.hpp"
#include "stella/tensor.hpp"

namespace stella {

struct Ablation {
    bool no_nstl = false;
    bool no_tcp = false;
    bool no_fbp = false;
    bool no_csp = false;
};

struct ModelConfig {
    int64_t channels = 7;
    int64_t seq_len = 96;
    int64_t horizon = 96;
    int64_t stl_hidden = 16;
    PatchConfig patch;
    SamConfig sam;
    BackboneConfig backbone;
    Ablation ablation;
    uint64_t seed = 0;
};

struct ForwardResult {
    Tensor yhat;                    // B x H x C, original scale
    Tensor gates;                   // B x H x C x 3
    ComponentTriple components;     // normalized scale
    std::vector<Tensor> component_yhat;  // per-component forecasts (normalized)
    std::vector<Tensor> embeddings;      // E_T/E_S/E_R, (B*C) x P_n x D
    SemanticAnchors anchors;
    SequenceLayout layout;
};

// Full pipeline: ReVIN -> decomposition -> per-component patch encoders ->
// semantic anchors -> backbone -> component heads -> gated fusion -> inverse
// ReVIN.
struct StellaModel {
    ModelConfig cfg;
    CorpusMetadata meta;
    Revin revin;
    NeuralStl stl;
    std::vector<TcPatchEncoder> encoders;  // T, S, R
    SemanticAnchorModule sam;
    Backbone backbone;
    std::vector<DecodeHead> heads;  // T, S, R
    GatedFusion fusion;

    StellaModel() = default;
    StellaModel(const ModelConfig& cfg, const CorpusMetadata& meta);

    ForwardResult forward(const Tensor& x, bool training, Rng& rng) const;
    ParamRegistry parameters() const;
};

}  // namespace stella
