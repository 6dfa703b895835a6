#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stella/nn.hpp"
#include "stella/tc_patch.hpp"
#include "stella/tensor.hpp"

namespace stella {

struct LagInfo {
    int64_t lag = 0;
    real autocorr = 0.0;
};

struct BehavioralSignature {
    real min = 0, max = 0, mean = 0, var = 0;
    real slope = 0;  // least-squares slope per unit step
    std::string trend_category;
    std::vector<LagInfo> top_lags;  // sorted by |autocorr| descending
};

// Per-window stats, OLS slope with five-way categorization, and top-K
// autocorrelation lags. Constant series get category "stable" and no lags.
BehavioralSignature extract_signature(const std::vector<real>& series, int64_t top_k);

// Locale-independent, 4 significant digits.
std::string format_signif(real v);

std::string render_fbp_text(const BehavioralSignature& sig, ComponentKind kind);

struct CorpusMetadata {
    std::string domain;     // e.g. "Temperature"
    std::string frequency;  // e.g. "1 hour"
    int64_t channels = 0;
};
std::string render_csp_text(const CorpusMetadata& meta);

// Deterministic stand-in for a frozen LLM tokenizer + embedding table:
// whitespace words hash into fixed buckets, anything non-alphabetic falls
// back to per-byte tokens; the V x D table is seeded once and never trained.
struct FrozenTextEncoder {
    static constexpr int64_t kVocab = 4096;
    Tensor table;  // V x D, frozen
    int64_t d_model = 0;

    FrozenTextEncoder() = default;
    FrozenTextEncoder(int64_t d_model, uint64_t seed);

    std::vector<int64_t> tokenize(const std::string& text) const;
    // L x D embedding rows; keys and values coincide before projection.
    Tensor embed(const std::string& text) const;
};

// Single-head cross-attention with rank-limited q/k/v maps.
struct CrossAttention {
    Tensor queries;        // G x D, learnable
    Tensor wq, wk;         // D x r each (rank-limited score space)
    Tensor wv_down;        // D x r
    Tensor wv_up;          // r x D
    int64_t rank = 32;

    CrossAttention() = default;
    CrossAttention(int64_t prompt_len, int64_t d_model, int64_t rank, Rng& rng);
    // kv: L x D -> G x D. Fails when L == 0 (no attendable keys).
    Tensor distill(const Tensor& kv) const;
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

struct SegmentSpan {
    std::string name;  // csp, fbp_T, emb_T, fbp_S, ...
    int64_t offset = 0;
    int64_t length = 0;
};

struct SequenceLayout {
    std::vector<SegmentSpan> segments;
    int64_t total = 0;
    std::optional<SegmentSpan> find(const std::string& name) const;
};

struct SemanticAnchors {
    Tensor csp;                 // B x G_csp x D (undefined when ablated)
    std::vector<Tensor> fbp;    // per component, (B*C) x G_fbp x D
};

struct SamConfig {
    int64_t g_fbp = 6;
    int64_t g_csp = 10;
    int64_t top_k_lags = 3;
    int64_t rank = 32;
    bool use_fbp = true;
    bool use_csp = true;
};

// The Semantic Anchor Module: signature -> text -> frozen embedding ->
// learned cross-attention distillation, scoped per instance and component.
struct SemanticAnchorModule {
    SamConfig cfg;
    FrozenTextEncoder encoder;
    std::vector<CrossAttention> fbp_attn;  // one per component (T, S, R)
    CrossAttention csp_attn;

    SemanticAnchorModule() = default;
    SemanticAnchorModule(SamConfig cfg, int64_t d_model, uint64_t encoder_seed, Rng& rng);

    // components: three B x S x C tensors; values are read detached.
    SemanticAnchors anchors(const std::vector<Tensor>& components, const CorpusMetadata& meta,
                            int64_t batch) const;
    Tensor distill_fbp_one(const std::string& text, ComponentKind kind) const;
    Tensor distill_csp(const CorpusMetadata& meta) const;  // 1 x G_csp x D
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

// X_in = [CSP^(broadcast C); FBP_T; E_T; FBP_S; E_S; FBP_R; E_R].
std::pair<Tensor, SequenceLayout> assemble_input(const SemanticAnchors& anchors,
                                                 const std::vector<Tensor>& embeddings,
                                                 int64_t batch, int64_t channels);

}  // namespace stella
