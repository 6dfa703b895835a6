#include "stella/semantic_anchor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace stella {

BehavioralSignature extract_signature(const std::vector<real>& z, int64_t top_k) {
    int64_t s = static_cast<int64_t>(z.size());
    if (s < 3) tensor_fail("extract_signature needs S >= 3");
    if (top_k < 1) tensor_fail("extract_signature needs K >= 1");
    BehavioralSignature sig;
    sig.min = *std::min_element(z.begin(), z.end());
    sig.max = *std::max_element(z.begin(), z.end());
    real sum = 0;
    for (real v : z) sum += v;
    sig.mean = sum / static_cast<real>(s);
    real var = 0;
    for (real v : z) var += (v - sig.mean) * (v - sig.mean);
    sig.var = var / static_cast<real>(s);

    // OLS slope on (t, z_t).
    real tbar = (static_cast<real>(s) - 1) / 2;
    real num = 0, den = 0;
    for (int64_t t = 0; t < s; ++t) {
        real dt = static_cast<real>(t) - tbar;
        num += dt * (z[static_cast<size_t>(t)] - sig.mean);
        den += dt * dt;
    }
    sig.slope = num / den;

    real range = sig.max - sig.min;
    if (range <= 0) {
        // constant series: quash accumulation dust, autocorrelation undefined
        sig.mean = sig.min;
        sig.var = 0;
        sig.slope = 0;
        sig.trend_category = "stable";
        return sig;
    }
    sig.mean = std::clamp(sig.mean, sig.min, sig.max);
    real ns = sig.slope / (range / static_cast<real>(s));
    if (ns > 0.25)
        sig.trend_category = "strongly increasing";
    else if (ns > 0.05)
        sig.trend_category = "slightly increasing";
    else if (ns >= -0.05)
        sig.trend_category = "stable";
    else if (ns >= -0.25)
        sig.trend_category = "slightly decreasing";
    else
        sig.trend_category = "strongly decreasing";

    if (sig.var <= 0) return sig;
    std::vector<LagInfo> lags;
    for (int64_t lag = 1; lag < s; ++lag) {
        real acc = 0;
        for (int64_t t = 0; t + lag < s; ++t)
            acc += (z[static_cast<size_t>(t)] - sig.mean) *
                   (z[static_cast<size_t>(t + lag)] - sig.mean);
        real r = acc / (static_cast<real>(s - lag) * sig.var);
        r = std::clamp(r, static_cast<real>(-1.0), static_cast<real>(1.0));
        lags.push_back({lag, r});
    }
    std::stable_sort(lags.begin(), lags.end(), [](const LagInfo& a, const LagInfo& b) {
        if (std::abs(a.autocorr) != std::abs(b.autocorr))
            return std::abs(a.autocorr) > std::abs(b.autocorr);
        // equal magnitude: prefer the positive (in-phase) lag, then the shorter
        if (a.autocorr != b.autocorr) return a.autocorr > b.autocorr;
        return a.lag < b.lag;
    });
    lags.resize(static_cast<size_t>(std::min<int64_t>(top_k, static_cast<int64_t>(lags.size()))));
    sig.top_lags = std::move(lags);
    return sig;
}

std::string format_signif(real v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string render_fbp_text(const BehavioralSignature& sig, ComponentKind kind) {
    std::ostringstream os;
    os << "The " << component_name(kind) << " component ranges from " << format_signif(sig.min)
       << " to " << format_signif(sig.max) << " with mean " << format_signif(sig.mean)
       << " and variance " << format_signif(sig.var) << " . Its overall movement is "
       << sig.trend_category << " .";
    if (sig.top_lags.empty()) {
        os << " No dominant periodic lag was detected .";
    } else {
        for (const LagInfo& l : sig.top_lags)
            os << " A notable autocorrelation of " << format_signif(l.autocorr)
               << " occurs at lag " << l.lag << " .";
    }
    return os.str();
}

std::string render_csp_text(const CorpusMetadata& meta) {
    std::ostringstream os;
    os << "This dataset comes from the " << (meta.domain.empty() ? "unknown" : meta.domain)
       << " domain , sampled every " << (meta.frequency.empty() ? "unknown" : meta.frequency)
       << " , with "
       << (meta.channels > 0 ? std::to_string(meta.channels) : std::string("unknown"))
       << " variables .";
    return os.str();
}

namespace {
uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}
bool all_alpha(const std::string& s) {
    for (unsigned char c : s)
        if (!std::isalpha(c)) return false;
    return !s.empty();
}
}  // namespace

FrozenTextEncoder::FrozenTextEncoder(int64_t d, uint64_t seed) : d_model(d) {
    Rng rng(seed);
    std::vector<real> data(static_cast<size_t>(kVocab * d));
    real stddev = 1.0 / std::sqrt(static_cast<real>(d));
    for (real& v : data) v = rng.normal(0.0, stddev);
    table = Tensor::from({kVocab, d}, std::move(data), false);
}

std::vector<int64_t> FrozenTextEncoder::tokenize(const std::string& text) const {
    std::vector<int64_t> ids;
    std::istringstream is(text);
    std::string word;
    while (is >> word) {
        if (all_alpha(word)) {
            ids.push_back(256 + static_cast<int64_t>(fnv1a(word) % (kVocab - 256)));
        } else {
            for (unsigned char c : word) ids.push_back(c);  // byte fallback
        }
    }
    return ids;
}

Tensor FrozenTextEncoder::embed(const std::string& text) const {
    auto ids = tokenize(text);
    if (ids.empty()) tensor_fail("embed_text: empty text");
    int64_t n = static_cast<int64_t>(ids.size());
    std::vector<real> rows(static_cast<size_t>(n * d_model));
    for (int64_t i = 0; i < n; ++i)
        std::copy_n(table.data().begin() + ids[static_cast<size_t>(i)] * d_model, d_model,
                    rows.begin() + i * d_model);
    return Tensor::from({n, d_model}, std::move(rows), false);
}

CrossAttention::CrossAttention(int64_t g, int64_t d, int64_t r, Rng& rng) : rank(r) {
    queries = init_normal({g, d}, 1.0 / std::sqrt(static_cast<real>(d)), rng);
    wq = init_linear_weight(d, r, rng);
    wk = init_linear_weight(d, r, rng);
    wv_down = init_linear_weight(d, r, rng);
    wv_up = init_linear_weight(r, d, rng);
}

Tensor CrossAttention::distill(const Tensor& kv) const {
    if (kv.shape()[0] == 0) tensor_fail("cross-attention: no attendable keys");
    Tensor q = matmul(queries, wq);                     // G x r
    Tensor k = matmul(kv, wk);                          // L x r
    Tensor scores = matmul(q, permute(k, {1, 0}));      // G x L
    scores = scores / std::sqrt(static_cast<real>(rank));
    Tensor attn = softmax(scores, 1);
    Tensor v = matmul(matmul(kv, wv_down), wv_up);      // L x D
    return matmul(attn, v);                             // G x D
}

void CrossAttention::collect(ParamRegistry& reg, const std::string& prefix) const {
    reg.add(prefix + ".queries", queries);
    reg.add(prefix + ".wq", wq);
    reg.add(prefix + ".wk", wk);
    reg.add(prefix + ".wv_down", wv_down);
    reg.add(prefix + ".wv_up", wv_up);
}

std::optional<SegmentSpan> SequenceLayout::find(const std::string& name) const {
    for (const auto& s : segments)
        if (s.name == name) return s;
    return std::nullopt;
}

SemanticAnchorModule::SemanticAnchorModule(SamConfig c, int64_t d, uint64_t encoder_seed, Rng& rng)
    : cfg(c), encoder(d, encoder_seed) {
    for (int k = 0; k < 3; ++k) fbp_attn.emplace_back(cfg.g_fbp, d, cfg.rank, rng);
    csp_attn = CrossAttention(cfg.g_csp, d, cfg.rank, rng);
}

Tensor SemanticAnchorModule::distill_fbp_one(const std::string& text, ComponentKind kind) const {
    return fbp_attn[static_cast<size_t>(kind)].distill(encoder.embed(text));
}

Tensor SemanticAnchorModule::distill_csp(const CorpusMetadata& meta) const {
    Tensor p = csp_attn.distill(encoder.embed(render_csp_text(meta)));
    return reshape(p, {1, cfg.g_csp, encoder.d_model});
}

SemanticAnchors SemanticAnchorModule::anchors(const std::vector<Tensor>& components,
                                              const CorpusMetadata& meta, int64_t batch) const {
    SemanticAnchors out;
    if (cfg.use_csp) out.csp = distill_csp(meta);
    if (!cfg.use_fbp) return out;
    for (size_t k = 0; k < 3; ++k) {
        const Tensor& comp = components[k];
        int64_t B = comp.shape()[0], S = comp.shape()[1], C = comp.shape()[2];
        (void)batch;
        std::vector<Tensor> rows;
        rows.reserve(static_cast<size_t>(B * C));
        for (int64_t b = 0; b < B; ++b)
            for (int64_t c = 0; c < C; ++c) {
                std::vector<real> series(static_cast<size_t>(S));
                for (int64_t t = 0; t < S; ++t)
                    series[static_cast<size_t>(t)] = comp.data()[static_cast<size_t>(
                        (b * S + t) * C + c)];
                auto sig = extract_signature(series, cfg.top_k_lags);
                std::string text = render_fbp_text(sig, static_cast<ComponentKind>(k));
                Tensor p = distill_fbp_one(text, static_cast<ComponentKind>(k));
                rows.push_back(reshape(p, {1, cfg.g_fbp, encoder.d_model}));
            }
        out.fbp.push_back(concat(rows, 0));
    }
    return out;
}

void SemanticAnchorModule::collect(ParamRegistry& reg, const std::string& prefix) const {
    static const char* kKind[3] = {"trend", "seasonal", "residual"};
    if (cfg.use_fbp)
        for (size_t k = 0; k < 3; ++k)
            fbp_attn[k].collect(reg, prefix + ".fbp_" + kKind[k]);
    if (cfg.use_csp) csp_attn.collect(reg, prefix + ".csp");
}

namespace {
Tensor broadcast_rows(const Tensor& x, int64_t channels) {
    // B x G x D -> (B*C) x G x D, repeating each instance C times.
    int64_t B = x.shape()[0], G = x.shape()[1], D = x.shape()[2];
    std::vector<Tensor> rows;
    rows.reserve(static_cast<size_t>(B * channels));
    for (int64_t b = 0; b < B; ++b) {
        Tensor r = slice(x, 0, b, 1);
        for (int64_t c = 0; c < channels; ++c) rows.push_back(r);
    }
    Tensor out = concat(rows, 0);
    return reshape(out, {B * channels, G, D});
}
}  // namespace

std::pair<Tensor, SequenceLayout> assemble_input(const SemanticAnchors& anchors,
                                                 const std::vector<Tensor>& embeddings,
                                                 int64_t batch, int64_t channels) {
    static const char* kKind[3] = {"T", "S", "R"};
    std::vector<Tensor> parts;
    SequenceLayout layout;
    int64_t off = 0;
    auto push = [&](const std::string& name, const Tensor& t) {
        if (!parts.empty() && t.shape()[2] != parts[0].shape()[2])
            tensor_fail("assemble_input: hidden dim mismatch");
        parts.push_back(t);
        layout.segments.push_back({name, off, t.shape()[1]});
        off += t.shape()[1];
    };
    if (anchors.csp.defined()) {
        Tensor csp = anchors.csp;
        if (csp.shape()[0] == 1 && batch > 1) {
            std::vector<Tensor> reps(static_cast<size_t>(batch), csp);
            csp = concat(reps, 0);
        }
        push("csp", broadcast_rows(csp, channels));
    }
    for (size_t k = 0; k < 3; ++k) {
        if (!anchors.fbp.empty()) push(std::string("fbp_") + kKind[k], anchors.fbp[k]);
        push(std::string("emb_") + kKind[k], embeddings[k]);
    }
    layout.total = off;
    return {concat(parts, 1), layout};
}

}  // namespace stella
