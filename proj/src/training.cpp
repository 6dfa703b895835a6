#include "stella/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stella {

LossKind loss_kind_from(const std::string& name) {
    if (name == "mae") return LossKind::mae;
    if (name == "mse") return LossKind::mse;
    if (name == "smape") return LossKind::smape;
    throw std::runtime_error("unknown loss kind '" + name + "'");
}

const char* loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::mae: return "mae";
        case LossKind::mse: return "mse";
        default: return "smape";
    }
}

Tensor loss(const Tensor& pred, const Tensor& target, LossKind kind) {
    if (pred.shape() != target.shape()) tensor_fail("loss: shape mismatch");
    switch (kind) {
        case LossKind::mae:
            return mean(abs(pred - target));
        case LossKind::mse: {
            Tensor d = pred - target;
            return mean(d * d);
        }
        case LossKind::smape: {
            Tensor den = abs(pred) + abs(target);
            // both-zero terms must contribute exactly 0: bump only the zero
            // denominators (the matching numerators are zero too)
            Tensor bump = Tensor::zeros(den.shape());
            for (int64_t i = 0; i < den.size(); ++i)
                if (den.data()[static_cast<size_t>(i)] == 0)
                    bump.data()[static_cast<size_t>(i)] = 1.0;
            return Tensor::scalar(200.0) * mean(abs(pred - target) / (den + bump));
        }
    }
    tensor_fail("loss: unreachable");
}

real lr_at(int64_t epoch, const TrainConfig& cfg) {
    real lo = cfg.lr_target / 100.0;
    if (epoch < cfg.warmup_epochs)
        return lo + (cfg.lr_target - lo) * static_cast<real>(epoch) /
                        static_cast<real>(cfg.warmup_epochs);
    return cfg.lr_target * std::pow(cfg.decay_rate, static_cast<real>(epoch - cfg.warmup_epochs));
}

Adam::Adam(std::vector<Tensor> params, real beta1, real beta2, real eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(static_cast<size_t>(p.size()), 0.0);
        v_.emplace_back(static_cast<size_t>(p.size()), 0.0);
    }
}

void Adam::step(real lr) {
    ++t_;
    real bc1 = 1.0 - std::pow(beta1_, static_cast<real>(t_));
    real bc2 = 1.0 - std::pow(beta2_, static_cast<real>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i];
        if (p.grad().empty()) continue;
        auto& value = p.data();
        const auto& g = p.grad();
        for (size_t j = 0; j < value.size(); ++j) {
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
            real mhat = m_[i][j] / bc1;
            real vhat = v_[i][j] / bc2;
            value[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

std::string TrainHistory::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,train_loss,val_loss,lr\n";
    for (const auto& e : epochs)
        out << e.epoch << "," << e.train_loss << "," << e.val_loss << "," << e.lr << "\n";
    return out.str();
}

namespace {

real param_norm(const ParamRegistry& reg) {
    real acc = 0;
    for (const auto& p : reg.all())
        for (real v : p.tensor.data()) acc += v * v;
    return std::sqrt(acc);
}

std::vector<std::vector<real>> snapshot(const ParamRegistry& reg) {
    std::vector<std::vector<real>> out;
    for (const auto& p : reg.all()) out.push_back(p.tensor.data());
    return out;
}

void restore(ParamRegistry& reg, const std::vector<std::vector<real>>& snap) {
    for (size_t i = 0; i < snap.size(); ++i) reg.all()[i].tensor.data() = snap[i];
}

}  // namespace

real evaluate_loss(const StellaModel& model, const SeriesTable& table, const SplitBundle& bundle,
                   Split split, const TrainConfig& cfg) {
    WindowStream stream(table, bundle, split, model.cfg.seq_len, model.cfg.horizon,
                        cfg.batch_size, false, cfg.seed);
    Rng rng(cfg.seed);  // unused in eval mode (dropout off)
    real acc = 0;
    int64_t count = 0;
    while (auto batch = stream.next()) {
        ForwardResult fr = model.forward(batch->x, false, rng);
        Tensor l = loss(fr.yhat, batch->y, cfg.loss_kind);
        int64_t b = batch->x.shape()[0];
        acc += l.item() * static_cast<real>(b);
        count += b;
    }
    return acc / static_cast<real>(count);
}

MetricReport evaluate_metrics(const StellaModel& model, const SeriesTable& table,
                              const SplitBundle& bundle, Split split, const TrainConfig& cfg) {
    WindowStream stream(table, bundle, split, model.cfg.seq_len, model.cfg.horizon,
                        cfg.batch_size, false, cfg.seed);
    Rng rng(cfg.seed);
    std::vector<double> y, yhat;
    while (auto batch = stream.next()) {
        ForwardResult fr = model.forward(batch->x, false, rng);
        const auto& pd = fr.yhat.data();
        const auto& td = batch->y.data();
        yhat.insert(yhat.end(), pd.begin(), pd.end());
        y.insert(y.end(), td.begin(), td.end());
    }
    PointMetrics pm = point_metrics(y, yhat);
    MetricReport report;
    report.values["mse"] = pm.mse;
    report.values["mae"] = pm.mae;
    report.values["smape"] = pm.smape;
    report.values["mape"] = pm.mape;
    report.values["samples"] = static_cast<double>(y.size()) /
                               static_cast<double>(model.cfg.horizon * model.cfg.channels);
    return report;
}

SplitBundle few_shot_bundle(const SplitBundle& bundle, real fraction, int64_t seq_len,
                            int64_t horizon) {
    if (fraction <= 0 || fraction > 1)
        throw std::runtime_error("few-shot fraction must lie in (0, 1]");
    SplitBundle out = bundle;
    int64_t len = bundle.train.length();
    int64_t keep = static_cast<int64_t>(std::floor(static_cast<real>(len) * fraction));
    if (keep < seq_len + horizon)
        throw std::runtime_error("few-shot fraction leaves fewer than S+H train rows");
    out.train.end = bundle.train.begin + keep;
    return out;
}

TrainHistory train(StellaModel& model, const SeriesTable& table, const SplitBundle& bundle,
                   const TrainConfig& cfg) {
    if (cfg.warmup_epochs >= cfg.max_epochs)
        throw std::runtime_error("warmup_epochs must be below max_epochs");
    ParamRegistry reg = model.parameters();
    std::vector<Tensor> trainable = reg.trainable();
    Adam opt(trainable);
    Rng rng(cfg.seed + 1);
    WindowStream stream(table, bundle, Split::train, model.cfg.seq_len, model.cfg.horizon,
                        cfg.batch_size, true, cfg.seed, cfg.oversample);

    TrainHistory history;
    history.best_val_loss = std::numeric_limits<real>::infinity();
    std::vector<std::vector<real>> best;
    int64_t since_best = 0;
    for (int64_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        real lr = lr_at(epoch, cfg);
        real train_acc = 0;
        int64_t train_count = 0;
        int64_t batch_index = 0;
        if (epoch > 0) stream.start_epoch();
        while (auto batch = stream.next()) {
            opt.zero_grad();
            ForwardResult fr = model.forward(batch->x, true, rng);
            Tensor l = loss(fr.yhat, batch->y, cfg.loss_kind);
            real lv = l.item();
            if (!std::isfinite(lv))
                throw std::runtime_error(
                    "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                    std::to_string(batch_index) +
                    " (parameter norm " + std::to_string(param_norm(reg)) + ")");
            l.backward();
            clip_grad_norm(trainable, cfg.clip_norm);
            opt.step(lr);
            int64_t b = batch->x.shape()[0];
            train_acc += lv * static_cast<real>(b);
            train_count += b;
            ++batch_index;
        }
        real val = evaluate_loss(model, table, bundle, Split::val, cfg);
        history.epochs.push_back(
            {epoch, train_acc / static_cast<real>(train_count), val, lr});
        if (val < history.best_val_loss) {
            history.best_val_loss = val;
            history.best_epoch = epoch;
            best = snapshot(reg);
            since_best = 0;
        } else {
            ++since_best;
        }
        if (epoch + 1 > cfg.warmup_epochs && since_best >= cfg.patience) {
            history.early_stopped = true;
            break;
        }
    }
    if (!best.empty()) restore(reg, best);
    return history;
}

}  // namespace stella
