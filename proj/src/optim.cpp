#include "idsc/optim.hpp"

#include <cmath>
#include <string>

#include "idsc/errors.hpp"

namespace idsc {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate(const AdamWConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ContractError("optimizer: lr must be positive");
  if (cfg.lr_final < 0.0 || cfg.lr_final > cfg.lr) {
    throw ContractError("optimizer: lr_final must lie in [0, lr]");
  }
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
    throw ContractError("optimizer: betas must lie in [0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw ContractError("optimizer: eps must be positive");
  if (cfg.total_steps < 1) throw ContractError("optimizer: total_steps must be positive");
  if (cfg.warm_frac < 0.0 || cfg.warm_frac > 1.0) {
    throw ContractError("optimizer: warm_frac must lie in [0, 1]");
  }
  if (cfg.weight_decay < 0.0) throw ContractError("optimizer: weight decay must be >= 0");
}

}  // namespace

double cosine_lr(const AdamWConfig& cfg, int step) {
  validate(cfg);
  if (step < 0) throw ContractError("cosine_lr: negative step");
  const int warm = static_cast<int>(cfg.warm_frac * cfg.total_steps);
  if (step < warm) return cfg.lr;
  const int span = cfg.total_steps - 1 - warm;
  if (span <= 0) return step >= cfg.total_steps - 1 ? cfg.lr_final : cfg.lr;
  const double p = std::min(1.0, static_cast<double>(step - warm) / span);
  return cfg.lr_final + (cfg.lr - cfg.lr_final) * 0.5 * (1.0 + std::cos(kPi * p));
}

double global_norm(const std::vector<const Tensor*>& grads) {
  double sq = 0.0;
  for (const Tensor* g : grads) {
    if (g == nullptr) throw ContractError("global_norm: null gradient");
    for (int64_t i = 0; i < g->numel(); ++i) {
      const double v = (*g)[i];
      sq += v * v;
    }
  }
  return std::sqrt(sq);
}

AdamW::AdamW(std::vector<Tensor*> params, const AdamWConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  validate(cfg_);
  if (params_.empty()) throw ContractError("optimizer: no parameters");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Tensor* p : params_) {
    if (p == nullptr) throw ContractError("optimizer: null parameter");
    m_.emplace_back(p->shape());
    v_.emplace_back(p->shape());
  }
}

double AdamW::step(const std::vector<const Tensor*>& grads) {
  if (grads.size() != params_.size()) {
    throw ContractError("optimizer: got " + std::to_string(grads.size()) + " gradients for " +
                        std::to_string(params_.size()) + " parameters");
  }
  for (size_t i = 0; i < grads.size(); ++i) {
    if (grads[i] == nullptr) throw ContractError("optimizer: null gradient");
    if (grads[i]->shape() != params_[i]->shape()) {
      throw ContractError("optimizer: gradient shape mismatch at index " + std::to_string(i));
    }
  }

  double scale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    const double norm = global_norm(grads);
    if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
  }

  const double lr = cosine_lr(cfg_, t_);
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);

  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    const Tensor& g = *grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int64_t j = 0; j < p.numel(); ++j) {
      const double gj = scale * static_cast<double>(g[j]);
      const double mj = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      const double vj = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double update = (mj / bc1) / (std::sqrt(vj / bc2) + cfg_.eps) +
                            cfg_.weight_decay * static_cast<double>(p[j]);
      p[j] = static_cast<float>(p[j] - lr * update);
    }
  }
  return lr;
}

}  // namespace idsc
