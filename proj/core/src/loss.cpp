#include "rgbdt/loss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rgbdt/error.hpp"

namespace rgbdt {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// log(p) that keeps precision for p close to one.
double log_of(double p, double complement) {
  return p > 0.5 ? std::log1p(-complement) : std::log(p);
}

}  // namespace

std::string_view to_string(LossFamily family) {
  switch (family) {
    case LossFamily::kCce: return "cce";
    case LossFamily::kMae: return "mae";
    case LossFamily::kFl: return "fl";
    case LossFamily::kGce: return "gce";
    case LossFamily::kSce: return "sce";
    case LossFamily::kNce: return "nce";
    case LossFamily::kRfl: return "rfl";
  }
  return "unknown";
}

LossFamily parse_loss_family(std::string_view name) {
  for (auto f : {LossFamily::kCce, LossFamily::kMae, LossFamily::kFl, LossFamily::kGce,
                 LossFamily::kSce, LossFamily::kNce, LossFamily::kRfl}) {
    if (to_string(f) == name) return f;
  }
  if (name == "focal") return LossFamily::kFl;
  if (name == "ce" || name == "logloss") return LossFamily::kCce;
  throw ConfigError("unknown loss family '" + std::string(name) + "'");
}

void LossSpec::validate() const {
  if (!finite_nonneg(r)) throw ConfigError("loss parameter r must be >= 0, got " + std::to_string(r));
  if (!(std::isfinite(q) && q > 0.0 && q <= 1.0))
    throw ConfigError("loss parameter q must lie in (0, 1], got " + std::to_string(q));
  if (!(std::isfinite(eta) && eta > 0.0 && eta < 0.5))
    throw ConfigError("loss parameter eta must lie in (0, 0.5), got " + std::to_string(eta));
  if (!finite_nonneg(sce_alpha) || !finite_nonneg(sce_beta))
    throw ConfigError("loss parameters sce_alpha and sce_beta must be >= 0");
  if (family == LossFamily::kSce && sce_alpha == 0.0 && sce_beta == 0.0)
    throw ConfigError("SCE needs sce_alpha or sce_beta to be positive");
}

LossSpec LossSpec::cce() { return {.family = LossFamily::kCce}; }
LossSpec LossSpec::mae() { return {.family = LossFamily::kMae}; }
LossSpec LossSpec::focal(double r) { return {.family = LossFamily::kFl, .r = r}; }
LossSpec LossSpec::gce(double q) { return {.family = LossFamily::kGce, .q = q}; }
LossSpec LossSpec::sce(double alpha, double beta) {
  return {.family = LossFamily::kSce, .sce_alpha = alpha, .sce_beta = beta};
}
LossSpec LossSpec::nce() { return {.family = LossFamily::kNce}; }
LossSpec LossSpec::rfl(double r, double q) { return {.family = LossFamily::kRfl, .r = r, .q = q}; }

std::string describe(const LossSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << "family=" << to_string(spec.family) << " r=" << spec.r << " q=" << spec.q
      << " eta=" << spec.eta << " sce_alpha=" << spec.sce_alpha << " sce_beta=" << spec.sce_beta
      << " imbalance_factor=" << (spec.imbalance_factor ? "true" : "false")
      << " safeguard=" << (spec.safeguard ? "true" : "false");
  return out.str();
}

PHat::PHat(double value) : value_(value), complement_(1.0 - value) {
  if (!(value > 0.0 && value < 1.0))
    throw DomainError("p-hat must lie strictly inside (0, 1), got " + std::to_string(value));
}

PHat PHat::from_label(int y, double p) {
  if (y != 0 && y != 1) throw DomainError("binary label must be 0 or 1");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must lie strictly inside (0, 1)");
  return y == 1 ? PHat(p, 1.0 - p) : PHat(1.0 - p, p);
}

PHat PHat::from_score(int y, double z) {
  if (y != 0 && y != 1) throw DomainError("binary label must be 0 or 1");
  if (std::isnan(z)) throw DomainError("raw score is NaN");
  const double s = std::clamp(y == 1 ? z : -z, -kScoreClamp, kScoreClamp);
  if (s >= 0.0) {
    const double e = std::exp(-s);
    return PHat(1.0 / (1.0 + e), e / (1.0 + e));
  }
  const double e = std::exp(s);
  return PHat(e / (1.0 + e), 1.0 / (1.0 + e));
}

double sigmoid(double z) {
  const double s = std::clamp(z, -kScoreClamp, kScoreClamp);
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

PHat effective_phat(const LossSpec& spec, PHat phat) {
  const bool shifted = spec.safeguard &&
                       (spec.family == LossFamily::kMae || spec.family == LossFamily::kNce) &&
                       phat.value() <= 0.5;
  if (!shifted) return phat;
  return PHat(phat.value() + spec.eta, phat.complement() - spec.eta);
}

Loss::Loss(LossSpec spec) : spec_(spec) {
  spec_.validate();
  switch (spec_.family) {
    case LossFamily::kFl:
    case LossFamily::kRfl:
      has_factor_ = true;
      break;
    case LossFamily::kMae:
    case LossFamily::kSce:
    case LossFamily::kNce:
      has_factor_ = spec_.imbalance_factor;
      break;
    default:
      has_factor_ = false;
  }
}

// Value and first two derivatives in p of the family at (p, s = 1 - p),
// including the optional (1 - p)^r factor via the product rule.
Loss::Terms Loss::evaluate(double p, double s) const {
  double b = 0.0, b1 = 0.0, b2 = 0.0;
  switch (spec_.family) {
    case LossFamily::kCce:
    case LossFamily::kFl: {
      b = -log_of(p, s);
      b1 = -1.0 / p;
      b2 = 1.0 / (p * p);
      break;
    }
    case LossFamily::kMae: {
      b = s;
      b1 = -1.0;
      b2 = 0.0;
      break;
    }
    case LossFamily::kGce:
    case LossFamily::kRfl: {
      const double q = spec_.q;
      const double lp = log_of(p, s);
      b = -std::expm1(q * lp) / q;
      b1 = -std::exp((q - 1.0) * lp);
      b2 = (1.0 - q) * std::exp((q - 2.0) * lp);
      break;
    }
    case LossFamily::kSce: {
      const double a = spec_.sce_alpha;
      const double beta = spec_.sce_beta;
      if (spec_.safeguard && p < spec_.eta) {
        b = -a * std::log(spec_.eta) + beta * s;
        b1 = -beta;
        b2 = 0.0;
      } else {
        b = -a * log_of(p, s) + beta * s;
        b1 = -a / p - beta;
        b2 = a / (p * p);
      }
      break;
    }
    case LossFamily::kNce: {
      const double u = log_of(p, s);
      const double v = log_of(s, p);
      const double du = 1.0 / p, dv = -1.0 / s;
      const double ddu = -1.0 / (p * p), ddv = -1.0 / (s * s);
      const double d = u + v;
      const double num = du * v - u * dv;
      b = u / d;
      b1 = num / (d * d);
      b2 = (ddu * v - u * ddv) / (d * d) - 2.0 * num * (du + dv) / (d * d * d);
      break;
    }
  }
  if (!has_factor_) return {b, b1, b2};

  const double r = spec_.r;
  const double f = std::pow(s, r);
  const double f1 = -r * std::pow(s, r - 1.0);
  const double f2 = r * (r - 1.0) * std::pow(s, r - 2.0);
  return {f * b, f1 * b + f * b1, f2 * b + 2.0 * f1 * b1 + f * b2};
}

double Loss::value(PHat phat) const { return evaluate(phat.value(), phat.complement()).value; }

PhatDerivatives Loss::derivatives(PHat phat) const {
  const PHat e = effective_phat(spec_, phat);
  const Terms t = evaluate(e.value(), e.complement());
  return {t.d1, t.d2};
}

GradHessPair Loss::grad_hess(int y, PHat phat) const {
  const PHat e = effective_phat(spec_, phat);
  const double p = e.value();
  const double s = e.complement();
  const Terms t = evaluate(p, s);
  const double w = p * s;
  const double sign = y == 1 ? 1.0 : -1.0;
  return {t.d1 * sign * w, t.d2 * w * w + t.d1 * w * (s - p)};
}

GradHessPair Loss::grad_hess(int y, double z) const { return grad_hess(y, PHat::from_score(y, z)); }

double loss_value(const LossSpec& spec, PHat phat) { return Loss(spec).value(phat); }

PhatDerivatives loss_d1_d2_phat(const LossSpec& spec, PHat phat) {
  return Loss(spec).derivatives(phat);
}

GradHessPair grad_hess(const LossSpec& spec, int y, double z) {
  if (!std::isfinite(z)) throw DomainError("raw score must be finite");
  return Loss(spec).grad_hess(y, z);
}

ConditionReport check_necessary_condition(const LossSpec& spec, int grid_size) {
  if (grid_size < 2) throw ConfigError("grid_size must be at least 2");
  const Loss loss(spec);
  constexpr double lo = 0.5;
  constexpr double hi = 1.0 - 1e-6;
  const double step = (hi - lo) / static_cast<double>(grid_size - 1);
  ConditionReport report;
  for (int i = 0; i < grid_size; ++i) {
    const double p = i + 1 == grid_size ? hi : lo + step * i;
    const double h = loss.grad_hess(1, PHat(p)).h;
    if (!(h > 0.0)) {
      report.holds = false;
      report.violations.push_back({p, h});
    }
  }
  return report;
}

}  // namespace rgbdt
