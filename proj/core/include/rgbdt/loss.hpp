#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rgbdt {

enum class LossFamily { kCce, kMae, kFl, kGce, kSce, kNce, kRfl };

std::string_view to_string(LossFamily family);
// Accepts the lower-case names used in config files ("rfl", "gce", ...).
LossFamily parse_loss_family(std::string_view name);

// A loss family plus its parameters. Parameters that the family does not use
// are ignored but still range-checked by validate().
struct LossSpec {
  LossFamily family = LossFamily::kRfl;
  double r = 1.0;        // focusing exponent of (1 - p)^r
  double q = 0.5;        // GCE exponent, accepted in (0, 1]
  double eta = 1e-2;     // perturbation (MAE, NCE) and clip floor (SCE)
  double sce_alpha = 1.0;
  double sce_beta = 1.0;
  // Multiplies MAE, SCE and NCE by (1 - p)^r. FL and RFL always carry it.
  bool imbalance_factor = false;
  // Enables the eta shift of MAE/NCE below p = 0.5 and the SCE log clip.
  bool safeguard = true;

  void validate() const;

  static LossSpec cce();
  static LossSpec mae();
  static LossSpec focal(double r);
  static LossSpec gce(double q);
  static LossSpec sce(double alpha, double beta);
  static LossSpec nce();
  static LossSpec rfl(double r, double q);
};

std::string describe(const LossSpec& spec);

struct HessianViolation {
  double phat;
  double h;
};

struct ConditionReport {
  bool holds = true;
  std::vector<HessianViolation> violations;
};

// Probability assigned to the ground-truth class, strictly inside (0, 1).
// The complement 1 - p is carried alongside so that values close to one keep
// their precision when constructed from a raw score.
class PHat {
 public:
  explicit PHat(double value);

  static PHat from_label(int y, double p);
  // Probability of class y under raw score z, computed with the two-branch
  // sigmoid after clamping z to [-kScoreClamp, kScoreClamp].
  static PHat from_score(int y, double z);

  double value() const { return value_; }
  double complement() const { return complement_; }

 private:
  PHat(double value, double complement) : value_(value), complement_(complement) {}

  friend PHat effective_phat(const LossSpec& spec, PHat phat);

  double value_;
  double complement_;
};

inline constexpr double kScoreClamp = 30.0;

double sigmoid(double z);

struct GradHessPair {
  double g = 0.0;
  double h = 0.0;
};

struct PhatDerivatives {
  double d1 = 0.0;
  double d2 = 0.0;
};

// Point at which derivatives are evaluated: p + eta when MAE/NCE are
// safeguarded and p <= 0.5, otherwise p itself.
PHat effective_phat(const LossSpec& spec, PHat phat);

// Validated, reusable view of a LossSpec. The free functions below build one
// per call; the booster keeps one for the whole fit.
class Loss {
 public:
  explicit Loss(LossSpec spec);

  const LossSpec& spec() const { return spec_; }

  double value(PHat phat) const;
  PhatDerivatives derivatives(PHat phat) const;
  // Chain rule from p to the raw score, evaluated at the safeguarded point.
  GradHessPair grad_hess(int y, PHat phat) const;
  GradHessPair grad_hess(int y, double z) const;

 private:
  struct Terms {
    double value;
    double d1;
    double d2;
  };
  Terms evaluate(double p, double s) const;

  LossSpec spec_;
  bool has_factor_;
};

double loss_value(const LossSpec& spec, PHat phat);
PhatDerivatives loss_d1_d2_phat(const LossSpec& spec, PHat phat);
GradHessPair grad_hess(const LossSpec& spec, int y, double z);

// Samples H(p) for y = 1 on a uniform grid over [0.5, 1 - 1e-6] and reports
// every point where it is not strictly positive.
ConditionReport check_necessary_condition(const LossSpec& spec, int grid_size);

}  // namespace rgbdt
