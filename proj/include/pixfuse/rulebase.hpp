#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pixfuse/prototypes.hpp"

namespace pixfuse {

// Memberships are clamped here before the softmin so its log-space form
// never sees a zero.
inline constexpr double kMembershipFloor = 1e-15;
// The membership floor as a cap on the normalized squared distance.
inline const double kDistanceCap = -std::log(kMembershipFloor);
// Spreads never go below this, neither at construction nor during tuning.
inline constexpr double kSpreadFloor = 1e-3;

struct RulebaseConfig {
  double kw = 6.0;        // spread scale factor
  bool spreadRms = false; // spread = kw * rms distance instead of kw * sqrt(sum)/count
  double q = -10.0;       // softmin exponent, <= -1
  double epsilon = 0.01;  // label-vector cutoff; below it a rule counts as not fired
  double learningRate = 0.25;   // scales the mean-per-sample gradient step
  int maxTuneEpochs = 40;
  double minImprovement = 1e-4; // stop once an epoch lowers E by less than this
};

// One rule: "x is near center (per-band Gaussian with these spreads)
// implies class consequent".
struct FuzzyRule {
  std::vector<double> center;
  std::vector<double> spread;
  int consequent = kNoClass;
};

struct Rulebase {
  int featureCount = 0;
  int classCount = 0;
  double q = -10.0;
  double epsilon = 0.01;
  std::vector<FuzzyRule> rules;
};

// exp(-(x - center)^2 / spread^2); spread must be positive.
double gaussianMembership(double x, double center, double spread);

// Generalized mean ((sum v_i^q)/n)^(1/q), evaluated in log space. For
// strongly negative q it approaches min(v). All values must be positive.
double softMatch(std::span<const double> values, double q);

// Softmin (exponent q) of the rule's per-band memberships, each clamped
// to kMembershipFloor. 1 exactly at the center; equals the plain
// membership when there is a single band.
double firingStrength(const FuzzyRule& rule, std::span<const double> x, double q);

namespace detail {
// Canonical firing-strength evaluation shared by firingStrength, the
// label-plane kernels and the tuner. invSpread holds 1/spread per band.
// When weights is non-null it receives the softmin weights, the convex
// coefficients that say how much each band dominates the softmin.
double ruleFiring(const double* x, const double* center, const double* invSpread, int bands,
                  double q, double* weights = nullptr);
} // namespace detail

// One rule per prototype: the center is the prototype vector, the
// per-band spread is kw * sqrt(sum of squared deviations of the samples
// in the prototype's cell) / cellSize (or kw * rms when spreadRms is
// set), floored at kSpreadFloor. A prototype whose cell is empty is an
// error.
Rulebase buildRules(const PrototypeSet& set, const std::vector<LabeledSample>& samples,
                    const RulebaseConfig& config, int classCount);

// Per-class max firing strength; components below epsilon become exactly 0.
std::vector<double> labelVector(const Rulebase& rb, std::span<const double> x);

// Argmax of the label vector, ties to the lowest class; kNoClass when the
// vector is all zero (outlier).
int classifyNoncontextual(const Rulebase& rb, std::span<const double> x);

// The tuner adjusts, per sample, the strongest rule of the sample's own
// class and the strongest rule of any other class, minimizing
//   E = sum over samples (1 - ownFiring + otherFiring)^2.
// A sample whose own-class or other-class max firing is below epsilon is
// skipped for that epoch (both indices -1).
struct TunePair {
  int ownRule = -1;
  int otherRule = -1;
  bool active() const { return ownRule >= 0 && otherRule >= 0; }
};

std::vector<TunePair> assignTunePairs(const Rulebase& rb,
                                      const std::vector<LabeledSample>& samples);

double tuningError(const Rulebase& rb, const std::vector<LabeledSample>& samples,
                   std::span<const TunePair> pairs);

struct RuleGradient {
  std::vector<double> center, spread;
};

// dE/d(center), dE/d(spread) for every rule, with the pair assignment held
// fixed; rules not referenced by any pair get zero gradients.
std::vector<RuleGradient> tuningGradient(const Rulebase& rb,
                                         const std::vector<LabeledSample>& samples,
                                         std::span<const TunePair> pairs);

struct TuneResult {
  Rulebase rulebase;
  std::vector<double> errorByEpoch; // E at the start, then after each accepted epoch
  int epochsAccepted = 0;
};

// Gradient descent with halving on increase: an epoch whose step would
// raise E retries at half the rate, up to 10 times, then tuning stops.
// The rate carries over between epochs. Spreads are clamped to
// kSpreadFloor after every step. E never increases across accepted
// epochs.
TuneResult tuneRules(const Rulebase& rb, const std::vector<LabeledSample>& samples,
                     const RulebaseConfig& config);

// Plain-text format: a version line, one line with featureCount,
// classCount, ruleCount, q, epsilon, then one line per rule (consequent,
// centers, spreads). Doubles are written with 17 significant digits and
// round trip exactly.
void saveRulebase(const Rulebase& rb, const std::string& path);
Rulebase loadRulebase(const std::string& path);

} // namespace pixfuse
