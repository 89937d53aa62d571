#include "pixfuse/rulebase.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace pixfuse {
namespace {

void checkQ(double q) {
  if (!(q <= -1.0)) throw DataError("softmin exponent q must be <= -1");
}

std::vector<double> inverseSpreads(const FuzzyRule& rule) {
  std::vector<double> inv(rule.spread.size());
  for (std::size_t j = 0; j < rule.spread.size(); ++j) {
    if (!(rule.spread[j] > 0.0)) throw DataError("rule spread must be positive");
    inv[j] = 1.0 / rule.spread[j];
  }
  return inv;
}

} // namespace

double gaussianMembership(double x, double center, double spread) {
  if (!(spread > 0.0)) throw DataError("spread must be positive");
  double diff = x - center;
  return std::exp(-(diff * diff) / (spread * spread));
}

double softMatch(std::span<const double> values, double q) {
  if (values.empty()) throw DataError("softMatch needs at least one value");
  if (q == 0.0) throw DataError("softMatch exponent must be non-zero");
  double maxT = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (!(v > 0.0)) throw DataError("softMatch values must be positive");
    maxT = std::max(maxT, q * std::log(v));
  }
  double sum = 0.0;
  for (double v : values) sum += std::exp(q * std::log(v) - maxT);
  return std::exp((maxT + std::log(sum) - std::log(static_cast<double>(values.size()))) / q);
}

namespace detail {

double ruleFiring(const double* x, const double* center, const double* invSpread, int bands,
                  double q, double* weights) {
  double qn = -q;
  double maxT = 0.0;
  for (int j = 0; j < bands; ++j) {
    double z = (x[j] - center[j]) * invSpread[j];
    double d = z * z;
    if (d > kDistanceCap) d = kDistanceCap;
    double t = qn * d;
    if (t > maxT) maxT = t;
  }
  double sum = 0.0;
  for (int j = 0; j < bands; ++j) {
    double z = (x[j] - center[j]) * invSpread[j];
    double d = z * z;
    if (d > kDistanceCap) d = kDistanceCap;
    double e = std::exp(qn * d - maxT);
    if (weights) weights[j] = e;
    sum += e;
  }
  if (weights)
    for (int j = 0; j < bands; ++j) weights[j] /= sum;
  double firing =
      std::exp((maxT + std::log(sum) - std::log(static_cast<double>(bands))) / q);
  return firing < 1.0 ? firing : 1.0;
}

} // namespace detail

double firingStrength(const FuzzyRule& rule, std::span<const double> x, double q) {
  checkQ(q);
  if (rule.center.size() != x.size() || rule.spread.size() != x.size())
    throw DataError("rule and input dimensions differ");
  if (x.empty()) throw DataError("firingStrength needs at least one band");
  std::vector<double> inv = inverseSpreads(rule);
  return detail::ruleFiring(x.data(), rule.center.data(), inv.data(),
                            static_cast<int>(x.size()), q);
}

Rulebase buildRules(const PrototypeSet& set, const std::vector<LabeledSample>& samples,
                    const RulebaseConfig& config, int classCount) {
  if (set.size() == 0) throw DataError("buildRules needs prototypes");
  if (samples.empty()) throw DataError("buildRules needs samples");
  if (classCount <= 0) throw DataError("classCount must be positive");
  if (!(config.kw > 0.0)) throw DataError("kw must be positive");
  checkQ(config.q);
  if (!(config.epsilon >= 0.0 && config.epsilon < 1.0))
    throw DataError("epsilon must lie in [0, 1)");
  int p = set.dim();
  for (const auto& s : samples)
    if (static_cast<int>(s.features.size()) != p)
      throw DataError("sample and prototype dimensions differ");
  for (int label : set.labels)
    if (label < 0 || label >= classCount)
      throw DataError("buildRules needs a fully labeled prototype set");

  std::vector<std::size_t> assign = assignToNearest(set, samples);
  std::vector<std::vector<double>> sqSum(set.size(), std::vector<double>(p, 0.0));
  std::vector<std::size_t> count(set.size(), 0);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    std::size_t i = assign[s];
    ++count[i];
    for (int j = 0; j < p; ++j) {
      double diff = samples[s].features[j] - set.vectors[i][j];
      sqSum[i][j] += diff * diff;
    }
  }

  Rulebase rb;
  rb.featureCount = p;
  rb.classCount = classCount;
  rb.q = config.q;
  rb.epsilon = config.epsilon;
  rb.rules.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (count[i] == 0)
      throw DataError("prototype " + std::to_string(i) + " wins no samples");
    FuzzyRule rule;
    rule.center = set.vectors[i];
    rule.spread.resize(p);
    double n = static_cast<double>(count[i]);
    for (int j = 0; j < p; ++j) {
      double raw = config.spreadRms ? config.kw * std::sqrt(sqSum[i][j] / n)
                                    : config.kw * std::sqrt(sqSum[i][j]) / n;
      rule.spread[j] = std::max(raw, kSpreadFloor);
    }
    rule.consequent = set.labels[i];
    rb.rules.push_back(std::move(rule));
  }
  return rb;
}

std::vector<double> labelVector(const Rulebase& rb, std::span<const double> x) {
  if (static_cast<int>(x.size()) != rb.featureCount)
    throw DataError("input dimension does not match the rulebase");
  std::vector<double> alpha(rb.classCount, 0.0);
  for (const auto& rule : rb.rules) {
    std::vector<double> inv = inverseSpreads(rule);
    double f = detail::ruleFiring(x.data(), rule.center.data(), inv.data(), rb.featureCount,
                                  rb.q);
    if (f > alpha[rule.consequent]) alpha[rule.consequent] = f;
  }
  for (double& a : alpha)
    if (a < rb.epsilon) a = 0.0;
  return alpha;
}

int classifyNoncontextual(const Rulebase& rb, std::span<const double> x) {
  std::vector<double> alpha = labelVector(rb, x);
  int best = kNoClass;
  double bestVal = 0.0;
  for (int k = 0; k < rb.classCount; ++k)
    if (alpha[k] > bestVal) {
      bestVal = alpha[k];
      best = k;
    }
  return best;
}

std::vector<TunePair> assignTunePairs(const Rulebase& rb,
                                      const std::vector<LabeledSample>& samples) {
  std::vector<std::vector<double>> inv;
  inv.reserve(rb.rules.size());
  for (const auto& rule : rb.rules) inv.push_back(inverseSpreads(rule));

  std::vector<TunePair> pairs(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& sample = samples[s];
    if (sample.label < 0 || sample.label >= rb.classCount)
      throw DataError("sample label outside the rulebase classes");
    double bestOwn = 0.0, bestOther = 0.0;
    int own = -1, other = -1;
    for (std::size_t r = 0; r < rb.rules.size(); ++r) {
      double f = detail::ruleFiring(sample.features.data(), rb.rules[r].center.data(),
                                    inv[r].data(), rb.featureCount, rb.q);
      if (rb.rules[r].consequent == sample.label) {
        if (f > bestOwn) {
          bestOwn = f;
          own = static_cast<int>(r);
        }
      } else if (f > bestOther) {
        bestOther = f;
        other = static_cast<int>(r);
      }
    }
    // a rule with firing under epsilon counts as not fired
    if (own >= 0 && other >= 0 && bestOwn >= rb.epsilon && bestOther >= rb.epsilon)
      pairs[s] = TunePair{own, other};
  }
  return pairs;
}

double tuningError(const Rulebase& rb, const std::vector<LabeledSample>& samples,
                   std::span<const TunePair> pairs) {
  if (pairs.size() != samples.size())
    throw DataError("pair assignment does not match the sample list");
  std::vector<std::vector<double>> inv;
  inv.reserve(rb.rules.size());
  for (const auto& rule : rb.rules) inv.push_back(inverseSpreads(rule));

  double e = 0.0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (!pairs[s].active()) continue;
    const auto& x = samples[s].features;
    double own = detail::ruleFiring(x.data(), rb.rules[pairs[s].ownRule].center.data(),
                                    inv[pairs[s].ownRule].data(), rb.featureCount, rb.q);
    double other = detail::ruleFiring(x.data(), rb.rules[pairs[s].otherRule].center.data(),
                                      inv[pairs[s].otherRule].data(), rb.featureCount, rb.q);
    double term = 1.0 - own + other;
    e += term * term;
  }
  return e;
}

std::vector<RuleGradient> tuningGradient(const Rulebase& rb,
                                         const std::vector<LabeledSample>& samples,
                                         std::span<const TunePair> pairs) {
  if (pairs.size() != samples.size())
    throw DataError("pair assignment does not match the sample list");
  int p = rb.featureCount;
  std::vector<std::vector<double>> inv;
  inv.reserve(rb.rules.size());
  for (const auto& rule : rb.rules) inv.push_back(inverseSpreads(rule));

  std::vector<RuleGradient> grad(rb.rules.size());
  for (auto& g : grad) {
    g.center.assign(p, 0.0);
    g.spread.assign(p, 0.0);
  }

  std::vector<double> weights(p);
  // d(firing)/d(center_j) =  2 w_j firing (x_j - v_j) / s_j^2
  // d(firing)/d(spread_j) =  2 w_j firing (x_j - v_j)^2 / s_j^3
  // where w_j are the softmin weights; the error term contributes
  // 2 (1 - own + other) with sign -1 for the own rule, +1 for the other.
  auto accumulate = [&](int ruleIdx, const std::vector<double>& x, double coeff) {
    const FuzzyRule& rule = rb.rules[ruleIdx];
    double firing = detail::ruleFiring(x.data(), rule.center.data(), inv[ruleIdx].data(), p,
                                       rb.q, weights.data());
    RuleGradient& g = grad[ruleIdx];
    for (int j = 0; j < p; ++j) {
      double diff = x[j] - rule.center[j];
      double invS = inv[ruleIdx][j];
      double base = 2.0 * weights[j] * firing * diff * invS * invS;
      g.center[j] += coeff * base;
      g.spread[j] += coeff * base * diff * invS;
    }
  };

  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (!pairs[s].active()) continue;
    const auto& x = samples[s].features;
    double own = detail::ruleFiring(x.data(), rb.rules[pairs[s].ownRule].center.data(),
                                    inv[pairs[s].ownRule].data(), p, rb.q);
    double other = detail::ruleFiring(x.data(), rb.rules[pairs[s].otherRule].center.data(),
                                      inv[pairs[s].otherRule].data(), p, rb.q);
    double common = 2.0 * (1.0 - own + other);
    accumulate(pairs[s].ownRule, x, -common);
    accumulate(pairs[s].otherRule, x, common);
  }
  return grad;
}

TuneResult tuneRules(const Rulebase& rb, const std::vector<LabeledSample>& samples,
                     const RulebaseConfig& config) {
  if (config.maxTuneEpochs < 0) throw DataError("maxTuneEpochs must be non-negative");
  if (!(config.learningRate > 0.0)) throw DataError("learningRate must be positive");
  if (config.minImprovement < 0.0) throw DataError("minImprovement must be non-negative");

  TuneResult result;
  result.rulebase = rb;
  double rate = config.learningRate;

  std::vector<TunePair> pairs = assignTunePairs(result.rulebase, samples);
  double current = tuningError(result.rulebase, samples, pairs);
  result.errorByEpoch.push_back(current);

  for (int epoch = 0; epoch < config.maxTuneEpochs; ++epoch) {
    std::size_t active = 0;
    for (const auto& pr : pairs)
      if (pr.active()) ++active;
    if (active == 0) break;

    std::vector<RuleGradient> grad = tuningGradient(result.rulebase, samples, pairs);
    double scale = 1.0 / static_cast<double>(active);

    bool accepted = false;
    Rulebase candidate;
    std::vector<TunePair> candidatePairs;
    double candidateError = 0.0;
    for (int halving = 0; halving <= 10; ++halving) {
      candidate = result.rulebase;
      double step = rate * scale;
      for (std::size_t r = 0; r < candidate.rules.size(); ++r) {
        for (int j = 0; j < candidate.featureCount; ++j) {
          candidate.rules[r].center[j] -= step * grad[r].center[j];
          candidate.rules[r].spread[j] =
              std::max(candidate.rules[r].spread[j] - step * grad[r].spread[j], kSpreadFloor);
        }
      }
      candidatePairs = assignTunePairs(candidate, samples);
      candidateError = tuningError(candidate, samples, candidatePairs);
      if (candidateError <= current) {
        accepted = true;
        break;
      }
      rate /= 2.0;
    }
    if (!accepted) break;

    double improvement = current - candidateError;
    result.rulebase = std::move(candidate);
    pairs = std::move(candidatePairs);
    current = candidateError;
    result.errorByEpoch.push_back(current);
    ++result.epochsAccepted;
    if (improvement < config.minImprovement) break;
  }
  return result;
}

void saveRulebase(const Rulebase& rb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write rulebase: " + path);
  out << "pixfuse-rulebase 1\n";
  out << std::setprecision(17);
  out << rb.featureCount << ' ' << rb.classCount << ' ' << rb.rules.size() << ' ' << rb.q
      << ' ' << rb.epsilon << '\n';
  for (const auto& rule : rb.rules) {
    out << rule.consequent;
    for (double v : rule.center) out << ' ' << v;
    for (double v : rule.spread) out << ' ' << v;
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

Rulebase loadRulebase(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rulebase: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (!in || magic != "pixfuse-rulebase") throw DataError(path + ": not a rulebase file");
  if (version != 1)
    throw DataError(path + ": unsupported rulebase version " + std::to_string(version));

  Rulebase rb;
  std::size_t ruleCount = 0;
  in >> rb.featureCount >> rb.classCount >> ruleCount >> rb.q >> rb.epsilon;
  if (!in) throw DataError(path + ": malformed rulebase header");
  if (rb.featureCount <= 0 || rb.classCount <= 0)
    throw DataError(path + ": non-positive dimensions");
  checkQ(rb.q);
  if (!(rb.epsilon >= 0.0 && rb.epsilon < 1.0))
    throw DataError(path + ": epsilon must lie in [0, 1)");

  rb.rules.resize(ruleCount);
  for (auto& rule : rb.rules) {
    in >> rule.consequent;
    rule.center.resize(rb.featureCount);
    rule.spread.resize(rb.featureCount);
    for (double& v : rule.center) in >> v;
    for (double& v : rule.spread) in >> v;
    if (!in) throw DataError(path + ": truncated rule line");
    if (rule.consequent < 0 || rule.consequent >= rb.classCount)
      throw DataError(path + ": rule consequent outside [0, classCount)");
    for (double v : rule.spread)
      if (!(v > 0.0)) throw DataError(path + ": non-positive spread");
  }
  std::string rest;
  if (in >> rest) throw DataError(path + ": trailing content after the last rule");
  return rb;
}

} // namespace pixfuse
