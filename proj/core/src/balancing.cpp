#include "pinn/balancing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "pinn/error.hpp"

namespace pinn::balancing {

std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Fixed: return "fixed";
    case Scheme::Rba: return "rba";
    case Scheme::Sa: return "sa";
    case Scheme::Lra: return "lra";
    case Scheme::GradNorm: return "gradnorm";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  for (auto s : {Scheme::Fixed, Scheme::Rba, Scheme::Sa, Scheme::Lra,
                 Scheme::GradNorm})
    if (scheme_name(s) == name) return s;
  if (name == "heuristic") return Scheme::Fixed;
  throw Error("invalid config: unknown weighting scheme '" + std::string(name) + "'");
}

bool is_pointwise(Scheme s) { return s == Scheme::Rba || s == Scheme::Sa; }

OpCounters epoch_cost(Scheme s, std::size_t batch, std::size_t terms) {
  OpCounters c;
  if (is_pointwise(s)) c.point_weight_updates = batch * terms;
  if (s == Scheme::Lra || s == Scheme::GradNorm) {
    c.term_weight_updates = terms;
    c.extra_gradient_passes = terms;
  }
  return c;
}

WeightState make_state(Scheme s, std::vector<std::string> terms,
                       const Hyper& hyper,
                       std::span<const std::size_t> pool_sizes) {
  WeightState st;
  st.scheme = s;
  st.hyper = hyper;
  st.term_weights.assign(terms.size(), 1.0);
  st.terms = std::move(terms);
  if (is_pointwise(s)) {
    if (pool_sizes.size() != st.terms.size())
      throw Error("weight/term arity mismatch: " + std::to_string(pool_sizes.size()) +
                  " point pools for " + std::to_string(st.terms.size()) + " terms");
    for (std::size_t n : pool_sizes) st.point_weights.emplace_back(n, 1.0);
  }
  return st;
}

WeightState fixed_weights(std::vector<std::string> terms,
                          std::span<const double> weights) {
  if (weights.size() != terms.size())
    throw Error("weight/term arity mismatch: " + std::to_string(weights.size()) +
                " weights for " + std::to_string(terms.size()) + " terms");
  WeightState st = make_state(Scheme::Fixed, std::move(terms));
  st.term_weights.assign(weights.begin(), weights.end());
  return st;
}

std::vector<double> heuristic_weights(std::span<const std::string> terms,
                                      double phy, double bc, double ic) {
  std::vector<double> w;
  for (std::size_t k = 0; k < terms.size(); ++k)
    w.push_back(k == 0 ? phy : terms[k] == "initial" ? ic : bc);
  return w;
}

PointStats PointStats::dense(std::vector<double> residual) {
  PointStats p;
  p.index.resize(residual.size());
  std::iota(p.index.begin(), p.index.end(), std::size_t{0});
  p.residual = std::move(residual);
  return p;
}

namespace {

void check_point_stats(const WeightState& s, std::span<const PointStats> stats) {
  if (stats.size() != s.point_weights.size())
    throw Error("weight/term arity mismatch: statistics for " +
                std::to_string(stats.size()) + " terms, state has " +
                std::to_string(s.point_weights.size()));
  for (std::size_t k = 0; k < stats.size(); ++k) {
    if (stats[k].index.size() != stats[k].residual.size())
      throw Error("shape error: point index/residual length differ");
    for (std::size_t i : stats[k].index)
      if (i >= s.point_weights[k].size())
        throw Error("shape error: point index out of range");
  }
}

Error divergence(const std::string& what) {
  return Error("weight divergence: " + what);
}

}  // namespace

WeightState rba_update(WeightState s, std::span<const PointStats> stats) {
  check_point_stats(s, stats);
  const double gamma = s.hyper.rba_gamma, eta = s.hyper.rba_eta;
  for (std::size_t k = 0; k < stats.size(); ++k) {
    double emax = 0.0;
    for (double e : stats[k].residual) emax = std::max(emax, std::abs(e));
    auto& lam = s.point_weights[k];
    for (std::size_t j = 0; j < stats[k].index.size(); ++j) {
      double& l = lam[stats[k].index[j]];
      l = gamma * l;
      if (emax > 0.0) l += eta * std::abs(stats[k].residual[j]) / emax;
    }
    s.ops.point_weight_updates += stats[k].index.size();
  }
  ++s.step_count;
  return s;
}

WeightState sa_update(WeightState s, std::span<const PointStats> stats) {
  check_point_stats(s, stats);
  const double lr = s.hyper.sa_lr;
  for (std::size_t k = 0; k < stats.size(); ++k) {
    auto& lam = s.point_weights[k];
    for (std::size_t j = 0; j < stats[k].index.size(); ++j) {
      double& l = lam[stats[k].index[j]];
      const double r = stats[k].residual[j];
      l += lr * l * r * r;
      if (!std::isfinite(l))
        throw divergence("self-adaptive weight of term '" + s.terms[k] +
                         "' point " + std::to_string(stats[k].index[j]) +
                         " is non-finite");
    }
    s.ops.point_weight_updates += stats[k].index.size();
  }
  ++s.step_count;
  return s;
}

WeightState lra_update(WeightState s,
                       std::span<const std::vector<double>> term_grads) {
  if (term_grads.size() != s.term_weights.size())
    throw Error("weight/term arity mismatch: " + std::to_string(term_grads.size()) +
                " gradients for " + std::to_string(s.term_weights.size()) + " terms");
  if (term_grads.empty()) return s;
  double num = 0.0;
  for (double g : term_grads[0]) num = std::max(num, std::abs(g));
  const double alpha = s.hyper.lra_alpha;
  for (std::size_t k = 1; k < term_grads.size(); ++k) {
    double mean = 0.0;
    for (double g : term_grads[k]) mean += std::abs(g);
    if (!term_grads[k].empty()) mean /= static_cast<double>(term_grads[k].size());
    double target;
    if (mean > 0.0) {
      target = std::min(num / mean, s.hyper.lra_ceiling);
    } else {
      target = s.hyper.lra_ceiling;
      spdlog::warn("lra: term '{}' has a zero gradient; weight target clamped to {}",
                   s.terms[k], target);
    }
    s.term_weights[k] = (1.0 - alpha) * s.term_weights[k] + alpha * target;
  }
  s.term_weights[0] = 1.0;
  s.ops.term_weight_updates += term_grads.size();
  s.ops.extra_gradient_passes += term_grads.size();
  ++s.step_count;
  return s;
}

WeightState gradnorm_update(WeightState s, std::span<const double> grad_norms,
                            std::span<const double> losses) {
  const std::size_t m = s.term_weights.size();
  if (grad_norms.size() != m || losses.size() != m)
    throw Error("weight/term arity mismatch: gradnorm statistics for " +
                std::to_string(grad_norms.size()) + " terms, state has " +
                std::to_string(m));
  if (m == 0) return s;
  if (s.initial_losses.empty()) s.initial_losses.assign(losses.begin(), losses.end());

  // Relative inverse training rates; terms with L_i(0) = 0 get rate 1.
  std::vector<double> ratio(m, 1.0);
  std::vector<bool> counted(m, false);
  double mean_ratio = 0.0;
  std::size_t n_counted = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (s.initial_losses[i] == 0.0) continue;
    ratio[i] = losses[i] / s.initial_losses[i];
    counted[i] = true;
    mean_ratio += ratio[i];
    ++n_counted;
  }
  if (n_counted > 0) mean_ratio /= static_cast<double>(n_counted);
  std::vector<double> rate(m, 1.0);
  for (std::size_t i = 0; i < m; ++i)
    if (counted[i] && mean_ratio > 0.0) rate[i] = ratio[i] / mean_ratio;

  double g_w = 0.0;
  for (std::size_t i = 0; i < m; ++i) g_w += s.term_weights[i] * grad_norms[i];
  g_w /= static_cast<double>(m);

  const double lr = s.hyper.gn_lr;
  for (std::size_t i = 0; i < m; ++i) {
    const double target = g_w * std::pow(rate[i], s.hyper.gn_alpha);
    const double diff = s.term_weights[i] * grad_norms[i] - target;
    const double sign = diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0;
    s.term_weights[i] -= lr * sign * grad_norms[i];
  }

  double total = 0.0;
  for (double w : s.term_weights) total += w;
  if (!std::isfinite(total) || total <= 0.0) {
    std::ostringstream os;
    os << "gradnorm weights sum to " << total << " (";
    for (std::size_t i = 0; i < m; ++i)
      os << (i ? ", " : "") << s.terms[i] << '=' << s.term_weights[i];
    os << ')';
    throw divergence(os.str());
  }
  const double scale = static_cast<double>(m) / total;
  for (double& w : s.term_weights) {
    w *= scale;
    if (!std::isfinite(w)) throw divergence("gradnorm weight is non-finite");
  }
  s.ops.term_weight_updates += m;
  s.ops.extra_gradient_passes += m;
  ++s.step_count;
  return s;
}

double term_coefficient(const WeightState& s, std::size_t k) {
  return is_pointwise(s.scheme) ? 1.0 : s.term_weights.at(k);
}

std::vector<double> batch_point_weights(const WeightState& s, std::size_t k,
                                        std::span<const std::size_t> index) {
  std::vector<double> w(index.size(), 1.0);
  if (!is_pointwise(s.scheme)) return w;
  const auto& lam = s.point_weights.at(k);
  for (std::size_t j = 0; j < index.size(); ++j) {
    const double l = lam.at(index[j]);
    w[j] = s.scheme == Scheme::Sa ? l * l : l;
  }
  return w;
}

double weighted_total(std::span<const std::vector<double>> pointwise,
                      const WeightState& s,
                      std::span<const std::vector<std::size_t>> index) {
  if (pointwise.size() != s.term_weights.size())
    throw Error("weight/term arity mismatch: " + std::to_string(pointwise.size()) +
                " loss terms for " + std::to_string(s.term_weights.size()) + " weights");
  const bool pw = is_pointwise(s.scheme);
  if (pw && index.size() != pointwise.size())
    throw Error("weight/term arity mismatch: point-wise weights need a batch index per term");
  double total = 0.0;
  for (std::size_t k = 0; k < pointwise.size(); ++k) {
    const auto& l = pointwise[k];
    if (l.empty()) continue;
    std::vector<double> w =
        pw ? batch_point_weights(s, k, index[k]) : std::vector<double>(l.size(), 1.0);
    if (w.size() != l.size())
      throw Error("shape error: batch index length differs from term length");
    double acc = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) acc += w[i] * l[i];
    total += term_coefficient(s, k) * (acc / static_cast<double>(l.size()));
  }
  return total;
}

void save_state(Archive& ar, const WeightState& s) {
  ar.put_string("weights.scheme", std::string(scheme_name(s.scheme)));
  std::string joined;
  for (const auto& t : s.terms) joined += (joined.empty() ? "" : ",") + t;
  ar.put_string("weights.terms", joined);
  ar.put("weights.lambda", s.term_weights);
  ar.put("weights.initial", s.initial_losses);
  for (std::size_t k = 0; k < s.point_weights.size(); ++k)
    ar.put("weights.point." + std::to_string(k), s.point_weights[k]);
  const Hyper& h = s.hyper;
  ar.put("weights.hyper", std::vector<double>{h.rba_gamma, h.rba_eta, h.sa_lr,
                                              h.lra_alpha, h.lra_ceiling,
                                              h.gn_alpha, h.gn_lr});
  ar.put("weights.step", std::vector<double>{static_cast<double>(s.step_count)});
  ar.put("weights.ops",
         std::vector<double>{static_cast<double>(s.ops.point_weight_updates),
                             static_cast<double>(s.ops.term_weight_updates),
                             static_cast<double>(s.ops.extra_gradient_passes)});
}

WeightState load_state(const Archive& ar) {
  WeightState s;
  s.scheme = parse_scheme(ar.string("weights.scheme"));
  std::stringstream ss(ar.string("weights.terms"));
  for (std::string t; std::getline(ss, t, ',');) s.terms.push_back(t);
  s.term_weights = ar.array("weights.lambda");
  s.initial_losses = ar.array("weights.initial");
  for (std::size_t k = 0; ar.has("weights.point." + std::to_string(k)); ++k)
    s.point_weights.push_back(ar.array("weights.point." + std::to_string(k)));
  const auto& h = ar.array("weights.hyper");
  if (h.size() != 7) throw Error("invalid config: weight hyper-parameter block has wrong size");
  s.hyper = {h[0], h[1], h[2], h[3], h[4], h[5], h[6]};
  s.step_count = static_cast<std::int64_t>(ar.scalar("weights.step"));
  const auto& ops = ar.array("weights.ops");
  s.ops = {static_cast<std::uint64_t>(ops.at(0)), static_cast<std::uint64_t>(ops.at(1)),
           static_cast<std::uint64_t>(ops.at(2))};
  return s;
}

}  // namespace pinn::balancing
