#include "pinn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "pinn/error.hpp"

namespace pinn::train {

using balancing::Scheme;

std::vector<std::string> Problem::term_names() const {
  std::vector<std::string> out;
  for (const auto& t : terms) out.push_back(t.tag);
  return out;
}

std::vector<std::size_t> Problem::pool_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& p : pools) out.push_back(p.rows.size());
  return out;
}

Problem make_problem(const sampling::CaseDefinition& c, const nets::Params& params,
                     const sampling::SampleCounts& counts, std::uint64_t seed) {
  Problem p;
  p.terms = physics::compile_terms(
      c, physics::network_fields(params, physics::case_scaling(c, params.spec)));
  auto sets = sampling::sample_case(c, counts, seed);
  for (const auto& t : p.terms) {
    const sampling::PointSet* found = nullptr;
    for (const auto& s : sets)
      if (s.role == t.role) found = &s;
    if (found == nullptr)
      throw Error("incomplete batch set: no point pool for role '" + t.role + "'");
    p.pools.push_back(*found);
  }
  p.shared_range = params.last_hidden_range();
  return p;
}

TrainState initial_state(nets::Params params, balancing::WeightState weights,
                         std::uint64_t seed, const AdamConfig& adam) {
  TrainState s;
  s.adam = AdamState::zeros(params.values.size(), adam);
  s.params = std::move(params);
  s.weights = std::move(weights);
  s.rng.seed(seed);
  return s;
}

namespace {

struct EpochEval {
  std::vector<std::vector<std::size_t>> index;
  std::vector<std::vector<double>> pointwise;
  std::vector<std::vector<double>> grads;  // per term, point-weighted mean
  std::vector<double> aggregates;
  double total = 0.0;
};

EpochEval evaluate_epoch(Problem& problem, const TrainState& st,
                         std::span<const std::vector<std::size_t>> index,
                         bool with_grads) {
  EpochEval ev;
  const std::size_t m = problem.terms.size();
  const std::size_t n_par = st.params.values.size();
  ev.index.assign(index.begin(), index.end());
  for (std::size_t k = 0; k < m; ++k) {
    sampling::PointSet batch{problem.pools[k].role, {}};
    for (std::size_t i : index[k]) batch.rows.push_back(problem.pools[k].rows[i]);
    const auto w = balancing::batch_point_weights(st.weights, k, index[k]);
    std::vector<double> g;
    if (with_grads) g.assign(n_par, 0.0);
    const double scale = batch.rows.empty() ? 0.0 : 1.0 / static_cast<double>(batch.rows.size());
    ev.pointwise.push_back(physics::evaluate_pointwise(
        problem.terms[k].program, batch, st.params.values, w, scale, g));
    ev.grads.push_back(std::move(g));
    ev.aggregates.push_back(physics::make_loss_term("", ev.pointwise.back()).aggregate);
  }
  ev.total = balancing::weighted_total(ev.pointwise, st.weights, ev.index);
  return ev;
}

std::vector<double> weight_snapshot(const balancing::WeightState& w) {
  if (!balancing::is_pointwise(w.scheme)) return w.term_weights;
  std::vector<double> out;
  for (const auto& lam : w.point_weights) {
    double s = 0.0;
    for (double l : lam) s += w.scheme == Scheme::Sa ? l * l : l;
    out.push_back(lam.empty() ? 0.0 : s / static_cast<double>(lam.size()));
  }
  return out;
}

void preflight(const Problem& problem, const TrainState& st, const TrainConfig& cfg) {
  const std::size_t m = problem.terms.size();
  if (problem.pools.size() != m)
    throw Error("incomplete batch set: " + std::to_string(problem.pools.size()) +
                " pools for " + std::to_string(m) + " terms");
  if (st.weights.term_weights.size() != m)
    throw Error("weight/term arity mismatch: " +
                std::to_string(st.weights.term_weights.size()) + " weights for " +
                std::to_string(m) + " terms");
  if (balancing::is_pointwise(st.weights.scheme))
    for (std::size_t k = 0; k < m; ++k)
      if (st.weights.point_weights.at(k).size() != problem.pools[k].rows.size())
        throw Error("weight/term arity mismatch: point weights of term '" +
                    problem.terms[k].tag + "' do not match its pool");
  for (std::size_t k = 0; k < m; ++k)
    if (cfg.batch > problem.pools[k].rows.size())
      throw Error("insufficient points: batch " + std::to_string(cfg.batch) +
                  " > pool of term '" + problem.terms[k].tag + "' (" +
                  std::to_string(problem.pools[k].rows.size()) + ")");
  for (const auto& t : problem.terms)
    if (t.program.params_needed() > st.params.values.size())
      throw Error("shape error: term '" + t.tag + "' needs more parameters than given");
  if (st.adam.m.size() != st.params.values.size())
    throw Error("shape error: optimizer state does not match parameter count");
}

double norm_over(std::span<const double> g, std::pair<std::size_t, std::size_t> r) {
  double s = 0.0;
  for (std::size_t i = r.first; i < r.second && i < g.size(); ++i) s += g[i] * g[i];
  return std::sqrt(s);
}

void run_epoch(Problem& problem, TrainState& st, const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t m = problem.terms.size();
  const std::int64_t epoch = st.epoch + 1;

  std::vector<std::vector<std::size_t>> index;
  for (std::size_t k = 0; k < m; ++k)
    index.push_back(sampling::minibatch_indices(problem.pools[k].rows.size(), cfg.batch, st.rng));

  EpochEval ev = evaluate_epoch(problem, st, index, true);
  if (!std::isfinite(ev.total))
    throw Error(fmt::format("non-finite value: weighted total loss is {}", ev.total));

  std::vector<double> grad(st.params.values.size(), 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const double c = balancing::term_coefficient(st.weights, k);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += c * ev.grads[k][i];
  }
  const std::vector<double> used_weights = weight_snapshot(st.weights);
  adam_step(st.params.values, grad, st.adam, st.params.blocks);

  // End-of-epoch weight update from this epoch's statistics.
  auto& w = st.weights;
  switch (w.scheme) {
    case Scheme::Fixed:
      break;
    case Scheme::Rba:
    case Scheme::Sa: {
      std::vector<balancing::PointStats> stats(m);
      for (std::size_t k = 0; k < m; ++k) {
        stats[k].index = index[k];
        for (double l : ev.pointwise[k]) stats[k].residual.push_back(std::sqrt(l));
      }
      w = w.scheme == Scheme::Rba ? balancing::rba_update(std::move(w), stats)
                                  : balancing::sa_update(std::move(w), stats);
      break;
    }
    case Scheme::Lra:
      w = balancing::lra_update(std::move(w), ev.grads);
      break;
    case Scheme::GradNorm: {
      std::vector<double> norms;
      for (const auto& g : ev.grads) norms.push_back(norm_over(g, problem.shared_range));
      w = balancing::gradnorm_update(std::move(w), norms, ev.aggregates);
      break;
    }
  }

  TrainRecord rec;
  rec.epoch = epoch;
  rec.terms = std::move(ev.aggregates);
  rec.total = ev.total;
  rec.weights = used_weights;
  rec.iter_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  st.history.push_back(std::move(rec));
  st.epoch = epoch;
}

}  // namespace

void train(Problem& problem, TrainState& st, const TrainConfig& cfg) {
  preflight(problem, st, cfg);
  while (st.epoch < cfg.epochs) {
    const std::int64_t epoch = st.epoch + 1;
    // Work on a copy so a failed epoch leaves the state untouched; the
    // history is moved aside rather than copied.
    auto history = std::move(st.history);
    st.history.clear();
    TrainState next = st;
    try {
      run_epoch(problem, next, cfg);
    } catch (const Error& e) {
      st.history = std::move(history);
      throw DivergenceError(epoch, fmt::format("training diverged at epoch {}: {}",
                                               epoch, e.what()));
    }
    history.push_back(std::move(next.history.back()));
    next.history = std::move(history);
    st = std::move(next);
    if (cfg.log_every > 0 && epoch % cfg.log_every == 0) {
      spdlog::info("epoch {} total {:.6e}", epoch, st.history.back().total);
    }
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() &&
        epoch % cfg.checkpoint_every == 0)
      save_checkpoint(cfg.checkpoint_path, st);
    if (cfg.on_epoch) cfg.on_epoch(st);
  }
}

std::vector<physics::LossTerm> epoch_losses(Problem& problem, const TrainState& state,
                                            std::span<const sampling::PointSet> batches) {
  return physics::assemble_losses(problem.terms, batches, state.params.values);
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& s) {
  Archive ar;
  nets::save_params(ar, s.params);
  save_adam(ar, s.adam);
  balancing::save_state(ar, s.weights);
  std::ostringstream rng;
  rng << s.rng;
  ar.put_string("rng", rng.str());
  ar.put("epoch", std::vector<double>{static_cast<double>(s.epoch)});

  const std::size_t n = s.history.size();
  std::vector<double> epochs, totals, seconds, terms, weights;
  const std::size_t m = n ? s.history[0].terms.size() : 0;
  const std::size_t mw = n ? s.history[0].weights.size() : 0;
  for (const auto& r : s.history) {
    epochs.push_back(static_cast<double>(r.epoch));
    totals.push_back(r.total);
    seconds.push_back(r.iter_seconds);
    terms.insert(terms.end(), r.terms.begin(), r.terms.end());
    weights.insert(weights.end(), r.weights.begin(), r.weights.end());
  }
  ar.put("history.shape", std::vector<double>{static_cast<double>(n),
                                              static_cast<double>(m),
                                              static_cast<double>(mw)});
  ar.put("history.epoch", epochs);
  ar.put("history.total", totals);
  ar.put("history.seconds", seconds);
  ar.put("history.terms", terms);
  ar.put("history.weights", weights);

  // Write-then-rename so an interrupted save never leaves a torn file.
  auto tmp = path;
  tmp += ".tmp";
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  ar.save(tmp);
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  const Archive ar = Archive::load(path);
  TrainState s;
  s.params = nets::load_params(ar);
  s.adam = load_adam(ar);
  s.weights = balancing::load_state(ar);
  std::istringstream rng(ar.string("rng"));
  rng >> s.rng;
  if (!rng) throw Error("invalid archive: bad rng state");
  s.epoch = static_cast<std::int64_t>(ar.scalar("epoch"));

  const auto& shape = ar.array("history.shape");
  const auto n = static_cast<std::size_t>(shape.at(0));
  const auto m = static_cast<std::size_t>(shape.at(1));
  const auto mw = static_cast<std::size_t>(shape.at(2));
  const auto& epochs = ar.array("history.epoch");
  const auto& totals = ar.array("history.total");
  const auto& seconds = ar.array("history.seconds");
  const auto& terms = ar.array("history.terms");
  const auto& weights = ar.array("history.weights");
  if (epochs.size() != n || totals.size() != n || seconds.size() != n ||
      terms.size() != n * m || weights.size() != n * mw)
    throw Error("invalid archive: inconsistent history block");
  for (std::size_t i = 0; i < n; ++i) {
    TrainRecord r;
    r.epoch = static_cast<std::int64_t>(epochs[i]);
    r.total = totals[i];
    r.iter_seconds = seconds[i];
    r.terms.assign(terms.begin() + static_cast<std::ptrdiff_t>(i * m),
                   terms.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
    r.weights.assign(weights.begin() + static_cast<std::ptrdiff_t>(i * mw),
                     weights.begin() + static_cast<std::ptrdiff_t>((i + 1) * mw));
    s.history.push_back(std::move(r));
  }
  return s;
}

void write_history_csv(std::ostream& out, std::span<const std::string> terms,
                       std::span<const TrainRecord> history) {
  out << "epoch,total";
  for (const auto& t : terms) out << ',' << t;
  out << '\n';
  for (const auto& r : history) {
    out << r.epoch << ',' << fmt::format("{:.17g}", r.total);
    for (double v : r.terms) out << ',' << fmt::format("{:.17g}", v);
    out << '\n';
  }
}

void write_weight_csv(std::ostream& out, std::span<const std::string> terms,
                      std::span<const TrainRecord> history) {
  out << "epoch,term,lambda\n";
  for (const auto& r : history)
    for (std::size_t k = 0; k < r.weights.size() && k < terms.size(); ++k)
      out << r.epoch << ',' << terms[k] << ',' << fmt::format("{:.17g}", r.weights[k])
          << '\n';
}

void write_timing_csv(std::ostream& out, std::span<const TrainRecord> history) {
  out << "epoch,iter_seconds\n";
  for (const auto& r : history)
    out << r.epoch << ',' << fmt::format("{:.9g}", r.iter_seconds) << '\n';
}

}  // namespace pinn::train
