#include "rada/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rada/errors.hpp"
#include "rada/eval.hpp"

namespace rada {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(name, "must be a finite non-negative number");
  };
  non_negative(lr_backbone, "lr_backbone");
  non_negative(lr_heads, "lr_heads");
  non_negative(momentum, "momentum");
  non_negative(weight_decay, "weight_decay");
  non_negative(alpha, "alpha");
  non_negative(beta, "beta");
  non_negative(lambda_adv, "lambda_adv");
  non_negative(lambda_r, "lambda_r");
  if (!(eps0 > 0.0)) throw ConfigError("eps0", "must be positive");
}

namespace {

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return out;
}

}  // namespace

std::map<std::string, std::string> TrainConfig::to_key_values() const {
  return {
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"lr_backbone", shortest(lr_backbone)},
      {"lr_heads", shortest(lr_heads)},
      {"momentum", shortest(momentum)},
      {"weight_decay", shortest(weight_decay)},
      {"alpha", shortest(alpha)},
      {"beta", shortest(beta)},
      {"lambda_adv", shortest(lambda_adv)},
      {"lambda_r", shortest(lambda_r)},
      {"direction", std::string(to_string(direction))},
      {"balanced_sampling", bool_text(balanced_sampling)},
      {"detach_target_weights", bool_text(detach_target_weights)},
      {"seed", std::to_string(seed)},
      {"eps0", shortest(eps0)},
  };
}

TrainConfig TrainConfig::from_key_values(const std::map<std::string, std::string>& kv,
                                         TrainConfig base) {
  for (const auto& [key, value] : kv) {
    if (key == "epochs") base.epochs = parse_count(key, value);
    else if (key == "batch_size") base.batch_size = parse_count(key, value);
    else if (key == "lr_backbone") base.lr_backbone = parse_real(key, value);
    else if (key == "lr_heads") base.lr_heads = parse_real(key, value);
    else if (key == "momentum") base.momentum = parse_real(key, value);
    else if (key == "weight_decay") base.weight_decay = parse_real(key, value);
    else if (key == "alpha") base.alpha = parse_real(key, value);
    else if (key == "beta") base.beta = parse_real(key, value);
    else if (key == "lambda_adv") base.lambda_adv = parse_real(key, value);
    else if (key == "lambda_r") base.lambda_r = parse_real(key, value);
    else if (key == "direction") base.direction = parse_direction(value);
    else if (key == "balanced_sampling") base.balanced_sampling = parse_bool(key, value);
    else if (key == "detach_target_weights") base.detach_target_weights = parse_bool(key, value);
    else if (key == "seed") base.seed = parse_count(key, value);
    else if (key == "eps0") base.eps0 = parse_real(key, value);
    else throw ConfigError(key, "unknown training key");
  }
  base.validate();
  return base;
}

TrainConfig TrainConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  return from_key_values(kv, TrainConfig{});
}

TrainState TrainState::fresh(RadaModel model) {
  TrainState s;
  s.velocity = ModelGradients::zeros_like(model);
  s.model = std::move(model);
  return s;
}

std::vector<std::size_t> epoch_order(const LabeledDataset& source, bool balanced,
                                     std::mt19937_64& rng) {
  const std::size_t n = source.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!balanced) {
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }
  std::vector<std::vector<std::size_t>> by_class(source.classes);
  for (std::size_t i = 0; i < n; ++i) {
    if (source.labels[i] < 0) throw LabelError("balanced sampling needs a labeled source");
    by_class[static_cast<std::size_t>(source.labels[i])].push_back(i);
  }
  std::vector<std::size_t> live;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (!by_class[c].empty()) {
      std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
      live.push_back(c);
    }
  }
  std::vector<std::size_t> cursor(by_class.size(), 0);
  order.clear();
  while (order.size() < n) {
    for (std::size_t c : live) {
      if (order.size() == n) break;
      auto& pool = by_class[c];
      if (cursor[c] == pool.size()) {
        std::shuffle(pool.begin(), pool.end(), rng);
        cursor[c] = 0;
      }
      order.push_back(pool[cursor[c]++]);
    }
  }
  return order;
}

void sgd_momentum_step(NetworkParams& params, Gradients& velocity, const Gradients& grad,
                       double lr, double momentum, double weight_decay) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto theta = params.layers[l].values();
    auto v = velocity.layers[l].values();
    const auto g = grad.layers[l].values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v[i] = momentum * v[i] + (g[i] + weight_decay * theta[i]);
      theta[i] -= lr * v[i];
    }
  }
}

namespace {

SourceBatch gather_source(const LabeledDataset& ds, std::span<const std::size_t> idx) {
  SourceBatch b{Matrix(idx.size(), ds.feature_dim()), std::vector<int>(idx.size())};
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = ds.features.row(idx[i]);
    std::copy(src.begin(), src.end(), b.x.row(i).begin());
    b.labels[i] = ds.labels[idx[i]];
  }
  return b;
}

TargetBatch gather_target(const LabeledDataset& ds, std::span<const std::size_t> idx) {
  TargetBatch b{Matrix(idx.size(), ds.feature_dim())};
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = ds.features.row(idx[i]);
    std::copy(src.begin(), src.end(), b.x.row(i).begin());
  }
  return b;
}

// Independent, seed-derived stream per epoch so resumed runs replay exactly.
std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  return std::mt19937_64(seq);
}

bool params_finite(const RadaModel& model) {
  for (const auto* net : {&model.g_f, &model.g_y, &model.g_d})
    for (const auto& layer : net->layers)
      if (!all_finite(layer)) return false;
  return true;
}

}  // namespace

FitResult fit(TrainState state, const LabeledDataset& source, const LabeledDataset& target,
              const TrainConfig& cfg, std::optional<std::size_t> stop_at_epoch) {
  cfg.validate();
  state.model.validate();
  source.validate();
  target.validate();
  if (!source.labeled()) throw LabelError("fit: the source domain must be labeled");
  if (source.feature_dim() != state.model.g_f.input_width() ||
      target.feature_dim() != state.model.g_f.input_width())
    throw DimensionError("fit: dataset feature width does not match the model");
  if (source.classes != state.model.classes())
    throw DimensionError("fit: dataset class count does not match the model");

  const bool multi_branch = state.model.branches() == state.model.classes();
  const bool target_labeled = target.labeled();
  const std::size_t ms = source.size();
  const std::size_t steps = (ms + cfg.batch_size - 1) / cfg.batch_size;

  FitResult result{std::move(state), {}};
  TrainState& st = result.state;
  const std::size_t last_epoch = std::min(cfg.epochs, stop_at_epoch.value_or(cfg.epochs));
  for (std::size_t epoch = st.epochs_completed; epoch < last_epoch; ++epoch) {
    const double progress = static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
    const double lambda_adv = cfg.lambda_adv * lambda_adv_schedule(progress);
    const double lr_f = lr_schedule(cfg.lr_backbone, progress, cfg.alpha, cfg.beta);
    const double lr_h = lr_schedule(cfg.lr_heads, progress, cfg.alpha, cfg.beta);

    ObjectiveSettings settings;
    settings.lambda_adv = lambda_adv;
    settings.lambda_r = cfg.lambda_r;
    settings.direction = cfg.direction;
    settings.eps0 = cfg.eps0;
    settings.detach_target_weights = cfg.detach_target_weights;

    auto rng = epoch_rng(cfg.seed, epoch);
    const auto source_order = epoch_order(source, cfg.balanced_sampling, rng);
    std::vector<std::size_t> target_order(target.size());
    std::iota(target_order.begin(), target_order.end(), std::size_t{0});
    std::shuffle(target_order.begin(), target_order.end(), rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lambda_adv = lambda_adv;
    rec.lr_backbone = lr_f;
    rec.lr_heads = lr_h;
    std::size_t target_cursor = 0;
    for (std::size_t step = 0; step < steps; ++step) {
      const std::size_t begin = step * cfg.batch_size;
      const std::size_t end = std::min(ms, begin + cfg.batch_size);
      const auto sb = gather_source(
          source, std::span<const std::size_t>(source_order).subspan(begin, end - begin));
      std::vector<std::size_t> tidx(end - begin);
      for (auto& i : tidx) {
        if (target_cursor == target_order.size()) target_cursor = 0;
        i = target_order[target_cursor++];
      }
      const auto tb = gather_target(target, tidx);

      ObjectiveResult obj;
      try {
        obj = total_objective(st.model, sb, tb, settings);
      } catch (const DimensionError&) {
        throw;
      } catch (const Error& e) {
        throw DivergenceError(epoch, step, e.what());
      }
      if (!std::isfinite(obj.total) || !obj.update.all_finite())
        throw DivergenceError(epoch, step, "loss " + std::to_string(obj.total));
      if (obj.shrink_y > 0.0 || obj.shrink_d > 0.0) ++rec.shrink_events;
      rec.label_loss += obj.label_loss / static_cast<double>(steps);
      rec.domain_loss += obj.domain_loss / static_cast<double>(steps);

      sgd_momentum_step(st.model.g_f, st.velocity.f, obj.update.f, lr_f, cfg.momentum, cfg.weight_decay);
      sgd_momentum_step(st.model.g_y, st.velocity.y, obj.update.y, lr_h, cfg.momentum, cfg.weight_decay);
      sgd_momentum_step(st.model.g_d, st.velocity.d, obj.update.d, lr_h, cfg.momentum, cfg.weight_decay);
      if (!params_finite(st.model)) throw DivergenceError(epoch, step, "parameters are not finite");
    }

    if (multi_branch) {
      StructureReport sr;
      try {
        sr = structure_report(st.model, cfg.eps0);
      } catch (const Error& e) {
        throw DivergenceError(epoch, steps, e.what());
      }
      rec.structure_loss = cfg.direction == StructureDirection::d_to_y ? sr.loss_d2y : sr.loss_y2d;
      rec.kl_dy = sr.kl_dy;
      rec.kl_yd = sr.kl_yd;
      if (sr.omega_y.shrink_used > 0.0 || sr.omega_d.shrink_used > 0.0) ++rec.shrink_events;
    }
    rec.source_accuracy = accuracy(st.model, source);
    if (target_labeled) rec.target_accuracy = accuracy(st.model, target);
    if (!std::isfinite(rec.label_loss) || !std::isfinite(rec.domain_loss))
      throw DivergenceError(epoch, steps, "epoch summary is not finite");

    result.report.epochs.push_back(rec);
    st.epochs_completed = epoch + 1;
  }
  return result;
}

FitResult fit(const RadaModel& model, const LabeledDataset& source, const LabeledDataset& target,
              const TrainConfig& cfg) {
  return fit(TrainState::fresh(model), source, target, cfg);
}

double GradCheckReport::worst() const {
  return std::max({feature_error, label_error, discriminator_error});
}

double relative_error(const Gradients& analytic, const Gradients& numeric) {
  if (analytic.layers.size() != numeric.layers.size())
    throw DimensionError("relative_error: layer counts differ");
  double diff = 0.0;
  for (std::size_t l = 0; l < analytic.layers.size(); ++l)
    diff = std::max(diff, max_abs(analytic.layers[l] - numeric.layers[l]));
  return diff / std::max(1.0, numeric.max_abs());
}

GradCheckReport grad_check(const RadaModel& model, const SourceBatch& source,
                           const TargetBatch& target, const ObjectiveSettings& settings,
                           double h) {
  std::optional<Matrix> frozen;
  if (settings.detach_target_weights) frozen = target_class_weights(model, target.x);

  const auto analytic = total_objective(model, source, target, settings, frozen, true);
  const ModelGradients& grads = *analytic.objective;

  auto numeric_for = [&](NetworkParams RadaModel::*member) {
    RadaModel probe = model;
    return finite_diff_grad(
        [&](const NetworkParams& p) {
          probe.*member = p;
          return objective_value(probe, source, target, settings, frozen);
        },
        model.*member, h);
  };

  GradCheckReport report;
  report.feature_error = relative_error(grads.f, numeric_for(&RadaModel::g_f));
  report.label_error = relative_error(grads.y, numeric_for(&RadaModel::g_y));
  report.discriminator_error = relative_error(grads.d, numeric_for(&RadaModel::g_d));
  return report;
}

}  // namespace rada
