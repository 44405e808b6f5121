#include "cropmap/models/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "cropmap/data/csv.hpp"
#include "cropmap/error.hpp"
#include "cropmap/numeric/adam.hpp"

namespace cropmap::models {

namespace {

constexpr std::size_t kEvalChunk = 256;

double f1_at_half(std::span<const double> probs, std::span<const TrainingSample> samples) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= 0.5;
    const bool truth = samples[i].label == 1;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

std::string_view to_string(LossWeighting w) { return w == LossWeighting::weighted ? "weighted" : "plain"; }

LossWeighting parse_loss_weighting(std::string_view text) {
  if (text == "weighted") return LossWeighting::weighted;
  if (text == "plain") return LossWeighting::plain;
  throw InvalidArgument("unknown loss weighting '" + std::string(text) + "'");
}

void validate_train_config(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (c.batch_size == 0) throw InvalidArgument("batch_size must be > 0");
  if (c.patience == 0) throw InvalidArgument("patience must be > 0");
  if (c.max_epochs > 0 && c.patience > c.max_epochs) {
    throw InvalidArgument("patience must not exceed max_epochs");
  }
}

HeadWeights head_weights(std::span<const TrainingSample> train, bool multi_headed,
                         LossWeighting weighting) {
  if (weighting == LossWeighting::plain) return {};
  std::vector<int> local, global;
  for (const auto& s : train) (!multi_headed || s.is_local ? local : global).push_back(s.label);
  HeadWeights w;
  w.local = class_weights_from_labels(local);
  if (multi_headed) w.global = class_weights_from_labels(global);
  return w;
}

Var batch_loss(Tape& tape, const BoundParams& params, const ModelSpec& spec,
               std::span<const TrainingSample* const> batch, const HeadWeights& weights,
               const Tensor* dropout_mask) {
  std::vector<const std::vector<double>*> feats;
  std::vector<int> labels;
  std::vector<char> local_rows, global_rows;
  for (const TrainingSample* s : batch) {
    feats.push_back(&s->features);
    labels.push_back(s->label);
    const bool local = !spec.multi_headed || s->is_local;
    local_rows.push_back(local);
    global_rows.push_back(!local);
  }
  const Var h = lstm_forward(tape, params, make_sequence_batch(feats, spec.input_size), dropout_mask);
  const Var local_pred = head_forward(tape, params, HeadKind::local, h);
  const Var local_loss = weighted_bce(tape, local_pred, labels, local_rows, weights.local);
  if (!spec.multi_headed) return local_loss;

  const auto n_local = static_cast<std::size_t>(std::count(local_rows.begin(), local_rows.end(), 1));
  const std::size_t n_global = batch.size() - n_local;
  if (n_global == 0) return local_loss;
  const Var global_pred = head_forward(tape, params, HeadKind::global, h);
  const Var global_loss = weighted_bce(tape, global_pred, labels, global_rows, weights.global);
  const Var scaled = tape.scale(global_loss, global_to_local_ratio(n_local, n_global) / spec.alpha);
  if (n_local == 0) return scaled;
  return tape.add(scaled, local_loss);
}

std::vector<double> routed_probabilities(const MultiTaskModel& model,
                                         std::span<const TrainingSample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
    const std::size_t end = std::min(samples.size(), start + kEvalChunk);
    std::vector<const std::vector<double>*> feats;
    for (std::size_t i = start; i < end; ++i) feats.push_back(&samples[i].features);
    Tape tape;
    const auto bound = bind_parameters(tape, model.params);
    const Var h = lstm_forward(tape, bound, make_sequence_batch(feats, model.spec.input_size), nullptr);
    const auto& local = tape.value(head_forward(tape, bound, HeadKind::local, h));
    if (!model.spec.multi_headed) {
      out.insert(out.end(), local.values().begin(), local.values().end());
      continue;
    }
    const auto& global = tape.value(head_forward(tape, bound, HeadKind::global, h));
    for (std::size_t i = start; i < end; ++i)
      out.push_back(samples[i].is_local ? local[i - start] : global[i - start]);
  }
  return out;
}

double evaluate_loss(const MultiTaskModel& model, std::span<const TrainingSample> samples,
                     const HeadWeights& weights) {
  const auto probs = routed_probabilities(model, samples);
  std::vector<double> lp, gp;
  std::vector<int> ll, gl;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const bool local = !model.spec.multi_headed || samples[i].is_local;
    (local ? lp : gp).push_back(probs[i]);
    (local ? ll : gl).push_back(samples[i].label);
  }
  return multi_task_loss(lp, ll, gp, gl, model.spec.alpha, weights.local, weights.global);
}

TrainResult train(const ModelSpec& spec, std::span<const TrainingSample> train_set,
                  std::span<const TrainingSample> validation_set, const TrainConfig& config) {
  validate_train_config(config);
  if (train_set.empty()) throw InvalidArgument("train: empty training set");
  if (validation_set.empty()) throw InvalidArgument("train: empty validation set");
  if (spec.multi_headed) {
    const bool any_local = std::any_of(train_set.begin(), train_set.end(),
                                       [](const TrainingSample& s) { return s.is_local; });
    const bool any_global = std::any_of(train_set.begin(), train_set.end(),
                                        [](const TrainingSample& s) { return !s.is_local; });
    if (!any_local || !any_global) {
      throw InvalidArgument("multi-headed training needs both local and non-local samples");
    }
  }

  TrainResult result{init_model(spec, config.seed), {}, std::nullopt, 0};
  if (config.max_epochs == 0) return result;

  const HeadWeights weights = head_weights(train_set, spec.multi_headed, config.loss_weighting);
  numeric::AdamState adam;
  adam.config.learning_rate = config.learning_rate;

  // Separate stream from the one used by init_model.
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  numeric::ParameterSet best_params = result.model.params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const TrainingSample*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);

      Tensor mask;
      if (spec.dropout > 0.0) mask = make_dropout_mask(batch.size(), spec.hidden_size, spec.dropout, rng);
      Tape tape;
      const auto bound = bind_parameters(tape, result.model.params);
      const Var loss = batch_loss(tape, bound, spec, batch, weights, mask.size() ? &mask : nullptr);
      if (spec.multi_headed && std::none_of(batch.begin(), batch.end(),
                                            [](const TrainingSample* s) { return s->is_local; })) {
        ++result.degenerate_batches;
      }
      const auto grads = tape.backward(loss);
      numeric::adam_step(result.model.params, grads, adam);
      loss_sum += tape.value(loss).item();
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    const auto val_probs = routed_probabilities(result.model, validation_set);
    rec.val_loss = evaluate_loss(result.model, validation_set, weights);
    if (!std::isfinite(rec.val_loss)) {
      throw NumericError("validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    rec.val_f1 = f1_at_half(val_probs, validation_set);
    result.history.push_back(rec);

    if (rec.val_loss < best_loss) {
      best_loss = rec.val_loss;
      best_params = result.model.params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.model.params = std::move(best_params);
  return result;
}

void write_history_csv(std::span<const EpochRecord> history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write history " + path.string());
  out << "epoch,train_loss,val_loss,val_f1\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << data::format_double(r.train_loss) << ','
        << data::format_double(r.val_loss) << ',' << data::format_double(r.val_f1) << '\n';
  }
  if (!out) throw FormatError("I/O failure writing " + path.string());
}

}  // namespace cropmap::models
