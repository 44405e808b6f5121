#include "cropmap/models/lstm.hpp"

#include <cmath>

#include "cropmap/data/schema.hpp"
#include "cropmap/error.hpp"

namespace cropmap::models {

namespace {

constexpr std::size_t kPredictChunk = 256;

std::string lstm_name(std::string_view gate, std::string_view part) {
  return "lstm." + std::string(gate) + "." + std::string(part);
}

std::string head_name(HeadKind head, std::string_view part) {
  return std::string(head_prefix(head)) + "." + std::string(part);
}

Tensor uniform(std::vector<std::size_t> shape, double bound, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void add_head(ParameterSet& p, HeadKind head, std::size_t hidden, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  p[head_name(head, "hidden.w")] = uniform({hidden, hidden}, bound, rng);
  p[head_name(head, "hidden.b")] = uniform({1, hidden}, bound, rng);
  p[head_name(head, "out.w")] = uniform({hidden, 1}, bound, rng);
  p[head_name(head, "out.b")] = uniform({1, 1}, bound, rng);
}

Var param(const BoundParams& p, const std::string& name) {
  const auto it = p.find(name);
  if (it == p.end()) throw InvalidArgument("model parameter '" + name + "' is not bound");
  return it->second;
}

std::map<std::string, std::vector<std::size_t>> expected_shapes(const ModelSpec& s) {
  std::map<std::string, std::vector<std::size_t>> shapes;
  for (auto gate : kGates) {
    shapes[lstm_name(gate, "w_ih")] = {s.input_size, s.hidden_size};
    shapes[lstm_name(gate, "w_hh")] = {s.hidden_size, s.hidden_size};
    shapes[lstm_name(gate, "b")] = {1, s.hidden_size};
  }
  std::vector<HeadKind> heads{HeadKind::local};
  if (s.multi_headed) heads.push_back(HeadKind::global);
  for (HeadKind h : heads) {
    shapes[head_name(h, "hidden.w")] = {s.hidden_size, s.hidden_size};
    shapes[head_name(h, "hidden.b")] = {1, s.hidden_size};
    shapes[head_name(h, "out.w")] = {s.hidden_size, 1};
    shapes[head_name(h, "out.b")] = {1, 1};
  }
  return shapes;
}

}  // namespace

std::string_view head_prefix(HeadKind head) { return head == HeadKind::local ? "local" : "global"; }

MultiTaskModel init_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_size == 0 || spec.hidden_size == 0) throw InvalidArgument("model sizes must be positive");
  if (!(spec.alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
  if (spec.dropout < 0.0 || spec.dropout >= 1.0) throw InvalidArgument("dropout must be in [0, 1)");

  std::mt19937_64 rng(seed);
  MultiTaskModel m{spec, {}};
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec.hidden_size));
  for (auto gate : kGates) {
    m.params[lstm_name(gate, "w_ih")] = uniform({spec.input_size, spec.hidden_size}, bound, rng);
    m.params[lstm_name(gate, "w_hh")] = uniform({spec.hidden_size, spec.hidden_size}, bound, rng);
    m.params[lstm_name(gate, "b")] = Tensor({1, spec.hidden_size}, gate == "forget" ? 1.0 : 0.0);
  }
  add_head(m.params, HeadKind::local, spec.hidden_size, rng);
  if (spec.multi_headed) add_head(m.params, HeadKind::global, spec.hidden_size, rng);
  return m;
}

void validate_model(const MultiTaskModel& model) {
  const auto shapes = expected_shapes(model.spec);
  if (model.params.size() != shapes.size()) {
    throw InvalidArgument("model has " + std::to_string(model.params.size()) +
                          " parameter arrays, expected " + std::to_string(shapes.size()));
  }
  for (const auto& [name, shape] : shapes) {
    const auto it = model.params.find(name);
    if (it == model.params.end()) throw InvalidArgument("model lacks parameter " + name);
    if (it->second.shape() != shape) {
      throw InvalidArgument("parameter " + name + " has shape " +
                            numeric::shape_string(it->second.shape()) + ", expected " +
                            numeric::shape_string(shape));
    }
    if (!it->second.all_finite()) throw InvalidArgument("parameter " + name + " is not finite");
  }
  if (!(model.spec.alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
}

SequenceBatch make_sequence_batch(std::span<const std::vector<double>* const> samples,
                                  std::size_t input_size) {
  const std::size_t batch = samples.size();
  SequenceBatch out(data::kMonths, Tensor({batch, input_size}));
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& s = *samples[b];
    if (s.size() != data::kMonths * input_size) {
      throw InvalidArgument("sample has " + std::to_string(s.size()) + " values, expected " +
                            std::to_string(data::kMonths * input_size));
    }
    for (std::size_t t = 0; t < data::kMonths; ++t)
      for (std::size_t c = 0; c < input_size; ++c) out[t].at(b, c) = s[t * input_size + c];
  }
  return out;
}

Tensor make_dropout_mask(std::size_t batch, std::size_t hidden, double rate, std::mt19937_64& rng) {
  Tensor mask({batch, hidden});
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (double& v : mask.values()) v = keep(rng) ? scale : 0.0;
  return mask;
}

BoundParams bind_parameters(Tape& tape, const ParameterSet& params) {
  BoundParams out;
  for (const auto& [name, value] : params) out.emplace(name, tape.parameter(name, value));
  return out;
}

Var lstm_forward(Tape& tape, const BoundParams& p, const SequenceBatch& x,
                 const Tensor* recurrent_mask) {
  if (x.empty()) throw InvalidArgument("lstm_forward: empty sequence");
  const std::size_t batch = x.front().rows();
  const std::size_t hidden = tape.value(param(p, lstm_name("input", "b"))).cols();

  Var h = tape.constant(Tensor({batch, hidden}));
  Var c = tape.constant(Tensor({batch, hidden}));
  for (const Tensor& step : x) {
    const Var xt = tape.constant(step);
    const Var h_in = recurrent_mask ? tape.mask_apply(h, *recurrent_mask) : h;
    auto pre = [&](std::string_view gate) {
      const Var a = tape.matmul(xt, param(p, lstm_name(gate, "w_ih")));
      const Var b = tape.matmul(h_in, param(p, lstm_name(gate, "w_hh")));
      return tape.add(tape.add(a, b), param(p, lstm_name(gate, "b")));
    };
    const Var i = tape.sigmoid(pre("input"));
    const Var f = tape.sigmoid(pre("forget"));
    const Var g = tape.tanh(pre("cell"));
    const Var o = tape.sigmoid(pre("output"));
    c = tape.add(tape.mul(f, c), tape.mul(i, g));
    h = tape.mul(o, tape.tanh(c));
  }
  return h;
}

Var head_forward(Tape& tape, const BoundParams& p, HeadKind head, Var h) {
  const Var z = tape.add(tape.matmul(h, param(p, head_name(head, "hidden.w"))),
                         param(p, head_name(head, "hidden.b")));
  const Var a = tape.tanh(z);
  const Var logit = tape.add(tape.matmul(a, param(p, head_name(head, "out.w"))),
                             param(p, head_name(head, "out.b")));
  return tape.sigmoid(logit);
}

Tensor lstm_hidden_state(const MultiTaskModel& model, const SequenceBatch& x, bool dropout_active,
                         std::uint64_t seed) {
  Tape tape;
  const auto bound = bind_parameters(tape, model.params);
  Tensor mask;
  if (dropout_active && model.spec.dropout > 0.0) {
    std::mt19937_64 rng(seed);
    mask = make_dropout_mask(x.at(0).rows(), model.spec.hidden_size, model.spec.dropout, rng);
  }
  const Var h = lstm_forward(tape, bound, x, mask.size() ? &mask : nullptr);
  return tape.value(h);
}

std::vector<double> predict_probabilities(const MultiTaskModel& model,
                                          std::span<const std::vector<double>> samples,
                                          HeadKind head) {
  if (head == HeadKind::global && !model.spec.multi_headed) {
    throw InvalidArgument("single-headed model has no global head");
  }
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += kPredictChunk) {
    const std::size_t end = std::min(samples.size(), start + kPredictChunk);
    std::vector<const std::vector<double>*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&samples[i]);
    Tape tape;
    const auto bound = bind_parameters(tape, model.params);
    const Var h = lstm_forward(tape, bound, make_sequence_batch(ptrs, model.spec.input_size), nullptr);
    const Var y = head_forward(tape, bound, head, h);
    const auto& v = tape.value(y);
    out.insert(out.end(), v.values().begin(), v.values().end());
  }
  return out;
}

}  // namespace cropmap::models
