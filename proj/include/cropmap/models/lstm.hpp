#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cropmap/numeric/tape.hpp"
#include "cropmap/numeric/tensor.hpp"

namespace cropmap::models {

using numeric::ParameterSet;
using numeric::Tape;
using numeric::Tensor;
using numeric::Var;

inline constexpr std::size_t kDefaultHidden = 64;
inline constexpr std::array<std::string_view, 4> kGates = {"input", "forget", "cell", "output"};

enum class HeadKind { local, global };
std::string_view head_prefix(HeadKind head);

/// Shapes and regularisation of a (multi-headed) LSTM classifier.
///
/// Parameters are stored by name:
///   lstm.<gate>.w_ih  [input, hidden]
///   lstm.<gate>.w_hh  [hidden, hidden]
///   lstm.<gate>.b     [1, hidden]
///   <head>.hidden.w   [hidden, hidden]   <head>.hidden.b [1, hidden]
///   <head>.out.w      [hidden, 1]        <head>.out.b    [1, 1]
/// with gate in {input, forget, cell, output} and head in {local, global}.
struct ModelSpec {
  bool multi_headed = false;
  std::size_t input_size = 18;
  std::size_t hidden_size = kDefaultHidden;
  double alpha = 10.0;
  double dropout = 0.2;
};

struct MultiTaskModel {
  ModelSpec spec;
  ParameterSet params;
};

/// Forget-gate bias 1, other LSTM biases 0, LSTM weights U(+-1/sqrt(hidden));
/// head weights and biases U(+-1/sqrt(fan_in)).
MultiTaskModel init_model(const ModelSpec& spec, std::uint64_t seed);

/// Throws InvalidArgument when a parameter is missing, misshapen or non-finite.
void validate_model(const MultiTaskModel& model);

/// One [batch, input] tensor per month.
using SequenceBatch = std::vector<Tensor>;

/// Packs month-major normalized samples (12 x input each) into a batch.
SequenceBatch make_sequence_batch(std::span<const std::vector<double>* const> samples,
                                  std::size_t input_size);

/// Bernoulli(1 - rate) keep-mask scaled by 1 / (1 - rate), shape [batch, hidden].
Tensor make_dropout_mask(std::size_t batch, std::size_t hidden, double rate, std::mt19937_64& rng);

using BoundParams = std::map<std::string, Var, std::less<>>;

/// Records every parameter on the tape as a gradient leaf.
BoundParams bind_parameters(Tape& tape, const ParameterSet& params);

/// Runs the recurrence from a zero state and returns h_T [batch, hidden].
/// A non-null mask is multiplied into h_{t-1} at every step.
Var lstm_forward(Tape& tape, const BoundParams& p, const SequenceBatch& x,
                 const Tensor* recurrent_mask);

/// hidden -> tanh(hidden) -> 1 -> sigmoid; output [batch, 1].
Var head_forward(Tape& tape, const BoundParams& p, HeadKind head, Var h);

/// h_T for a batch outside of training. With dropout_active a mask is drawn
/// from `seed`.
Tensor lstm_hidden_state(const MultiTaskModel& model, const SequenceBatch& x, bool dropout_active,
                         std::uint64_t seed);

/// Dropout-free probabilities from one head for normalized samples.
std::vector<double> predict_probabilities(const MultiTaskModel& model,
                                          std::span<const std::vector<double>> samples,
                                          HeadKind head = HeadKind::local);

}  // namespace cropmap::models
