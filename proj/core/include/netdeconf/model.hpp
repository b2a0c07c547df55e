#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "netdeconf/matrix.hpp"
#include "netdeconf/rng.hpp"
#include "netdeconf/sparse.hpp"

namespace netdeconf {

/// Layer sizes of the encoder and the two outcome heads.
struct Architecture {
  std::size_t features = 0;       // m, width of the input features
  std::size_t gcn_layers = 2;     // stacked graph-convolution layers
  std::size_t out_layers = 2;     // L, fully connected layers per head
  std::size_t rep_dim = 100;      // d, width of every encoder layer
  std::size_t hidden_units = 100; // width of every head layer

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// y = x·weight + bias, weight is in×out.
struct DenseLayer {
  DenseMatrix weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// All trainable parameters.
///
/// Flattened order (used by the optimizer and checkpoints): encoder layers
/// first to last, then head 0 layers, then head 1 layers; within a layer the
/// weight in row-major order followed by the bias. Each head holds
/// `out_layers` hidden layers plus a final hidden_units×1 regression layer.
struct ModelParams {
  std::vector<DenseLayer> encoder;
  std::array<std::vector<DenseLayer>, 2> heads;

  static ModelParams zeros(const Architecture& arch);

  Architecture architecture() const;
  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);
  /// Adds scale·other coordinate-wise.
  void axpy(double scale, const ModelParams& other);
  double squared_norm() const;
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Gradients share the parameter layout.
using ParamGrads = ModelParams;

/// Glorot-uniform weights, zero biases.
ModelParams init_params(const Architecture& arch, Rng& rng);

/// Values retained by forward() for backward().
///
/// Holds non-owning pointers to the adjacency and feature matrices of the
/// forward call; they must outlive the trace.
struct ForwardTrace {
  const SparseMatrix* adjacency = nullptr;
  const SparseMatrix* features = nullptr;
  std::vector<DenseMatrix> encoder_pre;
  std::vector<DenseMatrix> encoder_out;
  std::array<std::vector<std::size_t>, 2> head_rows;
  std::array<std::vector<DenseMatrix>, 2> head_inputs;
  std::array<std::vector<DenseMatrix>, 2> head_pre;

  const DenseMatrix& representations() const { return encoder_out.back(); }
};

struct ForwardResult {
  std::vector<double> predictions;
  ForwardTrace trace;
};

/// Encoder output H (n×d): one ReLU graph convolution per layer,
/// H_l = relu(Â·H_{l-1}·U_l + b_l) with H_0 = X.
DenseMatrix encode(const ModelParams& params, const SparseMatrix& adjacency, const SparseMatrix& features);
DenseMatrix encode(const ModelParams& params, const SparseMatrix& adjacency, const DenseMatrix& features);

/// Routes row i of H through head t_assign[i].
std::vector<double> predict(const ModelParams& params, const DenseMatrix& representations,
                            std::span<const std::uint8_t> t_assign);

/// Both potential outcomes for every row: {ŷ⁰, ŷ¹}.
std::array<std::vector<double>, 2> predict_both(const ModelParams& params, const DenseMatrix& representations);

ForwardResult forward(const ModelParams& params, const SparseMatrix& adjacency, const SparseMatrix& features,
                      std::span<const std::uint8_t> t_assign);

/// Reverse pass for upstream gradients on the predictions and, optionally,
/// directly on H (`grad_representations` may be empty).
ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, std::span<const double> grad_predictions,
                    const DenseMatrix& grad_representations);

}  // namespace netdeconf
