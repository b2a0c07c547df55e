#include "netdeconf/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netdeconf/errors.hpp"

namespace netdeconf {

namespace {

template <typename Params, typename Fn>
void for_each_block(Params& p, Fn&& fn) {
  auto visit = [&](auto& layer) {
    fn(layer.weight.values());
    fn(std::span(layer.bias));
  };
  for (auto& layer : p.encoder) visit(layer);
  for (auto& head : p.heads)
    for (auto& layer : head) visit(layer);
}

DenseLayer zero_layer(std::size_t in, std::size_t out) {
  return DenseLayer{DenseMatrix(in, out), std::vector<double>(out, 0.0)};
}

void validate_assignment(std::span<const std::uint8_t> t, std::size_t n) {
  require_shape(t.size() == n, "treatment vector has " + std::to_string(t.size()) + " entries, expected " +
                                   std::to_string(n));
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > 1) throw std::invalid_argument("treatment of row " + std::to_string(i) + " is not 0 or 1");
}

DenseMatrix affine(const DenseMatrix& x, const DenseLayer& layer) {
  DenseMatrix z = matmul(x, layer.weight);
  add_row_broadcast(z, layer.bias);
  return z;
}

struct HeadPass {
  std::vector<DenseMatrix> inputs;
  std::vector<DenseMatrix> pre;
};

HeadPass run_head(const std::vector<DenseLayer>& head, DenseMatrix input) {
  HeadPass pass;
  pass.inputs.reserve(head.size());
  pass.pre.reserve(head.size());
  for (std::size_t k = 0; k < head.size(); ++k) {
    DenseMatrix z = affine(input, head[k]);
    pass.inputs.push_back(std::move(input));
    const bool last = k + 1 == head.size();
    input = last ? DenseMatrix() : relu(z);
    pass.pre.push_back(std::move(z));
  }
  return pass;
}

std::array<std::vector<std::size_t>, 2> route(std::span<const std::uint8_t> t) {
  std::array<std::vector<std::size_t>, 2> rows;
  for (std::size_t i = 0; i < t.size(); ++i) rows[t[i]].push_back(i);
  return rows;
}

void check_encoder_input(const ModelParams& params, const SparseMatrix& adjacency, std::size_t n, std::size_t m) {
  require_shape(!params.encoder.empty(), "encode: model has no encoder layers");
  require_shape(adjacency.rows() == n && adjacency.cols() == n,
                "encode: adjacency is " + std::to_string(adjacency.rows()) + "x" + std::to_string(adjacency.cols()) +
                    " but features have " + std::to_string(n) + " rows");
  require_shape(params.encoder.front().weight.rows() == m,
                "encode: features have " + std::to_string(m) + " columns, first layer expects " +
                    std::to_string(params.encoder.front().weight.rows()));
}

}  // namespace

ModelParams ModelParams::zeros(const Architecture& arch) {
  require_shape(arch.features > 0 && arch.gcn_layers > 0 && arch.out_layers > 0 && arch.rep_dim > 0 &&
                    arch.hidden_units > 0,
                "Architecture: all dimensions must be positive");
  ModelParams p;
  for (std::size_t l = 0; l < arch.gcn_layers; ++l)
    p.encoder.push_back(zero_layer(l == 0 ? arch.features : arch.rep_dim, arch.rep_dim));
  for (auto& head : p.heads) {
    for (std::size_t l = 0; l < arch.out_layers; ++l)
      head.push_back(zero_layer(l == 0 ? arch.rep_dim : arch.hidden_units, arch.hidden_units));
    head.push_back(zero_layer(arch.hidden_units, 1));
  }
  return p;
}

Architecture ModelParams::architecture() const {
  Architecture a;
  a.features = encoder.empty() ? 0 : encoder.front().weight.rows();
  a.gcn_layers = encoder.size();
  a.rep_dim = encoder.empty() ? 0 : encoder.back().weight.cols();
  a.out_layers = heads[0].empty() ? 0 : heads[0].size() - 1;
  a.hidden_units = heads[0].empty() ? 0 : heads[0].back().weight.rows();
  return a;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t count = 0;
  for_each_block(*this, [&](std::span<const double> block) { count += block.size(); });
  return count;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for_each_block(*this, [&](std::span<const double> block) { flat.insert(flat.end(), block.begin(), block.end()); });
  return flat;
}

void ModelParams::assign_flat(std::span<const double> flat) {
  require_shape(flat.size() == parameter_count(), "assign_flat: expected " + std::to_string(parameter_count()) +
                                                      " values, got " + std::to_string(flat.size()));
  std::size_t offset = 0;
  for_each_block(*this, [&](std::span<double> block) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), block.size(), block.begin());
    offset += block.size();
  });
}

void ModelParams::axpy(double scale, const ModelParams& other) {
  const auto src = other.flatten();
  require_shape(src.size() == parameter_count(), "axpy: parameter layouts differ");
  std::size_t offset = 0;
  for_each_block(*this, [&](std::span<double> block) {
    for (double& v : block) v += scale * src[offset++];
  });
}

double ModelParams::squared_norm() const {
  double acc = 0.0;
  for_each_block(*this, [&](std::span<const double> block) {
    for (double v : block) acc += v * v;
  });
  return acc;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each_block(*this, [&](std::span<const double> block) {
    for (double v : block) ok = ok && std::isfinite(v);
  });
  return ok;
}

ModelParams init_params(const Architecture& arch, Rng& rng) {
  ModelParams p = ModelParams::zeros(arch);
  auto glorot = [&](DenseLayer& layer) {
    const auto fan_in = static_cast<double>(layer.weight.rows());
    const auto fan_out = static_cast<double>(layer.weight.cols());
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
  };
  for (auto& layer : p.encoder) glorot(layer);
  for (auto& head : p.heads)
    for (auto& layer : head) glorot(layer);
  return p;
}

namespace {

// Fills trace.encoder_pre / encoder_out.
void run_encoder(const ModelParams& params, const SparseMatrix& adjacency, const SparseMatrix& features,
                 ForwardTrace& trace) {
  check_encoder_input(params, adjacency, features.rows(), features.cols());
  trace.encoder_pre.clear();
  trace.encoder_out.clear();
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const auto& layer = params.encoder[l];
    DenseMatrix projected = l == 0 ? spmm(features, layer.weight) : matmul(trace.encoder_out.back(), layer.weight);
    DenseMatrix z = spmm(adjacency, projected);
    add_row_broadcast(z, layer.bias);
    trace.encoder_out.push_back(relu(z));
    trace.encoder_pre.push_back(std::move(z));
  }
}

}  // namespace

DenseMatrix encode(const ModelParams& params, const SparseMatrix& adjacency, const SparseMatrix& features) {
  ForwardTrace trace;
  run_encoder(params, adjacency, features, trace);
  return std::move(trace.encoder_out.back());
}

DenseMatrix encode(const ModelParams& params, const SparseMatrix& adjacency, const DenseMatrix& features) {
  return encode(params, adjacency, SparseMatrix::from_dense(features));
}

std::vector<double> predict(const ModelParams& params, const DenseMatrix& representations,
                            std::span<const std::uint8_t> t_assign) {
  validate_assignment(t_assign, representations.rows());
  const auto rows = route(t_assign);
  std::vector<double> out(representations.rows(), 0.0);
  for (int t = 0; t < 2; ++t) {
    if (rows[t].empty()) continue;
    const auto pass = run_head(params.heads[t], gather_rows(representations, rows[t]));
    const auto& y = pass.pre.back();
    for (std::size_t k = 0; k < rows[t].size(); ++k) out[rows[t][k]] = y(k, 0);
  }
  return out;
}

std::array<std::vector<double>, 2> predict_both(const ModelParams& params, const DenseMatrix& representations) {
  std::array<std::vector<double>, 2> out;
  for (int t = 0; t < 2; ++t) {
    const std::vector<std::uint8_t> assign(representations.rows(), static_cast<std::uint8_t>(t));
    out[t] = predict(params, representations, assign);
  }
  return out;
}

ForwardResult forward(const ModelParams& params, const SparseMatrix& adjacency, const SparseMatrix& features,
                      std::span<const std::uint8_t> t_assign) {
  ForwardResult result;
  auto& trace = result.trace;
  trace.adjacency = &adjacency;
  trace.features = &features;
  run_encoder(params, adjacency, features, trace);
  const DenseMatrix& h = trace.representations();
  validate_assignment(t_assign, h.rows());
  trace.head_rows = route(t_assign);
  result.predictions.assign(h.rows(), 0.0);
  for (int t = 0; t < 2; ++t) {
    trace.head_inputs[t].clear();
    trace.head_pre[t].clear();
    if (trace.head_rows[t].empty()) continue;
    auto pass = run_head(params.heads[t], gather_rows(h, trace.head_rows[t]));
    const auto& y = pass.pre.back();
    for (std::size_t k = 0; k < trace.head_rows[t].size(); ++k) result.predictions[trace.head_rows[t][k]] = y(k, 0);
    trace.head_inputs[t] = std::move(pass.inputs);
    trace.head_pre[t] = std::move(pass.pre);
  }
  return result;
}

ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, std::span<const double> grad_predictions,
                    const DenseMatrix& grad_representations) {
  require_shape(trace.adjacency && trace.features && trace.encoder_out.size() == params.encoder.size(),
                "backward: trace does not come from a forward pass of these parameters");
  const DenseMatrix& h = trace.representations();
  require_shape(grad_predictions.size() == h.rows(), "backward: gradient has " +
                                                         std::to_string(grad_predictions.size()) +
                                                         " entries, trace has " + std::to_string(h.rows()) + " rows");
  require_shape(grad_representations.empty() ||
                    (grad_representations.rows() == h.rows() && grad_representations.cols() == h.cols()),
                "backward: representation gradient shape mismatch");

  ParamGrads grads = ModelParams::zeros(params.architecture());
  DenseMatrix grad_h = grad_representations.empty() ? DenseMatrix(h.rows(), h.cols()) : grad_representations;

  for (int t = 0; t < 2; ++t) {
    const auto& rows = trace.head_rows[t];
    if (rows.empty()) continue;
    const auto& head = params.heads[t];
    require_shape(trace.head_pre[t].size() == head.size(), "backward: head trace depth mismatch");
    DenseMatrix upstream(rows.size(), 1);
    for (std::size_t k = 0; k < rows.size(); ++k) upstream(k, 0) = grad_predictions[rows[k]];
    for (std::size_t k = head.size(); k-- > 0;) {
      const bool last = k + 1 == head.size();
      DenseMatrix dz = last ? std::move(upstream) : relu_backward(trace.head_pre[t][k], upstream);
      grads.heads[t][k].weight = matmul_tn(trace.head_inputs[t][k], dz);
      grads.heads[t][k].bias = column_sums(dz);
      upstream = matmul_nt(dz, head[k].weight);
    }
    scatter_add_rows(grad_h, rows, upstream);
  }

  for (std::size_t l = params.encoder.size(); l-- > 0;) {
    const DenseMatrix dz = relu_backward(trace.encoder_pre[l], grad_h);
    grads.encoder[l].bias = column_sums(dz);
    const DenseMatrix aggregated = spmm_transposed(*trace.adjacency, dz);
    if (l == 0) {
      grads.encoder[l].weight = spmm_transposed(*trace.features, aggregated);
    } else {
      grads.encoder[l].weight = matmul_tn(trace.encoder_out[l - 1], aggregated);
      grad_h = matmul_nt(aggregated, params.encoder[l].weight);
    }
  }
  return grads;
}

}  // namespace netdeconf
