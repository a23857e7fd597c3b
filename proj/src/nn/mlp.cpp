#include "walkprior/nn/mlp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "walkprior/kernels.hpp"

namespace wp::nn {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Elu: return "elu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "elu") return Activation::Elu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  throw Error("unknown activation '" + s + "'");
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Elu: return z > 0.0 ? z : std::expm1(z);
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: return z;
  }
  return z;
}

double activate_deriv(Activation a, double z) {
  switch (a) {
    case Activation::Elu: return z > 0.0 ? 1.0 : std::exp(z);
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

double activate_second_deriv(Activation a, double z) {
  switch (a) {
    case Activation::Elu: return z > 0.0 ? 0.0 : std::exp(z);
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return -2.0 * t * (1.0 - t * t);
    }
    case Activation::Identity: return 0.0;
  }
  return 0.0;
}

MlpNet::MlpNet(std::vector<int> layer_sizes, Activation hidden, bool activate_output)
    : sizes_(std::move(layer_sizes)), act_(hidden), activate_output_(activate_output) {
  if (sizes_.size() < 2) throw Error("MlpNet needs at least an input and an output size");
  for (int s : sizes_) {
    if (s <= 0) throw Error("MlpNet layer sizes must be positive");
  }
  std::size_t off = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
    offsets_.push_back(off);
    off += static_cast<std::size_t>(sizes_[l + 1]);
  }
  params_.assign(off, 0.0);
  grads_.assign(off, 0.0);
}

std::span<double> MlpNet::weights(int l) {
  return {params_.data() + weight_offset(l), static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1]};
}
std::span<const double> MlpNet::weights(int l) const {
  return {params_.data() + weight_offset(l), static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1]};
}
std::span<double> MlpNet::biases(int l) {
  return {params_.data() + bias_offset(l), static_cast<std::size_t>(sizes_[l + 1])};
}
std::span<const double> MlpNet::biases(int l) const {
  return {params_.data() + bias_offset(l), static_cast<std::size_t>(sizes_[l + 1])};
}
std::span<double> MlpNet::weight_grads(int l) {
  return {grads_.data() + weight_offset(l), static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1]};
}
std::span<double> MlpNet::bias_grads(int l) {
  return {grads_.data() + bias_offset(l), static_cast<std::size_t>(sizes_[l + 1])};
}

std::vector<ParamBlock> MlpNet::param_blocks() {
  std::vector<ParamBlock> blocks;
  for (int l = 0; l < num_layers(); ++l) {
    blocks.push_back({weights(l), weight_grads(l), true});
    blocks.push_back({biases(l), bias_grads(l), false});
  }
  return blocks;
}

void MlpNet::init_orthogonal(Rng& rng, double gain, double last_gain) {
  for (int l = 0; l < num_layers(); ++l) {
    const int rows = sizes_[l + 1];
    const int cols = sizes_[l];
    const int big = std::max(rows, cols);
    Eigen::MatrixXd g(big, big);
    for (int i = 0; i < big; ++i)
      for (int j = 0; j < big; ++j) g(i, j) = standard_normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Sign-fix against R's diagonal so the distribution is Haar.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < big; ++j) {
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    const double s = (l + 1 == num_layers()) ? last_gain : gain;
    auto w = weights(l);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w[static_cast<std::size_t>(i) * cols + j] = s * q(i, j);
    std::fill(biases(l).begin(), biases(l).end(), 0.0);
  }
}

std::span<const double> MlpNet::forward(std::span<const double> input, Tape& tape) const {
  if (static_cast<int>(input.size()) != input_size()) {
    throw Error("MlpNet::forward: input has " + std::to_string(input.size()) +
                " entries, network expects " + std::to_string(input_size()));
  }
  const int L = num_layers();
  tape.pre.resize(L);
  tape.post.resize(L + 1);
  tape.post[0].assign(input.begin(), input.end());
  const auto& k = kernels::active();
  for (int l = 0; l < L; ++l) {
    const int out = sizes_[l + 1];
    Vec& z = tape.pre[l];
    Vec& h = tape.post[l + 1];
    z.resize(out);
    h.resize(out);
    k.matvec(params_.data() + weight_offset(l), params_.data() + bias_offset(l),
             tape.post[l].data(), z.data(), out, sizes_[l]);
    if (activated(l)) {
      for (int i = 0; i < out; ++i) h[i] = activate(act_, z[i]);
    } else {
      h = z;
    }
  }
  tape.valid = true;
  return tape.post[L];
}

void MlpNet::backward(const Tape& tape, std::span<const double> grad_output,
                      std::span<double> grad_input) {
  if (!tape.valid) throw Error("MlpNet::backward called before forward");
  if (static_cast<int>(grad_output.size()) != output_size()) {
    throw Error("MlpNet::backward: output gradient has wrong length");
  }
  const auto& k = kernels::active();
  const int L = num_layers();
  Vec delta(grad_output.begin(), grad_output.end());
  Vec next;
  for (int l = L - 1; l >= 0; --l) {
    if (activated(l)) {
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= activate_deriv(act_, tape.pre[l][i]);
    }
    const int out = sizes_[l + 1];
    const int in = sizes_[l];
    k.rank1_acc(grads_.data() + weight_offset(l), delta.data(), tape.post[l].data(), out, in);
    k.axpy(1.0, delta.data(), grads_.data() + bias_offset(l), out);
    if (l > 0 || !grad_input.empty()) {
      next.assign(in, 0.0);
      k.matvec_t_acc(params_.data() + weight_offset(l), delta.data(), next.data(), out, in);
      delta.swap(next);
    }
  }
  if (!grad_input.empty()) {
    if (static_cast<int>(grad_input.size()) != input_size()) {
      throw Error("MlpNet::backward: input gradient buffer has wrong length");
    }
    std::copy(delta.begin(), delta.end(), grad_input.begin());
  }
}

void MlpNet::input_gradient(const Tape& tape, std::span<const double> grad_output,
                            std::span<double> grad_input) const {
  if (!tape.valid) throw Error("MlpNet::input_gradient called before forward");
  if (static_cast<int>(grad_input.size()) != input_size() ||
      static_cast<int>(grad_output.size()) != output_size()) {
    throw Error("MlpNet::input_gradient: dimension mismatch");
  }
  const auto& k = kernels::active();
  Vec delta(grad_output.begin(), grad_output.end());
  Vec next;
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (activated(l)) {
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= activate_deriv(act_, tape.pre[l][i]);
    }
    next.assign(sizes_[l], 0.0);
    k.matvec_t_acc(params_.data() + weight_offset(l), delta.data(), next.data(), sizes_[l + 1],
                   sizes_[l]);
    delta.swap(next);
  }
  std::copy(delta.begin(), delta.end(), grad_input.begin());
}

std::span<const double> MlpNet::forward(std::span<const double> input) {
  return forward(input, tape_);
}

void MlpNet::backward(std::span<const double> grad_output) { backward(tape_, grad_output); }

double MlpNet::input_gradient_penalty(std::span<const double> input, double coef, Tape& tape,
                                      std::span<double> grad_x) {
  if (output_size() != 1 || activate_output_) {
    throw Error("input_gradient_penalty needs a scalar, linear-output network");
  }
  forward(input, tape);
  const auto& k = kernels::active();
  const int L = num_layers();

  // Input-gradient pass: delta[l] is dD/dz_l, u[l] is dD/dh_l.
  std::vector<Vec> delta(L), u(L);
  delta[L - 1] = {1.0};
  for (int l = L - 1; l >= 0; --l) {
    u[l].assign(sizes_[l], 0.0);
    k.matvec_t_acc(params_.data() + weight_offset(l), delta[l].data(), u[l].data(), sizes_[l + 1],
                   sizes_[l]);
    if (l > 0) {
      delta[l - 1].resize(sizes_[l]);
      for (int i = 0; i < sizes_[l]; ++i) delta[l - 1][i] = activate_deriv(act_, tape.pre[l - 1][i]) * u[l][i];
    }
  }
  const double penalty = kernels::sum_squares(u[0]);
  if (!grad_x.empty()) std::copy(u[0].begin(), u[0].end(), grad_x.begin());
  if (coef == 0.0) return penalty;

  // Reverse through the input-gradient pass.
  std::vector<Vec> zbar(L);
  Vec ubar(u[0].size());
  for (std::size_t i = 0; i < ubar.size(); ++i) ubar[i] = 2.0 * coef * u[0][i];
  for (int l = 0; l < L; ++l) {
    const int out = sizes_[l + 1];
    const int in = sizes_[l];
    k.rank1_acc(grads_.data() + weight_offset(l), delta[l].data(), ubar.data(), out, in);
    if (l + 1 < L) {
      Vec dbar(out);
      k.matvec(params_.data() + weight_offset(l), nullptr, ubar.data(), dbar.data(), out, in);
      Vec next_ubar(out);
      zbar[l].resize(out);
      for (int i = 0; i < out; ++i) {
        const double z = tape.pre[l][i];
        next_ubar[i] = activate_deriv(act_, z) * dbar[i];
        zbar[l][i] = activate_second_deriv(act_, z) * u[l + 1][i] * dbar[i];
      }
      ubar.swap(next_ubar);
    }
  }
  // Reverse through the forward pass; the output layer's z carries no adjoint.
  Vec hbar;
  for (int l = L - 2; l >= 0; --l) {
    const int out = sizes_[l + 1];
    const int in = sizes_[l];
    Vec& zb = zbar[l];
    if (!hbar.empty()) {
      for (int i = 0; i < out; ++i) zb[i] += activate_deriv(act_, tape.pre[l][i]) * hbar[i];
    }
    k.rank1_acc(grads_.data() + weight_offset(l), zb.data(), tape.post[l].data(), out, in);
    k.axpy(1.0, zb.data(), grads_.data() + bias_offset(l), out);
    if (l > 0) {
      hbar.assign(in, 0.0);
      k.matvec_t_acc(params_.data() + weight_offset(l), zb.data(), hbar.data(), out, in);
    }
  }
  return penalty;
}

void MlpNet::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

double MlpNet::weight_sum_squares() const {
  double s = 0.0;
  for (int l = 0; l < num_layers(); ++l) s += kernels::sum_squares(weights(l));
  return s;
}

void MlpNet::accumulate_weight_decay_grad(double coef) {
  for (int l = 0; l < num_layers(); ++l) kernels::axpy(2.0 * coef, weights(l), weight_grads(l));
}

}  // namespace wp::nn
