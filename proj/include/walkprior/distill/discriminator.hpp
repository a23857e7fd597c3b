#pragma once

#include <span>
#include <vector>

#include "walkprior/nn/mlp.hpp"
#include "walkprior/nn/optimizer.hpp"

namespace wp::distill {

struct DiscConfig {
  std::vector<int> hidden{64, 32};
  double pred_coef = 0.5;
  double grad_coef = 0.05;
  double weight_coef = 0.5;
  double learning_rate = 1e-3;
  int epochs = 4;
  int minibatches = 6;
  double max_grad = 1.0;
};

// Scalar logit over (stacked state, action); p_D = sigmoid(logit).
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(int state_dim, int action_dim, const std::vector<int>& hidden, Rng& rng);
  int state_dim() const { return state_dim_; }
  int action_dim() const { return net.input_size() - state_dim_; }
  double logit(std::span<const double> state, std::span<const double> action) const;
  double prob(std::span<const double> state, std::span<const double> action) const;

  nn::MlpNet net;

 private:
  int state_dim_ = 0;
};

double sigmoid(double x);
double softplus(double x);

// -mean log sigmoid(l_T) - mean log(1 - sigmoid(l_S)), overflow-free.
double disc_pred_loss(std::span<const double> logits_teacher, std::span<const double> logits_student);
// mean over rows of |dD/dx|^2 for a scalar-output net.
double disc_gradient_penalty(nn::MlpNet& net, std::span<const double> inputs, int rows);
// Sum of squared weight-matrix entries; biases exempt.
double disc_weight_decay(const nn::MlpNet& net);

struct DiscStats {
  double pred = 0.0;
  double grad = 0.0;
  double weight = 0.0;
  double total = 0.0;  // pred_coef * pred + grad_coef * grad + weight_coef * weight
  double prob_teacher = 0.0;
  double prob_student = 0.0;
  bool aborted = false;
};

// Loss over equal-sized teacher and student input batches (rows of full
// discriminator inputs); accumulates parameter gradients when backward is set.
DiscStats disc_loss(nn::MlpNet& net, std::span<const double> teacher, std::span<const double> student,
                    int rows, const DiscConfig& cfg, bool backward);

// Epochs x minibatches of clipped steps; minibatches pair teacher row i with
// student row i.
DiscStats disc_update(Discriminator& disc, nn::Adam& opt, std::span<const double> teacher,
                      std::span<const double> student, int teacher_rows, int student_rows,
                      const DiscConfig& cfg, Rng& rng);

}  // namespace wp::distill
