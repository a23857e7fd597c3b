#include "walkprior/distill/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wp::distill {

Discriminator::Discriminator(int state_dim, int action_dim, const std::vector<int>& hidden,
                             Rng& rng)
    : state_dim_(state_dim) {
  std::vector<int> sizes{state_dim + action_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  net = nn::MlpNet(sizes);
  net.init_orthogonal(rng, std::sqrt(2.0), 1.0);
}

double Discriminator::logit(std::span<const double> state, std::span<const double> action) const {
  if (static_cast<int>(state.size()) != state_dim_ ||
      static_cast<int>(action.size()) != action_dim()) {
    throw Error("Discriminator: input size mismatch");
  }
  Vec x(state.begin(), state.end());
  x.insert(x.end(), action.begin(), action.end());
  nn::Tape tape;
  return net.forward(x, tape)[0];
}

double Discriminator::prob(std::span<const double> state, std::span<const double> action) const {
  return sigmoid(logit(state, action));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double disc_pred_loss(std::span<const double> logits_teacher,
                      std::span<const double> logits_student) {
  double t = 0.0, s = 0.0;
  for (double l : logits_teacher) t += softplus(-l);
  for (double l : logits_student) s += softplus(l);
  if (!logits_teacher.empty()) t /= static_cast<double>(logits_teacher.size());
  if (!logits_student.empty()) s /= static_cast<double>(logits_student.size());
  return t + s;
}

double disc_gradient_penalty(nn::MlpNet& net, std::span<const double> inputs, int rows) {
  if (rows <= 0) return 0.0;
  const int d = net.input_size();
  if (inputs.size() != static_cast<std::size_t>(rows) * d) {
    throw Error("disc_gradient_penalty: input size mismatch");
  }
  nn::Tape tape;
  double sum = 0.0;
  for (int r = 0; r < rows; ++r) {
    sum += net.input_gradient_penalty(inputs.subspan(static_cast<std::size_t>(r) * d, d), 0.0,
                                      tape);
  }
  return sum / rows;
}

double disc_weight_decay(const nn::MlpNet& net) { return net.weight_sum_squares(); }

DiscStats disc_loss(nn::MlpNet& net, std::span<const double> teacher,
                    std::span<const double> student, int rows, const DiscConfig& cfg,
                    bool backward) {
  DiscStats st;
  if (rows <= 0) return st;
  const int d = net.input_size();
  if (teacher.size() != static_cast<std::size_t>(rows) * d || teacher.size() != student.size()) {
    throw Error("disc_loss: teacher and student batches must match in size");
  }
  const double inv = 1.0 / rows;
  const double gp_coef = backward ? cfg.grad_coef * 0.5 * inv : 0.0;
  nn::Tape tape;
  double pred = 0.0, grad = 0.0, pt = 0.0, ps = 0.0;
  for (int side = 0; side < 2; ++side) {
    const auto batch = side == 0 ? teacher : student;
    for (int r = 0; r < rows; ++r) {
      const auto x = batch.subspan(static_cast<std::size_t>(r) * d, d);
      // The penalty pass also leaves the forward record on the tape.
      grad += net.input_gradient_penalty(x, gp_coef, tape);
      const double l = tape.post.back()[0];
      if (side == 0) {
        pred += softplus(-l);
        pt += sigmoid(l);
      } else {
        pred += softplus(l);
        ps += sigmoid(l);
      }
      if (backward) {
        const double g = cfg.pred_coef * inv * (side == 0 ? -sigmoid(-l) : sigmoid(l));
        net.backward(tape, std::span<const double>(&g, 1));
      }
    }
  }
  st.pred = pred * inv;
  st.grad = grad * 0.5 * inv;
  st.weight = disc_weight_decay(net);
  if (backward) net.accumulate_weight_decay_grad(cfg.weight_coef);
  st.prob_teacher = pt * inv;
  st.prob_student = ps * inv;
  st.total = cfg.pred_coef * st.pred + cfg.grad_coef * st.grad + cfg.weight_coef * st.weight;
  return st;
}

DiscStats disc_update(Discriminator& disc, nn::Adam& opt, std::span<const double> teacher,
                      std::span<const double> student, int teacher_rows, int student_rows,
                      const DiscConfig& cfg, Rng& rng) {
  if (teacher_rows != student_rows) throw Error("disc_update: unbalanced teacher/student batches");
  const int rows = teacher_rows;
  const int d = disc.net.input_size();
  DiscStats mean;
  if (rows == 0) return mean;
  std::vector<int> perm(rows);
  std::iota(perm.begin(), perm.end(), 0);
  const int mbs = std::min(cfg.minibatches, rows);
  auto blocks = disc.net.param_blocks();
  int count = 0;
  Vec tb, sb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int m = 0; m < mbs; ++m) {
      const int lo = static_cast<int>(static_cast<long>(rows) * m / mbs);
      const int hi = static_cast<int>(static_cast<long>(rows) * (m + 1) / mbs);
      tb.resize(static_cast<std::size_t>(hi - lo) * d);
      sb.resize(tb.size());
      for (int k = lo; k < hi; ++k) {
        const std::size_t src = static_cast<std::size_t>(perm[k]) * d;
        std::copy(teacher.begin() + src, teacher.begin() + src + d, tb.begin() + (k - lo) * d);
        std::copy(student.begin() + src, student.begin() + src + d, sb.begin() + (k - lo) * d);
      }
      disc.net.zero_grad();
      const DiscStats s = disc_loss(disc.net, tb, sb, hi - lo, cfg, true);
      if (!std::isfinite(s.total)) {
        disc.net.zero_grad();
        mean.aborted = true;
        return mean;
      }
      nn::clip_gradients(blocks, cfg.max_grad);
      opt.step(blocks);
      mean.pred += s.pred;
      mean.grad += s.grad;
      mean.weight += s.weight;
      mean.total += s.total;
      mean.prob_teacher += s.prob_teacher;
      mean.prob_student += s.prob_student;
      ++count;
    }
  }
  for (double* x : {&mean.pred, &mean.grad, &mean.weight, &mean.total, &mean.prob_teacher,
                    &mean.prob_student}) {
    *x /= count;
  }
  return mean;
}

}  // namespace wp::distill
