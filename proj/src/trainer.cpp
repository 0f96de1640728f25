#include "gesture/trainer.hpp"

#include <sstream>

namespace gesture {

void TrainConfig::validate() const {
  if (max_epochs == 0 || batch_size == 0 || patience == 0) {
    throw ParameterError("max_epochs, batch_size and patience must be positive");
  }
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("rho must be in (0,1)");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
}

std::string TrainReport::csv() const {
  std::ostringstream out;
  out.precision(8);
  out << "epoch,train_loss,val_loss,train_accuracy,val_accuracy\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.train_accuracy << ',' << e.val_accuracy
        << '\n';
  }
  out << "# stopped_epoch " << stopped_epoch << "\n# best_epoch " << best_epoch << '\n';
  return out.str();
}

bool TrainReport::operator==(const TrainReport& o) const {
  if (stopped_epoch != o.stopped_epoch || best_epoch != o.best_epoch || best_val_loss != o.best_val_loss ||
      epochs.size() != o.epochs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& a = epochs[i];
    const auto& b = o.epochs[i];
    if (a.epoch != b.epoch || a.train_loss != b.train_loss || a.val_loss != b.val_loss ||
        a.train_accuracy != b.train_accuracy || a.val_accuracy != b.val_accuracy) {
      return false;
    }
  }
  return true;
}

Adadelta::Adadelta(const std::vector<const Tensor*>& params, double rho, double epsilon, double learning_rate)
    : rho_(rho), eps_(epsilon), lr_(learning_rate), sq_grad_(nn::zero_gradients(params)), sq_update_(sq_grad_) {}

void Adadelta::step(const std::vector<Tensor*>& params, const nn::Gradients& grads) {
  if (params.size() != sq_grad_.size() || grads.size() != sq_grad_.size()) {
    throw ParameterError("optimizer: parameter count changed");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p]->data();
    auto& eg = sq_grad_[p];
    auto& ex = sq_update_[p];
    const auto& g = grads[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      eg[i] = rho_ * eg[i] + (1.0 - rho_) * g[i] * g[i];
      const double dx = -std::sqrt(ex[i] + eps_) / std::sqrt(eg[i] + eps_) * g[i];
      ex[i] = rho_ * ex[i] + (1.0 - rho_) * dx * dx;
      values[i] = static_cast<float>(values[i] + lr_ * dx);
    }
  }
}

}  // namespace gesture
