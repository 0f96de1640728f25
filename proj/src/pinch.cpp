#include "gesture/pinch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gesture/error.hpp"

namespace gesture {

std::string_view to_string(ZoomAction a) {
  switch (a) {
    case ZoomAction::ZoomIn: return "ZoomIn";
    case ZoomAction::ZoomOut: return "ZoomOut";
    case ZoomAction::NoZoom: return "NoZoom";
  }
  return "NoZoom";
}

ZoomAction parse_zoom_action(std::string_view s) {
  if (s == "ZoomIn") return ZoomAction::ZoomIn;
  if (s == "ZoomOut") return ZoomAction::ZoomOut;
  if (s == "NoZoom") return ZoomAction::NoZoom;
  throw DataError("unknown zoom action '" + std::string(s) + "'");
}

FrameBuffer::FrameBuffer(std::size_t d) : d_(d) {
  if (d == 0) throw ParameterError("d must be >= 1");
}

std::pair<ActivationStack, ActivationStack> FrameBuffer::push(const ActivationStack& current) {
  ActivationStack past = held_.empty() ? current : held_.front();
  held_.push_back(current);
  if (held_.size() > d_) held_.pop_front();
  return {current, std::move(past)};
}

PinchHeadWeights PinchHeadWeights::zeros(const PinchConfig& config) {
  if (config.channels == 0 || config.conv_filters == 0 || config.fc_units == 0) {
    throw ParameterError("pinch head dimensions must be positive");
  }
  if (config.height < 2 || config.width < 2) throw ParameterError("pinch head input must be at least 2x2");
  PinchHeadWeights w;
  w.config = config;
  const std::size_t c = config.conv_filters;
  w.conv = Tensor({c, 2 * config.channels, 3, 3});
  w.bn_gamma = Tensor({c}, 1.0f);
  w.bn_beta = Tensor({c});
  w.bn_mean = Tensor({c});
  w.bn_var = Tensor({c}, 1.0f);
  w.fc1_w = Tensor({config.fc_units, w.flat_size()});
  w.fc1_b = Tensor({config.fc_units});
  w.fc2_w = Tensor({kZoomClasses, config.fc_units});
  w.fc2_b = Tensor({kZoomClasses});
  return w;
}

ZoomAction zoom_argmax(std::span<const double> probs) {
  const auto nz = static_cast<std::size_t>(ZoomAction::NoZoom);
  const double best = *std::max_element(probs.begin(), probs.end());
  if (probs[nz] >= best) return ZoomAction::NoZoom;
  return probs[0] >= probs[1] ? ZoomAction::ZoomIn : ZoomAction::ZoomOut;
}

namespace {

std::vector<double> concat_input(const PinchConfig& cfg, const Tensor& current, const Tensor& past) {
  const std::vector<std::size_t> want{cfg.channels, cfg.height, cfg.width};
  if (current.dims() != want || past.dims() != want) throw ParameterError("pinch head: input shape mismatch");
  std::vector<double> x(2 * current.size());
  std::copy(current.data().begin(), current.data().end(), x.begin());
  std::copy(past.data().begin(), past.data().end(), x.begin() + static_cast<std::ptrdiff_t>(current.size()));
  return x;
}

// 3x3, stride 1, zero padding 1.
std::vector<double> conv_same(const std::vector<double>& x, std::size_t cin, std::size_t h, std::size_t w,
                              const Tensor& weights) {
  const std::size_t cout = weights.dim(0);
  const std::size_t plane = h * w;
  std::vector<double> z(cout * plane, 0.0);
  const float* wts = weights.data().data();
  for (std::size_t o = 0; o < cout; ++o) {
    double* zp = z.data() + o * plane;
    for (std::size_t c = 0; c < cin; ++c) {
      const double* xp = x.data() + c * plane;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = wts[((o * cin + c) * 3 + ky) * 3 + kx];
          if (wv == 0.0) continue;
          const int dy = ky - 1;
          const int dx = kx - 1;
          const std::size_t x_lo = dx < 0 ? 1 : 0;
          const std::size_t x_hi = dx > 0 ? w - 1 : w;
          for (std::size_t y = 0; y < h; ++y) {
            const long iy = static_cast<long>(y) + dy;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            const double* xr = xp + static_cast<std::size_t>(iy) * w;
            double* zr = zp + y * w;
            for (std::size_t xx = x_lo; xx < x_hi; ++xx) zr[xx] += wv * xr[xx + dx];
          }
        }
      }
    }
  }
  return z;
}

void conv_same_weight_grad(const std::vector<double>& x, std::size_t cin, std::size_t h, std::size_t w,
                           const std::vector<double>& dz, std::size_t cout, std::vector<double>& dW) {
  const std::size_t plane = h * w;
  for (std::size_t o = 0; o < cout; ++o) {
    const double* gp = dz.data() + o * plane;
    for (std::size_t c = 0; c < cin; ++c) {
      const double* xp = x.data() + c * plane;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int dy = ky - 1;
          const int dx = kx - 1;
          const std::size_t x_lo = dx < 0 ? 1 : 0;
          const std::size_t x_hi = dx > 0 ? w - 1 : w;
          double acc = 0.0;
          for (std::size_t y = 0; y < h; ++y) {
            const long iy = static_cast<long>(y) + dy;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            const double* xr = xp + static_cast<std::size_t>(iy) * w;
            const double* gr = gp + y * w;
            for (std::size_t xx = x_lo; xx < x_hi; ++xx) acc += gr[xx] * xr[xx + dx];
          }
          dW[((o * cin + c) * 3 + ky) * 3 + kx] += acc;
        }
      }
    }
  }
}

struct Pooled {
  std::vector<double> values;
  std::vector<std::size_t> source;  // flat index of the winning input element
};

Pooled maxpool2(const std::vector<double>& y, std::size_t channels, std::size_t h, std::size_t w) {
  const std::size_t ph = h / 2;
  const std::size_t pw = w / 2;
  Pooled p;
  p.values.resize(channels * ph * pw);
  p.source.resize(p.values.size());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t py = 0; py < ph; ++py) {
      for (std::size_t px = 0; px < pw; ++px) {
        std::size_t best = (c * h + 2 * py) * w + 2 * px;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * h + 2 * py + dy) * w + 2 * px + dx;
            if (y[idx] > y[best]) best = idx;
          }
        }
        const std::size_t out = (c * ph + py) * pw + px;
        p.values[out] = y[best];
        p.source[out] = best;
      }
    }
  }
  return p;
}

struct Tail {
  Pooled pooled;
  nn::Vec hidden;
  nn::Vec probs;
};

Tail run_tail(const PinchHeadWeights& w, const std::vector<double>& y) {
  const auto& cfg = w.config;
  Tail t;
  t.pooled = maxpool2(y, cfg.conv_filters, cfg.height, cfg.width);
  t.hidden = nn::dense(w.fc1_w, w.fc1_b, t.pooled.values);
  nn::relu_inplace(t.hidden);
  t.probs = nn::softmax(nn::dense(w.fc2_w, w.fc2_b, t.hidden));
  return t;
}

std::vector<double> infer_normalised(const PinchHeadWeights& w, const Tensor& current, const Tensor& past) {
  const auto& cfg = w.config;
  const auto x = concat_input(cfg, current, past);
  auto z = conv_same(x, 2 * cfg.channels, cfg.height, cfg.width, w.conv);
  const std::size_t plane = cfg.height * cfg.width;
  for (std::size_t c = 0; c < cfg.conv_filters; ++c) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(w.bn_var[c]) + cfg.bn_epsilon);
    const double g = w.bn_gamma[c];
    const double b = w.bn_beta[c];
    const double m = w.bn_mean[c];
    for (std::size_t k = 0; k < plane; ++k) {
      double& v = z[c * plane + k];
      v = g * (v - m) * inv + b;
    }
  }
  return z;
}

}  // namespace

PinchPrediction pinch_forward(const PinchHeadWeights& weights, const ActivationStack& current,
                              const ActivationStack& past) {
  if (current.maps.dims() != past.maps.dims()) throw ParameterError("pinch head: current and past shapes differ");
  const auto tail = run_tail(weights, infer_normalised(weights, current.maps, past.maps));
  PinchPrediction p;
  std::copy(tail.probs.begin(), tail.probs.end(), p.probabilities.begin());
  p.action = zoom_argmax(tail.probs);
  return p;
}

double Fingertips::distance() const { return std::hypot(index_x - thumb_x, index_y - thumb_y); }

ZoomAction baseline_from_distances(double past, double current, double threshold) {
  const double delta = current - past;
  if (delta > threshold) return ZoomAction::ZoomIn;
  if (delta < -threshold) return ZoomAction::ZoomOut;
  return ZoomAction::NoZoom;
}

ZoomAction pinch_baseline(std::span<const Fingertips> history, std::size_t d, double threshold) {
  if (d == 0) throw ParameterError("d must be >= 1");
  if (history.size() < d + 1) return ZoomAction::NoZoom;
  const auto& now = history.back();
  const auto& then = history[history.size() - 1 - d];
  return baseline_from_distances(then.distance(), now.distance(), threshold);
}

WeightBundle to_bundle(const PinchHeadWeights& w) {
  WeightBundle b;
  b.kind = "pinch";
  const auto& c = w.config;
  b.meta["channels"] = std::to_string(c.channels);
  b.meta["height"] = std::to_string(c.height);
  b.meta["width"] = std::to_string(c.width);
  b.meta["conv_filters"] = std::to_string(c.conv_filters);
  b.meta["fc_units"] = std::to_string(c.fc_units);
  b.meta["bn_epsilon"] = std::to_string(c.bn_epsilon);
  b.tensors["conv"] = w.conv;
  b.tensors["bn_gamma"] = w.bn_gamma;
  b.tensors["bn_beta"] = w.bn_beta;
  b.tensors["bn_mean"] = w.bn_mean;
  b.tensors["bn_var"] = w.bn_var;
  b.tensors["fc1_w"] = w.fc1_w;
  b.tensors["fc1_b"] = w.fc1_b;
  b.tensors["fc2_w"] = w.fc2_w;
  b.tensors["fc2_b"] = w.fc2_b;
  return b;
}

PinchHeadWeights pinch_from_bundle(const WeightBundle& b) {
  if (b.kind != "pinch") throw DataError("expected a pinch bundle, got '" + b.kind + "'");
  PinchConfig c;
  try {
    c.channels = std::stoul(b.meta_value("channels"));
    c.height = std::stoul(b.meta_value("height"));
    c.width = std::stoul(b.meta_value("width"));
    c.conv_filters = std::stoul(b.meta_value("conv_filters"));
    c.fc_units = std::stoul(b.meta_value("fc_units"));
    c.bn_epsilon = std::stod(b.meta_value("bn_epsilon"));
  } catch (const std::logic_error&) {
    throw DataError("pinch bundle: malformed metadata");
  }
  auto w = PinchHeadWeights::zeros(c);
  for (auto [name, t] : {std::pair{"conv", &w.conv}, {"bn_gamma", &w.bn_gamma}, {"bn_beta", &w.bn_beta},
                         {"bn_mean", &w.bn_mean}, {"bn_var", &w.bn_var}, {"fc1_w", &w.fc1_w},
                         {"fc1_b", &w.fc1_b}, {"fc2_w", &w.fc2_w}, {"fc2_b", &w.fc2_b}}) {
    const Tensor& src = b.tensor(name);
    if (src.dims() != t->dims()) throw DataError(std::string("pinch bundle: tensor '") + name + "' has wrong dims");
    *t = src;
  }
  for (float v : w.bn_var.data()) {
    if (v < 0.0f) throw DataError("pinch bundle: negative batch-norm variance");
  }
  return w;
}

double PinchModel::run_batch(std::span<const Sample> batch, nn::Gradients* grads, std::vector<double>* mean_out,
                             std::vector<double>* var_out) const {
  const auto& cfg = w_.config;
  const std::size_t n = batch.size();
  const std::size_t cin = 2 * cfg.channels;
  const std::size_t plane = cfg.height * cfg.width;
  const std::size_t cc = cfg.conv_filters;
  const double m = static_cast<double>(n * plane);

  std::vector<std::vector<double>> inputs(n);
  std::vector<std::vector<double>> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    inputs[i] = concat_input(cfg, batch[i].current, batch[i].past);
    z[i] = conv_same(inputs[i], cin, cfg.height, cfg.width, w_.conv);
  }
  std::vector<double> mean(cc, 0.0);
  std::vector<double> var(cc, 0.0);
  for (std::size_t c = 0; c < cc; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < plane; ++k) s += z[i][c * plane + k];
    }
    mean[c] = s / m;
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < plane; ++k) {
        const double d = z[i][c * plane + k] - mean[c];
        q += d * d;
      }
    }
    var[c] = q / m;
  }
  std::vector<double> inv_std(cc);
  for (std::size_t c = 0; c < cc; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + cfg.bn_epsilon);

  // z becomes xhat in place; y holds the affine output.
  std::vector<std::vector<double>> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i].resize(cc * plane);
    for (std::size_t c = 0; c < cc; ++c) {
      for (std::size_t k = 0; k < plane; ++k) {
        double& v = z[i][c * plane + k];
        v = (v - mean[c]) * inv_std[c];
        y[i][c * plane + k] = w_.bn_gamma[c] * v + w_.bn_beta[c];
      }
    }
  }

  double total = 0.0;
  std::vector<std::vector<double>> dxhat;
  if (grads) dxhat.assign(n, std::vector<double>(cc * plane, 0.0));
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto tail = run_tail(w_, y[i]);
    total += nn::cross_entropy(tail.probs, batch[i].label);
    if (!grads) continue;
    auto& g = *grads;
    nn::Vec dlogits = tail.probs;
    dlogits[batch[i].label] -= 1.0;
    for (auto& v : dlogits) v *= scale;
    nn::Vec dh(cfg.fc_units);
    nn::dense_backward(w_.fc2_w, tail.hidden, dlogits, g[5], g[6], dh);
    nn::relu_backward(tail.hidden, dh);
    nn::Vec dp(tail.pooled.values.size());
    nn::dense_backward(w_.fc1_w, tail.pooled.values, dh, g[3], g[4], dp);
    for (std::size_t k = 0; k < dp.size(); ++k) {
      const std::size_t src = tail.pooled.source[k];
      const std::size_t c = src / plane;
      g[1][c] += dp[k] * z[i][src];
      g[2][c] += dp[k];
      dxhat[i][src] += dp[k] * w_.bn_gamma[c];
    }
  }

  if (grads) {
    std::vector<double> s1(cc, 0.0);
    std::vector<double> s2(cc, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < cc; ++c) {
        for (std::size_t k = 0; k < plane; ++k) {
          s1[c] += dxhat[i][c * plane + k];
          s2[c] += dxhat[i][c * plane + k] * z[i][c * plane + k];
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto& dz = dxhat[i];
      for (std::size_t c = 0; c < cc; ++c) {
        for (std::size_t k = 0; k < plane; ++k) {
          const std::size_t idx = c * plane + k;
          dz[idx] = inv_std[c] / m * (m * dz[idx] - s1[c] - z[i][idx] * s2[c]);
        }
      }
      conv_same_weight_grad(inputs[i], cin, cfg.height, cfg.width, dz, cc, (*grads)[0]);
    }
  }
  if (mean_out) *mean_out = std::move(mean);
  if (var_out) *var_out = std::move(var);
  return total * scale;
}

double PinchModel::accumulate(std::span<const Sample> batch, nn::Gradients& grads) {
  if (batch.empty()) return 0.0;
  std::vector<double> mean;
  std::vector<double> var;
  const double l = run_batch(batch, &grads, &mean, &var);
  const double mom = w_.config.bn_momentum;
  for (std::size_t c = 0; c < mean.size(); ++c) {
    w_.bn_mean[c] = static_cast<float>(mom * w_.bn_mean[c] + (1.0 - mom) * mean[c]);
    w_.bn_var[c] = static_cast<float>(mom * w_.bn_var[c] + (1.0 - mom) * var[c]);
  }
  return l;
}

double PinchModel::batch_loss(std::span<const Sample> batch) const {
  if (batch.empty()) return 0.0;
  return run_batch(batch, nullptr, nullptr, nullptr);
}

double PinchModel::loss(std::span<const Sample> batch) const {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : batch) {
    total += nn::cross_entropy(run_tail(w_, infer_normalised(w_, s.current, s.past)).probs, s.label);
  }
  return total / static_cast<double>(batch.size());
}

std::size_t PinchModel::predict(const Sample& s) const {
  return static_cast<std::size_t>(zoom_argmax(run_tail(w_, infer_normalised(w_, s.current, s.past)).probs));
}

}  // namespace gesture
