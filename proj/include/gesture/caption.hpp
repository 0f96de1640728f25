#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gesture/atn.hpp"
#include "gesture/backbone.hpp"
#include "gesture/layers.hpp"

namespace gesture {

// Lowercase, drop punctuation, split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kStart = 1;
  static constexpr std::size_t kEnd = 2;
  static constexpr std::size_t kUnknown = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();
  // Every token of the corpus (min frequency 1), sorted.
  static Vocabulary build(std::span<const std::string> captions);

  std::size_t add(const std::string& token);
  std::size_t size() const { return tokens_.size(); }
  std::size_t index(const std::string& token) const;  // kUnknown when absent
  const std::string& token(std::size_t index) const;
  bool contains(const std::string& token) const { return lookup_.count(token) != 0; }

  // startseq, tokens..., endseq
  std::vector<std::size_t> encode(const std::string& caption) const;

  // One non-reserved token per line; line i holds index i + kReserved.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

struct CaptionConfig {
  std::size_t feature_dim = 0;
  std::size_t vocab_size = 0;
  std::size_t units = 256;
  std::size_t emb_dim = 256;
};

struct CaptionWeights {
  CaptionConfig config;
  Tensor img_w;  // (units, feature_dim)
  Tensor img_b;
  Tensor embedding;  // (vocab, emb_dim)
  Tensor lstm_w;     // (4 units, emb_dim + units), gate blocks i, f, o, g
  Tensor lstm_b;
  Tensor fc1_w;  // (units, units)
  Tensor fc1_b;
  Tensor fc2_w;
  Tensor fc2_b;
  Tensor out_w;  // (vocab, units)
  Tensor out_b;

  static CaptionWeights zeros(const CaptionConfig& config);
  // Uniform(-limit, limit) everywhere except a forget-gate bias of 1.
  template <class Rng>
  static CaptionWeights random(const CaptionConfig& config, double limit, Rng& rng) {
    auto w = zeros(config);
    for (Tensor* t : {&w.img_w, &w.img_b, &w.embedding, &w.lstm_w, &w.lstm_b, &w.fc1_w, &w.fc1_b, &w.fc2_w,
                      &w.fc2_b, &w.out_w, &w.out_b}) {
      nn::uniform_fill(*t, limit, rng);
    }
    w.set_forget_bias(1.0f);
    return w;
  }
  void set_forget_bias(float value);
};

struct LstmState {
  nn::Vec h;
  nn::Vec c;
};

struct LstmGates {
  nn::Vec i, f, o, g;
};

// One LSTM step: gates = W [x; h] + b.
LstmState lstm_step(const Tensor& W, const Tensor& b, std::span<const double> x, const LstmState& prev,
                    LstmGates* gates = nullptr);

// Distribution over the vocabulary for the next token after `prefix`.
nn::Vec caption_step(const CaptionWeights& weights, const FeatureVector& features,
                     std::span<const std::size_t> prefix);

struct Caption {
  std::vector<std::string> tokens;
  std::string text;
};

// Greedy decoding from startseq until endseq or max_len tokens.
Caption decode(const CaptionWeights& weights, const Vocabulary& vocab, const FeatureVector& features,
               std::size_t max_len);

// Strips leading hand/finger mentions until nothing changes, then capitalises.
std::string postprocess(const std::string& text);

WeightBundle to_bundle(const CaptionWeights& weights);
CaptionWeights caption_from_bundle(const WeightBundle& bundle);

// Bundle plus vocab.txt in one directory.
void save_caption_model(const CaptionWeights& weights, const Vocabulary& vocab, const std::filesystem::path& dir);
std::pair<CaptionWeights, Vocabulary> load_caption_model(const std::filesystem::path& dir);

struct CaptionSample {
  std::vector<double> features;
  std::vector<std::size_t> tokens;  // startseq ... endseq
};

// Teacher-forced cross-entropy, averaged over the positions of each caption and
// then over the batch.
class CaptionModel {
 public:
  using Sample = CaptionSample;

  explicit CaptionModel(CaptionWeights weights) : w_(std::move(weights)) {}

  std::vector<Tensor*> parameters() {
    return {&w_.img_w, &w_.img_b, &w_.embedding, &w_.lstm_w, &w_.lstm_b, &w_.fc1_w,
            &w_.fc1_b, &w_.fc2_w, &w_.fc2_b,     &w_.out_w,  &w_.out_b};
  }
  std::vector<const Tensor*> parameters() const {
    return {&w_.img_w, &w_.img_b, &w_.embedding, &w_.lstm_w, &w_.lstm_b, &w_.fc1_w,
            &w_.fc1_b, &w_.fc2_w, &w_.fc2_b,     &w_.out_w,  &w_.out_b};
  }

  double accumulate(std::span<const Sample> batch, nn::Gradients& grads);
  double loss(std::span<const Sample> batch) const;
  // First predicted word after startseq.
  std::size_t predict(const Sample& s) const;
  bool correct(const Sample& s) const;

  const CaptionWeights& weights() const { return w_; }

 private:
  double sample_loss(const Sample& s, nn::Gradients* grads, double scale) const;

  CaptionWeights w_;
};

}  // namespace gesture
