#include "gesture/caption.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "gesture/error.hpp"

namespace gesture {

std::vector<std::string> tokenize(const std::string& text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      cleaned.push_back(static_cast<char>(std::tolower(ch)));
    } else if (std::isspace(ch)) {
      cleaned.push_back(' ');
    }
  }
  std::istringstream in(cleaned);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "startseq", "endseq", "<unk>"}) add(t);
}

std::size_t Vocabulary::add(const std::string& token) {
  auto it = lookup_.find(token);
  if (it != lookup_.end()) return it->second;
  tokens_.push_back(token);
  lookup_.emplace(token, tokens_.size() - 1);
  return tokens_.size() - 1;
}

Vocabulary Vocabulary::build(std::span<const std::string> captions) {
  std::set<std::string> seen;
  for (const auto& c : captions) {
    for (auto& t : tokenize(c)) seen.insert(std::move(t));
  }
  Vocabulary v;
  for (const auto& t : seen) v.add(t);
  return v;
}

std::size_t Vocabulary::index(const std::string& token) const {
  auto it = lookup_.find(token);
  return it == lookup_.end() ? kUnknown : it->second;
}

const std::string& Vocabulary::token(std::size_t index) const {
  if (index >= tokens_.size()) throw ParameterError("token index out of range");
  return tokens_[index];
}

std::vector<std::size_t> Vocabulary::encode(const std::string& caption) const {
  std::vector<std::size_t> out{kStart};
  for (const auto& t : tokenize(caption)) out.push_back(index(t));
  out.push_back(kEnd);
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = kReserved; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw DataError(path.string() + ": empty token line");
    if (v.contains(line)) throw DataError(path.string() + ": duplicate token '" + line + "'");
    v.add(line);
  }
  return v;
}

CaptionWeights CaptionWeights::zeros(const CaptionConfig& c) {
  if (c.feature_dim == 0 || c.vocab_size < Vocabulary::kReserved || c.units == 0 || c.emb_dim == 0) {
    throw ParameterError("caption head dimensions must be positive");
  }
  CaptionWeights w;
  w.config = c;
  w.img_w = Tensor({c.units, c.feature_dim});
  w.img_b = Tensor({c.units});
  w.embedding = Tensor({c.vocab_size, c.emb_dim});
  w.lstm_w = Tensor({4 * c.units, c.emb_dim + c.units});
  w.lstm_b = Tensor({4 * c.units});
  w.fc1_w = Tensor({c.units, c.units});
  w.fc1_b = Tensor({c.units});
  w.fc2_w = Tensor({c.units, c.units});
  w.fc2_b = Tensor({c.units});
  w.out_w = Tensor({c.vocab_size, c.units});
  w.out_b = Tensor({c.vocab_size});
  return w;
}

void CaptionWeights::set_forget_bias(float value) {
  const std::size_t u = config.units;
  for (std::size_t k = u; k < 2 * u; ++k) lstm_b[k] = value;
}

LstmState lstm_step(const Tensor& W, const Tensor& b, std::span<const double> x, const LstmState& prev,
                    LstmGates* gates) {
  const std::size_t u = prev.h.size();
  if (W.dim(0) != 4 * u || W.dim(1) != x.size() + u) throw ParameterError("lstm: dimension mismatch");
  nn::Vec xh(x.begin(), x.end());
  xh.insert(xh.end(), prev.h.begin(), prev.h.end());
  const auto z = nn::dense(W, b, xh);
  LstmGates g;
  g.i.resize(u);
  g.f.resize(u);
  g.o.resize(u);
  g.g.resize(u);
  LstmState next{nn::Vec(u), nn::Vec(u)};
  for (std::size_t k = 0; k < u; ++k) {
    g.i[k] = nn::sigmoid(z[k]);
    g.f[k] = nn::sigmoid(z[u + k]);
    g.o[k] = nn::sigmoid(z[2 * u + k]);
    g.g[k] = std::tanh(z[3 * u + k]);
    next.c[k] = g.f[k] * prev.c[k] + g.i[k] * g.g[k];
    next.h[k] = g.o[k] * std::tanh(next.c[k]);
  }
  if (gates) *gates = std::move(g);
  return next;
}

namespace {

std::span<const float> embedding_row(const CaptionWeights& w, std::size_t token) {
  if (token >= w.config.vocab_size) throw ParameterError("token index outside the caption vocabulary");
  return w.embedding.data().subspan(token * w.config.emb_dim, w.config.emb_dim);
}

nn::Vec image_branch(const CaptionWeights& w, std::span<const double> features) {
  if (features.size() != w.config.feature_dim) throw ParameterError("caption head: feature dimension mismatch");
  auto a = nn::dense(w.img_w, w.img_b, features);
  nn::relu_inplace(a);
  return a;
}

struct MergeOut {
  nn::Vec u1;
  nn::Vec u2;
  nn::Vec probs;
};

MergeOut merge(const CaptionWeights& w, const nn::Vec& image, const nn::Vec& h) {
  nn::Vec m(image.size());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = image[k] + h[k];
  MergeOut out;
  out.u1 = nn::dense(w.fc1_w, w.fc1_b, m);
  nn::relu_inplace(out.u1);
  out.u2 = nn::dense(w.fc2_w, w.fc2_b, out.u1);
  nn::relu_inplace(out.u2);
  out.probs = nn::softmax(nn::dense(w.out_w, w.out_b, out.u2));
  return out;
}

LstmState initial_state(const CaptionWeights& w) {
  return {nn::Vec(w.config.units, 0.0), nn::Vec(w.config.units, 0.0)};
}

LstmState advance(const CaptionWeights& w, const LstmState& s, std::size_t token, LstmGates* gates = nullptr) {
  const auto row = nn::to_vec(embedding_row(w, token));
  return lstm_step(w.lstm_w, w.lstm_b, row, s, gates);
}

}  // namespace

nn::Vec caption_step(const CaptionWeights& weights, const FeatureVector& features,
                     std::span<const std::size_t> prefix) {
  if (prefix.empty()) throw ParameterError("caption prefix is empty");
  const auto image = image_branch(weights, nn::to_vec(features.values.data()));
  auto state = initial_state(weights);
  for (auto t : prefix) state = advance(weights, state, t);
  return merge(weights, image, state.h).probs;
}

Caption decode(const CaptionWeights& weights, const Vocabulary& vocab, const FeatureVector& features,
               std::size_t max_len) {
  if (max_len == 0) throw ParameterError("max_len must be >= 1");
  if (vocab.size() != weights.config.vocab_size) throw ParameterError("vocabulary size does not match the caption head");
  const auto image = image_branch(weights, nn::to_vec(features.values.data()));
  auto state = advance(weights, initial_state(weights), Vocabulary::kStart);
  Caption cap;
  // Stray startseq/pad predictions are fed back but not emitted; they still
  // count towards max_len.
  for (std::size_t step = 0; step < max_len; ++step) {
    const std::size_t next = nn::argmax(merge(weights, image, state.h).probs);
    if (next == Vocabulary::kEnd) break;
    if (next != Vocabulary::kStart && next != Vocabulary::kPad) cap.tokens.push_back(vocab.token(next));
    state = advance(weights, state, next);
  }
  for (std::size_t i = 0; i < cap.tokens.size(); ++i) cap.text += (i ? " " : "") + cap.tokens[i];
  return cap;
}

std::string postprocess(const std::string& text) {
  static const std::regex pointing(R"(^\s*(a|the)\s+(hand|finger)s?\s+((is|are)\s+)?pointing\s+(to|at)\s+)",
                                   std::regex::icase);
  static const std::regex conj(R"(^\s*(a|the)\s+(hand|finger)s?\s+and\s+)", std::regex::icase);
  std::string s = text;
  for (;;) {
    std::string next = std::regex_replace(s, pointing, "", std::regex_constants::format_first_only);
    next = std::regex_replace(next, conj, "", std::regex_constants::format_first_only);
    if (next == s) break;
    s = std::move(next);
  }
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

WeightBundle to_bundle(const CaptionWeights& w) {
  WeightBundle b;
  b.kind = "caption";
  b.meta["feature_dim"] = std::to_string(w.config.feature_dim);
  b.meta["vocab_size"] = std::to_string(w.config.vocab_size);
  b.meta["units"] = std::to_string(w.config.units);
  b.meta["emb_dim"] = std::to_string(w.config.emb_dim);
  b.tensors = {{"img_w", w.img_w}, {"img_b", w.img_b}, {"embedding", w.embedding}, {"lstm_w", w.lstm_w},
               {"lstm_b", w.lstm_b}, {"fc1_w", w.fc1_w}, {"fc1_b", w.fc1_b}, {"fc2_w", w.fc2_w},
               {"fc2_b", w.fc2_b}, {"out_w", w.out_w}, {"out_b", w.out_b}};
  return b;
}

CaptionWeights caption_from_bundle(const WeightBundle& b) {
  if (b.kind != "caption") throw DataError("expected a caption bundle, got '" + b.kind + "'");
  CaptionConfig c;
  try {
    c.feature_dim = std::stoul(b.meta_value("feature_dim"));
    c.vocab_size = std::stoul(b.meta_value("vocab_size"));
    c.units = std::stoul(b.meta_value("units"));
    c.emb_dim = std::stoul(b.meta_value("emb_dim"));
  } catch (const std::logic_error&) {
    throw DataError("caption bundle: malformed metadata");
  }
  auto w = CaptionWeights::zeros(c);
  for (auto [name, t] : {std::pair{"img_w", &w.img_w}, {"img_b", &w.img_b}, {"embedding", &w.embedding},
                         {"lstm_w", &w.lstm_w}, {"lstm_b", &w.lstm_b}, {"fc1_w", &w.fc1_w},
                         {"fc1_b", &w.fc1_b}, {"fc2_w", &w.fc2_w}, {"fc2_b", &w.fc2_b},
                         {"out_w", &w.out_w}, {"out_b", &w.out_b}}) {
    const Tensor& src = b.tensor(name);
    if (src.dims() != t->dims()) throw DataError(std::string("caption bundle: tensor '") + name + "' has wrong dims");
    *t = src;
  }
  return w;
}

void save_caption_model(const CaptionWeights& weights, const Vocabulary& vocab, const std::filesystem::path& dir) {
  if (vocab.size() != weights.config.vocab_size) throw ParameterError("vocabulary size does not match the caption head");
  save_bundle(to_bundle(weights), dir);
  vocab.save(dir / "vocab.txt");
}

std::pair<CaptionWeights, Vocabulary> load_caption_model(const std::filesystem::path& dir) {
  auto w = caption_from_bundle(load_bundle(dir));
  auto v = Vocabulary::load(dir / "vocab.txt");
  if (v.size() != w.config.vocab_size) throw DataError(dir.string() + ": vocabulary size does not match weights");
  return {std::move(w), std::move(v)};
}

double CaptionModel::sample_loss(const Sample& s, nn::Gradients* grads, double scale) const {
  if (s.tokens.size() < 2) throw DataError("caption sample needs at least startseq and endseq");
  const auto& c = w_.config;
  const std::size_t u = c.units;
  const std::size_t steps = s.tokens.size() - 1;
  const auto image = image_branch(w_, s.features);

  std::vector<LstmState> states{initial_state(w_)};
  std::vector<LstmGates> gates(steps);
  std::vector<nn::Vec> inputs(steps);
  std::vector<MergeOut> outs(steps);
  double total = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    inputs[t] = nn::to_vec(embedding_row(w_, s.tokens[t]));
    states.push_back(lstm_step(w_.lstm_w, w_.lstm_b, inputs[t], states.back(), &gates[t]));
    outs[t] = merge(w_, image, states.back().h);
    total += nn::cross_entropy(outs[t].probs, s.tokens[t + 1]);
  }
  const double per_pos = 1.0 / static_cast<double>(steps);
  if (!grads) return total * per_pos;

  auto& g = *grads;
  const double k = scale * per_pos;
  nn::Vec dimage(u, 0.0);
  std::vector<nn::Vec> dh_out(steps, nn::Vec(u));
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& o = outs[t];
    nn::Vec dlogits = o.probs;
    dlogits[s.tokens[t + 1]] -= 1.0;
    for (auto& v : dlogits) v *= k;
    nn::Vec du2(u);
    nn::dense_backward(w_.out_w, o.u2, dlogits, g[9], g[10], du2);
    nn::relu_backward(o.u2, du2);
    nn::Vec du1(u);
    nn::dense_backward(w_.fc2_w, o.u1, du2, g[7], g[8], du1);
    nn::relu_backward(o.u1, du1);
    nn::Vec m(u);
    for (std::size_t j = 0; j < u; ++j) m[j] = image[j] + states[t + 1].h[j];
    nn::Vec dm(u);
    nn::dense_backward(w_.fc1_w, m, du1, g[5], g[6], dm);
    for (std::size_t j = 0; j < u; ++j) {
      dimage[j] += dm[j];
      dh_out[t][j] = dm[j];
    }
  }

  nn::Vec dh_next(u, 0.0);
  nn::Vec dc_next(u, 0.0);
  nn::Vec dz(4 * u);
  nn::Vec dxh(c.emb_dim + u);
  for (std::size_t t = steps; t-- > 0;) {
    const auto& gt = gates[t];
    const auto& prev = states[t];
    const auto& cur = states[t + 1];
    for (std::size_t j = 0; j < u; ++j) {
      const double dh = dh_out[t][j] + dh_next[j];
      const double tc = std::tanh(cur.c[j]);
      const double d_o = dh * tc;
      const double dc = dc_next[j] + dh * gt.o[j] * (1.0 - tc * tc);
      const double di = dc * gt.g[j];
      const double dg = dc * gt.i[j];
      const double df = dc * prev.c[j];
      dc_next[j] = dc * gt.f[j];
      dz[j] = di * gt.i[j] * (1.0 - gt.i[j]);
      dz[u + j] = df * gt.f[j] * (1.0 - gt.f[j]);
      dz[2 * u + j] = d_o * gt.o[j] * (1.0 - gt.o[j]);
      dz[3 * u + j] = dg * (1.0 - gt.g[j] * gt.g[j]);
    }
    nn::Vec xh = inputs[t];
    xh.insert(xh.end(), prev.h.begin(), prev.h.end());
    nn::dense_backward(w_.lstm_w, xh, dz, g[3], g[4], dxh);
    double* erow = g[2].data() + s.tokens[t] * c.emb_dim;
    for (std::size_t j = 0; j < c.emb_dim; ++j) erow[j] += dxh[j];
    for (std::size_t j = 0; j < u; ++j) dh_next[j] = dxh[c.emb_dim + j];
  }

  nn::relu_backward(image, dimage);
  nn::dense_backward(w_.img_w, s.features, dimage, g[0], g[1], {});
  return total * per_pos;
}

double CaptionModel::accumulate(std::span<const Sample> batch, nn::Gradients& grads) {
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& s : batch) total += sample_loss(s, &grads, scale);
  return total * scale;
}

double CaptionModel::loss(std::span<const Sample> batch) const {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : batch) total += sample_loss(s, nullptr, 1.0);
  return total / static_cast<double>(batch.size());
}

bool CaptionModel::correct(const Sample& s) const { return s.tokens.size() > 1 && predict(s) == s.tokens[1]; }

std::size_t CaptionModel::predict(const Sample& s) const {
  const auto image = image_branch(w_, s.features);
  const auto state = advance(w_, initial_state(w_), Vocabulary::kStart);
  return nn::argmax(merge(w_, image, state.h).probs);
}

}  // namespace gesture
