#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gesture/atn.hpp"
#include "gesture/caption.hpp"
#include "gesture/classifier.hpp"
#include "gesture/config.hpp"
#include "gesture/dataset.hpp"
#include "gesture/engine.hpp"
#include "gesture/error.hpp"
#include "gesture/filter_selection.hpp"
#include "gesture/metrics.hpp"
#include "gesture/reference.hpp"
#include "gesture/trainer.hpp"
#include "gesture/workflows.hpp"

namespace fs = std::filesystem;
using namespace gesture;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

Settings settings_from(const std::string& config) {
  return config.empty() ? Settings{} : load_settings(config);
}

// Without an explicit backbone extent in the config the frames decide it.
void fit_backbone(Settings& s, const std::string& config, int width, int height) {
  if (!config.empty()) {
    const auto text = slurp(config);
    if (text.find("backbone.width") != std::string::npos) return;
  }
  s.backbone.width = width;
  s.backbone.height = height;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << v;
  return out.str();
}

// ---- gen-data ---------------------------------------------------------------

struct GenArgs {
  std::string out;
  std::size_t scenes = 60;
  std::size_t sequences = 0;
  int frames = 10;
  std::size_t d = 5;
  int width = 224;
  int height = 224;
  std::string format = "ppm";
  std::uint64_t seed = 0;
};

void run_gen(const GenArgs& a) {
  GenerateOptions opt;
  opt.scenes = a.scenes;
  opt.pinch_sequences = a.sequences;
  opt.pinch_frames = a.frames;
  opt.d = a.d;
  opt.scene.width = a.width;
  opt.scene.height = a.height;
  opt.format = "." + a.format;
  opt.seed = a.seed;
  const auto records = generate_dataset(a.out, opt);
  std::cout << records.size() << " records written to " << (fs::path(a.out) / "manifest.jsonl").string() << '\n';
}

// ---- select-filters / localize ---------------------------------------------

struct SelectArgs {
  std::string manifest, cls, layer, out, config;
  std::optional<std::size_t> top_n;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<int> kernel;
  std::optional<long long> min_area;
};

FSParams fs_params(const Settings& s, const SelectArgs& a) {
  FSParams p = s.fs;
  if (!a.layer.empty()) p.layer = a.layer;
  if (a.top_n) {
    p.top_n = a.top_n;
    p.alpha.reset();
  }
  if (a.alpha) {
    p.alpha = a.alpha;
    p.top_n.reset();
  }
  if (a.beta) p.beta = *a.beta;
  if (a.kernel) p.kernel = *a.kernel;
  if (a.min_area) p.min_area = *a.min_area;
  p.validate();
  return p;
}

void run_select(const SelectArgs& a) {
  if (a.top_n && a.alpha) throw ParameterError("--top-n and --alpha are mutually exclusive");
  Settings s = settings_from(a.config);
  const auto params = fs_params(s, a);
  const auto records = read_manifest(a.manifest);
  std::vector<SampleRecord> chosen;
  for (const auto& r : records) {
    if (r.gesture == a.cls && !r.fingertip_boxes.empty()) chosen.push_back(r);
  }
  if (chosen.empty()) throw DataError("no records of class " + a.cls + " with fingertip boxes");
  fit_backbone(s, a.config, chosen.front().width, chosen.front().height);
  const auto backbone = make_backbone(s);
  const auto images = fingertip_frames(load_samples(chosen), a.cls);
  const auto fset = select_filters(*backbone, images, params, a.cls);
  save_filter_set(fset, a.out);
  std::cout << format_filter_set(fset);
}

struct LocalizeArgs {
  std::string fset, frame, config;
};

void run_localize(const LocalizeArgs& a) {
  Settings s = settings_from(a.config);
  const auto fset = load_filter_set(a.fset);
  const auto frame = load_frame(a.frame);
  fit_backbone(s, a.config, static_cast<int>(frame.dim(1)), static_cast<int>(frame.dim(0)));
  const auto backbone = make_backbone(s);
  FSParams p;
  p.beta = fset.beta;
  p.kernel = fset.kernel;
  p.min_area = fset.min_area;
  const auto loc = localize(*backbone, frame, fset, p);
  nlohmann::ordered_json j;
  j["class"] = fset.class_name;
  j["boxes"] = nlohmann::ordered_json::array();
  for (const auto& b : loc.boxes) j["boxes"].push_back({b.x0, b.y0, b.x1, b.y1});
  j["confidences"] = loc.confidences;
  std::cout << j.dump() << '\n';
}

// ---- train-head -------------------------------------------------------------

struct TrainArgs {
  std::string head, manifest, synthetic, out, config;
  std::optional<std::size_t> max_epochs, batch_size, patience;
  std::optional<std::uint64_t> seed;
  std::optional<double> learning_rate;
  std::size_t augment_copies = 10;
  std::size_t units = 256;
  std::size_t emb_dim = 256;
  std::size_t conv_filters = 64;
  std::size_t fc_units = 32;
};

struct Splits {
  std::vector<LoadedSample> train, val;
};

Splits load_split(const std::string& manifest, std::uint64_t seed) {
  const auto records = read_manifest(manifest);
  if (records.empty()) throw DataError(manifest + ": no records");
  SplitSpec spec;
  spec.seed = seed;
  const auto parts = split(records, spec);
  return {load_samples(parts.train), load_samples(parts.val)};
}

template <class Model>
void report_training(const fs::path& out, const TwoPhaseReport& r) {
  if (r.synthetic) write_text(out / "report_synthetic.csv", r.synthetic->csv());
  write_text(out / "report.csv", r.real.csv());
  const auto& last = r.real;
  std::cout << "best_epoch " << last.best_epoch << " stopped_epoch " << last.stopped_epoch << " val_loss "
            << fmt(last.best_val_loss) << '\n';
}

void run_train(const TrainArgs& a) {
  Settings s = settings_from(a.config);
  TrainConfig tc = s.train;
  if (a.max_epochs) tc.max_epochs = *a.max_epochs;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  if (a.patience) tc.patience = *a.patience;
  if (a.seed) tc.seed = *a.seed;
  if (a.learning_rate) tc.learning_rate = *a.learning_rate;
  tc.validate();

  const bool two = !a.synthetic.empty();
  Splits real = load_split(a.manifest, tc.seed);
  Splits synth;
  if (two) synth = load_split(a.synthetic, tc.seed);
  if (real.train.empty()) throw DataError("no training records");
  fit_backbone(s, a.config, real.train.front().record.width, real.train.front().record.height);
  const auto backbone = make_backbone(s);
  const auto registry = LabelRegistry::standard();
  AugmentSpec aug;
  aug.copies = tc.augment ? a.augment_copies : 0;
  std::mt19937_64 rng(tc.seed);
  const fs::path out = a.out;
  fs::create_directories(out);

  if (a.head == "classify") {
    auto build = [&](const std::vector<LoadedSample>& v, bool train) {
      return classifier_samples(*backbone, train ? with_augmentation(v, aug, tc.seed) : v, registry);
    };
    const auto rt = build(real.train, true);
    const auto rv = build(real.val, false);
    const auto st = two ? build(synth.train, true) : std::vector<ClassifierSample>{};
    const auto sv = two ? build(synth.val, false) : std::vector<ClassifierSample>{};
    ClassifierModel model(DenseSoftmaxHead::random(registry.size(), rt.front().features.size(), 0.05, rng));
    const auto r = two_phase(model, std::span<const ClassifierSample>(st), sv, rt, rv, tc, !two);
    save_bundle(to_bundle(model.head()), out);
    report_training<ClassifierModel>(out, r);
  } else if (a.head == "pinch") {
    const std::size_t copies = aug.copies;
    auto build = [&](const std::vector<LoadedSample>& v, bool train) {
      return pinch_samples(*backbone, v, s.d, train ? copies : 0, tc.seed);
    };
    const auto rt = build(real.train, true);
    const auto rv = build(real.val, false);
    const auto st = two ? build(synth.train, true) : std::vector<PinchSample>{};
    const auto sv = two ? build(synth.val, false) : std::vector<PinchSample>{};
    if (rt.empty()) throw DataError("no pinch sequences in " + a.manifest);
    PinchConfig pc;
    pc.channels = rt.front().current.dim(0);
    pc.height = rt.front().current.dim(1);
    pc.width = rt.front().current.dim(2);
    pc.conv_filters = a.conv_filters;
    pc.fc_units = a.fc_units;
    PinchModel model(PinchHeadWeights::random(pc, 0.05, rng));
    const auto r = two_phase(model, std::span<const PinchSample>(st), sv, rt, rv, tc, !two);
    save_bundle(to_bundle(model.weights()), out);
    report_training<PinchModel>(out, r);
  } else if (a.head == "caption") {
    std::vector<std::string> corpus;
    for (const auto* part : {&real.train, &synth.train}) {
      for (const auto& smp : *part) corpus.insert(corpus.end(), smp.record.captions.begin(), smp.record.captions.end());
    }
    if (corpus.empty()) throw DataError("no captions in the training records");
    const auto vocab = Vocabulary::build(corpus);
    auto build = [&](const std::vector<LoadedSample>& v, bool train) {
      return caption_samples(*backbone, train ? with_augmentation(v, aug, tc.seed) : v, vocab);
    };
    const auto rt = build(real.train, true);
    const auto rv = build(real.val, false);
    const auto st = two ? build(synth.train, true) : std::vector<CaptionSample>{};
    const auto sv = two ? build(synth.val, false) : std::vector<CaptionSample>{};
    CaptionConfig cc;
    cc.feature_dim = rt.front().features.size();
    cc.vocab_size = vocab.size();
    cc.units = a.units;
    cc.emb_dim = a.emb_dim;
    CaptionModel model(CaptionWeights::random(cc, 0.05, rng));
    const auto r = two_phase(model, std::span<const CaptionSample>(st), sv, rt, rv, tc, !two);
    save_caption_model(model.weights(), vocab, out);
    report_training<CaptionModel>(out, r);
  } else {
    throw ParameterError("--head must be classify, pinch or caption");
  }
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string config, frames, out, timing;
};

void run_simulate(const SimulateArgs& a) {
  if (a.config.empty()) throw ParameterError("--config is required");
  Settings s = load_settings(a.config);
  std::vector<fs::path> files;
  if (!fs::is_directory(a.frames)) throw DataError(a.frames + " is not a directory");
  for (const auto& e : fs::directory_iterator(a.frames)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".ppm" || ext == ".atn")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (!files.empty()) {
    const auto first = load_frame(files.front());
    fit_backbone(s, a.config, static_cast<int>(first.dim(1)), static_cast<int>(first.dim(0)));
  }
  Session session(make_backbone(s), make_session_config(s));
  std::size_t next = 0;
  const auto result = process_stream(session, [&]() -> std::optional<Tensor> {
    if (next >= files.size()) return std::nullopt;
    return load_frame(files[next++]);
  });
  std::ostringstream lines;
  for (const auto& p : result.predictions) lines << to_json(p, session.config().registry) << '\n';
  write_text(a.out, lines.str());
  const std::string timing = result.timing.to_json() + '\n';
  if (!a.timing.empty()) {
    write_text(a.timing, timing);
  } else {
    std::cerr << timing;
  }
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string task, pred, truth;
  double lambda = 0.5;
  std::string cls;
};

bool is_manifest(const std::string& path) { return fs::path(path).extension() == ".jsonl"; }

std::vector<std::vector<std::string>> csv_rows(const std::string& path, std::size_t min_width) {
  auto rows = parse_csv(slurp(path));
  if (rows.empty()) throw DataError(path + ": empty csv");
  rows.erase(rows.begin());  // header
  for (const auto& r : rows) {
    if (r.size() < min_width) throw DataError(path + ": expected at least " + std::to_string(min_width) + " columns");
  }
  return rows;
}

int to_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw DataError(where + ": '" + s + "' is not an integer");
  }
}

double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw DataError(where + ": '" + s + "' is not a number");
  }
}

// id -> label from "id,label" CSV or a manifest field.
std::map<std::string, std::string> label_table(const std::string& path, bool zoom) {
  std::map<std::string, std::string> out;
  if (is_manifest(path)) {
    for (const auto& r : read_manifest(path)) {
      if (zoom) {
        if (r.zoom) out[r.id] = std::string(to_string(*r.zoom));
      } else {
        out[r.id] = r.gesture;
      }
    }
  } else {
    for (const auto& r : csv_rows(path, 2)) out[r[0]] = r[1];
  }
  return out;
}

void run_evaluate(const EvaluateArgs& a) {
  std::ostringstream out;
  if (a.task == "classify" || a.task == "pinch") {
    const auto truth = label_table(a.truth, a.task == "pinch");
    const auto pred = label_table(a.pred, a.task == "pinch");
    // Scored over the predicted ids; truth may cover more (a whole manifest).
    std::vector<std::string> t, p;
    for (const auto& [id, label] : pred) {
      auto it = truth.find(id);
      if (it == truth.end()) throw DataError("no ground truth for " + id);
      t.push_back(it->second);
      p.push_back(label);
    }
    if (t.empty()) throw DataError("no predictions to evaluate");
    if (t.size() < truth.size()) {
      warn(std::to_string(truth.size() - t.size()) + " ground-truth items have no prediction and are skipped");
    }
    ConfusionTally tally;
    std::set<std::string> names(t.begin(), t.end());
    names.insert(p.begin(), p.end());
    for (const auto& n : names) tally.index_of(n);
    for (std::size_t i = 0; i < t.size(); ++i) tally.add(t[i], p[i]);
    const auto scores = prf1(tally);
    out << "class,precision,recall,f1\n";
    for (std::size_t i = 0; i < tally.classes.size(); ++i) {
      const auto& c = scores.per_class[i];
      out << csv_field(tally.classes[i]) << ',' << fmt(c.precision) << ',' << fmt(c.recall) << ',' << fmt(c.f1) << '\n';
    }
    out << "macro," << fmt(scores.macro_precision) << ',' << fmt(scores.macro_recall) << ',' << fmt(scores.macro_f1)
        << '\n';
  } else if (a.task == "detect") {
    std::map<std::string, DetectionRecord> records;
    if (is_manifest(a.truth)) {
      for (const auto& r : read_manifest(a.truth)) {
        if (!a.cls.empty() && r.gesture != a.cls) continue;
        if (!r.fingertip_boxes.empty()) records[r.id].truths = r.fingertip_boxes;
      }
    } else {
      for (const auto& r : csv_rows(a.truth, 5)) {
        records[r[0]].truths.push_back(BBox::make(to_int(r[1], a.truth), to_int(r[2], a.truth),
                                                  to_int(r[3], a.truth), to_int(r[4], a.truth)));
      }
    }
    for (const auto& r : csv_rows(a.pred, 5)) {
      const double conf = r.size() > 5 ? to_double(r[5], a.pred) : 1.0;
      records[r[0]].predictions.push_back(
          {BBox::make(to_int(r[1], a.pred), to_int(r[2], a.pred), to_int(r[3], a.pred), to_int(r[4], a.pred)), conf});
    }
    std::vector<DetectionRecord> all;
    for (auto& [id, r] : records) all.push_back(std::move(r));
    const auto scores = prf1(detection_tally(all, a.lambda));
    const auto ap = average_precision(all, a.lambda);
    out << "lambda,precision,recall,f1,ap,avg_iou\n";
    out << fmt(a.lambda) << ',' << fmt(scores.precision) << ',' << fmt(scores.recall) << ',' << fmt(scores.f1) << ','
        << (ap ? fmt(*ap) : std::string("")) << ',' << fmt(avg_iou(all, a.lambda)) << '\n';
  } else if (a.task == "caption") {
    std::map<std::string, std::vector<Tokens>> refs;
    if (is_manifest(a.truth)) {
      for (const auto& r : read_manifest(a.truth)) {
        for (const auto& c : r.captions) refs[r.id].push_back(tokenize(c));
      }
    } else {
      for (const auto& r : csv_rows(a.truth, 2)) refs[r[0]].push_back(tokenize(r[1]));
    }
    std::map<std::string, Tokens> cands;
    for (const auto& r : csv_rows(a.pred, 2)) cands[r[0]] = tokenize(r[1]);
    std::vector<Tokens> c;
    std::vector<std::vector<Tokens>> rs;
    for (const auto& [id, cand] : cands) {
      auto it = refs.find(id);
      if (it == refs.end()) throw DataError("no reference captions for " + id);
      c.push_back(cand);
      rs.push_back(it->second);
    }
    if (c.empty()) throw DataError("no captions to evaluate");
    out << "bleu1,bleu2,bleu3,bleu4\n";
    for (int n = 1; n <= 4; ++n) out << (n > 1 ? "," : "") << fmt(corpus_bleu(c, rs, n));
    out << '\n';
  } else {
    throw ParameterError("--task must be classify, detect, caption or pinch");
  }
  std::cout << out.str();
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::string grid, manifest, config, out;
};

template <class T>
std::vector<T> list_of(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::istringstream in(value);
  std::string part;
  while (std::getline(in, part, ',')) {
    part.erase(0, part.find_first_not_of(" \t"));
    part.erase(part.find_last_not_of(" \t") + 1);
    std::istringstream ps(part);
    T v{};
    if (!(ps >> v) || !ps.eof()) throw ParameterError("grid: bad value '" + part + "' for " + key);
    out.push_back(v);
  }
  if (out.empty()) throw ParameterError("grid: " + key + " is empty");
  return out;
}

void run_sweep(const SweepArgs& a) {
  SweepGrid grid;
  std::string cls = "Point";
  long long min_area = 1;
  double lambda = 0.5;
  std::istringstream in(slurp(a.grid));
  std::string line;
  while (std::getline(in, line)) {
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) throw ParameterError("grid: expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    key.erase(0, key.find_first_not_of(" \t"));
    value.erase(value.find_last_not_of(" \t\r") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    if (key == "layers") {
      grid.layers = list_of<std::string>(key, value);
    } else if (key == "top_n") {
      grid.top_n = list_of<std::size_t>(key, value);
    } else if (key == "beta") {
      grid.betas = list_of<double>(key, value);
    } else if (key == "kernel") {
      grid.kernels = list_of<int>(key, value);
    } else if (key == "class") {
      cls = value;
    } else if (key == "min_area") {
      min_area = list_of<long long>(key, value).front();
    } else if (key == "lambda") {
      lambda = list_of<double>(key, value).front();
    } else {
      throw ParameterError("grid: unknown key '" + key + "'");
    }
  }
  if (grid.size() == 0) throw ParameterError("grid needs layers, top_n, beta and kernel");
  Settings s = settings_from(a.config);
  const auto records = read_manifest(a.manifest);
  std::vector<SampleRecord> chosen;
  for (const auto& r : records) {
    if (r.gesture == cls && !r.fingertip_boxes.empty()) chosen.push_back(r);
  }
  if (chosen.empty()) throw DataError("no records of class " + cls + " with fingertip boxes");
  SplitSpec spec;
  spec.seed = s.train.seed;
  const auto parts = split(chosen, spec);
  std::vector<SampleRecord> held(parts.val);
  held.insert(held.end(), parts.test.begin(), parts.test.end());
  if (held.empty()) throw DataError("sweep needs at least three " + cls + " records");
  fit_backbone(s, a.config, chosen.front().width, chosen.front().height);
  const auto backbone = make_backbone(s);
  const auto selection = fingertip_frames(load_samples(parts.train), cls);
  const auto evaluation = fingertip_frames(load_samples(held), cls);
  const auto table = sweep(*backbone, selection, evaluation, grid, min_area, lambda);
  write_text(a.out, sweep_csv(table));
}

// ---- pareto -----------------------------------------------------------------

struct ParetoArgs {
  std::string points;
  bool all = false;
};

void run_pareto(const ParetoArgs& a) {
  const auto points = a.points.empty() ? ReferenceData::load(default_reference_dir()).model_points()
                                       : read_model_points(a.points);
  std::cout << (a.all ? pareto_csv(points) : pareto_front_csv(points));
}

void error_line(const char* kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gesture recognition engine and evaluation tools"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic labelled dataset");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--scenes", gen.scenes, "Static scenes, cycled over the six gestures");
  g->add_option("--pinch-sequences", gen.sequences, "Additional zoom sequences");
  g->add_option("--pinch-frames", gen.frames, "Frames per zoom sequence");
  g->add_option("--d", gen.d, "Frame distance used to label zoom sequences");
  g->add_option("--width", gen.width);
  g->add_option("--height", gen.height);
  g->add_option("--format", gen.format, "ppm or atn")->check(CLI::IsMember({"ppm", "atn"}));
  g->add_option("--seed", gen.seed);

  SelectArgs sel;
  auto* s = app.add_subcommand("select-filters", "Select the filters that localise a class");
  s->add_option("--manifest", sel.manifest)->required();
  s->add_option("--class", sel.cls)->required();
  s->add_option("--layer", sel.layer);
  s->add_option("--top-n", sel.top_n);
  s->add_option("--alpha", sel.alpha);
  s->add_option("--beta", sel.beta);
  s->add_option("--kernel", sel.kernel);
  s->add_option("--min-area", sel.min_area);
  s->add_option("--out", sel.out)->required();
  s->add_option("--config", sel.config);

  LocalizeArgs loc;
  auto* l = app.add_subcommand("localize", "Localise a class in one frame");
  l->add_option("--fset", loc.fset)->required();
  l->add_option("--frame", loc.frame)->required();
  l->add_option("--config", loc.config);

  TrainArgs tr;
  auto* t = app.add_subcommand("train-head", "Train a head on frozen backbone features");
  t->add_option("--head", tr.head)->required()->check(CLI::IsMember({"classify", "pinch", "caption"}));
  t->add_option("--manifest", tr.manifest)->required();
  t->add_option("--synthetic", tr.synthetic, "Synthetic manifest for the first training phase");
  t->add_option("--out", tr.out)->required();
  t->add_option("--config", tr.config);
  t->add_option("--max-epochs", tr.max_epochs);
  t->add_option("--batch-size", tr.batch_size);
  t->add_option("--patience", tr.patience);
  t->add_option("--learning-rate", tr.learning_rate);
  t->add_option("--seed", tr.seed);
  t->add_option("--augment-copies", tr.augment_copies);
  t->add_option("--units", tr.units, "Caption head width");
  t->add_option("--emb-dim", tr.emb_dim, "Caption embedding size");
  t->add_option("--conv-filters", tr.conv_filters, "Pinch head convolution filters");
  t->add_option("--fc-units", tr.fc_units, "Pinch head hidden units");

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "Run the engine over a directory of frames");
  m->add_option("--config", sim.config)->required();
  m->add_option("--frames", sim.frames)->required();
  m->add_option("--out", sim.out, "Predictions (JSON lines); stdout by default");
  m->add_option("--timing", sim.timing, "Timing report (JSON); stderr by default");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score predictions against ground truth");
  e->add_option("--task", ev.task)->required()->check(CLI::IsMember({"classify", "detect", "caption", "pinch"}));
  e->add_option("--pred", ev.pred)->required();
  e->add_option("--truth", ev.truth)->required();
  e->add_option("--lambda", ev.lambda, "IoU threshold for a detection hit");
  e->add_option("--class", ev.cls, "Restrict manifest ground truth to one gesture (detect)");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Localisation parameter study");
  w->add_option("--grid", sw.grid)->required();
  w->add_option("--manifest", sw.manifest)->required();
  w->add_option("--config", sw.config);
  w->add_option("--out", sw.out);

  ParetoArgs pa;
  auto* p = app.add_subcommand("pareto", "Non-dominated models (max F1, min parameters)");
  p->add_option("--points", pa.points, "CSV with name,f1,params; bundled reference points by default");
  p->add_flag("--all", pa.all, "Emit every point with a non_dominated flag");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    error_line("usage", ex.what());
    return 1;
  }

  try {
    if (*g) run_gen(gen);
    if (*s) run_select(sel);
    if (*l) run_localize(loc);
    if (*t) run_train(tr);
    if (*m) run_simulate(sim);
    if (*e) run_evaluate(ev);
    if (*w) run_sweep(sw);
    if (*p) run_pareto(pa);
  } catch (const ParameterError& ex) {
    error_line("usage", ex.what());
    return 1;
  } catch (const std::exception& ex) {
    error_line("data", ex.what());
    return 2;
  }
  std::cout.flush();
  return 0;
}
