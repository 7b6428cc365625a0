#include "antispoof/pipeline.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "antispoof/backend.h"
#include "antispoof/checkpoint.h"
#include "antispoof/errors.h"
#include "antispoof/eval.h"

namespace antispoof {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename Int>
Int parse_integer(const std::string& v) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("expected an integer");
  return out;
}

double parse_real(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument("expected a real number");
  return d;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true or false");
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string modes_value(const std::vector<TrainMode>& modes) {
  if (modes.size() == 2) return "both";
  return std::string(mode_name(modes.front()));
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

struct KeyInfo {
  Setter set;
  std::function<std::string(const PipelineConfig&)> get;
};

// Ordered table of every accepted key.
const std::vector<std::pair<std::string, KeyInfo>>& key_table() {
  static const std::vector<std::pair<std::string, KeyInfo>> table = [] {
    std::vector<std::pair<std::string, KeyInfo>> t;
    auto add = [&](const char* name, Setter set, std::function<std::string(const PipelineConfig&)> get) {
      t.emplace_back(name, KeyInfo{std::move(set), std::move(get)});
    };
    auto count_key = [&](const char* name, int CorpusConfig::*field) {
      add(
          name,
          [field](PipelineConfig& c, const std::string& v) {
            const int n = parse_integer<int>(v);
            if (n < 1) throw std::invalid_argument("must be >= 1");
            c.corpus.*field = n;
          },
          [field](const PipelineConfig& c) { return std::to_string(c.corpus.*field); });
    };
    add("root", [](PipelineConfig& c, const std::string& v) { c.root = v; },
        [](const PipelineConfig& c) { return c.root.string(); });
    add("seed", [](PipelineConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>(v); },
        [](const PipelineConfig& c) { return std::to_string(c.seed); });
    add("train_seed", [](PipelineConfig& c, const std::string& v) { c.train.seed = parse_integer<std::uint64_t>(v); },
        [](const PipelineConfig& c) { return std::to_string(c.train.seed); });
    add("mode", [](PipelineConfig& c, const std::string& v) { c.modes = parse_modes(v); },
        [](const PipelineConfig& c) { return modes_value(c.modes); });
    add("reduced", [](PipelineConfig& c, const std::string& v) { c.reduced = parse_bool(v); },
        [](const PipelineConfig& c) { return std::string(c.reduced ? "true" : "false"); });
    count_key("n_train_genuine", &CorpusConfig::n_train_genuine);
    count_key("n_train_spoofed", &CorpusConfig::n_train_spoofed);
    count_key("n_dev_genuine", &CorpusConfig::n_dev_genuine);
    count_key("n_dev_spoofed", &CorpusConfig::n_dev_spoofed);
    count_key("n_eval_genuine", &CorpusConfig::n_eval_genuine);
    count_key("n_eval_spoofed", &CorpusConfig::n_eval_spoofed);
    count_key("instances_per_class", &CorpusConfig::instances_per_class);
    add("min_duration_s", [](PipelineConfig& c, const std::string& v) { c.corpus.min_duration_s = parse_real(v); },
        [](const PipelineConfig& c) { return fmt_real(c.corpus.min_duration_s); });
    add("max_duration_s", [](PipelineConfig& c, const std::string& v) { c.corpus.max_duration_s = parse_real(v); },
        [](const PipelineConfig& c) { return fmt_real(c.corpus.max_duration_s); });
    add("batch_size",
        [](PipelineConfig& c, const std::string& v) {
          c.train.batch_size = parse_integer<std::size_t>(v);
          if (c.train.batch_size < 1) throw std::invalid_argument("must be >= 1");
        },
        [](const PipelineConfig& c) { return std::to_string(c.train.batch_size); });
    add("learning_rate",
        [](PipelineConfig& c, const std::string& v) {
          c.train.learning_rate = parse_real(v);
          if (c.train.learning_rate <= 0) throw std::invalid_argument("must be positive");
        },
        [](const PipelineConfig& c) { return fmt_real(c.train.learning_rate); });
    add("epochs",
        [](PipelineConfig& c, const std::string& v) {
          c.train.epochs = parse_integer<int>(v);
          if (c.train.epochs < 1) throw std::invalid_argument("must be >= 1");
        },
        [](const PipelineConfig& c) { return std::to_string(c.train.epochs); });
    add("patience",
        [](PipelineConfig& c, const std::string& v) {
          c.train.patience = parse_integer<int>(v);
          if (c.train.patience < 0) throw std::invalid_argument("must be >= 0");
        },
        [](const PipelineConfig& c) { return std::to_string(c.train.patience); });
    add("input_frames", [](PipelineConfig& c, const std::string& v) { c.arch.input_frames = parse_integer<std::size_t>(v); },
        [](const PipelineConfig& c) { return std::to_string(c.arch.input_frames); });
    add("input_bins", [](PipelineConfig& c, const std::string& v) { c.arch.input_bins = parse_integer<std::size_t>(v); },
        [](const PipelineConfig& c) { return std::to_string(c.arch.input_bins); });
    add("width_divisor",
        [](PipelineConfig& c, const std::string& v) { c.arch.width_divisor = parse_integer<std::size_t>(v); },
        [](const PipelineConfig& c) { return std::to_string(c.arch.width_divisor); });
    add("frame_len", [](PipelineConfig& c, const std::string& v) { c.stft.frame_len = parse_integer<std::size_t>(v); },
        [](const PipelineConfig& c) { return std::to_string(c.stft.frame_len); });
    add("frame_shift",
        [](PipelineConfig& c, const std::string& v) { c.stft.frame_shift = parse_integer<std::size_t>(v); },
        [](const PipelineConfig& c) { return std::to_string(c.stft.frame_shift); });
    add("n_fft", [](PipelineConfig& c, const std::string& v) { c.stft.n_fft = parse_integer<std::size_t>(v); },
        [](const PipelineConfig& c) { return std::to_string(c.stft.n_fft); });
    return t;
  }();
  return table;
}

void validate(const PipelineConfig& c, const std::string& source) {
  auto fail = [&](const std::string& msg) { throw ConfigError(source + ": " + msg); };
  if (c.stft.num_bins() != c.arch.input_bins)
    fail("input_bins (" + std::to_string(c.arch.input_bins) + ") must equal n_fft/2+1 (" +
         std::to_string(c.stft.num_bins()) + ")");
  if (c.stft.frame_len > c.stft.n_fft || c.stft.frame_shift == 0 || c.stft.frame_len == 0)
    fail("need 0 < frame_len <= n_fft and frame_shift > 0");
  if (c.corpus.min_duration_s < 1.0 || c.corpus.max_duration_s > 10.0 ||
      c.corpus.min_duration_s > c.corpus.max_duration_s)
    fail("durations must satisfy 1 <= min_duration_s <= max_duration_s <= 10");
  if (c.root.empty()) fail("root must not be empty");
  try {
    trunk_plan(c.arch);
  } catch (const std::invalid_argument& e) {
    fail(std::string("architecture: ") + e.what());
  }
}

// ---- stages ---------------------------------------------------------------

void require_file(const fs::path& p, std::string_view stage, std::string_view producer) {
  if (!fs::exists(p))
    throw DependencyError(std::string(stage) + ": missing " + p.string() + " (run `" + std::string(producer) +
                          "` first)");
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create " + p.string() + ": " + ec.message());
}

fs::path feature_path(const PipelineConfig& cfg, const LabeledUtterance& u) {
  return cfg.features_dir() / (u.id + ".spec");
}

std::vector<LabeledUtterance> load_manifest(const PipelineConfig& cfg, std::string_view stage) {
  require_file(cfg.manifest_path(), stage, "synth");
  return read_manifest(cfg.manifest_path());
}

std::vector<Example> load_examples(const PipelineConfig& cfg, const std::vector<LabeledUtterance>& rows,
                                   Subset subset, std::string_view stage) {
  std::vector<Example> out;
  for (const auto& u : rows) {
    if (u.subset != subset) continue;
    const fs::path p = feature_path(cfg, u);
    require_file(p, stage, "featurize");
    out.push_back({u.id, read_features(p), labels_to_targets(u)});
  }
  return out;
}

ModelParams<float> load_model(const PipelineConfig& cfg, TrainMode mode, std::string_view stage) {
  const fs::path p = cfg.checkpoint_path(mode);
  require_file(p, stage, "train");
  return from_named_tensors(cfg.arch, read_checkpoint(p));
}

void stage_synth(const PipelineConfig& cfg, std::ostream& log) {
  const Corpus c = build_corpus(cfg.corpus, cfg.seed, cfg.corpus_dir());
  log << "synth: wrote " << c.utterances.size() << " utterances to " << cfg.corpus_dir().string() << '\n';
}

void stage_featurize(const PipelineConfig& cfg, std::ostream& log) {
  const auto rows = load_manifest(cfg, "featurize");
  ensure_dir(cfg.features_dir());
  for (const auto& u : rows) {
    const fs::path wav = cfg.corpus_dir() / u.path;
    require_file(wav, "featurize", "synth");
    write_features(feature_path(cfg, u), stft(read_wav(wav), cfg.stft));
  }
  log << "featurize: wrote " << rows.size() << " feature files\n";
}

void stage_train(const PipelineConfig& cfg, std::ostream& log) {
  const auto rows = load_manifest(cfg, "train");
  const auto train_set = load_examples(cfg, rows, Subset::kTrain, "train");
  const auto dev_set = load_examples(cfg, rows, Subset::kDev, "train");
  ensure_dir(cfg.checkpoints_dir());
  ensure_dir(cfg.reports_dir());
  for (TrainMode mode : cfg.modes) {
    TrainConfig tc = cfg.train;
    tc.mode = mode;
    std::ofstream train_log(cfg.train_log_path(mode), std::ios::binary | std::ios::trunc);
    std::ofstream eer_log(cfg.dev_eer_log_path(mode), std::ios::binary | std::ios::trunc);
    if (!train_log || !eer_log) throw std::runtime_error("train: cannot open logs in " + cfg.reports_dir().string());
    const TrainResult r = train(train_set, dev_set, cfg.arch, tc, [&](const EpochLog& e) {
      const std::string line = format_epoch_line(e);
      train_log << line << '\n' << std::flush;
      char buf[96];
      std::snprintf(buf, sizeof buf, "epoch=%d dev_eer=%.4f", e.epoch, e.dev_eer);
      eer_log << buf << '\n' << std::flush;
      log << "train[" << mode_name(mode) << "]: " << line << " dev_eer=" << e.dev_eer << '\n' << std::flush;
    });
    eer_log << "best_epoch=" << r.best_epoch << '\n';
    write_checkpoint(cfg.checkpoint_path(mode), to_named_tensors(r.params));
  }
}

std::vector<CodeRow> all_codes(const PipelineConfig& cfg, const ModelParams<float>& model,
                               const std::vector<LabeledUtterance>& rows, std::string_view stage,
                               std::optional<Subset> only = std::nullopt) {
  std::vector<CodeRow> out;
  for (const auto& u : rows) {
    if (only && u.subset != *only) continue;
    const fs::path p = feature_path(cfg, u);
    require_file(p, stage, "featurize");
    const Spectrogram s = read_features(p);
    const std::vector<float> code = extract_code(model, inference_input(s, cfg.arch, u.id));
    out.push_back({u.id, u.is_genuine(), {code.begin(), code.end()}});
  }
  return out;
}

void stage_codes(const PipelineConfig& cfg, std::ostream& log) {
  const auto rows = load_manifest(cfg, "codes");
  ensure_dir(cfg.codes_dir());
  for (TrainMode mode : cfg.modes) {
    const ModelParams<float> model = load_model(cfg, mode, "codes");
    export_codes(all_codes(cfg, model, rows, "codes"), cfg.codes_path(mode));
    log << "codes[" << mode_name(mode) << "]: wrote " << cfg.codes_path(mode).string() << '\n';
  }
}

void stage_backend(const PipelineConfig& cfg, std::ostream& log) {
  const auto rows = load_manifest(cfg, "backend");
  for (TrainMode mode : cfg.modes) {
    const ModelParams<float> model = load_model(cfg, mode, "backend");
    std::vector<std::vector<double>> genuine, spoofed;
    for (auto& r : all_codes(cfg, model, rows, "backend", Subset::kTrain))
      (r.genuine ? genuine : spoofed).push_back(std::move(r.code));
    write_backend(cfg.backend_path(mode), fit_gaussian(genuine), fit_gaussian(spoofed));
    log << "backend[" << mode_name(mode) << "]: fit on " << genuine.size() << " genuine / " << spoofed.size()
        << " spoofed train codes\n";
  }
}

void stage_score(const PipelineConfig& cfg, std::ostream& log) {
  const auto rows = load_manifest(cfg, "score");
  ensure_dir(cfg.scores_dir());
  for (TrainMode mode : cfg.modes) {
    const ModelParams<float> model = load_model(cfg, mode, "score");
    require_file(cfg.backend_path(mode), "score", "backend");
    const auto [genuine, spoofed] = read_backend(cfg.backend_path(mode));
    for (Subset subset : {Subset::kDev, Subset::kEval}) {
      std::vector<ScoreLine> scores;
      for (const auto& r : all_codes(cfg, model, rows, "score", subset))
        scores.push_back({r.id, llr_score(r.code, genuine, spoofed)});
      write_scores(cfg.scores_path(mode, subset), scores);
    }
    log << "score[" << mode_name(mode) << "]: wrote dev/eval scores\n";
  }
}

struct SubsetResult {
  double eer = 0.0;
  std::size_t n_genuine = 0, n_spoofed = 0;
};

SubsetResult evaluate_scores(const fs::path& score_file, const std::vector<LabeledUtterance>& rows,
                             std::vector<DetPoint>* det = nullptr) {
  std::map<std::string, bool> genuine_by_id;
  for (const auto& u : rows) genuine_by_id[u.id] = u.is_genuine();
  TrialSet trials;
  SubsetResult r;
  for (const auto& s : read_scores(score_file)) {
    const auto it = genuine_by_id.find(s.id);
    if (it == genuine_by_id.end()) throw FormatError("eval: score for unknown utterance '" + s.id + "'");
    trials.push_back({s.id, s.score, it->second});
    (it->second ? r.n_genuine : r.n_spoofed)++;
  }
  r.eer = compute_eer(trials);
  if (det) *det = det_points(trials);
  return r;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::string eer_line(const SubsetResult& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "eer_pct=%.4f n_genuine=%zu n_spoofed=%zu", r.eer, r.n_genuine, r.n_spoofed);
  return buf;
}

void stage_eval(const PipelineConfig& cfg, std::ostream& log) {
  const auto rows = load_manifest(cfg, "eval");
  for (TrainMode mode : cfg.modes) {
    for (Subset s : {Subset::kDev, Subset::kEval}) require_file(cfg.scores_path(mode, s), "eval", "score");
    require_file(cfg.train_log_path(mode), "eval", "train");
    require_file(cfg.dev_eer_log_path(mode), "eval", "train");
  }
  ensure_dir(cfg.reports_dir());

  std::ostringstream report;
  report << "# config\n" << cfg.echo() << '\n';
  std::array<std::size_t, 6> counts{};
  for (const auto& u : rows)
    counts[2 * static_cast<std::size_t>(u.subset) + (u.is_genuine() ? 0 : 1)]++;
  report << "# corpus\n";
  for (Subset s : {Subset::kTrain, Subset::kDev, Subset::kEval})
    report << subset_name(s) << " genuine=" << counts[2 * static_cast<std::size_t>(s)]
           << " spoofed=" << counts[2 * static_cast<std::size_t>(s) + 1] << '\n';

  std::map<TrainMode, double> eval_eer;
  for (TrainMode mode : cfg.modes) {
    const std::string name(mode_name(mode));
    report << "\n# mode " << name << '\n';
    const auto train_lines = read_lines(cfg.train_log_path(mode));
    report << "final_train: " << (train_lines.empty() ? std::string("none") : train_lines.back()) << '\n';
    for (const auto& l : read_lines(cfg.dev_eer_log_path(mode))) report << "dev_per_epoch: " << l << '\n';
    const SubsetResult dev = evaluate_scores(cfg.scores_path(mode, Subset::kDev), rows);
    std::vector<DetPoint> det;
    const SubsetResult ev = evaluate_scores(cfg.scores_path(mode, Subset::kEval), rows, &det);
    write_det_csv(cfg.reports_dir() / (name + "_eval_det.csv"), det);
    report << "dev " << eer_line(dev) << '\n';
    report << "eval " << eer_line(ev) << '\n';
    eval_eer[mode] = ev.eer;
    log << "eval[" << name << "]: dev " << eer_line(dev) << " | eval " << eer_line(ev) << '\n';
  }
  if (eval_eer.size() == 2) {
    const double base = eval_eer[TrainMode::kBaseline];
    const double multi = eval_eer[TrainMode::kMultitask];
    char buf[160];
    std::snprintf(buf, sizeof buf, "\n# comparison\neval_eer_baseline=%.4f eval_eer_multitask=%.4f relative_change_pct=%.2f\n",
                  base, multi, base > 0 ? 100.0 * (multi - base) / base : 0.0);
    report << buf;
  }
  std::ofstream out(cfg.report_path(), std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("eval: cannot write " + cfg.report_path().string());
  out << report.str();
  log << "eval: report at " << cfg.report_path().string() << '\n';
}

const std::map<std::string_view, std::function<void(const PipelineConfig&, std::ostream&)>>& stages() {
  static const std::map<std::string_view, std::function<void(const PipelineConfig&, std::ostream&)>> m = {
      {"synth", stage_synth}, {"featurize", stage_featurize}, {"train", stage_train}, {"codes", stage_codes},
      {"backend", stage_backend}, {"score", stage_score}, {"eval", stage_eval}};
  return m;
}

}  // namespace

fs::path PipelineConfig::checkpoint_path(TrainMode m) const {
  return checkpoints_dir() / (std::string(mode_name(m)) + ".lcnn");
}
fs::path PipelineConfig::backend_path(TrainMode m) const {
  return checkpoints_dir() / (std::string(mode_name(m)) + "_backend.bin");
}
fs::path PipelineConfig::train_log_path(TrainMode m) const {
  return reports_dir() / (std::string(mode_name(m)) + "_train.log");
}
fs::path PipelineConfig::dev_eer_log_path(TrainMode m) const {
  return reports_dir() / (std::string(mode_name(m)) + "_dev_eer.log");
}
fs::path PipelineConfig::codes_path(TrainMode m) const {
  return codes_dir() / (std::string(mode_name(m)) + "_codes.csv");
}
fs::path PipelineConfig::scores_path(TrainMode m, Subset s) const {
  return scores_dir() / (std::string(mode_name(m)) + "_" + std::string(subset_name(s)) + ".txt");
}

std::string PipelineConfig::echo() const {
  std::string out;
  for (const auto& [key, info] : key_table()) out += key + " = " + info.get(*this) + "\n";
  return out;
}

void apply_reduced(PipelineConfig& cfg) {
  cfg.reduced = true;
  const ArchConfig r = ArchConfig::reduced();
  cfg.arch.input_frames = r.input_frames;
  cfg.arch.input_bins = r.input_bins;
  cfg.arch.width_divisor = r.width_divisor;
  cfg.stft.frame_len = 256;
  cfg.stft.n_fft = 256;
}

std::vector<TrainMode> parse_modes(std::string_view value) {
  if (value == "multitask") return {TrainMode::kMultitask};
  if (value == "baseline") return {TrainMode::kBaseline};
  if (value == "both") return {TrainMode::kMultitask, TrainMode::kBaseline};
  throw std::invalid_argument("mode must be multitask, baseline or both, got '" + std::string(value) + "'");
}

PipelineConfig parse_config_text(std::string_view text, const std::string& source) {
  PipelineConfig cfg;
  bool train_seed_set = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected `key = value`");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    const auto& table = key_table();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& kv) { return kv.first == key; });
    if (it == table.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    try {
      it->second.set(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError(where + ": invalid value '" + value + "' for '" + key + "': " + e.what());
    }
    train_seed_set = train_seed_set || key == "train_seed";
  }
  if (!train_seed_set) cfg.train.seed = cfg.seed;
  if (cfg.reduced) apply_reduced(cfg);
  validate(cfg, source);
  return cfg;
}

PipelineConfig parse_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

int run(std::string_view command, const PipelineConfig& cfg, std::ostream& log) {
  std::vector<std::string_view> sequence;
  if (command == "all") {
    sequence = {"synth", "featurize", "train", "codes", "backend", "score", "eval"};
  } else if (stages().count(command)) {
    sequence = {command};
  } else {
    log << "error: unknown command '" << command << "'\n";
    return 2;
  }
  for (std::string_view stage : sequence) {
    try {
      stages().at(stage)(cfg, log);
    } catch (const DependencyError& e) {
      log << "[" << stage << "] dependency error: " << e.what() << '\n';
      return 3;
    } catch (const std::exception& e) {
      log << "[" << stage << "] error: " << e.what() << '\n';
      return 1;
    }
  }
  return 0;
}

}  // namespace antispoof
