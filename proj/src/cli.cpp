// Copyright 2026 The nuqta authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License. You may
// obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nuqta/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "nuqta/metrics.hpp"
#include "nuqta/synthgen.hpp"
#include "nuqta/trainer.hpp"

namespace fs = std::filesystem;

namespace nuqta {

namespace {

struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& m) : std::runtime_error(m) {}
};

const char kUsage[] =
    "usage: nuqta <command> [flags]\n"
    "\n"
    "commands:\n"
    "  generate         write a synthetic line dataset\n"
    "  train            train a recognizer on a dataset directory\n"
    "  eval             evaluate a checkpoint on a labeled dataset\n"
    "  predict          transcribe a directory of line images\n"
    "  experiment-dots  high-resolution vs low-resolution dot study\n"
    "\n"
    "shared flags: --config PATH  --seed N  --out DIR  --threads N\n"
    "              --set section.key=value   (repeatable config override)\n"
    "\n"
    "command flags:\n"
    "  generate        --n N\n"
    "  train           --data DIR [--val DIR]\n"
    "  eval            --data DIR --checkpoint FILE\n"
    "  predict         --images DIR --checkpoint FILE [--beam N]\n"
    "  experiment-dots --seeds CSV (default 0,1,2)\n";

struct Args {
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;

  bool has(const std::string& name) const { return flags.count(name) != 0; }
  std::string get(const std::string& name, const std::string& dflt = "") const {
    auto it = flags.find(name);
    return it == flags.end() ? dflt : it->second;
  }
  std::string require(const std::string& name) const {
    auto it = flags.find(name);
    if (it == flags.end()) throw usage_error("missing required flag --" + name);
    return it->second;
  }
  long long get_int(const std::string& name, long long dflt) const {
    auto it = flags.find(name);
    if (it == flags.end()) return dflt;
    try {
      size_t pos = 0;
      long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw usage_error("flag --" + name + " expects an integer, got '" +
                        it->second + "'");
    }
  }
};

Args parse_args(const std::vector<std::string>& argv, size_t start,
                const std::set<std::string>& allowed) {
  Args args;
  for (size_t i = start; i < argv.size(); ++i) {
    const std::string& tok = argv[i];
    if (tok.rfind("--", 0) != 0)
      throw usage_error("unexpected argument '" + tok + "'");
    const std::string name = tok.substr(2);
    if (!allowed.count(name) && name != "set")
      throw usage_error("unknown flag --" + name);
    if (i + 1 >= argv.size())
      throw usage_error("flag --" + name + " expects a value");
    const std::string value = argv[++i];
    if (name == "set") {
      args.sets.push_back(value);
    } else {
      args.flags[name] = value;
    }
  }
  return args;
}

Config effective_config(const Args& args) {
  Config cfg;
  if (args.has("config")) cfg = Config::parse_file(args.get("config"));
  for (const std::string& s : args.sets) cfg.apply_override(s);
  if (args.has("seed")) {
    const std::string seed = args.get("seed");
    cfg.set("train", "seed", seed);
    cfg.set("generate", "seed", seed);
    cfg.set("experiment", "seed", seed);
  }
  return cfg;
}

void echo_config(const Config& cfg, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream out(fs::path(out_dir) / "config.txt", std::ios::binary);
  out << cfg.serialize();
}

size_t thread_count(const Args& args) {
  const long long t = args.get_int("threads", 1);
  if (t < 1) throw usage_error("--threads must be >= 1");
  return static_cast<size_t>(t);
}

// ---- generate ------------------------------------------------------------------

AugmentationConfig augmentation_from_config(const Config& cfg,
                                            const std::string& section) {
  AugmentationConfig a;
  const bool master = cfg.get_bool(section, "augment", false);
  a.resample = cfg.get_bool(section, "aug_resample", master);
  a.stretch = cfg.get_bool(section, "aug_stretch", master);
  a.rotate = cfg.get_bool(section, "aug_rotate", master);
  a.translate = cfg.get_bool(section, "aug_translate", master);
  a.gauss_noise = cfg.get_bool(section, "aug_noise", master);
  a.salt_pepper = cfg.get_bool(section, "aug_salt_pepper", master);
  a.border_crop = cfg.get_bool(section, "aug_border_crop", master);
  a.contrast = cfg.get_bool(section, "aug_contrast", master);
  a.rotate_lo = cfg.get_num(section, "aug_rotate_lo", a.rotate_lo);
  a.rotate_hi = cfg.get_num(section, "aug_rotate_hi", a.rotate_hi);
  a.noise_hi = cfg.get_num(section, "aug_noise_hi", a.noise_hi);
  a.sp_hi = cfg.get_num(section, "aug_salt_pepper_hi", a.sp_hi);
  a.stretch_lo = cfg.get_num(section, "aug_stretch_lo", a.stretch_lo);
  a.stretch_hi = cfg.get_num(section, "aug_stretch_hi", a.stretch_hi);
  return a;
}

std::vector<std::vector<uint32_t>> load_vocab_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open vocabulary file: " + path);
  std::vector<std::vector<uint32_t>> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    vocab.push_back(utf8_decode(line));
  }
  if (vocab.empty()) throw data_error("vocabulary file is empty: " + path);
  return vocab;
}

GenerateConfig generation_from_config(const Config& cfg) {
  GenerateConfig g;
  g.n = static_cast<size_t>(
      cfg.get_int("generate", "n", static_cast<long long>(g.n)));
  g.seed = static_cast<uint64_t>(
      cfg.get_int("generate", "seed", static_cast<long long>(g.seed)));
  g.min_words = static_cast<size_t>(
      cfg.get_int("generate", "min_words", static_cast<long long>(g.min_words)));
  g.max_words = static_cast<size_t>(
      cfg.get_int("generate", "max_words", static_cast<long long>(g.max_words)));
  g.height = static_cast<size_t>(
      cfg.get_int("generate", "height", static_cast<long long>(g.height)));
  g.overlap_lo = cfg.get_num("generate", "overlap_lo", g.overlap_lo);
  g.overlap_hi = cfg.get_num("generate", "overlap_hi", g.overlap_hi);
  g.ink_lo = cfg.get_num("generate", "ink_lo", g.ink_lo);
  g.ink_hi = cfg.get_num("generate", "ink_hi", g.ink_hi);
  g.background_lo = cfg.get_num("generate", "background_lo", g.background_lo);
  g.background_hi = cfg.get_num("generate", "background_hi", g.background_hi);
  g.aug = augmentation_from_config(cfg, "generate");
  const std::string vocab_file = cfg.get("generate", "vocab_file", "");
  if (!vocab_file.empty()) g.vocab = load_vocab_file(vocab_file);
  return g;
}

int cmd_generate(const Args& args) {
  const std::string out = args.require("out");
  Config cfg = effective_config(args);
  if (args.has("n")) cfg.set("generate", "n", args.get("n"));
  GenerateConfig g = generation_from_config(cfg);
  g.config_echo = cfg.serialize();
  if (g.config_echo.empty()) {
    Config echo;
    echo.set("generate", "n", std::to_string(g.n));
    echo.set("generate", "seed", std::to_string(g.seed));
    g.config_echo = echo.serialize();
  }
  generate_dataset(out, g, GlyphAtlas::builtin(), thread_count(args));
  std::cout << "wrote " << g.n << " lines to " << out << "\n";
  return 0;
}

// ---- train ---------------------------------------------------------------------

template <class T>
int run_train(const Config& cfg, const Args& args) {
  Dataset data = load_dataset(args.require("data"));
  std::optional<Dataset> val;
  if (args.has("val")) val = load_dataset(args.get("val"));
  if (val && !(val->charset == data.charset))
    throw data_error("train/val charsets differ");

  ModelConfig mcfg = ModelConfig::from_config(cfg);
  TrainConfig tcfg = TrainConfig::from_config(cfg);
  const std::string out = args.get("out", "run");
  Recognizer<T> model(mcfg, data.charset.size(),
                      derive_seed(tcfg.seed, 0x1017));
  Config echo = cfg;
  mcfg.to_config(echo);
  tcfg.to_config(echo);
  echo_config(echo, out);
  TrainStats stats =
      train(model, data, val ? &*val : nullptr, tcfg, out);
  std::cout << "iters\t" << stats.iters_run << "\n";
  std::cout << "best_accuracy\t" << stats.best_accuracy << "\n";
  std::cout << "checkpoint\t" << stats.checkpoint_path << "\n";
  return 0;
}

int cmd_train(const Args& args) {
  Config cfg = effective_config(args);
  const std::string precision = cfg.get("train", "precision", "f32");
  if (precision == "f32") return run_train<float>(cfg, args);
  if (precision == "f64") return run_train<double>(cfg, args);
  throw data_error("train.precision must be f32 or f64, got '" + precision +
                   "'");
}

// ---- eval ----------------------------------------------------------------------

template <class T>
int run_eval(const Args& args) {
  CharSet ckpt_charset;
  auto model = load_checkpoint<T>(args.require("checkpoint"), &ckpt_charset);
  Dataset data = load_dataset(args.require("data"));
  if (!(data.charset == ckpt_charset)) {
    throw data_error(
        "dataset charset does not match the checkpoint charset; refusing to "
        "evaluate");
  }
  const size_t beam = static_cast<size_t>(args.get_int("beam", 0));
  auto pairs = predict_dataset(*model, data, 32, beam);
  EvalReport report = evaluate(pairs);
  std::cout << "accuracy\t" << std::setprecision(17) << report.accuracy
            << "\n";
  if (args.has("out")) {
    const std::string out = args.get("out");
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream f(fs::path(out) / "report.tsv", std::ios::binary);
    f << report.to_tsv();
    std::cout << "report\t" << (fs::path(out) / "report.tsv").string() << "\n";
  }
  return 0;
}

int cmd_eval(const Args& args) {
  const CheckpointHeader hdr = peek_checkpoint(args.require("checkpoint"));
  return hdr.dtype == 8 ? run_eval<double>(args) : run_eval<float>(args);
}

// ---- predict -------------------------------------------------------------------

template <class T>
int run_predict(const Args& args) {
  CharSet charset;
  auto model = load_checkpoint<T>(args.require("checkpoint"), &charset);
  const std::string dir = args.require("images");
  if (!fs::is_directory(dir))
    throw data_error("--images expects a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw data_error("no .png files under " + dir);

  const size_t beam = static_cast<size_t>(args.get_int("beam", 0));
  std::vector<Sample> samples(files.size());
  for (size_t i = 0; i < files.size(); ++i) {
    samples[i].rel_path = files[i];
    samples[i].image = read_png_gray8(files[i]);
    if (samples[i].image.h < 8 || samples[i].image.w < 8)
      throw data_error("image smaller than 8x8: " + files[i]);
  }
  Rng noop(0);
  for (size_t at = 0; at < samples.size(); at += 32) {
    std::vector<const Sample*> chunk;
    for (size_t i = at; i < std::min(at + 32, samples.size()); ++i)
      chunk.push_back(&samples[i]);
    Batch<T> batch =
        make_batch<T>(chunk, model->config().height, model->width_divisor());
    Sequence<T> lp = model->forward(batch.images, false, noop);
    for (size_t i = 0; i < chunk.size(); ++i) {
      Tensor<T> mat = gather_sample(lp, i);
      const size_t valid = model->out_width(batch.widths[i]);
      std::vector<int> labels = beam > 0 ? beam_decode(mat, valid, beam)
                                         : greedy_decode(mat, valid);
      std::cout << fs::path(chunk[i]->rel_path).filename().string() << "\t"
                << utf8_encode(charset.decode(labels)) << "\n";
    }
  }
  return 0;
}

int cmd_predict(const Args& args) {
  const CheckpointHeader hdr = peek_checkpoint(args.require("checkpoint"));
  return hdr.dtype == 8 ? run_predict<double>(args) : run_predict<float>(args);
}

// ---- experiment-dots -------------------------------------------------------------

std::vector<uint64_t> parse_seeds(const std::string& csv) {
  std::vector<uint64_t> seeds;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      seeds.push_back(static_cast<uint64_t>(std::stoull(tok)));
    } catch (const std::exception&) {
      throw usage_error("--seeds expects a comma-separated integer list");
    }
  }
  if (seeds.empty()) throw usage_error("--seeds is empty");
  return seeds;
}

struct GroupStats {
  size_t hits = 0, total = 0;
  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(hits) / total;
  }
};

// dot-distinguished: shares its base shape with another charset character.
std::map<uint32_t, bool> dot_group_map(const GlyphAtlas& atlas) {
  std::map<int, size_t> base_count;
  for (const auto& [ch, spec] : atlas.glyphs)
    if (spec.base_shape >= 0) base_count[spec.base_shape]++;
  std::map<uint32_t, bool> in_dot_group;
  for (const auto& [ch, spec] : atlas.glyphs) {
    in_dot_group[ch] =
        spec.base_shape >= 0 && base_count[spec.base_shape] > 1;
  }
  return in_dot_group;
}

int cmd_experiment_dots(const Args& args) {
  const std::string out = args.require("out");
  Config cfg = effective_config(args);
  const auto seeds = parse_seeds(args.get("seeds", "0,1,2"));
  const size_t threads = thread_count(args);

  const size_t train_n = static_cast<size_t>(
      cfg.get_int("experiment", "train_n", 256));
  const size_t val_n =
      static_cast<size_t>(cfg.get_int("experiment", "val_n", 96));
  const size_t iters =
      static_cast<size_t>(cfg.get_int("experiment", "iters", 1200));
  const size_t eval_every =
      static_cast<size_t>(cfg.get_int("experiment", "eval_every", 200));
  const size_t batch_size =
      static_cast<size_t>(cfg.get_int("experiment", "batch_size", 32));

  const GlyphAtlas atlas = GlyphAtlas::builtin();
  const fs::path root(out);
  std::error_code ec;
  fs::create_directories(root / "data", ec);

  // Fixed data seeds: every model/seed trains and validates on the same
  // bytes, so the comparison budget is matched.
  const std::string train_dir = (root / "data" / "train").string();
  const std::string val_dir = (root / "data" / "val").string();
  if (!fs::exists(fs::path(train_dir) / "labels.tsv")) {
    GenerateConfig g;
    g.n = train_n;
    g.seed = 90001;
    g.min_words = 1;
    g.max_words = 2;
    g.aug = augmentation_from_config(cfg, "experiment");
    generate_dataset(train_dir, g, atlas, threads);
  }
  if (!fs::exists(fs::path(val_dir) / "labels.tsv")) {
    GenerateConfig g;
    g.n = val_n;
    g.seed = 90002;
    g.min_words = 1;
    g.max_words = 2;
    generate_dataset(val_dir, g, atlas, threads);
  }
  Dataset train_ds = load_dataset(train_dir);
  Dataset val_ds = load_dataset(val_dir);

  // The contender backbone comes from [model]; the control is always the
  // stride-reducing lowres baseline.
  ModelConfig hi = ModelConfig::from_config(cfg);
  if (!cfg.has("model", "backbone")) hi.backbone = "unet";
  if (!cfg.has("model", "unet_base_channels")) hi.unet_base_channels = 8;
  if (!cfg.has("model", "hidden")) hi.hidden = 48;
  ModelConfig lo = hi;
  lo.backbone = "lowres-baseline";

  const auto group_of = dot_group_map(atlas);
  struct RunResult {
    std::string kind;
    uint64_t seed;
    double overall;
    GroupStats dot, unique;
  };
  std::vector<RunResult> results;

  for (const ModelConfig* mc : {&hi, &lo}) {
    for (uint64_t seed : seeds) {
      TrainConfig tc;
      tc.batch_size = batch_size;
      tc.max_iters = iters;
      tc.eval_every = eval_every;
      tc.seed = seed;
      const std::string run_dir =
          (root / (mc->backbone + "_seed" + std::to_string(seed))).string();
      Recognizer<float> model(*mc, train_ds.charset.size(),
                              derive_seed(seed, 0x1017));
      TrainStats stats = train(model, train_ds, &val_ds, tc, run_dir);
      auto best = load_checkpoint<float>(stats.checkpoint_path);
      auto pairs = predict_dataset(*best, val_ds, batch_size);
      RunResult r;
      r.kind = mc->backbone;
      r.seed = seed;
      r.overall = char_accuracy(pairs);
      for (const auto& [ch, stat] : per_char_accuracy(pairs)) {
        GroupStats& gs = group_of.at(ch) ? r.dot : r.unique;
        gs.hits += stat.hits;
        gs.total += stat.total;
      }
      results.push_back(r);
      std::cout << mc->backbone << " seed " << seed << ": overall "
                << r.overall << ", dot-group " << r.dot.accuracy()
                << ", unique-group " << r.unique.accuracy() << "\n";
    }
  }

  std::ostringstream rep;
  rep << "dot-discrimination study\n";
  rep << "contender backbone: " << hi.backbone << " vs lowres-baseline\n";
  rep << "budget: " << iters << " iters, batch " << batch_size << ", "
      << train_n << " train / " << val_n << " val lines\n";
  rep << "groups: dot-distinguished = characters sharing a base shape; "
         "base-shape-unique = the rest\n\n";
  rep << "model\tseed\toverall\tdot_group\tunique_group\n";
  for (const auto& r : results) {
    rep << r.kind << "\t" << r.seed << "\t" << r.overall << "\t"
        << r.dot.accuracy() << "\t" << r.unique.accuracy() << "\n";
  }
  size_t wins = 0;
  rep << "\nper-seed dot-group comparison (contender vs baseline):\n";
  for (uint64_t seed : seeds) {
    double hi_acc = 0, lo_acc = 0;
    for (const auto& r : results) {
      if (r.seed != seed) continue;
      if (r.kind == lo.backbone) {
        lo_acc = r.dot.accuracy();
      } else {
        hi_acc = r.dot.accuracy();
      }
    }
    const bool win = hi_acc >= lo_acc;
    wins += win ? 1 : 0;
    rep << "seed " << seed << ": " << hi_acc << (win ? " >= " : " < ")
        << lo_acc << "\n";
  }
  rep << "\nverdict: contender dot-group accuracy >= baseline in " << wins
      << "/" << seeds.size() << " seeds\n";

  std::ofstream report_file(root / "report.txt", std::ios::binary);
  report_file << rep.str();
  echo_config(cfg, out);
  std::cout << "\n" << rep.str();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    if (args.empty()) throw usage_error("no command given");
    const std::string& cmd = args[0];
    const std::set<std::string> shared{"config", "seed", "out", "threads"};
    auto with = [&](std::initializer_list<const char*> extra) {
      std::set<std::string> s = shared;
      for (const char* e : extra) s.insert(e);
      return s;
    };
    if (cmd == "generate") {
      return cmd_generate(parse_args(args, 1, with({"n"})));
    }
    if (cmd == "train") {
      return cmd_train(parse_args(args, 1, with({"data", "val"})));
    }
    if (cmd == "eval") {
      return cmd_eval(parse_args(args, 1, with({"data", "checkpoint", "beam"})));
    }
    if (cmd == "predict") {
      return cmd_predict(
          parse_args(args, 1, with({"images", "checkpoint", "beam"})));
    }
    if (cmd == "experiment-dots") {
      return cmd_experiment_dots(parse_args(args, 1, with({"seeds"})));
    }
    if (cmd == "--help" || cmd == "help") {
      std::cout << kUsage;
      return 0;
    }
    throw usage_error("unknown command '" + cmd + "'");
  } catch (const usage_error& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    std::cerr << kUsage;
    return 2;
  } catch (const data_error& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return 3;
  } catch (const io_error& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return 3;
  } catch (const numeric_error& e) {
    std::cerr << "error[numeric]: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace nuqta
