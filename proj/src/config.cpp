#include "mixlab/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "mixlab/errors.hpp"
#include "mixlab/rng.hpp"

namespace mixlab::runner {

namespace {

void check_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw InvalidArgument(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw InvalidArgument("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
T get_as(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InvalidArgument("config key '" + std::string(key) + "' has the wrong type: " + e.what());
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = get_as<T>(j, key);
}

template <typename T>
void read_optional(const Json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = get_as<T>(j, key);
  }
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

StrategyKind parse_strategy(const std::string& s) {
  if (s == "none" || s == "vanilla" || s == "baseline") return StrategyKind::kNone;
  if (s == "pause") return StrategyKind::kPause;
  if (s == "boost") return StrategyKind::kBoost;
  if (s == "high_loss_removal") return StrategyKind::kHighLossRemoval;
  throw InvalidArgument("unknown strategy '" + s + "'");
}

std::string to_string(strategies::EnpWindow::Mode m) {
  return m == strategies::EnpWindow::Mode::kFixedEpochs ? "fixed_epochs" : "accuracy_threshold";
}

}  // namespace

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kNone:
      return "none";
    case StrategyKind::kPause:
      return "pause";
    case StrategyKind::kBoost:
      return "boost";
    case StrategyKind::kHighLossRemoval:
      return "high_loss_removal";
  }
  return "none";
}

RunConfig RunConfig::from_json(const Json& j) {
  check_keys(j, "config", {"name", "seed", "out_dir", "desk_scale", "dataset", "model", "optimizer",
                           "mixup", "strategy", "metrics", "recipe"});
  RunConfig c;
  read(j, "name", c.name);
  read(j, "seed", c.seed);
  read(j, "out_dir", c.out_dir);
  read(j, "desk_scale", c.desk_scale);
  if (j.contains("recipe")) c.recipe = j.at("recipe");

  if (j.contains("dataset")) {
    const Json& d = j.at("dataset");
    check_keys(d, "dataset", {"source", "n_per_class", "n_val_per_class", "dim", "classes",
                              "separation", "sigma", "seed", "train_files", "val_files",
                              "keep_classes", "val_fraction", "max_train", "normalization"});
    auto& ds = c.dataset;
    read(d, "source", ds.source);
    read(d, "n_per_class", ds.n_per_class);
    read(d, "n_val_per_class", ds.n_val_per_class);
    read(d, "dim", ds.dim);
    read(d, "classes", ds.classes);
    read(d, "separation", ds.separation);
    read(d, "sigma", ds.sigma);
    read_optional(d, "seed", ds.seed);
    read(d, "train_files", ds.train_files);
    read(d, "val_files", ds.val_files);
    read(d, "keep_classes", ds.keep_classes);
    read(d, "val_fraction", ds.val_fraction);
    read_optional(d, "max_train", ds.max_train);
    if (d.contains("normalization")) {
      ds.normalization = data::parse_normalization(get_as<std::string>(d, "normalization"));
    }
  }
  if (j.contains("model")) {
    const Json& m = j.at("model");
    check_keys(m, "model", {"hidden", "activation"});
    read(m, "hidden", c.model.hidden);
    if (m.contains("activation")) {
      c.model.hidden_activation = nn::parse_activation(get_as<std::string>(m, "activation"));
    }
  }
  if (j.contains("optimizer")) {
    const Json& o = j.at("optimizer");
    check_keys(o, "optimizer", {"eta", "batch_size", "epochs"});
    read(o, "eta", c.optimizer.eta);
    read(o, "batch_size", c.optimizer.batch_size);
    read(o, "epochs", c.optimizer.epochs);
  }
  if (j.contains("mixup")) {
    const Json& m = j.at("mixup");
    check_keys(m, "mixup", {"alpha", "lambda_mode"});
    read_optional(m, "alpha", c.mixup.alpha);
    if (m.contains("lambda_mode")) {
      c.mixup.lambda_mode = mixup::parse_lambda_mode(get_as<std::string>(m, "lambda_mode"));
    }
  }
  if (j.contains("strategy")) {
    const Json& s = j.at("strategy");
    check_keys(s, "strategy", {"kind", "enp", "enp_alpha", "k_percent", "teacher_epochs"});
    if (s.contains("kind")) c.strategy.kind = parse_strategy(get_as<std::string>(s, "kind"));
    if (s.contains("enp")) {
      const Json& w = s.at("enp");
      check_keys(w, "strategy.enp", {"mode", "end_epoch", "acc_threshold"});
      if (w.contains("mode")) c.strategy.window.mode = strategies::parse_enp_mode(get_as<std::string>(w, "mode"));
      read(w, "end_epoch", c.strategy.window.end_epoch);
      read(w, "acc_threshold", c.strategy.window.acc_threshold);
    }
    read_optional(s, "enp_alpha", c.strategy.enp_alpha);
    read(s, "k_percent", c.strategy.k_percent);
    read_optional(s, "teacher_epochs", c.strategy.teacher_epochs);
  }
  if (j.contains("metrics")) {
    const Json& m = j.at("metrics");
    check_keys(m, "metrics", {"benr", "atd", "zero_activations", "cos_probe", "grad_rate",
                              "probe_size", "cos_pairs", "grad_rate_alpha"});
    read(m, "benr", c.metrics.benr);
    read(m, "atd", c.metrics.atd);
    read(m, "zero_activations", c.metrics.zero_activations);
    read(m, "cos_probe", c.metrics.cos_probe);
    read(m, "grad_rate", c.metrics.grad_rate);
    read(m, "probe_size", c.metrics.probe_size);
    read(m, "cos_pairs", c.metrics.cos_pairs);
    read_optional(m, "grad_rate_alpha", c.metrics.grad_rate_alpha);
  }
  return c;
}

Json RunConfig::to_json() const {
  Json j;
  j["name"] = name;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["desk_scale"] = desk_scale;
  if (!recipe.is_null()) j["recipe"] = recipe;
  j["dataset"] = {
      {"source", dataset.source},
      {"n_per_class", dataset.n_per_class},
      {"n_val_per_class", dataset.n_val_per_class},
      {"dim", dataset.dim},
      {"classes", dataset.classes},
      {"separation", dataset.separation},
      {"sigma", dataset.sigma},
      {"seed", optional_json(dataset.seed)},
      {"train_files", dataset.train_files},
      {"val_files", dataset.val_files},
      {"keep_classes", dataset.keep_classes},
      {"val_fraction", dataset.val_fraction},
      {"max_train", optional_json(dataset.max_train)},
      {"normalization", std::string(data::to_string(dataset.normalization))},
  };
  j["model"] = {{"hidden", model.hidden},
                {"activation", std::string(nn::to_string(model.hidden_activation))}};
  j["optimizer"] = {{"eta", optimizer.eta},
                    {"batch_size", optimizer.batch_size},
                    {"epochs", optimizer.epochs}};
  j["mixup"] = {{"alpha", optional_json(mixup.alpha)},
                {"lambda_mode", mixup.lambda_mode == mixup::LambdaMode::kPerBatch ? "per_batch" : "per_pair"}};
  j["strategy"] = {
      {"kind", to_string(strategy.kind)},
      {"enp", {{"mode", to_string(strategy.window.mode)},
               {"end_epoch", strategy.window.end_epoch},
               {"acc_threshold", strategy.window.acc_threshold}}},
      {"enp_alpha", optional_json(strategy.enp_alpha)},
      {"k_percent", strategy.k_percent},
      {"teacher_epochs", optional_json(strategy.teacher_epochs)},
  };
  j["metrics"] = {
      {"benr", metrics.benr},
      {"atd", metrics.atd},
      {"zero_activations", metrics.zero_activations},
      {"cos_probe", metrics.cos_probe},
      {"grad_rate", metrics.grad_rate},
      {"probe_size", metrics.probe_size},
      {"cos_pairs", metrics.cos_pairs},
      {"grad_rate_alpha", optional_json(metrics.grad_rate_alpha)},
  };
  return j;
}

void RunConfig::validate() const {
  if (optimizer.epochs < 1) throw InvalidArgument("optimizer.epochs must be >= 1");
  if (optimizer.batch_size < 1) throw InvalidArgument("optimizer.batch_size must be >= 1");
  if (!(optimizer.eta > 0.0)) throw InvalidArgument("optimizer.eta must be > 0");
  if (mixup.alpha && !(*mixup.alpha > 0.0)) throw InvalidArgument("mixup.alpha must be > 0");
  for (std::size_t w : model.hidden) {
    if (w == 0) throw InvalidArgument("model.hidden widths must be positive");
  }
  const auto& ds = dataset;
  if (ds.source == "two_gaussians" || ds.source == "k_gaussians") {
    if (ds.n_per_class == 0) throw InvalidArgument("dataset.n_per_class must be positive");
    if (ds.n_val_per_class == 0) throw InvalidArgument("dataset.n_val_per_class must be positive");
    if (ds.dim == 0) throw InvalidArgument("dataset.dim must be positive");
    if (!(ds.sigma >= 0.0)) throw InvalidArgument("dataset.sigma must be >= 0");
    if (ds.source == "two_gaussians" && ds.classes != 2) {
      throw InvalidArgument("two_gaussians datasets have exactly two classes");
    }
    if (ds.source == "k_gaussians" && ds.classes < 2) throw InvalidArgument("dataset.classes must be >= 2");
  } else if (ds.source == "cifar10") {
    if (ds.train_files.empty()) throw InvalidArgument("cifar10 dataset needs train_files");
    if (ds.keep_classes.size() < 2) throw InvalidArgument("cifar10 dataset needs at least two classes");
    if (ds.val_files.empty() && !(ds.val_fraction > 0.0 && ds.val_fraction < 1.0)) {
      throw InvalidArgument("dataset.val_fraction must lie in (0, 1)");
    }
  } else {
    throw InvalidArgument("unknown dataset.source '" + ds.source + "'");
  }
  strategy.window.validate();
  switch (strategy.kind) {
    case StrategyKind::kNone:
      break;
    case StrategyKind::kPause:
      if (!mixup.alpha) throw InvalidArgument("pause strategy needs mixup.alpha");
      break;
    case StrategyKind::kBoost:
      if (!mixup.alpha) throw InvalidArgument("boost strategy needs mixup.alpha");
      if (!strategy.enp_alpha || !(*strategy.enp_alpha > 0.0)) {
        throw InvalidArgument("boost strategy needs strategy.enp_alpha > 0");
      }
      break;
    case StrategyKind::kHighLossRemoval:
      if (!(strategy.k_percent > 0.0 && strategy.k_percent <= 1.0)) {
        throw InvalidArgument("strategy.k_percent must lie in (0, 1]");
      }
      if (strategy.teacher_epochs && *strategy.teacher_epochs < 1) {
        throw InvalidArgument("strategy.teacher_epochs must be >= 1");
      }
      break;
  }
  if (metrics.grad_rate_alpha && !(*metrics.grad_rate_alpha > 0.0)) {
    throw InvalidArgument("metrics.grad_rate_alpha must be > 0");
  }
  if (metrics.cos_probe && ds.source != "two_gaussians" &&
      !(ds.source == "cifar10" && ds.keep_classes.size() == 2)) {
    throw InvalidArgument("the cosine probe needs a binary task");
  }
  schedule().validate();
}

std::string RunConfig::hash() const {
  Json j = to_json();
  j.erase("seed");
  j.erase("out_dir");
  j.erase("name");
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  const std::uint64_t h = splitmix64(fnv1a64(j.dump()));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

strategies::MixupSchedule RunConfig::schedule() const {
  switch (strategy.kind) {
    case StrategyKind::kPause:
      return strategies::MixupSchedule::pause(mixup.alpha.value_or(1.0), strategy.window);
    case StrategyKind::kBoost:
      return strategies::MixupSchedule::boost(mixup.alpha.value_or(1.0),
                                              strategy.enp_alpha.value_or(1.0), strategy.window);
    case StrategyKind::kNone:
    case StrategyKind::kHighLossRemoval: {
      auto s = strategies::MixupSchedule::constant(mixup.alpha);
      s.window = strategy.window;
      return s;
    }
  }
  return strategies::MixupSchedule::constant(mixup.alpha);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config '" + path.string() + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw FormatError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace mixlab::runner
