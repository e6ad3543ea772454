#include "capse/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "capse/error.hpp"

namespace capse {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value);

template <>
double parse_number<double>(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error("config: bad numeric value for " + key + ": '" + value + "'");
  }
}

template <>
std::int64_t parse_number<std::int64_t>(const std::string& key,
                                        const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error("config: bad integer value for " + key + ": '" + value + "'");
  }
}

}  // namespace

KeyValues parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path.string());

  KeyValues kvs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected key=value");
    }
    kvs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kvs;
}

void apply_key_values(RunConfig& cfg, const KeyValues& kvs) {
  for (const auto& [key, value] : kvs) {
    if (key == "dataset_dir") {
      cfg.dataset_dir = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "k") {
      cfg.k = static_cast<std::size_t>(parse_number<std::int64_t>(key, value));
    } else if (key == "n_filters") {
      cfg.n_filters =
          static_cast<std::size_t>(parse_number<std::int64_t>(key, value));
    } else if (key == "d") {
      cfg.d = static_cast<std::size_t>(parse_number<std::int64_t>(key, value));
    } else if (key == "m") {
      cfg.m = static_cast<int>(parse_number<std::int64_t>(key, value));
    } else if (key == "batch_size") {
      cfg.batch_size =
          static_cast<std::size_t>(parse_number<std::int64_t>(key, value));
    } else if (key == "epochs") {
      cfg.epochs = static_cast<int>(parse_number<std::int64_t>(key, value));
    } else if (key == "eval_every") {
      cfg.eval_every =
          static_cast<int>(parse_number<std::int64_t>(key, value));
    } else if (key == "lr") {
      cfg.lr = parse_number<double>(key, value);
    } else if (key == "delta") {
      cfg.delta = parse_number<double>(key, value);
    } else if (key == "seed") {
      cfg.seed =
          static_cast<std::uint64_t>(parse_number<std::int64_t>(key, value));
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_number<std::int64_t>(key, value));
    } else if (key == "init") {
      cfg.init = value;
    } else if (key == "task") {
      cfg.task = value;
    } else if (key == "margin") {
      cfg.margin = parse_number<double>(key, value);
    } else if (key == "transe_lr") {
      cfg.transe_lr = parse_number<double>(key, value);
    } else if (key == "transe_epochs") {
      cfg.transe_epochs =
          static_cast<int>(parse_number<std::int64_t>(key, value));
    } else if (key == "transe_norm") {
      cfg.transe_norm = lower(value);
    } else {
      throw Error("config: unknown key '" + key + "'");
    }
  }
}

bool apply_dataset_profile(RunConfig& cfg, const std::string& dataset_name) {
  const std::string name = lower(dataset_name);
  if (name == "wn18rr") {
    cfg.task = "kg";
    cfg.k = 100;
    cfg.n_filters = 400;
    cfg.m = 1;
    cfg.lr = 1e-5;
    cfg.init = "transe";
    return true;
  }
  if (name == "fb15k-237") {
    cfg.task = "kg";
    cfg.k = 100;
    cfg.n_filters = 50;
    cfg.m = 1;
    cfg.lr = 1e-4;
    cfg.init = "transe";
    return true;
  }
  if (name == "search17") {
    cfg.task = "rerank";
    cfg.k = 200;
    cfg.n_filters = 400;
    cfg.m = 1;
    cfg.lr = 5e-5;
    cfg.epochs = 200;
    cfg.eval_every = 1;
    return true;
  }
  return false;
}

bool apply_dataset_defaults_file(RunConfig& cfg,
                                 const std::filesystem::path& config_dir,
                                 const std::string& dataset_name) {
  if (config_dir.empty() || dataset_name.empty()) return false;
  const std::filesystem::path path =
      config_dir / (lower(dataset_name) + ".conf");
  if (!std::filesystem::exists(path)) return false;
  apply_key_values(cfg, parse_config_file(path));
  return true;
}

void validate(const RunConfig& cfg) {
  if (cfg.k < 1 || cfg.n_filters < 1 || cfg.d < 1 || cfg.m < 1 ||
      cfg.batch_size < 1) {
    throw Error("config: k, n_filters, d, m, batch_size must all be >= 1");
  }
  if (cfg.lr <= 0.0) throw Error("config: lr must be > 0");
  if (cfg.delta <= 0.0 || cfg.delta >= 1.0) {
    throw Error("config: delta must be in (0, 1)");
  }
  if (cfg.epochs < 0 || cfg.transe_epochs < 0) {
    throw Error("config: epochs must be >= 0");
  }
  if (cfg.threads < 0) throw Error("config: threads must be >= 0");
  if (cfg.margin <= 0.0 || cfg.transe_lr <= 0.0) {
    throw Error("config: margin and transe_lr must be > 0");
  }
  if (cfg.task != "kg" && cfg.task != "rerank") {
    throw Error("config: task must be kg or rerank");
  }
  if (cfg.transe_norm != "l1" && cfg.transe_norm != "l2") {
    throw Error("config: transe_norm must be l1 or l2");
  }
  const bool init_ok = cfg.init == "random" || cfg.init == "transe" ||
                       cfg.init.rfind("pretrained:", 0) == 0 ||
                       cfg.init.rfind("synset:", 0) == 0;
  if (!init_ok) {
    throw Error(
        "config: init must be random, transe, pretrained:PATH or "
        "synset:PATH");
  }
}

}  // namespace capse
