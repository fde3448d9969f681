#include "wusn/config.hpp"

#include "wusn/errors.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace wusn {

namespace {

namespace pt = boost::property_tree;

pt::ptree read_flat(std::istream& in, const std::set<std::string>& allowed) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw ConfigError("config: sections are not supported ('" + key + "')");
    if (!allowed.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  return tree;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  if (parts.size() == 1 && parts.front().empty()) parts.clear();
  return parts;
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = boost::to_lower_copy(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
  }
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& text) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::vector<double> doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split_list(text)) out.push_back(to_double(key, p));
  if (out.empty()) throw ConfigError("config: '" + key + "' must not be empty");
  return out;
}

template <typename Int>
std::vector<Int> integers(const std::string& key, const std::string& text) {
  std::vector<Int> out;
  for (const auto& p : split_list(text)) out.push_back(to_integer<Int>(key, p));
  if (out.empty()) throw ConfigError("config: '" + key + "' must not be empty");
  return out;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return in;
}

} // namespace

RangingExperiment parse_ranging_config(std::istream& in) {
  const auto tree = read_flat(in, {"B", "Gammas", "snr_grid_db", "trials_per_point", "seed"});
  RangingExperiment cfg;
  for (const auto& [key, node] : tree) {
    const std::string value = boost::trim_copy(node.data());
    if (key == "B") {
      cfg.B = to_double(key, value);
    } else if (key == "Gammas") {
      cfg.gammas = integers<std::int64_t>(key, value);
    } else if (key == "snr_grid_db") {
      cfg.snr_grid_db = doubles(key, value);
    } else if (key == "trials_per_point") {
      cfg.trials_per_point = to_integer<std::size_t>(key, value);
    } else if (key == "seed") {
      cfg.seed = to_integer<std::uint64_t>(key, value);
    }
  }
  return cfg;
}

RangingExperiment load_ranging_config(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_ranging_config(in);
}

LocalizationExperiment parse_localization_config(std::istream& in) {
  const auto tree = read_flat(in, {"n_heads", "sensors_per_head", "sigma", "gamma", "source", "runs", "schemes",
                                   "seed", "spacing", "placement_radius", "neighbor_radius", "epsilon",
                                   "max_epochs", "opt_mode"});
  LocalizationExperiment cfg;
  for (const auto& [key, node] : tree) {
    const std::string value = boost::trim_copy(node.data());
    if (key == "n_heads") {
      cfg.n_heads = integers<std::size_t>(key, value);
    } else if (key == "sensors_per_head") {
      cfg.sensors_per_head = integers<std::size_t>(key, value);
    } else if (key == "sigma") {
      cfg.sigma = doubles(key, value);
    } else if (key == "gamma") {
      cfg.gamma = doubles(key, value);
    } else if (key == "source") {
      const auto xy = doubles(key, value);
      if (xy.size() != 2) throw ConfigError("config: 'source' expects two coordinates");
      cfg.source = Position(xy[0], xy[1]);
    } else if (key == "runs") {
      cfg.runs = to_integer<std::size_t>(key, value);
    } else if (key == "schemes") {
      cfg.methods.clear();
      for (const auto& name : split_list(value)) cfg.methods.push_back(parse_method(name));
    } else if (key == "seed") {
      cfg.seed = to_integer<std::uint64_t>(key, value);
    } else if (key == "spacing") {
      cfg.spacing = to_double(key, value);
    } else if (key == "placement_radius") {
      cfg.placement_radius = to_double(key, value);
    } else if (key == "neighbor_radius") {
      cfg.neighbor_radius = to_double(key, value);
    } else if (key == "epsilon") {
      cfg.epsilon = to_double(key, value);
    } else if (key == "max_epochs") {
      cfg.max_epochs = to_integer<std::size_t>(key, value);
    } else if (key == "opt_mode") {
      if (value == "every_epoch") {
        cfg.reoptimize_every_epoch = true;
      } else if (value == "first_epoch") {
        cfg.reoptimize_every_epoch = false;
      } else {
        throw ConfigError("config: 'opt_mode' must be every_epoch or first_epoch");
      }
    }
  }
  cfg.validate();
  return cfg;
}

LocalizationExperiment load_localization_config(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_localization_config(in);
}

} // namespace wusn
