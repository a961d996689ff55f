#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bloomsample/baselines.hpp"
#include "bloomsample/evalkit/generators.hpp"
#include "bloomsample/sample_tree.hpp"
#include "bloomsample/tree_plan.hpp"

namespace bloomsample::evalkit {

/// Per-bit cost slope that reproduces the depth column of the M = 10^6
/// planning table (feasible range roughly [0.0039, 0.0047)).
inline constexpr double kReferenceCostPerBit = 0.0043;

struct SweepConfig {
  std::vector<std::string> algorithms{"bst"};
  std::vector<std::uint64_t> namespace_sizes{100000};
  std::vector<std::uint64_t> set_sizes{1000};
  std::vector<double> accuracies{0.8};
  std::vector<HashKind> families{HashKind::SimpleLinear};
  std::vector<std::string> shapes{"uniform"};
  std::uint64_t seed = 42;
  std::uint64_t trials = 1000;
  std::map<std::string, std::uint64_t> trials_by_algorithm;
  unsigned hash_count = 3;
  double cost_per_bit = kReferenceCostPerBit;
  double cost_ratio = -1;  // fixed ratio when >= 0, otherwise cost_per_bit * m
  double threshold = kDefaultThreshold;
  double clustered_percent = 10.0;

  std::uint64_t trials_for(const std::string& algorithm) const {
    const auto it = trials_by_algorithm.find(algorithm);
    return it == trials_by_algorithm.end() ? trials : it->second;
  }
};

struct BenchRecord {
  std::string algorithm;
  std::uint64_t namespace_size = 0;
  std::uint64_t set_size = 0;
  double accuracy = 0;
  HashKind family = HashKind::SimpleLinear;
  std::string shape;
  double intersections = 0;  // per-trial means
  double membership = 0;
  double nodes = 0;
  double time_ns = 0;
  std::uint64_t trials = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  if (items.empty()) throw std::invalid_argument("empty list");
  return items;
}

inline std::uint64_t parse_count(const std::string& text) {
  std::size_t used = 0;
  const double value = std::stod(text, &used);
  if (used != text.size() || value < 0 || value != std::floor(value) || value > 1.8e19) {
    throw std::invalid_argument("'" + text + "' is not a non-negative integer");
  }
  return static_cast<std::uint64_t>(value);
}

inline double parse_real(const std::string& text) {
  std::size_t used = 0;
  const double value = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("'" + text + "' is not a number");
  return value;
}

}  // namespace detail

/// Reads the versioned key = value format. '#' starts a comment; lists are
/// comma-separated; counts accept exponent notation ("1e5").
inline SweepConfig parse_sweep_config(std::istream& in) {
  SweepConfig config;
  bool has_version = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = "sweep config line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw std::invalid_argument(where + "expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    try {
      if (key == "version") {
        if (detail::parse_count(value) != 1) throw std::invalid_argument("unsupported version " + value);
        has_version = true;
      } else if (key == "algorithms") {
        config.algorithms = detail::split_list(value);
        for (const auto& a : config.algorithms) {
          if (a != "bst" && a != "da" && a != "hi") throw std::invalid_argument("unknown algorithm " + a);
        }
      } else if (key == "M") {
        config.namespace_sizes.clear();
        for (const auto& v : detail::split_list(value)) config.namespace_sizes.push_back(detail::parse_count(v));
      } else if (key == "n") {
        config.set_sizes.clear();
        for (const auto& v : detail::split_list(value)) config.set_sizes.push_back(detail::parse_count(v));
      } else if (key == "accuracy") {
        config.accuracies.clear();
        for (const auto& v : detail::split_list(value)) config.accuracies.push_back(detail::parse_real(v));
      } else if (key == "families") {
        config.families.clear();
        for (const auto& v : detail::split_list(value)) config.families.push_back(parse_hash_kind(v));
      } else if (key == "shapes") {
        config.shapes = detail::split_list(value);
        for (const auto& s : config.shapes) {
          if (s != "uniform" && s != "clustered") throw std::invalid_argument("unknown shape " + s);
        }
      } else if (key == "seed") {
        config.seed = detail::parse_count(value);
      } else if (key == "trials") {
        config.trials = detail::parse_count(value);
      } else if (key.rfind("trials.", 0) == 0) {
        config.trials_by_algorithm[key.substr(7)] = detail::parse_count(value);
      } else if (key == "k") {
        config.hash_count = static_cast<unsigned>(detail::parse_count(value));
      } else if (key == "cost_per_bit") {
        config.cost_per_bit = detail::parse_real(value);
      } else if (key == "cost_ratio") {
        config.cost_ratio = detail::parse_real(value);
      } else if (key == "threshold") {
        config.threshold = detail::parse_real(value);
      } else if (key == "clustered_percent") {
        config.clustered_percent = detail::parse_real(value);
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    } catch (const std::out_of_range& e) {
      throw std::invalid_argument(where + "value out of range");
    }
  }
  if (!has_version) throw std::invalid_argument("sweep config lacks 'version = 1'");
  if (config.trials == 0) throw std::invalid_argument("sweep config needs trials >= 1");
  return config;
}

inline SweepConfig parse_sweep_config(const std::string& text) {
  std::istringstream in(text);
  return parse_sweep_config(in);
}

/// Runs every (algorithm, M, n, accuracy, family, shape) cell in that nesting
/// order. Cell i draws from its own generator seeded with seed ^ i. HashInvert
/// cells with a non-invertible family are skipped.
inline std::vector<BenchRecord> run_sweep(const SweepConfig& config) {
  using clock = std::chrono::steady_clock;
  std::vector<BenchRecord> records;
  std::uint64_t cell = 0;
  for (const auto& algorithm : config.algorithms) {
    for (auto M : config.namespace_sizes) {
      for (auto n : config.set_sizes) {
        for (auto accuracy : config.accuracies) {
          for (auto kind : config.families) {
            for (const auto& shape : config.shapes) {
              const auto index = cell++;
              if (algorithm == "hi" && kind != HashKind::SimpleLinear) continue;
              std::mt19937_64 rng(config.seed ^ index);
              const auto set = shape == "uniform" ? gen_uniform(M, n, rng)
                                                  : gen_clustered(M, n, rng, config.clustered_percent);
              const auto plan =
                  config.cost_ratio >= 0
                      ? plan_from_accuracy(accuracy, n, M, config.hash_count, config.cost_ratio)
                      : plan_from_accuracy(accuracy, n, M, config.hash_count,
                                           LinearCostModel{config.cost_per_bit});
              auto family = std::make_shared<const HashFamily>(
                  kind == HashKind::SimpleLinear
                      ? HashFamily::random_simple_linear(plan.hash_count, plan.bits, rng)
                      : HashFamily::seeded(kind, plan.hash_count, plan.bits, rng()));
              const auto query = BloomFilter::from_elements(family, M, set);

              BenchRecord record;
              record.algorithm = algorithm;
              record.namespace_size = M;
              record.set_size = n;
              record.accuracy = accuracy;
              record.family = kind;
              record.shape = shape;
              record.trials = config.trials_for(algorithm);

              OpCounters total;
              double elapsed_ns = 0;
              if (algorithm == "bst") {
                const auto tree = BloomSampleTree::build_full(plan, family);
                const auto start = clock::now();
                for (std::uint64_t t = 0; t < record.trials; ++t) {
                  total += tree.sample(query, rng, config.threshold).counters;
                }
                elapsed_ns = std::chrono::duration<double, std::nano>(clock::now() - start).count();
              } else {
                const auto start = clock::now();
                for (std::uint64_t t = 0; t < record.trials; ++t) {
                  total += algorithm == "da" ? da_sample(M, query, rng).counters
                                             : hi_sample(query, M, rng).counters;
                }
                elapsed_ns = std::chrono::duration<double, std::nano>(clock::now() - start).count();
              }
              const double trials = static_cast<double>(std::max<std::uint64_t>(record.trials, 1));
              record.intersections = static_cast<double>(total.intersections) / trials;
              record.membership = static_cast<double>(total.membership_queries) / trials;
              record.nodes = static_cast<double>(total.nodes_visited) / trials;
              record.time_ns = elapsed_ns / trials;
              records.push_back(std::move(record));
            }
          }
        }
      }
    }
  }
  return records;
}

inline constexpr const char* kCsvHeader =
    "algorithm,M,n,accuracy,family,shape,intersections,membership,nodes,time_ns,trials";

inline void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    std::ostringstream line;
    line << r.algorithm << ',' << r.namespace_size << ',' << r.set_size << ',' << r.accuracy << ','
         << to_string(r.family) << ',' << r.shape << ',' << std::fixed << std::setprecision(3)
         << r.intersections << ',' << r.membership << ',' << r.nodes << ',' << std::setprecision(1)
         << r.time_ns << ',' << r.trials;
    out << line.str() << '\n';
  }
}

}  // namespace bloomsample::evalkit
