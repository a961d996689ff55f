// bloomsample: plan, build, query and benchmark BloomSampleTrees from the shell.

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bloomsample/bloomsample.hpp"
#include "bloomsample/evalkit.hpp"

namespace {

using namespace bloomsample;

constexpr std::uint64_t kDefaultSeed = 20160626;

struct PlanArgs {
  double accuracy = 0.9;
  std::uint64_t n = 1000;
  std::uint64_t M = 1000000;
  unsigned k = 3;
  std::optional<double> cost_ratio;
  double cost_per_bit = evalkit::kReferenceCostPerBit;
  bool calibrate = false;
  std::optional<std::uint64_t> force_m;
};

struct QueryArgs {
  std::string tree_path;
  std::string query_path;
  std::string set;
  std::string set_file;
  double threshold = kDefaultThreshold;
  std::uint64_t seed = kDefaultSeed;
};

void add_plan_options(CLI::App* cmd, PlanArgs& args) {
  cmd->add_option("--accuracy", args.accuracy, "target probability that a sample is a true member");
  cmd->add_option("-n,--n-ref", args.n, "expected query set size");
  cmd->add_option("-M,--namespace", args.M, "namespace size");
  cmd->add_option("-k,--hashes", args.k, "hash functions per filter");
  auto* ratio = cmd->add_option("--cost-ratio", args.cost_ratio, "fixed intersection/membership cost ratio");
  auto* slope = cmd->add_option("--cost-per-bit", args.cost_per_bit, "cost ratio per filter bit");
  auto* calibrate = cmd->add_flag("--calibrate", args.calibrate, "measure the cost ratio on this machine");
  ratio->excludes(slope)->excludes(calibrate);
  slope->excludes(calibrate);
  cmd->add_option("--force-m", args.force_m, "use this filter size instead of deriving it from --accuracy");
}

void add_query_options(CLI::App* cmd, QueryArgs& args) {
  cmd->add_option("--tree", args.tree_path, "tree file (BSTR)")->required();
  auto* q = cmd->add_option("--query", args.query_path, "query filter file (BFLT)");
  auto* s = cmd->add_option("--set", args.set, "inline query set, e.g. 4,6");
  auto* f = cmd->add_option("--set-file", args.set_file, "query set, one element per line");
  q->excludes(s)->excludes(f);
  s->excludes(f);
  cmd->add_option("--threshold", args.threshold, "estimated intersections below this are empty");
  cmd->add_option("--seed", args.seed, "random seed");
}

TreePlan make_plan(const PlanArgs& args) {
  std::function<double(std::uint64_t)> cost = LinearCostModel{args.cost_per_bit};
  if (args.cost_ratio) {
    const double r = *args.cost_ratio;
    cost = [r](std::uint64_t) { return r; };
  } else if (args.calibrate) {
    cost = [k = args.k](std::uint64_t m) { return evalkit::calibrate_cost_ratio(m, k, 15); };
  }
  if (args.force_m) {
    auto plan = plan_for_bits(*args.force_m, args.M, args.k, cost(*args.force_m));
    plan.reference_set_size = args.n;
    return plan;
  }
  if (args.accuracy >= 1.0) {
    throw std::invalid_argument("accuracy 1.0 needs an unbounded filter; pass --force-m <bits> instead");
  }
  return plan_from_accuracy(args.accuracy, args.n, args.M, args.k, cost);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::uint64_t parse_element(const std::string& token, const std::string& where) {
  if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument(where + ": '" + token + "' is not a decimal element");
  }
  try {
    return std::stoull(token);
  } catch (const std::out_of_range&) {
    throw std::invalid_argument(where + ": '" + token + "' is out of range");
  }
}

std::vector<Element> parse_inline_set(const std::string& text) {
  std::vector<Element> out;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    const auto first = token.find_first_not_of(' ');
    const auto last = token.find_last_not_of(' ');
    token = first == std::string::npos ? "" : token.substr(first, last - first + 1);
    out.push_back(parse_element(token, "--set"));
  }
  return out;
}

// One decimal integer per line; blank lines and '#' comments are ignored.
std::vector<Element> read_element_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<Element> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    out.push_back(parse_element(line.substr(first, last - first + 1), path + ":" + std::to_string(line_no)));
  }
  return out;
}

BloomSampleTree load_tree(const std::string& path) { return BloomSampleTree::deserialize(read_file(path)); }

BloomFilter load_query(const BloomSampleTree& tree, const QueryArgs& args) {
  if (!args.query_path.empty()) {
    const auto bytes = read_file(args.query_path);
    detail::ByteReader in(bytes);
    auto filter = BloomFilter::deserialize(in, tree.shared_family());
    if (!in.at_end()) throw FormatError("trailing bytes after filter");
    if (!(filter.family() == tree.family())) {
      throw IncompatibleFilters("query filter does not share the tree's m and hash family");
    }
    return filter;
  }
  if (!args.set.empty()) return tree.make_filter(parse_inline_set(args.set));
  if (!args.set_file.empty()) return tree.make_filter(read_element_file(args.set_file));
  throw std::invalid_argument("give the query as --query, --set or --set-file");
}

void print_counters(std::ostream& out, const OpCounters& c) {
  out << "# intersections " << c.intersections << '\n'
      << "# membership_queries " << c.membership_queries << '\n'
      << "# nodes_visited " << c.nodes_visited << '\n'
      << "# leaves_scanned " << c.leaves_scanned << '\n';
}

void print_plan(std::ostream& out, const TreePlan& plan) {
  const double n = static_cast<double>(plan.reference_set_size);
  const double fp = n > 0 ? fp_probability(static_cast<double>(plan.bits), plan.hash_count, n) : 0.0;
  const auto memory = plan.memory_bits(plan.covering_node_count());
  out << "M " << plan.namespace_size << '\n'
      << "m " << plan.bits << '\n'
      << "k " << plan.hash_count << '\n'
      << "depth " << plan.depth << '\n'
      << "leaf_size " << plan.leaf_size << '\n'
      << "nominal_leaf_size " << plan.nominal_leaf_size() << '\n'
      << "cost_ratio " << plan.cost_ratio << '\n'
      << "nodes " << plan.covering_node_count() << '\n'
      << "predicted_fp " << fp << '\n';
  if (n > 0 && n < static_cast<double>(plan.namespace_size)) {
    out << "predicted_accuracy "
        << predicted_accuracy(static_cast<double>(plan.bits), plan.hash_count, n,
                              static_cast<double>(plan.namespace_size))
        << '\n';
  }
  out << "memory_bits " << memory << '\n'
      << "memory_mb " << static_cast<double>(memory) / 8.0 / 1e6 << '\n';
}

std::shared_ptr<const HashFamily> make_family(const std::string& kind_name, const TreePlan& plan,
                                              std::uint64_t seed) {
  const auto kind = parse_hash_kind(kind_name);
  std::mt19937_64 rng(seed);
  if (kind == HashKind::SimpleLinear) {
    return std::make_shared<const HashFamily>(HashFamily::random_simple_linear(plan.hash_count, plan.bits, rng));
  }
  return std::make_shared<const HashFamily>(HashFamily::seeded(kind, plan.hash_count, plan.bits, rng()));
}

int run(int argc, char** argv) {
  CLI::App app{"Sampling and reconstruction from Bloom filters with BloomSampleTrees"};
  app.require_subcommand(1);

  PlanArgs plan_args;
  auto* plan_cmd = app.add_subcommand("plan", "derive filter size and tree shape");
  add_plan_options(plan_cmd, plan_args);

  PlanArgs build_plan;
  std::string family_kind = "simple";
  std::uint64_t build_seed = kDefaultSeed;
  std::string occupied_path;
  std::string build_out;
  auto* build_cmd = app.add_subcommand("build", "build a tree and write it to a file");
  add_plan_options(build_cmd, build_plan);
  build_cmd->add_option("--family", family_kind, "hash family: simple, murmur3 or md5");
  build_cmd->add_option("--seed", build_seed, "seed for the hash family");
  build_cmd->add_option("--occupied", occupied_path, "build a pruned tree over these elements");
  build_cmd->add_option("-o,--out", build_out, "output tree file")->required();

  std::string filter_tree;
  std::string filter_set;
  std::string filter_set_file;
  std::string filter_out;
  auto* filter_cmd = app.add_subcommand("make-filter", "write a query filter compatible with a tree");
  filter_cmd->add_option("--tree", filter_tree, "tree file")->required();
  auto* fs = filter_cmd->add_option("--set", filter_set, "inline set, e.g. 4,6");
  auto* ff = filter_cmd->add_option("--set-file", filter_set_file, "one element per line");
  fs->excludes(ff);
  filter_cmd->add_option("-o,--out", filter_out, "output filter file")->required();

  QueryArgs sample_args;
  std::size_t draws = 1;
  bool without_replacement = false;
  auto* sample_cmd = app.add_subcommand("sample", "draw elements from the set stored in a filter");
  add_query_options(sample_cmd, sample_args);
  sample_cmd->add_option("-r,--draws", draws, "number of samples")->check(CLI::PositiveNumber);
  sample_cmd->add_flag("--without-replacement", without_replacement, "distinct samples (default: with replacement)");

  QueryArgs rec_args;
  std::string algo = "bst";
  std::string mode = "auto";
  auto* rec_cmd = app.add_subcommand("reconstruct", "list every positive of a filter");
  add_query_options(rec_cmd, rec_args);
  rec_cmd->add_option("--algo", algo, "bst, da or hi")->check(CLI::IsMember({"bst", "da", "hi"}));
  rec_cmd->add_option("--mode", mode, "hi inversion: set, unset or auto")->check(CLI::IsMember({"set", "unset", "auto"}));

  QueryArgs chi_args;
  std::uint64_t rounds = 0;
  bool auto_rounds = false;
  auto* chi_cmd = app.add_subcommand("chi2", "chi-squared uniformity of repeated samples");
  add_query_options(chi_cmd, chi_args);
  auto* t_opt = chi_cmd->add_option("-T,--rounds", rounds, "number of samples")->check(CLI::PositiveNumber);
  auto* a_opt = chi_cmd->add_flag("--auto-130n", auto_rounds, "use 130 draws per set element (inserted count, else positives)");
  t_opt->excludes(a_opt);

  std::string config_path;
  std::string csv_out;
  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark sweep");
  bench_cmd->add_option("--config", config_path, "sweep config file")->required();
  bench_cmd->add_option("-o,--out", csv_out, "CSV output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  auto& out = std::cout;
  if (*plan_cmd) {
    print_plan(out, make_plan(plan_args));
  } else if (*build_cmd) {
    const auto plan = make_plan(build_plan);
    const auto family = make_family(family_kind, plan, build_seed);
    const auto tree = occupied_path.empty()
                          ? BloomSampleTree::build_full(plan, family)
                          : BloomSampleTree::build_pruned(plan, family, read_element_file(occupied_path));
    const auto bytes = tree.serialize();
    write_file(build_out, bytes);
    out << "nodes " << tree.node_count() << '\n'
        << "bytes " << bytes.size() << '\n'
        << "depth " << plan.depth << '\n'
        << "m " << plan.bits << '\n';
  } else if (*filter_cmd) {
    const auto tree = load_tree(filter_tree);
    std::vector<Element> elements;
    if (!filter_set.empty()) elements = parse_inline_set(filter_set);
    else if (!filter_set_file.empty()) elements = read_element_file(filter_set_file);
    const auto filter = tree.make_filter(elements);
    write_file(filter_out, filter.serialize());
    out << "set_bits " << filter.popcount() << '\n';
  } else if (*sample_cmd) {
    const auto tree = load_tree(sample_args.tree_path);
    const auto query = load_query(tree, sample_args);
    std::mt19937_64 rng(sample_args.seed);
    if (draws == 1 && !without_replacement) {
      const auto result = tree.sample(query, rng, sample_args.threshold);
      if (result.element) out << *result.element << '\n';
      else out << "NULL\n";
      print_counters(out, result.counters);
    } else {
      const auto result = tree.sample_many(query, draws, !without_replacement, rng, sample_args.threshold);
      for (auto x : result.elements) out << x << '\n';
      if (result.elements.size() < draws) out << "# short " << draws - result.elements.size() << '\n';
      print_counters(out, result.counters);
    }
  } else if (*rec_cmd) {
    const auto tree = load_tree(rec_args.tree_path);
    const auto query = load_query(tree, rec_args);
    std::vector<Element> elements;
    OpCounters counters;
    if (algo == "bst") {
      auto result = tree.reconstruct(query, rec_args.threshold);
      elements = std::move(result.elements);
      counters = result.counters;
    } else if (algo == "da") {
      auto result = da_reconstruct(tree.plan().namespace_size, query);
      elements = std::move(result.elements);
      counters = result.counters;
    } else {
      auto result = hi_reconstruct(query, tree.plan().namespace_size, parse_reconstruction_mode(mode));
      elements = std::move(result.elements);
      counters = result.counters;
    }
    for (auto x : elements) out << x << '\n';
    out << "# count " << elements.size() << '\n';
    print_counters(out, counters);
  } else if (*chi_cmd) {
    const auto tree = load_tree(chi_args.tree_path);
    const auto query = load_query(tree, chi_args);
    const auto positives = da_reconstruct(tree.plan().namespace_size, query).elements;
    if (positives.size() < 2) throw std::invalid_argument("chi-squared needs at least two positives");
    if (!auto_rounds && rounds == 0) throw std::invalid_argument("give -T <rounds> or --auto-130n");
    if (auto_rounds) {
      const auto n = query.inserted_count().value_or(positives.size());
      rounds = 130 * n;
    }
    std::vector<std::uint64_t> counts(positives.size(), 0);
    std::mt19937_64 rng(chi_args.seed);
    std::uint64_t nulls = 0;
    OpCounters counters;
    for (std::uint64_t t = 0; t < rounds; ++t) {
      const auto result = tree.sample(query, rng, chi_args.threshold);
      counters += result.counters;
      if (!result.element) {
        ++nulls;
        continue;
      }
      const auto it = std::lower_bound(positives.begin(), positives.end(), *result.element);
      ++counts[static_cast<std::size_t>(it - positives.begin())];
    }
    if (nulls == rounds) throw std::runtime_error("every sample came back NULL");
    const auto report = evalkit::chi_squared_uniformity(counts);
    out << "rounds " << rounds << '\n'
        << "positives " << positives.size() << '\n'
        << "nulls " << nulls << '\n'
        << "q " << report.q_statistic << '\n'
        << "df " << report.degrees_of_freedom << '\n'
        << "p " << report.p_value << '\n'
        << "uniform " << (report.rejected() ? "rejected" : "not_rejected") << " at " << report.reject_at << '\n';
    print_counters(out, counters);
  } else if (*bench_cmd) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open '" + config_path + "'");
    const auto records = evalkit::run_sweep(evalkit::parse_sweep_config(in));
    if (csv_out.empty()) {
      evalkit::write_csv(out, records);
    } else {
      std::ofstream csv(csv_out);
      if (!csv) throw std::runtime_error("cannot write '" + csv_out + "'");
      evalkit::write_csv(csv, records);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
