#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emql/kbstore.hpp"
#include "emql/query.hpp"
#include "emql/queryeval.hpp"
#include "emql/types.hpp"

namespace emql {

// ---- splits ---------------------------------------------------------------

/// Seeded uniform holdout of round(fraction * |kb|) triples. fraction = 0
/// gives training == full. Throws ArgumentError outside [0, 1).
KbSplit make_splits(std::span<const Triple> kb, double holdout_fraction, std::uint64_t seed);

/// Entities that appear in the full KB but in no training triple.
std::vector<EntityId> entities_missing_from_training(const KbSplit& split);

// ---- query templates --------------------------------------------------------

enum class Template : std::uint8_t { k1p, k2p, k3p, k2i, k3i, kIp, kPi, k2u, kUp };

inline constexpr std::array<Template, 9> kAllTemplates = {
    Template::k1p, Template::k2p, Template::k3p, Template::k2i, Template::k3i,
    Template::kIp, Template::kPi, Template::k2u, Template::kUp};

std::string_view template_name(Template t);
/// Accepts "1p", "2p", ..., "up". Throws ArgumentError otherwise.
Template parse_template(std::string_view name);
/// "all" or a comma-separated list of template names.
std::vector<Template> parse_templates(std::string_view list);

struct GeneratedQuery {
  Template tmpl = Template::k1p;
  QueryPtr query;
  EntitySet gold;   // symbolic answer on the full KB
  EntitySet known;  // symbolic answer on the training KB (generalization only)
};

struct QueryGenOptions {
  Regime mode = Regime::kEntailment;
  /// Generalization only: require the training KB to answer nothing, instead
  /// of merely a strict subset of the gold answers.
  bool disjoint = false;
  /// Reject queries with more gold answers than this (0 = no limit).
  std::size_t max_answers = 0;
  /// Reject repeats of an already emitted query.
  bool distinct = true;
  /// Sampling attempts per requested query before giving up.
  std::size_t attempts_per_query = 200;
};

/// Random instantiations of `tmpl`, anchored on paths that exist in the full
/// KB. May return fewer than n on small KBs.
std::vector<GeneratedQuery> generate_queries(const KbSplit& split, std::size_t num_entities,
                                             std::size_t num_relations, Template tmpl,
                                             std::size_t n, std::uint64_t seed,
                                             const QueryGenOptions& options = {});

// ---- metrics ---------------------------------------------------------------

struct QueryMetrics {
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  double rr = 0.0;

  bool operator==(const QueryMetrics&) const = default;
};

/// Hits@{1,3,10} and reciprocal rank of the best-ranked gold entity. `gold`
/// must be sorted and non-empty (ArgumentError otherwise).
QueryMetrics score(std::span<const EntityId> ranked, std::span<const EntityId> gold);

/// Expected Hits@k of a uniformly random ranking of `candidates` entities of
/// which `gold` are correct.
double random_hits_at_k(std::size_t candidates, std::size_t gold, std::size_t k);

struct TemplateReport {
  Template tmpl = Template::k1p;
  std::size_t count = 0;
  QueryMetrics metrics;
  double random_hits3 = 0.0;

  bool operator==(const TemplateReport&) const = default;
};

struct EvalReport {
  std::vector<TemplateReport> templates;
  QueryMetrics average;  // mean of per-template values over templates with queries
  std::vector<std::pair<std::string, std::string>> config;
  double seconds = 0.0;

  const TemplateReport* find(Template t) const;
};

/// Same metrics, counts and config; wall-clock time is ignored.
bool same_results(const EvalReport& a, const EvalReport& b);

struct EvalOptions {
  EvalMode mode;
  /// Drop each query's `known` answers from the ranking and score against the
  /// remaining gold answers.
  bool filter_known = false;
};

EvalReport evaluate_queries(const QueryEngine& engine, std::span<const GeneratedQuery> queries,
                            const EvalOptions& options);

/// Hits and MRR x100 with one decimal: one column per template plus Avg.
std::string format_table(const EvalReport& report, bool include_timing = true);
/// One record per template plus an "avg" record, tab-separated with a header.
std::string format_tsv(const EvalReport& report);

// ---- sketch recovery suite --------------------------------------------------

struct SketchBenchConfig {
  std::size_t set_size = 50;     // m
  std::size_t candidates = 500;  // |C|, a superset of the encoded set
  std::uint32_t width = 128;
  std::uint32_t depth = 16;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::size_t universe = std::size_t{1} << 20;
};

struct SketchBenchResult {
  std::size_t trials = 0;
  std::size_t failures = 0;
  double failure_rate = 0.0;
  double delta = 0.0;  // |C| / 2^depth
  double bound = 0.0;  // delta + 3 binomial standard deviations

  bool operator==(const SketchBenchResult&) const = default;
};

/// Each trial draws a fresh hash family, a candidate set C and a random subset
/// A of size m with small integer weights, and checks that cm_lookup is exact
/// on every element of C.
SketchBenchResult run_sketch_bench(const SketchBenchConfig& config);

}  // namespace emql
