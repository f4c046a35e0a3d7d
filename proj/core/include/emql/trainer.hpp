#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "emql/cms.hpp"
#include "emql/kbstore.hpp"
#include "emql/query.hpp"
#include "emql/queryeval.hpp"
#include "emql/types.hpp"

namespace emql {

/// X = {x | r(x, tail)}: every entity sharing one (relation, tail) property.
struct BasicSetInfo {
  RelationId relation = 0;
  EntityId tail = 0;
  std::vector<EntityId> members;  // sorted
};

/// One basic set per (relation, tail) pair with at least one member. Sets with
/// more than `max_size` members are dropped.
std::vector<BasicSetInfo> generate_basic_sets(std::span<const Triple> triples,
                                              std::size_t max_size = 100);

enum class TrainTask : std::uint8_t { kFollow, kIntersect };

constexpr std::string_view task_name(TrainTask t) {
  return t == TrainTask::kFollow ? "follow" : "intersect";
}

/// A training query and its symbolic answer.
///   kFollow:    (follow (basic X) (rel r)) with X a basic set
///   kIntersect: (intersect (basic X1) (basic X2)) with X1, X2 non-disjoint
struct TrainingExample {
  TrainTask task = TrainTask::kFollow;
  QueryPtr query;
  WeightedSet target;
};

struct ExampleOptions {
  std::size_t max_set_size = 100;
  std::size_t max_follow_examples = 20000;
  std::size_t max_intersect_examples = 20000;
};

/// Builds both task pools from `triples` (the training KB in generalization
/// mode, the full KB in entailment mode). Deterministic in `seed`.
std::vector<TrainingExample> make_training_examples(std::span<const Triple> triples,
                                                    std::size_t num_entities,
                                                    const ExampleOptions& options,
                                                    std::uint64_t seed);

struct TrainConfig {
  std::size_t dim = 64;
  double learning_rate = 0.1;
  double momentum = 0.0;
  std::size_t batch_size = 64;
  std::size_t steps = 1000;
  std::uint64_t seed = 1;
  Regime mode = Regime::kEntailment;
  std::size_t k = 1000;
  SketchConfig sketch;
  double relation_scale = 1.0;
  std::size_t max_set_size = 100;
};

/// Hash families and retrieval settings used by the differentiable forward
/// pass; families match those of a QueryEngine built with the same sketch
/// config.
struct TrainContext {
  HashFamilyPtr entity_family;
  HashFamilyPtr relation_family;
  std::size_t k = 1000;
  double relation_scale = 1.0;
};

TrainContext make_train_context(const TripleStore& store, const SketchConfig& sketch,
                                std::size_t k, double relation_scale);

/// cross_entropy(softmax(E a), v / |v|_1), softmax over all N entities.
double loss(std::span<const double> centroid, const WeightedSet& target, const Matrix& entities);

/// Dense gradients of one example's loss w.r.t. E (N x d, row-major) and the
/// relation embeddings (N_R x d).
struct Gradients {
  double loss = 0.0;
  std::vector<double> entities;
  std::vector<double> relations;
};

/// Forward pass only. Requires a current triple matrix.
double example_loss(const TrainingExample& example, const TripleStore& store,
                    const TrainContext& ctx);

/// Forward and backward pass. Top-k candidate selection is treated as a
/// constant; gradients flow through the candidate softmax and every centroid.
Gradients loss_gradients(const TrainingExample& example, const TripleStore& store,
                         const TrainContext& ctx);

struct TrainLogRecord {
  std::size_t step = 0;
  TrainTask task = TrainTask::kFollow;
  double loss = 0.0;
};

using TrainCallback = std::function<void(const TrainLogRecord&)>;

/// Minibatch gradient descent with optional momentum. Each batch draws half
/// its examples from each task (when both pools are non-empty). The store's
/// embeddings are updated in place and the triple matrix is rebuilt after
/// every step. Throws DivergenceError when a batch loss is not finite.
std::vector<TrainLogRecord> train(const TrainConfig& config, TripleStore& store,
                                  std::span<const TrainingExample> examples,
                                  const TrainCallback& on_record = {});

/// Mean recall of decode(encode(X), k = factor * |X|) over the given basic
/// sets, using exact sketches.
double basic_set_recall(const TripleStore& store, std::span<const BasicSetInfo> sets,
                        const SketchConfig& sketch, std::size_t factor = 10);

}  // namespace emql
