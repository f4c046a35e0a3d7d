#include "emql/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "emql/errors.hpp"
#include "emql/mips.hpp"
#include "emql/numeric.hpp"
#include "emql/setrep.hpp"

namespace emql {
namespace {

std::vector<double> row_sum(const Matrix& m, std::span<const ElementId> ids) {
  std::vector<double> acc(m.cols(), 0.0);
  for (ElementId id : ids) {
    const auto row = m.row(id);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += row[c];
  }
  return acc;
}

double dot_d(std::span<const double> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) acc += a[c] * static_cast<double>(b[c]);
  return acc;
}

void axpy_row(std::vector<double>& dst, std::size_t row, std::size_t dim, double alpha,
              std::span<const double> x) {
  double* out = dst.data() + row * dim;
  for (std::size_t c = 0; c < dim; ++c) out[c] += alpha * x[c];
}

void axpy(std::vector<double>& dst, double alpha, std::span<const float> x) {
  for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += alpha * static_cast<double>(x[c]);
}

const BasicSet& basic_operand(const QueryPtr& q) {
  if (!q) throw TypeError("training query has a missing operand");
  if (const auto* b = std::get_if<BasicSet>(&q->node)) return *b;
  throw TypeError("training queries take basic sets as inputs");
}

// Output layer. Returns the loss; writes dL/da into `grad_centroid` and, when
// `grads` is set, adds scale * dL/de_i = scale * (p_i - t_i) a to every entity row.
double output_layer(std::span<const double> centroid, const WeightedSet& target,
                    const Matrix& entities, std::vector<double>* grads, double scale,
                    std::vector<double>* grad_centroid) {
  if (target.empty()) throw EmptySetError("training target is empty");
  const std::size_t n = entities.rows();
  const std::size_t dim = entities.cols();
  if (centroid.size() != dim) throw ShapeError("centroid dimension does not match embeddings");
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) logits[i] = dot_d(centroid, entities.row(i));
  const double lse = log_sum_exp(logits);
  const double total = target.total_weight();
  double value = lse;
  for (const auto& [id, w] : target) value -= (w / total) * logits[id];
  // Rounding can leave a tiny negative value when the target is one-hot and
  // the prediction saturates.
  value = std::max(value, 0.0);
  if (grad_centroid == nullptr) return value;

  grad_centroid->assign(dim, 0.0);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(logits[i] - lse);
  for (const auto& [id, w] : target) g[id] -= w / total;
  for (std::size_t i = 0; i < n; ++i) {
    if (g[i] == 0.0) continue;
    axpy(*grad_centroid, g[i], entities.row(i));
    if (grads != nullptr) axpy_row(*grads, i, dim, scale * g[i], centroid);
  }
  return value;
}

// Recorded forward pass of (follow (basic X) (rel R)).
struct FollowTape {
  std::vector<EntityId> xs;
  std::vector<RelationId> rs;
  std::vector<double> a_x;
  std::vector<double> a_r;
  std::vector<std::uint32_t> candidates;
  std::vector<double> probs;   // softmax over candidate scores
  std::vector<double> filter;  // CM(r, b_R) * CM(x, b_X)
  std::vector<double> output;  // predicted centroid
};

FollowTape follow_forward(const FollowNode& node, const TripleStore& store,
                          const TrainContext& ctx) {
  FollowTape tape;
  tape.xs = basic_operand(node.input).entities;
  tape.rs = node.relations.relations;
  const Matrix& ents = store.entities();
  const Matrix& rels = store.relations();
  const std::size_t dim = store.dim();
  tape.a_x = row_sum(ents, tape.xs);
  tape.a_r = row_sum(rels, tape.rs);

  std::vector<float> query(3 * dim, 0.0f);
  for (std::size_t c = 0; c < dim; ++c) {
    query[c] = static_cast<float>(ctx.relation_scale * tape.a_r[c]);
    query[dim + c] = static_cast<float>(tape.a_x[c]);
  }
  const TopKResult hits = top_k(query, store.triple_matrix(), ctx.k);
  tape.candidates = hits.ids;

  const CountMinSketch sketch_x =
      sketch_from_set(WeightedSet::uniform(store.num_entities(), tape.xs), ctx.entity_family);
  const CountMinSketch sketch_r =
      sketch_from_set(WeightedSet::uniform(store.num_relations(), tape.rs), ctx.relation_family);

  const auto triples = store.triples();
  std::vector<double> scores(hits.size());
  tape.filter.resize(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const Triple& t = triples[hits.ids[i]];
    scores[i] = ctx.relation_scale * dot_d(tape.a_r, rels.row(t.relation)) +
                dot_d(tape.a_x, ents.row(t.subject));
    tape.filter[i] = sketch_r.lookup(t.relation) * sketch_x.lookup(t.subject);
  }
  tape.probs = softmax(scores);
  tape.output.assign(dim, 0.0);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const double s = tape.filter[i] * tape.probs[i];
    if (s != 0.0) axpy(tape.output, s, ents.row(triples[hits.ids[i]].object));
  }
  return tape;
}

void follow_backward(const FollowTape& tape, const TripleStore& store, const TrainContext& ctx,
                     std::span<const double> grad_out, double scale, Gradients& grads) {
  const Matrix& ents = store.entities();
  const Matrix& rels = store.relations();
  const std::size_t dim = store.dim();
  const auto triples = store.triples();
  const double lambda = ctx.relation_scale;
  const std::size_t m = tape.candidates.size();

  // u_t = dL/ds_t = grad_out . e_{y_t}
  std::vector<double> u(m, 0.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (tape.filter[i] == 0.0) continue;
    const Triple& t = triples[tape.candidates[i]];
    const double s = tape.filter[i] * tape.probs[i];
    u[i] = dot_d(grad_out, ents.row(t.object));
    mean += s * u[i];
    axpy_row(grads.entities, t.object, dim, scale * s, grad_out);
  }

  // eta_t = dL/do_t through the candidate softmax.
  std::vector<double> grad_ar(dim, 0.0);
  std::vector<double> grad_ax(dim, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double eta = tape.probs[i] * (tape.filter[i] * u[i] - mean);
    if (eta == 0.0) continue;
    const Triple& t = triples[tape.candidates[i]];
    axpy(grad_ar, lambda * eta, rels.row(t.relation));
    axpy(grad_ax, eta, ents.row(t.subject));
    axpy_row(grads.relations, t.relation, dim, scale * lambda * eta, tape.a_r);
    axpy_row(grads.entities, t.subject, dim, scale * eta, tape.a_x);
  }
  for (RelationId r : tape.rs) axpy_row(grads.relations, r, dim, scale, grad_ar);
  for (EntityId x : tape.xs) axpy_row(grads.entities, x, dim, scale, grad_ax);
}

// Forward (and optionally backward) for one example. Accumulates scaled
// gradients into `grads` when it is non-null.
double run_example(const TrainingExample& ex, const TripleStore& store, const TrainContext& ctx,
                   Gradients* grads, double scale) {
  const Matrix& ents = store.entities();
  std::vector<double> grad_out;
  std::vector<double>* grad_out_ptr = grads ? &grad_out : nullptr;
  std::vector<double>* grad_ents = grads ? &grads->entities : nullptr;

  if (const auto* f = std::get_if<FollowNode>(&ex.query->node)) {
    const FollowTape tape = follow_forward(*f, store, ctx);
    const double value = output_layer(tape.output, ex.target, ents, grad_ents, scale, grad_out_ptr);
    if (grads) follow_backward(tape, store, ctx, grad_out, scale, *grads);
    return value;
  }
  if (const auto* n = std::get_if<IntersectNode>(&ex.query->node)) {
    if (n->operands.size() != 2) throw TypeError("intersection examples have two operands");
    const auto& x1 = basic_operand(n->operands[0]).entities;
    const auto& x2 = basic_operand(n->operands[1]).entities;
    std::vector<double> centroid = row_sum(ents, x1);
    const std::vector<double> a2 = row_sum(ents, x2);
    for (std::size_t c = 0; c < centroid.size(); ++c) centroid[c] = 0.5 * (centroid[c] + a2[c]);
    const double value = output_layer(centroid, ex.target, ents, grad_ents, scale, grad_out_ptr);
    if (grads) {
      for (EntityId x : x1) axpy_row(grads->entities, x, store.dim(), 0.5 * scale, grad_out);
      for (EntityId x : x2) axpy_row(grads->entities, x, store.dim(), 0.5 * scale, grad_out);
    }
    return value;
  }
  throw TypeError("unsupported training query shape");
}

}  // namespace

std::vector<BasicSetInfo> generate_basic_sets(std::span<const Triple> triples,
                                              std::size_t max_size) {
  std::map<std::pair<RelationId, EntityId>, std::set<EntityId>> groups;
  for (const auto& t : triples) groups[{t.relation, t.object}].insert(t.subject);
  std::vector<BasicSetInfo> out;
  for (const auto& [key, members] : groups) {
    if (members.empty() || members.size() > max_size) continue;
    out.push_back({key.first, key.second, std::vector<EntityId>(members.begin(), members.end())});
  }
  return out;
}

std::vector<TrainingExample> make_training_examples(std::span<const Triple> triples,
                                                    std::size_t num_entities,
                                                    const ExampleOptions& options,
                                                    std::uint64_t seed) {
  std::size_t num_relations = 0;
  for (const auto& t : triples) num_relations = std::max<std::size_t>(num_relations, t.relation + 1);
  const SymbolicKb kb(triples, num_entities, num_relations);
  const auto sets = generate_basic_sets(triples, options.max_set_size);
  std::mt19937_64 rng(seed);

  // Relations leaving each entity, for enumerating non-empty follows.
  std::vector<std::set<RelationId>> out_relations(num_entities);
  for (const auto& t : triples) out_relations[t.subject].insert(t.relation);

  std::vector<TrainingExample> follows;
  for (const auto& bs : sets) {
    std::set<RelationId> rels;
    for (EntityId x : bs.members) rels.insert(out_relations[x].begin(), out_relations[x].end());
    for (RelationId r : rels) {
      const RelationId rr[] = {r};
      const EntitySet answer = kb.follow(bs.members, rr);
      if (answer.empty() || answer.size() > options.max_set_size) continue;
      follows.push_back({TrainTask::kFollow, make_follow(make_basic(bs.members), {r}),
                         WeightedSet::uniform(num_entities, answer)});
    }
  }

  // Non-disjoint pairs share at least one member.
  std::vector<std::vector<std::uint32_t>> containing(num_entities);
  for (std::uint32_t i = 0; i < sets.size(); ++i) {
    for (EntityId x : sets[i].members) containing[x].push_back(i);
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& ids : containing) {
    for (std::size_t a = 0; a < ids.size(); ++a) {
      for (std::size_t b = a + 1; b < ids.size(); ++b) pairs.insert({ids[a], ids[b]});
    }
  }
  std::vector<TrainingExample> intersections;
  for (const auto& [a, b] : pairs) {
    EntitySet common;
    std::set_intersection(sets[a].members.begin(), sets[a].members.end(),
                          sets[b].members.begin(), sets[b].members.end(),
                          std::back_inserter(common));
    intersections.push_back(
        {TrainTask::kIntersect,
         make_intersect({make_basic(sets[a].members), make_basic(sets[b].members)}),
         WeightedSet::uniform(num_entities, common)});
  }

  auto subsample = [&rng](std::vector<TrainingExample>& pool, std::size_t cap) {
    std::shuffle(pool.begin(), pool.end(), rng);
    if (pool.size() > cap) pool.resize(cap);
  };
  subsample(follows, options.max_follow_examples);
  subsample(intersections, options.max_intersect_examples);

  std::vector<TrainingExample> out = std::move(follows);
  out.insert(out.end(), std::make_move_iterator(intersections.begin()),
             std::make_move_iterator(intersections.end()));
  return out;
}

TrainContext make_train_context(const TripleStore& store, const SketchConfig& sketch,
                                std::size_t k, double relation_scale) {
  return TrainContext{make_entity_family(sketch, store.num_entities()),
                      make_relation_family(sketch, store.num_relations()), k, relation_scale};
}

double loss(std::span<const double> centroid, const WeightedSet& target, const Matrix& entities) {
  return output_layer(centroid, target, entities, nullptr, 0.0, nullptr);
}

double example_loss(const TrainingExample& example, const TripleStore& store,
                    const TrainContext& ctx) {
  return run_example(example, store, ctx, nullptr, 0.0);
}

Gradients loss_gradients(const TrainingExample& example, const TripleStore& store,
                         const TrainContext& ctx) {
  Gradients g;
  g.entities.assign(store.num_entities() * store.dim(), 0.0);
  g.relations.assign(store.num_relations() * store.dim(), 0.0);
  g.loss = run_example(example, store, ctx, &g, 1.0);
  return g;
}

std::vector<TrainLogRecord> train(const TrainConfig& config, TripleStore& store,
                                  std::span<const TrainingExample> examples,
                                  const TrainCallback& on_record) {
  if (!store.initialized()) store.initialize_embeddings(config.seed);
  if (store.dim() != config.dim) throw ShapeError("store dimension differs from config.dim");
  if (config.batch_size == 0) throw ArgumentError("batch size must be positive");
  store.build_triple_matrix();

  std::vector<std::size_t> pools[2];
  for (std::size_t i = 0; i < examples.size(); ++i) {
    pools[examples[i].task == TrainTask::kFollow ? 0 : 1].push_back(i);
  }
  std::mt19937_64 rng(config.seed ^ 0x747261696eULL);
  std::size_t cursor[2] = {0, 0};
  for (auto& p : pools) std::shuffle(p.begin(), p.end(), rng);

  const TrainContext ctx =
      make_train_context(store, config.sketch, config.k, config.relation_scale);
  const std::size_t dim = store.dim();
  Gradients grads;
  std::vector<double> vel_e(store.num_entities() * dim, 0.0);
  std::vector<double> vel_r(store.num_relations() * dim, 0.0);
  std::vector<TrainLogRecord> log;

  const bool both = !pools[0].empty() && !pools[1].empty();
  for (std::size_t step = 0; step < config.steps && !(pools[0].empty() && pools[1].empty());
       ++step) {
    std::size_t take[2];
    if (both) {
      take[0] = (config.batch_size + 1) / 2;
      take[1] = config.batch_size / 2;
    } else {
      take[0] = pools[0].empty() ? 0 : config.batch_size;
      take[1] = pools[1].empty() ? 0 : config.batch_size;
    }
    const double scale = 1.0 / static_cast<double>(take[0] + take[1]);
    grads.entities.assign(store.num_entities() * dim, 0.0);
    grads.relations.assign(store.num_relations() * dim, 0.0);

    for (int task = 0; task < 2; ++task) {
      if (take[task] == 0) continue;
      double task_loss = 0.0;
      for (std::size_t j = 0; j < take[task]; ++j) {
        auto& pool = pools[task];
        if (cursor[task] == pool.size()) {
          std::shuffle(pool.begin(), pool.end(), rng);
          cursor[task] = 0;
        }
        task_loss += run_example(examples[pool[cursor[task]++]], store, ctx, &grads, scale);
      }
      task_loss /= static_cast<double>(take[task]);
      const TrainLogRecord rec{step, task == 0 ? TrainTask::kFollow : TrainTask::kIntersect,
                               task_loss};
      if (!std::isfinite(task_loss)) {
        std::ostringstream msg;
        msg << "training diverged at step " << step << " (" << task_name(rec.task)
            << " loss = " << task_loss << ", learning rate " << config.learning_rate << ")";
        throw DivergenceError(msg.str());
      }
      log.push_back(rec);
      if (on_record) on_record(rec);
    }

    auto apply = [&](Matrix& params, std::vector<double>& vel, const std::vector<double>& g) {
      auto data = params.data();
      for (std::size_t i = 0; i < data.size(); ++i) {
        vel[i] = config.momentum * vel[i] + g[i];
        data[i] = static_cast<float>(data[i] - config.learning_rate * vel[i]);
      }
    };
    apply(store.mutable_entities(), vel_e, grads.entities);
    apply(store.mutable_relations(), vel_r, grads.relations);
    store.build_triple_matrix();
  }
  return log;
}

double basic_set_recall(const TripleStore& store, std::span<const BasicSetInfo> sets,
                        const SketchConfig& sketch, std::size_t factor) {
  if (sets.empty()) return 0.0;
  const HashFamilyPtr family = make_entity_family(sketch, store.num_entities());
  double total = 0.0;
  for (const auto& bs : sets) {
    const SetRep rep =
        encode(WeightedSet::uniform(store.num_entities(), bs.members), store.entities(), family);
    const WeightedSet decoded = decode(rep, store.entities(), factor * bs.members.size());
    std::size_t hit = 0;
    for (EntityId x : bs.members) hit += decoded.contains(x) ? 1 : 0;
    total += static_cast<double>(hit) / static_cast<double>(bs.members.size());
  }
  return total / static_cast<double>(sets.size());
}

}  // namespace emql
