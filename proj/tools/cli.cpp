#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "emql/bench.hpp"
#include "emql/errors.hpp"
#include "emql/kbstore.hpp"
#include "emql/query.hpp"
#include "emql/queryeval.hpp"
#include "emql/synthetic.hpp"
#include "emql/trainer.hpp"

namespace emql::cli {
namespace {

using json = nlohmann::json;

struct KbOptions {
  std::string path;
  bool synthetic = false;
  SyntheticKbConfig syn;
  std::size_t max_fanout = 0;
  bool add_inverses = false;
  std::string train_path;
  double holdout = 0.0;
};

struct ModelOptions {
  std::string checkpoint;
  bool localist = false;
  std::size_t dim = 64;
};

struct QueryModeOptions {
  std::string mode = "entailment";
  bool no_sketch = false;
  std::size_t k = 1000;
  double relation_scale = 1.0;
};

const std::map<std::string, Regime> kRegimes = {{"entailment", Regime::kEntailment},
                                                {"generalization", Regime::kGeneralization}};

void add_kb_options(CLI::App* cmd, KbOptions& o, bool with_split) {
  auto* kb = cmd->add_option("--kb", o.path, "Triple file, one subject<TAB>relation<TAB>object per line");
  auto* syn = cmd->add_flag("--synthetic", o.synthetic, "Use the seeded synthetic KB generator");
  kb->excludes(syn);
  cmd->add_option("--entities", o.syn.num_entities, "Synthetic KB: number of entities")
      ->capture_default_str();
  cmd->add_option("--relations", o.syn.num_relations, "Synthetic KB: number of relations")
      ->capture_default_str();
  cmd->add_option("--community-size", o.syn.community_size, "Synthetic KB: community size")
      ->capture_default_str();
  cmd->add_option("--max-fanout", o.max_fanout,
                  "Drop (subject, relation) groups with more objects than this (0 keeps all)");
  cmd->add_flag("--add-inverses", o.add_inverses, "Add an inverse relation for every relation");
  if (with_split) {
    auto* train = cmd->add_option("--train", o.train_path,
                                  "Training triples; every name must occur in the KB");
    auto* holdout = cmd->add_option("--holdout", o.holdout,
                                    "Fraction of KB triples held out from training")
                        ->check(CLI::Range(0.0, 0.999999));
    train->excludes(holdout);
  }
}

void add_model_options(CLI::App* cmd, ModelOptions& o) {
  auto* ck = cmd->add_option("--checkpoint", o.checkpoint, "Embedding checkpoint from `train`");
  auto* loc = cmd->add_flag("--localist", o.localist, "One-hot embeddings (d = max(N, N_R))");
  ck->excludes(loc);
  cmd->add_option("--dim", o.dim, "Dimension of random embeddings when no checkpoint is given")
      ->capture_default_str();
}

void add_query_mode_options(CLI::App* cmd, QueryModeOptions& o) {
  cmd->add_option("--mode", o.mode, "entailment or generalization")
      ->check(CLI::IsMember({"entailment", "generalization"}))
      ->capture_default_str();
  cmd->add_flag("--no-sketch", o.no_sketch, "Replace every sketch with the vacuous sketch");
  cmd->add_option("--k", o.k, "Retrieval size for decoding and relation following")
      ->capture_default_str();
  cmd->add_option("--relation-scale", o.relation_scale, "Weight of the relation part of triple queries")
      ->capture_default_str();
}

LoadOptions load_options(const KbOptions& o) {
  LoadOptions lo;
  if (o.max_fanout > 0) lo.max_fanout = o.max_fanout;
  lo.add_inverses = o.add_inverses;
  return lo;
}

KnowledgeBase load_source(KbOptions o, std::uint64_t seed) {
  if (o.synthetic) {
    o.syn.seed = seed;
    KnowledgeBase kb = make_synthetic_kb(o.syn);
    if (o.add_inverses) add_inverse_relations(kb);
    return kb;
  }
  if (o.path.empty()) throw ArgumentError("one of --kb or --synthetic is required");
  return load_kb(o.path, load_options(o));
}

KbSplit load_split(const KnowledgeBase& kb, const KbOptions& o, std::uint64_t seed,
                   std::ostream& err) {
  KbSplit split;
  if (!o.train_path.empty()) {
    LoadOptions lo = load_options(o);
    lo.max_fanout.reset();
    const KnowledgeBase sub = load_kb(o.train_path, lo);
    split.full = kb.triples;
    for (const auto& t : sub.triples) {
      split.training.push_back({kb.vocab.relation_id(sub.vocab.relation_name(t.relation)),
                                kb.vocab.entity_id(sub.vocab.entity_name(t.subject)),
                                kb.vocab.entity_id(sub.vocab.entity_name(t.object))});
    }
    std::sort(split.training.begin(), split.training.end());
  } else {
    split = make_splits(kb.triples, o.holdout, seed);
  }
  const auto missing = entities_missing_from_training(split);
  if (!missing.empty()) {
    err << "warning: " << missing.size() << " entities have no training triples\n";
  }
  return split;
}

TripleStore make_store(const KnowledgeBase& kb, std::vector<Triple> triples,
                       const ModelOptions& m, std::uint64_t seed) {
  if (m.localist) {
    KnowledgeBase view{kb.vocab, std::move(triples)};
    return make_localist_store(view);
  }
  if (!m.checkpoint.empty()) {
    Checkpoint ck = load_checkpoint(m.checkpoint);
    if (ck.entities.rows() != kb.num_entities() || ck.relations.rows() != kb.num_relations()) {
      throw ShapeError("checkpoint does not match the KB vocabulary size");
    }
    TripleStore store(kb.num_entities(), kb.num_relations(), std::move(triples),
                      ck.entities.cols());
    store.set_embeddings(std::move(ck.entities), std::move(ck.relations), ck.seed);
    store.build_triple_matrix();
    return store;
  }
  TripleStore store(kb.num_entities(), kb.num_relations(), std::move(triples), m.dim);
  store.initialize_embeddings(seed);
  store.build_triple_matrix();
  return store;
}

EvalMode eval_mode(const QueryModeOptions& o) {
  EvalMode mode;
  mode.final_sketch = kRegimes.at(o.mode) == Regime::kGeneralization ? FinalSketch::kVacuous
                                                                     : FinalSketch::kExact;
  mode.use_sketches = !o.no_sketch;
  mode.k = o.k;
  mode.relation_scale = o.relation_scale;
  return mode;
}

std::vector<std::string> names(const Vocab& vocab, std::span<const EntityId> ids) {
  std::vector<std::string> out;
  for (EntityId id : ids) out.push_back(vocab.entity_name(id));
  return out;
}

EntitySet ids_of(const Vocab& vocab, const json& arr) {
  EntitySet out;
  for (const auto& n : arr) out.push_back(vocab.entity_id(n.get<std::string>()));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  return f;
}

std::vector<GeneratedQuery> generate_all(const KbSplit& split, const KnowledgeBase& kb,
                                         const std::vector<Template>& templates,
                                         std::size_t per_template, std::uint64_t seed,
                                         const QueryGenOptions& gen, std::ostream& err) {
  std::vector<GeneratedQuery> out;
  for (Template t : templates) {
    auto qs = generate_queries(split, kb.num_entities(), kb.num_relations(), t, per_template,
                               seed, gen);
    if (qs.size() < per_template) {
      err << "warning: template " << template_name(t) << " produced " << qs.size() << " of "
          << per_template << " queries\n";
    }
    out.insert(out.end(), std::make_move_iterator(qs.begin()), std::make_move_iterator(qs.end()));
  }
  return out;
}

std::vector<GeneratedQuery> read_query_set(std::istream& in, const Vocab& vocab) {
  std::vector<GeneratedQuery> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
      out.push_back({parse_template(rec.at("template").get<std::string>()),
                     parse_query(rec.at("query").get<std::string>(), vocab),
                     ids_of(vocab, rec.at("gold")),
                     ids_of(vocab, rec.value("known", json::array()))});
    } catch (const json::exception& e) {
      throw FormatError("query set line " + std::to_string(lineno) + ": " + e.what());
    }
    if (out.back().gold.empty()) {
      throw FormatError("query set line " + std::to_string(lineno) + ": empty gold set");
    }
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query embedding over knowledge bases with centroid-sketch set representations",
               "emql"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a key=value configuration file");

  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();

  // ingest
  KbOptions ingest_kb;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Load a KB, print statistics, optionally rewrite it");
  add_kb_options(ingest, ingest_kb, false);
  ingest->add_option("--out", ingest_out, "Write the normalized KB here");

  // split
  KbOptions split_kb;
  std::string split_train, split_test;
  auto* split = app.add_subcommand("split", "Hold out a seeded fraction of triples");
  add_kb_options(split, split_kb, false);
  split->add_option("--holdout", split_kb.holdout, "Held-out fraction")
      ->required()
      ->check(CLI::Range(0.0, 0.999999));
  split->add_option("--train-out", split_train, "Training triples output")->required();
  split->add_option("--test-out", split_test, "Held-out triples output")->required();

  // train
  KbOptions train_kb;
  TrainConfig tc;
  std::string train_mode = "entailment";
  std::string train_out, train_log;
  std::size_t train_max_examples = 20000;
  auto* train_cmd = app.add_subcommand("train", "Train entity and relation embeddings");
  add_kb_options(train_cmd, train_kb, true);
  train_cmd->add_option("--mode", train_mode, "entailment (full KB) or generalization (training KB)")
      ->check(CLI::IsMember({"entailment", "generalization"}))
      ->capture_default_str();
  train_cmd->add_option("--dim", tc.dim, "Embedding dimension")->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate, "Learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", tc.momentum, "Momentum")->capture_default_str();
  train_cmd->add_option("--batch", tc.batch_size, "Batch size")->capture_default_str();
  train_cmd->add_option("--steps", tc.steps, "Gradient steps")->capture_default_str();
  train_cmd->add_option("--k", tc.k, "Triple retrieval size")->capture_default_str();
  train_cmd->add_option("--relation-scale", tc.relation_scale, "Relation weight in triple queries")
      ->capture_default_str();
  train_cmd->add_option("--max-set-size", tc.max_set_size, "Largest basic set used for training")
      ->capture_default_str();
  train_cmd->add_option("--max-examples", train_max_examples, "Training examples per task")
      ->capture_default_str();
  train_cmd->add_option("--out", train_out, "Checkpoint output")->required();
  train_cmd->add_option("--log", train_log, "Loss log (JSON lines); stdout when omitted");

  // genq
  KbOptions genq_kb;
  std::string genq_mode = "entailment", genq_templates = "all", genq_out, genq_sexpr;
  std::size_t genq_n = 100;
  QueryGenOptions genq_opts;
  auto* genq = app.add_subcommand("genq", "Generate template queries with gold answers");
  add_kb_options(genq, genq_kb, true);
  genq->add_option("--mode", genq_mode, "entailment or generalization")
      ->check(CLI::IsMember({"entailment", "generalization"}))
      ->capture_default_str();
  genq->add_option("--templates", genq_templates, "all or a comma-separated list (1p,2p,...)")
      ->capture_default_str();
  genq->add_option("--per-template", genq_n, "Queries per template")->capture_default_str();
  genq->add_option("--max-answers", genq_opts.max_answers, "Skip queries with more gold answers");
  genq->add_flag("--disjoint", genq_opts.disjoint,
                 "Generalization: require that the training KB answers nothing");
  genq->add_option("--out", genq_out, "Query set output (JSON lines); stdout when omitted");
  genq->add_option("--sexpr", genq_sexpr, "Also write bare s-expressions, one per line");

  // eval
  KbOptions eval_kb;
  ModelOptions eval_model;
  QueryModeOptions eval_qm;
  std::string eval_queries, eval_templates = "all", eval_tsv;
  std::size_t eval_n = 100;
  bool eval_filter = false;
  QueryGenOptions eval_gen;
  auto* eval = app.add_subcommand("eval", "Evaluate template queries and report Hits@k and MRR");
  add_kb_options(eval, eval_kb, true);
  add_model_options(eval, eval_model);
  add_query_mode_options(eval, eval_qm);
  eval->add_option("--queries", eval_queries, "Query set from `genq`; generated when omitted");
  eval->add_option("--templates", eval_templates, "all or a comma-separated list")
      ->capture_default_str();
  eval->add_option("--per-template", eval_n, "Queries per template")->capture_default_str();
  eval->add_option("--max-answers", eval_gen.max_answers, "Skip queries with more gold answers");
  eval->add_flag("--disjoint", eval_gen.disjoint,
                 "Generalization: require that the training KB answers nothing");
  eval->add_flag("--filter-known", eval_filter,
                 "Remove training-KB answers from rankings before scoring");
  eval->add_option("--tsv", eval_tsv, "Write the TSV report here instead of stdout");

  // query
  KbOptions query_kb;
  ModelOptions query_model;
  QueryModeOptions query_qm;
  std::string query_text, query_file, query_out;
  std::size_t query_top = 10;
  auto* query = app.add_subcommand("query", "Answer s-expression queries");
  add_kb_options(query, query_kb, true);
  add_model_options(query, query_model);
  add_query_mode_options(query, query_qm);
  auto* qt = query->add_option("--query", query_text, "A single s-expression");
  auto* qf = query->add_option("--queries", query_file, "File with one s-expression per line");
  qt->excludes(qf);
  query->add_option("--top", query_top, "Answers printed per query")->capture_default_str();
  query->add_option("--out", query_out, "Answer file; stdout when omitted");

  // sketch-bench
  SketchBenchConfig sb;
  auto* sketch = app.add_subcommand("sketch-bench", "Empirical sketch recovery failure rate");
  sketch->add_option("--m", sb.set_size, "Encoded set size")->capture_default_str();
  sketch->add_option("--nw", sb.width, "Sketch width")->capture_default_str();
  sketch->add_option("--nd", sb.depth, "Sketch depth")->capture_default_str();
  sketch->add_option("--candidates", sb.candidates, "Candidate set size")->capture_default_str();
  sketch->add_option("--trials", sb.trials, "Number of trials")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*ingest) {
      const KnowledgeBase kb = load_source(ingest_kb, seed);
      out << "entities\t" << kb.num_entities() << "\nrelations\t" << kb.num_relations()
          << "\ntriples\t" << kb.triples.size() << '\n';
      if (!ingest_out.empty()) save_kb(ingest_out, kb.vocab, kb.triples);
    } else if (*split) {
      const KnowledgeBase kb = load_source(split_kb, seed);
      const KbSplit s = load_split(kb, split_kb, seed, err);
      save_kb(split_train, kb.vocab, s.training);
      save_kb(split_test, kb.vocab, s.held_out());
      out << "training\t" << s.training.size() << "\nheld_out\t" << s.held_out().size() << '\n';
    } else if (*train_cmd) {
      const KnowledgeBase kb = load_source(train_kb, seed);
      tc.seed = seed;
      tc.mode = kRegimes.at(train_mode);
      const bool generalize = tc.mode == Regime::kGeneralization;
      if (generalize && train_kb.train_path.empty() && train_kb.holdout <= 0.0) {
        throw ArgumentError("generalization training needs --train or --holdout");
      }
      const KbSplit s = load_split(kb, train_kb, seed, err);
      const auto& triples = generalize ? s.training : s.full;
      ExampleOptions eo{tc.max_set_size, train_max_examples, train_max_examples};
      const auto examples = make_training_examples(triples, kb.num_entities(), eo, seed);
      TripleStore store(kb.num_entities(), kb.num_relations(), triples, tc.dim);
      store.initialize_embeddings(seed);
      std::ofstream log_file;
      if (!train_log.empty()) log_file = open_out(train_log);
      std::ostream& log = train_log.empty() ? out : log_file;
      train(tc, store, examples, [&](const TrainLogRecord& r) {
        log << json{{"step", r.step}, {"task", task_name(r.task)}, {"loss", r.loss}}.dump()
            << '\n';
      });
      save_checkpoint(train_out, store);
      err << "trained on " << examples.size() << " examples; checkpoint written to " << train_out
          << '\n';
    } else if (*genq) {
      const KnowledgeBase kb = load_source(genq_kb, seed);
      const KbSplit s = load_split(kb, genq_kb, seed, err);
      genq_opts.mode = kRegimes.at(genq_mode);
      const auto qs = generate_all(s, kb, parse_templates(genq_templates), genq_n, seed,
                                   genq_opts, err);
      std::ofstream file;
      if (!genq_out.empty()) file = open_out(genq_out);
      std::ostream& os = genq_out.empty() ? out : file;
      std::ofstream sexpr;
      if (!genq_sexpr.empty()) sexpr = open_out(genq_sexpr);
      for (std::size_t i = 0; i < qs.size(); ++i) {
        const std::string text = print_query(*qs[i].query, kb.vocab);
        os << json{{"id", i + 1},
                   {"template", template_name(qs[i].tmpl)},
                   {"query", text},
                   {"gold", names(kb.vocab, qs[i].gold)},
                   {"known", names(kb.vocab, qs[i].known)}}
                  .dump()
           << '\n';
        if (sexpr.is_open()) sexpr << text << '\n';
      }
    } else if (*eval) {
      const KnowledgeBase kb = load_source(eval_kb, seed);
      const Regime regime = kRegimes.at(eval_qm.mode);
      const bool generalize = regime == Regime::kGeneralization;
      if (generalize && eval_kb.train_path.empty() && eval_kb.holdout <= 0.0) {
        throw ArgumentError("generalization evaluation needs --train or --holdout");
      }
      const KbSplit s = load_split(kb, eval_kb, seed, err);
      std::vector<GeneratedQuery> qs;
      if (!eval_queries.empty()) {
        auto in = open_in(eval_queries);
        qs = read_query_set(in, kb.vocab);
      } else {
        eval_gen.mode = regime;
        qs = generate_all(s, kb, parse_templates(eval_templates), eval_n, seed, eval_gen, err);
      }
      const TripleStore store =
          make_store(kb, generalize ? s.training : s.full, eval_model, seed);
      const QueryEngine engine(store);
      EvalReport report = evaluate_queries(engine, qs, {eval_mode(eval_qm), eval_filter});
      report.config = {{"mode", eval_qm.mode},
                       {"seed", std::to_string(seed)},
                       {"entities", std::to_string(kb.num_entities())},
                       {"triples", std::to_string(store.triples().size())},
                       {"sketches", eval_qm.no_sketch ? "off" : "on"},
                       {"filter_known", eval_filter ? "yes" : "no"},
                       {"k", std::to_string(eval_qm.k)}};
      out << format_table(report);
      if (eval_tsv.empty()) {
        out << '\n' << format_tsv(report);
      } else {
        open_out(eval_tsv) << format_tsv(report);
      }
    } else if (*query) {
      const KnowledgeBase kb = load_source(query_kb, seed);
      const bool generalize = kRegimes.at(query_qm.mode) == Regime::kGeneralization;
      const KbSplit s = load_split(kb, query_kb, seed, err);
      std::vector<std::string> texts;
      if (!query_text.empty()) {
        texts.push_back(query_text);
      } else if (!query_file.empty()) {
        auto in = open_in(query_file);
        for (std::string line; std::getline(in, line);) {
          const auto first = line.find_first_not_of(" \t\r");
          if (first == std::string::npos || line[first] == '#') continue;
          texts.push_back(line);
        }
      } else {
        throw ArgumentError("one of --query or --queries is required");
      }
      const TripleStore store =
          make_store(kb, generalize ? s.training : s.full, query_model, seed);
      const QueryEngine engine(store);
      const EvalMode mode = eval_mode(query_qm);
      std::ofstream file;
      if (!query_out.empty()) file = open_out(query_out);
      std::ostream& os = query_out.empty() ? out : file;
      for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto ranked = engine.evaluate(*parse_query(texts[i], kb.vocab), mode);
        os << 'q' << i + 1;
        for (std::size_t j = 0; j < ranked.size() && j < query_top; ++j) {
          os << '\t' << kb.vocab.entity_name(ranked[j].id);
        }
        os << '\n';
      }
    } else if (*sketch) {
      sb.seed = seed;
      const SketchBenchResult r = run_sketch_bench(sb);
      out << "trials\t" << r.trials << "\nfailures\t" << r.failures << "\nempirical_rate\t"
          << r.failure_rate << "\ndelta\t" << r.delta << "\nbound\t" << r.bound
          << "\nwithin_bound\t" << (r.failure_rate <= r.bound ? "yes" : "no") << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace emql::cli
